//! Local basis `F_ν, F_ζ, F_η`, running couplings, the free observable
//! kernels and the vertex renormalizations read off them.

use nalgebra::{DMatrix, DVector};

use super::*;
use crate::propagators::{field_index, ModelParams};
use crate::skewlinalg::SkewMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningCouplings {
    pub nu: f64,
    pub zeta: f64,
    pub eta: f64,
    pub h: i32,
    /// largest coefficient of the part not spanned by the basis
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexRenorm {
    pub z1: f64,
    pub z2: f64,
    pub h: i32,
}

/// `F_ν = Σ_z φ_{+,z} φ_{-,z}`.
pub fn f_nu(g: &CylinderGeometry) -> Result<Kernel> {
    let mut k = Kernel::new(Domain::Cylinder(*g));
    for z in g.sites() {
        k.add_real(&[FieldLabel::plain(1, z), FieldLabel::plain(-1, z)], &[], 1.0)?;
    }
    Ok(k)
}

/// `F_ζ = Σ_ω Σ_z ω φ_{ω,z} d̄_1 φ_{ω,z}`, `d̄_1 φ_z = (∂_1φ_z + ∂_1φ_{z-e_1})/2`.
pub fn f_zeta(g: &CylinderGeometry) -> Result<Kernel> {
    let mut k = Kernel::new(Domain::Cylinder(*g));
    for z in g.sites() {
        for w in [1i8, -1] {
            let c = 0.5 * w as f64;
            k.add_real(&[FieldLabel::plain(w, z), FieldLabel::new(w, [1, 0], z)], &[], c)?;
            k.add_real(&[FieldLabel::plain(w, z), FieldLabel::new(w, [1, 0], z.shift(-1, 0))], &[], c)?;
        }
    }
    Ok(k)
}

/// `F_η = Σ_ω Σ_z φ_{ω,z} d̂_2 φ_{-ω,z}` with the one-sided differences
/// dropped when they leave `Λ`.
pub fn f_eta(g: &CylinderGeometry) -> Result<Kernel> {
    let mut k = Kernel::new(Domain::Cylinder(*g));
    for z in g.sites() {
        for w in [1i8, -1] {
            if g.in_bulk(z.shift(0, 1)) {
                k.add_real(&[FieldLabel::plain(w, z), FieldLabel::new(-w, [0, 1], z)], &[], 0.5)?;
            }
            if g.in_bulk(z.shift(0, -1)) {
                k.add_real(&[FieldLabel::plain(w, z), FieldLabel::new(-w, [0, 1], z.shift(0, -1))], &[], 0.5)?;
            }
        }
    }
    Ok(k)
}

/// Reads `ℒV = 2^h ν F_ν + ζ F_ζ + η F_η` off a localized sourceless kernel.
pub fn extract_running_couplings(v: &Kernel, h: i32) -> Result<RunningCouplings> {
    let g = v.domain.cylinder()?;
    for (l, e, _) in v.iter() {
        let s = sector_of(l, e);
        if s.m != 0 || s.n != 2 || s.p > 1 {
            return Err(Error::Support(format!("non-localized entry in sector ({},{},{})", s.n, s.p, s.m)));
        }
    }
    let basis = [f_nu(&g)?, f_zeta(&g)?, f_eta(&g)?].map(|b| expand_to_plain_fields(&b));
    let target = expand_to_plain_fields(v);
    let mut keys: Vec<(Vec<PlainField>, Vec<Edge>)> = Vec::new();
    for p in basis.iter().chain(std::iter::once(&target)) {
        for (f, e, _) in p.iter() {
            keys.push((f.to_vec(), e.to_vec()));
        }
    }
    keys.sort();
    keys.dedup();
    let rows = keys.len();
    let a = DMatrix::from_fn(rows, 3, |i, j| basis[j].coefficient(&keys[i].0, &keys[i].1));
    let b = DVector::from_fn(rows, |i, _| target.coefficient(&keys[i].0, &keys[i].1));
    let ah = a.adjoint();
    let x = (&ah * &a)
        .lu()
        .solve(&(&ah * &b))
        .ok_or_else(|| Error::Singular("local basis is degenerate".into()))?;
    let resid = (&a * &x - &b).iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let imag = x.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    Ok(RunningCouplings {
        nu: x[0].re / 2f64.powi(h),
        zeta: x[1].re,
        eta: x[2].re,
        h,
        residual: resid.max(imag),
    })
}

/// `s_+(y) = (-t1)^y` for `y >= 0` and `s_-(y) = (-t1)^{-y}` for `y <= 0`
/// on the infinite line.
pub fn s_infinite(sign: i8, y: i64, t1: f64) -> f64 {
    let y = if sign > 0 { y } else { -y };
    if y < 0 {
        0.0
    } else {
        (-t1).powi(y as i32)
    }
}

/// Free energy-observable kernel `B_{2,0,1}` on the plane for the edge at
/// the origin in direction `j`, in antisymmetrized form: the vertical edge
/// gives `(1 - t2²) φ_{+,0} φ_{-,e_2}`, the horizontal one the `φ`-bilinear
/// part of `(1 - t1²) H_{+,0} H_{-,e_1}`, truncated where `t1^y < tol`.
pub fn free_source_kernel(p: &ModelParams, j: usize, tol: f64) -> Result<Kernel> {
    let x = Edge::new(Site::new(0, 0), dir_of(j));
    let mut k = Kernel::new(Domain::Plane);
    if j == 2 {
        k.add_real(&[FieldLabel::plain(1, Site::new(0, 0)), FieldLabel::plain(-1, Site::new(0, 1))], &[x], 1.0 - p.t2_star * p.t2_star)?;
        return k.antisymmetrized();
    }
    let t1 = p.t1_star;
    let range = ((tol.ln() / t1.ln()).ceil() as i64).max(1) + 1;
    let pre = 1.0 - t1 * t1;
    // H_{+,0} = Σ_a s_+(-a)(φ_{+,a} - φ_{-,a}), H_{-,e1} = Σ_b s_-(1-b)(φ_{+,b} + φ_{-,b})
    for a in -range..=0 {
        let sa = s_infinite(1, -a, t1);
        for b in 1..=range + 1 {
            let sb = s_infinite(-1, 1 - b, t1);
            let c = pre * sa * sb;
            if c == 0.0 {
                continue;
            }
            let za = Site::new(a, 0);
            let zb = Site::new(b, 0);
            for (wa, ca) in [(1i8, 1.0), (-1, -1.0)] {
                for wb in [1i8, -1] {
                    k.add_real(&[FieldLabel::plain(wa, za), FieldLabel::plain(wb, zb)], &[x], c * ca)?;
                }
            }
        }
    }
    k.antisymmetrized()
}

/// `Z_j = 2 Σ_y B((+,-), 0, y; x = e_j/2)` on a plane source kernel.
pub fn extract_vertex_renorm(b: &Kernel, h: i32) -> Result<VertexRenorm> {
    if b.domain != Domain::Plane {
        return Err(Error::Kernel("vertex renormalization needs an infinite-volume kernel".into()));
    }
    let mut z = [0.0f64; 2];
    for (l, e, c) in b.iter() {
        if sector_of(l, e) != Sector::new(2, 0, 1) || l[0].omega != 1 || l[1].omega != -1 {
            continue;
        }
        z[e[0].dir.index() - 1] += 2.0 * c.re;
    }
    Ok(VertexRenorm { z1: z[0], z2: z[1], h })
}

/// `(c/2) Σ_{ij} A_{ij} φ_i φ_j` for a real-space action matrix on `Λ`.
pub fn action_kernel(g: &CylinderGeometry, a: &SkewMatrix, c: f64) -> Result<Kernel> {
    let mut k = Kernel::new(Domain::Cylinder(*g));
    let fields: Vec<(i8, Site)> = g.sites().into_iter().flat_map(|z| [(1i8, z), (-1, z)]).collect();
    for &(w, z) in &fields {
        for &(wp, zp) in &fields {
            let v = a.get(field_index(g, w, z), field_index(g, wp, zp));
            if v != ZERO {
                k.add(&[FieldLabel::plain(w, z), FieldLabel::plain(wp, zp)], &[], v * (0.5 * c))?;
            }
        }
    }
    Ok(k)
}
