//! Localization `L̃`, interpolation `R̃` and the operators `ℒ`, `ℛ` built
//! from them (bulk, edge and source sectors), plus the bulk/edge split of a
//! cylinder kernel against its infinite-volume counterpart.

use super::*;
use crate::lattice::alpha_factor;

/// Lattice path from `a` to `b`: vertical leg first, then horizontal.
pub fn lattice_path(a: Site, b: Site) -> Vec<Site> {
    let mut out = vec![a];
    let mut cur = a;
    while cur.x2 != b.x2 {
        cur = cur.shift(0, (b.x2 - cur.x2).signum());
        out.push(cur);
    }
    while cur.x1 != b.x1 {
        cur = cur.shift((b.x1 - cur.x1).signum(), 0);
        out.push(cur);
    }
    out
}

/// Steps `(σ, j, y)` of the path from `a` to `b`, with `y, y + e_j`
/// consecutive and `σ = +1` when `y` comes first.
pub fn path_steps(a: Site, b: Site) -> Vec<(f64, usize, Site)> {
    let p = lattice_path(a, b);
    p.windows(2)
        .map(|w| {
            let (u, v) = (w[0], w[1]);
            let j = if u.x2 == v.x2 { 1 } else { 2 };
            if v.x1 + v.x2 > u.x1 + u.x2 {
                (1.0, j, u)
            } else {
                (-1.0, j, v)
            }
        })
        .collect()
}

fn check_sector(labels: &[FieldLabel], edges: &[Edge], allowed: &[Sector]) -> Result<()> {
    let s = sector_of(labels, edges);
    if allowed.contains(&s) {
        Ok(())
    } else {
        Err(Error::WrongSector(s.n, s.p))
    }
}

/// Labels lifted next to `r`, with the product of the lifting signs.
fn lifted(domain: &Domain, r: Site, labels: &[FieldLabel]) -> (Vec<FieldLabel>, f64) {
    let mut s = 1.0;
    let ls = labels
        .iter()
        .map(|f| {
            let (z, sg) = domain.lift(r, f.z);
            s *= sg;
            f.at(z)
        })
        .collect();
    (ls, s)
}

/// Adds `c [∂^D φ(labels[k] at its site) - ∂^D φ(labels[k] at from)] ⋯`
/// written as a sum over path steps.
fn interpolate(out: &mut Kernel, labels: &[FieldLabel], edges: &[Edge], k: usize, from: Site, c: C64) -> Result<()> {
    let to = labels[k].z;
    for (sigma, j, y) in path_steps(from, to) {
        let mut ls = labels.to_vec();
        ls[k] = labels[k].with_extra(j).at(y);
        out.add(&ls, edges, c * sigma)?;
    }
    Ok(())
}

/// Site at which `f` sits once localized at `r`: `r` itself, pushed down
/// when a vertical derivative would reach past the last interior row.
fn local_site(domain: &Domain, r: Site, f: &FieldLabel) -> Site {
    match domain {
        Domain::Cylinder(g) if g.in_bulk(r) && r.x2 + f.d[1] as i64 > g.mi() => Site::new(r.x1, g.mi() - f.d[1] as i64),
        _ => r,
    }
}

/// Localization point: the first field without a vertical derivative.
fn reference(l: &[FieldLabel]) -> Site {
    l.iter().find(|f| f.d[1] == 0).unwrap_or(&l[0]).z
}

const LOCAL_SECTORS: [Sector; 3] = [Sector::new(2, 0, 0), Sector::new(2, 1, 0), Sector::new(4, 0, 0)];

/// `L̃`: moves every field onto the reference one (sectors `(2,0)`, `(2,1)`, `(4,0)`).
pub fn tilde_l(v: &Kernel) -> Result<Kernel> {
    let mut out = v.empty_like();
    for (l, e, c) in v.iter() {
        check_sector(l, e, &LOCAL_SECTORS)?;
        let r = reference(l);
        let (_, s) = lifted(&v.domain, r, l);
        let ls: Vec<FieldLabel> = l.iter().map(|f| f.at(local_site(&v.domain, r, f))).collect();
        out.add(&ls, e, c * s)?;
    }
    Ok(out)
}

/// `R̃`: the remainder `V - L̃V` written with one more derivative.
pub fn tilde_r(v: &Kernel) -> Result<Kernel> {
    let mut out = v.empty_like();
    for (l, e, c) in v.iter() {
        check_sector(l, e, &LOCAL_SECTORS)?;
        let r = reference(l);
        let (hat, s) = lifted(&v.domain, r, l);
        for k in 0..hat.len() {
            let mut ls = hat.clone();
            for f in ls.iter_mut().take(k) {
                *f = f.at(local_site(&v.domain, r, f));
            }
            let from = local_site(&v.domain, r, &ls[k]);
            interpolate(&mut out, &ls, e, k, from, c * s)?;
        }
    }
    Ok(out)
}

fn check_sourceless(v: &Kernel) -> Result<()> {
    if v.iter().any(|(_, e, _)| !e.is_empty()) {
        return Err(Error::Support("expected a sourceless kernel".into()));
    }
    Ok(())
}

fn check_interior(v: &Kernel) -> Result<()> {
    if !v.is_interior() {
        return Err(Error::Support("kernel reaches the boundary rows".into()));
    }
    Ok(())
}

fn sym_or_empty(k: Kernel) -> Result<Kernel> {
    if k.is_empty() {
        Ok(k)
    } else {
        k.symmetrized()
    }
}

/// `ℒ_B` on a sourceless kernel supported away from the boundary rows.
pub fn l_b(v: &Kernel) -> Result<Kernel> {
    check_sourceless(v)?;
    check_interior(v)?;
    let v20 = v.sector(Sector::new(2, 0, 0));
    let v21 = v.sector(Sector::new(2, 1, 0));
    let v40 = v.sector(Sector::new(4, 0, 0));
    let a = sym_or_empty(tilde_l(&v20)?)?;
    let b = sym_or_empty(tilde_l(&v21)?.plus(&tilde_l(&tilde_r(&v20)?)?, 1.0)?)?;
    let c = sym_or_empty(tilde_l(&v40)?)?;
    a.plus(&b, 1.0)?.plus(&c, 1.0)
}

/// `ℛ_B` on a sourceless kernel supported away from the boundary rows.
pub fn r_b(v: &Kernel) -> Result<Kernel> {
    check_sourceless(v)?;
    check_interior(v)?;
    let s20 = Sector::new(2, 0, 0);
    let s21 = Sector::new(2, 1, 0);
    let s22 = Sector::new(2, 2, 0);
    let s40 = Sector::new(4, 0, 0);
    let s41 = Sector::new(4, 1, 0);
    let v20 = v.sector(s20);
    let x22 = v
        .sector(s22)
        .plus(&tilde_r(&v.sector(s21))?, 1.0)?
        .plus(&tilde_r(&tilde_r(&v20)?)?, 1.0)?;
    let x41 = v.sector(s41).plus(&tilde_r(&v.sector(s40))?, 1.0)?;
    let rest = v.without_sectors(&[s20, s21, s22, s40, s41]);
    rest.plus(&sym_or_empty(x22)?, 1.0)?.plus(&sym_or_empty(x41)?, 1.0)
}

/// `z_∂`: the boundary site below or above `z`, whichever row is nearer.
pub fn boundary_anchor(g: &CylinderGeometry, z: Site) -> Site {
    if z.x2 <= g.mi() / 2 {
        Site::new(z.x1, 0)
    } else {
        Site::new(z.x1, g.mi() + 1)
    }
}

const EDGE_SECTOR: [Sector; 1] = [Sector::new(2, 0, 0)];

/// `L̃_E`: moves both fields of `V_{2,0}` onto `z_∂(z_1)`.
pub fn tilde_l_edge(v: &Kernel) -> Result<Kernel> {
    let g = v.domain.cylinder()?;
    let mut out = v.empty_like();
    for (l, e, c) in v.iter() {
        check_sector(l, e, &EDGE_SECTOR)?;
        let r = boundary_anchor(&g, l[0].z);
        let (_, s) = lifted(&v.domain, r, l);
        let ls: Vec<FieldLabel> = l.iter().map(|f| f.at(local_site(&v.domain, r, f))).collect();
        out.add(&ls, e, c * s)?;
    }
    Ok(out)
}

/// `R̃_E`: `φ_1φ_2 - φ_∂φ_∂ = φ_1(φ_2 - φ_∂) + (φ_1 - φ_∂)φ_∂`.
pub fn tilde_r_edge(v: &Kernel) -> Result<Kernel> {
    let g = v.domain.cylinder()?;
    let mut out = v.empty_like();
    for (l, e, c) in v.iter() {
        check_sector(l, e, &EDGE_SECTOR)?;
        let r = boundary_anchor(&g, l[0].z);
        let (hat, s) = lifted(&v.domain, r, l);
        interpolate(&mut out, &hat, e, 1, r, c * s)?;
        let second = [hat[0], hat[1].at(r)];
        interpolate(&mut out, &second, e, 0, r, c * s)?;
    }
    Ok(out)
}

pub fn l_e(v: &Kernel) -> Result<Kernel> {
    check_sourceless(v)?;
    sym_or_empty(tilde_l_edge(&v.sector(Sector::new(2, 0, 0)))?)
}

pub fn r_e(v: &Kernel) -> Result<Kernel> {
    check_sourceless(v)?;
    let s20 = Sector::new(2, 0, 0);
    let s21 = Sector::new(2, 1, 0);
    let x21 = v.sector(s21).plus(&tilde_r_edge(&v.sector(s20))?, 1.0)?;
    v.without_sectors(&[s20, s21]).plus(&sym_or_empty(x21)?, 1.0)
}

fn check_source(b: &Kernel) -> Result<()> {
    if b.iter().any(|(_, e, _)| e.is_empty()) {
        return Err(Error::Support("source kernel has a sourceless part".into()));
    }
    Ok(())
}

const SOURCE_SECTOR: [Sector; 1] = [Sector::new(2, 0, 1)];

/// `L̃` for `B_{2,0,1}`: both fields move to the base vertex of the edge.
pub fn tilde_l_source(b: &Kernel) -> Result<Kernel> {
    let mut out = b.empty_like();
    for (l, e, c) in b.iter() {
        check_sector(l, e, &SOURCE_SECTOR)?;
        let r = e[0].base;
        let (_, s) = lifted(&b.domain, r, l);
        let ls: Vec<FieldLabel> = l.iter().map(|f| f.at(r)).collect();
        out.add(&ls, e, c * s)?;
    }
    Ok(out)
}

/// `R̃` for `B_{2,0,1}`: `φ_1φ_2 - φ_xφ_x = φ_x(φ_2 - φ_x) + (φ_1 - φ_x)φ_2`.
pub fn tilde_r_source(b: &Kernel) -> Result<Kernel> {
    let mut out = b.empty_like();
    for (l, e, c) in b.iter() {
        check_sector(l, e, &SOURCE_SECTOR)?;
        let r = e[0].base;
        let (hat, s) = lifted(&b.domain, r, l);
        let first = [hat[0].at(r), hat[1]];
        interpolate(&mut out, &first, e, 1, r, c * s)?;
        interpolate(&mut out, &hat, e, 0, r, c * s)?;
    }
    Ok(out)
}

pub fn l_b_source(b: &Kernel) -> Result<Kernel> {
    check_source(b)?;
    sym_or_empty(tilde_l_source(&b.sector(Sector::new(2, 0, 1)))?)
}

pub fn r_b_source(b: &Kernel) -> Result<Kernel> {
    check_source(b)?;
    let s201 = Sector::new(2, 0, 1);
    let s211 = Sector::new(2, 1, 1);
    let x = b.sector(s211).plus(&tilde_r_source(&b.sector(s201))?, 1.0)?;
    b.without_sectors(&[s201, s211]).plus(&sym_or_empty(x)?, 1.0)
}

#[derive(Clone, Debug)]
pub struct KernelSplit {
    pub bulk: Kernel,
    pub edge: Kernel,
}

/// Bulk part `(-1)^{α(z)} 𝟙(interior, diam_1 <= L/3) W_∞` placed on the
/// cylinder, and the edge remainder `W_Λ - W_B`.
pub fn bulk_edge_kernel_split(w: &Kernel, winf: &Kernel) -> Result<KernelSplit> {
    let g = w.domain.cylinder()?;
    if winf.domain != Domain::Plane {
        return Err(Error::Kernel("infinite-volume kernel must live on the plane".into()));
    }
    let mut bulk = Kernel::new(w.domain);
    for (l, e, c) in winf.iter() {
        let mut pts: Vec<Site> = Vec::new();
        for f in l {
            pts.push(f.z);
            pts.push(f.tip());
        }
        for x in e {
            pts.push(x.base);
            pts.push(x.tip());
        }
        let lo1 = pts.iter().map(|p| p.x1).min().unwrap_or(0);
        let hi1 = pts.iter().map(|p| p.x1).max().unwrap_or(0);
        if 3 * (hi1 - lo1) > g.li() {
            continue;
        }
        let lo2 = pts.iter().map(|p| p.x2).min().unwrap_or(0);
        let hi2 = pts.iter().map(|p| p.x2).max().unwrap_or(0);
        for a in 1..=g.li() {
            for b in (1 - lo2)..=(g.mi() - hi2) {
                let ls: Vec<FieldLabel> = l.iter().map(|f| f.at(g.reduce(f.z.shift(a, b)))).collect();
                let es: Vec<Edge> = e.iter().map(|x| Edge::new(g.reduce(x.base.shift(a, b)), x.dir)).collect();
                if !es.iter().all(|x| g.edge_is_valid(x)) {
                    continue;
                }
                let zs: Vec<Site> = ls.iter().map(|f| f.z).collect();
                bulk.add(&ls, &es, c * alpha_factor(&zs, &g))?;
            }
        }
    }
    bulk.tag = KernelTag::Bulk;
    let mut edge = w.plus(&bulk, -1.0)?;
    edge.tag = KernelTag::Edge;
    Ok(KernelSplit { bulk, edge })
}
