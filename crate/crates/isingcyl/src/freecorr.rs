//! Free (λ = 0) partition function and energy correlations on the cylinder,
//! with an exhaustive spin-enumeration oracle.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CylinderGeometry, Direction, Edge, Site};
use crate::propagators::{
    critical_action_matrix, critical_propagator_direct, critical_propagator_fourier, k1_values, massive_action_matrix,
    omega_index, scaling_propagator, ModelParams, MomentumGrid, PropagatorTable, C64,
};
use crate::skewlinalg::{moments_to_cumulants, pfaffian, SkewMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldKind {
    Phi,
    Xi,
}

/// One Grassmann field occurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservableField {
    pub kind: FieldKind,
    pub omega: i8,
    pub site: Site,
}

/// Linear combination of fields.
pub type LinearForm = Vec<(ObservableField, C64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMode {
    Moment,
    Truncated,
    Scaling,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationRequest {
    pub geom: CylinderGeometry,
    pub edges: Vec<Edge>,
    pub mode: CorrelationMode,
    pub params: ModelParams,
}

/// Largest `2LM` for the Pfaffian partition function.
pub const PARTITION_CAP: usize = 2048;
/// Largest `LM` for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 24;

pub fn partition_function_free(geom: &CylinderGeometry, beta: f64, j1: f64, j2: f64) -> Result<f64> {
    if 2 * geom.n_sites() > PARTITION_CAP {
        return Err(Error::DimensionTooLarge(2 * geom.n_sites()));
    }
    let p = ModelParams::from_beta(beta, j1, j2)?;
    let ac = critical_action_matrix(geom, &p)?;
    let am = massive_action_matrix(geom, &p)?;
    let pf = pfaffian(&ac) * pfaffian(&am);
    let (l, m) = (geom.l as f64, geom.m as f64);
    let log_pre = l * m * (2f64.ln() + (beta * j1).cosh().ln()) + l * (m - 1.0) * (beta * j2).cosh().ln();
    if pf.im.abs() > 1e-8 * pf.norm() {
        return Err(Error::Numerical(format!("complex Pfaffian product {pf}")));
    }
    Ok(log_pre.exp() * pf.re)
}

/// `Pf A_m` as the product of its per-row diagonal blocks.
pub fn massive_pfaffian_blockwise(geom: &CylinderGeometry, p: &ModelParams) -> Result<C64> {
    let am = massive_action_matrix(geom, p)?;
    let w = 2 * geom.l;
    let mut acc = C64::new(1.0, 0.0);
    for r in 0..geom.m {
        let idx: Vec<usize> = (r * w..(r + 1) * w).collect();
        acc *= pfaffian(&am.minor(&idx)?);
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsResult {
    pub z: f64,
    /// `⟨ε_x⟩` for each edge of `geom.edges()`, in order
    pub means: Vec<f64>,
    /// `⟨∏ ε⟩` for each requested tuple
    pub moments: Vec<f64>,
}

fn pairwise_sum(mut v: Vec<Vec<f64>>) -> Vec<f64> {
    while v.len() > 1 {
        v = v
            .chunks(2)
            .map(|c| {
                if c.len() == 2 {
                    c[0].iter().zip(&c[1]).map(|(a, b)| a + b).collect()
                } else {
                    c[0].clone()
                }
            })
            .collect();
    }
    v.pop().unwrap_or_default()
}

/// Exact sums over all `2^{LM}` spin configurations.
pub fn enumerate_gibbs(geom: &CylinderGeometry, beta: f64, j1: f64, j2: f64, observables: &[Vec<Edge>]) -> Result<GibbsResult> {
    let n = geom.n_sites();
    if n > ENUMERATION_CAP {
        return Err(Error::DimensionTooLarge(n));
    }
    let bit = |s: Site| -> u32 {
        let s = geom.reduce(s);
        1u32 << ((s.x2 - 1) * geom.li() + (s.x1 - 1))
    };
    let edges = geom.edges();
    let edge_mask: Vec<u32> = edges.iter().map(|e| bit(e.base) | bit(e.tip())).collect();
    let coupling: Vec<f64> = edges
        .iter()
        .map(|e| match e.dir {
            Direction::Horizontal => j1,
            Direction::Vertical => j2,
        })
        .collect();
    let shift: f64 = coupling.iter().map(|j| j.abs()).sum();
    let mut obs_mask = Vec::with_capacity(observables.len());
    for o in observables {
        let mut m = 0u32;
        for e in o {
            if !geom.edge_is_valid(e) {
                return Err(Error::Config(format!("invalid edge {e:?}")));
            }
            m ^= bit(e.base) | bit(e.tip());
        }
        obs_mask.push(m);
    }
    let total: u64 = 1u64 << n;
    let chunks = 1u64 << n.min(10);
    let per = total / chunks;
    let width = 1 + edges.len() + observables.len();
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; width];
            for cfg in (c * per)..((c + 1) * per) {
                let cfg = cfg as u32;
                let mut e = 0.0;
                for (m, j) in edge_mask.iter().zip(&coupling) {
                    e += if (cfg & m).count_ones().is_multiple_of(2) { *j } else { -*j };
                }
                let w = (beta * (e - shift)).exp();
                acc[0] += w;
                for (i, m) in edge_mask.iter().enumerate() {
                    acc[1 + i] += if (cfg & m).count_ones().is_multiple_of(2) { w } else { -w };
                }
                for (i, m) in obs_mask.iter().enumerate() {
                    acc[1 + edges.len() + i] += if (cfg & m).count_ones().is_multiple_of(2) { w } else { -w };
                }
            }
            acc
        })
        .collect();
    let s = pairwise_sum(parts);
    let zs = s[0];
    Ok(GibbsResult {
        z: zs * (beta * shift).exp(),
        means: s[1..1 + edges.len()].iter().map(|v| v / zs).collect(),
        moments: s[1 + edges.len()..].iter().map(|v| v / zs).collect(),
    })
}

/// `(β, J1, J2)` reproducing `tanh βJ_j = t_j` with `β = 1`.
pub fn couplings_from_params(p: &ModelParams) -> (f64, f64, f64) {
    (1.0, p.t1.atanh(), p.t2.atanh())
}

/// Order-`m` enumeration cumulant of `ε` over `edges`.
pub fn enumerated_cumulant(geom: &CylinderGeometry, p: &ModelParams, edges: &[Edge]) -> Result<f64> {
    let m = edges.len();
    let (beta, j1, j2) = couplings_from_params(p);
    let subsets: Vec<u32> = (1u32..(1 << m)).collect();
    let obs: Vec<Vec<Edge>> = subsets.iter().map(|&s| (0..m).filter(|i| s >> i & 1 == 1).map(|i| edges[i]).collect()).collect();
    let g = enumerate_gibbs(geom, beta, j1, j2, &obs)?;
    let moments: BTreeMap<u32, C64> = subsets.iter().zip(&g.moments).map(|(&s, &v)| (s, C64::new(v, 0.0))).collect();
    let c = moments_to_cumulants(&moments, m)?;
    Ok(c[&((1u32 << m) - 1)].re)
}

enum CriticalSource {
    Table(PropagatorTable),
    Grid(MomentumGrid),
}

/// Covariance oracle for `φ` and `ξ` fields of one free model.
pub struct FreeCorrelator {
    pub geom: CylinderGeometry,
    pub params: ModelParams,
    crit: CriticalSource,
    /// `s_ω(y)` for `y = 0..L`, index `omega_index(ω)`
    s: [Vec<C64>; 2],
}

/// Above this many sites the critical covariance is evaluated pointwise.
const TABLE_SITES: usize = 1024;

impl FreeCorrelator {
    pub fn new(geom: &CylinderGeometry, params: &ModelParams) -> Result<Self> {
        let crit = if params.is_critical() {
            if geom.n_sites() <= TABLE_SITES {
                CriticalSource::Table(critical_propagator_fourier(geom, params)?)
            } else {
                CriticalSource::Grid(MomentumGrid::new(geom, params)?)
            }
        } else {
            CriticalSource::Table(critical_propagator_direct(geom, params)?)
        };
        let ks = k1_values(geom.l);
        let s = [1i8, -1].map(|w| {
            (0..geom.li())
                .map(|y| {
                    let mut acc = C64::new(0.0, 0.0);
                    for &k in &ks {
                        acc += C64::from_polar(1.0, -k * y as f64) / (1.0 + params.t1 * C64::from_polar(1.0, w as f64 * k));
                    }
                    acc / geom.l as f64
                })
                .collect()
        });
        Ok(FreeCorrelator { geom: *geom, params: *params, crit, s })
    }

    /// `s_ω(y)` extended antiperiodically.
    pub fn s(&self, w: i8, y: i64) -> C64 {
        let l = self.geom.li();
        let q = y.div_euclid(l);
        let v = self.s[omega_index(w)][(y - q * l) as usize];
        if q % 2 == 0 {
            v
        } else {
            -v
        }
    }

    pub fn field_cov(&self, a: &ObservableField, b: &ObservableField) -> C64 {
        match (a.kind, b.kind) {
            (FieldKind::Phi, FieldKind::Phi) => {
                let blk = match &self.crit {
                    CriticalSource::Table(t) => t.block(a.site, b.site).expect("row outside table"),
                    CriticalSource::Grid(g) => g.block(a.site, b.site),
                };
                blk[omega_index(a.omega)][omega_index(b.omega)]
            }
            (FieldKind::Xi, FieldKind::Xi) => {
                if a.site.x2 != b.site.x2 {
                    return C64::new(0.0, 0.0);
                }
                let d = a.site.x1 - b.site.x1;
                match (a.omega, b.omega) {
                    (1, -1) => self.s(1, d),
                    (-1, 1) => -self.s(-1, d),
                    _ => C64::new(0.0, 0.0),
                }
            }
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn form_cov(&self, f: &LinearForm, g: &LinearForm) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (a, ca) in f {
            for (b, cb) in g {
                acc += ca * cb * self.field_cov(a, b);
            }
        }
        acc
    }

    fn phi(&self, w: i8, z: Site) -> LinearForm {
        let (s, sign) = self.geom.wrap(z);
        vec![(ObservableField { kind: FieldKind::Phi, omega: w, site: s }, C64::new(sign, 0.0))]
    }

    /// `H_{ω,z}`, with `z_1` allowed one step past `L`.
    pub fn h_form(&self, w: i8, z: Site) -> LinearForm {
        let (s, sign) = self.geom.wrap(z);
        let mut out = vec![(ObservableField { kind: FieldKind::Xi, omega: w, site: s }, C64::new(sign, 0.0))];
        for y in 1..=self.geom.li() {
            let c = self.s(w, z.x1 - y);
            let site = Site::new(y, z.x2);
            out.push((ObservableField { kind: FieldKind::Phi, omega: 1, site }, c));
            out.push((ObservableField { kind: FieldKind::Phi, omega: -1, site }, -(w as f64) * c));
        }
        out
    }

    /// The two fields of `E_x` and the coupling `t_{j(x)}`.
    pub fn bilinear(&self, e: &Edge) -> Result<(LinearForm, LinearForm, f64)> {
        if !self.geom.edge_is_valid(e) {
            return Err(Error::Config(format!("invalid edge {e:?}")));
        }
        Ok(match e.dir {
            Direction::Vertical => (self.phi(1, e.base), self.phi(-1, e.tip()), self.params.t2),
            Direction::Horizontal => (self.h_form(1, e.base), self.h_form(-1, e.tip()), self.params.t1),
        })
    }

    fn check_distinct(edges: &[Edge]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in edges {
            if !seen.insert(*e) {
                return Err(Error::RepeatedEdge(*e));
            }
        }
        Ok(())
    }

    /// Covariance matrix of the `2m` bilinear constituents, plus the couplings.
    fn constituent_matrix(&self, edges: &[Edge]) -> Result<(SkewMatrix, Vec<f64>)> {
        let mut forms = Vec::new();
        let mut ts = Vec::new();
        for e in edges {
            let (a, b, t) = self.bilinear(e)?;
            forms.push(a);
            forms.push(b);
            ts.push(t);
        }
        let n = forms.len();
        let mut g = SkewMatrix::zeros(n)?;
        for i in 0..n {
            for j in i + 1..n {
                g.set(i, j, self.form_cov(&forms[i], &forms[j]));
            }
        }
        Ok((g, ts))
    }

    /// `⟨E_{x_1} ⋯ E_{x_m}⟩` for every subset (bitmask) of `edges`.
    fn bilinear_moments(&self, edges: &[Edge]) -> Result<(Vec<C64>, Vec<f64>)> {
        let m = edges.len();
        let (g, ts) = self.constituent_matrix(edges)?;
        let out = (0u32..(1 << m))
            .map(|s| {
                let idx: Vec<usize> = (0..m).filter(|i| s >> i & 1 == 1).flat_map(|i| [2 * i, 2 * i + 1]).collect();
                Ok(pfaffian(&g.minor(&idx)?))
            })
            .collect::<Result<_>>()?;
        Ok((out, ts))
    }

    /// `⟨ε_{x}⟩` moments for every subset of `edges`, using `ε_x ↔ t + (1 - t^2) E_x`.
    pub fn energy_moments(&self, edges: &[Edge]) -> Result<Vec<f64>> {
        Self::check_distinct(edges)?;
        let m = edges.len();
        let (e, ts) = self.bilinear_moments(edges)?;
        let mut out = Vec::with_capacity(1 << m);
        for s in 0u32..(1 << m) {
            let mut acc = C64::new(0.0, 0.0);
            // sub-subsets of s
            let mut u = s;
            loop {
                let mut c = 1.0;
                for (i, t) in ts.iter().enumerate() {
                    if s >> i & 1 == 1 {
                        c *= if u >> i & 1 == 1 { 1.0 - t * t } else { *t };
                    }
                }
                acc += c * e[u as usize];
                if u == 0 {
                    break;
                }
                u = (u - 1) & s;
            }
            if acc.im.abs() > 1e-9 * acc.norm().max(1.0) {
                return Err(Error::Numerical(format!("complex energy moment {acc}")));
            }
            out.push(acc.re);
        }
        Ok(out)
    }

    pub fn energy_moment(&self, edges: &[Edge]) -> Result<f64> {
        let v = self.energy_moments(edges)?;
        Ok(v[v.len() - 1])
    }

    pub fn energy_cumulant(&self, edges: &[Edge]) -> Result<f64> {
        let m = edges.len();
        let v = self.energy_moments(edges)?;
        let moments: BTreeMap<u32, C64> = (1u32..(1 << m)).map(|s| (s, C64::new(v[s as usize], 0.0))).collect();
        let c = moments_to_cumulants(&moments, m)?;
        Ok(c[&((1u32 << m) - 1)].re)
    }
}

pub fn energy_moment_free(req: &CorrelationRequest) -> Result<f64> {
    FreeCorrelator::new(&req.geom, &req.params)?.energy_moment(&req.edges)
}

pub fn energy_cumulants_free(req: &CorrelationRequest) -> Result<f64> {
    if req.edges.len() < 2 {
        return Err(Error::Config("cumulants need at least two edges".into()));
    }
    FreeCorrelator::new(&req.geom, &req.params)?.energy_cumulant(&req.edges)
}

/// Continuum `m`-point energy correlation; `labels[i]` is the edge direction at `points[i]`.
pub fn scaling_correlation(points: &[(f64, f64)], labels: &[Direction], ell1: f64, ell2: f64, p: &ModelParams) -> Result<f64> {
    let m = points.len();
    if labels.len() != m {
        return Err(Error::Config("one label per point".into()));
    }
    for i in 0..m {
        for j in i + 1..m {
            if points[i] == points[j] {
                return Err(Error::CoincidentPoints);
            }
        }
    }
    let mut mat = SkewMatrix::zeros(2 * m)?;
    for i in 0..m {
        for j in i + 1..m {
            let g = scaling_propagator(points[i], points[j], ell1, ell2, p)?;
            for a in 0..2 {
                for b in 0..2 {
                    mat.set(2 * i + a, 2 * j + b, C64::new(g[a][b], 0.0));
                }
            }
        }
    }
    let m1 = labels.iter().filter(|l| **l == Direction::Horizontal).count() as i32;
    let m2 = m as i32 - m1;
    let t2 = p.t2_star;
    Ok((2.0 * t2).powi(m1) * (1.0 - t2 * t2).powi(m2) * pfaffian(&mat).re)
}

/// Lattice cylinder approximating `[0,ell1) x (0,ell2)` at spacing `a`.
pub fn lattice_for_spacing(a: f64, ell1: f64, ell2: f64) -> Result<CylinderGeometry> {
    let l = 2 * (ell1 / (2.0 * a)).floor() as usize;
    let m = (ell2 / a).floor() as usize;
    CylinderGeometry::new(l, m)
}

/// `a^{-m}` times the lattice energy cumulant at the edges nearest `points`.
pub fn rescaled_lattice_cumulant(points: &[(f64, f64)], labels: &[Direction], a: f64, ell1: f64, ell2: f64, p: &ModelParams) -> Result<f64> {
    let geom = lattice_for_spacing(a, ell1, ell2)?;
    let edges: Vec<Edge> = points
        .iter()
        .zip(labels)
        .map(|(z, d)| Edge::new(Site::new((z.0 / a).floor() as i64, (z.1 / a).floor() as i64), *d))
        .collect();
    let c = FreeCorrelator::new(&geom, p)?;
    Ok(c.energy_cumulant(&edges)? / a.powi(points.len() as i32))
}
