//! Scale decomposition of the critical propagator, bulk/edge splitting and
//! decay diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{per_l, CylinderGeometry, Site};
use crate::propagators::{
    dispersion, infinite_propagator_weighted, s_l, zero_block, Block, InfiniteTable, ModelParams, MomentumGrid,
    PropagatorTable, Variant, C64,
};

/// Transition shape of the cutoff on `1/2 < s < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CutoffProfile {
    /// `1 - u^2(3 - 2u)`, `u = 2s - 1`
    Smoothstep,
    /// `f(1-u) / (f(u) + f(1-u))` with `f(u) = e^{-1/u}`
    #[default]
    Gevrey,
}

/// Cutoff function: 1 below 1/2, 0 above 1, monotone in between.
pub fn chi_with(profile: CutoffProfile, s: f64) -> f64 {
    if s <= 0.5 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * s - 1.0;
    match profile {
        CutoffProfile::Smoothstep => 1.0 - u * u * (3.0 - 2.0 * u),
        CutoffProfile::Gevrey => {
            let f = |x: f64| (-1.0 / x).exp();
            let a = f(1.0 - u);
            a / (f(u) + a)
        }
    }
}

pub fn chi(s: f64) -> f64 {
    chi_with(CutoffProfile::default(), s)
}

/// Which piece of the decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleSel {
    /// single scale `h` in `h*+1 ..= 0`
    Single(i32),
    /// everything at or below `h*`
    Leq,
    /// sum of all scales `<= 0`
    Smooth,
    /// the `h = 1` complement `1 - χ(E)`
    Complement,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScaleCutoff {
    pub h_star: i32,
    pub params: ModelParams,
    pub profile: CutoffProfile,
}

/// `h* = -floor(log2 min(L, M))`.
pub fn h_star(geom: &CylinderGeometry) -> i32 {
    let n = geom.l.min(geom.m);
    -((usize::BITS - 1 - n.leading_zeros()) as i32)
}

impl ScaleCutoff {
    pub fn new(geom: &CylinderGeometry, params: &ModelParams) -> Self {
        ScaleCutoff { h_star: h_star(geom), params: params.dressed(), profile: CutoffProfile::default() }
    }

    pub fn with_profile(mut self, profile: CutoffProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn energy(&self, k1: f64, k2: f64) -> f64 {
        dispersion(k1, k2, &self.params).sqrt()
    }

    pub fn check(&self, sel: ScaleSel) -> Result<()> {
        match sel {
            ScaleSel::Single(h) if h <= self.h_star || h > 0 => Err(Error::ScaleOutOfRange(h)),
            _ => Ok(()),
        }
    }

    pub fn weight_at_energy(&self, sel: ScaleSel, e: f64) -> f64 {
        let c = |h: i32| chi_with(self.profile, 2f64.powi(-h) * e);
        match sel {
            ScaleSel::Single(h) => c(h) - c(h - 1),
            ScaleSel::Leq => c(self.h_star),
            ScaleSel::Smooth => c(0),
            ScaleSel::Complement => 1.0 - c(0),
        }
    }

    pub fn weight(&self, sel: ScaleSel, k1: f64, k2: f64) -> f64 {
        self.weight_at_energy(sel, self.energy(k1, k2))
    }

    /// Largest deviation of the telescoped weights from 1 at energy `e`.
    pub fn unity_residual(&self, e: f64) -> f64 {
        let mut s = self.weight_at_energy(ScaleSel::Leq, e);
        for h in self.h_star + 1..=0 {
            s += self.weight_at_energy(ScaleSel::Single(h), e);
        }
        s += self.weight_at_energy(ScaleSel::Complement, e);
        (s - 1.0).abs()
    }
}

fn variant_of(sel: ScaleSel) -> Variant {
    match sel {
        ScaleSel::Single(h) => Variant::Scale(h),
        ScaleSel::Leq => Variant::ScaleLeq(0),
        ScaleSel::Smooth => Variant::Smooth,
        ScaleSel::Complement => Variant::Scale(1),
    }
}

/// Momentum grid and cutoff of one cylinder, reused across scales.
pub struct Multiscale {
    pub cutoff: ScaleCutoff,
    pub grid: MomentumGrid,
}

impl Multiscale {
    pub fn new(geom: &CylinderGeometry, params: &ModelParams) -> Result<Self> {
        let cutoff = ScaleCutoff::new(geom, params);
        let grid = MomentumGrid::new(geom, &cutoff.params)?;
        Ok(Multiscale { cutoff, grid })
    }

    pub fn with_profile(mut self, profile: CutoffProfile) -> Self {
        self.cutoff.profile = profile;
        self
    }

    pub fn table(&self, sel: ScaleSel) -> Result<PropagatorTable> {
        self.cutoff.check(sel)?;
        let c = self.cutoff;
        let mut t = self.grid.table_weighted(variant_of(sel), &|k1, k2| C64::new(c.weight(sel, k1, k2), 0.0));
        if let ScaleSel::Leq = sel {
            t.variant = Variant::ScaleLeq(c.h_star);
        }
        Ok(t)
    }

    pub fn full(&self) -> PropagatorTable {
        self.grid.table_weighted(Variant::Critical, &|_, _| C64::new(1.0, 0.0))
    }

    pub fn scales(&self) -> Vec<i32> {
        (self.cutoff.h_star + 1..=0).collect()
    }
}

pub fn scale_propagator(sel: ScaleSel, geom: &CylinderGeometry, params: &ModelParams) -> Result<PropagatorTable> {
    Multiscale::new(geom, params)?.table(sel)
}

/// Infinite-plane scale-`h` propagator on `|Δ| <= extent`.
pub fn infinite_scale_table(sel: ScaleSel, cutoff: &ScaleCutoff, extent: i64, tol: f64) -> Result<InfiniteTable> {
    if let ScaleSel::Leq | ScaleSel::Smooth = sel {
        return Err(Error::Config("infrared pieces have no cutoff at k = 0".into()));
    }
    cutoff.check(sel)?;
    let c = *cutoff;
    infinite_propagator_weighted(&c.params, &move |k1, k2| c.weight(sel, k1, k2), extent, tol)
}

#[derive(Clone, Debug)]
pub struct BulkEdge {
    pub full: PropagatorTable,
    pub bulk: PropagatorTable,
    pub edge: PropagatorTable,
}

/// Tolerance of the infinite-plane tables used for bulk parts.
pub const INFINITE_TOL: f64 = 1e-10;

pub fn bulk_edge_split_with(ms: &Multiscale, h: i32) -> Result<BulkEdge> {
    bulk_edge_split_tol(ms, h, INFINITE_TOL)
}

/// As [`bulk_edge_split_with`] with an explicit plane-grid tolerance.
pub fn bulk_edge_split_tol(ms: &Multiscale, h: i32, tol: f64) -> Result<BulkEdge> {
    let sel = ScaleSel::Single(h);
    let full = ms.table(sel)?;
    let geom = ms.grid.geom;
    let extent = (geom.li() / 2).max(geom.mi() + 1);
    let inf = infinite_scale_table(sel, &ms.cutoff, extent, tol)?;
    let mut bulk = PropagatorTable::zeros(geom, Variant::Bulk(h), full.rows);
    for dx in 0..geom.li() {
        let s = s_l(dx, geom.li());
        for r in full.rows.0..=full.rows.1 {
            for rp in full.rows.0..=full.rows.1 {
                let mut b = if s == 0.0 { zero_block() } else { inf.get((per_l(dx, geom.li()), r - rp)).unwrap() };
                for row in b.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= s;
                    }
                }
                bulk.set(dx, r, rp, b);
            }
        }
    }
    let edge = full.combine(1.0, &bulk, -1.0, Variant::Edge(h))?;
    Ok(BulkEdge { full, bulk, edge })
}

pub fn bulk_edge_split(h: i32, geom: &CylinderGeometry, params: &ModelParams) -> Result<BulkEdge> {
    bulk_edge_split_with(&Multiscale::new(geom, params)?, h)
}

/// `r = (r11, r12, r21, r22)`: `r_ij` derivatives in direction `j` of argument `i`.
pub fn discrete_derivative(table: &PropagatorTable, r: [u8; 4]) -> Result<PropagatorTable> {
    if r.iter().any(|&x| x > 2) {
        return Err(Error::Config("derivative orders must be <= 2".into()));
    }
    let mut t = table.clone();
    for (slot, &n) in r.iter().enumerate() {
        for _ in 0..n {
            t = derivative_step(&t, slot / 2, slot % 2)?;
        }
    }
    Ok(t)
}

fn derivative_step(t: &PropagatorTable, arg: usize, dir: usize) -> Result<PropagatorTable> {
    let geom = t.geom;
    let l = geom.li();
    let rows = if dir == 1 { (t.rows.0, t.rows.1 - 1) } else { t.rows };
    if rows.1 < rows.0 {
        return Err(Error::Config("no rows left after vertical derivative".into()));
    }
    let mut out = PropagatorTable::zeros(geom, Variant::Derivative, rows);
    for dx in 0..l {
        for r in rows.0..=rows.1 {
            for rp in rows.0..=rows.1 {
                let z = Site::new(dx + 1, r);
                let zp = Site::new(1, rp);
                let (a, b) = match (arg, dir) {
                    (0, 0) => (z.shift(1, 0), zp),
                    (0, _) => (z.shift(0, 1), zp),
                    (_, 0) => (z, zp.shift(1, 0)),
                    _ => (z, zp.shift(0, 1)),
                };
                let x = t.block(a, b).unwrap();
                let y = t.block(z, zp).unwrap();
                let mut d = zero_block();
                for i in 0..2 {
                    for j in 0..2 {
                        d[i][j] = x[i][j] - y[i][j];
                    }
                }
                out.set(dx, r, rp, d);
            }
        }
    }
    Ok(out)
}

/// `‖z - z'‖_1` with periodized horizontal part.
pub fn l1_distance(geom: &CylinderGeometry, z: Site, zp: Site) -> i64 {
    per_l(z.x1 - zp.x1, geom.li()).abs() + (z.x2 - zp.x2).abs()
}

/// Boundary-weighted distance `d_E`.
pub fn edge_distance(geom: &CylinderGeometry, z: Site, zp: Site) -> i64 {
    let p = per_l(z.x1 - zp.x1, geom.li()).abs();
    let s = z.x2 + zp.x2;
    let a = p + s.min(2 * (geom.mi() + 1) - s);
    let b = geom.li() - p + (z.x2 - zp.x2).abs();
    a.min(b)
}

pub fn block_norm(b: &Block) -> f64 {
    b.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::Numerical("need at least two points to fit".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// Largest block norm of `table` at each value of `dist(z, z')` over bulk pairs.
pub fn decay_profile(table: &PropagatorTable, dist: impl Fn(Site, Site) -> i64) -> Vec<(i64, f64)> {
    let geom = table.geom;
    let mut best = std::collections::BTreeMap::new();
    let zp_row: Vec<i64> = (1..=geom.mi()).collect();
    for &rp in &zp_row {
        let zp = Site::new(1, rp);
        for z in geom.sites() {
            let Some(b) = table.block(z, zp) else { continue };
            let d = dist(z, zp);
            let n = block_norm(&b);
            let e = best.entry(d).or_insert(0.0f64);
            *e = e.max(n);
        }
    }
    best.into_iter().collect()
}

/// Exponential fit `log ‖g‖ ≈ intercept + slope · d` over `d_min ..= d_max`.
pub fn exponential_fit(profile: &[(i64, f64)], d_min: i64, d_max: i64) -> Result<LinearFit> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(d, v)| *d >= d_min && *d <= d_max && *v > 0.0)
        .map(|(d, v)| (*d as f64, v.ln()))
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    linear_fit(&xs, &ys)
}
