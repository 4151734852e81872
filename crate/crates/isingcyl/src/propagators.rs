//! Two-point functions of the free cylinder theory: massive (`ξ`) and
//! critical (`φ`) sectors, a direct-inversion oracle, infinite-volume
//! limits, and the continuum scaling propagator.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{per_l, CylinderGeometry, Site};
use crate::skewlinalg::SkewMatrix;

pub type C64 = Complex64;
/// `[ω][ω']` with index 0 for `+` and 1 for `-`.
pub type Block = [[C64; 2]; 2];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn zero_block() -> Block {
    [[ZERO; 2]; 2]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub t1: f64,
    pub t2: f64,
    pub t1_star: f64,
    pub t2_star: f64,
    pub lambda: f64,
}

impl ModelParams {
    /// Free theory on the critical line, dressed values equal to bare ones.
    pub fn critical(t1: f64) -> Result<Self> {
        if !(t1 > 0.0 && t1 < 1.0) {
            return Err(Error::Config(format!("t1 must lie in (0,1), got {t1}")));
        }
        let t2 = (1.0 - t1) / (1.0 + t1);
        Ok(ModelParams { t1, t2, t1_star: t1, t2_star: t2, lambda: 0.0 })
    }

    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        for t in [t1, t2] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("couplings must lie in (0,1), got {t}")));
            }
        }
        Ok(ModelParams { t1, t2, t1_star: t1, t2_star: t2, lambda: 0.0 })
    }

    pub fn from_beta(beta: f64, j1: f64, j2: f64) -> Result<Self> {
        Self::new((beta * j1).tanh(), (beta * j2).tanh())
    }

    /// Parameters describing the dressed (starred) theory as a bare one.
    pub fn dressed(&self) -> Self {
        ModelParams { t1: self.t1_star, t2: self.t2_star, ..*self }
    }

    pub fn criticality_residual(&self) -> f64 {
        self.t1 * self.t2 + self.t1 + self.t2 - 1.0
    }

    pub fn is_critical(&self) -> bool {
        self.criticality_residual().abs() < 1e-14
    }

    fn require_critical(&self) -> Result<()> {
        if self.is_critical() {
            Ok(())
        } else {
            Err(Error::NotCritical { t1: self.t1, t2: self.t2 })
        }
    }
}

/// `β_c` for isotropic unit couplings: `tanh β_c = √2 - 1`.
pub fn beta_critical_isotropic() -> f64 {
    (2f64.sqrt() - 1.0).atanh()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub b: f64,
    pub delta: f64,
    pub big_b: f64,
    pub d: f64,
}

/// `b(k1)`, `Δ(k1)`, `B(k1)` and `D(k1,k2)`.
pub fn coefficients(k1: f64, k2: f64, p: &ModelParams) -> Coefficients {
    let (t1, t2) = (p.t1, p.t2);
    let q = 1.0 + t1 * t1 + 2.0 * t1 * k1.cos();
    Coefficients {
        b: (1.0 - t1 * t1) / q,
        delta: 2.0 * t1 * k1.sin() / q,
        big_b: t2 * q / (1.0 - t1 * t1),
        d: dispersion(k1, k2, p),
    }
}

/// `D(k1,k2) = 2(1-t2)^2(1-cos k1) + 2(1-t1)^2(1-cos k2)`, evaluated with
/// `1 - cos k = 2 sin^2(k/2)`.
pub fn dispersion(k1: f64, k2: f64, p: &ModelParams) -> f64 {
    let s1 = (k1 / 2.0).sin();
    let s2 = (k2 / 2.0).sin();
    4.0 * (1.0 - p.t2).powi(2) * s1 * s1 + 4.0 * (1.0 - p.t1).powi(2) * s2 * s2
}

/// Antiperiodic momenta `π(2m-1)/L`, `m = -L/2+1 ..= L/2`.
pub fn k1_values(l: usize) -> Vec<f64> {
    let l = l as i64;
    (-l / 2 + 1..=l / 2).map(|m| PI * (2 * m - 1) as f64 / l as f64).collect()
}

/// Critical-sector momentum matrix `ĝ(k1,k2)`.
pub fn ghat(k1: f64, k2: f64, p: &ModelParams) -> Block {
    let t1 = p.t1;
    let c = coefficients(k1, k2, p);
    let dd = c.d;
    let a = C64::new(0.0, -2.0 * t1 * k1.sin()) / dd;
    let u = 1.0 - t1 * t1;
    [
        [a, -u * (C64::new(1.0, 0.0) - c.big_b * C64::from_polar(1.0, -k2)) / dd],
        [u * (C64::new(1.0, 0.0) - c.big_b * C64::from_polar(1.0, k2)) / dd, -a],
    ]
}

/// Positive roots of `sin k(M+1) = B sin kM` in `(0, π)`, ascending.
pub fn positive_roots(big_b: f64, m: usize) -> Result<Vec<f64>> {
    let mf = m as f64;
    if big_b > (mf + 1.0) / mf {
        return Err(Error::ComplexRoots(big_b));
    }
    let f = |k: f64| (k * (mf + 1.0)).sin() - big_b * (k * mf).sin();
    let n = 16 * (m + 1);
    let h = PI / n as f64;
    let mut roots = Vec::with_capacity(m);
    let mut a = h;
    let mut fa = f(a);
    for j in 2..n {
        let b = j as f64 * h;
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        roots.push(a);
    }
    Ok(roots)
}

/// The symmetric root set `Q_M(k1)`: `±` the roots in `(0,π)`; `k2 = 0`
/// and `±π` are excluded because their summands vanish identically.
pub fn solve_k2_roots(k1: f64, m: usize, p: &ModelParams) -> Result<Vec<f64>> {
    let big_b = coefficients(k1, 0.0, p).big_b;
    let pos = positive_roots(big_b, m)?;
    if pos.len() != m {
        return Err(Error::RootCount { k1, found: pos.len(), expected: m });
    }
    let mut all: Vec<f64> = pos.iter().rev().map(|k| -k).collect();
    all.extend(pos);
    Ok(all)
}

/// `N_M(k1,k2)`.
pub fn normalization(k2: f64, big_b: f64, m: usize) -> f64 {
    let mf = m as f64;
    let num = big_b * mf * (k2 * mf).cos() - (mf + 1.0) * (k2 * (mf + 1.0)).cos();
    let den = big_b * (k2 * mf).cos() - (k2 * (mf + 1.0)).cos();
    num / den
}

#[derive(Clone, Debug)]
pub struct Mode {
    pub k2: f64,
    pub inv_2n: f64,
    pub g: Block,
    /// `ĝ(k1, -k2)`
    pub g_neg: Block,
}

/// Momenta and per-mode data of the critical cylinder propagator.
#[derive(Clone, Debug)]
pub struct MomentumGrid {
    pub geom: CylinderGeometry,
    pub params: ModelParams,
    pub k1: Vec<f64>,
    pub modes: Vec<Vec<Mode>>,
}

impl MomentumGrid {
    pub fn new(geom: &CylinderGeometry, p: &ModelParams) -> Result<Self> {
        p.require_critical()?;
        let k1 = k1_values(geom.l);
        let modes = k1
            .par_iter()
            .map(|&q1| {
                let big_b = coefficients(q1, 0.0, p).big_b;
                let roots = solve_k2_roots(q1, geom.m, p)?;
                Ok(roots
                    .into_iter()
                    .map(|k2| Mode {
                        k2,
                        inv_2n: 0.5 / normalization(k2, big_b, geom.m),
                        g: ghat(q1, k2, p),
                        g_neg: ghat(q1, -k2, p),
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentumGrid { geom: *geom, params: *p, k1, modes })
    }

    /// Largest quantization residual over the grid.
    pub fn max_residual(&self) -> f64 {
        let m = self.geom.m as f64;
        let mut worst: f64 = 0.0;
        for (i, &q1) in self.k1.iter().enumerate() {
            let big_b = coefficients(q1, 0.0, &self.params).big_b;
            for md in &self.modes[i] {
                worst = worst.max(((md.k2 * (m + 1.0)).sin() - big_b * (md.k2 * m).sin()).abs());
            }
        }
        worst
    }

    /// Summand of the cylinder formula for rows `r`, `r'`, without the
    /// `e^{-ik1 Δ1}` factor.
    fn mode_block(&self, md: &Mode, r: i64, rp: i64) -> Block {
        let m1 = self.geom.mi() + 1;
        let ed = C64::from_polar(1.0, -md.k2 * (r - rp) as f64);
        let es = C64::from_polar(1.0, -md.k2 * (r + rp) as f64);
        let ph = C64::from_polar(1.0, 2.0 * md.k2 * m1 as f64);
        let g = &md.g;
        [
            [ed * g[0][0] - es * g[0][0], ed * g[0][1] - es * md.g_neg[0][1]],
            [ed * g[1][0] - es * g[1][0], ed * g[1][1] - es * ph * g[1][1]],
        ]
    }

    /// Pointwise evaluation of the cylinder formula with per-mode weight.
    pub fn block_weighted(&self, z: Site, zp: Site, weight: &(dyn Fn(f64, f64) -> C64 + Sync)) -> Block {
        let dx = (z.x1 - zp.x1) as f64;
        let mut out = zero_block();
        for (i, &q1) in self.k1.iter().enumerate() {
            let e1 = C64::from_polar(1.0, -q1 * dx);
            for md in &self.modes[i] {
                let w = weight(q1, md.k2) * md.inv_2n * e1;
                if w == ZERO {
                    continue;
                }
                let b = self.mode_block(md, z.x2, zp.x2);
                for a in 0..2 {
                    for c in 0..2 {
                        out[a][c] += w * b[a][c];
                    }
                }
            }
        }
        let inv_l = 1.0 / self.geom.l as f64;
        scale_block(&mut out, inv_l);
        out
    }

    pub fn block(&self, z: Site, zp: Site) -> Block {
        self.block_weighted(z, zp, &|_, _| C64::new(1.0, 0.0))
    }

    /// Full closure table with a per-mode weight.
    pub fn table_weighted(&self, variant: Variant, weight: &(dyn Fn(f64, f64) -> C64 + Sync)) -> PropagatorTable {
        let geom = self.geom;
        let (rmin, rmax) = (0, geom.mi() + 1);
        let nr = (rmax - rmin + 1) as usize;
        // per-k1 row blocks
        let per_k1: Vec<Vec<Block>> = self
            .k1
            .par_iter()
            .enumerate()
            .map(|(i, &q1)| {
                let mut f = vec![zero_block(); nr * nr];
                for md in &self.modes[i] {
                    let w = weight(q1, md.k2) * md.inv_2n;
                    if w == ZERO {
                        continue;
                    }
                    for r in rmin..=rmax {
                        for rp in rmin..=rmax {
                            let b = self.mode_block(md, r, rp);
                            let cell = &mut f[(r - rmin) as usize * nr + (rp - rmin) as usize];
                            for a in 0..2 {
                                for c in 0..2 {
                                    cell[a][c] += w * b[a][c];
                                }
                            }
                        }
                    }
                }
                f
            })
            .collect();
        let l = geom.l;
        let data: Vec<Vec<Block>> = (0..l)
            .into_par_iter()
            .map(|dx| {
                let mut out = vec![zero_block(); nr * nr];
                for (i, &q1) in self.k1.iter().enumerate() {
                    let e1 = C64::from_polar(1.0 / l as f64, -q1 * dx as f64);
                    for (cell, src) in out.iter_mut().zip(&per_k1[i]) {
                        for a in 0..2 {
                            for c in 0..2 {
                                cell[a][c] += e1 * src[a][c];
                            }
                        }
                    }
                }
                out
            })
            .collect();
        PropagatorTable {
            geom,
            variant,
            rows: (rmin, rmax),
            data: data.into_iter().flatten().collect(),
        }
    }
}

fn scale_block(b: &mut Block, s: f64) {
    for row in b.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    Massive,
    Critical,
    CriticalDirect,
    Infinite,
    Bulk(i32),
    Edge(i32),
    Scale(i32),
    ScaleLeq(i32),
    Smooth,
    ScalingLimit,
    Derivative,
    Custom,
}

/// Horizontally translation-invariant table of 2x2 blocks, stored by
/// `(Δ1 mod L, row, row')` and extended antiperiodically.
#[derive(Clone, Debug)]
pub struct PropagatorTable {
    pub geom: CylinderGeometry,
    pub variant: Variant,
    /// inclusive row range covered
    pub rows: (i64, i64),
    data: Vec<Block>,
}

impl PropagatorTable {
    pub fn zeros(geom: CylinderGeometry, variant: Variant, rows: (i64, i64)) -> Self {
        let nr = (rows.1 - rows.0 + 1) as usize;
        PropagatorTable { geom, variant, rows, data: vec![zero_block(); geom.l * nr * nr] }
    }

    fn nr(&self) -> usize {
        (self.rows.1 - self.rows.0 + 1) as usize
    }

    fn index(&self, dx: i64, r: i64, rp: i64) -> usize {
        let nr = self.nr();
        (dx as usize * nr + (r - self.rows.0) as usize) * nr + (rp - self.rows.0) as usize
    }

    pub fn has_row(&self, r: i64) -> bool {
        r >= self.rows.0 && r <= self.rows.1
    }

    /// Block `g(z, z')`; `None` outside the stored rows.
    pub fn block(&self, z: Site, zp: Site) -> Option<Block> {
        if !self.has_row(z.x2) || !self.has_row(zp.x2) {
            return None;
        }
        let l = self.geom.li();
        let raw = z.x1 - zp.x1;
        let q = raw.div_euclid(l);
        let dx = raw - q * l;
        let mut b = self.data[self.index(dx, z.x2, zp.x2)];
        if q % 2 != 0 {
            scale_block(&mut b, -1.0);
        }
        Some(b)
    }

    /// `g_{ωω'}(z,z')` with `ω` as `+1`/`-1`.
    pub fn entry(&self, w: i8, z: Site, wp: i8, zp: Site) -> Option<C64> {
        self.block(z, zp).map(|b| b[omega_index(w)][omega_index(wp)])
    }

    /// Sets the block for representative `Δ1 = dx` in `0..L`.
    pub fn set(&mut self, dx: i64, r: i64, rp: i64, b: Block) {
        let i = self.index(dx, r, rp);
        self.data[i] = b;
    }

    pub fn raw(&self, dx: i64, r: i64, rp: i64) -> Block {
        self.data[self.index(dx, r, rp)]
    }

    /// Entrywise `a * self + b * other` on the common row range.
    pub fn combine(&self, a: f64, other: &PropagatorTable, b: f64, variant: Variant) -> Result<PropagatorTable> {
        if self.geom != other.geom || self.rows != other.rows {
            return Err(Error::Config("tables have different shapes".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| {
                let mut o = zero_block();
                for i in 0..2 {
                    for j in 0..2 {
                        o[i][j] = a * x[i][j] + b * y[i][j];
                    }
                }
                o
            })
            .collect();
        Ok(PropagatorTable { geom: self.geom, variant, rows: self.rows, data })
    }

    /// Largest entrywise difference on the common row range.
    pub fn max_diff(&self, other: &PropagatorTable) -> f64 {
        let lo = self.rows.0.max(other.rows.0);
        let hi = self.rows.1.min(other.rows.1);
        let mut worst: f64 = 0.0;
        for dx in 0..self.geom.li() {
            for r in lo..=hi {
                for rp in lo..=hi {
                    let a = self.raw(dx, r, rp);
                    let b = other.raw(dx, r, rp);
                    for i in 0..2 {
                        for j in 0..2 {
                            worst = worst.max((a[i][j] - b[i][j]).norm());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flat_map(|b| b.iter().flatten()).map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().flat_map(|b| b.iter().flatten()).map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// All `(z, z', ω, ω', value)` with `x1, x1'` in `1..=L`.
    pub fn entries(&self) -> Vec<(Site, Site, i8, i8, C64)> {
        let l = self.geom.li();
        let mut out = Vec::new();
        for r in self.rows.0..=self.rows.1 {
            for x in 1..=l {
                for rp in self.rows.0..=self.rows.1 {
                    for xp in 1..=l {
                        let z = Site::new(x, r);
                        let zp = Site::new(xp, rp);
                        let b = self.block(z, zp).unwrap();
                        for (i, w) in [1i8, -1].iter().enumerate() {
                            for (j, wp) in [1i8, -1].iter().enumerate() {
                                out.push((z, zp, *w, *wp, b[i][j]));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn omega_index(w: i8) -> usize {
    if w > 0 {
        0
    } else {
        1
    }
}

/// `s_±(y) = (1/L) Σ_k e^{-iky} / (1 + t1 e^{±ik})`.
pub fn s_pm(sign: i8, y: i64, l: usize, t1: f64) -> C64 {
    let mut acc = ZERO;
    for k in k1_values(l) {
        acc += C64::from_polar(1.0, -k * y as f64) / (1.0 + t1 * C64::from_polar(1.0, sign as f64 * k));
    }
    acc / l as f64
}

pub fn massive_propagator(geom: &CylinderGeometry, p: &ModelParams) -> PropagatorTable {
    let mut t = PropagatorTable::zeros(*geom, Variant::Massive, (1, geom.mi()));
    for dx in 0..geom.li() {
        let sp = s_pm(1, dx, geom.l, p.t1);
        let sm = s_pm(-1, dx, geom.l, p.t1);
        for r in 1..=geom.mi() {
            t.set(dx, r, r, [[ZERO, sp], [-sm, ZERO]]);
        }
    }
    t
}

pub fn critical_propagator_fourier(geom: &CylinderGeometry, p: &ModelParams) -> Result<PropagatorTable> {
    let grid = MomentumGrid::new(geom, p)?;
    Ok(grid.table_weighted(Variant::Critical, &|_, _| C64::new(1.0, 0.0)))
}

/// Mixed-representation coefficient matrix `ĉ(k)` of the critical action,
/// indexed by `2(r-1) + (0 for +, 1 for -)`.
fn c_hat_critical(k: f64, m: usize, p: &ModelParams) -> DMatrix<C64> {
    let c = coefficients(k, 0.0, p);
    let mut a = DMatrix::from_element(2 * m, 2 * m, ZERO);
    for r in 0..m {
        a[(2 * r, 2 * r + 1)] += C64::new(-c.b, 0.0);
        if r + 1 < m {
            a[(2 * r, 2 * r + 3)] += C64::new(p.t2, 0.0);
        }
        a[(2 * r, 2 * r)] += -0.5 * I * c.delta;
        a[(2 * r + 1, 2 * r + 1)] += 0.5 * I * c.delta;
    }
    a
}

fn c_hat_massive(k: f64, m: usize, p: &ModelParams) -> DMatrix<C64> {
    let mut a = DMatrix::from_element(2 * m, 2 * m, ZERO);
    for r in 0..m {
        a[(2 * r, 2 * r + 1)] = 1.0 + p.t1 * C64::from_polar(1.0, -k);
    }
    a
}

/// `Â(k) = ĉ(k) - ĉ(-k)^T`.
fn a_hat(c: impl Fn(f64) -> DMatrix<C64>, k: f64) -> DMatrix<C64> {
    c(k) - c(-k).transpose()
}

/// Dimension cap of the direct inversion.
pub const DIRECT_CAP: usize = 8192;

/// `-A_c^{-1}` by inverting the `2M x 2M` block of each `k1`.
pub fn critical_propagator_direct(geom: &CylinderGeometry, p: &ModelParams) -> Result<PropagatorTable> {
    if 2 * geom.n_sites() > DIRECT_CAP {
        return Err(Error::Config(format!("2LM = {} exceeds the direct cap", 2 * geom.n_sites())));
    }
    let m = geom.m;
    let inv: Vec<(f64, DMatrix<C64>)> = k1_values(geom.l)
        .into_iter()
        .map(|k| {
            let a = a_hat(|q| c_hat_critical(q, m, p), k);
            a.try_inverse().map(|x| (k, x)).ok_or_else(|| Error::Singular(format!("A_c block at k1={k}")))
        })
        .collect::<Result<_>>()?;
    let mut t = PropagatorTable::zeros(*geom, Variant::CriticalDirect, (1, geom.mi()));
    let l = geom.l as f64;
    for dx in 0..geom.li() {
        for r in 1..=geom.mi() {
            for rp in 1..=geom.mi() {
                let mut b = zero_block();
                for (k, ai) in &inv {
                    let e = -C64::from_polar(1.0, -k * dx as f64) / l;
                    for w in 0..2 {
                        for wp in 0..2 {
                            b[w][wp] += e * ai[(2 * (r - 1) as usize + w, 2 * (rp - 1) as usize + wp)];
                        }
                    }
                }
                t.set(dx, r, rp, b);
            }
        }
    }
    Ok(t)
}

/// Real-space basis index of `(ω, z)` for `z ∈ Λ`.
pub fn field_index(geom: &CylinderGeometry, w: i8, z: Site) -> usize {
    (((z.x2 - 1) * geom.li() + (z.x1 - 1)) as usize) * 2 + omega_index(w)
}

fn real_space_action(geom: &CylinderGeometry, c: impl Fn(f64) -> DMatrix<C64>) -> Result<SkewMatrix> {
    let l = geom.l;
    let m = geom.m;
    let ks = k1_values(l);
    let blocks: Vec<DMatrix<C64>> = ks.iter().map(|&k| a_hat(&c, k)).collect();
    let n = 2 * l * m;
    let mut full = DMatrix::from_element(n, n, ZERO);
    for x in 1..=geom.li() {
        for xp in 1..=geom.li() {
            let mut blk = DMatrix::from_element(2 * m, 2 * m, ZERO);
            for (k, a) in ks.iter().zip(&blocks) {
                blk += a * C64::from_polar(1.0 / l as f64, k * (xp - x) as f64);
            }
            for r in 1..=geom.mi() {
                for rp in 1..=geom.mi() {
                    for w in 0..2 {
                        for wp in 0..2 {
                            let i = field_index(geom, if w == 0 { 1 } else { -1 }, Site::new(x, r));
                            let j = field_index(geom, if wp == 0 { 1 } else { -1 }, Site::new(xp, rp));
                            full[(i, j)] = blk[(2 * (r - 1) as usize + w, 2 * (rp - 1) as usize + wp)];
                        }
                    }
                }
            }
        }
    }
    SkewMatrix::from_dmatrix_upper(&full)
}

/// Real-space `A_c` with `S_c = (1/2)(φ, A_c φ)`.
pub fn critical_action_matrix(geom: &CylinderGeometry, p: &ModelParams) -> Result<SkewMatrix> {
    real_space_action(geom, |k| c_hat_critical(k, geom.m, p))
}

/// Real-space `A_m` with `S_m = (1/2)(ξ, A_m ξ)`.
pub fn massive_action_matrix(geom: &CylinderGeometry, p: &ModelParams) -> Result<SkewMatrix> {
    real_space_action(geom, |k| c_hat_massive(k, geom.m, p))
}

/// Scalar `g^scal(z) = -(1/(2π t2 (1 - t2))) z1 / |z|^2`.
pub fn g_scal_scalar(z: (f64, f64), t2: f64) -> f64 {
    -z.0 / (2.0 * PI * t2 * (1.0 - t2) * (z.0 * z.0 + z.1 * z.1))
}

/// `Σ_n (-1)^n / (w + n ℓ)` for complex `w`: `(π/ℓ) / sin(π w / ℓ)`.
fn alternating_sum(w: C64, ell: f64) -> C64 {
    (PI / ell) / (PI * w / ell).sin()
}

/// Continuum cylinder propagator of width `ell1` and height `ell2`.
///
/// The horizontal image sum is carried out in closed form; the vertical
/// one is truncated once a shell contributes less than `1e-12`.
pub fn scaling_propagator(z: (f64, f64), zp: (f64, f64), ell1: f64, ell2: f64, p: &ModelParams) -> Result<[[f64; 2]; 2]> {
    if z == zp {
        return Err(Error::CoincidentPoints);
    }
    for q in [z, zp] {
        if !(q.1 > 0.0 && q.1 < ell2) {
            return Err(Error::Config(format!("point {q:?} not in the open cylinder")));
        }
    }
    let (t1, t2) = (p.t1_star, p.t2_star);
    let c = -1.0 / (2.0 * PI * t2 * (1.0 - t2));
    let ellp = ell1 / (1.0 - t2);
    // g1 and g2 summed over horizontal images with sign (-1)^{n1}
    let pair = |d1: f64, d2: f64| -> (f64, f64) {
        let u = d1 / (1.0 - t2);
        let v = d2 / (1.0 - t1);
        let s = alternating_sum(C64::new(u, v), ellp);
        (c * s.re, -c * s.im)
    };
    let d1 = z.0 - zp.0;
    let d2 = z.1 - zp.1;
    let s2 = z.1 + zp.1;
    let shell = |n2: i64| -> [[f64; 2]; 2] {
        let sg = if n2 % 2 == 0 { 1.0 } else { -1.0 };
        let (a1, a2) = pair(d1, d2 + 2.0 * n2 as f64 * ell2);
        let (b1, b2) = pair(d1, s2 + 2.0 * n2 as f64 * ell2);
        let (c1, _) = pair(d1, s2 + 2.0 * (n2 - 1) as f64 * ell2);
        [[sg * (a1 - b1), sg * (a2 + b2)], [sg * (a2 - b2), sg * (-a1 + c1)]]
    };
    let mut out = shell(0);
    let mut n2 = 1;
    loop {
        let mut contrib: f64 = 0.0;
        for s in [n2, -n2] {
            let sh = shell(s);
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += sh[i][j];
                    contrib = contrib.max(sh[i][j].abs());
                }
            }
        }
        if contrib < 1e-12 {
            break;
        }
        n2 += 1;
        if n2 > 10_000 {
            return Err(Error::Numerical("vertical image sum did not converge".into()));
        }
    }
    Ok(out)
}

/// Brute-force truncated image sum over `|n1|,|n2| <= n` (test oracle).
pub fn scaling_propagator_images(z: (f64, f64), zp: (f64, f64), ell1: f64, ell2: f64, p: &ModelParams, n: i64) -> [[f64; 2]; 2] {
    let (t1, t2) = (p.t1_star, p.t2_star);
    let g1 = |a: f64, b: f64| g_scal_scalar((a / (1.0 - t2), b / (1.0 - t1)), t2);
    let g2 = |a: f64, b: f64| g_scal_scalar((b / (1.0 - t1), a / (1.0 - t2)), t2);
    let d1 = z.0 - zp.0;
    let d2 = z.1 - zp.1;
    let s2 = z.1 + zp.1;
    let mut out = [[0.0; 2]; 2];
    for n1 in -n..=n {
        for n2 in -n..=n {
            let sg = if (n1 + n2) % 2 == 0 { 1.0 } else { -1.0 };
            let x = d1 + n1 as f64 * ell1;
            let a = d2 + 2.0 * n2 as f64 * ell2;
            let b = s2 + 2.0 * n2 as f64 * ell2;
            let bm = s2 + 2.0 * (n2 - 1) as f64 * ell2;
            out[0][0] += sg * (g1(x, a) - g1(x, b));
            out[0][1] += sg * (g2(x, a) + g2(x, b));
            out[1][0] += sg * (g2(x, a) - g2(x, b));
            out[1][1] += sg * (-g1(x, a) + g1(x, bm));
        }
    }
    out
}

/// Adaptive Gauss-Kronrod (7/15) quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const XK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_5,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_48,
        0.000000000000000000000000000000000,
    ];
    const WK: [f64; 8] = [
        0.022_935_322_010_529_224,
        0.063_092_092_629_978_56,
        0.104_790_010_322_250_19,
        0.140_653_259_715_525_92,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_42,
        0.204_432_940_075_298_89,
        0.209_482_141_084_727_82,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_64,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];
    fn gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WK[7] * fc;
        let mut g = WG[3] * fc;
        for j in 0..7 {
            let x = h * XK[j];
            let s = f(c - x) + f(c + x);
            k += WK[j] * s;
            if j % 2 == 1 {
                g += WG[j / 2] * s;
            }
        }
        (k * h, ((k - g) * h).abs())
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk(f, a, b);
        if err <= tol || depth > 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// Full infinite-plane critical propagator at displacement `dz`.
///
/// The vertical momentum is integrated in closed form by residues; the
/// remaining one-dimensional integral is done by adaptive quadrature.
pub fn infinite_propagator_full(dz: (i64, i64), p: &ModelParams) -> Result<Block> {
    p.require_critical()?;
    let (t1, t2) = (p.t1, p.t2);
    let kk = 2.0 * (1.0 - t1).powi(2);
    let u = 1.0 - t1 * t1;
    let (z1, n) = (dz.0 as f64, dz.1);
    // returns (I(n) - B I(n+s)) / ... pieces for s = ±1, numerically stable near k1 = 0
    let pieces = move |k: f64| -> (f64, f64, f64) {
        let h = (k / 2.0).sin();
        let one_minus_cos = 2.0 * h * h;
        let a = (1.0 - t2).powi(2) * one_minus_cos / (1.0 - t1).powi(2);
        let s = (a * (a + 2.0)).sqrt();
        let rho = 1.0 + a - s;
        let big_b = t2 * (1.0 + t1 * t1 + 2.0 * t1 * k.cos()) / u;
        let one_minus_b = 2.0 * t1 * t2 * one_minus_cos / u;
        let i_n = rho.powi(n.unsigned_abs() as i32) / s;
        // I(n) - B I(n+1)
        let plus = if n >= 0 {
            rho.powi(n as i32) * (one_minus_b + big_b * (s - a)) / s
        } else {
            rho.powi((-n - 1) as i32) * (rho - big_b) / s
        };
        // I(n) - B I(n-1)
        let minus = if n <= 0 {
            rho.powi((-n) as i32) * (one_minus_b + big_b * (s - a)) / s
        } else {
            rho.powi((n - 1) as i32) * (rho - big_b) / s
        };
        (i_n, plus, minus)
    };
    let tol = 1e-14;
    let gpp = integrate(
        &|k| {
            let (i_n, _, _) = pieces(k);
            -4.0 * t1 * k.sin() * (k * z1).sin() * i_n / kk / (2.0 * PI)
        },
        0.0,
        PI,
        tol,
    );
    let gpm = integrate(&|k| 2.0 * (k * z1).cos() * (-u / kk) * pieces(k).1 / (2.0 * PI), 0.0, PI, tol);
    let gmp = integrate(&|k| 2.0 * (k * z1).cos() * (u / kk) * pieces(k).2 / (2.0 * PI), 0.0, PI, tol);
    Ok([[C64::new(gpp, 0.0), C64::new(gpm, 0.0)], [C64::new(gmp, 0.0), C64::new(-gpp, 0.0)]])
}

/// Infinite-plane propagator with a momentum weight vanishing at `k = 0`,
/// tabulated on `|Δ1|, |Δ2| <= extent`.
#[derive(Clone, Debug)]
pub struct InfiniteTable {
    pub extent: i64,
    pub grid_size: usize,
    data: Vec<Block>,
}

impl InfiniteTable {
    pub fn get(&self, dz: (i64, i64)) -> Option<Block> {
        let e = self.extent;
        if dz.0.abs() > e || dz.1.abs() > e {
            return None;
        }
        let w = (2 * e + 1) as usize;
        Some(self.data[(dz.0 + e) as usize * w + (dz.1 + e) as usize])
    }
}

fn weighted_plane_grid(p: &ModelParams, weight: &(dyn Fn(f64, f64) -> f64 + Sync), n: usize, extent: i64) -> Vec<Block> {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let w = (2 * extent + 1) as usize;
    let mut out = vec![zero_block(); w * w];
    for a in 0..2 {
        for b in 0..2 {
            let mut buf: Vec<C64> = (0..n * n)
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = (idx / n, idx % n);
                    let k1 = 2.0 * PI * i as f64 / n as f64;
                    let k2 = 2.0 * PI * j as f64 / n as f64;
                    let wt = weight(k1, k2);
                    if wt == 0.0 {
                        ZERO
                    } else {
                        ghat(k1, k2, p)[a][b] * wt
                    }
                })
                .collect();
            // rows then columns; both with e^{-i k z}
            for row in buf.chunks_mut(n) {
                fft.process(row);
            }
            let mut col = vec![ZERO; n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = buf[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    buf[i * n + j] = col[i];
                }
            }
            let norm = 1.0 / (n * n) as f64;
            for d1 in -extent..=extent {
                for d2 in -extent..=extent {
                    let i = d1.rem_euclid(n as i64) as usize;
                    let j = d2.rem_euclid(n as i64) as usize;
                    out[(d1 + extent) as usize * w + (d2 + extent) as usize][a][b] = buf[i * n + j] * norm;
                }
            }
        }
    }
    out
}

/// Largest periodic grid tried by `infinite_propagator_weighted`.
pub const MAX_PLANE_GRID: usize = 4096;

/// `∫ d^2k/(2π)^2 e^{-ik·z} ĝ(k) w(k)`, by periodic grids of doubling size
/// until the tabulated values change by less than `tol`.
pub fn infinite_propagator_weighted(
    p: &ModelParams,
    weight: &(dyn Fn(f64, f64) -> f64 + Sync),
    extent: i64,
    tol: f64,
) -> Result<InfiniteTable> {
    p.require_critical()?;
    if weight(0.0, 0.0) != 0.0 {
        return Err(Error::Config("weight must vanish at k = 0; use the full propagator".into()));
    }
    let mut n = 64usize;
    while (n as i64) < 4 * extent + 4 {
        n *= 2;
    }
    let mut prev = weighted_plane_grid(p, weight, n, extent);
    let mut history: Vec<(usize, f64)> = Vec::new();
    loop {
        n *= 2;
        if n > MAX_PLANE_GRID {
            return Err(Error::Numerical(format!("momentum grid did not converge below {tol}; changes per size {history:?}")));
        }
        let next = weighted_plane_grid(p, weight, n, extent);
        let change = prev
            .iter()
            .zip(&next)
            .flat_map(|(x, y)| (0..4).map(move |i| (x[i / 2][i % 2] - y[i / 2][i % 2]).norm()))
            .fold(0.0, f64::max);
        prev = next;
        history.push((n, change));
        if change < tol {
            return Ok(InfiniteTable { extent, grid_size: n, data: prev });
        }
    }
}

/// Antiperiodic sign paired with `per_L`; zero when `y ≡ L/2 (mod L)`.
pub fn s_l(y: i64, l: i64) -> f64 {
    if y.rem_euclid(l) == l / 2 {
        return 0.0;
    }
    let q = (y - per_l(y, l)) / l;
    if q % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
