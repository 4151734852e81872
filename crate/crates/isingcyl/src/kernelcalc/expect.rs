//! Gaussian Grassmann expectations at a single scale: truncated
//! expectations of even monomials and one truncated RG step.

use rayon::prelude::*;

use super::*;
use crate::propagators::PropagatorTable;
use crate::skewlinalg::{cumulant_of, pfaffian, SkewMatrix};

/// Largest number of monomials accepted by [`truncated_expectation`].
pub const MAX_TRUNCATED_ORDER: usize = 12;

/// `⟨∂^{D}φ_{ω,z} ∂^{D'}φ_{ω',z'}⟩` from a propagator table.
fn label_cov(table: &PropagatorTable, a: &FieldLabel, b: &FieldLabel) -> Result<C64> {
    let domain = Domain::Cylinder(table.geom);
    let mut acc = ZERO;
    for (p, cp) in a.points() {
        if domain.is_null_field(a.omega, p) {
            continue;
        }
        for (q, cq) in b.points() {
            if domain.is_null_field(b.omega, q) {
                continue;
            }
            let g = table
                .entry(a.omega, p, b.omega, q)
                .ok_or_else(|| Error::Kernel(format!("rows of {p:?}/{q:?} not covered by the propagator table")))?;
            acc += g * (cp * cq);
        }
    }
    Ok(acc)
}

/// `𝔼(φ(f_1)⋯φ(f_n))` for the concatenated labels.
fn moment(cov: &[Vec<C64>], idx: &[usize]) -> Result<C64> {
    let n = idx.len();
    if n == 0 {
        return Ok(ONE);
    }
    if n % 2 == 1 {
        return Ok(ZERO);
    }
    let m = SkewMatrix::from_upper(n, |i, j| cov[idx[i]][idx[j]])?;
    Ok(pfaffian(&m))
}

/// Joint cumulant `𝔼^T(φ(Q_1); …; φ(Q_s))` of even monomials.
pub fn truncated_expectation(monomials: &[Vec<FieldLabel>], table: &PropagatorTable) -> Result<C64> {
    let s = monomials.len();
    if s == 0 {
        return Err(Error::Config("truncated expectation needs at least one monomial".into()));
    }
    if s > MAX_TRUNCATED_ORDER {
        return Err(Error::Budget(format!("{s} monomials exceed the cap {MAX_TRUNCATED_ORDER}")));
    }
    if let Some(q) = monomials.iter().find(|q| q.len() % 2 == 1) {
        return Err(Error::Kernel(format!("odd monomial of length {}", q.len())));
    }
    if monomials.iter().any(Vec::is_empty) {
        return Ok(if s == 1 { ONE } else { ZERO });
    }
    let flat: Vec<FieldLabel> = monomials.iter().flatten().copied().collect();
    let mut offsets = vec![0usize];
    for q in monomials {
        offsets.push(offsets.last().unwrap() + q.len());
    }
    let n = flat.len();
    let mut cov = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = label_cov(table, &flat[i], &flat[j])?;
            cov[i][j] = v;
            cov[j][i] = -v;
        }
    }
    let mut moments = BTreeMap::new();
    for mask in 1u32..(1u32 << s) {
        let idx: Vec<usize> = (0..s).filter(|i| mask >> i & 1 == 1).flat_map(|i| offsets[i]..offsets[i + 1]).collect();
        moments.insert(mask, moment(&cov, &idx)?);
    }
    cumulant_of(&moments, (1u32 << s) - 1)
}

#[derive(Clone, Copy, Debug)]
pub struct RgOptions {
    pub s_max: usize,
    /// cap on the number of split-term products evaluated
    pub budget: usize,
    /// coefficients at or below this modulus are dropped from the output
    pub prune: f64,
}

impl Default for RgOptions {
    fn default() -> Self {
        RgOptions { s_max: 2, budget: 4_000_000, prune: 0.0 }
    }
}

/// `φ(F)` with `φ -> φ + ϕ` split as `ε φ(E) ϕ(I)`.
struct Split {
    ext: Vec<PlainField>,
    int: Vec<PlainField>,
    edges: Vec<Edge>,
    coef: C64,
}

fn splits(poly: &Polynomial) -> Vec<Split> {
    let mut out = Vec::new();
    for (f, e, c) in poly.iter() {
        let n = f.len();
        for mask in 0u32..(1u32 << n) {
            let mut ext = Vec::new();
            let mut int = Vec::new();
            let mut sign = 1.0;
            for (i, fi) in f.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    if int.len() % 2 == 1 {
                        sign = -sign;
                    }
                    ext.push(*fi);
                } else {
                    int.push(*fi);
                }
            }
            out.push(Split { ext, int, edges: e.to_vec(), coef: c * sign });
        }
    }
    out
}

struct Contractor<'a> {
    table: &'a PropagatorTable,
    domain: Domain,
}

impl Contractor<'_> {
    fn cov(&self, a: PlainField, b: PlainField) -> Result<C64> {
        if self.domain.is_null_field(a.1, a.0) || self.domain.is_null_field(b.1, b.0) {
            return Ok(ZERO);
        }
        self.table
            .entry(a.1, a.0, b.1, b.0)
            .ok_or_else(|| Error::Kernel("field outside the propagator rows".into()))
    }

    fn expect(&self, int: &[PlainField]) -> Result<C64> {
        let n = int.len();
        if n == 0 {
            return Ok(ONE);
        }
        if n % 2 == 1 {
            return Ok(ZERO);
        }
        let mut vals = vec![vec![ZERO; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                vals[i][j] = self.cov(int[i], int[j])?;
            }
        }
        let m = SkewMatrix::from_upper(n, |i, j| vals[i][j])?;
        Ok(pfaffian(&m))
    }

    /// `𝔼_ϕ[V(φ+ϕ)^k]` as a polynomial in `φ` for `k <= 3`.
    fn power_moment(&self, sp: &[Split], k: usize) -> Result<Polynomial> {
        let chunks: Vec<Result<Polynomial>> = (0..sp.len())
            .into_par_iter()
            .map(|a| {
                let mut out = Polynomial::new(self.domain);
                let mut rec = |chosen: &[usize]| -> Result<()> {
                    let mut ext = Vec::new();
                    let mut int = Vec::new();
                    let mut edges = Vec::new();
                    let mut coef = ONE;
                    let mut sign = 1.0;
                    for (pos, &i) in chosen.iter().enumerate() {
                        let s = &sp[i];
                        // move φ(E_i) left past ϕ(I_1)⋯ϕ(I_{i-1})
                        if pos > 0 && s.ext.len() % 2 == 1 && int.len() % 2 == 1 {
                            sign = -sign;
                        }
                        ext.extend_from_slice(&s.ext);
                        int.extend_from_slice(&s.int);
                        edges.extend_from_slice(&s.edges);
                        coef *= s.coef;
                    }
                    if int.len() % 2 == 1 {
                        return Ok(());
                    }
                    let e = self.expect(&int)?;
                    if e != ZERO {
                        out.add_monomial(&ext, &edges, coef * e * sign);
                    }
                    Ok(())
                };
                match k {
                    1 => rec(&[a])?,
                    2 => {
                        for b in 0..sp.len() {
                            rec(&[a, b])?;
                        }
                    }
                    _ => {
                        for b in 0..sp.len() {
                            for c in 0..sp.len() {
                                rec(&[a, b, c])?;
                            }
                        }
                    }
                }
                Ok(out)
            })
            .collect();
        let mut total = Polynomial::new(self.domain);
        for c in chunks {
            total = total.plus(&c?, ONE);
        }
        Ok(total)
    }
}

/// One step `V^{(h)} -> V^{(h-1)}` of the cumulant expansion
/// `log 𝔼_ϕ e^{V(φ+ϕ)}` truncated at order `s_max <= 3`, with the contracted
/// fields integrated against `table`. The field-independent part is dropped.
pub fn rg_step(v: &Kernel, table: &PropagatorTable, opts: RgOptions) -> Result<Kernel> {
    let g = v.domain.cylinder()?;
    if g != table.geom {
        return Err(Error::Kernel("kernel and propagator live on different cylinders".into()));
    }
    if opts.s_max == 0 || opts.s_max > 3 {
        return Err(Error::Budget(format!("s_max = {} outside 1..=3", opts.s_max)));
    }
    let poly = expand_to_plain_fields(v);
    let sp = splits(&poly);
    let work = sp.len().saturating_pow(opts.s_max as u32);
    if work > opts.budget {
        return Err(Error::Budget(format!("{work} split products exceed the budget {}", opts.budget)));
    }
    let c = Contractor { table, domain: v.domain };
    let m1 = c.power_moment(&sp, 1)?;
    let mut out = m1.clone();
    if opts.s_max >= 2 {
        let m2 = c.power_moment(&sp, 2)?;
        let m11 = m1.mul(&m1);
        out = out.plus(&m2.plus(&m11, -ONE), C64::new(0.5, 0.0));
        if opts.s_max >= 3 {
            let m3 = c.power_moment(&sp, 3)?;
            let k3 = m3.plus(&m2.mul(&m1), C64::new(-3.0, 0.0)).plus(&m11.mul(&m1), C64::new(2.0, 0.0));
            out = out.plus(&k3, C64::new(1.0 / 6.0, 0.0));
        }
    }
    let mut k = out.without_constant().pruned(opts.prune).to_kernel()?;
    k.tag = v.tag;
    Ok(k)
}
