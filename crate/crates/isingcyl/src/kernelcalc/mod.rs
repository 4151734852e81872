//! Kernels of effective potentials in the Grassmann fields `φ_{ω,z}` and the
//! commuting probes `A_x`, together with the localization calculus acting on
//! them.
//!
//! A [`Kernel`] stores `W(Ψ, x)` for ordered multilabels `Ψ` and ordered edge
//! tuples `x`. Coefficients are complex: the reflection phases `±i` are kept
//! exactly and symmetric combinations come out real.

mod couplings;
mod expect;
mod localize;
mod norms;
mod random;

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CylinderGeometry, Direction, Edge, Site};

pub use couplings::*;
pub use expect::*;
pub use localize::*;
pub use norms::*;
pub use random::*;

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default tolerance of [`kernels_equivalent`].
pub const EQUIV_TOL: f64 = 1e-12;

/// Where a kernel lives. `Plane` kernels are translation invariant and are
/// stored by one representative per translation class: the first field
/// (or, without fields, the first edge base) sits at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Cylinder(CylinderGeometry),
    Plane,
}

impl Domain {
    pub fn geometry(&self) -> Option<CylinderGeometry> {
        match self {
            Domain::Cylinder(g) => Some(*g),
            Domain::Plane => None,
        }
    }

    fn cylinder(&self) -> Result<CylinderGeometry> {
        self.geometry().ok_or_else(|| Error::Kernel("operation needs a cylinder kernel".into()))
    }

    /// Field site reduced into `1..=L` and the antiperiodic sign.
    pub fn wrap(&self, z: Site) -> (Site, f64) {
        match self {
            Domain::Cylinder(g) => g.wrap(z),
            Domain::Plane => (z, 1.0),
        }
    }

    pub fn reduce_edge(&self, e: Edge) -> Edge {
        match self {
            Domain::Cylinder(g) => Edge::new(g.reduce(e.base), e.dir),
            Domain::Plane => e,
        }
    }

    pub fn in_closure(&self, z: Site) -> bool {
        match self {
            Domain::Cylinder(g) => g.in_closure(z),
            Domain::Plane => true,
        }
    }

    pub fn in_interior(&self, z: Site) -> bool {
        match self {
            Domain::Cylinder(g) => g.in_bulk(z),
            Domain::Plane => true,
        }
    }

    /// `φ_+` on row `0` and `φ_-` on row `M+1` vanish.
    pub fn is_null_field(&self, omega: i8, z: Site) -> bool {
        match self {
            Domain::Cylinder(g) => (omega > 0 && z.x2 == 0) || (omega < 0 && z.x2 == g.mi() + 1),
            Domain::Plane => false,
        }
    }

    /// Representative of `z` nearest to `r` horizontally (no wrap on ties)
    /// together with the sign relating `φ` at the lifted point to `φ` at `z`.
    pub fn lift(&self, r: Site, z: Site) -> (Site, f64) {
        match self {
            Domain::Cylinder(g) => {
                let l = g.li();
                let (zr, _) = g.wrap(z);
                let mut x = zr.x1;
                while 2 * (x - r.x1) > l {
                    x -= l;
                }
                while 2 * (r.x1 - x) > l {
                    x += l;
                }
                let lifted = Site::new(x, z.x2);
                (lifted, g.wrap(lifted).1)
            }
            Domain::Plane => (z, 1.0),
        }
    }

    fn theta_site(&self, j: usize, z: Site) -> Site {
        match (self, j) {
            (Domain::Cylinder(g), 1) => Site::new(g.li() + 1 - z.x1, z.x2),
            (Domain::Cylinder(g), _) => Site::new(z.x1, g.mi() + 1 - z.x2),
            (Domain::Plane, 1) => Site::new(-z.x1, z.x2),
            (Domain::Plane, _) => Site::new(z.x1, -z.x2),
        }
    }

    fn theta_edge(&self, j: usize, e: &Edge) -> Edge {
        match self {
            Domain::Cylinder(g) => {
                if j == 1 {
                    g.theta1_edge(e)
                } else {
                    g.theta2_edge(e)
                }
            }
            Domain::Plane => {
                let b = self.theta_site(j, e.base);
                if e.dir.index() == j {
                    let shift = if j == 1 { (-1, 0) } else { (0, -1) };
                    Edge::new(b.shift(shift.0, shift.1), e.dir)
                } else {
                    Edge::new(b, e.dir)
                }
            }
        }
    }

    /// Induced action of the reflection `Θ_j` on a label: the new label and
    /// the coefficient picked up (`iω` or `i`, times `(-1)^{D_j}`).
    pub fn reflect_label(&self, j: usize, f: &FieldLabel) -> (FieldLabel, C64) {
        let dj = f.d[j - 1] as i64;
        let t = self.theta_site(j, f.z);
        let (z, omega, phase) = if j == 1 {
            (t.shift(-dj, 0), f.omega, I * f.omega as f64)
        } else {
            (t.shift(0, -dj), -f.omega, I)
        };
        let sign = if dj % 2 == 1 { -1.0 } else { 1.0 };
        (FieldLabel { omega, d: f.d, z }, phase * sign)
    }
}

/// `(ω, D, z)`: the field `∂^D φ_{ω,z}` with right differences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldLabel {
    pub omega: i8,
    pub d: [u8; 2],
    pub z: Site,
}

impl FieldLabel {
    pub const fn new(omega: i8, d: [u8; 2], z: Site) -> Self {
        FieldLabel { omega, d, z }
    }

    pub const fn plain(omega: i8, z: Site) -> Self {
        FieldLabel { omega, d: [0, 0], z }
    }

    pub fn order(&self) -> usize {
        (self.d[0] + self.d[1]) as usize
    }

    /// `z + D`.
    pub fn tip(&self) -> Site {
        self.z.shift(self.d[0] as i64, self.d[1] as i64)
    }

    pub fn at(&self, z: Site) -> Self {
        FieldLabel { z, ..*self }
    }

    pub fn with_extra(&self, j: usize) -> Self {
        let mut d = self.d;
        d[j - 1] += 1;
        FieldLabel { d, ..*self }
    }

    /// Expansion into unreduced point evaluations.
    pub fn points(&self) -> Vec<(Site, f64)> {
        let binom = |n: u8| -> Vec<(i64, f64)> {
            match n {
                0 => vec![(0, 1.0)],
                1 => vec![(0, -1.0), (1, 1.0)],
                _ => vec![(0, 1.0), (1, -2.0), (2, 1.0)],
            }
        };
        let mut out = Vec::new();
        for (a, ca) in binom(self.d[0]) {
            for (b, cb) in binom(self.d[1]) {
                out.push((self.z.shift(a, b), ca * cb));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub n: usize,
    pub p: usize,
    pub m: usize,
}

impl Sector {
    pub const fn new(n: usize, p: usize, m: usize) -> Self {
        Sector { n, p, m }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelTag {
    #[default]
    Full,
    Bulk,
    Edge,
}

type Key = (Vec<FieldLabel>, Vec<Edge>);

#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub domain: Domain,
    pub tag: KernelTag,
    pub antisymmetrized: bool,
    pub symmetrized: bool,
    coeffs: BTreeMap<Key, C64>,
}

fn sector_of(labels: &[FieldLabel], edges: &[Edge]) -> Sector {
    Sector::new(labels.len(), labels.iter().map(FieldLabel::order).sum(), edges.len())
}

impl Kernel {
    pub fn new(domain: Domain) -> Self {
        Kernel { domain, tag: KernelTag::Full, antisymmetrized: false, symmetrized: false, coeffs: BTreeMap::new() }
    }

    fn empty_like(&self) -> Self {
        Kernel::new(self.domain)
    }

    fn normalize(&self, labels: &[FieldLabel], edges: &[Edge]) -> Result<(Key, f64)> {
        if !labels.len().is_multiple_of(2) {
            return Err(Error::Kernel(format!("odd number of fields ({})", labels.len())));
        }
        let mut sign = 1.0;
        let mut ls = Vec::with_capacity(labels.len());
        for f in labels {
            if f.omega != 1 && f.omega != -1 {
                return Err(Error::Kernel(format!("omega must be +1 or -1, got {}", f.omega)));
            }
            if f.order() > 2 {
                return Err(Error::Kernel(format!("derivative order {:?} exceeds 2", f.d)));
            }
            let (z, s) = self.domain.wrap(f.z);
            if !self.domain.in_closure(z) || !self.domain.in_closure(f.at(z).tip()) {
                return Err(Error::Kernel(format!("label {f:?} leaves the closure")));
            }
            sign *= s;
            ls.push(f.at(z));
        }
        let mut es: Vec<Edge> = edges.iter().map(|e| self.domain.reduce_edge(*e)).collect();
        if let Domain::Cylinder(g) = self.domain {
            for e in &es {
                if !g.edge_is_valid(e) {
                    return Err(Error::Kernel(format!("edge {e:?} not in the cylinder")));
                }
            }
        }
        if self.domain == Domain::Plane {
            let o = ls.first().map(|f| f.z).or_else(|| es.first().map(|e| e.base));
            if let Some(o) = o {
                for f in ls.iter_mut() {
                    f.z = f.z.shift(-o.x1, -o.x2);
                }
                for e in es.iter_mut() {
                    e.base = e.base.shift(-o.x1, -o.x2);
                }
            }
        }
        Ok(((ls, es), sign))
    }

    /// Adds `c` to the coefficient of `(labels, edges)`; sites may be given
    /// unreduced and pick up the antiperiodic sign.
    pub fn add(&mut self, labels: &[FieldLabel], edges: &[Edge], c: C64) -> Result<()> {
        let (key, s) = self.normalize(labels, edges)?;
        if c == ZERO {
            return Ok(());
        }
        let slot = self.coeffs.entry(key).or_insert(ZERO);
        *slot += c * s;
        Ok(())
    }

    pub fn add_real(&mut self, labels: &[FieldLabel], edges: &[Edge], c: f64) -> Result<()> {
        self.add(labels, edges, C64::new(c, 0.0))
    }

    pub fn get(&self, labels: &[FieldLabel], edges: &[Edge]) -> Result<C64> {
        let (key, s) = self.normalize(labels, edges)?;
        Ok(self.coeffs.get(&key).map_or(ZERO, |c| c * s))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[FieldLabel], &[Edge], C64)> + '_ {
        self.coeffs.iter().map(|((l, e), c)| (l.as_slice(), e.as_slice(), *c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn sectors(&self) -> BTreeSet<Sector> {
        self.iter().map(|(l, e, _)| sector_of(l, e)).collect()
    }

    pub fn sector(&self, s: Sector) -> Kernel {
        self.filter(|sec| sec == s)
    }

    fn filter(&self, keep: impl Fn(Sector) -> bool) -> Kernel {
        let mut out = self.clone();
        out.coeffs.retain(|(l, e), _| keep(sector_of(l, e)));
        out
    }

    pub fn without_sectors(&self, drop: &[Sector]) -> Kernel {
        self.filter(|s| !drop.contains(&s))
    }

    pub fn scaled(&self, c: C64) -> Kernel {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= c;
        }
        out
    }

    /// `self + c * other`.
    pub fn plus(&self, other: &Kernel, c: f64) -> Result<Kernel> {
        if self.domain != other.domain {
            return Err(Error::Kernel("kernels live on different domains".into()));
        }
        let mut out = self.clone();
        out.antisymmetrized &= other.antisymmetrized;
        out.symmetrized &= other.symmetrized;
        for (k, v) in &other.coeffs {
            *out.coeffs.entry(k.clone()).or_insert(ZERO) += v * c;
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0, |a, c| a.max(c.norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.coeffs.values().fold(0.0, |a, c| a.max(c.im.abs()))
    }

    /// True when every label and its derivative tip lie in the open cylinder.
    pub fn is_interior(&self) -> bool {
        self.iter()
            .all(|(l, _, _)| l.iter().all(|f| self.domain.in_interior(f.z) && self.domain.in_interior(f.tip())))
    }

    /// Horizontal translation by `s` (cylinder only; fields wrap antiperiodically).
    pub fn translated(&self, s: i64) -> Result<Kernel> {
        self.domain.cylinder()?;
        let mut out = self.empty_like();
        for (l, e, c) in self.iter() {
            let ls: Vec<FieldLabel> = l.iter().map(|f| f.at(f.z.shift(s, 0))).collect();
            let es: Vec<Edge> = e.iter().map(|x| Edge::new(x.base.shift(s, 0), x.dir)).collect();
            out.add(&ls, &es, c)?;
        }
        out.tag = self.tag;
        Ok(out)
    }

    /// Kernel of `V(Θ_j φ)`.
    pub fn reflected(&self, j: usize) -> Result<Kernel> {
        let mut out = self.empty_like();
        for (l, e, c) in self.iter() {
            let mut coef = c;
            let mut ls = Vec::with_capacity(l.len());
            for f in l {
                let (g, ph) = self.domain.reflect_label(j, f);
                coef *= ph;
                ls.push(g);
            }
            let es: Vec<Edge> = e.iter().map(|x| self.domain.theta_edge(j, x)).collect();
            out.add(&ls, &es, coef)?;
        }
        out.tag = self.tag;
        Ok(out)
    }

    /// Average over all orderings of the field labels with the permutation sign.
    pub fn antisymmetrized(&self) -> Result<Kernel> {
        let mut out = self.empty_like();
        for (l, e, c) in self.iter() {
            let perms = permutations(l.len());
            let w = 1.0 / perms.len() as f64;
            for (p, sgn) in &perms {
                let ls: Vec<FieldLabel> = p.iter().map(|&i| l[i]).collect();
                out.add(&ls, e, c * (sgn * w))?;
            }
        }
        out.tag = self.tag;
        out.antisymmetrized = true;
        out.symmetrized = self.symmetrized;
        Ok(out)
    }

    /// `𝒜`: antisymmetrization and average over `{1, Θ1, Θ2, Θ1Θ2}`.
    pub fn symmetrized(&self) -> Result<Kernel> {
        let t1 = self.reflected(1)?;
        let t2 = self.reflected(2)?;
        let t12 = t2.reflected(1)?;
        let avg = self.plus(&t1, 1.0)?.plus(&t2, 1.0)?.plus(&t12, 1.0)?.scaled(C64::new(0.25, 0.0));
        let mut out = avg.antisymmetrized()?;
        out.symmetrized = true;
        out.tag = self.tag;
        Ok(out)
    }

    /// Drops coefficients with modulus at most `tol`.
    pub fn pruned(&self, tol: f64) -> Kernel {
        let mut out = self.clone();
        out.coeffs.retain(|_, c| c.norm() > tol);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let repr = KernelRepr {
            domain: self.domain,
            tag: self.tag,
            antisymmetrized: self.antisymmetrized,
            symmetrized: self.symmetrized,
            sectors: self.sectors().into_iter().collect(),
            entries: self
                .iter()
                .map(|(l, e, c)| EntryRepr { labels: l.to_vec(), edges: e.to_vec(), re: c.re, im: c.im })
                .collect(),
        };
        serde_json::to_string(&repr).map_err(|e| Error::Kernel(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Kernel> {
        let repr: KernelRepr = serde_json::from_str(s).map_err(|e| Error::Kernel(e.to_string()))?;
        let mut k = Kernel::new(repr.domain);
        for e in repr.entries {
            k.add(&e.labels, &e.edges, C64::new(e.re, e.im))?;
        }
        k.tag = repr.tag;
        k.antisymmetrized = repr.antisymmetrized;
        k.symmetrized = repr.symmetrized;
        Ok(k)
    }
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    domain: Domain,
    tag: KernelTag,
    antisymmetrized: bool,
    symmetrized: bool,
    sectors: Vec<Sector>,
    entries: Vec<EntryRepr>,
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    labels: Vec<FieldLabel>,
    edges: Vec<Edge>,
    re: f64,
    im: f64,
}

/// All permutations of `0..n` with their signs (Heap's algorithm).
pub(crate) fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![(a.clone(), 1.0)];
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            sign = -sign;
            out.push((a.clone(), sign));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Plain field `(z, ω)`; monomials keep these sorted.
pub type PlainField = (Site, i8);

/// Canonical form of a potential: ordered plain-field monomials times probe
/// monomials, each with a single coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub domain: Domain,
    terms: BTreeMap<(Vec<PlainField>, Vec<Edge>), C64>,
}

/// Sorts `fields` in place and returns the permutation sign, or `None` when
/// a field repeats.
pub(crate) fn sort_fields(fields: &mut [PlainField]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..fields.len() {
        let mut j = i;
        while j > 0 && fields[j - 1] > fields[j] {
            fields.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if fields.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl Polynomial {
    pub fn new(domain: Domain) -> Self {
        Polynomial { domain, terms: BTreeMap::new() }
    }

    /// Adds `c φ(fields) A(edges)` with unreduced sites; null boundary fields
    /// and repeated fields kill the monomial.
    pub fn add_monomial(&mut self, fields: &[PlainField], edges: &[Edge], c: C64) {
        let mut sign = 1.0;
        let mut fs = Vec::with_capacity(fields.len());
        for &(z, w) in fields {
            let (z, s) = self.domain.wrap(z);
            if self.domain.is_null_field(w, z) {
                return;
            }
            sign *= s;
            fs.push((z, w));
        }
        let Some(ps) = sort_fields(&mut fs) else {
            return;
        };
        let mut es: Vec<Edge> = edges.iter().map(|e| self.domain.reduce_edge(*e)).collect();
        es.sort_unstable();
        if self.domain == Domain::Plane {
            let o = fs.first().map(|f| f.0).or_else(|| es.first().map(|e| e.base));
            if let Some(o) = o {
                for f in fs.iter_mut() {
                    f.0 = f.0.shift(-o.x1, -o.x2);
                }
                for e in es.iter_mut() {
                    e.base = e.base.shift(-o.x1, -o.x2);
                }
                es.sort_unstable();
            }
        }
        *self.terms.entry((fs, es)).or_insert(ZERO) += c * (sign * ps);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[PlainField], &[Edge], C64)> + '_ {
        self.terms.iter().map(|((f, e), c)| (f.as_slice(), e.as_slice(), *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, fields: &[PlainField], edges: &[Edge]) -> C64 {
        let mut p = Polynomial::new(self.domain);
        p.add_monomial(fields, edges, ONE);
        match p.terms.into_iter().next() {
            Some((k, s)) => self.terms.get(&k).map_or(ZERO, |c| c * s),
            None => ZERO,
        }
    }

    pub fn plus(&self, other: &Polynomial, c: C64) -> Polynomial {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            *out.terms.entry(k.clone()).or_insert(ZERO) += v * c;
        }
        out
    }

    pub fn scaled(&self, c: C64) -> Polynomial {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.norm()))
    }

    /// Product of two even polynomials (edges multiply as commuting variables).
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::new(self.domain);
        for ((fa, ea), ca) in &self.terms {
            for ((fb, eb), cb) in &other.terms {
                let fields: Vec<PlainField> = fa.iter().chain(fb.iter()).copied().collect();
                let edges: Vec<Edge> = ea.iter().chain(eb.iter()).copied().collect();
                out.add_monomial(&fields, &edges, ca * cb);
            }
        }
        out
    }

    /// Drops the monomials without fields.
    pub fn without_constant(&self) -> Polynomial {
        let mut out = self.clone();
        out.terms.retain(|(f, _), _| !f.is_empty());
        out
    }

    pub fn only_sourceless(&self) -> Polynomial {
        let mut out = self.clone();
        out.terms.retain(|(_, e), _| e.is_empty());
        out
    }

    pub fn pruned(&self, tol: f64) -> Polynomial {
        let mut out = self.clone();
        out.terms.retain(|_, c| c.norm() > tol);
        out
    }

    /// One entry per monomial, fields in canonical order.
    pub fn to_kernel(&self) -> Result<Kernel> {
        let mut k = Kernel::new(self.domain);
        for (f, e, c) in self.iter() {
            let ls: Vec<FieldLabel> = f.iter().map(|&(z, w)| FieldLabel::plain(w, z)).collect();
            k.add(&ls, e, c)?;
        }
        Ok(k)
    }
}

/// Expands derivative labels into point evaluations, drops null boundary
/// fields and collects the canonical monomials.
pub fn expand_to_plain_fields(k: &Kernel) -> Polynomial {
    let mut out = Polynomial::new(k.domain);
    for (labels, edges, c) in k.iter() {
        let exps: Vec<Vec<(Site, f64)>> = labels.iter().map(FieldLabel::points).collect();
        let mut idx = vec![0usize; labels.len()];
        loop {
            let mut coef = c;
            let mut fields = Vec::with_capacity(labels.len());
            for (j, f) in labels.iter().enumerate() {
                let (z, w) = exps[j][idx[j]];
                coef *= w;
                fields.push((z, f.omega));
            }
            out.add_monomial(&fields, edges, coef);
            let mut j = 0;
            while j < idx.len() {
                idx[j] += 1;
                if idx[j] < exps[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == idx.len() {
                break;
            }
        }
    }
    out
}

/// Largest coefficient of the difference of the expanded forms.
pub fn equivalence_residual(a: &Kernel, b: &Kernel) -> Result<f64> {
    if a.domain != b.domain {
        return Err(Error::Kernel("kernels live on different domains".into()));
    }
    Ok(expand_to_plain_fields(a).plus(&expand_to_plain_fields(b), -ONE).max_abs())
}

pub fn kernels_equivalent(a: &Kernel, b: &Kernel) -> bool {
    equivalence_residual(a, b).map(|r| r <= EQUIV_TOL).unwrap_or(false)
}


pub(crate) fn dir_of(j: usize) -> Direction {
    if j == 1 {
        Direction::Horizontal
    } else {
        Direction::Vertical
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyl(l: usize, m: usize) -> Domain {
        Domain::Cylinder(CylinderGeometry::new(l, m).unwrap())
    }

    #[test]
    fn permutation_signs() {
        let ps = permutations(3);
        assert_eq!(ps.len(), 6);
        let pos = ps.iter().filter(|p| p.1 > 0.0).count();
        assert_eq!(pos, 3);
        for (p, s) in ps {
            let mut inv = 0;
            for i in 0..3 {
                for j in i + 1..3 {
                    if p[i] > p[j] {
                        inv += 1;
                    }
                }
            }
            assert_eq!(s, if inv % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn label_points() {
        let f = FieldLabel::new(1, [1, 1], Site::new(2, 2));
        let pts = f.points();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts.iter().map(|p| p.1).sum::<f64>(), 0.0);
    }

    #[test]
    fn lift_prefers_no_wrap_on_ties() {
        let d = cyl(8, 3);
        assert_eq!(d.lift(Site::new(1, 1), Site::new(5, 1)), (Site::new(5, 1), 1.0));
        assert_eq!(d.lift(Site::new(1, 1), Site::new(8, 1)), (Site::new(0, 1), -1.0));
        assert_eq!(d.lift(Site::new(8, 1), Site::new(2, 1)), (Site::new(10, 1), -1.0));
    }

    #[test]
    fn reflections_are_involutions_on_even_kernels() {
        let d = cyl(6, 4);
        let mut k = Kernel::new(d);
        k.add_real(&[FieldLabel::new(1, [1, 0], Site::new(2, 1)), FieldLabel::new(-1, [0, 1], Site::new(6, 3))], &[], 0.7)
            .unwrap();
        for j in [1, 2] {
            let back = k.reflected(j).unwrap().reflected(j).unwrap();
            assert_eq!(back, k);
        }
    }

    #[test]
    fn json_roundtrip() {
        let mut k = Kernel::new(cyl(4, 2));
        k.add(
            &[FieldLabel::plain(1, Site::new(1, 1)), FieldLabel::plain(-1, Site::new(2, 1))],
            &[Edge::new(Site::new(4, 1), Direction::Horizontal)],
            C64::new(0.5, -0.25),
        )
        .unwrap();
        let back = Kernel::from_json(&k.to_json().unwrap()).unwrap();
        assert_eq!(back, k);
    }
}
