//! Antisymmetric matrices, Pfaffians, and moment/cumulant conversion for
//! commuting (even) observables.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Dense antisymmetric matrix of even dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix {
    n: usize,
    a: Vec<C64>,
}

impl SkewMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::Config(format!("skew matrix dimension must be even, got {n}")));
        }
        Ok(SkewMatrix { n, a: vec![C64::new(0.0, 0.0); n * n] })
    }

    /// Builds from the strict upper triangle given by `f(i, j)`, `i < j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            for j in i + 1..n {
                m.set(i, j, f(i, j));
            }
        }
        Ok(m)
    }

    /// Takes the antisymmetric part check-free from a full matrix whose
    /// upper triangle is authoritative.
    pub fn from_dmatrix_upper(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Config("matrix not square".into()));
        }
        Self::from_upper(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }

    /// Sets `A[i][j] = v` and `A[j][i] = -v`.
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(i != j || v == C64::new(0.0, 0.0), "diagonal of a skew matrix is zero");
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = -v;
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Simultaneous row/column permutation: `B[i][j] = A[p[i]][p[j]]`.
    pub fn permuted(&self, p: &[usize]) -> Self {
        let n = self.n;
        let mut b = SkewMatrix { n, a: vec![C64::new(0.0, 0.0); n * n] };
        for i in 0..n {
            for j in 0..n {
                b.a[i * n + j] = self.get(p[i], p[j]);
            }
        }
        b
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn minor(&self, idx: &[usize]) -> Result<Self> {
        Self::from_upper(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }
}

/// Pfaffian by pivoted skew-symmetric Gaussian elimination, `O(n^3)`.
pub fn pfaffian(m: &SkewMatrix) -> C64 {
    let n = m.n;
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut a = m.a.clone();
    let at = |a: &Vec<C64>, i: usize, j: usize| a[i * n + j];
    let mut res = C64::new(1.0, 0.0);
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        let mut big = at(&a, k + 1, k).norm();
        for r in k + 2..n {
            let v = at(&a, r, k).norm();
            if v > big {
                big = v;
                kp = r;
            }
        }
        if kp != k + 1 {
            for c in 0..n {
                a.swap((k + 1) * n + c, kp * n + c);
            }
            for r in 0..n {
                a.swap(r * n + k + 1, r * n + kp);
            }
            res = -res;
        }
        let piv = at(&a, k, k + 1);
        if piv == C64::new(0.0, 0.0) {
            return C64::new(0.0, 0.0);
        }
        res *= piv;
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|j| at(&a, k, j) / piv).collect();
            let col: Vec<C64> = (k + 2..n).map(|i| at(&a, i, k + 1)).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[i * n + j] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    res
}

/// Perfect-matching expansion; the oracle for [`pfaffian`].
pub fn pfaffian_bruteforce(m: &SkewMatrix) -> Result<C64> {
    if m.n > 12 {
        return Err(Error::DimensionTooLarge(m.n));
    }
    fn rec(m: &SkewMatrix, rest: &mut Vec<usize>) -> C64 {
        if rest.is_empty() {
            return C64::new(1.0, 0.0);
        }
        let i = rest.remove(0);
        let mut tot = C64::new(0.0, 0.0);
        for pos in 0..rest.len() {
            let j = rest.remove(pos);
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            tot += m.get(i, j) * sign * rec(m, rest);
            rest.insert(pos, j);
        }
        rest.insert(0, i);
        tot
    }
    let mut idx: Vec<usize> = (0..m.n).collect();
    Ok(rec(m, &mut idx))
}

/// Determinant by LU (used as the `Pf^2` oracle).
pub fn determinant(m: &SkewMatrix) -> C64 {
    m.to_dmatrix().lu().determinant()
}

/// Set partitions of the bits of `mask`, each block as a bitmask.
pub fn set_partitions(mask: u32) -> Vec<Vec<u32>> {
    if mask == 0 {
        return vec![vec![]];
    }
    let first = mask & mask.wrapping_neg();
    let rest = mask ^ first;
    let mut out = Vec::new();
    // block containing `first` is `first | sub` for every submask of `rest`
    let mut sub = rest;
    loop {
        let block = first | sub;
        for mut p in set_partitions(rest ^ sub) {
            p.push(block);
            out.push(p);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Joint cumulants from moments, keyed by bitmask over `0..m`.
///
/// `cum(S) = Σ_π (-1)^{|π|-1} (|π|-1)! Π_{B∈π} mom(B)`.
pub fn moments_to_cumulants(moments: &BTreeMap<u32, C64>, m: usize) -> Result<BTreeMap<u32, C64>> {
    let mut out = BTreeMap::new();
    for s in 1u32..(1u32 << m) {
        out.insert(s, cumulant_of(moments, s)?);
    }
    Ok(out)
}

/// The single cumulant of the subset `s`.
pub fn cumulant_of(moments: &BTreeMap<u32, C64>, s: u32) -> Result<C64> {
    let mut tot = C64::new(0.0, 0.0);
    for p in set_partitions(s) {
        let k = p.len();
        let mut term = C64::new(if k % 2 == 1 { 1.0 } else { -1.0 } * factorial(k - 1), 0.0);
        for b in &p {
            let v = moments.get(b).ok_or_else(|| Error::MissingMoment(bits(*b)))?;
            term *= v;
        }
        tot += term;
    }
    Ok(tot)
}

/// Inverse map: `mom(S) = Σ_π Π_{B∈π} cum(B)`.
pub fn cumulants_to_moments(cumulants: &BTreeMap<u32, C64>, m: usize) -> Result<BTreeMap<u32, C64>> {
    let mut out = BTreeMap::new();
    for s in 1u32..(1u32 << m) {
        let mut tot = C64::new(0.0, 0.0);
        for p in set_partitions(s) {
            let mut term = C64::new(1.0, 0.0);
            for b in &p {
                term *= cumulants.get(b).ok_or_else(|| Error::MissingMoment(bits(*b)))?;
            }
            tot += term;
        }
        out.insert(s, tot);
    }
    Ok(out)
}

fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> SkewMatrix {
        SkewMatrix::from_upper(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn small_cases() {
        let a = SkewMatrix::from_upper(2, |_, _| c(3.5)).unwrap();
        assert_eq!(pfaffian(&a), c(3.5));
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut it = v.iter();
        let a = SkewMatrix::from_upper(4, |_, _| c(*it.next().unwrap())).unwrap();
        // a12 a34 - a13 a24 + a14 a23
        let expect = 1.0 * 6.0 - 2.0 * 5.0 + 3.0 * 4.0;
        assert!((pfaffian(&a) - c(expect)).norm() < 1e-14);
        assert_eq!(pfaffian(&SkewMatrix::zeros(0).unwrap()), c(1.0));
        assert_eq!(pfaffian_bruteforce(&SkewMatrix::zeros(0).unwrap()).unwrap(), c(1.0));
    }

    #[test]
    fn bruteforce_rejects_large() {
        assert!(pfaffian_bruteforce(&SkewMatrix::zeros(14).unwrap()).is_err());
    }

    #[test]
    fn odd_dimension_rejected() {
        assert!(SkewMatrix::zeros(3).is_err());
    }

    #[test]
    fn random_10_squared_is_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_skew(10, &mut rng);
        let p = pfaffian(&a);
        let d = determinant(&a);
        assert!((p * p - d).norm() <= 1e-10 * d.norm());
    }

    #[test]
    fn random_8_matches_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_skew(8, &mut rng);
            assert!((pfaffian(&a) - pfaffian_bruteforce(&a).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn pivot_needed() {
        // zero in the natural first pivot position
        let a = SkewMatrix::from_upper(4, |i, j| if (i, j) == (0, 1) { c(0.0) } else { c((i + 2 * j) as f64) }).unwrap();
        assert!((pfaffian(&a) - pfaffian_bruteforce(&a).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn partitions_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (m, b) in bell.iter().enumerate() {
            assert_eq!(set_partitions((1u32 << m) - 1).len(), *b);
        }
    }

    #[test]
    fn cumulant_small_orders() {
        let mut mo = BTreeMap::new();
        mo.insert(0b01, c(0.3));
        mo.insert(0b10, c(0.7));
        mo.insert(0b11, c(0.5));
        let cu = moments_to_cumulants(&mo, 2).unwrap();
        assert_eq!(cu[&0b01], c(0.3));
        assert!((cu[&0b11] - c(0.5 - 0.21)).norm() < 1e-15);
        mo.remove(&0b10);
        assert!(moments_to_cumulants(&mo, 2).is_err());
    }

    #[test]
    fn third_cumulant_matches_log_generating_function() {
        // independent oracle: three correlated Gaussian-free variables from
        // a discrete distribution; compare with a finite-difference of log E[e^{a.X}]
        let pts = [([1.0, 0.5, -0.2], 0.2), ([0.3, -1.0, 0.8], 0.5), ([-0.7, 0.2, 0.4], 0.3)];
        let mut mo = BTreeMap::new();
        for s in 1u32..8 {
            let v: f64 = pts
                .iter()
                .map(|(x, p)| p * (0..3).filter(|i| s >> i & 1 == 1).map(|i| x[i]).product::<f64>())
                .sum();
            mo.insert(s, c(v));
        }
        let k3 = cumulant_of(&mo, 0b111).unwrap().re;
        let logz = |a: [f64; 3]| -> f64 {
            pts.iter().map(|(x, p)| p * (a[0] * x[0] + a[1] * x[1] + a[2] * x[2]).exp()).sum::<f64>().ln()
        };
        let fd = |h: f64| {
            let mut t = 0.0;
            for s0 in [-1.0, 1.0] {
                for s1 in [-1.0, 1.0] {
                    for s2 in [-1.0, 1.0] {
                        t += s0 * s1 * s2 * logz([s0 * h, s1 * h, s2 * h]);
                    }
                }
            }
            t / (8.0 * h * h * h)
        };
        // two Richardson levels remove the h^2 and h^4 error terms
        let (a, b, c3) = (fd(0.04), fd(0.02), fd(0.01));
        let r1 = (4.0 * b - a) / 3.0;
        let r2 = (4.0 * c3 - b) / 3.0;
        let fd = (16.0 * r2 - r1) / 15.0;
        assert!((fd - k3).abs() < 1e-9, "{fd} vs {k3}");
    }
}
