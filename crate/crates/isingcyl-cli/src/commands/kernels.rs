use std::collections::BTreeMap;

use isingcyl::kernelcalc::*;
use isingcyl::multiscale::{Multiscale, ScaleSel};
use isingcyl::propagators::{critical_action_matrix, critical_propagator_fourier, C64};
use isingcyl::skewlinalg::{pfaffian_bruteforce, SkewMatrix};
use isingcyl::{CylinderGeometry, Direction, ModelParams, PropagatorTable, Site};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::{geometry, KernelsArgs, Resolved};
use crate::output::{Check, Outcome};
use crate::{Failure, Result};

pub const TOLERANCES: &[(&str, f64)] =
    &[("cancellation", 1e-14), ("decomposition", 1e-12), ("expectation", 1e-9), ("symmetry", 1e-12), ("vertex", 1e-12)];

pub struct Settings {
    pub count: usize,
    pub battery: usize,
    pub kappa: f64,
    pub eps: f64,
    pub rg: CylinderGeometry,
    pub seed: u64,
}

fn spec(sectors: &[(usize, usize, usize)], interior: bool) -> RandomKernelSpec {
    RandomKernelSpec {
        sectors: sectors.iter().map(|&(n, p, m)| Sector::new(n, p, m)).collect(),
        entries_per_sector: 3,
        spread: 2,
        interior,
    }
}

fn res(a: &Kernel, b: &Kernel) -> Result<f64> {
    Ok(equivalence_residual(a, b)?)
}

fn sum(a: isingcyl::Result<Kernel>, b: isingcyl::Result<Kernel>) -> Result<Kernel> {
    Ok(a?.plus(&b?, 1.0)?)
}

pub struct Cancellations {
    pub pauli: f64,
    pub edge: f64,
    pub bulk_decomposition: f64,
    pub edge_decomposition: f64,
    pub source_decomposition: f64,
}

pub fn cancellations(g: &CylinderGeometry, count: usize, rng: &mut ChaCha8Rng) -> Result<Cancellations> {
    let zero = Kernel::new(Domain::Cylinder(*g));
    let mut c = Cancellations { pauli: 0.0, edge: 0.0, bulk_decomposition: 0.0, edge_decomposition: 0.0, source_decomposition: 0.0 };
    for _ in 0..count {
        let v = random_kernel(g, &spec(&[(4, 0, 0)], true), rng)?;
        c.pauli = c.pauli.max(res(&l_b(&v)?, &zero)?);
        let v = random_kernel(g, &spec(&[(2, 0, 0), (2, 1, 0), (4, 0, 0)], false), rng)?;
        c.edge = c.edge.max(res(&l_e(&v)?, &zero)?);
    }
    for _ in 0..count.div_ceil(10) {
        let v = random_symmetric_kernel(g, &spec(&[(2, 0, 0), (2, 1, 0), (2, 2, 0), (4, 0, 0), (4, 1, 0)], true), rng)?;
        c.bulk_decomposition = c.bulk_decomposition.max(res(&v, &sum(l_b(&v), r_b(&v))?)?);
        let v = random_symmetric_kernel(g, &spec(&[(2, 0, 0), (2, 1, 0), (2, 2, 0), (4, 0, 0)], false), rng)?;
        c.edge_decomposition = c.edge_decomposition.max(res(&v, &sum(l_e(&v), r_e(&v))?)?);
        let b = random_symmetric_kernel(g, &spec(&[(2, 0, 1), (2, 1, 1), (4, 0, 1)], true), rng)?;
        c.source_decomposition = c.source_decomposition.max(res(&b, &sum(l_b_source(&b), r_b_source(&b))?)?);
    }
    Ok(c)
}

#[derive(Default)]
pub struct Inequality {
    pub violations: usize,
    pub checked: usize,
    pub min_margin: f64,
}

impl Inequality {
    fn record(&mut self, lhs: f64, rhs: f64) {
        if self.checked == 0 || rhs - lhs < self.min_margin {
            self.min_margin = rhs - lhs;
        }
        self.checked += 1;
        if lhs > rhs {
            self.violations += 1;
        }
    }
}

/// The four localization norm bounds on `n` random kernels each.
pub fn norm_battery(g: &CylinderGeometry, n: usize, kappa: f64, eps: f64, rng: &mut ChaCha8Rng) -> Result<BTreeMap<&'static str, Inequality>> {
    let w = |k: &Kernel, n, p, f, kappa| -> Result<f64> { Ok(weighted_norm(k, n, p, f, kappa)?) };
    let mut out: BTreeMap<&'static str, Inequality> = BTreeMap::new();
    for _ in 0..n {
        let v = random_symmetric_kernel(g, &spec(&[(2, 0, 0), (2, 1, 0), (2, 2, 0)], true), rng)?;
        let r = r_b(&v)?;
        let rhs = w(&v, 2, 2, NormFlavor::Bulk, kappa)?
            + w(&v, 2, 1, NormFlavor::Bulk, kappa + eps)? / eps
            + w(&v, 2, 0, NormFlavor::Bulk, kappa + 2.0 * eps)? / (eps * eps);
        out.entry("quadratic_bulk").or_default().record(w(&r, 2, 2, NormFlavor::Bulk, kappa)?, rhs);

        let v = random_symmetric_kernel(g, &spec(&[(4, 0, 0), (4, 1, 0)], true), rng)?;
        let r = r_b(&v)?;
        let rhs = w(&v, 4, 1, NormFlavor::Bulk, kappa)? + 3.0 * w(&v, 4, 0, NormFlavor::Bulk, kappa + eps)? / eps;
        out.entry("quartic_bulk").or_default().record(w(&r, 4, 1, NormFlavor::Bulk, kappa)?, rhs);

        let v = random_symmetric_kernel(g, &spec(&[(2, 0, 0), (2, 1, 0)], false), rng)?;
        let r = r_e(&v)?;
        let rhs = w(&v, 2, 1, NormFlavor::Edge, kappa)? + 2.0 * w(&v, 2, 0, NormFlavor::Edge, kappa + eps)? / eps;
        out.entry("edge").or_default().record(w(&r, 2, 1, NormFlavor::Edge, kappa)?, rhs);

        let b = random_symmetric_kernel(g, &spec(&[(2, 0, 1), (2, 1, 1)], true), rng)?;
        let r = r_b_source(&b)?;
        for x in probe_tuples(&r) {
            let lhs = source_norm_at(&r, 2, 1, &x, false, kappa)?;
            let rhs = source_norm_at(&b, 2, 1, &x, false, kappa)? + 2.0 * source_norm_at(&b, 2, 0, &x, false, kappa + eps)? / eps;
            out.entry("source").or_default().record(lhs, rhs);
        }
    }
    Ok(out)
}

/// `(Z1, Z2)` read off the free source kernel and their deviation from `(2 t2*, 1 - t2*^2)`.
pub fn vertex_constants(p: &ModelParams) -> Result<(VertexRenorm, f64)> {
    let b = sum(free_source_kernel(p, 1, 1e-18), free_source_kernel(p, 2, 1e-18))?;
    let z = extract_vertex_renorm(&b, 0)?;
    let dev = (z.z1 - 2.0 * p.t2_star).abs().max((z.z2 - (1.0 - p.t2_star * p.t2_star)).abs());
    Ok((z, dev))
}

/// Free theory with vanishing counterterm and vertical energy sources.
pub fn free_theory_step(g: &CylinderGeometry, p: &ModelParams, t: &PropagatorTable) -> Result<(usize, usize, usize)> {
    let a = critical_action_matrix(g, p)?;
    let bare = ModelParams { t1_star: p.t1, t2_star: p.t2, ..*p };
    let a_star = critical_action_matrix(g, &bare.dressed())?;
    let mut v = action_kernel(g, &a, 1.0)?.plus(&action_kernel(g, &a_star, 1.0)?, -1.0)?.pruned(0.0);
    for x in g.edges().into_iter().filter(|x| x.dir == Direction::Vertical) {
        v.add_real(&[FieldLabel::plain(1, x.base), FieldLabel::plain(-1, x.tip())], &[x], 1.0 - p.t2 * p.t2)?;
    }
    let out = rg_step(&v, t, RgOptions { s_max: 2, ..Default::default() })?;
    let sourceless = out.iter().filter(|(_, x, _)| x.is_empty()).count();
    Ok((v.len(), out.len(), sourceless))
}

pub fn symmetry_residual(g: &CylinderGeometry, t: &PropagatorTable, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = RandomKernelSpec { entries_per_sector: 1, spread: 1, ..spec(&[(2, 0, 0), (4, 0, 0)], true) };
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let v = random_invariant_kernel(g, &s, rng)?;
        let out = rg_step(&v, t, RgOptions { s_max: 2, ..Default::default() })?;
        let scale = out.max_abs().max(1.0);
        worst = worst.max(res(&out.translated(1)?, &out)? / scale);
        for j in [1, 2] {
            worst = worst.max(res(&out.reflected(j)?, &out)? / scale);
        }
    }
    Ok(worst)
}

fn label_cov(t: &PropagatorTable, a: &FieldLabel, b: &FieldLabel) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (p, cp) in a.points() {
        for (q, cq) in b.points() {
            acc += t.entry(a.omega, p, b.omega, q).unwrap_or_default() * (cp * cq);
        }
    }
    acc
}

fn brute_moment(t: &PropagatorTable, labels: &[FieldLabel]) -> Result<C64> {
    if labels.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    let m = SkewMatrix::from_upper(labels.len(), |i, j| label_cov(t, &labels[i], &labels[j]))?;
    Ok(pfaffian_bruteforce(&m)?)
}

fn random_labels(g: &CylinderGeometry, rng: &mut ChaCha8Rng, n: usize) -> Vec<FieldLabel> {
    (0..n)
        .map(|_| {
            let d = [[0, 0], [1, 0], [0, 1]][rng.gen_range(0..3)];
            let w = if rng.gen_bool(0.5) { 1 } else { -1 };
            FieldLabel::new(w, d, Site::new(rng.gen_range(1..=g.li()), rng.gen_range(1..=g.mi())))
        })
        .collect()
}

/// Truncated expectations for `s = 2` against moments and for `s = 3`
/// against a Richardson-extrapolated mixed derivative of `log Z(λ)`.
pub fn expectation_error(g: &CylinderGeometry, p: &ModelParams, rng: &mut ChaCha8Rng) -> Result<f64> {
    let tt = critical_propagator_fourier(g, p)?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (qa, qb) = (random_labels(g, rng, 2), random_labels(g, rng, 4));
        let joint: Vec<FieldLabel> = qa.iter().chain(&qb).copied().collect();
        let want = brute_moment(&tt, &joint)? - brute_moment(&tt, &qa)? * brute_moment(&tt, &qb)?;
        worst = worst.max((truncated_expectation(&[qa, qb], &tt)? - want).norm());
    }
    for _ in 0..5 {
        let qs: Vec<Vec<FieldLabel>> = (0..3).map(|_| random_labels(g, rng, 4)).collect();
        let mom: Vec<C64> = (0..8)
            .map(|mask: usize| {
                let l: Vec<FieldLabel> = (0..3).filter(|i| mask >> i & 1 == 1).flat_map(|i| qs[i].clone()).collect();
                brute_moment(&tt, &l)
            })
            .collect::<Result<_>>()?;
        let log_z = |l: [f64; 3]| {
            let mut z = C64::new(0.0, 0.0);
            for (mask, m) in mom.iter().enumerate() {
                let w: f64 = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| l[i]).product();
                z += m * w;
            }
            z.ln()
        };
        let fd = |h: f64| {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..8 {
                let sg = |i: usize| if s >> i & 1 == 1 { -1.0 } else { 1.0 };
                acc += log_z([sg(0) * h, sg(1) * h, sg(2) * h]) * (sg(0) * sg(1) * sg(2));
            }
            acc / (8.0 * h * h * h)
        };
        let (a, b, d) = (fd(0.04), fd(0.02), fd(0.01));
        let r1 = (b * 4.0 - a) / 3.0;
        let r2 = (d * 4.0 - b) / 3.0;
        let oracle = (r2 * 16.0 - r1) / 15.0;
        worst = worst.max((truncated_expectation(&qs, &tt)? - oracle).norm());
    }
    Ok(worst)
}

pub struct Computed {
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
}

pub fn compute(r: &Resolved, s: &Settings, verify: bool, tol: &BTreeMap<String, f64>) -> Result<Computed> {
    let g = r.geometry();
    let p = r.params;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let c = cancellations(&g, s.count, &mut rng)?;
    let battery = norm_battery(&g, s.battery, s.kappa, s.eps, &mut rng)?;
    let (z, vdev) = vertex_constants(&p)?;
    let t = Multiscale::new(&s.rg, &p)?.table(ScaleSel::Single(0))?;
    let (n_in, n_out, sourceless) = free_theory_step(&s.rg, &p, &t)?;
    let sym = symmetry_residual(&s.rg, &t, &mut rng)?;
    let mut checks = Vec::new();
    if verify {
        let expect = expectation_error(&s.rg, &p, &mut rng)?;
        checks.push(Check::at_most("pauli_residual", c.pauli, tol["cancellation"]));
        checks.push(Check::at_most("edge_cancellation_residual", c.edge, tol["cancellation"]));
        checks.push(Check::at_most("bulk_decomposition_residual", c.bulk_decomposition, tol["decomposition"]));
        checks.push(Check::at_most("edge_decomposition_residual", c.edge_decomposition, tol["decomposition"]));
        checks.push(Check::at_most("source_decomposition_residual", c.source_decomposition, tol["decomposition"]));
        for (k, v) in &battery {
            checks.push(Check::at_most(format!("norm_{k}_violations"), v.violations as f64, 0.0));
        }
        checks.push(Check::at_most("vertex_deviation", vdev, tol["vertex"]));
        checks.push(Check::at_most("free_step_sourceless_terms", sourceless as f64, 0.0));
        checks.push(Check::at_most("rg_step_symmetry_residual", sym, tol["symmetry"]));
        checks.push(Check::at_most("truncated_expectation_error", expect, tol["expectation"]));
    }
    let battery: serde_json::Map<String, serde_json::Value> = battery
        .iter()
        .map(|(k, v)| (k.to_string(), json!({ "checked": v.checked, "violations": v.violations, "min_margin": v.min_margin })))
        .collect();
    let results = json!({
        "cancellations": {
            "pauli": c.pauli, "edge": c.edge,
            "bulk_decomposition": c.bulk_decomposition,
            "edge_decomposition": c.edge_decomposition,
            "source_decomposition": c.source_decomposition,
        },
        "norm_battery": battery,
        "vertex": { "z1": z.z1, "z2": z.z2, "expected_z1": 2.0 * p.t2_star, "expected_z2": 1.0 - p.t2_star * p.t2_star, "deviation": vdev },
        "rg_step": {
            "geometry": { "L": s.rg.l, "M": s.rg.m },
            "free_theory": { "input_terms": n_in, "output_terms": n_out, "sourceless_terms": sourceless },
            "symmetry_residual": sym,
        },
    });
    Ok(Computed { results, checks })
}

pub fn run(a: &KernelsArgs) -> Result<Outcome> {
    let r = a.model.resolve(12, 7)?;
    let tol = a.common.tolerances(TOLERANCES)?;
    if !(a.kappa > 0.0 && a.eps > 0.0) {
        return Err(Failure::Config("--kappa/--eps: must be positive".into()));
    }
    let s = Settings { count: a.count, battery: a.battery, kappa: a.kappa, eps: a.eps, rg: geometry(a.rg_l, a.rg_m)?, seed: a.common.seed };
    let c = compute(&r, &s, a.common.verify, &tol)?;
    Ok(Outcome {
        command: "kernels",
        config: json!({
            "model": r, "count": a.count, "battery": a.battery, "kappa": a.kappa, "eps": a.eps,
            "rg_L": a.rg_l, "rg_M": a.rg_m, "seed": a.common.seed,
        }),
        tolerances: tol,
        results: c.results,
        checks: a.common.verify.then_some(c.checks),
        out: a.common.out.clone(),
        csv: None,
    })
}
