use std::collections::BTreeMap;

use isingcyl::freecorr::{couplings_from_params, enumerate_gibbs, FreeCorrelator};
use isingcyl::skewlinalg::moments_to_cumulants;
use isingcyl::Edge;
use serde_json::json;

use crate::args::{CorrelateArgs, Resolved};
use crate::output::{Check, Outcome};
use crate::{Failure, Result};

pub const TOLERANCES: &[(&str, f64)] = &[("enumeration", 1e-9)];

fn cumulant(moments: &[f64]) -> Result<f64> {
    let m = moments.len().trailing_zeros() as usize;
    let mo: BTreeMap<u32, isingcyl::propagators::C64> =
        (1u32..(1 << m)).map(|s| (s, isingcyl::propagators::C64::new(moments[s as usize], 0.0))).collect();
    Ok(moments_to_cumulants(&mo, m)?[&((1u32 << m) - 1)].re)
}

pub fn compute(r: &Resolved, edges: &[Edge], verify: bool, tol: &BTreeMap<String, f64>) -> Result<(serde_json::Value, Vec<Check>)> {
    let g = r.geometry();
    for e in edges {
        if !g.edge_is_valid(e) {
            return Err(Failure::Config(format!("--edges: {e:?} is not an edge of the {}x{} cylinder", r.l, r.m)));
        }
    }
    let c = FreeCorrelator::new(&g, &r.params)?;
    let moments = c.energy_moments(edges)?;
    let cu = cumulant(&moments)?;
    let mut checks = Vec::new();
    if verify {
        let m = edges.len();
        let (beta, j1, j2) = couplings_from_params(&r.params);
        let obs: Vec<Vec<Edge>> = (1u32..(1 << m)).map(|s| (0..m).filter(|i| s >> i & 1 == 1).map(|i| edges[i]).collect()).collect();
        let en = enumerate_gibbs(&g, beta, j1, j2, &obs)?;
        let mut all = vec![1.0];
        all.extend(&en.moments);
        let dm = moments.iter().zip(&all).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        checks.push(Check::at_most("moment_delta", dm, tol["enumeration"]));
        checks.push(Check::at_most("cumulant_delta", (cu - cumulant(&all)?).abs(), tol["enumeration"]));
    }
    let subsets: Vec<serde_json::Value> = moments
        .iter()
        .enumerate()
        .skip(1)
        .map(|(s, v)| json!({ "subset": (0..edges.len()).filter(|i| s >> i & 1 == 1).collect::<Vec<_>>(), "moment": v }))
        .collect();
    Ok((json!({ "moment": moments[moments.len() - 1], "cumulant": cu, "subsets": subsets }), checks))
}

pub fn run(a: &CorrelateArgs) -> Result<Outcome> {
    let r = a.model.resolve(4, 3)?;
    let tol = a.common.tolerances(TOLERANCES)?;
    let (results, checks) = compute(&r, &a.edges.0, a.common.verify, &tol)?;
    Ok(Outcome {
        command: "correlate",
        config: json!({ "model": r, "edges": a.edges }),
        tolerances: tol,
        results,
        checks: a.common.verify.then_some(checks),
        out: a.common.out.clone(),
        csv: None,
    })
}
