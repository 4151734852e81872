use std::collections::BTreeMap;

use isingcyl::multiscale::*;
use isingcyl::{Site, Variant};
use serde_json::json;

use crate::args::{MultiscaleArgs, Resolved};
use crate::commands::propagator::boundary_residual;
use crate::output::{num, Check, Outcome, Table};
use crate::{Failure, Result};

pub const TOLERANCES: &[(&str, f64)] = &[("boundary", 1e-12), ("fit_r2", 0.9), ("reconstruction", 1e-12), ("split", 1e-12)];

pub struct Computed {
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub profiles: Table,
}

pub fn compute(r: &Resolved, h: i32, fit: (i64, i64), verify: bool, tol: &BTreeMap<String, f64>) -> Result<Computed> {
    let g = r.geometry();
    let ms = Multiscale::new(&g, &r.params)?;
    let scales = ms.scales();
    if !scales.contains(&h) {
        return Err(Failure::Config(format!("--h: must be one of {scales:?}, got {h}")));
    }
    let mut sum = ms.table(ScaleSel::Leq)?;
    let mut boundary = boundary_residual(&g, &sum);
    for &k in &scales {
        let t = ms.table(ScaleSel::Single(k))?;
        boundary = boundary.max(boundary_residual(&g, &t));
        sum = sum.combine(1.0, &t, 1.0, Variant::Custom)?;
    }
    let reconstruction = sum.max_diff(&ms.table(ScaleSel::Smooth)?);
    let be = bulk_edge_split_with(&ms, h)?;
    let split = be.bulk.combine(1.0, &be.edge, 1.0, Variant::Custom)?.max_diff(&be.full);
    let edge_prof = decay_profile(&be.edge, |a: Site, b: Site| edge_distance(&g, a, b));
    let bulk_prof = decay_profile(&be.bulk, |a: Site, b: Site| l1_distance(&g, a, b));
    let edge_fit = exponential_fit(&edge_prof, fit.0, fit.1)?;
    let bulk_fit = exponential_fit(&bulk_prof, fit.0, fit.1)?;
    let mut checks = Vec::new();
    if verify {
        checks.push(Check::at_most("reconstruction_residual", reconstruction, tol["reconstruction"]));
        checks.push(Check::at_most("scale_boundary_residual", boundary, tol["boundary"]));
        checks.push(Check::at_most("bulk_plus_edge_minus_full", split, tol["split"]));
        checks.push(Check::above("edge_decay_rate", -edge_fit.slope, 0.0));
        checks.push(Check::above("edge_fit_r2", edge_fit.r2, tol["fit_r2"]));
    }
    let mut t = Table::new(&["part", "distance", "max_norm"]);
    for (name, prof) in [("bulk", &bulk_prof), ("edge", &edge_prof)] {
        for (d, v) in prof {
            t.push(vec![name.to_string(), d.to_string(), num(*v)]);
        }
    }
    let results = json!({
        "h_star": h_star(&g),
        "scales": scales,
        "reconstruction_residual": reconstruction,
        "scale_boundary_residual": boundary,
        "bulk_plus_edge_minus_full": split,
        "edge_fit": { "rate": -edge_fit.slope, "intercept": edge_fit.intercept, "r2": edge_fit.r2, "distance": "edge" },
        "bulk_fit": { "rate": -bulk_fit.slope, "intercept": bulk_fit.intercept, "r2": bulk_fit.r2, "distance": "l1" },
    });
    Ok(Computed { results, checks, profiles: t })
}

pub fn run(a: &MultiscaleArgs) -> Result<Outcome> {
    let r = a.model.resolve(32, 32)?;
    let tol = a.common.tolerances(TOLERANCES)?;
    if a.fit_min < 0 || a.fit_max <= a.fit_min {
        return Err(Failure::Config(format!("--fit-min/--fit-max: need 0 <= min < max, got {}..{}", a.fit_min, a.fit_max)));
    }
    let c = compute(&r, a.h, (a.fit_min, a.fit_max), a.common.verify, &tol)?;
    Ok(Outcome {
        command: "multiscale",
        config: json!({ "model": r, "h": a.h, "fit_min": a.fit_min, "fit_max": a.fit_max }),
        tolerances: tol,
        results: c.results,
        checks: a.common.verify.then_some(c.checks),
        out: a.common.out.clone(),
        csv: a.csv.clone().map(|p| (p, c.profiles)),
    })
}
