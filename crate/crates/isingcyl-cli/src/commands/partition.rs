use std::collections::BTreeMap;

use isingcyl::freecorr::{couplings_from_params, enumerate_gibbs, partition_function_free};
use serde_json::json;

use crate::args::{PartitionArgs, Resolved};
use crate::output::{Check, Outcome};
use crate::{Failure, Result};

pub const TOLERANCES: &[(&str, f64)] = &[("enumeration", 1e-10)];

pub fn compute(r: &Resolved, beta: f64, j1: f64, j2: f64, verify: bool, tol: &BTreeMap<String, f64>) -> Result<(serde_json::Value, Vec<Check>)> {
    let g = r.geometry();
    let z = partition_function_free(&g, beta, j1, j2)?;
    if !z.is_finite() || z <= 0.0 {
        return Err(Failure::Numerical(format!("partition function {z} is not a positive finite number in double precision")));
    }
    let mut checks = Vec::new();
    if verify {
        let e = enumerate_gibbs(&g, beta, j1, j2, &[])?.z;
        checks.push(Check::at_most("relative_delta", (z - e).abs() / e, tol["enumeration"]));
    }
    Ok((json!({ "beta": beta, "J1": j1, "J2": j2, "z": z, "ln_z": z.ln() }), checks))
}

pub fn run(a: &PartitionArgs) -> Result<Outcome> {
    let r = a.model.resolve(4, 2)?;
    let tol = a.common.tolerances(TOLERANCES)?;
    let (beta, j1, j2) = match a.model.beta {
        Some(b) => (b, a.model.j1, a.model.j2),
        None => couplings_from_params(&r.params),
    };
    let (results, checks) = compute(&r, beta, j1, j2, a.common.verify, &tol)?;
    Ok(Outcome {
        command: "partition",
        config: json!({ "model": r, "beta": beta, "J1": j1, "J2": j2 }),
        tolerances: tol,
        results,
        checks: a.common.verify.then_some(checks),
        out: a.common.out.clone(),
        csv: None,
    })
}
