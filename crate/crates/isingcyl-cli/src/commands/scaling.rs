use isingcyl::freecorr::{lattice_for_spacing, rescaled_lattice_cumulant, scaling_correlation};
use isingcyl::propagators::{scaling_propagator, MomentumGrid};
use isingcyl::{Direction, ModelParams, Site};
use serde_json::json;

use crate::args::{Observable, ScalingArgs};
use crate::output::{num, Check, Outcome, Table};
use crate::{Failure, Result};

pub const TOLERANCES: &[(&str, f64)] = &[("ratio", 1.0)];

#[derive(Clone, Debug)]
pub struct Row {
    pub a: f64,
    pub l: usize,
    pub m: usize,
    pub lattice: f64,
    pub limit: f64,
    pub error: f64,
}

/// Error of the rescaled lattice quantity at spacings `a0 / 2^k`, `k = 0..=halvings`.
pub fn series(
    p: &ModelParams,
    points: &[(f64, f64)],
    obs: Observable,
    labels: &[Direction],
    a0: f64,
    halvings: u32,
    ell: (f64, f64),
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for k in 0..=halvings {
        let a = a0 / 2f64.powi(k as i32);
        let g = lattice_for_spacing(a, ell.0, ell.1)?;
        let (lattice, limit, error) = match obs {
            Observable::Propagator => {
                let (z, zp) = (points[0], points[1]);
                let target = scaling_propagator(z, zp, ell.0, ell.1, p)?;
                let grid = MomentumGrid::new(&g, p)?;
                let s = |w: (f64, f64)| Site::new((w.0 / a).floor() as i64, (w.1 / a).floor() as i64);
                let b = grid.block(s(z), s(zp));
                // report the (+,-) entry, measure the whole block
                let mut e: f64 = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        e = e.max((b[i][j] / a - target[i][j]).norm());
                    }
                }
                ((b[0][1] / a).re, target[0][1], e)
            }
            Observable::Energy => {
                let limit = scaling_correlation(points, labels, ell.0, ell.1, p)?;
                let lat = rescaled_lattice_cumulant(points, labels, a, ell.0, ell.1, p)?;
                (lat, limit, (lat - limit).abs())
            }
        };
        rows.push(Row { a, l: g.l, m: g.m, lattice, limit, error });
    }
    Ok(rows)
}

pub fn max_ratio(rows: &[Row]) -> f64 {
    rows.windows(2).map(|w| w[1].error / w[0].error).fold(0.0, f64::max)
}

fn validate(a: &ScalingArgs) -> Result<Vec<Direction>> {
    let pts = &a.points.0;
    if !(a.ell1 > 0.0 && a.ell2 > 0.0) {
        return Err(Failure::Config("--ell1/--ell2: must be positive".into()));
    }
    if !(a.a0 > 0.0 && a.a0 < a.ell1.min(a.ell2)) {
        return Err(Failure::Config(format!("--a0: must lie in (0, min(ell1, ell2)), got {}", a.a0)));
    }
    for &(x, y) in pts {
        if !(0.0..a.ell1).contains(&x) || !(y > 0.0 && y < a.ell2) {
            return Err(Failure::Config(format!("--points: ({x},{y}) outside [0,{})x(0,{})", a.ell1, a.ell2)));
        }
    }
    match a.observable {
        Observable::Propagator => {
            if pts.len() != 2 {
                return Err(Failure::Config(format!("--points: the propagator needs 2 points, got {}", pts.len())));
            }
            Ok(Vec::new())
        }
        Observable::Energy => {
            let labels = a.labels.as_ref().map(|d| d.0.clone()).unwrap_or_else(|| vec![Direction::Vertical; pts.len()]);
            if labels.len() != pts.len() {
                return Err(Failure::Config(format!("--labels: {} labels for {} points", labels.len(), pts.len())));
            }
            Ok(labels)
        }
    }
}

pub fn run(a: &ScalingArgs) -> Result<Outcome> {
    let labels = validate(a)?;
    let p = ModelParams::critical(a.t1).map_err(|e| Failure::Config(format!("--t1: {e}")))?;
    let tol = a.common.tolerances(TOLERANCES)?;
    let rows = series(&p, &a.points.0, a.observable, &labels, a.a0, a.halvings, (a.ell1, a.ell2))?;
    let mut checks = Vec::new();
    if a.common.verify {
        checks.push(Check::below("max_error_ratio", max_ratio(&rows), tol["ratio"]));
    }
    let mut t = Table::new(&["a", "L", "M", "lattice", "limit", "error"]);
    for r in &rows {
        t.push(vec![num(r.a), r.l.to_string(), r.m.to_string(), num(r.lattice), num(r.limit), num(r.error)]);
    }
    let series: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| json!({ "a": r.a, "L": r.l, "M": r.m, "lattice": r.lattice, "limit": r.limit, "error": r.error }))
        .collect();
    Ok(Outcome {
        command: "scaling",
        config: json!({
            "t1": a.t1, "points": a.points, "observable": a.observable, "labels": labels,
            "a0": a.a0, "halvings": a.halvings, "ell1": a.ell1, "ell2": a.ell2,
        }),
        tolerances: tol,
        results: json!({ "series": series }),
        checks: a.common.verify.then_some(checks),
        out: a.common.out.clone(),
        csv: a.csv.clone().map(|p| (p, t)),
    })
}
