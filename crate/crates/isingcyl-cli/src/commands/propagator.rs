use isingcyl::propagators::*;
use isingcyl::skewlinalg::pfaffian;
use isingcyl::{CylinderGeometry, PropagatorTable, Site};
use serde_json::json;

use crate::args::{Kind, Method, PropagatorArgs, Resolved};
use crate::output::{num, Check, Outcome, Table};
use crate::Result;

pub const TOLERANCES: &[(&str, f64)] = &[("boundary", 1e-12), ("momentum", 1e-12), ("oracle", 1e-10)];

/// Largest entry that must vanish because one field sits on a closure row.
pub fn boundary_residual(g: &CylinderGeometry, t: &PropagatorTable) -> f64 {
    let top = g.mi() + 1;
    let mut worst = 0.0f64;
    for z in g.sites() {
        for zp in g.sites() {
            let (pd, pdp) = (Site::new(z.x1, 0), Site::new(zp.x1, 0));
            let (pu, pup) = (Site::new(z.x1, top), Site::new(zp.x1, top));
            for v in [
                t.entry(1, pd, 1, zp),
                t.entry(1, z, 1, pdp),
                t.entry(1, pd, -1, zp),
                t.entry(-1, z, 1, pdp),
                t.entry(1, z, -1, pup),
                t.entry(-1, pu, 1, zp),
                t.entry(-1, pu, -1, zp),
                t.entry(-1, z, -1, pup),
            ]
            .into_iter()
            .flatten()
            {
                worst = worst.max(v.norm());
            }
        }
    }
    worst
}

/// Symmetries of the momentum-space block on the allowed `(k1, k2)` grid.
pub fn momentum_residual(g: &CylinderGeometry, p: &ModelParams) -> isingcyl::Result<f64> {
    let m1 = (g.m + 1) as f64;
    let mut worst = 0.0f64;
    for k1 in k1_values(g.l) {
        for k2 in solve_k2_roots(k1, g.m, p)? {
            let a = ghat(k1, k2, p);
            let b = ghat(k1, -k2, p);
            let c = ghat(-k1, k2, p);
            let ph = C64::from_polar(1.0, -2.0 * k2 * m1);
            let scale = a[0][1].norm().max(1.0);
            for r in [
                (a[0][0] - b[0][0]).norm(),
                (a[0][0] + c[0][0]).norm(),
                (a[0][0] - c[1][1]).norm(),
                (a[0][1] - c[0][1]).norm(),
                (a[0][1] + b[1][0]).norm(),
                (a[0][1] + ph * a[1][0]).norm() / scale,
            ] {
                worst = worst.max(r);
            }
        }
    }
    Ok(worst)
}

pub struct Computed {
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub table: PropagatorTable,
}

pub fn compute(r: &Resolved, kind: Kind, method: Method, verify: bool, tol: &std::collections::BTreeMap<String, f64>) -> Result<Computed> {
    let g = r.geometry();
    let p = r.params;
    let mut checks = Vec::new();
    let (table, results) = match kind {
        Kind::Critical => {
            let table = match method {
                Method::Fourier => critical_propagator_fourier(&g, &p)?,
                Method::Direct => critical_propagator_direct(&g, &p)?,
            };
            let boundary = boundary_residual(&g, &table);
            let momentum = momentum_residual(&g, &p)?;
            if verify {
                let other = match method {
                    Method::Fourier => critical_propagator_direct(&g, &p)?,
                    Method::Direct => critical_propagator_fourier(&g, &p)?,
                };
                checks.push(Check::at_most("fourier_vs_direct", table.max_diff(&other), tol["oracle"]));
                checks.push(Check::at_most("boundary_residual", boundary, tol["boundary"]));
                checks.push(Check::at_most("momentum_residual", momentum, tol["momentum"]));
            }
            let res = json!({
                "max_abs": table.max_abs(),
                "max_imag": table.max_imag(),
                "boundary_residual": boundary,
                "momentum_residual": momentum,
            });
            (table, res)
        }
        Kind::Massive => {
            let table = massive_propagator(&g, &p);
            if verify {
                let a = massive_action_matrix(&g, &p)?;
                let full = pfaffian(&a);
                let blocks = isingcyl::freecorr::massive_pfaffian_blockwise(&g, &p)?;
                checks.push(Check::at_most("pfaffian_blockwise_vs_full", (full - blocks).norm() / full.norm(), tol["oracle"]));
            }
            let res = json!({ "max_abs": table.max_abs(), "max_imag": table.max_imag() });
            (table, res)
        }
    };
    Ok(Computed { results, checks, table })
}

pub fn table_csv(t: &PropagatorTable) -> Table {
    let mut out = Table::new(&["x1", "x2", "y1", "y2", "omega", "omega_p", "re", "im"]);
    for (z, zp, w, wp, v) in t.entries() {
        out.push(vec![
            z.x1.to_string(),
            z.x2.to_string(),
            zp.x1.to_string(),
            zp.x2.to_string(),
            w.to_string(),
            wp.to_string(),
            num(v.re),
            num(v.im),
        ]);
    }
    out
}

pub fn run(a: &PropagatorArgs) -> Result<Outcome> {
    let r = a.model.resolve(8, 5)?;
    let tol = a.common.tolerances(TOLERANCES)?;
    let c = compute(&r, a.kind, a.method, a.common.verify, &tol)?;
    let config = json!({ "model": r, "kind": a.kind, "method": a.method });
    Ok(Outcome {
        command: "propagator",
        config,
        tolerances: tol,
        results: c.results,
        checks: a.common.verify.then_some(c.checks),
        out: a.common.out.clone(),
        csv: a.csv.clone().map(|p| (p, table_csv(&c.table))),
    })
}
