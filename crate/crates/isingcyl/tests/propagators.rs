use std::f64::consts::PI;

use isingcyl::lattice::{CylinderGeometry, Site};
use isingcyl::propagators::*;
use proptest::prelude::*;

fn crit(t1: f64) -> ModelParams {
    ModelParams::critical(t1).unwrap()
}

#[test]
fn fourier_matches_direct_inversion() {
    for l in [4usize, 8] {
        for m in [3usize, 5] {
            for t1 in [0.3, 0.5, 2f64.sqrt() - 1.0] {
                let g = CylinderGeometry::new(l, m).unwrap();
                let p = crit(t1);
                let f = critical_propagator_fourier(&g, &p).unwrap();
                let d = critical_propagator_direct(&g, &p).unwrap();
                let diff = f.max_diff(&d);
                assert!(diff < 1e-10, "L={l} M={m} t1={t1}: {diff}");
                assert!(f.max_imag() < 1e-10);
            }
        }
    }
}

#[test]
fn direct_blocks_antisymmetric() {
    let g = CylinderGeometry::new(6, 4).unwrap();
    let d = critical_propagator_direct(&g, &crit(0.4)).unwrap();
    for z in g.sites() {
        for zp in g.sites() {
            let a = d.block(z, zp).unwrap();
            let b = d.block(zp, z).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] + b[j][i]).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn boundary_cancellations() {
    for (l, m, t1) in [(8usize, 5usize, 0.5), (6, 4, 0.3), (4, 7, 2f64.sqrt() - 1.0)] {
        let g = CylinderGeometry::new(l, m).unwrap();
        let t = critical_propagator_fourier(&g, &crit(t1)).unwrap();
        let top = g.mi() + 1;
        for z in g.sites() {
            for zp in g.sites() {
                let pd = Site::new(z.x1, 0);
                let pdp = Site::new(zp.x1, 0);
                let pu = Site::new(z.x1, top);
                let pup = Site::new(zp.x1, top);
                let vals = [
                    t.entry(1, pd, 1, zp),
                    t.entry(1, z, 1, pdp),
                    t.entry(1, pd, -1, zp),
                    t.entry(-1, z, 1, pdp),
                    t.entry(1, z, -1, pup),
                    t.entry(-1, pu, 1, zp),
                    t.entry(-1, pu, -1, zp),
                    t.entry(-1, z, -1, pup),
                ];
                for v in vals {
                    assert!(v.unwrap().norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn momentum_symmetries_on_grid() {
    let g = CylinderGeometry::new(8, 5).unwrap();
    let p = crit(0.5);
    let grid = MomentumGrid::new(&g, &p).unwrap();
    assert!(grid.max_residual() < 1e-12);
    let m1 = (g.m + 1) as f64;
    for &k1 in &grid.k1 {
        let roots = solve_k2_roots(k1, g.m, &p).unwrap();
        for &k2 in &roots {
            let a = ghat(k1, k2, &p);
            let b = ghat(k1, -k2, &p);
            let c = ghat(-k1, k2, &p);
            assert!((a[0][0] - b[0][0]).norm() < 1e-12);
            assert!((a[0][0] + c[0][0]).norm() < 1e-12);
            assert!((a[0][0] - c[1][1]).norm() < 1e-12);
            assert!((a[0][1] - c[0][1]).norm() < 1e-12);
            assert!((a[0][1] + b[1][0]).norm() < 1e-12);
            let ph = C64::from_polar(1.0, -2.0 * k2 * m1);
            assert!((a[0][1] + ph * a[1][0]).norm() < 1e-12 * a[0][1].norm().max(1.0));
        }
    }
}

#[test]
fn reflection_covariance() {
    let g = CylinderGeometry::new(8, 5).unwrap();
    let p = crit(0.5);
    let c = critical_propagator_fourier(&g, &p).unwrap();
    let mm = massive_propagator(&g, &p);
    for z in g.sites() {
        for zp in g.sites() {
            let (a1, b1) = (g.theta1_site(z), g.theta1_site(zp));
            let (a2, b2) = (g.theta2_site(z), g.theta2_site(zp));
            for w in [1i8, -1] {
                for wp in [1i8, -1] {
                    let v = c.entry(w, z, wp, zp).unwrap();
                    let h = -(w as f64) * (wp as f64) * c.entry(w, a1, wp, b1).unwrap();
                    let vv = -c.entry(-w, a2, -wp, b2).unwrap();
                    assert!((v - h).norm() < 1e-12 && (v - vv).norm() < 1e-12);
                    let x = mm.entry(w, z, wp, zp).unwrap();
                    let xh = -mm.entry(-w, a1, -wp, b1).unwrap();
                    let xv = -(w as f64) * (wp as f64) * mm.entry(w, a2, wp, b2).unwrap();
                    assert!((x - xh).norm() < 1e-12 && (x - xv).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn massive_matches_inverse_action() {
    let g = CylinderGeometry::new(8, 2).unwrap();
    let p = ModelParams::new(0.5, 0.3).unwrap();
    let a = massive_action_matrix(&g, &p).unwrap();
    let inv = a.to_dmatrix().try_inverse().unwrap();
    let t = massive_propagator(&g, &p);
    for z in g.sites() {
        for zp in g.sites() {
            for w in [1i8, -1] {
                for wp in [1i8, -1] {
                    let i = field_index(&g, w, z);
                    let j = field_index(&g, wp, zp);
                    let v = t.entry(w, z, wp, zp).unwrap();
                    assert!((v + inv[(i, j)]).norm() < 1e-12);
                }
            }
        }
    }
    // s_+(1) alone
    let s1 = s_pm(1, 1, 8, 0.5);
    let i = field_index(&g, 1, Site::new(2, 1));
    let j = field_index(&g, -1, Site::new(1, 1));
    assert!((s1 + inv[(i, j)]).norm() < 1e-12);
}

#[test]
fn critical_action_inverse_is_table() {
    let g = CylinderGeometry::new(4, 3).unwrap();
    let p = crit(0.5);
    let a = critical_action_matrix(&g, &p).unwrap();
    let inv = a.to_dmatrix().try_inverse().unwrap();
    let t = critical_propagator_fourier(&g, &p).unwrap();
    for z in g.sites() {
        for zp in g.sites() {
            for w in [1i8, -1] {
                for wp in [1i8, -1] {
                    let v = t.entry(w, z, wp, zp).unwrap();
                    let o = -inv[(field_index(&g, w, z), field_index(&g, wp, zp))];
                    assert!((v - o).norm() < 1e-10);
                }
            }
        }
    }
    let pf = isingcyl::skewlinalg::pfaffian(&a);
    let det = isingcyl::skewlinalg::determinant(&a);
    assert!((pf * pf - det).norm() < 1e-10 * det.norm());
}

#[test]
fn off_critical_fourier_rejected() {
    let g = CylinderGeometry::new(4, 3).unwrap();
    let p = ModelParams::new(0.5, 0.5).unwrap();
    assert!(critical_propagator_fourier(&g, &p).is_err());
    assert!(critical_propagator_direct(&g, &p).is_ok());
}

#[test]
fn pointwise_grid_agrees_with_table() {
    let g = CylinderGeometry::new(6, 4).unwrap();
    let p = crit(0.35);
    let grid = MomentumGrid::new(&g, &p).unwrap();
    let t = grid.table_weighted(Variant::Critical, &|_, _| C64::new(1.0, 0.0));
    for (z, zp) in [(Site::new(1, 1), Site::new(5, 3)), (Site::new(6, 0), Site::new(2, 5)), (Site::new(3, 2), Site::new(3, 2))] {
        let a = grid.block(z, zp);
        let b = t.block(z, zp).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn antiperiodic_lookup() {
    let g = CylinderGeometry::new(6, 3).unwrap();
    let t = critical_propagator_fourier(&g, &crit(0.5)).unwrap();
    let a = t.block(Site::new(1, 1), Site::new(3, 2)).unwrap();
    let b = t.block(Site::new(7, 1), Site::new(3, 2)).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((a[i][j] + b[i][j]).norm() < 1e-14);
        }
    }
}

#[test]
fn scaling_closed_form_matches_image_sum() {
    let p = crit(0.5);
    for (z, zp, l1, l2) in [((0.2, 0.3), (0.7, 0.55), 1.0, 1.0), ((0.1, 0.8), (1.3, 0.2), 2.0, 1.0), ((0.5, 0.2), (0.6, 1.1), 1.0, 1.5)] {
        let a = scaling_propagator(z, zp, l1, l2, &p).unwrap();
        let b = scaling_propagator_images(z, zp, l1, l2, &p, 600);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-4, "{a:?} {b:?}");
            }
        }
    }
}

#[test]
fn scaling_covariance() {
    let p = crit(0.4);
    let (z, zp) = ((0.3, 0.35), (0.65, 0.7));
    let a = scaling_propagator(z, zp, 1.0, 1.0, &p).unwrap();
    for xi in [2.0, 0.5] {
        let b = scaling_propagator((xi * z.0, xi * z.1), (xi * zp.0, xi * zp.1), xi, xi, &p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((b[i][j] * xi - a[i][j]).abs() < 1e-12);
            }
        }
    }
    assert!(scaling_propagator(z, z, 1.0, 1.0, &p).is_err());
}

#[test]
fn scaling_boundary_behaviour() {
    // images make the + field vanish at the bottom edge and the - field at the top
    let p = crit(0.5);
    let zp = (0.4, 0.5);
    let low = scaling_propagator((0.1, 1e-9), zp, 1.0, 1.0, &p).unwrap();
    let high = scaling_propagator((0.1, 1.0 - 1e-9), zp, 1.0, 1.0, &p).unwrap();
    assert!(low[0][0].abs() < 1e-7 && low[0][1].abs() < 1e-7);
    assert!(high[1][0].abs() < 1e-7 && high[1][1].abs() < 1e-7);
}

#[test]
fn lattice_converges_to_scaling_limit() {
    let p = crit(0.5);
    let (z, zp) = ((0.25, 0.375), (0.75, 0.625));
    let r = scaling_propagator(z, zp, 1.0, 1.0, &p).unwrap();
    let mut errs = Vec::new();
    for a in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
        let l = 2 * (1.0 / (2.0 * a)) as usize;
        let m = (1.0 / a) as usize;
        let g = CylinderGeometry::new(l, m).unwrap();
        let grid = MomentumGrid::new(&g, &p).unwrap();
        let s = |w: (f64, f64)| Site::new((w.0 / a).floor() as i64, (w.1 / a).floor() as i64);
        let b = grid.block(s(z), s(zp));
        let mut e: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                e = e.max((b[i][j] / a - r[i][j]).norm());
            }
        }
        errs.push(e);
    }
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn infinite_full_antisymmetric_and_close_to_center() {
    let p = crit(0.5);
    for dz in [(1i64, 0i64), (0, 1), (3, -2), (-5, 4)] {
        let a = infinite_propagator_full(dz, &p).unwrap();
        let b = infinite_propagator_full((-dz.0, -dz.1), &p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] + b[j][i]).norm() < 1e-12);
            }
        }
    }
    // nearest neighbour on a large cylinder center
    let g = CylinderGeometry::new(64, 63).unwrap();
    let grid = MomentumGrid::new(&g, &p).unwrap();
    let c = grid.block(Site::new(33, 32), Site::new(32, 32));
    let inf = infinite_propagator_full((1, 0), &p).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((c[i][j] - inf[i][j]).norm() < 1e-2);
        }
    }
}

#[test]
fn infinite_weighted_matches_full_with_complement() {
    // a weight w and its complement 1-w reconstruct the full propagator
    let p = crit(0.5);
    let w = |k1: f64, k2: f64| {
        let d = dispersion(k1, k2, &p).sqrt();
        1.0 - (-d * d * 4.0).exp()
    };
    let tab = infinite_propagator_weighted(&p, &w, 6, 1e-11).unwrap();
    for dz in [(1i64, 0i64), (2, 3), (-4, 1)] {
        let full = infinite_propagator_full(dz, &p).unwrap();
        let part = tab.get(dz).unwrap();
        // residual piece (1 - w) is smooth Gaussian-damped: compute by direct 2D quadrature
        let resid = |a: usize, b: usize| {
            integrate(
                &|k1| {
                    integrate(
                        &|k2| {
                            let g = ghat(k1, k2, &p)[a][b];
                            let e = C64::from_polar(1.0, -(k1 * dz.0 as f64 + k2 * dz.1 as f64));
                            ((g * e).re) * (1.0 - w(k1, k2)) / (4.0 * PI * PI)
                        },
                        -PI,
                        PI,
                        1e-12,
                    )
                },
                -PI,
                PI,
                1e-11,
            )
        };
        for a in 0..2 {
            for b in 0..2 {
                let s = part[a][b].re + resid(a, b);
                assert!((s - full[a][b].re).abs() < 1e-6, "{dz:?} {a}{b}: {s} vs {}", full[a][b].re);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn roots_have_small_residual(k in 0.01f64..3.1, m in 1usize..30, t1 in 0.05f64..0.95) {
        let p = crit(t1);
        let r = solve_k2_roots(k, m, &p).unwrap();
        prop_assert_eq!(r.len(), 2 * m);
        let b = coefficients(k, 0.0, &p).big_b;
        for q in r {
            prop_assert!(((q * (m as f64 + 1.0)).sin() - b * (q * m as f64).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn table_antisymmetry(x in 1i64..=6, r in 0i64..=5, xp in 1i64..=6, rp in 0i64..=5, t1 in 0.1f64..0.9) {
        let g = CylinderGeometry::new(6, 4).unwrap();
        let grid = MomentumGrid::new(&g, &crit(t1)).unwrap();
        let a = grid.block(Site::new(x, r), Site::new(xp, rp));
        let b = grid.block(Site::new(xp, rp), Site::new(x, r));
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((a[i][j] + b[j][i]).norm() < 1e-12);
            }
        }
    }
}
