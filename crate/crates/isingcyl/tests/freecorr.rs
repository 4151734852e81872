use isingcyl::freecorr::*;
use isingcyl::lattice::{CylinderGeometry, Direction, Edge, Site};
use isingcyl::propagators::{beta_critical_isotropic, ModelParams};
use isingcyl::skewlinalg::pfaffian;
use proptest::prelude::*;

fn h(x: i64, r: i64) -> Edge {
    Edge::new(Site::new(x, r), Direction::Horizontal)
}
fn v(x: i64, r: i64) -> Edge {
    Edge::new(Site::new(x, r), Direction::Vertical)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn partition_function_small_hand_sum() {
    // L=2, M=1: two horizontal bonds between the same pair of spins
    let g = CylinderGeometry::new(2, 1).unwrap();
    let beta: f64 = 0.3;
    let hand = 2.0 * (2.0 * beta).exp() + 2.0 * (-2.0 * beta).exp();
    let e = enumerate_gibbs(&g, beta, 1.0, 1.0, &[]).unwrap();
    assert!(rel(e.z, hand) < 1e-14);
    let z = partition_function_free(&g, beta, 1.0, 1.0).unwrap();
    assert!(rel(z, hand) < 1e-10);
}

#[test]
fn partition_function_matches_enumeration() {
    let bc = beta_critical_isotropic();
    for (l, m) in [(2usize, 1usize), (4, 2), (4, 3), (2, 2)] {
        let g = CylinderGeometry::new(l, m).unwrap();
        for beta in [0.2, bc, 0.7] {
            let z = partition_function_free(&g, beta, 1.0, 1.0).unwrap();
            let e = enumerate_gibbs(&g, beta, 1.0, 1.0, &[]).unwrap();
            assert!(rel(z, e.z) < 1e-10, "L={l} M={m} beta={beta}: {z} vs {}", e.z);
        }
    }
    // anisotropic couplings
    let g = CylinderGeometry::new(4, 3).unwrap();
    let z = partition_function_free(&g, 0.5, 0.7, 1.3).unwrap();
    let e = enumerate_gibbs(&g, 0.5, 0.7, 1.3, &[]).unwrap();
    assert!(rel(z, e.z) < 1e-10);
}

#[test]
fn massive_pfaffian_is_blockwise() {
    let g = CylinderGeometry::new(6, 3).unwrap();
    let p = ModelParams::new(0.4, 0.6).unwrap();
    let am = isingcyl::propagators::massive_action_matrix(&g, &p).unwrap();
    let full = pfaffian(&am);
    let blk = massive_pfaffian_blockwise(&g, &p).unwrap();
    assert!((full - blk).norm() < 1e-12 * full.norm());
}

#[test]
fn enumeration_conventions() {
    let g = CylinderGeometry::new(2, 1).unwrap();
    assert!(rel(enumerate_gibbs(&g, 0.0, 1.0, 1.0, &[]).unwrap().z, 4.0) < 1e-15);
    let g = CylinderGeometry::new(4, 2).unwrap();
    let e = enumerate_gibbs(&g, 0.0, 1.0, 1.0, &[vec![h(1, 1)], vec![v(2, 1), h(3, 2)]]).unwrap();
    assert!(e.means.iter().all(|m| m.abs() < 1e-15));
    assert!(e.moments.iter().all(|m| m.abs() < 1e-15));
    assert!(enumerate_gibbs(&CylinderGeometry::new(6, 5).unwrap(), 0.1, 1.0, 1.0, &[]).is_err());
}

#[test]
fn single_edge_means() {
    let g = CylinderGeometry::new(4, 3).unwrap();
    let p = ModelParams::critical(2f64.sqrt() - 1.0).unwrap();
    let c = FreeCorrelator::new(&g, &p).unwrap();
    let (beta, j1, j2) = couplings_from_params(&p);
    let e = enumerate_gibbs(&g, beta, j1, j2, &[]).unwrap();
    for (edge, mean) in g.edges().iter().zip(&e.means) {
        let m = c.energy_moment(&[*edge]).unwrap();
        assert!((m - mean).abs() < 1e-10, "{edge:?}: {m} vs {mean}");
    }
}

#[test]
fn vertical_single_wick() {
    let g = CylinderGeometry::new(4, 3).unwrap();
    let p = ModelParams::critical(0.5).unwrap();
    let c = FreeCorrelator::new(&g, &p).unwrap();
    let t = isingcyl::propagators::critical_propagator_fourier(&g, &p).unwrap();
    let z = Site::new(2, 1);
    let expect = p.t2 + (1.0 - p.t2 * p.t2) * t.entry(1, z, -1, z.shift(0, 1)).unwrap().re;
    assert!((c.energy_moment(&[v(2, 1)]).unwrap() - expect).abs() < 1e-14);
}

#[test]
fn cumulants_match_enumeration() {
    let g = CylinderGeometry::new(4, 3).unwrap();
    let p = ModelParams::critical(2f64.sqrt() - 1.0).unwrap();
    let c = FreeCorrelator::new(&g, &p).unwrap();
    let tuples = [
        vec![h(1, 1), h(3, 2)],
        vec![v(1, 1), v(3, 2)],
        vec![h(4, 1), v(2, 2)],
        vec![h(1, 1), h(2, 3), h(4, 2)],
        vec![v(1, 1), v(2, 2), v(4, 1)],
        vec![h(4, 3), v(1, 1), h(2, 2)],
    ];
    for es in tuples {
        let a = c.energy_cumulant(&es).unwrap();
        let b = enumerated_cumulant(&g, &p, &es).unwrap();
        assert!((a - b).abs() < 1e-10, "{es:?}: {a} vs {b}");
    }
}

#[test]
fn off_critical_moments_match_enumeration() {
    let g = CylinderGeometry::new(4, 2).unwrap();
    let p = ModelParams::new(0.3, 0.6).unwrap();
    let c = FreeCorrelator::new(&g, &p).unwrap();
    let es = [h(2, 1), v(3, 1), h(4, 2)];
    let a = c.energy_moment(&es).unwrap();
    let (beta, j1, j2) = couplings_from_params(&p);
    let b = enumerate_gibbs(&g, beta, j1, j2, &[es.to_vec()]).unwrap().moments[0];
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn repeated_edges_rejected() {
    let g = CylinderGeometry::new(4, 3).unwrap();
    let p = ModelParams::critical(0.5).unwrap();
    let req = CorrelationRequest { geom: g, edges: vec![h(1, 1), h(1, 1)], mode: CorrelationMode::Moment, params: p };
    assert!(matches!(energy_moment_free(&req), Err(isingcyl::Error::RepeatedEdge(_))));
}

#[test]
fn scaling_correlation_two_point_expansion() {
    let p = ModelParams::critical(0.5).unwrap();
    let (z1, z2) = ((0.25, 0.375), (0.75, 0.625));
    let g = isingcyl::propagators::scaling_propagator(z1, z2, 1.0, 1.0, &p).unwrap();
    let t2 = p.t2;
    let expect = (1.0 - t2 * t2).powi(2) * (-g[0][0] * g[1][1] + g[0][1] * g[1][0]);
    let got = scaling_correlation(&[z1, z2], &[Direction::Vertical; 2], 1.0, 1.0, &p).unwrap();
    assert!((got - expect).abs() < 1e-14);
    let got = scaling_correlation(&[z1, z2], &[Direction::Horizontal, Direction::Vertical], 1.0, 1.0, &p).unwrap();
    assert!((got - expect * 2.0 * t2 / (1.0 - t2 * t2)).abs() < 1e-14);
    assert!(scaling_correlation(&[z1, z1], &[Direction::Vertical; 2], 1.0, 1.0, &p).is_err());
}

#[test]
fn scaling_correlation_covariance() {
    let p = ModelParams::critical(0.4).unwrap();
    let pts = [(0.2, 0.3), (0.55, 0.6), (0.8, 0.45)];
    let labels = [Direction::Vertical, Direction::Horizontal, Direction::Vertical];
    let base = scaling_correlation(&pts, &labels, 1.0, 1.0, &p).unwrap();
    for xi in [2.0, 0.5] {
        let sp: Vec<_> = pts.iter().map(|z| (xi * z.0, xi * z.1)).collect();
        let val = scaling_correlation(&sp, &labels, xi, xi, &p).unwrap();
        assert!((val * xi.powi(3) - base).abs() < 1e-12 * base.abs().max(1.0));
    }
}

#[test]
fn lattice_energy_approaches_scaling_limit() {
    let p = ModelParams::critical(0.5).unwrap();
    let pts = [(0.25, 0.375), (0.75, 0.625)];
    let lab = [Direction::Vertical; 2];
    let target = scaling_correlation(&pts, &lab, 1.0, 1.0, &p).unwrap();
    let errs: Vec<f64> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&a| (rescaled_lattice_cumulant(&pts, &lab, a, 1.0, 1.0, &p).unwrap() - target).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

fn all_edges() -> Vec<Edge> {
    CylinderGeometry::new(4, 3).unwrap().edges()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn translation_and_reflection_invariance(idx in proptest::sample::subsequence((0..all_edges().len()).collect::<Vec<_>>(), 2..=3), s in 1i64..4) {
        let g = CylinderGeometry::new(4, 3).unwrap();
        let p = ModelParams::critical(0.45).unwrap();
        let c = FreeCorrelator::new(&g, &p).unwrap();
        let all = all_edges();
        let es: Vec<Edge> = idx.iter().map(|&i| all[i]).collect();
        let base = c.energy_moment(&es).unwrap();
        let tr: Vec<Edge> = es.iter().map(|e| g.translate_edge(e, s)).collect();
        let t1: Vec<Edge> = es.iter().map(|e| g.theta1_edge(e)).collect();
        let t2: Vec<Edge> = es.iter().map(|e| g.theta2_edge(e)).collect();
        prop_assert!((c.energy_moment(&tr).unwrap() - base).abs() < 1e-12);
        prop_assert!((c.energy_moment(&t1).unwrap() - base).abs() < 1e-12);
        prop_assert!((c.energy_moment(&t2).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn moment_cumulant_round_trip(idx in proptest::sample::subsequence((0..all_edges().len()).collect::<Vec<_>>(), 2..=4)) {
        use std::collections::BTreeMap;
        use isingcyl::skewlinalg::{cumulants_to_moments, moments_to_cumulants};
        let g = CylinderGeometry::new(4, 3).unwrap();
        let p = ModelParams::critical(0.45).unwrap();
        let c = FreeCorrelator::new(&g, &p).unwrap();
        let all = all_edges();
        let es: Vec<Edge> = idx.iter().map(|&i| all[i]).collect();
        let m = es.len();
        let mom = c.energy_moments(&es).unwrap();
        let map: BTreeMap<u32, _> = (1u32..(1 << m)).map(|s| (s, isingcyl::propagators::C64::new(mom[s as usize], 0.0))).collect();
        let back = cumulants_to_moments(&moments_to_cumulants(&map, m).unwrap(), m).unwrap();
        for (k, val) in &map {
            prop_assert!((back[k] - val).norm() < 1e-12);
        }
    }
}
