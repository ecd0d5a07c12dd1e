mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use qgraph::*;

use common::*;

#[test]
fn interval_robin_first_root() {
    let g = make_interval(1.0).unwrap();
    let r = RobinSpec::new(&g, &[0], 1.0).unwrap();
    let s = compute_spectrum(&g, &r, SpectrumTarget::Count(5)).unwrap();
    for n in 1..=5 {
        let oracle = robin_interval_k(1.0, 1.0, n);
        assert!((s.wave_number(n).unwrap() - oracle).abs() < 1e-13);
    }
    assert!(s.wave_number(1).unwrap() < PI / 2.0);
}

#[test]
fn interval_robin_at_either_end() {
    let g = make_interval(1.7).unwrap();
    for v in [0, 1] {
        let r = RobinSpec::new(&g, &[v], 3.3).unwrap();
        let s = compute_spectrum(&g, &r, SpectrumTarget::Count(30)).unwrap();
        for n in 1..=30 {
            assert!((s.wave_number(n).unwrap() - robin_interval_k(3.3, 1.7, n)).abs() < 1e-12);
        }
    }
}

/// Neumann equilateral star with `d` unit edges: the symmetric states sit at
/// `k = nπ` (simple, `n ≥ 0`) and the states vanishing at the centre at
/// `k = (n + ½)π` with multiplicity `d − 1`.
#[test]
fn equilateral_star_spectrum() {
    let g = equilateral_star4();
    let s = compute_spectrum(&g, &RobinSpec::neumann(), SpectrumTarget::MaxWaveNumber(20.2)).unwrap();
    let mut expected = Vec::new();
    for n in 0..7 {
        expected.push((n as f64 * PI, 1));
        if (n as f64 + 0.5) * PI < 20.2 {
            expected.push(((n as f64 + 0.5) * PI, 3));
        }
    }
    assert_eq!(s.records.len(), expected.len());
    for (rec, (k, m)) in s.records.iter().zip(&expected) {
        assert!((rec.k - k).abs() < 1e-12, "{} vs {k}", rec.k);
        assert_eq!(rec.multiplicity, *m);
    }
    let system = ScatteringSystem::new(&g, &RobinSpec::neumann()).unwrap();
    let small = qgraph::eigensolve::kernel_singular_values(&system, 1.5 * PI)
        .unwrap()
        .into_iter()
        .filter(|&x| x < 1e-10)
        .count();
    assert_eq!(small, 3);
}

#[test]
fn counting_function_values() {
    let g = make_interval(PI).unwrap();
    let s = compute_spectrum(&g, &RobinSpec::neumann(), SpectrumTarget::Count(10)).unwrap();
    assert_eq!(counting_function(&s, 2.5).unwrap(), 3);
    assert_eq!(counting_function(&s, s.k_cap).unwrap(), s.len());
    assert!(matches!(
        counting_function(&s, 2.0 * s.k_cap + 1.0),
        Err(Error::OutOfScannedRange { .. })
    ));
}

#[test]
fn weyl_asymptotics() {
    let g = star4();
    let r = RobinSpec::new(&g, &[0], 1.0).unwrap();
    let s = compute_spectrum(&g, &r, SpectrumTarget::Count(800)).unwrap();
    let total = g.total_length();
    let remainder_bound = 2.0 * g.edge_count() as f64 + 1.0;
    for k in [10.0, 50.0, 200.0, s.k_cap] {
        let n = counting_function(&s, k).unwrap() as f64;
        assert!((n - k * total / PI).abs() <= remainder_bound, "N({k}) = {n}");
    }
}

#[test]
fn spectral_shift_values() {
    let g = star4();
    let neumann = compute_spectrum(&g, &RobinSpec::neumann(), SpectrumTarget::Count(50)).unwrap();
    let robin = compute_spectrum(&g, &RobinSpec::new(&g, &[0], 3.0).unwrap(), SpectrumTarget::Count(50)).unwrap();
    let k1 = robin.wave_number(1).unwrap();
    assert_eq!(spectral_shift(&neumann, &robin, 0.5 * k1).unwrap(), 1);
    assert_eq!(spectral_shift(&neumann, &neumann, 7.0).unwrap(), 0);
    let cap = neumann.k_cap.min(robin.k_cap);
    for i in 1..200 {
        let k = cap * i as f64 / 200.0;
        assert!((0..=1).contains(&spectral_shift(&neumann, &robin, k).unwrap()));
    }
}

#[test]
fn multiplicities_match_counting_jumps() {
    let g = unit_tetrahedron();
    for sigma in [0.0, 1.0] {
        let r = RobinSpec::new(&g, &[0, 1, 2, 3], sigma).unwrap();
        let system = ScatteringSystem::new(&g, &r).unwrap();
        let s = compute_spectrum(&g, &r, SpectrumTarget::Count(80)).unwrap();
        for rec in s.records.iter().filter(|r| r.k > 0.0) {
            let below = system.counting(rec.k * (1.0 - 1e-7)).unwrap();
            let above = system.counting(rec.k * (1.0 + 1e-7)).unwrap();
            assert_eq!(above - below, rec.multiplicity, "k = {}", rec.k);
            assert_eq!(below + 1, rec.index);
        }
    }
}

#[test]
fn homotopy_on_interval() {
    let g = make_interval(1.0).unwrap();
    let curve = robin_homotopy(&g, &[0], 4.0, 3, 16).unwrap();
    assert_eq!(curve.samples.len(), 17);
    let neumann = compute_spectrum(&g, &RobinSpec::neumann(), SpectrumTarget::Count(3)).unwrap();
    assert_eq!(curve.samples[0].1, neumann.wave_number(3).unwrap());
    for w in curve.samples.windows(2) {
        assert!(w[1].1 >= w[0].1);
    }
    for &(t, k) in &curve.samples {
        assert!((k - robin_interval_k(t, 1.0, 3)).abs() < 1e-12, "t = {t}");
    }
    assert!(curve.require_simple().is_ok());
}

#[test]
fn homotopy_flags_persistent_degeneracy() {
    let g = equilateral_star4();
    // index 2 sits on the triple eigenvalue π/2 for every coupling
    let curve = robin_homotopy(&g, &[0], 2.0, 2, 4).unwrap();
    assert!(curve.persistently_degenerate());
    assert_eq!(curve.require_simple().unwrap_err(), Error::IndexCrossingAmbiguity { n: 2 });
}

#[test]
fn lowest_eigenvalue_from_robin_perturbation() {
    let g = make_interval(2.0).unwrap();
    let s = compute_spectrum(&g, &RobinSpec::new(&g, &[0], 0.0).unwrap(), SpectrumTarget::Count(2)).unwrap();
    assert_eq!(s.wave_number(1), Some(0.0));
    let s = compute_spectrum(&g, &RobinSpec::new(&g, &[0], 1e-3).unwrap(), SpectrumTarget::Count(2)).unwrap();
    assert!(s.wave_number(1).unwrap() > 0.0);
}

#[test]
fn max_wave_number_target() {
    let g = star4();
    let s = compute_spectrum(&g, &RobinSpec::neumann(), SpectrumTarget::MaxWaveNumber(30.0)).unwrap();
    assert!(s.records.iter().all(|r| r.k <= 30.0));
    let more = compute_spectrum(&g, &RobinSpec::neumann(), SpectrumTarget::Count(s.len() + 1)).unwrap();
    assert!(more.wave_number(s.len() + 1).unwrap() > 30.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn interlacing_on_random_graphs(g in arb_graph(), sigma in 0.01f64..8.0, v in 0usize..5) {
        let v = v % g.vertex_count();
        let n = 60;
        let a = compute_spectrum(&g, &RobinSpec::neumann(), SpectrumTarget::Count(n + 1)).unwrap().wave_numbers();
        let r = RobinSpec::new(&g, &[v], sigma).unwrap();
        let b = compute_spectrum(&g, &r, SpectrumTarget::Count(n)).unwrap().wave_numbers();
        for i in 0..n {
            prop_assert!(a[i] <= b[i] + 1e-12, "n = {}: {} > {}", i + 1, a[i], b[i]);
            prop_assert!(b[i] <= a[i + 1] + 1e-12, "n = {}: {} > {}", i + 1, b[i], a[i + 1]);
        }
    }

    #[test]
    fn spectrum_monotone_in_coupling(g in arb_graph(), s1 in 0.0f64..4.0, ds in 0.01f64..4.0) {
        let vr: Vec<usize> = (0..g.vertex_count()).step_by(2).collect();
        let lo = compute_spectrum(&g, &RobinSpec::new(&g, &vr, s1).unwrap(), SpectrumTarget::Count(40)).unwrap();
        let hi = compute_spectrum(&g, &RobinSpec::new(&g, &vr, s1 + ds).unwrap(), SpectrumTarget::Count(40)).unwrap();
        for n in 1..=40 {
            prop_assert!(hi.eigenvalue(n).unwrap() >= lo.eigenvalue(n).unwrap() - 1e-10);
        }
    }

    #[test]
    fn records_are_sorted_and_counted(g in arb_graph(), sigma in 0.0f64..5.0) {
        let r = RobinSpec::new(&g, &[0], sigma).unwrap();
        let s = compute_spectrum(&g, &r, SpectrumTarget::Count(50)).unwrap();
        let mut index = 1;
        for w in s.records.windows(2) {
            prop_assert!(w[1].k > w[0].k);
        }
        for rec in &s.records {
            prop_assert_eq!(rec.index, index);
            prop_assert!(rec.multiplicity >= 1);
            index += rec.multiplicity;
        }
        prop_assert_eq!(s.len(), index - 1);
        prop_assert!(s.len() >= 50);
    }
}
