use std::collections::BTreeSet;

use cphase_core::network::*;
use cphase_core::{CavitySpec, Complex64};
use proptest::prelude::*;

fn random_spec(n: usize, g: &[f64], k: f64, kp: f64, gamma: f64, segs: &[(f64, f64, f64)]) -> NetworkSpec {
    let mut cavities: Vec<CavitySpec> = g[..n - 1]
        .iter()
        .map(|&g| CavitySpec::two_sided(g, k, kp, gamma).unwrap())
        .collect();
    cavities.push(CavitySpec::one_sided(g[n - 1], k, kp, gamma).unwrap());
    let seg = |i: usize| {
        let (tau, eta, phi) = segs[i];
        PathSegment::new(tau, eta, phi).unwrap()
    };
    NetworkSpec::new(cavities, (0..n - 1).map(seg).collect(), (n - 1..2 * (n - 1)).map(seg).collect()).unwrap()
}

fn net_strategy(lossless: bool) -> impl Strategy<Value = (NetworkSpec, f64, usize)> {
    (1usize..=5).prop_flat_map(move |n| {
        let loss = if lossless { 0.0..1e-300 } else { 0.0..0.5 };
        (
            prop::collection::vec(0.0..5.0f64, n),
            0.3..3.0f64,
            loss.clone(),
            loss.clone(),
            prop::collection::vec((0.0..2.0f64, loss, -3.2..3.2f64), 2 * (n - 1)),
            -4.0..4.0f64,
            0..(1usize << n),
        )
            .prop_map(move |(g, k, kp, gamma, segs, w, s)| {
                let segs: Vec<_> = segs.into_iter().map(|(t, e, p)| (t, if lossless { 0.0 } else { e }, p)).collect();
                let (kp, gamma) = if lossless { (0.0, 0.0) } else { (kp, gamma) };
                (random_spec(n, &g, k, kp, gamma, &segs), w, s)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lossless_network_conserves_flux((spec, w, s) in net_strategy(true)) {
        let a = basis_amplitude(w, &spec, BasisState::new(s, spec.n())).unwrap();
        prop_assert!((a.norm() - 1.0).abs() < 1e-10, "{}", a.norm());
    }

    #[test]
    fn network_is_passive((spec, w, s) in net_strategy(false)) {
        let a = basis_amplitude(w, &spec, BasisState::new(s, spec.n())).unwrap();
        prop_assert!(a.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn path_sum_converges_to_solve((spec, w, s) in net_strategy(false)) {
        let state = BasisState::new(s, spec.n());
        let exact = basis_amplitude(w, &spec, state).unwrap();
        // Loops through weakly coupled cavities ring for many round trips.
        let sum = basis_amplitude_pathsum(w, &spec, state, 4000).unwrap();
        prop_assume!(sum.truncation < 1e-10);
        prop_assert!((sum.value - exact).norm() < 1e-8, "{} vs {}", sum.value, exact);
    }

    #[test]
    fn loss_is_monotone_without_loops((spec, w, s) in net_strategy(false), which in 0usize..8, extra in 0.01..1.0f64) {
        prop_assume!(spec.n() > 1);
        let spec = spec.with_model(ElementModel::Ideal);
        let state = BasisState::new(s, spec.n());
        let before = basis_amplitude(w, &spec, state).unwrap().norm();
        let mut lossier = spec.clone();
        let m = spec.n() - 1;
        let seg = if which % 2 == 0 { &mut lossier.forward[(which / 2) % m] } else { &mut lossier.back[(which / 2) % m] };
        seg.eta += extra;
        let after = basis_amplitude(w, &lossier, state).unwrap().norm();
        prop_assert!(after <= before + 1e-12, "{after} > {before}");
    }

    #[test]
    fn two_cavity_solve_matches_cascade_form(w in -3.0..3.0f64, g1 in 0.0..4.0f64, g2 in 0.0..4.0f64, k in 0.2..3.0f64, gamma in 0.01..3.0f64) {
        let spec = NetworkSpec::new(
            vec![CavitySpec::two_sided(g1, k, 0.0, gamma).unwrap(), CavitySpec::one_sided(g2, k, 0.0, gamma).unwrap()],
            vec![PathSegment::default()],
            vec![PathSegment::default()],
        ).unwrap();
        let bits = [(false, false), (false, true), (true, false), (true, true)];
        for (i, (q1, q2)) in bits.into_iter().enumerate() {
            let got = basis_amplitude(w, &spec, BasisState::new(i, 2)).unwrap();
            let want = cascade_closed_form(w, if q1 { g1 } else { 0.0 }, if q2 { g2 } else { 0.0 }, k, gamma).unwrap();
            prop_assert!((got - want).norm() < 1e-9 * want.norm().max(1.0), "{got} vs {want}");
        }
    }
}

#[test]
fn single_reflection_path_sum_is_exact_without_loops() {
    let spec = NetworkSpec::uniform(3, 1.0, 1.0, 0.0, 1.0, PathSegment::default())
        .unwrap()
        .with_model(ElementModel::Ideal)
        .with_phases(&[0.3, -0.2, 1.1, 0.4])
        .unwrap();
    for s in BasisState::all(3) {
        let exact = basis_amplitude(0.2, &spec, s).unwrap();
        let sum = basis_amplitude_pathsum(0.2, &spec, s, 6).unwrap();
        assert!((sum.value - exact).norm() < 1e-15 && sum.truncation == 0.0);
    }
}

#[test]
fn truncation_shrinks_with_more_bounces() {
    let spec = NetworkSpec::uniform(2, 5.0, 1.0, 0.0, 0.1, PathSegment::new(0.1, 0.0, 0.0).unwrap()).unwrap();
    let s = BasisState::new(0, 2);
    let mut last = f64::INFINITY;
    for b in [1, 2, 4, 8, 16] {
        let t = basis_amplitude_pathsum(0.3, &spec, s, b).unwrap().truncation;
        assert!(t <= last, "{b}: {t} > {last}");
        last = t;
    }
}

#[test]
fn ideal_limit_of_two_cavities() {
    let spec = NetworkSpec::uniform(2, 1.0, 1.0, 0.0, 1.0, PathSegment::default())
        .unwrap()
        .with_model(ElementModel::Ideal);
    let want = [-1.0, -1.0, -1.0, 1.0];
    for s in BasisState::all(2) {
        let a = basis_amplitude(0.0, &spec, s).unwrap();
        assert!((a - want[s.index()]).norm() < 1e-15, "{s}");
    }
}

#[test]
fn realistic_cavities_approach_ideal_table() {
    let phases = [0.4, -0.3, 0.9, 0.1, -1.2, 0.5];
    let spec = NetworkSpec::uniform(4, 1e4, 1.0, 0.0, 0.0, PathSegment::default())
        .unwrap()
        .with_phases(&phases)
        .unwrap();
    for s in BasisState::all(4) {
        let a = basis_amplitude(0.0, &spec, s).unwrap();
        let want = Complex64::from_polar(1.0, ideal_phase_table(&spec, s).unwrap().evaluate(&phases));
        assert!((a - want).norm() < 1e-6, "{s}: {a} vs {want}");
    }
}

#[test]
fn blocked_cavities_act_as_mirrors() {
    let spec = NetworkSpec::uniform(3, 1e4, 1.0, 0.0, 0.0, PathSegment::default())
        .unwrap()
        .with_phases(&[0.2, 0.3, 0.5, 0.7])
        .unwrap()
        .with_blocked(&BTreeSet::from([3, 1]))
        .unwrap();
    assert_eq!(spec.blocked_set(), BTreeSet::from([1, 3]));
    for s in BasisState::all(3) {
        let a = basis_amplitude(0.0, &spec, s).unwrap();
        let want = Complex64::from_polar(1.0, ideal_phase_table(&spec, s).unwrap().evaluate(&spec.phases()));
        // Residual reflection of the detuned cavities is O(1/Δ).
        assert!((a - want).norm() < 1e-2, "{s}: {a} vs {want}");
    }
    assert!(spec.clone().with_blocked(&BTreeSet::from([4])).is_err());
}

#[test]
fn closed_forms_at_resonance() {
    let (k, gamma) = (1.3, 0.4);
    for f in [two_cavity_closed_form, cascade_closed_form] {
        assert!((f(0.0, 1e4, 1e4, k, gamma).unwrap() - 1.0).norm() < 1e-6);
        for (g1, g2) in [(1e4, 0.0), (0.0, 1e4), (0.0, 0.0)] {
            assert!((f(0.0, g1, g2, k, gamma).unwrap() + 1.0).norm() < 1e-12);
        }
    }
    // Strong front coupling, empty end cavity: -4 g² γ κ / 4 g² γ κ.
    assert!((two_cavity_closed_form(0.0, 50.0, 0.0, k, gamma).unwrap() + 1.0).norm() < 1e-14);
}

#[test]
fn verbatim_two_cavity_formula_exceeds_unit_modulus() {
    // Lossless cavities must give |T| = 1; the verbatim expression does not.
    let t = two_cavity_closed_form(0.5, 0.0, 1.5, 1.0, 0.0).unwrap();
    assert!(t.norm() > 1.3, "{}", t.norm());
    let c = cascade_closed_form(0.5, 0.0, 1.5, 1.0, 0.0).unwrap();
    assert!((c.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn amplitude_set_covers_every_state() {
    let spec = NetworkSpec::uniform(3, 2.0, 1.0, 0.1, 0.5, PathSegment::new(0.1, 0.01, 0.0).unwrap()).unwrap();
    let grid = vec![-1.0, 0.0, 1.0];
    let set = BasisAmplitudeSet::build(&spec, &grid).unwrap();
    assert_eq!(set.amplitudes.len(), 8);
    for s in BasisState::all(3) {
        for (i, &w) in grid.iter().enumerate() {
            assert_eq!(set.get(s)[i], basis_amplitude(w, &spec, s).unwrap());
            assert!(set.get(s)[i].norm() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn loss_inside_a_loop_can_raise_the_amplitude() {
    // Direct transmission and the loop through the end cavity interfere
    // destructively here; damping the loop weakens the cancellation.
    let k = 1.7994797141401977;
    let build = |eta: f64| {
        NetworkSpec::new(
            vec![CavitySpec::two_sided(0.0, k, 0.0, 0.0).unwrap(), CavitySpec::one_sided(1.836479085780252, k, 0.0, 0.0).unwrap()],
            vec![PathSegment::new(1.8085411542183736, eta, 1.7036629074513758).unwrap()],
            vec![PathSegment::new(0.6943516054104337, 0.24116260383376847, 0.42446220240988775).unwrap()],
        )
        .unwrap()
    };
    let s = BasisState::new(1, 2);
    let w = -1.3132349459906079;
    let before = basis_amplitude(w, &build(0.0), s).unwrap().norm();
    let after = basis_amplitude(w, &build(0.01), s).unwrap().norm();
    assert!(after > before, "{after} <= {before}");
}
