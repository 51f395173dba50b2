//! Cross-module invariants as property tests over seeds.

use proptest::prelude::*;

use qmap::channels::{
    channel_norm, choi, is_cp, mixture_of_unitaries, paper_counterexample, random_channel,
    random_unitary, to_superoperator, LinearMap,
};
use qmap::distances::{contraction_ratio, distance, kadison_bound_check, DistanceKind};
use qmap::entanglement::{
    closest_ppt, ensemble_to_density, estimate_entanglement, ppt_check, random_separable,
    EstimatorConfig,
};
use qmap::linalg::{hermitian_eig, Dims};
use qmap::search::{
    exact_max_ratio, extract_state_pair, search_violations, verify_search_report, SearchConfig,
    SearchReport,
};
use qmap::states::{purity, random_density, standard_state, validate_density, StandardState};
use qmap::Error;

fn dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3), Just(4)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_states_are_valid(seed in any::<u64>(), d in prop_oneof![Just(2usize), Just(3), Just(4), Just(8)]) {
        let s = random_density(d, d, seed).unwrap();
        let again = validate_density(s.matrix(), None).unwrap();
        prop_assert!(again.matrix().max_abs_diff(s.matrix()) == 0.0);
        let p = purity(&s);
        prop_assert!(p >= 1.0 / d as f64 - 1e-9 && p <= 1.0 + 1e-9);
    }

    #[test]
    fn channels_preserve_states(seed in any::<u64>(), d in dim(), k in 1usize..5) {
        let ch = random_channel(d, k, seed).unwrap();
        let s = random_density(d, d, seed ^ 1).unwrap();
        let out = ch.apply(&s).unwrap();
        prop_assert_eq!(out.dim(), d);
        prop_assert!(is_cp(&choi(&ch)).unwrap().completely_positive);
        prop_assert!(channel_norm(&ch) >= 1.0 - 1e-12);
        let via_super = to_superoperator(&ch).apply_operator(s.matrix());
        prop_assert!(via_super.max_abs_diff(out.matrix()) <= 1e-10);
    }

    #[test]
    fn distances_are_nonnegative_and_vanish_on_the_diagonal(seed in any::<u64>(), d in dim()) {
        let s = random_density(d, d, seed).unwrap();
        let r = random_density(d, d, seed.wrapping_add(1)).unwrap();
        for kind in DistanceKind::ALL {
            prop_assert!(distance(kind, &s, &r).unwrap() >= -1e-12);
            prop_assert!(distance(kind, &s, &s).unwrap().abs() <= 1e-10);
        }
    }

    #[test]
    fn distances_are_unitarily_invariant(seed in any::<u64>(), d in dim()) {
        let s = random_density(d, d, seed).unwrap();
        let r = random_density(d, d, seed.wrapping_add(1)).unwrap();
        let u = random_unitary(d, seed);
        let (us, ur) = (s.conjugated_by(&u).unwrap(), r.conjugated_by(&u).unwrap());
        for kind in DistanceKind::ALL {
            let gap = (distance(kind, &s, &r).unwrap() - distance(kind, &us, &ur).unwrap()).abs();
            prop_assert!(gap <= 1e-9, "{kind}: {gap}");
        }
    }

    #[test]
    fn contractive_distances_contract(seed in any::<u64>(), d in dim(), k in 1usize..5) {
        let ch = random_channel(d, k, seed).unwrap();
        let s = random_density(d, d, seed ^ 2).unwrap();
        let r = random_density(d, d, seed ^ 3).unwrap();
        for kind in [DistanceKind::Trace, DistanceKind::Bures, DistanceKind::RelativeEntropy] {
            match contraction_ratio(kind, &ch, &s, &r) {
                Ok(ratio) => prop_assert!(ratio <= 1.0 + 1e-8, "{kind}: {ratio}"),
                Err(Error::InfiniteDistance | Error::DegenerateInput { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
        prop_assert!(kadison_bound_check(&ch, &s, &r).unwrap().holds);
    }

    #[test]
    fn worst_case_ratio_respects_the_norm(seed in any::<u64>(), d in dim(), k in 1usize..5) {
        let ch = random_channel(d, k, seed).unwrap();
        let exact = exact_max_ratio(&ch);
        prop_assert!(exact <= channel_norm(&ch) + 1e-9);
        let pair = extract_state_pair(&ch).unwrap();
        prop_assert!((pair.ratio - exact).abs() <= 1e-8, "{} vs {exact}", pair.ratio);
        let unital = mixture_of_unitaries(d, k, seed).unwrap();
        prop_assert!(exact_max_ratio(&unital) <= 1.0 + 1e-9);
    }

    #[test]
    fn ensembles_are_separable_states(seed in any::<u64>(), d2 in 2usize..4, terms in 1usize..8) {
        let e = random_separable(Dims { d1: 2, d2 }, terms, seed).unwrap();
        let s = ensemble_to_density(&e).unwrap();
        prop_assert!(ppt_check(&s).unwrap().ppt);
        let text = serde_json::to_string(&e).unwrap();
        prop_assert_eq!(serde_json::from_str::<qmap::entanglement::SeparableEnsemble>(&text).unwrap(), e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn witness_certifies_the_upper_bound(seed in any::<u64>(), d2 in 2usize..4) {
        let dims = Dims { d1: 2, d2 };
        let s = random_density(2 * d2, 2 * d2, seed).unwrap().with_dims(Some(dims)).unwrap();
        let cfg = EstimatorConfig { restarts: 2, max_iterations: 500, seed, ..EstimatorConfig::default() };
        let est = estimate_entanglement(&s, DistanceKind::HilbertSchmidt, &cfg).unwrap();
        let w = ensemble_to_density(&est.witness).unwrap();
        let recomputed = distance(DistanceKind::HilbertSchmidt, &s, &w).unwrap();
        prop_assert!((recomputed - est.upper).abs() <= 1e-10);
        prop_assert!(est.lower.unwrap() <= est.upper + 1e-6);
    }

    #[test]
    fn search_reports_survive_a_round_trip(seed in any::<u64>(), d in dim()) {
        let report = search_violations(&SearchConfig {
            dim: d,
            kraus_count: 2,
            budget: 60,
            seed,
            warm_start: None,
        })
        .unwrap();
        let text = serde_json::to_string(&report).unwrap();
        let back: SearchReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &report);
        let v = verify_search_report(&back).unwrap();
        prop_assert!(v.ok(), "{v:?}");
        prop_assert!((v.recomputed_ratio - report.best_ratio).abs() <= 1e-10);
    }
}

#[test]
fn hilbert_schmidt_expands_on_the_counterexample() {
    let (ch, s, r) = paper_counterexample();
    let ratio = contraction_ratio(DistanceKind::HilbertSchmidt, &ch, &s, &r).unwrap();
    assert!((ratio - 2.0).abs() <= 1e-12);
    assert!(kadison_bound_check(&ch, &s, &r).unwrap().holds);
}

#[test]
fn hermitian_reconstruction() {
    for seed in 0..100u64 {
        let d = 1 + seed as usize % 8;
        let m = random_density(d, d, seed).unwrap().matrix().scale(3.0);
        let e = hermitian_eig(&m).unwrap();
        let back = e.recompose(&e.values);
        assert!(back.max_abs_diff(&m) <= 1e-9 * m.max_abs().max(1.0));
    }
}

/// Analytic closest separable state on the Werner line (twirling argument):
/// werner(1/3) for p ≥ 1/3, at HS distance (3/4)(p - 1/3)².
fn werner_oracle(p: f64) -> f64 {
    0.75 * (p - 1.0 / 3.0).max(0.0).powi(2)
}

#[test]
fn werner_line_is_monotone_and_matches_the_oracle() {
    let cfg = EstimatorConfig::default();
    let mut previous = f64::NEG_INFINITY;
    for p in [0.4, 0.6, 0.8, 1.0] {
        let w = standard_state(StandardState::Werner(p)).unwrap();
        let est = estimate_entanglement(&w, DistanceKind::HilbertSchmidt, &cfg).unwrap();
        assert!(est.upper >= previous - 1e-3, "p = {p}");
        assert!(
            (est.upper - werner_oracle(p)).abs() <= 1e-3,
            "p = {p}: {}",
            est.upper
        );
        assert!((est.lower.unwrap() - werner_oracle(p)).abs() <= 1e-7);
        previous = est.upper;
    }
    let half = standard_state(StandardState::Werner(0.5)).unwrap();
    assert!((closest_ppt(&half).unwrap().distance - 1.0 / 48.0).abs() <= 1e-9);
}

#[test]
fn ordering_on_two_by_three() {
    let dims = Dims { d1: 2, d2: 3 };
    let cfg = EstimatorConfig {
        restarts: 4,
        ..EstimatorConfig::default()
    };
    for seed in 0..3 {
        let s = random_density(6, 6, seed)
            .unwrap()
            .with_dims(Some(dims))
            .unwrap();
        let est = estimate_entanglement(&s, DistanceKind::HilbertSchmidt, &cfg).unwrap();
        assert!(est.lower.unwrap() <= est.upper + 1e-6);
    }
}

#[test]
fn ppt_examples() {
    let w = standard_state(StandardState::Werner(1.0 / 3.0)).unwrap();
    let r = ppt_check(&w).unwrap();
    assert!(r.ppt && r.min_eigenvalue.abs() < 1e-12);
    for p in [0.0, 0.5, 0.9] {
        let w = standard_state(StandardState::Werner(p)).unwrap();
        let expected = (1.0 - 3.0 * p) / 4.0;
        assert!((ppt_check(&w).unwrap().min_eigenvalue - expected).abs() < 1e-12);
    }
}
