//! Property tests of the interferometer model, the Bayesian engine and the
//! state families.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use phasest::bayes::{make_quadrature, multishot_report, single_shot_report, FlatPrior};
use phasest::fock::{outcome_pmf, BeamSplitterMatrix, InputState};
use phasest::numeric::factorial;
use phasest::states::{
    best_fit_gaussian, expand_symmetric, is_symmetric, make_gaussian, make_noon, make_quasi_gaussian,
    project_symmetric, GaussianParams, Sign, SymmetricParams,
};
use proptest::prelude::*;

/// Creation-operator polynomial in the two output modes, keyed by
/// `(D1 power, D2 power)`.
type Poly = HashMap<(usize, usize), Complex64>;

/// Multiply by `u c^dag + v d^dag`.
fn mul_linear(p: &Poly, u: f64, v: f64) -> Poly {
    let mut out = Poly::new();
    for (&(a, b), &z) in p {
        *out.entry((a + 1, b)).or_default() += z * u;
        *out.entry((a, b + 1)).or_default() += z * v;
    }
    out
}

/// Expands the phase-shifted input through the balanced beam splitter one
/// creation operator at a time and reads off `|m, N-m>` amplitudes.
fn oracle_pmf(state: &InputState, phi: f64) -> Vec<f64> {
    let n = state.photon_count();
    let (s, c) = (PI / 4.0).sin_cos();
    let mut amp = vec![Complex64::new(0.0, 0.0); n + 1];
    for (k, ck) in state.coeffs().iter().enumerate() {
        let pref = ck * Complex64::from_polar(1.0, phi * (n - k) as f64) / (factorial(n - k) * factorial(k)).sqrt();
        let mut p = Poly::new();
        p.insert((0, 0), pref);
        for _ in 0..n - k {
            p = mul_linear(&p, c, s);
        }
        for _ in 0..k {
            p = mul_linear(&p, -s, c);
        }
        for ((a, b), z) in p {
            assert_eq!(a + b, n);
            amp[a] += z * (factorial(a) * factorial(b)).sqrt();
        }
    }
    amp.iter().map(|z| z.norm_sqr()).collect()
}

fn arb_state(n: usize) -> impl Strategy<Value = InputState> {
    (
        prop::collection::vec(0.01f64..1.0, n + 1),
        prop::collection::vec(-PI..PI, n + 1),
    )
        .prop_map(|(r, t)| InputState::normalized(r, t).unwrap())
}

fn arb_sized_state(max_n: usize) -> impl Strategy<Value = InputState> {
    (1..=max_n).prop_flat_map(arb_state)
}

#[test]
fn beam_splitter_orthogonal_up_to_twelve() {
    for n in 1..=12 {
        let bs = BeamSplitterMatrix::balanced(n).unwrap();
        assert!(bs.orthogonality_defect() < 1e-10, "N = {n}");
    }
}

#[test]
fn hong_ou_mandel_null() {
    let s = InputState::new(vec![0.0, 1.0, 0.0], vec![0.0; 3]).unwrap();
    let bs = BeamSplitterMatrix::balanced(2).unwrap();
    for phi in [-1.0, 0.0, 0.4, 2.0] {
        assert!(outcome_pmf(&s, phi, &bs).unwrap().probs[1] < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pmf_matches_operator_expansion(state in arb_sized_state(3), phi in -PI..PI) {
        let bs = BeamSplitterMatrix::balanced(state.photon_count()).unwrap();
        let fast = outcome_pmf(&state, phi, &bs).unwrap();
        for (a, b) in fast.probs.iter().zip(oracle_pmf(&state, phi)) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pmf_normalized(state in arb_sized_state(10), phi in -10.0f64..10.0) {
        let bs = BeamSplitterMatrix::balanced(state.photon_count()).unwrap();
        prop_assert!((outcome_pmf(&state, phi, &bs).unwrap().total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pmf_two_pi_periodic(state in arb_sized_state(10), phi in -PI..PI) {
        let bs = BeamSplitterMatrix::balanced(state.photon_count()).unwrap();
        let a = outcome_pmf(&state, phi, &bs).unwrap();
        let b = outcome_pmf(&state, phi + 2.0 * PI, &bs).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn noon_period_is_two_pi_over_n(n in 1usize..=12, phi in -PI..PI, minus in any::<bool>()) {
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let s = make_noon(n, sign).unwrap();
        let bs = BeamSplitterMatrix::balanced(n).unwrap();
        let a = outcome_pmf(&s, phi, &bs).unwrap();
        let b = outcome_pmf(&s, phi + 2.0 * PI / n as f64, &bs).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn total_variance_decomposes(state in arb_sized_state(6), width in 0.05f64..PI, center in -1.0f64..1.0) {
        let prior = FlatPrior::new(center, width).unwrap();
        let grid = make_quadrature(prior, 96).unwrap();
        let rep = single_shot_report(&state, &prior, &grid).unwrap();
        prop_assert!((rep.total_probability() - 1.0).abs() < 1e-10);
        let lhs = prior.variance();
        let rhs = rep.bmse + rep.estimator_spread(center);
        prop_assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn extra_shot_never_hurts(
        (a, b, c) in (1usize..=4).prop_flat_map(|n| (arb_state(n), arb_state(n), arb_state(n))),
        width in 0.1f64..PI,
    ) {
        let prior = FlatPrior::centered(width).unwrap();
        let grid = make_quadrature(prior, 96).unwrap();
        let one = multishot_report(&[a.clone()], &prior, &grid).unwrap().bmse;
        let two = multishot_report(&[a.clone(), b.clone()], &prior, &grid).unwrap().bmse;
        let three = multishot_report(&[a, b, c], &prior, &grid).unwrap().bmse;
        prop_assert!(two <= one + 1e-12);
        prop_assert!(three <= two + 1e-12);
    }

    #[test]
    fn quadrature_converged_at_default(state in arb_sized_state(10), width in 0.05f64..PI) {
        let prior = FlatPrior::centered(width).unwrap();
        let coarse = single_shot_report(&state, &prior, &make_quadrature(prior, 96).unwrap()).unwrap();
        let fine = single_shot_report(&state, &prior, &make_quadrature(prior, 192).unwrap()).unwrap();
        prop_assert!((coarse.bmse - fine.bmse).abs() < 1e-8);
    }

    #[test]
    fn symmetric_round_trip(
        (n, amps, phases) in (1usize..=10).prop_flat_map(|n| (
            Just(n),
            prop::collection::vec(0.01f64..1.0, SymmetricParams::amplitude_len(n)),
            prop::collection::vec(-3.0f64..3.0, SymmetricParams::phase_len(n)),
        ))
    ) {
        let params = SymmetricParams { photon_count: n, half_amplitudes: amps, half_phases: phases };
        let s = expand_symmetric(&params).unwrap();
        prop_assert!(is_symmetric(&s, 1e-10));
        let back = expand_symmetric(&project_symmetric(&s)).unwrap();
        prop_assert!(s.fidelity(&back) > 1.0 - 1e-10);
        prop_assert!(s.overlap(&back) > 1.0 - 1e-10);
    }

    #[test]
    fn constructors_normalized(n in 1usize..=14, rho in 0.0f64..2.0, rho_prime in 0.0f64..0.2, delta in 0.01f64..PI) {
        let p = GaussianParams { rho, rho_prime, sign: Sign::Plus };
        for s in [
            make_noon(n, Sign::Minus).unwrap(),
            make_gaussian(n, p).unwrap(),
            make_quasi_gaussian(n, p).unwrap(),
            best_fit_gaussian(n, delta, Sign::Plus).unwrap(),
        ] {
            let norm: f64 = s.amplitudes().iter().map(|r| r * r).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
        let g = make_gaussian(n, p).unwrap();
        for k in 0..=n {
            prop_assert!((g.amplitudes()[k] - g.amplitudes()[n - k]).abs() < 1e-12);
        }
        prop_assert!(is_symmetric(&g, 1e-10));
    }

    #[test]
    fn sign_flip_leaves_bmse(n in 1usize..=10, width in 0.05f64..PI, rho in 0.0f64..1.0) {
        let prior = FlatPrior::centered(width).unwrap();
        let grid = make_quadrature(prior, 96).unwrap();
        let bmse = |s: &InputState| single_shot_report(s, &prior, &grid).unwrap().bmse;
        let plus = make_noon(n, Sign::Plus).unwrap();
        let minus = make_noon(n, Sign::Minus).unwrap();
        prop_assert!((bmse(&plus) - bmse(&minus)).abs() < 1e-12);
        let gp = make_gaussian(n, GaussianParams::new(rho, Sign::Plus)).unwrap();
        let gm = make_gaussian(n, GaussianParams::new(rho, Sign::Minus)).unwrap();
        prop_assert!((bmse(&gp) - bmse(&gm)).abs() < 1e-12);
    }
}

/// N00N wins below the boundary band and the best-fit Gaussian wins above it.
#[test]
fn regime_comparison_away_from_boundary() {
    for n in 2..=10usize {
        for i in 1..=16 {
            let delta = PI * i as f64 / 16.0;
            let nd = n as f64 * delta;
            if (4.0..=6.0).contains(&nd) {
                continue;
            }
            let prior = FlatPrior::centered(delta).unwrap();
            let grid = make_quadrature(prior, 96).unwrap();
            let noon = single_shot_report(&make_noon(n, Sign::Plus).unwrap(), &prior, &grid).unwrap().bmse;
            let gauss = single_shot_report(&best_fit_gaussian(n, delta, Sign::Plus).unwrap(), &prior, &grid).unwrap().bmse;
            if nd < 4.0 {
                assert!(noon <= gauss + 1e-12, "N = {n}, delta = {delta}: {noon} vs {gauss}");
            } else {
                assert!(gauss <= noon + 1e-12, "N = {n}, delta = {delta}: {gauss} vs {noon}");
            }
        }
    }
}
