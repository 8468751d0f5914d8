use proptest::prelude::*;
use qbsde::constants::{self, NormInputs, PartitionInputs};
use qbsde::generators::{Growth, StructuralParams};

fn inputs() -> NormInputs {
    NormInputs { xi_inf: 0.5, alpha_einf: 0.1, alpha_bar_minf: 0.1, alpha_tilde_linf: 0.1, v_bmo: 0.0, c0: 1.0, horizon: 1.0 }
}

proptest! {
    #[test]
    fn c1_sequence_is_nondecreasing(c1 in 0.0..5.0f64, c2 in 0.0..5.0f64, delta in 0.0..0.95f64, n in 1usize..8) {
        let s = constants::c1_recursion(c1, c2, delta, n);
        prop_assert_eq!(s.len(), n + 1);
        prop_assert_eq!(s[0], 0.0);
        prop_assert!(s.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn c6_sequence_is_nondecreasing(c1bar in 0.0..3.0f64, c5n in 0.0..3.0f64, c in 0.0..2.0f64, m in 0.0..2.0f64) {
        let phi = Growth::Polynomial { c, m };
        let s = constants::c6_sequence(c1bar, c5n, |x| phi.eval(x), 30);
        prop_assert!(s.windows(2).all(|w| w[1] >= w[0] || w[0].is_infinite()));
    }

    #[test]
    fn theta_max_inverts_its_definition(n in 1usize..10, q in 1.0..5.0f64, gamma in 0.01..10.0f64, k in 1e-3..1e6f64) {
        let th = constants::theta_max(n, q, gamma, k);
        let back = 1.0 / (4.0 * n as f64 * (q * gamma).max(1.0) * th);
        prop_assert!((back - k).abs() <= 1e-12 * k);
    }

    #[test]
    fn partition_epsilon0_is_the_smaller_ratio(
        gamma in 0.1..100.0f64, gamma_bar in 0.1..100.0f64, n1 in 0usize..3, n2 in 0usize..3, n3 in 1usize..3,
    ) {
        let q = PartitionInputs {
            n1, n2, n3, beta: 0.5, gamma, gamma_bar, lambda: 0.0, delta: 0.0, horizon: 1.0, c1: 1.0, c2: 0.0,
        };
        let r = constants::compute_global_constants_42c(&q).unwrap();
        prop_assert_eq!(r.epsilon0, (gamma_bar / 9.0).min(gamma / 24.0));
        prop_assert!(r.k_tilde >= r.c6);
    }

    #[test]
    fn young_power_inequality_holds_and_is_tight(a in 1e-3..1e3f64, b in 0.0..1e3f64, delta in 0.0..0.95f64) {
        let (lhs, rhs) = constants::young_power_sides(a, b, delta);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
        // Equality at the maximiser of a b^{1+δ} − b², b* = (a(1+δ)/2)^{1/(1−δ)}.
        let bstar = (a * (1.0 + delta) / 2.0).powf(1.0 / (1.0 - delta));
        let (l, r) = constants::young_power_sides(a, bstar, delta);
        prop_assert!((r - l).abs() <= 1e-9 * r.max(1.0));
    }

    #[test]
    fn young_bmo_inequality_holds(
        lambda in 0.0..5.0f64, p in 1.01..10.0f64, n in 1usize..5, r in 0.1..5.0f64,
        delta in 0.0..0.9f64, x in 0.0..1e3f64, m in 0.01..10.0f64,
    ) {
        let (lhs, rhs) = constants::young_bmo_sides(lambda, p, n, r, delta, x, m);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
    }
}

#[test]
fn p_equal_one_requires_zero_lambda() {
    let params = StructuralParams { n: 2, p: 1.0, lambda: 0.5, ..StructuralParams::default() };
    assert!(constants::compute_local_constants(&params, &inputs()).is_err());
    let params = StructuralParams { n: 2, p: 1.0, lambda: 0.0, ..StructuralParams::default() };
    assert!(constants::compute_local_constants(&params, &inputs()).is_ok());
}

#[test]
fn local_theta_max_matches_k() {
    let params = StructuralParams { n: 3, gamma: 2.0, ..StructuralParams::default() };
    let r = constants::compute_local_constants(&params, &inputs()).unwrap();
    assert_eq!(r.c1_sequence.len(), 4);
    assert_eq!(r.k, *r.c1_sequence.last().unwrap());
    let expected = constants::theta_max(3, params.q(), 2.0, r.k);
    assert_eq!(r.theta_max, expected);
}

#[test]
fn sampled_young_suite_is_clean() {
    let report = constants::verify_young_inequalities(20_000, 42);
    assert_eq!(report.violations, 0);
    assert!(report.worst_margin_bmo >= -1e-12 && report.worst_margin_power >= -1e-12);
}
