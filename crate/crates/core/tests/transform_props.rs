use proptest::prelude::*;
use qbsde::generators::{gallery, GalleryParams};
use qbsde::system::{residual_check, SystemProblem};
use qbsde::transforms::{self, TransformLabel, TransformSpec};
use qbsde::{BrownianEnsemble, PathProcess, TimeGrid};

fn small_ensemble(seed: u64, d: usize) -> BrownianEnsemble {
    BrownianEnsemble::generate(seed, 16, TimeGrid::new(1.0, 6).unwrap(), d).unwrap()
}

/// Plain Gaussian elimination with partial pivoting, kept apart from the library's LU.
fn det_by_elimination(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs())).unwrap();
        if a[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                a.swap(p * n + k, c * n + k);
            }
            det = -det;
        }
        det *= a[c * n + c];
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
        }
    }
    det
}

fn coeffs(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(|n| prop::collection::vec(-3.0..3.0f64, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn row_replacement_determinant_is_b1(b in coeffs(2..=6)) {
        prop_assume!(b[0].abs() > 1e-3);
        let t = transforms::row_replacement_transform(&b).unwrap();
        prop_assert_eq!(t.determinant, b[0]);
        let oracle = det_by_elimination(t.matrix.clone(), b.len());
        prop_assert!((oracle - b[0]).abs() <= 1e-12 * b[0].abs().max(1.0));
    }

    #[test]
    fn pinned_column_determinant_matches_elimination(
        (a, b) in (2..=6usize).prop_flat_map(|n| (prop::collection::vec(-3.0..3.0f64, n), prop::collection::vec(-3.0..3.0f64, n)))
    ) {
        let ba: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        prop_assume!(a[0].abs() > 1e-2 && ba.abs() > 1e-2);
        let t = transforms::pinned_column_transform(&a, &b).unwrap();
        let n = a.len();
        let oracle = det_by_elimination(t.matrix.clone(), n);
        prop_assert!((t.determinant - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
        let formula = a[0].powi(n as i32 - 2) * ba;
        prop_assert!((t.determinant - formula).abs() <= 1e-9 * formula.abs().max(1.0));
    }

    #[test]
    fn apply_then_inverse_round_trips(a in prop::collection::vec(-2.0..2.0f64, 9), x in prop::collection::vec(-5.0..5.0f64, 6)) {
        let t = match TransformSpec::from_matrix(a, 3, TransformLabel::User) {
            Ok(t) if t.condition < 1e4 => t,
            _ => return Ok(()),
        };
        let back = t.apply_inverse(&t.apply(&x, 2), 2);
        for (u, v) in x.iter().zip(&back) {
            prop_assert!((u - v).abs() <= 1e-9 * t.condition);
        }
    }

    #[test]
    fn transformed_pair_inverts(seed in 0u64..1000, a in prop::collection::vec(-2.0..2.0f64, 4)) {
        let t = match TransformSpec::from_matrix(a, 2, TransformLabel::User) {
            Ok(t) if t.condition < 100.0 => t,
            _ => return Ok(()),
        };
        let ens = small_ensemble(seed, 2);
        let y = PathProcess::from_fn(&ens, 2, |m, k, o| { o[0] = ens.position(m, k)[0]; o[1] = (m + k) as f64 * 0.1; });
        let z = PathProcess::from_fn(&ens, 4, |m, k, o| o.iter_mut().enumerate().for_each(|(i, v)| *v = ((m * 7 + k * 3 + i) as f64).sin()));
        let (ty, tz) = t.transform_pair(&y, &z).unwrap();
        let (by, bz) = t.inverse_pair(&ty, &tz).unwrap();
        for (u, v) in y.values().iter().chain(z.values()).zip(by.values().iter().chain(bz.values())) {
            prop_assert!((u - v).abs() <= 1e-12 * t.condition);
        }
    }

    #[test]
    fn reciprocal_condition_agrees_with_product_form(alpha in 1.01..50.0f64) {
        // 1/α + 1/β = 1  ⟺  β = α / (α − 1)
        let beta = alpha / (alpha - 1.0);
        prop_assert!(transforms::check_reciprocal_condition(alpha, beta).unwrap());
        prop_assert!(!transforms::check_reciprocal_condition(alpha, beta * 1.01).unwrap());
    }

    #[test]
    fn shift_then_unshift_is_identity(seed in 0u64..500, h0 in -2.0..2.0f64, h1 in -2.0..2.0f64) {
        let ens = small_ensemble(seed, 1);
        let spec = gallery("(2.4b)", 1, &GalleryParams::new()).unwrap();
        let h = PathProcess::constant(&ens, &[h0, h1]);
        let shifted = transforms::shift_terminal(&spec, &h, vec![0.5; 2 * ens.paths()], &ens, ens.grid().full()).unwrap();
        let y = PathProcess::from_fn(&ens, 2, |m, k, o| { o[0] = ens.position(m, k)[0]; o[1] = -(k as f64); });
        let z = PathProcess::from_fn(&ens, 2, |m, _, o| { o[0] = m as f64 * 0.01; o[1] = 1.0; });
        let (uy, uz) = shifted.unshift(&y, &z).unwrap();
        let (ry, rz) = shifted.shift(&uy, &uz).unwrap();
        for (u, v) in y.values().iter().chain(z.values()).zip(ry.values().iter().chain(rz.values())) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn transformed_residual_is_a_times_original() {
    let spec = gallery("(2.4b)", 1, &GalleryParams::new()).unwrap();
    let ens = small_ensemble(3, 1);
    let y = PathProcess::from_fn(&ens, 2, |m, k, o| {
        o[0] = (0.3 * ens.position(m, k)[0]).sin();
        o[1] = 0.2 * k as f64;
    });
    let z = PathProcess::from_fn(&ens, 2, |m, k, o| {
        o[0] = 0.1 * (m + k) as f64;
        o[1] = -0.4;
    });
    let xi: Vec<f64> = (0..ens.paths()).flat_map(|p| y.at(p, ens.steps()).to_vec()).collect();
    let problem = SystemProblem::new(spec.clone(), xi, ens.grid().full());
    let t = TransformSpec::from_matrix(vec![2.0, 1.0, -0.5, 1.5], 2, TransformLabel::User).unwrap().with_generator(&spec).unwrap();
    let (ty, tz) = t.transform_pair(&y, &z).unwrap();
    let r = residual_check(&y, &z, &problem, &ens, false).unwrap();
    let rt = residual_check(&ty, &tz, &t.transform_problem(&problem).unwrap(), &ens, false).unwrap();
    for p in 0..ens.paths() {
        let ar = transforms::mat_apply(&t.matrix, 2, &r.pathwise[2 * p..2 * p + 2], 1);
        for (u, v) in ar.iter().zip(&rt.pathwise[2 * p..2 * p + 2]) {
            assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0), "path {p}: {u} vs {v}");
        }
    }
}

#[test]
fn nonsolvable_scaling_reaches_the_normal_form() {
    let v = transforms::check_nonsolvable_pair(0.0, 0.0, 0.5, 1.0, 2, 500, 1).unwrap();
    assert!(v.nonsolvable, "{}", v.reason);
    assert_eq!(v.coefficients, Some([1.0, 0.5]));
    let off = transforms::check_nonsolvable_pair(0.1, 0.0, 0.5, 1.0, 2, 500, 1).unwrap();
    assert!(!off.nonsolvable);
}

#[test]
fn singular_row_replacement_is_rejected() {
    assert!(transforms::row_replacement_transform(&[0.0, 1.0]).is_err());
    assert!(transforms::pinned_column_transform(&[1.0, 2.0], &[2.0, -1.0]).is_err());
}
