use qbsde::generators::{gallery, GalleryParams, ParamValue};
use qbsde::onedim::{exp_transform_oracle, solve_1d, ScalarProblem, SolverOptions};
use qbsde::system::{distance_ratios, paste_intervals, picard_solve, residual_check, row_sources, PicardOptions, RowSource, SystemProblem};
use qbsde::{BrownianEnsemble, TimeGrid};

fn ensemble(seed: u64, paths: usize, steps: usize, d: usize) -> BrownianEnsemble {
    BrownianEnsemble::generate(seed, paths, TimeGrid::new(1.0, steps).unwrap(), d).unwrap()
}

fn scalar(pairs: &[(&str, f64)]) -> GalleryParams {
    pairs.iter().map(|(k, v)| (k.to_string(), ParamValue::Scalar(*v))).collect()
}

#[test]
fn paths_are_addressed_by_counter() {
    let small = ensemble(9, 4, 8, 2);
    let large = ensemble(9, 64, 8, 2);
    for p in 0..4 {
        for k in 0..8 {
            assert_eq!(small.increment(p, k), large.increment(p, k));
        }
    }
    assert_ne!(ensemble(10, 4, 8, 2).increment(0, 0), small.increment(0, 0));
}

#[test]
fn quadratic_scalar_matches_exponential_oracle() {
    let ens = ensemble(1, 1 << 13, 32, 1);
    for gamma in [0.5, 1.0, 2.0] {
        let xi: Vec<f64> = (0..ens.paths()).map(|p| ens.position(p, ens.steps())[0].sin()).collect();
        let driver = move |_: usize, _: usize, _: f64, _: f64, z: &[f64]| 0.5 * gamma * z[0] * z[0];
        let sol = solve_1d(&ScalarProblem::new(xi.clone(), &driver, ens.grid().full()), &ens, &SolverOptions::default()).unwrap();
        let oracle = exp_transform_oracle(gamma, &xi).unwrap();
        assert!((sol.y0_mean() - oracle.value).abs() <= 5e-2, "gamma {gamma}: {} vs {}", sol.y0_mean(), oracle.value);
    }
}

#[test]
fn linear_system_decays_exponentially() {
    // g = −βy with constant terminal c gives Y_t = c e^{−β(T−t)}.
    let ens = ensemble(2, 256, 64, 1);
    let spec = gallery("linear", 1, &scalar(&[("n", 2.0), ("beta", 0.5)])).unwrap();
    let xi: Vec<f64> = (0..ens.paths()).flat_map(|_| [1.0, -2.0]).collect();
    let problem = SystemProblem::new(spec, xi, ens.grid().full());
    let sol = picard_solve(&problem, &ens, &PicardOptions::default()).unwrap();
    assert!(sol.converged);
    for (i, c) in [1.0, -2.0].into_iter().enumerate() {
        let exact = c * (-0.5f64).exp();
        let got = sol.y.at(0, 0)[i];
        assert!((got - exact).abs() <= 1e-2 * exact.abs(), "component {i}: {got} vs {exact}");
    }
}

#[test]
fn pasting_agrees_with_a_single_window() {
    let ens = ensemble(3, 512, 16, 1);
    let spec = gallery("linear", 1, &scalar(&[("n", 2.0), ("beta", 0.5)])).unwrap();
    let xi: Vec<f64> = (0..ens.paths())
        .flat_map(|p| {
            let b = ens.position(p, ens.steps())[0];
            [0.5 * b.sin(), 0.5 * (b + 1.0).sin()]
        })
        .collect();
    let problem = SystemProblem::new(spec, xi, ens.grid().full());
    let whole = picard_solve(&problem, &ens, &PicardOptions::default()).unwrap();
    let pasted = paste_intervals(&problem, &ens, 4, &PicardOptions::default()).unwrap();
    let worst = whole.y.values().iter().zip(pasted.y.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn zero_generator_recovers_the_martingale_integrand() {
    // ξ = B_T gives Y = B and Z = 1.
    let ens = ensemble(4, 4096, 16, 1);
    let spec = gallery("zero", 1, &GalleryParams::new()).unwrap();
    let xi: Vec<f64> = (0..ens.paths()).map(|p| ens.position(p, ens.steps())[0]).collect();
    let problem = SystemProblem::new(spec, xi, ens.grid().full());
    let sol = picard_solve(&problem, &ens, &PicardOptions::default()).unwrap();
    // Z is defined on the steps before the horizon.
    let n = ens.steps();
    let zbar = (0..ens.paths()).flat_map(|p| (0..n).map(move |k| (p, k))).map(|(p, k)| sol.z.at(p, k)[0]).sum::<f64>()
        / (ens.paths() * n) as f64;
    assert!((zbar - 1.0).abs() < 0.02, "{zbar}");
    assert!(sol.y.at(0, 0)[0].abs() < 0.05);
    let res = residual_check(&sol.y, &sol.z, &problem, &ens, false).unwrap();
    assert!(res.max_rms() < 0.1, "{}", res.max_rms());
}

#[test]
fn reruns_are_bitwise_identical() {
    let p = scalar(&[("theta1", 1.0), ("theta2", 1.0), ("vartheta1", 0.01), ("vartheta2", 0.01)]);
    let run = || {
        let ens = ensemble(5, 512, 8, 1);
        let xi: Vec<f64> = (0..ens.paths()).flat_map(|p| {
            let b = ens.position(p, ens.steps())[0];
            [0.3 * b.sin(), 0.3 * b.cos()]
        }).collect();
        let problem = SystemProblem::new(gallery("(2.4b)", 1, &p).unwrap(), xi, ens.grid().full());
        picard_solve(&problem, &ens, &PicardOptions::default()).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.y.values(), b.y.values());
    assert_eq!(a.z.values(), b.z.values());
    assert_eq!(a.distance_log, b.distance_log);
}

#[test]
fn row_sources_follow_the_sweep_order() {
    let rows = row_sources(2, 4);
    assert_eq!(rows, vec![RowSource::Fresh, RowSource::Fresh, RowSource::Own, RowSource::Frozen]);
}

#[test]
fn ratios_stop_after_a_zero_distance() {
    assert_eq!(distance_ratios(&[4.0, 2.0, 0.0, 0.0]), vec![0.5, 0.0, 0.0]);
}
