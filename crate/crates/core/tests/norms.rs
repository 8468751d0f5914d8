use proptest::prelude::*;
use qbsde::norms::Norms;
use qbsde::{BrownianEnsemble, Error, PathProcess, TimeGrid, Window};

fn ensemble(seed: u64, paths: usize, horizon: f64, steps: usize) -> BrownianEnsemble {
    BrownianEnsemble::generate(seed, paths, TimeGrid::new(horizon, steps).unwrap(), 1).unwrap()
}

#[test]
fn constant_process_is_exact() {
    for (horizon, c) in [(1.0, 2.0), (2.0, 0.5), (0.25, 3.0)] {
        let ens = ensemble(1, 256, horizon, 16);
        let nm = Norms::new(&ens);
        let w = ens.grid().full();
        let p = PathProcess::constant(&ens, &[c]);
        let tol = 1e-12 * c * horizon;
        assert!((nm.bmo(&p, w).unwrap() - c * horizon.sqrt()).abs() <= tol);
        assert!((nm.linf(&p, w).unwrap() - c * horizon).abs() <= tol);
        assert!((nm.minf(&p, w).unwrap() - c * horizon).abs() <= tol);
        for r in [0.5, 1.0, 3.0] {
            assert!((nm.einf(&p, r, w).unwrap() - c * horizon).abs() <= 1e-10);
        }
        assert_eq!(nm.sup_norm(&p, w).unwrap(), c);
    }
}

#[test]
fn zero_process_has_zero_norms() {
    let ens = ensemble(2, 128, 1.0, 8);
    let nm = Norms::new(&ens);
    let w = ens.grid().full();
    let z = PathProcess::zeros_like(&ens, 2);
    let r = nm.report(&z, w, &[1.0]).unwrap();
    assert_eq!((r.sup_norm, r.linf, r.minf, r.bmo), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(r.einf["1"], 0.0);
}

#[test]
fn sup_norm_of_time_is_horizon() {
    let ens = ensemble(3, 8, 1.0, 4);
    let p = PathProcess::from_fn(&ens, 1, |_, k, o| o[0] = ens.grid().time(k));
    assert_eq!(Norms::new(&ens).sup_norm(&p, ens.grid().full()).unwrap(), 1.0);
}

#[test]
fn bmo_is_minf_of_the_square_bitwise() {
    let ens = ensemble(4, 1024, 1.0, 16);
    let nm = Norms::new(&ens);
    let w = ens.grid().full();
    let p = PathProcess::from_fn(&ens, 1, |m, k, o| o[0] = ens.position(m, k)[0]);
    let squared = p.map(|v| v * v);
    assert_eq!(nm.minf(&squared, w).unwrap().to_bits(), nm.bmo_squared(&p, w).unwrap().to_bits());
    assert_eq!(nm.bmo(&p, w).unwrap(), nm.bmo_squared(&p, w).unwrap().sqrt());
}

#[test]
fn brownian_bmo_at_least_its_time_zero_value() {
    // E ∫₀¹ B_s² ds = ½, and the supremum over later start times is no smaller.
    let ens = ensemble(5, 8192, 1.0, 32);
    let p = PathProcess::from_fn(&ens, 1, |m, k, o| o[0] = ens.position(m, k)[0]);
    let bmo_sq = Norms::new(&ens).bmo_squared(&p, ens.grid().full()).unwrap();
    assert!(bmo_sq >= 0.45, "{bmo_sq}");
}

#[test]
fn einf_grows_with_the_window() {
    let ens = ensemble(6, 1024, 1.0, 16);
    let nm = Norms::new(&ens);
    let p = PathProcess::from_fn(&ens, 1, |m, k, o| o[0] = ens.position(m, k)[0].abs().min(2.0));
    let mut last = 0.0;
    for a in (0..16).rev() {
        let v = nm.einf(&p, 1.0, Window::new(a, 16, 16).unwrap()).unwrap();
        assert!(v >= last, "a = {a}: {v} < {last}");
        last = v;
    }
}

#[test]
fn einf_flags_overflow() {
    let ens = ensemble(7, 16, 1.0, 4);
    let p = PathProcess::constant(&ens, &[1e3]);
    match Norms::new(&ens).einf(&p, 1.0, ens.grid().full()) {
        Err(Error::Overflow { .. }) => {}
        other => panic!("expected overflow, got {other:?}"),
    }
}

#[test]
fn john_nirenberg_fixtures() {
    let ens = ensemble(8, 64, 1.0, 32);
    let nm = Norms::new(&ens);
    let w = ens.grid().full();
    let r = nm.john_nirenberg(&PathProcess::constant(&ens, &[0.5f64.sqrt()]), w, 0.0).unwrap();
    assert!(r.applicable && r.satisfied);
    assert!((r.bound.unwrap() - 2.0).abs() < 1e-12);
    assert!((r.exp_moment.unwrap() - 0.5f64.exp()).abs() < 1e-12);
    let big = nm.john_nirenberg(&PathProcess::constant(&ens, &[1.5]), w, 0.0).unwrap();
    assert!(!big.applicable && !big.satisfied);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn minf_einf_linf_ordering(
        seed in 0u64..1000, a in 0.0..1.0f64, b in 0.0..2.0f64, cap in 0.1..3.0f64, level in 0.0..1.5f64,
    ) {
        let ens = ensemble(seed, 512, 1.0, 8);
        let nm = Norms::new(&ens);
        let w = ens.grid().full();
        let x = PathProcess::from_fn(&ens, 1, |m, k, o| {
            let bt = ens.position(m, k)[0].abs();
            o[0] = (a + b * bt).min(cap) + if bt > level { 0.5 } else { 0.0 };
        });
        let linf = nm.linf(&x, w).unwrap();
        let minf = nm.minf(&x, w).unwrap();
        let slack = 0.05 * linf;
        prop_assert!(minf <= linf + slack);
        let mut prev = f64::NEG_INFINITY;
        for r in [0.5, 1.0, 2.0] {
            let e = nm.einf(&x, r, w).unwrap();
            prop_assert!(minf <= e + slack && e <= linf + slack, "r = {r}: {minf} {e} {linf}");
            prop_assert!(prev <= e + slack);
            prev = e;
        }
    }
}
