mod common;

use nft_core::baselines::{
    fourier_collocation, matched_gap, newton_raphson, residual_metric, CollocationConfig, Method, NewtonConfig,
    RangeSpec,
};
use nft_core::cli::{detect, DetectOptions};
use nft_core::eigenfit::Eigenvalue;
use nft_core::signals::{gen_sech, superpose, Signal, TimeGrid};
use nft_core::Complex64;

fn sech(amplitude: f64) -> Signal {
    gen_sech(amplitude, 0.0, 0.0, TimeGrid::default()).unwrap()
}

fn oracle_estimates(amplitude: f64) -> Vec<Eigenvalue> {
    common::sech_eigenvalues(amplitude).into_iter().map(|l| Eigenvalue::new(l.re, l.im).unwrap()).collect()
}

#[test]
fn collocation_finds_the_sech_eigenvalues() {
    let r = fourier_collocation(&sech(2.2), &CollocationConfig::default()).unwrap();
    let truth = common::sech_eigenvalues(2.2);
    assert!(r.raw_candidates >= r.upper_half_candidates.len());
    assert!(r.upper_half_candidates.len() >= r.eigenvalues.len());
    for t in &truth {
        let nearest = r.upper_half_candidates.iter().map(|c| (c - t).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-2, "no candidate near {t}");
    }
    let found: Vec<Complex64> = r.eigenvalues.iter().map(|d| d.lambda()).collect();
    assert_eq!(found.len(), 2);
    assert!(common::max_matched_distance(&found, &truth) <= 1e-2);
}

#[test]
fn collocation_is_stable_under_more_modes() {
    let s = sech(1.3);
    let run = |n_modes| {
        let cfg = CollocationConfig { n_modes, ..CollocationConfig::default() };
        fourier_collocation(&s, &cfg).unwrap().eigenvalues.iter().map(|d| d.lambda()).collect::<Vec<_>>()
    };
    let (coarse, fine) = (run(64), run(128));
    assert_eq!(coarse.len(), fine.len());
    assert!(matched_gap(&coarse, &fine).unwrap() <= 1e-3);
}

#[test]
fn collocation_needs_enough_samples() {
    let s = gen_sech(1.3, 0.0, 0.0, TimeGrid::symmetric(20.0, 256).unwrap()).unwrap();
    assert!(fourier_collocation(&s, &CollocationConfig::default()).is_err());
}

#[test]
fn newton_converges_on_both_roots_and_dedupes() {
    let s = sech(2.2);
    let r = newton_raphson(&s, &NewtonConfig::for_signal(&s)).unwrap();
    assert_eq!(r.eigenvalues.len(), 2, "{:?}", r.eigenvalues);
    assert!(r.converged_seeds > 2, "dedupe should collapse many seeds");
    assert!(r.eigenvalues.iter().all(|d| d.residual_abs_a <= 1e-6));
    let found: Vec<Complex64> = r.eigenvalues.iter().map(|d| d.lambda()).collect();
    assert!(common::max_matched_distance(&found, &common::sech_eigenvalues(2.2)) <= 1e-3);
}

#[test]
fn newton_on_eigenvalue_free_pulse_finds_nothing() {
    let s = sech(0.25);
    let r = newton_raphson(&s, &NewtonConfig::for_signal(&s)).unwrap();
    assert!(r.eigenvalues.is_empty(), "{:?}", r.eigenvalues);
}

#[test]
fn newton_rejects_a_lattice_touching_the_real_axis() {
    let s = sech(1.3);
    let cfg = NewtonConfig { grid_im: RangeSpec { lo: 0.0, hi: 1.0, points: 4 }, ..NewtonConfig::for_signal(&s) };
    assert!(newton_raphson(&s, &cfg).is_err());
}

#[test]
fn residual_metric_separates_roots_from_other_points() {
    let s = sech(2.2);
    let at_truth = residual_metric(&s, &oracle_estimates(2.2), 4).unwrap();
    assert!(at_truth.iter().all(|&r| r <= 1e-4), "{at_truth:?}");
    let off = residual_metric(&s, &[Eigenvalue::new(0.0, 1.2).unwrap()], 4).unwrap();
    assert!(off[0] >= 1e-2);
    assert!(residual_metric(&s, &[], 4).unwrap().is_empty());
    assert!(residual_metric(&s, &[], 0).is_err());
}

#[test]
fn separated_solitons_agree_across_methods() {
    let grid = TimeGrid::symmetric(40.0, 4096).unwrap();
    let s = superpose(&[
        gen_sech(1.0, 5.0, -10.0, grid).unwrap(),
        gen_sech(1.0, -5.0, 10.0, grid).unwrap(),
    ])
    .unwrap();
    let opts = DetectOptions::default();
    let cs = detect(Method::CsPhase, &s, &opts).unwrap();
    let nr = detect(Method::Nr, &s, &opts).unwrap();
    assert_eq!(cs.eigenvalues.len(), 2, "{:?}", cs.eigenvalues);
    assert_eq!(nr.eigenvalues.len(), 2, "{:?}", nr.eigenvalues);
    let gap = matched_gap(&cs.lambdas(), &nr.lambdas()).unwrap();
    assert!(gap <= 1e-2, "cs-phase vs nr gap {gap:e}");
    // each pulse alone carries j0.5, moved by its frequency shift
    let truth = [Complex64::new(5.0, 0.5), Complex64::new(-5.0, 0.5)];
    assert!(common::max_matched_distance(&nr.lambdas(), &truth) <= 1e-2);
}
