//! Estimator behaviour on seeded noise: false-positive control, noise-level
//! estimation, and the nearest-left rule against a linear scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavesense::estimator::{design_noise_level, estimate_practical, estimate_sigma, fit, nearest_left_vector};
use wavesense::harness::{DesignMode, NoiseStream};
use wavesense::{Design, DyadicInterval, DyadicPoint, EstimatorConfig, Mode, NoiseLevel, Observations, TestFunction, WaveletSpec};

fn pure_noise(design: &Design, seed: u64, sigma: f64) -> Observations {
    let noise = NoiseStream::for_run(seed, TestFunction::Doppler, sigma, DesignMode::Uniform, 0);
    design.iter().map(|p| (p, sigma * noise.draw(p))).collect()
}

#[test]
fn universal_threshold_keeps_false_positives_rare() {
    let spec = WaveletSpec::default();
    let design = Design::uniform(1 << 12).unwrap();
    let config = EstimatorConfig::new(1.0, NoiseLevel::Known(1.0), Mode::Practical).unwrap();
    let (mut surviving, mut defined) = (0usize, 0usize);
    for seed in 0..100 {
        let coeffs = fit(&design, &pure_noise(&design, seed, 1.0), &spec, &config, 12).unwrap();
        surviving += coeffs.surviving_count();
        defined += coeffs.defined_count();
    }
    let rate = surviving as f64 / defined as f64;
    assert!(rate <= 0.02, "false-positive rate {rate}");
}

#[test]
fn noise_level_scales_with_the_observations() {
    let spec = WaveletSpec::default();
    let design = Design::uniform(1 << 11).unwrap();
    let obs = pure_noise(&design, 3, 1.0);
    let scaled: Observations = obs.iter().map(|(&p, &y)| (p, 2.5 * y)).collect();
    let a = design_noise_level(&design, &obs, &spec).unwrap();
    let b = design_noise_level(&design, &scaled, &spec).unwrap();
    assert!((b - 2.5 * a).abs() < 1e-12 * b);
}

#[test]
fn noise_level_on_a_uniform_design_is_the_fine_scale_rule() {
    let spec = WaveletSpec::default();
    let design = Design::uniform(1 << 12).unwrap();
    let obs = pure_noise(&design, 11, 1.3);
    let classical = estimate_sigma(&estimate_practical(&design, &obs, &spec, 12).unwrap()).unwrap();
    assert_eq!(design_noise_level(&design, &obs, &spec).unwrap(), classical);
}

#[test]
fn noise_level_ignores_the_prediction_level() {
    let spec = WaveletSpec::default();
    let design = Design::uniform(1 << 11).unwrap();
    let obs = pure_noise(&design, 5, 1.0);
    let config = EstimatorConfig::default();
    let at_design = fit(&design, &obs, &spec, &config, 11).unwrap();
    let finer = fit(&design, &obs, &spec, &config, 15).unwrap();
    assert_eq!(at_design.sigma_used(), finer.sigma_used());
}

#[test]
fn noise_level_is_calibrated_on_a_refined_design() {
    // coarse everywhere, eight times finer on a quarter of the interval
    let spec = WaveletSpec::default();
    let mut design = Design::uniform(1 << 11).unwrap();
    design.insert_grid(DyadicInterval::new(2, 1, 2).unwrap(), 14).unwrap();
    let mut estimates: Vec<f64> =
        (0..21).map(|seed| design_noise_level(&design, &pure_noise(&design, seed, 1.0), &spec).unwrap()).collect();
    estimates.sort_by(f64::total_cmp);
    let median = estimates[10];
    assert!((0.93..=1.07).contains(&median), "median noise estimate {median}");
}

#[test]
fn nearest_left_matches_a_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let mut design = Design::uniform(4).unwrap();
        for _ in 0..rng.gen_range(0..40) {
            let level = rng.gen_range(2..=9);
            design.insert(DyadicPoint::new(rng.gen_range(0..1u64 << level), level).unwrap());
        }
        let obs: Observations = design.iter().map(|p| (p, rng.gen_range(-5.0..5.0))).collect();
        let level = rng.gen_range(2..=10);
        let values = nearest_left_vector(&design, &obs, level).unwrap();
        let points: Vec<DyadicPoint> = design.iter().collect();
        for (k, &v) in values.iter().enumerate() {
            let x = DyadicPoint::new(k as u64, level).unwrap();
            let left = *points.iter().rev().find(|&&p| p <= x).unwrap();
            assert_eq!(design.nearest_left(x), Some(left));
            assert_eq!(v, 2f64.powf(-(level as f64) / 2.0) * obs[&left]);
        }
    }
}
