//! Function-class checks on constructed expansions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavesense::functions::{besov_seminorm, check_detectable, holder_seminorm, FiniteExpansion};
use wavesense::{CoefficientPyramid, DyadicInterval, WaveletSpec};

/// Random coefficients in the Hölder ball of radius `m`, then pushed away
/// from zero: every `|beta_{j,k}|` is at least `(2 eps / 3) 2^{-j(s+1/2)}`.
fn separated_expansion(rng: &mut ChaCha8Rng, spec: &WaveletSpec, depth: u32, s: f64, m: f64, eps: f64) -> FiniteExpansion {
    let j0 = spec.coarsest_level();
    let mut pyramid = CoefficientPyramid::zeros(j0, depth).unwrap();
    for a in pyramid.scaling_mut() {
        *a = rng.gen_range(-m..m) * 2f64.powf(-(j0 as f64) * (s + 0.5));
    }
    for j in j0..depth {
        let bound = 2f64.powf(-(j as f64) * (s + 0.5));
        let floor = 2.0 * eps / 3.0 * bound;
        for b in pyramid.detail_mut(j) {
            let beta = rng.gen_range(-m..m) * bound;
            *b = match beta {
                x if (0.0..=floor).contains(&x) => floor,
                x if (-floor..0.0).contains(&x) => -floor,
                x => x,
            };
        }
    }
    FiniteExpansion::new(pyramid, spec.clone()).unwrap()
}

#[test]
fn separated_coefficients_are_detectable() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let whole = DyadicInterval::new(0, 0, 1).unwrap();
    for (moments, j0, s) in [(1, 1, 0.5), (2, 2, 1.0), (4, 2, 1.5)] {
        let spec = WaveletSpec::daubechies(moments, j0).unwrap();
        let (m, eps) = (1.0, 0.9);
        let t = eps / (3.0 * m);
        let expansion = separated_expansion(&mut rng, &spec, 13, s, m, eps);
        assert!(holder_seminorm(&expansion, s, &whole).unwrap() <= m);
        let verdict = check_detectable(&expansion, s, t, &whole).unwrap();
        assert!(verdict.detectable, "db{moments}: violation at {:?}", verdict.violation);
    }
}

#[test]
fn detectability_is_monotone_in_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = WaveletSpec::daubechies(2, 1).unwrap();
    let whole = DyadicInterval::new(0, 0, 1).unwrap();
    for _ in 0..20 {
        let mut pyramid = CoefficientPyramid::zeros(1, 10).unwrap();
        for j in 1..10 {
            for b in pyramid.detail_mut(j) {
                *b = rng.gen_range(-1.0..1.0) * 2f64.powf(-1.5 * j as f64);
            }
        }
        let expansion = FiniteExpansion::new(pyramid, spec.clone()).unwrap();
        let ts = [0.2, 0.35, 0.5, 0.65, 0.8];
        let verdicts: Vec<bool> =
            ts.iter().map(|&t| check_detectable(&expansion, 1.0, t, &whole).unwrap().detectable).collect();
        for w in verdicts.windows(2) {
            assert!(!w[1] || w[0], "detectable at a larger t but not a smaller one: {verdicts:?}");
        }
    }
}

#[test]
fn sup_norm_besov_coincides_with_holder_on_the_whole_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = WaveletSpec::haar(2);
    let whole = DyadicInterval::new(0, 0, 1).unwrap();
    for _ in 0..20 {
        let mut pyramid = CoefficientPyramid::zeros(2, 9).unwrap();
        pyramid.scaling_mut().iter_mut().for_each(|a| *a = rng.gen_range(-1.0..1.0));
        for j in 2..9 {
            pyramid.detail_mut(j).iter_mut().for_each(|b| *b = rng.gen_range(-1.0..1.0));
        }
        let expansion = FiniteExpansion::new(pyramid, spec.clone()).unwrap();
        for r in [0.3, 1.0, 2.2] {
            let b = besov_seminorm(&expansion, r, f64::INFINITY).unwrap();
            let h = holder_seminorm(&expansion, r, &whole).unwrap();
            assert!((b - h).abs() <= 1e-12 * b.max(1.0), "r = {r}: {b} vs {h}");
        }
    }
}

#[test]
fn seminorms_grow_with_smoothness_and_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = WaveletSpec::haar(1);
    let mut pyramid = CoefficientPyramid::zeros(1, 8).unwrap();
    for j in 1..8 {
        pyramid.detail_mut(j).iter_mut().for_each(|b| *b = rng.gen_range(-1.0..1.0));
    }
    let expansion = FiniteExpansion::new(pyramid, spec).unwrap();
    let whole = DyadicInterval::new(0, 0, 1).unwrap();
    let half = DyadicInterval::new(1, 0, 1).unwrap();
    let mut last = 0.0;
    for r in [0.5, 1.0, 1.5, 2.0] {
        let b = besov_seminorm(&expansion, r, 2.0).unwrap();
        assert!(b >= last);
        last = b;
        assert!(holder_seminorm(&expansion, r, &half).unwrap() <= holder_seminorm(&expansion, r, &whole).unwrap());
    }
}
