//! Wavelet coefficient estimation under dyadic designs, level-dependent hard
//! thresholding, noise estimation and reconstruction on dyadic grids.
//!
//! Two estimators are provided. [`Mode::Theoretical`] computes each
//! coefficient from the finest complete grid inside its footprint, at
//! resolution `i_n(j, k)`. [`Mode::Practical`] fills a grid at a chosen level
//! with the nearest design point to the left and transforms that vector, so
//! that observations and predictions share one scale.

use std::fmt::Write as _;

use crate::design::{Design, Observations};
use crate::dyadic::DyadicPoint;
use crate::error::{invalid, Error, Result};
use crate::harness::stats::median;
use crate::wavelet::{fwt_forward, inverse_to_level, CoefficientPyramid, WaveletSpec};

/// Upper quartile of the standard normal, the MAD-to-sd conversion.
pub const NORMAL_QUARTILE: f64 = 0.6745;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Theoretical,
    Practical,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseLevel {
    Known(f64),
    Estimate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub kappa: f64,
    pub noise: NoiseLevel,
    pub mode: Mode,
}

impl EstimatorConfig {
    pub fn new(kappa: f64, noise: NoiseLevel, mode: Mode) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return invalid(format!("kappa must be finite and non-negative, got {kappa}"));
        }
        if let NoiseLevel::Known(s) = noise {
            if !(s >= 0.0 && s.is_finite()) {
                return invalid(format!("noise level must be finite and non-negative, got {s}"));
            }
        }
        Ok(EstimatorConfig { kappa, noise, mode })
    }
}

impl Default for EstimatorConfig {
    /// `kappa = 1`, estimated noise, practical mode.
    fn default() -> Self {
        EstimatorConfig { kappa: 1.0, noise: NoiseLevel::Estimate, mode: Mode::Practical }
    }
}

/// Finest level estimated by the theoretical estimator:
/// `max(j0 + 1, floor(log2(n / ln n)))`.
pub fn j_max(n: usize, coarsest_level: u32) -> u32 {
    let floor = coarsest_level + 1;
    if n < 3 {
        return floor;
    }
    let n = n as f64;
    let level = (n / n.ln()).log2().floor();
    if level <= floor as f64 {
        floor
    } else {
        level as u32
    }
}

/// `e_n(j, k) = sigma 2^{-i_n/2} sqrt(2 ln n)`.
pub fn threshold_scale(j: u32, k: u64, resolution: Option<u32>, n: usize, sigma: f64) -> Result<f64> {
    let i = resolution.ok_or(Error::UndefinedResolution { j, k })?;
    if n < 2 {
        return invalid(format!("threshold needs at least two observations, got {n}"));
    }
    Ok(sigma * 2f64.powf(-(i as f64) / 2.0) * (2.0 * (n as f64).ln()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppliedThreshold {
    pub kappa: f64,
    pub sigma: f64,
}

/// Estimated coefficients with their resolution indices and survival flags.
///
/// A coefficient survives when its resolution index is defined and, once a
/// threshold has been applied, its magnitude reaches `kappa * e_n`. Only
/// surviving coefficients enter the reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    coarsest_level: u32,
    j_max: u32,
    n: usize,
    alpha: Vec<f64>,
    beta: Vec<Vec<f64>>,
    resolution: Vec<Vec<i8>>,
    surviving: Vec<Vec<bool>>,
    threshold: Option<AppliedThreshold>,
}

impl CoefficientSet {
    /// Unthresholded set; every coefficient with a defined resolution survives.
    pub fn new(
        coarsest_level: u32,
        n: usize,
        alpha: Vec<f64>,
        beta: Vec<Vec<f64>>,
        resolution: Vec<Vec<i8>>,
    ) -> Result<Self> {
        if alpha.len() != 1 << coarsest_level {
            return invalid("scaling coefficients do not match the coarsest level");
        }
        if beta.len() != resolution.len() {
            return invalid("coefficient and resolution levels differ");
        }
        for (offset, (b, r)) in beta.iter().zip(&resolution).enumerate() {
            let size = 1usize << (coarsest_level as usize + offset);
            if b.len() != size || r.len() != size {
                return invalid(format!("level {} has the wrong size", coarsest_level as usize + offset));
            }
        }
        let surviving = resolution.iter().map(|row| row.iter().map(|&i| i >= 0).collect()).collect();
        Ok(CoefficientSet {
            coarsest_level,
            j_max: j_max(n, coarsest_level),
            n,
            alpha,
            beta,
            resolution,
            surviving,
            threshold: None,
        })
    }

    pub fn coarsest_level(&self) -> u32 {
        self.coarsest_level
    }

    /// One past the finest detail level held.
    pub fn top_level(&self) -> u32 {
        self.coarsest_level + self.beta.len() as u32
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    fn row(&self, j: u32) -> usize {
        debug_assert!(j >= self.coarsest_level && j < self.top_level());
        (j - self.coarsest_level) as usize
    }

    pub fn beta_level(&self, j: u32) -> &[f64] {
        &self.beta[self.row(j)]
    }

    pub fn beta(&self, j: u32, k: u64) -> f64 {
        self.beta[self.row(j)][k as usize]
    }

    /// `i_n(j, k)` rows, `-1` where undefined.
    pub fn resolution_level(&self, j: u32) -> &[i8] {
        &self.resolution[self.row(j)]
    }

    pub fn resolution_index(&self, j: u32, k: u64) -> Option<u32> {
        let i = self.resolution[self.row(j)][k as usize];
        (i >= 0).then_some(i as u32)
    }

    pub fn is_surviving(&self, j: u32, k: u64) -> bool {
        self.surviving[self.row(j)][k as usize]
    }

    /// `beta^T_{j,k}`: the estimate if it survives, otherwise zero.
    pub fn thresholded(&self, j: u32, k: u64) -> f64 {
        let r = self.row(j);
        if self.surviving[r][k as usize] {
            self.beta[r][k as usize]
        } else {
            0.0
        }
    }

    pub fn thresholded_level(&self, j: u32) -> Vec<f64> {
        let r = self.row(j);
        self.beta[r]
            .iter()
            .zip(&self.surviving[r])
            .map(|(&b, &s)| if s { b } else { 0.0 })
            .collect()
    }

    pub fn threshold(&self) -> Option<AppliedThreshold> {
        self.threshold
    }

    pub fn sigma_used(&self) -> Option<f64> {
        self.threshold.map(|t| t.sigma)
    }

    pub fn surviving_count(&self) -> usize {
        self.surviving.iter().flatten().filter(|&&s| s).count()
    }

    pub fn defined_count(&self) -> usize {
        self.resolution.iter().flatten().filter(|&&i| i >= 0).count()
    }

    /// All coefficients multiplied by `factor`; survival flags unchanged.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.alpha.iter_mut().for_each(|a| *a *= factor);
        out.beta.iter_mut().flatten().for_each(|b| *b *= factor);
        out
    }

    /// Thresholded coefficients as a pyramid ready for synthesis.
    pub fn to_pyramid(&self) -> CoefficientPyramid {
        let details = (self.coarsest_level..self.top_level()).map(|j| self.thresholded_level(j)).collect();
        CoefficientPyramid::from_parts(self.coarsest_level, self.alpha.clone(), details)
            .expect("coefficient set levels are well formed")
    }

    /// CSV with columns `j,k,i_n,beta_hat,surviving`; undefined `i_n` is `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,k,i_n,beta_hat,surviving\n");
        for j in self.coarsest_level..self.top_level() {
            let r = self.row(j);
            for (k, &b) in self.beta[r].iter().enumerate() {
                let i = self.resolution[r][k];
                let i = if i >= 0 { i.to_string() } else { "NA".to_string() };
                let _ = writeln!(out, "{j},{k},{i},{b:e},{}", self.surviving[r][k] as u8);
            }
        }
        out
    }
}

fn check_observations(design: &Design, observations: &Observations) -> Result<()> {
    if let Some(p) = design.iter().find(|p| !observations.contains_key(p)) {
        return Err(Error::InconsistentDesign(format!("no observation at design point {p:?}")));
    }
    Ok(())
}

/// Estimates `alpha_{j0,k}` and `beta_{j,k}` for `j < j_max(n)`, each from
/// the complete grid at its own resolution `i_n(j, k)`. Coefficients with
/// undefined resolution are left at zero and do not survive.
pub fn estimate_theoretical(
    design: &Design,
    observations: &Observations,
    spec: &WaveletSpec,
) -> Result<CoefficientSet> {
    let top = j_max(design.len(), spec.coarsest_level());
    theoretical_to_level(design, observations, spec, top)
}

/// As [`estimate_theoretical`], but for every `j < top`.
fn theoretical_to_level(
    design: &Design,
    observations: &Observations,
    spec: &WaveletSpec,
    top: u32,
) -> Result<CoefficientSet> {
    check_observations(design, observations)?;
    let n = design.len();
    let j0 = spec.coarsest_level();
    let depths = design.grid_depths();
    let half = spec.half_support();
    let alpha_res = depths.resolution_row(j0, half);
    let resolution: Vec<Vec<i8>> = (j0..top).map(|j| depths.resolution_row(j, half)).collect();

    let mut levels: Vec<i8> = alpha_res.iter().chain(resolution.iter().flatten()).copied().filter(|&i| i >= 0).collect();
    levels.sort_unstable();
    levels.dedup();

    let mut alpha = vec![0.0; 1 << j0];
    let mut beta: Vec<Vec<f64>> = (j0..top).map(|j| vec![0.0; 1 << j]).collect();
    for &i in &levels {
        let i = i as u32;
        // grid points missing from the design stay zero; no coefficient read
        // at this resolution depends on them
        let scale = 2f64.powf(-(i as f64) / 2.0);
        let mut values = vec![0.0; 1 << i];
        for (p, y) in observations.range(..) {
            if let Some(idx) = p.index_at(i) {
                if design.contains(*p) {
                    values[idx as usize] = scale * y;
                }
            }
        }
        let pyramid = fwt_forward(&values, spec)?;
        for (k, &r) in alpha_res.iter().enumerate() {
            if r as u32 == i && r >= 0 {
                alpha[k] = pyramid.scaling()[k];
            }
        }
        // i_n(j, k) > j, so rows at or above i have nothing at this resolution
        for (offset, row) in resolution.iter().enumerate().take((i - j0) as usize) {
            let j = j0 + offset as u32;
            let detail = pyramid.detail(j);
            for (k, &r) in row.iter().enumerate() {
                if r >= 0 && r as u32 == i {
                    beta[offset][k] = detail[k];
                }
            }
        }
    }
    CoefficientSet::new(j0, n, alpha, beta, resolution)
}

/// Level-`level` scaling estimates `2^{-level/2} Y(x_{n,k})` where `x_{n,k}`
/// is the largest design point at or left of `k 2^-level`.
pub fn nearest_left_vector(design: &Design, observations: &Observations, level: u32) -> Result<Vec<f64>> {
    if !design.contains(DyadicPoint::ZERO) {
        return Err(Error::InconsistentDesign("design does not contain the origin".into()));
    }
    check_observations(design, observations)?;
    let scale = 2f64.powf(-(level as f64) / 2.0);
    let size = 1u64 << level;
    let mut values = vec![0.0; size as usize];
    let mut iter = design.iter().peekable();
    while let Some(p) = iter.next() {
        let start = p.ceil_index_at(level);
        let end = iter.peek().map_or(size, |q| q.ceil_index_at(level));
        let v = scale * observations[&p];
        for slot in values.iter_mut().take(end as usize).skip(start as usize) {
            *slot = v;
        }
    }
    Ok(values)
}

/// Transforms the nearest-left vector at `level` and records `i_n(j, k)` for
/// every detail coefficient.
pub fn estimate_practical(
    design: &Design,
    observations: &Observations,
    spec: &WaveletSpec,
    level: u32,
) -> Result<CoefficientSet> {
    let j0 = spec.coarsest_level();
    if level <= j0 {
        return invalid(format!("estimation level {level} must exceed the coarsest level {j0}"));
    }
    let values = nearest_left_vector(design, observations, level)?;
    let pyramid = fwt_forward(&values, spec)?;
    let depths = design.grid_depths();
    let resolution = (j0..level).map(|j| depths.resolution_row(j, spec.half_support())).collect();
    let (alpha, beta) = pyramid.into_parts();
    CoefficientSet::new(j0, design.len(), alpha, beta, resolution)
}

/// `median{ 2^{i_n/2} |beta_{j,k}| : j >= j_max - 1, i_n defined } / 0.6745`.
pub fn estimate_sigma(coeffs: &CoefficientSet) -> Result<f64> {
    let from = coeffs.j_max().saturating_sub(1).max(coeffs.coarsest_level());
    let mut candidates = Vec::new();
    for j in from..coeffs.top_level() {
        for (&b, &i) in coeffs.beta_level(j).iter().zip(coeffs.resolution_level(j)) {
            if i >= 0 {
                candidates.push(2f64.powf(i as f64 / 2.0) * b.abs());
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::EstimationUnavailable(format!(
            "no coefficients with defined resolution at levels >= {from}"
        )));
    }
    Ok(median(&mut candidates) / NORMAL_QUARTILE)
}

/// Noise level estimated from each coefficient at its own resolution, over
/// every level from `j_max - 1` down to the design's finest grid.  On a
/// uniform design this is the classical fine-scale rule.
pub fn design_noise_level(design: &Design, observations: &Observations, spec: &WaveletSpec) -> Result<f64> {
    let top = design.deepest_level().max(j_max(design.len(), spec.coarsest_level()));
    estimate_sigma(&theoretical_to_level(design, observations, spec, top)?)
}

/// Hard-thresholds every detail coefficient at `kappa * e_n(j, k)`.
/// Scaling coefficients are never thresholded.
pub fn apply_threshold(coeffs: &CoefficientSet, config: &EstimatorConfig) -> Result<CoefficientSet> {
    let sigma = match config.noise {
        NoiseLevel::Known(s) => s,
        NoiseLevel::Estimate => estimate_sigma(coeffs)?,
    };
    let n = coeffs.n();
    let mut out = coeffs.clone();
    let mut cutoffs: Vec<Option<f64>> = vec![None; i8::MAX as usize + 1];
    for j in coeffs.coarsest_level..coeffs.top_level() {
        let r = coeffs.row(j);
        for (k, (&b, &i)) in coeffs.beta[r].iter().zip(&coeffs.resolution[r]).enumerate() {
            out.surviving[r][k] = if i < 0 {
                false
            } else {
                let cutoff = match cutoffs[i as usize] {
                    Some(c) => c,
                    None => {
                        let c = config.kappa * threshold_scale(j, k as u64, Some(i as u32), n, sigma)?;
                        cutoffs[i as usize] = Some(c);
                        c
                    }
                };
                b.abs() >= cutoff
            };
        }
    }
    out.threshold = Some(AppliedThreshold { kappa: config.kappa, sigma });
    Ok(out)
}

/// Estimate by the configured mode (the practical one at `level`), then threshold.
///
/// An estimated noise level always comes from [`design_noise_level`]: each
/// of those coefficients is a transform of samples on its own grid, so
/// `2^{i_n/2} beta` has standard deviation exactly `sigma`.  Practical
/// coefficients read above the design's grid see sample-and-hold noise,
/// whose fine-level details are damped, and would understate `sigma`.
pub fn fit(
    design: &Design,
    observations: &Observations,
    spec: &WaveletSpec,
    config: &EstimatorConfig,
    level: u32,
) -> Result<CoefficientSet> {
    let raw = match config.mode {
        Mode::Theoretical => estimate_theoretical(design, observations, spec)?,
        Mode::Practical => estimate_practical(design, observations, spec, level)?,
    };
    match (config.mode, config.noise) {
        (Mode::Practical, NoiseLevel::Estimate) => {
            let sigma = design_noise_level(design, observations, spec)?;
            apply_threshold(&raw, &EstimatorConfig { noise: NoiseLevel::Known(sigma), ..*config })
        }
        _ => apply_threshold(&raw, config),
    }
}

/// `f_hat(k 2^-level) = 2^{level/2} alpha^T_{level,k}`, synthesizing the
/// surviving coefficients (zero-padded or truncated to `level`).
pub fn reconstruct(coeffs: &CoefficientSet, spec: &WaveletSpec, level: u32) -> Result<Vec<f64>> {
    let mut values = inverse_to_level(&coeffs.to_pyramid(), spec, level)?;
    let scale = 2f64.powf(level as f64 / 2.0);
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicInterval;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn observe(design: &Design, f: impl Fn(f64) -> f64) -> Observations {
        design.iter().map(|p| (p, f(p.value()))).collect()
    }

    #[test]
    fn j_max_rule() {
        assert_eq!(j_max(64, 5), 6);
        assert_eq!(j_max(1 << 14, 5), 10);
        assert_eq!(j_max(2048, 5), 8);
        assert_eq!(j_max(2, 5), 6);
    }

    #[test]
    fn threshold_scale_examples() {
        let e = threshold_scale(0, 0, Some(8), 2048, 1.0).unwrap();
        assert!((e - 0.244_064_2).abs() < 1e-7, "{e}");
        assert_eq!(threshold_scale(0, 0, Some(8), 2048, 0.0).unwrap(), 0.0);
        assert_eq!(threshold_scale(0, 0, Some(8), 2048, 2.0).unwrap(), 2.0 * e);
        assert_eq!(
            threshold_scale(3, 1, None, 2048, 1.0),
            Err(Error::UndefinedResolution { j: 3, k: 1 })
        );
    }

    #[test]
    fn zero_function_gives_zero_coefficients() {
        let spec = WaveletSpec::daubechies(4, 2).unwrap();
        let design = Design::uniform(128).unwrap();
        let obs = observe(&design, |_| 0.0);
        let c = estimate_theoretical(&design, &obs, &spec).unwrap();
        assert!(c.alpha().iter().all(|&a| a == 0.0));
        for j in 2..c.top_level() {
            assert!(c.beta_level(j).iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn missing_observation_is_inconsistent() {
        let spec = WaveletSpec::haar(1);
        let design = Design::uniform(16).unwrap();
        let mut obs = observe(&design, |x| x);
        obs.remove(&DyadicPoint::new(3, 4).unwrap());
        assert!(matches!(estimate_theoretical(&design, &obs, &spec), Err(Error::InconsistentDesign(_))));
        assert!(matches!(estimate_practical(&design, &obs, &spec, 4), Err(Error::InconsistentDesign(_))));
    }

    #[test]
    fn theoretical_uniform_matches_plain_transform() {
        let spec = WaveletSpec::daubechies(8, 5).unwrap();
        let design = Design::uniform(256).unwrap();
        let obs = observe(&design, |x| (7.0 * x).sin() + x * x);
        let c = estimate_theoretical(&design, &obs, &spec).unwrap();
        let scale = 2f64.powf(-4.0);
        let values: Vec<f64> = obs.values().map(|y| scale * y).collect();
        let p = fwt_forward(&values, &spec).unwrap();
        for (a, b) in c.alpha().iter().zip(p.scaling()) {
            assert!((a - b).abs() < 1e-12);
        }
        for j in 5..c.top_level() {
            assert!(c.resolution_level(j).iter().all(|&i| i == 8));
            for (a, b) in c.beta_level(j).iter().zip(p.detail(j)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn practical_single_point() {
        let spec = WaveletSpec::haar(0);
        let design: Design = [DyadicPoint::ZERO].into_iter().collect();
        let obs: Observations = [(DyadicPoint::ZERO, 3.0)].into_iter().collect();
        let v = nearest_left_vector(&design, &obs, 2).unwrap();
        assert_eq!(v, vec![1.5; 4]);
        let c = estimate_practical(&design, &obs, &spec, 2).unwrap();
        for j in 0..2 {
            assert!(c.beta_level(j).iter().all(|&b| b.abs() < 1e-15));
        }
    }

    #[test]
    fn practical_staircase_vector() {
        // points 0, 1/4, 5/16 and 3/4 with values 1, 2, 3, 4
        let pts = [(0, 0), (1, 2), (5, 4), (3, 2)];
        let design: Design = pts.iter().map(|&(i, l)| DyadicPoint::new(i, l).unwrap()).collect();
        let obs: Observations = design.iter().zip([1.0, 2.0, 3.0, 4.0]).collect();
        let v = nearest_left_vector(&design, &obs, 3).unwrap();
        let s = 2f64.powf(-1.5);
        let expected: Vec<f64> = [1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 4.0, 4.0].iter().map(|y| s * y).collect();
        assert_eq!(v, expected);
    }

    #[test]
    fn practical_matches_theoretical_on_uniform_grid() {
        let spec = WaveletSpec::daubechies(3, 3).unwrap();
        let design = Design::uniform(1024).unwrap();
        let obs = observe(&design, |x| (20.0 * x).cos());
        let t = estimate_theoretical(&design, &obs, &spec).unwrap();
        let p = estimate_practical(&design, &obs, &spec, 10).unwrap();
        assert_eq!(t.alpha(), p.alpha());
        for j in 3..t.top_level() {
            assert_eq!(t.beta_level(j), p.beta_level(j));
            assert_eq!(t.resolution_level(j), p.resolution_level(j));
        }
    }

    #[test]
    fn sigma_of_constant_candidates() {
        let beta = vec![vec![0.6745 / 2f64.powf(1.5); 2], vec![0.6745 / 2f64.powf(1.5); 4]];
        let res = vec![vec![3i8; 2], vec![3i8; 4]];
        let c = CoefficientSet::new(1, 4, vec![0.0; 2], beta, res).unwrap();
        assert!((estimate_sigma(&c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_unavailable_without_candidates() {
        let c = CoefficientSet::new(1, 4, vec![0.0; 2], vec![vec![0.0; 2]], vec![vec![-1; 2]]).unwrap();
        assert!(matches!(estimate_sigma(&c), Err(Error::EstimationUnavailable(_))));
    }

    #[test]
    fn sigma_on_pure_noise() {
        let spec = WaveletSpec::default();
        let design = Design::uniform(1 << 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let obs: Observations = design.iter().map(|p| (p, StandardNormal.sample(&mut rng))).collect();
        let c = estimate_practical(&design, &obs, &spec, 14).unwrap();
        let s = estimate_sigma(&c).unwrap();
        assert!((0.95..=1.05).contains(&s), "{s}");
        let scaled: Observations = obs.iter().map(|(&p, &y)| (p, 3.0 * y)).collect();
        let c3 = estimate_practical(&design, &scaled, &spec, 14).unwrap();
        assert!((estimate_sigma(&c3).unwrap() - 3.0 * s).abs() < 1e-9);
    }

    #[test]
    fn threshold_boundary_and_monotonicity() {
        // one coefficient exactly at kappa * e_n
        let n = 16;
        let e = threshold_scale(1, 0, Some(4), n, 1.0).unwrap();
        let beta = vec![vec![e, 0.5 * e], vec![2.0 * e, -e, 0.0, 3.0 * e]];
        let res = vec![vec![4i8, 4], vec![4i8, 4, 4, -1]];
        let c = CoefficientSet::new(1, n, vec![1.0, 1.0], beta, res).unwrap();
        let cfg = |kappa| EstimatorConfig::new(kappa, NoiseLevel::Known(1.0), Mode::Practical).unwrap();
        let t = apply_threshold(&c, &cfg(1.0)).unwrap();
        assert!(t.is_surviving(1, 0) && !t.is_surviving(1, 1));
        assert!(t.is_surviving(2, 1) && !t.is_surviving(2, 3));
        assert_eq!(t.thresholded(2, 3), 0.0);
        let all = apply_threshold(&c, &cfg(0.0)).unwrap();
        assert_eq!(all.surviving_count(), all.defined_count());
        let mut previous = usize::MAX;
        for kappa in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let count = apply_threshold(&c, &cfg(kappa)).unwrap().surviving_count();
            assert!(count <= previous);
            previous = count;
        }
        assert_eq!(t.alpha(), c.alpha());
    }

    #[test]
    fn reconstruct_round_trip_without_threshold() {
        let spec = WaveletSpec::daubechies(8, 5).unwrap();
        let design = Design::uniform(512).unwrap();
        let obs = observe(&design, |x| (9.0 * x).sin() * 4.0);
        let cfg = EstimatorConfig::new(0.0, NoiseLevel::Known(1.0), Mode::Practical).unwrap();
        let c = fit(&design, &obs, &spec, &cfg, 9).unwrap();
        let back = reconstruct(&c, &spec, 9).unwrap();
        for (a, b) in back.iter().zip(obs.values()) {
            assert!((a - b).abs() < 1e-10);
        }
        let zero = c.scaled(0.0);
        assert!(reconstruct(&zero, &spec, 11).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reconstruct_is_linear() {
        let spec = WaveletSpec::daubechies(4, 3).unwrap();
        let mut design = Design::uniform(64).unwrap();
        design.insert_grid(DyadicInterval::cell(3, 2).unwrap(), 9).unwrap();
        let obs = observe(&design, |x| (30.0 * x * x).sin());
        let c = estimate_practical(&design, &obs, &spec, 9).unwrap();
        let a = reconstruct(&c, &spec, 10).unwrap();
        let b = reconstruct(&c.scaled(-2.5), &spec, 10).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y + 2.5 * x).abs() < 1e-10);
        }
    }

    #[test]
    fn coefficient_csv() {
        let c = CoefficientSet::new(0, 2, vec![1.0], vec![vec![0.5]], vec![vec![-1]]).unwrap();
        assert_eq!(c.to_csv(), "j,k,i_n,beta_hat,surviving\n0,0,NA,5e-1,0\n");
    }
}
