//! Donoho–Johnstone test signals and wavelet-coefficient checks for the
//! Hölder, Besov and detectable function classes.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::dyadic::DyadicInterval;
use crate::error::{invalid, Error, Result};
use crate::wavelet::{CoefficientPyramid, WaveletSpec};

/// Standard deviation every test function is scaled to.
pub const TARGET_SD: f64 = 7.0;
/// Grid level on which the scale factors are computed.
pub const SCALING_LEVEL: u32 = 17;

// Knots, heights and widths from Donoho & Johnstone (1994), "Ideal spatial
// adaptation by wavelet shrinkage", Table 1 / Appendix.
const KNOTS: [f64; 11] = [0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestFunction {
    Blocks,
    Bumps,
    Heavisine,
    Doppler,
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] =
        [TestFunction::Blocks, TestFunction::Bumps, TestFunction::Heavisine, TestFunction::Doppler];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Blocks => "blocks",
            TestFunction::Bumps => "bumps",
            TestFunction::Heavisine => "heavisine",
            TestFunction::Doppler => "doppler",
        }
    }

    /// The textbook closed form, before scaling.
    pub fn eval_unscaled(self, x: f64) -> f64 {
        match self {
            TestFunction::Blocks => KNOTS
                .iter()
                .zip(BLOCK_HEIGHTS)
                .map(|(&t, h)| h * (1.0 + sgn(x - t)) / 2.0)
                .sum(),
            TestFunction::Bumps => KNOTS
                .iter()
                .zip(BUMP_HEIGHTS)
                .zip(BUMP_WIDTHS)
                .map(|((&t, h), w)| h * (1.0 + ((x - t) / w).abs()).powi(-4))
                .sum(),
            TestFunction::Heavisine => 4.0 * (4.0 * PI * x).sin() - sgn(x - 0.3) - sgn(0.72 - x),
            TestFunction::Doppler => (x * (1.0 - x)).sqrt() * (2.0 * PI * 1.05 / (x + 0.05)).sin(),
        }
    }

    /// Factor making the population sd over the level-17 grid equal to 7.
    pub fn scale_factor(self) -> f64 {
        static FACTORS: OnceLock<[f64; 4]> = OnceLock::new();
        let factors = FACTORS.get_or_init(|| {
            TestFunction::ALL.map(|f| {
                let n = 1usize << SCALING_LEVEL;
                let values: Vec<f64> = (0..n).map(|k| f.eval_unscaled(k as f64 / n as f64)).collect();
                let mean = values.iter().sum::<f64>() / n as f64;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                TARGET_SD / var.sqrt()
            })
        });
        factors[self as usize]
    }

    pub fn eval(self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return invalid(format!("{x} lies outside [0, 1]"));
        }
        Ok(self.eval_scaled(x))
    }

    fn eval_scaled(self, x: f64) -> f64 {
        self.scale_factor() * self.eval_unscaled(x)
    }

    /// Scaled values on `2^-level Z ∩ [0, 1)`, cached per level.
    pub fn grid_values(self, level: u32) -> Arc<Vec<f64>> {
        type GridCache = Mutex<HashMap<(TestFunction, u32), Arc<Vec<f64>>>>;
        static CACHE: OnceLock<GridCache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(v) = cache.lock().expect("cache lock").get(&(self, level)) {
            return Arc::clone(v);
        }
        let n = 1u64 << level;
        let values: Arc<Vec<f64>> = Arc::new((0..n).map(|k| self.eval_scaled(k as f64 / n as f64)).collect());
        cache.lock().expect("cache lock").insert((self, level), Arc::clone(&values));
        values
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blocks" => Ok(TestFunction::Blocks),
            "bumps" => Ok(TestFunction::Bumps),
            "heavisine" => Ok(TestFunction::Heavisine),
            "doppler" => Ok(TestFunction::Doppler),
            _ => invalid(format!("unknown test function `{s}`")),
        }
    }
}

/// A wavelet expansion truncated below `depth`, with the basis it refers to.
#[derive(Clone, Debug)]
pub struct FiniteExpansion {
    pub coefficients: CoefficientPyramid,
    pub spec: WaveletSpec,
}

impl FiniteExpansion {
    pub fn new(coefficients: CoefficientPyramid, spec: WaveletSpec) -> Result<Self> {
        if coefficients.coarsest_level() != spec.coarsest_level() {
            return invalid("expansion and basis disagree on the coarsest level");
        }
        Ok(FiniteExpansion { coefficients, spec })
    }

    /// First level not represented in the expansion.
    pub fn depth(&self) -> u32 {
        self.coefficients.top_level()
    }
}

fn lp_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `max(2^{j0(r+1/2-1/p)} |alpha|_p, max_j 2^{j(r+1/2-1/p)} |beta_j|_p)`;
/// `p = f64::INFINITY` is allowed.
pub fn besov_seminorm(expansion: &FiniteExpansion, r: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return invalid(format!("p must lie in [1, inf], got {p}"));
    }
    if r.is_nan() || r <= 0.0 {
        return invalid(format!("r must be positive, got {r}"));
    }
    let c = &expansion.coefficients;
    let exponent = r + 0.5 - 1.0 / p;
    let j0 = c.coarsest_level();
    let mut value = 2f64.powf(j0 as f64 * exponent) * lp_norm(c.scaling(), p);
    for j in j0..c.top_level() {
        value = value.max(2f64.powf(j as f64 * exponent) * lp_norm(c.detail(j), p));
    }
    Ok(value)
}

/// Local Hölder seminorm over coefficients whose supports lie inside `interval`.
pub fn holder_seminorm(expansion: &FiniteExpansion, s: f64, interval: &DyadicInterval) -> Result<f64> {
    if s.is_nan() || s <= 0.0 {
        return invalid(format!("s must be positive, got {s}"));
    }
    let c = &expansion.coefficients;
    let spec = &expansion.spec;
    let j0 = c.coarsest_level();
    let level_max = |j: u32, values: &[f64]| -> Result<f64> {
        let mut m: f64 = 0.0;
        for (k, v) in values.iter().enumerate() {
            if spec.support(j, k as u64)?.is_subset_of(interval) {
                m = m.max(v.abs());
            }
        }
        Ok(2f64.powf(j as f64 * (s + 0.5)) * m)
    };
    let mut value = level_max(j0, c.scaling())?;
    for j in j0..c.top_level() {
        value = value.max(level_max(j, c.detail(j))?);
    }
    Ok(value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Detectability {
    pub detectable: bool,
    /// First `(j, k)` lacking a large enough coarser parent.
    pub violation: Option<(u32, u64)>,
    /// Levels at or beyond this depth were not inspected.
    pub checked_depth: u32,
}

/// Checks the parent condition for every `j >= ceil(j0 / t)` present in the
/// expansion and every `k` whose support meets `interval`: some `(j', k')`
/// with `floor(t j) <= j' < j` and `S_{j',k'} ⊇ S_{j,k}` must have
/// `|beta_{j',k'}| >= (j'/j) 2^{(j-j')(s+1/2)} |beta_{j,k}|`.
///
/// Only necessary for membership: deeper violations are invisible.
pub fn check_detectable(
    expansion: &FiniteExpansion,
    s: f64,
    t: f64,
    interval: &DyadicInterval,
) -> Result<Detectability> {
    if !(t > 0.0 && t < 1.0) {
        return invalid(format!("t must lie in (0, 1), got {t}"));
    }
    let c = &expansion.coefficients;
    let spec = &expansion.spec;
    let j0 = c.coarsest_level();
    let depth = c.top_level();
    let first = (j0 as f64 / t).ceil() as u32;
    let half = spec.half_support() as i64;
    for j in first.max(j0)..depth {
        let lowest_parent = ((t * j as f64).floor() as u32).max(j0);
        for (k, &b) in c.detail(j).iter().enumerate() {
            let k = k as u64;
            let support = spec.support(j, k)?;
            if !support.intersects(interval) {
                continue;
            }
            let mut found = false;
            'parents: for jp in lowest_parent..j {
                let bound = (jp as f64 / j as f64) * 2f64.powf((j - jp) as f64 * (s + 0.5)) * b.abs();
                let centre = (k >> (j - jp)) as i64;
                let size = 1i64 << jp;
                for kp in (centre - half - 1).max(0)..=(centre + half + 1).min(size - 1) {
                    let parent = spec.support(jp, kp as u64)?;
                    if support.is_subset_of(&parent) && c.detail(jp)[kp as usize].abs() >= bound {
                        found = true;
                        break 'parents;
                    }
                }
            }
            if !found {
                return Ok(Detectability { detectable: false, violation: Some((j, k)), checked_depth: depth });
            }
        }
    }
    Ok(Detectability { detectable: true, violation: None, checked_depth: depth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let d = TestFunction::Doppler.eval_unscaled(0.5);
        let expected = 0.5 * (2.0 * PI * 1.05 / 0.55).sin();
        assert!((d - expected).abs() < 1e-15);
        assert!((d - (-0.270_31)).abs() < 1e-4, "{d}");
        let h = TestFunction::Heavisine.eval_unscaled(0.3);
        assert!((h - (-3.351_141)).abs() < 1e-6, "{h}");
    }

    #[test]
    fn scaled_to_target_sd() {
        for f in TestFunction::ALL {
            let v = f.grid_values(SCALING_LEVEL);
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!((sd - TARGET_SD).abs() < 1e-6, "{f}: {sd}");
        }
    }

    #[test]
    fn eval_rejects_outside_unit_interval() {
        assert!(TestFunction::Bumps.eval(1.5).is_err());
        assert!(TestFunction::Bumps.eval(-0.1).is_err());
        assert!(TestFunction::Bumps.eval(1.0).is_ok());
    }

    #[test]
    fn names_round_trip() {
        for f in TestFunction::ALL {
            assert_eq!(f.name().parse::<TestFunction>().unwrap(), f);
        }
        assert!("sine".parse::<TestFunction>().is_err());
    }

    fn expansion(spec: &WaveletSpec, depth: u32) -> FiniteExpansion {
        FiniteExpansion::new(CoefficientPyramid::zeros(spec.coarsest_level(), depth).unwrap(), spec.clone()).unwrap()
    }

    #[test]
    fn seminorms_of_simple_expansions() {
        let spec = WaveletSpec::haar(1);
        let mut e = expansion(&spec, 6);
        let whole = DyadicInterval::cell(0, 0).unwrap();
        assert_eq!(besov_seminorm(&e, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(holder_seminorm(&e, 1.0, &whole).unwrap(), 0.0);
        e.coefficients.detail_mut(4)[3] = -0.25;
        let (r, p) = (1.5, 2.0);
        let expected = 2f64.powf(4.0 * (r + 0.5 - 1.0 / p)) * 0.25;
        assert!((besov_seminorm(&e, r, p).unwrap() - expected).abs() < 1e-12);
        assert!((holder_seminorm(&e, r, &whole).unwrap() - 2f64.powf(4.0 * 2.0) * 0.25).abs() < 1e-12);
        let elsewhere = DyadicInterval::new(1, 1, 2).unwrap();
        assert_eq!(holder_seminorm(&e, r, &elsewhere).unwrap(), 0.0);
        assert!(besov_seminorm(&e, 1.0, 0.5).is_err());
    }

    #[test]
    fn lone_fine_coefficient_is_not_detectable() {
        let spec = WaveletSpec::haar(1);
        let whole = DyadicInterval::cell(0, 0).unwrap();
        let mut e = expansion(&spec, 8);
        let zero = check_detectable(&e, 1.0, 0.5, &whole).unwrap();
        assert!(zero.detectable);
        e.coefficients.detail_mut(6)[10] = 1.0;
        let r = check_detectable(&e, 1.0, 0.5, &whole).unwrap();
        assert_eq!(r.violation, Some((6, 10)));
        assert_eq!(r.checked_depth, 8);
        // a large enough parent moves the violation up to the parent itself
        e.coefficients.detail_mut(4)[2] = 8.0;
        assert_eq!(check_detectable(&e, 1.0, 0.5, &whole).unwrap().violation, Some((4, 2)));
        // a chain of parents down to the unchecked level 1 restores the condition
        e.coefficients.detail_mut(2)[0] = 32.0;
        e.coefficients.detail_mut(1)[0] = 46.0;
        assert!(check_detectable(&e, 1.0, 0.5, &whole).unwrap().detectable);
        // a tighter parent window loses the level-1 parent of (2, 0)
        assert!(!check_detectable(&e, 1.0, 0.9, &whole).unwrap().detectable);
    }
}
