use super::WaveletSpec;
use crate::error::{invalid, Result};

/// Scaling coefficients at the coarsest level plus detail coefficients for
/// every level up to (not including) `top_level`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientPyramid {
    coarsest_level: u32,
    scaling: Vec<f64>,
    details: Vec<Vec<f64>>,
}

impl CoefficientPyramid {
    pub fn zeros(coarsest_level: u32, top_level: u32) -> Result<Self> {
        if top_level < coarsest_level {
            return invalid(format!(
                "top level {top_level} below coarsest level {coarsest_level}"
            ));
        }
        Ok(CoefficientPyramid {
            coarsest_level,
            scaling: vec![0.0; 1 << coarsest_level],
            details: (coarsest_level..top_level).map(|j| vec![0.0; 1 << j]).collect(),
        })
    }

    pub fn from_parts(coarsest_level: u32, scaling: Vec<f64>, details: Vec<Vec<f64>>) -> Result<Self> {
        if scaling.len() != 1 << coarsest_level {
            return invalid(format!(
                "scaling vector has length {}, expected {}",
                scaling.len(),
                1u64 << coarsest_level
            ));
        }
        for (offset, level) in details.iter().enumerate() {
            let j = coarsest_level as usize + offset;
            if level.len() != 1 << j {
                return invalid(format!("level {j} has {} details, expected {}", level.len(), 1u64 << j));
            }
        }
        Ok(CoefficientPyramid { coarsest_level, scaling, details })
    }

    pub fn coarsest_level(&self) -> u32 {
        self.coarsest_level
    }

    /// Level of the scaling vector this pyramid synthesizes to.
    pub fn top_level(&self) -> u32 {
        self.coarsest_level + self.details.len() as u32
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn scaling_mut(&mut self) -> &mut [f64] {
        &mut self.scaling
    }

    pub fn detail(&self, j: u32) -> &[f64] {
        &self.details[(j - self.coarsest_level) as usize]
    }

    pub fn detail_mut(&mut self, j: u32) -> &mut [f64] {
        &mut self.details[(j - self.coarsest_level) as usize]
    }

    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<Vec<f64>>) {
        (self.scaling, self.details)
    }

    pub fn squared_norm(&self) -> f64 {
        self.scaling.iter().chain(self.details.iter().flatten()).map(|c| c * c).sum()
    }
}

/// Analysis of a level-`i` scaling vector (length `2^i`) down to the coarsest level.
pub fn fwt_forward(values: &[f64], spec: &WaveletSpec) -> Result<CoefficientPyramid> {
    let len = values.len();
    if len == 0 || !len.is_power_of_two() {
        return invalid(format!("input length {len} is not a power of two"));
    }
    let top = len.trailing_zeros();
    let j0 = spec.coarsest_level();
    if top <= j0 {
        return invalid(format!("input level {top} must exceed the coarsest level {j0}"));
    }
    let mut approx = values.to_vec();
    let mut details = Vec::with_capacity((top - j0) as usize);
    for _ in j0..top {
        let (coarse, detail) = analysis_step(&approx, spec);
        details.push(detail);
        approx = coarse;
    }
    details.reverse();
    Ok(CoefficientPyramid { coarsest_level: j0, scaling: approx, details })
}

/// Synthesis back to a scaling vector at the pyramid's top level.
pub fn fwt_inverse(pyramid: &CoefficientPyramid, spec: &WaveletSpec) -> Result<Vec<f64>> {
    inverse_to_level(pyramid, spec, pyramid.top_level())
}

/// Scaling coefficients at `level`: details at or above `level` are dropped,
/// missing details below it are taken as zero.
pub fn inverse_to_level(pyramid: &CoefficientPyramid, spec: &WaveletSpec, level: u32) -> Result<Vec<f64>> {
    let j0 = pyramid.coarsest_level;
    if j0 != spec.coarsest_level() {
        return invalid(format!(
            "pyramid coarsest level {j0} does not match spec level {}",
            spec.coarsest_level()
        ));
    }
    if level < j0 {
        return invalid(format!("output level {level} below coarsest level {j0}"));
    }
    let mut approx = pyramid.scaling.clone();
    let zeros = Vec::new();
    for j in j0..level {
        let detail = pyramid.details.get((j - j0) as usize).unwrap_or(&zeros);
        approx = synthesis_step(&approx, detail, spec);
    }
    Ok(approx)
}

/// One periodized analysis step: `c_k = sum_t h_t a_{2k - L + 1 + t}` and
/// `d_k = sum_t g_t a_{2k - L + 1 + t}`, indices modulo `len(a)`.
fn analysis_step(fine: &[f64], spec: &WaveletSpec) -> (Vec<f64>, Vec<f64>) {
    let h = spec.low_pass();
    let g = spec.high_pass();
    let n = fine.len();
    let half = n / 2;
    let taps = h.len();
    let offset = spec.half_support() as usize - 1;
    let mut coarse = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let base = 2 * k as isize - offset as isize;
        let (mut c, mut d) = (0.0, 0.0);
        if base >= 0 && base as usize + taps <= n {
            let window = &fine[base as usize..base as usize + taps];
            for t in 0..taps {
                c += h[t] * window[t];
                d += g[t] * window[t];
            }
        } else {
            for t in 0..taps {
                let idx = (base + t as isize).rem_euclid(n as isize) as usize;
                c += h[t] * fine[idx];
                d += g[t] * fine[idx];
            }
        }
        coarse[k] = c;
        detail[k] = d;
    }
    (coarse, detail)
}

/// Adjoint of [`analysis_step`]; `detail` may be empty, meaning all zeros.
fn synthesis_step(coarse: &[f64], detail: &[f64], spec: &WaveletSpec) -> Vec<f64> {
    let h = spec.low_pass();
    let g = spec.high_pass();
    let half = coarse.len();
    let n = 2 * half;
    let taps = h.len();
    let offset = spec.half_support() as usize - 1;
    let mut fine = vec![0.0; n];
    for (k, &c) in coarse.iter().enumerate() {
        let d = detail.get(k).copied().unwrap_or(0.0);
        let base = 2 * k as isize - offset as isize;
        if base >= 0 && base as usize + taps <= n {
            let window = &mut fine[base as usize..base as usize + taps];
            for t in 0..taps {
                window[t] += h[t] * c + g[t] * d;
            }
        } else {
            for t in 0..taps {
                let idx = (base + t as isize).rem_euclid(n as isize) as usize;
                fine[idx] += h[t] * c + g[t] * d;
            }
        }
    }
    fine
}
