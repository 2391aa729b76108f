//! Orthonormal compactly supported wavelets on dyadic grids of `[0, 1)`.
//!
//! Coefficients are indexed so that `phi_{j,k}` and `psi_{j,k}` live on
//! `S_{j,k} = 2^-j [k - L + 1, k + L)`, with `2L` the filter length. The
//! transform is periodized: near the ends of the interval the functions wrap
//! around, which [`WaveletSpec::footprint`] accounts for.

mod filters;
mod transform;

use std::path::Path;

pub use transform::{fwt_forward, fwt_inverse, inverse_to_level, CoefficientPyramid};

use crate::dyadic::DyadicInterval;
use crate::error::{invalid, Error, Result};

const FILTER_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryMode {
    Periodized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletSpec {
    low_pass: Vec<f64>,
    high_pass: Vec<f64>,
    vanishing_moments: u32,
    half_support: u32,
    coarsest_level: u32,
    boundary: BoundaryMode,
}

impl WaveletSpec {
    /// Daubechies extremal-phase wavelet with `vanishing_moments` in `1..=10`.
    pub fn daubechies(vanishing_moments: u32, coarsest_level: u32) -> Result<Self> {
        let taps = filters::daubechies(vanishing_moments).ok_or_else(|| {
            Error::InvalidInput(format!(
                "no Daubechies table for {vanishing_moments} vanishing moments (1..=10)"
            ))
        })?;
        Self::from_taps(taps.to_vec(), vanishing_moments, coarsest_level)
    }

    pub fn haar(coarsest_level: u32) -> Self {
        Self::daubechies(1, coarsest_level).expect("haar filter is valid")
    }

    /// Builds a spec from raw low-pass taps, checking orthonormality and the
    /// claimed number of vanishing moments.
    pub fn from_taps(taps: Vec<f64>, vanishing_moments: u32, coarsest_level: u32) -> Result<Self> {
        if vanishing_moments == 0 {
            return invalid("vanishing moments must be at least 1");
        }
        if taps.is_empty() || !taps.len().is_multiple_of(2) {
            return invalid(format!("filter length {} is not a positive even number", taps.len()));
        }
        if coarsest_level > 40 {
            return invalid(format!("coarsest level {coarsest_level} is unreasonably deep"));
        }
        let len = taps.len();
        let sum: f64 = taps.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > FILTER_TOLERANCE {
            return invalid(format!("filter taps sum to {sum}, expected sqrt(2)"));
        }
        for shift in (0..len).step_by(2) {
            let dot: f64 = (0..len - shift).map(|t| taps[t] * taps[t + shift]).sum();
            let expected = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - expected).abs() > FILTER_TOLERANCE {
                return invalid(format!(
                    "filter is not orthonormal at shift {shift}: {dot}"
                ));
            }
        }
        let high_pass: Vec<f64> = (0..len)
            .map(|t| if t % 2 == 0 { 1.0 } else { -1.0 } * taps[len - 1 - t])
            .collect();
        for power in 0..vanishing_moments as i32 {
            let (moment, scale) = high_pass
                .iter()
                .enumerate()
                .fold((0.0, 0.0), |(m, s), (t, g)| {
                    let w = (t as f64).powi(power);
                    (m + g * w, s + g.abs() * w)
                });
            if moment.abs() > 1e-9 * scale {
                return invalid(format!(
                    "high-pass moment {power} is {moment}; fewer than {vanishing_moments} vanishing moments"
                ));
            }
        }
        Ok(WaveletSpec {
            half_support: (len / 2) as u32,
            low_pass: taps,
            high_pass,
            vanishing_moments,
            coarsest_level,
            boundary: BoundaryMode::Periodized,
        })
    }

    /// Reads a filter table: a header line `N L` followed by `2L` taps, one per line.
    pub fn from_filter_file(path: impl AsRef<Path>, coarsest_level: u32) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_filter_table(&text, coarsest_level)
    }

    pub fn parse_filter_table(text: &str, coarsest_level: u32) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidInput("empty filter table".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (n, l) = match fields.as_slice() {
            [n, l] => (
                n.parse::<u32>().map_err(|e| Error::InvalidInput(format!("header N: {e}")))?,
                l.parse::<usize>().map_err(|e| Error::InvalidInput(format!("header L: {e}")))?,
            ),
            _ => return invalid(format!("filter table header must be `N L`, got `{header}`")),
        };
        let taps = lines
            .map(|line| {
                line.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("tap `{line}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if taps.len() != 2 * l {
            return invalid(format!("expected {} taps for L = {l}, found {}", 2 * l, taps.len()));
        }
        Self::from_taps(taps, n, coarsest_level)
    }

    pub fn low_pass(&self) -> &[f64] {
        &self.low_pass
    }

    pub fn high_pass(&self) -> &[f64] {
        &self.high_pass
    }

    pub fn vanishing_moments(&self) -> u32 {
        self.vanishing_moments
    }

    /// `L`; the filter has `2L` taps and supports have width `(2L - 1) 2^-j`.
    pub fn half_support(&self) -> u32 {
        self.half_support
    }

    pub fn coarsest_level(&self) -> u32 {
        self.coarsest_level
    }

    pub fn boundary(&self) -> &BoundaryMode {
        &self.boundary
    }

    pub fn with_coarsest_level(mut self, coarsest_level: u32) -> Self {
        self.coarsest_level = coarsest_level;
        self
    }

    /// `S_{j,k} = 2^-j [k - L + 1, k + L) ∩ [0, 1)`.
    pub fn support(&self, j: u32, k: u64) -> Result<DyadicInterval> {
        check_index(j, k)?;
        let l = self.half_support as i64;
        let size = 1i64 << j;
        let start = (k as i64 - l + 1).max(0);
        let end = (k as i64 + l).min(size);
        DyadicInterval::new(j, start as u64, end as u64)
    }

    /// Region of `[0, 1)` on which the periodized `phi_{j,k}` and `psi_{j,k}`
    /// can be non-zero: the support `S_{j,k}` taken modulo one. At most two
    /// pieces, in increasing order.
    pub fn footprint(&self, j: u32, k: u64) -> Result<Vec<DyadicInterval>> {
        check_index(j, k)?;
        Ok(footprint_cells(j, k, self.half_support)
            .into_iter()
            .map(|(start, end)| DyadicInterval { level: j, start, end })
            .collect())
    }
}

impl Default for WaveletSpec {
    /// Eight vanishing moments, coarsest level five.
    fn default() -> Self {
        Self::daubechies(8, 5).expect("db8 filter is valid")
    }
}

fn check_index(j: u32, k: u64) -> Result<()> {
    if j > 62 || k >> j != 0 {
        return invalid(format!("coefficient index ({j}, {k}) out of range"));
    }
    Ok(())
}

/// Level-`j` cell ranges `[start, end)` covered by `2L - 1` cells starting at
/// `k - L + 1`, modulo `2^j`.
pub(crate) fn footprint_cells(j: u32, k: u64, half_support: u32) -> Vec<(u64, u64)> {
    let size = 1u64 << j;
    let width = 2 * half_support as u64 - 1;
    if width >= size {
        return vec![(0, size)];
    }
    let start = (k + size - (half_support as u64 - 1) % size) % size;
    let end = start + width;
    if end <= size {
        vec![(start, end)]
    } else {
        vec![(0, end - size), (start, size)]
    }
}
