//! Medians, distribution-free median confidence intervals and the
//! Mann-Whitney U test.

use statrs::distribution::{ContinuousCDF, Normal};

/// Sample median; the mean of the two central values for even sizes.
/// Reorders `values`. Panics on an empty slice.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MedianCi {
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    /// Exact coverage of `[x_(r), x_(n+1-r)]` under continuous sampling.
    pub coverage: f64,
    /// Too few samples for the requested level; the interval is the sample range.
    pub degenerate: bool,
}

/// `P(B <= r)` for `B ~ Binomial(n, 1/2)`, for `r` in `0..=n`.
pub fn binomial_half_cdf(n: usize) -> Vec<f64> {
    let mut pmf = 0.5f64.powi(n as i32);
    let mut acc = 0.0;
    let mut cdf = Vec::with_capacity(n + 1);
    for r in 0..=n {
        acc += pmf;
        cdf.push(acc.min(1.0));
        pmf *= (n - r) as f64 / (r + 1) as f64;
    }
    cdf
}

/// Order-statistic confidence interval for the median: the largest `r` with
/// `2 P(B <= r - 1) <= 1 - level` gives `[x_(r), x_(n+1-r)]`.
pub fn median_ci(samples: &[f64], level: f64) -> MedianCi {
    assert!(!samples.is_empty(), "confidence interval of an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let med = median(&mut sorted.clone());
    let cdf = binomial_half_cdf(n);
    let alpha = 1.0 - level;
    let mut rank = 0;
    for r in 1..=n.div_ceil(2) {
        if 2.0 * cdf[r - 1] <= alpha {
            rank = r;
        } else {
            break;
        }
    }
    if rank == 0 {
        return MedianCi { median: med, lo: sorted[0], hi: sorted[n - 1], coverage: 1.0 - 2.0 * cdf[0], degenerate: true };
    }
    MedianCi {
        median: med,
        lo: sorted[rank - 1],
        hi: sorted[n - rank],
        coverage: 1.0 - 2.0 * cdf[rank - 1],
        degenerate: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MannWhitney {
    /// `U` for the first sample, with midranks for ties.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Largest sample size handled by exact enumeration of the null distribution.
pub const EXACT_LIMIT: usize = 20;

/// Two-sided Mann-Whitney U test. Exact (over all rank assignments, with the
/// observed midranks) when both samples have at most [`EXACT_LIMIT`] values;
/// otherwise the tie-corrected normal approximation with continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "Mann-Whitney U needs two non-empty samples");
    let (n1, n2) = (a.len(), b.len());
    let total = n1 + n2;
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&x| (x, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    // doubled midranks keep every rank an integer
    let mut doubled = vec![0u64; total];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < total {
        let mut end = start + 1;
        while end < total && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        let mid2 = (start + 1 + end) as u64;
        doubled[start..end].fill(mid2);
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    let rank_sum2: u64 = pooled.iter().zip(&doubled).filter(|(x, _)| x.1).map(|(_, &r)| r).sum();
    let u = rank_sum2 as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;

    if n1 <= EXACT_LIMIT && n2 <= EXACT_LIMIT {
        let p_value = exact_p_value(&doubled, n1, rank_sum2);
        return MannWhitney { u, p_value, exact: true };
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, total as f64);
    let mean = n1f * n2f / 2.0;
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.sf(z)).min(1.0)
    };
    MannWhitney { u, p_value, exact: false }
}

/// `P(|T - E T| >= |t - E T|)` where `T` is the doubled rank sum of a random
/// size-`n1` subset of the pooled doubled ranks.
fn exact_p_value(doubled: &[u64], n1: usize, observed: u64) -> f64 {
    let max_sum: u64 = doubled.iter().sum();
    let width = max_sum as usize + 1;
    // counts[size][sum]
    let mut counts = vec![vec![0f64; width]; n1 + 1];
    counts[0][0] = 1.0;
    for (seen, &r) in doubled.iter().enumerate() {
        let r = r as usize;
        for size in (1..=n1.min(seen + 1)).rev() {
            let (lower, upper) = counts.split_at_mut(size);
            let src = &lower[size - 1];
            let dst = &mut upper[0];
            for s in (r..width).rev() {
                dst[s] += src[s - r];
            }
        }
    }
    let dist = &counts[n1];
    let all: f64 = dist.iter().sum();
    // E T = n1 (N + 1) in doubled units
    let mean2 = (n1 * (doubled.len() + 1)) as i64;
    let dev = (observed as i64 - mean2).abs();
    let extreme: f64 = dist
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - mean2).abs() >= dev)
        .map(|(_, c)| c)
        .sum();
    (extreme / all).min(1.0)
}
