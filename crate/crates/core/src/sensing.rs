//! The staged adaptive design loop: after a uniform start, each stage ranks
//! the surviving coefficients, turns them into a target density over a
//! dyadic partition, and refines whole grids inside the cells where the
//! design falls furthest short of that density.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::design::{Design, Observations};
use crate::dyadic::{DyadicInterval, DyadicPoint, MAX_LEVEL};
use crate::error::{invalid, Error, Result};
use crate::estimator::{fit, j_max, CoefficientSet, EstimatorConfig};
use crate::wavelet::{footprint_cells, WaveletSpec};

/// Stage sizes `n_m = floor(2^{j + tau m})`, with `n_0 = 2^j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageSchedule {
    initial_level: u32,
    tau: f64,
}

impl StageSchedule {
    pub fn new(n0: u64, tau: f64) -> Result<Self> {
        if !n0.is_power_of_two() || !(2..=1 << 40).contains(&n0) {
            return invalid(format!("initial design size {n0} must be a power of two in [2, 2^40]"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid(format!("tau must be positive and finite, got {tau}"));
        }
        Ok(StageSchedule { initial_level: n0.trailing_zeros(), tau })
    }

    pub fn n0(&self) -> u64 {
        1 << self.initial_level
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `n_m` before clipping to a budget.
    pub fn stage_size(&self, m: u32) -> u64 {
        let v = 2f64.powf(self.initial_level as f64 + self.tau * m as f64).floor();
        if v >= u64::MAX as f64 {
            u64::MAX
        } else {
            v as u64
        }
    }

    /// Distinct stage sizes `n_0 < n_1 < ...`, each clipped at `n_total`, ending at `n_total`.
    pub fn sizes(&self, n_total: u64) -> Vec<u64> {
        let mut sizes = vec![self.n0().min(n_total)];
        let mut m = 1;
        while *sizes.last().expect("non-empty") < n_total {
            let n = self.stage_size(m).min(n_total);
            if n > *sizes.last().expect("non-empty") {
                sizes.push(n);
            }
            m += 1;
        }
        sizes
    }

    /// Checks that every stage can afford its mandatory grid even if none
    /// of it is present beyond the previous stage's grid.
    pub fn check_feasible(&self, n_total: u64, coarsest_level: u32) -> Result<()> {
        if n_total < self.n0() {
            return Err(Error::ScheduleInfeasible(format!(
                "budget {n_total} is smaller than the initial design size {}",
                self.n0()
            )));
        }
        let sizes = self.sizes(n_total);
        let mut grid = self.initial_level;
        for pair in sizes.windows(2) {
            let level = partition_level(pair[1], coarsest_level);
            if level > grid {
                let needed = (1u64 << level) - (1u64 << grid);
                if needed > pair[1] - pair[0] {
                    return Err(Error::ScheduleInfeasible(format!(
                        "stage {} -> {} cannot afford the 2^-{level} grid ({needed} new points)",
                        pair[0], pair[1]
                    )));
                }
                grid = level;
            }
        }
        Ok(())
    }
}

/// Partition level used at a stage of size `n`: `j_max(n)`.
pub fn partition_level(n: u64, coarsest_level: u32) -> u32 {
    j_max(n as usize, coarsest_level)
}

/// `r_j(k)`: 1-based rank of `|beta^T_{j,k}|` in decreasing order, ties by
/// ascending `k`. Indexed by `k`.
pub fn rank_coefficients(coeffs: &CoefficientSet, j: u32) -> Vec<u64> {
    rank_magnitudes(&coeffs.thresholded_level(j))
}

/// Ranking of arbitrary values by decreasing magnitude, ties by ascending index.
pub fn rank_magnitudes(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    for (position, k) in order.into_iter().enumerate() {
        ranks[k] = position as u64 + 1;
    }
    ranks
}

/// Piecewise-constant target density `p_l = A raw_l` on the cells
/// `2^-partition_level [l, l + 1)`, normalized to integrate to one.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetDensity {
    pub partition_level: u32,
    /// `max({lambda} ∪ {2^j / (r_j(k) j_max^2)})` per cell.
    pub raw: Vec<f64>,
    pub normalizer: f64,
    pub lambda: f64,
}

impl TargetDensity {
    /// Constant raw value `lambda` everywhere, so `p ≡ 1`.
    pub fn uniform(partition_level: u32, lambda: f64) -> Result<Self> {
        Self::from_raw(partition_level, vec![lambda; 1 << partition_level], lambda)
    }

    pub fn from_raw(partition_level: u32, raw: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be positive and finite, got {lambda}"));
        }
        if raw.len() != 1 << partition_level {
            return invalid(format!("expected {} cells, got {}", 1u64 << partition_level, raw.len()));
        }
        if let Some(v) = raw.iter().find(|v| !(**v >= lambda && v.is_finite())) {
            return invalid(format!("raw density value {v} below lambda = {lambda}"));
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        Ok(TargetDensity { partition_level, raw, normalizer: 1.0 / mean, lambda })
    }

    pub fn cells(&self) -> usize {
        self.raw.len()
    }

    pub fn value(&self, l: usize) -> f64 {
        self.normalizer * self.raw[l]
    }

    pub fn values(&self) -> Vec<f64> {
        self.raw.iter().map(|r| self.normalizer * r).collect()
    }

    pub fn integral(&self) -> f64 {
        self.values().iter().sum::<f64>() / self.cells() as f64
    }

    pub fn cell(&self, l: usize) -> DyadicInterval {
        DyadicInterval { level: self.partition_level, start: l as u64, end: l as u64 + 1 }
    }
}

/// Builds the target density on the partition at `partition_level` from the
/// non-zero thresholded coefficients at levels `j0 <= j < coeffs.j_max()`.
/// A cell is credited by a coefficient when it lies inside the
/// coefficient's support taken modulo one.
pub fn target_density(
    coeffs: &CoefficientSet,
    partition_level: u32,
    lambda: f64,
    spec: &WaveletSpec,
) -> Result<TargetDensity> {
    if partition_level > 30 {
        return invalid(format!("partition level {partition_level} is too fine"));
    }
    let jm = coeffs.j_max() as f64;
    let mut raw = vec![lambda; 1 << partition_level];
    let top = coeffs.j_max().min(coeffs.top_level());
    for j in coeffs.coarsest_level()..top {
        let ranks = rank_coefficients(coeffs, j);
        for (k, &rank) in ranks.iter().enumerate() {
            if coeffs.thresholded(j, k as u64) == 0.0 {
                continue;
            }
            let value = 2f64.powi(j as i32) / (rank as f64 * jm * jm);
            for (start, end) in footprint_cells(j, k as u64, spec.half_support()) {
                let (lo, hi) = if j <= partition_level {
                    let s = partition_level - j;
                    (start << s, end << s)
                } else {
                    let s = j - partition_level;
                    (start.div_ceil(1 << s), end >> s)
                };
                for r in &mut raw[lo as usize..hi.max(lo) as usize] {
                    *r = r.max(value);
                }
            }
        }
    }
    TargetDensity::from_raw(partition_level, raw, lambda)
}

/// One refinement batch of the greedy selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchRecord {
    pub cell: usize,
    pub depth_before: u32,
    pub depth_after: u32,
    pub points: usize,
    /// Whether the whole `2^-(depth_before + 1)` grid of the cell was added.
    pub completed: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageSelection {
    /// New points in insertion order.
    pub points: Vec<DyadicPoint>,
    /// How many of `points` came from the mandatory partition grid.
    pub mandatory: usize,
    pub batches: Vec<BatchRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    ratio: f64,
    cell: usize,
    depth: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio.total_cmp(&other.ratio).then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Grows `design` to exactly `n_target` points: first the partition grid,
/// then whole-grid refinements of the cell maximizing `p_l / q_l` (ties to
/// the smallest `l`), truncating the last batch.
pub fn select_stage_points(design: &mut Design, target: &TargetDensity, n_target: usize) -> Result<StageSelection> {
    if design.len() > n_target {
        return invalid(format!("design already has {} > {n_target} points", design.len()));
    }
    let level = target.partition_level;
    let whole = DyadicInterval::cell(0, 0)?;
    let mandatory = design.missing_grid_points(&whole, level)?;
    if design.len() + mandatory.len() > n_target {
        return Err(Error::ScheduleInfeasible(format!(
            "{} points needed for the 2^-{level} grid but only {} remain in the stage",
            mandatory.len(),
            n_target - design.len()
        )));
    }
    let mut selection = StageSelection { mandatory: mandatory.len(), ..Default::default() };
    for &p in &mandatory {
        design.insert(p);
    }
    selection.points.extend(mandatory);

    let depth_of = |design: &Design, l: usize| -> Result<u32> {
        design
            .grid_depth(&target.cell(l))
            .ok_or_else(|| Error::InconsistentDesign(format!("cell {l} lost its left endpoint")))
    };
    let candidate = |l: usize, depth: u32| Candidate { ratio: target.raw[l] / 2f64.powi(depth as i32), cell: l, depth };
    let mut depths = Vec::with_capacity(target.cells());
    for l in 0..target.cells() {
        depths.push(depth_of(design, l)?);
    }
    let mut heap: BinaryHeap<Candidate> = depths.iter().enumerate().map(|(l, &d)| candidate(l, d)).collect();

    while design.len() < n_target {
        let top = heap.pop().ok_or_else(|| Error::InconsistentDesign("no cell left to refine".into()))?;
        if top.depth != depths[top.cell] {
            continue;
        }
        let l = top.cell;
        let before = depths[l];
        if before >= MAX_LEVEL {
            return invalid(format!("cell {l} cannot be refined beyond level {MAX_LEVEL}"));
        }
        let missing = design.missing_grid_points(&target.cell(l), before + 1)?;
        let room = n_target - design.len();
        let completed = missing.len() <= room;
        let batch: Vec<DyadicPoint> = missing.into_iter().take(room).collect();
        for &p in &batch {
            design.insert(p);
        }
        let after = depth_of(design, l)?;
        selection.batches.push(BatchRecord { cell: l, depth_before: before, depth_after: after, points: batch.len(), completed });
        selection.points.extend(batch);
        depths[l] = after;
        heap.push(candidate(l, after));
    }
    Ok(selection)
}

/// `max_l p_l / q_l` with `q_l = 2^{depth_l} / n`; infinite when a cell has
/// no effective density.
pub fn max_discrepancy(design: &Design, target: &TargetDensity) -> f64 {
    let q = design.effective_density(target.partition_level);
    q.values.iter().enumerate().fold(0.0, |m, (l, &q)| m.max(target.value(l) / q))
}

/// `min_l q_l / p_l`.
pub fn min_coverage(design: &Design, target: &TargetDensity) -> f64 {
    let q = design.effective_density(target.partition_level);
    q.values.iter().enumerate().fold(f64::INFINITY, |m, (l, &q)| m.min(q / target.value(l)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensingConfig {
    pub spec: WaveletSpec,
    pub estimator: EstimatorConfig,
    pub lambda: f64,
    pub schedule: StageSchedule,
    /// Keep the coefficient set fitted at every stage boundary.
    pub keep_estimates: bool,
    /// Grid level the estimate will be evaluated on; the practical estimator
    /// runs at this level or the design's deepest, whichever is finer.
    pub prediction_level: Option<u32>,
}

impl SensingConfig {
    pub fn new(spec: WaveletSpec, estimator: EstimatorConfig, lambda: f64, schedule: StageSchedule) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be positive and finite, got {lambda}"));
        }
        Ok(SensingConfig { spec, estimator, lambda, schedule, keep_estimates: false, prediction_level: None })
    }
}

impl Default for SensingConfig {
    /// db8 with `j0 = 5`, `kappa = 1`, `lambda = tau = 1/2`, `n0 = 64`.
    fn default() -> Self {
        SensingConfig {
            spec: WaveletSpec::default(),
            estimator: EstimatorConfig::default(),
            lambda: 0.5,
            schedule: StageSchedule { initial_level: 6, tau: 0.5 },
            keep_estimates: false,
            prediction_level: None,
        }
    }
}

/// Level at which the practical estimator is run for a design.
pub fn estimation_level(design: &Design, config: &SensingConfig) -> u32 {
    design
        .deepest_level()
        .max(config.spec.coarsest_level() + 1)
        .max(config.prediction_level.unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    pub stage: u32,
    /// Design size at the end of the stage.
    pub n: usize,
    pub partition_level: u32,
    /// Noise level used for the estimate that drove this stage.
    pub sigma_hat: f64,
    pub surviving: usize,
    pub mandatory: usize,
    pub batches: Vec<BatchRecord>,
    /// `max_l p_l / q_l` at the end of the stage.
    pub max_discrepancy: f64,
    /// `min_l q_l / p_l` at the end of the stage.
    pub min_coverage: f64,
}

#[derive(Clone, Debug)]
pub struct SensingRun {
    pub design: Design,
    pub observations: Observations,
    /// Every design point in the order it was chosen.
    pub order: Vec<DyadicPoint>,
    pub stages: Vec<StageRecord>,
    /// Estimates at each stage boundary, when requested.
    pub estimates: Vec<CoefficientSet>,
    /// The final thresholded estimate.
    pub estimate: CoefficientSet,
}

impl SensingRun {
    /// The design after the first `n` chosen points.
    pub fn design_at(&self, n: usize) -> Design {
        self.order[..n.min(self.order.len())].iter().copied().collect()
    }

    /// CSV with columns `stage,n,j_max,sigma_hat`.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("stage,n,j_max,sigma_hat\n");
        for s in &self.stages {
            out.push_str(&format!("{},{},{},{}\n", s.stage, s.n, s.partition_level, s.sigma_hat));
        }
        out
    }
}

/// Runs the adaptive loop until `n_total` points have been observed.
/// `oracle` is called exactly once per design point.
pub fn run(mut oracle: impl FnMut(DyadicPoint) -> f64, config: &SensingConfig, n_total: u64) -> Result<SensingRun> {
    let spec = &config.spec;
    let n0 = config.schedule.n0();
    if n_total < n0 {
        return Err(Error::ScheduleInfeasible(format!("budget {n_total} is below the initial size {n0}")));
    }
    let mut design = Design::uniform(n0)?;
    let order: Vec<DyadicPoint> = design.iter().collect();
    let mut observations: Observations = order.iter().map(|&p| (p, oracle(p))).collect();
    let mut run = SensingRun {
        design: Design::new(),
        observations: Observations::new(),
        order,
        stages: Vec::new(),
        estimates: Vec::new(),
        estimate: fit(&design, &observations, spec, &config.estimator, estimation_level(&design, config))?,
    };
    let sizes = config.schedule.sizes(n_total);
    for (m, &n_m) in sizes.iter().enumerate().skip(1) {
        let coeffs = &run.estimate;
        let sigma_hat = coeffs.sigma_used().unwrap_or(0.0);
        let level = partition_level(n_m, spec.coarsest_level());
        let target = target_density(coeffs, level, config.lambda, spec)?;
        let selection = select_stage_points(&mut design, &target, n_m as usize)?;
        for &p in &selection.points {
            observations.insert(p, oracle(p));
        }
        run.order.extend_from_slice(&selection.points);
        run.stages.push(StageRecord {
            stage: m as u32,
            n: design.len(),
            partition_level: level,
            sigma_hat,
            surviving: coeffs.surviving_count(),
            mandatory: selection.mandatory,
            batches: selection.batches,
            max_discrepancy: max_discrepancy(&design, &target),
            min_coverage: min_coverage(&design, &target),
        });
        let next = fit(&design, &observations, spec, &config.estimator, estimation_level(&design, config))?;
        let previous = std::mem::replace(&mut run.estimate, next);
        if config.keep_estimates {
            run.estimates.push(previous);
        }
    }
    run.design = design;
    run.observations = observations;
    Ok(run)
}
