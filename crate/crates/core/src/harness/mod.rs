//! Simulation experiments: seeded noisy oracles, the uniform baseline and
//! adaptive runs, replication across threads, and the comparison tables.

pub mod stats;

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::design::{Design, Observations};
use crate::dyadic::DyadicPoint;
use crate::error::{invalid, Error, Result};
use crate::estimator::{fit, j_max, reconstruct, CoefficientSet};
use crate::functions::TestFunction;
use crate::sensing::{self, SensingConfig, SensingRun};

use self::stats::{mann_whitney_u, median_ci, MedianCi};

/// Grid level of the sup-norm error.
pub const DEFAULT_ERROR_LEVEL: u32 = 17;
/// Confidence level of the reported median intervals.
pub const CI_LEVEL: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignMode {
    Uniform,
    Adaptive,
}

impl DesignMode {
    pub const BOTH: [DesignMode; 2] = [DesignMode::Uniform, DesignMode::Adaptive];

    pub fn name(self) -> &'static str {
        match self {
            DesignMode::Uniform => "uniform",
            DesignMode::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for DesignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(DesignMode::Uniform),
            "adaptive" => Ok(DesignMode::Adaptive),
            _ => invalid(format!("unknown design mode `{s}` (expected uniform or adaptive)")),
        }
    }
}

/// Standard normal noise indexed by design point. Every point has its own
/// ChaCha stream under a run-specific key, so a draw depends only on the key
/// and the point, never on the order of queries.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    base: ChaCha8Rng,
}

impl NoiseStream {
    pub fn from_key(words: [u64; 4]) -> Self {
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        NoiseStream { base: ChaCha8Rng::from_seed(seed) }
    }

    /// Stream for one replication of one experimental arm.
    pub fn for_run(master_seed: u64, function: TestFunction, sigma: f64, design: DesignMode, rep: u64) -> Self {
        let tag = ((function as u64) << 8) | design as u64;
        Self::from_key([master_seed, rep, tag, sigma.to_bits()])
    }

    pub fn draw(&self, p: DyadicPoint) -> f64 {
        let mut rng = self.base.clone();
        rng.set_stream(p.key());
        StandardNormal.sample(&mut rng)
    }
}

/// `Y = f(x) + sigma * eps` with `eps` from a [`NoiseStream`].
#[derive(Clone, Debug)]
pub struct NoisyOracle {
    pub function: TestFunction,
    pub sigma: f64,
    noise: NoiseStream,
}

impl NoisyOracle {
    pub fn new(function: TestFunction, sigma: f64, noise: NoiseStream) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return invalid(format!("sigma must be finite and non-negative, got {sigma}"));
        }
        Ok(NoisyOracle { function, sigma, noise })
    }

    pub fn observe(&self, p: DyadicPoint) -> f64 {
        let truth = self.function.eval(p.value()).expect("design points lie in [0, 1)");
        if self.sigma == 0.0 {
            truth
        } else {
            truth + self.sigma * self.noise.draw(p)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub function: TestFunction,
    pub sigma: f64,
    pub n_total: u64,
    pub design: DesignMode,
    pub reps: u64,
    pub seed: u64,
    pub error_level: u32,
    pub sensing: SensingConfig,
}

impl ExperimentConfig {
    /// Paper defaults for everything but the signal, noise and budget.
    pub fn new(function: TestFunction, sigma: f64, n_total: u64, design: DesignMode) -> Self {
        ExperimentConfig {
            function,
            sigma,
            n_total,
            design,
            reps: 250,
            seed: 0,
            error_level: DEFAULT_ERROR_LEVEL,
            sensing: SensingConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return invalid("at least one replication is required");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return invalid(format!("sigma must be finite and non-negative, got {}", self.sigma));
        }
        let j0 = self.sensing.spec.coarsest_level();
        if self.error_level < j_max(self.n_total as usize, j0) || self.error_level > 26 {
            return invalid(format!(
                "error grid level {} must lie in [j_max(n) = {}, 26]",
                self.error_level,
                j_max(self.n_total as usize, j0)
            ));
        }
        match self.design {
            DesignMode::Uniform => {
                if !self.n_total.is_power_of_two() || self.n_total <= 1 << j0 {
                    return invalid(format!(
                        "uniform designs need a power-of-two size above 2^{j0}, got {}",
                        self.n_total
                    ));
                }
            }
            DesignMode::Adaptive => {
                if self.sensing.schedule.n0() <= 1 << j0 {
                    return invalid(format!(
                        "initial design size {} must exceed 2^j0 = {}",
                        self.sensing.schedule.n0(),
                        1u64 << j0
                    ));
                }
                self.sensing.schedule.check_feasible(self.n_total, j0)?;
            }
        }
        Ok(())
    }

    pub fn with_design(&self, design: DesignMode) -> Self {
        ExperimentConfig { design, ..self.clone() }
    }
}

/// Invariants checked on every adaptive run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantReport {
    /// The design has exactly the scheduled size after every stage.
    pub budget_exact: bool,
    /// Every completed refinement batch raised its cell's depth by exactly one.
    pub halving_exact: bool,
    /// Smallest `min_l q_l / p_l` over stages; `None` without stages.
    pub min_coverage: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub function: TestFunction,
    pub sigma: f64,
    pub design: DesignMode,
    pub rep: u64,
    pub n: usize,
    pub max_error: f64,
    pub sigma_hat: f64,
    pub seconds: f64,
    pub invariants: InvariantReport,
}

/// `max_x |f_hat(x) - f(x)|` over matching grid values.
pub fn max_error(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return invalid(format!("grid sizes differ: {} vs {}", estimate.len(), truth.len()));
    }
    Ok(estimate.iter().zip(truth).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// Uniform design `x_i = (i - 1)/n` and its thresholded estimate.
pub fn uniform_baseline(
    oracle: impl Fn(DyadicPoint) -> f64,
    n: u64,
    sensing: &SensingConfig,
) -> Result<(Design, Observations, CoefficientSet)> {
    let design = Design::uniform(n)?;
    let observations: Observations = design.iter().map(|p| (p, oracle(p))).collect();
    let level = sensing::estimation_level(&design, sensing);
    let coeffs = fit(&design, &observations, &sensing.spec, &sensing.estimator, level)?;
    Ok((design, observations, coeffs))
}

fn check_invariants(run: &SensingRun, config: &ExperimentConfig) -> InvariantReport {
    let sizes = config.sensing.schedule.sizes(config.n_total);
    let budget_exact = run.design.len() == config.n_total as usize
        && run.order.len() == config.n_total as usize
        && run.stages.iter().zip(&sizes[1..]).all(|(s, &n)| s.n == n as usize)
        && run.stages.len() + 1 == sizes.len();
    let halving_exact = run
        .stages
        .iter()
        .flat_map(|s| &s.batches)
        .all(|b| if b.completed { b.depth_after == b.depth_before + 1 } else { b.depth_after == b.depth_before });
    let min_coverage = run.stages.iter().map(|s| s.min_coverage).reduce(f64::min);
    InvariantReport { budget_exact, halving_exact, min_coverage }
}

/// One replication of `config`.
pub fn run_single(config: &ExperimentConfig, rep: u64) -> Result<RunResult> {
    let start = Instant::now();
    let noise = NoiseStream::for_run(config.seed, config.function, config.sigma, config.design, rep);
    let oracle = NoisyOracle::new(config.function, config.sigma, noise)?;
    // both arms estimate directly on the grid the error is measured on
    let sensing = SensingConfig { prediction_level: Some(config.error_level), ..config.sensing.clone() };
    let (coeffs, invariants) = match config.design {
        DesignMode::Uniform => {
            let (_, _, coeffs) = uniform_baseline(|p| oracle.observe(p), config.n_total, &sensing)?;
            (coeffs, InvariantReport { budget_exact: true, halving_exact: true, min_coverage: None })
        }
        DesignMode::Adaptive => {
            let run = sensing::run(|p| oracle.observe(p), &sensing, config.n_total)?;
            let invariants = check_invariants(&run, config);
            (run.estimate, invariants)
        }
    };
    let estimate = reconstruct(&coeffs, &config.sensing.spec, config.error_level)?;
    let truth = config.function.grid_values(config.error_level);
    Ok(RunResult {
        function: config.function,
        sigma: config.sigma,
        design: config.design,
        rep,
        n: config.n_total as usize,
        max_error: max_error(&estimate, &truth)?,
        sigma_hat: coeffs.sigma_used().unwrap_or(f64::NAN),
        seconds: start.elapsed().as_secs_f64(),
        invariants,
    })
}

/// Runs `f` over `0..tasks` on at most `jobs` threads (`None`: all cores),
/// returning results in task order.
fn parallel_map<T: Send>(tasks: usize, jobs: Option<usize>, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return invalid("--jobs must be at least 1");
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| (0..tasks).into_par_iter().map(&f).collect())
}

/// All replications of `config`, ordered by replication id.
pub fn replicate(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<RunResult>> {
    Ok(replicate_all(std::slice::from_ref(config), jobs)?.pop().expect("one config"))
}

/// Replications of several configurations sharing one thread pool.
pub fn replicate_all(configs: &[ExperimentConfig], jobs: Option<usize>) -> Result<Vec<Vec<RunResult>>> {
    for c in configs {
        c.validate()?;
    }
    let mut tasks = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        tasks.extend((0..c.reps).map(|rep| (i, rep)));
    }
    let flat = parallel_map(tasks.len(), jobs, |t| {
        let (i, rep) = tasks[t];
        run_single(&configs[i], rep)
    })?;
    let mut grouped: Vec<Vec<RunResult>> = configs.iter().map(|c| Vec::with_capacity(c.reps as usize)).collect();
    for (r, &(i, _)) in flat.into_iter().zip(&tasks) {
        grouped[i].push(r);
    }
    Ok(grouped)
}

fn errors(results: &[RunResult]) -> Vec<f64> {
    results.iter().map(|r| r.max_error).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub function: TestFunction,
    pub sigma: f64,
    pub n: u64,
    pub reps: u64,
    pub uniform: MedianCi,
    pub adaptive: MedianCi,
    /// Two-sided Mann-Whitney U p-value, uniform vs adaptive errors.
    pub p_value: f64,
}

impl ComparisonRow {
    pub fn from_results(uniform: &[RunResult], adaptive: &[RunResult]) -> Result<Self> {
        let (Some(u0), Some(_)) = (uniform.first(), adaptive.first()) else {
            return invalid("comparison needs results for both designs");
        };
        let (eu, ea) = (errors(uniform), errors(adaptive));
        Ok(ComparisonRow {
            function: u0.function,
            sigma: u0.sigma,
            n: u0.n as u64,
            reps: uniform.len() as u64,
            uniform: median_ci(&eu, CI_LEVEL),
            adaptive: median_ci(&ea, CI_LEVEL),
            p_value: mann_whitney_u(&eu, &ea).p_value,
        })
    }
}

/// Uniform and adaptive replications for every `(function, sigma)` pair,
/// each arm with its own noise streams.
pub fn compare(
    base: &ExperimentConfig,
    functions: &[TestFunction],
    sigmas: &[f64],
    jobs: Option<usize>,
) -> Result<(Vec<ComparisonRow>, Vec<RunResult>)> {
    let mut configs = Vec::new();
    for &function in functions {
        for &sigma in sigmas {
            for design in DesignMode::BOTH {
                configs.push(ExperimentConfig { function, sigma, design, ..base.clone() });
            }
        }
    }
    let grouped = replicate_all(&configs, jobs)?;
    let rows = grouped.chunks(2).map(|pair| ComparisonRow::from_results(&pair[0], &pair[1])).collect::<Result<_>>()?;
    Ok((rows, grouped.into_iter().flatten().collect()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub function: TestFunction,
    pub sigma: f64,
    pub n: u64,
    pub design: DesignMode,
    pub reps: u64,
    pub error: MedianCi,
}

/// Median errors of both designs for each budget in `sizes`.
pub fn sweep(base: &ExperimentConfig, sizes: &[u64], jobs: Option<usize>) -> Result<(Vec<SweepRow>, Vec<RunResult>)> {
    let mut configs = Vec::new();
    for &n_total in sizes {
        for design in DesignMode::BOTH {
            configs.push(ExperimentConfig { n_total, design, ..base.clone() });
        }
    }
    let grouped = replicate_all(&configs, jobs)?;
    let rows = configs
        .iter()
        .zip(&grouped)
        .map(|(c, results)| SweepRow {
            function: c.function,
            sigma: c.sigma,
            n: c.n_total,
            design: c.design,
            reps: c.reps,
            error: median_ci(&errors(results), CI_LEVEL),
        })
        .collect();
    Ok((rows, grouped.into_iter().flatten().collect()))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub const RESULTS_HEADER: &str = "function,sigma,design,rep,max_error,sigma_hat,seconds";
pub const REPORT_HEADER: &str = "function,sigma,n,reps,uniform_median,uniform_lo,uniform_hi,\
adaptive_median,adaptive_lo,adaptive_hi,p_value";
pub const SWEEP_HEADER: &str = "function,sigma,n,design,reps,median,lo,hi";

/// Per-run CSV; timings are written only when `record_time` is set so that
/// the default output is reproducible byte for byte.
pub fn results_csv(results: &[RunResult], record_time: bool) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in results {
        let seconds = if record_time { format!("{:.6}", r.seconds) } else { "NA".into() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.function, r.sigma, r.design, r.rep, r.max_error, r.sigma_hat, seconds
        );
    }
    out
}

pub fn report_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "# uniform and adaptive arms use independent noise streams; \
         95% order-statistic median intervals; two-sided Mann-Whitney U\n",
    );
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.function,
            r.sigma,
            r.n,
            r.reps,
            r.uniform.median,
            r.uniform.lo,
            r.uniform.hi,
            r.adaptive.median,
            r.adaptive.lo,
            r.adaptive.hi,
            r.p_value
        );
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.function, r.sigma, r.n, r.design, r.reps, r.error.median, r.error.lo, r.error.hi
        );
    }
    out
}
