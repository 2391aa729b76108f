//! `wavesense`: run adaptive-sensing simulations, reproduce the comparison
//! table and budget sweep, and dump designs, test functions and plots.

mod plot;
mod settings;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wavesense::harness::{self, stats, DesignMode, NoiseStream, NoisyOracle};
use wavesense::{sensing, Error, Result, TestFunction};

use settings::{parse_config_file, CommandDefaults, ExperimentArgs, Settings, SEED_ENV};

#[derive(Parser, Debug)]
#[command(name = "wavesense", version, about = "Spatially-adaptive sensing for wavelet regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replicate one configuration and write per-run results
    Run(RunArgs),
    /// Uniform vs adaptive medians, intervals and p-values over functions and noise levels
    Compare(CompareArgs),
    /// Median errors of both designs across sample budgets
    Sweep(SweepArgs),
    /// Run once and write the chosen design (and optionally the stage trajectory)
    DumpDesign(DumpDesignArgs),
    /// Write a test function on a dyadic grid as `x,f(x)`
    DumpFunction(DumpFunctionArgs),
    /// Render a sweep or comparison CSV
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file (written atomically); standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the `seconds` column with wall-clock times (makes output non-reproducible)
    #[arg(long)]
    record_time: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write per-run results here
    #[arg(long)]
    results: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write per-run results here
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct DumpDesignArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Design CSV (`numerator,level`, one dyadic point per row)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-stage CSV `stage,n,j_max,sigma_hat`
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Final coefficient CSV `j,k,i_n,beta_hat,surviving`
    #[arg(long)]
    coefficients: Option<PathBuf>,
    /// Replication whose noise stream is used
    #[arg(long, default_value_t = 0)]
    rep: u64,
}

#[derive(Args, Debug)]
struct DumpFunctionArgs {
    /// blocks, bumps, heavisine or doppler
    #[arg(long, alias = "name")]
    function: String,
    /// Grid level: values at k 2^-level for k < 2^level
    #[arg(long, default_value_t = 12)]
    level: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Sweep or comparison CSV
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "svg")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) => 2,
        Error::ScheduleInfeasible(_) => 3,
        _ => 1,
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn resolve(args: &ExperimentArgs, defaults: CommandDefaults) -> Result<Option<Settings>> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let settings = Settings::resolve(args, &file, env_seed.as_deref(), &defaults)?;
    if args.print_config {
        print!("{}", settings.to_config_text());
        return Ok(None);
    }
    Ok(Some(settings))
}

fn single<T: Copy>(values: &[T], name: &str) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => Err(Error::InvalidInput(format!("this command takes exactly one --{name}"))),
    }
}

fn report_invariants(results: &[harness::RunResult]) {
    for r in results {
        if !(r.invariants.budget_exact && r.invariants.halving_exact) {
            eprintln!(
                "warning: {} sigma={} rep {}: design invariant violated ({:?})",
                r.function, r.sigma, r.rep, r.invariants
            );
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let defaults = CommandDefaults {
        functions: vec![TestFunction::Doppler],
        sigmas: vec![1.0],
        sizes: vec![1 << 14],
        design: DesignMode::Adaptive,
    };
    let Some(s) = resolve(&args.experiment, defaults)? else { return Ok(()) };
    let config = s.experiment(single(&s.functions, "function")?, single(&s.sigmas, "sigma")?, single(&s.sizes, "n")?, s.design)?;
    let results = harness::replicate(&config, s.jobs)?;
    report_invariants(&results);
    let errors: Vec<f64> = results.iter().map(|r| r.max_error).collect();
    let ci = stats::median_ci(&errors, harness::CI_LEVEL);
    eprintln!(
        "{} sigma={} n={} {}: median max error {} (95% CI {} .. {}) over {} runs",
        config.function, config.sigma, config.n_total, config.design, ci.median, ci.lo, ci.hi, results.len()
    );
    write_output(args.output.out.as_deref(), &harness::results_csv(&results, args.output.record_time))
}

fn compare(args: CompareArgs) -> Result<()> {
    let defaults = CommandDefaults {
        functions: TestFunction::ALL.to_vec(),
        sigmas: vec![0.5, 1.0, 2.0],
        sizes: vec![1 << 14],
        design: DesignMode::Adaptive,
    };
    let Some(s) = resolve(&args.experiment, defaults)? else { return Ok(()) };
    let base = s.experiment(s.functions[0], s.sigmas[0], single(&s.sizes, "n")?, DesignMode::Adaptive)?;
    let (rows, results) = harness::compare(&base, &s.functions, &s.sigmas, s.jobs)?;
    report_invariants(&results);
    if let Some(path) = &args.results {
        write_output(Some(path), &harness::results_csv(&results, args.output.record_time))?;
    }
    write_output(args.output.out.as_deref(), &harness::report_csv(&rows))
}

fn sweep(args: SweepArgs) -> Result<()> {
    let defaults = CommandDefaults {
        functions: vec![TestFunction::Doppler],
        sigmas: vec![1.0],
        sizes: (10..=14).map(|e| 1u64 << e).collect(),
        design: DesignMode::Adaptive,
    };
    let Some(s) = resolve(&args.experiment, defaults)? else { return Ok(()) };
    let base = s.experiment(single(&s.functions, "function")?, single(&s.sigmas, "sigma")?, s.sizes[0], DesignMode::Adaptive)?;
    let (rows, results) = harness::sweep(&base, &s.sizes, s.jobs)?;
    report_invariants(&results);
    if let Some(path) = &args.results {
        write_output(Some(path), &harness::results_csv(&results, args.output.record_time))?;
    }
    let csv = harness::sweep_csv(&rows);
    let text = match args.format {
        Format::Csv => csv,
        Format::Svg => plot::render_svg(&plot::parse_table(&csv)?),
    };
    write_output(args.output.out.as_deref(), &text)
}

fn dump_design(args: DumpDesignArgs) -> Result<()> {
    let defaults = CommandDefaults {
        functions: vec![TestFunction::Doppler],
        sigmas: vec![1.0],
        sizes: vec![1 << 11],
        design: DesignMode::Adaptive,
    };
    let Some(s) = resolve(&args.experiment, defaults)? else { return Ok(()) };
    let config = s.experiment(single(&s.functions, "function")?, single(&s.sigmas, "sigma")?, single(&s.sizes, "n")?, s.design)?;
    config.validate()?;
    let noise = NoiseStream::for_run(config.seed, config.function, config.sigma, config.design, args.rep);
    let oracle = NoisyOracle::new(config.function, config.sigma, noise)?;
    let (design, coeffs, trajectory) = match config.design {
        DesignMode::Uniform => {
            let (design, _, coeffs) = harness::uniform_baseline(|p| oracle.observe(p), config.n_total, &config.sensing)?;
            (design, coeffs, String::from("stage,n,j_max,sigma_hat\n"))
        }
        DesignMode::Adaptive => {
            let run = sensing::run(|p| oracle.observe(p), &config.sensing, config.n_total)?;
            let trajectory = run.trajectory_csv();
            (run.design, run.estimate, trajectory)
        }
    };
    if let Some(path) = &args.trajectory {
        write_output(Some(path), &trajectory)?;
    }
    if let Some(path) = &args.coefficients {
        write_output(Some(path), &coeffs.to_csv())?;
    }
    write_output(args.out.as_deref(), &design.to_csv())
}

fn dump_function(args: DumpFunctionArgs) -> Result<()> {
    let function: TestFunction = args.function.parse()?;
    if args.level > 24 {
        return Err(Error::InvalidInput(format!("level {} is too fine (at most 24)", args.level)));
    }
    let n = 1u64 << args.level;
    let mut text = String::from("x,f(x)\n");
    for (k, v) in function.grid_values(args.level).iter().enumerate() {
        // adding zero turns a negative zero into a plain one
        text.push_str(&format!("{},{}\n", k as f64 / n as f64, v + 0.0));
    }
    write_output(args.out.as_deref(), &text)
}

fn plot(args: PlotArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", args.input.display())))?;
    let table = plot::parse_table(&text)?;
    let out = match args.format {
        Format::Csv => table.text.clone(),
        Format::Svg => plot::render_svg(&table),
    };
    write_output(args.out.as_deref(), &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep(a),
        Command::DumpDesign(a) => dump_design(a),
        Command::DumpFunction(a) => dump_function(a),
        Command::Plot(a) => plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
