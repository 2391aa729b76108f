//! Resolution of experiment settings from flags, an optional `key = value`
//! file, the `AWS_SEED` environment variable and the built-in defaults,
//! in that order of precedence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use clap::Args;
use wavesense::estimator::{EstimatorConfig, Mode, NoiseLevel};
use wavesense::harness::{DesignMode, ExperimentConfig, DEFAULT_ERROR_LEVEL};
use wavesense::sensing::{SensingConfig, StageSchedule};
use wavesense::{Error, Result, TestFunction, WaveletSpec};

pub const SEED_ENV: &str = "AWS_SEED";
pub const DEFAULT_SEED: u64 = 1;

/// Flags shared by every experiment subcommand. Unset flags fall back to
/// the config file, then to the defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct ExperimentArgs {
    /// Test function(s): blocks, bumps, heavisine, doppler (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub function: Vec<String>,
    /// Noise standard deviation(s) (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    /// Sample budget(s) (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u64>,
    /// Design: uniform or adaptive
    #[arg(long)]
    pub design: Option<String>,
    /// Replications per configuration
    #[arg(long)]
    pub reps: Option<u64>,
    /// Master seed (falls back to the AWS_SEED environment variable)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threshold multiplier
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Floor of the target density
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Stage growth exponent: n_m = 2^(log2 n0 + tau m)
    #[arg(long)]
    pub tau: Option<f64>,
    /// Initial uniform design size (power of two)
    #[arg(long)]
    pub n0: Option<u64>,
    /// Coarsest wavelet level
    #[arg(long)]
    pub j0: Option<u32>,
    /// Vanishing moments of the Daubechies wavelet (1-10)
    #[arg(long = "vanishing-moments")]
    pub vanishing_moments: Option<u32>,
    /// Grid level of the sup-norm error
    #[arg(long)]
    pub jerr: Option<u32>,
    /// Maximum concurrent replications (default: all cores)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Estimator: practical or theoretical
    #[arg(long)]
    pub estimator: Option<String>,
    /// Threshold with the true sigma instead of estimating it
    #[arg(long)]
    pub known_sigma: bool,
    /// `key = value` file with defaults for any of the flags above
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Print the fully resolved configuration and exit
    #[arg(long)]
    pub print_config: bool,
}

/// Defaults that differ between subcommands.
#[derive(Clone, Debug)]
pub struct CommandDefaults {
    pub functions: Vec<TestFunction>,
    pub sigmas: Vec<f64>,
    pub sizes: Vec<u64>,
    pub design: DesignMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub functions: Vec<TestFunction>,
    pub sigmas: Vec<f64>,
    pub sizes: Vec<u64>,
    pub design: DesignMode,
    pub reps: u64,
    pub seed: u64,
    pub kappa: f64,
    pub lambda: f64,
    pub tau: f64,
    pub n0: u64,
    pub j0: u32,
    pub vanishing_moments: u32,
    pub jerr: u32,
    pub jobs: Option<usize>,
    pub mode: Mode,
    pub known_sigma: bool,
}

const KEYS: [&str; 16] = [
    "function",
    "sigma",
    "n",
    "design",
    "reps",
    "seed",
    "kappa",
    "lambda",
    "tau",
    "n0",
    "j0",
    "vanishing-moments",
    "jerr",
    "jobs",
    "estimator",
    "known-sigma",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("config line {}: expected `key = value`", number + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidInput(format!("config line {}: unknown key `{key}`", number + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| Error::InvalidInput(format!("bad value `{value}` for {key}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidInput(format!("bad value `{value}` for {key}: expected true or false"))),
    }
}

fn parse_mode(value: &str) -> Result<Mode> {
    match value.to_ascii_lowercase().as_str() {
        "practical" => Ok(Mode::Practical),
        "theoretical" => Ok(Mode::Theoretical),
        _ => Err(Error::InvalidInput(format!("unknown estimator `{value}` (expected practical or theoretical)"))),
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Practical => "practical",
        Mode::Theoretical => "theoretical",
    }
}

impl Settings {
    /// Merges flags over the config file (`file`), the seed environment
    /// variable (`env_seed`) and `defaults`.
    pub fn resolve(
        args: &ExperimentArgs,
        file: &BTreeMap<String, String>,
        env_seed: Option<&str>,
        defaults: &CommandDefaults,
    ) -> Result<Self> {
        let get = |key: &str| file.get(key).map(String::as_str);
        macro_rules! scalar {
            ($flag:expr, $key:literal, $default:expr) => {
                match ($flag, get($key)) {
                    (Some(v), _) => v,
                    (None, Some(s)) => parse($key, s)?,
                    (None, None) => $default,
                }
            };
        }
        let functions = if !args.function.is_empty() {
            args.function.iter().map(|s| s.parse()).collect::<Result<Vec<TestFunction>>>()?
        } else if let Some(s) = get("function") {
            parse_list("function", s)?
        } else {
            defaults.functions.clone()
        };
        let sigmas = if !args.sigma.is_empty() {
            args.sigma.clone()
        } else if let Some(s) = get("sigma") {
            parse_list("sigma", s)?
        } else {
            defaults.sigmas.clone()
        };
        let sizes = if !args.n.is_empty() {
            args.n.clone()
        } else if let Some(s) = get("n") {
            parse_list("n", s)?
        } else {
            defaults.sizes.clone()
        };
        let design = match (&args.design, get("design")) {
            (Some(s), _) => s.parse()?,
            (None, Some(s)) => s.parse()?,
            (None, None) => defaults.design,
        };
        let seed = match (args.seed, get("seed"), env_seed) {
            (Some(v), _, _) => v,
            (None, Some(s), _) => parse("seed", s)?,
            (None, None, Some(s)) => parse(SEED_ENV, s.trim())?,
            (None, None, None) => DEFAULT_SEED,
        };
        let mode = match (&args.estimator, get("estimator")) {
            (Some(s), _) => parse_mode(s)?,
            (None, Some(s)) => parse_mode(s)?,
            (None, None) => Mode::Practical,
        };
        let known_sigma = args.known_sigma || get("known-sigma").map(|s| parse_bool("known-sigma", s)).transpose()?.unwrap_or(false);
        let jobs = match (args.jobs, get("jobs")) {
            (Some(v), _) => Some(v),
            (None, Some(s)) => Some(parse("jobs", s)?),
            (None, None) => None,
        };
        let settings = Settings {
            functions,
            sigmas,
            sizes,
            design,
            reps: scalar!(args.reps, "reps", 250),
            seed,
            kappa: scalar!(args.kappa, "kappa", 1.0),
            lambda: scalar!(args.lambda, "lambda", 0.5),
            tau: scalar!(args.tau, "tau", 0.5),
            n0: scalar!(args.n0, "n0", 64),
            j0: scalar!(args.j0, "j0", 5),
            vanishing_moments: scalar!(args.vanishing_moments, "vanishing-moments", 8),
            jerr: scalar!(args.jerr, "jerr", DEFAULT_ERROR_LEVEL),
            jobs,
            mode,
            known_sigma,
        };
        settings.check()?;
        Ok(settings)
    }

    fn check(&self) -> Result<()> {
        if self.functions.is_empty() || self.sigmas.is_empty() || self.sizes.is_empty() {
            return Err(Error::InvalidInput("function, sigma and n lists must not be empty".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidInput("--jobs must be at least 1".into()));
        }
        self.experiment(self.functions[0], self.sigmas[0], self.sizes[0], self.design).map(|_| ())
    }

    pub fn experiment(&self, function: TestFunction, sigma: f64, n_total: u64, design: DesignMode) -> Result<ExperimentConfig> {
        let spec = WaveletSpec::daubechies(self.vanishing_moments, self.j0)?;
        let noise = if self.known_sigma { NoiseLevel::Known(sigma) } else { NoiseLevel::Estimate };
        let estimator = EstimatorConfig::new(self.kappa, noise, self.mode)?;
        let schedule = StageSchedule::new(self.n0, self.tau)?;
        let sensing = SensingConfig::new(spec, estimator, self.lambda, schedule)?;
        Ok(ExperimentConfig {
            function,
            sigma,
            n_total,
            design,
            reps: self.reps,
            seed: self.seed,
            error_level: self.jerr,
            sensing,
        })
    }

    /// The resolved configuration in the config-file format.
    pub fn to_config_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let _ = writeln!(out, "function = {}", join(self.functions.iter().map(|f| f.to_string()).collect()));
        let _ = writeln!(out, "sigma = {}", join(self.sigmas.iter().map(|s| s.to_string()).collect()));
        let _ = writeln!(out, "n = {}", join(self.sizes.iter().map(|s| s.to_string()).collect()));
        let _ = writeln!(out, "design = {}", self.design);
        let _ = writeln!(out, "reps = {}", self.reps);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "kappa = {}", self.kappa);
        let _ = writeln!(out, "lambda = {}", self.lambda);
        let _ = writeln!(out, "tau = {}", self.tau);
        let _ = writeln!(out, "n0 = {}", self.n0);
        let _ = writeln!(out, "j0 = {}", self.j0);
        let _ = writeln!(out, "vanishing-moments = {}", self.vanishing_moments);
        let _ = writeln!(out, "jerr = {}", self.jerr);
        if let Some(j) = self.jobs {
            let _ = writeln!(out, "jobs = {j}");
        }
        let _ = writeln!(out, "estimator = {}", mode_name(self.mode));
        let _ = writeln!(out, "known-sigma = {}", self.known_sigma);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> CommandDefaults {
        CommandDefaults {
            functions: vec![TestFunction::Doppler],
            sigmas: vec![1.0],
            sizes: vec![1 << 14],
            design: DesignMode::Adaptive,
        }
    }

    #[test]
    fn defaults_match_the_experiments() {
        let s = Settings::resolve(&ExperimentArgs::default(), &BTreeMap::new(), None, &defaults()).unwrap();
        assert_eq!((s.kappa, s.lambda, s.tau), (1.0, 0.5, 0.5));
        assert_eq!((s.n0, s.j0, s.vanishing_moments, s.jerr, s.reps), (64, 5, 8, 17, 250));
        assert_eq!(s.seed, DEFAULT_SEED);
        assert_eq!(s.mode, Mode::Practical);
    }

    #[test]
    fn precedence_flag_file_env() {
        let file = parse_config_file("seed = 5\nkappa = 2 # comment\n\nfunction = bumps, blocks\n").unwrap();
        let mut args = ExperimentArgs::default();
        let s = Settings::resolve(&args, &file, Some("9"), &defaults()).unwrap();
        assert_eq!((s.seed, s.kappa), (5, 2.0));
        assert_eq!(s.functions, vec![TestFunction::Bumps, TestFunction::Blocks]);
        let s = Settings::resolve(&args, &BTreeMap::new(), Some("9"), &defaults()).unwrap();
        assert_eq!(s.seed, 9);
        args.seed = Some(3);
        args.kappa = Some(0.5);
        let s = Settings::resolve(&args, &file, Some("9"), &defaults()).unwrap();
        assert_eq!((s.seed, s.kappa), (3, 0.5));
    }

    #[test]
    fn config_text_round_trips() {
        let args = ExperimentArgs { sigma: vec![0.5, 2.0], jobs: Some(2), ..ExperimentArgs::default() };
        let s = Settings::resolve(&args, &BTreeMap::new(), None, &defaults()).unwrap();
        let file = parse_config_file(&s.to_config_text()).unwrap();
        let back = Settings::resolve(&ExperimentArgs::default(), &file, None, &defaults()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(parse_config_file("colour = red").is_err());
        assert!(parse_config_file("kappa 2").is_err());
        let file = parse_config_file("kappa = big").unwrap();
        assert!(Settings::resolve(&ExperimentArgs::default(), &file, None, &defaults()).is_err());
        let file = parse_config_file("n0 = 48").unwrap();
        assert!(Settings::resolve(&ExperimentArgs::default(), &file, None, &defaults()).is_err());
    }
}
