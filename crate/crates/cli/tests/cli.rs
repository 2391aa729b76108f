//! End-to-end runs of the `wavesense` binary.

use std::process::{Command, Output};

fn wavesense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavesense"))
        .args(args)
        .env_remove("AWS_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    assert!(output.status.success(), "failed: {}", String::from_utf8_lossy(&output.stderr));
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn noiseless_uniform_heavisine_matches_its_golden_error() {
    let out = stdout(&wavesense(&["run", "--design", "uniform", "--sigma", "0", "--function", "heavisine", "--n", "1024", "--reps", "1"]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..4], ["heavisine", "0", "uniform", "0"]);
    let error: f64 = row[4].parse().unwrap();
    assert!((error - 5.312_002_910_857_475).abs() < 1e-9, "{error}");
    assert_eq!(row[6], "NA");
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let args = ["run", "--function", "bumps", "--n", "2048", "--reps", "4", "--seed", "9"];
    let a = stdout(&wavesense(&args));
    assert_eq!(a, stdout(&wavesense(&args)));
    let other = stdout(&wavesense(&["run", "--function", "bumps", "--n", "2048", "--reps", "4", "--seed", "10"]));
    assert_ne!(a, other);
}

#[test]
fn environment_seed_is_a_fallback_only() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_wavesense"));
        cmd.args(["run", "--print-config"]).env_remove("AWS_SEED");
        if let Some(v) = env {
            cmd.env("AWS_SEED", v);
        }
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        let out = stdout(&cmd.output().unwrap());
        out.lines().find(|l| l.starts_with("seed")).unwrap().to_string()
    };
    assert_eq!(run(None, None), "seed = 1");
    assert_eq!(run(Some("77"), None), "seed = 77");
    assert_eq!(run(Some("77"), Some("5")), "seed = 5");
}

#[test]
fn printed_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.conf");
    let text = stdout(&wavesense(&["run", "--print-config", "--sigma", "0.5", "--lambda", "0.25", "--function", "bumps"]));
    std::fs::write(&path, &text).unwrap();
    let again = stdout(&wavesense(&["run", "--print-config", "--config", path.to_str().unwrap()]));
    assert_eq!(text, again);
    assert!(text.contains("lambda = 0.25"));
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        vec!["run", "--function", "nope"],
        vec!["run", "--sigma", "-1"],
        vec!["run", "--design", "uniform", "--n", "1000"],
        vec!["run", "--bogus-flag"],
        vec!["dump-function", "--name", "doppler", "--level", "40"],
    ] {
        let out = wavesense(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn infeasible_schedule_exits_with_three() {
    let out = wavesense(&["run", "--n", "64", "--n0", "128", "--reps", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dump_function_writes_the_grid() {
    let out = stdout(&wavesense(&["dump-function", "--name", "doppler", "--level", "3"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x,f(x)");
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[1], "0,0");
    assert!(lines[5].starts_with("0.5,"));
}

#[test]
fn dump_design_writes_design_trajectory_and_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("design.csv");
    let trajectory = dir.path().join("trajectory.csv");
    let coefficients = dir.path().join("coefficients.csv");
    let out = wavesense(&[
        "dump-design",
        "--n",
        "1024",
        "--out",
        design.to_str().unwrap(),
        "--trajectory",
        trajectory.to_str().unwrap(),
        "--coefficients",
        coefficients.to_str().unwrap(),
    ]);
    stdout(&out);
    let design = std::fs::read_to_string(design).unwrap();
    assert_eq!(design.lines().next(), Some("numerator,level"));
    assert_eq!(design.lines().count(), 1025);
    let trajectory = std::fs::read_to_string(trajectory).unwrap();
    assert_eq!(trajectory.lines().next(), Some("stage,n,j_max,sigma_hat"));
    assert_eq!(trajectory.lines().last().unwrap().split(',').nth(1), Some("1024"));
    let coefficients = std::fs::read_to_string(coefficients).unwrap();
    assert_eq!(coefficients.lines().next(), Some("j,k,i_n,beta_hat,surviving"));
}

#[test]
fn sweep_renders_as_svg_and_plot_reads_it_back() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let args = ["sweep", "--n", "256,512", "--reps", "3", "--out", csv.to_str().unwrap()];
    stdout(&wavesense(&args));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("function,sigma,n,design,reps,median,lo,hi"));
    assert_eq!(text.lines().count(), 5);
    let svg = stdout(&wavesense(&["plot", "--input", csv.to_str().unwrap()]));
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    let passthrough = stdout(&wavesense(&["plot", "--input", csv.to_str().unwrap(), "--format", "csv"]));
    assert_eq!(passthrough, text);
}

#[test]
fn compare_reports_one_row_per_function_and_noise_level() {
    let out = stdout(&wavesense(&["compare", "--function", "doppler,bumps", "--sigma", "0.5,1", "--n", "512", "--reps", "3"]));
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "function,sigma,n,reps,uniform_median,uniform_lo,uniform_hi,adaptive_median,adaptive_lo,adaptive_hi,p_value");
    assert_eq!(rows.len(), 5);
}
