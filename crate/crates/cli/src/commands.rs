use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use serde::Serialize;
use smcf::config::RunConfig;
use smcf::ensemble::{EnsembleResult, StrongOrderReport, WeakErrorReport};
use smcf::functionals::ito_track;
use smcf::io::{write_ledger_csv, write_trajectory_csv};
use smcf::oracle::matrix_rows;
use smcf::sde::replay_noise;
use smcf::validate::ValidateOptions;
use smcf::{
    quadratic_energy, run_ensemble, simulate, strong_order_estimate, weak_error, InitialCondition,
    NoiseStream, PathRunner, SimConfig, SmcfError, SpectralOracle,
};

use crate::options::{
    Cli, Command, ConfigArgs, ConvergeArgs, EnsembleArgs, OracleArgs, SimulateArgs, ValidateArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<SmcfError> for CliError {
    fn from(e: SmcfError) -> Self {
        match e {
            SmcfError::NumericOverflow { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).expect("report serializes");
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
            Ok(())
        }
    }
}

fn load_config(args: &ConfigArgs) -> CliResult<RunConfig> {
    let mut rc = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        rc = RunConfig::from_json(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    let over = args.overrides().map_err(CliError::Config)?;
    Ok(rc.merged(&over))
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    output_paths: Vec<String>,
    tool_version: &'static str,
    wall_time_seconds: f64,
}

fn write_manifest(
    path: &Path,
    command: &'static str,
    config: &RunConfig,
    outputs: &[&Path],
    started: Instant,
) -> CliResult<()> {
    let manifest = RunManifest {
        command,
        config,
        output_paths: outputs.iter().map(|p| p.display().to_string()).collect(),
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(path, &manifest)
}

fn manifest_path(explicit: &Option<PathBuf>, output: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    })
}

pub fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Ensemble(a) => ensemble_cmd(a),
        Command::Converge(a) => converge_cmd(a),
        Command::Oracle(a) => oracle_cmd(a),
        Command::Validate(a) => validate_cmd(a),
    }
}

fn simulate_cmd(args: SimulateArgs) -> CliResult<ExitCode> {
    let started = Instant::now();
    let rc = load_config(&args.config)?;
    let (net, cfg) = rc.resolve()?;
    if args.ledger.is_some() && cfg.record_every != 1 {
        return Err(CliError::Config(
            "--ledger needs every step recorded (record_every = 1)".into(),
        ));
    }
    let mut stream = NoiseStream::new(cfg.seed, args.path_index);
    let traj = simulate(&net, &cfg, &mut stream)?;

    let mut out = create(&args.output)?;
    write_trajectory_csv(&traj, &mut out)
        .and_then(|_| out.flush())
        .map_err(io_err(&args.output))?;
    let mut outputs = vec![args.output.as_path()];

    if let Some(path) = &args.ledger {
        let replay = replay_noise(&net, &cfg, args.path_index)?;
        let ledger = ito_track(&traj, &net, &cfg, &quadratic_energy(net.site_count()), &replay)?;
        let mut out = create(path)?;
        write_ledger_csv(&ledger, &mut out)
            .and_then(|_| out.flush())
            .map_err(io_err(path))?;
        outputs.push(path);
    }

    let manifest = manifest_path(&args.manifest, &args.output);
    write_manifest(&manifest, "simulate", &rc, &outputs, started)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct OracleComparison {
    exact_mean: Vec<f64>,
    exact_variance: Vec<f64>,
    exact_graph_mean_variance: f64,
    /// Relative error of each per-site variance estimate.
    variance_relative_error: Vec<f64>,
    graph_mean_variance_relative_error: f64,
    weak: WeakErrorReport,
}

#[derive(Serialize)]
struct EnsembleReport {
    config: RunConfig,
    initial: Vec<f64>,
    terminal_variance: Vec<f64>,
    terminal_variance_se: Vec<f64>,
    estimates: EnsembleResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleComparison>,
}

fn given_initial(cfg: &SimConfig) -> Vec<f64> {
    match &cfg.initial {
        InitialCondition::Given(v) => v.clone(),
        InitialCondition::Uniform => unreachable!("initial pinned before resolve"),
    }
}

fn ensemble_cmd(args: EnsembleArgs) -> CliResult<ExitCode> {
    let started = Instant::now();
    let mut rc = load_config(&args.config)?;
    rc.pin_initial();
    let (net, cfg) = rc.resolve()?;
    let runner = PathRunner::new(args.workers);
    let estimates = run_ensemble(&net, &cfg, args.paths, &runner)?;

    let oracle = if args.oracle {
        let oracle = SpectralOracle::for_network(&net, &cfg.sigma)?;
        let u0 = given_initial(&cfg);
        let cov = oracle.exact_covariance(cfg.t_end)?;
        let n = net.site_count();
        let exact_variance: Vec<f64> = (0..n).map(|i| cov[(i, i)]).collect();
        let ones = vec![1.0 / n as f64; n];
        let gm_exact = oracle.variance_along(&cov, &ones);
        let rel = |est: f64, exact: f64| (est - exact).abs() / exact;
        // The weak report reruns the same seeded paths, so its ensemble mean
        // matches `estimates.terminal_mean` exactly.
        let weak = weak_error(&net, &cfg, args.paths, &oracle, &runner)?;
        Some(OracleComparison {
            exact_mean: oracle.exact_mean(&u0, cfg.t_end)?,
            variance_relative_error: estimates
                .terminal_variance()
                .iter()
                .zip(&exact_variance)
                .map(|(e, x)| rel(*e, *x))
                .collect(),
            graph_mean_variance_relative_error: rel(estimates.graph_mean_variance, gm_exact),
            exact_variance,
            exact_graph_mean_variance: gm_exact,
            weak,
        })
    } else {
        None
    };

    let report = EnsembleReport {
        config: rc.clone(),
        initial: given_initial(&cfg),
        terminal_variance: estimates.terminal_variance(),
        terminal_variance_se: estimates.terminal_variance_se(),
        estimates,
        oracle,
    };
    write_json(&args.output, &report)?;
    let manifest = manifest_path(&args.manifest, &args.output);
    write_manifest(&manifest, "ensemble", &rc, &[args.output.as_path()], started)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ConvergeReport {
    config: RunConfig,
    path_count: usize,
    #[serde(flatten)]
    report: StrongOrderReport,
}

fn converge_cmd(args: ConvergeArgs) -> CliResult<ExitCode> {
    let rc = load_config(&args.config)?;
    let (net, cfg) = rc.resolve()?;
    let report = strong_order_estimate(
        &net,
        &cfg,
        args.paths,
        args.levels,
        &PathRunner::new(args.workers),
    )?;
    emit_json(
        args.output.as_deref(),
        &ConvergeReport {
            config: rc,
            path_count: args.paths,
            report,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct OracleReport {
    time: f64,
    eigenvalues: Vec<f64>,
    initial: Vec<f64>,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    stationary_deviation_covariance: Vec<Vec<f64>>,
}

fn oracle_cmd(args: OracleArgs) -> CliResult<ExitCode> {
    let mut rc = load_config(&args.config)?;
    rc.pin_initial();
    let (net, cfg) = rc.resolve()?;
    let t = args.time.unwrap_or(cfg.t_end);
    if !(t.is_finite() && t >= 0.0) {
        return Err(CliError::Config(format!("--time must be finite and >= 0, got {t}")));
    }
    let oracle = SpectralOracle::for_network(&net, &cfg.sigma)?;
    let u0 = given_initial(&cfg);
    let report = OracleReport {
        time: t,
        eigenvalues: oracle.eigenvalues().to_vec(),
        mean: oracle.exact_mean(&u0, t)?,
        covariance: matrix_rows(&oracle.exact_covariance(t)?),
        stationary_deviation_covariance: matrix_rows(&oracle.stationary_deviation_covariance()),
        initial: u0,
    };
    emit_json(args.output.as_deref(), &report)?;
    Ok(ExitCode::SUCCESS)
}

fn validate_cmd(args: ValidateArgs) -> CliResult<ExitCode> {
    let opts = ValidateOptions {
        quick: args.quick,
        seed: args.seed,
        runner: PathRunner::new(args.workers),
        fault: None,
    };
    let report = smcf::validate::run(&opts)?;
    print!("{}", report.to_text());
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name).collect();
        eprintln!("failed checks: {}", names.join(", "));
        Ok(ExitCode::from(1))
    }
}
