use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use smcf::config::{InitialKeyword, InitialSpec, PartialConfig, SigmaSpec, Topology};
use smcf::UpdateMode;

#[derive(Debug, Parser)]
#[command(name = "smcf", version, about = "Stochastic mean curvature flow on networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one path and write its trajectory CSV.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo ensemble and write a JSON report.
    Ensemble(EnsembleArgs),
    /// Measure the strong convergence order by coupled refinement.
    Converge(ConvergeArgs),
    /// Print exact Ornstein-Uhlenbeck moments as JSON.
    Oracle(OracleArgs),
    /// Run the simulation-versus-oracle property suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TopologyArg {
    Path,
    Pairs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UpdateModeArg {
    Synchronous,
    LegacySequential,
}

/// Configuration layering: flags override the JSON file, which overrides the
/// built-in ten-site defaults.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub topology: Option<TopologyArg>,
    #[arg(long)]
    pub sites: Option<usize>,
    /// Site pairs as `i-j,k-l,...` (with `--topology pairs`).
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// One value for every site, or a comma-separated list per site.
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub update_mode: Option<UpdateModeArg>,
    #[arg(long)]
    pub record_every: Option<usize>,
    /// `uniform` or a comma-separated start vector.
    #[arg(long)]
    pub initial: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Trajectory CSV path.
    #[arg(short, long, default_value = "trajectory.csv")]
    pub output: PathBuf,
    /// Also write the Itô ledger of the quadratic energy (needs record_every = 1).
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Run manifest path; defaults to `<output>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Noise stream index of the path.
    #[arg(long, default_value_t = 0)]
    pub path_index: u64,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 20_000)]
    pub paths: usize,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Include exact moments and weak errors from the spectral oracle.
    #[arg(long)]
    pub oracle: bool,
    #[arg(short, long, default_value = "ensemble.json")]
    pub output: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 2000)]
    pub paths: usize,
    /// Number of step sizes `dt, dt/2, ...`.
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// JSON report path; printed to stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Evaluation time; defaults to `t_end`.
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Smaller ensembles (2000 paths) with ±25% variance bands.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad {what} entry {s:?}: {e}"))
        })
        .collect()
}

fn parse_pairs(text: &str) -> Result<Vec<[usize; 2]>, String> {
    text.split(',')
        .map(|p| {
            let (a, b) = p
                .trim()
                .split_once('-')
                .ok_or_else(|| format!("pair {p:?} is not of the form i-j"))?;
            let site = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("bad site {s:?}: {e}"));
            Ok([site(a)?, site(b)?])
        })
        .collect()
}

impl ConfigArgs {
    pub fn overrides(&self) -> Result<PartialConfig, String> {
        let sigma = match &self.sigma {
            None => None,
            Some(s) => {
                let v = parse_floats(s, "sigma")?;
                Some(if v.len() == 1 {
                    SigmaSpec::Scalar(v[0])
                } else {
                    SigmaSpec::PerSite(v)
                })
            }
        };
        let initial = match self.initial.as_deref() {
            None => None,
            Some("uniform") => Some(InitialSpec::Keyword(InitialKeyword::Uniform)),
            Some(s) => Some(InitialSpec::Vector(parse_floats(s, "initial")?)),
        };
        Ok(PartialConfig {
            topology: self.topology.map(|t| match t {
                TopologyArg::Path => Topology::Path,
                TopologyArg::Pairs => Topology::Pairs,
            }),
            sites: self.sites,
            pairs: self.pairs.as_deref().map(parse_pairs).transpose()?,
            dt: self.dt,
            t_end: self.t_end,
            sigma,
            seed: self.seed,
            update_mode: self.update_mode.map(|m| match m {
                UpdateModeArg::Synchronous => UpdateMode::Synchronous,
                UpdateModeArg::LegacySequential => UpdateMode::LegacySequential,
            }),
            record_every: self.record_every,
            initial,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        assert_eq!(parse_floats("0.1, 0.2", "x").unwrap(), vec![0.1, 0.2]);
        assert!(parse_floats("0.1,abc", "x").is_err());
        assert_eq!(parse_pairs("0-1, 2-3").unwrap(), vec![[0, 1], [2, 3]]);
        assert!(parse_pairs("0:1").is_err());
    }
}
