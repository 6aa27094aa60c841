//! Simulation-versus-oracle property suite behind the `validate` command.

use serde::Serialize;

use crate::ensemble::{run_ensemble, strong_order_estimate, weak_error, PathRunner};
use crate::error::Result;
use crate::functionals::{discrete_energy_identity, ito_track, quadratic_energy, realized_qv_ratio};
use crate::graph::{Network, State};
use crate::io::trajectory_csv_string;
use crate::noise::NoiseStream;
use crate::oracle::SpectralOracle;
use crate::sde::{em_step, em_step_sequential, replay_noise, simulate, InitialCondition, SimConfig};

/// Deliberate defects for checking that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Noise enters as `σ N(0, 1)` instead of `σ √dt N(0, 1)`.
    MissingSqrtDt,
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub quick: bool,
    pub seed: u64,
    pub runner: PathRunner,
    pub fault: Option<Fault>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            quick: false,
            seed: 42,
            runner: PathRunner::default(),
            fault: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub quick: bool,
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        out
    }
}

struct Sizes {
    paths: usize,
    strong_paths: usize,
    martingale_paths: usize,
    variance_band: f64,
    graph_band: f64,
}

impl Sizes {
    fn new(quick: bool) -> Self {
        if quick {
            Self {
                paths: 2000,
                strong_paths: 2000,
                martingale_paths: 2000,
                variance_band: 0.25,
                graph_band: 0.25,
            }
        } else {
            Self {
                paths: 20_000,
                strong_paths: 2000,
                martingale_paths: 5000,
                variance_band: 0.10,
                graph_band: 0.15,
            }
        }
    }
}

const SITES: usize = 10;
const SIGMA: f64 = 0.1;

fn chain_config(seed: u64, u0: Vec<f64>) -> (Network, SimConfig) {
    let net = Network::path(SITES).expect("10-site chain");
    let mut cfg = SimConfig::chain_defaults(SITES).with_initial(u0);
    cfg.seed = seed;
    (net, cfg)
}

/// A fixed random start in `[0, 1)`, drawn from a stream index no path uses.
pub fn fixed_random_start(seed: u64, n: usize) -> Vec<f64> {
    NoiseStream::new(seed, u64::MAX).uniform_vec(n)
}

fn rel_dev(est: f64, exact: f64) -> f64 {
    (est - exact).abs() / exact.abs()
}

pub fn run(opts: &ValidateOptions) -> Result<ValidationReport> {
    let sizes = Sizes::new(opts.quick);
    let checks = vec![
        check_curvature(opts.seed),
        check_legacy_mode()?,
        check_deterministic_flow(opts)?,
        check_weak_mean(opts, &sizes)?,
        check_covariance(opts, &sizes)?,
        check_strong_order(opts, &sizes)?,
        check_ito_ledger(opts, &sizes)?,
        check_energy_balance(opts, &sizes)?,
        check_quadratic_variation(opts)?,
        check_determinism(opts)?,
    ];
    Ok(ValidationReport {
        quick: opts.quick,
        checks,
    })
}

fn check_curvature(seed: u64) -> CheckOutcome {
    let mut rng = NoiseStream::new(seed, 1 << 40);
    let mut worst = 0.0_f64;
    for trial in 0..1000 {
        let n = 2 + (rng.uniform() * 11.0) as usize;
        let net = match trial % 3 {
            0 => Network::path(n).unwrap(),
            1 if n >= 3 => Network::cycle(n).unwrap(),
            _ => {
                let mut pairs = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        if rng.uniform() < 0.4 {
                            pairs.push((i, j));
                        }
                    }
                }
                Network::from_pairs(n, pairs).unwrap()
            }
        };
        let u: Vec<f64> = rng.gaussian_increments(n, 1.0);
        let kappa = net.curvature(&u).unwrap();
        let lu = net.laplacian_matrix() * nalgebra::DVector::from_column_slice(&u);
        let scale = u.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        for (k, l) in kappa.iter().zip(lu.iter()) {
            worst = worst.max((k + l).abs() / scale);
        }
    }
    CheckOutcome {
        name: "curvature_laplacian_equivalence",
        passed: worst <= 1e-12,
        detail: format!("max |κ + Lu| / max|u| = {worst:.3e} over 1000 graphs (limit 1e-12)"),
    }
}

fn check_legacy_mode() -> Result<CheckOutcome> {
    let net = Network::path(3)?;
    let mut cfg = SimConfig::chain_defaults(3).with_uniform_sigma(0.0);
    cfg.dt = 0.1;
    let s = State::at_zero(vec![0.0, 1.0, 0.0]);
    let seq = em_step_sequential(&net, &s, &cfg, &[0.0; 3])?.positions;
    let sync = em_step(&net, &s, &cfg, &[0.0; 3])?.positions;
    let expected = [0.1, 0.81, 0.081];
    let matches = seq.iter().zip(&expected).all(|(a, b)| (a - b).abs() <= 1e-15);
    Ok(CheckOutcome {
        name: "legacy_sequential_sweep",
        passed: matches && seq != sync,
        detail: format!("sequential {seq:?}, synchronous {sync:?}"),
    })
}

fn deterministic_error(net: &Network, cfg: &SimConfig, oracle: &SpectralOracle, u0: &[f64]) -> Result<f64> {
    let traj = simulate(net, cfg, &mut NoiseStream::new(0, 0))?;
    let exact = oracle.exact_mean(u0, cfg.t_end)?;
    Ok(traj
        .terminal()
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn check_deterministic_flow(opts: &ValidateOptions) -> Result<CheckOutcome> {
    let u0 = fixed_random_start(opts.seed, SITES);
    let (net, mut cfg) = chain_config(opts.seed, u0.clone());
    cfg = cfg.with_uniform_sigma(0.0);
    let oracle = SpectralOracle::for_network(&net, &cfg.sigma)?;
    let coarse = deterministic_error(&net, &cfg, &oracle, &u0)?;
    cfg.dt /= 2.0;
    let fine = deterministic_error(&net, &cfg, &oracle, &u0)?;
    let ratio = fine / coarse;
    Ok(CheckOutcome {
        name: "deterministic_flow",
        passed: coarse <= 2e-2 && (0.4..=0.6).contains(&ratio),
        detail: format!("max error {coarse:.3e} (limit 2e-2), halving ratio {ratio:.3} (band [0.4, 0.6])"),
    })
}

fn check_weak_mean(opts: &ValidateOptions, sizes: &Sizes) -> Result<CheckOutcome> {
    let (net, cfg) = chain_config(opts.seed, vec![0.0; SITES]);
    let oracle = SpectralOracle::for_network(&net, &cfg.sigma)?;
    let zero = weak_error(&net, &cfg, sizes.paths, &oracle, &opts.runner)?;
    let zero_ok = zero.error.iter().zip(&zero.standard_error).all(|(e, se)| *e <= 3.0 * se);

    let (net, cfg) = chain_config(opts.seed, fixed_random_start(opts.seed, SITES));
    let rand = weak_error(&net, &cfg, sizes.paths, &oracle, &opts.runner)?;
    let worst = |r: &crate::ensemble::WeakErrorReport| {
        r.error
            .iter()
            .zip(r.tolerance())
            .map(|(e, t)| e / t)
            .fold(0.0, f64::max)
    };
    Ok(CheckOutcome {
        name: "weak_mean",
        passed: zero_ok && rand.within_tolerance(),
        detail: format!(
            "u0=0: worst error/3SE {:.3}; random u0: worst error/(3SE+bias) {:.3}, M={}",
            zero.error
                .iter()
                .zip(&zero.standard_error)
                .map(|(e, se)| e / (3.0 * se))
                .fold(0.0, f64::max),
            worst(&rand),
            sizes.paths
        ),
    })
}

fn check_covariance(opts: &ValidateOptions, sizes: &Sizes) -> Result<CheckOutcome> {
    let (net, cfg) = chain_config(opts.seed, vec![0.0; SITES]);
    let oracle = SpectralOracle::for_network(&net, &cfg.sigma)?;
    let r = run_ensemble(&net, &cfg, sizes.paths, &opts.runner)?;
    let exact = oracle.exact_covariance(cfg.t_end)?;
    let worst_site = r
        .terminal_variance()
        .iter()
        .enumerate()
        .map(|(i, v)| rel_dev(*v, exact[(i, i)]))
        .fold(0.0, f64::max);
    let graph_exact = SIGMA * SIGMA * cfg.t_end / SITES as f64;
    let graph_dev = rel_dev(r.graph_mean_variance, graph_exact);
    Ok(CheckOutcome {
        name: "covariance",
        passed: worst_site <= sizes.variance_band && graph_dev <= sizes.graph_band,
        detail: format!(
            "worst per-site variance deviation {:.2}% (band {:.0}%), graph-mean variance {:.4e} vs {graph_exact:.1e} ({:.2}%, band {:.0}%)",
            100.0 * worst_site,
            100.0 * sizes.variance_band,
            r.graph_mean_variance,
            100.0 * graph_dev,
            100.0 * sizes.graph_band
        ),
    })
}

fn check_strong_order(opts: &ValidateOptions, sizes: &Sizes) -> Result<CheckOutcome> {
    let (net, mut cfg) = chain_config(opts.seed, fixed_random_start(opts.seed, SITES));
    cfg.dt = 0.04;
    let r = strong_order_estimate(&net, &cfg, sizes.strong_paths, 4, &opts.runner)?;
    Ok(CheckOutcome {
        name: "strong_order",
        passed: (0.8..=1.2).contains(&r.slope),
        detail: format!("slope {:.3} (band [0.8, 1.2]) from RMS {:?}", r.slope, r.rms_differences),
    })
}

/// Mean signed terminal ledger residual over `paths` paths at step `dt`.
fn mean_ledger_residual(opts: &ValidateOptions, dt: f64, paths: usize) -> Result<f64> {
    let (net, mut cfg) = chain_config(opts.seed, fixed_random_start(opts.seed, SITES));
    cfg.dt = dt;
    let e = quadratic_energy(SITES);
    let residuals = opts.runner.map_paths(paths, |k| {
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, k))?;
        let noise = replay_noise(&net, &cfg, k)?;
        Ok(ito_track(&traj, &net, &cfg, &e, &noise)?.terminal_residual())
    })?;
    Ok(residuals.iter().sum::<f64>() / paths as f64)
}

fn check_ito_ledger(opts: &ValidateOptions, sizes: &Sizes) -> Result<CheckOutcome> {
    let mut rng = NoiseStream::new(opts.seed, 1 << 41);
    let mut worst_identity = 0.0_f64;
    for _ in 0..1000 {
        let a = rng.gaussian_increments(SITES, 1.0);
        let b = rng.gaussian_increments(SITES, 1.0);
        let s = discrete_energy_identity(&a, &b)?;
        let scale = s.delta_e.abs().max(s.first_order.abs()).max(s.second_order.abs()).max(1e-300);
        worst_identity = worst_identity.max((s.delta_e - s.first_order - s.second_order).abs() / scale);
    }

    let dts = [4e-2, 2e-2, 1e-2, 5e-3];
    let residuals = dts
        .iter()
        .map(|&dt| mean_ledger_residual(opts, dt, 200))
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[1] / w[0]).collect();
    let halving = ratios.iter().all(|r| (0.35..=0.65).contains(r));

    let (net, cfg) = chain_config(opts.seed, fixed_random_start(opts.seed, SITES));
    let e = quadratic_energy(SITES);
    let terminal_noise = opts.runner.map_paths(sizes.martingale_paths, |k| {
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, k))?;
        let noise = replay_noise(&net, &cfg, k)?;
        Ok(*ito_track(&traj, &net, &cfg, &e, &noise)?.noise_cum.last().unwrap())
    })?;
    let (mean, se) = mean_and_se(&terminal_noise);
    let martingale = mean.abs() <= 3.0 * se;

    Ok(CheckOutcome {
        name: "ito_ledger",
        passed: worst_identity <= 1e-12 && halving && martingale,
        detail: format!(
            "identity residual {worst_identity:.2e} (limit 1e-12); residual ratios {ratios:.3?} (band [0.35, 0.65]); noise term mean {mean:.3e} ± {se:.3e} (M={})",
            sizes.martingale_paths
        ),
    })
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Upper bound on the Euler bias of `E[½‖u(T)‖²]`:
/// `dt (½‖u0‖²/T + ½ λ_max tr C(T) + ½ Σσ²)`.
pub fn energy_bias_slack(oracle: &SpectralOracle, u0: &[f64], cfg: &SimConfig) -> Result<f64> {
    let norm2 = u0.iter().map(|x| x * x).sum::<f64>();
    let trace = oracle.exact_covariance(cfg.t_end)?.trace();
    let noise = cfg.sigma.iter().map(|s| s * s).sum::<f64>();
    Ok(cfg.dt * 0.5 * (norm2 / cfg.t_end + oracle.lambda_max() * trace + noise))
}

fn check_energy_balance(opts: &ValidateOptions, sizes: &Sizes) -> Result<CheckOutcome> {
    let u0 = fixed_random_start(opts.seed, SITES);
    let (net, cfg) = chain_config(opts.seed, u0.clone());
    let oracle = SpectralOracle::for_network(&net, &cfg.sigma)?;
    let r = run_ensemble(&net, &cfg, sizes.paths, &opts.runner)?;
    let mean = oracle.exact_mean(&u0, cfg.t_end)?;
    let expected = 0.5 * oracle.exact_covariance(cfg.t_end)?.trace()
        + 0.5 * mean.iter().map(|x| x * x).sum::<f64>();
    let slack = energy_bias_slack(&oracle, &u0, &cfg)?;
    let diff = (r.terminal_energy_mean() - expected).abs();
    let tol = 3.0 * r.terminal_energy_se() + slack;
    Ok(CheckOutcome {
        name: "expected_energy_balance",
        passed: diff <= tol,
        detail: format!(
            "ensemble {:.6} vs exact {expected:.6}: |diff| {diff:.3e} <= 3SE {:.3e} + slack {slack:.3e}",
            r.terminal_energy_mean(),
            3.0 * r.terminal_energy_se()
        ),
    })
}

fn check_quadratic_variation(opts: &ValidateOptions) -> Result<CheckOutcome> {
    let (net, mut cfg) = chain_config(opts.seed, fixed_random_start(opts.seed, SITES));
    cfg.dt = 1e-3;
    let paths = 100;
    let mut run_cfg = cfg.clone();
    if opts.fault == Some(Fault::MissingSqrtDt) {
        let boost = 1.0 / cfg.dt.sqrt();
        run_cfg.sigma.iter_mut().for_each(|s| *s *= boost);
    }
    let per_path = opts.runner.map_paths(paths, |k| {
        let traj = simulate(&net, &run_cfg, &mut NoiseStream::new(cfg.seed, k))?;
        realized_qv_ratio(&traj, &net, &cfg)
    })?;
    let avg: Vec<f64> = (0..SITES)
        .map(|i| per_path.iter().map(|r| r[i]).sum::<f64>() / paths as f64)
        .collect();
    let (lo, hi) = avg
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(CheckOutcome {
        name: "quadratic_variation",
        passed: lo >= 0.9 && hi <= 1.1,
        detail: format!("per-site ratio range [{lo:.4}, {hi:.4}] (band [0.9, 1.1]) over {paths} paths at dt=1e-3"),
    })
}

fn check_determinism(opts: &ValidateOptions) -> Result<CheckOutcome> {
    let net = Network::path(SITES)?;
    let mut cfg = SimConfig::chain_defaults(SITES);
    cfg.seed = opts.seed;
    let a = trajectory_csv_string(&simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, 0))?);
    let b = trajectory_csv_string(&simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, 0))?);
    cfg.initial = InitialCondition::Given(fixed_random_start(opts.seed, SITES));
    let many = PathRunner::new(opts.runner.workers().max(4));
    let e1 = run_ensemble(&net, &cfg, 3000, &PathRunner::sequential())?;
    let en = run_ensemble(&net, &cfg, 3000, &many)?;
    Ok(CheckOutcome {
        name: "determinism",
        passed: a == b && e1 == en,
        detail: format!(
            "CSV identical: {}; ensemble identical for 1 vs {} workers: {}",
            a == b,
            many.workers(),
            e1 == en
        ),
    })
}
