//! Monte Carlo ensembles over independent noise streams.
//!
//! Path `k` always draws from `NoiseStream::new(seed, k)`. Paths are mapped in
//! parallel chunk by chunk, and every reduction folds results in ascending
//! path index, so an [`EnsembleResult`] is bit-identical for any worker count.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcfError};
use crate::functionals::{quadratic_energy, Functional};
use crate::graph::Network;
use crate::noise::NoiseStream;
use crate::oracle::SpectralOracle;
use crate::sde::{integrate, InitialCondition, SimConfig, UpdateMode};

const CHUNK: usize = 1024;

/// Runs per-path closures on a fixed number of workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathRunner {
    workers: usize,
}

impl Default for PathRunner {
    fn default() -> Self {
        Self::new(0)
    }
}

impl PathRunner {
    /// `workers == 0` picks the machine's available parallelism.
    pub fn new(workers: usize) -> Self {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        Self { workers }
    }

    pub fn sequential() -> Self {
        Self { workers: 1 }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Evaluates `map(k)` for `k in 0..count` and returns the results in path
    /// order.
    pub fn map_paths<T, F>(&self, count: usize, map: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        let mut out = Vec::with_capacity(count);
        self.fold_paths(count, map, |_, item| {
            out.push(item);
            Ok(())
        })?;
        Ok(out)
    }

    /// Maps paths in parallel chunks and feeds each result to `fold` in
    /// ascending path order. Only one chunk of results is alive at a time.
    pub fn fold_paths<T, F, G>(&self, count: usize, map: F, mut fold: G) -> Result<()>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
        G: FnMut(u64, T) -> Result<()>,
    {
        let mut start = 0;
        while start < count {
            let end = (start + CHUNK).min(count);
            let chunk = self.map_range(start as u64..end as u64, &map)?;
            for (k, item) in (start as u64..).zip(chunk) {
                fold(k, item)?;
            }
            start = end;
        }
        Ok(())
    }

    #[cfg(feature = "parallel")]
    fn map_range<T, F>(&self, range: std::ops::Range<u64>, map: &F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        use rayon::prelude::*;
        if self.workers <= 1 {
            return range.map(map).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| SmcfError::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| range.into_par_iter().map(map).collect())
    }

    #[cfg(not(feature = "parallel"))]
    fn map_range<T, F>(&self, range: std::ops::Range<u64>, map: &F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        range.map(map).collect()
    }
}

/// Ensemble estimates at the terminal time plus reduced series on the record
/// grid. Standard errors are sample standard deviations over `√path_count`;
/// variance standard errors use the Gaussian formula `s² √(2 / (M - 1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub path_count: usize,
    pub t_end: f64,
    pub terminal_mean: Vec<f64>,
    pub terminal_mean_se: Vec<f64>,
    pub terminal_covariance: Vec<Vec<f64>>,
    /// Sample variance of the site average `ū(t_end)`.
    pub graph_mean_variance: f64,
    pub graph_mean_variance_se: f64,
    pub times: Vec<f64>,
    /// Ensemble mean of `Σ ½ u_e²` at each record time.
    pub energy_mean_series: Vec<f64>,
    pub energy_se_series: Vec<f64>,
    /// Sample variance of `ū` at each record time.
    pub graph_mean_variance_series: Vec<f64>,
}

impl EnsembleResult {
    pub fn terminal_variance(&self) -> Vec<f64> {
        (0..self.terminal_covariance.len())
            .map(|i| self.terminal_covariance[i][i])
            .collect()
    }

    /// Gaussian standard error of each per-site variance estimate.
    pub fn terminal_variance_se(&self) -> Vec<f64> {
        let factor = (2.0 / (self.path_count as f64 - 1.0)).sqrt();
        self.terminal_variance().into_iter().map(|v| v * factor).collect()
    }

    pub fn terminal_energy_mean(&self) -> f64 {
        *self.energy_mean_series.last().unwrap_or(&0.0)
    }

    pub fn terminal_energy_se(&self) -> f64 {
        *self.energy_se_series.last().unwrap_or(&0.0)
    }
}

/// Streaming mean and co-moment accumulator (Welford).
#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    mean: Vec<f64>,
    comoment: Vec<Vec<f64>>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![vec![0.0; dim]; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / n;
        }
        for i in 0..x.len() {
            let after_i = x[i] - self.mean[i];
            for j in 0..x.len() {
                self.comoment[i][j] += delta[j] * after_i;
            }
        }
    }

    fn covariance(&self) -> Vec<Vec<f64>> {
        let denom = (self.count.max(2) - 1) as f64;
        let dim = self.mean.len();
        let mut cov = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                // Average the two triangles so the estimate is exactly symmetric.
                cov[i][j] = 0.5 * (self.comoment[i][j] + self.comoment[j][i]) / denom;
            }
        }
        cov
    }
}

/// Scalar Welford accumulators, one per record time.
#[derive(Debug, Clone)]
struct SeriesMoments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl SeriesMoments {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, xs: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, q), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *q += d * (x - *m);
        }
    }

    fn variance(&self) -> Vec<f64> {
        let denom = (self.count.max(2) - 1) as f64;
        self.m2.iter().map(|q| q / denom).collect()
    }
}

struct PathSummary {
    terminal: Vec<f64>,
    energy: Vec<f64>,
    graph_mean: Vec<f64>,
}

fn fixed_start(cfg: &SimConfig) -> Result<&[f64]> {
    match &cfg.initial {
        InitialCondition::Given(u0) => Ok(u0),
        InitialCondition::Uniform => Err(SmcfError::InvalidArgument(
            "ensembles need a fixed initial vector; a random start per path would mix \
             initial-condition spread into the noise-driven variance"
                .into(),
        )),
    }
}

/// Runs `path_count` paths from the fixed initial vector in `cfg`.
pub fn run_ensemble(
    net: &Network,
    cfg: &SimConfig,
    path_count: usize,
    runner: &PathRunner,
) -> Result<EnsembleResult> {
    if path_count < 2 {
        return Err(SmcfError::InvalidArgument(format!(
            "an ensemble needs at least 2 paths, got {path_count}"
        )));
    }
    let steps = cfg.step_count(net)?;
    let u0 = fixed_start(cfg)?;
    let n = net.site_count();
    let energy = quadratic_energy(n);
    let site_mean = |u: &[f64]| u.iter().sum::<f64>() / n as f64;

    let mut times = vec![0.0];
    times.extend(
        (1..=steps)
            .filter(|s| s % cfg.record_every == 0 || *s == steps)
            .map(|s| s as f64 * cfg.dt),
    );

    let mut terminal = Moments::new(n);
    let mut energy_acc = SeriesMoments::new(times.len());
    let mut graph_acc = SeriesMoments::new(times.len());

    runner.fold_paths(
        path_count,
        |k| {
            let mut stream = NoiseStream::new(cfg.seed, k);
            let mut e = vec![energy.value(u0)];
            let mut g = vec![site_mean(u0)];
            let terminal = integrate(net, cfg, u0, steps, &mut stream, |view| {
                if view.step % cfg.record_every == 0 || view.step == steps {
                    e.push(energy.value(view.after));
                    g.push(site_mean(view.after));
                }
            })?;
            Ok(PathSummary {
                terminal,
                energy: e,
                graph_mean: g,
            })
        },
        |_, summary| {
            terminal.push(&summary.terminal);
            energy_acc.push(&summary.energy);
            graph_acc.push(&summary.graph_mean);
            Ok(())
        },
    )?;

    let m = path_count as f64;
    let cov = terminal.covariance();
    let graph_var = graph_acc.variance();
    let graph_mean_variance = *graph_var.last().unwrap_or(&0.0);
    Ok(EnsembleResult {
        path_count,
        t_end: steps as f64 * cfg.dt,
        terminal_mean_se: (0..n).map(|i| (cov[i][i] / m).sqrt()).collect(),
        terminal_mean: terminal.mean.clone(),
        terminal_covariance: cov,
        graph_mean_variance,
        graph_mean_variance_se: graph_mean_variance * (2.0 / (m - 1.0)).sqrt(),
        times,
        energy_se_series: energy_acc.variance().into_iter().map(|v| (v / m).sqrt()).collect(),
        energy_mean_series: energy_acc.mean,
        graph_mean_variance_series: graph_var,
    })
}

/// Ensemble mean versus the exact mean at `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakErrorReport {
    pub error: Vec<f64>,
    pub standard_error: Vec<f64>,
    /// `λ_max² t_end dt ‖u0‖ / 2`, a bound on the Euler bias of the mean.
    pub bias_bound: f64,
    pub exact_mean: Vec<f64>,
    pub ensemble_mean: Vec<f64>,
}

impl WeakErrorReport {
    /// `3·SE + bias_bound` per site.
    pub fn tolerance(&self) -> Vec<f64> {
        self.standard_error.iter().map(|se| 3.0 * se + self.bias_bound).collect()
    }

    pub fn within_tolerance(&self) -> bool {
        self.error.iter().zip(self.tolerance()).all(|(e, t)| *e <= t)
    }

    pub fn max_error(&self) -> f64 {
        self.error.iter().copied().fold(0.0, f64::max)
    }
}

pub fn weak_error(
    net: &Network,
    cfg: &SimConfig,
    path_count: usize,
    oracle: &SpectralOracle,
    runner: &PathRunner,
) -> Result<WeakErrorReport> {
    let u0 = fixed_start(cfg)?.to_vec();
    let result = run_ensemble(net, cfg, path_count, runner)?;
    let exact = oracle.exact_mean(&u0, result.t_end)?;
    let norm_u0 = u0.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(WeakErrorReport {
        error: result
            .terminal_mean
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .collect(),
        standard_error: result.terminal_mean_se.clone(),
        bias_bound: oracle.lambda_max().powi(2) * result.t_end * cfg.dt * norm_u0 / 2.0,
        exact_mean: exact,
        ensemble_mean: result.terminal_mean,
    })
}

/// Coupled-refinement strong error measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongOrderReport {
    /// Coarse step of each consecutive level pair.
    pub dts: Vec<f64>,
    /// RMS of the terminal difference between a level and the next finer one.
    pub rms_differences: Vec<f64>,
    /// Least-squares slope of `log2(rms)` against `log2(dt)`.
    pub slope: f64,
}

/// Runs each path at `levels` step sizes `dt, dt/2, ...` driven by one
/// Brownian path: the finest increments are drawn once and summed pairwise to
/// form every coarser level.
pub fn strong_order_estimate(
    net: &Network,
    cfg: &SimConfig,
    path_count: usize,
    levels: usize,
    runner: &PathRunner,
) -> Result<StrongOrderReport> {
    if levels < 3 {
        return Err(SmcfError::InvalidArgument(format!(
            "strong order needs at least 3 refinement levels, got {levels}"
        )));
    }
    if path_count < 2 {
        return Err(SmcfError::InvalidArgument(format!(
            "strong order needs at least 2 paths, got {path_count}"
        )));
    }
    let coarse_steps = cfg.step_count(net)?;
    let n = net.site_count();
    let refine = 1usize << (levels - 1);
    let fine_steps = coarse_steps * refine;
    let fine_dt = cfg.dt / refine as f64;

    let mut sq_sums = vec![0.0; levels - 1];
    runner.fold_paths(
        path_count,
        |k| {
            let mut stream = NoiseStream::new(cfg.seed, k);
            let u0 = cfg.initial_state(net, &mut stream).positions;
            let mut fine = vec![0.0; fine_steps * n];
            stream.fill_increments(&mut fine, fine_dt);
            let terminals: Vec<Vec<f64>> = (0..levels)
                .map(|level| {
                    let block = 1usize << (levels - 1 - level);
                    let dt = cfg.dt / (1usize << level) as f64;
                    run_with_noise(net, cfg, &u0, dt, &fine, block)
                })
                .collect();
            Ok(terminals
                .windows(2)
                .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .collect::<Vec<f64>>())
        },
        |_, diffs| {
            for (acc, d) in sq_sums.iter_mut().zip(diffs) {
                *acc += d;
            }
            Ok(())
        },
    )?;

    let dts: Vec<f64> = (0..levels - 1).map(|l| cfg.dt / (1usize << l) as f64).collect();
    let rms: Vec<f64> = sq_sums.iter().map(|s| (s / path_count as f64).sqrt()).collect();
    let xs: Vec<f64> = dts.iter().map(|d| d.log2()).collect();
    let ys: Vec<f64> = rms.iter().map(|r| r.log2()).collect();
    Ok(StrongOrderReport {
        slope: least_squares_slope(&xs, &ys),
        dts,
        rms_differences: rms,
    })
}

/// Integrates with step `dt`, where each step's increment is the sum of
/// `block` consecutive fine increments.
fn run_with_noise(net: &Network, cfg: &SimConfig, u0: &[f64], dt: f64, fine: &[f64], block: usize) -> Vec<f64> {
    let n = net.site_count();
    let steps = fine.len() / n / block;
    let mut u = u0.to_vec();
    let mut next = u0.to_vec();
    let mut dw = vec![0.0; n];
    for s in 0..steps {
        dw.iter_mut().for_each(|x| *x = 0.0);
        for b in 0..block {
            let row = &fine[(s * block + b) * n..(s * block + b + 1) * n];
            for (acc, x) in dw.iter_mut().zip(row) {
                *acc += x;
            }
        }
        match cfg.update_mode {
            UpdateMode::Synchronous => {
                for i in 0..n {
                    next[i] = u[i] + net.curvature_at(&u, i) * dt + cfg.sigma[i] * dw[i];
                }
                std::mem::swap(&mut u, &mut next);
            }
            UpdateMode::LegacySequential => {
                for i in 0..n {
                    let du = net.curvature_at(&u, i) * dt + cfg.sigma[i] * dw[i];
                    u[i] += du;
                }
            }
        }
    }
    u
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
