//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes the same JSON configuration the CLI reads (any subset of
//! fields; missing ones take the ten-site defaults) and returns plain arrays or
//! a JSON string for the page to draw.

use serde::Serialize;
use smcf::config::RunConfig;
use smcf::functionals::ito_track;
use smcf::sde::replay_noise;
use smcf::{
    quadratic_energy, run_ensemble, simulate, NoiseStream, PathRunner, Result, SpectralOracle,
};
use wasm_bindgen::prelude::*;

/// Trajectories of several paths, flattened path-major then record-major.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Paths {
    sites: usize,
    records: usize,
    path_count: usize,
    times: Vec<f64>,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl Paths {
    #[wasm_bindgen(getter)]
    pub fn sites(&self) -> usize {
        self.sites
    }

    #[wasm_bindgen(getter)]
    pub fn records(&self) -> usize {
        self.records
    }

    #[wasm_bindgen(getter)]
    pub fn path_count(&self) -> usize {
        self.path_count
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    /// `values[(p * records + r) * sites + i]` is site `i` of path `p` at record `r`.
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

pub fn parse_config(json: &str) -> Result<RunConfig> {
    if json.trim().is_empty() {
        Ok(RunConfig::default())
    } else {
        RunConfig::from_json(json)
    }
}

/// Paths `0..path_count` of the configured seed.
pub fn simulate_paths(config: &RunConfig, path_count: usize) -> Result<Paths> {
    let (net, cfg) = config.resolve()?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut records = 0;
    for k in 0..path_count as u64 {
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, k))?;
        records = traj.len();
        if k == 0 {
            times = traj.times.clone();
        }
        values.extend(traj.samples.into_iter().flatten());
    }
    Ok(Paths {
        sites: net.site_count(),
        records,
        path_count,
        times,
        values,
    })
}

/// Ensemble statistics on the record grid next to their exact values.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleView {
    pub path_count: usize,
    pub times: Vec<f64>,
    pub graph_mean_variance: Vec<f64>,
    pub graph_mean_variance_exact: Vec<f64>,
    pub energy_mean: Vec<f64>,
    pub energy_se: Vec<f64>,
    pub energy_exact: Vec<f64>,
    pub terminal_variance: Vec<f64>,
    pub terminal_variance_se: Vec<f64>,
    pub terminal_variance_exact: Vec<f64>,
}

/// A uniform start is pinned to the draw of path 0, so every path shares it.
pub fn ensemble_view(config: &RunConfig, path_count: usize) -> Result<EnsembleView> {
    let mut config = config.clone();
    config.pin_initial();
    let (net, cfg) = config.resolve()?;
    let n = net.site_count();
    let est = run_ensemble(&net, &cfg, path_count, &PathRunner::sequential())?;
    let oracle = SpectralOracle::for_network(&net, &cfg.sigma)?;
    let u0 = match &cfg.initial {
        smcf::InitialCondition::Given(v) => v.clone(),
        smcf::InitialCondition::Uniform => unreachable!("initial pinned above"),
    };
    let avg = vec![1.0 / n as f64; n];

    let mut gm_exact = Vec::with_capacity(est.times.len());
    let mut energy_exact = Vec::with_capacity(est.times.len());
    for &t in &est.times {
        let mean = oracle.exact_mean(&u0, t)?;
        let cov = oracle.exact_covariance(t)?;
        gm_exact.push(oracle.variance_along(&cov, &avg));
        energy_exact.push(0.5 * (mean.iter().map(|m| m * m).sum::<f64>() + cov.trace()));
    }
    let cov_end = oracle.exact_covariance(cfg.t_end)?;
    Ok(EnsembleView {
        path_count,
        terminal_variance: est.terminal_variance(),
        terminal_variance_se: est.terminal_variance_se(),
        terminal_variance_exact: (0..n).map(|i| cov_end[(i, i)]).collect(),
        times: est.times,
        graph_mean_variance: est.graph_mean_variance_series,
        graph_mean_variance_exact: gm_exact,
        energy_mean: est.energy_mean_series,
        energy_se: est.energy_se_series,
        energy_exact,
    })
}

/// Itô ledger of `Σ ½ u²` along one path, recorded every step.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerView {
    pub times: Vec<f64>,
    pub f_values: Vec<f64>,
    pub drift_cum: Vec<f64>,
    pub noise_cum: Vec<f64>,
    pub qv_cum: Vec<f64>,
    pub residual: Vec<f64>,
}

pub fn ledger_view(config: &RunConfig, path_index: u64) -> Result<LedgerView> {
    let mut config = config.clone();
    config.record_every = 1;
    let (net, cfg) = config.resolve()?;
    let traj = simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, path_index))?;
    let replay = replay_noise(&net, &cfg, path_index)?;
    let ledger = ito_track(&traj, &net, &cfg, &quadratic_energy(net.site_count()), &replay)?;
    Ok(LedgerView {
        residual: ledger.residuals(),
        times: ledger.times,
        f_values: ledger.f_values,
        drift_cum: ledger.drift_cum,
        noise_cum: ledger.noise_cum,
        qv_cum: ledger.qv_cum,
    })
}

fn js_err(e: smcf::SmcfError) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("view serializes")
}

#[wasm_bindgen(js_name = simulatePaths)]
pub fn simulate_paths_js(config_json: &str, path_count: usize) -> std::result::Result<Paths, JsError> {
    simulate_paths(&parse_config(config_json).map_err(js_err)?, path_count).map_err(js_err)
}

/// JSON-encoded [`EnsembleView`].
#[wasm_bindgen(js_name = ensembleVsOracle)]
pub fn ensemble_vs_oracle_js(config_json: &str, path_count: usize) -> std::result::Result<String, JsError> {
    let view = ensemble_view(&parse_config(config_json).map_err(js_err)?, path_count).map_err(js_err)?;
    Ok(to_json(&view))
}

/// JSON-encoded [`LedgerView`].
#[wasm_bindgen(js_name = energyLedger)]
pub fn energy_ledger_js(config_json: &str, path_index: u32) -> std::result::Result<String, JsError> {
    let view = ledger_view(&parse_config(config_json).map_err(js_err)?, path_index as u64).map_err(js_err)?;
    Ok(to_json(&view))
}
