//! Euler-Maruyama integration of `du = κ(u) dt + σ dW`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, SmcfError};
use crate::graph::{Network, State};
use crate::noise::NoiseStream;

/// How a step applies the drift across sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// Every curvature is evaluated at the step's start state.
    #[default]
    Synchronous,
    /// In-place sweep in ascending site order: site `i` sees the already
    /// updated values of sites `j < i`.
    #[serde(alias = "legacy_sequential")]
    LegacySequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `U[0, 1)` per site, drawn from the path's own stream before any noise.
    Uniform,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sigma: Vec<f64>,
    pub seed: u64,
    pub update_mode: UpdateMode,
    pub record_every: usize,
    pub initial: InitialCondition,
}

pub const DEFAULT_SITES: usize = 10;
pub const DEFAULT_T_END: f64 = 1.0;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_SIGMA: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 42;

impl SimConfig {
    /// Ten-site chain parameters: `T = 1`, `dt = 0.01`, `σ = 0.1`, random start.
    pub fn chain_defaults(sites: usize) -> Self {
        Self {
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            sigma: vec![DEFAULT_SIGMA; sites],
            seed: DEFAULT_SEED,
            update_mode: UpdateMode::Synchronous,
            record_every: 1,
            initial: InitialCondition::Uniform,
        }
    }

    pub fn with_initial(mut self, u0: Vec<f64>) -> Self {
        self.initial = InitialCondition::Given(u0);
        self
    }

    pub fn with_uniform_sigma(mut self, sigma: f64) -> Self {
        self.sigma.iter_mut().for_each(|s| *s = sigma);
        self
    }

    /// Validates against `net` and returns the step count `round(t_end / dt)`.
    pub fn step_count(&self, net: &Network) -> Result<usize> {
        let bad = |msg: String| Err(SmcfError::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.dt > self.t_end {
            return bad(format!("dt {} exceeds t_end {}", self.dt, self.t_end));
        }
        let ratio = self.t_end / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 {
            return bad(format!(
                "t_end / dt = {ratio} is not an integer step count"
            ));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        let n = net.site_count();
        if self.sigma.len() != n {
            return bad(format!(
                "sigma has {} entries for {n} sites",
                self.sigma.len()
            ));
        }
        if self.sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return bad("sigma entries must be finite and non-negative".into());
        }
        if let InitialCondition::Given(u0) = &self.initial {
            if u0.len() != n {
                return bad(format!("initial vector has {} entries for {n} sites", u0.len()));
            }
            if u0.iter().any(|x| !x.is_finite()) {
                return bad("initial vector must be finite".into());
            }
        }
        Ok(steps as usize)
    }

    /// Draws or copies the starting positions. Uniform starts consume
    /// `site_count` values from `stream`.
    pub fn initial_state(&self, net: &Network, stream: &mut NoiseStream) -> State {
        match &self.initial {
            InitialCondition::Uniform => State::at_zero(stream.uniform_vec(net.site_count())),
            InitialCondition::Given(u0) => State::at_zero(u0.clone()),
        }
    }
}

/// Returns a warning message when `dt` is at or beyond the explicit stability
/// limit `2 / λ_max`.
pub fn stability_warning(net: &Network, dt: f64) -> Option<String> {
    let lambda_max = net.spectral_radius_estimate();
    (lambda_max > 0.0 && dt >= 2.0 / lambda_max).then(|| {
        format!(
            "dt = {dt} is at or above the stability limit 2/λ_max = {:.6}; the zero-noise flow will diverge",
            2.0 / lambda_max
        )
    })
}

fn step_index(state: &State, dt: f64) -> usize {
    (state.time / dt).round() as usize + 1
}

fn check_step_inputs(net: &Network, state: &State, cfg: &SimConfig, noise: &[f64]) -> Result<()> {
    let n = net.site_count();
    check_len(n, state.positions.len())?;
    check_len(n, noise.len())?;
    check_len(n, cfg.sigma.len())
}

/// Synchronous Euler-Maruyama step. `noise` holds one `N(0, dt)` draw per site.
pub fn em_step(net: &Network, state: &State, cfg: &SimConfig, noise: &[f64]) -> Result<State> {
    check_step_inputs(net, state, cfg, noise)?;
    let mut next = state.positions.clone();
    apply_synchronous(net, &state.positions, &mut next, &cfg.sigma, cfg.dt, noise);
    finish(state, next, cfg.dt)
}

/// In-place ascending sweep, one site at a time.
pub fn em_step_sequential(
    net: &Network,
    state: &State,
    cfg: &SimConfig,
    noise: &[f64],
) -> Result<State> {
    check_step_inputs(net, state, cfg, noise)?;
    let mut u = state.positions.clone();
    apply_sequential(net, &mut u, &cfg.sigma, cfg.dt, noise);
    finish(state, u, cfg.dt)
}

fn finish(state: &State, positions: Vec<f64>, dt: f64) -> Result<State> {
    let next = State::new(positions, state.time + dt);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(SmcfError::NumericOverflow {
            step: step_index(state, dt),
        })
    }
}

#[inline]
fn apply_synchronous(net: &Network, before: &[f64], after: &mut [f64], sigma: &[f64], dt: f64, noise: &[f64]) {
    for i in 0..before.len() {
        after[i] = before[i] + net.curvature_at(before, i) * dt + sigma[i] * noise[i];
    }
}

#[inline]
fn apply_sequential(net: &Network, u: &mut [f64], sigma: &[f64], dt: f64, noise: &[f64]) {
    for i in 0..u.len() {
        let du = net.curvature_at(u, i) * dt + sigma[i] * noise[i];
        u[i] += du;
    }
}

/// One completed step as seen by an [`integrate`] visitor.
#[derive(Debug)]
pub struct StepView<'a> {
    /// 1-based index of the step just taken.
    pub step: usize,
    pub time: f64,
    pub before: &'a [f64],
    pub after: &'a [f64],
    /// The `N(0, dt)` draws used for this step, before scaling by σ.
    pub noise: &'a [f64],
}

/// Runs one path from `start` for `steps` steps, handing every step to
/// `visit`. Noise is drawn per step, one value per site in ascending order.
/// Returns the terminal positions.
pub fn integrate<F>(
    net: &Network,
    cfg: &SimConfig,
    start: &[f64],
    steps: usize,
    stream: &mut NoiseStream,
    mut visit: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&StepView<'_>),
{
    let n = net.site_count();
    check_len(n, start.len())?;
    check_len(n, cfg.sigma.len())?;
    let mut before = start.to_vec();
    let mut after = start.to_vec();
    let mut noise = vec![0.0; n];
    for step in 1..=steps {
        stream.fill_increments(&mut noise, cfg.dt);
        match cfg.update_mode {
            UpdateMode::Synchronous => {
                apply_synchronous(net, &before, &mut after, &cfg.sigma, cfg.dt, &noise)
            }
            UpdateMode::LegacySequential => {
                after.copy_from_slice(&before);
                apply_sequential(net, &mut after, &cfg.sigma, cfg.dt, &noise);
            }
        }
        if after.iter().any(|x| !x.is_finite()) {
            return Err(SmcfError::NumericOverflow { step });
        }
        visit(&StepView {
            step,
            time: step as f64 * cfg.dt,
            before: &before,
            after: &after,
            noise: &noise,
        });
        std::mem::swap(&mut before, &mut after);
    }
    Ok(before)
}

/// Recorded path: row `k` of `samples` is the state at `times[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub config: SimConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn site_count(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn terminal(&self) -> &[f64] {
        self.samples.last().map_or(&[], Vec::as_slice)
    }
}

/// Integrates one path and records it. The start state is always recorded at
/// `t = 0`, then every `record_every`-th step and the final step.
pub fn simulate(net: &Network, cfg: &SimConfig, stream: &mut NoiseStream) -> Result<Trajectory> {
    let steps = cfg.step_count(net)?;
    if let Some(msg) = stability_warning(net, cfg.dt) {
        log::warn!("{msg}");
    }
    let start = cfg.initial_state(net, stream);
    let mut times = vec![0.0];
    let mut samples = vec![start.positions.clone()];
    integrate(net, cfg, &start.positions, steps, stream, |view| {
        if view.step % cfg.record_every == 0 || view.step == steps {
            times.push(view.time);
            samples.push(view.after.to_vec());
        }
    })?;
    Ok(Trajectory {
        times,
        samples,
        config: cfg.clone(),
    })
}

/// Regenerates the per-step noise a path with this stream identity consumed,
/// skipping the uniform draws of a random start.
pub fn replay_noise(net: &Network, cfg: &SimConfig, path_index: u64) -> Result<Vec<Vec<f64>>> {
    let steps = cfg.step_count(net)?;
    let mut stream = NoiseStream::new(cfg.seed, path_index);
    cfg.initial_state(net, &mut stream);
    Ok((0..steps)
        .map(|_| stream.gaussian_increments(net.site_count(), cfg.dt))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg3(dt: f64) -> SimConfig {
        SimConfig {
            dt,
            t_end: 1.0,
            sigma: vec![0.0; 3],
            seed: 1,
            update_mode: UpdateMode::Synchronous,
            record_every: 1,
            initial: InitialCondition::Given(vec![0.0, 1.0, 0.0]),
        }
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn synchronous_hand_step() {
        let net = Network::path(3).unwrap();
        let s = State::at_zero(vec![0.0, 1.0, 0.0]);
        let next = em_step(&net, &s, &cfg3(0.1), &[0.0; 3]).unwrap();
        assert!(close(&next.positions, &[0.1, 0.8, 0.1], 1e-15));
        assert!((next.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sequential_hand_sweep() {
        let net = Network::path(3).unwrap();
        let s = State::at_zero(vec![0.0, 1.0, 0.0]);
        let next = em_step_sequential(&net, &s, &cfg3(0.1), &[0.0; 3]).unwrap();
        assert!(close(&next.positions, &[0.1, 0.81, 0.081], 1e-15));
        let sync = em_step(&net, &s, &cfg3(0.1), &[0.0; 3]).unwrap();
        assert_ne!(next.positions, sync.positions);
    }

    #[test]
    fn constant_state_is_fixed_in_both_modes() {
        let net = Network::from_pairs(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let mut cfg = cfg3(0.37);
        cfg.sigma = vec![0.0; 4];
        let s = State::at_zero(vec![2.5; 4]);
        assert_eq!(em_step(&net, &s, &cfg, &[0.3; 4]).unwrap().positions, vec![2.5; 4]);
        assert_eq!(
            em_step_sequential(&net, &s, &cfg, &[0.3; 4]).unwrap().positions,
            vec![2.5; 4]
        );
    }

    #[test]
    fn noise_enters_scaled_by_sigma() {
        let net = Network::path(3).unwrap();
        let mut cfg = cfg3(0.1);
        cfg.sigma = vec![0.5, 1.0, 2.0];
        let s = State::at_zero(vec![1.0; 3]);
        let next = em_step(&net, &s, &cfg, &[0.2, -0.1, 0.05]).unwrap();
        assert!(close(&next.positions, &[1.1, 0.9, 1.1], 1e-15));
    }

    #[test]
    fn step_errors() {
        let net = Network::path(3).unwrap();
        let cfg = cfg3(0.1);
        let s = State::at_zero(vec![0.0, 1.0]);
        assert!(matches!(
            em_step(&net, &s, &cfg, &[0.0; 3]),
            Err(SmcfError::DimensionMismatch { .. })
        ));
        let s = State::new(vec![f64::MAX, -f64::MAX, f64::MAX], 0.5);
        let mut cfg = cfg3(0.1);
        cfg.dt = 10.0;
        assert_eq!(
            em_step(&net, &s, &cfg, &[0.0; 3]),
            Err(SmcfError::NumericOverflow { step: 1 })
        );
    }

    #[test]
    fn unstable_run_reports_step() {
        let net = Network::path(10).unwrap();
        let mut cfg = SimConfig::chain_defaults(10).with_initial((0..10).map(|i| i as f64).collect());
        cfg.dt = 1.0;
        cfg.t_end = 2000.0;
        assert!(stability_warning(&net, cfg.dt).is_some());
        assert!(stability_warning(&net, 0.01).is_none());
        let err = simulate(&net, &cfg, &mut NoiseStream::new(0, 0)).unwrap_err();
        assert!(matches!(err, SmcfError::NumericOverflow { step } if step > 1));
    }

    #[test]
    fn config_validation() {
        let net = Network::path(10).unwrap();
        let cfg = SimConfig::chain_defaults(10);
        assert_eq!(cfg.step_count(&net), Ok(100));
        let mut bad = cfg.clone();
        bad.dt = 0.3;
        assert!(matches!(bad.step_count(&net), Err(SmcfError::InvalidConfig(_))));
        let mut bad = cfg.clone();
        bad.dt = 2.0;
        assert!(bad.step_count(&net).is_err());
        let mut bad = cfg.clone();
        bad.sigma = vec![0.1; 9];
        assert!(bad.step_count(&net).is_err());
        let mut bad = cfg.clone();
        bad.sigma[3] = -0.1;
        assert!(bad.step_count(&net).is_err());
        let mut bad = cfg.clone();
        bad.record_every = 0;
        assert!(bad.step_count(&net).is_err());
        let bad = cfg.clone().with_initial(vec![0.0; 3]);
        assert!(bad.step_count(&net).is_err());
    }

    #[test]
    fn default_run_has_101_records() {
        let net = Network::path(10).unwrap();
        let cfg = SimConfig::chain_defaults(10);
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, 0)).unwrap();
        assert_eq!(traj.len(), 101);
        assert_eq!(traj.site_count(), 10);
        assert!(traj.samples[0].iter().all(|x| (0.0..1.0).contains(x)));
        for w in traj.times.windows(2) {
            assert!(((w[1] - w[0]) - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn recording_cadence_keeps_final_state() {
        let net = Network::path(4).unwrap();
        let mut cfg = SimConfig::chain_defaults(4);
        cfg.record_every = 30;
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(5, 0)).unwrap();
        assert_eq!(traj.times.len(), 5);
        let expected = [0.0, 0.3, 0.6, 0.9, 1.0];
        assert!(close(&traj.times, &expected, 1e-12));

        cfg.record_every = 1;
        let full = simulate(&net, &cfg, &mut NoiseStream::new(5, 0)).unwrap();
        assert_eq!(full.samples[30], traj.samples[1]);
        assert_eq!(full.terminal(), traj.terminal());
    }

    #[test]
    fn eigenvector_start_follows_linear_recursion() {
        let net = Network::path(6).unwrap();
        let n = 6.0;
        for k in 1..6 {
            let lambda = 2.0 * (1.0 - (k as f64 * std::f64::consts::PI / n).cos());
            let v: Vec<f64> = (0..6)
                .map(|i| (k as f64 * std::f64::consts::PI * (i as f64 + 0.5) / n).cos())
                .collect();
            let mut cfg = SimConfig::chain_defaults(6).with_uniform_sigma(0.0).with_initial(v.clone());
            cfg.dt = 0.05;
            let traj = simulate(&net, &cfg, &mut NoiseStream::new(0, 0)).unwrap();
            for (m, row) in traj.samples.iter().enumerate() {
                let f = (1.0 - lambda * cfg.dt).powi(m as i32);
                for (x, vi) in row.iter().zip(&v) {
                    assert!((x - vi * f).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let net = Network::path(10).unwrap();
        let cfg = SimConfig::chain_defaults(10);
        let a = simulate(&net, &cfg, &mut NoiseStream::new(9, 3)).unwrap();
        let b = simulate(&net, &cfg, &mut NoiseStream::new(9, 3)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&net, &cfg, &mut NoiseStream::new(9, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn replayed_noise_reproduces_path() {
        let net = Network::path(5).unwrap();
        let mut cfg = SimConfig::chain_defaults(5);
        cfg.update_mode = UpdateMode::LegacySequential;
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, 2)).unwrap();
        let noise = replay_noise(&net, &cfg, 2).unwrap();
        let mut s = State::at_zero(traj.samples[0].clone());
        for (k, dw) in noise.iter().enumerate() {
            s = em_step_sequential(&net, &s, &cfg, dw).unwrap();
            assert_eq!(s.positions, traj.samples[k + 1]);
        }
    }
}
