//! Scalar functionals of the state and their Itô increment ledger.
//!
//! Along a path the increment of `F(u)` splits into a drift part
//! `Σ ∂F/∂u_e κ_e dt`, a martingale part `Σ ∂F/∂u_e σ_e ΔW_e` and the
//! second-order correction `½ Σ ∂²F/∂u_e² σ_e² dt`. Only the diagonal of the
//! Hessian enters because distinct sites are driven by independent noise.

use crate::error::{check_len, Result, SmcfError};
use crate::graph::{Network, State};
use crate::sde::{SimConfig, Trajectory};

/// A twice-differentiable functional `F: R^n -> R` with a diagonal Hessian
/// view.
pub trait Functional: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, u: &[f64]) -> f64;
    fn gradient(&self, u: &[f64]) -> Vec<f64>;
    fn hessian_diag(&self, u: &[f64]) -> Vec<f64>;
}

/// `E(u) = Σ ½ u_e²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticEnergy {
    dim: usize,
}

pub fn quadratic_energy(n: usize) -> QuadraticEnergy {
    QuadraticEnergy { dim: n }
}

impl Functional for QuadraticEnergy {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, u: &[f64]) -> f64 {
        0.5 * u.iter().map(|x| x * x).sum::<f64>()
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }

    fn hessian_diag(&self, u: &[f64]) -> Vec<f64> {
        vec![1.0; u.len()]
    }
}

/// `F(u) = Σ u_e`, the total position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TotalPosition {
    dim: usize,
}

pub fn total_position(n: usize) -> TotalPosition {
    TotalPosition { dim: n }
}

impl Functional for TotalPosition {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, u: &[f64]) -> f64 {
        u.iter().sum()
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        vec![1.0; u.len()]
    }

    fn hessian_diag(&self, u: &[f64]) -> Vec<f64> {
        vec![0.0; u.len()]
    }
}

/// Largest relative deviation between `f.gradient(u)` and a central
/// difference with step `h`, relative to `max(1, |∂F/∂u_e|)`.
pub fn gradient_check<F: Functional + ?Sized>(f: &F, u: &[f64], h: f64) -> f64 {
    let grad = f.gradient(u);
    let mut probe = u.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..u.len() {
        probe[i] = u[i] + h;
        let up = f.value(&probe);
        probe[i] = u[i] - h;
        let down = f.value(&probe);
        probe[i] = u[i];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
    }
    worst
}

/// Cumulative Itô decomposition of `F` along one recorded path.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoLedger {
    pub times: Vec<f64>,
    pub f_values: Vec<f64>,
    pub drift_cum: Vec<f64>,
    pub noise_cum: Vec<f64>,
    pub qv_cum: Vec<f64>,
}

impl ItoLedger {
    /// `F(u_k) - F(u_0) - (drift + noise + qv)` at every record.
    pub fn residuals(&self) -> Vec<f64> {
        let f0 = self.f_values[0];
        (0..self.times.len())
            .map(|k| self.f_values[k] - f0 - (self.drift_cum[k] + self.noise_cum[k] + self.qv_cum[k]))
            .collect()
    }

    /// Residual increment of each individual step.
    pub fn step_residuals(&self) -> Vec<f64> {
        self.residuals().windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn terminal_residual(&self) -> f64 {
        *self.residuals().last().unwrap_or(&0.0)
    }
}

/// Builds the ledger for `traj` (recorded every step) using the exact noise
/// increments that produced it. Derivatives are evaluated at each step's start
/// state; `f_values` are direct evaluations of `F` on the recorded states.
pub fn ito_track<F: Functional + ?Sized>(
    traj: &Trajectory,
    net: &Network,
    cfg: &SimConfig,
    f: &F,
    noise_replay: &[Vec<f64>],
) -> Result<ItoLedger> {
    if cfg.record_every != 1 {
        return Err(SmcfError::InvalidArgument(format!(
            "Itô tracking needs every step recorded, record_every = {}",
            cfg.record_every
        )));
    }
    let steps = traj.len().saturating_sub(1);
    if noise_replay.len() != steps {
        return Err(SmcfError::InvalidArgument(format!(
            "noise replay has {} steps, trajectory has {steps}",
            noise_replay.len()
        )));
    }
    let n = net.site_count();
    check_len(n, f.dim())?;
    check_len(n, cfg.sigma.len())?;

    let mut ledger = ItoLedger {
        times: traj.times.clone(),
        f_values: traj.samples.iter().map(|u| f.value(u)).collect(),
        drift_cum: Vec::with_capacity(traj.len()),
        noise_cum: Vec::with_capacity(traj.len()),
        qv_cum: Vec::with_capacity(traj.len()),
    };
    let (mut drift, mut noise, mut qv) = (0.0, 0.0, 0.0);
    ledger.drift_cum.push(drift);
    ledger.noise_cum.push(noise);
    ledger.qv_cum.push(qv);
    for (u, dw) in traj.samples.iter().zip(noise_replay) {
        check_len(n, dw.len())?;
        let kappa = net.curvature(u)?;
        let grad = f.gradient(u);
        let hess = f.hessian_diag(u);
        for i in 0..n {
            drift += grad[i] * kappa[i] * cfg.dt;
            noise += grad[i] * cfg.sigma[i] * dw[i];
            qv += 0.5 * hess[i] * cfg.sigma[i] * cfg.sigma[i] * cfg.dt;
        }
        ledger.drift_cum.push(drift);
        ledger.noise_cum.push(noise);
        ledger.qv_cum.push(qv);
    }
    Ok(ledger)
}

/// Exact discrete split of the quadratic energy change:
/// `ΔE = Σ u_e Δu_e + ½ Σ (Δu_e)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySplit {
    pub delta_e: f64,
    pub first_order: f64,
    pub second_order: f64,
}

pub fn discrete_energy_identity(u_before: &[f64], u_after: &[f64]) -> Result<EnergySplit> {
    check_len(u_before.len(), u_after.len())?;
    let e = quadratic_energy(u_before.len());
    let mut first_order = 0.0;
    let mut second_order = 0.0;
    for (a, b) in u_before.iter().zip(u_after) {
        let d = b - a;
        first_order += a * d;
        second_order += 0.5 * d * d;
    }
    Ok(EnergySplit {
        delta_e: e.value(u_after) - e.value(u_before),
        first_order,
        second_order,
    })
}

/// `d E[E(u)]/dt` at `state`: `u · κ + ½ Σ σ_e²`.
pub fn expected_energy_drift(net: &Network, state: &State, sigma: &[f64]) -> Result<f64> {
    check_len(net.site_count(), sigma.len())?;
    let kappa = net.curvature_of(state)?;
    let dissipation: f64 = state.positions.iter().zip(&kappa).map(|(u, k)| u * k).sum();
    Ok(dissipation + 0.5 * sigma.iter().map(|s| s * s).sum::<f64>())
}

/// Realized quadratic variation per site, normalized by its expectation:
/// `Σ_steps (Δu_i - κ_i dt)² / (σ_i² t_end)`, with κ taken at each step's
/// start state. Tends to 1 as `dt -> 0` for a synchronous path recorded at
/// every step.
pub fn realized_qv_ratio(traj: &Trajectory, net: &Network, cfg: &SimConfig) -> Result<Vec<f64>> {
    if cfg.record_every != 1 {
        return Err(SmcfError::InvalidArgument(
            "quadratic variation needs every step recorded".into(),
        ));
    }
    let n = net.site_count();
    check_len(n, cfg.sigma.len())?;
    if let Some(i) = cfg.sigma.iter().position(|&s| s == 0.0) {
        return Err(SmcfError::InvalidArgument(format!(
            "site {i} has zero noise, its quadratic variation ratio is undefined"
        )));
    }
    let mut acc = vec![0.0; n];
    for w in traj.samples.windows(2) {
        let kappa = net.curvature(&w[0])?;
        for i in 0..n {
            let r = w[1][i] - w[0][i] - kappa[i] * cfg.dt;
            acc[i] += r * r;
        }
    }
    Ok(acc
        .into_iter()
        .zip(&cfg.sigma)
        .map(|(q, s)| q / (s * s * cfg.t_end))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseStream;
    use crate::sde::{replay_noise, simulate};

    #[test]
    fn quadratic_energy_examples() {
        let e = quadratic_energy(4);
        assert_eq!(e.value(&[0.0; 4]), 0.0);
        assert_eq!(e.gradient(&[0.0; 4]), vec![0.0; 4]);
        assert_eq!(e.value(&[1.0; 4]), 2.0);
        let e2 = quadratic_energy(2);
        assert_eq!(e2.value(&[3.0, 4.0]), 12.5);
        assert_eq!(e2.gradient(&[3.0, 4.0]), vec![3.0, 4.0]);
        assert_eq!(e2.hessian_diag(&[3.0, 4.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn energy_identity_examples() {
        let s = discrete_energy_identity(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((s.delta_e, s.first_order, s.second_order), (0.0, 0.0, 0.0));
        let s = discrete_energy_identity(&[0.0], &[2.0]).unwrap();
        assert_eq!((s.delta_e, s.first_order, s.second_order), (2.0, 0.0, 2.0));
        let s = discrete_energy_identity(&[1.0, 1.0], &[2.0, 0.0]).unwrap();
        assert_eq!((s.delta_e, s.first_order, s.second_order), (1.0, 0.0, 1.0));
        assert!(discrete_energy_identity(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn expected_drift_examples() {
        let p3 = Network::path(3).unwrap();
        let d = expected_energy_drift(&p3, &State::at_zero(vec![0.0, 1.0, 0.0]), &[0.0; 3]).unwrap();
        assert_eq!(d, -2.0);
        let d = expected_energy_drift(&p3, &State::at_zero(vec![4.0; 3]), &[0.0; 3]).unwrap();
        assert_eq!(d, 0.0);
        let p10 = Network::path(10).unwrap();
        let d = expected_energy_drift(&p10, &State::at_zero(vec![0.0; 10]), &[0.1; 10]).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
    }

    #[test]
    fn ledger_input_checks() {
        let net = Network::path(3).unwrap();
        let mut cfg = SimConfig::chain_defaults(3);
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(0, 0)).unwrap();
        let noise = replay_noise(&net, &cfg, 0).unwrap();
        let e = quadratic_energy(3);
        assert!(ito_track(&traj, &net, &cfg, &e, &noise[1..]).is_err());
        cfg.record_every = 2;
        assert!(ito_track(&traj, &net, &cfg, &e, &noise).is_err());
    }

    #[test]
    fn deterministic_ledger_has_only_drift() {
        let net = Network::path(10).unwrap();
        let mut cfg = SimConfig::chain_defaults(10).with_uniform_sigma(0.0);
        cfg.dt = 1e-3;
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(3, 0)).unwrap();
        let noise = replay_noise(&net, &cfg, 0).unwrap();
        let ledger = ito_track(&traj, &net, &cfg, &quadratic_energy(10), &noise).unwrap();
        assert!(ledger.noise_cum.iter().all(|&x| x == 0.0));
        assert!(ledger.qv_cum.iter().all(|&x| x == 0.0));
        let fmax = ledger.f_values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for k in 0..ledger.times.len() {
            let df = ledger.f_values[k] - ledger.f_values[0];
            assert!((df - ledger.drift_cum[k]).abs() <= 5.0 * cfg.dt * fmax);
        }
    }

    #[test]
    fn total_position_has_no_drift() {
        let net = Network::path(8).unwrap();
        let cfg = SimConfig::chain_defaults(8).with_uniform_sigma(0.0);
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(4, 0)).unwrap();
        let noise = replay_noise(&net, &cfg, 0).unwrap();
        let ledger = ito_track(&traj, &net, &cfg, &total_position(8), &noise).unwrap();
        for k in 0..ledger.times.len() {
            assert!(ledger.drift_cum[k].abs() < 1e-13);
            assert!((ledger.f_values[k] - ledger.f_values[0]).abs() < 1e-13);
        }
    }

    fn default_ledger(dt: f64) -> (Trajectory, Vec<Vec<f64>>, ItoLedger, SimConfig, Network) {
        let net = Network::path(10).unwrap();
        let mut cfg = SimConfig::chain_defaults(10);
        cfg.dt = dt;
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(cfg.seed, 0)).unwrap();
        let noise = replay_noise(&net, &cfg, 0).unwrap();
        let ledger = ito_track(&traj, &net, &cfg, &quadratic_energy(10), &noise).unwrap();
        (traj, noise, ledger, cfg, net)
    }

    #[test]
    fn noisy_step_residual_is_the_discrete_remainder() {
        // ΔE - Σ u Δu - ½Σσ²dt = ½Σ(κdt)² + Σ κ dt σ ΔW + ½Σ σ²(ΔW² - dt)
        let (traj, noise, ledger, cfg, net) = default_ledger(0.01);
        for ((w, dw), r) in traj.samples.windows(2).zip(&noise).zip(ledger.step_residuals()) {
            let kappa = net.curvature(&w[0]).unwrap();
            let expected: f64 = (0..10)
                .map(|i| {
                    let (k, s) = (kappa[i] * cfg.dt, cfg.sigma[i]);
                    0.5 * k * k + k * s * dw[i] + 0.5 * s * s * (dw[i] * dw[i] - cfg.dt)
                })
                .sum();
            assert!((r - expected).abs() < 1e-13, "{r} vs {expected}");
        }
    }

    #[test]
    fn noisy_step_residual_shrinks_with_dt() {
        let rms = |dt: f64| {
            let r = default_ledger(dt).2.step_residuals();
            (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
        };
        let coarse = rms(0.01);
        let fine = rms(0.005);
        assert!(coarse <= 1e-3, "rms step residual {coarse}");
        assert!((0.35..=0.65).contains(&(fine / coarse)), "ratio {}", fine / coarse);
    }

    #[test]
    fn gradient_checks_pass() {
        let mut s = NoiseStream::new(8, 0);
        for _ in 0..50 {
            let u: Vec<f64> = s.uniform_vec(7).into_iter().map(|x| 2.0 * x - 1.0).collect();
            assert!(gradient_check(&quadratic_energy(7), &u, 1e-5) <= 1e-6);
            assert!(gradient_check(&total_position(7), &u, 1e-5) <= 1e-6);
        }
    }

    #[test]
    fn qv_ratio_rejects_zero_sigma() {
        let net = Network::path(3).unwrap();
        let cfg = SimConfig::chain_defaults(3).with_uniform_sigma(0.0);
        let traj = simulate(&net, &cfg, &mut NoiseStream::new(0, 0)).unwrap();
        assert!(realized_qv_ratio(&traj, &net, &cfg).is_err());
    }
}
