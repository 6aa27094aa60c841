//! JSON run configuration shared by the command-line tool and the web demo.
//!
//! ```json
//! {"topology": "path", "sites": 10, "dt": 0.01, "t_end": 1.0, "sigma": 0.1,
//!  "seed": 42, "update_mode": "synchronous", "record_every": 1,
//!  "initial": "uniform"}
//! ```
//!
//! `"topology": "pairs"` additionally takes `"pairs": [[i, j], ...]`. A scalar
//! `sigma` applies to every site; `initial` is `"uniform"` or a vector.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcfError};
use crate::graph::Network;
use crate::noise::NoiseStream;
use crate::sde::{
    InitialCondition, SimConfig, UpdateMode, DEFAULT_DT, DEFAULT_SEED, DEFAULT_SIGMA, DEFAULT_SITES,
    DEFAULT_T_END,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Path,
    Pairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Scalar(f64),
    PerSite(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialKeyword {
    #[serde(rename = "uniform")]
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Keyword(InitialKeyword),
    Vector(Vec<f64>),
}

/// Fully resolved configuration, serialized in the same schema it is read in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub topology: Topology,
    pub sites: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
    pub dt: f64,
    pub t_end: f64,
    pub sigma: SigmaSpec,
    pub seed: u64,
    pub update_mode: UpdateMode,
    pub record_every: usize,
    pub initial: InitialSpec,
}

/// Any subset of [`RunConfig`]; used for config files and flag overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub topology: Option<Topology>,
    pub sites: Option<usize>,
    pub pairs: Option<Vec<[usize; 2]>>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub sigma: Option<SigmaSpec>,
    pub seed: Option<u64>,
    pub update_mode: Option<UpdateMode>,
    pub record_every: Option<usize>,
    pub initial: Option<InitialSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            topology: Topology::Path,
            sites: DEFAULT_SITES,
            pairs: None,
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            sigma: SigmaSpec::Scalar(DEFAULT_SIGMA),
            seed: DEFAULT_SEED,
            update_mode: UpdateMode::Synchronous,
            record_every: 1,
            initial: InitialSpec::Keyword(InitialKeyword::Uniform),
        }
    }
}

impl PartialConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SmcfError::InvalidConfig(e.to_string()))
    }
}

impl RunConfig {
    /// Applies every field set in `over`.
    pub fn merged(mut self, over: &PartialConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = &over.$field {
                    self.$field = v.clone();
                }
            )*};
        }
        take!(topology, sites, dt, t_end, sigma, seed, update_mode, record_every, initial);
        if over.pairs.is_some() {
            self.pairs = over.pairs.clone();
        }
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(Self::default().merged(&PartialConfig::from_json(text)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Replaces a `"uniform"` start by the vector path 0 of this seed draws,
    /// for computations that need one fixed start.
    pub fn pin_initial(&mut self) {
        if let InitialSpec::Keyword(InitialKeyword::Uniform) = self.initial {
            let mut stream = NoiseStream::new(self.seed, 0);
            self.initial = InitialSpec::Vector(stream.uniform_vec(self.sites));
        }
    }

    pub fn network(&self) -> Result<Network> {
        match self.topology {
            Topology::Path => {
                if self.pairs.is_some() {
                    return Err(SmcfError::InvalidConfig(
                        "\"pairs\" is only allowed with \"topology\": \"pairs\"".into(),
                    ));
                }
                Network::path(self.sites)
            }
            Topology::Pairs => {
                let pairs = self.pairs.as_ref().ok_or_else(|| {
                    SmcfError::InvalidConfig("\"topology\": \"pairs\" requires \"pairs\"".into())
                })?;
                Network::from_pairs(self.sites, pairs.iter().map(|p| (p[0], p[1])))
            }
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            t_end: self.t_end,
            sigma: match &self.sigma {
                SigmaSpec::Scalar(s) => vec![*s; self.sites],
                SigmaSpec::PerSite(v) => v.clone(),
            },
            seed: self.seed,
            update_mode: self.update_mode,
            record_every: self.record_every,
            initial: match &self.initial {
                InitialSpec::Keyword(InitialKeyword::Uniform) => InitialCondition::Uniform,
                InitialSpec::Vector(v) => InitialCondition::Given(v.clone()),
            },
        }
    }

    /// Builds and cross-validates the network and simulation config.
    pub fn resolve(&self) -> Result<(Network, SimConfig)> {
        let net = self.network()?;
        let cfg = self.sim_config();
        cfg.step_count(&net)?;
        Ok((net, cfg))
    }
}
