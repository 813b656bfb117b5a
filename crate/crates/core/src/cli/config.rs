//! Experiment configuration files.
//!
//! ```toml
//! k = 4
//! n_t = 4
//! n_block = 8                # or a list for block-sweep and timing
//! modulation = "QPSK"
//! snr_db = [0, 10, 20, 30]   # `inf` for a noiseless channel
//! n_channels = 200
//! n_blocks_per_channel = 5
//! schemes = ["ci-blp", "ci-slp", "zf", "rzf"]
//! seed = 1
//! rzf_rho = "snr"            # or a fixed positive number
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::Modulation;
use crate::precoders::{CiOptions, PrecoderKind};
use crate::qp::SolverConfig;
use crate::sim::{RzfRho, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSetting {
    Policy(String),
    Value(f64),
}

impl Default for RhoSetting {
    fn default() -> Self {
        RhoSetting::Policy("snr".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    pub n_t: usize,
    pub n_block: OneOrMany<usize>,
    pub modulation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<OneOrMany<f64>>,
    pub n_channels: usize,
    #[serde(default = "default_blocks_per_channel")]
    pub n_blocks_per_channel: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<String>>,
    pub seed: u64,
    #[serde(default)]
    pub rzf_rho: RhoSetting,
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default)]
    pub record_solve_time: bool,
    /// `[k, n_t]` pairs for the timing command; defaults to `[[k, n_t]]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub systems: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_tol: Option<f64>,
}

fn default_blocks_per_channel() -> usize {
    1
}

fn default_p0() -> f64 {
    1.0
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("`{key}`: {msg}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn modulation(&self) -> Result<Modulation> {
        self.modulation.parse().map_err(|e| invalid("modulation", e))
    }

    pub fn block_lengths(&self) -> Vec<usize> {
        self.n_block.to_vec()
    }

    pub fn systems(&self) -> Vec<(usize, usize)> {
        match &self.systems {
            Some(list) => list.iter().map(|[k, n_t]| (*k, *n_t)).collect(),
            None => vec![(self.k, self.n_t)],
        }
    }

    fn rzf_rho(&self) -> Result<RzfRho> {
        match &self.rzf_rho {
            RhoSetting::Policy(p) if p.eq_ignore_ascii_case("snr") => Ok(RzfRho::OperatingSnr),
            RhoSetting::Policy(p) => Err(invalid("rzf_rho", format!("expected \"snr\" or a number, got \"{p}\""))),
            RhoSetting::Value(v) if *v > 0.0 => Ok(RzfRho::Fixed(*v)),
            RhoSetting::Value(v) => Err(invalid("rzf_rho", format!("must be positive, got {v}"))),
        }
    }

    fn schemes(&self, required: bool) -> Result<Vec<PrecoderKind>> {
        match &self.schemes {
            Some(list) => list.iter().map(|s| s.parse::<PrecoderKind>().map_err(|e| invalid("schemes", e))).collect(),
            None if required => Err(Error::InvalidConfig("missing field `schemes`".into())),
            None => Ok(vec![PrecoderKind::CiBlp, PrecoderKind::CiSlp]),
        }
    }

    fn snr_grid(&self, required: bool) -> Result<Vec<f64>> {
        match &self.snr_db {
            Some(v) => Ok(v.to_vec()),
            None if required => Err(Error::InvalidConfig("missing field `snr_db`".into())),
            None => Ok(vec![f64::INFINITY]),
        }
    }

    /// Simulation settings with `n_block` set to the first listed length.
    /// SER commands need `snr_db` and `schemes`; timing does not.
    pub fn sim_config(&self, for_ser: bool) -> Result<SimConfig> {
        let n_blocks = self.block_lengths();
        if n_blocks.is_empty() {
            return Err(invalid("n_block", "list is empty"));
        }
        let mut ci = CiOptions::default();
        if let Some(tol) = self.solver_tol {
            ci.solver = SolverConfig { tol, ..ci.solver };
        }
        let cfg = SimConfig {
            k: self.k,
            n_t: self.n_t,
            n_block: n_blocks[0],
            modulation: self.modulation()?,
            snr_db: self.snr_grid(for_ser)?,
            n_channels: self.n_channels,
            n_blocks_per_channel: self.n_blocks_per_channel,
            schemes: self.schemes(for_ser)?,
            seed: self.seed,
            p0: self.p0,
            rzf_rho: self.rzf_rho()?,
            ci,
            record_solve_time: self.record_solve_time,
        };
        cfg.validate()?;
        if let Some(n) = n_blocks.iter().find(|&&n| n == 0) {
            return Err(invalid("n_block", format!("block length {n} is not positive")));
        }
        for (k, n_t) in self.systems() {
            if k == 0 || n_t < k {
                return Err(invalid("systems", format!("need 1 <= k <= n_t, got [{k}, {n_t}]")));
            }
        }
        Ok(cfg)
    }
}
