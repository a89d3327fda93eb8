//! Test harness: configuration, the zero-knowledge distribution tester, the soundness Monte
//! Carlo driver, transcript files, and the protocol scenarios the command line tool runs.

pub mod battery;
pub mod scenarios;
pub mod soundness;
pub mod transcript_io;
pub mod zk;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scenarios::Scenario;
pub use soundness::{soundness_mc, SoundnessReport};
pub use transcript_io::{parse_transcript, transcript_to_bytes, TranscriptError};
pub use zk::{zk_chi2, zk_exhaustive, View, ZkReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("view spaces differ: {0}")]
    ViewSpaceMismatch(String),
    #[error("randomness space exceeds {0} paths")]
    TooManyPaths(u64),
    #[error("sampler failed: {0}")]
    Sampler(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Statistical thresholds. The protocols' claims are exact; these are the desk-scale proxies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    /// Samples per side for chi-square zero-knowledge tests.
    pub samples: usize,
    pub p_floor: f64,
    /// Soundness slack in standard deviations of the bound.
    pub slack_sigma: f64,
    /// Width of the Wilson interval, in standard deviations.
    pub ci_z: f64,
    pub soundness_trials: usize,
    pub completeness_trials: usize,
    /// Probability of the planted defect in negative controls.
    pub defect_epsilon: f64,
}

impl Default for StatsConfig {
    fn default() -> StatsConfig {
        StatsConfig {
            samples: 100_000,
            p_floor: 1e-3,
            slack_sigma: 5.0,
            ci_z: 1.96,
            soundness_trials: 10_000,
            completeness_trials: 1_000,
            defect_epsilon: 0.1,
        }
    }
}

/// The whole configuration file: statistics plus one table per command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub stats: StatsConfig,
    pub sumcheck: scenarios::SumcheckParams,
    pub zksumcheck: scenarios::ZkSumcheckParams,
    pub commit: scenarios::CommitParams,
    pub ldt: scenarios::LdtScenario,
    pub nexp: scenarios::NexpScenario,
    pub lift: scenarios::LiftScenario,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config, HarnessError> {
        Config::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_files() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c.stats.samples, 100_000);
        assert_eq!(c.stats.p_floor, 1e-3);
        assert_eq!(c.stats.slack_sigma, 5.0);
        let c = Config::from_toml("[stats]\nsamples = 500\n[sumcheck]\nfield = \"F17\"\n").unwrap();
        assert_eq!(c.stats.samples, 500);
        assert_eq!(c.stats.p_floor, 1e-3);
        assert_eq!(c.sumcheck.field, "F17");
        assert!(Config::from_toml("[stats]\nsample = 5\n").is_err());
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }
}
