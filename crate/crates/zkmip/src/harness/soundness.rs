//! Monte Carlo estimates of a cheating prover's acceptance probability.

use serde::Serialize;

use super::{HarnessError, StatsConfig};
use crate::rng::RngStream;
use crate::stats::wilson;

#[derive(Clone, Debug, Serialize)]
pub struct SoundnessReport {
    pub trials: u64,
    pub accepts: u64,
    pub ci: (f64, f64),
    pub bound: f64,
    /// `bound` plus the declared slack.
    pub threshold: f64,
    pub passed: bool,
}

impl SoundnessReport {
    pub fn detail(&self) -> String {
        format!(
            "{}/{} accepted, CI [{:.4}, {:.4}], bound {:.4}, threshold {:.4}",
            self.accepts, self.trials, self.ci.0, self.ci.1, self.bound, self.threshold
        )
    }
}

/// Slack of `sigmas` standard deviations of a Bernoulli(`bound`) mean over `n` trials.
pub fn slack(bound: f64, n: u64, sigmas: f64) -> f64 {
    let b = bound.clamp(0.0, 1.0);
    sigmas * (b * (1.0 - b) / n as f64).sqrt()
}

/// Runs `trial` on independent streams; it returns whether the cheating prover was accepted.
/// Passes iff the upper Wilson bound is at most `bound` plus slack.
pub fn soundness_mc(
    trials: u64,
    bound: f64,
    cfg: &StatsConfig,
    seed: u64,
    mut trial: impl FnMut(RngStream) -> Result<bool, String>,
) -> Result<SoundnessReport, HarnessError> {
    let root = RngStream::from_seed(seed);
    let mut accepts = 0;
    for i in 0..trials {
        accepts += trial(root.child_idx("trial", i)).map_err(HarnessError::Sampler)? as u64;
    }
    let ci = wilson(accepts, trials, cfg.ci_z);
    let threshold = bound + slack(bound, trials, cfg.slack_sigma);
    Ok(SoundnessReport { trials, accepts, ci, bound, threshold, passed: ci.1 <= threshold })
}
