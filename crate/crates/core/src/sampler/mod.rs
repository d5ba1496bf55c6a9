//! Allocation sampler over `(z, K)`.
//!
//! Each iteration picks one of the enabled moves uniformly at random:
//!
//! * **MK** adds or removes an empty cluster.
//! * **GS** redraws one node's cluster from its exact full conditional.
//! * **M3** empties two clusters and reinserts their nodes one at a time,
//!   each with probability proportional to the posterior of the partially
//!   rebuilt network, then accepts or rejects the whole reallocation.
//! * **AE** ejects a random subset of one cluster into a new cluster, or
//!   absorbs one cluster into another.
//!
//! MK, M3 and AE are Metropolis-Hastings proposals. Attempts that cannot be
//! made (deleting a non-empty cluster, absorbing at `K = 1`, M3 at `K < 2`,
//! growing past the maximum of a uniform `K` prior) count as rejections and
//! leave the state untouched.

mod moves;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::math::exp;
use crate::posterior::PosteriorError;

pub use moves::{absorb_log_proposal, eject_log_proposal, Chain, MoveOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    MK,
    GS,
    M3,
    AE,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [MoveKind::MK, MoveKind::GS, MoveKind::M3, MoveKind::AE];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::MK => "MK",
            MoveKind::GS => "GS",
            MoveKind::M3 => "M3",
            MoveKind::AE => "AE",
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MoveKind {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MK" => Ok(MoveKind::MK),
            "GS" => Ok(MoveKind::GS),
            "M3" => Ok(MoveKind::M3),
            "AE" => Ok(MoveKind::AE),
            other => Err(SamplerError::UnknownMove(other.into())),
        }
    }
}

/// A set of enabled moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MoveSet([bool; 4]);

impl MoveSet {
    pub const ALL: MoveSet = MoveSet([true; 4]);

    pub fn from_kinds(kinds: &[MoveKind]) -> MoveSet {
        let mut set = [false; 4];
        for k in kinds {
            set[k.index()] = true;
        }
        MoveSet(set)
    }

    pub fn contains(&self, kind: MoveKind) -> bool {
        self.0[kind.index()]
    }

    pub fn kinds(&self) -> Vec<MoveKind> {
        MoveKind::ALL.into_iter().filter(|k| self.contains(*k)).collect()
    }

    /// AE alone, or MK together with GS, can reach every `(z, K)`.
    pub fn is_irreducible(&self) -> bool {
        self.contains(MoveKind::AE) || (self.contains(MoveKind::MK) && self.contains(MoveKind::GS))
    }
}

impl Default for MoveSet {
    fn default() -> Self {
        MoveSet::ALL
    }
}

impl FromStr for MoveSet {
    type Err = SamplerError;

    /// Comma-separated move names, e.g. `MK,GS`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kinds = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(MoveKind::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MoveSet::from_kinds(&kinds))
    }
}

impl fmt::Display for MoveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for k in self.kinds() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            f.write_str(k.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("unknown move {0:?}, expected one of MK, GS, M3, AE")]
    UnknownMove(String),
    #[error("cannot sample a network with no nodes")]
    EmptyNetwork,
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub initial_k: usize,
    pub thin: u64,
    pub enabled_moves: MoveSet,
    /// Recount the statistics and the log posterior every this many
    /// iterations to bound drift of the running value (0 disables).
    pub recompute_every: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 1_000_000,
            burn_in: 500_000,
            seed: 0,
            initial_k: 2,
            thin: 1,
            enabled_moves: MoveSet::ALL,
            recompute_every: 10_000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.burn_in >= self.iterations {
            return Err(SamplerError::InvalidConfig("burn_in must be smaller than iterations"));
        }
        if self.thin == 0 {
            return Err(SamplerError::InvalidConfig("thin must be at least 1"));
        }
        if self.initial_k == 0 {
            return Err(SamplerError::InvalidConfig("initial_k must be at least 1"));
        }
        if self.enabled_moves.kinds().is_empty() {
            return Err(SamplerError::InvalidConfig("no moves enabled"));
        }
        if !self.enabled_moves.is_irreducible() {
            return Err(SamplerError::InvalidConfig("enabled moves cannot reach every state: enable AE, or both MK and GS"));
        }
        Ok(())
    }
}

/// One emitted state of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSample {
    pub iter: u64,
    pub k: usize,
    /// Number of non-empty clusters.
    pub k1: usize,
    pub z: Vec<u32>,
    pub log_post: f64,
    pub move_kind: MoveKind,
    pub accepted: bool,
}

/// Per-move attempt, acceptance and state-change counters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveStats {
    pub attempts: [u64; 4],
    pub accepts: [u64; 4],
    /// Accepted attempts that left the labelled state different.
    pub changed: [u64; 4],
}

impl MoveStats {
    pub fn record(&mut self, outcome: &MoveOutcome) {
        let i = outcome.kind.index();
        self.attempts[i] += 1;
        if outcome.accepted {
            self.accepts[i] += 1;
        }
        if outcome.changed {
            self.changed[i] += 1;
        }
    }

    pub fn acceptance_rate(&self, kind: MoveKind) -> f64 {
        let i = kind.index();
        if self.attempts[i] == 0 {
            0.0
        } else {
            self.accepts[i] as f64 / self.attempts[i] as f64
        }
    }

    pub fn change_rate(&self, kind: MoveKind) -> f64 {
        let i = kind.index();
        if self.attempts[i] == 0 {
            0.0
        } else {
            self.changed[i] as f64 / self.attempts[i] as f64
        }
    }

    pub fn merge(&mut self, other: &MoveStats) {
        for i in 0..4 {
            self.attempts[i] += other.attempts[i];
            self.accepts[i] += other.accepts[i];
            self.changed[i] += other.changed[i];
        }
    }
}

/// Metropolis-Hastings acceptance probability from log masses and log
/// proposal probabilities.
pub fn accept_ratio(log_post_old: f64, log_post_new: f64, log_prop_fwd: f64, log_prop_rev: f64) -> f64 {
    let log_ratio = log_post_new - log_post_old + log_prop_rev - log_prop_fwd;
    if log_ratio.is_nan() || log_ratio == f64::NEG_INFINITY {
        0.0
    } else if log_ratio >= 0.0 {
        1.0
    } else {
        exp(log_ratio)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub stats: MoveStats,
    /// Largest gap seen between the running log posterior and a recount.
    pub max_drift: f64,
    pub final_k: usize,
    pub final_log_post: f64,
    pub samples_emitted: u64,
}

/// Runs one chain, passing every `thin`-th post-burn-in state to `sink`.
pub fn run_chain<F>(
    net: &crate::graph::Network,
    hp: &crate::posterior::Hyperparameters,
    config: &SamplerConfig,
    stream: u64,
    mut sink: F,
) -> Result<RunSummary, SamplerError>
where
    F: FnMut(&ChainSample),
{
    config.validate()?;
    let mut chain = Chain::new(net, hp, config, stream)?;
    let mut sample = chain.sample(0, MoveKind::MK, false);
    let mut emitted = 0;
    for t in 0..config.iterations {
        let outcome = chain.step();
        if config.recompute_every > 0 && (t + 1) % config.recompute_every == 0 {
            chain.resync();
        }
        if t >= config.burn_in && (t - config.burn_in).is_multiple_of(config.thin) {
            chain.fill_sample(&mut sample, t, outcome.kind, outcome.accepted);
            sink(&sample);
            emitted += 1;
        }
    }
    chain.resync();
    Ok(RunSummary {
        stats: chain.stats().clone(),
        max_drift: chain.max_drift(),
        final_k: chain.state().k(),
        final_log_post: chain.log_post(),
        samples_emitted: emitted,
    })
}

#[cfg(test)]
mod tests;
