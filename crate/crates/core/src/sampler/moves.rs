use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ChainSample, MoveKind, MoveStats, SamplerConfig, SamplerError};
use crate::graph::Network;
use crate::math::{exp, ln_gamma, log, log_choice2, sample_log_weights};
use crate::posterior::{ClusterState, EdgeTally, Hyperparameters, PosteriorTerms, StatsSnapshot};

/// Result of one attempted move.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
    /// The labelled state after the move differs from the one before.
    pub changed: bool,
    /// Log Metropolis-Hastings ratio; `None` for Gibbs draws and abandoned attempts.
    pub log_ratio: Option<f64>,
}

impl MoveOutcome {
    fn abandoned(kind: MoveKind) -> Self {
        MoveOutcome { kind, accepted: false, changed: false, log_ratio: None }
    }
}

/// Log proposal probability of ejecting `n_moved` of `n_stay + n_moved` nodes
/// into a new cluster from a state with `k` clusters, with the ejection
/// probability integrated over Uniform(0, 1).
pub fn eject_log_proposal(n_stay: u64, n_moved: u64, k: usize) -> f64 {
    let n = n_stay + n_moved;
    ln_gamma(n_stay as f64 + 1.0) + ln_gamma(n_moved as f64 + 1.0)
        - ln_gamma(n as f64 + 2.0)
        - log(k as f64)
        - log(k as f64 + 1.0)
}

/// Log proposal probability of one ordered (survivor, absorbed) pair among `k` clusters.
pub fn absorb_log_proposal(k: usize) -> f64 {
    -log(k as f64) - log(k as f64 - 1.0)
}

/// One Markov chain over `(z, K)` for a fixed network.
pub struct Chain<'a> {
    net: &'a Network,
    terms: PosteriorTerms,
    pub(super) state: ClusterState,
    log_post: f64,
    rng: ChaCha8Rng,
    moves: Vec<MoveKind>,
    stats: MoveStats,
    max_drift: f64,
    pub(super) tally: EdgeTally,
    members: Vec<u32>,
    weights: Vec<f64>,
    snap_original: StatsSnapshot,
    snap_base: StatsSnapshot,
    backup: Option<ClusterState>,
}

impl<'a> Chain<'a> {
    /// Starts from `initial_k` clusters with nodes assigned uniformly at random.
    ///
    /// `stream` selects an independent random stream for the same seed, one
    /// per concurrently running chain.
    pub fn new(net: &'a Network, hp: &Hyperparameters, config: &SamplerConfig, stream: u64) -> Result<Self, SamplerError> {
        config.validate()?;
        if net.n_nodes() == 0 {
            return Err(SamplerError::EmptyNetwork);
        }
        if let Some(max) = hp.k_prior.max_k() {
            if config.initial_k > max {
                return Err(SamplerError::InvalidConfig("initial_k exceeds the uniform prior's max_k"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let k = config.initial_k;
        let z = (0..net.n_nodes()).map(|_| rng.random_range(0..k as u32)).collect();
        let state = ClusterState::from_assignment(net, z, k)?;
        Self::with_rng(net, hp, state, rng, config.enabled_moves.kinds())
    }

    /// Starts from a given state.
    pub fn from_state(
        net: &'a Network,
        hp: &Hyperparameters,
        state: ClusterState,
        seed: u64,
        stream: u64,
        moves: &[MoveKind],
    ) -> Result<Self, SamplerError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::with_rng(net, hp, state, rng, moves.to_vec())
    }

    fn with_rng(
        net: &'a Network,
        hp: &Hyperparameters,
        state: ClusterState,
        rng: ChaCha8Rng,
        moves: Vec<MoveKind>,
    ) -> Result<Self, SamplerError> {
        if moves.is_empty() {
            return Err(SamplerError::InvalidConfig("no moves enabled"));
        }
        let terms = PosteriorTerms::new(hp, net.model())?;
        let log_post = state.log_posterior(&terms);
        Ok(Chain {
            net,
            terms,
            state,
            log_post,
            rng,
            moves,
            stats: MoveStats::default(),
            max_drift: 0.0,
            tally: EdgeTally::new(),
            members: Vec::new(),
            weights: Vec::new(),
            snap_original: StatsSnapshot::default(),
            snap_base: StatsSnapshot::default(),
            backup: None,
        })
    }

    pub fn state(&self) -> &ClusterState {
        &self.state
    }

    /// Running unnormalized log posterior of the current state.
    pub fn log_post(&self) -> f64 {
        self.log_post
    }

    pub fn stats(&self) -> &MoveStats {
        &self.stats
    }

    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn sample(&self, iter: u64, move_kind: MoveKind, accepted: bool) -> ChainSample {
        ChainSample {
            iter,
            k: self.state.k(),
            k1: self.state.n_nonempty(),
            z: self.state.z().to_vec(),
            log_post: self.log_post,
            move_kind,
            accepted,
        }
    }

    pub(crate) fn fill_sample(&self, sample: &mut ChainSample, iter: u64, move_kind: MoveKind, accepted: bool) {
        sample.iter = iter;
        sample.k = self.state.k();
        sample.k1 = self.state.n_nonempty();
        sample.z.clear();
        sample.z.extend_from_slice(self.state.z());
        sample.log_post = self.log_post;
        sample.move_kind = move_kind;
        sample.accepted = accepted;
    }

    /// Recounts the statistics from scratch and resets the running log
    /// posterior. Returns the drift that was corrected.
    pub fn resync(&mut self) -> f64 {
        let fresh = ClusterState::from_assignment(self.net, self.state.z().to_vec(), self.state.k())
            .expect("chain state holds a complete assignment");
        debug_assert!(self.state.matches_recount(self.net));
        let value = fresh.log_posterior(&self.terms);
        let drift = (value - self.log_post).abs();
        if drift > self.max_drift {
            self.max_drift = drift;
        }
        self.log_post = value;
        drift
    }

    /// Picks one enabled move uniformly at random and attempts it.
    pub fn step(&mut self) -> MoveOutcome {
        let kind = self.moves[self.rng.random_range(0..self.moves.len())];
        let outcome = match kind {
            MoveKind::MK => self.move_mk(),
            MoveKind::GS => self.move_gs(),
            MoveKind::M3 => self.move_m3(),
            MoveKind::AE => self.move_ae(),
        };
        self.stats.record(&outcome);
        outcome
    }

    fn metropolis(&mut self, log_ratio: f64) -> bool {
        if log_ratio >= 0.0 {
            true
        } else if log_ratio.is_nan() {
            false
        } else {
            self.rng.random::<f64>() < exp(log_ratio)
        }
    }

    fn at_capacity(&self) -> bool {
        self.terms.k_prior.max_k().is_some_and(|max| self.state.k() >= max)
    }

    /// Adds or removes one empty cluster. The proposal is symmetric: an
    /// insert picks its label among `K + 1` positions and the matching delete
    /// picks that label among the `K + 1` clusters.
    pub fn move_mk(&mut self) -> MoveOutcome {
        let kind = MoveKind::MK;
        let k = self.state.k();
        let n = self.state.assigned();
        if self.rng.random_bool(0.5) {
            if self.at_capacity() {
                return MoveOutcome::abandoned(kind);
            }
            let at = self.rng.random_range(0..=k);
            let log_ratio = self.terms.log_add_empty_cluster(k, n);
            let accepted = self.metropolis(log_ratio);
            if accepted {
                self.state.insert_empty_cluster(at);
                self.log_post += log_ratio;
            }
            MoveOutcome { kind, accepted, changed: accepted, log_ratio: Some(log_ratio) }
        } else {
            let at = self.rng.random_range(0..k);
            if k == 1 || self.state.sizes()[at] > 0 {
                return MoveOutcome::abandoned(kind);
            }
            let log_ratio = -self.terms.log_add_empty_cluster(k - 1, n);
            let accepted = self.metropolis(log_ratio);
            if accepted {
                self.state.remove_empty_cluster(at).expect("cluster is empty and K > 1");
                self.log_post += log_ratio;
            }
            MoveOutcome { kind, accepted, changed: accepted, log_ratio: Some(log_ratio) }
        }
    }

    /// Gibbs update of one uniformly chosen node over all `K` clusters.
    pub fn move_gs(&mut self) -> MoveOutcome {
        let node = self.rng.random_range(0..self.state.z().len());
        self.gibbs_node(node)
    }

    pub(crate) fn gibbs_node(&mut self, node: usize) -> MoveOutcome {
        let from = self.state.z()[node] as usize;
        self.state.tally(self.net, node, &mut self.tally);
        self.state.detach(node, &self.tally);
        self.weights.clear();
        for c in 0..self.state.k() {
            let w = self.state.change_delta(&self.terms, &self.tally, None, Some(c));
            self.weights.push(w);
        }
        let (to, _) = sample_log_weights(&mut self.rng, &self.weights);
        self.state.attach(node, to, &self.tally);
        self.log_post += self.weights[to] - self.weights[from];
        MoveOutcome { kind: MoveKind::GS, accepted: true, changed: to != from, log_ratio: None }
    }

    /// Probability that the tallied, currently unassigned node joins `j`
    /// rather than `k` under the partial posterior.
    pub(crate) fn reinsert_log_probs(&self, j: usize, k: usize) -> (f64, f64) {
        let dj = self.state.change_delta(&self.terms, &self.tally, None, Some(j));
        let dk = self.state.change_delta(&self.terms, &self.tally, None, Some(k));
        (log_choice2(dj, dk), log_choice2(dk, dj))
    }

    /// Reallocates the nodes of two clusters.
    pub fn move_m3(&mut self) -> MoveOutcome {
        let kind = MoveKind::M3;
        let k = self.state.k();
        if k < 2 {
            return MoveOutcome::abandoned(kind);
        }
        let j = self.rng.random_range(0..k);
        let mut l = self.rng.random_range(0..k - 1);
        if l >= j {
            l += 1;
        }
        self.members.clear();
        self.members.extend(
            self.state
                .z()
                .iter()
                .enumerate()
                .filter(|(_, &c)| c as usize == j || c as usize == l)
                .map(|(i, _)| i as u32),
        );
        if self.members.is_empty() {
            return MoveOutcome { kind, accepted: true, changed: false, log_ratio: Some(0.0) };
        }
        self.members.shuffle(&mut self.rng);
        let members = core::mem::take(&mut self.members);

        self.state.snapshot_into(&members, &mut self.snap_original);
        for &a in &members {
            self.state.tally(self.net, a as usize, &mut self.tally);
            self.state.detach(a as usize, &self.tally);
        }
        self.state.snapshot_into(&members, &mut self.snap_base);

        // Reverse proposal: replay the same order with the original labels.
        let mut log_rev = 0.0;
        for (h, &a) in members.iter().enumerate() {
            self.state.tally(self.net, a as usize, &mut self.tally);
            let (pj, pl) = self.reinsert_log_probs(j, l);
            let original = self.snap_original.label(h) as usize;
            log_rev += if original == j { pj } else { pl };
            self.state.attach(a as usize, original, &self.tally);
        }
        self.state.restore(&self.snap_base, &members);

        let mut log_fwd = 0.0;
        let mut changed = false;
        for (h, &a) in members.iter().enumerate() {
            self.state.tally(self.net, a as usize, &mut self.tally);
            let (pj, pl) = self.reinsert_log_probs(j, l);
            let target = if self.rng.random::<f64>() < exp(pj) { j } else { l };
            log_fwd += if target == j { pj } else { pl };
            changed |= target != self.snap_original.label(h) as usize;
            self.state.attach(a as usize, target, &self.tally);
        }

        let new_post = self.state.log_posterior(&self.terms);
        let log_ratio = new_post - self.log_post + log_rev - log_fwd;
        let accepted = self.metropolis(log_ratio);
        if accepted {
            self.log_post = new_post;
        } else {
            self.state.restore(&self.snap_original, &members);
        }
        self.members = members;
        MoveOutcome { kind, accepted, changed: accepted && changed, log_ratio: Some(log_ratio) }
    }

    fn save_backup(&mut self) {
        match &mut self.backup {
            Some(b) => b.clone_from(&self.state),
            None => self.backup = Some(self.state.clone()),
        }
    }

    fn restore_backup(&mut self) {
        let backup = self.backup.as_ref().expect("backup saved before proposal");
        self.state.clone_from(backup);
    }

    fn collect_members(&mut self, cluster: usize) {
        self.members.clear();
        self.members.extend(
            self.state
                .z()
                .iter()
                .enumerate()
                .filter(|(_, &c)| c as usize == cluster)
                .map(|(i, _)| i as u32),
        );
    }

    /// Split (eject) or merge (absorb) move.
    pub fn move_ae(&mut self) -> MoveOutcome {
        if self.rng.random_bool(0.5) {
            self.eject()
        } else {
            self.absorb()
        }
    }

    fn eject(&mut self) -> MoveOutcome {
        let kind = MoveKind::AE;
        if self.at_capacity() {
            return MoveOutcome::abandoned(kind);
        }
        let k = self.state.k();
        let source = self.rng.random_range(0..k);
        let new_label = self.rng.random_range(0..=k);
        self.save_backup();
        self.state.insert_empty_cluster(new_label);
        let source = if source >= new_label { source + 1 } else { source };
        self.collect_members(source);

        let p_eject = self.rng.random::<f64>();
        let mut moved = 0u64;
        let members = core::mem::take(&mut self.members);
        for &a in &members {
            if self.rng.random::<f64>() < p_eject {
                self.state.tally(self.net, a as usize, &mut self.tally);
                self.state.reassign(a as usize, new_label, &self.tally);
                moved += 1;
            }
        }
        let stay = members.len() as u64 - moved;
        self.members = members;

        let log_fwd = eject_log_proposal(stay, moved, k);
        let log_rev = absorb_log_proposal(k + 1);
        let new_post = self.state.log_posterior(&self.terms);
        let log_ratio = new_post - self.log_post + log_rev - log_fwd;
        let accepted = self.metropolis(log_ratio);
        if accepted {
            self.log_post = new_post;
        } else {
            self.restore_backup();
        }
        MoveOutcome { kind, accepted, changed: accepted, log_ratio: Some(log_ratio) }
    }

    fn absorb(&mut self) -> MoveOutcome {
        let kind = MoveKind::AE;
        let k = self.state.k();
        if k == 1 {
            return MoveOutcome::abandoned(kind);
        }
        let survivor = self.rng.random_range(0..k);
        let mut absorbed = self.rng.random_range(0..k - 1);
        if absorbed >= survivor {
            absorbed += 1;
        }
        let n_survivor = self.state.sizes()[survivor];
        let n_absorbed = self.state.sizes()[absorbed];
        self.save_backup();
        self.collect_members(absorbed);
        let members = core::mem::take(&mut self.members);
        for &a in &members {
            self.state.tally(self.net, a as usize, &mut self.tally);
            self.state.reassign(a as usize, survivor, &self.tally);
        }
        self.members = members;
        self.state.remove_empty_cluster(absorbed).expect("absorbed cluster is empty and K > 1");

        let log_fwd = absorb_log_proposal(k);
        let log_rev = eject_log_proposal(n_survivor, n_absorbed, k - 1);
        let new_post = self.state.log_posterior(&self.terms);
        let log_ratio = new_post - self.log_post + log_rev - log_fwd;
        let accepted = self.metropolis(log_ratio);
        if accepted {
            self.log_post = new_post;
        } else {
            self.restore_backup();
        }
        MoveOutcome { kind, accepted, changed: accepted, log_ratio: Some(log_ratio) }
    }
}
