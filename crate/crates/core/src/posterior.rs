//! The collapsed posterior `log P(x, z, K)` and its sufficient statistics.
//!
//! With `theta ~ Dirichlet(alpha)` and conjugate block priors integrated out,
//! the joint mass factorizes into a prior on `K`, a multivariate Pólya term
//! over the cluster sizes `n_k`, and one marginal per block that depends only
//! on the block's total weight `y_kl` and its pair count `p_kl`.
//!
//! All quantities are in natural-log space and defined up to an additive
//! constant that does not depend on `(z, K)`; see
//! [`log_prior_k_normalizer`] and [`log_data_constant`] for the two pieces
//! needed to turn a value into a normalized `log P(x, z, K)`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::{EdgeModel, GraphKind, Network};
use crate::math::{ln_beta, ln_factorial, ln_gamma, log};

/// Marker for a node that is temporarily outside every cluster.
pub const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosteriorError {
    #[error("the number of clusters must be at least 1")]
    ZeroClusters,
    #[error("hyperparameter {name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("uniform K prior needs max_k >= 1")]
    EmptyUniformPrior,
    #[error("node {node} has label {label} outside 0..{k}")]
    AssignmentOutOfRange { node: usize, label: u32, k: usize },
    #[error("assignment has {got} entries for a network of {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("block has weight {y} on only {p} pairs")]
    CorruptBlock { y: u64, p: u64 },
    #[error("cluster {cluster} out of range 0..{k}")]
    ClusterOutOfRange { cluster: usize, k: usize },
    #[error("delta computed at revision {expected} applied at revision {found}")]
    StaleDelta { expected: u64, found: u64 },
}

/// Prior on the number of clusters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KPrior {
    /// Poisson(rate) conditioned on `K > 0`.
    TruncatedPoisson { rate: f64 },
    /// Uniform on `1..=max_k`.
    Uniform { max_k: usize },
}

impl KPrior {
    pub fn max_k(&self) -> Option<usize> {
        match *self {
            KPrior::TruncatedPoisson { .. } => None,
            KPrior::Uniform { max_k } => Some(max_k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperparameters {
    /// Symmetric Dirichlet concentration on cluster proportions.
    pub alpha: f64,
    /// Beta prior on Bernoulli block densities.
    pub beta1: f64,
    pub beta2: f64,
    /// Gamma prior (shape `s`, scale `phi`) on Poisson block rates.
    pub s: f64,
    pub phi: f64,
    pub k_prior: KPrior,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha: 1.0,
            beta1: 1.0,
            beta2: 1.0,
            s: 1.0,
            phi: 1000.0,
            k_prior: KPrior::TruncatedPoisson { rate: 1.0 },
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), PosteriorError> {
        let checks = [
            ("alpha", self.alpha),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("s", self.s),
            ("phi", self.phi),
        ];
        for (name, value) in checks {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PosteriorError::NonPositive { name, value });
            }
        }
        match self.k_prior {
            KPrior::TruncatedPoisson { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(PosteriorError::NonPositive { name: "k_prior.rate", value: rate })
            }
            KPrior::Uniform { max_k: 0 } => Err(PosteriorError::EmptyUniformPrior),
            _ => Ok(()),
        }
    }
}

/// `log P(K)` up to an additive constant.
pub fn log_prior_k(k: usize, hp: &Hyperparameters) -> Result<f64, PosteriorError> {
    if k == 0 {
        return Err(PosteriorError::ZeroClusters);
    }
    Ok(log_prior_k_unchecked(k, &hp.k_prior))
}

#[inline]
pub(crate) fn log_prior_k_unchecked(k: usize, prior: &KPrior) -> f64 {
    match *prior {
        KPrior::TruncatedPoisson { rate } => k as f64 * log(rate) - ln_factorial(k as u64),
        KPrior::Uniform { max_k } => {
            if k <= max_k {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// The constant that turns [`log_prior_k`] into a normalized log probability.
pub fn log_prior_k_normalizer(prior: &KPrior) -> f64 {
    match *prior {
        // lambda^K e^-lambda / (K! (1 - e^-lambda))
        KPrior::TruncatedPoisson { rate } => -rate - libm::log1p(-libm::exp(-rate)),
        KPrior::Uniform { max_k } => -log(max_k as f64),
    }
}

/// `-sum ln(x_ij!)`, the data-only factor dropped from the Poisson block marginal.
pub fn log_data_constant(net: &Network) -> f64 {
    match net.model() {
        EdgeModel::Binary => 0.0,
        EdgeModel::CountWeighted => -net.edges().map(|(_, _, w)| ln_factorial(w as u64)).sum::<f64>(),
    }
}

/// `p_kl` for block `(k, l)` given the cluster sizes.
pub fn pairs_in_block(k: usize, l: usize, sizes: &[u64], kind: GraphKind) -> u64 {
    kind.block_pairs(sizes[k], sizes[l], k == l)
}

/// `ln[ Gamma(alpha K) prod Gamma(n_k + alpha) / (Gamma(alpha)^K Gamma(N + alpha K)) ]`.
pub fn log_theta_marginal(sizes: &[u64], alpha: f64) -> f64 {
    let k = sizes.len() as f64;
    let n: u64 = sizes.iter().sum();
    let mut total = ln_gamma(alpha * k) - ln_gamma(n as f64 + alpha * k);
    let lg_alpha = ln_gamma(alpha);
    for &nk in sizes {
        if nk > 0 {
            total += ln_gamma(nk as f64 + alpha) - lg_alpha;
        }
    }
    total
}

/// Beta-Bernoulli block marginal `ln[ B(beta1 + y, p - y + beta2) / B(beta1, beta2) ]`.
pub fn log_block_bernoulli(y: u64, p: u64, beta1: f64, beta2: f64) -> Result<f64, PosteriorError> {
    if y > p {
        return Err(PosteriorError::CorruptBlock { y, p });
    }
    if p == 0 {
        return Ok(0.0);
    }
    Ok(ln_beta(beta1 + y as f64, (p - y) as f64 + beta2) - ln_beta(beta1, beta2))
}

/// Gamma-Poisson block marginal without the `prod 1/x_ij!` factor:
/// `ln[ Gamma(s + y) (p + 1/phi)^-(s + y) / (Gamma(s) phi^s) ]`.
pub fn log_block_poisson(y: u64, p: u64, s: f64, phi: f64) -> f64 {
    if y == 0 && p == 0 {
        return 0.0;
    }
    let sy = s + y as f64;
    ln_gamma(sy) - sy * log(p as f64 + 1.0 / phi) - ln_gamma(s) - s * log(phi)
}

/// Block and cluster-size terms with the hyperparameter constants hoisted.
#[derive(Clone, Debug)]
pub struct PosteriorTerms {
    model: EdgeModel,
    pub(crate) alpha: f64,
    ln_gamma_alpha: f64,
    beta1: f64,
    beta2: f64,
    ln_beta0: f64,
    s: f64,
    inv_phi: f64,
    poisson_const: f64,
    pub(crate) k_prior: KPrior,
}

impl PosteriorTerms {
    pub fn new(hp: &Hyperparameters, model: EdgeModel) -> Result<Self, PosteriorError> {
        hp.validate()?;
        Ok(PosteriorTerms {
            model,
            alpha: hp.alpha,
            ln_gamma_alpha: ln_gamma(hp.alpha),
            beta1: hp.beta1,
            beta2: hp.beta2,
            ln_beta0: ln_beta(hp.beta1, hp.beta2),
            s: hp.s,
            inv_phi: 1.0 / hp.phi,
            poisson_const: ln_gamma(hp.s) + hp.s * log(hp.phi),
            k_prior: hp.k_prior,
        })
    }

    /// One block's log marginal. Empty blocks contribute exactly 0.
    #[inline]
    pub fn block(&self, y: u64, p: u64) -> f64 {
        if p == 0 {
            debug_assert_eq!(y, 0);
            return 0.0;
        }
        match self.model {
            EdgeModel::Binary => {
                debug_assert!(y <= p);
                let yf = y as f64;
                ln_gamma(self.beta1 + yf) + ln_gamma((p - y) as f64 + self.beta2)
                    - ln_gamma(self.beta1 + self.beta2 + p as f64)
                    - self.ln_beta0
            }
            EdgeModel::CountWeighted => {
                let sy = self.s + y as f64;
                ln_gamma(sy) - sy * log(p as f64 + self.inv_phi) - self.poisson_const
            }
        }
    }

    #[inline]
    fn size_term(&self, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            ln_gamma(n as f64 + self.alpha) - self.ln_gamma_alpha
        }
    }

    #[inline]
    pub(crate) fn log_prior_k(&self, k: usize) -> f64 {
        log_prior_k_unchecked(k, &self.k_prior)
    }

    /// Change in `ln Gamma(alpha K) - ln Gamma(N + alpha K) - ln K!`-type terms
    /// when an empty cluster is added to a state with `k` clusters and `n` nodes.
    pub(crate) fn log_add_empty_cluster(&self, k: usize, n: usize) -> f64 {
        let a = self.alpha;
        let (kf, nf) = (k as f64, n as f64);
        self.log_prior_k(k + 1) - self.log_prior_k(k) + ln_gamma(a * (kf + 1.0)) - ln_gamma(a * kf)
            + ln_gamma(nf + a * kf)
            - ln_gamma(nf + a * (kf + 1.0))
    }
}

/// Per-cluster edge weight between one node and the currently assigned nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeTally {
    /// Weight from the node into each cluster (all incident weight when undirected).
    out: Vec<u64>,
    /// Weight from each cluster into the node (directed only).
    inn: Vec<u64>,
    self_weight: u64,
}

impl EdgeTally {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, k: usize) {
        self.out.clear();
        self.out.resize(k, 0);
        self.inn.clear();
        self.inn.resize(k, 0);
        self.self_weight = 0;
    }

    #[inline]
    fn contribution(&self, directed: bool, cluster: usize, k: usize, l: usize) -> u64 {
        if directed {
            let mut c = 0;
            if k == cluster {
                c += self.out[l];
            }
            if l == cluster {
                c += self.inn[k];
            }
            if k == cluster && l == cluster {
                c += self.self_weight;
            }
            c
        } else if k == cluster && l == cluster {
            self.out[cluster] + self.self_weight
        } else if k == cluster {
            self.out[l]
        } else if l == cluster {
            self.out[k]
        } else {
            0
        }
    }
}

/// Assignment vector with cached cluster sizes `n_k` and block weights `y_kl`.
///
/// Labels are 0-based. Nodes may be temporarily unassigned while a move is
/// being built; unassigned nodes and their edges are excluded from every
/// statistic, and the cluster-size term uses the number of assigned nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterState {
    z: Vec<u32>,
    k: usize,
    sizes: Vec<u64>,
    /// Dense `k x k`, row-major. Only `k <= l` is used when undirected.
    blocks: Vec<u64>,
    assigned: usize,
    kind: GraphKind,
    revision: u64,
}

impl ClusterState {
    /// Tallies `n` and `y` from scratch.
    pub fn from_assignment(net: &Network, z: Vec<u32>, k: usize) -> Result<Self, PosteriorError> {
        if k == 0 {
            return Err(PosteriorError::ZeroClusters);
        }
        if z.len() != net.n_nodes() {
            return Err(PosteriorError::LengthMismatch { expected: net.n_nodes(), got: z.len() });
        }
        if let Some((node, &label)) = z.iter().enumerate().find(|(_, &c)| c as usize >= k) {
            return Err(PosteriorError::AssignmentOutOfRange { node, label, k });
        }
        let mut sizes = vec![0u64; k];
        for &c in &z {
            sizes[c as usize] += 1;
        }
        let kind = net.kind();
        let mut blocks = vec![0u64; k * k];
        for (s, d, w) in net.edges() {
            let (a, b) = (z[s as usize] as usize, z[d as usize] as usize);
            let (a, b) = if kind.directed || a <= b { (a, b) } else { (b, a) };
            blocks[a * k + b] += w as u64;
        }
        let assigned = z.len();
        Ok(ClusterState { z, k, sizes, blocks, assigned, kind, revision: 0 })
    }

    #[inline]
    pub fn z(&self) -> &[u32] {
        &self.z
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    #[inline]
    pub fn assigned(&self) -> usize {
        self.assigned
    }

    #[inline]
    pub fn revision(&self) -> u64 {
        self.revision
    }

    #[inline]
    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// `K1`: number of non-empty clusters.
    pub fn n_nonempty(&self) -> usize {
        self.sizes.iter().filter(|&&n| n > 0).count()
    }

    #[inline]
    fn idx(&self, k: usize, l: usize) -> usize {
        if self.kind.directed || k <= l {
            k * self.k + l
        } else {
            l * self.k + k
        }
    }

    /// `y_kl`; for undirected networks `(k, l)` and `(l, k)` name the same block.
    #[inline]
    pub fn block_weight(&self, k: usize, l: usize) -> u64 {
        self.blocks[self.idx(k, l)]
    }

    #[inline]
    pub fn block_pairs(&self, k: usize, l: usize) -> u64 {
        self.kind.block_pairs(self.sizes[k], self.sizes[l], k == l)
    }

    /// Iterates the `(k, l)` pairs that index distinct blocks.
    pub fn block_keys(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.k;
        let directed = self.kind.directed;
        (0..k).flat_map(move |a| {
            let start = if directed { 0 } else { a };
            (start..k).map(move |b| (a, b))
        })
    }

    /// Unnormalized `log P(x, z, K)` from the cached statistics. O(K^2).
    pub fn log_posterior(&self, terms: &PosteriorTerms) -> f64 {
        let mut total = terms.log_prior_k(self.k);
        let a = terms.alpha;
        let kf = self.k as f64;
        total += ln_gamma(a * kf) - ln_gamma(self.assigned as f64 + a * kf);
        for &n in &self.sizes {
            total += terms.size_term(n);
        }
        for (k, l) in self.block_keys() {
            total += terms.block(self.block_weight(k, l), self.block_pairs(k, l));
        }
        total
    }

    /// Fills `tally` with the node's edge weight to each cluster, counting only
    /// assigned neighbors other than the node itself.
    pub fn tally(&self, net: &Network, node: usize, tally: &mut EdgeTally) {
        tally.reset(self.k);
        for &(j, w) in net.out_row(node) {
            if j as usize == node {
                tally.self_weight += w as u64;
            } else {
                let c = self.z[j as usize];
                if c != UNASSIGNED {
                    tally.out[c as usize] += w as u64;
                }
            }
        }
        if self.kind.directed {
            for &(j, w) in net.in_row(node) {
                if j as usize != node {
                    let c = self.z[j as usize];
                    if c != UNASSIGNED {
                        tally.inn[c as usize] += w as u64;
                    }
                }
            }
        }
    }

    /// Change in the log posterior when the tallied node leaves `from` (if any)
    /// and joins `to` (if any). Only the rows and columns of the touched
    /// clusters are evaluated. The state is not modified.
    pub fn change_delta(
        &self,
        terms: &PosteriorTerms,
        tally: &EdgeTally,
        from: Option<usize>,
        to: Option<usize>,
    ) -> f64 {
        if from == to {
            return 0.0;
        }
        let a = terms.alpha;
        let kf = self.k as f64;
        let before = self.assigned as u64;
        let after = before - from.is_some() as u64 + to.is_some() as u64;
        let mut delta = ln_gamma(before as f64 + a * kf) - ln_gamma(after as f64 + a * kf);
        if let Some(c) = from {
            delta += terms.size_term(self.sizes[c] - 1) - terms.size_term(self.sizes[c]);
        }
        if let Some(c) = to {
            delta += terms.size_term(self.sizes[c] + 1) - terms.size_term(self.sizes[c]);
        }

        let directed = self.kind.directed;
        let new_size = |c: usize| self.sizes[c] - (Some(c) == from) as u64 + (Some(c) == to) as u64;
        let touched = [from, to];
        let is_touched = |c: usize| Some(c) == from || Some(c) == to;
        let block = |k: usize, l: usize| {
            let y_old = self.block_weight(k, l);
            let p_old = self.block_pairs(k, l);
            let add = to.map_or(0, |c| tally.contribution(directed, c, k, l));
            let sub = from.map_or(0, |c| tally.contribution(directed, c, k, l));
            let y_new = y_old + add - sub;
            let p_new = self.kind.block_pairs(new_size(k), new_size(l), k == l);
            terms.block(y_new, p_new) - terms.block(y_old, p_old)
        };

        let mut earlier: Option<usize> = None;
        for s in touched.into_iter().flatten() {
            for l in 0..self.k {
                if directed {
                    delta += block(s, l);
                    if !is_touched(l) {
                        delta += block(l, s);
                    }
                } else if Some(l) != earlier {
                    let (x, y) = if s <= l { (s, l) } else { (l, s) };
                    delta += block(x, y);
                }
            }
            earlier = Some(s);
        }
        delta
    }

    /// Places an unassigned node into `cluster`.
    pub(crate) fn attach(&mut self, node: usize, cluster: usize, tally: &EdgeTally) {
        debug_assert_eq!(self.z[node], UNASSIGNED);
        self.add_edges(cluster, tally, true);
        self.z[node] = cluster as u32;
        self.sizes[cluster] += 1;
        self.assigned += 1;
        self.revision += 1;
    }

    /// Removes a node from its cluster, leaving it unassigned.
    pub(crate) fn detach(&mut self, node: usize, tally: &EdgeTally) {
        let cluster = self.z[node];
        debug_assert_ne!(cluster, UNASSIGNED);
        let cluster = cluster as usize;
        self.add_edges(cluster, tally, false);
        self.z[node] = UNASSIGNED;
        self.sizes[cluster] -= 1;
        self.assigned -= 1;
        self.revision += 1;
    }

    fn add_edges(&mut self, c: usize, tally: &EdgeTally, add: bool) {
        let k = self.k;
        let apply = |slot: &mut u64, w: u64| {
            if add {
                *slot += w
            } else {
                *slot -= w
            }
        };
        if self.kind.directed {
            for l in 0..k {
                apply(&mut self.blocks[c * k + l], tally.out[l]);
                apply(&mut self.blocks[l * k + c], tally.inn[l]);
            }
        } else {
            for l in 0..k {
                let i = self.idx(c, l);
                apply(&mut self.blocks[i], tally.out[l]);
            }
        }
        apply(&mut self.blocks[c * k + c], tally.self_weight);
    }

    /// Moves an assigned node between clusters using a fresh tally.
    pub(crate) fn reassign(&mut self, node: usize, to: usize, tally: &EdgeTally) {
        self.detach(node, tally);
        self.attach(node, to, tally);
    }

    /// Inserts an empty cluster with label `at`, shifting labels `>= at` up by one.
    pub fn insert_empty_cluster(&mut self, at: usize) {
        assert!(at <= self.k);
        let old = self.k;
        let k = old + 1;
        let mut blocks = vec![0u64; k * k];
        let shift = |c: usize| if c >= at { c + 1 } else { c };
        for a in 0..old {
            for b in 0..old {
                blocks[shift(a) * k + shift(b)] = self.blocks[a * old + b];
            }
        }
        self.blocks = blocks;
        self.sizes.insert(at, 0);
        for c in self.z.iter_mut() {
            if *c != UNASSIGNED && *c as usize >= at {
                *c += 1;
            }
        }
        self.k = k;
        self.revision += 1;
    }

    /// Removes the empty cluster `at`, shifting labels `> at` down by one.
    pub fn remove_empty_cluster(&mut self, at: usize) -> Result<(), PosteriorError> {
        if at >= self.k {
            return Err(PosteriorError::ClusterOutOfRange { cluster: at, k: self.k });
        }
        assert_eq!(self.sizes[at], 0, "removing a non-empty cluster");
        if self.k == 1 {
            return Err(PosteriorError::ZeroClusters);
        }
        let old = self.k;
        let k = old - 1;
        let mut blocks = vec![0u64; k * k];
        for a in (0..old).filter(|&a| a != at) {
            for b in (0..old).filter(|&b| b != at) {
                let (na, nb) = (a - (a > at) as usize, b - (b > at) as usize);
                blocks[na * k + nb] = self.blocks[a * old + b];
            }
        }
        self.blocks = blocks;
        self.sizes.remove(at);
        for c in self.z.iter_mut() {
            if *c != UNASSIGNED && *c as usize > at {
                *c -= 1;
            }
        }
        self.k = k;
        self.revision += 1;
        Ok(())
    }

    /// Restores sizes, blocks and the given node labels from a snapshot taken
    /// at the same `K`.
    pub(crate) fn restore(&mut self, snapshot: &StatsSnapshot, nodes: &[u32]) {
        debug_assert_eq!(snapshot.k, self.k);
        self.sizes.copy_from_slice(&snapshot.sizes);
        self.blocks.copy_from_slice(&snapshot.blocks);
        for (&node, &label) in nodes.iter().zip(&snapshot.labels) {
            self.z[node as usize] = label;
        }
        self.assigned = snapshot.assigned;
        self.revision += 1;
    }

    pub(crate) fn snapshot_into(&self, nodes: &[u32], snap: &mut StatsSnapshot) {
        snap.k = self.k;
        snap.sizes.clear();
        snap.sizes.extend_from_slice(&self.sizes);
        snap.blocks.clear();
        snap.blocks.extend_from_slice(&self.blocks);
        snap.labels.clear();
        snap.labels.extend(nodes.iter().map(|&i| self.z[i as usize]));
        snap.assigned = self.assigned;
    }

    /// True when `n` and `y` agree with a from-scratch recount.
    pub fn matches_recount(&self, net: &Network) -> bool {
        match ClusterState::from_assignment(net, self.z.clone(), self.k) {
            Ok(fresh) => fresh.sizes == self.sizes && self.block_keys().all(|(k, l)| {
                fresh.block_weight(k, l) == self.block_weight(k, l)
            }),
            Err(_) => false,
        }
    }
}

/// Saved statistics for rolling back a rejected multi-node proposal.
#[derive(Clone, Debug, Default)]
pub(crate) struct StatsSnapshot {
    k: usize,
    sizes: Vec<u64>,
    blocks: Vec<u64>,
    labels: Vec<u32>,
    assigned: usize,
}

impl StatsSnapshot {
    /// Saved label of the `h`-th snapshotted node.
    #[inline]
    pub(crate) fn label(&self, h: usize) -> u32 {
        self.labels[h]
    }
}

/// Tallies `n` and `y` for a complete assignment.
pub fn block_stats_from(net: &Network, z: &[u32], k: usize) -> Result<ClusterState, PosteriorError> {
    ClusterState::from_assignment(net, z.to_vec(), k)
}

/// Unnormalized `log P(x, z, K)` of a state.
pub fn log_posterior(state: &ClusterState, net: &Network, hp: &Hyperparameters) -> Result<f64, PosteriorError> {
    let terms = PosteriorTerms::new(hp, net.model())?;
    Ok(state.log_posterior(&terms))
}

/// A single-node reassignment computed against one revision of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMove {
    pub node: usize,
    pub from: usize,
    pub to: usize,
    /// `log P(after) - log P(before)`.
    pub log_delta: f64,
    tally: EdgeTally,
    revision: u64,
}

impl NodeMove {
    pub fn is_identity(&self) -> bool {
        self.from == self.to
    }
}

/// Evaluates moving `node` to cluster `to` without modifying the state.
///
/// Touches only the node's neighbors and the affected block rows and columns.
pub fn delta_log_posterior_move(
    state: &ClusterState,
    net: &Network,
    hp: &Hyperparameters,
    node: usize,
    to: usize,
) -> Result<NodeMove, PosteriorError> {
    if to >= state.k {
        return Err(PosteriorError::ClusterOutOfRange { cluster: to, k: state.k });
    }
    if node >= state.z.len() {
        return Err(PosteriorError::LengthMismatch { expected: state.z.len(), got: node + 1 });
    }
    let terms = PosteriorTerms::new(hp, net.model())?;
    let from = state.z[node] as usize;
    let mut tally = EdgeTally::new();
    state.tally(net, node, &mut tally);
    let log_delta = state.change_delta(&terms, &tally, Some(from), Some(to));
    Ok(NodeMove { node, from, to, log_delta, tally, revision: state.revision })
}

/// Applies a move computed at the state's current revision.
pub fn apply_move(state: &mut ClusterState, mv: &NodeMove) -> Result<(), PosteriorError> {
    if state.revision != mv.revision {
        return Err(PosteriorError::StaleDelta { expected: mv.revision, found: state.revision });
    }
    if mv.is_identity() {
        return Ok(());
    }
    state.reassign(mv.node, mv.to, &mv.tally);
    state.revision = mv.revision + 1;
    Ok(())
}

/// Reverts a move applied by [`apply_move`]; the state must not have changed since.
pub fn undo_move(state: &mut ClusterState, mv: &NodeMove) -> Result<(), PosteriorError> {
    let expected = if mv.is_identity() { mv.revision } else { mv.revision + 1 };
    if state.revision != expected {
        return Err(PosteriorError::StaleDelta { expected, found: state.revision });
    }
    if mv.is_identity() {
        return Ok(());
    }
    state.reassign(mv.node, mv.from, &mv.tally);
    state.revision = mv.revision + 2;
    Ok(())
}
