//! Posterior summaries, autocorrelation, marginal likelihood estimates and
//! the exact enumeration oracle for small networks.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use thiserror::Error;

use crate::graph::Network;
use crate::math::{ln_factorial, ln_falling_factorial, log, log_sum_exp};
use crate::posterior::{
    log_block_bernoulli, log_data_constant, log_prior_k_normalizer, ClusterState, Hyperparameters, KPrior,
    PosteriorError, PosteriorTerms,
};
use crate::sampler::ChainSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("no samples")]
    Empty,
    #[error("assignment length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("series too short for autocorrelation: {len} < {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("reference partition was never visited")]
    ReferenceNotVisited,
    #[error("instance too large to enumerate: {reason}")]
    TooLarge { reason: &'static str },
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
}

/// Empirical distribution of `K` and of the number of non-empty clusters `K1`.
#[derive(Clone, Debug, PartialEq)]
pub struct KPosterior {
    pub k: BTreeMap<usize, f64>,
    pub k1: BTreeMap<usize, f64>,
    /// Most frequent `K`, ties toward the smaller value.
    pub mode: usize,
    pub n_samples: u64,
}

impl KPosterior {
    /// Builds the summary from `(K, K1)` pairs.
    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Result<Self, DiagnosticsError> {
        let mut k_counts: BTreeMap<usize, u64> = BTreeMap::new();
        let mut k1_counts: BTreeMap<usize, u64> = BTreeMap::new();
        let mut n = 0u64;
        for (k, k1) in pairs {
            *k_counts.entry(k).or_default() += 1;
            *k1_counts.entry(k1).or_default() += 1;
            n += 1;
        }
        if n == 0 {
            return Err(DiagnosticsError::Empty);
        }
        let mode = mode_of(&k_counts);
        let norm = |m: BTreeMap<usize, u64>| m.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect();
        Ok(KPosterior { k: norm(k_counts), k1: norm(k1_counts), mode, n_samples: n })
    }

    pub fn p_k(&self, k: usize) -> f64 {
        self.k.get(&k).copied().unwrap_or(0.0)
    }

    pub fn p_k1(&self, k1: usize) -> f64 {
        self.k1.get(&k1).copied().unwrap_or(0.0)
    }

    /// Most probable number of non-empty clusters, ties toward the smaller value.
    pub fn k1_mode(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (&k, &p) in &self.k1 {
            if p > best.1 {
                best = (k, p);
            }
        }
        best.0
    }
}

fn mode_of(counts: &BTreeMap<usize, u64>) -> usize {
    let mut best = (0, 0);
    for (&k, &c) in counts {
        if c > best.1 {
            best = (k, c);
        }
    }
    best.0
}

pub fn k_posterior(samples: &[ChainSample]) -> Result<KPosterior, DiagnosticsError> {
    KPosterior::from_pairs(samples.iter().map(|s| (s.k, s.k1)))
}

/// Relabels clusters in order of first appearance, so that two assignments
/// inducing the same partition map to the same vector.
pub fn canonical_partition(z: &[u32]) -> Vec<u32> {
    let mut map: Vec<u32> = Vec::new();
    let mut next = 0u32;
    z.iter()
        .map(|&c| {
            let c = c as usize;
            if c >= map.len() {
                map.resize(c + 1, u32::MAX);
            }
            if map[c] == u32::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect()
}

/// True iff both assignments induce the same partition into non-empty clusters.
pub fn partition_equivalent(a: &[u32], b: &[u32]) -> Result<bool, DiagnosticsError> {
    if a.len() != b.len() {
        return Err(DiagnosticsError::LengthMismatch { expected: a.len(), got: b.len() });
    }
    let mut fwd: BTreeMap<u32, u32> = BTreeMap::new();
    let mut back: BTreeMap<u32, u32> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Integrated autocorrelation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IatResult {
    pub tau: f64,
    /// Largest autocorrelation lag included in the sum.
    pub lags_used: usize,
    /// The series was constant, so autocorrelation is undefined and `tau` is set to 1.
    pub constant: bool,
}

pub const IAT_MIN_LEN: usize = 100;

/// `tau = 1 + 2 sum rho(t)`, truncated with Geyer's initial positive sequence:
/// lags are summed in adjacent pairs until a pair sum is not positive.
pub fn iat(series: &[f64]) -> Result<IatResult, DiagnosticsError> {
    let n = series.len();
    if n < IAT_MIN_LEN {
        return Err(DiagnosticsError::SeriesTooShort { len: n, min: IAT_MIN_LEN });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let gamma0 = autocov(0);
    if gamma0 <= 0.0 || !gamma0.is_finite() {
        return Ok(IatResult { tau: 1.0, lags_used: 0, constant: true });
    }
    // Gamma_m = gamma(2m) + gamma(2m + 1); tau = (2 sum Gamma_m - gamma0) / gamma0
    let mut sum = 0.0;
    let mut m = 0;
    let mut lags_used = 0;
    while 2 * m + 1 < n {
        let pair = if m == 0 { gamma0 } else { autocov(2 * m) } + autocov(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        lags_used = 2 * m + 1;
        m += 1;
    }
    let tau = (2.0 * sum - gamma0) / gamma0;
    Ok(IatResult { tau: tau.max(0.0), lags_used, constant: false })
}

/// The most frequently visited `(K, partition)`, with the partition in canonical form.
pub fn modal_state<'a, I>(states: I) -> Result<(usize, Vec<u32>), DiagnosticsError>
where
    I: IntoIterator<Item = (usize, &'a [u32])>,
{
    let mut counts: BTreeMap<(usize, Vec<u32>), u64> = BTreeMap::new();
    for (k, z) in states {
        *counts.entry((k, canonical_partition(z))).or_default() += 1;
    }
    let mut best: Option<(&(usize, Vec<u32>), u64)> = None;
    for (key, &c) in &counts {
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((key, c));
        }
    }
    best.map(|(key, _)| key.clone()).ok_or(DiagnosticsError::Empty)
}

/// Number of labelled states `(K, z)` that induce a partition with `blocks`
/// non-empty clusters: `K! / (K - blocks)!`.
pub fn ln_orbit_size(k: usize, blocks: usize) -> f64 {
    ln_falling_factorial(k as u64, blocks as u64)
}

/// Normalized `log P(x, z, K)`: the unnormalized posterior plus the `K`
/// prior's normalizing constant and the data-only constant.
pub fn log_joint(state: &ClusterState, net: &Network, hp: &Hyperparameters) -> Result<f64, DiagnosticsError> {
    let terms = PosteriorTerms::new(hp, net.model())?;
    Ok(state.log_posterior(&terms) + log_prior_k_normalizer(&hp.k_prior) + log_data_constant(net))
}

/// Estimates `log2 P(x)` from the visit frequency of a reference state.
///
/// `P(x) = P(x, z, K) / P(z, K | x)`, where `P(z, K | x)` is the fraction of
/// samples at `K` whose partition equals that of `reference`, divided by the
/// number of labelled states sharing that partition.
pub fn estimate_log_px<'a, I>(
    states: I,
    net: &Network,
    hp: &Hyperparameters,
    reference_k: usize,
    reference: &[u32],
) -> Result<f64, DiagnosticsError>
where
    I: IntoIterator<Item = (usize, &'a [u32])>,
{
    let target = canonical_partition(reference);
    let mut hits = 0u64;
    let mut total = 0u64;
    for (k, z) in states {
        total += 1;
        if k == reference_k && partition_equivalent(z, &target)? {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(DiagnosticsError::Empty);
    }
    if hits == 0 {
        return Err(DiagnosticsError::ReferenceNotVisited);
    }
    let state = ClusterState::from_assignment(net, target, reference_k)?;
    let blocks = state.n_nonempty();
    let ln_joint = log_joint(&state, net, hp)?;
    let ln_freq = log(hits as f64 / total as f64) - ln_orbit_size(reference_k, blocks);
    Ok((ln_joint - ln_freq) / LN_2)
}

/// `log2 P(x)` when every possible edge is present independently with probability 1/2.
pub fn uniform_baseline_log2(net: &Network) -> f64 {
    -(net.kind().total_pairs(net.n_nodes() as u64) as f64)
}

/// `log2 P(x)` under a single block with a Uniform(0, 1) edge density.
pub fn erdos_renyi_baseline_log2(net: &Network) -> Result<f64, DiagnosticsError> {
    let pairs = net.kind().total_pairs(net.n_nodes() as u64);
    Ok(log_block_bernoulli(net.total_weight(), pairs, 1.0, 1.0)? / LN_2)
}

/// One set partition of the nodes at one `K`, standing for all
/// `multiplicity` labelled states with the same posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitEntry {
    pub k: usize,
    /// Canonical partition.
    pub z: Vec<u32>,
    pub blocks: usize,
    /// Normalized `log P(x, z, K)` of one labelled member.
    pub log_joint: f64,
    pub ln_multiplicity: f64,
}

/// Exact posterior over `(K, z)` for `K <= k_max`, by enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPosterior {
    pub entries: Vec<OrbitEntry>,
    /// Natural log of the marginal likelihood (restricted to `K <= k_max`).
    pub log_px: f64,
    /// `P(K | x)` indexed by `K`; index 0 is unused.
    pub p_k: Vec<f64>,
    /// `P(K1 | x)` indexed by the number of non-empty clusters.
    pub p_k1: Vec<f64>,
    /// Prior mass on `K > k_max`, left out of the enumeration.
    pub truncated_prior_mass: f64,
    pub k_max: usize,
}

impl ExactPosterior {
    /// Posterior probability of the whole orbit of an entry.
    pub fn orbit_probability(&self, e: &OrbitEntry) -> f64 {
        libm::exp(e.log_joint + e.ln_multiplicity - self.log_px)
    }

    /// Posterior probability of one labelled state.
    pub fn state_probability(&self, e: &OrbitEntry) -> f64 {
        libm::exp(e.log_joint - self.log_px)
    }

    pub fn log2_px(&self) -> f64 {
        self.log_px / LN_2
    }

    /// Orbit probabilities keyed by `(K, canonical partition)`.
    pub fn orbit_map(&self) -> BTreeMap<(usize, Vec<u32>), f64> {
        self.entries.iter().map(|e| ((e.k, e.z.clone()), self.orbit_probability(e))).collect()
    }
}

pub const ORACLE_MAX_NODES: usize = 8;
pub const ORACLE_MAX_K: usize = 12;

/// Enumerates every set partition and every `K` from its block count to `k_max`.
///
/// Each partition with `b` blocks at a given `K` stands for `K!/(K-b)!`
/// labelled assignments with identical posterior, so the sum over partitions
/// weighted by that count equals the sum over all `K^N` labelled states.
pub fn exact_posterior_small(net: &Network, hp: &Hyperparameters, k_max: usize) -> Result<ExactPosterior, DiagnosticsError> {
    let n = net.n_nodes();
    if n == 0 {
        return Err(DiagnosticsError::TooLarge { reason: "network has no nodes" });
    }
    if n > ORACLE_MAX_NODES {
        return Err(DiagnosticsError::TooLarge { reason: "more than 8 nodes" });
    }
    if k_max == 0 || k_max > ORACLE_MAX_K {
        return Err(DiagnosticsError::TooLarge { reason: "k_max must be between 1 and 12" });
    }
    let k_max = match hp.k_prior {
        KPrior::Uniform { max_k } => k_max.min(max_k),
        KPrior::TruncatedPoisson { .. } => k_max,
    };
    let terms = PosteriorTerms::new(hp, net.model())?;
    let constant = log_prior_k_normalizer(&hp.k_prior) + log_data_constant(net);

    let mut entries = Vec::new();
    let mut z = vec![0u32; n];
    loop {
        let blocks = z.iter().copied().max().map_or(0, |m| m as usize + 1);
        if blocks <= k_max {
            let mut state = ClusterState::from_assignment(net, z.clone(), blocks)?;
            for k in blocks..=k_max {
                if k > blocks {
                    state.insert_empty_cluster(k - 1);
                }
                entries.push(OrbitEntry {
                    k,
                    z: z.clone(),
                    blocks,
                    log_joint: state.log_posterior(&terms) + constant,
                    ln_multiplicity: ln_orbit_size(k, blocks),
                });
            }
        }
        if !next_restricted_growth(&mut z) {
            break;
        }
    }

    let weights: Vec<f64> = entries.iter().map(|e| e.log_joint + e.ln_multiplicity).collect();
    let log_px = log_sum_exp(&weights);
    let mut p_k = vec![0.0; k_max + 1];
    let mut p_k1 = vec![0.0; k_max + 1];
    for (e, w) in entries.iter().zip(&weights) {
        let p = libm::exp(w - log_px);
        p_k[e.k] += p;
        p_k1[e.blocks] += p;
    }
    Ok(ExactPosterior {
        entries,
        log_px,
        p_k,
        p_k1,
        truncated_prior_mass: prior_tail(&hp.k_prior, k_max),
        k_max,
    })
}

/// Normalized prior mass on `K > k_max`.
fn prior_tail(prior: &KPrior, k_max: usize) -> f64 {
    match *prior {
        KPrior::Uniform { .. } => 0.0,
        KPrior::TruncatedPoisson { rate } => {
            let norm = log_prior_k_normalizer(prior);
            let mut tail = 0.0;
            for k in k_max + 1..k_max + 200 {
                let term = libm::exp(k as f64 * log(rate) - ln_factorial(k as u64) + norm);
                tail += term;
                if term < 1e-300 {
                    break;
                }
            }
            tail
        }
    }
}

/// Advances a restricted growth string (`z[0] = 0`, `z[i] <= 1 + max(z[..i])`).
/// Returns false after the last one.
fn next_restricted_growth(z: &mut [u32]) -> bool {
    let n = z.len();
    for i in (1..n).rev() {
        let prefix_max = z[..i].iter().copied().max().unwrap_or(0);
        if z[i] <= prefix_max {
            z[i] += 1;
            for v in &mut z[i + 1..] {
                *v = 0;
            }
            return true;
        }
    }
    false
}

/// Counts `(K, canonical partition)` visits from a sample stream.
pub fn orbit_frequencies<'a, I>(states: I) -> BTreeMap<(usize, Vec<u32>), f64>
where
    I: IntoIterator<Item = (usize, &'a [u32])>,
{
    let mut counts: BTreeMap<(usize, Vec<u32>), u64> = BTreeMap::new();
    let mut total = 0u64;
    for (k, z) in states {
        *counts.entry((k, canonical_partition(z))).or_default() += 1;
        total += 1;
    }
    counts.into_iter().map(|(key, c)| (key, c as f64 / total as f64)).collect()
}

/// Total-variation distance between two distributions over the same keys.
pub fn total_variation<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut sum = 0.0;
    for (key, &p) in a {
        sum += (p - b.get(key).copied().unwrap_or(0.0)).abs();
    }
    for (key, &q) in b {
        if !a.contains_key(key) {
            sum += q;
        }
    }
    sum / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeModel, GraphKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k_posterior_examples() {
        let kp = KPosterior::from_pairs([(3, 3); 5]).unwrap();
        assert_eq!(kp.p_k(3), 1.0);
        assert_eq!(kp.mode, 3);
        let kp = KPosterior::from_pairs([(1, 1), (2, 1), (1, 1), (2, 2)]).unwrap();
        assert_eq!(kp.p_k(1), 0.5);
        assert_eq!(kp.p_k(2), 0.5);
        assert_eq!(kp.mode, 1);
        assert!(KPosterior::from_pairs([]).is_err());
    }

    #[test]
    fn partition_equivalence_examples() {
        assert!(partition_equivalent(&[0, 0, 1], &[1, 1, 0]).unwrap());
        assert!(partition_equivalent(&[0, 0, 2], &[0, 0, 1]).unwrap());
        assert!(!partition_equivalent(&[0, 1, 1], &[0, 0, 1]).unwrap());
        assert!(!partition_equivalent(&[0, 0], &[0, 1]).unwrap());
        assert!(partition_equivalent(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn canonical_form() {
        assert_eq!(canonical_partition(&[3, 3, 1, 0, 1]), vec![0, 0, 1, 2, 1]);
    }

    #[test]
    fn restricted_growth_counts_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203, 877, 4140];
        for n in 1..=8 {
            let mut z = vec![0u32; n];
            let mut count = 1;
            while next_restricted_growth(&mut z) {
                count += 1;
            }
            assert_eq!(count, bell[n], "n = {n}");
        }
    }

    #[test]
    fn iat_white_noise_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let r = iat(&x).unwrap();
        assert!((r.tau - 1.0).abs() < 0.1, "{}", r.tau);
        let r = iat(&[2.0; 200]).unwrap();
        assert!(r.constant);
        assert_eq!(r.tau, 1.0);
        assert!(iat(&[1.0; 10]).is_err());
    }

    fn brute_force(net: &Network, hp: &Hyperparameters, k_max: usize) -> (f64, Vec<f64>) {
        let n = net.n_nodes();
        let mut all = Vec::new();
        let mut p_k_log = vec![Vec::new(); k_max + 1];
        for k in 1..=k_max {
            let mut z = vec![0u32; n];
            loop {
                let state = ClusterState::from_assignment(net, z.clone(), k).unwrap();
                let lj = log_joint(&state, net, hp).unwrap();
                all.push(lj);
                p_k_log[k].push(lj);
                let mut i = 0;
                while i < n {
                    z[i] += 1;
                    if (z[i] as usize) < k {
                        break;
                    }
                    z[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        let log_px = log_sum_exp(&all);
        let p_k = p_k_log.iter().map(|v| if v.is_empty() { 0.0 } else { libm::exp(log_sum_exp(v) - log_px) }).collect();
        (log_px, p_k)
    }

    #[test]
    fn oracle_matches_labelled_enumeration() {
        let net = crate::graph::parse_edge_list("0 1\n1 2\n2 0\n3 3\n", GraphKind::new(true, true), EdgeModel::Binary).unwrap();
        let hp = Hyperparameters::default();
        let exact = exact_posterior_small(&net, &hp, 5).unwrap();
        let (log_px, p_k) = brute_force(&net, &hp, 5);
        assert!((exact.log_px - log_px).abs() < 1e-10);
        for k in 1..=5 {
            assert!((exact.p_k[k] - p_k[k]).abs() < 1e-12);
        }
        let total: f64 = exact.entries.iter().map(|e| exact.orbit_probability(e)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let k1_total: f64 = exact.p_k1.iter().sum();
        assert!((k1_total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_single_node() {
        let net = Network::empty(1, GraphKind::UNDIRECTED, EdgeModel::Binary);
        let exact = exact_posterior_small(&net, &Hyperparameters::default(), 6).unwrap();
        assert!((exact.p_k1[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let net = Network::empty(9, GraphKind::UNDIRECTED, EdgeModel::Binary);
        assert!(exact_posterior_small(&net, &Hyperparameters::default(), 4).is_err());
        let net = Network::empty(3, GraphKind::UNDIRECTED, EdgeModel::Binary);
        assert!(exact_posterior_small(&net, &Hyperparameters::default(), 13).is_err());
    }

    #[test]
    fn poisson_prior_tail_is_small() {
        let tail = prior_tail(&KPrior::TruncatedPoisson { rate: 1.0 }, 12);
        assert!(tail > 0.0 && tail < 1e-9);
    }

    #[test]
    fn baselines() {
        let net = crate::graph::parse_edge_list("nodes=4\n0 1\n", GraphKind::DIRECTED, EdgeModel::Binary).unwrap();
        assert_eq!(uniform_baseline_log2(&net), -12.0);
        let er = erdos_renyi_baseline_log2(&net).unwrap();
        let expected = log_block_bernoulli(1, 12, 1.0, 1.0).unwrap() / LN_2;
        assert_eq!(er, expected);
    }

    #[test]
    fn modal_state_picks_most_visited_partition() {
        let a = [0u32, 0, 1];
        let b = [1u32, 1, 0];
        let c = [0u32, 1, 1];
        let states: [(usize, &[u32]); 3] = [(2, &a), (2, &b), (2, &c)];
        assert_eq!(modal_state(states).unwrap(), (2, vec![0, 0, 1]));
    }
}
