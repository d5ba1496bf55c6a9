//! Synthetic networks drawn from the block model.
//!
//! Block parameters are either given or drawn from a prior, nodes are
//! assigned to clusters, and then each pair of nodes is connected with the
//! probability (or Poisson rate) of its block. Undirected networks use only
//! the diagonal and upper triangle of `pi`.
//!
//! Networks of up to [`DENSE_MAX_NODES`] nodes are drawn pair by pair. Larger
//! ones draw each block's edge count first (binomial, or Poisson for counts)
//! and then place the edges uniformly over the block's pairs, which has the
//! same distribution without visiting every pair.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson};
use thiserror::Error;

use crate::graph::{EdgeModel, GraphError, GraphKind, Network};

pub const DENSE_MAX_NODES: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("pi[{k}][{l}] = {value} is outside [0, 1] for binary edges")]
    PiOutOfRange { k: usize, l: usize, value: f64 },
    #[error("pi[{k}][{l}] = {value} must be a finite non-negative rate")]
    InvalidRate { k: usize, l: usize, value: f64 },
    #[error("noise level {0} is outside [0, 0.5]")]
    InvalidDelta(f64),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(&'static str),
    #[error("{nodes} nodes exceed the budget of {budget}")]
    BudgetExceeded { nodes: usize, budget: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// How cluster sizes are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum SizeSpec {
    /// Fixed sizes; cluster `k` gets a contiguous range of node ids.
    Explicit(Vec<usize>),
    /// `n` nodes, each assigned independently from the proportions.
    Proportions { n: usize, theta: ThetaSpec },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ThetaSpec {
    Fixed(Vec<f64>),
    /// Symmetric Dirichlet with this concentration.
    Dirichlet(f64),
}

/// How the block densities or rates are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum PiSpec {
    /// Row-major `K x K`.
    Matrix(Vec<f64>),
    BetaDraw(f64, f64),
    UniformRange(f64, f64),
    /// Gamma with shape `s` and scale `phi`.
    GammaDraw(f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub k: usize,
    pub sizes: SizeSpec,
    pub pi: PiSpec,
    pub kind: GraphKind,
    pub model: EdgeModel,
    /// Noise level applied to binary densities after they are set or drawn.
    pub delta: f64,
    pub seed: u64,
}

/// A generated network with its planted assignment and block parameters.
#[derive(Clone, Debug)]
pub struct Generated {
    pub network: Network,
    pub z: Vec<u32>,
    /// Row-major `K x K`; for undirected networks the lower triangle mirrors the upper.
    pub pi: Vec<f64>,
}

/// Summary of a network streamed to a sink.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamedNetwork {
    pub n_nodes: usize,
    pub z: Vec<u32>,
    pub pi: Vec<f64>,
    pub n_edges: u64,
    pub total_weight: u64,
}

/// `pi_kl -> delta + pi_kl (1 - 2 delta)`.
pub fn noise_scale(pi: &[f64], delta: f64) -> Result<Vec<f64>, SynthError> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(SynthError::InvalidDelta(delta));
    }
    Ok(pi.iter().map(|&p| delta + p * (1.0 - 2.0 * delta)).collect())
}

/// Draws a network and returns it with the planted assignment.
pub fn generate(params: &GeneratorParams) -> Result<Generated, SynthError> {
    let mut edges = Vec::new();
    let out = generate_streaming(params, |s, d, w| edges.push((s, d, w)))?;
    let network = Network::from_edges(out.n_nodes, params.kind, params.model, edges)?;
    Ok(Generated { network, z: out.z, pi: out.pi })
}

/// Draws a network, passing each edge `(src, dst, weight)` to `sink` instead
/// of building it in memory. Undirected edges have `src <= dst`.
pub fn generate_streaming<F>(params: &GeneratorParams, mut sink: F) -> Result<StreamedNetwork, SynthError>
where
    F: FnMut(u32, u32, u32),
{
    let k = params.k;
    if k == 0 {
        return Err(SynthError::InvalidParams("K must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let z = draw_assignment(&params.sizes, k, &mut rng)?;
    let mut pi = draw_pi(&params.pi, k, params.model, &mut rng)?;
    if !params.kind.directed {
        for a in 0..k {
            for b in 0..a {
                pi[a * k + b] = pi[b * k + a];
            }
        }
    }
    if params.delta != 0.0 {
        if params.model != EdgeModel::Binary {
            return Err(SynthError::InvalidParams("noise applies to binary edges only"));
        }
        pi = noise_scale(&pi, params.delta)?;
    }
    check_pi(&pi, k, params.model)?;

    let n = z.len();
    let mut members = vec![Vec::new(); k];
    for (i, &c) in z.iter().enumerate() {
        members[c as usize].push(i as u32);
    }
    let dense = n <= DENSE_MAX_NODES;
    let mut n_edges = 0u64;
    let mut total_weight = 0u64;
    let mut emit = |s: u32, d: u32, w: u32| {
        n_edges += 1;
        total_weight += w as u64;
        sink(s, d, w);
    };
    for a in 0..k {
        let cols = if params.kind.directed { 0 } else { a };
        for b in cols..k {
            let block = Block::new(&members[a], &members[b], a == b, params.kind);
            let rate = pi[a * k + b];
            if dense {
                block.dense(params.model, rate, &mut rng, &mut emit);
            } else {
                block.sparse(params.model, rate, &mut rng, &mut emit);
            }
        }
    }
    Ok(StreamedNetwork { n_nodes: n, z, pi, n_edges, total_weight })
}

fn draw_assignment(sizes: &SizeSpec, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<u32>, SynthError> {
    match sizes {
        SizeSpec::Explicit(s) => {
            if s.len() != k {
                return Err(SynthError::InvalidParams("number of sizes must equal K"));
            }
            Ok(s.iter().enumerate().flat_map(|(c, &m)| core::iter::repeat_n(c as u32, m)).collect())
        }
        SizeSpec::Proportions { n, theta } => {
            let weights = match theta {
                ThetaSpec::Fixed(t) => {
                    if t.len() != k || t.iter().any(|&w| !(w >= 0.0 && w.is_finite())) || t.iter().sum::<f64>() <= 0.0 {
                        return Err(SynthError::InvalidParams("proportions must be K non-negative weights"));
                    }
                    t.clone()
                }
                ThetaSpec::Dirichlet(alpha) => {
                    let g = Gamma::new(*alpha, 1.0).map_err(|_| SynthError::InvalidParams("Dirichlet concentration must be positive"))?;
                    (0..k).map(|_| g.sample(rng)).collect()
                }
            };
            let total: f64 = weights.iter().sum();
            Ok((0..*n)
                .map(|_| {
                    let u = rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    for (c, &w) in weights.iter().enumerate() {
                        acc += w;
                        if u < acc {
                            return c as u32;
                        }
                    }
                    (k - 1) as u32
                })
                .collect())
        }
    }
}

fn draw_pi(spec: &PiSpec, k: usize, model: EdgeModel, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, SynthError> {
    let bad = SynthError::InvalidParams;
    match *spec {
        PiSpec::Matrix(ref m) => {
            if m.len() != k * k {
                return Err(bad("pi must have K x K entries"));
            }
            Ok(m.clone())
        }
        PiSpec::BetaDraw(a, b) => {
            if model != EdgeModel::Binary {
                return Err(bad("a Beta prior on pi needs binary edges"));
            }
            let d = Beta::new(a, b).map_err(|_| bad("Beta parameters must be positive"))?;
            Ok((0..k * k).map(|_| d.sample(rng)).collect())
        }
        PiSpec::UniformRange(lo, hi) => {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return Err(bad("uniform range must satisfy lo <= hi"));
            }
            Ok((0..k * k).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
        }
        PiSpec::GammaDraw(s, phi) => {
            if model != EdgeModel::CountWeighted {
                return Err(bad("a Gamma prior on pi needs count edges"));
            }
            let d = Gamma::new(s, phi).map_err(|_| bad("Gamma parameters must be positive"))?;
            Ok((0..k * k).map(|_| d.sample(rng)).collect())
        }
    }
}

fn check_pi(pi: &[f64], k: usize, model: EdgeModel) -> Result<(), SynthError> {
    for a in 0..k {
        for b in 0..k {
            let value = pi[a * k + b];
            match model {
                EdgeModel::Binary if !(0.0..=1.0).contains(&value) => {
                    return Err(SynthError::PiOutOfRange { k: a, l: b, value })
                }
                EdgeModel::CountWeighted if !(value >= 0.0 && value.is_finite()) => {
                    return Err(SynthError::InvalidRate { k: a, l: b, value })
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// The candidate node pairs between two clusters, indexed `0..pairs`.
struct Block<'a> {
    rows: &'a [u32],
    cols: &'a [u32],
    diagonal: bool,
    kind: GraphKind,
    pairs: u64,
}

impl<'a> Block<'a> {
    fn new(rows: &'a [u32], cols: &'a [u32], diagonal: bool, kind: GraphKind) -> Self {
        let pairs = kind.block_pairs(rows.len() as u64, cols.len() as u64, diagonal);
        Block { rows, cols, diagonal, kind, pairs }
    }

    /// Local `(row, col)` of pair `idx`.
    fn decode(&self, idx: u64) -> (usize, usize) {
        let n = self.rows.len() as u64;
        if !self.diagonal {
            let m = self.cols.len() as u64;
            return ((idx / m) as usize, (idx % m) as usize);
        }
        match (self.kind.directed, self.kind.self_loops) {
            (true, true) => ((idx / n) as usize, (idx % n) as usize),
            (true, false) => {
                let a = idx / (n - 1);
                let r = idx % (n - 1);
                (a as usize, (r + (r >= a) as u64) as usize)
            }
            // Column-major upper triangle: pairs before column b number b(b+1)/2 or b(b-1)/2.
            (false, loops) => {
                let before = |b: u64| if loops { b * (b + 1) / 2 } else { b * b.saturating_sub(1) / 2 };
                let mut b = if loops {
                    ((libm::sqrt(8.0 * idx as f64 + 1.0) - 1.0) / 2.0) as u64
                } else {
                    ((libm::sqrt(8.0 * idx as f64 + 1.0) + 1.0) / 2.0) as u64
                };
                while before(b) > idx {
                    b -= 1;
                }
                while before(b + 1) <= idx {
                    b += 1;
                }
                ((idx - before(b)) as usize, b as usize)
            }
        }
    }

    fn emit<F: FnMut(u32, u32, u32)>(&self, idx: u64, w: u32, emit: &mut F) {
        let (a, b) = self.decode(idx);
        let (s, d) = (self.rows[a], self.cols[b]);
        if self.kind.directed || s <= d {
            emit(s, d, w);
        } else {
            emit(d, s, w);
        }
    }

    fn dense<F: FnMut(u32, u32, u32)>(&self, model: EdgeModel, rate: f64, rng: &mut ChaCha8Rng, emit: &mut F) {
        if rate <= 0.0 {
            return;
        }
        match model {
            EdgeModel::Binary => {
                for idx in 0..self.pairs {
                    if rng.random::<f64>() < rate {
                        self.emit(idx, 1, emit);
                    }
                }
            }
            EdgeModel::CountWeighted => {
                let d = Poisson::new(rate).expect("rate is positive and finite");
                for idx in 0..self.pairs {
                    let w = d.sample(rng) as u32;
                    if w > 0 {
                        self.emit(idx, w, emit);
                    }
                }
            }
        }
    }

    fn sparse<F: FnMut(u32, u32, u32)>(&self, model: EdgeModel, rate: f64, rng: &mut ChaCha8Rng, emit: &mut F) {
        if rate <= 0.0 || self.pairs == 0 {
            return;
        }
        match model {
            EdgeModel::Binary => {
                let count = Binomial::new(self.pairs, rate).expect("density is in [0, 1]").sample(rng);
                let mut chosen = index::sample(rng, self.pairs as usize, count as usize).into_vec();
                chosen.sort_unstable();
                for idx in chosen {
                    self.emit(idx as u64, 1, emit);
                }
            }
            EdgeModel::CountWeighted => {
                let total = Poisson::new(rate * self.pairs as f64).expect("rate is positive and finite").sample(rng) as u64;
                let mut hits: Vec<u64> = (0..total).map(|_| rng.random_range(0..self.pairs)).collect();
                hits.sort_unstable();
                let mut i = 0;
                while i < hits.len() {
                    let mut j = i;
                    while j < hits.len() && hits[j] == hits[i] {
                        j += 1;
                    }
                    self.emit(hits[i], (j - i) as u32, emit);
                    i = j;
                }
            }
        }
    }
}

/// Community network with a hub cluster: cluster 0 connects to everything
/// with density `lambda`, every cluster is internally dense with density
/// `lambda`, and other pairs of clusters have density `epsilon`. Nodes are
/// assigned to clusters uniformly at random. The network is undirected
/// without self-loops.
pub fn generate_community(n: usize, k: usize, lambda: f64, epsilon: f64, seed: u64) -> Result<Generated, SynthError> {
    if !(0.0..=1.0).contains(&lambda) || !(0.0..=1.0).contains(&epsilon) {
        return Err(SynthError::InvalidParams("lambda and epsilon must be in [0, 1]"));
    }
    if k == 0 {
        return Err(SynthError::InvalidParams("K must be at least 1"));
    }
    let mut pi = vec![epsilon; k * k];
    for a in 0..k {
        pi[a * k + a] = lambda;
        pi[a] = lambda;
        pi[a * k] = lambda;
    }
    generate(&GeneratorParams {
        k,
        sizes: SizeSpec::Proportions { n, theta: ThetaSpec::Fixed(vec![1.0; k]) },
        pi: PiSpec::Matrix(pi),
        kind: GraphKind::UNDIRECTED,
        model: EdgeModel::Binary,
        delta: 0.0,
        seed,
    })
}

/// `K` clusters of `per_cluster` nodes each, block densities drawn from
/// Uniform(0, `density_cap`), edges streamed to `sink`.
pub fn generate_large<F>(
    k: usize,
    per_cluster: usize,
    density_cap: f64,
    kind: GraphKind,
    seed: u64,
    node_budget: usize,
    sink: F,
) -> Result<StreamedNetwork, SynthError>
where
    F: FnMut(u32, u32, u32),
{
    let nodes = k.checked_mul(per_cluster).ok_or(SynthError::InvalidParams("K x O overflows"))?;
    if nodes > node_budget || nodes > u32::MAX as usize {
        return Err(SynthError::BudgetExceeded { nodes, budget: node_budget });
    }
    if !(0.0..=1.0).contains(&density_cap) {
        return Err(SynthError::InvalidParams("density cap must be in [0, 1]"));
    }
    let params = GeneratorParams {
        k,
        sizes: SizeSpec::Explicit(vec![per_cluster; k]),
        pi: PiSpec::UniformRange(0.0, density_cap),
        kind,
        model: EdgeModel::Binary,
        delta: 0.0,
        seed,
    };
    generate_streaming(&params, sink)
}
