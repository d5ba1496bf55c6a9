//! Label unswitching and membership summaries.
//!
//! States are processed in order of increasing number of non-empty clusters.
//! Each state is relabelled by the permutation that minimizes its summed
//! disagreement with every previously relabelled state. The running tallies
//! are a label x node count matrix, so one state costs `O(K N + K^3)`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::assignment;
use crate::sampler::ChainSample;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelabelError {
    #[error("assignment length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no samples to summarize")]
    Empty,
}

impl AsRef<[u32]> for ChainSample {
    fn as_ref(&self) -> &[u32] {
        &self.z
    }
}

/// Number of positions at which two labelled assignments differ.
pub fn distance(a: &[u32], b: &[u32]) -> Result<usize, RelabelError> {
    if a.len() != b.len() {
        return Err(RelabelError::LengthMismatch { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Number of distinct labels needed to cover `z` (largest label plus one).
fn label_span(z: &[u32]) -> usize {
    z.iter().map(|&c| c as usize + 1).max().unwrap_or(0)
}

/// Number of distinct labels used.
pub fn nonempty_count(z: &[u32]) -> usize {
    let mut seen = vec![false; label_span(z)];
    let mut n = 0;
    for &c in z {
        if !seen[c as usize] {
            seen[c as usize] = true;
            n += 1;
        }
    }
    n
}

/// Accumulated label x node counts over the states relabelled so far.
#[derive(Clone, Debug, Default)]
pub struct Tallies {
    n_nodes: usize,
    n_labels: usize,
    /// `counts[label * n_nodes + node]`.
    counts: Vec<u64>,
    total: u64,
}

impl Tallies {
    pub fn new(n_nodes: usize) -> Self {
        Tallies { n_nodes, n_labels: 0, counts: Vec::new(), total: 0 }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// Number of states added.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, label: usize, node: usize) -> u64 {
        if label < self.n_labels {
            self.counts[label * self.n_nodes + node]
        } else {
            0
        }
    }

    fn grow(&mut self, labels: usize) {
        if labels > self.n_labels {
            self.counts.resize(labels * self.n_nodes, 0);
            self.n_labels = labels;
        }
    }

    pub fn add(&mut self, z: &[u32]) -> Result<(), RelabelError> {
        if z.len() != self.n_nodes {
            return Err(RelabelError::LengthMismatch { expected: self.n_nodes, got: z.len() });
        }
        self.grow(label_span(z));
        for (i, &c) in z.iter().enumerate() {
            self.counts[c as usize * self.n_nodes + i] += 1;
        }
        self.total += 1;
        Ok(())
    }
}

/// Permutation `perm[old] = new` minimizing the summed distance between the
/// relabelled `z` and every state in `tallies`.
///
/// Among optimal permutations, the one that moves the fewest labels is
/// returned, so an already optimal labelling is kept as is.
pub fn best_relabel(z: &[u32], tallies: &Tallies) -> Result<Vec<usize>, RelabelError> {
    if z.len() != tallies.n_nodes {
        return Err(RelabelError::LengthMismatch { expected: tallies.n_nodes, got: z.len() });
    }
    let m = label_span(z).max(tallies.n_labels);
    let mut cost = vec![0i64; m * m];
    relabel_cost(z, tallies, m, &mut cost);
    Ok(assignment::solve(&cost, m))
}

/// Fills the tie-broken `m x m` cost matrix: `(disagreement) * (m + 1) + [a != b]`.
fn relabel_cost(z: &[u32], tallies: &Tallies, m: usize, cost: &mut [i64]) {
    let n = tallies.n_nodes;
    let total = tallies.total as i64;
    cost.fill(0);
    // cost[a][b] = sum over nodes labelled a of (total - count[b][node])
    for (i, &a) in z.iter().enumerate() {
        let row = &mut cost[a as usize * m..(a as usize + 1) * m];
        for (b, slot) in row.iter_mut().enumerate() {
            let c = if b < tallies.n_labels { tallies.counts[b * n + i] as i64 } else { 0 };
            *slot += total - c;
        }
    }
    let scale = m as i64 + 1;
    for a in 0..m {
        for b in 0..m {
            cost[a * m + b] = cost[a * m + b] * scale + (a != b) as i64;
        }
    }
}

/// Online relabeller: each pushed state is relabelled against all earlier ones.
#[derive(Clone, Debug)]
pub struct Relabeller {
    tallies: Tallies,
    cost: Vec<i64>,
    out: Vec<u32>,
}

impl Relabeller {
    pub fn new(n_nodes: usize) -> Self {
        Relabeller { tallies: Tallies::new(n_nodes), cost: Vec::new(), out: Vec::new() }
    }

    /// Relabels `z`, adds it to the tallies and returns the relabelled state.
    pub fn push(&mut self, z: &[u32]) -> Result<&[u32], RelabelError> {
        let n = self.tallies.n_nodes;
        if z.len() != n {
            return Err(RelabelError::LengthMismatch { expected: n, got: z.len() });
        }
        self.out.clear();
        if self.tallies.total == 0 {
            self.out.extend_from_slice(z);
        } else {
            let m = label_span(z).max(self.tallies.n_labels);
            self.cost.resize(m * m, 0);
            relabel_cost(z, &self.tallies, m, &mut self.cost[..m * m]);
            let perm = assignment::solve(&self.cost[..m * m], m);
            self.out.extend(z.iter().map(|&c| perm[c as usize] as u32));
        }
        self.tallies.add(&self.out)?;
        Ok(&self.out)
    }

    pub fn tallies(&self) -> &Tallies {
        &self.tallies
    }

    pub fn membership(&self) -> Result<MembershipMatrix, RelabelError> {
        MembershipMatrix::from_tallies(&self.tallies)
    }
}

/// Posterior node-to-cluster membership probabilities after relabelling.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipMatrix {
    n_nodes: usize,
    n_clusters: usize,
    /// Row-major `n_nodes x n_clusters`.
    probs: Vec<f64>,
}

impl MembershipMatrix {
    pub fn from_tallies(t: &Tallies) -> Result<Self, RelabelError> {
        if t.total == 0 {
            return Err(RelabelError::Empty);
        }
        let (n, k) = (t.n_nodes, t.n_labels);
        let mut probs = vec![0.0; n * k];
        let total = t.total as f64;
        for i in 0..n {
            for c in 0..k {
                probs[i * k + c] = t.counts[c * n + i] as f64 / total;
            }
        }
        Ok(MembershipMatrix { n_nodes: n, n_clusters: k, probs })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn get(&self, node: usize, cluster: usize) -> f64 {
        self.probs[node * self.n_clusters + cluster]
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.probs[node * self.n_clusters..(node + 1) * self.n_clusters]
    }
}

/// Relabelled states, in processing order, with their input positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Unswitched {
    /// Input index of each relabelled state.
    pub order: Vec<usize>,
    pub states: Vec<Vec<u32>>,
    pub membership: MembershipMatrix,
}

/// Sorts states by number of non-empty clusters (stable) and relabels them online.
pub fn unswitch<S: AsRef<[u32]>>(samples: &[S]) -> Result<Unswitched, RelabelError> {
    let first = samples.first().ok_or(RelabelError::Empty)?;
    let n = first.as_ref().len();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let k1: Vec<usize> = samples.iter().map(|s| nonempty_count(s.as_ref())).collect();
    order.sort_by_key(|&i| k1[i]);
    let mut relabeller = Relabeller::new(n);
    let mut states = Vec::with_capacity(samples.len());
    for &i in &order {
        states.push(relabeller.push(samples[i].as_ref())?.to_vec());
    }
    Ok(Unswitched { order, states, membership: relabeller.membership()? })
}

/// Symmetric matrix of the fraction of states in which two nodes share a cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct CoClusterMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CoClusterMatrix {
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Accumulates co-clustering counts one state at a time.
#[derive(Clone, Debug)]
pub struct CoClusterCounter {
    n: usize,
    counts: Vec<u64>,
    total: u64,
    groups: Vec<Vec<u32>>,
}

impl CoClusterCounter {
    pub fn new(n: usize) -> Self {
        CoClusterCounter { n, counts: vec![0; n * n], total: 0, groups: Vec::new() }
    }

    pub fn add(&mut self, z: &[u32]) -> Result<(), RelabelError> {
        if z.len() != self.n {
            return Err(RelabelError::LengthMismatch { expected: self.n, got: z.len() });
        }
        let span = label_span(z);
        if self.groups.len() < span {
            self.groups.resize_with(span, Vec::new);
        }
        for g in &mut self.groups {
            g.clear();
        }
        for (i, &c) in z.iter().enumerate() {
            self.groups[c as usize].push(i as u32);
        }
        for g in &self.groups {
            for (h, &i) in g.iter().enumerate() {
                for &j in &g[h + 1..] {
                    self.counts[i as usize * self.n + j as usize] += 1;
                }
            }
        }
        self.total += 1;
        Ok(())
    }

    pub fn finish(&self) -> Result<CoClusterMatrix, RelabelError> {
        if self.total == 0 {
            return Err(RelabelError::Empty);
        }
        let n = self.n;
        let total = self.total as f64;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in i + 1..n {
                let v = self.counts[i * n + j] as f64 / total;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(CoClusterMatrix { n, values })
    }
}

/// Co-clustering probabilities; invariant to labelling, so no relabelling is needed.
pub fn coclustering<S: AsRef<[u32]>>(samples: &[S]) -> Result<CoClusterMatrix, RelabelError> {
    let first = samples.first().ok_or(RelabelError::Empty)?;
    let mut counter = CoClusterCounter::new(first.as_ref().len());
    for s in samples {
        counter.add(s.as_ref())?;
    }
    counter.finish()
}
