//! Weighted DAGs: representation, random generation, transitive closure,
//! acyclicity checking, and thresholding.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A weighted adjacency matrix whose nonzero pattern is guaranteed acyclic
/// with no self-loops. Entry (i, j) is the weight of edge i -> j; zero
/// means no edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDag {
    weights: Array2<f64>,
}

impl WeightedDag {
    /// Validates and wraps a weight matrix. Fails with [`Error::NotADag`]
    /// if any diagonal entry is nonzero or the nonzero pattern has a cycle.
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        let d = weights.nrows();
        if weights.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "adjacency matrix must be square, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if (0..d).any(|i| weights[[i, i]] != 0.0) {
            return Err(Error::NotADag);
        }
        if topological_order(&weights, 0.0).is_none() {
            return Err(Error::NotADag);
        }
        Ok(Self { weights })
    }

    /// Builds a DAG from an explicit edge list on `d` nodes.
    pub fn from_edges(d: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = Array2::zeros((d, d));
        for &(i, j, v) in edges {
            if i >= d || j >= d {
                return Err(Error::InvalidConfig(format!(
                    "edge ({i}, {j}) out of range for {d} nodes"
                )));
            }
            w[[i, j]] = v;
        }
        Self::new(w)
    }

    pub fn d(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn into_weights(self) -> Array2<f64> {
        self.weights
    }

    /// Boolean edge pattern.
    pub fn binary(&self) -> Array2<bool> {
        self.weights.mapv(|v| v != 0.0)
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|v| **v != 0.0).count()
    }

    /// Edges as (from, to, weight), sorted by (from, to).
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let d = self.d();
        let mut out = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = self.weights[[i, j]];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// A topological order of the nodes. Always exists by construction.
    pub fn topological_order(&self) -> Vec<usize> {
        topological_order(&self.weights, 0.0).expect("WeightedDag invariant violated")
    }
}

/// Kahn's algorithm over the graph of entries with |w| > tol. Returns a
/// topological order, or None if a cycle remains.
fn topological_order(weights: &Array2<f64>, tol: f64) -> Option<Vec<usize>> {
    let d = weights.nrows();
    let mut indegree = vec![0usize; d];
    for i in 0..d {
        for j in 0..d {
            if weights[[i, j]].abs() > tol {
                indegree[j] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..d).filter(|&j| indegree[j] == 0).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(i) = ready.pop() {
        order.push(i);
        for j in 0..d {
            if weights[[i, j]].abs() > tol {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
    }
    (order.len() == d).then_some(order)
}

/// True iff the graph of entries with |w| > tol admits a topological order.
pub fn is_acyclic(weights: &Array2<f64>, tol: f64) -> bool {
    assert_eq!(
        weights.nrows(),
        weights.ncols(),
        "is_acyclic requires a square matrix"
    );
    topological_order(weights, tol).is_some()
}

/// Weighted transitive closure A + A^2 + ... + A^(d-1). Entry (i, j) is
/// the sum over all directed paths i -> j of the product of edge weights
/// along the path.
///
/// Uses repeated-squaring accumulation of the geometric series,
/// O(d^3 log d): with S_k = I + A + ... + A^(k-1), S_2k = S_k (I + A^k),
/// and A^k = 0 once k >= d.
pub fn transitive_closure(g: &WeightedDag) -> Array2<f64> {
    let d = g.d();
    let mut total = Array2::eye(d) + g.weights(); // I + A
    let mut power = g.weights().clone(); // A^covered
    let mut covered = 2usize;
    while covered < d {
        power = power.dot(&power);
        total = &total + &total.dot(&power);
        covered *= 2;
    }
    total - Array2::<f64>::eye(d)
}

/// Zeroes entries with |w| < omega. Entries exactly at the threshold are
/// kept.
pub fn threshold(weights: &Array2<f64>, omega: f64) -> Array2<f64> {
    weights.mapv(|v| if v.abs() < omega { 0.0 } else { v })
}

/// Random graph family for the synthetic benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphType {
    ErdosRenyi,
    ScaleFree,
}

/// Configuration for [`generate_random_dag`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphGenConfig {
    pub d: usize,
    pub graph_type: GraphType,
    pub edges_per_vertex: usize,
    /// Weight magnitudes are drawn uniformly from (low, high) with a
    /// uniformly random sign, i.e. from (-high, -low) U (low, high).
    pub weight_low: f64,
    pub weight_high: f64,
    pub seed: u64,
}

impl Default for GraphGenConfig {
    fn default() -> Self {
        Self {
            d: 20,
            graph_type: GraphType::ErdosRenyi,
            edges_per_vertex: 4,
            weight_low: 0.1,
            weight_high: 0.9,
            seed: 0,
        }
    }
}

impl GraphGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::InvalidConfig("node count must be positive".into()));
        }
        if self.edges_per_vertex == 0 || self.edges_per_vertex >= self.d {
            return Err(Error::InvalidConfig(format!(
                "edges_per_vertex must be in [1, d), got {} for d = {}",
                self.edges_per_vertex, self.d
            )));
        }
        if !(self.weight_low > 0.0 && self.weight_low < self.weight_high) {
            return Err(Error::InvalidConfig(format!(
                "weight range must satisfy 0 < low < high, got ({}, {})",
                self.weight_low, self.weight_high
            )));
        }
        Ok(())
    }
}

fn draw_weight(rng: &mut ChaCha8Rng, low: f64, high: f64) -> f64 {
    let magnitude = low + rng.random::<f64>() * (high - low);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Generates a random weighted DAG.
///
/// Erdos-Renyi: each unordered node pair is an edge independently with
/// probability 2 * edges_per_vertex / (d - 1) (clamped to 1), so the
/// expected edge count is d * edges_per_vertex; edges point from lower to
/// higher construction index. Scale-free: Barabasi-Albert preferential
/// attachment with edges_per_vertex new edges per node, oriented from the
/// earlier-attached to the later-attached node. In both cases the
/// construction order is hidden behind a uniformly random node relabeling.
pub fn generate_random_dag(cfg: &GraphGenConfig) -> Result<WeightedDag> {
    cfg.validate()?;
    let d = cfg.d;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut canonical = Array2::<f64>::zeros((d, d));

    match cfg.graph_type {
        GraphType::ErdosRenyi => {
            let p = (2.0 * cfg.edges_per_vertex as f64 / (d - 1) as f64).min(1.0);
            for i in 0..d {
                for j in (i + 1)..d {
                    if rng.random::<f64>() < p {
                        canonical[[i, j]] = draw_weight(&mut rng, cfg.weight_low, cfg.weight_high);
                    }
                }
            }
        }
        GraphType::ScaleFree => {
            let m = cfg.edges_per_vertex;
            // Degree-proportional sampling via the repeated-nodes list.
            let mut repeated: Vec<usize> = Vec::new();
            let mut targets: Vec<usize> = (0..m).collect();
            for v in m..d {
                for &u in &targets {
                    canonical[[u, v]] = draw_weight(&mut rng, cfg.weight_low, cfg.weight_high);
                }
                repeated.extend_from_slice(&targets);
                repeated.extend(std::iter::repeat(v).take(m));
                targets.clear();
                while targets.len() < m {
                    let pick = repeated[rng.random_range(0..repeated.len())];
                    if !targets.contains(&pick) {
                        targets.push(pick);
                    }
                }
            }
        }
    }

    let mut relabel: Vec<usize> = (0..d).collect();
    relabel.shuffle(&mut rng);
    let mut weights = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let v = canonical[[i, j]];
            if v != 0.0 {
                weights[[relabel[i], relabel[j]]] = v;
            }
        }
    }
    WeightedDag::new(weights)
}
