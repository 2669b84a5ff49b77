//! Evaluation metrics: structural Hamming distance, structural
//! intervention distance, edge rates, weight-reconstruction losses,
//! varsortability, and root-cause recovery scores.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Nonzero pattern of a weighted adjacency matrix. Metrics never
/// re-threshold: whatever the solver left nonzero is an edge.
pub fn to_binary(weights: &Array2<f64>) -> Array2<bool> {
    weights.mapv(|v| v != 0.0)
}

fn check_same_square(a: &Array2<bool>, b: &Array2<bool>) -> Result<usize> {
    let d = a.nrows();
    if a.ncols() != d || b.nrows() != d || b.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "adjacency shapes {:?} and {:?} must be equal and square",
            a.dim(),
            b.dim()
        )));
    }
    Ok(d)
}

/// Structural Hamming distance: the number of unordered node pairs whose
/// edge status differs in any way (insertion, deletion, or reversal each
/// cost one). Either input may be cyclic; the diagonal is ignored.
pub fn shd(est: &Array2<bool>, truth: &Array2<bool>) -> Result<usize> {
    let d = check_same_square(est, truth)?;
    let mut dist = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            let same = est[[i, j]] == truth[[i, j]] && est[[j, i]] == truth[[j, i]];
            if !same {
                dist += 1;
            }
        }
    }
    Ok(dist)
}

/// Directed-edge true/false positive rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRates {
    pub tpr: f64,
    pub fpr: f64,
    pub total_edges: usize,
}

/// TPR over the truth's directed edges, FPR over the non-edges, and the
/// size of the estimate.
pub fn edge_rates(est: &Array2<bool>, truth: &Array2<bool>) -> Result<EdgeRates> {
    let d = check_same_square(est, truth)?;
    let mut true_edges = 0usize;
    let mut est_edges = 0usize;
    let mut hits = 0usize;
    let mut extras = 0usize;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let t = truth[[i, j]];
            let e = est[[i, j]];
            true_edges += t as usize;
            est_edges += e as usize;
            hits += (e && t) as usize;
            extras += (e && !t) as usize;
        }
    }
    if true_edges == 0 {
        return Err(Error::DegenerateInput(
            "true graph has no edges; TPR is undefined".into(),
        ));
    }
    let negatives = d * (d - 1) - true_edges;
    Ok(EdgeRates {
        tpr: hits as f64 / true_edges as f64,
        fpr: if negatives == 0 {
            0.0
        } else {
            extras as f64 / negatives as f64
        },
        total_edges: est_edges,
    })
}

/// Losses between weighted adjacency matrices, normalized by the truth's
/// edge count / Frobenius mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightLosses {
    pub avg_l1: f64,
    pub max_l1: f64,
    pub avg_l2: f64,
    pub nmse: f64,
}

pub fn weight_losses(
    est: &Array2<f64>,
    truth: &Array2<f64>,
    edge_count: usize,
) -> Result<WeightLosses> {
    if est.dim() != truth.dim() {
        return Err(Error::ShapeMismatch(format!(
            "weight shapes {:?} and {:?} differ",
            est.dim(),
            truth.dim()
        )));
    }
    if edge_count == 0 {
        return Err(Error::DegenerateInput(
            "edge count must be positive".into(),
        ));
    }
    let diff = truth - est;
    let l1 = diff.iter().map(|v| v.abs()).sum::<f64>();
    let max_l1 = diff.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let l2 = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    let truth_l2 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if truth_l2 == 0.0 {
        return Err(Error::DegenerateInput(
            "true weights are all zero; NMSE is undefined".into(),
        ));
    }
    Ok(WeightLosses {
        avg_l1: l1 / edge_count as f64,
        max_l1,
        avg_l2: l2 / edge_count as f64,
        nmse: l2 / truth_l2,
    })
}

/// Relative band within which two column variances count as tied.
const VARSORT_TIE_TOL: f64 = 1e-9;

/// Fraction of directed-path-connected ordered pairs whose data variance
/// increases along the causal direction, counting each pair once per path
/// length with an existing path and scoring ties one half.
pub fn varsortability(x: &Array2<f64>, truth: &Array2<bool>) -> Result<f64> {
    let d = truth.nrows();
    if truth.ncols() != d {
        return Err(Error::ShapeMismatch("truth must be square".into()));
    }
    if x.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "data has {} columns for a {d}-node graph",
            x.ncols()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::DegenerateInput(
            "need at least two samples to estimate variances".into(),
        ));
    }
    if !binary_is_acyclic(truth) {
        return Err(Error::NotADag);
    }

    let variances: Vec<f64> = (0..d)
        .map(|j| crate::datagen::column_variance(x, j))
        .collect();

    let mut reach = truth.clone();
    let mut pairs = 0u64;
    let mut score = 0.0;
    for _ in 1..d.max(2) {
        let mut any = false;
        for i in 0..d {
            for j in 0..d {
                if reach[[i, j]] {
                    any = true;
                    pairs += 1;
                    let hi = variances[i] * (1.0 + VARSORT_TIE_TOL);
                    let lo = variances[i] * (1.0 - VARSORT_TIE_TOL);
                    score += if variances[j] > hi {
                        1.0
                    } else if variances[j] >= lo {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        if !any {
            break;
        }
        reach = bool_matmul(&reach, truth);
    }
    if pairs == 0 {
        return Err(Error::DegenerateInput(
            "true graph has no edges; varsortability is undefined".into(),
        ));
    }
    Ok(score / pairs as f64)
}

fn bool_matmul(a: &Array2<bool>, b: &Array2<bool>) -> Array2<bool> {
    let d = a.nrows();
    let mut out = Array2::from_elem((d, d), false);
    for i in 0..d {
        for k in 0..d {
            if a[[i, k]] {
                for j in 0..d {
                    if b[[k, j]] {
                        out[[i, j]] = true;
                    }
                }
            }
        }
    }
    out
}

/// Root-cause recovery scores. The support of a matrix is the set of
/// entries within `support_frac` of its own largest magnitude.
pub fn root_cause_metrics(
    c_est: &Array2<f64>,
    c_true: &Array2<f64>,
    support_frac: f64,
) -> Result<(f64, f64, f64)> {
    if c_est.dim() != c_true.dim() {
        return Err(Error::ShapeMismatch(format!(
            "root-cause shapes {:?} and {:?} differ",
            c_est.dim(),
            c_true.dim()
        )));
    }
    if !(support_frac > 0.0 && support_frac < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "support_frac must lie in (0, 1), got {support_frac}"
        )));
    }
    let max_true = c_true.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if max_true == 0.0 {
        return Err(Error::DegenerateInput(
            "true root causes are all zero".into(),
        ));
    }
    let max_est = c_est.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let mut true_support = 0usize;
    let mut hits = 0usize;
    let mut extras = 0usize;
    for (e, t) in c_est.iter().zip(c_true.iter()) {
        let in_true = t.abs() > support_frac * max_true;
        let in_est = max_est > 0.0 && e.abs() > support_frac * max_est;
        true_support += in_true as usize;
        hits += (in_true && in_est) as usize;
        extras += (in_est && !in_true) as usize;
    }
    let total = c_true.len();
    let c_tpr = if true_support == 0 {
        // max_true > 0 guarantees at least the maximal entry is in support
        unreachable!("support of a nonzero matrix contains its maximum")
    } else {
        hits as f64 / true_support as f64
    };
    let negatives = total - true_support;
    let c_fpr = if negatives == 0 {
        0.0
    } else {
        extras as f64 / negatives as f64
    };

    let diff_l2 = c_true
        .iter()
        .zip(c_est.iter())
        .map(|(t, e)| (t - e) * (t - e))
        .sum::<f64>()
        .sqrt();
    let true_l2 = c_true.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((c_tpr, c_fpr, diff_l2 / true_l2))
}

fn binary_is_acyclic(g: &Array2<bool>) -> bool {
    let d = g.nrows();
    let mut indegree = vec![0usize; d];
    for i in 0..d {
        for j in 0..d {
            if g[[i, j]] {
                indegree[j] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..d).filter(|&j| indegree[j] == 0).collect();
    let mut seen = 0;
    while let Some(i) = ready.pop() {
        seen += 1;
        for j in 0..d {
            if g[[i, j]] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
    }
    seen == d
}

// ---------------------------------------------------------------------
// Structural intervention distance
// ---------------------------------------------------------------------

/// Adjacency lists plus reachability tables for the true DAG, shared
/// across all pair queries of one SID evaluation.
struct SidContext {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    /// descendants[v][u]: there is a directed path v -> ... -> u (strict).
    descendants: Vec<Vec<bool>>,
}

impl SidContext {
    fn new(truth: &Array2<bool>) -> Self {
        let d = truth.nrows();
        let mut parents = vec![Vec::new(); d];
        let mut children = vec![Vec::new(); d];
        for i in 0..d {
            for j in 0..d {
                if truth[[i, j]] {
                    children[i].push(j);
                    parents[j].push(i);
                }
            }
        }
        let mut descendants = vec![vec![false; d]; d];
        for v in 0..d {
            let mut stack = children[v].clone();
            while let Some(u) = stack.pop() {
                if !descendants[v][u] {
                    descendants[v][u] = true;
                    stack.extend(children[u].iter().copied());
                }
            }
        }
        Self {
            parents,
            children,
            descendants,
        }
    }
}

/// Structural intervention distance: the number of ordered pairs (i, j)
/// whose intervention distribution is falsely inferred from the estimate
/// by adjusting for the estimated parent set of i.
///
/// Returns `None` when the estimate is cyclic (parent adjustment is then
/// undefined), and fails with [`Error::NotADag`] when the truth is.
pub fn sid(est: &Array2<bool>, truth: &Array2<bool>) -> Result<Option<u64>> {
    let d = check_same_square(est, truth)?;
    if !binary_is_acyclic(truth) {
        return Err(Error::NotADag);
    }
    if !binary_is_acyclic(est) {
        return Ok(None);
    }
    let ctx = SidContext::new(truth);

    let mut mistakes = 0u64;
    for i in 0..d {
        let z: Vec<usize> = (0..d).filter(|&p| est[[p, i]]).collect();
        let z_set: Vec<bool> = {
            let mut s = vec![false; d];
            for &p in &z {
                s[p] = true;
            }
            s
        };
        for j in 0..d {
            if j == i {
                continue;
            }
            let correct = if z_set[j] {
                // The estimate claims j causes i, so the inferred effect
                // of i on j is null; that is right iff j is not actually
                // downstream of i.
                !ctx.descendants[i][j]
            } else {
                valid_adjustment(&ctx, i, j, &z_set)
            };
            if !correct {
                mistakes += 1;
            }
        }
    }
    Ok(Some(mistakes))
}

/// Generalized adjustment criterion for Z relative to (i, j) in the true
/// DAG: Z must avoid the forbidden set (descendants of nodes on proper
/// causal paths from i to j), and must block every proper non-causal path
/// from i to j, checked by d-separation in the graph with i's
/// causal-path-opening edges removed.
fn valid_adjustment(ctx: &SidContext, i: usize, j: usize, z_set: &[bool]) -> bool {
    let d = ctx.parents.len();

    // Nodes (other than i) lying on a proper causal path i -> ... -> j.
    let causal_nodes: Vec<bool> = (0..d)
        .map(|w| ctx.descendants[i][w] && (w == j || ctx.descendants[w][j]))
        .collect();

    // Forbidden set: causal-path nodes and all their descendants.
    for zv in 0..d {
        if !z_set[zv] {
            continue;
        }
        for w in 0..d {
            if causal_nodes[w] && (zv == w || ctx.descendants[w][zv]) {
                return false;
            }
        }
    }

    // d-separation of i and j given Z in the proper back-door graph,
    // i.e. with edges i -> c removed for causal-path children c.
    let blocked_child = |from: usize, to: usize| from == i && causal_nodes[to];

    // Ancestors of Z (including Z) in the modified graph.
    let mut an_z = vec![false; d];
    let mut stack: Vec<usize> = (0..d).filter(|&v| z_set[v]).collect();
    for &v in &stack {
        an_z[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &p in &ctx.parents[v] {
            if !blocked_child(p, v) && !an_z[p] {
                an_z[p] = true;
                stack.push(p);
            }
        }
    }

    // Reachability over (node, arrival direction) states. FromChild means
    // the trail entered v against an edge v -> child; FromParent means it
    // entered along an edge parent -> v.
    #[derive(Clone, Copy, PartialEq)]
    enum Arrival {
        FromChild,
        FromParent,
    }
    let mut visited = vec![[false; 2]; d];
    let mut queue: Vec<(usize, Arrival)> = vec![(i, Arrival::FromChild)];
    while let Some((v, dir)) = queue.pop() {
        let slot = match dir {
            Arrival::FromChild => 0,
            Arrival::FromParent => 1,
        };
        if visited[v][slot] {
            continue;
        }
        visited[v][slot] = true;
        if v == j {
            // An active trail reaches j, so some proper non-causal path
            // is open.
            return false;
        }
        match dir {
            Arrival::FromChild => {
                if !z_set[v] {
                    for &p in &ctx.parents[v] {
                        if !blocked_child(p, v) {
                            queue.push((p, Arrival::FromChild));
                        }
                    }
                    for &c in &ctx.children[v] {
                        if !blocked_child(v, c) {
                            queue.push((c, Arrival::FromParent));
                        }
                    }
                }
            }
            Arrival::FromParent => {
                if !z_set[v] {
                    for &c in &ctx.children[v] {
                        if !blocked_child(v, c) {
                            queue.push((c, Arrival::FromParent));
                        }
                    }
                }
                if an_z[v] {
                    // Collider on the trail; open because v is an
                    // ancestor of (or in) Z.
                    for &p in &ctx.parents[v] {
                        if !blocked_child(p, v) {
                            queue.push((p, Arrival::FromChild));
                        }
                    }
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------

/// One full evaluation of a learned graph against ground truth. Optional
/// fields are reported as "na" in CSV form.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub shd: usize,
    /// Absent when the estimate is cyclic.
    pub sid: Option<u64>,
    pub tpr: f64,
    pub fpr: f64,
    pub total_edges: usize,
    pub nmse_weights: f64,
    pub avg_l1: f64,
    pub max_l1: f64,
    pub avg_l2: f64,
    pub c_tpr: Option<f64>,
    pub c_fpr: Option<f64>,
    pub c_nmse: Option<f64>,
    pub varsortability: Option<f64>,
    pub runtime_seconds: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "method,seed,d,n,shd,sid,tpr,fpr,total_edges,\
                                          nmse,avg_l1,max_l1,avg_l2,c_tpr,c_fpr,c_nmse,\
                                          varsortability,runtime_s";

    /// Serializes to one CSV row in the documented column order. Floats
    /// use shortest round-trip formatting, so parsing back is lossless.
    pub fn to_csv_row(&self, method: &str, seed: u64, d: usize, n: usize) -> String {
        fn opt_f(v: Option<f64>) -> String {
            v.map_or_else(|| "na".to_string(), |x| x.to_string())
        }
        fn opt_u(v: Option<u64>) -> String {
            v.map_or_else(|| "na".to_string(), |x| x.to_string())
        }
        format!(
            "{method},{seed},{d},{n},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.shd,
            opt_u(self.sid),
            self.tpr,
            self.fpr,
            self.total_edges,
            self.nmse_weights,
            self.avg_l1,
            self.max_l1,
            self.avg_l2,
            opt_f(self.c_tpr),
            opt_f(self.c_fpr),
            opt_f(self.c_nmse),
            opt_f(self.varsortability),
            self.runtime_seconds,
        )
    }

    /// Parses a row written by [`Self::to_csv_row`]. Returns
    /// (method, seed, d, n, report).
    pub fn from_csv_row(row: &str) -> Result<(String, u64, usize, usize, Self)> {
        let fields: Vec<&str> = row.trim_end().split(',').collect();
        if fields.len() != 18 {
            return Err(Error::Parse {
                row: 1,
                col: fields.len(),
                msg: format!("expected 18 fields, found {}", fields.len()),
            });
        }
        fn num<T: std::str::FromStr>(s: &str, col: usize) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                row: 1,
                col,
                msg: format!("invalid number {s:?}"),
            })
        }
        fn opt_num<T: std::str::FromStr>(s: &str, col: usize) -> Result<Option<T>> {
            if s == "na" {
                Ok(None)
            } else {
                num(s, col).map(Some)
            }
        }
        let report = Self {
            shd: num(fields[4], 5)?,
            sid: opt_num(fields[5], 6)?,
            tpr: num(fields[6], 7)?,
            fpr: num(fields[7], 8)?,
            total_edges: num(fields[8], 9)?,
            nmse_weights: num(fields[9], 10)?,
            avg_l1: num(fields[10], 11)?,
            max_l1: num(fields[11], 12)?,
            avg_l2: num(fields[12], 13)?,
            c_tpr: opt_num(fields[13], 14)?,
            c_fpr: opt_num(fields[14], 15)?,
            c_nmse: opt_num(fields[15], 16)?,
            varsortability: opt_num(fields[16], 17)?,
            runtime_seconds: num(fields[17], 18)?,
        };
        Ok((
            fields[0].to_string(),
            num(fields[1], 2)?,
            num(fields[2], 3)?,
            num(fields[3], 4)?,
            report,
        ))
    }
}
