//! Exhaustive L0 search over all labeled DAGs on up to five nodes.
//!
//! For each candidate edge support, weights are fitted per node so that
//! the implied root-cause column x_j - X_parents * b has as many exact
//! zeros as possible, and the support minimizing the total count of
//! nonzero root-cause entries wins. On noise-free data the rows where the
//! true root cause is zero satisfy the true weights exactly, so the
//! consensus fit recovers them; this is what makes the search an oracle at
//! this scale. (An L2 fit would not work here: the sparse residual has
//! nonzero mean, so least squares smears it across all rows.)

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Hard cap on the node count; the number of labeled DAGs grows
/// super-exponentially (1, 3, 25, 543, 29281 for d = 1..5).
pub const MAX_EXHAUSTIVE_NODES: usize = 5;

/// Relative cutoff below which a recovered root-cause entry counts as
/// zero, as a fraction of the largest |entry|.
pub const DEFAULT_ZERO_TOL: f64 = 1e-7;

/// Relative tolerance for counting a row as an exact fit during weight
/// fitting.
const FIT_TOL: f64 = 1e-9;

/// Fitted weights below this magnitude are treated as absent when
/// normalizing a support to its effective edge set.
const WEIGHT_TOL: f64 = 1e-6;

/// A candidate edge support: directed edges (from, to), lexicographically
/// sorted.
pub type Support = Vec<(usize, usize)>;

/// Outcome of the exhaustive search. Supports are compared after
/// normalizing to the nonzero pattern of their fitted weights, so a
/// superset whose extra edges fit to zero collapses onto the smaller
/// support rather than tying with it.
#[derive(Debug, Clone)]
pub struct L0Result {
    /// Lexicographically smallest support among the minimizers.
    pub best_support: Support,
    /// Fitted weights on `best_support`.
    pub best_weights: Array2<f64>,
    /// Count of effectively nonzero root-cause entries at the optimum.
    pub best_l0: usize,
    pub num_dags_enumerated: usize,
    /// Every distinct effective support achieving `best_l0`.
    pub ties: Vec<Support>,
    /// Supports skipped because no parent row window was solvable.
    pub rank_deficient_skipped: usize,
}

/// Yields every labeled DAG on `d` nodes exactly once, as edge supports.
///
/// Enumerates all off-diagonal 0/1 patterns and keeps the acyclic ones;
/// at the cap d = 5 that is 2^20 candidates filtered down to 29281 DAGs.
pub fn enumerate_dags(d: usize) -> Result<Vec<Support>> {
    if d == 0 {
        return Err(Error::InvalidConfig("node count must be positive".into()));
    }
    if d > MAX_EXHAUSTIVE_NODES {
        return Err(Error::TooLarge {
            requested: d,
            cap: MAX_EXHAUSTIVE_NODES,
        });
    }
    let positions: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let m = positions.len();

    let mut out = Vec::new();
    for mask in 0u32..(1u32 << m) {
        let edges: Support = (0..m)
            .filter(|bit| mask >> bit & 1 == 1)
            .map(|bit| positions[bit])
            .collect();
        if support_is_acyclic(d, &edges) {
            out.push(edges);
        }
    }
    Ok(out)
}

fn support_is_acyclic(d: usize, edges: &[(usize, usize)]) -> bool {
    let mut indegree = [0usize; MAX_EXHAUSTIVE_NODES];
    for &(_, j) in edges {
        indegree[j] += 1;
    }
    let mut ready: Vec<usize> = (0..d).filter(|&j| indegree[j] == 0).collect();
    let mut seen = 0;
    while let Some(i) = ready.pop() {
        seen += 1;
        for &(u, v) in edges {
            if u == i {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.push(v);
                }
            }
        }
    }
    seen == d
}

/// Counts entries of `c` whose magnitude exceeds `rel_tol` times the
/// largest magnitude. An all-zero matrix counts zero.
pub fn effective_l0(c: &Array2<f64>, rel_tol: f64) -> usize {
    let max = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    let cutoff = rel_tol * max;
    c.iter().filter(|v| v.abs() > cutoff).count()
}

/// Per-(node, parent-set) fit, memoized across supports: the fitted
/// coefficients and the full residual column.
struct NodeFit {
    coeffs: Vec<f64>,
    residual: Vec<f64>,
}

/// Fits coefficients b for `x_j ~ X_parents * b` by maximizing the number
/// of rows fitted exactly: every window of |parents| consecutive rows
/// proposes the solution of its square system, and the proposal agreeing
/// with the most rows wins. Rows where the true root cause vanishes all
/// satisfy the true coefficients, so on noise-free data the winner is the
/// exact fit. Returns None when no window is solvable (collinear or zero
/// parent columns).
fn fit_node(x: &Array2<f64>, j: usize, parents: &[usize]) -> Option<NodeFit> {
    let n = x.nrows();
    let k = parents.len();
    let col_j: Vec<f64> = x.column(j).to_vec();
    if k == 0 {
        return Some(NodeFit {
            coeffs: Vec::new(),
            residual: col_j,
        });
    }
    let scale = col_j.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let parent_rows: Vec<Vec<f64>> = (0..n)
        .map(|r| parents.iter().map(|&p| x[[r, p]]).collect())
        .collect();
    let fit_cutoff = FIT_TOL
        * scale.max(
            parent_rows
                .iter()
                .flatten()
                .map(|v| v.abs())
                .fold(0.0, f64::max),
        );

    let mut best: Option<(usize, Vec<f64>)> = None;
    for start in 0..n.saturating_sub(k - 1) {
        let mut system = Vec::with_capacity(k * k);
        let mut rhs = Vec::with_capacity(k);
        for r in start..start + k {
            system.extend_from_slice(&parent_rows[r]);
            rhs.push(col_j[r]);
        }
        let Some(candidate) = solve_square_system(&mut system, &mut rhs, k) else {
            continue;
        };
        let consensus = (0..n)
            .filter(|&r| {
                let predicted: f64 = parent_rows[r]
                    .iter()
                    .zip(&candidate)
                    .map(|(a, b)| a * b)
                    .sum();
                (col_j[r] - predicted).abs() <= fit_cutoff
            })
            .count();
        if best.as_ref().is_none_or(|(c, _)| consensus > *c) {
            best = Some((consensus, candidate));
        }
        // Nothing can beat fitting every row.
        if best.as_ref().is_some_and(|(c, _)| *c == n) {
            break;
        }
    }

    let (_, coeffs) = best?;
    let residual = (0..n)
        .map(|r| {
            let predicted: f64 = parent_rows[r]
                .iter()
                .zip(&coeffs)
                .map(|(a, b)| a * b)
                .sum();
            col_j[r] - predicted
        })
        .collect();
    Some(NodeFit { coeffs, residual })
}

/// Gaussian elimination with partial pivoting on a k x k system, k <= 4.
/// Returns None when the system is numerically singular.
fn solve_square_system(m: &mut [f64], b: &mut [f64], k: usize) -> Option<Vec<f64>> {
    let scale = m.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for col in 0..k {
        let pivot_row = (col..k).max_by(|&r, &s| {
            m[r * k + col]
                .abs()
                .partial_cmp(&m[s * k + col].abs())
                .unwrap()
        })?;
        if m[pivot_row * k + col].abs() < 1e-12 * scale {
            return None;
        }
        if pivot_row != col {
            for c in 0..k {
                m.swap(col * k + c, pivot_row * k + c);
            }
            b.swap(col, pivot_row);
        }
        for r in (col + 1)..k {
            let factor = m[r * k + col] / m[col * k + col];
            for c in col..k {
                m[r * k + c] -= factor * m[col * k + c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut beta = vec![0.0f64; k];
    for row in (0..k).rev() {
        let mut acc = b[row];
        for c in (row + 1)..k {
            acc -= m[row * k + c] * beta[c];
        }
        beta[row] = acc / m[row * k + row];
    }
    Some(beta)
}

/// Exhaustive minimization of the root-cause L0 count over all labeled
/// DAGs. `zero_tol` is the relative cutoff used to count nonzeros; see
/// [`DEFAULT_ZERO_TOL`]. Valid on noise-free (or nearly noise-free) data,
/// where exact row fits exist.
pub fn solve_l0(x: &Array2<f64>, zero_tol: f64) -> Result<L0Result> {
    let d = x.ncols();
    if !(zero_tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "zero_tol must be positive, got {zero_tol}"
        )));
    }
    if x.nrows() == 0 || d == 0 {
        return Err(Error::DegenerateInput("data matrix is empty".into()));
    }
    let supports = enumerate_dags(d)?;
    let num_dags_enumerated = supports.len();

    // The fit for node j depends only on its parent set; memoize over
    // (node, parent bitmask) so the 29281 supports at d = 5 share at most
    // d * 2^(d-1) = 80 fits.
    let mut fit_cache: Vec<Vec<Option<Option<NodeFit>>>> = (0..d)
        .map(|_| (0..(1usize << d)).map(|_| None).collect())
        .collect();

    let mut best_l0 = usize::MAX;
    let mut tie_set: BTreeSet<Support> = BTreeSet::new();
    let mut best_weights = Array2::<f64>::zeros((d, d));
    let mut rank_deficient_skipped = 0usize;

    'supports: for support in supports {
        let mut parent_masks = vec![0usize; d];
        for &(i, j) in &support {
            parent_masks[j] |= 1 << i;
        }

        let n = x.nrows();
        let mut c_hat = Array2::<f64>::zeros((n, d));
        let mut weights = Array2::<f64>::zeros((d, d));
        for j in 0..d {
            let mask = parent_masks[j];
            if fit_cache[j][mask].is_none() {
                let parents: Vec<usize> = (0..d).filter(|&i| mask >> i & 1 == 1).collect();
                fit_cache[j][mask] = Some(fit_node(x, j, &parents));
            }
            match fit_cache[j][mask].as_ref().unwrap() {
                Some(fit) => {
                    let parents: Vec<usize> =
                        (0..d).filter(|&i| mask >> i & 1 == 1).collect();
                    for (idx, &p) in parents.iter().enumerate() {
                        weights[[p, j]] = fit.coeffs[idx];
                    }
                    for r in 0..n {
                        c_hat[[r, j]] = fit.residual[r];
                    }
                }
                None => {
                    rank_deficient_skipped += 1;
                    continue 'supports;
                }
            }
        }

        let l0 = effective_l0(&c_hat, zero_tol);
        if l0 > best_l0 {
            continue;
        }

        // Normalize to the effective support: edges whose fitted weight
        // is numerically zero are not really part of this candidate.
        let mut effective: Support = Vec::new();
        let mut effective_weights = Array2::<f64>::zeros((d, d));
        for &(i, j) in &support {
            if weights[[i, j]].abs() > WEIGHT_TOL {
                effective.push((i, j));
                effective_weights[[i, j]] = weights[[i, j]];
            }
        }

        if l0 < best_l0 {
            best_l0 = l0;
            tie_set.clear();
        }
        let is_new_min = tie_set.is_empty() || &effective < tie_set.iter().next().unwrap();
        if is_new_min {
            best_weights = effective_weights;
        }
        tie_set.insert(effective);
    }

    if tie_set.is_empty() {
        return Err(Error::DegenerateInput(
            "every candidate support was rank deficient".into(),
        ));
    }
    let ties: Vec<Support> = tie_set.into_iter().collect();
    Ok(L0Result {
        best_support: ties[0].clone(),
        best_weights,
        best_l0,
        num_dags_enumerated,
        ties,
        rank_deficient_skipped,
    })
}
