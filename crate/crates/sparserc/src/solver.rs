//! Continuous DAG learner: minimize (1/2n)||X(I - A)||_1 + lambda ||A||_1
//! subject to the trace-exponential acyclicity constraint h(A) = 0, via an
//! augmented-Lagrangian outer loop with Adam inner minimization, plus
//! root-cause reconstruction from a learned graph.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::graph::{threshold, WeightedDag};

/// How the acyclicity constraint is enforced across outer rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyMode {
    /// Quadratic penalty plus dual updates, with penalty escalation
    /// whenever feasibility stalls.
    AugmentedLagrangian,
    /// Single fixed penalty coefficient, no dual term (ablation mode).
    FixedPenalty,
}

/// Hyperparameters of the constrained optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// L1 coefficient on the adjacency matrix.
    pub lambda: f64,
    /// Adam step size.
    pub learning_rate: f64,
    /// Post-optimization edge threshold.
    pub omega: f64,
    /// Augmented-Lagrangian rounds.
    pub max_outer: usize,
    /// Adam iterations per round.
    pub max_inner: usize,
    /// Feasibility tolerance on h(A).
    pub h_tol: f64,
    pub rho_init: f64,
    pub rho_mult: f64,
    pub rho_max: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Reserved for randomized initialization; the default initial point
    /// A = 0 does not consume it.
    pub seed: u64,
    pub mode: PenaltyMode,
    /// Optional wall-clock budget for one solve call, in seconds.
    pub time_limit_s: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            learning_rate: 1e-3,
            omega: 0.09,
            max_outer: 10,
            max_inner: 5000,
            h_tol: 1e-8,
            rho_init: 1.0,
            rho_mult: 10.0,
            rho_max: 1e16,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            mode: PenaltyMode::AugmentedLagrangian,
            time_limit_s: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("lambda", self.lambda),
            ("learning_rate", self.learning_rate),
            ("omega", self.omega),
            ("h_tol", self.h_tol),
            ("rho_init", self.rho_init),
            ("rho_mult", self.rho_mult),
            ("rho_max", self.rho_max),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positives {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidConfig(
                "iteration budgets must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded point of the optimization trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iter: usize,
    pub loss: f64,
    pub h: f64,
    pub rho: f64,
}

/// Output of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Learned matrix before thresholding.
    pub weights_raw: Array2<f64>,
    /// Thresholded and, if necessary, cycle-repaired graph.
    pub weights: WeightedDag,
    pub objective_trace: Vec<TracePoint>,
    pub runtime_seconds: f64,
    /// True iff h at the raw solution is below `h_tol`.
    pub converged: bool,
    /// Number of edges removed to break residual cycles after
    /// thresholding.
    pub cycle_repairs: usize,
}

fn check_data_shape(x: &Array2<f64>, a: &Array2<f64>) -> Result<()> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "adjacency must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if x.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "data has {} columns but adjacency is {d}x{d}",
            x.ncols()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::DegenerateInput("data has no rows".into()));
    }
    Ok(())
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The unconstrained objective (1/2n)||X(I - A)||_1 + lambda ||A||_1,
/// using the identity (I + closure(A))^{-1} = I - A. `a` need not be
/// acyclic.
pub fn objective(x: &Array2<f64>, a: &Array2<f64>, lambda: f64) -> Result<f64> {
    check_data_shape(x, a)?;
    let n = x.nrows() as f64;
    let residual = x - &x.dot(a);
    let data_term = residual.iter().map(|v| v.abs()).sum::<f64>() / (2.0 * n);
    let reg_term = lambda * a.iter().map(|v| v.abs()).sum::<f64>();
    Ok(data_term + reg_term)
}

/// Acyclicity measure h(A) = tr(exp(A o A)) - d and its gradient
/// exp(A o A)^T o 2A. The value is nonnegative and vanishes exactly when
/// the nonzero pattern of A is acyclic.
pub fn acyclicity_h(a: &Array2<f64>) -> (f64, Array2<f64>) {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "acyclicity_h requires a square matrix");
    let e = expm(&(a * a));
    let value = (e.diag().sum() - d as f64).max(0.0);
    let grad = &e.t() * &(a * 2.0);
    (value, grad)
}

/// Subgradient of the penalized objective
/// objective(X, A, lambda) + (rho/2) h(A)^2 + alpha h(A),
/// with sign(0) = 0 for both L1 terms. Exposed so the gradient can be
/// checked against finite differences of the smoothed objective.
pub fn penalized_gradient(
    x: &Array2<f64>,
    a: &Array2<f64>,
    lambda: f64,
    rho: f64,
    alpha: f64,
) -> Result<Array2<f64>> {
    check_data_shape(x, a)?;
    let n = x.nrows() as f64;
    let residual = x - &x.dot(a);
    let grad_data = x.t().dot(&residual.mapv(sign)) * (-1.0 / (2.0 * n));
    let (h, grad_h) = acyclicity_h(a);
    Ok(grad_data + a.mapv(sign) * lambda + grad_h * (alpha + rho * h))
}

/// Value of the penalized objective; companion to [`penalized_gradient`].
pub fn penalized_objective(
    x: &Array2<f64>,
    a: &Array2<f64>,
    lambda: f64,
    rho: f64,
    alpha: f64,
) -> Result<f64> {
    let base = objective(x, a, lambda)?;
    let (h, _) = acyclicity_h(a);
    Ok(base + 0.5 * rho * h * h + alpha * h)
}

/// Reconstructs root causes from data and a learned graph as
/// C_hat = X (I - A).
pub fn recover_root_causes(x: &Array2<f64>, g: &WeightedDag) -> Result<Array2<f64>> {
    if x.ncols() != g.d() {
        return Err(Error::ShapeMismatch(format!(
            "data has {} columns but the graph has {} nodes",
            x.ncols(),
            g.d()
        )));
    }
    Ok(x - &x.dot(g.weights()))
}

// Relative-change stall detector for the inner loop.
const EARLY_STOP_WINDOW: usize = 100;
const EARLY_STOP_REL_TOL: f64 = 1e-9;

/// Learns a weighted DAG from data.
///
/// Starts from A = 0 (feasible) and alternates Adam minimization of the
/// penalized objective with dual/penalty updates: the dual weight
/// absorbs alpha += rho * h, and rho grows by `rho_mult` whenever h fails
/// to shrink by a factor of 4 over the previous round. Terminates once
/// h < h_tol or the budgets are exhausted. The final matrix is
/// thresholded at `omega`; any cycles that survive thresholding are
/// repaired by removing the weakest participating edges.
pub fn solve(x: &Array2<f64>, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let d = x.ncols();
    if d == 0 || x.nrows() == 0 {
        return Err(Error::DegenerateInput("data matrix is empty".into()));
    }
    let start = Instant::now();
    let n = x.nrows() as f64;

    let mut a = Array2::<f64>::zeros((d, d));
    let mut rho = cfg.rho_init;
    let mut alpha = 0.0;
    let mut h_prev_round = f64::INFINITY;
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut global_iter = 0usize;

    let xt = x.t().to_owned();

    for _round in 0..cfg.max_outer {
        let mut m = Array2::<f64>::zeros((d, d));
        let mut v = Array2::<f64>::zeros((d, d));
        let mut beta1_t = 1.0;
        let mut beta2_t = 1.0;
        let mut recent = [0.0f64; EARLY_STOP_WINDOW];

        for it in 0..cfg.max_inner {
            if let Some(limit) = cfg.time_limit_s {
                if start.elapsed().as_secs_f64() > limit {
                    return Err(Error::TimedOut { limit_s: limit });
                }
            }
            global_iter += 1;

            let residual = x - &x.dot(&a);
            let data_term = residual.iter().map(|v| v.abs()).sum::<f64>() / (2.0 * n);
            let reg_term = cfg.lambda * a.iter().map(|v| v.abs()).sum::<f64>();
            let (h, grad_h) = acyclicity_h(&a);
            let loss = data_term + reg_term + 0.5 * rho * h * h + alpha * h;
            if !loss.is_finite() {
                return Err(Error::NonFinite { iter: global_iter });
            }
            if global_iter == 1 || global_iter % 100 == 0 {
                trace.push(TracePoint { iter: global_iter, loss, h, rho });
            }

            // Stall check against the loss from EARLY_STOP_WINDOW
            // iterations ago.
            let slot = it % EARLY_STOP_WINDOW;
            if it >= EARLY_STOP_WINDOW {
                let old = recent[slot];
                if (loss - old).abs() < EARLY_STOP_REL_TOL * old.abs().max(1e-12) {
                    break;
                }
            }
            recent[slot] = loss;

            let grad = xt.dot(&residual.mapv(sign)) * (-1.0 / (2.0 * n))
                + a.mapv(sign) * cfg.lambda
                + grad_h * (alpha + rho * h);

            // Adam step.
            beta1_t *= cfg.adam_beta1;
            beta2_t *= cfg.adam_beta2;
            ndarray::Zip::from(&mut m).and(&grad).for_each(|m, g| {
                *m = cfg.adam_beta1 * *m + (1.0 - cfg.adam_beta1) * g;
            });
            ndarray::Zip::from(&mut v).and(&grad).for_each(|v, g| {
                *v = cfg.adam_beta2 * *v + (1.0 - cfg.adam_beta2) * g * g;
            });
            let m_corr = 1.0 / (1.0 - beta1_t);
            let v_corr = 1.0 / (1.0 - beta2_t);
            ndarray::Zip::from(&mut a)
                .and(&m)
                .and(&v)
                .for_each(|a, m, v| {
                    *a -= cfg.learning_rate * (m * m_corr)
                        / ((v * v_corr).sqrt() + cfg.adam_eps);
                });
        }

        let (h_round, _) = acyclicity_h(&a);
        let loss_round = penalized_objective(x, &a, cfg.lambda, rho, alpha)?;
        trace.push(TracePoint {
            iter: global_iter,
            loss: loss_round,
            h: h_round,
            rho,
        });
        if h_round < cfg.h_tol {
            break;
        }
        if cfg.mode == PenaltyMode::AugmentedLagrangian {
            alpha += rho * h_round;
            if h_round > h_prev_round / 4.0 {
                rho = (rho * cfg.rho_mult).min(cfg.rho_max);
            }
        }
        h_prev_round = h_round;
    }

    let (h_final, _) = acyclicity_h(&a);
    let converged = h_final < cfg.h_tol;
    let thresholded = threshold(&a, cfg.omega);
    let (repaired, cycle_repairs) = repair_cycles(thresholded);
    let weights = WeightedDag::new(repaired)?;

    Ok(SolveResult {
        weights_raw: a,
        weights,
        objective_trace: trace,
        runtime_seconds: start.elapsed().as_secs_f64(),
        converged,
        cycle_repairs,
    })
}

/// Removes edges in increasing order of |weight| among those participating
/// in a cycle (including self-loops) until the graph is acyclic. Returns
/// the repaired matrix and the number of removed edges.
pub fn repair_cycles(mut w: Array2<f64>) -> (Array2<f64>, usize) {
    let d = w.nrows();
    let mut removed = 0usize;
    loop {
        let comp = strongly_connected_components(&w);
        let mut comp_size = vec![0usize; d];
        for &c in &comp {
            comp_size[c] += 1;
        }
        // Candidate edges: inside a nontrivial SCC, or self-loops.
        let mut weakest: Option<(f64, usize, usize)> = None;
        for i in 0..d {
            for j in 0..d {
                let v = w[[i, j]];
                if v == 0.0 {
                    continue;
                }
                let cyclic = i == j || (comp[i] == comp[j] && comp_size[comp[i]] > 1);
                if cyclic {
                    let key = (v.abs(), i, j);
                    if weakest.map_or(true, |(wv, wi, wj)| key < (wv, wi, wj)) {
                        weakest = Some(key);
                    }
                }
            }
        }
        match weakest {
            Some((_, i, j)) => {
                w[[i, j]] = 0.0;
                removed += 1;
            }
            None => return (w, removed),
        }
    }
}

/// Iterative Tarjan SCC over the nonzero pattern of `w`. Returns a
/// component id per node.
fn strongly_connected_components(w: &Array2<f64>) -> Vec<usize> {
    let d = w.nrows();
    let adj: Vec<Vec<usize>> = (0..d)
        .map(|i| (0..d).filter(|&j| w[[i, j]] != 0.0).collect())
        .collect();

    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; d];
    let mut lowlink = vec![0usize; d];
    let mut on_stack = vec![false; d];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp = vec![UNSET; d];
    let mut next_index = 0usize;
    let mut next_comp = 0usize;

    // Explicit DFS stack of (node, next child position).
    let mut call_stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..d {
        if index[root] != UNSET {
            continue;
        }
        call_stack.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut child_pos)) = call_stack.last_mut() {
            if *child_pos < adj[v].len() {
                let u = adj[v][*child_pos];
                *child_pos += 1;
                if index[u] == UNSET {
                    index[u] = next_index;
                    lowlink[u] = next_index;
                    next_index += 1;
                    stack.push(u);
                    on_stack[u] = true;
                    call_stack.push((u, 0));
                } else if on_stack[u] {
                    lowlink[v] = lowlink[v].min(index[u]);
                }
            } else {
                call_stack.pop();
                if let Some(&(parent, _)) = call_stack.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    while let Some(u) = stack.pop() {
                        on_stack[u] = false;
                        comp[u] = next_comp;
                        if u == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}
