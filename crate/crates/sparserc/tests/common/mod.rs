//! Shared test oracles, independent of the library implementations they
//! check.

use std::collections::BTreeSet;

use ndarray::Array2;

/// Brute-force structural intervention distance via explicit path
/// enumeration: for every ordered pair, the estimated parent set is
/// checked as an adjustment set in the true DAG by enumerating all simple
/// paths and applying the blocking rules directly.
pub fn sid_oracle(est: &Array2<bool>, truth: &Array2<bool>) -> Option<u64> {
    let d = truth.nrows();
    if has_cycle(est) {
        return None;
    }
    assert!(!has_cycle(truth), "oracle requires an acyclic truth");

    let mut mistakes = 0u64;
    for i in 0..d {
        let z: Vec<usize> = (0..d).filter(|&p| est[[p, i]]).collect();
        for j in 0..d {
            if i == j {
                continue;
            }
            let ok = if z.contains(&j) {
                // Estimated effect is null; right iff j is truly not
                // downstream of i.
                !descendants_of(truth, i).contains(&j)
            } else {
                adjustment_valid_by_paths(truth, i, j, &z)
            };
            if !ok {
                mistakes += 1;
            }
        }
    }
    Some(mistakes)
}

fn has_cycle(g: &Array2<bool>) -> bool {
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
    seen != d
}

fn descendants_of(g: &Array2<bool>, v: usize) -> BTreeSet<usize> {
    let d = g.nrows();
    let mut out = BTreeSet::new();
    let mut stack: Vec<usize> = (0..d).filter(|&u| g[[v, u]]).collect();
    while let Some(u) = stack.pop() {
        if out.insert(u) {
            stack.extend((0..d).filter(|&w| g[[u, w]]));
        }
    }
    out
}

fn ancestors_including(g: &Array2<bool>, set: &[usize]) -> BTreeSet<usize> {
    let d = g.nrows();
    let mut out: BTreeSet<usize> = set.iter().copied().collect();
    let mut stack: Vec<usize> = set.to_vec();
    while let Some(u) = stack.pop() {
        for p in (0..d).filter(|&p| g[[p, u]]) {
            if out.insert(p) {
                stack.push(p);
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    /// Edge traversed in its own direction.
    Forward,
    /// Edge traversed against its direction.
    Backward,
}

/// All simple paths from `from` to `to` over the skeleton of `g`,
/// remembering each step's orientation.
fn simple_paths(
    g: &Array2<bool>,
    from: usize,
    to: usize,
) -> Vec<(Vec<usize>, Vec<Step>)> {
    let d = g.nrows();
    let mut paths = Vec::new();
    let mut nodes = vec![from];
    let mut steps: Vec<Step> = Vec::new();
    let mut on_path = vec![false; d];
    on_path[from] = true;

    fn dfs(
        g: &Array2<bool>,
        to: usize,
        nodes: &mut Vec<usize>,
        steps: &mut Vec<Step>,
        on_path: &mut Vec<bool>,
        paths: &mut Vec<(Vec<usize>, Vec<Step>)>,
    ) {
        let v = *nodes.last().unwrap();
        if v == to {
            paths.push((nodes.clone(), steps.clone()));
            return;
        }
        let d = g.nrows();
        for u in 0..d {
            if on_path[u] {
                continue;
            }
            let forward = g[[v, u]];
            let backward = g[[u, v]];
            if !forward && !backward {
                continue;
            }
            // In a DAG at most one direction exists.
            let step = if forward { Step::Forward } else { Step::Backward };
            nodes.push(u);
            steps.push(step);
            on_path[u] = true;
            dfs(g, to, nodes, steps, on_path, paths);
            on_path[u] = false;
            steps.pop();
            nodes.pop();
        }
    }

    dfs(g, to, &mut nodes, &mut steps, &mut on_path, &mut paths);
    paths
}

/// Generalized adjustment criterion, evaluated by brute force.
fn adjustment_valid_by_paths(g: &Array2<bool>, i: usize, j: usize, z: &[usize]) -> bool {
    let paths = simple_paths(g, i, j);

    // Nodes other than i on fully-directed i -> ... -> j paths.
    let mut causal_nodes: BTreeSet<usize> = BTreeSet::new();
    for (nodes, steps) in &paths {
        if steps.iter().all(|s| *s == Step::Forward) {
            causal_nodes.extend(nodes.iter().skip(1).copied());
        }
    }

    // Forbidden set: causal-path nodes and all their descendants.
    let mut forbidden = causal_nodes.clone();
    for &w in &causal_nodes {
        forbidden.extend(descendants_of(g, w));
    }
    if z.iter().any(|v| forbidden.contains(v)) {
        return false;
    }

    // Every proper non-causal path must be blocked.
    let an_z = ancestors_including(g, z);
    for (nodes, steps) in &paths {
        if steps.iter().all(|s| *s == Step::Forward) {
            continue;
        }
        let mut open = true;
        for m in 1..nodes.len() - 1 {
            let collider = steps[m - 1] == Step::Forward && steps[m] == Step::Backward;
            let blocked = if collider {
                !an_z.contains(&nodes[m])
            } else {
                z.contains(&nodes[m])
            };
            if blocked {
                open = false;
                break;
            }
        }
        if open {
            return false;
        }
    }
    true
}

/// Seeded random DAG adjacency: upper-triangular pattern under a random
/// node relabeling.
pub fn random_dag_pattern(
    rng: &mut rand_chacha::ChaCha8Rng,
    d: usize,
    density: f64,
) -> Array2<bool> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut g = Array2::from_elem((d, d), false);
    for a in 0..d {
        for b in (a + 1)..d {
            if rng.random::<f64>() < density {
                g[[order[a], order[b]]] = true;
            }
        }
    }
    g
}
