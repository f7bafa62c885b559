//! Exact discrete optimal transport by the transportation simplex.

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView2};

use super::ScoreError;

/// Marginal totals may differ by at most this much.
pub const MASS_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub plan: Array2<f64>,
    pub cost: f64,
}

/// Minimum of `sum C[i][j] P[i][j]` over plans `P >= 0` with row sums
/// `source` and column sums `target`.
///
/// `target` is rescaled to the total of `source` (they must agree within
/// [`MASS_TOLERANCE`]). The result is a basic solution, so at most
/// `N + M - 1` entries are nonzero.
pub fn solve_ot(c: ArrayView2<f64>, source: &[f64], target: &[f64]) -> Result<TransportPlan, ScoreError> {
    let (n, m) = c.dim();
    if n == 0 || m == 0 {
        return Err(ScoreError::EmptyMatrix);
    }
    if source.len() != n || target.len() != m {
        return Err(ScoreError::Marginals(format!(
            "cost matrix is {n}x{m} but masses have lengths {} and {}",
            source.len(),
            target.len()
        )));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(ScoreError::NonFinite);
    }
    if source.iter().chain(target).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(ScoreError::Marginals("masses must be finite and non-negative".into()));
    }
    let total: f64 = source.iter().sum();
    let target_total: f64 = target.iter().sum();
    if (total - target_total).abs() > MASS_TOLERANCE {
        return Err(ScoreError::Marginals(format!(
            "source mass {total} and target mass {target_total} differ by more than {MASS_TOLERANCE}"
        )));
    }
    let target: Vec<f64> =
        if target_total > 0.0 { target.iter().map(|b| b * total / target_total).collect() } else { target.to_vec() };

    let mut basis = northwest_corner(source, &target);
    let scale = c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let eps = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut x = tree_flow(&basis, n, m, source, &target);
    let max_iter = 1000 * (n + m) * (n + m);
    let mut iter = 0;
    loop {
        iter += 1;
        if iter > max_iter {
            return Err(ScoreError::NoConvergence(max_iter));
        }
        let (u, v) = potentials(&basis, c, n, m);
        let entering = (0..n)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .find(|&(i, j)| !basis.contains(&(i, j)) && c[[i, j]] - u[i] - v[j] < -eps);
        let Some((ei, ej)) = entering else { break };
        let cycle = tree_cycle(&basis, n, m, ei, ej);
        let mut leaving: Option<((usize, usize), f64)> = None;
        for &cell in cycle.iter().skip(1).step_by(2) {
            let q = x[cell];
            let better = match leaving {
                None => true,
                Some((best, t)) => q < t || (q == t && cell < best),
            };
            if better {
                leaving = Some((cell, q));
            }
        }
        let (leave_cell, _) = leaving.expect("a cycle has at least one decreasing cell");
        basis.retain(|&b| b != leave_cell);
        basis.push((ei, ej));
        x = tree_flow(&basis, n, m, source, &target);
    }

    let mut cost = 0.0;
    for i in 0..n {
        for j in 0..m {
            cost += c[[i, j]] * x[[i, j]];
        }
    }
    Ok(TransportPlan { plan: x, cost })
}

/// Northwest-corner starting basis: exactly `N + M - 1` cells forming a
/// spanning tree with non-negative flows. Ties keep a zero-flow cell.
fn northwest_corner(source: &[f64], target: &[f64]) -> Vec<(usize, usize)> {
    let (n, m) = (source.len(), target.len());
    let mut ra = source.to_vec();
    let mut rb = target.to_vec();
    let mut basis = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        basis.push((i, j));
        let q = ra[i].min(rb[j]);
        ra[i] -= q;
        rb[j] -= q;
        if i + 1 == n && j + 1 == m {
            break;
        }
        if j + 1 == m || (i + 1 < n && ra[i] <= rb[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    basis
}

/// Flows on a spanning-tree basis, determined by peeling leaves. Tiny
/// negative values from rounding are clamped to zero.
fn tree_flow(basis: &[(usize, usize)], n: usize, m: usize, source: &[f64], target: &[f64]) -> Array2<f64> {
    let mut x = Array2::zeros((n, m));
    let mut rest: Vec<f64> = source.iter().chain(target).copied().collect();
    let mut degree = vec![0usize; n + m];
    for &(i, j) in basis {
        degree[i] += 1;
        degree[n + j] += 1;
    }
    let mut alive = vec![true; basis.len()];
    for _ in 0..basis.len() {
        // Deterministic: lowest-index leaf node, then its only live cell.
        let leaf = (0..n + m).find(|&v| degree[v] == 1).expect("a tree always has a leaf");
        let k = (0..basis.len())
            .find(|&k| alive[k] && (basis[k].0 == leaf || n + basis[k].1 == leaf))
            .expect("leaf has one live cell");
        let (i, j) = basis[k];
        let other = if leaf == i { n + j } else { i };
        let flow = rest[leaf].max(0.0);
        x[[i, j]] = flow;
        rest[leaf] = 0.0;
        rest[other] -= flow;
        alive[k] = false;
        degree[i] -= 1;
        degree[n + j] -= 1;
    }
    x
}

/// Dual potentials with `u[0] = 0` and `u[i] + v[j] = C[i][j]` on the basis.
fn potentials(basis: &[(usize, usize)], c: ArrayView2<f64>, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![f64::NAN; n];
    let mut v = vec![f64::NAN; m];
    u[0] = 0.0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        for &(i, j) in basis {
            if node < n && i == node && v[j].is_nan() {
                v[j] = c[[i, j]] - u[i];
                queue.push_back(n + j);
            } else if node >= n && j == node - n && u[i].is_nan() {
                u[i] = c[[i, j]] - v[j];
                queue.push_back(i);
            }
        }
    }
    (u, v)
}

/// The cycle closed by adding `(ei, ej)` to the basis. The entering cell
/// comes first; cells at even positions gain mass and odd positions lose it.
fn tree_cycle(basis: &[(usize, usize)], n: usize, m: usize, ei: usize, ej: usize) -> Vec<(usize, usize)> {
    // Breadth-first search from column ej to row ei through basic cells.
    let start = n + ej;
    let mut prev: Vec<Option<(usize, (usize, usize))>> = vec![None; n + m];
    let mut seen = vec![false; n + m];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == ei {
            break;
        }
        for &(i, j) in basis {
            let next = if node < n && i == node {
                n + j
            } else if node >= n && j == node - n {
                i
            } else {
                continue;
            };
            if !seen[next] {
                seen[next] = true;
                prev[next] = Some((node, (i, j)));
                queue.push_back(next);
            }
        }
    }
    let mut cycle = vec![(ei, ej)];
    let mut node = ei;
    while node != start {
        let (p, cell) = prev[node].expect("basis is a spanning tree");
        cycle.push(cell);
        node = p;
    }
    cycle
}
