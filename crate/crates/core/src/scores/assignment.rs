//! Rectangular linear assignment with deterministic tie-breaking.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ScoreError;

/// A minimum-cost matching of size `min(N, M)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    /// `(row, column)` pairs sorted by row.
    pub matches: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Minimum-cost injective matching between the smaller and the larger index
/// set of `c`.
///
/// Among all optimal matchings the lexicographically smallest sorted match
/// list is returned, where costs within a relative `1e-11` are treated as
/// equal. The returned cost is the plain sum of the matched entries.
pub fn solve_assignment(c: ArrayView2<f64>) -> Result<AssignmentResult, ScoreError> {
    let (n, m) = c.dim();
    if n == 0 || m == 0 {
        return Err(ScoreError::EmptyMatrix);
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(ScoreError::NonFinite);
    }
    let size = n.min(m);
    let opt = min_cost(c, &(0..n).collect::<Vec<_>>(), &(0..m).collect::<Vec<_>>()).expect("full problem is feasible");
    let scale = c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let eps = 1e-11 * scale * size as f64;

    let mut matches: Vec<(usize, usize)> = Vec::with_capacity(size);
    let mut fixed = 0.0;
    let mut col_used = vec![false; m];
    for _ in 0..size {
        let first_row = matches.last().map_or(0, |&(i, _)| i + 1);
        let remaining = size - matches.len() - 1;
        let mut chosen = None;
        'search: for i in first_row..n {
            let rows: Vec<usize> = (i + 1..n).collect();
            if rows.len() < remaining {
                break;
            }
            for j in 0..m {
                if col_used[j] {
                    continue;
                }
                let cols: Vec<usize> = (0..m).filter(|&q| !col_used[q] && q != j).collect();
                if cols.len() < remaining {
                    continue;
                }
                let rest = if remaining == 0 {
                    0.0
                } else if rows.len().min(cols.len()) != remaining {
                    continue;
                } else {
                    min_cost(c, &rows, &cols).expect("non-empty subproblem")
                };
                if fixed + c[[i, j]] + rest <= opt + eps {
                    chosen = Some((i, j));
                    break 'search;
                }
            }
        }
        let (i, j) = chosen.expect("an optimal completion always exists");
        fixed += c[[i, j]];
        col_used[j] = true;
        matches.push((i, j));
    }
    let cost = matches.iter().map(|&(i, j)| c[[i, j]]).sum();
    Ok(AssignmentResult { matches, cost })
}

/// Optimal cost of the rectangular assignment restricted to `rows` x `cols`,
/// summed over the matched entries in row order.
fn min_cost(c: ArrayView2<f64>, rows: &[usize], cols: &[usize]) -> Option<f64> {
    if rows.is_empty() || cols.is_empty() {
        return None;
    }
    let sub = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| c[[rows[i], cols[j]]]);
    let pairs = hungarian(sub.view());
    let mut pairs = pairs;
    pairs.sort_unstable();
    Some(pairs.iter().map(|&(i, j)| sub[[i, j]]).sum())
}

/// Shortest augmenting path Hungarian method. Returns one optimal matching
/// of size `min(N, M)` as `(row, col)` pairs.
pub(crate) fn hungarian(c: ArrayView2<f64>) -> Vec<(usize, usize)> {
    let (rows, cols) = c.dim();
    let transposed = rows > cols;
    let a = if transposed { c.reversed_axes() } else { c };
    let (n, m) = a.dim();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m).filter(|&j| p[j] != 0).map(|j| if transposed { (j - 1, p[j] - 1) } else { (p[j] - 1, j - 1) }).collect()
}
