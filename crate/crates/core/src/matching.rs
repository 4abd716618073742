//! Bipartite matching: maximum-weight assignment for best responses and
//! threshold perfect matchings for the decomposition.

use crate::error::{GameError, Result};

/// Maximum-weight matching on a dense `rows x cols` matrix of non-negative
/// weights (row-major). Returns the column matched to each row, if any, and
/// the total weight. Zero-weight edges are never reported as matched.
///
/// Shortest augmenting paths with potentials; exact on real weights up to
/// rounding. Scans lowest indices first, so ties resolve deterministically.
pub fn max_weight_matching(
    weights: &[f64],
    rows: usize,
    cols: usize,
) -> Result<(Vec<Option<usize>>, f64)> {
    if weights.len() != rows * cols {
        return Err(GameError::DimensionMismatch(format!(
            "{} weights for a {rows}x{cols} matching",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(GameError::InvalidParameter(format!(
            "matching weight {w} is negative or not finite"
        )));
    }
    if rows == 0 || cols == 0 {
        return Ok((vec![None; rows], 0.0));
    }
    let assigned = if rows <= cols {
        assign(rows, cols, |i, j| weights[i * cols + j])
    } else {
        let by_col = assign(cols, rows, |j, i| weights[i * cols + j]);
        let mut out = vec![None; rows];
        for (j, i) in by_col.into_iter().enumerate() {
            if let Some(i) = i {
                out[i] = Some(j);
            }
        }
        out
    };
    let mut total = 0.0;
    let matched = assigned
        .into_iter()
        .enumerate()
        .map(|(i, j)| {
            j.filter(|&j| weights[i * cols + j] > 0.0)
                .inspect(|&j| total += weights[i * cols + j])
        })
        .collect();
    Ok((matched, total))
}

/// Hungarian algorithm for `n <= m`: assigns every row to a distinct column
/// maximizing total weight.
fn assign(n: usize, m: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<Option<usize>> {
    // minimize cost = -weight; arrays are 1-based with sentinel column 0
    let cost = |i: usize, j: usize| -weight(i - 1, j - 1);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; n];
    for j in 1..=m {
        if owner[j] != 0 {
            out[owner[j] - 1] = Some(j - 1);
        }
    }
    out
}

/// Perfect matching of an `n x n` bipartite graph given by `edge(i, j)`,
/// via augmenting paths. Returns the column of each row.
pub(crate) fn perfect_matching(
    n: usize,
    edge: impl Fn(usize, usize) -> bool,
) -> Option<Vec<usize>> {
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| edge(i, j)).collect())
        .collect();
    let mut match_col: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &adjacency, &mut match_col, &mut seen) {
            return None;
        }
    }
    let mut rows = vec![0; n];
    for (j, i) in match_col.into_iter().enumerate() {
        rows[i.expect("perfect matching covers all columns")] = j;
    }
    Some(rows)
}

fn augment(
    i: usize,
    adjacency: &[Vec<usize>],
    match_col: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &j in &adjacency[i] {
        if !seen[j] {
            seen[j] = true;
            if match_col[j].is_none_or(|other| augment(other, adjacency, match_col, seen)) {
                match_col[j] = Some(i);
                return true;
            }
        }
    }
    false
}
