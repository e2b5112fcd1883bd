//! Rectangular minimum-cost assignment (shortest augmenting path with potentials).
//!
//! Gated entries are `f64::INFINITY`. The solver maximizes the number of
//! finite pairs first and minimizes their total cost second.

use nalgebra::DMatrix;

/// Rows are tracks, columns are detections.
pub type CostMatrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    /// Sum of the retained pairs' costs, accumulated in row order.
    pub total_cost: f64,
}

/// Solves the assignment and strips pairs costing more than `max_cost`.
///
/// Ties between equal-cost optima resolve deterministically: the solver
/// inserts rows in ascending order and scans columns in ascending order,
/// keeping the first strict improvement.
pub fn solve_assignment(costs: &CostMatrix, max_cost: f64) -> Assignment {
    let (n, m) = costs.shape();
    if n == 0 || m == 0 {
        return Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..n).collect(),
            unmatched_cols: (0..m).collect(),
            total_cost: 0.0,
        };
    }

    let transposed = n > m;
    let work = if transposed {
        costs.transpose()
    } else {
        costs.clone()
    };
    let row_to_col = min_cost_complete(&work);

    let mut pairs = Vec::new();
    for (r, &c) in row_to_col.iter().enumerate() {
        let (row, col) = if transposed { (c, r) } else { (r, c) };
        let v = costs[(row, col)];
        if v.is_finite() && v <= max_cost {
            pairs.push((row, col));
        }
    }
    pairs.sort_unstable();

    let mut row_used = vec![false; n];
    let mut col_used = vec![false; m];
    let mut total_cost = 0.0;
    for &(r, c) in &pairs {
        row_used[r] = true;
        col_used[c] = true;
        total_cost += costs[(r, c)];
    }
    Assignment {
        pairs,
        unmatched_rows: (0..n).filter(|&r| !row_used[r]).collect(),
        unmatched_cols: (0..m).filter(|&c| !col_used[c]).collect(),
        total_cost,
    }
}

/// Assigns every row of an `n x m` matrix (`n <= m`) to a distinct column.
/// Infinite entries are replaced by a penalty larger than any finite total.
fn min_cost_complete(a: &CostMatrix) -> Vec<usize> {
    let (n, m) = a.shape();
    debug_assert!(n <= m);

    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for &v in a.iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let penalty = (hi - lo + 1.0) * (n as f64 + 1.0) + hi.abs();
    let cost = |i: usize, j: usize| {
        let v = a[(i, j)];
        if v.is_finite() {
            v
        } else {
            penalty
        }
    };

    // 1-based potentials; column 0 is a virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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

    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = j - 1;
        }
    }
    row_to_col
}
