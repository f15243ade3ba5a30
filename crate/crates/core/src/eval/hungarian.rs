//! Minimum-cost perfect assignment on a square matrix (Hungarian algorithm
//! with row/column potentials, O(n^3)).

/// Returns `assignment[row] = col` minimizing the total cost of a square
/// `n x n` row-major matrix.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials; column 0 is a virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1]; // owner[col] = row matched to col
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
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
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}

/// Maximum-weight matching on a rectangular `rows x cols` matrix, padding with
/// zeros. Returns `(row, col)` pairs for real rows and columns only.
pub fn max_weight_matching(weights: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    assert_eq!(weights.len(), rows * cols);
    let n = rows.max(cols);
    let max = weights.iter().copied().fold(0.0, f64::max);
    let mut cost = vec![max; n * n];
    for r in 0..rows {
        for c in 0..cols {
            cost[r * n + c] = max - weights[r * cols + c];
        }
    }
    min_cost_assignment(&cost, n).into_iter().enumerate().filter(|&(r, c)| r < rows && c < cols).collect()
}
