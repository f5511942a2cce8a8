//! Exact minimum-cost assignment (Hungarian method with potentials).

/// Solves a `k x k` assignment problem given row-major `cost`.
///
/// Returns `(sigma, total)` where row `i` is assigned column `sigma[i]`.
pub fn hungarian(cost: &[f64], k: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), k * k, "cost matrix must be k x k");
    if k == 0 {
        return (Vec::new(), 0.0);
    }
    let a = |i: usize, j: usize| cost[(i - 1) * k + (j - 1)];
    // 1-based potentials; column 0 is the virtual root of each augmenting search
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = a(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
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
    let mut sigma = vec![0; k];
    for j in 1..=k {
        sigma[p[j] - 1] = j - 1;
    }
    let total = sigma.iter().enumerate().map(|(i, &j)| cost[i * k + j]).sum();
    (sigma, total)
}

/// Optimal assignment with ties broken toward the lexicographically smallest
/// permutation.
///
/// Rows are fixed one at a time to the smallest column that still admits an
/// optimal completion; costs within `1e-12` relative of the optimum count as ties.
pub fn lex_min_assignment(cost: &[f64], k: usize) -> Vec<usize> {
    let (_, optimum) = hungarian(cost, k);
    let tol = 1e-12 * optimum.abs();
    let mut sigma = Vec::with_capacity(k);
    let mut free_cols: Vec<usize> = (0..k).collect();
    let mut fixed = 0.0;
    for row in 0..k {
        let rest_rows = row + 1..k;
        let mut chosen = None;
        for (pos, &col) in free_cols.iter().enumerate() {
            let cols: Vec<usize> = free_cols
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != pos)
                .map(|(_, &c)| c)
                .collect();
            let sub_k = cols.len();
            let mut sub = Vec::with_capacity(sub_k * sub_k);
            for r in rest_rows.clone() {
                sub.extend(cols.iter().map(|&c| cost[r * k + c]));
            }
            let (_, rest) = hungarian(&sub, sub_k);
            if fixed + cost[row * k + col] + rest <= optimum + tol {
                chosen = Some(pos);
                break;
            }
        }
        // the optimal column always qualifies; fall back to it for safety under rounding
        let pos = chosen.unwrap_or(0);
        let col = free_cols.remove(pos);
        fixed += cost[row * k + col];
        sigma.push(col);
    }
    sigma
}
