//! Square linear assignment by the Hungarian method with potentials, O(n^3).

use alloc::vec;
use alloc::vec::Vec;

/// Returns `assign` with `assign[row] = column` minimizing the summed cost.
///
/// `cost` is row-major `n x n`. Ties are resolved deterministically by the
/// column scan order.
pub fn solve(cost: &[i64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_to = vec![0i64; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        min_to.fill(INF);
        used.fill(false);
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = INF;
            let mut col1 = 0usize;
            for col in 1..=n {
                if !used[col] {
                    let reduced = cost[(r0 - 1) * n + (col - 1)] - u[r0] - v[col];
                    if reduced < min_to[col] {
                        min_to[col] = reduced;
                        way[col] = col0;
                    }
                    if min_to[col] < delta {
                        delta = min_to[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_to[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for col in 1..=n {
        assign[owner[col] - 1] = col - 1;
    }
    assign
}

/// Total cost of an assignment.
pub fn total_cost(cost: &[i64], n: usize, assign: &[usize]) -> i64 {
    assign.iter().enumerate().map(|(r, &c)| cost[r * n + c]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(cost: &[i64], n: usize) -> i64 {
        fn rec(cost: &[i64], n: usize, row: usize, used: &mut Vec<bool>) -> i64 {
            if row == n {
                return 0;
            }
            let mut best = i64::MAX;
            for c in 0..n {
                if !used[c] {
                    used[c] = true;
                    best = best.min(cost[row * n + c] + rec(cost, n, row + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        rec(cost, n, 0, &mut vec![false; n])
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in 1..=6 {
            for _ in 0..50 {
                let cost: Vec<i64> = (0..n * n).map(|_| rng.random_range(-20..50)).collect();
                let assign = solve(&cost, n);
                let mut seen = vec![false; n];
                for &c in &assign {
                    assert!(!seen[c]);
                    seen[c] = true;
                }
                assert_eq!(total_cost(&cost, n, &assign), brute_force(&cost, n));
            }
        }
    }

    #[test]
    fn classic_example() {
        let cost = [4, 1, 3, 2, 0, 5, 3, 2, 2];
        let assign = solve(&cost, 3);
        assert_eq!(total_cost(&cost, 3, &assign), 5);
    }

    #[test]
    fn empty_matrix() {
        assert!(solve(&[], 0).is_empty());
    }
}
