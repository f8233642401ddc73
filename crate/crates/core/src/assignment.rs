//! Minimum-cost perfect matching on a square cost matrix (Hungarian method
//! with potentials, O(n³)).

/// Returns `p` with `p[row] = column` minimizing `Σ cost[row][p[row]]`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays with a sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        owner[0] = row;
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
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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

    let mut p = vec![0; n];
    for j in 1..=n {
        p[owner[j] - 1] = j - 1;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(cost: &[Vec<f64>], p: &[usize]) -> f64 {
        p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn small_known_case() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let p = min_cost_assignment(&cost);
        assert_eq!(total(&cost, &p), 5.0);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, seed in proptest::collection::vec(0.0f64..10.0, 36)) {
            let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| seed[i * 6 + j]).collect()).collect();
            let p = min_cost_assignment(&cost);
            let mut seen = p.clone();
            seen.sort();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let best = permutations(n).iter().map(|q| total(&cost, q)).fold(f64::INFINITY, f64::min);
            prop_assert!((total(&cost, &p) - best).abs() < 1e-12);
        }
    }
}
