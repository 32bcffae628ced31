//! Exact minimum-cost linear assignment on a square cost matrix.
//!
//! Shortest-augmenting-path solver with dual potentials, O(n^3). This is
//! the same family as the Jonker-Volgenant algorithm; only the optimum is
//! relied upon, and tests pin it to exhaustive search on small inputs.

use crate::matrix::Matrix;
use crate::{Error, Result, Scalar};

/// Minimum-cost perfect matching. Returns `(assignment, total_cost)` where
/// `assignment[row] = col`.
pub fn solve<T: Scalar>(cost: &Matrix<T>) -> Result<(Vec<usize>, T)> {
    let n = cost.rows();
    if cost.cols() != n {
        return Err(Error::ShapeMismatch {
            what: "assignment cost matrix".into(),
            expected: format!("{n}x{n}"),
            actual: format!("{}x{}", cost.rows(), cost.cols()),
        });
    }
    if !cost.all_finite() {
        return Err(Error::InvalidArgument(
            "assignment cost matrix has non-finite entries".into(),
        ));
    }
    if n == 0 {
        return Ok((Vec::new(), T::zero()));
    }

    let inf = T::infinity();
    // 1-based potentials; p[j] = row matched to column j.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];

        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;

            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
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
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
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

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost.get(i, assignment[i])).sum();
    Ok((assignment, total))
}

/// Exhaustive minimum over all permutations. Test oracle; factorial cost.
pub fn brute_force<T: Scalar>(cost: &Matrix<T>) -> (Vec<usize>, T) {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "brute_force needs a square matrix");
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm = perm.clone();
    let mut best = total_cost(cost, &perm);
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let t = total_cost(cost, &perm);
            if t < best {
                best = t;
                best_perm = perm.clone();
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    (best_perm, best)
}

fn total_cost<T: Scalar>(cost: &Matrix<T>, perm: &[usize]) -> T {
    perm.iter()
        .enumerate()
        .map(|(r, &c)| cost.get(r, c))
        .sum()
}
