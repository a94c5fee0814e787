//! Hungarian aggregation: the optimal assignment of recommendation
//! positions to distinct catalog items over the position score matrix.

use super::{check_budget, finish, position_score_matrix, Catalog, Group, Method, RecommendationVector,
    SatisfactionReport, ScoringParams};
use crate::{Error, Result};

/// Optimal position-to-column assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Column chosen for each row.
    pub columns: Vec<usize>,
    /// Sum of the chosen weights.
    pub total: f64,
}

/// Maximum total weight of an injective row → column map, by the
/// shortest-augmenting-path Hungarian method with potentials. Rows are
/// added one at a time, so a rectangular `rows ≤ cols` matrix needs no
/// padding. Runs in `O(rows² · cols)`.
fn hungarian_max(w: &[Vec<f64>], cols: &[usize]) -> (Vec<usize>, f64) {
    let n = w.len();
    let m = cols.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // 1-based arrays; column 0 is the virtual start of each augmenting path
    let cost = |i: usize, j: usize| -w[i - 1][cols[j - 1]];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut done = vec![false; m + 1];
        loop {
            done[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if done[j] {
                    continue;
                }
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
            for j in 0..=m {
                if done[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assigned = vec![0usize; n];
    for j in 1..=m {
        if row_of[j] != 0 {
            assigned[row_of[j] - 1] = j - 1;
        }
    }
    let total = assigned
        .iter()
        .enumerate()
        .map(|(i, &j)| w[i][cols[j]])
        .sum();
    (assigned.into_iter().map(|j| cols[j]).collect(), total)
}

/// Maximum-weight assignment of every row of `w` to a distinct column. Among
/// optimal assignments the lexicographically smallest column sequence is
/// returned.
pub fn max_weight_assignment(w: &[Vec<f64>]) -> Result<Assignment> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if w.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("ragged score matrix".into()));
    }
    if rows > cols {
        return Err(Error::CatalogTooSmall { catalog: cols, k: rows });
    }
    if w.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    let all: Vec<usize> = (0..cols).collect();
    let (_, best) = hungarian_max(w, &all);
    let tol = 1e-9 * best.abs().max(1.0);

    // Fix rows in order to the smallest column that still admits an optimum.
    let mut free = all;
    let mut columns = Vec::with_capacity(rows);
    let mut remaining = best;
    for r in 0..rows {
        let rest = &w[r + 1..];
        let mut fixed = None;
        for (pos, &t) in free.iter().enumerate() {
            let others: Vec<usize> = free.iter().copied().filter(|&c| c != t).collect();
            let (_, sub) = hungarian_max(rest, &others);
            if w[r][t] + sub >= remaining - tol {
                fixed = Some((pos, sub));
                break;
            }
        }
        let (pos, sub) = fixed.ok_or_else(|| Error::Numerical("assignment lost optimality".into()))?;
        columns.push(free.remove(pos));
        remaining = sub;
    }
    let total = columns.iter().enumerate().map(|(r, &c)| w[r][c]).sum();
    Ok(Assignment { columns, total })
}

/// Hungarian aggregation over the position score matrix.
pub fn ham(group: &Group, catalog: &Catalog, params: &ScoringParams) -> Result<(RecommendationVector, SatisfactionReport)> {
    check_budget(catalog, params)?;
    let w = position_score_matrix(group, catalog, params)?;
    let a = max_weight_assignment(&w)?;
    Ok(finish(Method::Ham, group, catalog, params, &a.columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::greedy_assignment;

    fn brute_force(w: &[Vec<f64>]) -> f64 {
        fn go(w: &[Vec<f64>], r: usize, used: &mut Vec<bool>) -> f64 {
            if r == w.len() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for t in 0..used.len() {
                if !used[t] {
                    used[t] = true;
                    best = best.max(w[r][t] + go(w, r + 1, used));
                    used[t] = false;
                }
            }
            best
        }
        go(w, 0, &mut vec![false; w[0].len()])
    }

    #[test]
    fn two_by_two() {
        let w = vec![vec![1.0, 5.0], vec![2.0, 3.0]];
        let a = max_weight_assignment(&w).unwrap();
        assert_eq!(a.columns, vec![1, 0]);
        assert_eq!(a.total, 7.0);
    }

    #[test]
    fn beats_greedy() {
        let w = vec![vec![10.0, 9.0], vec![10.0, 0.0]];
        let a = max_weight_assignment(&w).unwrap();
        assert_eq!(a.columns, vec![1, 0]);
        assert_eq!(a.total, 19.0);
        assert_eq!(greedy_assignment(&w), vec![0, 1]);
    }

    #[test]
    fn single_row_matches_greedy() {
        let w = vec![vec![0.5, 3.0, 3.0, 1.0]];
        assert_eq!(max_weight_assignment(&w).unwrap().columns, greedy_assignment(&w));
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let w = vec![vec![1.0; 3], vec![1.0; 3]];
        assert_eq!(max_weight_assignment(&w).unwrap().columns, vec![0, 1]);
        let w = vec![vec![0.0, 2.0, 2.0], vec![2.0, 2.0, 0.0]];
        assert_eq!(max_weight_assignment(&w).unwrap().columns, vec![1, 0]);
    }

    #[test]
    fn rectangular_and_errors() {
        let w = vec![vec![1.0, 2.0, 3.0]; 2];
        assert_eq!(max_weight_assignment(&w).unwrap().total, 5.0);
        assert!(max_weight_assignment(&[vec![1.0], vec![1.0]]).is_err());
        assert!(max_weight_assignment(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert_eq!(max_weight_assignment(&[]).unwrap().total, 0.0);
    }

    #[test]
    fn negative_weights() {
        let w = vec![vec![-1.0, -5.0, -2.0], vec![-3.0, -1.0, -9.0]];
        let a = max_weight_assignment(&w).unwrap();
        assert_eq!(a.total, brute_force(&w));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrices() -> impl Strategy<Value = Vec<Vec<f64>>> {
            (1usize..6, 0usize..3).prop_flat_map(|(rows, extra)| {
                prop::collection::vec(prop::collection::vec((0u8..12).prop_map(f64::from), rows + extra), rows)
            })
        }

        proptest! {
            #[test]
            fn optimal_and_dominates_greedy(w in matrices()) {
                let a = max_weight_assignment(&w).unwrap();
                prop_assert_eq!(a.total, brute_force(&w));
                let g: f64 = greedy_assignment(&w).iter().enumerate().map(|(r, &c)| w[r][c]).sum();
                prop_assert!(a.total >= g);
                let mut seen = a.columns.clone();
                seen.sort_unstable();
                seen.dedup();
                prop_assert_eq!(seen.len(), a.columns.len());
            }
        }
    }
}
