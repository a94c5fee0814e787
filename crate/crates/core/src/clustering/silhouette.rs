use std::collections::BTreeMap;

use crate::{Error, Result};

/// Per-sample silhouette `(y − x) / max(x, y)` over a precomputed distance
/// matrix, where `x` is the mean distance to the other members of the
/// sample's cluster and `y` the smallest mean distance to another cluster.
/// Members of singleton clusters score 0.
pub fn silhouette_samples(dist: &[Vec<f64>], labels: &[usize]) -> Result<Vec<f64>> {
    let m = labels.len();
    if dist.len() != m || dist.iter().any(|r| r.len() != m) {
        return Err(Error::LengthMismatch(dist.len(), m));
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *sizes.entry(l).or_insert(0) += 1;
    }
    if sizes.len() < 2 {
        return Err(Error::InvalidInput(
            "silhouette needs at least two clusters".into(),
        ));
    }
    let slot: BTreeMap<usize, usize> = sizes.keys().enumerate().map(|(s, &l)| (l, s)).collect();
    let counts: Vec<usize> = sizes.values().copied().collect();

    let mut scores = Vec::with_capacity(m);
    let mut sums = vec![0.0; counts.len()];
    for i in 0..m {
        let own = slot[&labels[i]];
        if counts[own] < 2 {
            scores.push(0.0);
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..m {
            if j != i {
                sums[slot[&labels[j]]] += dist[i][j];
            }
        }
        let x = sums[own] / (counts[own] - 1) as f64;
        let y = (0..counts.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = x.max(y);
        scores.push(if denom > 0.0 { (y - x) / denom } else { 0.0 });
    }
    Ok(scores)
}

/// Mean silhouette over all samples.
pub fn silhouette_mean(dist: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let s = silhouette_samples(dist, labels)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_pairs_score_one() {
        let d = |a: usize, b: usize| if a / 2 == b / 2 { 0.0 } else { 1.0 };
        let dist: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 0.0 } else { d(i, j) }).collect())
            .collect();
        assert_eq!(silhouette_mean(&dist, &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn equal_inner_and_outer_distance_scores_zero() {
        // every off-diagonal distance is 1, so x = y for all samples
        let dist: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let s = silhouette_samples(&dist, &[0, 0, 1, 1]).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn singleton_cluster_member_scores_zero() {
        let dist = vec![
            vec![0.0, 1.0, 4.0],
            vec![1.0, 0.0, 4.0],
            vec![4.0, 4.0, 0.0],
        ];
        let s = silhouette_samples(&dist, &[0, 0, 7]).unwrap();
        assert_eq!(s[2], 0.0);
        assert_eq!(s[0], 0.75);
    }

    #[test]
    fn one_cluster_is_error() {
        let dist = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(silhouette_mean(&dist, &[0, 0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bounded(
                pts in prop::collection::vec(-10.0f64..10.0, 3..20),
                labels in prop::collection::vec(0usize..3, 20),
            ) {
                let labels = &labels[..pts.len()];
                let distinct: std::collections::HashSet<_> = labels.iter().collect();
                prop_assume!(distinct.len() >= 2);
                let dist: Vec<Vec<f64>> = pts.iter()
                    .map(|a| pts.iter().map(|b| (a - b).abs()).collect()).collect();
                let s = silhouette_mean(&dist, labels).unwrap();
                prop_assert!((-1.0..=1.0).contains(&s));
            }
        }
    }
}
