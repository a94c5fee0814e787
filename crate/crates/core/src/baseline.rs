//! Predict & Cluster: complete the utility matrix with user-based
//! collaborative filtering, then group users by k-means on their rows.

use std::collections::BTreeMap;

use crate::clustering::{kmeans, ClusterAssignment};
use crate::corpus::UtilityMatrix;
use crate::{Error, Result};

pub const DEFAULT_NEIGHBORS: usize = 20;
pub const DEFAULT_MIN_OVERLAP: usize = 2;

/// Dense ratings: observed cells copied, the rest predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRatingMatrix {
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub observed: Vec<Vec<bool>>,
}

/// Pearson correlation over co-rated items; 0 when fewer than
/// `min_overlap` items overlap or either side has no variance.
fn pearson(a: &BTreeMap<usize, f64>, b: &BTreeMap<usize, f64>, min_overlap: usize) -> f64 {
    let common: Vec<(f64, f64)> = a
        .iter()
        .filter_map(|(i, &x)| b.get(i).map(|&y| (x, y)))
        .collect();
    if common.len() < min_overlap.max(1) {
        return 0.0;
    }
    let n = common.len() as f64;
    let ma = common.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = common.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in &common {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0)
}

/// Fills every unrated cell with
/// `r̄_u + Σ sim(u,v)(r_vi − r̄_v) / Σ |sim(u,v)|` over the `neighbors` users
/// with the largest `|sim|` that rated the item. Falls back to the user's
/// mean, then the global mean; predictions are clamped to `[1, 5]`.
pub fn predict_ratings(um: &UtilityMatrix, neighbors: usize, min_overlap: usize) -> Result<DenseRatingMatrix> {
    if um.is_empty() {
        return Err(Error::InvalidInput("utility matrix has no ratings".into()));
    }
    let n_users = um.users.len();
    let n_items = um.items.len();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_users];
    for (&(u, i), &r) in &um.entries {
        rows[u].insert(i, f64::from(r));
    }
    let global_mean = um.entries.values().map(|&r| f64::from(r)).sum::<f64>() / um.len() as f64;
    let means: Vec<Option<f64>> = rows
        .iter()
        .map(|r| (!r.is_empty()).then(|| r.values().sum::<f64>() / r.len() as f64))
        .collect();

    let mut sim = vec![vec![0.0; n_users]; n_users];
    for u in 0..n_users {
        for v in u + 1..n_users {
            let s = pearson(&rows[u], &rows[v], min_overlap);
            sim[u][v] = s;
            sim[v][u] = s;
        }
    }

    let mut values = vec![vec![0.0; n_items]; n_users];
    let mut observed = vec![vec![false; n_items]; n_users];
    for u in 0..n_users {
        let base = means[u].unwrap_or(global_mean);
        for i in 0..n_items {
            if let Some(&r) = rows[u].get(&i) {
                values[u][i] = r;
                observed[u][i] = true;
                continue;
            }
            let mut raters: Vec<usize> = (0..n_users)
                .filter(|&v| v != u && sim[u][v] != 0.0 && rows[v].contains_key(&i))
                .collect();
            raters.sort_by(|&x, &y| sim[u][y].abs().total_cmp(&sim[u][x].abs()).then(x.cmp(&y)));
            raters.truncate(neighbors);
            let (mut num, mut den) = (0.0, 0.0);
            for &v in &raters {
                let mean_v = means[v].expect("neighbour has ratings");
                num += sim[u][v] * (rows[v][&i] - mean_v);
                den += sim[u][v].abs();
            }
            let pred = if den > 0.0 { base + num / den } else { base };
            values[u][i] = pred.clamp(1.0, 5.0);
        }
    }
    Ok(DenseRatingMatrix {
        users: um.users.clone(),
        items: um.items.clone(),
        values,
        observed,
    })
}

/// k-means over user rows. Each user is one point, so user labels equal
/// instance labels.
pub fn cluster_users(m: &DenseRatingMatrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let labels = kmeans(&m.values, k, seed)?;
    let user_labels = m
        .users
        .iter()
        .cloned()
        .zip(labels.iter().copied())
        .collect();
    Ok(ClusterAssignment {
        instance_labels: labels,
        user_labels,
        n_clusters: k,
    })
}
