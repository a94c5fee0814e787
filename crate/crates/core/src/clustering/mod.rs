//! Grouping of review instances and users.

mod kmeans;
mod silhouette;
mod spectral;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

pub use kmeans::{inertia, kmeans, kmeans_with, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use silhouette::{silhouette_mean, silhouette_samples};
pub use spectral::{spectral_cluster, spectral_embedding};

use crate::corpus::ReviewRecord;
use crate::embedding::SimilarityMatrix;
use crate::{Error, Result};

/// Instance labels together with the per-user labels derived from them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub instance_labels: Vec<usize>,
    pub user_labels: BTreeMap<String, usize>,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    /// Users of each cluster, in user-id order. Clusters without users are
    /// returned as empty lists.
    pub fn groups(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (user, &label) in &self.user_labels {
            out[label].push(user.as_str());
        }
        out
    }
}

/// Labels each user with the most frequent label among their instances;
/// ties go to the smallest cluster id.
pub fn assign_users(records: &[ReviewRecord], instance_labels: &[usize]) -> Result<ClusterAssignment> {
    if records.len() != instance_labels.len() {
        return Err(Error::LengthMismatch(records.len(), instance_labels.len()));
    }
    let n_clusters = instance_labels.iter().max().map_or(1, |m| m + 1);
    let mut votes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (r, &l) in records.iter().zip(instance_labels) {
        votes.entry(&r.user_id).or_insert_with(|| vec![0; n_clusters])[l] += 1;
    }
    let user_labels = votes
        .into_iter()
        .map(|(user, counts)| {
            let best = counts.iter().max().copied().unwrap_or(0);
            let label = counts.iter().position(|&c| c == best).unwrap_or(0);
            (user.to_string(), label)
        })
        .collect();
    Ok(ClusterAssignment {
        instance_labels: instance_labels.to_vec(),
        user_labels,
        n_clusters,
    })
}

/// Mean silhouette for each candidate cluster count and the winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub per_k: BTreeMap<usize, f64>,
    pub chosen_k: usize,
}

/// Runs spectral clustering for every `k` in `k_range` and keeps the count
/// with the highest mean silhouette (distance `1 − sim`); ties keep the
/// smaller `k`.
pub fn select_k(sim: &SimilarityMatrix, k_range: RangeInclusive<usize>, seed: u64) -> Result<SilhouetteReport> {
    let m = sim.n_instances();
    if k_range.is_empty() {
        return Err(Error::InvalidInput("empty cluster-count range".into()));
    }
    if *k_range.start() < 2 || *k_range.end() + 1 > m {
        return Err(Error::InvalidInput(format!(
            "cluster-count range {}..={} must lie within [2, {}]",
            k_range.start(),
            k_range.end(),
            m.saturating_sub(1)
        )));
    }
    let dist = sim.to_distances();
    let mut per_k = BTreeMap::new();
    let mut chosen: Option<(usize, f64)> = None;
    for k in k_range {
        let labels = spectral_cluster(sim, k, seed)?;
        let s = silhouette_mean(&dist, &labels)?;
        per_k.insert(k, s);
        if chosen.is_none_or(|(_, best)| s > best) {
            chosen = Some((k, s));
        }
    }
    Ok(SilhouetteReport {
        per_k,
        chosen_k: chosen.map(|c| c.0).expect("non-empty range"),
    })
}
