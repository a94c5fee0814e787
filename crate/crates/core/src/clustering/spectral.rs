//! Normalised spectral clustering over a precomputed affinity.

use nalgebra::{DMatrix, SymmetricEigen};

use super::kmeans::kmeans;
use crate::embedding::SimilarityMatrix;
use crate::{Error, Result};

/// Components smaller than this are treated as zero when fixing the sign
/// of an eigenvector.
const SIGN_EPS: f64 = 1e-10;

/// Row-normalised spectral embedding: the `k` eigenvectors of
/// `I − D^(−1/2) A D^(−1/2)` with the smallest eigenvalues, where
/// `A = max(sim, 0)`. Returns `m` rows of length `k`.
pub fn spectral_embedding(sim: &SimilarityMatrix, k: usize) -> Result<Vec<Vec<f64>>> {
    let m = sim.n_instances();
    if k > m {
        return Err(Error::TooManyClusters { k, m });
    }
    let affinity = DMatrix::from_fn(m, m, |i, j| sim.get(i, j).max(0.0));
    let inv_sqrt_deg: Vec<f64> = (0..m)
        .map(|i| {
            let d: f64 = affinity.row(i).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let laplacian = DMatrix::from_fn(m, m, |i, j| {
        let norm = inv_sqrt_deg[i] * affinity[(i, j)] * inv_sqrt_deg[j];
        if i == j {
            1.0 - norm
        } else {
            -norm
        }
    });
    // Symmetrise exactly; the solver reads only one triangle anyway.
    let laplacian = (&laplacian + laplacian.transpose()) * 0.5;

    let eig = SymmetricEigen::try_new(laplacian, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });

    let mut rows = vec![vec![0.0; k]; m];
    for (col, &idx) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let sign = v
            .iter()
            .find(|x| x.abs() > SIGN_EPS)
            .map_or(1.0, |x| x.signum());
        for i in 0..m {
            rows[i][col] = sign * v[i];
        }
    }
    for row in &mut rows {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite spectral embedding".into()));
    }
    Ok(rows)
}

/// Instance labels from spectral clustering into `k ≥ 2` groups.
pub fn spectral_cluster(sim: &SimilarityMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidInput("spectral clustering needs k >= 2".into()));
    }
    let embedding = spectral_embedding(sim, k)?;
    kmeans(&embedding, k, seed)
}
