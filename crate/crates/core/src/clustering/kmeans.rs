//! Lloyd's k-means with k-means++ seeding.
//!
//! Seeding draws from a ChaCha8 stream initialised with
//! `ChaCha8Rng::seed_from_u64(seed)`, so a given seed always yields the same
//! labels on the same input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means with the default iteration cap and tolerance.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    kmeans_with(points, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL)
}

pub fn kmeans_with(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<usize>> {
    let m = points.len();
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if k > m {
        return Err(Error::TooManyClusters { k, m });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points must share one dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(points, k, &mut rng);
    let mut labels = assign(points, &mut centers);

    for _ in 0..max_iter {
        let next = centroids(points, &labels, k, dim);
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        let relabeled = assign(points, &mut centers);
        if relabeled == labels {
            break;
        }
        labels = relabeled;
        if shift < tol {
            break;
        }
    }
    Ok(labels)
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = points.len();
    let mut chosen = vec![rng.random_range(0..m)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `acc` just short of `target`
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // every point coincides with a centre already chosen
            (0..m).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Nearest-centre labels (ties to the lower index), then every empty
/// cluster takes the point lying farthest from its current centre.
fn assign(points: &[Vec<f64>], centers: &mut [Vec<f64>]) -> Vec<usize> {
    let k = centers.len();
    let nearest = |p: &[f64], centers: &[Vec<f64>]| {
        let mut best = (0, f64::INFINITY);
        for (c, center) in centers.iter().enumerate() {
            let d = sq_dist(p, center);
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    };
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, centers)).collect();
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centers[labels[i]]);
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        let i = far.expect("k <= m leaves a cluster with two or more points");
        sizes[labels[i]] -= 1;
        sizes[empty] += 1;
        labels[i] = empty;
        centers[empty] = points[i].clone();
    }
    labels
}

fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        let n = n.max(1) as f64;
        s.iter_mut().for_each(|v| *v /= n);
    }
    sums
}

/// Within-cluster sum of squared distances to the cluster means.
pub fn inertia(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let dim = points.first().map_or(0, Vec::len);
    let centers = centroids(points, labels, k, dim);
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn nearest_fixed_point(points: &[Vec<f64>], labels: &[usize]) -> bool {
        let k = labels.iter().max().unwrap() + 1;
        let centers = centroids(points, labels, k, points[0].len());
        points.iter().zip(labels).all(|(p, &l)| {
            let dl = sq_dist(p, &centers[l]);
            centers.iter().all(|c| sq_dist(p, c) >= dl)
        })
    }

    #[test]
    fn two_points_two_clusters() {
        let labels = kmeans(&[vec![0.0], vec![10.0]], 2, 0).unwrap();
        assert_ne!(labels[0], labels[1]);
    }

    #[test]
    fn single_cluster() {
        let pts: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, 1.0]).collect();
        assert_eq!(kmeans(&pts, 1, 3).unwrap(), vec![0; 7]);
    }

    #[test]
    fn too_many_clusters() {
        assert!(matches!(
            kmeans(&[vec![0.0]], 2, 0),
            Err(Error::TooManyClusters { k: 2, m: 1 })
        ));
    }

    #[test]
    fn identical_points_still_fill_every_cluster() {
        let pts = vec![vec![1.0, 1.0]; 5];
        let labels = kmeans(&pts, 3, 0).unwrap();
        for c in 0..3 {
            assert!(labels.contains(&c));
        }
    }

    #[test]
    fn two_gaussian_blobs_match_exhaustive_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 3.0).unwrap();
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let c = if i < 10 { 0.0 } else { 100.0 };
                vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]
            })
            .collect();
        // exhaustive search over all 2-partitions for minimal inertia
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..(1 << 19) {
            let labels: Vec<usize> = (0..20).map(|i| ((mask >> i) & 1) as usize).collect();
            let w = inertia(&pts, &labels);
            if w < best.0 {
                best = (w, mask);
            }
        }
        let oracle: Vec<usize> = (0..20).map(|i| ((best.1 >> i) & 1) as usize).collect();
        let got = kmeans(&pts, 2, 0).unwrap();
        let same = got.iter().zip(&oracle).all(|(a, b)| a == b);
        let flipped = got.iter().zip(&oracle).all(|(a, b)| a != b);
        assert!(same || flipped);
        for i in 0..20 {
            assert_eq!(got[i] == got[0], i < 10);
        }
    }

    #[test]
    fn same_seed_same_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random(), rng.random()]).collect();
        assert_eq!(kmeans(&pts, 4, 9).unwrap(), kmeans(&pts, 4, 9).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn labels_are_a_fixed_point(
                pts in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2), 3..30),
                k in 1usize..4,
                seed in 0u64..1000,
            ) {
                prop_assume!(k <= pts.len());
                let labels = kmeans(&pts, k, seed).unwrap();
                prop_assert!(labels.iter().all(|&l| l < k));
                prop_assert!(nearest_fixed_point(&pts, &labels));
            }
        }
    }
}
