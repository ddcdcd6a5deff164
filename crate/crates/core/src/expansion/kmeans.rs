//! Seeded k-means with k-means++ initialization.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index of each point.
    pub labels: Vec<usize>,
    pub iterations: usize,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<Clustering> {
    if k == 0 || k > points.len() {
        return Err(Error::Expansion(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Expansion("embeddings have mixed dimensionality".into()));
    }
    let mut rng = seeded(seed);

    let mut picked = vec![rng.gen_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[picked[0]])).collect();
    while picked.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            (0..points.len()).find(|i| !picked.contains(i)).expect("k <= n")
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        picked.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    let mut centroids: Vec<Vec<f64>> = picked.iter().map(|&i| points[i].clone()).collect();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();

    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(Clustering {
        centroids,
        labels,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(vec![i as f64 * 0.01, 0.0]);
            pts.push(vec![100.0 + i as f64 * 0.01, 50.0]);
        }
        let c = kmeans(&pts, 2, 3, DEFAULT_MAX_ITER).unwrap();
        for i in (0..20).step_by(2) {
            assert_eq!(c.labels[i], c.labels[0]);
            assert_eq!(c.labels[i + 1], c.labels[1]);
        }
        assert_ne!(c.labels[0], c.labels[1]);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kmeans(&[vec![0.0]], 2, 1, 10).is_err());
        assert!(kmeans(&[vec![0.0]], 0, 1, 10).is_err());
    }

    #[test]
    fn identical_points() {
        let pts = vec![vec![1.0, 1.0]; 4];
        let c = kmeans(&pts, 3, 1, 10).unwrap();
        assert_eq!(c.centroids.len(), 3);
    }
}
