//! Lloyd's k-means baseline.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::metrics::Partition;
use crate::rbm::Supervector;
use crate::rng::seeded;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iters: 300,
            seed,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit<T> {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<T>>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_history: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> KMeansFit<T> {
    pub fn objective(&self) -> T {
        *self.objective_history.last().expect("at least one iteration")
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, smallest index on ties.
fn nearest<T: Scalar>(x: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, sq_dist(x, &centroids[0]));
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(x, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd iterations from `k` distinct randomly chosen points.
///
/// A cluster left empty by an assignment step is re-seeded with the point
/// farthest from its centroid, taken from a cluster with more than one member.
pub fn kmeans_points<T, B>(points: &[B], config: &KMeansConfig) -> Result<KMeansFit<T>>
where
    T: Scalar,
    B: AsRef<[T]>,
{
    let n = points.len();
    let k = config.k;
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("k must be in 1..={n}, got {k}")));
    }
    if config.tol.is_nan() || config.tol < 0.0 {
        return Err(Error::InvalidConfig(format!("tol must be >= 0, got {}", config.tol)));
    }
    let dim = points[0].as_ref().len();
    if let Some(p) = points.iter().position(|p| p.as_ref().len() != dim) {
        return Err(Error::Shape(format!(
            "point {p} has dimension {}, expected {dim}",
            points[p].as_ref().len()
        )));
    }

    let mut rng = seeded(config.seed);
    let mut centroids: Vec<Vec<T>> = sample(&mut rng, n, k)
        .into_iter()
        .map(|i| points[i].as_ref().to_vec())
        .collect();
    let mut labels = vec![0usize; n];
    let mut dists = vec![T::zero(); n];
    let mut history = Vec::new();
    let tol = T::of(config.tol);

    for iter in 1..=config.max_iters.max(1) {
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p.as_ref(), &centroids);
            labels[i] = c;
            dists[i] = d;
        }
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&c| sizes[c] += 1);
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .fold(None, |acc: Option<usize>, i| match acc {
                    Some(b) if dists[b] >= dists[i] => Some(b),
                    _ => Some(i),
                })
                .expect("k <= n leaves a cluster with two members");
            sizes[labels[far]] -= 1;
            sizes[empty] = 1;
            labels[far] = empty;
            dists[far] = T::zero();
            centroids[empty] = points[far].as_ref().to_vec();
        }
        history.push(dists.iter().copied().sum::<T>());

        let mut sums = vec![vec![T::zero(); dim]; k];
        for (p, &c) in points.iter().zip(&labels) {
            for (s, &x) in sums[c].iter_mut().zip(p.as_ref()) {
                *s = *s + x;
            }
        }
        let mut shift = T::zero();
        for (c, sum) in sums.into_iter().enumerate() {
            let size = T::from_usize(sizes[c]).unwrap();
            let next: Vec<T> = sum.into_iter().map(|s| s / size).collect();
            shift = shift.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if shift <= tol || iter == config.max_iters.max(1) {
            return Ok(KMeansFit {
                labels,
                centroids,
                objective_history: history,
                iterations: iter,
            });
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// k-means over supervectors, returned as a partition of their item ids.
pub fn kmeans<T: Scalar>(
    vectors: &[Supervector<T>],
    config: &KMeansConfig,
) -> Result<(Partition, KMeansFit<T>)> {
    let points: Vec<&[T]> = vectors.iter().map(|v| v.values.as_slice()).collect();
    let fit = kmeans_points(&points, config)?;
    let partition = Partition::from_pairs(
        vectors
            .iter()
            .map(|v| v.source_item.clone())
            .zip(fit.labels.iter().copied()),
    )?;
    Ok((partition, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![4.0, 4.0],
            vec![-2.0, 3.0],
            vec![0.5, -1.0],
        ]
    }

    #[test]
    fn k_equals_n() {
        let fit = kmeans_points(&pts(), &KMeansConfig::new(5, 3)).unwrap();
        assert_eq!(fit.objective(), 0.0);
        let mut l = fit.labels.clone();
        l.sort();
        l.dedup();
        assert_eq!(l.len(), 5);
    }

    #[test]
    fn k_one_is_mean() {
        let fit = kmeans_points(&pts(), &KMeansConfig::new(1, 3)).unwrap();
        assert_eq!(fit.labels, vec![0; 5]);
        assert!((fit.centroids[0][0] - 0.7).abs() < 1e-12);
        assert!((fit.centroids[0][1] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn invalid_k() {
        assert!(matches!(kmeans_points(&pts(), &KMeansConfig::new(6, 0)), Err(Error::InvalidConfig(_))));
        assert!(matches!(kmeans_points(&pts(), &KMeansConfig::new(0, 0)), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn deterministic_and_monotone() {
        let data: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 1.7).sin() * 5.0, (i as f64 * 0.3).cos()]).collect();
        let a = kmeans_points(&data, &KMeansConfig::new(4, 11)).unwrap();
        let b = kmeans_points(&data, &KMeansConfig::new(4, 11)).unwrap();
        assert_eq!(a, b);
        for w in a.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", a.objective_history);
        }
    }

    #[test]
    fn duplicate_points_trigger_reseed() {
        let data = vec![vec![0.0], vec![0.0], vec![0.0], vec![5.0]];
        for seed in 0..20 {
            let fit = kmeans_points(&data, &KMeansConfig::new(3, seed)).unwrap();
            let mut used = fit.labels.clone();
            used.sort();
            used.dedup();
            assert_eq!(used.len(), 3, "seed {seed}");
        }
    }
}
