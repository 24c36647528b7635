//! Cosine scoring and bottom-up agglomerative clustering over supervectors.

mod ahc;
mod io;

pub use ahc::{ahc, sweep_threshold, ClusterResult, Linkage, Merge, StopRule};
pub use io::{load_assignment, write_assignment, write_merges};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rbm::Supervector;
use crate::scalar::Scalar;

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "cosine of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu == T::zero() {
        return Err(Error::DegenerateVector("<left operand>".into()));
    }
    if nv == T::zero() {
        return Err(Error::DegenerateVector("<right operand>".into()));
    }
    Ok(cosine_with_norms(u, v, nu, nv))
}

fn norm<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&a| a * a).sum::<T>().sqrt()
}

fn cosine_with_norms<T: Scalar>(u: &[T], v: &[T], nu: T, nv: T) -> T {
    let dot = u.iter().zip(v).map(|(&a, &b)| a * b).sum::<T>();
    (dot / (nu * nv)).max(-T::one()).min(T::one())
}

/// Dense symmetric `N × N` score matrix with row/column ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    ids: Vec<String>,
    scores: Vec<T>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    /// Validates squareness, finiteness and exact symmetry.
    pub fn new(ids: Vec<String>, scores: Vec<T>) -> Result<Self> {
        let n = ids.len();
        if scores.len() != n * n {
            return Err(Error::Matrix(format!(
                "{} scores for {n} ids (expected {})",
                scores.len(),
                n * n
            )));
        }
        if let Some(x) = scores.iter().find(|x| !x.is_finite()) {
            return Err(Error::Matrix(format!("non-finite score {x}")));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if scores[i * n + j] != scores[j * n + i] {
                    return Err(Error::Matrix(format!(
                        "not symmetric at ({i}, {j}): {} vs {}",
                        scores[i * n + j],
                        scores[j * n + i]
                    )));
                }
            }
        }
        Ok(SimilarityMatrix { ids, scores })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.scores[i * self.len() + j]
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    /// Applies `f` to every entry; symmetry is preserved.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.ids.clone(), self.scores.iter().map(|&x| f(x)).collect())
    }
}

/// Cosine scores of every pair; the diagonal is exactly 1.
pub fn build_similarity_matrix<T: Scalar>(vectors: &[Supervector<T>]) -> Result<SimilarityMatrix<T>> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::EmptyInput(format!(
            "need at least 2 vectors to cluster, got {n}"
        )));
    }
    let dim = vectors[0].dim();
    let mut norms = Vec::with_capacity(n);
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::Shape(format!(
                "supervector `{}` has dimension {}, expected {dim}",
                v.source_item,
                v.dim()
            )));
        }
        let nv = v.norm();
        if nv == T::zero() || !nv.is_finite() {
            return Err(Error::DegenerateVector(v.source_item.clone()));
        }
        norms.push(nv);
    }

    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| cosine_with_norms(&vectors[i].values, &vectors[j].values, norms[i], norms[j]))
                .collect()
        })
        .collect();
    let mut scores = vec![T::one(); n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &s) in row.iter().enumerate() {
            let j = i + 1 + off;
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    SimilarityMatrix::new(vectors.iter().map(|v| v.source_item.clone()).collect(), scores)
}
