use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::clustering::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::metrics::Partition;
use crate::scalar::Scalar;

/// Score of a merged cluster `ab` against another cluster `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    /// `max(s(a, n), s(b, n))`.
    Single,
    /// `½(s(a, n) + s(b, n))`, regardless of cluster sizes (WPGMA).
    #[default]
    Average,
    /// `(|a| s(a, n) + |b| s(b, n)) / (|a| + |b|)` (UPGMA).
    SizeWeightedAverage,
}

impl Linkage {
    #[inline]
    fn combine<T: Scalar>(self, sa: T, sb: T, na: usize, nb: usize) -> T {
        match self {
            Linkage::Single => sa.max(sb),
            Linkage::Average => T::half() * (sa + sb),
            Linkage::SizeWeightedAverage => {
                let (wa, wb) = (T::from_usize(na).unwrap(), T::from_usize(nb).unwrap());
                (wa * sa + wb * sb) / (wa + wb)
            }
        }
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            "size-weighted" | "upgma" => Ok(Linkage::SizeWeightedAverage),
            other => Err(Error::InvalidConfig(format!(
                "unknown linkage `{other}` (expected single, average or size-weighted)"
            ))),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
            Linkage::SizeWeightedAverage => "size-weighted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule<T> {
    /// Keep merging while the best remaining score is `>= θ`.
    Threshold(T),
    /// Merge until exactly `k` clusters remain.
    NumClusters(usize),
}

/// One agglomeration step. Members are indices into the matrix ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge<T> {
    pub members_a: Vec<usize>,
    pub members_b: Vec<usize>,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult<T> {
    pub ids: Vec<String>,
    /// Cluster index per id; clusters are numbered by first appearance.
    pub assignment: Vec<usize>,
    pub merges: Vec<Merge<T>>,
    pub n_clusters: usize,
}

impl<T: Scalar> ClusterResult<T> {
    pub fn partition(&self) -> Partition {
        Partition::from_pairs(self.ids.iter().cloned().zip(self.assignment.iter().copied()))
            .expect("cluster ids are unique")
    }
}

/// Labels each item by the order in which its cluster first appears.
pub(crate) fn canonical_labels(owner: &[usize]) -> (Vec<usize>, usize) {
    let mut relabel = std::collections::HashMap::new();
    let labels = owner
        .iter()
        .map(|o| {
            let next = relabel.len();
            *relabel.entry(*o).or_insert(next)
        })
        .collect();
    (labels, relabel.len())
}

/// Greedy agglomeration on a similarity matrix.
///
/// Live clusters keep the position of their lowest-indexed original slot:
/// merging the pair at positions `a < b` writes the new cluster into `a` and
/// deletes `b`, so the current matrix order is always ascending slot order.
/// Ties on the best score go to the lexicographically smallest `(a, b)`.
pub fn ahc<T: Scalar>(
    matrix: &SimilarityMatrix<T>,
    linkage: Linkage,
    stop: StopRule<T>,
) -> Result<ClusterResult<T>> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::EmptyInput("cannot cluster an empty matrix".into()));
    }
    match stop {
        StopRule::NumClusters(k) if k == 0 || k > n => {
            return Err(Error::InvalidStop(format!(
                "num_clusters must be in 1..={n}, got {k}"
            )))
        }
        StopRule::Threshold(t) if t.is_nan() => {
            return Err(Error::InvalidStop("threshold is NaN".into()))
        }
        _ => {}
    }

    let mut s = matrix.scores().to_vec();
    let mut active = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut owner: Vec<usize> = (0..n).collect();
    let mut best: Vec<Option<(T, usize)>> = (0..n).map(|i| row_best(&s, &active, n, i)).collect();
    let mut live = n;
    let mut merges = Vec::new();

    while live > 1 {
        if let StopRule::NumClusters(k) = stop {
            if live == k {
                break;
            }
        }
        let mut pick: Option<(T, usize, usize)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            if let Some((score, j)) = best[i] {
                if pick.is_none_or(|(p, _, _)| score > p) {
                    pick = Some((score, i, j));
                }
            }
        }
        let (score, a, b) = pick.expect("at least two live clusters");
        if let StopRule::Threshold(theta) = stop {
            if score < theta {
                break;
            }
        }

        let (na, nb) = (members[a].len(), members[b].len());
        for k in (0..n).filter(|&k| active[k] && k != a && k != b) {
            let merged = linkage.combine(s[a * n + k], s[b * n + k], na, nb);
            s[a * n + k] = merged;
            s[k * n + a] = merged;
        }
        active[b] = false;
        best[b] = None;
        let absorbed = std::mem::take(&mut members[b]);
        merges.push(Merge {
            members_a: members[a].clone(),
            members_b: absorbed.clone(),
            score,
        });
        for &m in &absorbed {
            owner[m] = a;
        }
        members[a].extend(absorbed);
        live -= 1;

        best[a] = row_best(&s, &active, n, a);
        for k in (0..b).filter(|&k| active[k] && k != a) {
            match best[k] {
                Some((_, j)) if j == a || j == b => best[k] = row_best(&s, &active, n, k),
                Some((cur, j)) if k < a => {
                    let cand = s[k * n + a];
                    if cand > cur || (cand == cur && a < j) {
                        best[k] = Some((cand, a));
                    }
                }
                _ => {}
            }
        }
    }

    let (assignment, n_clusters) = canonical_labels(&owner);
    Ok(ClusterResult {
        ids: matrix.ids().to_vec(),
        assignment,
        merges,
        n_clusters,
    })
}

/// Highest score to a live column right of `i`, smallest column on ties.
fn row_best<T: Scalar>(s: &[T], active: &[bool], n: usize, i: usize) -> Option<(T, usize)> {
    let mut out: Option<(T, usize)> = None;
    for j in ((i + 1)..n).filter(|&j| active[j]) {
        let v = s[i * n + j];
        if out.is_none_or(|(b, _)| v > b) {
            out = Some((v, j));
        }
    }
    out
}

/// One threshold-stopped clustering per θ, in input order.
pub fn sweep_threshold<T: Scalar>(
    matrix: &SimilarityMatrix<T>,
    linkage: Linkage,
    thetas: &[T],
) -> Result<Vec<(T, ClusterResult<T>)>> {
    if thetas.is_empty() {
        return Err(Error::InvalidStop("threshold sweep needs at least one θ".into()));
    }
    thetas
        .par_iter()
        .map(|&t| ahc(matrix, linkage, StopRule::Threshold(t)).map(|r| (t, r)))
        .collect()
}
