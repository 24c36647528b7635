//! Pairwise and BCubed clustering scores.
//!
//! Scores are computed exactly in rationals and converted at the end, so the
//! contingency-table fast path and a brute-force enumeration agree bit for bit.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Assignment of item ids to dense cluster labels `0..n_clusters`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    ids: Vec<String>,
    labels: Vec<usize>,
    index: HashMap<String, usize>,
    n_clusters: usize,
}

impl Partition {
    /// Labels may be any hashable value; they are renumbered by first appearance.
    pub fn from_pairs<L, I>(pairs: I) -> Result<Self>
    where
        L: Hash + Eq,
        I: IntoIterator<Item = (String, L)>,
    {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut index = HashMap::new();
        let mut dense: HashMap<L, usize> = HashMap::new();
        for (id, label) in pairs {
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::Key(format!("item `{id}` assigned twice")));
            }
            let next = dense.len();
            labels.push(*dense.entry(label).or_insert(next));
            ids.push(id);
        }
        Ok(Partition {
            ids,
            labels,
            index,
            n_clusters: dense.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&k| self.labels[k])
    }

    /// `other`'s labels in `self`'s item order; errors unless the item sets match.
    pub fn aligned_labels(&self, other: &Partition) -> Result<Vec<usize>> {
        if self.len() != other.len() {
            return Err(Error::Key(format!(
                "partitions cover {} and {} items",
                self.len(),
                other.len()
            )));
        }
        self.ids
            .iter()
            .map(|id| {
                other
                    .label_of(id)
                    .ok_or_else(|| Error::Key(format!("item `{id}` missing from ground truth")))
            })
            .collect()
    }
}

/// Exact precision / recall / F.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactScores {
    pub precision: BigRational,
    pub recall: BigRational,
    pub f: BigRational,
}

impl ExactScores {
    /// F is the harmonic mean, or 0 when precision and recall are both 0.
    pub fn new(precision: BigRational, recall: BigRational) -> Self {
        let sum = &precision + &recall;
        let f = if sum.is_zero() {
            BigRational::zero()
        } else {
            BigRational::from_integer(2.into()) * &precision * &recall / sum
        };
        ExactScores {
            precision,
            recall,
            f,
        }
    }

    pub fn to_scalar<T: Scalar>(&self) -> Scores<T> {
        let cv = |r: &BigRational| T::of(r.to_f64().expect("score in [0, 1]"));
        Scores {
            precision: cv(&self.precision),
            recall: cv(&self.recall),
            f: cv(&self.f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores<T> {
    pub precision: T,
    pub recall: T,
    pub f: T,
}

pub(crate) fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

struct Contingency {
    cells: HashMap<(usize, usize), u64>,
    pred_sizes: Vec<u64>,
    true_sizes: Vec<u64>,
    n: u64,
}

fn contingency(pred: &Partition, truth: &Partition) -> Result<Contingency> {
    let truth_labels = pred.aligned_labels(truth)?;
    let mut cells = HashMap::new();
    let mut pred_sizes = vec![0u64; pred.n_clusters()];
    let mut true_sizes = vec![0u64; truth.n_clusters()];
    for (&p, &t) in pred.labels().iter().zip(&truth_labels) {
        *cells.entry((p, t)).or_insert(0) += 1;
        pred_sizes[p] += 1;
        true_sizes[t] += 1;
    }
    Ok(Contingency {
        cells,
        pred_sizes,
        true_sizes,
        n: pred.len() as u64,
    })
}

fn pairs(n: u64) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

/// Precision and recall over co-clustered unordered item pairs.
///
/// With no co-clustered pairs in the prediction precision is 1; with none in
/// the ground truth recall is 1.
pub fn pairwise_exact(pred: &Partition, truth: &Partition) -> Result<ExactScores> {
    let c = contingency(pred, truth)?;
    let both: u128 = c.cells.values().map(|&x| pairs(x)).sum();
    let in_pred: u128 = c.pred_sizes.iter().map(|&x| pairs(x)).sum();
    let in_true: u128 = c.true_sizes.iter().map(|&x| pairs(x)).sum();
    let precision = if in_pred == 0 { BigRational::one() } else { ratio(both, in_pred) };
    let recall = if in_true == 0 { BigRational::one() } else { ratio(both, in_true) };
    Ok(ExactScores::new(precision, recall))
}

/// Item-averaged precision `|C(e) ∩ L(e)| / |C(e)|` and recall `|C(e) ∩ L(e)| / |L(e)|`.
pub fn bcubed_exact(pred: &Partition, truth: &Partition) -> Result<ExactScores> {
    let c = contingency(pred, truth)?;
    if c.n == 0 {
        return Err(Error::EmptyInput("BCubed of an empty partition".into()));
    }
    // Σ_e n_ij / |C_i| = Σ_cells n_ij² / |C_i|; grouping by cluster keeps the
    // rational sums small.
    let mut sq_by_pred = vec![0u128; c.pred_sizes.len()];
    let mut sq_by_true = vec![0u128; c.true_sizes.len()];
    for (&(p, t), &x) in &c.cells {
        let sq = (x as u128) * (x as u128);
        sq_by_pred[p] += sq;
        sq_by_true[t] += sq;
    }
    let sum_over = |sq: &[u128], sizes: &[u64]| {
        sq.iter()
            .zip(sizes)
            .filter(|(_, &s)| s > 0)
            .fold(BigRational::zero(), |acc, (&q, &s)| acc + ratio(q, s as u128))
            / BigRational::from_integer(c.n.into())
    };
    let precision = sum_over(&sq_by_pred, &c.pred_sizes);
    let recall = sum_over(&sq_by_true, &c.true_sizes);
    Ok(ExactScores::new(precision, recall))
}

pub fn pairwise_f<T: Scalar>(pred: &Partition, truth: &Partition) -> Result<Scores<T>> {
    Ok(pairwise_exact(pred, truth)?.to_scalar())
}

pub fn bcubed_f<T: Scalar>(pred: &Partition, truth: &Partition) -> Result<Scores<T>> {
    Ok(bcubed_exact(pred, truth)?.to_scalar())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub pairwise: Scores<f64>,
    pub bcubed: Scores<f64>,
    pub n_items: usize,
    pub n_pred_clusters: usize,
    pub n_true_clusters: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "Fp_precision,Fp_recall,Fp,Fb_precision,Fb_recall,Fb,n_items,n_pred,n_true";

    pub fn evaluate(pred: &Partition, truth: &Partition) -> Result<Self> {
        Ok(EvalReport {
            pairwise: pairwise_f(pred, truth)?,
            bcubed: bcubed_f(pred, truth)?,
            n_items: pred.len(),
            n_pred_clusters: pred.n_clusters(),
            n_true_clusters: truth.n_clusters(),
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.pairwise.precision,
            self.pairwise.recall,
            self.pairwise.f,
            self.bcubed.precision,
            self.bcubed.recall,
            self.bcubed.f,
            self.n_items,
            self.n_pred_clusters,
            self.n_true_clusters
        )
    }

    /// Header plus one row.
    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "items: {}  predicted clusters: {}  true clusters: {}",
            self.n_items, self.n_pred_clusters, self.n_true_clusters
        )?;
        writeln!(
            f,
            "pairwise  P={:.4} R={:.4} Fp={:.4}",
            self.pairwise.precision, self.pairwise.recall, self.pairwise.f
        )?;
        write!(
            f,
            "bcubed    P={:.4} R={:.4} Fb={:.4}",
            self.bcubed.precision, self.bcubed.recall, self.bcubed.f
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(labels: &[usize]) -> Partition {
        Partition::from_pairs(labels.iter().enumerate().map(|(i, &l)| (format!("e{i}"), l))).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn identity_scores_one() {
        let p = part(&[0, 0, 1, 2, 2, 2]);
        let pw = pairwise_exact(&p, &p).unwrap();
        let bc = bcubed_exact(&p, &p).unwrap();
        assert_eq!(pw.f, r(1, 1));
        assert_eq!(bc.f, r(1, 1));
    }

    #[test]
    fn one_cluster_vs_two_classes() {
        let truth = part(&[0, 0, 1, 1]);
        let pred = part(&[0, 0, 0, 0]);
        let pw = pairwise_exact(&pred, &truth).unwrap();
        assert_eq!((pw.precision.clone(), pw.recall.clone(), pw.f.clone()), (r(2, 6), r(1, 1), r(1, 2)));
        let bc = bcubed_exact(&pred, &truth).unwrap();
        assert_eq!((bc.precision.clone(), bc.recall.clone(), bc.f.clone()), (r(1, 2), r(1, 1), r(2, 3)));
        let f: Scores<f64> = pw.to_scalar();
        assert_eq!(f.f, 0.5);
    }

    #[test]
    fn singletons() {
        let truth = part(&[0, 0, 1, 1]);
        let pred = part(&[0, 1, 2, 3]);
        let pw = pairwise_exact(&pred, &truth).unwrap();
        assert_eq!((pw.precision, pw.recall, pw.f), (r(1, 1), r(0, 1), r(0, 1)));
        let bc = bcubed_exact(&pred, &truth).unwrap();
        assert_eq!((bc.precision, bc.recall, bc.f), (r(1, 1), r(1, 2), r(2, 3)));
    }

    #[test]
    fn relabeling_invariant() {
        let truth = part(&[0, 0, 1, 1, 2]);
        let a = part(&[5, 5, 5, 1, 1]);
        let b = part(&[9, 9, 9, 0, 0]);
        assert_eq!(pairwise_exact(&a, &truth).unwrap(), pairwise_exact(&b, &truth).unwrap());
        assert_eq!(bcubed_exact(&a, &truth).unwrap(), bcubed_exact(&b, &truth).unwrap());
    }

    #[test]
    fn mismatched_items() {
        let a = part(&[0, 0]);
        let b = Partition::from_pairs(vec![("e0".to_string(), 0), ("zz".to_string(), 0)]).unwrap();
        assert!(matches!(pairwise_exact(&a, &b), Err(Error::Key(_))));
        assert!(matches!(bcubed_exact(&a, &part(&[0])), Err(Error::Key(_))));
        assert!(Partition::from_pairs(vec![("x".to_string(), 0), ("x".to_string(), 1)]).is_err());
    }

    #[test]
    fn report_csv() {
        let p = part(&[0, 0, 1]);
        let rep = EvalReport::evaluate(&p, &p).unwrap();
        assert_eq!(rep.to_csv(), format!("{}\n1,1,1,1,1,1,3,2,2\n", EvalReport::CSV_HEADER));
    }
}
