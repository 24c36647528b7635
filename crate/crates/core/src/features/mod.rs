//! Per-item feature bags and global mean-variance normalization.

mod io;

use std::collections::{BTreeMap, HashSet};

pub use io::{
    load_features, load_labels, load_mvn, save_features, save_labels, save_mvn, FeatureFormat,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to per-dimension standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

/// One clustering item: a non-empty bag of `D`-dimensional frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemFeatures<T> {
    pub item_id: String,
    pub frames: Vec<Vec<T>>,
}

impl<T: Scalar> ItemFeatures<T> {
    pub fn new(item_id: impl Into<String>, frames: Vec<Vec<T>>) -> Result<Self> {
        let item = ItemFeatures {
            item_id: item_id.into(),
            frames,
        };
        item.validate()?;
        Ok(item)
    }

    /// Frame dimension. Panics on an empty bag, which `validate` rejects.
    pub fn dim(&self) -> usize {
        self.frames[0].len()
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.frames.first().ok_or_else(|| {
            Error::EmptyInput(format!("item `{}` has no frames", self.item_id))
        })?;
        let d = first.len();
        if d == 0 {
            return Err(Error::Shape(format!(
                "item `{}` has zero-dimensional frames",
                self.item_id
            )));
        }
        for (k, frame) in self.frames.iter().enumerate() {
            if frame.len() != d {
                return Err(Error::Shape(format!(
                    "item `{}` frame {k} has dimension {}, expected {d}",
                    self.item_id,
                    frame.len()
                )));
            }
            if let Some(x) = frame.iter().find(|x| !x.is_finite()) {
                return Err(Error::Data(format!(
                    "item `{}` frame {k} contains non-finite value {x}",
                    self.item_id
                )));
            }
        }
        Ok(())
    }
}

/// Ordered collection of items with optional ground-truth classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub items: Vec<ItemFeatures<T>>,
    pub labels: Option<BTreeMap<String, String>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(items: Vec<ItemFeatures<T>>) -> Result<Self> {
        let ds = Dataset {
            items,
            labels: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_labels(mut self, labels: BTreeMap<String, String>) -> Result<Self> {
        self.labels = Some(labels);
        self.validate()?;
        Ok(self)
    }

    /// Common frame dimension, or `None` for an empty dataset.
    pub fn dim(&self) -> Option<usize> {
        self.items.first().map(ItemFeatures::dim)
    }

    pub fn frame_count(&self) -> usize {
        self.items.iter().map(|i| i.frames.len()).sum()
    }

    /// All frames, item order then frame order.
    pub fn frames(&self) -> impl Iterator<Item = &Vec<T>> {
        self.items.iter().flat_map(|i| i.frames.iter())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.item_id.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.items.len());
        let d = self.dim();
        for item in &self.items {
            item.validate()?;
            if Some(item.dim()) != d {
                return Err(Error::Shape(format!(
                    "item `{}` has dimension {}, dataset dimension is {}",
                    item.item_id,
                    item.dim(),
                    d.unwrap_or(0)
                )));
            }
            if !seen.insert(item.item_id.as_str()) {
                return Err(Error::Data(format!("duplicate item id `{}`", item.item_id)));
            }
        }
        if let Some(labels) = &self.labels {
            if let Some(missing) = self.ids().find(|id| !labels.contains_key(*id)) {
                return Err(Error::Key(format!("no label for item `{missing}`")));
            }
            if let Some(extra) = labels.keys().find(|k| !seen.contains(k.as_str())) {
                return Err(Error::Key(format!("label for unknown item `{extra}`")));
            }
        }
        Ok(())
    }
}

/// Per-dimension mean and floored population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> MvnStats<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_frame(&self, frame: &[T]) -> Vec<T> {
        frame
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&x, &m), &s)| (x - m) / s)
            .collect()
    }
}

/// Fits normalization statistics over every frame of every item.
pub fn mvn_fit<T: Scalar>(training: &Dataset<T>) -> Result<MvnStats<T>> {
    training.validate()?;
    let d = training
        .dim()
        .ok_or_else(|| Error::EmptyInput("cannot fit MVN on an empty dataset".into()))?;
    let n = T::from_usize(training.frame_count()).unwrap();

    let mut mean = vec![T::zero(); d];
    for frame in training.frames() {
        for (m, &x) in mean.iter_mut().zip(frame) {
            *m = *m + x;
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / n);

    let mut var = vec![T::zero(); d];
    for frame in training.frames() {
        for ((v, &x), &m) in var.iter_mut().zip(frame).zip(&mean) {
            let dx = x - m;
            *v = *v + dx * dx;
        }
    }
    let floor = T::of(STD_FLOOR);
    let std = var.into_iter().map(|v| (v / n).sqrt().max(floor)).collect();
    Ok(MvnStats { mean, std })
}

/// Applies `(x - mean) / std` to every frame; ids and labels are kept.
pub fn mvn_apply<T: Scalar>(stats: &MvnStats<T>, data: &Dataset<T>) -> Result<Dataset<T>> {
    if let Some(d) = data.dim() {
        if d != stats.dim() {
            return Err(Error::Shape(format!(
                "MVN statistics have dimension {}, data has {d}",
                stats.dim()
            )));
        }
    }
    let items = data
        .items
        .iter()
        .map(|item| ItemFeatures {
            item_id: item.item_id.clone(),
            frames: item.frames.iter().map(|f| stats.apply_frame(f)).collect(),
        })
        .collect();
    Ok(Dataset {
        items,
        labels: data.labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(frames: Vec<Vec<f64>>) -> Dataset<f64> {
        Dataset::new(vec![ItemFeatures::new("a", frames).unwrap()]).unwrap()
    }

    #[test]
    fn fit_two_frames() {
        let stats = mvn_fit(&ds(vec![vec![1.0, 3.0], vec![3.0, 5.0]])).unwrap();
        assert_eq!(stats.mean, vec![2.0, 4.0]);
        assert_eq!(stats.std, vec![1.0, 1.0]);
    }

    #[test]
    fn constant_dimension_is_floored() {
        let stats = mvn_fit(&ds(vec![vec![7.0, 7.0]; 4])).unwrap();
        assert_eq!(stats.mean, vec![7.0, 7.0]);
        assert_eq!(stats.std, vec![STD_FLOOR, STD_FLOOR]);
    }

    #[test]
    fn apply_hand_example() {
        let stats = MvnStats {
            mean: vec![1.0, 2.0],
            std: vec![2.0, 3.0],
        };
        assert_eq!(stats.apply_frame(&[3.0, 8.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn identity_stats_leave_data_alone() {
        let data = ds(vec![vec![0.3, -1.2], vec![4.0, 9.5]]);
        let stats = MvnStats {
            mean: vec![0.0, 0.0],
            std: vec![1.0, 1.0],
        };
        assert_eq!(mvn_apply(&stats, &data).unwrap(), data);
    }

    #[test]
    fn errors() {
        let empty: Dataset<f64> = Dataset::new(vec![]).unwrap();
        assert!(matches!(mvn_fit(&empty), Err(Error::EmptyInput(_))));

        let ragged = Dataset {
            items: vec![ItemFeatures {
                item_id: "x".into(),
                frames: vec![vec![1.0, 2.0], vec![1.0]],
            }],
            labels: None,
        };
        assert!(matches!(mvn_fit(&ragged), Err(Error::Shape(_))));

        let nan = Dataset {
            items: vec![ItemFeatures {
                item_id: "x".into(),
                frames: vec![vec![f64::NAN]],
            }],
            labels: None,
        };
        assert!(matches!(mvn_fit(&nan), Err(Error::Data(_))));

        let stats = MvnStats {
            mean: vec![0.0],
            std: vec![1.0],
        };
        assert!(matches!(
            mvn_apply(&stats, &ds(vec![vec![1.0, 2.0]])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn labels_must_cover_items() {
        let data = ds(vec![vec![1.0]]);
        let mut labels = BTreeMap::new();
        labels.insert("b".to_string(), "c0".to_string());
        assert!(matches!(data.clone().with_labels(labels), Err(Error::Key(_))));
        let mut labels = BTreeMap::new();
        labels.insert("a".to_string(), "c0".to_string());
        assert!(data.with_labels(labels).is_ok());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let item = ItemFeatures::new("a", vec![vec![1.0f64]]).unwrap();
        assert!(matches!(
            Dataset::new(vec![item.clone(), item]),
            Err(Error::Data(_))
        ));
    }
}
