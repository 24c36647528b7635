//! Image clustering with adapted-RBM embedding vectors.
//!
//! A universal Gaussian-Bernoulli RBM is trained with CD-1 on normalized
//! training features, then copied and adapted to each test item. The adapted
//! weights and biases are flattened into one fixed-length vector per item
//! (optionally centered on the universal model), scored pairwise by cosine
//! similarity and grouped by bottom-up agglomerative clustering. Pairwise and
//! BCubed F-scores evaluate the result; k-means is provided as a baseline.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the aliases below
//! name the `f64` instantiations used by the pipeline and the file formats.

pub mod baselines;
pub mod clustering;
mod codec;
pub mod error;
pub mod features;
pub mod metrics;
pub mod pipeline;
pub mod rbm;
pub mod rng;
pub mod scalar;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub type ItemFeatures = features::ItemFeatures<f64>;
pub type Dataset = features::Dataset<f64>;
pub type MvnStats = features::MvnStats<f64>;
pub type RbmParams = rbm::RbmParams<f64>;
pub type Supervector = rbm::Supervector<f64>;
pub type SimilarityMatrix = clustering::SimilarityMatrix<f64>;
pub type ClusterResult = clustering::ClusterResult<f64>;
pub type StopRule = clustering::StopRule<f64>;

pub type RbmParams32 = rbm::RbmParams<f32>;
pub type Supervector32 = rbm::Supervector<f32>;
pub type SimilarityMatrix32 = clustering::SimilarityMatrix<f32>;
