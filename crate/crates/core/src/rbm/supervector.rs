use crate::error::{Error, Result};
use crate::rbm::RbmParams;
use crate::scalar::Scalar;

/// Flattened RBM parameters: `vec(W)` row-major, then `b_v`, then `b_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervector<T> {
    pub source_item: String,
    pub values: Vec<T>,
}

/// `V·H + V + H`.
pub const fn supervector_dim(visible: usize, hidden: usize) -> usize {
    visible * hidden + visible + hidden
}

impl<T: Scalar> Supervector<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> T {
        self.values.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Inverse of [`RbmParams::flatten`] for an uncentered vector.
    pub fn unflatten(&self, visible: usize, hidden: usize) -> Result<RbmParams<T>> {
        if self.dim() != supervector_dim(visible, hidden) {
            return Err(Error::Shape(format!(
                "supervector of dimension {} cannot hold a {visible}×{hidden} RBM ({} expected)",
                self.dim(),
                supervector_dim(visible, hidden)
            )));
        }
        let (w, rest) = self.values.split_at(visible * hidden);
        let (bv, bh) = rest.split_at(visible);
        RbmParams::from_parts(visible, hidden, w.to_vec(), bv.to_vec(), bh.to_vec())
    }
}

impl<T: Scalar> RbmParams<T> {
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(supervector_dim(self.visible(), self.hidden()));
        out.extend_from_slice(&self.weights);
        out.extend_from_slice(&self.visible_bias);
        out.extend_from_slice(&self.hidden_bias);
        out
    }
}

/// Flattens `params`; with `center`, the universal model's flattened
/// parameters are subtracted elementwise.
pub fn extract_supervector<T: Scalar>(
    item_id: &str,
    params: &RbmParams<T>,
    urbm: Option<&RbmParams<T>>,
    center: bool,
) -> Result<Supervector<T>> {
    let mut values = params.flatten();
    if center {
        let urbm = urbm.ok_or_else(|| {
            Error::Shape("centering requires the universal model".into())
        })?;
        if !urbm.same_shape(params) {
            return Err(Error::Shape(format!(
                "adapted RBM is {}×{}, universal RBM is {}×{}",
                params.visible(),
                params.hidden(),
                urbm.visible(),
                urbm.hidden()
            )));
        }
        for (x, u) in values.iter_mut().zip(urbm.flatten()) {
            *x = *x - u;
        }
    }
    Ok(Supervector {
        source_item: item_id.to_string(),
        values,
    })
}
