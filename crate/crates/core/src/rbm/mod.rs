//! Gaussian-Bernoulli RBM with unit-variance visible units.
//!
//! Energy: `E(v, h) = ½‖v − b_v‖² − b_hᵀh − vᵀWh`, with `W` stored row-major
//! as `V × H` (visible index major).

mod io;
mod supervector;
mod train;

pub use io::{
    checkpoint_config_path, load_checkpoint, load_supervectors, save_checkpoint,
    save_supervectors, write_train_log,
};
pub use supervector::{extract_supervector, supervector_dim, Supervector};
pub use train::{adapt, cd1_update, train, train_urbm, TrainConfig, Trained, INIT_WEIGHT_STD};

use crate::error::{Error, Result};
use crate::scalar::{sigmoid, softplus, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams<T> {
    visible: usize,
    hidden: usize,
    /// Row-major `visible × hidden`.
    pub weights: Vec<T>,
    pub visible_bias: Vec<T>,
    pub hidden_bias: Vec<T>,
}

impl<T: Scalar> RbmParams<T> {
    /// All-zero parameters.
    pub fn zeros(visible: usize, hidden: usize) -> Result<Self> {
        Self::from_parts(
            visible,
            hidden,
            vec![T::zero(); visible * hidden],
            vec![T::zero(); visible],
            vec![T::zero(); hidden],
        )
    }

    pub fn from_parts(
        visible: usize,
        hidden: usize,
        weights: Vec<T>,
        visible_bias: Vec<T>,
        hidden_bias: Vec<T>,
    ) -> Result<Self> {
        if visible == 0 || hidden == 0 {
            return Err(Error::Shape(format!(
                "RBM needs at least one visible and one hidden unit, got {visible}×{hidden}"
            )));
        }
        if weights.len() != visible * hidden
            || visible_bias.len() != visible
            || hidden_bias.len() != hidden
        {
            return Err(Error::Shape(format!(
                "RBM {visible}×{hidden}: got {} weights, {} visible biases, {} hidden biases",
                weights.len(),
                visible_bias.len(),
                hidden_bias.len()
            )));
        }
        let params = RbmParams {
            visible,
            hidden,
            weights,
            visible_bias,
            hidden_bias,
        };
        if !params.all_finite() {
            return Err(Error::Data("RBM parameters contain non-finite values".into()));
        }
        Ok(params)
    }

    pub fn visible(&self) -> usize {
        self.visible
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[i * self.hidden + j]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.visible == other.visible && self.hidden == other.hidden
    }

    pub fn all_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .all(|x| x.is_finite())
    }

    pub(crate) fn check_visible(&self, v: &[T]) -> Result<()> {
        if v.len() != self.visible {
            return Err(Error::Shape(format!(
                "visible vector has length {}, RBM has {} visible units",
                v.len(),
                self.visible
            )));
        }
        Ok(())
    }

    fn check_hidden(&self, h: &[T]) -> Result<()> {
        if h.len() != self.hidden {
            return Err(Error::Shape(format!(
                "hidden vector has length {}, RBM has {} hidden units",
                h.len(),
                self.hidden
            )));
        }
        Ok(())
    }

    /// `b_h + Wᵀv` for each hidden unit.
    pub(crate) fn hidden_activation(&self, v: &[T]) -> Vec<T> {
        let mut act = self.hidden_bias.clone();
        for (i, &vi) in v.iter().enumerate() {
            let row = &self.weights[i * self.hidden..(i + 1) * self.hidden];
            for (a, &w) in act.iter_mut().zip(row) {
                *a = *a + vi * w;
            }
        }
        act
    }

    pub(crate) fn hidden_probs_unchecked(&self, v: &[T]) -> Vec<T> {
        let mut act = self.hidden_activation(v);
        act.iter_mut().for_each(|a| *a = sigmoid(*a));
        act
    }

    pub(crate) fn visible_means_unchecked(&self, h: &[T]) -> Vec<T> {
        self.visible_bias
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let row = &self.weights[i * self.hidden..(i + 1) * self.hidden];
                row.iter().zip(h).fold(b, |acc, (&w, &hj)| acc + w * hj)
            })
            .collect()
    }

    pub fn energy(&self, v: &[T], h: &[T]) -> Result<T> {
        self.check_visible(v)?;
        self.check_hidden(h)?;
        if let Some(x) = h.iter().find(|&&x| x != T::zero() && x != T::one()) {
            return Err(Error::Data(format!("hidden state {x} is not binary")));
        }
        let quad = v
            .iter()
            .zip(&self.visible_bias)
            .map(|(&x, &b)| (x - b) * (x - b))
            .sum::<T>()
            * T::half();
        let hidden_term = self.hidden_bias.iter().zip(h).map(|(&b, &x)| b * x).sum::<T>();
        let coupling = v
            .iter()
            .enumerate()
            .map(|(i, &vi)| {
                let row = &self.weights[i * self.hidden..(i + 1) * self.hidden];
                vi * row.iter().zip(h).map(|(&w, &x)| w * x).sum::<T>()
            })
            .sum::<T>();
        Ok(quad - hidden_term - coupling)
    }

    /// `P(h_j = 1 | v)` for each hidden unit.
    pub fn hidden_given_visible(&self, v: &[T]) -> Result<Vec<T>> {
        self.check_visible(v)?;
        Ok(self.hidden_probs_unchecked(v))
    }

    /// Means of the unit-variance Gaussian `p(v | h)`.
    pub fn visible_given_hidden(&self, h: &[T]) -> Result<Vec<T>> {
        self.check_hidden(h)?;
        Ok(self.visible_means_unchecked(h))
    }

    /// Draws `v ~ N(mean(h), I)`.
    pub fn sample_visible<R: rand::Rng + ?Sized>(&self, h: &[T], rng: &mut R) -> Result<Vec<T>> {
        use rand_distr::{Distribution, StandardNormal};
        let means = self.visible_given_hidden(h)?;
        Ok(means
            .into_iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + T::of(z)
            })
            .collect())
    }

    /// `F(v) = ½‖v − b_v‖² − Σ_j softplus(b_h[j] + Σ_i v_i W_ij)`.
    pub fn free_energy(&self, v: &[T]) -> Result<T> {
        self.check_visible(v)?;
        let quad = v
            .iter()
            .zip(&self.visible_bias)
            .map(|(&x, &b)| (x - b) * (x - b))
            .sum::<T>()
            * T::half();
        let soft = self.hidden_activation(v).into_iter().map(softplus).sum::<T>();
        Ok(quad - soft)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RbmParams<f64> {
        RbmParams::from_parts(
            3,
            2,
            vec![0.5, -0.25, 1.0, 0.0, -0.75, 0.125],
            vec![0.1, -0.2, 0.3],
            vec![-0.4, 0.6],
        )
        .unwrap()
    }

    #[test]
    fn zero_energy() {
        let p = RbmParams::<f64>::zeros(3, 2).unwrap();
        assert_eq!(p.energy(&[0.0; 3], &[0.0; 2]).unwrap(), 0.0);
    }

    #[test]
    fn decoupled_energy_ignores_h() {
        let mut p = RbmParams::<f64>::zeros(2, 2).unwrap();
        p.visible_bias = vec![1.0, -2.0];
        let v = [3.0, 0.5];
        for h in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]] {
            assert_eq!(p.energy(&v, &h).unwrap(), 0.5 * (4.0 + 6.25));
        }
    }

    #[test]
    fn energy_term_by_term() {
        let p = small();
        let v = [0.3, -1.1, 2.0];
        let h = [1.0, 0.0];
        let mut expect = 0.0;
        for i in 0..3 {
            expect += 0.5 * (v[i] - p.visible_bias[i]).powi(2);
        }
        for j in 0..2 {
            expect -= p.hidden_bias[j] * h[j];
            for i in 0..3 {
                expect -= v[i] * p.weight(i, j) * h[j];
            }
        }
        assert!((p.energy(&v, &h).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn energy_rejects_non_binary_hidden() {
        assert!(matches!(small().energy(&[0.0; 3], &[0.5, 0.0]), Err(Error::Data(_))));
    }

    #[test]
    fn conditionals_symmetric_and_saturated() {
        let p = RbmParams::<f64>::zeros(2, 3).unwrap();
        assert_eq!(p.hidden_given_visible(&[1.0, -7.0]).unwrap(), vec![0.5; 3]);
        let mut q = p.clone();
        q.hidden_bias[1] = 50.0;
        assert!(q.hidden_given_visible(&[0.0, 0.0]).unwrap()[1] >= 1.0 - 1e-20);
    }

    #[test]
    fn visible_means() {
        let p = small();
        assert_eq!(p.visible_given_hidden(&[0.0, 0.0]).unwrap(), p.visible_bias);
        let m = p.visible_given_hidden(&[0.0, 1.0]).unwrap();
        for i in 0..3 {
            assert_eq!(m[i], p.visible_bias[i] + p.weight(i, 1));
        }
    }

    #[test]
    fn shape_errors() {
        let p = small();
        assert!(matches!(p.hidden_given_visible(&[0.0; 2]), Err(Error::Shape(_))));
        assert!(matches!(p.visible_given_hidden(&[0.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(p.free_energy(&[0.0; 4]), Err(Error::Shape(_))));
        assert!(matches!(RbmParams::<f64>::zeros(0, 3), Err(Error::Shape(_))));
    }

    #[test]
    fn decoupled_free_energy() {
        let mut p = RbmParams::<f64>::zeros(2, 2).unwrap();
        p.visible_bias = vec![0.5, 0.0];
        p.hidden_bias = vec![1.0, -2.0];
        let v = [1.5, 2.0];
        let expect = 0.5 * (1.0 + 4.0) - ((1.0f64.exp()).ln_1p() + ((-2.0f64).exp()).ln_1p());
        assert!((p.free_energy(&v).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn generic_over_f32() {
        let p = RbmParams::<f32>::zeros(2, 2).unwrap();
        assert_eq!(p.hidden_given_visible(&[1.0, 2.0]).unwrap(), vec![0.5f32; 2]);
    }
}
