use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::features::ItemFeatures;
use crate::rbm::RbmParams;
use crate::rng::{item_seed, seeded, Prng};
use crate::scalar::Scalar;

/// Standard deviation of the Gaussian weight initialization.
pub const INIT_WEIGHT_STD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub cd_steps: usize,
}

impl TrainConfig {
    /// Universal-model defaults: 200 epochs, lr 5e-4, decay 2e-4, batches of 100.
    pub fn urbm_default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.0005,
            weight_decay: 0.0002,
            batch_size: 100,
            seed: 0,
            cd_steps: 1,
        }
    }

    /// Per-item adaptation defaults: 200 epochs, lr 5e-3, decay 2e-6, batches of 64.
    pub fn adapt_default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.005,
            weight_decay: 0.000002,
            batch_size: 64,
            seed: 0,
            cd_steps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weight_decay must be finite and non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.cd_steps == 0 {
            return Err(Error::InvalidConfig("cd_steps must be at least 1".into()));
        }
        Ok(())
    }
}

impl fmt::Display for TrainConfig {
    /// Flat `key = value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "epochs = {}", self.epochs)?;
        writeln!(f, "learning_rate = {}", self.learning_rate)?;
        writeln!(f, "weight_decay = {}", self.weight_decay)?;
        writeln!(f, "batch_size = {}", self.batch_size)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "cd_steps = {}", self.cd_steps)
    }
}

impl FromStr for TrainConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = TrainConfig::urbm_default();
        for (n, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", n + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let line_no = n + 1;
            match key {
                "epochs" => cfg.epochs = parse_value(key, value, line_no)?,
                "learning_rate" => cfg.learning_rate = parse_value(key, value, line_no)?,
                "weight_decay" => cfg.weight_decay = parse_value(key, value, line_no)?,
                "batch_size" => cfg.batch_size = parse_value(key, value, line_no)?,
                "seed" => cfg.seed = parse_value(key, value, line_no)?,
                "cd_steps" => cfg.cd_steps = parse_value(key, value, line_no)?,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "line {}: unknown key `{other}`",
                        n + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_value<F: FromStr>(key: &str, value: &str, line: usize) -> Result<F> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("line {line}: bad value `{value}` for {key}")))
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained<T> {
    pub params: RbmParams<T>,
    /// Mean squared reconstruction error per visible unit, one entry per epoch.
    pub epoch_errors: Vec<f64>,
}

impl<T: Scalar> RbmParams<T> {
    /// One contrastive-divergence step on `batch`, in place.
    ///
    /// Positive statistics use hidden probabilities. The Gibbs chain samples
    /// binary hidden states (one uniform draw per unit, unit order, sample
    /// order), reconstructs with visible means and re-computes hidden
    /// probabilities; `cd_steps > 1` repeats the sample/reconstruct pair.
    /// Returns the summed squared reconstruction error over the batch.
    pub fn cd_step<B, R>(
        &mut self,
        batch: &[B],
        learning_rate: T,
        weight_decay: T,
        cd_steps: usize,
        rng: &mut R,
    ) -> Result<T>
    where
        B: AsRef<[T]>,
        R: Rng + ?Sized,
    {
        if batch.is_empty() {
            return Err(Error::EmptyInput("CD update on an empty batch".into()));
        }
        for v in batch {
            self.check_visible(v.as_ref())?;
        }
        let (nv, nh) = (self.visible, self.hidden);
        let mut grad_w = vec![T::zero(); nv * nh];
        let mut grad_v = vec![T::zero(); nv];
        let mut grad_h = vec![T::zero(); nh];
        let mut sq_err = T::zero();

        for v in batch {
            let v = v.as_ref();
            let p = self.hidden_probs_unchecked(v);
            let mut recon = v.to_vec();
            let mut recon_p = p.clone();
            for _ in 0..cd_steps.max(1) {
                let h: Vec<T> = recon_p
                    .iter()
                    .map(|&pj| {
                        let u: f64 = rng.random();
                        if u < pj.as_f64() {
                            T::one()
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                recon = self.visible_means_unchecked(&h);
                recon_p = self.hidden_probs_unchecked(&recon);
            }
            for i in 0..nv {
                let row = &mut grad_w[i * nh..(i + 1) * nh];
                for j in 0..nh {
                    row[j] = row[j] + (v[i] * p[j] - recon[i] * recon_p[j]);
                }
                let d = v[i] - recon[i];
                grad_v[i] = grad_v[i] + d;
                sq_err = sq_err + d * d;
            }
            for j in 0..nh {
                grad_h[j] = grad_h[j] + (p[j] - recon_p[j]);
            }
        }

        if learning_rate == T::zero() {
            return Ok(sq_err);
        }
        let n = T::from_usize(batch.len()).unwrap();
        for (w, g) in self.weights.iter_mut().zip(&grad_w) {
            *w = *w + (learning_rate * *g / n - learning_rate * weight_decay * *w);
        }
        for (b, g) in self.visible_bias.iter_mut().zip(&grad_v) {
            *b = *b + learning_rate * *g / n;
        }
        for (b, g) in self.hidden_bias.iter_mut().zip(&grad_h) {
            *b = *b + learning_rate * *g / n;
        }
        Ok(sq_err)
    }
}

/// Single CD-1 update returning new parameters.
pub fn cd1_update<T, B, R>(
    params: &RbmParams<T>,
    batch: &[B],
    learning_rate: T,
    weight_decay: T,
    rng: &mut R,
) -> Result<RbmParams<T>>
where
    T: Scalar,
    B: AsRef<[T]>,
    R: Rng + ?Sized,
{
    let mut next = params.clone();
    next.cd_step(batch, learning_rate, weight_decay, 1, rng)?;
    Ok(next)
}

/// Mini-batch CD training driven by `config.seed`.
pub fn train<T, B>(init: &RbmParams<T>, data: &[B], config: &TrainConfig) -> Result<Trained<T>>
where
    T: Scalar,
    B: AsRef<[T]>,
{
    let mut rng = seeded(config.seed);
    train_with_rng(init.clone(), data, config, &mut rng)
}

/// Each epoch shuffles the sample order with `rng`, then runs one CD step per
/// batch; the final short batch is kept.
fn train_with_rng<T, B>(
    mut params: RbmParams<T>,
    data: &[B],
    config: &TrainConfig,
    rng: &mut Prng,
) -> Result<Trained<T>>
where
    T: Scalar,
    B: AsRef<[T]>,
{
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("no training samples".into()));
    }
    for v in data {
        params.check_visible(v.as_ref())?;
    }
    let lr = T::of(config.learning_rate);
    let wd = T::of(config.weight_decay);
    let denom = (data.len() * params.visible) as f64;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_errors = Vec::with_capacity(config.epochs);
    let mut batch: Vec<&[T]> = Vec::with_capacity(config.batch_size);

    for _ in 0..config.epochs {
        order.shuffle(rng);
        let mut err = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&k| data[k].as_ref()));
            err += params.cd_step(&batch, lr, wd, config.cd_steps, rng)?.as_f64();
        }
        epoch_errors.push(err / denom);
    }
    if !params.all_finite() {
        return Err(Error::Diverged(
            "non-finite parameters; lower the learning rate".into(),
        ));
    }
    Ok(Trained {
        params,
        epoch_errors,
    })
}

/// Weights `N(0, INIT_WEIGHT_STD²)` in row-major order, zero biases.
pub(crate) fn random_init<T: Scalar>(
    visible: usize,
    hidden: usize,
    rng: &mut Prng,
) -> Result<RbmParams<T>> {
    let normal = Normal::new(0.0, INIT_WEIGHT_STD).unwrap();
    let weights = (0..visible * hidden)
        .map(|_| T::of(normal.sample(rng)))
        .collect();
    RbmParams::from_parts(
        visible,
        hidden,
        weights,
        vec![T::zero(); visible],
        vec![T::zero(); hidden],
    )
}

/// Trains the universal model on every frame of every item (item order, then
/// frame order). Initialization and training share one stream seeded from
/// `config.seed`.
pub fn train_urbm<T: Scalar>(
    items: &[ItemFeatures<T>],
    hidden: usize,
    config: &TrainConfig,
) -> Result<Trained<T>> {
    let frames: Vec<&[T]> = items
        .iter()
        .flat_map(|i| i.frames.iter().map(Vec::as_slice))
        .collect();
    let visible = frames
        .first()
        .ok_or_else(|| Error::EmptyInput("no training frames".into()))?
        .len();
    let mut rng = seeded(config.seed);
    let init = random_init(visible, hidden, &mut rng)?;
    train_with_rng(init, &frames, config, &mut rng)
}

/// Continues training a copy of `urbm` on one item's frames.
pub fn adapt<T: Scalar>(
    urbm: &RbmParams<T>,
    item: &ItemFeatures<T>,
    config: &TrainConfig,
) -> Result<Trained<T>> {
    item.validate()?;
    if item.dim() != urbm.visible() {
        return Err(Error::Shape(format!(
            "item `{}` has dimension {}, model has {} visible units",
            item.item_id,
            item.dim(),
            urbm.visible()
        )));
    }
    let mut rng = seeded(item_seed(config.seed, &item.item_id));
    train_with_rng(urbm.clone(), &item.frames, config, &mut rng)
}
