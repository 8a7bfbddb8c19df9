//! Mini-batch AdaGrad shared by every trained model in the crate.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the uniform range used for random initialization.
pub const INIT_RANGE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the squared Frobenius penalty on projection matrices.
    pub l2_weight: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Weight given to favored embedding sets when weights are not set
    /// explicitly.
    pub loss_weight_scalar: f64,
    pub adagrad_epsilon: f64,
    /// Stop once the epoch mean loss improved by less than this fraction over
    /// the last `early_stop_window` epochs. Zero disables early stopping.
    pub early_stop_tol: f64,
    pub early_stop_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::one_to_n()
    }
}

impl TrainConfig {
    fn with(batch_size: usize, learning_rate: f64, l2_weight: f64) -> Self {
        TrainConfig {
            batch_size,
            learning_rate,
            l2_weight,
            epochs: 100,
            seed: 42,
            loss_weight_scalar: 8.0,
            adagrad_epsilon: 1e-8,
            early_stop_tol: 1e-5,
            early_stop_window: 5,
        }
    }

    pub fn one_to_n() -> Self {
        Self::with(200, 0.005, 5e-4)
    }

    pub fn mutual_learning() -> Self {
        Self::with(200, 0.01, 5e-8)
    }

    pub fn one_to_n_plus() -> Self {
        Self::with(2000, 0.005, 5e-4)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2_weight >= 0.0 && self.l2_weight.is_finite()) {
            return bad("l2_weight must be non-negative");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.loss_weight_scalar > 0.0 && self.loss_weight_scalar.is_finite()) {
            return bad("loss_weight_scalar must be positive");
        }
        if !(self.adagrad_epsilon > 0.0 && self.adagrad_epsilon.is_finite()) {
            return bad("adagrad_epsilon must be positive");
        }
        if !(self.early_stop_tol >= 0.0 && self.early_stop_tol.is_finite()) {
            return bad("early_stop_tol must be non-negative");
        }
        Ok(())
    }

    /// Generator for parameter initialization (stream 0 of `seed`).
    pub fn init_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-example data loss of every completed epoch.
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
    pub steps: usize,
}

/// One AdaGrad step: `accum += g²; params -= lr * g / sqrt(accum + eps)`.
pub fn adagrad_update(
    params: &mut [f64],
    grads: &[f64],
    accum: &mut [f64],
    lr: f64,
    eps: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != accum.len() {
        return Err(Error::LengthMismatch {
            left: params.len(),
            right: if grads.len() != params.len() {
                grads.len()
            } else {
                accum.len()
            },
        });
    }
    adagrad_step(params, grads, accum, lr, eps);
    Ok(())
}

#[inline]
pub(crate) fn adagrad_step(
    params: &mut [f64],
    grads: &[f64],
    accum: &mut [f64],
    lr: f64,
    eps: f64,
) {
    for ((p, &g), a) in params.iter_mut().zip(grads).zip(accum.iter_mut()) {
        *a += g * g;
        let denom = (*a + eps).sqrt();
        if denom > 0.0 {
            *p -= lr * g / denom;
        }
    }
}

/// Shuffled partition of `0..n` into batches of `batch_size` (the last one
/// may be smaller). The permutation depends only on `(seed, epoch)`.
pub fn minibatches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let batch_size = batch_size.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0 is reserved for initialization
    rng.set_stream(epoch as u64 + 1);
    order.shuffle(&mut rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// `len` values drawn uniformly from `[-INIT_RANGE, INIT_RANGE]`.
pub fn init_uniform<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
        .collect()
}

pub(crate) fn should_stop(losses: &[f64], tol: f64, window: usize) -> bool {
    let Some(&last) = losses.last() else {
        return false;
    };
    if last == 0.0 {
        return true;
    }
    if tol <= 0.0 || window == 0 || losses.len() <= window {
        return false;
    }
    let before = losses[losses.len() - 1 - window];
    before > 0.0 && (before - last) / before < tol
}

/// Runs the epoch/batch loop. `step` trains on one batch and returns the
/// summed data loss of its examples (measured before the update).
pub fn run_epochs<F>(n: usize, config: &TrainConfig, mut step: F) -> Result<TrainReport>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    config.validate()?;
    if n == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let mut report = TrainReport::default();
    for epoch in 0..config.epochs {
        let mut total = 0.0;
        for batch in minibatches(n, config.batch_size, config.seed, epoch) {
            total += step(&batch)?;
            report.steps += 1;
        }
        let mean = total / n as f64;
        report.epoch_losses.push(mean);
        log::debug!("epoch {epoch}: mean loss {mean:.6e}");
        if should_stop(
            &report.epoch_losses,
            config.early_stop_tol,
            config.early_stop_window,
        ) {
            break;
        }
    }
    report.final_loss = *report.epoch_losses.last().unwrap_or(&0.0);
    Ok(report)
}
