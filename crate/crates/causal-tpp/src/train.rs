//! Parameter fitting: minibatch gradient descent with early stopping, and
//! finite-difference verification of the analytic gradients.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{batch_loss, batch_loss_and_gradient, LossBreakdown};
use crate::params::{tensor_specs, ModelParameters};
use crate::types::{EventSequence, HyperParameters};

/// Consecutive non-finite epochs tolerated before training aborts.
const DIVERGENCE_PATIENCE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(Error::InvalidConfig(format!(
                "unknown optimizer `{other}` (expected adam or sgd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    /// Fraction of the corpus held out for early stopping.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            max_epochs: 200,
            batch_size: 16,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            patience: 20,
            holdout_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidConfig(format!(
                "holdout fraction must lie in [0, 1), got {}",
                self.holdout_fraction
            )));
        }
        Ok(())
    }
}

/// One line of the training log: per-epoch losses for one split. Wall time
/// is informational only and never feeds any metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub epoch: usize,
    pub split: String,
    pub nll: f64,
    pub acyclic: f64,
    pub sparse: f64,
    pub total: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Parameters of the best epoch by monitored loss.
    pub params: ModelParameters,
    pub log: Vec<TrainLogRecord>,
    pub best_epoch: usize,
    pub best_monitored: f64,
    pub epochs_run: usize,
}

struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer {
    fn new(cfg: &TrainConfig, len: usize) -> Self {
        Optimizer {
            kind: cfg.optimizer,
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.step += 1;
                let b1t = 1.0 - self.beta1.powi(self.step as i32);
                let b2t = 1.0 - self.beta2.powi(self.step as i32);
                for i in 0..params.len() {
                    self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
                    self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
                    let mhat = self.m[i] / b1t;
                    let vhat = self.v[i] / b2t;
                    params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
                }
            }
        }
    }
}

/// Deterministic corpus split: indices are shuffled by the config seed and
/// the leading fraction is held out. A corpus too small to spare a held-out
/// sequence trains on everything and monitors training loss instead.
fn split_corpus(n: usize, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut indices: Vec<usize> = (0..n).collect();
    shuffle(&mut indices, rng);
    let mut holdout_len = (cfg.holdout_fraction * n as f64).round() as usize;
    if holdout_len >= n {
        holdout_len = n - 1;
    }
    let holdout = indices[..holdout_len].to_vec();
    let train = indices[holdout_len..].to_vec();
    (train, holdout)
}

fn shuffle(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    use rand::Rng;
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
}

fn split_eval(
    corpus: &[EventSequence],
    idx: &[usize],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<LossBreakdown> {
    let refs: Vec<&EventSequence> = idx.iter().map(|&i| &corpus[i]).collect();
    batch_loss(&refs, params, hp)
}

/// Fits parameters on a corpus by minibatch descent on the full objective.
///
/// Empty sequences are excluded up front. Training logs one record per
/// split per epoch, monitors the held-out total loss (training loss when no
/// held-out split exists), stops after `patience` epochs without
/// improvement, and returns the best-epoch parameters in canonical gauge
/// (see [`ModelParameters::canonicalized`]). Epochs whose loss is
/// non-finite skip their updates; several in a row abort with a divergence
/// error.
pub fn fit(
    corpus: &[EventSequence],
    init: &ModelParameters,
    hp: &HyperParameters,
    cfg: &TrainConfig,
) -> Result<FitOutcome> {
    hp.validate()?;
    cfg.validate()?;
    let usable: Vec<EventSequence> = corpus.iter().filter(|s| !s.is_empty()).cloned().collect();
    if usable.is_empty() {
        return Err(Error::EmptySequence);
    }
    for seq in &usable {
        crate::types::validate_sequence(seq, hp.num_types)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_idx, holdout_idx) = split_corpus(usable.len(), cfg, &mut rng);

    let mut flat = init.flatten();
    let mut opt = Optimizer::new(cfg, flat.len());
    let mut log = Vec::new();
    let mut best_flat = flat.clone();
    let mut best_monitored = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut bad_epochs = 0;
    let mut epochs_run = 0;

    let mut order = train_idx.clone();
    for epoch in 0..cfg.max_epochs {
        let started = std::time::Instant::now();
        epochs_run = epoch + 1;
        shuffle(&mut order, &mut rng);

        let mut epoch_ok = true;
        for chunk in order.chunks(cfg.batch_size) {
            let params = ModelParameters::from_flat(init.dims, &flat);
            let refs: Vec<&EventSequence> = chunk.iter().map(|&i| &usable[i]).collect();
            match batch_loss_and_gradient(&refs, &params, hp) {
                Ok((_, grad)) => opt.apply(&mut flat, &grad.flatten()),
                Err(Error::NonFiniteLoss) => {
                    epoch_ok = false;
                }
                Err(e) => return Err(e),
            }
        }

        let params = ModelParameters::from_flat(init.dims, &flat);
        let train_loss = match split_eval(&usable, &train_idx, &params, hp) {
            Ok(b) => b,
            Err(Error::NonFiniteLoss) => {
                epoch_ok = false;
                LossBreakdown::compose(f64::NAN, f64::NAN, f64::NAN)
            }
            Err(e) => return Err(e),
        };
        let wall = started.elapsed().as_secs_f64();
        log.push(TrainLogRecord {
            epoch,
            split: "train".into(),
            nll: train_loss.nll,
            acyclic: train_loss.acyclic,
            sparse: train_loss.sparse,
            total: train_loss.total,
            wall_time_s: wall,
        });

        let monitored = if holdout_idx.is_empty() {
            train_loss
        } else {
            match split_eval(&usable, &holdout_idx, &params, hp) {
                Ok(b) => b,
                Err(Error::NonFiniteLoss) => {
                    epoch_ok = false;
                    LossBreakdown::compose(f64::NAN, f64::NAN, f64::NAN)
                }
                Err(e) => return Err(e),
            }
        };
        if !holdout_idx.is_empty() {
            log.push(TrainLogRecord {
                epoch,
                split: "held_out".into(),
                nll: monitored.nll,
                acyclic: monitored.acyclic,
                sparse: monitored.sparse,
                total: monitored.total,
                wall_time_s: wall,
            });
        }

        if !epoch_ok || !monitored.total.is_finite() {
            bad_epochs += 1;
            if bad_epochs >= DIVERGENCE_PATIENCE {
                return Err(Error::Diverged { epochs: bad_epochs });
            }
            continue;
        }
        bad_epochs = 0;

        if monitored.total < best_monitored {
            best_monitored = monitored.total;
            best_flat = flat.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }

    // Returned parameters are gauge-canonicalized (intensities unchanged)
    // so that structural-weight magnitudes are comparable across runs and
    // meaningful against a fixed edge threshold.
    Ok(FitOutcome {
        params: ModelParameters::from_flat(init.dims, &best_flat).canonicalized(),
        log,
        best_epoch,
        best_monitored,
        epochs_run,
    })
}

/// Central finite-difference gradient of the batch objective over the flat
/// parameter vector.
pub fn fd_gradient(
    batch: &[&EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
    step: f64,
) -> Result<Vec<f64>> {
    let flat = params.flatten();
    let mut out = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += step;
        let mut minus = flat.clone();
        minus[i] -= step;
        let fp = batch_loss(batch, &ModelParameters::from_flat(params.dims, &plus), hp)?.total;
        let fm = batch_loss(batch, &ModelParameters::from_flat(params.dims, &minus), hp)?.total;
        out[i] = (fp - fm) / (2.0 * step);
    }
    Ok(out)
}

/// Agreement between analytic and finite-difference gradients for one
/// parameter tensor: Euclidean norms and their relative difference.
#[derive(Debug, Clone, Serialize)]
pub struct TensorCheck {
    pub name: &'static str,
    pub analytic_norm: f64,
    pub fd_norm: f64,
    pub rel_error: f64,
}

/// Per-tensor comparison of analytic and finite-difference gradients of the
/// batch objective.
pub fn gradient_check(
    batch: &[&EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
    step: f64,
) -> Result<Vec<TensorCheck>> {
    let (_, grad) = batch_loss_and_gradient(batch, params, hp)?;
    let analytic = grad.flatten();
    let fd = fd_gradient(batch, params, hp, step)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(tensor_specs(params.dims)
        .into_iter()
        .map(|spec| {
            let a = &analytic[spec.offset..spec.offset + spec.len];
            let f = &fd[spec.offset..spec.offset + spec.len];
            let diff: Vec<f64> = a.iter().zip(f).map(|(x, y)| x - y).collect();
            let fd_norm = norm(f);
            TensorCheck {
                name: spec.name,
                analytic_norm: norm(a),
                fd_norm,
                rel_error: norm(&diff) / fd_norm.max(1e-6),
            }
        })
        .collect())
}

/// Deterministic toy batch for gradient verification: two short sequences
/// with exponential-ish gaps and uniform types.
pub fn toy_batch(seed: u64, num_types: usize, max_len: usize) -> Vec<EventSequence> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(2654435761).wrapping_add(17));
    (0..2)
        .map(|_| {
            let n = 1 + rng.random_range(0..max_len);
            let mut t = 0.0;
            let events = (0..n)
                .map(|_| {
                    t += 0.1 + rng.random::<f64>() * 0.6;
                    crate::types::Event {
                        time: t,
                        kind: rng.random_range(0..num_types),
                    }
                })
                .collect();
            EventSequence::new(events, t + 0.5)
        })
        .collect()
}
