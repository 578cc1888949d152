use serde::{Deserialize, Serialize};

use super::dataset::SpectralDataset;
use super::model::{Gradients, MlpModel};
use crate::error::{Error, Result};
use crate::radiometry::PixelSpectrum;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// An epoch improves only if it beats the best loss by at least this.
    pub min_delta: f64,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub seed: u64,
    /// Luminance augmentation range.
    pub aug_min: f64,
    pub aug_max: f64,
    pub balance_classes: bool,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_epochs: 500,
            patience: 2,
            min_delta: 1e-6,
            batch_size: 256,
            val_fraction: 0.2,
            seed: 0,
            aug_min: 0.68,
            aug_max: 1.46,
            balance_classes: true,
            hidden: vec![16, 8],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.val_fraction > 0.0
            && self.val_fraction < 1.0
            && self.aug_min > 0.0
            && self.aug_min <= self.aug_max
            && self.learning_rate > 0.0
            && self.batch_size > 0;
        if !ok {
            return Err(Error::Domain(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// Scales every band by `factor`, which must lie in the configured range.
pub fn augment(sample: &PixelSpectrum, factor: f64, cfg: &TrainConfig) -> Result<PixelSpectrum> {
    if !(factor > 0.0) || factor < cfg.aug_min || factor > cfg.aug_max {
        return Err(Error::Domain(format!(
            "augmentation factor {factor} outside [{}, {}]",
            cfg.aug_min, cfg.aug_max
        )));
    }
    Ok(PixelSpectrum(sample.0.iter().map(|v| v * factor).collect()))
}

/// Index batches for one epoch.
///
/// With `balance_classes`, the category (clothing / non-clothing) with fewer
/// samples is topped up by drawing from itself with replacement until both
/// categories contribute the same count; then everything is shuffled.
pub fn balanced_batches(dataset: &SpectralDataset, cfg: &TrainConfig, epoch_seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut rng = SplitMix64::new(epoch_seed);
    let flags = dataset.labels.is_clothing();
    let (clothing, other): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| flags[dataset.samples[i].1]);
    let mut order = if cfg.balance_classes {
        if clothing.is_empty() || other.is_empty() {
            return Err(Error::DegenerateDataset(
                "balanced sampling needs both clothing and non-clothing samples".into(),
            ));
        }
        let (major, minor) = if clothing.len() >= other.len() {
            (clothing, other)
        } else {
            (other, clothing)
        };
        let mut order = major.clone();
        order.extend_from_slice(&minor);
        for _ in minor.len()..major.len() {
            order.push(minor[rng.below(minor.len())]);
        }
        order
    } else {
        (0..dataset.len()).collect()
    };
    rng.shuffle(&mut order);
    Ok(order.chunks(cfg.batch_size).map(<[usize]>::to_vec).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Wait,
    Stop,
}

/// Patience counter over validation losses.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    min_delta: f64,
    best: f64,
    best_epoch: usize,
    waited: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self {
            patience,
            min_delta,
            best: f64::INFINITY,
            best_epoch: 0,
            waited: 0,
        }
    }

    pub fn update(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best - self.min_delta {
            self.best = loss;
            self.best_epoch = epoch;
            self.waited = 0;
            return StopDecision::Improved;
        }
        self.waited += 1;
        if self.waited >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Wait
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(model: &MlpModel, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            step: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (i, layer) in model.layers_mut().iter_mut().enumerate() {
            let params = [(&mut layer.weights, 0usize), (&mut layer.bias, 1)];
            for (p, kind) in params {
                let (g, m, v) = if kind == 0 {
                    (&grads.weights[i], &mut self.m.weights[i], &mut self.v.weights[i])
                } else {
                    (&grads.bias[i], &mut self.m.bias[i], &mut self.v.bias[i])
                };
                for j in 0..p.len() {
                    m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                    v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                    let m_hat = m[j] / c1;
                    let v_hat = v[j] / c2;
                    p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainLog {
    pub fn best(&self) -> Option<&EpochLog> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }
}

/// Mean cross-entropy and argmax accuracy on `samples`.
pub fn cross_entropy(model: &MlpModel, samples: &[(PixelSpectrum, usize)]) -> (f64, f64) {
    let batch: Vec<(&[f64], usize)> = samples.iter().map(|(x, y)| (x.values(), *y)).collect();
    let loss = model.loss(&batch);
    let mut s = model.scratch();
    let correct = batch
        .iter()
        .filter(|(x, y)| super::argmax(model.forward_with(x, &mut s)) == *y)
        .count();
    (loss, correct as f64 / samples.len().max(1) as f64)
}

/// Trains a fresh model on `dataset`, returning the snapshot with the lowest
/// validation loss.
pub fn train(dataset: &SpectralDataset, cfg: &TrainConfig) -> Result<(MlpModel, TrainLog)> {
    cfg.validate()?;
    dataset.validate()?;
    if dataset.len() < 2 {
        return Err(Error::DegenerateDataset("need at least two samples".into()));
    }
    let mut distinct: Vec<usize> = dataset.samples.iter().map(|s| s.1).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateDataset("dataset has a single class".into()));
    }
    let input_dim = dataset.samples[0].0.values().len();

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    SplitMix64::fork(cfg.seed, 0).shuffle(&mut order);
    let n_val = ((dataset.len() as f64 * cfg.val_fraction).round() as usize).clamp(1, dataset.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_set = dataset.subset(train_idx);
    let val_set = dataset.subset(val_idx);

    let mut model = MlpModel::init(input_dim, &cfg.hidden, dataset.labels.clone(), cfg.seed)?;
    let mut adam = Adam::new(&model, cfg);
    let mut stopper = EarlyStopping::new(cfg.patience, cfg.min_delta);
    let mut best = model.clone();
    let mut log = TrainLog::default();

    for epoch in 1..=cfg.max_epochs {
        let batches = balanced_batches(&train_set, cfg, SplitMix64::fork(cfg.seed, epoch as u64).next_u64())?;
        let mut train_loss = 0.0;
        for idx in &batches {
            let batch: Vec<(&[f64], usize)> = idx
                .iter()
                .map(|&i| (train_set.samples[i].0.values(), train_set.samples[i].1))
                .collect();
            let (loss, grads) = model.loss_and_grad(&batch);
            train_loss += loss;
            adam.step(&mut model, &grads);
        }
        train_loss /= batches.len().max(1) as f64;
        let (val_loss, val_accuracy) = cross_entropy(&model, &val_set.samples);
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });
        match stopper.update(epoch, val_loss) {
            StopDecision::Improved => best = model.clone(),
            StopDecision::Wait => {}
            StopDecision::Stop => {
                log.stopped_early = true;
                break;
            }
        }
    }
    log.best_epoch = stopper.best_epoch();
    Ok((best, log))
}
