//! Adam with step decay and early stopping, run stage by stage.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::{TrainGroup, TrainSet};
use super::layers::bce_from_logit;
use super::model::LgnModel;
use super::LgnError;
use crate::math::{pow, sigmoid, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    /// Epochs between learning-rate decays.
    pub step_size: usize,
    pub gamma: f64,
    pub patience: usize,
    pub max_epochs: usize,
    /// Groups per optimizer step.
    pub batch_groups: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            step_size: 10,
            gamma: 0.6,
            patience: 20,
            max_epochs: 200,
            batch_groups: 4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LgnError> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && self.step_size >= 1
            && self.gamma > 0.0
            && self.patience >= 1
            && self.batch_groups >= 1
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2);
        if ok {
            Ok(())
        } else {
            Err(LgnError::Config(format!("{self:?}")))
        }
    }
}

/// Learning rate in effect during zero-based `epoch`.
pub fn lr_at(cfg: &TrainConfig, epoch: usize) -> f64 {
    cfg.lr * pow(cfg.gamma, (epoch / cfg.step_size) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - pow(cfg.beta1, self.t as f64);
        let c2 = 1.0 - pow(cfg.beta2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / (sqrt(self.v[i] / c2) + cfg.eps);
        }
    }
}

/// Summed (not averaged) loss, weight and gradient over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradient {
    pub loss: f64,
    pub weight: f64,
    pub grad: Vec<f64>,
}

/// Gradient of one group; backends decide how groups are scheduled but
/// must add the per-group results in batch order.
pub fn group_gradient(model: &LgnModel, group: &TrainGroup) -> Result<BatchGradient, LgnError> {
    let mut grad = vec![0.0; model.params.len()];
    let cache = model.build_pyramid(&group.input, group.rows, group.cols)?;
    let (loss, weight) = model.accumulate_gradient(&cache, &group.targets, &mut grad)?;
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(LgnError::NonFinite(format!("gradient of weight {i} on map {} focus {}", group.map_id, group.focus_id)));
    }
    Ok(BatchGradient { loss, weight, grad })
}

/// Adds per-group results in order.
pub fn reduce(parts: Vec<BatchGradient>, n: usize) -> BatchGradient {
    let mut out = BatchGradient { loss: 0.0, weight: 0.0, grad: vec![0.0; n] };
    for p in parts {
        out.loss += p.loss;
        out.weight += p.weight;
        for (a, b) in out.grad.iter_mut().zip(&p.grad) {
            *a += b;
        }
    }
    out
}

pub trait GradientBackend {
    fn gradient(&self, model: &LgnModel, batch: &[&TrainGroup]) -> Result<BatchGradient, LgnError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SerialBackend;

impl GradientBackend for SerialBackend {
    fn gradient(&self, model: &LgnModel, batch: &[&TrainGroup]) -> Result<BatchGradient, LgnError> {
        let parts = batch.iter().map(|g| group_gradient(model, g)).collect::<Result<Vec<_>, _>>()?;
        Ok(reduce(parts, model.params.len()))
    }
}

/// Mean gradient of the label-weighted NLL over `groups`.
pub fn mean_gradient(
    model: &LgnModel,
    groups: &[&TrainGroup],
    backend: &dyn GradientBackend,
) -> Result<(f64, Vec<f64>), LgnError> {
    let mut b = backend.gradient(model, groups)?;
    if b.weight <= 0.0 {
        return Err(LgnError::EmptyStage(0));
    }
    for g in &mut b.grad {
        *g /= b.weight;
    }
    Ok((b.loss / b.weight, b.grad))
}

/// Per-target predictions of one group, in target order.
pub fn predict_group(model: &LgnModel, group: &TrainGroup) -> Result<Vec<f64>, LgnError> {
    let cache = model.build_pyramid(&group.input, group.rows, group.cols)?;
    group.targets.iter().map(|t| Ok(sigmoid(model.logit(&cache, t.row, t.col, t.relation)?))).collect()
}

/// Label-weighted mean NLL.
pub fn evaluate(model: &LgnModel, set: &TrainSet) -> Result<f64, LgnError> {
    let mut loss = 0.0;
    let mut weight = 0.0;
    for g in &set.groups {
        let cache = model.build_pyramid(&g.input, g.rows, g.cols)?;
        for t in &g.targets {
            loss += t.weight * bce_from_logit(model.logit(&cache, t.row, t.col, t.relation)?, t.target);
            weight += t.weight;
        }
    }
    Ok(if weight > 0.0 { loss / weight } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_nll: f64,
    pub val_nll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub stage: u8,
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_nll: f64,
    pub stopped_early: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Trains on `train`, tracking validation NLL on `val` (or `train` when
/// `val` is empty). Returns the weights of the best validation epoch.
pub fn train_stage(
    model: &LgnModel,
    stage: u8,
    train: &TrainSet,
    val: &TrainSet,
    cfg: &TrainConfig,
    backend: &dyn GradientBackend,
) -> Result<(LgnModel, TrainLog), LgnError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(LgnError::EmptyStage(stage));
    }
    let val = if val.is_empty() { train } else { val };
    let mut rng = crate::rng::seeded(cfg.seed ^ ((stage as u64) << 32), crate::rng::stream::TRAIN);
    let mut current = model.clone();
    let mut adam = Adam::new(current.params.len());
    let mut best = current.clone();
    let mut best_val = evaluate(&current, val)?;
    let mut log = TrainLog { stage, epochs: Vec::new(), best_epoch: 0, best_val_nll: best_val, stopped_early: false, warnings: Vec::new() };
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.groups.len()).collect();
    for epoch in 0..cfg.max_epochs {
        let lr = lr_at(cfg, epoch);
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        let mut train_weight = 0.0;
        for chunk in order.chunks(cfg.batch_groups) {
            let batch: Vec<&TrainGroup> = chunk.iter().map(|&i| &train.groups[i]).collect();
            let b = backend.gradient(&current, &batch)?;
            if b.weight <= 0.0 {
                continue;
            }
            train_loss += b.loss;
            train_weight += b.weight;
            let g: Vec<f64> = b.grad.iter().map(|v| v / b.weight).collect();
            adam.step(&mut current.params, &g, lr, cfg);
        }
        let val_nll = evaluate(&current, val)?;
        log.epochs.push(EpochLog { epoch, lr, train_nll: train_loss / train_weight.max(1e-300), val_nll });
        if val_nll < best_val {
            best_val = val_nll;
            best = current.clone();
            log.best_epoch = epoch + 1;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    log.best_val_nll = best_val;
    Ok((best, log))
}

/// Stage data: training and validation sets.
pub type StageData = (TrainSet, TrainSet);

/// Runs stages 1 to 3 in order, carrying weights forward. A missing or
/// empty stage-3 set is skipped with a warning in its log.
pub fn train_curriculum(
    model: &LgnModel,
    stages: [Option<&StageData>; 3],
    cfg: &TrainConfig,
    backend: &dyn GradientBackend,
) -> Result<(LgnModel, Vec<TrainLog>), LgnError> {
    let mut current = model.clone();
    let mut logs = Vec::new();
    for (i, data) in stages.iter().enumerate() {
        let stage = i as u8 + 1;
        match data {
            Some((train, val)) if !train.is_empty() => {
                let (m, log) = train_stage(&current, stage, train, val, cfg, backend)?;
                current = m;
                logs.push(log);
            }
            _ if stage == 3 => logs.push(TrainLog {
                stage,
                epochs: Vec::new(),
                best_epoch: 0,
                best_val_nll: f64::NAN,
                stopped_early: false,
                warnings: alloc::vec![String::from("no human annotations; stage 3 skipped")],
            }),
            _ => return Err(LgnError::EmptyStage(stage)),
        }
    }
    Ok((current, logs))
}
