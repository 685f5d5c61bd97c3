use super::{CnnModel, ModelError};
use crate::dataset::{DatasetSplit, LabeledSample};
use crate::tensor::{OptimizerState, RmsProp, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub rho: f64,
    pub epsilon: f64,
    /// Also score the held-out split after every epoch.
    pub evaluate_test: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let opt = RmsProp::default();
        Self {
            learning_rate: opt.learning_rate,
            epochs: 30,
            batch_size: 20,
            seed: 0,
            rho: opt.rho,
            epsilon: opt.epsilon,
            evaluate_test: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
}

pub type TrainHistory = Vec<EpochRecord>;

/// Fraction of samples classified correctly at the default threshold.
pub fn accuracy_on(model: &CnnModel<f32>, samples: &[LabeledSample]) -> Result<f64, ModelError> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let correct: Vec<bool> = samples
        .par_iter()
        .map(|s| {
            model
                .predict(s.image.as_tensor(), super::DEFAULT_THRESHOLD)
                .map(|p| p.label == s.label)
        })
        .collect::<Result<_, _>>()?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / samples.len() as f64)
}

pub fn train(
    model: CnnModel<f32>,
    split: &DatasetSplit,
    config: &TrainConfig,
) -> Result<(CnnModel<f32>, TrainHistory), ModelError> {
    train_with(model, split, config, |_| {})
}

/// Mini-batch RMSprop on mean batch BCE. The sample order is reshuffled
/// every epoch from a single RNG seeded by `config.seed`; per-sample
/// gradients are computed in parallel and summed in batch order, so the
/// result is bit-reproducible.
pub fn train_with(
    mut model: CnnModel<f32>,
    split: &DatasetSplit,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(CnnModel<f32>, TrainHistory), ModelError> {
    config.validate()?;
    let data = &split.train;
    if data.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let first = data[0].label;
    if data.iter().all(|s| s.label == first) {
        return Err(ModelError::SingleClass(first));
    }

    let mut opt = OptimizerState::new(
        RmsProp {
            learning_rate: config.learning_rate,
            rho: config.rho,
            epsilon: config.epsilon,
        },
        model.params(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let per_sample: Vec<(f32, f32, Vec<Tensor<f32>>)> = batch
                .par_iter()
                .map(|&i| model.loss_and_grads(data[i].image.as_tensor(), data[i].label))
                .collect::<Result<_, _>>()?;

            let mut total: Option<Vec<Tensor<f32>>> = None;
            let mut batch_loss = 0.0f64;
            for ((loss, p, grads), &i) in per_sample.into_iter().zip(batch) {
                batch_loss += loss as f64;
                let label = super::decide(p as f64, super::DEFAULT_THRESHOLD);
                correct += usize::from(label == data[i].label);
                match total.as_mut() {
                    None => total = Some(grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&grads) {
                            a.add_assign(g)?;
                        }
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            loss_sum += batch_loss;
            let mut grads = total.expect("chunks are non-empty");
            let scale = 1.0 / batch.len() as f32;
            grads.iter_mut().for_each(|g| g.scale(scale));
            opt.step(model.params_mut(), &grads)?;
        }
        let test_accuracy = if config.evaluate_test && !split.test.is_empty() {
            Some(accuracy_on(&model, &split.test)?)
        } else {
            None
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
            test_accuracy,
        };
        on_epoch(&record);
        history.push(record);
    }
    Ok((model, history))
}
