use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::augment;
use super::config::{AugmentationConfig, ModelConfig, TrainConfig};
use super::model::{cross_entropy, ModelHeader, Network, TrainedModel};
use super::normalize::{normalize, NormalizedSequence};
use super::RecognizerError;
use crate::catalog::VocabularyCatalog;
use crate::pose::synth::LabeledSequence;
use crate::pose::PoseSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's (augmented) samples.
    pub loss: f64,
    /// Training accuracy measured during the epoch's forward passes.
    pub accuracy: f64,
    /// Learning rate used during this epoch.
    pub learning_rate: f64,
}

/// Reduce-on-plateau in "min" mode with a relative threshold of 1e-4: an
/// epoch improves if its loss is below `best * (1 - 1e-4)`. Once more than
/// `patience` consecutive epochs fail to improve, the rate is multiplied by
/// `factor` and the count restarts.
#[derive(Debug, Clone)]
struct Plateau {
    factor: f64,
    patience: usize,
    best: f64,
    bad_epochs: usize,
}

const PLATEAU_THRESHOLD: f64 = 1e-4;

impl Plateau {
    fn new(factor: f64, patience: usize) -> Self {
        Self {
            factor,
            patience,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    fn step(&mut self, loss: f64, lr: f64) -> f64 {
        if loss < self.best * (1.0 - PLATEAU_THRESHOLD) {
            self.best = loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
        }
        if self.bad_epochs > self.patience {
            self.bad_epochs = 0;
            lr * self.factor
        } else {
            lr
        }
    }
}

pub fn train(
    dataset: &[LabeledSequence],
    catalog: &VocabularyCatalog,
    tc: &TrainConfig,
    mc: &ModelConfig,
    ac: &AugmentationConfig,
) -> Result<TrainedModel, RecognizerError> {
    train_with_observer(dataset, catalog, tc, mc, ac, &mut |_| {})
}

/// Per-sample SGD over a shuffled dataset. `observer` sees every epoch's
/// stats as soon as the epoch ends.
pub fn train_with_observer(
    dataset: &[LabeledSequence],
    catalog: &VocabularyCatalog,
    tc: &TrainConfig,
    mc: &ModelConfig,
    ac: &AugmentationConfig,
    observer: &mut dyn FnMut(&EpochStats),
) -> Result<TrainedModel, RecognizerError> {
    tc.validate()?;
    mc.validate()?;
    ac.validate()?;
    if dataset.is_empty() {
        return Err(RecognizerError::EmptyDataset);
    }
    if let Some((index, s)) = dataset.iter().enumerate().find(|(_, s)| s.class >= catalog.len()) {
        return Err(RecognizerError::LabelOutOfRange {
            index,
            label: s.class,
            classes: catalog.len(),
        });
    }
    let subset = &tc.landmark_subset;
    let net = Network::new(mc, 2 * subset.len(), catalog.len());
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut params = net.init(&mut rng);
    let mut grad = vec![0.0; params.len()];

    let prepare = |seq: &PoseSequence| -> Result<NormalizedSequence, RecognizerError> {
        Ok(normalize(seq, subset)?.subsampled(mc.max_frames))
    };
    let augmenting = ac.apply_probability > 0.0;
    let fixed: Vec<NormalizedSequence> = if augmenting {
        Vec::new()
    } else {
        dataset.iter().map(|s| prepare(&s.sequence)).collect::<Result<_, _>>()?
    };

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut lr = tc.learning_rate;
    let mut plateau = Plateau::new(tc.plateau_factor, tc.plateau_patience);
    let mut history = Vec::with_capacity(tc.epochs);
    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        let (mut total_loss, mut correct) = (0.0, 0usize);
        for &i in &order {
            let sample = &dataset[i];
            let augmented;
            let x = if augmenting {
                augmented = prepare(&augment(&sample.sequence, ac, &mut rng))?;
                &augmented
            } else {
                &fixed[i]
            };
            let (logits, cache) = net.forward(&params, x);
            let (loss, dlogits) = cross_entropy(&logits, sample.class);
            total_loss += loss;
            if argmax(&logits) == sample.class {
                correct += 1;
            }
            grad.fill(0.0);
            net.backward(&params, &mut grad, &cache, &dlogits);
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= lr * g;
            }
        }
        let stats = EpochStats {
            epoch,
            loss: total_loss / dataset.len() as f64,
            accuracy: correct as f64 / dataset.len() as f64,
            learning_rate: lr,
        };
        observer(&stats);
        lr = plateau.step(stats.loss, lr);
        history.push(stats);
    }

    let header = ModelHeader {
        model_config: mc.clone(),
        landmark_subset: subset.clone(),
        num_classes: catalog.len(),
        catalog_fingerprint: catalog.fingerprint(),
        history,
    };
    TrainedModel::from_parts(header, params)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
