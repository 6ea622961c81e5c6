//! Denoising autoencoder whose encoder is fine-tuned together with a
//! predictor head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Dense, DenseNetwork};
use super::train::{accuracy, check_training_data, cross_entropy, optimize, Corruptor, TrainConfig, TrainReport};
use crate::data::{DatasetSchema, TabularDataset};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaeSchedule {
    pub encoder: Vec<usize>,
    pub predictor_hidden: Vec<usize>,
    pub reconstruction_epochs: usize,
    pub finetune_epochs: usize,
}

impl Default for DaeSchedule {
    fn default() -> Self {
        Self {
            encoder: vec![64, 32],
            predictor_hidden: vec![16],
            reconstruction_epochs: 200,
            finetune_epochs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaeNetwork {
    /// `d -> 64 -> 32`, rectified.
    pub encoder: Vec<Dense>,
    /// `32 -> 64 -> d`; the output is linear and clipped to `[0, 1]`.
    pub decoder: Vec<Dense>,
    /// `32 -> 16 -> K`, softmax head.
    pub predictor: Vec<Dense>,
}

impl DaeNetwork {
    /// Encoder followed by predictor as a single classifier.
    pub fn classifier(&self) -> DenseNetwork {
        DenseNetwork::from_layers(self.encoder.iter().chain(&self.predictor).cloned().collect())
            .expect("encoder and predictor chain")
    }

    pub fn autoencoder(&self) -> DenseNetwork {
        DenseNetwork::from_layers(self.encoder.iter().chain(&self.decoder).cloned().collect())
            .expect("encoder and decoder chain")
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.autoencoder().logits(x)?;
        out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Ok(out)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.classifier().forward(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaeReport {
    pub reconstruction: TrainReport,
    pub finetune: TrainReport,
}

/// Mean squared error between clipped reconstruction and target. The
/// gradient passes straight through the clip.
fn clipped_mse(out: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let n = out.len() as f64;
    let mut loss = 0.0;
    let grad = out
        .iter()
        .zip(target)
        .map(|(&o, &t)| {
            let diff = o.clamp(0.0, 1.0) - t;
            loss += diff * diff;
            2.0 * diff / n
        })
        .collect();
    (loss / n, grad)
}

pub fn reconstruction_error(ae: &DenseNetwork, ds: &TabularDataset) -> f64 {
    let total: f64 = ds
        .rows()
        .map(|r| clipped_mse(&ae.logits_unchecked(r), r).0)
        .sum();
    total / ds.len().max(1) as f64
}

/// Phase 1 trains encoder+decoder to reconstruct complete rows from
/// dropout-corrupted inputs; phase 2 fine-tunes encoder+predictor with
/// cross-entropy.
pub fn train_dae_predictor(
    train: &TabularDataset,
    val: &TabularDataset,
    schema: &DatasetSchema,
    cfg: &TrainConfig,
    schedule: &DaeSchedule,
) -> Result<(DaeNetwork, DaeReport)> {
    cfg.validate()?;
    check_training_data(train, val, schema)?;
    if schedule.encoder.is_empty() || schedule.encoder.contains(&0) {
        return Err(Error::Config("encoder widths must be non-empty and positive".into()));
    }
    let d = schema.dim();
    let k = schema.class_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // d -> encoder.. -> mirrored encoder (without the code layer) -> d
    let mut ae_dims = vec![d];
    ae_dims.extend(&schedule.encoder);
    ae_dims.extend(schedule.encoder.iter().rev().skip(1));
    ae_dims.push(d);
    let mut ae = DenseNetwork::glorot(&ae_dims, &mut rng)?;
    let corruptor = Corruptor::new(train.feature_means(), cfg)?;
    let reconstruction = optimize(
        &mut ae,
        train,
        cfg,
        schedule.reconstruction_epochs,
        &corruptor,
        &mut rng,
        |i, out| clipped_mse(out, train.row(i)),
        |n| -reconstruction_error(n, val),
    )?;
    let n_enc = schedule.encoder.len();
    let encoder: Vec<Dense> = ae.layers()[..n_enc].to_vec();
    let decoder: Vec<Dense> = ae.layers()[n_enc..].to_vec();

    let code = *schedule.encoder.last().unwrap();
    let mut pred_dims = vec![code];
    pred_dims.extend(&schedule.predictor_hidden);
    pred_dims.push(k);
    let head = DenseNetwork::glorot(&pred_dims, &mut rng)?;
    let mut clf = DenseNetwork::from_layers(encoder.into_iter().chain(head.layers().iter().cloned()).collect())?;
    let labels = train.labels();
    let finetune = optimize(
        &mut clf,
        train,
        cfg,
        schedule.finetune_epochs,
        &corruptor,
        &mut rng,
        |i, out| cross_entropy(out, labels[i]),
        |n| accuracy(n, val),
    )?;
    let layers = clf.layers();
    let model = DaeNetwork {
        encoder: layers[..n_enc].to_vec(),
        decoder,
        predictor: layers[n_enc..].to_vec(),
    };
    Ok((
        model,
        DaeReport {
            reconstruction,
            finetune,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_mse_passes_gradient_through_clip() {
        let (l, g) = clipped_mse(&[1.5, 0.5], &[1.0, 0.0]);
        assert!((l - 0.125).abs() < 1e-15);
        assert_eq!(g, vec![0.0, 0.5]);
        let (_, g) = clipped_mse(&[-2.0], &[0.5]);
        assert_eq!(g, vec![-1.0]);
    }
}
