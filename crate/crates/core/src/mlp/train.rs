use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dropout::{beta_dist, draw_mask};
use super::network::{softmax, Dense, DenseNetwork};
use crate::data::{DatasetSchema, TabularDataset};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Stop after this many epochs without a new best validation score.
    pub patience: Option<usize>,
    /// Simulate missingness with Beta-distributed input dropout.
    pub input_dropout: bool,
    pub dropout_alpha: f64,
    pub dropout_beta: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Hidden layer widths between the input and the class head.
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs: 200,
            batch_size: 128,
            patience: Some(20),
            input_dropout: true,
            dropout_alpha: 1.5,
            dropout_beta: 1.5,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            hidden: vec![64, 32, 16],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // A zero learning rate is accepted (parameters stay put).
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.dropout_alpha > 0.0 && self.dropout_beta > 0.0) {
            return Err(Error::Config(format!(
                "dropout Beta parameters must be positive, got ({}, {})",
                self.dropout_alpha, self.dropout_beta
            )));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Config("Adam moment decays must lie in [0, 1)".into()));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::Config("Adam epsilon must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
    pub best_score: f64,
    pub train_loss: Vec<f64>,
    pub val_score: Vec<f64>,
}

/// Adam state over a list of layers.
pub(crate) struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl Adam {
    pub fn new(layers: &[Dense], cfg: &TrainConfig) -> Self {
        let zeros: Vec<Dense> = layers.iter().map(|l| Dense::zeros(l.in_dim, l.out_dim)).collect();
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_epsilon,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, params: &mut [Dense], grads: &[Dense]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        };
        for (l, layer) in params.iter_mut().enumerate() {
            update(
                &mut layer.weights,
                &grads[l].weights,
                &mut self.m[l].weights,
                &mut self.v[l].weights,
            );
            update(
                &mut layer.biases,
                &grads[l].biases,
                &mut self.m[l].biases,
                &mut self.v[l].biases,
            );
        }
    }
}

/// Builds the network input for one training sample: features dropped by the
/// Beta mask are replaced with the training means.
pub(crate) struct Corruptor {
    means: Vec<f64>,
    beta: Option<rand_distr::Beta<f64>>,
}

impl Corruptor {
    pub fn new(means: Vec<f64>, cfg: &TrainConfig) -> Result<Self> {
        let beta = if cfg.input_dropout {
            Some(beta_dist(cfg.dropout_alpha, cfg.dropout_beta)?)
        } else {
            None
        };
        Ok(Self { means, beta })
    }

    pub fn corrupt(&self, row: &[f64], rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        out.clear();
        match &self.beta {
            None => out.extend_from_slice(row),
            Some(dist) => {
                let mask = draw_mask(row.len(), dist, rng);
                out.extend(
                    row.iter()
                        .zip(&self.means)
                        .zip(&mask)
                        .map(|((&v, &m), &keep)| if keep { v } else { m }),
                );
            }
        }
    }
}

/// Shared mini-batch Adam loop with best-score retention and early stopping.
///
/// `loss(i, output)` returns the loss of sample `i` and its derivative with
/// respect to the network's linear output. `score(net)` is evaluated after each
/// epoch; higher is better. An epoch that ties the best score replaces the
/// kept parameters and resets the patience counter.
pub(crate) fn optimize(
    net: &mut DenseNetwork,
    train: &TabularDataset,
    cfg: &TrainConfig,
    epochs: usize,
    corruptor: &Corruptor,
    rng: &mut ChaCha8Rng,
    mut loss: impl FnMut(usize, &[f64]) -> (f64, Vec<f64>),
    mut score: impl FnMut(&DenseNetwork) -> f64,
) -> Result<TrainReport> {
    let mut report = TrainReport {
        best_score: score(net),
        ..TrainReport::default()
    };
    let mut best = net.clone();
    let mut adam = Adam::new(net.layers(), cfg);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut input = Vec::with_capacity(train.dim());
    let mut since_best = 0;

    for epoch in 1..=epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads: Vec<Dense> = net
                .layers()
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect();
            for &i in batch {
                corruptor.corrupt(train.row(i), rng, &mut input);
                let trace = net.trace(&input);
                let (l, d_out) = loss(i, trace.pre.last().unwrap());
                epoch_loss += l;
                net.accumulate_gradients(&input, &trace, &d_out, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                g.weights.iter_mut().for_each(|v| *v *= scale);
                g.biases.iter_mut().for_each(|v| *v *= scale);
            }
            adam.step(net.layers_mut(), &grads);
        }
        let mean_loss = epoch_loss / train.len() as f64;
        if !mean_loss.is_finite() || !net.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("loss became {mean_loss}"),
            });
        }
        let s = score(net);
        report.train_loss.push(mean_loss);
        report.val_score.push(s);
        report.epochs_run = epoch;
        if s >= report.best_score {
            report.best_score = s;
            report.best_epoch = epoch;
            best = net.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience.is_some_and(|p| since_best >= p) {
                log::debug!("early stop at epoch {epoch}");
                break;
            }
        }
    }
    *net = best;
    Ok(report)
}

pub(crate) fn check_training_data(
    train: &TabularDataset,
    val: &TabularDataset,
    schema: &DatasetSchema,
) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    if val.is_empty() {
        return Err(Error::Data("validation split is empty".into()));
    }
    train.check_against(schema)?;
    val.check_against(schema)?;
    Ok(())
}

/// Softmax cross-entropy with max-shifted logits; returns the loss and
/// `softmax(z) - onehot(label)`.
pub(crate) fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let mut g = softmax(logits);
    g[label] -= 1.0;
    (lse - logits[label], g)
}

pub fn accuracy(net: &DenseNetwork, ds: &TabularDataset) -> f64 {
    if ds.is_empty() {
        return 0.0;
    }
    let correct = ds
        .rows()
        .zip(ds.labels())
        .filter(|(r, &l)| argmax(&net.logits_unchecked(r)) == l)
        .count();
    correct as f64 / ds.len() as f64
}

/// Mean per-class recall over the classes present in `ds`.
pub fn balanced_accuracy(net: &DenseNetwork, ds: &TabularDataset) -> f64 {
    let k = net.class_count();
    let mut hits = vec![0usize; k];
    let mut totals = vec![0usize; k];
    for (r, &l) in ds.rows().zip(ds.labels()) {
        totals[l] += 1;
        if argmax(&net.logits_unchecked(r)) == l {
            hits[l] += 1;
        }
    }
    let present: Vec<f64> = hits
        .iter()
        .zip(&totals)
        .filter(|(_, &t)| t > 0)
        .map(|(&h, &t)| h as f64 / t as f64)
        .collect();
    present.iter().sum::<f64>() / present.len().max(1) as f64
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Trains the `[d, hidden.., K]` classifier with softmax cross-entropy under
/// Beta input dropout (dropped inputs take the training mean) and returns
/// the parameters with the best validation accuracy.
pub fn train_mlp(
    train: &TabularDataset,
    val: &TabularDataset,
    schema: &DatasetSchema,
    cfg: &TrainConfig,
) -> Result<DenseNetwork> {
    train_mlp_with_report(train, val, schema, cfg).map(|(net, _)| net)
}

pub fn train_mlp_with_report(
    train: &TabularDataset,
    val: &TabularDataset,
    schema: &DatasetSchema,
    cfg: &TrainConfig,
) -> Result<(DenseNetwork, TrainReport)> {
    cfg.validate()?;
    check_training_data(train, val, schema)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dims = vec![schema.dim()];
    dims.extend(&cfg.hidden);
    dims.push(schema.class_count());
    let mut net = DenseNetwork::glorot(&dims, &mut rng)?;
    let corruptor = Corruptor::new(train.feature_means(), cfg)?;
    let labels = train.labels();
    let report = optimize(
        &mut net,
        train,
        cfg,
        cfg.epochs,
        &corruptor,
        &mut rng,
        |i, out| cross_entropy(out, labels[i]),
        |n| accuracy(n, val),
    )?;
    log::info!(
        "trained {:?} for {} epochs, best val accuracy {:.4} at epoch {}",
        dims,
        report.epochs_run,
        report.best_score,
        report.best_epoch
    );
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureKind, Provenance};

    fn toy() -> (TabularDataset, DatasetSchema) {
        // Label is 1 when the first feature is above one half.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let a = (i % 20) as f64 / 19.0;
            let b = ((i * 7) % 13) as f64 / 12.0;
            rows.push(vec![a, b]);
            labels.push(usize::from(a > 0.5));
        }
        let ds = TabularDataset::from_rows(&rows, labels, Provenance::Scaled).unwrap();
        let schema = DatasetSchema::uniform("f", 2, 1.0, FeatureKind::Real, vec!["a".into(), "b".into()]).unwrap();
        (ds, schema)
    }

    #[test]
    fn cross_entropy_gradient_is_softmax_minus_onehot() {
        let (l, g) = cross_entropy(&[1000.0, 0.0], 0);
        assert!(l.abs() < 1e-12 && l.is_finite());
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
        let (l, g) = cross_entropy(&[0.0, 0.0, 0.0], 2);
        assert!((l - 3f64.ln()).abs() < 1e-12);
        assert!((g[2] + 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let (ds, schema) = toy();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            seed: 11,
            ..TrainConfig::default()
        };
        let net = train_mlp(&ds, &ds, &schema, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let init = DenseNetwork::glorot(&[2, 64, 32, 16, 2], &mut rng).unwrap();
        assert_eq!(net, init);
    }

    #[test]
    fn learns_a_threshold() {
        let (ds, schema) = toy();
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            epochs: 60,
            batch_size: 16,
            input_dropout: false,
            seed: 1,
            ..TrainConfig::default()
        };
        let (net, report) = train_mlp_with_report(&ds, &ds, &schema, &cfg).unwrap();
        assert!(accuracy(&net, &ds) > 0.95, "{report:?}");
        assert!(net.is_finite());
    }

    #[test]
    fn identical_seeds_give_identical_parameters() {
        let (ds, schema) = toy();
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            epochs: 4,
            batch_size: 32,
            seed: 99,
            ..TrainConfig::default()
        };
        let a = train_mlp(&ds, &ds, &schema, &cfg).unwrap();
        let b = train_mlp(&ds, &ds, &schema, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_data_and_bad_config_rejected() {
        let (ds, schema) = toy();
        let empty = ds.subset(&[]);
        assert!(matches!(
            train_mlp(&empty, &ds, &schema, &TrainConfig::default()),
            Err(Error::Data(_))
        ));
        let cfg = TrainConfig {
            dropout_alpha: 0.0,
            ..TrainConfig::default()
        };
        assert!(train_mlp(&ds, &ds, &schema, &cfg).is_err());
        let cfg = TrainConfig {
            learning_rate: f64::NAN,
            ..TrainConfig::default()
        };
        assert!(train_mlp(&ds, &ds, &schema, &cfg).is_err());
    }

    #[test]
    fn divergence_names_the_epoch() {
        let (mut ds, schema) = toy();
        ds.values_mut()[0] = f64::MAX;
        let cfg = TrainConfig {
            learning_rate: 10.0,
            epochs: 5,
            input_dropout: false,
            ..TrainConfig::default()
        };
        match train_mlp(&ds, &ds, &schema, &cfg) {
            Err(Error::Training { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[1.0]), 0);
    }
}
