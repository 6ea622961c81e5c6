#![allow(dead_code)]

use featacq::data::{generate_synthesized, split, DatasetSchema, Preprocessor, SplitSpec, TabularDataset};
use featacq::mlp::{train_mlp, DenseNetwork, TrainConfig};

pub struct Fitted {
    pub net: DenseNetwork,
    pub schema: DatasetSchema,
    pub preprocessor: Preprocessor,
    pub train: TabularDataset,
    pub val: TabularDataset,
    pub test: TabularDataset,
}

/// A small synthesized task trained for a handful of epochs.
pub fn fitted_synth(n: usize, d: usize, epochs: usize, seed: u64) -> Fitted {
    let (raw, schema) = generate_synthesized(n, d, seed).unwrap();
    let parts = split(&raw, &SplitSpec::with_seed(seed)).unwrap();
    let preprocessor = Preprocessor::fit(&parts.train, &schema, 5.0, 95.0).unwrap();
    let train = preprocessor.transform(&parts.train).unwrap();
    let val = preprocessor.transform(&parts.val).unwrap();
    let test = preprocessor.transform(&parts.test).unwrap();
    let cfg = TrainConfig {
        epochs,
        learning_rate: 1e-3,
        seed,
        ..TrainConfig::default()
    };
    let net = train_mlp(&train, &val, &schema, &cfg).unwrap();
    Fitted {
        net,
        schema,
        preprocessor,
        train,
        val,
        test,
    }
}
