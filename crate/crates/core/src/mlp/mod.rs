//! Dense classifier engine: forward pass, exact input derivatives, Adam
//! training under Beta input dropout, and the autoencoder variant.

mod dae;
mod dropout;
mod network;
mod train;

pub use dae::{reconstruction_error, train_dae_predictor, DaeNetwork, DaeReport, DaeSchedule};
pub use dropout::sample_dropout_mask;
pub use network::{softmax, Dense, DenseNetwork, Jacobian, OutputTarget};
pub use train::{
    accuracy, argmax, balanced_accuracy, train_mlp, train_mlp_with_report, TrainConfig, TrainReport,
};
