//! Trained classifier bundle and its on-disk format.
//!
//! A model file is a single JSON document:
//!
//! ```json
//! {"format": "featacq-model", "version": 1,
//!  "layer_dims": [d, 64, 32, 16, K],
//!  "weights": [[row-major out x in], ...], "biases": [[...], ...],
//!  "baseline": [per-feature training mean],
//!  "schema_hash": "<sha256 hex>",
//!  "preprocessing": [{"op": "clamp", "lo": .., "hi": ..} | {"op": "pass_through"} | ...],
//!  "split": {...}, "train_config": {...}}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{DatasetSchema, FeatureTransform, Preprocessor, SplitSpec};
use crate::mlp::{Dense, DenseNetwork, TrainConfig};
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "featacq-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: DenseNetwork,
    /// Imputation value for unobserved features (training-split means).
    pub baseline: Vec<f64>,
    pub preprocessor: Preprocessor,
    pub schema_hash: String,
    pub split: Option<SplitSpec>,
    pub train_config: Option<TrainConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    baseline: Vec<f64>,
    schema_hash: String,
    preprocessing: Vec<FeatureTransform>,
    #[serde(default)]
    split: Option<SplitSpec>,
    #[serde(default)]
    train_config: Option<TrainConfig>,
}

impl TrainedModel {
    pub fn new(network: DenseNetwork, baseline: Vec<f64>, preprocessor: Preprocessor, schema: &DatasetSchema) -> Result<Self> {
        let model = Self {
            network,
            baseline,
            preprocessor,
            schema_hash: schema.hash(),
            split: None,
            train_config: None,
        };
        model.validate()?;
        model.check_schema(schema)?;
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn class_count(&self) -> usize {
        self.network.class_count()
    }

    fn validate(&self) -> Result<()> {
        let d = self.network.input_dim();
        if self.baseline.len() != d {
            return Err(Error::Format(format!(
                "baseline has {} entries for {d} inputs",
                self.baseline.len()
            )));
        }
        if self.preprocessor.dim() != d {
            return Err(Error::Format(format!(
                "preprocessing lists {} features for {d} inputs",
                self.preprocessor.dim()
            )));
        }
        if self.baseline.iter().any(|v| !v.is_finite()) || !self.network.is_finite() {
            return Err(Error::Format("model contains non-finite parameters".into()));
        }
        Ok(())
    }

    /// Dimension and class-count agreement with `schema`.
    pub fn check_shape(&self, schema: &DatasetSchema) -> Result<()> {
        if self.input_dim() != schema.dim() || self.class_count() != schema.class_count() {
            return Err(Error::ModelMismatch(format!(
                "model maps {} features to {} classes, schema has {} features and {} classes",
                self.input_dim(),
                self.class_count(),
                schema.dim(),
                schema.class_count()
            )));
        }
        Ok(())
    }

    pub fn check_schema(&self, schema: &DatasetSchema) -> Result<()> {
        self.check_shape(schema)?;
        let hash = schema.hash();
        if hash != self.schema_hash {
            return Err(Error::ModelMismatch(format!(
                "schema hash {hash} does not match the model's {}",
                self.schema_hash
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            layer_dims: self.network.layer_dims().to_vec(),
            weights: self.network.layers().iter().map(|l| l.weights.clone()).collect(),
            biases: self.network.layers().iter().map(|l| l.biases.clone()).collect(),
            baseline: self.baseline.clone(),
            schema_hash: self.schema_hash.clone(),
            preprocessing: self.preprocessor.transforms.clone(),
            split: self.split,
            train_config: self.train_config.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Parses a model document without checking it against a schema.
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let file: ModelFile = serde_json::from_slice(bytes)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Format(format!("not a model file (format {:?})", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        let n = file.layer_dims.len();
        if n < 2 || file.weights.len() != n - 1 || file.biases.len() != n - 1 {
            return Err(Error::Format(format!(
                "{} layer dims with {} weight and {} bias blocks",
                n,
                file.weights.len(),
                file.biases.len()
            )));
        }
        let layers = file
            .weights
            .into_iter()
            .zip(file.biases)
            .enumerate()
            .map(|(l, (weights, biases))| Dense {
                in_dim: file.layer_dims[l],
                out_dim: file.layer_dims[l + 1],
                weights,
                biases,
            })
            .collect();
        let network = DenseNetwork::from_layers(layers).map_err(|e| Error::Format(e.to_string()))?;
        let model = Self {
            network,
            baseline: file.baseline,
            preprocessor: Preprocessor {
                transforms: file.preprocessing,
            },
            schema_hash: file.schema_hash,
            split: file.split,
            train_config: file.train_config,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    /// Loads a model and rejects it unless it was trained against `schema`.
    pub fn load(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Self> {
        let model = Self::load_unchecked(path)?;
        model.check_schema(schema)?;
        Ok(model)
    }

    pub fn load_unchecked(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_slice(&bytes)
    }
}
