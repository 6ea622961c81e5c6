use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Real,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub cost: f64,
}

/// Feature names, kinds and acquisition costs plus the class labels.
///
/// On disk: `{"features": [{"name", "kind": "real"|"binary", "cost"}], "classes": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub features: Vec<FeatureSpec>,
    pub classes: Vec<String>,
}

impl DatasetSchema {
    pub fn new(features: Vec<FeatureSpec>, classes: Vec<String>) -> Result<Self> {
        let schema = Self { features, classes };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("schema lists no features".into()));
        }
        if self.classes.len() < 2 {
            return Err(Error::Schema(format!(
                "need at least 2 classes, found {}",
                self.classes.len()
            )));
        }
        for (i, f) in self.features.iter().enumerate() {
            if !(f.cost.is_finite() && f.cost > 0.0) {
                return Err(Error::Schema(format!(
                    "feature {i} ({}) has nonpositive cost {}",
                    f.name, f.cost
                )));
            }
            if f.name.is_empty() {
                return Err(Error::Schema(format!("feature {i} has an empty name")));
            }
            if f.name == "label" {
                return Err(Error::Schema("`label` is reserved for the class column".into()));
            }
        }
        let mut names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Schema(format!("duplicate feature name {}", w[0])));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.cost).collect()
    }

    pub fn total_cost(&self) -> f64 {
        self.features.iter().map(|f| f.cost).sum()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.features.iter().map(|f| f.kind).collect()
    }

    /// Same schema with every cost multiplied by `factor`.
    pub fn with_scaled_costs(&self, factor: f64) -> Result<Self> {
        let mut out = self.clone();
        out.features.iter_mut().for_each(|f| f.cost *= factor);
        out.validate()?;
        Ok(out)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let schema: Self = serde_json::from_slice(bytes)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_slice(&bytes).map_err(|e| match e {
            Error::Json(j) => Error::Load {
                path: path.display().to_string(),
                line: j.line(),
                message: j.to_string(),
            },
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    /// Uniform-cost schema with generated feature names.
    pub fn uniform(
        prefix: &str,
        dim: usize,
        cost: f64,
        kind: FeatureKind,
        classes: Vec<String>,
    ) -> Result<Self> {
        let features = (0..dim)
            .map(|i| FeatureSpec {
                name: format!("{prefix}{i}"),
                kind,
                cost,
            })
            .collect();
        Self::new(features, classes)
    }
}
