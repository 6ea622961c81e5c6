use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use featacq::data::DatasetSchema;
use featacq::model::TrainedModel;
use featacq::{Error, Result};

use crate::api::{ModelInfo, SchemaSummary};

/// An immutable model/schema pair shared by every session created from it.
#[derive(Debug, Clone)]
pub struct ModelEntry {
    pub model: Arc<TrainedModel>,
    pub schema: Arc<DatasetSchema>,
    pub summary: SchemaSummary,
}

#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    entries: BTreeMap<String, ModelEntry>,
}

impl ModelRegistry {
    /// Loads every `<dir>/<tag>/{model.json, schema.json}` pair. Directories
    /// without both files are skipped.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut registry = Self::default();
        let listing = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in listing {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            let (model, schema) = (path.join("model.json"), path.join("schema.json"));
            if !(model.is_file() && schema.is_file()) {
                continue;
            }
            let Some(tag) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let schema = DatasetSchema::load(&schema)?;
            let model = TrainedModel::load(&model, &schema)?;
            registry.insert(tag, model, schema)?;
        }
        Ok(registry)
    }

    pub fn insert(&mut self, tag: impl Into<String>, model: TrainedModel, schema: DatasetSchema) -> Result<()> {
        model.check_schema(&schema)?;
        let summary = SchemaSummary::new(&schema, &model.preprocessor);
        self.entries.insert(
            tag.into(),
            ModelEntry {
                model: Arc::new(model),
                schema: Arc::new(schema),
                summary,
            },
        );
        Ok(())
    }

    pub fn get(&self, tag: &str) -> Option<&ModelEntry> {
        self.entries.get(tag)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn list(&self) -> Vec<ModelInfo> {
        self.entries
            .iter()
            .map(|(tag, e)| ModelInfo {
                tag: tag.clone(),
                feature_count: e.schema.dim(),
                classes: e.schema.classes.clone(),
                total_cost: e.schema.total_cost(),
            })
            .collect()
    }
}
