//! Dataset ingestion and preprocessing.

mod csv;
mod idx;
mod preprocess;
mod schema;
mod split;
mod synth;

pub use self::csv::{load_tabular, parse_tabular, write_tabular};
pub use idx::{load_mnist, mnist_schema, parse_idx_images, parse_idx_labels, IdxImages};
pub use preprocess::{percentile, winsorize_and_scale, FeatureTransform, Preprocessor};
pub use schema::{DatasetSchema, FeatureKind, FeatureSpec};
pub use split::{split, SplitSpec, Splits};
pub use synth::{generate_synthesized, synth_informative_dims};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    /// Values already in `[0, 1]` by construction (e.g. pixel bytes / 255).
    Scaled,
    WinsorizedScaled,
}

/// `N x d` row-major table with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    dim: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
    pub provenance: Provenance,
    /// Per-feature mean of the preprocessed training split.
    pub baseline: Option<Vec<f64>>,
}

impl TabularDataset {
    pub fn new(dim: usize, values: Vec<f64>, labels: Vec<usize>, provenance: Provenance) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("dataset dimension must be positive".into()));
        }
        if values.len() != dim * labels.len() {
            return Err(Error::Data(format!(
                "{} values do not form {} rows of width {dim}",
                values.len(),
                labels.len()
            )));
        }
        Ok(Self {
            dim,
            values,
            labels,
            provenance,
            baseline: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, provenance: Provenance) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.len() != labels.len() {
            return Err(Error::Data("row and label counts differ".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Data("ragged rows".into()));
        }
        Self::new(dim, rows.concat(), labels, provenance)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            dim: self.dim,
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance,
            baseline: self.baseline.clone(),
        }
    }

    /// Per-feature arithmetic mean over all rows.
    pub fn feature_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for r in self.rows() {
            for (s, v) in sums.iter_mut().zip(r) {
                *s += v;
            }
        }
        let n = self.len().max(1) as f64;
        sums.into_iter().map(|s| s / n).collect()
    }

    pub fn check_against(&self, schema: &DatasetSchema) -> Result<()> {
        if self.dim != schema.dim() {
            return Err(Error::Data(format!(
                "dataset has {} features but the schema lists {}",
                self.dim,
                schema.dim()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= schema.class_count()) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {} classes",
                schema.class_count()
            )));
        }
        Ok(())
    }

    /// Count of each label in `0..classes`.
    pub fn class_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for &l in &self.labels {
            if l < classes {
                counts[l] += 1;
            }
        }
        counts
    }
}
