use serde::{Deserialize, Serialize};

use super::{DatasetSchema, FeatureKind, Provenance, TabularDataset};
use crate::{Error, Result};

/// Percentile by linear interpolation between order statistics
/// (position `pct/100 * (n-1)` in the sorted sample).
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FeatureTransform {
    /// Value used unchanged (binary features, pre-scaled data).
    PassThrough,
    /// Zero-range feature; every value maps to 0.
    Constant { value: f64 },
    /// Clamp to `[lo, hi]` then map linearly onto `[0, 1]`.
    Clamp { lo: f64, hi: f64 },
}

impl FeatureTransform {
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            FeatureTransform::PassThrough => v,
            FeatureTransform::Constant { .. } => 0.0,
            FeatureTransform::Clamp { lo, hi } => (v.clamp(lo, hi) - lo) / (hi - lo),
        }
    }

    /// Raw-unit value for a preprocessed `u` in `[0, 1]`.
    pub fn invert(&self, u: f64) -> f64 {
        match *self {
            FeatureTransform::PassThrough => u,
            FeatureTransform::Constant { value } => value,
            FeatureTransform::Clamp { lo, hi } => lo + u * (hi - lo),
        }
    }
}

/// Per-feature winsorize-and-scale transform fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub transforms: Vec<FeatureTransform>,
}

impl Preprocessor {
    pub fn identity(dim: usize) -> Self {
        Self {
            transforms: vec![FeatureTransform::PassThrough; dim],
        }
    }

    /// Fits percentile bounds on `train` for every real-valued feature;
    /// binary features pass through.
    pub fn fit(train: &TabularDataset, schema: &DatasetSchema, lower_pct: f64, upper_pct: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&lower_pct)
            || !(0.0..=100.0).contains(&upper_pct)
            || lower_pct > upper_pct
        {
            return Err(Error::Argument(format!(
                "invalid percentile bounds [{lower_pct}, {upper_pct}]"
            )));
        }
        if train.is_empty() {
            return Err(Error::Data("cannot fit preprocessing on an empty split".into()));
        }
        if train.dim() != schema.dim() {
            return Err(Error::Data("dataset/schema width mismatch".into()));
        }
        let mut column = Vec::with_capacity(train.len());
        let transforms = schema
            .features
            .iter()
            .enumerate()
            .map(|(j, f)| match f.kind {
                FeatureKind::Binary => FeatureTransform::PassThrough,
                FeatureKind::Real => {
                    column.clear();
                    column.extend(train.column(j));
                    column.sort_by(f64::total_cmp);
                    let lo = percentile(&column, lower_pct);
                    let hi = percentile(&column, upper_pct);
                    if hi > lo {
                        FeatureTransform::Clamp { lo, hi }
                    } else {
                        FeatureTransform::Constant { value: lo }
                    }
                }
            })
            .collect();
        Ok(Self { transforms })
    }

    pub fn dim(&self) -> usize {
        self.transforms.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.transforms).map(|(&v, t)| t.apply(v)).collect()
    }

    pub fn transform(&self, ds: &TabularDataset) -> Result<TabularDataset> {
        if ds.dim() != self.dim() {
            return Err(Error::InputShape {
                expected: self.dim(),
                actual: ds.dim(),
            });
        }
        let mut out = ds.clone();
        let d = self.dim();
        for row in out.values_mut().chunks_exact_mut(d) {
            for (v, t) in row.iter_mut().zip(&self.transforms) {
                *v = t.apply(*v);
            }
        }
        if self.transforms.iter().any(|t| !matches!(t, FeatureTransform::PassThrough)) {
            out.provenance = Provenance::WinsorizedScaled;
        }
        Ok(out)
    }

    /// The same transform expressed in output units: clamp bounds become
    /// `[0, 1]`. Applying it to already-transformed data is the identity.
    pub fn rescaled(&self) -> Self {
        let transforms = self
            .transforms
            .iter()
            .map(|t| match t {
                FeatureTransform::PassThrough => FeatureTransform::PassThrough,
                FeatureTransform::Constant { .. } => FeatureTransform::Constant { value: 0.0 },
                FeatureTransform::Clamp { .. } => FeatureTransform::Clamp { lo: 0.0, hi: 1.0 },
            })
            .collect();
        Self { transforms }
    }
}

/// Fits bounds on `ds` itself and applies them. Use [`Preprocessor::fit`] on
/// the training split when val/test rows must share the bounds.
pub fn winsorize_and_scale(
    ds: &TabularDataset,
    schema: &DatasetSchema,
    lower_pct: f64,
    upper_pct: f64,
) -> Result<TabularDataset> {
    Preprocessor::fit(ds, schema, lower_pct, upper_pct)?.transform(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;

    fn schema(kinds: &[FeatureKind]) -> DatasetSchema {
        DatasetSchema::new(
            kinds
                .iter()
                .enumerate()
                .map(|(i, &kind)| FeatureSpec {
                    name: format!("f{i}"),
                    kind,
                    cost: 1.0,
                })
                .collect(),
            vec!["0".into(), "1".into()],
        )
        .unwrap()
    }

    fn column(values: &[f64]) -> TabularDataset {
        TabularDataset::new(1, values.to_vec(), vec![0; values.len()], Provenance::Raw).unwrap()
    }

    /// Sort-based oracle: for 0..=100 the order statistic at position
    /// 0.05 * 100 = 5 is exactly 5, and at 95 it is 95.
    #[test]
    fn equally_spaced_column_clamps_at_5_and_95() {
        let values: Vec<f64> = (0..=100).map(f64::from).collect();
        let ds = column(&values);
        let s = schema(&[FeatureKind::Real]);
        let p = Preprocessor::fit(&ds, &s, 5.0, 95.0).unwrap();
        assert_eq!(p.transforms[0], FeatureTransform::Clamp { lo: 5.0, hi: 95.0 });
        let out = p.transform(&ds).unwrap();
        let col: Vec<f64> = out.column(0).collect();
        assert_eq!(col[0], 0.0);
        assert_eq!(col[5], 0.0);
        assert_eq!(col[95], 1.0);
        assert_eq!(col[100], 1.0);
        assert!((col[50] - 0.5).abs() < 1e-15);
        assert_eq!(out.provenance, Provenance::WinsorizedScaled);
    }

    #[test]
    fn interpolates_between_order_statistics() {
        // 10 values: position 0.05 * 9 = 0.45 -> 0 + 0.45 * (10 - 0)
        let sorted: Vec<f64> = (0..10).map(|i| f64::from(i) * 10.0).collect();
        assert!((percentile(&sorted, 5.0) - 4.5).abs() < 1e-12);
        assert!((percentile(&sorted, 95.0) - 85.5).abs() < 1e-12);
        assert_eq!(percentile(&[3.0], 50.0), 3.0);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let ds = column(&[7.0; 12]);
        let out = winsorize_and_scale(&ds, &schema(&[FeatureKind::Real]), 5.0, 95.0).unwrap();
        assert!(out.column(0).all(|v| v == 0.0));
    }

    #[test]
    fn binary_column_passes_through() {
        let ds = column(&[0.0, 1.0, 1.0, 0.0, 1.0]);
        let out = winsorize_and_scale(&ds, &schema(&[FeatureKind::Binary]), 5.0, 95.0).unwrap();
        assert_eq!(out.values(), ds.values());
    }

    #[test]
    fn bounds_come_from_fitting_split_only() {
        let train = column(&(0..=100).map(f64::from).collect::<Vec<_>>());
        let s = schema(&[FeatureKind::Real]);
        let p = Preprocessor::fit(&train, &s, 5.0, 95.0).unwrap();
        let test = column(&[-1000.0, 50.0, 1e6]);
        let out = p.transform(&test).unwrap();
        assert_eq!(out.values(), &[0.0, 0.5, 1.0]);
        // Perturbing held-out rows cannot move the fitted bounds.
        let p2 = Preprocessor::fit(&train, &s, 5.0, 95.0).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn rejects_bad_percentiles() {
        let ds = column(&[1.0, 2.0]);
        let s = schema(&[FeatureKind::Real]);
        assert!(Preprocessor::fit(&ds, &s, 95.0, 5.0).is_err());
        assert!(Preprocessor::fit(&ds, &s, -1.0, 5.0).is_err());
    }

    #[test]
    fn invert_recovers_clamped_value() {
        let t = FeatureTransform::Clamp { lo: 2.0, hi: 6.0 };
        assert_eq!(t.invert(t.apply(3.0)), 3.0);
        assert_eq!(t.invert(t.apply(100.0)), 6.0);
    }
}
