use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DatasetSchema, FeatureKind, FeatureSpec, Provenance, TabularDataset};
use crate::{Error, Result};

/// Shift of the informative class-conditional means (`±SHIFT`, unit variance).
const SHIFT: f64 = 0.5;

/// Number of informative leading dimensions for a synthesized width `d`.
pub const fn synth_informative_dims(d: usize) -> usize {
    d / 2
}

/// Binary task: the first `d/2` dimensions are Gaussian with class-dependent
/// mean `±0.5` and unit variance, the remaining `d/2` are standard normal noise
/// independent of the label. Both halves cost `1, 2, ..., d/2`.
///
/// Values are returned raw; winsorize and scale them with a preprocessor
/// fitted on the training split.
pub fn generate_synthesized(n: usize, d: usize, seed: u64) -> Result<(TabularDataset, DatasetSchema)> {
    if n == 0 {
        return Err(Error::Argument("synthesized dataset needs at least one row".into()));
    }
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "synthesized width must be even and at least 2, got {d}"
        )));
    }
    let half = synth_informative_dims(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y: usize = rng.random_range(0..2);
        let mean = if y == 1 { SHIFT } else { -SHIFT };
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(if j < half { mean + z } else { z });
        }
        labels.push(y);
    }
    let features = (0..d)
        .map(|j| FeatureSpec {
            name: format!("x{j}"),
            kind: FeatureKind::Real,
            cost: ((j % half) + 1) as f64,
        })
        .collect();
    let schema = DatasetSchema::new(features, vec!["0".into(), "1".into()])?;
    let ds = TabularDataset::new(d, values, labels, Provenance::Raw)?;
    Ok((ds, schema))
}
