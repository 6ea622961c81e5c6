use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TabularDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub val_fraction_of_train: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.15,
            val_fraction_of_train: 0.15,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("test_fraction", self.test_fraction),
            ("val_fraction_of_train", self.val_fraction_of_train),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Split(format!("{name} must lie in (0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: TabularDataset,
    pub val: TabularDataset,
    pub test: TabularDataset,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Stratified train/val/test split. Per class, `round(n_c * test_fraction)`
/// rows go to test and `round(rest * val_fraction_of_train)` of the rest to
/// validation. Index lists are returned in ascending order.
pub fn split(ds: &TabularDataset, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    if ds.len() < 20 {
        return Err(Error::Split(format!(
            "need at least 20 rows to split, found {}",
            ds.len()
        )));
    }
    let classes = ds.labels().iter().copied().max().unwrap_or(0) + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in ds.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some((c, members)) = by_class
        .iter()
        .enumerate()
        .find(|(_, m)| !m.is_empty() && m.len() < 3)
    {
        return Err(Error::Split(format!(
            "class {c} has only {} samples; stratification needs at least 3",
            members.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let n = members.len();
        let n_test = (n as f64 * spec.test_fraction).round() as usize;
        let rest = n - n_test;
        let n_val = (rest as f64 * spec.val_fraction_of_train).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        val.extend_from_slice(&members[n_test..n_test + n_val]);
        train.extend_from_slice(&members[n_test + n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Splits {
        train: ds.subset(&train),
        val: ds.subset(&val),
        test: ds.subset(&test),
        train_indices: train,
        val_indices: val,
        test_indices: test,
    })
}
