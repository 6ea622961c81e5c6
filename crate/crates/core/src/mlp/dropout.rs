use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::{Error, Result};

/// Draws a drop rate `p ~ Beta(alpha, beta)` once, then drops each of the `d`
/// features independently with probability `p`.
///
/// Returned entries are `true` for kept (observed) features and `false` for
/// dropped ones.
pub fn sample_dropout_mask<R: Rng + ?Sized>(d: usize, alpha: f64, beta: f64, rng: &mut R) -> Result<Vec<bool>> {
    let dist = beta_dist(alpha, beta)?;
    if d == 0 {
        return Err(Error::Argument("mask length must be at least 1".into()));
    }
    Ok(draw_mask(d, &dist, rng))
}

pub(crate) fn beta_dist(alpha: f64, beta: f64) -> Result<Beta<f64>> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::Argument(format!(
            "Beta parameters must be positive, got alpha={alpha}, beta={beta}"
        )));
    }
    Beta::new(alpha, beta).map_err(|e| Error::Argument(format!("Beta({alpha}, {beta}): {e}")))
}

pub(crate) fn draw_mask<R: Rng + ?Sized>(d: usize, dist: &Beta<f64>, rng: &mut R) -> Vec<bool> {
    let p = dist.sample(rng);
    (0..d).map(|_| rng.random::<f64>() >= p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_under_seed() {
        let a = sample_dropout_mask(64, 1.5, 1.5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_dropout_mask(64, 1.5, 1.5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_dropout_mask(4, 0.0, 1.5, &mut rng).is_err());
        assert!(sample_dropout_mask(4, 1.5, -1.0, &mut rng).is_err());
        assert!(sample_dropout_mask(4, f64::NAN, 1.0, &mut rng).is_err());
        assert!(sample_dropout_mask(0, 1.5, 1.5, &mut rng).is_err());
    }
}
