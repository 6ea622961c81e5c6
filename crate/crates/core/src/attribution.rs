//! Integrated-gradients attribution, its class-accumulated cost-scaled form,
//! and a single-point gradient comparator.
//!
//! For class `k` and feature `i` with reference `r`, input `x` and `m` steps:
//!
//! ```text
//! IG[k][i] = (x_i - r_i) * (1/m) * sum_{s=1..m} dF_k(r + (s/m)(x - r)) / dx_i
//! ```
//!
//! The accumulated score divides a class aggregate of `IG[.][i]` by the
//! feature's acquisition cost.

use serde::{Deserialize, Serialize};

use crate::mlp::{DenseNetwork, OutputTarget};
use crate::{Error, Result};

/// How per-class attributions are combined into one score per feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassAggregation {
    /// `sum_k |IG[k][i]|`
    #[default]
    SumOfAbs,
    /// `|sum_k IG[k][i]|`. Vanishes for a softmax posterior, since the class
    /// posteriors sum to one everywhere.
    AbsOfSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgConfig {
    /// Riemann steps `m`.
    pub steps: usize,
    /// Path start (reference input).
    pub baseline: Vec<f64>,
    #[serde(default)]
    pub target: OutputTarget,
    #[serde(default)]
    pub aggregation: ClassAggregation,
}

impl IgConfig {
    pub fn new(baseline: Vec<f64>) -> Self {
        Self {
            steps: 50,
            baseline,
            target: OutputTarget::Posterior,
            aggregation: ClassAggregation::SumOfAbs,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Config("integrated gradients needs at least one step".into()));
        }
        if self.baseline.len() != dim {
            return Err(Error::InputShape {
                expected: dim,
                actual: self.baseline.len(),
            });
        }
        if let Some(v) = self.baseline.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!("baseline entry {v} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    /// Non-negative, finite per-feature scores.
    pub scores: Vec<f64>,
    pub step_index: usize,
    pub policy_tag: String,
}

fn check_costs(costs: &[f64], dim: usize) -> Result<()> {
    if costs.len() != dim {
        return Err(Error::Schema(format!(
            "{} costs for {dim} features",
            costs.len()
        )));
    }
    if let Some((i, c)) = costs.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::Schema(format!("feature {i} has nonpositive cost {c}")));
    }
    Ok(())
}

fn check_point(net: &DenseNetwork, x: &[f64]) -> Result<()> {
    if x.len() != net.input_dim() {
        return Err(Error::InputShape {
            expected: net.input_dim(),
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("observation contains non-finite values".into()));
    }
    Ok(())
}

/// All classes at once: a `K x d` row-major matrix of IG attributions.
pub fn integrated_gradients_matrix(net: &DenseNetwork, x: &[f64], cfg: &IgConfig) -> Result<Vec<f64>> {
    check_point(net, x)?;
    cfg.validate(net.input_dim())?;
    let jac = net.mean_path_jacobian(&cfg.baseline, x, cfg.steps, cfg.target)?;
    let d = net.input_dim();
    let mut ig = jac.data;
    for row in ig.chunks_exact_mut(d) {
        for ((v, xi), ri) in row.iter_mut().zip(x).zip(&cfg.baseline) {
            *v *= xi - ri;
        }
    }
    Ok(ig)
}

/// Attribution of every feature to class `class_k`.
pub fn integrated_gradients(net: &DenseNetwork, x: &[f64], cfg: &IgConfig, class_k: usize) -> Result<Vec<f64>> {
    if class_k >= net.class_count() {
        return Err(Error::Argument(format!(
            "class index {class_k} out of range for {} classes",
            net.class_count()
        )));
    }
    let d = net.input_dim();
    let ig = integrated_gradients_matrix(net, x, cfg)?;
    Ok(ig[class_k * d..(class_k + 1) * d].to_vec())
}

/// Accumulated IG: class-aggregated attribution divided by feature cost.
pub fn accumulated_ig(net: &DenseNetwork, x: &[f64], cfg: &IgConfig, costs: &[f64]) -> Result<AttributionVector> {
    check_costs(costs, net.input_dim())?;
    let ig = integrated_gradients_matrix(net, x, cfg)?;
    let d = net.input_dim();
    let scores = (0..d)
        .map(|i| {
            let column = ig.chunks_exact(d).map(|row| row[i]);
            let agg = match cfg.aggregation {
                ClassAggregation::SumOfAbs => column.map(f64::abs).sum::<f64>(),
                ClassAggregation::AbsOfSum => column.sum::<f64>().abs(),
            };
            agg / costs[i]
        })
        .collect();
    Ok(AttributionVector {
        scores,
        step_index: 0,
        policy_tag: "aig".into(),
    })
}

/// Single-point gradient magnitude summed over classes, divided by cost.
pub fn plain_gradient_attribution(
    net: &DenseNetwork,
    x: &[f64],
    costs: &[f64],
    target: OutputTarget,
) -> Result<AttributionVector> {
    check_point(net, x)?;
    check_costs(costs, net.input_dim())?;
    let jac = net.input_jacobian(x, target)?;
    let d = net.input_dim();
    let scores = (0..d)
        .map(|i| (0..jac.rows).map(|k| jac.get(k, i).abs()).sum::<f64>() / costs[i])
        .collect();
    Ok(AttributionVector {
        scores,
        step_index: 0,
        policy_tag: "plain_gradient".into(),
    })
}
