//! Sequential acquisition: score unacquired features, pick the best
//! affordable one, observe it, update the posterior, repeat.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{accumulated_ig, plain_gradient_attribution, AttributionVector, ClassAggregation, IgConfig};
use crate::data::DatasetSchema;
use crate::mlp::{argmax, OutputTarget};
use crate::model::TrainedModel;
use crate::{Error, Result};

/// Start of the integration path used for attribution. Unobserved entries of
/// the scored input are always filled with the model's training means.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgReference {
    /// All-zero input.
    #[default]
    Zero,
    /// The imputation vector itself. Every unobserved feature then has zero
    /// displacement and scores zero.
    TrainingMean,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AigOptions {
    pub steps: usize,
    pub reference: IgReference,
    pub target: OutputTarget,
    pub aggregation: ClassAggregation,
}

impl Default for AigOptions {
    fn default() -> Self {
        Self {
            steps: 50,
            reference: IgReference::Zero,
            target: OutputTarget::Posterior,
            aggregation: ClassAggregation::SumOfAbs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Aig(AigOptions),
    PlainGradient,
    Random { seed: u64 },
}

impl Policy {
    pub fn aig() -> Self {
        Policy::Aig(AigOptions::default())
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Policy::Aig(_) => "aig",
            Policy::PlainGradient => "plain_gradient",
            Policy::Random { .. } => "random",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Parses `aig`, `plain_gradient` or `random` (seed 0) with default options.
impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "aig" => Ok(Policy::aig()),
            "plain_gradient" => Ok(Policy::PlainGradient),
            "random" => Ok(Policy::Random { seed: 0 }),
            other => Err(Error::Argument(format!(
                "unknown policy {other:?} (expected aig, plain_gradient or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    BudgetExhausted,
    Complete,
}

impl SessionStatus {
    pub fn stop_reason(self) -> Option<&'static str> {
        match self {
            SessionStatus::Active => None,
            SessionStatus::BudgetExhausted => Some("budget_exhausted"),
            SessionStatus::Complete => Some("complete"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// 1-based step.
    pub step: usize,
    pub feature: usize,
    pub value: f64,
    pub cost: f64,
    pub accumulated_cost: f64,
    /// Policy score of the feature at the time it was chosen. `None` for
    /// the random policy or when no suggestion had been computed.
    pub score: Option<f64>,
    pub posterior: Vec<f64>,
    pub predicted_class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub feature: usize,
    pub score: Option<f64>,
    pub cost: f64,
}

/// One live acquisition over a single row. Mutation is single-writer; wrap
/// it in a lock to share it.
#[derive(Debug, Clone)]
pub struct AcquisitionSession {
    model: Arc<TrainedModel>,
    schema: Arc<DatasetSchema>,
    costs: Vec<f64>,
    policy: Policy,
    ig: Option<IgConfig>,
    rng: Option<ChaCha8Rng>,
    mask: Vec<bool>,
    values: Vec<f64>,
    accumulated_cost: f64,
    budget: Option<f64>,
    initial_posterior: Vec<f64>,
    posterior: Vec<f64>,
    history: Vec<HistoryEntry>,
    status: SessionStatus,
    attribution: Option<AttributionVector>,
}

fn ig_config(model: &TrainedModel, opts: &AigOptions) -> Result<IgConfig> {
    let d = model.input_dim();
    let baseline = match &opts.reference {
        IgReference::Zero => vec![0.0; d],
        IgReference::TrainingMean => model.baseline.clone(),
        IgReference::Custom(r) => r.clone(),
    };
    let cfg = IgConfig {
        steps: opts.steps,
        baseline,
        target: opts.target,
        aggregation: opts.aggregation,
    };
    cfg.validate(d)?;
    Ok(cfg)
}

impl AcquisitionSession {
    pub fn new(
        model: Arc<TrainedModel>,
        schema: Arc<DatasetSchema>,
        policy: Policy,
        budget: Option<f64>,
    ) -> Result<Self> {
        model.check_shape(&schema)?;
        if let Some(b) = budget {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Argument(format!("budget must be a finite nonnegative number, got {b}")));
            }
        }
        let ig = match &policy {
            Policy::Aig(opts) => Some(ig_config(&model, opts)?),
            _ => None,
        };
        let rng = match policy {
            Policy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let values = model.baseline.clone();
        let posterior = model.network.forward(&values)?;
        let d = model.input_dim();
        let mut session = Self {
            costs: schema.costs(),
            model,
            schema,
            policy,
            ig,
            rng,
            mask: vec![false; d],
            values,
            accumulated_cost: 0.0,
            budget,
            initial_posterior: posterior.clone(),
            posterior,
            history: Vec::new(),
            status: SessionStatus::Active,
            attribution: None,
        };
        session.status = session.compute_status();
        Ok(session)
    }

    pub fn model(&self) -> &Arc<TrainedModel> {
        &self.model
    }

    pub fn schema(&self) -> &Arc<DatasetSchema> {
        &self.schema
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Current model input: observed values, training means elsewhere.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn accumulated_cost(&self) -> f64 {
        self.accumulated_cost
    }

    pub fn budget(&self) -> Option<f64> {
        self.budget
    }

    pub fn remaining_budget(&self) -> Option<f64> {
        self.budget.map(|b| b - self.accumulated_cost)
    }

    pub fn initial_posterior(&self) -> &[f64] {
        &self.initial_posterior
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn predicted_class(&self) -> usize {
        argmax(&self.posterior)
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    /// Scores from the most recent `suggest_next` at the current step.
    pub fn attribution(&self) -> Option<&AttributionVector> {
        self.attribution.as_ref()
    }

    fn affordable(&self, feature: usize) -> bool {
        self.budget
            .is_none_or(|b| self.accumulated_cost + self.costs[feature] <= b)
    }

    fn candidates(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mask.len()).filter(|&i| !self.mask[i] && self.affordable(i))
    }

    fn compute_status(&self) -> SessionStatus {
        if self.mask.iter().all(|&m| m) {
            SessionStatus::Complete
        } else if self.candidates().next().is_none() {
            SessionStatus::BudgetExhausted
        } else {
            SessionStatus::Active
        }
    }

    fn require_active(&self) -> Result<()> {
        match self.status {
            SessionStatus::Active => Ok(()),
            s => Err(Error::State(format!(
                "session is {}",
                s.stop_reason().unwrap_or("active")
            ))),
        }
    }

    /// Scores every feature on the current input and returns the best
    /// unacquired affordable one. Ties go to the lowest index.
    pub fn suggest_next(&mut self) -> Result<Suggestion> {
        self.require_active()?;
        let step = self.history.len();
        let attribution = match &self.policy {
            Policy::Aig(_) => {
                let cfg = self.ig.as_ref().expect("aig sessions carry an IG config");
                Some(accumulated_ig(&self.model.network, &self.values, cfg, &self.costs)?)
            }
            Policy::PlainGradient => Some(plain_gradient_attribution(
                &self.model.network,
                &self.values,
                &self.costs,
                OutputTarget::Posterior,
            )?),
            Policy::Random { .. } => None,
        };
        let (feature, score) = match &attribution {
            Some(a) => {
                let mut best: Option<(usize, f64)> = None;
                for i in self.candidates() {
                    let s = a.scores[i];
                    if best.is_none_or(|(_, b)| s > b) {
                        best = Some((i, s));
                    }
                }
                let (i, s) = best.expect("active session has a candidate");
                (i, Some(s))
            }
            None => {
                let pool: Vec<usize> = self.candidates().collect();
                let rng = self.rng.as_mut().expect("random sessions carry an rng");
                (pool[rng.random_range(0..pool.len())], None)
            }
        };
        self.attribution = attribution.map(|mut a| {
            a.step_index = step;
            a
        });
        Ok(Suggestion {
            feature,
            score,
            cost: self.costs[feature],
        })
    }

    /// Observes `feature` with `value` (clamped into `[0, 1]`), which need
    /// not be the suggested feature.
    pub fn acquire(&mut self, feature: usize, value: f64) -> Result<&HistoryEntry> {
        let d = self.mask.len();
        if feature >= d {
            return Err(Error::Argument(format!("feature index {feature} out of range for {d} features")));
        }
        if self.mask[feature] {
            return Err(Error::State(format!("feature {feature} was already acquired")));
        }
        if !self.affordable(feature) {
            return Err(Error::Budget {
                feature,
                cost: self.costs[feature],
                remaining: self.remaining_budget().unwrap_or(f64::INFINITY),
            });
        }
        if !value.is_finite() {
            return Err(Error::Argument(format!("value for feature {feature} is not finite")));
        }
        let clamped = value.clamp(0.0, 1.0);
        if clamped != value {
            log::warn!("value {value} for feature {feature} clamped to {clamped}");
        }
        let score = self.attribution.as_ref().map(|a| a.scores[feature]);
        self.mask[feature] = true;
        self.values[feature] = clamped;
        self.accumulated_cost += self.costs[feature];
        self.posterior = self.model.network.forward(&self.values)?;
        self.attribution = None;
        self.history.push(HistoryEntry {
            step: self.history.len() + 1,
            feature,
            value: clamped,
            cost: self.costs[feature],
            accumulated_cost: self.accumulated_cost,
            score,
            posterior: self.posterior.clone(),
            predicted_class: argmax(&self.posterior),
        });
        self.status = self.compute_status();
        Ok(self.history.last().expect("just pushed"))
    }
}

/// Result of answering every suggestion from a complete row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub label: Option<usize>,
    pub initial_posterior: Vec<f64>,
    pub steps: Vec<HistoryEntry>,
    pub status: SessionStatus,
}

impl Trajectory {
    /// Predicted class after the first `k` acquisitions (or after the last
    /// one when the episode stopped earlier).
    pub fn prediction_after(&self, k: usize) -> usize {
        match k.min(self.steps.len()) {
            0 => argmax(&self.initial_posterior),
            n => self.steps[n - 1].predicted_class,
        }
    }

    /// Predicted class after the last acquisition whose accumulated cost is
    /// at most `budget`.
    pub fn prediction_within(&self, budget: f64) -> usize {
        let n = self.steps.partition_point(|s| s.accumulated_cost <= budget);
        self.prediction_after(n)
    }

    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.feature)
    }

    /// Trajectory as JSON-lines records, step 0 first.
    pub fn records<'a>(&'a self, schema: &'a DatasetSchema) -> impl Iterator<Item = TrajectoryRecord> + 'a {
        let start = TrajectoryRecord {
            step: 0,
            feature: None,
            feature_name: None,
            cost: 0.0,
            accumulated_cost: 0.0,
            score: None,
            posterior: self.initial_posterior.clone(),
            predicted_class: argmax(&self.initial_posterior),
            label: self.label,
        };
        std::iter::once(start).chain(self.steps.iter().map(move |s| TrajectoryRecord {
            step: s.step,
            feature: Some(s.feature),
            feature_name: Some(schema.features[s.feature].name.clone()),
            cost: s.cost,
            accumulated_cost: s.accumulated_cost,
            score: s.score,
            posterior: s.posterior.clone(),
            predicted_class: s.predicted_class,
            label: self.label,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub feature: Option<usize>,
    pub feature_name: Option<String>,
    pub cost: f64,
    pub accumulated_cost: f64,
    pub score: Option<f64>,
    pub posterior: Vec<f64>,
    pub predicted_class: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

impl AcquisitionSession {
    pub fn trajectory(&self, label: Option<usize>) -> Trajectory {
        Trajectory {
            label,
            initial_posterior: self.initial_posterior.clone(),
            steps: self.history.clone(),
            status: self.status,
        }
    }
}

/// Runs suggest/acquire until the session stops, answering each suggestion
/// from `row`.
pub fn run_episode(
    model: Arc<TrainedModel>,
    schema: Arc<DatasetSchema>,
    policy: Policy,
    row: &[f64],
    label: Option<usize>,
    budget: Option<f64>,
) -> Result<Trajectory> {
    if row.len() != schema.dim() {
        return Err(Error::InputShape {
            expected: schema.dim(),
            actual: row.len(),
        });
    }
    let mut session = AcquisitionSession::new(model, schema, policy, budget)?;
    while session.status() == SessionStatus::Active {
        let next = session.suggest_next()?;
        session.acquire(next.feature, row[next.feature])?;
    }
    Ok(session.trajectory(label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureKind, FeatureSpec, Preprocessor};
    use crate::mlp::{Dense, DenseNetwork};

    fn schema(costs: &[f64]) -> DatasetSchema {
        let features = costs
            .iter()
            .enumerate()
            .map(|(i, &cost)| FeatureSpec {
                name: format!("f{i}"),
                kind: FeatureKind::Real,
                cost,
            })
            .collect();
        DatasetSchema::new(features, vec!["a".into(), "b".into()]).unwrap()
    }

    fn linear_model(w: &[f64], costs: &[f64]) -> (Arc<TrainedModel>, Arc<DatasetSchema>) {
        let d = w.len();
        let net = DenseNetwork::from_layers(vec![Dense {
            in_dim: d,
            out_dim: 2,
            weights: w.iter().copied().chain(w.iter().map(|v| -v)).collect(),
            biases: vec![0.0, 0.0],
        }])
        .unwrap();
        let s = schema(costs);
        let m = TrainedModel::new(net, vec![0.5; d], Preprocessor::identity(d), &s).unwrap();
        (Arc::new(m), Arc::new(s))
    }

    #[test]
    fn fresh_session_predicts_from_baseline() {
        let (m, s) = linear_model(&[1.0, -2.0, 0.5], &[1.0, 2.0, 3.0]);
        let sess = AcquisitionSession::new(m.clone(), s, Policy::aig(), None).unwrap();
        assert_eq!(sess.posterior(), m.network.forward(&m.baseline).unwrap().as_slice());
        assert_eq!(sess.status(), SessionStatus::Active);
        assert_eq!(sess.accumulated_cost(), 0.0);
        assert!(sess.history().is_empty());
    }

    #[test]
    fn zero_budget_is_exhausted_immediately() {
        let (m, s) = linear_model(&[1.0, 1.0], &[1.0, 1.0]);
        let mut sess = AcquisitionSession::new(m, s, Policy::aig(), Some(0.0)).unwrap();
        assert_eq!(sess.status(), SessionStatus::BudgetExhausted);
        assert!(matches!(sess.suggest_next(), Err(Error::State(_))));
    }

    #[test]
    fn picks_largest_score_and_breaks_ties_low() {
        // Zero reference, baseline 0.5: attribution is proportional to |w|.
        let (m, s) = linear_model(&[0.1, 3.0, 3.0, 0.2], &[1.0; 4]);
        let mut sess = AcquisitionSession::new(m, s, Policy::aig(), None).unwrap();
        assert_eq!(sess.suggest_next().unwrap().feature, 1);
        sess.acquire(1, 0.5).unwrap();
        assert_eq!(sess.suggest_next().unwrap().feature, 2);

        let (m, s) = linear_model(&[1.0; 4], &[1.0; 4]);
        let mut sess = AcquisitionSession::new(m, s, Policy::PlainGradient, None).unwrap();
        assert_eq!(sess.suggest_next().unwrap().feature, 0);
    }

    #[test]
    fn singleton_candidate_wins_regardless_of_score() {
        let (m, s) = linear_model(&[5.0, 0.0], &[1.0, 1.0]);
        let mut sess = AcquisitionSession::new(m, s, Policy::aig(), None).unwrap();
        sess.acquire(0, 0.9).unwrap();
        let next = sess.suggest_next().unwrap();
        assert_eq!(next.feature, 1);
        assert_eq!(next.score, Some(0.0));
    }

    #[test]
    fn acquisition_errors() {
        let (m, s) = linear_model(&[1.0, 1.0, 1.0], &[2.0, 1.0, 5.0]);
        let mut sess = AcquisitionSession::new(m, s, Policy::aig(), Some(3.0)).unwrap();
        sess.acquire(0, 0.2).unwrap();
        assert!(matches!(sess.acquire(0, 0.2), Err(Error::State(_))));
        match sess.acquire(2, 0.2) {
            Err(Error::Budget { feature: 2, cost, remaining }) => {
                assert_eq!(cost, 5.0);
                assert_eq!(remaining, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(sess.acquire(7, 0.2), Err(Error::Argument(_))));
        assert!(matches!(sess.acquire(1, f64::NAN), Err(Error::Argument(_))));
        sess.acquire(1, 0.2).unwrap();
        assert_eq!(sess.status(), SessionStatus::BudgetExhausted);
        assert_eq!(sess.accumulated_cost(), 3.0);
    }

    #[test]
    fn out_of_range_values_are_clamped() {
        let (m, s) = linear_model(&[1.0, 1.0], &[1.0, 1.0]);
        let mut sess = AcquisitionSession::new(m, s, Policy::aig(), None).unwrap();
        assert_eq!(sess.acquire(0, 1.7).unwrap().value, 1.0);
        assert_eq!(sess.acquire(1, -0.3).unwrap().value, 0.0);
        assert_eq!(sess.status(), SessionStatus::Complete);
    }

    #[test]
    fn budget_boundary_is_inclusive() {
        let (m, s) = linear_model(&[1.0, 1.0], &[0.7, 0.9]);
        let mut sess = AcquisitionSession::new(m.clone(), s.clone(), Policy::aig(), Some(0.7)).unwrap();
        assert_eq!(sess.status(), SessionStatus::Active);
        assert_eq!(sess.suggest_next().unwrap().feature, 0);
        let sess = AcquisitionSession::new(m, s, Policy::aig(), Some(0.7 - 1e-12)).unwrap();
        assert_eq!(sess.status(), SessionStatus::BudgetExhausted);
    }

    #[test]
    fn acquiring_the_baseline_value_keeps_the_posterior() {
        let (m, s) = linear_model(&[1.0, -2.0], &[1.0, 1.0]);
        let mut sess = AcquisitionSession::new(m.clone(), s, Policy::aig(), None).unwrap();
        let before = sess.posterior().to_vec();
        sess.acquire(1, m.baseline[1]).unwrap();
        assert_eq!(sess.posterior(), before.as_slice());
    }

    #[test]
    fn training_mean_reference_scores_unobserved_features_zero() {
        let (m, s) = linear_model(&[1.0, -2.0, 4.0], &[1.0; 3]);
        let policy = Policy::Aig(AigOptions {
            reference: IgReference::TrainingMean,
            ..AigOptions::default()
        });
        let mut sess = AcquisitionSession::new(m, s, policy, None).unwrap();
        let next = sess.suggest_next().unwrap();
        assert_eq!((next.feature, next.score), (0, Some(0.0)));
    }

    #[test]
    fn episode_acquires_every_feature_without_budget() {
        let (m, s) = linear_model(&[0.3, -1.0, 2.0, 0.1, 0.0], &[1.0; 5]);
        let row = [0.1, 0.9, 0.4, 0.0, 1.0];
        for policy in [Policy::aig(), Policy::PlainGradient, Policy::Random { seed: 3 }] {
            let t = run_episode(m.clone(), s.clone(), policy, &row, Some(1), None).unwrap();
            assert_eq!(t.steps.len(), 5);
            let mut order: Vec<usize> = t.order().collect();
            order.sort_unstable();
            assert_eq!(order, vec![0, 1, 2, 3, 4]);
            let full = m.network.forward(&row).unwrap();
            assert_eq!(t.steps.last().unwrap().posterior, full);
            assert_eq!(t.status, SessionStatus::Complete);
        }
    }

    #[test]
    fn random_policy_is_reproducible_per_seed() {
        let (m, s) = linear_model(&[1.0; 8], &[1.0; 8]);
        let row = [0.5; 8];
        let run = |seed| {
            run_episode(m.clone(), s.clone(), Policy::Random { seed }, &row, None, None)
                .unwrap()
                .order()
                .collect::<Vec<_>>()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }

    #[test]
    fn cost_bookkeeping_adds_exactly() {
        let (m, s) = linear_model(&[1.0, 1.0, 1.0], &[22.78, 1.0, 3.5]);
        let mut sess = AcquisitionSession::new(m, s, Policy::aig(), None).unwrap();
        sess.acquire(0, 0.3).unwrap();
        sess.acquire(1, 0.3).unwrap();
        assert_eq!(sess.accumulated_cost(), 23.78);
    }

    #[test]
    fn trajectory_predictions_by_count_and_cost() {
        let (m, s) = linear_model(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]);
        let t = run_episode(m, s.clone(), Policy::aig(), &[0.9, 0.1, 0.9], Some(0), None).unwrap();
        assert_eq!(t.prediction_after(0), argmax(&t.initial_posterior));
        assert_eq!(t.prediction_after(99), t.steps[2].predicted_class);
        assert_eq!(t.prediction_within(0.0), t.prediction_after(0));
        assert_eq!(t.prediction_within(1e9), t.prediction_after(3));
        let records: Vec<_> = t.records(&s).collect();
        assert_eq!(records.len(), 4);
        assert_eq!(records[1].feature_name.as_deref(), Some(s.features[records[1].feature.unwrap()].name.as_str()));
    }

    #[test]
    fn rejects_mismatched_schema_and_bad_budget() {
        let (m, _) = linear_model(&[1.0, 1.0], &[1.0, 1.0]);
        let wide = Arc::new(schema(&[1.0; 3]));
        assert!(matches!(
            AcquisitionSession::new(m.clone(), wide, Policy::aig(), None),
            Err(Error::ModelMismatch(_))
        ));
        let s = Arc::new(schema(&[1.0; 2]));
        assert!(AcquisitionSession::new(m, s, Policy::aig(), Some(-1.0)).is_err());
    }

    #[test]
    fn policy_names_parse() {
        for name in ["aig", "plain_gradient", "random"] {
            assert_eq!(name.parse::<Policy>().unwrap().tag(), name);
        }
        assert!("greedy".parse::<Policy>().is_err());
    }
}
