use std::collections::BTreeSet;
use std::sync::Arc;

use featacq::acquisition::{run_episode, AcquisitionSession, Policy, SessionStatus};
use featacq::data::{DatasetSchema, FeatureKind, FeatureSpec, Preprocessor};
use featacq::mlp::DenseNetwork;
use featacq::model::TrainedModel;
use featacq::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    model: Arc<TrainedModel>,
    schema: Arc<DatasetSchema>,
    row: Vec<f64>,
    policy: Policy,
    budget: Option<f64>,
}

fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..7);
    let k = rng.random_range(2..4);
    // Costs from a small set so equal costs and exact budget sums occur.
    let features = (0..d)
        .map(|i| FeatureSpec {
            name: format!("f{i}"),
            kind: FeatureKind::Real,
            cost: [0.5, 1.0, 1.0, 2.5, 22.78][rng.random_range(0..5)],
        })
        .collect();
    let schema = DatasetSchema::new(features, (0..k).map(|c| c.to_string()).collect()).unwrap();
    let net = DenseNetwork::glorot(&[d, 5, 4, k], &mut rng).unwrap();
    let baseline: Vec<f64> = (0..d).map(|_| rng.random()).collect();
    let model = TrainedModel::new(net, baseline, Preprocessor::identity(d), &schema).unwrap();
    let row = (0..d).map(|_| rng.random()).collect();
    let policy = match rng.random_range(0..3) {
        0 => Policy::aig(),
        1 => Policy::PlainGradient,
        _ => Policy::Random { seed: rng.random() },
    };
    let budget = rng
        .random_bool(0.5)
        .then(|| schema.total_cost() * rng.random_range(0.0..1.2));
    Case {
        model: Arc::new(model),
        schema: Arc::new(schema),
        row,
        policy,
        budget,
    }
}

fn episode(c: &Case) -> featacq::acquisition::Trajectory {
    run_episode(c.model.clone(), c.schema.clone(), c.policy.clone(), &c.row, None, c.budget).unwrap()
}

#[test]
fn ten_thousand_episodes_never_repeat_a_feature() {
    for seed in 0..10_000 {
        let c = random_case(seed);
        let t = episode(&c);
        let order: Vec<usize> = t.order().collect();
        let distinct: BTreeSet<usize> = order.iter().copied().collect();
        assert_eq!(distinct.len(), order.len(), "seed {seed}: {order:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cost_rises_strictly_and_respects_the_budget(seed in any::<u64>()) {
        let c = random_case(seed);
        let t = episode(&c);
        let mut last = 0.0;
        let mut sum = 0.0;
        for s in &t.steps {
            prop_assert!(s.accumulated_cost > last);
            sum += c.schema.features[s.feature].cost;
            prop_assert_eq!(s.accumulated_cost, sum);
            if let Some(b) = c.budget {
                prop_assert!(s.accumulated_cost <= b);
            }
            last = s.accumulated_cost;
        }
    }

    #[test]
    fn unbudgeted_episodes_acquire_every_feature(seed in any::<u64>()) {
        let c = Case { budget: None, ..random_case(seed) };
        let t = episode(&c);
        let mut order: Vec<usize> = t.order().collect();
        order.sort_unstable();
        prop_assert_eq!(order, (0..c.schema.dim()).collect::<Vec<_>>());
        prop_assert_eq!(t.status, SessionStatus::Complete);
        let full = c.model.network.forward(&c.row).unwrap();
        prop_assert_eq!(&t.steps.last().unwrap().posterior, &full);
    }

    #[test]
    fn stopping_status_matches_affordability(seed in any::<u64>()) {
        let c = random_case(seed);
        let t = episode(&c);
        let taken: BTreeSet<usize> = t.order().collect();
        let spent = t.steps.last().map_or(0.0, |s| s.accumulated_cost);
        let affordable = (0..c.schema.dim())
            .filter(|i| !taken.contains(i))
            .any(|i| spent + c.schema.features[i].cost <= c.budget.unwrap_or(f64::INFINITY));
        prop_assert!(!affordable);
        let expected = if taken.len() == c.schema.dim() { SessionStatus::Complete } else { SessionStatus::BudgetExhausted };
        prop_assert_eq!(t.status, expected);
    }

    #[test]
    fn replaying_a_history_under_another_policy_reproduces_it(seed in any::<u64>()) {
        let c = random_case(seed);
        let t = episode(&c);
        let mut replay = AcquisitionSession::new(c.model.clone(), c.schema.clone(), Policy::Random { seed: 1 }, c.budget).unwrap();
        prop_assert_eq!(replay.initial_posterior(), t.initial_posterior.as_slice());
        for s in &t.steps {
            let e = replay.acquire(s.feature, c.row[s.feature]).unwrap();
            prop_assert_eq!(&e.posterior, &s.posterior);
            prop_assert_eq!(e.accumulated_cost, s.accumulated_cost);
            prop_assert_eq!(e.predicted_class, s.predicted_class);
        }
        prop_assert_eq!(replay.status(), t.status);
    }

    #[test]
    fn budget_equal_to_the_cheapest_cost_admits_it(seed in any::<u64>()) {
        let c = random_case(seed);
        let cheapest = c.schema.costs().into_iter().fold(f64::INFINITY, f64::min);
        let exact = AcquisitionSession::new(c.model.clone(), c.schema.clone(), c.policy.clone(), Some(cheapest)).unwrap();
        prop_assert_eq!(exact.status(), SessionStatus::Active);
        let below = cheapest - cheapest * f64::EPSILON;
        let short = AcquisitionSession::new(c.model.clone(), c.schema.clone(), c.policy.clone(), Some(below)).unwrap();
        prop_assert_eq!(short.status(), SessionStatus::BudgetExhausted);
        let mut exact = exact;
        let s = exact.suggest_next().unwrap();
        prop_assert_eq!(s.cost, cheapest);
        exact.acquire(s.feature, c.row[s.feature]).unwrap();
    }

    #[test]
    fn identical_inputs_give_identical_trajectories(seed in any::<u64>()) {
        let c = random_case(seed);
        prop_assert_eq!(episode(&c), episode(&c));
    }
}

#[test]
fn unaffordable_and_repeated_acquisitions_are_rejected() {
    let c = Case {
        budget: None,
        ..random_case(3)
    };
    let d = c.schema.dim();
    let total = c.schema.total_cost();
    let mut s = AcquisitionSession::new(c.model.clone(), c.schema.clone(), Policy::PlainGradient, Some(total)).unwrap();
    s.acquire(0, 0.5).unwrap();
    assert!(matches!(s.acquire(0, 0.5), Err(Error::State(_))));
    let mut tight = AcquisitionSession::new(c.model, c.schema.clone(), Policy::PlainGradient, Some(0.25)).unwrap();
    assert_eq!(tight.status(), SessionStatus::BudgetExhausted);
    assert!(tight.suggest_next().is_err());
    let err = tight.acquire(d - 1, 0.5).unwrap_err();
    assert!(matches!(err, Error::Budget { .. } | Error::State(_)), "{err}");
}
