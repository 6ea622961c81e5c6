//! Batch evaluation of acquisition policies: accuracy against feature count
//! and against accumulated cost, acquisition-order heatmaps, and report
//! files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{run_episode, AigOptions, IgReference, Policy, Trajectory};
use crate::data::{
    generate_synthesized, load_mnist, load_tabular, split, DatasetSchema, Preprocessor, SplitSpec, TabularDataset,
};
use crate::mlp::{accuracy, argmax, train_dae_predictor, train_mlp_with_report, DaeSchedule, TrainConfig};
use crate::model::TrainedModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x_value: f64,
    pub accuracy: f64,
    pub n_samples: usize,
}

fn labels_of(trajectories: &[Trajectory]) -> Result<Vec<usize>> {
    if trajectories.is_empty() {
        return Err(Error::Curve("no trajectories".into()));
    }
    trajectories
        .iter()
        .enumerate()
        .map(|(i, t)| {
            t.label
                .ok_or_else(|| Error::Curve(format!("trajectory {i} has no label")))
        })
        .collect()
}

fn accuracy_of(trajectories: &[Trajectory], labels: &[usize], predict: impl Fn(&Trajectory) -> usize) -> f64 {
    let correct = trajectories
        .iter()
        .zip(labels)
        .filter(|(t, &l)| predict(t) == l)
        .count();
    correct as f64 / trajectories.len() as f64
}

/// Accuracy after exactly `k` acquisitions for `k = 0..=dim`. Rows whose
/// episode stopped early under a budget keep their last prediction.
pub fn build_count_curve(trajectories: &[Trajectory], dim: usize, budgeted: bool) -> Result<Vec<CurvePoint>> {
    let labels = labels_of(trajectories)?;
    if !budgeted {
        if let Some((i, t)) = trajectories.iter().enumerate().find(|(_, t)| t.steps.len() != dim) {
            return Err(Error::Curve(format!(
                "trajectory {i} has {} steps but the run had no budget and {dim} features",
                t.steps.len()
            )));
        }
    }
    Ok((0..=dim)
        .map(|k| CurvePoint {
            x_value: k as f64,
            accuracy: accuracy_of(trajectories, &labels, |t| t.prediction_after(k)),
            n_samples: trajectories.len(),
        })
        .collect())
}

/// Sorted distinct accumulated costs across all trajectories, starting at 0.
pub fn cost_grid(trajectories: &[Trajectory]) -> Vec<f64> {
    let mut grid: Vec<f64> = std::iter::once(0.0)
        .chain(trajectories.iter().flat_map(|t| t.steps.iter().map(|s| s.accumulated_cost)))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Accuracy at each grid cost `B`, predicting from the posterior after the
/// last acquisition whose accumulated cost is at most `B`.
pub fn build_cost_curve(trajectories: &[Trajectory], grid: &[f64]) -> Result<Vec<CurvePoint>> {
    let labels = labels_of(trajectories)?;
    check_sorted(grid.iter().copied())?;
    Ok(grid
        .iter()
        .map(|&b| CurvePoint {
            x_value: b,
            accuracy: accuracy_of(trajectories, &labels, |t| t.prediction_within(b)),
            n_samples: trajectories.len(),
        })
        .collect())
}

fn check_sorted(xs: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for x in xs {
        if !x.is_finite() || x < prev {
            return Err(Error::Argument(format!("curve grid is not sorted ascending at {x}")));
        }
        prev = x;
    }
    Ok(())
}

/// Area under the cost curve read as a step function (each accuracy holds
/// until the next grid point, the last one until `total_cost`), divided by
/// `total_cost`.
pub fn normalized_cost_auc(curve: &[CurvePoint], total_cost: f64) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Curve("empty curve".into()));
    }
    if !(total_cost.is_finite() && total_cost > 0.0) {
        return Err(Error::Argument(format!("total cost must be positive, got {total_cost}")));
    }
    check_sorted(curve.iter().map(|p| p.x_value))?;
    let mut area = curve[0].accuracy * curve[0].x_value.clamp(0.0, total_cost);
    for (i, p) in curve.iter().enumerate() {
        let start = p.x_value.clamp(0.0, total_cost);
        let end = curve.get(i + 1).map_or(total_cost, |q| q.x_value.clamp(0.0, total_cost));
        area += p.accuracy * (end - start);
    }
    Ok((area / total_cost).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapMatrix {
    pub feature_names: Vec<String>,
    pub sample_indices: Vec<usize>,
    /// `ranks[r][i]` is the 1-based step at which sample `r` acquired
    /// feature `i`, or 0 if it never did.
    pub ranks: Vec<Vec<u32>>,
}

pub fn build_heatmap(trajectories: &[Trajectory], sample_indices: &[usize], schema: &DatasetSchema) -> Result<HeatmapMatrix> {
    let ranks = sample_indices
        .iter()
        .map(|&r| {
            let t = trajectories.get(r).ok_or_else(|| {
                Error::Argument(format!("sample {r} out of range for {} trajectories", trajectories.len()))
            })?;
            let mut row = vec![0u32; schema.dim()];
            for (rank, f) in t.order().enumerate() {
                row[f] = rank as u32 + 1;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(HeatmapMatrix {
        feature_names: schema.features.iter().map(|f| f.name.clone()).collect(),
        sample_indices: sample_indices.to_vec(),
        ranks,
    })
}

impl HeatmapMatrix {
    /// Mean rank of each feature over samples, counting "never" as `dim + 1`.
    pub fn mean_ranks(&self) -> Vec<f64> {
        let d = self.feature_names.len();
        let n = self.ranks.len().max(1) as f64;
        (0..d)
            .map(|i| {
                self.ranks
                    .iter()
                    .map(|row| if row[i] == 0 { (d + 1) as f64 } else { f64::from(row[i]) })
                    .sum::<f64>()
                    / n
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// Raw CSV plus schema; winsorized and scaled with bounds fitted on the
    /// training split.
    Csv { data: PathBuf, schema: PathBuf },
    /// IDX image/label pair, pixels scaled by 1/255.
    Idx { images: PathBuf, labels: PathBuf },
    /// Generated binary task, preprocessed like a CSV.
    Synth { n: usize, d: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backbone {
    #[default]
    Mlp,
    Dae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub dataset: DatasetSource,
    pub policies: Vec<String>,
    pub seeds: Vec<u64>,
    pub budget: Option<f64>,
    /// Riemann steps for the attribution integral.
    pub steps: usize,
    pub ig_reference: IgReference,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub backbone: Backbone,
    /// Evaluate a saved model instead of training one per seed.
    pub model: Option<PathBuf>,
    /// Cap on evaluated test rows; a seeded subsample is drawn when the test
    /// split is larger.
    pub max_test_rows: Option<usize>,
    pub heatmap_samples: usize,
    pub winsor_percentiles: (f64, f64),
    pub out_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synth {
                n: 16_000,
                d: 64,
                seed: 0,
            },
            policies: vec!["aig".into(), "random".into(), "plain_gradient".into()],
            seeds: vec![0],
            budget: None,
            steps: 50,
            ig_reference: IgReference::Zero,
            split: SplitSpec::default(),
            train: TrainConfig::default(),
            backbone: Backbone::Mlp,
            model: None,
            max_test_rows: None,
            heatmap_samples: 10,
            winsor_percentiles: (5.0, 95.0),
            out_dir: None,
        }
    }
}

impl BenchConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_slice(&bytes)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::Config("no policies selected".into()));
        }
        for p in &self.policies {
            p.parse::<Policy>().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds selected".into()));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be positive".into()));
        }
        if let Some(b) = self.budget {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Config(format!("budget must be finite and nonnegative, got {b}")));
            }
        }
        if self.max_test_rows == Some(0) {
            return Err(Error::Config("max_test_rows must be positive".into()));
        }
        self.train.validate()
    }

    fn policy(&self, name: &str, seed: u64) -> Result<Policy> {
        Ok(match name.parse::<Policy>()? {
            Policy::Aig(_) => Policy::Aig(AigOptions {
                steps: self.steps,
                reference: self.ig_reference.clone(),
                ..AigOptions::default()
            }),
            Policy::Random { .. } => Policy::Random { seed },
            p => p,
        })
    }
}

/// Raw rows and schema for a configured source.
pub fn load_source(source: &DatasetSource) -> Result<(TabularDataset, DatasetSchema)> {
    match source {
        DatasetSource::Csv { data, schema } => load_tabular(data, schema),
        DatasetSource::Idx { images, labels } => load_mnist(images, labels),
        DatasetSource::Synth { n, d, seed } => generate_synthesized(*n, *d, *seed),
    }
}

/// Model plus the preprocessed test rows it is evaluated on.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: Arc<TrainedModel>,
    pub schema: Arc<DatasetSchema>,
    pub test: TabularDataset,
    pub test_indices: Vec<usize>,
    pub train_rows: usize,
    pub val_rows: usize,
    pub val_accuracy: Option<f64>,
    pub epochs_run: Option<usize>,
}

/// Splits, fits preprocessing on the training rows, and trains a classifier
/// (or loads `cfg.model`). The returned test rows are preprocessed.
pub fn prepare(cfg: &BenchConfig, raw: &TabularDataset, schema: DatasetSchema, seed: u64) -> Result<Prepared> {
    let schema = Arc::new(schema);
    if let Some(path) = &cfg.model {
        let model = TrainedModel::load(path, &schema)?;
        let spec = model.split.unwrap_or(SplitSpec { seed, ..cfg.split });
        let parts = split(raw, &spec)?;
        let test = model.preprocessor.transform(&parts.test)?;
        return Ok(Prepared {
            model: Arc::new(model),
            schema,
            test,
            test_indices: parts.test_indices,
            train_rows: parts.train.len(),
            val_rows: parts.val.len(),
            val_accuracy: None,
            epochs_run: None,
        });
    }
    let spec = SplitSpec { seed, ..cfg.split };
    let parts = split(raw, &spec)?;
    let pre = match cfg.dataset {
        DatasetSource::Idx { .. } => Preprocessor::identity(schema.dim()),
        _ => Preprocessor::fit(&parts.train, &schema, cfg.winsor_percentiles.0, cfg.winsor_percentiles.1)?,
    };
    let train = pre.transform(&parts.train)?;
    let val = pre.transform(&parts.val)?;
    let test = pre.transform(&parts.test)?;
    let tcfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let (network, val_accuracy, epochs_run) = match cfg.backbone {
        Backbone::Mlp => {
            let (net, report) = train_mlp_with_report(&train, &val, &schema, &tcfg)?;
            (net, report.best_score, report.epochs_run)
        }
        Backbone::Dae => {
            let schedule = DaeSchedule {
                reconstruction_epochs: tcfg.epochs,
                finetune_epochs: tcfg.epochs,
                ..DaeSchedule::default()
            };
            let (dae, report) = train_dae_predictor(&train, &val, &schema, &tcfg, &schedule)?;
            (
                dae.classifier(),
                report.finetune.best_score,
                report.reconstruction.epochs_run + report.finetune.epochs_run,
            )
        }
    };
    let mut model = TrainedModel::new(network, train.feature_means(), pre, &schema)?;
    model.split = Some(spec);
    model.train_config = Some(tcfg);
    Ok(Prepared {
        model: Arc::new(model),
        schema,
        test,
        test_indices: parts.test_indices,
        train_rows: parts.train.len(),
        val_rows: parts.val.len(),
        val_accuracy: Some(val_accuracy),
        epochs_run: Some(epochs_run),
    })
}

/// Seeded subsample of `n` rows (kept in ascending order) when `ds` is larger.
pub fn subsample(ds: &TabularDataset, n: usize, seed: u64) -> (TabularDataset, Vec<usize>) {
    if ds.len() <= n {
        return (ds.clone(), (0..ds.len()).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, ds.len(), n).into_vec();
    picked.sort_unstable();
    (ds.subset(&picked), picked)
}

fn mix_seed(seed: u64, row: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (row as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One episode per test row. Rows are processed on scoped worker threads;
/// results are returned in row order.
pub fn run_episodes(
    model: &Arc<TrainedModel>,
    schema: &Arc<DatasetSchema>,
    policy: &Policy,
    rows: &TabularDataset,
    budget: Option<f64>,
) -> Result<Vec<Trajectory>> {
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get());
    run_episodes_on(model, schema, policy, rows, budget, workers)
}

/// [`run_episodes`] with an explicit worker count. The result does not
/// depend on `workers`.
pub fn run_episodes_on(
    model: &Arc<TrainedModel>,
    schema: &Arc<DatasetSchema>,
    policy: &Policy,
    rows: &TabularDataset,
    budget: Option<f64>,
    workers: usize,
) -> Result<Vec<Trajectory>> {
    let n = rows.len();
    let workers = workers.min(n.max(1));
    let chunk = n.div_ceil(workers.max(1)).max(1);
    let episode = |r: usize| {
        let policy = match policy {
            Policy::Random { seed } => Policy::Random {
                seed: mix_seed(*seed, r),
            },
            p => p.clone(),
        };
        run_episode(model.clone(), schema.clone(), policy, rows.row(r), Some(rows.label(r)), budget)
    };
    if workers <= 1 {
        return (0..n).map(episode).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .step_by(chunk)
            .map(|start| {
                let episode = &episode;
                scope.spawn(move || (start..(start + chunk).min(n)).map(episode).collect::<Result<Vec<_>>>())
            })
            .collect();
        let mut out = Vec::with_capacity(n);
        for h in handles {
            out.extend(h.join().expect("episode worker panicked")?);
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: String,
    pub count_curve: Vec<CurvePoint>,
    pub cost_curve: Vec<CurvePoint>,
    pub cost_auc: f64,
    pub heatmap: HeatmapMatrix,
    /// Accuracy after the final acquisition of each row.
    pub final_accuracy: f64,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub schema_hash: String,
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
    pub evaluated_rows: Vec<usize>,
    pub val_accuracy: Option<f64>,
    pub epochs_run: Option<usize>,
    /// Model accuracy on the fully observed test rows.
    pub full_accuracy: f64,
    /// Accuracy of the prediction made from the imputation vector alone.
    pub baseline_accuracy: f64,
    pub total_cost: f64,
    pub policies: Vec<PolicyReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub train_seconds: f64,
    pub episode_seconds: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub seeds: Vec<SeedReport>,
    pub timing: Vec<(u64, WallClock)>,
}

/// Evaluates every configured policy on one prepared model.
pub fn evaluate(cfg: &BenchConfig, prepared: &Prepared, seed: u64, timing: &mut WallClock) -> Result<SeedReport> {
    let Prepared { model, schema, test, .. } = prepared;
    let (rows, picked) = match cfg.max_test_rows {
        Some(n) => subsample(test, n, seed),
        None => (test.clone(), (0..test.len()).collect()),
    };
    let evaluated_rows = picked.iter().map(|&i| prepared.test_indices[i]).collect();
    let full_accuracy = accuracy(&model.network, &rows);
    let base_class = argmax(&model.network.forward(&model.baseline)?);
    let baseline_accuracy = rows.labels().iter().filter(|&&l| l == base_class).count() as f64 / rows.len() as f64;
    let total_cost = schema.total_cost();
    let heat_idx: Vec<usize> = (0..cfg.heatmap_samples.min(rows.len())).collect();
    let mut policies = Vec::new();
    for name in &cfg.policies {
        let policy = cfg.policy(name, seed)?;
        let started = Instant::now();
        let trajectories = run_episodes(model, schema, &policy, &rows, cfg.budget)?;
        timing
            .episode_seconds
            .push((name.clone(), started.elapsed().as_secs_f64()));
        let count_curve = build_count_curve(&trajectories, schema.dim(), cfg.budget.is_some())?;
        let cost_curve = build_cost_curve(&trajectories, &cost_grid(&trajectories))?;
        let cost_auc = normalized_cost_auc(&cost_curve, total_cost)?;
        let heatmap = build_heatmap(&trajectories, &heat_idx, schema)?;
        let labels: Vec<usize> = rows.labels().to_vec();
        let final_accuracy = accuracy_of(&trajectories, &labels, |t| t.prediction_after(usize::MAX));
        log::info!("seed {seed} {name}: cost AUC {cost_auc:.4}, final accuracy {final_accuracy:.4}");
        policies.push(PolicyReport {
            policy: name.clone(),
            count_curve,
            cost_curve,
            cost_auc,
            heatmap,
            final_accuracy,
            trajectories,
        });
    }
    Ok(SeedReport {
        seed,
        schema_hash: schema.hash(),
        train_rows: prepared.train_rows,
        val_rows: prepared.val_rows,
        test_rows: test.len(),
        evaluated_rows,
        val_accuracy: prepared.val_accuracy,
        epochs_run: prepared.epochs_run,
        full_accuracy,
        baseline_accuracy,
        total_cost,
        policies,
    })
}

/// Loads data, then per seed trains (or loads) a model and evaluates every
/// policy. Writes report files when `out_dir` is set.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let (raw, schema) = load_source(&cfg.dataset)?;
    let mut seeds = Vec::new();
    let mut timing = Vec::new();
    for &seed in &cfg.seeds {
        let mut clock = WallClock::default();
        let started = Instant::now();
        let prepared = prepare(cfg, &raw, schema.clone(), seed)?;
        clock.train_seconds = started.elapsed().as_secs_f64();
        let report = evaluate(cfg, &prepared, seed, &mut clock)?;
        if let Some(dir) = &cfg.out_dir {
            let dir = seed_dir(dir, seed, cfg.seeds.len());
            write_seed_report(&dir, &report, &prepared.schema, cfg)?;
            if cfg.model.is_none() {
                prepared.model.save(dir.join("model.json"))?;
            }
            write_timing(&dir, &clock)?;
        }
        seeds.push(report);
        timing.push((seed, clock));
    }
    Ok(BenchmarkReport {
        config: cfg.clone(),
        seeds,
        timing,
    })
}

fn seed_dir(out: &Path, seed: u64, n_seeds: usize) -> PathBuf {
    if n_seeds == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("seed-{seed}"))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// `policy,x_axis,x_value,accuracy,n` rows for both axes of every policy.
pub fn curves_csv(report: &SeedReport) -> String {
    let mut out = String::from("policy,x_axis,x_value,accuracy,n\n");
    for p in &report.policies {
        for (axis, curve) in [("count", &p.count_curve), ("cost", &p.cost_curve)] {
            for pt in curve {
                writeln!(out, "{},{axis},{},{},{}", p.policy, pt.x_value, pt.accuracy, pt.n_samples)
                    .expect("writing to a String");
            }
        }
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a BenchConfig,
    seed: u64,
    schema_hash: &'a str,
    train_rows: usize,
    val_rows: usize,
    test_rows: usize,
    evaluated_rows: usize,
    val_accuracy: Option<f64>,
    epochs_run: Option<usize>,
    full_accuracy: f64,
    baseline_accuracy: f64,
    total_cost: f64,
    policies: Vec<PolicySummary<'a>>,
}

#[derive(Serialize)]
struct PolicySummary<'a> {
    policy: &'a str,
    cost_auc: f64,
    final_accuracy: f64,
    accuracy_at_count: Vec<f64>,
}

pub fn write_seed_report(dir: &Path, report: &SeedReport, schema: &DatasetSchema, cfg: &BenchConfig) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("curves.csv"), &curves_csv(report))?;

    let heatmaps: serde_json::Map<String, serde_json::Value> = report
        .policies
        .iter()
        .map(|p| Ok((p.policy.clone(), serde_json::to_value(&p.heatmap)?)))
        .collect::<Result<_>>()?;
    write_file(&dir.join("heatmaps.json"), &(serde_json::to_string_pretty(&heatmaps)? + "\n"))?;

    let summary = Summary {
        config: cfg,
        seed: report.seed,
        schema_hash: &report.schema_hash,
        train_rows: report.train_rows,
        val_rows: report.val_rows,
        test_rows: report.test_rows,
        evaluated_rows: report.evaluated_rows.len(),
        val_accuracy: report.val_accuracy,
        epochs_run: report.epochs_run,
        full_accuracy: report.full_accuracy,
        baseline_accuracy: report.baseline_accuracy,
        total_cost: report.total_cost,
        policies: report
            .policies
            .iter()
            .map(|p| PolicySummary {
                policy: &p.policy,
                cost_auc: p.cost_auc,
                final_accuracy: p.final_accuracy,
                accuracy_at_count: p.count_curve.iter().map(|c| c.accuracy).collect(),
            })
            .collect(),
    };
    write_file(&dir.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;

    for p in &report.policies {
        let path = dir.join(format!("trajectories-{}.jsonl", p.policy));
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for t in &p.trajectories {
            for rec in t.records(schema) {
                serde_json::to_writer(&mut w, &rec)?;
                w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn write_timing(dir: &Path, clock: &WallClock) -> Result<()> {
    let mut out = format!("train_seconds {:.3}\n", clock.train_seconds);
    for (policy, secs) in &clock.episode_seconds {
        writeln!(out, "episodes_seconds {policy} {secs:.3}").expect("writing to a String");
    }
    write_file(&dir.join("timing.txt"), &out)
}
