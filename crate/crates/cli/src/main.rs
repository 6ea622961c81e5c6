use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use featacq::bench::{self, BenchConfig, DatasetSource};
use featacq::data::{self, SplitSpec};
use featacq::{Error, Result};

#[derive(Parser)]
#[command(name = "featacq", version, about = "Cost-aware sequential feature acquisition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier and write the model file.
    Train(TrainArgs),
    /// Run acquisition episodes over a test split and write curves.
    Bench(BenchArgs),
    /// Generate the synthesized binary task as CSV plus schema.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file, or a directory holding `images-idx3-ubyte` and
    /// `labels-idx1-ubyte`.
    #[arg(long)]
    data: PathBuf,
    /// Schema JSON (required for CSV data).
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl DataArgs {
    fn source(&self) -> Result<DatasetSource> {
        if self.data.is_dir() {
            return Ok(DatasetSource::Idx {
                images: self.data.join("images-idx3-ubyte"),
                labels: self.data.join("labels-idx1-ubyte"),
            });
        }
        let schema = self
            .schema
            .clone()
            .ok_or_else(|| Error::Argument("--schema is required for CSV data".into()))?;
        Ok(DatasetSource::Csv {
            data: self.data.clone(),
            schema,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    /// Beta dropout shape parameters.
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.15)]
    test_fraction: f64,
    /// Pretrain a denoising autoencoder and fine-tune its encoder.
    #[arg(long)]
    dae: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark config JSON; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Comma-separated: aig, random, plain_gradient.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    /// Riemann steps for the attribution integral.
    #[arg(long)]
    m: Option<usize>,
    /// A cost budget, or `none`.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_test_rows: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 16_000)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives `data.csv` and `schema.json`.
    #[arg(long)]
    out: PathBuf,
}

fn parse_budget(s: &str) -> Result<Option<f64>> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Argument(format!("budget must be a number or `none`, got {s:?}")))
}

fn train(args: TrainArgs) -> Result<serde_json::Value> {
    let source = args.data.source()?;
    let cfg = BenchConfig {
        dataset: source.clone(),
        split: SplitSpec {
            test_fraction: args.test_fraction,
            ..SplitSpec::default()
        },
        train: featacq::mlp::TrainConfig {
            epochs: args.epochs,
            learning_rate: args.lr,
            dropout_alpha: args.alpha,
            dropout_beta: args.beta,
            ..Default::default()
        },
        backbone: if args.dae { bench::Backbone::Dae } else { bench::Backbone::Mlp },
        ..BenchConfig::default()
    };
    cfg.validate()?;
    let (raw, schema) = bench::load_source(&source)?;
    let prepared = bench::prepare(&cfg, &raw, schema, args.seed)?;
    log::info!("trained for {:?} epochs, validation accuracy {:?}", prepared.epochs_run, prepared.val_accuracy);
    prepared.model.save(&args.out_model)?;
    if let DatasetSource::Idx { .. } = source {
        // IDX data carries no schema file; write the one the model was bound to.
        let path = args.out_model.with_extension("schema.json");
        prepared.schema.save(&path)?;
    }
    Ok(serde_json::json!({
        "model": args.out_model,
        "train_rows": prepared.train_rows,
        "val_rows": prepared.val_rows,
        "test_rows": prepared.test.len(),
        "val_accuracy": prepared.val_accuracy,
        "epochs_run": prepared.epochs_run,
        "test_accuracy": featacq::mlp::accuracy(&prepared.model.network, &prepared.test),
    }))
}

fn bench_config(args: BenchArgs) -> Result<BenchConfig> {
    let mut cfg = match &args.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    if let Some(data) = args.data {
        cfg.dataset = DataArgs {
            data,
            schema: args.schema,
        }
        .source()?;
    } else if args.config.is_none() {
        return Err(Error::Argument("either --config or --data is required".into()));
    }
    if let Some(p) = args.policies {
        cfg.policies = p;
    }
    if let Some(m) = args.m {
        cfg.steps = m;
    }
    if let Some(b) = &args.budget {
        cfg.budget = parse_budget(b)?;
    }
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    if args.model.is_some() {
        cfg.model = args.model;
    }
    if args.max_test_rows.is_some() {
        cfg.max_test_rows = args.max_test_rows;
    }
    if args.out_dir.is_some() {
        cfg.out_dir = args.out_dir;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_bench(args: BenchArgs) -> Result<serde_json::Value> {
    let cfg = bench_config(args)?;
    let report = bench::run_benchmark(&cfg)?;
    let seeds: Vec<serde_json::Value> = report
        .seeds
        .iter()
        .map(|s| {
            serde_json::json!({
                "seed": s.seed,
                "evaluated_rows": s.evaluated_rows.len(),
                "full_accuracy": s.full_accuracy,
                "baseline_accuracy": s.baseline_accuracy,
                "cost_auc": s.policies.iter().map(|p| (p.policy.clone(), p.cost_auc.into())).collect::<serde_json::Map<_, _>>(),
            })
        })
        .collect();
    Ok(serde_json::json!({ "out_dir": cfg.out_dir, "seeds": seeds }))
}

fn synth(args: SynthArgs) -> Result<serde_json::Value> {
    let (ds, schema) = data::generate_synthesized(args.n, args.d, args.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let csv_path = args.out.join("data.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    data::write_tabular(&ds, &schema, std::io::BufWriter::new(file))?;
    schema.save(args.out.join("schema.json"))?;
    Ok(serde_json::json!({ "rows": ds.len(), "dim": ds.dim(), "out": args.out }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => train(a),
        Command::Bench(a) => run_bench(a),
        Command::Synth(a) => synth(a),
    };
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            let _ = writeln!(std::io::stderr(), "{line}");
            ExitCode::FAILURE
        }
    }
}
