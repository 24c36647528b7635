//! `rbmvec`: feature normalization, RBM training and adaptation, supervector
//! clustering and scoring from the command line.

mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rbmvec::clustering::Linkage;
use rbmvec::features::FeatureFormat;
use rbmvec::pipeline::{self, ClusterSpec, PipelineConfig, SynthConfig};
use rbmvec::rbm::TrainConfig;
use rbmvec::{Error, ErrorKind, Result};

use settings::{parse_sweep, Settings, TrainOverrides};

#[derive(Parser, Debug)]
#[command(name = "rbmvec", version, about = "Cluster items by RBM-adapted supervectors")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Feature file format: csv or binary.
    #[arg(long, global = true)]
    format: Option<FeatureFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled Gaussian-blob dataset.
    Synth(SynthArgs),
    /// Fit mean/variance normalization on one file and apply it to another.
    Normalize(NormalizeArgs),
    /// Train the universal RBM on every frame of a feature file.
    TrainUrbm(TrainUrbmArgs),
    /// Adapt the universal RBM to each item and write supervectors.
    AdaptExtract(AdaptArgs),
    /// Agglomerative clustering of supervectors by cosine similarity.
    Cluster(ClusterArgs),
    /// Score a cluster assignment against ground-truth labels.
    Evaluate(EvaluateArgs),
    /// Run every stage end to end.
    Pipeline(PipelineArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Normalize(_) => "normalize",
            Command::TrainUrbm(_) => "train-urbm",
            Command::AdaptExtract(_) => "adapt-extract",
            Command::Cluster(_) => "cluster",
            Command::Evaluate(_) => "evaluate",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    items_per_class: Option<usize>,
    #[arg(long)]
    frames_per_item: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    separation: Option<f64>,
    /// Output feature file.
    #[arg(long)]
    features: PathBuf,
    /// Output labels CSV.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    /// File the statistics are estimated on.
    #[arg(long)]
    fit_on: PathBuf,
    /// File to normalize (defaults to the fit file).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    /// Where to write the fitted `dim,mean,std` table.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    cd_steps: Option<usize>,
}

impl TrainArgs {
    fn overrides(&self) -> TrainOverrides {
        TrainOverrides {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            batch_size: self.batch_size,
            cd_steps: self.cd_steps,
        }
    }
}

#[derive(Args, Debug)]
struct TrainUrbmArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    /// Hidden units (default 400).
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Per-epoch reconstruction error CSV (default: next to the checkpoint).
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    train_args: TrainArgs,
}

#[derive(Args, Debug)]
struct AdaptArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Output supervector file.
    #[arg(long)]
    output: PathBuf,
    /// Keep raw adapted parameters instead of subtracting the universal model.
    #[arg(long)]
    no_center: bool,
    #[command(flatten)]
    train_args: TrainArgs,
}

#[derive(Args, Debug, Default)]
#[group(multiple = false)]
struct StopArgs {
    /// Merge while the best linkage score is at least this.
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    /// Merge until this many clusters remain.
    #[arg(long)]
    num_clusters: Option<usize>,
    /// Comma-separated thresholds; one result directory per value.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
}

impl StopArgs {
    fn spec(&self) -> Result<Option<ClusterSpec>> {
        Ok(match (&self.threshold, &self.num_clusters, &self.sweep) {
            (Some(t), _, _) => Some(ClusterSpec::Threshold(*t)),
            (_, Some(k), _) => Some(ClusterSpec::NumClusters(*k)),
            (_, _, Some(list)) => Some(ClusterSpec::Sweep(parse_sweep(list)?)),
            _ => None,
        })
    }
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    supervectors: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// single or average.
    #[arg(long)]
    linkage: Option<Linkage>,
    #[command(flatten)]
    stop: StopArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// `item_id,cluster_index` CSV.
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Report CSV (default: eval.csv next to the clusters file).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Ground truth; enables scoring and the k-means comparison.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    linkage: Option<Linkage>,
    #[command(flatten)]
    stop: StopArgs,
    #[arg(long)]
    no_center: bool,
    /// Skip the k-means baseline.
    #[arg(long)]
    no_kmeans: bool,
    /// Fit test normalization on the test set itself.
    #[arg(long)]
    refit_test_mvn: bool,
    #[arg(long)]
    urbm_epochs: Option<usize>,
    #[arg(long)]
    urbm_learning_rate: Option<f64>,
    #[arg(long)]
    urbm_weight_decay: Option<f64>,
    #[arg(long)]
    urbm_batch_size: Option<usize>,
    #[arg(long)]
    adapt_epochs: Option<usize>,
    #[arg(long)]
    adapt_learning_rate: Option<f64>,
    #[arg(long)]
    adapt_weight_decay: Option<f64>,
    #[arg(long)]
    adapt_batch_size: Option<usize>,
}

/// Values shared by every subcommand after merging flags with the file.
struct Common {
    settings: Settings,
    seed: u64,
    threads: usize,
    format: FeatureFormat,
}

fn common(cli: &Cli) -> Result<Common> {
    let settings = Settings::load(cli.config.as_deref())?;
    let seed = settings.or(cli.seed, "seed", 0)?;
    let threads = settings.or(cli.threads, "threads", 0)?;
    let format = settings.or(cli.format, "format", FeatureFormat::Csv)?;
    if threads > 0 {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(Common {
        settings,
        seed,
        threads,
        format,
    })
}

fn synth(c: &Common, a: &SynthArgs) -> Result<()> {
    let s = &c.settings;
    let cfg = SynthConfig {
        classes: s.or(a.classes, "classes", 10)?,
        items_per_class: s.or(a.items_per_class, "items_per_class", 20)?,
        frames_per_item: s.or(a.frames_per_item, "frames_per_item", 5)?,
        dim: s.or(a.dim, "dim", 16)?,
        separation: s.or(a.separation, "separation", 4.0)?,
        seed: c.seed,
    };
    let data = pipeline::synth(&cfg)?;
    pipeline::write_dataset_with_labels(&data, &a.features, &a.labels, c.format)?;
    println!(
        "wrote {} items ({} frames, dim {}) to {}",
        data.items.len(),
        data.frame_count(),
        cfg.dim,
        a.features.display()
    );
    Ok(())
}

fn normalize(c: &Common, a: &NormalizeArgs) -> Result<()> {
    let input = a.input.as_deref().unwrap_or(&a.fit_on);
    pipeline::stage_normalize(&a.fit_on, input, &a.output, a.stats.as_deref(), c.format)
}

fn train_urbm(c: &Common, a: &TrainUrbmArgs) -> Result<()> {
    let s = &c.settings;
    let train: PathBuf = s.require(a.train.clone(), "train")?;
    let hidden = s.or(a.hidden, "hidden", 400)?;
    let base = TrainConfig {
        seed: c.seed,
        ..TrainConfig::urbm_default()
    };
    let cfg = s.train_config("urbm", base, &a.train_args.overrides())?;
    let log = a.log.clone().unwrap_or_else(|| sibling(&a.checkpoint, pipeline::TRAIN_LOG_FILE));
    pipeline::stage_train_urbm(&train, c.format, hidden, &cfg, &a.checkpoint, &log)?;
    println!("wrote {} and {}", a.checkpoint.display(), log.display());
    Ok(())
}

fn adapt_extract(c: &Common, a: &AdaptArgs) -> Result<()> {
    let s = &c.settings;
    let test: PathBuf = s.require(a.test.clone(), "test")?;
    let base = TrainConfig {
        seed: c.seed,
        ..TrainConfig::adapt_default()
    };
    let cfg = s.train_config("adapt", base, &a.train_args.overrides())?;
    let center = s.enabled(a.no_center, "center")?;
    let vectors = pipeline::stage_adapt_extract(&a.checkpoint, &test, c.format, &cfg, center, c.threads, &a.output)?;
    println!("wrote {} supervectors to {}", vectors.len(), a.output.display());
    Ok(())
}

fn cluster(c: &Common, a: &ClusterArgs) -> Result<()> {
    let s = &c.settings;
    let out: PathBuf = s.require(a.out.clone(), "out")?;
    let linkage = s.or(a.linkage, "linkage", Linkage::Average)?;
    let spec = s.cluster_spec(a.stop.spec()?)?;
    for (theta, result) in pipeline::stage_cluster(&a.supervectors, linkage, &spec, &out)? {
        match theta {
            Some(t) => println!("θ = {t}: {} clusters", result.n_clusters),
            None => println!("{} clusters", result.n_clusters),
        }
    }
    Ok(())
}

fn evaluate(c: &Common, a: &EvaluateArgs) -> Result<()> {
    let labels: PathBuf = c.settings.require(a.labels.clone(), "labels")?;
    let output = a.output.clone().unwrap_or_else(|| sibling(&a.clusters, pipeline::EVAL_FILE));
    let report = pipeline::stage_evaluate(&a.clusters, &labels, &output)?;
    println!("{report}");
    Ok(())
}

fn run_pipeline(c: &Common, a: &PipelineArgs) -> Result<()> {
    let s = &c.settings;
    let mut cfg = PipelineConfig::new(
        s.require(a.train.clone(), "train")?,
        s.require(a.test.clone(), "test")?,
        s.require(a.out.clone(), "out")?,
    );
    cfg.labels = s.pick(a.labels.clone(), "labels")?;
    cfg.format = c.format;
    cfg.hidden = s.or(a.hidden, "hidden", cfg.hidden)?;
    cfg.linkage = s.or(a.linkage, "linkage", cfg.linkage)?;
    cfg.cluster = s.cluster_spec(a.stop.spec()?)?;
    cfg.center = s.enabled(a.no_center, "center")?;
    cfg.kmeans_baseline = s.enabled(a.no_kmeans, "kmeans_baseline")?;
    cfg.refit_test_mvn = a.refit_test_mvn || s.or(None, "refit_test_mvn", false)?;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    let urbm = TrainOverrides {
        epochs: a.urbm_epochs,
        learning_rate: a.urbm_learning_rate,
        weight_decay: a.urbm_weight_decay,
        batch_size: a.urbm_batch_size,
        cd_steps: None,
    };
    let adapt = TrainOverrides {
        epochs: a.adapt_epochs,
        learning_rate: a.adapt_learning_rate,
        weight_decay: a.adapt_weight_decay,
        batch_size: a.adapt_batch_size,
        cd_steps: None,
    };
    cfg.urbm = s.train_config("urbm", TrainConfig::urbm_default(), &urbm)?;
    cfg.adapt = s.train_config("adapt", TrainConfig::adapt_default(), &adapt)?;

    let outcome = pipeline::run_pipeline(&cfg)?;
    for (theta, result) in &outcome.clusterings {
        match theta {
            Some(t) => println!("θ = {t}: {} clusters", result.n_clusters),
            None => println!("{} clusters", result.n_clusters),
        }
    }
    if !outcome.comparison.is_empty() {
        println!("method\tθ\tFp\tFb\tclusters");
        for m in &outcome.comparison {
            let theta = m.theta.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
            println!(
                "{}\t{theta}\t{:.4}\t{:.4}\t{}",
                m.method, m.report.pairwise.f, m.report.bcubed.f, m.report.n_pred_clusters
            );
        }
    }
    println!("outputs in {}", cfg.out.display());
    Ok(())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new("")).join(name)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let c = common(cli)?;
    match &cli.command {
        Command::Synth(a) => synth(&c, a),
        Command::Normalize(a) => normalize(&c, a),
        Command::TrainUrbm(a) => train_urbm(&c, a),
        Command::AdaptExtract(a) => adapt_extract(&c, a),
        Command::Cluster(a) => cluster(&c, a),
        Command::Evaluate(a) => evaluate(&c, a),
        Command::Pipeline(a) => run_pipeline(&c, a),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Usage => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("rbmvec {}: {err}", cli.command.name());
            ExitCode::from(exit_code(&err))
        }
    }
}
