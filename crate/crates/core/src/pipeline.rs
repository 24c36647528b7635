//! File-to-file stages and the end-to-end pipeline.
//!
//! Every stage reads and writes the documented file formats, so running the
//! stages one by one produces the same bytes as [`run_pipeline`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::baselines::{kmeans, KMeansConfig};
use crate::clustering::{
    ahc, build_similarity_matrix, load_assignment, write_assignment, write_merges, ClusterResult,
    Linkage, StopRule,
};
use crate::codec::write_file;
use crate::error::{Error, Result};
use crate::features::{
    load_features, load_labels, mvn_apply, mvn_fit, save_features, save_labels, save_mvn, Dataset,
    FeatureFormat, ItemFeatures,
};
use crate::metrics::{EvalReport, Partition};
use crate::rbm::{
    adapt, extract_supervector, load_checkpoint, load_supervectors, save_checkpoint,
    save_supervectors, train_urbm, write_train_log, Supervector, TrainConfig,
};
use crate::rng::seeded;

pub const URBM_FILE: &str = "urbm.rbmc";
pub const TRAIN_LOG_FILE: &str = "urbm_train_log.csv";
pub const MVN_FILE: &str = "mvn.csv";
pub const SUPERVECTOR_FILE: &str = "supervectors.rbsv";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const MERGES_FILE: &str = "merges.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const KMEANS_CLUSTERS_FILE: &str = "kmeans_clusters.csv";

pub fn normalized_name(stem: &str, format: FeatureFormat) -> String {
    match format {
        FeatureFormat::Csv => format!("{stem}.norm.csv"),
        FeatureFormat::Binary => format!("{stem}.norm.rbfv"),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub items_per_class: usize,
    pub frames_per_item: usize,
    pub dim: usize,
    pub separation: f64,
    pub seed: u64,
}

/// Class centers `separation · N(0, I)`, frames `center + N(0, I)`.
///
/// Items are listed class by class; ids are `item<k>` with a global counter
/// and classes are `class<c>`.
pub fn synth(cfg: &SynthConfig) -> Result<Dataset<f64>> {
    if cfg.classes == 0 || cfg.items_per_class == 0 || cfg.frames_per_item == 0 || cfg.dim == 0 {
        return Err(Error::InvalidConfig(
            "classes, items, frames and dim must all be at least 1".into(),
        ));
    }
    if !cfg.separation.is_finite() || cfg.separation < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "separation must be finite and non-negative, got {}",
            cfg.separation
        )));
    }
    let mut rng = seeded(cfg.seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let centers: Vec<Vec<f64>> = (0..cfg.classes)
        .map(|_| (0..cfg.dim).map(|_| cfg.separation * gauss()).collect())
        .collect();
    let width = (cfg.classes * cfg.items_per_class).to_string().len();
    let mut items = Vec::new();
    let mut labels = std::collections::BTreeMap::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..cfg.items_per_class {
            let id = format!("item{:0width$}", items.len());
            let frames = (0..cfg.frames_per_item)
                .map(|_| center.iter().map(|&m| m + gauss()).collect())
                .collect();
            labels.insert(id.clone(), format!("class{c}"));
            items.push(ItemFeatures { item_id: id, frames });
        }
    }
    Dataset::new(items)?.with_labels(labels)
}

pub fn write_dataset_with_labels(
    data: &Dataset<f64>,
    features: &Path,
    labels: &Path,
    format: FeatureFormat,
) -> Result<()> {
    save_features(features, data, format)?;
    let map = data
        .labels
        .as_ref()
        .ok_or_else(|| Error::Data("dataset has no labels".into()))?;
    save_labels(labels, data.ids().map(|id| (id, map[id].as_str())))
}

// ---------------------------------------------------------------- stages

/// Fits MVN on `fit_on` and writes the normalized `input` to `output`.
pub fn stage_normalize(
    fit_on: &Path,
    input: &Path,
    output: &Path,
    stats_out: Option<&Path>,
    format: FeatureFormat,
) -> Result<()> {
    let fit: Dataset<f64> = load_features(fit_on, format)?;
    let stats = mvn_fit(&fit)?;
    let data = if fit_on == input { fit } else { load_features(input, format)? };
    let normalized = mvn_apply(&stats, &data)?;
    save_features(output, &normalized, format)?;
    if let Some(p) = stats_out {
        save_mvn(p, &stats)?;
    }
    Ok(())
}

/// Trains the universal model; writes the checkpoint (+ sidecar) and training log.
pub fn stage_train_urbm(
    train: &Path,
    format: FeatureFormat,
    hidden: usize,
    config: &TrainConfig,
    checkpoint: &Path,
    log: &Path,
) -> Result<()> {
    let data: Dataset<f64> = load_features(train, format)?;
    let trained = train_urbm(&data.items, hidden, config)?;
    save_checkpoint(checkpoint, &trained.params, config)?;
    write_train_log(log, &trained.epoch_errors)
}

/// Adapts the universal model to every item and writes supervectors in item
/// order. `threads == 0` uses the global pool.
pub fn stage_adapt_extract(
    checkpoint: &Path,
    test: &Path,
    format: FeatureFormat,
    config: &TrainConfig,
    center: bool,
    threads: usize,
    output: &Path,
) -> Result<Vec<Supervector<f64>>> {
    let (urbm, _) = load_checkpoint::<f64>(checkpoint)?;
    let data: Dataset<f64> = load_features(test, format)?;
    let run = || -> Result<Vec<Supervector<f64>>> {
        data.items
            .par_iter()
            .map(|item| {
                let adapted = adapt(&urbm, item, config)?;
                extract_supervector(&item.item_id, &adapted.params, Some(&urbm), center)
            })
            .collect()
    };
    let vectors = if threads == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run)?
    };
    save_supervectors(output, &vectors)?;
    Ok(vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClusterSpec {
    Threshold(f64),
    NumClusters(usize),
    Sweep(Vec<f64>),
}

/// Directory holding one θ's results inside a sweep.
pub fn sweep_dir(out: &Path, theta: f64) -> PathBuf {
    out.join(format!("theta_{theta}"))
}

fn write_cluster_files(dir: &Path, result: &ClusterResult<f64>) -> Result<()> {
    ensure_dir(dir)?;
    write_assignment(&dir.join(CLUSTERS_FILE), &result.ids, &result.assignment)?;
    write_merges(&dir.join(MERGES_FILE), result)
}

/// Clusters supervectors. A single run writes `clusters.csv` and `merges.csv`
/// into `out`; a sweep writes them into one `theta_<θ>` directory per θ plus
/// `sweep.csv` (`theta,n_clusters`) in `out`.
pub fn stage_cluster(
    supervectors: &Path,
    linkage: Linkage,
    spec: &ClusterSpec,
    out: &Path,
) -> Result<Vec<(Option<f64>, ClusterResult<f64>)>> {
    let vectors = load_supervectors::<f64>(supervectors)?;
    let matrix = build_similarity_matrix(&vectors)?;
    ensure_dir(out)?;
    match spec {
        ClusterSpec::Threshold(t) => {
            let r = ahc(&matrix, linkage, StopRule::Threshold(*t))?;
            write_cluster_files(out, &r)?;
            Ok(vec![(Some(*t), r)])
        }
        ClusterSpec::NumClusters(k) => {
            let r = ahc(&matrix, linkage, StopRule::NumClusters(*k))?;
            write_cluster_files(out, &r)?;
            Ok(vec![(None, r)])
        }
        ClusterSpec::Sweep(thetas) => {
            let results = crate::clustering::sweep_threshold(&matrix, linkage, thetas)?;
            let mut summary = String::from("theta,n_clusters\n");
            for (t, r) in &results {
                write_cluster_files(&sweep_dir(out, *t), r)?;
                writeln!(summary, "{t},{}", r.n_clusters).unwrap();
            }
            write_file(&out.join(SWEEP_FILE), summary.as_bytes())?;
            Ok(results.into_iter().map(|(t, r)| (Some(t), r)).collect())
        }
    }
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    Partition::from_pairs(load_assignment(path)?)
}

/// Scores `clusters.csv` against a labels file and writes `eval.csv`.
pub fn stage_evaluate(clusters: &Path, labels: &Path, output: &Path) -> Result<EvalReport> {
    let pred = read_partition(clusters)?;
    let truth = Partition::from_pairs(load_labels(labels)?)?;
    let report = EvalReport::evaluate(&pred, &truth)?;
    write_file(output, report.to_csv().as_bytes())?;
    Ok(report)
}

// ---------------------------------------------------------------- pipeline

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    pub labels: Option<PathBuf>,
    pub out: PathBuf,
    pub format: FeatureFormat,
    pub hidden: usize,
    pub urbm: TrainConfig,
    pub adapt: TrainConfig,
    pub linkage: Linkage,
    pub cluster: ClusterSpec,
    pub center: bool,
    /// Fit MVN statistics on the test set instead of the training set.
    pub refit_test_mvn: bool,
    /// Also run the k-means baseline with the true class count.
    pub kmeans_baseline: bool,
    pub seed: u64,
    pub threads: usize,
}

impl PipelineConfig {
    pub fn new(train: PathBuf, test: PathBuf, out: PathBuf) -> Self {
        PipelineConfig {
            train,
            test,
            labels: None,
            out,
            format: FeatureFormat::Csv,
            hidden: 400,
            urbm: TrainConfig::urbm_default(),
            adapt: TrainConfig::adapt_default(),
            linkage: Linkage::Average,
            cluster: ClusterSpec::Threshold(0.5),
            center: true,
            refit_test_mvn: false,
            kmeans_baseline: true,
            seed: 0,
            threads: 0,
        }
    }

    /// Training configs with the pipeline seed applied.
    pub fn seeded_configs(&self) -> (TrainConfig, TrainConfig) {
        (
            TrainConfig {
                seed: self.seed,
                ..self.urbm.clone()
            },
            TrainConfig {
                seed: self.seed,
                ..self.adapt.clone()
            },
        )
    }

    pub fn train_norm_path(&self) -> PathBuf {
        self.out.join(normalized_name("train", self.format))
    }

    pub fn test_norm_path(&self) -> PathBuf {
        self.out.join(normalized_name("test", self.format))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodScore {
    pub method: String,
    pub theta: Option<f64>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub clusterings: Vec<(Option<f64>, ClusterResult<f64>)>,
    /// Per-θ (or single) evaluation of the AHC results.
    pub evaluations: Vec<MethodScore>,
    /// Best AHC result by pairwise F plus the baseline, when labels were given.
    pub comparison: Vec<MethodScore>,
}

impl PipelineOutcome {
    pub fn best(&self) -> Option<&MethodScore> {
        best_by_pairwise(&self.evaluations)
    }
}

/// Highest pairwise F; the earliest entry wins ties.
fn best_by_pairwise(scores: &[MethodScore]) -> Option<&MethodScore> {
    scores.iter().fold(None, |best: Option<&MethodScore>, m| match best {
        Some(b) if b.report.pairwise.f >= m.report.pairwise.f => Some(b),
        _ => Some(m),
    })
}

fn comparison_csv(rows: &[MethodScore]) -> String {
    let mut out = format!("method,theta,{}\n", EvalReport::CSV_HEADER);
    for r in rows {
        let theta = r.theta.map(|t| t.to_string()).unwrap_or_default();
        writeln!(out, "{},{theta},{}", r.method, r.report.csv_row()).unwrap();
    }
    out
}

/// Runs every stage. Outputs in `config.out`:
/// normalized features, `mvn.csv`, the URBM checkpoint and log, supervectors,
/// cluster/merge files, and with labels `eval.csv` per result,
/// `comparison.csv` and the k-means assignment.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    let out = &config.out;
    ensure_dir(out)?;
    let labels = match &config.labels {
        Some(p) => {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "labels file not found"),
                ));
            }
            Some(p.as_path())
        }
        None => None,
    };
    let (urbm_cfg, adapt_cfg) = config.seeded_configs();
    let train_norm = config.train_norm_path();
    let test_norm = config.test_norm_path();

    stage_normalize(&config.train, &config.train, &train_norm, Some(&out.join(MVN_FILE)), config.format)?;
    let fit_on = if config.refit_test_mvn { &config.test } else { &config.train };
    stage_normalize(fit_on, &config.test, &test_norm, None, config.format)?;

    let checkpoint = out.join(URBM_FILE);
    stage_train_urbm(&train_norm, config.format, config.hidden, &urbm_cfg, &checkpoint, &out.join(TRAIN_LOG_FILE))?;

    let sv_path = out.join(SUPERVECTOR_FILE);
    let vectors = stage_adapt_extract(
        &checkpoint,
        &test_norm,
        config.format,
        &adapt_cfg,
        config.center,
        config.threads,
        &sv_path,
    )?;

    let clusterings = stage_cluster(&sv_path, config.linkage, &config.cluster, out)?;

    let mut evaluations = Vec::new();
    let mut comparison = Vec::new();
    if let Some(labels) = labels {
        for (theta, _) in &clusterings {
            let dir = match (&config.cluster, theta) {
                (ClusterSpec::Sweep(_), Some(t)) => sweep_dir(out, *t),
                _ => out.clone(),
            };
            let report = stage_evaluate(&dir.join(CLUSTERS_FILE), labels, &dir.join(EVAL_FILE))?;
            evaluations.push(MethodScore {
                method: format!("ahc-rbm-{}", config.linkage),
                theta: *theta,
                report,
            });
        }
        if let Some(best) = best_by_pairwise(&evaluations) {
            comparison.push(best.clone());
        }
        if config.kmeans_baseline {
            comparison.push(run_kmeans_baseline(&vectors, labels, config.seed, out)?);
        }
        write_file(&out.join(COMPARISON_FILE), comparison_csv(&comparison).as_bytes())?;
    }

    Ok(PipelineOutcome {
        clusterings,
        evaluations,
        comparison,
    })
}

/// k-means on the supervectors with `k` = number of true classes.
pub fn run_kmeans_baseline(
    vectors: &[Supervector<f64>],
    labels: &Path,
    seed: u64,
    out: &Path,
) -> Result<MethodScore> {
    let truth = Partition::from_pairs(load_labels(labels)?)?;
    let (pred, _) = kmeans(vectors, &KMeansConfig::new(truth.n_clusters(), seed))?;
    write_assignment(&out.join(KMEANS_CLUSTERS_FILE), pred.ids(), pred.labels())?;
    Ok(MethodScore {
        method: "kmeans".into(),
        theta: None,
        report: EvalReport::evaluate(&pred, &truth)?,
    })
}
