//! Flat `key = value` configuration files. Values given on the command line
//! win over values from the file, which win over built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use rbmvec::pipeline::ClusterSpec;
use rbmvec::rbm::TrainConfig;
use rbmvec::{Error, Result};

const TRAIN_KEYS: [&str; 5] = ["epochs", "learning_rate", "weight_decay", "batch_size", "cd_steps"];

const KEYS: &[&str] = &[
    "seed",
    "threads",
    "format",
    "train",
    "test",
    "labels",
    "out",
    "hidden",
    "linkage",
    "threshold",
    "num_clusters",
    "sweep",
    "center",
    "kmeans_baseline",
    "refit_test_mvn",
    "classes",
    "items_per_class",
    "frames_per_item",
    "dim",
    "separation",
];

fn known(key: &str) -> bool {
    if KEYS.contains(&key) {
        return true;
    }
    match key.split_once('.') {
        Some(("urbm" | "adapt", field)) => TRAIN_KEYS.contains(&field),
        _ => false,
    }
}

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if !known(key) {
                return Err(Error::InvalidConfig(format!("line {}: unknown key `{key}`", n + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidConfig(format!("line {}: `{key}` given twice", n + 1)));
            }
        }
        Ok(Settings { values })
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    /// Command-line value, else file value.
    pub fn pick<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>> {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.parsed(key),
        }
    }

    /// Like [`pick`](Self::pick) but falls back to `default`.
    pub fn or<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.pick(cli, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T> {
        self.pick(cli, key)?.ok_or_else(|| {
            Error::InvalidConfig(format!("`--{}` is required", key.replace('_', "-")))
        })
    }

    /// Switch that is on by default; a command-line `off` wins.
    pub fn enabled(&self, cli_off: bool, key: &str) -> Result<bool> {
        if cli_off {
            return Ok(false);
        }
        self.or(None, key, true)
    }

    /// Training hyper-parameters under `prefix.`, layered over `base`.
    pub fn train_config(&self, prefix: &str, base: TrainConfig, cli: &TrainOverrides) -> Result<TrainConfig> {
        let key = |f: &str| format!("{prefix}.{f}");
        let cfg = TrainConfig {
            epochs: self.or(cli.epochs, &key("epochs"), base.epochs)?,
            learning_rate: self.or(cli.learning_rate, &key("learning_rate"), base.learning_rate)?,
            weight_decay: self.or(cli.weight_decay, &key("weight_decay"), base.weight_decay)?,
            batch_size: self.or(cli.batch_size, &key("batch_size"), base.batch_size)?,
            cd_steps: self.or(cli.cd_steps, &key("cd_steps"), base.cd_steps)?,
            seed: base.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Exactly one of threshold, cluster count or sweep. A stop rule given on
    /// the command line replaces whatever the file says.
    pub fn cluster_spec(&self, cli: Option<ClusterSpec>) -> Result<ClusterSpec> {
        if let Some(spec) = cli {
            return Ok(spec);
        }
        let mut found = Vec::new();
        if let Some(t) = self.parsed::<f64>("threshold")? {
            found.push(ClusterSpec::Threshold(t));
        }
        if let Some(k) = self.parsed::<usize>("num_clusters")? {
            found.push(ClusterSpec::NumClusters(k));
        }
        if let Some(list) = self.values.get("sweep") {
            found.push(ClusterSpec::Sweep(parse_sweep(list)?));
        }
        match found.len() {
            1 => Ok(found.pop().unwrap()),
            0 => Err(Error::InvalidConfig(
                "one of --threshold, --num-clusters or --sweep is required".into(),
            )),
            _ => Err(Error::InvalidConfig(
                "config gives more than one of threshold, num_clusters and sweep".into(),
            )),
        }
    }
}

/// Training flags a subcommand accepted on its command line.
#[derive(Debug, Default, Clone)]
pub struct TrainOverrides {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub cd_steps: Option<usize>,
}

/// Comma-separated thresholds.
pub fn parse_sweep(list: &str) -> Result<Vec<f64>> {
    let values = list
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad threshold `{t}` in sweep")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::InvalidConfig("empty sweep".into()));
    }
    Ok(values)
}
