use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::codec::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::features::{Dataset, ItemFeatures, MvnStats};
use crate::scalar::Scalar;

const FEATURE_MAGIC: &[u8; 4] = b"RBFV";
const FEATURE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureFormat {
    #[default]
    Csv,
    Binary,
}

impl FromStr for FeatureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FeatureFormat::Csv),
            "binary" | "bin" => Ok(FeatureFormat::Binary),
            other => Err(Error::InvalidConfig(format!(
                "unknown feature format `{other}` (expected csv or binary)"
            ))),
        }
    }
}

/// Groups `(item_id, frame)` records into items in first-appearance order.
fn group_frames<T: Scalar>(records: Vec<(String, Vec<T>)>) -> Result<Dataset<T>> {
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut items: Vec<ItemFeatures<T>> = Vec::new();
    for (id, frame) in records {
        match index.get(&id) {
            Some(&k) => items[k].frames.push(frame),
            None => {
                index.insert(id.clone(), items.len());
                items.push(ItemFeatures {
                    item_id: id,
                    frames: vec![frame],
                });
            }
        }
    }
    Dataset::new(items)
}

pub fn load_features<T: Scalar>(path: &Path, format: FeatureFormat) -> Result<Dataset<T>> {
    match format {
        FeatureFormat::Csv => load_csv(path),
        FeatureFormat::Binary => load_binary(path),
    }
}

pub fn save_features<T: Scalar>(path: &Path, data: &Dataset<T>, format: FeatureFormat) -> Result<()> {
    data.validate()?;
    match format {
        FeatureFormat::Csv => save_csv(path, data),
        FeatureFormat::Binary => save_binary(path, data),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let location = err
        .position()
        .map(|p| format!("line {}", p.line()))
        .unwrap_or_else(|| "unknown position".into());
    Error::format(path, location, err.to_string())
}

fn load_csv<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0) != Some("item_id") || header.len() < 2 {
        return Err(Error::format(
            path,
            "line 1",
            "header must be `item_id,f0,f1,...`",
        ));
    }
    let d = header.len() - 1;
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != d + 1 {
            return Err(Error::Shape(format!(
                "{}: line {line} has {} values, header declares {d}",
                path.display(),
                row.len().saturating_sub(1)
            )));
        }
        let id = row[0].to_string();
        let frame = row
            .iter()
            .skip(1)
            .map(|field| {
                field.parse::<f64>().map(T::of).map_err(|_| {
                    Error::format(path, format!("line {line}"), format!("`{field}` is not a number"))
                })
            })
            .collect::<Result<Vec<T>>>()?;
        records.push((id, frame));
    }
    group_frames(records)
}

fn save_csv<T: Scalar>(path: &Path, data: &Dataset<T>) -> Result<()> {
    let d = data.dim().unwrap_or(0);
    let mut out = String::from("item_id");
    for k in 0..d {
        write!(out, ",f{k}").unwrap();
    }
    out.push('\n');
    for item in &data.items {
        for frame in &item.frames {
            out.push_str(&item.item_id);
            for x in frame {
                write!(out, ",{}", x.as_f64()).unwrap();
            }
            out.push('\n');
        }
    }
    write_file(path, out.as_bytes())
}

fn load_binary<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let bytes = read_file(path)?;
    let mut r = ByteReader::new(&bytes, path);
    r.expect_magic(FEATURE_MAGIC)?;
    r.expect_version(FEATURE_VERSION)?;
    let d = r.u32("dimension")? as usize;
    let count = r.u64("frame count")?;
    let mut records = Vec::new();
    for _ in 0..count {
        let len = r.u16("item id length")? as usize;
        let id = r.string(len, "item id")?;
        let frame = (0..d)
            .map(|_| r.f64("feature value").map(T::of))
            .collect::<Result<Vec<T>>>()?;
        records.push((id, frame));
    }
    r.finish()?;
    group_frames(records)
}

fn save_binary<T: Scalar>(path: &Path, data: &Dataset<T>) -> Result<()> {
    let d = data.dim().unwrap_or(0);
    let mut w = ByteWriter::default();
    w.bytes(FEATURE_MAGIC);
    w.u32(FEATURE_VERSION);
    w.u32(d as u32);
    w.u64(data.frame_count() as u64);
    for item in &data.items {
        for frame in &item.frames {
            w.item_id(&item.item_id)?;
            frame.iter().for_each(|x| w.f64(x.as_f64()));
        }
    }
    write_file(path, &w.buf)
}

/// Reads `item_id,class_id` rows.
pub fn load_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() != 2 || &header[0] != "item_id" {
        return Err(Error::format(path, "line 1", "header must be `item_id,class_id`"));
    }
    let mut labels = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 2 {
            return Err(Error::format(path, format!("line {line}"), "expected 2 fields"));
        }
        if labels.insert(row[0].to_string(), row[1].to_string()).is_some() {
            return Err(Error::format(
                path,
                format!("line {line}"),
                format!("duplicate item id `{}`", &row[0]),
            ));
        }
    }
    Ok(labels)
}

/// Writes labels in the given item order.
pub fn save_labels<'a>(
    path: &Path,
    rows: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<()> {
    let mut out = String::from("item_id,class_id\n");
    for (id, class) in rows {
        writeln!(out, "{id},{class}").unwrap();
    }
    write_file(path, out.as_bytes())
}

/// CSV `dim,mean,std`, one row per feature dimension.
pub fn save_mvn<T: Scalar>(path: &Path, stats: &MvnStats<T>) -> Result<()> {
    let mut out = String::from("dim,mean,std\n");
    for (k, (m, s)) in stats.mean.iter().zip(&stats.std).enumerate() {
        writeln!(out, "{k},{},{}", m.as_f64(), s.as_f64()).unwrap();
    }
    write_file(path, out.as_bytes())
}

pub fn load_mvn<T: Scalar>(path: &Path) -> Result<MvnStats<T>> {
    let mut rdr = csv_reader(path)?;
    let mut stats = MvnStats {
        mean: Vec::new(),
        std: Vec::new(),
    };
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: usize| -> Result<f64> {
            row.get(k)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::format(path, format!("line {line}"), "expected `dim,mean,std`"))
        };
        stats.mean.push(T::of(field(1)?));
        stats.std.push(T::of(field(2)?));
    }
    Ok(stats)
}
