use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::codec::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::rbm::{RbmParams, Supervector, TrainConfig};
use crate::scalar::Scalar;

const CHECKPOINT_MAGIC: &[u8; 4] = b"RBMC";
const SUPERVECTOR_MAGIC: &[u8; 4] = b"RBSV";
const VERSION: u32 = 1;

/// Sidecar path holding the training configuration: `<checkpoint>.config`.
pub fn checkpoint_config_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".config");
    PathBuf::from(name)
}

pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    params: &RbmParams<T>,
    config: &TrainConfig,
) -> Result<()> {
    let mut w = ByteWriter::default();
    w.bytes(CHECKPOINT_MAGIC);
    w.u32(VERSION);
    w.u32(params.visible() as u32);
    w.u32(params.hidden() as u32);
    params.flatten().into_iter().for_each(|x| w.f64(x.as_f64()));
    write_file(path, &w.buf)?;
    write_file(&checkpoint_config_path(path), config.to_string().as_bytes())
}

/// Loads parameters and, when the sidecar exists, the training configuration.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(RbmParams<T>, Option<TrainConfig>)> {
    let bytes = read_file(path)?;
    let mut r = ByteReader::new(&bytes, path);
    r.expect_magic(CHECKPOINT_MAGIC)?;
    r.expect_version(VERSION)?;
    let visible = r.u32("visible units")? as usize;
    let hidden = r.u32("hidden units")? as usize;
    let mut read_vec = |n: usize, what: &str| -> Result<Vec<T>> {
        (0..n).map(|_| r.f64(what).map(T::of)).collect()
    };
    let weights = read_vec(visible * hidden, "weight")?;
    let vb = read_vec(visible, "visible bias")?;
    let hb = read_vec(hidden, "hidden bias")?;
    r.finish()?;
    let params = RbmParams::from_parts(visible, hidden, weights, vb, hb)
        .map_err(|e| Error::format(path, "payload", e.to_string()))?;

    let sidecar = checkpoint_config_path(path);
    let config = if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        Some(text.parse()?)
    } else {
        None
    };
    Ok((params, config))
}

pub fn save_supervectors<T: Scalar>(path: &Path, vectors: &[Supervector<T>]) -> Result<()> {
    let dim = vectors.first().map_or(0, Supervector::dim);
    if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(Error::Shape(format!(
            "supervector `{}` has dimension {}, expected {dim}",
            bad.source_item,
            bad.dim()
        )));
    }
    let dim32 = u32::try_from(dim)
        .map_err(|_| Error::Shape(format!("supervector dimension {dim} exceeds u32")))?;
    let mut w = ByteWriter::default();
    w.bytes(SUPERVECTOR_MAGIC);
    w.u32(VERSION);
    w.u32(dim32);
    w.u64(vectors.len() as u64);
    for v in vectors {
        w.item_id(&v.source_item)?;
        v.values.iter().for_each(|x| w.f64(x.as_f64()));
    }
    write_file(path, &w.buf)
}

pub fn load_supervectors<T: Scalar>(path: &Path) -> Result<Vec<Supervector<T>>> {
    let bytes = read_file(path)?;
    let mut r = ByteReader::new(&bytes, path);
    r.expect_magic(SUPERVECTOR_MAGIC)?;
    r.expect_version(VERSION)?;
    let dim = r.u32("dimension")? as usize;
    let count = r.u64("count")?;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = r.u16("item id length")? as usize;
        let source_item = r.string(len, "item id")?;
        let values = (0..dim)
            .map(|_| r.f64("value").map(T::of))
            .collect::<Result<Vec<T>>>()?;
        out.push(Supervector {
            source_item,
            values,
        });
    }
    r.finish()?;
    Ok(out)
}

/// CSV `epoch,mean_reconstruction_error`, epochs numbered from 1.
pub fn write_train_log(path: &Path, epoch_errors: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,mean_reconstruction_error\n");
    for (k, e) in epoch_errors.iter().enumerate() {
        writeln!(out, "{},{e}", k + 1).unwrap();
    }
    write_file(path, out.as_bytes())
}
