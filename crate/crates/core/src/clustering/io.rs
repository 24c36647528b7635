use std::fmt::Write as _;
use std::path::Path;

use crate::clustering::ClusterResult;
use crate::codec::write_file;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// CSV `item_id,cluster_index`.
pub fn write_assignment<S: AsRef<str>>(path: &Path, ids: &[S], assignment: &[usize]) -> Result<()> {
    if ids.len() != assignment.len() {
        return Err(Error::Shape(format!(
            "{} ids but {} assignments",
            ids.len(),
            assignment.len()
        )));
    }
    let mut out = String::from("item_id,cluster_index\n");
    for (id, c) in ids.iter().zip(assignment) {
        writeln!(out, "{},{c}", id.as_ref()).unwrap();
    }
    write_file(path, out.as_bytes())
}

/// Reads any two-column `item_id,<cluster>` CSV, keeping row order.
pub fn load_assignment(path: &Path) -> Result<Vec<(String, String)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| Error::format(path, "line 1", e.to_string()))?
        .clone();
    if header.len() != 2 || &header[0] != "item_id" {
        return Err(Error::format(path, "line 1", "expected header `item_id,<cluster>`"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::format(path, format!("line {line}"), e.to_string())
        })?;
        rows.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(rows)
}

/// CSV `step,score,members_a,members_b`; members are `;`-joined ids.
pub fn write_merges<T: Scalar>(path: &Path, result: &ClusterResult<T>) -> Result<()> {
    let join = |m: &[usize]| {
        m.iter()
            .map(|&i| result.ids[i].as_str())
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut out = String::from("step,score,members_a,members_b\n");
    for (step, m) in result.merges.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            step + 1,
            m.score.as_f64(),
            join(&m.members_a),
            join(&m.members_b)
        )
        .unwrap();
    }
    write_file(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{ahc, Linkage, SimilarityMatrix, StopRule};

    #[test]
    fn files() {
        let dir = tempfile::tempdir().unwrap();
        let m = SimilarityMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0],
        )
        .unwrap();
        let r = ahc(&m, Linkage::Single, StopRule::NumClusters(1)).unwrap();
        let p = dir.path().join("merges.csv");
        write_merges(&p, &r).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "step,score,members_a,members_b\n1,0.9,a,b\n2,0.2,a;b,c\n"
        );
        let p = dir.path().join("clusters.csv");
        write_assignment(&p, &r.ids, &r.assignment).unwrap();
        let back = load_assignment(&p).unwrap();
        assert_eq!(back[2], ("c".to_string(), "0".to_string()));
    }
}
