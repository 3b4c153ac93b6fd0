//! Reading and writing matrix files.
//!
//! A matrix CSV may have a `matrix.json` sidecar in the same directory that
//! records how it was estimated.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::{read_text, write_atomic};
use crate::error::{Error, Result};
use crate::metagame::{parse_csv, CrossWinrateMatrix};
use crate::WinrateMatrix;

/// Entries written at 6 decimals: mirrored pairs may disagree by this much.
const CSV_COMPLEMENT_TOL: f64 = 2e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixInfo {
    pub kind: String,
    pub sims_per_entry: u32,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
}

pub fn write_matrix_info(dir: &Path, info: &MatrixInfo) -> Result<()> {
    let mut json = serde_json::to_string_pretty(info)?;
    json.push('\n');
    write_atomic(&dir.join("matrix.json"), json.as_bytes())
}

fn sidecar_sims(path: &Path) -> Result<u32> {
    let side = path.with_file_name("matrix.json");
    if !side.exists() {
        return Ok(1);
    }
    let info: MatrixInfo = serde_json::from_str(&read_text(&side)?)?;
    Ok(info.sims_per_entry.max(1))
}

/// Loads a symmetric winrate CSV. The upper triangle is authoritative; the
/// lower triangle must mirror it up to the CSV rounding.
pub fn load_winrate(path: &Path) -> Result<WinrateMatrix> {
    let (rows, cols, m) = parse_csv::<f64>(&read_text(path)?).map_err(|e| Error::parse(path, e))?;
    if rows != cols {
        return Err(Error::parse(path, "row and column labels differ"));
    }
    let n = rows.len();
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] + m[(j, i)] - 1.0).abs() > CSV_COMPLEMENT_TOL {
                return Err(Error::parse(path, format!("w[{i}][{j}] + w[{j}][{i}] != 1")));
            }
        }
    }
    WinrateMatrix::from_upper(rows, sidecar_sims(path)?, |i, j| m[(i, j)])
}

pub fn load_cross(path: &Path) -> Result<CrossWinrateMatrix<f64>> {
    let (rows, cols, m) = parse_csv::<f64>(&read_text(path)?).map_err(|e| Error::parse(path, e))?;
    CrossWinrateMatrix::new(rows, cols, m, sidecar_sims(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;

    #[test]
    fn winrate_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = WinrateMatrix::from_upper(vec!["a".into(), "b".into(), "c".into()], 30, |i, j| {
            (i + 2 * j) as f64 / 30.0
        })
        .unwrap();
        let p = dir.path().join("winrate.csv");
        write_atomic(&p, w.to_csv().as_bytes()).unwrap();
        write_matrix_info(
            dir.path(),
            &MatrixInfo {
                kind: "symmetric".into(),
                sims_per_entry: 30,
                seed: 0,
                rows: 3,
                cols: 3,
            },
        )
        .unwrap();
        let back = load_winrate(&p).unwrap();
        assert_eq!(back.sims_per_entry(), 30);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - w.get(i, j)).abs() <= 5e-7);
                assert_eq!(back.get(i, j) + back.get(j, i), 1.0);
            }
        }
    }

    #[test]
    fn rejects_inconsistent_mirror() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        write_atomic(&p, b"label,a,b\na,0.500000,0.300000\nb,0.600000,0.500000\n").unwrap();
        assert!(load_winrate(&p).is_err());
        assert!(load_winrate(&dir.path().join("missing.csv")).is_err());
    }

    #[test]
    fn cross_csv_loads() {
        let dir = tempfile::tempdir().unwrap();
        let c = CrossWinrateMatrix::new(
            vec!["x".into()],
            vec!["y".into(), "z".into()],
            Matrix::from_f64_rows(&[[0.25, 1.0]]),
            4,
        )
        .unwrap();
        let p = dir.path().join("cross.csv");
        write_atomic(&p, c.to_csv().as_bytes()).unwrap();
        let back = load_cross(&p).unwrap();
        assert_eq!(back.entries(), c.entries());
    }
}
