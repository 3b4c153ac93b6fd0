//! PSRO hyperparameter sweeps with phase timing.

use std::fmt::Write as _;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::train::simulate;
use crate::error::{Error, Result};
use crate::metagame::fmt6;
use crate::selfplay::SelfPlayScheme;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub n_matches: usize,
    /// Share of wall time in the meta-solver.
    pub solver_pct: f64,
    /// Share of wall time extending the meta-game matrix.
    pub update_pct: f64,
    pub wall_seconds: f64,
    pub menagerie_size: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "threshold,n_matches,meta_solver_pct,matrix_update_pct,wall_seconds,menagerie_size,status\n",
        );
        for r in &self.rows {
            let status = match &r.error {
                None => "ok".to_string(),
                Some(e) => format!("error: {}", e.replace([',', '\n', '\r'], " ")),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                fmt6(r.threshold),
                r.n_matches,
                fmt6(r.solver_pct),
                fmt6(r.update_pct),
                fmt6(r.wall_seconds),
                r.menagerie_size,
                status
            );
        }
        s
    }
}

/// One PSRO run per `(threshold, n_matches)` cell, sequentially so the
/// timings do not compete for cores. Cell failures are recorded, not raised.
pub fn psro_sweep(base: &ExperimentConfig, grid: &[(f64, usize)]) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let rows = grid
        .iter()
        .map(|&(threshold, n_matches)| {
            let cfg = ExperimentConfig {
                scheme: SelfPlayScheme::Psro {
                    threshold,
                    n_matches,
                },
                ..base.clone()
            };
            let mut row = SweepRow {
                threshold,
                n_matches,
                solver_pct: 0.0,
                update_pct: 0.0,
                wall_seconds: 0.0,
                menagerie_size: 1,
                error: None,
            };
            match simulate(&cfg) {
                Ok(rec) => {
                    row.solver_pct = rec.timing.solver_pct();
                    row.update_pct = rec.timing.update_pct();
                    row.wall_seconds = rec.timing.wall.as_secs_f64();
                    row.menagerie_size = rec.final_menagerie.len();
                    row.error = rec.error.map(|e| e.to_string());
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(SweepReport { rows })
}
