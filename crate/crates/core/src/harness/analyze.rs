//! Offline analysis of estimated winrate matrices.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::io::write_atomic;
use super::svg;
use crate::error::Result;
use crate::metagame::{fmt6, winrate_to_evaluation, CrossWinrateMatrix};
use crate::nash::{maxent_nash, nash_support_series, DEFAULT_TOL};
use crate::population::{evolution_csv, relative_population_performance, rpp_evolution};
use crate::WinrateMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactStatus {
    pub file: String,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub artifacts: Vec<ArtifactStatus>,
    pub nash_entropy: Option<f64>,
    pub nash_residual: Option<f64>,
    pub rpp_value: Option<f64>,
}

impl AnalysisReport {
    pub fn failures(&self) -> impl Iterator<Item = &ArtifactStatus> {
        self.artifacts.iter().filter(|a| !a.ok)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyzeOptions {
    /// Also write the maxent Nash of every leading subgame.
    pub support_series: bool,
}

/// Writes `evaluation.csv`, `nash_support.csv`, `heatmap.svg`, optionally
/// `nash_support_series.csv`, `rpp_evolution.csv` (when a cross-population
/// matrix is given) and `analysis.json`. A failing artifact is recorded in
/// the report and the rest are still produced.
pub fn analyze(
    winrate: &WinrateMatrix,
    cross: Option<&CrossWinrateMatrix<f64>>,
    out: &Path,
    options: AnalyzeOptions,
) -> Result<AnalysisReport> {
    let mut report = AnalysisReport {
        artifacts: Vec::new(),
        nash_entropy: None,
        nash_residual: None,
        rpp_value: None,
    };
    let labels = winrate.labels().to_vec();

    let eval = winrate_to_evaluation(winrate);
    record(&mut report, out, "evaluation.csv", || {
        Ok(eval.as_ref().map_err(clone_err)?.to_csv(&labels))
    })?;

    record(&mut report, out, "nash_support.csv", || {
        let a = eval.as_ref().map_err(clone_err)?;
        let nash = maxent_nash(a, DEFAULT_TOL)?;
        let mut csv = String::from("label,probability\n");
        for (l, p) in labels.iter().zip(nash.strategy.probs()) {
            let _ = writeln!(csv, "{l},{}", fmt6(*p));
        }
        Ok(csv)
    })?;
    if let Ok(a) = &eval {
        if let Ok(n) = maxent_nash(a, DEFAULT_TOL) {
            report.nash_entropy = Some(n.entropy);
            report.nash_residual = Some(n.residual);
        }
    }

    if options.support_series {
        record(&mut report, out, "nash_support_series.csv", || {
            let a = eval.as_ref().map_err(clone_err)?;
            let series = nash_support_series(a, DEFAULT_TOL)?;
            let mut csv = String::from("k");
            for l in &labels {
                let _ = write!(csv, ",{l}");
            }
            csv.push('\n');
            for (k, s) in series.iter().enumerate() {
                let _ = write!(csv, "{}", k + 1);
                for p in s.padded(labels.len()).probs() {
                    let _ = write!(csv, ",{}", fmt6(*p));
                }
                csv.push('\n');
            }
            Ok(csv)
        })?;
    }

    record(&mut report, out, "heatmap.svg", || Ok(svg::heatmap(winrate)))?;

    if let Some(cross) = cross {
        let ce = cross.to_evaluation();
        record(&mut report, out, "rpp_evolution.csv", || Ok(evolution_csv(&rpp_evolution(&ce)?)))?;
        report.rpp_value = relative_population_performance(&ce).ok().map(|r| r.value);
    }

    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_atomic(&out.join("analysis.json"), json.as_bytes())?;
    Ok(report)
}

fn clone_err(e: &crate::Error) -> crate::Error {
    crate::Error::InvalidMatrix(e.to_string())
}

/// Builds one artifact; content errors are recorded, I/O errors propagate.
fn record(
    report: &mut AnalysisReport,
    out: &Path,
    file: &str,
    build: impl FnOnce() -> Result<String>,
) -> Result<()> {
    match build() {
        Ok(body) => {
            write_atomic(&out.join(file), body.as_bytes())?;
            report.artifacts.push(ArtifactStatus {
                file: file.into(),
                ok: true,
                error: None,
            });
        }
        Err(e) => report.artifacts.push(ArtifactStatus {
            file: file.into(),
            ok: false,
            error: Some(e.to_string()),
        }),
    }
    Ok(())
}

/// `rpp.csv` content: the value and both Nash strategies of one cross matrix.
pub fn rpp_summary_csv(cross: &CrossWinrateMatrix<f64>) -> Result<String> {
    let r = relative_population_performance(&cross.to_evaluation())?;
    let mut csv = String::from("population,label,probability\n");
    for (l, p) in cross.row_labels().iter().zip(r.nash_row.probs()) {
        let _ = writeln!(csv, "1,{l},{}", fmt6(*p));
    }
    for (l, p) in cross.col_labels().iter().zip(r.nash_col.probs()) {
        let _ = writeln!(csv, "2,{l},{}", fmt6(*p));
    }
    let _ = writeln!(csv, "value,,{}", fmt6(r.value));
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::matches::{estimate_cross_winrate_matrix, estimate_winrate_matrix, Population};
    use crate::rirrps::{FixedAgent, RirRpsConfig};

    #[test]
    fn rps_agents_full_report() {
        let dir = tempfile::tempdir().unwrap();
        let pop = Population::fixed(&[FixedAgent::Rock, FixedAgent::Paper, FixedAgent::Scissors]);
        let env = RirRpsConfig::default();
        let w = estimate_winrate_matrix(&pop, env, 3, 0).unwrap();
        let cross = estimate_cross_winrate_matrix(&pop, &pop, env, 3, 0).unwrap();
        let r = analyze(&w, Some(&cross), dir.path(), AnalyzeOptions { support_series: true }).unwrap();
        assert_eq!(r.failures().count(), 0);
        let support = std::fs::read_to_string(dir.path().join("nash_support.csv")).unwrap();
        assert_eq!(
            support,
            "label,probability\nrock,0.333333\npaper,0.333333\nscissors,0.333333\n"
        );
        let series = std::fs::read_to_string(dir.path().join("nash_support_series.csv")).unwrap();
        assert_eq!(series.lines().count(), 4);
        let eval = std::fs::read_to_string(dir.path().join("evaluation.csv")).unwrap();
        assert!(eval.starts_with("label,rock,paper,scissors\nrock,0.000000,-0.500000,0.500000\n"));
        assert!(dir.path().join("heatmap.svg").exists());
        assert!(dir.path().join("rpp_evolution.csv").exists());
        assert!(dir.path().join("analysis.json").exists());
    }

    #[test]
    fn self_pair_evolution_is_zero() {
        let dir = tempfile::tempdir().unwrap();
        let pop = Population::fixed(&[FixedAgent::Rock, FixedAgent::Paper, FixedAgent::Scissors]);
        let w = estimate_winrate_matrix(&pop, RirRpsConfig::default(), 3, 0).unwrap();
        let cross = CrossWinrateMatrix::new(
            w.labels().to_vec(),
            w.labels().to_vec(),
            w.entries().clone(),
            w.sims_per_entry(),
        )
        .unwrap();
        analyze(&w, Some(&cross), dir.path(), AnalyzeOptions::default()).unwrap();
        let evo = std::fs::read_to_string(dir.path().join("rpp_evolution.csv")).unwrap();
        assert_eq!(evo, "index,value\n1,0.000000\n2,0.000000\n3,0.000000\n");
    }

    #[test]
    fn rpp_summary_lists_both_strategies() {
        let pop = Population::fixed(&[FixedAgent::Rock, FixedAgent::Paper]);
        let cross = estimate_cross_winrate_matrix(&pop, &pop, RirRpsConfig::default(), 1, 0).unwrap();
        let csv = rpp_summary_csv(&cross).unwrap();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.lines().last().unwrap().starts_with("value,,"));
    }
}
