use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};

use menagerie::harness::files::{load_cross, load_winrate, write_matrix_info, MatrixInfo};
use menagerie::harness::io::write_atomic;
use menagerie::harness::{
    analyze, estimate_cross_winrate_matrix, estimate_winrate_matrix, psro_sweep, train, with_threads,
    AnalyzeOptions, ExperimentConfig, Population,
};
use menagerie::population::{evolution_csv, rpp_evolution};
use menagerie::rirrps::FixedAgent;

#[derive(Parser)]
#[command(name = "menagerie", version, about = "Self-play training and meta-game evaluation on repeated RPS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run self-play training and write checkpoints, logs and a manifest.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate a winrate matrix for a population, or a cross matrix for two.
    Matrix {
        #[command(flatten)]
        common: Common,
        /// Training output directory whose snapshots form the population.
        #[arg(long, conflicts_with = "agents")]
        run: Option<PathBuf>,
        /// Fixed agents instead of a run, e.g. `rock,paper,scissors`.
        #[arg(long, value_delimiter = ',')]
        agents: Vec<String>,
        /// Second population (cross matrix).
        #[arg(long, conflicts_with = "vs_agents")]
        vs: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        vs_agents: Vec<String>,
        #[arg(long)]
        sims: Option<u32>,
    },
    /// Evaluation matrix, maxent Nash support, heatmap and RPP evolution.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        winrate: PathBuf,
        /// Cross-population winrate CSV for the RPP evolution.
        #[arg(long)]
        cross: Option<PathBuf>,
        /// Also write the Nash support of every leading subgame.
        #[arg(long)]
        series: bool,
    },
    /// Relative population performance of a cross-population matrix.
    Rpp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cross: PathBuf,
    },
    /// PSRO runs over a grid of (threshold, n_matches) with phase timing.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Cells as `threshold:n_matches`, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.72:50")]
        grid: Vec<String>,
        #[arg(long)]
        episodes: Option<u64>,
    },
}

fn fixed_population(names: &[String]) -> Result<Population> {
    let kinds = names
        .iter()
        .map(|n| FixedAgent::from_name(n.trim()).ok_or_else(|| anyhow!("unknown agent {n:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Population::fixed(&kinds))
}

fn population(run: &Option<PathBuf>, agents: &[String]) -> Result<Option<Population>> {
    match (run, agents.is_empty()) {
        (Some(dir), _) => Ok(Some(Population::load_run(dir)?)),
        (None, false) => Ok(Some(fixed_population(agents)?)),
        (None, true) => Ok(None),
    }
}

fn parse_cell(s: &str) -> Result<(f64, usize)> {
    let (w, n) = s.split_once(':').ok_or_else(|| anyhow!("grid cell {s:?} is not threshold:n_matches"))?;
    Ok((w.trim().parse()?, n.trim().parse()?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common } => {
            let cfg = common.load()?;
            let rec = train(&cfg)?;
            eprintln!(
                "trained {} episodes, {} checkpoints, final menagerie {} -> {}",
                rec.episodes_run,
                rec.checkpoints.len(),
                rec.final_menagerie.len(),
                cfg.out.display()
            );
        }
        Command::Matrix {
            common,
            run,
            agents,
            vs,
            vs_agents,
            sims,
        } => {
            let cfg = common.load()?;
            let sims = sims.unwrap_or(cfg.sims_per_entry);
            let rows = population(&run, &agents)?.ok_or_else(|| anyhow!("give --run or --agents"))?;
            let cols = population(&vs, &vs_agents)?;
            let out = &cfg.out;
            let (file, csv, info) = match cols {
                None => {
                    let w = with_threads(cfg.threads, || estimate_winrate_matrix(&rows, cfg.env, sims, cfg.seed))??;
                    let info = MatrixInfo {
                        kind: "symmetric".into(),
                        sims_per_entry: sims,
                        seed: cfg.seed,
                        rows: w.len(),
                        cols: w.len(),
                    };
                    ("winrate.csv", w.to_csv(), info)
                }
                Some(cols) => {
                    let w = with_threads(cfg.threads, || {
                        estimate_cross_winrate_matrix(&rows, &cols, cfg.env, sims, cfg.seed)
                    })??;
                    let info = MatrixInfo {
                        kind: "cross".into(),
                        sims_per_entry: sims,
                        seed: cfg.seed,
                        rows: rows.len(),
                        cols: cols.len(),
                    };
                    ("cross_winrate.csv", w.to_csv(), info)
                }
            };
            write_atomic(&out.join(file), csv.as_bytes())?;
            write_matrix_info(out, &info)?;
            eprintln!("wrote {}", out.join(file).display());
        }
        Command::Analyze {
            common,
            winrate,
            cross,
            series,
        } => {
            let cfg = common.load()?;
            let w = load_winrate(&winrate)?;
            let c = cross.as_deref().map(load_cross).transpose()?;
            let report = with_threads(cfg.threads, || {
                analyze(
                    &w,
                    c.as_ref(),
                    &cfg.out,
                    AnalyzeOptions {
                        support_series: series,
                    },
                )
            })??;
            let failed: Vec<String> = report
                .failures()
                .map(|a| format!("{}: {}", a.file, a.error.as_deref().unwrap_or("failed")))
                .collect();
            if !failed.is_empty() {
                bail!("analysis incomplete:\n  {}", failed.join("\n  "));
            }
            eprintln!("wrote analysis to {}", cfg.out.display());
        }
        Command::Rpp { common, cross } => {
            let cfg = common.load()?;
            let c = load_cross(&cross)?;
            write_atomic(
                &cfg.out.join("rpp.csv"),
                menagerie::harness::analyze::rpp_summary_csv(&c)?.as_bytes(),
            )?;
            if c.entries().rows() == c.entries().cols() {
                let evo = with_threads(cfg.threads, || rpp_evolution(&c.to_evaluation()))??;
                write_atomic(&cfg.out.join("rpp_evolution.csv"), evolution_csv(&evo).as_bytes())?;
            }
            eprintln!("wrote {}", cfg.out.join("rpp.csv").display());
        }
        Command::Sweep {
            common,
            grid,
            episodes,
        } => {
            let mut cfg = common.load()?;
            if let Some(e) = episodes {
                cfg.episodes = e;
                cfg.checkpoints = cfg.checkpoints.min(e);
            }
            let cells = grid.iter().map(|s| parse_cell(s)).collect::<Result<Vec<_>>>()?;
            let report = psro_sweep(&cfg, &cells)?;
            write_atomic(&cfg.out.join("sweep_report.csv"), report.to_csv().as_bytes())?;
            let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                bail!("{failed} sweep cell(s) failed; see {}", cfg.out.join("sweep_report.csv").display());
            }
            eprintln!("wrote {}", cfg.out.join("sweep_report.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
