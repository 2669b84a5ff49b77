use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use sparserc::SolverConfig;
use sparserc_cli::config::{load_preset, preset_names, ExperimentSpec};
use sparserc_cli::experiment::{generate_to_dir, run_experiment, run_external};

/// Benchmark and learn weighted DAGs from linear SEM data with few root
/// causes.
#[derive(Parser)]
#[command(name = "sparserc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SpecSource {
    /// Experiment config (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset name (see `sparserc presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Node-count multiplier applied to the config.
    #[arg(long)]
    scale: Option<usize>,
}

impl SpecSource {
    fn load(&self) -> Result<ExperimentSpec> {
        let mut spec = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentSpec::from_path(path)?,
            (None, Some(name)) => load_preset(name)?,
            (None, None) => bail!("either --config or --preset is required"),
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(scale) = self.scale {
            if scale == 0 {
                bail!("--scale must be positive");
            }
            spec.apply_scale(scale);
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset: data CSV, metadata sidecar, ground
    /// truth, and root causes.
    Generate {
        #[command(flatten)]
        source: SpecSource,
        /// Output directory.
        #[arg(long, default_value = "out/generate")]
        out: PathBuf,
    },
    /// Learn a DAG from a data CSV; with --truth, also emit metrics.
    Solve {
        /// Data CSV (n rows, d columns, no header).
        #[arg(long)]
        data: PathBuf,
        /// Ground-truth adjacency CSV (d x d).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Experiment config supplying the [solver] section.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Solver seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Wall-clock limit for the solve, in seconds.
        #[arg(long)]
        timeout_s: Option<f64>,
        #[arg(long, default_value = "out/solve")]
        out: PathBuf,
    },
    /// Run a benchmark experiment: seeded repetitions, CSV reports,
    /// aggregates, and sweep plots.
    Bench {
        #[command(flatten)]
        source: SpecSource,
        /// Output directory (defaults to the config's output_dir, then
        /// out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker pool width (defaults to the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Per-repetition wall-clock limit in seconds.
        #[arg(long)]
        timeout_s: Option<f64>,
    },
    /// Exhaustive L0 search on a small dataset (at most 5 columns).
    Oracle {
        #[arg(long)]
        data: PathBuf,
        /// Ground-truth adjacency CSV for comparison.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Relative zero cutoff for counting root-cause entries.
        #[arg(long)]
        zero_tol: Option<f64>,
        #[arg(long, default_value = "out/oracle")]
        out: PathBuf,
    },
    /// Compare two adjacency CSVs; prints one metrics row.
    Metrics {
        /// Estimated adjacency CSV.
        #[arg(long)]
        est: PathBuf,
        /// True adjacency CSV.
        #[arg(long)]
        truth: PathBuf,
        /// Data CSV, enabling varsortability.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Also write the row to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the bundled benchmark presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Exit policy: 0 on success, 1 on runtime failures (including failed
/// repetitions), 2 on config or parse problems.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<sparserc::Error>() {
            return match core {
                sparserc::Error::Parse { .. }
                | sparserc::Error::InvalidConfig(_)
                | sparserc::Error::ShapeMismatch(_)
                | sparserc::Error::TooLarge { .. } => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return 2;
        }
    }
    let text = format!("{err:#}");
    if text.contains("config") || text.contains("--config") || text.contains("preset") {
        2
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { source, out } => {
            let spec = source.load()?;
            let dir = generate_to_dir(&spec, &out)?;
            println!("dataset written to {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            data,
            truth,
            config,
            seed,
            timeout_s,
            out,
        } => {
            let mut solver_cfg = match config {
                Some(path) => ExperimentSpec::from_path(&path)?.solver,
                None => SolverConfig::default(),
            };
            if let Some(seed) = seed {
                solver_cfg.seed = seed;
            }
            if timeout_s.is_some() {
                solver_cfg.time_limit_s = timeout_s;
            }
            let outcome = run_external(&data, truth.as_deref(), &solver_cfg, &out)?;
            println!(
                "learned {} edges in {:.2} s (converged: {}); outputs in {}",
                outcome.result.weights.edge_count(),
                outcome.result.runtime_seconds,
                outcome.result.converged,
                outcome.dir.display()
            );
            if let Some(report) = &outcome.report {
                println!("{}", sparserc::MetricsReport::CSV_HEADER);
                println!(
                    "{}",
                    report.to_csv_row(
                        "sparserc",
                        solver_cfg.seed,
                        outcome.result.weights.d(),
                        outcome.n
                    )
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            source,
            out,
            jobs,
            timeout_s,
        } => {
            let mut spec = source.load()?;
            if let Some(t) = timeout_s {
                spec.timeout_s = t;
            }
            let jobs = jobs.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            let outcome = run_experiment(&spec, jobs, out.as_deref())?;
            println!(
                "experiment {} finished; reports in {}",
                spec.name,
                outcome.dir.display()
            );
            if outcome.failed_rows > 0 {
                eprintln!("{} repetition(s) failed", outcome.failed_rows);
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            data,
            truth,
            zero_tol,
            out,
        } => {
            let x = sparserc::io::read_matrix_csv(&data)?;
            let tol = zero_tol.unwrap_or(sparserc::exact_l0::DEFAULT_ZERO_TOL);
            let result = sparserc::solve_l0(&x, tol)?;
            std::fs::create_dir_all(&out)?;

            let mut edges = String::new();
            for &(i, j) in &result.best_support {
                edges.push_str(&format!("{i},{j},{}\n", result.best_weights[[i, j]]));
            }
            std::fs::write(out.join("best_edges.txt"), edges)?;

            let mut summary: Vec<(String, String)> = vec![
                ("best_l0".into(), result.best_l0.to_string()),
                ("num_dags_enumerated".into(), result.num_dags_enumerated.to_string()),
                ("num_ties".into(), result.ties.len().to_string()),
                (
                    "rank_deficient_skipped".into(),
                    result.rank_deficient_skipped.to_string(),
                ),
                ("best_support".into(), format!("{:?}", result.best_support)),
            ];
            if let Some(truth_path) = truth {
                let t = sparserc::io::read_matrix_csv(&truth_path)?;
                let true_edges: Vec<(usize, usize)> = t
                    .indexed_iter()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|((i, j), _)| (i, j))
                    .collect();
                summary.push((
                    "matches_truth".into(),
                    (result.best_support == true_edges).to_string(),
                ));
            }
            sparserc::io::write_kv(&out.join("summary.txt"), &summary)?;
            println!(
                "best support {:?} with {} effective root causes ({} DAGs searched)",
                result.best_support, result.best_l0, result.num_dags_enumerated
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics {
            est,
            truth,
            data,
            out,
        } => {
            let est_w = sparserc::io::read_matrix_csv(&est)?;
            let truth_w = sparserc::io::read_matrix_csv(&truth)?;
            let est_bin = sparserc::to_binary(&est_w);
            let truth_bin = sparserc::to_binary(&truth_w);
            let rates = sparserc::edge_rates(&est_bin, &truth_bin)?;
            let edge_count = truth_bin.iter().filter(|v| **v).count();
            let losses = sparserc::weight_losses(&est_w, &truth_w, edge_count.max(1)).ok();
            let varsort = match &data {
                Some(path) => {
                    let x = sparserc::io::read_matrix_csv(path)?;
                    sparserc::varsortability(&x, &truth_bin).ok()
                }
                None => None,
            };
            let report = sparserc::MetricsReport {
                shd: sparserc::shd(&est_bin, &truth_bin)?,
                sid: sparserc::sid(&est_bin, &truth_bin)?,
                tpr: rates.tpr,
                fpr: rates.fpr,
                total_edges: rates.total_edges,
                nmse_weights: losses.map_or(f64::NAN, |l| l.nmse),
                avg_l1: losses.map_or(f64::NAN, |l| l.avg_l1),
                max_l1: losses.map_or(f64::NAN, |l| l.max_l1),
                avg_l2: losses.map_or(f64::NAN, |l| l.avg_l2),
                c_tpr: None,
                c_fpr: None,
                c_nmse: None,
                varsortability: varsort,
                runtime_seconds: 0.0,
            };
            let row = report.to_csv_row("external", 0, truth_bin.nrows(), 0);
            println!("{}", sparserc::MetricsReport::CSV_HEADER);
            println!("{row}");
            if let Some(path) = out {
                std::fs::write(
                    path,
                    format!("{}\n{row}\n", sparserc::MetricsReport::CSV_HEADER),
                )?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
