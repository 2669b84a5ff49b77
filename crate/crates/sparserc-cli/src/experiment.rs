//! Experiment orchestration: seeded repetitions in a worker pool, CSV
//! reports, aggregates, sweep plots, and the external-data entry point.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{Context, Result};
use ndarray::Array2;
use rayon::prelude::*;
use sparserc::seed::derive_seed;
use sparserc::{
    audit_frc, edge_rates, generate_random_dag, recover_root_causes, sample_root_causes, shd,
    sid, solve, solve_l0, synthesize, to_binary, varsortability, weight_losses, Dataset, Error,
    MetricsReport, SolveResult, SolverConfig, WeightedDag,
};

use crate::config::ExperimentSpec;
use crate::plot::line_chart_svg;
use crate::report::{
    aggregate, aggregate_to_csv, record_to_row, RepRecord, RepStatus, RUNS_HEADER,
};

/// Default audit thresholds recorded with every repetition.
const AUDIT_EPSILON: f64 = 0.1;
const AUDIT_DELTA: f64 = 0.1;
/// Root-cause support cutoff as a fraction of the largest magnitude.
const SUPPORT_FRAC: f64 = 0.1;

pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub failed_rows: usize,
}

/// Runs the full repetition protocol (and sweep, when present) of `spec`
/// with a pool of `jobs` workers, writing one CSV row per repetition, an
/// aggregate per sweep point, and SVG plots across sweep points.
pub fn run_experiment(
    spec: &ExperimentSpec,
    jobs: usize,
    out_override: Option<&Path>,
) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&spec.name));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let points: Vec<(Option<f64>, ExperimentSpec)> = match &spec.sweep {
        None => vec![(None, spec.clone())],
        Some(sweep) => sweep
            .values
            .iter()
            .map(|&v| {
                let mut point = spec.clone();
                point.sweep = None;
                point.set_param(&sweep.param, v)?;
                Ok((Some(v), point))
            })
            .collect::<Result<_>>()?,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("cannot build worker pool")?;

    let mut failed_rows = 0usize;
    let mut sweep_stats: Vec<(f64, Vec<(&'static str, f64, f64, usize)>)> = Vec::new();

    for (value, point) in &points {
        let suffix = value.map_or_else(String::new, |v| format!("_{}", fmt_value(v)));
        let auto_oracle = point.run_l0_oracle
            && point.graph.d <= sparserc::exact_l0::MAX_EXHAUSTIVE_NODES;

        // Workers announce results through a reorder buffer guarded by one
        // writer lock, so rows land in repetition order regardless of
        // which worker finishes first.
        let runs_path = dir.join(format!("runs{suffix}.csv"));
        let writer = Mutex::new(OrderedWriter::create(&runs_path, RUNS_HEADER)?);
        let records: Vec<RepRecord> = pool.install(|| {
            (0..point.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let record = run_single_rep(point, rep, auto_oracle);
                    writer
                        .lock()
                        .unwrap()
                        .submit(rep, record_to_row(&record))
                        .expect("write runs.csv");
                    record
                })
                .collect()
        });
        writer.into_inner().unwrap().finish()?;

        failed_rows += records
            .iter()
            .filter(|r| r.status != RepStatus::Ok)
            .count();

        let stats = aggregate(&records);
        fs::write(
            dir.join(format!("aggregate{suffix}.csv")),
            aggregate_to_csv(&stats),
        )?;
        if let Some(v) = value {
            sweep_stats.push((*v, stats));
        }
    }

    if let Some(sweep) = &spec.sweep {
        write_sweep_outputs(&dir, &sweep.param, &sweep_stats)?;
    }

    let summary: Vec<(String, String)> = vec![
        ("name".into(), spec.name.clone()),
        ("seed".into(), spec.seed.to_string()),
        ("repetitions".into(), spec.repetitions.to_string()),
        ("sweep_points".into(), points.len().to_string()),
        ("failed_rows".into(), failed_rows.to_string()),
    ];
    sparserc::io::write_kv(&dir.join("summary.txt"), &summary)?;

    Ok(ExperimentOutcome { dir, failed_rows })
}

fn fmt_value(v: f64) -> String {
    let s = format!("{v}");
    s.replace('.', "_").replace('-', "m")
}

fn write_sweep_outputs(
    dir: &Path,
    param: &str,
    stats: &[(f64, Vec<(&'static str, f64, f64, usize)>)],
) -> Result<()> {
    if stats.is_empty() {
        return Ok(());
    }
    let metric_names: Vec<&'static str> = stats[0].1.iter().map(|(n, ..)| *n).collect();

    let mut csv = String::from("value");
    for name in &metric_names {
        csv.push_str(&format!(",{name}_mean,{name}_std"));
    }
    csv.push('\n');
    for (value, row) in stats {
        csv.push_str(&value.to_string());
        for (_, mean, std, count) in row {
            if *count == 0 {
                csv.push_str(",na,na");
            } else {
                csv.push_str(&format!(",{mean},{std}"));
            }
        }
        csv.push('\n');
    }
    fs::write(dir.join("sweep_summary.csv"), csv)?;

    for (idx, name) in metric_names.iter().enumerate() {
        let points: Vec<(f64, f64, f64)> = stats
            .iter()
            .map(|(value, row)| {
                let (_, mean, std, count) = row[idx];
                if count == 0 {
                    (*value, f64::NAN, 0.0)
                } else {
                    (*value, mean, std)
                }
            })
            .collect();
        let svg = line_chart_svg(name, param, name, &points);
        fs::write(dir.join(format!("{name}.svg")), svg)?;
    }
    Ok(())
}

/// Appends rows in index order, buffering any that arrive early.
struct OrderedWriter {
    file: fs::File,
    next: usize,
    pending: std::collections::BTreeMap<usize, String>,
}

impl OrderedWriter {
    fn create(path: &Path, header: &str) -> Result<Self> {
        let mut file = fs::File::create(path)?;
        writeln!(file, "{header}")?;
        Ok(Self {
            file,
            next: 0,
            pending: Default::default(),
        })
    }

    fn submit(&mut self, index: usize, row: String) -> Result<()> {
        self.pending.insert(index, row);
        while let Some(row) = self.pending.remove(&self.next) {
            writeln!(self.file, "{row}")?;
            self.next += 1;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        assert!(self.pending.is_empty(), "rows missing from the reorder buffer");
        self.file.flush()?;
        Ok(())
    }
}

/// One repetition end to end: derive seeds, generate, solve, evaluate.
/// Solver and metric failures are recorded in the row status without
/// aborting the remaining repetitions.
fn run_single_rep(spec: &ExperimentSpec, rep: usize, run_oracle: bool) -> RepRecord {
    let rep_seed = derive_seed(spec.seed, rep as u64);
    let mut graph_cfg = spec.graph.clone();
    graph_cfg.seed = derive_seed(rep_seed, 0);
    let mut data_cfg = spec.data.clone();
    data_cfg.seed = derive_seed(rep_seed, 1);
    let mut solver_cfg = spec.solver.clone();
    solver_cfg.seed = derive_seed(rep_seed, 2);
    if solver_cfg.time_limit_s.is_none() {
        solver_cfg.time_limit_s = Some(spec.timeout_s);
    }

    let mut record = RepRecord {
        rep,
        status: RepStatus::Ok,
        seed: rep_seed,
        d: spec.graph.d,
        n: spec.data.n,
        report: None,
        frc: None,
        l0_match: None,
    };

    let outcome = (|| -> std::result::Result<(), Error> {
        let g = generate_random_dag(&graph_cfg)?;
        let rc = sample_root_causes(&g, &data_cfg)?;
        let ds = synthesize(&g, &rc, data_cfg.standardize)?;
        record.frc = Some(audit_frc(&rc, &g, AUDIT_EPSILON, AUDIT_DELTA)?);

        let result = solve(&ds.x, &solver_cfg)?;
        record.report = Some(evaluate(&g, &ds, &result)?);

        if run_oracle {
            let oracle = solve_l0(&ds.x, sparserc::exact_l0::DEFAULT_ZERO_TOL)?;
            let truth: Vec<(usize, usize)> =
                g.edges().iter().map(|&(i, j, _)| (i, j)).collect();
            record.l0_match = Some(oracle.best_support == truth);
        }
        Ok(())
    })();

    if let Err(e) = outcome {
        record.status = match e {
            Error::TimedOut { .. } => RepStatus::Timeout,
            other => RepStatus::Error(other.to_string()),
        };
        record.report = None;
    }
    record
}

/// Full metric evaluation of a solve result against the generating
/// ground truth.
fn evaluate(g: &WeightedDag, ds: &Dataset, result: &SolveResult) -> sparserc::Result<MetricsReport> {
    let est_bin = result.weights.binary();
    let truth_bin = g.binary();
    let structural = shd(&est_bin, &truth_bin)?;
    let interventional = sid(&est_bin, &truth_bin)?;
    let rates = edge_rates(&est_bin, &truth_bin)?;
    let losses = weight_losses(result.weights.weights(), g.weights(), g.edge_count())?;
    let varsort = varsortability(&ds.x, &truth_bin)?;

    let (c_tpr, c_fpr, c_nmse) = match &ds.root_causes {
        Some(rc) => {
            let c_est = recover_root_causes(&ds.x, &result.weights)?;
            let (tpr, fpr, nmse) = sparserc::root_cause_metrics(&c_est, &rc.c, SUPPORT_FRAC)?;
            (Some(tpr), Some(fpr), Some(nmse))
        }
        None => (None, None, None),
    };

    Ok(MetricsReport {
        shd: structural,
        sid: interventional,
        tpr: rates.tpr,
        fpr: rates.fpr,
        total_edges: rates.total_edges,
        nmse_weights: losses.nmse,
        avg_l1: losses.avg_l1,
        max_l1: losses.max_l1,
        avg_l2: losses.avg_l2,
        c_tpr,
        c_fpr,
        c_nmse,
        varsortability: Some(varsort),
        runtime_seconds: result.runtime_seconds,
    })
}

pub struct ExternalOutcome {
    pub dir: PathBuf,
    pub result: SolveResult,
    pub report: Option<MetricsReport>,
    pub n: usize,
}

/// Solves an external dataset from CSV; when a ground-truth adjacency is
/// supplied, the full report is computed against it.
pub fn run_external(
    data_csv: &Path,
    truth_csv: Option<&Path>,
    solver_cfg: &SolverConfig,
    out_dir: &Path,
) -> Result<ExternalOutcome> {
    let x = sparserc::io::read_matrix_csv(data_csv)
        .with_context(|| format!("reading {}", data_csv.display()))?;
    let truth = truth_csv
        .map(|p| -> Result<Array2<f64>> {
            let t = sparserc::io::read_matrix_csv(p)
                .with_context(|| format!("reading {}", p.display()))?;
            if t.nrows() != x.ncols() || t.ncols() != x.ncols() {
                return Err(Error::ShapeMismatch(format!(
                    "truth is {}x{} but data has {} columns",
                    t.nrows(),
                    t.ncols(),
                    x.ncols()
                ))
                .into());
            }
            Ok(t)
        })
        .transpose()?;

    fs::create_dir_all(out_dir)?;
    let result = solve(&x, solver_cfg)?;

    sparserc::io::write_matrix_csv(&out_dir.join("estimate_raw.csv"), &result.weights_raw)?;
    sparserc::io::write_matrix_csv(&out_dir.join("estimate.csv"), result.weights.weights())?;
    sparserc::io::write_edge_list(&out_dir.join("estimate_edges.txt"), result.weights.weights())?;

    let mut trace = String::from("iter,loss,h,rho\n");
    for point in &result.objective_trace {
        trace.push_str(&format!(
            "{},{},{},{}\n",
            point.iter, point.loss, point.h, point.rho
        ));
    }
    fs::write(out_dir.join("trace.csv"), trace)?;

    let report = match &truth {
        Some(t) => {
            let truth_bin = to_binary(t);
            let est_bin = result.weights.binary();
            let edge_count = truth_bin.iter().filter(|v| **v).count();
            let losses = weight_losses(result.weights.weights(), t, edge_count.max(1)).ok();
            let rates = edge_rates(&est_bin, &truth_bin)?;
            let report = MetricsReport {
                shd: shd(&est_bin, &truth_bin)?,
                sid: sid(&est_bin, &truth_bin).unwrap_or(None),
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
                varsortability: varsortability(&x, &truth_bin).ok(),
                runtime_seconds: result.runtime_seconds,
            };
            let mut csv = format!("{}\n", MetricsReport::CSV_HEADER);
            csv.push_str(&report.to_csv_row(
                "sparserc",
                solver_cfg.seed,
                x.ncols(),
                x.nrows(),
            ));
            csv.push('\n');
            fs::write(out_dir.join("metrics.csv"), csv)?;
            Some(report)
        }
        None => None,
    };

    let summary: Vec<(String, String)> = vec![
        ("data".into(), data_csv.display().to_string()),
        ("n".into(), x.nrows().to_string()),
        ("d".into(), x.ncols().to_string()),
        ("runtime_s".into(), result.runtime_seconds.to_string()),
        ("converged".into(), result.converged.to_string()),
        ("cycle_repairs".into(), result.cycle_repairs.to_string()),
        ("edges".into(), result.weights.edge_count().to_string()),
        ("lambda".into(), solver_cfg.lambda.to_string()),
        ("learning_rate".into(), solver_cfg.learning_rate.to_string()),
        ("omega".into(), solver_cfg.omega.to_string()),
        ("max_outer".into(), solver_cfg.max_outer.to_string()),
        ("max_inner".into(), solver_cfg.max_inner.to_string()),
        ("h_tol".into(), solver_cfg.h_tol.to_string()),
        ("seed".into(), solver_cfg.seed.to_string()),
    ];
    sparserc::io::write_kv(&out_dir.join("summary.txt"), &summary)?;

    Ok(ExternalOutcome {
        dir: out_dir.to_path_buf(),
        result,
        report,
        n: x.nrows(),
    })
}

/// Generates a dataset to disk: data CSV, key=value metadata sidecar,
/// ground-truth adjacency (CSV and edge list), and the root causes.
pub fn generate_to_dir(spec: &ExperimentSpec, out_dir: &Path) -> Result<PathBuf> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut graph_cfg = spec.graph.clone();
    graph_cfg.seed = derive_seed(spec.seed, 0);
    let mut data_cfg = spec.data.clone();
    data_cfg.seed = derive_seed(spec.seed, 1);

    let g = generate_random_dag(&graph_cfg)?;
    let rc = sample_root_causes(&g, &data_cfg)?;
    let ds = synthesize(&g, &rc, data_cfg.standardize)?;

    sparserc::io::write_matrix_csv(&out_dir.join("data.csv"), &ds.x)?;
    sparserc::io::write_matrix_csv(&out_dir.join("truth.csv"), g.weights())?;
    sparserc::io::write_edge_list(&out_dir.join("truth_edges.txt"), g.weights())?;
    sparserc::io::write_matrix_csv(&out_dir.join("root_causes.csv"), &rc.c)?;

    let meta: Vec<(String, String)> = vec![
        ("name".into(), spec.name.clone()),
        ("base_seed".into(), spec.seed.to_string()),
        ("graph_seed".into(), graph_cfg.seed.to_string()),
        ("data_seed".into(), data_cfg.seed.to_string()),
        ("d".into(), graph_cfg.d.to_string()),
        ("graph_type".into(), format!("{:?}", graph_cfg.graph_type)),
        ("edges_per_vertex".into(), graph_cfg.edges_per_vertex.to_string()),
        ("weight_low".into(), graph_cfg.weight_low.to_string()),
        ("weight_high".into(), graph_cfg.weight_high.to_string()),
        ("p".into(), data_cfg.p.to_string()),
        ("n".into(), data_cfg.n.to_string()),
        ("noise_dist".into(), format!("{:?}", data_cfg.noise_dist)),
        ("sigma".into(), data_cfg.sigma.to_string()),
        ("fixed_support".into(), data_cfg.fixed_support.to_string()),
        ("standardize".into(), data_cfg.standardize.to_string()),
        ("edges".into(), g.edge_count().to_string()),
    ];
    sparserc::io::write_kv(&out_dir.join("meta.txt"), &meta)?;
    Ok(out_dir.to_path_buf())
}
