//! Library-level tests of the experiment runner: determinism, aggregate
//! consistency, CSV round trips, sweeps, and timeouts.

use sparserc::SolverConfig;
use sparserc_cli::config::{ExperimentSpec, SweepSpec};
use sparserc_cli::experiment::{generate_to_dir, run_experiment, run_external};
use sparserc_cli::report::{mean_std, parse_runs_csv, RUNS_HEADER};

/// A fast spec for pipeline tests: small graph, trimmed solver budget.
fn tiny_spec(name: &str) -> ExperimentSpec {
    let mut spec = ExperimentSpec {
        name: name.into(),
        repetitions: 1,
        ..ExperimentSpec::default()
    };
    spec.graph.d = 8;
    spec.graph.edges_per_vertex = 2;
    spec.data.n = 150;
    spec.solver = SolverConfig {
        max_inner: 500,
        max_outer: 4,
        ..SolverConfig::default()
    };
    spec
}

/// Strips the runtime column (index 19) from every data row.
fn rows_without_runtime(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split(',')
                .enumerate()
                .filter(|(i, _)| *i != 19)
                .map(|(_, f)| f.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn identical_specs_give_identical_rows_modulo_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_spec("determinism");
    let a = run_experiment(&spec, 2, Some(&dir.path().join("a"))).unwrap();
    let b = run_experiment(&spec, 1, Some(&dir.path().join("b"))).unwrap();
    assert_eq!(a.failed_rows, 0);
    assert_eq!(b.failed_rows, 0);

    let csv_a = std::fs::read_to_string(a.dir.join("runs.csv")).unwrap();
    let csv_b = std::fs::read_to_string(b.dir.join("runs.csv")).unwrap();
    assert!(csv_a.starts_with(RUNS_HEADER));
    assert_eq!(rows_without_runtime(&csv_a), rows_without_runtime(&csv_b));
}

#[test]
fn aggregate_file_matches_recomputation_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny_spec("aggregate");
    spec.repetitions = 3;
    let outcome = run_experiment(&spec, 2, Some(dir.path())).unwrap();

    let rows = parse_runs_csv(&std::fs::read_to_string(outcome.dir.join("runs.csv")).unwrap())
        .unwrap();
    assert_eq!(rows.len(), 3);
    // Rows are ordered by repetition index.
    let reps: Vec<usize> = rows.iter().map(|r| r.rep).collect();
    assert_eq!(reps, vec![0, 1, 2]);

    let shds: Vec<f64> = rows
        .iter()
        .map(|r| r.report.as_ref().unwrap().shd as f64)
        .collect();
    let (expected_mean, expected_std) = mean_std(&shds);

    let aggregate = std::fs::read_to_string(outcome.dir.join("aggregate.csv")).unwrap();
    let shd_line = aggregate
        .lines()
        .find(|l| l.starts_with("shd,"))
        .expect("shd row in aggregate");
    let fields: Vec<&str> = shd_line.split(',').collect();
    let mean: f64 = fields[1].parse().unwrap();
    let std: f64 = fields[2].parse().unwrap();
    assert!((mean - expected_mean).abs() <= 1e-12);
    assert!((std - expected_std).abs() <= 1e-12);
    assert_eq!(fields[3], "3");
}

#[test]
fn external_csv_round_trip_matches_in_process_run() {
    use sparserc::seed::derive_seed;
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_spec("roundtrip");
    let data_dir = dir.path().join("dataset");
    generate_to_dir(&spec, &data_dir).unwrap();

    // In-process pipeline with the same derived seeds.
    let mut graph_cfg = spec.graph.clone();
    graph_cfg.seed = derive_seed(spec.seed, 0);
    let mut data_cfg = spec.data.clone();
    data_cfg.seed = derive_seed(spec.seed, 1);
    let g = sparserc::generate_random_dag(&graph_cfg).unwrap();
    let ds = sparserc::generate_dataset(&g, &data_cfg).unwrap();
    let in_process = sparserc::solve(&ds.x, &spec.solver).unwrap();

    let outcome = run_external(
        &data_dir.join("data.csv"),
        Some(&data_dir.join("truth.csv")),
        &spec.solver,
        &dir.path().join("external"),
    )
    .unwrap();
    let report = outcome.report.expect("metrics with truth provided");

    // The CSV round trip is lossless and the solver is deterministic, so
    // everything except runtime matches bitwise.
    assert_eq!(outcome.result.weights_raw, in_process.weights_raw);
    let est_bin = in_process.weights.binary();
    let truth_bin = g.binary();
    assert_eq!(report.shd, sparserc::shd(&est_bin, &truth_bin).unwrap());
    assert_eq!(report.sid, sparserc::sid(&est_bin, &truth_bin).unwrap());
    let rates = sparserc::edge_rates(&est_bin, &truth_bin).unwrap();
    assert_eq!(report.tpr, rates.tpr);
    assert_eq!(report.total_edges, rates.total_edges);
    let losses =
        sparserc::weight_losses(in_process.weights.weights(), g.weights(), g.edge_count())
            .unwrap();
    assert_eq!(report.nmse_weights, losses.nmse);
    assert_eq!(report.avg_l1, losses.avg_l1);
    assert_eq!(
        report.varsortability,
        Some(sparserc::varsortability(&ds.x, &truth_bin).unwrap())
    );
}

#[test]
fn sweep_improves_with_more_samples() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny_spec("sweep");
    spec.graph.d = 10;
    spec.repetitions = 2;
    spec.solver.max_inner = 1000;
    spec.solver.max_outer = 6;
    spec.sweep = Some(SweepSpec {
        param: "data.n".into(),
        values: vec![100.0, 1000.0],
    });
    let outcome = run_experiment(&spec, 2, Some(dir.path())).unwrap();

    let mean_shd = |suffix: &str| -> f64 {
        let text =
            std::fs::read_to_string(outcome.dir.join(format!("aggregate_{suffix}.csv"))).unwrap();
        let line = text.lines().find(|l| l.starts_with("shd,")).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    let shd_small = mean_shd("100");
    let shd_large = mean_shd("1000");
    assert!(
        shd_large <= shd_small,
        "SHD at n=1000 ({shd_large}) should not exceed SHD at n=100 ({shd_small})"
    );

    assert!(outcome.dir.join("sweep_summary.csv").exists());
    assert!(outcome.dir.join("shd.svg").exists());
    assert!(outcome.dir.join("runtime_s.svg").exists());
    let svg = std::fs::read_to_string(outcome.dir.join("shd.svg")).unwrap();
    assert!(svg.contains("<svg"));
}

#[test]
fn timeouts_are_recorded_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny_spec("timeout");
    spec.repetitions = 2;
    spec.timeout_s = 1e-6;
    let outcome = run_experiment(&spec, 2, Some(dir.path())).unwrap();
    assert_eq!(outcome.failed_rows, 2);

    let rows = parse_runs_csv(&std::fs::read_to_string(outcome.dir.join("runs.csv")).unwrap())
        .unwrap();
    assert!(rows.iter().all(|r| r.status == "timeout"));
    assert!(rows.iter().all(|r| r.report.is_none()));
    // The generated data is audited even when the solve times out.
    assert!(rows.iter().all(|r| r.frc_sparsity.is_some()));
}

#[test]
fn oracle_runs_on_tiny_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny_spec("oracle");
    spec.graph.d = 4;
    spec.graph.edges_per_vertex = 1;
    spec.data.p = 0.3;
    spec.data.sigma = 0.0;
    spec.run_l0_oracle = true;
    let outcome = run_experiment(&spec, 1, Some(dir.path())).unwrap();
    assert_eq!(outcome.failed_rows, 0);
    let csv = std::fs::read_to_string(outcome.dir.join("runs.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let l0_match = row.split(',').last().unwrap();
    assert!(
        l0_match == "true" || l0_match == "false",
        "oracle column should be populated, got {l0_match:?}"
    );
}
