//! Learning weighted DAGs from data generated by linear structural
//! equation models with few root causes.
//!
//! The library covers the full pipeline:
//!
//! - [`graph`]: weighted-DAG representation, random DAG generation,
//!   transitive closure, acyclicity checks, thresholding;
//! - [`datagen`]: the closed-form SEM data generator
//!   X = (C + N_c)(I + closure(A)) + N_x and the few-root-causes audit;
//! - [`solver`]: the continuous learner minimizing
//!   (1/2n)||X(I - A)||_1 + lambda ||A||_1 under the trace-exponential
//!   acyclicity constraint, plus root-cause reconstruction;
//! - [`exact_l0`]: an exhaustive L0 oracle for up to five nodes;
//! - [`metrics`]: SHD, SID, edge rates, weight losses, varsortability,
//!   and root-cause recovery scores;
//! - [`io`]: CSV and key=value serialization shared with the benchmark
//!   CLI.

pub mod datagen;
pub mod error;
pub mod exact_l0;
pub mod expm;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod seed;
pub mod solver;

pub use datagen::{
    audit_frc, expected_frc_bounds, generate_dataset, sample_root_causes, synthesize,
    DataGenConfig, Dataset, FrcAudit, NoiseDist, RootCauses,
};
pub use error::{Error, Result};
pub use exact_l0::{enumerate_dags, solve_l0, L0Result};
pub use graph::{
    generate_random_dag, is_acyclic, threshold, transitive_closure, GraphGenConfig, GraphType,
    WeightedDag,
};
pub use metrics::{
    edge_rates, root_cause_metrics, shd, sid, to_binary, varsortability, weight_losses,
    EdgeRates, MetricsReport, WeightLosses,
};
pub use solver::{
    acyclicity_h, objective, recover_root_causes, solve, PenaltyMode, SolveResult, SolverConfig,
};
