//! Experiment configuration: a declarative TOML file mirroring the
//! generation, solver, and protocol settings, plus the bundled presets
//! (one per benchmark row, at desk scale).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sparserc::{DataGenConfig, GraphGenConfig, SolverConfig};

/// One experiment: graph family, data generation, solver settings, and
/// the repetition protocol. Per-repetition seeds are derived from `seed`;
/// any seeds inside the nested configs are overwritten by the runner.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub repetitions: usize,
    /// Run the exhaustive L0 search alongside the solver. Automatically
    /// disabled when d exceeds the exhaustive cap.
    pub run_l0_oracle: bool,
    pub output_dir: Option<PathBuf>,
    /// Per-repetition wall-clock limit in seconds.
    pub timeout_s: f64,
    pub graph: GraphGenConfig,
    pub data: DataGenConfig,
    pub solver: SolverConfig,
    pub sweep: Option<SweepSpec>,
}

/// A one-parameter sweep: re-run the whole repetition protocol for each
/// value of the named parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Dotted path of the swept field, e.g. "data.n" or "graph.d".
    pub param: String,
    pub values: Vec<f64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seed: 0,
            repetitions: 5,
            run_l0_oracle: false,
            output_dir: None,
            timeout_s: 600.0,
            graph: GraphGenConfig::default(),
            data: DataGenConfig::default(),
            solver: SolverConfig::default(),
            sweep: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).context("invalid experiment config")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            bail!("repetitions must be >= 1");
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                bail!("sweep.values must not be empty");
            }
            // Reject unknown parameter paths up front.
            let mut probe = self.clone();
            probe.sweep = None;
            probe.set_param(&sweep.param, sweep.values[0])?;
        }
        self.graph
            .validate()
            .map_err(|e| anyhow::anyhow!("graph config: {e}"))?;
        self.data
            .validate()
            .map_err(|e| anyhow::anyhow!("data config: {e}"))?;
        self.solver
            .validate()
            .map_err(|e| anyhow::anyhow!("solver config: {e}"))?;
        Ok(())
    }

    /// Multiplies the node count, the `--scale` knob of the CLI.
    pub fn apply_scale(&mut self, scale: usize) {
        self.graph.d *= scale;
    }

    /// Sets a swept parameter by its dotted path.
    pub fn set_param(&mut self, param: &str, value: f64) -> Result<()> {
        fn as_count(param: &str, value: f64) -> Result<usize> {
            if value.fract() != 0.0 || value < 0.0 {
                bail!("{param} needs a nonnegative integer, got {value}");
            }
            Ok(value as usize)
        }
        match param {
            "graph.d" => self.graph.d = as_count(param, value)?,
            "graph.edges_per_vertex" => {
                self.graph.edges_per_vertex = as_count(param, value)?
            }
            "graph.weight_low" => self.graph.weight_low = value,
            "graph.weight_high" => self.graph.weight_high = value,
            "data.n" => self.data.n = as_count(param, value)?,
            "data.p" => self.data.p = value,
            "data.sigma" => self.data.sigma = value,
            other => bail!("unknown sweep parameter {other:?}"),
        }
        Ok(())
    }
}

/// Bundled benchmark rows (desk scale, d = 20). The files also live under
/// `presets/` for direct `--config` use.
const PRESETS: &[(&str, &str)] = &[
    ("row01_default", include_str!("../presets/row01_default.toml")),
    ("row02_scale_free", include_str!("../presets/row02_scale_free.toml")),
    ("row03_gumbel", include_str!("../presets/row03_gumbel.toml")),
    ("row04_dense_graph", include_str!("../presets/row04_dense_graph.toml")),
    ("row05_standardized", include_str!("../presets/row05_standardized.toml")),
    ("row06_large_weights", include_str!("../presets/row06_large_weights.toml")),
    ("row07_high_noise", include_str!("../presets/row07_high_noise.toml")),
    ("row08_dense_causes", include_str!("../presets/row08_dense_causes.toml")),
    ("row09_few_samples", include_str!("../presets/row09_few_samples.toml")),
    ("row10_fixed_support", include_str!("../presets/row10_fixed_support.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn load_preset(name: &str) -> Result<ExperimentSpec> {
    match PRESETS.iter().find(|(n, _)| *n == name) {
        Some((_, text)) => ExperimentSpec::from_toml_str(text),
        None => bail!(
            "unknown preset {name:?}; available: {}",
            preset_names().join(", ")
        ),
    }
}
