//! Synthetic data generation through the closed-form linear SEM
//! X = (C + N_c)(I + closure(A)) + N_x, plus the audit of the
//! few-root-causes assumption.

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{transitive_closure, WeightedDag};
use crate::seed::derive_seed;

/// Seed stream tag for the shared support mask in fixed-support mode; row
/// streams use indices 0..n.
const SUPPORT_MASK_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDist {
    Gauss,
    Gumbel,
}

/// Configuration for root-cause sampling and data synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataGenConfig {
    /// Probability that a root-cause entry is nonzero.
    pub p: f64,
    /// Number of samples (rows of X).
    pub n: usize,
    pub noise_dist: NoiseDist,
    /// Standard deviation of both noise matrices.
    pub sigma: f64,
    /// Reuse one Bernoulli support mask for every sample.
    pub fixed_support: bool,
    /// Scale each column of X to unit empirical variance.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for DataGenConfig {
    fn default() -> Self {
        Self {
            p: 0.1,
            n: 1000,
            noise_dist: NoiseDist::Gauss,
            sigma: 0.01,
            fixed_support: false,
            standardize: false,
            seed: 0,
        }
    }
}

impl DataGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::InvalidConfig(format!(
                "root-cause probability must lie in [0, 1), got {}",
                self.p
            )));
        }
        if self.n < 1 {
            return Err(Error::InvalidConfig("sample count must be >= 1".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise deviation must be >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Root causes C together with the two noise matrices, all n x d.
#[derive(Debug, Clone, PartialEq)]
pub struct RootCauses {
    pub c: Array2<f64>,
    pub noise_c: Array2<f64>,
    pub noise_x: Array2<f64>,
}

/// Observed data plus everything needed to evaluate a learner against the
/// generating process.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub ground_truth: Option<WeightedDag>,
    pub root_causes: Option<RootCauses>,
    pub gen_config: Option<DataGenConfig>,
    /// Columns left unscaled by standardization because their empirical
    /// variance was zero.
    pub zero_variance_columns: Vec<usize>,
}

/// Outcome of checking the few-root-causes assumption on realized
/// matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct FrcAudit {
    /// ||C||_0 / nd.
    pub sparsity_ratio: f64,
    /// (||N_c + N_x (I - A)||_1 / nd) / (||C||_1 / ||C||_0). NaN when C
    /// has no nonzero entries.
    pub noise_ratio: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub passes: bool,
}

enum NoiseSampler {
    Zero,
    Gauss(Normal<f64>),
    Gumbel(Gumbel<f64>),
}

impl NoiseSampler {
    fn new(dist: NoiseDist, sigma: f64) -> Self {
        if sigma == 0.0 {
            return Self::Zero;
        }
        match dist {
            NoiseDist::Gauss => Self::Gauss(Normal::new(0.0, sigma).expect("sigma validated")),
            NoiseDist::Gumbel => {
                // Center to mean 0 and scale so the standard deviation is
                // sigma: sd of Gumbel(mu, beta) is pi * beta / sqrt(6) and
                // its mean is mu + gamma * beta.
                const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
                let beta = sigma * 6f64.sqrt() / std::f64::consts::PI;
                let mu = -EULER_GAMMA * beta;
                Self::Gumbel(Gumbel::new(mu, beta).expect("beta positive"))
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Gauss(d) => d.sample(rng),
            Self::Gumbel(d) => d.sample(rng),
        }
    }
}

/// Samples root causes and both noise matrices for the graph `g`.
///
/// Each entry of C is independently nonzero with probability p, with value
/// uniform on (0, 1]; with `fixed_support` a single d-length Bernoulli(p)
/// mask is drawn once and reused for every row. Rows are generated from
/// per-row seed streams, so the output is a pure function of (g.d, cfg).
pub fn sample_root_causes(g: &WeightedDag, cfg: &DataGenConfig) -> Result<RootCauses> {
    cfg.validate()?;
    let (n, d) = (cfg.n, g.d());

    let mask: Option<Vec<bool>> = cfg.fixed_support.then(|| {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SUPPORT_MASK_STREAM));
        (0..d).map(|_| rng.random::<f64>() < cfg.p).collect()
    });
    let sampler = NoiseSampler::new(cfg.noise_dist, cfg.sigma);

    let mut c = Array2::<f64>::zeros((n, d));
    let mut noise_c = Array2::<f64>::zeros((n, d));
    let mut noise_x = Array2::<f64>::zeros((n, d));
    for r in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, r as u64));
        for j in 0..d {
            let on = match &mask {
                Some(m) => m[j],
                None => rng.random::<f64>() < cfg.p,
            };
            if on {
                // 1 - U maps [0, 1) to (0, 1].
                c[[r, j]] = 1.0 - rng.random::<f64>();
            }
        }
        for j in 0..d {
            noise_c[[r, j]] = sampler.sample(&mut rng);
        }
        for j in 0..d {
            noise_x[[r, j]] = sampler.sample(&mut rng);
        }
    }
    Ok(RootCauses { c, noise_c, noise_x })
}

/// Computes X = (C + N_c)(I + closure(A)) + N_x and attaches the ground
/// truth. With `standardize`, each column of X is scaled to unit
/// empirical variance; zero-variance columns are left untouched and
/// recorded.
pub fn synthesize(g: &WeightedDag, rc: &RootCauses, standardize: bool) -> Result<Dataset> {
    let d = g.d();
    if rc.c.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "root causes have {} columns but the graph has {} nodes",
            rc.c.ncols(),
            d
        )));
    }
    if rc.c.dim() != rc.noise_c.dim() || rc.c.dim() != rc.noise_x.dim() {
        return Err(Error::ShapeMismatch(
            "C, N_c and N_x must share the same shape".into(),
        ));
    }

    let transform = Array2::eye(d) + transitive_closure(g);
    let mut x = (&rc.c + &rc.noise_c).dot(&transform) + &rc.noise_x;

    let mut zero_variance_columns = Vec::new();
    if standardize {
        for j in 0..d {
            let var = column_variance(&x, j);
            if var == 0.0 {
                zero_variance_columns.push(j);
            } else {
                let scale = 1.0 / var.sqrt();
                x.column_mut(j).mapv_inplace(|v| v * scale);
            }
        }
    }

    Ok(Dataset {
        x,
        ground_truth: Some(g.clone()),
        root_causes: Some(rc.clone()),
        gen_config: None,
        zero_variance_columns,
    })
}

/// Convenience wrapper: sample root causes, synthesize, and attach the
/// config.
pub fn generate_dataset(g: &WeightedDag, cfg: &DataGenConfig) -> Result<Dataset> {
    let rc = sample_root_causes(g, cfg)?;
    let mut ds = synthesize(g, &rc, cfg.standardize)?;
    ds.gen_config = Some(cfg.clone());
    Ok(ds)
}

/// Population variance of column j.
pub(crate) fn column_variance(x: &Array2<f64>, j: usize) -> f64 {
    let col = x.index_axis(Axis(1), j);
    let n = col.len() as f64;
    let mean = col.sum() / n;
    col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Evaluates both few-root-causes ratios on realized matrices. When C has
/// no nonzero entry the mean nonzero magnitude is undefined: the noise
/// ratio is reported as NaN and the audit fails.
pub fn audit_frc(rc: &RootCauses, g: &WeightedDag, epsilon: f64, delta: f64) -> Result<FrcAudit> {
    let d = g.d();
    if rc.c.ncols() != d || rc.c.dim() != rc.noise_c.dim() || rc.c.dim() != rc.noise_x.dim() {
        return Err(Error::ShapeMismatch(
            "root causes and graph disagree on shape".into(),
        ));
    }
    let (n, _) = rc.c.dim();
    let nd = (n * d) as f64;

    let l0 = rc.c.iter().filter(|v| **v != 0.0).count();
    let sparsity_ratio = l0 as f64 / nd;

    let noise_ratio = if l0 == 0 {
        f64::NAN
    } else {
        let i_minus_a = Array2::eye(d) - g.weights();
        let combined = &rc.noise_c + &rc.noise_x.dot(&i_minus_a);
        let noise_per_entry = combined.iter().map(|v| v.abs()).sum::<f64>() / nd;
        let mean_nonzero = rc.c.iter().map(|v| v.abs()).sum::<f64>() / l0 as f64;
        noise_per_entry / mean_nonzero
    };

    // A NaN ratio fails the strict comparison, as intended.
    let passes = sparsity_ratio < epsilon && noise_ratio < delta;
    Ok(FrcAudit {
        sparsity_ratio,
        noise_ratio,
        epsilon,
        delta,
        passes,
    })
}

/// Analytic expectations for the two audit ratios: the expected sparsity
/// is p, and the expected noise ratio is bounded by
/// (avg_degree + 2) * sigma * sqrt(2/pi) / 0.5, combining the folded-normal
/// mean of each noise entry with the mean nonzero root-cause magnitude 1/2.
pub fn expected_frc_bounds(
    d: usize,
    p: f64,
    sigma: f64,
    avg_degree: f64,
) -> Result<(f64, f64)> {
    if d < 1 {
        return Err(Error::InvalidConfig("node count must be positive".into()));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidConfig("p must lie in [0, 1)".into()));
    }
    if !(sigma >= 0.0) || !(avg_degree >= 0.0) {
        return Err(Error::InvalidConfig(
            "sigma and avg_degree must be nonnegative".into(),
        ));
    }
    let per_entry_noise = (avg_degree + 2.0) * sigma * (2.0 / std::f64::consts::PI).sqrt();
    let mean_nonzero_magnitude = 0.5;
    Ok((p, per_entry_noise / mean_nonzero_magnitude))
}
