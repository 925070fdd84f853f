use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{Assignment, Network};
use crate::inference::full_upward_pass;

use super::dataset::Dataset;
use super::parallel::map_reduce;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Mle,
    Gd,
    Em,
    HardEm,
}

impl FromStr for FitMethod {
    type Err = SpnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(FitMethod::Mle),
            "gd" => Ok(FitMethod::Gd),
            "em" => Ok(FitMethod::Em),
            "hard-em" => Ok(FitMethod::HardEm),
            other => Err(SpnError::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub method: FitMethod,
    /// γ, gradient descent only.
    pub learning_rate: f64,
    pub epochs: usize,
    /// Rows per update for gradient descent: `None` is full batch, `Some(1)` stochastic.
    pub batch_size: Option<usize>,
    /// Laplace smoothing α.
    pub alpha: f64,
    /// Stop once the largest parameter change of an epoch is below this.
    pub tolerance: f64,
    pub seed: u64,
    /// Re-estimate categorical and gaussian leaves in (hard) EM.
    pub update_leaves: bool,
    /// Worker threads for per-row statistics; 0 uses the global pool. Results
    /// do not depend on it.
    pub threads: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            method: FitMethod::Em,
            learning_rate: 0.01,
            epochs: 100,
            batch_size: None,
            alpha: 0.0,
            tolerance: 1e-6,
            seed: 0,
            update_leaves: true,
            threads: 0,
        }
    }
}

impl FitConfig {
    pub fn new(method: FitMethod) -> Self {
        FitConfig { method, ..FitConfig::default() }
    }

    pub(crate) fn check(&self, rows: usize) -> Result<()> {
        super::stats::check_alpha(self.alpha)?;
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(SpnError::InvalidConfig(format!("learning rate {} must be ≥ 0", self.learning_rate)));
        }
        match self.batch_size {
            Some(0) => return Err(SpnError::InvalidConfig("batch size must be positive".into())),
            Some(b) if b > rows => {
                return Err(SpnError::InvalidConfig(format!("batch size {b} exceeds the {rows} rows")))
            }
            _ => {}
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(SpnError::InvalidConfig("tolerance must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// One line of a training trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub log_likelihood: f64,
    pub max_delta: f64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch {} log_likelihood {:.12e} max_delta {:.6e}", self.epoch, self.log_likelihood, self.max_delta)
    }
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub network: Network,
    /// Starts with epoch 0, the model before any update.
    pub trace: Vec<TraceRecord>,
}

/// L_D = Σ_t ln S(v^t); partial rows contribute their marginal, and the
/// result is `-inf` when some row has zero probability.
pub fn log_likelihood(net: &Network, data: &Dataset) -> Result<f64> {
    log_likelihood_with(net, data, 0)
}

pub fn log_likelihood_with(net: &Network, data: &Dataset, threads: usize) -> Result<f64> {
    let rows = data.rows_for(net)?;
    rows_log_likelihood(net, &rows, threads)
}

pub(crate) fn rows_log_likelihood(net: &Network, rows: &[Assignment], threads: usize) -> Result<f64> {
    for row in rows {
        net.check_assignment(row)?;
    }
    let root = net.root().0;
    let total = map_reduce(
        rows.len(),
        threads,
        |range| {
            let mut s = 0.0;
            for t in range {
                s += full_upward_pass(net, &rows[t])?[root];
            }
            Ok(s)
        },
        |a, b| a + b,
    )?;
    Ok(total.unwrap_or(0.0))
}

/// Runs the method selected in `cfg`.
pub fn fit(net: &Network, data: &Dataset, cfg: &FitConfig) -> Result<FitOutcome> {
    match cfg.method {
        FitMethod::Mle => {
            cfg.check(data.len())?;
            let stats = super::stats::count_stats_with(net, data, cfg.threads)?;
            let mut out = net.clone();
            let delta = super::stats::apply_counts(&mut out, &stats.counts, cfg.alpha)?;
            let trace = vec![
                TraceRecord { epoch: 0, log_likelihood: log_likelihood_with(net, data, cfg.threads)?, max_delta: 0.0 },
                TraceRecord { epoch: 1, log_likelihood: log_likelihood_with(&out, data, cfg.threads)?, max_delta: delta },
            ];
            Ok(FitOutcome { network: out, trace })
        }
        FitMethod::Gd => super::gradient::gd_fit(net, data, cfg),
        FitMethod::Em => super::em::em_fit(net, data, cfg),
        FitMethod::HardEm => super::em::hard_em_fit(net, data, cfg),
    }
}
