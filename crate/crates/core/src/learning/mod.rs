//! Parameter learning: closed-form MLE for selective networks, gradient
//! ascent and (hard) EM.

mod config;
mod dataset;
mod em;
mod gradient;
mod parallel;
mod stats;

pub use config::{fit, log_likelihood, log_likelihood_with, FitConfig, FitMethod, FitOutcome, TraceRecord};
pub use dataset::Dataset;
pub use em::{em_fit, hard_em_fit, soft_counts, VARIANCE_FLOOR};
pub use gradient::{gd_fit, gradient};
pub use stats::{count_stats_selective, mle_selective, renormalize, weights_from_counts, EdgeMap, SufficientStats};

pub(crate) use stats::check_alpha;
