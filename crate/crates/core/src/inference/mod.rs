//! Upward/downward passes, MPE and MAX search, induced trees and sampling.

mod derivatives;
mod eval;
mod induced;
mod kbt;
mod mpe;
mod sample;

pub use derivatives::{derivatives, DerivativeMap};
pub use eval::{conditional, evaluate, evaluate_all, evaluate_all_pruned, log_likelihood_rows, Evaluation, Probability};
pub use induced::{induced_subgraph, tree_value, InducedTree};
pub use kbt::{max_kbt, MaxResult};
pub use mpe::{map_query, max_log_values, mpe_best_tree, MpeResult};
pub use sample::sample;

pub(crate) use derivatives::downward_pass;
pub(crate) use eval::full_upward_pass;
pub(crate) use mpe::best_child;
