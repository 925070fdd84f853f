//! Sum-product networks: representation and validation, exact inference
//! (marginals, conditionals, MPE, MAX), parameter learning (MLE, gradient
//! descent, EM), augmentation to selectivity, and LearnSPN.

pub mod augment;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod inference;
pub mod io;
pub mod learning;
pub mod logspace;
pub mod structure;

pub use error::{Result, SpnError};
pub use graph::{Assignment, LeafDistribution, Network, Node, NodeId, Value, VarId, VarKind, Variable};
pub use inference::{conditional, evaluate, Probability};
