//! LearnSPN: recursive variable splitting (G-test) and instance clustering
//! (hard-EM naive Bayes).

mod cluster;
mod gtest;
mod learnspn;
mod slice;

pub use cluster::{cluster_instances, Clustering, MAX_CLUSTER_ITERATIONS};
pub use gtest::{dependent, g_statistic, split_variables};
pub use learnspn::{fit_univariate, learn_spn, naive_factorization};
pub use slice::{DataSlice, LearnConfig};
