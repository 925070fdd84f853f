use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{Value, VarId};
use crate::learning::Dataset;

/// A view of some rows and some variables of a dataset.
#[derive(Clone, Debug)]
pub struct DataSlice<'a> {
    pub data: &'a Dataset,
    pub rows: Vec<usize>,
    pub vars: Vec<VarId>,
}

impl<'a> DataSlice<'a> {
    /// The whole dataset.
    pub fn full(data: &'a Dataset) -> Self {
        DataSlice { data, rows: (0..data.len()).collect(), vars: (0..data.variables().len()).map(VarId).collect() }
    }

    pub fn with_rows(&self, rows: Vec<usize>) -> Self {
        DataSlice { data: self.data, rows, vars: self.vars.clone() }
    }

    pub fn with_vars(&self, vars: Vec<VarId>) -> Self {
        DataSlice { data: self.data, rows: self.rows.clone(), vars }
    }

    pub fn values(&self, var: VarId) -> impl Iterator<Item = Option<Value>> + '_ {
        self.rows.iter().map(move |&r| self.data.rows()[r].get(var))
    }

    /// Discrete codes for a column: the state index for finite variables,
    /// above/below the slice median for continuous ones; `None` when missing.
    pub fn codes(&self, var: VarId) -> Vec<Option<usize>> {
        if self.data.variables()[var.0].is_finite() {
            return self.values(var).map(|v| v.and_then(Value::state)).collect();
        }
        let mut observed: Vec<f64> = self.values(var).flatten().filter_map(Value::real).collect();
        if observed.is_empty() {
            return vec![None; self.rows.len()];
        }
        observed.sort_by(f64::total_cmp);
        let n = observed.len();
        let median = if n % 2 == 1 { observed[n / 2] } else { 0.5 * (observed[n / 2 - 1] + observed[n / 2]) };
        self.values(var).map(|v| v.and_then(Value::real).map(|x| usize::from(x > median))).collect()
    }

    /// Number of distinct codes a column can take.
    pub fn arity(&self, var: VarId) -> usize {
        self.data.variables()[var.0].num_states().unwrap_or(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    /// m: slices with fewer rows are factorized without further splitting.
    pub min_instances: usize,
    /// α, Laplace smoothing of the leaves.
    pub alpha: f64,
    /// Significance level of the G-test.
    pub p_value: f64,
    /// Initial cluster count (capped by the row count).
    pub max_clusters: usize,
    /// Two-way splits only: two clusters, and one variable group against the rest.
    pub binary_splits: bool,
    pub seed: u64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig { min_instances: 10, alpha: 0.1, p_value: 0.05, max_clusters: 4, binary_splits: false, seed: 0 }
    }
}

impl LearnConfig {
    pub fn check(&self) -> Result<()> {
        if self.min_instances < 2 {
            return Err(SpnError::InvalidConfig("m must be at least 2".into()));
        }
        crate::learning::check_alpha(self.alpha)?;
        if !(self.p_value > 0.0 && self.p_value < 1.0) {
            return Err(SpnError::InvalidConfig(format!("p = {} is not in (0, 1)", self.p_value)));
        }
        if self.max_clusters < 2 {
            return Err(SpnError::InvalidConfig("at least two clusters are needed".into()));
        }
        Ok(())
    }
}
