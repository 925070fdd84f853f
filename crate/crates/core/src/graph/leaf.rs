use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::variable::{Value, VarId, VarKind, Variable};

/// Univariate distribution held by a leaf node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LeafDistribution {
    /// Degenerate distribution with all mass on one state.
    Indicator { var: VarId, state: usize },
    Categorical { var: VarId, probs: Vec<f64> },
    Gaussian { var: VarId, mean: f64, variance: f64 },
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

impl LeafDistribution {
    pub fn var(&self) -> VarId {
        match self {
            LeafDistribution::Indicator { var, .. }
            | LeafDistribution::Categorical { var, .. }
            | LeafDistribution::Gaussian { var, .. } => *var,
        }
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self, LeafDistribution::Indicator { .. })
    }

    /// Log of the leaf value for the variable's binding; an unbound variable
    /// gives log 1.
    pub fn log_value(&self, value: Option<Value>) -> f64 {
        let Some(value) = value else { return 0.0 };
        match (self, value) {
            (LeafDistribution::Indicator { state, .. }, Value::State(s)) => {
                if s == *state {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            (LeafDistribution::Categorical { probs, .. }, Value::State(s)) => {
                probs.get(s).map_or(f64::NEG_INFINITY, |p| p.ln())
            }
            (LeafDistribution::Gaussian { mean, variance, .. }, Value::Real(x)) => {
                gaussian_log_density(x, *mean, *variance)
            }
            // kind mismatches are rejected before evaluation
            _ => f64::NAN,
        }
    }

    /// Most probable value and its log probability (log density for gaussians).
    /// Ties go to the lowest state index.
    pub fn mode(&self) -> (Value, f64) {
        match self {
            LeafDistribution::Indicator { state, .. } => (Value::State(*state), 0.0),
            LeafDistribution::Categorical { probs, .. } => {
                let mut best = 0;
                for (i, p) in probs.iter().enumerate() {
                    if *p > probs[best] {
                        best = i;
                    }
                }
                (Value::State(best), probs[best].ln())
            }
            LeafDistribution::Gaussian { mean, variance, .. } => {
                (Value::Real(*mean), gaussian_log_density(*mean, *mean, *variance))
            }
        }
    }

    /// States with positive probability, most probable first (ties by index).
    /// Gaussians yield their mode only.
    pub fn ranked_values(&self) -> Vec<(Value, f64)> {
        match self {
            LeafDistribution::Categorical { probs, .. } => {
                let mut ranked: Vec<(Value, f64)> = probs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(i, p)| (Value::State(i), p.ln()))
                    .collect();
                ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
                ranked
            }
            _ => vec![self.mode()],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            LeafDistribution::Indicator { state, .. } => Value::State(*state),
            LeafDistribution::Categorical { probs, .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Value::State(i);
                    }
                }
                // rounding left a sliver above the cumulative sum
                Value::State(probs.iter().rposition(|p| *p > 0.0).unwrap_or(0))
            }
            LeafDistribution::Gaussian { mean, variance, .. } => {
                let normal = Normal::new(*mean, variance.sqrt()).expect("variance checked positive");
                Value::Real(normal.sample(rng))
            }
        }
    }

    /// Describes what is wrong with this leaf relative to the variable list.
    pub fn problems(&self, vars: &[Variable], tolerance: f64) -> Vec<String> {
        let mut out = Vec::new();
        let Some(variable) = vars.get(self.var().0) else {
            out.push(format!("leaf refers to unknown variable {}", self.var()));
            return out;
        };
        match (self, variable.kind()) {
            (LeafDistribution::Indicator { state, .. }, VarKind::Finite(states)) => {
                if *state >= states.len() {
                    out.push(format!("indicator state {state} out of range for `{}`", variable.name()));
                }
            }
            (LeafDistribution::Categorical { probs, .. }, VarKind::Finite(states)) => {
                if probs.len() != states.len() {
                    out.push(format!(
                        "categorical over `{}` has {} probabilities for {} states",
                        variable.name(),
                        probs.len(),
                        states.len()
                    ));
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    out.push("categorical probabilities must be finite and >= 0".into());
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > tolerance {
                    out.push(format!("categorical probabilities sum to {total}"));
                }
            }
            (LeafDistribution::Gaussian { mean, variance, .. }, VarKind::Continuous) => {
                if !mean.is_finite() {
                    out.push("gaussian mean must be finite".into());
                }
                if !(variance.is_finite() && *variance > 0.0) {
                    out.push(format!("gaussian variance must be > 0, got {variance}"));
                }
            }
            (LeafDistribution::Gaussian { .. }, VarKind::Finite(_)) => {
                out.push(format!("gaussian leaf over finite-state variable `{}`", variable.name()));
            }
            (_, VarKind::Continuous) => {
                out.push(format!("discrete leaf over continuous variable `{}`", variable.name()));
            }
        }
        out
    }
}

pub fn gaussian_log_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + variance.ln() + d * d / variance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_values() {
        let leaf = LeafDistribution::Indicator { var: VarId(0), state: 1 };
        assert_eq!(leaf.log_value(None), 0.0);
        assert_eq!(leaf.log_value(Some(Value::State(1))), 0.0);
        assert_eq!(leaf.log_value(Some(Value::State(0))), f64::NEG_INFINITY);
    }

    #[test]
    fn gaussian_density_and_mode() {
        let leaf = LeafDistribution::Gaussian { var: VarId(0), mean: 1.0, variance: 4.0 };
        let expected = (-(0.5f64 * 0.5 * 0.5)).exp() / (2.0 * std::f64::consts::PI * 4.0).sqrt();
        assert!((leaf.log_value(Some(Value::Real(2.0))).exp() - expected).abs() < 1e-15);
        assert_eq!(leaf.mode().0, Value::Real(1.0));
    }

    #[test]
    fn categorical_ranking_breaks_ties_low() {
        let leaf = LeafDistribution::Categorical { var: VarId(0), probs: vec![0.25, 0.5, 0.25, 0.0] };
        let ranked: Vec<_> = leaf.ranked_values().into_iter().map(|(v, _)| v).collect();
        assert_eq!(ranked, vec![Value::State(1), Value::State(0), Value::State(2)]);
    }

    #[test]
    fn problems_reported() {
        let vars = vec![Variable::finite("V", ["a", "b"]).unwrap(), Variable::continuous("X").unwrap()];
        let bad = LeafDistribution::Categorical { var: VarId(0), probs: vec![0.6, 0.6] };
        assert_eq!(bad.problems(&vars, 1e-9).len(), 1);
        let bad = LeafDistribution::Gaussian { var: VarId(1), mean: 0.0, variance: 0.0 };
        assert_eq!(bad.problems(&vars, 1e-9).len(), 1);
        let bad = LeafDistribution::Indicator { var: VarId(1), state: 0 };
        assert_eq!(bad.problems(&vars, 1e-9).len(), 1);
    }
}
