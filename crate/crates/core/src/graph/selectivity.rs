use serde::{Deserialize, Serialize};

use super::{detect_represented_variable, enumerate_configurations, Assignment, Network, NodeId};
use crate::error::{Result, SpnError};
use crate::inference::full_upward_pass;

/// Maximum number of complete configurations enumerated by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectivityMode {
    /// Sufficient condition: every sum node represents a variable.
    Structural,
    /// Direct check over every complete configuration, up to `cap` of them.
    Exhaustive { cap: usize },
}

impl SelectivityMode {
    pub fn exhaustive() -> Self {
        SelectivityMode::Exhaustive { cap: DEFAULT_ENUMERATION_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SelectivityVerdict {
    Selective,
    NotSelective { node: NodeId, witness: Assignment },
    /// Structural mode could not decide; `node` represents no variable.
    Unknown { node: NodeId },
}

impl SelectivityVerdict {
    pub fn is_selective(&self) -> bool {
        matches!(self, SelectivityVerdict::Selective)
    }
}

/// Complete configurations of the network scope, if enumerable under `cap`.
pub(crate) fn scope_configurations(net: &Network, cap: usize) -> Result<Vec<Assignment>> {
    let vars = net.scope_vars()?;
    let mut count: usize = 1;
    for v in &vars {
        let var = net.variable(*v);
        let k = var.num_states().ok_or_else(|| {
            SpnError::NotEnumerable(format!("variable `{}` is continuous", var.name()))
        })?;
        count = count
            .checked_mul(k)
            .filter(|c| *c <= cap)
            .ok_or_else(|| SpnError::NotEnumerable(format!("more than {cap} configurations")))?;
    }
    enumerate_configurations(net.variables(), &vars)
}

/// Sum nodes with two or more positive children for some configuration, each
/// with the first witness found.
fn exhaustive_violations(net: &Network, cap: usize, stop_at_first: bool) -> Result<Vec<(NodeId, Assignment)>> {
    let configs = scope_configurations(net, cap)?;
    let order = net.topological_order()?;
    let sums: Vec<NodeId> = order.iter().copied().filter(|&i| net.node(i).is_sum()).collect();
    let mut found: Vec<(NodeId, Assignment)> = Vec::new();
    for v in configs {
        let values = full_upward_pass(net, &v)?;
        for &id in &sums {
            if found.iter().any(|(n, _)| *n == id) {
                continue;
            }
            let positive = net
                .node(id)
                .children()
                .iter()
                .filter(|c| values[c.0] > f64::NEG_INFINITY)
                .count();
            if positive > 1 {
                found.push((id, v.clone()));
                if stop_at_first {
                    return Ok(found);
                }
            }
        }
    }
    found.sort_by_key(|(n, _)| *n);
    Ok(found)
}

pub fn selectivity_check(net: &Network, mode: SelectivityMode) -> Result<SelectivityVerdict> {
    match mode {
        SelectivityMode::Structural => {
            net.topological_order()?;
            for id in net.sum_nodes().filter(|&i| net.is_reachable(i)) {
                if detect_represented_variable(net, id)?.is_none() {
                    return Ok(SelectivityVerdict::Unknown { node: id });
                }
            }
            Ok(SelectivityVerdict::Selective)
        }
        SelectivityMode::Exhaustive { cap } => {
            Ok(match exhaustive_violations(net, cap, true)?.into_iter().next() {
                None => SelectivityVerdict::Selective,
                Some((node, witness)) => SelectivityVerdict::NotSelective { node, witness },
            })
        }
    }
}

/// Reachable sum nodes that are not known to be selective: decided exhaustively
/// when the scope is enumerable under `cap`, otherwise every node that does not
/// represent a variable.
pub fn non_selective_nodes(net: &Network, cap: usize) -> Result<Vec<NodeId>> {
    match exhaustive_violations(net, cap, false) {
        Ok(found) => Ok(found.into_iter().map(|(n, _)| n).collect()),
        Err(SpnError::NotEnumerable(_)) => {
            let mut out = Vec::new();
            for id in net.sum_nodes().filter(|&i| net.is_reachable(i)) {
                if detect_represented_variable(net, id)?.is_none() {
                    out.push(id);
                }
            }
            Ok(out)
        }
        Err(e) => Err(e),
    }
}

/// True when selectivity can be established, exhaustively or structurally.
pub(crate) fn known_selective(net: &Network) -> Result<bool> {
    if selectivity_check(net, SelectivityMode::Structural)?.is_selective() {
        return Ok(true);
    }
    match selectivity_check(net, SelectivityMode::exhaustive()) {
        Ok(v) => Ok(v.is_selective()),
        Err(SpnError::NotEnumerable(_)) => Ok(false),
        Err(e) => Err(e),
    }
}
