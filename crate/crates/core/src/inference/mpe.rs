use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{known_selective, Assignment, Network, Node, NodeId, VarId};
use crate::logspace::{ln_weight, LOG_ZERO};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpeResult {
    /// Values for the scope variables not bound by the evidence.
    pub assignment: Assignment,
    /// ln S^max(e).
    pub log_value: f64,
    /// True when the network is known to be selective, so the best tree is
    /// the exact MPE; otherwise the answer is an approximation.
    pub exact: bool,
}

impl MpeResult {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Max-product upward pass: sums become weighted maxima and a leaf over an
/// unbound variable takes its mode value.
pub fn max_log_values(net: &Network, e: &Assignment) -> Result<Vec<f64>> {
    net.check_assignment(e)?;
    let order = net.topological_order()?;
    let mut values = vec![LOG_ZERO; net.len()];
    for &id in order {
        values[id.0] = match net.node(id) {
            Node::Leaf(leaf) => match e.get(leaf.var()) {
                Some(v) => leaf.log_value(Some(v)),
                None => leaf.mode().1,
            },
            Node::Product { children } => children.iter().map(|c| values[c.0]).sum(),
            Node::Sum { children, weights } => {
                best_child(children, weights, &values).map_or(LOG_ZERO, |(_, v)| v)
            }
        };
    }
    Ok(values)
}

/// Child maximizing `ln w + value`; ties go to the lowest node id. `None`
/// when every child contributes zero.
pub(crate) fn best_child(children: &[NodeId], weights: &[f64], values: &[f64]) -> Option<(NodeId, f64)> {
    let mut best: Option<(NodeId, f64)> = None;
    for (c, w) in children.iter().zip(weights) {
        let v = ln_weight(*w) + values[c.0];
        if v == LOG_ZERO {
            continue;
        }
        best = match best {
            Some((b, bv)) if bv > v || (bv == v && b < *c) => Some((b, bv)),
            _ => Some((*c, v)),
        };
    }
    best
}

/// Best-tree MPE: the max-product pass followed by backtracking from the root.
pub fn mpe_best_tree(net: &Network, e: &Assignment) -> Result<MpeResult> {
    let values = max_log_values(net, e)?;
    let root = net.root();
    if values[root.0] == LOG_ZERO {
        return Err(SpnError::NoExplanation);
    }
    let mut assignment = Assignment::empty();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        match net.node(id) {
            Node::Leaf(leaf) => {
                let var = leaf.var();
                if !e.is_bound(var) && !assignment.is_bound(var) {
                    assignment.set(var, leaf.mode().0);
                }
            }
            Node::Product { children } => stack.extend(children.iter().rev()),
            Node::Sum { children, weights } => {
                let (c, _) = best_child(children, weights, &values).expect("positive node has a positive child");
                stack.push(c);
            }
        }
    }
    Ok(MpeResult { assignment, log_value: values[root.0], exact: known_selective(net)? })
}

/// MAP over `query` given `e`. Only the case with no hidden variables (which
/// is MPE) is supported.
pub fn map_query(net: &Network, query: &[VarId], e: &Assignment) -> Result<MpeResult> {
    let hidden: Vec<&str> = net
        .scope_vars()?
        .into_iter()
        .filter(|v| !query.contains(v) && !e.is_bound(*v))
        .map(|v| net.variable(v).name())
        .collect();
    if !hidden.is_empty() {
        return Err(SpnError::Unsupported(format!(
            "MAP with hidden variables ({}) is not implemented",
            hidden.join(", ")
        )));
    }
    mpe_best_tree(net, e)
}
