use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{Assignment, Network, Node, NodeId};
use crate::logspace::LOG_ZERO;

use super::eval::full_upward_pass;

/// Subgraph selected by a complete configuration: nodes with positive value
/// and positive-weight links, restricted to what the root still reaches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InducedTree {
    pub root: NodeId,
    /// Ascending.
    pub nodes: Vec<NodeId>,
    /// Retained (parent, child) links, ascending.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Retained leaves, ascending.
    pub terminals: Vec<NodeId>,
}

impl InducedTree {
    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.binary_search(&id).is_ok()
    }

    pub fn children_of(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges.iter().filter(move |(p, _)| *p == id).map(|(_, c)| *c)
    }

    /// Every non-root node has one retained parent and every retained sum
    /// node one retained child.
    pub fn is_tree(&self, net: &Network) -> bool {
        let mut parents = vec![0usize; net.len()];
        let mut kids = vec![0usize; net.len()];
        for (p, c) in &self.edges {
            parents[c.0] += 1;
            kids[p.0] += 1;
        }
        self.nodes.iter().all(|&n| {
            let one_parent = if n == self.root { parents[n.0] == 0 } else { parents[n.0] == 1 };
            one_parent && (!net.node(n).is_sum() || kids[n.0] == 1)
        })
    }

    /// Upward pass over the retained sub-network only (weights as in `net`).
    pub fn evaluate_subnetwork(&self, net: &Network, v: &Assignment) -> Result<f64> {
        let order = net.topological_order()?;
        let mut values = vec![LOG_ZERO; net.len()];
        for &id in order.iter().filter(|id| self.contains(**id)) {
            values[id.0] = match net.node(id) {
                Node::Leaf(leaf) => leaf.log_value(v.get(leaf.var())),
                Node::Product { .. } => self.children_of(id).map(|c| values[c.0]).sum(),
                Node::Sum { .. } => crate::logspace::log_sum_exp(
                    self.children_of(id)
                        .map(|c| net.weight(id, c).expect("retained edge").ln() + values[c.0])
                        .collect::<Vec<_>>(),
                ),
            };
        }
        Ok(values[self.root.0])
    }
}

/// Builds the induced subgraph of `v`: drop zero-valued nodes and zero-weight
/// links, then everything no longer reachable from the root.
pub fn induced_subgraph(net: &Network, v: &Assignment) -> Result<InducedTree> {
    net.check_assignment(v)?;
    for var in net.scope_vars()? {
        if !v.is_bound(var) {
            return Err(SpnError::InvalidValue {
                variable: net.variable(var).name().to_string(),
                detail: "induced subgraphs need a complete configuration".into(),
            });
        }
    }
    let values = full_upward_pass(net, v)?;
    let root = net.root();
    if values[root.0] == LOG_ZERO {
        return Err(SpnError::InconsistentEvidence);
    }
    let mut seen = FixedBitSet::with_capacity(net.len());
    let mut edges = BTreeSet::new();
    let mut stack = vec![root];
    seen.insert(root.0);
    while let Some(id) = stack.pop() {
        let node = net.node(id);
        for (k, &c) in node.children().iter().enumerate() {
            let zero_weight = node.weights().is_some_and(|w| w[k] <= 0.0);
            if zero_weight || values[c.0] == LOG_ZERO {
                continue;
            }
            edges.insert((id, c));
            if !seen.contains(c.0) {
                seen.insert(c.0);
                stack.push(c);
            }
        }
    }
    let nodes: Vec<NodeId> = seen.ones().map(NodeId).collect();
    let terminals = nodes.iter().copied().filter(|n| net.node(*n).leaf().is_some()).collect();
    Ok(InducedTree { root, nodes, edges: edges.into_iter().collect(), terminals })
}

/// ∏ retained sum-link weights × ∏ terminal leaf values.
pub fn tree_value(net: &Network, t: &InducedTree, v: &Assignment) -> Result<f64> {
    let mut log = 0.0;
    for &(p, c) in &t.edges {
        if p.0 >= net.len() || !net.node(p).children().contains(&c) {
            return Err(SpnError::Structure { node: p, detail: format!("no link to {}", c.0) });
        }
        if let Some(w) = net.weight(p, c) {
            log += w.ln();
        }
    }
    for &n in &t.terminals {
        let leaf = net
            .node(n)
            .leaf()
            .ok_or_else(|| SpnError::Structure { node: n, detail: "terminal is not a leaf".into() })?;
        log += leaf.log_value(v.get(leaf.var()));
    }
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, one_based as n};
    use crate::graph::Variable;

    #[test]
    fn thick_tree() {
        let net = fixtures::running_example();
        let v = net.parse_assignment("A=+a,B=+b,C=¬c").unwrap();
        let t = induced_subgraph(&net, &v).unwrap();
        let mut expected: Vec<_> =
            [(1, 2), (2, 4), (2, 6), (6, 8), (8, 12), (8, 14), (14, 18)].iter().map(|&(p, c)| (n(p), n(c))).collect();
        expected.sort();
        assert_eq!(t.edges, expected);
        assert_eq!(t.terminals, vec![n(4), n(12), n(18)]);
        assert!(t.is_tree(&net));
        assert!((tree_value(&net, &t, &v).unwrap() - 0.108).abs() < 1e-15);
        assert!((t.evaluate_subnetwork(&net, &v).unwrap().exp() - 0.108).abs() < 1e-15);
    }

    #[test]
    fn single_leaf() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let net = Network::new(vars, vec![Node::categorical(0, vec![0.3, 0.7])], NodeId(0)).unwrap();
        let v = net.parse_assignment("V=¬v").unwrap();
        let t = induced_subgraph(&net, &v).unwrap();
        assert_eq!(t.nodes, vec![NodeId(0)]);
        assert!(t.edges.is_empty());
        assert!((tree_value(&net, &t, &v).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn foreign_edge_is_rejected() {
        let net = fixtures::running_example();
        let v = net.parse_assignment("A=+a,B=+b,C=¬c").unwrap();
        let mut t = induced_subgraph(&net, &v).unwrap();
        t.edges.push((n(1), n(18)));
        assert!(matches!(tree_value(&net, &t, &v), Err(SpnError::Structure { .. })));
    }
}
