use serde::{Deserialize, Serialize};

use super::{LeafDistribution, Network, Node, NodeId, VarId};
use crate::error::{Result, SpnError};

/// A sum node whose children are in bijection with the states of a variable
/// through attached indicators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub var: VarId,
    /// `mapping[j]` is the child associated with state `j`.
    pub mapping: Vec<NodeId>,
    /// Further variables the node also represents (later in declaration order).
    pub ties: Vec<VarId>,
}

/// Indicator tags `(var, state)` carried by a child of a sum node: the child
/// itself when it is an indicator, otherwise the indicator children of a
/// product child.
fn indicator_tags(net: &Network, child: NodeId) -> Vec<(VarId, usize)> {
    let as_tag = |n: NodeId| match net.node(n) {
        Node::Leaf(LeafDistribution::Indicator { var, state }) => Some((*var, *state)),
        _ => None,
    };
    match net.node(child) {
        Node::Leaf(_) => as_tag(child).into_iter().collect(),
        Node::Product { children } => children.iter().filter_map(|&c| as_tag(c)).collect(),
        Node::Sum { .. } => Vec::new(),
    }
}

/// Tries to match every state of `var` to a distinct child carrying its indicator.
fn match_states(tags: &[Vec<(VarId, usize)>], var: VarId, m: usize) -> Option<Vec<usize>> {
    // candidates[j] = children carrying I_{v_j}
    let candidates: Vec<Vec<usize>> = (0..m)
        .map(|j| (0..tags.len()).filter(|&k| tags[k].contains(&(var, j))).collect())
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return None;
    }
    let mut owner: Vec<Option<usize>> = vec![None; tags.len()];
    fn augment(j: usize, cand: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &k in &cand[j] {
            if seen[k] {
                continue;
            }
            seen[k] = true;
            if owner[k].is_none_or(|other| augment(other, cand, owner, seen)) {
                owner[k] = Some(j);
                return true;
            }
        }
        false
    }
    for j in 0..m {
        let mut seen = vec![false; tags.len()];
        if !augment(j, &candidates, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut sigma = vec![0; m];
    for (k, j) in owner.iter().enumerate() {
        sigma[j.expect("perfect matching")] = k;
    }
    Some(sigma)
}

/// Finds the variable a sum node represents, if any. When several variables
/// qualify the first in declaration order wins and the others are listed in
/// [`Representation::ties`].
pub fn detect_represented_variable(net: &Network, id: NodeId) -> Result<Option<Representation>> {
    let Node::Sum { children, .. } = net.node(id) else {
        return Err(SpnError::NotASumNode(id));
    };
    let m = children.len();
    let tags: Vec<Vec<(VarId, usize)>> = children.iter().map(|&c| indicator_tags(net, c)).collect();
    let mut found: Option<Representation> = None;
    for (v, variable) in net.variables().iter().enumerate() {
        if variable.num_states() != Some(m) {
            continue;
        }
        let var = VarId(v);
        if let Some(sigma) = match_states(&tags, var, m) {
            match &mut found {
                None => {
                    found = Some(Representation {
                        var,
                        mapping: sigma.into_iter().map(|k| children[k]).collect(),
                        ties: Vec::new(),
                    })
                }
                Some(rep) => rep.ties.push(var),
            }
        }
    }
    Ok(found)
}

/// Representation for every sum node (None where the node represents nothing).
pub fn represented_variables(net: &Network) -> Vec<(NodeId, Option<Representation>)> {
    net.sum_nodes()
        .map(|id| (id, detect_represented_variable(net, id).expect("sum node")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, one_based};
    use crate::graph::Variable;

    #[test]
    fn n14_represents_c() {
        let net = fixtures::nested_example();
        let rep = detect_represented_variable(&net, one_based(14)).unwrap().unwrap();
        assert_eq!(net.variable(rep.var).name(), "C");
        assert_eq!(rep.mapping, vec![one_based(17), one_based(18)]);
        assert!(rep.ties.is_empty());
    }

    #[test]
    fn n6_represents_b() {
        let net = fixtures::nested_example();
        let rep = detect_represented_variable(&net, one_based(6)).unwrap().unwrap();
        assert_eq!(net.variable(rep.var).name(), "B");
        assert_eq!(rep.mapping, vec![one_based(8), one_based(9)]);
    }

    #[test]
    fn gaussian_mixture_represents_nothing() {
        let vars = vec![Variable::continuous("X").unwrap()];
        let nodes = vec![Node::sum([(1, 0.5), (2, 0.5)]), Node::gaussian(0, 0.0, 1.0), Node::gaussian(0, 3.0, 1.0)];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        assert_eq!(detect_represented_variable(&net, NodeId(0)).unwrap(), None);
    }

    #[test]
    fn non_sum_node_is_an_error() {
        let net = fixtures::running_example();
        assert!(matches!(
            detect_represented_variable(&net, one_based(2)),
            Err(SpnError::NotASumNode(_))
        ));
    }

    #[test]
    fn ties_are_reported() {
        let vars = vec![
            Variable::finite("A", ["a0", "a1"]).unwrap(),
            Variable::finite("B", ["b0", "b1"]).unwrap(),
        ];
        // each product child carries an indicator of A and one of B
        let nodes = vec![
            Node::sum([(1, 0.5), (2, 0.5)]),
            Node::product([3, 5]),
            Node::product([4, 6]),
            Node::indicator(0, 0),
            Node::indicator(0, 1),
            Node::indicator(1, 0),
            Node::indicator(1, 1),
        ];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        let rep = detect_represented_variable(&net, NodeId(0)).unwrap().unwrap();
        assert_eq!(rep.var, VarId(0));
        assert_eq!(rep.ties, vec![VarId(1)]);
    }

    #[test]
    fn state_order_need_not_follow_child_order() {
        let vars = vec![Variable::finite("A", ["a0", "a1"]).unwrap()];
        let nodes = vec![Node::sum([(1, 0.5), (2, 0.5)]), Node::indicator(0, 1), Node::indicator(0, 0)];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        let rep = detect_represented_variable(&net, NodeId(0)).unwrap().unwrap();
        assert_eq!(rep.mapping, vec![NodeId(2), NodeId(1)]);
    }
}
