//! Network representation and structural queries.

mod leaf;
mod represent;
mod scope;
mod selectivity;
mod validate;
mod variable;

use std::fmt;
use std::sync::OnceLock;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

pub use leaf::{gaussian_log_density, LeafDistribution};
pub use represent::{detect_represented_variable, represented_variables, Representation};
pub use scope::{compute_scopes, Scope};
pub use selectivity::{
    non_selective_nodes, selectivity_check, SelectivityMode, SelectivityVerdict, DEFAULT_ENUMERATION_CAP,
};
pub(crate) use selectivity::{known_selective, scope_configurations};
pub use validate::{has_shared_descendant, validate, Property, ValidityReport, Violation, WEIGHT_TOLERANCE};
pub use variable::{enumerate_configurations, find_var, Assignment, Value, VarId, VarKind, Variable};

use crate::error::{Result, SpnError};

/// Dense node index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Sum { children: Vec<NodeId>, weights: Vec<f64> },
    Product { children: Vec<NodeId> },
    Leaf(LeafDistribution),
}

impl Node {
    pub fn sum(children: impl IntoIterator<Item = (usize, f64)>) -> Node {
        let (children, weights) = children.into_iter().map(|(c, w)| (NodeId(c), w)).unzip();
        Node::Sum { children, weights }
    }

    pub fn product(children: impl IntoIterator<Item = usize>) -> Node {
        Node::Product { children: children.into_iter().map(NodeId).collect() }
    }

    pub fn indicator(var: usize, state: usize) -> Node {
        Node::Leaf(LeafDistribution::Indicator { var: VarId(var), state })
    }

    pub fn categorical(var: usize, probs: Vec<f64>) -> Node {
        Node::Leaf(LeafDistribution::Categorical { var: VarId(var), probs })
    }

    pub fn gaussian(var: usize, mean: f64, variance: f64) -> Node {
        Node::Leaf(LeafDistribution::Gaussian { var: VarId(var), mean, variance })
    }

    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Sum { children, .. } | Node::Product { children } => children,
            Node::Leaf(_) => &[],
        }
    }

    pub fn is_sum(&self) -> bool {
        matches!(self, Node::Sum { .. })
    }

    pub fn is_product(&self) -> bool {
        matches!(self, Node::Product { .. })
    }

    pub fn leaf(&self) -> Option<&LeafDistribution> {
        match self {
            Node::Leaf(l) => Some(l),
            _ => None,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            Node::Sum { weights, .. } => Some(weights),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Node::Sum { .. } => "sum",
            Node::Product { .. } => "product",
            Node::Leaf(_) => "leaf",
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Caches {
    scopes: OnceLock<Vec<Scope>>,
    unbound: OnceLock<Vec<f64>>,
}

/// A sum-product network: a rooted directed graph of sum, product and leaf
/// nodes. Structural properties (completeness, decomposability, weight
/// normalization) are reported by [`validate`] rather than enforced here, so
/// that invalid networks can still be built and inspected.
#[derive(Clone, Debug)]
pub struct Network {
    variables: Vec<Variable>,
    nodes: Vec<Node>,
    root: NodeId,
    parents: Vec<Vec<NodeId>>,
    // children-first order of the nodes reachable from the root, or a node on a cycle
    order: std::result::Result<Vec<NodeId>, NodeId>,
    reachable: FixedBitSet,
    caches: Caches,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.nodes == other.nodes && self.root == other.root
    }
}

impl Network {
    /// Builds a network. Fails on dangling ids, duplicate children, malformed
    /// sum weights and leaves that do not match their variable.
    pub fn new(variables: Vec<Variable>, nodes: Vec<Node>, root: NodeId) -> Result<Network> {
        let mut names = std::collections::HashSet::new();
        for v in &variables {
            if !names.insert(v.name()) {
                return Err(SpnError::InvalidVariable {
                    name: v.name().to_string(),
                    detail: "declared twice".into(),
                });
            }
        }
        if root.0 >= nodes.len() {
            return Err(SpnError::Structure { node: root, detail: "root id out of range".into() });
        }
        let mut parents = vec![Vec::new(); nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            let id = NodeId(i);
            let structure = |detail: String| SpnError::Structure { node: id, detail };
            match node {
                Node::Sum { children, weights } => {
                    if children.is_empty() {
                        return Err(structure("sum node without children".into()));
                    }
                    if weights.len() != children.len() {
                        return Err(structure(format!(
                            "{} weights for {} children",
                            weights.len(),
                            children.len()
                        )));
                    }
                    if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
                        return Err(structure(format!("non-finite weight {w}")));
                    }
                }
                Node::Product { children } if children.is_empty() => {
                    return Err(structure("product node without children".into()));
                }
                Node::Product { .. } => {}
                Node::Leaf(leaf) => {
                    let problems = leaf.problems(&variables, WEIGHT_TOLERANCE);
                    if let Some(p) = problems.into_iter().next() {
                        return Err(structure(p));
                    }
                }
            }
            for (k, c) in node.children().iter().enumerate() {
                if c.0 >= nodes.len() {
                    return Err(structure(format!("child {} out of range", c.0)));
                }
                if node.children()[..k].contains(c) {
                    return Err(structure(format!("child {} listed twice", c.0)));
                }
                parents[c.0].push(id);
            }
        }
        let (order, reachable) = post_order(&nodes, root);
        Ok(Network { variables, nodes, root, parents, order, reachable, caches: Caches::default() })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_id(&self, name: &str) -> Result<VarId> {
        find_var(&self.variables, name)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.0]
    }

    pub fn is_reachable(&self, id: NodeId) -> bool {
        self.reachable.contains(id.0)
    }

    /// Nodes reachable from the root, every child before its parents.
    pub fn topological_order(&self) -> Result<&[NodeId]> {
        self.order.as_deref().map_err(|&n| SpnError::Cycle(n))
    }

    pub fn is_acyclic(&self) -> bool {
        self.order.is_ok()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn sum_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids().filter(|&i| self.node(i).is_sum())
    }

    /// Number of directed links.
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children().len()).sum()
    }

    /// True when every variable is finite-state.
    pub fn all_finite(&self) -> bool {
        self.variables.iter().all(Variable::is_finite)
    }

    pub fn weight(&self, parent: NodeId, child: NodeId) -> Option<f64> {
        match self.node(parent) {
            Node::Sum { children, weights } => {
                children.iter().position(|c| *c == child).map(|k| weights[k])
            }
            _ => None,
        }
    }

    /// Checks an assignment against the network's variables.
    pub fn check_assignment(&self, x: &Assignment) -> Result<()> {
        x.check(&self.variables)
    }

    pub fn parse_assignment(&self, text: &str) -> Result<Assignment> {
        Assignment::parse(&self.variables, text)
    }

    pub fn assignment(&self, pairs: &[(&str, &str)]) -> Result<Assignment> {
        Assignment::from_labels(&self.variables, pairs)
    }

    pub fn display_assignment(&self, x: &Assignment) -> String {
        x.display(&self.variables)
    }

    /// Cached scopes of every node (see [`compute_scopes`]).
    pub fn scopes(&self) -> Result<&[Scope]> {
        if let Some(s) = self.caches.scopes.get() {
            return Ok(s);
        }
        let scopes = compute_scopes(self)?;
        Ok(self.caches.scopes.get_or_init(|| scopes))
    }

    pub fn scope(&self) -> Result<&Scope> {
        Ok(&self.scopes()?[self.root.0])
    }

    /// Variables in the root's scope, ascending.
    pub fn scope_vars(&self) -> Result<Vec<VarId>> {
        Ok(self.scope()?.ones().map(VarId).collect())
    }

    /// Per-node log values at the empty assignment, used by pruned propagation.
    pub(crate) fn unbound_log_values(&self) -> Result<&[f64]> {
        if let Some(v) = self.caches.unbound.get() {
            return Ok(v);
        }
        let values = crate::inference::full_upward_pass(self, &Assignment::empty())?;
        Ok(self.caches.unbound.get_or_init(|| values))
    }

    /// Replaces the weights of a sum node.
    pub fn set_weights(&mut self, id: NodeId, new_weights: Vec<f64>) -> Result<()> {
        match &mut self.nodes[id.0] {
            Node::Sum { children, weights } => {
                if new_weights.len() != children.len() || new_weights.iter().any(|w| !w.is_finite()) {
                    return Err(SpnError::Structure {
                        node: id,
                        detail: "weight vector does not match children".into(),
                    });
                }
                *weights = new_weights;
                self.caches.unbound = OnceLock::new();
                Ok(())
            }
            _ => Err(SpnError::NotASumNode(id)),
        }
    }

    /// Replaces a leaf distribution; the variable must stay the same.
    pub fn set_leaf(&mut self, id: NodeId, leaf: LeafDistribution) -> Result<()> {
        let problems = leaf.problems(&self.variables, WEIGHT_TOLERANCE);
        match &mut self.nodes[id.0] {
            Node::Leaf(old) if old.var() == leaf.var() && problems.is_empty() => {
                *old = leaf;
                self.caches.unbound = OnceLock::new();
                Ok(())
            }
            Node::Leaf(_) => Err(SpnError::Structure {
                node: id,
                detail: problems.into_iter().next().unwrap_or_else(|| "leaf variable changed".into()),
            }),
            _ => Err(SpnError::Structure { node: id, detail: "not a leaf".into() }),
        }
    }

}

/// Iterative DFS from the root. Children are emitted before parents.
fn post_order(nodes: &[Node], root: NodeId) -> (std::result::Result<Vec<NodeId>, NodeId>, FixedBitSet) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut marks = vec![Mark::New; nodes.len()];
    let mut order = Vec::with_capacity(nodes.len());
    let mut reachable = FixedBitSet::with_capacity(nodes.len());
    let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
    marks[root.0] = Mark::Open;
    reachable.insert(root.0);
    while let Some((id, next)) = stack.pop() {
        let children = nodes[id.0].children();
        if next < children.len() {
            stack.push((id, next + 1));
            let c = children[next];
            match marks[c.0] {
                Mark::New => {
                    marks[c.0] = Mark::Open;
                    reachable.insert(c.0);
                    stack.push((c, 0));
                }
                Mark::Open => return (Err(c), reachable),
                Mark::Done => {}
            }
        } else {
            marks[id.0] = Mark::Done;
            order.push(id);
        }
    }
    (Ok(order), reachable)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Vec<Variable> {
        vec![Variable::finite("V", ["+v", "¬v"]).unwrap()]
    }

    #[test]
    fn rejects_dangling_and_duplicate_children() {
        let err = Network::new(vars(), vec![Node::product([1])], NodeId(0)).unwrap_err();
        assert!(matches!(err, SpnError::Structure { .. }));
        let nodes = vec![Node::sum([(1, 0.5), (1, 0.5)]), Node::indicator(0, 0)];
        assert!(Network::new(vars(), nodes, NodeId(0)).is_err());
    }

    #[test]
    fn rejects_leaf_mismatch() {
        let nodes = vec![Node::categorical(0, vec![0.5, 0.6])];
        assert!(Network::new(vars(), nodes, NodeId(0)).is_err());
        let nodes = vec![Node::gaussian(0, 0.0, 1.0)];
        assert!(Network::new(vars(), nodes, NodeId(0)).is_err());
    }

    #[test]
    fn cycle_is_detected_not_rejected() {
        let nodes = vec![Node::product([1]), Node::sum([(0, 1.0)])];
        let net = Network::new(vars(), nodes, NodeId(0)).unwrap();
        assert!(!net.is_acyclic());
        assert!(matches!(net.topological_order(), Err(SpnError::Cycle(_))));
    }

    #[test]
    fn order_puts_children_first() {
        let nodes = vec![Node::sum([(1, 0.5), (2, 0.5)]), Node::indicator(0, 0), Node::indicator(0, 1)];
        let net = Network::new(vars(), nodes, NodeId(0)).unwrap();
        let order = net.topological_order().unwrap();
        assert_eq!(order.last(), Some(&NodeId(0)));
        assert_eq!(order.len(), 3);
    }
}
