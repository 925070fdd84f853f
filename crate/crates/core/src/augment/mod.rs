//! Augmentation to selectivity with latent variables, and the
//! mixture-of-conditionals reading of sum nodes that represent a variable.

mod interpret;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{
    non_selective_nodes, Assignment, Network, Node, NodeId, VarId, Variable, DEFAULT_ENUMERATION_CAP, WEIGHT_TOLERANCE,
};

pub use interpret::{interpret_sum_node, ConditionalHandle, SumNodeInterpretation};

/// One augmented sum node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentedNode {
    pub node: NodeId,
    /// The latent variable Z, appended after the original variables.
    pub variable: VarId,
    pub name: String,
    /// `states[j]` goes with the j-th (original) child of the node.
    pub states: Vec<String>,
    pub children: Vec<NodeId>,
    /// Indicator leaf of each state.
    pub indicators: Vec<NodeId>,
    /// The twin sum node over the indicators, if completeness needed one.
    pub twin: Option<NodeId>,
    pub twin_weights: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub augmented: Vec<AugmentedNode>,
    /// Every node created, ascending.
    pub inserted: Vec<NodeId>,
}

impl AugmentationRecord {
    pub fn is_empty(&self) -> bool {
        self.augmented.is_empty()
    }

    pub fn latent_variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.augmented.iter().map(|a| a.variable)
    }

    /// Drops the latent variables from an assignment over the augmented network.
    pub fn project_out(&self, x: &Assignment) -> Assignment {
        let mut out = x.clone();
        for v in self.latent_variables() {
            out.unset(v);
        }
        out
    }
}

/// Uniform twin weights.
pub fn augment(net: &Network) -> Result<(Network, AugmentationRecord)> {
    augment_with(net, |_, m| vec![1.0 / m as f64; m])
}

/// Makes every sum node selective: each non-selective node `n` gets a latent
/// variable `Z` with one state per child and an indicator of that state on
/// each child; sum nodes whose children then disagree on `Z` get the missing
/// children multiplied by a twin sum over the indicators of `Z`, weighted by
/// `twin_weights(n, |children|)`.
///
/// Nodes are decided exhaustively when the scope is enumerable, otherwise
/// every node not representing a variable is augmented.
pub fn augment_with(
    net: &Network,
    twin_weights: impl Fn(NodeId, usize) -> Vec<f64>,
) -> Result<(Network, AugmentationRecord)> {
    let targets = non_selective_nodes(net, DEFAULT_ENUMERATION_CAP)?;
    let mut record = AugmentationRecord::default();
    if targets.is_empty() {
        return Ok((net.clone(), record));
    }
    let mut work = Work { variables: net.variables().to_vec(), nodes: net.nodes().to_vec(), root: net.root() };
    let original = net.len();
    for &target in &targets {
        let entry = work.augment_node(target, &twin_weights)?;
        record.augmented.push(entry);
    }
    record.inserted = (original..work.nodes.len()).map(NodeId).collect();
    Ok((work.network()?, record))
}

struct Work {
    variables: Vec<Variable>,
    nodes: Vec<Node>,
    root: NodeId,
}

impl Work {
    fn network(&self) -> Result<Network> {
        Network::new(self.variables.clone(), self.nodes.clone(), self.root)
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    fn fresh_name(&self, base: String) -> String {
        let mut name = base;
        while self.variables.iter().any(|v| v.name() == name) {
            name.push('_');
        }
        name
    }

    /// `child` with `extra` multiplied in: in place for a product with a
    /// single parent, a copy for a shared product, a new product otherwise.
    fn attach(&mut self, net: &Network, child: NodeId, extra: NodeId) -> NodeId {
        let shared = net.parents(child).len() > 1;
        match &mut self.nodes[child.0] {
            Node::Product { children } if !shared => {
                children.push(extra);
                child
            }
            Node::Product { children } => {
                let mut copy = children.clone();
                copy.push(extra);
                self.push(Node::Product { children: copy })
            }
            _ => self.push(Node::Product { children: vec![child, extra] }),
        }
    }

    fn replace_child(&mut self, parent: NodeId, old: NodeId, new: NodeId) {
        if old == new {
            return;
        }
        if let Node::Sum { children, .. } | Node::Product { children } = &mut self.nodes[parent.0] {
            for c in children.iter_mut().filter(|c| **c == old) {
                *c = new;
            }
        }
    }

    fn augment_node(&mut self, target: NodeId, twin_weights: &impl Fn(NodeId, usize) -> Vec<f64>) -> Result<AugmentedNode> {
        let children = self.nodes[target.0].children().to_vec();
        let m = children.len();
        let name = self.fresh_name(format!("_Z{}", target.0));
        let states: Vec<String> = children.iter().map(|c| format!("_z{}", c.0)).collect();
        let z = VarId(self.variables.len());
        self.variables.push(Variable::finite(name.clone(), states.clone())?);
        let indicators: Vec<NodeId> =
            (0..m).map(|j| self.push(Node::Leaf(crate::graph::LeafDistribution::Indicator { var: z, state: j }))).collect();

        let net = self.network()?;
        for (j, &c) in children.iter().enumerate() {
            let new = self.attach(&net, c, indicators[j]);
            self.replace_child(target, c, new);
        }

        // restore completeness wherever a sum node's children disagree on Z
        let mut twin = None;
        let mut weights = Vec::new();
        loop {
            let net = self.network()?;
            let scopes = net.scopes()?;
            let mut patches = Vec::new();
            for id in net.sum_nodes().filter(|&i| net.is_reachable(i)) {
                let kids = net.node(id).children();
                if kids.iter().any(|c| scopes[c.0].contains(z.0)) {
                    patches.extend(kids.iter().filter(|c| !scopes[c.0].contains(z.0)).map(|&c| (id, c)));
                }
            }
            if patches.is_empty() {
                break;
            }
            let t = match twin {
                Some(t) => t,
                None => {
                    weights = twin_weights(target, m);
                    let total: f64 = weights.iter().sum();
                    if weights.len() != m || weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > WEIGHT_TOLERANCE {
                        return Err(SpnError::InvalidConfig(format!("twin weights for {target} must be {m} non-negative values summing to 1")));
                    }
                    let t = self.push(Node::Sum { children: indicators.clone(), weights: weights.clone() });
                    twin = Some(t);
                    t
                }
            };
            for (parent, c) in patches {
                let new = self.attach(&net, c, t);
                self.replace_child(parent, c, new);
            }
        }
        Ok(AugmentedNode { node: target, variable: z, name, states, children, indicators, twin, twin_weights: weights })
    }
}
