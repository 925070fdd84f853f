use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{detect_represented_variable, Assignment, LeafDistribution, Network, Node, NodeId, VarId};
use crate::inference::{evaluate_all, Probability};

/// P(x̃ | v_j) for one state of the represented variable: the product of the
/// non-indicator children of the state's child node (1 when there are none).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalHandle {
    pub child: NodeId,
    pub factors: Vec<NodeId>,
}

impl ConditionalHandle {
    pub fn evaluate(&self, net: &Network, x: &Assignment) -> Result<Probability> {
        let all = evaluate_all(net, x)?;
        Ok(Probability::from_log(self.factors.iter().map(|f| all.log_value(*f)).sum()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumNodeInterpretation {
    pub node: NodeId,
    pub var: VarId,
    /// P(v_j) = w_{i,σ(j)}, by state index.
    pub priors: Vec<f64>,
    /// `None` for states with zero prior.
    pub conditionals: Vec<Option<ConditionalHandle>>,
    /// Bindings fixed by the indicators on every path from the root to the
    /// node: the priors are conditional on this context.
    pub context: Assignment,
}

fn is_indicator(net: &Network, id: NodeId) -> bool {
    matches!(net.node(id), Node::Leaf(LeafDistribution::Indicator { .. }))
}

/// Per-node context: the intersection over all root paths of the bindings
/// contributed by sibling indicators under products and by the state chosen
/// at sum nodes that represent a variable.
fn contexts(net: &Network) -> Result<Vec<Option<Assignment>>> {
    let order = net.topological_order()?;
    let mut ctx: Vec<Option<Assignment>> = vec![None; net.len()];
    ctx[net.root().0] = Some(Assignment::empty());
    let meet = |slot: &mut Option<Assignment>, a: Assignment| {
        *slot = Some(match slot.take() {
            None => a,
            Some(old) => {
                let mut out = Assignment::empty();
                for (v, val) in old.iter() {
                    if a.get(v) == Some(val) {
                        out.set(v, val);
                    }
                }
                out
            }
        });
    };
    for &id in order.iter().rev() {
        let Some(here) = ctx[id.0].clone() else { continue };
        match net.node(id) {
            Node::Leaf(_) => {}
            Node::Product { children } => {
                let mut with = here.clone();
                for &c in children {
                    if let Node::Leaf(LeafDistribution::Indicator { var, state }) = net.node(c) {
                        with.set(*var, crate::graph::Value::State(*state));
                    }
                }
                for &c in children {
                    meet(&mut ctx[c.0], with.clone());
                }
            }
            Node::Sum { children, .. } => {
                let rep = detect_represented_variable(net, id)?;
                for &c in children {
                    let mut with = here.clone();
                    if let Some(rep) = &rep {
                        if let Some(j) = rep.mapping.iter().position(|m| *m == c) {
                            with.set(rep.var, crate::graph::Value::State(j));
                        }
                    }
                    meet(&mut ctx[c.0], with);
                }
            }
        }
    }
    Ok(ctx)
}

/// Reads a sum node that represents a variable V as a mixture Σ_j P(v_j) ·
/// P(· | v_j).
pub fn interpret_sum_node(net: &Network, id: NodeId) -> Result<SumNodeInterpretation> {
    let rep = detect_represented_variable(net, id)?.ok_or(SpnError::NotRepresenting(id))?;
    let mut priors = Vec::with_capacity(rep.mapping.len());
    let mut conditionals = Vec::with_capacity(rep.mapping.len());
    for &child in &rep.mapping {
        let w = net.weight(id, child).expect("mapped child");
        priors.push(w);
        if w == 0.0 {
            conditionals.push(None);
            continue;
        }
        let factors = match net.node(child) {
            Node::Product { children } => children.iter().copied().filter(|c| !is_indicator(net, *c)).collect(),
            _ => Vec::new(),
        };
        conditionals.push(Some(ConditionalHandle { child, factors }));
    }
    let mut context = contexts(net)?[id.0].clone().unwrap_or_default();
    context.unset(rep.var);
    Ok(SumNodeInterpretation { node: id, var: rep.var, priors, conditionals, context })
}
