use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{Assignment, Network, Node, NodeId};
use crate::logspace::{ln_weight, LOG_ZERO};

/// A probability (or density) carried in natural-log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub log: f64,
}

impl Probability {
    pub fn from_log(log: f64) -> Self {
        Probability { log }
    }

    pub fn value(&self) -> f64 {
        self.log.exp()
    }

    /// Linear value, or `None` when it underflows to zero while the log is finite.
    pub fn linear(&self) -> Option<f64> {
        let v = self.log.exp();
        (v > 0.0 || self.log == LOG_ZERO).then_some(v)
    }

    pub fn is_zero(&self) -> bool {
        self.log == LOG_ZERO
    }
}

/// Log value of every node for one assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    log_values: Vec<f64>,
    root: NodeId,
    assignment: Assignment,
}

impl Evaluation {
    pub(crate) fn from_values(log_values: Vec<f64>, root: NodeId, assignment: Assignment) -> Self {
        Evaluation { log_values, root, assignment }
    }

    pub fn log_value(&self, id: NodeId) -> f64 {
        self.log_values[id.0]
    }

    pub fn value(&self, id: NodeId) -> f64 {
        self.log_values[id.0].exp()
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn root(&self) -> Probability {
        Probability::from_log(self.log_values[self.root.0])
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }
}

#[inline]
pub(crate) fn node_log_value(net: &Network, id: NodeId, x: &Assignment, values: &[f64]) -> f64 {
    match net.node(id) {
        Node::Leaf(leaf) => leaf.log_value(x.get(leaf.var())),
        Node::Product { children } => children.iter().map(|c| values[c.0]).sum(),
        Node::Sum { children, weights } => {
            let mut max = LOG_ZERO;
            for (c, w) in children.iter().zip(weights) {
                max = max.max(ln_weight(*w) + values[c.0]);
            }
            if max == LOG_ZERO || max.is_infinite() {
                return max;
            }
            let mut sum = 0.0;
            for (c, w) in children.iter().zip(weights) {
                sum += (ln_weight(*w) + values[c.0] - max).exp();
            }
            max + sum.ln()
        }
    }
}

/// Bottom-up pass over every reachable node. Unreachable nodes are left at
/// log 0. The assignment is assumed checked.
pub(crate) fn full_upward_pass(net: &Network, x: &Assignment) -> Result<Vec<f64>> {
    let order = net.topological_order()?;
    let mut values = vec![LOG_ZERO; net.len()];
    for &id in order {
        values[id.0] = node_log_value(net, id, x, &values);
    }
    Ok(values)
}

/// Partial propagation: only nodes whose scope meets the bound variables are
/// recomputed; the others take their (cached) value at the empty assignment.
pub(crate) fn pruned_upward_pass(net: &Network, x: &Assignment) -> Result<Vec<f64>> {
    let order = net.topological_order()?;
    let scopes = net.scopes()?;
    let unbound = net.unbound_log_values()?;
    let mut bound = FixedBitSet::with_capacity(net.variables().len());
    for v in x.bound_vars() {
        bound.insert(v.0);
    }
    let mut active = FixedBitSet::with_capacity(net.len());
    let mut stack = vec![net.root()];
    while let Some(id) = stack.pop() {
        if active.contains(id.0) || scopes[id.0].is_disjoint(&bound) {
            continue;
        }
        active.insert(id.0);
        stack.extend_from_slice(net.node(id).children());
    }
    let mut values = unbound.to_vec();
    for &id in order {
        if active.contains(id.0) {
            values[id.0] = node_log_value(net, id, x, &values);
        }
    }
    Ok(values)
}

/// Full bottom-up evaluation recording every node's value.
pub fn evaluate_all(net: &Network, x: &Assignment) -> Result<Evaluation> {
    net.check_assignment(x)?;
    Ok(Evaluation { log_values: full_upward_pass(net, x)?, root: net.root(), assignment: x.clone() })
}

/// As [`evaluate_all`], skipping subgraphs over unbound variables.
pub fn evaluate_all_pruned(net: &Network, x: &Assignment) -> Result<Evaluation> {
    net.check_assignment(x)?;
    Ok(Evaluation { log_values: pruned_upward_pass(net, x)?, root: net.root(), assignment: x.clone() })
}

/// S(x): the joint probability for a complete configuration, the marginal
/// for a partial one. Densities when continuous variables are bound.
pub fn evaluate(net: &Network, x: &Assignment) -> Result<Probability> {
    net.check_assignment(x)?;
    let values = pruned_upward_pass(net, x)?;
    Ok(Probability::from_log(values[net.root().0]))
}

/// P(x | e) = S(xe) / S(e).
pub fn conditional(net: &Network, x: &Assignment, e: &Assignment) -> Result<Probability> {
    if let Some(v) = x.overlap(e) {
        return Err(SpnError::OverlappingQuery(net.variable(v).name().to_string()));
    }
    let xe = x.compose(e).expect("disjoint");
    let pe = evaluate(net, e)?;
    if pe.is_zero() {
        return Err(SpnError::InconsistentEvidence);
    }
    let pxe = evaluate(net, &xe)?;
    Ok(Probability::from_log(pxe.log - pe.log))
}

/// Σ_t log S(v^t) over the given rows; `-inf` when any row has zero probability.
pub fn log_likelihood_rows<'a>(net: &Network, rows: impl IntoIterator<Item = &'a Assignment>) -> Result<f64> {
    let mut total = 0.0;
    for row in rows {
        total += evaluate(net, row)?.log;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, one_based};
    use crate::graph::{enumerate_configurations, VarId};

    #[test]
    fn worked_example() {
        let net = fixtures::running_example();
        let x = net.assignment(&[("A", "+a"), ("B", "+b"), ("C", "¬c")]).unwrap();
        let p = evaluate(&net, &x).unwrap();
        assert!((p.value() - 0.108).abs() < 1e-12);
        let all = evaluate_all(&net, &x).unwrap();
        assert!((all.value(one_based(2)) - 0.36).abs() < 1e-12);
        assert_eq!(all.value(one_based(3)), 0.0);
    }

    #[test]
    fn empty_assignment_is_one() {
        let net = fixtures::running_example();
        assert!(evaluate(&net, &Assignment::empty()).unwrap().log.abs() < 1e-12);
    }

    #[test]
    fn marginal_of_b_matches_brute_force() {
        let net = fixtures::running_example();
        let b = net.var_id("B").unwrap();
        let x = Assignment::empty().with_state(b, 0);
        let mut total = 0.0;
        for v in enumerate_configurations(net.variables(), &[VarId(0), VarId(2)]).unwrap() {
            total += evaluate(&net, &v.compose(&x).unwrap()).unwrap().value();
        }
        assert!((evaluate(&net, &x).unwrap().value() - total).abs() < 1e-12);
    }

    #[test]
    fn conditionals_given_plus_c() {
        let net = fixtures::running_example();
        let e = net.assignment(&[("C", "+c")]).unwrap();
        let not_a = net.assignment(&[("A", "¬a")]).unwrap();
        let not_b = net.assignment(&[("B", "¬b")]).unwrap();
        assert!((conditional(&net, &not_a, &e).unwrap().value() - 0.57).abs() < 0.005);
        assert!((conditional(&net, &not_b, &e).unwrap().value() - 0.68).abs() < 0.005);
        let p = evaluate(&net, &not_a).unwrap();
        let q = conditional(&net, &not_a, &Assignment::empty()).unwrap();
        assert!((p.log - q.log).abs() < 1e-12);
    }

    #[test]
    fn conditional_errors() {
        let net = fixtures::running_example();
        let a = net.assignment(&[("A", "+a")]).unwrap();
        assert!(matches!(conditional(&net, &a, &a), Err(SpnError::OverlappingQuery(_))));
        let vars = net.variables().to_vec();
        let nodes = vec![crate::graph::Node::indicator(0, 0)];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        let e = net.assignment(&[("A", "¬a")]).unwrap();
        let x = net.assignment(&[("B", "+b")]).unwrap();
        assert!(matches!(conditional(&net, &x, &e), Err(SpnError::InconsistentEvidence)));
    }

    #[test]
    fn counterexamples() {
        let net = fixtures::incomplete();
        let plus = evaluate(&net, &net.assignment(&[("V1", "+v1")]).unwrap()).unwrap().value();
        let minus = evaluate(&net, &net.assignment(&[("V1", "¬v1")]).unwrap()).unwrap().value();
        assert!((plus - 0.7).abs() < 1e-15 && (minus - 0.7).abs() < 1e-15);
        let net = fixtures::non_decomposable();
        let plus = evaluate(&net, &net.assignment(&[("V", "+v")]).unwrap()).unwrap().value();
        assert!((plus - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pruned_pass_is_bit_identical() {
        let net = fixtures::nested_example();
        for text in ["", "A=+a", "B=¬b", "C=+c,A=¬a", "A=+a,B=+b,C=¬c"] {
            let x = net.parse_assignment(text).unwrap();
            let full = evaluate_all(&net, &x).unwrap();
            let pruned = evaluate_all_pruned(&net, &x).unwrap();
            for (a, b) in full.log_values().iter().zip(pruned.log_values()) {
                assert_eq!(a.to_bits(), b.to_bits(), "{text}");
            }
        }
    }

    #[test]
    fn invalid_binding_is_rejected() {
        let net = fixtures::running_example();
        let x = Assignment::empty().with(VarId(0), crate::graph::Value::Real(0.5));
        assert!(matches!(evaluate(&net, &x), Err(SpnError::InvalidValue { .. })));
        let x = Assignment::empty().with_state(VarId(7), 0);
        assert!(matches!(evaluate(&net, &x), Err(SpnError::UnknownVariable(_))));
    }
}
