use crate::error::{Result, SpnError};
use crate::graph::{Assignment, Network, Node, NodeId};
use crate::logspace::{ln_weight, log_add, LOG_ZERO};

use super::eval::{full_upward_pass, Evaluation};

/// `S_i^∂(x) = (1/S(x)) · ∂S/∂S_i(x)` for every node, with the upward pass
/// it was computed from.
#[derive(Clone, Debug)]
pub struct DerivativeMap {
    log_derivatives: Vec<f64>,
    evaluation: Evaluation,
}

impl DerivativeMap {
    pub fn value(&self, id: NodeId) -> f64 {
        self.log_derivatives[id.0].exp()
    }

    pub fn log_value(&self, id: NodeId) -> f64 {
        self.log_derivatives[id.0]
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_derivatives
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.evaluation
    }
}

/// Downward pass over log values. `values` must come from a full upward pass.
/// Product siblings are combined with prefix/suffix sums of logs, so a zero
/// sibling never needs a division.
pub(crate) fn downward_pass(net: &Network, values: &[f64]) -> Result<Vec<f64>> {
    let order = net.topological_order()?;
    let root = net.root();
    let mut d = vec![LOG_ZERO; net.len()];
    d[root.0] = -values[root.0];
    let mut prefix = Vec::new();
    for &id in order.iter().rev() {
        let di = d[id.0];
        if di == LOG_ZERO {
            continue;
        }
        match net.node(id) {
            Node::Leaf(_) => {}
            Node::Sum { children, weights } => {
                for (c, w) in children.iter().zip(weights) {
                    d[c.0] = log_add(d[c.0], di + ln_weight(*w));
                }
            }
            Node::Product { children } => {
                // prefix[k] = Σ_{k' < k} log S_{c_k'}
                prefix.clear();
                let mut acc = 0.0;
                for c in children {
                    prefix.push(acc);
                    acc += values[c.0];
                }
                let mut suffix = 0.0;
                for (k, c) in children.iter().enumerate().rev() {
                    let others = prefix[k] + suffix;
                    d[c.0] = log_add(d[c.0], di + others);
                    suffix += values[c.0];
                }
            }
        }
    }
    Ok(d)
}

/// Runs the upward and downward passes. Nodes cut off by zero-valued
/// ancestors get a derivative of 0.
pub fn derivatives(net: &Network, x: &Assignment) -> Result<DerivativeMap> {
    net.check_assignment(x)?;
    let values = full_upward_pass(net, x)?;
    if values[net.root().0] == LOG_ZERO {
        return Err(SpnError::UndefinedDerivative);
    }
    let log_derivatives = downward_pass(net, &values)?;
    let evaluation = Evaluation::from_values(values, net.root(), x.clone());
    Ok(DerivativeMap { log_derivatives, evaluation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, one_based};
    use crate::graph::Variable;

    #[test]
    fn root_is_reciprocal_of_value() {
        let net = fixtures::running_example();
        let x = net.parse_assignment("A=+a,B=+b,C=¬c").unwrap();
        let d = derivatives(&net, &x).unwrap();
        assert!((d.value(net.root()) - 1.0 / 0.108).abs() < 1e-9);
    }

    #[test]
    fn single_leaf() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let net = Network::new(vars, vec![Node::categorical(0, vec![0.25, 0.75])], NodeId(0)).unwrap();
        let x = net.parse_assignment("V=+v").unwrap();
        assert!((derivatives(&net, &x).unwrap().value(NodeId(0)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_is_an_error() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let net = Network::new(vars, vec![Node::indicator(0, 0)], NodeId(0)).unwrap();
        let x = net.parse_assignment("V=¬v").unwrap();
        assert!(matches!(derivatives(&net, &x), Err(SpnError::UndefinedDerivative)));
    }

    #[test]
    fn zero_sibling_still_gets_a_derivative() {
        // n2 = I_{+a} · n6 and I_{+a} is 0 under ¬a: the derivative of n6 is 0
        // but that of I_{+a} is S_6 · S_2^∂ > 0 where n2 is reached.
        let net = fixtures::running_example();
        let x = net.parse_assignment("A=¬a,B=+b,C=+c").unwrap();
        let d = derivatives(&net, &x).unwrap();
        let s = d.evaluation().root().value();
        let s6 = d.evaluation().value(one_based(6));
        let expected = 0.3 * s6 / s;
        assert!((d.value(one_based(4)) - expected).abs() < 1e-12);
        assert_eq!(d.value(one_based(6)), 0.0);
    }
}
