use crate::error::Result;
use crate::graph::{scope_configurations, Assignment, Network};
use crate::inference::evaluate;

/// Every complete configuration of the scope with its probability, in
/// lexicographic order (last variable fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    pub rows: Vec<(Assignment, f64)>,
}

impl JointTable {
    pub fn total(&self) -> f64 {
        self.rows.iter().map(|(_, p)| p).sum()
    }

    /// Sum over the complete configurations compatible with `x`.
    pub fn probability(&self, x: &Assignment) -> f64 {
        self.rows.iter().filter(|(v, _)| x.compatible(v)).map(|(_, p)| p).sum()
    }

    /// Most probable configuration compatible with `e`; ties go to the first row.
    pub fn argmax(&self, e: &Assignment) -> Option<&(Assignment, f64)> {
        self.rows
            .iter()
            .filter(|(v, _)| e.compatible(v))
            .fold(None, |best: Option<&(Assignment, f64)>, r| match best {
                Some(b) if b.1 >= r.1 => Some(b),
                _ => Some(r),
            })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Evaluates every complete configuration. Fails with `NotEnumerable` on a
/// continuous scope or more than `cap` configurations.
pub fn brute_force_table(net: &Network, cap: usize) -> Result<JointTable> {
    let rows = scope_configurations(net, cap)?
        .into_iter()
        .map(|v| evaluate(net, &v).map(|p| (v, p.value())))
        .collect::<Result<_>>()?;
    Ok(JointTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{Node, NodeId, Variable, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn example_table() {
        let net = fixtures::running_example();
        let t = brute_force_table(&net, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(t.len(), 8);
        assert!((t.total() - 1.0).abs() < 1e-12);
        let x = net.assignment(&[("A", "+a"), ("B", "+b"), ("C", "¬c")]).unwrap();
        let row = t.rows.iter().find(|(v, _)| *v == x).unwrap();
        assert!((row.1 - 0.108).abs() < 1e-15);
    }

    #[test]
    fn single_indicator() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let net = Network::new(vars, vec![Node::indicator(0, 0)], NodeId(0)).unwrap();
        let t = brute_force_table(&net, 16).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.1).collect::<Vec<_>>(), vec![1.0, 0.0]);
    }
}
