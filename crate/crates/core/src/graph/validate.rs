use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::{compute_scopes, detect_represented_variable, Network, Node, NodeId};

/// Tolerance on the sum of a node's weights (or a categorical leaf's probabilities).
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Rooted,
    Acyclic,
    Alternating,
    Normalized,
    Complete,
    Decomposable,
    SelectiveStructural,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Property::Rooted => "rooted",
            Property::Acyclic => "acyclic",
            Property::Alternating => "alternating",
            Property::Normalized => "normalized",
            Property::Complete => "complete",
            Property::Decomposable => "decomposable",
            Property::SelectiveStructural => "selective-structural",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub property: Property,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub rooted: bool,
    pub acyclic: bool,
    pub alternating: bool,
    pub normalized: bool,
    pub complete: bool,
    pub decomposable: bool,
    pub selective_structural: bool,
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    /// Rooted, acyclic, normalized, complete and decomposable: everything the
    /// probabilistic semantics depend on.
    pub fn is_valid(&self) -> bool {
        self.rooted && self.acyclic && self.normalized && self.complete && self.decomposable
    }

    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn flag(&self, p: Property) -> bool {
        match p {
            Property::Rooted => self.rooted,
            Property::Acyclic => self.acyclic,
            Property::Alternating => self.alternating,
            Property::Normalized => self.normalized,
            Property::Complete => self.complete,
            Property::Decomposable => self.decomposable,
            Property::SelectiveStructural => self.selective_structural,
        }
    }

    pub fn violations_of(&self, p: Property) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.property == p)
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in [
            Property::Rooted,
            Property::Acyclic,
            Property::Alternating,
            Property::Normalized,
            Property::Complete,
            Property::Decomposable,
            Property::SelectiveStructural,
        ] {
            writeln!(f, "{p}: {}", self.flag(p))?;
        }
        for v in &self.violations {
            match v.node {
                Some(n) => writeln!(f, "violation {} at {}: {}", v.property, n.0, v.detail)?,
                None => writeln!(f, "violation {}: {}", v.property, v.detail)?,
            }
        }
        Ok(())
    }
}

/// Descendant sets (each node included in its own set). Requires acyclicity.
pub(crate) fn descendant_sets(net: &Network) -> Vec<FixedBitSet> {
    let n = net.len();
    let mut sets: Vec<Option<FixedBitSet>> = vec![None; n];
    fn visit(net: &Network, id: NodeId, sets: &mut Vec<Option<FixedBitSet>>) {
        if sets[id.0].is_some() {
            return;
        }
        let mut set = FixedBitSet::with_capacity(net.len());
        set.insert(id.0);
        for &c in net.node(id).children() {
            visit(net, c, sets);
            set.union_with(sets[c.0].as_ref().expect("visited"));
        }
        sets[id.0] = Some(set);
    }
    for i in 0..n {
        visit(net, NodeId(i), &mut sets);
    }
    sets.into_iter().map(|s| s.expect("visited")).collect()
}

/// Shared-descendant criterion: some node is a descendant of two different
/// children of `id`. Sound for non-decomposability; equivalent to overlapping
/// child scopes when every variable has a single leaf node.
pub fn has_shared_descendant(net: &Network, id: NodeId) -> bool {
    let sets = descendant_sets(net);
    shared_descendant_in(net, id, &sets).is_some()
}

fn shared_descendant_in(net: &Network, id: NodeId, sets: &[FixedBitSet]) -> Option<usize> {
    let children = net.node(id).children();
    for (a, &ca) in children.iter().enumerate() {
        for &cb in &children[a + 1..] {
            if let Some(k) = sets[ca.0].intersection(&sets[cb.0]).next() {
                return Some(k);
            }
        }
    }
    None
}

/// Checks every structural property of the network and lists the violations.
pub fn validate(net: &Network) -> ValidityReport {
    let mut violations = Vec::new();
    let mut push = |node: Option<NodeId>, property: Property, detail: String| {
        violations.push(Violation { node, property, detail });
    };

    for id in net.ids() {
        let is_root = id == net.root();
        let has_parents = !net.parents(id).is_empty();
        if is_root && has_parents {
            push(Some(id), Property::Rooted, "the root has parents".into());
        } else if !is_root && !has_parents {
            push(Some(id), Property::Rooted, "node without parents other than the root".into());
        } else if !is_root && !net.is_reachable(id) {
            push(Some(id), Property::Rooted, "not reachable from the root".into());
        }
    }

    let scopes = match compute_scopes(net) {
        Ok(s) => Some(s),
        Err(e) => {
            let node = match e {
                crate::SpnError::Cycle(n) => Some(n),
                _ => None,
            };
            push(node, Property::Acyclic, e.to_string());
            None
        }
    };

    for id in net.ids() {
        let node = net.node(id);
        for &p in net.parents(id) {
            let parent = net.node(p);
            let bad = (node.is_sum() && !parent.is_product()) || (node.is_product() && !parent.is_sum());
            if bad {
                push(
                    Some(id),
                    Property::Alternating,
                    format!("{} node has {} parent {}", node.kind_name(), parent.kind_name(), p.0),
                );
            }
        }
        if let Node::Sum { weights, .. } = node {
            if let Some(w) = weights.iter().find(|w| **w < 0.0) {
                push(Some(id), Property::Normalized, format!("negative weight {w}"));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                push(Some(id), Property::Normalized, format!("weights sum to {total}"));
            }
        }
    }

    let mut checked_scopes = false;
    if let Some(scopes) = &scopes {
        checked_scopes = true;
        let sets = descendant_sets(net);
        for id in net.ids() {
            match net.node(id) {
                Node::Sum { children, .. } => {
                    let first = &scopes[children[0].0];
                    if let Some(c) = children.iter().find(|c| scopes[c.0] != *first) {
                        push(
                            Some(id),
                            Property::Complete,
                            format!("children {} and {} have different scopes", children[0].0, c.0),
                        );
                    }
                }
                Node::Product { children } => {
                    let mut seen = FixedBitSet::with_capacity(net.variables().len());
                    let mut overlap = false;
                    for c in children {
                        if !seen.is_disjoint(&scopes[c.0]) {
                            overlap = true;
                        }
                        seen.union_with(&scopes[c.0]);
                    }
                    if overlap {
                        let detail = match shared_descendant_in(net, id, &sets) {
                            Some(k) => format!("children share descendant {k}"),
                            None => "children have overlapping scopes".to_string(),
                        };
                        push(Some(id), Property::Decomposable, detail);
                    }
                }
                Node::Leaf(_) => {}
            }
        }
        for id in net.sum_nodes().filter(|&i| net.is_reachable(i)) {
            if matches!(detect_represented_variable(net, id), Ok(None)) {
                push(Some(id), Property::SelectiveStructural, "represents no variable".into());
            }
        }
    }

    let none_of = |p: Property| !violations.iter().any(|v| v.property == p);
    ValidityReport {
        rooted: none_of(Property::Rooted),
        acyclic: none_of(Property::Acyclic),
        alternating: none_of(Property::Alternating),
        normalized: none_of(Property::Normalized),
        complete: checked_scopes && none_of(Property::Complete),
        decomposable: checked_scopes && none_of(Property::Decomposable),
        selective_structural: checked_scopes && none_of(Property::SelectiveStructural),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::Variable;

    #[test]
    fn is_fully_valid() {
        let report = validate(&fixtures::running_example());
        assert!(report.all_ok(), "{report}");
        assert!(report.is_valid() && report.selective_structural && report.alternating);
    }

    #[test]
    fn incomplete_counterexample_is_flagged() {
        let report = validate(&fixtures::incomplete());
        assert!(!report.complete);
        assert!(report.decomposable && report.normalized);
        assert_eq!(report.violations_of(Property::Complete).count(), 1);
    }

    #[test]
    fn non_decomposable_counterexample_is_flagged() {
        let net = fixtures::non_decomposable();
        let report = validate(&net);
        assert!(!report.decomposable);
        assert!(report.complete);
        // distinct leaves over the same variable: no shared descendant
        assert!(!has_shared_descendant(&net, net.root()));
    }

    #[test]
    fn shared_leaf_is_found_by_both_criteria() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let nodes = vec![Node::product([1, 2]), Node::sum([(3, 1.0)]), Node::sum([(3, 1.0)]), Node::indicator(0, 0)];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        assert!(!validate(&net).decomposable);
        assert!(has_shared_descendant(&net, NodeId(0)));
    }

    #[test]
    fn unreachable_and_unnormalized_reported() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let nodes = vec![Node::sum([(1, 0.6), (2, 0.6)]), Node::indicator(0, 0), Node::indicator(0, 1), Node::indicator(0, 0)];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        let report = validate(&net);
        assert!(!report.rooted && !report.normalized);
        assert!(report.complete && report.selective_structural);
        assert_eq!(report.violations.len(), 2);
    }

    #[test]
    fn alternation_violation() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let nodes = vec![Node::sum([(1, 1.0)]), Node::sum([(2, 0.5), (3, 0.5)]), Node::indicator(0, 0), Node::indicator(0, 1)];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        let report = validate(&net);
        assert!(!report.alternating);
        assert!(report.is_valid());
    }

    #[test]
    fn single_leaf_is_valid() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let net = Network::new(vars, vec![Node::categorical(0, vec![0.5, 0.5])], NodeId(0)).unwrap();
        assert!(validate(&net).all_ok());
    }

    #[test]
    fn cycle_reported_as_violation() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let nodes = vec![Node::product([1]), Node::sum([(0, 1.0)])];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        let report = validate(&net);
        assert!(!report.acyclic && !report.complete);
        assert!(!report.violations.is_empty());
    }
}
