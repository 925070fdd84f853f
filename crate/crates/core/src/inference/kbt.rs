use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{Assignment, Network, Node};
use crate::logspace::{ln_weight, LOG_ZERO};

use super::eval::evaluate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxResult {
    /// Complete configuration of the scope.
    pub assignment: Assignment,
    /// ln S(v) of that configuration, computed through the whole network.
    pub log_value: f64,
    /// How many distinct candidate configurations were re-scored.
    pub candidates: usize,
}

impl MaxResult {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

// One entry of a node's top-k list: the tree value and the partial
// configuration over the node's scope it backtracks to.
#[derive(Clone, Debug)]
struct Entry {
    log: f64,
    config: Assignment,
}

fn push_unique(list: &mut Vec<Entry>, entry: Entry, k: usize) {
    if list.len() < k && !list.iter().any(|e| e.config == entry.config) {
        list.push(entry);
    }
}

/// K-best-trees search for the most probable complete configuration. Every
/// node keeps the k best induced-tree values of its sub-network (sum: best of
/// the weighted children's lists, product: best of the cross products); the
/// root's candidates are then re-scored through the full network.
///
/// Entries that backtrack to the same configuration are kept once, at their
/// best tree value, so every slot holds a distinct candidate.
pub fn max_kbt(net: &Network, k: usize) -> Result<MaxResult> {
    if k == 0 {
        return Err(SpnError::InvalidConfig("k must be at least 1".into()));
    }
    for v in net.scope_vars()? {
        if !net.variable(v).is_finite() {
            return Err(SpnError::Unsupported(format!(
                "MAX search over continuous variable `{}`",
                net.variable(v).name()
            )));
        }
    }
    let order = net.topological_order()?;
    let mut lists: Vec<Vec<Entry>> = vec![Vec::new(); net.len()];
    for &id in order {
        let list = match net.node(id) {
            Node::Leaf(leaf) => leaf
                .ranked_values()
                .into_iter()
                .take(k)
                .map(|(v, log)| Entry { log, config: Assignment::empty().with(leaf.var(), v) })
                .collect(),
            Node::Sum { children, weights } => {
                // (value, child id, rank) gives a deterministic order with
                // ties to the lowest child id
                let mut cands = Vec::new();
                for (c, w) in children.iter().zip(weights) {
                    let lw = ln_weight(*w);
                    if lw == LOG_ZERO {
                        continue;
                    }
                    for (rank, e) in lists[c.0].iter().enumerate() {
                        cands.push((lw + e.log, *c, rank));
                    }
                }
                cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
                let mut out = Vec::with_capacity(k);
                for (log, c, rank) in cands {
                    if out.len() == k {
                        break;
                    }
                    push_unique(&mut out, Entry { log, config: lists[c.0][rank].config.clone() }, k);
                }
                out
            }
            Node::Product { children } => {
                let mut acc = vec![Entry { log: 0.0, config: Assignment::empty() }];
                for c in children {
                    let mut cands = Vec::with_capacity(acc.len() * lists[c.0].len());
                    for (i, a) in acc.iter().enumerate() {
                        for (j, b) in lists[c.0].iter().enumerate() {
                            cands.push((a.log + b.log, i, j));
                        }
                    }
                    cands.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
                    let mut next = Vec::with_capacity(k);
                    for (log, i, j) in cands {
                        if next.len() == k {
                            break;
                        }
                        // overlapping scopes (non-decomposable input): keep the first binding
                        let mut config = acc[i].config.clone();
                        for (v, val) in lists[c.0][j].config.iter() {
                            if !config.is_bound(v) {
                                config.set(v, val);
                            }
                        }
                        push_unique(&mut next, Entry { log, config }, k);
                    }
                    acc = next;
                }
                acc
            }
        };
        lists[id.0] = list.into_iter().filter(|e: &Entry| e.log != LOG_ZERO).collect();
    }
    let root = &lists[net.root().0];
    let mut best: Option<(f64, &Assignment)> = None;
    for e in root {
        let log = evaluate(net, &e.config)?.log;
        if best.is_none_or(|(b, _)| log > b) {
            best = Some((log, &e.config));
        }
    }
    let (log_value, assignment) = best.ok_or(SpnError::NoExplanation)?;
    Ok(MaxResult { assignment: assignment.clone(), log_value, candidates: root.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::inference::mpe_best_tree;

    #[test]
    fn k1_matches_best_tree() {
        let net = fixtures::running_example();
        let bt = mpe_best_tree(&net, &Assignment::empty()).unwrap();
        for k in [1, 8] {
            let r = max_kbt(&net, k).unwrap();
            assert_eq!(r.assignment, bt.assignment);
            assert!((r.log_value - bt.log_value).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_max_where_best_tree_fails() {
        let net = fixtures::bt_divergence();
        let r1 = max_kbt(&net, 1).unwrap();
        assert_eq!(r1.assignment, net.parse_assignment("X=x0,Y=y0").unwrap());
        let r = max_kbt(&net, 2).unwrap();
        assert_eq!(r.assignment, net.parse_assignment("X=x1,Y=y1").unwrap());
        assert!((r.value() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_k_is_rejected() {
        assert!(matches!(max_kbt(&fixtures::running_example(), 0), Err(SpnError::InvalidConfig(_))));
    }
}
