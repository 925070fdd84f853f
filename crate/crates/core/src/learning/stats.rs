use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{known_selective, Assignment, Network, Node, NodeId};
use crate::inference::full_upward_pass;
use crate::logspace::LOG_ZERO;

use super::dataset::Dataset;
use super::parallel::{add_into, map_reduce};

/// One real value per sum-node link, laid out node by node in child order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMap {
    offsets: Vec<usize>,
    edges: Vec<(NodeId, NodeId)>,
    values: Vec<f64>,
}

impl EdgeMap {
    pub fn zeros(net: &Network) -> EdgeMap {
        let mut offsets = Vec::with_capacity(net.len() + 1);
        let mut edges = Vec::new();
        for id in net.ids() {
            offsets.push(edges.len());
            if let Node::Sum { children, .. } = net.node(id) {
                edges.extend(children.iter().map(|&c| (id, c)));
            }
        }
        offsets.push(edges.len());
        let values = vec![0.0; edges.len()];
        EdgeMap { offsets, edges, values }
    }

    /// Values of the links leaving `id`, in child order (empty for non-sum nodes).
    pub fn node(&self, id: NodeId) -> &[f64] {
        &self.values[self.offsets[id.0]..self.offsets[id.0 + 1]]
    }

    pub(crate) fn offset(&self, id: NodeId) -> usize {
        self.offsets[id.0]
    }

    pub fn get(&self, parent: NodeId, child: NodeId) -> Option<f64> {
        let range = *self.offsets.get(parent.0)?..*self.offsets.get(parent.0 + 1)?;
        self.edges[range.clone()].iter().position(|(_, c)| *c == child).map(|k| self.values[range.start + k])
    }

    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), f64)> + '_ {
        self.edges.iter().copied().zip(self.values.iter().copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Link counts n_ij over a dataset, plus the rows that had zero probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub counts: EdgeMap,
    pub zero_rows: Vec<usize>,
}

impl SufficientStats {
    pub fn get(&self, parent: NodeId, child: NodeId) -> Option<f64> {
        self.counts.get(parent, child)
    }
}

fn require_complete(net: &Network, rows: &[Assignment]) -> Result<()> {
    let scope = net.scope_vars()?;
    for (t, row) in rows.iter().enumerate() {
        if let Some(v) = scope.iter().find(|v| !row.is_bound(**v)) {
            return Err(SpnError::InvalidValue {
                variable: net.variable(*v).name().to_string(),
                detail: format!("row {t} leaves it unbound; counting needs complete rows"),
            });
        }
    }
    Ok(())
}

/// Hard counts for a selective network: each row's induced tree adds 1 to
/// every sum link it retains.
pub fn count_stats_selective(net: &Network, data: &Dataset) -> Result<SufficientStats> {
    count_stats_with(net, data, 0)
}

pub(crate) fn count_stats_with(net: &Network, data: &Dataset, threads: usize) -> Result<SufficientStats> {
    if !known_selective(net)? {
        return Err(SpnError::NotSelective("closed-form counting needs a selective network".into()));
    }
    let rows = data.rows_for(net)?;
    require_complete(net, &rows)?;
    let template = EdgeMap::zeros(net);
    let n = template.len();
    let (counts, zero_rows) = map_reduce(
        rows.len(),
        threads,
        |range| {
            let mut counts = vec![0.0; n];
            let mut zero = Vec::new();
            let mut stack = Vec::new();
            for t in range {
                let values = full_upward_pass(net, &rows[t])?;
                if values[net.root().0] == LOG_ZERO {
                    zero.push(t);
                    continue;
                }
                stack.push(net.root());
                while let Some(id) = stack.pop() {
                    match net.node(id) {
                        Node::Leaf(_) => {}
                        Node::Product { children } => stack.extend_from_slice(children),
                        Node::Sum { children, weights } => {
                            let k = children
                                .iter()
                                .zip(weights)
                                .position(|(c, w)| *w > 0.0 && values[c.0] > LOG_ZERO)
                                .expect("positive sum node has a positive child");
                            counts[template.offset(id) + k] += 1.0;
                            stack.push(children[k]);
                        }
                    }
                }
            }
            Ok((counts, zero))
        },
        |(a, mut za), (b, zb)| {
            za.extend(zb);
            (add_into(a, b), za)
        },
    )?
    .unwrap_or_else(|| (vec![0.0; n], Vec::new()));
    let mut map = template;
    *map.values_mut() = counts;
    Ok(SufficientStats { counts: map, zero_rows })
}

/// `(n_ij + α) / Σ_j' (n_ij' + α)`, uniform when a node has no mass.
pub fn weights_from_counts(counts: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = counts.iter().map(|c| c + alpha).sum();
    if total > 0.0 {
        counts.iter().map(|c| (c + alpha) / total).collect()
    } else {
        vec![1.0 / counts.len() as f64; counts.len()]
    }
}

pub(crate) fn apply_counts(net: &mut Network, counts: &EdgeMap, alpha: f64) -> Result<f64> {
    let mut delta: f64 = 0.0;
    let ids: Vec<NodeId> = net.sum_nodes().collect();
    for id in ids {
        let new = weights_from_counts(counts.node(id), alpha);
        let old = net.node(id).weights().expect("sum node");
        delta = old.iter().zip(&new).fold(delta, |d, (a, b)| d.max((a - b).abs()));
        net.set_weights(id, new)?;
    }
    Ok(delta)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SpnError::InvalidConfig(format!("smoothing α = {alpha} is outside [0, 1]")));
    }
    Ok(())
}

/// Closed-form maximum-likelihood weights for a selective network and complete data.
pub fn mle_selective(net: &Network, data: &Dataset, alpha: f64) -> Result<Network> {
    check_alpha(alpha)?;
    let stats = count_stats_selective(net, data)?;
    let mut out = net.clone();
    apply_counts(&mut out, &stats.counts, alpha)?;
    Ok(out)
}

/// Divides each sum node's weights by their total.
pub fn renormalize(net: &Network) -> Result<Network> {
    let mut out = net.clone();
    let ids: Vec<NodeId> = net.sum_nodes().collect();
    for id in ids {
        let w = net.node(id).weights().expect("sum node");
        if let Some(bad) = w.iter().find(|w| **w < 0.0) {
            return Err(SpnError::Structure { node: id, detail: format!("negative weight {bad}") });
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(SpnError::ZeroMass(id));
        }
        // nodes normalized up to rounding are left alone so their bits do not drift
        if (total - 1.0).abs() > 4.0 * f64::EPSILON {
            out.set_weights(id, w.iter().map(|x| x / total).collect())?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, one_based as n};
    use crate::graph::Variable;

    fn repeated(net: &Network, text: &str, times: usize) -> Dataset {
        let row = net.parse_assignment(text).unwrap();
        Dataset::new(net.variables().to_vec(), vec![row; times]).unwrap()
    }

    #[test]
    fn ten_copies() {
        let net = fixtures::running_example();
        let stats = count_stats_selective(&net, &repeated(&net, "A=+a,B=+b,C=¬c", 10)).unwrap();
        let hit = [(1, 2), (6, 8), (14, 18)];
        for ((p, c), v) in stats.counts.iter() {
            let want = if hit.iter().any(|&(a, b)| n(a) == p && n(b) == c) { 10.0 } else { 0.0 };
            assert_eq!(v, want, "{p} -> {c}");
        }
    }

    #[test]
    fn weight_ratios() {
        assert_eq!(weights_from_counts(&[3.0, 1.0], 0.0), vec![0.75, 0.25]);
        assert_eq!(weights_from_counts(&[0.0, 0.0], 0.0), vec![0.5, 0.5]);
        assert_eq!(weights_from_counts(&[0.0, 1.0], 1.0), vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn non_selective_is_rejected() {
        let net = fixtures::bt_divergence();
        let data = repeated(&net, "X=x0,Y=y0", 2);
        assert!(matches!(count_stats_selective(&net, &data), Err(SpnError::NotSelective(_))));
    }

    #[test]
    fn partial_rows_are_rejected() {
        let net = fixtures::running_example();
        assert!(count_stats_selective(&net, &repeated(&net, "A=+a", 2)).is_err());
    }

    #[test]
    fn zero_rows_are_reported() {
        let vars = vec![
            Variable::finite("A", ["+a", "¬a"]).unwrap(),
            Variable::finite("B", ["+b", "¬b"]).unwrap(),
        ];
        // B is always +b under this model
        let nodes = vec![Node::sum([(1, 0.5), (2, 0.5)]), Node::product([3, 5]), Node::product([4, 5]), Node::indicator(0, 0), Node::indicator(0, 1), Node::indicator(1, 0)];
        let net = Network::new(vars.clone(), nodes, NodeId(0)).unwrap();
        let rows = ["A=+a,B=+b", "A=¬a,B=¬b", "A=¬a,B=+b"].iter().map(|t| net.parse_assignment(t).unwrap()).collect();
        let stats = count_stats_selective(&net, &Dataset::new(vars, rows).unwrap()).unwrap();
        assert_eq!(stats.zero_rows, vec![1]);
        assert_eq!(stats.counts.node(NodeId(0)), &[1.0, 1.0]);
    }

    #[test]
    fn renormalize_cases() {
        let vars = vec![Variable::finite("V", ["+v", "¬v"]).unwrap()];
        let nodes = vec![Node::sum([(1, 2.0), (2, 2.0)]), Node::indicator(0, 0), Node::indicator(0, 1)];
        let net = Network::new(vars.clone(), nodes, NodeId(0)).unwrap();
        assert_eq!(renormalize(&net).unwrap().node(NodeId(0)).weights().unwrap(), &[0.5, 0.5]);
        let example = fixtures::running_example();
        assert_eq!(renormalize(&example).unwrap(), example);
        let nodes = vec![Node::sum([(1, 0.0), (2, 0.0)]), Node::indicator(0, 0), Node::indicator(0, 1)];
        let net = Network::new(vars, nodes, NodeId(0)).unwrap();
        assert_eq!(renormalize(&net), Err(SpnError::ZeroMass(NodeId(0))));
    }
}
