use crate::error::{Result, SpnError};
use crate::graph::{Assignment, LeafDistribution, Network, Node, NodeId, Value};
use crate::inference::{best_child, downward_pass, full_upward_pass, max_log_values};
use crate::logspace::{ln_weight, LOG_ZERO};

use super::config::{rows_log_likelihood, FitConfig, FitOutcome, TraceRecord};
use super::dataset::Dataset;
use super::parallel::{add_into, map_reduce};
use super::stats::{weights_from_counts, EdgeMap};

/// Variance floor for re-estimated gaussian leaves.
pub const VARIANCE_FLOOR: f64 = 1e-6;

// Flat accumulator: one slot per sum link, then per updatable leaf either one
// slot per state (categorical) or [weight, Σx, Σx²] (gaussian).
struct Layout {
    edges: EdgeMap,
    sums: Vec<NodeId>,
    leaves: Vec<(NodeId, usize)>,
    len: usize,
}

impl Layout {
    fn new(net: &Network, with_leaves: bool) -> Layout {
        let edges = EdgeMap::zeros(net);
        let sums = net.sum_nodes().filter(|&i| net.is_reachable(i)).collect();
        let mut len = edges.len();
        let mut leaves = Vec::new();
        if with_leaves {
            for id in net.ids().filter(|&i| net.is_reachable(i)) {
                let width = match net.node(id).leaf() {
                    Some(LeafDistribution::Categorical { probs, .. }) => probs.len(),
                    Some(LeafDistribution::Gaussian { .. }) => 3,
                    _ => continue,
                };
                leaves.push((id, len));
                len += width;
            }
        }
        Layout { edges, sums, leaves, len }
    }
}

fn accumulate_leaf(leaf: &LeafDistribution, value: Option<Value>, flow: f64, acc: &mut [f64]) {
    match (leaf, value) {
        (LeafDistribution::Categorical { .. }, Some(Value::State(s))) => acc[s] += flow,
        (LeafDistribution::Categorical { probs, .. }, _) => {
            for (a, p) in acc.iter_mut().zip(probs) {
                *a += flow * p;
            }
        }
        (LeafDistribution::Gaussian { .. }, Some(Value::Real(x))) => {
            acc[0] += flow;
            acc[1] += flow * x;
            acc[2] += flow * x * x;
        }
        (LeafDistribution::Gaussian { mean, variance, .. }, _) => {
            acc[0] += flow;
            acc[1] += flow * mean;
            acc[2] += flow * (variance + mean * mean);
        }
        _ => {}
    }
}

/// M-step: new weights and leaf parameters from the accumulated statistics.
/// Returns the largest absolute parameter change.
fn maximize(net: &mut Network, layout: &Layout, acc: &[f64], alpha: f64) -> Result<f64> {
    let mut delta: f64 = 0.0;
    for &i in &layout.sums {
        let off = layout.edges.offset(i);
        let k = net.node(i).children().len();
        let new = weights_from_counts(&acc[off..off + k], alpha);
        let old = net.node(i).weights().expect("sum");
        delta = old.iter().zip(&new).fold(delta, |d, (a, b)| d.max((a - b).abs()));
        net.set_weights(i, new)?;
    }
    for &(id, off) in &layout.leaves {
        let leaf = net.node(id).leaf().expect("leaf").clone();
        let updated = match &leaf {
            LeafDistribution::Categorical { var, probs } => {
                let stats = &acc[off..off + probs.len()];
                let total: f64 = stats.iter().map(|s| s + alpha).sum();
                if total <= 0.0 {
                    continue;
                }
                let new: Vec<f64> = stats.iter().map(|s| (s + alpha) / total).collect();
                delta = probs.iter().zip(&new).fold(delta, |d, (a, b)| d.max((a - b).abs()));
                LeafDistribution::Categorical { var: *var, probs: new }
            }
            LeafDistribution::Gaussian { var, mean, variance } => {
                let (w, sx, sxx) = (acc[off], acc[off + 1], acc[off + 2]);
                if w <= 0.0 {
                    continue;
                }
                let m = sx / w;
                let v = (sxx / w - m * m).max(VARIANCE_FLOOR);
                delta = delta.max((m - mean).abs()).max((v - variance).abs());
                LeafDistribution::Gaussian { var: *var, mean: m, variance: v }
            }
            LeafDistribution::Indicator { .. } => continue,
        };
        net.set_leaf(id, updated)?;
    }
    Ok(delta)
}

fn soft_statistics(net: &Network, rows: &[Assignment], layout: &Layout, threads: usize) -> Result<Vec<f64>> {
    let acc = map_reduce(
        rows.len(),
        threads,
        |range| {
            let mut acc = vec![0.0; layout.len];
            for t in range {
                let row = &rows[t];
                let values = full_upward_pass(net, row)?;
                if values[net.root().0] == LOG_ZERO {
                    return Err(SpnError::ZeroProbabilityRow { row: t });
                }
                let d = downward_pass(net, &values)?;
                for &i in &layout.sums {
                    if d[i.0] == LOG_ZERO {
                        continue;
                    }
                    let Node::Sum { children, weights } = net.node(i) else { unreachable!() };
                    let off = layout.edges.offset(i);
                    for (k, (c, w)) in children.iter().zip(weights).enumerate() {
                        acc[off + k] += (ln_weight(*w) + d[i.0] + values[c.0]).exp();
                    }
                }
                for &(id, off) in &layout.leaves {
                    let flow = (d[id.0] + values[id.0]).exp();
                    if flow > 0.0 {
                        let leaf = net.node(id).leaf().expect("leaf");
                        accumulate_leaf(leaf, row.get(leaf.var()), flow, &mut acc[off..]);
                    }
                }
            }
            Ok(acc)
        },
        add_into,
    )?;
    Ok(acc.unwrap_or_else(|| vec![0.0; layout.len]))
}

/// Expected link counts n_ij = Σ_t w_ij · S_i^∂(v^t) · S_j(v^t) under the
/// current weights. Partial rows are marginalized by the evaluation itself.
pub fn soft_counts(net: &Network, data: &Dataset) -> Result<EdgeMap> {
    let rows = data.rows_for(net)?;
    let layout = Layout::new(net, false);
    let acc = soft_statistics(net, &rows, &layout, 0)?;
    let mut map = layout.edges;
    *map.values_mut() = acc;
    Ok(map)
}

type StatsFn = fn(&Network, &[Assignment], &Layout, usize) -> Result<Vec<f64>>;

fn hard_statistics(net: &Network, rows: &[Assignment], layout: &Layout, threads: usize) -> Result<Vec<f64>> {
    let leaf_slot: std::collections::HashMap<NodeId, usize> = layout.leaves.iter().copied().collect();
    let acc = map_reduce(
        rows.len(),
        threads,
        |range| {
            let mut acc = vec![0.0; layout.len];
            let mut stack = Vec::new();
            for t in range {
                let row = &rows[t];
                let values = max_log_values(net, row)?;
                if values[net.root().0] == LOG_ZERO {
                    return Err(SpnError::ZeroProbabilityRow { row: t });
                }
                stack.push(net.root());
                while let Some(id) = stack.pop() {
                    match net.node(id) {
                        Node::Product { children } => stack.extend_from_slice(children),
                        Node::Sum { children, weights } => {
                            let (c, _) = best_child(children, weights, &values).expect("positive sum node");
                            let k = children.iter().position(|x| *x == c).expect("child");
                            acc[layout.edges.offset(id) + k] += 1.0;
                            stack.push(c);
                        }
                        Node::Leaf(leaf) => {
                            if let Some(&off) = leaf_slot.get(&id) {
                                let value = row.get(leaf.var()).unwrap_or_else(|| leaf.mode().0);
                                accumulate_leaf(leaf, Some(value), 1.0, &mut acc[off..]);
                            }
                        }
                    }
                }
            }
            Ok(acc)
        },
        add_into,
    )?;
    Ok(acc.unwrap_or_else(|| vec![0.0; layout.len]))
}

fn iterate(
    net: &Network,
    data: &Dataset,
    cfg: &FitConfig,
    stats: StatsFn,
) -> Result<FitOutcome> {
    if data.is_empty() {
        return Err(SpnError::EmptyDataset);
    }
    cfg.check(data.len())?;
    let rows = data.rows_for(net)?;
    let mut net = net.clone();
    let layout = Layout::new(&net, cfg.update_leaves);
    let ll = rows_log_likelihood(&net, &rows, cfg.threads)?;
    let mut trace = vec![TraceRecord { epoch: 0, log_likelihood: ll, max_delta: 0.0 }];
    for epoch in 1..=cfg.epochs {
        let acc = stats(&net, &rows, &layout, cfg.threads)?;
        let delta = maximize(&mut net, &layout, &acc, cfg.alpha)?;
        let ll = rows_log_likelihood(&net, &rows, cfg.threads)?;
        if ll.is_nan() {
            return Err(SpnError::Numerical(format!("log-likelihood became NaN at iteration {epoch}")));
        }
        trace.push(TraceRecord { epoch, log_likelihood: ll, max_delta: delta });
        if delta < cfg.tolerance {
            break;
        }
    }
    Ok(FitOutcome { network: net, trace })
}

/// Soft EM: expected counts from the derivative pass, then the smoothed
/// maximum-likelihood update. Leaves are re-estimated from their posterior
/// flow when `cfg.update_leaves` is set.
pub fn em_fit(net: &Network, data: &Dataset, cfg: &FitConfig) -> Result<FitOutcome> {
    iterate(net, data, cfg, soft_statistics)
}

/// Hard EM: every row counts once for the best child of each sum node on its
/// best tree (row as evidence, ties to the lowest child id).
pub fn hard_em_fit(net: &Network, data: &Dataset, cfg: &FitConfig) -> Result<FitOutcome> {
    iterate(net, data, cfg, hard_statistics)
}
