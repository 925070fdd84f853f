use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SpnError};
use crate::graph::{Assignment, Network, Node, NodeId};
use crate::inference::{downward_pass, full_upward_pass};
use crate::logspace::LOG_ZERO;

use super::config::{rows_log_likelihood, FitConfig, FitOutcome, TraceRecord};
use super::dataset::Dataset;
use super::parallel::{add_into, map_reduce};
use super::stats::EdgeMap;

/// ∂L_D/∂w_ij = Σ_t S_i^∂(v^t) · S_j(v^t), taken with respect to the raw
/// weight (no projection onto the simplex).
pub fn gradient(net: &Network, data: &Dataset) -> Result<EdgeMap> {
    let rows = data.rows_for(net)?;
    let idx: Vec<usize> = (0..rows.len()).collect();
    rows_gradient(net, &rows, &idx, 0)
}

pub(crate) fn rows_gradient(net: &Network, rows: &[Assignment], idx: &[usize], threads: usize) -> Result<EdgeMap> {
    let mut map = EdgeMap::zeros(net);
    let n = map.len();
    let sums: Vec<NodeId> = net.sum_nodes().filter(|&i| net.is_reachable(i)).collect();
    let offsets: Vec<usize> = sums.iter().map(|&i| map.offset(i)).collect();
    let g = map_reduce(
        idx.len(),
        threads,
        |range| {
            let mut g = vec![0.0; n];
            for &t in &idx[range] {
                let row = &rows[t];
                net.check_assignment(row)?;
                let values = full_upward_pass(net, row)?;
                if values[net.root().0] == LOG_ZERO {
                    return Err(SpnError::ZeroProbabilityRow { row: t });
                }
                let d = downward_pass(net, &values)?;
                for (&i, &off) in sums.iter().zip(&offsets) {
                    if d[i.0] == LOG_ZERO {
                        continue;
                    }
                    for (k, c) in net.node(i).children().iter().enumerate() {
                        g[off + k] += (d[i.0] + values[c.0]).exp();
                    }
                }
            }
            Ok(g)
        },
        add_into,
    )?;
    if let Some(g) = g {
        *map.values_mut() = g;
    }
    Ok(map)
}

/// Clamp negative weights to zero, then renormalize; a node left without
/// mass falls back to uniform.
fn project(w: &mut [f64]) {
    for x in w.iter_mut() {
        *x = x.max(0.0);
    }
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        let u = 1.0 / w.len() as f64;
        w.iter_mut().for_each(|x| *x = u);
    }
}

/// Gradient ascent on L_D: full batch, stochastic (`batch_size = 1`) or
/// mini-batch. Rows are reshuffled every epoch from the seed and cut into
/// contiguous batches.
pub fn gd_fit(net: &Network, data: &Dataset, cfg: &FitConfig) -> Result<FitOutcome> {
    if data.is_empty() {
        return Err(SpnError::EmptyDataset);
    }
    cfg.check(data.len())?;
    let rows = data.rows_for(net)?;
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ll = rows_log_likelihood(&net, &rows, cfg.threads)?;
    let mut trace = vec![TraceRecord { epoch: 0, log_likelihood: ll, max_delta: 0.0 }];
    let batch = cfg.batch_size.unwrap_or(rows.len());
    let sums: Vec<NodeId> = net.sum_nodes().collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for epoch in 1..=cfg.epochs {
        let start: Vec<Vec<f64>> = sums.iter().map(|&i| net.node(i).weights().expect("sum").to_vec()).collect();
        if batch < rows.len() {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let g = rows_gradient(&net, &rows, chunk, cfg.threads)?;
            for &i in &sums {
                let Node::Sum { weights, .. } = net.node(i) else { unreachable!() };
                let mut w: Vec<f64> = weights.iter().zip(g.node(i)).map(|(w, g)| w + cfg.learning_rate * g).collect();
                project(&mut w);
                net.set_weights(i, w)?;
            }
        }
        let mut delta: f64 = 0.0;
        for (&i, old) in sums.iter().zip(&start) {
            for (a, b) in old.iter().zip(net.node(i).weights().expect("sum")) {
                delta = delta.max((a - b).abs());
            }
        }
        let ll = rows_log_likelihood(&net, &rows, cfg.threads)?;
        if ll.is_nan() {
            return Err(SpnError::Numerical(format!("log-likelihood became NaN at epoch {epoch}")));
        }
        trace.push(TraceRecord { epoch, log_likelihood: ll, max_delta: delta });
        if delta < cfg.tolerance {
            break;
        }
    }
    Ok(FitOutcome { network: net, trace })
}
