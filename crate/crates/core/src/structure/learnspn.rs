use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SpnError};
use crate::graph::{LeafDistribution, Network, Node, NodeId, Value, VarId, Variable};
use crate::learning::{Dataset, VARIANCE_FLOOR};

use super::cluster::cluster_instances;
use super::gtest::split_variables;
use super::slice::{DataSlice, LearnConfig};

/// Smoothed maximum-likelihood leaf: `(count + α) / (N + α·|states|)` for a
/// finite variable, sample mean and population variance (floored) for a
/// continuous one. Missing values are skipped.
pub fn fit_univariate(values: &[Option<Value>], var: VarId, variable: &Variable, alpha: f64) -> Result<LeafDistribution> {
    match variable.num_states() {
        Some(m) => {
            let mut counts = vec![0.0; m];
            for s in values.iter().flatten().filter_map(|v| v.state()) {
                counts[s] += 1.0;
            }
            let total: f64 = counts.iter().sum::<f64>() + alpha * m as f64;
            if total <= 0.0 {
                return Err(SpnError::EmptyDataset);
            }
            Ok(LeafDistribution::Categorical { var, probs: counts.iter().map(|c| (c + alpha) / total).collect() })
        }
        None => {
            let xs: Vec<f64> = values.iter().flatten().filter_map(|v| v.real()).collect();
            if xs.is_empty() {
                return Err(SpnError::EmptyDataset);
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let variance = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).max(VARIANCE_FLOOR);
            Ok(LeafDistribution::Gaussian { var, mean, variance })
        }
    }
}

// a slice column with nothing observed gets a uniform (or standard normal) leaf
fn slice_leaf(slice: &DataSlice<'_>, var: VarId, alpha: f64) -> LeafDistribution {
    let values: Vec<Option<Value>> = slice.values(var).collect();
    let variable = &slice.data.variables()[var.0];
    fit_univariate(&values, var, variable, alpha).unwrap_or_else(|_| match variable.num_states() {
        Some(m) => LeafDistribution::Categorical { var, probs: vec![1.0 / m as f64; m] },
        None => LeafDistribution::Gaussian { var, mean: 0.0, variance: 1.0 },
    })
}

enum Part {
    Leaf(LeafDistribution),
    Product(Vec<usize>),
    // (child, number of rows behind it)
    Sum(Vec<(usize, usize)>),
}

#[derive(Default)]
struct Builder {
    parts: Vec<Part>,
}

impl Builder {
    fn leaf(&mut self, leaf: LeafDistribution) -> usize {
        self.parts.push(Part::Leaf(leaf));
        self.parts.len() - 1
    }

    /// Product over `children`, absorbing child products; a lone child is returned as is.
    fn product(&mut self, children: Vec<usize>) -> usize {
        let mut flat = Vec::new();
        for c in children {
            match &self.parts[c] {
                Part::Product(gc) => flat.extend_from_slice(gc),
                _ => flat.push(c),
            }
        }
        if flat.len() == 1 {
            return flat[0];
        }
        self.parts.push(Part::Product(flat));
        self.parts.len() - 1
    }

    /// Sum over `(child, rows)`, absorbing child sums (their row counts add up
    /// to the child's, so the weights stay exact count ratios).
    fn sum(&mut self, children: Vec<(usize, usize)>) -> usize {
        let mut flat = Vec::new();
        for (c, n) in children {
            match &self.parts[c] {
                Part::Sum(gc) => flat.extend_from_slice(gc),
                _ => flat.push((c, n)),
            }
        }
        if flat.len() == 1 {
            return flat[0].0;
        }
        self.parts.push(Part::Sum(flat));
        self.parts.len() - 1
    }

    /// Renumbers the parts reachable from `root` in depth-first preorder.
    fn finish(self, variables: Vec<Variable>, root: usize) -> Result<Network> {
        let mut id = vec![usize::MAX; self.parts.len()];
        let mut order = Vec::new();
        let mut stack = vec![root];
        while let Some(p) = stack.pop() {
            if id[p] != usize::MAX {
                continue;
            }
            id[p] = order.len();
            order.push(p);
            match &self.parts[p] {
                Part::Leaf(_) => {}
                Part::Product(cs) => stack.extend(cs.iter().rev()),
                Part::Sum(cs) => stack.extend(cs.iter().rev().map(|(c, _)| *c)),
            }
        }
        let mut parts: Vec<Option<Part>> = self.parts.into_iter().map(Some).collect();
        let nodes = order
            .iter()
            .map(|&p| match parts[p].take().expect("visited once") {
                Part::Leaf(l) => Node::Leaf(l),
                Part::Product(cs) => Node::Product { children: cs.iter().map(|c| NodeId(id[*c])).collect() },
                Part::Sum(cs) => {
                    let total: usize = cs.iter().map(|(_, n)| n).sum();
                    Node::Sum {
                        children: cs.iter().map(|(c, _)| NodeId(id[*c])).collect(),
                        weights: cs.iter().map(|(_, n)| *n as f64 / total as f64).collect(),
                    }
                }
            })
            .collect();
        Network::new(variables, nodes, NodeId(0))
    }
}

fn naive(b: &mut Builder, slice: &DataSlice<'_>, alpha: f64) -> usize {
    let leaves = slice.vars.iter().map(|&v| b.leaf(slice_leaf(slice, v, alpha))).collect();
    b.product(leaves)
}

/// Product of one smoothed univariate leaf per slice variable (a single
/// variable gives the leaf alone).
pub fn naive_factorization(slice: &DataSlice<'_>, alpha: f64) -> Result<Network> {
    if slice.vars.is_empty() {
        return Err(SpnError::InvalidConfig("no variables to factorize".into()));
    }
    if slice.rows.is_empty() {
        return Err(SpnError::EmptyDataset);
    }
    let mut b = Builder::default();
    let root = naive(&mut b, slice, alpha);
    b.finish(slice.data.variables().to_vec(), root)
}

fn child_seed(seed: u64, branch: usize) -> u64 {
    // splitmix64 step over (seed, branch)
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(branch as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn learn(b: &mut Builder, slice: DataSlice<'_>, cfg: &LearnConfig, seed: u64, first: bool) -> usize {
    if slice.vars.len() == 1 {
        return b.leaf(slice_leaf(&slice, slice.vars[0], cfg.alpha));
    }
    if slice.rows.len() < cfg.min_instances {
        return naive(b, &slice, cfg.alpha);
    }
    let split = |b: &mut Builder, slice: &DataSlice<'_>| -> Option<usize> {
        let parts = split_variables(slice, cfg);
        if parts.len() < 2 {
            return None;
        }
        let children = parts
            .into_iter()
            .enumerate()
            .map(|(i, vars)| learn(b, slice.with_vars(vars), cfg, child_seed(seed, i), false))
            .collect();
        Some(b.product(children))
    };
    if !first {
        if let Some(p) = split(b, &slice) {
            return p;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clustering = cluster_instances(&slice, cfg, &mut rng);
    if clustering.clusters.len() < 2 {
        // nothing to cluster: split if the root never tried, else factorize
        if first {
            if let Some(p) = split(b, &slice) {
                return p;
            }
        }
        return naive(b, &slice, cfg.alpha);
    }
    let children = clustering
        .clusters
        .into_iter()
        .enumerate()
        .map(|(i, rows)| {
            let n = rows.len();
            (learn(b, slice.with_rows(rows), cfg, child_seed(seed, i), false), n)
        })
        .collect();
    b.sum(children)
}

/// LearnSPN: single variable → leaf; fewer than m rows → naive
/// factorization; otherwise a product over independent variable groups when
/// the G-test finds some, else a sum over instance clusters weighted by
/// their sizes. The top call clusters without trying a split first.
pub fn learn_spn(data: &Dataset, cfg: &LearnConfig) -> Result<Network> {
    cfg.check()?;
    if data.is_empty() {
        return Err(SpnError::EmptyDataset);
    }
    if data.variables().is_empty() {
        return Err(SpnError::InvalidConfig("the dataset has no variables".into()));
    }
    let mut b = Builder::default();
    let root = learn(&mut b, DataSlice::full(data), cfg, cfg.seed, true);
    b.finish(data.variables().to_vec(), root)
}
