//! Random valid networks and datasets for property tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spn::graph::VarId;
use spn::inference::sample;
use spn::learning::Dataset;
use spn::{Assignment, Network, Node, NodeId, Variable};

#[derive(Clone, Copy, Debug)]
pub struct Spec {
    pub max_vars: usize,
    pub max_nodes: usize,
    /// Every sum node splits on a variable through indicators.
    pub selective: bool,
    /// Allow bare indicator leaves (zero-probability regions).
    pub indicators: bool,
}

impl Default for Spec {
    fn default() -> Self {
        Spec { max_vars: 6, max_nodes: 120, selective: false, indicators: true }
    }
}

pub fn binary_vars(n: usize) -> Vec<Variable> {
    (0..n).map(|i| Variable::finite(format!("V{i}"), ["0", "1"]).unwrap()).collect()
}

struct Gen {
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    spec: Spec,
    memo: HashMap<Vec<usize>, Vec<usize>>,
}

impl Gen {
    fn push(&mut self, n: Node) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn weights(&mut self, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| 0.05 + self.rng.random::<f64>()).collect();
        let t: f64 = raw.iter().sum();
        raw.iter().map(|w| w / t).collect()
    }

    fn leaf(&mut self, v: usize) -> usize {
        let r: f64 = self.rng.random();
        if self.spec.indicators && r < 0.15 {
            let s = self.rng.random_range(0..2);
            self.push(Node::indicator(v, s))
        } else if r < 0.55 {
            let w = self.weights(2);
            self.push(Node::categorical(v, w))
        } else {
            let a = self.push(Node::indicator(v, 0));
            let b = self.push(Node::indicator(v, 1));
            let w = self.weights(2);
            self.push(Node::sum([(a, w[0]), (b, w[1])]))
        }
    }

    fn factorized(&mut self, scope: &[usize]) -> usize {
        if scope.len() == 1 {
            return self.leaf(scope[0]);
        }
        let kids: Vec<usize> = scope.iter().map(|&v| self.leaf(v)).collect();
        self.push(Node::product(kids))
    }

    fn build(&mut self, scope: &[usize], depth: usize) -> usize {
        if let Some(prev) = self.memo.get(scope) {
            if self.rng.random::<f64>() < 0.2 {
                return prev[self.rng.random_range(0..prev.len())];
            }
        }
        let id = self.fresh(scope, depth);
        self.memo.entry(scope.to_vec()).or_default().push(id);
        id
    }

    fn fresh(&mut self, scope: &[usize], depth: usize) -> usize {
        let room = self.spec.max_nodes.saturating_sub(self.nodes.len());
        if scope.len() == 1 {
            return self.leaf(scope[0]);
        }
        if depth >= 5 || room < 4 * scope.len() + 8 {
            return self.factorized(scope);
        }
        if self.rng.random::<f64>() < 0.5 {
            // product over a random partition
            let mut vars = scope.to_vec();
            vars.shuffle(&mut self.rng);
            let k = self.rng.random_range(2..=scope.len().min(3));
            let mut cuts: Vec<usize> = (1..vars.len()).collect();
            cuts.shuffle(&mut self.rng);
            let mut cuts: Vec<usize> = cuts[..k - 1].to_vec();
            cuts.sort();
            let mut blocks = Vec::new();
            let mut start = 0;
            for c in cuts.into_iter().chain([vars.len()]) {
                let mut b = vars[start..c].to_vec();
                b.sort();
                blocks.push(b);
                start = c;
            }
            let kids: Vec<usize> = blocks.iter().map(|b| self.build(b, depth + 1)).collect();
            self.push(Node::product(kids))
        } else if self.spec.selective {
            let v = scope[self.rng.random_range(0..scope.len())];
            let rest: Vec<usize> = scope.iter().copied().filter(|&u| u != v).collect();
            let mut kids = Vec::new();
            for s in 0..2 {
                let ind = self.push(Node::indicator(v, s));
                let sub = self.build(&rest, depth + 1);
                kids.push(self.push(Node::product([ind, sub])));
            }
            let w = self.weights(2);
            self.push(Node::sum([(kids[0], w[0]), (kids[1], w[1])]))
        } else {
            let k = self.rng.random_range(2..=3);
            let mut kids: Vec<usize> = Vec::new();
            for _ in 0..k {
                let c = self.build(scope, depth + 1);
                if !kids.contains(&c) {
                    kids.push(c);
                }
            }
            let w = self.weights(kids.len());
            self.push(Node::sum(kids.into_iter().zip(w)))
        }
    }
}

/// A valid network over `2..=spec.max_vars` binary variables with at most
/// `spec.max_nodes` nodes (oversized draws are redrawn from a derived seed).
pub fn random_network(seed: u64, spec: Spec) -> Network {
    let mut attempt = seed;
    loop {
        let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(attempt), nodes: Vec::new(), spec, memo: HashMap::new() };
        let n = g.rng.random_range(2..=spec.max_vars.max(2));
        let scope: Vec<usize> = (0..n).collect();
        let root = g.build(&scope, 0);
        if g.nodes.len() <= spec.max_nodes {
            return Network::new(binary_vars(n), g.nodes, NodeId(root)).unwrap();
        }
        attempt = attempt.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    }
}

/// `n` rows sampled from `net`, each cell hidden with probability `missing`.
pub fn random_dataset(net: &Network, seed: u64, n: usize, missing: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let rows = sample(net, seed, n)
        .unwrap()
        .into_iter()
        .map(|r| {
            let mut out = Assignment::empty();
            for (v, x) in r.iter() {
                if rng.random::<f64>() >= missing {
                    out.set(v, x);
                }
            }
            out
        })
        .collect();
    Dataset::new(net.variables().to_vec(), rows).unwrap()
}

/// Every partial assignment of `n` binary variables (3^n of them), indexed in
/// base 3 with digit 2 meaning unbound, variable 0 most significant.
pub fn all_partial(n: usize) -> Vec<Assignment> {
    let total = 3usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut a = Assignment::empty();
            for v in (0..n).rev() {
                let d = code % 3;
                code /= 3;
                if d < 2 {
                    a.set(VarId(v), spn::Value::State(d));
                }
            }
            a
        })
        .collect()
}

/// Marginals of every partial assignment from a complete joint table over `n`
/// binary variables in lexicographic order, same indexing as [`all_partial`].
/// An unbound digit is the sum of the two codes binding it; both are smaller,
/// so one ascending sweep suffices.
pub fn partial_marginals(joint: &[f64], n: usize) -> Vec<f64> {
    let total = 3usize.pow(n as u32);
    let mut out = vec![0.0; total];
    for code in 0..total {
        let mut c = code;
        let mut place = 1;
        let mut free = None;
        let mut idx = 0;
        for v in (0..n).rev() {
            let d = c % 3;
            c /= 3;
            if d == 2 && free.is_none() {
                free = Some(place);
            }
            idx |= (d & 1) << (n - 1 - v);
            place *= 3;
        }
        out[code] = match free {
            None => joint[idx],
            Some(p) => out[code - 2 * p] + out[code - p],
        };
    }
    out
}
