//! Small reference networks used throughout the tests, the CLI and the
//! Python bindings.
//!
//! The three-variable networks over `A`, `B`, `C` keep the conventional
//! 1-based node numbering of the textbook figures: node `n_k` is stored at
//! [`NodeId`] `k - 1` (see [`one_based`]).

use crate::graph::{Network, Node, NodeId, Variable};

/// Maps 1-based figure numbering to the dense id used in these fixtures.
pub fn one_based(k: usize) -> NodeId {
    NodeId(k - 1)
}

fn abc() -> Vec<Variable> {
    vec![
        Variable::finite("A", ["+a", "¬a"]).expect("valid"),
        Variable::finite("B", ["+b", "¬b"]).expect("valid"),
        Variable::finite("C", ["+c", "¬c"]).expect("valid"),
    ]
}

// entries are (1-based id, node with 1-based child ids)
fn build(vars: Vec<Variable>, mut nodes: Vec<(usize, Node)>) -> Network {
    nodes.sort_by_key(|(k, _)| *k);
    let shift = |c: &NodeId| NodeId(c.0 - 1);
    let nodes = nodes
        .into_iter()
        .enumerate()
        .map(|(i, (k, node))| {
            assert_eq!(i + 1, k, "fixture ids must be dense");
            match node {
                Node::Sum { children, weights } => Node::Sum { children: children.iter().map(shift).collect(), weights },
                Node::Product { children } => Node::Product { children: children.iter().map(shift).collect() },
                leaf => leaf,
            }
        })
        .collect();
    Network::new(vars, nodes, NodeId(0)).expect("fixture is well formed")
}

/// Selective network over `A`, `B`, `C`. Under `¬a`, `C` does not depend
/// on `B`, so nodes 10 and 11 share the sum node 16.
///
/// Joint: P(+a,+b,¬c) = 0.108, P(+a,¬b,+c) = 0.144 (the MPE given +c),
/// P(¬a|+c) ≈ 0.57, P(¬b|+c) ≈ 0.68.
pub fn running_example() -> Network {
    build(
        abc(),
        vec![
            (1, Node::sum([(2, 0.3), (3, 0.7)])),
            (2, Node::product([4, 6])),
            (3, Node::product([5, 7])),
            (4, Node::indicator(0, 0)),
            (5, Node::indicator(0, 1)),
            (6, Node::sum([(8, 0.4), (9, 0.6)])),
            (7, Node::sum([(10, 0.5), (11, 0.5)])),
            (8, Node::product([12, 14])),
            (9, Node::product([13, 15])),
            (10, Node::product([12, 16])),
            (11, Node::product([13, 16])),
            (12, Node::indicator(1, 0)),
            (13, Node::indicator(1, 1)),
            (14, Node::sum([(17, 0.1), (18, 0.9)])),
            (15, Node::sum([(17, 0.8), (18, 0.2)])),
            (16, Node::sum([(17, 0.3), (18, 0.7)])),
            (17, Node::indicator(2, 0)),
            (18, Node::indicator(2, 1)),
        ],
    )
}

/// Same distribution as [`running_example`] without the shared node: every
/// (A, B) branch has its own sum node over `C`. Nodes 14, 15, 16 and 19 are
/// the four `C` nodes; 17 and 18 are the `C` indicators.
pub fn nested_example() -> Network {
    build(
        abc(),
        vec![
            (1, Node::sum([(2, 0.3), (3, 0.7)])),
            (2, Node::product([4, 6])),
            (3, Node::product([5, 7])),
            (4, Node::indicator(0, 0)),
            (5, Node::indicator(0, 1)),
            (6, Node::sum([(8, 0.4), (9, 0.6)])),
            (7, Node::sum([(10, 0.5), (11, 0.5)])),
            (8, Node::product([12, 14])),
            (9, Node::product([13, 15])),
            (10, Node::product([12, 16])),
            (11, Node::product([13, 19])),
            (12, Node::indicator(1, 0)),
            (13, Node::indicator(1, 1)),
            (14, Node::sum([(17, 0.1), (18, 0.9)])),
            (15, Node::sum([(17, 0.8), (18, 0.2)])),
            (16, Node::sum([(17, 0.3), (18, 0.7)])),
            (17, Node::indicator(2, 0)),
            (18, Node::indicator(2, 1)),
            (19, Node::sum([(17, 0.3), (18, 0.7)])),
        ],
    )
}

/// Sum root over a leaf on `V1` and a leaf on `V2` (weights 0.6 / 0.4, both
/// leaves uniform). Not complete: S(+v1) = S(¬v1) = 0.7.
pub fn incomplete() -> Network {
    let vars = vec![
        Variable::finite("V1", ["+v1", "¬v1"]).expect("valid"),
        Variable::finite("V2", ["+v2", "¬v2"]).expect("valid"),
    ];
    let nodes = vec![
        Node::sum([(1, 0.6), (2, 0.4)]),
        Node::categorical(0, vec![0.5, 0.5]),
        Node::categorical(1, vec![0.5, 0.5]),
    ];
    Network::new(vars, nodes, NodeId(0)).expect("fixture is well formed")
}

/// Product root over two uniform leaves on the same variable. Not
/// decomposable: S(+v) = S(¬v) = 0.25.
pub fn non_decomposable() -> Network {
    let vars = vec![Variable::finite("V", ["+v", "¬v"]).expect("valid")];
    let nodes = vec![
        Node::product([1, 2]),
        Node::categorical(0, vec![0.5, 0.5]),
        Node::categorical(0, vec![0.5, 0.5]),
    ];
    Network::new(vars, nodes, NodeId(0)).expect("fixture is well formed")
}

/// Non-selective mixture over two binary variables where the best single
/// induced tree is not the most probable configuration: the best tree
/// selects (x0, y0) with value 0.4 · 0.8 · 0.8 = 0.256 (true probability
/// 0.28), while MAX is (x1, y1) with probability 0.016 + 2 · 0.192 = 0.4.
pub fn bt_divergence() -> Network {
    let vars = vec![
        Variable::finite("X", ["x0", "x1"]).expect("valid"),
        Variable::finite("Y", ["y0", "y1"]).expect("valid"),
    ];
    let nodes = vec![
        Node::sum([(1, 0.4), (2, 0.3), (3, 0.3)]),
        Node::product([4, 5]),
        Node::product([6, 7]),
        Node::product([8, 9]),
        Node::categorical(0, vec![0.8, 0.2]),
        Node::categorical(1, vec![0.8, 0.2]),
        Node::categorical(0, vec![0.2, 0.8]),
        Node::categorical(1, vec![0.2, 0.8]),
        Node::categorical(0, vec![0.2, 0.8]),
        Node::categorical(1, vec![0.2, 0.8]),
    ];
    Network::new(vars, nodes, NodeId(0)).expect("fixture is well formed")
}
