use fixedbitset::FixedBitSet;

use super::{Network, Node, NodeId};
use crate::error::{Result, SpnError};

/// Set of variable indices.
pub type Scope = FixedBitSet;

/// Scope of every node: a leaf's scope is its variable, an inner node's is the
/// union of its children's scopes. Unreachable nodes are included.
pub fn compute_scopes(net: &Network) -> Result<Vec<Scope>> {
    let n = net.len();
    let nvars = net.variables().len();
    let mut scopes: Vec<Option<Scope>> = vec![None; n];
    let mut open = FixedBitSet::with_capacity(n);
    for start in 0..n {
        if scopes[start].is_some() {
            continue;
        }
        let mut stack = vec![(NodeId(start), 0usize)];
        open.insert(start);
        while let Some((id, next)) = stack.pop() {
            let children = net.node(id).children();
            if next < children.len() {
                stack.push((id, next + 1));
                let c = children[next];
                if scopes[c.0].is_none() {
                    if open.contains(c.0) {
                        return Err(SpnError::Cycle(c));
                    }
                    open.insert(c.0);
                    stack.push((c, 0));
                }
                continue;
            }
            let mut scope = FixedBitSet::with_capacity(nvars);
            match net.node(id) {
                Node::Leaf(leaf) => scope.insert(leaf.var().0),
                node => {
                    for c in node.children() {
                        scope.union_with(scopes[c.0].as_ref().expect("child finished first"));
                    }
                }
            }
            open.set(id.0, false);
            scopes[id.0] = Some(scope);
        }
    }
    Ok(scopes.into_iter().map(|s| s.expect("every node visited")).collect())
}
