//! Min-tree of the node-weighted shape space and extinction values of its minima.

use crate::error::{Error, Result};
use crate::tree::{NodeId, ShapeTree};
use crate::uf;

/// Min-tree of a weighted tree graph (nodes of a [`ShapeTree`], edges its parent links).
///
/// `order` is the processing sequence: increasing weight, and among equal weights decreasing
/// node id, so every component is represented by its smallest node id at its own level.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSpaceMinTree {
    pub parent: Vec<NodeId>,
    pub level: Vec<f64>,
    pub order: Vec<NodeId>,
}

impl ShapeSpaceMinTree {
    pub fn root(&self) -> NodeId {
        *self.order.last().expect("nonempty min-tree")
    }

    /// True if `v` represents its component (the component's smallest id at that level).
    pub fn is_canonical(&self, v: NodeId) -> bool {
        let p = self.parent[v as usize];
        p == v || self.level[p as usize] != self.level[v as usize]
    }

    /// Canonical nodes without a lower child component: the regional minima.
    pub fn minima(&self) -> Vec<NodeId> {
        let n = self.parent.len();
        let mut has_lower_child = vec![false; n];
        for v in 0..n {
            let p = self.parent[v] as usize;
            if p != v && self.level[p] > self.level[v] {
                has_lower_child[p] = true;
            }
        }
        (0..n as NodeId)
            .filter(|&v| self.is_canonical(v) && !has_lower_child[v as usize])
            .collect()
    }
}

/// Builds the min-tree of `weights` over the shape space of `tree`.
pub fn build_shape_space_min_tree(tree: &ShapeTree, weights: &[f64]) -> Result<ShapeSpaceMinTree> {
    min_tree_of_parent_graph(tree.parents(), weights)
}

/// Same as [`build_shape_space_min_tree`] for any rooted tree given as a parent array.
pub fn min_tree_of_parent_graph(tree_parent: &[NodeId], weights: &[f64]) -> Result<ShapeSpaceMinTree> {
    let n = tree_parent.len();
    if weights.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut adj_start = vec![0u32; n + 1];
    for (v, &p) in tree_parent.iter().enumerate() {
        if p as usize != v {
            adj_start[v + 1] += 1;
            adj_start[p as usize + 1] += 1;
        }
    }
    for i in 0..n {
        adj_start[i + 1] += adj_start[i];
    }
    let mut fill = adj_start.clone();
    let mut adj = vec![0u32; adj_start[n] as usize];
    for (v, &p) in tree_parent.iter().enumerate() {
        if p as usize != v {
            adj[fill[v] as usize] = p;
            fill[v] += 1;
            adj[fill[p as usize] as usize] = v as NodeId;
            fill[p as usize] += 1;
        }
    }

    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    order.sort_by(|&a, &b| weights[a as usize].total_cmp(&weights[b as usize]).then(b.cmp(&a)));

    const UNSET: u32 = u32::MAX;
    let mut parent = vec![UNSET; n];
    let mut zpar = vec![UNSET; n];
    for &p in &order {
        parent[p as usize] = p;
        zpar[p as usize] = p;
        for &q in &adj[adj_start[p as usize] as usize..adj_start[p as usize + 1] as usize] {
            if zpar[q as usize] != UNSET {
                let r = uf::find(&mut zpar, q);
                if r != p {
                    parent[r as usize] = p;
                    zpar[r as usize] = p;
                }
            }
        }
    }
    for &p in order.iter().rev() {
        let q = parent[p as usize];
        let qq = parent[q as usize];
        if weights[qq as usize] == weights[q as usize] {
            parent[p as usize] = qq;
        }
    }
    Ok(ShapeSpaceMinTree {
        parent,
        level: weights.to_vec(),
        order,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtinctionValues {
    /// One value per node; zero except at regional minima.
    pub values: Vec<f64>,
    /// Regional minima, ascending by id.
    pub minima: Vec<NodeId>,
}

impl ExtinctionValues {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Extinction of every minimum: the weight climbed before its component meets one holding a
/// smaller minimum, with minima ordered by (weight, node id).
pub fn compute_extinction(mt: &ShapeSpaceMinTree) -> ExtinctionValues {
    let n = mt.parent.len();
    let minima = mt.minima();
    let precedes = |a: NodeId, b: NodeId| (mt.level[a as usize], a) < (mt.level[b as usize], b);

    // smallest minimum below each component, children first
    const UNSET: u32 = u32::MAX;
    let mut original_min = vec![UNSET; n];
    for &m in &minima {
        original_min[m as usize] = m;
    }
    for &v in &mt.order {
        if !mt.is_canonical(v) {
            continue;
        }
        let p = mt.parent[v as usize];
        let om = original_min[v as usize];
        if p != v && om != UNSET {
            let slot = &mut original_min[p as usize];
            if *slot == UNSET || precedes(om, *slot) {
                *slot = om;
            }
        }
    }

    let mut values = vec![0.0; n];
    for &m in &minima {
        let mut a = m;
        loop {
            let p = mt.parent[a as usize];
            if p == a || original_min[p as usize] != m {
                break;
            }
            a = p;
        }
        let p = mt.parent[a as usize];
        let top = if p == a { a } else { p };
        values[m as usize] = mt.level[top as usize] - mt.level[m as usize];
    }
    ExtinctionValues { values, minima }
}
