//! Piecewise-constant Mumford-Shah energy over prunings of the tree of shapes.

mod attribute;
mod baseline;

use std::cell::Cell;

pub use attribute::{compute_lambda_attribute, gradient_order, simplify_fixed_lambda, LambdaAttribute, Selection};
pub use baseline::{baseline_largest_decrease, baseline_largest_decrease_within};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::khalimsky::KhalimskyGrid;
use crate::tree::{NodeId, NodeInfo, RegionDecomposition, ShapeTree, ROOT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParams {
    /// Price of one unit of contour length, in squared gray levels per 1-face.
    pub lambda: f64,
}

impl EnergyParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(EnergyParams { lambda })
    }
}

/// Increase of summed squared error when two regions with areas `a1`, `a2` and value sums
/// `s1`, `s2` are replaced by their union. Written as (s1·a2 − s2·a1)²/(a1·a2·(a1+a2)),
/// which equals s1²/a1 + s2²/a2 − (s1+s2)²/(a1+a2) without the cancellation.
#[inline]
pub fn merge_cost(a1: f64, s1: f64, a2: f64, s2: f64) -> f64 {
    if a1 <= 0.0 || a2 <= 0.0 {
        return 0.0;
    }
    let d = s1 * a2 - s2 * a1;
    d * d / (a1 * a2 * (a1 + a2))
}

/// Which nodes are still present while shapes are merged into their parents.
///
/// Removed nodes keep a link towards their original parent; following links (with path
/// compression) lands on the live node that absorbed them.
#[derive(Clone, Debug)]
pub struct MergeState {
    live: Vec<bool>,
    link: Vec<Cell<NodeId>>,
    area: Vec<f64>,
    sum: Vec<f64>,
    live_count: usize,
}

impl MergeState {
    pub fn new(tree: &ShapeTree, decomp: &RegionDecomposition) -> Self {
        let n = tree.len();
        MergeState {
            live: vec![true; n],
            link: (0..n as NodeId).map(Cell::new).collect(),
            area: decomp.area.clone(),
            sum: decomp.sum_f.clone(),
            live_count: n,
        }
    }

    pub fn is_live(&self, v: NodeId) -> bool {
        self.live[v as usize]
    }

    pub fn live_count(&self) -> usize {
        self.live_count
    }

    pub fn live_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.live.len() as NodeId).filter(|&v| self.live[v as usize])
    }

    /// Live node whose region currently contains node `v`'s region.
    pub fn representative(&self, v: NodeId) -> NodeId {
        let mut r = v;
        while self.link[r as usize].get() != r {
            r = self.link[r as usize].get();
        }
        let mut x = v;
        while x != r {
            let next = self.link[x as usize].get();
            self.link[x as usize].set(r);
            x = next;
        }
        r
    }

    pub fn live_parent(&self, tree: &ShapeTree, v: NodeId) -> NodeId {
        self.representative(tree.parent(v))
    }

    /// Current area of R_v.
    pub fn area(&self, v: NodeId) -> f64 {
        self.area[v as usize]
    }

    /// Current value sum over R_v.
    pub fn sum(&self, v: NodeId) -> f64 {
        self.sum[v as usize]
    }

    /// Data part of removing `v`: squared-error increase of merging R_v into its live parent.
    pub fn merge_cost(&self, tree: &ShapeTree, v: NodeId) -> f64 {
        let p = self.live_parent(tree, v);
        merge_cost(self.area(v), self.sum(v), self.area(p), self.sum(p))
    }

    /// Merges live non-root node `v` into its live parent and returns that parent.
    pub fn merge(&mut self, tree: &ShapeTree, v: NodeId) -> NodeId {
        debug_assert!(v != ROOT && self.is_live(v));
        let p = self.live_parent(tree, v);
        let (vi, pi) = (v as usize, p as usize);
        self.area[pi] += self.area[vi];
        self.sum[pi] += self.sum[vi];
        self.area[vi] = 0.0;
        self.sum[vi] = 0.0;
        self.live[vi] = false;
        self.link[vi].set(p);
        self.live_count -= 1;
        p
    }

    /// Region id (live representative) of each pixel.
    pub fn pixel_labels(&self, tree: &ShapeTree) -> Vec<NodeId> {
        tree.pixel_nodes().iter().map(|&v| self.representative(v)).collect()
    }
}

/// ΔE of removing `v`: merge cost minus λ times the original contour length of `v`.
pub fn delta_energy(tree: &ShapeTree, info: &NodeInfo, state: &MergeState, v: NodeId, params: EnergyParams) -> Result<f64> {
    if v == ROOT {
        return Err(Error::InvalidArgument("the root cannot be removed".into()));
    }
    if !state.is_live(v) {
        return Err(Error::InvalidArgument(format!("node {v} has already been merged")));
    }
    Ok(delta_unchecked(tree, info, state, v, params.lambda))
}

#[inline]
pub(crate) fn delta_unchecked(tree: &ShapeTree, info: &NodeInfo, state: &MergeState, v: NodeId, lambda: f64) -> f64 {
    state.merge_cost(tree, v) - lambda * info.length[v as usize] as f64
}

/// Squared deviation of each pixel from the mean of its labelled region.
fn data_term(img: &GrayImage, labels: &[u32], count: usize) -> f64 {
    let mut area = vec![0.0; count];
    let mut sum = vec![0.0; count];
    for (&l, &f) in labels.iter().zip(img.data()) {
        area[l as usize] += 1.0;
        sum[l as usize] += f;
    }
    labels
        .iter()
        .zip(img.data())
        .map(|(&l, &f)| {
            let d = f - sum[l as usize] / area[l as usize];
            d * d
        })
        .sum()
}

/// Energy of the current pruning: squared error against region means plus λ times the summed
/// contour length of all live shapes, root included.
///
/// Contours are counted per live level line, which makes [`delta_energy`] the exact increment
/// of this quantity. When two live sibling shapes touch, their shared faces count twice here;
/// [`partition_energy`] counts each separating face once instead.
pub fn total_energy(img: &GrayImage, tree: &ShapeTree, info: &NodeInfo, state: &MergeState, params: EnergyParams) -> f64 {
    let labels = state.pixel_labels(tree);
    let data = data_term(img, &labels, tree.len());
    let length: u64 = state.live_nodes().map(|v| info.length[v as usize]).sum();
    data + params.lambda * length as f64
}

/// Energy of an arbitrary labelling: squared error against region means plus λ times the
/// number of 1-faces that separate two labels or lie on the domain boundary.
pub fn partition_energy(img: &GrayImage, labels: &[u32], lambda: f64) -> f64 {
    let count = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let data = data_term(img, labels, count);
    let grid = KhalimskyGrid::for_image(img);
    let faces = grid
        .edges()
        .filter(|&(x, y)| match grid.edge_sides(x, y) {
            (Some(p), Some(q)) => labels[p] != labels[q],
            _ => true,
        })
        .count();
    data + lambda * faces as f64
}
