//! Exhaustive reference implementations for small inputs.

use std::collections::{BTreeSet, VecDeque};

use crate::energy::partition_energy;
use crate::image::GrayImage;
use crate::tree::{NodeId, ShapeTree, ROOT};

/// Every distinct pixel set that is a hole-filled 4-connected component of an upper or lower
/// level set of the self-dual interpolation of `img`, restricted to pixels.
///
/// Exponential-free but slow (one flood per level and polarity); meant for images up to 16×16.
pub fn oracle_tree_of_shapes(img: &GrayImage) -> BTreeSet<Vec<u32>> {
    let (w, h) = (img.width(), img.height());
    let (rw, rh) = (2 * w - 1, 2 * h - 1);
    let u: Vec<f64> = (0..rw * rh)
        .map(|i| {
            let (rx, ry) = (i % rw, i / rw);
            let (x0, y0) = (rx / 2, ry / 2);
            let (x1, y1) = (rx.div_ceil(2), ry.div_ceil(2));
            let mut around = [img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1)];
            around.sort_by(f64::total_cmp);
            match (rx % 2, ry % 2) {
                (0, 0) => 2.0 * img.get(x0, y0),
                (1, 1) => around[1] + around[2],
                // an edge point sees its two pixels twice each
                _ => around[0] + around[3],
            }
        })
        .collect();
    let mut levels = u.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut family = BTreeSet::new();
    for &lambda in &levels {
        for upper in [true, false] {
            let inside: Vec<bool> = u.iter().map(|&v| if upper { v >= lambda } else { v <= lambda }).collect();
            for comp in components(&inside, rw, rh) {
                let filled = fill_holes(&comp, rw, rh);
                let pixels: Vec<u32> = (0..rw * rh)
                    .filter(|&i| filled[i] && (i % rw) % 2 == 0 && (i / rw) % 2 == 0)
                    .map(|i| ((i / rw / 2) * w + (i % rw) / 2) as u32)
                    .collect();
                if !pixels.is_empty() {
                    family.insert(pixels);
                }
            }
        }
    }
    family
}

fn neighbors(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % w, i / w);
    [
        (y > 0).then(|| i - w),
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

fn components(mask: &[bool], w: usize, h: usize) -> Vec<Vec<bool>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    for s in 0..mask.len() {
        if !mask[s] || seen[s] {
            continue;
        }
        let mut comp = vec![false; mask.len()];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(p) = queue.pop_front() {
            comp[p] = true;
            for q in neighbors(p, w, h) {
                if mask[q] && !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Adds every complement component that does not reach the grid border.
fn fill_holes(comp: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut outside = vec![false; comp.len()];
    let mut queue = VecDeque::new();
    for i in 0..comp.len() {
        let (x, y) = (i % w, i / w);
        if !comp[i] && (x == 0 || y == 0 || x + 1 == w || y + 1 == h) {
            outside[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(p) = queue.pop_front() {
        for q in neighbors(p, w, h) {
            if !comp[q] && !outside[q] {
                outside[q] = true;
                queue.push_back(q);
            }
        }
    }
    outside.iter().map(|&o| !o).collect()
}

/// Extinction values by simulating the flooding of a node-weighted tree level by level.
///
/// At each distinct weight t the components of {v : w(v) ≤ t} are formed from scratch.
/// A minimum (plateau without lower neighbour, identified by its smallest node) dies at the
/// first level whose component also holds a minimum that precedes it in the (weight, index)
/// order; the globally first minimum survives up to the largest weight.
pub fn oracle_flood_extinction(parent: &[NodeId], weights: &[f64]) -> Vec<f64> {
    let n = parent.len();
    let mut adj = vec![Vec::new(); n];
    for (v, &p) in parent.iter().enumerate() {
        if p as usize != v {
            adj[v].push(p as usize);
            adj[p as usize].push(v);
        }
    }
    let flood = |t: f64| -> Vec<usize> {
        let mut label = vec![usize::MAX; n];
        for s in 0..n {
            if weights[s] > t || label[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            label[s] = s;
            while let Some(v) = stack.pop() {
                for &q in &adj[v] {
                    if weights[q] <= t && label[q] == usize::MAX {
                        label[q] = s;
                        stack.push(q);
                    }
                }
            }
        }
        label
    };

    // minima: plateaus (equal-weight components) with no strictly lower neighbour
    let mut plateau = vec![usize::MAX; n];
    let mut minima = Vec::new();
    for s in 0..n {
        if plateau[s] != usize::MAX {
            continue;
        }
        let mut members = vec![s];
        plateau[s] = s;
        let mut i = 0;
        let mut lower = false;
        while i < members.len() {
            let v = members[i];
            i += 1;
            for &q in &adj[v] {
                if weights[q] == weights[s] {
                    if plateau[q] == usize::MAX {
                        plateau[q] = s;
                        members.push(q);
                    }
                } else if weights[q] < weights[s] {
                    lower = true;
                }
            }
        }
        if !lower {
            minima.push(s);
        }
    }

    let mut levels = weights.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let max_w = *levels.last().expect("nonempty tree");
    let precedes = |a: usize, b: usize| (weights[a], a) < (weights[b], b);

    let mut ext = vec![0.0; n];
    let floods: Vec<(f64, Vec<usize>)> = levels.iter().map(|&t| (t, flood(t))).collect();
    for &m in &minima {
        let death = floods.iter().find(|(t, label)| {
            *t >= weights[m] && minima.iter().any(|&o| o != m && label[o] == label[m] && precedes(o, m))
        });
        ext[m] = match death {
            Some((t, _)) => t - weights[m],
            None => max_w - weights[m],
        };
    }
    ext
}

/// Outcome of the exhaustive pruning search.
#[derive(Clone, Debug)]
pub struct OptimalCut {
    /// Surviving nodes, root included.
    pub kept: Vec<bool>,
    pub energy: f64,
}

/// Minimal piecewise-constant energy over every subset of surviving non-root nodes; each pixel
/// joins the region of its nearest surviving ancestor.
pub fn oracle_optimal_cut(tree: &ShapeTree, img: &GrayImage, lambda: f64) -> OptimalCut {
    let n = tree.len();
    assert!(n <= 22, "exhaustive search is limited to small trees");
    let mut best = OptimalCut {
        kept: vec![true; n],
        energy: f64::INFINITY,
    };
    let mut kept = vec![false; n];
    kept[ROOT as usize] = true;
    for mask in 0u32..(1 << (n - 1)) {
        for (v, k) in kept.iter_mut().enumerate().skip(1) {
            *k = mask >> (v - 1) & 1 == 1;
        }
        let labels = labels_of_pruning(tree, &kept);
        let e = partition_energy(img, &labels, lambda);
        if e < best.energy {
            best = OptimalCut {
                kept: kept.clone(),
                energy: e,
            };
        }
    }
    best
}

/// Per-pixel region id (nearest kept ancestor) of a pruning.
pub fn labels_of_pruning(tree: &ShapeTree, kept: &[bool]) -> Vec<u32> {
    let mut rep = vec![ROOT; tree.len()];
    for v in 1..tree.len() {
        rep[v] = if kept[v] { v as NodeId } else { rep[tree.parent(v as NodeId) as usize] };
    }
    tree.pixel_nodes().iter().map(|&v| rep[v as usize]).collect()
}
