//! Largest-decrease greedy: always remove the shape whose removal lowers the energy most.

use std::time::{Duration, Instant};

use super::{delta_unchecked, EnergyParams, MergeState, Selection};
use crate::tree::{NodeId, NodeInfo, RegionDecomposition, ShapeTree, ROOT};

/// Indexed min-structure over node ids: each leaf holds one node's ΔE, inner slots hold the
/// winning leaf of their subtree (smallest ΔE, then smallest id).
struct Tournament {
    size: usize,
    key: Vec<f64>,
    win: Vec<u32>,
}

impl Tournament {
    fn new(keys: Vec<f64>) -> Self {
        let size = keys.len().next_power_of_two().max(1);
        let mut key = keys;
        key.resize(size, f64::INFINITY);
        let mut win = vec![0u32; 2 * size];
        for i in 0..size {
            win[size + i] = i as u32;
        }
        let mut t = Tournament { size, key, win };
        for i in (1..size).rev() {
            t.win[i] = t.better(t.win[2 * i], t.win[2 * i + 1]);
        }
        t
    }

    #[inline]
    fn better(&self, a: u32, b: u32) -> u32 {
        match self.key[a as usize].total_cmp(&self.key[b as usize]) {
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Equal if b < a => b,
            _ => a,
        }
    }

    fn set(&mut self, leaf: usize, value: f64) {
        self.key[leaf] = value;
        let mut i = (self.size + leaf) / 2;
        while i >= 1 {
            self.win[i] = self.better(self.win[2 * i], self.win[2 * i + 1]);
            i /= 2;
        }
    }

    fn best(&self) -> (usize, f64) {
        let w = self.win[1] as usize;
        (w, self.key[w])
    }
}

/// Removes, one at a time, the live shape with the most negative ΔE until none is negative.
///
/// After each removal the absorbing parent and all of its live children are re-evaluated.
pub fn baseline_largest_decrease(
    tree: &ShapeTree,
    info: &NodeInfo,
    decomp: &RegionDecomposition,
    params: EnergyParams,
) -> Selection {
    run(tree, info, decomp, params, None).expect("no deadline")
}

/// Same as [`baseline_largest_decrease`] but gives up once `budget` has elapsed.
pub fn baseline_largest_decrease_within(
    tree: &ShapeTree,
    info: &NodeInfo,
    decomp: &RegionDecomposition,
    params: EnergyParams,
    budget: Duration,
) -> Option<Selection> {
    run(tree, info, decomp, params, Some(Instant::now() + budget))
}

fn run(
    tree: &ShapeTree,
    info: &NodeInfo,
    decomp: &RegionDecomposition,
    params: EnergyParams,
    deadline: Option<Instant>,
) -> Option<Selection> {
    let n = tree.len();
    let mut state = MergeState::new(tree, decomp);
    let mut children: Vec<Vec<NodeId>> = (0..n as NodeId).map(|v| tree.children(v).to_vec()).collect();
    let keys = (0..n as NodeId)
        .map(|v| if v == ROOT { f64::INFINITY } else { delta_unchecked(tree, info, &state, v, params.lambda) })
        .collect();
    let mut queue = Tournament::new(keys);
    let mut removed = Vec::new();
    loop {
        let (leaf, delta) = queue.best();
        if delta >= 0.0 {
            break;
        }
        if removed.len() % 256 == 0 && deadline.is_some_and(|d| Instant::now() > d) {
            return None;
        }
        let v = leaf as NodeId;
        let p = state.merge(tree, v);
        removed.push(v);
        queue.set(leaf, f64::INFINITY);
        let adopted = std::mem::take(&mut children[leaf]);
        let siblings = &mut children[p as usize];
        siblings.retain(|&s| s != v);
        siblings.extend(adopted);
        if p != ROOT {
            queue.set(p as usize, delta_unchecked(tree, info, &state, p, params.lambda));
        }
        for &u in &children[p as usize] {
            queue.set(u as usize, delta_unchecked(tree, info, &state, u, params.lambda));
        }
    }
    Some(Selection::from_state(state, removed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{gradient_order, simplify_fixed_lambda, total_energy};
    use crate::image::GrayImage;
    use crate::khalimsky::compute_gradient;
    use crate::tree::{build_tree, region_decomposition};

    #[test]
    fn zero_lambda_removes_nothing_with_distinct_means() {
        let img = GrayImage::from_fn(6, 6, |x, y| ((x * 3 + y * 5) % 7) as f64 * 10.0)
            .unwrap()
            .with_median_frame();
        let (tree, info, _) = build_tree(&img, &compute_gradient(&img)).unwrap();
        let d = region_decomposition(&tree, &info);
        let p = EnergyParams::new(0.0).unwrap();
        let base = baseline_largest_decrease(&tree, &info, &d, p);
        let ordered = simplify_fixed_lambda(&tree, &info, &d, p, &gradient_order(&tree, &info));
        assert_eq!(base.kept, ordered.kept);
    }

    #[test]
    fn spurious_shapes_on_flat_image_all_go() {
        // sub-unit ripples produce many nested and sibling shapes with near-equal means
        let img = GrayImage::from_fn(8, 8, |x, y| 100.0 + ((x * 7 + y * 3) % 4) as f64 * 0.01)
            .unwrap()
            .with_median_frame();
        let (tree, info, _) = build_tree(&img, &compute_gradient(&img)).unwrap();
        assert!(tree.len() > 3);
        let d = region_decomposition(&tree, &info);
        let p = EnergyParams::new(5.0).unwrap();
        let sel = baseline_largest_decrease(&tree, &info, &d, p);
        assert!(sel.kept.is_empty());
        let e = total_energy(&img, &tree, &info, &sel.state, p);
        let data: f64 = {
            let mean = img.data().iter().sum::<f64>() / img.len() as f64;
            img.data().iter().map(|v| (v - mean) * (v - mean)).sum()
        };
        assert!((e - data - 5.0 * info.length[0] as f64).abs() < 1e-9);
    }
}
