use std::collections::BTreeSet;

use levelsel::eval::oracle_flood_extinction;
use levelsel::eval::synth::{three_shapes_image, two_object_image, uniform_noise};
use levelsel::hierarchy::{
    compute_extinction, grain_filter, is_well_formed, min_tree_of_parent_graph, threshold_partition,
};
use levelsel::image::{GrayImage, LabelImage};
use levelsel::khalimsky::compute_gradient;
use levelsel::pipeline::{compute_hierarchy, Hierarchy};
use levelsel::tree::build_tree;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_weighted_tree(rng: &mut ChaCha8Rng) -> (Vec<u32>, Vec<f64>) {
    let n = rng.gen_range(1..=50);
    let parent: Vec<u32> = (0..n).map(|v| if v == 0 { 0 } else { rng.gen_range(0..v) as u32 }).collect();
    // few distinct levels so plateaus and ties are common
    let levels = rng.gen_range(1..=6);
    let weights = (0..n).map(|_| f64::from(rng.gen_range(0..levels)) * 1.5).collect();
    (parent, weights)
}

#[test]
fn extinction_matches_flooding() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..500 {
        let (parent, weights) = random_weighted_tree(&mut rng);
        let mt = min_tree_of_parent_graph(&parent, &weights).unwrap();
        let e = compute_extinction(&mt);
        assert_eq!(e.values, oracle_flood_extinction(&parent, &weights), "case {case}: {parent:?} {weights:?}");
    }
}

#[test]
fn exactly_one_minimum_takes_the_full_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let (parent, weights) = random_weighted_tree(&mut rng);
        let mt = min_tree_of_parent_graph(&parent, &weights).unwrap();
        let e = compute_extinction(&mt);
        let lo = weights.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let global = (0..weights.len()).find(|&v| weights[v] == lo).unwrap();
        assert_eq!(e.values[global], hi - lo);
        for (v, &x) in e.values.iter().enumerate() {
            assert!(x >= 0.0);
            if x > 0.0 {
                assert!(e.minima.contains(&(v as u32)));
            }
        }
    }
}

#[test]
fn raising_a_minimum_never_raises_its_extinction() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 300 {
        let (parent, weights) = random_weighted_tree(&mut rng);
        let n = weights.len();
        let mt = min_tree_of_parent_graph(&parent, &weights).unwrap();
        let e = compute_extinction(&mt);
        let m = e.minima[rng.gen_range(0..e.minima.len())] as usize;
        // keep it a minimum: stay below every neighbour and strictly before the next minimum
        let mut ceiling = f64::INFINITY;
        for v in 0..n {
            let adjacent = (parent[v] as usize == m && v != m) || (parent[m] as usize == v && v != m);
            if adjacent {
                ceiling = ceiling.min(weights[v]);
            }
        }
        for &o in &e.minima {
            if o as usize != m && weights[o as usize] >= weights[m] {
                ceiling = ceiling.min(weights[o as usize]);
            }
        }
        if ceiling <= weights[m] || ceiling.is_infinite() {
            continue;
        }
        // plateau members adjacent at equal weight would break the single-node minimum
        if (0..n).any(|v| v != m && (parent[v] as usize == m || parent[m] as usize == v) && weights[v] == weights[m]) {
            continue;
        }
        let mut raised = weights.clone();
        raised[m] = weights[m] + 0.5 * (ceiling - weights[m]);
        let e2 = compute_extinction(&min_tree_of_parent_graph(&parent, &raised).unwrap());
        assert!(e2.values[m] <= e.values[m], "{parent:?} {weights:?} node {m}");
        checked += 1;
    }
}

fn pipeline_images(rng: &mut ChaCha8Rng, count: usize) -> Vec<GrayImage> {
    (0..count)
        .map(|i| match i % 3 {
            0 => {
                let w = rng.gen_range(8..=24);
                let h = rng.gen_range(8..=24);
                uniform_noise(rng, w, h, 256)
            }
            1 => two_object_image(rng, 48, 36, 8.0).0,
            _ => three_shapes_image(rng, 40, 1.0, 6.0).0,
        })
        .map(|img| img.with_median_frame())
        .collect()
}

fn boundary_thresholds(h: &Hierarchy) -> Vec<f64> {
    let mut vals: Vec<f64> = h.saliency.levels();
    vals.retain(|&v| v > 0.0);
    vals
}

#[test]
fn thresholded_partitions_are_nested() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for img in pipeline_images(&mut rng, 20) {
        let h = compute_hierarchy(&img, None, 1).unwrap();
        assert!(is_well_formed(&h.saliency));
        let top = h.saliency.max();
        for _ in 0..10 {
            let a = rng.gen_range(0.0..=top.max(1.0));
            let b = rng.gen_range(0.0..=top.max(1.0));
            let (t1, t2) = if a < b { (a, b) } else { (b, a + 1e-9) };
            let fine = threshold_partition(&h.saliency, t1);
            let coarse = threshold_partition(&h.saliency, t2);
            assert!(fine.is_finer_than(&coarse));
            assert!(fine.count() >= coarse.count());
        }
        assert_eq!(threshold_partition(&h.saliency, top).count(), 1);
    }
}

#[test]
fn saliency_peak_is_the_largest_extinction() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for img in pipeline_images(&mut rng, 9) {
        let h = compute_hierarchy(&img, None, 1).unwrap();
        assert_eq!(h.saliency.max(), h.extinction.max());
    }
}

/// Per pixel, the deepest shape on its ancestor chain whose extinction exceeds `t`.
fn deepest_marked(h: &Hierarchy, ext: &[f64], t: f64) -> Vec<u32> {
    let tree = &h.analysis.tree;
    let mut mark = vec![0u32; tree.len()];
    for v in 1..tree.len() {
        mark[v] = if ext[v] > t { v as u32 } else { mark[tree.parent(v as u32) as usize] };
    }
    tree.pixel_nodes().iter().map(|&v| mark[v as usize]).collect()
}

#[test]
fn region_count_follows_minima() {
    // between consecutive extinction levels, one hierarchy region per surviving minimum; the
    // 4-connected partition splits a region only where it is held together by a corner
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 60 {
        let w = rng.gen_range(3..=8);
        let hgt = rng.gen_range(3..=8);
        let levels = rng.gen_range(2..=6);
        let img = uniform_noise(&mut rng, w, hgt, levels).with_median_frame();
        let h = compute_hierarchy(&img, None, 1).unwrap();
        if h.analysis.tree.len() > 50 {
            continue;
        }
        let ext = oracle_flood_extinction(h.analysis.tree.parents(), &h.attribute.inverted);
        assert_eq!(ext, h.extinction.values);
        let mut cuts = boundary_thresholds(&h);
        cuts.insert(0, 0.0);
        for pair in cuts.windows(2) {
            let t = 0.5 * (pair[0] + pair[1]);
            let marked = deepest_marked(&h, &ext, t);
            let owners: BTreeSet<u32> = marked.iter().copied().collect();
            // minima whose pixels all sit in deeper surviving shapes own no region
            let live = (0..ext.len() as u32)
                .filter(|&v| ext[v as usize] > t || v == 0)
                .filter(|v| owners.contains(v))
                .count();
            assert_eq!(owners.len(), live);
            assert!(owners.len() <= ext.iter().filter(|&&e| e > t).count().max(1));
            let part = threshold_partition(&h.saliency, t);
            let regions = LabelImage::from_raw(img.width(), img.height(), &marked, img.frame()).unwrap();
            assert!(part.is_finer_than(&regions));
            assert_eq!(part.count(), components_of(&regions), "t = {t}");
        }
        checked += 1;
    }
}

fn components_of(labels: &LabelImage) -> usize {
    let (w, h) = (labels.width(), labels.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for s in 0..w * h {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            let l = labels.labels()[p];
            let nbrs = [
                (x > 0).then(|| p - 1),
                (x + 1 < w).then(|| p + 1),
                (y > 0).then(|| p - w),
                (y + 1 < h).then(|| p + w),
            ];
            for q in nbrs.into_iter().flatten() {
                if !seen[q] && labels.labels()[q] == l {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
    }
    count
}

#[test]
fn fig2_minima_split_at_mid_threshold() {
    // minima A=0 (node 5), C=1 (node 4), B=2 (node 3); B∪C at 3, C∪A at 4, top 5
    let parent = [0, 0, 1, 2, 2, 1, 0];
    let weights = [5.0, 4.0, 3.0, 2.0, 1.0, 0.0, 5.0];
    let mt = min_tree_of_parent_graph(&parent, &weights).unwrap();
    let e = compute_extinction(&mt);
    assert_eq!(e.values, oracle_flood_extinction(&parent, &weights));
    assert_eq!((e.values[5], e.values[4], e.values[3]), (5.0, 3.0, 1.0));
    for (t, expected) in [(0.5, 3), (2.0, 2), (4.0, 1)] {
        assert_eq!(e.values.iter().filter(|&&x| x > t).count().max(1), expected);
    }
}

#[test]
fn grain_filter_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let img = uniform_noise(&mut rng, 20, 15, 256).with_median_frame();
    let grad = compute_gradient(&img);
    let (tree, info, _) = build_tree(&img, &grad).unwrap();
    let (same, _, _) = grain_filter(&tree, &info, &img, &grad, 0).unwrap();
    assert_eq!(same.parents(), tree.parents());
    let (pruned, pinfo, _) = grain_filter(&tree, &info, &img, &grad, 10).unwrap();
    assert!(pinfo.area.iter().all(|&a| a >= 10));
    assert!(pruned.len() < tree.len());
    let (only_root, _, _) = grain_filter(&tree, &info, &img, &grad, img.len() as u64 + 1).unwrap();
    assert_eq!(only_root.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn saliency_zero_on_pixels_and_max_at_corners(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = uniform_noise(&mut rng, 7, 6, 16).with_median_frame();
        let h = compute_hierarchy(&img, None, 1).unwrap();
        let m = &h.saliency;
        let g = m.grid();
        prop_assert!(is_well_formed(m));
        for y in (0..g.kheight()).step_by(2) {
            for x in (0..g.kwidth()).step_by(2) {
                let mut best = 0.0f64;
                for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < g.kwidth() && (ny as usize) < g.kheight() {
                        best = best.max(m.get(nx as usize, ny as usize));
                    }
                }
                prop_assert_eq!(m.get(x, y), best);
            }
        }
    }
}
