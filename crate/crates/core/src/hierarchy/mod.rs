//! From node weights to a hierarchy: extinction values, saliency map, thresholded partitions,
//! grain filtering and mean-value rendering.

mod extinction;
mod saliency;

pub use extinction::{
    build_shape_space_min_tree, compute_extinction, min_tree_of_parent_graph, ExtinctionValues, ShapeSpaceMinTree,
};
pub use saliency::{compute_saliency, is_well_formed, threshold_partition, SaliencyMap, SALIENCY_FORMAT_VERSION};

use crate::energy::MergeState;
use crate::error::Result;
use crate::image::{GrayImage, LabelImage};
use crate::khalimsky::GradientField;
use crate::tree::{analyze, BoundaryMaps, NodeInfo, ShapeTree, ROOT};

/// Drops every shape smaller than `min_area` pixels (its pixels fall to the nearest surviving
/// ancestor) and recomputes node information on the pruned tree.
pub fn grain_filter(
    tree: &ShapeTree,
    info: &NodeInfo,
    img: &GrayImage,
    grad: &GradientField,
    min_area: u64,
) -> Result<(ShapeTree, NodeInfo, BoundaryMaps)> {
    // areas shrink strictly from parent to child, so the survivors are ancestor-closed
    let keep: Vec<bool> = (0..tree.len())
        .map(|v| v == ROOT as usize || info.area[v] >= min_area)
        .collect();
    let pruned = tree.prune(&keep);
    let (info, maps) = analyze(&pruned, img, grad)?;
    Ok((pruned, info, maps))
}

/// Paints every live region with the mean of the image over it.
pub fn render_simplified(tree: &ShapeTree, state: &MergeState) -> Result<GrayImage> {
    let means: Vec<f64> = (0..tree.len() as u32)
        .map(|v| {
            if state.is_live(v) && state.area(v) > 0.0 {
                state.sum(v) / state.area(v)
            } else {
                0.0
            }
        })
        .collect();
    let data = tree
        .pixel_nodes()
        .iter()
        .map(|&v| means[state.representative(v) as usize])
        .collect();
    let mut out = GrayImage::new(tree.width(), tree.height(), data)?;
    out.set_frame(tree.frame());
    Ok(out)
}

/// Paints each labelled region with the mean of `img` over it.
pub fn render_partition(img: &GrayImage, labels: &LabelImage) -> Result<GrayImage> {
    let mut area = vec![0.0; labels.count()];
    let mut sum = vec![0.0; labels.count()];
    for (&l, &f) in labels.labels().iter().zip(img.data()) {
        area[l as usize] += 1.0;
        sum[l as usize] += f;
    }
    let data = labels.labels().iter().map(|&l| sum[l as usize] / area[l as usize]).collect();
    let mut out = GrayImage::new(img.width(), img.height(), data)?;
    out.set_frame(img.frame());
    Ok(out)
}
