//! End-to-end runs: image → tree → attribute → extinction → saliency, and fixed-λ simplification.

use crate::energy::{
    compute_lambda_attribute, gradient_order, simplify_fixed_lambda, EnergyParams, LambdaAttribute, Selection,
};
use crate::error::{Error, Result};
use crate::hierarchy::{
    build_shape_space_min_tree, compute_extinction, compute_saliency, grain_filter, render_simplified,
    ExtinctionValues, SaliencyMap, ShapeSpaceMinTree,
};
use crate::image::GrayImage;
use crate::khalimsky::{compute_gradient, load_external_gradient, GradientField, KhalimskyGrid};
use crate::tree::{build_tree, region_decomposition, BoundaryMaps, NodeInfo, RegionDecomposition, ShapeTree};

/// Pipeline version reported by the CLI.
pub const PIPELINE_VERSION: &str = "1";

/// Tree of shapes after grain filtering, with everything derived from it.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub tree: ShapeTree,
    pub info: NodeInfo,
    pub maps: BoundaryMaps,
    pub decomp: RegionDecomposition,
    pub order: Vec<u32>,
}

impl Analysis {
    /// Builds and grain-filters the tree. Uses the image's own contour gradient when `grad` is `None`.
    pub fn new(img: &GrayImage, grad: Option<&GradientField>, min_area: u64) -> Result<Self> {
        let own;
        let grad = match grad {
            Some(g) => g,
            None => {
                own = compute_gradient(img);
                &own
            }
        };
        let (tree, info, maps) = build_tree(img, grad)?;
        let (tree, info, maps) = if min_area > 1 {
            grain_filter(&tree, &info, img, grad, min_area)?
        } else {
            (tree, info, maps)
        };
        let decomp = region_decomposition(&tree, &info);
        let order = gradient_order(&tree, &info);
        Ok(Analysis {
            tree,
            info,
            maps,
            decomp,
            order,
        })
    }

    pub fn lambda_attribute(&self) -> LambdaAttribute {
        compute_lambda_attribute(&self.tree, &self.info, &self.decomp, &self.order)
    }

    pub fn simplify(&self, lambda: f64) -> Result<Selection> {
        let params = EnergyParams::new(lambda)?;
        Ok(simplify_fixed_lambda(&self.tree, &self.info, &self.decomp, params, &self.order))
    }
}

/// Everything produced on the way to the saliency map.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub analysis: Analysis,
    pub attribute: LambdaAttribute,
    pub min_tree: ShapeSpaceMinTree,
    pub extinction: ExtinctionValues,
    pub saliency: SaliencyMap,
}

pub fn compute_hierarchy(img: &GrayImage, grad: Option<&GradientField>, min_area: u64) -> Result<Hierarchy> {
    let analysis = Analysis::new(img, grad, min_area)?;
    let attribute = analysis.lambda_attribute();
    let min_tree = build_shape_space_min_tree(&analysis.tree, &attribute.inverted)?;
    let extinction = compute_extinction(&min_tree);
    let saliency = compute_saliency(&analysis.tree, &analysis.maps, &extinction)?;
    if saliency.max() != extinction.max() {
        return Err(Error::Invariant("saliency maximum differs from the largest extinction".into()));
    }
    Ok(Hierarchy {
        analysis,
        attribute,
        min_tree,
        extinction,
        saliency,
    })
}

/// Fixed-λ simplification rendered with region means; also returns the number of regions.
pub fn simplify_image(img: &GrayImage, grad: Option<&GradientField>, lambda: f64, min_area: u64) -> Result<(GrayImage, usize)> {
    let analysis = Analysis::new(img, grad, min_area)?;
    let sel = analysis.simplify(lambda)?;
    let out = render_simplified(&analysis.tree, &sel.state)?;
    Ok((out, sel.state.live_count()))
}

/// Loads a `GRAD1F` file for `img`, accepting either the framed grid or the grid of the image
/// without its frame (frame faces are then set to 0).
pub fn load_gradient_for(img: &GrayImage, path: impl AsRef<std::path::Path>) -> Result<GradientField> {
    let path = path.as_ref();
    let framed = KhalimskyGrid::for_image(img);
    match load_external_gradient(path, framed) {
        Err(Error::SizeMismatch { .. }) if img.frame() > 0 => {
            let k = 2 * img.frame();
            let inner = KhalimskyGrid::new(img.width() - k, img.height() - k);
            Ok(load_external_gradient(path, inner)?.padded(img.frame()))
        }
        other => other,
    }
}
