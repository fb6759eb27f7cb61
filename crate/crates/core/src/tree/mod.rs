//! The tree of shapes and the per-node geometry consumed by the energy and hierarchy stages.

mod construct;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::khalimsky::{GradientField, KhalimskyGrid};

pub type NodeId = u32;

pub const ROOT: NodeId = 0;
/// Marks "no node", e.g. the vanish node of a face on the domain boundary.
pub const NO_NODE: NodeId = u32::MAX;

/// Inclusion tree of shapes. Nodes are numbered in depth-first preorder, children visited by
/// their smallest raster pixel, so a parent always has a smaller id than its children and the
/// numbering depends only on the shape geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeTree {
    width: usize,
    height: usize,
    frame: usize,
    parent: Vec<NodeId>,
    gray: Vec<f64>,
    pixel_node: Vec<NodeId>,
    depth: Vec<u32>,
    child_start: Vec<u32>,
    child_list: Vec<NodeId>,
}

impl ShapeTree {
    /// Builds the tree of shapes of `img`. The image border should be constant (see
    /// [`GrayImage::with_median_frame`]); the top-left pixel seeds the root.
    pub fn build(img: &GrayImage) -> ShapeTree {
        let refined = construct::Refined::new(img);
        let spans = construct::SpanGrid::new(&refined);
        let ft = construct::face_tree(&spans);
        let raw = construct::restrict_to_pixels(&spans, &ft);
        ShapeTree::from_raw(img.width(), img.height(), img.frame(), raw.root, &raw.parent, &raw.gray, &raw.pixel_node)
    }

    /// Renumbers an arbitrary rooted tree into canonical preorder.
    pub(crate) fn from_raw(
        width: usize,
        height: usize,
        frame: usize,
        root: NodeId,
        parent: &[NodeId],
        gray: &[f64],
        pixel_node: &[NodeId],
    ) -> ShapeTree {
        let n = parent.len();
        let mut min_pixel = vec![u32::MAX; n];
        for (p, &node) in pixel_node.iter().enumerate() {
            let slot = &mut min_pixel[node as usize];
            *slot = (*slot).min(p as u32);
        }
        // children in one flat array, grouped by parent
        let mut start = vec![0u32; n + 1];
        for (v, &p) in parent.iter().enumerate() {
            if v as NodeId != root {
                start[p as usize + 1] += 1;
            }
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut flat = vec![0 as NodeId; start[n] as usize];
        for (v, &p) in parent.iter().enumerate() {
            if v as NodeId != root {
                flat[fill[p as usize] as usize] = v as NodeId;
                fill[p as usize] += 1;
            }
        }
        let kids = |v: NodeId| start[v as usize] as usize..start[v as usize + 1] as usize;
        // subtree minima, children before parents
        let mut post = Vec::with_capacity(n);
        let mut stack = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                post.push(v);
                continue;
            }
            stack.push((v, true));
            stack.extend(flat[kids(v)].iter().map(|&c| (c, false)));
        }
        for &v in &post {
            if v != root {
                let p = parent[v as usize] as usize;
                min_pixel[p] = min_pixel[p].min(min_pixel[v as usize]);
            }
        }
        for v in 0..n as NodeId {
            flat[kids(v)].sort_unstable_by_key(|&c| min_pixel[c as usize]);
        }

        let mut new_id = vec![NO_NODE; n];
        let mut pre = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            new_id[v as usize] = pre.len() as NodeId;
            pre.push(v);
            stack.extend(flat[kids(v)].iter().rev());
        }
        let new_parent: Vec<NodeId> = pre.iter().map(|&v| new_id[parent[v as usize] as usize]).collect();
        let new_gray = pre.iter().map(|&v| gray[v as usize]).collect();
        let new_pixel_node = pixel_node.iter().map(|&v| new_id[v as usize]).collect();
        let mut new_parent = new_parent;
        new_parent[0] = 0;
        ShapeTree::assemble(width, height, frame, new_parent, new_gray, new_pixel_node)
    }

    fn assemble(
        width: usize,
        height: usize,
        frame: usize,
        parent: Vec<NodeId>,
        gray: Vec<f64>,
        pixel_node: Vec<NodeId>,
    ) -> ShapeTree {
        let n = parent.len();
        let mut depth = vec![0u32; n];
        let mut count = vec![0u32; n + 1];
        for v in 1..n {
            depth[v] = depth[parent[v] as usize] + 1;
            count[parent[v] as usize + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let child_start = count.clone();
        let mut fill = count;
        let mut child_list = vec![0; n.saturating_sub(1)];
        for v in 1..n {
            let p = parent[v] as usize;
            child_list[fill[p] as usize] = v as NodeId;
            fill[p] += 1;
        }
        ShapeTree {
            width,
            height,
            frame,
            parent,
            gray,
            pixel_node,
            depth,
            child_start,
            child_list,
        }
    }

    /// Keeps the nodes flagged in `keep` (ancestor-closed, root included); pixels of dropped
    /// nodes fall to their nearest kept ancestor.
    pub fn prune(&self, keep: &[bool]) -> ShapeTree {
        assert!(keep[ROOT as usize], "the root is always kept");
        let n = self.len();
        let mut new_id = vec![NO_NODE; n];
        let mut parent = Vec::new();
        let mut gray = Vec::new();
        for v in 0..n {
            if keep[v] {
                new_id[v] = parent.len() as NodeId;
                parent.push(if v == 0 { 0 } else { new_id[self.parent[v] as usize] });
                gray.push(self.gray[v]);
            } else {
                new_id[v] = new_id[self.parent[v] as usize];
            }
            debug_assert!(new_id[v] != NO_NODE);
        }
        let pixel_node = self.pixel_node.iter().map(|&v| new_id[v as usize]).collect();
        // preorder is preserved by filtering, so no renumbering is needed
        ShapeTree::assemble(self.width, self.height, self.frame, parent, gray, pixel_node)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn grid(&self) -> KhalimskyGrid {
        KhalimskyGrid::new(self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> NodeId {
        ROOT
    }

    #[inline]
    pub fn parent(&self, v: NodeId) -> NodeId {
        self.parent[v as usize]
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parent
    }

    pub fn gray(&self, v: NodeId) -> f64 {
        self.gray[v as usize]
    }

    pub fn grays(&self) -> &[f64] {
        &self.gray
    }

    #[inline]
    pub fn depth(&self, v: NodeId) -> u32 {
        self.depth[v as usize]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.child_list[self.child_start[v] as usize..self.child_start[v + 1] as usize]
    }

    /// Smallest shape containing each pixel, raster order.
    pub fn pixel_nodes(&self) -> &[NodeId] {
        &self.pixel_node
    }

    #[inline]
    pub fn pixel_node(&self, p: usize) -> NodeId {
        self.pixel_node[p]
    }

    pub fn is_ancestor_or_self(&self, anc: NodeId, mut v: NodeId) -> bool {
        while self.depth(v) > self.depth(anc) {
            v = self.parent(v);
        }
        v == anc
    }

    pub fn lca(&self, mut a: NodeId, mut b: NodeId) -> NodeId {
        while self.depth(a) > self.depth(b) {
            a = self.parent(a);
        }
        while self.depth(b) > self.depth(a) {
            b = self.parent(b);
        }
        while a != b {
            a = self.parent(a);
            b = self.parent(b);
        }
        a
    }

    /// Pixel set of every shape, each sorted ascending.
    pub fn pixel_sets(&self) -> Vec<Vec<u32>> {
        let mut sets = vec![Vec::new(); self.len()];
        for (p, &leaf) in self.pixel_node.iter().enumerate() {
            let mut v = leaf;
            loop {
                sets[v as usize].push(p as u32);
                if v == ROOT {
                    break;
                }
                v = self.parent(v);
            }
        }
        sets
    }

    /// Paints each pixel with the value of its smallest containing shape.
    pub fn reconstruct(&self, node_values: &[f64]) -> Result<GrayImage> {
        if node_values.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                found: node_values.len(),
            });
        }
        let data = self.pixel_node.iter().map(|&v| node_values[v as usize]).collect();
        let mut img = GrayImage::new(self.width, self.height, data)?;
        img.set_frame(self.frame);
        Ok(img)
    }
}

/// Per-node area, contour length, value sum and boundary gradient sum.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeInfo {
    pub area: Vec<u64>,
    pub length: Vec<u64>,
    pub sum_f: Vec<f64>,
    pub sum_grad: Vec<f64>,
}

impl NodeInfo {
    /// Mean gradient along the level line, S_∇/L.
    pub fn mean_gradient(&self, v: NodeId) -> f64 {
        let l = self.length[v as usize];
        if l == 0 {
            0.0
        } else {
            self.sum_grad[v as usize] / l as f64
        }
    }
}

/// Per 1-face: the deeper shape bordering it (`appear`), the shape on the other side
/// (`opposite`) and their common ancestor (`vanish`). Faces strictly inside one region
/// have all three equal; faces on the domain boundary have `opposite = vanish = NO_NODE`.
/// Other faces hold `NO_NODE` everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMaps {
    pub appear: Vec<NodeId>,
    pub opposite: Vec<NodeId>,
    pub vanish: Vec<NodeId>,
}

/// Computes [`NodeInfo`] and [`BoundaryMaps`] for `tree` over `img` and `grad`.
pub fn analyze(tree: &ShapeTree, img: &GrayImage, grad: &GradientField) -> Result<(NodeInfo, BoundaryMaps)> {
    let grid = tree.grid();
    if img.width() != tree.width() || img.height() != tree.height() {
        return Err(Error::SizeMismatch {
            expected: tree.width() * tree.height(),
            found: img.len(),
        });
    }
    if grad.grid() != grid {
        return Err(Error::SizeMismatch {
            expected: grid.face_count(),
            found: grad.grid().face_count(),
        });
    }
    let n = tree.len();
    let mut area = vec![0u64; n];
    let mut sum_f = vec![0.0; n];
    for (p, &v) in tree.pixel_nodes().iter().enumerate() {
        area[v as usize] += 1;
        sum_f[v as usize] += img.data()[p];
    }
    for v in (1..n).rev() {
        let p = tree.parent(v as NodeId) as usize;
        area[p] += area[v];
        sum_f[p] += sum_f[v];
    }

    let mut length = vec![0u64; n];
    let mut sum_grad = vec![0.0; n];
    let faces = grid.face_count();
    let mut maps = BoundaryMaps {
        appear: vec![NO_NODE; faces],
        opposite: vec![NO_NODE; faces],
        vanish: vec![NO_NODE; faces],
    };
    let mut credit = |mut v: NodeId, stop: NodeId, g: f64| {
        while v != stop {
            length[v as usize] += 1;
            sum_grad[v as usize] += g;
            if v == ROOT {
                break;
            }
            v = tree.parent(v);
        }
    };
    for (x, y) in grid.edges() {
        let e = grid.index(x, y);
        let g = grad.at(e);
        match grid.edge_sides(x, y) {
            (Some(p), Some(q)) => {
                let (a, b) = (tree.pixel_node(p), tree.pixel_node(q));
                let (deep, other) = if (tree.depth(a), std::cmp::Reverse(a)) >= (tree.depth(b), std::cmp::Reverse(b)) {
                    (a, b)
                } else {
                    (b, a)
                };
                let top = tree.lca(a, b);
                credit(a, top, g);
                credit(b, top, g);
                maps.appear[e] = deep;
                maps.opposite[e] = other;
                maps.vanish[e] = top;
            }
            (Some(p), None) | (None, Some(p)) => {
                let a = tree.pixel_node(p);
                credit(a, NO_NODE, g);
                maps.appear[e] = a;
            }
            (None, None) => unreachable!("every 1-face touches a pixel"),
        }
    }
    Ok((
        NodeInfo {
            area,
            length,
            sum_f,
            sum_grad,
        },
        maps,
    ))
}

/// Builds the tree and its per-node information in one call.
pub fn build_tree(img: &GrayImage, grad: &GradientField) -> Result<(ShapeTree, NodeInfo, BoundaryMaps)> {
    let tree = ShapeTree::build(img);
    let (info, maps) = analyze(&tree, img, grad)?;
    Ok((tree, info, maps))
}

/// Area and value sum of each proper region R_τ (the shape minus its children).
#[derive(Clone, Debug, PartialEq)]
pub struct RegionDecomposition {
    pub area: Vec<f64>,
    pub sum_f: Vec<f64>,
}

pub fn region_decomposition(tree: &ShapeTree, info: &NodeInfo) -> RegionDecomposition {
    let mut area: Vec<f64> = info.area.iter().map(|&a| a as f64).collect();
    let mut sum_f = info.sum_f.clone();
    for v in 1..tree.len() {
        let p = tree.parent(v as NodeId) as usize;
        area[p] -= info.area[v] as f64;
        sum_f[p] -= info.sum_f[v];
    }
    RegionDecomposition { area, sum_f }
}

/// Text listing `node parent gray A L S_f S_grad`, one node per line.
pub fn dump_tree(tree: &ShapeTree, info: &NodeInfo) -> String {
    let mut out = String::from("node parent gray A L S_f S_grad\n");
    for v in 0..tree.len() {
        let id = v as NodeId;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            v,
            tree.parent(id),
            tree.gray(id),
            info.area[v],
            info.length[v],
            info.sum_f[v],
            info.sum_grad[v]
        );
    }
    out
}
