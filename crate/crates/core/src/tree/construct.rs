//! Tree of shapes by propagation sort and reverse union-find.
//!
//! The image is first refined to (2W−1)×(2H−1) points. Values are stored doubled so they stay
//! exact: pixels carry 2f, edges f(p)+f(q), and corners the sum of the two middle values of
//! their four pixels. The refined points are then laid out as 2-faces of a cell complex whose
//! remaining faces hold [min, max] spans, and the front is propagated through that complex.

use crate::image::GrayImage;
use crate::uf;

pub(crate) struct Refined {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Refined {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let (rw, rh) = (2 * w - 1, 2 * h - 1);
        let mut values = vec![0.0; rw * rh];
        for ry in 0..rh {
            for rx in 0..rw {
                let (x, y) = (rx / 2, ry / 2);
                values[ry * rw + rx] = match (rx % 2, ry % 2) {
                    (0, 0) => 2.0 * img.get(x, y),
                    (1, 0) => img.get(x, y) + img.get(x + 1, y),
                    (0, 1) => img.get(x, y) + img.get(x, y + 1),
                    _ => {
                        let mut q = [img.get(x, y), img.get(x + 1, y), img.get(x, y + 1), img.get(x + 1, y + 1)];
                        q.sort_by(f64::total_cmp);
                        q[1] + q[2]
                    }
                };
            }
        }
        Refined {
            width: rw,
            height: rh,
            values,
        }
    }
}

/// Level index of each value and the sorted distinct values.
fn quantize(values: &[f64]) -> (Vec<u32>, Vec<f64>) {
    let mut levels = values.to_vec();
    levels.sort_unstable_by(f64::total_cmp);
    levels.dedup_by(|a, b| a.total_cmp(b).is_eq());
    let idx = values
        .iter()
        .map(|v| levels.binary_search_by(|l| l.total_cmp(v)).expect("level present") as u32)
        .collect();
    (idx, levels)
}

/// Cell complex over the refined grid: refined points become 2-faces at (2x, 2y); the faces in
/// between carry the span [min, max] of the 2-faces around them. The outer ring is omitted.
pub(crate) struct SpanGrid {
    pub width: usize,
    pub height: usize,
    /// Level index of each refined point.
    point: Vec<u32>,
    point_width: usize,
    /// Distinct refined values, ascending; spans index into this.
    pub levels: Vec<f64>,
}

impl SpanGrid {
    pub fn new(r: &Refined) -> Self {
        let (point, levels) = quantize(&r.values);
        SpanGrid {
            width: 2 * r.width - 1,
            height: 2 * r.height - 1,
            point,
            point_width: r.width,
            levels,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    /// Level span [lo, hi] of face `p`.
    #[inline]
    pub fn span(&self, p: usize) -> (u32, u32) {
        let (kx, ky) = (p % self.width, p / self.width);
        let (x0, y0) = (kx / 2, ky / 2);
        let a = self.point[y0 * self.point_width + x0];
        match (kx % 2, ky % 2) {
            (0, 0) => (a, a),
            (1, 0) => {
                let b = self.point[y0 * self.point_width + x0 + 1];
                (a.min(b), a.max(b))
            }
            (0, 1) => {
                let b = self.point[(y0 + 1) * self.point_width + x0];
                (a.min(b), a.max(b))
            }
            _ => {
                let row = (y0 + 1) * self.point_width;
                let (b, c, d) = (
                    self.point[y0 * self.point_width + x0 + 1],
                    self.point[row + x0],
                    self.point[row + x0 + 1],
                );
                (a.min(b).min(c).min(d), a.max(b).max(c).max(d))
            }
        }
    }

    /// True for faces that stand for an original pixel.
    #[inline]
    pub fn is_pixel(&self, p: usize) -> bool {
        (p % self.width).is_multiple_of(4) && (p / self.width).is_multiple_of(4)
    }

    /// Raster index in the original image of a pixel face.
    #[inline]
    pub fn pixel_index(&self, p: usize) -> usize {
        let iw = self.width.div_ceil(4);
        (p / self.width / 4) * iw + (p % self.width) / 4
    }

    pub fn neighbors(&self, p: usize, out: &mut [usize; 4]) -> usize {
        let (x, y) = (p % self.width, p / self.width);
        let mut n = 0;
        if y > 0 {
            out[n] = p - self.width;
            n += 1;
        }
        if x > 0 {
            out[n] = p - 1;
            n += 1;
        }
        if x + 1 < self.width {
            out[n] = p + 1;
            n += 1;
        }
        if y + 1 < self.height {
            out[n] = p + self.width;
            n += 1;
        }
        n
    }
}

/// Hierarchical queue indexed by level, popping from the level nearest the current one.
struct LevelQueue {
    buckets: Vec<Vec<u32>>,
    /// One bit per level with a nonempty bucket.
    nonempty: Vec<u64>,
}

impl LevelQueue {
    fn new(levels: usize) -> Self {
        LevelQueue {
            buckets: vec![Vec::new(); levels],
            nonempty: vec![0; levels.div_ceil(64)],
        }
    }

    fn push(&mut self, level: u32, p: u32) {
        let b = &mut self.buckets[level as usize];
        if b.is_empty() {
            self.nonempty[level as usize / 64] |= 1 << (level % 64);
        }
        b.push(p);
    }

    fn above(&self, level: u32) -> Option<u32> {
        let start = level as usize + 1;
        let mut w = start / 64;
        if w >= self.nonempty.len() {
            return None;
        }
        let mut bits = self.nonempty[w] & (u64::MAX.checked_shl((start % 64) as u32).unwrap_or(0));
        loop {
            if bits != 0 {
                return Some((w * 64) as u32 + bits.trailing_zeros());
            }
            w += 1;
            if w == self.nonempty.len() {
                return None;
            }
            bits = self.nonempty[w];
        }
    }

    fn below(&self, level: u32) -> Option<u32> {
        if level == 0 {
            return None;
        }
        let end = level as usize - 1;
        let mut w = end / 64;
        let mut bits = self.nonempty[w] & (u64::MAX >> (63 - end % 64));
        loop {
            if bits != 0 {
                return Some((w * 64) as u32 + 63 - bits.leading_zeros());
            }
            if w == 0 {
                return None;
            }
            w -= 1;
            bits = self.nonempty[w];
        }
    }

    fn pop(&mut self, current: &mut u32) -> Option<u32> {
        if self.buckets[*current as usize].is_empty() {
            *current = match (self.below(*current), self.above(*current)) {
                (None, None) => return None,
                (Some(b), None) => b,
                (None, Some(a)) => a,
                (Some(b), Some(a)) => {
                    if *current - b < a - *current {
                        b
                    } else {
                        a
                    }
                }
            };
        }
        let c = *current as usize;
        let b = &mut self.buckets[c];
        let p = b.pop().expect("bucket is nonempty");
        if b.is_empty() {
            self.nonempty[c / 64] &= !(1 << (c % 64));
        }
        Some(p)
    }
}

/// A component tree over grid faces: `parent` links canonical faces, `level` is the level each
/// face was reached at during propagation.
pub(crate) struct FaceTree {
    pub order: Vec<u32>,
    pub parent: Vec<u32>,
    pub level: Vec<u32>,
}

impl FaceTree {
    #[inline]
    pub fn is_canonical(&self, p: u32) -> bool {
        let q = self.parent[p as usize];
        q == p || self.level[q as usize] != self.level[p as usize]
    }

    #[inline]
    pub fn canonical(&self, p: u32) -> u32 {
        if self.is_canonical(p) {
            p
        } else {
            self.parent[p as usize]
        }
    }

    pub fn root(&self) -> u32 {
        self.order[0]
    }
}

/// Propagation from the top-left face: each face is queued at the level of its span nearest to
/// the current level, then a reverse union-find pass links components.
pub(crate) fn face_tree(g: &SpanGrid) -> FaceTree {
    const UNSET: u32 = u32::MAX;
    const QUEUED: u32 = u32::MAX - 1;
    let n = g.len();
    let mut queue = LevelQueue::new(g.levels.len());
    let mut order = Vec::with_capacity(n);
    // UNSET until queued, QUEUED until popped, then the level reached
    let mut level = vec![UNSET; n];
    let mut nb = [0usize; 4];
    let mut current = g.span(0).0;
    queue.push(current, 0);
    level[0] = QUEUED;
    while let Some(h) = queue.pop(&mut current) {
        level[h as usize] = current;
        order.push(h);
        let k = g.neighbors(h as usize, &mut nb);
        for &q in &nb[..k] {
            if level[q] == UNSET {
                level[q] = QUEUED;
                let (lo, hi) = g.span(q);
                queue.push(current.clamp(lo, hi), q as u32);
            }
        }
    }

    let mut parent = vec![UNSET; n];
    let mut zpar = vec![UNSET; n];
    for &p in order.iter().rev() {
        parent[p as usize] = p;
        zpar[p as usize] = p;
        let k = g.neighbors(p as usize, &mut nb);
        for &q in &nb[..k] {
            if zpar[q] != UNSET {
                let root = uf::find(&mut zpar, q as u32);
                if root != p {
                    parent[root as usize] = p;
                    zpar[root as usize] = p;
                }
            }
        }
    }
    for &p in &order {
        let q = parent[p as usize];
        let qq = parent[q as usize];
        if level[qq as usize] == level[q as usize] {
            parent[p as usize] = qq;
        }
    }
    FaceTree { order, parent, level }
}

/// Pixel-level tree extracted from the refined tree, in arbitrary node numbering.
pub(crate) struct RawTree {
    pub root: u32,
    pub parent: Vec<u32>,
    pub gray: Vec<f64>,
    pub pixel_node: Vec<u32>,
}

/// Keeps the face-tree nodes whose pixel sets are distinct and nonempty.
pub(crate) fn restrict_to_pixels(g: &SpanGrid, t: &FaceTree) -> RawTree {
    let n = g.len();
    let mut own = vec![0u32; n];
    for p in 0..n {
        if g.is_pixel(p) {
            own[t.canonical(p as u32) as usize] += 1;
        }
    }
    // children are processed before their parents in reverse propagation order
    let mut bearing_children = vec![0u32; n];
    let mut keep = vec![false; n];
    let root = t.root();
    for &p in t.order.iter().rev() {
        if !t.is_canonical(p) {
            continue;
        }
        let pu = p as usize;
        let bearing = own[pu] > 0 || bearing_children[pu] > 0;
        keep[pu] = p == root || own[pu] > 0 || bearing_children[pu] >= 2;
        if p != root && bearing {
            bearing_children[t.parent[pu] as usize] += 1;
        }
    }

    const UNSET: u32 = u32::MAX;
    let mut id = vec![UNSET; n];
    let mut kept_anc = vec![UNSET; n];
    let mut parent = Vec::new();
    let mut gray = Vec::new();
    for &p in &t.order {
        if !t.is_canonical(p) {
            continue;
        }
        let pu = p as usize;
        let up = if p == root { UNSET } else { kept_anc[t.parent[pu] as usize] };
        if keep[pu] {
            let new = parent.len() as u32;
            id[pu] = new;
            parent.push(if p == root { new } else { up });
            gray.push(g.levels[t.level[pu] as usize] / 2.0);
            kept_anc[pu] = new;
        } else {
            kept_anc[pu] = up;
        }
    }
    let mut pixel_node = vec![0u32; g.width.div_ceil(4) * g.height.div_ceil(4)];
    for p in 0..n {
        if g.is_pixel(p) {
            pixel_node[g.pixel_index(p)] = id[t.canonical(p as u32) as usize];
        }
    }
    RawTree {
        root: 0,
        parent,
        gray,
        pixel_node,
    }
}
