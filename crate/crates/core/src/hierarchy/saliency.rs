//! Saliency map on the Khalimsky grid and its thresholded partitions.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::ExtinctionValues;
use crate::error::{Error, Result};
use crate::image::LabelImage;
use crate::khalimsky::{parse_face_header, read_f64_le, FaceKind, KhalimskyGrid};
use crate::tree::{BoundaryMaps, NodeId, ShapeTree, NO_NODE, ROOT};
use crate::uf::UnionFind;

/// Version of the `SALIENCY` layout.
pub const SALIENCY_FORMAT_VERSION: u32 = 1;

/// Scalar per face of the Khalimsky grid; 2-faces hold 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    grid: KhalimskyGrid,
    values: Vec<f64>,
    frame: usize,
}

impl SaliencyMap {
    pub fn new(grid: KhalimskyGrid, values: Vec<f64>, frame: usize) -> Result<Self> {
        if values.len() != grid.face_count() {
            return Err(Error::SizeMismatch {
                expected: grid.face_count(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeEntries);
        }
        Ok(SaliencyMap { grid, values, frame })
    }

    pub fn grid(&self) -> KhalimskyGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.grid.index(x, y)]
    }

    /// Synthetic frame rings of the image this map was computed on.
    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn with_frame(mut self, frame: usize) -> Self {
        self.frame = frame;
        self
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Distinct positive values, ascending.
    pub fn levels(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.values.iter().copied().filter(|&x| x > 0.0).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// True if face (x, y) lies on or outside the frame, i.e. off the original image interior.
    pub fn is_frame_face(&self, x: usize, y: usize) -> bool {
        let k = 2 * self.frame;
        x <= k || y <= k || x + k + 1 >= self.grid.kwidth() || y + k + 1 >= self.grid.kheight()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(self.values.len() * 8 + 32);
        writeln!(out, "SALIENCY {} {}", self.grid.kwidth(), self.grid.kheight())?;
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reads a `SALIENCY` file; the frame count is not stored and must be supplied.
    pub fn read(path: impl AsRef<Path>, frame: usize) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        let (kw, kh, payload) = parse_face_header(&bytes, "SALIENCY")?;
        let grid = KhalimskyGrid::new((kw - 1) / 2, (kh - 1) / 2);
        if 2 * frame >= grid.width() || 2 * frame >= grid.height() {
            return Err(Error::InvalidArgument(format!("frame {frame} leaves no interior")));
        }
        let values = read_f64_le(payload, grid.face_count())?;
        SaliencyMap::new(grid, values, frame)
    }

    /// 16-bit display values round(65535·M/max M), optionally inverted (dark contours).
    pub fn display_values(&self, inverted: bool) -> Vec<u16> {
        let top = self.max();
        self.values
            .iter()
            .map(|&v| {
                let s = if top > 0.0 { (65535.0 * v / top).round() as u16 } else { 0 };
                if inverted {
                    65535 - s
                } else {
                    s
                }
            })
            .collect()
    }

    /// Replaces values by their rank among distinct positive values (1 = smallest); display only.
    pub fn rank_normalized(&self) -> SaliencyMap {
        let levels = self.levels();
        let values = self
            .values
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    (levels.partition_point(|&l| l < v) + 1) as f64
                } else {
                    0.0
                }
            })
            .collect();
        SaliencyMap {
            grid: self.grid,
            values,
            frame: self.frame,
        }
    }
}

/// Each 1-face gets the largest extinction among shapes whose contour contains it; each 0-face
/// the largest value of its adjacent 1-faces.
///
/// The shapes bordering a face are those strictly between either side of the face and the
/// common ancestor of both sides. Faces on the domain boundary border every ancestor of their
/// pixel up to the root.
pub fn compute_saliency(tree: &ShapeTree, maps: &BoundaryMaps, ext: &ExtinctionValues) -> Result<SaliencyMap> {
    if ext.values.len() != tree.len() {
        return Err(Error::SizeMismatch {
            expected: tree.len(),
            found: ext.values.len(),
        });
    }
    let grid = tree.grid();
    let e = &ext.values;
    let walk = |mut v: NodeId, stop: NodeId| -> f64 {
        let mut m = 0.0f64;
        while v != stop {
            m = m.max(e[v as usize]);
            if v == ROOT {
                break;
            }
            v = tree.parent(v);
        }
        m
    };
    let mut values = vec![0.0; grid.face_count()];
    for (x, y) in grid.edges() {
        let i = grid.index(x, y);
        let (a, b, top) = (maps.appear[i], maps.opposite[i], maps.vanish[i]);
        values[i] = if top == NO_NODE {
            walk(a, NO_NODE)
        } else {
            walk(a, top).max(walk(b, top))
        };
    }
    let (kw, kh) = (grid.kwidth(), grid.kheight());
    for y in (0..kh).step_by(2) {
        for x in (0..kw).step_by(2) {
            let mut m = 0.0f64;
            if x > 0 {
                m = m.max(values[grid.index(x - 1, y)]);
            }
            if x + 1 < kw {
                m = m.max(values[grid.index(x + 1, y)]);
            }
            if y > 0 {
                m = m.max(values[grid.index(x, y - 1)]);
            }
            if y + 1 < kh {
                m = m.max(values[grid.index(x, y + 1)]);
            }
            values[grid.index(x, y)] = m;
        }
    }
    SaliencyMap::new(grid, values, tree.frame())
}

/// Pixels joined across every 1-face whose saliency is at most `t`; labels follow raster order
/// of first appearance. Frame pixels are labelled like any other.
pub fn threshold_partition(map: &SaliencyMap, t: f64) -> LabelImage {
    let grid = map.grid();
    let (w, h) = (grid.width(), grid.height());
    let mut uf = UnionFind::new(w * h);
    for (x, y) in grid.edges() {
        if let (Some(p), Some(q)) = grid.edge_sides(x, y) {
            if map.get(x, y) <= t {
                uf.union(p as u32, q as u32);
            }
        }
    }
    let raw: Vec<u32> = (0..(w * h) as u32).map(|p| uf.find(p)).collect();
    LabelImage::from_raw(w, h, &raw, map.frame()).expect("grid geometry is valid")
}

/// Check used by tests and the CLI: every face kind holds what the layout promises.
pub fn is_well_formed(map: &SaliencyMap) -> bool {
    let grid = map.grid();
    (0..grid.kheight()).all(|y| {
        (0..grid.kwidth()).all(|x| grid.kind(x, y) != FaceKind::Pixel || map.get(x, y) == 0.0)
    })
}
