//! Khalimsky cell-complex coordinates and the contour gradient on 1-faces.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Point,
    Edge,
    Pixel,
}

/// The (2W+1)×(2H+1) face grid of a W×H image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KhalimskyGrid {
    width: usize,
    height: usize,
}

impl KhalimskyGrid {
    pub fn new(width: usize, height: usize) -> Self {
        KhalimskyGrid { width, height }
    }

    pub fn for_image(img: &GrayImage) -> Self {
        KhalimskyGrid::new(img.width(), img.height())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kwidth(&self) -> usize {
        2 * self.width + 1
    }

    pub fn kheight(&self) -> usize {
        2 * self.height + 1
    }

    pub fn face_count(&self) -> usize {
        self.kwidth() * self.kheight()
    }

    /// Number of 1-faces: horizontal edges plus vertical edges.
    pub fn edge_count(&self) -> usize {
        self.width * (self.height + 1) + self.height * (self.width + 1)
    }

    pub fn kind(&self, x: usize, y: usize) -> FaceKind {
        match (x % 2, y % 2) {
            (1, 1) => FaceKind::Pixel,
            (0, 0) => FaceKind::Point,
            _ => FaceKind::Edge,
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.kwidth() + x
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.kwidth(), idx / self.kwidth())
    }

    /// 2-face coordinates of pixel (i, j).
    #[inline]
    pub fn pixel_to_face(&self, i: usize, j: usize) -> (usize, usize) {
        (2 * i + 1, 2 * j + 1)
    }

    /// Pixel of a 2-face, or `None` for 0- and 1-faces.
    pub fn face_to_pixel(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        (self.kind(x, y) == FaceKind::Pixel).then(|| ((x - 1) / 2, (y - 1) / 2))
    }

    pub fn on_outer_ring(&self, x: usize, y: usize) -> bool {
        x == 0 || y == 0 || x + 1 == self.kwidth() || y + 1 == self.kheight()
    }

    /// Raster indices of the pixels on either side of a 1-face; `None` marks the exterior.
    pub fn edge_sides(&self, x: usize, y: usize) -> (Option<usize>, Option<usize>) {
        debug_assert_eq!(self.kind(x, y), FaceKind::Edge);
        let pix = |fx: usize, fy: usize| {
            (fx < self.kwidth() && fy < self.kheight()).then(|| ((fy - 1) / 2) * self.width + (fx - 1) / 2)
        };
        if x % 2 == 1 {
            // horizontal edge: pixels above and below
            let above = if y == 0 { None } else { pix(x, y - 1) };
            (above, pix(x, y + 1))
        } else {
            let left = if x == 0 { None } else { pix(x - 1, y) };
            (left, pix(x + 1, y))
        }
    }

    /// Iterates the grid coordinates of every 1-face in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let kw = self.kwidth();
        (0..self.kheight()).flat_map(move |y| {
            let start = if y % 2 == 0 { 1 } else { 0 };
            (start..kw).step_by(2).map(move |x| (x, y))
        })
    }

    /// The four 1-faces around a pixel, as grid indices.
    pub fn pixel_edges(&self, p: usize) -> [usize; 4] {
        let (fx, fy) = self.pixel_to_face(p % self.width, p / self.width);
        [
            self.index(fx, fy - 1),
            self.index(fx, fy + 1),
            self.index(fx - 1, fy),
            self.index(fx + 1, fy),
        ]
    }
}

/// Non-negative values on the 1-faces, stored over the full face grid (other faces hold 0).
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    grid: KhalimskyGrid,
    values: Vec<f64>,
}

impl GradientField {
    pub fn zeros(grid: KhalimskyGrid) -> Self {
        GradientField {
            grid,
            values: vec![0.0; grid.face_count()],
        }
    }

    /// Builds a field from one value per 1-face in row-major grid order.
    pub fn from_edge_values(grid: KhalimskyGrid, edge_values: &[f64]) -> Result<Self> {
        if edge_values.len() != grid.edge_count() {
            return Err(Error::SizeMismatch {
                expected: grid.edge_count(),
                found: edge_values.len(),
            });
        }
        if let Some(i) = edge_values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if edge_values.iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeEntries);
        }
        let mut field = GradientField::zeros(grid);
        for ((x, y), &v) in grid.edges().zip(edge_values) {
            let idx = grid.index(x, y);
            field.values[idx] = v;
        }
        Ok(field)
    }

    pub fn grid(&self) -> KhalimskyGrid {
        self.grid
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.grid.index(x, y)]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Full-grid values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn edge_values(&self) -> Vec<f64> {
        self.grid.edges().map(|(x, y)| self.get(x, y)).collect()
    }

    /// Embeds the field in a grid enlarged by `frame` pixels per side; new faces get 0.
    pub fn padded(&self, frame: usize) -> GradientField {
        let grid = KhalimskyGrid::new(self.grid.width() + 2 * frame, self.grid.height() + 2 * frame);
        let mut out = GradientField::zeros(grid);
        let k = 2 * frame;
        for y in 0..self.grid.kheight() {
            for x in 0..self.grid.kwidth() {
                out.values[grid.index(x + k, y + k)] = self.get(x, y);
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(self.grid.edge_count() * 8 + 32);
        writeln!(out, "GRAD1F {} {}", self.grid.kwidth(), self.grid.kheight())?;
        for v in self.edge_values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// |f(p) − f(q)| on interior 1-faces, 0 on the outer ring.
pub fn compute_gradient(img: &GrayImage) -> GradientField {
    let grid = KhalimskyGrid::for_image(img);
    let mut field = GradientField::zeros(grid);
    let data = img.data();
    for (x, y) in grid.edges() {
        if let (Some(p), Some(q)) = grid.edge_sides(x, y) {
            field.values[grid.index(x, y)] = (data[p] - data[q]).abs();
        }
    }
    field
}

/// Version of the `GRAD1F` layout.
pub const GRADIENT_FORMAT_VERSION: u32 = 1;

/// Reads a `GRAD1F` file and checks it against `grid`.
pub fn load_external_gradient(path: impl AsRef<Path>, grid: KhalimskyGrid) -> Result<GradientField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let (kw, kh, payload) = parse_face_header(&bytes, "GRAD1F")?;
    if (kw, kh) != (grid.kwidth(), grid.kheight()) {
        return Err(Error::SizeMismatch {
            expected: grid.face_count(),
            found: kw * kh,
        });
    }
    let values = read_f64_le(payload, grid.edge_count())?;
    GradientField::from_edge_values(grid, &values)
}

/// Splits `<magic> <kw> <kh>\n` from the payload that follows it.
pub(crate) fn parse_face_header<'a>(bytes: &'a [u8], magic: &str) -> Result<(usize, usize, &'a [u8])> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader(format!("missing {magic} header line")))?;
    let line = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::MalformedHeader("non-UTF-8 header".into()))?;
    let mut parts = line.split_ascii_whitespace();
    if parts.next() != Some(magic) {
        return Err(Error::MalformedHeader(format!("expected `{magic}` magic")));
    }
    let mut dim = || -> Result<usize> {
        parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad {magic} dimensions")))
    };
    let (kw, kh) = (dim()?, dim()?);
    if parts.next().is_some() {
        return Err(Error::MalformedHeader("trailing header fields".into()));
    }
    if kw < 3 || kh < 3 || kw % 2 == 0 || kh % 2 == 0 {
        return Err(Error::MalformedHeader(format!("grid {kw}x{kh} is not a Khalimsky grid")));
    }
    Ok((kw, kh, &bytes[nl + 1..]))
}

pub(crate) fn read_f64_le(payload: &[u8], count: usize) -> Result<Vec<f64>> {
    if payload.len() != count * 8 {
        return Err(Error::SizeMismatch {
            expected: count,
            found: payload.len() / 8,
        });
    }
    Ok(payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_zero_gradient() {
        let img = GrayImage::filled(4, 3, 42.0).unwrap();
        assert!(compute_gradient(&img).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_pixel_difference() {
        let img = GrayImage::new(2, 1, vec![10.0, 30.0]).unwrap();
        let g = compute_gradient(&img);
        assert_eq!(g.get(2, 1), 20.0);
        assert_eq!(g.get(0, 1), 0.0);
        assert_eq!(g.get(1, 0), 0.0);
    }

    #[test]
    fn checkerboard_interior_edges() {
        let img = GrayImage::from_fn(3, 3, |x, y| if (x + y) % 2 == 0 { 0.0 } else { 255.0 }).unwrap();
        let grid = KhalimskyGrid::for_image(&img);
        let g = compute_gradient(&img);
        let mut interior = 0;
        for (x, y) in grid.edges() {
            if grid.on_outer_ring(x, y) {
                assert_eq!(g.get(x, y), 0.0);
            } else {
                assert_eq!(g.get(x, y), 255.0);
                interior += 1;
            }
        }
        // 2 vertical separators per row, 2 horizontal per column
        assert_eq!(interior, 12);
    }

    #[test]
    fn pixel_face_bijection() {
        let grid = KhalimskyGrid::new(5, 4);
        for j in 0..4 {
            for i in 0..5 {
                let (x, y) = grid.pixel_to_face(i, j);
                assert_eq!(grid.kind(x, y), FaceKind::Pixel);
                assert_eq!(grid.face_to_pixel(x, y), Some((i, j)));
            }
        }
        assert_eq!(grid.edges().count(), grid.edge_count());
    }

    #[test]
    fn every_edge_has_two_sides_or_exterior() {
        let grid = KhalimskyGrid::new(3, 2);
        for (x, y) in grid.edges() {
            match grid.edge_sides(x, y) {
                (Some(_), Some(_)) => assert!(!grid.on_outer_ring(x, y)),
                (None, Some(_)) | (Some(_), None) => assert!(grid.on_outer_ring(x, y)),
                (None, None) => panic!("edge ({x},{y}) touches no pixel"),
            }
        }
    }

    #[test]
    fn gradient_file_round_trip_is_bit_identical() {
        let img = GrayImage::from_fn(6, 5, |x, y| ((x * 37 + y * 11) % 17) as f64 * 0.3).unwrap();
        let g = compute_gradient(&img);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.grad");
        g.write(&path).unwrap();
        let back = load_external_gradient(&path, g.grid()).unwrap();
        assert_eq!(
            back.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            g.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn external_gradient_rejects_negative() {
        let grid = KhalimskyGrid::new(2, 2);
        let mut values = vec![0.0; grid.edge_count()];
        assert!(GradientField::from_edge_values(grid, &values).is_ok());
        values[3] = -1.0;
        let err = GradientField::from_edge_values(grid, &values).unwrap_err();
        assert!(err.to_string().contains("negative entries"));
    }

    #[test]
    fn external_gradient_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.grad");
        GradientField::zeros(KhalimskyGrid::new(2, 2)).write(&path).unwrap();
        let err = load_external_gradient(&path, KhalimskyGrid::new(3, 2)).unwrap_err();
        assert!(matches!(err, Error::SizeMismatch { .. }));
    }
}
