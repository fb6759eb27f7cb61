//! Grayscale and label rasters, PGM/PNG I/O and border framing.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A 2-D scalar field stored row-major as `f64`.
///
/// `frame` counts the synthetic border rings added by [`GrayImage::with_median_frame`];
/// those pixels exist for the tree construction only and are skipped by metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    frame: usize,
}

/// How the image border is handled when loading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BorderPolicy {
    /// Surround the image with a one-pixel frame holding the lower median of the border.
    #[default]
    MedianFrame,
    /// Use the pixels as they are.
    None,
}

impl std::str::FromStr for BorderPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median-frame" => Ok(BorderPolicy::MedianFrame),
            "none" => Ok(BorderPolicy::None),
            other => Err(Error::InvalidArgument(format!("unknown border policy `{other}`"))),
        }
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(GrayImage {
            width,
            height,
            data,
            frame: 0,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Number of synthetic frame rings around the original pixels.
    pub fn frame(&self) -> usize {
        self.frame
    }

    pub(crate) fn set_frame(&mut self, frame: usize) {
        self.frame = frame;
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn is_frame_pixel(&self, x: usize, y: usize) -> bool {
        x < self.frame || y < self.frame || x + self.frame >= self.width || y + self.frame >= self.height
    }

    /// Applies `f` to every pixel value, keeping geometry and frame.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GrayImage> {
        let mut out = GrayImage::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())?;
        out.frame = self.frame;
        Ok(out)
    }

    /// Values on the outermost ring of pixels, clockwise from the top-left corner.
    pub fn border_values(&self) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        if w == 1 || h == 1 {
            return self.data.clone();
        }
        let mut out = Vec::with_capacity(2 * (w + h) - 4);
        out.extend((0..w).map(|x| self.get(x, 0)));
        out.extend((1..h).map(|y| self.get(w - 1, y)));
        out.extend((0..w - 1).rev().map(|x| self.get(x, h - 1)));
        out.extend((1..h - 1).rev().map(|y| self.get(0, y)));
        out
    }

    /// Lower median of the border values (sorted index `(n - 1) / 2`).
    pub fn border_median(&self) -> f64 {
        let mut values = self.border_values();
        values.sort_by(f64::total_cmp);
        values[(values.len() - 1) / 2]
    }

    /// Adds a one-pixel frame valued at the lower median of the current border.
    pub fn with_median_frame(&self) -> GrayImage {
        let m = self.border_median();
        let (w, h) = (self.width + 2, self.height + 2);
        let mut data = vec![m; w * h];
        for y in 0..self.height {
            let src = &self.data[y * self.width..(y + 1) * self.width];
            data[(y + 1) * w + 1..(y + 1) * w + 1 + self.width].copy_from_slice(src);
        }
        GrayImage {
            width: w,
            height: h,
            data,
            frame: self.frame + 1,
        }
    }

    /// Removes every synthetic frame ring.
    pub fn crop_frame(&self) -> GrayImage {
        let k = self.frame;
        let (w, h) = (self.width - 2 * k, self.height - 2 * k);
        let mut data = Vec::with_capacity(w * h);
        for y in k..k + h {
            data.extend_from_slice(&self.data[y * self.width + k..y * self.width + k + w]);
        }
        GrayImage {
            width: w,
            height: h,
            data,
            frame: 0,
        }
    }

    pub fn apply_border(&self, policy: BorderPolicy) -> GrayImage {
        match policy {
            BorderPolicy::MedianFrame => self.with_median_frame(),
            BorderPolicy::None => self.clone(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// One label per pixel; labels are dense in `0..count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: usize,
    frame: usize,
}

impl LabelImage {
    /// Builds a label image, relabelling to dense ids in raster order of first appearance.
    pub fn from_raw(width: usize, height: usize, raw: &[u32], frame: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if raw.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: width * height,
                found: raw.len(),
            });
        }
        let mut remap = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = remap.len() as u32;
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Ok(LabelImage {
            width,
            height,
            labels,
            count: remap.len(),
            frame,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Number of distinct labels.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    /// Drops the frame pixels and relabels what remains.
    pub fn crop_frame(&self) -> LabelImage {
        let k = self.frame;
        let (w, h) = (self.width - 2 * k, self.height - 2 * k);
        let mut raw = Vec::with_capacity(w * h);
        for y in k..k + h {
            raw.extend_from_slice(&self.labels[y * self.width + k..y * self.width + k + w]);
        }
        LabelImage::from_raw(w, h, &raw, 0).expect("cropped geometry is valid")
    }

    /// True if every region of `self` lies inside a single region of `coarser`.
    pub fn is_finer_than(&self, coarser: &LabelImage) -> bool {
        if self.labels.len() != coarser.labels.len() {
            return false;
        }
        let mut owner = vec![u32::MAX; self.count];
        for (&fine, &coarse) in self.labels.iter().zip(&coarser.labels) {
            let slot = &mut owner[fine as usize];
            if *slot == u32::MAX {
                *slot = coarse;
            } else if *slot != coarse {
                return false;
            }
        }
        true
    }
}

/// Loads a binary PGM (P5) or 8-bit grayscale PNG.
pub fn load_image(path: impl AsRef<Path>, border: BorderPolicy) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let img = decode_image(&bytes)?;
    Ok(img.apply_border(border))
}

pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else {
        Err(Error::UnsupportedFormat("expected binary PGM (P5) or PNG".into()))
    }
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let dynimg = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    match dynimg {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            GrayImage::new(w as usize, h as usize, buf.into_raw().into_iter().map(f64::from).collect())
        }
        other => Err(Error::UnsupportedFormat(format!(
            "PNG color type {:?} (only 8-bit grayscale is accepted)",
            other.color()
        ))),
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader("PGM header field".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::MalformedHeader("PGM header terminator".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension);
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedFormat(format!("PGM maxval {maxval}")));
    }
    let n = width * height;
    let payload = &bytes[pos..];
    let data: Vec<f64> = if maxval < 256 {
        if payload.len() < n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: payload.len(),
            });
        }
        payload[..n].iter().map(|&b| f64::from(b)).collect()
    } else {
        if payload.len() < 2 * n {
            return Err(Error::SizeMismatch {
                expected: 2 * n,
                found: payload.len(),
            });
        }
        payload[..2 * n]
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    };
    GrayImage::new(width, height, data)
}

/// Writes a binary PGM; values are rounded and clamped to `0..=maxval`.
pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, values: &[f64], maxval: u16) -> Result<()> {
    let mut out = Vec::with_capacity(values.len() * 2 + 32);
    write!(out, "P5\n{width} {height}\n{maxval}\n")?;
    let clamp = |v: f64| v.round().clamp(0.0, f64::from(maxval)) as u16;
    if maxval < 256 {
        out.extend(values.iter().map(|&v| clamp(v) as u8));
    } else {
        for &v in values {
            out.extend_from_slice(&clamp(v).to_be_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let (_, hi) = img.min_max();
    let maxval = if hi > 255.0 { 65535 } else { 255 };
    write_pgm(path, img.width(), img.height(), img.data(), maxval)
}

pub fn save_png8(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let raw: Vec<u8> = img.data().iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, raw)
        .ok_or_else(|| Error::Invariant("PNG buffer size".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

pub fn save_png16(width: usize, height: usize, values: &[u16], path: impl AsRef<Path>) -> Result<()> {
    let buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(width as u32, height as u32, values.to_vec())
        .ok_or_else(|| Error::Invariant("PNG buffer size".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Saves labels as a 16-bit PGM of raw label ids.
pub fn save_label_pgm(labels: &LabelImage, path: impl AsRef<Path>) -> Result<()> {
    if labels.count() > 65536 {
        return Err(Error::InvalidArgument(format!(
            "{} labels do not fit a 16-bit PGM",
            labels.count()
        )));
    }
    let values: Vec<f64> = labels.labels().iter().map(|&l| f64::from(l)).collect();
    write_pgm(path, labels.width(), labels.height(), &values, 65535)
}

/// Saves labels as an RGB PNG with a deterministic color per label.
pub fn save_label_png(labels: &LabelImage, path: impl AsRef<Path>) -> Result<()> {
    let mut raw = Vec::with_capacity(labels.labels().len() * 3);
    for &l in labels.labels() {
        raw.extend_from_slice(&label_color(l));
    }
    let buf = image::RgbImage::from_raw(labels.width() as u32, labels.height() as u32, raw)
        .ok_or_else(|| Error::Invariant("PNG buffer size".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

fn label_color(label: u32) -> [u8; 3] {
    // splitmix-style scramble, stable across runs
    let mut z = u64::from(label).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    [(z >> 8) as u8 | 0x20, (z >> 24) as u8 | 0x20, (z >> 40) as u8 | 0x20]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_pixel_frame_takes_its_value() {
        let img = GrayImage::new(1, 1, vec![7.0]).unwrap();
        let framed = img.with_median_frame();
        assert_eq!((framed.width(), framed.height()), (3, 3));
        assert!(framed.data().iter().all(|&v| v == 7.0));
        assert_eq!(framed.frame(), 1);
    }

    #[test]
    fn even_border_uses_lower_median() {
        let img = GrayImage::new(2, 2, vec![0.0, 0.0, 255.0, 255.0]).unwrap();
        assert_eq!(img.border_median(), 0.0);
        let framed = img.with_median_frame();
        assert_eq!(framed.get(0, 0), 0.0);
        assert_eq!(framed.get(1, 2), 255.0);
    }

    #[test]
    fn frame_then_crop_is_identity() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 7 + y * 3) as f64).unwrap();
        let back = img.with_median_frame().crop_frame();
        assert_eq!(back, img);
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = load_image("/nonexistent/definitely/not/here.pgm", BorderPolicy::None).unwrap_err();
        assert!(err.to_string().starts_with("unreadable file"), "{err}");
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(decode_image(b"P5\n0 4\n255\n"), Err(Error::ZeroDimension)));
        assert!(matches!(GrayImage::new(0, 3, vec![]), Err(Error::ZeroDimension)));
    }

    #[test]
    fn unknown_magic_is_unsupported() {
        assert!(matches!(decode_image(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn pgm_round_trip_16bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = GrayImage::new(3, 2, vec![0.0, 1.0, 300.0, 65535.0, 7.0, 9.0]).unwrap();
        save_pgm(&img, &path).unwrap();
        let back = load_image(&path, BorderPolicy::None).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[3, 250]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.data(), &[3.0, 250.0]);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = GrayImage::from_fn(4, 3, |x, y| (x * 50 + y) as f64).unwrap();
        save_png8(&img, &path).unwrap();
        assert_eq!(load_image(&path, BorderPolicy::None).unwrap(), img);
    }

    #[test]
    fn label_nesting_check() {
        let fine = LabelImage::from_raw(4, 1, &[0, 1, 2, 3], 0).unwrap();
        let coarse = LabelImage::from_raw(4, 1, &[0, 0, 1, 1], 0).unwrap();
        assert!(fine.is_finer_than(&coarse));
        assert!(!coarse.is_finer_than(&fine));
        let crossing = LabelImage::from_raw(4, 1, &[0, 1, 1, 2], 0).unwrap();
        assert!(!crossing.is_finer_than(&LabelImage::from_raw(4, 1, &[0, 0, 1, 1], 0).unwrap()));
    }
}
