//! Seeded synthetic test images: noise fields and flat objects with known masks.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::metrics::GroundTruth;
use crate::image::GrayImage;

/// Independent uniform integer levels in `0..levels`.
pub fn uniform_noise(rng: &mut impl Rng, width: usize, height: usize, levels: u32) -> GrayImage {
    GrayImage::from_fn(width, height, |_, _| f64::from(rng.gen_range(0..levels))).expect("positive size")
}

/// Smooth multi-octave value noise quantized to 8 bits, a stand-in for natural image statistics
/// (large correlated regions with fine texture on top).
pub fn natural_statistics(rng: &mut impl Rng, width: usize, height: usize) -> GrayImage {
    let mut acc = vec![0.0; width * height];
    let mut amplitude = 1.0;
    let mut total = 0.0;
    let mut cell = (width.max(height) / 4).max(2) as f64;
    while cell >= 1.0 {
        let gw = (width as f64 / cell).ceil() as usize + 2;
        let gh = (height as f64 / cell).ceil() as usize + 2;
        let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.gen::<f64>()).collect();
        for y in 0..height {
            for x in 0..width {
                let (fx, fy) = (x as f64 / cell, y as f64 / cell);
                let (ix, iy) = (fx as usize, fy as usize);
                let (tx, ty) = (fx - ix as f64, fy - iy as f64);
                let at = |i: usize, j: usize| lattice[j * gw + i];
                let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
                let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
                acc[y * width + x] += amplitude * (top * (1.0 - ty) + bottom * ty);
            }
        }
        total += amplitude;
        amplitude *= 0.55;
        cell /= 2.0;
    }
    let data = acc.iter().map(|v| (255.0 * v / total).round().clamp(0.0, 255.0)).collect();
    GrayImage::new(width, height, data).expect("positive size")
}

/// A filled convex or star-free region given by its pixel-center membership test.
#[derive(Clone, Debug)]
pub enum Shape {
    Disk { cx: f64, cy: f64, r: f64 },
    /// Regular polygon with `sides` vertices on a circle of radius `r`, rotated by `angle`.
    Polygon { cx: f64, cy: f64, r: f64, sides: usize, angle: f64 },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Polygon { cx, cy, r, sides, angle } => {
                let verts: Vec<(f64, f64)> = (0..sides)
                    .map(|k| {
                        let t = angle + std::f64::consts::TAU * k as f64 / sides as f64;
                        (cx + r * t.cos(), cy + r * t.sin())
                    })
                    .collect();
                // convex: inside iff on the same side of every edge
                let mut sign = 0.0;
                for k in 0..sides {
                    let (ax, ay) = verts[k];
                    let (bx, by) = verts[(k + 1) % sides];
                    let cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
                    if cross != 0.0 {
                        if sign == 0.0 {
                            sign = cross.signum();
                        } else if cross.signum() != sign {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    pub fn mask(&self, width: usize, height: usize) -> Vec<bool> {
        (0..width * height)
            .map(|p| self.contains((p % width) as f64 + 0.5, (p / width) as f64 + 0.5))
            .collect()
    }
}

/// Flat background with flat objects painted in order (later objects on top).
pub fn paint(width: usize, height: usize, background: f64, objects: &[(Shape, f64)]) -> (Vec<f64>, Vec<Vec<bool>>) {
    let mut data = vec![background; width * height];
    let mut masks = Vec::new();
    for (shape, value) in objects {
        let m = shape.mask(width, height);
        for (d, &inside) in data.iter_mut().zip(&m) {
            if inside {
                *d = *value;
            }
        }
        masks.push(m);
    }
    // an object's visible pixels are its mask minus anything painted over it
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            let (a, b) = masks.split_at_mut(j);
            for (p, q) in a[i].iter_mut().zip(&b[0]) {
                if *q {
                    *p = false;
                }
            }
        }
    }
    (data, masks)
}

/// Adds N(0, σ²) noise and rounds to the 8-bit range.
pub fn add_gaussian_noise(rng: &mut impl Rng, data: &mut [f64], sigma: f64) {
    let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    for v in data.iter_mut() {
        let n = if sigma > 0.0 { normal.sample(rng) } else { 0.0 };
        *v = (*v + n).round().clamp(0.0, 255.0);
    }
}

/// Separable Gaussian blur with edge clamping.
pub fn gaussian_blur(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for y in 0..height {
            for x in 0..width {
                let mut acc = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let off = k as isize - radius;
                    let (sx, sy) = if horizontal {
                        ((x as isize + off).clamp(0, width as isize - 1) as usize, y)
                    } else {
                        (x, (y as isize + off).clamp(0, height as isize - 1) as usize)
                    };
                    acc += w * src[sy * width + sx];
                }
                out[y * width + x] = acc / norm;
            }
        }
        out
    };
    pass(&pass(data, true), false)
}

/// Two non-overlapping objects (disks or regular polygons) on a flat background with
/// additive Gaussian noise of standard deviation `sigma`.
pub fn two_object_image(rng: &mut impl Rng, width: usize, height: usize, sigma: f64) -> (GrayImage, GroundTruth) {
    let background = rng.gen_range(60.0..90.0f64).round();
    let short = width.min(height) as f64;
    let r1 = rng.gen_range(0.16..0.24) * short;
    let r2 = rng.gen_range(0.12..0.20) * short;
    let margin = 4.0;
    // left and right halves keep the objects apart
    let c1 = (
        rng.gen_range(r1 + margin..width as f64 / 2.0 - r1 - 1.0),
        rng.gen_range(r1 + margin..height as f64 - r1 - margin),
    );
    let c2 = (
        rng.gen_range(width as f64 / 2.0 + r2 + 1.0..width as f64 - r2 - margin),
        rng.gen_range(r2 + margin..height as f64 - r2 - margin),
    );
    let mut pick = |(cx, cy): (f64, f64), r: f64| -> Shape {
        match rng.gen_range(0..3) {
            0 => Shape::Disk { cx, cy, r },
            k => Shape::Polygon {
                cx,
                cy,
                r,
                sides: if k == 1 { 4 } else { rng.gen_range(3..=6) },
                angle: rng.gen_range(0.0..std::f64::consts::TAU),
            },
        }
    };
    let s1 = pick(c1, r1);
    let s2 = pick(c2, r2);
    let v1 = (background + rng.gen_range(70.0..130.0f64)).round().min(250.0);
    let v2 = if rng.gen_bool(0.5) {
        background - rng.gen_range(40.0..55.0f64)
    } else {
        background + rng.gen_range(100.0..140.0f64)
    }
    .round();
    let (mut data, masks) = paint(width, height, background, &[(s1, v1), (s2, v2.clamp(5.0, 250.0))]);
    add_gaussian_noise(rng, &mut data, sigma);
    let img = GrayImage::new(width, height, data).expect("positive size");
    (img, GroundTruth::new(width, height, masks).expect("objects are nonempty"))
}

/// Triangle, pentagon and square at distinct gray levels, blurred then corrupted by noise.
pub fn three_shapes_image(rng: &mut impl Rng, size: usize, blur: f64, sigma: f64) -> (GrayImage, GroundTruth) {
    let s = size as f64;
    let objects = [
        (
            Shape::Polygon {
                cx: 0.27 * s,
                cy: 0.30 * s,
                r: 0.19 * s,
                sides: 3,
                angle: -std::f64::consts::FRAC_PI_2,
            },
            200.0,
        ),
        (
            Shape::Polygon {
                cx: 0.72 * s,
                cy: 0.32 * s,
                r: 0.18 * s,
                sides: 5,
                angle: -std::f64::consts::FRAC_PI_2,
            },
            60.0,
        ),
        (
            Shape::Polygon {
                cx: 0.50 * s,
                cy: 0.74 * s,
                r: 0.20 * s,
                sides: 4,
                angle: std::f64::consts::FRAC_PI_4,
            },
            160.0,
        ),
    ];
    let (data, masks) = paint(size, size, 110.0, &objects);
    let mut data = if blur > 0.0 { gaussian_blur(&data, size, size, blur) } else { data };
    add_gaussian_noise(rng, &mut data, sigma);
    let img = GrayImage::new(size, size, data).expect("positive size");
    (img, GroundTruth::new(size, size, masks).expect("objects are nonempty"))
}
