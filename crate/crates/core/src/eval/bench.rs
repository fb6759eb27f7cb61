//! Wall-clock comparison of the ordered pipeline against the largest-decrease baseline.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::synth::{natural_statistics, uniform_noise};
use crate::energy::{
    baseline_largest_decrease, baseline_largest_decrease_within, compute_lambda_attribute, gradient_order, EnergyParams,
};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::khalimsky::compute_gradient;
use crate::tree::{build_tree, region_decomposition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchImage {
    Noise,
    Natural,
}

impl BenchImage {
    pub fn name(self) -> &'static str {
        match self {
            BenchImage::Noise => "noise",
            BenchImage::Natural => "natural",
        }
    }

    pub fn generate(self, size: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = match self {
            BenchImage::Noise => uniform_noise(&mut rng, size, size, 256),
            BenchImage::Natural => natural_statistics(&mut rng, size, size),
        };
        img.with_median_frame()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub image: BenchImage,
    pub size: usize,
    pub nodes: usize,
    /// Median seconds: tree construction, node information and the ordered attribute pass.
    pub ordered: f64,
    /// Median seconds of the ordered attribute pass alone.
    pub attribute: f64,
    /// Median seconds: tree construction, node information and the largest-decrease baseline.
    pub baseline: Option<BaselineTime>,
}

/// Baseline wall-clock. When `complete` is false the run hit its budget and `seconds` is a
/// lower bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineTime {
    pub seconds: f64,
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub lambda: f64,
    pub seed: u64,
    /// The baseline is skipped above this side length.
    pub baseline_max_size: usize,
    /// Wall-clock cap per baseline run; `None` runs to completion.
    pub baseline_budget: Option<Duration>,
    pub images: Vec<BenchImage>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            sizes: vec![64, 128, 256, 512],
            trials: 3,
            lambda: 8000.0,
            seed: 1,
            baseline_max_size: 256,
            baseline_budget: None,
            images: vec![BenchImage::Noise, BenchImage::Natural],
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Ordered pipeline on a framed image; returns (node count, total seconds, attribute-pass seconds).
pub fn time_ordered(img: &GrayImage) -> Result<(usize, f64, f64)> {
    let start = Instant::now();
    let grad = compute_gradient(img);
    let (tree, info, _) = build_tree(img, &grad)?;
    let decomp = region_decomposition(&tree, &info);
    let pass = Instant::now();
    let order = gradient_order(&tree, &info);
    let attr = compute_lambda_attribute(&tree, &info, &decomp, &order);
    let end = Instant::now();
    std::hint::black_box(attr);
    Ok((tree.len(), (end - start).as_secs_f64(), (end - pass).as_secs_f64()))
}

/// Baseline on a framed image, tree construction included.
pub fn time_baseline(img: &GrayImage, lambda: f64, budget: Option<Duration>) -> Result<BaselineTime> {
    let params = EnergyParams::new(lambda)?;
    let start = Instant::now();
    let grad = compute_gradient(img);
    let (tree, info, _) = build_tree(img, &grad)?;
    let decomp = region_decomposition(&tree, &info);
    let complete = match budget {
        None => {
            std::hint::black_box(baseline_largest_decrease(&tree, &info, &decomp, params));
            true
        }
        Some(b) => {
            let left = b.saturating_sub(start.elapsed());
            std::hint::black_box(baseline_largest_decrease_within(&tree, &info, &decomp, params, left)).is_some()
        }
    };
    Ok(BaselineTime {
        seconds: start.elapsed().as_secs_f64(),
        complete,
    })
}

pub fn bench_runtime(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    if opts.trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    if let Some(&s) = opts.sizes.iter().find(|&&s| s < 64) {
        return Err(Error::InvalidArgument(format!("benchmark sizes must be at least 64, got {s}")));
    }
    let mut rows = Vec::new();
    for &image in &opts.images {
        for &size in &opts.sizes {
            let img = image.generate(size, opts.seed);
            let mut nodes = 0;
            let mut ordered = Vec::new();
            let mut attribute = Vec::new();
            for _ in 0..opts.trials {
                let (n, t, a) = time_ordered(&img)?;
                nodes = n;
                ordered.push(t);
                attribute.push(a);
            }
            let baseline = if size <= opts.baseline_max_size {
                let mut ts = Vec::new();
                let mut complete = true;
                for _ in 0..opts.trials {
                    let b = time_baseline(&img, opts.lambda, opts.baseline_budget)?;
                    complete &= b.complete;
                    ts.push(b.seconds);
                }
                Some(BaselineTime {
                    seconds: median(ts),
                    complete,
                })
            } else {
                None
            };
            rows.push(BenchRow {
                image,
                size,
                nodes,
                ordered: median(ordered),
                attribute: median(attribute),
                baseline,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of log(y) against log(x).
pub fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Growth exponent of the ordered pipeline time against node count, per image kind.
pub fn ordered_exponent(rows: &[BenchRow], image: BenchImage) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.image == image)
        .map(|r| (r.nodes as f64, r.ordered))
        .collect();
    (pts.len() >= 2).then(|| fit_exponent(&pts))
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("image,size,nodes,ordered_s,attribute_s,baseline_s,ratio\n");
    for r in rows {
        let (b, ratio) = match r.baseline {
            Some(b) => {
                // a capped run only bounds the ratio from below
                let bound = if b.complete { "" } else { ">=" };
                (format!("{bound}{:.6}", b.seconds), format!("{bound}{:.2}", b.seconds / r.ordered))
            }
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{}",
            r.image.name(),
            r.size,
            r.nodes,
            r.ordered,
            r.attribute,
            b,
            ratio
        );
    }
    for image in [BenchImage::Noise, BenchImage::Natural] {
        if let Some(k) = ordered_exponent(rows, image) {
            let _ = writeln!(out, "# {} ordered exponent vs nodes: {:.3}", image.name(), k);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.5))).collect();
        assert!((fit_exponent(&pts) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_sizes() {
        let opts = BenchOptions {
            sizes: vec![32],
            ..BenchOptions::default()
        };
        assert!(bench_runtime(&opts).is_err());
    }
}
