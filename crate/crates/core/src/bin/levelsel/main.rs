//! Command-line front-end: simplify, saliency, segment, eval, bench, tree-stats.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::Config;
use levelsel::eval::bench::BenchImage;
use levelsel::eval::synth::two_object_image;
use levelsel::eval::{bench_csv, bench_runtime, fragmented_coverage, single_segment_coverage, BenchOptions, GroundTruth};
use levelsel::hierarchy::{threshold_partition, SaliencyMap, SALIENCY_FORMAT_VERSION};
use levelsel::image::{
    load_image, save_label_pgm, save_label_png, save_pgm, save_png16, save_png8, BorderPolicy, GrayImage,
};
use levelsel::khalimsky::GRADIENT_FORMAT_VERSION;
use levelsel::pipeline::{compute_hierarchy, load_gradient_for, simplify_image, Analysis, PIPELINE_VERSION};
use levelsel::tree::dump_tree;
use levelsel::{Error, Result};

const DEFAULT_LAMBDA: f64 = 8000.0;
const DEFAULT_MIN_AREA: u64 = 10;
const DEFAULT_THRESHOLD_FRACTION: f64 = 0.05;
const DEFAULT_OVERLAP: f64 = 0.5;

#[derive(Parser, Debug)]
#[command(name = "levelsel", about = "Level-line selection and hierarchical simplification on the tree of shapes")]
#[command(disable_version_flag = true)]
struct Cli {
    /// Print pipeline and file-format versions.
    #[arg(long)]
    version: bool,
    /// `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixed-λ simplification rendered with region means.
    Simplify(SimplifyArgs),
    /// Saliency map from extinction values of the persistence attribute.
    Saliency(SaliencyArgs),
    /// Threshold a saliency file into a label image.
    Segment(SegmentArgs),
    /// Coverage tests against ground-truth masks.
    Eval(EvalArgs),
    /// Runtime comparison against the largest-decrease baseline.
    Bench(BenchArgs),
    /// Textual listing of the tree: node parent gray A L S_f S_grad.
    TreeStats(TreeStatsArgs),
}

#[derive(Args, Debug)]
struct ImageOpts {
    #[arg(long)]
    input: PathBuf,
    /// `median-frame` (default) or `none`.
    #[arg(long)]
    border: Option<BorderPolicy>,
    /// External GRAD1F gradient instead of the image's own contrast.
    #[arg(long)]
    gradient: Option<PathBuf>,
    /// Shapes smaller than this many pixels are dropped first.
    #[arg(long)]
    min_area: Option<u64>,
}

#[derive(Args, Debug)]
struct SimplifyArgs {
    #[command(flatten)]
    image: ImageOpts,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct SaliencyArgs {
    #[command(flatten)]
    image: ImageOpts,
    /// SALIENCY file.
    #[arg(long)]
    output: PathBuf,
    /// 16-bit PNG rendering of the map.
    #[arg(long)]
    display: Option<PathBuf>,
    /// Dark contours on white in the display PNG.
    #[arg(long)]
    inverted: Option<bool>,
    /// Render ranks instead of raw values in the display PNG.
    #[arg(long)]
    rank: bool,
}

#[derive(Args, Debug)]
struct ThresholdOpts {
    /// Absolute saliency threshold; 1-faces above it separate regions.
    #[arg(long, conflicts_with = "threshold_fraction")]
    threshold: Option<f64>,
    /// Threshold as a fraction of the map maximum (default 0.05).
    #[arg(long)]
    threshold_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    /// SALIENCY file.
    #[arg(long)]
    input: PathBuf,
    /// Color PNG of the regions.
    #[arg(long)]
    output: PathBuf,
    /// Raw 16-bit label PGM.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Border policy the map was computed with; `median-frame` strips the one-pixel frame.
    #[arg(long)]
    border: Option<BorderPolicy>,
    #[command(flatten)]
    threshold: ThresholdOpts,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Image to evaluate; pair with one `--gt` per object.
    #[arg(long, conflicts_with_all = ["manifest", "synthetic"], requires = "gt")]
    input: Option<PathBuf>,
    #[arg(long)]
    gt: Vec<PathBuf>,
    /// Lines of `image mask1 [mask2 ...]`, paths relative to the manifest.
    #[arg(long, conflicts_with = "synthetic")]
    manifest: Option<PathBuf>,
    /// Generate this many two-object images instead of reading files.
    #[arg(long)]
    synthetic: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    border: Option<BorderPolicy>,
    #[arg(long)]
    gradient: Option<PathBuf>,
    #[arg(long)]
    min_area: Option<u64>,
    #[command(flatten)]
    threshold: ThresholdOpts,
    /// Minimum share of a region inside the object for the fragmented test.
    #[arg(long)]
    overlap: Option<f64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated side lengths.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of `noise,natural`.
    #[arg(long, value_delimiter = ',')]
    images: Option<Vec<String>>,
    /// Skip the baseline above this side length.
    #[arg(long)]
    baseline_max_size: Option<usize>,
    /// Seconds after which a baseline run stops; its time is then a lower bound.
    #[arg(long)]
    baseline_budget: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TreeStatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    border: Option<BorderPolicy>,
    #[arg(long)]
    gradient: Option<PathBuf>,
    /// Defaults to 1 (no filtering).
    #[arg(long)]
    min_area: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn version_text() -> String {
    format!(
        "levelsel {}\npipeline {PIPELINE_VERSION}\nSALIENCY format {SALIENCY_FORMAT_VERSION}\nGRAD1F format {GRADIENT_FORMAT_VERSION}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if cli.version {
        print!("{}", version_text());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(1);
    };
    let result = cli
        .config
        .as_deref()
        .map_or_else(|| Ok(Config::default()), Config::load)
        .and_then(|cfg| run(command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

fn run(command: Command, cfg: &Config) -> Result<()> {
    match command {
        Command::Simplify(a) => simplify(a, cfg),
        Command::Saliency(a) => saliency(a, cfg),
        Command::Segment(a) => segment(a, cfg),
        Command::Eval(a) => eval(a, cfg),
        Command::Bench(a) => bench(a, cfg),
        Command::TreeStats(a) => tree_stats(a, cfg),
    }
}

fn border(flag: Option<BorderPolicy>, cfg: &Config) -> Result<BorderPolicy> {
    cfg.pick(flag, "border", BorderPolicy::MedianFrame)
}

fn load_input(
    input: &Path,
    border_flag: Option<BorderPolicy>,
    gradient_flag: Option<PathBuf>,
    cfg: &Config,
) -> Result<(GrayImage, Option<levelsel::khalimsky::GradientField>)> {
    let img = load_image(input, border(border_flag, cfg)?)?;
    let grad = match cfg.pick_opt(gradient_flag, "gradient")? {
        Some(p) => Some(load_gradient_for(&img, p)?),
        None => None,
    };
    Ok((img, grad))
}

fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    match extension(path).as_deref() {
        Some("png") => save_png8(img, path),
        Some("pgm") => save_pgm(img, path),
        _ => Err(Error::UnsupportedFormat(format!("{}: output must end in .png or .pgm", path.display()))),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

fn simplify(a: SimplifyArgs, cfg: &Config) -> Result<()> {
    let lambda = cfg.pick(a.lambda, "lambda", DEFAULT_LAMBDA)?;
    let min_area = cfg.pick(a.image.min_area, "min-area", DEFAULT_MIN_AREA)?;
    let (img, grad) = load_input(&a.image.input, a.image.border, a.image.gradient, cfg)?;
    let (out, regions) = simplify_image(&img, grad.as_ref(), lambda, min_area)?;
    save_gray(&out.crop_frame(), &a.output)?;
    println!("regions {regions}");
    Ok(())
}

fn saliency(a: SaliencyArgs, cfg: &Config) -> Result<()> {
    let min_area = cfg.pick(a.image.min_area, "min-area", DEFAULT_MIN_AREA)?;
    let inverted = cfg.pick(a.inverted, "inverted", false)?;
    let (img, grad) = load_input(&a.image.input, a.image.border, a.image.gradient, cfg)?;
    let h = compute_hierarchy(&img, grad.as_ref(), min_area)?;
    h.saliency.write(&a.output)?;
    if let Some(display) = &a.display {
        let shown = if a.rank { h.saliency.rank_normalized() } else { h.saliency.clone() };
        let g = shown.grid();
        save_png16(g.kwidth(), g.kheight(), &shown.display_values(inverted), display)?;
    }
    println!("nodes {} minima {} max {}", h.analysis.tree.len(), h.extinction.minima.len(), h.saliency.max());
    Ok(())
}

fn frame_of(policy: BorderPolicy) -> usize {
    match policy {
        BorderPolicy::MedianFrame => 1,
        BorderPolicy::None => 0,
    }
}

/// Absolute threshold from either an explicit value or a fraction of the map maximum.
fn resolve_threshold(t: &ThresholdOpts, cfg: &Config, map: &SaliencyMap) -> Result<f64> {
    let abs = cfg.pick_opt(t.threshold, "threshold")?;
    let frac = cfg.pick_opt(t.threshold_fraction, "threshold-fraction")?;
    let value = match (t.threshold, t.threshold_fraction, abs, frac) {
        (Some(v), _, _, _) => v,
        (None, Some(f), _, _) => f * map.max(),
        (None, None, Some(v), _) => v,
        (None, None, None, f) => f.unwrap_or(DEFAULT_THRESHOLD_FRACTION) * map.max(),
    };
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold {value} must be finite and non-negative")));
    }
    Ok(value)
}

fn segment(a: SegmentArgs, cfg: &Config) -> Result<()> {
    let frame = frame_of(border(a.border, cfg)?);
    let map = SaliencyMap::read(&a.input, frame)?;
    let t = resolve_threshold(&a.threshold, cfg, &map)?;
    let part = threshold_partition(&map, t);
    let shown = if frame > 0 { part.crop_frame() } else { part };
    save_label_png(&shown, &a.output)?;
    if let Some(p) = &a.labels {
        save_label_pgm(&shown, p)?;
    }
    println!("threshold {t} regions {}", shown.count());
    Ok(())
}

struct EvalItem {
    name: String,
    image: GrayImage,
    truth: GroundTruth,
}

fn eval_items(a: &EvalArgs, cfg: &Config, policy: BorderPolicy) -> Result<Vec<EvalItem>> {
    if let Some(path) = &a.input {
        let truth = GroundTruth::load(&a.gt)?;
        return Ok(vec![EvalItem {
            name: path.display().to_string(),
            image: load_image(path, policy)?,
            truth,
        }]);
    }
    if let Some(manifest) = &a.manifest {
        let text = fs::read_to_string(manifest).map_err(|source| Error::Unreadable {
            path: manifest.clone(),
            source,
        })?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut items = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut parts = line.split_whitespace();
            let image = parts.next().expect("nonempty line");
            let masks: Vec<PathBuf> = parts.map(|m| base.join(m)).collect();
            if masks.is_empty() {
                return Err(Error::InvalidArgument(format!("manifest entry `{image}` lists no masks")));
            }
            items.push(EvalItem {
                name: image.to_string(),
                image: load_image(base.join(image), policy)?,
                truth: GroundTruth::load(&masks)?,
            });
        }
        return Ok(items);
    }
    let count = cfg.pick(a.synthetic, "count", 0usize)?;
    if count == 0 {
        return Err(Error::InvalidArgument("give --input with --gt, --manifest, or --synthetic N".into()));
    }
    let seed = cfg.pick(a.seed, "seed", 1u64)?;
    let sigma = cfg.pick(a.sigma, "sigma", 8.0f64)?;
    let width = cfg.pick(a.width, "width", 300usize)?;
    let height = cfg.pick(a.height, "height", 225usize)?;
    if width < 32 || height < 32 {
        return Err(Error::InvalidArgument("synthetic images need sides of at least 32".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|i| {
            let (img, truth) = two_object_image(&mut rng, width, height, sigma);
            EvalItem {
                name: format!("synthetic-{i}"),
                image: img.apply_border(policy),
                truth,
            }
        })
        .collect())
}

fn eval(a: EvalArgs, cfg: &Config) -> Result<()> {
    let policy = border(a.border, cfg)?;
    let min_area = cfg.pick(a.min_area, "min-area", DEFAULT_MIN_AREA)?;
    let overlap = cfg.pick(a.overlap, "overlap", DEFAULT_OVERLAP)?;
    let gradient = cfg.pick_opt(a.gradient.clone(), "gradient")?;
    let items = eval_items(&a, cfg, policy)?;
    if gradient.is_some() && items.len() != 1 {
        return Err(Error::InvalidArgument("--gradient applies to a single --input image".into()));
    }

    // images are independent; score them on scoped threads and keep input order
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    let score = |item: &EvalItem| -> Result<String> {
        let grad = match &gradient {
            Some(p) => Some(load_gradient_for(&item.image, p)?),
            None => None,
        };
        let h = compute_hierarchy(&item.image, grad.as_ref(), min_area)?;
        let t = resolve_threshold(&a.threshold, cfg, &h.saliency)?;
        let part = threshold_partition(&h.saliency, t);
        let single = single_segment_coverage(&part, &item.truth)?;
        let frag = fragmented_coverage(&part, &item.truth, overlap)?;
        let mut rows = String::new();
        for (test, report) in [("single", &single), ("fragmented", &frag)] {
            for (o, s) in report.objects.iter().enumerate() {
                let _ = writeln!(
                    rows,
                    "{},{},{},{:.6},{:.6},{:.6},{},{},{}",
                    item.name, o, test, s.prf.f, s.prf.precision, s.prf.recall, s.fragments, t, min_area
                );
            }
        }
        Ok(rows)
    };
    let results: Vec<Result<String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(score).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut csv = String::from("image,object,test,F,precision,recall,fragments,threshold,min_area\n");
    for r in results {
        csv.push_str(&r?);
    }
    let (mut sum, mut n) = ([0.0; 2], [0usize; 2]);
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let k = usize::from(cols[2] == "fragmented");
        sum[k] += cols[3].parse::<f64>().unwrap_or(0.0);
        n[k] += 1;
    }
    eprintln!(
        "mean F: single {:.4}, fragmented {:.4} over {} objects",
        sum[0] / n[0].max(1) as f64,
        sum[1] / n[1].max(1) as f64,
        n[0]
    );
    write_or_print(a.output.as_deref(), &csv)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bench(a: BenchArgs, cfg: &Config) -> Result<()> {
    let defaults = BenchOptions::default();
    let sizes = match a.sizes {
        Some(s) => s,
        None => match cfg.get::<String>("sizes")? {
            Some(s) => parse_list(&s)?,
            None => defaults.sizes.clone(),
        },
    };
    let names = match a.images {
        Some(v) => v,
        None => match cfg.get::<String>("images")? {
            Some(s) => s.split(',').map(|x| x.trim().to_string()).collect(),
            None => vec!["noise".into(), "natural".into()],
        },
    };
    let images = names
        .iter()
        .map(|n| match n.as_str() {
            "noise" => Ok(BenchImage::Noise),
            "natural" => Ok(BenchImage::Natural),
            other => Err(Error::InvalidArgument(format!("unknown bench image `{other}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let budget = cfg.pick_opt(a.baseline_budget, "baseline-budget")?;
    if budget.is_some_and(|b| !b.is_finite() || b <= 0.0) {
        return Err(Error::InvalidArgument("baseline budget must be a positive number of seconds".into()));
    }
    let opts = BenchOptions {
        sizes,
        trials: cfg.pick(a.trials, "trials", defaults.trials)?,
        lambda: cfg.pick(a.lambda, "lambda", defaults.lambda)?,
        seed: cfg.pick(a.seed, "seed", defaults.seed)?,
        baseline_max_size: cfg.pick(a.baseline_max_size, "baseline-max-size", defaults.baseline_max_size)?,
        baseline_budget: budget.map(Duration::from_secs_f64),
        images,
    };
    let rows = bench_runtime(&opts)?;
    write_or_print(a.output.as_deref(), &bench_csv(&rows))
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad size `{x}`")))
        })
        .collect()
}

fn tree_stats(a: TreeStatsArgs, cfg: &Config) -> Result<()> {
    let min_area = a.min_area.unwrap_or(1);
    let (img, grad) = load_input(&a.input, a.border, a.gradient, cfg)?;
    let analysis = Analysis::new(&img, grad.as_ref(), min_area)?;
    write_or_print(a.output.as_deref(), &dump_tree(&analysis.tree, &analysis.info))
}
