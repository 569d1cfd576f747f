//! `radon-lens` command-line front end.
//!
//! Every subcommand takes `--seed` and `--out DIR`, writes its artifacts into
//! `DIR` and prints a one-line JSON summary on stdout. Failures print a
//! single JSON line `{"error": <kind>, "message": <text>}` on stderr and exit
//! with status 1; usage and flag-parsing errors exit with status 2.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radon_lens::adversarial::{perturb, Direction, PerturbConfig};
use radon_lens::dataset::{load_csv, sample_gaussian, sample_halfmoon, save_csv};
use radon_lens::defining_fn::{Circular, DefiningFunction, Linear, Surface};
use radon_lens::density::DensityMethod;
use radon_lens::empirical_radon::{density_to_csv, sinogram, slice, Sinogram};
use radon_lens::grid_radon::{
    default_n_t, fbp_reconstruct, forward_radon_grid, relative_l1_in_disk, FilterWindow,
    GridGeometry, GridImage, RampFilterSpec, RampKernel,
};
use radon_lens::levelset::{default_levels, marching_squares, surface_grid, Bounds, LevelCurveSet};
use radon_lens::nn::{Activation, MaxPool, MlpModel};
use radon_lens::train::{classifier_from_arch, fit, save_trace_csv, Classifier, TrainConfig};
use radon_lens::{Error, LabeledDataset};
use serde_json::json;

use svg::{Panel, Svg};

#[derive(Parser)]
#[command(
    name = "radon-lens",
    version,
    about = "Radon-transform views of data and classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset.
    Sample(SampleArgs),
    /// Density of g(x) over a dataset.
    Slice(SliceArgs),
    /// Linear slices at evenly spaced angles.
    Sinogram(SinogramArgs),
    /// Forward-project an image and reconstruct it by filtered back-projection.
    Fbp(FbpArgs),
    /// Fit a classifier by cross-entropy gradient descent.
    Train(TrainArgs),
    /// Level curves of a model or defining function.
    Levelsets(LevelsetArgs),
    /// Level curves of one random network under four activations.
    ActivationsDemo(ActivationsArgs),
    /// Max-pooled surface of random perceptrons.
    PoolDemo(PoolArgs),
    /// Walk a data point across the decision boundary.
    Adversarial(AdversarialArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[command(subcommand)]
    kind: SampleKind,
}

#[derive(Subcommand)]
enum SampleKind {
    /// Two interleaved half-circles; writes `halfmoon.csv`.
    Halfmoon {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Write an `x0,..,label` header row.
        #[arg(long)]
        header: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Isotropic Gaussian (label 0); writes `gaussian.csv`.
    Gaussian {
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, value_parser = parse_list, default_value = "0,0")]
        mean: List,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        header: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Points CSV; the last column holds integer labels unless `--no-labels`.
    /// A header row is detected automatically.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    no_labels: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Kde,
    Histogram,
}

impl From<MethodArg> for DensityMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Kde => DensityMethod::Kde,
            MethodArg::Histogram => DensityMethod::Histogram,
        }
    }
}

#[derive(Args)]
struct SliceArgs {
    /// Defining function or model JSON; a unit linear function when absent.
    #[arg(long)]
    g: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Direction of a linear or circular `g`.
    #[arg(long)]
    theta_deg: Option<f64>,
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    #[arg(long, value_enum, default_value = "kde")]
    method: MethodArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SinogramArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 180)]
    n_thetas: usize,
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    None,
    Cosine,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    BandLimited,
    Sampled,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false, args = ["image", "phantom_size"])]
struct FbpArgs {
    /// Image CSV (see README for the layout).
    #[arg(long)]
    image: Option<PathBuf>,
    /// Instead of `--image`: an isotropic Gaussian phantom on `[-1, 1]^2`
    /// with this many pixels per side.
    #[arg(long)]
    phantom_size: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    phantom_sigma: f64,
    #[arg(long, value_parser = parse_point, default_value = "0,0")]
    phantom_center: [f64; 2],
    #[arg(long, default_value_t = 180)]
    n_thetas: usize,
    /// Offsets per projection; one per pixel across the diagonal by default.
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long, value_enum, default_value = "band-limited")]
    kernel: KernelArg,
    #[arg(long, value_enum, default_value = "none")]
    window: WindowArg,
    #[arg(long, default_value_t = 1.0)]
    cutoff: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TrainArgs {
    /// `W0-W1-...-1:hidden[:output]`, `linear`, `circular[:r]` or `poly:m`.
    #[arg(long)]
    arch: String,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.3)]
    lr: f64,
    /// Mini-batch size or `full`.
    #[arg(long, value_parser = parse_batch, default_value = "32")]
    batch: Batch,
    #[arg(long)]
    normalize_rows: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy)]
struct Batch(Option<usize>);

#[derive(Args)]
struct SurfaceArgs {
    /// `x_min,x_max,y_min,y_max`.
    #[arg(long, value_parser = parse_bounds, default_value = "-1.5,2.5,-1.25,1.75")]
    bounds: Bounds,
    /// Grid nodes per axis.
    #[arg(long, default_value_t = 200)]
    resolution: usize,
    /// Number of levels between the 2nd and 98th percentile.
    #[arg(long, default_value_t = 10)]
    levels: usize,
    /// Explicit levels; overrides `--levels`.
    #[arg(long, value_parser = parse_list)]
    at: Option<List>,
    /// Optional labeled CSV drawn under the curves.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct LevelsetArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    surface: SurfaceArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ActivationsArgs {
    /// Layer widths, input first.
    #[arg(long, default_value = "2-50-100-1")]
    widths: String,
    #[command(flatten)]
    surface: SurfaceArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PoolArgs {
    /// Number of pooled perceptrons.
    #[arg(long, default_value_t = 3)]
    members: usize,
    #[command(flatten)]
    surface: SurfaceArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    /// Towards the other class.
    Auto,
    Ascend,
    Descend,
}

#[derive(Args)]
struct AdversarialArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    start_idx: usize,
    #[arg(long, default_value_t = radon_lens::adversarial::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = radon_lens::adversarial::DEFAULT_MAX_STEPS)]
    max_steps: usize,
    #[arg(long)]
    max_displacement: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    direction: DirectionArg,
    #[arg(long, value_parser = parse_bounds, default_value = "-1.5,2.5,-1.25,1.75")]
    bounds: Bounds,
    #[arg(long, default_value_t = 150)]
    resolution: usize,
    #[command(flatten)]
    common: Common,
}

/// Comma-separated numbers, parsed as one flag value.
#[derive(Clone)]
struct List(Vec<f64>);

fn parse_list(s: &str) -> Result<List, String> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("`{c}`: {e}")))
        .collect::<Result<_, _>>()
        .map(List)
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    match parse_list(s)?.0[..] {
        [x, y] => Ok([x, y]),
        _ => Err(format!("`{s}` is not `x,y`")),
    }
}

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    Bounds::parse(s).map_err(|e| e.to_string())
}

fn parse_batch(s: &str) -> Result<Batch, String> {
    if s == "full" {
        return Ok(Batch(None));
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Batch(Some(n))),
        _ => Err(format!("`{s}` is neither `full` nor a positive integer")),
    }
}

type Written = Vec<String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("RADON_LENS_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                // Fails only if a pool already exists, which cannot happen here.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                report(&Error::InvalidArgument(format!(
                    "RADON_LENS_THREADS must be a positive integer, got `{v}`"
                )));
                return ExitCode::from(2);
            }
        }
    }
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            report(&e);
            ExitCode::from(1)
        }
    }
}

fn report(e: &Error) {
    eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
}

fn run(command: Command) -> radon_lens::Result<serde_json::Value> {
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Slice(a) => cmd_slice(a),
        Command::Sinogram(a) => cmd_sinogram(a),
        Command::Fbp(a) => cmd_fbp(a),
        Command::Train(a) => cmd_train(a),
        Command::Levelsets(a) => cmd_levelsets(a),
        Command::ActivationsDemo(a) => cmd_activations(a),
        Command::PoolDemo(a) => cmd_pool(a),
        Command::Adversarial(a) => cmd_adversarial(a),
    }
}

fn out_dir(common: &Common) -> radon_lens::Result<&Path> {
    std::fs::create_dir_all(&common.out).map_err(|e| Error::Io {
        path: common.out.clone(),
        source: e,
    })?;
    Ok(&common.out)
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Written) -> radon_lens::Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    written.push(path.display().to_string());
    Ok(())
}

fn has_header(path: &Path) -> radon_lens::Result<bool> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    let first = text.lines().next().unwrap_or("");
    Ok(first
        .split(',')
        .next()
        .is_some_and(|c| c.trim().parse::<f64>().is_err()))
}

fn load_data(path: &Path, labeled: bool) -> radon_lens::Result<LabeledDataset> {
    let header = has_header(path)?;
    if labeled {
        load_csv(path, header)
    } else {
        let dist = radon_lens::dataset::load_points_csv(path, header, false)?;
        let n = dist.len();
        LabeledDataset::new(dist.points().to_vec(), vec![0; n])
    }
}

/// A JSON file holding a classifier, a defining function or a bare MLP.
enum Model {
    Classifier(Classifier),
    Defining(DefiningFunction),
}

impl Model {
    fn load(path: &Path) -> radon_lens::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        if let Ok(c) = Classifier::from_json(&text) {
            return Ok(Model::Classifier(c));
        }
        if let Ok(g) = DefiningFunction::from_json(&text) {
            return Ok(Model::Defining(g));
        }
        match MlpModel::from_json(&text) {
            Ok(m) => Ok(Model::Defining(DefiningFunction::Mlp { model: m })),
            Err(e) => Err(Error::InvalidArgument(format!(
                "{} is not a classifier, defining function or model: {e}",
                path.display()
            ))),
        }
    }

    fn surface(&self) -> &dyn Surface {
        match self {
            Model::Classifier(c) => c,
            Model::Defining(g) => g,
        }
    }
}

fn with_direction(g: DefiningFunction, phi: f64) -> radon_lens::Result<DefiningFunction> {
    let theta = vec![phi.cos(), phi.sin()];
    match g {
        DefiningFunction::Linear(l) if l.theta().len() == 2 => {
            Ok(DefiningFunction::Linear(Linear::new(theta, true)?))
        }
        DefiningFunction::Circular(c) if c.theta().len() == 2 => Ok(DefiningFunction::Circular(
            Circular::new(theta, c.radius(), true)?,
        )),
        other => Err(Error::InvalidArgument(format!(
            "--theta-deg applies to 2-D linear or circular functions, not {}",
            other.describe()
        ))),
    }
}

fn cmd_sample(a: SampleArgs) -> radon_lens::Result<serde_json::Value> {
    let (ds, name, header, common) = match a.kind {
        SampleKind::Halfmoon {
            n,
            noise,
            header,
            common,
        } => (
            sample_halfmoon(n, noise, common.seed)?,
            "halfmoon.csv",
            header,
            common,
        ),
        SampleKind::Gaussian {
            n,
            mean,
            scale,
            header,
            common,
        } => {
            let dist = sample_gaussian(n, &mean.0, scale, common.seed)?;
            let ds = LabeledDataset::new(dist.points().to_vec(), vec![0; n])?;
            (ds, "gaussian.csv", header, common)
        }
    };
    let dir = out_dir(&common)?;
    let path = dir.join(name);
    save_csv(&ds, &path, header)?;
    Ok(json!({"written": [path.display().to_string()], "n": ds.len()}))
}

fn cmd_slice(a: SliceArgs) -> radon_lens::Result<serde_json::Value> {
    let ds = load_data(&a.data.data, !a.data.no_labels)?;
    let phi = a.theta_deg.map(f64::to_radians);
    let model = match (&a.g, phi) {
        (None, phi) => Model::Defining(DefiningFunction::Linear(Linear::from_angle(
            phi.unwrap_or(0.0),
        ))),
        (Some(path), None) => Model::load(path)?,
        (Some(path), Some(phi)) => match Model::load(path)? {
            Model::Defining(g) => Model::Defining(with_direction(g, phi)?),
            Model::Classifier(_) => {
                return Err(Error::InvalidArgument(
                    "--theta-deg cannot re-orient a trained classifier".into(),
                ))
            }
        },
    };
    let s = slice(
        &ds.to_distribution(),
        model.surface(),
        a.theta_deg.map(|d| format!("{d}deg")).unwrap_or_default(),
        a.method.into(),
        a.resolution,
    )?;
    let dir = out_dir(&a.common)?;
    let mut written = Vec::new();
    write(dir, "slice.csv", &density_to_csv(&s.density), &mut written)?;
    Ok(json!({"written": written, "bandwidth": s.density.bandwidth()}))
}

fn sinogram_svg(s: &Sinogram) -> String {
    let mut doc = Svg::new(560.0, 400.0);
    let t = s.t();
    let p = Panel {
        left: 60.0,
        top: 30.0,
        width: 470.0,
        height: 320.0,
        x_range: [0.0, 180.0],
        y_range: [t[0], t[t.len() - 1]],
    };
    doc.heatmap(&p, s.values(), s.n_t(), s.n_thetas(), 180);
    doc.frame(&p);
    doc.text(60.0, 20.0, 13.0, "sinogram: slice density over (phi, t)");
    doc.text(250.0, 385.0, 12.0, "phi [deg], 0 to 180");
    doc.text(5.0, 190.0, 12.0, "t");
    doc.finish()
}

fn cmd_sinogram(a: SinogramArgs) -> radon_lens::Result<serde_json::Value> {
    let ds = load_data(&a.data.data, !a.data.no_labels)?;
    let s = sinogram(&ds.to_distribution(), a.n_thetas, a.resolution)?;
    let dir = out_dir(&a.common)?;
    let mut written = Vec::new();
    write(dir, "sinogram.csv", &s.to_csv(), &mut written)?;
    write(dir, "sinogram.svg", &sinogram_svg(&s), &mut written)?;
    Ok(json!({"written": written, "n_thetas": s.n_thetas(), "n_t": s.n_t()}))
}

fn cmd_fbp(a: FbpArgs) -> radon_lens::Result<serde_json::Value> {
    let dir = out_dir(&a.common)?;
    let mut written = Vec::new();
    let img = match (&a.image, a.phantom_size) {
        (Some(path), _) => GridImage::load_csv(path)?,
        (None, Some(n)) => {
            let img = GridImage::gaussian(
                GridGeometry::square(n, 1.0),
                a.phantom_center,
                a.phantom_sigma,
            )?;
            write(dir, "phantom.csv", &img.to_csv(), &mut written)?;
            img
        }
        (None, None) => unreachable!("clap enforces one source"),
    };
    let spec = RampFilterSpec {
        kernel: match a.kernel {
            KernelArg::BandLimited => RampKernel::BandLimited,
            KernelArg::Sampled => RampKernel::Sampled,
        },
        window: match a.window {
            WindowArg::None => FilterWindow::None,
            WindowArg::Cosine => FilterWindow::Cosine,
        },
        cutoff: a.cutoff,
        ..RampFilterSpec::default()
    };
    let n_t = a.n_t.unwrap_or_else(|| default_n_t(&img));
    let sino = forward_radon_grid(&img, a.n_thetas, n_t)?;
    let recon = fbp_reconstruct(&sino, img.geometry(), &spec)?;
    let err = relative_l1_in_disk(&recon, &img)?;
    write(dir, "reconstruction.csv", &recon.to_csv(), &mut written)?;
    let report = json!({
        "n_thetas": a.n_thetas,
        "n_t": n_t,
        "filter": spec,
        "rel_l1_disk": err,
        "input_mass": img.total_mass(),
        "reconstruction_mass": recon.total_mass(),
    });
    write(
        dir,
        "fbp_report.json",
        &serde_json::to_string_pretty(&report)?,
        &mut written,
    )?;
    Ok(json!({"written": written, "rel_l1_disk": err}))
}

fn cmd_train(a: TrainArgs) -> radon_lens::Result<serde_json::Value> {
    let ds = load_data(&a.data.data, !a.data.no_labels)?;
    let start = classifier_from_arch(&a.arch, a.common.seed, a.normalize_rows)?;
    let cfg = TrainConfig {
        lr: a.lr,
        epochs: a.epochs,
        batch: a.batch.0,
        normalize_rows: a.normalize_rows,
        seed: a.common.seed,
        ..TrainConfig::default()
    };
    let (model, trace) = fit(&start, &ds, &cfg)?;
    let dir = out_dir(&a.common)?;
    let mut written = Vec::new();
    write(dir, "model.json", &model.to_json()?, &mut written)?;
    let loss = dir.join("loss.csv");
    save_trace_csv(&trace, &loss)?;
    written.push(loss.display().to_string());
    let last = trace.last().unwrap();
    Ok(json!({"written": written, "loss": last.loss, "accuracy": last.accuracy}))
}

struct SurfacePanel {
    title: String,
    surface: GridImage,
    curves: LevelCurveSet,
}

fn contour_surface(
    g: &dyn Surface,
    args: &SurfaceArgs,
    title: String,
) -> radon_lens::Result<SurfacePanel> {
    let surface = surface_grid(g, &args.bounds, [args.resolution, args.resolution])?;
    let levels = match &args.at {
        Some(v) => v.0.clone(),
        None => default_levels(&surface, args.levels),
    };
    let curves = marching_squares(&surface, &levels);
    Ok(SurfacePanel {
        title,
        surface,
        curves,
    })
}

const PANEL_SIZE: f64 = 320.0;

/// Panels side by side (two per row), each a heatmap with level curves and
/// the optional data scatter on top.
fn panels_svg(
    panels: &[SurfacePanel],
    bounds: &Bounds,
    data: Option<&LabeledDataset>,
    extra: impl Fn(&mut Svg, &Panel, usize),
) -> String {
    let cols = panels.len().min(2);
    let rows = panels.len().div_ceil(2);
    let mut doc = Svg::new(
        20.0 + cols as f64 * (PANEL_SIZE + 20.0),
        rows as f64 * (PANEL_SIZE + 40.0) + 10.0,
    );
    for (k, sp) in panels.iter().enumerate() {
        let p = Panel {
            left: 20.0 + (k % 2) as f64 * (PANEL_SIZE + 20.0),
            top: 30.0 + (k / 2) as f64 * (PANEL_SIZE + 40.0),
            width: PANEL_SIZE,
            height: PANEL_SIZE,
            x_range: bounds.x,
            y_range: bounds.y,
        };
        doc.image(&p, &sp.surface, 80);
        if let Some(ds) = data {
            doc.scatter(&p, ds.points(), ds.labels());
        }
        for curve in &sp.curves.levels {
            for line in &curve.polylines {
                doc.polyline(&p, line, "white", 1.0);
            }
        }
        extra(&mut doc, &p, k);
        doc.frame(&p);
        doc.text(p.left, p.top - 8.0, 13.0, &sp.title);
    }
    doc.finish()
}

fn load_optional_data(path: &Option<PathBuf>) -> radon_lens::Result<Option<LabeledDataset>> {
    path.as_deref().map(|p| load_data(p, true)).transpose()
}

fn cmd_levelsets(a: LevelsetArgs) -> radon_lens::Result<serde_json::Value> {
    let model = Model::load(&a.model)?;
    let data = load_optional_data(&a.surface.data)?;
    let panel = contour_surface(model.surface(), &a.surface, "level curves".into())?;
    let dir = out_dir(&a.common)?;
    let mut written = Vec::new();
    write(
        dir,
        "levelsets.json",
        &panel.curves.to_json()?,
        &mut written,
    )?;
    write(dir, "surface.csv", &panel.surface.to_csv(), &mut written)?;
    let svg = panels_svg(
        std::slice::from_ref(&panel),
        &a.surface.bounds,
        data.as_ref(),
        |_, _, _| {},
    );
    write(dir, "levelsets.svg", &svg, &mut written)?;
    Ok(json!({"written": written, "levels": panel.curves.level_values()}))
}

fn cmd_activations(a: ActivationsArgs) -> radon_lens::Result<serde_json::Value> {
    let widths: Vec<usize> = a
        .widths
        .split('-')
        .map(|w| {
            w.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad widths `{}`", a.widths)))
        })
        .collect::<radon_lens::Result<_>>()?;
    let data = load_optional_data(&a.surface.data)?;
    let dir = out_dir(&a.common)?;
    let mut written = Vec::new();
    let mut panels = Vec::new();
    for act in [
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
        Activation::leaky_relu(radon_lens::nn::DEFAULT_LEAKY_SLOPE)?,
    ] {
        // Same seed for every activation: identical weights, different nonlinearity.
        let net = MlpModel::random(&widths, act, Activation::Sigmoid, a.common.seed, false)?;
        let panel = contour_surface(&net, &a.surface, act.name().to_string())?;
        let name = act.name().replace(['(', ')', '.'], "_");
        write(
            dir,
            &format!("surface_{name}.csv"),
            &panel.surface.to_csv(),
            &mut written,
        )?;
        write(
            dir,
            &format!("levelsets_{name}.json"),
            &panel.curves.to_json()?,
            &mut written,
        )?;
        panels.push(panel);
    }
    let svg = panels_svg(&panels, &a.surface.bounds, data.as_ref(), |_, _, _| {});
    write(dir, "activations.svg", &svg, &mut written)?;
    Ok(json!({"written": written}))
}

fn cmd_pool(a: PoolArgs) -> radon_lens::Result<serde_json::Value> {
    use rand_distr::{Distribution, StandardNormal};
    if a.members == 0 {
        return Err(Error::InvalidArgument("--members must be >= 1".into()));
    }
    let mut rng = radon_lens::dataset::seeded_rng(a.common.seed);
    let members: Vec<MlpModel> = (0..a.members)
        .map(|_| {
            let mut theta: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            theta.iter_mut().for_each(|v| *v /= n);
            MlpModel::perceptron(theta, Activation::Identity)
        })
        .collect::<radon_lens::Result<_>>()?;
    let pool = MaxPool::new(members)?;
    let panel = contour_surface(&pool, &a.surface, "max-pooled perceptrons".into())?;
    let argmax = GridImage::from_fn(panel.surface.geometry(), |x, y| {
        pool.argmax(&[x, y]).map_or(f64::NAN, |k| k as f64)
    })?;
    let data = load_optional_data(&a.surface.data)?;
    let dir = out_dir(&a.common)?;
    let mut written = Vec::new();
    write(
        dir,
        "pool_surface.csv",
        &panel.surface.to_csv(),
        &mut written,
    )?;
    write(dir, "pool_argmax.csv", &argmax.to_csv(), &mut written)?;
    write(
        dir,
        "pool_levelsets.json",
        &panel.curves.to_json()?,
        &mut written,
    )?;
    let members_json = serde_json::to_string_pretty(
        &pool
            .members()
            .iter()
            .map(|m| m.layers()[0].row(0).to_vec())
            .collect::<Vec<_>>(),
    )?;
    write(dir, "pool_members.json", &members_json, &mut written)?;
    // Member switch boundaries, from the argmax grid.
    let switches = marching_squares(
        &argmax,
        &(0..a.members.saturating_sub(1))
            .map(|k| k as f64 + 0.5)
            .collect::<Vec<_>>(),
    );
    let svg = panels_svg(
        std::slice::from_ref(&panel),
        &a.surface.bounds,
        data.as_ref(),
        |doc, p, _| {
            for curve in &switches.levels {
                for line in &curve.polylines {
                    doc.polyline(p, line, "#ff7f0e", 2.0);
                }
            }
        },
    );
    write(dir, "pool.svg", &svg, &mut written)?;
    Ok(json!({"written": written}))
}

fn cmd_adversarial(a: AdversarialArgs) -> radon_lens::Result<serde_json::Value> {
    let model = Model::load(&a.model)?;
    let g = model.surface();
    let ds = load_data(&a.data, true)?;
    let x0 = ds.points().get(a.start_idx).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "--start-idx {} out of range for {} points",
            a.start_idx,
            ds.len()
        ))
    })?;
    let v0 = g.value(x0)?;
    let cfg = PerturbConfig {
        gamma: a.gamma,
        max_steps: a.max_steps,
        direction: match a.direction {
            DirectionArg::Auto => Direction::toward_boundary(v0, 0.5),
            DirectionArg::Ascend => Direction::Ascend,
            DirectionArg::Descend => Direction::Descend,
        },
        max_displacement: a.max_displacement,
        ..PerturbConfig::default()
    };
    let traj = perturb(g, x0, &cfg)?;
    let dir = out_dir(&a.common)?;
    let mut written = Vec::new();
    write(dir, "trajectory.csv", &traj.to_csv(), &mut written)?;
    let summary = json!({
        "start_idx": a.start_idx,
        "start": x0,
        "end": traj.end(),
        "steps": traj.steps(),
        "displacement": traj.displacement(),
        "outcome": traj.outcome,
        "flipped": traj.flipped,
    });
    write(
        dir,
        "adversarial.json",
        &serde_json::to_string_pretty(&summary)?,
        &mut written,
    )?;
    let surface_args = SurfaceArgs {
        bounds: a.bounds,
        resolution: a.resolution,
        levels: 1,
        at: Some(List(vec![0.5])),
        data: None,
    };
    let panel = contour_surface(g, &surface_args, "adversarial walk".into())?;
    write(dir, "surface.csv", &panel.surface.to_csv(), &mut written)?;
    write(
        dir,
        "levelsets.json",
        &panel.curves.to_json()?,
        &mut written,
    )?;
    let path: Vec<[f64; 2]> = traj.points.iter().map(|p| [p[0], p[1]]).collect();
    let svg = panels_svg(
        std::slice::from_ref(&panel),
        &a.bounds,
        Some(&ds),
        |doc, p, _| {
            doc.polyline(p, &path, "#ff7f0e", 2.0);
            doc.circle(p, path[0][0], path[0][1], 4.0, "#ff7f0e");
            let end = path[path.len() - 1];
            doc.circle(p, end[0], end[1], 4.0, "black");
        },
    );
    write(dir, "adversarial.svg", &svg, &mut written)?;
    Ok(summary_with(summary, written))
}

fn summary_with(mut summary: serde_json::Value, written: Written) -> serde_json::Value {
    summary["written"] = json!(written);
    summary
}
