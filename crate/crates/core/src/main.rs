use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use holosweep::depthest::{fit_depths, write_estimate, Baseline, DepthEstimator};
use holosweep::holo::{read_field, write_field, ColorField, LeeHologram, OpticsConfig, PhaseMode, Synthesizer};
use holosweep::recon::{focus_scan, write_focus_csv, Cgh, Reconstructor, Region};
use holosweep::scenegen::{generate_dataset, DepthMapping, DiskDataset, Resolution, SceneSpec, ShapeKind, ViewSource};
use holosweep::sweep::{self, SweepConfig};
use holosweep::viewgeom::{schedule, DEFAULT_RADIUS_M};
use holosweep::{imageio, metrics, Error, Result};

#[derive(Parser)]
#[command(
    name = "holosweep",
    version,
    about = "Central-angle sweep for depth-map-driven hologram synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a turntable RGB-D dataset.
    Gen(GenArgs),
    /// Estimate the held-out depth maps of one schedule level.
    Estimate(EstimateArgs),
    /// Synthesize the hologram of one view.
    Synth(SynthArgs),
    /// Reconstruct a hologram at one focus distance or over a range.
    Recon(ReconArgs),
    /// Compare two depth maps and optionally two Lee holograms.
    Metrics(MetricsArgs),
    /// Run the full central-angle sweep.
    Sweep(SweepArgs),
    /// Detect the knee of a sweep CSV.
    Knee(KneeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SceneArg {
    Torus,
    Cube,
    Cone,
    Sphere,
}

impl From<SceneArg> for ShapeKind {
    fn from(s: SceneArg) -> Self {
        match s {
            SceneArg::Torus => ShapeKind::Torus,
            SceneArg::Cube => ShapeKind::Cube,
            SceneArg::Cone => ShapeKind::Cone,
            SceneArg::Sphere => ShapeKind::Sphere,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Nearest,
    Blend,
}

impl From<BaselineArg> for Baseline {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Nearest => Baseline::Nearest,
            BaselineArg::Blend => Baseline::Blend,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Zero,
    Random,
}

#[derive(Args)]
struct OpticsArgs {
    /// JSON file with an optics configuration.
    #[arg(long)]
    optics: Option<PathBuf>,
    /// Initial phase of the source pixels.
    #[arg(long, value_enum)]
    phase: Option<PhaseArg>,
    /// Seed of the random phase map.
    #[arg(long)]
    seed: Option<u64>,
}

impl OpticsArgs {
    fn apply(&self, mut optics: OpticsConfig) -> Result<OpticsConfig> {
        if let Some(path) = &self.optics {
            optics = imageio::read_json(path)?;
        }
        let seed = self.seed.or(match optics.phase_mode {
            PhaseMode::SeededRandom { seed } => Some(seed),
            PhaseMode::Zero => None,
        });
        optics.phase_mode = match (self.phase, optics.phase_mode) {
            (Some(PhaseArg::Zero), _) => PhaseMode::Zero,
            (Some(PhaseArg::Random), _) | (None, PhaseMode::SeededRandom { .. }) => PhaseMode::SeededRandom {
                seed: seed.unwrap_or(42),
            },
            (None, PhaseMode::Zero) => PhaseMode::Zero,
        };
        optics.validate()?;
        Ok(optics)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    scene: SceneArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1024)]
    views: usize,
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 360)]
    height: u32,
    #[arg(long, default_value_t = DEFAULT_RADIUS_M)]
    radius: f64,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    scene: SceneArg,
    /// Schedule level.
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum, default_value = "blend")]
    baseline: BaselineArg,
    /// Output root; defaults to writing inside each test view's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    scene: SceneArg,
    /// View index.
    #[arg(long)]
    view: usize,
    /// Depth map to use instead of the view's own.
    #[arg(long)]
    depth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    optics: OpticsArgs,
}

#[derive(Args)]
struct ReconArgs {
    /// Directory holding either `field_{r,g,b}.hswf` or Lee plane files.
    #[arg(long)]
    input: PathBuf,
    /// Focus distance in meters.
    #[arg(long, conflicts_with = "scan")]
    focus: Option<f64>,
    /// Focus scan as `start,end,count` in meters.
    #[arg(long, value_delimiter = ',')]
    scan: Option<Vec<f64>>,
    /// Sharpness region `x,y,width,height`; the first two are reported.
    #[arg(long = "region", value_delimiter = ',')]
    regions: Vec<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Lee hologram directory synthesized from the estimate.
    #[arg(long, requires = "cgh_truth")]
    cgh_estimate: Option<PathBuf>,
    #[arg(long, requires = "cgh_estimate")]
    cgh_truth: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    scene: SceneArg,
    #[arg(long)]
    out: PathBuf,
    /// JSON file with optics and sweep parameters; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_min: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long, value_enum)]
    baseline: Option<BaselineArg>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Synthesize at 3840x2160.
    #[arg(long)]
    fourk: bool,
    #[command(flatten)]
    optics: OpticsArgs,
}

#[derive(Args)]
struct KneeArgs {
    /// Sweep CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = sweep::DEFAULT_KNEE_THRESHOLD)]
    threshold: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Estimate(a) => estimate(a),
        Command::Synth(a) => synth(a),
        Command::Recon(a) => recon(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Knee(a) => knee(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let kind = ShapeKind::from(a.scene);
    let manifest = generate_dataset(
        &SceneSpec::pair(kind),
        a.views,
        a.radius,
        Resolution::new(a.width, a.height),
        &DepthMapping::default(),
        &a.out,
    )?;
    println!(
        "wrote {} views of {kind} to {}",
        manifest.view_count,
        a.out.join(kind.name()).display()
    );
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let data = DiskDataset::open(&a.data, a.scene.into())?;
    let sched = schedule(a.n)?;
    if data.view_count() < 2 * sched.train_angles_deg.len() {
        return Err(Error::Config(format!(
            "level {} needs at least {} views, dataset has {}",
            a.n,
            2 * sched.train_angles_deg.len(),
            data.view_count()
        )));
    }
    let train = sched
        .train_angles_deg
        .iter()
        .map(|&angle| Ok((angle, data.load_depth(data.index_of(angle)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let state = fit_depths(a.baseline.into(), train, a.n)?;
    for &angle in &sched.test_angles_deg {
        let index = data.index_of(angle)?;
        let frame = data.load_frame(index)?;
        let est = state.estimate(&frame.rgb, angle)?;
        let dir = match &a.out {
            Some(root) => root.join(format!("view_{index}")),
            None => data.view_dir(index)?,
        };
        write_estimate(&dir, &est, &state)?;
        let mse = metrics::mse(&est, &frame.depth)?;
        println!(
            "view {index} at {angle}°: mse {:.6e} acc {:.6}",
            mse.normalized,
            metrics::depth_acc(&est, &frame.depth)?
        );
    }
    Ok(())
}

const CHANNELS: [&str; 3] = ["r", "g", "b"];

fn synth(a: SynthArgs) -> Result<()> {
    let data = DiskDataset::open(&a.data, a.scene.into())?;
    let optics = a.optics.apply(OpticsConfig::default())?;
    let mut frame = data.load_frame(a.view)?;
    if let Some(path) = &a.depth {
        frame.depth = imageio::read_gray(path)?;
    }
    let res = frame.resolution();
    let field = Synthesizer::new(&optics, res.width as usize, res.height as usize)?.synthesize(&frame)?;
    imageio::create_dir_all(&a.out)?;
    for (c, ch) in field.channels.iter().enumerate() {
        write_field(&a.out.join(format!("field_{}.hswf", CHANNELS[c])), ch)?;
    }
    imageio::write_json(&a.out.join("optics.json"), &optics)?;
    LeeHologram::encode(&field).write(&a.out)?;
    println!("wrote hologram of view {} to {}", a.view, a.out.display());
    Ok(())
}

fn load_cgh(dir: &Path) -> Result<Cgh> {
    if dir.join("field_r.hswf").is_file() {
        let optics: OpticsConfig = imageio::read_json(&dir.join("optics.json"))?;
        let channels = CHANNELS
            .iter()
            .map(|c| read_field(&dir.join(format!("field_{c}.hswf"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Cgh::Complex(ColorField { channels, optics }))
    } else {
        Ok(Cgh::Lee(LeeHologram::read(dir)?))
    }
}

fn recon(a: ReconArgs) -> Result<()> {
    let cgh = load_cgh(&a.input)?;
    match (a.focus, a.scan) {
        (Some(z), _) => {
            let r = Reconstructor::new(&cgh)?.reconstruct(z)?;
            if let Some(dir) = a.out.parent() {
                imageio::create_dir_all(dir)?;
            }
            r.write_png(&a.out)?;
            println!("wrote reconstruction at {z} m to {}", a.out.display());
        }
        (None, Some(scan)) => {
            if scan.len() != 3 {
                return Err(Error::Config("--scan takes start,end,count".into()));
            }
            if !a.regions.len().is_multiple_of(4) {
                return Err(Error::Config("--region takes x,y,width,height".into()));
            }
            let (start, end, count) = (scan[0], scan[1], scan[2]);
            if !(count >= 1.0 && count.fract() == 0.0) {
                return Err(Error::Config("scan count must be a positive integer".into()));
            }
            let count = count as usize;
            let distances: Vec<f64> = (0..count)
                .map(|i| {
                    if count == 1 {
                        start
                    } else {
                        start + (end - start) * i as f64 / (count - 1) as f64
                    }
                })
                .collect();
            let (w, h) = match &cgh {
                Cgh::Complex(f) => (f.width(), f.height()),
                Cgh::Lee(l) => (l.width(), l.height()),
            };
            let regions: Vec<Region> = if a.regions.is_empty() {
                vec![Region::full(w, h)]
            } else {
                a.regions
                    .chunks(4)
                    .map(|c| Region {
                        x: c[0],
                        y: c[1],
                        width: c[2],
                        height: c[3],
                    })
                    .collect()
            };
            let samples = focus_scan(&cgh, &distances, &regions)?;
            if let Some(dir) = a.out.parent() {
                imageio::create_dir_all(dir)?;
            }
            write_focus_csv(&a.out, &samples)?;
            let best = samples
                .iter()
                .max_by(|x, y| x.peak_amplitude.total_cmp(&y.peak_amplitude))
                .expect("scan is non-empty");
            println!(
                "peak amplitude at {} m; scan written to {}",
                best.distance_m,
                a.out.display()
            );
        }
        (None, None) => return Err(Error::Config("give either --focus or --scan".into())),
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricsOutput {
    depth_mse: f64,
    depth_mse_bytes: f64,
    depth_acc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cgh_acc: Option<f64>,
}

fn metrics_cmd(a: MetricsArgs) -> Result<()> {
    let est = imageio::read_gray(&a.estimate)?;
    let truth = imageio::read_gray(&a.truth)?;
    let mse = metrics::mse(&est, &truth)?;
    let cgh_acc = match (&a.cgh_estimate, &a.cgh_truth) {
        (Some(e), Some(t)) => Some(metrics::cgh_acc(&LeeHologram::read(e)?, &LeeHologram::read(t)?)?),
        _ => None,
    };
    print_json(&MetricsOutput {
        depth_mse: mse.normalized,
        depth_mse_bytes: mse.byte_scale,
        depth_acc: metrics::depth_acc(&est, &truth)?,
        cgh_acc,
    })
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let mut config: SweepConfig = match &a.config {
        Some(path) => imageio::read_json(path)?,
        None => SweepConfig::default(),
    };
    config.n_min = a.n_min.unwrap_or(config.n_min);
    config.n_max = a.n_max.unwrap_or(config.n_max);
    if let Some(b) = a.baseline {
        config.baseline = b.into();
    }
    config.knee_threshold = a.threshold.unwrap_or(config.knee_threshold);
    config.fourk |= a.fourk;
    config.optics = a.optics.apply(config.optics)?;
    config.validate()?;

    let data = DiskDataset::open(&a.data, a.scene.into())?;
    let records = sweep::run_sweep_with_progress(&data, &config, |r| {
        eprintln!(
            "n={} angle={}° mse={:.6e} depth_acc={:.4} cgh_acc={:.4}",
            r.n, r.central_angle_deg, r.depth_mse, r.depth_acc, r.cgh_acc
        );
    })?;
    let knee = sweep::sweep_knee(&records, config.knee_threshold)?;
    let rep = sweep::report(&records, knee.as_ref())?;
    imageio::create_dir_all(&a.out)?;
    sweep::write_csv(&a.out.join("sweep.csv"), &records)?;
    sweep::write_report(&a.out, &rep)?;
    if let Some(k) = &knee {
        imageio::write_json(&a.out.join("knee.json"), k)?;
    }
    print!("{}", rep.summary);
    Ok(())
}

fn knee(a: KneeArgs) -> Result<()> {
    let records = sweep::read_csv(&a.input)?;
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.central_angle_deg, r.depth_mse)).collect();
    print_json(&sweep::detect_knee(&series, a.threshold)?)
}
