//! The central-angle sweep: for each schedule level, fit a baseline on the
//! training views, estimate the held-out views, synthesize holograms from
//! true and estimated depth and score everything.

mod knee;
mod report;

pub use knee::{detect_knee, KneeResult, DEFAULT_KNEE_THRESHOLD};
pub use report::{report, write_report, SweepReport};

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depthest::{fit_depths, Baseline, DepthEstimator};
use crate::error::{Error, Result};
use crate::holo::upscale_nearest;
use crate::holo::{LeeHologram, OpticsConfig, Synthesizer};
use crate::metrics;
use crate::recon::Reconstructor;
use crate::scenegen::{Resolution, ViewSource};
use crate::viewgeom::{schedule, MAX_LEVEL, MIN_LEVEL};

/// Hologram resolution of the `fourk` path.
pub const FOURK_RESOLUTION: Resolution = Resolution {
    width: 3840,
    height: 2160,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub n_min: u32,
    pub n_max: u32,
    pub baseline: Baseline,
    /// Synthesize at 3840x2160 from upscaled frames with the 4K pixel pitch.
    pub fourk: bool,
    pub knee_threshold: f64,
    #[serde(flatten)]
    pub optics: OpticsConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_min: MIN_LEVEL,
            n_max: MAX_LEVEL,
            baseline: Baseline::Blend,
            fourk: false,
            knee_threshold: DEFAULT_KNEE_THRESHOLD,
            optics: OpticsConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min > self.n_max || self.n_min < MIN_LEVEL || self.n_max > MAX_LEVEL {
            return Err(Error::config(format!(
                "level range {}..={} must lie within {MIN_LEVEL}..={MAX_LEVEL}",
                self.n_min, self.n_max
            )));
        }
        if !(self.knee_threshold > 0.0 && self.knee_threshold.is_finite()) {
            return Err(Error::config("knee threshold must be positive"));
        }
        self.optics.validate()
    }

    /// Views the dataset must hold so every test midpoint is a real view.
    pub fn required_views(&self) -> usize {
        1 << (self.n_max + 1)
    }
}

/// One CSV row. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: u32,
    pub central_angle_deg: f64,
    pub train_views: usize,
    pub test_views: usize,
    pub depth_mse: f64,
    pub depth_acc: f64,
    pub cgh_acc: f64,
    pub t_estimate_s: f64,
    pub t_synth_s: f64,
    pub t_recon_s: f64,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "n",
    "central_angle_deg",
    "train_views",
    "test_views",
    "depth_mse",
    "depth_acc",
    "cgh_acc",
    "t_estimate_s",
    "t_synth_s",
    "t_recon_s",
];

struct ViewOutcome {
    mse: f64,
    acc: f64,
    cgh_acc: f64,
    t_estimate: Duration,
    t_synth: Duration,
    t_recon: Duration,
}

pub fn run_sweep(source: &dyn ViewSource, config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    run_sweep_with_progress(source, config, |_| {})
}

/// Like [`run_sweep`], calling `progress` after each level completes.
pub fn run_sweep_with_progress(
    source: &dyn ViewSource,
    config: &SweepConfig,
    mut progress: impl FnMut(&SweepRecord),
) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    if source.view_count() == 0 {
        return Err(Error::data("dataset holds no views"));
    }
    if source.view_count() < config.required_views() {
        return Err(Error::config(format!(
            "level {} needs a dataset of at least {} views, found {}",
            config.n_max,
            config.required_views(),
            source.view_count()
        )));
    }
    let native = source.resolution();
    let (optics, synth_res) = if config.fourk {
        let optics = OpticsConfig {
            pixel_pitch_m: OpticsConfig::fourk_preset().pixel_pitch_m,
            ..config.optics.clone()
        };
        (optics, FOURK_RESOLUTION)
    } else {
        (config.optics.clone(), native)
    };
    let synth = Synthesizer::new(&optics, synth_res.width as usize, synth_res.height as usize)?;
    let focus_m = 0.5 * (optics.z_near_m + optics.z_far_m);

    let mut records = Vec::new();
    for n in config.n_min..=config.n_max {
        let sched = schedule(n)?;
        let train = sched
            .train_angles_deg
            .par_iter()
            .map(|&a| Ok((a, source.load_depth(source.index_of(a)?)?)))
            .collect::<Result<Vec<_>>>()?;
        let fit_start = Instant::now();
        let state = fit_depths(config.baseline, train, n)?;
        let t_fit = fit_start.elapsed();
        if state.dimensions() != (native.width, native.height) {
            return Err(Error::data(format!(
                "training depth maps are {:?}, dataset declares {}x{}",
                state.dimensions(),
                native.width,
                native.height
            )));
        }

        let outcomes = sched
            .test_angles_deg
            .par_iter()
            .map(|&angle| {
                let frame = source.load_frame(source.index_of(angle)?)?;
                frame.check_consistent()?;
                let t0 = Instant::now();
                let est = state.estimate(&frame.rgb, angle)?;
                let t_estimate = t0.elapsed();
                let mse = metrics::mse(&est, &frame.depth)?.normalized;
                let acc = metrics::depth_acc(&est, &frame.depth)?;

                let t1 = Instant::now();
                let (truth_cgh, est_cgh) = if config.fourk {
                    let truth = upscale_nearest(&frame, synth_res);
                    let mut est_frame = frame.clone();
                    est_frame.depth = est;
                    let est_frame = upscale_nearest(&est_frame, synth_res);
                    (synth.synthesize(&truth)?, synth.synthesize(&est_frame)?)
                } else {
                    (synth.synthesize(&frame)?, synth.synthesize_images(&frame.rgb, &est)?)
                };
                let t_synth = t1.elapsed();
                let cgh_acc = metrics::cgh_acc(&LeeHologram::encode(&est_cgh), &LeeHologram::encode(&truth_cgh))?;

                let t2 = Instant::now();
                Reconstructor::from_field(est_cgh).reconstruct(focus_m)?;
                let t_recon = t2.elapsed();
                Ok(ViewOutcome {
                    mse,
                    acc,
                    cgh_acc,
                    t_estimate,
                    t_synth,
                    t_recon,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let count = outcomes.len() as f64;
        let mean = |f: fn(&ViewOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / count;
        let total = |f: fn(&ViewOutcome) -> Duration| outcomes.iter().map(f).sum::<Duration>().as_secs_f64();
        let record = SweepRecord {
            n,
            central_angle_deg: sched.level.angle_deg,
            train_views: sched.train_angles_deg.len(),
            test_views: sched.test_angles_deg.len(),
            depth_mse: mean(|o| o.mse),
            depth_acc: mean(|o| o.acc),
            cgh_acc: mean(|o| o.cgh_acc),
            t_estimate_s: t_fit.as_secs_f64() + total(|o| o.t_estimate),
            t_synth_s: total(|o| o.t_synth),
            t_recon_s: total(|o| o.t_recon),
        };
        progress(&record);
        records.push(record);
    }
    Ok(records)
}

/// Knee of the MSE series of a finished sweep; `None` for fewer than two records.
pub fn sweep_knee(records: &[SweepRecord], threshold: f64) -> Result<Option<KneeResult>> {
    if records.len() < 2 {
        return Ok(None);
    }
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.central_angle_deg, r.depth_mse)).collect();
    detect_knee(&series, threshold).map(Some)
}

pub fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::data(format!(
            "{} does not have the sweep columns",
            path.display()
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<Vec<SweepRecord>, _>>()?)
}
