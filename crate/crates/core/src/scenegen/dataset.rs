//! On-disk view sets: `<root>/<shape>/view_<k>/{rgb.png, depth.pgm, meta.json}`
//! plus `<root>/<shape>/manifest.json`.

use std::path::{Path, PathBuf};

use image::GrayImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{render_view, DepthMapping, Frame, Resolution, SceneSpec, ShapeKind};
use crate::error::{Error, Result};
use crate::imageio;
use crate::viewgeom::camera_pose;

pub const MAX_VIEWS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMeta {
    pub angle_deg: f64,
    pub radius_m: f64,
    pub resolution: Resolution,
    pub depth_mapping: DepthMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub index: usize,
    pub angle_deg: f64,
    /// Directory of the view, relative to the manifest.
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub shape: ShapeKind,
    pub view_count: usize,
    pub radius_m: f64,
    pub resolution: Resolution,
    pub depth_mapping: DepthMapping,
    pub scene: SceneSpec,
    pub views: Vec<ViewEntry>,
}

/// Random access to the frames of an evenly spaced view set.
pub trait ViewSource: Sync {
    fn view_count(&self) -> usize;
    fn resolution(&self) -> Resolution;
    fn load_frame(&self, index: usize) -> Result<Frame>;

    fn load_depth(&self, index: usize) -> Result<GrayImage> {
        self.load_frame(index).map(|f| f.depth)
    }

    fn angle_deg(&self, index: usize) -> f64 {
        index as f64 * 360.0 / self.view_count() as f64
    }

    /// Index of the view at `angle_deg`, which must lie on the view grid.
    fn index_of(&self, angle_deg: f64) -> Result<usize> {
        let pos = angle_deg.rem_euclid(360.0) * self.view_count() as f64 / 360.0;
        if pos.fract() != 0.0 {
            return Err(Error::config(format!(
                "angle {angle_deg}° is not on the {}-view grid",
                self.view_count()
            )));
        }
        Ok(pos as usize % self.view_count())
    }
}

fn check_view_count(view_count: usize) -> Result<()> {
    if view_count == 0 || !view_count.is_power_of_two() || view_count > MAX_VIEWS {
        return Err(Error::config(format!(
            "view count must be a power of two in 1..={MAX_VIEWS}, got {view_count}"
        )));
    }
    Ok(())
}

fn view_dir_name(index: usize) -> String {
    format!("view_{index}")
}

/// Frames held in memory, indexed by view.
#[derive(Debug, Clone)]
pub struct MemoryDataset {
    pub frames: Vec<Frame>,
}

impl MemoryDataset {
    /// Renders `view_count` evenly spaced views of `spec`.
    pub fn render(
        spec: &SceneSpec,
        view_count: usize,
        radius_m: f64,
        resolution: Resolution,
        mapping: &DepthMapping,
    ) -> Result<Self> {
        check_view_count(view_count)?;
        spec.validate_fit(radius_m, mapping)?;
        let scene = spec.scene()?;
        let step = 360.0 / view_count as f64;
        let frames = (0..view_count)
            .into_par_iter()
            .map(|k| {
                let pose = camera_pose(k as f64 * step, radius_m)?;
                render_view(&scene, &pose, resolution, mapping)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MemoryDataset { frames })
    }
}

impl ViewSource for MemoryDataset {
    fn view_count(&self) -> usize {
        self.frames.len()
    }

    fn resolution(&self) -> Resolution {
        self.frames.first().map(Frame::resolution).unwrap_or_default()
    }

    fn load_frame(&self, index: usize) -> Result<Frame> {
        self.frames
            .get(index)
            .cloned()
            .ok_or_else(|| Error::data(format!("view {index} out of range")))
    }

    fn load_depth(&self, index: usize) -> Result<GrayImage> {
        self.frames
            .get(index)
            .map(|f| f.depth.clone())
            .ok_or_else(|| Error::data(format!("view {index} out of range")))
    }
}

/// Renders and writes a dataset under `<out_root>/<shape>/`.
pub fn generate_dataset(
    spec: &SceneSpec,
    view_count: usize,
    radius_m: f64,
    resolution: Resolution,
    mapping: &DepthMapping,
    out_root: &Path,
) -> Result<Manifest> {
    check_view_count(view_count)?;
    spec.validate_fit(radius_m, mapping)?;
    let scene = spec.scene()?;
    let shape_dir = out_root.join(spec.shape.kind().name());
    imageio::create_dir_all(&shape_dir)?;
    let step = 360.0 / view_count as f64;

    let views = (0..view_count)
        .into_par_iter()
        .map(|k| {
            let angle_deg = k as f64 * step;
            let pose = camera_pose(angle_deg, radius_m)?;
            let frame = render_view(&scene, &pose, resolution, mapping)?;
            let dir = view_dir_name(k);
            let view_path = shape_dir.join(&dir);
            imageio::create_dir_all(&view_path)?;
            imageio::write_png_rgb(&view_path.join("rgb.png"), &frame.rgb)?;
            imageio::write_pgm(&view_path.join("depth.pgm"), &frame.depth)?;
            imageio::write_json(
                &view_path.join("meta.json"),
                &ViewMeta {
                    angle_deg,
                    radius_m,
                    resolution,
                    depth_mapping: *mapping,
                },
            )?;
            Ok(ViewEntry {
                index: k,
                angle_deg,
                dir,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        shape: spec.shape.kind(),
        view_count,
        radius_m,
        resolution,
        depth_mapping: *mapping,
        scene: spec.clone(),
        views,
    };
    imageio::write_json(&shape_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn load_manifest(root: &Path, shape: ShapeKind) -> Result<Manifest> {
    let path = root.join(shape.name()).join("manifest.json");
    if !path.is_file() {
        return Err(Error::io(
            &path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset manifest not found"),
        ));
    }
    let manifest: Manifest = imageio::read_json(&path)?;
    check_view_count(manifest.view_count).map_err(|e| Error::data(e.to_string()))?;
    if manifest.views.len() != manifest.view_count {
        return Err(Error::data(format!(
            "manifest lists {} views but declares {}",
            manifest.views.len(),
            manifest.view_count
        )));
    }
    Ok(manifest)
}

/// Dataset read lazily from disk.
#[derive(Debug, Clone)]
pub struct DiskDataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl DiskDataset {
    pub fn open(root: &Path, shape: ShapeKind) -> Result<Self> {
        let manifest = load_manifest(root, shape)?;
        Ok(DiskDataset {
            root: root.join(shape.name()),
            manifest,
        })
    }

    pub fn view_dir(&self, index: usize) -> Result<PathBuf> {
        let entry = self
            .manifest
            .views
            .get(index)
            .ok_or_else(|| Error::data(format!("view {index} out of range")))?;
        Ok(self.root.join(&entry.dir))
    }

    fn check_dims(&self, w: u32, h: u32, what: &str, index: usize) -> Result<()> {
        let r = self.manifest.resolution;
        if (w, h) != (r.width, r.height) {
            return Err(Error::data(format!(
                "view {index} {what} is {w}x{h}, manifest says {}x{}",
                r.width, r.height
            )));
        }
        Ok(())
    }
}

impl ViewSource for DiskDataset {
    fn view_count(&self) -> usize {
        self.manifest.view_count
    }

    fn resolution(&self) -> Resolution {
        self.manifest.resolution
    }

    fn angle_deg(&self, index: usize) -> f64 {
        self.manifest.views[index].angle_deg
    }

    fn load_frame(&self, index: usize) -> Result<Frame> {
        let dir = self.view_dir(index)?;
        let rgb = imageio::read_rgb(&dir.join("rgb.png"))?;
        let depth = self.load_depth(index)?;
        self.check_dims(rgb.width(), rgb.height(), "rgb", index)?;
        let pose = camera_pose(self.angle_deg(index), self.manifest.radius_m)?;
        Ok(Frame { rgb, depth, pose })
    }

    fn load_depth(&self, index: usize) -> Result<GrayImage> {
        let depth = imageio::read_gray(&self.view_dir(index)?.join("depth.pgm"))?;
        self.check_dims(depth.width(), depth.height(), "depth", index)?;
        Ok(depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_power_of_two_rejected() {
        let spec = SceneSpec::pair(ShapeKind::Sphere);
        let dir = tempfile::tempdir().unwrap();
        for n in [0, 3, 12, 2048] {
            let err = generate_dataset(
                &spec,
                n,
                0.2,
                Resolution::new(8, 8),
                &DepthMapping::default(),
                dir.path(),
            );
            assert!(matches!(err, Err(Error::Config(_))), "{n}");
        }
    }

    #[test]
    fn eight_views_round_trip_through_disk() {
        let spec = SceneSpec::pair(ShapeKind::Cube);
        let dir = tempfile::tempdir().unwrap();
        let res = Resolution::new(24, 16);
        let manifest = generate_dataset(&spec, 8, 0.2, res, &DepthMapping::default(), dir.path()).unwrap();
        let angles: Vec<f64> = manifest.views.iter().map(|v| v.angle_deg).collect();
        assert_eq!(angles, (0..8).map(|k| 45.0 * k as f64).collect::<Vec<_>>());

        let disk = DiskDataset::open(dir.path(), ShapeKind::Cube).unwrap();
        let mem = MemoryDataset::render(&spec, 8, 0.2, res, &DepthMapping::default()).unwrap();
        for k in 0..8 {
            assert_eq!(disk.load_frame(k).unwrap(), mem.load_frame(k).unwrap());
        }
        let meta: ViewMeta = imageio::read_json(&dir.path().join("cube/view_3/meta.json")).unwrap();
        assert_eq!(meta.angle_deg, 135.0);
        assert_eq!(disk.index_of(270.0).unwrap(), 6);
        assert!(disk.index_of(10.0).is_err());
    }

    #[test]
    fn full_capture_step() {
        assert_eq!(360.0 / MAX_VIEWS as f64, 0.3515625);
    }

    #[test]
    fn missing_dataset_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = DiskDataset::open(dir.path(), ShapeKind::Torus).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
