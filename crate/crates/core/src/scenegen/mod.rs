//! Synthetic RGB + 8-bit depth capture of two-object scenes from poses on
//! the circular track, using a primary-ray raycaster.

mod dataset;
mod primitives;

pub use dataset::{
    generate_dataset, load_manifest, DiskDataset, Manifest, MemoryDataset, ViewEntry, ViewMeta, ViewSource,
};
pub use primitives::{Shape, ShapeKind};

use image::{GrayImage, Luma, Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recon::Region;
use crate::viewgeom::{sin_cos_deg, CameraPose, Vec3};
use primitives::dot;

pub type Color = [u8; 3];

/// Linear map from planar camera distance to depth bytes: `near_m` → 255,
/// `far_m` → 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMapping {
    pub near_m: f64,
    pub far_m: f64,
}

impl Default for DepthMapping {
    fn default() -> Self {
        DepthMapping {
            near_m: 0.11,
            far_m: 0.287,
        }
    }
}

impl DepthMapping {
    pub fn validate(&self) -> Result<()> {
        if self.near_m > 0.0 && self.near_m < self.far_m && self.far_m.is_finite() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "depth mapping needs 0 < near < far, got near={} far={}",
                self.near_m, self.far_m
            )))
        }
    }

    /// Distance represented by a depth byte; inverse of [`depth_quantize`] at byte centers.
    pub fn distance_of(&self, byte: u8) -> f64 {
        self.far_m - byte as f64 / 255.0 * (self.far_m - self.near_m)
    }
}

pub fn depth_quantize(distance_m: f64, mapping: &DepthMapping) -> u8 {
    let frac = ((mapping.far_m - distance_m) / (mapping.far_m - mapping.near_m)).clamp(0.0, 1.0);
    // The small bias keeps exact half-way distances from rounding down on
    // representation error (e.g. the slab midpoint lands at 127.49999...).
    (255.0 * frac + 0.5 + 1e-9).floor().min(255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            width: 640,
            height: 360,
        }
    }
}

impl Resolution {
    pub fn new(width: u32, height: u32) -> Self {
        Resolution { width, height }
    }

    pub fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub rgb: RgbImage,
    pub depth: GrayImage,
    pub pose: CameraPose,
}

impl Frame {
    pub fn resolution(&self) -> Resolution {
        Resolution::new(self.rgb.width(), self.rgb.height())
    }

    pub fn check_consistent(&self) -> Result<()> {
        if self.rgb.dimensions() != self.depth.dimensions() {
            return Err(Error::data(format!(
                "rgb {:?} and depth {:?} resolutions differ",
                self.rgb.dimensions(),
                self.depth.dimensions()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: Shape,
    pub center: Vec3,
    pub color: Color,
}

/// Placed geometry ready for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub background: Color,
}

impl Scene {
    pub fn empty(background: Color) -> Self {
        Scene {
            objects: Vec::new(),
            background,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.shape.is_degenerate() {
                return Err(Error::config(format!(
                    "object {i} has a zero or invalid size: {:?}",
                    obj.shape
                )));
            }
        }
        Ok(())
    }
}

/// Two identical primitives separated along a horizontal layout axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub shape: Shape,
    pub object_separation_m: f64,
    /// Direction of the line joining the two object centers, in degrees on
    /// the track plane. The first object sits on the positive side.
    pub layout_axis_deg: f64,
    pub colors: [Color; 2],
    pub background: Color,
}

/// Minimum clearance between any object and the depth-slab boundaries.
pub const SLAB_MARGIN_M: f64 = 0.02;

impl SceneSpec {
    pub fn pair(kind: ShapeKind) -> Self {
        SceneSpec {
            shape: Shape::default_for(kind),
            object_separation_m: 0.083,
            layout_axis_deg: 45.0,
            colors: [[220, 90, 60], [70, 150, 230]],
            background: [0, 0, 0],
        }
    }

    pub fn scene(&self) -> Result<Scene> {
        if !(self.object_separation_m >= 0.0) {
            return Err(Error::config("object separation must be non-negative"));
        }
        let (s, c) = sin_cos_deg(self.layout_axis_deg);
        let h = self.object_separation_m / 2.0;
        let scene = Scene {
            objects: vec![
                SceneObject {
                    shape: self.shape,
                    center: [h * c, h * s, 0.0],
                    color: self.colors[0],
                },
                SceneObject {
                    shape: self.shape,
                    center: [-h * c, -h * s, 0.0],
                    color: self.colors[1],
                },
            ],
            background: self.background,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Checks that from every point of the track both objects stay inside the
    /// depth slab with [`SLAB_MARGIN_M`] clearance.
    pub fn validate_fit(&self, radius_m: f64, mapping: &DepthMapping) -> Result<()> {
        mapping.validate()?;
        let reach = self.object_separation_m / 2.0 + self.shape.horizontal_extent();
        let nearest = radius_m - reach;
        let farthest = radius_m + reach;
        if nearest < mapping.near_m + SLAB_MARGIN_M - 1e-12 || farthest > mapping.far_m - SLAB_MARGIN_M + 1e-12 {
            return Err(Error::config(format!(
                "objects span planar depth [{nearest:.4}, {farthest:.4}] m, outside the slab \
                 [{:.4}, {:.4}] m minus margin {SLAB_MARGIN_M} m",
                mapping.near_m, mapping.far_m
            )));
        }
        Ok(())
    }
}

/// Pinhole intrinsics shared by every rendered view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub horizontal_fov_deg: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Camera {
            horizontal_fov_deg: 60.0,
        }
    }
}

const AMBIENT: f64 = 0.25;

struct Hit {
    depth: f64,
    object: usize,
    shade: f64,
}

impl Camera {
    /// Ray direction through the pixel center, scaled so its component along
    /// `forward` is 1; the ray parameter is then the planar depth.
    fn ray_dir(&self, pose: &CameraPose, res: Resolution, x: u32, y: u32) -> Vec3 {
        let half = (self.horizontal_fov_deg.to_radians() / 2.0).tan();
        let aspect = res.height as f64 / res.width as f64;
        let u = ((x as f64 + 0.5) / res.width as f64 * 2.0 - 1.0) * half;
        let v = (1.0 - (y as f64 + 0.5) / res.height as f64 * 2.0) * half * aspect;
        let f = pose.forward;
        let r = pose.right();
        let up = CameraPose::UP;
        [
            f[0] + r[0] * u + up[0] * v,
            f[1] + r[1] * u + up[1] * v,
            f[2] + r[2] * u + up[2] * v,
        ]
    }

    fn trace(&self, scene: &Scene, pose: &CameraPose, res: Resolution, x: u32, y: u32) -> Option<Hit> {
        let dir = self.ray_dir(pose, res, x, y);
        let mut best: Option<(f64, usize, Vec3)> = None;
        for (i, obj) in scene.objects.iter().enumerate() {
            if let Some((t, n)) = obj.shape.intersect(obj.center, pose.position, dir) {
                if best.as_ref().is_none_or(|(bt, _, _)| t < *bt) {
                    best = Some((t, i, n));
                }
            }
        }
        best.map(|(t, object, n)| {
            let cos = dot(n, dir).abs() / (dot(n, n) * dot(dir, dir)).sqrt();
            Hit {
                depth: t,
                object,
                shade: AMBIENT + (1.0 - AMBIENT) * cos,
            }
        })
    }
}

/// Per-pixel ray cast. Hit pixels get the Lambert-shaded object color and
/// the quantized planar depth; misses get the background color and depth 0.
pub fn render_view(scene: &Scene, pose: &CameraPose, resolution: Resolution, mapping: &DepthMapping) -> Result<Frame> {
    render_with_camera(scene, pose, resolution, mapping, &Camera::default()).map(|(frame, _)| frame)
}

/// Renders and also returns the per-pixel index of the visible object.
pub fn render_with_camera(
    scene: &Scene,
    pose: &CameraPose,
    resolution: Resolution,
    mapping: &DepthMapping,
    camera: &Camera,
) -> Result<(Frame, Vec<Option<usize>>)> {
    scene.validate()?;
    mapping.validate()?;
    if resolution.width == 0 || resolution.height == 0 {
        return Err(Error::config("resolution must be non-zero"));
    }
    let w = resolution.width;
    let rows: Vec<Vec<(Color, u8, Option<usize>)>> = (0..resolution.height)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| match camera.trace(scene, pose, resolution, x, y) {
                    Some(hit) => {
                        let base = scene.objects[hit.object].color;
                        let color = base.map(|c| (c as f64 * hit.shade).round().clamp(1.0, 255.0) as u8);
                        (color, depth_quantize(hit.depth, mapping), Some(hit.object))
                    }
                    None => (scene.background, 0, None),
                })
                .collect()
        })
        .collect();

    let mut rgb = RgbImage::new(w, resolution.height);
    let mut depth = GrayImage::new(w, resolution.height);
    let mut ids = Vec::with_capacity(resolution.pixels());
    for (y, row) in rows.into_iter().enumerate() {
        for (x, (color, d, id)) in row.into_iter().enumerate() {
            rgb.put_pixel(x as u32, y as u32, Rgb(color));
            depth.put_pixel(x as u32, y as u32, Luma([d]));
            ids.push(id);
        }
    }
    Ok((
        Frame {
            rgb,
            depth,
            pose: *pose,
        },
        ids,
    ))
}

/// Bounding box of the visible pixels of each object, `None` when hidden.
pub fn object_regions(ids: &[Option<usize>], resolution: Resolution, object_count: usize) -> Vec<Option<Region>> {
    let mut boxes: Vec<Option<(u32, u32, u32, u32)>> = vec![None; object_count];
    for (i, id) in ids.iter().enumerate() {
        if let Some(k) = *id {
            let x = (i % resolution.width as usize) as u32;
            let y = (i / resolution.width as usize) as u32;
            boxes[k] = Some(match boxes[k] {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
    }
    boxes
        .into_iter()
        .map(|b| {
            b.map(|(x0, y0, x1, y1)| Region {
                x: x0,
                y: y0,
                width: x1 - x0 + 1,
                height: y1 - y0 + 1,
            })
        })
        .collect()
}
