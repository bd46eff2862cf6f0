//! Ray intersection for the four scene primitives.
//!
//! Rays are `origin + t * dir` with `dir` not necessarily unit length; the
//! returned `t` is in the same parametrization. Primitives are placed in
//! world space with their symmetry axis along +z.

use serde::{Deserialize, Serialize};

use crate::viewgeom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Torus,
    Cube,
    Cone,
    Sphere,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 4] = [ShapeKind::Torus, ShapeKind::Cube, ShapeKind::Cone, ShapeKind::Sphere];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Torus => "torus",
            ShapeKind::Cube => "cube",
            ShapeKind::Cone => "cone",
            ShapeKind::Sphere => "sphere",
        }
    }
}

impl std::fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ShapeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown shape '{s}' (expected torus, cube, cone or sphere)"))
    }
}

/// Primitive with its size parameters, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Sphere {
        radius_m: f64,
    },
    /// Axis-aligned cube.
    Cube {
        edge_m: f64,
    },
    /// Ring around the vertical axis.
    Torus {
        major_m: f64,
        minor_m: f64,
    },
    /// Base disk at the bottom, apex on top; centered at mid-height.
    Cone {
        radius_m: f64,
        height_m: f64,
    },
}

impl Shape {
    pub fn default_for(kind: ShapeKind) -> Shape {
        match kind {
            ShapeKind::Sphere => Shape::Sphere { radius_m: 0.025 },
            ShapeKind::Cube => Shape::Cube { edge_m: 0.035 },
            ShapeKind::Torus => Shape::Torus {
                major_m: 0.017,
                minor_m: 0.008,
            },
            ShapeKind::Cone => Shape::Cone {
                radius_m: 0.025,
                height_m: 0.05,
            },
        }
    }

    pub fn kind(&self) -> ShapeKind {
        match self {
            Shape::Sphere { .. } => ShapeKind::Sphere,
            Shape::Cube { .. } => ShapeKind::Cube,
            Shape::Torus { .. } => ShapeKind::Torus,
            Shape::Cone { .. } => ShapeKind::Cone,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        let dims: &[f64] = match self {
            Shape::Sphere { radius_m } => &[*radius_m],
            Shape::Cube { edge_m } => &[*edge_m],
            Shape::Torus { major_m, minor_m } => &[*major_m, *minor_m],
            Shape::Cone { radius_m, height_m } => &[*radius_m, *height_m],
        };
        dims.iter().any(|d| !(*d > 0.0) || !d.is_finite())
    }

    /// Largest distance from the center to the surface within the horizontal plane.
    pub fn horizontal_extent(&self) -> f64 {
        match *self {
            Shape::Sphere { radius_m } => radius_m,
            Shape::Cube { edge_m } => edge_m * std::f64::consts::FRAC_1_SQRT_2,
            Shape::Torus { major_m, minor_m } => major_m + minor_m,
            Shape::Cone { radius_m, .. } => radius_m,
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Sphere { radius_m } => radius_m,
            Shape::Cube { edge_m } => edge_m * 3f64.sqrt() / 2.0,
            Shape::Torus { major_m, minor_m } => major_m + minor_m,
            Shape::Cone { radius_m, height_m } => radius_m.hypot(height_m / 2.0),
        }
    }

    /// Nearest hit with `t > 0`: `(t, outward normal)`. The normal is not normalized.
    pub fn intersect(&self, center: Vec3, origin: Vec3, dir: Vec3) -> Option<(f64, Vec3)> {
        let o = sub(origin, center);
        match *self {
            Shape::Sphere { radius_m } => sphere_hit(o, dir, radius_m),
            Shape::Cube { edge_m } => box_hit(o, dir, edge_m / 2.0),
            Shape::Torus { major_m, minor_m } => torus_hit(o, dir, major_m, minor_m),
            Shape::Cone { radius_m, height_m } => cone_hit(o, dir, radius_m, height_m),
        }
    }
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn at(o: Vec3, d: Vec3, t: f64) -> Vec3 {
    [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]]
}

/// Both roots of `a t^2 + b t + c`, ascending, using the stable form.
fn quadratic(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a.abs() < 1e-300 {
        if b == 0.0 {
            return None;
        }
        let t = -c / b;
        return Some((t, t));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (t0, t1) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some(if t0 <= t1 { (t0, t1) } else { (t1, t0) })
}

fn sphere_interval(o: Vec3, d: Vec3, radius: f64) -> Option<(f64, f64)> {
    quadratic(dot(d, d), 2.0 * dot(o, d), dot(o, o) - radius * radius)
}

fn sphere_hit(o: Vec3, d: Vec3, radius: f64) -> Option<(f64, Vec3)> {
    let (t0, t1) = sphere_interval(o, d, radius)?;
    let t = if t0 > 0.0 {
        t0
    } else if t1 > 0.0 {
        t1
    } else {
        return None;
    };
    Some((t, at(o, d, t)))
}

fn box_hit(o: Vec3, d: Vec3, half: f64) -> Option<(f64, Vec3)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut near_axis = 0;
    let mut near_sign = 0.0;
    for axis in 0..3 {
        if d[axis] == 0.0 {
            if o[axis].abs() > half {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[axis];
        let (mut ta, mut tb) = ((-half - o[axis]) * inv, (half - o[axis]) * inv);
        let mut sign = -1.0;
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
            sign = 1.0;
        }
        if ta > t_near {
            t_near = ta;
            near_axis = axis;
            near_sign = sign;
        }
        t_far = t_far.min(tb);
    }
    if t_near > t_far || t_near <= 0.0 {
        return None;
    }
    let mut n = [0.0; 3];
    n[near_axis] = near_sign;
    Some((t_near, n))
}

fn torus_sdf(p: Vec3, major: f64, minor: f64) -> f64 {
    let ring = (p[0] * p[0] + p[1] * p[1]).sqrt() - major;
    (ring * ring + p[2] * p[2]).sqrt() - minor
}

fn torus_hit(o: Vec3, d: Vec3, major: f64, minor: f64) -> Option<(f64, Vec3)> {
    const MAX_STEPS: usize = 512;
    const EPS: f64 = 1e-9;
    let (t0, t1) = sphere_interval(o, d, major + minor + 1e-6)?;
    if t1 <= 0.0 {
        return None;
    }
    // Sphere tracing in unit-length steps, converted back to `t` on return.
    let len = dot(d, d).sqrt();
    let u = [d[0] / len, d[1] / len, d[2] / len];
    let (s_end, mut s) = (t1 * len, t0.max(0.0) * len);
    for _ in 0..MAX_STEPS {
        let p = at(o, u, s);
        let dist = torus_sdf(p, major, minor);
        if dist < EPS {
            let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let n = if rho > 0.0 {
                [p[0] - major * p[0] / rho, p[1] - major * p[1] / rho, p[2]]
            } else {
                [0.0, 0.0, p[2].signum()]
            };
            return Some((s / len, n));
        }
        s += dist;
        if s > s_end {
            return None;
        }
    }
    None
}

fn cone_hit(o: Vec3, d: Vec3, radius: f64, height: f64) -> Option<(f64, Vec3)> {
    let apex = height / 2.0;
    let base = -height / 2.0;
    let k2 = (radius / height).powi(2);
    let mut best: Option<(f64, Vec3)> = None;
    let mut consider = |t: f64, n: Vec3| {
        if t > 0.0 && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, n));
        }
    };

    let dz = apex - o[2];
    let a = d[0] * d[0] + d[1] * d[1] - k2 * d[2] * d[2];
    let b = 2.0 * (o[0] * d[0] + o[1] * d[1] + k2 * dz * d[2]);
    let c = o[0] * o[0] + o[1] * o[1] - k2 * dz * dz;
    if let Some((ta, tb)) = quadratic(a, b, c) {
        for t in [ta, tb] {
            let p = at(o, d, t);
            if p[2] >= base && p[2] <= apex {
                consider(t, [p[0], p[1], k2 * (apex - p[2])]);
            }
        }
    }
    if d[2] != 0.0 {
        let t = (base - o[2]) / d[2];
        let p = at(o, d, t);
        if p[0] * p[0] + p[1] * p[1] <= radius * radius {
            consider(t, [0.0, 0.0, -1.0]);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORIGIN: Vec3 = [0.0, 0.0, 0.0];

    #[test]
    fn sphere_front_hit() {
        let s = Shape::Sphere { radius_m: 0.5 };
        let (t, n) = s.intersect(ORIGIN, [2.0, 0.0, 0.0], [-1.0, 0.0, 0.0]).unwrap();
        assert!((t - 1.5).abs() < 1e-12);
        assert!(n[0] > 0.0);
        assert!(s.intersect(ORIGIN, [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn cube_faces() {
        let c = Shape::Cube { edge_m: 1.0 };
        let (t, n) = c.intersect(ORIGIN, [3.0, 0.1, 0.2], [-1.0, 0.0, 0.0]).unwrap();
        assert!((t - 2.5).abs() < 1e-12);
        assert_eq!(n, [1.0, 0.0, 0.0]);
        assert!(c.intersect(ORIGIN, [3.0, 0.6, 0.0], [-1.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn torus_hits_tube_and_misses_hole() {
        let tor = Shape::Torus {
            major_m: 1.0,
            minor_m: 0.25,
        };
        let (t, _) = tor.intersect(ORIGIN, [3.0, 0.0, 0.0], [-1.0, 0.0, 0.0]).unwrap();
        assert!((t - 1.75).abs() < 1e-8);
        // Straight down through the hole.
        assert!(tor.intersect(ORIGIN, [0.0, 0.0, 3.0], [0.0, 0.0, -1.0]).is_none());
        // Scaled direction keeps the same hit point.
        let (t2, _) = tor.intersect(ORIGIN, [3.0, 0.0, 0.0], [-2.0, 0.0, 0.0]).unwrap();
        assert!((t2 * 2.0 - 1.75).abs() < 1e-8);
    }

    #[test]
    fn cone_side_and_base() {
        let cone = Shape::Cone {
            radius_m: 1.0,
            height_m: 2.0,
        };
        // At mid-height (z=0) the radius is 0.5.
        let (t, n) = cone.intersect(ORIGIN, [3.0, 0.0, 0.0], [-1.0, 0.0, 0.0]).unwrap();
        assert!((t - 2.5).abs() < 1e-12);
        assert!(n[0] > 0.0 && n[2] > 0.0);
        let (t, n) = cone.intersect(ORIGIN, [0.2, 0.0, -3.0], [0.0, 0.0, 1.0]).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert_eq!(n, [0.0, 0.0, -1.0]);
        // Above the apex.
        assert!(cone.intersect(ORIGIN, [3.0, 0.0, 1.5], [-1.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn default_dims_not_degenerate() {
        for k in ShapeKind::ALL {
            assert!(!Shape::default_for(k).is_degenerate());
            assert_eq!(Shape::default_for(k).kind(), k);
            assert_eq!(k.name().parse::<ShapeKind>().unwrap(), k);
        }
        assert!(Shape::Sphere { radius_m: 0.0 }.is_degenerate());
    }
}
