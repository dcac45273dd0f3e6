//! The six parametric shape classes: analytic geometry in a canonical frame.
//!
//! Canonical frames: the symmetry axis of cylinder-like shapes is local `z`
//! with the solid centered at the origin; spheres are centered at the origin;
//! the semi-sphere's flat face lies in the local `xy` plane with the dome
//! toward `+z`; cuboid faces are axis-aligned with `w → x`, `d → y`, `h → z`.
//!
//! Every class supports exact signed distance, closed-form ray intersection,
//! and area-weighted surface sampling, which together back the renderer, the
//! fitter, and the grasp checks.

use crate::cloud::PointCloud;
use crate::geom::{Frame, Pose};
use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Outer tube radius is locked to this multiple of the inner radius.
pub const TUBE_WALL_RATIO: f64 = 1.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    Cylinder,
    Ring,
    Stick,
    Sphere,
    SemiSphere,
    Cuboid,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 6] = [
        ShapeClass::Cylinder,
        ShapeClass::Ring,
        ShapeClass::Stick,
        ShapeClass::Sphere,
        ShapeClass::SemiSphere,
        ShapeClass::Cuboid,
    ];

    /// Raster label id used in class-label images (background is 0).
    pub fn label(self) -> u8 {
        match self {
            ShapeClass::Cylinder => 1,
            ShapeClass::Ring => 2,
            ShapeClass::Stick => 3,
            ShapeClass::Sphere => 4,
            ShapeClass::SemiSphere => 5,
            ShapeClass::Cuboid => 6,
        }
    }

    pub fn from_label(label: u8) -> Option<ShapeClass> {
        ShapeClass::ALL.into_iter().find(|c| c.label() == label)
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Cylinder => "cylinder",
            ShapeClass::Ring => "ring",
            ShapeClass::Stick => "stick",
            ShapeClass::Sphere => "sphere",
            ShapeClass::SemiSphere => "semi_sphere",
            ShapeClass::Cuboid => "cuboid",
        }
    }

    pub fn is_tube(self) -> bool {
        matches!(self, ShapeClass::Cylinder | ShapeClass::Ring | ShapeClass::Stick)
    }
}

impl std::str::FromStr for ShapeClass {
    type Err = ShapeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cylinder" => Ok(ShapeClass::Cylinder),
            "ring" => Ok(ShapeClass::Ring),
            "stick" => Ok(ShapeClass::Stick),
            "sphere" => Ok(ShapeClass::Sphere),
            "semi_sphere" | "semisphere" | "semi-sphere" => Ok(ShapeClass::SemiSphere),
            "cuboid" => Ok(ShapeClass::Cuboid),
            other => Err(ShapeError::UnknownClass(other.to_string())),
        }
    }
}

impl std::fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("unknown shape class `{0}`")]
    UnknownClass(String),
    #[error("{class}: dimension `{name}` must be strictly positive, got {value}")]
    NonPositiveDimension {
        class: ShapeClass,
        name: &'static str,
        value: f64,
    },
    #[error("params {params:?} do not match shape class {class}")]
    ParamClassMismatch { class: ShapeClass, params: String },
}

/// Class-specific dimension record, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeParams {
    /// Hollow cylinder wall: shared by cylinder, ring, and stick.
    Tube { r_in: f64, r_out: f64, h: f64 },
    /// Sphere or semi-sphere radius.
    Ball { r: f64 },
    /// Cuboid edges: `w` along x, `d` along y, `h` along z.
    Box { h: f64, w: f64, d: f64 },
}

/// A parametric shape instance with its canonical-frame pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveShape {
    pub class: ShapeClass,
    pub params: ShapeParams,
    pub pose: Pose,
}

impl PrimitiveShape {
    pub fn new(class: ShapeClass, params: ShapeParams, pose: Pose) -> Result<Self, ShapeError> {
        let shape = PrimitiveShape { class, params, pose };
        shape.validate()?;
        Ok(shape)
    }

    pub fn tube(class: ShapeClass, r_in: f64, h: f64, pose: Pose) -> Result<Self, ShapeError> {
        Self::new(
            class,
            ShapeParams::Tube {
                r_in,
                r_out: TUBE_WALL_RATIO * r_in,
                h,
            },
            pose,
        )
    }

    pub fn sphere(r: f64, pose: Pose) -> Result<Self, ShapeError> {
        Self::new(ShapeClass::Sphere, ShapeParams::Ball { r }, pose)
    }

    pub fn semi_sphere(r: f64, pose: Pose) -> Result<Self, ShapeError> {
        Self::new(ShapeClass::SemiSphere, ShapeParams::Ball { r }, pose)
    }

    pub fn cuboid(h: f64, w: f64, d: f64, pose: Pose) -> Result<Self, ShapeError> {
        Self::new(ShapeClass::Cuboid, ShapeParams::Box { h, w, d }, pose)
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        let dims: Vec<(&'static str, f64)> = match (self.class, self.params) {
            (c, ShapeParams::Tube { r_in, r_out, h }) if c.is_tube() => {
                vec![("r_in", r_in), ("r_out", r_out), ("h", h), ("wall", r_out - r_in)]
            }
            (ShapeClass::Sphere | ShapeClass::SemiSphere, ShapeParams::Ball { r }) => {
                vec![("r", r)]
            }
            (ShapeClass::Cuboid, ShapeParams::Box { h, w, d }) => {
                vec![("h", h), ("w", w), ("d", d)]
            }
            (class, params) => {
                return Err(ShapeError::ParamClassMismatch {
                    class,
                    params: format!("{params:?}"),
                })
            }
        };
        for (name, value) in dims {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ShapeError::NonPositiveDimension {
                    class: self.class,
                    name,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn with_pose(&self, pose: Pose) -> PrimitiveShape {
        PrimitiveShape { pose, ..*self }
    }

    /// Exact signed distance to the solid boundary, point in the shape frame.
    pub fn signed_distance_local(&self, p: &Vector3<f64>) -> f64 {
        match self.params {
            ShapeParams::Tube { r_in, r_out, h } => {
                let rho = p.xy().norm();
                // Revolved 2D rectangle in the (radius, z) half-plane.
                let du = (rho - 0.5 * (r_in + r_out)).abs() - 0.5 * (r_out - r_in);
                let dz = p.z.abs() - 0.5 * h;
                let outside = Vector3::new(du.max(0.0), dz.max(0.0), 0.0).norm();
                outside + du.max(dz).min(0.0)
            }
            ShapeParams::Ball { r } => match self.class {
                ShapeClass::Sphere => p.norm() - r,
                ShapeClass::SemiSphere => {
                    let rho = p.xy().norm();
                    let dist = p.norm();
                    if p.z >= 0.0 {
                        if dist >= r {
                            dist - r
                        } else {
                            (dist - r).max(-p.z)
                        }
                    } else if rho <= r {
                        -p.z
                    } else {
                        ((rho - r).powi(2) + p.z * p.z).sqrt()
                    }
                }
                _ => unreachable!("ball params only on sphere classes"),
            },
            ShapeParams::Box { h, w, d } => {
                let half = Vector3::new(0.5 * w, 0.5 * d, 0.5 * h);
                let q = p.abs() - half;
                let outside = q.map(|v| v.max(0.0)).norm();
                outside + q.x.max(q.y).max(q.z).min(0.0)
            }
        }
    }

    /// Signed distance for a world-frame point.
    pub fn signed_distance_world(&self, p: &Vector3<f64>) -> f64 {
        let inv = self.pose.inverse();
        self.signed_distance_local(&inv.transform_point(p))
    }

    /// Outward surface normal estimate via central differences.
    pub fn normal_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let h = 1e-7;
        let mut g = Vector3::zeros();
        for i in 0..3 {
            let mut a = *p;
            let mut b = *p;
            a[i] += h;
            b[i] -= h;
            g[i] = self.signed_distance_local(&a) - self.signed_distance_local(&b);
        }
        let n = g.norm();
        if n > 0.0 {
            g / n
        } else {
            Vector3::z()
        }
    }

    /// Radius of the bounding sphere about the canonical origin.
    pub fn bounding_radius(&self) -> f64 {
        match self.params {
            ShapeParams::Tube { r_out, h, .. } => (r_out * r_out + 0.25 * h * h).sqrt(),
            ShapeParams::Ball { r } => r,
            ShapeParams::Box { h, w, d } => 0.5 * (h * h + w * w + d * d).sqrt(),
        }
    }

    /// Distance from the canonical origin to the lowest solid point along a
    /// world direction `down`, for the shape's current pose. Used to rest or
    /// hover shapes over the table plane.
    pub fn support_extent(&self, down_world: &Vector3<f64>) -> f64 {
        // Support function of the solid in the given direction; exact per class.
        let d_local = self.pose.rotation.inverse() * down_world.normalize();
        match self.params {
            ShapeParams::Tube { r_out, h, .. } => {
                let radial = d_local.xy().norm();
                radial * r_out + d_local.z.abs() * 0.5 * h
            }
            ShapeParams::Ball { r } => match self.class {
                ShapeClass::Sphere => r,
                ShapeClass::SemiSphere => {
                    // Solid spans z ∈ [0, r]: support is r for directions with a
                    // +z component, the disk rim otherwise.
                    if d_local.z >= 0.0 {
                        r * d_local.norm().min(1.0)
                    } else {
                        d_local.xy().norm() * r
                    }
                }
                _ => unreachable!(),
            },
            ShapeParams::Box { h, w, d } => {
                0.5 * (d_local.x.abs() * w + d_local.y.abs() * d + d_local.z.abs() * h)
            }
        }
    }

    /// Nearest positive ray parameter for `o + s·d` against the shape surface,
    /// both in the shape frame. `d` need not be normalized; the returned `s`
    /// is in units of `d`.
    pub fn ray_intersect_local(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        const S_MIN: f64 = 1e-9;
        let mut best: Option<f64> = None;
        let mut push = |s: f64| {
            if s > S_MIN && best.map_or(true, |b| s < b) {
                best = Some(s);
            }
        };
        match self.params {
            ShapeParams::Tube { r_in, r_out, h } => {
                let hh = 0.5 * h;
                for r in [r_out, r_in] {
                    for s in ray_vs_cylinder_wall(o, d, r) {
                        if (o.z + s * d.z).abs() <= hh {
                            push(s);
                        }
                    }
                }
                for cap in [hh, -hh] {
                    if let Some(s) = ray_vs_plane_z(o, d, cap) {
                        let rho = (o.xy() + d.xy() * s).norm();
                        if (r_in..=r_out).contains(&rho) {
                            push(s);
                        }
                    }
                }
            }
            ShapeParams::Ball { r } => match self.class {
                ShapeClass::Sphere => {
                    for s in ray_vs_sphere(o, d, r) {
                        push(s);
                    }
                }
                ShapeClass::SemiSphere => {
                    for s in ray_vs_sphere(o, d, r) {
                        if o.z + s * d.z >= 0.0 {
                            push(s);
                        }
                    }
                    if let Some(s) = ray_vs_plane_z(o, d, 0.0) {
                        if (o.xy() + d.xy() * s).norm() <= r {
                            push(s);
                        }
                    }
                }
                _ => unreachable!(),
            },
            ShapeParams::Box { h, w, d: dd } => {
                let half = Vector3::new(0.5 * w, 0.5 * dd, 0.5 * h);
                if let Some(s) = ray_vs_box(o, d, &half) {
                    push(s);
                }
            }
        }
        best
    }

    /// World-frame ray intersection; returns the parameter in units of `d`.
    pub fn ray_intersect_world(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        let inv_rot = self.pose.rotation.inverse();
        let o_l = inv_rot * (o - self.pose.translation);
        let d_l = inv_rot * d;
        self.ray_intersect_local(&o_l, &d_l)
    }

    /// Deterministic area-weighted sampling of the full analytic surface, in
    /// the shape frame.
    pub fn surface_sample(&self, n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n).map(|_| self.sample_surface_point(&mut rng)).collect();
        PointCloud::new(points, Frame::Shape)
    }

    /// Surface samples culled to the half visible from a world-frame
    /// viewpoint: keeps points whose outward normal faces the viewer.
    pub fn surface_sample_visible(&self, n: usize, seed: u64, view_world: &Vector3<f64>) -> PointCloud {
        let inv = self.pose.inverse();
        let view_local = inv.transform_point(view_world);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        let mut guard = 0usize;
        while points.len() < n && guard < n * 400 {
            guard += 1;
            let p = self.sample_surface_point(&mut rng);
            let nrm = self.normal_local(&p);
            if nrm.dot(&(view_local - p)) > 0.0 {
                points.push(p);
            }
        }
        PointCloud::new(points, Frame::Shape)
    }

    fn sample_surface_point<R: Rng>(&self, rng: &mut R) -> Vector3<f64> {
        use std::f64::consts::{PI, TAU};
        match self.params {
            ShapeParams::Tube { r_in, r_out, h } => {
                let outer = TAU * r_out * h;
                let inner = TAU * r_in * h;
                let cap = PI * (r_out * r_out - r_in * r_in);
                let total = outer + inner + 2.0 * cap;
                let pick = rng.random_range(0.0..total);
                let phi = rng.random_range(0.0..TAU);
                if pick < outer + inner {
                    let r = if pick < outer { r_out } else { r_in };
                    let z = rng.random_range(-0.5 * h..=0.5 * h);
                    Vector3::new(r * phi.cos(), r * phi.sin(), z)
                } else {
                    let z = if pick < outer + inner + cap { 0.5 * h } else { -0.5 * h };
                    let u: f64 = rng.random_range(0.0..=1.0);
                    let rho = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
                    Vector3::new(rho * phi.cos(), rho * phi.sin(), z)
                }
            }
            ShapeParams::Ball { r } => match self.class {
                ShapeClass::Sphere => {
                    let z = rng.random_range(-1.0..=1.0_f64);
                    let phi = rng.random_range(0.0..TAU);
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    Vector3::new(r * rho * phi.cos(), r * rho * phi.sin(), r * z)
                }
                ShapeClass::SemiSphere => {
                    // Dome area 2πr², disk area πr².
                    let phi = rng.random_range(0.0..TAU);
                    if rng.random_range(0.0..3.0_f64) < 2.0 {
                        let z = rng.random_range(0.0..=1.0_f64);
                        let rho = (1.0 - z * z).max(0.0).sqrt();
                        Vector3::new(r * rho * phi.cos(), r * rho * phi.sin(), r * z)
                    } else {
                        let rho = r * rng.random_range(0.0..=1.0_f64).sqrt();
                        Vector3::new(rho * phi.cos(), rho * phi.sin(), 0.0)
                    }
                }
                _ => unreachable!(),
            },
            ShapeParams::Box { h, w, d } => {
                let half = [0.5 * w, 0.5 * d, 0.5 * h];
                let areas = [d * h, w * h, w * d]; // faces normal to x, y, z
                let total: f64 = 2.0 * areas.iter().sum::<f64>();
                let mut pick = rng.random_range(0.0..total);
                let mut axis = 2;
                for (i, a) in areas.iter().enumerate() {
                    if pick < 2.0 * a {
                        axis = i;
                        break;
                    }
                    pick -= 2.0 * a;
                }
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let mut p = Vector3::zeros();
                p[axis] = sign * half[axis];
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                p[u] = rng.random_range(-half[u]..=half[u]);
                p[v] = rng.random_range(-half[v]..=half[v]);
                p
            }
        }
    }
}

fn ray_vs_sphere(o: &Vector3<f64>, d: &Vector3<f64>, r: f64) -> Vec<f64> {
    let a = d.dot(d);
    let b = 2.0 * o.dot(d);
    let c = o.dot(o) - r * r;
    solve_quadratic(a, b, c)
}

fn ray_vs_cylinder_wall(o: &Vector3<f64>, d: &Vector3<f64>, r: f64) -> Vec<f64> {
    let a = d.x * d.x + d.y * d.y;
    let b = 2.0 * (o.x * d.x + o.y * d.y);
    let c = o.x * o.x + o.y * o.y - r * r;
    solve_quadratic(a, b, c)
}

fn ray_vs_plane_z(o: &Vector3<f64>, d: &Vector3<f64>, z: f64) -> Option<f64> {
    if d.z.abs() < 1e-15 {
        return None;
    }
    Some((z - o.z) / d.z)
}

fn ray_vs_box(o: &Vector3<f64>, d: &Vector3<f64>, half: &Vector3<f64>) -> Option<f64> {
    let mut s_enter = f64::NEG_INFINITY;
    let mut s_exit = f64::INFINITY;
    for i in 0..3 {
        if d[i].abs() < 1e-15 {
            if o[i].abs() > half[i] {
                return None;
            }
            continue;
        }
        let mut t0 = (-half[i] - o[i]) / d[i];
        let mut t1 = (half[i] - o[i]) / d[i];
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        s_enter = s_enter.max(t0);
        s_exit = s_exit.min(t1);
    }
    if s_enter > s_exit || s_exit <= 0.0 {
        return None;
    }
    Some(if s_enter > 0.0 { s_enter } else { s_exit })
}

fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-18 {
        return Vec::new();
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
}

/// One gridded dimension: values are `min + k·step` for `k = 0..` while the
/// value stays within `max` (inclusive, up to rounding).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridRange {
    pub name: &'static str,
    pub min: f64,
    pub step: f64,
    pub max: f64,
}

impl GridRange {
    pub fn count(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn value(&self, k: usize) -> f64 {
        self.min + self.step * k as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count()).map(|k| self.value(k))
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min - 1e-9 && v <= self.max + 1e-9
    }
}

/// Per-class dimension grids, in meters. Tube classes grid `(r_in, h)` with
/// `r_out` derived; ball classes grid `r`; the cuboid grids all three edges.
pub fn dimension_grid(class: ShapeClass) -> &'static [GridRange] {
    match class {
        ShapeClass::Cylinder => &[
            GridRange { name: "r_in", min: 0.030, step: 0.003, max: 0.070 },
            GridRange { name: "h", min: 0.050, step: 0.005, max: 0.100 },
        ],
        ShapeClass::Ring => &[
            GridRange { name: "r_in", min: 0.014, step: 0.002, max: 0.040 },
            GridRange { name: "h", min: 0.008, step: 0.001, max: 0.024 },
        ],
        ShapeClass::Stick => &[
            GridRange { name: "r_in", min: 0.008, step: 0.001, max: 0.015 },
            GridRange { name: "h", min: 0.040, step: 0.005, max: 0.100 },
        ],
        ShapeClass::Sphere | ShapeClass::SemiSphere => {
            &[GridRange { name: "r", min: 0.020, step: 0.002, max: 0.050 }]
        }
        ShapeClass::Cuboid => &[
            GridRange { name: "h", min: 0.020, step: 0.005, max: 0.120 },
            GridRange { name: "w", min: 0.020, step: 0.005, max: 0.120 },
            GridRange { name: "d", min: 0.020, step: 0.005, max: 0.120 },
        ],
    }
}

/// Named dimension values of a shape, for range checks and reports.
pub fn dimension_map(shape: &PrimitiveShape) -> BTreeMap<&'static str, f64> {
    let mut m = BTreeMap::new();
    match shape.params {
        ShapeParams::Tube { r_in, r_out, h } => {
            m.insert("r_in", r_in);
            m.insert("r_out", r_out);
            m.insert("h", h);
        }
        ShapeParams::Ball { r } => {
            m.insert("r", r);
        }
        ShapeParams::Box { h, w, d } => {
            m.insert("h", h);
            m.insert("w", w);
            m.insert("d", d);
        }
    }
    m
}

/// Human-readable warnings for fitted dimensions outside the generator grid.
pub fn grid_range_violations(shape: &PrimitiveShape) -> Vec<String> {
    let dims = dimension_map(shape);
    dimension_grid(shape.class)
        .iter()
        .filter_map(|range| {
            let v = *dims.get(range.name)?;
            (!range.contains(v)).then(|| {
                format!(
                    "{} {} = {:.4} m outside generator range [{:.4}, {:.4}]",
                    shape.class, range.name, v, range.min, range.max
                )
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Frame, Pose};

    fn id() -> Pose {
        Pose::identity(Frame::World)
    }

    #[test]
    fn sphere_samples_lie_on_the_radius() {
        let s = PrimitiveShape::sphere(0.03, id()).unwrap();
        let cloud = s.surface_sample(1000, 7);
        assert_eq!(cloud.len(), 1000);
        for p in cloud.iter() {
            assert!((p.norm() - 0.03).abs() < 1e-9);
        }
    }

    #[test]
    fn cuboid_samples_lie_on_exactly_one_face_plane() {
        let s = PrimitiveShape::cuboid(0.04, 0.06, 0.08, id()).unwrap();
        let half = [0.03, 0.04, 0.02]; // x, y, z half extents
        for p in s.surface_sample(1000, 3).iter() {
            let on_face: usize = (0..3)
                .filter(|&i| (p[i].abs() - half[i]).abs() < 1e-9)
                .count();
            assert_eq!(on_face, 1, "point {p:?} not on exactly one face plane");
        }
    }

    #[test]
    fn stick_radial_distances_span_the_wall() {
        // r_out = 1.15·r_in, so every surface point sits in [r_in, 1.15·r_in]
        // radially.
        let s = PrimitiveShape::tube(ShapeClass::Stick, 0.01, 0.08, id()).unwrap();
        for p in s.surface_sample(2000, 5).iter() {
            let rho = p.xy().norm();
            assert!(
                rho >= 0.01 - 1e-9 && rho <= 0.0115 + 1e-9,
                "radial distance {rho} outside the wall"
            );
        }
    }

    #[test]
    fn surface_samples_have_zero_signed_distance() {
        let shapes = [
            PrimitiveShape::tube(ShapeClass::Cylinder, 0.04, 0.08, id()).unwrap(),
            PrimitiveShape::tube(ShapeClass::Ring, 0.02, 0.012, id()).unwrap(),
            PrimitiveShape::tube(ShapeClass::Stick, 0.01, 0.06, id()).unwrap(),
            PrimitiveShape::sphere(0.035, id()).unwrap(),
            PrimitiveShape::semi_sphere(0.03, id()).unwrap(),
            PrimitiveShape::cuboid(0.05, 0.07, 0.03, id()).unwrap(),
        ];
        for s in &shapes {
            for p in s.surface_sample(400, 11).iter() {
                assert!(
                    s.signed_distance_local(p).abs() < 1e-9,
                    "{}: sd {}",
                    s.class,
                    s.signed_distance_local(p)
                );
            }
        }
    }

    #[test]
    fn tube_sdf_matches_hand_cases() {
        let s = PrimitiveShape::tube(ShapeClass::Cylinder, 0.04, 0.10, id()).unwrap();
        // On the axis: nearest surface is the inner wall.
        assert!((s.signed_distance_local(&Vector3::new(0.0, 0.0, 0.0)) - 0.04).abs() < 1e-12);
        // Inside the wall at mid height.
        assert!(s.signed_distance_local(&Vector3::new(0.044, 0.0, 0.0)) < 0.0);
        // Above the cap.
        let d = s.signed_distance_local(&Vector3::new(0.044, 0.0, 0.06));
        assert!((d - 0.01).abs() < 1e-12);
    }

    #[test]
    fn ray_hits_match_signed_distance() {
        let s = PrimitiveShape::semi_sphere(0.04, id()).unwrap();
        let o = Vector3::new(0.0, 0.0, 0.3);
        let d = Vector3::new(0.01, 0.005, -1.0);
        let t = s.ray_intersect_local(&o, &d).unwrap();
        let hit = o + d * t;
        assert!(s.signed_distance_local(&hit).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_dimensions_are_rejected() {
        assert!(PrimitiveShape::sphere(0.0, id()).is_err());
        assert!(PrimitiveShape::cuboid(0.1, -0.1, 0.1, id()).is_err());
        assert!(PrimitiveShape::new(
            ShapeClass::Sphere,
            ShapeParams::Box { h: 0.1, w: 0.1, d: 0.1 },
            id()
        )
        .is_err());
    }

    #[test]
    fn grid_counts_match_the_generator_table() {
        assert_eq!(dimension_grid(ShapeClass::Sphere)[0].count(), 16);
        assert_eq!(dimension_grid(ShapeClass::Ring)[1].count(), 17);
        assert_eq!(dimension_grid(ShapeClass::Cylinder)[0].count(), 14);
    }
}
