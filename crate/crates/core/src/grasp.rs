//! Parametrized grasp families per shape class, discretized into concrete
//! parallel-jaw candidates.
//!
//! Candidate poses are gripper-in-world with the jaw axis along gripper `x`
//! and the approach along gripper `-z`. Tube classes pinch the wall from the
//! top or bottom rim and close across the body from the side (the ring closes
//! across its local wall chord instead); spheres are grasped from the top or
//! side, the semi-sphere from the top only, and each cuboid face carries two
//! jaw orientations.
//!
//! The fingertip depth adapts so fingers never reach past the far side of the
//! shape, and small shapes push the grasp away along the gripper `z` axis to
//! keep fingertips off the table.

use crate::geom::{rotation_from_zx, Frame, GeomError, Pose};
use crate::gripper::GripperModel;
use crate::shapes::{PrimitiveShape, ShapeClass, ShapeParams};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use thiserror::Error;

/// Shapes with a smaller approach-axis extent than this get the standoff.
pub const SMALL_OBJECT_THRESHOLD: f64 = 0.04;
/// Standoff distance applied along the grasp `z` axis for small shapes.
pub const SMALL_OBJECT_OFFSET: f64 = 0.015;

#[derive(Debug, Error)]
pub enum GraspError {
    #[error("family {family} is not defined for shape class {class}")]
    IllegalFamily { family: GraspFamily, class: ShapeClass },
    #[error("family {family} dropped: closing dimension {closing_dim:.4} m exceeds the max opening {max_opening:.4} m")]
    OpeningExceeded {
        family: GraspFamily,
        closing_dim: f64,
        max_opening: f64,
    },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceOrient {
    Vertical,
    Horizontal,
}

/// Family tag; cuboid members carry their face index (1..=6 for
/// +x, -x, +y, -y, +z, -z) and jaw orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GraspFamily {
    CylinderTop,
    CylinderBottom,
    CylinderSide,
    RingTop,
    RingBottom,
    RingSide,
    StickSide,
    SphereTop,
    SphereSide,
    SemiSphereTop,
    CuboidFace { face: u8, orient: FaceOrient },
}

impl std::fmt::Display for GraspFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraspFamily::CylinderTop => write!(f, "cylinder_top"),
            GraspFamily::CylinderBottom => write!(f, "cylinder_bottom"),
            GraspFamily::CylinderSide => write!(f, "cylinder_side"),
            GraspFamily::RingTop => write!(f, "ring_top"),
            GraspFamily::RingBottom => write!(f, "ring_bottom"),
            GraspFamily::RingSide => write!(f, "ring_side"),
            GraspFamily::StickSide => write!(f, "stick_side"),
            GraspFamily::SphereTop => write!(f, "sphere_top"),
            GraspFamily::SphereSide => write!(f, "sphere_side"),
            GraspFamily::SemiSphereTop => write!(f, "semi_sphere_top"),
            GraspFamily::CuboidFace { face, orient } => {
                let o = match orient {
                    FaceOrient::Vertical => "vertical",
                    FaceOrient::Horizontal => "horizontal",
                };
                write!(f, "cuboid_face{face}_{o}")
            }
        }
    }
}

impl std::str::FromStr for GraspFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cylinder_top" => return Ok(GraspFamily::CylinderTop),
            "cylinder_bottom" => return Ok(GraspFamily::CylinderBottom),
            "cylinder_side" => return Ok(GraspFamily::CylinderSide),
            "ring_top" => return Ok(GraspFamily::RingTop),
            "ring_bottom" => return Ok(GraspFamily::RingBottom),
            "ring_side" => return Ok(GraspFamily::RingSide),
            "stick_side" => return Ok(GraspFamily::StickSide),
            "sphere_top" => return Ok(GraspFamily::SphereTop),
            "sphere_side" => return Ok(GraspFamily::SphereSide),
            "semi_sphere_top" => return Ok(GraspFamily::SemiSphereTop),
            _ => {}
        }
        let rest = s
            .strip_prefix("cuboid_face")
            .ok_or_else(|| format!("unknown grasp family `{s}`"))?;
        let (face_str, orient_str) = rest
            .split_once('_')
            .ok_or_else(|| format!("bad cuboid family `{s}`"))?;
        let face: u8 = face_str.parse().map_err(|_| format!("bad face in `{s}`"))?;
        if !(1..=6).contains(&face) {
            return Err(format!("face index out of range in `{s}`"));
        }
        let orient = match orient_str {
            "vertical" => FaceOrient::Vertical,
            "horizontal" => FaceOrient::Horizontal,
            _ => return Err(format!("bad orientation in `{s}`")),
        };
        Ok(GraspFamily::CuboidFace { face, orient })
    }
}

impl Serialize for GraspFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GraspFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl GraspFamily {
    pub fn shape_class(&self) -> ShapeClass {
        match self {
            GraspFamily::CylinderTop | GraspFamily::CylinderBottom | GraspFamily::CylinderSide => {
                ShapeClass::Cylinder
            }
            GraspFamily::RingTop | GraspFamily::RingBottom | GraspFamily::RingSide => ShapeClass::Ring,
            GraspFamily::StickSide => ShapeClass::Stick,
            GraspFamily::SphereTop | GraspFamily::SphereSide => ShapeClass::Sphere,
            GraspFamily::SemiSphereTop => ShapeClass::SemiSphere,
            GraspFamily::CuboidFace { .. } => ShapeClass::Cuboid,
        }
    }
}

/// The family set for a shape: {3, 3, 1, 2, 1, 12} members for
/// cylinder, ring, stick, sphere, semi-sphere, cuboid.
pub fn enumerate_families(shape: &PrimitiveShape) -> Vec<GraspFamily> {
    match shape.class {
        ShapeClass::Cylinder => vec![
            GraspFamily::CylinderTop,
            GraspFamily::CylinderBottom,
            GraspFamily::CylinderSide,
        ],
        ShapeClass::Ring => vec![
            GraspFamily::RingTop,
            GraspFamily::RingBottom,
            GraspFamily::RingSide,
        ],
        ShapeClass::Stick => vec![GraspFamily::StickSide],
        ShapeClass::Sphere => vec![GraspFamily::SphereTop, GraspFamily::SphereSide],
        ShapeClass::SemiSphere => vec![GraspFamily::SemiSphereTop],
        ShapeClass::Cuboid => {
            let mut v = Vec::with_capacity(12);
            for face in 1..=6u8 {
                for orient in [FaceOrient::Vertical, FaceOrient::Horizontal] {
                    v.push(GraspFamily::CuboidFace { face, orient });
                }
            }
            v
        }
    }
}

/// A concrete gripper placement drawn from a family grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    pub pose: Pose,
    #[serde(rename = "width")]
    pub opening_width: f64,
    pub family: GraspFamily,
    pub free_params: BTreeMap<String, f64>,
    pub shape_id: u8,
}

fn tube_dims(shape: &PrimitiveShape) -> (f64, f64, f64) {
    match shape.params {
        ShapeParams::Tube { r_in, r_out, h } => (r_in, r_out, h),
        _ => unreachable!("tube family on non-tube shape"),
    }
}

fn ball_radius(shape: &PrimitiveShape) -> f64 {
    match shape.params {
        ShapeParams::Ball { r } => r,
        _ => unreachable!("ball family on non-ball shape"),
    }
}

fn box_dims(shape: &PrimitiveShape) -> [f64; 3] {
    match shape.params {
        ShapeParams::Box { h, w, d } => [w, d, h], // along local x, y, z
        _ => unreachable!("face family on non-cuboid shape"),
    }
}

fn cuboid_face_axes(face: u8) -> (Vector3<f64>, usize, [usize; 2]) {
    // Returns (outward normal, normal axis index, in-plane axis indices).
    let (axis, sign) = match face {
        1 => (0, 1.0),
        2 => (0, -1.0),
        3 => (1, 1.0),
        4 => (1, -1.0),
        5 => (2, 1.0),
        6 => (2, -1.0),
        _ => unreachable!("face index validated on parse"),
    };
    let mut n = Vector3::zeros();
    n[axis] = sign;
    let in_plane = match axis {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    };
    (n, axis, in_plane)
}

/// Dimension the jaws must span for a family: the wall thickness for tube rim
/// pinches, the local wall chord for the ring side, the full body width
/// otherwise.
pub fn closing_dimension(shape: &PrimitiveShape, family: GraspFamily) -> Result<f64, GraspError> {
    if family.shape_class() != shape.class {
        return Err(GraspError::IllegalFamily { family, class: shape.class });
    }
    Ok(match family {
        GraspFamily::CylinderTop
        | GraspFamily::CylinderBottom
        | GraspFamily::RingTop
        | GraspFamily::RingBottom => {
            let (r_in, r_out, _) = tube_dims(shape);
            r_out - r_in
        }
        GraspFamily::CylinderSide | GraspFamily::StickSide => {
            let (_, r_out, _) = tube_dims(shape);
            2.0 * r_out
        }
        GraspFamily::RingSide => {
            let (r_in, r_out, _) = tube_dims(shape);
            2.0 * (r_out * r_out - r_in * r_in).sqrt()
        }
        GraspFamily::SphereTop | GraspFamily::SphereSide | GraspFamily::SemiSphereTop => {
            2.0 * ball_radius(shape)
        }
        GraspFamily::CuboidFace { face, orient } => {
            let dims = box_dims(shape);
            let (_, _, in_plane) = cuboid_face_axes(face);
            let jaw_axis = match orient {
                FaceOrient::Vertical => in_plane[0],
                FaceOrient::Horizontal => in_plane[1],
            };
            dims[jaw_axis]
        }
    })
}

/// Shape extent behind the grasp point along the approach; drives the
/// small-object standoff.
fn approach_extent(shape: &PrimitiveShape, family: GraspFamily) -> f64 {
    match family {
        GraspFamily::CylinderTop
        | GraspFamily::CylinderBottom
        | GraspFamily::RingTop
        | GraspFamily::RingBottom => tube_dims(shape).2,
        GraspFamily::CylinderSide | GraspFamily::StickSide => 2.0 * tube_dims(shape).1,
        GraspFamily::RingSide => {
            let (r_in, r_out, _) = tube_dims(shape);
            r_out + 0.5 * (r_in + r_out)
        }
        GraspFamily::SphereTop | GraspFamily::SphereSide | GraspFamily::SemiSphereTop => {
            ball_radius(shape)
        }
        GraspFamily::CuboidFace { face, .. } => {
            let (_, axis, _) = cuboid_face_axes(face);
            box_dims(shape)[axis]
        }
    }
}

/// Rim pinches keep their adaptive fingertip depth; body-wide grasps retreat.
fn standoff_applies(family: GraspFamily) -> bool {
    !matches!(
        family,
        GraspFamily::CylinderTop
            | GraspFamily::CylinderBottom
            | GraspFamily::RingTop
            | GraspFamily::RingBottom
            | GraspFamily::RingSide
    )
}

fn rotation_count(radius: f64, jaw_width: f64) -> usize {
    ((TAU * radius / jaw_width).round() as usize).max(1)
}

/// Inclusive grid over `[-span/2, span/2]` with step near `step`.
fn translation_grid(span: f64, step: f64) -> Vec<f64> {
    let count = ((span / step).floor() as usize + 1).max(1);
    if count == 1 {
        return vec![0.0];
    }
    let actual = span / (count - 1) as f64;
    (0..count).map(|i| -0.5 * span + actual * i as f64).collect()
}

struct LocalGrasp {
    tcp: Vector3<f64>,
    z_axis: Vector3<f64>,
    x_axis: Vector3<f64>,
    free: BTreeMap<String, f64>,
}

fn family_grid(shape: &PrimitiveShape, family: GraspFamily, g: &GripperModel) -> Vec<LocalGrasp> {
    let half_len = 0.5 * g.finger_length;
    let radial = |theta: f64| Vector3::new(theta.cos(), theta.sin(), 0.0);
    let tangent = |theta: f64| Vector3::new(-theta.sin(), theta.cos(), 0.0);
    let thetas = |count: usize| (0..count).map(move |k| TAU * k as f64 / count as f64);
    let mut out = Vec::new();

    match family {
        GraspFamily::CylinderTop
        | GraspFamily::CylinderBottom
        | GraspFamily::RingTop
        | GraspFamily::RingBottom => {
            let (r_in, r_out, h) = tube_dims(shape);
            let r_mid = 0.5 * (r_in + r_out);
            let from_top = matches!(family, GraspFamily::CylinderTop | GraspFamily::RingTop);
            let sign = if from_top { 1.0 } else { -1.0 };
            let retreat = (half_len - h).max(0.0);
            for theta in thetas(rotation_count(r_mid, g.jaw_width)) {
                let rim = radial(theta) * r_mid + Vector3::new(0.0, 0.0, sign * 0.5 * h);
                let z_axis = Vector3::new(0.0, 0.0, sign);
                out.push(LocalGrasp {
                    tcp: rim + z_axis * retreat,
                    z_axis,
                    x_axis: radial(theta),
                    free: BTreeMap::from([("theta".to_string(), theta)]),
                });
            }
        }
        GraspFamily::CylinderSide | GraspFamily::StickSide => {
            let (_, r_out, h) = tube_dims(shape);
            let retreat = (half_len - r_out).max(0.0);
            for theta in thetas(rotation_count(r_out, g.jaw_width)) {
                for &t in &translation_grid(h, g.finger_thickness) {
                    let z_axis = radial(theta);
                    out.push(LocalGrasp {
                        tcp: Vector3::new(0.0, 0.0, t) + z_axis * retreat,
                        z_axis,
                        x_axis: tangent(theta),
                        free: BTreeMap::from([
                            ("theta".to_string(), theta),
                            ("t".to_string(), t),
                        ]),
                    });
                }
            }
        }
        GraspFamily::RingSide => {
            let (r_in, r_out, h) = tube_dims(shape);
            let r_mid = 0.5 * (r_in + r_out);
            let retreat = (half_len - (r_mid - r_in)).max(0.0);
            for theta in thetas(rotation_count(r_mid, g.jaw_width)) {
                for &t in &translation_grid(h, g.finger_thickness) {
                    let z_axis = radial(theta);
                    out.push(LocalGrasp {
                        tcp: radial(theta) * r_mid + Vector3::new(0.0, 0.0, t) + z_axis * retreat,
                        z_axis,
                        x_axis: tangent(theta),
                        free: BTreeMap::from([
                            ("theta".to_string(), theta),
                            ("t".to_string(), t),
                        ]),
                    });
                }
            }
        }
        GraspFamily::SphereTop | GraspFamily::SemiSphereTop => {
            let r = ball_radius(shape);
            let behind = if family == GraspFamily::SphereTop { r } else { 0.0 };
            let retreat = (half_len - behind).max(0.0);
            for theta in thetas(rotation_count(r, g.jaw_width)) {
                out.push(LocalGrasp {
                    tcp: Vector3::new(0.0, 0.0, retreat),
                    z_axis: Vector3::z(),
                    x_axis: radial(theta),
                    free: BTreeMap::from([("theta".to_string(), theta)]),
                });
            }
        }
        GraspFamily::SphereSide => {
            let r = ball_radius(shape);
            let retreat = (half_len - r).max(0.0);
            for theta in thetas(rotation_count(r, g.jaw_width)) {
                let z_axis = radial(theta);
                out.push(LocalGrasp {
                    tcp: z_axis * retreat,
                    z_axis,
                    x_axis: tangent(theta),
                    free: BTreeMap::from([("theta".to_string(), theta)]),
                });
            }
        }
        GraspFamily::CuboidFace { face, orient } => {
            let dims = box_dims(shape);
            let (normal, n_axis, in_plane) = cuboid_face_axes(face);
            let (jaw_axis, free_axis) = match orient {
                FaceOrient::Vertical => (in_plane[0], in_plane[1]),
                FaceOrient::Horizontal => (in_plane[1], in_plane[0]),
            };
            let mut x_axis = Vector3::zeros();
            x_axis[jaw_axis] = 1.0;
            let mut free_dir = Vector3::zeros();
            free_dir[free_axis] = 1.0;
            let face_center = normal * (0.5 * dims[n_axis]);
            let retreat = (half_len - dims[n_axis]).max(0.0);
            for &t in &translation_grid(dims[free_axis], g.finger_thickness) {
                out.push(LocalGrasp {
                    tcp: face_center + free_dir * t + normal * retreat,
                    z_axis: normal,
                    x_axis,
                    free: BTreeMap::from([("t".to_string(), t)]),
                });
            }
        }
    }
    out
}

/// Grid one family into candidates. The whole family is dropped with an error
/// when its closing dimension exceeds the gripper opening.
pub fn discretize(
    shape: &PrimitiveShape,
    family: GraspFamily,
    gripper: &GripperModel,
    shape_id: u8,
) -> Result<Vec<GraspCandidate>, GraspError> {
    let closing_dim = closing_dimension(shape, family)?;
    if closing_dim > gripper.max_opening {
        return Err(GraspError::OpeningExceeded {
            family,
            closing_dim,
            max_opening: gripper.max_opening,
        });
    }
    let width = gripper.width_level_for(closing_dim);
    let standoff = if standoff_applies(family) && approach_extent(shape, family) < SMALL_OBJECT_THRESHOLD
    {
        SMALL_OBJECT_OFFSET
    } else {
        0.0
    };

    family_grid(shape, family, gripper)
        .into_iter()
        .map(|local| {
            let tcp = local.tcp + local.z_axis * standoff;
            let rotation = rotation_from_zx(&local.z_axis, &local.x_axis);
            let local_pose = Pose::from_parts(rotation, tcp, Frame::Shape);
            let pose = shape.pose.compose(&local_pose)?;
            let mut free_params = local.free;
            free_params.insert("standoff".to_string(), standoff);
            Ok(GraspCandidate {
                pose,
                opening_width: width,
                family,
                free_params,
                shape_id,
            })
        })
        .collect()
}

/// A family skipped by [`enumerate_and_discretize`], with the reason.
#[derive(Clone, Debug, Serialize)]
pub struct DroppedFamily {
    pub family: GraspFamily,
    pub closing_dim: f64,
}

/// All candidates for a shape, plus the families dropped for exceeding the
/// gripper opening.
pub fn enumerate_and_discretize(
    shape: &PrimitiveShape,
    gripper: &GripperModel,
    shape_id: u8,
) -> Result<(Vec<GraspCandidate>, Vec<DroppedFamily>), GraspError> {
    let mut candidates = Vec::new();
    let mut dropped = Vec::new();
    for family in enumerate_families(shape) {
        match discretize(shape, family, gripper, shape_id) {
            Ok(mut c) => candidates.append(&mut c),
            Err(GraspError::OpeningExceeded { family, closing_dim, .. }) => {
                dropped.push(DroppedFamily { family, closing_dim })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((candidates, dropped))
}

/// Material extent along the jaw axis inside the closing region, found by
/// signed-distance sampling. `None` when the closing region holds no material.
pub struct JawContact {
    pub lo: f64,
    pub hi: f64,
}

impl JawContact {
    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

pub fn jaw_contact(
    shape: &PrimitiveShape,
    candidate: &GraspCandidate,
    gripper: &GripperModel,
) -> Option<JawContact> {
    let region = gripper.closing_region(candidate.opening_width);
    let inv_shape = shape.pose.inverse();
    let (nx, ny, nz) = (48, 9, 25);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for ix in 0..nx {
        let x = region.half.x * (2.0 * ix as f64 / (nx - 1) as f64 - 1.0);
        for iy in 0..ny {
            let y = region.half.y * (2.0 * iy as f64 / (ny - 1) as f64 - 1.0);
            for iz in 0..nz {
                let z = region.half.z * (2.0 * iz as f64 / (nz - 1) as f64 - 1.0);
                let p_world = candidate.pose.transform_point(&Vector3::new(x, y, z));
                if shape.signed_distance_local(&inv_shape.transform_point(&p_world)) <= 1e-9 {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
            }
        }
    }
    (lo.is_finite() && hi >= lo).then_some(JawContact { lo, hi })
}

/// Antipodal containment: the closing region holds material whose width along
/// the jaw axis fits inside the assigned opening.
pub fn antipodal_holds(
    shape: &PrimitiveShape,
    candidate: &GraspCandidate,
    gripper: &GripperModel,
) -> bool {
    match jaw_contact(shape, candidate, gripper) {
        Some(contact) => contact.span() <= candidate.opening_width + 1e-6,
        None => false,
    }
}
