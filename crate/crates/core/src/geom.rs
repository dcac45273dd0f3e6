//! Frame-tagged rigid transforms.
//!
//! A [`Pose`] is an SE(3) transform (unit quaternion + translation) tagged with
//! the coordinate frame its outputs live in. Frames form a fixed hierarchy
//! `world > camera > {shape, gripper}`; composition pushes lower frames up the
//! chain and rejects inverted chains.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Symbolic coordinate frame identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    World,
    Camera,
    Shape,
    Gripper,
}

impl Frame {
    /// Depth in the frame hierarchy; smaller values are closer to the root.
    fn rank(self) -> u8 {
        match self {
            Frame::World => 0,
            Frame::Camera => 1,
            Frame::Shape | Frame::Gripper => 2,
        }
    }
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Frame::World => "world",
            Frame::Camera => "camera",
            Frame::Shape => "shape",
            Frame::Gripper => "gripper",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("frame mismatch: cannot compose a pose in `{parent}` with a pose in `{child}`")]
    FrameMismatch { parent: Frame, child: Frame },
    #[error("quaternion is not unit length (norm {norm})")]
    NonUnitQuaternion { norm: f64 },
}

/// Rigid transform mapping local coordinates into `frame`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
    pub frame: Frame,
}

impl Pose {
    /// Identity transform in the given frame.
    pub fn identity(frame: Frame) -> Self {
        Pose {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
            frame,
        }
    }

    /// Build from a raw quaternion (scalar, x, y, z) and translation,
    /// renormalizing the rotation.
    pub fn new(w: f64, x: f64, y: f64, z: f64, translation: Vector3<f64>, frame: Frame) -> Self {
        Pose {
            rotation: UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z)),
            translation,
            frame,
        }
    }

    pub fn from_parts(
        rotation: UnitQuaternion<f64>,
        translation: Vector3<f64>,
        frame: Frame,
    ) -> Self {
        Pose {
            rotation,
            translation,
            frame,
        }
    }

    /// Standard SE(3) composition `self ∘ local`, keeping `self.frame`.
    ///
    /// `local` must sit at or below `self.frame` in the frame hierarchy;
    /// composing e.g. a camera-frame pose with a world-frame pose is rejected.
    pub fn compose(&self, local: &Pose) -> Result<Pose, GeomError> {
        if local.frame.rank() < self.frame.rank() {
            return Err(GeomError::FrameMismatch {
                parent: self.frame,
                child: local.frame,
            });
        }
        let q = self.rotation.into_inner() * local.rotation.into_inner();
        Ok(Pose {
            rotation: UnitQuaternion::new_normalize(q),
            translation: self.rotation * local.translation + self.translation,
            frame: self.frame,
        })
    }

    /// Inverse transform. The tag is kept; the caller knows which frame the
    /// inverse maps into.
    pub fn inverse(&self) -> Pose {
        let inv_rot = self.rotation.inverse();
        Pose {
            rotation: inv_rot,
            translation: -(inv_rot * self.translation),
            frame: self.frame,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Quaternion components in (scalar, x, y, z) order.
    pub fn quat_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Max deviation from the identity over rotation (quaternion vector part,
    /// sign-folded) and translation components.
    pub fn identity_deviation(&self) -> f64 {
        let q = self.rotation.quaternion();
        let rot_dev = (1.0 - q.w.abs()).abs().max(q.i.abs()).max(q.j.abs()).max(q.k.abs());
        rot_dev.max(self.translation.amax())
    }

    /// Check the unit-quaternion invariant.
    pub fn validate(&self, tol: f64) -> Result<(), GeomError> {
        let norm = self.rotation.quaternion().norm();
        if (norm - 1.0).abs() > tol {
            return Err(GeomError::NonUnitQuaternion { norm });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PoseWire {
    quat: [f64; 4],
    trans: [f64; 3],
    frame: Frame,
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let t = self.translation;
        PoseWire {
            quat: self.quat_wxyz(),
            trans: [t.x, t.y, t.z],
            frame: self.frame,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = PoseWire::deserialize(deserializer)?;
        let [w, x, y, z] = wire.quat;
        let q = Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > 1e-6 {
            return Err(D::Error::custom(format!(
                "pose quaternion is not unit length (norm {})",
                q.norm()
            )));
        }
        Ok(Pose {
            rotation: UnitQuaternion::new_normalize(q),
            translation: Vector3::new(wire.trans[0], wire.trans[1], wire.trans[2]),
            frame: wire.frame,
        })
    }
}

/// Orthonormal right-handed rotation from gripper/jaw axes.
///
/// `z_axis` and `x_axis` need not be exactly orthonormal; `x` is
/// re-orthogonalized against `z` and `y = z × x` completes the frame.
pub fn rotation_from_zx(z_axis: &Vector3<f64>, x_axis: &Vector3<f64>) -> UnitQuaternion<f64> {
    let z = z_axis.normalize();
    let mut x = x_axis - z * z_axis.dot(&x_axis);
    if x.norm() < 1e-12 {
        // Degenerate hint: pick any perpendicular.
        x = z.cross(&Vector3::x());
        if x.norm() < 1e-12 {
            x = z.cross(&Vector3::y());
        }
    }
    let x = x.normalize();
    let y = z.cross(&x);
    let m = nalgebra::Matrix3::from_columns(&[x, y, z]);
    UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_composes_to_identity() {
        let id = Pose::identity(Frame::World);
        let c = id.compose(&id).unwrap();
        assert!(c.identity_deviation() < 1e-12);
    }

    #[test]
    fn pose_times_inverse_is_identity() {
        let p = Pose::from_parts(
            UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 0.7),
            Vector3::new(0.1, -0.2, 0.3),
            Frame::World,
        );
        let c = p.compose(&p.inverse()).unwrap();
        assert!(c.identity_deviation() < 1e-9);
    }

    #[test]
    fn two_quarter_turns_make_a_half_turn() {
        let quarter = Pose::from_parts(
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2),
            Vector3::zeros(),
            Frame::World,
        );
        let half = quarter.compose(&quarter).unwrap();
        let mapped = half.transform_point(&Vector3::new(1.0, 0.0, 0.0));
        assert!((mapped - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn inverted_chain_is_rejected() {
        let cam = Pose::identity(Frame::Camera);
        let world = Pose::identity(Frame::World);
        assert!(matches!(
            cam.compose(&world),
            Err(GeomError::FrameMismatch { .. })
        ));
        // Descending or same-rank chains are fine.
        assert!(world.compose(&cam).is_ok());
        assert!(world.compose(&world).is_ok());
        assert!(Pose::identity(Frame::Shape)
            .compose(&Pose::identity(Frame::Gripper))
            .is_ok());
    }

    #[test]
    fn compose_renormalizes() {
        let p = Pose::new(1.0 + 1e-7, 0.0, 0.0, 0.0, Vector3::zeros(), Frame::World);
        let c = p.compose(&p).unwrap();
        c.validate(1e-9).unwrap();
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let p = Pose::from_parts(
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.123456789012345),
            Vector3::new(0.1, 0.2, -1.0 / 3.0),
            Frame::Camera,
        );
        let text = serde_json::to_string(&p).unwrap();
        let back: Pose = serde_json::from_str(&text).unwrap();
        assert_eq!(p.quat_wxyz().map(f64::to_bits), back.quat_wxyz().map(f64::to_bits));
        for i in 0..3 {
            assert_eq!(p.translation[i].to_bits(), back.translation[i].to_bits());
        }
        assert_eq!(p.frame, back.frame);
    }
}
