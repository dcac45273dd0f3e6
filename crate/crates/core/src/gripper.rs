//! Parallel-jaw gripper geometry.
//!
//! Gripper frame convention: the jaw (closing) axis is `x`, the finger travel
//! direction is `-z` (the gripper approaches the object along its own `-z`),
//! and the pose origin sits at the center of the closing region.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GripperError {
    #[error("opening levels must satisfy 0 < small < medium < large <= max_opening, got {0:?}")]
    BadOpeningLevels([f64; 3]),
    #[error("gripper dimension `{name}` must be strictly positive, got {value}")]
    NonPositiveDimension { name: &'static str, value: f64 },
}

/// Parallel-jaw gripper dimensions, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GripperModel {
    pub max_opening: f64,
    pub finger_length: f64,
    pub finger_thickness: f64,
    pub jaw_width: f64,
    /// Discrete pre-grasp apertures: small, medium, large.
    pub opening_levels: [f64; 3],
}

impl Default for GripperModel {
    fn default() -> Self {
        GripperModel {
            max_opening: 0.10,
            finger_length: 0.06,
            finger_thickness: 0.01,
            jaw_width: 0.02,
            opening_levels: [0.03, 0.06, 0.09],
        }
    }
}

/// Axis-aligned box in the gripper frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GripperBox {
    pub center: Vector3<f64>,
    pub half: Vector3<f64>,
}

impl GripperBox {
    pub fn contains(&self, p_gripper: &Vector3<f64>) -> bool {
        let q = p_gripper - self.center;
        q.x.abs() <= self.half.x && q.y.abs() <= self.half.y && q.z.abs() <= self.half.z
    }

    /// Lowest corner offset along a gripper-frame direction (support point).
    pub fn support(&self, dir: &Vector3<f64>) -> f64 {
        self.center.dot(dir) + self.half.x * dir.x.abs() + self.half.y * dir.y.abs()
            + self.half.z * dir.z.abs()
    }
}

impl GripperModel {
    pub fn validate(&self) -> Result<(), GripperError> {
        for (name, value) in [
            ("max_opening", self.max_opening),
            ("finger_length", self.finger_length),
            ("finger_thickness", self.finger_thickness),
            ("jaw_width", self.jaw_width),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(GripperError::NonPositiveDimension { name, value });
            }
        }
        let [s, m, l] = self.opening_levels;
        if !(0.0 < s && s < m && m < l && l <= self.max_opening) {
            return Err(GripperError::BadOpeningLevels(self.opening_levels));
        }
        Ok(())
    }

    /// Region swept by the fingers while closing from aperture `width`:
    /// a box centered on the gripper origin.
    pub fn closing_region(&self, width: f64) -> GripperBox {
        GripperBox {
            center: Vector3::zeros(),
            half: Vector3::new(0.5 * width, 0.5 * self.jaw_width, 0.5 * self.finger_length),
        }
    }

    /// Hull of the open gripper at aperture `width`: fingers, the gap between
    /// them, and the palm bar behind the fingers. The closing region is a
    /// subset of this volume.
    pub fn open_hull(&self, width: f64) -> GripperBox {
        let t = self.finger_thickness;
        GripperBox {
            center: Vector3::new(0.0, 0.0, 0.5 * t),
            half: Vector3::new(
                0.5 * width + t,
                0.5 * self.jaw_width,
                0.5 * (self.finger_length + t),
            ),
        }
    }

    /// Smallest opening level covering `1.2 ×` the closing dimension, falling
    /// back to the maximum opening when no level suffices.
    pub fn width_level_for(&self, closing_dim: f64) -> f64 {
        let needed = 1.2 * closing_dim;
        self.opening_levels
            .iter()
            .copied()
            .find(|&w| w >= needed)
            .unwrap_or(self.max_opening)
    }
}
