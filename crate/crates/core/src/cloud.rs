//! Ordered 3D point sets tagged with the frame they are expressed in.

use crate::geom::{Frame, Pose};
use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    pub frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>, frame: Frame) -> Self {
        PointCloud { points, frame }
    }

    pub fn empty(frame: Frame) -> Self {
        PointCloud { points: Vec::new(), frame }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.points.iter()
    }

    pub fn push(&mut self, p: Vector3<f64>) {
        self.points.push(p);
    }

    pub fn validate(&self) -> Result<(), CloudError> {
        for (index, p) in self.points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(CloudError::NonFinite { index });
            }
        }
        Ok(())
    }

    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        Some(self.points.iter().sum::<Vector3<f64>>() / self.points.len() as f64)
    }

    /// Map every point through `pose`; the result lives in `pose.frame`.
    pub fn transformed(&self, pose: &Pose) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| pose.transform_point(p)).collect(),
            frame: pose.frame,
        }
    }

    /// Every `stride`-th point, preserving order. `stride` of 0 or 1 keeps all.
    pub fn strided(&self, stride: usize) -> PointCloud {
        if stride <= 1 {
            return self.clone();
        }
        PointCloud {
            points: self.points.iter().step_by(stride).copied().collect(),
            frame: self.frame,
        }
    }
}
