//! Depth-raster processing: denoising for sensor imagery, boundary corruption
//! for synthetic imagery, and pinhole back-projection to point clouds.
//!
//! Depth samples are millimeters in `u16`, with 0 marking an invalid pixel.

use crate::cloud::PointCloud;
use crate::geom::Pose;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INVALID_DEPTH: u16 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn validate(&self) -> Result<(), DepthError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(DepthError::BadIntrinsics { fx: self.fx, fy: self.fy });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DepthError {
    #[error("depth raster size {len} does not match {width}x{height}")]
    SizeMismatch { len: usize, width: usize, height: usize },
    #[error("no frames to average")]
    NoFrames,
    #[error("frame {index} dimensions differ from the first frame")]
    FrameMismatch { index: usize },
    #[error("median kernel must be odd and >= 1, got {0}")]
    BadKernel(usize),
    #[error("clip interval requires near < far, got near={near} far={far}")]
    BadClipRange { near: u16, far: u16 },
    #[error("label raster size {len} does not match image {width}x{height}")]
    LabelMismatch { len: usize, width: usize, height: usize },
    #[error("focal lengths must be positive, got fx={fx} fy={fy}")]
    BadIntrinsics { fx: f64, fy: f64 },
    #[error("mask size {len} does not match image {width}x{height}")]
    MaskMismatch { len: usize, width: usize, height: usize },
}

/// Row-major 16-bit depth raster with pinhole intrinsics.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
    pub intrinsics: Intrinsics,
}

impl DepthImage {
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<u16>,
        intrinsics: Intrinsics,
    ) -> Result<Self, DepthError> {
        if data.len() != width * height {
            return Err(DepthError::SizeMismatch { len: data.len(), width, height });
        }
        intrinsics.validate()?;
        Ok(DepthImage { width, height, data, intrinsics })
    }

    pub fn constant(width: usize, height: usize, value: u16, intrinsics: Intrinsics) -> Self {
        DepthImage {
            width,
            height,
            data: vec![value; width * height],
            intrinsics,
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d != INVALID_DEPTH).count()
    }
}

/// Temporal mean over valid samples, border invalidation, then a median filter
/// over valid neighbors, in exactly that order.
pub fn denoise(
    frames: &[DepthImage],
    crop_margin: usize,
    median_kernel: usize,
) -> Result<DepthImage, DepthError> {
    let first = frames.first().ok_or(DepthError::NoFrames)?;
    for (index, f) in frames.iter().enumerate().skip(1) {
        if f.width != first.width || f.height != first.height || f.intrinsics != first.intrinsics {
            return Err(DepthError::FrameMismatch { index });
        }
    }
    if median_kernel % 2 == 0 || median_kernel == 0 {
        return Err(DepthError::BadKernel(median_kernel));
    }
    let (w, h) = (first.width, first.height);

    // 1. Per-pixel mean over valid samples only.
    let mut mean = vec![INVALID_DEPTH; w * h];
    for i in 0..w * h {
        let mut sum = 0u64;
        let mut n = 0u64;
        for f in frames {
            let d = f.data[i];
            if d != INVALID_DEPTH {
                sum += d as u64;
                n += 1;
            }
        }
        if n > 0 {
            mean[i] = ((sum as f64 / n as f64).round() as u64).min(u16::MAX as u64) as u16;
        }
    }

    // 2. Invalidate the crop margin.
    if crop_margin > 0 {
        for y in 0..h {
            for x in 0..w {
                if x < crop_margin || y < crop_margin || x >= w - crop_margin || y >= h - crop_margin
                {
                    mean[y * w + x] = INVALID_DEPTH;
                }
            }
        }
    }

    // 3. Median over valid values in the k×k window.
    let r = median_kernel / 2;
    let mut out = vec![INVALID_DEPTH; w * h];
    let mut window = Vec::with_capacity(median_kernel * median_kernel);
    for y in 0..h {
        for x in 0..w {
            window.clear();
            for dy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                for dx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                    let d = mean[dy * w + dx];
                    if d != INVALID_DEPTH {
                        window.push(d);
                    }
                }
            }
            if !window.is_empty() {
                window.sort_unstable();
                out[y * w + x] = window[(window.len() - 1) / 2];
            }
        }
    }

    Ok(DepthImage {
        width: w,
        height: h,
        data: out,
        intrinsics: first.intrinsics,
    })
}

/// Marks depths outside `[near, far]` invalid and affinely maps the rest onto
/// `interval` (endpoints inclusive).
pub fn clip_and_scale(
    img: &DepthImage,
    near: u16,
    far: u16,
    interval: (u16, u16),
) -> Result<DepthImage, DepthError> {
    if near == 0 || near >= far {
        return Err(DepthError::BadClipRange { near, far });
    }
    let (lo, hi) = (interval.0 as f64, interval.1 as f64);
    let scale = (hi - lo) / (far - near) as f64;
    let data = img
        .data
        .iter()
        .map(|&d| {
            if d == INVALID_DEPTH || d < near || d > far {
                INVALID_DEPTH
            } else {
                (lo + (d - near) as f64 * scale).round().clamp(0.0, 65535.0) as u16
            }
        })
        .collect();
    Ok(DepthImage {
        width: img.width,
        height: img.height,
        data,
        intrinsics: img.intrinsics,
    })
}

fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut v = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                v.push((dx, dy));
            }
        }
    }
    v
}

/// Pixels whose 4-neighborhood contains a different instance label.
pub fn boundary_mask(labels: &[u8], width: usize, height: usize) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            let here = labels[y * width + x];
            let mut edge = false;
            if x > 0 && labels[y * width + x - 1] != here {
                edge = true;
            }
            if x + 1 < width && labels[y * width + x + 1] != here {
                edge = true;
            }
            if y > 0 && labels[(y - 1) * width + x] != here {
                edge = true;
            }
            if y + 1 < height && labels[(y + 1) * width + x] != here {
                edge = true;
            }
            mask[y * width + x] = edge;
        }
    }
    mask
}

fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let offsets = disk_offsets(radius);
    let mut out = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            if !mask[y * width + x] {
                continue;
            }
            for &(dx, dy) in &offsets {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                    out[ny as usize * width + nx as usize] = true;
                }
            }
        }
    }
    out
}

/// The dilated instance-boundary band affected by [`corrupt`]; exposed so the
/// untouched-outside-the-band property is directly checkable.
pub fn corruption_band(
    labels: &[u8],
    width: usize,
    height: usize,
    dilate_radius: usize,
) -> Vec<bool> {
    dilate(&boundary_mask(labels, width, height), width, height, dilate_radius)
}

/// Oil-painting style boundary corruption: within the dilated boundary band,
/// each pixel takes the mean depth of the most populated of `bins` equal-width
/// depth bins over its disk neighborhood. Pixels outside the band pass
/// through unchanged.
pub fn corrupt(
    img: &DepthImage,
    labels: &[u8],
    dilate_radius: usize,
    brush_radius: usize,
    bins: usize,
) -> Result<DepthImage, DepthError> {
    if labels.len() != img.width * img.height {
        return Err(DepthError::LabelMismatch {
            len: labels.len(),
            width: img.width,
            height: img.height,
        });
    }
    let bins = bins.max(1);
    let (w, h) = (img.width, img.height);
    let band = corruption_band(labels, w, h, dilate_radius);
    let brush = disk_offsets(brush_radius);
    let mut out = img.data.clone();

    let mut neighborhood: Vec<u16> = Vec::with_capacity(brush.len());
    let mut counts = vec![0u32; bins];
    let mut sums = vec![0u64; bins];
    for y in 0..h {
        for x in 0..w {
            if !band[y * w + x] {
                continue;
            }
            neighborhood.clear();
            for &(dx, dy) in &brush {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    let d = img.data[ny as usize * w + nx as usize];
                    if d != INVALID_DEPTH {
                        neighborhood.push(d);
                    }
                }
            }
            if neighborhood.is_empty() {
                out[y * w + x] = INVALID_DEPTH;
                continue;
            }
            let lo = *neighborhood.iter().min().unwrap() as f64;
            let hi = *neighborhood.iter().max().unwrap() as f64;
            if hi <= lo {
                out[y * w + x] = lo as u16;
                continue;
            }
            counts.iter_mut().for_each(|c| *c = 0);
            sums.iter_mut().for_each(|s| *s = 0);
            for &d in &neighborhood {
                let idx = (((d as f64 - lo) / (hi - lo)) * bins as f64) as usize;
                let idx = idx.min(bins - 1);
                counts[idx] += 1;
                sums[idx] += d as u64;
            }
            // Most populated bin; ties go to the lower bin.
            let best = (0..bins).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap();
            out[y * w + x] = ((sums[best] as f64 / counts[best] as f64).round()) as u16;
        }
    }

    Ok(DepthImage {
        width: w,
        height: h,
        data: out,
        intrinsics: img.intrinsics,
    })
}

/// Pinhole back-projection of valid (optionally masked) pixels into the
/// camera frame, then through `camera_pose` into its frame (normally world).
pub fn backproject(
    img: &DepthImage,
    camera_pose: &Pose,
    mask: Option<&[bool]>,
) -> Result<PointCloud, DepthError> {
    img.intrinsics.validate()?;
    if let Some(m) = mask {
        if m.len() != img.width * img.height {
            return Err(DepthError::MaskMismatch {
                len: m.len(),
                width: img.width,
                height: img.height,
            });
        }
    }
    let k = img.intrinsics;
    let mut points = Vec::new();
    for y in 0..img.height {
        for x in 0..img.width {
            let i = y * img.width + x;
            if img.data[i] == INVALID_DEPTH {
                continue;
            }
            if let Some(m) = mask {
                if !m[i] {
                    continue;
                }
            }
            let z = img.data[i] as f64 / 1000.0;
            let p_cam = Vector3::new(
                (x as f64 - k.cx) / k.fx * z,
                (y as f64 - k.cy) / k.fy * z,
                z,
            );
            points.push(camera_pose.transform_point(&p_cam));
        }
    }
    Ok(PointCloud::new(points, camera_pose.frame))
}
