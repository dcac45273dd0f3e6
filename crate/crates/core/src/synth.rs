//! Domain-randomized scene generation with an analytic ray-cast renderer.
//!
//! Each scene draws one instance of every shape class from the gridded
//! dimension table, places them on a table plane by a cluster-or-scatter rule
//! with Gaussian spread, resolves resting poses analytically, and renders a
//! depth + class-label + instance-label triple from the principal camera or a
//! jittered assistant camera.

use crate::cloud::PointCloud;
use crate::depth::{backproject, DepthImage, Intrinsics, INVALID_DEPTH};
use crate::geom::{rotation_from_zx, Frame, Pose};
use crate::io::{pgm, IoError};
use crate::shapes::{dimension_grid, PrimitiveShape, ShapeClass, ShapeError};
use nalgebra::{UnitQuaternion, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("placement failed after {retries} retries (could not keep shapes inside the workspace)")]
    PlacementFailure { retries: usize },
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {msg}")]
    Bundle { path: String, msg: String },
}

/// How a shape is introduced into the scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    FreeFall,
    UprightOnTable,
    Floating,
}

/// Scene randomization parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    /// Principal camera elevation above the table plane, degrees.
    pub elevation_deg: f64,
    /// Principal camera distance from the workspace center, meters.
    pub camera_distance: f64,
    pub assistant_count: usize,
    /// Assistant orientation jitter bound, degrees.
    pub assistant_rot_jitter_deg: f64,
    /// Assistant translation jitter bound per axis, meters.
    pub assistant_trans_jitter: f64,
    pub table_height: f64,
    /// Std-dev of the Gaussian placement around the mean location, meters.
    pub placement_sigma: f64,
    /// Odds of clustered vs scattered placement.
    pub cluster_odds: [u32; 2],
    /// Minimum pairwise center distance enforced in scatter mode, meters.
    pub scatter_min_dist: f64,
    /// Half extent of the placement area on the table, meters.
    pub placement_half_extent: f64,
    /// Hover band above the table for floating shapes, meters.
    pub hover_range: [f64; 2],
    /// Placement modes to draw from.
    pub modes: Vec<PlacementMode>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            width: 640,
            height: 480,
            fx: 570.0,
            fy: 570.0,
            elevation_deg: 42.3,
            camera_distance: 0.9,
            assistant_count: 4,
            assistant_rot_jitter_deg: 10.0,
            assistant_trans_jitter: 0.1,
            table_height: 0.0,
            placement_sigma: 0.15,
            cluster_odds: [4, 1],
            scatter_min_dist: 0.10,
            placement_half_extent: 0.28,
            hover_range: [0.02, 0.15],
            modes: vec![
                PlacementMode::FreeFall,
                PlacementMode::UprightOnTable,
                PlacementMode::Floating,
            ],
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: (self.width as f64 - 1.0) / 2.0,
            cy: (self.height as f64 - 1.0) / 2.0,
        }
    }

    /// Principal camera pose: on the -y side of the workspace, looking at the
    /// table center from the configured elevation.
    pub fn principal_camera(&self) -> Pose {
        let elev = self.elevation_deg.to_radians();
        let center = Vector3::new(0.0, 0.0, self.table_height);
        let position = center
            + Vector3::new(
                0.0,
                -self.camera_distance * elev.cos(),
                self.camera_distance * elev.sin(),
            );
        look_at(&position, &center)
    }
}

/// Camera pose with `+z` optical axis toward `target`, `x` to the right and
/// `y` down (image convention).
pub fn look_at(position: &Vector3<f64>, target: &Vector3<f64>) -> Pose {
    let forward = (target - position).normalize();
    let mut x = forward.cross(&Vector3::z());
    if x.norm() < 1e-9 {
        x = Vector3::x();
    }
    let x = x.normalize();
    let rotation = rotation_from_zx(&forward, &x);
    Pose::from_parts(rotation, *position, Frame::World)
}

/// Rendered scene with per-pixel ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledScene {
    pub depth: DepthImage,
    pub class_labels: Vec<u8>,
    pub instance_labels: Vec<u8>,
    pub shapes: Vec<(u8, PrimitiveShape)>,
    pub camera_pose: Pose,
}

impl LabeledScene {
    /// Check the label contracts: every nonzero instance label has a listed
    /// shape and its class label matches that shape's class.
    pub fn validate(&self) -> Result<(), String> {
        for (i, &inst) in self.instance_labels.iter().enumerate() {
            if inst == 0 {
                if self.class_labels[i] != 0 {
                    return Err(format!("pixel {i}: class label without instance"));
                }
                continue;
            }
            let Some((_, shape)) = self.shapes.iter().find(|(id, _)| *id == inst) else {
                return Err(format!("pixel {i}: instance {inst} has no shape entry"));
            };
            if self.class_labels[i] != shape.class.label() {
                return Err(format!(
                    "pixel {i}: class label {} does not match instance {inst} ({})",
                    self.class_labels[i],
                    shape.class
                ));
            }
        }
        Ok(())
    }

    /// Boolean mask of pixels carrying the given instance label.
    pub fn instance_mask(&self, instance: u8) -> Vec<bool> {
        self.instance_labels.iter().map(|&l| l == instance).collect()
    }

    /// Back-projected world-frame cloud for one instance.
    pub fn instance_cloud(&self, instance: u8) -> PointCloud {
        let mask = self.instance_mask(instance);
        backproject(&self.depth, &self.camera_pose, Some(&mask))
            .expect("scene rasters are size-consistent")
    }
}

/// Draws one shape with dimensions from the per-class grid. Tube classes lock
/// the outer radius to 1.15 × the inner radius. The pose is identity.
pub fn sample_shape<R: Rng>(class: ShapeClass, rng: &mut R) -> PrimitiveShape {
    let grid = dimension_grid(class);
    let mut draw = |idx: usize| {
        let range = grid[idx];
        range.value(rng.random_range(0..range.count()))
    };
    let pose = Pose::identity(Frame::World);
    match class {
        ShapeClass::Cylinder | ShapeClass::Ring | ShapeClass::Stick => {
            let r_in = draw(0);
            let h = draw(1);
            PrimitiveShape::tube(class, r_in, h, pose).expect("grid dimensions are positive")
        }
        ShapeClass::Sphere => PrimitiveShape::sphere(draw(0), pose).unwrap(),
        ShapeClass::SemiSphere => PrimitiveShape::semi_sphere(draw(0), pose).unwrap(),
        ShapeClass::Cuboid => {
            let h = draw(0);
            let w = draw(1);
            let d = draw(2);
            PrimitiveShape::cuboid(h, w, d, pose).unwrap()
        }
    }
}

fn uniform_rotation<R: Rng>(rng: &mut R) -> UnitQuaternion<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let q = nalgebra::Quaternion::new(
        normal.sample(rng),
        normal.sample(rng),
        normal.sample(rng),
        normal.sample(rng),
    );
    UnitQuaternion::new_normalize(q)
}

/// Analytic rest orientation on the table: flat face down for cuboid and
/// semi-sphere, side or end (by coin flip) for tube classes, free for the
/// sphere.
fn rest_rotation<R: Rng>(shape: &PrimitiveShape, rng: &mut R) -> UnitQuaternion<f64> {
    use std::f64::consts::FRAC_PI_2;
    let yaw = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), rng.random_range(0.0..std::f64::consts::TAU));
    match shape.class {
        ShapeClass::Sphere => uniform_rotation(rng),
        ShapeClass::SemiSphere => yaw,
        ShapeClass::Cylinder | ShapeClass::Ring | ShapeClass::Stick => {
            let on_side = rng.random::<bool>();
            if on_side {
                yaw * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), FRAC_PI_2)
            } else {
                yaw
            }
        }
        ShapeClass::Cuboid => {
            let dims = match shape.params {
                crate::shapes::ShapeParams::Box { h, w, d } => [w, d, h], // x, y, z
                _ => unreachable!(),
            };
            let min_axis = (0..3).min_by(|&a, &b| dims[a].total_cmp(&dims[b])).unwrap();
            let align = match min_axis {
                0 => UnitQuaternion::from_axis_angle(&Vector3::y_axis(), FRAC_PI_2),
                1 => UnitQuaternion::from_axis_angle(&Vector3::x_axis(), FRAC_PI_2),
                _ => UnitQuaternion::identity(),
            };
            yaw * align
        }
    }
}

/// Planned scene prior to rendering.
#[derive(Clone, Debug)]
pub struct ScenePlan {
    pub shapes: Vec<(u8, PrimitiveShape)>,
    pub camera: Pose,
    pub camera_index: usize,
    pub clustered: bool,
    pub means: Vec<Vector3<f64>>,
}

/// Randomizes shape dimensions, placement, resting poses and the camera draw.
pub fn plan_scene(cfg: &SynthConfig) -> Result<ScenePlan, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // One instance per class, insertion order shuffled.
    let mut classes = ShapeClass::ALL.to_vec();
    classes.shuffle(&mut rng);
    let bases: Vec<PrimitiveShape> = classes.iter().map(|&c| sample_shape(c, &mut rng)).collect();

    let [cluster_w, scatter_w] = cfg.cluster_odds;
    let clustered = rng.random_range(0..cluster_w + scatter_w) < cluster_w;
    let area = cfg.placement_half_extent;
    let mut uniform_xy = |rng: &mut ChaCha8Rng| {
        Vector3::new(
            rng.random_range(-area..=area),
            rng.random_range(-area..=area),
            cfg.table_height,
        )
    };

    let shared_mean = uniform_xy(&mut rng);
    let means: Vec<Vector3<f64>> = (0..bases.len())
        .map(|_| {
            let individual = uniform_xy(&mut rng);
            if clustered {
                shared_mean
            } else {
                individual
            }
        })
        .collect();

    let gauss = Normal::new(0.0, cfg.placement_sigma).unwrap();
    let mut placed: Vec<(u8, PrimitiveShape)> = Vec::with_capacity(bases.len());
    const MAX_RETRIES: usize = 200;
    for (i, base) in bases.iter().enumerate() {
        let instance = (i + 1) as u8;
        let mut accepted = None;
        for _ in 0..MAX_RETRIES {
            // Gaussian placement projected onto the table bounds.
            let cx = (means[i].x + gauss.sample(&mut rng)).clamp(-area, area);
            let cy = (means[i].y + gauss.sample(&mut rng)).clamp(-area, area);
            let mode = *cfg.modes.choose(&mut rng).unwrap_or(&PlacementMode::FreeFall);
            let sampled_rot = uniform_rotation(&mut rng);

            let rotation = match mode {
                PlacementMode::Floating => sampled_rot,
                PlacementMode::FreeFall | PlacementMode::UprightOnTable => {
                    rest_rotation(base, &mut rng)
                }
            };
            let mut shape = base.with_pose(Pose::from_parts(
                rotation,
                Vector3::new(cx, cy, 0.0),
                Frame::World,
            ));
            let support = shape.support_extent(&Vector3::new(0.0, 0.0, -1.0));
            let z = match mode {
                PlacementMode::Floating => {
                    cfg.table_height
                        + support
                        + rng.random_range(cfg.hover_range[0]..=cfg.hover_range[1])
                }
                _ => cfg.table_height + support,
            };
            shape.pose.translation.z = z;

            let min_dist = if clustered {
                // Keep shapes from coinciding while staying in contact range.
                let own = shape.bounding_radius();
                placed
                    .iter()
                    .map(|(_, other)| 0.5 * (own + other.bounding_radius()))
                    .fold(0.0f64, f64::max)
            } else {
                cfg.scatter_min_dist
            };
            let ok = placed.iter().all(|(_, other)| {
                let a = shape.pose.translation.xy();
                let b = other.pose.translation.xy();
                (a - b).norm() >= min_dist
            });
            if ok {
                accepted = Some(shape);
                break;
            }
        }
        match accepted {
            Some(shape) => placed.push((instance, shape)),
            None => return Err(SynthError::PlacementFailure { retries: MAX_RETRIES }),
        }
    }

    // Assistant camera jitters are always drawn so the stream is stable.
    let principal = cfg.principal_camera();
    let mut assistants = Vec::with_capacity(cfg.assistant_count);
    for _ in 0..cfg.assistant_count {
        let axis = Vector3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        let angle = rng
            .random_range(-cfg.assistant_rot_jitter_deg..=cfg.assistant_rot_jitter_deg)
            .to_radians();
        let jitter_rot = if axis.norm() > 1e-9 {
            UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
        } else {
            UnitQuaternion::identity()
        };
        let t = cfg.assistant_trans_jitter;
        let jitter_t = Vector3::new(
            rng.random_range(-t..=t),
            rng.random_range(-t..=t),
            rng.random_range(-t..=t),
        );
        assistants.push(Pose::from_parts(
            jitter_rot * principal.rotation,
            principal.translation + jitter_t,
            Frame::World,
        ));
    }
    let camera_index = rng.random_range(0..1 + cfg.assistant_count);
    let camera = if camera_index == 0 {
        principal
    } else {
        assistants[camera_index - 1]
    };

    Ok(ScenePlan {
        shapes: placed,
        camera,
        camera_index,
        clustered,
        means,
    })
}

/// Per-pixel ray cast of world-frame shapes plus the table plane. The nearest
/// hit sets the depth (millimeters, rounded) and both labels; table and
/// background pixels carry label 0.
pub fn render(
    shapes: &[(u8, PrimitiveShape)],
    camera_pose: &Pose,
    intrinsics: Intrinsics,
    width: usize,
    height: usize,
    table_height: Option<f64>,
) -> LabeledScene {
    let origin = camera_pose.translation;
    let cam_rot = camera_pose.rotation;

    // Shape poses inverted once up front.
    let locals: Vec<(u8, PrimitiveShape, UnitQuaternion<f64>, Vector3<f64>)> = shapes
        .iter()
        .map(|&(id, s)| (id, s, s.pose.rotation.inverse(), s.pose.translation))
        .collect();

    let mut depth = vec![INVALID_DEPTH; width * height];
    let mut class_labels = vec![0u8; width * height];
    let mut instance_labels = vec![0u8; width * height];

    depth
        .par_chunks_mut(width)
        .zip(class_labels.par_chunks_mut(width))
        .zip(instance_labels.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, ((depth_row, class_row), inst_row))| {
            for x in 0..width {
                let dir_cam = Vector3::new(
                    (x as f64 - intrinsics.cx) / intrinsics.fx,
                    (y as f64 - intrinsics.cy) / intrinsics.fy,
                    1.0,
                );
                let dir = cam_rot * dir_cam;
                let mut best: Option<(f64, u8, u8)> = None;
                for (id, shape, inv_rot, trans) in &locals {
                    let o_l = inv_rot * (origin - trans);
                    let d_l = inv_rot * dir;
                    if let Some(s) = shape.ray_intersect_local(&o_l, &d_l) {
                        if best.map_or(true, |(b, _, _)| s < b) {
                            best = Some((s, shape.class.label(), *id));
                        }
                    }
                }
                if let Some(tz) = table_height {
                    if dir.z.abs() > 1e-15 {
                        let s = (tz - origin.z) / dir.z;
                        if s > 1e-9 && best.map_or(true, |(b, _, _)| s < b) {
                            best = Some((s, 0, 0));
                        }
                    }
                }
                if let Some((s, class, inst)) = best {
                    let mm = (s * 1000.0).round();
                    if mm >= 1.0 && mm <= 65535.0 {
                        depth_row[x] = mm as u16;
                        class_row[x] = class;
                        inst_row[x] = inst;
                    }
                }
            }
        });

    LabeledScene {
        depth: DepthImage {
            width,
            height,
            data: depth,
            intrinsics,
        },
        class_labels,
        instance_labels,
        shapes: shapes.to_vec(),
        camera_pose: *camera_pose,
    }
}

/// Plan and render a full randomized scene from the config seed.
pub fn generate_scene(cfg: &SynthConfig) -> Result<LabeledScene, SynthError> {
    let plan = plan_scene(cfg)?;
    Ok(render(
        &plan.shapes,
        &plan.camera,
        cfg.intrinsics(),
        cfg.width,
        cfg.height,
        Some(cfg.table_height),
    ))
}

/// Ground-truth sidecar for a scene bundle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneTruth {
    pub camera_pose: Pose,
    pub intrinsics: Intrinsics,
    pub table_height: f64,
    pub shapes: Vec<TruthShape>,
    pub config: SynthConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruthShape {
    pub instance: u8,
    pub shape: PrimitiveShape,
}

/// Intrinsics sidecar written next to `depth.pgm`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub camera_pose: Pose,
}

pub fn write_scene_bundle(
    dir: &Path,
    scene: &LabeledScene,
    cfg: &SynthConfig,
) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir).map_err(IoError::from)?;
    let d = &scene.depth;
    pgm::write_pgm16(&dir.join("depth.pgm"), d.width, d.height, &d.data)?;
    pgm::write_pgm8(&dir.join("class.pgm"), d.width, d.height, &scene.class_labels)?;
    pgm::write_pgm8(&dir.join("instance.pgm"), d.width, d.height, &scene.instance_labels)?;

    let truth = SceneTruth {
        camera_pose: scene.camera_pose,
        intrinsics: d.intrinsics,
        table_height: cfg.table_height,
        shapes: scene
            .shapes
            .iter()
            .map(|&(instance, shape)| TruthShape { instance, shape })
            .collect(),
        config: cfg.clone(),
    };
    let truth_json = serde_json::to_string_pretty(&truth)
        .map_err(|e| SynthError::Bundle { path: dir.display().to_string(), msg: e.to_string() })?;
    std::fs::write(dir.join("truth.json"), truth_json).map_err(IoError::from)?;

    let sidecar = DepthSidecar {
        fx: d.intrinsics.fx,
        fy: d.intrinsics.fy,
        cx: d.intrinsics.cx,
        cy: d.intrinsics.cy,
        camera_pose: scene.camera_pose,
    };
    let sidecar_json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| SynthError::Bundle { path: dir.display().to_string(), msg: e.to_string() })?;
    std::fs::write(dir.join("depth.json"), sidecar_json).map_err(IoError::from)?;
    Ok(())
}

pub struct SceneBundle {
    pub scene: LabeledScene,
    pub truth: SceneTruth,
}

pub fn read_scene_bundle(dir: &Path) -> Result<SceneBundle, SynthError> {
    let bundle_err = |msg: String| SynthError::Bundle {
        path: dir.display().to_string(),
        msg,
    };
    let truth_text = std::fs::read_to_string(dir.join("truth.json")).map_err(IoError::from)?;
    let truth: SceneTruth =
        serde_json::from_str(&truth_text).map_err(|e| bundle_err(format!("truth.json: {e}")))?;

    let (w, h, depth_data) = pgm::read_pgm16(&dir.join("depth.pgm"))?;
    let (cw, ch, class_labels) = pgm::read_pgm8(&dir.join("class.pgm"))?;
    let (iw, ih, instance_labels) = pgm::read_pgm8(&dir.join("instance.pgm"))?;
    if (cw, ch) != (w, h) || (iw, ih) != (w, h) {
        return Err(bundle_err("label raster dimensions differ from depth".into()));
    }

    let depth = DepthImage::new(w, h, depth_data, truth.intrinsics)
        .map_err(|e| bundle_err(e.to_string()))?;
    Ok(SceneBundle {
        scene: LabeledScene {
            depth,
            class_labels,
            instance_labels,
            shapes: truth.shapes.iter().map(|t| (t.instance, t.shape)).collect(),
            camera_pose: truth.camera_pose,
        },
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_draws_stay_on_the_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = dimension_grid(ShapeClass::Sphere)[0];
        for _ in 0..500 {
            let s = sample_shape(ShapeClass::Sphere, &mut rng);
            let r = match s.params {
                crate::shapes::ShapeParams::Ball { r } => r,
                _ => panic!("sphere params"),
            };
            let on_grid = grid.values().any(|v| (v - r).abs() < 1e-12);
            assert!(on_grid, "radius {r} off the grid");
        }
    }

    #[test]
    fn ring_heights_stay_on_the_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let grid = dimension_grid(ShapeClass::Ring)[1];
        for _ in 0..300 {
            let s = sample_shape(ShapeClass::Ring, &mut rng);
            let h = match s.params {
                crate::shapes::ShapeParams::Tube { h, .. } => h,
                _ => panic!("tube params"),
            };
            assert!(grid.values().any(|v| (v - h).abs() < 1e-12), "height {h} off the grid");
        }
    }

    #[test]
    fn tube_draws_lock_the_wall_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = sample_shape(ShapeClass::Cylinder, &mut rng);
            if let crate::shapes::ShapeParams::Tube { r_in, r_out, .. } = s.params {
                assert!((r_out / r_in - 1.15).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sphere_grid_is_fully_covered() {
        // Coupon-collector style coverage of all 16 grid vertices.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let grid = dimension_grid(ShapeClass::Sphere)[0];
        let mut seen = vec![false; grid.count()];
        for _ in 0..10_000 {
            let s = sample_shape(ShapeClass::Sphere, &mut rng);
            if let crate::shapes::ShapeParams::Ball { r } = s.params {
                for (k, v) in grid.values().enumerate() {
                    if (v - r).abs() < 1e-12 {
                        seen[k] = true;
                    }
                }
            }
        }
        assert!(seen.iter().all(|&s| s), "unvisited grid vertices: {seen:?}");
    }

    #[test]
    fn empty_table_renders_constant_depth() {
        let cam = Pose::from_parts(
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI),
            Vector3::new(0.0, 0.0, 1.0),
            Frame::World,
        );
        let k = Intrinsics { fx: 80.0, fy: 80.0, cx: 39.5, cy: 29.5 };
        let scene = render(&[], &cam, k, 80, 60, Some(0.0));
        assert!(scene.depth.data.iter().all(|&d| d == 1000));
        assert!(scene.class_labels.iter().all(|&c| c == 0));
    }

    #[test]
    fn sphere_center_pixel_depth() {
        // Camera at the origin looking along +z, sphere centered 0.5 m ahead.
        let cam = Pose::identity(Frame::World);
        let sphere = PrimitiveShape::sphere(
            0.05,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.5), Frame::World),
        )
        .unwrap();
        let k = Intrinsics { fx: 100.0, fy: 100.0, cx: 20.0, cy: 15.0 };
        let scene = render(&[(1, sphere)], &cam, k, 41, 31, None);
        assert_eq!(scene.depth.at(20, 15), 450);
        assert_eq!(scene.instance_labels[15 * 41 + 20], 1);
        assert_eq!(scene.class_labels[15 * 41 + 20], ShapeClass::Sphere.label());
    }

    #[test]
    fn occlusion_takes_the_nearer_hit_everywhere() {
        let cam = Pose::identity(Frame::World);
        let k = Intrinsics { fx: 60.0, fy: 60.0, cx: 29.5, cy: 19.5 };
        let a = PrimitiveShape::sphere(
            0.06,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.5), Frame::World),
        )
        .unwrap();
        let b = PrimitiveShape::cuboid(
            0.08,
            0.08,
            0.08,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.02, 0.0, 0.45), Frame::World),
        )
        .unwrap();
        let both = render(&[(1, a), (2, b)], &cam, k, 60, 40, None);
        let only_a = render(&[(1, a)], &cam, k, 60, 40, None);
        let only_b = render(&[(2, b)], &cam, k, 60, 40, None);
        for i in 0..60 * 40 {
            let da = only_a.depth.data[i];
            let db = only_b.depth.data[i];
            let expected = match (da, db) {
                (0, d) | (d, 0) => d,
                (da, db) => da.min(db),
            };
            assert_eq!(both.depth.data[i], expected, "pixel {i}");
            if da != 0 && (db == 0 || da <= db) {
                assert_eq!(both.instance_labels[i], 1, "pixel {i} label");
            } else if db != 0 {
                assert_eq!(both.instance_labels[i], 2, "pixel {i} label");
            }
        }
        both.validate().unwrap();
    }

    #[test]
    fn fixed_seed_reproduces_the_scene_exactly() {
        let cfg = SynthConfig {
            width: 96,
            height: 72,
            fx: 90.0,
            fy: 90.0,
            seed: 42,
            ..SynthConfig::default()
        };
        let a = generate_scene(&cfg).unwrap();
        let b = generate_scene(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scatter_placement_respects_the_minimum_distance() {
        for seed in 0..100 {
            let cfg = SynthConfig {
                // Scatter is forced by zeroing the cluster odds.
                cluster_odds: [0, 1],
                seed,
                ..SynthConfig::default()
            };
            let plan = plan_scene(&cfg).unwrap();
            assert!(!plan.clustered);
            for i in 0..plan.shapes.len() {
                for j in i + 1..plan.shapes.len() {
                    let a = plan.shapes[i].1.pose.translation.xy();
                    let b = plan.shapes[j].1.pose.translation.xy();
                    assert!(
                        (a - b).norm() >= cfg.scatter_min_dist - 1e-12,
                        "seed {seed}: shapes {i},{j} too close"
                    );
                }
            }
        }
    }

    #[test]
    fn cluster_placement_shares_one_mean() {
        let cfg = SynthConfig {
            cluster_odds: [1, 0],
            seed: 9,
            ..SynthConfig::default()
        };
        let plan = plan_scene(&cfg).unwrap();
        assert!(plan.clustered);
        for m in &plan.means {
            assert_eq!(m, &plan.means[0]);
        }
    }

    #[test]
    fn settled_shapes_rest_on_the_table() {
        let cfg = SynthConfig {
            modes: vec![PlacementMode::FreeFall],
            seed: 11,
            ..SynthConfig::default()
        };
        let plan = plan_scene(&cfg).unwrap();
        for (_, shape) in &plan.shapes {
            let support = shape.support_extent(&Vector3::new(0.0, 0.0, -1.0));
            let bottom = shape.pose.translation.z - support;
            assert!((bottom - cfg.table_height).abs() < 1e-9, "{} floats", shape.class);
        }
    }

    #[test]
    fn bundle_round_trip() {
        let cfg = SynthConfig {
            width: 64,
            height: 48,
            fx: 60.0,
            fy: 60.0,
            seed: 13,
            ..SynthConfig::default()
        };
        let scene = generate_scene(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene_0000");
        write_scene_bundle(&path, &scene, &cfg).unwrap();
        let back = read_scene_bundle(&path).unwrap();
        assert_eq!(back.scene.depth.data, scene.depth.data);
        assert_eq!(back.scene.instance_labels, scene.instance_labels);
        assert_eq!(back.scene.shapes.len(), 6);
        back.scene.validate().unwrap();
    }
}
