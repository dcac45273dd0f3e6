//! Grasp scoring, ranking, and selection.
//!
//! Costs: a weighted L1 norm of the quaternion vector part (a zero weight on
//! the scalar slot makes identity-adjacent, downward grasps cheapest) and the
//! Euclidean norm of the translation. Costs normalize to [0, 1] scores over
//! the candidate pool, occupancy counts cloud points inside the closing
//! region, and binary dimension/collision gates zero the composite score.
//! Selection walks the ranking and returns the first feasible candidate:
//! inside the workspace box with a clear straight-line approach corridor.

use crate::cloud::PointCloud;
use crate::geom::Pose;
use crate::grasp::{closing_dimension, GraspCandidate};
use crate::gripper::GripperModel;
use crate::shapes::PrimitiveShape;
use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RankError {
    #[error("no candidates to rank")]
    EmptyCandidates,
    #[error("candidate references shape id {0} with no fitted shape")]
    MissingShape(u8),
    #[error("quaternion is not unit length (norm {0})")]
    NonUnitQuaternion(f64),
}

/// Composite-score weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringWeights {
    pub lambda_r: f64,
    pub lambda_t: f64,
    pub lambda_o: f64,
    /// Per-component weights on the quaternion vector part.
    pub omega: [f64; 3],
}

impl Default for ScoringWeights {
    fn default() -> Self {
        ScoringWeights {
            lambda_r: 0.5,
            lambda_t: 0.5,
            lambda_o: 0.0025,
            omega: [1.0, 1.0, 1.0],
        }
    }
}

impl ScoringWeights {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.lambda_r, self.lambda_t, self.lambda_o, self.omega[0], self.omega[1], self.omega[2]];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(format!("scoring weights must be positive: {self:?}"));
        }
        Ok(())
    }
}

/// Axis-aligned workspace box, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Workspace {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace {
            min: [-0.45, -0.45, -0.02],
            max: [0.45, 0.45, 0.60],
        }
    }
}

impl Workspace {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Gating and feasibility knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankConfig {
    /// Reference orientation: rotation costs are measured relative to this
    /// quaternion (scalar, x, y, z). Identity means gripper `-z` along world
    /// `-z`, i.e. pointing down.
    pub reference_rotation: [f64; 4],
    pub table_height: f64,
    /// Straight-line approach corridor: radius and span along the gripper
    /// `+z` axis, measured from just behind the palm so the gripper body
    /// (already covered by the collision gate) does not block itself.
    pub corridor_radius: f64,
    pub corridor_start: f64,
    pub corridor_end: f64,
    /// Scene-cloud budget for collision checks; larger clouds are strided.
    pub max_collision_points: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            reference_rotation: [1.0, 0.0, 0.0, 0.0],
            table_height: 0.0,
            corridor_radius: 0.035,
            corridor_start: 0.02,
            corridor_end: 0.25,
            max_collision_points: 40_000,
        }
    }
}

/// Scene points this close to the table plane are treated as table returns;
/// the analytic half-space handles the table itself.
const TABLE_POINT_TOLERANCE: f64 = 0.002;

/// A ranked candidate with all score components.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoredGrasp {
    pub candidate: GraspCandidate,
    pub c_rot: f64,
    pub c_trans: f64,
    pub s_rot: f64,
    pub s_trans: f64,
    pub s_occ: usize,
    pub s_dim: u8,
    pub s_col: u8,
    pub gamma: f64,
    /// 1-based position after sorting.
    pub rank: usize,
}

/// Weighted L1 norm of the quaternion vector part.
pub fn rotation_cost(q: &UnitQuaternion<f64>, omega: &[f64; 3]) -> Result<f64, RankError> {
    let raw: &Quaternion<f64> = q.quaternion();
    let norm = raw.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(RankError::NonUnitQuaternion(norm));
    }
    Ok(omega[0] * raw.i.abs() + omega[1] * raw.j.abs() + omega[2] * raw.k.abs())
}

/// Euclidean norm of the translation.
pub fn translation_cost(t: &Vector3<f64>) -> f64 {
    t.norm()
}

/// Map costs onto [0, 1] scores: the cheapest cost scores 1, the most
/// expensive 0. A degenerate range scores everything 1.
pub fn normalize_scores(costs: &[f64]) -> Vec<f64> {
    let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![1.0; costs.len()];
    }
    costs.iter().map(|c| 1.0 - (c - lo) / (hi - lo)).collect()
}

/// Composite score; either zero gate nulls it exactly.
pub fn composite_score(
    s_rot: f64,
    s_trans: f64,
    s_occ: usize,
    s_dim: u8,
    s_col: u8,
    weights: &ScoringWeights,
) -> f64 {
    (weights.lambda_r * s_rot + weights.lambda_t * s_trans + weights.lambda_o * s_occ as f64)
        * s_dim as f64
        * s_col as f64
}

/// Number of cloud points inside the closing region at the assigned width.
pub fn occupancy(candidate: &GraspCandidate, cloud: &PointCloud, gripper: &GripperModel) -> usize {
    let region = gripper.closing_region(candidate.opening_width);
    let inv = candidate.pose.inverse();
    cloud
        .iter()
        .filter(|p| region.contains(&inv.transform_point(p)))
        .count()
}

fn open_hull_lowest_z(pose: &Pose, hull: &crate::gripper::GripperBox) -> f64 {
    let down_local = pose.rotation.inverse() * Vector3::new(0.0, 0.0, -1.0);
    let center_world_z = pose.transform_point(&hull.center).z;
    center_world_z - (hull.support(&down_local) - hull.center.dot(&down_local))
}

/// Dimension and collision gates for one candidate.
///
/// `scene_ids`, when given, attributes each scene point to an instance so the
/// target's own points inside the closing region are not counted as
/// collisions; without ids, any point inside the closing region is treated as
/// grasped material.
pub fn gate(
    candidate: &GraspCandidate,
    shape: &PrimitiveShape,
    scene_cloud: &PointCloud,
    scene_ids: Option<&[u8]>,
    gripper: &GripperModel,
    cfg: &RankConfig,
) -> (u8, u8) {
    let closing = closing_dimension(shape, candidate.family).unwrap_or(f64::INFINITY);
    let s_dim = u8::from(closing <= gripper.max_opening);

    let hull = gripper.open_hull(candidate.opening_width);
    let closing_region = gripper.closing_region(candidate.opening_width);
    let inv = candidate.pose.inverse();

    // Table half-space.
    let mut collides = open_hull_lowest_z(&candidate.pose, &hull) < cfg.table_height - 1e-9;

    if !collides {
        for (i, p) in scene_cloud.iter().enumerate() {
            if p.z < cfg.table_height + TABLE_POINT_TOLERANCE {
                continue;
            }
            let pg = inv.transform_point(p);
            if !hull.contains(&pg) {
                continue;
            }
            let own = match scene_ids {
                Some(ids) => ids[i] == candidate.shape_id,
                None => true,
            };
            if closing_region.contains(&pg) && own {
                continue;
            }
            collides = true;
            break;
        }
    }
    (s_dim, u8::from(!collides))
}

fn point_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Ranked candidates plus the selected feasible grasp, if any.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ranking {
    pub grasps: Vec<ScoredGrasp>,
    /// Index into `grasps` of the selected grasp.
    pub selected: Option<usize>,
}

impl Ranking {
    pub fn selected_grasp(&self) -> Option<&ScoredGrasp> {
        self.selected.map(|i| &self.grasps[i])
    }
}

/// Scene geometry handed to the ranker: the full cloud, optional per-point
/// instance attribution, and per-instance clouds for occupancy.
pub struct SceneForRanking<'a> {
    pub scene_cloud: &'a PointCloud,
    pub scene_ids: Option<&'a [u8]>,
    pub instance_clouds: &'a BTreeMap<u8, PointCloud>,
    pub shapes: &'a BTreeMap<u8, PrimitiveShape>,
}

/// Score every candidate, sort by descending composite score (ties: lower
/// translation cost, lower rotation cost, input order), and select the first
/// ungated candidate that sits inside the workspace with a clear approach.
pub fn rank_and_select(
    candidates: &[GraspCandidate],
    scene: &SceneForRanking<'_>,
    gripper: &GripperModel,
    weights: &ScoringWeights,
    workspace: &Workspace,
    cfg: &RankConfig,
) -> Result<Ranking, RankError> {
    if candidates.is_empty() {
        return Err(RankError::EmptyCandidates);
    }
    for c in candidates {
        if !scene.shapes.contains_key(&c.shape_id) {
            return Err(RankError::MissingShape(c.shape_id));
        }
    }
    let [w, x, y, z] = cfg.reference_rotation;
    let reference = UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z));
    let ref_inv = reference.inverse();

    let stride = scene.scene_cloud.len().div_ceil(cfg.max_collision_points.max(1));
    let collision_cloud = scene.scene_cloud.strided(stride);
    let collision_ids: Option<Vec<u8>> = scene
        .scene_ids
        .map(|ids| ids.iter().step_by(stride.max(1)).copied().collect());

    let mut c_rot = Vec::with_capacity(candidates.len());
    for c in candidates {
        c_rot.push(rotation_cost(&(ref_inv * c.pose.rotation), &weights.omega)?);
    }
    let c_trans: Vec<f64> = candidates.iter().map(|c| translation_cost(&c.pose.translation)).collect();
    let s_rot = normalize_scores(&c_rot);
    let s_trans = normalize_scores(&c_trans);

    let empty = PointCloud::empty(scene.scene_cloud.frame);
    let per_candidate: Vec<(usize, (u8, u8))> = candidates
        .par_iter()
        .map(|c| {
            let own_cloud = scene.instance_clouds.get(&c.shape_id).unwrap_or(&empty);
            let s_occ = occupancy(c, own_cloud, gripper);
            let gates = gate(
                c,
                &scene.shapes[&c.shape_id],
                &collision_cloud,
                collision_ids.as_deref(),
                gripper,
                cfg,
            );
            (s_occ, gates)
        })
        .collect();

    let mut scored: Vec<ScoredGrasp> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (s_occ, (s_dim, s_col)) = per_candidate[i];
            ScoredGrasp {
                candidate: c.clone(),
                c_rot: c_rot[i],
                c_trans: c_trans[i],
                s_rot: s_rot[i],
                s_trans: s_trans[i],
                s_occ,
                s_dim,
                s_col,
                gamma: composite_score(s_rot[i], s_trans[i], s_occ, s_dim, s_col, weights),
                rank: 0,
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .gamma
            .total_cmp(&scored[a].gamma)
            .then(scored[a].c_trans.total_cmp(&scored[b].c_trans))
            .then(scored[a].c_rot.total_cmp(&scored[b].c_rot))
            .then(a.cmp(&b))
    });
    let mut grasps: Vec<ScoredGrasp> = order.into_iter().map(|i| scored[i].clone()).collect();
    std::mem::drop(std::mem::take(&mut scored));
    for (i, g) in grasps.iter_mut().enumerate() {
        g.rank = i + 1;
    }

    let selected = grasps.iter().position(|g| {
        g.gamma > 0.0
            && is_feasible(
                &g.candidate,
                &collision_cloud,
                collision_ids.as_deref(),
                gripper,
                workspace,
                cfg,
            )
    });

    Ok(Ranking { grasps, selected })
}

/// Workspace containment plus a clear straight-line approach corridor.
pub fn is_feasible(
    candidate: &GraspCandidate,
    scene_cloud: &PointCloud,
    scene_ids: Option<&[u8]>,
    gripper: &GripperModel,
    workspace: &Workspace,
    cfg: &RankConfig,
) -> bool {
    let tcp = candidate.pose.translation;
    if !workspace.contains(&tcp) {
        return false;
    }
    let approach = candidate.pose.rotate_vector(&Vector3::z());
    let a = tcp + approach * cfg.corridor_start;
    let b = tcp + approach * cfg.corridor_end;
    let closing_region = gripper.closing_region(candidate.opening_width);
    let inv = candidate.pose.inverse();
    for (i, p) in scene_cloud.iter().enumerate() {
        let own = match scene_ids {
            Some(ids) => ids[i] == candidate.shape_id,
            None => closing_region.contains(&inv.transform_point(p)),
        };
        if own {
            continue;
        }
        if point_segment_distance(p, &a, &b) < cfg.corridor_radius {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Frame, Pose};
    use crate::grasp::GraspFamily;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn quat(w: f64, x: f64, y: f64, z: f64) -> UnitQuaternion<f64> {
        UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z))
    }

    #[test]
    fn rotation_cost_examples() {
        let omega = [1.0, 1.0, 1.0];
        assert_eq!(rotation_cost(&quat(1.0, 0.0, 0.0, 0.0), &omega).unwrap(), 0.0);
        assert!((rotation_cost(&quat(0.0, 1.0, 0.0, 0.0), &omega).unwrap() - 1.0).abs() < 1e-15);
        let ninety_z = quat(FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2);
        assert!((rotation_cost(&ninety_z, &omega).unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rotation_cost_weights_the_components() {
        let omega = [2.0, 3.0, 5.0];
        let q = quat(0.5, 0.5, 0.5, 0.5);
        assert!((rotation_cost(&q, &omega).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn translation_cost_is_the_norm() {
        assert_eq!(translation_cost(&Vector3::zeros()), 0.0);
        assert!((translation_cost(&Vector3::new(0.3, 0.4, 0.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn score_normalization_examples() {
        assert_eq!(normalize_scores(&[2.0, 4.0]), vec![1.0, 0.0]);
        assert_eq!(normalize_scores(&[5.0, 5.0, 5.0]), vec![1.0, 1.0, 1.0]);
        let s = normalize_scores(&[1.0, 2.0, 3.0]);
        assert!((s[0] - 1.0).abs() < 1e-15 && (s[1] - 0.5).abs() < 1e-15 && s[2].abs() < 1e-15);
    }

    #[test]
    fn adding_a_constant_to_costs_leaves_scores_unchanged() {
        let base = [0.1, 0.7, 0.3, 1.4];
        let shifted: Vec<f64> = base.iter().map(|c| c + 10.0).collect();
        let a = normalize_scores(&base);
        let b = normalize_scores(&shifted);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn dummy_candidate(pose: Pose, width: f64) -> GraspCandidate {
        GraspCandidate {
            pose,
            opening_width: width,
            family: GraspFamily::SphereTop,
            free_params: BTreeMap::new(),
            shape_id: 1,
        }
    }

    #[test]
    fn occupancy_counts_points_in_the_closing_region() {
        let g = GripperModel::default();
        let cand = dummy_candidate(Pose::identity(Frame::World), 0.06);
        let inside = Vector3::new(0.02, 0.0, 0.01);
        let outside = Vector3::new(0.05, 0.0, 0.0);
        let cloud = PointCloud::new(vec![inside, outside, Vector3::zeros()], Frame::World);
        assert_eq!(occupancy(&cand, &cloud, &g), 2);
        assert_eq!(occupancy(&cand, &PointCloud::empty(Frame::World), &g), 0);
        let all_inside = PointCloud::new(vec![Vector3::zeros(); 7], Frame::World);
        assert_eq!(occupancy(&cand, &all_inside, &g), 7);
    }

    #[test]
    fn occupancy_matches_a_brute_force_containment_oracle() {
        use rand::{Rng, SeedableRng};
        let g = GripperModel::default();
        let pose = Pose::new(0.9, 0.1, -0.2, 0.3, Vector3::new(0.05, -0.02, 0.1), Frame::World);
        let cand = dummy_candidate(pose, 0.03);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vector3<f64>> = (0..500)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-0.1..0.2),
                    rng.random_range(-0.15..0.1),
                    rng.random_range(0.0..0.2),
                )
            })
            .collect();
        // Independent oracle: face-plane dot products against the box axes.
        let xw = pose.rotate_vector(&Vector3::x());
        let yw = pose.rotate_vector(&Vector3::y());
        let zw = pose.rotate_vector(&Vector3::z());
        let expected = pts
            .iter()
            .filter(|p| {
                let d = *p - pose.translation;
                d.dot(&xw).abs() <= 0.015 && d.dot(&yw).abs() <= 0.01 && d.dot(&zw).abs() <= 0.03
            })
            .count();
        let cloud = PointCloud::new(pts, Frame::World);
        assert_eq!(occupancy(&cand, &cloud, &g), expected);
    }

    #[test]
    fn fingers_below_the_table_are_gated() {
        let g = GripperModel::default();
        let shape = PrimitiveShape::sphere(0.03, Pose::identity(Frame::World)).unwrap();
        let shapes = BTreeMap::from([(1u8, shape)]);
        // Grasp pose at the table plane: the hull dips below.
        let cand = dummy_candidate(Pose::identity(Frame::World), 0.06);
        let empty = PointCloud::empty(Frame::World);
        let (_, s_col) = gate(&cand, &shapes[&1], &empty, None, &g, &RankConfig::default());
        assert_eq!(s_col, 0);

        // Lifted well above the table: clear.
        let lifted = dummy_candidate(
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.2), Frame::World),
            0.06,
        );
        let (s_dim, s_col) = gate(&lifted, &shapes[&1], &empty, None, &g, &RankConfig::default());
        assert_eq!((s_dim, s_col), (1, 1));
    }

    #[test]
    fn oversized_closing_dimension_zeroes_s_dim() {
        let g = GripperModel::default();
        let shape = PrimitiveShape::cuboid(0.05, 0.12, 0.05, Pose::identity(Frame::World)).unwrap();
        let cand = GraspCandidate {
            pose: Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.3), Frame::World),
            opening_width: 0.09,
            family: GraspFamily::CuboidFace { face: 5, orient: crate::grasp::FaceOrient::Vertical },
            free_params: BTreeMap::new(),
            shape_id: 1,
        };
        let shapes = BTreeMap::from([(1u8, shape)]);
        let empty = PointCloud::empty(Frame::World);
        let (s_dim, _) = gate(&cand, &shapes[&1], &empty, None, &g, &RankConfig::default());
        assert_eq!(s_dim, 0);
    }

    fn simple_scene(shape: PrimitiveShape) -> (BTreeMap<u8, PrimitiveShape>, BTreeMap<u8, PointCloud>, PointCloud) {
        let cloud = shape.surface_sample(300, 5).transformed(&shape.pose);
        let shapes = BTreeMap::from([(1u8, shape)]);
        let clouds = BTreeMap::from([(1u8, cloud.clone())]);
        (shapes, clouds, cloud)
    }

    #[test]
    fn single_clear_candidate_is_selected() {
        let g = GripperModel::default();
        let shape = PrimitiveShape::sphere(
            0.03,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.25), Frame::World),
        )
        .unwrap();
        let (shapes, clouds, scene_cloud) = simple_scene(shape);
        let cand = GraspCandidate {
            pose: Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.27), Frame::World),
            opening_width: 0.09,
            family: GraspFamily::SphereTop,
            free_params: BTreeMap::new(),
            shape_id: 1,
        };
        let scene = SceneForRanking {
            scene_cloud: &scene_cloud,
            scene_ids: None,
            instance_clouds: &clouds,
            shapes: &shapes,
        };
        let ranking = rank_and_select(
            &[cand],
            &scene,
            &g,
            &ScoringWeights::default(),
            &Workspace::default(),
            &RankConfig::default(),
        )
        .unwrap();
        assert_eq!(ranking.selected, Some(0));
        assert_eq!(ranking.grasps[0].rank, 1);
        assert!(ranking.grasps[0].gamma > 0.0);
    }

    #[test]
    fn gated_candidates_rank_last_with_zero_gamma() {
        let g = GripperModel::default();
        let shape = PrimitiveShape::sphere(
            0.03,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.25), Frame::World),
        )
        .unwrap();
        let (shapes, clouds, scene_cloud) = simple_scene(shape);
        let clear = GraspCandidate {
            pose: Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.27), Frame::World),
            opening_width: 0.09,
            family: GraspFamily::SphereTop,
            free_params: BTreeMap::new(),
            shape_id: 1,
        };
        let buried = GraspCandidate {
            // Same pose but below the table plane.
            pose: Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, -0.05), Frame::World),
            ..clear.clone()
        };
        let scene = SceneForRanking {
            scene_cloud: &scene_cloud,
            scene_ids: None,
            instance_clouds: &clouds,
            shapes: &shapes,
        };
        let ranking = rank_and_select(
            &[buried, clear],
            &scene,
            &g,
            &ScoringWeights::default(),
            &Workspace::default(),
            &RankConfig::default(),
        )
        .unwrap();
        assert_eq!(ranking.grasps.len(), 2);
        assert!(ranking.grasps[0].gamma > 0.0);
        assert_eq!(ranking.grasps[1].gamma, 0.0);
        assert_eq!(ranking.grasps[1].s_col, 0);
        assert_eq!(ranking.selected, Some(0));
    }

    #[test]
    fn duplicating_candidates_keeps_the_selected_pose() {
        let g = GripperModel::default();
        let shape = PrimitiveShape::sphere(
            0.03,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.05, 0.02, 0.25), Frame::World),
        )
        .unwrap();
        let (shapes, clouds, scene_cloud) = simple_scene(shape);
        let mk = |z: f64| GraspCandidate {
            pose: Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.05, 0.02, z), Frame::World),
            opening_width: 0.09,
            family: GraspFamily::SphereTop,
            free_params: BTreeMap::new(),
            shape_id: 1,
        };
        let base = vec![mk(0.27), mk(0.30), mk(0.33)];
        let mut doubled = base.clone();
        doubled.extend(base.iter().cloned());
        let scene = SceneForRanking {
            scene_cloud: &scene_cloud,
            scene_ids: None,
            instance_clouds: &clouds,
            shapes: &shapes,
        };
        let run = |cands: &[GraspCandidate]| {
            rank_and_select(
                cands,
                &scene,
                &g,
                &ScoringWeights::default(),
                &Workspace::default(),
                &RankConfig::default(),
            )
            .unwrap()
        };
        let a = run(&base);
        let b = run(&doubled);
        let pa = a.selected_grasp().unwrap().candidate.pose;
        let pb = b.selected_grasp().unwrap().candidate.pose;
        assert_eq!(pa, pb);
    }

    #[test]
    fn empty_candidate_list_is_an_error() {
        let shapes = BTreeMap::new();
        let clouds = BTreeMap::new();
        let cloud = PointCloud::empty(Frame::World);
        let scene = SceneForRanking {
            scene_cloud: &cloud,
            scene_ids: None,
            instance_clouds: &clouds,
            shapes: &shapes,
        };
        assert!(matches!(
            rank_and_select(
                &[],
                &scene,
                &GripperModel::default(),
                &ScoringWeights::default(),
                &Workspace::default(),
                &RankConfig::default(),
            ),
            Err(RankError::EmptyCandidates)
        ));
    }
}
