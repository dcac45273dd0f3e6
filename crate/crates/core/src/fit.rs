//! Shape estimation from partial point clouds.
//!
//! PCA provides coarse axes; RANSAC draws minimal-sample hypotheses per class
//! (circumsphere for ball classes, axis + projected circle for tube classes,
//! plane/PCA frames + extent percentiles for the cuboid), scores them by
//! signed-distance inliers, and a damped Gauss-Newton pass over the inliers
//! polishes pose and dimensions.
//!
//! Hypothesis RNG is derived per iteration from the seed, so results do not
//! depend on thread count.

use crate::cloud::PointCloud;
use crate::geom::{Frame, Pose};
use crate::shapes::{PrimitiveShape, ShapeClass, ShapeParams, TUBE_WALL_RATIO};
use nalgebra::{DMatrix, DVector, Matrix3, UnitQuaternion, Unit, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("cloud has {got} points but class {class} needs at least {needed}")]
    InsufficientPoints {
        class: ShapeClass,
        needed: usize,
        got: usize,
    },
    #[error("degenerate covariance: points are effectively coincident")]
    DegenerateCovariance,
    #[error("no hypothesis reached the minimum inlier fraction (best {best:.3})")]
    NoConsensus { best: f64 },
    #[error("no shape class reached the minimum inlier fraction (best {best:.3})")]
    AllClassesFailed { best: f64 },
}

/// RANSAC and refinement knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacParams {
    /// Inlier band around the surface, meters.
    pub threshold: f64,
    /// Hypothesis budget; adaptive termination may stop earlier.
    pub iterations: usize,
    pub min_inlier_fraction: f64,
    /// Damped Gauss-Newton passes over the inliers.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            threshold: 0.003,
            iterations: 2000,
            min_inlier_fraction: 0.5,
            refine_steps: 10,
            seed: 0,
        }
    }
}

/// Fitted shape with consensus statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub shape: PrimitiveShape,
    pub inlier_count: usize,
    pub inlier_fraction: f64,
    pub rms_residual: f64,
}

/// Principal axes of a point set: ordered by descending spread, right-handed.
#[derive(Clone, Copy, Debug)]
pub struct PcaBasis {
    pub centroid: Vector3<f64>,
    pub axes: [Vector3<f64>; 3],
    /// Standard deviation along each axis.
    pub extents: [f64; 3],
}

/// Minimal sample size per class.
pub fn minimal_sample(class: ShapeClass) -> usize {
    match class {
        ShapeClass::Sphere | ShapeClass::SemiSphere => 4,
        ShapeClass::Cylinder | ShapeClass::Ring | ShapeClass::Stick => 6,
        ShapeClass::Cuboid => 9,
    }
}

/// Eigen-decomposition of the point covariance.
pub fn pca_axis(cloud: &PointCloud) -> Result<PcaBasis, FitError> {
    let pts = cloud.points();
    if pts.len() < 4 {
        return Err(FitError::InsufficientPoints {
            class: ShapeClass::Sphere,
            needed: 4,
            got: pts.len(),
        });
    }
    let centroid = cloud.centroid().unwrap();
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= pts.len() as f64;
    let eig = nalgebra::SymmetricEigen::new(cov);

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    if eig.eigenvalues[order[0]] < 1e-16 {
        return Err(FitError::DegenerateCovariance);
    }

    let mut axes = [Vector3::zeros(); 3];
    let mut extents = [0.0f64; 3];
    for (i, &k) in order.iter().enumerate() {
        axes[i] = eig.eigenvectors.column(k).into_owned();
        extents[i] = eig.eigenvalues[k].max(0.0).sqrt();
    }
    // Deterministic sign convention, then enforce a right-handed frame.
    for axis in axes.iter_mut().take(2) {
        let imax = (0..3).max_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs())).unwrap();
        if axis[imax] < 0.0 {
            *axis = -*axis;
        }
    }
    axes[2] = axes[0].cross(&axes[1]);
    Ok(PcaBasis { centroid, axes, extents })
}

fn splitmix(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn orthonormal_complement(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = axis.normalize();
    let helper = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = a.cross(&helper).normalize();
    let v = a.cross(&u);
    (u, v)
}

fn perturb_axis<R: Rng>(axis: &Vector3<f64>, max_angle: f64, rng: &mut R) -> Vector3<f64> {
    let (u, v) = orthonormal_complement(axis);
    let phi = rng.random_range(0.0..max_angle);
    let alpha = rng.random_range(0.0..std::f64::consts::TAU);
    let rot_axis = Unit::new_normalize(u * alpha.cos() + v * alpha.sin());
    UnitQuaternion::from_axis_angle(&rot_axis, phi) * axis.normalize()
}

fn circumsphere(p: [&Vector3<f64>; 4]) -> Option<(Vector3<f64>, f64)> {
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for i in 0..3 {
        let row = 2.0 * (p[i + 1] - p[0]);
        a.set_row(i, &row.transpose());
        b[i] = p[i + 1].norm_squared() - p[0].norm_squared();
    }
    let center = a.lu().solve(&b)?;
    let r = (p[0] - center).norm();
    (r.is_finite() && r > 1e-4 && r < 1.0).then_some((center, r))
}

fn circumcircle_2d(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<((f64, f64), f64)> {
    let d = 2.0 * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
    if d.abs() < 1e-12 {
        return None;
    }
    let a2 = a.0 * a.0 + a.1 * a.1;
    let b2 = b.0 * b.0 + b.1 * b.1;
    let c2 = c.0 * c.0 + c.1 * c.1;
    let ux = (a2 * (b.1 - c.1) + b2 * (c.1 - a.1) + c2 * (a.1 - b.1)) / d;
    let uy = (a2 * (c.0 - b.0) + b2 * (a.0 - c.0) + c2 * (b.0 - a.0)) / d;
    let r = ((a.0 - ux).powi(2) + (a.1 - uy).powi(2)).sqrt();
    (r.is_finite() && r > 1e-4 && r < 1.0).then_some(((ux, uy), r))
}

fn percentile_span(values: &mut [f64], lo_frac: f64, hi_frac: f64) -> (f64, f64) {
    let n = values.len();
    let lo_idx = ((lo_frac * (n - 1) as f64).round() as usize).min(n - 1);
    let hi_idx = ((hi_frac * (n - 1) as f64).round() as usize).min(n - 1);
    let (_, lo, _) = values.select_nth_unstable_by(lo_idx, f64::total_cmp);
    let lo = *lo;
    let (_, hi, _) = values.select_nth_unstable_by(hi_idx, f64::total_cmp);
    (lo, *hi)
}

fn sample_distinct<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(k);
    let mut guard = 0;
    while idx.len() < k && guard < 64 {
        guard += 1;
        let cand = rng.random_range(0..n);
        if !idx.contains(&cand) {
            idx.push(cand);
        }
    }
    idx
}

fn hypothesize<R: Rng>(
    class: ShapeClass,
    pts: &[Vector3<f64>],
    pca: &PcaBasis,
    rng: &mut R,
) -> Option<PrimitiveShape> {
    let id_pose = Pose::identity(Frame::World);
    match class {
        ShapeClass::Sphere => {
            let idx = sample_distinct(rng, pts.len(), 4);
            if idx.len() < 4 {
                return None;
            }
            let (center, r) = circumsphere([&pts[idx[0]], &pts[idx[1]], &pts[idx[2]], &pts[idx[3]]])?;
            PrimitiveShape::sphere(r, Pose::from_parts(UnitQuaternion::identity(), center, id_pose.frame)).ok()
        }
        ShapeClass::SemiSphere => {
            let idx = sample_distinct(rng, pts.len(), 4);
            if idx.len() < 4 {
                return None;
            }
            let (center, r) = circumsphere([&pts[idx[0]], &pts[idx[1]], &pts[idx[2]], &pts[idx[3]]])?;
            // Dome direction: toward the visible mass.
            let axis = pca.centroid - center;
            if axis.norm() < 1e-9 {
                return None;
            }
            let rot = UnitQuaternion::rotation_between(&Vector3::z(), &axis)
                .unwrap_or_else(UnitQuaternion::identity);
            PrimitiveShape::semi_sphere(r, Pose::from_parts(rot, center, id_pose.frame)).ok()
        }
        ShapeClass::Cylinder | ShapeClass::Ring | ShapeClass::Stick => {
            // Axis route: a cap plane from 3 points, or a perturbed PCA axis.
            let axis = if rng.random::<bool>() {
                let idx = sample_distinct(rng, pts.len(), 3);
                if idx.len() < 3 {
                    return None;
                }
                let n = (pts[idx[1]] - pts[idx[0]]).cross(&(pts[idx[2]] - pts[idx[0]]));
                if n.norm() < 1e-10 {
                    return None;
                }
                n.normalize()
            } else {
                let base = if rng.random::<bool>() { pca.axes[0] } else { pca.axes[2] };
                perturb_axis(&base, 25f64.to_radians(), rng)
            };
            let (u, v) = orthonormal_complement(&axis);

            let idx = sample_distinct(rng, pts.len(), 3);
            if idx.len() < 3 {
                return None;
            }
            let proj = |p: &Vector3<f64>| (u.dot(p), v.dot(p));
            let ((cu, cv), radius) =
                circumcircle_2d(proj(&pts[idx[0]]), proj(&pts[idx[1]]), proj(&pts[idx[2]]))?;
            // The sampled wall may be the inner or the outer one.
            let r_in = if rng.random::<bool>() { radius } else { radius / TUBE_WALL_RATIO };

            let mut z: Vec<f64> = pts.iter().map(|p| axis.dot(p)).collect();
            let (z_lo, z_hi) = percentile_span(&mut z, 0.025, 0.975);
            let h = (z_hi - z_lo).max(2e-3);
            let center = u * cu + v * cv + axis * (0.5 * (z_lo + z_hi));
            let rot = UnitQuaternion::rotation_between(&Vector3::z(), &axis)
                .unwrap_or_else(UnitQuaternion::identity);
            PrimitiveShape::tube(class, r_in, h, Pose::from_parts(rot, center, id_pose.frame)).ok()
        }
        ShapeClass::Cuboid => {
            let frame = if rng.random::<bool>() {
                // Two face planes from 3 + 3 points.
                let i1 = sample_distinct(rng, pts.len(), 3);
                let i2 = sample_distinct(rng, pts.len(), 3);
                if i1.len() < 3 || i2.len() < 3 {
                    return None;
                }
                let n1 = (pts[i1[1]] - pts[i1[0]]).cross(&(pts[i1[2]] - pts[i1[0]]));
                let n2 = (pts[i2[1]] - pts[i2[0]]).cross(&(pts[i2[2]] - pts[i2[0]]));
                if n1.norm() < 1e-10 || n2.norm() < 1e-10 {
                    return None;
                }
                let n1 = n1.normalize();
                let mut n2 = n2 - n1 * n1.dot(&n2);
                if n2.norm() < 0.2 {
                    return None;
                }
                n2 = n2.normalize();
                [n1, n2, n1.cross(&n2)]
            } else {
                let delta = perturb_axis(&Vector3::z(), 30f64.to_radians(), rng);
                let rot = UnitQuaternion::rotation_between(&Vector3::z(), &delta)
                    .unwrap_or_else(UnitQuaternion::identity);
                [rot * pca.axes[0], rot * pca.axes[1], rot * pca.axes[2]]
            };
            let mut spans = [(0.0, 0.0); 3];
            for (i, axis) in frame.iter().enumerate() {
                let mut proj: Vec<f64> = pts.iter().map(|p| axis.dot(p)).collect();
                spans[i] = percentile_span(&mut proj, 0.025, 0.975);
            }
            let dims: Vec<f64> = spans.iter().map(|(lo, hi)| (hi - lo).max(2e-3)).collect();
            let center = frame[0] * (0.5 * (spans[0].0 + spans[0].1))
                + frame[1] * (0.5 * (spans[1].0 + spans[1].1))
                + frame[2] * (0.5 * (spans[2].0 + spans[2].1));
            let m = Matrix3::from_columns(&frame);
            let rot = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix(&m));
            // Columns map to (w, d, h) = dims along local x, y, z.
            PrimitiveShape::cuboid(dims[2], dims[0], dims[1], Pose::from_parts(rot, center, id_pose.frame)).ok()
        }
    }
}

fn count_inliers(shape: &PrimitiveShape, pts: &[Vector3<f64>], thr: f64) -> (usize, f64) {
    let inv = shape.pose.inverse();
    let mut count = 0usize;
    let mut sumsq = 0.0f64;
    for p in pts {
        let d = shape.signed_distance_local(&inv.transform_point(p));
        if d.abs() < thr {
            count += 1;
            sumsq += d * d;
        }
    }
    (count, sumsq)
}

// ---- Damped Gauss-Newton over signed-distance residuals -------------------

struct ThetaSpec {
    class: ShapeClass,
    base_rotation: UnitQuaternion<f64>,
    with_rotation: bool,
    dim_count: usize,
}

impl ThetaSpec {
    fn for_shape(shape: &PrimitiveShape) -> (ThetaSpec, DVector<f64>) {
        let (with_rotation, dims): (bool, Vec<f64>) = match shape.params {
            ShapeParams::Ball { r } => (shape.class == ShapeClass::SemiSphere, vec![r]),
            ShapeParams::Tube { r_in, h, .. } => (true, vec![r_in, h]),
            ShapeParams::Box { h, w, d } => (true, vec![w, d, h]),
        };
        let rot_len = if with_rotation { 3 } else { 0 };
        let mut theta = DVector::zeros(3 + rot_len + dims.len());
        for i in 0..3 {
            theta[i] = shape.pose.translation[i];
        }
        for (i, d) in dims.iter().enumerate() {
            theta[3 + rot_len + i] = *d;
        }
        (
            ThetaSpec {
                class: shape.class,
                base_rotation: shape.pose.rotation,
                with_rotation,
                dim_count: dims.len(),
            },
            theta,
        )
    }

    fn build(&self, theta: &DVector<f64>) -> PrimitiveShape {
        let translation = Vector3::new(theta[0], theta[1], theta[2]);
        let rot_len = if self.with_rotation { 3 } else { 0 };
        let rotation = if self.with_rotation {
            let delta = Vector3::new(theta[3], theta[4], theta[5]);
            self.base_rotation * UnitQuaternion::from_scaled_axis(delta)
        } else {
            self.base_rotation
        };
        let dim = |i: usize| theta[3 + rot_len + i].abs().max(1e-5);
        let pose = Pose::from_parts(rotation, translation, Frame::World);
        let params = match self.class {
            ShapeClass::Sphere | ShapeClass::SemiSphere => ShapeParams::Ball { r: dim(0) },
            ShapeClass::Cylinder | ShapeClass::Ring | ShapeClass::Stick => ShapeParams::Tube {
                r_in: dim(0),
                r_out: TUBE_WALL_RATIO * dim(0),
                h: dim(1),
            },
            ShapeClass::Cuboid => ShapeParams::Box {
                w: dim(0),
                d: dim(1),
                h: dim(2),
            },
        };
        PrimitiveShape { class: self.class, params, pose }
    }
}

fn residuals(shape: &PrimitiveShape, pts: &[Vector3<f64>], out: &mut DVector<f64>) {
    let inv = shape.pose.inverse();
    for (i, p) in pts.iter().enumerate() {
        out[i] = shape.signed_distance_local(&inv.transform_point(p));
    }
}

/// Least-squares polish of pose and dimensions over the given points.
fn refine(shape: &PrimitiveShape, pts: &[Vector3<f64>], steps: usize) -> PrimitiveShape {
    if pts.is_empty() || steps == 0 {
        return *shape;
    }
    let (spec, mut theta) = ThetaSpec::for_shape(shape);
    let n = pts.len();
    let k = theta.len();
    let mut r = DVector::zeros(n);
    let mut r_probe = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, k);
    let fd = 1e-6;

    residuals(&spec.build(&theta), pts, &mut r);
    let mut sse = r.norm_squared();

    for _ in 0..steps {
        for j in 0..k {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += fd;
            tm[j] -= fd;
            residuals(&spec.build(&tp), pts, &mut r_probe);
            let rp = r_probe.clone();
            residuals(&spec.build(&tm), pts, &mut r_probe);
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r_probe[i]) / (2.0 * fd);
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        // Small damping also absorbs rotational gauge freedom about symmetry
        // axes.
        let mut lambda = 1e-9 * (1.0 + jtj.trace() / k as f64);
        let mut improved = false;
        for _ in 0..6 {
            let mut lhs = jtj.clone();
            for d in 0..k {
                lhs[(d, d)] += lambda;
            }
            if let Some(chol) = lhs.cholesky() {
                let step = chol.solve(&jtr);
                let cand = &theta - &step;
                residuals(&spec.build(&cand), pts, &mut r_probe);
                let cand_sse = r_probe.norm_squared();
                if cand_sse < sse {
                    theta = cand;
                    std::mem::swap(&mut r, &mut r_probe);
                    sse = cand_sse;
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    spec.build(&theta)
}

/// RANSAC + refinement without the consensus gate; used by the classifier
/// fallback, which needs below-threshold fractions for comparison.
fn ransac_core(
    cloud: &PointCloud,
    class: ShapeClass,
    params: &RansacParams,
) -> Result<FitResult, FitError> {
    let pts = cloud.points();
    let needed = minimal_sample(class);
    if pts.len() < needed {
        return Err(FitError::InsufficientPoints { class, needed, got: pts.len() });
    }
    let pca = pca_axis(cloud)?;
    let thr = params.threshold;

    struct Best {
        count: usize,
        sumsq: f64,
        iter: usize,
        shape: PrimitiveShape,
    }
    let better = |a: &Best, b: &Best| {
        (b.count, std::cmp::Reverse((b.sumsq, b.iter))) > (a.count, std::cmp::Reverse((a.sumsq, a.iter)))
    };

    let mut best: Option<Best> = None;
    const CHUNK: usize = 128;
    const MIN_ITERS: usize = 256;
    let mut done = 0usize;
    while done < params.iterations {
        let upto = (done + CHUNK).min(params.iterations);
        let chunk: Vec<Best> = (done..upto)
            .into_par_iter()
            .filter_map(|it| {
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix(params.seed, it as u64));
                let shape = hypothesize(class, pts, &pca, &mut rng)?;
                let (count, sumsq) = count_inliers(&shape, pts, thr);
                (count >= needed).then_some(Best { count, sumsq, iter: it, shape })
            })
            .collect();
        for cand in chunk {
            if best.as_ref().map_or(true, |b| better(b, &cand)) {
                best = Some(cand);
            }
        }
        done = upto;
        if done >= MIN_ITERS {
            if let Some(b) = &best {
                let w = b.count as f64 / pts.len() as f64;
                let p_good = w.powi(needed as i32);
                if p_good > 1e-9 {
                    let required = (4.0 * (1e-3f64.ln() / (1.0 - p_good).max(1e-12).ln())).ceil() as usize;
                    if done >= required {
                        break;
                    }
                }
            }
        }
    }

    let best = best.ok_or(FitError::NoConsensus { best: 0.0 })?;

    // Refine on the consensus set, then recount against the polished shape.
    let inv = best.shape.pose.inverse();
    let inliers: Vec<Vector3<f64>> = pts
        .iter()
        .filter(|p| best.shape.signed_distance_local(&inv.transform_point(p)).abs() < thr)
        .copied()
        .collect();
    let refined = refine(&best.shape, &inliers, params.refine_steps);
    let (count, sumsq) = count_inliers(&refined, pts, thr);

    // Keep whichever consensus is larger; refinement on a bad set must not win.
    let (shape, count, sumsq) = if count >= best.count {
        (refined, count, sumsq)
    } else {
        (best.shape, best.count, best.sumsq)
    };
    Ok(FitResult {
        shape,
        inlier_count: count,
        inlier_fraction: count as f64 / pts.len() as f64,
        rms_residual: if count > 0 { (sumsq / count as f64).sqrt() } else { 0.0 },
    })
}

/// Estimate pose and dimensions of `class` from a segmented partial cloud.
pub fn ransac_fit(
    cloud: &PointCloud,
    class: ShapeClass,
    params: &RansacParams,
) -> Result<FitResult, FitError> {
    let result = ransac_core(cloud, class, params)?;
    if result.inlier_fraction < params.min_inlier_fraction {
        return Err(FitError::NoConsensus { best: result.inlier_fraction });
    }
    Ok(result)
}

/// Fit the hypothesized class; when its consensus is too weak, fall back to
/// trying every class and return the strongest fit.
pub fn classify_and_fit(
    cloud: &PointCloud,
    hypothesized: ShapeClass,
    params: &RansacParams,
) -> Result<FitResult, FitError> {
    let primary = ransac_core(cloud, hypothesized, params)?;
    if primary.inlier_fraction >= params.min_inlier_fraction {
        return Ok(primary);
    }
    let mut best = primary;
    for class in ShapeClass::ALL {
        if class == hypothesized {
            continue;
        }
        let Ok(candidate) = ransac_core(cloud, class, params) else {
            continue;
        };
        let wins = candidate.inlier_fraction > best.inlier_fraction
            || (candidate.inlier_fraction == best.inlier_fraction
                && candidate.rms_residual < best.rms_residual);
        if wins {
            best = candidate;
        }
    }
    if best.inlier_fraction < params.min_inlier_fraction {
        return Err(FitError::AllClassesFailed { best: best.inlier_fraction });
    }
    Ok(best)
}

/// Discrepancy between a fitted shape and ground truth, symmetry-aware.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FitDiscrepancy {
    /// Largest relative dimension error.
    pub max_param_rel: f64,
    /// Symmetry-folded axis angle error, degrees.
    pub axis_deg: f64,
    /// Canonical-origin distance, meters.
    pub center_dist: f64,
}

fn folded_angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let c = (a.normalize().dot(&b.normalize())).clamp(-1.0, 1.0).abs();
    c.acos().to_degrees()
}

/// Compare a fitted shape against truth. Cuboid axes are matched over all
/// axis permutations (dimensions follow their axes); tube and semi-sphere
/// errors compare the symmetry axis; spheres have no axis error.
pub fn fit_discrepancy(truth: &PrimitiveShape, fitted: &PrimitiveShape) -> FitDiscrepancy {
    let center_dist = (truth.pose.translation - fitted.pose.translation).norm();
    let t_rot = truth.pose.rotation;
    let f_rot = fitted.pose.rotation;
    match (truth.params, fitted.params) {
        (ShapeParams::Ball { r: rt }, ShapeParams::Ball { r: rf }) => {
            let axis_deg = if truth.class == ShapeClass::SemiSphere {
                let ta = t_rot * Vector3::z();
                let fa = f_rot * Vector3::z();
                (ta.dot(&fa).clamp(-1.0, 1.0)).acos().to_degrees()
            } else {
                0.0
            };
            FitDiscrepancy {
                max_param_rel: (rf - rt).abs() / rt,
                axis_deg,
                center_dist,
            }
        }
        (
            ShapeParams::Tube { r_in: rt, h: ht, .. },
            ShapeParams::Tube { r_in: rf, h: hf, .. },
        ) => FitDiscrepancy {
            max_param_rel: ((rf - rt).abs() / rt).max((hf - ht).abs() / ht),
            axis_deg: folded_angle_deg(&(t_rot * Vector3::z()), &(f_rot * Vector3::z())),
            center_dist,
        },
        (ShapeParams::Box { h: ht, w: wt, d: dt }, ShapeParams::Box { h: hf, w: wf, d: df }) => {
            let t_axes = [t_rot * Vector3::x(), t_rot * Vector3::y(), t_rot * Vector3::z()];
            let f_axes = [f_rot * Vector3::x(), f_rot * Vector3::y(), f_rot * Vector3::z()];
            let t_dims = [wt, dt, ht];
            let f_dims = [wf, df, hf];
            let perms: [[usize; 3]; 6] =
                [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let mut best = FitDiscrepancy {
                max_param_rel: f64::INFINITY,
                axis_deg: f64::INFINITY,
                center_dist,
            };
            for perm in perms {
                let mut param = 0.0f64;
                let mut axis = 0.0f64;
                for i in 0..3 {
                    param = param.max((f_dims[perm[i]] - t_dims[i]).abs() / t_dims[i]);
                    axis = axis.max(folded_angle_deg(&f_axes[perm[i]], &t_axes[i]));
                }
                if param < best.max_param_rel
                    || (param == best.max_param_rel && axis < best.axis_deg)
                {
                    best.max_param_rel = param;
                    best.axis_deg = axis;
                }
            }
            best
        }
        // Class mismatch: report unit-scale discrepancy.
        _ => FitDiscrepancy {
            max_param_rel: f64::INFINITY,
            axis_deg: 180.0,
            center_dist,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Frame, Pose};
    use rand::Rng;

    fn id() -> Pose {
        Pose::identity(Frame::World)
    }

    fn with_outliers(cloud: &PointCloud, fraction: f64, half_box: f64, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = cloud.centroid().unwrap();
        let n_out = (cloud.len() as f64 * fraction) as usize;
        let mut pts = cloud.points().to_vec();
        for _ in 0..n_out {
            pts.push(center + Vector3::new(
                rng.random_range(-half_box..=half_box),
                rng.random_range(-half_box..=half_box),
                rng.random_range(-half_box..=half_box),
            ));
        }
        PointCloud::new(pts, cloud.frame)
    }

    #[test]
    fn pca_of_a_line_yields_the_line_direction() {
        let pts: Vec<Vector3<f64>> = (0..50)
            .map(|i| Vector3::new(0.0, 0.0, i as f64 * 0.01))
            .collect();
        let basis = pca_axis(&PointCloud::new(pts, Frame::World)).unwrap();
        assert!(basis.axes[0].z.abs() > 1.0 - 1e-9);
    }

    #[test]
    fn pca_of_coincident_points_is_degenerate() {
        let pts = vec![Vector3::new(0.1, 0.2, 0.3); 10];
        assert!(matches!(
            pca_axis(&PointCloud::new(pts, Frame::World)),
            Err(FitError::DegenerateCovariance)
        ));
    }

    #[test]
    fn pca_recovers_a_tall_cylinder_axis() {
        let tube = PrimitiveShape::tube(ShapeClass::Stick, 0.01, 0.09, id()).unwrap();
        let cloud = tube.surface_sample(1500, 2);
        let basis = pca_axis(&cloud).unwrap();
        let angle = basis.axes[0].dot(&Vector3::z()).abs().clamp(0.0, 1.0).acos().to_degrees();
        assert!(angle < 5.0, "axis is {angle} degrees off");
    }

    #[test]
    fn pca_of_sphere_samples_is_isotropic() {
        let sphere = PrimitiveShape::sphere(0.04, id()).unwrap();
        let basis = pca_axis(&sphere.surface_sample(4000, 3)).unwrap();
        assert!(basis.extents[0] / basis.extents[2] < 1.1);
    }

    #[test]
    fn noise_free_sphere_recovers_center_and_radius() {
        let truth = PrimitiveShape::sphere(
            0.03,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.05, -0.02, 0.4), Frame::World),
        )
        .unwrap();
        let cloud = truth.surface_sample(1000, 7).transformed(&truth.pose);
        let fit = ransac_fit(&cloud, ShapeClass::Sphere, &RansacParams::default()).unwrap();
        let d = fit_discrepancy(&truth, &fit.shape);
        assert!(d.max_param_rel * 0.03 < 1e-3, "radius error {}", d.max_param_rel * 0.03);
        assert!(d.center_dist < 1e-3, "center error {}", d.center_dist);
        assert!(fit.inlier_fraction > 0.99);
    }

    #[test]
    fn sphere_fit_survives_uniform_outliers() {
        let truth = PrimitiveShape::sphere(
            0.03,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.3), Frame::World),
        )
        .unwrap();
        let clean = truth.surface_sample(1000, 8).transformed(&truth.pose);
        let noisy = with_outliers(&clean, 0.20, 0.1, 9);
        let fit = ransac_fit(&noisy, ShapeClass::Sphere, &RansacParams::default()).unwrap();
        let d = fit_discrepancy(&truth, &fit.shape);
        assert!(d.max_param_rel * 0.03 < 1e-3);
        assert!(d.center_dist < 1e-3);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let cloud = PointCloud::new(
            vec![Vector3::zeros(), Vector3::x(), Vector3::y()],
            Frame::World,
        );
        assert!(matches!(
            ransac_fit(&cloud, ShapeClass::Sphere, &RansacParams::default()),
            Err(FitError::InsufficientPoints { needed: 4, got: 3, .. })
        ));
    }

    #[test]
    fn empty_cloud_is_an_error() {
        let cloud = PointCloud::empty(Frame::World);
        assert!(classify_and_fit(&cloud, ShapeClass::Sphere, &RansacParams::default()).is_err());
    }

    #[test]
    fn labeled_semi_sphere_fits_with_high_consensus() {
        let truth = PrimitiveShape::semi_sphere(
            0.035,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.02, 0.01, 0.1), Frame::World),
        )
        .unwrap();
        let cloud = truth.surface_sample(900, 11).transformed(&truth.pose);
        let fit = classify_and_fit(&cloud, ShapeClass::SemiSphere, &RansacParams::default()).unwrap();
        assert_eq!(fit.shape.class, ShapeClass::SemiSphere);
        assert!(fit.inlier_fraction > 0.9);
        let d = fit_discrepancy(&truth, &fit.shape);
        assert!(d.max_param_rel < 0.05);
        assert!(d.axis_deg < 5.0);
    }

    #[test]
    fn mislabeled_semi_sphere_falls_back_to_the_right_class() {
        let truth = PrimitiveShape::semi_sphere(
            0.035,
            Pose::new(1.0, 0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 0.1), Frame::World),
        )
        .unwrap();
        let cloud = truth.surface_sample(900, 13).transformed(&truth.pose);
        let fit = classify_and_fit(&cloud, ShapeClass::Cuboid, &RansacParams::default()).unwrap();
        assert_eq!(fit.shape.class, ShapeClass::SemiSphere);
    }

    #[test]
    fn tube_fit_recovers_radius_and_height() {
        let truth = PrimitiveShape::tube(
            ShapeClass::Cylinder,
            0.05,
            0.08,
            Pose::from_parts(
                UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.3),
                Vector3::new(0.0, 0.1, 0.2),
                Frame::World,
            ),
        )
        .unwrap();
        let cloud = truth.surface_sample(1200, 17).transformed(&truth.pose);
        let fit = ransac_fit(&cloud, ShapeClass::Cylinder, &RansacParams::default()).unwrap();
        let d = fit_discrepancy(&truth, &fit.shape);
        assert!(d.max_param_rel < 0.02, "params off by {}", d.max_param_rel);
        assert!(d.axis_deg < 2.0, "axis off by {}", d.axis_deg);
        if let ShapeParams::Tube { r_in, r_out, .. } = fit.shape.params {
            assert!((r_out / r_in - TUBE_WALL_RATIO).abs() < 1e-12);
        }
    }

    #[test]
    fn cuboid_fit_recovers_dims_up_to_axis_permutation() {
        let truth = PrimitiveShape::cuboid(
            0.03,
            0.06,
            0.09,
            Pose::from_parts(
                UnitQuaternion::from_euler_angles(0.2, -0.1, 0.5),
                Vector3::new(0.05, 0.0, 0.15),
                Frame::World,
            ),
        )
        .unwrap();
        let cloud = truth.surface_sample(1500, 19).transformed(&truth.pose);
        let fit = ransac_fit(&cloud, ShapeClass::Cuboid, &RansacParams::default()).unwrap();
        let d = fit_discrepancy(&truth, &fit.shape);
        assert!(d.max_param_rel < 0.05, "params off by {}", d.max_param_rel);
        assert!(d.axis_deg < 5.0, "axes off by {}", d.axis_deg);
    }

    #[test]
    fn shrinking_the_threshold_never_gains_inliers() {
        let truth = PrimitiveShape::sphere(0.03, id()).unwrap();
        let cloud = with_outliers(&truth.surface_sample(400, 23), 0.3, 0.08, 5);
        let mut last = usize::MAX;
        for thr in [0.01, 0.005, 0.003, 0.001, 0.0005] {
            let (count, _) = count_inliers(&truth, cloud.points(), thr);
            assert!(count <= last);
            last = count;
        }
    }

    #[test]
    fn rigid_motion_of_the_cloud_moves_the_fit_with_it() {
        let truth = PrimitiveShape::tube(ShapeClass::Stick, 0.01, 0.07, id()).unwrap();
        let cloud = truth.surface_sample(900, 29);
        let params = RansacParams::default();
        let base = ransac_fit(&cloud, ShapeClass::Stick, &params).unwrap();

        let motion = Pose::from_parts(
            UnitQuaternion::from_euler_angles(0.4, -0.2, 0.9),
            Vector3::new(0.1, -0.05, 0.2),
            Frame::World,
        );
        let moved_cloud = cloud.transformed(&motion);
        let moved = ransac_fit(&moved_cloud, ShapeClass::Stick, &params).unwrap();

        let expected = truth.with_pose(motion.compose(&base.shape.pose).unwrap());
        let d = fit_discrepancy(&expected, &moved.shape);
        assert!(d.max_param_rel < 1e-6, "params drifted {}", d.max_param_rel);
        assert!(d.axis_deg < 0.01, "axis drifted {}", d.axis_deg);
        assert!(d.center_dist < 1e-6, "center drifted {}", d.center_dist);
    }
}
