//! Robust PnP: RANSAC over four-point minimal samples, then Levenberg-Marquardt
//! refinement of the summed squared reprojection error on the inlier set.

use nalgebra::{Matrix6, Vector2, Vector3, Vector6};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::p3p::p4p;
use crate::error::{Error, Result};
use crate::geometry::{rodrigues, skew, CameraIntrinsics, Pose};

/// Minimal sample size of the solver.
pub const MIN_CORRESPONDENCES: usize = 4;

/// A world point and the pixel where it is observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub world_point: Vector3<f64>,
    pub pixel: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub threshold_px: f64,
    pub max_iterations: usize,
    pub confidence: f64,
    pub min_inlier_fraction: f64,
    /// Solutions with inlier RMSE above this are reported as degenerate.
    pub rmse_ceiling_px: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            threshold_px: 2.0,
            max_iterations: 512,
            confidence: 0.999,
            min_inlier_fraction: 0.5,
            rmse_ceiling_px: 8.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PnpResult {
    /// World-to-camera pose.
    pub pose: Pose,
    /// Indices into the input correspondences, ascending.
    pub inliers: Vec<usize>,
    /// Root-mean-square reprojection error over the inliers, in pixels.
    pub rmse_px: f64,
}

#[inline]
fn residual(k: &CameraIntrinsics, pose: &Pose, c: &Correspondence) -> Option<Vector2<f64>> {
    let p = k.project_camera(&pose.transform_point(&c.world_point))?;
    Some(Vector2::new(p.u - c.pixel.x, p.v - c.pixel.y))
}

/// RMS reprojection error of `pose` over `subset`; infinite if any point is behind the camera.
pub fn reprojection_rmse(
    correspondences: &[Correspondence],
    subset: &[usize],
    k: &CameraIntrinsics,
    pose: &Pose,
) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for &i in subset {
        match residual(k, pose, &correspondences[i]) {
            Some(r) => sum += r.norm_squared(),
            None => return f64::INFINITY,
        }
    }
    (sum / subset.len() as f64).sqrt()
}

fn inliers_of(
    correspondences: &[Correspondence],
    k: &CameraIntrinsics,
    pose: &Pose,
    threshold_px: f64,
) -> Vec<usize> {
    let t2 = threshold_px * threshold_px;
    correspondences
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            residual(k, pose, c)
                .filter(|r| r.norm_squared() < t2)
                .map(|_| i)
        })
        .collect()
}

fn so3_exp(w: &Vector3<f64>) -> nalgebra::Matrix3<f64> {
    let angle = w.norm();
    if angle < 1e-15 {
        return nalgebra::Matrix3::identity() + skew(w);
    }
    rodrigues(&(w / angle), angle).expect("normalized axis")
}

/// Levenberg-Marquardt on `Σ ‖x_i - π(K(R X_i + t))‖²` over `subset`.
///
/// Steps are only taken when they lower the cost, so the returned pose never
/// has a larger RMSE on `subset` than `initial`.
pub fn refine_pose(
    correspondences: &[Correspondence],
    subset: &[usize],
    k: &CameraIntrinsics,
    initial: &Pose,
) -> Pose {
    let cost = |pose: &Pose| {
        let mut s = 0.0;
        for &i in subset {
            match residual(k, pose, &correspondences[i]) {
                Some(r) => s += r.norm_squared(),
                None => return f64::INFINITY,
            }
        }
        s
    };
    let mut pose = *initial;
    let mut current = cost(&pose);
    if subset.len() < 3 || !current.is_finite() {
        return pose;
    }
    let mut lambda = 1e-3;
    for _ in 0..100 {
        let mut h = Matrix6::<f64>::zeros();
        let mut g = Vector6::<f64>::zeros();
        for &i in subset {
            let c = &correspondences[i];
            let pc = pose.transform_point(&c.world_point);
            let (x, y, z) = (pc.x, pc.y, pc.z);
            let iz = 1.0 / z;
            let r = Vector2::new(
                k.fx * x * iz + k.cx - c.pixel.x,
                k.fy * y * iz + k.cy - c.pixel.y,
            );
            // d(proj)/d(pc)
            let dp = nalgebra::Matrix2x3::new(
                k.fx * iz,
                0.0,
                -k.fx * x * iz * iz,
                0.0,
                k.fy * iz,
                -k.fy * y * iz * iz,
            );
            // d(pc)/d(omega, rho) for pc' = exp(omega) pc + rho
            let mut dpc = nalgebra::Matrix3x6::<f64>::zeros();
            dpc.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(&pc)));
            dpc.fixed_view_mut::<3, 3>(0, 3)
                .copy_from(&nalgebra::Matrix3::identity());
            let j = dp * dpc;
            h += j.transpose() * j;
            g += j.transpose() * r;
        }
        if g.amax() < 1e-14 {
            break;
        }
        let mut improved = false;
        for _ in 0..10 {
            let mut damped = h;
            for d in 0..6 {
                damped[(d, d)] += lambda * h[(d, d)].max(1e-12);
            }
            let Some(step) = damped.cholesky().map(|ch| ch.solve(&(-g))) else {
                lambda *= 10.0;
                continue;
            };
            let w = Vector3::new(step[0], step[1], step[2]);
            let rho = Vector3::new(step[3], step[4], step[5]);
            let dr = so3_exp(&w);
            let candidate = Pose::from_parts_unchecked(
                crate::geometry::nearest_rotation(&(dr * pose.rotation())),
                dr * pose.translation() + rho,
            );
            let next = cost(&candidate);
            if next < current {
                let rel = (current - next) / current.max(1e-300);
                pose = candidate;
                current = next;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                if rel < 1e-15 || step.amax() < 1e-15 {
                    return pose;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    pose
}

/// Robust pose from 3D-2D correspondences. Deterministic in `cfg.seed`.
pub fn solve_pnp_ransac(
    correspondences: &[Correspondence],
    intrinsics: &CameraIntrinsics,
    cfg: &RansacConfig,
) -> Result<PnpResult> {
    intrinsics.validate()?;
    let n = correspondences.len();
    if n < MIN_CORRESPONDENCES {
        return Err(Error::InsufficientCorrespondences {
            got: n,
            need: MIN_CORRESPONDENCES,
        });
    }
    if !(cfg.threshold_px > 0.0) || cfg.max_iterations == 0 {
        return Err(Error::InvalidParameter(
            "ransac needs a positive threshold and at least one iteration".into(),
        ));
    }
    let bearings: Vec<Vector3<f64>> = correspondences
        .iter()
        .map(|c| intrinsics.bearing(c.pixel.x, c.pixel.y).normalize())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Pose, usize)> = None;
    let mut needed = cfg.max_iterations;
    let mut iter = 0;
    while iter < needed.min(cfg.max_iterations) {
        iter += 1;
        let idx = sample(&mut rng, n, MIN_CORRESPONDENCES);
        let world = [0, 1, 2, 3].map(|i| correspondences[idx.index(i)].world_point);
        let rays = [0, 1, 2, 3].map(|i| bearings[idx.index(i)]);
        let Some(pose) = p4p(&world, &rays) else {
            continue;
        };
        let count = inliers_of(correspondences, intrinsics, &pose, cfg.threshold_px).len();
        if best.as_ref().is_none_or(|(_, c)| count > *c) {
            best = Some((pose, count));
            let w = count as f64 / n as f64;
            let denom = (1.0 - w.powi(MIN_CORRESPONDENCES as i32)).ln();
            if denom < 0.0 {
                let est = ((1.0 - cfg.confidence).ln() / denom).ceil();
                if est.is_finite() {
                    needed = (est.max(1.0) as usize).min(cfg.max_iterations);
                }
            } else if w >= 1.0 {
                needed = iter;
            }
        }
    }
    let Some((mut pose, _)) = best else {
        return Err(Error::DegeneratePose(
            "no minimal sample produced a pose".into(),
        ));
    };

    let min_inliers =
        ((cfg.min_inlier_fraction * n as f64).ceil() as usize).max(MIN_CORRESPONDENCES);
    let mut inliers = inliers_of(correspondences, intrinsics, &pose, cfg.threshold_px);
    for _ in 0..5 {
        if inliers.len() < MIN_CORRESPONDENCES {
            break;
        }
        pose = refine_pose(correspondences, &inliers, intrinsics, &pose);
        let next = inliers_of(correspondences, intrinsics, &pose, cfg.threshold_px);
        if next == inliers {
            break;
        }
        inliers = next;
    }
    if inliers.len() < min_inliers {
        return Err(Error::DegeneratePose(format!(
            "{} inliers of {n} is below the floor of {min_inliers}",
            inliers.len()
        )));
    }
    // make the reported pose optimal for the reported set
    pose = refine_pose(correspondences, &inliers, intrinsics, &pose);
    let rmse_px = reprojection_rmse(correspondences, &inliers, intrinsics, &pose);
    if !(rmse_px <= cfg.rmse_ceiling_px) {
        return Err(Error::DegeneratePose(format!(
            "inlier rmse {rmse_px:.3} px exceeds the {:.3} px ceiling",
            cfg.rmse_ceiling_px
        )));
    }
    let pose = Pose::new(*pose.rotation(), *pose.translation())
        .map_err(|e| Error::DegeneratePose(e.to_string()))?;
    Ok(PnpResult {
        pose,
        inliers,
        rmse_px,
    })
}
