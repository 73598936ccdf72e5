//! Centroid-anchored camera rotation and the checks that keep rotated views usable.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Pointmap;
use crate::geometry::{
    apply_rotation_to_pose, rodrigues, rotation_about_centroid, CameraIntrinsics, Pose,
};
use crate::grid::Grid;

/// Rotation angle distribution `U(θ_min, θ_max) + N(0, σ²)`, clamped to `[0°, 180°]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationSampler {
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub sigma_deg: f64,
}

impl Default for RotationSampler {
    fn default() -> Self {
        Self {
            theta_min_deg: 30.0,
            theta_max_deg: 90.0,
            sigma_deg: 5.0,
        }
    }
}

impl RotationSampler {
    pub fn new(theta_min_deg: f64, theta_max_deg: f64, sigma_deg: f64) -> Result<Self> {
        let s = Self {
            theta_min_deg,
            theta_max_deg,
            sigma_deg,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.theta_min_deg
            && self.theta_min_deg <= self.theta_max_deg
            && self.theta_max_deg <= 180.0
            && self.sigma_deg >= 0.0)
        {
            return Err(Error::Config(format!(
                "rotation range must satisfy 0 <= min <= max <= 180 with sigma >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Random unit axis (normalized Gaussian) and angle in radians.
    pub fn sample(&self, rng: &mut impl Rng) -> (Vector3<f64>, f64) {
        let axis = loop {
            let v = Vector3::new(
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            );
            let n: f64 = v.norm();
            if n > 1e-6 {
                break v / n;
            }
        };
        let base = if self.theta_max_deg > self.theta_min_deg {
            rng.random_range(self.theta_min_deg..=self.theta_max_deg)
        } else {
            self.theta_min_deg
        };
        let jitter = if self.sigma_deg > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            z * self.sigma_deg
        } else {
            0.0
        };
        let angle = (base + jitter).clamp(0.0, 180.0).to_radians();
        (axis, angle)
    }
}

/// Scores of one candidate view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewValidity {
    pub front_cov: f64,
    pub img_cov: f64,
    pub accepted: bool,
}

impl ViewValidity {
    pub fn combined(&self) -> f64 {
        self.front_cov * self.img_cov
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityConfig {
    /// Maximum angle of incidence for a point to count as front-facing.
    pub theta_valid_deg: f64,
    pub front_floor: f64,
    pub img_floor: f64,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        Self {
            theta_valid_deg: 100.0,
            front_floor: 0.6,
            img_floor: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotConfig {
    pub enabled: bool,
    pub sampler: RotationSampler,
    pub candidates: usize,
    pub validity: ValidityConfig,
}

impl Default for RotConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            sampler: RotationSampler::default(),
            candidates: 16,
            validity: ValidityConfig::default(),
        }
    }
}

/// Fraction of points whose normal makes an angle below `θ_valid` with the
/// direction to the camera center.
pub fn front_coverage(
    points: &[Vector3<f64>],
    normals: &[Vector3<f64>],
    camera_center: &Vector3<f64>,
    theta_valid_deg: f64,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::UndefinedScore(
            "front coverage of an empty point set".into(),
        ));
    }
    if points.len() != normals.len() {
        return Err(Error::InvalidParameter(format!(
            "{} points but {} normals",
            points.len(),
            normals.len()
        )));
    }
    let cos_valid = theta_valid_deg.to_radians().cos();
    let front = points
        .iter()
        .zip(normals)
        .filter(|(p, n)| {
            let d = camera_center - *p;
            let len = d.norm();
            len > 0.0 && n.dot(&d) / len > cos_valid
        })
        .count();
    Ok(front as f64 / points.len() as f64)
}

/// Fraction of the `width x height` image covered by visible points: a point
/// counts when it projects inside the image and came from a valid depth sample.
pub fn image_coverage(
    points: &[Vector3<f64>],
    source_valid: &[bool],
    pose: &Pose,
    intrinsics: &CameraIntrinsics,
    width: u32,
    height: u32,
) -> f64 {
    let (w, h) = (width as f64, height as f64);
    let hits = points
        .iter()
        .zip(source_valid)
        .filter(|(p, &ok)| {
            ok && intrinsics
                .project_camera(&pose.transform_point(p))
                .is_some_and(|pr| pr.u >= 0.0 && pr.u < w && pr.v >= 0.0 && pr.v < h)
        })
        .count();
    hits as f64 / (w * h)
}

/// Per-pixel unit normals from central differences of the point grid,
/// oriented toward `source_center`. Pixels without a valid neighbor in
/// either direction get `None`.
pub fn estimate_normals(
    pointmap: &Pointmap,
    source_center: &Vector3<f64>,
) -> Grid<Option<Vector3<f64>>> {
    let (w, h) = (pointmap.width(), pointmap.height());
    let valid = |x: i64, y: i64| pointmap.valid.checked(x, y).copied().unwrap_or(false);
    let pt = |x: i64, y: i64| *pointmap.points.get(x as usize, y as usize);
    let tangent = |x: i64, y: i64, dx: i64, dy: i64| -> Option<Vector3<f64>> {
        let fwd = valid(x + dx, y + dy);
        let bwd = valid(x - dx, y - dy);
        match (fwd, bwd) {
            (true, true) => Some(pt(x + dx, y + dy) - pt(x - dx, y - dy)),
            (true, false) => Some(pt(x + dx, y + dy) - pt(x, y)),
            (false, true) => Some(pt(x, y) - pt(x - dx, y - dy)),
            (false, false) => None,
        }
    };
    Grid::from_fn(w, h, |x, y| {
        let (xi, yi) = (x as i64, y as i64);
        if !valid(xi, yi) {
            return None;
        }
        let tu = tangent(xi, yi, 1, 0)?;
        let tv = tangent(xi, yi, 0, 1)?;
        let n = tu.cross(&tv);
        let len = n.norm();
        if !(len > 1e-15) {
            return None;
        }
        let n = n / len;
        let to_cam = source_center - pt(xi, yi);
        Some(if n.dot(&to_cam) < 0.0 { -n } else { n })
    })
}

/// Points (with normals where known) that candidate views are scored against.
#[derive(Debug, Clone, Copy)]
pub struct ViewScene<'a> {
    pub points: &'a [Vector3<f64>],
    pub normals: &'a [Option<Vector3<f64>>],
    pub valid: &'a [bool],
}

impl ViewScene<'_> {
    fn oriented(&self) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
        self.points
            .iter()
            .zip(self.normals)
            .zip(self.valid)
            .filter_map(|((p, n), &ok)| if ok { n.map(|n| (*p, n)) } else { None })
            .unzip()
    }
}

pub fn score_view(
    scene: &ViewScene<'_>,
    pose: &Pose,
    intrinsics: &CameraIntrinsics,
    width: u32,
    height: u32,
    cfg: &ValidityConfig,
) -> Result<ViewValidity> {
    let (pts, normals) = scene.oriented();
    let front_cov = front_coverage(&pts, &normals, &pose.camera_center(), cfg.theta_valid_deg)?;
    let img_cov = image_coverage(scene.points, scene.valid, pose, intrinsics, width, height);
    Ok(ViewValidity {
        front_cov,
        img_cov,
        accepted: front_cov >= cfg.front_floor && img_cov >= cfg.img_floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedView {
    pub index: usize,
    pub pose: Pose,
    pub validity: ViewValidity,
}

/// Scores all candidates and returns the accepted one with the largest
/// `front_cov * img_cov`; ties go to the lower index.
pub fn select_valid_pose(
    candidates: &[Pose],
    scene: &ViewScene<'_>,
    intrinsics: &CameraIntrinsics,
    width: u32,
    height: u32,
    cfg: &ValidityConfig,
) -> Result<SelectedView> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate poses".into()));
    }
    let (pts, normals) = scene.oriented();
    if pts.is_empty() {
        return Err(Error::UndefinedScore("scene has no oriented points".into()));
    }
    let scores: Vec<ViewValidity> = candidates
        .par_iter()
        .map(|pose| {
            let front_cov =
                front_coverage(&pts, &normals, &pose.camera_center(), cfg.theta_valid_deg)
                    .unwrap_or(0.0);
            let img_cov =
                image_coverage(scene.points, scene.valid, pose, intrinsics, width, height);
            ViewValidity {
                front_cov,
                img_cov,
                accepted: front_cov >= cfg.front_floor && img_cov >= cfg.img_floor,
            }
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if !s.accepted {
            continue;
        }
        if best.is_none_or(|b| s.combined() > scores[b].combined()) {
            best = Some(i);
        }
    }
    let index = best.ok_or(Error::NoValidView)?;
    Ok(SelectedView {
        index,
        pose: candidates[index],
        validity: scores[index],
    })
}

/// Candidate world-to-camera poses obtained by rotating the camera of
/// `base_w2c` about `centroid` with sampled axis-angle rotations.
pub fn candidate_poses(
    base_w2c: &Pose,
    centroid: &Vector3<f64>,
    sampler: &RotationSampler,
    count: usize,
    rng: &mut impl Rng,
) -> Vec<Pose> {
    let c2w = base_w2c.inverse();
    (0..count)
        .map(|_| {
            let (axis, angle) = sampler.sample(rng);
            let r = rodrigues(&axis, angle).expect("sampled axis is unit length");
            apply_rotation_to_pose(&c2w, &rotation_about_centroid(&r, centroid))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{unproject_pointmap, DepthMap};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plane_grid(n: usize, z: f64) -> Vec<Vector3<f64>> {
        (0..n * n)
            .map(|i| Vector3::new((i % n) as f64 * 0.1 - 0.5, (i / n) as f64 * 0.1 - 0.5, z))
            .collect()
    }

    #[test]
    fn zero_range_zero_angle() {
        let s = RotationSampler::new(0.0, 0.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (axis, angle) = s.sample(&mut rng);
        assert_eq!(angle, 0.0);
        assert!((axis.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_rejects_bad_ranges() {
        assert!(RotationSampler::new(50.0, 40.0, 0.0).is_err());
        assert!(RotationSampler::new(0.0, 181.0, 0.0).is_err());
        assert!(RotationSampler::new(0.0, 10.0, -1.0).is_err());
    }

    #[test]
    fn jitter_is_clamped() {
        let s = RotationSampler::new(175.0, 180.0, 30.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let (_, a) = s.sample(&mut rng);
            assert!((0.0..=std::f64::consts::PI).contains(&a));
        }
    }

    #[test]
    fn front_coverage_of_facing_and_averted_planes() {
        let pts = plane_grid(10, 2.0);
        let toward = vec![-Vector3::z(); pts.len()];
        let away = vec![Vector3::z(); pts.len()];
        let c = Vector3::zeros();
        assert_eq!(front_coverage(&pts, &toward, &c, 100.0).unwrap(), 1.0);
        assert_eq!(front_coverage(&pts, &away, &c, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn perpendicular_normal_counts_at_100_degrees() {
        let pts = [Vector3::new(0.0, 0.0, 2.0)];
        let normals = [Vector3::x()];
        let c = Vector3::zeros();
        assert_eq!(front_coverage(&pts, &normals, &c, 100.0).unwrap(), 1.0);
        assert_eq!(front_coverage(&pts, &normals, &c, 80.0).unwrap(), 0.0);
    }

    #[test]
    fn empty_front_coverage_is_undefined() {
        assert!(matches!(
            front_coverage(&[], &[], &Vector3::zeros(), 100.0),
            Err(Error::UndefinedScore(_))
        ));
    }

    #[test]
    fn image_coverage_behind_camera_is_zero() {
        let k = CameraIntrinsics::new(50.0, 50.0, 5.0, 5.0).unwrap();
        let pts = plane_grid(10, 2.0);
        let valid = vec![true; pts.len()];
        let flipped = Pose::new(
            rodrigues(&Vector3::y(), std::f64::consts::PI).unwrap(),
            Vector3::zeros(),
        )
        .unwrap();
        assert_eq!(image_coverage(&pts, &valid, &flipped, &k, 10, 10), 0.0);
    }

    #[test]
    fn flat_plane_normals_face_camera() {
        let k = CameraIntrinsics::new(100.0, 100.0, 8.0, 6.0).unwrap();
        let depth = DepthMap::from_values(16, 12, vec![3.0; 16 * 12]).unwrap();
        let pm = unproject_pointmap(&k, &depth).unwrap();
        let normals = estimate_normals(&pm, &Vector3::zeros());
        for n in normals.iter() {
            let n = n.expect("normal");
            assert!((n + Vector3::z()).amax() < 1e-6, "{n}");
        }
    }

    #[test]
    fn isolated_pixel_has_no_normal() {
        let k = CameraIntrinsics::new(100.0, 100.0, 1.0, 1.0).unwrap();
        let mut vals = vec![0.0; 9];
        vals[4] = 2.0;
        let pm = unproject_pointmap(&k, &DepthMap::from_values(3, 3, vals).unwrap()).unwrap();
        assert!(estimate_normals(&pm, &Vector3::zeros())
            .iter()
            .all(|n| n.is_none()));
    }

    #[test]
    fn dominated_candidate_loses() {
        let k = CameraIntrinsics::new(100.0, 100.0, 10.0, 10.0).unwrap();
        let depth = DepthMap::from_values(20, 20, vec![2.0; 400]).unwrap();
        let pm = unproject_pointmap(&k, &depth).unwrap();
        let normals = estimate_normals(&pm, &Vector3::zeros());
        let scene = ViewScene {
            points: pm.points.as_slice(),
            normals: normals.as_slice(),
            valid: pm.valid.as_slice(),
        };
        let flipped = Pose::new(
            rodrigues(&Vector3::y(), std::f64::consts::PI).unwrap(),
            Vector3::zeros(),
        )
        .unwrap();
        let cfg = ValidityConfig::default();
        let sel =
            select_valid_pose(&[flipped, Pose::identity()], &scene, &k, 20, 20, &cfg).unwrap();
        assert_eq!(sel.index, 1);
        assert_eq!(sel.validity.front_cov, 1.0);
        assert_eq!(sel.validity.img_cov, 1.0);
        assert!(matches!(
            select_valid_pose(&[flipped], &scene, &k, 20, 20, &cfg),
            Err(Error::NoValidView)
        ));
    }
}
