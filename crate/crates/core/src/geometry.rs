//! Pinhole camera math and rigid transforms.
//!
//! Conventions used throughout the crate:
//! - pixel `(u, v)` samples the ray through `(u, v)` exactly, with no half-pixel offset;
//! - camera frame is x right, y down, z forward;
//! - [`Pose`] is world-to-camera unless a name says otherwise (`*_c2w`);
//! - angles are radians.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer to the image plane than this are treated as behind the camera.
pub const EPS_Z: f64 = 1e-9;

/// Tolerance used for rotation orthonormality and unit-axis checks.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fx.is_finite() && self.fy > 0.0 && self.fy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive and finite (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "principal point must be finite (cx={}, cy={})",
                self.cx, self.cy
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, 0.0, self.cx, //
            0.0, self.fy, self.cy, //
            0.0, 0.0, 1.0,
        )
    }

    /// Camera-frame point at pixel `(u, v)` with z-depth `depth`.
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            depth,
        )
    }

    /// Projects a camera-frame point; `None` when it is not in front of the camera.
    #[inline]
    pub fn project_camera(&self, p: &Vector3<f64>) -> Option<Projection> {
        if p.z <= EPS_Z || !p.z.is_finite() {
            return None;
        }
        Some(Projection {
            u: self.fx * p.x / p.z + self.cx,
            v: self.fy * p.y / p.z + self.cy,
            depth: p.z,
        })
    }

    /// Unit-z bearing direction `K⁻¹ [u v 1]ᵀ`.
    #[inline]
    pub fn bearing(&self, u: f64, v: f64) -> Vector3<f64> {
        self.unproject(u, v, 1.0)
    }
}

/// Pixel coordinates plus camera-frame depth of a projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl Projection {
    /// Nearest pixel index, if it falls inside a `width x height` image.
    #[inline]
    pub fn pixel(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        let x = self.u.round();
        let y = self.v.round();
        if x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64 {
            Some((x as usize, y as usize))
        } else {
            None
        }
    }
}

/// Rigid transform `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        check_rotation(&rotation)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("translation must be finite".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Builds a pose from a rotation that may carry small numerical drift,
    /// snapping it back onto SO(3). Fails if the drift exceeds `tol`.
    pub fn new_orthonormalized(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tol: f64,
    ) -> Result<Self> {
        let err = orthonormality_error(&rotation);
        if !(err < tol) {
            return Err(Error::InvalidParameter(format!(
                "rotation is not orthonormal (max |RᵀR - I| = {err:e})"
            )));
        }
        Self::new(nearest_rotation(&rotation), translation)
    }

    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidParameter(format!(
                "homogeneous transform must end in [0 0 0 1], got {bottom:?}"
            )));
        }
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    #[inline]
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    #[inline]
    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Camera center `-Rᵀ t` of a world-to-camera pose.
    pub fn camera_center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Geodesic angle (radians) between the rotations of two poses.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        rotation_angle(&(self.rotation.transpose() * other.rotation))
    }
}

/// Max-abs entry of `RᵀR - I`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax()
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("rotation must be finite".into()));
    }
    let err = orthonormality_error(r);
    let det = r.determinant();
    if err >= ROTATION_TOL || (det - 1.0).abs() >= ROTATION_TOL {
        return Err(Error::InvalidParameter(format!(
            "rotation is not in SO(3) (max |RᵀR - I| = {err:e}, det = {det})"
        )));
    }
    Ok(())
}

/// Closest rotation in the Frobenius sense (polar decomposition via SVD).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

/// Rotation angle of `r` in `[0, π]`.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    // atan2 form stays accurate near 0 and π.
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let skew = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let sin = 0.5 * skew.norm();
    sin.atan2(cos)
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Projects a world point through a world-to-camera `pose`.
///
/// Returns `None` (the behind-camera flag) when the camera-frame depth is
/// not greater than [`EPS_Z`].
#[inline]
pub fn project_point(
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    point: &Vector3<f64>,
) -> Option<Projection> {
    intrinsics.project_camera(&pose.transform_point(point))
}

/// Rotation by `angle` about the unit `axis`:
/// `cos θ I + sin θ [n]× + (1 - cos θ) n nᵀ`.
pub fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Result<Matrix3<f64>> {
    let norm = axis.norm();
    if !((norm - 1.0).abs() <= ROTATION_TOL) {
        return Err(Error::InvalidParameter(format!(
            "rotation axis must be unit length, got norm {norm}"
        )));
    }
    if !angle.is_finite() {
        return Err(Error::InvalidParameter(
            "rotation angle must be finite".into(),
        ));
    }
    let (s, c) = angle.sin_cos();
    Ok(Matrix3::identity() * c + skew(axis) * s + axis * axis.transpose() * (1.0 - c))
}

/// Homogeneous transform rotating by `rotation` about `centroid`:
/// `[R | c - R c; 0 1]`.
pub fn rotation_about_centroid(rotation: &Matrix3<f64>, centroid: &Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rotation);
    m.fixed_view_mut::<3, 1>(0, 3)
        .copy_from(&(centroid - rotation * centroid));
    m
}

/// New world-to-camera pose `(T_rot · T_c2w)⁻¹` after moving the camera by `t_rot`.
pub fn apply_rotation_to_pose(pose_c2w: &Pose, t_rot: &Matrix4<f64>) -> Pose {
    let rot = t_rot.fixed_view::<3, 3>(0, 0).into_owned();
    let trans = t_rot.fixed_view::<3, 1>(0, 3).into_owned();
    let moved_c2w = Pose::from_parts_unchecked(rot, trans).compose(pose_c2w);
    moved_c2w.inverse()
}
