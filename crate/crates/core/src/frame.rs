//! Depth maps, pointmaps and RGB-D frames.

use image::RgbImage;
use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::grid::Grid;

/// Per-pixel z-depth in meters; `0` marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap(Grid<f64>);

impl DepthMap {
    /// All-invalid depth map.
    pub fn empty(width: usize, height: usize) -> Self {
        Self(Grid::new(width, height, 0.0))
    }

    /// Non-finite and non-positive samples are stored as `0` (invalid).
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let values = values
            .into_iter()
            .map(|d| if d.is_finite() && d > 0.0 { d } else { 0.0 })
            .collect();
        Grid::from_vec(width, height, values)
            .map(Self)
            .ok_or_else(|| Error::InvalidParameter(format!("depth buffer is not {width}x{height}")))
    }

    pub fn from_grid(grid: Grid<f64>) -> Self {
        Self(grid.map(|&d| if d.is_finite() && d > 0.0 { d } else { 0.0 }))
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_grid(Grid::from_fn(width, height, &mut f))
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.0.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        *self.0.get(x, y)
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > 0.0
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn valid_count(&self) -> usize {
        self.0.iter().filter(|&&d| d > 0.0).count()
    }

    pub fn validity(&self) -> Grid<bool> {
        self.0.map(|&d| d > 0.0)
    }

    /// Median of the valid samples, if any.
    pub fn median_valid(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.0.iter().copied().filter(|&d| d > 0.0).collect();
        if v.is_empty() {
            return None;
        }
        let mid = v.len() / 2;
        let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
        Some(*m)
    }
}

/// Grid of 3D points with a validity mask. Invalid entries hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Pointmap {
    pub points: Grid<Vector3<f64>>,
    pub valid: Grid<bool>,
}

impl Pointmap {
    pub fn width(&self) -> usize {
        self.points.width()
    }

    pub fn height(&self) -> usize {
        self.points.height()
    }

    /// Applies a rigid transform to every valid point.
    pub fn transformed(&self, pose: &Pose) -> Self {
        let mut points = self.points.clone();
        for (p, &ok) in points.as_mut_slice().iter_mut().zip(self.valid.iter()) {
            if ok {
                *p = pose.transform_point(p);
            }
        }
        Self {
            points,
            valid: self.valid.clone(),
        }
    }

    pub fn valid_points(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.points
            .iter()
            .zip(self.valid.iter())
            .filter_map(|(p, &ok)| ok.then_some(p))
    }
}

/// Camera-frame pointmap `X = K⁻¹ [uD, vD, D]ᵀ` for every pixel with `D > 0`.
pub fn unproject_pointmap(intrinsics: &CameraIntrinsics, depth: &DepthMap) -> Result<Pointmap> {
    intrinsics.validate()?;
    let (w, h) = (depth.width(), depth.height());
    let points = Grid::from_fn(w, h, |x, y| {
        let d = depth.get(x, y);
        if d > 0.0 {
            intrinsics.unproject(x as f64, y as f64, d)
        } else {
            Vector3::zeros()
        }
    });
    Ok(Pointmap {
        points,
        valid: depth.validity(),
    })
}

/// One RGB-D input frame as loaded from disk or generated synthetically.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbdFrame {
    pub id: String,
    pub rgb: RgbImage,
    pub depth: DepthMap,
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-world pose, when the frame belongs to a posed sequence.
    pub pose_c2w: Option<Pose>,
}

impl RgbdFrame {
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    /// World-to-camera pose, identity for unposed frames.
    pub fn pose_w2c(&self) -> Pose {
        self.pose_c2w.map(|p| p.inverse()).unwrap_or_default()
    }

    pub fn check(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if self.rgb.width() as usize != self.width() || self.rgb.height() as usize != self.height()
        {
            return Err(Error::Input(format!(
                "frame `{}`: rgb is {}x{} but depth is {}x{}",
                self.id,
                self.rgb.width(),
                self.rgb.height(),
                self.width(),
                self.height()
            )));
        }
        Ok(())
    }
}

/// Per-pixel RGB, depth, world-frame points and validity for one frame.
#[derive(Debug, Clone)]
pub struct PointmapFrame {
    pub rgb: RgbImage,
    pub depth: DepthMap,
    /// World-frame points.
    pub pointmap: Pointmap,
    pub intrinsics: CameraIntrinsics,
    pub pose_w2c: Pose,
}

impl PointmapFrame {
    pub fn from_rgbd(frame: &RgbdFrame) -> Result<Self> {
        frame.check()?;
        let camera = unproject_pointmap(&frame.intrinsics, &frame.depth)?;
        let pointmap = match &frame.pose_c2w {
            Some(c2w) => camera.transformed(c2w),
            None => camera,
        };
        Ok(Self {
            rgb: frame.rgb.clone(),
            depth: frame.depth.clone(),
            pointmap,
            intrinsics: frame.intrinsics,
            pose_w2c: frame.pose_w2c(),
        })
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_non_finite_depth_are_masked() {
        let d = DepthMap::from_values(3, 1, vec![0.0, f64::NAN, 1.5]).unwrap();
        let k = CameraIntrinsics::new(100.0, 100.0, 1.0, 0.0).unwrap();
        let pm = unproject_pointmap(&k, &d).unwrap();
        assert_eq!(pm.valid.as_slice(), &[false, false, true]);
        assert_eq!(pm.valid_points().count(), 1);
        assert_eq!(*pm.points.get(2, 0), Vector3::new(0.015, 0.0, 1.5));
    }

    #[test]
    fn bad_buffer_length_is_rejected() {
        assert!(DepthMap::from_values(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn median_of_valid_samples() {
        let d = DepthMap::from_values(5, 1, vec![0.0, 3.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(d.median_valid(), Some(2.0));
        assert_eq!(DepthMap::empty(2, 2).median_valid(), None);
    }

    #[test]
    fn posed_frame_points_are_in_world() {
        let k = CameraIntrinsics::new(10.0, 10.0, 0.0, 0.0).unwrap();
        let c2w = Pose::new(nalgebra::Matrix3::identity(), Vector3::new(1.0, 2.0, 3.0)).unwrap();
        let frame = RgbdFrame {
            id: "f".into(),
            rgb: RgbImage::new(1, 1),
            depth: DepthMap::from_values(1, 1, vec![2.0]).unwrap(),
            intrinsics: k,
            pose_c2w: Some(c2w),
        };
        let pf = PointmapFrame::from_rgbd(&frame).unwrap();
        assert_eq!(*pf.pointmap.points.get(0, 0), Vector3::new(1.0, 2.0, 5.0));
        assert_eq!(pf.pose_w2c.camera_center(), Vector3::new(1.0, 2.0, 3.0));
    }
}
