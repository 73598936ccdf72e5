//! Geometric frame-to-frame overlap by depth reprojection.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{DepthMap, PointmapFrame};
use crate::geometry::{CameraIntrinsics, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovisConfig {
    /// Depth tolerance as a fraction of the reference frame's median depth.
    pub depth_tol_rel: f64,
    /// Absolute tolerance in meters; overrides the relative one when set.
    pub depth_tol_abs: Option<f64>,
    /// Source pixels are visited on a `stride x stride` lattice.
    pub stride: usize,
}

impl Default for CovisConfig {
    fn default() -> Self {
        Self {
            depth_tol_rel: 0.05,
            depth_tol_abs: None,
            stride: 2,
        }
    }
}

impl CovisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::Config("covis.stride must be at least 1".into()));
        }
        if !(self.depth_tol_rel > 0.0) || self.depth_tol_abs.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("depth tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Depth tolerance for a reference frame, `None` if it has no valid depth.
    pub fn tolerance_for(&self, reference: &DepthMap) -> Option<f64> {
        match self.depth_tol_abs {
            Some(t) => Some(t),
            None => reference.median_valid().map(|m| m * self.depth_tol_rel),
        }
    }
}

/// Borrowed depth + camera of one frame.
#[derive(Debug, Clone, Copy)]
pub struct OverlapView<'a> {
    pub depth: &'a DepthMap,
    pub intrinsics: &'a CameraIntrinsics,
    pub pose_w2c: &'a Pose,
}

impl<'a> From<&'a PointmapFrame> for OverlapView<'a> {
    fn from(f: &'a PointmapFrame) -> Self {
        Self {
            depth: &f.depth,
            intrinsics: &f.intrinsics,
            pose_w2c: &f.pose_w2c,
        }
    }
}

/// Fraction of valid source pixels that reproject into the reference view
/// with a depth within `tolerance` of the reference depth at the nearest pixel.
pub fn overlap_score_with_tolerance(
    source: &OverlapView<'_>,
    reference: &OverlapView<'_>,
    tolerance: f64,
    stride: usize,
) -> Result<f64> {
    let stride = stride.max(1);
    let src_to_ref = reference.pose_w2c.compose(&source.pose_w2c.inverse());
    let (rw, rh) = (reference.depth.width(), reference.depth.height());
    let mut total = 0usize;
    let mut hits = 0usize;
    for y in (0..source.depth.height()).step_by(stride) {
        for x in (0..source.depth.width()).step_by(stride) {
            let d = source.depth.get(x, y);
            if d <= 0.0 {
                continue;
            }
            total += 1;
            let p = src_to_ref.transform_point(&source.intrinsics.unproject(x as f64, y as f64, d));
            let Some(pr) = reference.intrinsics.project_camera(&p) else {
                continue;
            };
            let Some((rx, ry)) = pr.pixel(rw, rh) else {
                continue;
            };
            let dr = reference.depth.get(rx, ry);
            if dr > 0.0 && (pr.depth - dr).abs() < tolerance {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::UndefinedScore(
            "source frame has no valid depth".into(),
        ));
    }
    Ok(hits as f64 / total as f64)
}

pub fn overlap_score(
    source: &OverlapView<'_>,
    reference: &OverlapView<'_>,
    cfg: &CovisConfig,
) -> Result<f64> {
    cfg.validate()?;
    let tol = cfg
        .tolerance_for(reference.depth)
        .ok_or_else(|| Error::UndefinedScore("reference frame has no valid depth".into()))?;
    overlap_score_with_tolerance(source, reference, tol, cfg.stride)
}

/// Row `i`, column `j` holds the overlap of frame `i` projected into frame `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    n: usize,
    values: Vec<f64>,
    /// Pairs whose score was undefined and stored as 0.
    pub warnings: Vec<String>,
}

impl OverlapMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(
                "overlap matrix must be square".into(),
            ));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "overlap entries must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            n,
            values,
            warnings: Vec::new(),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.n.max(1))
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.values.chunks(self.n.max(1)).take(self.n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Input(format!("bad matrix entry `{v}`: {e}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }
}

/// All ordered pair overlaps, diagonal included.
pub fn overlap_matrix(frames: &[OverlapView<'_>], cfg: &CovisConfig) -> Result<OverlapMatrix> {
    if frames.is_empty() {
        return Err(Error::InvalidParameter(
            "overlap matrix needs at least one frame".into(),
        ));
    }
    cfg.validate()?;
    let n = frames.len();
    let tolerances: Vec<Option<f64>> = frames.iter().map(|f| cfg.tolerance_for(f.depth)).collect();
    let cells: Vec<(f64, Option<String>)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let score = match tolerances[j] {
                Some(tol) => overlap_score_with_tolerance(&frames[i], &frames[j], tol, cfg.stride),
                None => Err(Error::UndefinedScore(
                    "reference frame has no valid depth".into(),
                )),
            };
            match score {
                Ok(v) => (v, None),
                Err(e) => (0.0, Some(format!("O[{i}][{j}] set to 0: {e}"))),
            }
        })
        .collect();
    let mut warnings = Vec::new();
    let mut values = Vec::with_capacity(n * n);
    for (v, w) in cells {
        values.push(v);
        if let Some(w) = w {
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    Ok(OverlapMatrix {
        n,
        values,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};

    fn plane(w: usize, h: usize, z: f64) -> DepthMap {
        DepthMap::from_values(w, h, vec![z; w * h]).unwrap()
    }

    #[test]
    fn self_overlap_is_one() {
        let k = CameraIntrinsics::new(50.0, 50.0, 16.0, 12.0).unwrap();
        let d = plane(32, 24, 2.0);
        let pose = Pose::identity();
        let v = OverlapView {
            depth: &d,
            intrinsics: &k,
            pose_w2c: &pose,
        };
        assert_eq!(overlap_score(&v, &v, &CovisConfig::default()).unwrap(), 1.0);
    }

    #[test]
    fn empty_source_is_undefined() {
        let k = CameraIntrinsics::new(50.0, 50.0, 16.0, 12.0).unwrap();
        let empty = DepthMap::empty(32, 24);
        let full = plane(32, 24, 2.0);
        let pose = Pose::identity();
        let s = OverlapView {
            depth: &empty,
            intrinsics: &k,
            pose_w2c: &pose,
        };
        let r = OverlapView {
            depth: &full,
            intrinsics: &k,
            pose_w2c: &pose,
        };
        assert!(matches!(
            overlap_score(&s, &r, &CovisConfig::default()),
            Err(Error::UndefinedScore(_))
        ));
        let m = overlap_matrix(&[s, r], &CovisConfig::default()).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.warnings.len(), 3);
    }

    #[test]
    fn csv_round_trip() {
        let m = OverlapMatrix::from_rows(vec![vec![1.0, 0.25], vec![0.5, 1.0]]).unwrap();
        assert_eq!(OverlapMatrix::from_csv(&m.to_csv()).unwrap(), m);
        assert!(OverlapMatrix::from_rows(vec![vec![1.0, 0.2]]).is_err());
        assert!(OverlapMatrix::from_csv("1.0,x\n0,1").is_err());
    }

    #[test]
    fn occluded_points_do_not_count() {
        // Reference sees a nearer wall covering the whole view.
        let k = CameraIntrinsics::new(50.0, 50.0, 16.0, 12.0).unwrap();
        let far = plane(32, 24, 4.0);
        let near = plane(32, 24, 1.0);
        let pose = Pose::new(Matrix3::identity(), Vector3::zeros()).unwrap();
        let s = OverlapView {
            depth: &far,
            intrinsics: &k,
            pose_w2c: &pose,
        };
        let r = OverlapView {
            depth: &near,
            intrinsics: &k,
            pose_w2c: &pose,
        };
        assert_eq!(overlap_score(&s, &r, &CovisConfig::default()).unwrap(), 0.0);
    }
}
