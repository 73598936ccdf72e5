//! Z-buffered point splatting with white hole fill.

use image::{Rgb, RgbImage};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::frame::DepthMap;
use crate::geometry::{CameraIntrinsics, Pose};
use crate::grid::Grid;

pub const HOLE_COLOR: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Side of the square footprint each point covers, in pixels.
    pub splat_px: u32,
    /// Close pinholes surrounded by at least 5 covered neighbors.
    pub dilate: bool,
    /// Renders with a larger hole fraction are discarded.
    pub hole_max_frac: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            splat_px: 1,
            dilate: true,
            hole_max_frac: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderResult {
    pub rgb: RgbImage,
    pub depth: DepthMap,
    /// `true` where no point landed.
    pub hole_mask: Grid<bool>,
    pub hole_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleGate {
    Accept,
    Discard,
}

/// Renders colored points from a world-to-camera `pose`.
///
/// Each point covers a `splat_px x splat_px` block around its rounded
/// projection; the smallest camera-frame depth wins, and on equal depth the
/// earlier point wins. Uncovered pixels are white and flagged in the hole mask.
pub fn render_pointcloud(
    points: &[Vector3<f64>],
    colors: &[[u8; 3]],
    pose: &Pose,
    intrinsics: &CameraIntrinsics,
    width: u32,
    height: u32,
    cfg: &RenderConfig,
) -> RenderResult {
    let (w, h) = (width as usize, height as usize);
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut owner = vec![usize::MAX; w * h];
    let splat = cfg.splat_px.max(1) as i64;
    let lo = -(splat - 1) / 2;
    let hi = splat / 2;

    for (i, p) in points.iter().enumerate() {
        let Some(pr) = intrinsics.project_camera(&pose.transform_point(p)) else {
            continue;
        };
        let (px, py) = (pr.u.round(), pr.v.round());
        if !(px.is_finite() && py.is_finite()) {
            continue;
        }
        let (px, py) = (px as i64, py as i64);
        for dy in lo..=hi {
            let y = py + dy;
            if y < 0 || y >= h as i64 {
                continue;
            }
            for dx in lo..=hi {
                let x = px + dx;
                if x < 0 || x >= w as i64 {
                    continue;
                }
                let k = y as usize * w + x as usize;
                if pr.depth < zbuf[k] {
                    zbuf[k] = pr.depth;
                    owner[k] = i;
                }
            }
        }
    }

    let mut out_depth = zbuf.clone();
    let mut out_owner = owner.clone();
    if cfg.dilate {
        for y in 0..h {
            for x in 0..w {
                let k = y * w + x;
                if owner[k] != usize::MAX {
                    continue;
                }
                let mut covered = 0;
                let mut best: Option<usize> = None;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let nk = ny as usize * w + nx as usize;
                        if owner[nk] != usize::MAX {
                            covered += 1;
                            if best.is_none_or(|b| zbuf[nk] < zbuf[b]) {
                                best = Some(nk);
                            }
                        }
                    }
                }
                if covered >= 5 {
                    let b = best.expect("covered neighbor");
                    out_depth[k] = zbuf[b];
                    out_owner[k] = owner[b];
                }
            }
        }
    }

    let mut rgb = RgbImage::from_pixel(width, height, Rgb(HOLE_COLOR));
    let mut holes = 0usize;
    let hole_mask = Grid::from_fn(w, h, |x, y| {
        let k = y * w + x;
        let o = out_owner[k];
        if o == usize::MAX {
            holes += 1;
            true
        } else {
            rgb.put_pixel(x as u32, y as u32, Rgb(colors[o]));
            false
        }
    });
    let depth = DepthMap::from_values(
        w,
        h,
        out_depth
            .into_iter()
            .map(|d| if d.is_finite() { d } else { 0.0 })
            .collect(),
    )
    .expect("buffer sized from dims");
    let total = (w * h).max(1);
    RenderResult {
        rgb,
        depth,
        hole_mask,
        hole_fraction: if w * h == 0 {
            1.0
        } else {
            holes as f64 / total as f64
        },
    }
}

/// Discards renders whose hole fraction exceeds `h_max`.
pub fn gate_by_holes(result: &RenderResult, h_max: f64) -> HoleGate {
    if result.hole_fraction > h_max {
        HoleGate::Discard
    } else {
        HoleGate::Accept
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 8.0, 6.0).unwrap()
    }

    #[test]
    fn empty_cloud_is_all_hole() {
        let r = render_pointcloud(
            &[],
            &[],
            &Pose::identity(),
            &k(),
            16,
            12,
            &RenderConfig::default(),
        );
        assert_eq!(r.hole_fraction, 1.0);
        assert!(r.rgb.pixels().all(|p| p.0 == HOLE_COLOR));
        assert!(r.depth.values().iter().all(|&d| d == 0.0));
        assert_eq!(gate_by_holes(&r, 0.3), HoleGate::Discard);
    }

    #[test]
    fn optical_axis_point_lands_on_principal_pixel() {
        let cfg = RenderConfig {
            dilate: false,
            ..Default::default()
        };
        let r = render_pointcloud(
            &[Vector3::new(0.0, 0.0, 2.5)],
            &[[10, 20, 30]],
            &Pose::identity(),
            &k(),
            16,
            12,
            &cfg,
        );
        assert_eq!(r.depth.get(8, 6), 2.5);
        assert_eq!(r.rgb.get_pixel(8, 6).0, [10, 20, 30]);
        assert!(!*r.hole_mask.get(8, 6));
        assert_eq!(r.hole_fraction, (16.0 * 12.0 - 1.0) / (16.0 * 12.0));
    }

    #[test]
    fn nearest_point_wins_and_ties_keep_first() {
        let cfg = RenderConfig {
            dilate: false,
            ..Default::default()
        };
        let pts = [
            Vector3::new(0.0, 0.0, 3.0),
            Vector3::new(0.0, 0.0, 2.0),
            Vector3::new(0.0, 0.0, 2.0),
        ];
        let colors = [[1, 1, 1], [2, 2, 2], [3, 3, 3]];
        let r = render_pointcloud(&pts, &colors, &Pose::identity(), &k(), 16, 12, &cfg);
        assert_eq!(r.depth.get(8, 6), 2.0);
        assert_eq!(r.rgb.get_pixel(8, 6).0, [2, 2, 2]);
    }

    #[test]
    fn splat_covers_block() {
        let cfg = RenderConfig {
            splat_px: 3,
            dilate: false,
            ..Default::default()
        };
        let r = render_pointcloud(
            &[Vector3::new(0.0, 0.0, 1.0)],
            &[[0, 0, 0]],
            &Pose::identity(),
            &k(),
            16,
            12,
            &cfg,
        );
        let covered = r.hole_mask.iter().filter(|h| !**h).count();
        assert_eq!(covered, 9);
    }

    #[test]
    fn dilation_closes_pinholes_only() {
        // 3x3 block of points with the center missing -> center filled
        let kk = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let mut pts = Vec::new();
        for y in 0..3 {
            for x in 0..3 {
                if (x, y) != (1, 1) {
                    pts.push(Vector3::new(x as f64, y as f64, 1.0 + 0.1 * (x + y) as f64));
                }
            }
        }
        // projections: u = x / z, so undo the depth scaling
        let pts: Vec<_> = pts
            .into_iter()
            .map(|p| Vector3::new(p.x * p.z, p.y * p.z, p.z))
            .collect();
        let colors = vec![[7, 7, 7]; pts.len()];
        let r = render_pointcloud(
            &pts,
            &colors,
            &Pose::identity(),
            &kk,
            3,
            3,
            &RenderConfig::default(),
        );
        assert!(!*r.hole_mask.get(1, 1));
        assert_eq!(r.depth.get(1, 1), 1.0);
        assert_eq!(r.hole_fraction, 0.0);
    }

    #[test]
    fn gate_boundary_is_inclusive() {
        let mut r = render_pointcloud(
            &[],
            &[],
            &Pose::identity(),
            &k(),
            4,
            4,
            &RenderConfig::default(),
        );
        r.hole_fraction = 0.0;
        assert_eq!(gate_by_holes(&r, 0.3), HoleGate::Accept);
        r.hole_fraction = 0.3;
        assert_eq!(gate_by_holes(&r, 0.3), HoleGate::Accept);
        r.hole_fraction = 1.0;
        assert_eq!(gate_by_holes(&r, 0.3), HoleGate::Discard);
    }
}
