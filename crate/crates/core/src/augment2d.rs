//! Joint 2D warps of an image, its pointmap and its validity mask.
//!
//! The warp moves pixels only. Camera parameters are left untouched, so a
//! warped frame is no longer geometrically consistent with its intrinsics.

use image::{Rgb, RgbImage};
use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::DepthMap;
use crate::grid::Grid;
use crate::render::HOLE_COLOR;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aug2dConfig {
    pub enabled: bool,
    /// Rotation drawn from `[-rot_deg, rot_deg]`.
    pub rot_deg: f64,
    /// Translation bound as a fraction of each image side.
    pub trans_frac: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Max inward corner displacement as a fraction of half the image side.
    pub persp_scale: f64,
    pub persp_prob: f64,
}

impl Default for Aug2dConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            rot_deg: 45.0,
            trans_frac: 0.2,
            scale_min: 0.8,
            scale_max: 1.0,
            persp_scale: 0.1,
            persp_prob: 0.1,
        }
    }
}

impl Aug2dConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rot_deg >= 0.0
            && (0.0..=1.0).contains(&self.trans_frac)
            && self.scale_min > 0.0
            && self.scale_min <= self.scale_max
            && (0.0..=1.0).contains(&self.persp_scale)
            && (0.0..=1.0).contains(&self.persp_prob);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid aug2d settings: {self:?}")))
        }
    }
}

/// Image, depth, pointmap and mask sharing one pixel lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpBundle {
    pub rgb: RgbImage,
    pub depth: DepthMap,
    pub points: Grid<Vector3<f64>>,
    pub mask: Grid<bool>,
}

impl WarpBundle {
    pub fn new(
        rgb: RgbImage,
        depth: DepthMap,
        points: Grid<Vector3<f64>>,
        mask: Grid<bool>,
    ) -> Result<Self> {
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        if depth.width() != w
            || depth.height() != h
            || points.width() != w
            || points.height() != h
            || !points.same_dims(&mask)
        {
            return Err(Error::InvalidParameter(
                "warp bundle channels differ in size".into(),
            ));
        }
        Ok(Self {
            rgb,
            depth,
            points,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.mask.width()
    }

    pub fn height(&self) -> usize {
        self.mask.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub angle_deg: f64,
    pub tx: f64,
    pub ty: f64,
    pub scale: f64,
}

impl AffineParams {
    pub fn identity() -> Self {
        Self {
            angle_deg: 0.0,
            tx: 0.0,
            ty: 0.0,
            scale: 1.0,
        }
    }

    /// Forward map (source to output pixel): rotate and scale about the
    /// image center, then translate.
    pub fn matrix(&self, width: usize, height: usize) -> Matrix3<f64> {
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let a = self.scale;
        let to_center = Matrix3::new(1.0, 0.0, -cx, 0.0, 1.0, -cy, 0.0, 0.0, 1.0);
        let rs = Matrix3::new(a * c, -a * s, 0.0, a * s, a * c, 0.0, 0.0, 0.0, 1.0);
        let back = Matrix3::new(
            1.0,
            0.0,
            cx + self.tx,
            0.0,
            1.0,
            cy + self.ty,
            0.0,
            0.0,
            1.0,
        );
        back * rs * to_center
    }
}

fn symmetric(rng: &mut impl Rng, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.random_range(-bound..=bound)
    } else {
        0.0
    }
}

pub fn sample_affine(
    cfg: &Aug2dConfig,
    width: usize,
    height: usize,
    rng: &mut impl Rng,
) -> AffineParams {
    let angle_deg = symmetric(rng, cfg.rot_deg);
    let tx = symmetric(rng, cfg.trans_frac * width as f64);
    let ty = symmetric(rng, cfg.trans_frac * height as f64);
    let scale = if cfg.scale_max > cfg.scale_min {
        rng.random_range(cfg.scale_min..=cfg.scale_max)
    } else {
        cfg.scale_min
    };
    AffineParams {
        angle_deg,
        tx,
        ty,
        scale,
    }
}

/// Corner correspondences of a perspective warp, clockwise from top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerspectiveParams {
    pub start: [[f64; 2]; 4],
    pub end: [[f64; 2]; 4],
}

impl PerspectiveParams {
    pub fn matrix(&self) -> Option<Matrix3<f64>> {
        homography_from_corners(&self.start, &self.end)
    }

    pub fn max_displacement(&self) -> (f64, f64) {
        self.start
            .iter()
            .zip(&self.end)
            .fold((0.0, 0.0), |(mx, my), (s, e)| {
                (mx.max((s[0] - e[0]).abs()), my.max((s[1] - e[1]).abs()))
            })
    }
}

/// Each corner moves inward by up to `persp_scale * side / 2` on each axis.
pub fn sample_perspective(
    cfg: &Aug2dConfig,
    width: usize,
    height: usize,
    rng: &mut impl Rng,
) -> PerspectiveParams {
    let (w, h) = ((width.max(1) - 1) as f64, (height.max(1) - 1) as f64);
    let dx = cfg.persp_scale * width as f64 / 2.0;
    let dy = cfg.persp_scale * height as f64 / 2.0;
    let mut draw = |b: f64| {
        if b > 0.0 {
            rng.random_range(0.0..=b)
        } else {
            0.0
        }
    };
    let start = [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]];
    let end = [
        [draw(dx), draw(dy)],
        [w - draw(dx), draw(dy)],
        [w - draw(dx), h - draw(dy)],
        [draw(dx), h - draw(dy)],
    ];
    PerspectiveParams { start, end }
}

/// Homography mapping each `src[i]` onto `dst[i]`, normalized so `H[2][2] = 1`.
pub fn homography_from_corners(src: &[[f64; 2]; 4], dst: &[[f64; 2]; 4]) -> Option<Matrix3<f64>> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for i in 0..4 {
        let ([x, y], [u, v]) = (src[i], dst[i]);
        let r = 2 * i;
        a.row_mut(r)
            .copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
        a.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
        b[r] = u;
        b[r + 1] = v;
    }
    let h = a.lu().solve(&b)?;
    Some(Matrix3::new(
        h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0,
    ))
}

/// Warps every channel by the forward map `forward` (source to output).
///
/// Each output pixel pulls from its inverse-mapped source location: RGB is
/// bilinear, everything else nearest. Pixels whose nearest source lies outside
/// the image or is masked out become invalid (white, zero depth, mask false).
pub fn warp_bundle(bundle: &WarpBundle, forward: &Matrix3<f64>) -> Result<WarpBundle> {
    if *forward == Matrix3::identity() {
        return Ok(bundle.clone());
    }
    let inv = forward
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("singular 2D warp".into()))?;
    let (w, h) = (bundle.width(), bundle.height());
    let mut rgb = RgbImage::from_pixel(w as u32, h as u32, Rgb(HOLE_COLOR));
    let mut depth = vec![0.0; w * h];
    let mut points = Grid::new(w, h, Vector3::zeros());
    let mut mask = Grid::new(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let q = inv * Vector3::new(x as f64, y as f64, 1.0);
            if q.z.abs() < 1e-12 {
                continue;
            }
            let (sx, sy) = (q.x / q.z, q.y / q.z);
            let (nx, ny) = (sx.round(), sy.round());
            if !(nx >= 0.0 && ny >= 0.0 && nx < w as f64 && ny < h as f64) {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if !*bundle.mask.get(nx, ny) {
                continue;
            }
            *mask.get_mut(x, y) = true;
            *points.get_mut(x, y) = *bundle.points.get(nx, ny);
            depth[y * w + x] = bundle.depth.get(nx, ny);
            rgb.put_pixel(x as u32, y as u32, bilinear(&bundle.rgb, sx, sy));
        }
    }
    Ok(WarpBundle {
        rgb,
        depth: DepthMap::from_values(w, h, depth)?,
        points,
        mask,
    })
}

pub(crate) fn bilinear(img: &RgbImage, x: f64, y: f64) -> Rgb<u8> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let at = |xi: i64, yi: i64| {
        img.get_pixel(xi.clamp(0, w - 1) as u32, yi.clamp(0, h - 1) as u32)
            .0
    };
    let (x0, y0) = (x0 as i64, y0 as i64);
    let (p00, p10, p01, p11) = (
        at(x0, y0),
        at(x0 + 1, y0),
        at(x0, y0 + 1),
        at(x0 + 1, y0 + 1),
    );
    let mut out = [0u8; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
    }
    Rgb(out)
}

pub fn random_affine(
    bundle: &WarpBundle,
    cfg: &Aug2dConfig,
    seed: u64,
) -> Result<(WarpBundle, AffineParams)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = sample_affine(cfg, bundle.width(), bundle.height(), &mut rng);
    let out = warp_bundle(bundle, &params.matrix(bundle.width(), bundle.height()))?;
    Ok((out, params))
}

/// Applies a perspective warp with probability `persp_prob`.
pub fn random_perspective(
    bundle: &WarpBundle,
    cfg: &Aug2dConfig,
    seed: u64,
) -> Result<(WarpBundle, Option<PerspectiveParams>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !(rng.random::<f64>() < cfg.persp_prob) {
        return Ok((bundle.clone(), None));
    }
    let params = sample_perspective(cfg, bundle.width(), bundle.height(), &mut rng);
    let m = params
        .matrix()
        .ok_or_else(|| Error::InvalidParameter("degenerate perspective corners".into()))?;
    Ok((warp_bundle(bundle, &m)?, Some(params)))
}

/// Affine warp followed by the optional perspective warp, as one resampling.
pub fn augment(bundle: &WarpBundle, cfg: &Aug2dConfig, seed: u64) -> Result<WarpBundle> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (bundle.width(), bundle.height());
    let mut m = sample_affine(cfg, w, h, &mut rng).matrix(w, h);
    if rng.random::<f64>() < cfg.persp_prob {
        if let Some(p) = sample_perspective(cfg, w, h, &mut rng).matrix() {
            m = p * m;
        }
    }
    warp_bundle(bundle, &m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(w: usize, h: usize) -> WarpBundle {
        let rgb = RgbImage::from_fn(w as u32, h as u32, |x, y| {
            Rgb([(x * 7 % 256) as u8, (y * 11 % 256) as u8, 9])
        });
        let depth = DepthMap::from_fn(w, h, |x, y| 1.0 + (x + y) as f64 * 0.01);
        let points = Grid::from_fn(w, h, |x, y| Vector3::new(x as f64, y as f64, 1.0));
        let mask = Grid::new(w, h, true);
        WarpBundle::new(rgb, depth, points, mask).unwrap()
    }

    #[test]
    fn identity_affine_is_exact() {
        let b = bundle(40, 30);
        let m = AffineParams::identity().matrix(40, 30);
        assert_eq!(warp_bundle(&b, &m).unwrap(), b);
        let cfg = Aug2dConfig {
            rot_deg: 0.0,
            trans_frac: 0.0,
            scale_min: 1.0,
            scale_max: 1.0,
            ..Default::default()
        };
        assert_eq!(random_affine(&b, &cfg, 3).unwrap().0, b);
    }

    #[test]
    fn translation_shifts_content() {
        let b = bundle(40, 30);
        let p = AffineParams {
            tx: 10.0,
            ..AffineParams::identity()
        };
        let out = warp_bundle(&b, &p.matrix(40, 30)).unwrap();
        for y in 0..30 {
            for x in 0..40 {
                if x >= 10 {
                    assert!(*out.mask.get(x, y));
                    assert_eq!(
                        out.rgb.get_pixel(x as u32, y as u32),
                        b.rgb.get_pixel(x as u32 - 10, y as u32)
                    );
                    assert_eq!(out.points.get(x, y), b.points.get(x - 10, y));
                    assert_eq!(out.depth.get(x, y), b.depth.get(x - 10, y));
                } else {
                    assert!(!*out.mask.get(x, y));
                    assert_eq!(out.depth.get(x, y), 0.0);
                }
            }
        }
    }

    #[test]
    fn valid_pixels_map_back_in_bounds() {
        let b = bundle(48, 36);
        let cfg = Aug2dConfig::default();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = sample_affine(&cfg, 48, 36, &mut rng).matrix(48, 36);
            let out = warp_bundle(&b, &m).unwrap();
            let inv = m.try_inverse().unwrap();
            for y in 0..36 {
                for x in 0..48 {
                    if *out.mask.get(x, y) {
                        let q = inv * Vector3::new(x as f64, y as f64, 1.0);
                        let (sx, sy) = ((q.x / q.z).round(), (q.y / q.z).round());
                        assert!((0.0..48.0).contains(&sx) && (0.0..36.0).contains(&sy));
                        // the pointmap records its own source pixel
                        assert_eq!(*out.points.get(x, y), Vector3::new(sx, sy, 1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn perspective_off_or_zero_scale_is_identity() {
        let b = bundle(32, 24);
        let never = Aug2dConfig {
            persp_prob: 0.0,
            ..Default::default()
        };
        let (out, p) = random_perspective(&b, &never, 1).unwrap();
        assert!(p.is_none());
        assert_eq!(out, b);
        let flat = Aug2dConfig {
            persp_prob: 1.0,
            persp_scale: 0.0,
            ..Default::default()
        };
        let (out, p) = random_perspective(&b, &flat, 1).unwrap();
        assert!(p.is_some());
        assert_eq!(out, b);
    }

    #[test]
    fn homography_hits_corners() {
        let src = [[0.0, 0.0], [10.0, 0.0], [10.0, 8.0], [0.0, 8.0]];
        let dst = [[1.0, 0.5], [9.0, 0.2], [9.5, 7.0], [0.3, 7.9]];
        let hm = homography_from_corners(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            let q = hm * Vector3::new(s[0], s[1], 1.0);
            assert!((q.x / q.z - d[0]).abs() < 1e-9 && (q.y / q.z - d[1]).abs() < 1e-9);
        }
    }
}
