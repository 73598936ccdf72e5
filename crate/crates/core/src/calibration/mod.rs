//! Camera parameters for each patch.
//!
//! Two strategies are mixed per patch:
//! - [`CalibrationStrategy::VaryingIntrinsics`]: the crop keeps the source
//!   camera pose and gets rescaled intrinsics ([`rescale_intrinsics`]);
//! - [`CalibrationStrategy::FixedIntrinsics`]: every patch shares one
//!   intrinsics matrix ([`fixed_patch_intrinsics`]) and the pose is recovered
//!   by robust PnP ([`solve_pnp_ransac`]).

mod p3p;
mod pnp;

pub use p3p::{p3p, p4p};
pub use pnp::{
    refine_pose, reprojection_rmse, solve_pnp_ransac, Correspondence, PnpResult, RansacConfig,
    MIN_CORRESPONDENCES,
};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::patch::PatchBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationStrategy {
    /// Rescaled intrinsics, identity extrinsics relative to the source camera.
    VaryingIntrinsics,
    /// Shared intrinsics, extrinsics from PnP (optionally rotated).
    FixedIntrinsics,
}

impl CalibrationStrategy {
    /// Draws the fixed-intrinsics strategy with probability `extrinsic_prob`.
    pub fn draw(rng: &mut impl Rng, extrinsic_prob: f64) -> Self {
        if rng.random::<f64>() < extrinsic_prob {
            CalibrationStrategy::FixedIntrinsics
        } else {
            CalibrationStrategy::VaryingIntrinsics
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CalibrationStrategy::VaryingIntrinsics => "varying_intrinsics",
            CalibrationStrategy::FixedIntrinsics => "fixed_intrinsics",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibConfig {
    /// Probability of the fixed-intrinsics / varying-extrinsics strategy.
    pub extrinsic_prob: f64,
    pub ransac: RansacConfig,
    pub max_correspondences: usize,
    /// Patch resamples allowed when PnP fails before the step is dropped.
    pub patch_retries: usize,
}

impl Default for CalibConfig {
    fn default() -> Self {
        Self {
            extrinsic_prob: 0.8,
            ransac: RansacConfig::default(),
            max_correspondences: 2000,
            patch_retries: 8,
        }
    }
}

/// Intrinsics of a crop `patch` resized to `out_width x out_height`:
/// focal lengths scale by `s`, the principal point shifts by the crop origin
/// and then scales.
pub fn rescale_intrinsics(
    k_full: &CameraIntrinsics,
    patch: &PatchBox,
    out_width: u32,
    out_height: u32,
) -> Result<CameraIntrinsics> {
    k_full.validate()?;
    if patch.area() == 0 || out_width == 0 || out_height == 0 {
        return Err(Error::InvalidParameter(format!(
            "cannot rescale to a zero-area patch {patch:?} -> {out_width}x{out_height}"
        )));
    }
    let sx = out_width as f64 / patch.width() as f64;
    let sy = out_height as f64 / patch.height() as f64;
    Ok(CameraIntrinsics {
        fx: k_full.fx * sx,
        fy: k_full.fy * sy,
        cx: (k_full.cx - patch.u1 as f64) * sx,
        cy: (k_full.cy - patch.v1 as f64) * sy,
    })
}

/// Shared patch intrinsics with the principal point at the image center.
pub fn fixed_patch_intrinsics(
    out_width: u32,
    out_height: u32,
    fx: f64,
    fy: f64,
) -> Result<CameraIntrinsics> {
    CameraIntrinsics::new(fx, fy, out_width as f64 / 2.0, out_height as f64 / 2.0)
}

/// Keeps at most `cap` correspondences, chosen uniformly without replacement
/// and returned in input order.
pub fn subsample_correspondences(
    correspondences: Vec<Correspondence>,
    cap: usize,
    rng: &mut impl Rng,
) -> Vec<Correspondence> {
    if correspondences.len() <= cap {
        return correspondences;
    }
    let mut idx = sample(rng, correspondences.len(), cap).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| correspondences[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap()
    }

    #[test]
    fn identity_crop_keeps_intrinsics_bitwise() {
        let out = rescale_intrinsics(&k(), &PatchBox::full(640, 480), 640, 480).unwrap();
        assert_eq!(out, k());
    }

    #[test]
    fn centered_half_crop() {
        let out = rescale_intrinsics(&k(), &PatchBox::new(160, 120, 480, 360).unwrap(), 320, 240)
            .unwrap();
        assert_eq!(
            out,
            CameraIntrinsics::new(500.0, 500.0, 160.0, 120.0).unwrap()
        );
    }

    #[test]
    fn halving_output_halves_everything() {
        let patch = PatchBox::new(37, 11, 421, 299).unwrap();
        let full = rescale_intrinsics(&k(), &patch, 512, 384).unwrap();
        let half = rescale_intrinsics(&k(), &patch, 256, 192).unwrap();
        assert!((full.fx / 2.0 - half.fx).abs() < 1e-12);
        assert!((full.fy / 2.0 - half.fy).abs() < 1e-12);
        assert!((full.cx / 2.0 - half.cx).abs() < 1e-12);
        assert!((full.cy / 2.0 - half.cy).abs() < 1e-12);
    }

    #[test]
    fn zero_area_patch_rejected() {
        let degenerate = PatchBox {
            u1: 5,
            v1: 5,
            u2: 5,
            v2: 9,
        };
        assert!(rescale_intrinsics(&k(), &degenerate, 512, 384).is_err());
    }

    #[test]
    fn fixed_intrinsics_center_principal_point() {
        let a = fixed_patch_intrinsics(512, 384, 450.0, 450.0).unwrap();
        assert_eq!((a.cx, a.cy), (256.0, 192.0));
        assert_eq!(a.cx / 512.0, 0.5);
        assert_eq!(a, fixed_patch_intrinsics(512, 384, 450.0, 450.0).unwrap());
    }

    #[test]
    fn strategy_mix_follows_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let fixed = (0..n)
            .filter(|_| {
                CalibrationStrategy::draw(&mut rng, 0.8) == CalibrationStrategy::FixedIntrinsics
            })
            .count();
        let p = fixed as f64 / n as f64;
        assert!((p - 0.8).abs() < 0.015, "{p}");
    }

    #[test]
    fn subsample_caps_and_preserves_order() {
        let corr: Vec<Correspondence> = (0..100)
            .map(|i| Correspondence {
                world_point: nalgebra::Vector3::new(i as f64, 0.0, 1.0),
                pixel: nalgebra::Vector2::new(i as f64, 0.0),
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sub = subsample_correspondences(corr, 10, &mut rng);
        assert_eq!(sub.len(), 10);
        assert!(sub.windows(2).all(|w| w[0].pixel.x < w[1].pixel.x));
    }
}
