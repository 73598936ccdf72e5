//! Pipeline configuration with a flat `key = value` text form.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment2d::Aug2dConfig;
use crate::calibration::CalibConfig;
use crate::covisibility::CovisConfig;
use crate::error::{Error, Result};
use crate::keyframe::KeyframeParams;
use crate::motion::RotConfig;
use crate::patch::PatchConfig;
use crate::render::RenderConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub patch: PatchConfig,
    pub calib: CalibConfig,
    pub rot: RotConfig,
    pub render: RenderConfig,
    pub covis: CovisConfig,
    pub keyframe: KeyframeParams,
    pub aug2d: Aug2dConfig,
    pub seed: u64,
}

/// Every recognized key, in canonical order.
pub const KEYS: &[&str] = &[
    "patch.count",
    "patch.size_min_frac",
    "patch.size_max_frac",
    "patch.iou_start",
    "patch.iou_end",
    "patch.iou_band",
    "patch.output_width",
    "patch.output_height",
    "patch.retry_budget",
    "calib.extrinsic_prob",
    "calib.ransac_thresh_px",
    "calib.ransac_max_iters",
    "calib.min_inlier_frac",
    "calib.max_correspondences",
    "calib.rmse_ceiling_px",
    "calib.patch_retries",
    "rot.enabled",
    "rot.theta_min_deg",
    "rot.theta_max_deg",
    "rot.sigma_deg",
    "rot.theta_valid_deg",
    "rot.candidates",
    "rot.frontcov_floor",
    "rot.imgcov_floor",
    "render.splat_px",
    "render.dilate",
    "render.hole_max_frac",
    "covis.depth_tol_rel",
    "covis.depth_tol_abs",
    "covis.stride",
    "keyframe.eta",
    "keyframe.tau",
    "keyframe.rho",
    "aug2d.enabled",
    "aug2d.rot_deg",
    "aug2d.trans_frac",
    "aug2d.scale_min",
    "aug2d.scale_max",
    "aug2d.persp_scale",
    "aug2d.persp_prob",
    "seed",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse `{value}`: {e}")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.patch.validate()?;
        self.rot.sampler.validate()?;
        self.covis.validate()?;
        self.aug2d.validate()?;
        if !(0.0..=1.0).contains(&self.calib.extrinsic_prob) {
            return Err(Error::Config(
                "calib.extrinsic_prob must lie in [0, 1]".into(),
            ));
        }
        if self.rot.candidates == 0 {
            return Err(Error::Config("rot.candidates must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.render.hole_max_frac) {
            return Err(Error::Config(
                "render.hole_max_frac must lie in [0, 1]".into(),
            ));
        }
        if self.render.splat_px == 0 {
            return Err(Error::Config("render.splat_px must be at least 1".into()));
        }
        Ok(())
    }

    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "patch.count" => self.patch.count = parse(key, v)?,
            "patch.size_min_frac" => self.patch.size_min_frac = parse(key, v)?,
            "patch.size_max_frac" => self.patch.size_max_frac = parse(key, v)?,
            "patch.iou_start" => self.patch.schedule.iou_start = parse(key, v)?,
            "patch.iou_end" => self.patch.schedule.iou_end = parse(key, v)?,
            "patch.iou_band" => self.patch.schedule.band_half_width = parse(key, v)?,
            "patch.output_width" => self.patch.output_width = parse(key, v)?,
            "patch.output_height" => self.patch.output_height = parse(key, v)?,
            "patch.retry_budget" => self.patch.retry_budget = parse(key, v)?,
            "calib.extrinsic_prob" => self.calib.extrinsic_prob = parse(key, v)?,
            "calib.ransac_thresh_px" => self.calib.ransac.threshold_px = parse(key, v)?,
            "calib.ransac_max_iters" => self.calib.ransac.max_iterations = parse(key, v)?,
            "calib.min_inlier_frac" => self.calib.ransac.min_inlier_fraction = parse(key, v)?,
            "calib.max_correspondences" => self.calib.max_correspondences = parse(key, v)?,
            "calib.rmse_ceiling_px" => self.calib.ransac.rmse_ceiling_px = parse(key, v)?,
            "calib.patch_retries" => self.calib.patch_retries = parse(key, v)?,
            "rot.enabled" => self.rot.enabled = parse(key, v)?,
            "rot.theta_min_deg" => self.rot.sampler.theta_min_deg = parse(key, v)?,
            "rot.theta_max_deg" => self.rot.sampler.theta_max_deg = parse(key, v)?,
            "rot.sigma_deg" => self.rot.sampler.sigma_deg = parse(key, v)?,
            "rot.theta_valid_deg" => self.rot.validity.theta_valid_deg = parse(key, v)?,
            "rot.candidates" => self.rot.candidates = parse(key, v)?,
            "rot.frontcov_floor" => self.rot.validity.front_floor = parse(key, v)?,
            "rot.imgcov_floor" => self.rot.validity.img_floor = parse(key, v)?,
            "render.splat_px" => self.render.splat_px = parse(key, v)?,
            "render.dilate" => self.render.dilate = parse(key, v)?,
            "render.hole_max_frac" => self.render.hole_max_frac = parse(key, v)?,
            "covis.depth_tol_rel" => self.covis.depth_tol_rel = parse(key, v)?,
            "covis.depth_tol_abs" => {
                self.covis.depth_tol_abs = match v {
                    "" | "none" => None,
                    _ => Some(parse(key, v)?),
                }
            }
            "covis.stride" => self.covis.stride = parse(key, v)?,
            "keyframe.eta" => self.keyframe.eta = parse(key, v)?,
            "keyframe.tau" => self.keyframe.tau_o = parse(key, v)?,
            "keyframe.rho" => self.keyframe.rho = parse(key, v)?,
            "aug2d.enabled" => self.aug2d.enabled = parse(key, v)?,
            "aug2d.rot_deg" => self.aug2d.rot_deg = parse(key, v)?,
            "aug2d.trans_frac" => self.aug2d.trans_frac = parse(key, v)?,
            "aug2d.scale_min" => self.aug2d.scale_min = parse(key, v)?,
            "aug2d.scale_max" => self.aug2d.scale_max = parse(key, v)?,
            "aug2d.persp_scale" => self.aug2d.persp_scale = parse(key, v)?,
            "aug2d.persp_prob" => self.aug2d.persp_prob = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "patch.count" => self.patch.count.to_string(),
            "patch.size_min_frac" => self.patch.size_min_frac.to_string(),
            "patch.size_max_frac" => self.patch.size_max_frac.to_string(),
            "patch.iou_start" => self.patch.schedule.iou_start.to_string(),
            "patch.iou_end" => self.patch.schedule.iou_end.to_string(),
            "patch.iou_band" => self.patch.schedule.band_half_width.to_string(),
            "patch.output_width" => self.patch.output_width.to_string(),
            "patch.output_height" => self.patch.output_height.to_string(),
            "patch.retry_budget" => self.patch.retry_budget.to_string(),
            "calib.extrinsic_prob" => self.calib.extrinsic_prob.to_string(),
            "calib.ransac_thresh_px" => self.calib.ransac.threshold_px.to_string(),
            "calib.ransac_max_iters" => self.calib.ransac.max_iterations.to_string(),
            "calib.min_inlier_frac" => self.calib.ransac.min_inlier_fraction.to_string(),
            "calib.max_correspondences" => self.calib.max_correspondences.to_string(),
            "calib.rmse_ceiling_px" => self.calib.ransac.rmse_ceiling_px.to_string(),
            "calib.patch_retries" => self.calib.patch_retries.to_string(),
            "rot.enabled" => self.rot.enabled.to_string(),
            "rot.theta_min_deg" => self.rot.sampler.theta_min_deg.to_string(),
            "rot.theta_max_deg" => self.rot.sampler.theta_max_deg.to_string(),
            "rot.sigma_deg" => self.rot.sampler.sigma_deg.to_string(),
            "rot.theta_valid_deg" => self.rot.validity.theta_valid_deg.to_string(),
            "rot.candidates" => self.rot.candidates.to_string(),
            "rot.frontcov_floor" => self.rot.validity.front_floor.to_string(),
            "rot.imgcov_floor" => self.rot.validity.img_floor.to_string(),
            "render.splat_px" => self.render.splat_px.to_string(),
            "render.dilate" => self.render.dilate.to_string(),
            "render.hole_max_frac" => self.render.hole_max_frac.to_string(),
            "covis.depth_tol_rel" => self.covis.depth_tol_rel.to_string(),
            "covis.depth_tol_abs" => self
                .covis
                .depth_tol_abs
                .map_or_else(|| "none".to_string(), |t| t.to_string()),
            "covis.stride" => self.covis.stride.to_string(),
            "keyframe.eta" => self.keyframe.eta.to_string(),
            "keyframe.tau" => self.keyframe.tau_o.to_string(),
            "keyframe.rho" => self.keyframe.rho.to_string(),
            "aug2d.enabled" => self.aug2d.enabled.to_string(),
            "aug2d.rot_deg" => self.aug2d.rot_deg.to_string(),
            "aug2d.trans_frac" => self.aug2d.trans_frac.to_string(),
            "aug2d.scale_min" => self.aug2d.scale_min.to_string(),
            "aug2d.scale_max" => self.aug2d.scale_max.to_string(),
            "aug2d.persp_scale" => self.aug2d.persp_scale.to_string(),
            "aug2d.persp_prob" => self.aug2d.persp_prob.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Canonical text: every key in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    /// SHA-256 of the canonical text, hex-encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.set("keyframe.eta", "0.15").unwrap();
        cfg.set("covis.depth_tol_abs", "0.02").unwrap();
        cfg.set("seed", "99").unwrap();
        let back = PipelineConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(PipelineConfig::default().hash(), cfg.hash());
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = PipelineConfig::default();
        for k in KEYS {
            let v = cfg.get(k).unwrap();
            let mut c = cfg.clone();
            c.set(k, &v).unwrap();
            assert_eq!(c, cfg, "{k}");
        }
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        assert!(PipelineConfig::from_text("patch.colour = red").is_err());
        assert!(PipelineConfig::from_text("patch.count = many").is_err());
        assert!(PipelineConfig::from_text("just text").is_err());
        let cfg = PipelineConfig::from_text("# comment\n\nrot.candidates = 4  # inline\n").unwrap();
        assert_eq!(cfg.rot.candidates, 4);
    }
}
