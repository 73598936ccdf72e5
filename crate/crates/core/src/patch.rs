//! Ordered, overlapping patch sequences that stand in for video frames.
//!
//! Consecutive patches overlap by a target IoU that decays linearly across
//! the clip, so early frames are nearly redundant and later ones diverge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel rectangle `[u1, u2) x [v1, v2)` in the source frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatchBox {
    pub u1: u32,
    pub v1: u32,
    pub u2: u32,
    pub v2: u32,
}

impl PatchBox {
    pub fn new(u1: u32, v1: u32, u2: u32, v2: u32) -> Result<Self> {
        if u1 >= u2 || v1 >= v2 {
            return Err(Error::InvalidParameter(format!(
                "empty patch [{u1}, {v1}, {u2}, {v2}]"
            )));
        }
        Ok(Self { u1, v1, u2, v2 })
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self {
            u1: 0,
            v1: 0,
            u2: width,
            v2: height,
        }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.u2.saturating_sub(self.u1)
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.v2.saturating_sub(self.v1)
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.u1 < self.u2 && self.v1 < self.v2 && self.u2 <= width && self.v2 <= height
    }

    pub fn iou(&self, other: &PatchBox) -> f64 {
        bbox_iou(self, other)
    }
}

/// Intersection over union of two boxes.
pub fn bbox_iou(a: &PatchBox, b: &PatchBox) -> f64 {
    let iw = a.u2.min(b.u2).saturating_sub(a.u1.max(b.u1)) as u64;
    let ih = a.v2.min(b.v2).saturating_sub(a.v1.max(b.v1)) as u64;
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Linearly decaying consecutive-IoU target with a symmetric band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapSchedule {
    pub iou_start: f64,
    pub iou_end: f64,
    pub band_half_width: f64,
}

impl Default for OverlapSchedule {
    fn default() -> Self {
        Self {
            iou_start: 0.7,
            iou_end: 0.3,
            band_half_width: 0.1,
        }
    }
}

impl OverlapSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.iou_start <= 1.0
            && self.iou_start >= self.iou_end
            && self.iou_end > 0.0
            && self.band_half_width >= 0.0;
        if !ok {
            return Err(Error::Config(format!(
                "overlap schedule needs 1 >= iou_start >= iou_end > 0 and a non-negative band, got {self:?}"
            )));
        }
        Ok(())
    }

    /// IoU band `[lo, hi]` that patch `step` must satisfy against patch `step - 1`.
    /// Step 0 is unconstrained.
    pub fn band(&self, step: usize, count: usize) -> Option<(f64, f64)> {
        if step == 0 {
            return None;
        }
        let frac = if count > 2 {
            (step - 1) as f64 / (count - 2) as f64
        } else {
            0.0
        };
        let target = self.iou_start + (self.iou_end - self.iou_start) * frac;
        let lo = (target - self.band_half_width).max(0.01);
        let hi = (target + self.band_half_width).min(1.0);
        Some((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchConfig {
    pub count: usize,
    pub size_min_frac: f64,
    pub size_max_frac: f64,
    pub schedule: OverlapSchedule,
    pub output_width: u32,
    pub output_height: u32,
    pub retry_budget: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            count: 8,
            size_min_frac: 0.3,
            size_max_frac: 0.8,
            schedule: OverlapSchedule::default(),
            output_width: 512,
            output_height: 384,
            retry_budget: 64,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("patch.count must be at least 1".into()));
        }
        if !(self.size_min_frac > 0.0
            && self.size_min_frac <= self.size_max_frac
            && self.size_max_frac <= 1.0)
        {
            return Err(Error::Config(format!(
                "patch size range must satisfy 0 < min <= max <= 1, got [{}, {}]",
                self.size_min_frac, self.size_max_frac
            )));
        }
        if self.output_width == 0 || self.output_height == 0 {
            return Err(Error::Config(
                "patch output resolution must be non-zero".into(),
            ));
        }
        if self.retry_budget == 0 {
            return Err(Error::Config(
                "patch.retry_budget must be at least 1".into(),
            ));
        }
        self.schedule.validate()
    }

    pub fn aspect(&self) -> f64 {
        self.output_width as f64 / self.output_height as f64
    }
}

/// Proposes patches one step at a time so callers can resample a step that
/// later fails calibration.
#[derive(Debug, Clone)]
pub struct PatchSampler {
    frame_width: u32,
    frame_height: u32,
    cfg: PatchConfig,
    side_min: f64,
    side_max: f64,
}

impl PatchSampler {
    pub fn new(frame_width: u32, frame_height: u32, cfg: &PatchConfig) -> Result<Self> {
        cfg.validate()?;
        let short = frame_width.min(frame_height) as f64;
        let side_min = cfg.size_min_frac * short;
        let side_max = cfg.size_max_frac * short;
        let sampler = Self {
            frame_width,
            frame_height,
            cfg: cfg.clone(),
            side_min,
            side_max,
        };
        let (w_max, h_max) = sampler.dims_for_side(side_max);
        let (w_min, h_min) = sampler.dims_for_side(side_min);
        if w_min == 0 || h_min == 0 || w_max > frame_width || h_max > frame_height {
            return Err(Error::Config(format!(
                "a {frame_width}x{frame_height} frame cannot hold patches of {w_min}x{h_min} to {w_max}x{h_max} \
                 at output aspect {:.3}",
                cfg.aspect()
            )));
        }
        Ok(sampler)
    }

    pub fn config(&self) -> &PatchConfig {
        &self.cfg
    }

    /// Patch dimensions for a given short-side length, aspect locked to the output.
    fn dims_for_side(&self, side: f64) -> (u32, u32) {
        let aspect = self.cfg.aspect();
        if aspect >= 1.0 {
            let h = side.round().max(1.0);
            ((h * aspect).round() as u32, h as u32)
        } else {
            let w = side.round().max(1.0);
            (w as u32, (w / aspect).round() as u32)
        }
    }

    fn place(&self, w: u32, h: u32, cx: f64, cy: f64) -> PatchBox {
        let max_u = (self.frame_width - w) as f64;
        let max_v = (self.frame_height - h) as f64;
        let u1 = (cx - w as f64 / 2.0).round().clamp(0.0, max_u) as u32;
        let v1 = (cy - h as f64 / 2.0).round().clamp(0.0, max_v) as u32;
        PatchBox {
            u1,
            v1,
            u2: u1 + w,
            v2: v1 + h,
        }
    }

    /// One proposal for `step`; `None` when it misses the IoU band.
    pub fn propose(
        &self,
        step: usize,
        previous: Option<&PatchBox>,
        rng: &mut impl Rng,
    ) -> Option<PatchBox> {
        let side = if self.side_max > self.side_min {
            rng.random_range(self.side_min..=self.side_max)
        } else {
            self.side_min
        };
        let (w, h) = self.dims_for_side(side);
        let (prev, (lo, hi)) = match (previous, self.cfg.schedule.band(step, self.cfg.count)) {
            (Some(p), Some(band)) => (p, band),
            _ => {
                let u1 = rng.random_range(0..=self.frame_width - w);
                let v1 = rng.random_range(0..=self.frame_height - h);
                return Some(PatchBox {
                    u1,
                    v1,
                    u2: u1 + w,
                    v2: v1 + h,
                });
            }
        };
        let target = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        let pcx = (prev.u1 + prev.u2) as f64 / 2.0;
        let pcy = (prev.v1 + prev.v2) as f64 / 2.0;
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let (dx, dy) = (phi.cos(), phi.sin());
        let at = |lambda: f64| self.place(w, h, pcx + lambda * dx, pcy + lambda * dy);

        // IoU falls as the box slides away from the previous center.
        if bbox_iou(&at(0.0), prev) < target {
            let candidate = at(0.0);
            let iou = bbox_iou(&candidate, prev);
            return (iou >= lo && iou <= hi).then_some(candidate);
        }
        let (mut a, mut b) = (
            0.0,
            (self.frame_width as f64).hypot(self.frame_height as f64),
        );
        for _ in 0..40 {
            let mid = 0.5 * (a + b);
            if bbox_iou(&at(mid), prev) >= target {
                a = mid;
            } else {
                b = mid;
            }
        }
        let candidate = at(a);
        let iou = bbox_iou(&candidate, prev);
        (iou >= lo && iou <= hi).then_some(candidate)
    }

    /// Proposes until one lands in the band or the retry budget runs out.
    pub fn propose_with_retries(
        &self,
        step: usize,
        previous: Option<&PatchBox>,
        rng: &mut impl Rng,
    ) -> Result<PatchBox> {
        for _ in 0..self.cfg.retry_budget {
            if let Some(b) = self.propose(step, previous, rng) {
                return Ok(b);
            }
        }
        Err(Error::Sampling {
            step,
            attempts: self.cfg.retry_budget,
        })
    }
}

/// Ordered list of `cfg.count` patches; deterministic in `seed`.
pub fn sample_patch_sequence(
    frame_width: u32,
    frame_height: u32,
    cfg: &PatchConfig,
    seed: u64,
) -> Result<Vec<PatchBox>> {
    let sampler = PatchSampler::new(frame_width, frame_height, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<PatchBox> = Vec::with_capacity(cfg.count);
    for step in 0..cfg.count {
        let b = sampler.propose_with_retries(step, out.last(), &mut rng)?;
        out.push(b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pb(u1: u32, v1: u32, u2: u32, v2: u32) -> PatchBox {
        PatchBox::new(u1, v1, u2, v2).unwrap()
    }

    #[test]
    fn iou_basics() {
        let a = pb(0, 0, 2, 2);
        assert_eq!(bbox_iou(&a, &a), 1.0);
        assert_eq!(bbox_iou(&a, &pb(5, 5, 6, 6)), 0.0);
        assert!((bbox_iou(&a, &pb(1, 0, 3, 2)) - 2.0 / 6.0).abs() < 1e-12);
        // touching edges do not overlap
        assert_eq!(bbox_iou(&a, &pb(2, 0, 4, 2)), 0.0);
    }

    #[test]
    fn empty_box_rejected() {
        assert!(PatchBox::new(3, 0, 3, 4).is_err());
    }

    #[test]
    fn schedule_decays_linearly() {
        let s = OverlapSchedule::default();
        assert_eq!(s.band(0, 8), None);
        let (lo, hi) = s.band(1, 8).unwrap();
        assert!((lo - 0.6).abs() < 1e-12 && (hi - 0.8).abs() < 1e-12);
        let (lo, hi) = s.band(7, 8).unwrap();
        assert!((lo - 0.2).abs() < 1e-12 && (hi - 0.4).abs() < 1e-12);
    }

    #[test]
    fn schedule_rejects_increasing_overlap() {
        let s = OverlapSchedule {
            iou_start: 0.3,
            iou_end: 0.7,
            band_half_width: 0.1,
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn single_patch() {
        let cfg = PatchConfig {
            count: 1,
            ..Default::default()
        };
        let seq = sample_patch_sequence(640, 480, &cfg, 3).unwrap();
        assert_eq!(seq.len(), 1);
        assert!(seq[0].fits_in(640, 480));
    }

    #[test]
    fn consecutive_pairs_stay_in_band() {
        let cfg = PatchConfig {
            count: 5,
            schedule: OverlapSchedule {
                iou_start: 0.8,
                iou_end: 0.4,
                band_half_width: 0.1,
            },
            ..Default::default()
        };
        for seed in 0..50 {
            let seq = sample_patch_sequence(640, 480, &cfg, seed).unwrap();
            for m in 1..seq.len() {
                let (lo, hi) = cfg.schedule.band(m, cfg.count).unwrap();
                let iou = bbox_iou(&seq[m], &seq[m - 1]);
                assert!(
                    iou >= lo && iou <= hi,
                    "seed {seed} step {m}: {iou} not in [{lo}, {hi}]"
                );
            }
        }
    }

    #[test]
    fn aspect_is_locked() {
        let cfg = PatchConfig::default();
        for b in sample_patch_sequence(640, 480, &cfg, 9).unwrap() {
            let expected_w = b.height() as f64 * cfg.aspect();
            assert!((b.width() as f64 - expected_w).abs() <= 1.0, "{b:?}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = PatchConfig::default();
        assert_eq!(
            sample_patch_sequence(640, 480, &cfg, 42).unwrap(),
            sample_patch_sequence(640, 480, &cfg, 42).unwrap()
        );
    }

    #[test]
    fn frame_too_small_is_config_error() {
        let cfg = PatchConfig::default();
        assert!(matches!(
            sample_patch_sequence(480, 640, &cfg, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn impossible_band_reports_attempts() {
        // A band demanding IoU ~1 with a wide size range almost never hits.
        let cfg = PatchConfig {
            count: 2,
            size_min_frac: 0.1,
            size_max_frac: 0.9,
            schedule: OverlapSchedule {
                iou_start: 1.0,
                iou_end: 1.0,
                band_half_width: 0.0,
            },
            output_width: 4,
            output_height: 4,
            retry_budget: 3,
        };
        let err = sample_patch_sequence(1000, 1000, &cfg, 1).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Sampling {
                    step: 1,
                    attempts: 3
                }
            ),
            "{err}"
        );
    }
}
