//! Manifests, image files and bundle persistence.
//!
//! Layout and field names are documented in `docs/FORMAT.md`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};
use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationStrategy;
use crate::error::{Error, Result};
use crate::frame::{DepthMap, RgbdFrame};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::grid::Grid;
use crate::motion::ViewValidity;
use crate::patch::PatchBox;
use crate::pipeline::{ClipBundle, ClipFrame, Provenance};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEPTH_SCALE: f64 = 1000.0;
/// Rotation drift tolerated in stored poses before they are rejected.
pub const POSE_ORTHO_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    /// Raw depth value per meter.
    pub depth_scale: f64,
    pub pose_convention: String,
    /// `integer`: pixel `(u, v)` is centered at `(u, v)`.
    pub pixel_center: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            depth_scale: DEPTH_SCALE,
            pose_convention: "camera_to_world".into(),
            pixel_center: "integer".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub id: String,
    pub rgb: PathBuf,
    pub depth: PathBuf,
    pub intrinsics: CameraIntrinsics,
    /// Row-major 4x4 camera-to-world matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose_c2w: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole_mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<CalibrationStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<PatchBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotated: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity: Option<ViewValidity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pnp_rmse_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aug2d: Option<bool>,
}

impl FrameRecord {
    fn plain(
        id: &str,
        rgb: PathBuf,
        depth: PathBuf,
        intrinsics: CameraIntrinsics,
        pose: Option<&Pose>,
    ) -> Self {
        Self {
            id: id.to_string(),
            rgb,
            depth,
            intrinsics,
            pose_c2w: pose.map(pose_to_vec),
            hole_mask: None,
            strategy: None,
            patch: None,
            rotated: None,
            validity: None,
            pnp_rmse_px: None,
            aug2d: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleProvenance {
    pub source_id: String,
    pub seed: u64,
    pub config_hash: String,
    pub world_frame: String,
    /// Camera-to-world pose of the first frame, row-major.
    pub first_frame_pose_c2w: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub units: Units,
    pub frames: Vec<FrameRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<FrameRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<BundleProvenance>,
}

pub fn pose_to_vec(pose_c2w: &Pose) -> Vec<f64> {
    let m = pose_c2w.to_matrix();
    (0..4)
        .flat_map(|r| (0..4).map(move |c| m[(r, c)]))
        .collect()
}

/// Parses a row-major 4x4 camera-to-world pose, snapping small rotation drift.
pub fn pose_from_vec(v: &[f64]) -> Result<Pose> {
    if v.len() != 16 {
        return Err(Error::Input(format!(
            "pose needs 16 values, got {}",
            v.len()
        )));
    }
    let m = Matrix4::from_row_slice(v);
    if let Ok(p) = Pose::from_matrix(&m) {
        return Ok(p);
    }
    let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
    if bottom != [0.0, 0.0, 0.0, 1.0] {
        return Err(Error::Input(format!(
            "pose bottom row must be [0 0 0 1], got {bottom:?}"
        )));
    }
    let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
    let t: Vector3<f64> = m.fixed_view::<3, 1>(0, 3).into_owned();
    Pose::new_orthonormalized(r, t, POSE_ORTHO_TOL)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(Error::Schema {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(serde_json::from_value(value)?)
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_rgb8())
}

/// Reads a 16-bit single-channel depth image and divides by `scale`.
pub fn read_depth(path: &Path, scale: f64) -> Result<DepthMap> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let DynamicImage::ImageLuma16(buf) = img else {
        return Err(Error::Input(format!(
            "{}: depth must be 16-bit single-channel, got {:?}",
            path.display(),
            img.color()
        )));
    };
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    DepthMap::from_values(
        w,
        h,
        buf.into_raw()
            .into_iter()
            .map(|d| d as f64 / scale)
            .collect(),
    )
}

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Meters to 16-bit millimeters, rounded to nearest and saturated.
pub fn quantize_depth(d: f64) -> u16 {
    (d * DEPTH_SCALE).round().clamp(0.0, u16::MAX as f64) as u16
}

pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(
        depth.width() as u32,
        depth.height() as u32,
        depth.values().iter().map(|&d| quantize_depth(d)).collect(),
    )
    .expect("buffer sized from dims");
    buf.save(path).map_err(image_err(path))
}

/// 1-bit grayscale PNG, white (1) on holes.
pub fn write_mask(path: &Path, mask: &Grid<bool>) -> Result<()> {
    let png_err = |e: png::EncodingError| Error::Png {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let (w, h) = (mask.width(), mask.height());
    let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::One);
    let mut writer = enc.write_header().map_err(png_err)?;
    let stride = w.div_ceil(8);
    let mut data = vec![0u8; stride * h];
    for y in 0..h {
        for x in 0..w {
            if *mask.get(x, y) {
                data[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    writer.write_image_data(&data).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

pub fn read_mask(path: &Path) -> Result<Grid<bool>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let png_err = |e: png::DecodingError| Error::Png {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = png::Decoder::new(BufReader::new(file));
    dec.set_transformations(png::Transformations::EXPAND);
    let mut reader = dec.read_info().map_err(png_err)?;
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Png {
            path: path.to_path_buf(),
            reason: format!(
                "expected a grayscale mask, got {:?}/{:?}",
                info.color_type, info.bit_depth
            ),
        });
    }
    let (w, h) = (info.width as usize, info.height as usize);
    Ok(Grid::from_fn(w, h, |x, y| buf[y * info.line_size + x] > 0))
}

/// Loads every frame of a manifest, depth converted to meters.
pub fn load_dataset(manifest_path: &Path) -> Result<Vec<RgbdFrame>> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    manifest
        .frames
        .iter()
        .map(|r| load_record(base, r, manifest.units.depth_scale))
        .collect()
}

fn load_record(base: &Path, r: &FrameRecord, depth_scale: f64) -> Result<RgbdFrame> {
    let fail = |reason: String| Error::Load {
        record: r.id.clone(),
        reason,
    };
    let rgb = read_rgb(&resolve(base, &r.rgb)).map_err(|e| fail(e.to_string()))?;
    let depth =
        read_depth(&resolve(base, &r.depth), depth_scale).map_err(|e| fail(e.to_string()))?;
    r.intrinsics.validate().map_err(|e| fail(e.to_string()))?;
    let pose_c2w = r
        .pose_c2w
        .as_deref()
        .map(pose_from_vec)
        .transpose()
        .map_err(|e| fail(e.to_string()))?;
    let frame = RgbdFrame {
        id: r.id.clone(),
        rgb,
        depth,
        intrinsics: r.intrinsics,
        pose_c2w,
    };
    frame.check().map_err(|e| fail(e.to_string()))?;
    Ok(frame)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes frames as `<id>_rgb.png` / `<id>_depth.png` plus `manifest.json`.
pub fn write_dataset(frames: &[RgbdFrame], dir: &Path) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut records = Vec::with_capacity(frames.len());
    for f in frames {
        let rgb = PathBuf::from(format!("{}_rgb.png", f.id));
        let depth = PathBuf::from(format!("{}_depth.png", f.id));
        let p = dir.join(&rgb);
        f.rgb.save(&p).map_err(image_err(&p))?;
        write_depth(&dir.join(&depth), &f.depth)?;
        records.push(FrameRecord::plain(
            &f.id,
            rgb,
            depth,
            f.intrinsics,
            f.pose_c2w.as_ref(),
        ));
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        units: Units::default(),
        frames: records,
        source: None,
        provenance: None,
    };
    let path = dir.join("manifest.json");
    write_manifest(&manifest, &path)?;
    Ok(path)
}

pub fn write_clip_bundle(bundle: &ClipBundle, dir: &Path) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut records = Vec::with_capacity(bundle.frames.len());
    for (i, f) in bundle.frames.iter().enumerate() {
        let id = format!("frame_{i:03}");
        let rgb = PathBuf::from(format!("{id}_rgb.png"));
        let depth = PathBuf::from(format!("{id}_depth.png"));
        let hole = PathBuf::from(format!("{id}_hole.png"));
        let p = dir.join(&rgb);
        f.rgb.save(&p).map_err(image_err(&p))?;
        write_depth(&dir.join(&depth), &f.depth)?;
        write_mask(&dir.join(&hole), &f.hole_mask)?;
        let mut rec =
            FrameRecord::plain(&id, rgb, depth, f.intrinsics, Some(&f.pose_w2c.inverse()));
        rec.hole_mask = Some(hole);
        rec.strategy = Some(f.strategy);
        rec.patch = Some(f.patch);
        rec.rotated = Some(f.rotated);
        rec.validity = Some(f.validity);
        rec.pnp_rmse_px = f.pnp_rmse_px;
        rec.aug2d = Some(f.aug2d);
        records.push(rec);
    }
    let src = &bundle.source;
    let (srgb, sdepth) = (
        PathBuf::from("source_rgb.png"),
        PathBuf::from("source_depth.png"),
    );
    let p = dir.join(&srgb);
    src.rgb.save(&p).map_err(image_err(&p))?;
    write_depth(&dir.join(&sdepth), &src.depth)?;
    let pv = &bundle.provenance;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        units: Units::default(),
        frames: records,
        source: Some(FrameRecord::plain(
            &src.id,
            srgb,
            sdepth,
            src.intrinsics,
            src.pose_c2w.as_ref(),
        )),
        provenance: Some(BundleProvenance {
            source_id: pv.source_id.clone(),
            seed: pv.seed,
            config_hash: pv.config_hash.clone(),
            world_frame: pv.world_frame.clone(),
            first_frame_pose_c2w: bundle.first_frame_pose().map(|p| pose_to_vec(&p.inverse())),
            warnings: pv.warnings.clone(),
        }),
    };
    let path = dir.join("manifest.json");
    write_manifest(&manifest, &path)?;
    Ok(path)
}

/// Accepts a bundle directory or its manifest path.
pub fn read_clip_bundle(path: &Path) -> Result<ClipBundle> {
    let manifest_path = if path.is_dir() {
        path.join("manifest.json")
    } else {
        path.to_path_buf()
    };
    let manifest = read_manifest(&manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let scale = manifest.units.depth_scale;
    let missing = |what: &str| {
        Error::Input(format!(
            "{}: not a clip bundle (no {what})",
            manifest_path.display()
        ))
    };
    let source_rec = manifest.source.as_ref().ok_or_else(|| missing("source"))?;
    let pv = manifest
        .provenance
        .as_ref()
        .ok_or_else(|| missing("provenance"))?;
    let source = load_record(base, source_rec, scale)?;
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for r in &manifest.frames {
        let f = load_record(base, r, scale)?;
        let fail = |reason: String| Error::Load {
            record: r.id.clone(),
            reason,
        };
        let hole_path = r
            .hole_mask
            .as_ref()
            .ok_or_else(|| fail("no hole_mask".into()))?;
        let hole_mask = read_mask(&resolve(base, hole_path)).map_err(|e| fail(e.to_string()))?;
        let pose_c2w = f.pose_c2w.ok_or_else(|| fail("no pose".into()))?;
        frames.push(ClipFrame {
            rgb: f.rgb,
            depth: f.depth,
            hole_mask,
            intrinsics: f.intrinsics,
            pose_w2c: pose_c2w.inverse(),
            strategy: r.strategy.ok_or_else(|| fail("no strategy".into()))?,
            patch: r.patch.ok_or_else(|| fail("no patch".into()))?,
            rotated: r.rotated.unwrap_or(false),
            validity: r.validity.ok_or_else(|| fail("no validity".into()))?,
            pnp_rmse_px: r.pnp_rmse_px,
            aug2d: r.aug2d.unwrap_or(false),
        });
    }
    Ok(ClipBundle {
        frames,
        source,
        provenance: Provenance {
            source_id: pv.source_id.clone(),
            seed: pv.seed,
            config_hash: pv.config_hash.clone(),
            world_frame: pv.world_frame.clone(),
            warnings: pv.warnings.clone(),
        },
    })
}

/// Grayscale depth, near = bright, invalid = black.
pub fn depth_to_gray(depth: &DepthMap) -> GrayImage {
    let valid: Vec<f64> = depth
        .values()
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .collect();
    let lo = valid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = valid.iter().copied().fold(0.0, f64::max);
    let span = (hi - lo).max(1e-9);
    GrayImage::from_fn(depth.width() as u32, depth.height() as u32, |x, y| {
        let d = depth.get(x as usize, y as usize);
        if d > 0.0 {
            Luma([(255.0 - 215.0 * (d - lo) / span).round() as u8])
        } else {
            Luma([0])
        }
    })
}

/// One RGB | depth | hole panel per frame, written as `frame_XXX_panel.png`.
pub fn write_preview(bundle: &ClipBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut out = Vec::with_capacity(bundle.frames.len());
    for (i, f) in bundle.frames.iter().enumerate() {
        let (w, h) = (f.width() as u32, f.height() as u32);
        let gray = depth_to_gray(&f.depth);
        let panel = RgbImage::from_fn(3 * w, h, |x, y| match x / w {
            0 => *f.rgb.get_pixel(x, y),
            1 => {
                let g = gray.get_pixel(x - w, y).0[0];
                Rgb([g, g, g])
            }
            _ => {
                if *f.hole_mask.get((x - 2 * w) as usize, y as usize) {
                    Rgb([255, 255, 255])
                } else {
                    Rgb([40, 40, 40])
                }
            }
        });
        let p = dir.join(format!("frame_{i:03}_panel.png"));
        panel.save(&p).map_err(image_err(&p))?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rounds_to_nearest() {
        assert_eq!(quantize_depth(1.5), 1500);
        assert!(matches!(quantize_depth(1.2345), 1234 | 1235));
        assert_eq!(quantize_depth(0.0), 0);
        assert_eq!(quantize_depth(100.0), u16::MAX);
    }

    #[test]
    fn pose_vec_round_trip() {
        let p = crate::synthetic::look_pose(Vector3::new(0.3, -0.2, 1.0), 20.0, 5.0);
        let back = pose_from_vec(&pose_to_vec(&p)).unwrap();
        assert!((back.to_matrix() - p.to_matrix()).abs().max() < 1e-12);
        assert!(pose_from_vec(&[0.0; 15]).is_err());
        let mut drift = pose_to_vec(&p);
        drift[0] += 1e-6;
        assert!(pose_from_vec(&drift).is_ok());
        drift[0] += 0.1;
        assert!(pose_from_vec(&drift).is_err());
    }

    #[test]
    fn mask_round_trip_odd_width() {
        let dir = tempfile::tempdir().unwrap();
        let m = Grid::from_fn(13, 5, |x, y| (x * 3 + y) % 4 == 0);
        let p = dir.path().join("m.png");
        write_mask(&p, &m).unwrap();
        assert_eq!(read_mask(&p).unwrap(), m);
    }
}
