use std::fs;

use image::{ImageBuffer, Luma, Rgb, RgbImage};

use puzzlegen::config::PipelineConfig;
use puzzlegen::frame::DepthMap;
use puzzlegen::geometry::CameraIntrinsics;
use puzzlegen::io::{
    load_dataset, quantize_depth, read_clip_bundle, read_manifest, write_clip_bundle,
    write_dataset, write_manifest,
};
use puzzlegen::pipeline::image_to_clips;
use puzzlegen::synthetic::{textured_room_frame, two_room_trajectory};
use puzzlegen::Error;

fn tiny_dataset(dir: &std::path::Path, depth_mm: u16) -> std::path::PathBuf {
    RgbImage::from_pixel(4, 3, Rgb([10, 20, 30]))
        .save(dir.join("a_rgb.png"))
        .unwrap();
    ImageBuffer::<Luma<u16>, Vec<u16>>::from_pixel(4, 3, Luma([depth_mm]))
        .save(dir.join("a_depth.png"))
        .unwrap();
    let manifest = r#"{
  "schema_version": 1,
  "units": { "depth_scale": 1000.0, "pose_convention": "camera_to_world", "pixel_center": "integer" },
  "frames": [
    { "id": "a", "rgb": "a_rgb.png", "depth": "a_depth.png",
       "intrinsics": { "fx": 5.0, "fy": 5.0, "cx": 2.0, "cy": 1.0 } }
  ]
}"#;
    let path = dir.join("manifest.json");
    fs::write(&path, manifest).unwrap();
    path
}

#[test]
fn millimeters_decode_to_meters() {
    let dir = tempfile::tempdir().unwrap();
    let frames = load_dataset(&tiny_dataset(dir.path(), 1500)).unwrap();
    assert_eq!(frames.len(), 1);
    assert_eq!(frames[0].depth.get(3, 2), 1.5);
    assert!(frames[0].pose_c2w.is_none());
}

#[test]
fn missing_depth_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = tiny_dataset(dir.path(), 1500);
    fs::remove_file(dir.path().join("a_depth.png")).unwrap();
    let err = load_dataset(&path).unwrap_err();
    assert!(
        matches!(err, Error::Load { ref record, .. } if record == "a"),
        "{err}"
    );
    assert!(err.to_string().contains("a_depth.png"), "{err}");
}

#[test]
fn unknown_schema_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = tiny_dataset(dir.path(), 1500);
    let mut m = read_manifest(&path).unwrap();
    m.schema_version = 99;
    write_manifest(&m, &path).unwrap();
    assert!(matches!(
        load_dataset(&path),
        Err(Error::Schema { found: 99, .. })
    ));
}

#[test]
fn nearest_millimeter() {
    let q = quantize_depth(1.2345);
    assert!(q == 1234 || q == 1235);
    // 1.2345 sits on a half-millimeter boundary, so allow for its binary representation
    assert!((q as f64 / 1000.0 - 1.2345).abs() <= 0.0005 + 1e-12);
    assert_eq!(quantize_depth(0.0), 0);
}

#[test]
fn dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let frames: Vec<_> = two_room_trajectory().into_iter().take(3).collect();
    let back = load_dataset(&write_dataset(&frames, dir.path()).unwrap()).unwrap();
    for (a, b) in frames.iter().zip(&back) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.rgb, b.rgb);
        assert_eq!(a.intrinsics, b.intrinsics);
        let pa = a.pose_c2w.unwrap().to_matrix();
        let pb = b.pose_c2w.unwrap().to_matrix();
        assert!((pa - pb).abs().max() <= 1e-9);
        for (x, y) in a.depth.values().iter().zip(b.depth.values()) {
            assert!((x - y).abs() <= 0.0005 + 1e-12);
        }
    }
}

#[test]
fn clip_bundle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = image_to_clips(&textured_room_frame(), &PipelineConfig::default(), 3).unwrap();
    let manifest = write_clip_bundle(&bundle, dir.path()).unwrap();
    let back = read_clip_bundle(&manifest).unwrap();

    assert_eq!(back.provenance, bundle.provenance);
    assert_eq!(back.source.rgb, bundle.source.rgb);
    assert_eq!(back.frames.len(), bundle.frames.len());
    for (a, b) in bundle.frames.iter().zip(&back.frames) {
        assert_eq!(a.rgb, b.rgb);
        assert_eq!(a.hole_mask, b.hole_mask);
        assert_eq!(a.intrinsics, b.intrinsics);
        assert_eq!(a.strategy, b.strategy);
        assert_eq!(a.patch, b.patch);
        assert_eq!(a.rotated, b.rotated);
        assert_eq!(a.validity, b.validity);
        assert!(
            (a.pose_w2c.to_matrix() - b.pose_w2c.to_matrix())
                .abs()
                .max()
                <= 1e-9
        );
        for (x, y) in a.depth.values().iter().zip(b.depth.values()) {
            assert!((x - y).abs() <= 0.0005 + 1e-12, "{x} vs {y}");
        }
    }
}

#[test]
fn manifest_declares_its_units() {
    let dir = tempfile::tempdir().unwrap();
    let frame = puzzlegen::frame::RgbdFrame {
        id: "one".into(),
        rgb: RgbImage::new(2, 2),
        depth: DepthMap::from_fn(2, 2, |_, _| 2.0),
        intrinsics: CameraIntrinsics::new(1.0, 1.0, 1.0, 1.0).unwrap(),
        pose_c2w: None,
    };
    let path = write_dataset(&[frame], dir.path()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    for key in [
        "schema_version",
        "depth_scale",
        "camera_to_world",
        "pixel_center",
    ] {
        assert!(text.contains(key), "manifest lacks {key}");
    }
}
