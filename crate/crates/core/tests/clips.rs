use nalgebra::Vector3;

use puzzlegen::config::PipelineConfig;
use puzzlegen::pipeline::{clips_to_clips, derive_seed, image_to_clips};
use puzzlegen::synthetic::{default_intrinsics, look_pose, two_room_trajectory, Scene};

#[test]
fn one_frame_clip_reduces_to_image_to_clips() {
    let frame = two_room_trajectory().swap_remove(4);
    let cfg = PipelineConfig::default();
    let out = clips_to_clips(std::slice::from_ref(&frame), &cfg, 17).unwrap();
    assert_eq!(out.keyframes, vec![0]);
    let direct = image_to_clips(&frame, &cfg, derive_seed(17, 0)).unwrap();
    let a = &out.bundles[0];
    assert_eq!(a.frames.len(), direct.frames.len());
    for (x, y) in a.frames.iter().zip(&direct.frames) {
        assert_eq!(x.rgb, y.rgb);
        assert_eq!(x.pose_w2c, y.pose_w2c);
    }
}

#[test]
fn disconnected_views_fall_back_to_uniform_keyframes() {
    // four cameras back to back: no pair shares any geometry
    let scene = Scene::textured_room();
    let k = default_intrinsics();
    let frames: Vec<_> = [0.0, 90.0, 180.0, 270.0]
        .iter()
        .enumerate()
        .map(|(i, &yaw)| {
            scene.render(
                &format!("f{i}"),
                &k,
                &look_pose(Vector3::zeros(), yaw, 0.0),
                320,
                240,
            )
        })
        .collect();
    let mut cfg = PipelineConfig::default();
    cfg.patch.count = 3;
    let out = clips_to_clips(&frames, &cfg, 0).unwrap();
    assert!(out.selection.keyframes.is_empty());
    assert_eq!(out.keyframes, vec![0, 1, 2, 3]);
    assert_eq!(out.bundles.len(), 4);
    assert!(out.warnings.iter().any(|w| w.contains("uniform stride 1")));
}

#[test]
fn unposed_multi_frame_clip_is_rejected() {
    let mut frames: Vec<_> = two_room_trajectory().into_iter().take(2).collect();
    frames[1].pose_c2w = None;
    let err = clips_to_clips(&frames, &PipelineConfig::default(), 0).unwrap_err();
    assert_eq!(err.kind(), "input");
}
