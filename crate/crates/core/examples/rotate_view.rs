//! Scores random camera rotations about a patch centroid and keeps the best
//! view that passes the front-facing and image-coverage floors.
//!
//! ```text
//! cargo run --release --example rotate_view -- [seed]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use puzzlegen::frame::PointmapFrame;
use puzzlegen::geometry::Pose;
use puzzlegen::motion::{
    candidate_poses, estimate_normals, score_view, select_valid_pose, RotConfig, ViewScene,
};
use puzzlegen::synthetic::textured_room_frame;

fn main() -> puzzlegen::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(11);
    let frame = PointmapFrame::from_rgbd(&textured_room_frame())?;
    let normals = estimate_normals(&frame.pointmap, &frame.pose_w2c.camera_center());

    let points = frame.pointmap.points.as_slice();
    let valid = frame.pointmap.valid.as_slice();
    let normals = normals.as_slice();
    let scene = ViewScene {
        points,
        normals,
        valid,
    };
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let cfg = RotConfig::default();

    let n = points.len() as f64;
    let centroid = points.iter().fold(nalgebra::Vector3::zeros(), |a, p| a + p) / n;
    let base = score_view(
        &scene,
        &Pose::identity(),
        &frame.intrinsics,
        w,
        h,
        &cfg.validity,
    )?;
    println!("centroid {:.3?}", centroid.as_slice());
    println!(
        "source view: front_cov {:.3}  img_cov {:.3}",
        base.front_cov, base.img_cov
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates = candidate_poses(
        &Pose::identity(),
        &centroid,
        &cfg.sampler,
        cfg.candidates,
        &mut rng,
    );
    for (i, c) in candidates.iter().enumerate() {
        let v = score_view(&scene, c, &frame.intrinsics, w, h, &cfg.validity)?;
        println!(
            "  candidate {i:>2}: {:>5.1} deg  front {:.3}  img {:.3}  {}",
            c.rotation_angle_to(&Pose::identity()).to_degrees(),
            v.front_cov,
            v.img_cov,
            if v.accepted { "ok" } else { "rejected" }
        );
    }
    match select_valid_pose(&candidates, &scene, &frame.intrinsics, w, h, &cfg.validity) {
        Ok(sel) => println!(
            "selected candidate {} (score {:.3})",
            sel.index,
            sel.validity.combined()
        ),
        Err(e) => println!("no candidate accepted: {e}"),
    }
    Ok(())
}
