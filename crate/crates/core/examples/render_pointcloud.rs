//! Z-buffer splatting of a colored pointmap: a self-render reproduces the
//! source, a moved camera reveals disocclusion holes.
//!
//! ```text
//! cargo run --release --example render_pointcloud -- [out.png]
//! ```

use nalgebra::Vector3;
use puzzlegen::frame::PointmapFrame;
use puzzlegen::render::{gate_by_holes, render_pointcloud, RenderConfig};
use puzzlegen::synthetic::{look_pose, textured_room_frame};

fn main() -> puzzlegen::Result<()> {
    let frame = PointmapFrame::from_rgbd(&textured_room_frame())?;
    let (points, colors): (Vec<Vector3<f64>>, Vec<[u8; 3]>) = frame
        .pointmap
        .points
        .iter()
        .zip(frame.pointmap.valid.iter())
        .zip(frame.rgb.pixels())
        .filter(|((_, ok), _)| **ok)
        .map(|((p, _), c)| (*p, c.0))
        .unzip();
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let cfg = RenderConfig::default();

    let same = render_pointcloud(
        &points,
        &colors,
        &frame.pose_w2c,
        &frame.intrinsics,
        w,
        h,
        &cfg,
    );
    let exact = same
        .rgb
        .pixels()
        .zip(frame.rgb.pixels())
        .filter(|(a, b)| a == b)
        .count();
    println!(
        "self-render: hole fraction {:.4}, {exact}/{} pixels identical",
        same.hole_fraction,
        w * h
    );

    // step half a meter right and turn 20 degrees back toward the crates
    let moved = look_pose(Vector3::new(0.5, 0.0, 0.0), -20.0, 0.0);
    let r = render_pointcloud(&points, &colors, &moved, &frame.intrinsics, w, h, &cfg);
    println!(
        "moved view: hole fraction {:.4} -> {:?} at h_max {}",
        r.hole_fraction,
        gate_by_holes(&r, cfg.hole_max_frac),
        cfg.hole_max_frac
    );

    if let Some(out) = std::env::args().nth(1) {
        r.rgb.save(&out).map_err(|source| puzzlegen::Error::Image {
            path: out.clone().into(),
            source,
        })?;
        println!("wrote {out}");
    }
    Ok(())
}
