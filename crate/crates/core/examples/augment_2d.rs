//! Joint affine and perspective warps of an image, its depth, its pointmap
//! and its validity mask.
//!
//! ```text
//! cargo run --release --example augment_2d -- [seed]
//! ```

use puzzlegen::augment2d::{random_affine, random_perspective, Aug2dConfig, WarpBundle};
use puzzlegen::frame::PointmapFrame;
use puzzlegen::synthetic::textured_room_frame;

fn main() -> puzzlegen::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    let src = PointmapFrame::from_rgbd(&textured_room_frame())?;
    let bundle = WarpBundle::new(
        src.rgb.clone(),
        src.depth.clone(),
        src.pointmap.points.clone(),
        src.pointmap.valid.clone(),
    )?;
    let cfg = Aug2dConfig {
        enabled: true,
        // always show a perspective warp here
        persp_prob: 1.0,
        ..Aug2dConfig::default()
    };

    let (affine, a) = random_affine(&bundle, &cfg, seed)?;
    println!(
        "affine: rotate {:+.1} deg, shift ({:+.1}, {:+.1}) px, scale {:.3}",
        a.angle_deg, a.tx, a.ty, a.scale
    );
    println!("  valid pixels {} -> {}", count(&bundle), count(&affine));

    let (persp, p) = random_perspective(&bundle, &cfg, seed)?;
    if let Some(p) = p {
        let (dx, dy) = p.max_displacement();
        println!("perspective: corners moved up to ({dx:.1}, {dy:.1}) px");
        println!("  valid pixels {} -> {}", count(&bundle), count(&persp));
    }

    // every surviving pixel still carries its own 3D point
    let aligned = (0..persp.height())
        .flat_map(|y| (0..persp.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| *persp.mask.get(x, y))
        .all(|(x, y)| (persp.points.get(x, y).z - persp.depth.get(x, y)).abs() < 1e-12);
    println!("pointmap z matches warped depth everywhere: {aligned}");
    Ok(())
}

fn count(b: &WarpBundle) -> usize {
    b.mask.iter().filter(|m| **m).count()
}
