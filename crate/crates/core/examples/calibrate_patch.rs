//! Both calibration strategies for one crop of the textured room.
//!
//! Varying intrinsics keep the source pose and rescale K. Fixed intrinsics
//! pin the principal point to the output center and recover the pose by PnP
//! from the crop's own 3D points.
//!
//! ```text
//! cargo run --release --example calibrate_patch
//! ```

use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use puzzlegen::calibration::{
    fixed_patch_intrinsics, rescale_intrinsics, solve_pnp_ransac, subsample_correspondences,
    Correspondence, RansacConfig,
};
use puzzlegen::patch::PatchBox;
use puzzlegen::synthetic::textured_room_frame;

fn main() -> puzzlegen::Result<()> {
    let frame = textured_room_frame();
    let k_src = frame.intrinsics;
    let patch = PatchBox::new(200, 120, 456, 312)?;
    let (w, h) = (512u32, 384u32);

    let k_var = rescale_intrinsics(&k_src, &patch, w, h)?;
    println!("source K     {k_src:?}");
    println!("patch        {patch:?}");
    println!("varying K    {k_var:?}");

    // output pixel (x, y) sees the source ray through (u1 + x/sx, v1 + y/sy)
    let sx = w as f64 / patch.width() as f64;
    let sy = h as f64 / patch.height() as f64;
    let mut corr = Vec::new();
    for y in (0..h).step_by(4) {
        for x in (0..w).step_by(4) {
            let u = patch.u1 as f64 + x as f64 / sx;
            let v = patch.v1 as f64 + y as f64 / sy;
            let d = frame.depth.get(u.round() as usize, v.round() as usize);
            if d > 0.0 {
                corr.push(Correspondence {
                    world_point: k_src.unproject(u, v, d),
                    pixel: Vector2::new(x as f64, y as f64),
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let corr = subsample_correspondences(corr, 2000, &mut rng);

    let k_fix = fixed_patch_intrinsics(w, h, k_src.fx, k_src.fy)?;
    let pnp = solve_pnp_ransac(&corr, &k_fix, &RansacConfig::default())?;
    println!("fixed K      {k_fix:?}");
    println!(
        "PnP: {} / {} inliers, rmse {:.3} px",
        pnp.inliers.len(),
        corr.len(),
        pnp.rmse_px
    );
    println!(
        "virtual camera center {:.4?}",
        pnp.pose.camera_center().as_slice()
    );
    println!(
        "rotation away from the source camera {:.3} deg",
        pnp.pose.rotation_angle_to(&frame.pose_w2c()).to_degrees()
    );
    Ok(())
}
