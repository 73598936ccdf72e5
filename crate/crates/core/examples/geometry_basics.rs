//! Pinhole projection, Rodrigues rotations and rotating a camera about a
//! point it looks at.
//!
//! ```text
//! cargo run --example geometry_basics
//! ```

use nalgebra::Vector3;
use puzzlegen::geometry::{
    apply_rotation_to_pose, orthonormality_error, project_point, rodrigues,
    rotation_about_centroid, CameraIntrinsics, Pose,
};

fn main() -> puzzlegen::Result<()> {
    let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0)?;

    // pixel -> camera point -> pixel
    let p = k.unproject(100.0, 50.0, 2.5);
    let back = k.project_camera(&p).expect("in front of the camera");
    println!("unproject(100, 50, 2.5) = {:.4?}", p.as_slice());
    println!(
        "projected back to ({:.9}, {:.9}) at depth {}",
        back.u, back.v, back.depth
    );

    let r = rodrigues(&Vector3::y(), 30f64.to_radians())?;
    println!(
        "R_y(30deg) orthonormality error {:.2e}",
        orthonormality_error(&r)
    );

    // Swing the camera 30 degrees around a point 3 m ahead. The point stays
    // put in the world and keeps projecting to the principal point.
    let centroid = Vector3::new(0.0, 0.0, 3.0);
    let t = rotation_about_centroid(&r, &centroid);
    let moved = apply_rotation_to_pose(&Pose::identity(), &t);
    let pr = project_point(&k, &moved, &centroid).expect("still in view");
    println!(
        "camera moved to {:.3?}, centroid projects to ({:.6}, {:.6})",
        moved.camera_center().as_slice(),
        pr.u,
        pr.v
    );

    // behind-camera points are flagged, not projected
    let behind = Vector3::new(0.0, 0.0, -1.0);
    println!(
        "point behind the camera: {:?}",
        project_point(&k, &Pose::identity(), &behind)
    );
    Ok(())
}
