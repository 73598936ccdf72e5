//! Pairwise geometric overlap of a posed two-room walkthrough.
//!
//! ```text
//! cargo run --release --example overlap_matrix
//! ```

use puzzlegen::covisibility::{overlap_matrix, CovisConfig, OverlapView};
use puzzlegen::geometry::Pose;
use puzzlegen::synthetic::two_room_trajectory;

fn main() -> puzzlegen::Result<()> {
    // every third frame keeps the printout readable
    let frames: Vec<_> = two_room_trajectory().into_iter().step_by(3).collect();
    let poses: Vec<Pose> = frames.iter().map(|f| f.pose_w2c()).collect();
    let views: Vec<OverlapView<'_>> = frames
        .iter()
        .zip(&poses)
        .map(|(f, p)| OverlapView {
            depth: &f.depth,
            intrinsics: &f.intrinsics,
            pose_w2c: p,
        })
        .collect();

    let m = overlap_matrix(&views, &CovisConfig::default())?;
    print!("{:>10}", "");
    for f in &frames {
        print!("{:>10}", f.id);
    }
    println!();
    for (i, f) in frames.iter().enumerate() {
        print!("{:>10}", f.id);
        for j in 0..m.len() {
            print!("{:>10.3}", m.get(i, j));
        }
        println!();
    }
    for w in &m.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
