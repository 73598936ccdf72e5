//! Keyframe selection over a posed two-room walkthrough, then one clip per
//! keyframe.
//!
//! ```text
//! cargo run --release --example clips_to_clips -- [seed]
//! ```

use puzzlegen::config::PipelineConfig;
use puzzlegen::pipeline::{clips_to_clips, validate_bundle};
use puzzlegen::synthetic::two_room_trajectory;

fn main() -> puzzlegen::Result<()> {
    env_logger::init();
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let frames = two_room_trajectory();
    let cfg = PipelineConfig::default();

    let t = std::time::Instant::now();
    let out = clips_to_clips(&frames, &cfg, seed)?;
    println!("{} input frames, {:.2?}", frames.len(), t.elapsed());
    println!("valid frames {:?}", out.selection.valid);
    println!(
        "seed frame {:?}, cover set {:?}",
        out.selection.seed, out.selection.cover_set
    );
    println!("keyframes {:?}", out.keyframes);

    for (k, b) in out.keyframes.iter().zip(&out.bundles) {
        let report = validate_bundle(b)?;
        let rotated = b.frames.iter().filter(|f| f.rotated).count();
        println!(
            "  keyframe {k:>2}: {} views ({rotated} rotated), min surface {:.4}, valid {}",
            b.frames.len(),
            report.min_surface_fraction,
            report.passed
        );
    }
    for w in &out.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
