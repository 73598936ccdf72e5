//! Three-step keyframe selection on hand-written overlap matrices.
//!
//! ```text
//! cargo run --example select_keyframes
//! ```

use puzzlegen::covisibility::OverlapMatrix;
use puzzlegen::keyframe::{select_keyframes, KeyframeParams};

fn show(name: &str, rows: Vec<Vec<f64>>) -> puzzlegen::Result<()> {
    let m = OverlapMatrix::from_rows(rows)?;
    let sel = select_keyframes(&m, &KeyframeParams::default());
    println!("{name}");
    for d in &sel.trace {
        println!(
            "  {:<10} frame {}: {:<7} {}",
            format!("{:?}", d.step),
            d.frame,
            if d.kept { "kept" } else { "dropped" },
            d.reason
        );
    }
    println!("  keyframes {:?}\n", sel.keyframes);
    Ok(())
}

fn main() -> puzzlegen::Result<()> {
    // Five frames sampled from a video: the first two see each other (~80%)
    // but almost nothing of the last three, which overlap moderately.
    show(
        "disconnected head",
        vec![
            vec![1.00, 0.80, 0.02, 0.01, 0.00],
            vec![0.79, 1.00, 0.03, 0.01, 0.01],
            vec![0.02, 0.02, 1.00, 0.38, 0.25],
            vec![0.01, 0.01, 0.36, 1.00, 0.33],
            vec![0.00, 0.01, 0.22, 0.31, 1.00],
        ],
    )?;

    // Back (0, 1) and front (2, 3) of a building, each shot twice. Views of
    // the same side are near duplicates; opposite sides share the roofline.
    show(
        "front and back",
        vec![
            vec![1.00, 0.85, 0.30, 0.25],
            vec![0.88, 1.00, 0.28, 0.24],
            vec![0.26, 0.27, 1.00, 0.90],
            vec![0.22, 0.25, 0.87, 1.00],
        ],
    )?;

    // A frame with at most 0.1 overlap fails the strict validity cut.
    show(
        "isolated frame",
        vec![
            vec![1.0, 0.6, 0.1],
            vec![0.6, 1.0, 0.05],
            vec![0.1, 0.05, 1.0],
        ],
    )?;
    Ok(())
}
