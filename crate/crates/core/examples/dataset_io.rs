//! Writes posed RGB-D frames as a dataset, reads them back and measures
//! what the 16-bit millimeter depth encoding loses.
//!
//! ```text
//! cargo run --release --example dataset_io -- [dir]
//! ```

use std::path::PathBuf;

use puzzlegen::io::{load_dataset, read_manifest, write_dataset};
use puzzlegen::synthetic::two_room_trajectory;

fn main() -> puzzlegen::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("puzzlegen_dataset_io"));
    let frames: Vec<_> = two_room_trajectory().into_iter().step_by(5).collect();

    let manifest = write_dataset(&frames, &dir)?;
    let m = read_manifest(&manifest)?;
    println!(
        "wrote {} (schema {}, {} frames)",
        manifest.display(),
        m.schema_version,
        m.frames.len()
    );
    println!("units: {:?}", m.units);

    let back = load_dataset(&manifest)?;
    for (a, b) in frames.iter().zip(&back) {
        let depth_err = a
            .depth
            .values()
            .iter()
            .zip(b.depth.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let pose_err = (a.pose_w2c().to_matrix() - b.pose_w2c().to_matrix())
            .abs()
            .max();
        println!(
            "  {}: rgb equal {}, max depth error {:.2} mm, max pose error {pose_err:.1e}",
            a.id,
            a.rgb == b.rgb,
            depth_err * 1000.0
        );
    }
    Ok(())
}
