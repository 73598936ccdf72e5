//! Turns one RGB-D frame into a posed eight-view clip, checks it and writes
//! it to disk.
//!
//! ```text
//! cargo run --release --example image_to_clips -- [seed] [out_dir]
//! ```

use std::path::PathBuf;

use puzzlegen::config::PipelineConfig;
use puzzlegen::io::{write_clip_bundle, write_preview};
use puzzlegen::pipeline::{image_to_clips, validate_bundle};
use puzzlegen::synthetic::textured_room_frame;

fn main() -> puzzlegen::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = args.next().map(PathBuf::from);

    let frame = textured_room_frame();
    let cfg = PipelineConfig::default();
    let t = std::time::Instant::now();
    let bundle = image_to_clips(&frame, &cfg, seed)?;
    println!(
        "{} views in {:.2?} (seed {seed})",
        bundle.frames.len(),
        t.elapsed()
    );

    for (i, f) in bundle.frames.iter().enumerate() {
        println!(
            "  {i}: {:<18} patch {:>3}x{:<3} rotated {:<5} holes {:.3}  front {:.2} img {:.2}{}",
            f.strategy.as_str(),
            f.patch.width(),
            f.patch.height(),
            f.rotated,
            f.hole_fraction(),
            f.validity.front_cov,
            f.validity.img_cov,
            f.pnp_rmse_px
                .map_or(String::new(), |r| format!("  pnp {r:.2} px")),
        );
    }
    for w in &bundle.provenance.warnings {
        println!("warning: {w}");
    }

    let report = validate_bundle(&bundle)?;
    println!(
        "consecutive overlap {:.3?}\nmin surface fraction {:.4}\nvalid: {}",
        report.consecutive_overlap, report.min_surface_fraction, report.passed
    );

    if let Some(dir) = out {
        let manifest = write_clip_bundle(&bundle, &dir)?;
        let panels = write_preview(&bundle, &dir.join("preview"))?;
        println!(
            "wrote {} and {} preview panels",
            manifest.display(),
            panels.len()
        );
    }
    Ok(())
}
