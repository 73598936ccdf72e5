//! Samples a chain of patches whose IoU with the previous one follows the
//! decaying overlap schedule.
//!
//! ```text
//! cargo run --example patch_sequence -- [seed]
//! ```

use puzzlegen::patch::{bbox_iou, sample_patch_sequence, PatchConfig};

fn main() -> puzzlegen::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let cfg = PatchConfig::default();
    let patches = sample_patch_sequence(640, 480, &cfg, seed)?;

    println!("{} patches on a 640x480 frame (seed {seed})", patches.len());
    for (i, p) in patches.iter().enumerate() {
        let band = cfg.schedule.band(i, cfg.count);
        let iou = (i > 0).then(|| bbox_iou(p, &patches[i - 1]));
        println!(
            "  {i}: [{:>3},{:>3})x[{:>3},{:>3})  {:>3}x{:<3}  iou {}  target {}",
            p.u1,
            p.u2,
            p.v1,
            p.v2,
            p.width(),
            p.height(),
            iou.map_or("  -  ".to_string(), |v| format!("{v:.3}")),
            band.map_or("-".to_string(), |(lo, hi)| format!("[{lo:.2}, {hi:.2}]")),
        );
    }
    Ok(())
}
