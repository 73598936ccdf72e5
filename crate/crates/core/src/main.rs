use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use puzzlegen::config::PipelineConfig;
use puzzlegen::covisibility::{overlap_matrix, OverlapMatrix, OverlapView};
use puzzlegen::geometry::Pose;
use puzzlegen::io::{load_dataset, read_clip_bundle, write_clip_bundle, write_preview};
use puzzlegen::keyframe::{select_keyframes, KeyframeParams};
use puzzlegen::pipeline::{clips_to_clips, image_to_clips, validate_bundle};
use puzzlegen::{Error, Result};

#[derive(Parser)]
#[command(
    name = "puzzlegen",
    version,
    about = "Posed clip synthesis from RGB-D frames and videos"
)]
struct Cli {
    /// Base seed (overrides `seed` from the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One clip bundle per frame of a frame manifest.
    ImageToClips {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keyframe selection on a posed clip, then one bundle per keyframe.
    ClipsToClips {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise overlap matrix of a clip, written as CSV.
    OverlapMatrix {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keyframes from an overlap CSV or a clip manifest.
    SelectKeyframes {
        input: PathBuf,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Geometric consistency checks on a written bundle.
    Validate { bundle: PathBuf },
    /// RGB | depth | hole panels for each frame of a bundle.
    Preview {
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
        cfg.set(k, v)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn clip_matrix(manifest: &Path, cfg: &PipelineConfig) -> Result<OverlapMatrix> {
    let frames = load_dataset(manifest)?;
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
    overlap_matrix(&views, &cfg.covis)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    match &cli.cmd {
        Cmd::ImageToClips { manifest, out } => {
            let frames = load_dataset(manifest)?;
            let mut written = Vec::new();
            for (i, f) in frames.iter().enumerate() {
                let seed = if frames.len() == 1 {
                    cfg.seed
                } else {
                    puzzlegen::pipeline::derive_seed(cfg.seed, i as u64)
                };
                let bundle = image_to_clips(f, &cfg, seed)?;
                let dir = if frames.len() == 1 {
                    out.clone()
                } else {
                    out.join(&f.id)
                };
                let path = write_clip_bundle(&bundle, &dir)?;
                written.push(json!({
                    "source": f.id,
                    "manifest": path,
                    "frames": bundle.frames.len(),
                    "warnings": bundle.provenance.warnings,
                }));
            }
            print_json(&json!({ "bundles": written }));
        }
        Cmd::ClipsToClips { manifest, out } => {
            let frames = load_dataset(manifest)?;
            let result = clips_to_clips(&frames, &cfg, cfg.seed)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let csv = out.join("overlap.csv");
            std::fs::write(&csv, result.matrix.to_csv()).map_err(|e| Error::io(csv, e))?;
            let mut written = Vec::new();
            for (k, b) in result.keyframes.iter().zip(&result.bundles) {
                let path = write_clip_bundle(b, &out.join(format!("keyframe_{k:03}")))?;
                written.push(json!({ "keyframe": k, "manifest": path, "frames": b.frames.len() }));
            }
            let sel = serde_json::to_value(&result.selection)?;
            let sel_path = out.join("selection.json");
            std::fs::write(&sel_path, serde_json::to_string_pretty(&sel)?)
                .map_err(|e| Error::io(sel_path, e))?;
            print_json(&json!({
                "keyframes": result.keyframes,
                "bundles": written,
                "warnings": result.warnings,
            }));
        }
        Cmd::OverlapMatrix { manifest, out } => {
            let m = clip_matrix(manifest, &cfg)?;
            if let Some(p) = out {
                std::fs::write(p, m.to_csv()).map_err(|e| Error::io(p, e))?;
            }
            print!("{}", m.to_csv());
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
        }
        Cmd::SelectKeyframes {
            input,
            eta,
            tau,
            rho,
        } => {
            let params = KeyframeParams {
                eta: eta.unwrap_or(cfg.keyframe.eta),
                tau_o: tau.unwrap_or(cfg.keyframe.tau_o),
                rho: rho.unwrap_or(cfg.keyframe.rho),
            };
            let m = if input.extension().is_some_and(|e| e == "csv") {
                let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
                OverlapMatrix::from_csv(&text)?
            } else {
                clip_matrix(input, &cfg)?
            };
            println!(
                "# keyframe selection: η={} τ={} ρ={}",
                params.eta, params.tau_o, params.rho
            );
            let sel = select_keyframes(&m, &params);
            for d in &sel.trace {
                println!(
                    "# {:?} frame {}: {} ({})",
                    d.step,
                    d.frame,
                    if d.kept { "kept" } else { "dropped" },
                    d.reason
                );
            }
            print_json(
                &json!({ "keyframes": sel.keyframes, "valid": sel.valid, "seed": sel.seed }),
            );
        }
        Cmd::Validate { bundle } => {
            let b = read_clip_bundle(bundle)?;
            let report = validate_bundle(&b)?;
            print_json(&serde_json::to_value(&report)?);
            return Ok(report.passed);
        }
        Cmd::Preview { bundle, out } => {
            let b = read_clip_bundle(bundle)?;
            let panels = write_preview(&b, out)?;
            print_json(&json!({ "panels": panels }));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = std::env::var("PUZZLEGEN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "{}",
                json!({ "error": { "kind": "validation_failed", "message": "bundle failed consistency checks" } })
            );
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": { "kind": e.kind(), "message": e.to_string() } })
            );
            ExitCode::from(1)
        }
    }
}
