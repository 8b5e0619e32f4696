use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use spaq::codec::{CodecParams, DEADZONE_INTER, DEADZONE_INTRA};
use spaq::experiment::{
    emit, run, ExperimentConfig, MeanSource, ReferenceKind, SourceSpec, SyntheticKind, SyntheticSpec, DEFAULT_CB_DEPTH,
};
use spaq::qp::{ClampScope, Mode};
use spaq::video_io::write_raw;
use spaq::Error;

/// Compare SPAQ perceptual quantization against a uniform-QP anchor.
#[derive(Debug, Parser)]
#[command(name = "spaq", version)]
struct Args {
    /// Raw planar G/B/R input file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Generate a synthetic source instead of reading a file (repeatable).
    #[arg(long)]
    synthetic: Vec<SyntheticKind>,
    /// Frame width; required with --input, 128 for synthetic sources.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, default_value_t = 8)]
    bit_depth: u8,
    /// Frames to read (all by default) or generate (16 by default).
    #[arg(long)]
    frames: Option<usize>,
    /// Base QP (repeatable).
    #[arg(long = "qp", default_values_t = [22, 27, 32, 37])]
    qps: Vec<i32>,
    /// anchor, spaq, spatial-only or temporal-only (repeatable). The anchor is always run.
    #[arg(long = "mode", default_values_t = [Mode::Spaq])]
    modes: Vec<Mode>,
    /// Quadtree depth: 0 = 64x64 CBs, 1 = 32x32, 2 = 16x16.
    #[arg(long, default_value_t = DEFAULT_CB_DEPTH)]
    cb_depth: u8,
    #[arg(long, default_value_t = 16)]
    search_range: u32,
    /// total or offset-term.
    #[arg(long, default_value = "total")]
    clamp_scope: ClampScope,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Per-frame motion of the synthetic moving object, as "x,y".
    #[arg(long, default_value = "3,4", value_parser = parse_shift)]
    shift: (i32, i32),
    #[arg(long, default_value_t = DEADZONE_INTRA)]
    deadzone_intra: f64,
    #[arg(long, default_value_t = DEADZONE_INTER)]
    deadzone_inter: f64,
    /// Predict from the previous source frame instead of the reconstruction.
    #[arg(long)]
    open_loop: bool,
    /// Threshold temporal masking with the previous frame's mean vector magnitude.
    #[arg(long)]
    mean_from_previous: bool,
    /// Also write each synthetic source as <kind>.rgb into the output directory.
    #[arg(long)]
    save_synthetic: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_shift(s: &str) -> Result<(i32, i32), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got '{}'", s))?;
    let parse = |v: &str| v.trim().parse::<i32>().map_err(|e| format!("bad shift component '{}': {}", v, e));
    Ok((parse(x)?, parse(y)?))
}

fn build_config(args: &Args) -> Result<ExperimentConfig, String> {
    let sources = if let Some(path) = &args.input {
        let (Some(width), Some(height)) = (args.width, args.height) else {
            return Err("--input needs --width and --height".into());
        };
        vec![SourceSpec::Raw {
            path: path.clone(),
            width,
            height,
            bit_depth: args.bit_depth,
            max_frames: args.frames.unwrap_or(usize::MAX),
        }]
    } else {
        args.synthetic
            .iter()
            .map(|&kind| {
                SourceSpec::Synthetic(SyntheticSpec {
                    kind,
                    width: args.width.unwrap_or(128),
                    height: args.height.unwrap_or(128),
                    frames: args.frames.unwrap_or(16),
                    bit_depth: args.bit_depth,
                    seed: args.seed,
                    shift: args.shift,
                })
            })
            .collect()
    };
    let mut config = ExperimentConfig::new(sources);
    config.qps = args.qps.clone();
    config.modes = args.modes.clone();
    config.cb_depth = args.cb_depth;
    config.search_range = args.search_range;
    config.clamp_scope = args.clamp_scope;
    config.codec = CodecParams { deadzone_intra: args.deadzone_intra, deadzone_inter: args.deadzone_inter };
    if args.open_loop {
        config.reference = ReferenceKind::Original;
    }
    if args.mean_from_previous {
        config.mean_source = MeanSource::PreviousFrame;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn execute(args: &Args, config: &ExperimentConfig) -> Result<(), Error> {
    if args.save_synthetic {
        std::fs::create_dir_all(&args.out)?;
        for src in &config.sources {
            if let SourceSpec::Synthetic(_) = src {
                write_raw(&src.load()?, args.out.join(format!("{}.rgb", src.name())))?;
            }
        }
    }
    let report = run(config)?;
    emit(&report, &args.out)?;
    println!(
        "{:<16} {:<14} {:>3} {:>12} {:>9} {:>7} {:>7} {:>7} {:>7}",
        "sequence", "mode", "qp", "bits", "bits%", "psnrG", "psnrB", "psnrR", "ssim"
    );
    for r in &report.records {
        println!(
            "{:<16} {:<14} {:>3} {:>12} {:>9} {:>7.2} {:>7.2} {:>7.2} {:>7.4}",
            r.sequence,
            r.mode.as_str(),
            r.qp,
            r.bits,
            r.bits_pct.map(|p| format!("{:.2}", p)).unwrap_or_default(),
            r.psnr_g,
            r.psnr_b,
            r.psnr_r,
            r.ssim
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {}", msg);
            return ExitCode::from(2);
        }
    };
    match execute(&args, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::FAILURE
        }
    }
}
