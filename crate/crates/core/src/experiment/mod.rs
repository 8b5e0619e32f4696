//! Anchor-vs-SPAQ experiments over a QP grid.
//!
//! Each (sequence, mode, QP) cell codes the whole sequence with an IPPP
//! structure: frame 0 intra, every later frame predicted from the previous
//! one. Per inter frame the motion field is estimated first, its mean
//! magnitude fixes the temporal offsets, and only then are QPs derived and the
//! frame coded.

mod report;
pub mod synth;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activity::{ActivityMap, DEFAULT_SCALE};
use crate::codec::{encode_frame, CodecParams};
use crate::error::{invalid, Result};
use crate::metrics::{pct_reduction, psnr_from_mse, ssim_global};
use crate::motion::{temporal_offsets, MotionField, DEFAULT_SEARCH_RANGE};
use crate::partition::BlockGrid;
use crate::qp::{check_qp, ClampScope, Mode, QpConstants, QpMap, QpParams};
use crate::video_io::{load_raw, Channel, Frame, Sequence};

pub use report::{
    emit, read_report_csv, write_rate_points, ExperimentReport, FrameRow, QpHistogramRow, RatePoint, ReportRecord,
    FRAME_CSV_HEADER, HISTOGRAM_CSV_HEADER, RATE_POINTS_CSV_HEADER, REPORT_CSV_HEADER,
};
pub use synth::{gen_synthetic, moving_object_track, SyntheticKind, SyntheticSpec};

pub const DEFAULT_QPS: [i32; 4] = [22, 27, 32, 37];
pub const DEFAULT_CB_DEPTH: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Raw { path: PathBuf, width: usize, height: usize, bit_depth: u8, max_frames: usize },
    Synthetic(SyntheticSpec),
}

impl SourceSpec {
    pub fn name(&self) -> String {
        match self {
            SourceSpec::Raw { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into()),
            SourceSpec::Synthetic(s) => s.kind.as_str().to_string(),
        }
    }

    pub fn load(&self) -> Result<Sequence> {
        match self {
            SourceSpec::Raw { path, width, height, bit_depth, max_frames } => {
                load_raw(path, *width, *height, *bit_depth, *max_frames)
            }
            SourceSpec::Synthetic(spec) => gen_synthetic(spec),
        }
    }
}

/// Frame the encoder predicts from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Previous reconstruction (closed loop).
    #[default]
    Reconstructed,
    /// Previous source frame (open loop).
    Original,
}

/// Motion field whose mean magnitude is the temporal-masking threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanSource {
    /// Mean over the current frame's own vectors.
    #[default]
    CurrentFrame,
    /// Mean carried over from the previous inter frame.
    PreviousFrame,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sources: Vec<SourceSpec>,
    pub qps: Vec<i32>,
    pub modes: Vec<Mode>,
    pub cb_depth: u8,
    pub search_range: u32,
    pub clamp_scope: ClampScope,
    pub constants: QpConstants,
    pub channel_base_offsets: [i32; 3],
    pub activity_scale: f64,
    pub codec: CodecParams,
    pub reference: ReferenceKind,
    pub mean_source: MeanSource,
}

impl ExperimentConfig {
    pub fn new(sources: Vec<SourceSpec>) -> Self {
        ExperimentConfig {
            sources,
            qps: DEFAULT_QPS.to_vec(),
            modes: vec![Mode::Anchor, Mode::Spaq],
            cb_depth: DEFAULT_CB_DEPTH,
            search_range: DEFAULT_SEARCH_RANGE,
            clamp_scope: ClampScope::default(),
            constants: QpConstants::default(),
            channel_base_offsets: [0; 3],
            activity_scale: DEFAULT_SCALE,
            codec: CodecParams::default(),
            reference: ReferenceKind::default(),
            mean_source: MeanSource::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(invalid("no input sequence"));
        }
        if self.qps.is_empty() {
            return Err(invalid("at least one QP is required"));
        }
        if self.modes.is_empty() {
            return Err(invalid("at least one mode is required"));
        }
        for &qp in &self.qps {
            check_qp(qp)?;
            for off in self.channel_base_offsets {
                check_qp(qp + off)?;
            }
        }
        if self.cb_depth > crate::partition::MAX_DEPTH {
            return Err(invalid(format!("CB depth {} outside 0..=2", self.cb_depth)));
        }
        for dz in [self.codec.deadzone_intra, self.codec.deadzone_inter] {
            if !(0.0..=0.5).contains(&dz) {
                return Err(invalid(format!("dead zone {} outside [0, 0.5]", dz)));
            }
        }
        if !(self.activity_scale > 1.0) {
            return Err(invalid("activity scale must exceed 1"));
        }
        Ok(())
    }

    /// Modes actually run: the requested ones plus the anchor, deduplicated.
    pub fn effective_modes(&self) -> Vec<Mode> {
        let mut modes = self.modes.clone();
        modes.push(Mode::Anchor);
        modes.sort();
        modes.dedup();
        modes
    }
}

/// Per-frame outcome of one cell.
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    /// Level bit proxy.
    pub bits: u64,
    /// DC deltas or vector components. Reported, not counted in `bits`.
    pub side_bits: u64,
    pub sse: [u64; 3],
    pub mse: [f64; 3],
    pub psnr: [f64; 3],
    pub ssim: f64,
    pub nonzero_levels: u64,
    pub mean_mv_magnitude: Option<f64>,
}

/// Result of coding one sequence in one mode at one base QP.
#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    pub mode: Mode,
    pub qp: i32,
    pub frames: Vec<FrameOutcome>,
    /// Reconstructions cropped to the source size.
    pub recon: Vec<Frame>,
    pub qp_maps: Vec<QpMap>,
    pub motion: Vec<Option<MotionField>>,
}

impl SequenceOutcome {
    pub fn total_bits(&self) -> u64 {
        self.frames.iter().map(|f| f.bits).sum()
    }

    pub fn nonzero_levels(&self) -> u64 {
        self.frames.iter().map(|f| f.nonzero_levels).sum()
    }
}

/// Codes `seq` with one mode and base QP.
pub fn encode_sequence(seq: &Sequence, mode: Mode, qp: i32, config: &ExperimentConfig) -> Result<SequenceOutcome> {
    let (w, h) = (seq.width(), seq.height());
    let grid = BlockGrid::build(w, h, config.cb_depth)?;
    let (pw, ph) = (grid.padded_width(), grid.padded_height());
    let params = QpParams {
        mode,
        base_qp: qp,
        channel_base_offsets: config.channel_base_offsets,
        constants: config.constants,
        clamp_scope: config.clamp_scope,
    };

    let mut frames = Vec::with_capacity(seq.len());
    let mut recon_out = Vec::with_capacity(seq.len());
    let mut qp_maps = Vec::with_capacity(seq.len());
    let mut motion = Vec::with_capacity(seq.len());
    let mut prev_recon: Option<Frame> = None;
    let mut prev_source: Option<Frame> = None;
    let mut prev_mean: Option<f64> = None;

    for (n, source) in seq.frames().iter().enumerate() {
        let padded = source.edge_padded(pw, ph);
        let reference = match config.reference {
            ReferenceKind::Reconstructed => prev_recon.as_ref(),
            ReferenceKind::Original => prev_source.as_ref(),
        };
        let field = match reference {
            Some(r) => Some(MotionField::estimate(n, &padded, r, &grid, config.search_range)?),
            None => None,
        };
        let threshold = match (&field, config.mean_source) {
            (Some(f), MeanSource::CurrentFrame) => Some(f.mean_magnitude),
            (Some(_), MeanSource::PreviousFrame) => prev_mean,
            (None, _) => None,
        };
        let offsets = match (&field, threshold) {
            (Some(f), Some(v)) => Some(temporal_offsets(f, v, config.constants.o)),
            _ => None,
        };
        let qp_map = if mode == Mode::Anchor {
            QpMap::uniform(n, grid.len(), config.channel_base_offsets.map(|o| qp + o))?
        } else {
            let activity = ActivityMap::compute(&padded, &grid, config.activity_scale)?;
            QpMap::derive(n, &params, &activity, offsets.as_deref())?
        };

        let enc = encode_frame(&padded, reference.zip(field.as_ref()), &qp_map, &grid, &config.codec)?;
        let cropped = enc.recon.cropped(w, h);
        let samples = (w * h) as f64;
        let mse = enc.sse.map(|s| s as f64 / samples);
        frames.push(FrameOutcome {
            bits: enc.residual_bits,
            side_bits: enc.side_bits,
            sse: enc.sse,
            mse,
            psnr: mse.map(|m| psnr_from_mse(m, seq.bit_depth())),
            ssim: ssim_global(source, &cropped)?,
            nonzero_levels: enc.nonzero_levels(),
            mean_mv_magnitude: field.as_ref().map(|f| f.mean_magnitude),
        });
        if let Some(f) = &field {
            prev_mean = Some(f.mean_magnitude);
        }
        prev_recon = Some(enc.recon);
        prev_source = Some(padded);
        recon_out.push(cropped);
        qp_maps.push(qp_map);
        motion.push(field);
    }
    Ok(SequenceOutcome { mode, qp, frames, recon: recon_out, qp_maps, motion })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn pct(anchor: f64, test: f64) -> Option<f64> {
    pct_reduction(anchor, test).ok()
}

/// Runs every (sequence, mode, QP) cell and assembles the report.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let sequences: Vec<(String, Sequence)> = config
        .sources
        .iter()
        .map(|s| Ok((s.name(), s.load()?)))
        .collect::<Result<_>>()?;
    let modes = config.effective_modes();

    let mut cells: Vec<(usize, Mode, i32)> = Vec::new();
    for s in 0..sequences.len() {
        for &qp in &config.qps {
            cells.extend(modes.iter().map(|&m| (s, m, qp)));
        }
    }
    let outcomes: Vec<SequenceOutcome> = cells
        .par_iter()
        .map(|&(s, mode, qp)| encode_sequence(&sequences[s].1, mode, qp, config))
        .collect::<Result<_>>()?;

    let mut report = ExperimentReport::default();
    for (s, (name, seq)) in sequences.iter().enumerate() {
        for &qp in &config.qps {
            let find = |m: Mode| {
                cells
                    .iter()
                    .position(|&c| c == (s, m, qp))
                    .map(|i| &outcomes[i])
                    .expect("every cell was run")
            };
            let anchor = find(Mode::Anchor);
            let anchor_bits = anchor.total_bits() as f64;
            let anchor_psnr = channel_means(anchor, |f| f.psnr);
            let anchor_mse = channel_means(anchor, |f| f.mse);
            for &mode in &modes {
                let out = find(mode);
                let psnr = channel_means(out, |f| f.psnr);
                let mse = channel_means(out, |f| f.mse);
                let ssim_vs_anchor = mean(
                    out.recon
                        .iter()
                        .zip(&anchor.recon)
                        .map(|(a, b)| ssim_global(b, a))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter(),
                );
                let mean_qp = Channel::ALL.map(|c| {
                    mean(out.qp_maps.iter().flat_map(|m| m.entries.iter().map(move |e| f64::from(e[c.index()].qp))))
                });
                report.records.push(ReportRecord {
                    sequence: name.clone(),
                    mode,
                    qp,
                    frames: seq.len(),
                    width: seq.width(),
                    height: seq.height(),
                    bits: out.total_bits(),
                    psnr_g: psnr[0],
                    psnr_b: psnr[1],
                    psnr_r: psnr[2],
                    mse_g: mse[0],
                    mse_b: mse[1],
                    mse_r: mse[2],
                    ssim: mean(out.frames.iter().map(|f| f.ssim)),
                    ssim_vs_anchor,
                    mean_qp_g: mean_qp[0],
                    mean_qp_b: mean_qp[1],
                    mean_qp_r: mean_qp[2],
                    bits_pct: pct(anchor_bits, out.total_bits() as f64),
                    psnr_g_pct: pct(anchor_psnr[0], psnr[0]),
                    psnr_b_pct: pct(anchor_psnr[1], psnr[1]),
                    psnr_r_pct: pct(anchor_psnr[2], psnr[2]),
                    mse_g_pct: pct(anchor_mse[0], mse[0]),
                    mse_b_pct: pct(anchor_mse[1], mse[1]),
                    mse_r_pct: pct(anchor_mse[2], mse[2]),
                });
                for (n, f) in out.frames.iter().enumerate() {
                    report.frames.push(FrameRow {
                        sequence: name.clone(),
                        mode,
                        qp,
                        frame: n,
                        bits: f.bits,
                        side_bits: f.side_bits,
                        psnr_g: f.psnr[0],
                        psnr_b: f.psnr[1],
                        psnr_r: f.psnr[2],
                        ssim: f.ssim,
                        nonzero_levels: f.nonzero_levels,
                        mean_mv_magnitude: f.mean_mv_magnitude,
                    });
                }
                for map in &out.qp_maps {
                    for c in Channel::ALL {
                        let mut counts = std::collections::BTreeMap::new();
                        for e in &map.entries {
                            *counts.entry(e[c.index()].qp).or_insert(0usize) += 1;
                        }
                        for (cb_qp, count) in counts {
                            report.histograms.push(QpHistogramRow {
                                sequence: name.clone(),
                                mode,
                                qp,
                                frame: map.frame_index,
                                channel: c.name().to_string(),
                                cb_qp,
                                count,
                            });
                        }
                    }
                }
                report.qp_maps.push((name.clone(), mode, qp, out.qp_maps.clone()));
            }
        }
    }
    Ok(report)
}

fn channel_means(out: &SequenceOutcome, f: impl Fn(&FrameOutcome) -> [f64; 3]) -> [f64; 3] {
    let n = out.frames.len() as f64;
    let mut acc = [0.0; 3];
    for fr in &out.frames {
        let v = f(fr);
        for i in 0..3 {
            acc[i] += v[i];
        }
    }
    acc.map(|a| a / n)
}
