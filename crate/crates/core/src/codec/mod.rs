//! Minimal hybrid coding loop used to compare QP allocations.
//!
//! Per CB and channel: predict (intra DC or motion-compensated copy), take the
//! residual, DCT, quantize with the CB's QStep, dequantize, inverse DCT, add
//! the prediction back and clip to the sample range. Prediction is kept
//! primitive on purpose; anchor and SPAQ runs see the same predictor.
//!
//! Bits are counted with [`bits::bit_cost`] on the levels plus a small side
//! cost: the intra DC predictor as a signed exp-Golomb delta from the previous
//! CB of the same channel, and each inter PU's vector components.

pub mod bits;
pub mod dct;
pub mod quant;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::motion::{reference_origin, MotionField, MotionVector};
use crate::partition::{BlockGrid, BlockRef};
use crate::qp::QpMap;
use crate::video_io::{Channel, Frame, Plane};

pub use bits::bit_cost;
pub use dct::{dct2, idct2, Dct};
pub use quant::{dequantize, quantize, DEADZONE_INTER, DEADZONE_INTRA};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecParams {
    pub deadzone_intra: f64,
    pub deadzone_inter: f64,
}

impl Default for CodecParams {
    fn default() -> Self {
        CodecParams { deadzone_intra: DEADZONE_INTRA, deadzone_inter: DEADZONE_INTER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionMode {
    /// Flat prediction at the block's rounded mean, sent as side information.
    IntraDc(u16),
    Inter(MotionVector),
}

/// Source minus prediction for one CB and channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub channel: Channel,
    pub block: BlockRef,
    pub mode: PredictionMode,
    pub prediction: Vec<i32>,
    pub residual: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedBlock {
    pub levels: Vec<i32>,
    pub qstep: f64,
    /// Reconstructed samples after clipping.
    pub recon: Vec<u16>,
    pub bits: u64,
    /// Squared error of the reconstruction against the source, over the
    /// whole (padded) block.
    pub error_energy: u64,
}

impl CodedBlock {
    pub fn nonzero_levels(&self) -> usize {
        self.levels.iter().filter(|&&l| l != 0).count()
    }
}

fn read_block(plane: &Plane, x: usize, y: usize, size: usize) -> Vec<i32> {
    let mut out = Vec::with_capacity(size * size);
    for r in 0..size {
        out.extend(plane.row(y + r)[x..x + size].iter().map(|&s| i32::from(s)));
    }
    out
}

/// Rounded mean, half up.
fn block_mean(samples: &[i32]) -> u16 {
    let n = samples.len() as i64;
    let sum: i64 = samples.iter().map(|&s| i64::from(s)).sum();
    ((2 * sum + n) / (2 * n)) as u16
}

pub fn residual_block(
    source: &Plane,
    reference: Option<&Plane>,
    channel: Channel,
    block: &BlockRef,
    mv: Option<MotionVector>,
) -> Result<ResidualBlock> {
    let src = read_block(source, block.x, block.y, block.size);
    let (mode, prediction) = match (reference, mv) {
        (Some(r), Some(mv)) => {
            let (rx, ry) = reference_origin(r, block, mv)
                .ok_or_else(|| invalid(format!("motion vector {:?} leaves the reference frame", mv)))?;
            (PredictionMode::Inter(mv), read_block(r, rx, ry, block.size))
        }
        _ => {
            let dc = block_mean(&src);
            (PredictionMode::IntraDc(dc), vec![i32::from(dc); src.len()])
        }
    };
    let residual = src.iter().zip(&prediction).map(|(s, p)| s - p).collect();
    Ok(ResidualBlock { channel, block: *block, mode, prediction, residual })
}

/// Transform, quantize and reconstruct one residual block.
pub fn code_block(
    dct: &Dct,
    res: &ResidualBlock,
    source: &Plane,
    qstep: f64,
    deadzone: f64,
    max_sample: u16,
) -> CodedBlock {
    let input: Vec<f64> = res.residual.iter().map(|&v| f64::from(v)).collect();
    let coeffs = dct.forward(&input);
    let levels = quantize(&coeffs, qstep, deadzone);
    let bits = bit_cost(&levels);
    let recon_res = dct.inverse(&dequantize(&levels, qstep));
    let max = f64::from(max_sample);
    let recon: Vec<u16> = recon_res
        .iter()
        .zip(&res.prediction)
        .map(|(r, &p)| (f64::from(p) + r).round().clamp(0.0, max) as u16)
        .collect();
    let src = read_block(source, res.block.x, res.block.y, res.block.size);
    let error_energy = src
        .iter()
        .zip(&recon)
        .map(|(&s, &r)| {
            let d = i64::from(s) - i64::from(r);
            (d * d) as u64
        })
        .sum();
    CodedBlock { levels, qstep, recon, bits, error_energy }
}

/// Output of [`encode_frame`]. All planes are at the grid's padded size.
#[derive(Debug, Clone)]
pub struct EncodedFrame {
    pub recon: Frame,
    /// Level bits (significance map plus exp-Golomb magnitudes).
    pub residual_bits: u64,
    /// DC deltas for intra frames, vector components for inter frames.
    pub side_bits: u64,
    /// Per-channel squared error over the unpadded area.
    pub sse: [u64; 3],
    /// Number of nonzero quantized levels per CB and channel.
    pub nonzero: Vec<[u32; 3]>,
}

impl EncodedFrame {
    /// Level bits plus side information.
    pub fn total_bits(&self) -> u64 {
        self.residual_bits + self.side_bits
    }

    pub fn nonzero_levels(&self) -> u64 {
        self.nonzero.iter().flatten().map(|&n| u64::from(n)).sum()
    }
}

/// Codes one frame.
///
/// `frame` must be padded to the grid. With `reference = None` every CB is
/// intra DC; otherwise each CB is predicted from the reference at its PU's
/// vector in `motion`.
pub fn encode_frame(
    frame: &Frame,
    reference: Option<(&Frame, &MotionField)>,
    qp_map: &QpMap,
    grid: &BlockGrid,
    params: &CodecParams,
) -> Result<EncodedFrame> {
    if frame.width() != grid.padded_width() || frame.height() != grid.padded_height() {
        return Err(invalid("frame is not padded to the block grid"));
    }
    if qp_map.cb_count() != grid.len() {
        return Err(invalid(format!("QP map has {} CBs, grid has {}", qp_map.cb_count(), grid.len())));
    }
    if let Some((r, field)) = reference {
        if (r.width(), r.height(), r.bit_depth()) != (frame.width(), frame.height(), frame.bit_depth()) {
            return Err(invalid("reference frame does not match the current frame"));
        }
        if field.pu_count() != grid.len() {
            return Err(invalid(format!("motion field has {} PUs, grid has {}", field.pu_count(), grid.len())));
        }
    }

    let dct = Dct::new(grid.cb_size());
    let max = frame.max_sample();
    let deadzone = if reference.is_some() { params.deadzone_inter } else { params.deadzone_intra };

    let coded: Vec<[(ResidualBlock, CodedBlock); 3]> = grid
        .blocks()
        .par_iter()
        .enumerate()
        .map(|(i, cb)| {
            let mut out = Vec::with_capacity(3);
            for c in Channel::ALL {
                let src = frame.plane(c);
                let (rp, mv) = match reference {
                    Some((r, field)) => (Some(r.plane(c)), Some(field.vectors[i])),
                    None => (None, None),
                };
                let res = residual_block(src, rp, c, cb, mv)?;
                let qstep = qp_map.entry(i, c).qstep;
                let coded = code_block(&dct, &res, src, qstep, deadzone, max);
                out.push((res, coded));
            }
            let arr: [(ResidualBlock, CodedBlock); 3] = out.try_into().expect("three channels");
            Ok(arr)
        })
        .collect::<Result<_>>()?;

    let mut planes: [Plane; 3] = std::array::from_fn(|_| Plane::new(frame.width(), frame.height()));
    let mut residual_bits = 0u64;
    let mut side_bits = 0u64;
    let mut sse = [0u64; 3];
    let mut nonzero = Vec::with_capacity(grid.len());
    let mut prev_dc = [0i32; 3];
    for (cb, blocks) in grid.blocks().iter().zip(&coded) {
        let mut nz = [0u32; 3];
        for (ci, (res, cbk)) in blocks.iter().enumerate() {
            residual_bits += cbk.bits;
            nz[ci] = cbk.nonzero_levels() as u32;
            match res.mode {
                PredictionMode::IntraDc(dc) => {
                    side_bits += u64::from(bits::se_len(i32::from(dc) - prev_dc[ci]));
                    prev_dc[ci] = i32::from(dc);
                }
                PredictionMode::Inter(mv) if ci == 0 => {
                    side_bits += u64::from(bits::se_len(mv.x)) + u64::from(bits::se_len(mv.y));
                }
                PredictionMode::Inter(_) => {}
            }
            let plane = &mut planes[ci];
            for r in 0..cb.size {
                for col in 0..cb.size {
                    plane.set(cb.x + col, cb.y + r, cbk.recon[r * cb.size + col]);
                }
            }
        }
        nonzero.push(nz);
    }
    for c in Channel::ALL {
        sse[c.index()] = plane_sse(frame.plane(c), &planes[c.index()], grid.width(), grid.height());
    }
    let recon = Frame::new(frame.bit_depth(), planes)?;
    Ok(EncodedFrame { recon, residual_bits, side_bits, sse, nonzero })
}

/// Sum of squared differences over the top-left `width x height` window.
pub fn plane_sse(a: &Plane, b: &Plane, width: usize, height: usize) -> u64 {
    (0..height)
        .map(|y| {
            a.row(y)[..width]
                .iter()
                .zip(&b.row(y)[..width])
                .map(|(&p, &q)| {
                    let d = i64::from(p) - i64::from(q);
                    (d * d) as u64
                })
                .sum::<u64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::{qp_to_qstep, QpMap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured_frame(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let planes = std::array::from_fn(|_| Plane::from_fn(w, h, |_, _| rng.gen_range(40..216)));
        Frame::new(8, planes).unwrap()
    }

    fn uniform(grid: &BlockGrid, qp: i32) -> QpMap {
        QpMap::uniform(0, grid.len(), [qp; 3]).unwrap()
    }

    #[test]
    fn zero_frame_costs_only_significance_bits() {
        let grid = BlockGrid::build(32, 32, 2).unwrap();
        let f = Frame::filled(32, 32, 8, 0).unwrap();
        for qp in [0, 22, 51] {
            let enc = encode_frame(&f, None, &uniform(&grid, qp), &grid, &CodecParams::default()).unwrap();
            assert_eq!(enc.nonzero_levels(), 0);
            assert_eq!(enc.residual_bits, 3 * 32 * 32);
            // Every DC delta is zero: one bit per CB and channel.
            assert_eq!(enc.side_bits, 3 * grid.len() as u64);
            assert_eq!(enc.sse, [0; 3]);
            assert_eq!(enc.recon, f);
        }
    }

    #[test]
    fn low_qp_smooth_content_is_near_lossless() {
        let grid = BlockGrid::build(32, 32, 2).unwrap();
        let planes = std::array::from_fn(|c| Plane::from_fn(32, 32, |x, y| (50 + 2 * x + y + 10 * c) as u16));
        let f = Frame::new(8, planes).unwrap();
        let enc = encode_frame(&f, None, &uniform(&grid, 4), &grid, &CodecParams::default()).unwrap();
        for c in Channel::ALL {
            let (a, b) = (f.plane(c), enc.recon.plane(c));
            let worst = a.data().iter().zip(b.data()).map(|(&p, &q)| p.abs_diff(q)).max().unwrap();
            assert!(worst <= 1, "channel {:?} max error {}", c, worst);
        }
    }

    #[test]
    fn static_inter_frame_is_cheaper_than_intra() {
        let grid = BlockGrid::build(64, 64, 2).unwrap();
        let f = textured_frame(64, 64, 11);
        let params = CodecParams::default();
        let intra = encode_frame(&f, None, &uniform(&grid, 22), &grid, &params).unwrap();
        let field = MotionField::estimate(1, &f, &intra.recon, &grid, 8).unwrap();
        let inter = encode_frame(&f, Some((&intra.recon, &field)), &uniform(&grid, 22), &grid, &params).unwrap();
        assert!(inter.total_bits() < intra.total_bits());
        // Open loop against the exact source: residual vanishes.
        let exact = MotionField::new(1, vec![MotionVector::ZERO; grid.len()]).unwrap();
        let perfect = encode_frame(&f, Some((&f, &exact)), &uniform(&grid, 22), &grid, &params).unwrap();
        assert_eq!(perfect.nonzero_levels(), 0);
        assert_eq!(perfect.sse, [0; 3]);
    }

    #[test]
    fn rate_nonincreasing_when_qstep_doubles() {
        let grid = BlockGrid::build(64, 64, 2).unwrap();
        let params = CodecParams::default();
        for seed in 0..5 {
            let f = textured_frame(64, 64, seed);
            let mut last = u64::MAX;
            for qp in [10, 16, 22, 28, 34, 40, 46] {
                let enc = encode_frame(&f, None, &uniform(&grid, qp), &grid, &params).unwrap();
                assert!(enc.residual_bits <= last);
                last = enc.residual_bits;
            }
        }
    }

    #[test]
    fn distortion_grows_with_qp_in_most_blocks() {
        let grid = BlockGrid::build(64, 64, 2).unwrap();
        let dct = Dct::new(16);
        let (mut worse_or_equal, mut total) = (0, 0);
        for seed in 0..24 {
            let f = textured_frame(64, 64, 100 + seed);
            for cb in grid.blocks() {
                for c in Channel::ALL {
                    let res = residual_block(f.plane(c), None, c, cb, None).unwrap();
                    let lo = code_block(&dct, &res, f.plane(c), qp_to_qstep(27).unwrap(), DEADZONE_INTRA, 255);
                    let hi = code_block(&dct, &res, f.plane(c), qp_to_qstep(33).unwrap(), DEADZONE_INTRA, 255);
                    total += 1;
                    if hi.error_energy >= lo.error_energy {
                        worse_or_equal += 1;
                    }
                }
            }
        }
        assert!(worse_or_equal as f64 >= 0.95 * total as f64, "{}/{}", worse_or_equal, total);
    }

    #[test]
    fn mismatched_qp_map_rejected() {
        let grid = BlockGrid::build(32, 32, 2).unwrap();
        let f = Frame::filled(32, 32, 8, 0).unwrap();
        let map = QpMap::uniform(0, 3, [22; 3]).unwrap();
        assert!(encode_frame(&f, None, &map, &grid, &CodecParams::default()).is_err());
        let unpadded = Frame::filled(30, 30, 8, 0).unwrap();
        let grid30 = BlockGrid::build(30, 30, 2).unwrap();
        assert!(encode_frame(&unpadded, None, &uniform(&grid30, 22), &grid30, &CodecParams::default()).is_err());
    }

    #[test]
    fn residual_is_source_minus_prediction() {
        let f = textured_frame(32, 32, 5);
        let cb = BlockRef::new(16, 16, 16, 2).unwrap();
        let mv = MotionVector::new(3, 2);
        let res = residual_block(f.plane(Channel::B), Some(f.plane(Channel::G)), Channel::B, &cb, Some(mv)).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let s = i32::from(f.plane(Channel::B).get(16 + c, 16 + r));
                let p = i32::from(f.plane(Channel::G).get(16 + c - 3, 16 + r - 2));
                assert_eq!(res.residual[r * 16 + c], s - p);
            }
        }
        let out = BlockRef::new(0, 0, 16, 2).unwrap();
        assert!(residual_block(f.plane(Channel::B), Some(f.plane(Channel::G)), Channel::B, &out, Some(mv)).is_err());
    }

    #[test]
    fn dequantized_is_level_times_qstep() {
        let f = textured_frame(16, 16, 8);
        let cb = BlockRef::new(0, 0, 16, 2).unwrap();
        let res = residual_block(f.plane(Channel::G), None, Channel::G, &cb, None).unwrap();
        let coded = code_block(&Dct::new(16), &res, f.plane(Channel::G), 8.0, DEADZONE_INTRA, 255);
        let deq = dequantize(&coded.levels, coded.qstep);
        for (d, l) in deq.iter().zip(&coded.levels) {
            assert_eq!(*d, f64::from(*l) * 8.0);
        }
    }
}
