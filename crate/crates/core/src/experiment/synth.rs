//! Deterministic synthetic RGB 4:4:4 sources.
//!
//! - `noise`: independent uniform samples in every frame.
//! - `gradient`: static diagonal ramp; every CB has the same activity.
//! - `moving-texture`: static smooth background with a textured square object
//!   that moves by exactly `shift` each frame, reversing direction per axis at
//!   the frame border.
//! - `mixed`: static 32x32 checkerboard of textured and smooth tiles plus a
//!   smaller moving textured object.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::video_io::{max_sample, Frame, Plane, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    Noise,
    Gradient,
    MovingTexture,
    Mixed,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] =
        [SyntheticKind::Noise, SyntheticKind::Gradient, SyntheticKind::MovingTexture, SyntheticKind::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            SyntheticKind::Noise => "noise",
            SyntheticKind::Gradient => "gradient",
            SyntheticKind::MovingTexture => "moving-texture",
            SyntheticKind::Mixed => "mixed",
        }
    }

    fn min_dim(self) -> usize {
        match self {
            SyntheticKind::Noise | SyntheticKind::Gradient => 1,
            SyntheticKind::MovingTexture | SyntheticKind::Mixed => 64,
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        SyntheticKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown synthetic kind '{}' (expected noise, gradient, moving-texture or mixed)", s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub bit_depth: u8,
    pub seed: u64,
    /// Per-frame displacement of the moving object.
    pub shift: (i32, i32),
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, width: usize, height: usize, frames: usize, seed: u64) -> Self {
        SyntheticSpec { kind, width, height, frames, bit_depth: 8, seed, shift: (3, 4) }
    }
}

/// Spatially correlated texture: uniform noise smoothed by a 3x3 box filter,
/// zero mean, roughly `amplitude` peak.
fn texture(width: usize, height: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (pw, ph) = (width + 2, height + 2);
    let noise: Vec<f64> = (0..pw * ph).map(|_| rng.gen_range(-amplitude..amplitude)).collect();
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut s = 0.0;
            for dy in 0..3 {
                for dx in 0..3 {
                    s += noise[(y + dy) * pw + x + dx];
                }
            }
            // Box filtering shrinks the spread by 3; restore the nominal amplitude.
            out.push(s / 3.0);
        }
    }
    out
}

/// Per-channel resting level as a fraction of full scale (G, B, R).
const CHANNEL_LEVEL: [f64; 3] = [0.5, 0.4, 0.6];

fn to_sample(v: f64, max: u16) -> u16 {
    v.round().clamp(0.0, f64::from(max)) as u16
}

/// Moving object state: position and direction per axis.
struct Bouncer {
    pos: (i64, i64),
    dir: (i64, i64),
    range: (i64, i64),
    shift: (i64, i64),
}

impl Bouncer {
    fn new(range: (usize, usize), shift: (i32, i32)) -> Result<Self> {
        let range = (range.0 as i64, range.1 as i64);
        let shift = (i64::from(shift.0), i64::from(shift.1));
        if shift.0.abs() > range.0 || shift.1.abs() > range.1 {
            return Err(invalid(format!("shift {:?} does not fit the {:?} motion range", shift, range)));
        }
        Ok(Bouncer { pos: (range.0 / 4, range.1 / 4), dir: (1, 1), range, shift })
    }

    fn step(&mut self) {
        fn axis(pos: &mut i64, dir: &mut i64, shift: i64, range: i64) {
            let next = *pos + *dir * shift;
            if next < 0 || next > range {
                *dir = -*dir;
            }
            *pos += *dir * shift;
        }
        axis(&mut self.pos.0, &mut self.dir.0, self.shift.0, self.range.0);
        axis(&mut self.pos.1, &mut self.dir.1, self.shift.1, self.range.1);
    }
}

/// Position of the moving object in every frame for the given geometry.
fn object_track(frames: usize, range: (usize, usize), shift: (i32, i32)) -> Result<Vec<(usize, usize)>> {
    let mut b = Bouncer::new(range, shift)?;
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        out.push((b.pos.0 as usize, b.pos.1 as usize));
        b.step();
    }
    Ok(out)
}

/// Top-left corner of the moving object per frame, and its side length.
pub fn moving_object_track(spec: &SyntheticSpec) -> Result<(Vec<(usize, usize)>, usize)> {
    let side = match spec.kind {
        SyntheticKind::MovingTexture => spec.width.min(spec.height) / 2,
        SyntheticKind::Mixed => spec.width.min(spec.height) / 4,
        _ => return Err(invalid(format!("{} has no moving object", spec.kind))),
    };
    let track = object_track(spec.frames, (spec.width - side, spec.height - side), spec.shift)?;
    Ok((track, side))
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Sequence> {
    if spec.frames == 0 {
        return Err(invalid("synthetic sequence needs at least one frame"));
    }
    let min = spec.kind.min_dim();
    if spec.width < min || spec.height < min {
        return Err(invalid(format!("{} needs at least {}x{} samples", spec.kind, min, min)));
    }
    let (w, h) = (spec.width, spec.height);
    let max = max_sample(spec.bit_depth);
    let full = f64::from(max);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let ramp = |x: usize, y: usize, c: usize| {
        let t = (x + y) as f64 / (w + h).saturating_sub(2).max(1) as f64;
        full * (CHANNEL_LEVEL[c] - 0.25 + 0.5 * t)
    };

    let frames: Vec<Frame> = match spec.kind {
        SyntheticKind::Noise => (0..spec.frames)
            .map(|_| {
                let planes = std::array::from_fn(|_| Plane::from_fn(w, h, |_, _| rng.gen_range(0..=max)));
                Frame::new(spec.bit_depth, planes)
            })
            .collect::<Result<_>>()?,
        SyntheticKind::Gradient => {
            let planes: [Plane; 3] = std::array::from_fn(|c| Plane::from_fn(w, h, |x, y| to_sample(ramp(x, y, c), max)));
            let f = Frame::new(spec.bit_depth, planes)?;
            vec![f; spec.frames]
        }
        SyntheticKind::MovingTexture | SyntheticKind::Mixed => {
            let (track, side) = moving_object_track(spec)?;
            let amp = full / 4.0;
            let shared = texture(side, side, amp, &mut rng);
            let own: [Vec<f64>; 3] = std::array::from_fn(|_| texture(side, side, amp, &mut rng));
            // Background texture for the mixed checkerboard.
            let bg_shared = texture(w, h, amp, &mut rng);
            let bg_own: [Vec<f64>; 3] = std::array::from_fn(|_| texture(w, h, amp, &mut rng));
            let mixed = spec.kind == SyntheticKind::Mixed;
            let background = |x: usize, y: usize, c: usize| {
                let base = ramp(x, y, c);
                if mixed && ((x / 32) + (y / 32)) % 2 == 1 {
                    let i = y * w + x;
                    base + bg_shared[i] + 0.3 * bg_own[c][i]
                } else {
                    base
                }
            };
            track
                .iter()
                .map(|&(ox, oy)| {
                    let planes = std::array::from_fn(|c| {
                        Plane::from_fn(w, h, |x, y| {
                            let inside = x >= ox && x < ox + side && y >= oy && y < oy + side;
                            let v = if inside {
                                let i = (y - oy) * side + (x - ox);
                                full * CHANNEL_LEVEL[c] + shared[i] + 0.3 * own[c][i]
                            } else {
                                background(x, y, c)
                            };
                            to_sample(v, max)
                        })
                    });
                    Frame::new(spec.bit_depth, planes)
                })
                .collect::<Result<_>>()?
        }
    };
    Sequence::new(frames, 30.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity::ActivityMap;
    use crate::motion::{mv_magnitude, MotionField};
    use crate::partition::BlockGrid;
    use crate::video_io::encode_raw;

    #[test]
    fn deterministic_per_seed() {
        for kind in SyntheticKind::ALL {
            let spec = SyntheticSpec::new(kind, 64, 64, 4, 1);
            let a = encode_raw(&gen_synthetic(&spec).unwrap());
            let b = encode_raw(&gen_synthetic(&spec).unwrap());
            assert_eq!(a, b, "{}", kind);
        }
        let a = gen_synthetic(&SyntheticSpec::new(SyntheticKind::Noise, 64, 64, 1, 1)).unwrap();
        let b = gen_synthetic(&SyntheticSpec::new(SyntheticKind::Noise, 64, 64, 1, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn gradient_activity_is_flat() {
        let spec = SyntheticSpec::new(SyntheticKind::Gradient, 128, 128, 1, 0);
        let seq = gen_synthetic(&spec).unwrap();
        let grid = BlockGrid::build(128, 128, 2).unwrap();
        let map = ActivityMap::compute(&seq.frames()[0], &grid, 2.0).unwrap();
        for ch in &map.channels {
            let (lo, hi) = ch.normalized.iter().fold((f64::MAX, f64::MIN), |(l, h), &a| (l.min(a), h.max(a)));
            assert!(hi - lo < 0.05, "activity spread {}..{}", lo, hi);
        }
    }

    #[test]
    fn moving_texture_motion_is_recovered() {
        let mut spec = SyntheticSpec::new(SyntheticKind::MovingTexture, 128, 128, 6, 7);
        spec.shift = (3, 4);
        let seq = gen_synthetic(&spec).unwrap();
        let (track, side) = moving_object_track(&spec).unwrap();
        let grid = BlockGrid::build(128, 128, 2).unwrap();
        for n in 1..seq.len() {
            let field = MotionField::estimate(n, &seq.frames()[n], &seq.frames()[n - 1], &grid, 16).unwrap();
            let (ox, oy) = track[n];
            for (i, b) in grid.blocks().iter().enumerate() {
                if b.x >= ox && b.y >= oy && b.x + b.size <= ox + side && b.y + b.size <= oy + side {
                    assert_eq!(mv_magnitude(field.vectors[i]), 5.0);
                }
            }
        }
    }

    #[test]
    fn bounce_keeps_step_size() {
        let track = object_track(40, (20, 30), (3, 4)).unwrap();
        for w in track.windows(2) {
            let dx = w[1].0 as i64 - w[0].0 as i64;
            let dy = w[1].1 as i64 - w[0].1 as i64;
            assert_eq!((dx.abs(), dy.abs()), (3, 4));
            assert!(w[1].0 <= 20 && w[1].1 <= 30);
        }
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(gen_synthetic(&SyntheticSpec::new(SyntheticKind::MovingTexture, 32, 64, 2, 0)).is_err());
        assert!(gen_synthetic(&SyntheticSpec::new(SyntheticKind::Noise, 8, 8, 0, 0)).is_err());
        let mut spec = SyntheticSpec::new(SyntheticKind::MovingTexture, 64, 64, 2, 0);
        spec.shift = (40, 0);
        assert!(gen_synthetic(&spec).is_err());
        assert!("plasma".parse::<SyntheticKind>().is_err());
        assert_eq!("moving-texture".parse::<SyntheticKind>().unwrap(), SyntheticKind::MovingTexture);
    }

    #[test]
    fn higher_bit_depth_stays_in_range() {
        let mut spec = SyntheticSpec::new(SyntheticKind::Mixed, 64, 64, 2, 3);
        spec.bit_depth = 10;
        let seq = gen_synthetic(&spec).unwrap();
        assert_eq!(seq.bit_depth(), 10);
        assert!(seq.frames()[0].planes().iter().any(|p| p.data().iter().any(|&s| s > 255)));
    }
}
