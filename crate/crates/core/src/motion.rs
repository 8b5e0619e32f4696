//! Integer-sample block matching and temporal masking offsets.
//!
//! A motion vector describes how content moved from the reference frame to the
//! current one: the block at `p` in the current frame is predicted from the
//! reference block at `p - mv`. Matching runs on the G plane only and the
//! resulting vector is shared by the B and R blocks of the same PU.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::partition::{BlockGrid, BlockRef};
use crate::video_io::{Channel, Frame, Plane};

pub const DEFAULT_SEARCH_RANGE: u32 = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MotionVector {
    pub x: i32,
    pub y: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { x: 0, y: 0 };

    pub fn new(x: i32, y: i32) -> Self {
        MotionVector { x, y }
    }

    pub fn magnitude(self) -> f64 {
        mv_magnitude(self)
    }

    fn magnitude_sq(self) -> i64 {
        i64::from(self.x) * i64::from(self.x) + i64::from(self.y) * i64::from(self.y)
    }
}

pub fn mv_magnitude(v: MotionVector) -> f64 {
    (v.magnitude_sq() as f64).sqrt()
}

/// Sum of absolute differences between the `size`-square blocks at `(cx, cy)`
/// in `cur` and `(rx, ry)` in `reference`. Gives up early once the running sum
/// exceeds `limit`.
fn sad(cur: &Plane, reference: &Plane, cx: usize, cy: usize, rx: usize, ry: usize, size: usize, limit: u64) -> u64 {
    let mut total = 0u64;
    for row in 0..size {
        let a = &cur.row(cy + row)[cx..cx + size];
        let b = &reference.row(ry + row)[rx..rx + size];
        total += a
            .iter()
            .zip(b)
            .map(|(&p, &q)| u64::from(p.abs_diff(q)))
            .sum::<u64>();
        if total > limit {
            return total;
        }
    }
    total
}

/// SAD of predicting `pu` in `cur` with motion `mv`, or `None` if the
/// reference block would leave the plane.
pub fn sad_at(cur: &Plane, reference: &Plane, pu: &BlockRef, mv: MotionVector) -> Option<u64> {
    let (rx, ry) = reference_origin(reference, pu, mv)?;
    Some(sad(cur, reference, pu.x, pu.y, rx, ry, pu.size, u64::MAX))
}

/// Top-left of the reference block used for `pu` under `mv`, if inside the plane.
pub fn reference_origin(reference: &Plane, pu: &BlockRef, mv: MotionVector) -> Option<(usize, usize)> {
    let rx = pu.x as i64 - i64::from(mv.x);
    let ry = pu.y as i64 - i64::from(mv.y);
    if rx < 0 || ry < 0 {
        return None;
    }
    let (rx, ry) = (rx as usize, ry as usize);
    if rx + pu.size > reference.width() || ry + pu.size > reference.height() {
        return None;
    }
    Some((rx, ry))
}

/// Exhaustive SAD search over `[-range, range]^2`.
///
/// Ties go to the smaller magnitude, then the smaller `y`, then the smaller
/// `x`. Candidates whose reference block leaves the plane are skipped.
pub fn block_match(cur: &Plane, reference: &Plane, pu: &BlockRef, search_range: u32) -> MotionVector {
    debug_assert_eq!((cur.width(), cur.height()), (reference.width(), reference.height()));
    let r = search_range as i32;
    let mut best = MotionVector::ZERO;
    let mut best_key = (
        sad(cur, reference, pu.x, pu.y, pu.x, pu.y, pu.size, u64::MAX),
        0i64,
        0i32,
        0i32,
    );
    for dy in -r..=r {
        for dx in -r..=r {
            let mv = MotionVector::new(dx, dy);
            let Some((rx, ry)) = reference_origin(reference, pu, mv) else {
                continue;
            };
            let cost = sad(cur, reference, pu.x, pu.y, rx, ry, pu.size, best_key.0);
            if cost > best_key.0 {
                continue;
            }
            let key = (cost, mv.magnitude_sq(), dy, dx);
            if key < best_key {
                best_key = key;
                best = mv;
            }
        }
    }
    best
}

pub fn frame_mean_magnitude(vectors: &[MotionVector]) -> Result<f64> {
    if vectors.is_empty() {
        return Err(invalid("motion field has no prediction units"));
    }
    Ok(vectors.iter().map(|&v| mv_magnitude(v)).sum::<f64>() / vectors.len() as f64)
}

/// One vector per PU (grid order) and their mean magnitude `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionField {
    pub frame_index: usize,
    pub vectors: Vec<MotionVector>,
    pub mean_magnitude: f64,
}

impl MotionField {
    pub fn new(frame_index: usize, vectors: Vec<MotionVector>) -> Result<Self> {
        let mean_magnitude = frame_mean_magnitude(&vectors)?;
        Ok(MotionField { frame_index, vectors, mean_magnitude })
    }

    /// Block-matches every PU of `grid` from `cur` against `reference` (G plane).
    pub fn estimate(
        frame_index: usize,
        cur: &Frame,
        reference: &Frame,
        grid: &BlockGrid,
        search_range: u32,
    ) -> Result<Self> {
        if (cur.width(), cur.height()) != (reference.width(), reference.height()) {
            return Err(invalid("current and reference frames differ in size"));
        }
        let (c, r) = (cur.plane(Channel::G), reference.plane(Channel::G));
        let vectors = grid
            .blocks()
            .par_iter()
            .map(|pu| block_match(c, r, pu, search_range))
            .collect();
        MotionField::new(frame_index, vectors)
    }

    pub fn pu_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn magnitude(&self, pu: usize) -> f64 {
        mv_magnitude(self.vectors[pu])
    }
}

/// Slack for `m > v`: a field of equal magnitudes must never trigger, even
/// when the floating-point mean lands an ulp below them.
const MAGNITUDE_EPS: f64 = 1e-9;

fn exceeds(m: f64, v: f64) -> bool {
    m > v + MAGNITUDE_EPS
}

/// G-channel temporal offset: `o/2` when `m > v`, else 0.
pub fn temporal_offset_g(m: f64, v: f64, o: i32) -> i32 {
    if exceeds(m, v) {
        o / 2
    } else {
        0
    }
}

/// B/R temporal offset: `o` when `m > v`, else 0.
pub fn temporal_offset_br(m: f64, v: f64, o: i32) -> i32 {
    if exceeds(m, v) {
        o
    } else {
        0
    }
}

/// Temporal offsets for one PU, per channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TemporalOffsets {
    pub g: i32,
    pub br: i32,
}

impl TemporalOffsets {
    pub fn for_channel(self, c: Channel) -> i32 {
        match c {
            Channel::G => self.g,
            Channel::B | Channel::R => self.br,
        }
    }
}

/// Offsets for every PU of `field`, thresholded against `mean_magnitude`.
pub fn temporal_offsets(field: &MotionField, mean_magnitude: f64, o: i32) -> Vec<TemporalOffsets> {
    field
        .vectors
        .iter()
        .map(|&v| {
            let m = mv_magnitude(v);
            TemporalOffsets {
                g: temporal_offset_g(m, mean_magnitude, o),
                br: temporal_offset_br(m, mean_magnitude, o),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(w, h, |_, _| rng.gen_range(0..256))
    }

    /// Independent argmin: collect every legal candidate, sort by the tie-break key.
    fn brute_force(cur: &Plane, reference: &Plane, pu: &BlockRef, r: i32) -> MotionVector {
        let mut cands = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let rx = pu.x as i64 - dx as i64;
                let ry = pu.y as i64 - dy as i64;
                if rx < 0 || ry < 0 || rx as usize + pu.size > reference.width() || ry as usize + pu.size > reference.height() {
                    continue;
                }
                let mut s = 0i64;
                for j in 0..pu.size {
                    for i in 0..pu.size {
                        s += (cur.get(pu.x + i, pu.y + j) as i64
                            - reference.get(rx as usize + i, ry as usize + j) as i64)
                            .abs();
                    }
                }
                cands.push((s, dx * dx + dy * dy, dy, dx));
            }
        }
        cands.sort();
        MotionVector::new(cands[0].3, cands[0].2)
    }

    #[test]
    fn identical_frames_give_zero_mv() {
        let p = textured(32, 32, 3);
        let pu = BlockRef::new(8, 8, 16, 2).unwrap();
        assert_eq!(block_match(&p, &p, &pu, 8), MotionVector::ZERO);
    }

    #[test]
    fn planted_shift_recovered() {
        let reference = textured(48, 48, 9);
        // cur(x) = ref(x - 2): content moved right by two.
        let cur = Plane::from_fn(48, 48, |x, y| reference.get(x.saturating_sub(2), y));
        let pu = BlockRef::new(16, 16, 16, 2).unwrap();
        let mv = block_match(&cur, &reference, &pu, 4);
        assert_eq!(mv, MotionVector::new(2, 0));
        assert_eq!(mv, brute_force(&cur, &reference, &pu, 4));
        assert_eq!(sad_at(&cur, &reference, &pu, mv), Some(0));
    }

    #[test]
    fn flat_frames_tie_break_to_zero() {
        let p = Plane::filled(32, 32, 100);
        let pu = BlockRef::new(8, 8, 16, 2).unwrap();
        assert_eq!(block_match(&p, &p, &pu, 8), MotionVector::ZERO);
    }

    #[test]
    fn out_of_frame_candidates_skipped() {
        let p = textured(16, 16, 1);
        let pu = BlockRef::new(0, 0, 16, 2).unwrap();
        assert_eq!(block_match(&p, &p, &pu, 16), MotionVector::ZERO);
        assert_eq!(sad_at(&p, &p, &pu, MotionVector::new(1, 0)), None);
    }

    #[test]
    fn magnitudes() {
        assert_eq!(mv_magnitude(MotionVector::new(0, 0)), 0.0);
        assert_eq!(mv_magnitude(MotionVector::new(3, 4)), 5.0);
        assert!((mv_magnitude(MotionVector::new(-2, 1)) - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mean_magnitudes() {
        let f = MotionField::new(
            1,
            vec![MotionVector::new(0, 0), MotionVector::new(3, 4), MotionVector::new(6, 8), MotionVector::new(-4, 3)],
        )
        .unwrap();
        assert_eq!(f.mean_magnitude, 5.0);
        assert_eq!(MotionField::new(1, vec![MotionVector::ZERO; 9]).unwrap().mean_magnitude, 0.0);
        assert_eq!(frame_mean_magnitude(&[MotionVector::new(7, 0)]).unwrap(), 7.0);
        assert!(frame_mean_magnitude(&[]).is_err());
    }

    #[test]
    fn temporal_offset_values() {
        assert_eq!(temporal_offset_g(6.0, 5.0, 6), 3);
        assert_eq!(temporal_offset_g(5.0, 5.0, 6), 0);
        assert_eq!(temporal_offset_br(6.0, 5.0, 6), 6);
        assert_eq!(temporal_offset_br(0.0, 0.0, 6), 0);
        assert_eq!(temporal_offset_br(5.0 + 1e-6, 5.0, 6), 6);
    }

    #[test]
    fn uniform_field_triggers_nothing() {
        let f = MotionField::new(2, vec![MotionVector::new(1, 1); 6]).unwrap();
        let offs = temporal_offsets(&f, f.mean_magnitude, 6);
        assert!(offs.iter().all(|o| *o == TemporalOffsets::default()));
    }

    proptest! {
        #[test]
        fn matches_brute_force(seed in any::<u64>(), range in 0i32..=4, px in 0usize..3, py in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Small alphabet makes ties common.
            let reference = Plane::from_fn(24, 24, |_, _| rng.gen_range(0..4));
            let cur = Plane::from_fn(24, 24, |_, _| rng.gen_range(0..4));
            let pu = BlockRef::new(px * 8, py * 8, 8, 3).unwrap();
            let mv = block_match(&cur, &reference, &pu, range as u32);
            prop_assert_eq!(mv, brute_force(&cur, &reference, &pu, range));
            prop_assert!(sad_at(&cur, &reference, &pu, mv).unwrap() <= sad_at(&cur, &reference, &pu, MotionVector::ZERO).unwrap());
        }

        #[test]
        fn some_pu_above_mean_iff_magnitudes_differ(mvs in prop::collection::vec((-5i32..=5, -5i32..=5), 1..20)) {
            let vectors: Vec<_> = mvs.iter().map(|&(x, y)| MotionVector::new(x, y)).collect();
            let f = MotionField::new(0, vectors.clone()).unwrap();
            let offs = temporal_offsets(&f, f.mean_magnitude, 6);
            let any_above = offs.iter().any(|o| o.br > 0);
            let mags: Vec<i64> = vectors.iter().map(|v| v.magnitude_sq()).collect();
            let all_equal = mags.iter().all(|&m| m == mags[0]);
            prop_assert_eq!(any_above, !all_equal);
        }
    }
}
