//! CB-level perceptual QPs.
//!
//! For each CB and channel `c` the encoder uses
//!
//! ```text
//! raw   = round(6 * log2(A_c))            (round half away from zero)
//! delta = clamp(t_c + raw, lo_c, hi_c)    (ClampScope::Total)
//! Q_c   = clamp(q_c + delta, 0, 51)
//! ```
//!
//! with `[lo, hi] = [o/2, o]` for G and `[o, o_max]` for B and R. Since `lo`
//! is positive the final QP never drops below the frame-level QP.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activity::ActivityMap;
use crate::error::{invalid, Result};
use crate::motion::TemporalOffsets;
use crate::video_io::Channel;

pub const QP_MIN: i32 = 0;
pub const QP_MAX: i32 = 51;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QpConstants {
    /// Mean CB-level perceptual offset.
    pub o: i32,
    /// Largest CB-level offset.
    pub o_max: i32,
    /// Number of CB-level offsets averaged into `o`.
    pub w: i32,
}

impl Default for QpConstants {
    fn default() -> Self {
        QpConstants { o: 6, o_max: 12, w: 12 }
    }
}

impl QpConstants {
    /// Allowed range of the perceptual adjustment for channel `c`.
    pub fn range(&self, c: Channel) -> (i32, i32) {
        match c {
            Channel::G => (self.o / 2, self.o),
            Channel::B | Channel::R => (self.o, self.o_max),
        }
    }
}

/// Which quantity the per-channel range is applied to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClampScope {
    /// Clamp `t + raw` as a whole.
    #[default]
    Total,
    /// Clamp `raw` alone, then add `t` unclamped.
    OffsetTerm,
}

impl ClampScope {
    pub fn as_str(self) -> &'static str {
        match self {
            ClampScope::Total => "total",
            ClampScope::OffsetTerm => "offset-term",
        }
    }
}

impl FromStr for ClampScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "total" => Ok(ClampScope::Total),
            "offset-term" => Ok(ClampScope::OffsetTerm),
            _ => Err(format!("unknown clamp scope '{}' (expected total or offset-term)", s)),
        }
    }
}

/// QP allocation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Uniform QP, no perceptual offsets.
    Anchor,
    /// Spatial, temporal and color masking.
    Spaq,
    /// Temporal offsets forced to zero.
    SpatialOnly,
    /// Normalized activity forced to one.
    TemporalOnly,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Anchor, Mode::Spaq, Mode::SpatialOnly, Mode::TemporalOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Anchor => "anchor",
            Mode::Spaq => "spaq",
            Mode::SpatialOnly => "spatial-only",
            Mode::TemporalOnly => "temporal-only",
        }
    }

    fn uses_spatial(self) -> bool {
        matches!(self, Mode::Spaq | Mode::SpatialOnly)
    }

    fn uses_temporal(self) -> bool {
        matches!(self, Mode::Spaq | Mode::TemporalOnly)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "anchor" | "anchor-uniform" => Ok(Mode::Anchor),
            "spaq" => Ok(Mode::Spaq),
            "spatial-only" => Ok(Mode::SpatialOnly),
            "temporal-only" => Ok(Mode::TemporalOnly),
            _ => Err(format!("unknown mode '{}'", s)),
        }
    }
}

/// `round(6 * log2(a))`, half away from zero.
pub fn raw_offset(a: f64) -> Result<i32> {
    if !(a > 0.0) {
        return Err(invalid(format!("activity must be positive, got {}", a)));
    }
    Ok((6.0 * a.log2()).round() as i32)
}

/// Perceptual adjustment with the whole `t + raw` clamped into `[lo, hi]`.
pub fn perceptual_offset(a: f64, t: i32, lo: i32, hi: i32) -> Result<i32> {
    perceptual_offset_scoped(a, t, lo, hi, ClampScope::Total)
}

pub fn perceptual_offset_scoped(a: f64, t: i32, lo: i32, hi: i32, scope: ClampScope) -> Result<i32> {
    let raw = raw_offset(a)?;
    Ok(match scope {
        ClampScope::Total => (t + raw).clamp(lo, hi),
        ClampScope::OffsetTerm => t + raw.clamp(lo, hi),
    })
}

pub fn cb_qp(q_base: i32, delta: i32) -> i32 {
    (q_base + delta).clamp(QP_MIN, QP_MAX)
}

/// `2^((qp - 4) / 6)`. Built from an exact power of two times a six-entry
/// table, so `qstep(qp + 6) == 2 * qstep(qp)` holds bit-exactly.
pub fn qp_to_qstep(qp: i32) -> Result<f64> {
    if !(QP_MIN..=QP_MAX).contains(&qp) {
        return Err(invalid(format!("QP {} outside [0, 51]", qp)));
    }
    let k = qp - 4;
    let (octave, step) = (k.div_euclid(6), k.rem_euclid(6));
    let frac = 2f64.powf(f64::from(step) / 6.0);
    Ok(frac * 2f64.powi(octave))
}

pub fn check_qp(qp: i32) -> Result<()> {
    if (QP_MIN..=QP_MAX).contains(&qp) {
        Ok(())
    } else {
        Err(invalid(format!("QP {} outside [0, 51]", qp)))
    }
}

/// One CB, one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpEntry {
    /// Frame-level base QP.
    pub q: i32,
    /// `round(6 * log2(A))`.
    pub raw: i32,
    /// Temporal offset.
    pub t: i32,
    /// Clamped perceptual adjustment.
    pub delta: i32,
    /// Final QP.
    pub qp: i32,
    pub qstep: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpMap {
    pub frame_index: usize,
    pub mode: Mode,
    /// Indexed `[cb][channel]`.
    pub entries: Vec<[QpEntry; 3]>,
}

/// Inputs for [`QpMap::derive`].
#[derive(Debug, Clone, Copy)]
pub struct QpParams {
    pub mode: Mode,
    pub base_qp: i32,
    /// Per-channel offsets added to `base_qp` (G, B, R).
    pub channel_base_offsets: [i32; 3],
    pub constants: QpConstants,
    pub clamp_scope: ClampScope,
}

impl QpParams {
    pub fn new(mode: Mode, base_qp: i32) -> Self {
        QpParams {
            mode,
            base_qp,
            channel_base_offsets: [0; 3],
            constants: QpConstants::default(),
            clamp_scope: ClampScope::default(),
        }
    }
}

impl QpMap {
    /// Uniform map with every CB at the channel's base QP.
    pub fn uniform(frame_index: usize, cb_count: usize, base_qps: [i32; 3]) -> Result<Self> {
        let mut row = [QpEntry { q: 0, raw: 0, t: 0, delta: 0, qp: 0, qstep: 0.0 }; 3];
        for c in Channel::ALL {
            let q = base_qps[c.index()];
            row[c.index()] = QpEntry { q, raw: 0, t: 0, delta: 0, qp: q, qstep: qp_to_qstep(q)? };
        }
        let entries = vec![row; cb_count];
        Ok(QpMap { frame_index, mode: Mode::Anchor, entries })
    }

    /// Per-CB QPs for `params.mode`. `temporal` may be `None` for intra frames,
    /// in which case every temporal offset is zero.
    pub fn derive(
        frame_index: usize,
        params: &QpParams,
        activity: &ActivityMap,
        temporal: Option<&[TemporalOffsets]>,
    ) -> Result<Self> {
        let base_qps = params.channel_base_offsets.map(|o| params.base_qp + o);
        let cb_count = activity.channels[0].normalized.len();
        if params.mode == Mode::Anchor {
            return QpMap::uniform(frame_index, cb_count, base_qps);
        }
        for &q in &base_qps {
            check_qp(q)?;
        }
        if let Some(t) = temporal {
            if t.len() != cb_count {
                return Err(invalid(format!("{} temporal offsets for {} CBs", t.len(), cb_count)));
            }
        }
        let mut entries = Vec::with_capacity(cb_count);
        for cb in 0..cb_count {
            let mut row = [QpEntry { q: 0, raw: 0, t: 0, delta: 0, qp: 0, qstep: 0.0 }; 3];
            for c in Channel::ALL {
                let a = if params.mode.uses_spatial() { activity.normalized(c, cb) } else { 1.0 };
                let t = match temporal {
                    Some(offs) if params.mode.uses_temporal() => offs[cb].for_channel(c),
                    _ => 0,
                };
                let (lo, hi) = params.constants.range(c);
                let raw = raw_offset(a)?;
                let delta = perceptual_offset_scoped(a, t, lo, hi, params.clamp_scope)?;
                let q = base_qps[c.index()];
                let qp = cb_qp(q, delta);
                row[c.index()] = QpEntry { q, raw, t, delta, qp, qstep: qp_to_qstep(qp)? };
            }
            entries.push(row);
        }
        Ok(QpMap { frame_index, mode: params.mode, entries })
    }

    pub fn cb_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, cb: usize, c: Channel) -> &QpEntry {
        &self.entries[cb][c.index()]
    }

    /// Writes one row per (CB, channel):
    /// `frame,cb_index,channel,q,raw,t,delta,qp,qstep`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for (cb, row) in self.entries.iter().enumerate() {
            for c in Channel::ALL {
                let e = &row[c.index()];
                wtr.serialize(QpCsvRow {
                    frame: self.frame_index,
                    cb_index: cb,
                    channel: c.name(),
                    q: e.q,
                    raw: e.raw,
                    t: e.t,
                    delta: e.delta,
                    qp: e.qp,
                    qstep: e.qstep,
                })?;
            }
        }
        if self.entries.is_empty() {
            wtr.write_record(QP_CSV_HEADER)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub const QP_CSV_HEADER: [&str; 9] = ["frame", "cb_index", "channel", "q", "raw", "t", "delta", "qp", "qstep"];

#[derive(Serialize)]
struct QpCsvRow<'a> {
    frame: usize,
    cb_index: usize,
    channel: &'a str,
    q: i32,
    raw: i32,
    t: i32,
    delta: i32,
    qp: i32,
    qstep: f64,
}
