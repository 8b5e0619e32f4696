//! Normalized spatial activity per CB and channel.
//!
//! For a CB with sub-block variances `var_1..var_4`:
//!
//! ```text
//! g = 1 + min(var_d)
//! m = mean of g over every CB of the channel in the current picture
//! A = (s*g + m) / (g + s*m)
//! ```
//!
//! `A` lies in `[1/s, s]`, equals 1 when `g == m` and grows with `g`. The
//! same formulas run independently on G, B and R.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::partition::{BlockGrid, BlockRef};
use crate::video_io::{Channel, Frame, Plane};

pub const DEFAULT_SCALE: f64 = 2.0;

/// Population variance of the samples under `sb`.
///
/// Sums are accumulated exactly in integers; only the final division is
/// floating point.
pub fn sub_block_variance(plane: &Plane, sb: &BlockRef) -> f64 {
    let mut sum: u64 = 0;
    let mut sum_sq: u64 = 0;
    for y in sb.y..sb.y + sb.size {
        let row = &plane.row(y)[sb.x..sb.x + sb.size];
        for &s in row {
            let s = u64::from(s);
            sum += s;
            sum_sq += s * s;
        }
    }
    let n = sb.area() as u128;
    // n * sum_sq - sum^2 >= 0 by Cauchy-Schwarz.
    let num = n * u128::from(sum_sq) - u128::from(sum) * u128::from(sum);
    num as f64 / (n * n) as f64
}

/// `1 + min` of the four sub-block variances.
pub fn cb_activity(plane: &Plane, cb: &BlockRef) -> f64 {
    let min = cb
        .sub_blocks()
        .iter()
        .map(|sb| sub_block_variance(plane, sb))
        .fold(f64::INFINITY, f64::min);
    1.0 + min
}

pub fn frame_mean_activity(g_values: &[f64]) -> Result<f64> {
    if g_values.is_empty() {
        return Err(invalid("frame mean activity needs at least one CB"));
    }
    Ok(g_values.iter().sum::<f64>() / g_values.len() as f64)
}

pub fn normalized_activity(g: f64, m: f64, s: f64) -> f64 {
    (s * g + m) / (g + s * m)
}

/// Activity values for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelActivity {
    /// Non-normalized activity `g` per CB.
    pub g: Vec<f64>,
    /// Frame mean of `g`.
    pub mean: f64,
    /// Normalized activity `A` per CB.
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityMap {
    pub channels: [ChannelActivity; 3],
    pub scale: f64,
}

impl ActivityMap {
    /// `frame` must already be padded to the grid.
    pub fn compute(frame: &Frame, grid: &BlockGrid, scale: f64) -> Result<Self> {
        if frame.width() != grid.padded_width() || frame.height() != grid.padded_height() {
            return Err(invalid("frame is not padded to the block grid"));
        }
        if scale <= 1.0 {
            return Err(invalid("activity scale must exceed 1"));
        }
        let channels = Channel::ALL.map(|c| {
            let plane = frame.plane(c);
            let g: Vec<f64> = grid.blocks().par_iter().map(|cb| cb_activity(plane, cb)).collect();
            let mean = frame_mean_activity(&g).expect("grid is never empty");
            let normalized = g.iter().map(|&gi| normalized_activity(gi, mean, scale)).collect();
            ChannelActivity { g, mean, normalized }
        });
        Ok(ActivityMap { channels, scale })
    }

    pub fn channel(&self, c: Channel) -> &ChannelActivity {
        &self.channels[c.index()]
    }

    pub fn normalized(&self, c: Channel, cb: usize) -> f64 {
        self.channels[c.index()].normalized[cb]
    }
}
