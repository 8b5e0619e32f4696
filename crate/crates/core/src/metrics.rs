//! Objective quality: per-channel PSNR, global GBR SSIM, percentage deltas.

use crate::error::{invalid, Result};
use crate::video_io::{max_sample, Channel, Frame, Plane};

/// Reported PSNR for identical planes.
pub const PSNR_CAP: f64 = 99.99;
pub const SSIM_WINDOW: usize = 8;

pub fn mse(a: &Plane, b: &Plane) -> Result<f64> {
    check_dims(a, b)?;
    let sse: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| {
            let d = i64::from(p) - i64::from(q);
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / a.data().len() as f64)
}

/// `10 log10(peak^2 / mse)`, capped at [`PSNR_CAP`].
pub fn psnr_from_mse(mse: f64, bit_depth: u8) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    let peak = f64::from(max_sample(bit_depth));
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP)
}

pub fn psnr(reference: &Plane, test: &Plane, bit_depth: u8) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, test)?, bit_depth))
}

fn check_dims(a: &Plane, b: &Plane) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(invalid(format!(
            "plane sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Summed-area table with one row and column of zero padding.
struct Integral {
    stride: usize,
    data: Vec<u64>,
}

impl Integral {
    fn build(w: usize, h: usize, f: impl Fn(usize, usize) -> u64) -> Self {
        let stride = w + 1;
        let mut data = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            for x in 0..w {
                row += f(x, y);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Integral { stride, data }
    }

    fn window(&self, x: usize, y: usize, n: usize) -> u64 {
        let s = self.stride;
        self.data[(y + n) * s + x + n] + self.data[y * s + x] - self.data[y * s + x + n] - self.data[(y + n) * s + x]
    }
}

/// Mean SSIM over all 8x8 windows (stride 1) of one plane pair.
pub fn ssim_plane(a: &Plane, b: &Plane, bit_depth: u8) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    let n = SSIM_WINDOW;
    if w < n || h < n {
        return Err(invalid(format!("{}x{} plane is smaller than the {}x{} SSIM window", w, h, n, n)));
    }
    let peak = f64::from(max_sample(bit_depth));
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let va = |x, y| u64::from(a.get(x, y));
    let vb = |x, y| u64::from(b.get(x, y));
    let sa = Integral::build(w, h, va);
    let sb = Integral::build(w, h, vb);
    let saa = Integral::build(w, h, |x, y| va(x, y) * va(x, y));
    let sbb = Integral::build(w, h, |x, y| vb(x, y) * vb(x, y));
    let sab = Integral::build(w, h, |x, y| va(x, y) * vb(x, y));

    let count = (n * n) as f64;
    let mut total = 0.0;
    for y in 0..=h - n {
        for x in 0..=w - n {
            let (ta, tb) = (sa.window(x, y, n) as f64, sb.window(x, y, n) as f64);
            let mu_a = ta / count;
            let mu_b = tb / count;
            let var_a = saa.window(x, y, n) as f64 / count - mu_a * mu_a;
            let var_b = sbb.window(x, y, n) as f64 / count - mu_b * mu_b;
            let cov = sab.window(x, y, n) as f64 / count - mu_a * mu_b;
            total += ssim_formula(mu_a, mu_b, var_a, var_b, cov, c1, c2);
        }
    }
    Ok(total / ((w - n + 1) * (h - n + 1)) as f64)
}

fn ssim_formula(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
}

/// Per-channel SSIM in G, B, R order.
pub fn ssim_channels(reference: &Frame, test: &Frame) -> Result<[f64; 3]> {
    if reference.bit_depth() != test.bit_depth() {
        return Err(invalid("frames differ in bit depth"));
    }
    let mut out = [0.0; 3];
    for c in Channel::ALL {
        out[c.index()] = ssim_plane(reference.plane(c), test.plane(c), reference.bit_depth())?;
    }
    Ok(out)
}

/// Mean of the three channel SSIMs.
pub fn ssim_global(reference: &Frame, test: &Frame) -> Result<f64> {
    let s = ssim_channels(reference, test)?;
    Ok((s[0] + s[1] + s[2]) / 3.0)
}

/// `100 * (test - anchor) / anchor`; negative means a reduction.
pub fn pct_reduction(anchor: f64, test: f64) -> Result<f64> {
    if !(anchor > 0.0) {
        return Err(invalid(format!("anchor value must be positive, got {}", anchor)));
    }
    Ok(100.0 * (test - anchor) / anchor)
}
