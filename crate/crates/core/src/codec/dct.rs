//! Orthonormal type-II DCT, separable, with an even/odd butterfly.

use std::f64::consts::PI;

/// Precomputed basis for one block size.
#[derive(Debug, Clone)]
pub struct Dct {
    n: usize,
    /// `basis[k * n + i]`: scale_k * cos(pi * (2i + 1) * k / 2n).
    basis: Vec<f64>,
}

/// `cos(pi * j / 2n)` reduced to the first quadrant so that mathematically
/// equal magnitudes come out bit-identical.
fn quadrant_cos(j: usize, n: usize) -> f64 {
    let mut j = j % (4 * n);
    if j > 2 * n {
        j = 4 * n - j;
    }
    let (j, sign) = if j > n { (2 * n - j, -1.0) } else { (j, 1.0) };
    if j == n {
        0.0
    } else {
        sign * (PI * j as f64 / (2 * n) as f64).cos()
    }
}

impl Dct {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1 && (n == 1 || n % 2 == 0), "unsupported DCT size {}", n);
        let dc_scale = (1.0 / n as f64).sqrt();
        let ac_scale = (2.0 / n as f64).sqrt();
        let mut basis = vec![0.0; n * n];
        for k in 0..n {
            let scale = if k == 0 { dc_scale } else { ac_scale };
            for i in 0..n {
                basis[k * n + i] = scale * quadrant_cos((2 * i + 1) * k, n);
            }
        }
        Dct { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn forward_1d(&self, input: &[f64], out: &mut [f64], even: &mut [f64], odd: &mut [f64]) {
        let n = self.n;
        if n == 1 {
            out[0] = input[0];
            return;
        }
        let half = n / 2;
        for i in 0..half {
            even[i] = input[i] + input[n - 1 - i];
            odd[i] = input[i] - input[n - 1 - i];
        }
        for k in 0..n {
            let src = if k % 2 == 0 { &even[..half] } else { &odd[..half] };
            let row = &self.basis[k * n..k * n + half];
            out[k] = row.iter().zip(src).map(|(b, v)| b * v).sum();
        }
    }

    fn inverse_1d(&self, input: &[f64], out: &mut [f64], even: &mut [f64], odd: &mut [f64]) {
        let n = self.n;
        if n == 1 {
            out[0] = input[0];
            return;
        }
        let half = n / 2;
        for i in 0..half {
            let (mut e, mut o) = (0.0, 0.0);
            for k in (0..n).step_by(2) {
                e += self.basis[k * n + i] * input[k];
            }
            for k in (1..n).step_by(2) {
                o += self.basis[k * n + i] * input[k];
            }
            even[i] = e;
            odd[i] = o;
        }
        for i in 0..half {
            out[i] = even[i] + odd[i];
            out[n - 1 - i] = even[i] - odd[i];
        }
    }

    fn separable(&self, block: &[f64], inverse: bool) -> Vec<f64> {
        let n = self.n;
        assert_eq!(block.len(), n * n);
        let mut tmp = vec![0.0; n * n];
        let mut out = vec![0.0; n * n];
        let mut col_in = vec![0.0; n];
        let mut col_out = vec![0.0; n];
        let mut even = vec![0.0; n / 2 + 1];
        let mut odd = vec![0.0; n / 2 + 1];
        let pass = |src: &[f64], dst: &mut [f64], e: &mut [f64], o: &mut [f64]| {
            if inverse {
                self.inverse_1d(src, dst, e, o)
            } else {
                self.forward_1d(src, dst, e, o)
            }
        };
        for r in 0..n {
            pass(&block[r * n..(r + 1) * n], &mut tmp[r * n..(r + 1) * n], &mut even, &mut odd);
        }
        for c in 0..n {
            for r in 0..n {
                col_in[r] = tmp[r * n + c];
            }
            pass(&col_in, &mut col_out, &mut even, &mut odd);
            for r in 0..n {
                out[r * n + c] = col_out[r];
            }
        }
        out
    }

    /// Forward 2-D transform of a row-major `n x n` block.
    pub fn forward(&self, block: &[f64]) -> Vec<f64> {
        self.separable(block, false)
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        self.separable(coeffs, true)
    }
}

pub fn dct2(block: &[f64], n: usize) -> Vec<f64> {
    Dct::new(n).forward(block)
}

pub fn idct2(coeffs: &[f64], n: usize) -> Vec<f64> {
    Dct::new(n).inverse(coeffs)
}
