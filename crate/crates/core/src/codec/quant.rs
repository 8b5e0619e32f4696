//! Dead-zone scalar quantizer with uniform reconstruction.

pub const DEADZONE_INTRA: f64 = 1.0 / 3.0;
pub const DEADZONE_INTER: f64 = 1.0 / 6.0;

/// `sign(c) * floor(|c| / qstep + deadzone)` per coefficient.
pub fn quantize(coeffs: &[f64], qstep: f64, deadzone: f64) -> Vec<i32> {
    debug_assert!(qstep > 0.0);
    debug_assert!((0.0..=0.5).contains(&deadzone));
    coeffs
        .iter()
        .map(|&c| {
            let mag = (c.abs() / qstep + deadzone).floor() as i32;
            if c < 0.0 {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

pub fn dequantize(levels: &[i32], qstep: f64) -> Vec<f64> {
    levels.iter().map(|&l| f64::from(l) * qstep).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_examples() {
        assert_eq!(quantize(&[7.9], 8.0, DEADZONE_INTRA), vec![1]);
        assert_eq!(quantize(&[5.0], 8.0, DEADZONE_INTRA), vec![0]);
        assert_eq!(quantize(&[-20.0], 8.0, DEADZONE_INTER), vec![-2]);
        assert_eq!(quantize(&[-20.0], 8.0, DEADZONE_INTRA), vec![-2]);
        assert_eq!(quantize(&[5.5], 8.0, DEADZONE_INTRA), vec![1]);
        assert_eq!(dequantize(&[-2, 0, 3], 8.0), vec![-16.0, 0.0, 24.0]);
    }

    proptest! {
        #[test]
        fn unit_step_half_deadzone_rounds(c in -1000.0f64..1000.0) {
            let l = quantize(&[c], 1.0, 0.5)[0];
            // Round half away from zero.
            prop_assert_eq!(l as f64, c.round());
        }

        #[test]
        fn coarser_step_never_grows_levels(c in -5000.0f64..5000.0, q in 0.5f64..100.0) {
            let a = quantize(&[c], q, DEADZONE_INTRA)[0].abs();
            let b = quantize(&[c], 2.0 * q, DEADZONE_INTRA)[0].abs();
            prop_assert!(b <= a);
        }
    }
}
