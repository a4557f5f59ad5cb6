//! binary16 weight quantisation.

use half::f16;

/// Rounds each weight to the nearest IEEE-754 binary16 value (ties to even).
///
/// Magnitudes beyond the largest finite half saturate to `±65504`; NaN maps to
/// zero, so codes never decode to a non-finite value.
pub fn quantize_weights(w: &[f64]) -> Vec<u16> {
    w.iter().map(|&v| quantize(v)).collect()
}

pub fn quantize(v: f64) -> u16 {
    if v.is_nan() {
        return f16::ZERO.to_bits();
    }
    let h = f16::from_f64(v);
    if h.is_infinite() {
        return if v > 0.0 { f16::MAX } else { f16::MIN }.to_bits();
    }
    h.to_bits()
}

/// Exact widening of binary16 codes.
pub fn dequantize_weights(codes: &[u16]) -> Vec<f64> {
    codes.iter().map(|&c| f16::from_bits(c).to_f64()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(dequantize_weights(&quantize_weights(&[1.0])), vec![1.0]);
        assert_eq!(dequantize_weights(&quantize_weights(&[0.1])), vec![0.0999755859375]);
        assert_eq!(quantize(1e9), 0x7BFF);
        assert_eq!(quantize(-1e9), 0xFBFF);
        assert_eq!(quantize(f64::INFINITY), 0x7BFF);
        assert_eq!(quantize(f64::NAN), 0);
    }

    #[test]
    fn lattice_is_fixed() {
        for bits in 0..=u16::MAX {
            let h = f16::from_bits(bits);
            if h.is_finite() {
                let v = h.to_f64();
                let back = dequantize_weights(&[quantize(v)])[0];
                assert_eq!(back, v, "bits {bits:#06x}");
            }
        }
    }
}
