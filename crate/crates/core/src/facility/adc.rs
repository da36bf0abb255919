use serde::{Deserialize, Serialize};

/// Central DAQ converter model: an ideal mid-rise uniform quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcSpec {
    pub sample_rate_hz: f64,
    pub bits: u32,
    /// Half of the symmetric input span: inputs cover `[-full_scale_v, full_scale_v]`.
    pub full_scale_v: f64,
    pub channels: u32,
}

impl Default for AdcSpec {
    fn default() -> Self {
        AdcSpec {
            sample_rate_hz: 1.25e6,
            bits: 16,
            full_scale_v: 1.0,
            channels: 192,
        }
    }
}

impl AdcSpec {
    pub fn lsb_v(&self) -> f64 {
        2.0 * self.full_scale_v / (1u64 << self.bits) as f64
    }

    pub fn min_code(&self) -> i64 {
        -(1i64 << (self.bits - 1))
    }

    pub fn max_code(&self) -> i64 {
        (1i64 << (self.bits - 1)) - 1
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdcCapture {
    pub codes: Vec<i64>,
    /// Per sample: input fell outside the full-scale span and was clipped.
    pub clipped: Vec<bool>,
}

impl AdcCapture {
    pub fn clip_count(&self) -> usize {
        self.clipped.iter().filter(|&&c| c).count()
    }
}

/// Quantize voltages to signed output codes. Code `k` covers
/// `[k * lsb, (k + 1) * lsb)`, so 0 V lands on the mid-scale code 0.
pub fn quantize_adc(samples: &[f64], adc: &AdcSpec) -> AdcCapture {
    let lsb = adc.lsb_v();
    let (lo, hi) = (adc.min_code(), adc.max_code());
    let mut capture = AdcCapture {
        codes: Vec::with_capacity(samples.len()),
        clipped: Vec::with_capacity(samples.len()),
    };
    for &x in samples {
        let raw = (x / lsb).floor();
        let clipped = !(x >= -adc.full_scale_v && x <= adc.full_scale_v);
        // NaN maps to mid-scale and is flagged as clipped
        let code = if raw.is_nan() { 0 } else { (raw.max(lo as f64).min(hi as f64)) as i64 };
        capture.codes.push(code);
        capture.clipped.push(clipped);
    }
    capture
}

/// Mid-point reconstruction of each code.
pub fn dequantize_adc(codes: &[i64], adc: &AdcSpec) -> Vec<f64> {
    let lsb = adc.lsb_v();
    codes.iter().map(|&c| (c as f64 + 0.5) * lsb).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sixteen_bit_lsb() {
        let adc = AdcSpec::default();
        assert_eq!(adc.lsb_v(), 2.0 / 65536.0);
        assert!((adc.lsb_v() - 30.52e-6).abs() < 0.01e-6);
        assert!((adc.lsb_v() / 2.0 - 15.26e-6).abs() < 0.01e-6);
    }

    #[test]
    fn zero_is_mid_scale() {
        let adc = AdcSpec::default();
        let cap = quantize_adc(&[0.0], &adc);
        assert_eq!(cap.codes, vec![0]);
        let back = dequantize_adc(&cap.codes, &adc);
        assert!(back[0].abs() <= adc.lsb_v() / 2.0);
    }

    #[test]
    fn out_of_range_clips_and_flags() {
        let adc = AdcSpec::default();
        let cap = quantize_adc(&[1.5, -3.0, 0.5, 1.0, f64::NAN], &adc);
        assert_eq!(cap.codes[0], adc.max_code());
        assert_eq!(cap.codes[1], adc.min_code());
        assert_eq!(cap.clipped, vec![true, true, false, false, true]);
        assert_eq!(cap.clip_count(), 3);
        // the positive full-scale edge saturates to the top code without clipping
        assert_eq!(cap.codes[3], adc.max_code());
    }

    #[test]
    fn sine_quantization_noise_matches_uniform_model() {
        let adc = AdcSpec::default();
        let n = 100_000;
        let f = 45e3;
        assert!(adc.sample_rate_hz / f >= 27.0);
        let samples: Vec<f64> = (0..n)
            .map(|i| 0.9 * (2.0 * std::f64::consts::PI * f * i as f64 / adc.sample_rate_hz + 0.3).sin())
            .collect();
        let cap = quantize_adc(&samples, &adc);
        assert_eq!(cap.clip_count(), 0);
        let back = dequantize_adc(&cap.codes, &adc);
        let mse: f64 = samples.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        let expected = adc.lsb_v() / 12f64.sqrt();
        let rel = (mse.sqrt() - expected).abs() / expected;
        assert!(rel < 0.05, "rms error off by {:.2} %", rel * 100.0);
    }

    proptest! {
        #[test]
        fn in_range_error_within_half_lsb(x in -1.0f64..1.0) {
            let adc = AdcSpec::default();
            let cap = quantize_adc(&[x], &adc);
            prop_assert!(!cap.clipped[0]);
            let back = dequantize_adc(&cap.codes, &adc)[0];
            prop_assert!((back - x).abs() <= adc.lsb_v() / 2.0 + 1e-15);
        }

        #[test]
        fn codes_monotone(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let adc = AdcSpec { bits: 12, ..AdcSpec::default() };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let cap = quantize_adc(&[lo, hi], &adc);
            prop_assert!(cap.codes[0] <= cap.codes[1]);
        }
    }
}
