use rand::Rng;

use crate::rng::std_normal;

use super::{ComplexGain, PhyError};

const UNIT_TOL: f64 = 1e-9;

/// Per-tile uplink estimates `r_i h_i t_dev + n_i` with `n_i ~ CN(0, sigma^2)`.
pub fn uplink_pilot_estimate<R: Rng + ?Sized>(
    device_tx: ComplexGain,
    tile_rx: &[ComplexGain],
    channels: &[ComplexGain],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<Vec<ComplexGain>, PhyError> {
    if device_tx.norm() == 0.0 {
        return Err(PhyError::ZeroPilot);
    }
    if tile_rx.len() != channels.len() {
        return Err(PhyError::DimensionMismatch { weights: tile_rx.len(), channels: channels.len(), phases: channels.len() });
    }
    if !(noise_sigma >= 0.0) {
        return Err(PhyError::InvalidInput { name: "noise_sigma", value: noise_sigma });
    }
    let s = noise_sigma / std::f64::consts::SQRT_2;
    Ok(tile_rx
        .iter()
        .zip(channels)
        .map(|(r, h)| {
            let noise = ComplexGain::new(s * std_normal(rng), s * std_normal(rng));
            r * h * device_tx + noise
        })
        .collect())
}

/// Unit-magnitude matched-filter weights for known effective channels.
pub fn conjugate_weights(channels: &[ComplexGain]) -> Vec<ComplexGain> {
    channels.iter().map(|h| unit(h.conj())).collect()
}

/// Downlink weights from uplink estimates and calibration coefficients:
/// `c_i g_i` is proportional to the effective downlink channel `t_i h_i`.
pub fn calibrated_weights(
    estimates: &[ComplexGain],
    calibration: &[ComplexGain],
) -> Result<Vec<ComplexGain>, PhyError> {
    if estimates.len() != calibration.len() {
        return Err(PhyError::DimensionMismatch {
            weights: calibration.len(),
            channels: estimates.len(),
            phases: estimates.len(),
        });
    }
    Ok(estimates.iter().zip(calibration).map(|(g, c)| unit((c * g).conj())).collect())
}

fn unit(z: ComplexGain) -> ComplexGain {
    let m = z.norm();
    if m == 0.0 {
        ComplexGain::new(1.0, 0.0)
    } else {
        z / m
    }
}

/// Power at the device relative to a single tile of mean amplitude, so
/// perfect alignment of `N` tiles gives `N^2`.
pub fn coherent_receive_power(
    weights: &[ComplexGain],
    channels: &[ComplexGain],
    phase_errors: &[f64],
) -> Result<f64, PhyError> {
    let sum = combine(weights, channels, phase_errors)?;
    let mean_amp = channels.iter().map(|h| h.norm()).sum::<f64>() / channels.len() as f64;
    if mean_amp == 0.0 {
        return Err(PhyError::InvalidInput { name: "mean channel amplitude", value: 0.0 });
    }
    Ok(sum.norm_sqr() / (mean_amp * mean_amp))
}

/// Absolute received power in watts when every tile radiates `tx_power_w`.
pub fn received_power_w(
    weights: &[ComplexGain],
    channels: &[ComplexGain],
    phase_errors: &[f64],
    tx_power_w: f64,
) -> Result<f64, PhyError> {
    Ok(tx_power_w * combine(weights, channels, phase_errors)?.norm_sqr())
}

fn combine(weights: &[ComplexGain], channels: &[ComplexGain], phase_errors: &[f64]) -> Result<ComplexGain, PhyError> {
    if weights.len() != channels.len() || weights.len() != phase_errors.len() || weights.is_empty() {
        return Err(PhyError::DimensionMismatch {
            weights: weights.len(),
            channels: channels.len(),
            phases: phase_errors.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| (w.norm() - 1.0).abs() > UNIT_TOL) {
        return Err(PhyError::UnnormalizedWeight(i));
    }
    Ok(weights
        .iter()
        .zip(channels)
        .zip(phase_errors)
        .map(|((w, h), phi)| w * h * ComplexGain::from_polar(1.0, *phi))
        .sum())
}

/// `E|sum exp(j phi_i)|^2` for i.i.d. `phi_i ~ N(0, sigma^2)`.
pub fn expected_phase_noise_gain(n: usize, sigma: f64) -> f64 {
    let n = n as f64;
    n + n * (n - 1.0) * (-sigma * sigma).exp()
}
