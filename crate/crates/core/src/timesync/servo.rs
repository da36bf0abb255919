use serde::{Deserialize, Serialize};

use super::{LocalClock, TimeSyncError};

/// PI gains per sync interval. These are modelling defaults, not measured
/// values: they give a stable loop that settles within ~20 intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoConfig {
    pub kp: f64,
    pub ki: f64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        ServoConfig { kp: 0.7, ki: 0.3 }
    }
}

/// Proportional-integral servo. Each update steps the clock by
/// `kp * e + ki * sum(e)`; the integral term keeps removing a constant
/// per-interval drift after the offset has settled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PiServo {
    pub config: ServoConfig,
    integral_ps: f64,
    updates: u64,
}

impl PiServo {
    pub fn new(config: ServoConfig) -> Self {
        PiServo { config, integral_ps: 0.0, updates: 0 }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Correction in picoseconds to subtract from the clock.
    pub fn correction(&mut self, offset_estimate_ps: f64) -> Result<f64, TimeSyncError> {
        if !offset_estimate_ps.is_finite() {
            return Err(TimeSyncError::NonFiniteEstimate);
        }
        self.integral_ps += offset_estimate_ps;
        self.updates += 1;
        Ok(self.config.kp * offset_estimate_ps + self.config.ki * self.integral_ps)
    }
}

/// Feed one offset estimate through the servo and step the clock.
pub fn servo_step(clock: &mut LocalClock, servo: &mut PiServo, offset_estimate_ps: f64) -> Result<f64, TimeSyncError> {
    let c = servo.correction(offset_estimate_ps)?;
    clock.step_offset(c);
    Ok(c)
}
