use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::netsim::SimTime;
use crate::rng;

use super::TimeSyncError;

const ONE_SECOND: SimTime = SimTime::from_secs(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncMode {
    /// Two-way message exchange with a PI servo.
    MessageSync,
    /// Message exchange plus frequency locking and known-asymmetry removal.
    MessageSyncSyntonized,
    /// 10 MHz / PPS cabling: every clock pinned to truth at each PPS edge.
    Dedicated,
    FreeRunning,
}

/// Affine clock: `local = true + offset + skew * (true - epoch) + noise`.
///
/// `offset` is the clock error at `epoch`. Changing the skew rebases the
/// epoch so the reading stays continuous. The skew performs a random walk
/// with one step per elapsed true second.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalClock {
    pub offset: SimTime,
    pub skew: f64,
    /// Skew random-walk standard deviation per sqrt(second).
    pub drift_rw_sigma: f64,
    pub ts_jitter_sigma: SimTime,
    pub epoch: SimTime,
    next_walk: SimTime,
}

impl LocalClock {
    pub fn new(
        offset: SimTime,
        skew: f64,
        drift_rw_sigma: f64,
        ts_jitter_sigma: SimTime,
        epoch: SimTime,
    ) -> Result<Self, TimeSyncError> {
        if !(skew.abs() < 1e-3) {
            return Err(TimeSyncError::SkewOutOfRange(skew));
        }
        Ok(LocalClock { offset, skew, drift_rw_sigma, ts_jitter_sigma, epoch, next_walk: epoch + ONE_SECOND })
    }

    /// Offset-free, skew-free clock with the given timestamp noise.
    pub fn ideal(ts_jitter_sigma: SimTime) -> Self {
        LocalClock::new(SimTime::ZERO, 0.0, 0.0, ts_jitter_sigma, SimTime::ZERO).expect("zero skew is valid")
    }

    /// Noise-free error `local - true` at true time `t`.
    pub fn error_at(&self, t: SimTime) -> SimTime {
        self.offset + SimTime::from_ps_f64(self.skew * (t - self.epoch).as_ps() as f64)
    }

    /// Noise-free local reading at true time `t`.
    pub fn local_at(&self, t: SimTime) -> SimTime {
        t + self.error_at(t)
    }

    /// Apply skew random-walk steps for every whole second up to `t`.
    pub fn advance<R: Rng + ?Sized>(&mut self, t: SimTime, rng: &mut R) {
        while self.next_walk <= t {
            let edge = self.next_walk;
            let step = rng::normal(rng, 0.0, self.drift_rw_sigma);
            self.rebase(edge);
            self.skew += step;
            self.next_walk = edge + ONE_SECOND;
        }
    }

    /// Timestamp taken at true time `t`, including timestamping jitter.
    pub fn read<R: Rng + ?Sized>(&mut self, t: SimTime, rng: &mut R) -> SimTime {
        self.advance(t, rng);
        let noise = rng::normal(rng, 0.0, self.ts_jitter_sigma.as_ps() as f64);
        self.local_at(t) + SimTime::from_ps_f64(noise)
    }

    /// Move the epoch to `t` without changing any reading.
    pub fn rebase(&mut self, t: SimTime) {
        self.offset = self.error_at(t);
        self.epoch = t;
    }

    /// Step the clock back by `delta_ps` (a positive estimate means the
    /// clock runs ahead of its master).
    pub fn step_offset(&mut self, delta_ps: f64) {
        self.offset -= SimTime::from_ps_f64(delta_ps);
    }

    /// Remove an estimated rate error starting at true time `t`.
    pub fn adjust_skew(&mut self, t: SimTime, skew_estimate: f64) -> Result<(), TimeSyncError> {
        let skew = self.skew - skew_estimate;
        if !(skew.abs() < 1e-3) {
            return Err(TimeSyncError::SkewOutOfRange(skew));
        }
        self.rebase(t);
        self.skew = skew;
        Ok(())
    }
}

/// Pin `clock` to truth at PPS edge `t`, leaving a residual drawn from
/// `N(0, error_sigma)`. Only the dedicated mode corrects; every other mode
/// leaves the clock untouched. Returns whether a correction was applied.
pub fn dedicated_reference<R: Rng + ?Sized>(
    clock: &mut LocalClock,
    mode: SyncMode,
    error_sigma: SimTime,
    t: SimTime,
    rng: &mut R,
) -> bool {
    if mode != SyncMode::Dedicated {
        return false;
    }
    clock.advance(t, rng);
    let residual = rng::normal(rng, 0.0, error_sigma.as_ps() as f64);
    clock.epoch = t;
    clock.skew = 0.0;
    clock.offset = SimTime::from_ps_f64(residual);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats;

    #[test]
    fn identity_clock() {
        let mut c = LocalClock::ideal(SimTime::ZERO);
        let mut r = stream(0, 0);
        for t in [0, 17, 1_000_000_007] {
            assert_eq!(c.read(SimTime::from_ps(t), &mut r), SimTime::from_ps(t));
        }
    }

    #[test]
    fn one_ppm_leads_by_one_microsecond_per_second() {
        let mut c = LocalClock::new(SimTime::ZERO, 1e-6, 0.0, SimTime::ZERO, SimTime::ZERO).unwrap();
        let mut r = stream(0, 0);
        let t = SimTime::from_secs(1);
        assert_eq!(c.read(t, &mut r) - t, SimTime::from_us(1));
    }

    #[test]
    fn skew_bound_enforced() {
        assert!(matches!(
            LocalClock::new(SimTime::ZERO, 2e-3, 0.0, SimTime::ZERO, SimTime::ZERO),
            Err(TimeSyncError::SkewOutOfRange(_))
        ));
    }

    #[test]
    fn rebase_and_skew_adjust_are_continuous() {
        let mut c = LocalClock::new(SimTime::from_ns(40), 3e-6, 0.0, SimTime::ZERO, SimTime::ZERO).unwrap();
        let t = SimTime::from_ms(700);
        let before = c.local_at(t);
        c.adjust_skew(t, 1e-6).unwrap();
        assert_eq!(c.local_at(t), before);
        assert!((c.skew - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn drift_random_walk_variance() {
        // 1e4 one-second steps of sigma 1e-9 give skew variance 1e-14
        let n = 2_000;
        let t = SimTime::from_secs(10_000);
        let skews: Vec<f64> = (0..n)
            .map(|i| {
                let mut c = LocalClock::new(SimTime::ZERO, 0.0, 1e-9, SimTime::ZERO, SimTime::ZERO).unwrap();
                let mut r = stream(42, i);
                c.advance(t, &mut r);
                c.skew
            })
            .collect();
        let var = skews.iter().map(|s| s * s).sum::<f64>() / n as f64;
        assert!((var / 1e-14 - 1.0).abs() < 0.10, "variance {var:e}");
    }

    #[test]
    fn reading_increases_with_true_time() {
        let mut c = LocalClock::new(SimTime::from_us(-3), -5e-4, 1e-7, SimTime::ZERO, SimTime::ZERO).unwrap();
        let mut r = stream(1, 1);
        let mut last = c.read(SimTime::ZERO, &mut r);
        for k in 1..5_000 {
            let now = c.read(SimTime::from_ms(k), &mut r);
            assert!(now > last);
            last = now;
        }
    }

    #[test]
    fn dedicated_pins_with_configured_residual() {
        let mut r = stream(9, 9);
        let sigma = SimTime::from_ns(1);
        let mut residuals = Vec::new();
        let mut c = LocalClock::new(SimTime::from_us(50), 4e-6, 0.0, SimTime::ZERO, SimTime::ZERO).unwrap();
        for k in 1..=5_000 {
            let t = SimTime::from_secs(k);
            assert!(dedicated_reference(&mut c, SyncMode::Dedicated, sigma, t, &mut r));
            residuals.push(c.error_at(t).as_ps() as f64);
        }
        let s = stats::std_dev(&residuals).unwrap();
        assert!((s / 1_000.0 - 1.0).abs() < 0.10, "std {s} ps");
    }

    #[test]
    fn dedicated_with_zero_sigma_is_perfect() {
        let mut r = stream(0, 0);
        let mut c = LocalClock::new(SimTime::from_us(50), 4e-6, 0.0, SimTime::ZERO, SimTime::ZERO).unwrap();
        dedicated_reference(&mut c, SyncMode::Dedicated, SimTime::ZERO, SimTime::from_secs(1), &mut r);
        assert_eq!(c.error_at(SimTime::from_secs(7)), SimTime::ZERO);
    }

    #[test]
    fn free_running_is_never_corrected() {
        let mut r = stream(0, 0);
        let mut c = LocalClock::new(SimTime::from_us(50), 4e-6, 0.0, SimTime::ZERO, SimTime::ZERO).unwrap();
        let before = c.clone();
        assert!(!dedicated_reference(&mut c, SyncMode::FreeRunning, SimTime::ZERO, SimTime::from_secs(1), &mut r));
        assert_eq!(c, before);
    }
}
