use crate::netsim::{HopStamp, NodeId, SimTime};

use super::{LocalClock, TimeSyncError};

/// One two-way exchange. `t1`/`t4` are master timestamps of Sync departure
/// and Delay_Req arrival; `t2`/`t3` are slave timestamps of Sync arrival and
/// Delay_Req departure. Corrections hold accumulated switch residence per
/// direction and are removed before the offset is computed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SyncSession {
    pub master: NodeId,
    pub slave: NodeId,
    pub t1: Option<SimTime>,
    pub t2: Option<SimTime>,
    pub t3: Option<SimTime>,
    pub t4: Option<SimTime>,
    pub correction_fwd: SimTime,
    pub correction_rev: SimTime,
    pub interval: SimTime,
}

impl SyncSession {
    pub fn new(master: NodeId, slave: NodeId, interval: SimTime) -> Self {
        SyncSession { master, slave, interval, ..Default::default() }
    }
}

/// Estimates in picoseconds; halves of odd sums are kept exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeEstimate {
    /// Slave minus master.
    pub offset_ps: f64,
    pub delay_ps: f64,
}

pub fn two_way_exchange(session: &SyncSession) -> Result<ExchangeEstimate, TimeSyncError> {
    let get = |t: Option<SimTime>, k: u8| {
        t.ok_or(TimeSyncError::IncompleteSession { master: session.master, slave: session.slave, missing: k })
    };
    let (t1, t2, t3, t4) = (get(session.t1, 1)?, get(session.t2, 2)?, get(session.t3, 3)?, get(session.t4, 4)?);
    let ms = (t2 - t1 - session.correction_fwd).as_ps();
    let sm = (t4 - t3 - session.correction_rev).as_ps();
    Ok(ExchangeEstimate {
        offset_ps: (ms - sm) as f64 / 2.0,
        delay_ps: (ms + sm) as f64 / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathDirection {
    MasterToSlave,
    SlaveToMaster,
}

/// Add the residence of every transparent hop to the session's correction
/// field for `direction`. Returns the amount added.
pub fn transparent_correction(
    session: &mut SyncSession,
    direction: PathDirection,
    hops: &[HopStamp],
) -> Result<SimTime, TimeSyncError> {
    let mut added = SimTime::ZERO;
    for hop in hops {
        if !hop.transparent || hop.egress < hop.ingress {
            return Err(TimeSyncError::MissingTimestamps(hop.node));
        }
        added += hop.residence();
    }
    match direction {
        PathDirection::MasterToSlave => session.correction_fwd += added,
        PathDirection::SlaveToMaster => session.correction_rev += added,
    }
    Ok(added)
}

/// A node that is a slave upstream and a master downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryClock {
    pub node: NodeId,
    pub clock: LocalClock,
    pub synchronized: bool,
}

/// Open a downstream session mastered by the boundary clock.
pub fn boundary_relay(
    boundary: &BoundaryClock,
    downstream: NodeId,
    interval: SimTime,
) -> Result<SyncSession, TimeSyncError> {
    if !boundary.synchronized {
        return Err(TimeSyncError::NotSynchronized(boundary.node));
    }
    Ok(SyncSession::new(boundary.node, downstream, interval))
}

/// Master departure and slave arrival timestamps of one Sync message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SyncReceipt {
    pub t1: SimTime,
    pub t2: SimTime,
}

/// Rate error of the slave relative to the master from two Sync receipts.
pub fn estimate_skew(first: SyncReceipt, second: SyncReceipt) -> Result<f64, TimeSyncError> {
    let master = (second.t1 - first.t1).as_ps();
    if master == 0 {
        return Err(TimeSyncError::ZeroInterval);
    }
    let slave = (second.t2 - first.t2).as_ps();
    Ok((slave - master) as f64 / master as f64)
}

/// Remove the half-asymmetry bias: forward minus reverse delay `a` shifts
/// the offset estimate by `a / 2`.
pub fn asymmetry_correct(estimate: ExchangeEstimate, known_asymmetry: SimTime) -> ExchangeEstimate {
    let half = known_asymmetry.as_ps() as f64 / 2.0;
    ExchangeEstimate { offset_ps: estimate.offset_ps - half, delay_ps: estimate.delay_ps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn session(t: [i64; 4]) -> SyncSession {
        SyncSession {
            t1: Some(SimTime::from_us(t[0])),
            t2: Some(SimTime::from_us(t[1])),
            t3: Some(SimTime::from_us(t[2])),
            t4: Some(SimTime::from_us(t[3])),
            ..SyncSession::new(NodeId(0), NodeId(1), SimTime::from_ms(125))
        }
    }

    /// Timestamps for true offset `theta` (slave minus master) and the
    /// given one-way delays, with the slave replying `turn` later.
    fn exchange(theta: i64, fwd: i64, rev: i64, turn: i64) -> SyncSession {
        let t1 = 1_000_000;
        let t2 = t1 + fwd + theta;
        let t3 = t2 + turn;
        let t4 = t3 - theta + rev;
        SyncSession {
            t1: Some(SimTime::from_ps(t1)),
            t2: Some(SimTime::from_ps(t2)),
            t3: Some(SimTime::from_ps(t3)),
            t4: Some(SimTime::from_ps(t4)),
            ..SyncSession::new(NodeId(0), NodeId(1), SimTime::from_ms(125))
        }
    }

    #[test]
    fn textbook_exchange() {
        let est = two_way_exchange(&session([100, 135, 200, 225])).unwrap();
        assert_eq!(est.offset_ps, 5e6);
        assert_eq!(est.delay_ps, 30e6);
    }

    #[test]
    fn asymmetry_biases_by_half() {
        let est = two_way_exchange(&exchange(0, 12_000_000, 8_000_000, 500)).unwrap();
        assert_eq!(est.offset_ps, 2e6);
        assert_eq!(asymmetry_correct(est, SimTime::from_us(4)).offset_ps, 0.0);
        assert_eq!(asymmetry_correct(est, SimTime::ZERO), est);
        // mis-declared asymmetry leaves (a - a_hat) / 2
        assert_eq!(asymmetry_correct(est, SimTime::from_us(3)).offset_ps, 0.5e6);
    }

    #[test]
    fn incomplete_session() {
        let mut s = session([1, 2, 3, 4]);
        s.t3 = None;
        assert_eq!(
            two_way_exchange(&s),
            Err(TimeSyncError::IncompleteSession { master: NodeId(0), slave: NodeId(1), missing: 3 })
        );
    }

    #[test]
    fn single_switch_correction() {
        let mut s = SyncSession::default();
        let hop = HopStamp { node: NodeId(2), ingress: SimTime::from_us(10), egress: SimTime::from_us(14), transparent: true };
        let added = transparent_correction(&mut s, PathDirection::MasterToSlave, &[hop]).unwrap();
        assert_eq!(added, SimTime::from_us(4));
        assert_eq!(s.correction_fwd, SimTime::from_us(4));
        assert_eq!(s.correction_rev, SimTime::ZERO);
        let opaque = HopStamp { transparent: false, ..hop };
        assert_eq!(
            transparent_correction(&mut s, PathDirection::SlaveToMaster, &[opaque]),
            Err(TimeSyncError::MissingTimestamps(NodeId(2)))
        );
    }

    #[test]
    fn residence_cancels_with_correction() {
        // 5 us residence each way on symmetric 1 us links
        let theta = 3_333_333;
        let mut s = exchange(theta, 1_000_000 + 5_000_000, 1_000_000 + 5_000_000, 10);
        let hop = |t0: i64| HopStamp { node: NodeId(1), ingress: SimTime::from_ps(t0), egress: SimTime::from_ps(t0 + 5_000_000), transparent: true };
        transparent_correction(&mut s, PathDirection::MasterToSlave, &[hop(0)]).unwrap();
        transparent_correction(&mut s, PathDirection::SlaveToMaster, &[hop(0)]).unwrap();
        let est = two_way_exchange(&s).unwrap();
        assert_eq!(est.offset_ps, theta as f64);
        assert_eq!(est.delay_ps, 1e6);
    }

    #[test]
    fn boundary_requires_upstream_sync() {
        let mut bc = BoundaryClock { node: NodeId(4), clock: LocalClock::ideal(SimTime::ZERO), synchronized: false };
        assert_eq!(
            boundary_relay(&bc, NodeId(9), SimTime::from_ms(125)),
            Err(TimeSyncError::NotSynchronized(NodeId(4)))
        );
        bc.synchronized = true;
        let s = boundary_relay(&bc, NodeId(9), SimTime::from_ms(125)).unwrap();
        assert_eq!((s.master, s.slave), (NodeId(4), NodeId(9)));
    }

    #[test]
    fn skew_from_receipts() {
        let a = SyncReceipt { t1: SimTime::ZERO, t2: SimTime::from_ns(700) };
        let b = SyncReceipt { t1: SimTime::from_secs(1), t2: SimTime::from_secs(1) + SimTime::from_ns(700) + SimTime::from_us(1) };
        assert_eq!(estimate_skew(a, b).unwrap(), 1e-6);
        let c = SyncReceipt { t1: SimTime::from_secs(1), t2: SimTime::from_secs(1) + SimTime::from_ns(700) };
        assert_eq!(estimate_skew(a, c).unwrap(), 0.0);
        assert_eq!(estimate_skew(a, a), Err(TimeSyncError::ZeroInterval));
    }

    #[test]
    fn skew_estimator_noise_matches_propagation() {
        use crate::rng::{normal, stream};
        let mut r = stream(5, 5);
        let jitter = 8_000.0;
        let interval = SimTime::from_ms(125);
        let estimates: Vec<f64> = (0..10_000)
            .map(|_| {
                let a = SyncReceipt { t1: SimTime::ZERO, t2: SimTime::from_ps_f64(normal(&mut r, 0.0, jitter)) };
                let b = SyncReceipt { t1: interval, t2: interval + SimTime::from_ps_f64(normal(&mut r, 0.0, jitter)) };
                estimate_skew(a, b).unwrap()
            })
            .collect();
        let s = crate::stats::std_dev(&estimates).unwrap();
        let expected = 2f64.sqrt() * 8e-9 / 0.125;
        assert!((expected - 9.05e-8).abs() < 0.01e-8);
        assert!((s / expected - 1.0).abs() < 0.10, "std {s:e}");
    }

    proptest! {
        #[test]
        fn symmetric_exchange_is_exact(theta in -1_000_000_000i64..1_000_000_000, d in 0i64..50_000_000, turn in 0i64..1_000_000) {
            let est = two_way_exchange(&exchange(theta, d, d, turn)).unwrap();
            prop_assert_eq!(est.offset_ps, theta as f64);
            prop_assert_eq!(est.delay_ps, d as f64);
        }

        #[test]
        fn asymmetry_error_is_exactly_half(theta in -1_000_000_000i64..1_000_000_000, d in 0i64..50_000_000, asym in -10_000_000i64..10_000_000) {
            let fwd = d + asym.max(0) + 10_000_000;
            let rev = fwd - asym;
            let est = two_way_exchange(&exchange(theta, fwd, rev, 0)).unwrap();
            prop_assert_eq!(est.offset_ps - theta as f64, asym as f64 / 2.0);
            prop_assert_eq!(asymmetry_correct(est, SimTime::from_ps(asym)).offset_ps, theta as f64);
        }
    }
}
