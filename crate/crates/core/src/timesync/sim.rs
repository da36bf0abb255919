//! Event-driven synchronization run over an emulated topology.
//!
//! Every interval each slave measures its true clock error, then runs one
//! Sync / Delay_Req / Delay_Resp exchange with its master through the
//! network. With transparent switches all tiles are slaves of the
//! grandmaster at the root; with boundary switches every node is a slave
//! of its parent. The dedicated tier replaces messaging with a PPS edge
//! every second.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::netsim::{
    build_topology, Engine, LinkTemplate, Network, NodeId, NodeKind, SimTime, TopologyKind,
};
use crate::rng::{self, SimRng};
use crate::stats;

use super::{
    asymmetry_correct, boundary_relay, dedicated_reference, estimate_skew, servo_step,
    transparent_correction, two_way_exchange, BoundaryClock, LocalClock, PathDirection, PiServo,
    ServoConfig, SyncMode, SyncReceipt, SyncSession, TimeSyncError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchClock {
    /// Switches add residence to the correction field.
    Transparent,
    /// Switches terminate sync and re-serve it downstream.
    Boundary,
    /// Plain switches; residence is not reported.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncSimConfig {
    pub topology: TopologyKind,
    pub tiles: u32,
    pub link: LinkTemplate,
    pub switch_clock: SwitchClock,
    pub mode: SyncMode,
    pub interval: SimTime,
    pub intervals: u32,
    /// Samples from earlier intervals are excluded from converged statistics.
    pub settle_intervals: u32,
    pub ts_jitter: SimTime,
    /// Declared forward-minus-reverse asymmetry per link (syntonized mode).
    pub known_asymmetry: SimTime,
    pub dedicated_error: SimTime,
    pub servo: ServoConfig,
    /// Initial clock offsets are uniform in `[-spread, spread]`.
    pub initial_offset_spread: SimTime,
    pub initial_skew_spread: f64,
    pub drift_rw_sigma: f64,
}

impl Default for SyncSimConfig {
    fn default() -> Self {
        SyncSimConfig {
            topology: TopologyKind::Tree { fanout: 48 },
            tiles: 140,
            link: LinkTemplate::default(),
            switch_clock: SwitchClock::Transparent,
            mode: SyncMode::MessageSync,
            interval: SimTime::from_ms(125),
            intervals: 200,
            settle_intervals: 50,
            ts_jitter: SimTime::from_ns(8),
            known_asymmetry: SimTime::ZERO,
            dedicated_error: SimTime::ZERO,
            servo: ServoConfig::default(),
            initial_offset_spread: SimTime::from_us(10),
            initial_skew_spread: 5e-6,
            drift_rw_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffsetSample {
    pub interval: u32,
    pub time: SimTime,
    /// Local minus true time.
    pub error: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncSimResult {
    pub samples: BTreeMap<NodeId, Vec<OffsetSample>>,
    /// Errors of switches that serve time downstream (boundary mode only).
    pub relay_samples: BTreeMap<NodeId, Vec<OffsetSample>>,
    /// Master of every slave clock.
    pub masters: BTreeMap<NodeId, NodeId>,
    pub settle_intervals: u32,
    pub trace_hash: String,
    pub events: u64,
    pub end_time: SimTime,
}

impl SyncSimResult {
    pub fn tiles(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.samples.keys().copied()
    }

    /// Converged signed errors of one node, picoseconds.
    pub fn converged(&self, node: NodeId) -> Vec<f64> {
        self.samples
            .get(&node)
            .map(|s| {
                s.iter()
                    .filter(|x| x.interval >= self.settle_intervals)
                    .map(|x| x.error.as_ps() as f64)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Converged signed errors of all tiles, picoseconds.
    pub fn all_converged(&self) -> Vec<f64> {
        self.tiles().flat_map(|n| self.converged(n)).collect()
    }

    /// P99 of converged |error| over all tiles, picoseconds.
    pub fn p99_abs_ps(&self) -> f64 {
        let abs: Vec<f64> = self.all_converged().iter().map(|e| e.abs()).collect();
        stats::percentile(&abs, 99.0).unwrap_or(0.0)
    }

    /// Converged error of `node` relative to its own master, picoseconds.
    /// Along a boundary chain these terms sum to the end-to-end error.
    pub fn hop_converged(&self, node: NodeId) -> Vec<f64> {
        let own = self.samples.get(&node).or_else(|| self.relay_samples.get(&node));
        let Some(own) = own else { return Vec::new() };
        let master = self.masters.get(&node).and_then(|m| self.relay_samples.get(m));
        own.iter()
            .enumerate()
            .filter(|(_, x)| x.interval >= self.settle_intervals)
            .map(|(k, x)| (x.error - master.map_or(SimTime::ZERO, |m| m[k].error)).as_ps() as f64)
            .collect()
    }

    /// Last recorded error of every tile.
    pub fn final_errors(&self) -> Vec<SimTime> {
        self.samples.values().filter_map(|s| s.last().map(|x| x.error)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum SyncEvent {
    Pps,
    Tick { interval: u32 },
    SyncTx { slave: NodeId },
    SyncRx { session: SyncSession, master_steps: i64 },
    DelayReqRx { session: SyncSession },
    DelayResp { session: SyncSession },
}

struct ClockNode {
    bc: BoundaryClock,
    servo: PiServo,
    rng: SimRng,
    /// Sum of applied offset steps, picoseconds; added back to get the
    /// unsteered timebase used for rate estimation.
    steps_ps: i64,
    last_receipt: Option<SyncReceipt>,
}

struct SyncSim<'a> {
    config: &'a SyncSimConfig,
    net: Network,
    clocks: BTreeMap<NodeId, ClockNode>,
    master_of: BTreeMap<NodeId, NodeId>,
    samples: BTreeMap<NodeId, Vec<OffsetSample>>,
    relay_samples: BTreeMap<NodeId, Vec<OffsetSample>>,
}

/// Run one synchronization experiment.
pub fn run_sync(config: &SyncSimConfig, seed: u64) -> Result<SyncSimResult, TimeSyncError> {
    let link = LinkTemplate {
        transparent_clock: config.switch_clock == SwitchClock::Transparent,
        ..config.link.clone()
    };
    let graph = build_topology(&config.topology, config.tiles, &link)?;
    let root = graph.root();

    let mut master_of = BTreeMap::new();
    for node in &graph.nodes {
        let master = match (node.kind, config.switch_clock) {
            (NodeKind::Root, _) => continue,
            (NodeKind::Switch, SwitchClock::Boundary) => graph.parent(node.id).expect("non-root has parent"),
            (NodeKind::Switch, _) => continue,
            (NodeKind::Tile, SwitchClock::Boundary) => graph.parent(node.id).expect("non-root has parent"),
            (NodeKind::Tile, _) => root,
        };
        master_of.insert(node.id, master);
    }

    let mut init = rng::stream(seed, rng::STREAM_CLOCK_INIT);
    let mut clocks = BTreeMap::new();
    clocks.insert(
        root,
        ClockNode {
            bc: BoundaryClock { node: root, clock: LocalClock::ideal(config.ts_jitter), synchronized: true },
            servo: PiServo::new(config.servo),
            rng: rng::clock_stream(seed, root.0),
            steps_ps: 0,
            last_receipt: None,
        },
    );
    for &node in master_of.keys() {
        let spread = config.initial_offset_spread.as_ps() as f64;
        let offset = SimTime::from_ps_f64(init.random_range(-1.0..=1.0) * spread);
        let skew = init.random_range(-1.0..=1.0) * config.initial_skew_spread;
        let clock = LocalClock::new(offset, skew, config.drift_rw_sigma, config.ts_jitter, SimTime::ZERO)?;
        clocks.insert(
            node,
            ClockNode {
                bc: BoundaryClock { node, clock, synchronized: false },
                servo: PiServo::new(config.servo),
                rng: rng::clock_stream(seed, node.0),
                steps_ps: 0,
                last_receipt: None,
            },
        );
    }

    let samples = graph.tiles().map(|t| (t, Vec::new())).collect();
    let relay_samples = master_of
        .keys()
        .filter(|&&n| graph.node(n).is_some_and(|x| x.kind == NodeKind::Switch))
        .map(|&n| (n, Vec::new()))
        .collect();
    let mut sim = SyncSim { config, net: Network::new(graph, seed), clocks, master_of, samples, relay_samples };
    let mut engine: Engine<SyncEvent> = Engine::new();
    let end = SimTime::from_ps(config.interval.as_ps() * config.intervals as i64);
    if config.mode == SyncMode::Dedicated {
        let mut t = SimTime::ZERO;
        while t <= end {
            engine.schedule(t, SyncEvent::Pps)?;
            t += SimTime::from_secs(1);
        }
    }
    for k in 0..=config.intervals {
        engine.schedule(SimTime::from_ps(config.interval.as_ps() * k as i64), SyncEvent::Tick { interval: k })?;
    }
    // let the final exchange finish before the run ends
    let events = engine.run_until(end + config.interval, |eng, ev| sim.handle(eng, ev))?;

    Ok(SyncSimResult {
        samples: sim.samples,
        relay_samples: sim.relay_samples,
        masters: sim.master_of,
        settle_intervals: config.settle_intervals,
        trace_hash: engine.trace_hash(),
        events,
        end_time: end,
    })
}

impl SyncSim<'_> {
    fn messaging(&self) -> bool {
        matches!(self.config.mode, SyncMode::MessageSync | SyncMode::MessageSyncSyntonized)
    }

    fn clock(&mut self, node: NodeId) -> &mut ClockNode {
        self.clocks.get_mut(&node).expect("every participant has a clock")
    }

    /// Declared asymmetry along the route from `master` to `slave`.
    fn declared_asymmetry(&mut self, master: NodeId, slave: NodeId) -> Result<SimTime, TimeSyncError> {
        let per_link = self.config.known_asymmetry;
        let route = self.net.route(master, slave)?.clone();
        let graph = self.net.graph();
        Ok(route
            .steps
            .iter()
            .map(|s| if graph.links[s.link].a == s.from { per_link } else { -per_link })
            .sum())
    }

    fn handle(&mut self, eng: &mut Engine<SyncEvent>, ev: crate::netsim::Event<SyncEvent>) -> Result<(), TimeSyncError> {
        let now = eng.now();
        match ev.payload {
            SyncEvent::Pps => {
                let (mode, sigma) = (self.config.mode, self.config.dedicated_error);
                for c in self.clocks.values_mut().filter(|c| c.bc.node != NodeId(0)) {
                    dedicated_reference(&mut c.bc.clock, mode, sigma, now, &mut c.rng);
                }
            }
            SyncEvent::Tick { interval } => {
                let sampled: Vec<NodeId> = self.samples.keys().chain(self.relay_samples.keys()).copied().collect();
                for node in sampled {
                    let c = self.clock(node);
                    // advancing early draws the same walk steps in the same order
                    c.bc.clock.advance(now, &mut c.rng);
                    let error = c.bc.clock.error_at(now);
                    let series = self.samples.get_mut(&node).or_else(|| self.relay_samples.get_mut(&node));
                    series.expect("sampled node").push(OffsetSample { interval, time: now, error });
                }
                if interval < self.config.intervals && self.messaging() {
                    let quarter = SimTime::from_ps(self.config.interval.as_ps() / 4);
                    let graph = self.net.graph();
                    let slaves: Vec<(NodeId, u32)> = self
                        .master_of
                        .keys()
                        .map(|&n| (n, graph.node(n).expect("node").depth))
                        .collect();
                    for (slave, depth) in slaves {
                        let stagger = match self.config.switch_clock {
                            SwitchClock::Boundary => SimTime::from_ps(quarter.as_ps() * (depth as i64 - 1)),
                            _ => SimTime::ZERO,
                        };
                        eng.schedule(now + stagger, SyncEvent::SyncTx { slave })?;
                    }
                }
            }
            SyncEvent::SyncTx { slave } => {
                let master = self.master_of[&slave];
                let interval = self.config.interval;
                let m = self.clock(master);
                let mut session = if master == NodeId(0) {
                    SyncSession::new(master, slave, interval)
                } else {
                    match boundary_relay(&m.bc, slave, interval) {
                        Ok(s) => s,
                        Err(TimeSyncError::NotSynchronized(_)) => return Ok(()),
                        Err(e) => return Err(e),
                    }
                };
                session.t1 = Some(m.bc.clock.read(now, &mut m.rng));
                let master_steps = m.steps_ps;
                let transit = self.net.transit(master, slave, now)?;
                if self.config.switch_clock == SwitchClock::Transparent {
                    transparent_correction(&mut session, PathDirection::MasterToSlave, &transit.hops)?;
                }
                eng.schedule(transit.arrive, SyncEvent::SyncRx { session, master_steps })?;
            }
            SyncEvent::SyncRx { mut session, master_steps } => {
                let syntonize = self.config.mode == SyncMode::MessageSyncSyntonized;
                let s = self.clock(session.slave);
                let t2 = s.bc.clock.read(now, &mut s.rng);
                session.t2 = Some(t2);
                if syntonize {
                    let receipt = SyncReceipt {
                        t1: session.t1.expect("set at departure") + SimTime::from_ps(master_steps),
                        t2: t2 - session.correction_fwd + SimTime::from_ps(s.steps_ps),
                    };
                    if let Some(prev) = s.last_receipt.replace(receipt) {
                        let skew = estimate_skew(prev, receipt)?;
                        s.bc.clock.adjust_skew(now, skew)?;
                    }
                }
                session.t3 = Some(s.bc.clock.read(now, &mut s.rng));
                let transit = self.net.transit(session.slave, session.master, now)?;
                if self.config.switch_clock == SwitchClock::Transparent {
                    transparent_correction(&mut session, PathDirection::SlaveToMaster, &transit.hops)?;
                }
                eng.schedule(transit.arrive, SyncEvent::DelayReqRx { session })?;
            }
            SyncEvent::DelayReqRx { mut session } => {
                let m = self.clock(session.master);
                session.t4 = Some(m.bc.clock.read(now, &mut m.rng));
                let transit = self.net.transit(session.master, session.slave, now)?;
                eng.schedule(transit.arrive, SyncEvent::DelayResp { session })?;
            }
            SyncEvent::DelayResp { session } => {
                let mut estimate = two_way_exchange(&session)?;
                if self.config.mode == SyncMode::MessageSyncSyntonized {
                    let declared = self.declared_asymmetry(session.master, session.slave)?;
                    estimate = asymmetry_correct(estimate, declared);
                }
                let s = self.clock(session.slave);
                let applied = servo_step(&mut s.bc.clock, &mut s.servo, estimate.offset_ps)?;
                s.steps_ps += SimTime::from_ps_f64(applied).as_ps();
                s.bc.synchronized = true;
            }
        }
        Ok(())
    }
}
