use std::collections::HashMap;
use std::hash::Hash;

use crate::rng::{self, SimRng};

use super::{Engine, NetError, NodeId, Route, SimTime, TopologyGraph};

/// Ingress/egress true times of a message at one switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HopStamp {
    pub node: NodeId,
    pub ingress: SimTime,
    pub egress: SimTime,
    /// The switch adds its residence to the correction field.
    pub transparent: bool,
}

impl HopStamp {
    pub fn residence(&self) -> SimTime {
        self.egress - self.ingress
    }
}

/// Timing of one message across its route.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transit {
    pub src: NodeId,
    pub dst: NodeId,
    pub depart: SimTime,
    pub arrive: SimTime,
    pub hops: Vec<HopStamp>,
    pub link_delay: SimTime,
    pub residence: SimTime,
}

impl Transit {
    pub fn delay(&self) -> SimTime {
        self.arrive - self.depart
    }
}

/// Topology plus the per-node random streams that drive its jitter.
///
/// Link jitter is drawn from the stream of the node transmitting onto the
/// link and residence jitter from the switch's own stream.
pub struct Network {
    graph: TopologyGraph,
    streams: Vec<SimRng>,
    routes: HashMap<(NodeId, NodeId), Route>,
}

impl Network {
    pub fn new(graph: TopologyGraph, seed: u64) -> Self {
        let streams = graph.nodes.iter().map(|n| rng::node_stream(seed, n.id.0)).collect();
        Network { graph, streams, routes: HashMap::new() }
    }

    pub fn graph(&self) -> &TopologyGraph {
        &self.graph
    }

    pub fn route(&mut self, src: NodeId, dst: NodeId) -> Result<&Route, NetError> {
        if !self.routes.contains_key(&(src, dst)) {
            let r = self.graph.route(src, dst)?;
            self.routes.insert((src, dst), r);
        }
        Ok(&self.routes[&(src, dst)])
    }

    /// Sample the transit of a message leaving `src` at `depart`.
    pub fn transit(&mut self, src: NodeId, dst: NodeId, depart: SimTime) -> Result<Transit, NetError> {
        let steps = self.route(src, dst)?.steps.clone();
        let mut t = depart;
        let mut hops = Vec::with_capacity(steps.len().saturating_sub(1));
        let mut link_delay = SimTime::ZERO;
        let mut residence = SimTime::ZERO;
        for (i, step) in steps.iter().enumerate() {
            if i > 0 {
                if let Some(sw) = self.graph.switches.get(&step.from) {
                    let stream = &mut self.streams[step.from.0 as usize];
                    let r = truncated(sw.residence, sw.residence_jitter, stream);
                    hops.push(HopStamp { node: step.from, ingress: t, egress: t + r, transparent: sw.transparent_clock });
                    residence += r;
                    t += r;
                }
            }
            let link = &self.graph.links[step.link];
            let stream = &mut self.streams[step.from.0 as usize];
            let d = truncated(link.delay_from(step.from), link.jitter_sigma, stream);
            link_delay += d;
            t = t.checked_add(d).ok_or(NetError::TimeOverflow)?;
        }
        Ok(Transit { src, dst, depart, arrive: t, hops, link_delay, residence })
    }

    /// Sample a transit and queue its delivery on `engine`.
    pub fn send<P: Hash>(
        &mut self,
        engine: &mut Engine<P>,
        src: NodeId,
        dst: NodeId,
        make_payload: impl FnOnce(&Transit) -> P,
    ) -> Result<Transit, NetError> {
        let transit = self.transit(src, dst, engine.now())?;
        engine.schedule(transit.arrive, make_payload(&transit))?;
        Ok(transit)
    }
}

/// `max(0, mean + sigma * z)` rounded to the picosecond. Always draws.
fn truncated(mean: SimTime, sigma: SimTime, rng: &mut SimRng) -> SimTime {
    let z = rng::std_normal(rng);
    let v = mean.as_ps() as f64 + sigma.as_ps() as f64 * z;
    SimTime::from_ps_f64(v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{build_topology, LinkTemplate, TopologyKind};

    fn chain(template: &LinkTemplate) -> TopologyGraph {
        // tile 3 - switch 1 - switch 2 - tile 0 ... expressed with root at 0
        let kind = TopologyKind::Explicit { nodes: 4, switches: vec![1, 2], edges: vec![(0, 1), (1, 2), (2, 3)] };
        build_topology(&kind, 0, template).unwrap()
    }

    #[test]
    fn additive_delays_over_three_hops() {
        let template = LinkTemplate {
            delay: SimTime::from_us(1),
            residence: SimTime::from_us(2),
            ..LinkTemplate::default()
        };
        let mut net = Network::new(chain(&template), 7);
        let tr = net.transit(NodeId(0), NodeId(3), SimTime::ZERO).unwrap();
        assert_eq!(tr.delay(), SimTime::from_us(7));
        assert_eq!(tr.hops.len(), 2);
        assert_eq!(tr.hops[0].ingress, SimTime::from_us(1));
        assert_eq!(tr.hops[0].egress, SimTime::from_us(3));
        let back = net.transit(NodeId(3), NodeId(0), SimTime::ZERO).unwrap();
        assert_eq!(back.delay(), tr.delay());
    }

    #[test]
    fn residence_plus_links_is_total() {
        let template = LinkTemplate {
            residence_jitter: SimTime::from_ns(300),
            ..LinkTemplate::default()
        };
        let mut net = Network::new(chain(&template), 11);
        for k in 0..50 {
            let tr = net.transit(NodeId(3), NodeId(0), SimTime::from_us(k)).unwrap();
            assert_eq!(tr.delay() - tr.residence, tr.link_delay);
            assert_eq!(tr.link_delay, SimTime::from_ns(1_500));
            assert_eq!(tr.residence, tr.hops.iter().map(HopStamp::residence).sum());
        }
    }

    #[test]
    fn link_jitter_statistics() {
        let template = LinkTemplate {
            delay: SimTime::from_us(1),
            jitter_sigma: SimTime::from_ns(10),
            ..LinkTemplate::default()
        };
        let g = build_topology(&TopologyKind::Star, 1, &template).unwrap();
        let mut net = Network::new(g, 3);
        let n = 10_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| net.transit(NodeId(0), NodeId(1), SimTime::ZERO).unwrap().delay().as_ps() as f64)
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std_ns = var.sqrt() / 1e3;
        assert!((std_ns - 10.0).abs() < 0.5, "std {std_ns} ns");
    }

    #[test]
    fn send_schedules_delivery() {
        let g = build_topology(&TopologyKind::Star, 2, &LinkTemplate::default()).unwrap();
        let mut net = Network::new(g, 0);
        let mut engine = Engine::new();
        let tr = net.send(&mut engine, NodeId(1), NodeId(2), |t| t.arrive.as_ps()).unwrap();
        assert_eq!(tr.delay(), SimTime::from_ns(2_000));
        let mut got = Vec::new();
        engine
            .run(|e, ev| {
                got.push((e.now(), ev.payload));
                Ok::<_, NetError>(())
            })
            .unwrap();
        assert_eq!(got, vec![(SimTime::from_ns(2_000), 2_000_000)]);
    }

    #[test]
    fn no_path_between_unknown_nodes() {
        let g = build_topology(&TopologyKind::Star, 2, &LinkTemplate::default()).unwrap();
        let mut net = Network::new(g, 0);
        assert_eq!(net.transit(NodeId(0), NodeId(9), SimTime::ZERO).unwrap_err(), NetError::UnknownNode(9));
    }
}
