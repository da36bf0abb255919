use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::hash::{Hash, Hasher};

use sha2::{Digest, Sha256};

use super::{NetError, SimTime};

#[derive(Debug, Clone, PartialEq)]
pub struct Event<P> {
    pub due: SimTime,
    pub seq: u64,
    pub payload: P,
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.due == other.0.due && self.0.seq == other.0.seq
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // BinaryHeap is a max-heap: invert so the earliest (due, seq) pops first
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.due, other.0.seq).cmp(&(self.0.due, self.0.seq))
    }
}

/// `std::hash::Hasher` that feeds a SHA-256 digest, giving a trace hash that
/// is stable across runs and processes.
#[derive(Clone, Default)]
pub struct TraceHasher(Sha256);

impl TraceHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0.clone().finalize())
    }
}

impl Hasher for TraceHasher {
    fn write(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }

    fn finish(&self) -> u64 {
        let d = self.0.clone().finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// Single-threaded event engine with one global queue.
pub struct Engine<P> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Queued<P>>,
    processed: u64,
    trace: TraceHasher,
}

impl<P: Hash> Default for Engine<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P: Hash> Engine<P> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            processed: 0,
            trace: TraceHasher::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    /// Hex SHA-256 over every processed `(due, seq, payload)` in order.
    pub fn trace_hash(&self) -> String {
        self.trace.hex()
    }

    /// Queue `payload` at absolute time `due`; returns its sequence number.
    pub fn schedule(&mut self, due: SimTime, payload: P) -> Result<u64, NetError> {
        if due < self.now {
            return Err(NetError::SchedulePast { due, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(Event { due, seq, payload }));
        Ok(seq)
    }

    pub fn schedule_in(&mut self, delay: SimTime, payload: P) -> Result<u64, NetError> {
        let due = self.now.checked_add(delay).ok_or(NetError::TimeOverflow)?;
        self.schedule(due, payload)
    }

    /// Process every event due at or before `until`, then advance the clock
    /// to `until`. Returns the number of events processed.
    pub fn run_until<E, F>(&mut self, until: SimTime, mut handler: F) -> Result<u64, E>
    where
        E: From<NetError>,
        F: FnMut(&mut Engine<P>, Event<P>) -> Result<(), E>,
    {
        if until < self.now {
            return Err(NetError::SchedulePast { due: until, now: self.now }.into());
        }
        let mut count = 0;
        while self.queue.peek().is_some_and(|q| q.0.due <= until) {
            let Queued(event) = self.queue.pop().expect("peeked");
            debug_assert!(event.due >= self.now);
            self.now = event.due;
            event.due.hash(&mut self.trace);
            event.seq.hash(&mut self.trace);
            event.payload.hash(&mut self.trace);
            self.processed += 1;
            count += 1;
            handler(self, event)?;
        }
        self.now = until;
        Ok(count)
    }

    /// Process events until the queue is empty.
    pub fn run<E, F>(&mut self, mut handler: F) -> Result<u64, E>
    where
        E: From<NetError>,
        F: FnMut(&mut Engine<P>, Event<P>) -> Result<(), E>,
    {
        let mut count = 0;
        while let Some(due) = self.queue.peek().map(|q| q.0.due) {
            count += self.run_until(due, &mut handler)?;
        }
        Ok(count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_due_times_run_in_issue_order() {
        let mut engine = Engine::new();
        let t = SimTime::from_ns(5);
        engine.schedule(t, "b").unwrap();
        engine.schedule(t, "a").unwrap();
        engine.schedule(SimTime::from_ns(1), "first").unwrap();
        let mut seen = Vec::new();
        engine
            .run(|_, ev| {
                seen.push(ev.payload);
                Ok::<_, NetError>(())
            })
            .unwrap();
        assert_eq!(seen, vec!["first", "b", "a"]);
    }

    #[test]
    fn empty_queue_advances_time() {
        let mut engine: Engine<u8> = Engine::new();
        let n = engine.run_until(SimTime::from_us(3), |_, _| Ok::<_, NetError>(())).unwrap();
        assert_eq!(n, 0);
        assert_eq!(engine.now(), SimTime::from_us(3));
    }

    #[test]
    fn scheduling_in_the_past_fails() {
        let mut engine: Engine<u8> = Engine::new();
        engine.run_until(SimTime::from_ns(10), |_, _| Ok::<_, NetError>(())).unwrap();
        let err = engine.schedule(SimTime::from_ns(9), 0).unwrap_err();
        assert_eq!(err, NetError::SchedulePast { due: SimTime::from_ns(9), now: SimTime::from_ns(10) });
    }

    #[test]
    fn handlers_can_schedule_follow_ups() {
        let mut engine = Engine::new();
        engine.schedule(SimTime::ZERO, 0u32).unwrap();
        let mut times = Vec::new();
        engine
            .run(|eng, ev| {
                times.push(eng.now());
                if ev.payload < 4 {
                    eng.schedule_in(SimTime::from_ns(2), ev.payload + 1)?;
                }
                Ok::<_, NetError>(())
            })
            .unwrap();
        assert_eq!(times.len(), 5);
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(engine.now(), SimTime::from_ns(8));
    }

    #[test]
    fn trace_hash_depends_on_payload_and_order() {
        let run = |payloads: &[u32]| {
            let mut engine = Engine::new();
            for (i, &p) in payloads.iter().enumerate() {
                engine.schedule(SimTime::from_ns(i as i64), p).unwrap();
            }
            engine.run(|_, _| Ok::<_, NetError>(())).unwrap();
            engine.trace_hash()
        };
        assert_eq!(run(&[1, 2, 3]), run(&[1, 2, 3]));
        assert_ne!(run(&[1, 2, 3]), run(&[1, 3, 2]));
    }
}
