//! Timestamped events and the future-event list.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    JobSubmit { job: usize },
    TransferComplete { job: usize, site: usize },
    JobComplete { job: usize, site: usize },
    EchoTick,
    EchoCollect,
    CongestionCheck,
    SiteJoin { site: usize },
    SiteCrash { site: usize },
    SiteRejoin { site: usize },
    SiteShutdown { site: usize },
}

impl EventKind {
    /// Membership changes that the run must wait for before it may end.
    pub fn is_lifecycle(&self) -> bool {
        matches!(
            self,
            EventKind::SiteJoin { .. }
                | EventKind::SiteCrash { .. }
                | EventKind::SiteRejoin { .. }
                | EventKind::SiteShutdown { .. }
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    /// Reversed so the max-heap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Events ordered by time, then by insertion.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, kind: EventKind) {
        self.heap.push(Event {
            time,
            seq: self.seq,
            kind,
        });
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
