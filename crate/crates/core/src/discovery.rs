//! Liveness registry of meta-scheduler peers.
//!
//! Peers announce themselves with [`PeerRegistry::register`] and leave with
//! [`PeerRegistry::deregister`]. Peers that vanish without notice are caught
//! by echo sweeps: a peer that misses `retries` consecutive echoes is removed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::SiteId;

pub const DEFAULT_ECHO_INTERVAL: f64 = 60.0;
pub const DEFAULT_ECHO_TIMEOUT: f64 = 5.0;
pub const DEFAULT_ECHO_RETRIES: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    pub echo_interval: f64,
    pub echo_timeout: f64,
    /// Consecutive missed echoes before removal.
    pub retries: u32,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            echo_interval: DEFAULT_ECHO_INTERVAL,
            echo_timeout: DEFAULT_ECHO_TIMEOUT,
            retries: DEFAULT_ECHO_RETRIES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerStatus {
    Alive,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeerEntry {
    pub registered_time: f64,
    pub last_echo_ok_time: f64,
    pub status: PeerStatus,
    missed: u32,
}

/// Outcome of one echo sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub echoed: Vec<SiteId>,
    pub removed: Vec<SiteId>,
    /// Request + reply per responsive peer, request only otherwise.
    pub messages: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeerRegistry {
    config: DiscoveryConfig,
    entries: BTreeMap<SiteId, PeerEntry>,
}

impl PeerRegistry {
    pub fn new(config: DiscoveryConfig) -> Self {
        PeerRegistry {
            config,
            entries: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &DiscoveryConfig {
        &self.config
    }

    /// Marks the peer alive. Re-registering refreshes the timestamps and
    /// revives a removed peer.
    pub fn register(&mut self, site: SiteId, now: f64) {
        let entry = self.entries.entry(site).or_insert(PeerEntry {
            registered_time: now,
            last_echo_ok_time: now,
            status: PeerStatus::Alive,
            missed: 0,
        });
        entry.registered_time = entry.registered_time.max(now);
        entry.last_echo_ok_time = entry.last_echo_ok_time.max(now);
        entry.status = PeerStatus::Alive;
        entry.missed = 0;
    }

    /// Graceful shutdown. Unknown peers are ignored.
    pub fn deregister(&mut self, site: &SiteId, _now: f64) {
        if let Some(entry) = self.entries.get_mut(site) {
            entry.status = PeerStatus::Removed;
            entry.missed = 0;
        }
    }

    pub fn entry(&self, site: &SiteId) -> Option<&PeerEntry> {
        self.entries.get(site)
    }

    pub fn is_alive(&self, site: &SiteId) -> bool {
        matches!(self.entries.get(site), Some(e) if e.status == PeerStatus::Alive)
    }

    fn alive(&self) -> impl Iterator<Item = &SiteId> {
        self.entries
            .iter()
            .filter(|(_, e)| e.status == PeerStatus::Alive)
            .map(|(s, _)| s)
    }

    /// Alive peers other than the requester, sorted by id.
    pub fn list_peers(&self, requester: &SiteId) -> Vec<SiteId> {
        self.alive().filter(|s| *s != requester).cloned().collect()
    }

    /// Echoes every alive peer. `responds` reports whether a peer answered
    /// within the timeout; `now` is the time the replies are collected.
    pub fn echo_sweep(
        &mut self,
        now: f64,
        mut responds: impl FnMut(&SiteId) -> bool,
    ) -> SweepReport {
        let targets: Vec<SiteId> = self.alive().cloned().collect();
        let mut report = SweepReport::default();
        for site in targets {
            let replied = responds(&site);
            let entry = self
                .entries
                .get_mut(&site)
                .expect("alive peer has an entry");
            report.messages += if replied { 2 } else { 1 };
            if replied {
                entry.last_echo_ok_time = entry.last_echo_ok_time.max(now);
                entry.missed = 0;
            } else {
                entry.missed += 1;
                if entry.missed >= self.config.retries.max(1) {
                    entry.status = PeerStatus::Removed;
                    report.removed.push(site.clone());
                }
            }
            report.echoed.push(site);
        }
        report
    }

    /// Sites that have ever registered.
    pub fn known(&self) -> BTreeSet<SiteId> {
        self.entries.keys().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(id: &str) -> SiteId {
        SiteId::from(id)
    }

    fn registry() -> PeerRegistry {
        PeerRegistry::new(DiscoveryConfig::default())
    }

    #[test]
    fn register_then_list() {
        let mut r = registry();
        r.register(s("a"), 0.0);
        assert_eq!(r.list_peers(&s("x")), vec![s("a")]);
    }

    #[test]
    fn register_twice_single_entry_latest_time() {
        let mut r = registry();
        r.register(s("a"), 1.0);
        r.register(s("a"), 5.0);
        assert_eq!(r.list_peers(&s("x")).len(), 1);
        assert_eq!(r.entry(&s("a")).unwrap().registered_time, 5.0);
    }

    #[test]
    fn deregister_removes_and_unknown_is_noop() {
        let mut r = registry();
        r.register(s("a"), 0.0);
        r.register(s("b"), 0.0);
        r.deregister(&s("a"), 1.0);
        assert_eq!(r.list_peers(&s("x")), vec![s("b")]);
        r.deregister(&s("zzz"), 2.0);
        assert_eq!(r.list_peers(&s("x")), vec![s("b")]);
    }

    #[test]
    fn deregistered_peer_not_echoed() {
        let mut r = registry();
        r.register(s("a"), 0.0);
        r.register(s("b"), 0.0);
        r.deregister(&s("a"), 1.0);
        let report = r.echo_sweep(60.0, |_| true);
        assert_eq!(report.echoed, vec![s("b")]);
        assert_eq!(report.messages, 2);
    }

    #[test]
    fn sweep_removes_silent_peer() {
        let mut r = registry();
        for id in ["a", "b", "c"] {
            r.register(s(id), 0.0);
        }
        let report = r.echo_sweep(65.0, |p| p != &s("b"));
        assert_eq!(report.removed, vec![s("b")]);
        assert_eq!(report.messages, 2 + 1 + 2);
        assert_eq!(r.list_peers(&s("a")), vec![s("c")]);
        // nothing changed since: the next sweep removes nothing
        assert!(r.echo_sweep(125.0, |_| true).removed.is_empty());
    }

    #[test]
    fn crash_then_reregister_revives() {
        let mut r = registry();
        r.register(s("a"), 0.0);
        r.echo_sweep(60.0, |_| false);
        assert!(!r.is_alive(&s("a")));
        r.register(s("a"), 90.0);
        assert!(r.is_alive(&s("a")));
        assert_eq!(r.list_peers(&s("x")), vec![s("a")]);
    }

    #[test]
    fn retries_delay_removal() {
        let mut r = PeerRegistry::new(DiscoveryConfig {
            retries: 2,
            ..DiscoveryConfig::default()
        });
        r.register(s("a"), 0.0);
        assert!(r.echo_sweep(60.0, |_| false).removed.is_empty());
        assert_eq!(r.echo_sweep(120.0, |_| false).removed, vec![s("a")]);
    }

    #[test]
    fn list_peers_exclusion() {
        let mut r = registry();
        r.register(s("a"), 0.0);
        assert!(r.list_peers(&s("a")).is_empty());
        for id in ["b", "c", "d", "e"] {
            r.register(s(id), 0.0);
        }
        r.echo_sweep(60.0, |p| p != &s("c"));
        assert_eq!(r.list_peers(&s("a")), vec![s("b"), s("d"), s("e")]);
        assert_eq!(r.list_peers(&s("q")).len(), 4);
    }

    /// Enumerates register / deregister / crash-sweep / healthy-sweep
    /// sequences for one peer against a two-state reference machine.
    #[test]
    fn state_machine_oracle() {
        #[derive(Clone, Copy, Debug)]
        enum Op {
            Register,
            Deregister,
            SweepSilent,
            SweepReply,
        }
        let ops = [
            Op::Register,
            Op::Deregister,
            Op::SweepSilent,
            Op::SweepReply,
        ];
        let mut sequences = vec![vec![]];
        for _ in 0..5 {
            sequences = sequences
                .into_iter()
                .flat_map(|seq: Vec<Op>| {
                    ops.iter().map(move |op| {
                        let mut next = seq.clone();
                        next.push(*op);
                        next
                    })
                })
                .collect();
        }
        for seq in sequences {
            let mut r = registry();
            let mut model_alive = false;
            for (i, op) in seq.iter().enumerate() {
                let now = i as f64 * 10.0;
                match op {
                    Op::Register => {
                        r.register(s("p"), now);
                        model_alive = true;
                    }
                    Op::Deregister => {
                        r.deregister(&s("p"), now);
                        model_alive = false;
                    }
                    Op::SweepSilent => {
                        r.echo_sweep(now, |_| false);
                        model_alive = false;
                    }
                    Op::SweepReply => {
                        r.echo_sweep(now, |_| true);
                    }
                }
                assert_eq!(r.is_alive(&s("p")), model_alive, "{seq:?}");
                assert_eq!(r.list_peers(&s("me")).len(), usize::from(model_alive));
            }
        }
    }
}
