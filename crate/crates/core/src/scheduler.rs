//! Per-site meta-scheduler decisions: minimum-cost placement of new jobs,
//! peer polling, and export of low-priority batches from a congested site.
//!
//! Everything here is a pure function of its inputs. The simulator owns the
//! state and routes the messages.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{total_cost_in, CostBreakdown, CostConfig, CostWeights, WeightPresets};
use crate::model::{JobId, JobSpec, Network, SiteId, SiteLoad, SiteState};
use crate::queue::{QueueError, QueueState, QueuedJob};

pub const DEFAULT_POLL_INTERVAL: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("job {job} needs {processors} processors, more than any site owns")]
    Unschedulable { job: JobId, processors: u32 },
    #[error("job {job}: no capable site is reachable from its data site {data_site}")]
    Unreachable { job: JobId, data_site: SiteId },
}

/// How a migration target is compared against the local site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationComparator {
    /// Congestion key (jobs ahead + queue length) first, then batch cost.
    Lexicographic,
    /// `queue_weight * key + cost_weight * cost`.
    WeightedSum { queue_weight: f64, cost_weight: f64 },
}

/// When the best remote is good enough to receive the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportRule {
    /// Export when the remote is strictly better under the comparator.
    Comparator,
    /// Export only when the remote is strictly better on both criteria.
    BothBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DianaConfig {
    /// Seconds between peer polls.
    pub poll_interval: f64,
    pub comparator: MigrationComparator,
    pub export_rule: ExportRule,
    /// Seconds of batch cost a remote must save before it is preferred.
    pub stay_local_bias: f64,
    pub migration: bool,
}

impl Default for DianaConfig {
    fn default() -> Self {
        DianaConfig {
            poll_interval: DEFAULT_POLL_INTERVAL,
            comparator: MigrationComparator::Lexicographic,
            export_rule: ExportRule::Comparator,
            stay_local_bias: 0.0,
            migration: true,
        }
    }
}

impl DianaConfig {
    /// Snapshots older than this are ignored.
    pub fn max_snapshot_age(&self) -> f64 {
        2.0 * self.poll_interval
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.poll_interval > 0.0) || !self.poll_interval.is_finite() {
            return Err(format!(
                "poll_interval must be > 0, got {}",
                self.poll_interval
            ));
        }
        if !(self.stay_local_bias >= 0.0) || !self.stay_local_bias.is_finite() {
            return Err(format!(
                "stay_local_bias must be >= 0, got {}",
                self.stay_local_bias
            ));
        }
        if let MigrationComparator::WeightedSum {
            queue_weight,
            cost_weight,
        } = self.comparator
        {
            if !(queue_weight >= 0.0 && cost_weight >= 0.0) || queue_weight + cost_weight <= 0.0 {
                return Err("weighted_sum weights must be >= 0 and not both zero".into());
            }
        }
        Ok(())
    }
}

/// A peer's answer to a poll.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerSnapshot {
    pub site_id: SiteId,
    /// DIANA plus local queue.
    pub queue_length: usize,
    /// Queued jobs ahead of the probe's reference priority.
    pub jobs_ahead: usize,
    /// Cost of the probed job or batch at this peer.
    pub total_cost: f64,
    pub snapshot_time: f64,
    pub load: SiteLoad,
}

/// What a poll asks about.
#[derive(Debug, Clone, PartialEq)]
pub struct PollProbe {
    pub reference_priority: f64,
    pub batch: Vec<JobSpec>,
}

impl PollProbe {
    /// A probe that only asks for load figures.
    pub fn load_only() -> Self {
        PollProbe {
            reference_priority: f64::INFINITY,
            batch: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingDecision {
    pub job_id: JobId,
    pub chosen_site: SiteId,
    pub cost: CostBreakdown,
    pub alternatives: Vec<(SiteId, f64)>,
    pub was_migration: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MigrationDecision {
    StayLocal,
    Export {
        to: SiteId,
        decisions: Vec<SchedulingDecision>,
    },
}

/// The snapshot with its queue drained by the jobs the peer has likely
/// served since it answered, at its advertised service rate.
pub fn project_snapshot(snap: &PeerSnapshot, now: f64) -> PeerSnapshot {
    let age = (now - snap.snapshot_time).max(0.0);
    let mut drained = (snap.load.service_rate * age).floor() as usize;
    let mut out = snap.clone();
    let from_diana = drained.min(out.load.diana_queue_len);
    out.load.diana_queue_len -= from_diana;
    drained -= from_diana;
    out.load.local_queue_len -= drained.min(out.load.local_queue_len);
    out.queue_length = out.load.queue_length();
    out
}

/// Books a job we just sent to the peer into our cached view of it: the
/// job takes idle nodes if it would start at once, else joins the queue.
pub fn record_placement(snap: &mut PeerSnapshot, processors: u32) {
    if snap.load.queue_length() == 0 && snap.load.idle_nodes >= processors {
        snap.load.idle_nodes -= processors;
    } else {
        snap.load.diana_queue_len += 1;
    }
    snap.queue_length = snap.load.queue_length();
}

/// Cost weights for the job's declared kind.
pub fn classify(job: &JobSpec, presets: &WeightPresets) -> CostWeights {
    presets.for_kind(job.kind)
}

/// The snapshot a site gives about itself for `probe`.
pub fn snapshot_of(
    site: &SiteState,
    probe: &PollProbe,
    network: &Network,
    cost: &CostConfig,
    now: f64,
) -> PeerSnapshot {
    let load = site.load();
    let total_cost = batch_cost(&probe.batch, &load, network, cost)
        .map(|(total, _)| total)
        .unwrap_or(f64::INFINITY);
    PeerSnapshot {
        site_id: site.site_id.clone(),
        queue_length: load.queue_length(),
        jobs_ahead: site.diana_queue.jobs_ahead(probe.reference_priority),
        total_cost,
        snapshot_time: now,
        load,
    }
}

/// Summed total cost of a batch at one site, with the per-job breakdowns.
/// Fails if any job cannot reach the site.
pub fn batch_cost(
    batch: &[JobSpec],
    site: &SiteLoad,
    network: &Network,
    cost: &CostConfig,
) -> Result<(f64, Vec<CostBreakdown>), crate::cost::CostError> {
    let mut sum = 0.0;
    let mut parts = Vec::with_capacity(batch.len());
    for job in batch {
        let weights = classify(job, &cost.weights);
        let b = total_cost_in(job, site, network, &weights, cost.reference_bandwidth)?;
        sum += b.total;
        parts.push(b);
    }
    Ok((sum, parts))
}

/// Places a new job on the cheapest capable site among `local` and the
/// fresh `peers`. Ties go to the shorter queue, then the smaller id.
pub fn schedule(
    job: &JobSpec,
    local: &SiteLoad,
    peers: &[PeerSnapshot],
    network: &Network,
    cost: &CostConfig,
    now: f64,
    max_age: f64,
) -> Result<SchedulingDecision, ScheduleError> {
    let mut candidates: Vec<&SiteLoad> = vec![local];
    for p in peers {
        let fresh = now - p.snapshot_time <= max_age;
        if fresh && p.site_id != local.site_id && candidates.iter().all(|c| c.site_id != p.site_id)
        {
            candidates.push(&p.load);
        }
    }
    let capable: Vec<&SiteLoad> = candidates
        .into_iter()
        .filter(|s| s.node_count >= job.processors_required)
        .collect();
    if capable.is_empty() {
        return Err(ScheduleError::Unschedulable {
            job: job.job_id,
            processors: job.processors_required,
        });
    }
    let weights = classify(job, &cost.weights);
    let mut scored: Vec<(&SiteLoad, CostBreakdown)> = capable
        .into_iter()
        .filter_map(|s| {
            total_cost_in(job, s, network, &weights, cost.reference_bandwidth)
                .ok()
                .map(|b| (s, b))
        })
        .collect();
    if scored.is_empty() {
        return Err(ScheduleError::Unreachable {
            job: job.job_id,
            data_site: job.data_site.clone(),
        });
    }
    scored.sort_by(|(a, ca), (b, cb)| {
        ca.total
            .total_cmp(&cb.total)
            .then(a.queue_length().cmp(&b.queue_length()))
            .then(a.site_id.cmp(&b.site_id))
    });
    let alternatives = scored
        .iter()
        .map(|(s, c)| (s.site_id.clone(), c.total))
        .collect();
    let (best, breakdown) = scored[0];
    Ok(SchedulingDecision {
        job_id: job.job_id,
        chosen_site: best.site_id.clone(),
        cost: breakdown,
        alternatives,
        was_migration: false,
    })
}

/// Queued jobs served before a new job of the given priority.
pub fn jobs_ahead(priority: f64, state: &QueueState) -> usize {
    state.jobs_ahead(priority)
}

fn congestion_key(s: &PeerSnapshot) -> usize {
    s.jobs_ahead + s.queue_length
}

fn compare(a: &PeerSnapshot, b: &PeerSnapshot, cmp: MigrationComparator) -> Ordering {
    match cmp {
        MigrationComparator::Lexicographic => congestion_key(a)
            .cmp(&congestion_key(b))
            .then(a.total_cost.total_cmp(&b.total_cost)),
        MigrationComparator::WeightedSum {
            queue_weight,
            cost_weight,
        } => {
            let score = |s: &PeerSnapshot| {
                queue_weight * congestion_key(s) as f64 + cost_weight * s.total_cost
            };
            score(a).total_cmp(&score(b))
        }
    }
}

/// Whether `remote` beats `local` by enough to take the batch.
fn improves(remote: &PeerSnapshot, local: &PeerSnapshot, config: &DianaConfig) -> bool {
    if !remote.total_cost.is_finite() {
        return false;
    }
    let bias = config.stay_local_bias;
    let (rk, lk) = (congestion_key(remote), congestion_key(local));
    match config.export_rule {
        ExportRule::BothBetter => rk < lk && remote.total_cost + bias < local.total_cost,
        ExportRule::Comparator => match config.comparator {
            MigrationComparator::Lexicographic => {
                rk < lk || (rk == lk && remote.total_cost + bias < local.total_cost)
            }
            MigrationComparator::WeightedSum {
                queue_weight,
                cost_weight,
            } => {
                let r = queue_weight * rk as f64 + cost_weight * remote.total_cost;
                let l = queue_weight * lk as f64 + cost_weight * local.total_cost;
                r + bias < l
            }
        },
    }
}

/// Chooses one peer for the whole batch, or keeps it local. `local` is the
/// congested site's own snapshot for the same probe.
pub fn migrate_batch(
    batch: &[JobSpec],
    local: &PeerSnapshot,
    peers: &[PeerSnapshot],
    network: &Network,
    cost: &CostConfig,
    config: &DianaConfig,
) -> MigrationDecision {
    if batch.is_empty() {
        return MigrationDecision::StayLocal;
    }
    let mut feasible: Vec<&PeerSnapshot> = peers
        .iter()
        .filter(|p| p.site_id != local.site_id && p.total_cost.is_finite())
        .filter(|p| {
            batch
                .iter()
                .all(|j| j.processors_required <= p.load.node_count)
        })
        .collect();
    feasible.sort_by(|a, b| compare(a, b, config.comparator).then(a.site_id.cmp(&b.site_id)));
    let Some(best) = feasible.first() else {
        return MigrationDecision::StayLocal;
    };
    if !improves(best, local, config) {
        return MigrationDecision::StayLocal;
    }
    let Ok((_, parts)) = batch_cost(batch, &best.load, network, cost) else {
        return MigrationDecision::StayLocal;
    };
    let mut alternatives: Vec<(SiteId, f64)> = vec![(local.site_id.clone(), local.total_cost)];
    alternatives.extend(feasible.iter().map(|p| (p.site_id.clone(), p.total_cost)));
    let decisions = batch
        .iter()
        .zip(parts)
        .map(|(job, part)| SchedulingDecision {
            job_id: job.job_id,
            chosen_site: best.site_id.clone(),
            cost: part,
            alternatives: alternatives.clone(),
            was_migration: true,
        })
        .collect();
    MigrationDecision::Export {
        to: best.site_id.clone(),
        decisions,
    }
}

/// Polls every listed peer except `local`. `respond` returns the peer's
/// snapshot, or `None` on timeout. Adds two messages per answered poll and
/// one per timeout to `messages`.
pub fn poll_peers(
    local: &SiteId,
    peers: &[SiteId],
    now: f64,
    mut respond: impl FnMut(&SiteId) -> Option<PeerSnapshot>,
    messages: &mut u64,
) -> Vec<PeerSnapshot> {
    let mut out = Vec::new();
    for peer in peers.iter().filter(|p| *p != local) {
        match respond(peer) {
            Some(mut snap) => {
                *messages += 2;
                snap.snapshot_time = now;
                out.push(snap);
            }
            None => *messages += 1,
        }
    }
    out
}

/// Hands a job from the site's DIANA queue to its local scheduler. The job
/// leaves the exportable queue for good.
pub fn on_allocation(site: &mut SiteState, job_id: JobId) -> Result<QueuedJob, QueueError> {
    let job = site.diana_queue.remove(job_id)?;
    site.local_queue.push_back(job_id);
    Ok(job)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{units, JobKind, LinkParams, UserProfile, UserProfiles};
    use proptest::prelude::*;

    fn job(id: u64, kind: JobKind, demand: f64, data_gb: f64, data_site: &str) -> JobSpec {
        JobSpec {
            job_id: JobId(id),
            user_id: "u".into(),
            compute_demand: demand,
            processors_required: 1,
            data_size: units::gb_to_bytes(data_gb),
            data_site: data_site.into(),
            submit_time: 0.0,
            kind,
        }
    }

    fn net(bw: f64) -> Network {
        Network::new(Some(LinkParams {
            bandwidth: bw,
            latency: 0.0,
            background_load: 0.0,
        }))
    }

    fn snap(id: &str, queue: usize, ahead: usize, cost: f64) -> PeerSnapshot {
        PeerSnapshot {
            site_id: id.into(),
            queue_length: queue,
            jobs_ahead: ahead,
            total_cost: cost,
            snapshot_time: 0.0,
            load: SiteLoad::idle(id, 4, 1.0),
        }
    }

    #[test]
    fn projection_drains_queue() {
        let mut s = snap("a", 5, 0, 0.0);
        s.load.diana_queue_len = 3;
        s.load.local_queue_len = 2;
        s.load.service_rate = 0.1;
        s.snapshot_time = 10.0;
        assert_eq!(project_snapshot(&s, 10.0), s);
        let p = project_snapshot(&s, 49.0);
        assert_eq!(
            (
                p.load.diana_queue_len,
                p.load.local_queue_len,
                p.queue_length
            ),
            (0, 2, 2)
        );
        let p = project_snapshot(&s, 1000.0);
        assert_eq!(p.queue_length, 0);
    }

    #[test]
    fn classify_follows_tag() {
        let p = WeightPresets::default();
        let c = classify(&job(1, JobKind::ComputeIntensive, 1.0, 0.0, "a"), &p);
        assert_eq!((c.compute, c.transfer, c.network), (1.0, 0.25, 0.25));
        let m = classify(&job(1, JobKind::Mixed, 1.0, 0.0, "a"), &p);
        assert_eq!((m.compute, m.transfer, m.network), (1.0, 1.0, 1.0));
        let d = classify(&job(1, JobKind::DataIntensive, 1.0, 0.0, "a"), &p);
        assert_eq!(d, p.data_intensive);
    }

    #[test]
    fn empty_peers_stays_local() {
        let j = job(1, JobKind::Mixed, 10.0, 0.0, "a");
        let local = SiteLoad::idle("a", 2, 1.0);
        let d = schedule(
            &j,
            &local,
            &[],
            &net(100.0),
            &CostConfig::default(),
            0.0,
            60.0,
        )
        .unwrap();
        assert_eq!(d.chosen_site, SiteId::from("a"));
        assert!(!d.was_migration);
    }

    #[test]
    fn data_site_wins_for_data_job() {
        let j = job(1, JobKind::DataIntensive, 10.0, 1.0, "b");
        let local = SiteLoad::idle("a", 2, 1.0);
        let peers = vec![
            PeerSnapshot {
                load: SiteLoad::idle("b", 2, 1.0),
                ..snap("b", 0, 0, 0.0)
            },
            PeerSnapshot {
                load: SiteLoad::idle("c", 2, 1.0),
                ..snap("c", 0, 0, 0.0)
            },
        ];
        let d = schedule(
            &j,
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            0.0,
            60.0,
        )
        .unwrap();
        assert_eq!(d.chosen_site, SiteId::from("b"));
        assert_eq!(d.cost.transfer_cost, 0.0);
    }

    #[test]
    fn picks_cheapest_of_three() {
        // local 83 s, A 40 s, B 90 s of pure compute
        let j = job(1, JobKind::ComputeIntensive, 40.0, 0.0, "a");
        let mut local = SiteLoad::idle("l", 1, 1.0);
        local.diana_queue_len = 43;
        local.service_rate = 1.0;
        let a = SiteLoad::idle("a", 1, 1.0);
        let mut b = SiteLoad::idle("b", 1, 1.0);
        b.diana_queue_len = 50;
        b.service_rate = 1.0;
        let mut network = Network::new(None);
        for (x, y) in [("a", "l"), ("a", "b")] {
            network.set_symmetric(
                x.into(),
                y.into(),
                LinkParams {
                    bandwidth: 1000.0,
                    latency: 0.0,
                    background_load: 0.0,
                },
            );
        }
        let cfg = CostConfig {
            weights: WeightPresets {
                compute_intensive: CostWeights::new(1.0, 0.0, 0.0).unwrap(),
                ..WeightPresets::default()
            },
            ..CostConfig::default()
        };
        let peers = vec![
            PeerSnapshot {
                load: a,
                ..snap("a", 0, 0, 0.0)
            },
            PeerSnapshot {
                load: b,
                ..snap("b", 0, 0, 0.0)
            },
        ];
        let d = schedule(&j, &local, &peers, &network, &cfg, 0.0, 60.0).unwrap();
        assert_eq!(d.chosen_site, SiteId::from("a"));
        let totals: Vec<f64> = d.alternatives.iter().map(|(_, c)| *c).collect();
        assert_eq!(totals, vec![40.0, 83.0, 90.0]);
    }

    #[test]
    fn stale_snapshot_ignored() {
        let j = job(1, JobKind::ComputeIntensive, 40.0, 0.0, "a");
        let mut local = SiteLoad::idle("a", 1, 1.0);
        local.diana_queue_len = 100;
        let peers = vec![PeerSnapshot {
            snapshot_time: 0.0,
            load: SiteLoad::idle("b", 1, 1.0),
            ..snap("b", 0, 0, 0.0)
        }];
        let d = schedule(
            &j,
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            61.0,
            60.0,
        )
        .unwrap();
        assert_eq!(d.chosen_site, SiteId::from("a"));
        let d = schedule(
            &j,
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            60.0,
            60.0,
        )
        .unwrap();
        assert_eq!(d.chosen_site, SiteId::from("b"));
    }

    #[test]
    fn too_wide_job_is_unschedulable() {
        let mut j = job(7, JobKind::Mixed, 1.0, 0.0, "a");
        j.processors_required = 9;
        let local = SiteLoad::idle("a", 4, 1.0);
        let peers = vec![PeerSnapshot {
            load: SiteLoad::idle("b", 8, 1.0),
            ..snap("b", 0, 0, 0.0)
        }];
        let err = schedule(
            &j,
            &local,
            &peers,
            &net(10.0),
            &CostConfig::default(),
            0.0,
            60.0,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ScheduleError::Unschedulable {
                job: JobId(7),
                processors: 9
            }
        );
    }

    #[test]
    fn unreachable_capable_site() {
        let mut j = job(1, JobKind::Mixed, 1.0, 1.0, "a");
        j.processors_required = 4;
        let local = SiteLoad::idle("a", 2, 1.0);
        let peers = vec![PeerSnapshot {
            load: SiteLoad::idle("b", 4, 1.0),
            ..snap("b", 0, 0, 0.0)
        }];
        let err = schedule(
            &j,
            &local,
            &peers,
            &Network::new(None),
            &CostConfig::default(),
            0.0,
            60.0,
        )
        .unwrap_err();
        assert!(matches!(err, ScheduleError::Unreachable { .. }));
    }

    #[test]
    fn jobs_ahead_examples() {
        assert_eq!(jobs_ahead(0.1, &QueueState::default()), 0);
        // two users: a has three jobs, b one, equal quotas
        let users: UserProfiles = [
            UserProfile::new("a", 1.0).unwrap(),
            UserProfile::new("b", 1.0).unwrap(),
        ]
        .into_iter()
        .collect();
        let mut q = QueueState::default();
        for (i, u) in ["a", "a", "a", "b"].iter().enumerate() {
            let mut j = job(i as u64, JobKind::Mixed, 1.0, 0.0, "s");
            j.user_id = (*u).into();
            q.enqueue(&j, &users).unwrap();
        }
        let mut sorted: Vec<f64> = q.order().iter().map(|j| j.priority).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for probe in [2.0, 0.6, 0.0, -0.2, -2.0] {
            let oracle = sorted.iter().filter(|p| **p >= probe).count();
            assert_eq!(jobs_ahead(probe, &q), oracle);
        }
        assert_eq!(jobs_ahead(-2.0, &q), q.len());
    }

    fn cfg() -> DianaConfig {
        DianaConfig::default()
    }

    fn batch() -> Vec<JobSpec> {
        vec![job(1, JobKind::Mixed, 1.0, 0.0, "l")]
    }

    #[test]
    fn migrate_picks_best_peer() {
        let local = snap("l", 10, 0, 100.0);
        let peers = vec![snap("a", 2, 0, 50.0), snap("b", 2, 0, 70.0)];
        let d = migrate_batch(
            &batch(),
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            &cfg(),
        );
        match d {
            MigrationDecision::Export { to, decisions } => {
                assert_eq!(to, SiteId::from("a"));
                assert_eq!(decisions.len(), 1);
                assert!(decisions[0].was_migration);
            }
            other => panic!("expected export, got {other:?}"),
        }
    }

    #[test]
    fn migrate_stays_when_all_worse() {
        let local = snap("l", 3, 1, 50.0);
        let peers = vec![snap("a", 4, 1, 60.0), snap("b", 10, 0, 50.0)];
        for rule in [ExportRule::Comparator, ExportRule::BothBetter] {
            let c = DianaConfig {
                export_rule: rule,
                ..cfg()
            };
            let d = migrate_batch(
                &batch(),
                &local,
                &peers,
                &net(100.0),
                &CostConfig::default(),
                &c,
            );
            assert_eq!(d, MigrationDecision::StayLocal);
        }
    }

    #[test]
    fn migrate_tie_goes_to_smaller_id() {
        let local = snap("l", 10, 0, 100.0);
        let peers = vec![snap("c", 1, 0, 5.0), snap("b", 1, 0, 5.0)];
        let d = migrate_batch(
            &batch(),
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            &cfg(),
        );
        assert!(matches!(d, MigrationDecision::Export { to, .. } if to == SiteId::from("b")));
    }

    #[test]
    fn migrate_no_peers_or_unreachable() {
        let local = snap("l", 10, 0, 100.0);
        let d = migrate_batch(
            &batch(),
            &local,
            &[],
            &net(100.0),
            &CostConfig::default(),
            &cfg(),
        );
        assert_eq!(d, MigrationDecision::StayLocal);
        let peers = vec![snap("a", 0, 0, f64::INFINITY)];
        let d = migrate_batch(
            &batch(),
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            &cfg(),
        );
        assert_eq!(d, MigrationDecision::StayLocal);
    }

    #[test]
    fn both_better_rule_is_stricter() {
        // shorter queue but dearer
        let local = snap("l", 10, 0, 100.0);
        let peers = vec![snap("a", 2, 0, 150.0)];
        let lex = migrate_batch(
            &batch(),
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            &cfg(),
        );
        assert!(matches!(lex, MigrationDecision::Export { .. }));
        let strict = DianaConfig {
            export_rule: ExportRule::BothBetter,
            ..cfg()
        };
        let d = migrate_batch(
            &batch(),
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            &strict,
        );
        assert_eq!(d, MigrationDecision::StayLocal);
    }

    #[test]
    fn stay_local_bias_holds_back_marginal_gain() {
        let local = snap("l", 2, 0, 100.0);
        let peers = vec![snap("a", 2, 0, 95.0)];
        let biased = DianaConfig {
            stay_local_bias: 10.0,
            ..cfg()
        };
        let d = migrate_batch(
            &batch(),
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            &biased,
        );
        assert_eq!(d, MigrationDecision::StayLocal);
        let d = migrate_batch(
            &batch(),
            &local,
            &peers,
            &net(100.0),
            &CostConfig::default(),
            &cfg(),
        );
        assert!(matches!(d, MigrationDecision::Export { .. }));
    }

    #[test]
    fn poll_counts_messages() {
        let me = SiteId::from("me");
        let mut n = 0;
        assert!(poll_peers(&me, &[], 0.0, |_| None, &mut n).is_empty());
        assert_eq!(n, 0);
        let peers: Vec<SiteId> = ["a", "b", "c", "d"]
            .iter()
            .map(|s| SiteId::from(*s))
            .collect();
        let out = poll_peers(
            &me,
            &peers,
            5.0,
            |p| Some(snap(p.as_str(), 0, 0, 0.0)),
            &mut n,
        );
        assert_eq!(out.len(), 4);
        assert_eq!(n, 8);
        assert!(out.iter().all(|s| s.snapshot_time == 5.0));
        let out = poll_peers(
            &me,
            &peers,
            5.0,
            |p| (p.as_str() != "c").then(|| snap(p.as_str(), 0, 0, 0.0)),
            &mut n,
        );
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn allocation_moves_between_queues() {
        let users: UserProfiles = [UserProfile::new("u", 1.0).unwrap()].into_iter().collect();
        let mut site = SiteState::new("s", 2, 1.0, QueueState::default(), 0.2).unwrap();
        let j = job(3, JobKind::Mixed, 1.0, 0.0, "s");
        site.diana_queue.enqueue(&j, &users).unwrap();
        on_allocation(&mut site, JobId(3)).unwrap();
        assert_eq!(site.diana_queue.len(), 0);
        assert_eq!(site.local_queue.len(), 1);
        assert!(site
            .diana_queue
            .migration_candidates(10, crate::queue::MigrationPolicy::Any)
            .is_empty());
        assert!(on_allocation(&mut site, JobId(3)).is_err());
    }

    fn arb_load(id: usize) -> impl Strategy<Value = SiteLoad> {
        (1u32..8, 0.5f64..4.0, 0usize..20, 0.0f64..2.0).prop_map(move |(nodes, power, q, rate)| {
            SiteLoad {
                site_id: SiteId::new(format!("s{id}")),
                node_count: nodes,
                node_power: power,
                idle_nodes: nodes,
                local_queue_len: q / 2,
                diana_queue_len: q - q / 2,
                service_rate: rate,
            }
        })
    }

    proptest! {
        #[test]
        fn schedule_matches_bruteforce(
            loads in (arb_load(0), arb_load(1), arb_load(2), arb_load(3)),
            demand in 0.0f64..500.0,
            t in 1u32..6,
            data_gb in 0.0f64..2.0,
            data_at in 0usize..4,
            bw in 1.0f64..1000.0,
        ) {
            let loads = [loads.0, loads.1, loads.2, loads.3];
            let mut j = job(1, JobKind::Mixed, demand, data_gb, &format!("s{data_at}"));
            j.processors_required = t;
            let network = net(bw);
            let cost = CostConfig::default();
            let peers: Vec<PeerSnapshot> = loads[1..]
                .iter()
                .map(|l| PeerSnapshot { load: l.clone(), ..snap(l.site_id.as_str(), 0, 0, 0.0) })
                .collect();
            let got = schedule(&j, &loads[0], &peers, &network, &cost, 0.0, 60.0);
            let mut best: Option<(f64, usize, SiteId)> = None;
            for l in loads.iter().filter(|l| l.node_count >= t) {
                let c = total_cost_in(&j, l, &network, &cost.weights.mixed, cost.reference_bandwidth)
                    .unwrap()
                    .total;
                let key = (c, l.queue_length(), l.site_id.clone());
                let better = match &best {
                    None => true,
                    Some(b) => key.0 < b.0 || (key.0 == b.0 && (key.1, &key.2) < (b.1, &b.2)),
                };
                if better {
                    best = Some(key);
                }
            }
            match best {
                None => prop_assert!(got.is_err()),
                Some((c, _, site)) => {
                    let d = got.unwrap();
                    prop_assert_eq!(&d.chosen_site, &site);
                    prop_assert_eq!(d.cost.total, c);
                    prop_assert!(d.alternatives.iter().all(|(_, alt)| c <= *alt));
                }
            }
        }

        #[test]
        fn never_exports_when_dominated(
            lq in 0usize..20, la in 0usize..20, lc in 0.0f64..100.0,
            remotes in proptest::collection::vec((0usize..20, 0usize..20, 0.0f64..100.0), 0..5),
            weighted in any::<bool>(),
        ) {
            let local = snap("l", lq, la, lc);
            let peers: Vec<PeerSnapshot> = remotes
                .iter()
                .enumerate()
                .map(|(i, (q, a, c))| {
                    // weakly worse on both criteria
                    let q = (*q).max(lq + la);
                    snap(&format!("p{i}"), q, *a, lc + c)
                })
                .collect();
            let mut c = cfg();
            if weighted {
                c.comparator = MigrationComparator::WeightedSum { queue_weight: 1.0, cost_weight: 1.0 };
            }
            let d = migrate_batch(&batch(), &local, &peers, &net(100.0), &CostConfig::default(), &c);
            prop_assert_eq!(d, MigrationDecision::StayLocal);
        }

        #[test]
        fn export_target_is_bruteforce_min(
            remotes in proptest::collection::vec((0usize..10, 0usize..10, 0u32..50), 1..6),
        ) {
            let local = snap("l", 100, 0, 1000.0);
            let peers: Vec<PeerSnapshot> = remotes
                .iter()
                .enumerate()
                .map(|(i, (q, a, c))| snap(&format!("p{i}"), *q, *a, f64::from(*c)))
                .collect();
            let oracle = peers
                .iter()
                .min_by(|a, b| {
                    (a.queue_length + a.jobs_ahead, a.total_cost as u32, &a.site_id)
                        .cmp(&(b.queue_length + b.jobs_ahead, b.total_cost as u32, &b.site_id))
                })
                .unwrap();
            let d = migrate_batch(&batch(), &local, &peers, &net(100.0), &CostConfig::default(), &cfg());
            let exported_to = match d {
                MigrationDecision::Export { to, .. } => Some(to),
                MigrationDecision::StayLocal => None,
            };
            prop_assert_eq!(exported_to, Some(oracle.site_id.clone()));
        }
    }
}
