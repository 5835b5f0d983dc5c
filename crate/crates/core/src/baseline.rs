//! Comparison schedulers and queue disciplines: round robin placement,
//! FLOP-greedy placement, and FCFS / SJF ordering.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{JobSpec, SiteId, SiteLoad};
use crate::queue::{QueueState, QueuedJob};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BaselineError {
    #[error("no sites to schedule on")]
    NoSites,
    #[error("queue discipline {queue} requires the diana scheduler, got {scheduler}")]
    InvalidCombination {
        scheduler: &'static str,
        queue: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Diana,
    RoundRobin,
    FlopGreedy,
}

impl SchedulerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Diana => "diana",
            SchedulerKind::RoundRobin => "round_robin",
            SchedulerKind::FlopGreedy => "flop_greedy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "diana" => Some(SchedulerKind::Diana),
            "round_robin" => Some(SchedulerKind::RoundRobin),
            "flop_greedy" => Some(SchedulerKind::FlopGreedy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueDiscipline {
    Fcfs,
    Sjf,
    PriorityMultiqueue,
}

impl QueueDiscipline {
    pub fn as_str(self) -> &'static str {
        match self {
            QueueDiscipline::Fcfs => "fcfs",
            QueueDiscipline::Sjf => "sjf",
            QueueDiscipline::PriorityMultiqueue => "priority_multiqueue",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fcfs" => Some(QueueDiscipline::Fcfs),
            "sjf" => Some(QueueDiscipline::Sjf),
            "priority_multiqueue" => Some(QueueDiscipline::PriorityMultiqueue),
            _ => None,
        }
    }
}

/// Priority queues only make sense under the meta-scheduler.
pub fn validate_combination(
    kind: SchedulerKind,
    queue: QueueDiscipline,
) -> Result<(), BaselineError> {
    if queue == QueueDiscipline::PriorityMultiqueue && kind != SchedulerKind::Diana {
        return Err(BaselineError::InvalidCombination {
            scheduler: kind.as_str(),
            queue: queue.as_str(),
        });
    }
    Ok(())
}

/// `sites[cursor]` and the advanced cursor. Ignores the job entirely.
pub fn rr_schedule(sites: &[SiteId], cursor: usize) -> Result<(SiteId, usize), BaselineError> {
    if sites.is_empty() {
        return Err(BaselineError::NoSites);
    }
    let i = cursor % sites.len();
    Ok((sites[i].clone(), (i + 1) % sites.len()))
}

/// Idle capacity in MFLOPS.
pub fn idle_capacity(site: &SiteLoad) -> f64 {
    site.node_power * f64::from(site.idle_nodes)
}

/// The capable site with the most idle capacity, ties to the smaller id.
/// Every site is queried, so `messages` grows by two per site whatever the
/// outcome. `None` if no site has enough nodes for the job.
pub fn flop_schedule(job: &JobSpec, sites: &[SiteLoad], messages: &mut u64) -> Option<SiteId> {
    *messages += 2 * sites.len() as u64;
    sites
        .iter()
        .filter(|s| s.node_count >= job.processors_required)
        .min_by(|a, b| {
            idle_capacity(b)
                .total_cmp(&idle_capacity(a))
                .then(a.site_id.cmp(&b.site_id))
        })
        .map(|s| s.site_id.clone())
}

fn sjf_cmp(a: &JobSpec, b: &JobSpec) -> Ordering {
    a.processors_required
        .cmp(&b.processors_required)
        .then(a.submit_time.total_cmp(&b.submit_time))
        .then(a.job_id.cmp(&b.job_id))
}

/// Ascending processor demand, then submission time, then id.
pub fn sjf_order(jobs: &[JobSpec]) -> Vec<JobSpec> {
    let mut out = jobs.to_vec();
    out.sort_by(sjf_cmp);
    out
}

pub fn fcfs_order(jobs: &[JobSpec]) -> Vec<JobSpec> {
    let mut out = jobs.to_vec();
    out.sort_by(|a, b| {
        a.submit_time
            .total_cmp(&b.submit_time)
            .then(a.job_id.cmp(&b.job_id))
    });
    out
}

/// The queued job the given discipline serves next.
pub fn next_job(queue: &QueueState, discipline: QueueDiscipline) -> Option<&QueuedJob> {
    let jobs = queue.order();
    match discipline {
        QueueDiscipline::PriorityMultiqueue => queue.head(),
        QueueDiscipline::Fcfs => jobs.iter().min_by(|a, b| {
            a.submit_time
                .total_cmp(&b.submit_time)
                .then(a.job_id.cmp(&b.job_id))
        }),
        QueueDiscipline::Sjf => jobs.iter().min_by(|a, b| {
            a.processors
                .cmp(&b.processors)
                .then(a.submit_time.total_cmp(&b.submit_time))
                .then(a.job_id.cmp(&b.job_id))
        }),
    }
}
