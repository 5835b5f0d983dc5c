//! Per-job records, per-site utilization, run aggregates, and the event
//! trace.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::model::{JobId, SiteId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    Completed,
    FailedUnreachable,
    RejectedUnschedulable,
}

impl JobStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            JobStatus::Completed => "completed",
            JobStatus::FailedUnreachable => "failed_unreachable",
            JobStatus::RejectedUnschedulable => "rejected_unschedulable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "completed" => Some(JobStatus::Completed),
            "failed_unreachable" => Some(JobStatus::FailedUnreachable),
            "rejected_unschedulable" => Some(JobStatus::RejectedUnschedulable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub job_id: JobId,
    pub user: UserId,
    /// Where the job last landed; `None` if it never was placed.
    pub site: Option<SiteId>,
    pub submit: f64,
    /// Time of the latest placement decision.
    pub scheduled: Option<f64>,
    pub started: Option<f64>,
    pub completed: Option<f64>,
    /// Seconds spent moving input data, over all placements.
    pub transfer_time: f64,
    pub migrations: u32,
    pub status: JobStatus,
}

impl JobRecord {
    /// Meta-scheduler queue plus local queue, excluding transfers.
    pub fn queue_time(&self) -> Option<f64> {
        self.started.map(|s| s - self.submit - self.transfer_time)
    }

    pub fn exec_time(&self) -> Option<f64> {
        self.completed.map(|c| c - self.submit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteRecord {
    pub site_id: SiteId,
    pub nodes: u32,
    pub jobs_completed: u64,
    pub busy_node_seconds: f64,
    /// Busy node-seconds over `nodes * makespan`.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub label: String,
    pub scheduler: String,
    pub queue: String,
    pub seed: u64,
    pub workload_hash: String,
    pub trace_hash: String,
    pub jobs_submitted: u64,
    pub jobs_completed: u64,
    pub jobs_failed_unreachable: u64,
    pub jobs_rejected_unschedulable: u64,
    pub mean_exec_time: f64,
    pub total_exec_time: f64,
    pub mean_queue_time: f64,
    pub total_queue_time: f64,
    pub mean_transfer_time: f64,
    pub message_count: u64,
    pub messages_per_job: f64,
    pub migrations: u64,
    pub makespan: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub jobs: Vec<JobRecord>,
    pub sites: Vec<SiteRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    Submitted {
        job: JobId,
        site: SiteId,
    },
    Placed {
        job: JobId,
        site: SiteId,
        transfer: f64,
    },
    Enqueued {
        job: JobId,
        site: SiteId,
        priority: f64,
    },
    Allocated {
        job: JobId,
        site: SiteId,
    },
    Started {
        job: JobId,
        site: SiteId,
    },
    Completed {
        job: JobId,
        site: SiteId,
    },
    Migrated {
        job: JobId,
        from: SiteId,
        to: SiteId,
        priority: f64,
    },
    Rejected {
        job: JobId,
    },
    Failed {
        job: JobId,
    },
    Polled {
        site: SiteId,
        answered: usize,
    },
    Congested {
        site: SiteId,
        ratio: f64,
    },
    PeerJoined {
        site: SiteId,
    },
    PeerCrashed {
        site: SiteId,
    },
    PeerRejoined {
        site: SiteId,
    },
    PeerShutdown {
        site: SiteId,
    },
    PeerRemoved {
        site: SiteId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ", self.time)?;
        match &self.kind {
            TraceKind::Submitted { job, site } => write!(f, "submit {job} {site}"),
            TraceKind::Placed {
                job,
                site,
                transfer,
            } => write!(f, "place {job} {site} {transfer:?}"),
            TraceKind::Enqueued {
                job,
                site,
                priority,
            } => write!(f, "enqueue {job} {site} {priority:?}"),
            TraceKind::Allocated { job, site } => write!(f, "allocate {job} {site}"),
            TraceKind::Started { job, site } => write!(f, "start {job} {site}"),
            TraceKind::Completed { job, site } => write!(f, "complete {job} {site}"),
            TraceKind::Migrated {
                job,
                from,
                to,
                priority,
            } => {
                write!(f, "migrate {job} {from} {to} {priority:?}")
            }
            TraceKind::Rejected { job } => write!(f, "reject {job}"),
            TraceKind::Failed { job } => write!(f, "fail {job}"),
            TraceKind::Polled { site, answered } => write!(f, "poll {site} {answered}"),
            TraceKind::Congested { site, ratio } => write!(f, "congested {site} {ratio:?}"),
            TraceKind::PeerJoined { site } => write!(f, "join {site}"),
            TraceKind::PeerCrashed { site } => write!(f, "crash {site}"),
            TraceKind::PeerRejoined { site } => write!(f, "rejoin {site}"),
            TraceKind::PeerShutdown { site } => write!(f, "shutdown {site}"),
            TraceKind::PeerRemoved { site } => write!(f, "removed {site}"),
        }
    }
}

/// Hex SHA-256 over the lines.
pub fn hash_lines<I, T>(lines: I) -> String
where
    I: IntoIterator<Item = T>,
    T: fmt::Display,
{
    let mut h = Sha256::new();
    for line in lines {
        h.update(line.to_string().as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Aggregates over `jobs`; means are taken over completed jobs.
pub fn aggregate(jobs: &[JobRecord]) -> (u64, f64, f64, f64, f64, f64) {
    let done: Vec<&JobRecord> = jobs
        .iter()
        .filter(|j| j.status == JobStatus::Completed)
        .collect();
    let n = done.len() as u64;
    let total_exec: f64 = done.iter().filter_map(|j| j.exec_time()).sum();
    let total_queue: f64 = done.iter().filter_map(|j| j.queue_time()).sum();
    let total_transfer: f64 = done.iter().map(|j| j.transfer_time).sum();
    let mean = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
    (
        n,
        total_exec,
        mean(total_exec),
        total_queue,
        mean(total_queue),
        mean(total_transfer),
    )
}
