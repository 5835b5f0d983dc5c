//! Per-site meta-scheduler queue with quota-weighted priorities.
//!
//! Every queued job carries a priority in `[-1, 1]` derived from its user's
//! share of the queue. With `n` the user's queued job count, `t` the job's
//! processor demand, `T` the processors demanded by all queued jobs, `q` the
//! user's quota and `Q` the quota sum over users with queued jobs:
//!
//! ```text
//! N = (q * T) / (Q * t)
//! Pr(n) = (N - n) / N   if n <= N
//!       = (N - n) / n   otherwise
//! ```
//!
//! All priorities are recomputed whenever the queue contents change, so the
//! order is a pure function of the queued multiset. Jobs are kept in one
//! global descending order; the priority bands are contiguous slices of it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{JobId, JobSpec, UserId, UserProfiles};

pub const DEFAULT_BAND_BOUNDARIES: [f64; 5] = [1.0, 0.5, 0.0, -0.5, -1.0];
pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const DEFAULT_BATCH_SIZE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueueError {
    #[error("priority domain error: {0}")]
    Domain(String),
    #[error("job {0} is already queued")]
    DuplicateJob(JobId),
    #[error("job {0} is not queued")]
    NotQueued(JobId),
    #[error("user {0} has no profile")]
    UnknownUser(UserId),
    #[error("invalid queue config {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

/// The quantities that determine one job's priority.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityInputs {
    /// Jobs of this user across all bands.
    pub n: u64,
    /// Processors required by this job.
    pub t: u32,
    /// Processors required by all queued jobs.
    pub total_processors: u64,
    pub quota: f64,
    /// Sum of quotas of the distinct users with queued jobs.
    pub quota_sum: f64,
    /// Jobs across all bands.
    pub queue_len: u64,
}

impl PriorityInputs {
    pub fn validate(&self) -> Result<(), QueueError> {
        let domain = |m: String| Err(QueueError::Domain(m));
        if self.n < 1 || self.n > self.queue_len {
            return domain(format!(
                "need 1 <= n <= L, got n={} L={}",
                self.n, self.queue_len
            ));
        }
        if self.t < 1 || u64::from(self.t) > self.total_processors {
            return domain(format!(
                "need 1 <= t <= T, got t={} T={}",
                self.t, self.total_processors
            ));
        }
        if !(self.quota > 0.0) || self.quota > self.quota_sum {
            return domain(format!(
                "need 0 < q <= Q, got q={} Q={}",
                self.quota, self.quota_sum
            ));
        }
        Ok(())
    }

    pub fn threshold(&self) -> Result<f64, QueueError> {
        threshold_n(self.quota, self.quota_sum, self.total_processors, self.t)
    }

    pub fn priority(&self) -> Result<f64, QueueError> {
        Ok(priority(self.n, self.threshold()?))
    }
}

/// `(q * T) / (Q * t)`: how many jobs this user may hold before the job's
/// priority turns negative.
pub fn threshold_n(
    quota: f64,
    quota_sum: f64,
    total_processors: u64,
    t: u32,
) -> Result<f64, QueueError> {
    if t == 0 {
        return Err(QueueError::Domain("t must be >= 1".into()));
    }
    if !(quota_sum > 0.0) {
        return Err(QueueError::Domain(format!(
            "Q must be > 0, got {quota_sum}"
        )));
    }
    if !(quota > 0.0) {
        return Err(QueueError::Domain(format!("q must be > 0, got {quota}")));
    }
    Ok((quota * total_processors as f64) / (quota_sum * f64::from(t)))
}

/// Priority of a job whose user holds `n` queued jobs against threshold `N`.
/// Lies in `[-1, 1]` and is non-negative exactly when `n <= N`.
pub fn priority(n: u64, threshold: f64) -> f64 {
    let n = n as f64;
    if n <= threshold {
        (threshold - n) / threshold
    } else {
        (threshold - n) / n
    }
}

/// `(arrival - service) / arrival`; an idle site (no arrivals) scores 0.
pub fn congestion_ratio(arrival_rate: f64, service_rate: f64) -> f64 {
    if arrival_rate <= 0.0 {
        return 0.0;
    }
    (arrival_rate - service_rate) / arrival_rate
}

/// Strictly above the threshold.
pub fn is_congested(ratio: f64, config: &QueueConfig) -> bool {
    ratio > config.thrs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationPolicy {
    /// Only jobs with priority below zero.
    NegativeOnly,
    /// Only jobs with priority strictly below the cutoff.
    Below(f64),
    /// The lowest-priority jobs regardless of sign.
    Any,
}

impl MigrationPolicy {
    pub fn cutoff(&self) -> f64 {
        match self {
            MigrationPolicy::NegativeOnly => 0.0,
            MigrationPolicy::Below(c) => *c,
            MigrationPolicy::Any => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueueConfig {
    pub thrs: f64,
    pub band_boundaries: Vec<f64>,
    pub batch_size: usize,
    pub migration_policy: MigrationPolicy,
}

impl Default for QueueConfig {
    fn default() -> Self {
        QueueConfig {
            thrs: DEFAULT_THRESHOLD,
            band_boundaries: DEFAULT_BAND_BOUNDARIES.to_vec(),
            batch_size: DEFAULT_BATCH_SIZE,
            migration_policy: MigrationPolicy::NegativeOnly,
        }
    }
}

impl QueueConfig {
    pub fn validate(&self) -> Result<(), QueueError> {
        if !(0.0..=1.0).contains(&self.thrs) {
            return Err(QueueError::InvalidConfig {
                field: "thrs",
                reason: format!("must lie in [0, 1], got {}", self.thrs),
            });
        }
        validate_boundaries(&self.band_boundaries)?;
        if self.batch_size < 1 {
            return Err(QueueError::InvalidConfig {
                field: "batch_size",
                reason: "must be at least 1".into(),
            });
        }
        if let MigrationPolicy::Below(c) = self.migration_policy {
            if !c.is_finite() {
                return Err(QueueError::InvalidConfig {
                    field: "migration_policy",
                    reason: format!("cutoff must be finite, got {c}"),
                });
            }
        }
        Ok(())
    }
}

fn validate_boundaries(b: &[f64]) -> Result<(), QueueError> {
    let bad = |reason: String| {
        Err(QueueError::InvalidConfig {
            field: "band_boundaries",
            reason,
        })
    };
    if b.len() < 2 {
        return bad(format!("need at least 2 cut-points, got {}", b.len()));
    }
    if b[0] != 1.0 || b[b.len() - 1] != -1.0 {
        return bad("must start at 1 and end at -1".into());
    }
    if b.windows(2).any(|w| !(w[0] > w[1])) {
        return bad(format!("must be strictly descending, got {b:?}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueuedJob {
    pub job_id: JobId,
    pub user_id: UserId,
    pub processors: u32,
    pub submit_time: f64,
    pub priority: f64,
}

/// Descending priority, then earlier submission, then smaller id.
pub fn queue_order(a: &QueuedJob, b: &QueuedJob) -> Ordering {
    b.priority
        .total_cmp(&a.priority)
        .then(a.submit_time.total_cmp(&b.submit_time))
        .then(a.job_id.cmp(&b.job_id))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct UserAggregate {
    jobs: u64,
    quota: f64,
}

/// Snapshot of the aggregates that feed the priority rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueAggregates {
    pub per_user: BTreeMap<UserId, u64>,
    pub total_processors: u64,
    pub quota_sum: f64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    boundaries: Vec<f64>,
    order: Vec<QueuedJob>,
    ids: BTreeSet<JobId>,
    users: BTreeMap<UserId, UserAggregate>,
    total_processors: u64,
}

impl Default for QueueState {
    fn default() -> Self {
        QueueState::new(DEFAULT_BAND_BOUNDARIES.to_vec()).expect("default bands are valid")
    }
}

impl QueueState {
    pub fn new(band_boundaries: Vec<f64>) -> Result<Self, QueueError> {
        validate_boundaries(&band_boundaries)?;
        Ok(QueueState {
            boundaries: band_boundaries,
            order: Vec::new(),
            ids: BTreeSet::new(),
            users: BTreeMap::new(),
            total_processors: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, job_id: JobId) -> bool {
        self.ids.contains(&job_id)
    }

    pub fn get(&self, job_id: JobId) -> Option<&QueuedJob> {
        if !self.contains(job_id) {
            return None;
        }
        self.order.iter().find(|j| j.job_id == job_id)
    }

    /// All queued jobs in global descending order.
    pub fn order(&self) -> &[QueuedJob] {
        &self.order
    }

    pub fn head(&self) -> Option<&QueuedJob> {
        self.order.first()
    }

    pub fn band_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Band holding `priority`. Band `i` spans `[b[i+1], b[i])`, with the top
    /// band closed at 1 and the bottom band extended down to -1.
    pub fn band_index(&self, priority: f64) -> usize {
        let last = self.band_count() - 1;
        (0..last)
            .find(|&i| priority >= self.boundaries[i + 1])
            .unwrap_or(last)
    }

    pub fn bands(&self) -> Vec<&[QueuedJob]> {
        let mut out = Vec::with_capacity(self.band_count());
        let mut start = 0;
        for band in 0..self.band_count() {
            let end = start
                + self.order[start..]
                    .iter()
                    .take_while(|j| self.band_index(j.priority) == band)
                    .count();
            out.push(&self.order[start..end]);
            start = end;
        }
        out
    }

    pub fn aggregates(&self) -> QueueAggregates {
        QueueAggregates {
            per_user: self
                .users
                .iter()
                .map(|(u, a)| (u.clone(), a.jobs))
                .collect(),
            total_processors: self.total_processors,
            quota_sum: self.quota_sum(),
            len: self.order.len() as u64,
        }
    }

    fn quota_sum(&self) -> f64 {
        self.users.values().map(|a| a.quota).sum()
    }

    /// Inputs that determine the priority of a queued job.
    pub fn priority_inputs(&self, job_id: JobId) -> Option<PriorityInputs> {
        let job = self.get(job_id)?;
        let agg = self.users.get(&job.user_id)?;
        Some(PriorityInputs {
            n: agg.jobs,
            t: job.processors,
            total_processors: self.total_processors,
            quota: agg.quota,
            quota_sum: self.quota_sum(),
            queue_len: self.order.len() as u64,
        })
    }

    /// Adds a job, recomputes every priority, and returns the new job's.
    pub fn enqueue(&mut self, job: &JobSpec, users: &UserProfiles) -> Result<f64, QueueError> {
        if self.contains(job.job_id) {
            return Err(QueueError::DuplicateJob(job.job_id));
        }
        let quota = users
            .quota(&job.user_id)
            .ok_or_else(|| QueueError::UnknownUser(job.user_id.clone()))?;
        if job.processors_required == 0 {
            return Err(QueueError::Domain("t must be >= 1".into()));
        }
        let agg = self
            .users
            .entry(job.user_id.clone())
            .or_insert(UserAggregate { jobs: 0, quota });
        agg.jobs += 1;
        agg.quota = quota;
        self.total_processors += u64::from(job.processors_required);
        self.ids.insert(job.job_id);
        self.order.push(QueuedJob {
            job_id: job.job_id,
            user_id: job.user_id.clone(),
            processors: job.processors_required,
            submit_time: job.submit_time,
            priority: 0.0,
        });
        self.reprioritize();
        Ok(self.get(job.job_id).map(|j| j.priority).unwrap_or(0.0))
    }

    /// Removes a job and recomputes the remaining priorities.
    pub fn remove(&mut self, job_id: JobId) -> Result<QueuedJob, QueueError> {
        if !self.ids.remove(&job_id) {
            return Err(QueueError::NotQueued(job_id));
        }
        let pos = self
            .order
            .iter()
            .position(|j| j.job_id == job_id)
            .expect("id index and order agree");
        let job = self.order.remove(pos);
        self.total_processors -= u64::from(job.processors);
        if let Some(agg) = self.users.get_mut(&job.user_id) {
            agg.jobs -= 1;
            if agg.jobs == 0 {
                self.users.remove(&job.user_id);
            }
        }
        self.reprioritize();
        Ok(job)
    }

    /// Removes and returns the highest-priority job.
    pub fn pop_head(&mut self) -> Option<QueuedJob> {
        let id = self.head()?.job_id;
        self.remove(id).ok()
    }

    /// Recomputes every priority from the current aggregates and restores
    /// the band order. Idempotent.
    pub fn reprioritize(&mut self) {
        let quota_sum = self.quota_sum();
        let total = self.total_processors;
        for job in &mut self.order {
            let agg = self.users[&job.user_id];
            let threshold = threshold_n(agg.quota, quota_sum, total, job.processors)
                .expect("queued jobs satisfy the priority invariants");
            job.priority = priority(agg.jobs, threshold);
        }
        self.order.sort_by(queue_order);
    }

    /// Replaces stored quotas with the given profiles, then reprioritizes.
    pub fn refresh_quotas(&mut self, users: &UserProfiles) -> Result<(), QueueError> {
        for (user, agg) in self.users.iter_mut() {
            agg.quota = users
                .quota(user)
                .ok_or_else(|| QueueError::UnknownUser(user.clone()))?;
        }
        self.reprioritize();
        Ok(())
    }

    /// Up to `batch_size` jobs from the tail of the order, lowest priority
    /// first, restricted to those below the policy cutoff.
    pub fn migration_candidates(&self, batch_size: usize, policy: MigrationPolicy) -> Vec<JobId> {
        let cutoff = policy.cutoff();
        self.order
            .iter()
            .rev()
            .take_while(|j| j.priority < cutoff)
            .take(batch_size)
            .map(|j| j.job_id)
            .collect()
    }

    /// Queued jobs that would be served before a newly arriving job with the
    /// given priority. Equal priorities go first since they were submitted
    /// earlier.
    pub fn jobs_ahead(&self, priority: f64) -> usize {
        self.order.partition_point(|j| j.priority >= priority)
    }
}
