//! Shared domain types and unit conventions.
//!
//! Units are decimal throughout: 1 GB = 10^9 bytes, 1 Mbps = 10^6 bits/s,
//! 1 MFLOP = 10^6 floating-point operations. Durations are seconds.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::queue::QueueState;

pub mod units {
    pub const KB: f64 = 1e3;
    pub const MB: f64 = 1e6;
    pub const GB: f64 = 1e9;
    /// Bits per second in one Mbps.
    pub const MBPS: f64 = 1e6;
    /// FLOP in one MFLOP.
    pub const MFLOP: f64 = 1e6;

    pub fn gb_to_bytes(gb: f64) -> f64 {
        gb * GB
    }

    pub fn bytes_to_gb(bytes: f64) -> f64 {
        bytes / GB
    }

    pub fn mb_to_bytes(mb: f64) -> f64 {
        mb * MB
    }

    pub fn bytes_to_mb(bytes: f64) -> f64 {
        bytes / MB
    }

    pub fn mbps_to_bps(mbps: f64) -> f64 {
        mbps * MBPS
    }

    pub fn bps_to_mbps(bps: f64) -> f64 {
        bps / MBPS
    }

    pub fn mflop_to_flop(mflop: f64) -> f64 {
        mflop * MFLOP
    }

    pub fn flop_to_mflop(flop: f64) -> f64 {
        flop / MFLOP
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Job identifier. Ordering is numeric, which matches the lexical order of
/// the zero-padded display form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j{:07}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteId(pub String);

impl SiteId {
    pub fn new(id: impl Into<String>) -> Self {
        SiteId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SiteId {
    fn from(s: &str) -> Self {
        SiteId(s.to_string())
    }
}

impl From<String> for SiteId {
    fn from(s: String) -> Self {
        SiteId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_string())
    }
}

impl From<String> for UserId {
    fn from(s: String) -> Self {
        UserId(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    ComputeIntensive,
    DataIntensive,
    Mixed,
}

impl JobKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JobKind::ComputeIntensive => "compute_intensive",
            JobKind::DataIntensive => "data_intensive",
            JobKind::Mixed => "mixed",
        }
    }
}

/// An abstract job. The kind is a declared tag and is not inferred from the
/// demand figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub job_id: JobId,
    pub user_id: UserId,
    /// MFLOP.
    pub compute_demand: f64,
    pub processors_required: u32,
    /// Bytes.
    pub data_size: f64,
    pub data_site: SiteId,
    /// Seconds since simulation start.
    pub submit_time: f64,
    pub kind: JobKind,
}

impl JobSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.processors_required < 1 {
            return Err(invalid("processors_required", "must be at least 1"));
        }
        if !(self.compute_demand >= 0.0) || !self.compute_demand.is_finite() {
            return Err(invalid("compute_demand", "must be finite and >= 0"));
        }
        if !(self.data_size >= 0.0) || !self.data_size.is_finite() {
            return Err(invalid("data_size", "must be finite and >= 0"));
        }
        if !(self.submit_time >= 0.0) || !self.submit_time.is_finite() {
            return Err(invalid("submit_time", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: UserId,
    /// Jobs permitted per quota period; used as a static weight.
    pub quota: f64,
}

impl UserProfile {
    pub fn new(user_id: impl Into<UserId>, quota: f64) -> Result<Self, ModelError> {
        if !(quota > 0.0) || !quota.is_finite() {
            return Err(invalid("quota", format!("must be > 0, got {quota}")));
        }
        Ok(UserProfile {
            user_id: user_id.into(),
            quota,
        })
    }
}

/// Quota lookup by user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserProfiles {
    quotas: BTreeMap<UserId, f64>,
}

impl UserProfiles {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: UserProfile) {
        self.quotas.insert(profile.user_id, profile.quota);
    }

    pub fn quota(&self, user: &UserId) -> Option<f64> {
        self.quotas.get(user).copied()
    }

    pub fn len(&self) -> usize {
        self.quotas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotas.is_empty()
    }
}

impl FromIterator<UserProfile> for UserProfiles {
    fn from_iter<I: IntoIterator<Item = UserProfile>>(iter: I) -> Self {
        let mut profiles = UserProfiles::new();
        for p in iter {
            profiles.insert(p);
        }
        profiles
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLink {
    pub from_site: SiteId,
    pub to_site: SiteId,
    /// Mbps.
    pub bandwidth: f64,
    /// Seconds.
    pub latency: f64,
    /// Fraction of bandwidth consumed by competing traffic, in [0, 1).
    pub background_load: f64,
}

impl NetworkLink {
    pub fn new(
        from_site: impl Into<SiteId>,
        to_site: impl Into<SiteId>,
        bandwidth: f64,
        latency: f64,
        background_load: f64,
    ) -> Result<Self, ModelError> {
        let link = NetworkLink {
            from_site: from_site.into(),
            to_site: to_site.into(),
            bandwidth,
            latency,
            background_load,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(invalid(
                "bandwidth",
                format!("must be > 0, got {}", self.bandwidth),
            ));
        }
        if !(self.latency >= 0.0) || !self.latency.is_finite() {
            return Err(invalid(
                "latency",
                format!("must be >= 0, got {}", self.latency),
            ));
        }
        if !(0.0..1.0).contains(&self.background_load) {
            return Err(invalid(
                "background_load",
                format!("must lie in [0, 1), got {}", self.background_load),
            ));
        }
        Ok(())
    }
}

/// Bandwidth left over after competing traffic, in Mbps.
pub fn available_bandwidth(link: &NetworkLink) -> f64 {
    link.bandwidth * (1.0 - link.background_load)
}

/// Link parameters without endpoints, used for defaults and overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub bandwidth: f64,
    pub latency: f64,
    pub background_load: f64,
}

/// Inter-site links: an optional default plus directed per-pair overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Network {
    default: Option<LinkParams>,
    pairs: BTreeMap<(SiteId, SiteId), LinkParams>,
}

impl Network {
    pub fn new(default: Option<LinkParams>) -> Self {
        Network {
            default,
            pairs: BTreeMap::new(),
        }
    }

    pub fn set_default(&mut self, default: Option<LinkParams>) {
        self.default = default;
    }

    pub fn default_link(&self) -> Option<&LinkParams> {
        self.default.as_ref()
    }

    pub fn set(&mut self, from: SiteId, to: SiteId, params: LinkParams) {
        self.pairs.insert((from, to), params);
    }

    pub fn set_symmetric(&mut self, a: SiteId, b: SiteId, params: LinkParams) {
        self.pairs.insert((a.clone(), b.clone()), params);
        self.pairs.insert((b, a), params);
    }

    /// The link from `from` to `to`, or `None` when the sites are the same
    /// or no link (and no default) exists.
    pub fn link(&self, from: &SiteId, to: &SiteId) -> Option<NetworkLink> {
        if from == to {
            return None;
        }
        let params = self
            .pairs
            .get(&(from.clone(), to.clone()))
            .or(self.default.as_ref())?;
        Some(NetworkLink {
            from_site: from.clone(),
            to_site: to.clone(),
            bandwidth: params.bandwidth,
            latency: params.latency,
            background_load: params.background_load,
        })
    }
}

/// Exponentially weighted moving average of a rate in jobs/second. The first
/// sample initializes the estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimator {
    alpha: f64,
    value: f64,
    primed: bool,
}

impl RateEstimator {
    pub fn new(alpha: f64) -> Self {
        RateEstimator {
            alpha: alpha.clamp(0.0, 1.0),
            value: 0.0,
            primed: false,
        }
    }

    pub fn update(&mut self, sample: f64) -> f64 {
        let sample = sample.max(0.0);
        if self.primed {
            self.value = self.alpha * sample + (1.0 - self.alpha) * self.value;
        } else {
            self.value = sample;
            self.primed = true;
        }
        self.value
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// The load figures of a site that the cost model reads. This is what a
/// peer advertises when polled.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteLoad {
    pub site_id: SiteId,
    pub node_count: u32,
    /// MFLOPS per node.
    pub node_power: f64,
    pub idle_nodes: u32,
    pub local_queue_len: usize,
    pub diana_queue_len: usize,
    pub service_rate: f64,
}

impl SiteLoad {
    pub fn idle(site_id: impl Into<SiteId>, node_count: u32, node_power: f64) -> Self {
        SiteLoad {
            site_id: site_id.into(),
            node_count,
            node_power,
            idle_nodes: node_count,
            local_queue_len: 0,
            diana_queue_len: 0,
            service_rate: 0.0,
        }
    }

    pub fn queue_length(&self) -> usize {
        self.local_queue_len + self.diana_queue_len
    }
}

/// Per-site scheduling state: the local FCFS queue of allocated jobs and the
/// meta-scheduler queue from which jobs may still be exported.
#[derive(Debug, Clone)]
pub struct SiteState {
    pub site_id: SiteId,
    pub node_count: u32,
    pub node_power: f64,
    pub idle_nodes: u32,
    pub local_queue: VecDeque<JobId>,
    pub diana_queue: QueueState,
    pub arrival_rate: RateEstimator,
    pub service_rate: RateEstimator,
}

impl SiteState {
    pub fn new(
        site_id: impl Into<SiteId>,
        node_count: u32,
        node_power: f64,
        diana_queue: QueueState,
        alpha: f64,
    ) -> Result<Self, ModelError> {
        if node_count < 1 {
            return Err(invalid("node_count", "must be at least 1"));
        }
        if !(node_power > 0.0) || !node_power.is_finite() {
            return Err(invalid(
                "node_power",
                format!("must be > 0, got {node_power}"),
            ));
        }
        Ok(SiteState {
            site_id: site_id.into(),
            node_count,
            node_power,
            idle_nodes: node_count,
            local_queue: VecDeque::new(),
            diana_queue,
            arrival_rate: RateEstimator::new(alpha),
            service_rate: RateEstimator::new(alpha),
        })
    }

    pub fn load(&self) -> SiteLoad {
        SiteLoad {
            site_id: self.site_id.clone(),
            node_count: self.node_count,
            node_power: self.node_power,
            idle_nodes: self.idle_nodes,
            local_queue_len: self.local_queue.len(),
            diana_queue_len: self.diana_queue.len(),
            service_rate: self.service_rate.value(),
        }
    }
}
