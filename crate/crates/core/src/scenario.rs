//! Scenario files: sites, links, users, workload, and every scheduler knob.
//!
//! Scenarios are TOML documents. Unknown keys are rejected and every
//! validation error names the offending field. See `docs/scenario.md` for
//! the full grammar.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{validate_combination, QueueDiscipline, SchedulerKind};
use crate::cost::CostConfig;
use crate::discovery::DiscoveryConfig;
use crate::model::{JobKind, LinkParams, Network, SiteId, UserId, UserProfile, UserProfiles};
use crate::queue::QueueConfig;
use crate::scheduler::DianaConfig;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario field {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("scenario serialization failed: {0}")]
    Serialize(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSpec {
    pub id: SiteId,
    pub nodes: u32,
    /// MFLOPS per node.
    pub node_power: f64,
    /// When the site's meta-scheduler registers with its peers.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub join_time: f64,
    /// The meta-scheduler stops answering; the site keeps computing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crash_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejoin_time: Option<f64>,
    /// Graceful departure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shutdown_time: Option<f64>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl SiteSpec {
    pub fn new(id: impl Into<SiteId>, nodes: u32, node_power: f64) -> Self {
        SiteSpec {
            id: id.into(),
            nodes,
            node_power,
            join_time: 0.0,
            crash_time: None,
            rejoin_time: None,
            shutdown_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyPreset {
    /// One four-node site and four five-node sites on a heterogeneous WAN.
    FiveSite,
    /// `sites` identical sites named `site-01`, `site-02`, ...
    Uniform {
        sites: u32,
        nodes: u32,
        node_power: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: SiteId,
    pub to: SiteId,
    pub bandwidth: f64,
    #[serde(default)]
    pub latency: f64,
    #[serde(default)]
    pub background_load: f64,
    /// Also sets the reverse direction.
    #[serde(default = "yes")]
    pub symmetric: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    /// Used for every pair without an explicit link.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<LinkParams>,
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub id: UserId,
    pub quota: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandDistribution {
    #[default]
    Fixed,
    /// Exponential with the template's demand as mean.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobTemplate {
    /// MFLOP.
    pub compute_demand: f64,
    pub processors_required: u32,
    /// Bytes.
    #[serde(default)]
    pub data_size: f64,
    /// Defaults to the burst's submission site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_site: Option<SiteId>,
    pub kind: JobKind,
    #[serde(default)]
    pub demand: DemandDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Burst {
    pub time: f64,
    pub user: UserId,
    /// Site whose meta-scheduler receives the jobs.
    pub site: SiteId,
    pub count: u32,
    /// Seconds between consecutive submissions within the burst.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub spacing: f64,
    pub template: JobTemplate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorkloadPreset {
    P1,
    P2,
    P3,
    P4,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<WorkloadPreset>,
    /// Overrides the preset's job count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<u32>,
    pub bursts: Vec<Burst>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Smoothing factor of the rate estimators.
    pub rate_alpha: f64,
    /// Seconds between rate updates and congestion checks.
    pub rate_window: f64,
    /// Keep simulating at least this long even once every job is done.
    pub min_duration: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rate_alpha: 0.2,
            rate_window: 30.0,
            min_duration: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub label: String,
    pub scheduler: SchedulerKind,
    pub queue: QueueDiscipline,
    /// Simulated seconds after which the run is aborted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyPreset>,
    #[serde(default)]
    pub sites: Vec<SiteSpec>,
    #[serde(default)]
    pub network: NetworkSpec,
    pub users: Vec<UserSpec>,
    #[serde(default)]
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub queue_config: QueueConfig,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default)]
    pub diana: DianaConfig,
    #[serde(default)]
    pub discovery: DiscoveryConfig,
    #[serde(default)]
    pub sim: SimConfig,
}

/// Sites and links after expanding any topology preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub sites: Vec<SiteSpec>,
    pub network: Network,
}

impl Topology {
    pub fn site_ids(&self) -> Vec<SiteId> {
        self.sites.iter().map(|s| s.id.clone()).collect()
    }
}

fn link(bandwidth: f64, latency: f64) -> LinkParams {
    LinkParams {
        bandwidth,
        latency,
        background_load: 0.0,
    }
}

impl TopologyPreset {
    fn expand(&self) -> (Vec<SiteSpec>, Network) {
        match self {
            TopologyPreset::FiveSite => {
                let sites = (1..=5)
                    .map(|i| SiteSpec::new(format!("site-{i}"), if i == 1 { 4 } else { 5 }, 1.0))
                    .collect();
                let mut network = Network::new(Some(link(100.0, 0.02)));
                let pairs = [
                    ("site-1", "site-2", link(1000.0, 0.005)),
                    ("site-1", "site-5", link(45.0, 0.08)),
                    ("site-2", "site-3", link(155.0, 0.03)),
                    ("site-3", "site-4", link(1000.0, 0.005)),
                    ("site-4", "site-5", link(10.0, 0.12)),
                ];
                for (a, b, p) in pairs {
                    network.set_symmetric(a.into(), b.into(), p);
                }
                (sites, network)
            }
            TopologyPreset::Uniform {
                sites,
                nodes,
                node_power,
            } => {
                let specs = (1..=*sites)
                    .map(|i| SiteSpec::new(format!("site-{i:02}"), *nodes, *node_power))
                    .collect();
                (specs, Network::new(Some(link(100.0, 0.0))))
            }
        }
    }
}

impl Scenario {
    /// A scenario with one site per spec and everything else at defaults.
    pub fn new(scheduler: SchedulerKind, queue: QueueDiscipline) -> Self {
        Scenario {
            label: String::new(),
            scheduler,
            queue,
            duration_cap: None,
            topology: None,
            sites: Vec::new(),
            network: NetworkSpec::default(),
            users: Vec::new(),
            workload: WorkloadSpec::default(),
            queue_config: QueueConfig::default(),
            cost: CostConfig::default(),
            diana: DianaConfig::default(),
            discovery: DiscoveryConfig::default(),
            sim: SimConfig::default(),
        }
    }

    pub fn user_profiles(&self) -> UserProfiles {
        self.users
            .iter()
            .filter_map(|u| UserProfile::new(u.id.clone(), u.quota).ok())
            .collect()
    }

    /// Expands the topology preset and applies link overrides.
    pub fn topology(&self) -> Topology {
        let (mut sites, mut network) = match &self.topology {
            Some(p) => p.expand(),
            None => (Vec::new(), Network::new(None)),
        };
        sites.extend(self.sites.iter().cloned());
        sites.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(d) = self.network.default {
            network.set_default(Some(d));
        }
        for l in &self.network.links {
            let p = LinkParams {
                bandwidth: l.bandwidth,
                latency: l.latency,
                background_load: l.background_load,
            };
            if l.symmetric {
                network.set_symmetric(l.from.clone(), l.to.clone(), p);
            } else {
                network.set(l.from.clone(), l.to.clone(), p);
            }
        }
        Topology { sites, network }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        validate_combination(self.scheduler, self.queue)
            .map_err(|e| invalid("queue", e.to_string()))?;
        if let Some(cap) = self.duration_cap {
            if !(cap > 0.0) || !cap.is_finite() {
                return Err(invalid("duration_cap", format!("must be > 0, got {cap}")));
            }
        }
        if let Some(TopologyPreset::Uniform {
            sites,
            nodes,
            node_power,
        }) = &self.topology
        {
            if *sites < 1 || *nodes < 1 {
                return Err(invalid(
                    "topology.uniform",
                    "sites and nodes must be at least 1",
                ));
            }
            if !(*node_power > 0.0) || !node_power.is_finite() {
                return Err(invalid("topology.uniform.node_power", "must be > 0"));
            }
        }
        let topo = self.topology();
        self.validate_sites(&topo.sites)?;
        let ids: BTreeSet<&SiteId> = topo.sites.iter().map(|s| &s.id).collect();
        self.validate_network(&ids)?;
        let users = self.validate_users()?;
        self.validate_workload(&ids, &users)?;
        self.queue_config.validate().map_err(|e| match e {
            crate::queue::QueueError::InvalidConfig { field, reason } => {
                invalid(format!("queue_config.{field}"), reason)
            }
            other => invalid("queue_config", other.to_string()),
        })?;
        self.cost
            .validate()
            .map_err(|e| invalid("cost", e.to_string()))?;
        self.diana.validate().map_err(|e| invalid("diana", e))?;
        let d = &self.discovery;
        if !(d.echo_interval > 0.0) || !d.echo_interval.is_finite() {
            return Err(invalid("discovery.echo_interval", "must be > 0"));
        }
        if !(d.echo_timeout >= 0.0) || d.echo_timeout >= d.echo_interval {
            return Err(invalid(
                "discovery.echo_timeout",
                "must be >= 0 and shorter than echo_interval",
            ));
        }
        if d.retries < 1 {
            return Err(invalid("discovery.retries", "must be at least 1"));
        }
        let s = &self.sim;
        if !(s.rate_alpha > 0.0 && s.rate_alpha <= 1.0) {
            return Err(invalid("sim.rate_alpha", "must lie in (0, 1]"));
        }
        if !(s.rate_window > 0.0) || !s.rate_window.is_finite() {
            return Err(invalid("sim.rate_window", "must be > 0"));
        }
        if !(s.min_duration >= 0.0) || !s.min_duration.is_finite() {
            return Err(invalid("sim.min_duration", "must be >= 0"));
        }
        Ok(())
    }

    fn validate_sites(&self, sites: &[SiteSpec]) -> Result<(), ScenarioError> {
        if sites.is_empty() {
            return Err(invalid("sites", "at least one site is required"));
        }
        let mut seen = BTreeSet::new();
        for s in sites {
            let f = |name: &str| format!("sites[{}].{name}", s.id);
            if !seen.insert(&s.id) {
                return Err(invalid(f("id"), "duplicate site id"));
            }
            if s.nodes < 1 {
                return Err(invalid(f("nodes"), "must be at least 1"));
            }
            if !(s.node_power > 0.0) || !s.node_power.is_finite() {
                return Err(invalid(
                    f("node_power"),
                    format!("must be > 0, got {}", s.node_power),
                ));
            }
            if !(s.join_time >= 0.0) || !s.join_time.is_finite() {
                return Err(invalid(f("join_time"), "must be >= 0"));
            }
            let after = |t: Option<f64>, floor: f64, name: &str| match t {
                Some(t) if !(t >= floor) || !t.is_finite() => {
                    Err(invalid(f(name), format!("must be finite and >= {floor}")))
                }
                _ => Ok(()),
            };
            after(s.crash_time, s.join_time, "crash_time")?;
            after(s.shutdown_time, s.join_time, "shutdown_time")?;
            if let Some(r) = s.rejoin_time {
                let Some(c) = s.crash_time else {
                    return Err(invalid(f("rejoin_time"), "requires crash_time"));
                };
                after(Some(r), c, "rejoin_time")?;
            }
        }
        Ok(())
    }

    fn validate_network(&self, ids: &BTreeSet<&SiteId>) -> Result<(), ScenarioError> {
        let check = |field: &str, p: &LinkParams| -> Result<(), ScenarioError> {
            if !(p.bandwidth > 0.0) || !p.bandwidth.is_finite() {
                return Err(invalid(
                    format!("{field}.bandwidth"),
                    format!("must be > 0, got {}", p.bandwidth),
                ));
            }
            if !(p.latency >= 0.0) || !p.latency.is_finite() {
                return Err(invalid(format!("{field}.latency"), "must be >= 0"));
            }
            if !(0.0..1.0).contains(&p.background_load) {
                return Err(invalid(
                    format!("{field}.background_load"),
                    "must lie in [0, 1)",
                ));
            }
            Ok(())
        };
        if let Some(d) = &self.network.default {
            check("network.default", d)?;
        }
        for (i, l) in self.network.links.iter().enumerate() {
            let field = format!("network.links[{i}]");
            for (end, id) in [("from", &l.from), ("to", &l.to)] {
                if !ids.contains(id) {
                    return Err(invalid(
                        format!("{field}.{end}"),
                        format!("undefined site {id}"),
                    ));
                }
            }
            if l.from == l.to {
                return Err(invalid(field, "a link must join two different sites"));
            }
            check(
                &format!("network.links[{i}]"),
                &LinkParams {
                    bandwidth: l.bandwidth,
                    latency: l.latency,
                    background_load: l.background_load,
                },
            )?;
        }
        Ok(())
    }

    fn validate_users(&self) -> Result<BTreeSet<&UserId>, ScenarioError> {
        if self.users.is_empty() {
            return Err(invalid("users", "at least one user is required"));
        }
        let mut seen = BTreeSet::new();
        for u in &self.users {
            if !seen.insert(&u.id) {
                return Err(invalid(format!("users[{}].id", u.id), "duplicate user id"));
            }
            if !(u.quota > 0.0) || !u.quota.is_finite() {
                return Err(invalid(
                    format!("users[{}].quota", u.id),
                    format!("must be > 0, got {}", u.quota),
                ));
            }
        }
        Ok(seen)
    }

    fn validate_workload(
        &self,
        sites: &BTreeSet<&SiteId>,
        users: &BTreeSet<&UserId>,
    ) -> Result<(), ScenarioError> {
        let w = &self.workload;
        if w.preset.is_some() && !w.bursts.is_empty() {
            return Err(invalid(
                "workload",
                "give either a preset or bursts, not both",
            ));
        }
        if w.preset.is_none() && w.jobs.is_some() {
            return Err(invalid("workload.jobs", "only applies to presets"));
        }
        if w.jobs == Some(0) {
            return Err(invalid("workload.jobs", "must be at least 1"));
        }
        for (i, b) in w.bursts.iter().enumerate() {
            let f = |name: &str| format!("workload.bursts[{i}].{name}");
            if !(b.time >= 0.0) || !b.time.is_finite() {
                return Err(invalid(f("time"), "must be >= 0"));
            }
            if !(b.spacing >= 0.0) || !b.spacing.is_finite() {
                return Err(invalid(f("spacing"), "must be >= 0"));
            }
            if b.count < 1 {
                return Err(invalid(f("count"), "must be at least 1"));
            }
            if !users.contains(&b.user) {
                return Err(invalid(f("user"), format!("undefined user {}", b.user)));
            }
            if !sites.contains(&b.site) {
                return Err(invalid(f("site"), format!("undefined site {}", b.site)));
            }
            let t = &b.template;
            if let Some(d) = &t.data_site {
                if !sites.contains(d) {
                    return Err(invalid(
                        f("template.data_site"),
                        format!("undefined site {d}"),
                    ));
                }
            }
            if t.processors_required < 1 {
                return Err(invalid(
                    f("template.processors_required"),
                    "must be at least 1",
                ));
            }
            if !(t.compute_demand >= 0.0) || !t.compute_demand.is_finite() {
                return Err(invalid(f("template.compute_demand"), "must be >= 0"));
            }
            if !(t.data_size >= 0.0) || !t.data_size.is_finite() {
                return Err(invalid(f("template.data_size"), "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        toml::to_string(self).map_err(|e| ScenarioError::Serialize(e.to_string()))
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}
