//! Site cost estimates: computation, data transfer, network, and their
//! weighted aggregate.
//!
//! The formulas are minimal instantiations:
//!
//! ```text
//! compute  = demand / (power * min(t, nodes)) + queued / max(service_rate, 1e-9)
//! transfer = latency + bytes * 8 / (available_bandwidth * 1e6)      (0 if co-located)
//! network  = reference_bandwidth / available_bandwidth               (0 if co-located)
//! total    = w_c * compute + w_d * transfer + w_n * network
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    available_bandwidth, units, JobKind, JobSpec, Network, NetworkLink, SiteId, SiteLoad,
};

/// Reference bandwidth (Mbps) at which the network cost is 1.
pub const DEFAULT_REFERENCE_BANDWIDTH: f64 = 1000.0;

/// Guards the queue-delay division before any job has completed.
pub const SERVICE_RATE_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("site {to} is unreachable from {from}: no network link")]
    Unreachable { from: SiteId, to: SiteId },
    #[error("link {link_from}->{link_to} does not connect {from} and {to}")]
    WrongLink {
        from: SiteId,
        to: SiteId,
        link_from: SiteId,
        link_to: SiteId,
    },
    #[error("invalid cost weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub compute: f64,
    pub transfer: f64,
    pub network: f64,
}

impl CostWeights {
    pub fn new(compute: f64, transfer: f64, network: f64) -> Result<Self, CostError> {
        let w = CostWeights {
            compute,
            transfer,
            network,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let parts = [self.compute, self.transfer, self.network];
        if parts.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(CostError::InvalidWeights(format!(
                "weights must be finite and non-negative, got {:?}",
                parts
            )));
        }
        if parts.iter().sum::<f64>() <= 0.0 {
            return Err(CostError::InvalidWeights(
                "weights must not all be zero".into(),
            ));
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> CostWeights {
        CostWeights {
            compute: self.compute * k,
            transfer: self.transfer * k,
            network: self.network * k,
        }
    }
}

/// Weights per declared job category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightPresets {
    pub compute_intensive: CostWeights,
    pub data_intensive: CostWeights,
    pub mixed: CostWeights,
}

impl Default for WeightPresets {
    fn default() -> Self {
        WeightPresets {
            compute_intensive: CostWeights {
                compute: 1.0,
                transfer: 0.25,
                network: 0.25,
            },
            data_intensive: CostWeights {
                compute: 0.25,
                transfer: 1.0,
                network: 1.0,
            },
            mixed: CostWeights {
                compute: 1.0,
                transfer: 1.0,
                network: 1.0,
            },
        }
    }
}

impl WeightPresets {
    pub fn for_kind(&self, kind: JobKind) -> CostWeights {
        match kind {
            JobKind::ComputeIntensive => self.compute_intensive,
            JobKind::DataIntensive => self.data_intensive,
            JobKind::Mixed => self.mixed,
        }
    }
}

/// Tunables of the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    /// Mbps.
    pub reference_bandwidth: f64,
    pub weights: WeightPresets,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            reference_bandwidth: DEFAULT_REFERENCE_BANDWIDTH,
            weights: WeightPresets::default(),
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.reference_bandwidth > 0.0) || !self.reference_bandwidth.is_finite() {
            return Err(CostError::InvalidWeights(format!(
                "reference_bandwidth must be > 0, got {}",
                self.reference_bandwidth
            )));
        }
        self.weights.compute_intensive.validate()?;
        self.weights.data_intensive.validate()?;
        self.weights.mixed.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// Seconds.
    pub compute_cost: f64,
    /// Seconds.
    pub transfer_cost: f64,
    /// Dimensionless.
    pub network_cost: f64,
    /// Weighted aggregate.
    pub total: f64,
}

impl CostBreakdown {
    pub fn zero() -> Self {
        CostBreakdown {
            compute_cost: 0.0,
            transfer_cost: 0.0,
            network_cost: 0.0,
            total: 0.0,
        }
    }
}

/// Execution time on `site` plus the expected wait behind its queued jobs.
pub fn compute_cost(job: &JobSpec, site: &SiteLoad) -> f64 {
    let width = job.processors_required.min(site.node_count).max(1) as f64;
    let run = job.compute_demand / (site.node_power * width);
    let queued = site.queue_length() as f64;
    let delay = queued / site.service_rate.max(SERVICE_RATE_EPSILON);
    run + delay
}

/// Seconds to move the job's input from `source` to `dest`.
pub fn transfer_cost(
    job: &JobSpec,
    source: &SiteId,
    dest: &SiteId,
    link: Option<&NetworkLink>,
) -> Result<f64, CostError> {
    if source == dest {
        return Ok(0.0);
    }
    let link = check_link(source, dest, link)?;
    let bits = job.data_size * 8.0;
    Ok(link.latency + bits / (available_bandwidth(link) * units::MBPS))
}

/// Bandwidth-driven network cost, normalized so the reference bandwidth
/// costs 1. `None` means the endpoints are the same site.
pub fn network_cost(link: Option<&NetworkLink>, reference_bandwidth: f64) -> f64 {
    match link {
        None => 0.0,
        Some(link) => reference_bandwidth / available_bandwidth(link),
    }
}

/// Full breakdown for running `job` on `site`, with input data shipped from
/// `job.data_site` over `link`.
pub fn total_cost(
    job: &JobSpec,
    site: &SiteLoad,
    link: Option<&NetworkLink>,
    weights: &CostWeights,
    reference_bandwidth: f64,
) -> Result<CostBreakdown, CostError> {
    let compute = compute_cost(job, site);
    let transfer = transfer_cost(job, &job.data_site, &site.site_id, link)?;
    let network = if job.data_site == site.site_id {
        0.0
    } else {
        network_cost(link, reference_bandwidth)
    };
    let total = weights.compute * compute + weights.transfer * transfer + weights.network * network;
    Ok(CostBreakdown {
        compute_cost: compute,
        transfer_cost: transfer,
        network_cost: network,
        total,
    })
}

/// [`total_cost`] with the link looked up in `network`.
pub fn total_cost_in(
    job: &JobSpec,
    site: &SiteLoad,
    network: &Network,
    weights: &CostWeights,
    reference_bandwidth: f64,
) -> Result<CostBreakdown, CostError> {
    let link = network.link(&job.data_site, &site.site_id);
    total_cost(job, site, link.as_ref(), weights, reference_bandwidth)
}

fn check_link<'a>(
    source: &SiteId,
    dest: &SiteId,
    link: Option<&'a NetworkLink>,
) -> Result<&'a NetworkLink, CostError> {
    let link = link.ok_or_else(|| CostError::Unreachable {
        from: source.clone(),
        to: dest.clone(),
    })?;
    let forward = &link.from_site == source && &link.to_site == dest;
    let backward = &link.from_site == dest && &link.to_site == source;
    if !forward && !backward {
        return Err(CostError::WrongLink {
            from: source.clone(),
            to: dest.clone(),
            link_from: link.from_site.clone(),
            link_to: link.to_site.clone(),
        });
    }
    Ok(link)
}
