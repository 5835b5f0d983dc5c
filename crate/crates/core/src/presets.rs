//! Ready-made scenarios for the four reference workloads and the
//! congestion experiment.

use crate::baseline::{QueueDiscipline, SchedulerKind};
use crate::model::{JobKind, LinkParams};
use crate::scenario::{
    Burst, DemandDistribution, JobTemplate, NetworkSpec, Scenario, SiteSpec, TopologyPreset,
    UserSpec, WorkloadPreset, WorkloadSpec,
};

fn users(quotas: &[(&str, f64)]) -> Vec<UserSpec> {
    quotas
        .iter()
        .map(|(id, q)| UserSpec {
            id: (*id).into(),
            quota: *q,
        })
        .collect()
}

fn preset_workload(p: WorkloadPreset) -> WorkloadSpec {
    WorkloadSpec {
        preset: Some(p),
        jobs: None,
        bursts: vec![],
    }
}

fn uniform_links(bandwidth: f64) -> NetworkSpec {
    NetworkSpec {
        default: Some(LinkParams {
            bandwidth,
            latency: 0.0,
            background_load: 0.0,
        }),
        links: vec![],
    }
}

/// 1000 single-processor compute jobs in bulk bursts on the five-site
/// topology.
pub fn p1(scheduler: SchedulerKind, queue: QueueDiscipline) -> Scenario {
    let mut s = Scenario::new(scheduler, queue);
    s.label = format!("p1-{}", scheduler.as_str());
    s.topology = Some(TopologyPreset::FiveSite);
    s.users = users(&[("alice", 1.0), ("bob", 1.0), ("carol", 2.0), ("dave", 2.0)]);
    s.workload = preset_workload(WorkloadPreset::P1);
    s
}

/// Parallel jobs of four widths on five 40-node sites, all submitted at once.
pub fn p2(scheduler: SchedulerKind, queue: QueueDiscipline) -> Scenario {
    let mut s = Scenario::new(scheduler, queue);
    s.label = format!("p2-{}-{}", scheduler.as_str(), queue.as_str());
    s.topology = Some(TopologyPreset::Uniform {
        sites: 5,
        nodes: 40,
        node_power: 1.0,
    });
    s.users = users(&[("alice", 1.0)]);
    s.workload = preset_workload(WorkloadPreset::P2);
    s
}

/// 10 GB data-intensive jobs whose data lives on the first site; every link
/// has the given bandwidth.
pub fn p3(bandwidth: f64) -> Scenario {
    let mut s = Scenario::new(SchedulerKind::Diana, QueueDiscipline::PriorityMultiqueue);
    s.label = "p3".into();
    s.sites = (1..=5)
        .map(|i| SiteSpec::new(format!("site-{i}"), if i == 1 { 4 } else { 5 }, 1.0))
        .collect();
    s.network = uniform_links(bandwidth);
    s.users = users(&[("alice", 1.0)]);
    s.workload = preset_workload(WorkloadPreset::P3);
    s
}

/// Small jobs from one entry site over `sites` single-node sites.
pub fn p4(scheduler: SchedulerKind, sites: u32) -> Scenario {
    let queue = match scheduler {
        SchedulerKind::Diana => QueueDiscipline::PriorityMultiqueue,
        _ => QueueDiscipline::Fcfs,
    };
    let mut s = Scenario::new(scheduler, queue);
    s.label = format!("p4-{}", scheduler.as_str());
    s.topology = Some(TopologyPreset::Uniform {
        sites,
        nodes: 1,
        node_power: 1.0,
    });
    s.users = users(&[("alice", 1.0)]);
    s.workload = preset_workload(WorkloadPreset::P4);
    s
}

/// A one-node site fed at twice its service rate, next to an idle site
/// behind a slow link. The input data lives on the busy site, so cost-based
/// placement keeps jobs there; only congestion-driven migration moves them.
/// A bulk user with a small quota supplies most of the load.
pub fn congestion(migration: bool) -> Scenario {
    let mut s = Scenario::new(SchedulerKind::Diana, QueueDiscipline::PriorityMultiqueue);
    s.label = format!("congestion-{}", if migration { "on" } else { "off" });
    s.sites = vec![
        SiteSpec::new("site-1", 1, 1.0),
        SiteSpec::new("site-2", 2, 1.0),
    ];
    s.network = NetworkSpec {
        default: Some(LinkParams {
            bandwidth: 10.0,
            latency: 0.01,
            background_load: 0.0,
        }),
        links: vec![],
    };
    s.users = users(&[("bulk", 1.0), ("light", 3.0)]);
    let job = JobTemplate {
        compute_demand: 10.0,
        processors_required: 1,
        data_size: 2e8,
        data_site: None,
        kind: JobKind::DataIntensive,
        demand: DemandDistribution::Fixed,
    };
    let burst = |user: &str, time: f64, count: u32, spacing: f64| Burst {
        time,
        user: user.into(),
        site: "site-1".into(),
        count,
        spacing,
        template: job.clone(),
    };
    s.workload = WorkloadSpec {
        preset: None,
        jobs: None,
        bursts: vec![
            burst("bulk", 0.0, 90, 20.0 / 3.0),
            burst("light", 1.0, 30, 20.0),
        ],
    };
    s.diana.migration = migration;
    s
}
