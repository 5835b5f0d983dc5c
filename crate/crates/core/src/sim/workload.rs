//! Expansion of bursts and named presets into concrete job lists.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::model::{units, JobId, JobKind, JobSpec, SiteId, UserId};
use crate::scenario::{Burst, DemandDistribution, JobTemplate, Scenario, Topology, WorkloadPreset};

/// A job together with the site whose meta-scheduler receives it.
#[derive(Debug, Clone, PartialEq)]
pub struct Submission {
    pub job: JobSpec,
    pub site: SiteId,
}

pub const P1_JOBS: u32 = 1000;
pub const P1_BURST: u32 = 50;
/// MFLOP, mean of the exponential demand.
pub const P1_MEAN_DEMAND: f64 = 60.0;
pub const P1_LOAD: f64 = 0.9;
pub const P2_JOBS: u32 = 100;
pub const P2_CLASSES: [u32; 4] = [8, 17, 26, 35];
pub const P2_INPUT_RANGES: [f64; 4] = [19999.0, 99999.0, 444444.0, 555555.0];
/// MFLOP per unit of input range.
pub const P2_DEMAND_PER_INPUT: f64 = 0.01;
pub const P3_JOBS: u32 = 20;
pub const P3_DATA_GB: f64 = 10.0;
pub const P3_DEMAND: f64 = 600.0;
pub const P4_JOBS_PER_SITE: u32 = 20;
pub const P4_DEMAND: f64 = 3.0;
pub const P4_DATA_MB: f64 = 1.0;
/// Seconds over which P4 jobs arrive.
pub const P4_WINDOW: f64 = 120.0;

fn template(
    demand: f64,
    t: u32,
    data: f64,
    data_site: Option<SiteId>,
    kind: JobKind,
) -> JobTemplate {
    JobTemplate {
        compute_demand: demand,
        processors_required: t,
        data_size: data,
        data_site,
        kind,
        demand: DemandDistribution::Fixed,
    }
}

fn single(time: f64, user: UserId, site: SiteId, template: JobTemplate) -> Burst {
    Burst {
        time,
        user,
        site,
        count: 1,
        spacing: 0.0,
        template,
    }
}

/// The bursts a preset stands for on the given sites and users.
pub fn preset_bursts(
    preset: WorkloadPreset,
    jobs: Option<u32>,
    topology: &Topology,
    users: &[UserId],
    rng: &mut ChaCha8Rng,
) -> Vec<Burst> {
    let sites = topology.site_ids();
    let user = |i: usize| users[i % users.len()].clone();
    match preset {
        WorkloadPreset::P1 => {
            let n = jobs.unwrap_or(P1_JOBS);
            let capacity: f64 = topology
                .sites
                .iter()
                .map(|s| f64::from(s.nodes) * s.node_power)
                .sum();
            let horizon = f64::from(n) * P1_MEAN_DEMAND / (P1_LOAD * capacity);
            let bursts = n.div_ceil(P1_BURST);
            let gap = horizon / f64::from(bursts);
            (0..bursts)
                .map(|b| {
                    let count = P1_BURST.min(n - b * P1_BURST);
                    let site = sites[rng.random_range(0..sites.len())].clone();
                    let mut t = template(
                        P1_MEAN_DEMAND,
                        1,
                        units::mb_to_bytes(10.0),
                        None,
                        JobKind::ComputeIntensive,
                    );
                    t.demand = DemandDistribution::Exponential;
                    Burst {
                        time: f64::from(b) * gap,
                        user: user(b as usize),
                        site,
                        count,
                        spacing: 0.0,
                        template: t,
                    }
                })
                .collect()
        }
        WorkloadPreset::P2 => {
            let n = jobs.unwrap_or(P2_JOBS);
            (0..n as usize)
                .map(|i| {
                    let class = rng.random_range(0..P2_CLASSES.len());
                    let demand = P2_INPUT_RANGES[class] * P2_DEMAND_PER_INPUT;
                    let t = template(
                        demand,
                        P2_CLASSES[class],
                        0.0,
                        None,
                        JobKind::ComputeIntensive,
                    );
                    single(0.0, user(i), sites[0].clone(), t)
                })
                .collect()
        }
        WorkloadPreset::P3 => {
            let n = jobs.unwrap_or(P3_JOBS);
            let data_site = sites[0].clone();
            (0..n as usize)
                .map(|i| {
                    let t = template(
                        P3_DEMAND,
                        1,
                        units::gb_to_bytes(P3_DATA_GB),
                        Some(data_site.clone()),
                        JobKind::DataIntensive,
                    );
                    single(0.0, user(i), data_site.clone(), t)
                })
                .collect()
        }
        WorkloadPreset::P4 => {
            let n = jobs.unwrap_or(P4_JOBS_PER_SITE * sites.len() as u32);
            let spacing = P4_WINDOW / f64::from(n);
            (0..n as usize)
                .map(|i| {
                    let t = template(
                        P4_DEMAND,
                        1,
                        units::mb_to_bytes(P4_DATA_MB),
                        None,
                        JobKind::ComputeIntensive,
                    );
                    single(i as f64 * spacing, user(i), sites[0].clone(), t)
                })
                .collect()
        }
    }
}

fn sample_demand(t: &JobTemplate, rng: &mut ChaCha8Rng) -> f64 {
    match t.demand {
        DemandDistribution::Fixed => t.compute_demand,
        DemandDistribution::Exponential if t.compute_demand > 0.0 => {
            let exp = Exp::new(1.0 / t.compute_demand).expect("positive rate");
            exp.sample(rng)
        }
        DemandDistribution::Exponential => 0.0,
    }
}

/// Expands bursts in listing order; ids are sequential from 1.
pub fn expand_bursts(bursts: &[Burst], rng: &mut ChaCha8Rng) -> Vec<Submission> {
    let mut out = Vec::new();
    for b in bursts {
        for k in 0..b.count {
            let t = &b.template;
            let job = JobSpec {
                job_id: JobId(out.len() as u64 + 1),
                user_id: b.user.clone(),
                compute_demand: sample_demand(t, rng),
                processors_required: t.processors_required,
                data_size: t.data_size,
                data_site: t.data_site.clone().unwrap_or_else(|| b.site.clone()),
                submit_time: b.time + f64::from(k) * b.spacing,
                kind: t.kind,
            };
            out.push(Submission {
                job,
                site: b.site.clone(),
            });
        }
    }
    out
}

/// The scenario's job list under `seed`.
pub fn generate_workload(scenario: &Scenario, topology: &Topology, seed: u64) -> Vec<Submission> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users: Vec<UserId> = {
        let mut u: Vec<UserId> = scenario.users.iter().map(|u| u.id.clone()).collect();
        u.sort();
        u
    };
    match scenario.workload.preset {
        Some(p) => {
            let bursts = preset_bursts(p, scenario.workload.jobs, topology, &users, &mut rng);
            expand_bursts(&bursts, &mut rng)
        }
        None => expand_bursts(&scenario.workload.bursts, &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{QueueDiscipline, SchedulerKind};
    use crate::scenario::{TopologyPreset, UserSpec, WorkloadSpec};

    fn scenario(preset: WorkloadPreset) -> Scenario {
        let mut s = Scenario::new(SchedulerKind::Diana, QueueDiscipline::Fcfs);
        s.topology = Some(TopologyPreset::FiveSite);
        s.users = vec![
            UserSpec {
                id: "u1".into(),
                quota: 1.0,
            },
            UserSpec {
                id: "u2".into(),
                quota: 2.0,
            },
        ];
        s.workload = WorkloadSpec {
            preset: Some(preset),
            jobs: None,
            bursts: vec![],
        };
        s
    }

    #[test]
    fn p1_has_1000_jobs() {
        let s = scenario(WorkloadPreset::P1);
        let jobs = generate_workload(&s, &s.topology(), 1);
        assert_eq!(jobs.len(), 1000);
        let ids: Vec<u64> = jobs.iter().map(|j| j.job.job_id.0).collect();
        assert_eq!(ids, (1..=1000).collect::<Vec<_>>());
        assert!(jobs.iter().all(|j| j.job.kind == JobKind::ComputeIntensive));
        let mean = jobs.iter().map(|j| j.job.compute_demand).sum::<f64>() / 1000.0;
        assert!(
            (mean - P1_MEAN_DEMAND).abs() < 0.15 * P1_MEAN_DEMAND,
            "{mean}"
        );
    }

    #[test]
    fn p2_uses_four_classes() {
        let s = scenario(WorkloadPreset::P2);
        let jobs = generate_workload(&s, &s.topology(), 3);
        assert_eq!(jobs.len(), P2_JOBS as usize);
        for c in P2_CLASSES {
            assert!(jobs.iter().any(|j| j.job.processors_required == c));
        }
        assert!(jobs
            .iter()
            .all(|j| P2_CLASSES.contains(&j.job.processors_required)));
    }

    #[test]
    fn p4_scales_with_sites() {
        let mut s = scenario(WorkloadPreset::P4);
        s.topology = Some(TopologyPreset::Uniform {
            sites: 10,
            nodes: 1,
            node_power: 1.0,
        });
        let jobs = generate_workload(&s, &s.topology(), 3);
        assert_eq!(jobs.len(), 200);
        assert!(jobs
            .iter()
            .all(|j| j.job.compute_demand == 3.0 && j.job.data_size == 1e6));
        assert!(jobs.last().unwrap().job.submit_time < P4_WINDOW);
    }

    #[test]
    fn same_seed_same_jobs() {
        let s = scenario(WorkloadPreset::P1);
        let t = s.topology();
        assert_eq!(generate_workload(&s, &t, 9), generate_workload(&s, &t, 9));
        assert_ne!(generate_workload(&s, &t, 9), generate_workload(&s, &t, 10));
    }

    #[test]
    fn bulk_burst_onto_preload() {
        // 1500 queued plus a burst of 100
        let mk = |time: f64, count: u32| Burst {
            time,
            user: "u1".into(),
            site: "site-1".into(),
            count,
            spacing: 0.0,
            template: template(1.0, 1, 0.0, None, JobKind::Mixed),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let jobs = expand_bursts(&[mk(0.0, 1500), mk(5.0, 100)], &mut rng);
        assert_eq!(jobs.len(), 1600);
        assert_eq!(jobs[1500].job.job_id, JobId(1501));
        assert_eq!(jobs[1500].job.submit_time, 5.0);
        let one = expand_bursts(&[mk(7.0, 1)], &mut rng);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].job.submit_time, 7.0);
    }
}
