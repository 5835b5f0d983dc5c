//! The event loop.
//!
//! Job flow: a submission reaches its entry site's meta-scheduler, which
//! picks a destination (minimum cost for DIANA, cyclic for round robin,
//! most idle capacity for FLOP-greedy). Input data is shipped from the data
//! site, then the job joins the destination's meta-scheduler queue. Whenever
//! the local queue is empty the queue discipline hands the next job to the
//! local scheduler, which starts jobs FCFS as nodes free up. Under DIANA a
//! periodic check exports low-priority batches from congested sites.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::baseline::{flop_schedule, next_job, rr_schedule, SchedulerKind};
use crate::cost::{transfer_cost, CostError};
use crate::discovery::PeerRegistry;
use crate::model::{JobId, JobSpec, Network, NetworkLink, SiteId, SiteState, UserProfiles};
use crate::queue::{congestion_ratio, is_congested, QueueState};
use crate::scenario::{Scenario, ScenarioError, SiteSpec, Topology};
use crate::scheduler::{
    migrate_batch, on_allocation, poll_peers, project_snapshot, record_placement, schedule,
    snapshot_of, MigrationDecision, PeerSnapshot, PollProbe, ScheduleError,
};

use super::event::{EventKind, EventQueue};
use super::metrics::{
    aggregate, hash_lines, JobRecord, JobStatus, RunMetrics, SiteRecord, Summary, TraceEvent,
    TraceKind,
};
use super::workload::{generate_workload, Submission};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("run exceeded its duration cap of {cap} s with {pending} jobs unfinished")]
    DurationCap { cap: f64, pending: usize },
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub trace: Vec<TraceEvent>,
}

/// Completion time of moving `job`'s input from `src` to `dst` starting at
/// `now`. Transfers never contend with each other.
pub fn simulate_transfer(
    job: &JobSpec,
    src: &SiteId,
    dst: &SiteId,
    link: Option<&NetworkLink>,
    now: f64,
) -> Result<f64, CostError> {
    Ok(now + transfer_cost(job, src, dst, link)?)
}

struct SiteRt {
    state: SiteState,
    meta_up: bool,
    arrivals: u64,
    services: u64,
    busy: f64,
    completed: u64,
    cache: BTreeMap<SiteId, PeerSnapshot>,
    last_poll: Option<f64>,
}

struct JobRt {
    spec: JobSpec,
    entry: usize,
    site: Option<usize>,
    scheduled: Option<f64>,
    started: Option<f64>,
    completed: Option<f64>,
    transfer_time: f64,
    migrations: u32,
    status: Option<JobStatus>,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    network: Network,
    users: UserProfiles,
    site_specs: Vec<SiteSpec>,
    site_ids: Vec<SiteId>,
    index: BTreeMap<SiteId, usize>,
    sites: Vec<SiteRt>,
    jobs: Vec<JobRt>,
    job_index: BTreeMap<JobId, usize>,
    events: EventQueue,
    registry: PeerRegistry,
    now: f64,
    messages: u64,
    rr_cursor: usize,
    pending: usize,
    lifecycle_pending: usize,
    max_nodes: u32,
    trace: Vec<TraceEvent>,
}

/// Runs `scenario` under `seed`. Identical inputs give identical outputs.
pub fn run(scenario: &Scenario, seed: u64) -> Result<RunOutput, SimError> {
    scenario.validate()?;
    let topology = scenario.topology();
    let workload = generate_workload(scenario, &topology, seed);
    run_workload(scenario, &topology, workload, seed)
}

/// Runs a pre-generated workload.
pub fn run_workload(
    scenario: &Scenario,
    topology: &Topology,
    workload: Vec<Submission>,
    seed: u64,
) -> Result<RunOutput, SimError> {
    let workload_hash = hash_lines(workload.iter().map(|s| {
        let j = &s.job;
        format!(
            "{} {} {} {:?} {} {:?} {} {:?} {}",
            j.job_id,
            j.user_id,
            s.site,
            j.compute_demand,
            j.processors_required,
            j.data_size,
            j.data_site,
            j.submit_time,
            j.kind.as_str()
        )
    }));
    let mut engine = Engine::new(scenario, topology, workload)?;
    engine.run()?;
    Ok(engine.finish(seed, workload_hash))
}

impl<'a> Engine<'a> {
    fn new(
        scenario: &'a Scenario,
        topology: &Topology,
        workload: Vec<Submission>,
    ) -> Result<Self, SimError> {
        let site_ids = topology.site_ids();
        let index: BTreeMap<SiteId, usize> = site_ids.iter().cloned().zip(0..).collect();
        let mut sites = Vec::new();
        for s in &topology.sites {
            let queue =
                QueueState::new(scenario.queue_config.band_boundaries.clone()).map_err(|e| {
                    ScenarioError::Invalid {
                        field: "queue_config.band_boundaries".into(),
                        reason: e.to_string(),
                    }
                })?;
            let state = SiteState::new(
                s.id.clone(),
                s.nodes,
                s.node_power,
                queue,
                scenario.sim.rate_alpha,
            )
            .map_err(|e| ScenarioError::Invalid {
                field: format!("sites[{}]", s.id),
                reason: e.to_string(),
            })?;
            sites.push(SiteRt {
                state,
                meta_up: true,
                arrivals: 0,
                services: 0,
                busy: 0.0,
                completed: 0,
                cache: BTreeMap::new(),
                last_poll: None,
            });
        }
        let mut jobs = Vec::with_capacity(workload.len());
        for sub in workload {
            let entry = *index.get(&sub.site).ok_or_else(|| ScenarioError::Invalid {
                field: "workload".into(),
                reason: format!("undefined site {}", sub.site),
            })?;
            jobs.push(JobRt {
                spec: sub.job,
                entry,
                site: None,
                scheduled: None,
                started: None,
                completed: None,
                transfer_time: 0.0,
                migrations: 0,
                status: None,
            });
        }
        let job_index = jobs
            .iter()
            .enumerate()
            .map(|(i, j)| (j.spec.job_id, i))
            .collect();
        let max_nodes = topology.sites.iter().map(|s| s.nodes).max().unwrap_or(0);
        let pending = jobs.len();
        Ok(Engine {
            scenario,
            network: topology.network.clone(),
            users: scenario.user_profiles(),
            site_specs: topology.sites.clone(),
            site_ids,
            index,
            sites,
            jobs,
            job_index,
            events: EventQueue::new(),
            registry: PeerRegistry::new(scenario.discovery),
            now: 0.0,
            messages: 0,
            rr_cursor: 0,
            pending,
            lifecycle_pending: 0,
            max_nodes,
            trace: Vec::new(),
        })
    }

    fn diana(&self) -> bool {
        self.scenario.scheduler == SchedulerKind::Diana
    }

    fn log(&mut self, kind: TraceKind) {
        self.trace.push(TraceEvent {
            time: self.now,
            kind,
        });
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time >= self.now, "event scheduled in the past");
        if kind.is_lifecycle() {
            self.lifecycle_pending += 1;
        }
        self.events.push(time, kind);
    }

    fn done(&self) -> bool {
        self.pending == 0
            && self.lifecycle_pending == 0
            && self.now >= self.scenario.sim.min_duration
    }

    fn run(&mut self) -> Result<(), SimError> {
        // periodic work goes first so that rate estimates are fresh for
        // submissions at the same instant
        self.push(self.scenario.sim.rate_window, EventKind::CongestionCheck);
        if self.diana() {
            self.push(self.scenario.discovery.echo_interval, EventKind::EchoTick);
        }
        for i in 0..self.jobs.len() {
            let t = self.jobs[i].spec.submit_time;
            self.push(t, EventKind::JobSubmit { job: i });
        }
        for (i, s) in self.site_specs.clone().iter().enumerate() {
            if s.join_time == 0.0 {
                self.registry.register(s.id.clone(), 0.0);
                self.log(TraceKind::PeerJoined { site: s.id.clone() });
            } else {
                self.push(s.join_time, EventKind::SiteJoin { site: i });
            }
            if let Some(t) = s.crash_time {
                self.push(t, EventKind::SiteCrash { site: i });
            }
            if let Some(t) = s.rejoin_time {
                self.push(t, EventKind::SiteRejoin { site: i });
            }
            if let Some(t) = s.shutdown_time {
                self.push(t, EventKind::SiteShutdown { site: i });
            }
        }

        while !self.done() {
            let Some(ev) = self.events.pop() else { break };
            if let Some(cap) = self.scenario.duration_cap {
                if ev.time > cap {
                    return Err(SimError::DurationCap {
                        cap,
                        pending: self.pending,
                    });
                }
            }
            debug_assert!(ev.time >= self.now);
            self.now = ev.time;
            if ev.kind.is_lifecycle() {
                self.lifecycle_pending -= 1;
            }
            self.handle(ev.kind);
        }
        Ok(())
    }

    fn handle(&mut self, kind: EventKind) {
        match kind {
            EventKind::JobSubmit { job } => self.submit(job),
            EventKind::TransferComplete { job, site } => self.arrive(job, site),
            EventKind::JobComplete { job, site } => self.complete(job, site),
            EventKind::EchoTick => {
                let d = self.scenario.discovery;
                self.push(self.now + d.echo_timeout, EventKind::EchoCollect);
                self.push(self.now + d.echo_interval, EventKind::EchoTick);
            }
            EventKind::EchoCollect => self.echo_collect(),
            EventKind::CongestionCheck => {
                self.congestion_check();
                self.push(
                    self.now + self.scenario.sim.rate_window,
                    EventKind::CongestionCheck,
                );
            }
            EventKind::SiteJoin { site } | EventKind::SiteRejoin { site } => {
                self.sites[site].meta_up = true;
                let id = self.site_ids[site].clone();
                self.registry.register(id.clone(), self.now);
                let kind = if matches!(kind, EventKind::SiteJoin { .. }) {
                    TraceKind::PeerJoined { site: id }
                } else {
                    TraceKind::PeerRejoined { site: id }
                };
                self.log(kind);
            }
            EventKind::SiteCrash { site } => {
                self.sites[site].meta_up = false;
                let id = self.site_ids[site].clone();
                self.log(TraceKind::PeerCrashed { site: id });
            }
            EventKind::SiteShutdown { site } => {
                self.sites[site].meta_up = false;
                let id = self.site_ids[site].clone();
                self.registry.deregister(&id, self.now);
                self.log(TraceKind::PeerShutdown { site: id });
            }
        }
    }

    fn terminate(&mut self, job: usize, status: JobStatus) {
        self.jobs[job].status = Some(status);
        self.pending -= 1;
        let id = self.jobs[job].spec.job_id;
        let kind = match status {
            JobStatus::RejectedUnschedulable => TraceKind::Rejected { job: id },
            JobStatus::FailedUnreachable => TraceKind::Failed { job: id },
            JobStatus::Completed => unreachable!("completion is logged by complete()"),
        };
        self.log(kind);
    }

    fn submit(&mut self, job: usize) {
        let entry = self.jobs[job].entry;
        let id = self.jobs[job].spec.job_id;
        self.log(TraceKind::Submitted {
            job: id,
            site: self.site_ids[entry].clone(),
        });
        let t = self.jobs[job].spec.processors_required;
        if t > self.max_nodes {
            self.terminate(job, JobStatus::RejectedUnschedulable);
            return;
        }
        let dest = match self.scenario.scheduler {
            SchedulerKind::Diana => match self.diana_choose(job, entry) {
                Ok(dest) => dest,
                Err(ScheduleError::Unschedulable { .. }) => {
                    self.terminate(job, JobStatus::RejectedUnschedulable);
                    return;
                }
                Err(ScheduleError::Unreachable { .. }) => {
                    self.terminate(job, JobStatus::FailedUnreachable);
                    return;
                }
            },
            SchedulerKind::RoundRobin => {
                let mut pick = None;
                for _ in 0..self.site_ids.len() {
                    let (site, cursor) = rr_schedule(&self.site_ids, self.rr_cursor)
                        .expect("sites are validated nonempty");
                    self.rr_cursor = cursor;
                    let i = self.index[&site];
                    if self.sites[i].state.node_count >= t {
                        pick = Some(i);
                        break;
                    }
                }
                pick.expect("some site is wide enough")
            }
            SchedulerKind::FlopGreedy => {
                let loads: Vec<_> = self.sites.iter().map(|s| s.state.load()).collect();
                let site = flop_schedule(&self.jobs[job].spec, &loads, &mut self.messages)
                    .expect("some site is wide enough");
                self.index[&site]
            }
        };
        self.place(job, dest);
    }

    /// Refreshes `site`'s snapshot cache if it is older than the poll
    /// interval, then returns the snapshots of peers still registered.
    fn peers_for(&mut self, site: usize) -> Vec<PeerSnapshot> {
        let id = self.site_ids[site].clone();
        if !self.sites[site].meta_up || !self.registry.is_alive(&id) {
            return Vec::new();
        }
        let interval = self.scenario.diana.poll_interval;
        let stale = match self.sites[site].last_poll {
            None => true,
            Some(t) => self.now - t >= interval,
        };
        if stale {
            let probe = PollProbe::load_only();
            let answers = self.poll(site, &probe);
            let rt = &mut self.sites[site];
            rt.cache = answers
                .into_iter()
                .map(|s| (s.site_id.clone(), s))
                .collect();
            rt.last_poll = Some(self.now);
        }
        self.sites[site]
            .cache
            .values()
            .filter(|s| self.registry.is_alive(&s.site_id))
            .map(|s| project_snapshot(s, self.now))
            .collect()
    }

    /// Asks the registry for peers and polls each with `probe`.
    fn poll(&mut self, site: usize, probe: &PollProbe) -> Vec<PeerSnapshot> {
        let id = self.site_ids[site].clone();
        let listed = self.registry.list_peers(&id);
        self.messages += 2;
        let now = self.now;
        let (sites, index, network, cost) =
            (&self.sites, &self.index, &self.network, &self.scenario.cost);
        let answers = poll_peers(
            &id,
            &listed,
            now,
            |peer| {
                let rt = &sites[index[peer]];
                rt.meta_up
                    .then(|| snapshot_of(&rt.state, probe, network, cost, now))
            },
            &mut self.messages,
        );
        self.log(TraceKind::Polled {
            site: id,
            answered: answers.len(),
        });
        answers
    }

    fn diana_choose(&mut self, job: usize, entry: usize) -> Result<usize, ScheduleError> {
        let peers = self.peers_for(entry);
        let local = self.sites[entry].state.load();
        let decision = schedule(
            &self.jobs[job].spec,
            &local,
            &peers,
            &self.network,
            &self.scenario.cost,
            self.now,
            self.scenario.diana.max_snapshot_age(),
        )?;
        let dest = self.index[&decision.chosen_site];
        if dest != entry {
            let processors = self.jobs[job].spec.processors_required;
            if let Some(s) = self.sites[entry].cache.get_mut(&decision.chosen_site) {
                record_placement(s, processors);
            }
        }
        Ok(dest)
    }

    /// Sends the job's input to `dest`; the job joins `dest`'s queue when
    /// the transfer completes.
    fn place(&mut self, job: usize, dest: usize) {
        let spec = &self.jobs[job].spec;
        let dest_id = self.site_ids[dest].clone();
        let link = self.network.link(&spec.data_site, &dest_id);
        match simulate_transfer(spec, &spec.data_site, &dest_id, link.as_ref(), self.now) {
            Ok(done) => {
                let duration = done - self.now;
                let rt = &mut self.jobs[job];
                rt.site = Some(dest);
                rt.scheduled = Some(self.now);
                rt.transfer_time += duration;
                let id = rt.spec.job_id;
                self.log(TraceKind::Placed {
                    job: id,
                    site: dest_id,
                    transfer: duration,
                });
                if duration == 0.0 {
                    self.arrive(job, dest);
                } else {
                    self.push(done, EventKind::TransferComplete { job, site: dest });
                }
            }
            Err(_) => self.terminate(job, JobStatus::FailedUnreachable),
        }
    }

    fn arrive(&mut self, job: usize, site: usize) {
        let spec = &self.jobs[job].spec;
        let priority = self.sites[site]
            .state
            .diana_queue
            .enqueue(spec, &self.users)
            .expect("validated scenario jobs are enqueueable");
        self.sites[site].arrivals += 1;
        self.log(TraceKind::Enqueued {
            job: spec.job_id,
            site: self.site_ids[site].clone(),
            priority,
        });
        self.dispatch(site);
    }

    /// Starts local jobs FCFS while nodes allow, and refills the local queue
    /// from the meta-scheduler queue whenever it empties.
    fn dispatch(&mut self, site: usize) {
        let discipline = self.scenario.queue;
        loop {
            while let Some(&job_id) = self.sites[site].state.local_queue.front() {
                let job = self.job_index[&job_id];
                let t = self.jobs[job].spec.processors_required;
                let rt = &mut self.sites[site];
                assert!(
                    t <= rt.state.node_count,
                    "job wider than its site was allocated"
                );
                if rt.state.idle_nodes < t {
                    break;
                }
                rt.state.local_queue.pop_front();
                rt.state.idle_nodes -= t;
                let runtime =
                    self.jobs[job].spec.compute_demand / (rt.state.node_power * f64::from(t));
                rt.busy += runtime * f64::from(t);
                self.jobs[job].started = Some(self.now);
                self.log(TraceKind::Started {
                    job: job_id,
                    site: self.site_ids[site].clone(),
                });
                self.push(self.now + runtime, EventKind::JobComplete { job, site });
            }
            if !self.sites[site].state.local_queue.is_empty() {
                return;
            }
            let Some(next) =
                next_job(&self.sites[site].state.diana_queue, discipline).map(|j| j.job_id)
            else {
                return;
            };
            on_allocation(&mut self.sites[site].state, next).expect("next job is queued");
            self.log(TraceKind::Allocated {
                job: next,
                site: self.site_ids[site].clone(),
            });
        }
    }

    fn complete(&mut self, job: usize, site: usize) {
        let t = self.jobs[job].spec.processors_required;
        let rt = &mut self.sites[site];
        rt.state.idle_nodes += t;
        rt.services += 1;
        rt.completed += 1;
        self.jobs[job].completed = Some(self.now);
        self.jobs[job].status = Some(JobStatus::Completed);
        self.pending -= 1;
        self.log(TraceKind::Completed {
            job: self.jobs[job].spec.job_id,
            site: self.site_ids[site].clone(),
        });
        self.dispatch(site);
    }

    fn echo_collect(&mut self) {
        let sites = &self.sites;
        let index = &self.index;
        let report = self
            .registry
            .echo_sweep(self.now, |p| sites[index[p]].meta_up);
        self.messages += report.messages;
        for site in report.removed {
            self.log(TraceKind::PeerRemoved { site });
        }
    }

    fn congestion_check(&mut self) {
        let window = self.scenario.sim.rate_window;
        let migrate = self.diana() && self.scenario.diana.migration;
        for s in 0..self.sites.len() {
            let rt = &mut self.sites[s];
            let arrival = rt.state.arrival_rate.update(rt.arrivals as f64 / window);
            let service = rt.state.service_rate.update(rt.services as f64 / window);
            rt.arrivals = 0;
            rt.services = 0;
            if !migrate || !rt.meta_up || !self.registry.is_alive(&self.site_ids[s]) {
                continue;
            }
            let ratio = congestion_ratio(arrival, service);
            if !is_congested(ratio, &self.scenario.queue_config) {
                continue;
            }
            self.log(TraceKind::Congested {
                site: self.site_ids[s].clone(),
                ratio,
            });
            let qc = &self.scenario.queue_config;
            let candidates = self.sites[s]
                .state
                .diana_queue
                .migration_candidates(qc.batch_size, qc.migration_policy);
            if !candidates.is_empty() {
                self.migrate(s, candidates);
            }
        }
    }

    fn migrate(&mut self, site: usize, candidates: Vec<JobId>) {
        let queue = &self.sites[site].state.diana_queue;
        let priorities: Vec<f64> = candidates
            .iter()
            .map(|id| queue.get(*id).expect("candidate is queued").priority)
            .collect();
        let batch: Vec<JobSpec> = candidates
            .iter()
            .map(|id| self.jobs[self.job_index[id]].spec.clone())
            .collect();
        let probe = PollProbe {
            reference_priority: priorities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            batch,
        };
        let answers = self.poll(site, &probe);
        let rt = &mut self.sites[site];
        rt.cache = answers
            .iter()
            .map(|s| (s.site_id.clone(), s.clone()))
            .collect();
        rt.last_poll = Some(self.now);

        let mut without = rt.state.clone();
        for id in &candidates {
            without
                .diana_queue
                .remove(*id)
                .expect("candidate is queued");
        }
        let local = snapshot_of(
            &without,
            &probe,
            &self.network,
            &self.scenario.cost,
            self.now,
        );
        let decision = migrate_batch(
            &probe.batch,
            &local,
            &answers,
            &self.network,
            &self.scenario.cost,
            &self.scenario.diana,
        );
        let MigrationDecision::Export { to, .. } = decision else {
            return;
        };
        let dest = self.index[&to];
        if let Some(s) = self.sites[site].cache.get_mut(&to) {
            for j in &probe.batch {
                record_placement(s, j.processors_required);
            }
        }
        for (id, priority) in candidates.into_iter().zip(priorities) {
            self.sites[site]
                .state
                .diana_queue
                .remove(id)
                .expect("candidate is queued");
            let job = self.job_index[&id];
            self.jobs[job].migrations += 1;
            self.log(TraceKind::Migrated {
                job: id,
                from: self.site_ids[site].clone(),
                to: to.clone(),
                priority,
            });
            self.place(job, dest);
        }
    }

    fn finish(self, seed: u64, workload_hash: String) -> RunOutput {
        let jobs: Vec<JobRecord> = self
            .jobs
            .iter()
            .map(|j| JobRecord {
                job_id: j.spec.job_id,
                user: j.spec.user_id.clone(),
                site: j.site.map(|s| self.site_ids[s].clone()),
                submit: j.spec.submit_time,
                scheduled: j.scheduled,
                started: j.started,
                completed: j.completed,
                transfer_time: j.transfer_time,
                migrations: j.migrations,
                status: j.status.expect("every job reaches a terminal state"),
            })
            .collect();
        let makespan = jobs.iter().filter_map(|j| j.completed).fold(0.0, f64::max);
        let sites = self
            .sites
            .iter()
            .map(|s| SiteRecord {
                site_id: s.state.site_id.clone(),
                nodes: s.state.node_count,
                jobs_completed: s.completed,
                busy_node_seconds: s.busy,
                utilization: if makespan > 0.0 {
                    s.busy / (f64::from(s.state.node_count) * makespan)
                } else {
                    0.0
                },
            })
            .collect();
        let (completed, total_exec, mean_exec, total_queue, mean_queue, mean_transfer) =
            aggregate(&jobs);
        let count = |st: JobStatus| jobs.iter().filter(|j| j.status == st).count() as u64;
        let submitted = jobs.len() as u64;
        let summary = Summary {
            label: self.scenario.label.clone(),
            scheduler: self.scenario.scheduler.as_str().to_string(),
            queue: self.scenario.queue.as_str().to_string(),
            seed,
            workload_hash,
            trace_hash: hash_lines(&self.trace),
            jobs_submitted: submitted,
            jobs_completed: completed,
            jobs_failed_unreachable: count(JobStatus::FailedUnreachable),
            jobs_rejected_unschedulable: count(JobStatus::RejectedUnschedulable),
            mean_exec_time: mean_exec,
            total_exec_time: total_exec,
            mean_queue_time: mean_queue,
            total_queue_time: total_queue,
            mean_transfer_time: mean_transfer,
            message_count: self.messages,
            messages_per_job: if submitted > 0 {
                self.messages as f64 / submitted as f64
            } else {
                0.0
            },
            migrations: jobs.iter().map(|j| u64::from(j.migrations)).sum(),
            makespan,
        };
        RunOutput {
            metrics: RunMetrics {
                jobs,
                sites,
                summary,
            },
            trace: self.trace,
        }
    }
}
