//! CSV output, experiment runs, one-axis sweeps, and summary comparison.
//!
//! Floats are written with six significant digits in a fixed,
//! locale-independent format, so identical runs produce identical bytes.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::baseline::{QueueDiscipline, SchedulerKind};
use crate::model::{JobId, LinkParams, SiteId};
use crate::scenario::{Scenario, ScenarioError, TopologyPreset};
use crate::sim::{self, JobRecord, JobStatus, RunMetrics, SimError, SiteRecord, Summary};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: record {record}: {reason}")]
    Parse {
        path: PathBuf,
        record: usize,
        reason: String,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(
        "unknown sweep axis {0:?}; expected bandwidth, sites, scheduler, queue, thrs or migration"
    )]
    UnknownAxis(String),
    #[error("bad value {value:?} for axis {axis}: {reason}")]
    AxisValue {
        axis: &'static str,
        value: String,
        reason: String,
    },
    #[error("cannot compare runs of different workloads: {a} has {hash_a}, {b} has {hash_b}")]
    WorkloadMismatch {
        a: String,
        hash_a: String,
        b: String,
        hash_b: String,
    },
    #[error("compare needs at least two summaries, got {0}")]
    TooFewSummaries(usize),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Six significant digits, `%g` style: plain notation for exponents in
/// [-4, 6), scientific otherwise, trailing zeros dropped.
pub fn fmt6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let fixed = format!("{:.*}", (5 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt6(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

pub const JOB_COLUMNS: [&str; 12] = [
    "job_id",
    "user",
    "site",
    "submit",
    "scheduled",
    "started",
    "completed",
    "queue_time",
    "exec_time",
    "migrations",
    "status",
    "transfer_time",
];

pub const SUMMARY_COLUMNS: [&str; 19] = [
    "label",
    "scheduler",
    "queue",
    "seed",
    "workload_hash",
    "trace_hash",
    "jobs_submitted",
    "jobs_completed",
    "jobs_failed_unreachable",
    "jobs_rejected_unschedulable",
    "mean_exec_time",
    "total_exec_time",
    "mean_queue_time",
    "total_queue_time",
    "mean_transfer_time",
    "message_count",
    "messages_per_job",
    "migrations",
    "makespan",
];

pub const SITE_COLUMNS: [&str; 5] = [
    "site_id",
    "nodes",
    "jobs_completed",
    "busy_node_seconds",
    "utilization",
];

/// `x` as it reads back from its six-digit form.
fn printed(x: f64) -> f64 {
    fmt6(x).parse().unwrap_or(x)
}

fn job_row(j: &JobRecord) -> Vec<String> {
    // derived columns come from the printed timestamps so a parsed file
    // re-emits to the same bytes
    let p = |x: Option<f64>| x.map(printed);
    let mut shown = j.clone();
    shown.submit = printed(j.submit);
    shown.started = p(j.started);
    shown.completed = p(j.completed);
    shown.transfer_time = printed(j.transfer_time);
    let j = &shown;
    vec![
        j.job_id.0.to_string(),
        j.user.to_string(),
        j.site.as_ref().map(|s| s.to_string()).unwrap_or_default(),
        fmt6(j.submit),
        opt6(j.scheduled),
        opt6(j.started),
        opt6(j.completed),
        opt6(j.queue_time()),
        opt6(j.exec_time()),
        j.migrations.to_string(),
        j.status.as_str().to_string(),
        fmt6(j.transfer_time),
    ]
}

fn summary_row(s: &Summary) -> Vec<String> {
    vec![
        s.label.clone(),
        s.scheduler.clone(),
        s.queue.clone(),
        s.seed.to_string(),
        s.workload_hash.clone(),
        s.trace_hash.clone(),
        s.jobs_submitted.to_string(),
        s.jobs_completed.to_string(),
        s.jobs_failed_unreachable.to_string(),
        s.jobs_rejected_unschedulable.to_string(),
        fmt6(s.mean_exec_time),
        fmt6(s.total_exec_time),
        fmt6(s.mean_queue_time),
        fmt6(s.total_queue_time),
        fmt6(s.mean_transfer_time),
        s.message_count.to_string(),
        fmt6(s.messages_per_job),
        s.migrations.to_string(),
        fmt6(s.makespan),
    ]
}

fn site_row(s: &SiteRecord) -> Vec<String> {
    vec![
        s.site_id.to_string(),
        s.nodes.to_string(),
        s.jobs_completed.to_string(),
        fmt6(s.busy_node_seconds),
        fmt6(s.utilization),
    ]
}

fn write_rows<W: Write>(
    w: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_jobs_csv<W: Write>(w: W, jobs: &[JobRecord]) -> csv::Result<()> {
    write_rows(w, &JOB_COLUMNS, jobs.iter().map(job_row))
}

pub fn write_summary_csv<W: Write>(w: W, summaries: &[Summary]) -> csv::Result<()> {
    write_rows(w, &SUMMARY_COLUMNS, summaries.iter().map(summary_row))
}

pub fn write_sites_csv<W: Write>(w: W, sites: &[SiteRecord]) -> csv::Result<()> {
    write_rows(w, &SITE_COLUMNS, sites.iter().map(site_row))
}

/// Sweep output: the axis name and point value, then the summary columns.
pub fn write_sweep_csv<W: Write>(
    w: W,
    axis: Axis,
    points: &[(String, Summary)],
) -> csv::Result<()> {
    let mut header = vec!["axis", "value"];
    header.extend(SUMMARY_COLUMNS);
    write_rows(
        w,
        &header,
        points.iter().map(|(v, s)| {
            let mut row = vec![axis.as_str().to_string(), v.clone()];
            row.extend(summary_row(s));
            row
        }),
    )
}

struct Fields<'a> {
    record: &'a csv::StringRecord,
    offset: usize,
}

impl Fields<'_> {
    fn raw(&self, i: usize) -> Result<&str, String> {
        self.record
            .get(self.offset + i)
            .ok_or_else(|| format!("missing column {}", self.offset + i + 1))
    }

    fn float(&self, i: usize) -> Result<f64, String> {
        let s = self.raw(i)?;
        s.parse()
            .map_err(|_| format!("column {}: bad number {s:?}", self.offset + i + 1))
    }

    fn opt_float(&self, i: usize) -> Result<Option<f64>, String> {
        if self.raw(i)?.is_empty() {
            Ok(None)
        } else {
            self.float(i).map(Some)
        }
    }

    fn int<T: std::str::FromStr>(&self, i: usize) -> Result<T, String> {
        let s = self.raw(i)?;
        s.parse()
            .map_err(|_| format!("column {}: bad integer {s:?}", self.offset + i + 1))
    }
}

fn parse_job(f: &Fields) -> Result<JobRecord, String> {
    let site = f.raw(2)?;
    let status = f.raw(10)?;
    Ok(JobRecord {
        job_id: JobId(f.int(0)?),
        user: f.raw(1)?.to_string().into(),
        site: (!site.is_empty()).then(|| SiteId::from(site)),
        submit: f.float(3)?,
        scheduled: f.opt_float(4)?,
        started: f.opt_float(5)?,
        completed: f.opt_float(6)?,
        migrations: f.int(9)?,
        status: JobStatus::parse(status).ok_or_else(|| format!("unknown status {status:?}"))?,
        transfer_time: f.float(11)?,
    })
}

fn parse_summary(f: &Fields) -> Result<Summary, String> {
    Ok(Summary {
        label: f.raw(0)?.to_string(),
        scheduler: f.raw(1)?.to_string(),
        queue: f.raw(2)?.to_string(),
        seed: f.int(3)?,
        workload_hash: f.raw(4)?.to_string(),
        trace_hash: f.raw(5)?.to_string(),
        jobs_submitted: f.int(6)?,
        jobs_completed: f.int(7)?,
        jobs_failed_unreachable: f.int(8)?,
        jobs_rejected_unschedulable: f.int(9)?,
        mean_exec_time: f.float(10)?,
        total_exec_time: f.float(11)?,
        mean_queue_time: f.float(12)?,
        total_queue_time: f.float(13)?,
        mean_transfer_time: f.float(14)?,
        message_count: f.int(15)?,
        messages_per_job: f.float(16)?,
        migrations: f.int(17)?,
        makespan: f.float(18)?,
    })
}

fn parse_site(f: &Fields) -> Result<SiteRecord, String> {
    Ok(SiteRecord {
        site_id: f.raw(0)?.into(),
        nodes: f.int(1)?,
        jobs_completed: f.int(2)?,
        busy_node_seconds: f.float(3)?,
        utilization: f.float(4)?,
    })
}

fn read_rows<R: Read, T>(
    r: R,
    path: &Path,
    expected: &[&str],
    parse: impl Fn(&Fields) -> Result<T, String>,
) -> Result<Vec<T>, ReportError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(r);
    let headers = rd.headers().map_err(csv_err(path))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    // sweep files carry two leading columns
    let offset = if cols.len() == expected.len() + 2 && cols[..2] == ["axis", "value"] {
        2
    } else {
        0
    };
    if cols[offset..] != *expected {
        return Err(ReportError::Parse {
            path: path.to_path_buf(),
            record: 0,
            reason: format!("unexpected header {}", cols.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let fields = Fields {
            record: &rec,
            offset,
        };
        out.push(parse(&fields).map_err(|reason| ReportError::Parse {
            path: path.to_path_buf(),
            record: i + 1,
            reason,
        })?);
    }
    Ok(out)
}

pub fn parse_jobs_csv<R: Read>(r: R) -> Result<Vec<JobRecord>, ReportError> {
    read_rows(r, Path::new("<jobs>"), &JOB_COLUMNS, parse_job)
}

/// Reads plain summary files and sweep files alike.
pub fn parse_summary_csv<R: Read>(r: R) -> Result<Vec<Summary>, ReportError> {
    read_rows(r, Path::new("<summary>"), &SUMMARY_COLUMNS, parse_summary)
}

pub fn parse_sites_csv<R: Read>(r: R) -> Result<Vec<SiteRecord>, ReportError> {
    read_rows(r, Path::new("<sites>"), &SITE_COLUMNS, parse_site)
}

pub fn read_summary_file(path: &Path) -> Result<Vec<Summary>, ReportError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    read_rows(f, path, &SUMMARY_COLUMNS, parse_summary)
}

pub fn read_jobs_file(path: &Path) -> Result<Vec<JobRecord>, ReportError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    read_rows(f, path, &JOB_COLUMNS, parse_job)
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>,
) -> Result<(), ReportError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(csv_err(path))?;
    fs::write(path, buf).map_err(io_err(path))
}

fn create_dir(dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Runs one scenario and writes `jobs.csv`, `summary.csv`, `sites.csv` and
/// `trace.log` into `out_dir`.
pub fn run_experiment(
    scenario: &Scenario,
    seed: u64,
    out_dir: &Path,
) -> Result<RunMetrics, ReportError> {
    let out = sim::run(scenario, seed)?;
    create_dir(out_dir)?;
    let m = out.metrics;
    write_file(&out_dir.join("jobs.csv"), |b| write_jobs_csv(b, &m.jobs))?;
    write_file(&out_dir.join("summary.csv"), |b| {
        write_summary_csv(b, std::slice::from_ref(&m.summary))
    })?;
    write_file(&out_dir.join("sites.csv"), |b| write_sites_csv(b, &m.sites))?;
    let trace: String = out.trace.iter().map(|e| format!("{e}\n")).collect();
    let path = out_dir.join("trace.log");
    fs::write(&path, trace).map_err(io_err(&path))?;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Bandwidth,
    Sites,
    Scheduler,
    Queue,
    Thrs,
    Migration,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Self, ReportError> {
        Ok(match s {
            "bandwidth" => Axis::Bandwidth,
            "sites" => Axis::Sites,
            "scheduler" => Axis::Scheduler,
            "queue" => Axis::Queue,
            "thrs" => Axis::Thrs,
            "migration" => Axis::Migration,
            _ => return Err(ReportError::UnknownAxis(s.to_string())),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Bandwidth => "bandwidth",
            Axis::Sites => "sites",
            Axis::Scheduler => "scheduler",
            Axis::Queue => "queue",
            Axis::Thrs => "thrs",
            Axis::Migration => "migration",
        }
    }

    fn bad(self, value: &str, reason: impl Into<String>) -> ReportError {
        ReportError::AxisValue {
            axis: self.as_str(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }

    /// A copy of `base` with this axis set to `value`.
    ///
    /// `bandwidth` overwrites the default link and every explicit link.
    /// `sites` resizes a uniform topology. `scheduler` takes `kind` or
    /// `kind:queue`; without a queue, a priority queue under a baseline
    /// scheduler falls back to fcfs.
    pub fn apply(self, base: &Scenario, value: &str) -> Result<Scenario, ReportError> {
        let mut s = base.clone();
        match self {
            Axis::Bandwidth => {
                let bw: f64 = value.parse().map_err(|_| self.bad(value, "not a number"))?;
                if !(bw > 0.0) || !bw.is_finite() {
                    return Err(self.bad(value, "bandwidth must be > 0"));
                }
                if matches!(s.topology, Some(TopologyPreset::FiveSite)) {
                    return Err(self.bad(value, "the five_site topology has fixed links"));
                }
                let mut d = s.network.default.unwrap_or_else(|| {
                    s.topology()
                        .network
                        .default_link()
                        .copied()
                        .unwrap_or(LinkParams {
                            bandwidth: bw,
                            latency: 0.0,
                            background_load: 0.0,
                        })
                });
                d.bandwidth = bw;
                s.network.default = Some(d);
                for l in &mut s.network.links {
                    l.bandwidth = bw;
                }
            }
            Axis::Sites => {
                let n: u32 = value
                    .parse()
                    .map_err(|_| self.bad(value, "not an integer"))?;
                match &mut s.topology {
                    Some(TopologyPreset::Uniform { sites, .. }) => *sites = n,
                    _ => return Err(self.bad(value, "needs a uniform topology")),
                }
            }
            Axis::Scheduler => {
                let (kind, queue) = match value.split_once(':') {
                    Some((k, q)) => (k, Some(q)),
                    None => (value, None),
                };
                s.scheduler = SchedulerKind::parse(kind)
                    .ok_or_else(|| self.bad(value, "unknown scheduler"))?;
                match queue {
                    Some(q) => {
                        s.queue = QueueDiscipline::parse(q)
                            .ok_or_else(|| self.bad(value, "unknown queue"))?;
                    }
                    None => {
                        if s.scheduler != SchedulerKind::Diana
                            && s.queue == QueueDiscipline::PriorityMultiqueue
                        {
                            s.queue = QueueDiscipline::Fcfs;
                        }
                    }
                }
            }
            Axis::Queue => {
                s.queue = QueueDiscipline::parse(value)
                    .ok_or_else(|| self.bad(value, "unknown queue"))?;
            }
            Axis::Thrs => {
                s.queue_config.thrs = value.parse().map_err(|_| self.bad(value, "not a number"))?;
            }
            Axis::Migration => {
                s.diana.migration = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(self.bad(value, "expected on or off")),
                };
            }
        }
        s.label = format!("{}/{}={}", base.label, self.as_str(), value);
        s.validate()?;
        Ok(s)
    }
}

/// Runs every point of a one-axis sweep in parallel and writes
/// `summary.csv` with one row per point, in the order given.
pub fn sweep(
    base: &Scenario,
    axis: Axis,
    values: &[String],
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<(String, Summary)>, ReportError> {
    let scenarios = values
        .iter()
        .map(|v| axis.apply(base, v))
        .collect::<Result<Vec<_>, _>>()?;
    let summaries = scenarios
        .par_iter()
        .map(|s| sim::run(s, seed).map(|o| o.metrics.summary))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Vec<(String, Summary)> = values.iter().cloned().zip(summaries).collect();
    create_dir(out_dir)?;
    write_file(&out_dir.join("summary.csv"), |b| {
        write_sweep_csv(b, axis, &points)
    })?;
    Ok(points)
}

/// Side-by-side metrics, one column per summary, plus ratio rows against
/// the first summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub rows: Vec<(String, Vec<String>)>,
}

type Metric = (&'static str, fn(&Summary) -> f64);

const COMPARED: [Metric; 8] = [
    ("jobs_completed", |s| s.jobs_completed as f64),
    ("mean_exec_time", |s| s.mean_exec_time),
    ("total_exec_time", |s| s.total_exec_time),
    ("mean_queue_time", |s| s.mean_queue_time),
    ("mean_transfer_time", |s| s.mean_transfer_time),
    ("messages_per_job", |s| s.messages_per_job),
    ("migrations", |s| s.migrations as f64),
    ("makespan", |s| s.makespan),
];

pub fn compare(summaries: &[Summary]) -> Result<Comparison, ReportError> {
    if summaries.len() < 2 {
        return Err(ReportError::TooFewSummaries(summaries.len()));
    }
    let first = &summaries[0];
    for s in &summaries[1..] {
        if s.workload_hash != first.workload_hash {
            return Err(ReportError::WorkloadMismatch {
                a: first.label.clone(),
                hash_a: first.workload_hash.clone(),
                b: s.label.clone(),
                hash_b: s.workload_hash.clone(),
            });
        }
    }
    let mut rows = vec![
        (
            "scheduler".to_string(),
            summaries.iter().map(|s| s.scheduler.clone()).collect(),
        ),
        (
            "queue".to_string(),
            summaries.iter().map(|s| s.queue.clone()).collect(),
        ),
    ];
    for (name, get) in COMPARED {
        rows.push((
            name.to_string(),
            summaries.iter().map(|s| fmt6(get(s))).collect(),
        ));
    }
    for (name, get) in COMPARED.iter().filter(|(n, _)| n.ends_with("_time")) {
        let base = get(first);
        rows.push((
            format!("{name}_ratio"),
            summaries
                .iter()
                .map(|s| {
                    if base == 0.0 {
                        String::new()
                    } else {
                        fmt6(get(s) / base)
                    }
                })
                .collect(),
        ));
    }
    Ok(Comparison {
        labels: summaries.iter().map(|s| s.label.clone()).collect(),
        rows,
    })
}

impl Comparison {
    pub fn ratio(&self, metric: &str, column: usize) -> Option<f64> {
        let name = format!("{metric}_ratio");
        self.rows
            .iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, v)| v.get(column))
            .and_then(|s| s.parse().ok())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        let mut header = vec!["metric".to_string()];
        header.extend(self.labels.iter().cloned());
        let rows = self.rows.iter().map(|(n, v)| {
            let mut r = vec![n.clone()];
            r.extend(v.iter().cloned());
            r
        });
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_rows(&mut buf, &header, rows).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 csv")
    }
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let first = self
            .rows
            .iter()
            .map(|(n, _)| n.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let widths: Vec<usize> = (0..self.labels.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|(_, v)| v[i].len())
                    .chain([self.labels[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        write!(f, "{:<first$}", "metric")?;
        for (l, w) in self.labels.iter().zip(&widths) {
            write!(f, "  {l:>w$}")?;
        }
        writeln!(f)?;
        for (name, vals) in &self.rows {
            write!(f, "{name:<first$}")?;
            for (v, w) in vals.iter().zip(&widths) {
                write!(f, "  {v:>w$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt6_examples() {
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(3.0), "3");
        assert_eq!(fmt6(80.0), "80");
        assert_eq!(fmt6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt6(123456.7), "123457");
        assert_eq!(fmt6(1234567.0), "1.23457e+06");
        assert_eq!(fmt6(0.0001), "0.0001");
        assert_eq!(fmt6(0.00001234), "1.234e-05");
        assert_eq!(fmt6(-2.5), "-2.5");
        assert_eq!(fmt6(999999.6), "1e+06");
    }

    proptest::proptest! {
        #[test]
        fn fmt6_is_idempotent(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = fmt6(x);
            let y: f64 = s.parse().unwrap();
            proptest::prop_assert_eq!(fmt6(y), s);
            proptest::prop_assert!(x == y || ((x - y) / x).abs() <= 5e-6);
        }
    }

    #[test]
    fn axis_names_round_trip() {
        for a in [
            Axis::Bandwidth,
            Axis::Sites,
            Axis::Scheduler,
            Axis::Queue,
            Axis::Thrs,
            Axis::Migration,
        ] {
            assert_eq!(Axis::parse(a.as_str()).unwrap(), a);
        }
        assert!(Axis::parse("colour").is_err());
    }
}
