use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use diana_core::baseline::{QueueDiscipline, SchedulerKind};
use diana_core::presets;
use diana_core::report::{self, Axis};
use diana_core::scenario::{parse_scenario, Scenario};

#[derive(Parser)]
#[command(name = "diana", version, about = "Grid meta-scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write jobs.csv, summary.csv, sites.csv and trace.log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vary one axis of a scenario and write one summary row per point.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// bandwidth, sites, scheduler, queue, thrs or migration
        #[arg(long)]
        axis: String,
        /// Comma-separated point values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Side-by-side table of summary rows taken from summary.csv files.
    Compare {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Print CSV instead of an aligned table.
        #[arg(long)]
        csv: bool,
    },
    /// Print a built-in scenario as TOML.
    Preset {
        /// p1, p2, p3, p4 or congestion
        name: String,
        #[arg(long, default_value = "diana")]
        scheduler: String,
        #[arg(long)]
        queue: Option<String>,
        /// Link bandwidth for p3, in Mbps.
        #[arg(long, default_value_t = 100.0)]
        bandwidth: f64,
        /// Site count for p4.
        #[arg(long, default_value_t = 5)]
        sites: u32,
        /// Enable migration in the congestion scenario.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        migration: bool,
    },
}

fn load(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("in {}", path.display()))
}

fn preset(
    name: &str,
    scheduler: &str,
    queue: Option<&str>,
    bandwidth: f64,
    sites: u32,
    migration: bool,
) -> Result<Scenario> {
    let Some(kind) = SchedulerKind::parse(scheduler) else {
        bail!("unknown scheduler {scheduler:?}");
    };
    let queue = match queue {
        Some(q) => QueueDiscipline::parse(q).with_context(|| format!("unknown queue {q:?}"))?,
        None if kind == SchedulerKind::Diana => QueueDiscipline::PriorityMultiqueue,
        None => QueueDiscipline::Fcfs,
    };
    let s = match name {
        "p1" => presets::p1(kind, queue),
        "p2" => presets::p2(kind, queue),
        "p3" => presets::p3(bandwidth),
        "p4" => presets::p4(kind, sites),
        "congestion" => presets::congestion(migration),
        _ => bail!("unknown preset {name:?}; expected p1, p2, p3, p4 or congestion"),
    };
    s.validate()?;
    Ok(s)
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            out,
        } => {
            let s = load(&scenario)?;
            let m = report::run_experiment(&s, seed, &out)?;
            let sm = &m.summary;
            println!(
                "{}: {} of {} jobs completed, mean exec {} s, mean queue {} s, {} messages",
                sm.label,
                sm.jobs_completed,
                sm.jobs_submitted,
                report::fmt6(sm.mean_exec_time),
                report::fmt6(sm.mean_queue_time),
                sm.message_count
            );
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            seed,
            out,
        } => {
            let s = load(&scenario)?;
            let axis = Axis::parse(&axis)?;
            for (v, sm) in report::sweep(&s, axis, &values, seed, &out)? {
                println!(
                    "{}={}: mean exec {} s, messages/job {}",
                    axis.as_str(),
                    v,
                    report::fmt6(sm.mean_exec_time),
                    report::fmt6(sm.messages_per_job)
                );
            }
        }
        Command::Compare { summaries, csv } => {
            let mut rows = Vec::new();
            for p in &summaries {
                rows.extend(report::read_summary_file(p)?);
            }
            let table = report::compare(&rows)?;
            if csv {
                print!("{}", table.to_csv());
            } else {
                print!("{table}");
            }
        }
        Command::Preset {
            name,
            scheduler,
            queue,
            bandwidth,
            sites,
            migration,
        } => {
            let s = preset(
                &name,
                &scheduler,
                queue.as_deref(),
                bandwidth,
                sites,
                migration,
            )?;
            print!("{}", s.to_toml()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
