//! Deterministic discrete-event simulation of a federation of sites.

pub mod engine;
pub mod event;
pub mod metrics;
pub mod workload;

pub use engine::{run, run_workload, simulate_transfer, RunOutput, SimError};
pub use metrics::{JobRecord, JobStatus, RunMetrics, SiteRecord, Summary, TraceEvent, TraceKind};
pub use workload::{generate_workload, Submission};
