//! Discrete-event simulation of peer-to-peer grid meta-scheduling.
//!
//! Each site runs a meta-scheduler with a quota-weighted priority queue in
//! front of a local FCFS resource manager. Meta-schedulers place jobs on the
//! cheapest site, poll peers at fixed intervals, and export low-priority
//! batches when their queue is congested. Round robin and FLOP-greedy
//! placement are provided for comparison.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cost;
pub mod discovery;
pub mod model;
pub mod presets;
pub mod queue;
pub mod report;
pub mod scenario;
pub mod scheduler;
pub mod sim;
