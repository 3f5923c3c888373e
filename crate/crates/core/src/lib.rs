//! Simulator and optimizer for dense full-duplex CSMA/CA WLANs.
//!
//! Modules follow the pipeline: [`geometry`] samples AP/STA locations,
//! [`contention`] models carrier-sense thinning, [`link`] evaluates SINR
//! and transmission success, [`throughput`] turns these into spatial
//! throughput density, [`optimizer`] jointly picks association and the
//! carrier-sense threshold, and [`harness`] runs repeated experiments.

pub mod cli;
pub mod config;
pub mod contention;
pub mod geometry;
pub mod harness;
pub mod link;
pub mod optimizer;
pub mod quad;
pub mod throughput;

pub use config::{ConfigError, NetworkConfig, StpModel, ThetaModel};
pub use harness::{run_experiment, run_realization, MetricKind, Scenario, Scheme};
pub use optimizer::{japo, JapoResult};
