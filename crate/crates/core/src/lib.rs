//! Composite load simulation and two-stage identification.
//!
//! Stage one searches the load composition with a Q-learning agent scored by
//! a trend-aware fitting reward; stage two ranks candidate compositions by
//! pinball loss over Monte-Carlo quantile bands and keeps the best-fitting
//! parameter sample.

pub mod composition;
pub mod config;
pub mod ddqn;
pub mod env;
pub mod error;
pub mod harness;
pub mod io;
pub mod load_models;
pub mod metrics;
pub mod montecarlo;
pub mod search_baselines;
pub mod simulator;

pub use composition::{Component, LoadComposition, ModelLayout};
pub use error::{ClmError, Result};
pub use load_models::{CompositeParams, ParamRanges};
pub use simulator::{make_fault_trace, simulate, FaultScenario, PQTrace, SimConfig, VoltageTrace};
