//! Induction motor drive simulation comparing indirect field-oriented control
//! and direct torque control on an ideal two-level inverter.
//!
//! The crate is organised bottom-up: [`transforms`] and [`machine`] model the
//! plant, [`inverter`] maps leg commands to voltages, [`dtc`] and [`foc`] are
//! the two controllers, [`metrics`] counts switching events and summarises
//! torque, [`harness`] ties everything into reproducible scenarios and
//! [`output`] reads and writes traces, summaries and reports.

pub mod config;
pub mod dtc;
pub mod error;
pub mod foc;
pub mod harness;
pub mod inverter;
pub mod machine;
pub mod metrics;
pub mod output;
pub mod transforms;

pub use config::{load_config, ControllerKind, LoadProfile, LoadStep, LoadedConfig, ScenarioConfig};
pub use error::{Error, Result};
pub use harness::{
    compare, replicate_paper, run_scenario, ComparisonReport, Replication, RunOutput, RunSummary, TraceRow,
};
pub use output::{export_csv, read_csv, read_summary};
pub use inverter::{SwitchState, VoltageVectorId};
pub use machine::{MotorParams, MotorState};
pub use transforms::{clarke, inverse_clarke, Abc, AlphaBeta};
