//! Scenario runner behind the `battery` binary: configuration, single-point
//! evaluation, parallel sweeps, bath-phase optimisation and CSV output.

// `!(x > 0.0)` is the idiom used throughout to reject NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod optimize;
pub mod output;
pub mod presets;
pub mod scenario;
pub mod sweep;

pub use config::{Axis, AxisName, Config, Point, Scenario, Target};
pub use error::{CliError, Result};
pub use optimize::optimize_theta;
pub use scenario::{closed_report, evaluate, trajectory, ClosedPoint, Derived, Row, TracePoint};
pub use sweep::run_sweep;
