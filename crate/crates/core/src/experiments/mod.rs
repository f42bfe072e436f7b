//! Configuration, figure sweeps, single-instance reports and the verification suite.

mod config;
mod report;
mod sweep;
mod verify;

pub use config::{
    matrix_from_json, matrix_to_json, Axis, ChargesConfig, ExplicitCharges, InstanceConfig, MatrixJson,
    SweepConfig, TrajectoryConfig, UnitaryConfig,
};
pub use report::{
    instance_report, kdq_for, write_kdq_csv, InstanceReport, KdqKind, Normalization, SymmetrizedAverages,
};
pub use sweep::{run_sweep, Figure, Table, FIG5_TRAJECTORY, NORMALIZATION_TOL};
pub use verify::{strongest_pair, verify, Comparison, PropertyResult, VerifyReport};
