// SPDX-License-Identifier: Apache-2.0

//! Gate-level generation and analysis of carry-lookahead adders.
//!
//! - [`celllib`]: cell libraries with a fan-in budget.
//! - [`netlist`]: the gate DAG, validation and export.
//! - [`genarch`]: P/G logic, carry generators and whole-adder composition.
//! - [`logicsim`]: levelized simulation, adder verification, VCD.
//! - [`timing`]: arrival times and critical paths.
//! - [`metrics`]: power surrogate, area and the figure of merit.

pub mod celllib;
pub mod genarch;
pub mod logicsim;
pub mod metrics;
pub mod netlist;
pub mod timing;

pub use celllib::{Cell, CellKind, CellLibrary, LibraryError, LibraryMode};
pub use genarch::{build_adder, named_spec, named_specs, AdderSpec, GenError, GeneratorStyle};
pub use logicsim::{verify_adder, SimTrace, Vector, VerifyMode};
pub use metrics::{compare, compute_fom, ComparisonRow, MetricsReport, PowerReport};
pub use netlist::{NetId, Netlist, NetlistBuilder, NetlistError};
pub use timing::{analyze, path_delay, TimingReport};
