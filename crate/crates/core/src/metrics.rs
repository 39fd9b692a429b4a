// SPDX-License-Identifier: Apache-2.0

//! Power, delay, area and the figure of merit `10^6 / (P * D * A)`.
//!
//! Power is a surrogate: settled-state toggles times the switching energy of
//! the driving cell, averaged over the run, plus summed leakage. With energy in
//! fJ and time in ns the dynamic term comes out in uW.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logicsim::{self, SimError, SimTrace, Vector};
use crate::netlist::{Driver, Netlist};
use crate::timing::{self, TimingError};

pub const FOM_SCALE: f64 = 1e6;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{metric} must be positive, got {value}")]
    NonPositive { metric: &'static str, value: f64 },
    #[error("{metric} units differ: {baseline} vs {candidate}")]
    UnitMismatch {
        metric: &'static str,
        baseline: String,
        candidate: String,
    },
    #[error("trace was not produced from this netlist")]
    TraceMismatch,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Timing(#[from] TimingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub dynamic: f64,
    pub leakage: f64,
    pub total: f64,
}

pub fn estimate_power(trace: &SimTrace, nl: &Netlist) -> Result<PowerReport, MetricsError> {
    if trace.net_count() != nl.nets().len() {
        return Err(MetricsError::TraceMismatch);
    }
    let mut switched = 0.0;
    for (net, driver) in nl.drivers().iter().enumerate() {
        if let Some(Driver::Gate(g)) = driver {
            switched += trace.toggle_counts()[net] as f64 * nl.gates()[*g].cell.switch_energy;
        }
    }
    let dynamic = if trace.vector_count() == 0 {
        0.0
    } else {
        switched / (trace.vector_count() as f64 * trace.period())
    };
    let leakage: f64 = nl.gates().iter().map(|g| g.cell.leakage).sum();
    Ok(PowerReport {
        dynamic,
        leakage,
        total: dynamic + leakage,
    })
}

pub fn compute_fom(power: f64, delay: f64, area: f64) -> Result<f64, MetricsError> {
    for (metric, value) in [("power", power), ("delay", delay), ("area", area)] {
        if value <= 0.0 || !value.is_finite() {
            return Err(MetricsError::NonPositive { metric, value });
        }
    }
    Ok(FOM_SCALE / (power * delay * area))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(value: f64, unit: impl Into<String>) -> Self {
        Quantity {
            value,
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub power: Quantity,
    pub delay: Quantity,
    pub area: Quantity,
    pub fom: f64,
}

impl MetricsReport {
    /// Builds a report from raw values in the usual uW / ns / um2 units.
    pub fn from_values(
        name: impl Into<String>,
        power: f64,
        delay: f64,
        area: f64,
    ) -> Result<Self, MetricsError> {
        Self::with_units(
            name,
            Quantity::new(power, "uW"),
            Quantity::new(delay, "ns"),
            Quantity::new(area, "um2"),
        )
    }

    pub fn with_units(
        name: impl Into<String>,
        power: Quantity,
        delay: Quantity,
        area: Quantity,
    ) -> Result<Self, MetricsError> {
        let fom = compute_fom(power.value, delay.value, area.value)?;
        Ok(MetricsReport {
            name: name.into(),
            power,
            delay,
            area,
            fom,
        })
    }
}

pub fn fom_gain_percent(baseline_fom: f64, candidate_fom: f64) -> f64 {
    (candidate_fom / baseline_fom - 1.0) * 100.0
}

pub fn delay_reduction_percent(baseline_delay: f64, candidate_delay: f64) -> f64 {
    (1.0 - candidate_delay / baseline_delay) * 100.0
}

pub fn speedup_percent(baseline_delay: f64, candidate_delay: f64) -> f64 {
    (baseline_delay / candidate_delay - 1.0) * 100.0
}

fn delta_percent(baseline: f64, candidate: f64) -> f64 {
    (candidate / baseline - 1.0) * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub baseline: MetricsReport,
    pub candidate: MetricsReport,
    pub power_delta_percent: f64,
    pub delay_delta_percent: f64,
    pub area_delta_percent: f64,
    pub fom_gain_percent: f64,
    pub delay_reduction_percent: f64,
    pub speedup_percent: f64,
}

pub fn compare(
    baseline: &MetricsReport,
    candidate: &MetricsReport,
) -> Result<ComparisonRow, MetricsError> {
    for (metric, b, c) in [
        ("power", &baseline.power, &candidate.power),
        ("delay", &baseline.delay, &candidate.delay),
        ("area", &baseline.area, &candidate.area),
    ] {
        if b.unit != c.unit {
            return Err(MetricsError::UnitMismatch {
                metric,
                baseline: b.unit.clone(),
                candidate: c.unit.clone(),
            });
        }
    }
    let (bd, cd) = (baseline.delay.value, candidate.delay.value);
    Ok(ComparisonRow {
        baseline: baseline.clone(),
        candidate: candidate.clone(),
        power_delta_percent: delta_percent(baseline.power.value, candidate.power.value),
        delay_delta_percent: delta_percent(bd, cd),
        area_delta_percent: delta_percent(baseline.area.value, candidate.area.value),
        fom_gain_percent: fom_gain_percent(baseline.fom, candidate.fom),
        delay_reduction_percent: delay_reduction_percent(bd, cd),
        speedup_percent: speedup_percent(bd, cd),
    })
}

/// Delay from static timing, area from cell totals, power from simulating
/// `vectors` at one vector per `period`.
pub fn evaluate_design(
    nl: &Netlist,
    vectors: &[Vector],
    period: f64,
) -> Result<MetricsReport, MetricsError> {
    let timing = timing::analyze(nl)?;
    let trace = logicsim::run_sequence(nl, vectors, period)?;
    let power = estimate_power(&trace, nl)?;
    let area = nl.stats().total_area;
    let units = nl.library().units();
    MetricsReport::with_units(
        nl.name(),
        Quantity::new(power.total, units.power.clone()),
        Quantity::new(timing.critical_delay, units.time.clone()),
        Quantity::new(area, units.area.clone()),
    )
}
