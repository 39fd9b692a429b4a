// SPDX-License-Identifier: Apache-2.0

//! Static timing over fixed per-cell delays.
//!
//! Arrival at a primary input is zero; a gate output arrives at its cell delay
//! plus the latest input. There is no load or pin dependence.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::netlist::{Driver, NetId, Netlist, ValidationReport};

/// Arrivals closer than this are treated as equal when choosing a critical
/// predecessor, so ties resolve by gate index rather than rounding noise.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TimingError {
    #[error("netlist cannot be timed: {0}")]
    InvalidNetlist(ValidationReport),
    #[error("no net named `{0}`")]
    UnknownNet(String),
    #[error("`{to}` is not reachable from `{from}`")]
    Unreachable { from: String, to: String },
}

/// One hop of a critical path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStep {
    /// Gate index, or `None` for the starting primary input.
    pub gate: Option<usize>,
    pub cell: Option<String>,
    pub tag: Option<String>,
    /// Net reached by this step.
    pub net: String,
    /// Cumulative delay at `net`.
    pub arrival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub design: String,
    pub time_unit: String,
    /// Arrival time per net name.
    pub arrival: BTreeMap<String, f64>,
    /// Worst arrival per primary output, in output order.
    pub per_output: Vec<(String, f64)>,
    pub critical_delay: f64,
    pub critical_path: Vec<PathStep>,
}

impl TimingReport {
    /// Gate indices along the critical path, input side first.
    pub fn critical_gates(&self) -> Vec<usize> {
        self.critical_path.iter().filter_map(|s| s.gate).collect()
    }

    /// `PI -> CELL(tag) -> ... -> PO` with cumulative delays.
    pub fn path_string(&self) -> String {
        let mut out = String::new();
        for (k, step) in self.critical_path.iter().enumerate() {
            if k > 0 {
                out.push_str(" -> ");
            }
            match (&step.cell, &step.tag) {
                (Some(cell), Some(tag)) => {
                    let _ = write!(out, "{cell}({tag}) @{}", fmt_time(step.arrival));
                }
                _ => {
                    let _ = write!(out, "{} @{}", step.net, fmt_time(step.arrival));
                }
            }
        }
        if let Some(last) = self.critical_path.last() {
            let _ = write!(out, " -> {}", last.net);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("timing report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "design          {}", self.design);
        let _ = writeln!(
            out,
            "critical delay  {} {}",
            fmt_time(self.critical_delay),
            self.time_unit
        );
        let _ = writeln!(out, "critical path");
        let width = self
            .critical_path
            .iter()
            .map(|s| step_label(s).len())
            .max()
            .unwrap_or(0);
        for step in &self.critical_path {
            let _ = writeln!(
                out,
                "  {:<width$}  {:>8}  {}",
                step_label(step),
                fmt_time(step.arrival),
                step.net
            );
        }
        let _ = writeln!(out, "outputs");
        for (name, t) in &self.per_output {
            let _ = writeln!(out, "  {name:<10} {:>8}", fmt_time(*t));
        }
        out
    }
}

fn step_label(step: &PathStep) -> String {
    match (&step.cell, &step.tag) {
        (Some(cell), Some(tag)) => format!("{cell}({tag})"),
        _ => "PI".to_string(),
    }
}

fn fmt_time(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Arrival per net index. `None` marks nets with no driver.
fn arrivals(nl: &Netlist, order: &[usize], sources: &[NetId]) -> Vec<Option<f64>> {
    let mut arrival = vec![None; nl.nets().len()];
    for &s in sources {
        arrival[s.index()] = Some(0.0);
    }
    for &g in order {
        let gate = &nl.gates()[g];
        let latest = gate
            .inputs
            .iter()
            .filter_map(|n| arrival[n.index()])
            .fold(None, |acc: Option<f64>, t| {
                Some(acc.map_or(t, |a| a.max(t)))
            });
        if let Some(t) = latest {
            arrival[gate.output.index()] = Some(t + gate.cell.delay);
        }
    }
    arrival
}

fn checked_order(nl: &Netlist) -> Result<Vec<usize>, TimingError> {
    let report = nl.validate();
    if !report.is_ok() {
        return Err(TimingError::InvalidNetlist(report));
    }
    Ok(nl.levelize().expect("validated netlist is acyclic"))
}

/// Walks back from `end` through latest-arriving inputs. Among inputs within
/// tolerance of the latest, the one driven by the lowest gate index wins;
/// primary inputs rank before gates.
fn backtrack(nl: &Netlist, arrival: &[Option<f64>], end: NetId) -> Vec<PathStep> {
    let drivers = nl.drivers();
    let mut steps = Vec::new();
    let mut net = end;
    loop {
        match drivers[net.index()] {
            Some(Driver::Gate(g)) => {
                let gate = &nl.gates()[g];
                steps.push(PathStep {
                    gate: Some(g),
                    cell: Some(gate.cell.name()),
                    tag: Some(gate.tag.clone()),
                    net: nl.net_name(net).to_string(),
                    arrival: arrival[net.index()].unwrap_or(0.0),
                });
                let latest = gate
                    .inputs
                    .iter()
                    .filter_map(|n| arrival[n.index()])
                    .fold(f64::NEG_INFINITY, f64::max);
                let rank = |n: &NetId| match drivers[n.index()] {
                    Some(Driver::Gate(g)) => g + 1,
                    _ => 0,
                };
                let Some(&pred) = gate
                    .inputs
                    .iter()
                    .filter(|n| arrival[n.index()].is_some_and(|t| latest - t <= TIE_TOLERANCE))
                    .min_by_key(|n| rank(n))
                else {
                    break;
                };
                net = pred;
            }
            _ => {
                steps.push(PathStep {
                    gate: None,
                    cell: None,
                    tag: None,
                    net: nl.net_name(net).to_string(),
                    arrival: 0.0,
                });
                break;
            }
        }
    }
    steps.reverse();
    steps
}

pub fn analyze(nl: &Netlist) -> Result<TimingReport, TimingError> {
    let order = checked_order(nl)?;
    let arrival = arrivals(nl, &order, nl.inputs());
    let per_output: Vec<(String, f64)> = nl
        .outputs()
        .iter()
        .map(|&n| {
            (
                nl.net_name(n).to_string(),
                arrival[n.index()].unwrap_or(0.0),
            )
        })
        .collect();
    // First output attaining the maximum, so ties resolve by output order.
    let mut worst: Option<(NetId, f64)> = None;
    for &n in nl.outputs() {
        let t = arrival[n.index()].unwrap_or(0.0);
        if worst.is_none_or(|(_, w)| t > w + TIE_TOLERANCE) {
            worst = Some((n, t));
        }
    }
    let (critical_delay, critical_path) = match worst {
        Some((net, t)) => (t, backtrack(nl, &arrival, net)),
        None => (0.0, Vec::new()),
    };
    Ok(TimingReport {
        design: nl.name().to_string(),
        time_unit: nl.library().units().time.clone(),
        arrival: nl
            .nets()
            .iter()
            .zip(&arrival)
            .map(|(net, t)| (net.name.clone(), t.unwrap_or(0.0)))
            .collect(),
        per_output,
        critical_delay,
        critical_path,
    })
}

/// Longest delay from net `from` to net `to`.
pub fn path_delay(nl: &Netlist, from: &str, to: &str) -> Result<f64, TimingError> {
    let order = checked_order(nl)?;
    let lookup = |name: &str| {
        nl.find_net(name)
            .ok_or_else(|| TimingError::UnknownNet(name.to_string()))
    };
    let src = lookup(from)?;
    let dst = lookup(to)?;
    arrivals(nl, &order, &[src])[dst.index()].ok_or_else(|| TimingError::Unreachable {
        from: from.to_string(),
        to: to.to_string(),
    })
}

/// Ascending by critical delay; equal delays order by name. Stable.
pub fn rank_by_delay(reports: &[(String, TimingReport)]) -> Vec<(&str, f64)> {
    let mut ranked: Vec<(&str, f64)> = reports
        .iter()
        .map(|(name, r)| (name.as_str(), r.critical_delay))
        .collect();
    ranked.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    ranked
}
