// SPDX-License-Identifier: Apache-2.0

//! Simulation traces, waveform dumps and the power surrogate.

mod common;

use std::collections::HashMap;
use std::sync::Arc;

use cla_core::celllib::{CellKind, CellLibrary};
use cla_core::genarch::{build_adder, named_spec, named_specs};
use cla_core::logicsim::{
    adder_vectors, random_operands, run_sequence, write_vcd, SimTrace, Vector,
};
use cla_core::metrics::{compute_fom, estimate_power, evaluate_design, MetricsReport};
use cla_core::netlist::{Netlist, NetlistBuilder};
use common::unit;

fn bench_vectors(nl: &Netlist, count: usize, seed: u64) -> Vec<Vector> {
    adder_vectors(nl, 32, &random_operands(32, count, seed)).unwrap()
}

/// Per-vector evaluation with one gate at a time and plain truth tables.
fn naive_toggles(nl: &Netlist, vectors: &[Vector]) -> Vec<u64> {
    let order = nl.levelize().unwrap();
    let mut toggles = vec![0u64; nl.nets().len()];
    let mut prev: Option<Vec<bool>> = None;
    for v in vectors {
        let mut val = vec![false; nl.nets().len()];
        for (&pi, &bit) in nl.inputs().iter().zip(&v.0) {
            val[pi.index()] = bit;
        }
        for &g in &order {
            let gate = &nl.gates()[g];
            let ins: Vec<bool> = gate.inputs.iter().map(|n| val[n.index()]).collect();
            let out = match gate.cell.kind {
                CellKind::Inv => !ins[0],
                CellKind::Buf => ins[0],
                CellKind::And => ins.iter().all(|&b| b),
                CellKind::Or => ins.iter().any(|&b| b),
                CellKind::Nand => !ins.iter().all(|&b| b),
                CellKind::Nor => !ins.iter().any(|&b| b),
                CellKind::Xor => ins.iter().filter(|&&b| b).count() % 2 == 1,
                CellKind::Xnor => ins.iter().filter(|&&b| b).count() % 2 == 0,
                CellKind::Ao21 => (ins[0] && ins[1]) || ins[2],
            };
            val[gate.output.index()] = out;
        }
        if let Some(p) = &prev {
            for (t, (a, b)) in toggles.iter_mut().zip(p.iter().zip(&val)) {
                *t += (a != b) as u64;
            }
        }
        prev = Some(val);
    }
    toggles
}

#[test]
fn toggles_match_naive_reevaluation() {
    let nl = build_adder(&named_spec("homogeneous-scbcla").unwrap(), &unit()).unwrap();
    let vs = bench_vectors(&nl, 1000, 11);
    let trace = run_sequence(&nl, &vs, 5.0).unwrap();
    assert_eq!(trace.toggle_counts(), naive_toggles(&nl, &vs).as_slice());
    assert!(trace.toggle_counts().iter().all(|&t| t <= 999));
}

#[test]
fn traces_are_deterministic() {
    let nl = build_adder(&named_spec("hybrid-ccla-2").unwrap(), &unit()).unwrap();
    let a = run_sequence(&nl, &bench_vectors(&nl, 500, 3), 5.0).unwrap();
    let b = run_sequence(&nl, &bench_vectors(&nl, 500, 3), 5.0).unwrap();
    assert_eq!(a, b);
}

/// Minimal VCD reader: returns toggles per signal name and the timestamp count.
fn parse_vcd(text: &str) -> (HashMap<String, u64>, usize, String) {
    let mut names = HashMap::new();
    let mut last: HashMap<String, char> = HashMap::new();
    let mut toggles: HashMap<String, u64> = HashMap::new();
    let mut stamps = 0;
    let mut timescale = String::new();
    let mut in_header = true;
    for line in text.lines() {
        let line = line.trim();
        if in_header {
            if let Some(rest) = line.strip_prefix("$timescale") {
                timescale = rest.trim_end_matches("$end").trim().to_string();
            }
            if let Some(rest) = line.strip_prefix("$var") {
                let f: Vec<&str> = rest.split_whitespace().collect();
                names.insert(f[2].to_string(), f[3].to_string());
                toggles.insert(f[3].to_string(), 0);
            }
            if line.starts_with("$enddefinitions") {
                in_header = false;
            }
            continue;
        }
        if line.starts_with('#') {
            stamps += 1;
            continue;
        }
        if line.starts_with('$') || line.is_empty() {
            continue;
        }
        let (v, id) = line.split_at(1);
        let name = &names[id];
        let v = v.chars().next().unwrap();
        if let Some(old) = last.insert(name.clone(), v) {
            if old != v {
                *toggles.get_mut(name).unwrap() += 1;
            }
        }
    }
    (toggles, stamps, timescale)
}

fn vcd_text(trace: &SimTrace, nl: &Netlist) -> String {
    let mut buf = Vec::new();
    write_vcd(trace, nl, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn vcd_round_trip_recovers_toggles() {
    let nl = build_adder(&named_spec("hybrid-scbcla-4").unwrap(), &unit()).unwrap();
    let trace = run_sequence(&nl, &bench_vectors(&nl, 200, 1), 5.0).unwrap();
    let (toggles, stamps, timescale) = parse_vcd(&vcd_text(&trace, &nl));
    assert_eq!(stamps, 200);
    assert_eq!(timescale, "1ns");
    assert_eq!(toggles.len(), nl.nets().len());
    for (i, net) in nl.nets().iter().enumerate() {
        assert_eq!(toggles[&net.name], trace.toggle_counts()[i], "{}", net.name);
    }
}

fn inverter() -> Netlist {
    let mut b = NetlistBuilder::new("inv", Arc::new(CellLibrary::builtin_unit()));
    let a = b.input("a").unwrap();
    let y = b.gate(CellKind::Inv, &[a], "y", "i0").unwrap();
    b.output(y);
    b.finish().unwrap()
}

#[test]
fn inverter_vcd_shape() {
    let nl = inverter();
    let trace = run_sequence(&nl, &[Vector(vec![false]), Vector(vec![true])], 5.0).unwrap();
    let text = vcd_text(&trace, &nl);
    assert!(text.contains("$timescale 1ns $end"));
    assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 2);
    assert_eq!(text.lines().filter(|l| l.starts_with("$var")).count(), 2);
}

#[test]
fn constant_trace_has_only_the_initial_dump() {
    let nl = inverter();
    let trace = run_sequence(&nl, &vec![Vector(vec![true]); 5], 5.0).unwrap();
    let text = vcd_text(&trace, &nl);
    let body: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("$enddefinitions"))
        .skip(1)
        .collect();
    assert_eq!(
        body,
        [
            "#0",
            "$dumpvars",
            "1!",
            "0\"",
            "$end",
            "#5",
            "#10",
            "#15",
            "#20"
        ]
    );
}

#[test]
fn power_is_linear_in_switch_energy() {
    let spec = named_spec("hybrid-ccla-3").unwrap();
    let base = unit();
    let doubled = Arc::new(base.map_cells(|c| c.switch_energy *= 2.0).unwrap());
    let a = build_adder(&spec, &base).unwrap();
    let b = build_adder(&spec, &doubled).unwrap();
    let vs = bench_vectors(&a, 300, 9);
    let pa = estimate_power(&run_sequence(&a, &vs, 5.0).unwrap(), &a).unwrap();
    let pb = estimate_power(&run_sequence(&b, &vs, 5.0).unwrap(), &b).unwrap();
    assert_eq!(pb.dynamic, 2.0 * pa.dynamic);
}

#[test]
fn leakage_does_not_depend_on_the_trace() {
    let lib = Arc::new(unit().map_cells(|c| c.leakage = 0.01).unwrap());
    let nl = build_adder(&named_spec("hybrid-ccla-1").unwrap(), &lib).unwrap();
    let quiet = run_sequence(&nl, &vec![bench_vectors(&nl, 1, 0)[0].clone(); 10], 5.0).unwrap();
    let busy = run_sequence(&nl, &bench_vectors(&nl, 100, 0), 5.0).unwrap();
    let pq = estimate_power(&quiet, &nl).unwrap();
    let pb = estimate_power(&busy, &nl).unwrap();
    assert_eq!(pq.dynamic, 0.0);
    assert_eq!(pq.leakage, pb.leakage);
    assert!((pq.leakage - 0.01 * nl.gates().len() as f64).abs() < 1e-9);
    assert_eq!(pb.total, pb.dynamic + pb.leakage);
}

#[test]
fn doubling_area_halves_fom() {
    let spec = named_spec("homogeneous-ccla").unwrap();
    let base = unit();
    let big = Arc::new(base.map_cells(|c| c.area *= 2.0).unwrap());
    let a = build_adder(&spec, &base).unwrap();
    let b = build_adder(&spec, &big).unwrap();
    let vs = bench_vectors(&a, 200, 2);
    let ra = evaluate_design(&a, &vs, 5.0).unwrap();
    let rb = evaluate_design(&b, &vs, 5.0).unwrap();
    assert!((rb.fom * 2.0 - ra.fom).abs() < 1e-12 * ra.fom);
}

#[test]
fn evaluate_design_is_deterministic() {
    let nl = build_adder(&named_spec("hybrid-scbcla-2").unwrap(), &unit()).unwrap();
    let a = evaluate_design(&nl, &bench_vectors(&nl, 400, 7), 5.0).unwrap();
    let b = evaluate_design(&nl, &bench_vectors(&nl, 400, 7), 5.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn frozen_unit_library_table() {
    let rows: Vec<MetricsReport> = named_specs()
        .iter()
        .map(|spec| {
            let nl = build_adder(spec, &unit()).unwrap();
            evaluate_design(&nl, &bench_vectors(&nl, 1000, 7), 5.0).unwrap()
        })
        .collect();
    let got: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{:.4},{:.4},{:.4},{:.4}",
                r.name, r.power.value, r.delay.value, r.area.value, r.fom
            )
        })
        .collect();
    assert_eq!(got, FROZEN_TABLE);
    for r in &rows {
        let fom = compute_fom(r.power.value, r.delay.value, r.area.value).unwrap();
        assert_eq!(fom, r.fom);
    }
}

const FROZEN_TABLE: [&str; 10] = [
    "homogeneous-ccla,17.1116,12.0000,224.0000,21.7410",
    "hybrid-ccla-1,16.4838,13.0000,212.0000,22.0122",
    "hybrid-ccla-2,16.6974,12.0000,215.0000,23.2130",
    "hybrid-ccla-3,16.5006,12.0000,210.0000,24.0491",
    "hybrid-ccla-4,16.2914,13.0000,206.0000,22.9209",
    "homogeneous-scbcla,13.7014,14.0000,168.0000,31.0311",
    "hybrid-scbcla-1,13.4970,15.0000,163.0000,30.3029",
    "hybrid-scbcla-2,13.7106,14.0000,166.0000,31.3839",
    "hybrid-scbcla-3,13.7230,13.0000,165.0000,33.9722",
    "hybrid-scbcla-4,13.7286,13.0000,164.0000,34.1654",
];
