// SPDX-License-Identifier: Apache-2.0

mod common;

use std::sync::Arc;

use cla_core::celllib::{CellKind, CellLibrary};
use cla_core::genarch::{
    build_adder, build_basic_clg, build_basic_sclg, build_ccla_block, build_decomposed_clg,
    build_decomposed_sclg, build_rca, named_specs, AdderSpec, GeneratorStyle,
};
use cla_core::netlist::{Driver, Netlist};
use cla_core::timing::{analyze, path_delay, rank_by_delay};
use common::{ideal, unit};

fn ao21_delay(lib: &CellLibrary) -> f64 {
    lib.lookup(CellKind::Ao21, 3).unwrap().delay
}

#[test]
fn rca_delay_is_affine_in_width() {
    let lib = unit();
    let slope = ao21_delay(&lib);
    let delays: Vec<f64> = (1..=32)
        .map(|n| {
            analyze(&build_rca(n, &lib).unwrap())
                .unwrap()
                .critical_delay
        })
        .collect();
    assert_eq!(delays[3], 5.0);
    for n in 2..=32 {
        assert_eq!(delays[n - 1] - delays[n - 2], slope, "n = {n}");
    }
}

#[test]
fn carry_in_to_every_lookahead_output_is_one_ao21() {
    for lib in [unit(), ideal()] {
        let ao = ao21_delay(&lib);
        for m in 1..=8 {
            let clg = build_decomposed_clg(m, &lib).unwrap();
            for i in 1..=m {
                assert_eq!(
                    path_delay(&clg, "C0", &format!("C{i}")).unwrap(),
                    ao,
                    "m = {m}"
                );
            }
            let sclg = build_decomposed_sclg(m, &lib).unwrap();
            assert_eq!(
                path_delay(&sclg, "C0", &format!("C{m}")).unwrap(),
                ao,
                "m = {m}"
            );
        }
    }
}

#[test]
fn basic_generator_carry_in_crosses_wide_and_then_wide_or() {
    let lib = ideal();
    let and5 = lib.lookup(CellKind::And, 5).unwrap().delay;
    let or5 = lib.lookup(CellKind::Or, 5).unwrap().delay;
    assert_eq!(and5, 1.6);
    let clg = build_basic_clg(4, &lib).unwrap();
    assert_eq!(path_delay(&clg, "C0", "C4").unwrap(), and5 + or5);
    let sclg = build_basic_sclg(4, &lib).unwrap();
    assert_eq!(path_delay(&sclg, "C0", "C4").unwrap(), and5 + or5);
}

#[test]
fn decomposed_block_carry_path_beats_basic() {
    let lib = ideal();
    let basic = build_ccla_block(4, GeneratorStyle::Basic, &lib).unwrap();
    let decomposed = build_ccla_block(4, GeneratorStyle::Decomposed, &lib).unwrap();
    let through = |nl: &Netlist| path_delay(nl, "Cin", "Cout").unwrap();
    assert!(through(&decomposed) < through(&basic));
    assert_eq!(through(&decomposed), ao21_delay(&lib));
}

#[test]
fn decomposed_composition_is_no_slower_than_basic() {
    let lib = ideal();
    for spec in named_specs() {
        let basic = build_adder(&spec.clone().with_style(GeneratorStyle::Basic), &lib).unwrap();
        let decomposed = build_adder(&spec, &lib).unwrap();
        let (b, d) = (
            analyze(&basic).unwrap().critical_delay,
            analyze(&decomposed).unwrap().critical_delay,
        );
        assert!(d <= b, "{}: decomposed {d} > basic {b}", spec.name);
    }
}

/// Longest path into `net` by enumerating every path.
fn brute_arrival(nl: &Netlist, drivers: &[Option<Driver>], net: usize) -> f64 {
    match drivers[net] {
        Some(Driver::Gate(g)) => {
            let gate = &nl.gates()[g];
            gate.cell.delay
                + gate
                    .inputs
                    .iter()
                    .map(|n| brute_arrival(nl, drivers, n.index()))
                    .fold(f64::NEG_INFINITY, f64::max)
        }
        _ => 0.0,
    }
}

#[test]
fn arrivals_match_path_enumeration() {
    let lib = ideal();
    let mut designs = Vec::new();
    for m in 1..=4 {
        designs.push(build_decomposed_clg(m, &lib).unwrap());
        designs.push(build_decomposed_sclg(m, &lib).unwrap());
        designs.push(build_basic_clg(m, &lib).unwrap());
        designs.push(build_ccla_block(m, GeneratorStyle::Decomposed, &lib).unwrap());
    }
    for nl in &designs {
        let report = analyze(nl).unwrap();
        let drivers = nl.drivers();
        for (i, net) in nl.nets().iter().enumerate() {
            assert_eq!(
                report.arrival[&net.name],
                brute_arrival(nl, &drivers, i),
                "{} {}",
                nl.name(),
                net.name
            );
        }
        let worst = report
            .per_output
            .iter()
            .map(|(_, t)| *t)
            .fold(0.0, f64::max);
        assert_eq!(report.critical_delay, worst);
    }
}

#[test]
fn critical_path_is_consistent() {
    for spec in named_specs() {
        let nl = build_adder(&spec, &unit()).unwrap();
        let r = analyze(&nl).unwrap();
        let first = r.critical_path.first().unwrap();
        assert!(first.gate.is_none());
        assert!(nl.inputs().iter().any(|&n| nl.net_name(n) == first.net));
        let last = r.critical_path.last().unwrap();
        assert!(nl.outputs().iter().any(|&n| nl.net_name(n) == last.net));
        let sum: f64 = r
            .critical_gates()
            .iter()
            .map(|&g| nl.gates()[g].cell.delay)
            .sum();
        assert_eq!(sum, r.critical_delay, "{}", spec.name);
        assert_eq!(last.arrival, r.critical_delay);
    }
}

fn scaled(lib: &CellLibrary, s: f64) -> Arc<CellLibrary> {
    Arc::new(lib.map_cells(|c| c.delay *= s).unwrap())
}

#[test]
fn uniform_delay_scaling() {
    let base = CellLibrary::builtin_unit();
    for s in [0.5, 2.0, 4.0, 0.25] {
        let lib = scaled(&base, s);
        for spec in named_specs() {
            let a = analyze(&build_adder(&spec, &Arc::new(base.clone())).unwrap()).unwrap();
            let b = analyze(&build_adder(&spec, &lib).unwrap()).unwrap();
            assert_eq!(b.critical_delay, a.critical_delay * s, "{}", spec.name);
            assert_eq!(b.critical_gates(), a.critical_gates(), "{}", spec.name);
            for (net, t) in &a.arrival {
                assert_eq!(b.arrival[net], t * s);
            }
        }
    }
}

#[test]
fn ranking_is_invariant_under_scaling() {
    let rank = |lib: &Arc<CellLibrary>| {
        let reports: Vec<_> = named_specs()
            .iter()
            .map(|s| {
                (
                    s.name.clone(),
                    analyze(&build_adder(s, lib).unwrap()).unwrap(),
                )
            })
            .collect();
        rank_by_delay(&reports)
            .into_iter()
            .map(|(n, _)| n.to_string())
            .collect::<Vec<_>>()
    };
    let base = CellLibrary::builtin_unit();
    assert_eq!(rank(&Arc::new(base.clone())), rank(&scaled(&base, 3.0)));
}

#[test]
fn frozen_unit_library_ranking() {
    let reports: Vec<_> = named_specs()
        .iter()
        .map(|s| {
            (
                s.name.clone(),
                analyze(&build_adder(s, &unit()).unwrap()).unwrap(),
            )
        })
        .collect();
    let ranked: Vec<(String, f64)> = rank_by_delay(&reports)
        .into_iter()
        .map(|(n, d)| (n.to_string(), d))
        .collect();
    let frozen: Vec<(String, f64)> = FROZEN_RANKING
        .iter()
        .map(|(n, d)| (n.to_string(), *d))
        .collect();
    assert_eq!(ranked, frozen);
}

const FROZEN_RANKING: [(&str, f64); 10] = [
    ("homogeneous-ccla", 12.0),
    ("hybrid-ccla-2", 12.0),
    ("hybrid-ccla-3", 12.0),
    ("hybrid-ccla-1", 13.0),
    ("hybrid-ccla-4", 13.0),
    ("hybrid-scbcla-3", 13.0),
    ("hybrid-scbcla-4", 13.0),
    ("homogeneous-scbcla", 14.0),
    ("hybrid-scbcla-2", 14.0),
    ("hybrid-scbcla-1", 15.0),
];

#[test]
fn spec_parse_drives_timing() {
    let spec = AdderSpec::parse("rca:3", GeneratorStyle::Decomposed).unwrap();
    let nl = build_adder(&spec, &unit()).unwrap();
    assert_eq!(analyze(&nl).unwrap().critical_delay, 4.0);
}
