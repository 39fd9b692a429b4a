// SPDX-License-Identifier: Apache-2.0

mod common;

use cla_core::genarch::{build_adder, AdderSpec, GeneratorStyle, SegmentKind, SegmentSpec};
use cla_core::logicsim::{
    adder_vectors, format_vector_file, parse_vector_file, random_operands, run_sequence,
    verify_adder, AdderVector, VerifyMode,
};
use cla_core::metrics::{
    compare, compute_fom, delay_reduction_percent, speedup_percent, MetricsReport,
};
use cla_core::netlist::Netlist;
use common::{ideal, unit};
use proptest::prelude::*;

fn segment() -> impl Strategy<Value = SegmentSpec> {
    (
        prop_oneof![
            Just(SegmentKind::Rca),
            Just(SegmentKind::Ccla),
            Just(SegmentKind::Scbcla)
        ],
        1usize..=6,
    )
        .prop_map(|(kind, width)| SegmentSpec::new(kind, width))
}

fn spec(max_segments: usize) -> impl Strategy<Value = AdderSpec> {
    prop::collection::vec(segment(), 1..=max_segments)
        .prop_map(|segments| AdderSpec::new("random", segments))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spec_text_round_trips(s in spec(8)) {
        let parsed = AdderSpec::parse(&s.to_text(), GeneratorStyle::Decomposed).unwrap();
        prop_assert_eq!(parsed.segments, s.segments);
    }

    #[test]
    fn random_compositions_add(s in spec(5), seed in any::<u64>()) {
        let n = s.total_width();
        prop_assume!(n <= 30);
        let nl = build_adder(&s, &unit()).unwrap();
        prop_assert!(nl.audit_fanin(4).is_empty());
        let mode = if n <= 5 {
            VerifyMode::Exhaustive
        } else {
            VerifyMode::Random { count: 256, seed }
        };
        let v = verify_adder(&nl, n, mode).unwrap();
        prop_assert!(v.passed, "{} {:?}", s.to_text(), v.counterexample);
    }

    #[test]
    fn basic_style_compositions_add(s in spec(4), seed in any::<u64>()) {
        let s = s.with_style(GeneratorStyle::Basic);
        let n = s.total_width();
        let nl = build_adder(&s, &ideal()).unwrap();
        let v = verify_adder(&nl, n, VerifyMode::Random { count: 256, seed }).unwrap();
        prop_assert!(v.passed, "{} {:?}", s.to_text(), v.counterexample);
    }

    #[test]
    fn json_round_trip_is_byte_identical(s in spec(5)) {
        let nl = build_adder(&s, &unit()).unwrap();
        let text = nl.to_json();
        let back = Netlist::from_json(&text, nl.library().clone()).unwrap();
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn toggles_are_bounded(s in spec(4), count in 1usize..300, seed in any::<u64>()) {
        let n = s.total_width();
        let nl = build_adder(&s, &unit()).unwrap();
        let ops = random_operands(n, count, seed);
        let trace = run_sequence(&nl, &adder_vectors(&nl, n, &ops).unwrap(), 5.0).unwrap();
        prop_assert!(trace.toggle_counts().iter().all(|&t| t < count as u64));
    }

    #[test]
    fn vector_files_round_trip(width in 1usize..=64, count in 0usize..50, seed in any::<u64>()) {
        let ops: Vec<AdderVector> = random_operands(width, count, seed);
        prop_assert_eq!(parse_vector_file(&format_vector_file(&ops, width)).unwrap(), ops);
    }

    #[test]
    fn fom_gain_is_reciprocal(
        a in (0.1f64..100.0, 0.1f64..10.0, 10.0f64..1000.0),
        b in (0.1f64..100.0, 0.1f64..10.0, 10.0f64..1000.0),
    ) {
        let ra = MetricsReport::from_values("a", a.0, a.1, a.2).unwrap();
        let rb = MetricsReport::from_values("b", b.0, b.1, b.2).unwrap();
        let ab = compare(&ra, &rb).unwrap().fom_gain_percent;
        let ba = compare(&rb, &ra).unwrap().fom_gain_percent;
        prop_assert!(((1.0 + ab / 100.0) * (1.0 + ba / 100.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reduction_and_speedup_agree(base in 0.01f64..100.0, cand in 0.01f64..100.0) {
        let r = delay_reduction_percent(base, cand);
        let s = speedup_percent(base, cand);
        prop_assert!(((1.0 - r / 100.0) * (1.0 + s / 100.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fom_ranking_survives_common_scaling(
        rows in prop::collection::vec((0.1f64..100.0, 0.1f64..10.0, 10.0f64..1000.0), 2..10),
        k in 0.01f64..100.0,
        which in 0usize..3,
    ) {
        let order = |scale: [f64; 3]| {
            let foms: Vec<f64> = rows
                .iter()
                .map(|r| compute_fom(r.0 * scale[0], r.1 * scale[1], r.2 * scale[2]).unwrap())
                .collect();
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            idx.sort_by(|&i, &j| foms[j].total_cmp(&foms[i]));
            (idx, foms)
        };
        let mut scale = [1.0; 3];
        scale[which] = k;
        let (plain, foms) = order([1.0; 3]);
        let (scaled, _) = order(scale);
        // only compare where the original order is not a near tie
        let distinct = foms
            .iter()
            .enumerate()
            .all(|(i, a)| foms[i + 1..].iter().all(|b| (a - b).abs() > 1e-9 * a.abs()));
        prop_assume!(distinct);
        prop_assert_eq!(plain, scaled);
    }
}
