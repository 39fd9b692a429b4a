// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::sync::Arc;

use cla_core::celllib::{CellLibrary, LibraryMode};
use cla_core::logicsim::Simulator;
use cla_core::netlist::Netlist;

pub fn unit() -> Arc<CellLibrary> {
    Arc::new(CellLibrary::builtin_unit())
}

pub fn ideal() -> Arc<CellLibrary> {
    Arc::new(
        CellLibrary::builtin_unit()
            .with_mode(LibraryMode::Ideal)
            .unwrap(),
    )
}

/// Calls `f(k, outs)` for every input assignment `k` (bit j of `k` drives the
/// j-th primary input); bit o of `outs` is the o-th primary output.
pub fn for_all_assignments(nl: &Netlist, mut f: impl FnMut(u64, u64)) {
    let pis = nl.inputs().len();
    assert!(pis < 40, "too many inputs to enumerate");
    let total = 1u64 << pis;
    let sim = Simulator::new(nl).unwrap();
    let mut words = vec![0u64; pis];
    let mut values = Vec::new();
    let mut base = 0u64;
    while base < total {
        let lanes = (total - base).min(64);
        for (j, w) in words.iter_mut().enumerate() {
            *w = 0;
            for lane in 0..lanes {
                *w |= (((base + lane) >> j) & 1) << lane;
            }
        }
        sim.eval_words(&words, &mut values);
        for lane in 0..lanes {
            let outs = nl.outputs().iter().enumerate().fold(0u64, |acc, (o, n)| {
                acc | (((values[n.index()] >> lane) & 1) << o)
            });
            f(base + lane, outs);
        }
        base += lanes;
    }
}

/// Output words of every assignment, in assignment order.
pub fn truth_table(nl: &Netlist) -> Vec<u64> {
    let mut table = Vec::new();
    for_all_assignments(nl, |_, outs| table.push(outs));
    table
}
