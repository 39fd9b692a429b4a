// SPDX-License-Identifier: Apache-2.0

//! Zero-delay levelized simulation.
//!
//! Gates are evaluated once per vector in level order, so every net takes its
//! settled value and toggles are counted between consecutive settled states.
//! Glitches are not modeled. Evaluation is bit-parallel: 64 vectors share one
//! `u64` per net.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::netlist::{NetId, Netlist, ValidationReport};

/// Widest adder the exhaustive verifier accepts (2^21 vectors).
pub const EXHAUSTIVE_MAX_WIDTH: usize = 10;

/// Widest adder supported by the integer oracle and vector files.
pub const MAX_ADDER_WIDTH: usize = 64;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("netlist is not simulatable: {0}")]
    InvalidNetlist(ValidationReport),
    #[error("vector has {got} bits, netlist has {expected} primary inputs")]
    VectorWidth { expected: usize, got: usize },
    #[error("netlist does not have the port shape of a {width}-bit adder: {reason}")]
    PortShape { width: usize, reason: String },
    #[error(
        "exhaustive verification is limited to {max} bits (requested {width}); use random mode"
    )]
    ExhaustiveTooWide { width: usize, max: usize },
    #[error("period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("vector file line {line}: {msg}")]
    ParseVector { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One value per primary input, in primary input order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vector(pub Vec<bool>);

/// Operands of one addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AdderVector {
    pub a: u64,
    pub b: u64,
    pub cin: bool,
}

/// A netlist compiled into evaluation order.
pub struct Simulator<'a> {
    nl: &'a Netlist,
    order: Vec<usize>,
}

impl<'a> Simulator<'a> {
    pub fn new(nl: &'a Netlist) -> Result<Self, SimError> {
        let report = nl.validate();
        if !report.is_ok() {
            return Err(SimError::InvalidNetlist(report));
        }
        let order = nl.levelize().expect("validated netlist is acyclic");
        Ok(Simulator { nl, order })
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.nl
    }

    /// Evaluates 64 vectors at once. `pi_words[k]` holds the lanes of the
    /// k-th primary input; `values` receives one word per net.
    pub fn eval_words(&self, pi_words: &[u64], values: &mut Vec<u64>) {
        values.clear();
        values.resize(self.nl.nets().len(), 0);
        for (&net, &w) in self.nl.inputs().iter().zip(pi_words) {
            values[net.index()] = w;
        }
        let mut scratch = [0u64; 16];
        let mut wide = Vec::new();
        for &g in &self.order {
            let gate = &self.nl.gates()[g];
            let out = if gate.inputs.len() <= scratch.len() {
                for (slot, &net) in scratch.iter_mut().zip(&gate.inputs) {
                    *slot = values[net.index()];
                }
                gate.cell.kind.eval_words(&scratch[..gate.inputs.len()])
            } else {
                wide.clear();
                wide.extend(gate.inputs.iter().map(|n| values[n.index()]));
                gate.cell.kind.eval_words(&wide)
            };
            values[gate.output.index()] = out;
        }
    }

    pub fn evaluate(&self, vector: &[bool]) -> Result<Vec<bool>, SimError> {
        let expected = self.nl.inputs().len();
        if vector.len() != expected {
            return Err(SimError::VectorWidth {
                expected,
                got: vector.len(),
            });
        }
        let words: Vec<u64> = vector.iter().map(|&b| b as u64).collect();
        let mut values = Vec::new();
        self.eval_words(&words, &mut values);
        Ok(self
            .nl
            .outputs()
            .iter()
            .map(|n| values[n.index()] & 1 == 1)
            .collect())
    }
}

/// Primary output values for one input vector.
pub fn evaluate(nl: &Netlist, vector: &[bool]) -> Result<Vec<bool>, SimError> {
    Simulator::new(nl)?.evaluate(vector)
}

/// Settled values of every net over a vector sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    vector_count: usize,
    period: f64,
    /// `waves[net][t / 64] >> (t % 64) & 1` is the value of `net` at vector `t`.
    waves: Vec<Vec<u64>>,
    toggles: Vec<u64>,
    outputs: Vec<NetId>,
}

impl SimTrace {
    pub fn vector_count(&self) -> usize {
        self.vector_count
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn value(&self, net: NetId, t: usize) -> bool {
        (self.waves[net.index()][t / 64] >> (t % 64)) & 1 == 1
    }

    pub fn toggles(&self, net: NetId) -> u64 {
        self.toggles[net.index()]
    }

    /// Toggle count per net, indexed by [`NetId::index`].
    pub fn toggle_counts(&self) -> &[u64] {
        &self.toggles
    }

    pub fn total_toggles(&self) -> u64 {
        self.toggles.iter().sum()
    }

    pub fn output_values(&self, t: usize) -> Vec<bool> {
        self.outputs.iter().map(|&n| self.value(n, t)).collect()
    }

    pub fn net_count(&self) -> usize {
        self.waves.len()
    }
}

fn count_toggles(wave: &[u64], len: usize) -> u64 {
    let mut toggles = 0u64;
    let mut prev_last: Option<u64> = None;
    for (w, &word) in wave.iter().enumerate() {
        let lanes = (len - w * 64).min(64);
        if lanes > 1 {
            let pair_mask = (1u64 << (lanes - 1)) - 1;
            toggles += ((word ^ (word >> 1)) & pair_mask).count_ones() as u64;
        }
        if let Some(last) = prev_last {
            toggles += (last ^ (word & 1)) & 1;
        }
        prev_last = Some((word >> (lanes - 1)) & 1);
    }
    toggles
}

/// Simulates `vectors` in order, one vector per `period`.
pub fn run_sequence(nl: &Netlist, vectors: &[Vector], period: f64) -> Result<SimTrace, SimError> {
    if period <= 0.0 || !period.is_finite() {
        return Err(SimError::NonPositivePeriod(period));
    }
    let sim = Simulator::new(nl)?;
    let pis = nl.inputs().len();
    if let Some(v) = vectors.iter().find(|v| v.0.len() != pis) {
        return Err(SimError::VectorWidth {
            expected: pis,
            got: v.0.len(),
        });
    }
    let nets = nl.nets().len();
    let words = vectors.len().div_ceil(64);
    let mut waves = vec![Vec::with_capacity(words); nets];
    let mut pi_words = vec![0u64; pis];
    let mut values = Vec::new();
    for chunk in vectors.chunks(64) {
        pi_words.iter_mut().for_each(|w| *w = 0);
        for (lane, v) in chunk.iter().enumerate() {
            for (k, &bit) in v.0.iter().enumerate() {
                pi_words[k] |= (bit as u64) << lane;
            }
        }
        sim.eval_words(&pi_words, &mut values);
        for (wave, &w) in waves.iter_mut().zip(&values) {
            wave.push(w);
        }
    }
    let toggles = waves
        .iter()
        .map(|w| count_toggles(w, vectors.len()))
        .collect();
    Ok(SimTrace {
        vector_count: vectors.len(),
        period,
        waves,
        toggles,
        outputs: nl.outputs().to_vec(),
    })
}

/// Positions of the adder ports within the primary input and output lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdderPorts {
    pub width: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub cin: usize,
    pub sum: Vec<usize>,
    pub cout: usize,
}

impl AdderPorts {
    /// Locates `A*`, `B*`, `Cin`, `Sum*`, `Cout` by name.
    pub fn probe(nl: &Netlist, width: usize) -> Result<Self, SimError> {
        let shape_err = |reason: String| SimError::PortShape { width, reason };
        if width == 0 || width > MAX_ADDER_WIDTH {
            return Err(shape_err(format!(
                "width must be within 1..={MAX_ADDER_WIDTH}"
            )));
        }
        if nl.inputs().len() != 2 * width + 1 {
            return Err(shape_err(format!(
                "expected {} primary inputs, found {}",
                2 * width + 1,
                nl.inputs().len()
            )));
        }
        if nl.outputs().len() != width + 1 {
            return Err(shape_err(format!(
                "expected {} primary outputs, found {}",
                width + 1,
                nl.outputs().len()
            )));
        }
        let pi = |name: String| {
            nl.inputs()
                .iter()
                .position(|&n| nl.net_name(n) == name)
                .ok_or_else(|| shape_err(format!("missing primary input {name}")))
        };
        let po = |name: String| {
            nl.outputs()
                .iter()
                .position(|&n| nl.net_name(n) == name)
                .ok_or_else(|| shape_err(format!("missing primary output {name}")))
        };
        Ok(AdderPorts {
            width,
            a: (0..width)
                .map(|i| pi(format!("A{i}")))
                .collect::<Result<_, _>>()?,
            b: (0..width)
                .map(|i| pi(format!("B{i}")))
                .collect::<Result<_, _>>()?,
            cin: pi("Cin".into())?,
            sum: (0..width)
                .map(|i| po(format!("Sum{i}")))
                .collect::<Result<_, _>>()?,
            cout: po("Cout".into())?,
        })
    }

    pub fn vector(&self, op: AdderVector) -> Vector {
        let mut bits = vec![false; 2 * self.width + 1];
        for i in 0..self.width {
            bits[self.a[i]] = (op.a >> i) & 1 == 1;
            bits[self.b[i]] = (op.b >> i) & 1 == 1;
        }
        bits[self.cin] = op.cin;
        Vector(bits)
    }

    /// `(sum, cout)` from a primary output vector.
    pub fn decode(&self, outputs: &[bool]) -> (u64, bool) {
        let sum = self
            .sum
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &pos)| acc | ((outputs[pos] as u64) << i));
        (sum, outputs[self.cout])
    }
}

fn width_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// `(A + B + Cin) mod 2^n` and the carry out.
pub fn reference_sum(width: usize, op: AdderVector) -> (u64, bool) {
    let total = op.a as u128 + op.b as u128 + op.cin as u128;
    let sum = (total as u64) & width_mask(width);
    (sum, (total >> width) & 1 == 1)
}

/// Seeded i.i.d. uniform operands. The same `(width, count, seed)` always
/// yields the same sequence.
pub fn random_operands(width: usize, count: usize, seed: u64) -> Vec<AdderVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = width_mask(width);
    (0..count)
        .map(|_| AdderVector {
            a: rng.gen::<u64>() & mask,
            b: rng.gen::<u64>() & mask,
            cin: rng.gen::<bool>(),
        })
        .collect()
}

pub fn adder_vectors(
    nl: &Netlist,
    width: usize,
    ops: &[AdderVector],
) -> Result<Vec<Vector>, SimError> {
    let ports = AdderPorts::probe(nl, width)?;
    Ok(ops.iter().map(|&op| ports.vector(op)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Random { count: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub a: u64,
    pub b: u64,
    pub cin: bool,
    pub expected_sum: u64,
    pub expected_cout: bool,
    pub got_sum: u64,
    pub got_cout: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub vectors_checked: u64,
    pub counterexample: Option<Counterexample>,
}

/// Checks the netlist against integer addition. Stops at the first mismatch.
pub fn verify_adder(nl: &Netlist, width: usize, mode: VerifyMode) -> Result<Verdict, SimError> {
    if mode == VerifyMode::Exhaustive && width > EXHAUSTIVE_MAX_WIDTH {
        return Err(SimError::ExhaustiveTooWide {
            width,
            max: EXHAUSTIVE_MAX_WIDTH,
        });
    }
    let ports = AdderPorts::probe(nl, width)?;
    let sim = Simulator::new(nl)?;
    let mask = width_mask(width);
    let total: u64 = match mode {
        VerifyMode::Exhaustive => 1u64 << (2 * width + 1),
        VerifyMode::Random { count, .. } => count,
    };
    let mut rng = match mode {
        VerifyMode::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        VerifyMode::Exhaustive => None,
    };
    let mut next = |k: u64| -> AdderVector {
        match rng.as_mut() {
            Some(rng) => AdderVector {
                a: rng.gen::<u64>() & mask,
                b: rng.gen::<u64>() & mask,
                cin: rng.gen::<bool>(),
            },
            None => AdderVector {
                a: k & mask,
                b: (k >> width) & mask,
                cin: (k >> (2 * width)) & 1 == 1,
            },
        }
    };

    let pis = nl.inputs().len();
    let mut pi_words = vec![0u64; pis];
    let mut values = Vec::new();
    let mut batch = Vec::with_capacity(64);
    let mut checked = 0u64;
    while checked < total {
        let lanes = (total - checked).min(64) as usize;
        batch.clear();
        pi_words.iter_mut().for_each(|w| *w = 0);
        for lane in 0..lanes {
            let op = next(checked + lane as u64);
            for i in 0..width {
                pi_words[ports.a[i]] |= ((op.a >> i) & 1) << lane;
                pi_words[ports.b[i]] |= ((op.b >> i) & 1) << lane;
            }
            pi_words[ports.cin] |= (op.cin as u64) << lane;
            batch.push(op);
        }
        sim.eval_words(&pi_words, &mut values);
        let outs = nl.outputs();
        for (lane, &op) in batch.iter().enumerate() {
            let bit = |pos: usize| (values[outs[pos].index()] >> lane) & 1;
            let got_sum = ports
                .sum
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &pos)| acc | (bit(pos) << i));
            let got_cout = bit(ports.cout) == 1;
            let (expected_sum, expected_cout) = reference_sum(width, op);
            if got_sum != expected_sum || got_cout != expected_cout {
                return Ok(Verdict {
                    passed: false,
                    vectors_checked: checked + lane as u64 + 1,
                    counterexample: Some(Counterexample {
                        a: op.a,
                        b: op.b,
                        cin: op.cin,
                        expected_sum,
                        expected_cout,
                        got_sum,
                        got_cout,
                    }),
                });
            }
        }
        checked += lanes as u64;
    }
    Ok(Verdict {
        passed: true,
        vectors_checked: checked,
        counterexample: None,
    })
}

/// Parses `A=<hex> B=<hex> Cin=<0|1>` lines. Blank lines and `#` comments are
/// skipped.
pub fn parse_vector_file(text: &str) -> Result<Vec<AdderVector>, SimError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| SimError::ParseVector { line: idx + 1, msg };
        let (mut a, mut b, mut cin) = (None, None, None);
        for token in line.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, found `{token}`")))?;
            let hex = |v: &str| {
                let digits = v
                    .strip_prefix("0x")
                    .or_else(|| v.strip_prefix("0X"))
                    .unwrap_or(v);
                u64::from_str_radix(digits, 16).map_err(|_| err(format!("bad hex value `{v}`")))
            };
            match key {
                "A" => a = Some(hex(value)?),
                "B" => b = Some(hex(value)?),
                "Cin" => {
                    cin = Some(match value {
                        "0" => false,
                        "1" => true,
                        _ => return Err(err(format!("Cin must be 0 or 1, found `{value}`"))),
                    })
                }
                other => return Err(err(format!("unknown field `{other}`"))),
            }
        }
        out.push(AdderVector {
            a: a.ok_or_else(|| err("missing A".into()))?,
            b: b.ok_or_else(|| err("missing B".into()))?,
            cin: cin.ok_or_else(|| err("missing Cin".into()))?,
        });
    }
    Ok(out)
}

pub fn format_vector_file(ops: &[AdderVector], width: usize) -> String {
    let digits = width.div_ceil(4).max(1);
    let mut out = String::new();
    for op in ops {
        let _ = writeln!(
            out,
            "A={:0digits$x} B={:0digits$x} Cin={}",
            op.a, op.b, op.cin as u8
        );
    }
    out
}

const TIME_LADDER: [(&str, i32); 6] = [
    ("s", 0),
    ("ms", -3),
    ("us", -6),
    ("ns", -9),
    ("ps", -12),
    ("fs", -15),
];

/// Picks a VCD timescale and integer step for `period` given in `unit`.
fn timescale(period: f64, unit: &str) -> (String, u64) {
    let mut k = 0;
    while k < 6 {
        let scaled = period * 10f64.powi(k);
        if (scaled - scaled.round()).abs() < 1e-9 * scaled.max(1.0) {
            break;
        }
        k += 1;
    }
    let step = (period * 10f64.powi(k)).round().max(1.0) as u64;
    let Some(&(_, base)) = TIME_LADDER.iter().find(|(u, _)| *u == unit) else {
        return (format!("1 {unit}"), step);
    };
    let exp = base - k;
    let &(name, unit_exp) = TIME_LADDER
        .iter()
        .find(|(_, e)| *e <= exp)
        .unwrap_or(&TIME_LADDER[5]);
    let magnitude = 10u64.pow((exp - unit_exp).max(0) as u32);
    (format!("{magnitude}{name}"), step)
}

fn vcd_id(mut index: usize) -> String {
    let mut id = String::new();
    loop {
        id.push((b'!' + (index % 94) as u8) as char);
        index /= 94;
        if index == 0 {
            break;
        }
        index -= 1;
    }
    id
}

/// Writes every net of `nl` as a 1-bit VCD wire; one timestamp per vector.
pub fn write_vcd(trace: &SimTrace, nl: &Netlist, mut w: impl Write) -> io::Result<()> {
    if trace.net_count() != nl.nets().len() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "trace was not produced from this netlist",
        ));
    }
    let (scale, step) = timescale(trace.period(), &nl.library().units().time);
    writeln!(w, "$version cla-core logicsim $end")?;
    writeln!(w, "$timescale {scale} $end")?;
    writeln!(w, "$scope module {} $end", nl.name().replace(' ', "_"))?;
    let ids: Vec<String> = (0..nl.nets().len()).map(vcd_id).collect();
    for (net, id) in nl.nets().iter().zip(&ids) {
        writeln!(w, "$var wire 1 {id} {} $end", net.name.replace(' ', "_"))?;
    }
    writeln!(w, "$upscope $end")?;
    writeln!(w, "$enddefinitions $end")?;
    for t in 0..trace.vector_count() {
        writeln!(w, "#{}", t as u64 * step)?;
        if t == 0 {
            writeln!(w, "$dumpvars")?;
        }
        for (i, id) in ids.iter().enumerate() {
            let net = NetId::from_index(i);
            let v = trace.value(net, t);
            if t == 0 || v != trace.value(net, t - 1) {
                writeln!(w, "{}{id}", v as u8)?;
            }
        }
        if t == 0 {
            writeln!(w, "$end")?;
        }
    }
    Ok(())
}

pub fn dump_vcd(trace: &SimTrace, nl: &Netlist, path: impl AsRef<Path>) -> Result<(), SimError> {
    let file = std::fs::File::create(path)?;
    let mut w = io::BufWriter::new(file);
    write_vcd(trace, nl, &mut w)?;
    w.flush()?;
    Ok(())
}
