// SPDX-License-Identifier: Apache-2.0

//! Flat combinational gate netlists.
//!
//! A [`Netlist`] is a DAG of [`GateInstance`]s connected by named [`Net`]s.
//! Generators build netlists through [`NetlistBuilder`], which refuses to
//! finish an invalid graph. Netlists assembled by hand (or decoded from
//! JSON) go through [`Netlist::validate`], which reports violations as data.
//!
//! JSON is the interchange format:
//!
//! ```json
//! {
//!   "name": "ao21",
//!   "library": "unit",
//!   "pis": ["a", "b", "c"],
//!   "pos": ["out"],
//!   "gates": [
//!     { "kind": "AO21", "fanin": 3, "inputs": ["a", "b", "c"], "output": "out", "tag": "demo" }
//!   ]
//! }
//! ```
//!
//! Nets are referenced by name. Verilog and DOT are export-only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::celllib::{Cell, CellKind, CellLibrary, LibraryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetId(u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Self {
        NetId(u32::try_from(index).expect("net index fits in u32"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateInstance {
    pub cell: Cell,
    /// For AO21 the order is `(a, b, c)` with output `(a & b) | c`.
    pub inputs: Vec<NetId>,
    pub output: NetId,
    /// Structural role, e.g. `s3.clg.ao21.c2`.
    pub tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Driver {
    /// Position in the primary input list.
    Input(usize),
    /// Index in the gate list.
    Gate(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownNet {
        gate: Option<usize>,
        index: usize,
    },
    Cycle {
        gates: Vec<usize>,
    },
    UndrivenNet {
        net: String,
        gate: usize,
    },
    UndrivenOutput {
        net: String,
    },
    MultiDriven {
        net: String,
        drivers: usize,
    },
    FaninMismatch {
        gate: usize,
        tag: String,
        cell_fanin: usize,
        connected: usize,
    },
    IllegalCell {
        gate: usize,
        tag: String,
        cell: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownNet {
                gate: Some(g),
                index,
            } => {
                write!(f, "gate {g} references unknown net #{index}")
            }
            Violation::UnknownNet { gate: None, index } => {
                write!(f, "port references unknown net #{index}")
            }
            Violation::Cycle { gates } => write!(f, "combinational cycle through gates {gates:?}"),
            Violation::UndrivenNet { net, gate } => {
                write!(f, "net `{net}` feeding gate {gate} has no driver")
            }
            Violation::UndrivenOutput { net } => write!(f, "primary output `{net}` has no driver"),
            Violation::MultiDriven { net, drivers } => {
                write!(f, "net `{net}` has {drivers} drivers")
            }
            Violation::FaninMismatch {
                gate,
                tag,
                cell_fanin,
                connected,
            } => write!(
                f,
                "gate {gate} ({tag}) has a {cell_fanin}-input cell but {connected} connected nets"
            ),
            Violation::IllegalCell { gate, tag, cell } => {
                write!(f, "gate {gate} ({tag}) uses illegal cell {cell}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error("net name `{0}` is already in use")]
    DuplicateNet(String),
    #[error("no net named `{0}`")]
    UnknownNet(String),
    #[error("invalid netlist: {0}")]
    Invalid(ValidationReport),
    #[error("malformed netlist JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Gate that exceeds a fan-in budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaninViolation {
    pub gate: usize,
    pub cell: String,
    pub fanin: usize,
    pub output: String,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetlistStats {
    pub gate_count: usize,
    pub by_kind: BTreeMap<CellKind, usize>,
    pub by_cell: BTreeMap<String, usize>,
    pub total_area: f64,
    pub total_leakage: f64,
    pub net_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Verilog,
    Dot,
    Json,
}

#[derive(Debug, Clone)]
pub struct Netlist {
    name: String,
    library: Arc<CellLibrary>,
    nets: Vec<Net>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    gates: Vec<GateInstance>,
}

impl Netlist {
    /// Assembles a netlist without checking it. Call [`Netlist::validate`]
    /// before handing it to the simulator or timer.
    pub fn from_parts(
        name: impl Into<String>,
        library: Arc<CellLibrary>,
        nets: Vec<Net>,
        inputs: Vec<NetId>,
        outputs: Vec<NetId>,
        gates: Vec<GateInstance>,
    ) -> Self {
        Netlist {
            name: name.into(),
            library,
            nets,
            inputs,
            outputs,
            gates,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn library(&self) -> &Arc<CellLibrary> {
        &self.library
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id.index()].name
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn gates(&self) -> &[GateInstance] {
        &self.gates
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.nets
            .iter()
            .position(|n| n.name == name)
            .map(NetId::from_index)
    }

    pub fn net_by_name(&self, name: &str) -> Result<NetId, NetlistError> {
        self.find_net(name)
            .ok_or_else(|| NetlistError::UnknownNet(name.to_string()))
    }

    /// Driver of every net, `None` where undriven. If a net has several
    /// drivers the last one wins; [`Netlist::validate`] reports those.
    pub fn drivers(&self) -> Vec<Option<Driver>> {
        let mut drivers = vec![None; self.nets.len()];
        for (i, &net) in self.inputs.iter().enumerate() {
            if let Some(slot) = drivers.get_mut(net.index()) {
                *slot = Some(Driver::Input(i));
            }
        }
        for (g, gate) in self.gates.iter().enumerate() {
            if let Some(slot) = drivers.get_mut(gate.output.index()) {
                *slot = Some(Driver::Gate(g));
            }
        }
        drivers
    }

    /// Gates that read each net.
    pub fn fanouts(&self) -> Vec<Vec<usize>> {
        let mut fanouts = vec![Vec::new(); self.nets.len()];
        for (g, gate) in self.gates.iter().enumerate() {
            for &input in &gate.inputs {
                fanouts[input.index()].push(g);
            }
        }
        fanouts
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.nets.len();

        let mut bad_ref = false;
        for &net in self.inputs.iter().chain(&self.outputs) {
            if net.index() >= n {
                violations.push(Violation::UnknownNet {
                    gate: None,
                    index: net.index(),
                });
                bad_ref = true;
            }
        }
        for (g, gate) in self.gates.iter().enumerate() {
            for &net in gate.inputs.iter().chain(std::iter::once(&gate.output)) {
                if net.index() >= n {
                    violations.push(Violation::UnknownNet {
                        gate: Some(g),
                        index: net.index(),
                    });
                    bad_ref = true;
                }
            }
        }
        if bad_ref {
            return ValidationReport { violations };
        }

        for (g, gate) in self.gates.iter().enumerate() {
            let (lo, hi) = gate.cell.kind.fanin_range(usize::MAX);
            if gate.cell.fanin < lo || gate.cell.fanin > hi {
                violations.push(Violation::IllegalCell {
                    gate: g,
                    tag: gate.tag.clone(),
                    cell: gate.cell.name(),
                });
            }
            if gate.inputs.len() != gate.cell.fanin {
                violations.push(Violation::FaninMismatch {
                    gate: g,
                    tag: gate.tag.clone(),
                    cell_fanin: gate.cell.fanin,
                    connected: gate.inputs.len(),
                });
            }
        }

        let mut driver_count = vec![0usize; n];
        for &net in &self.inputs {
            driver_count[net.index()] += 1;
        }
        for gate in &self.gates {
            driver_count[gate.output.index()] += 1;
        }
        for (i, &count) in driver_count.iter().enumerate() {
            if count > 1 {
                violations.push(Violation::MultiDriven {
                    net: self.nets[i].name.clone(),
                    drivers: count,
                });
            }
        }
        for (g, gate) in self.gates.iter().enumerate() {
            for &input in &gate.inputs {
                if driver_count[input.index()] == 0 {
                    violations.push(Violation::UndrivenNet {
                        net: self.nets[input.index()].name.clone(),
                        gate: g,
                    });
                }
            }
        }
        for &out in &self.outputs {
            if driver_count[out.index()] == 0 {
                violations.push(Violation::UndrivenOutput {
                    net: self.nets[out.index()].name.clone(),
                });
            }
        }

        if let Err(gates) = self.levelize() {
            violations.push(Violation::Cycle { gates });
        }

        ValidationReport { violations }
    }

    /// Gate indices in evaluation order, sorted by `(level, index)` where a
    /// gate's level is one more than the deepest gate driving it. On a cycle
    /// returns the gates that could not be ordered.
    pub fn levelize(&self) -> Result<Vec<usize>, Vec<usize>> {
        let drivers = self.drivers();
        let fanouts = self.fanouts();
        let mut pending: Vec<usize> = self
            .gates
            .iter()
            .map(|gate| {
                gate.inputs
                    .iter()
                    .filter(|net| matches!(drivers[net.index()], Some(Driver::Gate(_))))
                    .count()
            })
            .collect();
        let mut level = vec![0usize; self.gates.len()];
        let mut ready: Vec<usize> = (0..self.gates.len()).filter(|&g| pending[g] == 0).collect();
        let mut order = Vec::with_capacity(self.gates.len());
        while let Some(g) = ready.pop() {
            order.push(g);
            for &succ in &fanouts[self.gates[g].output.index()] {
                level[succ] = level[succ].max(level[g] + 1);
                pending[succ] -= 1;
                if pending[succ] == 0 {
                    ready.push(succ);
                }
            }
        }
        if order.len() != self.gates.len() {
            let stuck = (0..self.gates.len()).filter(|&g| pending[g] > 0).collect();
            return Err(stuck);
        }
        order.sort_by_key(|&g| (level[g], g));
        Ok(order)
    }

    /// Gates whose cell fan-in exceeds `max`.
    pub fn audit_fanin(&self, max: usize) -> Vec<FaninViolation> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, gate)| gate.cell.fanin > max)
            .map(|(g, gate)| FaninViolation {
                gate: g,
                cell: gate.cell.name(),
                fanin: gate.cell.fanin,
                output: self.net_name(gate.output).to_string(),
                tag: gate.tag.clone(),
            })
            .collect()
    }

    pub fn stats(&self) -> NetlistStats {
        let mut by_kind = BTreeMap::new();
        let mut by_cell = BTreeMap::new();
        let mut total_area = 0.0;
        let mut total_leakage = 0.0;
        for gate in &self.gates {
            *by_kind.entry(gate.cell.kind).or_insert(0) += 1;
            *by_cell.entry(gate.cell.name()).or_insert(0) += 1;
            total_area += gate.cell.area;
            total_leakage += gate.cell.leakage;
        }
        NetlistStats {
            gate_count: self.gates.len(),
            by_kind,
            by_cell,
            total_area,
            total_leakage,
            net_count: self.nets.len(),
        }
    }

    /// Every net in the transitive fan-in of `net`, including `net` itself.
    pub fn transitive_fanin(&self, net: NetId) -> BTreeSet<NetId> {
        let drivers = self.drivers();
        let mut seen = BTreeSet::new();
        let mut stack = vec![net];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if let Some(Driver::Gate(g)) = drivers[n.index()] {
                stack.extend(self.gates[g].inputs.iter().copied());
            }
        }
        seen
    }

    pub fn export(&self, format: ExportFormat) -> String {
        match format {
            ExportFormat::Verilog => self.to_verilog(),
            ExportFormat::Dot => self.to_dot(),
            ExportFormat::Json => self.to_json(),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = NetlistJson {
            name: self.name.clone(),
            library: self.library.name().to_string(),
            pis: self
                .inputs
                .iter()
                .map(|&n| self.net_name(n).to_string())
                .collect(),
            pos: self
                .outputs
                .iter()
                .map(|&n| self.net_name(n).to_string())
                .collect(),
            gates: self
                .gates
                .iter()
                .map(|g| GateJson {
                    kind: g.cell.kind,
                    fanin: g.cell.fanin,
                    inputs: g
                        .inputs
                        .iter()
                        .map(|&n| self.net_name(n).to_string())
                        .collect(),
                    output: self.net_name(g.output).to_string(),
                    tag: g.tag.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("netlist serializes");
        text.push('\n');
        text
    }

    /// Decodes the JSON schema, resolving cells against `library`.
    pub fn from_json(text: &str, library: Arc<CellLibrary>) -> Result<Self, NetlistError> {
        let doc: NetlistJson = serde_json::from_str(text)?;
        let mut nets: Vec<Net> = Vec::new();
        let mut index: HashMap<String, NetId> = HashMap::new();
        let mut intern = |name: &str, nets: &mut Vec<Net>| -> NetId {
            *index.entry(name.to_string()).or_insert_with(|| {
                nets.push(Net {
                    name: name.to_string(),
                });
                NetId::from_index(nets.len() - 1)
            })
        };
        let inputs: Vec<NetId> = doc.pis.iter().map(|n| intern(n, &mut nets)).collect();
        let mut gates = Vec::with_capacity(doc.gates.len());
        for g in &doc.gates {
            let cell = library.lookup(g.kind, g.fanin)?;
            let inputs = g.inputs.iter().map(|n| intern(n, &mut nets)).collect();
            let output = intern(&g.output, &mut nets);
            gates.push(GateInstance {
                cell,
                inputs,
                output,
                tag: g.tag.clone(),
            });
        }
        let outputs = doc.pos.iter().map(|n| intern(n, &mut nets)).collect();
        let nl = Netlist::from_parts(doc.name, library, nets, inputs, outputs, gates);
        let report = nl.validate();
        if !report.is_ok() {
            return Err(NetlistError::Invalid(report));
        }
        Ok(nl)
    }

    pub fn to_verilog(&self) -> String {
        let mut out = String::new();
        let module = verilog_ident(&self.name);
        let input_set: BTreeSet<NetId> = self.inputs.iter().copied().collect();
        let mut ports: Vec<String> = self.inputs.iter().map(|&n| self.vname(n)).collect();
        let mut passthrough = Vec::new();
        for &po in &self.outputs {
            if input_set.contains(&po) {
                let port = verilog_ident(&format!("{}_po", self.net_name(po)));
                passthrough.push((port.clone(), po));
                ports.push(port);
            } else {
                ports.push(self.vname(po));
            }
        }

        let _ = writeln!(
            out,
            "// {} gates, library {}",
            self.gates.len(),
            self.library.name()
        );
        let _ = writeln!(out, "module {module} (");
        for (i, p) in ports.iter().enumerate() {
            let sep = if i + 1 == ports.len() { "" } else { "," };
            let _ = writeln!(out, "  {p}{sep}");
        }
        out.push_str(");\n");
        for &pi in &self.inputs {
            let _ = writeln!(out, "  input {};", self.vname(pi));
        }
        let output_set: BTreeSet<NetId> = self.outputs.iter().copied().collect();
        for &po in &self.outputs {
            if !input_set.contains(&po) {
                let _ = writeln!(out, "  output {};", self.vname(po));
            }
        }
        for (port, _) in &passthrough {
            let _ = writeln!(out, "  output {port};");
        }
        for gate in &self.gates {
            if !output_set.contains(&gate.output) {
                let _ = writeln!(out, "  wire {};", self.vname(gate.output));
            }
        }
        out.push('\n');
        for (g, gate) in self.gates.iter().enumerate() {
            let mut pins: Vec<String> = gate
                .inputs
                .iter()
                .enumerate()
                .map(|(i, &n)| format!(".{}({})", pin_name(i), self.vname(n)))
                .collect();
            pins.push(format!(".out({})", self.vname(gate.output)));
            let _ = writeln!(out, "  {} g{} ({});", gate.cell.name(), g, pins.join(", "));
        }
        for (port, net) in &passthrough {
            let _ = writeln!(out, "  assign {port} = {};", self.vname(*net));
        }
        out.push_str("endmodule\n");
        out
    }

    fn vname(&self, net: NetId) -> String {
        verilog_ident(self.net_name(net))
    }

    pub fn to_dot(&self) -> String {
        let drivers = self.drivers();
        let node = |d: Option<Driver>| match d {
            Some(Driver::Input(i)) => format!("pi{i}"),
            Some(Driver::Gate(g)) => format!("g{g}"),
            None => "undriven".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(out, "digraph {:?} {{", self.name);
        out.push_str("  rankdir=LR;\n");
        for (i, &pi) in self.inputs.iter().enumerate() {
            let _ = writeln!(
                out,
                "  pi{i} [shape=triangle, label={:?}];",
                self.net_name(pi)
            );
        }
        for (g, gate) in self.gates.iter().enumerate() {
            let _ = writeln!(
                out,
                "  g{g} [shape=box, label={:?}];",
                format!("{}\n{}", gate.cell.name(), gate.tag)
            );
        }
        for (o, &po) in self.outputs.iter().enumerate() {
            let _ = writeln!(
                out,
                "  po{o} [shape=invtriangle, label={:?}];",
                self.net_name(po)
            );
        }
        for (g, gate) in self.gates.iter().enumerate() {
            for &input in &gate.inputs {
                let _ = writeln!(
                    out,
                    "  {} -> g{g} [label={:?}];",
                    node(drivers[input.index()]),
                    self.net_name(input)
                );
            }
        }
        for (o, &po) in self.outputs.iter().enumerate() {
            let _ = writeln!(
                out,
                "  {} -> po{o} [label={:?}];",
                node(drivers[po.index()]),
                self.net_name(po)
            );
        }
        out.push_str("}\n");
        out
    }
}

fn pin_name(i: usize) -> String {
    const PINS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    match PINS.get(i) {
        Some(&c) => (c as char).to_string(),
        None => format!("in{i}"),
    }
}

fn verilog_ident(name: &str) -> String {
    let simple = !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit());
    if simple {
        name.to_string()
    } else {
        let cleaned: String = name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        format!("n_{cleaned}")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetlistJson {
    name: String,
    library: String,
    pis: Vec<String>,
    pos: Vec<String>,
    gates: Vec<GateJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GateJson {
    kind: CellKind,
    fanin: usize,
    inputs: Vec<String>,
    output: String,
    tag: String,
}

/// Incremental netlist construction with unique net names.
#[derive(Debug)]
pub struct NetlistBuilder {
    name: String,
    library: Arc<CellLibrary>,
    nets: Vec<Net>,
    names: HashMap<String, NetId>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    gates: Vec<GateInstance>,
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>, library: Arc<CellLibrary>) -> Self {
        NetlistBuilder {
            name: name.into(),
            library,
            nets: Vec::new(),
            names: HashMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            gates: Vec::new(),
        }
    }

    pub fn library(&self) -> &CellLibrary {
        &self.library
    }

    fn new_net(&mut self, name: &str) -> Result<NetId, NetlistError> {
        if self.names.contains_key(name) {
            return Err(NetlistError::DuplicateNet(name.to_string()));
        }
        let id = NetId::from_index(self.nets.len());
        self.nets.push(Net {
            name: name.to_string(),
        });
        self.names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn input(&mut self, name: &str) -> Result<NetId, NetlistError> {
        let id = self.new_net(name)?;
        self.inputs.push(id);
        Ok(id)
    }

    /// Instantiates the library cell of `kind` whose fan-in matches
    /// `inputs.len()`, driving a fresh net called `output`.
    pub fn gate(
        &mut self,
        kind: CellKind,
        inputs: &[NetId],
        output: &str,
        tag: impl Into<String>,
    ) -> Result<NetId, NetlistError> {
        let cell = self.library.lookup(kind, inputs.len())?;
        let out = self.new_net(output)?;
        self.gates.push(GateInstance {
            cell,
            inputs: inputs.to_vec(),
            output: out,
            tag: tag.into(),
        });
        Ok(out)
    }

    pub fn output(&mut self, net: NetId) {
        self.outputs.push(net);
    }

    pub fn rename(&mut self, net: NetId, name: &str) -> Result<(), NetlistError> {
        if self.names.contains_key(name) {
            return Err(NetlistError::DuplicateNet(name.to_string()));
        }
        let old = std::mem::replace(&mut self.nets[net.index()].name, name.to_string());
        self.names.remove(&old);
        self.names.insert(name.to_string(), net);
        Ok(())
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.nets[net.index()].name
    }

    pub fn finish(self) -> Result<Netlist, NetlistError> {
        let nl = Netlist::from_parts(
            self.name,
            self.library,
            self.nets,
            self.inputs,
            self.outputs,
            self.gates,
        );
        let report = nl.validate();
        if !report.is_ok() {
            return Err(NetlistError::Invalid(report));
        }
        Ok(nl)
    }
}
