// SPDX-License-Identifier: Apache-2.0

//! Standard-cell library model.
//!
//! A [`CellLibrary`] is the set of gates a generator may instantiate, keyed by
//! `(kind, fanin)`. In [`LibraryMode::Constrained`] the library is a closed set
//! bounded by `max_fanin`; in [`LibraryMode::Ideal`] wide AND/OR gates are
//! synthesized on demand from the 2-input cells so that flat two-level carry
//! equations can still be built and measured.
//!
//! The text format read by [`CellLibrary::parse`] is line based:
//!
//! ```text
//! # comment
//! name=unit
//! max_fanin=4
//! mode=constrained            # or: ideal
//! units_time=ns
//! units_area=um2
//! units_energy=fJ
//! units_power=uW              # optional, defaults to energy/time
//! [cell] kind=AND fanin=3 delay=1.0 area=1.0 switch_energy=1.0 leakage=0.0
//! ```
//!
//! Header lines are `key=value`. Each `[cell]` line carries all six cell
//! fields as whitespace separated `key=value` tokens. Blank lines and text
//! after `#` are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_FANIN: usize = 4;

/// Growth factor per extra input for synthesized ideal-mode AND/OR delay.
const IDEAL_DELAY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CellKind {
    Inv,
    Buf,
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    /// `(a & b) | c`
    Ao21,
}

impl CellKind {
    pub const ALL: [CellKind; 9] = [
        CellKind::Inv,
        CellKind::Buf,
        CellKind::And,
        CellKind::Or,
        CellKind::Nand,
        CellKind::Nor,
        CellKind::Xor,
        CellKind::Xnor,
        CellKind::Ao21,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Inv => "INV",
            CellKind::Buf => "BUF",
            CellKind::And => "AND",
            CellKind::Or => "OR",
            CellKind::Nand => "NAND",
            CellKind::Nor => "NOR",
            CellKind::Xor => "XOR",
            CellKind::Xnor => "XNOR",
            CellKind::Ao21 => "AO21",
        }
    }

    /// Legal fan-in range for this kind. `max_fanin` bounds only the
    /// variadic kinds.
    pub fn fanin_range(self, max_fanin: usize) -> (usize, usize) {
        match self {
            CellKind::Inv | CellKind::Buf => (1, 1),
            CellKind::Xor | CellKind::Xnor => (2, 2),
            CellKind::Ao21 => (3, 3),
            CellKind::And | CellKind::Or | CellKind::Nand | CellKind::Nor => (2, max_fanin),
        }
    }

    pub fn is_variadic(self) -> bool {
        matches!(
            self,
            CellKind::And | CellKind::Or | CellKind::Nand | CellKind::Nor
        )
    }

    /// Bit-parallel evaluation: every bit lane of the inputs is an independent
    /// vector.
    #[inline]
    pub fn eval_words(self, inputs: &[u64]) -> u64 {
        match self {
            CellKind::Inv => !inputs[0],
            CellKind::Buf => inputs[0],
            CellKind::And => inputs.iter().fold(!0, |acc, w| acc & w),
            CellKind::Or => inputs.iter().fold(0, |acc, w| acc | w),
            CellKind::Nand => !inputs.iter().fold(!0, |acc, w| acc & w),
            CellKind::Nor => !inputs.iter().fold(0, |acc, w| acc | w),
            CellKind::Xor => inputs[0] ^ inputs[1],
            CellKind::Xnor => !(inputs[0] ^ inputs[1]),
            CellKind::Ao21 => (inputs[0] & inputs[1]) | inputs[2],
        }
    }

    pub fn eval(self, inputs: &[bool]) -> bool {
        let words: Vec<u64> = inputs.iter().map(|&b| if b { 1 } else { 0 }).collect();
        self.eval_words(&words) & 1 == 1
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CellKind {
    type Err = LibraryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CellKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| LibraryError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub kind: CellKind,
    pub fanin: usize,
    pub delay: f64,
    pub area: f64,
    pub switch_energy: f64,
    pub leakage: f64,
}

impl Cell {
    /// Library-style cell name: `AND3`, `XOR2`, `INV`, `AO21`.
    pub fn name(&self) -> String {
        match self.kind {
            CellKind::Inv | CellKind::Buf | CellKind::Ao21 => self.kind.as_str().to_string(),
            _ => format!("{}{}", self.kind, self.fanin),
        }
    }

    fn check(&self, max_fanin: Option<usize>) -> Result<(), LibraryError> {
        let (lo, hi) = self.kind.fanin_range(usize::MAX);
        let hi = match max_fanin {
            Some(max) if self.kind.is_variadic() => max,
            _ => hi,
        };
        if self.fanin < lo || self.fanin > hi {
            return Err(LibraryError::Invalid(format!(
                "{} with fanin {} is outside the legal range {}..={}",
                self.kind, self.fanin, lo, hi
            )));
        }
        if self.delay <= 0.0 || !self.delay.is_finite() {
            return Err(LibraryError::Invalid(format!(
                "{}: delay must be positive",
                self.name()
            )));
        }
        for (label, v) in [
            ("area", self.area),
            ("switch_energy", self.switch_energy),
            ("leakage", self.leakage),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(LibraryError::Invalid(format!(
                    "{}: {label} must be non-negative",
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LibraryMode {
    Constrained,
    Ideal,
}

impl fmt::Display for LibraryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LibraryMode::Constrained => "constrained",
            LibraryMode::Ideal => "ideal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub time: String,
    pub area: String,
    pub energy: String,
    pub power: String,
}

impl Units {
    fn derived_power(time: &str, energy: &str) -> String {
        match (energy, time) {
            ("fJ", "ns") | ("pJ", "us") => "uW".to_string(),
            ("pJ", "ns") => "mW".to_string(),
            _ => format!("{energy}/{time}"),
        }
    }
}

impl Default for Units {
    fn default() -> Self {
        Units {
            time: "ns".into(),
            area: "um2".into(),
            energy: "fJ".into(),
            power: "uW".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown cell kind `{0}`")]
    UnknownKind(String),
    #[error("invalid library: {0}")]
    Invalid(String),
    #[error("library is missing mandatory cell {0}")]
    MissingMandatory(String),
    #[error("duplicate definition of cell {0}")]
    Duplicate(String),
    #[error("cell {kind}{fanin} is not available in library `{library}` ({mode} mode, max fan-in {max_fanin})")]
    NotFound {
        library: String,
        kind: CellKind,
        fanin: usize,
        mode: LibraryMode,
        max_fanin: usize,
    },
    #[error("cannot read library file: {0}")]
    Io(#[from] std::io::Error),
}

/// Cells every generator depends on.
pub const MANDATORY: [(CellKind, usize); 5] = [
    (CellKind::Xor, 2),
    (CellKind::And, 2),
    (CellKind::Or, 2),
    (CellKind::Ao21, 3),
    (CellKind::Inv, 1),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CellLibrary {
    name: String,
    max_fanin: usize,
    mode: LibraryMode,
    units: Units,
    cells: BTreeMap<(CellKind, usize), Cell>,
}

impl CellLibrary {
    /// Builds and validates a library from an explicit cell list.
    pub fn new(
        name: impl Into<String>,
        max_fanin: usize,
        mode: LibraryMode,
        units: Units,
        cells: impl IntoIterator<Item = Cell>,
    ) -> Result<Self, LibraryError> {
        let mut map = BTreeMap::new();
        for cell in cells {
            if map.insert((cell.kind, cell.fanin), cell).is_some() {
                return Err(LibraryError::Duplicate(cell.name()));
            }
        }
        let lib = CellLibrary {
            name: name.into(),
            max_fanin,
            mode,
            units,
            cells: map,
        };
        lib.validate()?;
        Ok(lib)
    }

    /// The default constrained library: unit delay, area and switching energy
    /// for every cell, zero leakage.
    pub fn builtin_unit() -> Self {
        let mut cells = Vec::new();
        let unit = |kind, fanin| Cell {
            kind,
            fanin,
            delay: 1.0,
            area: 1.0,
            switch_energy: 1.0,
            leakage: 0.0,
        };
        cells.push(unit(CellKind::Inv, 1));
        cells.push(unit(CellKind::Xor, 2));
        cells.push(unit(CellKind::Xnor, 2));
        cells.push(unit(CellKind::Ao21, 3));
        for kind in [CellKind::And, CellKind::Or, CellKind::Nand, CellKind::Nor] {
            for fanin in 2..=DEFAULT_MAX_FANIN {
                cells.push(unit(kind, fanin));
            }
        }
        CellLibrary::new(
            "unit",
            DEFAULT_MAX_FANIN,
            LibraryMode::Constrained,
            Units::default(),
            cells,
        )
        .expect("builtin library is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LibraryError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, LibraryError> {
        let mut name = String::from("library");
        let mut max_fanin = DEFAULT_MAX_FANIN;
        let mut mode = LibraryMode::Constrained;
        let mut time = None;
        let mut area = None;
        let mut energy = None;
        let mut power = None;
        let mut cells: Vec<Cell> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| LibraryError::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("[cell]") {
                let cell = parse_cell_fields(rest).map_err(err)?;
                if cells
                    .iter()
                    .any(|c| c.kind == cell.kind && c.fanin == cell.fanin)
                {
                    return Err(LibraryError::Duplicate(cell.name()));
                }
                cells.push(cell);
                continue;
            }
            let (key, value) = split_kv(line).map_err(err)?;
            match key {
                "name" => name = value.to_string(),
                "max_fanin" => {
                    max_fanin = value
                        .parse()
                        .map_err(|_| err(format!("bad max_fanin `{value}`")))?
                }
                "mode" => {
                    mode = match value {
                        "constrained" => LibraryMode::Constrained,
                        "ideal" => LibraryMode::Ideal,
                        other => return Err(err(format!("unknown mode `{other}`"))),
                    }
                }
                "units_time" => time = Some(value.to_string()),
                "units_area" => area = Some(value.to_string()),
                "units_energy" => energy = Some(value.to_string()),
                "units_power" => power = Some(value.to_string()),
                other => return Err(err(format!("unknown header key `{other}`"))),
            }
        }

        let defaults = Units::default();
        let time = time.unwrap_or(defaults.time);
        let energy = energy.unwrap_or(defaults.energy);
        let units = Units {
            power: power.unwrap_or_else(|| Units::derived_power(&time, &energy)),
            area: area.unwrap_or(defaults.area),
            time,
            energy,
        };
        CellLibrary::new(name, max_fanin, mode, units, cells)
    }

    /// Serializes to the text format accepted by [`CellLibrary::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("name={}\n", self.name));
        out.push_str(&format!("max_fanin={}\n", self.max_fanin));
        out.push_str(&format!("mode={}\n", self.mode));
        out.push_str(&format!("units_time={}\n", self.units.time));
        out.push_str(&format!("units_area={}\n", self.units.area));
        out.push_str(&format!("units_energy={}\n", self.units.energy));
        out.push_str(&format!("units_power={}\n", self.units.power));
        for cell in self.cells.values() {
            out.push_str(&format!(
                "[cell] kind={} fanin={} delay={:?} area={:?} switch_energy={:?} leakage={:?}\n",
                cell.kind, cell.fanin, cell.delay, cell.area, cell.switch_energy, cell.leakage
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<(), LibraryError> {
        if self.max_fanin < 2 {
            return Err(LibraryError::Invalid(format!(
                "max_fanin must be at least 2, got {}",
                self.max_fanin
            )));
        }
        let bound = match self.mode {
            LibraryMode::Constrained => Some(self.max_fanin),
            LibraryMode::Ideal => None,
        };
        for cell in self.cells.values() {
            cell.check(bound)?;
        }
        for (kind, fanin) in MANDATORY {
            if !self.cells.contains_key(&(kind, fanin)) {
                let probe = Cell {
                    kind,
                    fanin,
                    delay: 1.0,
                    area: 0.0,
                    switch_energy: 0.0,
                    leakage: 0.0,
                };
                return Err(LibraryError::MissingMandatory(probe.name()));
            }
        }
        Ok(())
    }

    pub fn lookup(&self, kind: CellKind, fanin: usize) -> Result<Cell, LibraryError> {
        if let Some(cell) = self.cells.get(&(kind, fanin)) {
            let within = self.mode == LibraryMode::Ideal || fanin <= self.max_fanin;
            if within {
                return Ok(*cell);
            }
        }
        if self.mode == LibraryMode::Ideal
            && matches!(kind, CellKind::And | CellKind::Or)
            && fanin > 2
        {
            let base = self.cells[&(kind, 2)];
            let extra = (fanin - 2) as f64;
            let scale = (fanin - 1) as f64;
            return Ok(Cell {
                kind,
                fanin,
                delay: base.delay + IDEAL_DELAY_SLOPE * base.delay * extra,
                area: base.area * scale,
                switch_energy: base.switch_energy * scale,
                leakage: base.leakage * scale,
            });
        }
        Err(LibraryError::NotFound {
            library: self.name.clone(),
            kind,
            fanin,
            mode: self.mode,
            max_fanin: self.max_fanin,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn max_fanin(&self) -> usize {
        self.max_fanin
    }

    pub fn mode(&self) -> LibraryMode {
        self.mode
    }

    pub fn units(&self) -> &Units {
        &self.units
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }

    /// Same cells, different mode. Switching to constrained re-validates.
    pub fn with_mode(&self, mode: LibraryMode) -> Result<Self, LibraryError> {
        let lib = CellLibrary {
            mode,
            ..self.clone()
        };
        lib.validate()?;
        Ok(lib)
    }

    /// Applies `f` to every cell and re-validates. Used for uniform scaling
    /// experiments.
    pub fn map_cells(&self, mut f: impl FnMut(&mut Cell)) -> Result<Self, LibraryError> {
        let mut lib = self.clone();
        for cell in lib.cells.values_mut() {
            f(cell);
        }
        lib.validate()?;
        Ok(lib)
    }
}

fn split_kv(token: &str) -> Result<(&str, &str), String> {
    let (k, v) = token
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, found `{token}`"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(format!("expected key=value, found `{token}`"));
    }
    Ok((k, v))
}

fn set_once<T>(slot: &mut Option<T>, value: T, key: &str) -> Result<(), String> {
    if slot.replace(value).is_some() {
        return Err(format!("cell field `{key}` given twice"));
    }
    Ok(())
}

fn parse_cell_fields(rest: &str) -> Result<Cell, String> {
    let mut kind = None;
    let mut fanin = None;
    let mut delay = None;
    let mut area = None;
    let mut energy = None;
    let mut leakage = None;
    for token in rest.split_whitespace() {
        let (k, v) = split_kv(token)?;
        let num = || -> Result<f64, String> {
            v.parse::<f64>()
                .map_err(|_| format!("`{k}` expects a number, found `{v}`"))
        };
        match k {
            "kind" => set_once(
                &mut kind,
                v.parse::<CellKind>().map_err(|e| e.to_string())?,
                k,
            )?,
            "fanin" => set_once(
                &mut fanin,
                v.parse::<usize>().map_err(|_| format!("bad fanin `{v}`"))?,
                k,
            )?,
            "delay" => set_once(&mut delay, num()?, k)?,
            "area" => set_once(&mut area, num()?, k)?,
            "switch_energy" => set_once(&mut energy, num()?, k)?,
            "leakage" => set_once(&mut leakage, num()?, k)?,
            other => return Err(format!("unknown cell field `{other}`")),
        }
    }
    let missing = |field: &str| format!("cell is missing `{field}`");
    Ok(Cell {
        kind: kind.ok_or_else(|| missing("kind"))?,
        fanin: fanin.ok_or_else(|| missing("fanin"))?,
        delay: delay.ok_or_else(|| missing("delay"))?,
        area: area.ok_or_else(|| missing("area"))?,
        switch_energy: energy.ok_or_else(|| missing("switch_energy"))?,
        leakage: leakage.ok_or_else(|| missing("leakage"))?,
    })
}
