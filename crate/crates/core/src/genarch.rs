// SPDX-License-Identifier: Apache-2.0

//! Adder architecture generators.
//!
//! Every block is assembled from three parts: propagate/generate logic
//! (`P_i = A_i ^ B_i`, `G_i = A_i & B_i`), a carry lookahead generator, and
//! sum logic. Two generator styles are provided:
//!
//! * **basic**: each lookahead carry is the flat AND-OR realization of its
//!   unwound equation `C_{i+1} = G_i + P_i G_{i-1} + ... + P_i..P_0 C_0`.
//!   Carry `C_K` needs a `(K+1)`-input OR, so a 4-bit generator does not fit
//!   a fan-in-4 library.
//! * **decomposed**: the carry-in independent part is factored out,
//!   `C_{i+1} = N + M C_0` with `N = G_i + K + L + ...` and
//!   `M = P_i..P_0`, and the last stage is a single AO21 `(M, C_0, N)`.
//!   `N` and `M` are fan-in bounded AND/OR trees.
//!
//! A conventional block (CCLA) takes every sum from its lookahead carries.
//! A section-carry block (SCBCLA) only produces the block carry-out through
//! lookahead; its sums come from a ripple chain sharing the same P/G layer.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::celllib::{CellKind, CellLibrary, LibraryError};
use crate::netlist::{NetId, Netlist, NetlistBuilder, NetlistError};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid adder spec: {0}")]
    InvalidSpec(String),
    #[error("{context}: {source}")]
    CellUnavailable {
        context: String,
        #[source]
        source: LibraryError,
    },
    #[error(transparent)]
    Netlist(NetlistError),
}

impl From<NetlistError> for GenError {
    fn from(e: NetlistError) -> Self {
        match e {
            NetlistError::Library(source) => GenError::CellUnavailable {
                context: "cell lookup".into(),
                source,
            },
            other => GenError::Netlist(other),
        }
    }
}

impl GenError {
    /// `(kind, fanin)` of the cell the library could not supply, if that is
    /// what failed.
    pub fn missing_cell(&self) -> Option<(CellKind, usize)> {
        match self {
            GenError::CellUnavailable {
                source: LibraryError::NotFound { kind, fanin, .. },
                ..
            } => Some((*kind, *fanin)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Rca,
    Ccla,
    Scbcla,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Rca => "rca",
            SegmentKind::Ccla => "ccla",
            SegmentKind::Scbcla => "scbcla",
        }
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorStyle {
    Basic,
    #[default]
    Decomposed,
}

impl FromStr for GeneratorStyle {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic" => Ok(GeneratorStyle::Basic),
            "decomposed" => Ok(GeneratorStyle::Decomposed),
            other => Err(GenError::InvalidSpec(format!(
                "unknown generator style `{other}` (expected basic or decomposed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub width: usize,
    /// Ignored for RCA segments.
    pub style: GeneratorStyle,
}

impl SegmentSpec {
    pub fn new(kind: SegmentKind, width: usize) -> Self {
        SegmentSpec {
            kind,
            width,
            style: GeneratorStyle::Decomposed,
        }
    }

    pub fn styled(mut self, style: GeneratorStyle) -> Self {
        self.style = style;
        self
    }
}

/// An adder as LSB-first segments; the carry-out of each segment feeds the
/// carry-in of the next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdderSpec {
    pub name: String,
    pub segments: Vec<SegmentSpec>,
}

impl AdderSpec {
    pub fn new(name: impl Into<String>, segments: Vec<SegmentSpec>) -> Self {
        AdderSpec {
            name: name.into(),
            segments,
        }
    }

    pub fn total_width(&self) -> usize {
        self.segments.iter().map(|s| s.width).sum()
    }

    pub fn with_style(mut self, style: GeneratorStyle) -> Self {
        for seg in &mut self.segments {
            seg.style = style;
        }
        self
    }

    /// Parses `rca:2,scbcla:2,scbcla:4*6,scbcla:3,rca:1` (LSB first) or one
    /// of the named aliases from [`named_specs`].
    pub fn parse(text: &str, style: GeneratorStyle) -> Result<Self, GenError> {
        let text = text.trim();
        if let Some(spec) = named_spec(text) {
            return Ok(spec.with_style(style));
        }
        let mut segments = Vec::new();
        for item in text.split(',') {
            let item = item.trim();
            let bad = |why: &str| GenError::InvalidSpec(format!("`{item}`: {why}"));
            let (kind, rest) = item
                .split_once(':')
                .ok_or_else(|| bad("expected <kind>:<width>[*<count>]"))?;
            let kind = match kind.trim().to_ascii_lowercase().as_str() {
                "rca" => SegmentKind::Rca,
                "ccla" => SegmentKind::Ccla,
                "scbcla" => SegmentKind::Scbcla,
                _ => return Err(bad("kind must be rca, ccla or scbcla")),
            };
            let (width, count) = match rest.split_once('*') {
                Some((w, c)) => (w, c),
                None => (rest, "1"),
            };
            let width: usize = width.trim().parse().map_err(|_| bad("bad width"))?;
            let count: usize = count.trim().parse().map_err(|_| bad("bad repeat count"))?;
            if width == 0 {
                return Err(bad("width must be at least 1"));
            }
            if count == 0 {
                return Err(bad("repeat count must be at least 1"));
            }
            for _ in 0..count {
                segments.push(SegmentSpec::new(kind, width).styled(style));
            }
        }
        Ok(AdderSpec::new(text, segments))
    }

    /// Canonical text form, run-length encoded.
    pub fn to_text(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < self.segments.len() {
            let seg = self.segments[i];
            let mut run = 1;
            while i + run < self.segments.len()
                && self.segments[i + run].kind == seg.kind
                && self.segments[i + run].width == seg.width
            {
                run += 1;
            }
            if run == 1 {
                parts.push(format!("{}:{}", seg.kind, seg.width));
            } else {
                parts.push(format!("{}:{}*{}", seg.kind, seg.width, run));
            }
            i += run;
        }
        parts.join(",")
    }
}

fn homogeneous(block: SegmentKind) -> Vec<SegmentSpec> {
    vec![SegmentSpec::new(block, 4); 8]
}

fn hybrid(block: SegmentKind, variant: u8) -> Vec<SegmentSpec> {
    let rca = |w| SegmentSpec::new(SegmentKind::Rca, w);
    let blk = |w| SegmentSpec::new(block, w);
    let mut segs = Vec::new();
    match variant {
        1 => {
            segs.push(rca(4));
            segs.extend(std::iter::repeat_n(blk(4), 7));
        }
        2 => {
            segs.extend([rca(2), blk(2)]);
            segs.extend(std::iter::repeat_n(blk(4), 7));
        }
        3 => {
            segs.extend([rca(2), blk(2)]);
            segs.extend(std::iter::repeat_n(blk(4), 6));
            segs.extend([blk(3), rca(1)]);
        }
        4 => {
            segs.extend([rca(2), blk(2)]);
            segs.extend(std::iter::repeat_n(blk(4), 6));
            segs.extend([blk(2), rca(2)]);
        }
        _ => unreachable!("hybrid variants are 1..=4"),
    }
    segs
}

/// The ten 32-bit compositions: homogeneous and hybrid 1..4, first with
/// conventional blocks, then with section-carry blocks. Decomposed style.
pub fn named_specs() -> Vec<AdderSpec> {
    let mut specs = Vec::with_capacity(10);
    for (block, label) in [(SegmentKind::Ccla, "ccla"), (SegmentKind::Scbcla, "scbcla")] {
        specs.push(AdderSpec::new(
            format!("homogeneous-{label}"),
            homogeneous(block),
        ));
        for v in 1..=4 {
            specs.push(AdderSpec::new(
                format!("hybrid-{label}-{v}"),
                hybrid(block, v),
            ));
        }
    }
    specs
}

pub fn named_spec(alias: &str) -> Option<AdderSpec> {
    named_specs().into_iter().find(|s| s.name == alias)
}

/// A literal of a carry equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Literal {
    P(usize),
    G(usize),
    CarryIn,
}

/// Conjunction of literals, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ProductTerm(pub Vec<Literal>);

impl ProductTerm {
    pub fn eval(&self, p: &[bool], g: &[bool], c0: bool) -> bool {
        self.0.iter().all(|lit| match *lit {
            Literal::P(i) => p[i],
            Literal::G(i) => g[i],
            Literal::CarryIn => c0,
        })
    }

    pub fn uses_carry_in(&self) -> bool {
        self.0.contains(&Literal::CarryIn)
    }
}

impl fmt::Display for ProductTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for lit in &self.0 {
            match lit {
                Literal::P(i) => write!(f, "P{i}")?,
                Literal::G(i) => write!(f, "G{i}")?,
                Literal::CarryIn => f.write_str("C0")?,
            }
        }
        Ok(())
    }
}

/// Product terms of `C_{stage+1}` with the recursion `C_{i+1} = G_i + P_i C_i`
/// fully unwound: `G_i, P_i G_{i-1}, ..., P_i..P_1 G_0, P_i..P_0 C_0`.
pub fn carry_terms(stage: usize) -> Vec<ProductTerm> {
    let mut terms = Vec::with_capacity(stage + 2);
    for j in (0..=stage).rev() {
        let mut lits: Vec<Literal> = ((j + 1)..=stage).rev().map(Literal::P).collect();
        lits.push(Literal::G(j));
        terms.push(ProductTerm(lits));
    }
    let mut lits: Vec<Literal> = (0..=stage).rev().map(Literal::P).collect();
    lits.push(Literal::CarryIn);
    terms.push(ProductTerm(lits));
    terms
}

/// Factoring of one lookahead carry `C_{stage+1} = N + M C_0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CarryPlan {
    pub stage: usize,
    /// `N`: the OR group `G_i, K, L, ...`.
    pub or_group: Vec<ProductTerm>,
    /// `M`: the full propagate product `P_i..P_0`.
    pub carry_product: ProductTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionPlan {
    pub width: usize,
    pub max_fanin: usize,
    pub carries: Vec<CarryPlan>,
}

impl DecompositionPlan {
    /// Plan for every lookahead carry `C_1..C_width`.
    pub fn conventional(width: usize, max_fanin: usize) -> Self {
        Self::for_stages(width, max_fanin, 0..width)
    }

    /// Plan for the single section carry `C_width`.
    pub fn section_carry(width: usize, max_fanin: usize) -> Self {
        Self::for_stages(width, max_fanin, width - 1..width)
    }

    fn for_stages(width: usize, max_fanin: usize, stages: std::ops::Range<usize>) -> Self {
        assert!(width >= 1, "generator width must be at least 1");
        assert!(max_fanin >= 2, "fan-in budget must be at least 2");
        let carries = stages
            .map(|stage| {
                let mut terms = carry_terms(stage);
                let mut carry_product = terms.pop().expect("carry-in term");
                carry_product.0.pop();
                CarryPlan {
                    stage,
                    or_group: terms,
                    carry_product,
                }
            })
            .collect();
        DecompositionPlan {
            width,
            max_fanin,
            carries,
        }
    }
}

/// Net handles of the P/G layer of one segment.
struct PgNets {
    p: Vec<NetId>,
    g: Vec<NetId>,
}

/// Naming context: `lo` is the global bit index of the segment's bit 0.
#[derive(Clone)]
struct Scope {
    lo: usize,
    net_prefix: String,
    tag_prefix: String,
}

impl Scope {
    fn standalone() -> Self {
        Scope {
            lo: 0,
            net_prefix: String::new(),
            tag_prefix: String::new(),
        }
    }

    fn segment(index: usize, lo: usize) -> Self {
        Scope {
            lo,
            net_prefix: format!("s{index}_"),
            tag_prefix: format!("s{index}."),
        }
    }

    fn net(&self, local: impl fmt::Display) -> String {
        format!("{}{}", self.net_prefix, local)
    }

    fn tag(&self, local: impl fmt::Display) -> String {
        format!("{}{}", self.tag_prefix, local)
    }
}

fn emit_pg(
    b: &mut NetlistBuilder,
    scope: &Scope,
    a: &[NetId],
    bb: &[NetId],
) -> Result<PgNets, GenError> {
    let mut pg = PgNets {
        p: Vec::with_capacity(a.len()),
        g: Vec::with_capacity(a.len()),
    };
    for (i, (&ai, &bi)) in a.iter().zip(bb).enumerate() {
        let bit = scope.lo + i;
        pg.p.push(b.gate(
            CellKind::Xor,
            &[ai, bi],
            &format!("P{bit}"),
            scope.tag(format_args!("pg.xor.p{bit}")),
        )?);
        pg.g.push(b.gate(
            CellKind::And,
            &[ai, bi],
            &format!("G{bit}"),
            scope.tag(format_args!("pg.and.g{bit}")),
        )?);
    }
    Ok(pg)
}

/// Which lookahead outputs a generator exposes.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Outputs {
    All,
    SectionOnly,
}

impl Outputs {
    fn stages(self, width: usize) -> std::ops::Range<usize> {
        match self {
            Outputs::All => 0..width,
            Outputs::SectionOnly => width - 1..width,
        }
    }

    fn role(self) -> &'static str {
        match self {
            Outputs::All => "clg",
            Outputs::SectionOnly => "sclg",
        }
    }
}

fn with_context<T>(
    r: Result<T, NetlistError>,
    context: impl FnOnce() -> String,
) -> Result<T, GenError> {
    r.map_err(|e| match e {
        NetlistError::Library(source) => GenError::CellUnavailable {
            context: context(),
            source,
        },
        other => GenError::Netlist(other),
    })
}

/// Flat two-level lookahead carries. Returns the carry nets in stage order.
fn emit_basic_generator(
    b: &mut NetlistBuilder,
    scope: &Scope,
    pg: &PgNets,
    c0: NetId,
    outputs: Outputs,
) -> Result<Vec<NetId>, GenError> {
    let width = pg.p.len();
    let role = outputs.role();
    let mut carries = Vec::new();
    for stage in outputs.stages(width) {
        let k = stage + 1;
        let bit = scope.lo + k;
        let context = || format!("basic generator carry C{k} ({})", scope.tag(role));
        let terms = carry_terms(stage);
        // the wide OR is the first thing a constrained library cannot offer
        with_context(
            b.library()
                .lookup(CellKind::Or, terms.len())
                .map_err(NetlistError::from),
            context,
        )?;
        let mut or_inputs = Vec::with_capacity(terms.len());
        for (t, term) in terms.iter().enumerate() {
            let nets: Vec<NetId> = term
                .0
                .iter()
                .map(|lit| match *lit {
                    Literal::P(i) => pg.p[i],
                    Literal::G(i) => pg.g[i],
                    Literal::CarryIn => c0,
                })
                .collect();
            if nets.len() == 1 {
                or_inputs.push(nets[0]);
                continue;
            }
            let net = with_context(
                b.gate(
                    CellKind::And,
                    &nets,
                    &scope.net(format_args!("T{k}_{t}")),
                    scope.tag(format_args!("{role}.basic.and.c{bit}.t{t}")),
                ),
                context,
            )?;
            or_inputs.push(net);
        }
        let carry = with_context(
            b.gate(
                CellKind::Or,
                &or_inputs,
                &format!("C{bit}"),
                scope.tag(format_args!("{role}.basic.or.c{bit}")),
            ),
            context,
        )?;
        carries.push(carry);
    }
    Ok(carries)
}

/// Realizes a [`DecompositionPlan`] with fan-in bounded trees.
///
/// Products wider than the budget keep their `budget - 1` most significant
/// literals in the top gate and recurse on the rest, so the lower part of a
/// product (`term(j, i')`, `M_{i'}`) is shared by every carry that needs it.
/// OR groups wider than the budget are reduced in rounds of the widest legal
/// OR.
struct Decomposer<'a> {
    b: &'a mut NetlistBuilder,
    scope: &'a Scope,
    pg: &'a PgNets,
    fanin: usize,
    role: &'static str,
    terms: HashMap<(usize, usize), NetId>,
    products: HashMap<usize, NetId>,
}

impl Decomposer<'_> {
    fn and(&mut self, inputs: &[NetId], name: String, tag: String) -> Result<NetId, GenError> {
        Ok(self.b.gate(CellKind::And, inputs, &name, tag)?)
    }

    /// `G_j P_{j+1} .. P_i`.
    fn term(&mut self, j: usize, i: usize) -> Result<NetId, GenError> {
        if j == i {
            return Ok(self.pg.g[j]);
        }
        if let Some(&net) = self.terms.get(&(j, i)) {
            return Ok(net);
        }
        let literals = i - j + 1;
        let mut inputs: Vec<NetId>;
        if literals <= self.fanin {
            inputs = ((j + 1)..=i).rev().map(|k| self.pg.p[k]).collect();
            inputs.push(self.pg.g[j]);
        } else {
            let split = i + 2 - self.fanin;
            inputs = (split..=i).rev().map(|k| self.pg.p[k]).collect();
            inputs.push(self.term(j, split - 1)?);
        }
        let net = self.and(
            &inputs,
            self.scope.net(format_args!("T{j}_{i}")),
            self.scope.tag(format_args!("{}.and.t{j}_{i}", self.role)),
        )?;
        self.terms.insert((j, i), net);
        Ok(net)
    }

    /// `P_i .. P_0`.
    fn product(&mut self, i: usize) -> Result<NetId, GenError> {
        if i == 0 {
            return Ok(self.pg.p[0]);
        }
        if let Some(&net) = self.products.get(&i) {
            return Ok(net);
        }
        let inputs: Vec<NetId> = if i < self.fanin {
            (0..=i).rev().map(|k| self.pg.p[k]).collect()
        } else {
            let split = i + 2 - self.fanin;
            let mut v: Vec<NetId> = (split..=i).rev().map(|k| self.pg.p[k]).collect();
            v.push(self.product(split - 1)?);
            v
        };
        let net = self.and(
            &inputs,
            self.scope.net(format_args!("M{i}")),
            self.scope.tag(format_args!("{}.and.m{i}", self.role)),
        )?;
        self.products.insert(i, net);
        Ok(net)
    }

    /// `G_i + P_i G_{i-1} + ... + P_i..P_1 G_0`.
    fn or_group(&mut self, i: usize) -> Result<NetId, GenError> {
        let mut level = Vec::with_capacity(i + 1);
        for j in (0..=i).rev() {
            level.push(self.term(j, i)?);
        }
        let mut round = 0;
        while level.len() > self.fanin {
            let mut next = Vec::with_capacity(level.len().div_ceil(self.fanin));
            for (c, chunk) in level.chunks(self.fanin).enumerate() {
                if chunk.len() == 1 {
                    next.push(chunk[0]);
                    continue;
                }
                next.push(
                    self.b.gate(
                        CellKind::Or,
                        chunk,
                        &self.scope.net(format_args!("N{i}_{round}_{c}")),
                        self.scope
                            .tag(format_args!("{}.or.n{i}.r{round}", self.role)),
                    )?,
                );
            }
            level = next;
            round += 1;
        }
        if level.len() == 1 {
            return Ok(level[0]);
        }
        Ok(self.b.gate(
            CellKind::Or,
            &level,
            &self.scope.net(format_args!("N{i}")),
            self.scope.tag(format_args!("{}.or.n{i}", self.role)),
        )?)
    }
}

fn emit_decomposed_generator(
    b: &mut NetlistBuilder,
    scope: &Scope,
    pg: &PgNets,
    c0: NetId,
    outputs: Outputs,
) -> Result<Vec<NetId>, GenError> {
    let width = pg.p.len();
    let fanin = b.library().max_fanin();
    let plan = match outputs {
        Outputs::All => DecompositionPlan::conventional(width, fanin),
        Outputs::SectionOnly => DecompositionPlan::section_carry(width, fanin),
    };
    let role = outputs.role();
    let mut dec = Decomposer {
        b,
        scope,
        pg,
        fanin,
        role,
        terms: HashMap::new(),
        products: HashMap::new(),
    };
    let mut carries = Vec::with_capacity(plan.carries.len());
    for carry in &plan.carries {
        let i = carry.stage;
        let n = dec.or_group(i)?;
        let m = dec.product(i)?;
        let bit = scope.lo + i + 1;
        let net = dec.b.gate(
            CellKind::Ao21,
            &[m, c0, n],
            &format!("C{bit}"),
            scope.tag(format_args!("{role}.ao21.c{bit}")),
        )?;
        carries.push(net);
    }
    Ok(carries)
}

fn emit_generator(
    b: &mut NetlistBuilder,
    scope: &Scope,
    pg: &PgNets,
    c0: NetId,
    outputs: Outputs,
    style: GeneratorStyle,
) -> Result<Vec<NetId>, GenError> {
    match style {
        GeneratorStyle::Basic => emit_basic_generator(b, scope, pg, c0, outputs),
        GeneratorStyle::Decomposed => emit_decomposed_generator(b, scope, pg, c0, outputs),
    }
}

/// Emits one segment; returns `(sums, carry_out)`.
fn emit_segment(
    b: &mut NetlistBuilder,
    scope: &Scope,
    seg: SegmentSpec,
    a: &[NetId],
    bb: &[NetId],
    cin: NetId,
) -> Result<(Vec<NetId>, NetId), GenError> {
    let pg = emit_pg(b, scope, a, bb)?;
    let m = seg.width;
    let mut sums = Vec::with_capacity(m);
    let sum = |b: &mut NetlistBuilder, i: usize, p: NetId, c: NetId| {
        let bit = scope.lo + i;
        b.gate(
            CellKind::Xor,
            &[p, c],
            &format!("Sum{bit}"),
            scope.tag(format_args!("sum.xor{bit}")),
        )
    };
    match seg.kind {
        SegmentKind::Rca => {
            let mut carry = cin;
            for i in 0..m {
                sums.push(sum(b, i, pg.p[i], carry)?);
                let bit = scope.lo + i + 1;
                carry = b.gate(
                    CellKind::Ao21,
                    &[pg.p[i], carry, pg.g[i]],
                    &format!("C{bit}"),
                    scope.tag(format_args!("rca.ao21.c{bit}")),
                )?;
            }
            Ok((sums, carry))
        }
        SegmentKind::Ccla => {
            let carries = emit_generator(b, scope, &pg, cin, Outputs::All, seg.style)?;
            for i in 0..m {
                let c = if i == 0 { cin } else { carries[i - 1] };
                sums.push(sum(b, i, pg.p[i], c)?);
            }
            Ok((sums, carries[m - 1]))
        }
        SegmentKind::Scbcla => {
            let carries = emit_generator(b, scope, &pg, cin, Outputs::SectionOnly, seg.style)?;
            let mut ripple = cin;
            for i in 0..m {
                sums.push(sum(b, i, pg.p[i], ripple)?);
                if i + 1 < m {
                    let bit = scope.lo + i + 1;
                    ripple = b.gate(
                        CellKind::Ao21,
                        &[pg.p[i], ripple, pg.g[i]],
                        &format!("R{bit}"),
                        scope.tag(format_args!("ripple.ao21.r{bit}")),
                    )?;
                }
            }
            Ok((sums, carries[0]))
        }
    }
}

/// Builds a full adder netlist: PIs `A0..A{n-1}, B0..B{n-1}, Cin`, POs
/// `Sum0..Sum{n-1}, Cout`.
pub fn build_adder(spec: &AdderSpec, library: &Arc<CellLibrary>) -> Result<Netlist, GenError> {
    if spec.segments.is_empty() {
        return Err(GenError::InvalidSpec("adder has no segments".into()));
    }
    if let Some(seg) = spec.segments.iter().find(|s| s.width == 0) {
        return Err(GenError::InvalidSpec(format!(
            "{} segment of width 0",
            seg.kind
        )));
    }
    let n = spec.total_width();
    let mut b = NetlistBuilder::new(spec.name.clone(), library.clone());
    let a: Vec<NetId> = (0..n)
        .map(|i| b.input(&format!("A{i}")))
        .collect::<Result<_, _>>()?;
    let bb: Vec<NetId> = (0..n)
        .map(|i| b.input(&format!("B{i}")))
        .collect::<Result<_, _>>()?;
    let mut carry = b.input("Cin")?;
    let mut sums = Vec::with_capacity(n);
    let mut lo = 0;
    for (k, seg) in spec.segments.iter().enumerate() {
        let scope = Scope::segment(k, lo);
        let hi = lo + seg.width;
        let (s, c) = emit_segment(&mut b, &scope, *seg, &a[lo..hi], &bb[lo..hi], carry)?;
        sums.extend(s);
        carry = c;
        lo = hi;
    }
    b.rename(carry, "Cout")?;
    for s in sums {
        b.output(s);
    }
    b.output(carry);
    Ok(b.finish()?)
}

/// Propagate/generate layer alone: PIs `A*, B*`, POs `P*, G*`.
pub fn build_pg(width: usize, library: &Arc<CellLibrary>) -> Result<Netlist, GenError> {
    check_width(width)?;
    let mut b = NetlistBuilder::new(format!("pg{width}"), library.clone());
    let (a, bb) = adder_operand_inputs(&mut b, width)?;
    let pg = emit_pg(&mut b, &Scope::standalone(), &a, &bb)?;
    for &p in &pg.p {
        b.output(p);
    }
    for &g in &pg.g {
        b.output(g);
    }
    Ok(b.finish()?)
}

fn check_width(width: usize) -> Result<(), GenError> {
    if width == 0 {
        return Err(GenError::InvalidSpec("width must be at least 1".into()));
    }
    Ok(())
}

fn adder_operand_inputs(
    b: &mut NetlistBuilder,
    width: usize,
) -> Result<(Vec<NetId>, Vec<NetId>), GenError> {
    let a = (0..width)
        .map(|i| b.input(&format!("A{i}")))
        .collect::<Result<_, _>>()?;
    let bb = (0..width)
        .map(|i| b.input(&format!("B{i}")))
        .collect::<Result<_, _>>()?;
    Ok((a, bb))
}

fn generator_netlist(
    width: usize,
    library: &Arc<CellLibrary>,
    style: GeneratorStyle,
    outputs: Outputs,
) -> Result<Netlist, GenError> {
    check_width(width)?;
    let name = format!(
        "{}_{}{width}",
        match style {
            GeneratorStyle::Basic => "basic",
            GeneratorStyle::Decomposed => "decomposed",
        },
        outputs.role()
    );
    let mut b = NetlistBuilder::new(name, library.clone());
    let p = (0..width)
        .map(|i| b.input(&format!("P{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let g = (0..width)
        .map(|i| b.input(&format!("G{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let c0 = b.input("C0")?;
    let pg = PgNets { p, g };
    let carries = emit_generator(&mut b, &Scope::standalone(), &pg, c0, outputs, style)?;
    for c in carries {
        b.output(c);
    }
    Ok(b.finish()?)
}

/// Flat conventional generator: PIs `P*, G*, C0`, POs `C1..C{width}`.
pub fn build_basic_clg(width: usize, library: &Arc<CellLibrary>) -> Result<Netlist, GenError> {
    generator_netlist(width, library, GeneratorStyle::Basic, Outputs::All)
}

/// Factored conventional generator, same ports as [`build_basic_clg`].
pub fn build_decomposed_clg(width: usize, library: &Arc<CellLibrary>) -> Result<Netlist, GenError> {
    generator_netlist(width, library, GeneratorStyle::Decomposed, Outputs::All)
}

/// Flat section-carry generator: PIs `P*, G*, C0`, PO `C{width}`.
pub fn build_basic_sclg(width: usize, library: &Arc<CellLibrary>) -> Result<Netlist, GenError> {
    generator_netlist(width, library, GeneratorStyle::Basic, Outputs::SectionOnly)
}

pub fn build_decomposed_sclg(
    width: usize,
    library: &Arc<CellLibrary>,
) -> Result<Netlist, GenError> {
    generator_netlist(
        width,
        library,
        GeneratorStyle::Decomposed,
        Outputs::SectionOnly,
    )
}

pub fn build_rca(width: usize, library: &Arc<CellLibrary>) -> Result<Netlist, GenError> {
    check_width(width)?;
    let spec = AdderSpec::new(
        format!("rca{width}"),
        vec![SegmentSpec::new(SegmentKind::Rca, width)],
    );
    build_adder(&spec, library)
}

pub fn build_ccla_block(
    width: usize,
    style: GeneratorStyle,
    library: &Arc<CellLibrary>,
) -> Result<Netlist, GenError> {
    check_width(width)?;
    let spec = AdderSpec::new(
        format!("ccla{width}"),
        vec![SegmentSpec::new(SegmentKind::Ccla, width).styled(style)],
    );
    build_adder(&spec, library)
}

pub fn build_scbcla_block(
    width: usize,
    style: GeneratorStyle,
    library: &Arc<CellLibrary>,
) -> Result<Netlist, GenError> {
    check_width(width)?;
    let spec = AdderSpec::new(
        format!("scbcla{width}"),
        vec![SegmentSpec::new(SegmentKind::Scbcla, width).styled(style)],
    );
    build_adder(&spec, library)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::celllib::LibraryMode;
    use crate::netlist::Driver;

    fn unit() -> Arc<CellLibrary> {
        Arc::new(CellLibrary::builtin_unit())
    }

    fn ideal() -> Arc<CellLibrary> {
        Arc::new(
            CellLibrary::builtin_unit()
                .with_mode(LibraryMode::Ideal)
                .unwrap(),
        )
    }

    #[test]
    fn named_specs_are_32_bits() {
        let specs = named_specs();
        assert_eq!(specs.len(), 10);
        for s in &specs {
            assert_eq!(s.total_width(), 32, "{}", s.name);
        }
    }

    #[test]
    fn hybrid_layouts_match_figure_descriptions() {
        let h1 = named_spec("hybrid-ccla-1").unwrap();
        assert_eq!(h1.to_text(), "rca:4,ccla:4*7");
        let h2 = named_spec("hybrid-ccla-2").unwrap();
        assert_eq!(h2.to_text(), "rca:2,ccla:2,ccla:4*7");
        let h3 = named_spec("hybrid-scbcla-3").unwrap();
        assert_eq!(h3.to_text(), "rca:2,scbcla:2,scbcla:4*6,scbcla:3,rca:1");
        let h4 = named_spec("hybrid-ccla-4").unwrap();
        assert_eq!(h4.to_text(), "rca:2,ccla:2,ccla:4*6,ccla:2,rca:2");
        assert_eq!(
            named_spec("homogeneous-ccla").unwrap().to_text(),
            "ccla:4*8"
        );
    }

    #[test]
    fn spec_text_parsing() {
        let s = AdderSpec::parse(
            "rca:2,scbcla:2,scbcla:4*6,scbcla:3,rca:1",
            GeneratorStyle::Decomposed,
        )
        .unwrap();
        assert_eq!(s.segments, named_spec("hybrid-scbcla-3").unwrap().segments);
        let basic = AdderSpec::parse("ccla:4*8", GeneratorStyle::Basic).unwrap();
        assert!(basic
            .segments
            .iter()
            .all(|s| s.style == GeneratorStyle::Basic));
        let alias = AdderSpec::parse("hybrid-ccla-2", GeneratorStyle::Decomposed).unwrap();
        assert_eq!(alias.name, "hybrid-ccla-2");
        for bad in ["", "cla:4", "rca:0", "rca:2*0", "rca", "rca:x"] {
            assert!(
                matches!(
                    AdderSpec::parse(bad, GeneratorStyle::Decomposed),
                    Err(GenError::InvalidSpec(_))
                ),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn carry_terms_of_c2() {
        let text: Vec<String> = carry_terms(1).iter().map(|t| t.to_string()).collect();
        assert_eq!(text, ["G1", "P1G0", "P1P0C0"]);
    }

    #[test]
    fn plan_separates_carry_in() {
        for width in 1..=8 {
            let plan = DecompositionPlan::conventional(width, 4);
            assert_eq!(plan.carries.len(), width);
            for c in &plan.carries {
                assert!(c.or_group.iter().all(|t| !t.uses_carry_in()));
                assert!(!c.carry_product.uses_carry_in());
                assert_eq!(c.carry_product.0.len(), c.stage + 1);
                assert_eq!(c.or_group.len(), c.stage + 1);
            }
            let sc = DecompositionPlan::section_carry(width, 4);
            assert_eq!(sc.carries, vec![plan.carries[width - 1].clone()]);
        }
    }

    #[test]
    fn one_bit_decomposed_generator_is_one_ao21() {
        let nl = build_decomposed_clg(1, &unit()).unwrap();
        assert_eq!(nl.gates().len(), 1);
        let g = &nl.gates()[0];
        assert_eq!(g.cell.kind, CellKind::Ao21);
        let names: Vec<&str> = g.inputs.iter().map(|&n| nl.net_name(n)).collect();
        assert_eq!(names, ["P0", "C0", "G0"]);
        assert_eq!(nl.net_name(g.output), "C1");
    }

    #[test]
    fn four_bit_decomposed_generator_shape() {
        let nl = build_decomposed_clg(4, &unit()).unwrap();
        let stats = nl.stats();
        assert_eq!(stats.by_kind[&CellKind::Ao21], 4);
        assert!(nl.audit_fanin(4).is_empty());
        // C4 = AO21(AND4(P3..P0), C0, OR4(G3, P3G2, P3P2G1, P3P2P1G0))
        let c4 = nl.net_by_name("C4").unwrap();
        let drivers = nl.drivers();
        let Some(Driver::Gate(g)) = drivers[c4.index()] else {
            panic!("C4 undriven")
        };
        let ao = &nl.gates()[g];
        let leg = |i: usize| {
            let Some(Driver::Gate(d)) = drivers[ao.inputs[i].index()] else {
                panic!()
            };
            nl.gates()[d].cell.name()
        };
        assert_eq!(leg(0), "AND4");
        assert_eq!(nl.net_name(ao.inputs[1]), "C0");
        assert_eq!(leg(2), "OR4");
    }

    #[test]
    fn basic_generator_needs_wide_or_under_constrained_library() {
        let err = build_basic_clg(4, &unit()).unwrap_err();
        assert_eq!(err.missing_cell(), Some((CellKind::Or, 5)));
        assert!(err.to_string().contains("OR5"), "{err}");
        let err = build_basic_sclg(4, &unit()).unwrap_err();
        assert_eq!(err.missing_cell(), Some((CellKind::Or, 5)));
        // three bits still fit a fan-in-4 library
        assert!(build_basic_clg(3, &unit()).is_ok());
    }

    #[test]
    fn basic_generator_wide_gates_under_ideal_library() {
        let nl = build_basic_clg(4, &ideal()).unwrap();
        let audit = nl.audit_fanin(4);
        assert!(
            audit.iter().any(|v| v.cell == "OR5" && v.output == "C4"),
            "{audit:?}"
        );
        let nl = build_basic_sclg(4, &ideal()).unwrap();
        let cells: Vec<String> = nl.audit_fanin(4).into_iter().map(|v| v.cell).collect();
        assert!(cells.contains(&"AND5".to_string()), "{cells:?}");
        assert!(cells.contains(&"OR5".to_string()), "{cells:?}");
    }

    #[test]
    fn decomposed_generators_respect_fanin_for_wide_blocks() {
        for width in 1..=16 {
            let nl = build_decomposed_clg(width, &unit()).unwrap();
            assert!(nl.audit_fanin(4).is_empty(), "width {width}");
            let nl = build_decomposed_sclg(width, &unit()).unwrap();
            assert!(nl.audit_fanin(4).is_empty(), "width {width}");
        }
    }

    #[test]
    fn scbcla_carry_out_comes_from_section_generator() {
        let nl = build_scbcla_block(4, GeneratorStyle::Decomposed, &unit()).unwrap();
        let cout = nl.net_by_name("Cout").unwrap();
        let Some(Driver::Gate(g)) = nl.drivers()[cout.index()] else {
            panic!()
        };
        assert_eq!(nl.gates()[g].tag, "s0.sclg.ao21.c4");
        // ripple chain stops at R3; C4 only comes from the lookahead side
        assert!(nl.find_net("R3").is_some());
        assert!(nl.find_net("R4").is_none());
    }

    #[test]
    fn adder_ports() {
        let nl = build_adder(&named_spec("hybrid-ccla-3").unwrap(), &unit()).unwrap();
        assert_eq!(nl.inputs().len(), 65);
        assert_eq!(nl.outputs().len(), 33);
        assert_eq!(nl.net_name(nl.inputs()[32]), "B0");
        assert_eq!(nl.net_name(nl.inputs()[64]), "Cin");
        assert_eq!(nl.net_name(nl.outputs()[31]), "Sum31");
        assert_eq!(nl.net_name(nl.outputs()[32]), "Cout");
        assert!(nl.audit_fanin(4).is_empty());
    }

    #[test]
    fn basic_style_composition_fails_under_constrained_library() {
        let spec = AdderSpec::parse("ccla:4*8", GeneratorStyle::Basic).unwrap();
        let err = build_adder(&spec, &unit()).unwrap_err();
        assert_eq!(err.missing_cell(), Some((CellKind::Or, 5)));
        assert!(build_adder(&spec, &ideal()).is_ok());
    }
}
