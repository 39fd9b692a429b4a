// SPDX-License-Identifier: Apache-2.0

//! The `cla` command line: generate, verify, time, simulate, benchmark and
//! compare adder designs.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 build error.

pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use cla_core::celllib::{CellLibrary, LibraryMode};
use cla_core::genarch::{self, build_adder, AdderSpec, GeneratorStyle};
use cla_core::logicsim::{
    self, adder_vectors, parse_vector_file, random_operands, run_sequence, verify_adder,
    AdderVector, VerifyMode, EXHAUSTIVE_MAX_WIDTH,
};
use cla_core::metrics::{self, MetricsReport};
use cla_core::netlist::{ExportFormat, Netlist};
use cla_core::timing;

use report::{compare_operands, Operand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUILD: i32 = 3;

/// Environment variable naming the default cell library file.
pub const LIBRARY_ENV: &str = "CLA_LIBRARY";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Build(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Build(_) => EXIT_BUILD,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cla",
    version,
    about = "Carry-lookahead adder generator and analyzer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an adder and export its netlist.
    Generate(GenerateArgs),
    /// Check an adder against integer addition.
    Verify(VerifyArgs),
    /// Static timing report of an adder.
    Timing(TimingArgs),
    /// Simulate a vector sequence, report power, optionally dump VCD.
    Simulate(SimulateArgs),
    /// Power, delay, area and FOM for several designs.
    Bench(BenchArgs),
    /// Percent changes between two designs or published figures.
    Compare(CompareArgs),
    /// Print a cell library in its text format.
    Library(LibraryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Basic,
    Decomposed,
}

impl From<StyleArg> for GeneratorStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Basic => GeneratorStyle::Basic,
            StyleArg::Decomposed => GeneratorStyle::Decomposed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LibraryArgs {
    /// `builtin` or a library file.
    #[arg(long = "lib", env = LIBRARY_ENV, default_value = "builtin")]
    pub lib: String,
    /// Synthesize AND/OR cells of any fan-in.
    #[arg(long)]
    pub ideal: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Named design (e.g. hybrid-scbcla-4) or segment list (e.g. "rca:2,ccla:2,ccla:4*7").
    #[arg(long)]
    pub arch: String,
    #[arg(long, value_enum, default_value = "decomposed")]
    pub style: StyleArg,
    #[command(flatten)]
    pub library: LibraryArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NetlistFormat {
    Verilog,
    Dot,
    Json,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, value_enum, default_value = "verilog")]
    pub format: NetlistFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Every input combination (width <= 10).
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub exhaustive: bool,
    /// Number of seeded random vectors.
    #[arg(long, requires = "seed")]
    pub random: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
    /// Longest delay between two nets instead of the full report.
    #[arg(long, requires = "to")]
    pub from: Option<String>,
    #[arg(long, requires = "from")]
    pub to: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// `random:<count>:<seed>` or `file:<path>`.
    #[arg(long)]
    pub vectors: String,
    /// Time per vector, in library time units.
    #[arg(long, default_value_t = 5.0)]
    pub period: f64,
    #[arg(long)]
    pub vcd: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// The ten named 32-bit designs.
    #[arg(long, conflicts_with = "arch")]
    pub all: bool,
    /// Designs to run; repeat or separate with `;`.
    #[arg(long, value_delimiter = ';')]
    pub arch: Vec<String>,
    #[arg(long, value_enum, default_value = "decomposed")]
    pub style: StyleArg,
    #[command(flatten)]
    pub library: LibraryArgs,
    /// `random:<count>:<seed>` or `file:<path>`.
    #[arg(long, required_unless_present = "paper_mode")]
    pub vectors: Option<String>,
    #[arg(long, default_value_t = 5.0)]
    pub period: f64,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG bar chart of FOM.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Skip synthesis; read `name,power_uw,delay_ns,area_um2` rows instead.
    #[arg(long, conflicts_with_all = ["all", "arch", "vectors"])]
    pub paper_mode: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Metrics CSV: bench output or paper-mode input.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Design name, `fom:<x>` or `delay:<x>`.
    #[arg(long)]
    pub baseline: String,
    #[arg(long)]
    pub candidate: String,
    /// Comparison CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, data: &str) -> Result<(), CliError> {
    fs::write(path, data).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_library(args: &LibraryArgs) -> Result<Arc<CellLibrary>, CliError> {
    let lib = if args.lib == "builtin" {
        CellLibrary::builtin_unit()
    } else {
        CellLibrary::load(&args.lib).map_err(|e| CliError::Usage(format!("{}: {e}", args.lib)))?
    };
    let lib = if args.ideal {
        lib.with_mode(LibraryMode::Ideal)
            .map_err(|e| CliError::Usage(e.to_string()))?
    } else {
        lib
    };
    Ok(Arc::new(lib))
}

pub fn parse_arch(arch: &str, style: StyleArg) -> Result<AdderSpec, CliError> {
    AdderSpec::parse(arch, style.into()).map_err(|e| CliError::Usage(e.to_string()))
}

fn build(spec: &AdderSpec, lib: &Arc<CellLibrary>) -> Result<Netlist, CliError> {
    build_adder(spec, lib).map_err(|e| CliError::Build(format!("cannot build {}: {e}", spec.name)))
}

fn build_design(d: &DesignArgs) -> Result<(AdderSpec, Netlist), CliError> {
    let lib = load_library(&d.library)?;
    let spec = parse_arch(&d.arch, d.style)?;
    let nl = build(&spec, &lib)?;
    Ok((spec, nl))
}

/// Where stimulus comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VectorSource {
    Random { count: usize, seed: u64 },
    File(PathBuf),
}

impl VectorSource {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::Usage(format!(
                "vector source `{text}`: expected random:<count>:<seed> or file:<path>"
            ))
        };
        if let Some(rest) = text.strip_prefix("random:") {
            let (count, seed) = rest.split_once(':').ok_or_else(bad)?;
            let count: usize = count.parse().map_err(|_| bad())?;
            if count == 0 {
                return Err(CliError::Usage("vector count must be positive".into()));
            }
            return Ok(VectorSource::Random {
                count,
                seed: seed.parse().map_err(|_| bad())?,
            });
        }
        if let Some(path) = text.strip_prefix("file:") {
            return Ok(VectorSource::File(PathBuf::from(path)));
        }
        Err(bad())
    }

    /// Operands for a `width`-bit design. File vectors must fit the width.
    pub fn operands(&self, width: usize) -> Result<Vec<AdderVector>, CliError> {
        match self {
            VectorSource::Random { count, seed } => Ok(random_operands(width, *count, *seed)),
            VectorSource::File(path) => {
                let ops = parse_vector_file(&read_file(path)?)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let limit = if width >= 64 {
                    u64::MAX
                } else {
                    (1u64 << width) - 1
                };
                if let Some(op) = ops.iter().find(|op| op.a > limit || op.b > limit) {
                    return Err(CliError::Usage(format!(
                        "{}: operand {:#x}/{:#x} does not fit {width} bits",
                        path.display(),
                        op.a,
                        op.b
                    )));
                }
                if ops.is_empty() {
                    return Err(CliError::Usage(format!("{}: no vectors", path.display())));
                }
                Ok(ops)
            }
        }
    }
}

fn check_period(period: f64) -> Result<(), CliError> {
    if period <= 0.0 || !period.is_finite() {
        return Err(CliError::Usage(format!(
            "period must be positive, got {period}"
        )));
    }
    Ok(())
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    emit(out, None, text)
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (_, nl) = build_design(&args.design)?;
    let format = match args.format {
        NetlistFormat::Verilog => ExportFormat::Verilog,
        NetlistFormat::Dot => ExportFormat::Dot,
        NetlistFormat::Json => ExportFormat::Json,
    };
    emit(out, args.out.as_deref(), &nl.export(format))?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (spec, nl) = build_design(&args.design)?;
    let width = spec.total_width();
    let mode = match (args.exhaustive, args.random, args.seed) {
        (true, _, _) => {
            if width > EXHAUSTIVE_MAX_WIDTH {
                return Err(CliError::Usage(format!(
                    "exhaustive verification is limited to {EXHAUSTIVE_MAX_WIDTH} bits \
                     ({width} requested); use --random <count> --seed <seed>"
                )));
            }
            VerifyMode::Exhaustive
        }
        (false, Some(count), Some(seed)) => VerifyMode::Random { count, seed },
        _ => {
            return Err(CliError::Usage(
                "choose --exhaustive or --random <count> --seed <seed>".into(),
            ))
        }
    };
    let verdict = verify_adder(&nl, width, mode).map_err(|e| CliError::Usage(e.to_string()))?;
    match verdict.counterexample {
        None => {
            say(
                out,
                &format!(
                    "PASS {} ({width} bits, {} vectors)\n",
                    spec.name, verdict.vectors_checked
                ),
            )?;
            Ok(EXIT_OK)
        }
        Some(c) => {
            say(
                out,
                &format!(
                    "FAIL {}: A={:#x} B={:#x} Cin={} expected Sum={:#x} Cout={} got Sum={:#x} Cout={}\n",
                    spec.name,
                    c.a,
                    c.b,
                    c.cin as u8,
                    c.expected_sum,
                    c.expected_cout as u8,
                    c.got_sum,
                    c.got_cout as u8
                ),
            )?;
            Ok(EXIT_VERIFY_FAILED)
        }
    }
}

fn cmd_timing(args: &TimingArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (_, nl) = build_design(&args.design)?;
    if let (Some(from), Some(to)) = (&args.from, &args.to) {
        let d = timing::path_delay(&nl, from, to).map_err(|e| CliError::Usage(e.to_string()))?;
        say(
            out,
            &format!("{from} -> {to}: {d} {}\n", nl.library().units().time),
        )?;
        return Ok(EXIT_OK);
    }
    let report = timing::analyze(&nl).map_err(|e| CliError::Build(e.to_string()))?;
    let text = match args.format {
        ReportFormat::Table => format!("{}path {}\n", report.to_table(), report.path_string()),
        ReportFormat::Json => report.to_json(),
    };
    say(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    check_period(args.period)?;
    let (spec, nl) = build_design(&args.design)?;
    let width = spec.total_width();
    let ops = VectorSource::parse(&args.vectors)?.operands(width)?;
    let sim_err = |e: logicsim::SimError| CliError::Usage(e.to_string());
    let vectors = adder_vectors(&nl, width, &ops).map_err(sim_err)?;
    let trace = run_sequence(&nl, &vectors, args.period).map_err(sim_err)?;
    let power = metrics::estimate_power(&trace, &nl).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(path) = &args.vcd {
        logicsim::dump_vcd(&trace, &nl, path).map_err(sim_err)?;
    }
    let unit = &nl.library().units().power;
    say(
        out,
        &format!(
            "design   {}\nvectors  {}\ntoggles  {}\ndynamic  {:.4} {unit}\nleakage  {:.4} {unit}\ntotal    {:.4} {unit}\n",
            spec.name,
            trace.vector_count(),
            trace.total_toggles(),
            power.dynamic,
            power.leakage,
            power.total
        ),
    )?;
    Ok(EXIT_OK)
}

/// Metrics for each design, in the order given.
pub fn bench_designs(
    specs: &[AdderSpec],
    lib: &Arc<CellLibrary>,
    source: &VectorSource,
    period: f64,
) -> Result<Vec<MetricsReport>, CliError> {
    check_period(period)?;
    specs
        .par_iter()
        .map(|spec| {
            let nl = build(spec, lib)?;
            let width = spec.total_width();
            let ops = source.operands(width)?;
            let vectors =
                adder_vectors(&nl, width, &ops).map_err(|e| CliError::Usage(e.to_string()))?;
            metrics::evaluate_design(&nl, &vectors, period)
                .map_err(|e| CliError::Build(format!("{}: {e}", spec.name)))
        })
        .collect()
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (rows, title) = if let Some(path) = &args.paper_mode {
        (
            report::read_paper_csv(&read_file(path)?)?,
            "FOM (published P, D, A)",
        )
    } else {
        let specs: Vec<AdderSpec> = if args.all || args.arch.is_empty() {
            genarch::named_specs()
                .into_iter()
                .map(|s| s.with_style(args.style.into()))
                .collect()
        } else {
            args.arch
                .iter()
                .map(|a| parse_arch(a, args.style))
                .collect::<Result<_, _>>()?
        };
        let source = VectorSource::parse(args.vectors.as_deref().unwrap_or_default())?;
        let lib = load_library(&args.library)?;
        (bench_designs(&specs, &lib, &source, args.period)?, "FOM")
    };
    let csv = report::write_bench_csv(&rows);
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            say(out, &report::bench_table(&rows))?;
        }
        None => say(out, &csv)?,
    }
    if let Some(path) = &args.svg {
        write_file(path, &report::fom_svg(&rows, title))?;
    }
    Ok(EXIT_OK)
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let source = match &args.source {
        Some(path) => report::read_metrics_csv(&read_file(path)?)?,
        None => Vec::new(),
    };
    let baseline = Operand::resolve(&args.baseline, &source)?;
    let candidate = Operand::resolve(&args.candidate, &source)?;
    let cmp = compare_operands(&baseline, &candidate)?;
    if let Some(path) = &args.out {
        write_file(path, &cmp.csv())?;
    }
    say(out, &cmp.table())?;
    Ok(EXIT_OK)
}

fn cmd_library(args: &LibraryArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    say(out, &load_library(args)?.to_text())?;
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Timing(a) => cmd_timing(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Library(a) => cmd_library(a, out),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
