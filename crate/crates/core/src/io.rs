//! File formats, reports and the experiment runner behind the CLI.
//!
//! * Traffic matrices: headerless dense CSV, one row per input wavelength.
//! * Flow records: CSV with header `src_key,dst_key,rate_mbps`.
//! * Workloads: CSV with header `arrival_slot,input,output,size_bytes`;
//!   packet ids are assigned in file order.
//! * Command traces: CSV `time_ns,kind,channel,bank,frame_seq,segment`, with
//!   `*` as the channel of broadcast commands.
//! * Reports: TOML with the experiment spec, config echo, seed and version.
//!   Identical inputs give byte-identical reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{
    derive_and_validate, design_analysis, sram_bound_bytes, AnalysisReport, Config,
    DerivedConfig, SramBounds, MB,
};
use crate::error::{Error, Result};
use crate::hbm::{
    check_timing, frame_only_workload, lone_packet, mixed_workload, overloaded_output_workload,
    periodic_mixed_workload, Counters, HbmCommand, HbmSwitch, Occupancy, Packet, SimOptions,
    TimingReport, MAX_PACKET, MIN_PACKET,
};
use crate::oracle::{mimic_report, run_oracle, throughput_report, MimicReport};
use crate::sps::{apply_scaling, evaluate, EvalMode, LossReport, Scaling};
use crate::traffic::{
    build_synthetic_tm, gen_dc_workload_detailed, resize_tm, tm_from_flows, DcWorkloadParams,
    FlowRecord, HashName, LbScheme, SyntheticParams, TrafficMatrix,
};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- matrices

/// Parses a headerless dense CSV matrix. Lines and columns in errors are
/// 1-based; blank lines are skipped.
pub fn parse_tm(text: &str) -> Result<TrafficMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut last_line = 0;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        last_line = ln + 1;
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: ln + 1,
                column: c + 1,
                msg: format!("'{}' is not a number", field.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: ln + 1, column: c + 1, msg: "non-finite load".into() });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: ln + 1,
                    column: row.len().min(first.len()) + 1,
                    msg: format!("row has {} columns, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: last_line.max(1), column: 1, msg: "empty matrix".into() });
    }
    TrafficMatrix::from_rows(&rows)
}

pub fn load_tm(path: &Path) -> Result<TrafficMatrix> {
    parse_tm(&read(path)?)
}

/// Shortest round-trip decimal form, so a saved matrix reloads bit-exactly.
pub fn tm_to_csv(tm: &TrafficMatrix) -> String {
    let mut s = String::new();
    for r in 0..tm.rows() {
        let row: Vec<String> = tm.row(r).iter().map(|v| format!("{v}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn save_tm(tm: &TrafficMatrix, path: &Path) -> Result<()> {
    write(path, &tm_to_csv(tm))
}

/// A single CSV file, or every `*.csv` in a directory in file-name order.
pub fn load_tms(path: &Path) -> Result<Vec<(String, TrafficMatrix)>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::EmptyInput(format!("no .csv files in {}", path.display())));
        }
        files
            .iter()
            .map(|f| Ok((f.file_name().unwrap().to_string_lossy().into_owned(), load_tm(f)?)))
            .collect()
    } else {
        Ok(vec![(path.display().to_string(), load_tm(path)?)])
    }
}

// ------------------------------------------------------------- flows, workloads

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, column: 0, msg: e.to_string() }
}

pub fn parse_flows(text: &str) -> Result<Vec<FlowRecord>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rd.deserialize::<FlowRecord>() {
        let f = rec.map_err(csv_error)?;
        if !(f.rate_mbps.is_finite() && f.rate_mbps > 0.0) {
            return Err(Error::Parse {
                line: out.len() + 2,
                column: 3,
                msg: format!("rate {} must be positive", f.rate_mbps),
            });
        }
        out.push(f);
    }
    Ok(out)
}

pub fn load_flows(path: &Path) -> Result<Vec<FlowRecord>> {
    parse_flows(&read(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct WorkloadRow {
    arrival_slot: u64,
    input: usize,
    output: usize,
    size_bytes: u64,
}

pub fn parse_workload(text: &str) -> Result<Vec<Packet>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    rd.deserialize::<WorkloadRow>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(csv_error)?;
            Ok(Packet {
                id: i as u64,
                input: r.input,
                output: r.output,
                size: r.size_bytes,
                arrival_slot: r.arrival_slot,
            })
        })
        .collect()
}

pub fn load_workload(path: &Path) -> Result<Vec<Packet>> {
    parse_workload(&read(path)?)
}

/// Rows in workload order; ids are implicit.
pub fn workload_to_csv(packets: &[Packet]) -> String {
    let mut s = String::from("arrival_slot,input,output,size_bytes\n");
    for p in packets {
        let _ = writeln!(s, "{},{},{},{}", p.arrival_slot, p.input, p.output, p.size);
    }
    s
}

pub fn save_workload(packets: &[Packet], path: &Path) -> Result<()> {
    write(path, &workload_to_csv(packets))
}

pub fn trace_to_csv(commands: &[HbmCommand]) -> String {
    let mut s = String::from("time_ns,kind,channel,bank,frame_seq,segment\n");
    for c in commands {
        let ch = c.channel.map_or("*".to_string(), |x| x.to_string());
        let seg = c.segment.map_or(String::new(), |x| x.to_string());
        let _ = writeln!(s, "{},{},{},{},{},{}", c.time_ns, c.kind.as_str(), ch, c.bank, c.frame_seq, seg);
    }
    s
}

// ---------------------------------------------------------------- experiments

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Args)]
pub struct Common {
    /// Configuration file with [switch], [timing] and [analysis] sections.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<PathBuf>,
    /// Built-in configuration used when --config is absent.
    #[arg(long, default_value = "reference", value_parser = ["reference", "desk"])]
    pub preset: String,
    /// Write the report here instead of standard output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<PathBuf>,
}

impl Common {
    pub fn load_config(&self) -> Result<Config> {
        match &self.config {
            Some(p) => Config::load(p),
            None if self.preset == "desk" => Ok(Config::desk()),
            None => Ok(Config::reference()),
        }
    }
}

fn seed_arg() -> clap::builder::RangedU64ValueParser<u64> {
    // Reports store integers as TOML i64.
    clap::value_parser!(u64).range(0..=i64::MAX as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct GenerateTmArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = seed_arg())]
    pub seed: u64,
    /// Per-wavelength load limit.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Zipf exponent of the output load limits.
    #[arg(long, default_value_t = 1.0)]
    pub zipf: f64,
    /// Rows; defaults to N·F·W.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rows: Option<usize>,
    /// Columns; defaults to N.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct ResizeTmArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub tm: PathBuf,
    /// Share of each value kept by the upper half when doubling.
    #[arg(long, default_value_t = 0.5)]
    pub alpha_split: f64,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rows: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct FlowsTmArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV of src_key,dst_key,rate_mbps.
    #[arg(long)]
    pub flows: PathBuf,
    #[arg(long, default_value = "md5", value_parser = ["md5", "sha256-128"])]
    pub hash: String,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rows: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct DcWorkloadArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = seed_arg())]
    pub seed: u64,
    #[arg(long, default_value = "ar", value_parser = ["ecmp", "rr", "ar"])]
    pub lb: String,
    #[arg(long, default_value_t = 8)]
    pub n_dcs: usize,
    #[arg(long, default_value_t = 512)]
    pub m_gpus: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_dc: f64,
    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.95)]
    pub max_wavelength_load: f64,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Per-wavelength cap of the WAN fill.
    #[arg(long, default_value_t = 0.95)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub zipf: f64,
    /// Directory receiving sample_000.csv, sample_001.csv, ...
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct EvaluateSpsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Matrix file, or a directory of matrix files (one per router).
    #[arg(long)]
    pub tm: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, value_parser = seed_arg())]
    pub seed: u64,
    #[arg(long, default_value = "fiber-split", value_parser = ["fiber-split", "first-fiber", "flow-random"])]
    pub mode: String,
    /// Normalization applied to the matrices before evaluation.
    #[arg(long, default_value = "none", value_parser = ["none", "global", "per-router"])]
    pub scaling: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct GenWorkloadArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = ["frame-only", "mixed", "periodic-mixed", "lone", "overload"])]
    pub kind: String,
    #[arg(long, default_value_t = 0.9)]
    pub load: f64,
    #[arg(long, default_value_t = 10_000)]
    pub slots: u64,
    #[arg(long, value_parser = seed_arg(), default_value_t = 0)]
    pub seed: u64,
    /// Packet sizes to draw from.
    #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
    pub sizes: Vec<u64>,
    /// Pattern length for periodic-mixed.
    #[arg(long, default_value_t = 4096)]
    pub period: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub workload: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub slots: u64,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub padding_timeout: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub bypass: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub speedup_n: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub widow_age: Option<u64>,
    /// Close batches at packet boundaries instead of splitting packets.
    #[arg(long)]
    #[serde(default)]
    pub no_straddle: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hbm_capacity_frames: Option<u64>,
    /// Fail on the first SRAM bound violation.
    #[arg(long)]
    #[serde(default)]
    pub strict_bounds: bool,
}

impl SimArgs {
    pub fn options(&self, record_commands: bool) -> SimOptions {
        SimOptions {
            slots: self.slots,
            padding_timeout: self.padding_timeout,
            bypass: self.bypass,
            speedup_n: self.speedup_n,
            widow_age: self.widow_age,
            allow_straddle: !self.no_straddle,
            hbm_capacity_frames: self.hbm_capacity_frames,
            record_commands,
            occupancy_stride: 0,
            strict_bounds: self.strict_bounds,
            min_packet: MIN_PACKET,
            max_packet: MAX_PACKET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Write the full HBM command trace as CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace_out: Option<PathBuf>,
    /// Also run the ideal output-queued switch and compare.
    #[arg(long)]
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sim: SimArgs,
}

/// One CLI invocation; stored verbatim in its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    /// Derived quantities, SRAM bounds, buffering, power and area.
    Analyze(AnalyzeArgs),
    /// Synthetic admissible matrix.
    GenerateTm(GenerateTmArgs),
    /// Expand a router-level matrix to wavelength granularity.
    ResizeTm(ResizeTmArgs),
    /// Matrix from hashed flow records.
    FlowsTm(FlowsTmArgs),
    /// Cross-DC pipeline-parallel matrices, one file per time sample.
    DcWorkload(DcWorkloadArgs),
    /// Fluid loss of the split-parallel switch over random fiber splits.
    EvaluateSps(EvaluateSpsArgs),
    /// Packet workload file for the switch simulator.
    GenWorkload(GenWorkloadArgs),
    /// Run one HBM switch on a workload file.
    SimulateSwitch(SimulateArgs),
    /// HBM switch against the ideal output-queued switch.
    Compare(CompareArgs),
}

impl ExperimentSpec {
    pub fn common(&self) -> &Common {
        match self {
            ExperimentSpec::Analyze(a) => &a.common,
            ExperimentSpec::GenerateTm(a) => &a.common,
            ExperimentSpec::ResizeTm(a) => &a.common,
            ExperimentSpec::FlowsTm(a) => &a.common,
            ExperimentSpec::DcWorkload(a) => &a.common,
            ExperimentSpec::EvaluateSps(a) => &a.common,
            ExperimentSpec::GenWorkload(a) => &a.common,
            ExperimentSpec::SimulateSwitch(a) => &a.common,
            ExperimentSpec::Compare(a) => &a.common,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentSpec::GenerateTm(a) => Some(a.seed),
            ExperimentSpec::DcWorkload(a) => Some(a.seed),
            ExperimentSpec::EvaluateSps(a) => Some(a.seed),
            ExperimentSpec::GenWorkload(a) => Some(a.seed),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmSummary {
    pub rows: usize,
    pub cols: usize,
    pub total: f64,
    pub max_row: f64,
    pub max_col: f64,
    pub col_capacity: f64,
    pub admissible: bool,
}

impl TmSummary {
    pub fn of(tm: &TrafficMatrix, col_capacity: f64) -> Self {
        TmSummary {
            rows: tm.rows(),
            cols: tm.cols(),
            total: tm.total(),
            max_row: tm.row_sums().into_iter().fold(0.0, f64::max),
            max_col: tm.col_sums().into_iter().fold(0.0, f64::max),
            col_capacity,
            admissible: tm.is_admissible(col_capacity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcSampleSummary {
    pub file: String,
    pub communicating: bool,
    pub forward: bool,
    pub dc_ports: Vec<usize>,
    pub matrix: TmSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputSummary {
    pub max_gap_cells: f64,
    pub final_half_slope: f64,
    pub output_rate_ratio: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub packets: usize,
    pub delivered: usize,
    pub slots: u64,
    pub slot_ns: f64,
    pub commands: u64,
    pub timing: TimingReport,
    pub counters: Counters,
    pub max_occupancy: Occupancy,
    pub bounds: SramBounds,
    pub bound_violation_slots: [u64; 4],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mimic: Option<MimicReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub throughput: Option<ThroughputSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReportBody {
    Analysis {
        derived: DerivedConfig,
        sram_bound_bytes: u64,
        sram_bound_mb: f64,
        sram_bounds_bits: SramBounds,
        analysis: AnalysisReport,
    },
    Matrix {
        output: String,
        matrix: TmSummary,
    },
    DcWorkload {
        lb_scheme: String,
        samples: Vec<DcSampleSummary>,
    },
    Loss {
        inputs: Vec<String>,
        scaling: String,
        loss: LossReport,
    },
    Workload {
        output: String,
        packets: usize,
        bytes: u64,
    },
    Simulation(Box<SimSummary>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// Named RNG streams derived from the seed.
    pub seed_streams: Vec<String>,
    pub spec: ExperimentSpec,
    pub config: Config,
    pub result: ReportBody,
}

pub fn report_to_string(r: &Report) -> Result<String> {
    toml::to_string(r).map_err(|e| Error::Io(format!("cannot serialize report: {e}")))
}

pub fn parse_report(text: &str) -> Result<Report> {
    toml::from_str(text).map_err(|e| Error::Parse { line: 0, column: 0, msg: e.to_string() })
}

/// Writes the report to `path`.
pub fn emit_report(r: &Report, path: &Path) -> Result<()> {
    write(path, &report_to_string(r)?)
}

/// What a run produced. `exit_code` is 0 on success and 1 when an invariant
/// check failed (the report is still complete).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

/// Exit status for an error: 1 for invariant and timing failures, 2 for bad
/// arguments or inputs.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) | Error::CapacityOverflow { .. } | Error::TimingInfeasible(_) => 1,
        _ => 2,
    }
}

fn to_mb(bytes: u64) -> f64 {
    bytes as f64 / MB
}

/// Runs one experiment and writes its artifacts (not the report).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Outcome> {
    let cfg = spec.common().load_config()?;
    let sw = &cfg.switch;
    let mut streams: Vec<String> = Vec::new();
    let mut exit_code = 0;
    let result = match spec {
        ExperimentSpec::Analyze(_) => {
            let derived = derive_and_validate(sw, &cfg.timing)?;
            let (total, bounds) = sram_bound_bytes(sw);
            ReportBody::Analysis {
                derived,
                sram_bound_bytes: total,
                sram_bound_mb: to_mb(total),
                sram_bounds_bits: bounds,
                analysis: design_analysis(sw, &cfg.analysis),
            }
        }
        ExperimentSpec::GenerateTm(a) => {
            derive_and_validate(sw, &cfg.timing)?;
            let p = SyntheticParams {
                rho: a.rho,
                zipf_s: a.zipf,
                wavelength_gbps: sw.wavelength_gbps,
                ..SyntheticParams::default()
            };
            if !(a.rho > 0.0 && a.rho <= 1.0) || a.zipf < 0.0 {
                return Err(Error::InvalidConfig("need 0 < rho <= 1 and zipf >= 0".into()));
            }
            let rows = a.rows.unwrap_or(sw.tm_rows());
            let cols = a.cols.unwrap_or(sw.n_ports as usize);
            let tm = build_synthetic_tm(&p, rows, cols, sw.tm_col_capacity(), a.seed);
            streams.push("synthetic-tm".into());
            save_tm(&tm, &a.out)?;
            ReportBody::Matrix {
                output: a.out.display().to_string(),
                matrix: TmSummary::of(&tm, sw.tm_col_capacity()),
            }
        }
        ExperimentSpec::ResizeTm(a) => {
            let src = load_tm(&a.tm)?;
            let rows = a.rows.unwrap_or(sw.tm_rows());
            let cols = a.cols.unwrap_or(sw.n_ports as usize);
            let tm = resize_tm(&src, a.alpha_split, rows, cols, sw.tm_col_capacity())?;
            save_tm(&tm, &a.out)?;
            ReportBody::Matrix {
                output: a.out.display().to_string(),
                matrix: TmSummary::of(&tm, sw.tm_col_capacity()),
            }
        }
        ExperimentSpec::FlowsTm(a) => {
            let flows = load_flows(&a.flows)?;
            let hash: HashName = a.hash.parse()?;
            let rows = a.rows.unwrap_or(sw.tm_rows());
            let cols = a.cols.unwrap_or(sw.n_ports as usize);
            let tm = tm_from_flows(&flows, rows, cols, sw.tm_col_capacity(), hash)?;
            save_tm(&tm, &a.out)?;
            ReportBody::Matrix {
                output: a.out.display().to_string(),
                matrix: TmSummary::of(&tm, sw.tm_col_capacity()),
            }
        }
        ExperimentSpec::DcWorkload(a) => {
            let lb: LbScheme = a.lb.parse()?;
            let p = DcWorkloadParams {
                n_dcs: a.n_dcs,
                m_gpus: a.m_gpus,
                alpha_dc: a.alpha_dc,
                beta_comm: a.beta,
                max_wavelength_load: a.max_wavelength_load,
                lb_scheme: lb,
                n_time_samples: a.samples,
                seed: a.seed,
                wan: SyntheticParams {
                    rho: a.rho,
                    zipf_s: a.zipf,
                    wavelength_gbps: sw.wavelength_gbps,
                    ..SyntheticParams::default()
                },
            };
            let samples = gen_dc_workload_detailed(&p, sw)?;
            streams.extend(["dc-comm", "dc-lb", "dc-wan"].map(String::from));
            let mut out = Vec::new();
            for (i, s) in samples.iter().enumerate() {
                let file = format!("sample_{i:03}.csv");
                save_tm(&s.tm, &a.out_dir.join(&file))?;
                out.push(DcSampleSummary {
                    file,
                    communicating: s.communicating,
                    forward: s.forward,
                    dc_ports: s.dc_ports.clone(),
                    matrix: TmSummary::of(&s.tm, sw.tm_col_capacity()),
                });
            }
            ReportBody::DcWorkload { lb_scheme: lb.as_str().into(), samples: out }
        }
        ExperimentSpec::EvaluateSps(a) => {
            derive_and_validate(sw, &cfg.timing)?;
            let mode: EvalMode = a.mode.parse()?;
            let scaling: Scaling = a.scaling.parse()?;
            let named = load_tms(&a.tm)?;
            let inputs = named.iter().map(|(n, _)| n.clone()).collect();
            let mut tms: Vec<TrafficMatrix> = named.into_iter().map(|(_, t)| t).collect();
            apply_scaling(&mut tms, sw.tm_col_capacity(), scaling);
            let loss = evaluate(&tms, sw, a.trials, a.seed, mode)?;
            streams.push("trial".into());
            ReportBody::Loss { inputs, scaling: a.scaling.clone(), loss }
        }
        ExperimentSpec::GenWorkload(a) => {
            if a.sizes.is_empty() {
                return Err(Error::InvalidWorkload("no packet sizes".into()));
            }
            let wl = match a.kind.as_str() {
                "frame-only" => frame_only_workload(sw, a.load, a.slots, &a.sizes, a.seed),
                "mixed" => mixed_workload(sw, a.load, a.slots, &a.sizes, a.seed),
                "periodic-mixed" => {
                    periodic_mixed_workload(sw, a.load, a.slots, a.period, &a.sizes, a.seed)
                }
                "overload" => overloaded_output_workload(sw, a.load, a.slots, a.seed),
                _ => lone_packet(0, (sw.n_ports - 1) as usize, a.sizes[0], a.slots / 10),
            };
            streams.push(a.kind.clone());
            save_workload(&wl, &a.out)?;
            ReportBody::Workload {
                output: a.out.display().to_string(),
                packets: wl.len(),
                bytes: wl.iter().map(|p| p.size).sum(),
            }
        }
        ExperimentSpec::SimulateSwitch(a) => {
            let (summary, commands) = simulate(&cfg, &a.sim, a.oracle, a.trace_out.is_some())?;
            if let Some(p) = &a.trace_out {
                write(p, &trace_to_csv(&commands))?;
            }
            if summary.timing.violations() > 0 {
                exit_code = 1;
            }
            ReportBody::Simulation(Box::new(summary))
        }
        ExperimentSpec::Compare(a) => {
            let (summary, _) = simulate(&cfg, &a.sim, true, false)?;
            if summary.timing.violations() > 0 {
                exit_code = 1;
            }
            ReportBody::Simulation(Box::new(summary))
        }
    };
    let report = Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        seed: spec.seed(),
        seed_streams: streams,
        spec: spec.clone(),
        config: cfg,
        result,
    };
    Ok(Outcome { report, exit_code })
}

fn simulate(
    cfg: &Config,
    a: &SimArgs,
    with_oracle: bool,
    keep_commands: bool,
) -> Result<(SimSummary, Vec<HbmCommand>)> {
    let wl = load_workload(&a.workload)?;
    let sw = HbmSwitch::new(&cfg.switch, &cfg.timing, a.options(true))?;
    let tr = sw.run(&wl)?;
    let timing = check_timing(&tr.commands, &cfg.switch, &cfg.timing, sw.derived());
    let (mimic, throughput) = if with_oracle {
        let or = run_oracle(&wl, &cfg.switch)?;
        let m = mimic_report(&or, &tr)?;
        let w = cfg.switch.sram_width_bits / 8;
        let settle = 4 * cfg.switch.frame_bytes() / w * cfg.switch.bank_groups();
        let th = throughput_report(&wl, &or, &tr, 64, settle)?;
        let pass = th.pass();
        (
            Some(m),
            Some(ThroughputSummary {
                max_gap_cells: th.max_gap,
                final_half_slope: th.final_half_slope,
                output_rate_ratio: th.output_rate_ratio,
                pass,
            }),
        )
    } else {
        (None, None)
    };
    let summary = SimSummary {
        packets: wl.len(),
        delivered: tr.delivered(),
        slots: tr.slots,
        slot_ns: tr.slot_ns,
        commands: tr.commands.len() as u64,
        timing,
        counters: tr.counters,
        max_occupancy: tr.max_occupancy,
        bounds: tr.bounds,
        bound_violation_slots: tr.bound_violations.counts,
        mimic,
        throughput,
    };
    let commands = if keep_commands { tr.commands } else { Vec::new() };
    Ok((summary, commands))
}
