//! Batch command-line surface.
//!
//! Every command reads an optional JSON config, writes one table (CSV by
//! default, JSON when the output path ends in `.json`) and is deterministic
//! for a fixed `--seed`. Errors print a single `error: ...` line on stderr and
//! exit with [`EXIT_USAGE`].

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::estimates::{
    sample_with_norm, theorem1_bound, theorem2_bound, theorem3_bound, theorem4_bound, PhiDomain, PhiMinorant,
    Theorem2Options,
};
use crate::hammerstein::{solve, ProblemFile, SolveOptions, SolveResult};
use crate::measure::{GridFunction, MeasureSpace};
use crate::modular::{char_norms, check_relations, luxemburg_norm, orlicz_norm, REPORT_SLACK};
use crate::nfunction::{
    delta2_probe, delta3_probe, growth_condition4_probe, verify_nfunction, NFunction, NFunctionSpec,
};
use crate::rng::{gaussian_vec, log_uniform, seeded};
use crate::scalar::log_grid;

/// Malformed input, bad flags, unreadable files.
pub const EXIT_USAGE: i32 = 64;
/// The output file could not be written.
pub const EXIT_IO: i32 = 74;
/// A report contains failing rows.
pub const EXIT_CHECKS_FAILED: i32 = 1;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ORLICZ_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "orlicz-lab", version, about = "Orlicz-space norms, estimates and Hammerstein solves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config for the command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; `.json` selects JSON, anything else CSV. Stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override for checks (or the solver residual).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Norms, modular relations and indicator closed forms.
    Norm,
    /// Closed-form versus numeric conjugates.
    ConjugateTable,
    /// Structural probes for each N-function.
    Probe,
    /// Sampled modular lower bounds.
    VerifyTheorems,
    /// Solve a discretized Hammerstein equation.
    Solve,
}

/// Resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub tol: Option<f64>,
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        Self { command: cli.command, config: cli.config, out: cli.out, seed: cli.seed, tol: cli.tol }
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(u64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Rows whose `pass` column is `false`.
    pub fn failed_rows(&self) -> usize {
        self.column("pass").map_or(0, |i| self.rows.iter().filter(|r| r[i] == Cell::Bool(false)).count())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Result of one command: a table or a solve result, plus the exit code.
#[derive(Debug, Clone)]
pub enum Output {
    Table(Table),
    Solve(Box<SolveResult>),
}

impl Output {
    pub fn exit_code(&self) -> i32 {
        match self {
            Output::Table(t) if t.failed_rows() > 0 => EXIT_CHECKS_FAILED,
            Output::Table(_) => 0,
            Output::Solve(r) => r.exit_code(),
        }
    }

    /// Serialized output for `path` (format chosen by extension).
    pub fn render(&self, path: Option<&Path>) -> String {
        let json = path.is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
        match self {
            Output::Table(t) if json => pretty(&t.to_json()),
            Output::Table(t) => t.to_csv(),
            Output::Solve(r) => {
                let csv = path.is_some_and(|p| p.extension().is_some_and(|e| e == "csv"));
                if csv {
                    solution_table(r).to_csv()
                } else {
                    pretty(&serde_json::to_value(r.as_ref()).expect("serializable result"))
                }
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable json");
    s.push('\n');
    s
}

fn solution_table(r: &SolveResult) -> Table {
    let mut t = Table::new(&["cell_index", "value"]);
    for (i, v) in r.x.iter().enumerate() {
        t.push(vec![i.into(), (*v).into()]);
    }
    t
}

/// Parses `args`, runs the command, writes the output and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {}", one_line(&e.to_string()));
        return EXIT_USAGE;
    }
    let config = RunConfig::from(cli);
    let output = match execute(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            return EXIT_USAGE;
        }
    };
    let text = output.render(config.out.as_deref());
    let written = match &config.out {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(format!("stdout: {e}")),
                _ => Ok(()),
            }
        }
    };
    if let Err(e) = written {
        eprintln!("error: io: {}", one_line(&e));
        return EXIT_IO;
    }
    output.exit_code()
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs the command without touching stdout or the output file.
pub fn execute(config: &RunConfig) -> Result<Output> {
    if let Some(tol) = config.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidInput(format!("--tol must be positive, got {tol}")));
        }
    }
    match config.command {
        Command::Norm => cmd_norm(&require_config(config)?, config).map(Output::Table),
        Command::ConjugateTable => cmd_conjugate_table(&optional_config(config)?, config).map(Output::Table),
        Command::Probe => cmd_probe(&optional_config(config)?).map(Output::Table),
        Command::VerifyTheorems => cmd_verify_theorems(&optional_config(config)?, config).map(Output::Table),
        Command::Solve => cmd_solve(require_config(config)?, config).map(|r| Output::Solve(Box::new(r))),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn require_config<T: DeserializeOwned>(config: &RunConfig) -> Result<T> {
    let path = config
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("this command needs --config".into()))?;
    read_json(path)
}

fn optional_config<T: DeserializeOwned + Default>(config: &RunConfig) -> Result<T> {
    config.config.as_deref().map_or_else(|| Ok(T::default()), read_json)
}

fn resolve(config: &RunConfig, path: &Path) -> PathBuf {
    match config.config.as_deref().and_then(Path::parent) {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn nfunctions(specs: &Option<Vec<NFunctionSpec>>) -> Result<Vec<NFunction>> {
    let specs = specs.clone().unwrap_or_else(NFunctionSpec::catalog);
    if specs.is_empty() {
        return Err(Error::InvalidInput("nfunctions must not be empty".into()));
    }
    specs.into_iter().map(NFunction::new).collect()
}

/// Reads `cell_index,weight,value` rows into a space and one function.
pub fn read_cell_csv(path: &Path) -> Result<(MeasureSpace, GridFunction)> {
    #[derive(Deserialize)]
    struct Row {
        cell_index: usize,
        weight: f64,
        value: f64,
    }
    let bad = |e: &dyn std::fmt::Display| Error::InvalidInput(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(&e))?;
    let mut rows: Vec<Row> = reader.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| bad(&e))?;
    if rows.is_empty() {
        return Err(bad(&"no rows"));
    }
    rows.sort_by_key(|r| r.cell_index);
    if rows.iter().enumerate().any(|(i, r)| r.cell_index != i) {
        return Err(bad(&"cell_index must cover 0..n exactly once"));
    }
    let space = MeasureSpace::new(rows.iter().map(|r| r.weight).collect())?;
    let x = GridFunction::new(rows.iter().map(|r| r.value).collect())?;
    Ok((space, x))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    /// Defaults to the catalog.
    pub nfunctions: Option<Vec<NFunctionSpec>>,
    pub space: Option<MeasureSpace>,
    pub functions: Vec<GridFunction>,
    /// Optional dual function for the coupling bounds, shared by all inputs.
    pub dual: Option<GridFunction>,
    /// `cell_index,weight,value` file; supplies the space and one function.
    pub csv: Option<PathBuf>,
    /// Number of seeded random functions.
    pub random: usize,
    /// Cell sets whose indicators are checked against the closed forms.
    pub indicators: Vec<Vec<usize>>,
    /// Scalings for the modular/Orlicz relation; defaults to `[0.5, 1, 2]`.
    pub lambdas: Option<Vec<f64>>,
}

const NORM_COLUMNS: &[&str] = &["nfunction", "function", "quantity", "value", "bound", "slack", "pass"];

pub fn cmd_norm(cfg: &NormConfig, run: &RunConfig) -> Result<Table> {
    let ms = nfunctions(&cfg.nfunctions)?;
    let tol = run.tol.unwrap_or(REPORT_SLACK);
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let mut inputs: Vec<(String, GridFunction, Option<GridFunction>)> = Vec::new();
    let mut space = cfg.space.clone();
    if let Some(p) = &cfg.csv {
        let (s, x) = read_cell_csv(&resolve(run, p))?;
        if space.as_ref().is_some_and(|sp| *sp != s) {
            return Err(Error::InvalidInput("csv weights disagree with space".into()));
        }
        space = Some(s);
        inputs.push(("csv".into(), x, cfg.dual.clone()));
    }
    let space = space.ok_or_else(|| Error::InvalidInput("norm needs a space (or a csv input)".into()))?;
    for (i, f) in cfg.functions.iter().enumerate() {
        inputs.push((format!("f{i}"), f.clone(), cfg.dual.clone()));
    }
    let mut rng = seeded(run.seed);
    for i in 0..cfg.random {
        let scale = log_uniform(&mut rng, 0.1, 10.0);
        let x = GridFunction::new(gaussian_vec(&mut rng, space.len()).into_iter().map(|v| v * scale).collect())?;
        let y = GridFunction::new(gaussian_vec(&mut rng, space.len()))?;
        inputs.push((format!("random{i}"), x, Some(y)));
    }
    if inputs.is_empty() && cfg.indicators.is_empty() {
        return Err(Error::InvalidInput("no functions to evaluate".into()));
    }
    let mut table = Table::new(NORM_COLUMNS);
    for m in &ms {
        let label = m.spec().label();
        for (name, x, y) in &inputs {
            let report = check_relations(m, &space, x, &lambdas, y.as_ref(), tol)?;
            let summary = [
                ("luxemburg_norm", report.luxemburg),
                ("orlicz_norm", report.orlicz),
                ("modular", report.modular_value),
            ];
            for (q, v) in summary {
                table.push(vec![label.as_str().into(), name.as_str().into(), q.into(), v.into(), Cell::Empty, Cell::Empty, Cell::Empty]);
            }
            for c in &report.checks {
                table.push(vec![
                    label.as_str().into(),
                    name.as_str().into(),
                    c.quantity.as_str().into(),
                    c.value.into(),
                    c.bound.into(),
                    c.slack.into(),
                    c.pass.into(),
                ]);
            }
        }
        for (i, cells) in cfg.indicators.iter().enumerate() {
            let (chi, measure) = space.indicator(cells)?;
            let closed = char_norms(m, measure)?;
            let name = format!("indicator{i}");
            let computed = [
                ("char_luxemburg", luxemburg_norm(m, &space, &chi)?, closed.luxemburg),
                ("char_orlicz", orlicz_norm(m, &space, &chi)?, closed.orlicz),
            ];
            for (q, value, target) in computed {
                let diff = (value - target).abs();
                table.push(vec![
                    label.as_str().into(),
                    name.as_str().into(),
                    q.into(),
                    value.into(),
                    target.into(),
                    (-diff).into(),
                    (diff <= tol * target.abs().max(1.0)).into(),
                ]);
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjugateTableConfig {
    pub nfunctions: Option<Vec<NFunctionSpec>>,
    pub v_min: f64,
    pub v_max: f64,
    pub points: usize,
}

impl Default for ConjugateTableConfig {
    fn default() -> Self {
        Self { nfunctions: None, v_min: 0.01, v_max: 10.0, points: 25 }
    }
}

/// Relative tolerance of the double-conjugate column.
pub const INVOLUTION_RTOL: f64 = 1e-6;

pub fn cmd_conjugate_table(cfg: &ConjugateTableConfig, run: &RunConfig) -> Result<Table> {
    if !(cfg.v_min > 0.0 && cfg.v_max > cfg.v_min && cfg.v_max.is_finite() && cfg.points >= 2) {
        return Err(Error::InvalidInput("conjugate-table needs 0 < v_min < v_max and points >= 2".into()));
    }
    let tol = run.tol.unwrap_or(REPORT_SLACK);
    let mut table = Table::new(&[
        "nfunction",
        "v",
        "conjugate",
        "numeric_conjugate",
        "abs_diff",
        "double_conjugate",
        "original",
        "involution_rel_err",
        "young_slack",
        "pass",
    ]);
    for m in nfunctions(&cfg.nfunctions)? {
        let conj = m.conjugate();
        let numeric = NFunction::new_unchecked(NFunctionSpec::Conjugate(Box::new(m.spec().clone())));
        let double = conj.conjugate();
        for v in log_grid(cfg.v_min, cfg.v_max, cfg.points) {
            let c = conj.value(v);
            let n = numeric.value(v);
            let diff = (c - n).abs();
            let dd = double.value(v);
            let orig = m.value(v);
            let rel = (dd - orig).abs() / orig.abs().max(f64::MIN_POSITIVE);
            // equality case of Young at u = (M*)'(v)
            let u = conj.deriv(v);
            let young = m.value(u) + c - u * v;
            let pass = diff <= tol * c.abs().max(1.0) && rel <= INVOLUTION_RTOL && young >= -1e-10 * (u * v).max(1.0);
            table.push(vec![
                m.spec().label().into(),
                v.into(),
                c.into(),
                n.into(),
                diff.into(),
                dd.into(),
                orig.into(),
                rel.into(),
                young.into(),
                pass.into(),
            ]);
        }
    }
    Ok(table)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub nfunctions: Option<Vec<NFunctionSpec>>,
    pub delta2_u_max: f64,
    pub delta3_k: f64,
    pub delta3_u_max: f64,
    pub condition4_k: f64,
    pub condition4_u_max: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            nfunctions: None,
            delta2_u_max: 1e4,
            delta3_k: 2.0,
            delta3_u_max: 1e4,
            condition4_k: 2.0,
            condition4_u_max: 1e6,
        }
    }
}

pub fn cmd_probe(cfg: &ProbeConfig) -> Result<Table> {
    let mut table = Table::new(&["nfunction", "probe", "verdict", "statistic", "reference", "detail"]);
    let grid = log_grid(1e-6, 1e6, 241);
    for m in nfunctions(&cfg.nfunctions)? {
        let label = m.spec().label();
        let row = |probe: &str, verdict: bool, stat: f64, reference: f64, detail: String| {
            vec![label.as_str().into(), probe.into(), verdict.into(), stat.into(), reference.into(), detail.into()]
        };
        let n = verify_nfunction(&m, &grid)?;
        let detail = format!("convex={} zero_limit={} infinity_limit={}", n.convex, n.zero_limit, n.infinity_limit);
        table.push(row("nfunction", n.pass, n.worst_convexity_violation, n.ratio_near_infinity, detail));
        let d2 = delta2_probe(&m, cfg.delta2_u_max)?;
        let detail = d2.diverging_u.map_or(format!("sup_ratio={:e}", d2.sup_ratio), |u| format!("diverges_at={u:e}"));
        table.push(row("delta2", d2.verdict, d2.ratio_at_max, d2.ratio_at_tenth, detail));
        let d3 = delta3_probe(&m, cfg.delta3_k, cfg.delta3_u_max)?;
        let detail = format!("k={}", cfg.delta3_k);
        table.push(row("delta3", d3.verdict, d3.u0.unwrap_or(f64::NAN), d3.last_finite_u.unwrap_or(f64::NAN), detail));
        let c4 = growth_condition4_probe(&m, cfg.condition4_k, cfg.condition4_u_max)?;
        let detail = format!("trend={:?}", c4.trend).to_lowercase();
        table.push(row("condition4", c4.verdict, c4.r_at_max, c4.r_at_tenth, detail));
    }
    Ok(table)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremCase {
    pub theorem: u8,
    pub nfunction: NFunctionSpec,
    pub phi: PhiMinorant,
    /// Radius for theorem 2.
    #[serde(default)]
    pub r: Option<f64>,
    /// Truncation level for theorem 4 as a fraction of `1/||1||`.
    #[serde(default)]
    pub h_fraction: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub cells: Option<usize>,
    /// Sampled norms are log-uniform in this range.
    #[serde(default)]
    pub norm_range: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremsConfig {
    pub cases: Vec<TheoremCase>,
    pub samples: usize,
    pub cells: usize,
}

impl Default for TheoremsConfig {
    fn default() -> Self {
        Self { cases: default_theorem_cases(), samples: 100, cells: 16 }
    }
}

/// The built-in suite: one case per worked minorant.
pub fn default_theorem_cases() -> Vec<TheoremCase> {
    let case = |theorem, nfunction, phi| TheoremCase {
        theorem,
        nfunction,
        phi,
        r: None,
        h_fraction: None,
        samples: None,
        cells: None,
        norm_range: None,
    };
    vec![
        case(1, NFunctionSpec::ExpMinusLinear, PhiMinorant::power(2.0, PhiDomain::Large)),
        case(1, NFunctionSpec::ExpSquare, PhiMinorant::power(2.0, PhiDomain::Large)),
        TheoremCase { r: Some(2.0), ..case(2, NFunctionSpec::ExpMinusLinear, PhiMinorant::exp_minus_linear_ratio()) },
        TheoremCase { r: Some(2.0), ..case(2, NFunctionSpec::ExpSquare, PhiMinorant::exp_square_ratio()) },
        case(3, NFunctionSpec::EntropyLike, PhiMinorant::power(2.0, PhiDomain::Small)),
        case(3, NFunctionSpec::PowerLog { p: 2.0 }, PhiMinorant::power(3.0, PhiDomain::Small)),
        TheoremCase {
            h_fraction: Some(0.5),
            ..case(4, NFunctionSpec::EntropyLike, PhiMinorant::power(2.0, PhiDomain::Small))
        },
    ]
}

pub fn cmd_verify_theorems(cfg: &TheoremsConfig, run: &RunConfig) -> Result<Table> {
    if cfg.cases.is_empty() {
        return Err(Error::InvalidInput("no theorem cases".into()));
    }
    let mut table = Table::new(&[
        "theorem",
        "nfunction",
        "phi",
        "sample",
        "applicable",
        "norm",
        "actual",
        "bound",
        "slack",
        "pass",
        "witness_h",
        "witness_norm",
        "witness_required",
        "witness_holds",
    ]);
    for (index, case) in cfg.cases.iter().enumerate() {
        let m = NFunction::new(case.nfunction.clone())?;
        let cells = case.cells.unwrap_or(cfg.cells);
        if cells == 0 {
            return Err(Error::InvalidInput("cells must be positive".into()));
        }
        let space = MeasureSpace::uniform(cells, 1.0)?;
        let [lo, hi] = match (case.norm_range, case.theorem) {
            (Some(range), _) => range,
            (None, 1) => [1.0, 20.0],
            (None, 2) => {
                let r = case.r.unwrap_or(2.0);
                [r, 10.0 * r]
            }
            (None, 3 | 4) => [1e-3, 1.0],
            (None, t) => return Err(Error::InvalidInput(format!("unknown theorem {t}"))),
        };
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("bad norm_range [{lo}, {hi}]")));
        }
        let h = match case.h_fraction {
            Some(frac) => {
                let ones = luxemburg_norm(&m, &space, &space.ones())?;
                Some(frac / ones)
            }
            None => None,
        };
        let mut rng = seeded(run.seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        for sample in 0..case.samples.unwrap_or(cfg.samples) {
            let target = if hi > lo { log_uniform(&mut rng, lo, hi) } else { lo };
            let x = sample_with_norm(&m, &space, &mut rng, target);
            let report = match case.theorem {
                1 => theorem1_bound(&m, &space, &x, &case.phi)?,
                2 => theorem2_bound(&m, &space, &x, &case.phi, case.r.unwrap_or(2.0), Theorem2Options::default())?,
                3 => theorem3_bound(&m, &space, &x, &case.phi)?,
                4 => theorem4_bound(
                    &m,
                    &space,
                    &x,
                    &case.phi,
                    h.ok_or_else(|| Error::InvalidInput("theorem 4 needs h_fraction".into()))?,
                )?,
                t => return Err(Error::InvalidInput(format!("unknown theorem {t}"))),
            };
            let w = report.witness.as_ref();
            table.push(vec![
                Cell::Int(case.theorem.into()),
                m.spec().label().into(),
                case.phi.label().into(),
                sample.into(),
                report.applicable.into(),
                report.norm.into(),
                report.actual.into(),
                report.bound_value.into(),
                report.slack.into(),
                report.pass.into(),
                w.map(|w| w.h).into(),
                w.map(|w| w.norm).into(),
                w.map(|w| w.required_norm).into(),
                w.map_or(Cell::Empty, |w| w.holds.into()),
            ]);
        }
    }
    Ok(table)
}

/// A problem file plus optional solver settings.
#[derive(Debug, Deserialize)]
pub struct SolveConfig {
    #[serde(flatten)]
    pub problem: ProblemFile,
    /// Minorant for the Rothe radius; the baseline when absent.
    #[serde(default)]
    pub rothe_phi: Option<PhiMinorant>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

pub fn cmd_solve(cfg: SolveConfig, run: &RunConfig) -> Result<SolveResult> {
    let problem = cfg.problem.into_problem()?;
    let mut options = SolveOptions { seed: run.seed, rothe_phi: cfg.rothe_phi, ..Default::default() };
    if let Some(tol) = run.tol {
        options.tol = tol;
    }
    if let Some(max_iter) = cfg.max_iter {
        options.max_iter = max_iter;
    }
    solve(&problem, &options)
}
