//! Declarative, seeded experiment campaigns that write CSV tables and a run
//! manifest.
//!
//! A config is a flat TOML file. The keys `experiment`, `trials`, `seed` and
//! `output_dir` are reserved; every other key is an experiment parameter and
//! overrides the registered default of the same name. A `manifest.json` from a
//! previous run is accepted as a config too: its `config` object is read back.

mod recipes;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::Error;

pub use recipes::REGISTRY;

pub const VERSION: &str = concat!("isac-core ", env!("CARGO_PKG_VERSION"));

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "ISAC_BENCH_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "isac-out";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    UnknownExperiment,
    InvalidConfig,
    Unwritable,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub kind: ErrorKind,
    pub message: String,
}

impl RunError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::InvalidConfig, message)
    }

    /// Process exit code: 2 unknown experiment, 3 invalid config or
    /// parameters, 4 unwritable output directory, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::UnknownExperiment => 2,
            ErrorKind::InvalidConfig => 3,
            ErrorKind::Unwritable => 4,
            ErrorKind::Other => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::InvalidParameter { .. }
            | Error::LengthMismatch { .. }
            | Error::SizeGuard(_)
            | Error::PilotOutOfRange(_)
            | Error::PilotOverlap(..)
            | Error::OffGridDelay { .. }
            | Error::Empty => ErrorKind::InvalidConfig,
            _ => ErrorKind::Other,
        };
        RunError::new(kind, e.to_string())
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub trials: Option<usize>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub params: BTreeMap<String, Value>,
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            trials: None,
            seed: DEFAULT_SEED,
            output_dir: None,
            params: BTreeMap::new(),
        }
    }

    pub fn from_path(path: &Path) -> RunResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::invalid(format!("cannot read config {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn from_toml_str(text: &str) -> RunResult<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| RunError::invalid(format!("config is not valid TOML: {e}")))?;
        let value = serde_json::to_value(table).map_err(|e| RunError::invalid(e.to_string()))?;
        Self::from_map(value)
    }

    /// Flat JSON object, or a run manifest whose `config` field is one.
    pub fn from_json_str(text: &str) -> RunResult<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| RunError::invalid(format!("config is not valid JSON: {e}")))?;
        match v.get("config") {
            Some(inner) if inner.is_object() => Self::from_map(inner.clone()),
            _ => Self::from_map(v),
        }
    }

    fn from_map(v: Value) -> RunResult<Self> {
        let Value::Object(map) = v else {
            return Err(RunError::invalid("config must be a key/value table"));
        };
        let mut cfg = Self::new("");
        let mut seen_experiment = false;
        for (k, v) in map {
            match k.as_str() {
                "experiment" => {
                    cfg.experiment = v
                        .as_str()
                        .ok_or_else(|| RunError::invalid("`experiment` must be a string"))?
                        .to_string();
                    seen_experiment = true;
                }
                "trials" => {
                    let t = v
                        .as_u64()
                        .filter(|t| *t >= 1)
                        .ok_or_else(|| RunError::invalid("`trials` must be a positive integer"))?;
                    cfg.trials = Some(t as usize);
                }
                "seed" => {
                    cfg.seed = v
                        .as_u64()
                        .ok_or_else(|| RunError::invalid("`seed` must be a nonnegative integer"))?;
                }
                "output_dir" => {
                    let s = v.as_str().ok_or_else(|| RunError::invalid("`output_dir` must be a string"))?;
                    cfg.output_dir = Some(PathBuf::from(s));
                }
                _ => {
                    cfg.params.insert(k, v);
                }
            }
        }
        if !seen_experiment {
            return Err(RunError::invalid("config is missing `experiment`"));
        }
        Ok(cfg)
    }
}

/// Typed view of resolved parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Params(BTreeMap<String, Value>);

impl Params {
    pub fn from_pairs(pairs: &[(&str, Value)]) -> Self {
        Self(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
    }

    pub fn map(&self) -> &BTreeMap<String, Value> {
        &self.0
    }

    fn raw(&self, key: &str) -> RunResult<&Value> {
        self.0
            .get(key)
            .ok_or_else(|| RunError::invalid(format!("missing parameter `{key}`")))
    }

    pub fn f64(&self, key: &str) -> RunResult<f64> {
        let v = self.raw(key)?;
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| RunError::invalid(format!("parameter `{key}` must be a number, got {v}")))
    }

    pub fn usize(&self, key: &str) -> RunResult<usize> {
        let v = self.raw(key)?;
        v.as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| RunError::invalid(format!("parameter `{key}` must be a nonnegative integer, got {v}")))
    }

    pub fn str(&self, key: &str) -> RunResult<String> {
        let v = self.raw(key)?;
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| RunError::invalid(format!("parameter `{key}` must be a string, got {v}")))
    }

    fn list(&self, key: &str) -> RunResult<&Vec<Value>> {
        let v = self.raw(key)?;
        match v.as_array() {
            Some(a) if !a.is_empty() => Ok(a),
            _ => Err(RunError::invalid(format!("parameter `{key}` must be a nonempty list, got {v}"))),
        }
    }

    pub fn f64_list(&self, key: &str) -> RunResult<Vec<f64>> {
        self.list(key)?
            .iter()
            .map(|v| {
                v.as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| RunError::invalid(format!("parameter `{key}` must hold numbers, got {v}")))
            })
            .collect()
    }

    pub fn usize_list(&self, key: &str) -> RunResult<Vec<usize>> {
        self.list(key)?
            .iter()
            .map(|v| {
                v.as_u64()
                    .map(|x| x as usize)
                    .ok_or_else(|| RunError::invalid(format!("parameter `{key}` must hold nonnegative integers, got {v}")))
            })
            .collect()
    }

    pub fn str_list(&self, key: &str) -> RunResult<Vec<String>> {
        self.list(key)?
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| RunError::invalid(format!("parameter `{key}` must hold strings, got {v}")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::F(v) => write!(f, "{v}"),
            Cell::I(v) => write!(f, "{v}"),
            Cell::S(s) => f.write_str(s),
        }
    }
}

/// One CSV file worth of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of column `name`.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| match &r[i] {
                Cell::F(v) => Some(*v),
                Cell::I(v) => Some(*v as f64),
                Cell::S(_) => None,
            })
            .collect()
    }

    fn check_finite(&self) -> RunResult<()> {
        for row in &self.rows {
            for c in row {
                if let Cell::F(v) = c {
                    if !v.is_finite() {
                        return Err(RunError::new(
                            ErrorKind::Other,
                            format!("non-finite value in table `{}`", self.name),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Registered experiment.
pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    /// The plot family the output feeds.
    pub figure: &'static str,
    pub default_trials: usize,
    pub defaults: fn() -> Params,
    /// `(file stem, column description)` for each output table.
    pub outputs: &'static [(&'static str, &'static str)],
    pub run: fn(&RunContext) -> RunResult<Vec<Table>>,
}

impl Experiment {
    pub fn describe(&self) -> String {
        let mut s = format!("{}\n  {}\n  plot: {}\n  default trials: {}\n  parameters:\n", self.name, self.summary, self.figure, self.default_trials);
        for (k, v) in (self.defaults)().map() {
            s.push_str(&format!("    {k} = {v}\n"));
        }
        s.push_str("  outputs:\n");
        for (f, cols) in self.outputs {
            s.push_str(&format!("    {f}.csv: {cols}\n"));
        }
        s
    }
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name).collect()
}

/// Inputs handed to an experiment body.
pub struct RunContext {
    pub params: Params,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub experiment: &'static str,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: Params,
}

impl ResolvedConfig {
    /// Flat echo of the run, readable back as a config.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("experiment".into(), json!(self.experiment));
        m.insert("trials".into(), json!(self.trials));
        m.insert("seed".into(), json!(self.seed));
        m.insert("output_dir".into(), json!(self.output_dir.to_string_lossy()));
        for (k, v) in self.params.map() {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }
}

/// Merges `cfg` onto the experiment defaults. Unknown parameter names and
/// values whose JSON type differs from the default are rejected.
pub fn resolve(cfg: &ExperimentConfig, default_output: &Path) -> RunResult<ResolvedConfig> {
    let exp = find(&cfg.experiment).ok_or_else(|| {
        RunError::new(
            ErrorKind::UnknownExperiment,
            format!("unknown experiment `{}`; known: {}", cfg.experiment, names().join(", ")),
        )
    })?;
    let mut params = (exp.defaults)().0;
    for (k, v) in &cfg.params {
        let Some(d) = params.get(k) else {
            return Err(RunError::invalid(format!("unknown parameter `{k}` for `{}`", exp.name)));
        };
        if !same_shape(d, v) {
            return Err(RunError::invalid(format!("parameter `{k}` expects a value like {d}, got {v}")));
        }
        params.insert(k.clone(), v.clone());
    }
    Ok(ResolvedConfig {
        experiment: exp.name,
        trials: cfg.trials.unwrap_or(exp.default_trials),
        seed: cfg.seed,
        output_dir: cfg.output_dir.clone().unwrap_or_else(|| default_output.to_path_buf()),
        params: Params(params),
    })
}

fn same_shape(default: &Value, v: &Value) -> bool {
    match (default, v) {
        (Value::Number(_), Value::Number(_)) => true,
        (Value::String(_), Value::String(_)) => true,
        (Value::Bool(_), Value::Bool(_)) => true,
        (Value::Array(a), Value::Array(b)) => match (a.first(), b.first()) {
            (Some(x), Some(y)) => same_shape(x, y) && b.iter().all(|z| same_shape(x, z)),
            (_, None) => false,
            (None, _) => true,
        },
        _ => false,
    }
}

/// Executes a resolved config without touching the filesystem.
pub fn execute(cfg: &ResolvedConfig, workers: Option<usize>) -> RunResult<Vec<Table>> {
    let exp = find(cfg.experiment).ok_or_else(|| RunError::new(ErrorKind::UnknownExperiment, cfg.experiment))?;
    let ctx = RunContext {
        params: cfg.params.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
    };
    let tables = crate::par::with_workers(workers, || (exp.run)(&ctx))?;
    for t in &tables {
        t.check_finite()?;
    }
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn unwritable(path: &Path, e: std::io::Error) -> RunError {
    RunError::new(ErrorKind::Unwritable, format!("cannot write {}: {e}", path.display()))
}

/// Writes `table` as CSV under a `#`-prefixed metadata header.
pub fn write_table(dir: &Path, table: &Table, cfg: &ResolvedConfig) -> RunResult<PathBuf> {
    let path = dir.join(format!("{}.csv", table.name));
    let mut buf = Vec::new();
    writeln!(buf, "# experiment: {}", cfg.experiment).ok();
    writeln!(buf, "# seed: {}", cfg.seed).ok();
    writeln!(buf, "# version: {VERSION}").ok();
    let mut echo = cfg.to_json();
    if let Some(m) = echo.as_object_mut() {
        m.remove("output_dir");
    }
    writeln!(buf, "# config: {echo}").ok();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&table.columns)
            .map_err(|e| RunError::new(ErrorKind::Other, e.to_string()))?;
        for row in &table.rows {
            w.write_record(row.iter().map(|c| c.to_string()))
                .map_err(|e| RunError::new(ErrorKind::Other, e.to_string()))?;
        }
        w.flush().map_err(|e| unwritable(&path, e))?;
    }
    fs::write(&path, buf).map_err(|e| unwritable(&path, e))?;
    Ok(path)
}

/// Resolves, runs and writes one experiment.
pub fn run(cfg: &ExperimentConfig, default_output: &Path, workers: Option<usize>) -> RunResult<RunOutput> {
    let resolved = resolve(cfg, default_output)?;
    fs::create_dir_all(&resolved.output_dir).map_err(|e| unwritable(&resolved.output_dir, e))?;
    let probe = resolved.output_dir.join(".isac-write-probe");
    fs::write(&probe, b"").map_err(|e| unwritable(&resolved.output_dir, e))?;
    let _ = fs::remove_file(&probe);

    let tables = execute(&resolved, workers)?;
    let mut files = Vec::new();
    for t in &tables {
        files.push(write_table(&resolved.output_dir, t, &resolved)?);
    }
    let manifest = json!({
        "experiment": resolved.experiment,
        "seed": resolved.seed,
        "trials": resolved.trials,
        "version": VERSION,
        "config": resolved.to_json(),
        "files": tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
    });
    let mpath = resolved.output_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| RunError::new(ErrorKind::Other, e.to_string()))?;
    fs::write(&mpath, text + "\n").map_err(|e| unwritable(&mpath, e))?;
    Ok(RunOutput { files, manifest: mpath })
}
