//! Suite artifacts: claims, tables, and their CSV/JSON encodings.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA: u32 = 1;

/// One certified claim: passes when `slack >= -tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Claim {
    pub fn at_least(name: impl Into<String>, slack: f64, tolerance: f64) -> Self {
        Claim { name: name.into(), slack, tolerance, pass: slack >= -tolerance }
    }

    /// |error| ≤ bound, reported as slack bound - |error| with zero tolerance.
    pub fn within(name: impl Into<String>, error: f64, bound: f64) -> Self {
        Self::at_least(name, bound - error.abs(), 0.0)
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 0.0 } else { -1.0 }, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(&'static str),
    Empty,
}

impl From<&'static str> for Cell {
    fn from(x: &'static str) -> Self {
        Cell::Text(x)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

/// 17 significant digits, '.' separator; non-finite values spelled inf, -inf, nan.
pub fn format_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => t.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(format_num(*x)),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(t) => json!(t),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Table { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert((*c).to_string(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        Value::Array(rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub dimension: f64,
    pub claims: Vec<Claim>,
    pub tables: Vec<Table>,
}

impl SuiteReport {
    pub fn new(suite: &'static str, dimension: f64) -> Self {
        SuiteReport { suite, dimension, claims: Vec::new(), tables: Vec::new() }
    }

    pub fn pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    fn claims_csv(&self) -> String {
        let mut s = String::from("suite,claim,slack,tolerance,pass\n");
        for c in &self.claims {
            let _ = writeln!(s, "{},{},{},{},{}", self.suite, c.name, format_num(c.slack), format_num(c.tolerance), c.pass);
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let claims: Vec<Value> = self
            .claims
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "slack": Cell::Num(c.slack).json(),
                    "tolerance": c.tolerance,
                    "pass": c.pass,
                })
            })
            .collect();
        let mut tables = Map::new();
        for t in &self.tables {
            tables.insert(t.name.clone(), t.to_json());
        }
        json!({
            "schema": SCHEMA,
            "suite": self.suite,
            "dimension": self.dimension,
            "pass": self.pass(),
            "claims": claims,
            "tables": tables,
        })
    }

    /// Writes the suite artifacts into `dir` and returns their paths.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        match format {
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&self.to_json())?;
                text.push('\n');
                written.push(write_atomic(&dir.join(format!("{}.json", self.suite)), &text)?);
            }
            Format::Csv => {
                written.push(write_atomic(&dir.join(format!("{}_claims.csv", self.suite)), &self.claims_csv())?);
                for t in &self.tables {
                    written.push(write_atomic(&dir.join(format!("{}_{}.csv", self.suite, t.name)), &t.to_csv())?);
                }
            }
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> Result<PathBuf> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(path.to_path_buf())
}

/// One summary row per claim, read back from suite artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub suite: String,
    pub claim: String,
    pub slack: f64,
    pub pass: bool,
}

fn parse_num(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        other => other.parse().unwrap_or(f64::NAN),
    }
}

/// Collects claims from every `<suite>.json` and `<suite>_claims.csv` under `dir`.
pub fn collect_summary(dir: &Path) -> Result<Vec<SummaryRow>> {
    let mut paths: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();
    let mut rows = Vec::new();
    for p in paths {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if name.ends_with("_claims.csv") {
            let text = fs::read_to_string(&p)?;
            for line in text.lines().skip(1) {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 5 {
                    bail!("malformed claims row in {}: {line}", p.display());
                }
                rows.push(SummaryRow { suite: f[0].into(), claim: f[1].into(), slack: parse_num(f[2]), pass: f[4] == "true" });
            }
        } else if name.ends_with(".json") {
            let v: Value = serde_json::from_str(&fs::read_to_string(&p)?)
                .with_context(|| format!("parsing {}", p.display()))?;
            if v.get("schema").and_then(Value::as_u64) != Some(SCHEMA as u64) {
                continue;
            }
            let suite = v["suite"].as_str().unwrap_or_default().to_string();
            for c in v["claims"].as_array().into_iter().flatten() {
                let slack = match &c["slack"] {
                    Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
                    Value::String(s) => parse_num(s),
                    _ => f64::NAN,
                };
                rows.push(SummaryRow {
                    suite: suite.clone(),
                    claim: c["name"].as_str().unwrap_or_default().into(),
                    slack,
                    pass: c["pass"].as_bool().unwrap_or(false),
                });
            }
        }
    }
    if rows.is_empty() {
        bail!("no suite artifacts found in {}", dir.display());
    }
    Ok(rows)
}

/// Human-readable table: suite, claim, worst slack, verdict.
pub fn render_summary(rows: &[SummaryRow]) -> String {
    let w_suite = rows.iter().map(|r| r.suite.len()).max().unwrap_or(5).max(5);
    let w_claim = rows.iter().map(|r| r.claim.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<w_suite$}  {:<w_claim$}  {:>24}  verdict\n", "suite", "claim", "slack");
    for r in rows {
        let verdict = if r.pass { "pass" } else { "FAIL" };
        let _ = writeln!(s, "{:<w_suite$}  {:<w_claim$}  {:>24}  {verdict}", r.suite, r.claim, format_num(r.slack));
    }
    s
}

pub fn summary_rows(reports: &[SuiteReport]) -> Vec<SummaryRow> {
    reports
        .iter()
        .flat_map(|r| {
            r.claims.iter().map(move |c| SummaryRow {
                suite: r.suite.to_string(),
                claim: c.name.clone(),
                slack: c.slack,
                pass: c.pass,
            })
        })
        .collect()
}
