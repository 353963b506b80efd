//! Columnar output with a JSON metadata sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};

/// Bumped whenever a command's column set or order changes.
pub const COLUMNS_VERSION: u32 = 1;

pub const HERALDED_DEFINITION: &str =
    "success_probability = mean over basis states of the transmitted photon probability; \
     heralded_fidelity = fidelity / success_probability";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Shortest representation that parses back to the same value.
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x)
                .map(serde_json::Value::Number)
                .unwrap_or_else(|| serde_json::Value::String(format!("{x:?}"))),
            Cell::Int(i) => serde_json::Value::from(*i),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
        }
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

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::Write(e.into_error()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| serde_json::Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        serde_json::json!({ "columns": self.columns, "rows": rows })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub bandwidth_rad_per_s: f64,
    pub half_width_bandwidths: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub xi_scan_points: usize,
    pub xi_tolerance_kappa: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            xi_scan_points: cphase_core::fidelity::XI_SCAN_POINTS,
            xi_tolerance_kappa: cphase_core::fidelity::XI_TOLERANCE_KAPPA,
        }
    }
}

/// Provenance attached to every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub columns_version: u32,
    pub config: RunConfig,
    pub seed: u64,
    pub rng: &'static str,
    pub grid: GridInfo,
    pub tolerances: Tolerances,
    pub heralded_definition: &'static str,
    pub internal_units: &'static str,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl Metadata {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Metadata {
            tool: "cphase",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            columns_version: COLUMNS_VERSION,
            config: config.clone(),
            seed: config.mc.seed,
            rng: cphase_core::decoupling::RNG_ALGORITHM,
            grid: GridInfo {
                bandwidth_rad_per_s: config.bandwidth(),
                half_width_bandwidths: config.packet.grid_half_width,
                points: config.packet.grid_points,
            },
            tolerances: Tolerances::default(),
            heralded_definition: HERALDED_DEFINITION,
            internal_units: "rad/s, s",
            extra: serde_json::Value::Null,
        }
    }

    pub fn with_extra(mut self, extra: serde_json::Value) -> Self {
        self.extra = extra;
        self
    }
}

/// `out.csv` -> `out.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

fn write_bytes(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => Ok(stdout.write_all(bytes)?),
    }
}

fn pretty(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// CSV goes to `out` with metadata in the sidecar; JSON bundles both.
pub fn emit_table(table: &Table, meta: &Metadata, format: Format, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match format {
        Format::Csv => {
            write_bytes(out, &table.to_csv()?, stdout)?;
            if let Some(p) = out {
                write_bytes(Some(&sidecar_path(p)), &pretty(meta)?, stdout)?;
            }
        }
        Format::Json => {
            let doc = serde_json::json!({ "metadata": meta, "data": table.to_json() });
            write_bytes(out, &pretty(&doc)?, stdout)?;
        }
    }
    Ok(())
}

/// Scalar reports are JSON regardless of the requested table format.
pub fn emit_report(report: &impl Serialize, meta: &Metadata, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let doc = serde_json::json!({ "metadata": meta, "report": report });
    write_bytes(out, &pretty(&doc)?, stdout)
}
