//! CSV and JSON trajectory files. Both start with the program version, the
//! resolved config and its SHA-256 digest, which is enough to rerun them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use swarmsir_core::swarm::SimConfig;
use swarmsir_core::{SimFrame, SimTrajectory};

use crate::error::{CliError, Result};
use crate::VERSION;

pub const CSV_HEADER: [&str; 7] = ["step", "S", "I", "R", "V", "active_constraints", "control_deviation"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    /// `.json` means JSON; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ExportFormat::Json,
            _ => ExportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub version: String,
    pub config: SimConfig,
    pub config_sha256: String,
}

impl ExportMeta {
    pub fn new(config: &SimConfig) -> Self {
        Self {
            version: VERSION.to_string(),
            config: config.clone(),
            config_sha256: config_digest(config),
        }
    }
}

#[derive(Serialize)]
struct JsonExportRef<'a> {
    meta: &'a ExportMeta,
    frames: &'a [SimFrame],
}

#[derive(Debug, Deserialize)]
struct JsonExport {
    meta: ExportMeta,
    frames: Vec<SimFrame>,
}

pub fn config_json(config: &SimConfig) -> String {
    serde_json::to_string(config).expect("configs always serialize")
}

/// Hex SHA-256 of the compact JSON rendering of `config`.
pub fn config_digest(config: &SimConfig) -> String {
    hex::encode(Sha256::digest(config_json(config).as_bytes()))
}

/// Writes the `#` preamble lines shared by the CSV outputs.
pub fn write_preamble(out: &mut (impl Write + ?Sized), meta: &ExportMeta) -> std::io::Result<()> {
    writeln!(out, "# swarmsir {}", meta.version)?;
    writeln!(out, "# config {}", config_json(&meta.config))?;
    writeln!(out, "# config_sha256 {}", meta.config_sha256)
}

pub fn write_csv(out: impl Write, traj: &SimTrajectory) -> std::io::Result<()> {
    let mut out = out;
    write_preamble(&mut out, &ExportMeta::new(&traj.config))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for f in &traj.frames {
        let c = f.counts;
        w.write_record([
            f.step.to_string(),
            c.s.to_string(),
            c.i.to_string(),
            c.r.to_string(),
            c.v.to_string(),
            f.active_constraints.to_string(),
            f.control_deviation.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_json(out: impl Write, traj: &SimTrajectory) -> std::io::Result<()> {
    let meta = ExportMeta::new(&traj.config);
    let doc = JsonExportRef {
        meta: &meta,
        frames: &traj.frames,
    };
    let mut out = out;
    serde_json::to_writer(&mut out, &doc)?;
    writeln!(out)
}

pub fn export_trajectory(traj: &SimTrajectory, path: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
    let path = path.as_ref();
    let io = |e| CliError::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    match format {
        ExportFormat::Csv => write_csv(&mut out, traj),
        ExportFormat::Json => write_json(&mut out, traj),
    }
    .and_then(|()| out.flush())
    .map_err(io)
}

/// Reads a JSON export back; the embedded digest must match its config.
pub fn import_json(path: impl AsRef<Path>) -> Result<(ExportMeta, Vec<SimFrame>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: JsonExport = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if config_digest(&doc.meta.config) != doc.meta.config_sha256 {
        return Err(CliError::Validation {
            field: "meta.config_sha256".into(),
            reason: "does not match the embedded config".into(),
        });
    }
    Ok((doc.meta, doc.frames))
}
