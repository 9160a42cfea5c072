//! Field checkpoints: a JSON header next to a little-endian binary sidecar.
//!
//! Sidecar layout: the 8-byte magic `PNSL1\0\0\0`, a `u64` value count, then
//! that many `f64` values in row-major order (`i` fastest). Node tags are
//! not stored; they are recomputed from the domain and `epsilon`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::GridField;
use crate::geometry::{classify_grid, DomainSpec, GeometryError, Grid};
use crate::solver::Dirichlet;

pub const MAGIC: &str = "PNSL1";
const SIDECAR_MAGIC: [u8; 8] = *b"PNSL1\0\0\0";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed checkpoint header {path}: {msg}")]
    Header { path: PathBuf, msg: String },
    #[error("corrupt sidecar {path}: {msg}")]
    Sidecar { path: PathBuf, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub magic: String,
    pub grid: Grid,
    pub p: f64,
    pub n: usize,
    pub domain: DomainSpec,
    pub epsilon: f64,
    pub iterations: usize,
    pub rhs: f64,
    pub dirichlet: Dirichlet,
    /// Sidecar file name, relative to the header's directory.
    pub values_file: String,
    pub value_count: usize,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub field: GridField,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io { path: path.to_path_buf(), source }
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Writes `<stem>.json` and `<stem>.bin` into `dir`; returns the header path.
#[allow(clippy::too_many_arguments)]
pub fn save(
    dir: &Path,
    stem: &str,
    field: &GridField,
    domain: &DomainSpec,
    p: f64,
    n: usize,
    epsilon: f64,
    iterations: usize,
    rhs: f64,
    dirichlet: &Dirichlet,
) -> Result<PathBuf, CheckpointError> {
    let bin_name = format!("{stem}.bin");
    let bin_path = dir.join(&bin_name);
    let mut bytes = Vec::with_capacity(16 + 8 * field.values.len());
    bytes.extend_from_slice(&SIDECAR_MAGIC);
    bytes.extend_from_slice(&(field.values.len() as u64).to_le_bytes());
    for v in &field.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(&bin_path, &bytes).map_err(io_err(&bin_path))?;

    let header = CheckpointHeader {
        magic: MAGIC.to_string(),
        grid: field.grid,
        p,
        n,
        domain: domain.clone(),
        epsilon,
        iterations,
        rhs,
        dirichlet: dirichlet.clone(),
        values_file: bin_name,
        value_count: field.values.len(),
    };
    let json_path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    write_atomic(&json_path, text.as_bytes()).map_err(io_err(&json_path))?;
    Ok(json_path)
}

pub fn load(header_path: &Path) -> Result<Checkpoint, CheckpointError> {
    let text = fs::read_to_string(header_path).map_err(io_err(header_path))?;
    let bad_header = |msg: String| CheckpointError::Header { path: header_path.to_path_buf(), msg };
    let header: CheckpointHeader = serde_json::from_str(&text).map_err(|e| bad_header(e.to_string()))?;
    if header.magic != MAGIC {
        return Err(bad_header(format!("magic {:?}, expected {MAGIC:?}", header.magic)));
    }
    if header.value_count != header.grid.len() {
        return Err(bad_header(format!("value_count {} does not match a {}x{} grid", header.value_count, header.grid.nx, header.grid.ny)));
    }

    let bin_path = header_path.parent().unwrap_or(Path::new(".")).join(&header.values_file);
    let bytes = fs::read(&bin_path).map_err(io_err(&bin_path))?;
    let bad_bin = |msg: String| CheckpointError::Sidecar { path: bin_path.clone(), msg };
    if bytes.len() < 16 || bytes[..8] != SIDECAR_MAGIC {
        return Err(bad_bin("bad magic".into()));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if count != header.value_count {
        return Err(bad_bin(format!("holds {count} values, header says {}", header.value_count)));
    }
    let body = &bytes[16..];
    if body.len() != 8 * count {
        return Err(bad_bin(format!("expected {} payload bytes, found {}", 8 * count, body.len())));
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad_bin("non-finite value".into()));
    }

    let class = classify_grid(&header.domain, &header.grid, header.epsilon)?;
    let field = GridField::new(header.grid, values, class.tags);
    Ok(Checkpoint { header, field })
}
