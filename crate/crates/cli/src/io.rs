//! Feature-matrix files and atomic JSON output.
//!
//! Two feature formats are read:
//!
//! * CSV: a `q,k` header line, q lines of k floats, one line of q importances.
//! * Binary: `SUMF`, version byte `1`, little-endian `u32` q and k, q·k `f32`
//!   features row-major, then q `f32` importances.

use std::fs;
use std::io::Write;
use std::path::Path;

use keyshot_core::FeatureMatrix;
use ndarray::Array2;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"SUMF";
pub const BINARY_VERSION: u8 = 1;
const HEADER_LEN: usize = 13;

pub fn load_features(path: &Path) -> CliResult<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        parse_binary(path, &bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| CliError::parse(path, "byte 0", e))?;
        parse_csv(path, &text)
    }
}

fn parse_binary(path: &Path, bytes: &[u8]) -> CliResult<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(CliError::parse(path, format!("offset {}", bytes.len()), "truncated header"));
    }
    if bytes[4] != BINARY_VERSION {
        return Err(CliError::parse(path, "offset 4", format!("unsupported version {}", bytes[4])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (q, k) = (u32_at(5), u32_at(9));
    let expected = q
        .checked_mul(k)
        .and_then(|n| n.checked_add(q))
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| CliError::parse(path, "offset 5", "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(CliError::parse(
            path,
            format!("offset {}", bytes.len().min(expected)),
            format!("expected {expected} bytes for q={q}, k={k}, found {}", bytes.len()),
        ));
    }
    let floats: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    if let Some(i) = floats.iter().position(|v| !v.is_finite()) {
        return Err(CliError::parse(path, format!("offset {}", HEADER_LEN + 4 * i), "non-finite value"));
    }
    let (feat, imp) = floats.split_at(q * k);
    build(path, q, k, feat.to_vec(), imp.to_vec())
}

fn parse_csv(path: &Path, text: &str) -> CliResult<FeatureMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| CliError::parse(path, "line 1", "empty file"))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::parse(path, format!("line {hl}"), format!("bad header: {e}")))?;
    let [q, k] = dims[..] else {
        return Err(CliError::parse(path, format!("line {hl}"), "header must be `q,k`"));
    };
    let mut row = |want: usize, what: &str| -> CliResult<Vec<f64>> {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| CliError::parse(path, "end of file", format!("missing {what} row")))?;
        let vals: Vec<f64> = line
            .split(',')
            .enumerate()
            .map(|(c, t)| {
                let v: f64 = t.trim().parse().map_err(|e| {
                    CliError::parse(path, format!("line {ln}, column {}", c + 1), format!("{e}"))
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CliError::parse(path, format!("line {ln}, column {}", c + 1), "non-finite value"))
                }
            })
            .collect::<CliResult<_>>()?;
        if vals.len() != want {
            return Err(CliError::parse(
                path,
                format!("line {ln}"),
                format!("expected {want} values in {what} row, found {}", vals.len()),
            ));
        }
        Ok(vals)
    };
    let mut feat = Vec::with_capacity(q * k);
    for _ in 0..q {
        feat.extend(row(k, "feature")?);
    }
    let imp = row(q, "importance")?;
    if let Some((ln, _)) = lines.next() {
        return Err(CliError::parse(path, format!("line {ln}"), "unexpected trailing data"));
    }
    build(path, q, k, feat, imp)
}

fn build(path: &Path, q: usize, k: usize, feat: Vec<f64>, imp: Vec<f64>) -> CliResult<FeatureMatrix> {
    if q == 0 || k == 0 {
        return Err(CliError::invariant(path, format!("q and k must be >= 1, got q={q}, k={k}")));
    }
    let features = Array2::from_shape_vec((q, k), feat).expect("checked length");
    FeatureMatrix::new(features, imp).map_err(|e| CliError::invariant(path, e))
}

pub fn encode_binary(m: &FeatureMatrix) -> Vec<u8> {
    let (q, k) = (m.num_shots(), m.dims());
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * (q * k + q));
    out.extend_from_slice(MAGIC);
    out.push(BINARY_VERSION);
    out.extend_from_slice(&(q as u32).to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    for v in m.features().iter().chain(m.importance()) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn encode_csv(m: &FeatureMatrix) -> String {
    let join = |vals: &mut dyn Iterator<Item = &f64>| vals.map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    let mut out = format!("{},{}\n", m.num_shots(), m.dims());
    for row in m.features().rows() {
        out.push_str(&join(&mut row.iter()));
        out.push('\n');
    }
    out.push_str(&join(&mut m.importance().iter()));
    out.push('\n');
    out
}

pub fn save_features_binary(path: &Path, m: &FeatureMatrix) -> CliResult<()> {
    write_atomic(path, &encode_binary(m))
}

pub fn save_features_csv(path: &Path, m: &FeatureMatrix) -> CliResult<()> {
    write_atomic(path, encode_csv(m).as_bytes())
}

/// Writes to a temporary file in the target directory, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_atomic(path, to_json(value).as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::parse(path, format!("line {}, column {}", e.line(), e.column()), e))
}
