//! Bit-exact output: CSV numbers at 17 significant digits, key=value
//! reports with a JSON sibling, and atomic file replacement.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fluxshoot::model::ShootState;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "f", "fp", "fpp"];

/// 17 significant digits in scientific notation; enough to round-trip any
/// `f64`, and independent of locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Write to a temporary file next to `path`, then rename over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("`out` has no file name: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn trajectory_csv(states: &[ShootState]) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = states
        .iter()
        .map(|s| vec![num(s.t), num(s.f), num(s.fp), num(s.fpp)])
        .collect();
    csv_bytes(&TRAJECTORY_HEADER, &rows)
}

pub fn parse_trajectory_csv(bytes: &[u8]) -> Result<Vec<ShootState>, CliError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| CliError::Runtime(e.to_string()))?;
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(CliError::Runtime(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::Runtime(e.to_string()))?;
        let mut x = [0.0; 4];
        for (i, field) in rec.iter().enumerate().take(4) {
            x[i] = field
                .parse()
                .map_err(|_| CliError::Runtime(format!("bad number `{field}`")))?;
        }
        out.push(ShootState::new(x[0], x[1], x[2], x[3]));
    }
    Ok(out)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<ShootState>, CliError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    parse_trajectory_csv(&bytes)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        Value::Null => {}
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Nested fields become dotted keys and nulls are left out. Numbers use
/// the shortest form that round-trips, so `0.4` prints as `beta=0.4`.
pub fn key_values<T: Serialize>(report: &T) -> Result<String, CliError> {
    let value = serde_json::to_value(report).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut pairs = Vec::new();
    flatten("", &value, &mut pairs);
    Ok(pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect())
}

/// `report.txt` pairs with `report.json`.
pub fn json_sibling(path: &Path) -> Result<PathBuf, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        return Err(CliError::Config(format!(
            "`out` must not end in .json; the JSON report is written beside it: {}",
            path.display()
        )));
    }
    Ok(path.with_extension("json"))
}

/// Print the key=value form and write it plus the JSON sibling.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<(), CliError> {
    let json_path = json_sibling(path)?;
    let text = key_values(report)?;
    let mut json =
        serde_json::to_vec_pretty(report).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push(b'\n');
    write_atomic(path, text.as_bytes())?;
    write_atomic(&json_path, &json)?;
    print!("{text}");
    Ok(())
}
