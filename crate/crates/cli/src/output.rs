//! Versioned JSON, CSV tables and plot columns, written atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_MAJOR: u32 = 1;
pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: String,
    pub kind: String,
    pub data: T,
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn to_json<T: Serialize>(kind: &str, data: &T) -> Result<Vec<u8>> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION.to_string(),
        kind: kind.to_string(),
        data,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parses an envelope, refusing unknown major versions.
pub fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<Envelope<T>> {
    let env: Envelope<T> = serde_json::from_slice(bytes)?;
    let major = env.schema_version.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(SCHEMA_MAJOR) {
        return Err(CliError::SchemaVersion {
            found: env.schema_version,
            expected: SCHEMA_MAJOR,
        });
    }
    Ok(env)
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, data: &T) -> Result<()> {
    write_atomic(path, &to_json(kind, data)?)
}

/// CSV with a header row; an empty row set still yields the header.
pub fn csv_bytes<R: Serialize>(header: &[&str], rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))
}

pub fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// Whitespace-separated columns with a `#` header line.
pub fn write_plot(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut s = format!("# {}\n", columns.join(" "));
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// Paths written by one command, in the order they were produced.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn json<T: Serialize>(&mut self, dir: &Path, name: &str, kind: &str, data: &T) -> Result<()> {
        let p = dir.join(name);
        write_json(&p, kind, data)?;
        self.files.push(p);
        Ok(())
    }

    pub fn csv<R: Serialize>(&mut self, dir: &Path, name: &str, header: &[&str], rows: &[R]) -> Result<()> {
        let p = dir.join(name);
        write_csv(&p, header, rows)?;
        self.files.push(p);
        Ok(())
    }

    pub fn plot(&mut self, dir: &Path, name: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let p = dir.join(name);
        write_plot(&p, columns, rows)?;
        self.files.push(p);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("a.json");
        write_json(&path, "probe", &[1.5, 2.0]).unwrap();
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("a.json")]);
        let env: Envelope<Vec<f64>> = from_json(&fs::read(&path).unwrap()).unwrap();
        assert_eq!(env.data, vec![1.5, 2.0]);
        assert_eq!(env.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn plot_uses_shortest_round_trip_floats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.dat");
        write_plot(&path, &["x", "y"], &[vec![0.1, 1e-20], vec![2.0, -0.3]]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "# x y\n0.1 1e-20\n2.0 -0.3\n");
    }

    #[test]
    fn minor_versions_are_accepted() {
        let text = r#"{"schema_version": "1.7", "kind": "x", "data": 3}"#;
        assert_eq!(from_json::<u32>(text.as_bytes()).unwrap().data, 3);
        let bad = r#"{"schema_version": "one", "kind": "x", "data": 3}"#;
        assert!(matches!(from_json::<u32>(bad.as_bytes()), Err(CliError::SchemaVersion { .. })));
    }
}
