//! On-disk dataset format: a JSON meta file plus JSON-lines samples.
//!
//! Each data line is `{"action":[...],"reward":r,"logging_density":p}`.
//! Reals are written with 17 significant digits so a write/read round trip
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{LoggedDataset, LoggedSample};
use crate::error::{Error, Result};
use crate::policy::{Action, Policy};

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub d: usize,
    #[serde(default)]
    pub logging_policy: Option<Policy<f64>>,
    #[serde(default)]
    pub created_by: String,
    pub schema_version: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleLine {
    action: Vec<f64>,
    reward: f64,
    logging_density: f64,
}

/// Formats a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_meta(meta_path: &Path) -> Result<DatasetMeta> {
    let text = fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| parse_err(meta_path, e.line(), e.to_string()))?;
    // check the version before the rest of the schema
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_i64)
        .ok_or_else(|| parse_err(meta_path, 1, "missing integer schema_version"))?;
    if version != SCHEMA_VERSION {
        return Err(Error::Schema {
            path: meta_path.to_path_buf(),
            version,
            expected: SCHEMA_VERSION,
        });
    }
    let meta: DatasetMeta =
        serde_json::from_value(value).map_err(|e| parse_err(meta_path, 1, e.to_string()))?;
    if let Some(p) = &meta.logging_policy {
        p.validate()
            .map_err(|e| parse_err(meta_path, 1, e.to_string()))?;
    }
    Ok(meta)
}

/// Reads and validates a dataset, including the propensity consistency check
/// when the meta file declares a logging policy.
pub fn read_dataset(data_path: &Path, meta_path: &Path) -> Result<LoggedDataset<f64>> {
    let meta = read_meta(meta_path)?;
    let file = fs::File::open(data_path).map_err(|e| Error::io(data_path, e))?;
    let mut samples = Vec::new();
    let mut line_numbers = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(data_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: SampleLine =
            serde_json::from_str(&line).map_err(|e| parse_err(data_path, lineno, e.to_string()))?;
        if raw.action.len() != meta.d {
            return Err(parse_err(
                data_path,
                lineno,
                format!(
                    "action has {} entries, meta declares d = {}",
                    raw.action.len(),
                    meta.d
                ),
            ));
        }
        if !(raw.logging_density > 0.0) || !raw.logging_density.is_finite() {
            return Err(parse_err(
                data_path,
                lineno,
                format!(
                    "logging_density must be positive and finite, got {}",
                    raw.logging_density
                ),
            ));
        }
        if !raw.reward.is_finite() {
            return Err(parse_err(data_path, lineno, "reward must be finite"));
        }
        let action =
            Action::new(raw.action).map_err(|e| parse_err(data_path, lineno, e.to_string()))?;
        samples.push(LoggedSample::new(action, raw.reward, raw.logging_density));
        line_numbers.push(lineno);
    }
    LoggedDataset::new(meta.d, samples, meta.logging_policy).map_err(|e| match e {
        Error::PropensityMismatch { index, .. } | Error::NonPositiveDensity { index, .. } => {
            parse_err(data_path, line_numbers[index], e.to_string())
        }
        other => other,
    })
}

fn sample_line(s: &LoggedSample<f64>) -> String {
    let mut out = String::from("{\"action\":[");
    for (k, x) in s.action.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&format_real(*x));
    }
    let _ = write!(
        out,
        "],\"reward\":{},\"logging_density\":{}}}",
        format_real(s.reward),
        format_real(s.logging_density)
    );
    out
}

pub fn write_dataset_with(
    dataset: &LoggedDataset<f64>,
    data_path: &Path,
    meta_path: &Path,
    created_by: &str,
) -> Result<()> {
    let meta = DatasetMeta {
        d: dataset.dim(),
        logging_policy: dataset.logging_policy().cloned(),
        created_by: created_by.to_string(),
        schema_version: SCHEMA_VERSION,
    };
    let mut meta_text =
        serde_json::to_string_pretty(&meta).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    meta_text.push('\n');
    fs::write(meta_path, meta_text).map_err(|e| Error::io(meta_path, e))?;

    let file = fs::File::create(data_path).map_err(|e| Error::io(data_path, e))?;
    let mut w = BufWriter::new(file);
    for s in dataset.samples() {
        writeln!(w, "{}", sample_line(s)).map_err(|e| Error::io(data_path, e))?;
    }
    w.flush().map_err(|e| Error::io(data_path, e))
}

pub fn write_dataset(
    dataset: &LoggedDataset<f64>,
    data_path: &Path,
    meta_path: &Path,
) -> Result<()> {
    write_dataset_with(
        dataset,
        data_path,
        meta_path,
        concat!("mvope ", env!("CARGO_PKG_VERSION")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use crate::simulation::make_coverage_dataset;

    fn paths(dir: &tempfile::TempDir) -> (std::path::PathBuf, std::path::PathBuf) {
        (dir.path().join("data.jsonl"), dir.path().join("meta.json"))
    }

    fn write_raw(
        dir: &tempfile::TempDir,
        meta: &str,
        data: &str,
    ) -> (std::path::PathBuf, std::path::PathBuf) {
        let (d, m) = paths(dir);
        fs::write(&m, meta).unwrap();
        fs::write(&d, data).unwrap();
        (d, m)
    }

    const META1: &str = r#"{"d":1,"created_by":"test","schema_version":1}"#;

    #[test]
    fn round_trip_is_identity_and_bytes_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (d, m) = paths(&dir);
        let ds = make_coverage_dataset(RngSeed::new(4, 2), 300, 5).unwrap();
        write_dataset(&ds, &d, &m).unwrap();
        let first = fs::read(&d).unwrap();
        let back = read_dataset(&d, &m).unwrap();
        assert_eq!(back, ds);
        write_dataset(&back, &d, &m).unwrap();
        assert_eq!(fs::read(&d).unwrap(), first);
    }

    #[test]
    fn empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let (d, m) = paths(&dir);
        let ds = LoggedDataset::<f64>::new(2, vec![], None).unwrap();
        write_dataset(&ds, &d, &m).unwrap();
        assert_eq!(fs::read(&d).unwrap().len(), 0);
        let meta = read_meta(&m).unwrap();
        assert_eq!(meta.d, 2);
        assert_eq!(meta.schema_version, 1);
        assert!(read_dataset(&d, &m).unwrap().is_empty());
    }

    #[test]
    fn zero_density_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let data = "{\"action\":[0.2],\"reward\":1,\"logging_density\":0.3}\n{\"action\":[0.1],\"reward\":2,\"logging_density\":0}\n";
        let (d, m) = write_raw(&dir, META1, data);
        match read_dataset(&d, &m).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn dimension_mismatch_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let meta = r#"{"d":2,"created_by":"test","schema_version":1}"#;
        let data = "{\"action\":[0.1,0.2,0.3],\"reward\":2,\"logging_density\":1}\n";
        let (d, m) = write_raw(&dir, meta, data);
        let err = read_dataset(&d, &m).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(err.to_string().contains(":1:"));
    }

    #[test]
    fn malformed_line_reported() {
        let dir = tempfile::tempdir().unwrap();
        let data = "{\"action\":[0.2],\"reward\":1,\"logging_density\":0.3}\n\n{\"action\":[0.1],\"reward\":\n";
        let (d, m) = write_raw(&dir, META1, data);
        assert!(matches!(
            read_dataset(&d, &m).unwrap_err(),
            Error::Parse { line: 3, .. }
        ));
    }

    #[test]
    fn unknown_schema_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let meta = r#"{"d":1,"created_by":"test","schema_version":2}"#;
        let (d, m) = write_raw(&dir, meta, "");
        assert!(matches!(
            read_dataset(&d, &m).unwrap_err(),
            Error::Schema { version: 2, .. }
        ));
    }

    #[test]
    fn inconsistent_propensity_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let meta = r#"{"d":1,"logging_policy":{"type":"uniform_box","low":[-1.0],"high":[1.0]},"created_by":"t","schema_version":1}"#;
        let data = "{\"action\":[0.2],\"reward\":1,\"logging_density\":0.5}\n{\"action\":[0.1],\"reward\":1,\"logging_density\":0.25}\n";
        let (d, m) = write_raw(&dir, meta, data);
        assert!(matches!(
            read_dataset(&d, &m).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let (d, m) = paths(&dir);
        assert!(read_dataset(&d, &m).unwrap_err().is_io());
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
        assert_eq!(format_real(2.0), "2.0000000000000000e0");
    }
}
