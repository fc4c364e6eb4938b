//! CSV tables (header row, `.` decimals, shortest round-trip float text).

use std::path::Path;

use mvope::simulation::{CdfRow, CoverageRow, MassRow, ReductionRow};

use crate::CliError;

pub const COVERAGE_HEADER: [&str; 7] = [
    "kind",
    "method",
    "target_sigma",
    "n",
    "coverage",
    "mean_ci_width",
    "mean_ess",
];
pub const REDUCTION_HEADER: [&str; 5] =
    ["kind", "method", "target_sigma", "n_star", "ratio_vs_clt"];
pub const CDF_HEADER: [&str; 4] = ["family", "d", "normalised_distance", "cdf"];
pub const MASS_HEADER: [&str; 5] = [
    "family",
    "d",
    "epsilon",
    "empirical_fraction",
    "analytic_fraction",
];

pub const NOT_REACHED: &str = "not reached";

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("csv: {e}"))
}

fn to_csv<const K: usize>(
    header: [&str; K],
    records: impl Iterator<Item = [String; K]>,
) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

pub fn coverage_csv(rows: &[CoverageRow]) -> Result<String, CliError> {
    to_csv(
        COVERAGE_HEADER,
        rows.iter().map(|r| {
            [
                r.kind.name().to_string(),
                r.method.name().to_string(),
                r.target_sigma.to_string(),
                r.n.to_string(),
                r.coverage.to_string(),
                r.mean_ci_width.to_string(),
                r.mean_ess.to_string(),
            ]
        }),
    )
}

pub fn reduction_csv(rows: &[ReductionRow]) -> Result<String, CliError> {
    to_csv(
        REDUCTION_HEADER,
        rows.iter().map(|r| {
            [
                r.kind.name().to_string(),
                r.method.name().to_string(),
                r.target_sigma.to_string(),
                r.n_star
                    .map_or_else(|| NOT_REACHED.to_string(), |n| n.to_string()),
                r.ratio_vs_clt
                    .map_or_else(|| NOT_REACHED.to_string(), |x| x.to_string()),
            ]
        }),
    )
}

pub fn cdf_csv(rows: &[CdfRow]) -> Result<String, CliError> {
    to_csv(
        CDF_HEADER,
        rows.iter().map(|r| {
            [
                r.family.name().to_string(),
                r.d.to_string(),
                r.normalised_distance.to_string(),
                r.cdf.to_string(),
            ]
        }),
    )
}

pub fn mass_csv(rows: &[MassRow]) -> Result<String, CliError> {
    to_csv(
        MASS_HEADER,
        rows.iter().map(|r| {
            [
                r.family.name().to_string(),
                r.d.to_string(),
                r.epsilon.to_string(),
                r.empirical_fraction.to_string(),
                r.analytic_fraction.to_string(),
            ]
        }),
    )
}

fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    i: usize,
    line: u64,
) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(i).ok_or_else(|| {
        CliError::Validation(format!(
            "line {line}: missing column {}",
            COVERAGE_HEADER[i]
        ))
    })?;
    raw.trim().parse().map_err(|e| {
        CliError::Validation(format!("line {line}: column {}: {e}", COVERAGE_HEADER[i]))
    })
}

/// Parses a table written by [`coverage_csv`].
pub fn read_coverage_csv(path: &Path) -> Result<Vec<CoverageRow>, CliError> {
    let file =
        std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != COVERAGE_HEADER {
        return Err(CliError::Validation(format!(
            "{}: expected header {}",
            path.display(),
            COVERAGE_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(csv_err)?;
        rows.push(CoverageRow {
            kind: field(&record, 0, line)?,
            method: field(&record, 1, line)?,
            target_sigma: field(&record, 2, line)?,
            n: field(&record, 3, line)?,
            coverage: field(&record, 4, line)?,
            mean_ci_width: field(&record, 5, line)?,
            mean_ess: field(&record, 6, line)?,
        });
    }
    Ok(rows)
}
