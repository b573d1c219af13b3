//! CSV and JSON report tables.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::trials::TrialReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(BenchError::InvalidConfig(format!("unknown report format {other:?}"))),
        }
    }
}

const COLUMNS: [&str; 9] = [
    "method",
    "budget",
    "trials",
    "mse",
    "bias",
    "empirical_var",
    "mean_predicted_var",
    "runtime_ms",
    "failed",
];

/// Writes rows in the fixed column order; an empty table still gets a header.
pub fn write_report<W: Write>(reports: &[TrialReport], format: ReportFormat, out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(COLUMNS)?;
            for r in reports {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, reports)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn emit_report(reports: &[TrialReport], format: ReportFormat, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_report(reports, format, file)
}

pub fn read_report<R: Read>(input: R, format: ReportFormat) -> Result<Vec<TrialReport>> {
    match format {
        ReportFormat::Csv => {
            let mut r = csv::Reader::from_reader(input);
            let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
            if header != COLUMNS {
                return Err(BenchError::InvalidConfig(format!("unexpected report columns {header:?}")));
            }
            Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
        }
        ReportFormat::Json => Ok(serde_json::from_reader(BufReader::new(input))?),
    }
}
