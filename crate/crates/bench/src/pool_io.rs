//! Pool files: `{"items": [{"id", "score", "predicted", "label"?}]}` as JSON,
//! or CSV with header `id,score,predicted,label` (label may be empty).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use lowshot_core::{EstimateError, PoolItem, ScoredPool};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolFormat {
    Json,
    Csv,
}

impl PoolFormat {
    /// `.csv` files are CSV, everything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Json,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    id: String,
    score: f64,
    predicted: u8,
    #[serde(default)]
    label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    asset_url: Option<String>,
}

fn bit(value: u8, field: &str, id: &str) -> Result<bool> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(EstimateError::InvalidPool(format!("item {id:?}: {field} must be 0 or 1, got {v}")).into()),
    }
}

pub fn read_pool_from<R: Read>(reader: R, format: PoolFormat) -> Result<ScoredPool> {
    match format {
        PoolFormat::Json => Ok(serde_json::from_reader(reader)?),
        PoolFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
            let mut items = Vec::new();
            for row in rdr.deserialize() {
                let row: CsvRow = row?;
                let mut item = PoolItem::new(row.id.clone(), row.score, bit(row.predicted, "predicted", &row.id)?);
                if let Some(l) = row.label {
                    item.label = Some(bit(l, "label", &row.id)?);
                }
                item.asset_url = row.asset_url.filter(|u| !u.is_empty());
                items.push(item);
            }
            Ok(ScoredPool::new(items)?)
        }
    }
}

pub fn read_pool(path: &Path) -> Result<ScoredPool> {
    read_pool_from(BufReader::new(File::open(path)?), PoolFormat::from_path(path))
}

pub fn write_pool_to<W: Write>(pool: &ScoredPool, format: PoolFormat, writer: W) -> Result<()> {
    match format {
        PoolFormat::Json => {
            let mut w = writer;
            serde_json::to_writer(&mut w, pool)?;
            w.flush()?;
        }
        PoolFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            wtr.write_record(["id", "score", "predicted", "label"])?;
            for item in pool.items() {
                let label = item.label.map(|l| u8::from(l).to_string()).unwrap_or_default();
                wtr.write_record([
                    item.id.as_str(),
                    &item.score.to_string(),
                    &u8::from(item.predicted).to_string(),
                    &label,
                ])?;
            }
            wtr.flush()?;
        }
    }
    Ok(())
}

pub fn write_pool(pool: &ScoredPool, path: &Path) -> Result<()> {
    write_pool_to(pool, PoolFormat::from_path(path), BufWriter::new(File::create(path)?))
}
