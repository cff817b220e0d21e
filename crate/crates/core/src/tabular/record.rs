use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Result, TabularError};

/// CSV header, in order.
pub const COLUMNS: [&str; 9] = [
    "sequence_id",
    "delta_tr",
    "snr",
    "skewness",
    "peak_area",
    "length",
    "sulfur_count",
    "injection_volume",
    "retention_time",
];

/// Independent variables, in matrix column order.
pub const FEATURES: [&str; 6] = [
    "delta_tr",
    "snr",
    "skewness",
    "peak_area",
    "length",
    "sulfur_count",
];

pub const TARGET: &str = "retention_time";

/// Cell values read as null.
pub const NULL_MARKERS: [&str; 3] = ["", "NA", "-"];

/// One compound. `None` marks a null cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub sequence_id: String,
    pub delta_tr: Option<f64>,
    pub snr: Option<f64>,
    pub skewness: Option<f64>,
    pub peak_area: Option<f64>,
    pub length: Option<u32>,
    pub sulfur_count: Option<u32>,
    pub injection_volume: Option<f64>,
    pub retention_time: Option<f64>,
}

impl QualityRecord {
    /// Value of a numeric column by name.
    pub fn get(&self, column: &str) -> Option<f64> {
        match column {
            "delta_tr" => self.delta_tr,
            "snr" => self.snr,
            "skewness" => self.skewness,
            "peak_area" => self.peak_area,
            "length" => self.length.map(f64::from),
            "sulfur_count" => self.sulfur_count.map(f64::from),
            "injection_volume" => self.injection_volume,
            "retention_time" => self.retention_time,
            _ => None,
        }
    }

    /// True when every feature and the target are present.
    pub fn is_complete(&self) -> bool {
        FEATURES.iter().chain([&TARGET]).all(|c| self.get(c).is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityDataset {
    pub name: String,
    pub records: Vec<QualityRecord>,
    pub feature_names: Vec<String>,
}

impl QualityDataset {
    pub fn new(name: impl Into<String>, records: Vec<QualityRecord>) -> Self {
        Self {
            name: name.into(),
            records,
            feature_names: FEATURES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sub-dataset of the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            records: rows.iter().map(|&i| self.records[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Present values of one column.
    pub fn column(&self, name: &str) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.get(name)).collect()
    }
}

fn is_null(cell: &str) -> bool {
    NULL_MARKERS.contains(&cell)
}

fn parse_real(cell: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if is_null(cell) {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| TabularError::ParseError {
        row,
        column: column.into(),
        value: cell.into(),
    })?;
    if !v.is_finite() {
        return Err(TabularError::ParseError {
            row,
            column: column.into(),
            value: cell.into(),
        });
    }
    Ok(Some(v))
}

fn parse_count(cell: &str, row: usize, column: &str) -> Result<Option<u32>> {
    let Some(v) = parse_real(cell, row, column)? else {
        return Ok(None);
    };
    if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
        return Err(TabularError::ParseError {
            row,
            column: column.into(),
            value: cell.into(),
        });
    }
    Ok(Some(v as u32))
}

fn check(record: &QualityRecord, row: usize) -> Result<()> {
    let invalid = |column: &str, reason: &str| {
        Err(TabularError::InvalidValue {
            row,
            column: column.into(),
            reason: reason.into(),
        })
    };
    if matches!(record.snr, Some(v) if v <= 0.0) {
        return invalid("snr", "must be positive");
    }
    if matches!(record.skewness, Some(v) if v <= 0.0) {
        return invalid("skewness", "must be positive");
    }
    if matches!(record.retention_time, Some(v) if v <= 0.0) {
        return invalid("retention_time", "must be positive");
    }
    if record.length == Some(0) {
        return invalid("length", "must be at least 1");
    }
    if let (Some(len), Some(s)) = (record.length, record.sulfur_count) {
        // One phosphorothioate linkage per internucleotide bond.
        if s > len.saturating_sub(1) {
            return invalid("sulfur_count", "exceeds length - 1 linkages");
        }
    }
    Ok(())
}

/// Parses a quality table. Extra columns are ignored with a warning.
pub fn read_csv(name: impl Into<String>, reader: impl Read) -> Result<QualityDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 9];
    for (slot, col) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| TabularError::SchemaMismatch(col.into()))?;
    }
    for h in headers.iter().filter(|h| !COLUMNS.contains(h)) {
        log::warn!("ignoring extra column `{h}`");
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let cell = |k: usize| row.get(index[k]).unwrap_or("");
        let record = QualityRecord {
            sequence_id: cell(0).to_string(),
            delta_tr: parse_real(cell(1), row_no, COLUMNS[1])?,
            snr: parse_real(cell(2), row_no, COLUMNS[2])?,
            skewness: parse_real(cell(3), row_no, COLUMNS[3])?,
            peak_area: parse_real(cell(4), row_no, COLUMNS[4])?,
            length: parse_count(cell(5), row_no, COLUMNS[5])?,
            sulfur_count: parse_count(cell(6), row_no, COLUMNS[6])?,
            injection_volume: parse_real(cell(7), row_no, COLUMNS[7])?,
            retention_time: parse_real(cell(8), row_no, COLUMNS[8])?,
        };
        check(&record, row_no)?;
        records.push(record);
    }
    Ok(QualityDataset::new(name, records))
}

/// Loads a quality table; the dataset is named after the file stem.
pub fn load_csv(path: impl AsRef<Path>) -> Result<QualityDataset> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(name, std::fs::File::open(path)?)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "NA".into())
}

/// Writes a quality table with the canonical header. When `extra` is given
/// it is appended as an additional column.
pub fn write_csv(
    ds: &QualityDataset,
    writer: impl Write,
    extra: Option<(&str, &[usize])>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if let Some((name, _)) = extra {
        header.push(name);
    }
    wtr.write_record(&header)?;
    for (i, r) in ds.records.iter().enumerate() {
        let mut row = vec![
            r.sequence_id.clone(),
            fmt_opt(r.delta_tr),
            fmt_opt(r.snr),
            fmt_opt(r.skewness),
            fmt_opt(r.peak_area),
            fmt_opt(r.length),
            fmt_opt(r.sulfur_count),
            fmt_opt(r.injection_volume),
            fmt_opt(r.retention_time),
        ];
        if let Some((_, values)) = extra {
            row.push(values[i].to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Removes every record with a null feature or target. Returns the filtered
/// dataset and the number of removed rows.
pub fn drop_nulls(ds: &QualityDataset) -> Result<(QualityDataset, usize)> {
    let records: Vec<QualityRecord> = ds
        .records
        .iter()
        .filter(|r| r.is_complete())
        .cloned()
        .collect();
    if records.is_empty() {
        return Err(TabularError::EmptyDataset);
    }
    let removed = ds.len() - records.len();
    Ok((
        QualityDataset {
            name: ds.name.clone(),
            records,
            feature_names: ds.feature_names.clone(),
        },
        removed,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Clustering,
    Regression,
}

/// Design matrix, its column labels and the target vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: Array2<f64>,
    pub columns: Vec<String>,
    pub target: Array1<f64>,
}

/// Both feature sets use the six independent variables; injection volume is
/// never a model input.
pub fn feature_matrix(ds: &QualityDataset, set: FeatureSet) -> Result<FeatureMatrix> {
    match set {
        FeatureSet::Clustering | FeatureSet::Regression => feature_matrix_with(ds, &FEATURES),
    }
}

/// Design matrix for an explicit, ordered list of columns.
pub fn feature_matrix_with(ds: &QualityDataset, columns: &[&str]) -> Result<FeatureMatrix> {
    if columns.is_empty() {
        return Err(TabularError::MissingFeature("<empty feature list>".into()));
    }
    if let Some(c) = columns.iter().find(|c| !FEATURES.contains(c)) {
        return Err(TabularError::MissingFeature(c.to_string()));
    }
    if ds.is_empty() {
        return Err(TabularError::EmptyDataset);
    }
    let mut x = Array2::zeros((ds.len(), columns.len()));
    let mut target = Array1::zeros(ds.len());
    for (i, r) in ds.records.iter().enumerate() {
        for (j, c) in columns.iter().enumerate() {
            x[[i, j]] = r.get(c).ok_or_else(|| TabularError::NullValue {
                row: i + 1,
                column: c.to_string(),
            })?;
        }
        target[i] = r.retention_time.ok_or_else(|| TabularError::NullValue {
            row: i + 1,
            column: TARGET.into(),
        })?;
    }
    Ok(FeatureMatrix {
        x,
        columns: columns.iter().map(|s| s.to_string()).collect(),
        target,
    })
}
