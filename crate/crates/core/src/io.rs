//! CSV ingestion and output.
//!
//! Matrices are plain delimited numeric tables with an optional single
//! header row (detected when the first row does not parse as numbers).
//! They carry no player ids; row order matches the labels file, whose rows
//! are `player_id,class_name` with an empty class for unlabeled players.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::error::{GtgError, Result};
use crate::evaluation::AccuracyReport;
use crate::similarity::{symmetrize_max, DissimilarityMatrix, FeatureMatrix};
use crate::solver::{GameResult, LabelAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',' }
    }
}

fn reader(path: &Path, opts: CsvOptions) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| GtgError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(opts.delimiter)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> GtgError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => GtgError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => GtgError::format(path, format!("{other:?}")),
        }
    } else {
        GtgError::format(path, e.to_string())
    }
}

/// Rectangular table of finite numbers.
pub fn read_numeric_rows(path: &Path, opts: CsvOptions) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader(path, opts)?.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => continue,
            Err(_) => {
                let (col, cell) = record
                    .iter()
                    .enumerate()
                    .find(|(_, c)| c.parse::<f64>().is_err())
                    .expect("a cell failed to parse");
                return Err(GtgError::format(
                    path,
                    format!("row {}, column {}: {cell:?} is not a number", line + 1, col + 1),
                ));
            }
        };
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(GtgError::format(
                path,
                format!("row {}, column {}: non-finite value", line + 1, col + 1),
            ));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(GtgError::format(
                    path,
                    format!(
                        "row {} has {} columns, expected {}",
                        line + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(GtgError::format(path, "no numeric rows"));
    }
    Ok(rows)
}

/// Reads a square dissimilarity table. Nonzero diagonal entries are reset to
/// zero with a warning; the result is max-symmetrized when `symmetrize`.
pub fn load_distance_matrix(
    path: &Path,
    opts: CsvOptions,
    symmetrize: bool,
) -> Result<DissimilarityMatrix> {
    let mut rows = read_numeric_rows(path, opts)?;
    let n = rows.len();
    if rows[0].len() != n {
        return Err(GtgError::format(
            path,
            format!("distance matrix is not square: {n} rows, {} columns", rows[0].len()),
        ));
    }
    for (i, row) in rows.iter_mut().enumerate() {
        if let Some(j) = row.iter().position(|&v| v < 0.0) {
            return Err(GtgError::format(
                path,
                format!("negative distance {} at row {}, column {}", row[j], i + 1, j + 1),
            ));
        }
        if row[i] != 0.0 {
            warn!("{}: diagonal entry {} on row {} reset to 0", path.display(), row[i], i + 1);
            row[i] = 0.0;
        }
    }
    let d = DissimilarityMatrix::from_rows(rows).map_err(|e| GtgError::format(path, e.to_string()))?;
    Ok(if symmetrize { symmetrize_max(&d) } else { d })
}

pub fn load_features(path: &Path, opts: CsvOptions) -> Result<FeatureMatrix> {
    FeatureMatrix::from_rows(read_numeric_rows(path, opts)?)
}

/// Player ids, class names and the labeling read from a labels file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelTable {
    pub ids: Vec<String>,
    /// Class names by index, in order of first appearance.
    pub class_names: Vec<String>,
    pub labels: Vec<Option<usize>>,
}

impl LabelTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn assignment(&self) -> Result<LabelAssignment> {
        LabelAssignment::new(self.class_names.len(), self.labels.clone())
    }

    /// Class of every player, or an error naming the first unlabeled one.
    pub fn complete_labels(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| {
                l.ok_or_else(|| GtgError::config(format!("player {id:?} has no class label")))
            })
            .collect()
    }
}

pub fn load_labels(path: &Path, opts: CsvOptions) -> Result<LabelTable> {
    let mut ids = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (line, record) in reader(path, opts)?.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() > 2 {
            return Err(GtgError::format(
                path,
                format!("row {} has {} fields, expected player_id,class", line + 1, record.len()),
            ));
        }
        let id = record.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(GtgError::format(path, format!("row {}: empty player id", line + 1)));
        }
        if let Some(prev) = seen.insert(id.clone(), line) {
            return Err(GtgError::format(
                path,
                format!("duplicate player id {id:?} on rows {} and {}", prev + 1, line + 1),
            ));
        }
        let class = record.get(1).unwrap_or("");
        let label = if class.is_empty() {
            None
        } else {
            let next = class_names.len();
            let c = *class_index.entry(class.to_string()).or_insert(next);
            if c == next {
                class_names.push(class.to_string());
            }
            Some(c)
        };
        ids.push(id);
        labels.push(label);
    }
    if class_names.is_empty() {
        return Err(GtgError::config(format!(
            "{}: no labeled players",
            path.display()
        )));
    }
    Ok(LabelTable {
        ids,
        class_names,
        labels,
    })
}

fn writer(path: &Path, opts: CsvOptions) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|source| GtgError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::WriterBuilder::new()
        .delimiter(opts.delimiter)
        .from_writer(BufWriter::new(file)))
}

fn finish(path: &Path, mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(|source| GtgError::Io {
        path: path.to_path_buf(),
        source,
    })
}

// `{}` on f64 prints the shortest representation that parses back exactly.
fn write_rows<'a>(
    path: &Path,
    opts: CsvOptions,
    rows: impl Iterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut w = writer(path, opts)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

pub fn write_distance_matrix(path: &Path, d: &DissimilarityMatrix, opts: CsvOptions) -> Result<()> {
    write_rows(path, opts, (0..d.len()).map(|i| d.row(i)))
}

pub fn write_features(path: &Path, f: &FeatureMatrix, opts: CsvOptions) -> Result<()> {
    write_rows(path, opts, (0..f.rows()).map(|i| f.row(i)))
}

pub fn write_labels(path: &Path, table: &LabelTable, opts: CsvOptions) -> Result<()> {
    let mut w = writer(path, opts)?;
    for (id, label) in table.ids.iter().zip(&table.labels) {
        let class = label.map_or("", |c| table.class_names[c].as_str());
        w.write_record([id.as_str(), class])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

/// One row per unlabeled player in input order:
/// `player_id,class_name,probability`.
pub fn write_predictions(
    path: &Path,
    result: &GameResult,
    table: &LabelTable,
    opts: CsvOptions,
) -> Result<()> {
    let mut w = writer(path, opts)?;
    for p in &result.predictions {
        let prob = result.final_space.row(p.player)[p.class];
        w.write_record([
            table.ids[p.player].as_str(),
            table.class_names[p.class].as_str(),
            &prob.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

pub fn write_report_json(path: &Path, reports: &[AccuracyReport]) -> Result<()> {
    let file = File::create(path).map_err(|source| GtgError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, reports)
        .map_err(|e| GtgError::format(path, e.to_string()))?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|source| GtgError::Io {
            path: path.to_path_buf(),
            source,
        })
}
