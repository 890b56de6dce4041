//! Typed tabular data: CSV ingestion, schemas, descriptive statistics,
//! correlation tables and questionnaire binarization.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::model::{VariableKind, VariableSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid schema file: {0}")]
    SchemaFile(#[from] serde_json::Error),
    #[error("header is missing schema column(s): {}", .0.join(", "))]
    HeaderMismatch(Vec<String>),
    #[error("parse error at row {row}, column `{column}`: {reason}")]
    Parse { row: usize, column: String, reason: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is not continuous")]
    NotContinuous(String),
    #[error("column `{0}` is not discrete")]
    NotDiscrete(String),
    #[error("fewer than two complete rows for the pair ({0}, {1})")]
    InsufficientData(String, String),
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("value {value} in column `{column}` (row {row}) is outside [0, 100]")]
    OutOfRange { column: String, row: usize, value: f64 },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Descriptive role of a column. Metadata only; fitting ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Physiological,
    Demographic,
    MentalState,
    Identifier,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub name: NodeId,
    pub kind: VariableKind,
    pub role: Role,
}

impl ColumnSchema {
    pub fn continuous(name: &str, role: Role) -> Self {
        ColumnSchema { name: name.into(), kind: VariableKind::Continuous, role }
    }

    pub fn discrete<S: AsRef<str>>(name: &str, states: &[S], role: Role) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: VariableKind::discrete(states),
            role,
        }
    }

    pub fn spec(&self) -> VariableSpec {
        VariableSpec { id: self.name.clone(), kind: self.kind.clone() }
    }
}

/// Cells of one column. `None` marks a missing entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// State indices into the column's label list.
    Discrete(Vec<Option<usize>>),
    Continuous(Vec<Option<f64>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Discrete(v) => v.len(),
            Column::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Discrete(v) => v[row].is_none(),
            Column::Continuous(v) => v[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&r| self.is_missing(r)).count()
    }
}

/// Column-oriented table whose cells always match the schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    columns: Vec<Column>,
    n_rows: usize,
    /// Free-text notes on where the data came from and how it was transformed.
    pub provenance: Vec<String>,
}

impl Dataset {
    /// Zero-row dataset with the given schema.
    pub fn empty(schema: Vec<ColumnSchema>) -> Result<Self, DataError> {
        let columns = schema
            .iter()
            .map(|c| match c.kind {
                VariableKind::Discrete { .. } => Column::Discrete(Vec::new()),
                VariableKind::Continuous => Column::Continuous(Vec::new()),
            })
            .collect();
        Dataset::from_columns(schema, columns)
    }

    pub fn from_columns(schema: Vec<ColumnSchema>, columns: Vec<Column>) -> Result<Self, DataError> {
        if schema.len() != columns.len() {
            return Err(DataError::Invalid(format!(
                "{} schema entries but {} columns",
                schema.len(),
                columns.len()
            )));
        }
        for (i, c) in schema.iter().enumerate() {
            if schema[..i].iter().any(|o| o.name == c.name) {
                return Err(DataError::Invalid(format!("duplicate column `{}`", c.name)));
            }
            if c.name.as_str().is_empty() {
                return Err(DataError::Invalid("empty column name".into()));
            }
            c.kind
                .check()
                .map_err(|e| DataError::Invalid(format!("column `{}`: {e}", c.name)))?;
        }
        let n_rows = columns.first().map_or(0, Column::len);
        for (c, col) in schema.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(DataError::Invalid(format!("column `{}` has a different length", c.name)));
            }
            match (&c.kind, col) {
                (VariableKind::Discrete { states }, Column::Discrete(v)) => {
                    if v.iter().flatten().any(|&s| s >= states.len()) {
                        return Err(DataError::Invalid(format!(
                            "column `{}` holds a state index out of range",
                            c.name
                        )));
                    }
                }
                (VariableKind::Continuous, Column::Continuous(_)) => {}
                _ => {
                    return Err(DataError::Invalid(format!(
                        "column `{}` does not match its declared kind",
                        c.name
                    )))
                }
            }
        }
        Ok(Dataset { schema, columns, n_rows, provenance: Vec::new() })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn specs(&self) -> Vec<VariableSpec> {
        self.schema.iter().map(ColumnSchema::spec).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name.as_str() == name)
    }

    pub fn column(&self, name: &str) -> Result<&Column, DataError> {
        self.column_index(name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    pub fn continuous(&self, name: &str) -> Result<&[Option<f64>], DataError> {
        match self.column(name)? {
            Column::Continuous(v) => Ok(v),
            Column::Discrete(_) => Err(DataError::NotContinuous(name.to_string())),
        }
    }

    pub fn discrete(&self, name: &str) -> Result<&[Option<usize>], DataError> {
        match self.column(name)? {
            Column::Discrete(v) => Ok(v),
            Column::Continuous(_) => Err(DataError::NotDiscrete(name.to_string())),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Dataset, DataError> {
        let mut schema = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let i = self
                .column_index(name)
                .ok_or_else(|| DataError::UnknownColumn(name.to_string()))?;
            schema.push(self.schema[i].clone());
            columns.push(self.columns[i].clone());
        }
        let mut out = Dataset::from_columns(schema, columns)?;
        out.provenance = self.provenance.clone();
        Ok(out)
    }

    /// Writes the table as CSV. Reals use the shortest representation that
    /// parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W, opts: &CsvOptions) -> Result<(), DataError> {
        let mut w = csv::WriterBuilder::new().delimiter(opts.delimiter).from_writer(writer);
        w.write_record(self.schema.iter().map(|c| c.name.as_str()))?;
        let mut record: Vec<String> = Vec::with_capacity(self.schema.len());
        for r in 0..self.n_rows {
            record.clear();
            for (c, col) in self.schema.iter().zip(&self.columns) {
                record.push(match (col, &c.kind) {
                    (Column::Discrete(v), VariableKind::Discrete { states }) => {
                        v[r].map_or_else(|| opts.missing_token.clone(), |s| states[s].clone())
                    }
                    (Column::Continuous(v), _) => {
                        v[r].map_or_else(|| opts.missing_token.clone(), |x| format!("{x:?}"))
                    }
                    _ => unreachable!("schema/column kinds are checked at construction"),
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, opts: &CsvOptions) -> Result<(), DataError> {
        self.write_csv(File::create(path)?, opts)
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// Cells equal to this token (or empty) are missing.
    pub missing_token: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', missing_token: "NA".to_string() }
    }
}

/// What `load_csv` saw besides the data itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParseReport {
    pub rows: usize,
    pub missing_per_column: Vec<(String, usize)>,
    pub ignored_columns: Vec<String>,
}

pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &[ColumnSchema],
    opts: &CsvOptions,
) -> Result<(Dataset, ParseReport), DataError> {
    read_csv(File::open(path)?, schema, opts)
}

/// Parses CSV text against `schema`. Header columns not in the schema are skipped.
pub fn read_csv<R: Read>(
    reader: R,
    schema: &[ColumnSchema],
    opts: &CsvOptions,
) -> Result<(Dataset, ParseReport), DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let positions: Vec<Option<usize>> = schema
        .iter()
        .map(|c| header.iter().position(|h| h == c.name.as_str()))
        .collect();
    let missing: Vec<String> = schema
        .iter()
        .zip(&positions)
        .filter(|(_, p)| p.is_none())
        .map(|(c, _)| c.name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(DataError::HeaderMismatch(missing));
    }
    let positions: Vec<usize> = positions.into_iter().flatten().collect();
    let ignored_columns = header
        .iter()
        .filter(|h| !schema.iter().any(|c| c.name.as_str() == h.as_str()))
        .cloned()
        .collect();

    let mut columns: Vec<Column> = schema
        .iter()
        .map(|c| match c.kind {
            VariableKind::Discrete { .. } => Column::Discrete(Vec::new()),
            VariableKind::Continuous => Column::Continuous(Vec::new()),
        })
        .collect();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for ((c, &pos), col) in schema.iter().zip(&positions).zip(columns.iter_mut()) {
            let cell = record.get(pos).unwrap_or("").trim();
            let is_missing = cell.is_empty() || cell == opts.missing_token;
            match (col, &c.kind) {
                (Column::Discrete(v), VariableKind::Discrete { states }) => {
                    if is_missing {
                        v.push(None);
                    } else {
                        let s = states.iter().position(|s| s == cell).ok_or_else(|| DataError::Parse {
                            row,
                            column: c.name.to_string(),
                            reason: format!("unknown state `{cell}`"),
                        })?;
                        v.push(Some(s));
                    }
                }
                (Column::Continuous(v), VariableKind::Continuous) => {
                    if is_missing {
                        v.push(None);
                    } else {
                        let x: f64 = cell.parse().map_err(|_| DataError::Parse {
                            row,
                            column: c.name.to_string(),
                            reason: format!("`{cell}` is not a number"),
                        })?;
                        if !x.is_finite() {
                            return Err(DataError::Parse {
                                row,
                                column: c.name.to_string(),
                                reason: format!("`{cell}` is not finite"),
                            });
                        }
                        v.push(Some(x));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let data = Dataset::from_columns(schema.to_vec(), columns)?;
    let report = ParseReport {
        rows: data.n_rows(),
        missing_per_column: schema
            .iter()
            .zip(data.columns())
            .map(|(c, col)| (c.name.to_string(), col.missing_count()))
            .collect(),
        ignored_columns,
    };
    Ok((data, report))
}

// ---- schema file ----

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaFile {
    columns: Vec<SchemaEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaEntry {
    name: String,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    states: Vec<String>,
    #[serde(default)]
    role: Role,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Discrete,
    Continuous,
}

/// Parses a JSON schema file: `{"columns": [{"name", "kind", "states", "role"}]}`.
pub fn parse_schema(text: &str) -> Result<Vec<ColumnSchema>, DataError> {
    let file: SchemaFile = serde_json::from_str(text)?;
    file.columns
        .into_iter()
        .map(|e| {
            let kind = match e.kind {
                KindTag::Continuous => VariableKind::Continuous,
                KindTag::Discrete => VariableKind::Discrete { states: e.states },
            };
            kind.check()
                .map_err(|m| DataError::Invalid(format!("column `{}`: {m}", e.name)))?;
            Ok(ColumnSchema { name: e.name.into(), kind, role: e.role })
        })
        .collect()
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<ColumnSchema>, DataError> {
    parse_schema(&std::fs::read_to_string(path)?)
}

pub fn schema_to_json(schema: &[ColumnSchema]) -> String {
    let file = SchemaFile {
        columns: schema
            .iter()
            .map(|c| {
                let (kind, states) = match &c.kind {
                    VariableKind::Continuous => (KindTag::Continuous, Vec::new()),
                    VariableKind::Discrete { states } => (KindTag::Discrete, states.clone()),
                };
                SchemaEntry { name: c.name.to_string(), kind, states, role: c.role }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("schema serializes") + "\n"
}

// ---- descriptive statistics ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnStats {
    /// `stats` is absent when the column has no observed values.
    Continuous { n: usize, missing: usize, stats: Option<ContinuousSummary> },
    Discrete { n: usize, missing: usize, counts: Vec<(String, usize)> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    #[serde(flatten)]
    pub stats: ColumnStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SummaryStats {
    pub rows: usize,
    pub columns: Vec<ColumnSummary>,
}

impl SummaryStats {
    pub fn get(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.name == name).map(|c| &c.stats)
    }

    /// Aligned plain-text table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let width = self.columns.iter().map(|c| c.name.len()).max().unwrap_or(0).max(6);
        let _ = writeln!(out, "rows: {}", self.rows);
        for c in &self.columns {
            match &c.stats {
                ColumnStats::Continuous { n, missing, stats: Some(s) } => {
                    let _ = writeln!(
                        out,
                        "{:<width$}  n={n:<6} missing={missing:<5} range {:.3} to {:.3} (median: {:.3}; mean: {:.3})",
                        c.name, s.min, s.max, s.median, s.mean
                    );
                }
                ColumnStats::Continuous { n, missing, stats: None } => {
                    let _ = writeln!(out, "{:<width$}  n={n:<6} missing={missing:<5} (no values)", c.name);
                }
                ColumnStats::Discrete { n, missing, counts } => {
                    let parts: Vec<String> = counts.iter().map(|(s, k)| format!("{s}: {k}")).collect();
                    let _ = writeln!(out, "{:<width$}  n={n:<6} missing={missing:<5} {}", c.name, parts.join(", "));
                }
            }
        }
        out
    }
}

/// Median of an unsorted slice; the mean of the two central values for even lengths.
pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) })
}

pub fn summarize(data: &Dataset) -> SummaryStats {
    let columns = data
        .schema()
        .iter()
        .zip(data.columns())
        .map(|(c, col)| {
            let stats = match (col, &c.kind) {
                (Column::Continuous(v), _) => {
                    let mut vals: Vec<f64> = v.iter().flatten().copied().collect();
                    let n = vals.len();
                    let stats = (!vals.is_empty()).then(|| {
                        let mean = vals.iter().sum::<f64>() / n as f64;
                        let med = median(&mut vals).unwrap();
                        ContinuousSummary { min: vals[0], max: vals[n - 1], mean, median: med }
                    });
                    ColumnStats::Continuous { n, missing: v.len() - n, stats }
                }
                (Column::Discrete(v), VariableKind::Discrete { states }) => {
                    let mut counts = vec![0usize; states.len()];
                    for s in v.iter().flatten() {
                        counts[*s] += 1;
                    }
                    let n = counts.iter().sum();
                    ColumnStats::Discrete {
                        n,
                        missing: v.len() - n,
                        counts: states.iter().cloned().zip(counts).collect(),
                    }
                }
                _ => unreachable!(),
            };
            ColumnSummary { name: c.name.to_string(), stats }
        })
        .collect();
    SummaryStats { rows: data.n_rows(), columns }
}

/// Pearson correlations with pairwise-complete rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Rows used for each pair.
    pub pair_counts: Vec<Vec<usize>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }

    /// Square table with three decimals.
    pub fn render(&self) -> String {
        let width = self.names.iter().map(String::len).max().unwrap_or(0).max(6);
        let mut out = format!("{:width$}", "");
        for n in &self.names {
            let _ = write!(out, " {n:>width$}");
        }
        out.push('\n');
        for (n, row) in self.names.iter().zip(&self.values) {
            let _ = write!(out, "{n:<width$}");
            for v in row {
                let _ = write!(out, " {v:>width$.3}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn correlation_matrix(data: &Dataset, columns: &[&str]) -> Result<CorrelationMatrix, DataError> {
    let cols: Vec<&[Option<f64>]> = columns
        .iter()
        .map(|c| data.continuous(c))
        .collect::<Result<_, _>>()?;
    let k = cols.len();
    let mut values = vec![vec![1.0; k]; k];
    let mut pair_counts = vec![vec![0usize; k]; k];
    for i in 0..k {
        let n_i = cols[i].iter().flatten().count();
        if n_i < 2 {
            return Err(DataError::InsufficientData(columns[i].into(), columns[i].into()));
        }
        let xs: Vec<f64> = cols[i].iter().flatten().copied().collect();
        let m = xs.iter().sum::<f64>() / n_i as f64;
        if xs.iter().all(|&x| x == m) {
            return Err(DataError::ZeroVariance(columns[i].to_string()));
        }
        pair_counts[i][i] = n_i;
        for j in i + 1..k {
            let pairs: Vec<(f64, f64)> = cols[i]
                .iter()
                .zip(cols[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .collect();
            if pairs.len() < 2 {
                return Err(DataError::InsufficientData(columns[i].into(), columns[j].into()));
            }
            let r = pearson(&pairs).ok_or_else(|| {
                let zero = if pairs.iter().all(|p| p.0 == pairs[0].0) { i } else { j };
                DataError::ZeroVariance(columns[zero].to_string())
            })?;
            values[i][j] = r;
            values[j][i] = r;
            pair_counts[i][j] = pairs.len();
            pair_counts[j][i] = pairs.len();
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|c| c.to_string()).collect(),
        values,
        pair_counts,
    })
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cutoff {
    /// Positive iff value ≥ threshold.
    #[default]
    GreaterOrEqual,
    /// Positive iff value > threshold.
    Greater,
}

/// Replaces a 0–100 score column with a `{0, 1}` discrete column.
pub fn binarize(data: &Dataset, column: &str, threshold: f64, cutoff: Cutoff) -> Result<Dataset, DataError> {
    let idx = data
        .column_index(column)
        .ok_or_else(|| DataError::UnknownColumn(column.to_string()))?;
    let values = data.continuous(column)?;
    let mut out = Vec::with_capacity(values.len());
    for (r, v) in values.iter().enumerate() {
        out.push(match *v {
            None => None,
            Some(x) if !(0.0..=100.0).contains(&x) => {
                return Err(DataError::OutOfRange { column: column.to_string(), row: r + 1, value: x })
            }
            Some(x) => {
                let positive = match cutoff {
                    Cutoff::GreaterOrEqual => x >= threshold,
                    Cutoff::Greater => x > threshold,
                };
                Some(usize::from(positive))
            }
        });
    }
    let mut schema = data.schema().to_vec();
    schema[idx].kind = VariableKind::discrete(&["0", "1"]);
    let mut columns = data.columns().to_vec();
    columns[idx] = Column::Discrete(out);
    let mut next = Dataset::from_columns(schema, columns)?;
    next.provenance = data.provenance.clone();
    let op = match cutoff {
        Cutoff::GreaterOrEqual => ">=",
        Cutoff::Greater => ">",
    };
    next.provenance.push(format!(
        "{column}: binarized from a 0-100 score, 1 iff value {op} {threshold}"
    ));
    Ok(next)
}
