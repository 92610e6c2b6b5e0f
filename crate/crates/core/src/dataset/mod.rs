//! Crash record schema, encoding, ingestion, and stratified splitting.
//!
//! The canonical schema carries the 17 explanatory variables of the crash
//! dataset. Binary levels encode to {0,1} with fixed semantics (Yes=1,
//! Male=1, Rural=1), multi-level categoricals encode to consecutive
//! integer codes starting at 1 in listing order, and age stays a real
//! number. Severity is the three-way label minor=0, serious=1, fatal=2.

mod profile;
mod synth;
pub mod table1;

pub use profile::{profile, ProfileRow, ProfileTable};
pub use synth::synthesize_table1;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stream;
use crate::N_CATEGORIES;

/// Column header used for the label in CSV files.
pub const SEVERITY_COLUMN: &str = "Severity";

// ---------------------------------------------------------------------------
// Severity label
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Severity {
    Minor,
    Serious,
    Fatal,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Minor, Severity::Serious, Severity::Fatal];

    pub fn code(self) -> usize {
        match self {
            Severity::Minor => 0,
            Severity::Serious => 1,
            Severity::Fatal => 2,
        }
    }

    pub fn from_code(code: usize) -> Option<Severity> {
        match code {
            0 => Some(Severity::Minor),
            1 => Some(Severity::Serious),
            2 => Some(Severity::Fatal),
            _ => None,
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Severity::Minor => "Minor injury",
            Severity::Serious => "Serious injury",
            Severity::Fatal => "Fatal",
        }
    }

    /// Parse either the label text or its numeric code.
    pub fn parse(s: &str) -> Option<Severity> {
        match s.trim() {
            "Minor injury" | "0" => Some(Severity::Minor),
            "Serious injury" | "1" => Some(Severity::Serious),
            "Fatal" | "2" => Some(Severity::Fatal),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Feature schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Binary,
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub name: String,
    pub code: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Level names with their integer codes; empty for continuous features.
    pub levels: Vec<Level>,
}

impl FeatureSpec {
    pub fn code_for(&self, text: &str) -> Option<f64> {
        self.levels.iter().find(|l| l.name == text).map(|l| l.code)
    }

    pub fn level_for_code(&self, code: f64) -> Option<&str> {
        self.levels
            .iter()
            .find(|l| l.code == code)
            .map(|l| l.name.as_str())
    }

    /// Valid code range for discrete features.
    pub fn code_bounds(&self) -> Option<(f64, f64)> {
        match self.kind {
            FeatureKind::Continuous => None,
            _ => {
                let lo = self.levels.iter().map(|l| l.code).fold(f64::INFINITY, f64::min);
                let hi = self
                    .levels
                    .iter()
                    .map(|l| l.code)
                    .fold(f64::NEG_INFINITY, f64::max);
                Some((lo, hi))
            }
        }
    }
}

/// Kind of a numeric column, as needed by resampling for rounding
/// interpolated values back onto valid level codes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ColumnKind {
    Continuous,
    /// Discrete codes are the consecutive integers in `[lo, hi]`.
    Discrete { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    specs: Vec<FeatureSpec>,
}

impl FeatureSchema {
    /// Build a schema from feature specs, checking basic invariants.
    pub fn new(specs: Vec<FeatureSpec>) -> Result<FeatureSchema> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &specs {
            if !seen.insert(s.name.clone()) {
                return Err(Error::Schema(format!("duplicate feature name '{}'", s.name)));
            }
            match s.kind {
                FeatureKind::Binary => {
                    let mut codes: Vec<f64> = s.levels.iter().map(|l| l.code).collect();
                    codes.sort_by(f64::total_cmp);
                    if codes != vec![0.0, 1.0] {
                        return Err(Error::Schema(format!(
                            "binary feature '{}' must map its levels to {{0,1}}",
                            s.name
                        )));
                    }
                }
                FeatureKind::Categorical => {
                    let codes: Vec<f64> = s.levels.iter().map(|l| l.code).collect();
                    let want: Vec<f64> = (1..=s.levels.len()).map(|c| c as f64).collect();
                    if codes != want {
                        return Err(Error::Schema(format!(
                            "categorical feature '{}' codes must ascend from 1 in listing order",
                            s.name
                        )));
                    }
                }
                FeatureKind::Continuous => {
                    if !s.levels.is_empty() {
                        return Err(Error::Schema(format!(
                            "continuous feature '{}' cannot carry levels",
                            s.name
                        )));
                    }
                }
            }
        }
        Ok(FeatureSchema { specs })
    }

    /// The canonical 17-variable crash schema.
    pub fn crash() -> FeatureSchema {
        let bin = |name: &str, levels: &[(&str, f64)]| FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Binary,
            levels: levels
                .iter()
                .map(|(n, c)| Level {
                    name: n.to_string(),
                    code: *c,
                })
                .collect(),
        };
        let cat = |name: &str, levels: &[&str]| FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            levels: levels
                .iter()
                .enumerate()
                .map(|(i, n)| Level {
                    name: n.to_string(),
                    code: (i + 1) as f64,
                })
                .collect(),
        };
        let yes_no = [("No", 0.0), ("Yes", 1.0)];
        let specs = vec![
            bin("Sex", &[("Male", 1.0), ("Female", 0.0)]),
            FeatureSpec {
                name: "AgeText".to_string(),
                kind: FeatureKind::Continuous,
                levels: vec![],
            },
            cat(
                "AlcoholDrugTest",
                &[
                    "Both-Positive",
                    "Drug-Positive",
                    "Alcohol-Positive",
                    "Negative",
                    "Not related",
                ],
            ),
            bin("DUI", &yes_no),
            bin("DistractedDriving", &yes_no),
            bin("TeenageDriver", &yes_no),
            bin("Holiday", &yes_no),
            bin("RightTurn", &yes_no),
            bin("Intersection", &[("Yes", 1.0), ("No", 0.0)]),
            bin("LeftTurn", &yes_no),
            bin("WorkZone", &yes_no),
            bin("RoadType", &[("Urban", 0.0), ("Rural", 1.0)]),
            cat("FunctionClass", &["Local", "Collector", "Arterial"]),
            bin("RoadwaySurf", &[("Yes", 1.0), ("No", 0.0)]),
            cat(
                "Light",
                &[
                    "Dark-Not lighted",
                    "Dark-Lighted",
                    "Daylight",
                    "Dusk",
                    "Dawn",
                    "Others",
                ],
            ),
            cat(
                "Weather",
                &["Clear", "Cloudy", "Rain", "Fog, Smog", "Snowing", "Others"],
            ),
            cat("VerticalAlignment", &["Level", "Uphill", "Downhill", "Others"]),
        ];
        FeatureSchema::new(specs).expect("canonical schema is valid")
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn column_kinds(&self) -> Vec<ColumnKind> {
        self.specs
            .iter()
            .map(|s| match s.code_bounds() {
                None => ColumnKind::Continuous,
                Some((lo, hi)) => ColumnKind::Discrete { lo, hi },
            })
            .collect()
    }

    /// Content hash of the schema, used to tie serialized models to the
    /// feature layout they were trained on.
    pub fn hash_hex(&self) -> String {
        let mut canon = String::new();
        for s in &self.specs {
            let _ = write!(canon, "{}|{:?}|", s.name, s.kind);
            for l in &s.levels {
                let _ = write!(canon, "{}={};", l.name, l.code);
            }
            canon.push('\n');
        }
        let digest = Sha256::digest(canon.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }

    /// Encode one raw record into a numeric feature vector.
    ///
    /// Binary and categorical cells must carry a known level name; the
    /// continuous age cell must parse as a finite number.
    pub fn encode_record(&self, raw: &BTreeMap<String, String>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.specs.len());
        for spec in &self.specs {
            let cell = raw
                .get(&spec.name)
                .ok_or_else(|| Error::Validation(format!("missing value for '{}'", spec.name)))?;
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(Error::Validation(format!("missing value for '{}'", spec.name)));
            }
            match spec.kind {
                FeatureKind::Continuous => {
                    let v: f64 = cell.parse().map_err(|_| {
                        Error::Validation(format!("unparseable value '{cell}' for '{}'", spec.name))
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Validation(format!(
                            "non-finite value '{cell}' for '{}'",
                            spec.name
                        )));
                    }
                    out.push(v);
                }
                _ => {
                    let code = spec.code_for(cell).ok_or_else(|| {
                        Error::Validation(format!("unknown level '{cell}' for '{}'", spec.name))
                    })?;
                    out.push(code);
                }
            }
        }
        Ok(out)
    }

    /// Decode an encoded row back to level text, in schema order.
    ///
    /// Inverse of [`encode_record`](Self::encode_record); continuous values
    /// format with the shortest round-tripping representation.
    pub fn decode_record(&self, row: &[f64]) -> Result<Vec<(String, String)>> {
        if row.len() != self.specs.len() {
            return Err(Error::Validation(format!(
                "row has {} values, schema expects {}",
                row.len(),
                self.specs.len()
            )));
        }
        let mut out = Vec::with_capacity(row.len());
        for (spec, &v) in self.specs.iter().zip(row) {
            let text = match spec.kind {
                FeatureKind::Continuous => format!("{v}"),
                _ => spec
                    .level_for_code(v)
                    .ok_or_else(|| {
                        Error::Validation(format!("code {v} is not a level of '{}'", spec.name))
                    })?
                    .to_string(),
            };
            out.push((spec.name.clone(), text));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Encoded feature matrix plus severity labels. Immutable once built.
#[derive(Debug, Clone)]
pub struct Dataset {
    matrix: Matrix,
    labels: Vec<Severity>,
    schema: FeatureSchema,
}

impl Dataset {
    /// Build a dataset, enforcing the invariants: equal row/label counts,
    /// finite values, and valid level codes in every discrete column.
    pub fn from_parts(matrix: Matrix, labels: Vec<Severity>, schema: FeatureSchema) -> Result<Dataset> {
        if matrix.n_rows() != labels.len() {
            return Err(Error::Validation(format!(
                "matrix has {} rows but {} labels",
                matrix.n_rows(),
                labels.len()
            )));
        }
        if matrix.n_cols() != schema.len() {
            return Err(Error::Validation(format!(
                "matrix has {} columns, schema expects {}",
                matrix.n_cols(),
                schema.len()
            )));
        }
        let kinds = schema.column_kinds();
        for i in 0..matrix.n_rows() {
            let row = matrix.row(i);
            for (j, kind) in kinds.iter().enumerate() {
                let v = row[j];
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "row {}: non-finite value in column '{}'",
                        i + 1,
                        schema.specs()[j].name
                    )));
                }
                if let ColumnKind::Discrete { lo, hi } = kind {
                    if v < *lo || v > *hi || v.fract() != 0.0 {
                        return Err(Error::Validation(format!(
                            "row {}: {} is not a valid level code for '{}'",
                            i + 1,
                            v,
                            schema.specs()[j].name
                        )));
                    }
                }
            }
        }
        Ok(Dataset {
            matrix,
            labels,
            schema,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[Severity] {
        &self.labels
    }

    pub fn label_codes(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.code()).collect()
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn class_counts(&self) -> [usize; N_CATEGORIES] {
        let mut counts = [0usize; N_CATEGORIES];
        for l in &self.labels {
            counts[l.code()] += 1;
        }
        counts
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion and export
// ---------------------------------------------------------------------------

/// Load a CSV file against a schema.
///
/// The header must name all schema features plus the severity column, in
/// any order; unknown columns are rejected. Rows are encoded with
/// [`FeatureSchema::encode_record`] and row order is preserved.
pub fn load_csv(path: &Path, schema: &FeatureSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Validation(format!("cannot read header: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(Error::Validation("empty file".to_string()));
    }

    let mut feature_cols: Vec<Option<usize>> = vec![None; schema.len()];
    let mut severity_col: Option<usize> = None;
    for (ci, h) in headers.iter().enumerate() {
        if h == SEVERITY_COLUMN {
            severity_col = Some(ci);
        } else if let Some(fi) = schema.index_of(h) {
            if feature_cols[fi].is_some() {
                return Err(Error::Schema(format!("duplicate column '{h}'")));
            }
            feature_cols[fi] = Some(ci);
        } else {
            return Err(Error::Schema(format!("unknown column '{h}'")));
        }
    }
    for (fi, col) in feature_cols.iter().enumerate() {
        if col.is_none() {
            return Err(Error::Schema(format!(
                "missing column '{}'",
                schema.specs()[fi].name
            )));
        }
    }
    let severity_col =
        severity_col.ok_or_else(|| Error::Schema(format!("missing column '{SEVERITY_COLUMN}'")))?;

    let mut matrix = Matrix::zeros(0, schema.len());
    let mut labels = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let row_no = ri + 1;
        let record = record.map_err(|e| Error::Validation(format!("row {row_no}: {e}")))?;
        let mut raw = BTreeMap::new();
        for (fi, col) in feature_cols.iter().enumerate() {
            let cell = record.get(col.unwrap()).ok_or_else(|| {
                Error::Validation(format!(
                    "row {row_no}: missing cell for '{}'",
                    schema.specs()[fi].name
                ))
            })?;
            raw.insert(schema.specs()[fi].name.clone(), cell.to_string());
        }
        let encoded = schema
            .encode_record(&raw)
            .map_err(|e| Error::Validation(format!("row {row_no}: {e}")))?;
        let sev_cell = record
            .get(severity_col)
            .ok_or_else(|| Error::Validation(format!("row {row_no}: missing severity cell")))?;
        let label = Severity::parse(sev_cell).ok_or_else(|| {
            Error::Validation(format!("row {row_no}: unknown severity '{sev_cell}'"))
        })?;
        matrix.push_row(&encoded);
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Validation("no data rows".to_string()));
    }
    Dataset::from_parts(matrix, labels, schema.clone())
}

/// Write a dataset as CSV with level text restored, suitable for re-ingestion.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<String> = data.schema.names();
    header.push(SEVERITY_COLUMN.to_string());
    writer
        .write_record(&header)
        .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    for (i, label) in data.labels.iter().enumerate() {
        let decoded = data.schema.decode_record(data.matrix.row(i))?;
        let mut rec: Vec<String> = decoded.into_iter().map(|(_, v)| v).collect();
        rec.push(label.text().to_string());
        writer
            .write_record(&rec)
            .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Stratified splitting
// ---------------------------------------------------------------------------

/// Deterministic apportionment of `n` into parts proportional to `weights`,
/// assigning leftover units to the largest fractional remainders
/// (ties to the lower index).
pub fn largest_remainder(weights: &[u64], n: usize) -> Vec<usize> {
    let total: u64 = weights.iter().sum();
    assert!(total > 0, "weights must not be all zero");
    let mut out = Vec::with_capacity(weights.len());
    let mut fracs = Vec::with_capacity(weights.len());
    let mut assigned = 0usize;
    for (i, &w) in weights.iter().enumerate() {
        let quota = n as f64 * w as f64 / total as f64;
        let base = quota.floor() as usize;
        out.push(base);
        assigned += base;
        fracs.push((quota - base as f64, i));
    }
    fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, i) in fracs.iter().take(n - assigned) {
        out[i] += 1;
    }
    out
}

/// Stratified k-fold assignment over label codes. Returns `k` sorted,
/// disjoint index sets covering all rows; per-category counts across folds
/// differ by at most one.
pub fn stratified_kfold_codes(codes: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("cv folds must be >= 2, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); N_CATEGORIES];
    for (i, &c) in codes.iter().enumerate() {
        by_class[c].push(i);
    }
    for (c, ids) in by_class.iter().enumerate() {
        if !ids.is_empty() && ids.len() < k {
            return Err(Error::Stratify {
                category: Severity::from_code(c).unwrap().text().to_string(),
                count: ids.len(),
                needed: k,
            });
        }
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (c, ids) in by_class.iter().enumerate() {
        let mut ids = ids.clone();
        shuffle(&mut ids, &mut stream::rng_for(seed, "kfold", &[c as u64]));
        for (pos, &row) in ids.iter().enumerate() {
            folds[pos % k].push(row);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Stratified k-fold over a dataset's severity labels.
pub fn stratified_kfold(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    stratified_kfold_codes(&data.label_codes(), k, seed)
}

/// Stratified holdout split: per category, `fraction` of the rows
/// (rounded, at least one on each side) go to the holdout. Returns sorted
/// `(train, holdout)` index sets.
pub fn stratified_split(codes: &[usize], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::Config(format!(
            "holdout fraction must be in (0, 0.5], got {fraction}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); N_CATEGORIES];
    for (i, &c) in codes.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for (c, ids) in by_class.iter().enumerate() {
        if ids.is_empty() {
            continue;
        }
        if ids.len() < 2 {
            return Err(Error::Stratify {
                category: Severity::from_code(c).unwrap().text().to_string(),
                count: ids.len(),
                needed: 2,
            });
        }
        let mut ids = ids.clone();
        shuffle(&mut ids, &mut stream::rng_for(seed, "split", &[c as u64]));
        let n_hold = ((fraction * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);
        holdout.extend_from_slice(&ids[..n_hold]);
        train.extend_from_slice(&ids[n_hold..]);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    Ok((train, holdout))
}

/// Fisher-Yates shuffle driven by our seeded RNG.
pub(crate) fn shuffle<T>(xs: &mut [T], rng: &mut rand_chacha::ChaCha8Rng) {
    use rand::Rng;
    for i in (1..xs.len()).rev() {
        let j = rng.random_range(0..=i);
        xs.swap(i, j);
    }
}
