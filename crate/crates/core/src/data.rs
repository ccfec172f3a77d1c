//! Datasets, file ingestion, stratified splits and cross-validation folds.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Row-major `N x D` matrix of attribute values.
///
/// The per-feature sort order is computed on first use and cached, since
/// every stump search over the same matrix needs it.
#[derive(Debug, Clone)]
pub struct Features {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    order: OnceLock<Vec<Vec<u32>>>,
}

impl PartialEq for Features {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.values == other.values
    }
}

impl Features {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "feature matrix must be non-empty (got {rows}x{cols})"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                line: pos / cols + 1,
                column: pos % cols + 1,
            });
        }
        Ok(Features {
            rows,
            cols,
            values,
            order: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} values, expected {cols}",
                rows[bad].len()
            )));
        }
        Features::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// Row indices sorted by feature `j` (stable, ascending).
    pub fn sorted_order(&self, j: usize) -> &[u32] {
        &self.order.get_or_init(|| {
            (0..self.cols)
                .map(|f| {
                    let mut idx: Vec<u32> = (0..self.rows as u32).collect();
                    idx.sort_by(|&a, &b| {
                        self.get(a as usize, f).total_cmp(&self.get(b as usize, f))
                    });
                    idx
                })
                .collect()
        })[j]
    }

    pub fn select(&self, indices: &[usize]) -> Features {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Features {
            rows: indices.len(),
            cols: self.cols,
            values,
            order: OnceLock::new(),
        }
    }
}

/// Labelled examples. Class indices are 0-based and contiguous; `label_codes`
/// maps each index back to the label that appeared in the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Features,
    labels: Vec<usize>,
    num_classes: usize,
    label_codes: Vec<i64>,
}

impl Dataset {
    pub fn new(features: Features, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let codes = (1..=num_classes as i64).collect();
        Dataset::with_label_codes(features, labels, codes)
    }

    pub fn with_label_codes(
        features: Features,
        labels: Vec<usize>,
        label_codes: Vec<i64>,
    ) -> Result<Self> {
        let num_classes = label_codes.len();
        if num_classes < 2 {
            return Err(Error::TooFewClasses(num_classes));
        }
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "class index {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            num_classes,
            label_codes,
        })
    }

    /// Builds a dataset from raw integer labels, compacting them to
    /// `0..C` in ascending numeric order.
    pub fn from_raw(features: Features, raw_labels: &[i64]) -> Result<Self> {
        let codes: Vec<i64> = {
            let mut c = raw_labels.to_vec();
            c.sort_unstable();
            c.dedup();
            c
        };
        let labels = raw_labels
            .iter()
            .map(|y| codes.binary_search(y).expect("code present"))
            .collect();
        Dataset::with_label_codes(features, labels, codes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_codes(&self) -> &[i64] {
        &self.label_codes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Examples at `indices`, in the given order; the class set is kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            label_codes: self.label_codes.clone(),
        }
    }

    /// Appends `other`, which must share the label coding.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.label_codes != other.label_codes || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(
                "datasets differ in label coding or dimension".into(),
            ));
        }
        let mut values = self.features.values.clone();
        values.extend_from_slice(&other.features.values);
        let features = Features::new(self.len() + other.len(), self.dim(), values)?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Dataset::with_label_codes(features, labels, self.label_codes.clone())
    }

    /// Re-expresses the labels against another dataset's (or a saved
    /// model's) label codes.
    pub fn relabel(&self, codes: &[i64]) -> Result<Dataset> {
        let labels = self
            .labels
            .iter()
            .map(|&y| {
                let code = self.label_codes[y];
                codes.iter().position(|&c| c == code).ok_or_else(|| {
                    Error::InvalidArgument(format!("label {code} is not known to the model"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::with_label_codes(self.features.clone(), labels, codes.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    LibSvm,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "libsvm" | "svm" => Ok(Format::LibSvm),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::LibSvm => "libsvm",
        })
    }
}

/// Parsed rows with labels as they appear in the file.
#[derive(Debug, Clone)]
struct RawTable {
    rows: Vec<Vec<f64>>,
    labels: Vec<i64>,
}

pub fn load_dataset(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, format)
}

pub fn parse_dataset(text: &str, format: Format) -> Result<Dataset> {
    let raw = parse_raw(text, format)?;
    build(raw.rows, &raw.labels)
}

/// Loads a pre-partitioned pair so both halves share one label coding.
pub fn load_dataset_pair(
    train: impl AsRef<Path>,
    test: impl AsRef<Path>,
    format: Format,
) -> Result<(Dataset, Dataset)> {
    let mut a = parse_raw(&std::fs::read_to_string(train)?, format)?;
    let b = parse_raw(&std::fs::read_to_string(test)?, format)?;
    let n_train = a.rows.len();
    let width = a.rows[0].len().max(b.rows[0].len());
    a.rows.extend(b.rows);
    a.labels.extend(b.labels);
    for row in &mut a.rows {
        row.resize(width, 0.0);
    }
    let all = build(a.rows, &a.labels)?;
    let train_idx: Vec<usize> = (0..n_train).collect();
    let test_idx: Vec<usize> = (n_train..all.len()).collect();
    Ok((all.subset(&train_idx), all.subset(&test_idx)))
}

fn build(rows: Vec<Vec<f64>>, labels: &[i64]) -> Result<Dataset> {
    let features = Features::from_rows(&rows)?;
    Dataset::from_raw(features, labels)
}

fn parse_raw(text: &str, format: Format) -> Result<RawTable> {
    let table = match format {
        Format::Csv => parse_csv(text)?,
        Format::LibSvm => parse_libsvm(text)?,
    };
    if table.rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    let distinct = table
        .labels
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if distinct < 2 {
        return Err(Error::TooFewClasses(distinct));
    }
    Ok(table)
}

fn parse_label(token: &str, line: usize) -> Result<i64> {
    let token = token.trim();
    if let Ok(v) = token.trim_start_matches('+').parse::<i64>() {
        return Ok(v);
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(Error::Parse {
            line,
            message: format!("label {token:?} is not an integer"),
        }),
    }
}

fn parse_value(token: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = token.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("column {column}: {token:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite { line, column });
    }
    Ok(v)
}

fn parse_csv(text: &str) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut arity = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        // A first row that does not parse as numbers is a header.
        if arity.is_none() && record.iter().any(|f| f.parse::<f64>().is_err()) {
            arity = Some(record.len());
            continue;
        }
        let width = *arity.get_or_insert(record.len());
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        if width < 2 {
            return Err(Error::Parse {
                line,
                message: "need at least one attribute and a label".into(),
            });
        }
        let row = record
            .iter()
            .take(width - 1)
            .enumerate()
            .map(|(c, f)| parse_value(f, line, c + 1))
            .collect::<Result<Vec<_>>>()?;
        labels.push(parse_label(&record[width - 1], line)?);
        rows.push(row);
    }
    Ok(RawTable { rows, labels })
}

fn parse_libsvm(text: &str) -> Result<RawTable> {
    let mut sparse = Vec::new();
    let mut labels = Vec::new();
    let mut width = 0usize;
    for (k, raw_line) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = parse_label(tokens.next().expect("non-empty line"), line)?;
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected index:value, found {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line,
                    message: "feature indices are 1-based".into(),
                });
            }
            let val = parse_value(val, line, idx)?;
            width = width.max(idx);
            entries.push((idx - 1, val));
        }
        labels.push(label);
        sparse.push(entries);
    }
    let width = width.max(1);
    let rows = sparse
        .into_iter()
        .map(|entries| {
            let mut row = vec![0.0; width];
            for (j, v) in entries {
                row[j] = v;
            }
            row
        })
        .collect();
    Ok(RawTable { rows, labels })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction {train_fraction} must lie in (0, 1)"
            )));
        }
        Ok(SplitSpec {
            train_fraction,
            seed,
        })
    }
}

/// Number of training examples to draw from each class.
///
/// Each class gets `floor(f * n_c)`; the remainder up to `round(f * N)` goes
/// to the classes with the largest fractional parts (lower class index wins
/// ties); finally every class is clamped so both sides are non-empty.
pub fn per_class_train_counts(counts: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let exact: Vec<f64> = counts.iter().map(|&n| fraction * n as f64).collect();
    let mut take: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let target = (fraction * total as f64).round() as usize;
    let remainder = target.saturating_sub(take.iter().sum());
    let mut by_fraction: Vec<usize> = (0..counts.len()).collect();
    by_fraction.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in by_fraction.iter().take(remainder) {
        take[c] += 1;
    }
    for (k, &n) in take.iter_mut().zip(counts) {
        if n >= 2 {
            *k = (*k).clamp(1, n - 1);
        } else {
            *k = (*k).min(n);
        }
    }
    take
}

/// Train/test index sets of a stratified split; both are sorted ascending.
pub fn stratified_split_indices(d: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let counts = d.class_counts();
    if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &n)| n < 2) {
        return Err(Error::ClassTooSmall {
            class,
            count,
            required: 2,
        });
    }
    let take = per_class_train_counts(&counts, spec.train_fraction);
    let mut rng = rng::seeded(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, &k) in take.iter().enumerate() {
        let mut members: Vec<usize> = (0..d.len()).filter(|&i| d.labels[i] == class).collect();
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = stratified_split_indices(d, spec)?;
    Ok((d.subset(&train), d.subset(&test)))
}

/// Stratified `k`-fold partition of `0..N`.
///
/// Members of each class are shuffled and dealt round-robin; the dealing
/// position carries over between classes so fold totals stay balanced too.
pub fn kfold_indices(d: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count {k} must be at least 2")));
    }
    if k > d.len() {
        return Err(Error::InvalidArgument(format!(
            "fold count {k} exceeds the {} available examples",
            d.len()
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in d.labels.iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let mut rng = rng::seeded(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for (p, &i) in members.iter().enumerate() {
            folds[(offset + p) % k].push(i);
        }
        offset = (offset + members.len()) % k;
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}
