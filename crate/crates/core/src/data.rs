//! Datasets of `(features, label, protected)` triples, CSV ingestion,
//! synthetic generators and k-fold splitting.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// One observation: a feature vector, its class and its protected-group id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub features: Vec<T>,
    pub label: usize,
    pub protected: usize,
}

impl<T> Sample<T> {
    pub fn new(features: Vec<T>, label: usize, protected: usize) -> Self {
        Sample {
            features,
            label,
            protected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Describes one encoded feature column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub kind: ColumnKind,
    /// Name of the raw input column this feature was derived from.
    pub source: String,
}

/// An immutable, validated collection of samples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    samples: Vec<Sample<T>>,
    dim: usize,
    n_classes: usize,
    n_groups: usize,
    schema: Vec<ColumnInfo>,
    class_names: Vec<String>,
    group_names: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset with a default all-numeric schema (`f0`, `f1`, ...).
    pub fn new(samples: Vec<Sample<T>>, n_classes: usize, n_groups: usize) -> Result<Self> {
        let dim = samples.first().map(|s| s.features.len()).unwrap_or(0);
        let schema = (0..dim)
            .map(|i| ColumnInfo {
                name: format!("f{i}"),
                kind: ColumnKind::Numeric,
                source: format!("f{i}"),
            })
            .collect();
        Self::with_schema(samples, n_classes, n_groups, schema)
    }

    pub fn with_schema(
        samples: Vec<Sample<T>>,
        n_classes: usize,
        n_groups: usize,
        schema: Vec<ColumnInfo>,
    ) -> Result<Self> {
        let class_names = (0..n_classes).map(|c| c.to_string()).collect();
        let group_names = (0..n_groups).map(|g| g.to_string()).collect();
        Self::from_parts(samples, schema, class_names, group_names)
    }

    fn from_parts(
        samples: Vec<Sample<T>>,
        schema: Vec<ColumnInfo>,
        class_names: Vec<String>,
        group_names: Vec<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("a dataset needs at least one sample"));
        }
        let dim = schema.len();
        let n_classes = class_names.len();
        let n_groups = group_names.len();
        for (i, s) in samples.iter().enumerate() {
            check_dim(dim, s.features.len())?;
            if s.label >= n_classes {
                return Err(Error::param(format!(
                    "sample {i} has label {} but the dataset declares {n_classes} classes",
                    s.label
                )));
            }
            if s.protected >= n_groups {
                return Err(Error::param(format!(
                    "sample {i} has protected value {} but the dataset declares {n_groups} groups",
                    s.protected
                )));
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::param(format!("sample {i} has a non-finite feature")));
            }
        }
        Ok(Dataset {
            samples,
            dim,
            n_classes,
            n_groups,
            schema,
            class_names,
            group_names,
        })
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn schema(&self) -> &[ColumnInfo] {
        &self.schema
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn protected(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.protected).collect()
    }

    /// A dataset over the given sample indices with the same metadata.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices
            .iter()
            .map(|&i| {
                self.samples
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::param(format!("index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.with_samples(samples)
    }

    /// Same metadata, new samples (revalidated). Feature values may change but
    /// the dimension must not.
    pub fn with_samples(&self, samples: Vec<Sample<T>>) -> Result<Self> {
        Self::from_parts(
            samples,
            self.schema.clone(),
            self.class_names.clone(),
            self.group_names.clone(),
        )
    }

    /// Writes the dataset as `f0,..,f{d-1},label,protected`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_records(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_records(&mut w)?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn write_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let mut header: Vec<String> = (0..self.dim).map(|i| format!("f{i}")).collect();
        header.push("label".into());
        header.push("protected".into());
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
            row.push(s.label.to_string());
            row.push(s.protected.to_string());
            w.write_record(&row)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// A row filter applied before encoding. Rows failing any filter are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RowFilter {
    /// Keep rows whose value parses as a number inside `[min, max]`.
    Range {
        column: String,
        #[serde(default)]
        min: Option<f64>,
        #[serde(default)]
        max: Option<f64>,
    },
    /// Keep rows whose value is one of `values`.
    In { column: String, values: Vec<String> },
    /// Drop rows whose value is one of `values`.
    NotIn { column: String, values: Vec<String> },
}

impl RowFilter {
    fn column(&self) -> &str {
        match self {
            RowFilter::Range { column, .. }
            | RowFilter::In { column, .. }
            | RowFilter::NotIn { column, .. } => column,
        }
    }

    fn keeps(&self, value: &str) -> bool {
        match self {
            RowFilter::Range { min, max, .. } => match value.parse::<f64>() {
                Ok(v) => min.is_none_or(|m| v >= m) && max.is_none_or(|m| v <= m),
                Err(_) => false,
            },
            RowFilter::In { values, .. } => values.iter().any(|v| v == value),
            RowFilter::NotIn { values, .. } => !values.iter().any(|v| v == value),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_missing() -> String {
    "?".to_string()
}

fn default_favorable() -> usize {
    1
}

/// How a delimited file is turned into a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub label_column: String,
    pub protected_column: String,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default = "default_true")]
    pub one_hot: bool,
    #[serde(default = "default_favorable")]
    pub favorable_label: usize,
    #[serde(default)]
    pub keep_protected_as_feature: bool,
    /// Feature columns to use, in this order. `None` uses every column other
    /// than the label and protected columns.
    #[serde(default)]
    pub features: Option<Vec<String>>,
    /// Columns forced to be categorical. Others are numeric iff their first
    /// retained value parses as a number.
    #[serde(default)]
    pub categorical: Vec<String>,
    /// Rows containing this marker in any cell are dropped.
    #[serde(default = "default_missing")]
    pub missing_marker: String,
    #[serde(default)]
    pub filters: Vec<RowFilter>,
    /// Binarize the label: 1 iff the raw value equals this string.
    #[serde(default)]
    pub positive_label: Option<String>,
    /// Keep only rows whose protected value is among the `k` most frequent.
    #[serde(default)]
    pub protected_top_groups: Option<usize>,
}

impl PreprocessSpec {
    pub fn new(label_column: impl Into<String>, protected_column: impl Into<String>) -> Self {
        PreprocessSpec {
            label_column: label_column.into(),
            protected_column: protected_column.into(),
            standardize: true,
            one_hot: true,
            favorable_label: 1,
            keep_protected_as_feature: false,
            features: None,
            categorical: Vec::new(),
            missing_marker: default_missing(),
            filters: Vec::new(),
            positive_label: None,
            protected_top_groups: None,
        }
    }
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, spec: &PreprocessSpec) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, spec)
}

/// Parses delimited text with a header row according to `spec`.
pub fn load_csv_reader<T: Scalar, R: Read>(reader: R, spec: &PreprocessSpec) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };

    if spec.label_column == spec.protected_column {
        return Err(Error::Schema(
            "label and protected columns must be distinct".into(),
        ));
    }
    let label_idx = col(&spec.label_column)?;
    let prot_idx = col(&spec.protected_column)?;
    let feature_names: Vec<String> = match &spec.features {
        Some(names) => names.clone(),
        None => header
            .iter()
            .filter(|h| **h != spec.label_column && **h != spec.protected_column)
            .cloned()
            .collect(),
    };
    let mut feature_cols = Vec::with_capacity(feature_names.len());
    for name in &feature_names {
        if *name == spec.label_column {
            return Err(Error::Schema("the label column cannot be a feature".into()));
        }
        let idx = col(name)?;
        if idx != prot_idx {
            feature_cols.push((name.clone(), idx));
        }
    }
    let filter_cols = spec
        .filters
        .iter()
        .map(|f| col(f.column()))
        .collect::<Result<Vec<_>>>()?;

    // (1-based data row number, cells)
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().any(|c| c == spec.missing_marker) {
            continue;
        }
        let keep = spec
            .filters
            .iter()
            .zip(&filter_cols)
            .all(|(f, &c)| f.keeps(rec.get(c).unwrap_or("")));
        if keep {
            rows.push((i + 1, rec.iter().map(str::to_string).collect()));
        }
    }

    if let Some(k) = spec.protected_top_groups {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, r) in &rows {
            *counts.entry(r[prot_idx].as_str()).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let kept: BTreeSet<String> = ranked.iter().take(k).map(|(v, _)| v.to_string()).collect();
        rows.retain(|(_, r)| kept.contains(&r[prot_idx]));
    }
    if rows.is_empty() {
        return Err(Error::Schema("no rows left after filtering".into()));
    }

    let (class_names, label_ids) = match &spec.positive_label {
        Some(pos) => {
            let ids = rows.iter().map(|(_, r)| usize::from(r[label_idx] == *pos)).collect();
            (vec![format!("not {pos}"), pos.clone()], ids)
        }
        None => encode_levels(rows.iter().map(|(_, r)| r[label_idx].as_str())),
    };
    let (group_names, group_ids) = encode_levels(rows.iter().map(|(_, r)| r[prot_idx].as_str()));

    // Encode features column by column.
    let n = rows.len();
    let mut columns: Vec<(ColumnInfo, Vec<f64>)> = Vec::new();
    for (name, idx) in &feature_cols {
        let first = &rows[0].1[*idx];
        let numeric = !spec.categorical.contains(name) && first.parse::<f64>().is_ok();
        if numeric {
            let mut values = Vec::with_capacity(n);
            for (row, r) in &rows {
                let v = r[*idx].parse::<f64>().ok().filter(|v| v.is_finite());
                values.push(v.ok_or_else(|| Error::Parse {
                    row: *row,
                    column: name.clone(),
                    value: r[*idx].clone(),
                })?);
            }
            columns.push((
                ColumnInfo {
                    name: name.clone(),
                    kind: ColumnKind::Numeric,
                    source: name.clone(),
                },
                values,
            ));
        } else {
            let (levels, codes) = encode_levels(rows.iter().map(|(_, r)| r[*idx].as_str()));
            if spec.one_hot {
                for (level_id, level) in levels.iter().enumerate() {
                    let values = codes.iter().map(|&c| f64::from(u8::from(c == level_id))).collect();
                    columns.push((
                        ColumnInfo {
                            name: format!("{name}={level}"),
                            kind: ColumnKind::Categorical,
                            source: name.clone(),
                        },
                        values,
                    ));
                }
            } else {
                columns.push((
                    ColumnInfo {
                        name: name.clone(),
                        kind: ColumnKind::Categorical,
                        source: name.clone(),
                    },
                    codes.iter().map(|&c| c as f64).collect(),
                ));
            }
        }
    }
    if spec.keep_protected_as_feature {
        columns.push((
            ColumnInfo {
                name: spec.protected_column.clone(),
                kind: ColumnKind::Categorical,
                source: spec.protected_column.clone(),
            },
            group_ids.iter().map(|&g| g as f64).collect(),
        ));
    }

    if spec.standardize {
        for (info, values) in columns.iter_mut() {
            if info.kind == ColumnKind::Numeric {
                let (mean, std) = mean_std(values.iter().copied());
                for v in values.iter_mut() {
                    *v = if std > 0.0 { (*v - mean) / std } else { 0.0 };
                }
            }
        }
    }

    let schema: Vec<ColumnInfo> = columns.iter().map(|(c, _)| c.clone()).collect();
    let samples = (0..n)
        .map(|i| {
            Sample::new(
                columns.iter().map(|(_, v)| T::of(v[i])).collect(),
                label_ids[i],
                group_ids[i],
            )
        })
        .collect();
    Dataset::from_parts(samples, schema, class_names, group_names)
}

/// Maps raw string levels to contiguous ids. Levels sort numerically when all
/// of them are integers, lexicographically otherwise.
fn encode_levels<'a>(values: impl Iterator<Item = &'a str> + Clone) -> (Vec<String>, Vec<usize>) {
    let distinct: BTreeSet<&str> = values.clone().collect();
    let mut levels: Vec<&str> = distinct.into_iter().collect();
    if levels.iter().all(|l| l.parse::<i64>().is_ok()) {
        levels.sort_by_key(|l| l.parse::<i64>().unwrap());
    }
    let index: BTreeMap<&str, usize> = levels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let ids = values.map(|v| index[v]).collect();
    (levels.into_iter().map(str::to_string).collect(), ids)
}

/// Mean and population standard deviation.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-column standardization fitted on one dataset and applied to others.
///
/// Only [`ColumnKind::Numeric`] columns are touched; zero-variance columns map
/// to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    /// `Some((mean, std))` for numeric columns.
    pub stats: Vec<Option<(f64, f64)>>,
}

impl Standardizer {
    pub fn fit<T: Scalar>(ds: &Dataset<T>) -> Self {
        let stats = ds
            .schema()
            .iter()
            .enumerate()
            .map(|(j, info)| {
                (info.kind == ColumnKind::Numeric)
                    .then(|| mean_std(ds.samples().iter().map(|s| s.features[j].as_f64())))
            })
            .collect();
        Standardizer { stats }
    }

    pub fn apply<T: Scalar>(&self, ds: &Dataset<T>) -> Result<Dataset<T>> {
        check_dim(self.stats.len(), ds.dim())?;
        let samples = ds
            .samples()
            .iter()
            .map(|s| {
                let features = s
                    .features
                    .iter()
                    .zip(&self.stats)
                    .map(|(&v, st)| match st {
                        Some((mean, std)) if *std > 0.0 => T::of((v.as_f64() - mean) / std),
                        Some(_) => T::zero(),
                        None => v,
                    })
                    .collect();
                Sample::new(features, s.label, s.protected)
            })
            .collect();
        ds.with_samples(samples)
    }
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

/// Four Gaussian blobs at `(±spacing, ±spacing)`. The class is the XOR of the
/// blob's coordinate signs; the protected attribute is the same XOR pattern
/// evaluated per sample after moving the first coordinate by `shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XorParams {
    pub spacing: f64,
    pub std: f64,
    pub shift: f64,
}

impl Default for XorParams {
    fn default() -> Self {
        XorParams {
            spacing: 0.06,
            std: 0.021,
            shift: 0.075,
        }
    }
}

/// Two regions separated along the first axis, each holding two blobs split
/// along the second axis. In region A (negative first coordinate) the blob
/// fixes both label and protected value; in region B the protected value is a
/// fair coin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalParams {
    pub region_offset: f64,
    pub blob_offset: f64,
    pub std: f64,
}

impl Default for LocalParams {
    fn default() -> Self {
        LocalParams {
            region_offset: 0.12,
            blob_offset: 0.06,
            std: 0.021,
        }
    }
}

fn check_generator(n: usize, std: f64) -> Result<Normal<f64>> {
    if n < 4 {
        return Err(Error::param(format!("generators need n >= 4, got {n}")));
    }
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::param(format!("blob std must be positive, got {std}")));
    }
    Ok(Normal::new(0.0, std).expect("validated std"))
}

/// Balanced blob assignment: exactly `n / 4` (±1) samples per blob, shuffled.
fn blob_ids<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).map(|i| i % 4).collect();
    ids.shuffle(rng);
    ids
}

pub fn gen_xor<T: Scalar>(n: usize, seed: u64, params: &XorParams) -> Result<Dataset<T>> {
    let noise = check_generator(n, params.std)?;
    let mut rng = seeded(seed, 0);
    let pos = |v: f64| usize::from(v > 0.0);
    let samples = blob_ids(n, &mut rng)
        .into_iter()
        .map(|blob| {
            let cx = if blob & 1 == 0 { -params.spacing } else { params.spacing };
            let cy = if blob & 2 == 0 { -params.spacing } else { params.spacing };
            let x = cx + noise.sample(&mut rng);
            let y = cy + noise.sample(&mut rng);
            let label = pos(cx) ^ pos(cy);
            let protected = pos(x + params.shift) ^ pos(y);
            Sample::new(vec![T::of(x), T::of(y)], label, protected)
        })
        .collect();
    Dataset::new(samples, 2, 2)
}

pub fn gen_local<T: Scalar>(n: usize, seed: u64, params: &LocalParams) -> Result<Dataset<T>> {
    let noise = check_generator(n, params.std)?;
    let mut rng = seeded(seed, 0);
    let samples = blob_ids(n, &mut rng)
        .into_iter()
        .map(|blob| {
            let in_region_a = blob < 2;
            let label = blob & 1;
            let cx = if in_region_a { -params.region_offset } else { params.region_offset };
            let cy = if label == 0 { -params.blob_offset } else { params.blob_offset };
            let x = cx + noise.sample(&mut rng);
            let y = cy + noise.sample(&mut rng);
            let protected = if in_region_a { label } else { rng.random_range(0..2) };
            Sample::new(vec![T::of(x), T::of(y)], label, protected)
        })
        .collect();
    Dataset::new(samples, 2, 2)
}

// ---------------------------------------------------------------------------
// k-fold splitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

/// Shuffled k-fold assignment; fold sizes differ by at most one.
pub fn kfold<T: Scalar>(ds: &Dataset<T>, k: usize, seed: u64) -> Result<FoldSplit> {
    kfold_by(ds.len(), k, seed, |_| 0)
}

/// Like [`kfold`], but spreads every class evenly over the folds.
pub fn kfold_stratified<T: Scalar>(ds: &Dataset<T>, k: usize, seed: u64) -> Result<FoldSplit> {
    kfold_by(ds.len(), k, seed, |i| ds.samples()[i].label)
}

fn kfold_by(n: usize, k: usize, seed: u64, stratum: impl Fn(usize) -> usize) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::param(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::param(format!("k = {k} exceeds the number of samples {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed, 1));
    // Stable sort keeps the shuffle inside each stratum; dealing round-robin
    // over the concatenation keeps global fold sizes within one of each other.
    order.sort_by_key(|&i| stratum(i));
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldSplit { k, assignments, seed })
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// `(train, test)` datasets for one fold.
    pub fn split<T: Scalar>(&self, ds: &Dataset<T>, fold: usize) -> Result<(Dataset<T>, Dataset<T>)> {
        check_dim(self.assignments.len(), ds.len())?;
        if fold >= self.k {
            return Err(Error::param(format!("fold {fold} out of range for k = {}", self.k)));
        }
        Ok((ds.subset(&self.train_indices(fold))?, ds.subset(&self.test_indices(fold))?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_spec() -> PreprocessSpec {
        let mut spec = PreprocessSpec::new("y", "s");
        spec.standardize = false;
        spec
    }

    #[test]
    fn three_row_file() {
        let text = "x,y,s\n1.5,0,a\n2.5,1,b\n3.5,1,a\n";
        let ds: Dataset<f64> = load_csv_reader(text.as_bytes(), &csv_spec()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.n_groups(), 2);
        assert_eq!(ds.dim(), 1);
        assert_eq!(ds.labels(), vec![0, 1, 1]);
        assert_eq!(ds.protected(), vec![0, 1, 0]);
    }

    #[test]
    fn zero_variance_column_becomes_zeros() {
        let text = "x,z,y,s\n2,1,0,a\n2,2,1,b\n2,4,1,a\n";
        let mut spec = csv_spec();
        spec.standardize = true;
        let ds: Dataset<f64> = load_csv_reader(text.as_bytes(), &spec).unwrap();
        assert!(ds.samples().iter().all(|s| s.features[0] == 0.0));
        let z: Vec<f64> = ds.samples().iter().map(|s| s.features[1]).collect();
        let (m, sd) = mean_std(z.iter().copied());
        assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = "x,y\n1,0\n";
        let err = load_csv_reader::<f64, _>(text.as_bytes(), &csv_spec()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn same_label_and_protected_is_schema_error() {
        let spec = PreprocessSpec::new("y", "y");
        let err = load_csv_reader::<f64, _>("y\n1\n".as_bytes(), &spec).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn bad_number_reports_row() {
        let text = "x,y,s\n1,0,a\n2,1,b\noops,1,a\n";
        match load_csv_reader::<f64, _>(text.as_bytes(), &csv_spec()).unwrap_err() {
            Error::Parse { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (3, "x", "oops"));
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn one_hot_and_missing_rows() {
        let text = "x,c,y,s\n1,red,0,a\n2,?,1,b\n3,blue,1,b\n4,red,0,a\n";
        let ds: Dataset<f64> = load_csv_reader(text.as_bytes(), &csv_spec()).unwrap();
        assert_eq!(ds.len(), 3);
        let names: Vec<&str> = ds.schema().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["x", "c=blue", "c=red"]);
        assert_eq!(ds.samples()[1].features, vec![3.0, 1.0, 0.0]);
    }

    #[test]
    fn protected_feature_and_filters() {
        let text = "x,y,s\n1,0,a\n5,1,b\n3,1,c\n2,0,b\n";
        let mut spec = csv_spec();
        spec.keep_protected_as_feature = true;
        spec.filters = vec![RowFilter::Range {
            column: "x".into(),
            min: None,
            max: Some(4.0),
        }];
        spec.protected_top_groups = Some(2);
        let ds: Dataset<f64> = load_csv_reader(text.as_bytes(), &spec).unwrap();
        // x=5 is filtered; among {a, c, b} each appears once so ties keep a, b.
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.group_names(), ["a", "b"]);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.samples()[1].features, vec![2.0, 1.0]);
    }

    #[test]
    fn positive_label_binarizes() {
        let text = "x,y,s\n1,>50K,a\n2,<=50K,b\n3,>50K.,a\n";
        let mut spec = csv_spec();
        spec.positive_label = Some(">50K".into());
        let ds: Dataset<f64> = load_csv_reader(text.as_bytes(), &spec).unwrap();
        assert_eq!(ds.labels(), vec![1, 0, 0]);
    }

    #[test]
    fn integer_levels_sort_numerically() {
        let (levels, ids) = encode_levels(["10", "2", "-1", "2"].into_iter());
        assert_eq!(levels, ["-1", "2", "10"]);
        assert_eq!(ids, vec![2, 1, 0, 1]);
    }

    #[test]
    fn generators_reject_bad_params() {
        let bad = XorParams {
            std: 0.0,
            ..XorParams::default()
        };
        assert!(gen_xor::<f64>(100, 0, &bad).is_err());
        assert!(gen_local::<f64>(3, 0, &LocalParams::default()).is_err());
    }

    #[test]
    fn xor_has_both_classes_and_groups() {
        let ds: Dataset<f64> = gen_xor(4000, 0, &XorParams::default()).unwrap();
        assert_eq!(ds.len(), 4000);
        for v in 0..2 {
            assert!(ds.labels().contains(&v));
            assert!(ds.protected().contains(&v));
        }
    }

    #[test]
    fn local_region_a_aligned() {
        let ds: Dataset<f64> = gen_local(4000, 0, &LocalParams::default()).unwrap();
        assert_eq!(ds.len(), 4000);
        let region_a: Vec<_> = ds.samples().iter().filter(|s| s.features[0] < 0.0).collect();
        assert!(region_a.len() > 1800);
        assert!(region_a.iter().all(|s| s.label == s.protected));
    }

    #[test]
    fn kfold_sizes() {
        let ds: Dataset<f64> = gen_xor(10, 1, &XorParams::default()).unwrap();
        assert_eq!(kfold(&ds, 5, 0).unwrap().fold_sizes(), vec![2; 5]);
        let ds: Dataset<f64> = gen_xor(11, 1, &XorParams::default()).unwrap();
        let mut sizes = kfold(&ds, 5, 0).unwrap().fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert!(kfold(&ds, 12, 0).is_err());
        assert!(kfold(&ds, 1, 0).is_err());
    }

    #[test]
    fn kfold_deterministic() {
        let ds: Dataset<f64> = gen_xor(50, 1, &XorParams::default()).unwrap();
        assert_eq!(kfold(&ds, 5, 9).unwrap(), kfold(&ds, 5, 9).unwrap());
        assert_ne!(kfold(&ds, 5, 9).unwrap(), kfold(&ds, 5, 10).unwrap());
    }

    #[test]
    fn stratified_spreads_classes() {
        let ds: Dataset<f64> = gen_xor(103, 3, &XorParams::default()).unwrap();
        let split = kfold_stratified(&ds, 5, 0).unwrap();
        let sizes = split.fold_sizes();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for f in 0..5 {
            let ones = split
                .test_indices(f)
                .iter()
                .filter(|&&i| ds.samples()[i].label == 1)
                .count();
            let total_ones = ds.labels().iter().filter(|&&l| l == 1).count();
            assert!((ones as f64 - total_ones as f64 / 5.0).abs() <= 1.0);
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(Dataset::<f64>::new(vec![], 2, 2).is_err());
    }
}
