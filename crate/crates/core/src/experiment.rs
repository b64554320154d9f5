//! Cross-validated comparison of FairGLVQ, INP + GLVQ, GLVQ and the constant
//! classifier, driven by a JSON config.
//!
//! Every fitted quantity (standardization statistics, prototype
//! initializations, probes, projections) sees only the training part of a
//! fold. Results are deterministic given the config.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{apply_inp, constant_classifier, fit_inp, InpPipeline};
use crate::data::{
    gen_local, gen_xor, kfold, kfold_stratified, load_csv, Dataset, FoldSplit, LocalParams,
    PreprocessSpec, Standardizer, XorParams,
};
use crate::error::{Error, Result};
use crate::fairmetrics::{evaluate, EvaluationReport, FoldMetrics, GroupCounts, Summary};
use crate::train::{train_fairglvq, train_glvq, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Xor {
        n: usize,
        #[serde(default)]
        params: XorParams,
    },
    Local {
        n: usize,
        #[serde(default)]
        params: LocalParams,
    },
    /// A delimited file. `preprocess.standardize` is applied per fold, with
    /// statistics from the training part only.
    Csv {
        path: PathBuf,
        preprocess: PreprocessSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Fairglvq {
        #[serde(default)]
        train: TrainConfig,
    },
    Glvq {
        #[serde(default)]
        train: TrainConfig,
    },
    Inp {
        #[serde(default)]
        train: TrainConfig,
        #[serde(default = "one")]
        iterations: usize,
    },
    Constant,
}

fn one() -> usize {
    1
}

fn five() -> usize {
    5
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Fairglvq { .. } => "fairglvq",
            MethodSpec::Glvq { .. } => "glvq",
            MethodSpec::Inp { .. } => "inp",
            MethodSpec::Constant => "constant",
        }
    }

    /// The regularization knob this method is run at outside of a sweep.
    fn default_reg(&self) -> f64 {
        match self {
            MethodSpec::Fairglvq { train } => train.c,
            MethodSpec::Inp { iterations, .. } => *iterations as f64,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Values of `C` for FairGLVQ.
    #[serde(default)]
    pub c: Vec<f64>,
    /// Numbers of removed directions for INP.
    #[serde(default)]
    pub inp_iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Dataset name written into result rows.
    pub name: String,
    pub dataset: DatasetSource,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "five")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    /// Stratify folds by class.
    #[serde(default)]
    pub stratify: bool,
    /// Standardize synthetic features per fold (CSV sources use their
    /// preprocess flag instead).
    #[serde(default)]
    pub standardize: bool,
    /// Favorable class for SP/EO. Defaults to the preprocess spec's value for
    /// CSV sources and to 1 otherwise.
    #[serde(default)]
    pub favorable: Option<usize>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        // relative CSV paths resolve against the config file's directory
        if let DatasetSource::Csv { path: data, .. } = &mut cfg.dataset {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::param("the experiment lists no methods"));
        }
        if self.folds < 2 {
            return Err(Error::param("cross-validation needs at least 2 folds"));
        }
        for m in &self.methods {
            match m {
                MethodSpec::Fairglvq { train }
                | MethodSpec::Glvq { train }
                | MethodSpec::Inp { train, .. } => train.validate()?,
                MethodSpec::Constant => {}
            }
        }
        Ok(())
    }

    pub fn favorable(&self) -> usize {
        match (&self.favorable, &self.dataset) {
            (Some(f), _) => *f,
            (None, DatasetSource::Csv { preprocess, .. }) => preprocess.favorable_label,
            (None, _) => 1,
        }
    }

    fn standardize_folds(&self) -> bool {
        match &self.dataset {
            DatasetSource::Csv { preprocess, .. } => preprocess.standardize,
            _ => self.standardize,
        }
    }

    /// Loads or generates the full dataset (never standardized here).
    pub fn load_dataset(&self) -> Result<Dataset<f64>> {
        match &self.dataset {
            DatasetSource::Xor { n, params } => gen_xor(*n, self.seed, params),
            DatasetSource::Local { n, params } => gen_local(*n, self.seed, params),
            DatasetSource::Csv { path, preprocess } => {
                let spec = PreprocessSpec {
                    standardize: false,
                    ..preprocess.clone()
                };
                load_csv(path, &spec)
            }
        }
    }

    pub fn split(&self, ds: &Dataset<f64>) -> Result<FoldSplit> {
        if self.stratify {
            kfold_stratified(ds, self.folds, self.seed)
        } else {
            kfold(ds, self.folds, self.seed)
        }
    }
}

/// Train/test data of one fold after per-fold preprocessing.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    pub standardizer: Option<Standardizer>,
}

pub fn prepare_fold(
    ds: &Dataset<f64>,
    split: &FoldSplit,
    fold: usize,
    standardize: bool,
) -> Result<PreparedFold> {
    let (train, test) = split.split(ds, fold)?;
    if !standardize {
        return Ok(PreparedFold {
            train,
            test,
            standardizer: None,
        });
    }
    let st = Standardizer::fit(&train);
    Ok(PreparedFold {
        train: st.apply(&train)?,
        test: st.apply(&test)?,
        standardizer: Some(st),
    })
}

/// Seed for the trainer of one fold; distinct folds get distinct streams.
fn fold_seed(base: u64, train_seed: u64, fold: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(train_seed.wrapping_mul(1_000_003))
        .wrapping_add(fold as u64)
}

/// Fits `method` at regularization `reg` on one fold and scores the test part.
pub fn run_fold(
    method: &MethodSpec,
    reg: f64,
    fold: &PreparedFold,
    seed: u64,
    favorable: usize,
) -> Result<FoldMetrics> {
    let with_seed = |train: &TrainConfig| TrainConfig {
        seed,
        ..train.clone()
    };
    match method {
        MethodSpec::Fairglvq { train } => {
            let cfg = TrainConfig {
                c: reg,
                ..with_seed(train)
            };
            let (model, _) = train_fairglvq(&fold.train, &cfg)?;
            evaluate(&model, &fold.test, favorable)
        }
        MethodSpec::Glvq { train } => {
            let (model, _) = train_glvq(&fold.train, &with_seed(train))?;
            evaluate(&model, &fold.test, favorable)
        }
        MethodSpec::Inp { train, .. } => {
            if reg < 0.0 || reg.fract() != 0.0 {
                return Err(Error::param(format!("INP iterations must be a whole number, got {reg}")));
            }
            let projection = fit_inp(&fold.train, reg as usize)?;
            let projected = apply_inp(&projection, &fold.train)?;
            let (model, _) = train_glvq(&projected, &with_seed(train))?;
            evaluate(&InpPipeline { projection, model }, &fold.test, favorable)
        }
        MethodSpec::Constant => evaluate(&constant_classifier(&fold.train), &fold.test, favorable),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub reg: f64,
    pub report: EvaluationReport,
}

impl ResultRow {
    pub fn accuracy(&self) -> Summary {
        self.report.accuracy()
    }

    pub fn sp(&self) -> Summary {
        self.report.sp_diff()
    }

    pub fn eo(&self) -> Summary {
        self.report.eo_diff()
    }
}

/// A failure that aborted one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub method: String,
    pub reg: f64,
    pub fold: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub errors: Vec<RowError>,
}

impl ResultTable {
    pub fn row(&self, method: &str, reg: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.reg == reg)
    }

    pub fn rows_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            let (acc, sp, eo) = (r.accuracy(), r.sp(), r.eo());
            w.write_record([
                r.dataset.clone(),
                r.method.clone(),
                r.reg.to_string(),
                acc.mean.to_string(),
                acc.std.to_string(),
                sp.mean.to_string(),
                sp.std.to_string(),
                eo.mean.to_string(),
                eo.std.to_string(),
            ])?;
        }
        finish_csv(w)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let rows: Vec<JsonRow> = self
            .rows
            .iter()
            .map(|r| JsonRow {
                dataset: r.dataset.clone(),
                method: r.method.clone(),
                reg: r.reg,
                acc_mean: r.accuracy().mean,
                acc_std: r.accuracy().std,
                sp_mean: r.sp().mean,
                sp_std: r.sp().std,
                eo_mean: r.eo().mean,
                eo_std: r.eo().std,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }

    /// One line per (method, regularization, fold).
    pub fn folds_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "regularization", "fold", "acc", "sp", "eo"])?;
        for r in &self.rows {
            for (i, f) in r.report.folds.iter().enumerate() {
                w.write_record([
                    r.method.clone(),
                    r.reg.to_string(),
                    i.to_string(),
                    f.accuracy.to_string(),
                    f.sp_diff.to_string(),
                    f.eo_diff.to_string(),
                ])?;
            }
        }
        finish_csv(w)
    }
}

pub const CSV_COLUMNS: [&str; 9] = [
    "dataset", "method", "reg", "acc_mean", "acc_std", "sp_mean", "sp_std", "eo_mean", "eo_std",
];

/// JSON form of one aggregate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonRow {
    pub dataset: String,
    pub method: String,
    pub reg: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub sp_mean: f64,
    pub sp_std: f64,
    pub eo_mean: f64,
    pub eo_std: f64,
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn emit(table: &ResultTable, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => table.to_csv_string()?,
        OutputFormat::Json => table.to_json_string()?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Runs every `(method, reg)` job over all folds. A failing fold drops its
/// row and is recorded in [`ResultTable::errors`].
fn run_jobs(cfg: &ExperimentConfig, jobs: &[(&MethodSpec, f64)]) -> Result<ResultTable> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let split = cfg.split(&ds)?;
    let standardize = cfg.standardize_folds();
    let folds = (0..cfg.folds)
        .map(|f| prepare_fold(&ds, &split, f, standardize))
        .collect::<Result<Vec<_>>>()?;
    let favorable = cfg.favorable();

    let mut table = ResultTable::default();
    for &(method, reg) in jobs {
        let train_seed = match method {
            MethodSpec::Fairglvq { train } | MethodSpec::Glvq { train } | MethodSpec::Inp { train, .. } => {
                train.seed
            }
            MethodSpec::Constant => 0,
        };
        let mut report = EvaluationReport::default();
        let mut failed = false;
        for (f, fold) in folds.iter().enumerate() {
            match run_fold(method, reg, fold, fold_seed(cfg.seed, train_seed, f), favorable) {
                Ok(m) => report.push(m),
                Err(e) => {
                    table.errors.push(RowError {
                        method: method.name().to_string(),
                        reg,
                        fold: f,
                        message: e.to_string(),
                    });
                    failed = true;
                    break;
                }
            }
        }
        if !failed {
            table.rows.push(ResultRow {
                dataset: cfg.name.clone(),
                method: method.name().to_string(),
                reg,
                report,
            });
        }
    }
    Ok(table)
}

/// One row per configured method at its own hyperparameters.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let jobs: Vec<(&MethodSpec, f64)> = cfg.methods.iter().map(|m| (m, m.default_reg())).collect();
    run_jobs(cfg, &jobs)
}

/// FairGLVQ over the swept `C` values and INP over the swept iteration counts,
/// each in ascending order; GLVQ and the constant model once as references.
pub fn sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::param("sweep mode needs a `sweep` section"))?;
    let mut c_values = spec.c.clone();
    c_values.sort_by(f64::total_cmp);
    let mut iterations = spec.inp_iterations.clone();
    iterations.sort_unstable();

    let mut jobs: Vec<(&MethodSpec, f64)> = Vec::new();
    for m in &cfg.methods {
        match m {
            MethodSpec::Fairglvq { .. } => {
                if c_values.is_empty() {
                    return Err(Error::param("sweep.c is empty but fairglvq is listed"));
                }
                jobs.extend(c_values.iter().map(|&c| (m, c)));
            }
            MethodSpec::Inp { .. } => {
                if iterations.is_empty() {
                    return Err(Error::param("sweep.inp_iterations is empty but inp is listed"));
                }
                jobs.extend(iterations.iter().map(|&k| (m, k as f64)));
            }
            _ => jobs.push((m, m.default_reg())),
        }
    }
    run_jobs(cfg, &jobs)
}

/// Metrics from a predictions file with columns `label`, `prediction`,
/// `protected` and optionally `fold`.
pub fn evaluate_predictions<R: Read>(reader: R, favorable: usize) -> Result<EvaluationReport> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };
    let (yi, pi, si) = (col("label")?, col("prediction")?, col("protected")?);
    let fi = header.iter().position(|h| h == "fold");

    let mut per_fold: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>, Vec<usize>)> =
        Default::default();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize, name: &str| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::Parse {
                row: row + 1,
                column: name.to_string(),
                value: rec[i].to_string(),
            })
        };
        let fold = match fi {
            Some(i) => get(i, "fold")?,
            None => 0,
        };
        let entry = per_fold.entry(fold).or_default();
        entry.0.push(get(yi, "label")?);
        entry.1.push(get(pi, "prediction")?);
        entry.2.push(get(si, "protected")?);
    }
    if per_fold.is_empty() {
        return Err(Error::UndefinedMetric("the predictions file has no rows".into()));
    }
    let mut report = EvaluationReport::default();
    for (y, p, s) in per_fold.values() {
        let counts = GroupCounts::from_triples(y, p, s)?;
        report.push(FoldMetrics::from_counts(&counts, favorable)?);
    }
    Ok(report)
}
