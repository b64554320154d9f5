//! Accuracy, statistical-parity difference and equal-opportunity difference
//! for a binary target and a binary protected attribute.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::scalar::Scalar;

/// Counts indexed by `[group][true label][predicted label]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub counts: [[[usize; 2]; 2]; 2],
}

fn binary(value: usize, what: &str) -> Result<usize> {
    if value < 2 {
        Ok(value)
    } else {
        Err(Error::Unsupported(format!("{what} {value} is not binary")))
    }
}

impl GroupCounts {
    pub fn from_triples(y_true: &[usize], y_pred: &[usize], groups: &[usize]) -> Result<Self> {
        if y_true.len() != y_pred.len() || y_true.len() != groups.len() {
            return Err(Error::param("label, prediction and group vectors differ in length"));
        }
        let mut c = GroupCounts::default();
        for ((&y, &p), &g) in y_true.iter().zip(y_pred).zip(groups) {
            c.counts[binary(g, "group")?][binary(y, "label")?][binary(p, "prediction")?] += 1;
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().flatten().sum()
    }

    pub fn accuracy(&self) -> Result<f64> {
        let n = self.total();
        if n == 0 {
            return Err(Error::UndefinedMetric("accuracy of an empty sample".into()));
        }
        let hits: usize = self.counts.iter().map(|g| g[0][0] + g[1][1]).sum();
        Ok(hits as f64 / n as f64)
    }

    /// `P̂(ŷ = favorable | s = g)`, optionally conditioned on `y = favorable`.
    fn favorable_rate(&self, group: usize, favorable: usize, given_favorable: bool) -> Result<f64> {
        let rows: &[[usize; 2]] = if given_favorable {
            std::slice::from_ref(&self.counts[group][favorable])
        } else {
            &self.counts[group]
        };
        let total: usize = rows.iter().map(|r| r[0] + r[1]).sum();
        if total == 0 {
            return Err(Error::UndefinedMetric(if given_favorable {
                format!("group {group} has no sample with the favorable true label")
            } else {
                format!("group {group} is absent")
            }));
        }
        let hits: usize = rows.iter().map(|r| r[favorable]).sum();
        Ok(hits as f64 / total as f64)
    }

    pub fn statistical_parity_diff(&self, favorable: usize) -> Result<f64> {
        let favorable = binary(favorable, "favorable label")?;
        Ok((self.favorable_rate(0, favorable, false)? - self.favorable_rate(1, favorable, false)?).abs())
    }

    pub fn equal_opportunity_diff(&self, favorable: usize) -> Result<f64> {
        let favorable = binary(favorable, "favorable label")?;
        Ok((self.favorable_rate(0, favorable, true)? - self.favorable_rate(1, favorable, true)?).abs())
    }
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::param("label and prediction vectors differ in length"));
    }
    if y_true.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty sample".into()));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// `|P̂(ŷ=fav | s=0) − P̂(ŷ=fav | s=1)|`.
pub fn statistical_parity_diff(y_pred: &[usize], groups: &[usize], favorable: usize) -> Result<f64> {
    let y_true = vec![0; y_pred.len()];
    GroupCounts::from_triples(&y_true, y_pred, groups)?.statistical_parity_diff(favorable)
}

/// `|P̂(ŷ=fav | y=fav, s=0) − P̂(ŷ=fav | y=fav, s=1)|`.
pub fn equal_opportunity_diff(
    y_true: &[usize],
    y_pred: &[usize],
    groups: &[usize],
    favorable: usize,
) -> Result<f64> {
    GroupCounts::from_triples(y_true, y_pred, groups)?.equal_opportunity_diff(favorable)
}

/// Metrics of one evaluated fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub sp_diff: f64,
    pub eo_diff: f64,
}

impl FoldMetrics {
    pub fn from_counts(counts: &GroupCounts, favorable: usize) -> Result<Self> {
        Ok(FoldMetrics {
            accuracy: counts.accuracy()?,
            sp_diff: counts.statistical_parity_diff(favorable)?,
            eo_diff: counts.equal_opportunity_diff(favorable)?,
        })
    }
}

/// Predicts every test sample and computes all three metrics in one pass.
pub fn evaluate<T: Scalar, C: Classifier<T> + ?Sized>(
    classifier: &C,
    test: &Dataset<T>,
    favorable: usize,
) -> Result<FoldMetrics> {
    let mut counts = GroupCounts::default();
    for s in test.samples() {
        let pred = classifier.predict(&s.features)?;
        counts.counts[binary(s.protected, "group")?][binary(s.label, "label")?]
            [binary(pred, "prediction")?] += 1;
    }
    FoldMetrics::from_counts(&counts, favorable)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n − 1); zero for a single fold.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

/// Per-fold metrics with their aggregates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub folds: Vec<FoldMetrics>,
}

impl EvaluationReport {
    pub fn push(&mut self, m: FoldMetrics) {
        self.folds.push(m);
    }

    pub fn accuracy(&self) -> Summary {
        Summary::of(&self.folds.iter().map(|f| f.accuracy).collect::<Vec<_>>())
    }

    pub fn sp_diff(&self) -> Summary {
        Summary::of(&self.folds.iter().map(|f| f.sp_diff).collect::<Vec<_>>())
    }

    pub fn eo_diff(&self) -> Summary {
        Summary::of(&self.folds.iter().map(|f| f.eo_diff).collect::<Vec<_>>())
    }
}
