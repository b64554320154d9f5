//! Iterative null-space projection (INP) and the constant classifier.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample};
use crate::error::{check_dim, Error, Result};
use crate::model::{Classifier, PrototypeModel};
use crate::scalar::{dot, norm, Scalar};

const PROBE_ITERATIONS: usize = 500;
const PROBE_STEP: f64 = 0.1;
/// A direction whose component outside the removed span is shorter than this
/// is treated as already removed.
const SPAN_TOL: f64 = 1e-10;

/// Logistic-regression predictor of the protected attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LinearProbe<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Scalar> LinearProbe<T> {
    pub fn predict(&self, x: &[T]) -> usize {
        usize::from(dot(&self.weights, x) + self.bias > T::zero())
    }

    pub fn accuracy(&self, ds: &Dataset<T>) -> f64 {
        let hits = ds
            .samples()
            .iter()
            .filter(|s| self.predict(&s.features) == s.protected)
            .count();
        hits as f64 / ds.len() as f64
    }
}

/// Full-batch gradient descent on the mean logistic loss, from zero weights.
/// Features are standardized internally and the weights mapped back, so the
/// fitted direction does not depend on feature scale. Constant columns get
/// weight zero.
pub fn fit_probe<T: Scalar>(ds: &Dataset<T>) -> Result<LinearProbe<T>> {
    if ds.n_groups() != 2 {
        return Err(Error::Unsupported(format!(
            "linear probes need a binary protected attribute, got {} groups",
            ds.n_groups()
        )));
    }
    let d = ds.dim();
    let n = T::of(ds.len() as f64);
    let mut mean = vec![T::zero(); d];
    for s in ds.samples() {
        for (m, &x) in mean.iter_mut().zip(&s.features) {
            *m = *m + x;
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / n);
    let mut scale = vec![T::zero(); d];
    for s in ds.samples() {
        for ((v, &x), &m) in scale.iter_mut().zip(&s.features).zip(&mean) {
            *v = *v + (x - m) * (x - m);
        }
    }
    // 1/std, or 0 for a constant column
    for v in scale.iter_mut() {
        let sd = (*v / n).sqrt();
        *v = if sd > T::zero() { T::one() / sd } else { T::zero() };
    }
    let standardized: Vec<Vec<T>> = ds
        .samples()
        .iter()
        .map(|s| {
            s.features
                .iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((&x, &m), &k)| (x - m) * k)
                .collect()
        })
        .collect();

    let step = T::of(PROBE_STEP);
    let inv_n = T::one() / n;
    let mut w = vec![T::zero(); d];
    let mut b = T::zero();
    let mut grad = vec![T::zero(); d];
    for _ in 0..PROBE_ITERATIONS {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut grad_b = T::zero();
        for (z_row, s) in standardized.iter().zip(ds.samples()) {
            let z = dot(&w, z_row) + b;
            let p = T::one() / (T::one() + (-z).exp());
            let err = p - T::of(s.protected as f64);
            for (g, &x) in grad.iter_mut().zip(z_row) {
                *g = *g + err * x;
            }
            grad_b = grad_b + err;
        }
        for (wk, &g) in w.iter_mut().zip(&grad) {
            *wk = *wk - step * g * inv_n;
        }
        b = b - step * grad_b * inv_n;
    }
    let weights: Vec<T> = w.iter().zip(&scale).map(|(&wk, &k)| wk * k).collect();
    let bias = b - dot(&weights, &mean);
    Ok(LinearProbe { weights, bias })
}

/// Stack of removed directions and the composed projection onto their
/// orthogonal complement (row-major `d × d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ProjectionStack<T> {
    pub dim: usize,
    pub directions: Vec<Vec<T>>,
    pub composed: Vec<T>,
}

impl<T: Scalar> ProjectionStack<T> {
    pub fn identity(dim: usize) -> Self {
        let mut composed = vec![T::zero(); dim * dim];
        for i in 0..dim {
            composed[i * dim + i] = T::one();
        }
        ProjectionStack {
            dim,
            directions: Vec::new(),
            composed,
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.composed[i * self.dim..(i + 1) * self.dim]
    }

    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, x.len())?;
        Ok((0..self.dim).map(|i| dot(self.row(i), x)).collect())
    }

    /// Removes the probe's weight direction. The direction is first reduced to
    /// its component inside the current range, so the composed matrix stays a
    /// symmetric projection and the rank drops by one unless the direction was
    /// already removed.
    pub fn add_nullspace_iteration(&mut self, probe: &LinearProbe<T>) -> Result<()> {
        check_dim(self.dim, probe.weights.len())?;
        let len = norm(&probe.weights);
        if len == T::zero() || !len.is_finite() {
            return Err(Error::DegenerateProbe);
        }
        let u: Vec<T> = probe.weights.iter().map(|&v| v / len).collect();
        let residual = self.project(&u)?;
        let r_len = norm(&residual);
        if r_len > T::of(SPAN_TOL) {
            let v: Vec<T> = residual.iter().map(|&r| r / r_len).collect();
            // (I − vvᵀ)P = P − vvᵀ for v in range(P)
            let d = self.dim;
            for i in 0..d {
                for j in 0..d {
                    self.composed[i * d + j] = self.composed[i * d + j] - v[i] * v[j];
                }
            }
        }
        self.directions.push(u);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stack: Self = serde_json::from_str(text)?;
        check_dim(stack.dim * stack.dim, stack.composed.len())?;
        Ok(stack)
    }
}

/// Repeats {fit probe on the projected data, remove its direction}.
pub fn fit_inp<T: Scalar>(ds: &Dataset<T>, iterations: usize) -> Result<ProjectionStack<T>> {
    if iterations > ds.dim() {
        return Err(Error::param(format!(
            "cannot remove {iterations} directions from {}-dimensional data",
            ds.dim()
        )));
    }
    let mut stack = ProjectionStack::identity(ds.dim());
    let mut projected = ds.clone();
    for _ in 0..iterations {
        let probe = fit_probe(&projected)?;
        stack.add_nullspace_iteration(&probe)?;
        projected = apply_inp(&stack, ds)?;
    }
    Ok(stack)
}

/// `x ↦ P·x` for every sample.
pub fn apply_inp<T: Scalar>(stack: &ProjectionStack<T>, ds: &Dataset<T>) -> Result<Dataset<T>> {
    check_dim(stack.dim, ds.dim())?;
    let samples = ds
        .samples()
        .iter()
        .map(|s| Ok(Sample::new(stack.project(&s.features)?, s.label, s.protected)))
        .collect::<Result<Vec<_>>>()?;
    ds.with_samples(samples)
}

/// A prototype model trained on projected data; inputs are projected first.
#[derive(Debug, Clone, PartialEq)]
pub struct InpPipeline<T> {
    pub projection: ProjectionStack<T>,
    pub model: PrototypeModel<T>,
}

impl<T: Scalar> Classifier<T> for InpPipeline<T> {
    fn predict(&self, x: &[T]) -> Result<usize> {
        self.model.classify(&self.projection.project(x)?)
    }
}

/// Always predicts the most frequent training class (ties to the lowest id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantClassifier {
    pub class: usize,
}

pub fn constant_classifier<T: Scalar>(train: &Dataset<T>) -> ConstantClassifier {
    let mut counts = vec![0usize; train.n_classes()];
    for s in train.samples() {
        counts[s.label] += 1;
    }
    let class = counts
        .iter()
        .enumerate()
        .fold(0, |best, (c, &n)| if n > counts[best] { c } else { best });
    ConstantClassifier { class }
}

impl<T> Classifier<T> for ConstantClassifier {
    fn predict(&self, _x: &[T]) -> Result<usize> {
        Ok(self.class)
    }
}
