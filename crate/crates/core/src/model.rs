//! Prototype models: squared Euclidean distances, winner-takes-all
//! classification, relative margins and the GLVQ / FairGLVQ costs.

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{check_dim, Error, Result};
use crate::scalar::{sq_diff_sum, Scalar};

/// Anything that maps a feature vector to a class id.
pub trait Classifier<T> {
    fn predict(&self, x: &[T]) -> Result<usize>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype<T> {
    #[serde(rename = "w")]
    pub position: Vec<T>,
    pub class_label: usize,
    /// Majority protected value of the receptive field; maintained by training.
    pub pseudo_class: usize,
}

impl<T> Prototype<T> {
    pub fn new(position: Vec<T>, class_label: usize, pseudo_class: usize) -> Self {
        Prototype {
            position,
            class_label,
            pseudo_class,
        }
    }
}

/// A labeled prototype set classifying by the nearest prototype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc<T>", into = "ModelDoc<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PrototypeModel<T> {
    prototypes: Vec<Prototype<T>>,
    dim: usize,
    n_classes: usize,
    n_groups: usize,
    beta: T,
}

/// On-disk layout of a model.
#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
struct ModelDoc<T> {
    d: usize,
    beta: T,
    n_classes: usize,
    n_groups: usize,
    prototypes: Vec<Prototype<T>>,
}

impl<T: Scalar> TryFrom<ModelDoc<T>> for PrototypeModel<T> {
    type Error = Error;

    fn try_from(doc: ModelDoc<T>) -> Result<Self> {
        let model = PrototypeModel::new(doc.prototypes, doc.n_classes, doc.n_groups, doc.beta)?;
        check_dim(doc.d, model.dim)?;
        Ok(model)
    }
}

impl<T: Scalar> From<PrototypeModel<T>> for ModelDoc<T> {
    fn from(m: PrototypeModel<T>) -> Self {
        ModelDoc {
            d: m.dim,
            beta: m.beta,
            n_classes: m.n_classes,
            n_groups: m.n_groups,
            prototypes: m.prototypes,
        }
    }
}

impl<T: Scalar> PrototypeModel<T> {
    pub fn new(
        prototypes: Vec<Prototype<T>>,
        n_classes: usize,
        n_groups: usize,
        beta: T,
    ) -> Result<Self> {
        if prototypes.len() < 2 {
            return Err(Error::ModelInvariant(format!(
                "need at least 2 prototypes, got {}",
                prototypes.len()
            )));
        }
        if !(beta > T::zero() && beta.is_finite()) {
            return Err(Error::param(format!("activation beta must be positive, got {beta}")));
        }
        if n_groups == 0 {
            return Err(Error::param("need at least one protected group"));
        }
        let dim = prototypes[0].position.len();
        let mut seen = vec![false; n_classes];
        for (j, p) in prototypes.iter().enumerate() {
            check_dim(dim, p.position.len())?;
            if p.position.iter().any(|v| !v.is_finite()) {
                return Err(Error::ModelInvariant(format!("prototype {j} is not finite")));
            }
            if p.class_label >= n_classes || p.pseudo_class >= n_groups {
                return Err(Error::ModelInvariant(format!(
                    "prototype {j} has class {} / pseudo-class {} outside {n_classes} / {n_groups}",
                    p.class_label, p.pseudo_class
                )));
            }
            seen[p.class_label] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::ModelInvariant(format!("class {c} has no prototype")));
        }
        Ok(PrototypeModel {
            prototypes,
            dim,
            n_classes,
            n_groups,
            beta,
        })
    }

    pub fn prototypes(&self) -> &[Prototype<T>] {
        &self.prototypes
    }

    pub fn len(&self) -> usize {
        self.prototypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.is_empty()
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

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn pseudo_classes(&self) -> Vec<usize> {
        self.prototypes.iter().map(|p| p.pseudo_class).collect()
    }

    pub(crate) fn position_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.prototypes[j].position
    }

    pub(crate) fn set_pseudo_class(&mut self, j: usize, group: usize) {
        debug_assert!(group < self.n_groups);
        self.prototypes[j].pseudo_class = group;
    }

    /// Squared distances from `x` to every prototype.
    pub fn distances(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, x.len())?;
        Ok(self.distances_unchecked(x))
    }

    pub(crate) fn distances_unchecked(&self, x: &[T]) -> Vec<T> {
        self.prototypes
            .iter()
            .map(|p| sq_diff_sum(x, &p.position))
            .collect()
    }

    /// Index of the winning prototype; ties go to the lowest index.
    pub fn nearest_index(&self, x: &[T]) -> Result<usize> {
        check_dim(self.dim, x.len())?;
        Ok(self.nearest_unchecked(x))
    }

    pub(crate) fn nearest_unchecked(&self, x: &[T]) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (j, p) in self.prototypes.iter().enumerate() {
            let d = sq_diff_sum(x, &p.position);
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        best
    }

    pub fn classify(&self, x: &[T]) -> Result<usize> {
        Ok(self.prototypes[self.nearest_index(x)?].class_label)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl<T: Scalar> Classifier<T> for PrototypeModel<T> {
    fn predict(&self, x: &[T]) -> Result<usize> {
        self.classify(x)
    }
}

pub fn sq_dist<T: Scalar>(x: &[T], w: &[T]) -> Result<T> {
    check_dim(x.len(), w.len())?;
    Ok(sq_diff_sum(x, w))
}

/// Which prototype label a margin is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginMode {
    Class,
    Pseudo,
}

/// Nearest "correct" and "incorrect" prototypes for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginPair<T> {
    pub d_plus: T,
    pub d_minus: T,
    pub idx_plus: Option<usize>,
    pub idx_minus: Option<usize>,
    /// One of the two distances was synthesized with the `alpha` rule.
    pub simulated: bool,
    /// The `alpha` used for a simulated side.
    pub alpha: T,
}

pub fn margin_pair<T: Scalar>(
    model: &PrototypeModel<T>,
    x: &[T],
    target: usize,
    mode: MarginMode,
    alpha: T,
) -> Result<MarginPair<T>> {
    let dists = model.distances(x)?;
    pair_from_distances(model, &dists, target, mode, alpha)
}

/// [`margin_pair`] over precomputed distances.
pub(crate) fn pair_from_distances<T: Scalar>(
    model: &PrototypeModel<T>,
    dists: &[T],
    target: usize,
    mode: MarginMode,
    alpha: T,
) -> Result<MarginPair<T>> {
    let key = |p: &Prototype<T>| match mode {
        MarginMode::Class => p.class_label,
        MarginMode::Pseudo => p.pseudo_class,
    };
    let mut plus: Option<(usize, T)> = None;
    let mut minus: Option<(usize, T)> = None;
    for (j, (p, &d)) in model.prototypes.iter().zip(dists).enumerate() {
        let slot = if key(p) == target { &mut plus } else { &mut minus };
        if slot.is_none_or(|(_, best)| d < best) {
            *slot = Some((j, d));
        }
    }
    match (plus, minus) {
        (Some((ip, dp)), Some((im, dm))) => Ok(MarginPair {
            d_plus: dp,
            d_minus: dm,
            idx_plus: Some(ip),
            idx_minus: Some(im),
            simulated: false,
            alpha,
        }),
        (plus, _) if mode == MarginMode::Class => Err(Error::ModelInvariant(format!(
            "class {target} lacks a {} prototype",
            if plus.is_none() { "same-class" } else { "different-class" }
        ))),
        (plus, minus) => {
            if !(alpha > T::one()) {
                return Err(Error::param(format!("alpha must exceed 1, got {alpha}")));
            }
            Ok(match (plus, minus) {
                (Some((ip, dp)), None) => MarginPair {
                    d_plus: dp,
                    d_minus: dp / alpha,
                    idx_plus: Some(ip),
                    idx_minus: None,
                    simulated: true,
                    alpha,
                },
                (None, Some((im, dm))) => MarginPair {
                    d_plus: alpha * dm,
                    d_minus: dm,
                    idx_plus: None,
                    idx_minus: Some(im),
                    simulated: true,
                    alpha,
                },
                _ => unreachable!("a model has at least two prototypes"),
            })
        }
    }
}

/// `(d⁺ − d⁻)/(d⁺ + d⁻)`; zero when both distances vanish. A simulated pair
/// evaluates to `(α − 1)/(α + 1)` whatever the surviving distance.
pub fn rel_margin<T: Scalar>(p: &MarginPair<T>) -> T {
    if p.simulated {
        return (p.alpha - T::one()) / (p.alpha + T::one());
    }
    let sum = p.d_plus + p.d_minus;
    if sum == T::zero() {
        T::zero()
    } else {
        (p.d_plus - p.d_minus) / sum
    }
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `x · σ(βx)`.
pub fn swish<T: Scalar>(x: T, beta: T) -> T {
    x * sigmoid(beta * x)
}

/// Derivative of [`swish`] in `x`.
pub fn swish_prime<T: Scalar>(x: T, beta: T) -> T {
    let s = sigmoid(beta * x);
    s + beta * x * s * (T::one() - s)
}

/// `Σ Φ(μ_class(x))` over `samples`.
pub fn glvq_cost<T: Scalar>(model: &PrototypeModel<T>, samples: &[Sample<T>]) -> Result<T> {
    samples.iter().try_fold(T::zero(), |acc, s| {
        let pair = margin_pair(model, &s.features, s.label, MarginMode::Class, T::one())?;
        Ok(acc + swish(rel_margin(&pair), model.beta))
    })
}

/// `Σ Φ(μ_class(x)) − C·Φ(μ_fair(x))`, the fair term using pseudo-classes and
/// the `alpha` rule for a missing side.
pub fn fair_cost<T: Scalar>(
    model: &PrototypeModel<T>,
    samples: &[Sample<T>],
    c: T,
    alpha: T,
) -> Result<T> {
    samples.iter().try_fold(T::zero(), |acc, s| {
        let dists = model.distances(&s.features)?;
        let class = pair_from_distances(model, &dists, s.label, MarginMode::Class, alpha)?;
        let fair = pair_from_distances(model, &dists, s.protected, MarginMode::Pseudo, alpha)?;
        Ok(acc + swish(rel_margin(&class), model.beta) - c * swish(rel_margin(&fair), model.beta))
    })
}
