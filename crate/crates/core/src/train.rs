//! Prototype initialization and mini-batch training for GLVQ and FairGLVQ.
//!
//! Both trainers share one step loop. Each step draws a fresh batch without
//! replacement, accumulates class-term and fair-term gradients separately,
//! normalizes each by its own counter and moves the prototypes. FairGLVQ then
//! re-derives every prototype's pseudo-class by majority vote over the whole
//! training set.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::model::{
    pair_from_distances, rel_margin, swish, swish_prime, MarginMode, MarginPair, Prototype,
    PrototypeModel,
};
use crate::rng::seeded;
use crate::scalar::{sq_diff_sum, Scalar};

const STREAM_INIT: u64 = 10;
const STREAM_BATCH: u64 = 11;
const STREAM_PSEUDO: u64 = 12;

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Number of mini-batch steps.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the fairness term.
    pub c: f64,
    /// Distance ratio used when one pseudo-class side has no prototype.
    pub alpha: f64,
    pub prototypes_per_class: usize,
    /// Std of the Gaussian jitter added by the fairness-adapted initialization.
    pub init_perturbation: f64,
    pub seed: u64,
    /// Swish activation parameter.
    pub beta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 250,
            batch_size: 250,
            learning_rate: 0.005,
            c: 0.0,
            alpha: 2.0,
            prototypes_per_class: 4,
            init_perturbation: 0.01,
            seed: 0,
            beta: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be positive"));
        }
        if !positive(self.learning_rate) {
            return Err(Error::param(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::param(format!("C must be nonnegative, got {}", self.c)));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(Error::param(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if self.prototypes_per_class == 0 {
            return Err(Error::param("prototypes_per_class must be positive"));
        }
        if !(self.init_perturbation >= 0.0 && self.init_perturbation.is_finite()) {
            return Err(Error::param("init_perturbation must be nonnegative"));
        }
        if !positive(self.beta) {
            return Err(Error::param(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        if self.batch_size > n {
            return Err(Error::param(format!(
                "batch size {} exceeds the {n} training samples",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Cost of the batch at the prototypes before the update.
    pub cost: f64,
    /// Euclidean norm of the stacked prototype displacement.
    pub displacement: f64,
    /// FNV-1a hash of the pseudo-class vector after the step.
    pub pseudo_hash: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

impl TrainLog {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "cost", "displacement", "pseudo_hash"])?;
        for r in &self.records {
            w.write_record([
                r.step.to_string(),
                r.cost.to_string(),
                r.displacement.to_string(),
                r.pseudo_hash.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn pseudo_hash(classes: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &c in classes {
        for b in (c as u64).to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

// ---------------------------------------------------------------------------
// k-means and initialization
// ---------------------------------------------------------------------------

/// Lloyd's algorithm from `k` distinct random points. Stops once no center
/// moves by 1e-6 or after 100 iterations. An empty cluster is re-seeded at the
/// point farthest from its current center.
pub fn kmeans<T: Scalar>(points: &[&[T]], k: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    kmeans_with(points, k, &mut seeded(seed, STREAM_INIT))
}

fn kmeans_with<T: Scalar, R: Rng>(points: &[&[T]], k: usize, rng: &mut R) -> Result<Vec<Vec<T>>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::param(format!("k-means needs 1 <= k <= {n}, got k = {k}")));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: p.len(),
        });
    }
    let mut centers: Vec<Vec<T>> = index::sample(rng, n, k)
        .into_iter()
        .map(|i| points[i].to_vec())
        .collect();
    let mut assign = vec![0usize; n];
    let mut dist = vec![T::zero(); n];
    for _ in 0..KMEANS_MAX_ITER {
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest_center(&centers, p);
            assign[i] = j;
            dist[i] = d;
        }
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, &v) in sums[assign[i]].iter_mut().zip(p.iter()) {
                *s = *s + v;
            }
        }
        let mut moved = T::zero();
        for j in 0..k {
            let next = if counts[j] == 0 {
                let far = (0..n)
                    .fold(0, |best, i| if dist[i] > dist[best] { i } else { best });
                dist[far] = T::zero();
                points[far].to_vec()
            } else {
                let inv = T::one() / T::of(counts[j] as f64);
                sums[j].iter().map(|&s| s * inv).collect()
            };
            moved = moved.max(sq_diff_sum(&centers[j], &next).sqrt());
            centers[j] = next;
        }
        if moved < T::of(KMEANS_TOL) {
            break;
        }
    }
    Ok(centers)
}

fn nearest_center<T: Scalar>(centers: &[Vec<T>], p: &[T]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (j, c) in centers.iter().enumerate() {
        let d = sq_diff_sum(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Class-wise k-means: `prototypes_per_class` prototypes per class, placed at
/// the cluster centers of that class's samples.
pub fn init_glvq<T: Scalar>(ds: &Dataset<T>, cfg: &TrainConfig) -> Result<PrototypeModel<T>> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed, STREAM_INIT);
    let mut protos = Vec::new();
    for class in 0..ds.n_classes() {
        let points: Vec<&[T]> = ds
            .samples()
            .iter()
            .filter(|s| s.label == class)
            .map(|s| s.features.as_slice())
            .collect();
        if points.len() < cfg.prototypes_per_class {
            return Err(Error::param(format!(
                "class {class} has {} samples, fewer than {} prototypes",
                points.len(),
                cfg.prototypes_per_class
            )));
        }
        for center in kmeans_with(&points, cfg.prototypes_per_class, &mut rng)? {
            protos.push(Prototype::new(center, class, 0));
        }
    }
    let mut model = PrototypeModel::new(protos, ds.n_classes(), ds.n_groups(), T::of(cfg.beta))?;
    update_pseudo_classes(&mut model, ds.samples(), &mut rng);
    Ok(model)
}

/// Label-agnostic k-means over all samples, then one jittered prototype of
/// every class at every center.
pub fn init_fair<T: Scalar>(ds: &Dataset<T>, cfg: &TrainConfig) -> Result<PrototypeModel<T>> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed, STREAM_INIT);
    let points: Vec<&[T]> = ds.samples().iter().map(|s| s.features.as_slice()).collect();
    let centers = kmeans_with(&points, cfg.prototypes_per_class, &mut rng)?;
    let jitter = Normal::new(0.0, cfg.init_perturbation).expect("validated perturbation");
    let mut protos = Vec::with_capacity(centers.len() * ds.n_classes());
    for center in &centers {
        for class in 0..ds.n_classes() {
            let w = center
                .iter()
                .map(|&v| v + T::of(jitter.sample(&mut rng)))
                .collect();
            protos.push(Prototype::new(w, class, 0));
        }
    }
    let mut model = PrototypeModel::new(protos, ds.n_classes(), ds.n_groups(), T::of(cfg.beta))?;
    update_pseudo_classes(&mut model, ds.samples(), &mut rng);
    Ok(model)
}

/// Sets every prototype's pseudo-class to the most frequent protected value in
/// its receptive field (ties to the lowest id). Prototypes that win no sample
/// draw a group uniformly from `rng`.
pub fn update_pseudo_classes<T: Scalar, R: Rng>(
    model: &mut PrototypeModel<T>,
    samples: &[Sample<T>],
    rng: &mut R,
) {
    let groups = model.n_groups();
    let mut counts = vec![vec![0usize; groups]; model.len()];
    for s in samples {
        counts[model.nearest_unchecked(&s.features)][s.protected] += 1;
    }
    for (j, field) in counts.iter().enumerate() {
        let group = if field.iter().all(|&c| c == 0) {
            rng.random_range(0..groups)
        } else {
            field
                .iter()
                .enumerate()
                .fold(0, |best, (g, &c)| if c > field[best] { g } else { best })
        };
        model.set_pseudo_class(j, group);
    }
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/// Per-prototype gradient sums for the class and fairness terms of one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientAccumulator<T> {
    pub g_class: Vec<Vec<T>>,
    pub g_fair: Vec<Vec<T>>,
    pub n_class: usize,
    pub n_fair: usize,
}

impl<T: Scalar> GradientAccumulator<T> {
    pub fn new(prototypes: usize, dim: usize) -> Self {
        GradientAccumulator {
            g_class: vec![vec![T::zero(); dim]; prototypes],
            g_fair: vec![vec![T::zero(); dim]; prototypes],
            n_class: 0,
            n_fair: 0,
        }
    }

    pub fn reset(&mut self) {
        for g in self.g_class.iter_mut().chain(self.g_fair.iter_mut()) {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
        self.n_class = 0;
        self.n_fair = 0;
    }
}

/// Adds `scale · ∇_w μ` for the prototypes of `pair`. A simulated distance is
/// a constant here, so only the surviving prototype moves.
fn accumulate_margin_grad<T: Scalar>(
    grads: &mut [Vec<T>],
    model: &PrototypeModel<T>,
    x: &[T],
    pair: &MarginPair<T>,
    scale: T,
) {
    let sum = pair.d_plus + pair.d_minus;
    if sum == T::zero() {
        return;
    }
    let two = T::of(2.0);
    let denom = sum * sum;
    // ∂μ/∂d⁺ = 2d⁻/(d⁺+d⁻)², ∂μ/∂d⁻ = −2d⁺/(d⁺+d⁻)², ∂d/∂w = −2(x − w)
    let sides = [
        (pair.idx_plus, two * pair.d_minus / denom),
        (pair.idx_minus, -two * pair.d_plus / denom),
    ];
    for (idx, dmu_dd) in sides {
        if let Some(j) = idx {
            let coef = -two * scale * dmu_dd;
            let w = &model.prototypes()[j].position;
            for ((g, &xk), &wk) in grads[j].iter_mut().zip(x).zip(w) {
                *g = *g + coef * (xk - wk);
            }
        }
    }
}

/// Accumulates the gradient of `Φ(μ_class) − C·Φ(μ_fair)` for one sample and
/// advances the counters. Returns the sample's cost. With `c == 0` the fair
/// term is skipped entirely and `n_fair` does not move.
pub fn grad_fair_step<T: Scalar>(
    model: &PrototypeModel<T>,
    sample: &Sample<T>,
    c: T,
    alpha: T,
    acc: &mut GradientAccumulator<T>,
) -> Result<T> {
    let beta = model.beta();
    let dists = model.distances(&sample.features)?;
    let class = pair_from_distances(model, &dists, sample.label, MarginMode::Class, alpha)?;
    let mu_class = rel_margin(&class);
    let mut cost = swish(mu_class, beta);
    accumulate_margin_grad(
        &mut acc.g_class,
        model,
        &sample.features,
        &class,
        swish_prime(mu_class, beta),
    );
    acc.n_class += 2;

    if c > T::zero() {
        let fair = pair_from_distances(model, &dists, sample.protected, MarginMode::Pseudo, alpha)?;
        let mu_fair = rel_margin(&fair);
        cost = cost - c * swish(mu_fair, beta);
        accumulate_margin_grad(
            &mut acc.g_fair,
            model,
            &sample.features,
            &fair,
            -c * swish_prime(mu_fair, beta),
        );
        acc.n_fair += usize::from(fair.idx_plus.is_some()) + usize::from(fair.idx_minus.is_some());
    }
    Ok(cost)
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

/// Initializes with [`init_fair`] and runs FairGLVQ.
pub fn train_fairglvq<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &TrainConfig,
) -> Result<(PrototypeModel<T>, TrainLog)> {
    let init = init_fair(ds, cfg)?;
    fit_fairglvq(init, ds, cfg)
}

/// Initializes with [`init_glvq`] and runs plain mini-batch GLVQ.
pub fn train_glvq<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &TrainConfig,
) -> Result<(PrototypeModel<T>, TrainLog)> {
    let init = init_glvq(ds, cfg)?;
    fit_glvq(init, ds, cfg)
}

/// FairGLVQ steps from a given initial model.
pub fn fit_fairglvq<T: Scalar>(
    model: PrototypeModel<T>,
    ds: &Dataset<T>,
    cfg: &TrainConfig,
) -> Result<(PrototypeModel<T>, TrainLog)> {
    run_steps(model, ds, cfg, true)
}

/// Plain GLVQ steps (`C = 0`, no pseudo-class upkeep) from a given model.
pub fn fit_glvq<T: Scalar>(
    model: PrototypeModel<T>,
    ds: &Dataset<T>,
    cfg: &TrainConfig,
) -> Result<(PrototypeModel<T>, TrainLog)> {
    run_steps(model, ds, cfg, false)
}

fn run_steps<T: Scalar>(
    mut model: PrototypeModel<T>,
    ds: &Dataset<T>,
    cfg: &TrainConfig,
    fair: bool,
) -> Result<(PrototypeModel<T>, TrainLog)> {
    cfg.validate_for(ds.len())?;
    crate::error::check_dim(model.dim(), ds.dim())?;
    let samples = ds.samples();
    let c = if fair { T::of(cfg.c) } else { T::zero() };
    let alpha = T::of(cfg.alpha);
    let eta = T::of(cfg.learning_rate);
    let mut batch_rng = seeded(cfg.seed, STREAM_BATCH);
    let mut pseudo_rng = seeded(cfg.seed, STREAM_PSEUDO);
    if fair {
        update_pseudo_classes(&mut model, samples, &mut pseudo_rng);
    }

    let mut acc = GradientAccumulator::new(model.len(), model.dim());
    let mut log = TrainLog::default();
    for step in 0..cfg.epochs {
        acc.reset();
        let mut cost = T::zero();
        for i in index::sample(&mut batch_rng, samples.len(), cfg.batch_size) {
            cost = cost + grad_fair_step(&model, &samples[i], c, alpha, &mut acc)?;
        }

        let inv_class = (acc.n_class > 0).then(|| T::one() / T::of(acc.n_class as f64));
        let inv_fair = (acc.n_fair > 0).then(|| T::one() / T::of(acc.n_fair as f64));
        let mut moved = T::zero();
        for j in 0..model.len() {
            let w = model.position_mut(j);
            for k in 0..w.len() {
                let mut g = T::zero();
                if let Some(inv) = inv_class {
                    g = acc.g_class[j][k] * inv;
                }
                if let Some(inv) = inv_fair {
                    g = g + acc.g_fair[j][k] * inv;
                }
                let delta = eta * g;
                w[k] = w[k] - delta;
                moved = moved + delta * delta;
            }
        }
        if model.prototypes().iter().any(|p| p.position.iter().any(|v| !v.is_finite())) {
            return Err(Error::ModelInvariant(format!(
                "prototypes diverged at step {step}; lower the learning rate"
            )));
        }

        if fair {
            update_pseudo_classes(&mut model, samples, &mut pseudo_rng);
        }
        log.records.push(StepRecord {
            step,
            cost: cost.as_f64(),
            displacement: moved.sqrt().as_f64(),
            pseudo_hash: pseudo_hash(&model.pseudo_classes()),
        });
    }
    Ok((model, log))
}
