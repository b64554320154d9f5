//! Independent per-sample FairGLVQ cost with frozen winners, used as a
//! finite-difference reference for the analytic gradient.
#![allow(dead_code)]

use fairglvq::{grad_fair_step, GradientAccumulator, Prototype, PrototypeModel, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-5;

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn phi(x: f64, beta: f64) -> f64 {
    x / (1.0 + (-beta * x).exp())
}

/// One side of a margin: a prototype index, or a distance frozen at the
/// unperturbed point.
#[derive(Clone, Copy, Debug)]
pub enum Side {
    Proto(usize),
    Fixed(f64),
}

fn nearest(w: &[Vec<f64>], x: &[f64], keep: impl Fn(usize) -> bool) -> Option<usize> {
    (0..w.len())
        .filter(|&j| keep(j))
        .min_by(|&a, &b| sq(x, &w[a]).partial_cmp(&sq(x, &w[b])).unwrap())
}

pub struct Frozen {
    pub class: (Side, Side),
    pub fair: (Side, Side),
}

pub fn freeze(w: &[Vec<f64>], labels: &[usize], pseudo: &[usize], x: &[f64], y: usize, s: usize, alpha: f64) -> Frozen {
    let cp = nearest(w, x, |j| labels[j] == y).unwrap();
    let cm = nearest(w, x, |j| labels[j] != y).unwrap();
    let fp = nearest(w, x, |j| pseudo[j] == s);
    let fm = nearest(w, x, |j| pseudo[j] != s);
    let fair = match (fp, fm) {
        (Some(p), Some(m)) => (Side::Proto(p), Side::Proto(m)),
        (Some(p), None) => (Side::Proto(p), Side::Fixed(sq(x, &w[p]) / alpha)),
        (None, Some(m)) => (Side::Fixed(alpha * sq(x, &w[m])), Side::Proto(m)),
        (None, None) => unreachable!(),
    };
    Frozen {
        class: (Side::Proto(cp), Side::Proto(cm)),
        fair,
    }
}

pub fn cost(w: &[Vec<f64>], x: &[f64], f: &Frozen, c: f64, beta: f64) -> f64 {
    let dist = |side: Side| match side {
        Side::Proto(j) => sq(x, &w[j]),
        Side::Fixed(d) => d,
    };
    let mu = |(p, m): (Side, Side)| {
        let (dp, dm) = (dist(p), dist(m));
        (dp - dm) / (dp + dm)
    };
    phi(mu(f.class), beta) - c * phi(mu(f.fair), beta)
}

pub struct OracleSummary {
    pub instances: usize,
    pub simulated: usize,
    pub worst_relative_error: f64,
}

/// Random instances with d ≤ 5 and P ≤ 6; every third one has all prototypes
/// in one pseudo-class so a fair distance is simulated.
pub fn run_gradient_oracle(instances: usize, seed: u64) -> OracleSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = OracleSummary { instances, simulated: 0, worst_relative_error: 0.0 };
    for case in 0..instances {
        let d = rng.random_range(1..=5);
        let p = rng.random_range(2..=6);
        let labels: Vec<usize> = (0..p).map(|j| if j < 2 { j } else { rng.random_range(0..2) }).collect();
        let pseudo: Vec<usize> = if case % 3 == 0 {
            vec![rng.random_range(0..2); p]
        } else {
            (0..p).map(|_| rng.random_range(0..2)).collect()
        };
        let w: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        // keep x off the prototypes so the finite differences are well conditioned
        let x: Vec<f64> = loop {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            if w.iter().all(|wj| sq(&x, wj) > 0.1) {
                break x;
            }
        };
        let y = rng.random_range(0..2);
        let s = rng.random_range(0..2);
        let c = rng.random_range(0.1..2.0);
        let alpha = rng.random_range(1.2..4.0);
        let beta = rng.random_range(0.5..2.0);

        let protos = (0..p)
            .map(|j| Prototype::new(w[j].clone(), labels[j], pseudo[j]))
            .collect();
        let model = PrototypeModel::new(protos, 2, 2, beta).unwrap();
        let mut acc = GradientAccumulator::new(p, d);
        let analytic_cost = grad_fair_step(&model, &Sample::new(x.clone(), y, s), c, alpha, &mut acc).unwrap();

        let frozen = freeze(&w, &labels, &pseudo, &x, y, s, alpha);
        if matches!(frozen.fair, (Side::Fixed(_), _) | (_, Side::Fixed(_))) {
            summary.simulated += 1;
        }
        let base = cost(&w, &x, &frozen, c, beta);
        assert!((analytic_cost - base).abs() <= 1e-12 * (1.0 + base.abs()), "case {case}: cost");

        let mut diff = 0.0;
        let (mut norm_a, mut norm_n) = (0.0f64, 0.0f64);
        for j in 0..p {
            for k in 0..d {
                let mut plus = w.clone();
                plus[j][k] += H;
                let mut minus = w.clone();
                minus[j][k] -= H;
                let numeric = (cost(&plus, &x, &frozen, c, beta) - cost(&minus, &x, &frozen, c, beta)) / (2.0 * H);
                let analytic = acc.g_class[j][k] + acc.g_fair[j][k];
                diff += (analytic - numeric).powi(2);
                norm_a += analytic * analytic;
                norm_n += numeric * numeric;
            }
        }
        let scale = norm_a.sqrt().max(norm_n.sqrt());
        let rel = if scale > 1e-8 { diff.sqrt() / scale } else { diff.sqrt() };
        summary.worst_relative_error = summary.worst_relative_error.max(rel);
    }
    summary
}
