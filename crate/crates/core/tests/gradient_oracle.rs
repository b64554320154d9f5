//! Analytic FairGLVQ gradients against central finite differences of an
//! independently written per-sample cost.

mod common;

use common::oracle::{freeze, run_gradient_oracle, Side, TOL};
use fairglvq::{grad_fair_step, GradientAccumulator, Prototype, PrototypeModel, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn analytic_gradient_matches_central_differences() {
    let summary = run_gradient_oracle(300, 2024);
    assert!(summary.worst_relative_error <= TOL, "worst relative error {:e}", summary.worst_relative_error);
    assert!(summary.simulated >= summary.instances / 4, "only {} simulated cases", summary.simulated);
}

#[test]
fn untouched_prototypes_get_no_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let p = 6;
        let w: Vec<Vec<f64>> = (0..p).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let labels = [0, 1, 0, 1, 0, 1];
        let pseudo: Vec<usize> = (0..p).map(|_| rng.random_range(0..2)).collect();
        let protos = (0..p).map(|j| Prototype::new(w[j].clone(), labels[j], pseudo[j])).collect();
        let model = PrototypeModel::new(protos, 2, 2, 1.0).unwrap();
        let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let (y, s) = (rng.random_range(0..2), rng.random_range(0..2));
        let mut acc = GradientAccumulator::new(p, 2);
        grad_fair_step(&model, &Sample::new(x.clone(), y, s), 1.0, 2.0, &mut acc).unwrap();

        let f = freeze(&w, &labels, &pseudo, &x, y, s, 2.0);
        let mut used = vec![false; p];
        for side in [f.class.0, f.class.1, f.fair.0, f.fair.1] {
            if let Side::Proto(j) = side {
                used[j] = true;
            }
        }
        for j in (0..p).filter(|&j| !used[j]) {
            assert!(acc.g_class[j].iter().chain(&acc.g_fair[j]).all(|&g| g == 0.0));
        }
    }
}
