//! Fairness-regularized generalized learning vector quantization.
//!
//! [`train_fairglvq`] fits a prototype model whose classification margin is
//! rewarded while its margin with respect to per-prototype pseudo-classes of a
//! protected attribute is penalized. GLVQ, iterative null-space projection
//! (INP) and a constant classifier are provided as baselines, along with
//! statistical parity / equal opportunity metrics and a k-fold harness.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the `f64` instantiations used by the harness.

pub mod baselines;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fairmetrics;
pub mod model;
mod rng;
pub mod scalar;
pub mod train;

pub use baselines::{
    apply_inp, constant_classifier, fit_inp, fit_probe, ConstantClassifier, InpPipeline,
    LinearProbe, ProjectionStack,
};
pub use data::{
    gen_local, gen_xor, kfold, kfold_stratified, load_csv, load_csv_reader, ColumnInfo,
    ColumnKind, Dataset, FoldSplit, LocalParams, PreprocessSpec, RowFilter, Sample, Standardizer,
    XorParams,
};
pub use error::{Error, Result};
pub use experiment::{run_experiment, sweep, ExperimentConfig, OutputFormat, ResultTable};
pub use fairmetrics::{
    equal_opportunity_diff, evaluate, statistical_parity_diff, EvaluationReport, FoldMetrics,
    GroupCounts, Summary,
};
pub use model::{
    fair_cost, glvq_cost, margin_pair, rel_margin, sq_dist, swish, swish_prime, Classifier,
    MarginMode, MarginPair, Prototype, PrototypeModel,
};
pub use scalar::Scalar;
pub use train::{
    fit_fairglvq, fit_glvq, grad_fair_step, init_fair, init_glvq, kmeans, train_fairglvq,
    train_glvq, update_pseudo_classes, GradientAccumulator, StepRecord, TrainConfig, TrainLog,
};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Model64 = PrototypeModel<f64>;
pub type Model32 = PrototypeModel<f32>;
pub type Projection64 = ProjectionStack<f64>;
pub type Projection32 = ProjectionStack<f32>;
