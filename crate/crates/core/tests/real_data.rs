//! Loading, preprocessing and fold hygiene on the Adult and COMPAS files.

mod common;

use fairglvq::data::ColumnKind;
use fairglvq::experiment::{prepare_fold, DatasetSource};
use fairglvq::{fit_inp, init_fair, load_csv, Dataset64, PreprocessSpec, TrainConfig};

fn preprocess(name: &str) -> PreprocessSpec {
    match common::config(name).dataset {
        DatasetSource::Csv { preprocess, .. } => preprocess,
        _ => unreachable!(),
    }
}

#[test]
fn adult_row_count_after_dropping_missing() {
    let ds: Dataset64 = load_csv(common::adult_csv(), &preprocess("adult")).unwrap();
    assert_eq!(ds.len(), 30162);
    assert_eq!((ds.n_classes(), ds.n_groups()), (2, 2));
    assert_eq!(ds.group_names(), ["Female", "Male"]);
    // sex is appended as a feature
    assert_eq!(ds.schema().last().unwrap().source, "sex");
    let positives = ds.labels().iter().filter(|&&y| y == 1).count();
    assert_eq!(positives, 7508);
}

#[test]
fn compas_row_counts() {
    let mut spec = preprocess("compas");
    spec.protected_top_groups = None;
    let all: Dataset64 = load_csv(common::compas_csv(), &spec).unwrap();
    assert_eq!(all.len(), 6172);
    let two: Dataset64 = load_csv(common::compas_csv(), &preprocess("compas")).unwrap();
    assert_eq!(two.len(), 5278);
    assert_eq!(two.group_names(), ["African-American", "Caucasian"]);
}

#[test]
fn standardized_numeric_columns_have_zero_mean_unit_variance() {
    let ds: Dataset64 = load_csv(common::adult_csv(), &preprocess("adult")).unwrap();
    let n = ds.len() as f64;
    let mut numeric = 0;
    for (k, col) in ds.schema().iter().enumerate() {
        let values: Vec<f64> = ds.samples().iter().map(|s| s.features[k]).collect();
        match col.kind {
            ColumnKind::Numeric => {
                numeric += 1;
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                assert!(mean.abs() < 1e-9, "{}: mean {mean}", col.name);
                assert!((var - 1.0).abs() < 1e-6, "{}: var {var}", col.name);
            }
            ColumnKind::Categorical => assert!(values.iter().all(|&v| v == 0.0 || v == 1.0)),
        }
    }
    assert_eq!(numeric, 5);
}

#[test]
fn fitted_state_ignores_the_test_fold() {
    let cfg = common::config("compas");
    let ds = cfg.load_dataset().unwrap();
    let split = cfg.split(&ds).unwrap();
    let fold = 3;
    let clean = prepare_fold(&ds, &split, fold, true).unwrap();

    let test_idx = split.test_indices(fold);
    let mut samples = ds.samples().to_vec();
    for &i in &test_idx {
        samples[i].features.iter_mut().for_each(|v| *v = 1e9);
        samples[i].protected = 1 - samples[i].protected;
    }
    let poisoned = prepare_fold(&ds.with_samples(samples).unwrap(), &split, fold, true).unwrap();

    assert_eq!(clean.standardizer, poisoned.standardizer);
    assert_eq!(clean.train, poisoned.train);
    assert_ne!(clean.test, poisoned.test);
    let train_cfg = TrainConfig { prototypes_per_class: 3, ..Default::default() };
    assert_eq!(init_fair(&clean.train, &train_cfg).unwrap(), init_fair(&poisoned.train, &train_cfg).unwrap());
    assert_eq!(fit_inp(&clean.train, 2).unwrap(), fit_inp(&poisoned.train, 2).unwrap());
}
