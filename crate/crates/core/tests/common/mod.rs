#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use fairglvq::ExperimentConfig;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Path from `var`, else `data/<file>` in the workspace. Panics with a hint
/// when the file is absent.
pub fn data_file(var: &str, file: &str) -> PathBuf {
    let path = std::env::var_os(var)
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data").join(file));
    assert!(
        path.is_file(),
        "{} not found; run scripts/fetch_data.sh or set {var}",
        path.display()
    );
    path
}

pub fn adult_csv() -> PathBuf {
    data_file("FAIRGLVQ_ADULT_CSV", "adult.csv")
}

pub fn compas_csv() -> PathBuf {
    data_file("FAIRGLVQ_COMPAS_CSV", "compas-scores-two-years.csv")
}

/// A config from `configs/`, with CSV sources pointed at the resolved data files.
pub fn config(name: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_path(workspace_root().join("configs").join(format!("{name}.json"))).unwrap();
    if let fairglvq::experiment::DatasetSource::Csv { path, .. } = &mut cfg.dataset {
        *path = match name {
            "adult" => adult_csv(),
            "compas" => compas_csv(),
            _ => path.clone(),
        };
    }
    cfg
}
