use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fairglvq::experiment::{
    evaluate_predictions, run_experiment, sweep, DatasetSource, ExperimentConfig, OutputFormat,
    ResultRow, ResultTable,
};
use fairglvq::{gen_local, gen_xor, Dataset64, LocalParams, XorParams};

#[derive(Parser)]
#[command(name = "fairglvq", version, about = "Fair prototype-based classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV (columns f0.., label, protected).
    Generate(GenerateArgs),
    /// Cross-validate every configured method at its own hyperparameters.
    Run(ExperimentArgs),
    /// Cross-validate over the config's regularization sweep.
    Sweep(ExperimentArgs),
    /// Score a predictions CSV with columns label, prediction, protected and optional fold.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Xor,
    Local,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Take the dataset section from an experiment config instead of --kind/--n.
    #[arg(long, conflicts_with_all = ["kind", "n"])]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "xor")]
    kind: Kind,
    #[arg(long, default_value_t = 4000)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Result table destination; falls back to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Also write per-fold metrics as CSV.
    #[arg(long)]
    folds_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predictions CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    favorable: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn render(table: &ResultTable, format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => table.to_csv_string()?,
        Format::Json => table.to_json_string()?,
    })
}

fn generate(args: GenerateArgs) -> Result<()> {
    let seed = args.seed.unwrap_or(0);
    let ds: Dataset64 = match &args.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::from_path(path)?;
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            if matches!(cfg.dataset, DatasetSource::Csv { .. }) {
                bail!("{} describes a CSV dataset, not a generator", path.display());
            }
            cfg.load_dataset()?
        }
        None => match args.kind {
            Kind::Xor => gen_xor(args.n, seed, &XorParams::default())?,
            Kind::Local => gen_local(args.n, seed, &LocalParams::default())?,
        },
    };
    match &args.out {
        Some(path) => ds.write_csv(path)?,
        None => write_output(None, &ds.to_csv_string()?)?,
    }
    Ok(())
}

fn experiment(args: ExperimentArgs, sweeping: bool) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_path(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let table = if sweeping { sweep(&cfg)? } else { run_experiment(&cfg)? };
    let out = args.out.clone().or_else(|| cfg.output.clone());
    write_output(out.as_deref(), &render(&table, args.format)?)?;
    if let Some(path) = &args.folds_out {
        File::create(path)?.write_all(table.folds_csv_string()?.as_bytes())?;
    }
    if table.errors.is_empty() {
        return Ok(true);
    }
    eprintln!("{} row(s) failed:", table.errors.len());
    for e in &table.errors {
        eprintln!("  {} reg={} fold={}: {}", e.method, e.reg, e.fold, e.message);
    }
    Ok(false)
}

fn eval(args: EvalArgs) -> Result<()> {
    let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let report = evaluate_predictions(file, args.favorable)?;
    let name = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let table = ResultTable {
        rows: vec![ResultRow {
            dataset: name,
            method: "predictions".into(),
            reg: 0.0,
            report,
        }],
        errors: Vec::new(),
    };
    write_output(args.out.as_deref(), &render(&table, args.format)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Run(a) => experiment(a, false),
        Command::Sweep(a) => experiment(a, true),
        Command::Eval(a) => eval(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
