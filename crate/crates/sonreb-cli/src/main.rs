//! Command line for the sonreb prediction pipeline.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sonreb::data::{load_csv, split_dataset, summarize, COL_CCS, COL_RN, COL_UPV};
use sonreb::hcvcm::{self, TransformKind};
use sonreb::pipeline::{self, DataSource, FeatureMode, HcvcmOptions, ModelKind, RunConfig};
use sonreb::synth::{
    format_generator_spec, generate_synthetic, parse_generator_spec, GeneratorSpec,
};

#[derive(Parser)]
#[command(
    name = "sonreb",
    about = "Concrete compressive strength prediction from UPV + rebound readings",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a calibrated synthetic dataset as CSV
    GenerateData(GenerateArgs),
    /// Print summary statistics of a CSV dataset
    Stats(StatsArgs),
    /// Run feature construction and write the candidate report
    HcvcmReport(HcvcmArgs),
    /// Fit one model end to end and write all artifacts
    Fit(FitArgs),
    /// Run several models on one shared split and write the comparison table
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator spec file (key = value); defaults to the built-in
    /// calibration when omitted
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the sample count
    #[arg(long)]
    n: Option<usize>,
    /// Override the generator seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Input CSV with upv, rn, ccs columns
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct HcvcmArgs {
    /// Input CSV with upv, rn, ccs columns
    #[arg(long)]
    data: PathBuf,
    /// Run seed (drives the train/test split)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training fraction
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Feature-construction generations
    #[arg(long, default_value_t = 1)]
    generations: usize,
    /// Output CSV path for the candidate report
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with upv, rn, ccs columns
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Generator spec file for synthetic data
    #[arg(long)]
    synthetic: Option<PathBuf>,
    /// Model to fit: sbsr, gep or anfis
    #[arg(long)]
    model: String,
    /// Construct features before fitting
    #[arg(long)]
    hcvcm: bool,
    /// Feature-construction generations
    #[arg(long, default_value_t = 1)]
    hcvcm_generations: usize,
    /// Feature mode: best (one per parent) or all
    #[arg(long, default_value = "best")]
    feature_mode: String,
    /// Training fraction
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Run seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts
    #[arg(long)]
    out: PathBuf,
    /// GEP population size
    #[arg(long)]
    gep_population: Option<usize>,
    /// GEP generations
    #[arg(long)]
    gep_generations: Option<usize>,
    /// ANFIS membership functions per input
    #[arg(long)]
    anfis_mfs: Option<usize>,
    /// ANFIS training epochs
    #[arg(long)]
    anfis_epochs: Option<usize>,
    /// ANFIS learning rate
    #[arg(long)]
    anfis_learning_rate: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Comparison config file (key = value)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (per-model artifacts in subdirectories)
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenerateData(args) => generate_data(args),
        Command::Stats(args) => stats(args),
        Command::HcvcmReport(args) => hcvcm_report(args),
        Command::Fit(args) => fit(args),
        Command::Compare(args) => compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_spec(args: &GenerateArgs) -> Result<GeneratorSpec> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_generator_spec(&text)?
        }
        None => GeneratorSpec::sonreb_default(516, 0),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn generate_data(args: GenerateArgs) -> Result<()> {
    let spec = load_spec(&args)?;
    let dataset = generate_synthetic(&spec)?;
    let upv = dataset.column(COL_UPV)?;
    let rn = dataset.column(COL_RN)?;
    let ccs = dataset.column(COL_CCS)?;
    let mut csv = String::from("upv,rn,ccs\n");
    for i in 0..dataset.n_rows() {
        csv.push_str(&format!("{},{},{}\n", upv[i], rn[i], ccs[i]));
    }
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&args.out, csv)?;
    println!(
        "wrote {} rows to {} (spec below)\n{}",
        dataset.n_rows(),
        args.out.display(),
        format_generator_spec(&spec)
    );
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let import = load_csv(&args.data)?;
    for col in &import.ignored_columns {
        eprintln!("warning: ignoring extra column {col:?}");
    }
    let d = import.dataset;
    println!(
        "{:<10}{:>12}{:>12}{:>12}{:>12}{:>12}",
        "variable", "min", "max", "average", "sd", "median"
    );
    for name in [COL_UPV, COL_RN, COL_CCS] {
        let s = summarize(&d, name)?;
        println!(
            "{:<10}{:>12.4}{:>12.4}{:>12.4}{:>12.4}{:>12.4}",
            name, s.min, s.max, s.average, s.sd, s.median
        );
    }
    println!("rows: {}", d.n_rows());
    Ok(())
}

fn hcvcm_report(args: HcvcmArgs) -> Result<()> {
    let import = load_csv(&args.data)?;
    for col in &import.ignored_columns {
        eprintln!("warning: ignoring extra column {col:?}");
    }
    let d = split_dataset(
        &import.dataset,
        args.train_fraction,
        args.seed.wrapping_add(pipeline::SPLIT_SEED_OFFSET),
    )?;
    let inputs = vec![COL_UPV.to_string(), COL_RN.to_string()];
    let report = hcvcm::run_generations_report(
        &d,
        &inputs,
        COL_CCS,
        &TransformKind::DEFAULT_LIBRARY,
        args.generations,
    )?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&args.out, hcvcm::report_csv(&report))?;
    println!(
        "examined {} candidates, selected {:?}; report at {}",
        report.candidates.len(),
        report.selected.names(),
        args.out.display()
    );
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let data = match (&args.data, &args.synthetic) {
        (Some(csv), None) => DataSource::Csv(csv.clone()),
        (None, Some(spec_path)) => {
            let text = std::fs::read_to_string(spec_path)
                .with_context(|| format!("reading {}", spec_path.display()))?;
            DataSource::Synthetic(parse_generator_spec(&text)?)
        }
        _ => bail!("set exactly one of --data or --synthetic"),
    };
    let mut cfg = RunConfig::new(data, ModelKind::parse(&args.model)?, &args.out);
    cfg.train_fraction = args.train_fraction;
    cfg.seed = args.seed;
    cfg.hcvcm = HcvcmOptions {
        enabled: args.hcvcm,
        generations: args.hcvcm_generations,
        mode: FeatureMode::parse(&args.feature_mode)?,
    };
    if let Some(v) = args.gep_population {
        cfg.gep.population = v;
    }
    if let Some(v) = args.gep_generations {
        cfg.gep.generations = v;
    }
    if let Some(v) = args.anfis_mfs {
        cfg.anfis.mfs_per_input = v;
    }
    if let Some(v) = args.anfis_epochs {
        cfg.anfis.epochs = v;
    }
    if let Some(v) = args.anfis_learning_rate {
        cfg.anfis.learning_rate = v;
    }

    let result = pipeline::run(&cfg)?;
    println!("model: {}", result.label);
    if !result.selected_features.is_empty() {
        println!("selected features: {:?}", result.selected_features.names());
    }
    let show = |tag: &str, r: &sonreb::metrics::MetricsReport| {
        println!(
            "{tag:>5}: r2 {:.4}  rmse {:.3}  nmse {:.4}  fb {:+.3e}  max+ {:.3}  max- {:.3}  mape {:.3}%",
            r.r2, r.rmse, r.nmse, r.fb, r.max_pos_err, r.max_neg_err, r.mape
        );
    };
    show("train", &result.train_report);
    show("test", &result.test_report);
    println!("artifacts in {}", cfg.out_dir.display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let base = args
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let cfg = config::parse_compare_config(&text, &base)?;
    std::fs::create_dir_all(&args.out)?;
    let runs = cfg.run_configs(&args.out);
    let table = pipeline::compare(&runs)?;
    let csv = table.to_csv();
    let out_file = args.out.join(pipeline::COMPARISON_FILE);
    std::fs::write(&out_file, &csv)?;
    print!("{csv}");
    println!("comparison table at {}", out_file.display());
    Ok(())
}
