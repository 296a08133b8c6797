//! End-to-end orchestration: load or generate data, split it once, optionally
//! construct features, fit one of the three regressors, evaluate both splits
//! and write every artifact.
//!
//! All randomness flows from the run seed through fixed offsets (split, GEP,
//! ANFIS), so adding one model never perturbs another model's stream and
//! every model in a comparison shares the identical split.

use std::fs;
use std::path::{Path, PathBuf};

use crate::anfis::{self, AnfisConfig};
use crate::data::{self, split_manifest, Dataset, COL_CCS, COL_RN, COL_UPV};
use crate::error::{Error, Result};
use crate::gep::{self, GepConfig};
use crate::hcvcm::{self, FeatureSet, TransformKind};
use crate::metrics::{self, MetricsReport, REPORT_CSV_HEADER};
use crate::sbsr;
use crate::synth::{generate_synthetic, GeneratorSpec};

/// Sub-seed offsets added to the run seed.
pub const SPLIT_SEED_OFFSET: u64 = 1;
pub const GEP_SEED_OFFSET: u64 = 2;
pub const ANFIS_SEED_OFFSET: u64 = 3;

/// Artifact file names inside a run's output directory.
pub const SPLIT_MANIFEST_FILE: &str = "split_manifest.txt";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const HCVCM_REPORT_FILE: &str = "hcvcm_report.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const GEP_LOG_FILE: &str = "gep_evolution.csv";
pub const ANFIS_TRACE_FILE: &str = "anfis_trace.csv";

pub const PREDICTIONS_CSV_HEADER: &str = "index,split,actual,predicted,error";
pub const COMPARISON_CSV_HEADER: &str = "model,train_r2,train_rmse,train_nmse,train_fb,\
train_max_pos_err,train_max_neg_err,train_mape,test_r2,test_rmse,test_nmse,test_fb,\
test_max_pos_err,test_max_neg_err,test_mape";

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic(GeneratorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Sbsr,
    Gep,
    Anfis,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Sbsr => "sbsr",
            ModelKind::Gep => "gep",
            ModelKind::Anfis => "anfis",
        }
    }

    pub fn parse(s: &str) -> Result<ModelKind> {
        match s {
            "sbsr" => Ok(ModelKind::Sbsr),
            "gep" => Ok(ModelKind::Gep),
            "anfis" => Ok(ModelKind::Anfis),
            other => Err(Error::Config(format!(
                "unknown model {other:?} (expected sbsr, gep or anfis)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    BestPerParent,
    AllSelected,
}

impl FeatureMode {
    pub fn parse(s: &str) -> Result<FeatureMode> {
        match s {
            "best" => Ok(FeatureMode::BestPerParent),
            "all" => Ok(FeatureMode::AllSelected),
            other => Err(Error::Config(format!(
                "unknown feature mode {other:?} (expected best or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcvcmOptions {
    pub enabled: bool,
    pub generations: usize,
    pub mode: FeatureMode,
}

impl Default for HcvcmOptions {
    fn default() -> Self {
        HcvcmOptions {
            enabled: false,
            generations: 1,
            mode: FeatureMode::BestPerParent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    pub model: ModelKind,
    pub hcvcm: HcvcmOptions,
    pub train_fraction: f64,
    pub seed: u64,
    pub gep: GepConfig,
    pub anfis: AnfisConfig,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(data: DataSource, model: ModelKind, out_dir: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            data,
            model,
            hcvcm: HcvcmOptions::default(),
            train_fraction: 0.7,
            seed: 0,
            gep: GepConfig::default(),
            anfis: AnfisConfig::default(),
            out_dir: out_dir.into(),
        }
    }

    /// Report label: the model name, prefixed `hcvcm-` for hybrids.
    pub fn label(&self) -> String {
        if self.hcvcm.enabled {
            format!("hcvcm-{}", self.model.as_str())
        } else {
            self.model.as_str().to_string()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PredictionRow {
    pub index: usize,
    pub split: SplitTag,
    pub actual: f64,
    pub predicted: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub label: String,
    pub train_report: MetricsReport,
    pub test_report: MetricsReport,
    pub predictions: Vec<PredictionRow>,
    pub selected_features: FeatureSet,
    pub model_path: PathBuf,
    pub split_manifest: String,
}

fn load_data(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Csv(path) => Ok(data::load_csv(path)?.dataset),
        DataSource::Synthetic(spec) => generate_synthetic(spec),
    }
}

/// Runs one configuration end to end and writes all artifacts under
/// `cfg.out_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    fn stage(name: &'static str) -> impl Fn(Error) -> Error {
        move |e| Error::stage(name, e)
    }

    let dataset = load_data(&cfg.data).map_err(stage("load"))?;
    let dataset = data::split_dataset(
        &dataset,
        cfg.train_fraction,
        cfg.seed.wrapping_add(SPLIT_SEED_OFFSET),
    )
    .map_err(stage("split"))?;
    let manifest = split_manifest(dataset.require_split().map_err(stage("split"))?);

    let inputs: Vec<String> = vec![COL_UPV.to_string(), COL_RN.to_string()];
    let output = COL_CCS;

    // feature construction (training split drives every gate)
    let mut selected = FeatureSet::default();
    let mut hcvcm_csv = None;
    let (model_data, model_inputs) = if cfg.hcvcm.enabled {
        let report = hcvcm::run_generations_report(
            &dataset,
            &inputs,
            output,
            &TransformKind::DEFAULT_LIBRARY,
            cfg.hcvcm.generations,
        )
        .map_err(stage("hcvcm"))?;
        hcvcm_csv = Some(hcvcm::report_csv(&report));
        selected = match cfg.hcvcm.mode {
            FeatureMode::BestPerParent => hcvcm::reduce_best_per_parent(&report.selected),
            FeatureMode::AllSelected => report.selected,
        };
        if selected.is_empty() {
            // nothing survived the gates: the hybrid degenerates to the
            // single model on the raw inputs
            (dataset.clone(), inputs.clone())
        } else {
            let materialized =
                hcvcm::materialize(&selected, &dataset, output).map_err(stage("hcvcm"))?;
            let names = selected.names();
            (materialized, names)
        }
    } else {
        (dataset.clone(), inputs.clone())
    };

    fs::create_dir_all(&cfg.out_dir)?;

    // fit + predict on every row
    let (predicted, model_path) = match cfg.model {
        ModelKind::Sbsr => {
            let model =
                sbsr::sbsr_fit(&model_data, &model_inputs, output).map_err(stage("fit/sbsr"))?;
            let pred = sbsr::sbsr_predict(&model, &model_data).map_err(stage("predict/sbsr"))?;
            let path = cfg.out_dir.join("model_sbsr.txt");
            fs::write(&path, model.to_text())?;
            (pred, path)
        }
        ModelKind::Gep => {
            let mut gep_cfg = cfg.gep.clone();
            gep_cfg.seed = cfg.seed.wrapping_add(GEP_SEED_OFFSET);
            let model = gep::evolve(&model_data, &model_inputs, output, &gep_cfg)
                .map_err(stage("fit/gep"))?;
            let pred = model.predict(&model_data).map_err(stage("predict/gep"))?;
            let path = cfg.out_dir.join("model_gep.txt");
            fs::write(&path, model.export_text())?;
            fs::write(cfg.out_dir.join(GEP_LOG_FILE), model.log_csv())?;
            (pred, path)
        }
        ModelKind::Anfis => {
            let mut anfis_cfg = cfg.anfis;
            anfis_cfg.seed = cfg.seed.wrapping_add(ANFIS_SEED_OFFSET);
            let outcome = anfis::train_hybrid(&model_data, &model_inputs, output, &anfis_cfg)
                .map_err(stage("fit/anfis"))?;
            let pred = outcome
                .model
                .predict(&model_data)
                .map_err(stage("predict/anfis"))?;
            let path = cfg.out_dir.join("model_anfis.txt");
            fs::write(&path, outcome.model.to_text())?;
            fs::write(cfg.out_dir.join(ANFIS_TRACE_FILE), outcome.trace_csv())?;
            (pred, path)
        }
    };

    // evaluate both splits
    let actual = dataset.column(output).map_err(stage("evaluate"))?;
    let split = dataset.require_split().map_err(stage("evaluate"))?;
    let gather = |idx: &[usize], v: &[f64]| -> Vec<f64> { idx.iter().map(|&i| v[i]).collect() };
    let train_report = metrics::evaluate(
        &gather(&split.train, actual),
        &gather(&split.train, &predicted),
    )
    .map_err(stage("evaluate/train"))?;
    let test_report = metrics::evaluate(
        &gather(&split.test, actual),
        &gather(&split.test, &predicted),
    )
    .map_err(stage("evaluate/test"))?;

    let mut tags = vec![SplitTag::Train; dataset.n_rows()];
    for &i in &split.test {
        tags[i] = SplitTag::Test;
    }
    let predictions: Vec<PredictionRow> = (0..dataset.n_rows())
        .map(|i| PredictionRow {
            index: i,
            split: tags[i],
            actual: actual[i],
            predicted: predicted[i],
            error: actual[i] - predicted[i],
        })
        .collect();

    // artifacts
    let label = cfg.label();
    fs::write(cfg.out_dir.join(SPLIT_MANIFEST_FILE), &manifest)?;
    let mut pred_csv = String::from(PREDICTIONS_CSV_HEADER);
    pred_csv.push('\n');
    for p in &predictions {
        pred_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.index,
            p.split.as_str(),
            p.actual,
            p.predicted,
            p.error
        ));
    }
    fs::write(cfg.out_dir.join(PREDICTIONS_FILE), pred_csv)?;
    let mut metrics_csv = String::from(REPORT_CSV_HEADER);
    metrics_csv.push('\n');
    metrics_csv.push_str(&train_report.csv_row(&label, "train"));
    metrics_csv.push('\n');
    metrics_csv.push_str(&test_report.csv_row(&label, "test"));
    metrics_csv.push('\n');
    fs::write(cfg.out_dir.join(METRICS_FILE), metrics_csv)?;
    if let Some(csv) = hcvcm_csv {
        fs::write(cfg.out_dir.join(HCVCM_REPORT_FILE), csv)?;
    }

    Ok(RunResult {
        label,
        train_report,
        test_report,
        predictions,
        selected_features: selected,
        model_path,
        split_manifest: manifest,
    })
}

#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub model: String,
    pub train: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    /// Flattened table: one row per model, seven statistics per split.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARISON_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let t = &row.train;
            let e = &row.test;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.model,
                t.r2,
                t.rmse,
                t.nmse,
                t.fb,
                t.max_pos_err,
                t.max_neg_err,
                t.mape,
                e.r2,
                e.rmse,
                e.nmse,
                e.fb,
                e.max_pos_err,
                e.max_neg_err,
                e.mape
            ));
        }
        out
    }
}

/// Runs several configurations that must share the data source, train
/// fraction and seed, verifies every run used the byte-identical split
/// manifest, and assembles the comparison table.
pub fn compare(cfgs: &[RunConfig]) -> Result<Comparison> {
    let first = cfgs
        .first()
        .ok_or_else(|| Error::Config("compare needs at least one configuration".into()))?;
    for cfg in cfgs {
        if cfg.data != first.data {
            return Err(Error::Config(
                "compare requires the identical data source for every model".into(),
            ));
        }
        if cfg.seed != first.seed || cfg.train_fraction != first.train_fraction {
            return Err(Error::Config(
                "compare requires the identical seed and train fraction for every model".into(),
            ));
        }
    }
    let mut rows = Vec::with_capacity(cfgs.len());
    let mut manifest: Option<String> = None;
    for cfg in cfgs {
        let result = run(cfg)?;
        match &manifest {
            None => manifest = Some(result.split_manifest.clone()),
            Some(m) => {
                if *m != result.split_manifest {
                    return Err(Error::Config(format!(
                        "split manifest of {} diverged from the shared split",
                        result.label
                    )));
                }
            }
        }
        rows.push(ComparisonRow {
            model: result.label.clone(),
            train: result.train_report,
            test: result.test_report,
        });
    }
    Ok(Comparison { rows })
}

/// The six standard configurations (three single models plus their
/// feature-constructed hybrids), each writing under `out_root/<label>`.
pub fn standard_configs(
    data: DataSource,
    seed: u64,
    train_fraction: f64,
    gep: GepConfig,
    anfis: AnfisConfig,
    out_root: &Path,
) -> Vec<RunConfig> {
    let mut cfgs = Vec::with_capacity(6);
    for model in [ModelKind::Sbsr, ModelKind::Gep, ModelKind::Anfis] {
        for hcvcm_on in [false, true] {
            let mut cfg = RunConfig::new(data.clone(), model, out_root.join("placeholder"));
            cfg.train_fraction = train_fraction;
            cfg.seed = seed;
            cfg.gep = gep.clone();
            cfg.anfis = anfis;
            cfg.hcvcm.enabled = hcvcm_on;
            cfg.out_dir = out_root.join(cfg.label());
            cfgs.push(cfg);
        }
    }
    cfgs
}
