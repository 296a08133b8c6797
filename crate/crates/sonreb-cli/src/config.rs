//! Flat `key = value` configuration file for the `compare` subcommand.
//!
//! Recognized keys:
//!
//! ```text
//! data = readings.csv            # or: synthetic = generator-spec.txt
//! seed = 0
//! train_fraction = 0.7
//! models = sbsr,hcvcm-sbsr,gep,hcvcm-gep,anfis,hcvcm-anfis
//! feature_mode = best            # best | all
//! hcvcm_generations = 1
//! gep.population = 50
//! gep.generations = 200
//! gep.head_length = 7
//! gep.genes = 3
//! gep.mutation_rate = 0.044
//! gep.one_point_rate = 0.3
//! gep.two_point_rate = 0.3
//! gep.gene_rate = 0.1
//! gep.is_rate = 0.1
//! gep.constants_count = 10
//! gep.constants_lo = -10
//! gep.constants_hi = 10
//! gep.patience = 50
//! anfis.mfs_per_input = 3
//! anfis.epochs = 100
//! anfis.learning_rate = 0.01
//! anfis.hybrid = true
//! ```
//!
//! `#` starts a comment; blank lines are ignored. Exactly one of `data` /
//! `synthetic` must be present.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use sonreb::anfis::AnfisConfig;
use sonreb::gep::GepConfig;
use sonreb::pipeline::{DataSource, FeatureMode, HcvcmOptions, ModelKind, RunConfig};
use sonreb::synth::parse_generator_spec;

#[derive(Debug)]
pub struct CompareConfig {
    pub data: DataSource,
    pub seed: u64,
    pub train_fraction: f64,
    pub models: Vec<(ModelKind, bool)>,
    pub feature_mode: FeatureMode,
    pub hcvcm_generations: usize,
    pub gep: GepConfig,
    pub anfis: AnfisConfig,
}

impl CompareConfig {
    /// Expands into one run configuration per requested model, each writing
    /// under `out_root/<label>`.
    pub fn run_configs(&self, out_root: &Path) -> Vec<RunConfig> {
        self.models
            .iter()
            .map(|&(model, hcvcm_on)| {
                let mut cfg = RunConfig::new(self.data.clone(), model, out_root);
                cfg.seed = self.seed;
                cfg.train_fraction = self.train_fraction;
                cfg.gep = self.gep.clone();
                cfg.anfis = self.anfis;
                cfg.hcvcm = HcvcmOptions {
                    enabled: hcvcm_on,
                    generations: self.hcvcm_generations,
                    mode: self.feature_mode,
                };
                cfg.out_dir = out_root.join(cfg.label());
                cfg
            })
            .collect()
    }
}

fn parse_model_entry(entry: &str) -> Result<(ModelKind, bool)> {
    let (hcvcm, name) = match entry.strip_prefix("hcvcm-") {
        Some(rest) => (true, rest),
        None => (false, entry),
    };
    let kind = ModelKind::parse(name).with_context(|| format!("model entry {entry:?}"))?;
    Ok((kind, hcvcm))
}

pub fn parse_compare_config(text: &str, base_dir: &Path) -> Result<CompareConfig> {
    let mut data: Option<DataSource> = None;
    let mut cfg = CompareConfig {
        data: DataSource::Csv(PathBuf::new()),
        seed: 0,
        train_fraction: 0.7,
        models: vec![
            (ModelKind::Sbsr, false),
            (ModelKind::Sbsr, true),
            (ModelKind::Gep, false),
            (ModelKind::Gep, true),
            (ModelKind::Anfis, false),
            (ModelKind::Anfis, true),
        ],
        feature_mode: FeatureMode::BestPerParent,
        hcvcm_generations: 1,
        gep: GepConfig::default(),
        anfis: AnfisConfig::default(),
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        let ctx = || format!("line {}: key {key:?}", lineno + 1);
        match key.as_str() {
            "data" => {
                let path = base_dir.join(value);
                data = Some(DataSource::Csv(path));
            }
            "synthetic" => {
                let path = base_dir.join(value);
                let spec_text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading generator spec {}", path.display()))?;
                data = Some(DataSource::Synthetic(parse_generator_spec(&spec_text)?));
            }
            "seed" => cfg.seed = value.parse().with_context(ctx)?,
            "train_fraction" => cfg.train_fraction = value.parse().with_context(ctx)?,
            "models" => {
                cfg.models = value
                    .split(',')
                    .map(|m| parse_model_entry(m.trim()))
                    .collect::<Result<_>>()?;
            }
            "feature_mode" => cfg.feature_mode = FeatureMode::parse(value)?,
            "hcvcm_generations" => cfg.hcvcm_generations = value.parse().with_context(ctx)?,
            "gep.population" => cfg.gep.population = value.parse().with_context(ctx)?,
            "gep.generations" => cfg.gep.generations = value.parse().with_context(ctx)?,
            "gep.head_length" => cfg.gep.head_length = value.parse().with_context(ctx)?,
            "gep.genes" => cfg.gep.genes_per_chromosome = value.parse().with_context(ctx)?,
            "gep.mutation_rate" => cfg.gep.mutation_rate = value.parse().with_context(ctx)?,
            "gep.one_point_rate" => {
                cfg.gep.one_point_recomb_rate = value.parse().with_context(ctx)?
            }
            "gep.two_point_rate" => {
                cfg.gep.two_point_recomb_rate = value.parse().with_context(ctx)?
            }
            "gep.gene_rate" => cfg.gep.gene_recomb_rate = value.parse().with_context(ctx)?,
            "gep.is_rate" => cfg.gep.is_transposition_rate = value.parse().with_context(ctx)?,
            "gep.constants_count" => cfg.gep.constants_count = value.parse().with_context(ctx)?,
            "gep.constants_lo" => cfg.gep.constants_range.0 = value.parse().with_context(ctx)?,
            "gep.constants_hi" => cfg.gep.constants_range.1 = value.parse().with_context(ctx)?,
            "gep.patience" => cfg.gep.plateau_patience = value.parse().with_context(ctx)?,
            "anfis.mfs_per_input" => cfg.anfis.mfs_per_input = value.parse().with_context(ctx)?,
            "anfis.epochs" => cfg.anfis.epochs = value.parse().with_context(ctx)?,
            "anfis.learning_rate" => cfg.anfis.learning_rate = value.parse().with_context(ctx)?,
            "anfis.hybrid" => cfg.anfis.hybrid = value.parse().with_context(ctx)?,
            other => bail!("line {}: unknown key {other:?}", lineno + 1),
        }
    }

    match data {
        Some(d) => cfg.data = d,
        None => bail!("config must set exactly one of `data` or `synthetic`"),
    }
    Ok(cfg)
}
