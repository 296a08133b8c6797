//! Browser bindings for the prediction pipeline.
//!
//! Three operations back the demo page: draw a calibrated synthetic dataset,
//! fit one of the six model configurations on a shared split, and inspect how
//! training reshapes the ANFIS membership functions. Results cross the
//! boundary as JSON strings; failures come back as `{"error": "..."}` so the
//! page can render them without unwinding.

use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

use sonreb::anfis::{self, AnfisConfig};
use sonreb::data::{split_dataset, Dataset, COL_CCS, COL_RN, COL_UPV};
use sonreb::gep::{self, GepConfig};
use sonreb::hcvcm::{self, TransformKind};
use sonreb::metrics::{evaluate, MetricsReport};
use sonreb::pipeline::{ANFIS_SEED_OFFSET, GEP_SEED_OFFSET, SPLIT_SEED_OFFSET};
use sonreb::sbsr;
use sonreb::synth::{generate_synthetic, GeneratorSpec};
use sonreb::Result;

fn err_json(e: impl std::fmt::Display) -> String {
    json!({ "error": e.to_string() }).to_string()
}

fn dataset(n: u32, seed: u32) -> Result<Dataset> {
    generate_synthetic(&GeneratorSpec::sonreb_default(n as usize, seed as u64))
}

/// Calibrated synthetic dataset as `{upv, rn, ccs}` arrays.
#[wasm_bindgen]
pub fn generate_scatter(n: u32, seed: u32) -> String {
    match generate_scatter_impl(n, seed) {
        Ok(s) => s,
        Err(e) => err_json(e),
    }
}

fn generate_scatter_impl(n: u32, seed: u32) -> Result<String> {
    let d = dataset(n, seed)?;
    Ok(json!({
        "upv": d.column(COL_UPV)?,
        "rn": d.column(COL_RN)?,
        "ccs": d.column(COL_CCS)?,
    })
    .to_string())
}

fn report_json(r: &MetricsReport) -> serde_json::Value {
    json!({
        "r2": r.r2,
        "rmse": r.rmse,
        "nmse": r.nmse,
        "fb": r.fb,
        "max_pos_err": r.max_pos_err,
        "max_neg_err": r.max_neg_err,
        "mape": r.mape,
    })
}

/// Fits one model configuration on a seeded split of a synthetic dataset and
/// returns per-row predictions plus both metric reports.
///
/// `model` is `sbsr`, `gep` or `anfis`; `hcvcm` switches on feature
/// construction (best feature per parent variable).
#[wasm_bindgen]
pub fn fit_predict(model: &str, hcvcm: bool, n: u32, seed: u32, train_fraction: f64) -> String {
    match fit_predict_impl(model, hcvcm, n, seed, train_fraction) {
        Ok(s) => s,
        Err(e) => err_json(e),
    }
}

fn fit_predict_impl(
    model: &str,
    hcvcm_on: bool,
    n: u32,
    seed: u32,
    train_fraction: f64,
) -> Result<String> {
    let seed = seed as u64;
    let d = dataset(n, seed as u32)?;
    let d = split_dataset(&d, train_fraction, seed.wrapping_add(SPLIT_SEED_OFFSET))?;
    let inputs = vec![COL_UPV.to_string(), COL_RN.to_string()];

    let mut selected_names: Vec<String> = Vec::new();
    let (model_data, model_inputs) = if hcvcm_on {
        let fs = hcvcm::run_generations(&d, &inputs, COL_CCS, &TransformKind::DEFAULT_LIBRARY, 1)?;
        let fs = hcvcm::reduce_best_per_parent(&fs);
        if fs.is_empty() {
            (d.clone(), inputs)
        } else {
            selected_names = fs.names();
            (hcvcm::materialize(&fs, &d, COL_CCS)?, fs.names())
        }
    } else {
        (d.clone(), inputs)
    };

    let mut expression = String::new();
    let predicted: Vec<f64> = match model {
        "sbsr" => {
            let m = sbsr::sbsr_fit(&model_data, &model_inputs, COL_CCS)?;
            sbsr::sbsr_predict(&m, &model_data)?
        }
        "gep" => {
            // browser-sized evolution budget
            let cfg = GepConfig {
                population: 30,
                generations: 80,
                plateau_patience: 25,
                seed: seed.wrapping_add(GEP_SEED_OFFSET),
                ..GepConfig::default()
            };
            let m = gep::evolve(&model_data, &model_inputs, COL_CCS, &cfg)?;
            expression = m.expression();
            m.predict(&model_data)?
        }
        "anfis" => {
            let cfg = AnfisConfig {
                epochs: 40,
                seed: seed.wrapping_add(ANFIS_SEED_OFFSET),
                ..AnfisConfig::default()
            };
            let m = anfis::train_hybrid(&model_data, &model_inputs, COL_CCS, &cfg)?;
            m.model.predict(&model_data)?
        }
        other => {
            return Err(sonreb::Error::Config(format!(
                "unknown model {other:?} (expected sbsr, gep or anfis)"
            )))
        }
    };

    let actual = d.column(COL_CCS)?;
    let split = d.require_split()?;
    let gather = |idx: &[usize], v: &[f64]| -> Vec<f64> { idx.iter().map(|&i| v[i]).collect() };
    let train_report = evaluate(
        &gather(&split.train, actual),
        &gather(&split.train, &predicted),
    )?;
    let test_report = evaluate(
        &gather(&split.test, actual),
        &gather(&split.test, &predicted),
    )?;

    let mut tags = vec!["train"; d.n_rows()];
    for &i in &split.test {
        tags[i] = "test";
    }
    Ok(json!({
        "label": if hcvcm_on { format!("hcvcm-{model}") } else { model.to_string() },
        "actual": actual,
        "predicted": predicted,
        "split": tags,
        "selected_features": selected_names,
        "expression": expression,
        "metrics": { "train": report_json(&train_report), "test": report_json(&test_report) },
    })
    .to_string())
}

/// Trains an ANFIS on a synthetic dataset and returns the membership curves
/// of every input before and after training, each sampled on a 100-point
/// grid over the input's range.
#[wasm_bindgen]
pub fn anfis_membership(n: u32, seed: u32, mfs_per_input: u32, epochs: u32) -> String {
    match anfis_membership_impl(n, seed, mfs_per_input, epochs) {
        Ok(s) => s,
        Err(e) => err_json(e),
    }
}

fn anfis_membership_impl(n: u32, seed: u32, mfs_per_input: u32, epochs: u32) -> Result<String> {
    let seed = seed as u64;
    let d = dataset(n, seed as u32)?;
    let d = split_dataset(&d, 0.7, seed.wrapping_add(SPLIT_SEED_OFFSET))?;
    let inputs = vec![COL_UPV.to_string(), COL_RN.to_string()];
    let initial_cfg = AnfisConfig {
        mfs_per_input: mfs_per_input as usize,
        epochs: 1,
        learning_rate: 0.0,
        seed: seed.wrapping_add(ANFIS_SEED_OFFSET),
        ..AnfisConfig::default()
    };
    let trained_cfg = AnfisConfig {
        epochs: epochs.max(1) as usize,
        learning_rate: 0.02,
        ..initial_cfg
    };
    let initial = anfis::train_hybrid(&d, &inputs, COL_CCS, &initial_cfg)?;
    let trained = anfis::train_hybrid(&d, &inputs, COL_CCS, &trained_cfg)?;

    let mut per_input = Vec::new();
    for (i, name) in inputs.iter().enumerate() {
        let col = d.column(name)?;
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let grid: Vec<f64> = (0..100).map(|g| lo + (hi - lo) * g as f64 / 99.0).collect();
        let curves = |model: &anfis::AnfisModel| -> Result<Vec<Vec<f64>>> {
            model.premise()[i]
                .iter()
                .map(|mf| {
                    grid.iter()
                        .map(|&x| anfis::membership(x, mf.center, mf.sigma))
                        .collect()
                })
                .collect()
        };
        per_input.push(json!({
            "name": name,
            "grid": grid,
            "initial": curves(&initial.model)?,
            "trained": curves(&trained.model)?,
        }));
    }
    Ok(json!({
        "inputs": per_input,
        "rmse_trace": trained.rmse_trace,
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_has_three_equal_length_arrays() {
        let v: serde_json::Value = serde_json::from_str(&generate_scatter(60, 1)).unwrap();
        let upv = v["upv"].as_array().unwrap();
        assert_eq!(upv.len(), 60);
        assert_eq!(v["rn"].as_array().unwrap().len(), 60);
        assert_eq!(v["ccs"].as_array().unwrap().len(), 60);
    }

    #[test]
    fn fit_predict_reports_metrics_and_rows() {
        let v: serde_json::Value =
            serde_json::from_str(&fit_predict("sbsr", true, 120, 2, 0.7)).unwrap();
        assert!(v.get("error").is_none(), "{v}");
        assert_eq!(v["actual"].as_array().unwrap().len(), 120);
        assert_eq!(v["predicted"].as_array().unwrap().len(), 120);
        assert!(v["metrics"]["train"]["rmse"].as_f64().unwrap() >= 0.0);
        assert!(v["metrics"]["test"]["r2"].as_f64().unwrap() <= 1.0);
        let tags = v["split"].as_array().unwrap();
        assert_eq!(tags.iter().filter(|t| t == &"train").count(), 84);
    }

    #[test]
    fn unknown_model_reports_error_json() {
        let v: serde_json::Value =
            serde_json::from_str(&fit_predict("mlp", false, 50, 1, 0.7)).unwrap();
        assert!(v["error"].as_str().unwrap().contains("unknown model"));
    }

    #[test]
    fn membership_curves_cover_both_inputs() {
        let v: serde_json::Value = serde_json::from_str(&anfis_membership(80, 1, 3, 5)).unwrap();
        let inputs = v["inputs"].as_array().unwrap();
        assert_eq!(inputs.len(), 2);
        for input in inputs {
            assert_eq!(input["grid"].as_array().unwrap().len(), 100);
            assert_eq!(input["initial"].as_array().unwrap().len(), 3);
            assert_eq!(input["trained"].as_array().unwrap().len(), 3);
        }
        assert_eq!(v["rmse_trace"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn gep_fit_returns_expression() {
        let v: serde_json::Value =
            serde_json::from_str(&fit_predict("gep", false, 60, 3, 0.7)).unwrap();
        assert!(v.get("error").is_none(), "{v}");
        assert!(!v["expression"].as_str().unwrap().is_empty());
    }
}
