//! Generate calibrated data, construct features, fit the chained regression
//! and print the training report.

use sonreb::data::split_dataset;
use sonreb::hcvcm::{self, TransformKind};
use sonreb::synth::{generate_synthetic, GeneratorSpec};
use sonreb::{metrics, sbsr};

fn main() -> sonreb::Result<()> {
    let data = generate_synthetic(&GeneratorSpec::sonreb_default(516, 42))?;
    let data = split_dataset(&data, 0.7, 1)?;
    let inputs = vec!["upv".to_string(), "rn".to_string()];

    let features =
        hcvcm::run_generations(&data, &inputs, "ccs", &TransformKind::DEFAULT_LIBRARY, 1)?;
    let best = hcvcm::reduce_best_per_parent(&features);
    println!("constructed features: {:?}", best.names());
    let (modeling, names) = if best.is_empty() {
        (data.clone(), inputs)
    } else {
        (hcvcm::materialize(&best, &data, "ccs")?, best.names())
    };

    let model = sbsr::sbsr_fit(&modeling, &names, "ccs")?;
    let predicted = sbsr::sbsr_predict(&model, &modeling)?;
    let train_rows = &data.split().unwrap().train;
    let ccs = data.column("ccs")?;
    let actual: Vec<f64> = train_rows.iter().map(|&i| ccs[i]).collect();
    let fitted: Vec<f64> = train_rows.iter().map(|&i| predicted[i]).collect();
    println!("train report: {:?}", metrics::evaluate(&actual, &fitted)?);
    Ok(())
}
