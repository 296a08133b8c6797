//! Shared helpers for the integration and acceptance suites.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sonreb::data::Dataset;

pub fn population_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Standardizes to zero mean, unit population sd.
pub fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = population_sd(v);
    v.iter().map(|x| (x - mean) / sd).collect()
}

pub fn pearson_r2(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
        sab += (x - ma) * (y - mb);
    }
    (sab * sab) / (saa * sbb)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the sample projection of `v` onto each (zero-mean) basis vector,
/// then restandardizes.
fn residualize(v: &[f64], bases: &[&[f64]]) -> Vec<f64> {
    let mut out = v.to_vec();
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    for x in out.iter_mut() {
        *x -= mean;
    }
    for basis in bases {
        let coef = dot(&out, basis) / dot(basis, basis);
        for (x, b) in out.iter_mut().zip(*basis) {
            *x -= coef * b;
        }
    }
    standardize(&out)
}

/// A SonReb-like dataset engineered so the raw pairwise r² values land on
/// (upv↔ccs 0.443, rn↔ccs 0.758, rn↔upv 0.513) while the strength column
/// genuinely depends on rn² and exp(upv), so squared/exponential candidates
/// beat their parents.
///
/// Construction: upv is clipped normal; rn mixes the upv direction with the
/// exp(upv) residual direction (target corr(rn, exp(upv)) = 0.70) plus
/// orthogonalized noise; ccs solves a 2×2 system on the realized sample
/// moments so its correlations with rn and upv hit the targets.
pub fn engineered_nonlinear_dataset(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    let upv: Vec<f64> = (0..n)
        .map(|_| (4.44 + 0.35 * normal(&mut rng)).clamp(3.37, 5.22))
        .collect();
    let p = standardize(&upv);
    let exp_upv: Vec<f64> = upv.iter().map(|v| v.exp()).collect();
    let u = standardize(&exp_upv);
    let u_perp = residualize(&u, &[&p]);

    let a = 0.513f64.sqrt();
    let c_up = dot(&u, &p) / n as f64;
    let tau = 0.700;
    let b = (tau - a * c_up) / (1.0 - c_up * c_up).sqrt();
    let c = (1.0 - a * a - b * b).max(0.0).sqrt();
    let noise1: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let e1 = residualize(&noise1, &[&p, &u_perp]);
    let rn: Vec<f64> = (0..n)
        .map(|i| (29.0 + 9.0 * (a * p[i] + b * u_perp[i] + c * e1[i])).max(0.5))
        .collect();

    let rn_sq: Vec<f64> = rn.iter().map(|v| v * v).collect();
    let v = standardize(&rn_sq);
    let noise2: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let e2 = residualize(&noise2, &[&v, &u]);

    let corr = |x: &[f64], y: &[f64]| dot(x, &standardize(y)) / n as f64;
    let c_v_rn = corr(&v, &rn);
    let c_u_rn = corr(&u, &rn);
    let c_v_up = corr(&v, &upv);
    let c_u_up = corr(&u, &upv);
    let c_uv = dot(&u, &v) / n as f64;
    let t_rn = 0.758f64.sqrt();
    let t_up = 0.443f64.sqrt();
    let det = c_v_rn * c_u_up - c_u_rn * c_v_up;
    let alpha = (t_rn * c_u_up - c_u_rn * t_up) / det;
    let beta = (c_v_rn * t_up - t_rn * c_v_up) / det;
    let var_lin = alpha * alpha + beta * beta + 2.0 * alpha * beta * c_uv;
    let sigma = (1.0 - var_lin).max(0.0).sqrt();

    let ccs_raw: Vec<f64> = (0..n)
        .map(|i| alpha * v[i] + beta * u[i] + sigma * e2[i])
        .collect();
    let ccs_std = standardize(&ccs_raw);
    let ccs: Vec<f64> = ccs_std.iter().map(|z| 277.0 + 60.0 * z).collect();
    assert!(
        ccs.iter().all(|&v| v > 0.0),
        "engineered ccs went non-positive"
    );

    Dataset::from_columns(
        vec!["upv".into(), "rn".into(), "ccs".into()],
        vec![upv, rn, ccs],
    )
    .unwrap()
}

/// Writes a dataset's upv/rn/ccs columns as a CSV file.
pub fn write_csv(d: &Dataset, path: &std::path::Path) {
    let mut text = String::from("upv,rn,ccs\n");
    let upv = d.column("upv").unwrap();
    let rn = d.column("rn").unwrap();
    let ccs = d.column("ccs").unwrap();
    for i in 0..d.n_rows() {
        text.push_str(&format!("{},{},{}\n", upv[i], rn[i], ccs[i]));
    }
    std::fs::write(path, text).unwrap();
}
