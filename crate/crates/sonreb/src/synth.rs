//! Synthetic SonReb data calibrated to published dataset statistics.
//!
//! Triples (upv, rn, ccs) are drawn from a Gaussian copula: a latent
//! standard-normal matrix is whitened to the exact sample identity covariance
//! and rotated onto the target correlation, then each marginal is rescaled to
//! the target mean/sd and clipped to the target [min, max]. The rescale+clip
//! step is iterated a fixed number of times so the clipping bias on the
//! realized moments stays far inside the ±5% calibration band.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, Sample, SummaryStats, COL_CCS, COL_RN, COL_UPV};
use crate::error::{Error, Result};

/// Number of rescale→clip passes applied to each marginal.
const MOMENT_MATCH_PASSES: usize = 3;

/// Eigenvalues below this are treated as negative (non-PSD rejection).
const PSD_TOLERANCE: f64 = -1e-9;

/// Calibration targets for the generator: per-variable moments plus a signed
/// Pearson correlation matrix in (upv, rn, ccs) order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub seed: u64,
    pub upv: SummaryStats,
    pub rn: SummaryStats,
    pub ccs: SummaryStats,
    /// 3×3 signed Pearson correlation, rows/columns ordered (upv, rn, ccs).
    pub target_corr: [[f64; 3]; 3],
}

impl GeneratorSpec {
    /// Default calibration: the variable ranges, moments and squared
    /// correlations of the 516-sample SonReb compilation this crate targets
    /// (UPV in km/s, RN dimensionless, CCS in kg/cm²). Correlation signs are
    /// all positive: higher rebound and pulse velocity go with higher
    /// strength.
    pub fn sonreb_default(n: usize, seed: u64) -> Self {
        let stats = |min: f64, max: f64, average: f64, sd: f64, median: f64| SummaryStats {
            min,
            max,
            average,
            sd,
            median,
        };
        GeneratorSpec {
            n,
            seed,
            upv: stats(3.37, 5.22, 4.44, 0.35, 4.45),
            rn: stats(3.0, 52.0, 29.0, 7.32, 28.0),
            ccs: stats(113.33, 569.21, 276.92, 98.60, 261.97),
            target_corr: corr_from_r2(0.443, 0.758, 0.513),
        }
    }

    fn variables(&self) -> [(&'static str, &SummaryStats); 3] {
        [
            (COL_UPV, &self.upv),
            (COL_RN, &self.rn),
            (COL_CCS, &self.ccs),
        ]
    }

    /// Checks the correlation matrix (symmetric, unit diagonal, positive
    /// semidefinite) and the per-variable moment targets.
    pub fn validate(&self) -> Result<()> {
        let c = &self.target_corr;
        for (i, row) in c.iter().enumerate() {
            if (row[i] - 1.0).abs() > 1e-12 {
                return Err(Error::Domain("correlation diagonal must be 1".into()));
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() || (v - c[j][i]).abs() > 1e-12 {
                    return Err(Error::Domain("correlation matrix must be symmetric".into()));
                }
            }
        }
        let m = DMatrix::from_fn(3, 3, |i, j| self.target_corr[i][j]);
        let eigen = m.symmetric_eigenvalues();
        if eigen.iter().any(|&l| l < PSD_TOLERANCE) {
            return Err(Error::Domain(format!(
                "correlation matrix is not positive semidefinite (eigenvalue {})",
                eigen.min()
            )));
        }
        for (name, s) in self.variables() {
            if !(s.min.is_finite()
                && s.max.is_finite()
                && s.average.is_finite()
                && s.sd.is_finite())
            {
                return Err(Error::Domain(format!("{name}: non-finite moment target")));
            }
            if s.min > s.max {
                return Err(Error::Domain(format!("{name}: min > max")));
            }
            if s.sd <= 0.0 {
                return Err(Error::Domain(format!("{name}: sd must be positive")));
            }
            if s.average < s.min || s.average > s.max {
                return Err(Error::Domain(format!("{name}: mean outside [min, max]")));
            }
        }
        // the clipped output must satisfy the sample invariants
        if self.upv.min <= 0.0 || self.ccs.min <= 0.0 || self.rn.min < 0.0 {
            return Err(Error::Domain(
                "min targets must respect upv > 0, ccs > 0, rn >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the signed correlation matrix from the three squared correlations
/// (upv↔ccs, rn↔ccs, rn↔upv), taking all signs positive.
pub fn corr_from_r2(r2_upv_ccs: f64, r2_rn_ccs: f64, r2_rn_upv: f64) -> [[f64; 3]; 3] {
    let cu = r2_upv_ccs.sqrt();
    let cr = r2_rn_ccs.sqrt();
    let ru = r2_rn_upv.sqrt();
    [[1.0, ru, cu], [ru, 1.0, cr], [cu, cr, 1.0]]
}

/// Draws a calibrated dataset. Deterministic for a fixed spec.
pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.n;
    if n == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut latent = DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal));

    // center columns
    for mut col in latent.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }

    // whiten to the exact sample covariance, when it is invertible
    if n > 3 {
        let cov = latent.transpose() * &latent / n as f64;
        if let Some(chol) = cov.cholesky() {
            // solve L * y = x^T for each row: latent <- latent * L^{-T}
            let l_inv = chol
                .l()
                .try_inverse()
                .ok_or_else(|| Error::Domain("latent covariance not invertible".into()))?;
            latent *= l_inv.transpose();
        }
    }

    // rotate onto the target correlation via its eigendecomposition
    let target = DMatrix::from_fn(3, 3, |i, j| spec.target_corr[i][j]);
    let eigen = target.symmetric_eigen();
    let sqrt_vals = DVector::from_iterator(3, eigen.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
    let rotate = &eigen.eigenvectors * DMatrix::from_diagonal(&sqrt_vals);
    let z = latent * rotate.transpose();

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(3);
    for (j, (_, stats)) in spec.variables().into_iter().enumerate() {
        let mut col: Vec<f64> = z.column(j).iter().copied().collect();
        for _ in 0..MOMENT_MATCH_PASSES {
            rescale_to(&mut col, stats.average, stats.sd);
            for v in col.iter_mut() {
                *v = v.clamp(stats.min, stats.max);
            }
        }
        cols.push(col);
    }

    let samples: Vec<Sample> = (0..n)
        .map(|i| Sample::new(cols[0][i], cols[1][i], cols[2][i]))
        .collect::<Result<_>>()?;
    Ok(Dataset::from_samples(&samples))
}

/// Rescales values in place to the exact target mean and (population) sd.
/// Constant columns (single draw) only get the mean shift.
fn rescale_to(values: &mut [f64], mean: f64, sd: f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    if var > 0.0 {
        let scale = sd / var.sqrt();
        for v in values.iter_mut() {
            *v = mean + scale * (*v - m);
        }
    } else {
        for v in values.iter_mut() {
            *v = mean;
        }
    }
}

/// Parses the flat `key = value` generator spec format.
///
/// Recognized keys: `n`, `seed`, `<var>.min|max|mean|sd|median` for
/// `upv`/`rn`/`ccs` (median optional, defaults to the mean), and
/// `corr.upv.rn`, `corr.upv.ccs`, `corr.rn.ccs` (signed Pearson r).
/// Lines starting with `#` and blank lines are ignored.
pub fn parse_generator_spec(text: &str) -> Result<GeneratorSpec> {
    let mut spec = GeneratorSpec::sonreb_default(516, 0);
    let mut medians_set = [false; 3];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            row: lineno + 1,
            detail: format!("expected key = value, got {line:?}"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        let parse_f = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::Parse {
                row: lineno + 1,
                detail: format!("cannot parse number {v:?} for key {key:?}"),
            })
        };
        match key.as_str() {
            "n" => {
                spec.n = value.parse().map_err(|_| Error::Parse {
                    row: lineno + 1,
                    detail: format!("cannot parse count {value:?}"),
                })?;
            }
            "seed" => {
                spec.seed = value.parse().map_err(|_| Error::Parse {
                    row: lineno + 1,
                    detail: format!("cannot parse seed {value:?}"),
                })?;
            }
            "corr.upv.rn" | "corr.rn.upv" => {
                let r = parse_f(value)?;
                spec.target_corr[0][1] = r;
                spec.target_corr[1][0] = r;
            }
            "corr.upv.ccs" | "corr.ccs.upv" => {
                let r = parse_f(value)?;
                spec.target_corr[0][2] = r;
                spec.target_corr[2][0] = r;
            }
            "corr.rn.ccs" | "corr.ccs.rn" => {
                let r = parse_f(value)?;
                spec.target_corr[1][2] = r;
                spec.target_corr[2][1] = r;
            }
            _ => {
                let (var, field) = key.split_once('.').ok_or_else(|| Error::Parse {
                    row: lineno + 1,
                    detail: format!("unknown key {key:?}"),
                })?;
                let vi = match var {
                    "upv" => 0,
                    "rn" => 1,
                    "ccs" => 2,
                    _ => {
                        return Err(Error::Parse {
                            row: lineno + 1,
                            detail: format!("unknown variable {var:?}"),
                        })
                    }
                };
                let stats = match vi {
                    0 => &mut spec.upv,
                    1 => &mut spec.rn,
                    _ => &mut spec.ccs,
                };
                let v = parse_f(value)?;
                match field {
                    "min" => stats.min = v,
                    "max" => stats.max = v,
                    "mean" | "average" => stats.average = v,
                    "sd" => stats.sd = v,
                    "median" => {
                        stats.median = v;
                        medians_set[vi] = true;
                    }
                    _ => {
                        return Err(Error::Parse {
                            row: lineno + 1,
                            detail: format!("unknown field {field:?} for {var:?}"),
                        })
                    }
                }
            }
        }
    }
    for (vi, set) in medians_set.iter().enumerate() {
        if !set {
            match vi {
                0 => spec.upv.median = spec.upv.average,
                1 => spec.rn.median = spec.rn.average,
                _ => spec.ccs.median = spec.ccs.average,
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Serializes a spec in the `key = value` format accepted by
/// [`parse_generator_spec`].
pub fn format_generator_spec(spec: &GeneratorSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("n = {}\nseed = {}\n", spec.n, spec.seed));
    for (name, s) in [("upv", &spec.upv), ("rn", &spec.rn), ("ccs", &spec.ccs)] {
        out.push_str(&format!(
            "{name}.min = {}\n{name}.max = {}\n{name}.mean = {}\n{name}.sd = {}\n{name}.median = {}\n",
            s.min, s.max, s.average, s.sd, s.median
        ));
    }
    out.push_str(&format!(
        "corr.upv.rn = {}\ncorr.upv.ccs = {}\ncorr.rn.ccs = {}\n",
        spec.target_corr[0][1], spec.target_corr[0][2], spec.target_corr[1][2]
    ));
    out
}
