//! Model evaluation statistics and the pairwise coefficient of determination.
//!
//! The coefficient of determination used throughout the crate — both for
//! variable screening and for model scoring — is the squared Pearson
//! correlation of two series.

use crate::error::{Error, Result};

/// The seven statistics reported for one model on one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// Squared Pearson correlation of actual vs. predicted (0 when the
    /// correlation is undefined because one series is constant).
    pub r2: f64,
    /// Root mean square error, kg/cm².
    pub rmse: f64,
    /// Mean squared error normalized by mean(actual)·mean(predicted).
    pub nmse: f64,
    /// Fractional bias: 2·(mean(actual) − mean(predicted)) / (mean(actual) + mean(predicted)).
    pub fb: f64,
    /// Largest error (actual − predicted), kg/cm².
    pub max_pos_err: f64,
    /// Smallest error (actual − predicted), kg/cm².
    pub max_neg_err: f64,
    /// Mean absolute percentage error, percent of actual.
    pub mape: f64,
}

/// Header of the flattened report CSV: one row per (model, split).
pub const REPORT_CSV_HEADER: &str = "model,split,r2,rmse,nmse,fb,max_pos_err,max_neg_err,mape";

impl MetricsReport {
    /// One CSV row in the [`REPORT_CSV_HEADER`] schema.
    pub fn csv_row(&self, model: &str, split: &str) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            model,
            split,
            self.r2,
            self.rmse,
            self.nmse,
            self.fb,
            self.max_pos_err,
            self.max_neg_err,
            self.mape
        )
    }
}

/// Squared Pearson correlation of two equal-length series.
///
/// Symmetric in its arguments and invariant under affine maps with nonzero
/// slope. Errors when either series has zero variance.
pub fn coeff_det(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateInput(
            "coefficient of determination needs at least 2 rows".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput(
            "zero variance series has no correlation".into(),
        ));
    }
    Ok(((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0))
}

/// Computes the full report for a prediction series.
///
/// Errors are `e_i = actual_i − predicted_i`, so under-prediction gives a
/// positive error. All actual values must be strictly positive (MAPE divides
/// by them) and mean(predicted) must be positive (NMSE divides by it). When
/// actual vs. predicted has no defined correlation (one series constant),
/// `r2` is reported as 0.
pub fn evaluate(actual: &[f64], predicted: &[f64]) -> Result<MetricsReport> {
    if actual.len() != predicted.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} vs {}",
            actual.len(),
            predicted.len()
        )));
    }
    let n = actual.len();
    if n < 2 {
        return Err(Error::DegenerateInput(
            "evaluate needs at least 2 rows".into(),
        ));
    }
    if let Some(i) = actual.iter().position(|&a| a <= 0.0) {
        return Err(Error::Domain(format!(
            "MAPE needs positive actual values; actual[{i}] = {}",
            actual[i]
        )));
    }

    let mean_actual = actual.iter().sum::<f64>() / n as f64;
    let mean_predicted = predicted.iter().sum::<f64>() / n as f64;
    if mean_predicted <= 0.0 {
        return Err(Error::Domain(format!(
            "NMSE needs positive mean prediction, got {mean_predicted}"
        )));
    }

    let mut sq_sum = 0.0;
    let mut max_pos_err = f64::NEG_INFINITY;
    let mut max_neg_err = f64::INFINITY;
    let mut ape_sum = 0.0;
    for (&a, &p) in actual.iter().zip(predicted) {
        let e = a - p;
        sq_sum += e * e;
        max_pos_err = max_pos_err.max(e);
        max_neg_err = max_neg_err.min(e);
        ape_sum += (e / a).abs();
    }
    let mse = sq_sum / n as f64;

    let r2 = match coeff_det(actual, predicted) {
        Ok(v) => v,
        Err(Error::DegenerateInput(_)) => 0.0,
        Err(e) => return Err(e),
    };

    Ok(MetricsReport {
        r2,
        rmse: mse.sqrt(),
        nmse: mse / (mean_actual * mean_predicted),
        fb: 2.0 * (mean_actual - mean_predicted) / (mean_actual + mean_predicted),
        max_pos_err,
        max_neg_err,
        mape: 100.0 * ape_sum / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_linear_relation_is_one() {
        assert_eq!(coeff_det(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_quarter() {
        // r = 0.5 by direct Pearson evaluation
        let r2 = coeff_det(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert_relative_eq!(r2, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let err = coeff_det(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
    }

    #[test]
    fn perfect_prediction_report() {
        let r = evaluate(&[100.0, 200.0], &[100.0, 200.0]).unwrap();
        assert_eq!(r.rmse, 0.0);
        assert_eq!(r.nmse, 0.0);
        assert_eq!(r.fb, 0.0);
        assert_eq!(r.mape, 0.0);
        assert_eq!(r.r2, 1.0);
        assert_eq!(r.max_pos_err, 0.0);
        assert_eq!(r.max_neg_err, 0.0);
    }

    #[test]
    fn hand_evaluated_report() {
        let r = evaluate(&[100.0, 200.0], &[110.0, 190.0]).unwrap();
        assert_relative_eq!(r.rmse, 10.0, max_relative = 1e-12);
        assert_eq!(r.max_pos_err, 10.0);
        assert_eq!(r.max_neg_err, -10.0);
        assert_relative_eq!(r.mape, 7.5, max_relative = 1e-12);
        assert_relative_eq!(r.fb, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_actual_reports_zero_r2() {
        let r = evaluate(&[100.0, 100.0, 100.0], &[50.0, 100.0, 150.0]).unwrap();
        assert_eq!(r.max_pos_err, 50.0);
        assert_eq!(r.max_neg_err, -50.0);
        assert_relative_eq!(r.mape, 100.0 / 3.0, max_relative = 1e-9);
        assert_eq!(r.r2, 0.0);
    }

    #[test]
    fn zero_actual_is_domain_error() {
        assert!(matches!(
            evaluate(&[100.0, 0.0], &[90.0, 10.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn nonpositive_mean_prediction_is_domain_error() {
        assert!(matches!(
            evaluate(&[100.0, 200.0], &[-150.0, 100.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn csv_row_schema() {
        let r = evaluate(&[100.0, 200.0], &[100.0, 200.0]).unwrap();
        assert_eq!(r.csv_row("sbsr", "train"), "sbsr,train,1,0,0,0,0,0,0");
    }

    fn vecs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(1.0f64..1e3, n),
                prop::collection::vec(1.0f64..1e3, n),
            )
        })
    }

    proptest! {
        #[test]
        fn self_evaluation_is_zero_report((a, _) in vecs()) {
            prop_assume!(a.iter().any(|&v| v != a[0]));
            let r = evaluate(&a, &a).unwrap();
            prop_assert_eq!(r.rmse, 0.0);
            prop_assert_eq!(r.mape, 0.0);
            prop_assert_eq!(r.r2, 1.0);
        }

        #[test]
        fn rmse_squares_to_naive_mean_square((a, p) in vecs()) {
            let r = evaluate(&a, &p).unwrap();
            // naive loop oracle
            let mut acc = 0.0;
            for i in 0..a.len() {
                let e = a[i] - p[i];
                acc += e * e;
            }
            let mse = acc / a.len() as f64;
            assert_relative_eq!(r.rmse * r.rmse, mse, max_relative = 1e-12, epsilon = 1e-12);
        }

        #[test]
        fn fb_is_antisymmetric((a, p) in vecs()) {
            let fwd = evaluate(&a, &p).unwrap();
            let rev = evaluate(&p, &a).unwrap();
            assert_relative_eq!(fwd.fb, -rev.fb, max_relative = 1e-10, epsilon = 1e-12);
        }

        #[test]
        fn coeff_det_symmetric_and_affine_invariant(
            (x, y) in vecs(),
            a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
            b in -10.0f64..10.0,
        ) {
            prop_assume!(x.iter().any(|&v| v != x[0]) && y.iter().any(|&v| v != y[0]));
            let xy = coeff_det(&x, &y).unwrap();
            let yx = coeff_det(&y, &x).unwrap();
            assert_relative_eq!(xy, yx, max_relative = 1e-12, epsilon = 1e-12);
            let mapped: Vec<f64> = x.iter().map(|&v| a * v + b).collect();
            let m = coeff_det(&mapped, &y).unwrap();
            assert_relative_eq!(m, xy, max_relative = 1e-9, epsilon = 1e-11);
        }
    }
}
