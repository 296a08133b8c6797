//! Step-by-step regression: inputs are sorted by their coefficient of
//! determination with the output, each cell fits an OLS model that consumes
//! the previous cell's prediction, and a final OLS stage combines all cell
//! outputs.
//!
//! Cell 1 fits `y = b1 + b2·x1`; cell i ≥ 2 fits `y = a + b·x_i + c·F_{i-1}`
//! where `F_{i-1}` is the previous cell's prediction; the final stage fits
//! `y` on all cell predictions `F_1..F_n`.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::coeff_det;

/// A factorization pivot below this fraction of the largest pivot marks the
/// design as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Ordinary least squares on a design matrix that already carries its leading
/// ones column. Solves the normal equations through a Householder QR
/// factorization; columns are named by index in error messages.
pub fn ols_fit(design: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let names: Vec<String> = (0..design.ncols()).map(|i| i.to_string()).collect();
    ols_fit_named(design, y, &names)
}

/// [`ols_fit`] with caller-supplied column names for error reporting.
pub fn ols_fit_named(design: &DMatrix<f64>, y: &[f64], names: &[String]) -> Result<Vec<f64>> {
    let (rows, cols) = design.shape();
    if names.len() != cols {
        return Err(Error::Domain(format!(
            "{} names for {cols} design columns",
            names.len()
        )));
    }
    if y.len() != rows {
        return Err(Error::Domain(format!(
            "design has {rows} rows but y has {}",
            y.len()
        )));
    }
    if rows < cols {
        return Err(Error::Domain(format!(
            "need at least as many rows ({rows}) as coefficients ({cols})"
        )));
    }
    if let Some(col) = rank_deficient_column(design) {
        return Err(Error::SingularDesign {
            column: names[col].clone(),
        });
    }
    let qr = design.clone().qr();
    let rhs = qr.q().transpose() * DVector::from_column_slice(y);
    let solution = qr
        .r()
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::SingularDesign {
            column: names[cols - 1].clone(),
        })?;
    Ok(solution.iter().copied().collect())
}

fn design_rank(m: &DMatrix<f64>) -> usize {
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let k = r.nrows().min(r.ncols());
    if k == 0 {
        return 0;
    }
    let largest = r[(0, 0)].abs();
    if largest == 0.0 {
        return 0;
    }
    (0..k)
        .take_while(|&i| r[(i, i)].abs() >= RANK_TOLERANCE * largest)
        .count()
}

/// Returns the index of a linearly dependent column, if any: the rightmost
/// column whose removal restores full rank.
fn rank_deficient_column(design: &DMatrix<f64>) -> Option<usize> {
    let cols = design.ncols();
    if design_rank(design) == cols {
        return None;
    }
    for drop in (0..cols).rev() {
        let kept: Vec<usize> = (0..cols).filter(|&c| c != drop).collect();
        let reduced = design.select_columns(&kept);
        if design_rank(&reduced) == cols - 1 {
            return Some(drop);
        }
    }
    Some(cols - 1)
}

/// Fitted step-by-step regression model.
#[derive(Debug, Clone, PartialEq)]
pub struct SbsrModel {
    /// Input names sorted by descending training-split r² with the output.
    order: Vec<String>,
    /// Cell 0 holds `[intercept, slope]`; cell i ≥ 1 holds
    /// `[intercept, coefficient on x_i, coefficient on F_{i-1}]`.
    cells: Vec<Vec<f64>>,
    /// `[intercept, coefficient on F_1, ..., coefficient on F_n]`.
    final_stage: Vec<f64>,
}

impl SbsrModel {
    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn cells(&self) -> &[Vec<f64>] {
        &self.cells
    }

    pub fn final_stage(&self) -> &[f64] {
        &self.final_stage
    }

    pub fn coefficient_count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum::<usize>() + self.final_stage.len()
    }

    /// Flat text persistence: one `order`/`cell`/`final` line per stage.
    /// Floats round-trip exactly through their shortest decimal form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("order");
        for name in &self.order {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for cell in &self.cells {
            out.push_str("cell");
            for c in cell {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out.push_str("final");
        for c in &self.final_stage {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<SbsrModel> {
        let mut order = None;
        let mut cells = Vec::new();
        let mut final_stage = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let tag = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let parse_coefs = |items: &[&str]| -> Result<Vec<f64>> {
                items
                    .iter()
                    .map(|v| {
                        v.parse::<f64>().map_err(|_| Error::Parse {
                            row: lineno + 1,
                            detail: format!("bad coefficient {v:?}"),
                        })
                    })
                    .collect()
            };
            match tag {
                "order" => order = Some(rest.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
                "cell" => cells.push(parse_coefs(&rest)?),
                "final" => final_stage = Some(parse_coefs(&rest)?),
                other => {
                    return Err(Error::Parse {
                        row: lineno + 1,
                        detail: format!("unknown stage tag {other:?}"),
                    })
                }
            }
        }
        let order: Vec<String> = order.ok_or_else(|| Error::Parse {
            row: 0,
            detail: "missing order line".into(),
        })?;
        let final_stage = final_stage.ok_or_else(|| Error::Parse {
            row: 0,
            detail: "missing final line".into(),
        })?;
        if cells.len() != order.len() || final_stage.len() != cells.len() + 1 {
            return Err(Error::Parse {
                row: 0,
                detail: "inconsistent stage counts".into(),
            });
        }
        Ok(SbsrModel {
            order,
            cells,
            final_stage,
        })
    }
}

/// Ranks inputs by descending training-split r² with the output, ties broken
/// lexicographically by name.
pub fn order_by_r2(d: &Dataset, inputs: &[String], output: &str) -> Result<Vec<(String, f64)>> {
    let y = d.train_column(output)?;
    let mut ranked: Vec<(String, f64)> = Vec::with_capacity(inputs.len());
    for name in inputs {
        let x = d.train_column(name)?;
        ranked.push((name.clone(), coeff_det(&x, &y)?));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Fits the chained model on the training split.
pub fn sbsr_fit(d: &Dataset, inputs: &[String], output: &str) -> Result<SbsrModel> {
    if inputs.is_empty() {
        return Err(Error::Domain("sbsr needs at least one input".into()));
    }
    let order: Vec<String> = order_by_r2(d, inputs, output)?
        .into_iter()
        .map(|(name, _)| name)
        .collect();
    let y = d.train_column(output)?;
    let n = y.len();

    let mut cells: Vec<Vec<f64>> = Vec::with_capacity(order.len());
    let mut cell_outputs: Vec<Vec<f64>> = Vec::with_capacity(order.len());
    for (i, name) in order.iter().enumerate() {
        let x = d.train_column(name)?;
        let (design, names) = if i == 0 {
            (
                DMatrix::from_fn(n, 2, |r, c| if c == 0 { 1.0 } else { x[r] }),
                vec!["intercept".to_string(), name.clone()],
            )
        } else {
            let prev = &cell_outputs[i - 1];
            (
                DMatrix::from_fn(n, 3, |r, c| match c {
                    0 => 1.0,
                    1 => x[r],
                    _ => prev[r],
                }),
                vec!["intercept".to_string(), name.clone(), format!("F{}", i)],
            )
        };
        let coefs = ols_fit_named(&design, &y, &names)?;
        let fitted: Vec<f64> = (0..n)
            .map(|r| {
                coefs
                    .iter()
                    .enumerate()
                    .map(|(c, b)| b * design[(r, c)])
                    .sum()
            })
            .collect();
        cells.push(coefs);
        cell_outputs.push(fitted);
    }

    let k = order.len();
    let final_design =
        DMatrix::from_fn(
            n,
            k + 1,
            |r, c| {
                if c == 0 {
                    1.0
                } else {
                    cell_outputs[c - 1][r]
                }
            },
        );
    let mut final_names = vec!["intercept".to_string()];
    final_names.extend((1..=k).map(|i| format!("F{i}")));
    let final_stage = ols_fit_named(&final_design, &y, &final_names)?;

    Ok(SbsrModel {
        order,
        cells,
        final_stage,
    })
}

/// Evaluates the chain on every row of `rows`.
pub fn sbsr_predict(m: &SbsrModel, rows: &Dataset) -> Result<Vec<f64>> {
    Ok(sbsr_stage_predictions(m, rows)?.1)
}

/// Per-cell predictions plus the final-stage prediction, for every row.
pub fn sbsr_stage_predictions(m: &SbsrModel, rows: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = rows.n_rows();
    let mut cell_outputs: Vec<Vec<f64>> = Vec::with_capacity(m.order.len());
    for (i, name) in m.order.iter().enumerate() {
        let x = rows.column(name)?;
        let coefs = &m.cells[i];
        let fitted: Vec<f64> = (0..n)
            .map(|r| {
                if i == 0 {
                    coefs[0] + coefs[1] * x[r]
                } else {
                    coefs[0] + coefs[1] * x[r] + coefs[2] * cell_outputs[i - 1][r]
                }
            })
            .collect();
        cell_outputs.push(fitted);
    }
    let final_pred = (0..n)
        .map(|r| {
            m.final_stage[0]
                + m.final_stage[1..]
                    .iter()
                    .zip(&cell_outputs)
                    .map(|(b, f)| b * f[r])
                    .sum::<f64>()
        })
        .collect();
    Ok((cell_outputs, final_pred))
}
