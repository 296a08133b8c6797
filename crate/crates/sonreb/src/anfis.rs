//! Grid-partitioned Takagi–Sugeno ANFIS with Gaussian memberships.
//!
//! The five-layer forward pass: layer 1 evaluates all memberships, layer 2
//! multiplies them into rule firing strengths, layer 3 normalizes, layer 4
//! weights each rule's linear consequent, layer 5 sums. Hybrid training
//! alternates a least-squares consequent update (premises held fixed make the
//! output linear in the consequents) with one full-batch gradient step on the
//! membership centers and widths; the parameter state with the lowest
//! training RMSE is returned.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Training refuses grid partitions beyond this many rules.
pub const MAX_RULES: usize = 10_000;
/// Total firing strength below this triggers the uniform-weight fallback.
const FIRING_UNDERFLOW: f64 = 1e-300;
/// Fraction of the input range used as the lower clamp for sigma.
const SIGMA_FLOOR_FRACTION: f64 = 1e-6;
/// Singular values below this fraction of the largest are truncated in the
/// consequent least-squares solve (minimum-norm behavior for dead rules).
const LSE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnfisConfig {
    pub mfs_per_input: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Hybrid (least squares + gradient) when true; pure gradient descent on
    /// all parameters when false.
    pub hybrid: bool,
    pub seed: u64,
}

impl Default for AnfisConfig {
    fn default() -> Self {
        AnfisConfig {
            mfs_per_input: 3,
            epochs: 100,
            learning_rate: 0.01,
            hybrid: true,
            seed: 0,
        }
    }
}

/// Gaussian membership parameters: center and width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipFn {
    pub center: f64,
    pub sigma: f64,
}

/// Gaussian membership value `exp(−(x − c)² / (2σ²))`; peaks at 1 when
/// `x = c`, symmetric about the center.
pub fn membership(x: f64, center: f64, sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let d = x - center;
    Ok((-d * d / (2.0 * sigma * sigma)).exp())
}

/// Output of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub prediction: f64,
    pub normalized_weights: Vec<f64>,
    /// True when every firing strength underflowed and uniform weights were
    /// substituted.
    pub underflow: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnfisModel {
    input_names: Vec<String>,
    /// `premise[input][mf]`.
    premise: Vec<Vec<MembershipFn>>,
    /// `consequents[rule]` holds one coefficient per input plus a constant.
    consequents: Vec<Vec<f64>>,
    /// Rules whose design columns were all ~zero in the last consequent fit.
    dead_rules: Vec<usize>,
}

impl AnfisModel {
    /// Builds a model from explicit parameters (used by tests and loaders).
    pub fn from_parts(
        input_names: Vec<String>,
        premise: Vec<Vec<MembershipFn>>,
        consequents: Vec<Vec<f64>>,
    ) -> Result<AnfisModel> {
        if premise.len() != input_names.len() {
            return Err(Error::Config(
                "one membership row per input required".into(),
            ));
        }
        let mfs = premise.first().map_or(0, Vec::len);
        if mfs < 1 || premise.iter().any(|p| p.len() != mfs) {
            return Err(Error::Config(
                "every input needs the same number of MFs".into(),
            ));
        }
        if premise
            .iter()
            .flatten()
            .any(|mf| mf.sigma.is_nan() || mf.sigma <= 0.0)
        {
            return Err(Error::Domain("sigma must be positive".into()));
        }
        let rules = mfs.pow(input_names.len() as u32);
        if consequents.len() != rules
            || consequents.iter().any(|c| c.len() != input_names.len() + 1)
        {
            return Err(Error::Config("consequent shape mismatch".into()));
        }
        Ok(AnfisModel {
            input_names,
            premise,
            consequents,
            dead_rules: Vec::new(),
        })
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn premise(&self) -> &[Vec<MembershipFn>] {
        &self.premise
    }

    /// Mutable premise access for external calibration; callers must keep
    /// every sigma positive.
    pub fn premise_mut(&mut self) -> &mut [Vec<MembershipFn>] {
        &mut self.premise
    }

    pub fn consequents(&self) -> &[Vec<f64>] {
        &self.consequents
    }

    pub fn consequents_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.consequents
    }

    pub fn dead_rules(&self) -> &[usize] {
        &self.dead_rules
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn mfs_per_input(&self) -> usize {
        self.premise[0].len()
    }

    pub fn n_rules(&self) -> usize {
        self.consequents.len()
    }

    pub fn premise_parameter_count(&self) -> usize {
        2 * self.n_inputs() * self.mfs_per_input()
    }

    pub fn consequent_parameter_count(&self) -> usize {
        self.n_rules() * (self.n_inputs() + 1)
    }

    /// MF index of `input` in rule `rule`; rules enumerate the lexicographic
    /// product of MF indices with input 0 as the most significant digit.
    pub fn rule_mf_index(&self, rule: usize, input: usize) -> usize {
        let m = self.mfs_per_input();
        let k = self.n_inputs();
        (rule / m.pow((k - 1 - input) as u32)) % m
    }

    /// Five-layer forward pass on one row (values in input order).
    pub fn forward(&self, row: &[f64]) -> Result<ForwardPass> {
        if row.len() != self.n_inputs() {
            return Err(Error::Domain(format!(
                "expected {} inputs, got {}",
                self.n_inputs(),
                row.len()
            )));
        }
        let mu = self.memberships(row)?;
        let rules = self.n_rules();
        let mut weights = vec![0.0; rules];
        let mut total = 0.0;
        for (r, w) in weights.iter_mut().enumerate() {
            let mut firing = 1.0;
            for i in 0..self.n_inputs() {
                firing *= mu[i][self.rule_mf_index(r, i)];
            }
            *w = firing;
            total += firing;
        }
        let underflow = total < FIRING_UNDERFLOW;
        if underflow {
            weights.fill(1.0 / rules as f64);
        } else {
            for w in weights.iter_mut() {
                *w /= total;
            }
        }
        let mut prediction = 0.0;
        for (r, w) in weights.iter().enumerate() {
            prediction += w * self.rule_output(r, row);
        }
        Ok(ForwardPass {
            prediction,
            normalized_weights: weights,
            underflow,
        })
    }

    fn memberships(&self, row: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut mu = Vec::with_capacity(self.n_inputs());
        for (i, mfs) in self.premise.iter().enumerate() {
            let mut per_input = Vec::with_capacity(mfs.len());
            for mf in mfs {
                per_input.push(membership(row[i], mf.center, mf.sigma)?);
            }
            mu.push(per_input);
        }
        Ok(mu)
    }

    fn rule_output(&self, rule: usize, row: &[f64]) -> f64 {
        let c = &self.consequents[rule];
        let mut f = c[self.n_inputs()];
        for (j, &x) in row.iter().enumerate() {
            f += c[j] * x;
        }
        f
    }

    /// Row-wise prediction over any dataset holding the input columns.
    pub fn predict(&self, rows: &Dataset) -> Result<Vec<f64>> {
        let cols: Vec<&[f64]> = self
            .input_names
            .iter()
            .map(|name| rows.column(name))
            .collect::<Result<_>>()?;
        let mut row = vec![0.0; cols.len()];
        let mut out = Vec::with_capacity(rows.n_rows());
        for r in 0..rows.n_rows() {
            for (j, col) in cols.iter().enumerate() {
                row[j] = col[r];
            }
            out.push(self.forward(&row)?.prediction);
        }
        Ok(out)
    }

    /// Flat text persistence; floats round-trip exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("inputs");
        for name in &self.input_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, mfs) in self.premise.iter().enumerate() {
            out.push_str(&format!("premise,{i}"));
            for mf in mfs {
                out.push_str(&format!(",{},{}", mf.center, mf.sigma));
            }
            out.push('\n');
        }
        for (r, c) in self.consequents.iter().enumerate() {
            out.push_str(&format!("consequent,{r}"));
            for v in c {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<AnfisModel> {
        let mut input_names: Vec<String> = Vec::new();
        let mut premise: Vec<Vec<MembershipFn>> = Vec::new();
        let mut consequents: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parse = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|_| Error::Parse {
                    row: lineno + 1,
                    detail: format!("bad number {v:?}"),
                })
            };
            match fields[0] {
                "inputs" => input_names = fields[1..].iter().map(|s| s.to_string()).collect(),
                "premise" => {
                    let mut mfs = Vec::new();
                    let mut vals = fields[2..].iter();
                    while let (Some(c), Some(s)) = (vals.next(), vals.next()) {
                        mfs.push(MembershipFn {
                            center: parse(c)?,
                            sigma: parse(s)?,
                        });
                    }
                    premise.push(mfs);
                }
                "consequent" => consequents.push(
                    fields[2..]
                        .iter()
                        .map(|v| parse(v))
                        .collect::<Result<_>>()?,
                ),
                other => {
                    return Err(Error::Parse {
                        row: lineno + 1,
                        detail: format!("unknown record {other:?}"),
                    })
                }
            }
        }
        AnfisModel::from_parts(input_names, premise, consequents)
    }
}

/// Gathers training rows (inputs in model order) and the target column.
fn training_matrix(
    d: &Dataset,
    inputs: &[String],
    output: &str,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let cols: Vec<Vec<f64>> = inputs
        .iter()
        .map(|name| d.train_column(name))
        .collect::<Result<_>>()?;
    let y = d.train_column(output)?;
    let n = y.len();
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        rows.push(cols.iter().map(|c| c[r]).collect());
    }
    Ok((rows, y))
}

/// Report of one consequent least-squares update.
#[derive(Debug, Clone)]
pub struct LseReport {
    /// Rules whose design columns were all ~zero (never fired); their
    /// consequents take the minimum-norm value 0.
    pub dead_rules: Vec<usize>,
}

/// Least-squares consequent update with premises held fixed.
///
/// The prediction is linear in the consequents, so the design stacks
/// `w̄_r · (x…, 1)` blocks per rule; the system is solved through an SVD with
/// small singular values truncated, which yields the minimum-norm solution
/// when rules never fire.
pub fn fit_consequents_lse(
    model: &mut AnfisModel,
    rows: &[Vec<f64>],
    y: &[f64],
) -> Result<LseReport> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::DegenerateInput("no training rows".into()));
    }
    let k = model.n_inputs();
    let rules = model.n_rules();
    let width = rules * (k + 1);

    let mut design = DMatrix::zeros(n, width);
    for (s, row) in rows.iter().enumerate() {
        let pass = model.forward(row)?;
        for r in 0..rules {
            let w = pass.normalized_weights[r];
            let base = r * (k + 1);
            for (j, &x) in row.iter().enumerate() {
                design[(s, base + j)] = w * x;
            }
            design[(s, base + k)] = w;
        }
    }

    // dead-rule detection from column norms
    let mut col_norms = vec![0.0f64; width];
    let mut max_norm = 0.0f64;
    for (c, slot) in col_norms.iter_mut().enumerate() {
        let norm = design.column(c).norm();
        *slot = norm;
        max_norm = max_norm.max(norm);
    }
    let dead_rules: Vec<usize> = (0..rules)
        .filter(|&r| (0..=k).all(|j| col_norms[r * (k + 1) + j] <= 1e-12 * max_norm.max(1.0)))
        .collect();

    let svd = design.svd(true, true);
    let eps = LSE_TOLERANCE * svd.singular_values.max();
    let solution = svd
        .solve(&DVector::from_column_slice(y), eps)
        .map_err(|e| Error::Domain(format!("consequent solve failed: {e}")))?;

    for r in 0..rules {
        for j in 0..=k {
            model.consequents[r][j] = solution[r * (k + 1) + j];
        }
    }
    model.dead_rules = dead_rules.clone();
    Ok(LseReport { dead_rules })
}

/// A per-(input, membership) parameter table, shaped like the premise grid.
pub type ParamGrid = Vec<Vec<f64>>;

/// Analytic gradient of the training MSE with respect to every membership
/// center and width. Returns `(grad_center, grad_sigma)` shaped like the
/// premise table. Underflow rows are skipped.
pub fn premise_gradients(
    model: &AnfisModel,
    rows: &[Vec<f64>],
    y: &[f64],
) -> Result<(ParamGrid, ParamGrid)> {
    let k = model.n_inputs();
    let m = model.mfs_per_input();
    let rules = model.n_rules();
    let n = rows.len();
    let mut grad_c = vec![vec![0.0; m]; k];
    let mut grad_s = vec![vec![0.0; m]; k];

    for (s, row) in rows.iter().enumerate() {
        let mu = model.memberships(row)?;
        let mut weights = vec![0.0; rules];
        let mut total = 0.0;
        for (r, w) in weights.iter_mut().enumerate() {
            let mut firing = 1.0;
            for i in 0..k {
                firing *= mu[i][model.rule_mf_index(r, i)];
            }
            *w = firing;
            total += firing;
        }
        if total < FIRING_UNDERFLOW {
            continue;
        }
        let mut prediction = 0.0;
        let mut rule_out = vec![0.0; rules];
        for r in 0..rules {
            rule_out[r] = model.rule_output(r, row);
            prediction += weights[r] / total * rule_out[r];
        }
        let err_scale = -2.0 / n as f64 * (y[s] - prediction);

        // dŷ/dμ[i][j] accumulated over the rules that use (i, j)
        let mut acc = vec![vec![0.0; m]; k];
        for r in 0..rules {
            let common = (rule_out[r] - prediction) / total;
            for i in 0..k {
                let j = model.rule_mf_index(r, i);
                let mu_ij = mu[i][j];
                let others = if mu_ij > 1e-200 {
                    weights[r] / mu_ij
                } else {
                    let mut p = 1.0;
                    for i2 in 0..k {
                        if i2 != i {
                            p *= mu[i2][model.rule_mf_index(r, i2)];
                        }
                    }
                    p
                };
                acc[i][j] += common * others;
            }
        }
        for i in 0..k {
            for j in 0..m {
                let mf = model.premise[i][j];
                let d = row[i] - mf.center;
                let mu_ij = mu[i][j];
                let dmu_dc = mu_ij * d / (mf.sigma * mf.sigma);
                let dmu_ds = mu_ij * d * d / (mf.sigma * mf.sigma * mf.sigma);
                grad_c[i][j] += err_scale * acc[i][j] * dmu_dc;
                grad_s[i][j] += err_scale * acc[i][j] * dmu_ds;
            }
        }
    }
    Ok((grad_c, grad_s))
}

/// Gradient of the training MSE with respect to the consequents (used by the
/// pure-backprop mode).
fn consequent_gradients(model: &AnfisModel, rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<Vec<f64>>> {
    let k = model.n_inputs();
    let rules = model.n_rules();
    let n = rows.len();
    let mut grad = vec![vec![0.0; k + 1]; rules];
    for (s, row) in rows.iter().enumerate() {
        let pass = model.forward(row)?;
        let err_scale = -2.0 / n as f64 * (y[s] - pass.prediction);
        for (g, &w) in grad.iter_mut().zip(&pass.normalized_weights) {
            for (j, &x) in row.iter().enumerate() {
                g[j] += err_scale * w * x;
            }
            g[k] += err_scale * w;
        }
    }
    Ok(grad)
}

fn train_rmse(model: &AnfisModel, rows: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    let mut sq = 0.0;
    for (row, &t) in rows.iter().zip(y) {
        let e = t - model.forward(row)?.prediction;
        sq += e * e;
    }
    Ok((sq / y.len() as f64).sqrt())
}

/// Trained model plus the per-epoch training RMSE trace.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: AnfisModel,
    pub rmse_trace: Vec<f64>,
}

impl TrainOutcome {
    /// RMSE trace in CSV form.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("epoch,train_rmse\n");
        for (i, r) in self.rmse_trace.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, r));
        }
        out
    }
}

/// Hybrid training: grid-partition initialization, then per epoch a
/// least-squares consequent update followed by one full-batch gradient step
/// on the premises (σ clamped below at a fraction of each input's range).
/// Returns the parameter state with the lowest recorded training RMSE.
pub fn train_hybrid(
    d: &Dataset,
    inputs: &[String],
    output: &str,
    cfg: &AnfisConfig,
) -> Result<TrainOutcome> {
    if cfg.epochs < 1 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    if cfg.mfs_per_input < 2 {
        return Err(Error::Config(
            "need at least 2 membership functions per input".into(),
        ));
    }
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Config(
            "learning rate must be finite and non-negative".into(),
        ));
    }
    if inputs.is_empty() {
        return Err(Error::Config("anfis needs at least one input".into()));
    }
    let rules = cfg.mfs_per_input.checked_pow(inputs.len() as u32);
    match rules {
        Some(r) if r <= MAX_RULES => {}
        _ => {
            return Err(Error::Config(format!(
                "grid partition explodes: {}^{} rules exceeds {MAX_RULES}",
                cfg.mfs_per_input,
                inputs.len()
            )))
        }
    }

    let (rows, y) = training_matrix(d, inputs, output)?;
    if rows.len() < 2 {
        return Err(Error::DegenerateInput(
            "need at least 2 training rows".into(),
        ));
    }

    // grid-partition initialization: centers equally spaced over the training
    // range, sigma = range / (2 * mfs)
    let m = cfg.mfs_per_input;
    let mut premise = Vec::with_capacity(inputs.len());
    let mut sigma_floor = Vec::with_capacity(inputs.len());
    for (i, name) in inputs.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        if range <= 0.0 {
            return Err(Error::DegenerateInput(format!(
                "input {name:?} is constant on the training split"
            )));
        }
        let mfs: Vec<MembershipFn> = (0..m)
            .map(|j| MembershipFn {
                center: lo + range * j as f64 / (m - 1) as f64,
                sigma: range / (2.0 * m as f64),
            })
            .collect();
        premise.push(mfs);
        sigma_floor.push(SIGMA_FLOOR_FRACTION * range);
    }
    let n_rules = rules.unwrap();
    let mut model = AnfisModel {
        input_names: inputs.to_vec(),
        premise,
        consequents: vec![vec![0.0; inputs.len() + 1]; n_rules],
        dead_rules: Vec::new(),
    };

    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, AnfisModel)> = None;

    for _epoch in 0..cfg.epochs {
        if cfg.hybrid {
            fit_consequents_lse(&mut model, &rows, &y)?;
        } else {
            let grad = consequent_gradients(&model, &rows, &y)?;
            for (c, g) in model.consequents.iter_mut().zip(&grad) {
                for (v, dg) in c.iter_mut().zip(g) {
                    *v -= cfg.learning_rate * dg;
                }
            }
        }
        let rmse = train_rmse(&model, &rows, &y)?;
        trace.push(rmse);
        if best.as_ref().is_none_or(|(b, _)| rmse < *b) {
            best = Some((rmse, model.clone()));
        }

        let (grad_c, grad_s) = premise_gradients(&model, &rows, &y)?;
        for i in 0..model.n_inputs() {
            for j in 0..model.mfs_per_input() {
                let mf = &mut model.premise[i][j];
                mf.center -= cfg.learning_rate * grad_c[i][j];
                mf.sigma = (mf.sigma - cfg.learning_rate * grad_s[i][j]).max(sigma_floor[i]);
            }
        }
    }

    let (_, best_model) = best.expect("at least one epoch runs");
    Ok(TrainOutcome {
        model: best_model,
        rmse_trace: trace,
    })
}
