//! Correlation-gated feature construction.
//!
//! Candidate features are unary transforms of the input variables. A
//! candidate survives two gates, both evaluated on the training split only:
//!
//! * Rule 1 (output gate): its coefficient of determination with the output
//!   must exceed its parent's.
//! * Rule 2 (cross gate): for every kept pair with distinct parents, the
//!   r² between the two feature columns must stay below the r² between
//!   their parent columns. Same-parent pairs are exempt.
//!
//! Rule 2 conflicts are resolved deterministically: the violating pair with
//! the highest cross r² is resolved first (ties by lexicographic pair name),
//! and within the pair the member with the lower r² against the output is
//! dropped (ties: the member more cross-correlated with the rest of the kept
//! set, then the lexicographically later name).
//!
//! Further generations treat the previous generation's selected features as
//! parents; a generation that selects nothing stops the iteration and the
//! previous selection stands.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::coeff_det;

/// Unary transform vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Square,
    Cube,
    Pow4,
    Pow5,
    Sqrt,
    Reciprocal,
    Ln,
    Exp,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Identity,
}

impl TransformKind {
    /// Every non-identity transform, in the fixed order candidates are
    /// generated in.
    pub const DEFAULT_LIBRARY: [TransformKind; 14] = [
        TransformKind::Square,
        TransformKind::Cube,
        TransformKind::Pow4,
        TransformKind::Pow5,
        TransformKind::Sqrt,
        TransformKind::Reciprocal,
        TransformKind::Ln,
        TransformKind::Exp,
        TransformKind::Sin,
        TransformKind::Cos,
        TransformKind::Tan,
        TransformKind::Sinh,
        TransformKind::Cosh,
        TransformKind::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Square => "square",
            TransformKind::Cube => "cube",
            TransformKind::Pow4 => "pow4",
            TransformKind::Pow5 => "pow5",
            TransformKind::Sqrt => "sqrt",
            TransformKind::Reciprocal => "reciprocal",
            TransformKind::Ln => "ln",
            TransformKind::Exp => "exp",
            TransformKind::Sin => "sin",
            TransformKind::Cos => "cos",
            TransformKind::Tan => "tan",
            TransformKind::Sinh => "sinh",
            TransformKind::Cosh => "cosh",
            TransformKind::Tanh => "tanh",
            TransformKind::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<TransformKind> {
        let mut all = Self::DEFAULT_LIBRARY.to_vec();
        all.push(TransformKind::Identity);
        all.into_iter().find(|k| k.name() == name)
    }

    /// Raw elementwise application; may produce non-finite values, which the
    /// candidate machinery treats as an invalid-candidate signal.
    pub fn apply(self, x: f64) -> f64 {
        match self {
            TransformKind::Square => x * x,
            TransformKind::Cube => x * x * x,
            TransformKind::Pow4 => x.powi(4),
            TransformKind::Pow5 => x.powi(5),
            TransformKind::Sqrt => x.sqrt(),
            TransformKind::Reciprocal => 1.0 / x,
            TransformKind::Ln => x.ln(),
            TransformKind::Exp => x.exp(),
            TransformKind::Sin => x.sin(),
            TransformKind::Cos => x.cos(),
            TransformKind::Tan => x.tan(),
            TransformKind::Sinh => x.sinh(),
            TransformKind::Cosh => x.cosh(),
            TransformKind::Tanh => x.tanh(),
            TransformKind::Identity => x,
        }
    }
}

/// One constructed feature: a chain of transforms applied to a root variable.
///
/// `chain` holds the kinds applied from the root, so the column can always be
/// recomputed without looking up intermediate features; `kind` is the last
/// element of the chain and `parent` names the immediate parent column (a
/// root variable for generation 1, a previous feature otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTransform {
    pub name: String,
    pub parent: String,
    pub root: String,
    pub kind: TransformKind,
    pub chain: Vec<TransformKind>,
    pub generation: usize,
    pub r2_output: f64,
}

impl FeatureTransform {
    /// Generation-1 feature over a root variable (r² filled in later).
    fn first_generation(root: &str, kind: TransformKind) -> FeatureTransform {
        FeatureTransform {
            name: format!("{}({})", kind.name(), root),
            parent: root.to_string(),
            root: root.to_string(),
            kind,
            chain: vec![kind],
            generation: 1,
            r2_output: 0.0,
        }
    }

    /// Child of an existing feature.
    fn derived(parent: &FeatureTransform, kind: TransformKind) -> FeatureTransform {
        let mut chain = parent.chain.clone();
        chain.push(kind);
        FeatureTransform {
            name: format!("{}({})", kind.name(), parent.name),
            parent: parent.name.clone(),
            root: parent.root.clone(),
            kind,
            chain,
            generation: parent.generation + 1,
            r2_output: 0.0,
        }
    }

    fn column_of_chain(&self, d: &Dataset, chain: &[TransformKind]) -> Result<Vec<f64>> {
        let mut col = d.column(&self.root)?.to_vec();
        for kind in chain {
            for v in col.iter_mut() {
                *v = kind.apply(*v);
            }
        }
        if let Some(i) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::CandidateInvalid {
                feature: self.name.clone(),
                reason: format!("non-finite value at row {i}"),
            });
        }
        Ok(col)
    }

    /// Full transformed column. Non-finite results surface as the
    /// invalid-candidate signal rather than a panic.
    pub fn column(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.column_of_chain(d, &self.chain)
    }

    /// Column of the immediate parent (the root variable for generation 1).
    pub fn parent_column(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.column_of_chain(d, &self.chain[..self.chain.len() - 1])
    }
}

/// Applies a transform to its parent column over the full dataset.
pub fn apply_transform(t: &FeatureTransform, d: &Dataset) -> Result<Vec<f64>> {
    t.column(d)
}

/// Selected features plus their pairwise r² matrix (training split).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSet {
    pub selected: Vec<FeatureTransform>,
    pub r2_cross: Vec<Vec<f64>>,
}

impl FeatureSet {
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.selected.iter().map(|f| f.name.clone()).collect()
    }
}

/// Per-candidate diagnostics for the generation report.
#[derive(Debug, Clone)]
pub struct CandidateRecord {
    pub feature: FeatureTransform,
    pub passed_rule1: bool,
    /// True only when the candidate survived Rule 2 resolution into its
    /// generation's selection.
    pub selected: bool,
}

/// Enumerates inputs × library (identity excluded), drops candidates whose
/// column is non-finite or constant, and scores each survivor against the
/// output on the training split.
pub fn generate_candidates(
    d: &Dataset,
    inputs: &[String],
    output: &str,
    library: &[TransformKind],
) -> Result<Vec<FeatureTransform>> {
    if inputs.is_empty() {
        return Err(Error::Domain("need at least one input variable".into()));
    }
    let parents: Vec<FeatureTransform> = inputs
        .iter()
        .map(|name| FeatureTransform {
            name: name.clone(),
            parent: name.clone(),
            root: name.clone(),
            kind: TransformKind::Identity,
            chain: Vec::new(),
            generation: 0,
            r2_output: 0.0,
        })
        .collect();
    candidates_from_parents(d, &parents, output, library)
}

fn candidates_from_parents(
    d: &Dataset,
    parents: &[FeatureTransform],
    output: &str,
    library: &[TransformKind],
) -> Result<Vec<FeatureTransform>> {
    let split = d.require_split()?;
    let y = d.train_column(output)?;
    let mut out = Vec::new();
    for parent in parents {
        for &kind in library {
            if kind == TransformKind::Identity {
                continue;
            }
            let mut cand = if parent.generation == 0 {
                // verify the root column exists up front
                d.column(&parent.root)?;
                FeatureTransform::first_generation(&parent.root, kind)
            } else {
                FeatureTransform::derived(parent, kind)
            };
            let col = match cand.column(d) {
                Ok(col) => col,
                Err(Error::CandidateInvalid { .. }) => continue,
                Err(e) => return Err(e),
            };
            let train: Vec<f64> = split.train.iter().map(|&i| col[i]).collect();
            match coeff_det(&train, &y) {
                Ok(r2) => {
                    cand.r2_output = r2;
                    out.push(cand);
                }
                Err(Error::DegenerateInput(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Applies Rule 1 and Rule 2 to a candidate list. An empty candidate list
/// yields an empty (valid) feature set.
pub fn select_features(
    candidates: &[FeatureTransform],
    d: &Dataset,
    output: &str,
) -> Result<FeatureSet> {
    Ok(select_with_flags(candidates, d, output)?.0)
}

fn select_with_flags(
    candidates: &[FeatureTransform],
    d: &Dataset,
    output: &str,
) -> Result<(FeatureSet, Vec<bool>, Vec<bool>)> {
    if candidates.is_empty() {
        return Ok((FeatureSet::default(), Vec::new(), Vec::new()));
    }
    let split = d.require_split()?;
    let train = |col: &[f64]| -> Vec<f64> { split.train.iter().map(|&i| col[i]).collect() };
    let y = d.train_column(output)?;

    // training columns and parent baselines
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(candidates.len());
    let mut parent_cols: Vec<Vec<f64>> = Vec::with_capacity(candidates.len());
    let mut baseline: Vec<f64> = Vec::with_capacity(candidates.len());
    for c in candidates {
        let col = train(&c.column(d)?);
        let pcol = train(&c.parent_column(d)?);
        let base = coeff_det(&pcol, &y)?;
        columns.push(col);
        parent_cols.push(pcol);
        baseline.push(base);
    }

    // Rule 1: strictly better than the parent
    let rule1: Vec<bool> = candidates
        .iter()
        .zip(&baseline)
        .map(|(c, &b)| c.r2_output > b)
        .collect();
    let mut kept: Vec<usize> = (0..candidates.len()).filter(|&i| rule1[i]).collect();

    // Rule 2: iteratively drop one member of the worst violating pair
    let cross = |i: usize, j: usize| -> Result<f64> { coeff_det(&columns[i], &columns[j]) };
    let parent_r2 =
        |i: usize, j: usize| -> Result<f64> { coeff_det(&parent_cols[i], &parent_cols[j]) };
    loop {
        let mut worst: Option<(usize, usize, f64)> = None;
        for a in 0..kept.len() {
            for b in (a + 1)..kept.len() {
                let (i, j) = (kept[a], kept[b]);
                if candidates[i].parent == candidates[j].parent {
                    continue;
                }
                let c = cross(i, j)?;
                if c < parent_r2(i, j)? {
                    continue;
                }
                let better = match worst {
                    None => true,
                    Some((wi, wj, wc)) => {
                        c > wc
                            || (c == wc
                                && pair_key(candidates, i, j) < pair_key(candidates, wi, wj))
                    }
                };
                if better {
                    worst = Some((i, j, c));
                }
            }
        }
        let Some((i, j, _)) = worst else { break };
        let drop = pick_drop(candidates, &columns, &kept, i, j)?;
        kept.retain(|&k| k != drop);
    }

    let selected: Vec<FeatureTransform> = kept.iter().map(|&i| candidates[i].clone()).collect();
    let mut r2_cross = vec![vec![1.0; kept.len()]; kept.len()];
    for a in 0..kept.len() {
        for b in (a + 1)..kept.len() {
            let v = cross(kept[a], kept[b])?;
            r2_cross[a][b] = v;
            r2_cross[b][a] = v;
        }
    }
    let selected_flags: Vec<bool> = (0..candidates.len()).map(|i| kept.contains(&i)).collect();
    Ok((FeatureSet { selected, r2_cross }, rule1, selected_flags))
}

fn pair_key(candidates: &[FeatureTransform], i: usize, j: usize) -> (String, String) {
    let (a, b) = (&candidates[i].name, &candidates[j].name);
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Decides which member of a violating pair is dropped.
fn pick_drop(
    candidates: &[FeatureTransform],
    columns: &[Vec<f64>],
    kept: &[usize],
    i: usize,
    j: usize,
) -> Result<usize> {
    let (ri, rj) = (candidates[i].r2_output, candidates[j].r2_output);
    if ri < rj {
        return Ok(i);
    }
    if rj < ri {
        return Ok(j);
    }
    // equal output r²: drop the member more redundant against the rest
    let max_cross = |x: usize| -> Result<f64> {
        let mut m: f64 = 0.0;
        for &k in kept {
            if k != x {
                m = m.max(coeff_det(&columns[x], &columns[k])?);
            }
        }
        Ok(m)
    };
    let (ci, cj) = (max_cross(i)?, max_cross(j)?);
    if ci > cj {
        return Ok(i);
    }
    if cj > ci {
        return Ok(j);
    }
    Ok(if candidates[i].name > candidates[j].name {
        i
    } else {
        j
    })
}

/// Outcome of a multi-generation run: the final selection plus diagnostics
/// for every candidate examined along the way.
#[derive(Debug, Clone)]
pub struct HcvcmReport {
    pub selected: FeatureSet,
    pub candidates: Vec<CandidateRecord>,
}

/// Runs `n_gen` generations: generation 1 transforms the raw inputs,
/// generation g ≥ 2 transforms the previous generation's selected features.
pub fn run_generations(
    d: &Dataset,
    inputs: &[String],
    output: &str,
    library: &[TransformKind],
    n_gen: usize,
) -> Result<FeatureSet> {
    Ok(run_generations_report(d, inputs, output, library, n_gen)?.selected)
}

/// [`run_generations`] with per-candidate diagnostics.
pub fn run_generations_report(
    d: &Dataset,
    inputs: &[String],
    output: &str,
    library: &[TransformKind],
    n_gen: usize,
) -> Result<HcvcmReport> {
    if n_gen < 1 {
        return Err(Error::Config("need at least one generation".into()));
    }
    let mut records: Vec<CandidateRecord> = Vec::new();
    let mut current = FeatureSet::default();
    for gen in 1..=n_gen {
        let candidates = if gen == 1 {
            generate_candidates(d, inputs, output, library)?
        } else {
            candidates_from_parents(d, &current.selected, output, library)?
        };
        let (selection, rule1, chosen) = select_with_flags(&candidates, d, output)?;
        for (idx, cand) in candidates.iter().enumerate() {
            records.push(CandidateRecord {
                feature: cand.clone(),
                passed_rule1: rule1[idx],
                selected: chosen[idx],
            });
        }
        if selection.is_empty() {
            break; // previous generation's selection stands
        }
        current = selection;
    }
    Ok(HcvcmReport {
        selected: current,
        candidates: records,
    })
}

/// Keeps, per original (root) variable, the single feature with the highest
/// r² against the output; ties keep the lexicographically first name.
pub fn reduce_best_per_parent(fs: &FeatureSet) -> FeatureSet {
    let mut best: Vec<usize> = Vec::new();
    for (i, f) in fs.selected.iter().enumerate() {
        match best.iter().position(|&b| fs.selected[b].root == f.root) {
            None => best.push(i),
            Some(slot) => {
                let cur = &fs.selected[best[slot]];
                let wins = f.r2_output > cur.r2_output
                    || (f.r2_output == cur.r2_output && f.name < cur.name);
                if wins {
                    best[slot] = i;
                }
            }
        }
    }
    best.sort_unstable();
    let selected: Vec<FeatureTransform> = best.iter().map(|&i| fs.selected[i].clone()).collect();
    let r2_cross: Vec<Vec<f64>> = best
        .iter()
        .map(|&i| best.iter().map(|&j| fs.r2_cross[i][j]).collect())
        .collect();
    FeatureSet { selected, r2_cross }
}

/// Materializes the selected feature columns (plus the output) on every row,
/// preserving the split.
pub fn materialize(fs: &FeatureSet, d: &Dataset, output: &str) -> Result<Dataset> {
    if fs.is_empty() {
        return Err(Error::Domain(
            "cannot materialize an empty feature set".into(),
        ));
    }
    let mut names: Vec<String> = fs.names();
    let mut cols: Vec<Vec<f64>> = fs
        .selected
        .iter()
        .map(|f| f.column(d))
        .collect::<Result<_>>()?;
    names.push(output.to_string());
    cols.push(d.column(output)?.to_vec());
    d.replace_columns(names, cols)
}

/// Header of the per-candidate report CSV.
pub const HCVCM_CSV_HEADER: &str =
    "feature,parent,kind,generation,r2_output,passed_rule1,passed_rule2";

/// Formats the candidate diagnostics in the [`HCVCM_CSV_HEADER`] schema.
pub fn report_csv(report: &HcvcmReport) -> String {
    let mut out = String::from(HCVCM_CSV_HEADER);
    out.push('\n');
    for rec in &report.candidates {
        let f = &rec.feature;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            f.name,
            f.parent,
            f.kind.name(),
            f.generation,
            f.r2_output,
            rec.passed_rule1,
            rec.selected
        ));
    }
    out
}
