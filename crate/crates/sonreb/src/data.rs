//! Dataset container, CSV ingestion, deterministic splitting and summary
//! statistics.
//!
//! A [`Dataset`] is an immutable column store. The canonical measurement
//! schema is three columns — `upv` (ultrasonic pulse velocity, km/s),
//! `rn` (rebound number) and `ccs` (compressive strength, kg/cm²) — but the
//! container accepts arbitrary numeric columns so constructed features can be
//! materialized alongside the originals.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Canonical input/output column names.
pub const COL_UPV: &str = "upv";
pub const COL_RN: &str = "rn";
pub const COL_CCS: &str = "ccs";

/// One measurement row: pulse velocity, rebound number, compressive strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub upv: f64,
    pub rn: f64,
    pub ccs: f64,
}

impl Sample {
    /// Validates the physical invariants: all fields finite, `upv > 0`,
    /// `ccs > 0`, `rn >= 0`.
    pub fn new(upv: f64, rn: f64, ccs: f64) -> Result<Self> {
        if !(upv.is_finite() && rn.is_finite() && ccs.is_finite()) {
            return Err(Error::Domain("sample fields must be finite".into()));
        }
        if upv <= 0.0 {
            return Err(Error::Domain(format!("upv must be positive, got {upv}")));
        }
        if ccs <= 0.0 {
            return Err(Error::Domain(format!("ccs must be positive, got {ccs}")));
        }
        if rn < 0.0 {
            return Err(Error::Domain(format!("rn must be non-negative, got {rn}")));
        }
        Ok(Sample { upv, rn, ccs })
    }
}

/// Partition of row indices into training and test rows.
///
/// Indices are kept sorted ascending; together the two sets cover every row
/// exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// A split that trains on every row (empty test set).
    pub fn all_train(n_rows: usize) -> Self {
        Split {
            train: (0..n_rows).collect(),
            test: Vec::new(),
        }
    }
}

/// Immutable column-major dataset with optional train/test bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    data: Vec<Vec<f64>>,
    split: Option<Split>,
}

impl Dataset {
    /// Builds the canonical three-column dataset from validated samples.
    pub fn from_samples(samples: &[Sample]) -> Self {
        let mut upv = Vec::with_capacity(samples.len());
        let mut rn = Vec::with_capacity(samples.len());
        let mut ccs = Vec::with_capacity(samples.len());
        for s in samples {
            upv.push(s.upv);
            rn.push(s.rn);
            ccs.push(s.ccs);
        }
        Dataset {
            columns: vec![COL_UPV.into(), COL_RN.into(), COL_CCS.into()],
            data: vec![upv, rn, ccs],
            split: None,
        }
    }

    /// Builds a dataset from named columns. All columns must be the same
    /// length, names unique, and every value finite.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Domain(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if names.is_empty() {
            return Err(Error::Domain("dataset needs at least one column".into()));
        }
        let n = columns[0].len();
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Domain(format!(
                    "column {name:?} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "column {name:?} has a non-finite value at row {i}"
                )));
            }
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Domain(format!("duplicate column name {name:?}")));
            }
        }
        Ok(Dataset {
            columns: names,
            data: columns,
            split: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.columns
    }

    /// Full column by name.
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        let idx =
            self.columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingColumn {
                    column: name.to_string(),
                })?;
        Ok(&self.data[idx])
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    pub fn split(&self) -> Option<&Split> {
        self.split.as_ref()
    }

    /// Returns a copy of this dataset with the given split attached.
    ///
    /// The split must be a disjoint cover of all row indices.
    pub fn with_split(&self, split: Split) -> Result<Dataset> {
        let n = self.n_rows();
        let mut seen = vec![false; n];
        for &i in split.train.iter().chain(&split.test) {
            if i >= n {
                return Err(Error::Domain(format!("split index {i} out of range")));
            }
            if seen[i] {
                return Err(Error::Domain(format!("split index {i} appears twice")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Domain("split does not cover every row".into()));
        }
        let mut d = self.clone();
        d.split = Some(split);
        Ok(d)
    }

    /// Column restricted to the training rows. Errors if no split is set.
    pub fn train_column(&self, name: &str) -> Result<Vec<f64>> {
        let split = self.require_split()?;
        let col = self.column(name)?;
        Ok(split.train.iter().map(|&i| col[i]).collect())
    }

    /// Column restricted to the test rows. Errors if no split is set.
    pub fn test_column(&self, name: &str) -> Result<Vec<f64>> {
        let split = self.require_split()?;
        let col = self.column(name)?;
        Ok(split.test.iter().map(|&i| col[i]).collect())
    }

    pub fn require_split(&self) -> Result<&Split> {
        self.split
            .as_ref()
            .ok_or_else(|| Error::Domain("dataset has no train/test split".into()))
    }

    /// New dataset with the same rows and split but a different set of
    /// columns (used when materializing constructed features).
    pub fn replace_columns(&self, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Dataset> {
        let mut d = Dataset::from_columns(names, columns)?;
        if d.n_rows() != self.n_rows() {
            return Err(Error::Domain(
                "replacement columns change the row count".into(),
            ));
        }
        d.split = self.split.clone();
        Ok(d)
    }
}

/// Outcome of [`load_csv`]: the dataset plus the names of any extra columns
/// that were ignored.
#[derive(Debug)]
pub struct CsvImport {
    pub dataset: Dataset,
    pub ignored_columns: Vec<String>,
}

/// Loads a `upv,rn,ccs` CSV file (any column order, case-insensitive headers).
///
/// Blank lines are skipped, both LF and CRLF line endings are accepted, and
/// extra columns are ignored (reported in [`CsvImport::ignored_columns`]).
pub fn load_csv(path: impl AsRef<Path>) -> Result<CsvImport> {
    let mut text = String::new();
    std::fs::File::open(path.as_ref())?.read_to_string(&mut text)?;
    load_csv_str(&text)
}

/// Same as [`load_csv`] but from an in-memory string.
pub fn load_csv_str(text: &str) -> Result<CsvImport> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            detail: format!("bad header: {e}"),
        })?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();

    let mut col_idx = [0usize; 3];
    for (k, want) in [COL_UPV, COL_RN, COL_CCS].iter().enumerate() {
        col_idx[k] =
            headers
                .iter()
                .position(|h| h == want)
                .ok_or_else(|| Error::MissingColumn {
                    column: (*want).to_string(),
                })?;
    }
    let ignored_columns: Vec<String> = headers
        .iter()
        .filter(|h| !h.is_empty() && ![COL_UPV, COL_RN, COL_CCS].contains(&h.as_str()))
        .cloned()
        .collect();

    let mut samples = Vec::new();
    let mut row_no = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            row: row_no + 1,
            detail: e.to_string(),
        })?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue; // blank line
        }
        row_no += 1;
        let mut cell = [0.0f64; 3];
        for (k, &idx) in col_idx.iter().enumerate() {
            let raw = record.get(idx).ok_or_else(|| Error::Parse {
                row: row_no,
                detail: format!("missing value for column {:?}", headers[idx]),
            })?;
            let value: f64 = raw.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                detail: format!("cannot parse {raw:?} in column {:?}", headers[idx]),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    detail: format!("non-finite value {raw:?} in column {:?}", headers[idx]),
                });
            }
            cell[k] = value;
        }
        let sample = Sample::new(cell[0], cell[1], cell[2]).map_err(|e| Error::Parse {
            row: row_no,
            detail: e.to_string(),
        })?;
        samples.push(sample);
    }

    Ok(CsvImport {
        dataset: Dataset::from_samples(&samples),
        ignored_columns,
    })
}

/// Deterministic seeded train/test split.
///
/// Row indices are shuffled with a seeded PRNG and the first
/// `round(train_fraction * n)` go to the training set, so an identical
/// `(dataset, fraction, seed)` triple always yields the identical partition.
pub fn split_dataset(d: &Dataset, train_fraction: f64, seed: u64) -> Result<Dataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_train = (train_fraction * n as f64).round() as usize;
    let (train_part, test_part) = indices.split_at(n_train.min(n));
    let mut train: Vec<usize> = train_part.to_vec();
    let mut test: Vec<usize> = test_part.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    d.with_split(Split { train, test })
}

/// The five summary statistics reported for each variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub min: f64,
    pub max: f64,
    pub average: f64,
    pub sd: f64,
    pub median: f64,
}

/// Summary statistics of one column: min, max, mean, sample standard
/// deviation (divisor n−1, zero for a single row) and median (midpoint of the
/// two central values for even n).
pub fn summarize(d: &Dataset, column: &str) -> Result<SummaryStats> {
    let col = d.column(column)?;
    summarize_values(col)
}

/// [`summarize`] on a raw slice.
pub fn summarize_values(col: &[f64]) -> Result<SummaryStats> {
    let n = col.len();
    if n == 0 {
        return Err(Error::DegenerateInput(
            "cannot summarize an empty column".into(),
        ));
    }
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[n - 1];
    let average = col.iter().sum::<f64>() / n as f64;
    let sd = if n == 1 {
        0.0
    } else {
        let ss: f64 = col.iter().map(|v| (v - average).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(SummaryStats {
        min,
        max,
        average,
        sd,
        median,
    })
}

/// Serializes a split as the manifest format: one row index per line,
/// training rows first, each prefixed `train,` or `test,`.
pub fn split_manifest(split: &Split) -> String {
    let mut out = String::new();
    for &i in &split.train {
        out.push_str("train,");
        out.push_str(&i.to_string());
        out.push('\n');
    }
    for &i in &split.test {
        out.push_str("test,");
        out.push_str(&i.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn load_preserves_row_order() {
        let csv = "upv,rn,ccs\n4.45,28,261.97\n3.37,3,113.33\n";
        let import = load_csv_str(csv).unwrap();
        let d = import.dataset;
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.column("upv").unwrap(), &[4.45, 3.37]);
        assert_eq!(d.column("rn").unwrap(), &[28.0, 3.0]);
        assert_eq!(d.column("ccs").unwrap(), &[261.97, 113.33]);
        assert!(import.ignored_columns.is_empty());
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let import = load_csv_str("upv,rn,ccs\n").unwrap();
        assert_eq!(import.dataset.n_rows(), 0);
    }

    #[test]
    fn missing_column_names_it() {
        let err = load_csv_str("upv,ccs\n4.4,200\n").unwrap_err();
        match err {
            Error::MissingColumn { column } => assert_eq!(column, "rn"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn bad_cell_reports_row_number() {
        let err = load_csv_str("upv,rn,ccs\n4.4,30,250\n4.5,abc,260\n").unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn non_finite_cell_rejected() {
        let err = load_csv_str("upv,rn,ccs\n4.4,NaN,250\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn invalid_sample_reports_row() {
        let err = load_csv_str("upv,rn,ccs\n-4.4,30,250\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn headers_case_insensitive_extra_ignored_crlf() {
        let csv = "UPV,Age,RN,CCS\r\n4.4,28,30,250\r\n\r\n4.5,7,31,260\r\n";
        let import = load_csv_str(csv).unwrap();
        assert_eq!(import.dataset.n_rows(), 2);
        assert_eq!(import.ignored_columns, vec!["age".to_string()]);
    }

    #[test]
    fn load_csv_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "upv,rn,ccs\n4.4,30,250\n").unwrap();
        assert_eq!(load_csv(&path).unwrap().dataset.n_rows(), 1);
    }

    fn toy(n: usize) -> Dataset {
        let samples: Vec<Sample> = (0..n)
            .map(|i| Sample::new(4.0 + 0.01 * i as f64, 20.0 + i as f64, 200.0 + i as f64).unwrap())
            .collect();
        Dataset::from_samples(&samples)
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let d = split_dataset(&toy(10), 0.7, 1).unwrap();
        let s = d.split().unwrap();
        assert_eq!(s.train.len(), 7);
        assert_eq!(s.test.len(), 3);
        for i in &s.train {
            assert!(!s.test.contains(i));
        }
    }

    #[test]
    fn split_is_deterministic() {
        let a = split_dataset(&toy(37), 0.7, 99).unwrap();
        let b = split_dataset(&toy(37), 0.7, 99).unwrap();
        assert_eq!(a.split(), b.split());
    }

    #[test]
    fn split_516_rows_gives_361_train() {
        let d = split_dataset(&toy(516), 0.7, 0).unwrap();
        assert_eq!(d.split().unwrap().train.len(), 361);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        assert!(matches!(
            split_dataset(&toy(10), 0.0, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            split_dataset(&toy(10), 1.0, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            split_dataset(&toy(10), 1.3, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn split_needs_two_rows() {
        assert!(split_dataset(&toy(1), 0.5, 0).is_err());
    }

    #[test]
    fn summarize_small_examples() {
        let d = Dataset::from_columns(vec!["x".into()], vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let s = summarize(&d, "x").unwrap();
        assert_eq!(
            (s.min, s.max, s.average, s.sd, s.median),
            (1.0, 3.0, 2.0, 1.0, 2.0)
        );

        let c = summarize_values(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(c.sd, 0.0);
        assert_eq!(c.median, 5.0);

        let one = summarize_values(&[7.0]).unwrap();
        assert_eq!(
            (one.min, one.max, one.average, one.median, one.sd),
            (7.0, 7.0, 7.0, 7.0, 0.0)
        );
    }

    #[test]
    fn summarize_unknown_column() {
        let d = toy(3);
        assert!(matches!(
            summarize(&d, "nope"),
            Err(Error::MissingColumn { .. })
        ));
    }

    #[test]
    fn even_median_is_midpoint() {
        let s = summarize_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
    }

    #[test]
    fn manifest_format() {
        let split = Split {
            train: vec![0, 2],
            test: vec![1],
        };
        assert_eq!(split_manifest(&split), "train,0\ntrain,2\ntest,1\n");
    }

    proptest! {
        #[test]
        fn split_covers_all_rows(n in 2usize..200, seed in any::<u64>(), f in 0.05f64..0.95) {
            let d = split_dataset(&toy(n), f, seed).unwrap();
            let s = d.split().unwrap();
            prop_assert_eq!(s.train.len(), (f * n as f64).round() as usize);
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn summarize_matches_brute_force(values in prop::collection::vec(-1e3f64..1e3, 1..80)) {
            let s = summarize_values(&values).unwrap();
            // independent oracle: sort-based median, two-pass sd
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
            let mean = values.iter().sum::<f64>() / n as f64;
            let sd = if n == 1 { 0.0 } else {
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
            };
            prop_assert_eq!(s.min, sorted[0]);
            prop_assert_eq!(s.max, sorted[n - 1]);
            assert_relative_eq!(s.median, median, max_relative = 1e-12);
            assert_relative_eq!(s.average, mean, max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(s.sd, sd, max_relative = 1e-12, epsilon = 1e-12);
        }
    }
}
