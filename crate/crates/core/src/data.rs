//! CSV ingestion, z-score scaling and seeded train/validation/test splits.

use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const INSURANCE_HEADER: [&str; 7] = ["age", "sex", "bmi", "children", "smoker", "region", "charges"];

const REGIONS: [&str; 4] = ["northeast", "northwest", "southeast", "southwest"];

pub const TEST_FRACTION: f64 = 0.20;
pub const VAL_FRACTION: f64 = 0.16;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
    pub feature_names: Vec<String>,
    pub n: usize,
}

/// Inputs and targets of one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub x: Matrix,
    pub y: Matrix,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn concat(&self, other: &Samples) -> Result<Samples> {
        Ok(Samples {
            x: self.x.vstack(&other.x)?,
            y: self.y.vstack(&other.y)?,
        })
    }

    pub fn select(&self, indices: &[usize]) -> Samples {
        Samples {
            x: self.x.select_rows(indices),
            y: self.y.select_rows(indices),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schema {
    /// The medical-insurance layout with categorical columns encoded as
    /// ordinals, or with region one-hot encoded.
    Insurance { one_hot_region: bool },
    /// Every column numeric; `target` names the response column.
    Numeric { target: String },
}

impl Default for Schema {
    fn default() -> Self {
        Schema::Insurance { one_hot_region: false }
    }
}

/// Loads the canonical insurance CSV with ordinal encodings.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    load_csv_with(path, &Schema::default())
}

pub fn load_csv_with(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(input: R, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = reader.records();

    let header: Vec<String> = match records.next() {
        None => return Err(Error::NoData),
        Some(rec) => rec
            .map_err(csv_error)?
            .iter()
            .map(|s| s.trim_start_matches('\u{feff}').to_string())
            .collect(),
    };

    let (feature_names, target_col) = match schema {
        Schema::Insurance { one_hot_region } => {
            if header != INSURANCE_HEADER {
                return Err(Error::Header {
                    expected: INSURANCE_HEADER.join(","),
                    found: header.join(","),
                });
            }
            let mut names: Vec<String> = INSURANCE_HEADER[..5].iter().map(|s| s.to_string()).collect();
            if *one_hot_region {
                names.extend(REGIONS.iter().map(|r| format!("region_{r}")));
            } else {
                names.push("region".into());
            }
            (names, 6)
        }
        Schema::Numeric { target } => {
            let t = header.iter().position(|h| h == target).ok_or_else(|| Error::Header {
                expected: format!("a column named `{target}`"),
                found: header.join(","),
            })?;
            let names = header
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != t)
                .map(|(_, h)| h.clone())
                .collect();
            (names, t)
        }
    };

    let d = feature_names.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, rec) in records.enumerate() {
        // Line numbers are 1-based and count the header.
        let line = i + 2;
        let rec = rec.map_err(csv_error)?;
        if rec.len() != header.len() {
            let column = header.get(rec.len()).cloned().unwrap_or_else(|| "<extra>".into());
            return Err(Error::Ingest {
                row: line,
                column,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let field = |c: usize| -> Result<&str> {
            let v = &rec[c];
            if v.is_empty() {
                Err(Error::Ingest {
                    row: line,
                    column: header[c].clone(),
                    message: "missing value".into(),
                })
            } else {
                Ok(v)
            }
        };
        let number = |c: usize| -> Result<f64> {
            let v = field(c)?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Ingest {
                    row: line,
                    column: header[c].clone(),
                    message: format!("not a number: `{v}`"),
                })
        };
        let category = |c: usize, tokens: &[&str]| -> Result<usize> {
            let v = field(c)?;
            tokens.iter().position(|t| *t == v).ok_or_else(|| Error::Ingest {
                row: line,
                column: header[c].clone(),
                message: format!("unknown category `{v}`"),
            })
        };

        match schema {
            Schema::Insurance { one_hot_region } => {
                xs.push(number(0)?);
                xs.push(category(1, &["female", "male"])? as f64);
                xs.push(number(2)?);
                xs.push(number(3)?);
                xs.push(category(4, &["no", "yes"])? as f64);
                let region = category(5, &REGIONS)?;
                if *one_hot_region {
                    xs.extend((0..REGIONS.len()).map(|r| if r == region { 1.0 } else { 0.0 }));
                } else {
                    xs.push(region as f64);
                }
            }
            Schema::Numeric { .. } => {
                for c in (0..header.len()).filter(|&c| c != target_col) {
                    xs.push(number(c)?);
                }
            }
        }
        ys.push(number(target_col)?);
    }

    let n = ys.len();
    if n == 0 {
        return Err(Error::NoData);
    }
    Ok(Dataset {
        x: Matrix::new(n, d, xs)?,
        y: Matrix::new(n, 1, ys)?,
        feature_names,
        n,
    })
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Ingest {
        row,
        column: String::new(),
        message: e.to_string(),
    }
}

impl Dataset {
    pub fn samples(&self, indices: &[usize]) -> Samples {
        Samples {
            x: self.x.select_rows(indices),
            y: self.y.select_rows(indices),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_a: Vec<usize>,
    pub train_b: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitIndices {
    /// `train_a` followed by `train_b`.
    pub fn train(&self) -> Vec<usize> {
        let mut t = self.train_a.clone();
        t.extend_from_slice(&self.train_b);
        t
    }
}

/// Seeded permutation of `0..n` into test (20%), validation (16%) and two
/// alternating training halves. Sizes are `round(p * n)`; the first half gets
/// the extra row when the training count is odd.
pub fn split(n: usize, seed: u64) -> Result<SplitIndices> {
    if n < 4 {
        return Err(Error::Config(format!("need at least 4 samples to split, got {n}")));
    }
    let n_test = (TEST_FRACTION * n as f64).round() as usize;
    let n_val = (VAL_FRACTION * n as f64).round() as usize;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let test = perm[..n_test].to_vec();
    let val = perm[n_test..n_test + n_val].to_vec();
    let (train_a, train_b) = alternate(&perm[n_test + n_val..]);
    Ok(SplitIndices {
        train_a,
        train_b,
        val,
        test,
        seed,
    })
}

/// Seeded split of `0..n` into two halves, the first taking the odd one out.
pub fn halves(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    alternate(&perm)
}

fn alternate(items: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let a = items.iter().step_by(2).copied().collect();
    let b = items.iter().skip(1).step_by(2).copied().collect();
    (a, b)
}

/// Per-column z-score statistics fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
    /// FNV-1a hash of the sorted training row indices.
    pub fitted_on: u64,
}

/// Order-independent fingerprint of a row set.
pub fn fingerprint(indices: &[usize]) -> u64 {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for i in sorted {
        for b in (i as u64).to_le_bytes() {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

fn mean_std(values: &[f64], name: &str) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let constant = values.iter().all(|&v| v == values[0]);
    if constant {
        log::warn!("column `{name}` is constant on the training rows; using std = 1");
        return (mean, 1.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Scaler {
    pub fn fit(dataset: &Dataset, train_indices: &[usize]) -> Result<Scaler> {
        if train_indices.is_empty() {
            return Err(Error::Config("cannot fit a scaler on zero rows".into()));
        }
        let mut feature_means = Vec::with_capacity(dataset.x.cols());
        let mut feature_stds = Vec::with_capacity(dataset.x.cols());
        for c in 0..dataset.x.cols() {
            let col: Vec<f64> = train_indices.iter().map(|&r| dataset.x.get(r, c)).collect();
            let (m, s) = mean_std(&col, &dataset.feature_names[c]);
            feature_means.push(m);
            feature_stds.push(s);
        }
        let ys: Vec<f64> = train_indices.iter().map(|&r| dataset.y.get(r, 0)).collect();
        let (target_mean, target_std) = mean_std(&ys, "target");
        Ok(Scaler {
            feature_means,
            feature_stds,
            target_mean,
            target_std,
            fitted_on: fingerprint(train_indices),
        })
    }

    /// True when this scaler was fitted on exactly `indices`.
    pub fn fitted_on_rows(&self, indices: &[usize]) -> bool {
        self.fitted_on == fingerprint(indices)
    }

    pub fn transform_features(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols(), self.feature_means.len(), "feature count mismatch");
        let mut out = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                out.set(r, c, (x.get(r, c) - self.feature_means[c]) / self.feature_stds[c]);
            }
        }
        out
    }

    pub fn inverse_features(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                out.set(r, c, x.get(r, c) * self.feature_stds[c] + self.feature_means[c]);
            }
        }
        out
    }

    pub fn transform_target(&self, y: &Matrix) -> Matrix {
        y.map(|v| (v - self.target_mean) / self.target_std)
    }

    /// Maps standardized targets or predictions back to original units.
    pub fn invert_target(&self, y: &Matrix) -> Matrix {
        y.map(|v| v * self.target_std + self.target_mean)
    }

    pub fn apply(&self, dataset: &Dataset) -> Dataset {
        Dataset {
            x: self.transform_features(&dataset.x),
            y: self.transform_target(&dataset.y),
            feature_names: dataset.feature_names.clone(),
            n: dataset.n,
        }
    }
}
