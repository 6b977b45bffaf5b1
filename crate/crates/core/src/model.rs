//! Two-layer ReLU regression network with biases folded into augmented
//! weight matrices.
//!
//! `w1` is `(d + 1) x h`, its last row holding the hidden biases; inputs get a
//! trailing column of ones. `w2` is `(h + 1) x 1`, its last entry holding the
//! output bias; activations get a trailing column of ones.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Scaler;
use crate::error::{Error, Result};
use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub w1: Matrix,
    pub w2: Matrix,
    pub d: usize,
    pub h: usize,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Pre-activations, `n x h`.
    pub z1: Matrix,
    /// `[relu(z1) | 1]`, `n x (h + 1)`.
    pub x1aug: Matrix,
    pub yhat: Matrix,
}

pub fn relu(z: &Matrix) -> Matrix {
    z.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Indicator of `z > 0`; the kink at zero maps to 0.
pub fn relu_prime(z: &Matrix) -> Matrix {
    z.map(|v| if v > 0.0 { 1.0 } else { 0.0 })
}

impl NetworkParams {
    pub fn new(w1: Matrix, w2: Matrix) -> Result<Self> {
        let d = w1
            .rows()
            .checked_sub(1)
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Config(format!("w1 needs at least 2 rows, got {}", w1.rows())))?;
        let h = w1.cols();
        if w2.shape() != (h + 1, 1) {
            return Err(LinalgError::Shape {
                op: "NetworkParams::new",
                left: w1.shape(),
                right: w2.shape(),
            }
            .into());
        }
        Ok(Self { w1, w2, d, h })
    }

    /// Hidden weights uniform in `±sqrt(6 / (d + h))` with a zero bias row;
    /// output weights zero.
    pub fn init<R: Rng + ?Sized>(d: usize, h: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (d + h) as f64).sqrt();
        let mut w1 = Matrix::zeros(d + 1, h);
        for r in 0..d {
            for c in 0..h {
                w1.set(r, c, rng.gen_range(-limit..limit));
            }
        }
        Self {
            w1,
            w2: Matrix::zeros(h + 1, 1),
            d,
            h,
        }
    }

    /// Like [`NetworkParams::init`], and also draws the output weights
    /// uniformly in `±sqrt(6 / (h + 1))` with a zero output bias.
    pub fn init_both<R: Rng + ?Sized>(d: usize, h: usize, rng: &mut R) -> Self {
        let mut p = Self::init(d, h, rng);
        let limit = (6.0 / (h + 1) as f64).sqrt();
        for r in 0..h {
            p.w2.set(r, 0, rng.gen_range(-limit..limit));
        }
        p
    }

    pub fn forward(&self, x: &Matrix) -> Result<ForwardCache> {
        if x.cols() != self.d {
            return Err(LinalgError::Shape {
                op: "forward",
                left: x.shape(),
                right: self.w1.shape(),
            }
            .into());
        }
        self.forward_augmented(&x.with_ones_column())
    }

    /// Forward pass on inputs that already carry the trailing ones column.
    pub fn forward_augmented(&self, x_aug: &Matrix) -> Result<ForwardCache> {
        let z1 = x_aug.matmul(&self.w1)?;
        let x1aug = relu(&z1).with_ones_column();
        let yhat = x1aug.matmul(&self.w2)?;
        Ok(ForwardCache { z1, x1aug, yhat })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?.yhat)
    }

    pub fn save(&self, path: &Path, scaler: Option<&Scaler>) -> Result<()> {
        let doc = ModelFile {
            d: self.d,
            h: self.h,
            w1: self.w1.as_slice().to_vec(),
            w2: self.w2.as_slice().to_vec(),
            scaler: scaler.cloned(),
        };
        fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(NetworkParams, Option<Scaler>)> {
        let text = fs::read_to_string(path).map_err(|source| Error::Open {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: ModelFile = serde_json::from_str(&text)?;
        let w1 = Matrix::new(doc.d + 1, doc.h, doc.w1)?;
        let w2 = Matrix::new(doc.h + 1, 1, doc.w2)?;
        Ok((NetworkParams::new(w1, w2)?, doc.scaler))
    }
}

/// On-disk model document.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    d: usize,
    h: usize,
    /// Row-major `(d + 1) x h`.
    w1: Vec<f64>,
    w2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scaler: Option<Scaler>,
}

/// `(1 / 2n) Σ (yhat − y)²`.
pub fn mse_cost(yhat: &Matrix, y: &Matrix) -> Result<f64> {
    if yhat.shape() != y.shape() || y.cols() != 1 {
        return Err(LinalgError::Shape {
            op: "mse_cost",
            left: yhat.shape(),
            right: y.shape(),
        }
        .into());
    }
    let sq: f64 = yhat
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sq / (2.0 * y.rows() as f64))
}
