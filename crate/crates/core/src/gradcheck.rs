//! Finite-difference checks of the analytic derivatives on small seeded
//! instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baseline::{baseline_cost, baseline_gradients};
use crate::data::Samples;
use crate::error::Result;
use crate::linalg::{finite_diff_gradient, Cod, Matrix};
use crate::model::NetworkParams;
use crate::splitboost::{bilevel_cost, fit_w2, w1_gradient, w2_jacobian};

pub const HYPERGRADIENT_TOLERANCE: f64 = 1e-4;
pub const JACOBIAN_TOLERANCE: f64 = 1e-5;
pub const BASELINE_TOLERANCE: f64 = 1e-6;
pub const GRADIENT_STEP: f64 = 1e-5;
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Smallest allowed |pre-activation| in generated instances.
pub const MARGIN: f64 = 1e-2;

/// `max |a − b|` relative to the largest magnitude in either matrix.
pub fn max_relative_error(analytic: &Matrix, oracle: &Matrix) -> f64 {
    let diff = analytic.sub(oracle).expect("same shape").max_abs();
    let scale = analytic.max_abs().max(oracle.max_abs());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// `max |a − b| / (1 + |b|)` elementwise.
pub fn max_scaled_error(analytic: &Matrix, oracle: &Matrix) -> f64 {
    analytic
        .as_slice()
        .iter()
        .zip(oracle.as_slice())
        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max)
}

/// Two partitions and hidden weights whose pre-activations all stay at least
/// `margin` away from zero and whose activations have full column rank.
#[derive(Debug, Clone)]
pub struct BilevelInstance {
    pub a: Samples,
    pub b: Samples,
    pub w1: Matrix,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let v = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::new(rows, cols, v).expect("finite")
}

fn well_separated(x: &Matrix, w1: &Matrix, margin: f64) -> bool {
    let z = x.with_ones_column().matmul(w1).expect("shapes");
    z.as_slice().iter().all(|v| v.abs() >= margin)
}

fn full_rank_activations(x: &Matrix, w1: &Matrix) -> bool {
    let z = x.with_ones_column().matmul(w1).expect("shapes");
    let act = crate::model::relu(&z).with_ones_column();
    Cod::new(&act).rank() == act.cols()
}

impl BilevelInstance {
    pub fn generate(rng: &mut ChaCha8Rng, n: usize, d: usize, h: usize, margin: f64) -> BilevelInstance {
        loop {
            let a = Samples {
                x: uniform(rng, n, d),
                y: uniform(rng, n, 1),
            };
            let b = Samples {
                x: uniform(rng, n, d),
                y: uniform(rng, n, 1),
            };
            let w1 = uniform(rng, d + 1, h);
            let ok = [&a, &b]
                .iter()
                .all(|s| well_separated(&s.x, &w1, margin) && full_rank_activations(&s.x, &w1));
            if ok {
                return BilevelInstance { a, b, w1 };
            }
        }
    }

    /// Hypergradient against central differences of the cross cost.
    pub fn hypergradient_error(&self) -> Result<f64> {
        let analytic = w1_gradient(&self.w1, &self.a, &self.b)?;
        let oracle = finite_diff_gradient(
            |w| bilevel_cost(w, &self.a, &self.b).unwrap_or(f64::NAN),
            &self.w1,
            GRADIENT_STEP,
        )?;
        Ok(max_relative_error(&analytic, &oracle))
    }

    /// Inner-solution Jacobian on partition A against central differences
    /// of the re-solved inner problem.
    pub fn jacobian_error(&self) -> Result<f64> {
        let x_aug = self.a.x.with_ones_column();
        let h = self.w1.cols();
        let params = NetworkParams::new(self.w1.clone(), Matrix::zeros(h + 1, 1))?;
        let cache = params.forward_augmented(&x_aug)?;
        let w2 = fit_w2(&cache.x1aug, &self.a.y)?;
        let analytic = w2_jacobian(&x_aug, &cache, &w2, &self.a.y)?;
        let oracle = inner_solution_jacobian_fd(&self.a, &self.w1, JACOBIAN_STEP)?;
        Ok(max_scaled_error(&analytic, &oracle))
    }
}

/// Jacobian of the re-solved output weights by central differences,
/// one output entry at a time.
pub fn inner_solution_jacobian_fd(part: &Samples, w1: &Matrix, step: f64) -> Result<Matrix> {
    let x_aug = part.x.with_ones_column();
    let h = w1.cols();
    let solve = |w: &Matrix| -> Option<Matrix> {
        let z = x_aug.matmul(w).ok()?;
        let act = crate::model::relu(&z).with_ones_column();
        fit_w2(&act, &part.y).ok()
    };
    let mut rows = Vec::with_capacity(h + 1);
    for k in 0..=h {
        let g = finite_diff_gradient(|w| solve(w).map_or(f64::NAN, |s| s.get(k, 0)), w1, step)?;
        rows.push(g.vectorize().into_vec());
    }
    Ok(Matrix::from_rows(&rows)?)
}

#[derive(Debug, Clone)]
pub struct BaselineInstance {
    pub params: NetworkParams,
    pub x: Matrix,
    pub y: Matrix,
    pub lambda: f64,
}

impl BaselineInstance {
    pub fn generate(rng: &mut ChaCha8Rng, n: usize, d: usize, h: usize, lambda: f64) -> BaselineInstance {
        loop {
            let x = uniform(rng, n, d);
            let y = uniform(rng, n, 1);
            let w1 = uniform(rng, d + 1, h);
            let w2 = uniform(rng, h + 1, 1);
            if well_separated(&x, &w1, MARGIN) {
                let params = NetworkParams::new(w1, w2).expect("shapes");
                return BaselineInstance { params, x, y, lambda };
            }
        }
    }

    /// Worst relative error over both layers.
    pub fn gradient_error(&self) -> Result<f64> {
        let (g1, g2) = baseline_gradients(&self.params, &self.x, &self.y, self.lambda)?;
        let p = &self.params;
        let fd1 = finite_diff_gradient(
            |w| {
                let q = NetworkParams {
                    w1: w.clone(),
                    ..p.clone()
                };
                baseline_cost(&q, &self.x, &self.y, self.lambda).unwrap_or(f64::NAN)
            },
            &p.w1,
            GRADIENT_STEP,
        )?;
        let fd2 = finite_diff_gradient(
            |w| {
                let q = NetworkParams {
                    w2: w.clone(),
                    ..p.clone()
                };
                baseline_cost(&q, &self.x, &self.y, self.lambda).unwrap_or(f64::NAN)
            },
            &p.w2,
            GRADIENT_STEP,
        )?;
        Ok(max_relative_error(&g1, &fd1).max(max_relative_error(&g2, &fd2)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub instances: usize,
    pub w1_gradient: f64,
    pub w2_jacobian: f64,
    pub baseline_gradients: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.w1_gradient < HYPERGRADIENT_TOLERANCE
            && self.w2_jacobian < JACOBIAN_TOLERANCE
            && self.baseline_gradients < BASELINE_TOLERANCE
    }
}

/// Worst errors over `instances` seeded instances of each kind
/// (8 + 8 samples, 3 features, 4 hidden units).
pub fn run_gradcheck(seed: u64, instances: usize) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradcheckReport {
        instances,
        w1_gradient: 0.0,
        w2_jacobian: 0.0,
        baseline_gradients: 0.0,
    };
    for _ in 0..instances {
        let inst = BilevelInstance::generate(&mut rng, 8, 3, 4, MARGIN);
        report.w1_gradient = report.w1_gradient.max(inst.hypergradient_error()?);
        report.w2_jacobian = report.w2_jacobian.max(inst.jacobian_error()?);
        let base = BaselineInstance::generate(&mut rng, 8, 3, 4, 0.01);
        report.baseline_gradients = report.baseline_gradients.max(base.gradient_error()?);
    }
    Ok(report)
}
