//! Conventional full-batch training of both layers on an L2-penalized
//! squared error. Bias entries are not penalized.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Samples;
use crate::error::{Error, Result};
use crate::linalg::{LinalgError, Matrix};
use crate::model::{mse_cost, relu_prime, NetworkParams};
use crate::protocol::early_stop_fires;
use crate::splitboost::{EpochRecord, TrainResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub max_epochs: usize,
    pub epsilon: f64,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            lambda: 0.01,
            max_epochs: 500,
            epsilon: 1e-6,
            hidden: 10,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_epochs == 0 || self.hidden == 0 {
            return Err(Error::Config("max_epochs and hidden must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sum of squares of the non-bias weights.
fn penalty_norm(params: &NetworkParams) -> f64 {
    let w1: f64 = params.w1.as_slice()[..params.d * params.h].iter().map(|v| v * v).sum();
    let w2: f64 = params.w2.as_slice()[..params.h].iter().map(|v| v * v).sum();
    w1 + w2
}

fn check(params: &NetworkParams, x: &Matrix, y: &Matrix) -> Result<()> {
    if y.shape() != (x.rows(), 1) {
        return Err(LinalgError::Shape {
            op: "baseline",
            left: x.shape(),
            right: y.shape(),
        }
        .into());
    }
    if x.cols() != params.d {
        return Err(LinalgError::Shape {
            op: "baseline",
            left: x.shape(),
            right: params.w1.shape(),
        }
        .into());
    }
    Ok(())
}

/// `(1/2n)‖y − ŷ‖² + (λ/2)(‖W₁‖² + ‖W₂‖²)` over non-bias weights.
pub fn baseline_cost(params: &NetworkParams, x: &Matrix, y: &Matrix, lambda: f64) -> Result<f64> {
    check(params, x, y)?;
    let yhat = params.predict(x)?;
    Ok(mse_cost(&yhat, y)? + 0.5 * lambda * penalty_norm(params))
}

/// Exact gradients of [`baseline_cost`] with respect to `w1` and `w2`.
pub fn baseline_gradients(params: &NetworkParams, x: &Matrix, y: &Matrix, lambda: f64) -> Result<(Matrix, Matrix)> {
    check(params, x, y)?;
    let x_aug = x.with_ones_column();
    gradients_augmented(params, &x_aug, y, lambda).map(|(g1, g2, _)| (g1, g2))
}

/// Gradients plus the unpenalized MSE at `params`.
fn gradients_augmented(
    params: &NetworkParams,
    x_aug: &Matrix,
    y: &Matrix,
    lambda: f64,
) -> Result<(Matrix, Matrix, f64)> {
    let cache = params.forward_augmented(x_aug)?;
    let n = y.rows() as f64;
    let grad_yhat = cache.yhat.sub(y)?.scale(1.0 / n)?;
    let mut g2 = cache.x1aug.t_matmul(&grad_yhat)?;
    let w_hidden = params.w2.top_rows(params.h).transpose();
    let grad_z = grad_yhat.matmul(&w_hidden)?.hadamard(&relu_prime(&cache.z1))?;
    let mut g1 = x_aug.t_matmul(&grad_z)?;
    if lambda != 0.0 {
        for r in 0..params.d {
            for c in 0..params.h {
                g1.set(r, c, g1.get(r, c) + lambda * params.w1.get(r, c));
            }
        }
        for r in 0..params.h {
            g2.set(r, 0, g2.get(r, 0) + lambda * params.w2.get(r, 0));
        }
    }
    let mse = mse_cost(&cache.yhat, y)?;
    Ok((g1, g2, mse))
}

/// Trains with early stopping on `val`.
pub fn train_baseline(config: &BaselineConfig, train: &Samples, val: &Samples) -> Result<TrainResult> {
    run(config, train, Some(val), config.max_epochs, true)
}

pub fn train_baseline_for_epochs(
    config: &BaselineConfig,
    train: &Samples,
    monitor: Option<&Samples>,
    epochs: usize,
) -> Result<TrainResult> {
    run(config, train, monitor, epochs, false)
}

/// Trains on the merged training and validation rows for exactly `best_epoch` epochs.
pub fn retrain_baseline(
    config: &BaselineConfig,
    merged: &Samples,
    best_epoch: usize,
    monitor: Option<&Samples>,
) -> Result<TrainResult> {
    run(config, merged, monitor, best_epoch, false)
}

fn run(
    config: &BaselineConfig,
    train: &Samples,
    monitor: Option<&Samples>,
    epochs: usize,
    early_stop: bool,
) -> Result<TrainResult> {
    config.validate()?;
    if epochs == 0 {
        return Err(Error::Config("epochs must be >= 1".into()));
    }
    if train.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let d = train.x.cols();
    let mut params = NetworkParams::init_both(d, config.hidden, &mut ChaCha8Rng::seed_from_u64(config.seed));
    check(&params, &train.x, &train.y)?;
    if let Some(m) = monitor {
        check(&params, &m.x, &m.y)?;
    }
    let x_aug = train.x.with_ones_column();

    let mut history: Vec<EpochRecord> = Vec::new();
    let mut stopped_early = false;
    for epoch in 1..=epochs {
        let started = Instant::now();
        let step = (|| -> Result<(NetworkParams, f64, f64, Option<f64>)> {
            let (g1, g2, mse) = gradients_augmented(&params, &x_aug, &train.y, config.lambda)?;
            let j_train = mse + 0.5 * config.lambda * penalty_norm(&params);
            let next = NetworkParams {
                w1: params.w1.axpy(-config.gamma, &g1)?,
                w2: params.w2.axpy(-config.gamma, &g2)?,
                d,
                h: config.hidden,
            };
            let j_val = monitor.map(|m| mse_cost(&next.predict(&m.x)?, &m.y)).transpose()?;
            Ok((next, j_train, mse, j_val))
        })();
        let (next, j_train, mse, j_val) = match step {
            Ok(v) if v.1.is_finite() && v.3.is_none_or(f64::is_finite) => v,
            Ok(_) | Err(Error::Linalg(_)) => {
                return Err(Error::Diverged {
                    epoch,
                    last_finite: Box::new(params),
                })
            }
            Err(e) => return Err(e),
        };
        params = next;

        let prev_val = history.last().and_then(|r| r.j_val);
        history.push(EpochRecord {
            epoch,
            j_train,
            j_train_avg_w2: mse,
            j_val,
            gamma_used: config.gamma,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
        if early_stop {
            if let Some(jv) = j_val {
                if early_stop_fires(prev_val, jv, config.epsilon) {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    Ok(TrainResult {
        params,
        best_epoch: history.len(),
        history,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_samples(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Samples {
        let x: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Samples {
            x: Matrix::new(n, d, x).unwrap(),
            y: Matrix::new(n, 1, y).unwrap(),
        }
    }

    #[test]
    fn zero_penalty_exact_fit_has_zero_cost_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = NetworkParams::init_both(2, 3, &mut rng);
        let x = Matrix::from_rows(&[[0.3, -0.2], [1.0, 0.5], [-0.7, 0.9]]).unwrap();
        let y = p.predict(&x).unwrap();
        assert_eq!(baseline_cost(&p, &x, &y, 0.0).unwrap(), 0.0);
        let (g1, g2) = baseline_gradients(&p, &x, &y, 0.0).unwrap();
        assert_eq!(g1.max_abs(), 0.0);
        assert_eq!(g2.max_abs(), 0.0);
    }

    #[test]
    fn zero_weights_cost_is_half_mean_square_target() {
        let p = NetworkParams::new(Matrix::zeros(3, 4), Matrix::zeros(5, 1)).unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let y = Matrix::column(&[3.0, -1.0]).unwrap();
        assert_eq!(baseline_cost(&p, &x, &y, 0.7).unwrap(), (9.0 + 1.0) / 4.0);
    }

    #[test]
    fn one_sample_hand_cost() {
        // w1 = [[1, -1], [0.5, 0.5]] (bias row 0.5 not penalized), x = [2]
        // z = [2.5, -1.5] -> x1 = [2.5, 0, 1]; w2 = [2, 3, 1] -> ŷ = 6, y = 4
        // mse = ½·4 = 2; penalty = 0.005·(1 + 1 + 4 + 9) = 0.075
        let w1 = Matrix::from_rows(&[[1.0, -1.0], [0.5, 0.5]]).unwrap();
        let w2 = Matrix::column(&[2.0, 3.0, 1.0]).unwrap();
        let p = NetworkParams::new(w1, w2).unwrap();
        let x = Matrix::from_rows(&[[2.0]]).unwrap();
        let y = Matrix::column(&[4.0]).unwrap();
        let c = baseline_cost(&p, &x, &y, 0.01).unwrap();
        assert!((c - 2.075).abs() < 1e-15, "{c}");
    }

    #[test]
    fn huge_lambda_dominates_gradient() {
        let w1 = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]]).unwrap();
        let w2 = Matrix::column(&[1.0, 1.0, 0.0]).unwrap();
        let p = NetworkParams::new(w1, w2).unwrap();
        let x = Matrix::from_rows(&[[0.5, -0.2], [0.1, 0.3]]).unwrap();
        let y = Matrix::column(&[1.0, -1.0]).unwrap();
        let lambda = 1e6;
        let (g1, g2) = baseline_gradients(&p, &x, &y, lambda).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((g1.get(r, c) / lambda - 1.0).abs() < 0.01);
            }
            assert!((g2.get(r, 0) / lambda - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn zero_gamma_keeps_everything_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_samples(&mut rng, 20, 3);
        let cfg = BaselineConfig {
            gamma: 0.0,
            hidden: 4,
            ..Default::default()
        };
        let r = train_baseline_for_epochs(&cfg, &t, None, 5).unwrap();
        let init = NetworkParams::init_both(3, 4, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r.params, init);
        assert!(r.history.iter().all(|h| h.j_train == r.history[0].j_train));
    }

    #[test]
    fn strong_penalty_shrinks_weights_every_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = random_samples(&mut rng, 30, 3);
        let cfg = BaselineConfig {
            gamma: 0.01,
            lambda: 10.0,
            hidden: 5,
            seed: 2,
            ..Default::default()
        };
        let mut prev = penalty_norm(&NetworkParams::init_both(3, 5, &mut ChaCha8Rng::seed_from_u64(2)));
        for epochs in 1..=20 {
            let r = train_baseline_for_epochs(&cfg, &t, None, epochs).unwrap();
            let now = penalty_norm(&r.params);
            assert!(now < prev, "epoch {epochs}: {now} >= {prev}");
            prev = now;
        }
    }

    #[test]
    fn early_stopping_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = random_samples(&mut rng, 30, 3);
        let v = random_samples(&mut rng, 10, 3);
        let cfg = BaselineConfig {
            epsilon: 1e300,
            hidden: 5,
            ..Default::default()
        };
        let r = train_baseline(&cfg, &t, &v).unwrap();
        assert_eq!(r.best_epoch, 2);
        let cfg = BaselineConfig {
            hidden: 5,
            max_epochs: 40,
            ..Default::default()
        };
        let a = train_baseline(&cfg, &t, &v).unwrap();
        let b = train_baseline(&cfg, &t, &v).unwrap();
        assert_eq!(a.params, b.params);
        let costs = |r: &TrainResult| {
            r.history
                .iter()
                .map(|h| (h.j_train.to_bits(), h.j_val.map(f64::to_bits)))
                .collect::<Vec<_>>()
        };
        assert_eq!(costs(&a), costs(&b));
    }

    #[test]
    fn divergence_reports_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let t = random_samples(&mut rng, 30, 3);
        let t = Samples {
            x: t.x.scale(1e3).unwrap(),
            y: t.y.scale(1e3).unwrap(),
        };
        let cfg = BaselineConfig {
            gamma: 1e3,
            hidden: 5,
            ..Default::default()
        };
        match train_baseline_for_epochs(&cfg, &t, None, 500) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
