//! Split-boost trainer.
//!
//! The training set is split into halves A and B. Each epoch the output
//! layer is solved in closed form on each half, each half is scored with the
//! other half's output weights, and the hidden layer takes a gradient step on
//! that cross cost. The gradient includes the dependence of both inner
//! solutions on the hidden weights, obtained by differentiating their
//! stationarity conditions.
//!
//! Hidden weights are vectorized column by column: Jacobian column
//! `d + (D + 1) * h` belongs to `w1[d, h]`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{halves, Samples};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, Cod, LinalgError, Matrix};
use crate::model::{mse_cost, relu, relu_prime, ForwardCache, NetworkParams};
use crate::protocol::{early_stop_fires, LrSwitch};

/// Stationarity slack accepted by [`w2_jacobian`], relative to `1 + ‖Xᵀy‖∞`.
pub const STATIONARITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Base learning rate.
    pub gamma_star: f64,
    /// Early-stopping threshold on the epoch-to-epoch validation change.
    pub epsilon: f64,
    pub max_epochs: usize,
    pub hidden: usize,
    pub seed: u64,
    pub lr_switch_enabled: bool,
    /// `true`: full rate after a cost increase, a tenth otherwise.
    /// `false`: the reverse.
    pub lr_switch_as_written: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma_star: 0.1,
            epsilon: 1e-6,
            max_epochs: 500,
            hidden: 10,
            seed: 0,
            lr_switch_enabled: true,
            lr_switch_as_written: true,
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted and freezes the hidden layer.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_star >= 0.0 && self.gamma_star.is_finite()) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma_star)));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden must be >= 1".into()));
        }
        Ok(())
    }

    pub fn lr_switch(&self) -> LrSwitch {
        match (self.lr_switch_enabled, self.lr_switch_as_written) {
            (false, _) => LrSwitch::Off,
            (true, true) => LrSwitch::OnIncrease,
            (true, false) => LrSwitch::OnDecrease,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Training objective at the start of the epoch.
    pub j_train: f64,
    /// Plain training MSE: after the update with averaged output weights for
    /// split-boost; unpenalized at the start of the epoch for the baseline.
    pub j_train_avg_w2: f64,
    /// Cost on the monitored set after the update, when one is monitored.
    pub j_val: Option<f64>,
    pub gamma_used: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: NetworkParams,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

pub const HISTORY_HEADER: &str = "epoch,j_train,j_train_avg_w2,j_val,gamma_used,wall_time_s";

/// History as CSV; an unmonitored validation cost is left empty.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let val = r.j_val.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.epoch, r.j_train, r.j_train_avg_w2, val, r.gamma_used, r.wall_time_s
        ));
    }
    out
}

/// Output weights minimizing the partition's squared error, minimum norm when
/// activations are rank deficient.
pub fn fit_w2(x1aug: &Matrix, y: &Matrix) -> Result<Matrix> {
    Ok(least_squares(x1aug, y)?)
}

/// Hidden-layer pre-activations and `[relu | 1]` activations.
fn hidden(x_aug: &Matrix, w1: &Matrix) -> Result<(Matrix, Matrix)> {
    let z1 = x_aug.matmul(w1)?;
    let x1aug = relu(&z1).with_ones_column();
    Ok((z1, x1aug))
}

fn check_stationary(x1aug: &Matrix, w2star: &Matrix, y: &Matrix) -> Result<Matrix> {
    let r = x1aug.matmul(w2star)?.sub(y)?;
    let residual = x1aug.t_matmul(&r)?.max_abs();
    let limit = STATIONARITY_TOLERANCE * (1.0 + x1aug.t_matmul(y)?.max_abs());
    if residual > limit {
        return Err(Error::NotStationary { residual, limit });
    }
    Ok(r)
}

/// Mixed second derivative of the partition cost, scaled by the partition
/// size: `(h + 1) x ((d + 1) * h)`.
fn mixed_derivative(x_aug: &Matrix, z1: &Matrix, x1aug: &Matrix, w2star: &Matrix, r: &Matrix) -> Matrix {
    let (n, da) = x_aug.shape();
    let h = z1.cols();
    let mut s = Matrix::zeros(h + 1, da * h);
    let g = relu_prime(z1);
    let mut acc = vec![0.0; (h + 1) * da];
    for hp in 0..h {
        let w = w2star.get(hp, 0);
        acc.iter_mut().for_each(|v| *v = 0.0);
        let mut own = vec![0.0; da];
        for row in 0..n {
            if g.get(row, hp) == 0.0 {
                continue;
            }
            let xa = x_aug.row(row);
            let rn = r.get(row, 0);
            for (o, &xd) in own.iter_mut().zip(xa) {
                *o += rn * xd;
            }
            for (k, &act) in x1aug.row(row).iter().enumerate() {
                if act == 0.0 {
                    continue;
                }
                let dst = &mut acc[k * da..(k + 1) * da];
                for (v, &xd) in dst.iter_mut().zip(xa) {
                    *v += act * xd;
                }
            }
        }
        for k in 0..=h {
            for d in 0..da {
                let mut v = acc[k * da + d] * w;
                if k == hp {
                    v += own[d];
                }
                s.set(k, d + da * hp, v);
            }
        }
    }
    s
}

/// Jacobian of the inner solution with respect to the vectorized hidden
/// weights, from the implicit function theorem applied to the stationarity
/// of the partition's least-squares fit.
///
/// `w2star` must solve the fit for exactly this `cache`; otherwise
/// [`Error::NotStationary`] is returned.
pub fn w2_jacobian(x_aug: &Matrix, cache: &ForwardCache, w2star: &Matrix, y: &Matrix) -> Result<Matrix> {
    let cod = Cod::new(&cache.x1aug);
    jacobian_with(&cod, x_aug, &cache.z1, &cache.x1aug, w2star, y)
}

fn jacobian_with(
    cod: &Cod,
    x_aug: &Matrix,
    z1: &Matrix,
    x1aug: &Matrix,
    w2star: &Matrix,
    y: &Matrix,
) -> Result<Matrix> {
    if w2star.shape() != (x1aug.cols(), 1) || y.rows() != x1aug.rows() || x_aug.rows() != x1aug.rows() {
        return Err(LinalgError::Shape {
            op: "w2_jacobian",
            left: x1aug.shape(),
            right: w2star.shape(),
        }
        .into());
    }
    let r = check_stationary(x1aug, w2star, y)?;
    let s = mixed_derivative(x_aug, z1, x1aug, w2star, &r);
    // Hessian⁻¹ T = (X₁ᵀX₁)⁺ (N T) = X₁⁺ (X₁ᵀ)⁺ S; the 1/N factors cancel.
    let u = cod.solve_transposed(&s)?;
    Ok(cod.solve(&u)?.scale(-1.0)?)
}

/// One partition's view of the current hidden weights.
struct Inner {
    z1: Matrix,
    x1aug: Matrix,
    cod: Cod,
    w2star: Matrix,
}

fn solve_inner(part: &Partition, w1: &Matrix) -> Result<Inner> {
    let (z1, x1aug) = hidden(&part.x_aug, w1)?;
    let cod = Cod::new(&x1aug);
    let w2star = cod.solve(&part.y)?;
    Ok(Inner { z1, x1aug, cod, w2star })
}

/// Partition with bias-augmented inputs.
struct Partition {
    x_aug: Matrix,
    y: Matrix,
}

impl Partition {
    fn new(s: &Samples) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Config("empty partition".into()));
        }
        if s.y.shape() != (s.x.rows(), 1) {
            return Err(LinalgError::Shape {
                op: "partition",
                left: s.x.shape(),
                right: s.y.shape(),
            }
            .into());
        }
        Ok(Self {
            x_aug: s.x.with_ones_column(),
            y: s.y.clone(),
        })
    }
}

fn cross_cost(scored: &Inner, scored_part: &Partition, w2: &Matrix) -> Result<f64> {
    mse_cost(&scored.x1aug.matmul(w2)?, &scored_part.y)
}

fn check_w1(w1: &Matrix, a: &Samples) -> Result<()> {
    if w1.rows() != a.x.cols() + 1 {
        return Err(LinalgError::Shape {
            op: "hidden weights",
            left: a.x.shape(),
            right: w1.shape(),
        }
        .into());
    }
    Ok(())
}

/// Cross cost: B scored with A's output solution plus A scored with B's.
pub fn bilevel_cost(w1: &Matrix, a: &Samples, b: &Samples) -> Result<f64> {
    check_w1(w1, a)?;
    let (pa, pb) = (Partition::new(a)?, Partition::new(b)?);
    let (ia, ib) = (solve_inner(&pa, w1)?, solve_inner(&pb, w1)?);
    Ok(cross_cost(&ib, &pb, &ia.w2star)? + cross_cost(&ia, &pa, &ib.w2star)?)
}

/// Gradient contributions from scoring `scored` with `fitted`'s solution.
fn pair_gradient(
    scored: &Inner,
    scored_part: &Partition,
    fitted: &Inner,
    fitted_part: &Partition,
    implicit: bool,
) -> Result<Matrix> {
    let h = scored.z1.cols();
    let w = &fitted.w2star;
    let n = scored_part.y.rows() as f64;
    let grad_yhat = scored.x1aug.matmul(w)?.sub(&scored_part.y)?.scale(1.0 / n)?;
    let w_hidden = w.top_rows(h).transpose();
    let grad_z = grad_yhat.matmul(&w_hidden)?.hadamard(&relu_prime(&scored.z1))?;
    let mut grad = scored_part.x_aug.t_matmul(&grad_z)?;
    if implicit {
        let grad_w2 = scored.x1aug.t_matmul(&grad_yhat)?;
        let jac = jacobian_with(
            &fitted.cod,
            &fitted_part.x_aug,
            &fitted.z1,
            &fitted.x1aug,
            w,
            &fitted_part.y,
        )?;
        let through = jac.t_matmul(&grad_w2)?;
        grad = grad.add(&Matrix::unvectorize(through.as_slice(), grad.rows(), grad.cols())?)?;
    }
    Ok(grad)
}

fn gradient_at(pa: &Partition, pb: &Partition, ia: &Inner, ib: &Inner, implicit: bool) -> Result<Matrix> {
    let from_b = pair_gradient(ib, pb, ia, pa, implicit)?;
    let from_a = pair_gradient(ia, pa, ib, pb, implicit)?;
    Ok(from_b.add(&from_a)?)
}

/// Hypergradient of [`bilevel_cost`] with respect to the hidden weights.
pub fn w1_gradient(w1: &Matrix, a: &Samples, b: &Samples) -> Result<Matrix> {
    check_w1(w1, a)?;
    let (pa, pb) = (Partition::new(a)?, Partition::new(b)?);
    let (ia, ib) = (solve_inner(&pa, w1)?, solve_inner(&pb, w1)?);
    gradient_at(&pa, &pb, &ia, &ib, true)
}

/// Gradient with both inner solutions held fixed, i.e. without the implicit
/// terms. Only useful as a comparison point.
pub fn w1_gradient_direct(w1: &Matrix, a: &Samples, b: &Samples) -> Result<Matrix> {
    check_w1(w1, a)?;
    let (pa, pb) = (Partition::new(a)?, Partition::new(b)?);
    let (ia, ib) = (solve_inner(&pa, w1)?, solve_inner(&pb, w1)?);
    gradient_at(&pa, &pb, &ia, &ib, false)
}

/// Trains with early stopping on `val`, for at most `config.max_epochs`.
pub fn train(config: &TrainConfig, a: &Samples, b: &Samples, val: &Samples) -> Result<TrainResult> {
    run(config, a, b, Some(val), config.max_epochs, true)
}

/// Trains for exactly `epochs` epochs, recording the cost on `monitor` if given.
pub fn train_for_epochs(
    config: &TrainConfig,
    a: &Samples,
    b: &Samples,
    monitor: Option<&Samples>,
    epochs: usize,
) -> Result<TrainResult> {
    run(config, a, b, monitor, epochs, false)
}

/// Merges the previous training and validation rows, re-splits them into two
/// halves with the configured seed and trains for exactly `best_epoch` epochs.
pub fn retrain(
    config: &TrainConfig,
    merged: &Samples,
    best_epoch: usize,
    monitor: Option<&Samples>,
) -> Result<TrainResult> {
    if merged.len() < 2 {
        return Err(Error::Config("retraining needs at least two rows".into()));
    }
    let (ha, hb) = halves(merged.len(), config.seed);
    train_for_epochs(config, &merged.select(&ha), &merged.select(&hb), monitor, best_epoch)
}

fn run(
    config: &TrainConfig,
    a: &Samples,
    b: &Samples,
    monitor: Option<&Samples>,
    epochs: usize,
    early_stop: bool,
) -> Result<TrainResult> {
    config.validate()?;
    if epochs == 0 {
        return Err(Error::Config("epochs must be >= 1".into()));
    }
    let (pa, pb) = (Partition::new(a)?, Partition::new(b)?);
    if a.x.cols() != b.x.cols() || monitor.is_some_and(|m| m.x.cols() != a.x.cols()) {
        return Err(Error::Config("partitions disagree on the feature count".into()));
    }
    let train_all = a.concat(b)?;
    let d = a.x.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = NetworkParams::init(d, config.hidden, &mut rng);
    let switch = config.lr_switch();

    let mut history: Vec<EpochRecord> = Vec::new();
    let mut stopped_early = false;
    for epoch in 1..=epochs {
        let started = Instant::now();
        let diverged = |p: &NetworkParams| Error::Diverged {
            epoch,
            last_finite: Box::new(p.clone()),
        };
        let step = (|| -> Result<(Matrix, Matrix, f64, f64)> {
            let ia = solve_inner(&pa, &params.w1)?;
            let ib = solve_inner(&pb, &params.w1)?;
            let j_train = cross_cost(&ib, &pb, &ia.w2star)? + cross_cost(&ia, &pa, &ib.w2star)?;
            let prev = history.last().map(|r| r.j_train);
            let gamma = switch.select(config.gamma_star, prev, j_train);
            let grad = gradient_at(&pa, &pb, &ia, &ib, true)?;
            let w1 = params.w1.axpy(-gamma, &grad)?;
            let w2 = ia.w2star.add(&ib.w2star)?.scale(0.5)?;
            Ok((w1, w2, j_train, gamma))
        })();
        let (w1, w2, j_train, gamma) = match step {
            Ok(v) if v.2.is_finite() => v,
            Ok(_) | Err(Error::Linalg(_)) => return Err(diverged(&params)),
            Err(e) => return Err(e),
        };
        let next = NetworkParams {
            w1,
            w2,
            d,
            h: config.hidden,
        };
        let evaluated = (|| -> Result<(f64, Option<f64>)> {
            let j_avg = mse_cost(&next.predict(&train_all.x)?, &train_all.y)?;
            let j_val = monitor.map(|m| mse_cost(&next.predict(&m.x)?, &m.y)).transpose()?;
            Ok((j_avg, j_val))
        })();
        let (j_train_avg_w2, j_val) = match evaluated {
            Ok((ja, jv)) if ja.is_finite() && jv.is_none_or(f64::is_finite) => (ja, jv),
            _ => return Err(diverged(&params)),
        };
        params = next;

        let prev_val = history.last().and_then(|r| r.j_val);
        history.push(EpochRecord {
            epoch,
            j_train,
            j_train_avg_w2,
            j_val,
            gamma_used: gamma,
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

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn samples(x: &[&[f64]], y: &[f64]) -> Samples {
        Samples {
            x: m(x),
            y: Matrix::column(y).unwrap(),
        }
    }

    fn random_samples(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Samples {
        let x: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Samples {
            x: Matrix::new(n, d, x).unwrap(),
            y: Matrix::new(n, 1, y).unwrap(),
        }
    }

    #[test]
    fn fit_w2_exact_interpolation() {
        let x1 = m(&[&[1.0, 1.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let y = Matrix::column(&[1.0, 0.0, 1.0]).unwrap();
        let w = fit_w2(&x1, &y).unwrap();
        assert!((w.get(0, 0) - 1.0).abs() < 1e-14);
        assert!(w.get(1, 0).abs() < 1e-14);
    }

    #[test]
    fn fit_w2_dead_unit_gets_zero_weight() {
        // middle hidden unit never fires
        let x1 = m(&[&[1.0, 0.0, 1.0], &[2.0, 0.0, 1.0], &[0.5, 0.0, 1.0]]);
        let y = Matrix::column(&[1.0, 3.0, 0.0]).unwrap();
        let w = fit_w2(&x1, &y).unwrap();
        assert_eq!(w.get(1, 0), 0.0);
    }

    #[test]
    fn jacobian_zero_when_exact_fit_and_zero_solution() {
        let x_aug = m(&[&[1.0, 1.0], &[2.0, 1.0]]);
        let w1 = m(&[&[1.0], &[0.5]]);
        let p = NetworkParams::new(w1, Matrix::zeros(2, 1)).unwrap();
        let cache = p.forward_augmented(&x_aug).unwrap();
        let y = Matrix::zeros(2, 1);
        let j = w2_jacobian(&x_aug, &cache, &Matrix::zeros(2, 1), &y).unwrap();
        assert_eq!(j.shape(), (2, 2));
        assert_eq!(j.max_abs(), 0.0);
    }

    #[test]
    fn jacobian_rejects_non_stationary_solution() {
        let x_aug = m(&[&[1.0, 1.0], &[2.0, 1.0], &[-1.0, 1.0]]);
        let w1 = m(&[&[1.0], &[0.5]]);
        let p = NetworkParams::new(w1, Matrix::zeros(2, 1)).unwrap();
        let cache = p.forward_augmented(&x_aug).unwrap();
        let y = Matrix::column(&[1.0, 2.0, 0.0]).unwrap();
        let err = w2_jacobian(&x_aug, &cache, &Matrix::column(&[5.0, 5.0]).unwrap(), &y).unwrap_err();
        assert!(matches!(err, Error::NotStationary { .. }));
    }

    #[test]
    fn dead_unit_has_zero_jacobian_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_samples(&mut rng, 6, 2);
        let x_aug = s.x.with_ones_column();
        let mut w1 = Matrix::from_rows(&[[0.7, 0.0], [-0.3, 0.0], [0.2, -50.0]]).unwrap();
        w1.set(0, 0, 0.9);
        let p = NetworkParams::new(w1, Matrix::zeros(3, 1)).unwrap();
        let cache = p.forward_augmented(&x_aug).unwrap();
        assert!(cache.x1aug.column_values(1).iter().all(|&v| v == 0.0));
        let w2 = fit_w2(&cache.x1aug, &s.y).unwrap();
        let j = w2_jacobian(&x_aug, &cache, &w2, &s.y).unwrap();
        for d in 0..3 {
            for k in 0..3 {
                assert_eq!(j.get(k, d + 3), 0.0);
            }
        }
        for d in 0..3 {
            assert_eq!(j.get(1, d), 0.0);
        }
    }

    #[test]
    fn bilevel_cost_zero_when_partitions_share_exact_fit() {
        let a = samples(&[&[1.0], &[2.0], &[3.0]], &[2.0, 4.0, 6.0]);
        let w1 = m(&[&[1.0], &[0.0]]);
        assert!(bilevel_cost(&w1, &a, &a).unwrap() < 1e-28);
        let g = w1_gradient(&w1, &a, &a).unwrap();
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn bilevel_cost_single_sample_by_hand() {
        // D = 1, H = 1, w1 = [1; 0]. A: x=2, y=3. B: x=1, y=5.
        // A activations [2, 1] -> min-norm solution of 2u + v = 3 is (6/5, 3/5).
        // B activations [1, 1] -> min-norm solution of u + v = 5 is (5/2, 5/2).
        // B scored by A: 6/5 + 3/5 = 9/5, residual 16/5 -> ½ (16/5)² = 128/25.
        // A scored by B: 2·5/2 + 5/2 = 15/2, residual 9/2 -> ½ (9/2)² = 81/8.
        let a = samples(&[&[2.0]], &[3.0]);
        let b = samples(&[&[1.0]], &[5.0]);
        let w1 = m(&[&[1.0], &[0.0]]);
        let c = bilevel_cost(&w1, &a, &b).unwrap();
        let expected = 128.0 / 25.0 + 81.0 / 8.0;
        assert!((c - expected).abs() < 1e-12, "{c} vs {expected}");
    }

    #[test]
    fn bilevel_cost_scales_quadratically_in_linear_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut a = random_samples(&mut rng, 6, 2);
        let mut b = random_samples(&mut rng, 6, 2);
        a.x = a.x.map(|v| v.abs() + 0.1);
        b.x = b.x.map(|v| v.abs() + 0.1);
        let w1 = m(&[&[1.0, 0.5], &[0.3, 2.0], &[0.1, 0.2]]);
        let c = bilevel_cost(&w1, &a, &b).unwrap();
        let a2 = Samples {
            x: a.x.clone(),
            y: a.y.scale(2.0).unwrap(),
        };
        let b2 = Samples {
            x: b.x.clone(),
            y: b.y.scale(2.0).unwrap(),
        };
        let c2 = bilevel_cost(&w1, &a2, &b2).unwrap();
        assert!((c2 - 4.0 * c).abs() < 1e-10 * c2.abs());
    }

    #[test]
    fn bilevel_cost_rejects_empty_and_mismatched() {
        let a = samples(&[&[1.0]], &[1.0]);
        let w1 = m(&[&[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]]);
        assert!(bilevel_cost(&w1, &a, &a).is_err());
    }

    #[test]
    fn large_epsilon_stops_at_epoch_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_samples(&mut rng, 10, 3);
        let b = random_samples(&mut rng, 10, 3);
        let v = random_samples(&mut rng, 5, 3);
        let cfg = TrainConfig {
            epsilon: 1e300,
            hidden: 4,
            ..TrainConfig::default()
        };
        let r = train(&cfg, &a, &b, &v).unwrap();
        assert_eq!(r.best_epoch, 2);
        assert!(r.stopped_early);
        assert_eq!(r.history.len(), 2);
    }

    #[test]
    fn zero_learning_rate_freezes_hidden_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_samples(&mut rng, 12, 3);
        let b = random_samples(&mut rng, 12, 3);
        let cfg = TrainConfig {
            gamma_star: 0.0,
            hidden: 5,
            seed: 1,
            ..TrainConfig::default()
        };
        let r = train_for_epochs(&cfg, &a, &b, None, 4).unwrap();
        let init = NetworkParams::init(3, 5, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(r.params.w1, init.w1);
        let ia = fit_w2(&hidden(&a.x.with_ones_column(), &init.w1).unwrap().1, &a.y).unwrap();
        let ib = fit_w2(&hidden(&b.x.with_ones_column(), &init.w1).unwrap().1, &b.y).unwrap();
        assert_eq!(r.params.w2, ia.add(&ib).unwrap().scale(0.5).unwrap());
        let first = r.history[0].j_train;
        assert!(r.history.iter().all(|h| h.j_train == first));
    }

    #[test]
    fn retrain_runs_exact_epochs_deterministically() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let merged = random_samples(&mut rng, 15, 3);
        let cfg = TrainConfig {
            hidden: 4,
            seed: 3,
            ..TrainConfig::default()
        };
        let r1 = retrain(&cfg, &merged, 1, None).unwrap();
        assert_eq!(r1.history.len(), 1);
        assert!(!r1.stopped_early);
        let r2 = retrain(&cfg, &merged, 7, None).unwrap();
        let r3 = retrain(&cfg, &merged, 7, None).unwrap();
        assert_eq!(r2.params, r3.params);
        assert_eq!(r2.history.len(), 7);
    }

    #[test]
    fn history_csv_layout() {
        let h = vec![EpochRecord {
            epoch: 1,
            j_train: 0.5,
            j_train_avg_w2: 0.25,
            j_val: None,
            gamma_used: 0.01,
            wall_time_s: 0.001,
        }];
        assert_eq!(history_csv(&h), format!("{HISTORY_HEADER}\n1,0.5,0.25,,0.01,0.001\n"));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig {
            gamma_star: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            epsilon: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            hidden: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            max_epochs: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
