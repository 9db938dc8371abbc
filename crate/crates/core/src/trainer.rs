//! Loss assembly, finite-difference gradients and the descent optimizers.
//!
//! Both optimizers share one loop: every epoch visits the training samples
//! in batches, takes one plain gradient step per batch and then checks that
//! the full training loss did not increase (otherwise the epoch is undone and
//! the learning rate halved). A single batch holding every sample is
//! deterministic steepest descent, and its step is backtracked.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random_data::stream_rng;

/// Default box bound on every trainable parameter.
pub const DEFAULT_BOUND: f64 = 20.0;

/// Finite loss used in place of a failed scheme evaluation during training.
pub const FAILURE_PENALTY: f64 = 1e6;

/// Maps a scheme failure to [`FAILURE_PENALTY`].
pub fn penalized(r: Result<f64>) -> f64 {
    match r {
        Ok(v) if v.is_finite() => v,
        _ => FAILURE_PENALTY,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub labels: Vec<String>,
}

impl ParamVector {
    /// Parameters bounded by `±DEFAULT_BOUND`.
    pub fn new(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        let n = values.len();
        Self::with_bounds(values, vec![-DEFAULT_BOUND; n], vec![DEFAULT_BOUND; n], labels)
    }

    pub fn with_bounds(values: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        let n = values.len();
        if lower.len() != n || upper.len() != n || labels.len() != n {
            return Err(Error::InvalidArgument("parameter, bound and label lengths differ".into()));
        }
        for i in 0..n {
            if !(lower[i] <= values[i] && values[i] <= upper[i]) {
                return Err(Error::InvalidArgument(format!(
                    "{} = {} outside [{}, {}]",
                    labels[i], values[i], lower[i], upper[i]
                )));
            }
        }
        let mut sorted = labels.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("parameter labels must be unique".into()));
        }
        Ok(ParamVector { values, lower, upper, labels })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn clip(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        ParamVector { values, ..self.clone() }
    }

    /// Indices sitting on a bound.
    pub fn active_bounds(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.values[i] <= self.lower[i] || self.values[i] >= self.upper[i]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GradTol,
    MaxIters,
    BoundHit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Maximum number of epochs (iterations for full-batch descent).
    pub max_iters: usize,
    /// Tolerance on the max-norm of the projected full-loss gradient.
    pub grad_tol: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub sequential_in_time: bool,
    pub fd_step: f64,
    /// Factor applied to the learning rate after every accepted step.
    pub lr_growth: f64,
    /// Epochs an unchanged, non-empty set of active bounds must persist.
    pub bound_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            max_iters: 500,
            grad_tol: 1e-9,
            batch_size: 1,
            seed: 0,
            sequential_in_time: false,
            fd_step: 1e-6,
            lr_growth: 1.5,
            bound_patience: 10,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.grad_tol >= 0.0 && self.fd_step > 0.0 && self.lr_growth >= 1.0)
            || self.batch_size == 0
        {
            return Err(Error::InvalidArgument(format!("invalid training configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub theta_star: ParamVector,
    /// Full training loss after every epoch, starting with the initial loss.
    pub loss_history: Vec<f64>,
    pub termination: Termination,
    pub initial_loss: f64,
}

impl TrainResult {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().unwrap_or(&self.initial_loss)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A training loss that splits into independent per-sample terms.
pub trait SampleLoss {
    fn n_samples(&self) -> usize;

    /// Loss of sample `i`; failures should be reported as a large finite value.
    fn sample_loss(&self, theta: &[f64], i: usize) -> f64;

    fn batch_loss(&self, theta: &[f64], batch: &[usize]) -> f64 {
        batch.iter().map(|&i| self.sample_loss(theta, i)).sum()
    }

    fn full_loss(&self, theta: &[f64]) -> f64 {
        (0..self.n_samples()).map(|i| self.sample_loss(theta, i)).sum()
    }
}

/// A single-term loss given by a closure.
pub struct FnLoss<F: Fn(&[f64]) -> f64>(pub F);

impl<F: Fn(&[f64]) -> f64> SampleLoss for FnLoss<F> {
    fn n_samples(&self) -> usize {
        1
    }

    fn sample_loss(&self, theta: &[f64], _i: usize) -> f64 {
        (self.0)(theta)
    }
}

/// `scale · Σ |u - u_ref|^p` over matching sample/level/value arrays.
pub fn loss_lp(u: &[Vec<f64>], uref: &[Vec<f64>], p: u32, scale: f64) -> Result<f64> {
    if u.len() != uref.len() || u.iter().zip(uref).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::InvalidArgument("computed and reference fields differ in shape".into()));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("loss exponent must be positive".into()));
    }
    let sum: f64 = u.iter().zip(uref).flat_map(|(a, b)| a.iter().zip(b)).map(|(x, y)| (x - y).abs().powi(p as i32)).sum();
    Ok(scale * sum)
}

/// Central finite-difference gradient with step `fd_step · max(1, |θ_k|)`,
/// one-sided where a central stencil would leave the box.
pub fn grad_fd(loss: &dyn Fn(&[f64]) -> f64, theta: &ParamVector, fd_step: f64) -> Result<Vec<f64>> {
    let mut x = theta.values.clone();
    let f0 = loss(&x);
    let mut g = vec![0.0; x.len()];
    for k in 0..x.len() {
        let v = x[k];
        let h = fd_step * v.abs().max(1.0);
        let up = v + h <= theta.upper[k];
        let down = v - h >= theta.lower[k];
        let eval = |x: &mut Vec<f64>, at: f64| {
            x[k] = at;
            let r = loss(x);
            x[k] = v;
            r
        };
        let (d, fs) = match (up, down) {
            (true, true) => {
                let (fp, fm) = (eval(&mut x, v + h), eval(&mut x, v - h));
                ((fp - fm) / (2.0 * h), [fp, fm])
            }
            (true, false) => {
                let fp = eval(&mut x, v + h);
                ((fp - f0) / h, [fp, f0])
            }
            (false, true) => {
                let fm = eval(&mut x, v - h);
                ((f0 - fm) / h, [f0, fm])
            }
            (false, false) => (0.0, [f0, f0]),
        };
        if !(f0.is_finite() && fs.iter().all(|f| f.is_finite()) && d.is_finite()) {
            return Err(Error::GradientFailure { index: k, label: theta.labels[k].clone() });
        }
        g[k] = d;
    }
    Ok(g)
}

/// Gradient components that can still move the iterate inside the box.
fn projected(theta: &ParamVector, g: &[f64]) -> Vec<f64> {
    g.iter()
        .enumerate()
        .map(|(i, &d)| {
            let v = theta.values[i];
            if (v <= theta.lower[i] && d > 0.0) || (v >= theta.upper[i] && d < 0.0) {
                0.0
            } else {
                d
            }
        })
        .collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

const MAX_HALVINGS: usize = 30;
const STALL: f64 = 1e-6;
const MIN_LR_RATIO: f64 = 1e-18;

/// Full-batch steepest descent with backtracking.
pub fn steepest_descent(loss: &dyn Fn(&[f64]) -> f64, theta0: &ParamVector, cfg: &TrainConfig) -> Result<TrainResult> {
    let cfg = TrainConfig { batch_size: 1, ..cfg.clone() };
    minibatch_sgd(&FnLoss(loss), theta0, &cfg)
}

/// Minibatch stochastic gradient descent with epoch-level descent checks.
pub fn minibatch_sgd(loss: &dyn SampleLoss, theta0: &ParamVector, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    let n = loss.n_samples();
    if cfg.batch_size > n {
        return Err(Error::InvalidArgument(format!("batch size {} exceeds {n} samples", cfg.batch_size)));
    }
    let full = |x: &[f64]| loss.full_loss(x);
    let initial = full(&theta0.values);
    if !initial.is_finite() {
        return Err(Error::InvalidStart(initial));
    }
    let mut theta = theta0.clone();
    let mut f = initial;
    let mut lr = cfg.learning_rate;
    let mut history = vec![initial];
    let mut rng = stream_rng(cfg.seed, 0x5347_4400_0000_0000);
    let mut order: Vec<usize> = (0..n).collect();
    let mut active = theta.active_bounds();
    let mut streak = 0;
    let mut full_grad = None;

    for _ in 0..cfg.max_iters {
        let g = match full_grad.take() {
            Some(g) => g,
            None => grad_fd(&full, &theta, cfg.fd_step)?,
        };
        if max_norm(&projected(&theta, &g)) < cfg.grad_tol {
            let t = stationary(&theta, &g, cfg.grad_tol);
            return Ok(done(theta, history, t, initial));
        }
        let batches: Vec<Vec<usize>> = if cfg.batch_size == n {
            vec![order.clone()]
        } else {
            order.shuffle(&mut rng);
            order.chunks(cfg.batch_size).map(<[usize]>::to_vec).collect()
        };
        let start = theta.clone();
        let mut moved = false;
        if let [batch] = batches.as_slice() {
            // A single batch is plain gradient descent with backtracking.
            let bl = |x: &[f64]| loss.batch_loss(x, batch);
            let fb = bl(&theta.values);
            for _ in 0..=MAX_HALVINGS {
                let mut cand: Vec<f64> = theta.values.iter().zip(&g).map(|(v, d)| v - lr * d).collect();
                theta.clip(&mut cand);
                let fc = bl(&cand);
                if fc.is_finite() && fc < fb {
                    theta = theta.with_values(cand);
                    moved = true;
                    break;
                }
                lr *= 0.5;
            }
        } else {
            for batch in &batches {
                let scale = n as f64 / batch.len() as f64;
                let bl = |x: &[f64]| scale * loss.batch_loss(x, batch);
                let gb = grad_fd(&bl, &theta, cfg.fd_step)?;
                let mut cand: Vec<f64> = theta.values.iter().zip(&gb).map(|(v, d)| v - lr * d).collect();
                theta.clip(&mut cand);
                if bl(&cand).is_finite() {
                    theta = theta.with_values(cand);
                    moved = true;
                }
            }
            moved &= lr > cfg.learning_rate * MIN_LR_RATIO;
        }
        if !moved {
            let t = stationary(&theta, &g, cfg.grad_tol);
            return Ok(done(theta, history, t, initial));
        }
        let f_new = full(&theta.values);
        let progress = f - f_new;
        if f_new.is_finite() && f_new <= f {
            f = f_new;
            lr *= cfg.lr_growth;
        } else {
            theta = start;
            lr *= 0.5;
        }
        history.push(f);

        let now_active = theta.active_bounds();
        if !now_active.is_empty() && now_active == active && !(progress > STALL * f.abs()) {
            streak += 1;
        } else {
            streak = 0;
        }
        active = now_active;
        if streak >= cfg.bound_patience {
            return Ok(done(theta, history, Termination::BoundHit, initial));
        }
        full_grad = Some(grad_fd(&full, &theta, cfg.fd_step)?);
    }
    if let Some(g) = full_grad {
        if max_norm(&projected(&theta, &g)) < cfg.grad_tol {
            let t = stationary(&theta, &g, cfg.grad_tol);
            return Ok(done(theta, history, t, initial));
        }
    }
    Ok(done(theta, history, Termination::MaxIters, initial))
}

/// Classifies a stationary point: bound-limited when an active bound blocks
/// a gradient component above tolerance.
fn stationary(theta: &ParamVector, g: &[f64], tol: f64) -> Termination {
    let blocked = theta.active_bounds().into_iter().any(|i| g[i].abs() >= tol);
    if blocked {
        Termination::BoundHit
    } else {
        Termination::GradTol
    }
}

fn done(theta: ParamVector, history: Vec<f64>, termination: Termination, initial: f64) -> TrainResult {
    TrainResult { theta_star: theta, loss_history: history, termination, initial_loss: initial }
}

/// Per-level outcome of [`train_sequential`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialResult {
    pub levels: Vec<TrainResult>,
}

impl SequentialResult {
    /// All level parameters in time order.
    pub fn theta(&self) -> Vec<f64> {
        self.levels.iter().flat_map(|r| r.theta_star.values.iter().copied()).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.levels.iter().flat_map(|r| r.theta_star.labels.iter().cloned()).collect()
    }
}

/// Optimizes time levels one after another: level `n` is trained with the
/// already optimized levels `< n` frozen. `level_loss(n, frozen)` builds the
/// loss of level `n` given the optimized parameters of the earlier levels.
pub fn train_sequential<L, F>(
    n_levels: usize,
    theta0: &[ParamVector],
    mut level_loss: F,
    cfg: &TrainConfig,
) -> Result<SequentialResult>
where
    L: SampleLoss,
    F: FnMut(usize, &[Vec<f64>]) -> Result<L>,
{
    if n_levels == 0 || theta0.len() != n_levels {
        return Err(Error::InvalidArgument(format!("expected {n_levels} level parameter vectors")));
    }
    let mut frozen: Vec<Vec<f64>> = Vec::with_capacity(n_levels);
    let mut levels = Vec::with_capacity(n_levels);
    for (n, start) in theta0.iter().enumerate() {
        let loss = level_loss(n, &frozen)?;
        let level_cfg = TrainConfig { seed: cfg.seed.wrapping_add(n as u64), ..cfg.clone() };
        let r = minibatch_sgd(&loss, start, &level_cfg)?;
        frozen.push(r.theta_star.values.clone());
        levels.push(r);
    }
    Ok(SequentialResult { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_bdf::{decay_error, loss_logistic};
    use approx::assert_abs_diff_eq;

    fn one(v: f64, label: &str) -> ParamVector {
        ParamVector::new(vec![v], vec![label.to_string()]).unwrap()
    }

    #[test]
    fn loss_lp_examples() {
        let a = vec![vec![1.0, 2.0]];
        assert_eq!(loss_lp(&a, &a, 2, 0.05).unwrap(), 0.0);
        let e = loss_lp(&[vec![1.0, 1.0]], &[vec![0.0, 0.0]], 2, 0.05).unwrap();
        assert_abs_diff_eq!(e, 0.1, epsilon = 1e-15);
        let e = loss_lp(&[vec![0.5, -0.5]], &[vec![0.0, 0.0]], 1, 0.1).unwrap();
        assert_abs_diff_eq!(e, 0.1, epsilon = 1e-15);
        assert!(loss_lp(&[vec![1.0]], &[vec![1.0, 2.0]], 1, 1.0).is_err());
    }

    #[test]
    fn param_vector_invariants() {
        assert!(ParamVector::new(vec![21.0], vec!["g".into()]).is_err());
        assert!(ParamVector::new(vec![1.0, 2.0], vec!["g".into(), "g".into()]).is_err());
        let p = ParamVector::new(vec![20.0, 0.0], vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(p.active_bounds(), vec![0]);
    }

    #[test]
    fn fd_gradient_examples() {
        let g = grad_fd(&|x: &[f64]| x[0] * x[0], &one(3.0, "t"), 1e-6).unwrap();
        assert_abs_diff_eq!(g[0], 6.0, epsilon = 1e-6);
        let g = grad_fd(&|x: &[f64]| x[0].abs(), &one(1.0, "t"), 1e-6).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-6);
        let at_bound = grad_fd(&|x: &[f64]| x[0] * x[0], &one(20.0, "t"), 1e-6).unwrap();
        assert!((at_bound[0] - 40.0).abs() < 1e-3);
        let err = grad_fd(&|x: &[f64]| if x[0] > 3.0 { f64::NAN } else { x[0] }, &one(3.0, "g^1"), 1e-6);
        assert!(matches!(err, Err(Error::GradientFailure { index: 0, ref label }) if label == "g^1"));
    }

    /// d/dg |U_2(g) - e^{-2cΔt}|² with U_2 = ((1+2g)U_1 - g U_0) / (1 + g + cΔt).
    fn decay_loss_derivative(c: f64, dt: f64, g: f64) -> f64 {
        let u1 = (-c * dt).exp();
        let target = (-2.0 * c * dt).exp();
        let den = 1.0 + g + c * dt;
        let num = (1.0 + 2.0 * g) * u1 - g;
        let u2 = num / den;
        let du2 = ((2.0 * u1 - 1.0) * den - num) / (den * den);
        2.0 * (u2 - target) * du2
    }

    #[test]
    fn fd_gradient_matches_decay_closed_form() {
        let loss = |x: &[f64]| decay_error(1.0, 0.5, 1.0, x[0]).unwrap().powi(2);
        let exact = decay_loss_derivative(1.0, 0.5, 0.5);
        let g = grad_fd(&loss, &one(0.5, "g"), 1e-6).unwrap()[0];
        assert!((g / exact - 1.0).abs() < 1e-5);

        // Central differences converge at second order in the step.
        let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&h| (grad_fd(&loss, &one(0.5, "g"), h).unwrap()[0] - exact).abs())
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8);
        }
    }

    #[test]
    fn descent_on_quadratic_and_decay() {
        let cfg = TrainConfig { grad_tol: 1e-10, ..TrainConfig::default() };
        let r = steepest_descent(&|x: &[f64]| (x[0] - 2.0).powi(2), &one(0.0, "t"), &cfg).unwrap();
        assert_abs_diff_eq!(r.theta_star.values[0], 2.0, epsilon = 1e-6);
        assert!(r.final_loss() <= r.initial_loss);

        let decay = |x: &[f64]| decay_error(1.0, 0.5, 1.0, x[0]).map(|e| e * e).unwrap_or(f64::INFINITY);
        let r = steepest_descent(&decay, &one(0.5, "g"), &cfg).unwrap();
        assert_abs_diff_eq!(r.theta_star.values[0], 0.3534, epsilon = 1e-3);

        let train: Vec<f64> = (0..10).map(|i| 0.2 * i as f64).collect();
        let logistic = |x: &[f64]| penalized(loss_logistic(x[0], &train, 5.0));
        let r = steepest_descent(&logistic, &one(0.5, "g"), &cfg).unwrap();
        assert!((0.0..=0.1).contains(&r.theta_star.values[0]));
    }

    #[test]
    fn descent_stops_on_bound() {
        let cfg = TrainConfig::default();
        let r = steepest_descent(&|x: &[f64]| (-x[0]).exp(), &one(0.0, "t"), &cfg).unwrap();
        assert_eq!(r.termination, Termination::BoundHit);
        assert_eq!(r.theta_star.values[0], 20.0);
        assert!(r.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn invalid_start_and_batch() {
        let cfg = TrainConfig::default();
        assert!(matches!(
            steepest_descent(&|_: &[f64]| f64::NAN, &one(0.0, "t"), &cfg),
            Err(Error::InvalidStart(_))
        ));
        let big = TrainConfig { batch_size: 2, ..cfg };
        assert!(minibatch_sgd(&FnLoss(|x: &[f64]| x[0]), &one(0.0, "t"), &big).is_err());
    }

    struct Quadratics(Vec<f64>);

    impl SampleLoss for Quadratics {
        fn n_samples(&self) -> usize {
            self.0.len()
        }

        fn sample_loss(&self, theta: &[f64], i: usize) -> f64 {
            (theta[0] - self.0[i]).powi(2) + 0.5 * (theta[1] + self.0[i]).powi(2)
        }
    }

    #[test]
    fn full_batch_sgd_is_steepest_descent() {
        let q = Quadratics(vec![0.3, -1.0, 2.0, 0.7]);
        let theta0 = ParamVector::new(vec![5.0, 5.0], vec!["a".into(), "b".into()]).unwrap();
        let cfg = TrainConfig { batch_size: 4, max_iters: 25, lr_growth: 1.0, ..TrainConfig::default() };
        let sgd = minibatch_sgd(&q, &theta0, &cfg).unwrap();
        let sd = steepest_descent(&|x: &[f64]| q.full_loss(x), &theta0, &cfg).unwrap();
        assert_eq!(sgd.loss_history, sd.loss_history);
        assert_eq!(sgd.theta_star.values, sd.theta_star.values);
    }

    #[test]
    fn sgd_descends_and_is_reproducible() {
        let q = Quadratics((0..20).map(|i| (i as f64 * 0.37).sin()).collect());
        let theta0 = ParamVector::new(vec![3.0, -4.0], vec!["a".into(), "b".into()]).unwrap();
        let cfg = TrainConfig { batch_size: 4, seed: 9, ..TrainConfig::default() };
        let a = minibatch_sgd(&q, &theta0, &cfg).unwrap();
        let b = minibatch_sgd(&q, &theta0, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.loss_history.windows(2).all(|w| w[1] <= w[0]));
        let mean: f64 = q.0.iter().sum::<f64>() / 20.0;
        assert_abs_diff_eq!(a.theta_star.values[0], mean, epsilon = 1e-4);
        assert_abs_diff_eq!(a.theta_star.values[1], -mean, epsilon = 1e-4);
    }

    #[test]
    fn sequential_single_level_is_sgd() {
        let q = Quadratics(vec![0.1, 0.4, -0.3, 0.8]);
        let theta0 = ParamVector::new(vec![1.0, 1.0], vec!["a".into(), "b".into()]).unwrap();
        let cfg = TrainConfig { batch_size: 2, seed: 4, ..TrainConfig::default() };
        let seq = train_sequential(1, std::slice::from_ref(&theta0), |_, _| Ok(Quadratics(q.0.clone())), &cfg).unwrap();
        let direct = minibatch_sgd(&q, &theta0, &cfg).unwrap();
        assert_eq!(seq.levels[0], direct);
    }

    #[test]
    fn sequential_levels_see_frozen_parameters() {
        let cfg = TrainConfig::default();
        let starts: Vec<ParamVector> = (0..3).map(|n| one(0.0, &format!("x^{n}"))).collect();
        let r = train_sequential(
            3,
            &starts,
            |_, frozen| {
                let shift = frozen.iter().map(|v| v[0]).sum::<f64>() + 1.0;
                Ok(FnLoss(move |x: &[f64]| (x[0] - shift).powi(2)))
            },
            &cfg,
        )
        .unwrap();
        let theta = r.theta();
        assert_abs_diff_eq!(theta[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(theta[1], 2.0, epsilon = 1e-5);
        assert_abs_diff_eq!(theta[2], 4.0, epsilon = 1e-5);
        assert_eq!(r.labels(), vec!["x^0", "x^1", "x^2"]);
    }
}
