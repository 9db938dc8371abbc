//! Generalized three-point BDF scheme
//!
//! ```text
//! (1 + g) U_{n+2} - (1 + 2g) U_{n+1} + g U_n = Δt F(U_{n+2})
//! ```
//!
//! with one free parameter `g` per time level. `g = 0` is backward Euler,
//! `g = 0.5` is BDF2. The implicit equation is solved by Newton iteration
//! (a single direct solve when `F` is linear).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Max-norm residual accepted by the Newton solve (scaled by `max(1, |rhs|)`).
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITERS: usize = 50;

/// Time step of the oscillator experiment.
pub const OSCILLATOR_DT: f64 = 1.0 / 3.0;
/// Time step of the logistic experiment.
pub const LOGISTIC_DT: f64 = 0.5;

/// Autonomous right-hand side `u' = F(u)` with its Jacobian.
pub trait OdeProblem {
    fn dim(&self) -> usize;
    fn rhs(&self, u: &[f64]) -> Vec<f64>;
    fn jacobian(&self, u: &[f64]) -> DMatrix<f64>;
    fn is_linear(&self) -> bool {
        false
    }
}

/// `u' = -c u`.
#[derive(Clone, Copy, Debug)]
pub struct Decay {
    pub c: f64,
}

impl OdeProblem for Decay {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, u: &[f64]) -> Vec<f64> {
        vec![-self.c * u[0]]
    }
    fn jacobian(&self, _u: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -self.c)
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `u' = -c v, v' = c u`.
#[derive(Clone, Copy, Debug)]
pub struct Oscillator {
    pub c: f64,
}

impl OdeProblem for Oscillator {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, u: &[f64]) -> Vec<f64> {
        vec![-self.c * u[1], self.c * u[0]]
    }
    fn jacobian(&self, _u: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -self.c, self.c, 0.0])
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `u' = c u (1 - u)`.
#[derive(Clone, Copy, Debug)]
pub struct Logistic {
    pub c: f64,
}

impl OdeProblem for Logistic {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, u: &[f64]) -> Vec<f64> {
        vec![self.c * u[0] * (1.0 - u[0])]
    }
    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.c * (1.0 - 2.0 * u[0]))
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Advances the three-point scheme one level: returns `U_{n+2}` from
/// `U_n`, `U_{n+1}`. Newton starts from `U_{n+1}`.
pub fn bdf_g_step<P: OdeProblem + ?Sized>(
    u_n: &[f64],
    u_np1: &[f64],
    g: f64,
    dt: f64,
    problem: &P,
) -> Result<Vec<f64>> {
    let d = problem.dim();
    if u_n.len() != d || u_np1.len() != d {
        return Err(Error::InvalidArgument(format!("state dimension must be {d}")));
    }
    if !(g.is_finite() && dt.is_finite()) || u_n.iter().chain(u_np1).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input to BDF step".into()));
    }
    let rhs: Vec<f64> = u_n.iter().zip(u_np1).map(|(a, b)| (1.0 + 2.0 * g) * b - g * a).collect();
    let tol = NEWTON_TOL * max_norm(&rhs).max(1.0);

    let residual = |u: &[f64]| -> Vec<f64> {
        let f = problem.rhs(u);
        (0..d).map(|k| (1.0 + g) * u[k] - dt * f[k] - rhs[k]).collect()
    };

    let mut u = u_np1.to_vec();
    let mut r = residual(&u);
    for _ in 0..NEWTON_MAX_ITERS {
        if max_norm(&r) <= tol {
            return Ok(u);
        }
        let jac = DMatrix::identity(d, d) * (1.0 + g) - problem.jacobian(&u) * dt;
        let delta = linalg::solve(jac, &DVector::from_iterator(d, r.iter().map(|v| -v)))?;
        for k in 0..d {
            u[k] += delta[k];
        }
        r = residual(&u);
        if problem.is_linear() && max_norm(&r) <= tol {
            return Ok(u);
        }
    }
    let res = max_norm(&r);
    if res <= tol {
        Ok(u)
    } else {
        Err(Error::NewtonFailure { iterations: NEWTON_MAX_ITERS, residual: res })
    }
}

pub fn exact_decay(u0: f64, c: f64, t: f64) -> f64 {
    u0 * (-c * t).exp()
}

pub fn exact_oscillator(u0: f64, c: f64, t: f64) -> (f64, f64) {
    (u0 * (c * t).cos(), u0 * (c * t).sin())
}

pub fn exact_logistic(u0: f64, c: f64, t: f64) -> Result<f64> {
    if u0 < 0.0 {
        return Err(Error::Domain(format!("logistic initial value {u0} < 0")));
    }
    let denom = u0 + (1.0 - u0) * (-c * t).exp();
    let u = u0 / denom;
    if denom == 0.0 || !u.is_finite() {
        return Err(Error::Domain(format!("logistic solution undefined for u0={u0}, c={c}, t={t}")));
    }
    Ok(u)
}

/// Closed-form second level of the scheme for `u' = -c u` started from
/// the exact values `U_0 = u0`, `U_1 = u0 e^{-c Δt}`.
pub fn decay_second_level(c: f64, dt: f64, u0: f64, g: f64) -> Result<f64> {
    let denom = 1.0 + g + c * dt;
    if denom.abs() < 1e-14 {
        return Err(Error::SingularParameter { g });
    }
    let u1 = exact_decay(u0, c, dt);
    Ok(((1.0 + 2.0 * g) * u1 - g * u0) / denom)
}

/// Signed error of the second level against the exact solution.
pub fn decay_error(c: f64, dt: f64, u0: f64, g: f64) -> Result<f64> {
    Ok(decay_second_level(c, dt, u0, g)? - exact_decay(u0, c, 2.0 * dt))
}

/// Squared local error `E_2(g)` on every point of `g_grid`.
pub fn loss_scan_decay(c: f64, dt: f64, u0: f64, g_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    g_grid.iter().map(|&g| decay_error(c, dt, u0, g).map(|e| (g, e * e))).collect()
}

/// Second and third levels `(U_2, U_3)` of the oscillator run from
/// `U_0 = (u0, 0)` and the exact `U_1`.
pub fn oscillator_levels(u0: f64, c: f64, g2: f64, g3: f64) -> Result<[[f64; 2]; 2]> {
    let p = Oscillator { c };
    let dt = OSCILLATOR_DT;
    let u_0 = [u0, 0.0];
    let (a, b) = exact_oscillator(u0, c, dt);
    let u_1 = [a, b];
    let u_2 = bdf_g_step(&u_0, &u_1, g2, dt, &p)?;
    let u_3 = bdf_g_step(&u_1, &u_2, g3, dt, &p)?;
    Ok([[u_2[0], u_2[1]], [u_3[0], u_3[1]]])
}

/// `½ Σ_{n=2,3} |U^n - u(t_n)|²` for one initial value.
pub fn oscillator_sample_loss(g2: f64, g3: f64, u0: f64, c: f64) -> Result<f64> {
    let levels = oscillator_levels(u0, c, g2, g3)?;
    let mut sum = 0.0;
    for (k, u) in levels.iter().enumerate() {
        let (eu, ev) = exact_oscillator(u0, c, (k + 2) as f64 * OSCILLATOR_DT);
        sum += (u[0] - eu).powi(2) + (u[1] - ev).powi(2);
    }
    Ok(0.5 * sum)
}

pub fn loss_oscillator(g2: f64, g3: f64, train: &[f64], c: f64) -> Result<f64> {
    train.iter().map(|&u0| oscillator_sample_loss(g2, g3, u0, c)).sum()
}

/// `U_2` of the logistic run with `U_1` taken from the exact solution.
pub fn logistic_second_level(u0: f64, c: f64, g2: f64) -> Result<f64> {
    let u1 = exact_logistic(u0, c, LOGISTIC_DT)?;
    Ok(bdf_g_step(&[u0], &[u1], g2, LOGISTIC_DT, &Logistic { c })?[0])
}

/// `|U_2 - u(1)|` for one initial value.
pub fn logistic_sample_loss(g2: f64, u0: f64, c: f64) -> Result<f64> {
    Ok((logistic_second_level(u0, c, g2)? - exact_logistic(u0, c, 2.0 * LOGISTIC_DT)?).abs())
}

pub fn loss_logistic(g2: f64, train: &[f64], c: f64) -> Result<f64> {
    train.iter().map(|&u0| logistic_sample_loss(g2, u0, c)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Zero;
    impl OdeProblem for Zero {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _u: &[f64]) -> Vec<f64> {
            vec![0.0, 0.0]
        }
        fn jacobian(&self, _u: &[f64]) -> DMatrix<f64> {
            DMatrix::zeros(2, 2)
        }
    }

    #[test]
    fn constant_solution_is_preserved() {
        for g in [-3.0, 0.0, 0.5, 7.0] {
            let u = bdf_g_step(&[2.0, -1.0], &[2.0, -1.0], g, 0.1, &Zero).unwrap();
            assert_abs_diff_eq!(u[0], 2.0, epsilon = 1e-14);
            assert_abs_diff_eq!(u[1], -1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn decay_step_values() {
        let p = Decay { c: 1.0 };
        let u1 = (-0.5f64).exp();
        let u2 = bdf_g_step(&[1.0], &[u1], 0.5, 0.5, &p).unwrap()[0];
        assert_abs_diff_eq!(u2, (2.0 * u1 - 0.5) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(u2, 0.356531, epsilon = 1e-6);
        let be = bdf_g_step(&[1.0], &[u1], 0.0, 0.5, &p).unwrap()[0];
        assert_abs_diff_eq!(be, 0.404354, epsilon = 1e-6);
        assert_abs_diff_eq!(decay_second_level(1.0, 0.5, 1.0, 0.5).unwrap(), u2, epsilon = 1e-15);
    }

    #[test]
    fn exact_solutions() {
        assert_eq!(exact_decay(1.0, 1.0, 0.0), 1.0);
        assert_abs_diff_eq!(exact_decay(1.0, 1.0, 1.0), 0.367879, epsilon = 1e-6);
        assert_abs_diff_eq!(exact_decay(2.0, 5.0, 0.5), 0.164170, epsilon = 1e-6);

        assert_eq!(exact_oscillator(3.0, 7.0, 0.0), (3.0, 0.0));
        let (u, v) = exact_oscillator(1.0, 100.0, 2.0 * std::f64::consts::PI / 100.0);
        assert_abs_diff_eq!(u, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-13);
        let (u, v) = exact_oscillator(1.0, 1.0, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(u, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);

        assert_eq!(exact_logistic(1.0, 3.0, 2.0).unwrap(), 1.0);
        assert_eq!(exact_logistic(0.0, 3.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(exact_logistic(0.5, 1.0, 1.0).unwrap(), 0.731059, epsilon = 1e-6);
        assert!(matches!(exact_logistic(-0.5, 1.0, 1.0), Err(Error::Domain(_))));
    }

    fn g_grid() -> Vec<f64> {
        (-25..=100).map(|k| k as f64 * 0.01).collect()
    }

    fn argmin(scan: &[(f64, f64)]) -> f64 {
        scan.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0
    }

    #[test]
    fn decay_scan_reproduces_reduction_factors() {
        for (c, g_star, factor) in [(1.0, 0.35, 39.97), (5.0, 0.07, 677.95)] {
            let scan = loss_scan_decay(c, 0.5, 1.0, &g_grid()).unwrap();
            let g = argmin(&scan);
            assert_abs_diff_eq!(g, g_star, epsilon = 1e-9);
            let ratio = decay_error(c, 0.5, 1.0, 0.5).unwrap().abs() / decay_error(c, 0.5, 1.0, g).unwrap().abs();
            assert!((ratio / factor - 1.0).abs() < 0.02, "c={c}: ratio {ratio}");
        }
    }

    #[test]
    fn decay_continuous_minimizer() {
        // U_2(g) = target is linear in g.
        for (c, expected) in [(1.0, 0.35340), (5.0, 0.069433)] {
            let dt: f64 = 0.5;
            let u1 = (-c * dt).exp();
            let target = (-2.0 * c * dt).exp();
            let g = (target * (1.0 + c * dt) - u1) / (2.0 * u1 - 1.0 - target);
            assert_abs_diff_eq!(g, expected, epsilon = 1e-5);
            assert!(decay_error(c, dt, 1.0, g).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn decay_scan_pole_and_convexity() {
        assert!(matches!(loss_scan_decay(1.0, 0.5, 1.0, &[-1.5]), Err(Error::SingularParameter { .. })));
        for c in [1.0, 5.0] {
            let scan = loss_scan_decay(c, 0.5, 1.0, &g_grid()).unwrap();
            for w in scan.windows(3) {
                assert!(w[0].1 - 2.0 * w[1].1 + w[2].1 >= -1e-12);
            }
        }
    }

    fn backward_euler_osc(u: [f64; 2], c: f64, dt: f64) -> [f64; 2] {
        // [1, c dt; -c dt, 1] x = u
        let a = c * dt;
        let det = 1.0 + a * a;
        [(u[0] - a * u[1]) / det, (u[1] + a * u[0]) / det]
    }

    fn bdf2_osc(u0: [f64; 2], u1: [f64; 2], c: f64, dt: f64) -> [f64; 2] {
        // 1.5 U - dt F(U) = 2 U1 - 0.5 U0
        let r = [2.0 * u1[0] - 0.5 * u0[0], 2.0 * u1[1] - 0.5 * u0[1]];
        let a = c * dt;
        let det = 2.25 + a * a;
        [(1.5 * r[0] - a * r[1]) / det, (1.5 * r[1] + a * r[0]) / det]
    }

    #[test]
    fn named_members_match_independent_schemes() {
        let p = Oscillator { c: 10.0 };
        let (u0, u1) = ([0.7, 0.0], [0.3, 0.4]);
        let be = bdf_g_step(&u0, &u1, 0.0, 0.1, &p).unwrap();
        let be_ref = backward_euler_osc(u1, 10.0, 0.1);
        let bdf2 = bdf_g_step(&u0, &u1, 0.5, 0.1, &p).unwrap();
        let bdf2_ref = bdf2_osc(u0, u1, 10.0, 0.1);
        for k in 0..2 {
            assert_abs_diff_eq!(be[k], be_ref[k], epsilon = 1e-12);
            assert_abs_diff_eq!(bdf2[k], bdf2_ref[k], epsilon = 1e-12);
        }

        // Logistic backward Euler: (1 + c dt U - c dt) U = U1, positive root.
        let (c, dt, u1) = (3.0, 0.2, 0.4);
        let be = bdf_g_step(&[0.1], &[u1], 0.0, dt, &Logistic { c }).unwrap()[0];
        let (qa, qb) = (c * dt, 1.0 - c * dt);
        let root = (-qb + (qb * qb + 4.0 * qa * u1).sqrt()) / (2.0 * qa);
        assert_abs_diff_eq!(be, root, epsilon = 1e-12);
    }

    #[test]
    fn newton_residual_is_small() {
        let p = Logistic { c: 5.0 };
        for (u0, u1, g) in [(0.1, 0.4, 0.5), (2.0, 1.3, 0.03), (4.0, 1.1, -0.2)] {
            let u = bdf_g_step(&[u0], &[u1], g, 0.5, &p).unwrap()[0];
            let res = (1.0 + g) * u - 0.5 * 5.0 * u * (1.0 - u) - ((1.0 + 2.0 * g) * u1 - g * u0);
            assert!(res.abs() < 1e-12);
        }
    }

    fn decay_global_error(g: f64, n: usize) -> f64 {
        let p = Decay { c: 1.0 };
        let dt = 1.0 / n as f64;
        let (mut a, mut b) = (vec![1.0], vec![exact_decay(1.0, 1.0, dt)]);
        for _ in 2..=n {
            let next = bdf_g_step(&a, &b, g, dt, &p).unwrap();
            a = std::mem::replace(&mut b, next);
        }
        (b[0] - exact_decay(1.0, 1.0, 1.0)).abs()
    }

    #[test]
    fn convergence_orders() {
        let ns = [20usize, 40, 80, 160, 320];
        let slope = |g: f64| {
            let e: Vec<f64> = ns.iter().map(|&n| decay_global_error(g, n)).collect();
            let xs: Vec<f64> = ns.iter().map(|&n| (1.0 / n as f64).ln()).collect();
            let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
            let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
            let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            num / den
        };
        let s2 = slope(0.5);
        assert!((1.8..=2.2).contains(&s2), "BDF2 slope {s2}");
        let s1 = slope(0.2);
        assert!((0.8..=1.2).contains(&s1), "generic g slope {s1}");
    }

    #[test]
    fn oscillator_loss_matches_straight_line_oracle() {
        assert_eq!(loss_oscillator(0.5, 0.5, &[], 1.0).unwrap(), 0.0);

        // Direct evaluation: M U = r with M = [(1+g), c dt; -c dt, (1+g)].
        let (u0, c, g, dt) = (1.0f64, 1.0f64, 0.5f64, 1.0f64 / 3.0);
        let solve = |r: [f64; 2]| {
            let (d, a) = (1.0 + g, c * dt);
            let det = d * d + a * a;
            [(d * r[0] - a * r[1]) / det, (d * r[1] + a * r[0]) / det]
        };
        let z0 = [u0, 0.0];
        let z1 = [u0 * (c * dt).cos(), u0 * (c * dt).sin()];
        let z2 = solve([(1.0 + 2.0 * g) * z1[0] - g * z0[0], (1.0 + 2.0 * g) * z1[1] - g * z0[1]]);
        let z3 = solve([(1.0 + 2.0 * g) * z2[0] - g * z1[0], (1.0 + 2.0 * g) * z2[1] - g * z1[1]]);
        let e = |z: [f64; 2], t: f64| (z[0] - u0 * (c * t).cos()).powi(2) + (z[1] - u0 * (c * t).sin()).powi(2);
        let oracle = 0.5 * (e(z2, 2.0 * dt) + e(z3, 3.0 * dt));
        assert_abs_diff_eq!(loss_oscillator(g, g, &[u0], c).unwrap(), oracle, epsilon = 1e-15);
    }

    #[test]
    fn logistic_equilibrium_has_zero_loss() {
        for g in [-0.3, 0.0, 0.5, 2.0] {
            assert!(loss_logistic(g, &[1.0, 1.0, 0.0], 5.0).unwrap() < 1e-13);
        }
    }
}
