//! Generalized two-level implicit finite-difference schemes for the heat
//! equation `u_t = c u_xx` (five-point stencil, zero Dirichlet data) and
//! linear advection `u_t + c u_x = 0` (three-point stencil, periodic).
//!
//! The free stencil entries are constrained so that every parameter choice
//! is consistent with the PDE; the remaining entries follow by elimination.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Layout, ScalarField};
use crate::linalg;

/// Five-point stencil `(b_{-2}, .., b_2)` from the two free entries.
///
/// The result satisfies `Σ b_k = 0`, `Σ k b_k = 0` and `Σ k²/2 b_k = 1`.
pub fn heat_stencil(b_m2: f64, b_m1: f64) -> [f64; 5] {
    [
        b_m2,
        b_m1,
        1.0 - 3.0 * b_m1 - 6.0 * b_m2,
        3.0 * b_m1 + 8.0 * b_m2 - 2.0,
        1.0 - b_m1 - 3.0 * b_m2,
    ]
}

/// Three-point stencil `(b_{-1}, b_0, b_1)` with `Σ b_k = 0`, `b_1 - b_{-1} = 1`.
///
/// The stencil enters as `U_t + (c/Δx) Σ b_k U_{j+k} = 0`, so `b_{-1} = -1`
/// is upwind and `b_{-1} = -1/2` is the central difference.
pub fn adv_stencil(b_m1: f64) -> [f64; 3] {
    [b_m1, -1.0 - 2.0 * b_m1, 1.0 + b_m1]
}

/// Parameters of one heat time level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatLevelParams {
    /// Weight of the old time level (`0` backward Euler, `0.5` Crank-Nicolson, `1` explicit).
    pub g: f64,
    pub b_m2: f64,
    pub b_m1: f64,
}

impl HeatLevelParams {
    pub fn stencil(&self) -> [f64; 5] {
        heat_stencil(self.b_m2, self.b_m1)
    }

    pub fn from_slice(theta: &[f64]) -> Self {
        HeatLevelParams { g: theta[0], b_m2: theta[1], b_m1: theta[2] }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.g, self.b_m2, self.b_m1]
    }
}

/// Parameters of one advection time level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvLevelParams {
    pub g: f64,
    pub b_m1: f64,
}

impl AdvLevelParams {
    pub fn stencil(&self) -> [f64; 3] {
        adv_stencil(self.b_m1)
    }

    pub fn from_slice(theta: &[f64]) -> Self {
        AdvLevelParams { g: theta[0], b_m1: theta[1] }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.g, self.b_m1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedScheme {
    S1,
    S2,
    S3,
    S4,
}

impl NamedScheme {
    pub const ALL: [NamedScheme; 4] = [NamedScheme::S1, NamedScheme::S2, NamedScheme::S3, NamedScheme::S4];

    pub fn label(self) -> &'static str {
        match self {
            NamedScheme::S1 => "S1",
            NamedScheme::S2 => "S2",
            NamedScheme::S3 => "S3",
            NamedScheme::S4 => "S4",
        }
    }

    /// S1/S3 are backward Euler in time, S2/S4 Crank-Nicolson.
    fn g(self) -> f64 {
        match self {
            NamedScheme::S1 | NamedScheme::S3 => 0.0,
            NamedScheme::S2 | NamedScheme::S4 => 0.5,
        }
    }

    /// Second-order (S1, S2) or fourth-order (S3, S4) central stencil.
    pub fn heat(self) -> HeatLevelParams {
        let (b_m2, b_m1) = match self {
            NamedScheme::S1 | NamedScheme::S2 => (0.0, 1.0),
            NamedScheme::S3 | NamedScheme::S4 => (-1.0 / 12.0, 4.0 / 3.0),
        };
        HeatLevelParams { g: self.g(), b_m2, b_m1 }
    }

    /// Upwind (S1, S2) or central (S3, S4) stencil.
    pub fn advection(self) -> AdvLevelParams {
        let b_m1 = match self {
            NamedScheme::S1 | NamedScheme::S2 => -1.0,
            NamedScheme::S3 | NamedScheme::S4 => -0.5,
        };
        AdvLevelParams { g: self.g(), b_m1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equation {
    Heat,
    Advection,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LevelParams {
    Heat(HeatLevelParams),
    Advection(AdvLevelParams),
}

pub fn named_params(scheme: NamedScheme, equation: Equation) -> LevelParams {
    match equation {
        Equation::Heat => LevelParams::Heat(scheme.heat()),
        Equation::Advection => LevelParams::Advection(scheme.advection()),
    }
}

/// Matrix of the stencil `stencil` (centered, offsets `-r..=r`) on `n`
/// unknowns, either truncated (zero ghosts) or wrapped.
fn stencil_matrix(stencil: &[f64], n: usize, periodic: bool) -> DMatrix<f64> {
    let r = (stencil.len() / 2) as isize;
    let mut b = DMatrix::zeros(n, n);
    for j in 0..n as isize {
        for (k, &bk) in (-r..=r).zip(stencil) {
            let col = j + k;
            if periodic {
                b[(j as usize, col.rem_euclid(n as isize) as usize)] += bk;
            } else if (0..n as isize).contains(&col) {
                b[(j as usize, col as usize)] += bk;
            }
        }
    }
    b
}

/// One step of the generalized five-point heat scheme
///
/// ```text
/// [I - μ(1-g) B] U^{n+1} = [I + μ g B] U^n,   μ = c Δt / Δx²
/// ```
///
/// with zero ghost values outside the interior nodes.
pub fn heat_step(u: &ScalarField, p: &HeatLevelParams, c: f64, dt: f64) -> Result<ScalarField> {
    let grid = &u.grid;
    if grid.layout() != Layout::NodeCentered || grid.boundary() != Boundary::DirichletZero {
        return Err(Error::InvalidArgument("heat scheme needs a node-centered Dirichlet grid".into()));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusion coefficient must be positive, got {c}")));
    }
    let n = grid.n();
    let mu = c * dt / grid.spacing().powi(2);
    let b = stencil_matrix(&p.stencil(), n, false);
    let lhs = DMatrix::identity(n, n) - &b * (mu * (1.0 - p.g));
    let rhs = (DMatrix::identity(n, n) + &b * (mu * p.g)) * DVector::from_column_slice(&u.values);
    let x = linalg::solve(lhs, &rhs)?;
    ScalarField::new(grid.clone(), x.as_slice().to_vec())
}

/// One step of the generalized three-point advection scheme
///
/// ```text
/// [I + ν(1-g) B] U^{n+1} = [I - ν g B] U^n,   ν = c Δt / Δx
/// ```
///
/// on a periodic grid.
pub fn adv_step(u: &ScalarField, p: &AdvLevelParams, c: f64, dt: f64) -> Result<ScalarField> {
    let grid = &u.grid;
    if grid.boundary() != Boundary::Periodic {
        return Err(Error::InvalidArgument("advection scheme needs a periodic grid".into()));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("wave speed must be non-negative, got {c}")));
    }
    let n = grid.n();
    let nu = c * dt / grid.spacing();
    let b = stencil_matrix(&p.stencil(), n, true);
    let lhs = DMatrix::identity(n, n) + &b * (nu * (1.0 - p.g));
    let rhs = (DMatrix::identity(n, n) - &b * (nu * p.g)) * DVector::from_column_slice(&u.values);
    let x = linalg::solve(lhs, &rhs)?;
    ScalarField::new(grid.clone(), x.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceGrid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn heat_grid() -> SpaceGrid {
        SpaceGrid::unit(10, Layout::NodeCentered, Boundary::DirichletZero).unwrap()
    }

    fn periodic_grid(n: usize) -> SpaceGrid {
        SpaceGrid::unit(n, Layout::NodeCentered, Boundary::Periodic).unwrap()
    }

    #[test]
    fn heat_stencil_examples() {
        assert_eq!(heat_stencil(0.0, 1.0), [0.0, 1.0, -2.0, 1.0, 0.0]);
        let s = heat_stencil(-1.0 / 12.0, 4.0 / 3.0);
        let expected = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in s.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(heat_stencil(0.0, 0.0), [0.0, 0.0, 1.0, -2.0, 1.0]);
    }

    #[test]
    fn named_parameters() {
        let s2 = NamedScheme::S2.heat();
        assert_eq!((s2.g, s2.stencil()), (0.5, [0.0, 1.0, -2.0, 1.0, 0.0]));
        assert_eq!(NamedScheme::S4.advection().stencil(), [-0.5, 0.0, 0.5]);
        assert_eq!(NamedScheme::S1.advection().stencil(), [-1.0, 1.0, 0.0]);
        assert_eq!(named_params(NamedScheme::S3, Equation::Heat), LevelParams::Heat(NamedScheme::S3.heat()));
    }

    #[test]
    fn heat_zero_is_fixed_point() {
        let u = ScalarField::constant(heat_grid(), 0.0);
        let out = heat_step(&u, &NamedScheme::S4.heat(), 1.0, 0.05).unwrap();
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heat_explicit_limit() {
        let grid = heat_grid();
        let u = grid.sample(|x| (PI * x).sin() + 0.3 * (3.0 * PI * x).sin());
        let p = HeatLevelParams { g: 1.0, b_m2: -0.2, b_m1: 1.3 };
        let (c, dt) = (0.1, 0.01);
        let out = heat_step(&u, &p, c, dt).unwrap();
        let ext = u.ghost_extend(2).unwrap();
        let st = p.stencil();
        let mu = c * dt / grid.spacing().powi(2);
        for j in 0..10 {
            let lap: f64 = (0..5).map(|k| st[k] * ext[j + k]).sum();
            assert_abs_diff_eq!(out.values[j], u.values[j] + mu * lap, epsilon = 1e-14);
        }
    }

    /// Thomas algorithm for `a x_{j-1} + b x_j + c x_{j+1} = d_j`.
    fn thomas(a: f64, b: f64, c: f64, d: &[f64]) -> Vec<f64> {
        let n = d.len();
        let (mut cp, mut dp) = (vec![0.0; n], vec![0.0; n]);
        cp[0] = c / b;
        dp[0] = d[0] / b;
        for j in 1..n {
            let m = b - a * cp[j - 1];
            cp[j] = c / m;
            dp[j] = (d[j] - a * dp[j - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for j in (0..n - 1).rev() {
            x[j] = dp[j] - cp[j] * x[j + 1];
        }
        x
    }

    #[test]
    fn crank_nicolson_matches_independent_assembly() {
        let grid = heat_grid();
        let u = grid.sample(|x| (PI * x).sin());
        let (c, dt) = (1.0, 0.05);
        let out = heat_step(&u, &NamedScheme::S2.heat(), c, dt).unwrap();
        let r = c * dt / grid.spacing().powi(2);
        let ext = u.ghost_extend(1).unwrap();
        let d: Vec<f64> = (0..10)
            .map(|j| u.values[j] + 0.5 * r * (ext[j] - 2.0 * ext[j + 1] + ext[j + 2]))
            .collect();
        let oracle = thomas(-0.5 * r, 1.0 + r, -0.5 * r, &d);
        for (a, b) in out.values.iter().zip(&oracle) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn heat_rejects_wrong_grid() {
        let u = ScalarField::constant(periodic_grid(10), 1.0);
        assert!(heat_step(&u, &NamedScheme::S1.heat(), 1.0, 0.1).is_err());
        let u = ScalarField::constant(heat_grid(), 1.0);
        assert!(heat_step(&u, &NamedScheme::S1.heat(), 0.0, 0.1).is_err());
    }

    #[test]
    fn heat_singular_system_is_reported() {
        // g = 0, b = (0, 1): I - μ B singular when μ hits an inverse eigenvalue.
        let grid = SpaceGrid::unit(1, Layout::NodeCentered, Boundary::DirichletZero).unwrap();
        let u = ScalarField::new(grid.clone(), vec![1.0]).unwrap();
        // Single node: B = [b_0] = [1 - 3 b_{-1} - 6 b_{-2}]; choose b_0 = 1 and μ = 1.
        let p = HeatLevelParams { g: 0.0, b_m2: 0.0, b_m1: 0.0 };
        let dt = grid.spacing().powi(2);
        assert!(matches!(heat_step(&u, &p, 1.0, dt), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn advection_constant_and_zero_speed() {
        let grid = periodic_grid(10);
        let k = ScalarField::constant(grid.clone(), 3.5);
        for s in NamedScheme::ALL {
            let out = adv_step(&k, &s.advection(), 2.0, 0.5).unwrap();
            assert!(out.values.iter().all(|v| (v - 3.5).abs() < 1e-13));
        }
        let u = grid.sample(|x| (2.0 * PI * x).sin() + x);
        let out = adv_step(&u, &AdvLevelParams { g: 0.3, b_m1: 1.7 }, 0.0, 0.5).unwrap();
        assert_eq!(out.values, u.values);
    }

    #[test]
    fn implicit_upwind_matches_fixed_point_oracle() {
        let grid = periodic_grid(10);
        let u = grid.sample(|x| (-30.0 * (x - 0.4).powi(2)).exp());
        let (c, dt) = (0.5, 0.15);
        let nu = c * dt / grid.spacing();
        let out = adv_step(&u, &NamedScheme::S1.advection(), c, dt).unwrap();
        // (1 + ν) U_j - ν U_{j-1} = U^n_j, swept around the circle to convergence.
        let mut x = u.values.clone();
        for _ in 0..4000 {
            for j in 0..10 {
                let left = x[(j + 9) % 10];
                x[j] = (u.values[j] + nu * left) / (1.0 + nu);
            }
        }
        for (a, b) in out.values.iter().zip(&x) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn implicit_upwind_does_not_amplify() {
        let grid = periodic_grid(10);
        let u = grid.sample(|x| if x > 0.3 && x < 0.6 { 1.0 } else { 0.1 * x });
        let mut cur = u.clone();
        let max0 = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..5 {
            cur = adv_step(&cur, &NamedScheme::S1.advection(), 0.5, 0.3).unwrap();
            let m = cur.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(m <= max0 + 1e-12);
        }
    }

    fn moments(st: &[f64]) -> (f64, f64, f64) {
        let r = (st.len() / 2) as isize;
        let mut m = (0.0, 0.0, 0.0);
        for (k, b) in (-r..=r).zip(st) {
            let k = k as f64;
            m.0 += b;
            m.1 += k * b;
            m.2 += 0.5 * k * k * b;
        }
        m
    }

    #[test]
    fn truncation_error_orders() {
        let f = |x: f64| x.exp();
        let f2 = |x: f64| x.exp();
        let order = |b_m2: f64, b_m1: f64, h0: f64| {
            let st = heat_stencil(b_m2, b_m1);
            let x = 0.3;
            let errs: Vec<f64> = (0..5)
                .map(|i| h0 / f64::from(1 << i))
                .map(|h| {
                    let approx: f64 = (-2..=2).zip(st).map(|(k, b)| b * f(x + k as f64 * h)).sum::<f64>() / (h * h);
                    (approx - f2(x)).abs()
                })
                .collect();
            errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
        };
        assert!(order(0.3, 0.7, 0.02) >= 0.95);
        assert!(order(-0.1, 2.0, 0.02) >= 0.95);
        assert!(order(0.0, 1.0, 0.2) >= 1.95);
        assert!(order(-1.0 / 12.0, 4.0 / 3.0, 0.2) >= 1.95);
    }

    proptest! {
        #[test]
        fn stencil_moment_conditions(b_m2 in -20.0f64..20.0, b_m1 in -20.0f64..20.0) {
            let (m0, m1, m2) = moments(&heat_stencil(b_m2, b_m1));
            prop_assert!(m0.abs() < 1e-13 && m1.abs() < 1e-13 && (m2 - 1.0).abs() < 1e-13);
            let a = adv_stencil(b_m1);
            prop_assert!((a[0] + a[1] + a[2]).abs() < 1e-13);
            prop_assert!((a[2] - a[0] - 1.0).abs() < 1e-13);
        }

        #[test]
        fn advection_is_conservative_and_equivariant(
            values in prop::collection::vec(-1.0f64..1.0, 10),
            g in -5.0f64..5.0,
            b_m1 in -3.0f64..1.0,
            shift in 0usize..10,
        ) {
            let grid = periodic_grid(10);
            let p = AdvLevelParams { g, b_m1 };
            let u = ScalarField::new(grid.clone(), values.clone()).unwrap();
            if let Ok(out) = adv_step(&u, &p, 0.5, 0.5) {
                let (s0, s1): (f64, f64) = (values.iter().sum(), out.values.iter().sum());
                prop_assert!((s0 - s1).abs() < 1e-12 * (1.0 + out.values.iter().map(|v| v.abs()).sum::<f64>()));
                let mut shifted = values.clone();
                shifted.rotate_right(shift);
                let out_s = adv_step(&ScalarField::new(grid, shifted).unwrap(), &p, 0.5, 0.5).unwrap();
                let mut expected = out.values.clone();
                expected.rotate_right(shift);
                for (a, b) in out_s.values.iter().zip(&expected) {
                    prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
                }
            }
        }
    }
}
