//! Fine-grid reference solutions and the SSP-RK2 comparison integrator.
//!
//! Every explicit reference run lands exactly on the requested output times
//! by shortening the last step before each of them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_volume::{euler_update, scalar_update, Burgers, EulerGas, Primitive};
use crate::grid::{project_cell_average, project_pointwise, Boundary, Layout, ScalarField, SpaceGrid, SystemField};
use crate::ode_bdf::OdeProblem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    /// Fine unknowns (interior nodes or cells).
    pub fine_n: usize,
    /// Fraction of the largest stable explicit step actually taken.
    pub cfl_safety: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig { fine_n: 1000, cfl_safety: 0.9 }
    }
}

impl ReferenceConfig {
    fn validate(&self) -> Result<()> {
        if self.fine_n == 0 || !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument(format!("invalid reference configuration {self:?}")));
        }
        Ok(())
    }
}

/// Step sizes of at most `dt_max` that reach `t` exactly.
fn schedule(t: f64, dt_max: f64) -> Vec<f64> {
    if t <= 0.0 {
        return Vec::new();
    }
    let full = (t / dt_max * (1.0 + 1e-12)).floor() as usize;
    let mut steps = vec![dt_max; full];
    let rest = t - dt_max * full as f64;
    if rest > 1e-12 * t {
        steps.push(rest);
    }
    steps
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("output times must be non-negative and sorted".into()));
    }
    Ok(())
}

/// Fine Dirichlet grid matching `coarse` on the same interval.
pub fn heat_fine_grid(coarse: &SpaceGrid, cfg: &ReferenceConfig) -> Result<SpaceGrid> {
    SpaceGrid::new(coarse.x_left(), coarse.x_right(), cfg.fine_n, Layout::NodeCentered, Boundary::DirichletZero)
}

/// Forward Euler with the three-point Laplacian, stepped literally.
pub fn heat_fine_stepping(u0: &ScalarField, c: f64, t: f64, cfg: &ReferenceConfig) -> Result<ScalarField> {
    cfg.validate()?;
    let h = u0.grid.spacing();
    let mut u = u0.values.clone();
    let mut next = vec![0.0; u.len()];
    let n = u.len();
    for dt in schedule(t, 0.5 * cfg.cfl_safety * h * h / c) {
        let r = c * dt / (h * h);
        for j in 0..n {
            let l = if j > 0 { u[j - 1] } else { 0.0 };
            let rr = if j + 1 < n { u[j + 1] } else { 0.0 };
            next[j] = u[j] + r * (l - 2.0 * u[j] + rr);
        }
        std::mem::swap(&mut u, &mut next);
    }
    ScalarField::new(u0.grid.clone(), u)
}

/// The fine forward-Euler heat solution at one time, evaluated through the
/// sine eigenvectors of the discrete Laplacian and sampled at the coarse
/// nodes.
///
/// The result equals literal time stepping up to round-off but costs one
/// dense `coarse × fine` product per sample.
#[derive(Clone, Debug)]
pub struct HeatPropagator {
    fine: SpaceGrid,
    coarse: SpaceGrid,
    rows: Vec<Vec<f64>>,
}

impl HeatPropagator {
    pub fn new(c: f64, t: f64, cfg: &ReferenceConfig, coarse: &SpaceGrid) -> Result<Self> {
        cfg.validate()?;
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("diffusion coefficient must be positive, got {c}")));
        }
        let fine = heat_fine_grid(coarse, cfg)?;
        let n = fine.n();
        let h = fine.spacing();
        let theta = PI / (n as f64 + 1.0);
        let steps = schedule(t, 0.5 * cfg.cfl_safety * h * h / c);
        let gains: Vec<f64> = (1..=n)
            .map(|k| {
                let s = (0.5 * k as f64 * theta).sin().powi(2);
                let full = steps.first().map_or(1.0, |&dt| 1.0 - 4.0 * c * dt / (h * h) * s);
                let count = steps.iter().filter(|&&dt| dt == steps[0]).count() as i32;
                let last = match steps.last() {
                    Some(&dt) if dt != steps[0] => 1.0 - 4.0 * c * dt / (h * h) * s,
                    _ => 1.0,
                };
                full.powi(count) * last
            })
            .collect();
        let x0 = fine.x(0);
        let targets: Vec<usize> = coarse
            .points()
            .iter()
            .map(|&x| ((x - x0) / h).round().clamp(0.0, n as f64 - 1.0) as usize)
            .collect();
        // sin(m θ) has period 2(n + 1) in m.
        let period = 2 * (n + 1);
        let table: Vec<f64> = (0..period).map(|m| (m as f64 * theta).sin()).collect();
        let sine = |k: usize, j: usize| table[(k * j) % period];
        let scale = 2.0 / (n as f64 + 1.0);
        let rows = targets
            .iter()
            .map(|&i| {
                let coef: Vec<f64> = (1..=n).map(|k| scale * gains[k - 1] * sine(k, i + 1)).collect();
                (1..=n).map(|j| coef.iter().enumerate().map(|(k, a)| a * sine(k + 1, j)).sum()).collect()
            })
            .collect();
        Ok(HeatPropagator { fine, coarse: coarse.clone(), rows })
    }

    pub fn fine_grid(&self) -> &SpaceGrid {
        &self.fine
    }

    /// Coarse samples of the fine solution started from fine nodal values.
    pub fn apply(&self, u0_fine: &[f64]) -> Result<ScalarField> {
        if u0_fine.len() != self.fine.n() {
            return Err(Error::InvalidArgument(format!("expected {} fine values", self.fine.n())));
        }
        let values = self.rows.iter().map(|r| r.iter().zip(u0_fine).map(|(a, b)| a * b).sum()).collect();
        ScalarField::new(self.coarse.clone(), values)
    }

    pub fn apply_fn(&self, u0: impl Fn(f64) -> f64) -> Result<ScalarField> {
        self.apply(&self.fine.sample(u0).values)
    }
}

/// Heat reference at time `t`, sampled at the coarse nodes.
pub fn heat_reference(
    u0: impl Fn(f64) -> f64,
    c: f64,
    t: f64,
    cfg: &ReferenceConfig,
    coarse: &SpaceGrid,
) -> Result<ScalarField> {
    HeatPropagator::new(c, t, cfg, coarse)?.apply_fn(u0)
}

/// Explicit upwind on a fine periodic grid, returned at every output time.
pub fn advection_fine(u0: &ScalarField, c: f64, times: &[f64], cfg: &ReferenceConfig) -> Result<Vec<ScalarField>> {
    cfg.validate()?;
    check_times(times)?;
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("wave speed must be non-negative, got {c}")));
    }
    let h = u0.grid.spacing();
    let n = u0.values.len();
    let mut u = u0.values.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    for &t in times {
        if c > 0.0 {
            for dt in schedule(t - now, cfg.cfl_safety * h / c) {
                let nu = c * dt / h;
                let prev = u.clone();
                for j in 0..n {
                    u[j] = prev[j] - nu * (prev[j] - prev[(j + n - 1) % n]);
                }
            }
        }
        now = t;
        out.push(ScalarField::new(u0.grid.clone(), u.clone())?);
    }
    Ok(out)
}

/// Advection reference sampled at the coarse nodes for every output time.
pub fn advection_reference(
    u0: impl Fn(f64) -> f64,
    c: f64,
    times: &[f64],
    cfg: &ReferenceConfig,
    coarse: &SpaceGrid,
) -> Result<Vec<ScalarField>> {
    let fine = SpaceGrid::new(coarse.x_left(), coarse.x_right(), cfg.fine_n, Layout::NodeCentered, Boundary::Periodic)?;
    advection_fine(&fine.sample(u0), c, times, cfg)?.iter().map(|f| project_pointwise(f, coarse)).collect()
}

/// Standard Rusanov for Burgers on the fine grid at every output time.
pub fn burgers_fine(u0: &ScalarField, times: &[f64], cfg: &ReferenceConfig) -> Result<Vec<ScalarField>> {
    cfg.validate()?;
    check_times(times)?;
    let grid = &u0.grid;
    let n = grid.n();
    let w = vec![0.5; n + 1];
    let mut u = u0.values.clone();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while t - now > 1e-14 * t.max(1.0) {
            let smax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dt_cfl = if smax > 0.0 { cfg.cfl_safety * grid.spacing() / smax } else { f64::INFINITY };
            let dt = dt_cfl.min(t - now);
            u = scalar_update(&u, &w, &Burgers, dt / grid.spacing(), grid.boundary())?;
            now += dt;
        }
        now = t;
        out.push(ScalarField::new(grid.clone(), u.clone())?);
    }
    Ok(out)
}

/// Burgers reference averaged over the coarse cells for every output time.
pub fn burgers_reference(
    u0: impl Fn(f64) -> f64,
    times: &[f64],
    cfg: &ReferenceConfig,
    coarse: &SpaceGrid,
) -> Result<Vec<ScalarField>> {
    let fine = SpaceGrid::new(coarse.x_left(), coarse.x_right(), cfg.fine_n, Layout::CellCentered, coarse.boundary())?;
    burgers_fine(&fine.sample(u0), times, cfg)?.iter().map(|f| project_cell_average(f, coarse)).collect()
}

/// Conserved fine-grid field sampled from primitive initial data.
pub fn euler_initial(grid: &SpaceGrid, gas: &EulerGas, u0: impl Fn(f64) -> Result<Primitive>) -> Result<SystemField> {
    let rows = grid
        .points()
        .iter()
        .enumerate()
        .map(|(j, &x)| Ok(gas.prim_to_cons(u0(x)?, j)?.to_array()))
        .collect::<Result<Vec<[f64; 3]>>>()?;
    SystemField::from_rows(grid.clone(), &rows)
}

/// Standard Rusanov for the Euler equations at every output time.
pub fn euler_fine(u0: &SystemField, gas: &EulerGas, times: &[f64], cfg: &ReferenceConfig) -> Result<Vec<SystemField>> {
    cfg.validate()?;
    check_times(times)?;
    let grid = &u0.grid;
    let w = vec![0.5; grid.n() + 1];
    let mut u = u0.rows::<3>();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while t - now > 1e-14 * t.max(1.0) {
            let smax = gas.primitives(&u)?.iter().fold(0.0f64, |m, s| m.max(gas.signal_speed(*s)));
            let dt = (cfg.cfl_safety * grid.spacing() / smax).min(t - now);
            u = euler_update(&u, &w, gas, dt / grid.spacing(), grid.boundary())?;
            now += dt;
        }
        now = t;
        out.push(SystemField::from_rows(grid.clone(), &u)?);
    }
    Ok(out)
}

/// Euler reference averaged over the coarse cells for every output time.
pub fn euler_reference(
    u0: impl Fn(f64) -> Result<Primitive>,
    gas: &EulerGas,
    times: &[f64],
    cfg: &ReferenceConfig,
    coarse: &SpaceGrid,
) -> Result<Vec<SystemField>> {
    let fine = SpaceGrid::new(coarse.x_left(), coarse.x_right(), cfg.fine_n, Layout::CellCentered, coarse.boundary())?;
    let start = euler_initial(&fine, gas, u0)?;
    euler_fine(&start, gas, times, cfg)?
        .iter()
        .map(|f| crate::grid::project_cell_average_system(f, coarse))
        .collect()
}

/// Two-stage strong-stability-preserving Runge-Kutta trajectory, including the start.
pub fn ssprk2_solve<P: OdeProblem + ?Sized>(problem: &P, u0: &[f64], dt: f64, n_steps: usize) -> Vec<Vec<f64>> {
    let mut traj = Vec::with_capacity(n_steps + 1);
    let mut u = u0.to_vec();
    traj.push(u.clone());
    for _ in 0..n_steps {
        let k1 = problem.rhs(&u);
        let stage: Vec<f64> = u.iter().zip(&k1).map(|(a, b)| a + dt * b).collect();
        let k2 = problem.rhs(&stage);
        u = u.iter().zip(stage.iter().zip(&k2)).map(|(a, (s, k))| 0.5 * a + 0.5 * (s + dt * k)).collect();
        traj.push(u.clone());
    }
    traj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_volume::fv_step_scalar;
    use crate::ode_bdf::{Decay, Oscillator};
    use crate::random_data::{RoughData, SodData};
    use approx::assert_abs_diff_eq;

    fn heat_coarse() -> SpaceGrid {
        SpaceGrid::unit(10, Layout::NodeCentered, Boundary::DirichletZero).unwrap()
    }

    #[test]
    fn schedule_lands_exactly() {
        let s = schedule(0.1, 0.03);
        assert_eq!(s.len(), 4);
        assert_abs_diff_eq!(s.iter().sum::<f64>(), 0.1, epsilon = 1e-15);
        assert_eq!(schedule(0.09, 0.03).len(), 3);
        assert!(schedule(0.0, 0.1).is_empty());
    }

    #[test]
    fn heat_fourier_modes() {
        let coarse = heat_coarse();
        let cfg = ReferenceConfig::default();
        for (k, f) in [(1.0, 1.0), (2.0, 4.0)] {
            let r = heat_reference(|x| (k * PI * x).sin(), 1.0, 0.05, &cfg, &coarse).unwrap();
            for (j, v) in r.values.iter().enumerate() {
                let exact = (-f * PI * PI * 0.05f64).exp() * (k * PI * coarse.x(j)).sin();
                assert!((v - exact).abs() < 1e-3);
            }
        }
        let z = heat_reference(|_| 0.0, 10.0, 0.05, &cfg, &coarse).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn modal_propagator_matches_time_stepping() {
        let coarse = heat_coarse();
        let cfg = ReferenceConfig { fine_n: 208, cfl_safety: 0.9 };
        let rough = RoughData::from_record(&[0.4, -0.7, 0.2]).unwrap();
        let u0 = |x: f64| rough.eval(x).unwrap();
        for (c, t) in [(0.1, 0.05), (1.0, 0.05), (10.0, 0.013)] {
            let prop = HeatPropagator::new(c, t, &cfg, &coarse).unwrap();
            let modal = prop.apply_fn(u0).unwrap();
            let fine = heat_fine_stepping(&prop.fine_grid().sample(u0), c, t, &cfg).unwrap();
            let stepped = project_pointwise(&fine, &coarse).unwrap();
            for (a, b) in modal.values.iter().zip(&stepped.values) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn advection_examples() {
        let coarse = SpaceGrid::unit(10, Layout::NodeCentered, Boundary::Periodic).unwrap();
        let cfg = ReferenceConfig::default();
        let u0 = |x: f64| (2.0 * PI * x).sin();
        let still = advection_reference(u0, 0.0, &[0.5], &cfg, &coarse).unwrap();
        for (j, v) in still[0].values.iter().enumerate() {
            assert_abs_diff_eq!(*v, u0(coarse.x(j)), epsilon = 1e-15);
        }
        let moved = advection_reference(u0, 0.5, &[0.5], &cfg, &coarse).unwrap();
        for (j, v) in moved[0].values.iter().enumerate() {
            assert!((v - (2.0 * PI * (coarse.x(j) - 0.25)).sin()).abs() < 2e-2);
        }
        let lap = advection_reference(u0, 2.0, &[0.5], &cfg, &coarse).unwrap();
        for (j, v) in lap[0].values.iter().enumerate() {
            assert!((v - u0(coarse.x(j))).abs() < 0.1);
        }
    }

    fn tv(v: &[f64]) -> f64 {
        let n = v.len();
        (0..n).map(|j| (v[(j + 1) % n] - v[j]).abs()).sum()
    }

    #[test]
    fn burgers_reference_properties() {
        let cfg = ReferenceConfig::default();
        let fine = SpaceGrid::unit(1000, Layout::CellCentered, Boundary::Periodic).unwrap();
        let k = burgers_fine(&ScalarField::constant(fine.clone(), 0.3), &[0.05, 0.1], &cfg).unwrap();
        assert!(k[1].values.iter().all(|&v| (v - 0.3).abs() < 1e-14));

        let rough = RoughData::from_record(&[0.0, 0.0, 0.0]).unwrap();
        let u0 = fine.sample(|x| rough.eval(x).unwrap());
        let out = burgers_fine(&u0, &[0.05, 0.1], &cfg).unwrap();
        let mass0: f64 = u0.values.iter().sum::<f64>() * fine.spacing();
        for f in &out {
            assert!(tv(&f.values) <= tv(&u0.values) + 1e-10);
            assert_abs_diff_eq!(f.values.iter().sum::<f64>() * fine.spacing(), mass0, epsilon = 1e-12);
        }
        let coarse = SpaceGrid::unit(10, Layout::CellCentered, Boundary::Periodic).unwrap();
        let levels = burgers_reference(|x| rough.eval(x).unwrap(), &[0.0, 0.05], &cfg, &coarse).unwrap();
        assert_eq!(levels[0], project_cell_average(&u0, &coarse).unwrap());
    }

    #[test]
    fn burgers_fine_run_matches_single_steps() {
        let cfg = ReferenceConfig { fine_n: 20, cfl_safety: 0.9 };
        let grid = SpaceGrid::unit(20, Layout::CellCentered, Boundary::Periodic).unwrap();
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let dt = 0.9 * grid.spacing() / u0.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let out = burgers_fine(&u0, &[dt], &cfg).unwrap();
        let direct = fv_step_scalar(&u0, &[0.5; 21], &Burgers, dt).unwrap();
        for (a, b) in out[0].values.iter().zip(&direct.values) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn euler_reference_sod_structure() {
        let gas = EulerGas::default();
        let cfg = ReferenceConfig { fine_n: 960, cfl_safety: 0.9 };
        let coarse = SpaceGrid::unit(20, Layout::CellCentered, Boundary::Transparent).unwrap();
        let sod = SodData::standard();
        let u0 = |x: f64| {
            let (rho, v, p) = sod.eval(x)?;
            Ok(Primitive { rho, v, p })
        };
        let fine = SpaceGrid::unit(960, Layout::CellCentered, Boundary::Transparent).unwrap();
        let start = euler_initial(&fine, &gas, u0).unwrap();
        let out = euler_fine(&start, &gas, &[0.15], &cfg).unwrap();
        let prims = gas.primitives(&out[0].rows::<3>()).unwrap();
        let rise = |f: &dyn Fn(&Primitive) -> f64| prims.windows(2).map(|w| f(&w[1]) - f(&w[0])).fold(0.0f64, f64::max);
        assert!(rise(&|s| s.rho) <= 1e-9);
        // Rusanov leaves a faint pressure wiggle at the contact.
        assert!(rise(&|s| s.p) <= 1e-6);
        assert!(prims.iter().all(|s| s.v >= -1e-12 && s.rho > 0.0 && s.p > 0.0));
        // Rarefaction head, contact and shock leave a plateau between them.
        let x = fine.points();
        let rho_at = |x0: f64| prims[x.iter().position(|&xx| xx >= x0).unwrap()].rho;
        assert_abs_diff_eq!(rho_at(0.2), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rho_at(0.98), 0.4, epsilon = 1e-9);
        let mid = rho_at(0.58);
        assert!(mid < 1.0 && mid > rho_at(0.72) && rho_at(0.72) > 0.4);

        let coarse_levels = euler_reference(u0, &gas, &[0.0, 0.03], &cfg, &coarse).unwrap();
        assert_eq!(coarse_levels.len(), 2);
        let uniform = euler_fine(
            &euler_initial(&fine, &gas, |_| Ok(Primitive { rho: 0.8, v: 0.1, p: 0.9 })).unwrap(),
            &gas,
            &[0.1],
            &cfg,
        )
        .unwrap();
        let q = gas.prim_to_cons(Primitive { rho: 0.8, v: 0.1, p: 0.9 }, 0).unwrap().to_array();
        for r in uniform[0].rows::<3>() {
            for c in 0..3 {
                assert_abs_diff_eq!(r[c], q[c], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn ssprk2_examples() {
        let flat = ssprk2_solve(&Decay { c: 0.0 }, &[2.0], 0.1, 10);
        assert!(flat.iter().all(|u| u[0] == 2.0));
        let decay = ssprk2_solve(&Decay { c: 1.0 }, &[1.0], 1e-3, 1000);
        assert!((decay[1000][0] - (-1.0f64).exp()).abs() < 1e-6);
        let osc = ssprk2_solve(&Oscillator { c: 100.0 }, &[1.0, 0.0], 1e-3, 1000);
        assert!(osc.iter().all(|u| u[0].abs() <= 1.1));
    }
}
