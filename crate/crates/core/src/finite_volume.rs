//! Weight-modulated Rusanov finite-volume schemes.
//!
//! Faces are indexed `0..=n`: face `k` separates cell `k-1` from cell `k`,
//! so face `0` is the left boundary and face `n` the right boundary. A weight
//! vector therefore has `n + 1` entries; on periodic grids faces `0` and `n`
//! coincide and carry the same weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Layout, ScalarField, SpaceGrid, SystemField};

/// Physical flux of a scalar conservation law.
pub trait ScalarFlux {
    fn f(&self, u: f64) -> f64;
    fn df(&self, u: f64) -> f64;
}

/// Inviscid Burgers flux `u²/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Burgers;

impl ScalarFlux for Burgers {
    fn f(&self, u: f64) -> f64 {
        0.5 * u * u
    }

    fn df(&self, u: f64) -> f64 {
        u
    }
}

/// Rusanov flux whose diffusion is scaled by `w` (`w = 1/2` is standard).
pub fn weighted_flux_scalar<F: ScalarFlux + ?Sized>(ul: f64, ur: f64, w: f64, flux: &F) -> f64 {
    let s = flux.df(ul).abs().max(flux.df(ur).abs());
    0.5 * (flux.f(ul) + flux.f(ur)) - w * s * (ur - ul)
}

fn check_weights(grid: &SpaceGrid, weights: &[f64]) -> Result<()> {
    if weights.len() != grid.n() + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} face weights, got {}",
            grid.n() + 1,
            weights.len()
        )));
    }
    Ok(())
}

fn check_courant(courant: f64) -> Result<()> {
    if courant > 1.0 + 1e-12 || !courant.is_finite() {
        return Err(Error::CflViolation { courant });
    }
    Ok(())
}

/// One conservative step on raw cell values with `λ = Δt/Δx`.
pub(crate) fn scalar_update<F: ScalarFlux + ?Sized>(
    values: &[f64],
    weights: &[f64],
    flux: &F,
    lambda: f64,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    let smax = values.iter().fold(0.0f64, |m, &u| m.max(flux.df(u).abs()));
    check_courant(smax * lambda)?;
    let n = values.len();
    let ext = crate::grid::extend_rows(values, 0.0, boundary, 1)?;
    let faces: Vec<f64> = (0..=n).map(|k| weighted_flux_scalar(ext[k], ext[k + 1], weights[k], flux)).collect();
    Ok((0..n).map(|j| values[j] - lambda * (faces[j + 1] - faces[j])).collect())
}

/// `U_j - (Δt/Δx)(F_{j+1/2} - F_{j-1/2})` with weighted Rusanov fluxes.
pub fn fv_step_scalar<F: ScalarFlux + ?Sized>(
    u: &ScalarField,
    weights: &[f64],
    flux: &F,
    dt: f64,
) -> Result<ScalarField> {
    let grid = &u.grid;
    if grid.boundary() != Boundary::Periodic {
        return Err(Error::InvalidArgument("scalar finite-volume step needs a periodic grid".into()));
    }
    check_weights(grid, weights)?;
    let next = scalar_update(&u.values, weights, flux, dt / grid.spacing(), grid.boundary())?;
    ScalarField::new(grid.clone(), next)
}

/// Largest stable step `cfl · Δx / max|f'(U_j)|`; `+∞` when every wave speed vanishes.
pub fn cfl_max_dt_scalar<F: ScalarFlux + ?Sized>(u: &ScalarField, flux: &F, cfl: f64) -> Result<f64> {
    check_cfl_number(cfl)?;
    let smax = u.values.iter().fold(0.0f64, |m, &v| m.max(flux.df(v).abs()));
    Ok(if smax == 0.0 { f64::INFINITY } else { cfl * u.grid.spacing() / smax })
}

fn check_cfl_number(cfl: f64) -> Result<()> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidArgument(format!("CFL number must lie in (0, 1], got {cfl}")));
    }
    Ok(())
}

/// Pooling of face weights into contiguous groups of interior faces.
///
/// Interior faces `1..n` are grouped in windows of `window` faces starting
/// from the left; a short remainder joins the last group. Periodic grids
/// give the wrap-around face the last group's weight, transparent grids copy
/// the nearest group onto each boundary face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightLayout {
    pub n_cells: usize,
    pub window: usize,
    pub boundary: Boundary,
}

impl WeightLayout {
    pub fn new(n_cells: usize, window: usize, boundary: Boundary) -> Result<Self> {
        if n_cells < 2 || window == 0 {
            return Err(Error::InvalidArgument(format!("cannot pool {n_cells} cells in windows of {window}")));
        }
        if boundary == Boundary::DirichletZero {
            return Err(Error::InvalidArgument("finite-volume weights need periodic or transparent closure".into()));
        }
        Ok(WeightLayout { n_cells, window, boundary })
    }

    pub fn n_interfaces(&self) -> usize {
        self.n_cells + 1
    }

    pub fn n_groups(&self) -> usize {
        ((self.n_cells - 1) / self.window).max(1)
    }

    /// Group of interior face `k` (`1 <= k < n_cells`).
    pub fn group_of(&self, k: usize) -> usize {
        ((k - 1) / self.window).min(self.n_groups() - 1)
    }

    pub fn expand_pooled(&self, pooled: &[f64]) -> Result<Vec<f64>> {
        let groups = self.n_groups();
        if pooled.len() != groups {
            return Err(Error::InvalidArgument(format!("expected {groups} pooled weights, got {}", pooled.len())));
        }
        let n = self.n_cells;
        let mut w = vec![0.0; n + 1];
        for (k, wk) in w.iter_mut().enumerate().take(n).skip(1) {
            *wk = pooled[self.group_of(k)];
        }
        match self.boundary {
            Boundary::Periodic => {
                w[0] = pooled[groups - 1];
                w[n] = pooled[groups - 1];
            }
            _ => {
                w[0] = pooled[0];
                w[n] = pooled[groups - 1];
            }
        }
        Ok(w)
    }
}

pub fn expand_pooled(layout: &WeightLayout, pooled: &[f64]) -> Result<Vec<f64>> {
    layout.expand_pooled(pooled)
}

/// Sound-speed formula used in the Euler wave-speed estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoundSpeed {
    /// `a = √(γ p / ρ)`.
    #[default]
    Standard,
    /// `a = √(p / (γ ρ))`.
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub v: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conserved {
    pub rho: f64,
    pub mom: f64,
    pub energy: f64,
}

impl Conserved {
    pub fn to_array(self) -> [f64; 3] {
        [self.rho, self.mom, self.energy]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Conserved { rho: a[0], mom: a[1], energy: a[2] }
    }
}

/// Ideal gas with `E = p/(γ-1) + ρv²/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerGas {
    pub gamma: f64,
    pub sound_speed: SoundSpeed,
}

impl Default for EulerGas {
    fn default() -> Self {
        EulerGas { gamma: 1.4, sound_speed: SoundSpeed::Standard }
    }
}

impl EulerGas {
    pub fn new(gamma: f64, sound_speed: SoundSpeed) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(EulerGas { gamma, sound_speed })
    }

    pub fn sound_speed(&self, rho: f64, p: f64) -> f64 {
        match self.sound_speed {
            SoundSpeed::Standard => (self.gamma * p / rho).sqrt(),
            SoundSpeed::Printed => (p / (self.gamma * rho)).sqrt(),
        }
    }

    pub fn prim_to_cons(&self, s: Primitive, cell: usize) -> Result<Conserved> {
        check_positive(s.rho, s.p, cell)?;
        Ok(Conserved { rho: s.rho, mom: s.rho * s.v, energy: s.p / (self.gamma - 1.0) + 0.5 * s.rho * s.v * s.v })
    }

    pub fn cons_to_prim(&self, u: Conserved, cell: usize) -> Result<Primitive> {
        if !(u.rho > 0.0) {
            return Err(Error::Positivity { cell, quantity: "density" });
        }
        let v = u.mom / u.rho;
        let p = (self.gamma - 1.0) * (u.energy - 0.5 * u.rho * v * v);
        check_positive(u.rho, p, cell)?;
        Ok(Primitive { rho: u.rho, v, p })
    }

    /// Physical flux `(ρv, ρv² + p, (E + p)v)`.
    pub fn flux(&self, u: Conserved, s: Primitive) -> [f64; 3] {
        [u.mom, u.mom * s.v + s.p, (u.energy + s.p) * s.v]
    }

    pub fn signal_speed(&self, s: Primitive) -> f64 {
        s.v.abs() + self.sound_speed(s.rho, s.p)
    }

    pub fn max_signal(&self, left: Primitive, right: Primitive) -> Result<f64> {
        check_positive(left.rho, left.p, 0)?;
        check_positive(right.rho, right.p, 1)?;
        Ok(self.signal_speed(left).max(self.signal_speed(right)))
    }

    /// Primitive state of every cell, failing on the first inadmissible one.
    pub fn primitives(&self, rows: &[[f64; 3]]) -> Result<Vec<Primitive>> {
        rows.iter().enumerate().map(|(j, r)| self.cons_to_prim(Conserved::from_array(*r), j)).collect()
    }
}

fn check_positive(rho: f64, p: f64, cell: usize) -> Result<()> {
    if !(rho > 0.0) {
        return Err(Error::Positivity { cell, quantity: "density" });
    }
    if !(p > 0.0) {
        return Err(Error::Positivity { cell, quantity: "pressure" });
    }
    Ok(())
}

pub fn cons_to_prim(gas: &EulerGas, u: Conserved) -> Result<Primitive> {
    gas.cons_to_prim(u, 0)
}

pub fn prim_to_cons(gas: &EulerGas, s: Primitive) -> Result<Conserved> {
    gas.prim_to_cons(s, 0)
}

pub fn max_signal_euler(gas: &EulerGas, left: Primitive, right: Primitive) -> Result<f64> {
    gas.max_signal(left, right)
}

/// One weighted Rusanov step on conserved rows with `λ = Δt/Δx`.
pub(crate) fn euler_update(
    rows: &[[f64; 3]],
    weights: &[f64],
    gas: &EulerGas,
    lambda: f64,
    boundary: Boundary,
) -> Result<Vec<[f64; 3]>> {
    let prims = gas.primitives(rows)?;
    check_courant(euler_courant(gas, &prims, lambda))?;
    euler_update_unchecked(rows, &prims, weights, gas, lambda, boundary)
}

/// Largest `λ (|v| + a)` over the cells.
pub(crate) fn euler_courant(gas: &EulerGas, prims: &[Primitive], lambda: f64) -> f64 {
    lambda * prims.iter().fold(0.0f64, |m, s| m.max(gas.signal_speed(*s)))
}

/// Euler step at a prescribed Courant ratio; only positivity is checked.
pub(crate) fn euler_update_unchecked(
    rows: &[[f64; 3]],
    prims: &[Primitive],
    weights: &[f64],
    gas: &EulerGas,
    lambda: f64,
    boundary: Boundary,
) -> Result<Vec<[f64; 3]>> {
    let n = rows.len();
    let ext_u = crate::grid::extend_rows(rows, [0.0; 3], boundary, 1)?;
    let ext_s = crate::grid::extend_rows(prims, prims[0], boundary, 1)?;
    let phys: Vec<[f64; 3]> =
        ext_u.iter().zip(&ext_s).map(|(u, s)| gas.flux(Conserved::from_array(*u), *s)).collect();
    let faces: Vec<[f64; 3]> = (0..=n)
        .map(|k| {
            let (ul, ur) = (ext_u[k], ext_u[k + 1]);
            let s = gas.signal_speed(ext_s[k]).max(gas.signal_speed(ext_s[k + 1]));
            let d = weights[k] * s;
            std::array::from_fn(|c| 0.5 * (phys[k][c] + phys[k + 1][c]) - d * (ur[c] - ul[c]))
        })
        .collect();
    let next: Vec<[f64; 3]> = (0..n)
        .map(|j| std::array::from_fn(|c| rows[j][c] - lambda * (faces[j + 1][c] - faces[j][c])))
        .collect();
    gas.primitives(&next)?;
    Ok(next)
}

/// Weighted Rusanov step for the Euler equations in conserved variables.
pub fn fv_step_euler(u: &SystemField, weights: &[f64], gas: &EulerGas, dt: f64) -> Result<SystemField> {
    let grid = &u.grid;
    if u.m != 3 || grid.layout() != Layout::CellCentered {
        return Err(Error::InvalidArgument("Euler step needs three components on a cell-centered grid".into()));
    }
    if grid.boundary() == Boundary::DirichletZero {
        return Err(Error::InvalidArgument("Euler step needs transparent or periodic closure".into()));
    }
    check_weights(grid, weights)?;
    let next = euler_update(&u.rows::<3>(), weights, gas, dt / grid.spacing(), grid.boundary())?;
    SystemField::from_rows(grid.clone(), &next)
}

/// Largest stable step `cfl · Δx / max(|v_j| + a_j)`; `+∞` for a gas at rest with zero sound speed.
pub fn cfl_max_dt_euler(u: &SystemField, gas: &EulerGas, cfl: f64) -> Result<f64> {
    check_cfl_number(cfl)?;
    let smax = gas.primitives(&u.rows::<3>())?.iter().fold(0.0f64, |m, s| m.max(gas.signal_speed(*s)));
    Ok(if smax == 0.0 { f64::INFINITY } else { cfl * u.grid.spacing() / smax })
}
