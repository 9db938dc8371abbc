//! Generalized, parameter-bearing numerical schemes for ODEs and 1-D PDEs
//! whose free coefficients are trained offline against projected fine-grid
//! reference solutions.
//!
//! Every scheme here is consistent with its differential equation for *any*
//! parameter value; the parameters only redistribute numerical diffusion or
//! time weighting. Standard methods (BDF2, Crank-Nicolson, upwind, Rusanov)
//! are recovered at fixed parameter values, which is also where training
//! starts.
//!
//! Module map:
//!
//! - [`grid`]: uniform space grids, fields, ghost cells, projections
//! - [`random_data`]: seeded random initial data families and datasets
//! - [`ode_bdf`]: generalized three-point BDF and the ODE model problems
//! - [`linear_pde`]: generalized implicit heat / advection schemes
//! - [`finite_volume`]: weight-modulated Rusanov schemes (Burgers, Euler)
//! - [`reference`]: fine-grid reference solvers and SSP-RK2
//! - [`trainer`]: finite-difference gradients, steepest descent, minibatch SGD
//! - [`evaluator`]: test errors, gain, speedup, convergence order, reports
//! - [`scheme_graph`]: computational-graph view of one scheme step
//! - [`experiments`]: end-to-end reproduction pipelines used by the CLI

pub mod error;
pub mod evaluator;
pub mod experiments;
pub mod finite_volume;
pub mod grid;
pub mod linalg;
pub mod linear_pde;
pub mod ode_bdf;
pub mod random_data;
pub mod reference;
pub mod scheme_graph;
pub mod trainer;

pub use error::{Error, Result};
pub use evaluator::{gain, observed_order, Report, SampleErrors};
pub use finite_volume::{Burgers, Conserved, EulerGas, Primitive, ScalarFlux, SoundSpeed, WeightLayout};
pub use grid::{Boundary, Layout, ScalarField, SpaceGrid, SystemField, TimeGrid};
pub use random_data::{Dataset, Family, KLData, RoughData, SodData};
pub use trainer::{ParamVector, Termination, TrainConfig, TrainResult};
