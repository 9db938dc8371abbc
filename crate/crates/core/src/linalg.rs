//! Small dense linear solves (LU with partial pivoting, via nalgebra).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `a x = b`. A zero pivot or a non-finite solution is reported as
/// [`Error::SingularSystem`] carrying the smallest pivot magnitude.
pub fn solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
    match lu.solve(b) {
        Some(x) if min_pivot > 0.0 && x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => Err(Error::SingularSystem { pivot: min_pivot }),
    }
}
