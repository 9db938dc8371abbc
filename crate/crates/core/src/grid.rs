//! Uniform 1-D grids, grid-attached fields, ghost cells and fine-to-coarse
//! projections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// Unknowns are point values at nodes.
    NodeCentered,
    /// Unknowns are cell averages.
    CellCentered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    DirichletZero,
    Periodic,
    /// Zeroth-order extrapolation of the edge value.
    Transparent,
}

/// A uniform grid on `[x_left, x_right]`.
///
/// For node-centered grids with zero Dirichlet data, `n` counts interior
/// nodes and the spacing is `(x_right - x_left) / (n + 1)`. In every other
/// configuration the spacing is `(x_right - x_left) / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    x_left: f64,
    x_right: f64,
    n: usize,
    spacing: f64,
    layout: Layout,
    boundary: Boundary,
}

impl SpaceGrid {
    pub fn new(x_left: f64, x_right: f64, n: usize, layout: Layout, boundary: Boundary) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("grid needs at least one unknown".into()));
        }
        if !(x_left.is_finite() && x_right.is_finite()) || x_left >= x_right {
            return Err(Error::InvalidArgument(format!(
                "degenerate interval [{x_left}, {x_right}]"
            )));
        }
        let len = x_right - x_left;
        let spacing = match (layout, boundary) {
            (Layout::NodeCentered, Boundary::DirichletZero) => len / (n as f64 + 1.0),
            _ => len / n as f64,
        };
        Ok(SpaceGrid { x_left, x_right, n, spacing, layout, boundary })
    }

    /// Grid on the unit interval.
    pub fn unit(n: usize, layout: Layout, boundary: Boundary) -> Result<Self> {
        Self::new(0.0, 1.0, n, layout, boundary)
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        Self::new(self.x_left, self.x_right, self.n, self.layout, boundary)
    }

    /// Position of unknown `j` (0-based): node `j + 1` for node-centered
    /// grids, the center of cell `j` for cell-centered grids.
    pub fn x(&self, j: usize) -> f64 {
        match self.layout {
            Layout::NodeCentered => self.x_left + (j as f64 + 1.0) * self.spacing,
            Layout::CellCentered => self.x_left + (j as f64 + 0.5) * self.spacing,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Samples `f` at every unknown position.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.clone(), values: self.points().into_iter().map(f).collect() }
    }

    fn same_interval(&self, other: &SpaceGrid) -> bool {
        let tol = 1e-12 * (self.x_right - self.x_left).abs().max(1.0);
        (self.x_left - other.x_left).abs() <= tol && (self.x_right - other.x_right).abs() <= tol
    }
}

/// Equivalent to [`SpaceGrid::new`].
pub fn make_grid(x_left: f64, x_right: f64, n: usize, layout: Layout, boundary: Boundary) -> Result<SpaceGrid> {
    SpaceGrid::new(x_left, x_right, n, layout, boundary)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || n_steps == 0 {
            return Err(Error::InvalidArgument(format!("invalid time grid dt={dt}, steps={n_steps}")));
        }
        Ok(TimeGrid { dt, n_steps })
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.n_steps as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: SpaceGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but grid has {} unknowns",
                values.len(),
                grid.n()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at index {j}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: SpaceGrid, value: f64) -> Self {
        let values = vec![value; grid.n()];
        ScalarField { grid, values }
    }

    /// Values padded with `width` ghost entries on each side according to
    /// the grid's boundary condition.
    pub fn ghost_extend(&self, width: usize) -> Result<Vec<f64>> {
        extend_rows(&self.values, 0.0, self.grid.boundary(), width)
    }

    /// `Σ_j U_j · dx`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }
}

/// A field with `m` components per unknown, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemField {
    pub grid: SpaceGrid,
    pub m: usize,
    pub values: Vec<f64>,
}

impl SystemField {
    pub fn new(grid: SpaceGrid, m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || values.len() != grid.n() * m {
            return Err(Error::InvalidArgument(format!(
                "system field needs {} x {m} values, got {}",
                grid.n(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value in cell {}", k / m)));
        }
        Ok(SystemField { grid, m, values })
    }

    pub fn from_rows<const M: usize>(grid: SpaceGrid, rows: &[[f64; M]]) -> Result<Self> {
        Self::new(grid, M, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.m..(j + 1) * self.m]
    }

    /// Component `k` of every cell.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().skip(k).step_by(self.m).copied().collect()
    }

    pub fn rows<const M: usize>(&self) -> Vec<[f64; M]> {
        assert_eq!(M, self.m, "row width mismatch");
        self.values
            .chunks_exact(M)
            .map(|c| {
                let mut r = [0.0; M];
                r.copy_from_slice(c);
                r
            })
            .collect()
    }

    /// Flattened rows padded with `width` ghost rows on each side.
    pub fn ghost_extend(&self, width: usize) -> Result<Vec<f64>> {
        let rows: Vec<&[f64]> = self.values.chunks_exact(self.m).collect();
        let zero = vec![0.0; self.m];
        let ext = extend_rows(&rows, zero.as_slice(), self.grid.boundary(), width)?;
        Ok(ext.concat())
    }
}

/// Pads `rows` with ghost entries. `zero` is the Dirichlet ghost value.
pub fn extend_rows<T: Copy>(rows: &[T], zero: T, boundary: Boundary, width: usize) -> Result<Vec<T>> {
    if width > 2 {
        return Err(Error::UnsupportedWidth(width));
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot extend an empty field".into()));
    }
    let mut out = Vec::with_capacity(n + 2 * width);
    let ghost = |k: isize| -> T {
        match boundary {
            Boundary::DirichletZero => zero,
            Boundary::Periodic => rows[k.rem_euclid(n as isize) as usize],
            Boundary::Transparent => rows[k.clamp(0, n as isize - 1) as usize],
        }
    };
    for k in -(width as isize)..0 {
        out.push(ghost(k));
    }
    out.extend_from_slice(rows);
    for k in n as isize..(n + width) as isize {
        out.push(ghost(k));
    }
    Ok(out)
}

/// Samples a fine field at the fine node nearest to each coarse node.
pub fn project_pointwise(fine: &ScalarField, coarse: &SpaceGrid) -> Result<ScalarField> {
    if !fine.grid.same_interval(coarse) {
        return Err(Error::IncompatibleGrid(format!(
            "fine grid spans [{}, {}], coarse grid spans [{}, {}]",
            fine.grid.x_left(),
            fine.grid.x_right(),
            coarse.x_left(),
            coarse.x_right()
        )));
    }
    let x0 = fine.grid.x(0);
    let dx = fine.grid.spacing();
    let last = fine.grid.n() as f64 - 1.0;
    let values = coarse
        .points()
        .into_iter()
        .map(|x| {
            let k = ((x - x0) / dx).round().clamp(0.0, last) as usize;
            fine.values[k]
        })
        .collect();
    ScalarField::new(coarse.clone(), values)
}

/// Refinement ratio between two cell-centered grids on the same interval.
fn cell_ratio(fine: &SpaceGrid, coarse: &SpaceGrid) -> Result<usize> {
    if !fine.same_interval(coarse) {
        return Err(Error::IncompatibleGrid("grids span different intervals".into()));
    }
    if !fine.n().is_multiple_of(coarse.n()) {
        return Err(Error::IncompatibleGrid(format!(
            "fine cell count {} is not a multiple of coarse cell count {}",
            fine.n(),
            coarse.n()
        )));
    }
    Ok(fine.n() / coarse.n())
}

/// Averages `m`-component rows in consecutive blocks of `ratio` rows.
pub fn block_average(values: &[f64], m: usize, ratio: usize) -> Vec<f64> {
    let inv = 1.0 / ratio as f64;
    values
        .chunks_exact(m * ratio)
        .flat_map(|block| {
            (0..m).map(move |k| block.iter().skip(k).step_by(m).sum::<f64>() * inv)
        })
        .collect()
}

/// Conservative projection: each coarse value is the mean of the fine cells
/// it contains.
pub fn project_cell_average(fine: &ScalarField, coarse: &SpaceGrid) -> Result<ScalarField> {
    let ratio = cell_ratio(&fine.grid, coarse)?;
    ScalarField::new(coarse.clone(), block_average(&fine.values, 1, ratio))
}

pub fn project_cell_average_system(fine: &SystemField, coarse: &SpaceGrid) -> Result<SystemField> {
    let ratio = cell_ratio(&fine.grid, coarse)?;
    SystemField::new(coarse.clone(), fine.m, block_average(&fine.values, fine.m, ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn spacing_per_layout() {
        let g = make_grid(0.0, 1.0, 10, Layout::CellCentered, Boundary::Periodic).unwrap();
        assert_abs_diff_eq!(g.spacing(), 0.1, epsilon = 1e-15);
        let g = make_grid(0.0, 1.0, 10, Layout::NodeCentered, Boundary::DirichletZero).unwrap();
        assert_abs_diff_eq!(g.spacing(), 1.0 / 11.0, epsilon = 1e-15);
        let g = make_grid(0.0, 1.0, 20, Layout::CellCentered, Boundary::Transparent).unwrap();
        assert_abs_diff_eq!(g.spacing(), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn invalid_grids() {
        assert!(matches!(
            make_grid(0.0, 1.0, 0, Layout::CellCentered, Boundary::Periodic),
            Err(Error::InvalidArgument(_))
        ));
        assert!(make_grid(1.0, 1.0, 4, Layout::CellCentered, Boundary::Periodic).is_err());
        assert!(make_grid(2.0, 1.0, 4, Layout::CellCentered, Boundary::Periodic).is_err());
    }

    #[test]
    fn ghost_cells() {
        let dir = SpaceGrid::unit(3, Layout::NodeCentered, Boundary::DirichletZero).unwrap();
        let f = ScalarField::new(dir, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.ghost_extend(2).unwrap(), vec![0.0, 0.0, 1.0, 2.0, 3.0, 0.0, 0.0]);

        let per = SpaceGrid::unit(3, Layout::CellCentered, Boundary::Periodic).unwrap();
        let f = ScalarField::new(per, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.ghost_extend(1).unwrap(), vec![3.0, 1.0, 2.0, 3.0, 1.0]);

        let tr = SpaceGrid::unit(2, Layout::CellCentered, Boundary::Transparent).unwrap();
        let f = ScalarField::new(tr, vec![5.0, 7.0]).unwrap();
        assert_eq!(f.ghost_extend(1).unwrap(), vec![5.0, 5.0, 7.0, 7.0]);

        assert!(matches!(f.ghost_extend(3), Err(Error::UnsupportedWidth(3))));
    }

    #[test]
    fn system_ghost_rows() {
        let g = SpaceGrid::unit(2, Layout::CellCentered, Boundary::Transparent).unwrap();
        let f = SystemField::from_rows(g, &[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(f.ghost_extend(1).unwrap(), vec![1.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 4.0]);
        assert_eq!(f.component(1), vec![2.0, 4.0]);
    }

    #[test]
    fn pointwise_projection() {
        let fine_grid = SpaceGrid::unit(1000, Layout::NodeCentered, Boundary::DirichletZero).unwrap();
        let coarse = SpaceGrid::unit(10, Layout::NodeCentered, Boundary::DirichletZero).unwrap();

        let lin = project_pointwise(&fine_grid.sample(|x| x), &coarse).unwrap();
        for (j, v) in lin.values.iter().enumerate() {
            assert_abs_diff_eq!(*v, coarse.x(j), epsilon = 1e-14);
        }

        let c = project_pointwise(&ScalarField::constant(fine_grid.clone(), 4.2), &coarse).unwrap();
        assert!(c.values.iter().all(|&v| v == 4.2));

        let s = project_pointwise(&fine_grid.sample(|x| (std::f64::consts::PI * x).sin()), &coarse).unwrap();
        for (j, v) in s.values.iter().enumerate() {
            assert!((v - (std::f64::consts::PI * coarse.x(j)).sin()).abs() < 1e-3);
        }

        let other = SpaceGrid::new(0.0, 2.0, 10, Layout::NodeCentered, Boundary::DirichletZero).unwrap();
        assert!(matches!(project_pointwise(&lin, &other), Err(Error::IncompatibleGrid(_))));
    }

    #[test]
    fn cell_average_projection() {
        let fine = SpaceGrid::unit(4, Layout::CellCentered, Boundary::Periodic).unwrap();
        let coarse = SpaceGrid::unit(2, Layout::CellCentered, Boundary::Periodic).unwrap();
        let f = ScalarField::new(fine.clone(), vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        assert_eq!(project_cell_average(&f, &coarse).unwrap().values, vec![2.0, 6.0]);

        let three = SpaceGrid::unit(3, Layout::CellCentered, Boundary::Periodic).unwrap();
        assert!(matches!(project_cell_average(&f, &three), Err(Error::IncompatibleGrid(_))));

        let c = project_cell_average(&ScalarField::constant(fine, 2.5), &coarse).unwrap();
        assert_eq!(c.values, vec![2.5, 2.5]);
    }

    proptest! {
        #[test]
        fn cell_average_is_conservative(values in prop::collection::vec(-10.0f64..10.0, 60)) {
            let fine = SpaceGrid::unit(60, Layout::CellCentered, Boundary::Periodic).unwrap();
            let f = ScalarField::new(fine, values).unwrap();
            for n in [1usize, 2, 3, 4, 5, 6, 10, 12, 15, 20, 30] {
                let coarse = SpaceGrid::unit(n, Layout::CellCentered, Boundary::Periodic).unwrap();
                let c = project_cell_average(&f, &coarse).unwrap();
                prop_assert!((c.integral() - f.integral()).abs() < 1e-12);
            }
        }

        #[test]
        fn pointwise_exact_on_affine(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let fine = SpaceGrid::unit(1000, Layout::NodeCentered, Boundary::DirichletZero).unwrap();
            let coarse = SpaceGrid::unit(10, Layout::NodeCentered, Boundary::DirichletZero).unwrap();
            let c = project_pointwise(&fine.sample(|x| a * x + b), &coarse).unwrap();
            for (j, v) in c.values.iter().enumerate() {
                prop_assert!((v - (a * coarse.x(j) + b)).abs() < 1e-12);
            }
        }

        #[test]
        fn periodic_stencil_is_translation_equivariant(
            values in prop::collection::vec(-1.0f64..1.0, 12),
            shift in 0usize..12,
        ) {
            let g = SpaceGrid::unit(12, Layout::CellCentered, Boundary::Periodic).unwrap();
            let stencil = |u: &ScalarField| -> Vec<f64> {
                let e = u.ghost_extend(2).unwrap();
                (0..12).map(|j| e[j] - 3.0 * e[j + 1] + 0.5 * e[j + 2] + e[j + 3] * e[j + 4]).collect()
            };
            let u = ScalarField::new(g.clone(), values.clone()).unwrap();
            let mut shifted = values.clone();
            shifted.rotate_right(shift);
            let us = ScalarField::new(g, shifted).unwrap();
            let mut expected = stencil(&u);
            expected.rotate_right(shift);
            prop_assert_eq!(stencil(&us), expected);
        }
    }
}
