//! Finite-difference discretization of `H = −½Δ + V` on a tensor grid with
//! Dirichlet boundary conditions.

use std::io::{self, Write};

use thiserror::Error;

use crate::model::QesModel;

/// Smallest point count per axis (including both boundary points).
pub const MIN_POINTS: usize = 3;
/// Largest interior size accepted by [`Grid::new`].
pub const MAX_INTERIOR: u128 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("axis {axis}: need at least {MIN_POINTS} points, got {points}")]
    TooFewPoints { axis: usize, points: usize },
    #[error("axis {axis}: half-extent must be positive and finite, got {half}")]
    BadExtent { axis: usize, half: f64 },
    #[error("half-extents and point counts disagree: {0} vs {1}")]
    AxisCount(usize, usize),
    #[error("grid interior of {0} points is too large")]
    OverflowingGrid(u128),
    #[error("potential is singular at {point:?}")]
    SingularPotential { point: Vec<f64> },
    #[error("vector length {got} does not match operator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Per-axis half-extent `L_i` and point count `N_i` on `[-L_i, L_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub half: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridSpec {
    pub fn new(half: Vec<f64>, points: Vec<usize>) -> Self {
        Self { half, points }
    }

    /// Same extent and point count on all `n` axes.
    pub fn uniform(n: usize, half: f64, points: usize) -> Self {
        Self::new(vec![half; n], vec![points; n])
    }
}

/// Interior nodes of a tensor grid in lexicographic order, last axis fastest.
#[derive(Debug, Clone)]
pub struct Grid {
    spec: GridSpec,
    h: Vec<f64>,
    interior: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self, GridError> {
        if spec.half.len() != spec.points.len() || spec.half.is_empty() {
            return Err(GridError::AxisCount(spec.half.len(), spec.points.len()));
        }
        let mut total: u128 = 1;
        for (axis, (&half, &points)) in spec.half.iter().zip(&spec.points).enumerate() {
            if !(half > 0.0 && half.is_finite()) {
                return Err(GridError::BadExtent { axis, half });
            }
            if points < MIN_POINTS {
                return Err(GridError::TooFewPoints { axis, points });
            }
            total = total.saturating_mul((points - 2) as u128);
        }
        if total > MAX_INTERIOR {
            return Err(GridError::OverflowingGrid(total));
        }
        let h = spec
            .half
            .iter()
            .zip(&spec.points)
            .map(|(l, n)| 2.0 * l / (n - 1) as f64)
            .collect();
        let interior: Vec<usize> = spec.points.iter().map(|n| n - 2).collect();
        let mut strides = vec![1; interior.len()];
        for i in (0..interior.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * interior[i + 1];
        }
        Ok(Self {
            spec,
            h,
            interior,
            strides,
            len: total as usize,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.h.len()
    }

    /// Number of interior nodes `m`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn interior_shape(&self) -> &[usize] {
        &self.interior
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Coordinate of node `j` (0..N_i, boundary included) on axis `i`.
    pub fn node(&self, axis: usize, j: usize) -> f64 {
        let n = self.spec.points[axis];
        // symmetric formula keeps mirrored nodes exactly opposite
        let l = self.spec.half[axis];
        l * (2.0 * j as f64 - (n - 1) as f64) / (n - 1) as f64
    }

    /// Interior coordinates along one axis.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (1..=self.interior[axis]).map(|j| self.node(axis, j)).collect()
    }

    /// Interior multi-index of flat index `idx`.
    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for (o, s) in out.iter_mut().zip(&self.strides) {
            *o = idx / s;
            idx %= s;
        }
    }

    pub fn coords(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for (axis, (o, s)) in out.iter_mut().zip(&self.strides).enumerate() {
            *o = self.node(axis, rem / s + 1);
            rem %= s;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dimension()];
        self.coords(idx, &mut p);
        p
    }

    /// Samples `f` at every interior node.
    pub fn sample<E>(&self, mut f: impl FnMut(&[f64]) -> Result<f64, E>) -> Result<Vec<f64>, E> {
        let mut p = vec![0.0; self.dimension()];
        (0..self.len)
            .map(|idx| {
                self.coords(idx, &mut p);
                f(&p)
            })
            .collect()
    }

    /// Every node including the boundary, lexicographic with the last axis
    /// fastest.
    pub fn for_each_full_node(&self, mut f: impl FnMut(&[f64], bool)) {
        let n = self.dimension();
        let mut j = vec![0usize; n];
        let mut p: Vec<f64> = (0..n).map(|a| self.node(a, 0)).collect();
        loop {
            let boundary = j
                .iter()
                .zip(&self.spec.points)
                .any(|(&ji, &ni)| ji == 0 || ji == ni - 1);
            f(&p, boundary);
            let mut axis = n;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                j[axis] += 1;
                if j[axis] < self.spec.points[axis] {
                    p[axis] = self.node(axis, j[axis]);
                    break;
                }
                j[axis] = 0;
                p[axis] = self.node(axis, 0);
            }
        }
    }

    /// Grid quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }
}

/// Row-compressed symmetric matrix `−½Δ_h + diag(V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Assembles the operator with potential values `v` at the interior nodes.
    pub fn from_potential_values(grid: &Grid, v: &[f64]) -> Result<Self, GridError> {
        let m = grid.len();
        if v.len() != m {
            return Err(GridError::DimensionMismatch {
                expected: m,
                got: v.len(),
            });
        }
        let n = grid.dimension();
        let inv_h2: Vec<f64> = grid.spacing().iter().map(|h| 1.0 / (h * h)).collect();
        let diag_kinetic: f64 = inv_h2.iter().sum();
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut cols = Vec::with_capacity(m * (2 * n + 1));
        let mut values = Vec::with_capacity(m * (2 * n + 1));
        let mut mi = vec![0usize; n];
        row_ptr.push(0);
        for (row, &vi) in v.iter().enumerate() {
            grid.multi_index(row, &mut mi);
            // neighbours below the row come first, in decreasing stride order
            for axis in 0..n {
                if mi[axis] > 0 {
                    cols.push(row - grid.strides()[axis]);
                    values.push(-0.5 * inv_h2[axis]);
                }
            }
            cols.push(row);
            values.push(diag_kinetic + vi);
            for axis in (0..n).rev() {
                if mi[axis] + 1 < grid.interior_shape()[axis] {
                    cols.push(row + grid.strides()[axis]);
                    values.push(-0.5 * inv_h2[axis]);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            row_ptr,
            cols,
            values,
        })
    }

    /// Assembles the operator for `potential` sampled at interior nodes.
    pub fn from_potential<E>(
        grid: &Grid,
        potential: impl Fn(&[f64]) -> Result<f64, E>,
    ) -> Result<Self, GridError> {
        let v = grid.sample(|p| match potential(p) {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(GridError::SingularPotential { point: p.to_vec() }),
        })?;
        Self::from_potential_values(grid, &v)
    }

    pub fn dimension(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dimension()).map(|r| self.get(r, r)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, GridError> {
        let mut y = vec![0.0; self.dimension()];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), GridError> {
        let m = self.dimension();
        if x.len() != m || y.len() != m {
            return Err(GridError::DimensionMismatch {
                expected: m,
                got: if x.len() != m { x.len() } else { y.len() },
            });
        }
        for (r, yr) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for k in a..b {
                acc += self.values[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
        Ok(())
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_estimate(&self) -> f64 {
        (0..self.dimension())
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval `[lo, hi]` containing the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dimension() {
            let mut d = 0.0;
            let mut off = 0.0;
            for (c, v) in self.row(r) {
                if c == r {
                    d = v;
                } else {
                    off += v.abs();
                }
            }
            lo = lo.min(d - off);
            hi = hi.max(d + off);
        }
        (lo, hi)
    }

    /// Adds `delta` to the diagonal entry of `row`.
    pub fn add_to_diagonal(&mut self, row: usize, delta: f64) {
        let (a, b) = (self.row_ptr[row], self.row_ptr[row + 1]);
        for k in a..b {
            if self.cols[k] == row {
                self.values[k] += delta;
            }
        }
    }

    /// Writes `row col value` lines (0-based) for every stored entry.
    pub fn write_triplets(&self, mut w: impl Write) -> io::Result<()> {
        for r in 0..self.dimension() {
            for (c, v) in self.row(r) {
                writeln!(w, "{r} {c} {v:?}")?;
            }
        }
        Ok(())
    }

    /// Dense copy, for small operators only.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let m = self.dimension();
        let mut d = nalgebra::DMatrix::zeros(m, m);
        for r in 0..m {
            for (c, v) in self.row(r) {
                d[(r, c)] = v;
            }
        }
        d
    }
}

/// Discretizes the model's Hamiltonian on `grid`. Warns when `ψ0` has not
/// decayed to `1e-10` of its peak on the box boundary.
pub fn discretize(model: &QesModel, grid: &Grid) -> Result<SparseOperator, GridError> {
    if !model.allows_singular_tie() {
        let mut f_interior_min = f64::INFINITY;
        let mut f_boundary_min = f64::INFINITY;
        grid.for_each_full_node(|p, boundary| {
            if let Ok(f) = model.f(p) {
                if boundary {
                    f_boundary_min = f_boundary_min.min(f);
                } else {
                    f_interior_min = f_interior_min.min(f);
                }
            }
        });
        if f_boundary_min - f_interior_min < 1e10_f64.ln() {
            log::warn!(
                "psi0 decays only to exp({:.3}) of its peak on the box boundary",
                f_interior_min - f_boundary_min
            );
        }
    }
    SparseOperator::from_potential(grid, |p| model.potential(p))
}
