//! Uniform cell-centered grids and per-cell tensor fields.

use crate::error::{Error, Result};
use crate::interface::Point;
use crate::qtensor::QTensor;

/// Cell-centered grid on a box; the last axis varies fastest in linear indexing.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformGrid {
    pub dim: usize,
    /// Cells per axis; unused axes hold 1.
    pub n: [usize; 3],
    pub h: f64,
    /// Lower corner of the box.
    pub lo: [f64; 3],
}

/// Where a stencil neighbor lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    /// Ghost cell across the face on `axis`, upper side when `hi`.
    Ghost { axis: usize, hi: bool },
}

impl UniformGrid {
    /// `n` cells per axis on `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::config("domain.dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        if n < 4 {
            return Err(Error::config("domain.n", format!("need at least 4 cells per axis, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::config("domain.L", format!("must be positive, got {half_width}")));
        }
        let mut cells = [1; 3];
        let mut lo = [0.0; 3];
        for k in 0..dim {
            cells[k] = n;
            lo[k] = -half_width;
        }
        Ok(UniformGrid {
            dim,
            n: cells,
            h: 2.0 * half_width / n as f64,
            lo,
        })
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn domain_volume(&self) -> f64 {
        self.cell_volume() * self.len() as f64
    }

    pub fn multi(&self, idx: usize) -> [usize; 3] {
        let i2 = idx % self.n[2];
        let rest = idx / self.n[2];
        [rest / self.n[1], rest % self.n[1], i2]
    }

    pub fn linear(&self, m: [usize; 3]) -> usize {
        (m[0] * self.n[1] + m[1]) * self.n[2] + m[2]
    }

    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n[1] * self.n[2],
            1 => self.n[2],
            _ => 1,
        }
    }

    pub fn center(&self, idx: usize) -> Point {
        let m = self.multi(idx);
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = self.lo[k] + (m[k] as f64 + 0.5) * self.h;
        }
        x
    }

    /// Center of the ghost cell adjacent to `m` across the given face.
    pub fn ghost_center(&self, m: [usize; 3], axis: usize, hi: bool) -> Point {
        let mut x = self.center(self.linear(m));
        x[axis] += if hi { self.h } else { -self.h };
        x
    }

    pub fn neighbor(&self, m: [usize; 3], axis: usize, hi: bool, periodic: bool) -> Neighbor {
        let n = self.n[axis];
        let i = m[axis];
        let mut t = m;
        if hi {
            if i + 1 < n {
                t[axis] = i + 1;
            } else if periodic {
                t[axis] = 0;
            } else {
                return Neighbor::Ghost { axis, hi };
            }
        } else if i > 0 {
            t[axis] = i - 1;
        } else if periodic {
            t[axis] = n - 1;
        } else {
            return Neighbor::Ghost { axis, hi };
        }
        Neighbor::Cell(self.linear(t))
    }

    /// Cells whose stencil touches a ghost.
    pub fn is_boundary_cell(&self, idx: usize) -> bool {
        let m = self.multi(idx);
        (0..self.dim).any(|k| m[k] == 0 || m[k] + 1 == self.n[k])
    }
}

/// Boundary data for the tensor field.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    /// Constant ghost value per face; all zeros is the homogeneous Dirichlet condition.
    Dirichlet { lo: [QTensor; 3], hi: [QTensor; 3] },
    Periodic,
}

impl Boundary {
    pub fn zero() -> Self {
        Boundary::Dirichlet {
            lo: [QTensor::ZERO; 3],
            hi: [QTensor::ZERO; 3],
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Boundary::Periodic)
    }

    pub fn ghost(&self, axis: usize, hi: bool) -> QTensor {
        match self {
            Boundary::Dirichlet { lo, hi: up } => {
                if hi {
                    up[axis]
                } else {
                    lo[axis]
                }
            }
            Boundary::Periodic => unreachable!("periodic grids have no ghosts"),
        }
    }
}

/// A tensor per cell plus boundary data and a time stamp.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub grid: UniformGrid,
    pub boundary: Boundary,
    pub data: Vec<QTensor>,
    pub t: f64,
}

impl TensorField {
    pub fn zeros(grid: UniformGrid, boundary: Boundary) -> Self {
        let n = grid.len();
        TensorField {
            grid,
            boundary,
            data: vec![QTensor::ZERO; n],
            t: 0.0,
        }
    }

    pub fn from_fn(grid: UniformGrid, boundary: Boundary, f: impl Fn(&Point) -> QTensor + Sync) -> Self {
        use rayon::prelude::*;
        let data = (0..grid.len()).into_par_iter().map(|i| f(&grid.center(i))).collect();
        TensorField {
            grid,
            boundary,
            data,
            t: 0.0,
        }
    }

    pub fn value(&self, nb: Neighbor) -> QTensor {
        match nb {
            Neighbor::Cell(i) => self.data[i],
            Neighbor::Ghost { axis, hi } => self.boundary.ghost(axis, hi),
        }
    }

    pub fn neighbor_value(&self, m: [usize; 3], axis: usize, hi: bool) -> QTensor {
        self.value(self.grid.neighbor(m, axis, hi, self.boundary.is_periodic()))
    }

    /// Central-difference gradient `[d_0 Q, d_1 Q, d_2 Q]` at a cell; unused axes are zero.
    pub fn gradient(&self, idx: usize) -> [QTensor; 3] {
        let m = self.grid.multi(idx);
        let inv = 0.5 / self.grid.h;
        let mut g = [QTensor::ZERO; 3];
        for (k, gk) in g.iter_mut().enumerate().take(self.grid.dim) {
            *gk = (self.neighbor_value(m, k, true) - self.neighbor_value(m, k, false)) * inv;
        }
        g
    }

    /// Second-order Laplacian at a cell.
    pub fn laplacian(&self, idx: usize) -> QTensor {
        let m = self.grid.multi(idx);
        let q = self.data[idx];
        let mut acc = QTensor::ZERO;
        for k in 0..self.grid.dim {
            acc += self.neighbor_value(m, k, true) + self.neighbor_value(m, k, false) - q * 2.0;
        }
        acc * (1.0 / (self.grid.h * self.grid.h))
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(QTensor::norm).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(QTensor::is_finite)
    }
}
