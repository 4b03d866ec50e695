//! Energies, calibration terms and derived checks evaluated on field snapshots.
//!
//! `psi = d^F(Q)` vanishes on the nematic side. The calibration pairs the inner
//! normal with `c^F - psi`, which increases into `Omega+`, so the calibration term
//! reads `-sum xi . grad psi`, or `sum div(xi) psi` after summation by parts.

use rayon::prelude::*;

use crate::contour::{interface_extract, CircleFit};
use crate::error::{Error, Result};
use crate::grid::{Neighbor, TensorField};
use crate::interface::{CalibrationSample, Interface, Point};
use crate::potential::PotentialCoefficients;
use crate::qtensor::{biaxiality, commutator, eigensystem, Eigensystem, QTensor};
use crate::quasi_distance::GeodesicTable;
use crate::reduce::pairwise_sum;
use crate::solver::{ld_rhs, DirectorState, Sample};

/// Column order of the time-series CSV.
pub const CSV_COLUMNS: [&str; 17] = [
    "t",
    "E_gl",
    "E_mod",
    "E_mod_over_eps",
    "dissipation_cum",
    "dissipation_residual",
    "R_fit",
    "R_exact",
    "max_abs_Q",
    "comm_grad_l2",
    "comm_time_l2",
    "bound_a",
    "bound_b",
    "bound_btilde",
    "bound_c",
    "bound_d",
    "stress_residual",
];

fn norm3(v: &Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot3(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `sum_cells f(idx) h^d` with a deterministic reduction.
fn integrate(field: &TensorField, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    let v: Vec<f64> = (0..field.data.len()).into_par_iter().map(f).collect();
    pairwise_sum(&v) * field.grid.cell_volume()
}

/// Face-difference Ginzburg-Landau energy `sum (eps/2 |D Q|^2 + F_eps(Q)/eps) h^d`.
/// Boundary faces difference against the ghost values. Its gradient with respect to
/// the cell values is exactly `-eps h^d` times the discrete right-hand side.
pub fn gl_energy(field: &TensorField, coeffs: &PotentialCoefficients, eps: f64) -> f64 {
    let grid = &field.grid;
    let periodic = field.boundary.is_periodic();
    let inv_h2 = 1.0 / (grid.h * grid.h);
    integrate(field, |idx| {
        let q = field.data[idx];
        let m = grid.multi(idx);
        let mut faces = 0.0;
        for k in 0..grid.dim {
            faces += (field.neighbor_value(m, k, true) - q).norm_sq();
            if let Neighbor::Ghost { .. } = grid.neighbor(m, k, false, periodic) {
                faces += (field.neighbor_value(m, k, false) - q).norm_sq();
            }
        }
        0.5 * eps * faces * inv_h2 + coeffs.regularized_energy(&q, eps) / eps
    })
}

/// Per-cell quantities shared by the diagnostics at one time.
#[derive(Clone, Debug)]
pub struct Prepared {
    /// Central-difference `[d_0 Q, d_1 Q, d_2 Q]`.
    pub grad: Vec<[QTensor; 3]>,
    pub psi: Vec<f64>,
    pub grad_psi: Vec<Point>,
    /// `grad_q d^F(Q)`.
    pub g: Vec<QTensor>,
    /// `F_eps(Q)`.
    pub fe: Vec<f64>,
    pub cal: Vec<CalibrationSample>,
    pub e_gl: f64,
}

pub fn prepare(
    field: &TensorField,
    coeffs: &PotentialCoefficients,
    eps: f64,
    table: &GeodesicTable,
    interface: &dyn Interface,
    t: f64,
) -> Result<Prepared> {
    let grid = &field.grid;
    let n = field.data.len();
    let pg: Vec<(f64, QTensor)> = field.data.par_iter().map(|q| table.value_and_grad(q)).collect::<Result<_>>()?;
    let (psi, g): (Vec<f64>, Vec<QTensor>) = pg.into_iter().unzip();
    let mut ghost_psi = [[0.0; 2]; 3];
    if !field.boundary.is_periodic() {
        for (k, gp) in ghost_psi.iter_mut().enumerate().take(grid.dim) {
            gp[0] = table.df_general(&field.boundary.ghost(k, false))?;
            gp[1] = table.df_general(&field.boundary.ghost(k, true))?;
        }
    }
    let periodic = field.boundary.is_periodic();
    let inv = 0.5 / grid.h;
    let psi_at = |nb: Neighbor| match nb {
        Neighbor::Cell(j) => psi[j],
        Neighbor::Ghost { axis, hi } => ghost_psi[axis][hi as usize],
    };
    let grad_psi: Vec<Point> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let m = grid.multi(idx);
            let mut v = [0.0; 3];
            for (k, vk) in v.iter_mut().enumerate().take(grid.dim) {
                *vk = (psi_at(grid.neighbor(m, k, true, periodic)) - psi_at(grid.neighbor(m, k, false, periodic))) * inv;
            }
            v
        })
        .collect();
    let grad: Vec<[QTensor; 3]> = (0..n).into_par_iter().map(|idx| field.gradient(idx)).collect();
    let fe: Vec<f64> = field.data.par_iter().map(|q| coeffs.regularized_energy(q, eps)).collect();
    let cal: Vec<CalibrationSample> = (0..n)
        .into_par_iter()
        .map(|idx| interface.calibration(&grid.center(idx), t))
        .collect::<Result<_>>()?;
    Ok(Prepared {
        grad,
        psi,
        grad_psi,
        g,
        fe,
        cal,
        e_gl: gl_energy(field, coeffs, eps),
    })
}

/// The table distance per cell.
pub fn psi_field(field: &TensorField, table: &GeodesicTable) -> Result<Vec<f64>> {
    field.data.par_iter().map(|q| table.df_general(q)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulatedEnergy {
    pub e_gl: f64,
    /// `E_gl - calibration_div`.
    pub e_mod: f64,
    /// `sum div(xi) psi h^d`.
    pub calibration_div: f64,
    /// `-sum xi . grad psi h^d`.
    pub calibration_direct: f64,
}

impl ModulatedEnergy {
    /// Relative disagreement of the two calibration quadratures.
    pub fn quadrature_mismatch(&self) -> f64 {
        let scale = self.calibration_direct.abs().max(1e-300);
        (self.calibration_div - self.calibration_direct).abs() / scale
    }

    /// The modulated energy with the direct calibration quadrature.
    pub fn e_mod_direct(&self) -> f64 {
        self.e_gl - self.calibration_direct
    }
}

pub fn modulated_from(field: &TensorField, p: &Prepared) -> ModulatedEnergy {
    let calibration_div = integrate(field, |i| p.cal[i].div_xi * p.psi[i]);
    let calibration_direct = integrate(field, |i| -dot3(&p.cal[i].xi, &p.grad_psi[i]));
    ModulatedEnergy {
        e_gl: p.e_gl,
        e_mod: p.e_gl - calibration_div,
        calibration_div,
        calibration_direct,
    }
}

pub fn modulated_energy(
    field: &TensorField,
    interface: &dyn Interface,
    t: f64,
    coeffs: &PotentialCoefficients,
    eps: f64,
    table: &GeodesicTable,
) -> Result<ModulatedEnergy> {
    Ok(modulated_from(field, &prepare(field, coeffs, eps, table, interface, t)?))
}

/// Per-cell projection `Pi grad Q`, phase-field normal `n_eps` and mean curvature `H_eps`.
#[derive(Clone, Debug)]
pub struct ProjectionFields {
    pub pi: Vec<[QTensor; 3]>,
    pub n_eps: Vec<Point>,
    pub h_eps: Vec<Point>,
}

fn unit_or_zero(g: &QTensor) -> Option<QTensor> {
    let n = g.norm();
    (n > 0.0).then(|| *g * (1.0 / n))
}

/// Normal oriented into `Omega+`; falls back to `xi/|xi|` (or 0) where `grad psi` degenerates.
fn oriented_normal(grad_psi: &Point, cal: &CalibrationSample) -> Point {
    let n = norm3(grad_psi);
    if n > 1e-8 {
        [-grad_psi[0] / n, -grad_psi[1] / n, -grad_psi[2] / n]
    } else {
        let nx = norm3(&cal.xi);
        if nx > 0.0 {
            [cal.xi[0] / nx, cal.xi[1] / nx, cal.xi[2] / nx]
        } else {
            [0.0; 3]
        }
    }
}

pub fn projection_from(field: &TensorField, p: &Prepared, rhs: &[QTensor], eps: f64) -> ProjectionFields {
    let dim = field.grid.dim;
    let n = field.data.len();
    let pi = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = [QTensor::ZERO; 3];
            if let Some(u) = unit_or_zero(&p.g[i]) {
                for k in 0..dim {
                    out[k] = u * p.grad[i][k].dot(&u);
                }
            }
            out
        })
        .collect();
    let n_eps = (0..n).map(|i| oriented_normal(&p.grad_psi[i], &p.cal[i])).collect();
    let h_eps = (0..n)
        .into_par_iter()
        .map(|i| {
            let gn = p.grad[i].iter().map(QTensor::norm_sq).sum::<f64>().sqrt();
            let mut h = [0.0; 3];
            if gn > 1e-12 {
                for k in 0..dim {
                    h[k] = -eps * rhs[i].dot(&p.grad[i][k]) / gn;
                }
            }
            h
        })
        .collect();
    ProjectionFields { pi, n_eps, h_eps }
}

pub fn projection_fields(
    field: &TensorField,
    interface: &dyn Interface,
    t: f64,
    coeffs: &PotentialCoefficients,
    eps: f64,
    table: &GeodesicTable,
) -> Result<ProjectionFields> {
    let p = prepare(field, coeffs, eps, table, interface, t)?;
    let rhs = ld_rhs(field, coeffs, eps);
    Ok(projection_from(field, &p, &rhs, eps))
}

/// Left-hand sides of the five energy bounds and their ratios to the modulated energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundSuite {
    pub a: f64,
    pub b: f64,
    pub btilde: f64,
    pub c: f64,
    pub d: f64,
    pub e_mod: f64,
    /// Each left-hand side over `max(E_mod, 1e-6 eps)`.
    pub ratios: [f64; 5],
    pub flagged: bool,
}

pub const DEFAULT_BOUND_CEILING: f64 = 50.0;

pub fn bounds_from(field: &TensorField, p: &Prepared, me: &ModulatedEnergy, eps: f64, ceiling: f64) -> BoundSuite {
    let dim = field.grid.dim;
    let se = eps.sqrt();
    let per_cell = |i: usize| {
        let grad2: f64 = p.grad[i][..dim].iter().map(QTensor::norm_sq).sum();
        let gn = p.g[i].norm();
        let pi2: f64 = match unit_or_zero(&p.g[i]) {
            Some(u) => p.grad[i][..dim].iter().map(|d| d.dot(&u).powi(2)).sum(),
            None => 0.0,
        };
        let perp2 = (grad2 - pi2).max(0.0);
        let gpsi = norm3(&p.grad_psi[i]);
        let n_eps = oriented_normal(&p.grad_psi[i], &p.cal[i]);
        let fe = p.fe[i];
        let b = 0.5 * (se * pi2.sqrt() - (2.0 * fe).sqrt() / se).powi(2) + 0.5 * eps * perp2;
        let bt = 0.5 * (se * pi2.sqrt() - gn / se).powi(2);
        let c = (se * grad2.sqrt() - gn / se).powi(2)
            + (1.0 - dot3(&p.cal[i].xi, &n_eps)) * (0.5 * eps * pi2 + gpsi);
        let d = (0.5 * eps * grad2 + fe / eps + gpsi) * (p.cal[i].d * p.cal[i].d).min(1.0);
        [gpsi, b, bt, c, d]
    };
    let rows: Vec<[f64; 5]> = (0..field.data.len()).into_par_iter().map(per_cell).collect();
    let vol = field.grid.cell_volume();
    let col = |k: usize| pairwise_sum(&rows.iter().map(|r| r[k]).collect::<Vec<_>>()) * vol;
    let a = p.e_gl - col(0);
    let (b, btilde, c, d) = (col(1), col(2), col(3), col(4));
    let den = me.e_mod.max(eps * 1e-6);
    let ratios = [a / den, b / den, btilde / den, c / den, d / den];
    BoundSuite {
        a,
        b,
        btilde,
        c,
        d,
        e_mod: me.e_mod,
        ratios,
        flagged: ratios.iter().any(|r| *r > ceiling),
    }
}

pub fn bound_suite(
    field: &TensorField,
    interface: &dyn Interface,
    t: f64,
    coeffs: &PotentialCoefficients,
    eps: f64,
    table: &GeodesicTable,
) -> Result<BoundSuite> {
    let p = prepare(field, coeffs, eps, table, interface, t)?;
    let me = modulated_from(field, &p);
    Ok(bounds_from(field, &p, &me, eps, DEFAULT_BOUND_CEILING))
}

/// Largest `|grad d^F(Q)| - sqrt(2 F_eps(Q))` over the cells.
pub fn lipschitz_excess(p: &Prepared) -> f64 {
    p.g.iter()
        .zip(&p.fe)
        .map(|(g, fe)| g.norm() - (2.0 * fe).sqrt())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per cell with `s` in `[s_lo, s_hi]`: `|grad psi - grad_q d^F : grad Q|` relative to
/// `|grad psi| + floor`. Returns the largest value.
pub fn chain_rule_defect(field: &TensorField, p: &Prepared, s_lo: f64, s_hi: f64, floor: f64) -> f64 {
    let dim = field.grid.dim;
    (0..field.data.len())
        .filter(|&i| (s_lo..=s_hi).contains(&biaxiality(&field.data[i]).s))
        .map(|i| {
            let mut diff = 0.0;
            for k in 0..dim {
                diff += (p.grad_psi[i][k] - p.g[i].dot(&p.grad[i][k])).powi(2);
            }
            diff.sqrt() / (norm3(&p.grad_psi[i]) + floor)
        })
        .fold(0.0, f64::max)
}

/// `T_ij = (eps/2 |grad Q|^2 + F_eps/eps) delta_ij - eps d_i Q : d_j Q` on the active axes.
pub fn stress_tensor(grad: &[QTensor; 3], fe: f64, eps: f64, dim: usize) -> [[f64; 3]; 3] {
    let grad2: f64 = grad[..dim].iter().map(QTensor::norm_sq).sum();
    let e = 0.5 * eps * grad2 + fe / eps;
    let mut t = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            t[i][j] = -eps * grad[i].dot(&grad[j]);
        }
        t[i][i] += e;
    }
    t
}

/// Relative L^2 size of `div T - H_eps |grad Q|` over cells with `|grad Q| > 1e-6`.
/// Cell stresses use forward (face) differences of `Q` and the divergence is the
/// backward difference, the adjoint pair of the face energy; the pair is first-order
/// consistent. Normalized by the L^2 size of `grad F : grad Q / eps`.
pub fn stress_divergence_residual(field: &TensorField, coeffs: &PotentialCoefficients, eps: f64) -> f64 {
    let grid = &field.grid;
    let dim = grid.dim;
    let n = field.data.len();
    let periodic = field.boundary.is_periodic();
    let stress: Vec<[[f64; 3]; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let m = grid.multi(i);
            let mut fwd = [QTensor::ZERO; 3];
            for (k, f) in fwd.iter_mut().enumerate().take(dim) {
                *f = (field.neighbor_value(m, k, true) - field.data[i]) * (1.0 / grid.h);
            }
            stress_tensor(&fwd, coeffs.regularized_energy(&field.data[i], eps), eps, dim)
        })
        .collect();
    let rhs = ld_rhs(field, coeffs, eps);
    let rows: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let grads = field.gradient(i);
            let grad2: f64 = grads[..dim].iter().map(QTensor::norm_sq).sum();
            if grad2.sqrt() <= 1e-6 {
                return [0.0; 2];
            }
            let m = grid.multi(i);
            let mut div = [0.0; 3];
            for k in 0..dim {
                let Neighbor::Cell(dn) = grid.neighbor(m, k, false, periodic) else {
                    return [0.0; 2];
                };
                for j in 0..dim {
                    div[j] += (stress[i][k][j] - stress[dn][k][j]) / grid.h;
                }
            }
            let bg = coeffs.bulk_gradient(&field.data[i]);
            let mut res = 0.0;
            let mut scale = 0.0;
            for j in 0..dim {
                let target = -eps * rhs[i].dot(&grads[j]);
                res += (div[j] - target).powi(2);
                scale += (bg.dot(&grads[j]) / eps).powi(2);
            }
            [res, scale]
        })
        .collect();
    let res = pairwise_sum(&rows.iter().map(|r| r[0]).collect::<Vec<_>>());
    let scale = pairwise_sum(&rows.iter().map(|r| r[1]).collect::<Vec<_>>());
    if scale == 0.0 {
        0.0
    } else {
        (res / scale).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorNorms {
    /// `(sum_i ||[d_i Q, Q]||^2_{L^2})^(1/2)`.
    pub grad_l2: f64,
    /// `||[d_t Q, Q]||_{L^2}`.
    pub time_l2: f64,
}

pub fn commutator_norms(field: &TensorField, rhs: &[QTensor]) -> CommutatorNorms {
    let dim = field.grid.dim;
    let grads = |i: usize| field.gradient(i);
    let g2 = integrate(field, |i| {
        let q = field.data[i];
        let gr = grads(i);
        gr[..dim].iter().map(|d| commutator(d, &q).frob_norm().powi(2)).sum()
    });
    let t2 = integrate(field, |i| commutator(&rhs[i], &field.data[i]).frob_norm().powi(2));
    CommutatorNorms {
        grad_l2: g2.sqrt(),
        time_l2: t2.sqrt(),
    }
}

/// Largest `|[grad d^F(Q), Q]| / (1 + |Q|^2)` over the cells.
pub fn gradient_commutator_defect(field: &TensorField, p: &Prepared) -> f64 {
    field
        .data
        .iter()
        .zip(&p.g)
        .map(|(q, g)| commutator(g, q).frob_norm() / (1.0 + q.norm_sq()))
        .fold(0.0, f64::max)
}

/// Per-cell degree of orientation `s`.
pub fn s_field(field: &TensorField) -> Vec<f64> {
    field.data.par_iter().map(|q| biaxiality(q).s).collect()
}

/// Fitted circle of the `level` set of `s` (2-D only).
pub fn interface_fit(field: &TensorField, level: f64) -> Result<CircleFit> {
    if field.grid.dim != 2 {
        return Err(Error::Domain("interface extraction needs a 2-D field".into()));
    }
    interface_extract(&field.grid, &s_field(field), level)
}

/// Derivative of the top eigenvector of `Q` along `dq`, by first-order perturbation.
fn director_derivative(es: &Eigensystem, dq: &QTensor) -> Point {
    let u = es.frame[2];
    let du = dq.to_matrix().mul_vec(u);
    let mut out = [0.0; 3];
    for k in 0..2 {
        let gap = es.lambda[2] - es.lambda[k];
        if gap > 1e-12 {
            let c = dot3(&es.frame[k], &du) / gap;
            for a in 0..3 {
                out[a] += c * es.frame[k][a];
            }
        }
    }
    out
}

/// Flips the directors on `mask` so neighbors agree in sign, by breadth-first
/// propagation from the first masked cell. Returns `false` when a neighbor pair is
/// closer to orthogonal than `|u . v| = 1/2`, the signature of a defect.
pub fn align_directors(field: &TensorField, mask: &[bool], dirs: &mut [[f64; 3]]) -> bool {
    let grid = &field.grid;
    let periodic = field.boundary.is_periodic();
    let mut seen = vec![false; dirs.len()];
    let mut ok = true;
    for seed in 0..dirs.len() {
        if !mask[seed] || seen[seed] {
            continue;
        }
        seen[seed] = true;
        let mut queue = std::collections::VecDeque::from([seed]);
        while let Some(i) = queue.pop_front() {
            let m = grid.multi(i);
            for k in 0..grid.dim {
                for hi in [false, true] {
                    let Neighbor::Cell(j) = grid.neighbor(m, k, hi, periodic) else { continue };
                    if !mask[j] {
                        continue;
                    }
                    let dp = dot3(&dirs[i], &dirs[j]);
                    if seen[j] {
                        if dp.abs() < 0.5 {
                            ok = false;
                        }
                        continue;
                    }
                    if dp < 0.0 {
                        dirs[j] = [-dirs[j][0], -dirs[j][1], -dirs[j][2]];
                    }
                    if dp.abs() < 0.5 {
                        ok = false;
                    }
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    ok
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectorComparison {
    /// `(sum min(|u - v|, |u + v|)^2 h^d)^(1/2)` over the compared cells.
    pub l2: f64,
    pub cells: usize,
    pub aligned: bool,
    /// Largest relative weak-form residual over the test-field basket.
    pub weak_residual: f64,
    /// Largest absolute weak-form residual over the basket.
    pub weak_residual_abs: f64,
}

/// Smooth vector test fields `phi(x) = v cos(k . x + phase)`.
pub fn test_field_basket() -> Vec<(Point, Point, f64)> {
    let v = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.6, 0.8, 0.0],
        [0.0, 0.6, 0.8],
        [0.8, 0.0, 0.6],
        [0.48, 0.6, 0.64],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
    ];
    let k = [
        [0.0, 0.0, 0.0],
        [3.0, 0.0, 0.0],
        [0.0, 3.0, 0.0],
        [2.0, 2.0, 0.0],
        [-2.0, 3.0, 1.0],
        [4.0, -1.0, 0.0],
        [1.0, 1.0, 1.0],
        [0.0, 5.0, 2.0],
        [5.0, 0.0, 0.0],
        [3.0, -4.0, 0.0],
    ];
    (0..10).map(|m| (v[m], k[m], 0.3 * m as f64)).collect()
}

/// Leading eigenvector of `Q` (top eigenvalue) and the eigensystem.
pub fn leading_director(q: &QTensor) -> ([f64; 3], Eigensystem) {
    let es = eigensystem(q);
    (es.frame[2], es)
}

/// Compares the directors of `field` against the harmonic-map state on the cells
/// of its mask, and evaluates the weak-form residual of
/// `int d_t u ^ u . phi + sum_j d_j u ^ u . d_j phi = 0` over the cells of
/// `weak_domain`. Test fields do not vanish on its boundary, so a nonzero
/// normal derivative there shows up in the residual.
pub fn director_compare(
    field: &TensorField,
    rhs: &[QTensor],
    hm: &DirectorState,
    weak_domain: &[bool],
) -> Result<DirectorComparison> {
    if hm.grid != field.grid {
        return Err(Error::Domain("director state lives on a different grid".into()));
    }
    let cells = hm.active_cells();
    if cells == 0 {
        return Err(Error::Extinction("no cells to compare".into()));
    }
    let n = field.data.len();
    let dim = field.grid.dim;
    let mut dirs: Vec<[f64; 3]> = field.data.iter().map(|q| leading_director(q).0).collect();
    let aligned = align_directors(field, &hm.mask, &mut dirs);
    let vol = field.grid.cell_volume();
    let dist2: Vec<f64> = (0..n)
        .map(|i| {
            if !hm.mask[i] {
                return 0.0;
            }
            let (u, v) = (dirs[i], hm.u[i]);
            let a = norm3(&[u[0] - v[0], u[1] - v[1], u[2] - v[2]]);
            let b = norm3(&[u[0] + v[0], u[1] + v[1], u[2] + v[2]]);
            a.min(b).powi(2)
        })
        .collect();
    let l2 = (pairwise_sum(&dist2) * vol).sqrt();

    // Wedge currents per masked cell.
    struct Cur {
        x: Point,
        time: Point,
        space: [Point; 3],
        ut2: f64,
        ux2: f64,
    }
    let currents: Vec<Cur> = (0..n)
        .filter(|&i| weak_domain[i])
        .map(|i| {
            let (u, es) = leading_director(&field.data[i]);
            let ut = director_derivative(&es, &rhs[i]);
            let g = field.gradient(i);
            let mut space = [[0.0; 3]; 3];
            let mut ux2 = 0.0;
            for k in 0..dim {
                let uk = director_derivative(&es, &g[k]);
                ux2 += dot3(&uk, &uk);
                space[k] = cross3(&uk, &u);
            }
            Cur {
                x: field.grid.center(i),
                time: cross3(&ut, &u),
                space,
                ut2: dot3(&ut, &ut),
                ux2,
            }
        })
        .collect();
    let ut_norm = (currents.iter().map(|c| c.ut2).sum::<f64>() * vol).sqrt();
    let ux_norm = (currents.iter().map(|c| c.ux2).sum::<f64>() * vol).sqrt();
    let mut weak_residual: f64 = 0.0;
    let mut weak_residual_abs: f64 = 0.0;
    for (v, k, ph) in test_field_basket() {
        let mut acc = Vec::with_capacity(currents.len());
        let (mut phi2, mut dphi2) = (0.0, 0.0);
        for c in &currents {
            let arg = dot3(&k, &c.x) + ph;
            let (s, co) = arg.sin_cos();
            let phi = [v[0] * co, v[1] * co, v[2] * co];
            let mut term = dot3(&c.time, &phi);
            for j in 0..dim {
                let dphi = [-v[0] * s * k[j], -v[1] * s * k[j], -v[2] * s * k[j]];
                term += dot3(&c.space[j], &dphi);
                dphi2 += dot3(&dphi, &dphi);
            }
            phi2 += dot3(&phi, &phi);
            acc.push(term);
        }
        let res = (pairwise_sum(&acc) * vol).abs();
        let norm = ut_norm * (phi2 * vol).sqrt() + ux_norm * (dphi2 * vol).sqrt();
        weak_residual_abs = weak_residual_abs.max(res);
        if norm > 0.0 {
            weak_residual = weak_residual.max(res / norm);
        }
    }
    Ok(DirectorComparison {
        l2,
        cells,
        aligned,
        weak_residual,
        weak_residual_abs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GronwallReport {
    /// Smallest `C >= 0` with `E(t) <= E(0) e^{C t}` at every record.
    pub c_fit: f64,
    /// Largest `E(t)/E(0)`.
    pub max_ratio: f64,
    pub ok: bool,
}

pub const DEFAULT_GRONWALL_CEILING: f64 = 100.0;

/// Energies below `1e-6 eps` are floored there before taking logarithms.
pub fn gronwall_report(times: &[f64], e_mod: &[f64], eps: f64, ceiling: f64) -> Result<GronwallReport> {
    if times.len() < 10 || times.len() != e_mod.len() {
        return Err(Error::Domain(format!("need at least 10 records, got {}", times.len())));
    }
    let floor = eps * 1e-6;
    let e0 = e_mod[0].max(floor);
    let mut c_fit: f64 = 0.0;
    let mut max_ratio: f64 = 1.0;
    for (&t, &e) in times.iter().zip(e_mod).skip(1) {
        let e = e.max(floor);
        max_ratio = max_ratio.max(e / e0);
        let dt = t - times[0];
        if dt > 0.0 {
            c_fit = c_fit.max((e / e0).ln() / dt);
        }
    }
    let within = times
        .iter()
        .zip(e_mod)
        .all(|(&t, &e)| e.max(floor) <= (c_fit * (1.0 + t - times[0])).exp() * e0 * (1.0 + 1e-12));
    Ok(GronwallReport {
        c_fit,
        max_ratio,
        ok: within && c_fit <= ceiling && max_ratio <= 5.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WellPreparedness {
    pub e_gl: f64,
    pub e_mod0: f64,
    /// `E_mod(0) / eps`.
    pub ratio: f64,
    pub nonnegative: bool,
}

pub fn well_preparedness_report(
    field: &TensorField,
    interface: &dyn Interface,
    coeffs: &PotentialCoefficients,
    eps: f64,
    table: &GeodesicTable,
) -> Result<WellPreparedness> {
    let me = modulated_energy(field, interface, 0.0, coeffs, eps, table)?;
    Ok(WellPreparedness {
        e_gl: me.e_gl,
        e_mod0: me.e_mod,
        ratio: me.e_mod / eps,
        nonnegative: me.e_mod >= -1e-8,
    })
}

/// One row of the time series.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_gl: f64,
    pub e_mod: f64,
    pub e_mod_over_eps: f64,
    pub dissipation_cum: f64,
    /// `|E_gl(t) + dissipation_cum - E_gl(0)|`.
    pub dissipation_residual: f64,
    pub r_fit: f64,
    pub r_exact: f64,
    pub max_abs_q: f64,
    pub comm_grad_l2: f64,
    pub comm_time_l2: f64,
    pub bounds: [f64; 5],
    pub stress_residual: f64,
    /// Not written to the CSV.
    pub quadrature_mismatch: f64,
    pub bounds_flagged: bool,
}

impl DiagnosticsRecord {
    pub fn values(&self) -> [f64; 17] {
        [
            self.t,
            self.e_gl,
            self.e_mod,
            self.e_mod_over_eps,
            self.dissipation_cum,
            self.dissipation_residual,
            self.r_fit,
            self.r_exact,
            self.max_abs_q,
            self.comm_grad_l2,
            self.comm_time_l2,
            self.bounds[0],
            self.bounds[1],
            self.bounds[2],
            self.bounds[3],
            self.bounds[4],
            self.stress_residual,
        ]
    }
}

/// Everything needed to turn solver samples into records.
pub struct Monitor<'a> {
    pub coeffs: PotentialCoefficients,
    pub eps: f64,
    pub table: &'a GeodesicTable,
    pub interface: &'a dyn Interface,
    /// Level for the interface fit, as a fraction of `s_plus`.
    pub level_fraction: f64,
    pub bound_ceiling: f64,
    pub e_gl0: Option<f64>,
}

impl<'a> Monitor<'a> {
    pub fn new(coeffs: PotentialCoefficients, eps: f64, table: &'a GeodesicTable, interface: &'a dyn Interface) -> Self {
        Monitor {
            coeffs,
            eps,
            table,
            interface,
            level_fraction: 0.5,
            bound_ceiling: DEFAULT_BOUND_CEILING,
            e_gl0: None,
        }
    }

    pub fn record(&mut self, sample: &Sample) -> Result<DiagnosticsRecord> {
        let field = sample.field;
        let t = field.t;
        let p = prepare(field, &self.coeffs, self.eps, self.table, self.interface, t)?;
        let me = modulated_from(field, &p);
        let e_gl0 = *self.e_gl0.get_or_insert(me.e_gl);
        let bounds = bounds_from(field, &p, &me, self.eps, self.bound_ceiling);
        let comm = commutator_norms(field, sample.rhs);
        let level = self.level_fraction * self.coeffs.s_plus()?;
        let r_fit = if field.grid.dim == 2 {
            interface_fit(field, level).map(|f| f.radius).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        Ok(DiagnosticsRecord {
            t,
            e_gl: me.e_gl,
            e_mod: me.e_mod,
            e_mod_over_eps: me.e_mod / self.eps,
            dissipation_cum: sample.dissipation,
            dissipation_residual: (me.e_gl + sample.dissipation - e_gl0).abs(),
            r_fit,
            r_exact: self.interface.reference_radius(t).unwrap_or(f64::NAN),
            max_abs_q: field.max_norm(),
            comm_grad_l2: comm.grad_l2,
            comm_time_l2: comm.time_l2,
            bounds: bounds.ratios,
            stress_residual: stress_divergence_residual(field, &self.coeffs, self.eps),
            quadrature_mismatch: me.quadrature_mismatch(),
            bounds_flagged: bounds.flagged,
        })
    }
}
