//! Algebra of 3x3 symmetric traceless tensors.
//!
//! A [`QTensor`] is stored as its five coefficients on the orthonormal basis
//! `E1..E5` of the traceless symmetric matrices, so symmetry and zero trace hold
//! structurally. The dense [`Mat3`] view is computed on demand.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;
/// Diagonal entries of `E1`/`E2`: `(sqrt3 - 3)/6` and `(sqrt3 + 3)/6`.
const DIAG_LO: f64 = (SQRT_3 - 3.0) / 6.0;
const DIAG_HI: f64 = (SQRT_3 + 3.0) / 6.0;
const DIAG_Z: f64 = -SQRT_3 / 3.0;

/// Dense 3x3 matrix, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn diag(d: [f64; 3]) -> Self {
        Mat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn outer(u: [f64; 3], v: [f64; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = u[i] * v[j];
            }
        }
        Mat3(m)
    }

    /// Rotation by `angle` about the unit `axis` (Rodrigues formula).
    pub fn rotation(axis: [f64; 3], angle: f64) -> Self {
        let n = norm3(axis);
        let k = [axis[0] / n, axis[1] / n, axis[2] / n];
        let (s, c) = angle.sin_cos();
        let kx = Mat3([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]]);
        Mat3::IDENTITY + kx * s + (kx * kx) * (1.0 - c)
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Frobenius inner product `A:B`.
    pub fn contract(&self, other: &Mat3) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += self.0[i][j] * other.0[i][j];
            }
        }
        acc
    }

    pub fn frob_norm(&self) -> f64 {
        self.contract(self).sqrt()
    }

    /// Largest entrywise deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.0;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }

    /// The vector `w` with `M v = w x v` for antisymmetric `M`, i.e. `(M32, M13, M21)`.
    pub fn axial_vector(&self) -> [f64; 3] {
        let m = &self.0;
        [
            0.5 * (m[2][1] - m[1][2]),
            0.5 * (m[0][2] - m[2][0]),
            0.5 * (m[1][0] - m[0][1]),
        ]
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(mut self, rhs: Mat3) -> Mat3 {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(mut self, rhs: Mat3) -> Mat3 {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(mut self, s: f64) -> Mat3 {
        for row in self.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        self
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j] + self.0[i][2] * rhs.0[2][j];
            }
        }
        Mat3(out)
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self * -1.0
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

pub(crate) fn cross3(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn scale3(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}

/// A point of the five-dimensional space of symmetric traceless 3x3 matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QTensor(pub [f64; 5]);

impl QTensor {
    pub const ZERO: QTensor = QTensor([0.0; 5]);

    /// The `i`-th orthonormal basis tensor (`0..5`).
    pub fn basis(i: usize) -> QTensor {
        let mut c = [0.0; 5];
        c[i] = 1.0;
        QTensor(c)
    }

    /// `sum_i c_i E_i` as a dense matrix.
    pub fn to_matrix(&self) -> Mat3 {
        let c = &self.0;
        let m00 = c[0] * DIAG_LO + c[1] * DIAG_HI;
        let m11 = c[0] * DIAG_HI + c[1] * DIAG_LO;
        let m22 = (c[0] + c[1]) * DIAG_Z;
        let m01 = c[2] * FRAC_1_SQRT_2;
        let m02 = c[3] * FRAC_1_SQRT_2;
        let m12 = c[4] * FRAC_1_SQRT_2;
        Mat3([[m00, m01, m02], [m01, m11, m12], [m02, m12, m22]])
    }

    /// Orthogonal projection of an arbitrary matrix onto the basis.
    ///
    /// Exact inverse of [`to_matrix`](Self::to_matrix) on symmetric traceless input;
    /// for other input it returns the nearest symmetric traceless tensor.
    pub fn from_matrix(m: &Mat3) -> QTensor {
        let m = &m.0;
        QTensor([
            m[0][0] * DIAG_LO + m[1][1] * DIAG_HI + m[2][2] * DIAG_Z,
            m[0][0] * DIAG_HI + m[1][1] * DIAG_LO + m[2][2] * DIAG_Z,
            (m[0][1] + m[1][0]) * FRAC_1_SQRT_2,
            (m[0][2] + m[2][0]) * FRAC_1_SQRT_2,
            (m[1][2] + m[2][1]) * FRAC_1_SQRT_2,
        ])
    }

    /// `s (u (x) u - I/3)`; `u` must be a unit vector.
    pub fn uniaxial(s: f64, u: [f64; 3]) -> Result<QTensor> {
        let n = norm3(u);
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("director must be a unit vector, |u| = {n}")));
        }
        Ok(Self::uniaxial_unchecked(s, u))
    }

    pub(crate) fn uniaxial_unchecked(s: f64, u: [f64; 3]) -> QTensor {
        let m = (Mat3::outer(u, u) - Mat3::IDENTITY * (1.0 / 3.0)) * s;
        QTensor::from_matrix(&m)
    }

    pub fn dot(&self, other: &QTensor) -> f64 {
        let (a, b) = (&self.0, &other.0);
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3] + a[4] * b[4]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `R Q R^T`.
    pub fn rotate(&self, r: &Mat3) -> QTensor {
        QTensor::from_matrix(&(*r * self.to_matrix() * r.transpose()))
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(mut self, rhs: QTensor) -> QTensor {
        self += rhs;
        self
    }
}

impl AddAssign for QTensor {
    fn add_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(mut self, rhs: QTensor) -> QTensor {
        self -= rhs;
        self
    }
}

impl SubAssign for QTensor {
    fn sub_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    fn mul(mut self, s: f64) -> QTensor {
        for a in self.0.iter_mut() {
            *a *= s;
        }
        self
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    fn neg(self) -> QTensor {
        self * -1.0
    }
}

/// `basis_embed`: dense matrix `sum_i c_i E_i`.
pub fn basis_embed(coeffs: [f64; 5]) -> Mat3 {
    QTensor(coeffs).to_matrix()
}

/// `basis_project`: coefficients of a matrix on `E1..E5`.
pub fn basis_project(m: &Mat3) -> [f64; 5] {
    QTensor::from_matrix(m).0
}

/// `A:B` for tensors.
pub fn contract(a: &QTensor, b: &QTensor) -> f64 {
    a.dot(b)
}

pub fn frob_norm(a: &QTensor) -> f64 {
    a.norm()
}

/// `AB - BA`, an antisymmetric matrix.
pub fn commutator(a: &QTensor, b: &QTensor) -> Mat3 {
    commutator_mat(&a.to_matrix(), &b.to_matrix())
}

pub fn commutator_mat(a: &Mat3, b: &Mat3) -> Mat3 {
    *a * *b - *b * *a
}

/// Ordered eigenvalues `lambda[0] <= lambda[1] <= lambda[2]` and the matching
/// orthonormal eigenvectors `frame[i]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigensystem {
    pub lambda: [f64; 3],
    pub frame: [[f64; 3]; 3],
}

impl Eigensystem {
    pub fn reconstruct(&self) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            m = m + Mat3::outer(self.frame[i], self.frame[i]) * self.lambda[i];
        }
        m
    }
}

/// Degree of orientation `s` and biaxiality `r` of a tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biaxiality {
    pub s: f64,
    pub r: f64,
}

/// Eigen-decomposition of a symmetric 3x3 matrix.
///
/// Eigenvalues come from the trigonometric closed form. The eigenvector of the
/// eigenvalue with the larger spectral gap is taken from the best-conditioned
/// cross product of rows of `A - lambda I`; the remaining pair is resolved by an
/// exact 2x2 rotation inside the orthogonal complement, which returns a valid
/// frame even for a repeated pair. Eigenvalues are then refreshed as Rayleigh
/// quotients. If the reconstruction residual still exceeds `1e-11 (1 + |A|)`
/// the result is replaced by cyclic Jacobi iteration.
pub fn eigensystem_mat(a: &Mat3) -> Eigensystem {
    let es = closed_form(a);
    let scale = 1.0 + a.frob_norm();
    if (es.reconstruct() - *a).frob_norm() <= 1e-11 * scale {
        es
    } else {
        jacobi(a)
    }
}

pub fn eigensystem(q: &QTensor) -> Eigensystem {
    eigensystem_mat(&q.to_matrix())
}

/// `s = 3/2 lambda_3`, `r = 3/2 (lambda_2 - lambda_1)`.
pub fn biaxiality(q: &QTensor) -> Biaxiality {
    biaxiality_of(&eigensystem(q))
}

pub fn biaxiality_of(es: &Eigensystem) -> Biaxiality {
    Biaxiality {
        s: 1.5 * es.lambda[2],
        r: (1.5 * (es.lambda[1] - es.lambda[0])).max(0.0),
    }
}

fn closed_form(a: &Mat3) -> Eigensystem {
    let m = &a.0;
    let off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = a.trace() / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    if p <= f64::MIN_POSITIVE.sqrt() {
        return Eigensystem {
            lambda: [q; 3],
            frame: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        };
    }
    let b = (*a - Mat3::IDENTITY * q) * (1.0 / p);
    let r = (b.det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l3 = q + 2.0 * p * phi.cos();
    let l1 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;

    // Resolve first the eigenvalue that is farther from the middle one.
    let (lead, lead_slot) = if l3 - l2 >= l2 - l1 { (l3, 2) } else { (l1, 0) };
    let v = kernel_vector(&(*a - Mat3::IDENTITY * lead));
    let (e1, e2) = complement_basis(v);
    let av1 = a.mul_vec(e1);
    let av2 = a.mul_vec(e2);
    let m00 = dot3(e1, av1);
    let m01 = dot3(e1, av2);
    let m11 = dot3(e2, av2);
    let theta = 0.5 * (2.0 * m01).atan2(m00 - m11);
    let (st, ct) = theta.sin_cos();
    let w_big = [
        ct * e1[0] + st * e2[0],
        ct * e1[1] + st * e2[1],
        ct * e1[2] + st * e2[2],
    ];
    let w_small = [
        -st * e1[0] + ct * e2[0],
        -st * e1[1] + ct * e2[1],
        -st * e1[2] + ct * e2[2],
    ];
    let mut pairs = [(0.0, [0.0; 3]); 3];
    let rq = |x: [f64; 3]| dot3(x, a.mul_vec(x));
    pairs[lead_slot] = (rq(v), v);
    let others = if lead_slot == 2 { [0usize, 1] } else { [1usize, 2] };
    pairs[others[0]] = (rq(w_small), w_small);
    pairs[others[1]] = (rq(w_big), w_big);
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Eigensystem {
        lambda: [pairs[0].0, pairs[1].0, pairs[2].0],
        frame: [pairs[0].1, pairs[1].1, pairs[2].1],
    }
}

/// Unit vector spanning the (numerical) kernel of a rank-2 symmetric matrix.
fn kernel_vector(m: &Mat3) -> [f64; 3] {
    let r = &m.0;
    let c = [cross3(r[0], r[1]), cross3(r[1], r[2]), cross3(r[2], r[0])];
    let best = c
        .iter()
        .copied()
        .max_by(|x, y| dot3(*x, *x).total_cmp(&dot3(*y, *y)))
        .unwrap_or([0.0, 0.0, 1.0]);
    let n = norm3(best);
    if n > 0.0 {
        scale3(best, 1.0 / n)
    } else {
        [0.0, 0.0, 1.0]
    }
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `v`.
fn complement_basis(v: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if v[0].abs() <= v[1].abs() && v[0].abs() <= v[2].abs() {
        [1.0, 0.0, 0.0]
    } else if v[1].abs() <= v[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = cross3(v, helper);
    let e1 = scale3(e1, 1.0 / norm3(e1));
    let e2 = cross3(v, e1);
    (e1, e2)
}

fn jacobi(a: &Mat3) -> Eigensystem {
    let mut m = a.0;
    let mut v = Mat3::IDENTITY.0;
    for _sweep in 0..50 {
        let off = m[0][1].abs() + m[0][2].abs() + m[1][2].abs();
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut pairs: Vec<(f64, [f64; 3])> = (0..3)
        .map(|k| (m[k][k], [v[0][k], v[1][k], v[2][k]]))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Eigensystem {
        lambda: [pairs[0].0, pairs[1].0, pairs[2].0],
        frame: [pairs[0].1, pairs[1].1, pairs[2].1],
    }
}
