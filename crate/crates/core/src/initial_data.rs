//! Well-prepared initial data: the optimal one-dimensional profile glued along
//! the initial interface, times a director preset.

use crate::error::{Error, Result};
use crate::grid::{Boundary, TensorField, UniformGrid};
use crate::interface::{Interface, Point};
use crate::potential::PotentialCoefficients;
use crate::qtensor::QTensor;

/// Optimal profile `S(z) = s_plus/2 (1 + tanh(sqrt(a) z / 2))`.
pub fn optimal_profile(coeffs: &PotentialCoefficients, z: f64) -> f64 {
    0.5 * coeffs.s_plus_unchecked() * (1.0 + (0.5 * coeffs.a.sqrt() * z).tanh())
}

pub fn optimal_profile_deriv(coeffs: &PotentialCoefficients, z: f64) -> f64 {
    let th = (0.5 * coeffs.a.sqrt() * z).tanh();
    0.25 * coeffs.s_plus_unchecked() * coeffs.a.sqrt() * (1.0 - th * th)
}

/// Plateau cutoff: 1 on `|z| <= 1/2`, 0 on `|z| >= 1`, symmetric cubic smoothstep between.
pub fn zeta(z: f64) -> f64 {
    let a = z.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let t = (a - 0.5) / 0.5;
        1.0 - t * t * (3.0 - 2.0 * t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileParams {
    pub eps: f64,
    /// Blending width `delta0`.
    pub delta0: f64,
}

impl ProfileParams {
    pub fn new(eps: f64, delta0: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::config("model.eps", format!("must be positive, got {eps}")));
        }
        if !(delta0 > 0.0 && delta0.is_finite()) {
            return Err(Error::config("init.delta0", format!("must be positive, got {delta0}")));
        }
        Ok(ProfileParams { eps, delta0 })
    }

    /// Non-fatal remarks about the parameter choice.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.delta0 / self.eps < 10.0 {
            w.push(format!(
                "delta0/eps = {:.3} < 10: the profile is not saturated before blending",
                self.delta0 / self.eps
            ));
        }
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DirectorPreset {
    Constant([f64; 3]),
    /// `u = (cos(kappa x_1), sin(kappa x_1), 0)`.
    InPlaneAngle { kappa: f64 },
}

impl DirectorPreset {
    pub fn constant(u: [f64; 3]) -> Result<Self> {
        let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::config("init.u0", "director must be nonzero"));
        }
        Ok(DirectorPreset::Constant([u[0] / n, u[1] / n, u[2] / n]))
    }

    pub fn eval(&self, x: &Point) -> [f64; 3] {
        match *self {
            DirectorPreset::Constant(u) => u,
            DirectorPreset::InPlaneAngle { kappa } => {
                let a = kappa * x[0];
                [a.cos(), a.sin(), 0.0]
            }
        }
    }
}

/// `zeta(d/delta0) S(d/eps) + (1 - zeta(d/delta0)) s_plus 1{d > 0}`.
pub fn s_tilde_at_distance(coeffs: &PotentialCoefficients, params: &ProfileParams, d: f64) -> f64 {
    let z = zeta(d / params.delta0);
    let outer = if d > 0.0 { coeffs.s_plus_unchecked() } else { 0.0 };
    if z == 1.0 {
        optimal_profile(coeffs, d / params.eps)
    } else if z == 0.0 {
        outer
    } else {
        z * optimal_profile(coeffs, d / params.eps) + (1.0 - z) * outer
    }
}

pub fn s_tilde(
    x: &Point,
    interface: &dyn Interface,
    coeffs: &PotentialCoefficients,
    params: &ProfileParams,
) -> Result<f64> {
    Ok(s_tilde_at_distance(coeffs, params, interface.signed_distance(x, 0.0)?))
}

/// Per-cell `s_tilde(x) (u(x) u(x) - I/3)` with zero Dirichlet data.
pub fn build(
    interface: &dyn Interface,
    director: &DirectorPreset,
    coeffs: &PotentialCoefficients,
    params: &ProfileParams,
    grid: &UniformGrid,
) -> Result<TensorField> {
    if interface.dim() != grid.dim {
        return Err(Error::config(
            "domain.dim",
            format!("interface dimension {} differs from grid dimension {}", interface.dim(), grid.dim),
        ));
    }
    let mut data = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let x = grid.center(idx);
        let s = s_tilde(&x, interface, coeffs, params)?;
        if grid.is_boundary_cell(idx) && s != 0.0 {
            return Err(Error::config(
                "init.delta0",
                format!("initial transition layer reaches the boundary cell at {x:?} (s = {s})"),
            ));
        }
        data.push(QTensor::uniaxial_unchecked(s, director.eval(&x)));
    }
    Ok(TensorField {
        grid: grid.clone(),
        boundary: Boundary::zero(),
        data,
        t: 0.0,
    })
}

/// A one-dimensional front `S((x_1 - offset)/eps)(u0 u0 - I/3)` with ghost data
/// clamped to the profile values just outside the domain.
pub fn standing_profile(
    grid: &UniformGrid,
    coeffs: &PotentialCoefficients,
    eps: f64,
    u0: [f64; 3],
    offset: f64,
) -> TensorField {
    let q_at = |x: f64| QTensor::uniaxial_unchecked(optimal_profile(coeffs, (x - offset) / eps), u0);
    let mut lo = [QTensor::ZERO; 3];
    let mut hi = [QTensor::ZERO; 3];
    lo[0] = q_at(grid.lo[0] - 0.5 * grid.h);
    hi[0] = q_at(grid.lo[0] + (grid.n[0] as f64 + 0.5) * grid.h);
    // Transverse axes carry the same profile, so their ghosts copy the neighbor cell;
    // constant faces cannot express that, hence 1-D only.
    let data = (0..grid.len()).map(|i| q_at(grid.center(i)[0])).collect();
    TensorField {
        grid: grid.clone(),
        boundary: Boundary::Dirichlet { lo, hi },
        data,
        t: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::ShrinkingSphere;
    use approx::assert_abs_diff_eq;

    fn coeffs() -> PotentialCoefficients {
        PotentialCoefficients::default()
    }

    #[test]
    fn profile_examples() {
        let c = coeffs();
        assert_eq!(optimal_profile(&c, 0.0), 1.5);
        assert_abs_diff_eq!(optimal_profile(&c, 40.0), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(optimal_profile(&c, -40.0), 0.0, epsilon = 1e-12);
        for z in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let s = optimal_profile(&c, z);
            let lhs = optimal_profile_deriv(&c, z);
            let rhs = (3.0 * c.uniaxial_f(s)).sqrt();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs);
            let h = 1e-5;
            let fd = (optimal_profile(&c, z + h) - optimal_profile(&c, z - h)) / (2.0 * h);
            assert!((fd - lhs).abs() <= 1e-8);
        }
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta(0.3), 1.0);
        assert_eq!(zeta(1.2), 0.0);
        assert_eq!(zeta(0.75), 0.5);
        let mut prev = 1.0;
        for k in 0..=200 {
            let z = zeta(0.01 * k as f64);
            assert!(z <= prev);
            prev = z;
        }
    }

    #[test]
    fn s_tilde_regions() {
        let c = coeffs();
        let p = ProfileParams::new(0.02, 0.2).unwrap();
        assert_eq!(s_tilde_at_distance(&c, &p, 0.25), 3.0);
        assert_eq!(s_tilde_at_distance(&c, &p, 0.05), optimal_profile(&c, 2.5));
        assert_eq!(s_tilde_at_distance(&c, &p, -0.1), optimal_profile(&c, -5.0));
        assert_eq!(s_tilde_at_distance(&c, &p, -0.2), 0.0);
        for k in 0..100 {
            let d = 0.002 * k as f64;
            let s = s_tilde_at_distance(&c, &p, d);
            assert!((s - 3.0).abs() <= 3.0 * 3.0 * (-3f64.sqrt() * d / p.eps).exp() + 1e-15);
        }
    }

    #[test]
    fn build_examples() {
        let c = coeffs();
        let grid = UniformGrid::cube(2, 80, 1.0).unwrap();
        let sphere = ShrinkingSphere::new([0.0; 3], 0.4, 2, 0.2, 1.0).unwrap();
        let p = ProfileParams::new(0.04, 0.2).unwrap();
        let u0 = [0.0, 0.0, 1.0];
        let f = build(&sphere, &DirectorPreset::Constant(u0), &c, &p, &grid).unwrap();
        let center_cell = grid.linear([40, 40, 0]);
        let expected = QTensor::uniaxial(3.0, u0).unwrap();
        assert!((f.data[center_cell] - expected).norm() <= 1e-12);
        for idx in 0..grid.len() {
            if grid.is_boundary_cell(idx) {
                assert_eq!(f.data[idx], QTensor::ZERO);
            }
        }
        assert!(f.max_norm() <= 3.0 * (2.0f64 / 3.0).sqrt() + 1e-12);
        // A point on I_0.
        let x = [0.4, 0.0, 0.0];
        let s = s_tilde(&x, &sphere, &c, &p).unwrap();
        assert_eq!(s, 1.5);
        assert_abs_diff_eq!(QTensor::uniaxial(s, u0).unwrap().norm(), 1.5 * (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn layer_touching_boundary_is_rejected() {
        let c = coeffs();
        let grid = UniformGrid::cube(2, 40, 1.0).unwrap();
        let sphere = ShrinkingSphere::new([0.0; 3], 0.4, 2, 0.2, 1.0).unwrap();
        let p = ProfileParams::new(0.04, 0.9).unwrap();
        assert!(build(&sphere, &DirectorPreset::Constant([1.0, 0.0, 0.0]), &c, &p, &grid).is_err());
        assert!(!ProfileParams::new(0.04, 0.2).unwrap().warnings().is_empty());
        assert!(ProfileParams::new(0.01, 0.2).unwrap().warnings().is_empty());
        assert!(ProfileParams::new(0.0, 0.2).is_err());
    }

    #[test]
    fn in_plane_director_is_unit() {
        let d = DirectorPreset::InPlaneAngle { kappa: 0.5 };
        for k in 0..100 {
            let u = d.eval(&[-1.0 + 0.02 * k as f64, 0.3, 0.0]);
            assert!(((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt() - 1.0).abs() <= 1e-12);
        }
    }
}
