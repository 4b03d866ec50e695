//! Sharp interfaces evolving by mean curvature flow, with the calibration
//! field `xi = eta(d) n_I` and the extended mean curvature `H_I`.

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Everything the diagnostics need from the interface at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CalibrationSample {
    /// Signed distance, positive inside `Omega+`.
    pub d: f64,
    /// Inner unit normal at the nearest point (zero where undefined and unused).
    pub n_i: Point,
    pub xi: Point,
    pub div_xi: f64,
    pub h_i: Point,
    pub eta: f64,
}

/// An interface `I_t` that the phase field is compared against.
pub trait Interface: Sync {
    fn dim(&self) -> usize;
    fn delta_i(&self) -> f64;
    /// Last time at which the tubular neighborhood is valid.
    fn t_valid(&self) -> f64;
    fn signed_distance(&self, x: &Point, t: f64) -> Result<f64>;
    fn calibration(&self, x: &Point, t: f64) -> Result<CalibrationSample>;
    /// Radius of the exact solution, for interfaces that have one.
    fn reference_radius(&self, _t: f64) -> Option<f64> {
        None
    }
}

/// Cubic smoothstep falling from 1 at `z <= 0` to 0 at `z >= 1`.
fn falloff(z: f64) -> f64 {
    let z = z.clamp(0.0, 1.0);
    1.0 - z * z * (3.0 - 2.0 * z)
}

fn falloff_deriv(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        -6.0 * z * (1.0 - z)
    }
}

/// Cutoff `eta`: `1 - z^2` on `|z| <= delta/2`, zero beyond `delta`, and
/// `(1 - z^2)` times a cubic smoothstep in between.
pub fn eta(z: f64, delta: f64) -> f64 {
    let a = z.abs();
    if a >= delta {
        return 0.0;
    }
    let base = 1.0 - a * a;
    if a <= 0.5 * delta {
        base
    } else {
        base * falloff((a - 0.5 * delta) / (0.5 * delta))
    }
}

pub fn eta_deriv(z: f64, delta: f64) -> f64 {
    let a = z.abs();
    if a >= delta {
        return 0.0;
    }
    let sign = if z < 0.0 { -1.0 } else { 1.0 };
    let base = 1.0 - a * a;
    let d = if a <= 0.5 * delta {
        -2.0 * a
    } else {
        let tau = (a - 0.5 * delta) / (0.5 * delta);
        -2.0 * a * falloff(tau) + base * falloff_deriv(tau) / (0.5 * delta)
    };
    sign * d
}

/// Cutoff for `H_I`: identically 1 on `|z| <= delta/2`, smoothstep to 0 at `delta`.
pub fn eta_tilde(z: f64, delta: f64) -> f64 {
    let a = z.abs();
    if a <= 0.5 * delta {
        1.0
    } else {
        falloff((a - 0.5 * delta) / (0.5 * delta))
    }
}

/// A sphere (`dim = 3`) or circle (`dim = 2`) shrinking by mean curvature:
/// `R(t) = sqrt(R0^2 - 2(dim - 1)t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkingSphere {
    pub center: Point,
    pub r0: f64,
    pub dim: usize,
    pub delta_i: f64,
    t_valid: f64,
}

impl ShrinkingSphere {
    /// Checks that the ball of radius `r0 + delta_i` sits strictly inside `[-half_width, half_width]^dim`.
    /// The validity window ends when `R(t) = delta_i`, where the tube would reach the center.
    pub fn new(center: Point, r0: f64, dim: usize, delta_i: f64, half_width: f64) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::config("domain.dim", format!("shrinking sphere needs dim 2 or 3, got {dim}")));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::config("interface.R0", format!("must be positive, got {r0}")));
        }
        if !(delta_i > 0.0 && delta_i < 1.0) {
            return Err(Error::config("interface.delta_I", format!("must lie in (0, 1), got {delta_i}")));
        }
        if delta_i >= r0 {
            return Err(Error::config(
                "interface.delta_I",
                format!("tube half-width {delta_i} must be below R0 = {r0}"),
            ));
        }
        for (k, c) in center.iter().enumerate().take(dim) {
            if c.abs() + r0 + delta_i >= half_width {
                return Err(Error::config(
                    "interface.center",
                    format!("ball of radius R0 + delta_I = {} around the center leaves the domain along axis {k}", r0 + delta_i),
                ));
            }
        }
        let t_valid = (r0 * r0 - delta_i * delta_i) / (2.0 * (dim as f64 - 1.0));
        Ok(ShrinkingSphere {
            center,
            r0,
            dim,
            delta_i,
            t_valid,
        })
    }

    pub fn extinction_time(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * (self.dim as f64 - 1.0))
    }

    /// Exact radius; unlike [`radius`](Self::radius) this is defined up to extinction.
    pub fn exact_radius(&self, t: f64) -> Option<f64> {
        let r2 = self.r0 * self.r0 - 2.0 * (self.dim as f64 - 1.0) * t;
        (r2 >= 0.0).then(|| r2.sqrt())
    }

    pub fn radius(&self, t: f64) -> Result<f64> {
        if t > self.t_valid + 1e-12 || t < 0.0 {
            return Err(Error::Domain(format!("t = {t} outside validity window [0, {}]", self.t_valid)));
        }
        Ok(self.exact_radius(t).unwrap_or(0.0))
    }

    fn offset(&self, x: &Point) -> (Point, f64) {
        let mut v = [0.0; 3];
        for k in 0..self.dim {
            v[k] = x[k] - self.center[k];
        }
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        (v, n)
    }

    pub fn inner_normal(&self, x: &Point, t: f64) -> Result<Point> {
        self.radius(t)?;
        let (v, n) = self.offset(x);
        if n < 1e-14 {
            return Err(Error::Degenerate("normal undefined at the sphere center".into()));
        }
        Ok([-v[0] / n, -v[1] / n, -v[2] / n])
    }

    pub fn project(&self, x: &Point, t: f64) -> Result<Point> {
        let r = self.radius(t)?;
        let (v, n) = self.offset(x);
        if n < 1e-14 {
            return Err(Error::Degenerate("projection undefined at the sphere center".into()));
        }
        let mut p = self.center;
        for k in 0..self.dim {
            p[k] += r * v[k] / n;
        }
        Ok(p)
    }

    pub fn xi(&self, x: &Point, t: f64) -> Result<Point> {
        Ok(self.calibration(x, t)?.xi)
    }

    pub fn div_xi(&self, x: &Point, t: f64) -> Result<f64> {
        Ok(self.calibration(x, t)?.div_xi)
    }

    pub fn mean_curv_ext(&self, x: &Point, t: f64) -> Result<Point> {
        Ok(self.calibration(x, t)?.h_i)
    }
}

impl Interface for ShrinkingSphere {
    fn dim(&self) -> usize {
        self.dim
    }

    fn delta_i(&self) -> f64 {
        self.delta_i
    }

    fn t_valid(&self) -> f64 {
        self.t_valid
    }

    fn reference_radius(&self, t: f64) -> Option<f64> {
        self.exact_radius(t)
    }

    fn signed_distance(&self, x: &Point, t: f64) -> Result<f64> {
        let r = self.radius(t)?;
        Ok(r - self.offset(x).1)
    }

    fn calibration(&self, x: &Point, t: f64) -> Result<CalibrationSample> {
        let r = self.radius(t)?;
        let (v, n) = self.offset(x);
        let d = r - n;
        if d.abs() >= self.delta_i {
            return Ok(CalibrationSample {
                d,
                ..CalibrationSample::default()
            });
        }
        if n < 1e-14 {
            return Err(Error::Degenerate("calibration undefined at the sphere center".into()));
        }
        let n_i = [-v[0] / n, -v[1] / n, -v[2] / n];
        let e = eta(d, self.delta_i);
        let k = self.dim as f64 - 1.0;
        // Divergence of the inner normal field at x; on I_t it is -(dim-1)/R.
        let div_n = -k / n;
        // Sign chosen so that d/dt d = -n_I . H_I on the interface.
        let h_mag = eta_tilde(d, self.delta_i) * k / r;
        Ok(CalibrationSample {
            d,
            n_i,
            xi: [e * n_i[0], e * n_i[1], e * n_i[2]],
            div_xi: eta_deriv(d, self.delta_i) + e * div_n,
            h_i: [h_mag * n_i[0], h_mag * n_i[1], h_mag * n_i[2]],
            eta: e,
        })
    }
}

/// A stationary flat front `{x_1 = offset}` with `Omega+ = {x_1 > offset}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatFront {
    pub offset: f64,
    pub dim: usize,
    pub delta_i: f64,
}

impl Interface for FlatFront {
    fn dim(&self) -> usize {
        self.dim
    }

    fn delta_i(&self) -> f64 {
        self.delta_i
    }

    fn t_valid(&self) -> f64 {
        f64::INFINITY
    }

    fn signed_distance(&self, x: &Point, _t: f64) -> Result<f64> {
        Ok(x[0] - self.offset)
    }

    fn calibration(&self, x: &Point, _t: f64) -> Result<CalibrationSample> {
        let d = x[0] - self.offset;
        if d.abs() >= self.delta_i {
            return Ok(CalibrationSample {
                d,
                ..CalibrationSample::default()
            });
        }
        let e = eta(d, self.delta_i);
        Ok(CalibrationSample {
            d,
            n_i: [1.0, 0.0, 0.0],
            xi: [e, 0.0, 0.0],
            div_xi: eta_deriv(d, self.delta_i),
            h_i: [0.0; 3],
            eta: e,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle() -> ShrinkingSphere {
        ShrinkingSphere::new([0.0; 3], 0.4, 2, 0.2, 1.0).unwrap()
    }

    fn tube_point(rng: &mut ChaCha8Rng, s: &ShrinkingSphere, t: f64, width: f64) -> Point {
        let r = s.radius(t).unwrap();
        let rad = r + rng.gen_range(-width..width);
        let mut x = [0.0; 3];
        if s.dim == 2 {
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            x[0] = rad * th.cos();
            x[1] = rad * th.sin();
        } else {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = (1.0 - z * z).sqrt();
            x = [rad * w * th.cos(), rad * w * th.sin(), rad * z];
        }
        x
    }

    #[test]
    fn radius_examples() {
        let s = circle();
        assert_eq!(s.radius(0.0).unwrap(), 0.4);
        assert_abs_diff_eq!(s.radius(0.05).unwrap(), 0.06f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.extinction_time(), 0.08, epsilon = 1e-15);
        assert!(s.t_valid() < s.extinction_time());
        assert!(s.radius(0.07).is_err());
        assert!(ShrinkingSphere::new([0.5, 0.0, 0.0], 0.4, 2, 0.2, 1.0).is_err());
        assert!(ShrinkingSphere::new([0.0; 3], 0.4, 4, 0.2, 1.0).is_err());
    }

    #[test]
    fn distance_normal_projection_examples() {
        let s = circle();
        assert_abs_diff_eq!(s.signed_distance(&[0.0; 3], 0.0).unwrap(), 0.4);
        let on = [0.4 * 0.6, 0.4 * 0.8, 0.0];
        assert_abs_diff_eq!(s.signed_distance(&on, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        let p = s.project(&on, 0.0).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(p[k], on[k], epsilon = 1e-15);
        }
        let x = [0.3, 0.0, 0.0];
        assert_abs_diff_eq!(s.signed_distance(&x, 0.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(s.inner_normal(&x, 0.0).unwrap(), [-1.0, 0.0, 0.0]);
        assert!(matches!(s.inner_normal(&[0.0; 3], 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn eta_examples() {
        assert_abs_diff_eq!(eta(0.1, 0.4), 0.99, epsilon = 1e-15);
        assert_eq!(eta(0.4, 0.4), 0.0);
        assert_abs_diff_eq!(eta(0.35, 0.4), 0.137109375, epsilon = 1e-14);
        assert_eq!(eta(-0.35, 0.4), eta(0.35, 0.4));
        let mut prev = 1.0;
        for k in 0..=500 {
            let z = k as f64 * 0.001;
            let e = eta(z, 0.4);
            assert!(e <= prev + 1e-15);
            assert!(1.0 - e >= (z * z).min(1.0) - 1e-15);
            prev = e;
        }
    }

    #[test]
    fn eta_derivative_matches_differences() {
        for k in 1..400 {
            let z = -0.4 + 0.002 * k as f64;
            let h = 1e-7;
            let fd = (eta(z + h, 0.4) - eta(z - h, 0.4)) / (2.0 * h);
            assert_abs_diff_eq!(eta_deriv(z, 0.4), fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn xi_examples() {
        let s = circle();
        let on = [0.0, 0.4, 0.0];
        let xi = s.xi(&on, 0.0).unwrap();
        assert_abs_diff_eq!((xi[0] * xi[0] + xi[1] * xi[1]).sqrt(), 1.0, epsilon = 1e-15);
        let far = [0.0, 0.65, 0.0];
        assert_eq!(s.xi(&far, 0.0).unwrap(), [0.0; 3]);
        assert_eq!(s.div_xi(&far, 0.0).unwrap(), 0.0);
        assert_eq!(s.xi(&[1.0, 1.0, 0.0], 0.0).unwrap(), [0.0; 3]);
    }

    #[test]
    fn div_xi_matches_finite_differences() {
        for s in [circle(), ShrinkingSphere::new([0.1, 0.0, -0.1], 0.4, 3, 0.2, 1.0).unwrap()] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            for _ in 0..100 {
                let t = rng.gen_range(0.0..0.02);
                let mut x = tube_point(&mut rng, &s, t, 0.19);
                for k in 0..3 {
                    x[k] += s.center[k];
                }
                let h = 1e-4;
                let mut fd = 0.0;
                for k in 0..s.dim {
                    let (mut xp, mut xm) = (x, x);
                    xp[k] += h;
                    xm[k] -= h;
                    fd += (s.xi(&xp, t).unwrap()[k] - s.xi(&xm, t).unwrap()[k]) / (2.0 * h);
                }
                let an = s.div_xi(&x, t).unwrap();
                assert!((an - fd).abs() <= 1e-4 * an.abs().max(1.0), "{an} vs {fd}");
            }
        }
    }

    #[test]
    fn mean_curvature_examples() {
        let s = circle();
        let h = s.mean_curv_ext(&[0.4, 0.0, 0.0], 0.0).unwrap();
        assert_abs_diff_eq!((h[0] * h[0] + h[1] * h[1]).sqrt(), 2.5, epsilon = 1e-14);
        assert_eq!(s.mean_curv_ext(&[0.0, 0.61, 0.0], 0.0).unwrap(), [0.0; 3]);
        // Constant along normals near the interface.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let x = tube_point(&mut rng, &s, 0.0, 0.09);
            let c = s.calibration(&x, 0.0).unwrap();
            let step = 1e-5;
            let xp = [x[0] + step * c.xi[0], x[1] + step * c.xi[1], 0.0];
            let xm = [x[0] - step * c.xi[0], x[1] - step * c.xi[1], 0.0];
            let hp = s.mean_curv_ext(&xp, 0.0).unwrap();
            let hm = s.mean_curv_ext(&xm, 0.0).unwrap();
            for k in 0..2 {
                assert!(((hp[k] - hm[k]) / (2.0 * step)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn kinematic_identity() {
        for s in [circle(), ShrinkingSphere::new([0.0; 3], 0.4, 3, 0.2, 1.0).unwrap()] {
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            for _ in 0..100 {
                let t = rng.gen_range(1e-5..0.015);
                let x = tube_point(&mut rng, &s, t, 0.099);
                let step = 1e-6;
                let dt = (s.signed_distance(&x, t + step).unwrap() - s.signed_distance(&x, t - step).unwrap())
                    / (2.0 * step);
                let c = s.calibration(&x, t).unwrap();
                let nh: f64 = (0..3).map(|k| c.n_i[k] * c.h_i[k]).sum();
                assert!((dt + nh).abs() <= 1e-6, "{dt} vs {nh}");
            }
        }
    }

    #[test]
    fn xi_is_bounded_and_vanishes_on_boundary() {
        let s = circle();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..1000 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0];
            let c = s.calibration(&x, 0.03).unwrap();
            assert!((c.xi[0] * c.xi[0] + c.xi[1] * c.xi[1]).sqrt() <= 1.0 + 1e-15);
        }
        for k in 0..=20 {
            let y = -1.0 + 0.1 * k as f64;
            for x in [[1.0, y, 0.0], [-1.0, y, 0.0], [y, 1.0, 0.0], [y, -1.0, 0.0]] {
                let c = s.calibration(&x, 0.0).unwrap();
                assert_eq!(c.xi, [0.0; 3]);
                assert_eq!(c.h_i, [0.0; 3]);
            }
        }
    }

    #[test]
    fn div_xi_plus_h_dot_xi_is_linear_in_distance() {
        let s = circle();
        let mut worst = 0.0f64;
        for line in 0..10 {
            let th = 0.6 * line as f64;
            for k in 1..=20 {
                let d = 0.005 * k as f64;
                for sgn in [-1.0, 1.0] {
                    let rad = 0.4 - sgn * d;
                    let x = [rad * th.cos(), rad * th.sin(), 0.0];
                    let c = s.calibration(&x, 0.0).unwrap();
                    let res = -c.div_xi - (c.h_i[0] * c.xi[0] + c.h_i[1] * c.xi[1]);
                    worst = worst.max(res.abs() / d);
                }
            }
        }
        // The fitted constant is finite and moderate.
        assert!(worst < 20.0, "{worst}");
    }

    #[test]
    fn flat_front_has_zero_curvature() {
        let f = FlatFront {
            offset: 0.0,
            dim: 1,
            delta_i: 0.2,
        };
        let c = f.calibration(&[0.05, 0.0, 0.0], 0.0).unwrap();
        assert_abs_diff_eq!(c.xi[0], 1.0 - 0.0025, epsilon = 1e-15);
        assert_eq!(c.h_i, [0.0; 3]);
        assert_eq!(f.calibration(&[0.3, 0.0, 0.0], 0.0).unwrap().xi, [0.0; 3]);
    }
}
