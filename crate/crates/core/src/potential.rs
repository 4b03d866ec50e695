//! Landau-De Gennes bulk potential and its critical-temperature bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qtensor::{Mat3, QTensor};

/// Material constants of the bulk potential
/// `F(Q) = a/2 tr Q^2 - b/3 tr Q^3 + c/4 (tr Q^2)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Whether `b^2 = 27 a c` is required (isotropic and nematic phases both minimize `F`).
    pub critical: bool,
    /// Exponent `K` of the regularization `F + eps^(K-1)`.
    pub eps_power: i32,
}

impl Default for PotentialCoefficients {
    fn default() -> Self {
        PotentialCoefficients {
            a: 3.0,
            b: 9.0,
            c: 1.0,
            critical: true,
            eps_power: 4,
        }
    }
}

impl PotentialCoefficients {
    pub fn new(a: f64, b: f64, c: f64, critical: bool) -> Result<Self> {
        let coeffs = PotentialCoefficients {
            a,
            b,
            c,
            critical,
            eps_power: 4,
        };
        coeffs.validate()?;
        Ok(coeffs)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("model.{name}"), format!("must be a positive real, got {v}")));
            }
        }
        if self.critical && (self.b * self.b - 27.0 * self.a * self.c).abs() > 1e-10 * self.b * self.b {
            return Err(Error::config(
                "model.b",
                format!(
                    "critical coefficients require b^2 = 27ac, got b^2 = {} and 27ac = {}",
                    self.b * self.b,
                    27.0 * self.a * self.c
                ),
            ));
        }
        if self.eps_power < 1 {
            return Err(Error::config("model.K", format!("must be >= 1, got {}", self.eps_power)));
        }
        self.s_plus().map_err(|e| Error::config("model", e.to_string()))?;
        Ok(())
    }

    /// Nematic degree of orientation `(b + sqrt(b^2 - 24ac)) / 4c`.
    pub fn s_plus(&self) -> Result<f64> {
        let disc = self.b * self.b - 24.0 * self.a * self.c;
        if disc < 0.0 {
            return Err(Error::Domain(format!("b^2 - 24ac = {disc} < 0: no nematic minimizer")));
        }
        Ok((self.b + disc.sqrt()) / (4.0 * self.c))
    }

    /// Isotropic degree of orientation.
    pub fn s_minus(&self) -> f64 {
        0.0
    }

    /// `s_plus` for validated coefficients.
    pub(crate) fn s_plus_unchecked(&self) -> f64 {
        self.s_plus().expect("coefficients validated at construction")
    }

    pub fn bulk_energy(&self, q: &QTensor) -> f64 {
        let tr2 = q.norm_sq();
        // tr Q^3 = 3 det Q for traceless Q
        let tr3 = 3.0 * q.to_matrix().det();
        0.5 * self.a * tr2 - self.b / 3.0 * tr3 + 0.25 * self.c * tr2 * tr2
    }

    /// `aQ - bQ^2 + c|Q|^2 Q + (b/3)|Q|^2 I`, the gradient of `F` within the traceless space.
    pub fn bulk_gradient(&self, q: &QTensor) -> QTensor {
        let m = q.to_matrix();
        let n2 = q.norm_sq();
        let m2 = m * m;
        let g = m * (self.a + self.c * n2) - m2 * self.b + Mat3::IDENTITY * (self.b / 3.0 * n2);
        QTensor::from_matrix(&g)
    }

    /// Same as [`bulk_gradient`](Self::bulk_gradient) but returns the dense matrix, unprojected.
    pub fn bulk_gradient_matrix(&self, q: &QTensor) -> Mat3 {
        let m = q.to_matrix();
        let n2 = q.norm_sq();
        m * (self.a + self.c * n2) - (m * m) * self.b + Mat3::IDENTITY * (self.b / 3.0 * n2)
    }

    /// `F(Q) + eps^(K-1)`.
    pub fn regularized_energy(&self, q: &QTensor, eps: f64) -> f64 {
        self.bulk_energy(q) + eps.powi(self.eps_power - 1)
    }

    /// Restriction of `F` to uniaxial tensors, `f(s) = s^2/27 (9a - 2bs + 3cs^2)`.
    pub fn uniaxial_f(&self, s: f64) -> f64 {
        s * s / 27.0 * (9.0 * self.a - 2.0 * self.b * s + 3.0 * self.c * s * s)
    }

    /// Nonnegative square root of `f` on `[0, s_plus]`.
    ///
    /// For critical coefficients `f(s) = c/9 s^2 (s - s_plus)^2` and this is
    /// `sqrt(c)/3 s (s_plus - s)`.
    pub fn sqrt_f(&self, s: f64) -> Result<f64> {
        let sp = self.s_plus()?;
        if !(-1e-12..=sp + 1e-12).contains(&s) {
            return Err(Error::Domain(format!("sqrt_f is defined on [0, {sp}], got s = {s}")));
        }
        let s = s.clamp(0.0, sp);
        if self.critical {
            Ok(self.c.sqrt() / 3.0 * s * (sp - s))
        } else {
            Ok(self.uniaxial_f(s).max(0.0).sqrt())
        }
    }

    /// Sampled bound on the operator norm of the Hessian of `F` over `|Q| <= c0`.
    ///
    /// The Hessian is assembled by central differences of [`bulk_gradient`](Self::bulk_gradient)
    /// in the 5-vector coordinates, its largest eigenvalue magnitude found by power
    /// iteration, and the sampled maximum inflated by 5%.
    pub fn hessian_bound(&self, c0: f64, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for k in 0..samples.max(1) {
            let mut v = [0.0; 5];
            for x in v.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
            let q = QTensor(v);
            let n = q.norm().max(1e-12);
            // Half the samples on the sphere |Q| = c0, where the bound is attained.
            let radius = if k % 2 == 0 { c0 } else { c0 * rng.gen_range(0.0f64..1.0).powf(0.2) };
            let q = q * (radius / n);
            worst = worst.max(self.hessian_norm_at(&q));
        }
        worst.max(self.hessian_norm_at(&QTensor::ZERO)) * 1.05
    }

    fn hessian_norm_at(&self, q: &QTensor) -> f64 {
        let step = 1e-5;
        let mut h = [[0.0; 5]; 5];
        for j in 0..5 {
            let mut e = QTensor::ZERO;
            e.0[j] = step;
            let gp = self.bulk_gradient(&(*q + e));
            let gm = self.bulk_gradient(&(*q - e));
            for i in 0..5 {
                h[i][j] = (gp.0[i] - gm.0[i]) / (2.0 * step);
            }
        }
        for i in 0..5 {
            for j in 0..i {
                let m = 0.5 * (h[i][j] + h[j][i]);
                h[i][j] = m;
                h[j][i] = m;
            }
        }
        spectral_radius_sym5(&h)
    }
}

/// Largest eigenvalue magnitude of a symmetric 5x5 matrix by power iteration on `H^2`.
fn spectral_radius_sym5(h: &[[f64; 5]; 5]) -> f64 {
    let apply = |v: &[f64; 5]| {
        let mut w = [0.0; 5];
        for i in 0..5 {
            w[i] = (0..5).map(|j| h[i][j] * v[j]).sum();
        }
        w
    };
    let mut v = [1.0, 0.7, -0.4, 0.3, 0.55];
    let mut est = 0.0;
    for _ in 0..500 {
        let w = apply(&apply(&v));
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return 0.0;
        }
        let next = n.sqrt();
        for i in 0..5 {
            v[i] = w[i] / n;
        }
        if (next - est).abs() <= 1e-12 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}
