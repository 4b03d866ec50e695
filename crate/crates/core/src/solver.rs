//! Explicit time integration of `Q_t = Lap Q - eps^-2 grad F(Q)` and of the
//! reference harmonic map heat flow `u_t = Lap u + |grad u|^2 u`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Neighbor, TensorField, UniformGrid};
use crate::interface::Interface;
use crate::potential::PotentialCoefficients;
use crate::qtensor::QTensor;
use crate::reduce::pairwise_sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ExplicitEuler,
    Rk2,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "explicit-euler",
            Scheme::Rk2 => "rk2",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "explicit-euler" | "euler" => Some(Scheme::ExplicitEuler),
            "rk2" => Some(Scheme::Rk2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub eps: f64,
    pub scheme: Scheme,
    pub safety: f64,
    pub t_end: f64,
    /// Time between callback samples.
    pub sample_every: f64,
    /// Cached Hessian bound `Lambda(c0)` of the bulk potential.
    pub lambda: f64,
}

/// Sup of the potential Hessian over `|Q| <= c0`, sampled with a fixed seed.
pub fn hessian_scale(coeffs: &PotentialCoefficients, c0: f64) -> f64 {
    coeffs.hessian_bound(c0, 2000, 0x5eed)
}

impl SolverConfig {
    pub fn new(
        eps: f64,
        scheme: Scheme,
        safety: f64,
        t_end: f64,
        sample_every: f64,
        coeffs: &PotentialCoefficients,
        c0: f64,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::config("model.eps", format!("must be positive, got {eps}")));
        }
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::config("solver.safety", format!("must lie in (0, 1], got {safety}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::config("solver.t_end", format!("must be nonnegative, got {t_end}")));
        }
        if !(sample_every > 0.0) {
            return Err(Error::config("solver.snapshot_every", format!("must be positive, got {sample_every}")));
        }
        Ok(SolverConfig {
            eps,
            scheme,
            safety,
            t_end,
            sample_every,
            lambda: hessian_scale(coeffs, c0),
        })
    }

    /// `safety * min(h^2 / (4 dim), eps^2 / Lambda)`.
    pub fn dt(&self, grid: &UniformGrid) -> f64 {
        self.safety * self.dt_stable(grid)
    }

    pub fn dt_stable(&self, grid: &UniformGrid) -> f64 {
        let diff = grid.h * grid.h / (4.0 * grid.dim as f64);
        let react = self.eps * self.eps / self.lambda;
        diff.min(react)
    }
}

/// `Lap Q - eps^-2 grad F(Q)` per cell.
pub fn ld_rhs(field: &TensorField, coeffs: &PotentialCoefficients, eps: f64) -> Vec<QTensor> {
    let mut out = vec![QTensor::ZERO; field.data.len()];
    ld_rhs_into(field, coeffs, eps, &mut out);
    out
}

pub fn ld_rhs_into(field: &TensorField, coeffs: &PotentialCoefficients, eps: f64, out: &mut [QTensor]) {
    let inv_eps2 = 1.0 / (eps * eps);
    out.par_chunks_mut(512).enumerate().for_each(|(c, chunk)| {
        let base = c * 512;
        for (k, o) in chunk.iter_mut().enumerate() {
            let idx = base + k;
            *o = field.laplacian(idx) - coeffs.bulk_gradient(&field.data[idx]) * inv_eps2;
        }
    });
}

/// What the caller of [`run`] wants after a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Data handed to the sampling callback.
pub struct Sample<'a> {
    pub field: &'a TensorField,
    /// `d Q/dt` at the sample time.
    pub rhs: &'a [QTensor],
    pub step: usize,
    /// `sum dt * eps |Q_t|^2 h^d` accumulated so far.
    pub dissipation: f64,
    /// Sup of `|Q|` over all cells and steps so far.
    pub sup_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    pub dissipation: f64,
    pub sup_norm: f64,
    pub initial_sup: f64,
    pub warnings: Vec<String>,
}

/// One time step of size `dt`. Returns the dissipation increment `dt eps |Q_t|^2 h^d`.
pub fn step(
    field: &mut TensorField,
    coeffs: &PotentialCoefficients,
    eps: f64,
    scheme: Scheme,
    dt: f64,
    k1: &mut Vec<QTensor>,
    k2: &mut Vec<QTensor>,
) -> f64 {
    let vol = field.grid.cell_volume();
    k1.resize(field.data.len(), QTensor::ZERO);
    ld_rhs_into(field, coeffs, eps, k1);
    let d1 = eps * vol * pairwise_sum(&k1.iter().map(QTensor::norm_sq).collect::<Vec<_>>());
    match scheme {
        Scheme::ExplicitEuler => {
            field.data.par_iter_mut().zip(k1.par_iter()).for_each(|(q, k)| *q += *k * dt);
            field.t += dt;
            dt * d1
        }
        Scheme::Rk2 => {
            let mut stage = field.clone();
            stage.data.par_iter_mut().zip(k1.par_iter()).for_each(|(q, k)| *q += *k * dt);
            k2.resize(field.data.len(), QTensor::ZERO);
            ld_rhs_into(&stage, coeffs, eps, k2);
            let d2 = eps * vol * pairwise_sum(&k2.iter().map(QTensor::norm_sq).collect::<Vec<_>>());
            field
                .data
                .par_iter_mut()
                .zip(k1.par_iter().zip(k2.par_iter()))
                .for_each(|(q, (a, b))| *q += (*a + *b) * (0.5 * dt));
            field.t += dt;
            0.5 * dt * (d1 + d2)
        }
    }
}

/// Integrate to `cfg.t_end`, calling `on_sample` at `t = 0, cadence, 2 cadence, ...`.
/// Steps are shortened to land exactly on sample times.
pub fn run(
    field: &mut TensorField,
    coeffs: &PotentialCoefficients,
    cfg: &SolverConfig,
    mut on_sample: impl FnMut(&Sample) -> Result<Control>,
) -> Result<RunSummary> {
    let dt = cfg.dt(&field.grid);
    let initial_sup = field.max_norm();
    let mut summary = RunSummary {
        dt,
        sup_norm: initial_sup,
        initial_sup,
        ..RunSummary::default()
    };
    let n_samples = (cfg.t_end / cfg.sample_every + 1e-9).floor() as usize;
    let t0 = field.t;
    let mut k1 = Vec::new();
    let mut k2 = Vec::new();
    let mut warned = false;
    for sample in 0..=n_samples {
        let t_sample = t0 + sample as f64 * cfg.sample_every;
        while field.t < t_sample - 1e-12 * cfg.sample_every.max(1.0) {
            let h = dt.min(t_sample - field.t);
            summary.dissipation += step(field, coeffs, cfg.eps, cfg.scheme, h, &mut k1, &mut k2);
            summary.steps += 1;
            let sup = field.max_norm();
            if !sup.is_finite() {
                return Err(Error::Unstable {
                    t: field.t,
                    step: summary.steps,
                    detail: format!(
                        "non-finite state with dt = {h:e}, stable dt = {:e}, Lambda = {}",
                        cfg.dt_stable(&field.grid),
                        cfg.lambda
                    ),
                });
            }
            summary.sup_norm = summary.sup_norm.max(sup);
            if !warned && sup > initial_sup + 1e-3 {
                warned = true;
                summary.warnings.push(format!(
                    "maximum modulus grew from {initial_sup} to {sup} at t = {}",
                    field.t
                ));
            }
        }
        field.t = t_sample;
        let rhs = ld_rhs(field, coeffs, cfg.eps);
        let ctl = on_sample(&Sample {
            field,
            rhs: &rhs,
            step: summary.steps,
            dissipation: summary.dissipation,
            sup_norm: summary.sup_norm,
        })?;
        if ctl == Control::Stop {
            break;
        }
    }
    Ok(summary)
}

/// Cells of `{d(x, t) > band}`.
pub fn region_mask(grid: &UniformGrid, interface: &dyn Interface, t: f64, band: f64) -> Result<Vec<bool>> {
    (0..grid.len())
        .map(|idx| Ok(interface.signed_distance(&grid.center(idx), t)? > band))
        .collect()
}

/// Unit director field on a shrinking mask, evolved by the harmonic map heat flow
/// with mirror ghosts (homogeneous Neumann data) across the mask boundary.
#[derive(Clone, Debug)]
pub struct DirectorState {
    pub grid: UniformGrid,
    pub u: Vec<[f64; 3]>,
    pub mask: Vec<bool>,
    pub periodic: bool,
    /// Cells with signed distance at most `band` are excluded.
    pub band: f64,
    pub t: f64,
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

impl DirectorState {
    /// Masked state on `{d(x, t) > band}`.
    pub fn new(
        grid: &UniformGrid,
        interface: &dyn Interface,
        t: f64,
        band: f64,
        u0: impl Fn(&crate::interface::Point) -> [f64; 3],
    ) -> Result<Self> {
        let mask = region_mask(grid, interface, t, band)?;
        let u = (0..grid.len())
            .map(|idx| if mask[idx] { normalize(u0(&grid.center(idx))) } else { [0.0; 3] })
            .collect();
        let state = DirectorState {
            grid: grid.clone(),
            u,
            mask,
            periodic: false,
            band,
            t,
        };
        state.check_nonempty()?;
        Ok(state)
    }

    /// Unmasked state with periodic neighbors on every axis.
    pub fn periodic(grid: &UniformGrid, u0: impl Fn(&crate::interface::Point) -> [f64; 3]) -> Self {
        DirectorState {
            grid: grid.clone(),
            u: (0..grid.len()).map(|i| normalize(u0(&grid.center(i)))).collect(),
            mask: vec![true; grid.len()],
            periodic: true,
            band: 0.0,
            t: 0.0,
        }
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.mask.iter().any(|&m| m) {
            Ok(())
        } else {
            Err(Error::Extinction(format!("director mask is empty at t = {}", self.t)))
        }
    }

    pub fn active_cells(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    fn neighbor_u(&self, idx: usize, axis: usize, hi: bool) -> [f64; 3] {
        match self.grid.neighbor(self.grid.multi(idx), axis, hi, self.periodic) {
            Neighbor::Cell(j) if self.mask[j] => self.u[j],
            _ => self.u[idx],
        }
    }

    /// `Lap u + |grad u|^2 u` on masked cells; zero elsewhere.
    pub fn hm_rhs(&self) -> Vec<[f64; 3]> {
        let h2 = self.grid.h * self.grid.h;
        (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                if !self.mask[idx] {
                    return [0.0; 3];
                }
                let u = self.u[idx];
                let mut lap = [0.0; 3];
                let mut grad2 = 0.0;
                for k in 0..self.grid.dim {
                    let up = self.neighbor_u(idx, k, true);
                    let dn = self.neighbor_u(idx, k, false);
                    for c in 0..3 {
                        lap[c] += (up[c] + dn[c] - 2.0 * u[c]) / h2;
                        let g = (up[c] - dn[c]) / (2.0 * self.grid.h);
                        grad2 += g * g;
                    }
                }
                [lap[0] + grad2 * u[0], lap[1] + grad2 * u[1], lap[2] + grad2 * u[2]]
            })
            .collect()
    }

    /// Explicit step, renormalization, and mask shrinkage to `{d(x, t + dt) > band}`.
    pub fn hm_step(&mut self, dt: f64, interface: Option<&dyn Interface>) -> Result<()> {
        let rhs = self.hm_rhs();
        for (idx, r) in rhs.iter().enumerate() {
            if self.mask[idx] {
                let u = self.u[idx];
                self.u[idx] = normalize([u[0] + dt * r[0], u[1] + dt * r[1], u[2] + dt * r[2]]);
            }
        }
        self.t += dt;
        if let Some(iface) = interface {
            for idx in 0..self.grid.len() {
                if self.mask[idx] && iface.signed_distance(&self.grid.center(idx), self.t)? <= self.band {
                    self.mask[idx] = false;
                    self.u[idx] = [0.0; 3];
                }
            }
        }
        self.check_nonempty()
    }

    /// Stable explicit step `safety * h^2 / (4 dim)`.
    pub fn dt(&self, safety: f64) -> f64 {
        safety * self.grid.h * self.grid.h / (4.0 * self.grid.dim as f64)
    }

    /// Advance to time `t_target` with steps no longer than `dt`.
    pub fn advance_to(&mut self, t_target: f64, dt: f64, interface: Option<&dyn Interface>) -> Result<()> {
        while self.t < t_target - 1e-14 {
            let h = dt.min(t_target - self.t);
            self.hm_step(h, interface)?;
        }
        self.t = t_target;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::initial_data::standing_profile;

    fn coeffs() -> PotentialCoefficients {
        PotentialCoefficients::default()
    }

    #[test]
    fn zero_field_has_zero_rhs_and_is_fixed() {
        let c = coeffs();
        let grid = UniformGrid::cube(2, 16, 1.0).unwrap();
        let mut f = TensorField::zeros(grid, Boundary::zero());
        assert!(ld_rhs(&f, &c, 0.1).iter().all(|q| *q == QTensor::ZERO));
        let (mut a, mut b) = (Vec::new(), Vec::new());
        step(&mut f, &c, 0.1, Scheme::Rk2, 1e-4, &mut a, &mut b);
        assert!(f.data.iter().all(|q| *q == QTensor::ZERO));
    }

    #[test]
    fn uniform_nematic_is_stationary_in_periodic_mode() {
        let c = coeffs();
        let grid = UniformGrid::cube(2, 8, 1.0).unwrap();
        let n = QTensor::uniaxial(3.0, [0.0, 0.6, 0.8]).unwrap();
        let f = TensorField::from_fn(grid, Boundary::Periodic, |_| n);
        for r in ld_rhs(&f, &c, 0.05) {
            assert!(r.norm() <= 1e-12 / 0.0025);
            assert!(r.norm() <= 1e-9);
        }
    }

    #[test]
    fn standing_wave_rhs_is_second_order() {
        let c = coeffs();
        let eps = 0.05;
        let mut sups = Vec::new();
        for n in [256, 512] {
            let grid = UniformGrid::cube(1, n, 1.0).unwrap();
            let f = standing_profile(&grid, &c, eps, [0.0, 0.0, 1.0], 0.0);
            let sup = ld_rhs(&f, &c, eps).iter().map(QTensor::norm).fold(0.0, f64::max);
            sups.push(sup);
        }
        let ratio = sups[0] / sups[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}, sups {sups:?}");
    }

    #[test]
    fn dt_policy() {
        let c = coeffs();
        let grid = UniformGrid::cube(2, 100, 1.0).unwrap();
        let cfg = SolverConfig::new(0.03, Scheme::ExplicitEuler, 0.25, 0.01, 0.001, &c, 6f64.sqrt()).unwrap();
        let expect = 0.25 * (grid.h * grid.h / 8.0).min(0.03 * 0.03 / cfg.lambda);
        assert_eq!(cfg.dt(&grid), expect);
        assert!(SolverConfig::new(0.03, Scheme::Rk2, 1.5, 0.01, 0.001, &c, 1.0).is_err());
    }

    #[test]
    fn sample_count_matches_cadence() {
        let c = coeffs();
        let grid = UniformGrid::cube(1, 64, 1.0).unwrap();
        let mut f = standing_profile(&grid, &c, 0.1, [1.0, 0.0, 0.0], 0.0);
        let cfg = SolverConfig::new(0.1, Scheme::ExplicitEuler, 0.25, 0.01, 0.0025, &c, 6f64.sqrt()).unwrap();
        let mut times = Vec::new();
        run(&mut f, &c, &cfg, |s| {
            times.push(s.field.t);
            Ok(Control::Continue)
        })
        .unwrap();
        assert_eq!(times.len(), 5);
        assert!((times[4] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn constant_director_is_invariant() {
        let grid = UniformGrid::cube(2, 16, 1.0).unwrap();
        let mut s = DirectorState::periodic(&grid, |_| [0.0, 0.0, 1.0]);
        assert!(s.hm_rhs().iter().all(|r| r.iter().all(|v| v.abs() < 1e-15)));
        s.hm_step(1e-3, None).unwrap();
        assert!(s.u.iter().all(|u| *u == [0.0, 0.0, 1.0]));
    }

    #[test]
    fn angle_mode_decays_like_heat_equation() {
        // theta = A sin(x) on a periodic strip of length 2 pi: theta decays by exp(-t).
        let n = 128;
        let grid = UniformGrid {
            dim: 1,
            n: [n, 1, 1],
            h: std::f64::consts::TAU / n as f64,
            lo: [0.0; 3],
        };
        let amp = 0.3;
        let mut s = DirectorState::periodic(&grid, |x| {
            let th = amp * x[0].sin();
            [th.cos(), th.sin(), 0.0]
        });
        let dt = s.dt(0.5);
        s.advance_to(0.01, dt, None).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for (idx, u) in s.u.iter().enumerate() {
            let x = grid.center(idx)[0];
            let th = u[1].atan2(u[0]);
            num += th * x.sin();
            den += x.sin() * x.sin();
            assert!(((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt() - 1.0).abs() <= 1e-10);
        }
        let measured = num / den / amp;
        let exact = (-0.01f64).exp();
        assert!((measured - exact).abs() <= 0.01 * exact, "{measured} vs {exact}");
    }

    #[test]
    fn mask_shrinks_and_exhausts() {
        use crate::interface::ShrinkingSphere;
        let grid = UniformGrid::cube(2, 40, 1.0).unwrap();
        let sphere = ShrinkingSphere::new([0.0; 3], 0.4, 2, 0.2, 1.0).unwrap();
        let mut s = DirectorState::new(&grid, &sphere, 0.0, 0.1, |_| [1.0, 0.0, 0.0]).unwrap();
        let before = s.active_cells();
        s.advance_to(0.03, s.dt(0.5), Some(&sphere)).unwrap();
        assert!(s.active_cells() < before);
        assert!(DirectorState::new(&grid, &sphere, 0.0, 0.45, |_| [1.0, 0.0, 0.0]).is_err());
    }
}
