//! Named experiments with reproducible outputs: `manifest.txt`, `series.csv`,
//! snapshots, and a `.failed` marker when a run aborts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::diagnostics::{
    director_compare, gronwall_report, s_field, DiagnosticsRecord, DirectorComparison, GronwallReport, Monitor,
};
use crate::error::{Error, Result};
use crate::grid::TensorField;
use crate::initial_data::{build, optimal_profile, standing_profile};
use crate::interface::Interface;
use crate::io::{read_csv, write_atomic, write_series, write_snapshot, write_vtk};
use crate::potential::PotentialCoefficients;
use crate::qtensor::{eigensystem, QTensor};
use crate::quasi_distance::{c_f, df_uniaxial, GeodesicTable};
use crate::solver::{region_mask, run, Control, DirectorState, RunSummary, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    VerifyPotential,
    BuildDtable,
    Profile1d,
    McfBenchmark,
    Simulate,
    Report,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::VerifyPotential => "verify-potential",
            Subcommand::BuildDtable => "build-dtable",
            Subcommand::Profile1d => "profile-1d",
            Subcommand::McfBenchmark => "mcf-benchmark",
            Subcommand::Simulate => "simulate",
            Subcommand::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    /// Reported values, in insertion order.
    pub summary: Vec<(String, String)>,
    pub dtable_checksum: Option<String>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }
}

/// Table from `diagnostics.dtable_path` when given, otherwise built from `[dtable]`.
pub fn load_or_build_table(cfg: &RunConfig, coeffs: &PotentialCoefficients) -> Result<GeodesicTable> {
    match &cfg.diagnostics.dtable_path {
        Some(p) => GeodesicTable::load(p),
        None => GeodesicTable::build(coeffs, cfg.table_spec()?),
    }
}

/// Result of [`simulate`].
#[derive(Clone, Debug)]
pub struct Simulation {
    pub records: Vec<DiagnosticsRecord>,
    pub run: RunSummary,
    /// `(t, comparison)` for every sample while the director mask is nonempty.
    pub director: Vec<(f64, DirectorComparison)>,
    pub final_field: TensorField,
    pub initial_sup: f64,
    pub eps: f64,
    pub h: f64,
    pub warnings: Vec<String>,
}

impl Simulation {
    pub fn gronwall(&self, ceiling: f64) -> Result<GronwallReport> {
        let t: Vec<f64> = self.records.iter().map(|r| r.t).collect();
        let e: Vec<f64> = self.records.iter().map(|r| r.e_mod).collect();
        gronwall_report(&t, &e, self.eps, ceiling)
    }

    /// `sup_t ||[grad Q, Q]||_{L^2}`.
    pub fn comm_grad_linf(&self) -> f64 {
        self.records.iter().map(|r| r.comm_grad_l2).fold(0.0, f64::max)
    }

    /// `(int ||[Q_t, Q]||^2_{L^2} dt)^(1/2)` by the trapezoidal rule over samples.
    pub fn comm_time_l2(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.records.windows(2) {
            acc += 0.5 * (w[1].t - w[0].t) * (w[0].comm_time_l2.powi(2) + w[1].comm_time_l2.powi(2));
        }
        acc.sqrt()
    }

    pub fn director_at(&self, t: f64) -> Option<DirectorComparison> {
        self.director
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9)
            .map(|(_, c)| *c)
    }
}

/// Well-prepared data on a shrinking sphere, the explicit flow, and diagnostics at
/// every sample. Writes `series.csv` and snapshots to `out` when given.
pub fn simulate(cfg: &RunConfig, table: &GeodesicTable, out: Option<&Path>) -> Result<Simulation> {
    let coeffs = cfg.coefficients()?;
    let eps = cfg.model.eps;
    let grid = cfg.grid()?;
    if grid.dim < 2 {
        return Err(Error::config("domain.dim", "sphere runs need dim 2 or 3; use profile-1d in 1-D"));
    }
    let sphere = cfg.sphere()?;
    if cfg.solver.t_end > sphere.t_valid() + 1e-12 {
        return Err(Error::config(
            "solver.t_end",
            format!("exceeds the validity window {} of the tubular neighborhood", sphere.t_valid()),
        ));
    }
    let director = cfg.director()?;
    let mut field = build(&sphere, &director, &coeffs, &cfg.profile()?, &grid)?;
    let initial_sup = field.max_norm();
    let solver = SolverConfig::new(
        eps,
        cfg.scheme()?,
        cfg.solver.safety,
        cfg.solver.t_end,
        cfg.solver.snapshot_every,
        &coeffs,
        initial_sup,
    )?;
    let mut warnings = cfg.profile()?.warnings();
    let mut hm = if cfg.diagnostics.compare_director {
        Some(DirectorState::new(&grid, &sphere, 0.0, 2.0 * eps, |x| director.eval(x))?)
    } else {
        None
    };
    let hm_dt = hm.as_ref().map(|s| s.dt(0.5)).unwrap_or(0.0);
    let mut monitor = Monitor::new(coeffs, eps, table, &sphere);
    monitor.level_fraction = cfg.diagnostics.levelset_fraction;
    monitor.bound_ceiling = cfg.diagnostics.bound_ceiling;
    let mut records = Vec::new();
    let mut comparisons = Vec::new();
    let mut sample_no = 0usize;
    let n_samples = (cfg.solver.t_end / cfg.solver.snapshot_every + 1e-9).floor() as usize;
    let stride = cfg.output.snapshot_stride;
    let result = run(&mut field, &coeffs, &solver, |s| {
        let rec = monitor.record(s)?;
        let t = s.field.t;
        if let Some(state) = hm.as_mut() {
            match state.advance_to(t, hm_dt, Some(&sphere)) {
                Ok(()) => {
                    let nematic = region_mask(&grid, &sphere, t, 0.0)?;
                    comparisons.push((t, director_compare(s.field, s.rhs, state, &nematic)?));
                }
                Err(Error::Extinction(msg)) => {
                    warnings.push(format!("director comparison ended: {msg}"));
                    hm = None;
                }
                Err(e) => return Err(e),
            }
        }
        records.push(rec);
        if let Some(dir) = out {
            write_series(&dir.join("series.csv"), &records)?;
            let due = if stride == 0 {
                sample_no == 0 || sample_no == n_samples
            } else {
                sample_no % stride == 0 || sample_no == n_samples
            };
            if due {
                write_snapshot(&dir.join(format!("snap_{}.qmcf", s.step)), s.field, eps)?;
                if cfg.output.vtk {
                    let title = format!("s field t={t}");
                    write_vtk(&dir.join(format!("field_s_{}.vtk", s.step)), &grid, "s", &s_field(s.field), &title)?;
                }
            }
        }
        sample_no += 1;
        Ok(Control::Continue)
    })?;
    warnings.extend(result.warnings.iter().cloned());
    Ok(Simulation {
        records,
        run: result,
        director: comparisons,
        final_field: field,
        initial_sup,
        eps,
        h: grid.h,
        warnings,
    })
}

fn fmt_ok(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn simulation_checks(cfg: &RunConfig, sim: &Simulation, benchmark: bool, out: &mut Outcome) -> Result<()> {
    let eps = sim.eps;
    let recs = &sim.records;
    let first = &recs[0];
    let last = recs.last().expect("at least one sample");
    let t_end = last.t.max(f64::MIN_POSITIVE);
    let min_emod = recs.iter().map(|r| r.e_mod).fold(f64::INFINITY, f64::min);
    out.checks.push(Check::new(
        "modulated_energy_nonnegative",
        min_emod >= -1e-8,
        format!("min E_mod = {min_emod:e}"),
    ));
    out.checks.push(Check::new(
        "maximum_modulus",
        sim.run.sup_norm <= sim.initial_sup + 1e-6,
        format!("sup |Q| = {} vs initial {}", sim.run.sup_norm, sim.initial_sup),
    ));
    let diss = last.dissipation_residual / (first.e_gl * t_end);
    out.checks.push(Check::new(
        "dissipation_identity",
        diss <= 0.02,
        format!("residual per unit time / E_gl(0) = {diss:e}"),
    ));
    let mism = recs.iter().map(|r| r.quadrature_mismatch).fold(0.0, f64::max);
    out.checks.push(Check::new(
        "calibration_quadratures_agree",
        mism <= 0.01,
        format!("max relative mismatch = {mism:e}"),
    ));
    out.note("E_gl0", first.e_gl);
    out.note("E_mod0", first.e_mod);
    out.note("E_mod0_over_eps", first.e_mod_over_eps);
    out.note("steps", sim.run.steps);
    out.note("dt", sim.run.dt);
    out.note("comm_grad_linf_l2", sim.comm_grad_linf());
    out.note("comm_time_l2_l2", sim.comm_time_l2());
    if let Some((t, c)) = sim.director.last() {
        out.note("director_t", t);
        out.note("director_l2", c.l2);
        out.note("director_aligned", c.aligned);
        out.note("director_weak_residual", c.weak_residual);
    }
    if benchmark {
        let tol = (3.0 * eps).max(3.0 * sim.h);
        let worst = recs
            .iter()
            .map(|r| (r.r_fit - r.r_exact).abs())
            .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        out.checks.push(Check::new(
            "radius_tracking",
            worst <= tol,
            format!("max |R_fit - R_exact| = {worst:e}, tolerance {tol:e}"),
        ));
        let growth = recs.iter().map(|r| r.e_mod_over_eps).fold(f64::NEG_INFINITY, f64::max);
        out.checks.push(Check::new(
            "modulated_energy_growth",
            growth <= 5.0 * first.e_mod_over_eps,
            format!("max E_mod/eps = {growth:e}, initial {:e}", first.e_mod_over_eps),
        ));
        let worst_ratio = recs
            .iter()
            .flat_map(|r| r.bounds.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max);
        out.checks.push(Check::new(
            "bound_suite",
            worst_ratio <= cfg.diagnostics.bound_ceiling,
            format!("max ratio = {worst_ratio}, ceiling {}", cfg.diagnostics.bound_ceiling),
        ));
        if recs.len() >= 10 {
            let g = sim.gronwall(cfg.diagnostics.gronwall_ceiling)?;
            out.checks.push(Check::new(
                "gronwall",
                g.ok,
                format!("C_fit = {}, max E(t)/E(0) = {}", g.c_fit, g.max_ratio),
            ));
        }
    }
    Ok(())
}

fn verify_potential(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let coeffs = cfg.coefficients()?;
    let sp = coeffs.s_plus()?;
    out.note("s_plus", sp);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.output.seed);
    let unit = |rng: &mut ChaCha8Rng| {
        let mut v = [0.0f64; 3];
        loop {
            for x in v.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.1 && n <= 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    };
    let g0 = coeffs.bulk_gradient(&QTensor::ZERO).norm();
    let mut worst_n: f64 = 0.0;
    for _ in 0..20 {
        let q = QTensor::uniaxial(sp, unit(&mut rng))?;
        worst_n = worst_n.max(coeffs.bulk_gradient(&q).norm());
    }
    out.checks.push(Check::new(
        "gradient_vanishes_at_minimizers",
        g0 <= 1e-12 && worst_n <= 1e-12 * (1.0 + sp * sp * sp),
        format!("|grad F(0)| = {g0:e}, max over 20 nematic samples = {worst_n:e}"),
    ));
    let mut worst_fd: f64 = 0.0;
    for _ in 0..100 {
        let mut v = [0.0; 5];
        for x in v.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let q = QTensor(v) * (rng.gen_range(0.05..2.5) / QTensor(v).norm());
        let g = coeffs.bulk_gradient(&q);
        let h = 1e-6;
        let mut fd = [0.0; 5];
        for (k, f) in fd.iter_mut().enumerate() {
            let (mut qp, mut qm) = (q, q);
            qp.0[k] += h;
            qm.0[k] -= h;
            *f = (coeffs.bulk_energy(&qp) - coeffs.bulk_energy(&qm)) / (2.0 * h);
        }
        let err = (QTensor(fd) - g).norm() / g.norm().max(1e-12);
        worst_fd = worst_fd.max(err);
    }
    out.checks.push(Check::new(
        "gradient_matches_differences",
        worst_fd <= 1e-6,
        format!("max relative error = {worst_fd:e}"),
    ));
    if cfg.model.critical {
        let mut min_f = f64::INFINITY;
        for _ in 0..10_000 {
            let mut v = [0.0; 5];
            for x in v.iter_mut() {
                *x = rng.gen_range(-3.0..3.0);
            }
            min_f = min_f.min(coeffs.bulk_energy(&QTensor(v)));
        }
        out.checks.push(Check::new(
            "potential_nonnegative",
            min_f >= -1e-12,
            format!("min F over 10^4 samples = {min_f:e}"),
        ));
    }
    let mut worst_eig: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    for _ in 0..100 {
        let mut v = [0.0; 5];
        for x in v.iter_mut() {
            *x = rng.gen_range(-2.0..2.0);
        }
        let q = QTensor(v);
        worst_eig = worst_eig.max((eigensystem(&q).reconstruct() - q.to_matrix()).frob_norm());
        worst_trace = worst_trace.max(coeffs.bulk_gradient_matrix(&q).trace().abs());
    }
    out.checks.push(Check::new(
        "eigensystem_reconstructs",
        worst_eig <= 1e-10,
        format!("max residual = {worst_eig:e}"),
    ));
    out.checks.push(Check::new(
        "gradient_traceless",
        worst_trace <= 1e-12,
        format!("max |tr| = {worst_trace:e}"),
    ));
    Ok(())
}

fn build_dtable(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let coeffs = cfg.coefficients()?;
    let table = GeodesicTable::build(&coeffs, cfg.table_spec()?)?;
    let path = cfg
        .diagnostics
        .dtable_path
        .clone()
        .unwrap_or_else(|| dir.join("dtable.txt"));
    let sum = table.save(&path)?;
    out.note("dtable_path", path.display());
    out.dtable_checksum = Some(sum);
    let sp = coeffs.s_plus()?;
    let mut worst: f64 = 0.0;
    for k in 0..=280 {
        let s = 0.1 * sp / 3.0 + 2.8 * sp / 3.0 * k as f64 / 280.0;
        let exact = df_uniaxial(&coeffs, s)?;
        worst = worst.max((table.value(s, 0.0)? - exact).abs() / exact);
    }
    out.checks.push(Check::new(
        "slice_matches_closed_form",
        worst <= 0.02,
        format!("max relative error = {worst:e}"),
    ));
    let cf = c_f(&coeffs)?;
    let at0 = table.value(0.0, 0.0)?;
    out.checks.push(Check::new(
        "surface_tension",
        (at0 - cf).abs() <= 0.02 * cf,
        format!("table(0,0) = {at0}, c_F = {cf}"),
    ));
    Ok(())
}

/// Position of the `level` crossing of a 1-D profile, by linear interpolation.
pub fn front_position(field: &TensorField, level: f64) -> Option<f64> {
    let s = s_field(field);
    for i in 0..s.len().saturating_sub(1) {
        let (a, b) = (s[i] - level, s[i + 1] - level);
        if (a < 0.0) != (b < 0.0) {
            let x0 = field.grid.center(i)[0];
            return Some(x0 + field.grid.h * a / (a - b));
        }
    }
    None
}

/// Standing-wave measurements: L^2 drift of `s` and front displacement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StandingWave {
    pub drift_l2: f64,
    pub front_shift: f64,
    pub h: f64,
    pub steps: usize,
}

pub fn standing_wave(cfg: &RunConfig) -> Result<StandingWave> {
    let coeffs = cfg.coefficients()?;
    let eps = cfg.model.eps;
    let n = cfg.domain.n.unwrap_or(1024);
    let grid = crate::grid::UniformGrid::cube(1, n, cfg.domain.l)?;
    let u0 = match cfg.director()? {
        crate::initial_data::DirectorPreset::Constant(u) => u,
        _ => cfg.init.u0,
    };
    let mut field = standing_profile(&grid, &coeffs, eps, u0, 0.0);
    let s0 = s_field(&field);
    let level = 0.5 * coeffs.s_plus()?;
    let x0 = front_position(&field, level).ok_or_else(|| Error::Extinction("no front in the initial profile".into()))?;
    let solver = SolverConfig::new(
        eps,
        cfg.scheme()?,
        cfg.solver.safety,
        cfg.solver.t_end,
        cfg.solver.t_end.max(1e-12),
        &coeffs,
        field.max_norm(),
    )?;
    let summary = run(&mut field, &coeffs, &solver, |_| Ok(Control::Continue))?;
    let s1 = s_field(&field);
    let drift: f64 = s0.iter().zip(&s1).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * grid.h;
    let x1 = front_position(&field, level).ok_or_else(|| Error::Extinction("front left the domain".into()))?;
    debug_assert!(optimal_profile(&coeffs, 0.0) == level);
    Ok(StandingWave {
        drift_l2: drift.sqrt(),
        front_shift: (x1 - x0).abs(),
        h: grid.h,
        steps: summary.steps,
    })
}

fn profile_1d(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let sw = standing_wave(cfg)?;
    out.note("steps", sw.steps);
    out.note("h", sw.h);
    out.checks.push(Check::new(
        "profile_drift",
        sw.drift_l2 <= 1e-3,
        format!("L2 drift of s = {:e}", sw.drift_l2),
    ));
    out.checks.push(Check::new(
        "front_displacement",
        sw.front_shift <= sw.h,
        format!("front moved {:e}, h = {:e}", sw.front_shift, sw.h),
    ));
    Ok(())
}

fn report(dir: &Path, out: &mut Outcome) -> Result<String> {
    let path = dir.join("series.csv");
    let (header, rows) = read_csv(&path)?;
    let mut text = format!("series: {}\nrows: {}\n", path.display(), rows.len());
    let _ = writeln!(text, "{:<22} {:>24} {:>24} {:>24} {:>24}", "column", "first", "last", "min", "max");
    for (k, name) in header.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).filter(|v| !v.is_nan()).collect();
        if col.is_empty() {
            let _ = writeln!(text, "{name:<22} (no finite values)");
            continue;
        }
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            text,
            "{name:<22} {:>24} {:>24} {:>24} {:>24}",
            col[0],
            col[col.len() - 1],
            min,
            max
        );
    }
    out.note("rows", rows.len());
    out.checks.push(Check::new("series_nonempty", !rows.is_empty(), format!("{} rows", rows.len())));
    write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    Ok(text)
}

fn manifest(cmd: Subcommand, cfg: &RunConfig, outcome: &Outcome, status: &str, wall: f64, error: Option<&Error>) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "subcommand = {}", cmd.name());
    let _ = writeln!(m, "code_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "status = {status}");
    let _ = writeln!(m, "wall_time_s = {wall}");
    let _ = writeln!(m, "mollifier = table-substitution");
    if let Some(sum) = &outcome.dtable_checksum {
        let _ = writeln!(m, "dtable_checksum = {sum}");
    }
    if let Some(e) = error {
        let _ = writeln!(m, "error = {e}");
    }
    for c in &outcome.checks {
        let _ = writeln!(m, "check.{} = {} ({})", c.name, fmt_ok(c.passed), c.detail);
    }
    for (k, v) in &outcome.summary {
        let _ = writeln!(m, "summary.{k} = {v}");
    }
    for w in &outcome.warnings {
        let _ = writeln!(m, "warning = {w}");
    }
    let _ = writeln!(m, "\n[config]");
    m += &cfg.to_toml();
    m
}

/// Run one experiment into `dir`. The manifest is always written; a run that
/// errors also leaves `.failed` next to its partial outputs.
pub fn execute(cmd: Subcommand, cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let failed_marker = dir.join(".failed");
    if failed_marker.exists() {
        std::fs::remove_file(&failed_marker).map_err(|e| Error::io(&failed_marker, e))?;
    }
    let start = Instant::now();
    let mut outcome = Outcome::default();
    let res = run_inner(cmd, cfg, dir, &mut outcome);
    let wall = start.elapsed().as_secs_f64();
    let status = match &res {
        Err(_) => "error",
        Ok(()) if outcome.passed() => "pass",
        Ok(()) => "fail",
    };
    write_atomic(
        &dir.join("manifest.txt"),
        manifest(cmd, cfg, &outcome, status, wall, res.as_ref().err()).as_bytes(),
    )?;
    match res {
        Ok(()) => Ok(outcome),
        Err(e) => {
            write_atomic(&failed_marker, format!("{e}\n").as_bytes())?;
            Err(e)
        }
    }
}

fn run_inner(cmd: Subcommand, cfg: &RunConfig, dir: &Path, outcome: &mut Outcome) -> Result<()> {
    match cmd {
        Subcommand::VerifyPotential => verify_potential(cfg, outcome),
        Subcommand::BuildDtable => build_dtable(cfg, dir, outcome),
        Subcommand::Profile1d => profile_1d(cfg, outcome),
        Subcommand::McfBenchmark | Subcommand::Simulate => {
            let coeffs = cfg.coefficients()?;
            let table = load_or_build_table(cfg, &coeffs)?;
            outcome.dtable_checksum = Some(table.checksum());
            let sim = simulate(cfg, &table, Some(dir))?;
            outcome.warnings.extend(sim.warnings.iter().cloned());
            simulation_checks(cfg, &sim, cmd == Subcommand::McfBenchmark, outcome)
        }
        Subcommand::Report => {
            report(dir, outcome)?;
            Ok(())
        }
    }
}

/// Text of `report.txt` in `dir`, for printing.
pub fn report_text(dir: &Path) -> Option<String> {
    std::fs::read_to_string(dir.join("report.txt")).ok()
}

/// Default output directory for a subcommand when none is configured.
pub fn default_out_dir(cfg: &RunConfig, cmd: Subcommand) -> PathBuf {
    cfg.output.out_dir.join(cmd.name())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("qmcf-exp-{}-{name}", std::process::id()))
    }

    #[test]
    fn verify_potential_on_defaults() {
        let cfg = RunConfig::default();
        let dir = tmp("verify");
        let o = execute(Subcommand::VerifyPotential, &cfg, &dir).unwrap();
        assert!(o.passed(), "{:?}", o.checks);
        assert_eq!(o.summary[0], ("s_plus".to_string(), "3".to_string()));
        let m = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
        assert!(m.contains("status = pass"));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn failed_run_leaves_marker() {
        let cfg = RunConfig::parse("", &["solver.t_end=0.07".into(), "domain.n=40".into()]).unwrap();
        let dir = tmp("failed");
        assert!(execute(Subcommand::Simulate, &cfg, &dir).is_err());
        assert!(dir.join(".failed").exists());
        assert!(std::fs::read_to_string(dir.join("manifest.txt")).unwrap().contains("status = error"));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn small_simulation_rows_match_cadence() {
        let cfg = RunConfig::parse(
            "",
            &[
                "model.eps=0.08".into(),
                "domain.n=50".into(),
                "solver.t_end=0.01".into(),
                "solver.snapshot_every=0.0025".into(),
                "dtable.n_s=128".into(),
                "dtable.n_r=160".into(),
            ],
        )
        .unwrap();
        let dir = tmp("small");
        let o = execute(Subcommand::Simulate, &cfg, &dir).unwrap();
        let (h, rows) = read_csv(&dir.join("series.csv")).unwrap();
        assert_eq!(h.len(), 17);
        assert_eq!(rows.len(), 5);
        assert!(o.checks.iter().any(|c| c.name == "maximum_modulus" && c.passed));
        let rep = execute(Subcommand::Report, &cfg, &dir).unwrap();
        assert!(rep.passed());
        assert!(report_text(&dir).unwrap().contains("E_mod"));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
