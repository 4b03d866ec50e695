//! Run configuration: bracketed `[section]` key = value text (TOML), with defaults,
//! `section.key=value` overrides, and validation before any computation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::initial_data::{DirectorPreset, ProfileParams};
use crate::interface::ShrinkingSphere;
use crate::potential::PotentialCoefficients;
use crate::quasi_distance::{TableMethod, TableSpec};
use crate::solver::Scheme;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    /// Half-width of the box `[-L, L]^dim`.
    #[serde(rename = "L")]
    pub l: f64,
    pub dim: usize,
    /// Cells per axis; when absent, the smallest even count with `h <= eps/4`.
    pub n: Option<usize>,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection { l: 1.0, dim: 2, n: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterfaceSection {
    #[serde(rename = "R0")]
    pub r0: f64,
    pub center: Vec<f64>,
    #[serde(rename = "delta_I")]
    pub delta_i: f64,
}

impl Default for InterfaceSection {
    fn default() -> Self {
        InterfaceSection {
            r0: 0.4,
            center: vec![0.0, 0.0, 0.0],
            delta_i: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub critical: bool,
    pub eps: f64,
    #[serde(rename = "K")]
    pub k: u32,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            a: 3.0,
            b: 9.0,
            c: 1.0,
            critical: true,
            eps: 0.03,
            k: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    /// `constant` or `in-plane`.
    pub director: String,
    pub kappa: f64,
    /// Director of the `constant` preset.
    pub u0: [f64; 3],
    pub delta0: f64,
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection {
            director: "in-plane".into(),
            kappa: 0.5,
            u0: [0.0, 0.0, 1.0],
            delta0: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub scheme: String,
    pub safety: f64,
    pub t_end: f64,
    /// Time between diagnostics rows.
    pub snapshot_every: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            scheme: "explicit-euler".into(),
            safety: 0.25,
            t_end: 0.06,
            snapshot_every: 0.002,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// Geodesic table to load; built in memory when absent.
    pub dtable_path: Option<PathBuf>,
    /// Interface level as a fraction of `s_plus`.
    pub levelset_fraction: f64,
    pub bound_ceiling: f64,
    pub gronwall_ceiling: f64,
    /// Run the harmonic-map reference alongside and compare directors.
    pub compare_director: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            dtable_path: None,
            levelset_fraction: 0.5,
            bound_ceiling: 50.0,
            gronwall_ceiling: 100.0,
            compare_director: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DtableSection {
    pub s_lo: f64,
    pub s_hi: f64,
    pub r_hi: f64,
    pub n_s: usize,
    pub n_r: usize,
    /// `fast-marching` or `dijkstra`.
    pub method: String,
    /// Neighborhood radius of the Dijkstra stencil.
    pub stencil: usize,
}

impl Default for DtableSection {
    fn default() -> Self {
        let s = TableSpec::simulation();
        DtableSection {
            s_lo: s.s_lo,
            s_hi: s.s_hi,
            r_hi: s.r_hi,
            n_s: s.n_s,
            n_r: s.n_r,
            method: s.method.name().into(),
            stencil: s.stencil,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Write a snapshot every this many diagnostics rows; 0 writes only the first and last.
    pub snapshot_stride: usize,
    /// Also export the `s` field as legacy VTK next to each snapshot.
    pub vtk: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            out_dir: PathBuf::from("out"),
            seed: 0,
            snapshot_stride: 0,
            vtk: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub interface: InterfaceSection,
    pub model: ModelSection,
    pub init: InitSection,
    pub solver: SolverSection,
    pub diagnostics: DiagnosticsSection,
    pub dtable: DtableSection,
    pub output: OutputSection,
}

fn cfg_err(key: &str, msg: impl Into<String>) -> Error {
    Error::config(key, msg)
}

/// Parse `value` as a TOML value, falling back to a bare string.
fn override_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

impl RunConfig {
    /// Parse text, apply `section.key=value` overrides, then validate.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| cfg_err(&span_key(text, &e), e.message().to_string()))?;
        for ov in overrides {
            let (path, value) = ov
                .split_once('=')
                .ok_or_else(|| cfg_err(ov, "override must look like section.key=value"))?;
            let path = path.trim();
            let (section, key) = path
                .split_once('.')
                .ok_or_else(|| cfg_err(path, "override key must be section.key"))?;
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(sec) = entry else {
                return Err(cfg_err(section, "not a section"));
            };
            sec.insert(key.to_string(), override_value(value.trim()));
        }
        // Re-render so deserialization errors carry spans into the merged text.
        let merged = toml::to_string(&table).map_err(|e| cfg_err("config", e.to_string()))?;
        let cfg: RunConfig = toml::from_str(&merged)
            .map_err(|e: toml::de::Error| cfg_err(&span_key(&merged, &e), e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn coefficients(&self) -> Result<PotentialCoefficients> {
        let m = &self.model;
        let mut c = PotentialCoefficients::new(m.a, m.b, m.c, m.critical)
            .map_err(|e| cfg_err("model.b", e.to_string()))?;
        c.eps_power = m.k as i32;
        Ok(c)
    }

    /// Cells per axis, given or derived from `h <= eps/4`.
    pub fn cells(&self) -> usize {
        self.domain.n.unwrap_or_else(|| {
            let n = (2.0 * self.domain.l / (0.25 * self.model.eps) - 1e-9).ceil() as usize;
            n + n % 2
        })
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::cube(self.domain.dim, self.cells(), self.domain.l)
    }

    pub fn center(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (k, v) in self.interface.center.iter().take(3).enumerate() {
            c[k] = *v;
        }
        c
    }

    pub fn sphere(&self) -> Result<ShrinkingSphere> {
        ShrinkingSphere::new(
            self.center(),
            self.interface.r0,
            self.domain.dim,
            self.interface.delta_i,
            self.domain.l,
        )
    }

    pub fn director(&self) -> Result<DirectorPreset> {
        match self.init.director.as_str() {
            "constant" => DirectorPreset::constant(self.init.u0),
            "in-plane" => Ok(DirectorPreset::InPlaneAngle { kappa: self.init.kappa }),
            other => Err(cfg_err("init.director", format!("unknown preset `{other}` (constant | in-plane)"))),
        }
    }

    pub fn profile(&self) -> Result<ProfileParams> {
        ProfileParams::new(self.model.eps, self.init.delta0)
    }

    pub fn scheme(&self) -> Result<Scheme> {
        Scheme::from_name(&self.solver.scheme)
            .ok_or_else(|| cfg_err("solver.scheme", format!("unknown scheme `{}`", self.solver.scheme)))
    }

    pub fn table_spec(&self) -> Result<TableSpec> {
        let d = &self.dtable;
        let method = TableMethod::from_name(&d.method)
            .ok_or_else(|| cfg_err("dtable.method", format!("unknown method `{}`", d.method)))?;
        let spec = TableSpec {
            s_lo: d.s_lo,
            s_hi: d.s_hi,
            r_hi: d.r_hi,
            n_s: d.n_s,
            n_r: d.n_r,
            stencil: d.stencil,
            method,
        };
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let coeffs = self.coefficients()?;
        coeffs.validate().map_err(|e| cfg_err("model", e.to_string()))?;
        if !(self.model.eps > 0.0 && self.model.eps.is_finite()) {
            return Err(cfg_err("model.eps", format!("must be positive, got {}", self.model.eps)));
        }
        if self.model.k == 0 {
            return Err(cfg_err("model.K", "must be at least 1"));
        }
        if !(1..=3).contains(&self.domain.dim) {
            return Err(cfg_err("domain.dim", format!("must be 1, 2 or 3, got {}", self.domain.dim)));
        }
        if let Some(n) = self.domain.n {
            if n % 2 != 0 {
                return Err(cfg_err("domain.n", format!("must be even so no cell center sits on the domain center, got {n}")));
            }
        }
        self.grid()?;
        if self.interface.center.len() != 3 && self.interface.center.len() != self.domain.dim {
            return Err(cfg_err("interface.center", "needs dim or 3 coordinates"));
        }
        if self.domain.dim >= 2 {
            self.sphere()?;
        }
        self.director()?;
        self.profile()?;
        self.scheme()?;
        if !(self.solver.safety > 0.0 && self.solver.safety <= 1.0) {
            return Err(cfg_err("solver.safety", format!("must lie in (0, 1], got {}", self.solver.safety)));
        }
        if !(self.solver.t_end >= 0.0 && self.solver.t_end.is_finite()) {
            return Err(cfg_err("solver.t_end", "must be nonnegative"));
        }
        if !(self.solver.snapshot_every > 0.0) {
            return Err(cfg_err("solver.snapshot_every", "must be positive"));
        }
        let f = self.diagnostics.levelset_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(cfg_err("diagnostics.levelset_fraction", format!("must lie in (0, 1), got {f}")));
        }
        self.table_spec()?
            .validate(coeffs.s_plus()?)
            .map_err(|e| cfg_err("dtable", e.to_string()))?;
        Ok(())
    }
}

/// Best-effort `section.key` for a TOML syntax error.
fn span_key(text: &str, e: &toml::de::Error) -> String {
    let Some(span) = e.span() else { return "config".into() };
    let before = &text[..span.start.min(text.len())];
    let section = before
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')))
        .unwrap_or("");
    let line = text[span.start.min(text.len())..].lines().next().unwrap_or("");
    let key = line.split('=').next().unwrap_or("").trim();
    match (section.is_empty(), key.is_empty()) {
        (true, _) => key.to_string(),
        (false, true) => section.to_string(),
        (false, false) => format!("{section}.{key}"),
    }
}
