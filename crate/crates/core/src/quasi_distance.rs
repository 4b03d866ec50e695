//! Quasi-distance to the nematic manifold under the degenerate metric `sqrt(2F)|dq|`.
//!
//! Minimal paths keep a constant eigenframe, so the distance reduces to a
//! function of the biaxiality coordinates `(s, r)`. On the uniaxial slice the
//! distance has a closed form; elsewhere it is read from a Dijkstra table.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::potential::PotentialCoefficients;
use crate::qtensor::{biaxiality_of, eigensystem, Biaxiality, Mat3, QTensor};

/// Below this biaxiality the `d_r` contribution to the gradient is dropped.
pub const DEGENERACY_R: f64 = 1e-6;

const TABLE_MAGIC: &str = "QMCF-DTABLE";
const TABLE_VERSION: u32 = 1;

/// `F` restricted to diagonal tensors, written in the coordinates `(r, s)`.
pub fn effective_bulk(coeffs: &PotentialCoefficients, s: f64, r: f64) -> f64 {
    let rho2 = 3.0 * s * s + r * r;
    coeffs.a / 9.0 * rho2 + coeffs.c / 81.0 * rho2 * rho2 - 2.0 * coeffs.b / 27.0 * (s * s * s - s * r * r)
}

/// `g(s0) = (2/sqrt 3) * integral of sqrt f over [s0, s_plus]`, the distance of a
/// uniaxial tensor with degree of orientation `s0` to the nematic manifold.
pub fn df_uniaxial(coeffs: &PotentialCoefficients, s0: f64) -> Result<f64> {
    let sp = coeffs.s_plus()?;
    check_slice(s0, sp)?;
    let s0 = s0.clamp(0.0, sp);
    if coeffs.critical {
        let k = 2.0 * coeffs.c.sqrt() / (3.0 * 3f64.sqrt());
        let g = k * (sp.powi(3) / 6.0 - sp * s0 * s0 / 2.0 + s0.powi(3) / 3.0);
        Ok(g.max(0.0))
    } else {
        df_uniaxial_quadrature(coeffs, s0, 1e-12)
    }
}

/// Adaptive Simpson evaluation of the same integral; independent of the closed form.
pub fn df_uniaxial_quadrature(coeffs: &PotentialCoefficients, s0: f64, tol: f64) -> Result<f64> {
    let sp = coeffs.s_plus()?;
    check_slice(s0, sp)?;
    let s0 = s0.clamp(0.0, sp);
    let f = |t: f64| coeffs.uniaxial_f(t).max(0.0).sqrt();
    Ok(2.0 / 3f64.sqrt() * adaptive_simpson(&f, s0, sp, tol, 50))
}

fn check_slice(s0: f64, sp: f64) -> Result<()> {
    if !(-1e-12..=sp + 1e-12).contains(&s0) {
        return Err(Error::Domain(format!("closed-form distance needs s in [0, {sp}], got {s0}")));
    }
    Ok(())
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// Surface tension of the flat isotropic-nematic transition, `d^F(0)`.
pub fn c_f(coeffs: &PotentialCoefficients) -> Result<f64> {
    if !coeffs.critical {
        return Err(Error::Domain("c_F is defined for critical coefficients".into()));
    }
    df_uniaxial(coeffs, 0.0)
}

/// Sampling box and resolution of a [`GeodesicTable`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableSpec {
    pub s_lo: f64,
    pub s_hi: f64,
    pub r_hi: f64,
    /// Number of intervals along `s`.
    pub n_s: usize,
    /// Number of intervals along `r`.
    pub n_r: usize,
    /// Neighbor offsets `(di, dj)` with `max(|di|, |dj|) <= stencil` and coprime entries.
    /// `1` is the 8-connected graph. Ignored by fast marching.
    pub stencil: usize,
    pub method: TableMethod,
}

/// Shortest-path solver used to fill a [`GeodesicTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableMethod {
    /// Graph shortest paths with midpoint edge weights.
    Dijkstra,
    /// Upwind eikonal solver.
    FastMarching,
}

impl TableMethod {
    pub fn name(self) -> &'static str {
        match self {
            TableMethod::Dijkstra => "dijkstra",
            TableMethod::FastMarching => "fast-marching",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "dijkstra" => Some(TableMethod::Dijkstra),
            "fast-marching" => Some(TableMethod::FastMarching),
            _ => None,
        }
    }
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec {
            s_lo: -0.5,
            s_hi: 3.5,
            r_hi: 2.0,
            n_s: 400,
            n_r: 200,
            stencil: 1,
            method: TableMethod::FastMarching,
        }
    }
}

impl TableSpec {
    /// Box wide enough for every tensor with `|Q| <= 2.7`, used by simulations.
    pub fn simulation() -> Self {
        TableSpec {
            r_hi: 5.0,
            n_r: 500,
            ..TableSpec::default()
        }
    }

    pub fn validate(&self, s_plus: f64) -> Result<()> {
        if self.n_s < 32 || self.n_r < 32 {
            return Err(Error::config(
                "dtable.resolution",
                format!("need at least 32 intervals per axis, got {}x{}", self.n_s, self.n_r),
            ));
        }
        if !(self.s_lo <= 0.0 && self.s_hi >= s_plus && self.r_hi > 0.0) {
            return Err(Error::config(
                "dtable.ranges",
                format!(
                    "ranges [{}, {}] x [0, {}] must contain [0, {s_plus}] x {{0}}",
                    self.s_lo, self.s_hi, self.r_hi
                ),
            ));
        }
        if self.stencil == 0 || self.stencil > 8 {
            return Err(Error::config("dtable.stencil", format!("must be in 1..=8, got {}", self.stencil)));
        }
        Ok(())
    }
}

/// Sampled quasi-distance over `[s_lo, s_hi] x [0, r_hi]` with tabulated partials.
#[derive(Clone, Debug)]
pub struct GeodesicTable {
    pub spec: TableSpec,
    pub coeffs: PotentialCoefficients,
    ds: f64,
    dr: f64,
    /// Row-major in `s`: index `i * (n_r + 1) + j`.
    values: Vec<f64>,
    d_s: Vec<f64>,
    d_r: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert for shortest-first.
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn dijkstra(
    dist: &mut [f64],
    seeds: &[usize],
    ns: usize,
    nr: usize,
    offsets: &[(i64, i64)],
    edge: impl Fn(usize, usize, i64, i64) -> f64,
) {
    let mut done = vec![false; ns * nr];
    let mut heap: BinaryHeap<HeapEntry> = seeds.iter().map(|&i| HeapEntry(dist[i], i)).collect();
    while let Some(HeapEntry(d, idx)) = heap.pop() {
        if done[idx] {
            continue;
        }
        done[idx] = true;
        let (i, j) = (idx / nr, idx % nr);
        for &(di, dj) in offsets {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni >= ns as i64 || nj >= nr as i64 {
                continue;
            }
            let nidx = ni as usize * nr + nj as usize;
            if done[nidx] {
                continue;
            }
            let cand = d + edge(i, j, di, dj);
            if cand < dist[nidx] {
                dist[nidx] = cand;
                heap.push(HeapEntry(cand, nidx));
            }
        }
    }
}

/// Second-order fast marching for `|grad d| = speed` in coordinates `(sqrt(3) s, r)`,
/// with the row `r = 0` treated as a mirror line.
fn fast_marching(dist: &mut [f64], seeds: &[usize], ns: usize, nr: usize, hx: f64, hy: f64, speed: &[f64]) {
    let mut done = vec![false; ns * nr];
    let mut heap: BinaryHeap<HeapEntry> = seeds.iter().map(|&i| HeapEntry(dist[i], i)).collect();
    for &i in seeds {
        done[i] = true;
    }
    let value = |dist: &[f64], done: &[bool], i: i64, j: i64| -> f64 {
        let j = j.abs();
        if i < 0 || i >= ns as i64 || j >= nr as i64 {
            return f64::INFINITY;
        }
        let idx = i as usize * nr + j as usize;
        if done[idx] {
            dist[idx]
        } else {
            f64::INFINITY
        }
    };
    // Upwind coefficient pair (alpha, beta) along one axis: the one-sided
    // difference is sqrt(alpha) * (d - beta).
    let axis = |dist: &[f64], done: &[bool], i: i64, j: i64, di: i64, dj: i64, h: f64| -> Option<(f64, f64)> {
        let mut best: Option<(f64, (f64, f64))> = None;
        for sgn in [-1, 1] {
            let a1 = value(dist, done, i + sgn * di, j + sgn * dj);
            if !a1.is_finite() {
                continue;
            }
            let a2 = value(dist, done, i + 2 * sgn * di, j + 2 * sgn * dj);
            let cand = if a2.is_finite() && a2 <= a1 {
                (9.0 / (4.0 * h * h), (4.0 * a1 - a2) / 3.0)
            } else {
                (1.0 / (h * h), a1)
            };
            if best.is_none_or(|b| a1 < b.0) {
                best = Some((a1, cand));
            }
        }
        best.map(|b| b.1)
    };
    let update = |dist: &[f64], done: &[bool], idx: usize| -> f64 {
        let (i, j) = ((idx / nr) as i64, (idx % nr) as i64);
        let f = speed[idx];
        let terms: Vec<(f64, f64)> = [axis(dist, done, i, j, 1, 0, hx), axis(dist, done, i, j, 0, 1, hy)]
            .into_iter()
            .flatten()
            .collect();
        let solve = |terms: &[(f64, f64)]| -> Option<f64> {
            let a: f64 = terms.iter().map(|t| t.0).sum();
            let b: f64 = terms.iter().map(|t| -2.0 * t.0 * t.1).sum();
            let c: f64 = terms.iter().map(|t| t.0 * t.1 * t.1).sum::<f64>() - f * f;
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return None;
            }
            let d = (-b + disc.sqrt()) / (2.0 * a);
            terms.iter().all(|t| d >= t.1).then_some(d)
        };
        if terms.len() == 2 {
            if let Some(d) = solve(&terms) {
                return d;
            }
        }
        terms
            .iter()
            .filter_map(|t| solve(std::slice::from_ref(t)))
            .fold(f64::INFINITY, f64::min)
    };
    while let Some(HeapEntry(d, idx)) = heap.pop() {
        if d > dist[idx] {
            continue;
        }
        done[idx] = true;
        let (i, j) = ((idx / nr) as i64, (idx % nr) as i64);
        for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= ns as i64 || nj >= nr as i64 {
                continue;
            }
            let nidx = ni as usize * nr + nj as usize;
            if done[nidx] {
                continue;
            }
            let cand = update(dist, &done, nidx);
            if cand < dist[nidx] {
                dist[nidx] = cand;
                heap.push(HeapEntry(cand, nidx));
            }
        }
    }
}

impl GeodesicTable {
    /// Shortest-path distances from `(s_plus, 0)` on the grid graph, with edge weight
    /// `(2/3) sqrt(3 ds^2 + dr^2)` times the mean of `sqrt(F~)` at sub-segment midpoints.
    pub fn build(coeffs: &PotentialCoefficients, spec: TableSpec) -> Result<Self> {
        let sp = coeffs.s_plus()?;
        spec.validate(sp)?;
        let (ns, nr) = (spec.n_s + 1, spec.n_r + 1);
        let ds = (spec.s_hi - spec.s_lo) / spec.n_s as f64;
        let dr = spec.r_hi / spec.n_r as f64;
        let s_at = |i: f64| spec.s_lo + i * ds;
        let r_at = |j: f64| j * dr;
        let sqrt_ft = |s: f64, r: f64| effective_bulk(coeffs, s, r).max(0.0).sqrt();

        let mut dist = vec![f64::INFINITY; ns * nr];
        let mut seeds = Vec::new();
        // Seed the nodes bracketing the source with the straight-segment cost
        // from the source point itself.
        let i_src = (sp - spec.s_lo) / ds;
        let i0 = (i_src.floor() as usize).min(ns - 1);
        for i in [i0, (i0 + 1).min(ns - 1)] {
            let delta = s_at(i as f64) - sp;
            let w = if delta.abs() < 1e-14 {
                0.0
            } else {
                (2.0 / 3.0) * 3f64.sqrt() * delta.abs() * sqrt_ft(sp + 0.5 * delta, 0.0)
            };
            if w < dist[i * nr] {
                dist[i * nr] = w;
                seeds.push(i * nr);
            }
        }
        match spec.method {
            TableMethod::Dijkstra => {
                let k = spec.stencil as i64;
                let mut offsets = Vec::new();
                for di in -k..=k {
                    for dj in -k..=k {
                        if (di, dj) != (0, 0) && gcd(di.unsigned_abs() as usize, dj.unsigned_abs() as usize) == 1 {
                            offsets.push((di, dj));
                        }
                    }
                }
                let edge = |i: usize, j: usize, di: i64, dj: i64| -> f64 {
                    let sub = di.abs().max(dj.abs());
                    let len = (2.0 / 3.0) * (3.0 * (di as f64 * ds).powi(2) + (dj as f64 * dr).powi(2)).sqrt();
                    let mut acc = 0.0;
                    for m in 0..sub {
                        let t = (m as f64 + 0.5) / sub as f64;
                        acc += sqrt_ft(s_at(i as f64 + t * di as f64), r_at(j as f64 + t * dj as f64));
                    }
                    len * acc / sub as f64
                };
                dijkstra(&mut dist, &seeds, ns, nr, &offsets, edge);
            }
            TableMethod::FastMarching => {
                let speed: Vec<f64> = (0..ns * nr)
                    .map(|idx| (2.0 / 3.0) * sqrt_ft(s_at((idx / nr) as f64), r_at((idx % nr) as f64)))
                    .collect();
                fast_marching(&mut dist, &seeds, ns, nr, 3f64.sqrt() * ds, dr, &speed);
            }
        }
        Ok(Self::from_values(*coeffs, spec, dist))
    }

    fn from_values(coeffs: PotentialCoefficients, spec: TableSpec, values: Vec<f64>) -> Self {
        let (ns, nr) = (spec.n_s + 1, spec.n_r + 1);
        let ds = (spec.s_hi - spec.s_lo) / spec.n_s as f64;
        let dr = spec.r_hi / spec.n_r as f64;
        let at = |i: usize, j: usize| values[i * nr + j];
        let mut d_s = vec![0.0; ns * nr];
        let mut d_r = vec![0.0; ns * nr];
        for i in 0..ns {
            for j in 0..nr {
                d_s[i * nr + j] = if i == 0 {
                    (at(1, j) - at(0, j)) / ds
                } else if i == ns - 1 {
                    (at(i, j) - at(i - 1, j)) / ds
                } else {
                    (at(i + 1, j) - at(i - 1, j)) / (2.0 * ds)
                };
                // Evenness in r: the mirror node at -dr equals the node at +dr.
                d_r[i * nr + j] = if j == 0 {
                    0.0
                } else if j == nr - 1 {
                    (at(i, j) - at(i, j - 1)) / dr
                } else {
                    (at(i, j + 1) - at(i, j - 1)) / (2.0 * dr)
                };
            }
        }
        GeodesicTable {
            spec,
            coeffs,
            ds,
            dr,
            values,
            d_s,
            d_r,
        }
    }

    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.spec.n_r + 1) + j]
    }

    pub fn node_coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.spec.s_lo + i as f64 * self.ds, j as f64 * self.dr)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.ds, self.dr)
    }

    pub fn contains(&self, s: f64, r: f64) -> bool {
        let tol = 1e-12;
        s >= self.spec.s_lo - tol && s <= self.spec.s_hi + tol && r >= -tol && r <= self.spec.r_hi + tol
    }

    fn locate(&self, s: f64, r: f64) -> Result<(usize, usize, f64, f64)> {
        if !self.contains(s, r) {
            return Err(Error::Domain(format!(
                "(s, r) = ({s}, {r}) outside table [{}, {}] x [0, {}]",
                self.spec.s_lo, self.spec.s_hi, self.spec.r_hi
            )));
        }
        let x = ((s - self.spec.s_lo) / self.ds).clamp(0.0, self.spec.n_s as f64);
        let y = (r / self.dr).clamp(0.0, self.spec.n_r as f64);
        let i = (x.floor() as usize).min(self.spec.n_s - 1);
        let j = (y.floor() as usize).min(self.spec.n_r - 1);
        Ok((i, j, x - i as f64, y - j as f64))
    }

    fn bilinear(&self, data: &[f64], i: usize, j: usize, fx: f64, fy: f64) -> f64 {
        let nr = self.spec.n_r + 1;
        let v00 = data[i * nr + j];
        let v01 = data[i * nr + j + 1];
        let v10 = data[(i + 1) * nr + j];
        let v11 = data[(i + 1) * nr + j + 1];
        (1.0 - fx) * ((1.0 - fy) * v00 + fy * v01) + fx * ((1.0 - fy) * v10 + fy * v11)
    }

    /// Interpolated distance at `(s, r)`.
    pub fn value(&self, s: f64, r: f64) -> Result<f64> {
        let (i, j, fx, fy) = self.locate(s, r)?;
        Ok(self.bilinear(&self.values, i, j, fx, fy))
    }

    /// Interpolated `(d_s, d_r)` at `(s, r)`.
    pub fn partials(&self, s: f64, r: f64) -> Result<(f64, f64)> {
        let (i, j, fx, fy) = self.locate(s, r)?;
        Ok((self.bilinear(&self.d_s, i, j, fx, fy), self.bilinear(&self.d_r, i, j, fx, fy)))
    }

    /// Distance of a general tensor, through its biaxiality coordinates.
    pub fn df_general(&self, q: &QTensor) -> Result<f64> {
        let b = crate::qtensor::biaxiality(q);
        self.value(b.s, b.r)
    }

    /// `d_s (3/2)(n3 n3 - I/3) + d_r (3/2)(n2 n2 - n1 n1)` in the eigenframe of `q`.
    pub fn grad_df(&self, q: &QTensor) -> Result<QTensor> {
        Ok(self.value_and_grad(q)?.1)
    }

    /// Distance and gradient from a single eigendecomposition.
    pub fn value_and_grad(&self, q: &QTensor) -> Result<(f64, QTensor)> {
        let es = eigensystem(q);
        let Biaxiality { s, r } = biaxiality_of(&es);
        let (i, j, fx, fy) = self.locate(s, r)?;
        let d = self.bilinear(&self.values, i, j, fx, fy);
        let g_s = self.bilinear(&self.d_s, i, j, fx, fy);
        let g_r = self.bilinear(&self.d_r, i, j, fx, fy);
        let [n1, n2, n3] = es.frame;
        let mut m = (Mat3::outer(n3, n3) - Mat3::IDENTITY * (1.0 / 3.0)) * (1.5 * g_s);
        if r >= DEGENERACY_R {
            m = m + (Mat3::outer(n2, n2) - Mat3::outer(n1, n1)) * (1.5 * g_r);
        }
        Ok((d, QTensor::from_matrix(&m)))
    }

    /// Versioned text form: header lines then one value per line, row-major in `s`.
    pub fn serialize(&self) -> String {
        let s = &self.spec;
        let c = &self.coeffs;
        let mut out = String::with_capacity(self.values.len() * 22 + 256);
        let _ = writeln!(out, "{TABLE_MAGIC} {TABLE_VERSION}");
        let _ = writeln!(out, "s_range {} {}", s.s_lo, s.s_hi);
        let _ = writeln!(out, "r_range 0 {}", s.r_hi);
        let _ = writeln!(out, "resolution {} {}", s.n_s, s.n_r);
        let _ = writeln!(out, "stencil {} {}", s.stencil, s.method.name());
        let _ = writeln!(out, "coefficients {} {} {} {}", c.a, c.b, c.c, c.critical);
        let _ = writeln!(out, "values {}", self.values.len());
        for v in &self.values {
            let _ = writeln!(out, "{v:e}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ctx = "geodesic table";
        let mut lines = text.lines();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(ctx, format!("missing {what} line")))
        };
        let header = next("header")?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(TABLE_MAGIC) {
            return Err(Error::parse(ctx, format!("bad magic in `{header}`")));
        }
        let version: u32 = parse_tok(parts.next(), ctx, "version")?;
        if version != TABLE_VERSION {
            return Err(Error::parse(ctx, format!("unsupported version {version}")));
        }
        let fields = |line: &str, key: &str| -> Result<Vec<String>> {
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::parse(ctx, format!("expected `{key}`, got `{line}`")));
            }
            Ok(it.map(str::to_owned).collect())
        };
        let sr = fields(next("s_range")?, "s_range")?;
        let rr = fields(next("r_range")?, "r_range")?;
        let res = fields(next("resolution")?, "resolution")?;
        let st = fields(next("stencil")?, "stencil")?;
        let co = fields(next("coefficients")?, "coefficients")?;
        let nv = fields(next("values")?, "values")?;
        fn get<T: std::str::FromStr>(v: &[String], k: usize, what: &str) -> Result<T> {
            parse_tok(v.get(k).map(String::as_str), "geodesic table", what)
        }
        let spec = TableSpec {
            s_lo: get(&sr, 0, "s_lo")?,
            s_hi: get(&sr, 1, "s_hi")?,
            r_hi: get(&rr, 1, "r_hi")?,
            n_s: get(&res, 0, "n_s")?,
            n_r: get(&res, 1, "n_r")?,
            stencil: get(&st, 0, "stencil")?,
            method: st
                .get(1)
                .and_then(|m| TableMethod::from_name(m))
                .ok_or_else(|| Error::parse(ctx, "unknown table method"))?,
        };
        let coeffs = PotentialCoefficients {
            a: get(&co, 0, "a")?,
            b: get(&co, 1, "b")?,
            c: get(&co, 2, "c")?,
            critical: get(&co, 3, "critical")?,
            eps_power: 4,
        };
        let count: usize = get(&nv, 0, "value count")?;
        if count != (spec.n_s + 1) * (spec.n_r + 1) {
            return Err(Error::parse(ctx, format!("value count {count} does not match resolution")));
        }
        let values = lines
            .take(count)
            .map(|l| parse_tok::<f64>(Some(l.trim()), ctx, "value"))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != count {
            return Err(Error::parse(ctx, format!("expected {count} values, found {}", values.len())));
        }
        Ok(Self::from_values(coeffs, spec, values))
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        let text = self.serialize();
        crate::io::write_atomic(path, text.as_bytes())?;
        Ok(checksum(text.as_bytes()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// SHA-256 of the serialized form.
    pub fn checksum(&self) -> String {
        checksum(self.serialize().as_bytes())
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, ctx: &str, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(ctx, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(ctx, format!("cannot parse {what} from `{tok}`")))
}

pub(crate) fn checksum(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
