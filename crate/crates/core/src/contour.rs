//! Level-set extraction on 2-D cell-centered scalar fields and circle fitting.

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::qtensor::Mat3;

/// Crossings of `level` along the lattice edges joining neighboring cell centers,
/// i.e. the vertices of the marching-squares contour.
pub fn marching_squares(grid: &UniformGrid, values: &[f64], level: f64) -> Vec<[f64; 2]> {
    assert_eq!(grid.dim, 2, "contour extraction needs a 2-D grid");
    let mut pts = Vec::new();
    let (n0, n1) = (grid.n[0], grid.n[1]);
    let mut push = |a: usize, b: usize| {
        let (va, vb) = (values[a] - level, values[b] - level);
        if (va < 0.0) != (vb < 0.0) {
            let w = va / (va - vb);
            let (xa, xb) = (grid.center(a), grid.center(b));
            pts.push([xa[0] + w * (xb[0] - xa[0]), xa[1] + w * (xb[1] - xa[1])]);
        }
    };
    for i in 0..n0 {
        for j in 0..n1 {
            let here = grid.linear([i, j, 0]);
            if i + 1 < n0 {
                push(here, grid.linear([i + 1, j, 0]));
            }
            if j + 1 < n1 {
                push(here, grid.linear([i, j + 1, 0]));
            }
        }
    }
    pts
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleFit {
    pub center: [f64; 2],
    pub radius: f64,
    /// Root mean square of `|p - center| - radius`.
    pub rms: f64,
    pub points: usize,
}

/// Algebraic least-squares circle fit (Kasa).
pub fn fit_circle(points: &[[f64; 2]]) -> Result<CircleFit> {
    if points.len() < 3 {
        return Err(Error::Extinction(format!("only {} contour points", points.len())));
    }
    // Minimize sum (x^2 + y^2 + D x + E y + F)^2.
    let mut m = Mat3::ZERO;
    let mut rhs = [0.0; 3];
    for p in points {
        let row = [p[0], p[1], 1.0];
        let z = -(p[0] * p[0] + p[1] * p[1]);
        for a in 0..3 {
            for b in 0..3 {
                m[(a, b)] += row[a] * row[b];
            }
            rhs[a] += row[a] * z;
        }
    }
    let det = m.det();
    if det.abs() < 1e-300 {
        return Err(Error::Degenerate("collinear contour points".into()));
    }
    let mut sol = [0.0; 3];
    for (k, s) in sol.iter_mut().enumerate() {
        let mut mk = m;
        for a in 0..3 {
            mk[(a, k)] = rhs[a];
        }
        *s = mk.det() / det;
    }
    let center = [-0.5 * sol[0], -0.5 * sol[1]];
    let r2 = center[0] * center[0] + center[1] * center[1] - sol[2];
    if r2 <= 0.0 {
        return Err(Error::Degenerate("circle fit has no real radius".into()));
    }
    let radius = r2.sqrt();
    let ss: f64 = points
        .iter()
        .map(|p| ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).powi(2))
        .sum();
    Ok(CircleFit {
        center,
        radius,
        rms: (ss / points.len() as f64).sqrt(),
        points: points.len(),
    })
}

/// Contour at `level` followed by a circle fit; an empty contour signals extinction.
pub fn interface_extract(grid: &UniformGrid, s_values: &[f64], level: f64) -> Result<CircleFit> {
    fit_circle(&marching_squares(grid, s_values, level))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exact_circle() {
        let pts: Vec<[f64; 2]> = (0..50)
            .map(|k| {
                let a = 0.3 + k as f64 * 0.1;
                [0.2 + 0.7 * a.cos(), -0.1 + 0.7 * a.sin()]
            })
            .collect();
        let fit = fit_circle(&pts).unwrap();
        assert!((fit.radius - 0.7).abs() < 1e-12);
        assert!((fit.center[0] - 0.2).abs() < 1e-12 && (fit.center[1] + 0.1).abs() < 1e-12);
        assert!(fit.rms < 1e-12);
    }

    #[test]
    fn contour_of_radial_field() {
        let grid = UniformGrid::cube(2, 64, 1.0).unwrap();
        let v: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.center(i);
                (x[0] * x[0] + x[1] * x[1]).sqrt()
            })
            .collect();
        let fit = interface_extract(&grid, &v, 0.4).unwrap();
        assert!((fit.radius - 0.4).abs() < grid.h);
        assert!(fit.center[0].abs() < grid.h && fit.center[1].abs() < grid.h);
    }

    #[test]
    fn empty_contour_is_extinction() {
        let grid = UniformGrid::cube(2, 16, 1.0).unwrap();
        let v = vec![0.0; grid.len()];
        assert!(matches!(interface_extract(&grid, &v, 1.5), Err(Error::Extinction(_))));
    }
}
