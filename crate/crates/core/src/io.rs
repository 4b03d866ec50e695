//! File outputs: atomic writes, snapshots, legacy VTK, CSV series.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::diagnostics::{DiagnosticsRecord, CSV_COLUMNS};
use crate::error::{Error, Result};
use crate::grid::{Boundary, TensorField, UniformGrid};
use crate::qtensor::QTensor;

/// Write through a sibling temporary file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let mut f = fs::File::create(tmp).map_err(|e| Error::io(tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(tmp, e))?;
    f.sync_all().map_err(|e| Error::io(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}

/// Snapshot text: header `QMCF1 d_a n1 [n2 [n3]] h t eps`, then one cell per line
/// (linear order, last axis fastest) with the five basis coefficients.
pub fn snapshot_string(field: &TensorField, eps: f64) -> String {
    let g = &field.grid;
    let mut s = format!("QMCF1 {}", g.dim);
    for k in 0..g.dim {
        s += &format!(" {}", g.n[k]);
    }
    s += &format!(" {} {} {}\n", g.h, field.t, eps);
    for q in &field.data {
        let c = q.0;
        s += &format!("{} {} {} {} {}\n", c[0], c[1], c[2], c[3], c[4]);
    }
    s
}

pub fn write_snapshot(path: &Path, field: &TensorField, eps: f64) -> Result<()> {
    write_atomic(path, snapshot_string(field, eps).as_bytes())
}

/// Inverse of [`snapshot_string`]. The grid is centered at the origin and the
/// boundary is the zero Dirichlet layer. Returns the field and `eps`.
pub fn parse_snapshot(text: &str) -> Result<(TensorField, f64)> {
    let ctx = "snapshot";
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::parse(ctx, "empty file"))?
        .split_whitespace()
        .collect();
    if header.first() != Some(&"QMCF1") {
        return Err(Error::parse(ctx, "missing QMCF1 header"));
    }
    let num = |i: usize| -> Result<&str> {
        header.get(i).copied().ok_or_else(|| Error::parse(ctx, "truncated header"))
    };
    let dim: usize = num(1)?.parse().map_err(|_| Error::parse(ctx, "bad dimension"))?;
    if !(1..=3).contains(&dim) || header.len() != 5 + dim {
        return Err(Error::parse(ctx, "header field count does not match the dimension"));
    }
    let mut n = [1usize; 3];
    for (k, nk) in n.iter_mut().enumerate().take(dim) {
        *nk = num(2 + k)?.parse().map_err(|_| Error::parse(ctx, "bad cell count"))?;
    }
    let float = |i: usize| -> Result<f64> { num(i)?.parse().map_err(|_| Error::parse(ctx, "bad float in header")) };
    let (h, t, eps) = (float(2 + dim)?, float(3 + dim)?, float(4 + dim)?);
    let mut lo = [0.0; 3];
    for k in 0..dim {
        lo[k] = -0.5 * h * n[k] as f64;
    }
    let grid = UniformGrid { dim, n, h, lo };
    let mut data = Vec::with_capacity(grid.len());
    for (row, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(ctx, format!("bad float on data line {}", row + 1)))?;
        if vals.len() != 5 {
            return Err(Error::parse(ctx, format!("data line {} has {} values", row + 1, vals.len())));
        }
        data.push(QTensor([vals[0], vals[1], vals[2], vals[3], vals[4]]));
    }
    if data.len() != grid.len() {
        return Err(Error::parse(ctx, format!("expected {} cells, found {}", grid.len(), data.len())));
    }
    Ok((
        TensorField {
            grid,
            boundary: Boundary::zero(),
            data,
            t,
        },
        eps,
    ))
}

pub fn read_snapshot(path: &Path) -> Result<(TensorField, f64)> {
    parse_snapshot(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Legacy VTK structured-points file holding a per-cell scalar.
pub fn vtk_string(grid: &UniformGrid, name: &str, values: &[f64], title: &str) -> String {
    let mut origin = [0.0; 3];
    for k in 0..grid.dim {
        origin[k] = grid.lo[k] + 0.5 * grid.h;
    }
    let mut s = String::new();
    s += "# vtk DataFile Version 3.0\n";
    s += &format!("{}\n", title.replace('\n', " "));
    s += "ASCII\nDATASET STRUCTURED_POINTS\n";
    s += &format!("DIMENSIONS {} {} {}\n", grid.n[0], grid.n[1], grid.n[2]);
    s += &format!("ORIGIN {} {} {}\n", origin[0], origin[1], origin[2]);
    s += &format!("SPACING {} {} {}\n", grid.h, grid.h, grid.h);
    s += &format!("POINT_DATA {}\nSCALARS {name} double 1\nLOOKUP_TABLE default\n", grid.len());
    // VTK wants x fastest.
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                s += &format!("{}\n", values[grid.linear([i, j, k])]);
            }
        }
    }
    s
}

pub fn write_vtk(path: &Path, grid: &UniformGrid, name: &str, values: &[f64], title: &str) -> Result<()> {
    write_atomic(path, vtk_string(grid, name, values, title).as_bytes())
}

/// CSV with a header row; floats use shortest round-trip formatting.
pub fn csv_string(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        s += &cells.join(",");
        s.push('\n');
    }
    s
}

pub fn write_series(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let rows: Vec<Vec<f64>> = records.iter().map(|r| r.values().to_vec()).collect();
    write_atomic(path, csv_string(&CSV_COLUMNS, &rows).as_bytes())
}

/// Header and numeric rows of a CSV written by [`csv_string`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = path.display().to_string();
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::parse(&ctx, "empty file"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(&ctx, format!("bad number on row {}", i + 1)))?;
        if row.len() != header.len() {
            return Err(Error::parse(&ctx, format!("row {} has {} fields", i + 1, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
