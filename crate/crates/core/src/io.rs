//! Text file formats: scalar fields and meshes as CSV with `#` metadata,
//! projected meshes as Wavefront OBJ, reports as JSON.
//!
//! Numbers are written with 17 significant digits, so every `f64` survives a
//! write/read cycle bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfacePatch;
use crate::grid::{Grid2, GridField};
use crate::minkowski::MinkowskiVec4;

pub const FIELD_HEADER: &str = "u,v,value";
pub const MESH_HEADER: &str = "u,v,x1,x2,x3,x4";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn metadata(out: &mut String, kind: &str, name: &str, g: &Grid2) {
    let _ = writeln!(out, "# {kind}: {name}");
    let _ = writeln!(out, "# n_u: {}", g.n_u);
    let _ = writeln!(out, "# n_v: {}", g.n_v);
    for (k, v) in [("u_min", g.u_min), ("u_max", g.u_max), ("v_min", g.v_min), ("v_max", g.v_max)] {
        let _ = writeln!(out, "# {k}: {}", num(v));
    }
}

pub fn format_field(f: &GridField, name: &str) -> String {
    let g = f.grid;
    let mut out = String::with_capacity(64 * g.len() + 256);
    metadata(&mut out, "field", name, &g);
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for (i, j) in g.nodes() {
        let _ = writeln!(out, "{},{},{}", num(g.u(i)), num(g.v(j)), num(f.at(i, j)));
    }
    out
}

pub fn format_mesh(patch: &SurfacePatch, name: &str) -> String {
    let g = *patch.grid();
    let mut out = String::with_capacity(128 * g.len() + 256);
    metadata(&mut out, "mesh", name, &g);
    out.push_str(MESH_HEADER);
    out.push('\n');
    for (i, j) in g.nodes() {
        let p = patch.position(i, j);
        let _ = writeln!(out, "{},{},{},{},{},{}", num(g.u(i)), num(g.v(j)), num(p[0]), num(p[1]), num(p[2]), num(p[3]));
    }
    out
}

struct Table {
    grid: Grid2,
    name: Option<String>,
    rows: Vec<Vec<f64>>,
}

fn parse_table(text: &str, path: &str, header: &str) -> Result<Table> {
    let err = |line: usize, msg: String| Error::FileFormat { path: path.to_string(), line, msg };
    let mut meta = std::collections::BTreeMap::new();
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim_end_matches('\r')));
    let mut header_line = 0;
    for (n, line) in lines.by_ref() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.insert(k.trim().to_string(), (n, v.trim().to_string()));
            }
            continue;
        }
        if line.trim() != header {
            return Err(err(n, format!("expected header `{header}`, found `{line}`")));
        }
        header_line = n;
        break;
    }
    if header_line == 0 {
        return Err(err(text.lines().count(), format!("missing header `{header}`")));
    }
    let get = |k: &str| meta.get(k).ok_or_else(|| err(header_line, format!("missing metadata `{k}`")));
    let int = |k: &str| -> Result<usize> {
        let (n, v) = get(k)?;
        v.parse().map_err(|_| err(*n, format!("`{k}` is not a non-negative integer: `{v}`")))
    };
    let real = |k: &str| -> Result<f64> {
        let (n, v) = get(k)?;
        v.parse().map_err(|_| err(*n, format!("`{k}` is not a number: `{v}`")))
    };
    let grid = Grid2::new(int("n_u")?, int("n_v")?, (real("u_min")?, real("u_max")?), (real("v_min")?, real("v_max")?))
        .map_err(|e| err(header_line, e.to_string()))?;
    let name = meta.get("field").or_else(|| meta.get("mesh")).map(|(_, v)| v.clone());
    let width = header.split(',').count();
    let mut rows = Vec::with_capacity(grid.len());
    let mut last = header_line;
    for (n, line) in lines {
        last = n;
        if line.trim().is_empty() {
            continue;
        }
        let k = rows.len();
        if k >= grid.len() {
            return Err(err(n, format!("more than the {} data rows announced by the metadata", grid.len())));
        }
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| err(n, format!("`{}` is not a number", s.trim()))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != width {
            return Err(err(n, format!("expected {width} columns, found {}", vals.len())));
        }
        let (i, j) = grid.ij(k);
        let (u, v) = (grid.u(i), grid.v(j));
        let tol = |x: f64| 1e-12 * (1.0 + x.abs());
        if (vals[0] - u).abs() > tol(u) || (vals[1] - v).abs() > tol(v) {
            return Err(err(n, format!("row {k} should be node ({i}, {j}) at ({u}, {v}), found ({}, {})", vals[0], vals[1])));
        }
        rows.push(vals);
    }
    if rows.len() != grid.len() {
        return Err(err(last, format!("truncated: {} of {} data rows present", rows.len(), grid.len())));
    }
    Ok(Table { grid, name, rows })
}

/// Parses a field; `path` only labels error messages.
pub fn parse_field(text: &str, path: &str) -> Result<(GridField, Option<String>)> {
    let t = parse_table(text, path, FIELD_HEADER)?;
    let f = GridField::new(t.grid, t.rows.iter().map(|r| r[2]).collect())?;
    Ok((f, t.name))
}

pub fn parse_mesh(text: &str, path: &str) -> Result<SurfacePatch> {
    let t = parse_table(text, path, MESH_HEADER)?;
    let pos = t.rows.iter().map(|r| MinkowskiVec4::new(r[2], r[3], r[4], r[5])).collect();
    SurfacePatch::from_positions(t.grid, pos)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::FileFormat { path: path.display().to_string(), line: 0, msg: e.to_string() })
}

pub fn read_field(path: &Path) -> Result<GridField> {
    Ok(parse_field(&read(path)?, &path.display().to_string())?.0)
}

pub fn read_mesh(path: &Path) -> Result<SurfacePatch> {
    parse_mesh(&read(path)?, &path.display().to_string())
}

pub fn write_field(path: &Path, f: &GridField, name: &str) -> Result<()> {
    Ok(fs::write(path, format_field(f, name))?)
}

pub fn write_mesh(path: &Path, patch: &SurfacePatch, name: &str) -> Result<()> {
    Ok(fs::write(path, format_mesh(patch, name))?)
}

/// Coordinate dropped by the 3-D projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X1,
    #[default]
    X2,
    X3,
    X4,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x1" => Ok(Self::X1),
            "x2" => Ok(Self::X2),
            "x3" => Ok(Self::X3),
            "x4" => Ok(Self::X4),
            _ => Err(Error::InvalidParams(format!("projection axis must be x1, x2, x3 or x4 (got `{s}`)"))),
        }
    }
}

/// Vertices in storage order with `drop` removed; one quad per grid cell.
pub fn format_obj(patch: &SurfacePatch, drop: Axis) -> String {
    let g = *patch.grid();
    let keep: Vec<usize> = (0..4).filter(|&k| k != drop.index()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "# projection dropping {drop:?}");
    for p in patch.positions() {
        let _ = writeln!(out, "v {} {} {}", num(p[keep[0]]), num(p[keep[1]]), num(p[keep[2]]));
    }
    for i in 0..g.n_u.saturating_sub(1) {
        for j in 0..g.n_v.saturating_sub(1) {
            let a = g.idx(i, j) + 1;
            let b = g.idx(i + 1, j) + 1;
            let _ = writeln!(out, "f {a} {b} {} {}", b + 1, a + 1);
        }
    }
    out
}

pub fn write_obj(path: &Path, patch: &SurfacePatch, drop: Axis) -> Result<()> {
    Ok(fs::write(path, format_obj(patch, drop))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidParams(e.to_string()))?;
    s.push('\n');
    Ok(fs::write(path, s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2 {
        Grid2::new(5, 6, (0.1, 0.7), (-0.3, 0.9)).unwrap()
    }

    #[test]
    fn field_roundtrip_is_exact() {
        let f = GridField::from_fn(grid(), |u, v| (u * 7.3).sin() / (1.0 + v * v) + 1e-300);
        let text = format_field(&f, "demo");
        let (back, name) = parse_field(&text, "demo.csv").unwrap();
        assert_eq!(name.as_deref(), Some("demo"));
        assert_eq!(back.grid, f.grid);
        assert!(back.values.iter().zip(&f.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(format_field(&back, "demo"), text);
    }

    #[test]
    fn mesh_roundtrip_is_exact() {
        let p = SurfacePatch::from_fn(grid(), |u, v| MinkowskiVec4::new(u.cos(), v / 3.0, u * v, u.exp())).unwrap();
        let text = format_mesh(&p, "m");
        let back = parse_mesh(&text, "m.csv").unwrap();
        assert_eq!(format_mesh(&back, "m"), text);
    }

    #[test]
    fn truncated_file_names_the_line() {
        let f = GridField::constant(grid(), 1.0);
        let text = format_field(&f, "t");
        let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        match parse_field(&cut, "t.csv") {
            Err(Error::FileFormat { line, msg, .. }) => {
                assert_eq!(line, 20);
                assert!(msg.contains("truncated"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_names_the_line() {
        let text = format_field(&GridField::constant(grid(), 1.0), "t").replacen("1.0000000000000000e0\n", "abc\n", 1);
        assert!(matches!(parse_field(&text, "t.csv"), Err(Error::FileFormat { line: 9, .. })));
    }

    #[test]
    fn missing_metadata_is_reported() {
        let text = format_field(&GridField::constant(grid(), 1.0), "t").replace("# n_v: 6\n", "");
        assert!(matches!(parse_field(&text, "t.csv"), Err(Error::FileFormat { .. })));
    }

    #[test]
    fn obj_has_vertices_and_quads() {
        let p = SurfacePatch::from_fn(grid(), |u, v| MinkowskiVec4::new(u, v, 0.0, u)).unwrap();
        let s = format_obj(&p, Axis::X2);
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 30);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 20);
        assert!(s.contains("f 1 7 8 2"));
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("x3".parse::<Axis>().unwrap(), Axis::X3);
        assert!("y".parse::<Axis>().is_err());
    }
}
