//! Snapshot output as legacy-VTK ASCII unstructured grids, and a small reader
//! for the same subset of the format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::centroid_strength;
use crate::error::{Error, Result};
use crate::mesh::{element_sym_gradient, DofVector};
use crate::problem::Problem;
use crate::rheology::{delta_p, sigma, yield_lhs};

/// Per-element derived quantities written as cell data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DerivedFields {
    pub delta_p: Vec<f64>,
    pub sigma_xx: Vec<f64>,
    pub sigma_xy: Vec<f64>,
    pub sigma_yy: Vec<f64>,
    /// Yield-curve left-hand side over `P²/4`, which equals `(δ_p/δ)²`.
    pub yield_lhs_over_quarter_p2: Vec<f64>,
}

/// Stresses and yield ratios of `u` at time `t`, with `P` taken at the centroid.
pub fn derived_fields(problem: &Problem, u: &DofVector, t: f64) -> Result<DerivedFields> {
    let mesh = &problem.mesh;
    u.check(mesh)?;
    let strength = centroid_strength(problem, t)?;
    let mut d = DerivedFields::default();
    for (ti, &p) in strength.iter().enumerate() {
        let z = element_sym_gradient(mesh, u, ti);
        let s = sigma(p, z, &problem.rheology)?;
        d.delta_p.push(delta_p(z, &problem.rheology));
        d.sigma_xx.push(s.xx);
        d.sigma_xy.push(s.xy);
        d.sigma_yy.push(s.yy);
        d.yield_lhs_over_quarter_p2
            .push(yield_lhs(p, z, &problem.rheology)? / (0.25 * p * p));
    }
    Ok(d)
}

fn push_scalars(out: &mut String, name: &str, values: &[f64]) {
    let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(out, "{v:.17e}");
    }
}

/// Renders the snapshot of `u` at time `t` as legacy-VTK text.
pub fn snapshot_vtk(problem: &Problem, u: &DofVector, t: f64) -> Result<String> {
    let mesh = &problem.mesh;
    let derived = derived_fields(problem, u, t)?;
    let p = problem.strength.p.at(t)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# vtk DataFile Version 3.0\nsea-ice velocity t={t:e}\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(out, "POINTS {} double", mesh.n_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{:.17e} {:.17e} 0", v.x, v.y);
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for tri in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {}\nVECTORS velocity double", mesh.n_vertices());
    for w in u.to_vertex_field(mesh) {
        let _ = writeln!(out, "{:.17e} {:.17e} 0", w.x, w.y);
    }
    push_scalars(&mut out, "P", &p);
    let _ = writeln!(out, "CELL_DATA {nt}");
    push_scalars(&mut out, "delta_p", &derived.delta_p);
    push_scalars(&mut out, "sigma_xx", &derived.sigma_xx);
    push_scalars(&mut out, "sigma_xy", &derived.sigma_xy);
    push_scalars(&mut out, "sigma_yy", &derived.sigma_yy);
    push_scalars(&mut out, "yield_lhs_over_quarterP2", &derived.yield_lhs_over_quarter_p2);
    Ok(out)
}

pub fn write_snapshot(problem: &Problem, u: &DofVector, t: f64, path: &Path) -> Result<()> {
    std::fs::write(path, snapshot_vtk(problem, u, t)?)?;
    Ok(())
}

/// Contents of a legacy-VTK unstructured grid of triangles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkGrid {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u32>,
    pub point_scalars: BTreeMap<String, Vec<f64>>,
    pub point_vectors: BTreeMap<String, Vec<[f64; 3]>>,
    pub cell_scalars: BTreeMap<String, Vec<f64>>,
}

/// Parses the ASCII subset written by [`snapshot_vtk`]: `POINTS`, `CELLS`,
/// `CELL_TYPES`, and `SCALARS`/`VECTORS` under `POINT_DATA`/`CELL_DATA`.
pub fn read_vtk(text: &str, path: &Path) -> Result<VtkGrid> {
    let err = |m: String| Error::Parse {
        path: path.to_path_buf(),
        message: m,
    };
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("# vtk DataFile Version") {
        return Err(err("missing '# vtk DataFile Version' header".into()));
    }
    lines.next();
    if lines.next().map(str::trim) != Some("ASCII") {
        return Err(err("only ASCII files are supported".into()));
    }
    if lines.next().map(str::trim) != Some("DATASET UNSTRUCTURED_GRID") {
        return Err(err("expected DATASET UNSTRUCTURED_GRID".into()));
    }
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| err(format!("unexpected end of file reading {what}")))
    };
    fn num<T: std::str::FromStr>(s: &str, what: &str, path: &Path) -> Result<T> {
        s.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            message: format!("bad {what}: {s:?}"),
        })
    }

    let mut grid = VtkGrid::default();
    // section: 0 = none, 1 = point data, 2 = cell data
    let mut section = 0;
    let mut counts = (0usize, 0usize);
    while let Ok(key) = next("keyword") {
        match key {
            "POINTS" => {
                let n: usize = num(next("count")?, "point count", path)?;
                next("type")?;
                for _ in 0..n {
                    let mut p = [0.0; 3];
                    for c in &mut p {
                        *c = num(next("coordinate")?, "coordinate", path)?;
                    }
                    grid.points.push(p);
                }
                counts.0 = n;
            }
            "CELLS" => {
                let n: usize = num(next("count")?, "cell count", path)?;
                next("size")?;
                for _ in 0..n {
                    let k: usize = num(next("cell size")?, "cell size", path)?;
                    let mut cell = Vec::with_capacity(k);
                    for _ in 0..k {
                        let i: usize = num(next("index")?, "cell index", path)?;
                        if i >= grid.points.len() {
                            return Err(err(format!("cell index {i} out of range")));
                        }
                        cell.push(i);
                    }
                    grid.cells.push(cell);
                }
                counts.1 = n;
            }
            "CELL_TYPES" => {
                let n: usize = num(next("count")?, "cell type count", path)?;
                for _ in 0..n {
                    grid.cell_types.push(num(next("cell type")?, "cell type", path)?);
                }
            }
            "POINT_DATA" | "CELL_DATA" => {
                let n: usize = num(next("count")?, "data count", path)?;
                section = if key == "POINT_DATA" { 1 } else { 2 };
                let expect = if section == 1 { counts.0 } else { counts.1 };
                if n != expect {
                    return Err(err(format!("{key} count {n} does not match {expect}")));
                }
            }
            "SCALARS" => {
                let name = next("name")?.to_string();
                next("type")?;
                let first = next("LOOKUP_TABLE or components")?;
                if first != "LOOKUP_TABLE" {
                    next("LOOKUP_TABLE")?;
                }
                next("table name")?;
                let n = if section == 1 { counts.0 } else { counts.1 };
                let mut vals = Vec::with_capacity(n);
                for _ in 0..n {
                    vals.push(num(next("value")?, "scalar value", path)?);
                }
                match section {
                    1 => grid.point_scalars.insert(name, vals),
                    2 => grid.cell_scalars.insert(name, vals),
                    _ => return Err(err("SCALARS outside a data section".into())),
                };
            }
            "VECTORS" => {
                let name = next("name")?.to_string();
                next("type")?;
                if section != 1 {
                    return Err(err("only point vectors are supported".into()));
                }
                let mut vals = Vec::with_capacity(counts.0);
                for _ in 0..counts.0 {
                    let mut v = [0.0; 3];
                    for c in &mut v {
                        *c = num(next("vector component")?, "vector component", path)?;
                    }
                    vals.push(v);
                }
                grid.point_vectors.insert(name, vals);
            }
            other => return Err(err(format!("unsupported keyword {other:?}"))),
        }
    }
    if grid.cell_types.len() != grid.cells.len() {
        return Err(err("CELL_TYPES count differs from CELLS".into()));
    }
    Ok(grid)
}

pub fn read_vtk_file(path: &Path) -> Result<VtkGrid> {
    read_vtk(&std::fs::read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::PhysParams;
    use crate::mesh::build_rect_mesh;
    use crate::rheology::{CutoffMode, RheologyParams};
    use crate::vector::Vec2;

    fn problem(n: usize) -> Problem {
        let params = RheologyParams::new(2.0, 0.1, 1.0, 0.0, CutoffMode::CutoffBoth).unwrap();
        let mesh = build_rect_mesh(n, n, 1.0, 1.0).unwrap();
        Problem::unforced(mesh, params, PhysParams::new(1.0, 0.0, 1.0).unwrap(), 3.0).unwrap()
    }

    #[test]
    fn zero_field_on_two_triangles() {
        let p = problem(1);
        let u = DofVector::zeros(&p.mesh);
        let text = snapshot_vtk(&p, &u, 0.0).unwrap();
        let g = read_vtk(&text, Path::new("mem")).unwrap();
        assert_eq!(g.points.len(), 4);
        assert_eq!(g.cells.len(), 2);
        assert_eq!(g.cell_types, vec![5, 5]);
        assert_eq!(g.point_scalars["P"], vec![3.0; 4]);
        assert!(g.point_vectors["velocity"].iter().all(|v| *v == [0.0; 3]));
        for name in ["delta_p", "sigma_xy"] {
            assert!(g.cell_scalars[name].iter().all(|&v| v == 0.0), "{name}");
        }
        // the lower cut-off leaves the zero-strain stress at −P/2 on the diagonal
        assert!(g.cell_scalars["sigma_xx"].iter().all(|&v| v == -1.5));
        assert!(g.cell_scalars["yield_lhs_over_quarterP2"].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn yield_ratio_marks_the_band() {
        // one interior vertex; its velocity sets the strain on all elements
        let p = problem(2);
        let mut u = DofVector::zeros(&p.mesh);
        let ratio = |u: &DofVector| derived_fields(&p, u, 0.0).unwrap().yield_lhs_over_quarter_p2;
        let dp = |u: &DofVector| derived_fields(&p, u, 0.0).unwrap().delta_p;
        u.set_node(0, Vec2::new(0.2, 0.0));
        for (r, d) in ratio(&u).iter().zip(dp(&u)) {
            if (0.1..=1.0).contains(&d) {
                assert!((r - 1.0).abs() < 1e-12, "{r}");
            }
        }
        u.set_node(0, Vec2::new(5.0, 0.0));
        assert!(ratio(&u).iter().zip(dp(&u)).any(|(r, d)| d > 1.0 && *r > 1.0));
    }

    #[test]
    fn round_trip_values_are_exact() {
        let p = problem(3);
        let u = DofVector::interpolate(&p.mesh, |x| Vec2::new(x.x * 0.1, -x.y / 3.0));
        let g = read_vtk(&snapshot_vtk(&p, &u, 1.5).unwrap(), Path::new("mem")).unwrap();
        let field = u.to_vertex_field(&p.mesh);
        for (a, b) in g.point_vectors["velocity"].iter().zip(&field) {
            assert_eq!((a[0], a[1]), (b.x, b.y));
        }
        assert_eq!(g.cell_scalars["delta_p"], derived_fields(&p, &u, 1.5).unwrap().delta_p);
    }

    #[test]
    fn reader_rejects_garbage() {
        assert!(read_vtk("hello", Path::new("x")).is_err());
        let bad = "# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 1 double\n0 0 0\nCELLS 1 4\n3 0 1 2\n";
        assert!(read_vtk(bad, Path::new("x")).is_err());
    }
}
