//! Conforming triangulations and the P1 vector space with zero boundary trace.
//!
//! Boundary vertices carry no unknowns. The interior vertices are numbered in
//! vertex order and each owns two consecutive degrees of freedom `(u_x, u_y)`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rheology::{delta_p, RheologyParams, SymTensor2};
use crate::vector::Vec2;

/// Area and constant gradients of the three P1 basis functions of a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [Vec2; 3],
}

fn compute_geometry(p: [Vec2; 3], index: usize) -> Result<ElementGeometry> {
    let twice = (p[1] - p[0]).cross(p[2] - p[0]);
    let scale = (p[1] - p[0]).norm_sq().max((p[2] - p[0]).norm_sq());
    if !(twice > 1e-14 * scale) || !twice.is_finite() {
        return Err(Error::DegenerateElement {
            index,
            area: 0.5 * twice,
        });
    }
    let inv = 1.0 / twice;
    let g = |a: Vec2, b: Vec2| Vec2::new((a.y - b.y) * inv, (b.x - a.x) * inv);
    Ok(ElementGeometry {
        area: 0.5 * twice,
        grads: [g(p[1], p[2]), g(p[2], p[0]), g(p[0], p[1])],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    node_of_vertex: Vec<Option<usize>>,
    interior: Vec<usize>,
    geometry: Vec<ElementGeometry>,
    vertex_weight: Vec<f64>,
}

impl TriMesh {
    /// Validates orientation, conformity and the boundary mask.
    pub fn new(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>, boundary: Vec<bool>) -> Result<Self> {
        let nv = vertices.len();
        if boundary.len() != nv {
            return Err(Error::InvalidMesh(format!(
                "boundary mask has {} entries for {nv} vertices",
                boundary.len()
            )));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let mut used = vec![false; nv];
        let mut geometry = Vec::with_capacity(triangles.len());
        // directed edge -> count
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            geometry.push(compute_geometry(tri.map(|v| vertices[v]), t)?);
            for k in 0..3 {
                used[tri[k]] = true;
                let e = (tri[k], tri[(k + 1) % 3]);
                let c = edges.entry(e).or_insert(0);
                *c += 1;
                if *c > 1 {
                    return Err(Error::InvalidMesh(format!(
                        "edge {e:?} appears twice with the same orientation"
                    )));
                }
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }
        let mut on_boundary_edge = vec![false; nv];
        for &(a, b) in edges.keys() {
            if !edges.contains_key(&(b, a)) {
                on_boundary_edge[a] = true;
                on_boundary_edge[b] = true;
            }
        }
        if let Some(v) = (0..nv).find(|&v| on_boundary_edge[v] != boundary[v]) {
            return Err(Error::InvalidMesh(format!(
                "boundary flag of vertex {v} is {} but the vertex {} on a boundary edge",
                boundary[v],
                if on_boundary_edge[v] { "lies" } else { "does not lie" }
            )));
        }
        Ok(Self::assemble(vertices, triangles, boundary, geometry))
    }

    /// Builds a mesh whose boundary mask is inferred from unshared edges.
    pub fn with_detected_boundary(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut boundary = vec![false; vertices.len()];
        for (&(a, b), &c) in &count {
            if c == 1 && a < boundary.len() && b < boundary.len() {
                boundary[a] = true;
                boundary[b] = true;
            }
        }
        Self::new(vertices, triangles, boundary)
    }

    fn assemble(
        vertices: Vec<Vec2>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        geometry: Vec<ElementGeometry>,
    ) -> Self {
        let mut node_of_vertex = vec![None; vertices.len()];
        let mut interior = Vec::new();
        for (v, &b) in boundary.iter().enumerate() {
            if !b {
                node_of_vertex[v] = Some(interior.len());
                interior.push(v);
            }
        }
        let mut vertex_weight = vec![0.0; vertices.len()];
        for (tri, geo) in triangles.iter().zip(&geometry) {
            for &v in tri {
                vertex_weight[v] += geo.area / 3.0;
            }
        }
        Self {
            vertices,
            triangles,
            boundary,
            node_of_vertex,
            interior,
            geometry,
            vertex_weight,
        }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }
    /// Number of vertices carrying unknowns.
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }
    pub fn n_dofs(&self) -> usize {
        2 * self.interior.len()
    }
    /// Vertex index of each interior node, in DOF order.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }
    pub fn node_of_vertex(&self, v: usize) -> Option<usize> {
        self.node_of_vertex[v]
    }
    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geometry[t]
    }
    /// Lumped (vertex-quadrature) mass of vertex `v`: one third of the adjacent triangle areas.
    pub fn lumped_mass(&self, v: usize) -> f64 {
        self.vertex_weight[v]
    }
    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        (a + b + c) * (1.0 / 3.0)
    }
    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }
    /// Largest edge length.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path, message),
            Error::InvalidMesh(m) | Error::Config(m) => Error::parse(path, m),
            other => other,
        })
    }

    /// Parses the ASCII format `nv nt` / `x y b` × nv / `i j k` × nt.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let bad = |line: usize, msg: &str| Error::parse("<mesh>", format!("line {line}: {msg}"));
        let (l0, head) = lines.next().ok_or_else(|| bad(0, "empty mesh file"))?;
        let counts: Vec<usize> = head
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad(l0, "expected `nv nt`")))
            .collect::<Result<_>>()?;
        let [nv, nt] = counts[..] else {
            return Err(bad(l0, "expected `nv nt`"));
        };
        let mut vertices = Vec::with_capacity(nv);
        let mut boundary = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| bad(0, "truncated vertex list"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad(ln, "expected `x y b`"));
            }
            let x: f64 = f[0].parse().map_err(|_| bad(ln, "bad x"))?;
            let y: f64 = f[1].parse().map_err(|_| bad(ln, "bad y"))?;
            let b = match f[2] {
                "0" => false,
                "1" => true,
                _ => return Err(bad(ln, "boundary flag must be 0 or 1")),
            };
            vertices.push(Vec2::new(x, y));
            boundary.push(b);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = lines.next().ok_or_else(|| bad(0, "truncated triangle list"))?;
            let idx: Vec<usize> = l
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad(ln, "bad vertex index")))
                .collect::<Result<_>>()?;
            let [i, j, k] = idx[..] else {
                return Err(bad(ln, "expected `i j k`"));
            };
            triangles.push([i, j, k]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(bad(ln, "trailing data after triangle list"));
        }
        Self::new(vertices, triangles, boundary)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n_vertices(), self.n_triangles());
        for (p, &b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(s, "{:?} {:?} {}", p.x, p.y, u8::from(b));
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }
}

/// Structured triangulation of `[0, lx] × [0, ly]`; every cell is split along its
/// lower-left to upper-right diagonal.
pub fn build_rect_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter("rectangle mesh needs nx, ny >= 1".into()));
    }
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::InvalidParameter(
            "rectangle side lengths must be positive".into(),
        ));
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vec2::new(lx * i as f64 / nx as f64, ly * j as f64 / ny as f64));
            boundary.push(i == 0 || j == 0 || i == nx || j == ny);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriMesh::new(vertices, triangles, boundary)
}

/// Geometry of triangle `t`, recomputed from its vertex coordinates.
pub fn element_geometry(mesh: &TriMesh, t: usize) -> Result<ElementGeometry> {
    let tri = mesh
        .triangles
        .get(t)
        .ok_or_else(|| Error::InvalidParameter(format!("no triangle {t}")))?;
    compute_geometry(tri.map(|v| mesh.vertices[v]), t)
}

/// Nodal velocity coefficients on the interior vertices, interleaved `(u_x, u_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector {
    values: Vec<f64>,
}

impl DofVector {
    pub fn zeros(mesh: &TriMesh) -> Self {
        Self {
            values: vec![0.0; mesh.n_dofs()],
        }
    }

    pub fn from_values(mesh: &TriMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_dofs(),
                got: values.len(),
            });
        }
        Ok(Self { values })
    }

    /// Nodal interpolant of `f` on the interior vertices (boundary values are dropped).
    pub fn interpolate(mesh: &TriMesh, f: impl Fn(Vec2) -> Vec2) -> Self {
        let mut values = Vec::with_capacity(mesh.n_dofs());
        for &v in mesh.interior_vertices() {
            let w = f(mesh.vertices[v]);
            values.extend([w.x, w.y]);
        }
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn node(&self, n: usize) -> Vec2 {
        Vec2::new(self.values[2 * n], self.values[2 * n + 1])
    }
    pub fn set_node(&mut self, n: usize, v: Vec2) {
        self.values[2 * n] = v.x;
        self.values[2 * n + 1] = v.y;
    }

    /// Value at mesh vertex `v` (zero on the boundary).
    pub fn at_vertex(&self, mesh: &TriMesh, v: usize) -> Vec2 {
        mesh.node_of_vertex(v).map_or(Vec2::ZERO, |n| self.node(n))
    }

    /// Velocities at every mesh vertex, boundary included.
    pub fn to_vertex_field(&self, mesh: &TriMesh) -> Vec<Vec2> {
        (0..mesh.n_vertices()).map(|v| self.at_vertex(mesh, v)).collect()
    }

    pub fn check(&self, mesh: &TriMesh) -> Result<()> {
        if self.values.len() != mesh.n_dofs() {
            return Err(Error::MeshMismatch(format!(
                "velocity has {} coefficients, mesh has {} unknowns",
                self.values.len(),
                mesh.n_dofs()
            )));
        }
        Ok(())
    }

    pub fn axpy(&mut self, a: f64, x: &DofVector) {
        for (y, &xi) in self.values.iter_mut().zip(&x.values) {
            *y += a * xi;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs_node(&self) -> f64 {
        (0..self.len() / 2).map(|n| self.node(n).norm()).fold(0.0, f64::max)
    }
}

/// Velocity gradient `(∂_j u_i)` of the P1 interpolant on triangle `t`.
pub fn element_velocity_gradient(mesh: &TriMesh, u: &DofVector, t: usize) -> [[f64; 2]; 2] {
    let geo = &mesh.geometry[t];
    let mut g = [[0.0; 2]; 2];
    for (k, &v) in mesh.triangles[t].iter().enumerate() {
        let w = u.at_vertex(mesh, v);
        let gr = geo.grads[k];
        g[0][0] += w.x * gr.x;
        g[0][1] += w.x * gr.y;
        g[1][0] += w.y * gr.x;
        g[1][1] += w.y * gr.y;
    }
    g
}

/// Strain rate `Du = sym ∇u`, constant on the element.
pub fn element_sym_gradient(mesh: &TriMesh, u: &DofVector, t: usize) -> SymTensor2 {
    SymTensor2::sym(element_velocity_gradient(mesh, u, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiscreteNorms {
    /// L² norm with the consistent mass matrix.
    pub h_norm: f64,
    /// Gradient seminorm `(∫|∇u|²)^½`.
    pub v_norm: f64,
    /// `Σ area · δ_p(Du)²`.
    pub deltap_sq_integral: f64,
    /// `Σ area · |div u|`.
    pub div_l1: f64,
    /// `‖Du‖₂² = Σ area · |Du|²`.
    pub sym_grad_sq: f64,
}

pub fn discrete_norms(mesh: &TriMesh, u: &DofVector, params: &RheologyParams) -> DiscreteNorms {
    let mut n = DiscreteNorms::default();
    let mut h_sq = 0.0;
    let mut v_sq = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.geometry[t].area;
        let g = element_velocity_gradient(mesh, u, t);
        let du = SymTensor2::sym(g);
        v_sq += area * (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2));
        n.deltap_sq_integral += area * delta_p(du, params).powi(2);
        n.div_l1 += area * du.trace().abs();
        n.sym_grad_sq += area * du.norm_sq();
        // consistent P1 mass: area/12 · (1 + δ_kl)
        let w = mesh.triangles[t].map(|v| u.at_vertex(mesh, v));
        for k in 0..3 {
            for l in 0..3 {
                let m = if k == l { area / 6.0 } else { area / 12.0 };
                h_sq += m * w[k].dot(w[l]);
            }
        }
    }
    n.h_norm = h_sq.max(0.0).sqrt();
    n.v_norm = v_sq.sqrt();
    n
}

/// L² norm with the lumped (diagonal) mass matrix: `(Σ_v m_v |u_v|²)^½`.
pub fn lumped_h_norm(mesh: &TriMesh, u: &DofVector) -> f64 {
    mesh.interior_vertices()
        .iter()
        .enumerate()
        .map(|(n, &v)| mesh.lumped_mass(v) * u.node(n).norm_sq())
        .sum::<f64>()
        .sqrt()
}

/// Gradient seminorm only.
pub fn v_seminorm(mesh: &TriMesh, u: &DofVector) -> f64 {
    (0..mesh.n_triangles())
        .map(|t| {
            let g = element_velocity_gradient(mesh, u, t);
            mesh.geometry[t].area * (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2))
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn rect_mesh_counts() {
        let m = build_rect_mesh(1, 1, 1.0, 1.0).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles(), m.n_interior()), (4, 2, 0));
        let m = build_rect_mesh(2, 2, 1.0, 1.0).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles(), m.n_interior()), (9, 8, 1));
        let m = build_rect_mesh(3, 2, 3.0, 1.0).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles()), (12, 12));
        assert_abs_diff_eq!(m.total_area(), 3.0, epsilon = 1e-14);
        assert!(build_rect_mesh(0, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn lumped_masses_sum_to_area() {
        let m = build_rect_mesh(5, 3, 2.0, 1.5).unwrap();
        let total: f64 = (0..m.n_vertices()).map(|v| m.lumped_mass(v)).sum();
        assert_abs_diff_eq!(total, 3.0, epsilon = 1e-13);
    }

    #[test]
    fn reference_element_geometry() {
        let ref_tri = |s: f64, shift: Vec2| {
            let v = vec![shift, shift + Vec2::new(s, 0.0), shift + Vec2::new(0.0, s)];
            TriMesh::new(v, vec![[0, 1, 2]], vec![true; 3]).unwrap()
        };
        let g = element_geometry(&ref_tri(1.0, Vec2::ZERO), 0).unwrap();
        assert_eq!(g.area, 0.5);
        assert_eq!(
            g.grads,
            [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]
        );

        let h = element_geometry(&ref_tri(1.0, Vec2::new(3.0, -2.0)), 0).unwrap();
        assert_eq!(h.grads, g.grads);

        let s = element_geometry(&ref_tri(2.0, Vec2::ZERO), 0).unwrap();
        assert_eq!(s.area, 2.0);
        assert_eq!(s.grads, g.grads.map(|v| v * 0.5));
        assert_eq!(s.grads.iter().fold(Vec2::ZERO, |a, &b| a + b), Vec2::ZERO);
    }

    #[test]
    fn rejects_bad_meshes() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        // clockwise
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 2, 1]], vec![true; 3]),
            Err(Error::DegenerateElement { .. })
        ));
        // collinear
        let c = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        assert!(TriMesh::new(c, vec![[0, 1, 2]], vec![true; 3]).is_err());
        // wrong boundary flag
        assert!(TriMesh::new(v.clone(), vec![[0, 1, 2]], vec![true, false, true]).is_err());
        // out of range index
        assert!(TriMesh::new(v, vec![[0, 1, 3]], vec![true; 3]).is_err());
    }

    #[test]
    fn sym_gradient_is_exact_for_linear_fields() {
        let m = build_rect_mesh(5, 4, 1.0, 1.0).unwrap();
        let zero = DofVector::zeros(&m);
        assert_eq!(element_sym_gradient(&m, &zero, 0), SymTensor2::ZERO);
        let inner: Vec<usize> = (0..m.n_triangles())
            .filter(|&t| m.triangles()[t].iter().all(|&v| !m.boundary_mask()[v]))
            .collect();
        assert!(!inner.is_empty());
        let cases: [(fn(Vec2) -> Vec2, SymTensor2); 2] = [
            (|p| Vec2::new(p.x, 0.0), SymTensor2::new(1.0, 0.0, 0.0)),
            (|p| Vec2::new(p.y, p.x), SymTensor2::new(0.0, 1.0, 0.0)),
        ];
        for (f, expected) in cases {
            let u = DofVector::interpolate(&m, f);
            for &t in &inner {
                let du = element_sym_gradient(&m, &u, t);
                assert!((du - expected).norm() < 1e-13, "{du:?}");
            }
        }
    }

    #[test]
    fn hat_function_energy() {
        let m = build_rect_mesh(2, 2, 1.0, 1.0).unwrap();
        let mut u = DofVector::zeros(&m);
        u.set_node(0, Vec2::new(1.0, 0.0));
        let n = discrete_norms(&m, &u, &RheologyParams::default());
        assert_abs_diff_eq!(n.v_norm * n.v_norm, 4.0, epsilon = 1e-13);
        // six triangles of area 1/8 around the centre, ∫φ² = area/6 on each
        assert_abs_diff_eq!(n.h_norm * n.h_norm, 0.125, epsilon = 1e-14);
        let zero = discrete_norms(&m, &DofVector::zeros(&m), &RheologyParams::default());
        assert_eq!(zero, DiscreteNorms::default());
    }

    #[test]
    fn mesh_text_round_trip() {
        let m = build_rect_mesh(3, 2, 2.0, 1.0).unwrap();
        let back = TriMesh::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(TriMesh::parse("3 1\n0 0 1\n1 0 1\n").is_err());
        assert!(TriMesh::parse("3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 2\n5 5 5\n").is_err());
    }
}
