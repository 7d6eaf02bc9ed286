//! Discrete residual and Picard-linearized systems for `m ∂t + A(t) + C + G(t)`.
//!
//! Quadrature: the stress form uses one evaluation per element (`Du` is constant
//! on P1 elements) with the strength `P` averaged to the centroid. Mass, Coriolis,
//! drag and body loads use vertex (lumped) quadrature, so each of them reduces to
//! independent 2×2 blocks per interior vertex.

use crate::error::{Error, Result};
use crate::forcing::{body_load, ocean_drag_pointwise, perp};
use crate::mesh::{element_sym_gradient, DofVector, TriMesh};
use crate::problem::Problem;
use crate::rheology::{d_lambda, delta_reg, sigma, CutoffMode, SymTensor2};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::vector::Vec2;

pub use crate::sparse::CsrMatrix as SparseMatrix;

/// Ice strength sampled at each triangle centroid (mean of the vertex values).
pub fn centroid_strength(problem: &Problem, t: f64) -> Result<Vec<f64>> {
    let p = problem.strength.p.at(t)?;
    Ok(problem
        .mesh
        .triangles()
        .iter()
        .map(|tri| (p[tri[0]] + p[tri[1]] + p[tri[2]]) / 3.0)
        .collect())
}

/// Strain tensors of the two nodal basis functions `φ e_x`, `φ e_y` with gradient `g`.
fn basis_strains(g: Vec2) -> [SymTensor2; 2] {
    [
        SymTensor2::new(g.x, 0.5 * g.y, 0.0),
        SymTensor2::new(0.0, 0.5 * g.x, g.y),
    ]
}

/// The three parts of the nonlinear operator evaluated at one velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorParts {
    /// `a(t, u, φ_i)`, the stress form.
    pub a: Vec<f64>,
    /// `c(u, φ_i)`, the Coriolis form.
    pub c: Vec<f64>,
    /// `g(t, u, φ_i)`, the ocean drag form.
    pub g: Vec<f64>,
}

impl OperatorParts {
    pub fn total(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.c)
            .zip(&self.g)
            .map(|((a, c), g)| a + c + g)
            .collect()
    }
}

pub fn apply_parts(problem: &Problem, u: &DofVector, t: f64) -> Result<OperatorParts> {
    let mesh = &problem.mesh;
    u.check(mesh)?;
    let n = mesh.n_dofs();
    let strength = centroid_strength(problem, t)?;
    let mut a = vec![0.0; n];
    for (ti, tri) in mesh.triangles().iter().enumerate() {
        let geo = mesh.geometry(ti);
        let s = sigma(strength[ti], element_sym_gradient(mesh, u, ti), &problem.rheology)?;
        for (k, &v) in tri.iter().enumerate() {
            if let Some(node) = mesh.node_of_vertex(v) {
                let g = geo.grads[k];
                a[2 * node] += geo.area * (s.xx * g.x + s.xy * g.y);
                a[2 * node + 1] += geo.area * (s.xy * g.x + s.yy * g.y);
            }
        }
    }

    let current = problem.ocean.current.at(t)?;
    let (m, omega) = (problem.phys.m, problem.phys.omega);
    let mut c = vec![0.0; n];
    let mut g = vec![0.0; n];
    for (node, &v) in mesh.interior_vertices().iter().enumerate() {
        let w = mesh.lumped_mass(v);
        let un = u.node(node);
        let cor = -(w * m * omega) * perp(un);
        let drag = -w * ocean_drag_pointwise(current[v], un, problem.ocean.c_ocean, problem.ocean.theta);
        c[2 * node] = cor.x;
        c[2 * node + 1] = cor.y;
        g[2 * node] = drag.x;
        g[2 * node + 1] = drag.y;
    }
    Ok(OperatorParts { a, c, g })
}

/// Residual vector `a(t,u,φ_i) + c(u,φ_i) + g(t,u,φ_i)` over the vector nodal basis.
pub fn apply_operator(problem: &Problem, u: &DofVector, t: f64) -> Result<Vec<f64>> {
    Ok(apply_parts(problem, u, t)?.total())
}

/// Euclidean dot product of coefficient vectors.
pub fn pairing(r: &[f64], v: &[f64]) -> Result<f64> {
    if r.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: r.len(),
            got: v.len(),
        });
    }
    Ok(r.iter().zip(v).map(|(a, b)| a * b).sum())
}

/// Lumped body load `m_v h(t, x_v)` on the interior vertices.
pub fn body_load_vector(problem: &Problem, t: f64) -> Result<Vec<f64>> {
    let h = body_load(t, &problem.body, &problem.phys)?;
    let mesh = &problem.mesh;
    let mut out = vec![0.0; mesh.n_dofs()];
    for (node, &v) in mesh.interior_vertices().iter().enumerate() {
        let w = mesh.lumped_mass(v);
        out[2 * node] = w * h[v].x;
        out[2 * node + 1] = w * h[v].y;
    }
    Ok(out)
}

/// Lumped mass of each DOF (two equal entries per interior vertex).
pub fn lumped_mass_diagonal(mesh: &TriMesh) -> Vec<f64> {
    mesh.interior_vertices()
        .iter()
        .flat_map(|&v| {
            let w = mesh.lumped_mass(v);
            [w, w]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssemblyDiagnostics {
    /// `a(t, u_lag, u_lag)`.
    pub a_energy: f64,
    /// `g(t, u_lag, u_lag)`.
    pub drag_energy: f64,
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub diagnostics: AssemblyDiagnostics,
}

/// Which terms a linearized system contains besides the frozen operator.
#[derive(Debug, Clone, Copy)]
enum TimeTerm<'a> {
    Steady,
    Euler { u_prev: &'a DofVector, dt: f64 },
}

fn assemble(problem: &Problem, u_lag: &DofVector, t: f64, time: TimeTerm<'_>) -> Result<AssembledSystem> {
    let mesh = &problem.mesh;
    u_lag.check(mesh)?;
    let params = &problem.rheology;
    let n = mesh.n_dofs();
    let strength = centroid_strength(problem, t)?;
    let mut mat = TripletBuilder::with_capacity(n, 36 * mesh.n_triangles() + 4 * mesh.n_interior());
    let mut rhs = body_load_vector(problem, t)?;
    let mut diag = AssemblyDiagnostics::default();

    for (ti, tri) in mesh.triangles().iter().enumerate() {
        let geo = mesh.geometry(ti);
        let p = strength[ti];
        let du = element_sym_gradient(mesh, u_lag, ti);
        let delta = delta_reg(du, params);
        if delta == 0.0 {
            return Err(Error::DegenerateInput(if params.mode() == CutoffMode::Plastic {
                "plastic stress cannot be linearized at zero strain rate"
            } else {
                "zero strain rate with epsilon = 0 leaves the viscosity undefined"
            }));
        }
        let weight = geo.area * p / (2.0 * delta);
        diag.a_energy += geo.area * sigma(p, du, params)?.ddot(&du);

        let mut dofs = [None; 6];
        let mut strains = [SymTensor2::ZERO; 6];
        for (k, &v) in tri.iter().enumerate() {
            let node = mesh.node_of_vertex(v);
            let bs = basis_strains(geo.grads[k]);
            for c in 0..2 {
                dofs[2 * k + c] = node.map(|nd| 2 * nd + c);
                strains[2 * k + c] = bs[c];
            }
        }
        let mapped = strains.map(|s| d_lambda(s, params));
        for (i, di) in dofs.iter().enumerate() {
            let Some(row) = *di else { continue };
            // pressure part −(P/2) div φ moves to the right-hand side
            rhs[row] += 0.5 * p * geo.area * strains[i].trace();
            for (j, dj) in dofs.iter().enumerate() {
                if let Some(col) = *dj {
                    mat.add(row, col, weight * mapped[j].ddot(&strains[i]));
                }
            }
        }
    }

    let current = problem.ocean.current.at(t)?;
    let (c_ocean, theta) = (problem.ocean.c_ocean, problem.ocean.theta);
    let (sin_t, cos_t) = theta.sin_cos();
    let (m, omega) = (problem.phys.m, problem.phys.omega);
    for (node, &v) in mesh.interior_vertices().iter().enumerate() {
        let w = mesh.lumped_mass(v);
        let (ix, iy) = (2 * node, 2 * node + 1);
        let ul = u_lag.node(node);

        // drag: c|U − u_lag| (cos θ u + sin θ u⊥) on the matrix side, the U part as load
        let kd = w * c_ocean * (current[v] - ul).norm();
        mat.add(ix, ix, kd * cos_t);
        mat.add(ix, iy, -kd * sin_t);
        mat.add(iy, ix, kd * sin_t);
        mat.add(iy, iy, kd * cos_t);
        let load = kd * crate::forcing::rotate_theta(current[v], theta);
        rhs[ix] += load.x;
        rhs[iy] += load.y;
        diag.drag_energy -= w * ocean_drag_pointwise(current[v], ul, c_ocean, theta).dot(ul);

        // Coriolis: −m ω u⊥
        let kc = w * m * omega;
        mat.add(ix, iy, kc);
        mat.add(iy, ix, -kc);

        if let TimeTerm::Euler { u_prev, dt } = time {
            let km = w * m / dt;
            mat.add(ix, ix, km);
            mat.add(iy, iy, km);
            let up = u_prev.node(node);
            rhs[ix] += km * up.x;
            rhs[iy] += km * up.y;
        }
    }

    Ok(AssembledSystem {
        matrix: mat.finalize(),
        rhs,
        diagnostics: diag,
    })
}

/// Implicit-Euler system with coefficients frozen at `u_lag`:
/// `(m/dt) M + K(u_lag) + C + D(u_lag)` against
/// `(m/dt) M u_prev + pressure load + drag load + body load`.
pub fn assemble_picard_system(
    problem: &Problem,
    u_lag: &DofVector,
    u_prev: &DofVector,
    t: f64,
    dt: f64,
) -> Result<AssembledSystem> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    u_prev.check(&problem.mesh)?;
    assemble(problem, u_lag, t, TimeTerm::Euler { u_prev, dt })
}

/// Frozen-coefficient system for `F(t, u) = h(t)` without the time derivative.
pub fn assemble_steady_system(problem: &Problem, u_lag: &DofVector, t: f64) -> Result<AssembledSystem> {
    assemble(problem, u_lag, t, TimeTerm::Steady)
}
