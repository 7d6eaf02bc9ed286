//! Browser demo over `seaice-core`: a stress/yield-curve explorer, a scan of the
//! ocean-drag monotonicity integrand against the turning angle, and a small
//! wind-driven drift simulation. The `#[wasm_bindgen]` exports are thin
//! wrappers over plain functions so the logic is testable natively.

use std::f64::consts::PI;

use wasm_bindgen::prelude::*;

use seaice_core::forcing::{BodyForcing, NodalSeries, PhysParams};
use seaice_core::mesh::{build_rect_mesh, DofVector};
use seaice_core::rheology::{delta_p, delta_reg, sigma, yield_ratio, CutoffMode, RheologyParams, SymTensor2};
use seaice_core::solver::{implicit_euler_step_cached, FactorCache, SolverConfig};
use seaice_core::verify::drag_probe;
use seaice_core::{Error, Problem, Result, Vec2};

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn rheology(mode: &str, e_bar: f64, delta_lo: f64, delta_hi: f64, epsilon: f64) -> Result<RheologyParams> {
    RheologyParams::new(e_bar, delta_lo, delta_hi, epsilon, mode.parse::<CutoffMode>()?)
}

/// `[σ_xx, σ_xy, σ_yy, σ_1, σ_2, δ_p, δ, (δ_p/δ)²]` for strength `p` and strain rate `z`.
#[allow(clippy::too_many_arguments)]
pub fn stress_state(
    mode: &str,
    e_bar: f64,
    delta_lo: f64,
    delta_hi: f64,
    epsilon: f64,
    p: f64,
    z: [f64; 3],
) -> Result<Vec<f64>> {
    let params = rheology(mode, e_bar, delta_lo, delta_hi, epsilon)?;
    let z = SymTensor2::new(z[0], z[1], z[2]);
    let s = sigma(p, z, &params)?;
    let (s1, s2) = s.principal_values();
    Ok(vec![
        s.xx,
        s.xy,
        s.yy,
        s1,
        s2,
        delta_p(z, &params),
        delta_reg(z, &params),
        yield_ratio(z, &params),
    ])
}

/// Interleaved principal-stress points `(σ_1, σ_2)` of the yield ellipse
/// `¼(σ_1 + σ_2 + P)² + ¼ e_bar² (σ_1 − σ_2)² = P²/4`.
pub fn yield_ellipse(p: f64, e_bar: f64, n: usize) -> Vec<f64> {
    let mut pts = Vec::with_capacity(2 * n);
    for k in 0..n {
        let phi = 2.0 * PI * k as f64 / n as f64;
        // trace part s = σ_1 + σ_2 + P and difference d = σ_1 − σ_2
        let s = p * phi.cos();
        let d = p * phi.sin() / e_bar;
        pts.push(0.5 * (s - p + d));
        pts.push(0.5 * (s - p - d));
    }
    pts
}

/// Smallest normalized drag integrand over `n_samples` random velocity pairs for
/// each of `n_theta` turning angles in `[0, theta_max]`, interleaved as `(θ, min)`.
pub fn drag_curve(theta_max: f64, n_theta: usize, n_samples: u64, seed: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n_theta);
    for k in 0..n_theta {
        let theta = if n_theta > 1 {
            theta_max * k as f64 / (n_theta - 1) as f64
        } else {
            theta_max
        };
        out.push(theta);
        out.push(-drag_probe(n_samples, theta, seed).worst_violation);
    }
    out
}

/// Wind-driven ice in a closed unit basin, in nondimensional units.
#[wasm_bindgen]
pub struct DriftSim {
    problem: Problem,
    u: DofVector,
    t: f64,
    cfg: SolverConfig,
    cache: FactorCache,
}

impl DriftSim {
    pub fn create(n: usize, strength: f64, wind: f64, dt: f64) -> Result<Self> {
        let mesh = build_rect_mesh(n, n, 1.0, 1.0)?;
        let params = RheologyParams::new(2.0, 1e-3, 1e-1, 0.0, CutoffMode::CutoffBoth)?;
        let mut problem = Problem::unforced(mesh, params, PhysParams::new(10.0, 0.5, 1.0)?, strength)?;
        let tau = problem
            .mesh
            .vertices()
            .iter()
            .map(|x| wind * Vec2::new(-(PI * x.y).cos(), (PI * x.x).sin()))
            .collect();
        problem.body = BodyForcing {
            tau_atm: NodalSeries::Steady(tau),
            ..BodyForcing::zero(problem.mesh.n_vertices())
        };
        let cfg = SolverConfig {
            dt,
            t_end: dt,
            picard_max: 500,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        let u = DofVector::zeros(&problem.mesh);
        Ok(Self {
            problem,
            u,
            t: 0.0,
            cfg,
            cache: FactorCache::default(),
        })
    }

    /// Advances one implicit-Euler step and returns the kinetic energy `(m/2)‖u‖²`.
    pub fn advance(&mut self) -> Result<f64> {
        let t_next = self.t + self.cfg.dt;
        let (u, _) = implicit_euler_step_cached(&self.problem, &self.u, t_next, &self.cfg, &mut self.cache)?;
        self.u = u;
        self.t = t_next;
        Ok(self.kinetic())
    }

    fn kinetic(&self) -> f64 {
        let mesh = &self.problem.mesh;
        let sum: f64 = (0..mesh.n_vertices())
            .map(|v| mesh.lumped_mass(v) * self.u.at_vertex(mesh, v).norm_sq())
            .sum();
        0.5 * self.problem.phys.m * sum
    }
}

#[wasm_bindgen]
impl DriftSim {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, strength: f64, wind: f64, dt: f64) -> std::result::Result<DriftSim, JsError> {
        Self::create(n, strength, wind, dt).map_err(js)
    }

    pub fn step(&mut self) -> std::result::Result<f64, JsError> {
        self.advance().map_err(js)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Interleaved vertex positions `(x, y)`.
    pub fn positions(&self) -> Vec<f64> {
        self.problem.mesh.vertices().iter().flat_map(|v| [v.x, v.y]).collect()
    }

    /// Interleaved vertex velocities `(u_x, u_y)`, zero on the boundary.
    pub fn velocities(&self) -> Vec<f64> {
        self.u
            .to_vertex_field(&self.problem.mesh)
            .iter()
            .flat_map(|v| [v.x, v.y])
            .collect()
    }
}

#[wasm_bindgen(js_name = stressState)]
#[allow(clippy::too_many_arguments)]
pub fn stress_state_js(
    mode: &str,
    e_bar: f64,
    delta_lo: f64,
    delta_hi: f64,
    epsilon: f64,
    p: f64,
    zxx: f64,
    zxy: f64,
    zyy: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    stress_state(mode, e_bar, delta_lo, delta_hi, epsilon, p, [zxx, zxy, zyy]).map_err(js)
}

#[wasm_bindgen(js_name = yieldEllipse)]
pub fn yield_ellipse_js(p: f64, e_bar: f64, n: usize) -> Vec<f64> {
    yield_ellipse(p, e_bar, n)
}

#[wasm_bindgen(js_name = dragCurve)]
pub fn drag_curve_js(theta_max: f64, n_theta: usize, n_samples: u32, seed: u32) -> Vec<f64> {
    drag_curve(theta_max, n_theta, u64::from(n_samples), u64::from(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_band_stress_lies_on_the_ellipse() {
        let (p, e) = (2.0, 2.0);
        let r = stress_state("cutoff_both", e, 1e-3, 1e-1, 0.0, p, [0.01, 0.02, -0.005]).unwrap();
        let (s1, s2) = (r[3], r[4]);
        let lhs = 0.25 * (s1 + s2 + p).powi(2) + 0.25 * (e * (s1 - s2)).powi(2);
        assert!((lhs - 0.25 * p * p).abs() < 1e-12);
        assert!((r[7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ellipse_points_satisfy_the_yield_equation() {
        let (p, e) = (3.0, 1.5);
        for xy in yield_ellipse(p, e, 37).chunks(2) {
            let lhs = 0.25 * (xy[0] + xy[1] + p).powi(2) + 0.25 * (e * (xy[0] - xy[1])).powi(2);
            assert!((lhs - 0.25 * p * p).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_mode_is_rejected() {
        assert!(stress_state("bogus", 2.0, 1e-3, 1e-1, 0.0, 1.0, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn drag_curve_is_nonnegative_below_quarter_turn() {
        let c = drag_curve(std::f64::consts::FRAC_PI_4, 5, 2000, 3);
        assert_eq!(c.len(), 10);
        assert!(c.chunks(2).all(|tm| tm[1] >= -1e-12));
    }

    #[test]
    fn drift_gains_energy_from_rest() {
        let mut sim = DriftSim::create(6, 0.01, 0.05, 0.05).unwrap();
        let k1 = sim.advance().unwrap();
        let k2 = sim.advance().unwrap();
        assert!(k1 > 0.0 && k2 > k1);
        assert_eq!(sim.positions().len(), 2 * 49);
        assert_eq!(sim.velocities().len(), 2 * 49);
    }
}
