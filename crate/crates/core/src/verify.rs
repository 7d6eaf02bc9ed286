//! Numerical oracles for the structural inequalities of the model.
//!
//! Every check normalizes its inequality by an explicit scale so that the
//! tolerances are dimensionless, and keeps the worst sample as a JSON witness.
//! Reports are bit-reproducible from the seed.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::assembly::{apply_operator, apply_parts, centroid_strength, pairing};
use crate::error::{Error, Result};
use crate::forcing::{
    discriminant_d, drag_monotone_integrand, drag_polynomial, rescaled_p, IceStrengthField, NodalSeries, PhysParams,
};
use crate::linalg::BandLu;
use crate::mesh::{build_rect_mesh, element_sym_gradient, lumped_h_norm, DofVector, TriMesh};
use crate::problem::Problem;
use crate::rheology::{
    delta_p, delta_reg, sigma, stress_growth_bound, yield_ratio, yield_residual, CutoffMode, RheologyParams, SymTensor2,
};
use crate::solver::{implicit_euler_step_cached, steady_solve, FactorCache, SolverConfig};
use crate::sparse::TripletBuilder;
use crate::vector::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub name: String,
    #[serde(rename = "samples")]
    pub sample_count: u64,
    /// Largest normalized violation; negative when every sample holds strictly.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(rename = "witness")]
    pub worst_witness: Value,
}

impl PropertyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Running maximum of a normalized violation with its witness.
struct Worst {
    value: f64,
    witness: Value,
    samples: u64,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            witness: Value::Null,
            samples: 0,
        }
    }

    fn offer(&mut self, value: f64, witness: impl FnOnce() -> Value) {
        self.samples += 1;
        // NaN counts as the worst possible outcome
        if value > self.value || value.is_nan() && !self.value.is_nan() {
            self.value = value;
            self.witness = witness();
        }
    }

    fn merge(&mut self, other: Worst) {
        self.samples += other.samples;
        if other.value > self.value || other.value.is_nan() && !self.value.is_nan() {
            self.value = other.value;
            self.witness = other.witness;
        }
    }

    fn report(self, name: impl Into<String>, tolerance: f64, scale: &str) -> PropertyReport {
        let mut witness = self.witness;
        if let Value::Object(map) = &mut witness {
            map.insert("scale".into(), Value::String(scale.into()));
        }
        PropertyReport {
            name: name.into(),
            sample_count: self.samples,
            worst_violation: self.value,
            tolerance,
            pass: self.value <= tolerance,
            worst_witness: witness,
        }
    }
}

fn t3(z: SymTensor2) -> [f64; 3] {
    [z.xx, z.xy, z.yy]
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Magnitude bands `[lo, hi]` for `δ_p`, one per branch of the cut-off.
fn magnitude_bands(params: &RheologyParams) -> Vec<(f64, f64)> {
    let (lo, hi) = (params.delta_lo(), params.delta_hi());
    let mut bands = vec![(lo * 1e-4, lo), (lo, hi), (hi, hi * 1e4)];
    if params.epsilon() > 0.0 {
        let r = params.epsilon().sqrt();
        bands.push((r * 1e-3, r * 1e3));
    }
    bands
}

/// Random strain-rate tensor whose plastic magnitude is drawn from one of the bands.
fn sample_tensor(rng: &mut ChaCha8Rng, params: &RheologyParams, bands: &[(f64, f64)]) -> SymTensor2 {
    let dir = match rng.gen_range(0..10) {
        0 => SymTensor2::IDENTITY * if rng.gen() { 1.0 } else { -1.0 },
        1 => SymTensor2::new(1.0, rng.gen_range(-1.0..1.0), -1.0).dev(),
        _ => SymTensor2::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ),
    };
    let dp = delta_p(dir, params);
    if dp == 0.0 {
        return SymTensor2::ZERO;
    }
    let (a, b) = bands[rng.gen_range(0..bands.len())];
    dir * (log_uniform(rng, a, b) / dp)
}

fn sample_strength(rng: &mut ChaCha8Rng) -> f64 {
    log_uniform(rng, 1e2, 1e5)
}

/// Elliptic yield-curve identity over `n` random tensors, relative to
/// `(P²/4)·max(1, (δ_p/δ)²)`.
pub fn check_yield_identity(n: u64, params: &RheologyParams, seed: u64) -> Result<PropertyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = magnitude_bands(params);
    let mut worst = Worst::new();
    while worst.samples < n {
        let z = sample_tensor(&mut rng, params, &bands);
        if params.mode() == CutoffMode::Plastic && z == SymTensor2::ZERO {
            continue;
        }
        let p = sample_strength(&mut rng);
        let r = yield_residual(p, z, params)?;
        let scale = 0.25 * p * p * yield_ratio(z, params).max(1.0);
        worst.offer(r.abs() / scale, || json!({ "p": p, "z": t3(z), "residual": r }));
    }
    Ok(worst.report(
        format!("yield_identity[{}]", params.mode().name()),
        1e-12,
        "(P^2/4) max(1, (delta_p/delta)^2)",
    ))
}

/// Most negative `(σ(P,z₁) − σ(P,z₂)) : (z₁ − z₂)` over `n` pairs drawn across all
/// branches, relative to `(P + |σ₁| + |σ₂|)(|z₁| + |z₂|)`.
pub fn check_pointwise_monotonicity(n: u64, params: &RheologyParams, seed: u64) -> Result<PropertyReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = magnitude_bands(params);
    let mut worst = Worst::new();
    for _ in 0..n {
        let p = sample_strength(&mut rng);
        let z1 = if rng.gen_range(0..20) == 0 {
            SymTensor2::ZERO
        } else {
            sample_tensor(&mut rng, params, &bands)
        };
        let z2 = match rng.gen_range(0..4) {
            0 => z1 + sample_tensor(&mut rng, params, &bands) * log_uniform(&mut rng, 1e-8, 1e-1),
            1 => z1 * log_uniform(&mut rng, 1e-3, 1e3),
            _ => sample_tensor(&mut rng, params, &bands),
        };
        let (s1, s2) = (sigma(p, z1, params)?, sigma(p, z2, params)?);
        let value = (s1 - s2).ddot(&(z1 - z2));
        let scale = (p + s1.norm() + s2.norm()) * (z1.norm() + z2.norm());
        let violation = if scale > 0.0 { -value / scale } else { -value };
        worst.offer(
            violation,
            || json!({ "p": p, "z1": t3(z1), "z2": t3(z2), "integrand": value }),
        );
    }
    Ok(worst.report(
        format!("pointwise_monotonicity[{}]", params.mode().name()),
        1e-12,
        "(P + |sigma1| + |sigma2|)(|z1| + |z2|)",
    ))
}

/// Integrand of the stress monotonicity for `z` and `c·z`. Zero in the plastic
/// mode, where the stress depends on the direction of `z` only.
pub fn ray_witness(p: f64, z: SymTensor2, c: f64, params: &RheologyParams) -> Result<f64> {
    let z2 = z * c;
    Ok((sigma(p, z, params)? - sigma(p, z2, params)?).ddot(&(z - z2)))
}

/// Random velocity amplitude spanning the strain-rate bands on `mesh` and the
/// velocity scale of the ocean current.
fn sample_amplitude(rng: &mut ChaCha8Rng, problem: &Problem, current_scale: f64, big: f64) -> f64 {
    let h = problem.mesh.max_edge();
    let r = &problem.rheology;
    let lo = (r.delta_lo() * h * 0.1).max(1e-300);
    let hi = (r.delta_hi() * h * big).max(10.0 * current_scale).max(lo * 10.0);
    log_uniform(rng, lo, hi)
}

fn random_field(mesh: &TriMesh, rng: &mut ChaCha8Rng, amp: f64) -> DofVector {
    let smooth = rng.gen_bool(0.5);
    let (kx, ky) = (rng.gen_range(1..4) as f64, rng.gen_range(1..4) as f64);
    let (ax, ay) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut u = if smooth {
        DofVector::interpolate(mesh, |x| {
            let s = (kx * PI * x.x).sin() * (ky * PI * x.y).sin();
            Vec2::new(ax * s, ay * s) * amp
        })
    } else {
        DofVector::zeros(mesh)
    };
    for v in u.values_mut() {
        *v += amp * rng.gen_range(-1.0..1.0) * if smooth { 0.1 } else { 1.0 };
    }
    u
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_current(problem: &Problem, t: f64) -> Result<f64> {
    Ok(problem.ocean.current.at(t)?.iter().fold(0.0f64, |m, v| m.max(v.norm())))
}

/// Most negative `⟨F(u) − F(v), u − v⟩` for the assembled operator `A + C + G`
/// over random pairs, relative to `(‖F(u)‖ + ‖F(v)‖)‖u − v‖`.
pub fn check_discrete_monotonicity(problem: &Problem, t: f64, n_pairs: u64, seed: u64) -> Result<PropertyReport> {
    let mesh = &problem.mesh;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cur = max_current(problem, t)?;
    let mut worst = Worst::new();
    for _ in 0..n_pairs {
        let amp = sample_amplitude(&mut rng, problem, cur, 10.0);
        let u = random_field(mesh, &mut rng, amp);
        let v = match rng.gen_range(0..4) {
            0 => {
                let mut v = u.clone();
                v.axpy(log_uniform(&mut rng, 1e-8, 1e-1), &random_field(mesh, &mut rng, amp));
                v
            }
            1 => u.scaled(log_uniform(&mut rng, 1e-2, 1e2)),
            _ => {
                let amp_v = sample_amplitude(&mut rng, problem, cur, 10.0);
                random_field(mesh, &mut rng, amp_v)
            }
        };
        let (fu, fv) = (apply_operator(problem, &u, t)?, apply_operator(problem, &v, t)?);
        let diff: Vec<f64> = fu.iter().zip(&fv).map(|(a, b)| a - b).collect();
        let d = u.sub(&v);
        let value = pairing(&diff, d.values())?;
        let scale = (norm2(&fu) + norm2(&fv)) * norm2(d.values());
        let violation = if scale > 0.0 { -value / scale } else { -value };
        worst.offer(
            violation,
            || json!({ "amplitude": amp, "pairing": value, "scale_value": scale }),
        );
    }
    Ok(worst.report(
        format!("discrete_monotonicity[{}]", problem.rheology.mode().name()),
        1e-10,
        "(|F(u)| + |F(v)|) |u - v|",
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReports {
    /// `a(u,u) ≥ (1/(2δ^•)) Σ area P (δ_p² − δ^• |div u|)`.
    pub inequality: PropertyReport,
    /// `|σ| ≤ (P/√2)(1 + δ_p/δ)` on every element of every sample.
    pub growth: PropertyReport,
}

/// The intermediate coercivity inequality on random fields, including amplitudes
/// far past the upper cut-off, together with the pointwise growth bound.
pub fn check_coercivity(problem: &Problem, t: f64, n: u64, seed: u64) -> Result<CoercivityReports> {
    let mesh = &problem.mesh;
    let params = &problem.rheology;
    let hi = params.delta_hi();
    let strength = centroid_strength(problem, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cur = max_current(problem, t)?;
    let mut ineq = Worst::new();
    let mut growth = Worst::new();
    for k in 0..n {
        // every tenth field sits at 10⁶ times the upper band edge
        let amp = if k % 10 == 9 {
            1e6 * hi * mesh.max_edge()
        } else {
            sample_amplitude(&mut rng, problem, cur, 1e6)
        };
        let u = random_field(mesh, &mut rng, amp);
        let a_uu = pairing(&apply_parts(problem, &u, t)?.a, u.values())?;
        let mut rhs = 0.0;
        let mut scale = a_uu.abs();
        let mut g = Worst::new();
        for (ti, &p) in strength.iter().enumerate() {
            let area = mesh.geometry(ti).area;
            let z = element_sym_gradient(mesh, &u, ti);
            let dp = delta_p(z, params);
            let term = area * p / (2.0 * hi) * (dp * dp - hi * z.trace().abs());
            rhs += term;
            let s = sigma(p, z, params)?;
            scale += area * p / (2.0 * hi) * (dp * dp + hi * z.trace().abs()) + area * s.norm() * z.norm();
            let bound = stress_growth_bound(p, z, params);
            g.offer(
                (s.norm() - bound) / bound,
                || json!({ "element": ti, "p": p, "z": t3(z), "sigma_norm": s.norm(), "bound": bound }),
            );
        }
        growth.merge(g);
        let violation = if scale > 0.0 { (rhs - a_uu) / scale } else { rhs - a_uu };
        ineq.offer(violation, || json!({ "amplitude": amp, "a_uu": a_uu, "rhs": rhs }));
    }
    let name = params.mode().name();
    Ok(CoercivityReports {
        inequality: ineq.report(
            format!("coercivity[{name}]"),
            1e-10,
            "sum area (|sigma||Du| + P/(2 delta_hi)(delta_p^2 + delta_hi |div u|)) + |a(u,u)|",
        ),
        growth: growth.report(format!("growth_bound[{name}]"), 1e-12, "(P/sqrt2)(1 + delta_p/delta)"),
    })
}

/// `θ` values of the drag scan: `n_theta` equispaced points of `[0, π/4]`, both ends included.
pub fn theta_grid(n_theta: usize) -> Vec<f64> {
    match n_theta {
        0 => Vec::new(),
        1 => vec![FRAC_PI_4],
        n => (0..n).map(|k| FRAC_PI_4 * k as f64 / (n - 1) as f64).collect(),
    }
}

fn sample_drag_pair(rng: &mut ChaCha8Rng) -> (Vec2, Vec2) {
    let polar = |r: f64, phi: f64| Vec2::new(r * phi.cos(), r * phi.sin());
    let alpha = log_uniform(rng, 1e-3, 1e1);
    let phi_a = rng.gen_range(-PI..PI);
    let a = polar(alpha, phi_a);
    let b = match rng.gen_range(0..5) {
        0 => a,
        1 => polar(alpha * log_uniform(rng, 0.5, 2.0), phi_a + rng.gen_range(-0.1..0.1)),
        2 => Vec2::ZERO,
        _ => polar(log_uniform(rng, 1e-3, 1e1), rng.gen_range(-PI..PI)),
    };
    (a, b)
}

fn drag_scale(a: Vec2, b: Vec2) -> f64 {
    let (x, y) = (a.norm(), b.norm());
    x * x * x + y * y * y + x * y * (x + y)
}

fn drag_worst(rng: &mut ChaCha8Rng, n_vec: u64, theta: f64) -> Worst {
    let mut worst = Worst::new();
    for _ in 0..n_vec {
        let (a, b) = sample_drag_pair(rng);
        let v = drag_monotone_integrand(a, b, theta);
        let s = drag_scale(a, b);
        let violation = if s > 0.0 { -v / s } else { -v };
        worst.offer(violation, || json!({ "theta": theta, "a": a, "b": b, "integrand": v }));
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DragScan {
    /// Gate over `θ ∈ [0, π/4]`.
    pub report: PropertyReport,
    /// Worst sample past the admissible range; informational only.
    pub probe: PropertyReport,
}

/// Angle of the informational probe past the admissible turning angles.
pub const DRAG_PROBE_THETA: f64 = FRAC_PI_4 + 0.3;

/// Drag monotonicity integrand over a `θ` grid in `[0, π/4]` and random relative
/// velocities, relative to `|a|³ + |b|³ + |a||b|(|a| + |b|)`, plus the probe at
/// [`DRAG_PROBE_THETA`].
pub fn scan_drag_monotonicity(n_vec: u64, n_theta: usize, seed: u64) -> DragScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Worst::new();
    for theta in theta_grid(n_theta) {
        worst.merge(drag_worst(&mut rng, n_vec, theta));
    }
    let scale = "|a|^3 + |b|^3 + |a||b|(|a| + |b|)";
    DragScan {
        report: worst.report("drag_monotonicity", 1e-12, scale),
        probe: drag_probe(n_vec, DRAG_PROBE_THETA, seed),
    }
}

/// Worst drag integrand at an arbitrary `θ`; `pass` then reads "no negative witness found".
pub fn drag_probe(n_vec: u64, theta: f64, seed: u64) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    drag_worst(&mut rng, n_vec, theta).report(
        format!("drag_probe[theta={theta:.6}]"),
        1e-12,
        "|a|^3 + |b|^3 + |a||b|(|a| + |b|)",
    )
}

/// The vector form of the drag integrand against its polynomial form in
/// `α = |a|`, `β = |b|` and the signed angle between them.
pub fn check_drag_polynomial(n: u64, seed: u64) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Worst::new();
    while worst.samples < n {
        let (a, b) = sample_drag_pair(&mut rng);
        let (alpha, beta) = (a.norm(), b.norm());
        if alpha == 0.0 || beta == 0.0 {
            continue;
        }
        let theta = rng.gen_range(0.0..=FRAC_PI_4);
        let cos_phi = a.dot(b) / (alpha * beta);
        let sin_phi = a.cross(b) / (alpha * beta);
        let v = drag_monotone_integrand(a, b, theta);
        let p = drag_polynomial(alpha, beta, cos_phi, sin_phi, theta);
        worst.offer(
            (v - p).abs() / drag_scale(a, b),
            || json!({ "theta": theta, "a": a, "b": b, "vector_form": v, "polynomial": p }),
        );
    }
    worst.report("drag_polynomial_form", 1e-12, "|a|^3 + |b|^3 + |a||b|(|a| + |b|)")
}

/// The rescaled cubic has no root in `(0, ∞)`: `p(0) = 1` and `p > 0` on a
/// logarithmic `γ` grid for random `(S, θ)`. Violation is `−p` relative to the
/// sum of the magnitudes of its terms.
pub fn check_rescaled_cubic(n: u64, seed: u64) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gammas: Vec<f64> = (0..=240).map(|k| 10f64.powf(-6.0 + 0.05 * k as f64)).collect();
    let mut worst = Worst::new();
    for _ in 0..n {
        let s = rng.gen_range(-1.0..=1.0 - 1e-3);
        let theta = rng.gen_range(0.0..=FRAC_PI_4);
        let p0 = rescaled_p(0.0, s, theta);
        worst.offer(
            (1.0 - p0).abs(),
            || json!({ "s": s, "theta": theta, "gamma": 0.0, "p": p0 }),
        );
        let tsin = theta.tan() * (1.0 - s * s).sqrt();
        for &g in &gammas {
            let p = rescaled_p(g, s, theta);
            let scale = g * g * g + (s.abs() + tsin) * g * g + (s.abs() + tsin) * g + 1.0;
            worst.offer(-p / scale, || json!({ "s": s, "theta": theta, "gamma": g, "p": p }));
        }
    }
    worst.report(
        "rescaled_cubic_sign",
        1e-12,
        "gamma^3 + (|S| + tan sin) (gamma^2 + gamma) + 1",
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminantScan {
    /// Gate: the largest value over the open interior grid and the boundary lines
    /// `T = 0`, `T = 1` for `S ∈ [−1, 1 − step]` must be strictly negative.
    pub report: PropertyReport,
    pub interior_max: f64,
    pub interior_argmax: (f64, f64),
    pub edge_t0_max: f64,
    pub edge_t1_max: f64,
    /// `d(0, 1)`.
    pub d_0_1: f64,
    /// Largest `|d(1, T)|` over the grid; the `S = 1` edge is excluded from the gate.
    pub s1_edge_abs_max: f64,
}

/// Discriminant `d(S, T)` on a grid with spacing `grid_step`.
pub fn scan_discriminant(grid_step: f64) -> Result<DiscriminantScan> {
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step must lie in (0, 1), got {grid_step}"
        )));
    }
    let ns = (2.0 / grid_step).round() as i64;
    let nt = (1.0 / grid_step).round() as i64;
    let s_at = |i: i64| -1.0 + 2.0 * i as f64 / ns as f64;
    let t_at = |j: i64| j as f64 / nt as f64;

    let mut interior_max = f64::NEG_INFINITY;
    let mut argmax = (0.0, 0.0);
    for i in 1..ns {
        let s = s_at(i);
        for j in 1..nt {
            let d = discriminant_d(s, t_at(j));
            if d > interior_max {
                interior_max = d;
                argmax = (s, t_at(j));
            }
        }
    }
    let (mut e0, mut e1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut e0_at, mut e1_at) = (0.0, 0.0);
    for i in 0..ns {
        let s = s_at(i);
        let (a, b) = (discriminant_d(s, 0.0), discriminant_d(s, 1.0));
        if a > e0 {
            (e0, e0_at) = (a, s);
        }
        if b > e1 {
            (e1, e1_at) = (b, s);
        }
    }
    let s1_edge = (0..=nt).map(|j| discriminant_d(1.0, t_at(j)).abs()).fold(0.0, f64::max);

    let mut worst = Worst::new();
    worst.offer(
        interior_max,
        || json!({ "s": argmax.0, "t": argmax.1, "d": interior_max, "where": "interior" }),
    );
    worst.offer(e0, || json!({ "s": e0_at, "t": 0.0, "d": e0, "where": "edge T=0" }));
    worst.offer(e1, || json!({ "s": e1_at, "t": 1.0, "d": e1, "where": "edge T=1" }));
    worst.samples = ((ns - 1) * (nt - 1) + 2 * ns) as u64;
    Ok(DiscriminantScan {
        // strict negativity: the tolerance is the negative of the smallest positive double
        report: worst.report("discriminant", -f64::MIN_POSITIVE, "none (sign check)"),
        interior_max,
        interior_argmax: argmax,
        edge_t0_max: e0,
        edge_t1_max: e1,
        d_0_1: discriminant_d(0.0, 1.0),
        s1_edge_abs_max: s1_edge,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Same forcing, initial data perturbed by a random nodal field of this size.
    InitialData { scale: f64, seed: u64 },
    /// Same initial data, a constant field added to the body load of the second run.
    Forcing { delta: Vec2 },
}

/// Paired implicit-Euler runs from `u0` over `steps` steps.
///
/// Initial-data perturbation: the lumped H-norm of the difference must not grow
/// by more than `10·picard_tol·(‖u₁ⁿ‖ + ‖u₂ⁿ‖)` in any step.
/// Forcing perturbation: `‖dⁿ‖² ≤ ‖d⁰‖² + Σ_{k<n} dt ‖h₁(t_k) − h₂(t_k)‖²`,
/// relative to the sum of the three magnitudes.
pub fn check_contraction(
    problem: &Problem,
    u0: &DofVector,
    cfg: &SolverConfig,
    perturbation: Perturbation,
    steps: usize,
) -> Result<PropertyReport> {
    let mesh = &problem.mesh;
    let mut second = problem.clone();
    let mut u2 = u0.clone();
    match perturbation {
        Perturbation::InitialData { scale, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for v in u2.values_mut() {
                *v += scale * rng.gen_range(-1.0..1.0);
            }
        }
        Perturbation::Forcing { delta } => {
            second.body.f_extra = second.body.f_extra.map(|v| v + delta);
        }
    }
    let h_diff_sq = |t: f64| -> Result<f64> {
        let h1 = crate::forcing::body_load(t, &problem.body, &problem.phys)?;
        let h2 = crate::forcing::body_load(t, &second.body, &second.phys)?;
        Ok(mesh
            .interior_vertices()
            .iter()
            .map(|&v| mesh.lumped_mass(v) * (h1[v] - h2[v]).norm_sq())
            .sum())
    };

    let mut u1 = u0.clone();
    let d0 = lumped_h_norm(mesh, &u1.sub(&u2));
    let mut d_prev = d0;
    let mut integral = 0.0;
    let mut worst = Worst::new();
    let (mut c1, mut c2) = (FactorCache::default(), FactorCache::default());
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * cfg.dt;
        let t = n as f64 * cfg.dt;
        integral += cfg.dt * h_diff_sq(t_prev)?;
        u1 = implicit_euler_step_cached(problem, &u1, t, cfg, &mut c1)?.0;
        u2 = implicit_euler_step_cached(&second, &u2, t, cfg, &mut c2)?.0;
        let d = lumped_h_norm(mesh, &u1.sub(&u2));
        match perturbation {
            Perturbation::InitialData { .. } => {
                let scale = lumped_h_norm(mesh, &u1) + lumped_h_norm(mesh, &u2);
                let v = if scale > 0.0 { (d - d_prev) / scale } else { d - d_prev };
                worst.offer(
                    v,
                    || json!({ "step": n, "diff": d, "diff_prev": d_prev, "scale_value": scale }),
                );
            }
            Perturbation::Forcing { .. } => {
                let bound = d0 * d0 + integral;
                let scale = d * d + bound;
                let v = if scale > 0.0 { (d * d - bound) / scale } else { 0.0 };
                worst.offer(v, || json!({ "step": n, "diff_sq": d * d, "bound": bound }));
            }
        }
        d_prev = d;
    }
    Ok(match perturbation {
        Perturbation::InitialData { .. } => {
            worst.report("contraction_initial_data", 10.0 * cfg.picard_tol, "|u1^n|_H + |u2^n|_H")
        }
        Perturbation::Forcing { .. } => {
            worst.report("contraction_forcing", 1e-12, "|d^n|^2 + |d^0|^2 + sum dt |h1 - h2|^2")
        }
    })
}

/// Verification problem on the `n × n` unit square: band `[10⁻³, 10⁻¹]`,
/// strength `1 + xy/2`, unit mass, rotation 0.5, drag at the largest admissible
/// turning angle towards a uniform current, and a uniform body load.
pub fn standard_problem(n: usize, params: RheologyParams) -> Result<Problem> {
    let mesh = build_rect_mesh(n, n, 1.0, 1.0)?;
    let nv = mesh.n_vertices();
    let p: Vec<f64> = mesh.vertices().iter().map(|x| 1.0 + 0.5 * x.x * x.y).collect();
    let mut problem = Problem::unforced(mesh, params, PhysParams::new(1.0, 0.5, 1.0)?, 1.0)?;
    problem.strength = IceStrengthField::new(NodalSeries::Steady(p), 1.0)?;
    problem.ocean = crate::forcing::OceanForcing::new(1.0, FRAC_PI_4, NodalSeries::uniform(Vec2::new(0.1, 0.05), nv))?;
    problem.body.f_extra = NodalSeries::uniform(Vec2::new(0.05, 0.02), nv);
    Ok(problem)
}

/// Band of [`standard_problem`] with the given cut-off mode.
pub fn standard_params(mode: CutoffMode, epsilon: f64) -> Result<RheologyParams> {
    RheologyParams::new(2.0, 1e-3, 1e-1, epsilon, mode)
}

/// Setting of the paired-run checks: [`standard_problem`] on 32 × 32 with mass 10
/// and strength scaled to 0.01, so that the time-derivative term dominates the
/// Picard iteration. With `m = 10` the forcing inequality holds up to `t = m²`.
pub fn contraction_setup() -> Result<(Problem, DofVector, SolverConfig)> {
    let mut problem = standard_problem(32, standard_params(CutoffMode::CutoffBoth, 0.0)?)?;
    problem.phys = PhysParams::new(10.0, 0.5, 1.0)?;
    problem.strength = IceStrengthField::new(problem.strength.p.map(|p| 0.01 * p), 0.01)?;
    let u0 = DofVector::interpolate(&problem.mesh, |x| {
        Vec2::new(0.05 * (3.0 * x.x).sin() * (2.0 * x.y).sin(), 0.0)
    });
    let cfg = SolverConfig {
        dt: 0.01,
        t_end: 1.0,
        picard_max: 500,
        ..SolverConfig::default()
    };
    Ok((problem, u0, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    /// Longest edge per level.
    pub h: Vec<f64>,
    pub errors_h: Vec<f64>,
    pub errors_v: Vec<f64>,
    pub observed_order_h: f64,
    pub observed_order_v: f64,
    pub amplitude: f64,
}

/// Degree-5 seven-point rule on the reference triangle: barycentric points, weights summing to 1.
const QUAD7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Manufactured field `A sin(πx) sin(πy) (1, 1)`.
pub fn manufactured_velocity(a: f64, x: Vec2) -> Vec2 {
    let s = a * (PI * x.x).sin() * (PI * x.y).sin();
    Vec2::new(s, s)
}

/// Gradient rows `[∂u_x/∂x, ∂u_x/∂y]`, `[∂u_y/∂x, ∂u_y/∂y]` of [`manufactured_velocity`].
pub fn manufactured_gradient(a: f64, x: Vec2) -> [[f64; 2]; 2] {
    let gx = a * PI * (PI * x.x).cos() * (PI * x.y).sin();
    let gy = a * PI * (PI * x.x).sin() * (PI * x.y).cos();
    [[gx, gy], [gx, gy]]
}

/// Load balancing [`manufactured_velocity`] in the lower cut-off regime with
/// constant strength `p`: `−div σ = (P A π²/(2δ_•)) ((1+λ) sin sin − cos cos) (1, 1)`.
pub fn manufactured_load(a: f64, p: f64, params: &RheologyParams, x: Vec2) -> Vec2 {
    let ss = (PI * x.x).sin() * (PI * x.y).sin();
    let cc = (PI * x.x).cos() * (PI * x.y).cos();
    let v = p * a * PI * PI / (2.0 * params.delta_lo()) * ((1.0 + params.lambda()) * ss - cc);
    Vec2::new(v, v)
}

/// Steady problem on the `n × n` unit square whose exact solution is the manufactured field.
pub fn manufactured_problem(n: usize, a: f64, p: f64, params: RheologyParams) -> Result<Problem> {
    let mesh = build_rect_mesh(n, n, 1.0, 1.0)?;
    let nv = mesh.n_vertices();
    let load: Vec<Vec2> = mesh
        .vertices()
        .iter()
        .map(|&x| manufactured_load(a, p, &params, x))
        .collect();
    let mut problem = Problem::unforced(mesh, params, PhysParams::new(1.0, 0.0, 1.0)?, p)?;
    problem.body.f_extra = NodalSeries::Steady(load);
    problem.strength = IceStrengthField::constant(p, nv)?;
    Ok(problem)
}

/// Largest `δ_p(Du*)` of the manufactured field: `√(λ+4)/2 · A π` bounded by `√5 A π`.
pub fn manufactured_amplitude(params: &RheologyParams, fraction: f64) -> f64 {
    fraction * params.delta_lo() / (5f64.sqrt() * PI)
}

/// H (L²) and V (gradient) errors of a discrete field against the manufactured one.
pub fn manufactured_errors(mesh: &TriMesh, u: &DofVector, a: f64) -> (f64, f64) {
    let (mut eh, mut ev) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.geometry(t).area;
        let g = crate::mesh::element_velocity_gradient(mesh, u, t);
        let x = tri.map(|v| mesh.vertices()[v]);
        let w = tri.map(|v| u.at_vertex(mesh, v));
        for (bary, weight) in QUAD7 {
            let xq = bary[0] * x[0] + bary[1] * x[1] + bary[2] * x[2];
            let uq = bary[0] * w[0] + bary[1] * w[1] + bary[2] * w[2];
            eh += area * weight * (uq - manufactured_velocity(a, xq)).norm_sq();
            let ge = manufactured_gradient(a, xq);
            let dg: f64 = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (g[i][j] - ge[i][j]).powi(2))
                .sum();
            ev += area * weight * dg;
        }
    }
    (eh.sqrt(), ev.sqrt())
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Discrete Poincaré constant `c_P`, the smallest `c` with `‖u‖_H ≤ c ‖∇u‖`
/// over the P1 space with lumped mass, by inverse iteration on `K x = μ M x`
/// for the scalar stiffness `K`; `c_P = μ_min^{-1/2}`. The vector space has the
/// same constant since the components decouple.
pub fn poincare_constant(mesh: &TriMesh, max_iters: usize) -> Result<f64> {
    let n = mesh.n_interior();
    if n == 0 {
        return Err(Error::InvalidMesh("mesh has no interior vertices".into()));
    }
    let mut k = TripletBuilder::new(n);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = mesh.geometry(t);
        for (a, &va) in tri.iter().enumerate() {
            let Some(i) = mesh.node_of_vertex(va) else { continue };
            for (b, &vb) in tri.iter().enumerate() {
                if let Some(j) = mesh.node_of_vertex(vb) {
                    k.add(i, j, geo.area * geo.grads[a].dot(geo.grads[b]));
                }
            }
        }
    }
    let k = k.finalize();
    let m: Vec<f64> = mesh.interior_vertices().iter().map(|&v| mesh.lumped_mass(v)).collect();
    let lu = BandLu::factor(&k)?;
    let mut x = vec![1.0; n];
    let mut mu = f64::INFINITY;
    for _ in 0..max_iters {
        let y: Vec<f64> = x.iter().zip(&m).map(|(x, m)| x * m).collect();
        let z = lu.solve(&y)?;
        let kz = k.mul_vec(&z)?;
        let num: f64 = z.iter().zip(&kz).map(|(a, b)| a * b).sum();
        let den: f64 = z.iter().zip(&m).map(|(z, m)| m * z * z).sum();
        let next = num / den;
        let scale = den.sqrt();
        x = z.into_iter().map(|v| v / scale).collect();
        let done = (mu - next).abs() <= 1e-13 * next;
        mu = next;
        if done {
            break;
        }
    }
    Ok(1.0 / mu.sqrt())
}

/// Parameters of the manufactured-solution study: band `[1, 10]`, `P = 1`.
pub fn manufactured_params() -> RheologyParams {
    RheologyParams::new(2.0, 1.0, 10.0, 0.0, CutoffMode::CutoffBoth).expect("valid parameters")
}

/// Steady-solves the manufactured problem on each level and fits the observed orders.
/// Fails with a regime error if any element of a discrete solution leaves the
/// lower cut-off regime.
pub fn manufactured_convergence(levels: &[usize]) -> Result<ConvergenceReport> {
    let params = manufactured_params();
    manufactured_convergence_with(levels, manufactured_amplitude(&params, 0.5), 1.0, params)
}

pub fn manufactured_convergence_with(
    levels: &[usize],
    a: f64,
    p: f64,
    params: RheologyParams,
) -> Result<ConvergenceReport> {
    if levels.len() < 2 || levels.windows(2).any(|w| w[1] <= w[0]) || levels[0] < 2 {
        return Err(Error::InvalidParameter(
            "levels must be at least two strictly ascending sizes ≥ 2".into(),
        ));
    }
    let cfg = SolverConfig {
        picard_tol: 1e-12,
        ..SolverConfig::default()
    };
    let mut report = ConvergenceReport {
        levels: levels.to_vec(),
        h: Vec::new(),
        errors_h: Vec::new(),
        errors_v: Vec::new(),
        observed_order_h: f64::NAN,
        observed_order_v: f64::NAN,
        amplitude: a,
    };
    for &n in levels {
        let problem = manufactured_problem(n, a, p, params)?;
        let (u, _) = steady_solve(&problem, 0.0, &cfg, None)?;
        for t in 0..problem.mesh.n_triangles() {
            let z = element_sym_gradient(&problem.mesh, &u, t);
            if delta_reg(z, &params) != params.delta_lo() {
                return Err(Error::Regime(format!(
                    "element {t} on level {n} left the lower cut-off regime (delta_p = {:e})",
                    delta_p(z, &params)
                )));
            }
        }
        let (eh, ev) = manufactured_errors(&problem.mesh, &u, a);
        report.h.push(problem.mesh.max_edge());
        report.errors_h.push(eh);
        report.errors_v.push(ev);
    }
    report.observed_order_h = fitted_order(&report.h, &report.errors_h);
    report.observed_order_v = fitted_order(&report.h, &report.errors_v);
    Ok(report)
}
