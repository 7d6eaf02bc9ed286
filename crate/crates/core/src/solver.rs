//! Implicit Euler in time with a frozen-coefficient (Picard) inner iteration and
//! an energy ledger that tracks the terms of the discrete energy balance.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    apply_parts, assemble_picard_system, assemble_steady_system, body_load_vector, pairing, AssembledSystem,
};
use crate::error::{Error, Result};
use crate::linalg::{direct_solve, gmres, gmres_preconditioned, BandLu};
use crate::mesh::{lumped_h_norm, v_seminorm, DofVector};
use crate::problem::Problem;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearMethod {
    SparseDirect,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Time step, s.
    pub dt: f64,
    /// Final time, s.
    pub t_end: f64,
    /// Relative increment of the V-seminorm that ends the Picard loop.
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Relaxation of the Picard update, in (0, 1].
    pub damping: f64,
    pub linear_rtol: f64,
    pub linear_method: LinearMethod,
    pub krylov_restart: usize,
    pub krylov_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 3600.0,
            t_end: 86400.0,
            picard_tol: 1e-8,
            picard_max: 200,
            damping: 1.0,
            linear_rtol: 1e-10,
            linear_method: LinearMethod::SparseDirect,
            krylov_restart: 60,
            krylov_max_iters: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        if self.picard_max == 0 {
            return bad("picard_max must be at least 1".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if !(self.linear_rtol > 0.0) {
            return bad(format!("linear_rtol must be positive, got {}", self.linear_rtol));
        }
        if self.krylov_restart == 0 || self.krylov_max_iters == 0 {
            return bad("Krylov restart and iteration cap must be positive".into());
        }
        Ok(())
    }

    /// Number of steps; `t_end` is rounded to a whole number of steps.
    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` to `‖Ax − b‖ ≤ linear_rtol ‖b‖`.
///
/// The direct path counts as one iteration and applies iterative refinement;
/// if that still misses the tolerance the matrix is reported as numerically singular.
pub fn linear_solve(a: &CsrMatrix, b: &[f64], cfg: &SolverConfig) -> Result<LinearSolution> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.len(),
        });
    }
    match cfg.linear_method {
        LinearMethod::SparseDirect => {
            let (x, rel) = direct_solve(a, b, cfg.linear_rtol, 3)?;
            // cancellation-limited residuals are accepted up to a conditioning allowance
            if rel > cfg.linear_rtol.max(1e-8) {
                return Err(Error::Singular {
                    row: usize::MAX,
                    pivot: rel,
                });
            }
            Ok(LinearSolution {
                x,
                iterations: 1,
                relative_residual: rel,
            })
        }
        LinearMethod::Krylov => linear_solve_from(a, b, None, cfg, &mut FactorCache::default()),
    }
}

fn linear_solve_from(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
    cache: &mut FactorCache,
) -> Result<LinearSolution> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.len(),
        });
    }
    match cfg.linear_method {
        LinearMethod::SparseDirect => cache.solve(a, b, x0, cfg.linear_rtol),
        LinearMethod::Krylov => {
            let (x, iterations) = gmres(a, b, x0, cfg.linear_rtol, cfg.krylov_restart, cfg.krylov_max_iters)?;
            let relative_residual = relative_residual(a, &x, b)?;
            Ok(LinearSolution {
                x,
                iterations,
                relative_residual,
            })
        }
    }
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let ax = a.mul_vec(x)?;
    let rn = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if bn > 0.0 { rn / bn } else { 0.0 })
}

/// Successive Picard matrices differ little, so the last band factorization is
/// kept and used to precondition GMRES; it is recomputed once the inner
/// iteration count exceeds [`FactorCache::REUSE_LIMIT`].
#[derive(Debug, Default)]
pub struct FactorCache {
    lu: Option<BandLu>,
}

impl FactorCache {
    const REUSE_LIMIT: usize = 12;

    fn solve(&mut self, a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, rtol: f64) -> Result<LinearSolution> {
        if let Some(lu) = self.lu.as_ref().filter(|lu| lu.dim() == a.dim()) {
            let precond = |v: &[f64], out: &mut [f64]| {
                out.copy_from_slice(&lu.solve(v).expect("dimension checked"));
            };
            let limit = Self::REUSE_LIMIT;
            if let Ok((x, iterations)) = gmres_preconditioned(a, b, x0, rtol, limit, limit, precond) {
                let relative_residual = relative_residual(a, &x, b)?;
                if relative_residual <= rtol {
                    return Ok(LinearSolution {
                        x,
                        iterations,
                        relative_residual,
                    });
                }
            }
        }
        let lu = BandLu::factor(a)?;
        let first = lu.solve(b)?;
        let precond = |v: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&lu.solve(v).expect("dimension checked"));
        };
        // a fresh factorization needs at most a couple of refinement sweeps
        let solved = gmres_preconditioned(a, b, Some(&first), rtol, 5, 5, precond);
        let (x, iterations) = match solved {
            Ok(r) => r,
            Err(Error::KrylovNotConverged { best_residual, .. }) => {
                return Err(Error::Singular {
                    row: usize::MAX,
                    pivot: best_residual,
                })
            }
            Err(e) => return Err(e),
        };
        let relative_residual = relative_residual(a, &x, b)?;
        self.lu = Some(lu);
        Ok(LinearSolution {
            x,
            iterations: iterations + 1,
            relative_residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepStats {
    pub picard_iters: usize,
    pub linear_iters: usize,
    /// Relative V-seminorm increment after each Picard sweep.
    pub increments: Vec<f64>,
    pub final_damping: f64,
}

const MIN_DAMPING: f64 = 1.0 / 64.0;

fn picard_loop(
    problem: &Problem,
    start: &DofVector,
    cfg: &SolverConfig,
    cache: &mut FactorCache,
    mut assemble: impl FnMut(&DofVector) -> Result<AssembledSystem>,
) -> Result<(DofVector, StepStats)> {
    let mesh = &problem.mesh;
    let mut u = start.clone();
    let mut stats = StepStats {
        final_damping: cfg.damping,
        ..Default::default()
    };
    let mut damping = cfg.damping;
    let mut prev_rel = f64::INFINITY;
    for _ in 0..cfg.picard_max {
        let sys = assemble(&u)?;
        let sol = linear_solve_from(&sys.matrix, &sys.rhs, Some(u.values()), cfg, cache)?;
        stats.linear_iters += sol.iterations;
        stats.picard_iters += 1;
        let mut next = DofVector::from_values(mesh, sol.x)?;
        if damping < 1.0 {
            let mut relaxed = u.scaled(1.0 - damping);
            relaxed.axpy(damping, &next);
            next = relaxed;
        }
        let inc = v_seminorm(mesh, &next.sub(&u));
        let norm = v_seminorm(mesh, &next);
        let rel = if inc == 0.0 {
            0.0
        } else if norm > 0.0 {
            inc / norm
        } else {
            f64::INFINITY
        };
        stats.increments.push(rel);
        u = next;
        if rel <= cfg.picard_tol {
            stats.final_damping = damping;
            return Ok((u, stats));
        }
        if rel > prev_rel {
            damping = (0.5 * damping).max(MIN_DAMPING);
        }
        prev_rel = rel;
    }
    Err(Error::PicardNotConverged {
        increments: stats.increments,
    })
}

/// One backward-Euler step: solves `(m/dt) M (u − u_prev) + F(t_next, u) = h(t_next)`.
pub fn implicit_euler_step(
    problem: &Problem,
    u_prev: &DofVector,
    t_next: f64,
    cfg: &SolverConfig,
) -> Result<(DofVector, StepStats)> {
    implicit_euler_step_cached(problem, u_prev, t_next, cfg, &mut FactorCache::default())
}

/// [`implicit_euler_step`] reusing factorizations kept in `cache` between calls.
pub fn implicit_euler_step_cached(
    problem: &Problem,
    u_prev: &DofVector,
    t_next: f64,
    cfg: &SolverConfig,
    cache: &mut FactorCache,
) -> Result<(DofVector, StepStats)> {
    cfg.validate()?;
    u_prev.check(&problem.mesh)?;
    picard_loop(problem, u_prev, cfg, cache, |lag| {
        assemble_picard_system(problem, lag, u_prev, t_next, cfg.dt)
    })
}

/// Picard fixed point of `F(t, u) = h(t)`, started from `guess` (zero when absent).
pub fn steady_solve(
    problem: &Problem,
    t: f64,
    cfg: &SolverConfig,
    guess: Option<&DofVector>,
) -> Result<(DofVector, StepStats)> {
    cfg.validate()?;
    let zero = DofVector::zeros(&problem.mesh);
    let start = guess.unwrap_or(&zero);
    start.check(&problem.mesh)?;
    picard_loop(problem, start, cfg, &mut FactorCache::default(), |lag| {
        assemble_steady_system(problem, lag, t)
    })
}

/// Norm-squared residual of the nonlinear steady equation, relative to the load.
pub fn steady_residual(problem: &Problem, u: &DofVector, t: f64) -> Result<f64> {
    let f = crate::assembly::apply_operator(problem, u, t)?;
    let h = body_load_vector(problem, t)?;
    let r: f64 = f.iter().zip(&h).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let s: f64 = h
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f.iter().map(|v| v * v).sum::<f64>().sqrt());
    Ok(if s > 0.0 { r / s } else { r })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    /// `(m/2) ‖u‖²` in the lumped L² norm.
    pub kinetic: f64,
    /// `a(t, u, u)`.
    pub a_dissipation: f64,
    /// `−g(t, u, u)`: power delivered by the ocean drag.
    pub drag_power: f64,
    /// `c(u, u)`, zero up to round-off.
    pub coriolis_power: f64,
    /// `⟨h, u⟩`.
    pub external_power: f64,
    pub picard_iters: usize,
    pub linear_iters: usize,
    /// `(m / 2dt) ‖u − u_prev‖²`, the backward-Euler numerical dissipation.
    #[serde(skip)]
    pub numerical_dissipation: f64,
}

impl LedgerRow {
    fn terms_scale(&self, kinetic_rate: f64) -> f64 {
        [
            kinetic_rate,
            self.a_dissipation,
            self.drag_power,
            self.coriolis_power,
            self.external_power,
            self.numerical_dissipation,
        ]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub const LEDGER_HEADER: &str =
    "step,t,kinetic,a_dissipation,drag_power,coriolis_power,external_power,picard_iters,linear_iters";

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub config: SolverConfig,
    pub initial_kinetic: f64,
    pub rows: Vec<LedgerRow>,
}

/// Residual of one row of the discrete energy balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceCheck {
    pub step: usize,
    pub residual: f64,
    /// Largest magnitude among the balanced terms.
    pub scale: f64,
}

impl EnergyLedger {
    /// Per-step residual of
    /// `ΔK/dt + (m/2dt)‖Δu‖² + a(u,u) − drag_power + c(u,u) = ⟨h,u⟩`.
    pub fn balance(&self) -> Vec<BalanceCheck> {
        let mut prev = self.initial_kinetic;
        self.rows
            .iter()
            .map(|r| {
                let rate = (r.kinetic - prev) / self.config.dt;
                prev = r.kinetic;
                let lhs = rate + r.numerical_dissipation + r.a_dissipation - r.drag_power + r.coriolis_power;
                BalanceCheck {
                    step: r.step,
                    residual: lhs - r.external_power,
                    scale: r.terms_scale(rate),
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "# dt={:e} t_end={:e} picard_tol={:e} picard_max={} damping={} linear_rtol={:e} linear_method={:?}\n",
            c.dt, c.t_end, c.picard_tol, c.picard_max, c.damping, c.linear_rtol, c.linear_method
        );
        s.push_str(LEDGER_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                r.step,
                r.t,
                r.kinetic,
                r.a_dissipation,
                r.drag_power,
                r.coriolis_power,
                r.external_power,
                r.picard_iters,
                r.linear_iters
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Energy terms at the accepted velocity of a step.
pub fn ledger_row(
    problem: &Problem,
    step: usize,
    t: f64,
    u: &DofVector,
    u_prev: &DofVector,
    dt: f64,
    stats: &StepStats,
) -> Result<LedgerRow> {
    let parts = apply_parts(problem, u, t)?;
    let h = body_load_vector(problem, t)?;
    let m = problem.phys.m;
    let hn = lumped_h_norm(&problem.mesh, u);
    let dn = lumped_h_norm(&problem.mesh, &u.sub(u_prev));
    Ok(LedgerRow {
        step,
        t,
        kinetic: 0.5 * m * hn * hn,
        a_dissipation: pairing(&parts.a, u.values())?,
        drag_power: -pairing(&parts.g, u.values())?,
        coriolis_power: pairing(&parts.c, u.values())?,
        external_power: pairing(&h, u.values())?,
        picard_iters: stats.picard_iters,
        linear_iters: stats.linear_iters,
        numerical_dissipation: 0.5 * m / dt * dn * dn,
    })
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: DofVector,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub ledger: EnergyLedger,
    pub final_state: DofVector,
}

/// A failed run: the error plus everything computed before it.
#[derive(Debug)]
pub struct RunFailure {
    pub step: usize,
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "step {} failed: {}", self.step, self.error)
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Integrates from `t = 0` to `cfg.t_end`, keeping a snapshot every
/// `snapshot_every` steps (0 keeps only the initial and final states).
pub fn run_simulation(
    problem: &Problem,
    u0: &DofVector,
    cfg: &SolverConfig,
    snapshot_every: usize,
) -> std::result::Result<Trajectory, Box<RunFailure>> {
    let kinetic0 = {
        let n = lumped_h_norm(&problem.mesh, u0);
        0.5 * problem.phys.m * n * n
    };
    let mut traj = Trajectory {
        snapshots: vec![Snapshot {
            step: 0,
            t: 0.0,
            u: u0.clone(),
        }],
        ledger: EnergyLedger {
            config: *cfg,
            initial_kinetic: kinetic0,
            rows: Vec::new(),
        },
        final_state: u0.clone(),
    };
    let fail = |step, error, traj: Trajectory| {
        Box::new(RunFailure {
            step,
            error,
            partial: traj,
        })
    };
    if let Err(e) = cfg.validate().and_then(|_| u0.check(&problem.mesh)) {
        return Err(fail(0, e, traj));
    }
    let n = cfg.n_steps();
    let mut u = u0.clone();
    let mut cache = FactorCache::default();
    for step in 1..=n {
        let t = step as f64 * cfg.dt;
        let result = implicit_euler_step_cached(problem, &u, t, cfg, &mut cache)
            .and_then(|(next, stats)| Ok((ledger_row(problem, step, t, &next, &u, cfg.dt, &stats)?, next)));
        match result {
            Ok((row, next)) => {
                traj.ledger.rows.push(row);
                u = next;
                traj.final_state = u.clone();
                if (snapshot_every > 0 && step % snapshot_every == 0) || step == n {
                    traj.snapshots.push(Snapshot { step, t, u: u.clone() });
                }
            }
            Err(e) => return Err(fail(step, e, traj)),
        }
    }
    Ok(traj)
}
