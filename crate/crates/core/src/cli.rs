//! The `seaice` command line: `run`, `verify`, `convergence` and `mesh-info`.
//!
//! Exit codes: 0 success, 1 solver failure, 2 configuration error,
//! 3 verification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::write_snapshot;
use crate::rheology::CutoffMode;
use crate::scenario::parse_scenario;
use crate::solver::{run_simulation, Snapshot};
use crate::verify::{
    check_coercivity, check_contraction, check_discrete_monotonicity, check_drag_polynomial,
    check_pointwise_monotonicity, check_rescaled_cubic, check_yield_identity, contraction_setup,
    manufactured_convergence, poincare_constant, scan_discriminant, scan_drag_monotonicity, standard_params,
    standard_problem, Perturbation, PropertyReport,
};
use crate::Vec2;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Required observed orders of the manufactured-solution study.
pub const MIN_ORDER_V: f64 = 0.9;
pub const MIN_ORDER_H: f64 = 1.8;

#[derive(Debug, Parser)]
#[command(
    name = "seaice",
    version,
    about = "Visco-plastic sea-ice momentum balance: simulation and verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write the energy ledger and VTK snapshots.
    Run { scenario: PathBuf },
    /// Run property checks and print one JSON report per line.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Sample count (pairs, fields or vectors, depending on the suite).
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Cut-off mode for the constitutive and operator suites.
        #[arg(long, default_value = "cutoff_both")]
        mode: CutoffMode,
        /// Regularization for the epsilon modes.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Manufactured-solution convergence study on the unit square.
    Convergence {
        #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64])]
        levels: Vec<usize>,
    },
    /// Print mesh statistics of a scenario.
    MeshInfo { scenario: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Yield,
    Pointwise,
    Discrete,
    Coercivity,
    Drag,
    DragPolynomial,
    Cubic,
    Discriminant,
    Contraction,
    All,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_SOLVER
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `out` and diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are reported through the error path with exit code 0
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Run { scenario } => cmd_run(&scenario, out, err),
        Command::Verify {
            suite,
            samples,
            seed,
            mode,
            epsilon,
        } => cmd_verify(suite, samples, seed, mode, epsilon, out),
        Command::Convergence { levels } => cmd_convergence(&levels, out),
        Command::MeshInfo { scenario } => cmd_mesh_info(&scenario, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:06}.vtk"))
}

fn cmd_run(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let scenario = parse_scenario(path)?;
    scenario.require_explicit_physics()?;
    let (problem, u0) = scenario.build()?;
    let dir = scenario.out_dir();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("scenario.echo.toml"), scenario.echo())?;
    let cfg = &scenario.config.solver;
    let every = scenario.config.output.snapshot_every;

    let write_all = |snaps: &[Snapshot]| -> Result<()> {
        for s in snaps {
            write_snapshot(&problem, &s.u, s.t, &snapshot_path(&dir, s.step))?;
        }
        Ok(())
    };
    match run_simulation(&problem, &u0, cfg, every) {
        Ok(traj) => {
            traj.ledger.write_csv(&dir.join("ledger.csv"))?;
            write_all(&traj.snapshots)?;
            let rows = &traj.ledger.rows;
            let summary = json!({
                "steps": rows.len(),
                "t_end": rows.last().map_or(0.0, |r| r.t),
                "final_kinetic": rows.last().map_or(traj.ledger.initial_kinetic, |r| r.kinetic),
                "max_speed": traj.final_state.max_abs_node(),
                "max_picard_iters": rows.iter().map(|r| r.picard_iters).max().unwrap_or(0),
                "total_picard_iters": rows.iter().map(|r| r.picard_iters).sum::<usize>(),
                "snapshots": traj.snapshots.len(),
                "out_dir": dir.display().to_string(),
            });
            writeln!(out, "{summary}")?;
            Ok(EXIT_OK)
        }
        Err(failure) => {
            // flush what was computed before the failing step
            failure.partial.ledger.write_csv(&dir.join("ledger.csv"))?;
            write_all(&failure.partial.snapshots)?;
            writeln!(err, "error: {failure}")?;
            Ok(exit_code(&failure.error))
        }
    }
}

/// Default sample counts per suite.
fn default_samples(suite: Suite) -> u64 {
    match suite {
        Suite::Yield | Suite::Pointwise | Suite::Drag => 1_000_000,
        Suite::DragPolynomial => 100_000,
        Suite::Cubic => 10_000,
        Suite::Discrete | Suite::Coercivity => 1_000,
        Suite::Discriminant | Suite::Contraction | Suite::All => 0,
    }
}

/// Reports of one suite; the boolean marks informational reports that do not gate the exit code.
fn suite_reports(
    suite: Suite,
    samples: Option<u64>,
    seed: u64,
    mode: CutoffMode,
    epsilon: f64,
) -> Result<Vec<(PropertyReport, bool)>> {
    let n = samples.unwrap_or_else(|| default_samples(suite));
    let params = standard_params(mode, epsilon)?;
    let gate = |r: PropertyReport| vec![(r, false)];
    Ok(match suite {
        Suite::Yield => gate(check_yield_identity(n, &params, seed)?),
        Suite::Pointwise => gate(check_pointwise_monotonicity(n, &params, seed)?),
        Suite::Discrete => gate(check_discrete_monotonicity(
            &standard_problem(16, params)?,
            0.0,
            n,
            seed,
        )?),
        Suite::Coercivity => {
            let r = check_coercivity(&standard_problem(16, params)?, 0.0, n, seed)?;
            vec![(r.inequality, false), (r.growth, false)]
        }
        Suite::Drag => {
            let scan = scan_drag_monotonicity(n, 50, seed);
            vec![(scan.report, false), (scan.probe, true)]
        }
        Suite::DragPolynomial => gate(check_drag_polynomial(n, seed)),
        Suite::Cubic => gate(check_rescaled_cubic(n, seed)),
        Suite::Discriminant => gate(scan_discriminant(1e-3)?.report),
        Suite::Contraction => {
            let (problem, u0, cfg) = contraction_setup()?;
            let steps = cfg.n_steps();
            vec![
                (
                    check_contraction(
                        &problem,
                        &u0,
                        &cfg,
                        Perturbation::InitialData { scale: 1e-3, seed },
                        steps,
                    )?,
                    false,
                ),
                (
                    check_contraction(
                        &problem,
                        &u0,
                        &cfg,
                        Perturbation::Forcing {
                            delta: Vec2::new(0.02, -0.01),
                        },
                        steps,
                    )?,
                    false,
                ),
            ]
        }
        Suite::All => {
            let mut all = Vec::new();
            for s in [
                Suite::Yield,
                Suite::Pointwise,
                Suite::Discrete,
                Suite::Coercivity,
                Suite::Drag,
                Suite::DragPolynomial,
                Suite::Cubic,
                Suite::Discriminant,
                Suite::Contraction,
            ] {
                if s == Suite::Coercivity && !mode.is_coercive() {
                    continue;
                }
                all.extend(suite_reports(s, samples, seed, mode, epsilon)?);
            }
            all
        }
    })
}

fn cmd_verify(
    suite: Suite,
    samples: Option<u64>,
    seed: u64,
    mode: CutoffMode,
    epsilon: f64,
    out: &mut dyn Write,
) -> Result<i32> {
    if samples == Some(0) {
        return Err(Error::Config("--samples must be at least 1".into()));
    }
    let mut failed = false;
    for (report, informational) in suite_reports(suite, samples, seed, mode, epsilon)? {
        writeln!(out, "{}", report.to_json())?;
        failed |= !informational && !report.pass;
    }
    Ok(if failed { EXIT_VERIFY } else { EXIT_OK })
}

fn cmd_convergence(levels: &[usize], out: &mut dyn Write) -> Result<i32> {
    let report = match manufactured_convergence(levels) {
        Ok(r) => r,
        Err(Error::InvalidParameter(m)) => return Err(Error::Config(m)),
        Err(e) => return Err(e),
    };
    writeln!(out, "{}", serde_json::to_string(&report).expect("report serializes"))?;
    let pass = report.observed_order_v >= MIN_ORDER_V && report.observed_order_h >= MIN_ORDER_H;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_mesh_info(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let scenario = parse_scenario(path)?;
    let mesh = scenario.mesh()?;
    let min_area = (0..mesh.n_triangles())
        .map(|t| mesh.geometry(t).area)
        .fold(f64::INFINITY, f64::min);
    let info = json!({
        "vertices": mesh.n_vertices(),
        "triangles": mesh.n_triangles(),
        "interior_vertices": mesh.n_interior(),
        "boundary_vertices": mesh.n_vertices() - mesh.n_interior(),
        "dofs": mesh.n_dofs(),
        "total_area": mesh.total_area(),
        "max_edge": mesh.max_edge(),
        "min_area": min_area,
        "poincare_constant": poincare_constant(&mesh, 200)?,
    });
    writeln!(out, "{info}")?;
    Ok(EXIT_OK)
}
