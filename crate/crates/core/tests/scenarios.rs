use std::path::{Path, PathBuf};

use seaice_core::io::{read_vtk, snapshot_vtk};
use seaice_core::scenario::{parse_scenario, parse_scenario_str};
use seaice_core::solver::{run_simulation, SolverConfig};

fn shipped() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

#[test]
fn shipped_scenarios_parse_validate_and_echo_round_trip() {
    let all = shipped();
    assert!(all.len() >= 3);
    for path in all {
        let s = parse_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        s.require_explicit_physics().unwrap();
        let again = parse_scenario_str(&s.echo(), path.parent().unwrap()).unwrap();
        assert_eq!(again.config, s.config, "{}", path.display());
    }
}

#[test]
fn snapshot_of_a_short_run_reads_back() {
    let path = shipped().into_iter().find(|p| p.ends_with("wind_gyre.toml")).unwrap();
    let s = parse_scenario(&path).unwrap();
    let (problem, u0) = s.build().unwrap();
    let cfg = SolverConfig {
        t_end: 2.0 * s.config.solver.dt,
        ..s.config.solver.clone()
    };
    let traj = run_simulation(&problem, &u0, &cfg, 1).unwrap();
    assert_eq!(traj.ledger.rows.len(), 2);
    assert!(traj.final_state.max_abs_node() > 0.0);

    let text = snapshot_vtk(&problem, &traj.final_state, cfg.t_end).unwrap();
    let grid = read_vtk(&text, Path::new("mem.vtk")).unwrap();
    let vel = &grid.point_vectors["velocity"];
    for (v, x) in vel.iter().enumerate() {
        let u = traj.final_state.at_vertex(&problem.mesh, v);
        assert_eq!([u.x, u.y, 0.0], *x);
    }
    assert_eq!(grid.cell_scalars["sigma_xx"].len(), problem.mesh.n_triangles());
    // ratios stay at most 1 under the lower cut-off and inside the band
    assert!(grid.cell_scalars["yield_lhs_over_quarterP2"]
        .iter()
        .all(|&r| r <= 1.0 + 1e-12));
}
