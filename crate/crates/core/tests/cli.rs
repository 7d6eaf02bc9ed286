use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seaice_core::io::read_vtk_file;

fn seaice(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_seaice"));
    cmd.args(args);
    match out_dir {
        Some(d) => cmd.env("SEAICE_OUT_DIR", d),
        None => cmd.env_remove("SEAICE_OUT_DIR"),
    };
    cmd.output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn stdout_lines(o: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("not JSON: {l}: {e}")))
        .collect()
}

#[test]
fn rest_state_run_writes_ledger_echo_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = seaice(&["run", &scenario("rest_state.toml")], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = &stdout_lines(&o)[0];
    assert_eq!(summary["steps"], 100);
    assert_eq!(summary["max_speed"], 0.0);

    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    let mut lines = ledger.lines();
    assert!(lines.next().unwrap().starts_with("# dt="));
    assert_eq!(
        lines.next().unwrap(),
        "step,t,kinetic,a_dissipation,drag_power,coriolis_power,external_power,picard_iters,linear_iters"
    );
    assert_eq!(lines.count(), 100);

    let echo = std::fs::read_to_string(dir.path().join("scenario.echo.toml")).unwrap();
    assert!(echo.contains("lambda = 0.5"), "{echo}");

    let grid = read_vtk_file(&dir.path().join("snapshot_000100.vtk")).unwrap();
    assert_eq!(grid.points.len(), 17 * 17);
    assert!(grid.point_vectors["velocity"].iter().all(|v| *v == [0.0, 0.0, 0.0]));
    assert!(grid.cell_scalars.contains_key("delta_p"));
}

#[test]
fn run_without_physical_constants_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "[mesh]\nkind = \"rect\"\nnx = 2\nny = 2\nlx = 1.0\nly = 1.0\n").unwrap();
    let o = seaice(&["run", path.to_str().unwrap()], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn missing_scenario_and_bad_flags_exit_with_config_code() {
    assert_eq!(
        seaice(&["run", "/nonexistent/scenario.toml"], None).status.code(),
        Some(2)
    );
    assert_eq!(seaice(&["verify", "--suite", "nope"], None).status.code(), Some(2));
    assert_eq!(
        seaice(&["verify", "--suite", "yield", "--samples", "0"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(seaice(&["--help"], None).status.code(), Some(0));
}

#[test]
fn picard_failure_flushes_partial_ledger_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("wind_gyre.toml"))
        .unwrap()
        .replace("picard_max = 5000", "picard_max = 3");
    let path = dir.path().join("starved.toml");
    std::fs::write(&path, text).unwrap();
    let o = seaice(&["run", path.to_str().unwrap()], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert!(ledger.lines().nth(1).unwrap().starts_with("step,"));
    assert!(dir.path().join("snapshot_000000.vtk").exists());
}

#[test]
fn discriminant_suite_prints_exactly_one_passing_report() {
    let o = seaice(&["verify", "--suite", "discriminant"], None);
    assert_eq!(o.status.code(), Some(0));
    let lines = stdout_lines(&o);
    assert_eq!(lines.len(), 1);
    let r = &lines[0];
    assert_eq!(r["pass"], true);
    for key in ["name", "samples", "worst_violation", "tolerance", "witness"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn small_suites_pass_with_custom_samples() {
    for suite in [
        "yield",
        "pointwise",
        "discrete",
        "coercivity",
        "drag-polynomial",
        "cubic",
    ] {
        let o = seaice(&["verify", "--suite", suite, "--samples", "200", "--seed", "7"], None);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{suite}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
        assert!(stdout_lines(&o).iter().all(|r| r["pass"] == true));
    }
    let o = seaice(
        &[
            "verify",
            "--suite",
            "yield",
            "--samples",
            "200",
            "--mode",
            "eps_both",
            "--epsilon",
            "1e-6",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn drag_suite_reports_the_probe_without_gating_on_it() {
    let o = seaice(&["verify", "--suite", "drag", "--samples", "1000"], None);
    assert_eq!(o.status.code(), Some(0));
    let lines = stdout_lines(&o);
    assert_eq!(lines.len(), 2);
    assert!(lines[1]["name"].as_str().unwrap().starts_with("drag_probe"));
}

#[test]
fn convergence_reports_orders() {
    let o = seaice(&["convergence", "--levels", "8,16,32"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &stdout_lines(&o)[0];
    assert!(r["observed_order_h"].as_f64().unwrap() > 1.8);
    assert!(r["observed_order_v"].as_f64().unwrap() > 0.9);
}

#[test]
fn mesh_info_counts_vertices_and_dofs() {
    let o = seaice(&["mesh-info", &scenario("ocean_spinup.toml")], None);
    assert_eq!(o.status.code(), Some(0));
    let r = &stdout_lines(&o)[0];
    assert_eq!(r["vertices"], 289);
    assert_eq!(r["triangles"], 512);
    assert_eq!(r["dofs"], 2 * 15 * 15);
    assert!((r["total_area"].as_f64().unwrap() - 1e12).abs() < 1e-3);
    let c = r["poincare_constant"].as_f64().unwrap();
    assert!((c / 1e6 - 1.0 / (std::f64::consts::PI * 2f64.sqrt())).abs() < 0.01);
}
