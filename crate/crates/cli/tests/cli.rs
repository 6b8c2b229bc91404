use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dgsem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgsem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const FREESTREAM: &str = r#"
case = "freestream"
degree = 3

[mesh]
kind = "warped"
elements = [2, 2, 2]

[numerics]
final_time = 0.02

[output]
monitor = "out/monitor.csv"
final_state = "out/state.txt"
"#;

#[test]
fn freestream_run_writes_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", FREESTREAM);
    let out = dgsem(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let residual: f64 = stdout
        .lines()
        .find(|l| l.starts_with("initial |dU/dt|"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual < 1e-11, "{residual}");
    let monitor = fs::read_to_string(dir.path().join("out/monitor.csv")).unwrap();
    assert!(monitor.starts_with(
        "step,t,dt,mass,momentum_x,momentum_y,momentum_z,energy,entropy,entropy_rate\n"
    ));
    let state = fs::read_to_string(dir.path().join("out/state.txt")).unwrap();
    assert!(state.lines().any(|l| l == "degree 3"));
    assert!(state.lines().any(|l| l == "elements 8"));

    assert_eq!(dgsem(&["run", &cfg]).status.code(), Some(0));
    let again = fs::read_to_string(dir.path().join("out/monitor.csv")).unwrap();
    assert_eq!(monitor, again);
}

#[test]
fn density_wave_monitor_shows_non_increasing_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "wave.toml",
        r#"
case = "density_wave"
degree = 3
[mesh]
kind = "warped"
elements = [2, 2, 2]
[numerics]
volume_flux = "ec"
surface_dissipation = "llf"
final_time = 0.05
[output]
monitor = "m.csv"
final_state = "s.txt"
"#,
    );
    let out = dgsem(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() > 5);
    for row in rows {
        let rate: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(rate <= 1e-12, "{row}");
    }
}

#[test]
fn invalid_flux_name_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "case = \"density_wave\"\ndegree = 2\n[numerics]\nvolume_flux = \"roe\"\n",
    );
    let out = dgsem(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("central") && err.contains("ec"), "{err}");
}

#[test]
fn invalid_values_name_their_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "case = \"density_wave\"\ndegree = 2\n[numerics]\ncfl = -1.0\n",
    );
    let out = dgsem(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("numerics.cfl"));

    let missing = dir.path().join("nope.toml");
    let out = dgsem(&["run", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(
        dir.path(),
        "mesh.toml",
        "case = \"density_wave\"\ndegree = 2\n[mesh]\nkind = \"file\"\npath = \"absent.mesh\"\n",
    );
    let out = dgsem(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("absent.mesh"));
}

#[test]
fn unstable_run_aborts_with_positivity_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "blow.toml",
        r#"
case = "density_wave"
degree = 3
wave_amplitude = 0.9
[mesh]
kind = "box"
elements = [2, 2, 2]
[numerics]
volume_flux = "central"
surface_dissipation = "none"
cfl = 4.0
final_time = 2.0
[output]
monitor = "m.csv"
"#,
    );
    let out = dgsem(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out.stderr).contains("density"));
}

#[test]
fn verify_suites_and_exit_codes() {
    let out = dgsem(&["verify", "spectral"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let stdout = text(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 8);
    assert!(stdout.contains("N=1..15"));

    let out = dgsem(&["verify", "fluxes", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("Tadmor"));

    let out = dgsem(&["verify", "everything"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("spectral, geometry, fluxes, solver, all"));
}

#[test]
fn convergence_study_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "conv.toml",
        "case = \"density_wave\"\ndegree = 3\n[mesh]\nkind = \"box\"\n[numerics]\nfinal_time = 0.02\nmonitor_every = 100\n",
    );
    let out = dgsem(&["converge", &cfg, "--levels", "2,1"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = text(&out.stdout);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("elements,degree,steps,l2_rho"));
    assert!(lines[1].starts_with("1,3,"));
    assert!(lines[2].starts_with("2,3,"));

    let out = dgsem(&["converge", &cfg, "--levels", "1,2", "--min-order", "50"]);
    assert_eq!(out.status.code(), Some(1));

    let path = dir.path().join("p.csv");
    let out = dgsem(&[
        "converge",
        &cfg,
        "--degrees",
        "2,3",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(path).unwrap().lines().count(), 3);

    assert_eq!(dgsem(&["converge", &cfg]).status.code(), Some(2));
}

#[test]
fn mesh_generate_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.mesh");
    let p = path.to_str().unwrap();
    let out = dgsem(&[
        "mesh",
        "generate",
        "--elements",
        "2",
        "--amplitude",
        "0.08",
        "-o",
        p,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(fs::read_to_string(&path)
        .unwrap()
        .starts_with("dgsem-mesh 1"));

    let out = dgsem(&["mesh", "audit", p, "--degree", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("element,jacobian_min,jacobian_max,metric_residual"));
    assert_eq!(stdout.lines().count(), 9);

    let bad = dir.path().join("bad.mesh");
    fs::write(&bad, "dgsem-mesh 1\nelements two\n").unwrap();
    let out = dgsem(&["mesh", "audit", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 2"));
}

#[test]
fn basis_dump_is_csv() {
    let out = dgsem(&["basis", "dump", "--degree", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = text(&out.stdout);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "j,node,weight,barycentric,d_0,d_1,d_2");
    assert_eq!(lines.len(), 4);
    let mid: Vec<f64> = lines[2]
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(mid[0], 0.0);
    assert!((mid[1] - 4.0 / 3.0).abs() < 1e-15);

    assert_eq!(
        dgsem(&["basis", "dump", "--degree", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(dgsem(&["basis", "dump"]).status.code(), Some(2));
}
