//! Time loop with monitors, output files and error norms.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::cases::Case;
use crate::config::{ConfigError, RunConfig};
use crate::geometry::Vec3;
use crate::physics::Conservative;
use crate::solver::{max_abs, Discretization, SolutionField, SolverError};
use crate::spectral::{gauss_lobatto, NodalBasis};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("state file line {line}: {msg}")]
    StateFormat { line: usize, msg: String },
}

impl RunError {
    pub fn is_positivity(&self) -> bool {
        matches!(self, RunError::Solver(e) if e.is_positivity())
    }
}

pub const MONITOR_HEADER: &str =
    "step,t,dt,mass,momentum_x,momentum_y,momentum_z,energy,entropy,entropy_rate";

/// One monitor sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub totals: [f64; 5],
    pub entropy: f64,
    pub entropy_rate: f64,
}

impl MonitorRow {
    pub fn csv(&self) -> String {
        let mut s = format!("{},{:.16e},{:.16e}", self.step, self.time, self.dt);
        for t in self.totals {
            write!(s, ",{t:.16e}").unwrap();
        }
        write!(s, ",{:.16e},{:.16e}", self.entropy, self.entropy_rate).unwrap();
        s
    }
}

/// L2 and max errors per conserved variable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub l2: [f64; 5],
    pub linf: [f64; 5],
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub steps: usize,
    pub final_time: f64,
    pub monitors: Vec<MonitorRow>,
    /// `max |dU/dt|` of the initial state.
    pub initial_residual: f64,
    pub max_entropy_rate: f64,
    pub errors: ErrorNorms,
    pub state: SolutionField,
}

impl RunReport {
    pub fn monitor_csv(&self) -> String {
        let mut s = String::from(MONITOR_HEADER);
        s.push('\n');
        for row in &self.monitors {
            s.push_str(&row.csv());
            s.push('\n');
        }
        s
    }

    pub fn max_total_drift(&self) -> [f64; 5] {
        let first = self.monitors.first().map(|r| r.totals).unwrap_or_default();
        let mut out = [0.0f64; 5];
        for r in &self.monitors {
            for c in 0..5 {
                out[c] = out[c].max((r.totals[c] - first[c]).abs());
            }
        }
        out
    }
}

/// Builds the discretization described by a config, with the exact solution
/// registered as Dirichlet data and the manufactured source if enabled.
pub fn build_discretization(cfg: &RunConfig) -> Result<Discretization, RunError> {
    let mesh = cfg.build_mesh()?;
    let case = cfg.case();
    let mut d = Discretization::new(
        &mesh,
        cfg.degree,
        cfg.gas,
        cfg.solver_options(),
        cfg.numerics.metrics,
    )?
    .with_boundary(case.exact_fn());
    if cfg.numerics.source {
        d.set_source(case.source_fn());
    }
    Ok(d)
}

fn monitor(
    d: &Discretization,
    u: &SolutionField,
    step: usize,
    dt: f64,
) -> Result<(MonitorRow, Vec<Conservative>), SolverError> {
    let r = d.residual(u)?;
    let row = MonitorRow {
        step,
        time: u.time,
        dt,
        totals: d.totals(u),
        entropy: d.total_entropy(u)?,
        entropy_rate: d.entropy_rate(u, &r)?,
    };
    Ok((row, r))
}

/// Integrates to the configured final time, collecting monitors every
/// `monitor_every` steps (and at the start and end).
pub fn integrate(d: &Discretization, cfg: &RunConfig, case: &Case) -> Result<RunReport, RunError> {
    let n = &cfg.numerics;
    let mut u = d.initial_field(0.0, |x, t| case.exact(x, t));
    let (row, r0) = monitor(d, &u, 0, 0.0)?;
    let initial_residual = max_abs(&r0);
    let mut monitors = vec![row];
    let mut steps = 0;
    let end = n.final_time;
    while u.time < end * (1.0 - 1e-14) {
        let dt_target = match n.dt {
            Some(dt) => dt,
            None => d.timestep_estimate(&u, n.cfl)?,
        };
        let dt = dt_target.min(end - u.time);
        u = d.rk_step(&u, dt)?;
        steps += 1;
        let last = u.time >= end * (1.0 - 1e-14);
        if steps % n.monitor_every == 0 || last {
            monitors.push(monitor(d, &u, steps, dt)?.0);
        }
    }
    let max_entropy_rate = monitors
        .iter()
        .map(|m| m.entropy_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    let errors = error_norms(d, &u, |x| case.exact(x, u.time));
    Ok(RunReport {
        steps,
        final_time: u.time,
        monitors,
        initial_residual,
        max_entropy_rate,
        errors,
        state: u,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, text).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Runs a configured case and writes its monitor CSV and final state.
pub fn run_case(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let d = build_discretization(cfg)?;
    let report = integrate(&d, cfg, &cfg.case())?;
    if let Some(p) = &cfg.output.monitor {
        write_file(p, &report.monitor_csv())?;
    }
    if let Some(p) = &cfg.output.final_state {
        write_file(p, &write_state(&d, &report.state))?;
    }
    Ok(report)
}

/// Tensor-product interpolation of nodal data to an `m^3` target grid.
fn interpolate_3d<const K: usize>(
    imat: &[f64],
    m: usize,
    np: usize,
    values: &[[f64; K]],
) -> Vec<[f64; K]> {
    let mut a = vec![[0.0; K]; m * np * np];
    for k in 0..np {
        for j in 0..np {
            for t in 0..m {
                let mut acc = [0.0; K];
                for i in 0..np {
                    let w = imat[t * np + i];
                    let v = &values[i + np * (j + np * k)];
                    for c in 0..K {
                        acc[c] += w * v[c];
                    }
                }
                a[t + m * (j + np * k)] = acc;
            }
        }
    }
    let mut b = vec![[0.0; K]; m * m * np];
    for k in 0..np {
        for t in 0..m {
            for s in 0..m {
                let mut acc = [0.0; K];
                for j in 0..np {
                    let w = imat[t * np + j];
                    let v = &a[s + m * (j + np * k)];
                    for c in 0..K {
                        acc[c] += w * v[c];
                    }
                }
                b[s + m * (t + m * k)] = acc;
            }
        }
    }
    let mut out = vec![[0.0; K]; m * m * m];
    for t in 0..m {
        for r in 0..m {
            for s in 0..m {
                let mut acc = [0.0; K];
                for k in 0..np {
                    let w = imat[t * np + k];
                    let v = &b[s + m * (r + m * k)];
                    for c in 0..K {
                        acc[c] += w * v[c];
                    }
                }
                out[s + m * (r + m * t)] = acc;
            }
        }
    }
    out
}

/// Errors against `exact` using LGL quadrature exact to degree `2N + 8`,
/// normalised by the domain volume.
pub fn error_norms(
    d: &Discretization,
    u: &SolutionField,
    exact: impl Fn(Vec3) -> Conservative + Sync,
) -> ErrorNorms {
    let np = d.basis.len();
    let qdeg = d.basis.degree() + 5;
    let (qx, qw) = gauss_lobatto(qdeg).expect("quadrature degree in range");
    let m = qx.len();
    let imat = d.basis.interpolation_matrix(&qx);
    let mut sum = [0.0; 5];
    let mut vol = 0.0;
    let mut linf = [0.0f64; 5];
    for (e, geo) in d.geometry.iter().enumerate() {
        let x = interpolate_3d(&imat, m, np, &geo.x);
        let jac: Vec<[f64; 1]> = geo.jacobian.iter().map(|&j| [j]).collect();
        let jq = interpolate_3d(&imat, m, np, &jac);
        let uq = interpolate_3d(&imat, m, np, u.element(e));
        for t in 0..m {
            for r in 0..m {
                for s in 0..m {
                    let q = s + m * (r + m * t);
                    let w = qw[s] * qw[r] * qw[t] * jq[q][0];
                    let ex = exact(x[q]);
                    vol += w;
                    for c in 0..5 {
                        let err = uq[q][c] - ex[c];
                        sum[c] += w * err * err;
                        linf[c] = linf[c].max(err.abs());
                    }
                }
            }
        }
    }
    ErrorNorms {
        l2: sum.map(|s| (s / vol).sqrt()),
        linf,
    }
}

/// Self-describing text dump of a solution.
pub fn write_state(d: &Discretization, u: &SolutionField) -> String {
    let mut s = String::new();
    writeln!(s, "# dgsem solution").unwrap();
    writeln!(s, "degree {}", u.degree()).unwrap();
    writeln!(s, "elements {}", u.n_elements()).unwrap();
    writeln!(s, "time {:.17e}", u.time).unwrap();
    writeln!(
        s,
        "ordering element-major; node i + (N+1)*(j + (N+1)*k), i fastest"
    )
    .unwrap();
    writeln!(s, "columns x y z rho rho_u rho_v rho_w rho_e").unwrap();
    for e in 0..u.n_elements() {
        writeln!(s, "element {e}").unwrap();
        for (x, v) in d.geometry[e].x.iter().zip(u.element(e)) {
            writeln!(
                s,
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                x[0], x[1], x[2], v[0], v[1], v[2], v[3], v[4]
            )
            .unwrap();
        }
    }
    s
}

/// Parses a state dump, returning the field and the node coordinates.
pub fn read_state(text: &str) -> Result<(SolutionField, Vec<Vec3>), RunError> {
    let mut degree = None;
    let mut elements = None;
    let mut time = 0.0;
    let mut values = Vec::new();
    let mut coords = Vec::new();
    let err = |line: usize, msg: &str| RunError::StateFormat {
        line,
        msg: msg.to_string(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let head = it.next().unwrap_or("");
        match head {
            "degree" => degree = it.next().and_then(|v| v.parse::<usize>().ok()),
            "elements" => elements = it.next().and_then(|v| v.parse::<usize>().ok()),
            "time" => {
                time = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err(i + 1, "bad time"))?
            }
            "ordering" | "columns" | "element" => {}
            _ => {
                let nums: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err(i + 1, "bad number"))?;
                if nums.len() != 8 {
                    return Err(err(i + 1, "expected 8 columns"));
                }
                coords.push([nums[0], nums[1], nums[2]]);
                values.push([nums[3], nums[4], nums[5], nums[6], nums[7]]);
            }
        }
    }
    let degree = degree.ok_or_else(|| err(0, "missing degree"))?;
    let elements = elements.ok_or_else(|| err(0, "missing element count"))?;
    if values.len() != elements * (degree + 1).pow(3) {
        return Err(err(0, "node count does not match header"));
    }
    let field =
        SolutionField::from_values(degree, values, time).map_err(|e| err(0, &e.to_string()))?;
    Ok((field, coords))
}

/// CSV table with one row per node: position, quadrature weight,
/// barycentric weight and the matching row of the derivative matrix.
pub fn basis_table(basis: &NodalBasis) -> String {
    let np = basis.len();
    let mut s = String::from("j,node,weight,barycentric");
    for m in 0..np {
        write!(s, ",d_{m}").unwrap();
    }
    s.push('\n');
    for j in 0..np {
        write!(
            s,
            "{j},{:.17e},{:.17e},{:.17e}",
            basis.nodes()[j],
            basis.weights()[j],
            basis.barycentric_weights()[j]
        )
        .unwrap();
        for m in 0..np {
            write!(s, ",{:.17e}", basis.d(j, m)).unwrap();
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::CaseKind;
    use crate::config::MeshKind;

    #[test]
    fn state_dump_round_trips() {
        let mut cfg = RunConfig::new(CaseKind::DensityWave, 2);
        cfg.mesh.elements = [2, 1, 1];
        let d = build_discretization(&cfg).unwrap();
        let case = cfg.case();
        let u = d.initial_field(0.25, |x, t| case.exact(x, t));
        let (back, coords) = read_state(&write_state(&d, &u)).unwrap();
        assert_eq!(back, u);
        assert_eq!(coords[5], d.geometry[0].x[5]);
    }

    #[test]
    fn exact_field_error_is_interpolation_error() {
        let mut cfg = RunConfig::new(CaseKind::DensityWave, 4);
        cfg.mesh.kind = MeshKind::Warped;
        let d = build_discretization(&cfg).unwrap();
        let case = cfg.case();
        let u = d.initial_field(0.0, |x, t| case.exact(x, t));
        let e = error_norms(&d, &u, |x| case.exact(x, 0.0));
        assert!(e.l2[0] > 0.0 && e.l2[0] < 0.05, "{:?}", e.l2);
        let flat = cfg.case().with_amplitude(0.0);
        let u = d.initial_field(0.0, |x, t| flat.exact(x, t));
        let e = error_norms(&d, &u, |x| flat.exact(x, 0.0));
        assert!(e.l2.iter().chain(&e.linf).all(|v| *v < 1e-14));
    }

    #[test]
    fn short_run_writes_monitor() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(CaseKind::DensityWave, 2);
        cfg.numerics.final_time = 0.01;
        cfg.output.monitor = Some(dir.path().join("m.csv"));
        cfg.output.final_state = Some(dir.path().join("out/final.txt"));
        let report = run_case(&cfg).unwrap();
        assert!(report.steps > 0);
        assert!((report.final_time - 0.01).abs() < 1e-15);
        let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
        assert!(csv.starts_with(MONITOR_HEADER));
        assert_eq!(csv.lines().count(), report.monitors.len() + 1);
        assert!(dir.path().join("out/final.txt").exists());
        let again = run_case(&cfg).unwrap();
        assert_eq!(again.monitor_csv(), report.monitor_csv());
    }
}
