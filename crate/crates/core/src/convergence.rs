//! h- and p-refinement studies against exact solutions.

use std::fmt::Write as _;

use crate::config::RunConfig;
use crate::run::{build_discretization, integrate, ErrorNorms, RunError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refinement {
    /// Elements per direction.
    Elements(Vec<usize>),
    /// Polynomial degrees.
    Degrees(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub elements: usize,
    pub degree: usize,
    pub steps: usize,
    pub errors: ErrorNorms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Observed L2 orders between consecutive rows (h-refinement only).
    pub orders: Vec<[f64; 5]>,
}

impl ConvergenceReport {
    pub fn last_order(&self, component: usize) -> Option<f64> {
        self.orders.last().map(|o| o[component])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("elements,degree,steps");
        for n in ["rho", "rho_u", "rho_v", "rho_w", "rho_e"] {
            write!(s, ",l2_{n}").unwrap();
        }
        for n in ["rho", "rho_u", "rho_v", "rho_w", "rho_e"] {
            write!(s, ",linf_{n}").unwrap();
        }
        s.push_str(",order_l2_rho\n");
        for (i, r) in self.rows.iter().enumerate() {
            write!(s, "{},{},{}", r.elements, r.degree, r.steps).unwrap();
            for v in r.errors.l2.iter().chain(&r.errors.linf) {
                write!(s, ",{v:.6e}").unwrap();
            }
            match i.checked_sub(1).and_then(|k| self.orders.get(k)) {
                Some(o) => writeln!(s, ",{:.4}", o[0]).unwrap(),
                None => s.push_str(",\n"),
            }
        }
        s
    }
}

/// Runs `base` at every resolution and compares with the exact solution at
/// the final time.
pub fn convergence_study(
    base: &RunConfig,
    refinement: &Refinement,
) -> Result<ConvergenceReport, RunError> {
    let configs: Vec<RunConfig> = match refinement {
        Refinement::Elements(levels) => {
            let mut levels = levels.clone();
            levels.sort_unstable();
            levels
                .into_iter()
                .map(|n| {
                    let mut c = base.clone();
                    c.mesh.elements = [n; 3];
                    c
                })
                .collect()
        }
        Refinement::Degrees(degrees) => {
            let mut degrees = degrees.clone();
            degrees.sort_unstable();
            degrees
                .into_iter()
                .map(|n| {
                    let mut c = base.clone();
                    c.degree = n;
                    c
                })
                .collect()
        }
    };
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in &configs {
        cfg.validate()?;
        let d = build_discretization(cfg)?;
        let report = integrate(&d, cfg, &cfg.case())?;
        rows.push(ConvergenceRow {
            elements: cfg.mesh.elements[0],
            degree: cfg.degree,
            steps: report.steps,
            errors: report.errors,
        });
    }
    let orders = match refinement {
        Refinement::Elements(_) => rows
            .windows(2)
            .map(|w| {
                let ratio = w[1].elements as f64 / w[0].elements as f64;
                std::array::from_fn(|c| (w[0].errors.l2[c] / w[1].errors.l2[c]).ln() / ratio.ln())
            })
            .collect(),
        Refinement::Degrees(_) => Vec::new(),
    };
    Ok(ConvergenceReport { rows, orders })
}
