//! Browser bindings: LGL interpolation, metric identity residuals on the
//! warped box, and entropy histories with and without interface dissipation.

use dgsem_core::cases::{Case, CaseKind};
use dgsem_core::fluxes::{Dissipation, VolumeFlux};
use dgsem_core::geometry::{metric_identity_residual, ElementGeometry, MetricForm};
use dgsem_core::mesh::warped_box_mesh;
use dgsem_core::physics::GasModel;
use dgsem_core::solver::{Discretization, SolverOptions};
use dgsem_core::spectral::NodalBasis;
use wasm_bindgen::prelude::*;

pub const FUNCTIONS: [&str; 3] = ["runge", "smooth", "step"];

fn sample_function(name: &str) -> Result<fn(f64) -> f64, String> {
    match name {
        "runge" => Ok(|x| 1.0 / (1.0 + 25.0 * x * x)),
        "smooth" => Ok(|x| (std::f64::consts::PI * x).sin().exp()),
        "step" => Ok(|x| if x < 0.2 { 0.0 } else { 1.0 }),
        _ => Err(format!(
            "unknown function `{name}` (valid: {})",
            FUNCTIONS.join(", ")
        )),
    }
}

/// LGL interpolant of a sample function evaluated on a uniform grid.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    nodes: Vec<f64>,
    values: Vec<f64>,
    x: Vec<f64>,
    exact: Vec<f64>,
    interpolant: Vec<f64>,
}

#[wasm_bindgen]
impl Interpolation {
    #[wasm_bindgen(getter)]
    pub fn nodes(&self) -> Vec<f64> {
        self.nodes.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn interpolant(&self) -> Vec<f64> {
        self.interpolant.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn max_error(&self) -> f64 {
        self.exact
            .iter()
            .zip(&self.interpolant)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub fn interpolation(
    degree: usize,
    function: &str,
    samples: usize,
) -> Result<Interpolation, String> {
    let f = sample_function(function)?;
    let basis = NodalBasis::new(degree).map_err(|e| e.to_string())?;
    let samples = samples.max(2);
    let x: Vec<f64> = (0..samples)
        .map(|i| -1.0 + 2.0 * i as f64 / (samples - 1) as f64)
        .collect();
    let values: Vec<f64> = basis.nodes().iter().map(|&n| f(n)).collect();
    let interpolant = x.iter().map(|&t| basis.interpolate(&values, t)).collect();
    Ok(Interpolation {
        nodes: basis.nodes().to_vec(),
        exact: x.iter().map(|&t| f(t)).collect(),
        values,
        x,
        interpolant,
    })
}

/// Largest metric identity residual on the warped periodic box for the
/// curl and cross-product forms, in that order.
pub fn metric_residuals(
    amplitude: f64,
    degree: usize,
    elements: usize,
) -> Result<[f64; 2], String> {
    if !(0.0..=0.2).contains(&amplitude) {
        return Err(format!("amplitude {amplitude} outside [0, 0.2]"));
    }
    if !(1..=6).contains(&elements) {
        return Err(format!("elements {elements} outside 1..=6"));
    }
    let basis = NodalBasis::new(degree).map_err(|e| e.to_string())?;
    let mesh = warped_box_mesh([elements; 3], amplitude);
    let mut out = [0.0f64; 2];
    for shape in &mesh.shapes {
        let x = shape.sample(&basis);
        for (k, form) in [MetricForm::Curl, MetricForm::CrossProduct]
            .into_iter()
            .enumerate()
        {
            let g = ElementGeometry::new(&basis, x.clone(), form).map_err(|e| e.to_string())?;
            out[k] = out[k].max(metric_identity_residual(&basis, &g.ja));
        }
    }
    Ok(out)
}

/// Total entropy along a density-wave run on the warped box.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyHistory {
    time: Vec<f64>,
    entropy_change: Vec<f64>,
    rate: Vec<f64>,
}

#[wasm_bindgen]
impl EntropyHistory {
    #[wasm_bindgen(getter)]
    pub fn time(&self) -> Vec<f64> {
        self.time.clone()
    }

    /// `S(t) - S(0)`.
    #[wasm_bindgen(getter)]
    pub fn entropy_change(&self) -> Vec<f64> {
        self.entropy_change.clone()
    }

    /// Semi-discrete `dS/dt` at each sample.
    #[wasm_bindgen(getter)]
    pub fn rate(&self) -> Vec<f64> {
        self.rate.clone()
    }
}

pub fn entropy_history(
    dissipation: &str,
    amplitude: f64,
    steps: usize,
) -> Result<EntropyHistory, String> {
    let dissipation: Dissipation = dissipation.parse()?;
    if !(0.0..0.95).contains(&amplitude) {
        return Err(format!("wave amplitude {amplitude} outside [0, 0.95)"));
    }
    let gas = GasModel::default();
    let options = SolverOptions {
        volume_flux: VolumeFlux::Ec,
        dissipation,
        ..SolverOptions::default()
    };
    let mesh = warped_box_mesh([2; 3], 0.05);
    let d =
        Discretization::new(&mesh, 3, gas, options, MetricForm::Curl).map_err(|e| e.to_string())?;
    let case = Case::new(CaseKind::DensityWave, gas).with_amplitude(amplitude);
    let mut u = d.initial_field(0.0, |x, t| case.exact(x, t));
    let dt = d.timestep_estimate(&u, 0.5).map_err(|e| e.to_string())?;
    let s0 = d.total_entropy(&u).map_err(|e| e.to_string())?;
    let mut h = EntropyHistory {
        time: Vec::with_capacity(steps + 1),
        entropy_change: Vec::with_capacity(steps + 1),
        rate: Vec::with_capacity(steps + 1),
    };
    for step in 0..=steps {
        if step > 0 {
            u = d.rk_step(&u, dt).map_err(|e| e.to_string())?;
        }
        let r = d.residual(&u).map_err(|e| e.to_string())?;
        h.time.push(u.time);
        h.entropy_change
            .push(d.total_entropy(&u).map_err(|e| e.to_string())? - s0);
        h.rate
            .push(d.entropy_rate(&u, &r).map_err(|e| e.to_string())?);
    }
    Ok(h)
}

#[wasm_bindgen(js_name = interpolate)]
pub fn interpolate_js(
    degree: usize,
    function: &str,
    samples: usize,
) -> Result<Interpolation, JsError> {
    interpolation(degree, function, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = metricResiduals)]
pub fn metric_residuals_js(
    amplitude: f64,
    degree: usize,
    elements: usize,
) -> Result<Vec<f64>, JsError> {
    metric_residuals(amplitude, degree, elements)
        .map(|r| r.to_vec())
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = entropyHistory)]
pub fn entropy_history_js(
    dissipation: &str,
    amplitude: f64,
    steps: usize,
) -> Result<EntropyHistory, JsError> {
    entropy_history(dissipation, amplitude, steps).map_err(|e| JsError::new(&e))
}
