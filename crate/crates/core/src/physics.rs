//! Compressible Euler/Navier-Stokes state algebra in nondimensional form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Conservative state `(rho, rho v1, rho v2, rho v3, rho E)`.
pub type Conservative = [f64; 5];

/// One 5-vector per Cartesian direction.
pub type FluxTriple = [[f64; 5]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("non-physical state: density {rho:e}, pressure {p:e}")]
    Positivity { rho: f64, p: f64 },
    #[error("entropy variable w5 = {0:e} must be negative")]
    EntropyVariable(f64),
    #[error("invalid gas model: {0}")]
    InvalidGas(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasModel {
    pub gamma: f64,
    pub mach: f64,
    pub prandtl: f64,
    pub reynolds: f64,
    pub mu: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            mach: 0.3,
            prandtl: 0.72,
            reynolds: 100.0,
            mu: 1.0,
        }
    }
}

impl GasModel {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(self.gamma > 1.0) {
            return Err(PhysicsError::InvalidGas(format!(
                "gamma = {} must exceed 1",
                self.gamma
            )));
        }
        for (name, v) in [
            ("mach", self.mach),
            ("prandtl", self.prandtl),
            ("reynolds", self.reynolds),
            ("mu", self.mu),
        ] {
            if !(v > 0.0) {
                return Err(PhysicsError::InvalidGas(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Thermal conductivity `mu / ((gamma - 1) Pr M^2)`.
    pub fn conductivity(&self) -> f64 {
        self.mu / ((self.gamma - 1.0) * self.prandtl * self.mach * self.mach)
    }

    /// Temperature `gamma M^2 p / rho`.
    pub fn temperature(&self, rho: f64, p: f64) -> f64 {
        self.gamma * self.mach * self.mach * p / rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub v: [f64; 3],
    pub p: f64,
}

impl Primitive {
    pub fn new(rho: f64, v: [f64; 3], p: f64) -> Result<Self, PhysicsError> {
        if !(rho > 0.0 && p > 0.0) {
            return Err(PhysicsError::Positivity { rho, p });
        }
        Ok(Self { rho, v, p })
    }

    pub fn to_conservative(&self, gas: &GasModel) -> Conservative {
        let ke = 0.5 * self.rho * dot(&self.v, &self.v);
        [
            self.rho,
            self.rho * self.v[0],
            self.rho * self.v[1],
            self.rho * self.v[2],
            self.p / (gas.gamma - 1.0) + ke,
        ]
    }

    pub fn sound_speed(&self, gas: &GasModel) -> f64 {
        (gas.gamma * self.p / self.rho).sqrt()
    }
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `p = (gamma - 1)(rho E - rho |v|^2 / 2)`; fails unless `rho > 0` and `p > 0`.
pub fn primitive_from_conservative(
    u: &Conservative,
    gas: &GasModel,
) -> Result<Primitive, PhysicsError> {
    let rho = u[0];
    if !(rho > 0.0) {
        return Err(PhysicsError::Positivity { rho, p: f64::NAN });
    }
    let v = [u[1] / rho, u[2] / rho, u[3] / rho];
    let p = (gas.gamma - 1.0) * (u[4] - 0.5 * rho * dot(&v, &v));
    Primitive::new(rho, v, p)
}

pub fn advective_flux(u: &Conservative, gas: &GasModel) -> Result<FluxTriple, PhysicsError> {
    let prim = primitive_from_conservative(u, gas)?;
    Ok(advective_flux_prim(u, &prim))
}

/// Flux triple from a state whose primitive form is already known.
#[inline]
pub fn advective_flux_prim(u: &Conservative, prim: &Primitive) -> FluxTriple {
    let p = prim.p;
    // rho v_d H = v_d (rho E + p)
    let e_p = u[4] + p;
    std::array::from_fn(|d| {
        let vd = prim.v[d];
        let mut f = [u[0] * vd, u[1] * vd, u[2] * vd, u[3] * vd, e_p * vd];
        f[1 + d] += p;
        f
    })
}

/// Mathematical entropy `s = -rho (ln p - gamma ln rho) / (gamma - 1)`.
pub fn entropy(u: &Conservative, gas: &GasModel) -> Result<f64, PhysicsError> {
    let prim = primitive_from_conservative(u, gas)?;
    Ok(entropy_prim(&prim, gas))
}

#[inline]
pub fn entropy_prim(prim: &Primitive, gas: &GasModel) -> f64 {
    let phys = prim.p.ln() - gas.gamma * prim.rho.ln();
    -prim.rho * phys / (gas.gamma - 1.0)
}

/// Entropy flux `s v`.
pub fn entropy_flux(u: &Conservative, gas: &GasModel) -> Result<[f64; 3], PhysicsError> {
    let prim = primitive_from_conservative(u, gas)?;
    let s = entropy_prim(&prim, gas);
    Ok(prim.v.map(|vi| s * vi))
}

/// Entropy variables `w = ds/du`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyVars(pub [f64; 5]);

pub fn entropy_variables(u: &Conservative, gas: &GasModel) -> Result<EntropyVars, PhysicsError> {
    let prim = primitive_from_conservative(u, gas)?;
    Ok(entropy_variables_prim(&prim, gas))
}

#[inline]
pub fn entropy_variables_prim(prim: &Primitive, gas: &GasModel) -> EntropyVars {
    let g = gas.gamma;
    let phys = prim.p.ln() - g * prim.rho.ln();
    // beta = rho / (2 p), proportional to inverse temperature
    let beta = 0.5 * prim.rho / prim.p;
    let v2 = dot(&prim.v, &prim.v);
    EntropyVars([
        (g - phys) / (g - 1.0) - beta * v2,
        2.0 * beta * prim.v[0],
        2.0 * beta * prim.v[1],
        2.0 * beta * prim.v[2],
        -2.0 * beta,
    ])
}

pub fn conservative_from_entropy(
    w: &EntropyVars,
    gas: &GasModel,
) -> Result<Conservative, PhysicsError> {
    let w = &w.0;
    if !(w[4] < 0.0) {
        return Err(PhysicsError::EntropyVariable(w[4]));
    }
    let g = gas.gamma;
    let beta = -0.5 * w[4];
    let v = [
        w[1] / (2.0 * beta),
        w[2] / (2.0 * beta),
        w[3] / (2.0 * beta),
    ];
    let phys = g - (g - 1.0) * (w[0] + beta * dot(&v, &v));
    // phys = ln p - gamma ln rho and p = rho / (2 beta)
    // => (1 - gamma) ln rho = phys + ln(2 beta)
    let rho = ((phys + (2.0 * beta).ln()) / (1.0 - g)).exp();
    let p = rho / (2.0 * beta);
    Ok(Primitive::new(rho, v, p)?.to_conservative(gas))
}

/// Velocity gradient `grad_v[d][i] = d v_i / d x_d` and temperature gradient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimitiveGradients {
    pub velocity: [[f64; 3]; 3],
    pub temperature: [f64; 3],
}

/// Converts Cartesian gradients of the entropy variables into velocity and
/// temperature gradients at one node. Uses `v = -w_{2..4} / w_5` and
/// `T = -gamma M^2 / w_5`.
pub fn primitive_gradients_from_entropy(
    w: &EntropyVars,
    grad_w: &[[f64; 5]; 3],
    gas: &GasModel,
) -> PrimitiveGradients {
    let w = &w.0;
    let inv_w5 = 1.0 / w[4];
    let v = [-w[1] * inv_w5, -w[2] * inv_w5, -w[3] * inv_w5];
    let tscale = gas.gamma * gas.mach * gas.mach * inv_w5 * inv_w5;
    let mut out = PrimitiveGradients::default();
    for d in 0..3 {
        let g = &grad_w[d];
        for i in 0..3 {
            out.velocity[d][i] = -(g[1 + i] + v[i] * g[4]) * inv_w5;
        }
        out.temperature[d] = tscale * g[4];
    }
    out
}

/// Same conversion from Cartesian gradients of the conservative variables.
pub fn primitive_gradients_from_conservative(
    prim: &Primitive,
    grad_u: &[[f64; 5]; 3],
    gas: &GasModel,
) -> PrimitiveGradients {
    let rho = prim.rho;
    let v = prim.v;
    let g1 = gas.gamma - 1.0;
    let p_over_rho = prim.p / rho;
    let mut out = PrimitiveGradients::default();
    for d in 0..3 {
        let g = &grad_u[d];
        for i in 0..3 {
            out.velocity[d][i] = (g[1 + i] - v[i] * g[0]) / rho;
        }
        // p = (gamma - 1)(rho E - |rho v|^2 / (2 rho))
        let dp = g1 * (g[4] - (v[0] * g[1] + v[1] * g[2] + v[2] * g[3]) + 0.5 * dot(&v, &v) * g[0]);
        let d_p_over_rho = (dp - p_over_rho * g[0]) / rho;
        out.temperature[d] = gas.gamma * gas.mach * gas.mach * d_p_over_rho;
    }
    out
}

/// Viscous flux triple without the `1/Re` factor.
pub fn viscous_flux(v: &[f64; 3], grads: &PrimitiveGradients, gas: &GasModel) -> FluxTriple {
    let mu = gas.mu;
    let lambda = gas.conductivity();
    let gv = &grads.velocity;
    let div = gv[0][0] + gv[1][1] + gv[2][2];
    let mut tau = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            tau[i][j] = mu * (gv[i][j] + gv[j][i]);
        }
        tau[i][i] -= 2.0 / 3.0 * mu * div;
    }
    std::array::from_fn(|i| {
        [
            0.0,
            tau[i][0],
            tau[i][1],
            tau[i][2],
            dot(v, &tau[i]) + lambda * grads.temperature[i],
        ]
    })
}

/// `max(|v_L . n| + c_L, |v_R . n| + c_R)` for a unit normal `n`.
pub fn max_wave_speed(
    ul: &Conservative,
    ur: &Conservative,
    n: &[f64; 3],
    gas: &GasModel,
) -> Result<f64, PhysicsError> {
    let l = primitive_from_conservative(ul, gas)?;
    let r = primitive_from_conservative(ur, gas)?;
    Ok(wave_speed_prim(&l, n, gas).max(wave_speed_prim(&r, n, gas)))
}

#[inline]
pub fn wave_speed_prim(prim: &Primitive, n: &[f64; 3], gas: &GasModel) -> f64 {
    dot(&prim.v, n).abs() + prim.sound_speed(gas)
}
