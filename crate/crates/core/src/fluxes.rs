//! Two-point volume fluxes and interface numerical fluxes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::{
    advective_flux_prim, entropy_variables_prim, primitive_from_conservative, wave_speed_prim,
    Conservative, EntropyVars, FluxTriple, GasModel, PhysicsError, Primitive,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("logarithmic mean requires positive arguments, got ({0:e}, {1:e})")]
    LogMeanDomain(f64, f64),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// Below this value of `u = ((a - b)/(a + b))^2` the logarithmic mean switches
/// to its truncated series.
pub const LOG_MEAN_SERIES_THRESHOLD: f64 = 1e-4;

/// Logarithmic mean `(a - b) / (ln a - ln b)`, stable for `a ~ b`.
pub fn log_mean(a: f64, b: f64) -> Result<f64, FluxError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(FluxError::LogMeanDomain(a, b));
    }
    Ok(log_mean_unchecked(a, b))
}

#[inline]
pub(crate) fn log_mean_unchecked(a: f64, b: f64) -> f64 {
    let zeta = a / b;
    let f = (zeta - 1.0) / (zeta + 1.0);
    let u = f * f;
    let series = if u < LOG_MEAN_SERIES_THRESHOLD {
        1.0 + u * (1.0 / 3.0 + u * (1.0 / 5.0 + u / 7.0))
    } else {
        zeta.ln() / (2.0 * f)
    };
    (a + b) / (2.0 * series)
}

/// A state with its primitive variables cached, validated positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub u: Conservative,
    pub prim: Primitive,
    /// `rho / (2 p)`
    pub beta: f64,
}

impl NodeState {
    pub fn new(u: Conservative, gas: &GasModel) -> Result<Self, PhysicsError> {
        let prim = primitive_from_conservative(&u, gas)?;
        Ok(Self {
            u,
            prim,
            beta: 0.5 * prim.rho / prim.p,
        })
    }

    pub fn flux(&self) -> FluxTriple {
        advective_flux_prim(&self.u, &self.prim)
    }

    /// Physical flux contracted with a (not necessarily unit) vector.
    #[inline]
    pub fn normal_flux(&self, n: &[f64; 3]) -> [f64; 5] {
        let vn = dot(&self.prim.v, n);
        let p = self.prim.p;
        let u = &self.u;
        [
            u[0] * vn,
            u[1] * vn + p * n[0],
            u[2] * vn + p * n[1],
            u[3] * vn + p * n[2],
            (u[4] + p) * vn,
        ]
    }

    pub fn entropy_vars(&self, gas: &GasModel) -> EntropyVars {
        entropy_variables_prim(&self.prim, gas)
    }
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Symmetric, consistent two-point flux used inside flux differencing.
pub trait TwoPointFlux: Sync {
    fn name(&self) -> &'static str;

    /// `F#(a, b) . n` for an arbitrary (e.g. metric-weighted) vector `n`.
    fn contracted(&self, a: &NodeState, b: &NodeState, n: &[f64; 3], gas: &GasModel) -> [f64; 5];

    /// The three Cartesian components of `F#(a, b)`.
    fn cartesian(&self, a: &NodeState, b: &NodeState, gas: &GasModel) -> FluxTriple {
        std::array::from_fn(|d| {
            let mut e = [0.0; 3];
            e[d] = 1.0;
            self.contracted(a, b, &e, gas)
        })
    }
}

/// Arithmetic mean of the physical fluxes. Recovers the standard DGSEM
/// divergence.
#[derive(Debug, Clone, Copy, Default)]
pub struct CentralFlux;

impl TwoPointFlux for CentralFlux {
    fn name(&self) -> &'static str {
        "central"
    }

    #[inline]
    fn contracted(&self, a: &NodeState, b: &NodeState, n: &[f64; 3], _gas: &GasModel) -> [f64; 5] {
        let fa = a.normal_flux(n);
        let fb = b.normal_flux(n);
        std::array::from_fn(|c| 0.5 * (fa[c] + fb[c]))
    }
}

/// Chandrashekar's entropy-conservative, kinetic-energy-preserving flux.
///
/// The printed x-direction formula is applied with the transported velocity
/// replaced by the velocity along the contraction direction.
#[derive(Debug, Clone, Copy, Default)]
pub struct EcFlux;

impl TwoPointFlux for EcFlux {
    fn name(&self) -> &'static str {
        "ec"
    }

    #[inline]
    fn contracted(&self, a: &NodeState, b: &NodeState, n: &[f64; 3], gas: &GasModel) -> [f64; 5] {
        let (pa, pb) = (&a.prim, &b.prim);
        let rho_ln = log_mean_unchecked(pa.rho, pb.rho);
        let beta_ln = log_mean_unchecked(a.beta, b.beta);
        let rho_avg = 0.5 * (pa.rho + pb.rho);
        let beta_avg = 0.5 * (a.beta + b.beta);
        let v_avg = [
            0.5 * (pa.v[0] + pb.v[0]),
            0.5 * (pa.v[1] + pb.v[1]),
            0.5 * (pa.v[2] + pb.v[2]),
        ];
        let v2_avg = 0.5 * (dot(&pa.v, &pa.v) + dot(&pb.v, &pb.v));
        let p_hat = rho_avg / (2.0 * beta_avg);
        let h_hat =
            1.0 / (2.0 * beta_ln * (gas.gamma - 1.0)) + p_hat / rho_ln + dot(&v_avg, &v_avg)
                - 0.5 * v2_avg;
        let mass = rho_ln * dot(&v_avg, n);
        [
            mass,
            mass * v_avg[0] + p_hat * n[0],
            mass * v_avg[1] + p_hat * n[1],
            mass * v_avg[2] + p_hat * n[2],
            mass * h_hat,
        ]
    }
}

/// Volume flux selection, as named in run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VolumeFlux {
    Central,
    #[default]
    Ec,
}

impl VolumeFlux {
    pub const NAMES: [&'static str; 2] = ["central", "ec"];

    pub fn get(self) -> &'static dyn TwoPointFlux {
        match self {
            VolumeFlux::Central => &CentralFlux,
            VolumeFlux::Ec => &EcFlux,
        }
    }
}

impl std::str::FromStr for VolumeFlux {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "central" => Ok(Self::Central),
            "ec" => Ok(Self::Ec),
            other => Err(format!(
                "unknown volume flux `{other}`; valid options: {}",
                Self::NAMES.join(", ")
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Dissipation {
    None,
    #[default]
    Llf,
}

impl Dissipation {
    pub const NAMES: [&'static str; 2] = ["none", "llf"];
}

impl std::str::FromStr for Dissipation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "llf" => Ok(Self::Llf),
            other => Err(format!(
                "unknown surface dissipation `{other}`; valid options: {}",
                Self::NAMES.join(", ")
            )),
        }
    }
}

/// Arithmetic mean of the physical fluxes of two conservative states.
pub fn central_flux(
    ul: &Conservative,
    ur: &Conservative,
    gas: &GasModel,
) -> Result<FluxTriple, FluxError> {
    let a = NodeState::new(*ul, gas)?;
    let b = NodeState::new(*ur, gas)?;
    Ok(CentralFlux.cartesian(&a, &b, gas))
}

/// Entropy-conservative flux in all three Cartesian directions.
pub fn ec_flux(
    ul: &Conservative,
    ur: &Conservative,
    gas: &GasModel,
) -> Result<FluxTriple, FluxError> {
    let a = NodeState::new(*ul, gas)?;
    let b = NodeState::new(*ur, gas)?;
    Ok(EcFlux.cartesian(&a, &b, gas))
}

/// `<rho><v1><v2>`: the two-point x-momentum term whose flux differencing
/// reproduces the cubic (Kennedy-Gruber) split form.
pub fn kg_momentum_term(ul: &Conservative, ur: &Conservative) -> f64 {
    let rho = 0.5 * (ul[0] + ur[0]);
    let v1 = 0.5 * (ul[1] / ul[0] + ur[1] / ur[0]);
    let v2 = 0.5 * (ul[2] / ul[0] + ur[2] / ur[0]);
    rho * v1 * v2
}

/// `F#(u_L, u_R) . n - (lambda_max / 2) [[W]]` with `[[W]] = W_R - W_L` and a
/// unit normal `n` pointing from L to R.
pub fn surface_flux_advective(
    ul: &NodeState,
    ur: &NodeState,
    n: &[f64; 3],
    gas: &GasModel,
    volume: &dyn TwoPointFlux,
    dissipation: Dissipation,
) -> [f64; 5] {
    let mut f = volume.contracted(ul, ur, n, gas);
    if dissipation == Dissipation::Llf {
        let lambda = wave_speed_prim(&ul.prim, n, gas).max(wave_speed_prim(&ur.prim, n, gas));
        let wl = ul.entropy_vars(gas).0;
        let wr = ur.entropy_vars(gas).0;
        for c in 0..5 {
            f[c] -= 0.5 * lambda * (wr[c] - wl[c]);
        }
    }
    f
}

/// BR1 interface values: arithmetic means of the normal viscous fluxes and of
/// the entropy variables.
pub fn br1_viscous_interface(
    fv_l: &[f64; 5],
    fv_r: &[f64; 5],
    w_l: &[f64; 5],
    w_r: &[f64; 5],
) -> ([f64; 5], [f64; 5]) {
    (
        std::array::from_fn(|c| 0.5 * (fv_l[c] + fv_r[c])),
        std::array::from_fn(|c| 0.5 * (w_l[c] + w_r[c])),
    )
}
