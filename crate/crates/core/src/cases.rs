//! Analytic test cases: exact solutions and manufactured sources.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::physics::{Conservative, GasModel, Primitive};
use crate::solver::StateFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    /// Uniform moving state.
    Freestream,
    /// `rho = 1 + A sin(2 pi (x + y + z - 3t))`, `v = (1, 1, 1)`, `p = 1`.
    DensityWave,
    /// Density wave with viscosity and the energy source that keeps it exact.
    Manufactured,
}

impl CaseKind {
    pub const NAMES: [&'static str; 3] = ["freestream", "density_wave", "manufactured"];

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

impl FromStr for CaseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "freestream" => Ok(Self::Freestream),
            "density_wave" => Ok(Self::DensityWave),
            "manufactured" => Ok(Self::Manufactured),
            _ => Err(format!(
                "unknown case `{s}` (valid: {})",
                Self::NAMES.join(", ")
            )),
        }
    }
}

pub const FREESTREAM_VELOCITY: Vec3 = [0.5, -0.3, 0.2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case {
    pub kind: CaseKind,
    pub amplitude: f64,
    pub gas: GasModel,
}

impl Case {
    pub fn new(kind: CaseKind, gas: GasModel) -> Self {
        Self {
            kind,
            amplitude: 0.3,
            gas,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn viscous(&self) -> bool {
        self.kind == CaseKind::Manufactured
    }

    /// Density profile `rho(s)` and its first two derivatives, `s = x+y+z-3t`.
    fn density(&self, s: f64) -> (f64, f64, f64) {
        let k = 2.0 * PI;
        let a = self.amplitude;
        (
            1.0 + a * (k * s).sin(),
            a * k * (k * s).cos(),
            -a * k * k * (k * s).sin(),
        )
    }

    pub fn exact(&self, x: Vec3, t: f64) -> Conservative {
        let prim = match self.kind {
            CaseKind::Freestream => Primitive {
                rho: 1.0,
                v: FREESTREAM_VELOCITY,
                p: 1.0,
            },
            CaseKind::DensityWave | CaseKind::Manufactured => {
                let (rho, _, _) = self.density(x[0] + x[1] + x[2] - 3.0 * t);
                Primitive {
                    rho,
                    v: [1.0; 3],
                    p: 1.0,
                }
            }
        };
        prim.to_conservative(&self.gas)
    }

    /// Source that makes `exact` solve the Navier-Stokes equations. The wave
    /// solves the Euler equations, so only the heat-flux divergence remains:
    /// `S_5 = -(lambda / Re) lap T` with `T = gamma M^2 p / rho`.
    pub fn source(&self, x: Vec3, t: f64) -> Conservative {
        if self.kind != CaseKind::Manufactured {
            return [0.0; 5];
        }
        let gas = &self.gas;
        let (r, r1, r2) = self.density(x[0] + x[1] + x[2] - 3.0 * t);
        let c = gas.gamma * gas.mach * gas.mach;
        let t2 = c * (2.0 * r1 * r1 / (r * r * r) - r2 / (r * r));
        let lap = 3.0 * t2;
        [0.0, 0.0, 0.0, 0.0, -gas.conductivity() / gas.reynolds * lap]
    }

    pub fn exact_fn(&self) -> StateFn {
        let c = *self;
        Arc::new(move |x, t| c.exact(x, t))
    }

    pub fn source_fn(&self) -> Option<StateFn> {
        let c = *self;
        self.viscous()
            .then(|| Arc::new(move |x: Vec3, t: f64| c.source(x, t)) as StateFn)
    }
}
