//! TOML run configuration.
//!
//! ```toml
//! case = "density_wave"
//! degree = 3
//!
//! [mesh]
//! kind = "warped"          # box | warped | file
//! elements = [4, 4, 4]
//! amplitude = 0.05
//!
//! [numerics]
//! volume_flux = "ec"       # central | ec
//! surface_dissipation = "llf"
//! cfl = 0.5
//! final_time = 0.1
//!
//! [output]
//! monitor = "monitor.csv"
//! final_state = "final.txt"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cases::{Case, CaseKind};
use crate::fluxes::{Dissipation, VolumeFlux};
use crate::geometry::{MetricForm, Vec3};
use crate::mesh::{box_mesh, read_mesh, warped_box_mesh, Mesh, MeshError};
use crate::physics::GasModel;
use crate::solver::{GradientVariables, SolverOptions};
use crate::spectral::MAX_DEGREE;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: &'static str, msg: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    #[default]
    Box,
    Warped,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub kind: MeshKind,
    pub elements: [usize; 3],
    pub amplitude: f64,
    pub lower: Vec3,
    pub upper: Vec3,
    pub periodic: [bool; 3],
    pub path: Option<PathBuf>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            kind: MeshKind::Box,
            elements: [2, 2, 2],
            amplitude: 0.05,
            lower: [0.0; 3],
            upper: [1.0; 3],
            periodic: [true; 3],
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub volume_flux: VolumeFlux,
    pub surface_dissipation: Dissipation,
    /// Defaults to on for cases that need viscosity.
    pub viscous: Option<bool>,
    pub gradient_variables: GradientVariables,
    pub metrics: MetricForm,
    pub cfl: f64,
    /// Fixed step; overrides `cfl` when set.
    pub dt: Option<f64>,
    pub final_time: f64,
    pub monitor_every: usize,
    /// Adds the manufactured source for cases that define one.
    pub source: bool,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            volume_flux: VolumeFlux::Ec,
            surface_dissipation: Dissipation::Llf,
            viscous: None,
            gradient_variables: GradientVariables::Entropy,
            metrics: MetricForm::Curl,
            cfl: 0.5,
            dt: None,
            final_time: 0.1,
            monitor_every: 1,
            source: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub monitor: Option<PathBuf>,
    pub final_state: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            monitor: Some("monitor.csv".into()),
            final_state: Some("final_state.txt".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: CaseKind,
    pub degree: usize,
    #[serde(default = "default_amplitude")]
    pub wave_amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub gas: GasModel,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_amplitude() -> f64 {
    0.3
}

impl RunConfig {
    pub fn new(case: CaseKind, degree: usize) -> Self {
        Self {
            case,
            degree,
            wave_amplitude: default_amplitude(),
            seed: 0,
            mesh: MeshConfig::default(),
            gas: GasModel::default(),
            numerics: NumericsConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        resolve(&mut cfg.mesh.path);
        resolve(&mut cfg.output.monitor);
        resolve(&mut cfg.output.final_state);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.degree < 1 || self.degree > MAX_DEGREE {
            return Err(invalid(
                "degree",
                format!("{} not in 1..={MAX_DEGREE}", self.degree),
            ));
        }
        self.gas
            .validate()
            .map_err(|e| invalid("gas", e.to_string()))?;
        let n = &self.numerics;
        if !(n.cfl > 0.0 && n.cfl.is_finite()) {
            return Err(invalid(
                "numerics.cfl",
                format!("{} must be positive", n.cfl),
            ));
        }
        if let Some(dt) = n.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("numerics.dt", format!("{dt} must be positive")));
            }
        }
        if !(n.final_time >= 0.0 && n.final_time.is_finite()) {
            return Err(invalid(
                "numerics.final_time",
                format!("{} must be non-negative", n.final_time),
            ));
        }
        if n.monitor_every == 0 {
            return Err(invalid("numerics.monitor_every", "must be at least 1"));
        }
        let m = &self.mesh;
        match m.kind {
            MeshKind::File => match &m.path {
                None => return Err(invalid("mesh.path", "required when mesh.kind = \"file\"")),
                Some(p) if !p.exists() => {
                    return Err(invalid(
                        "mesh.path",
                        format!("{} does not exist", p.display()),
                    ))
                }
                Some(_) => {}
            },
            MeshKind::Box | MeshKind::Warped => {
                if m.elements.contains(&0) {
                    return Err(invalid("mesh.elements", "element counts must be positive"));
                }
                if (0..3).any(|d| !(m.upper[d] > m.lower[d])) {
                    return Err(invalid(
                        "mesh.upper",
                        "must exceed mesh.lower in every direction",
                    ));
                }
            }
        }
        if m.kind == MeshKind::Warped && !(m.amplitude.abs() < 1.0 / std::f64::consts::PI) {
            return Err(invalid(
                "mesh.amplitude",
                format!("{} folds the mesh", m.amplitude),
            ));
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh, ConfigError> {
        let m = &self.mesh;
        Ok(match m.kind {
            MeshKind::Box => box_mesh(m.elements, m.lower, m.upper, m.periodic)?,
            MeshKind::Warped => warped_box_mesh(m.elements, m.amplitude),
            MeshKind::File => read_mesh(m.path.as_deref().expect("validated"))?,
        })
    }

    pub fn case(&self) -> Case {
        Case::new(self.case, self.gas).with_amplitude(self.wave_amplitude)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let n = &self.numerics;
        SolverOptions {
            volume_flux: n.volume_flux,
            dissipation: n.surface_dissipation,
            viscous: n.viscous.unwrap_or_else(|| self.case().viscous()),
            gradient_variables: n.gradient_variables,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse("case = \"density_wave\"\ndegree = 3\n").unwrap();
        assert_eq!(cfg.numerics.volume_flux, VolumeFlux::Ec);
        assert_eq!(cfg.mesh.kind, MeshKind::Box);
        assert!(!cfg.solver_options().viscous);
        let m = RunConfig::parse("case = \"manufactured\"\ndegree = 2\n").unwrap();
        assert!(m.solver_options().viscous);
    }

    #[test]
    fn bad_flux_name_lists_options() {
        let err = RunConfig::parse(
            "case = \"freestream\"\ndegree = 3\n[numerics]\nvolume_flux = \"roe\"\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("central") && msg.contains("ec"), "{msg}");
    }

    #[test]
    fn invalid_values_name_the_key() {
        for (text, key) in [
            ("case = \"freestream\"\ndegree = 0\n", "degree"),
            ("case = \"freestream\"\ndegree = 2\n[numerics]\ncfl = -1.0\n", "numerics.cfl"),
            ("case = \"freestream\"\ndegree = 2\n[mesh]\nkind = \"file\"\n", "mesh.path"),
            ("case = \"freestream\"\ndegree = 2\n[mesh]\nkind = \"file\"\npath = \"/nonexistent/m.txt\"\n", "mesh.path"),
        ] {
            match RunConfig::parse(text) {
                Err(ConfigError::Invalid { key: k, .. }) => assert_eq!(k, key),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::new(CaseKind::Freestream, 4);
        cfg.mesh.kind = MeshKind::Warped;
        cfg.numerics.dt = Some(1e-3);
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
