//! Semi-discrete split-form DGSEM residual, BR1 gradient lifting, low-storage
//! Runge-Kutta time stepping and conservation/entropy monitors.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluxes::{surface_flux_advective, Dissipation, NodeState, TwoPointFlux, VolumeFlux};
use crate::geometry::{norm3, ElementGeometry, FaceId, MetricForm, Vec3};
use crate::mesh::{FaceConnection, Mesh, MeshError, MeshTopology, Orientation};
use crate::physics::{
    entropy_prim, entropy_variables_prim, primitive_gradients_from_conservative,
    primitive_gradients_from_entropy, viscous_flux, Conservative, EntropyVars, FluxTriple,
    GasModel, PhysicsError,
};
use crate::spectral::NodalBasis;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("element {element}, node {node}: {source}")]
    Positivity {
        element: usize,
        node: usize,
        #[source]
        source: PhysicsError,
    },
    #[error("RK stage {stage} at t = {time}: {source}")]
    Stage {
        time: f64,
        stage: usize,
        #[source]
        source: Box<SolverError>,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("boundary state at {x:?}: {source}")]
    BoundaryState {
        x: Vec3,
        #[source]
        source: PhysicsError,
    },
    #[error("mesh has Dirichlet faces but no boundary state was registered")]
    MissingBoundary,
    #[error("field layout mismatch: expected {expected} nodes, got {got}")]
    Layout { expected: usize, got: usize },
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimestep(f64),
}

impl SolverError {
    /// True when the failure is a loss of positivity, possibly inside an RK stage.
    pub fn is_positivity(&self) -> bool {
        match self {
            SolverError::Positivity { .. } | SolverError::BoundaryState { .. } => true,
            SolverError::Stage { source, .. } => source.is_positivity(),
            _ => false,
        }
    }
}

/// Conservative state at every node, element by element, plus the time.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    degree: usize,
    values: Vec<Conservative>,
    pub time: f64,
}

impl SolutionField {
    pub fn new(degree: usize, n_elements: usize, value: Conservative) -> Self {
        let n = (degree + 1).pow(3);
        Self {
            degree,
            values: vec![value; n * n_elements],
            time: 0.0,
        }
    }

    pub fn from_values(
        degree: usize,
        values: Vec<Conservative>,
        time: f64,
    ) -> Result<Self, SolverError> {
        let n = (degree + 1).pow(3);
        if !values.len().is_multiple_of(n) {
            return Err(SolverError::Layout {
                expected: n * (values.len() / n + 1),
                got: values.len(),
            });
        }
        Ok(Self {
            degree,
            values,
            time,
        })
    }

    /// Samples `f(x, t)` at the nodes of every element.
    pub fn from_fn(
        geometry: &[ElementGeometry],
        time: f64,
        f: impl Fn(Vec3, f64) -> Conservative + Sync,
    ) -> Self {
        let degree = geometry.first().map_or(1, |g| g.degree());
        let values = geometry
            .par_iter()
            .flat_map_iter(|g| g.x.iter().map(|&x| f(x, time)).collect::<Vec<_>>())
            .collect();
        Self {
            degree,
            values,
            time,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes_per_element(&self) -> usize {
        (self.degree + 1).pow(3)
    }

    pub fn n_elements(&self) -> usize {
        self.values.len() / self.nodes_per_element()
    }

    pub fn values(&self) -> &[Conservative] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Conservative] {
        &mut self.values
    }

    pub fn element(&self, e: usize) -> &[Conservative] {
        let n = self.nodes_per_element();
        &self.values[e * n..(e + 1) * n]
    }

    pub fn element_mut(&mut self, e: usize) -> &mut [Conservative] {
        let n = self.nodes_per_element();
        &mut self.values[e * n..(e + 1) * n]
    }
}

/// Lifted gradients `Q[node][d][c]`, `d` the Cartesian direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    degree: usize,
    values: Vec<[[f64; 5]; 3]>,
}

impl GradientField {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[[[f64; 5]; 3]] {
        &self.values
    }

    pub fn element(&self, e: usize) -> &[[[f64; 5]; 3]] {
        let n = (self.degree + 1).pow(3);
        &self.values[e * n..(e + 1) * n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GradientVariables {
    #[default]
    Entropy,
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub volume_flux: VolumeFlux,
    pub dissipation: Dissipation,
    pub viscous: bool,
    pub gradient_variables: GradientVariables,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            volume_flux: VolumeFlux::Ec,
            dissipation: Dissipation::Llf,
            viscous: false,
            gradient_variables: GradientVariables::Entropy,
        }
    }
}

/// Analytic state or source `f(x, t)`.
pub type StateFn = Arc<dyn Fn(Vec3, f64) -> Conservative + Send + Sync>;

/// Advective and viscous numerical fluxes of one interface, scaled by the
/// surface element, in left face-local order.
type FaceFluxes = (Vec<[f64; 5]>, Vec<[f64; 5]>);

#[derive(Debug, Clone, Copy)]
enum Exterior {
    Element {
        element: usize,
        face: FaceId,
        orientation: Orientation,
    },
    Dirichlet,
}

/// A face seen from its left element; `orientation` maps left face-local
/// indices to right face-local indices.
#[derive(Debug, Clone, Copy)]
struct Interface {
    element: usize,
    face: FaceId,
    right: Exterior,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    interface: usize,
    left: bool,
}

/// Everything needed to evaluate the semi-discrete operator on one mesh.
pub struct Discretization {
    pub basis: NodalBasis,
    pub gas: GasModel,
    pub options: SolverOptions,
    pub geometry: Vec<ElementGeometry>,
    pub topology: MeshTopology,
    boundary: Option<StateFn>,
    source: Option<StateFn>,
    interfaces: Vec<Interface>,
    slots: Vec<[Slot; 6]>,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("degree", &self.basis.degree())
            .field("elements", &self.geometry.len())
            .field("options", &self.options)
            .finish()
    }
}

impl Discretization {
    pub fn new(
        mesh: &Mesh,
        degree: usize,
        gas: GasModel,
        options: SolverOptions,
        form: MetricForm,
    ) -> Result<Self, SolverError> {
        let basis = NodalBasis::new(degree).map_err(|e| {
            MeshError::Topology(format!("cannot build basis of degree {degree}: {e}"))
        })?;
        let geometry = mesh.build_geometry(&basis, form)?;
        Self::from_parts(basis, gas, options, geometry, mesh.topology.clone())
    }

    pub fn from_parts(
        basis: NodalBasis,
        gas: GasModel,
        options: SolverOptions,
        geometry: Vec<ElementGeometry>,
        topology: MeshTopology,
    ) -> Result<Self, SolverError> {
        topology.validate()?;
        if topology.len() != geometry.len() {
            return Err(MeshError::Topology(format!(
                "{} topology records for {} elements",
                topology.len(),
                geometry.len()
            ))
            .into());
        }
        let placeholder = Slot {
            interface: usize::MAX,
            left: true,
        };
        let mut slots = vec![[placeholder; 6]; geometry.len()];
        let mut interfaces = Vec::new();
        for (e, faces) in topology.faces.iter().enumerate() {
            for f in FaceId::ALL {
                match faces[f.index()] {
                    FaceConnection::Dirichlet => {
                        slots[e][f.index()] = Slot {
                            interface: interfaces.len(),
                            left: true,
                        };
                        interfaces.push(Interface {
                            element: e,
                            face: f,
                            right: Exterior::Dirichlet,
                        });
                    }
                    FaceConnection::Neighbor {
                        element,
                        face,
                        orientation,
                        ..
                    } => {
                        if (e, f.index()) < (element, face.index()) {
                            let id = interfaces.len();
                            slots[e][f.index()] = Slot {
                                interface: id,
                                left: true,
                            };
                            slots[element][face.index()] = Slot {
                                interface: id,
                                left: false,
                            };
                            interfaces.push(Interface {
                                element: e,
                                face: f,
                                right: Exterior::Element {
                                    element,
                                    face,
                                    orientation,
                                },
                            });
                        }
                    }
                }
            }
        }
        Ok(Self {
            basis,
            gas,
            options,
            geometry,
            topology,
            boundary: None,
            source: None,
            interfaces,
            slots,
        })
    }

    /// Exterior state used on Dirichlet faces.
    pub fn with_boundary(mut self, f: StateFn) -> Self {
        self.boundary = Some(f);
        self
    }

    /// Volume source added to `dU/dt`.
    pub fn with_source(mut self, f: StateFn) -> Self {
        self.source = Some(f);
        self
    }

    pub fn set_source(&mut self, f: Option<StateFn>) {
        self.source = f;
    }

    pub fn has_dirichlet(&self) -> bool {
        self.interfaces
            .iter()
            .any(|i| matches!(i.right, Exterior::Dirichlet))
    }

    pub fn n_elements(&self) -> usize {
        self.geometry.len()
    }

    fn np(&self) -> usize {
        self.basis.len()
    }

    fn n3(&self) -> usize {
        self.np().pow(3)
    }

    pub fn initial_field(
        &self,
        time: f64,
        f: impl Fn(Vec3, f64) -> Conservative + Sync,
    ) -> SolutionField {
        SolutionField::from_fn(&self.geometry, time, f)
    }

    fn check_layout(&self, u: &SolutionField) -> Result<(), SolverError> {
        let expected = self.n3() * self.n_elements();
        if u.degree != self.basis.degree() || u.values.len() != expected {
            return Err(SolverError::Layout {
                expected,
                got: u.values.len(),
            });
        }
        if self.has_dirichlet() && self.boundary.is_none() {
            return Err(SolverError::MissingBoundary);
        }
        Ok(())
    }

    fn node_states(&self, u: &SolutionField) -> Result<Vec<NodeState>, SolverError> {
        let n3 = self.n3();
        let gas = &self.gas;
        u.values
            .par_iter()
            .enumerate()
            .map(|(i, v)| {
                NodeState::new(*v, gas).map_err(|source| SolverError::Positivity {
                    element: i / n3,
                    node: i % n3,
                    source,
                })
            })
            .collect()
    }

    fn exterior_state(&self, x: Vec3, t: f64) -> Result<NodeState, SolverError> {
        let f = self.boundary.as_ref().ok_or(SolverError::MissingBoundary)?;
        NodeState::new(f(x, t), &self.gas)
            .map_err(|source| SolverError::BoundaryState { x, source })
    }

    /// Lifted gradients of the configured gradient variables.
    pub fn lift_gradients(&self, u: &SolutionField) -> Result<GradientField, SolverError> {
        self.check_layout(u)?;
        let states = self.node_states(u)?;
        let vars = self.gradient_vars(&states);
        self.lift_from(&vars, u.time)
    }

    fn gradient_vars(&self, states: &[NodeState]) -> Vec<[f64; 5]> {
        match self.options.gradient_variables {
            GradientVariables::Entropy => states
                .par_iter()
                .map(|s| s.entropy_vars(&self.gas).0)
                .collect(),
            GradientVariables::Conservative => states.iter().map(|s| s.u).collect(),
        }
    }

    fn boundary_vars(&self, s: &NodeState) -> [f64; 5] {
        match self.options.gradient_variables {
            GradientVariables::Entropy => s.entropy_vars(&self.gas).0,
            GradientVariables::Conservative => s.u,
        }
    }

    fn lift_from(&self, vars: &[[f64; 5]], t: f64) -> Result<GradientField, SolverError> {
        let np = self.np();
        let n3 = self.n3();
        // interface values W* in left face-local ordering
        let wstar: Vec<Vec<[f64; 5]>> = self
            .interfaces
            .par_iter()
            .map(|itf| {
                let geo = &self.geometry[itf.element];
                let mut out = Vec::with_capacity(np * np);
                for q in 0..np {
                    for p in 0..np {
                        let il = itf.element * n3 + itf.face.volume_index(np, p, q);
                        let w = match itf.right {
                            Exterior::Element {
                                element,
                                face,
                                orientation,
                            } => {
                                let (a, b) = orientation.map(np, p, q);
                                let ir = element * n3 + face.volume_index(np, a, b);
                                std::array::from_fn(|c| 0.5 * (vars[il][c] + vars[ir][c]))
                            }
                            Exterior::Dirichlet => {
                                let x = geo.x[itf.face.volume_index(np, p, q)];
                                let ext = self.exterior_state(x, t)?;
                                self.boundary_vars(&ext)
                            }
                        };
                        out.push(w);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, SolverError>>()?;

        let values = (0..self.n_elements())
            .into_par_iter()
            .flat_map_iter(|e| {
                let geo = &self.geometry[e];
                let w = &vars[e * n3..(e + 1) * n3];
                let mut jq = vec![[[0.0; 5]; 3]; n3];
                for dir in 0..3 {
                    let dw = directional_derivative_5(&self.basis, w, dir);
                    for (node, g) in jq.iter_mut().enumerate() {
                        let ja = geo.ja[dir][node];
                        for d in 0..3 {
                            for c in 0..5 {
                                g[d][c] += ja[d] * dw[node][c];
                            }
                        }
                    }
                }
                let wb = self.basis.weights()[0];
                for f in FaceId::ALL {
                    let slot = self.slots[e][f.index()];
                    let itf = &self.interfaces[slot.interface];
                    let fg = geo.face(f);
                    for q in 0..np {
                        for p in 0..np {
                            let node = f.volume_index(np, p, q);
                            let ws = &wstar[slot.interface][self.left_local(itf, slot.left, p, q)];
                            let k = fg.s_hat[p + np * q] / wb;
                            let n = fg.normal[p + np * q];
                            for d in 0..3 {
                                for c in 0..5 {
                                    jq[node][d][c] += (ws[c] - w[node][c]) * n[d] * k;
                                }
                            }
                        }
                    }
                }
                for (node, g) in jq.iter_mut().enumerate() {
                    let inv = 1.0 / geo.jacobian[node];
                    for row in g.iter_mut() {
                        for v in row.iter_mut() {
                            *v *= inv;
                        }
                    }
                }
                jq
            })
            .collect();
        Ok(GradientField {
            degree: self.basis.degree(),
            values,
        })
    }

    /// Index into an interface's left-ordered buffer for face-local `(p, q)`
    /// of the given side.
    #[inline]
    fn left_local(&self, itf: &Interface, left: bool, p: usize, q: usize) -> usize {
        let np = self.np();
        if left {
            p + np * q
        } else {
            match itf.right {
                Exterior::Element { orientation, .. } => {
                    let (a, b) = orientation.inverse().map(np, p, q);
                    a + np * b
                }
                Exterior::Dirichlet => unreachable!(),
            }
        }
    }

    /// `dU/dt` at every node.
    pub fn residual(&self, u: &SolutionField) -> Result<Vec<Conservative>, SolverError> {
        self.check_layout(u)?;
        let np = self.np();
        let n3 = self.n3();
        let gas = &self.gas;
        let t = u.time;
        let states = self.node_states(u)?;
        let flux = self.options.volume_flux.get();

        let viscous = if self.options.viscous {
            let vars = self.gradient_vars(&states);
            let grads = self.lift_from(&vars, t)?;
            let fv: Vec<FluxTriple> = states
                .par_iter()
                .zip(grads.values.par_iter())
                .enumerate()
                .map(|(i, (s, g))| {
                    let pg = match self.options.gradient_variables {
                        GradientVariables::Entropy => {
                            primitive_gradients_from_entropy(&EntropyVars(vars[i]), g, gas)
                        }
                        GradientVariables::Conservative => {
                            primitive_gradients_from_conservative(&s.prim, g, gas)
                        }
                    };
                    viscous_flux(&s.prim.v, &pg, gas)
                })
                .collect();
            Some(fv)
        } else {
            None
        };

        // Numerical fluxes times the left surface element, per left face-local node.
        let face_fluxes: Vec<FaceFluxes> = self
            .interfaces
            .par_iter()
            .map(|itf| {
                let geo = &self.geometry[itf.element];
                let fg = geo.face(itf.face);
                let mut adv = Vec::with_capacity(np * np);
                let mut visc = Vec::new();
                for q in 0..np {
                    for p in 0..np {
                        let vl = itf.face.volume_index(np, p, q);
                        let il = itf.element * n3 + vl;
                        let n = fg.normal[p + np * q];
                        let s = fg.s_hat[p + np * q];
                        let (ext, ir) = match itf.right {
                            Exterior::Element {
                                element,
                                face,
                                orientation,
                            } => {
                                let (a, b) = orientation.map(np, p, q);
                                let ir = element * n3 + face.volume_index(np, a, b);
                                (states[ir], Some(ir))
                            }
                            Exterior::Dirichlet => (self.exterior_state(geo.x[vl], t)?, None),
                        };
                        let f = surface_flux_advective(
                            &states[il],
                            &ext,
                            &n,
                            gas,
                            flux,
                            self.options.dissipation,
                        );
                        adv.push(f.map(|c| c * s));
                        if let Some(fv) = &viscous {
                            let mut fl = contract(&fv[il], &n);
                            if let Some(ir) = ir {
                                let fr = contract(&fv[ir], &n);
                                for c in 0..5 {
                                    fl[c] = 0.5 * (fl[c] + fr[c]);
                                }
                            }
                            visc.push(fl.map(|c| c * s));
                        }
                    }
                }
                Ok((adv, visc))
            })
            .collect::<Result<_, SolverError>>()?;

        let inv_re = 1.0 / gas.reynolds;
        let out = (0..self.n_elements())
            .into_par_iter()
            .flat_map_iter(|e| {
                let geo = &self.geometry[e];
                let st = &states[e * n3..(e + 1) * n3];
                let mut vol = split_divergence(&self.basis, geo, st, flux, gas);
                for v in vol.iter_mut() {
                    for c in v.iter_mut() {
                        *c = -*c;
                    }
                }
                let fv = viscous.as_ref().map(|fv| &fv[e * n3..(e + 1) * n3]);
                if let Some(fv) = fv {
                    let div = viscous_divergence(&self.basis, geo, fv);
                    for (r, d) in vol.iter_mut().zip(&div) {
                        for c in 0..5 {
                            r[c] += inv_re * d[c];
                        }
                    }
                }
                let wb = self.basis.weights()[0];
                for f in FaceId::ALL {
                    let slot = self.slots[e][f.index()];
                    let itf = &self.interfaces[slot.interface];
                    let (adv, visc) = &face_fluxes[slot.interface];
                    let sign = f.sign();
                    let dir = f.direction();
                    for q in 0..np {
                        for p in 0..np {
                            let node = f.volume_index(np, p, q);
                            let k = self.left_local(itf, slot.left, p, q);
                            let outward = geo.ja[dir][node].map(|c| sign * c);
                            let own = st[node].normal_flux(&outward);
                            let fs = adv[k];
                            for c in 0..5 {
                                let star = if slot.left { fs[c] } else { -fs[c] };
                                vol[node][c] -= (star - own[c]) / wb;
                            }
                            if let Some(fv) = fv {
                                let own = contract(&fv[node], &outward);
                                let fs = visc[k];
                                for c in 0..5 {
                                    let star = if slot.left { fs[c] } else { -fs[c] };
                                    vol[node][c] += inv_re * (star - own[c]) / wb;
                                }
                            }
                        }
                    }
                }
                for (node, r) in vol.iter_mut().enumerate() {
                    let inv = 1.0 / geo.jacobian[node];
                    for c in r.iter_mut() {
                        *c *= inv;
                    }
                    if let Some(src) = &self.source {
                        let s = src(geo.x[node], t);
                        for c in 0..5 {
                            r[c] += s[c];
                        }
                    }
                }
                vol
            })
            .collect();
        Ok(out)
    }

    /// `sum_k sum_ijk w J W^T dU/dt`.
    pub fn entropy_rate(
        &self,
        u: &SolutionField,
        dudt: &[Conservative],
    ) -> Result<f64, SolverError> {
        Ok(self.entropy_rate_with_scale(u, dudt)?.0)
    }

    /// Entropy rate together with `sum w J |W^T dU/dt|`, the natural scale for
    /// judging cancellation.
    pub fn entropy_rate_with_scale(
        &self,
        u: &SolutionField,
        dudt: &[Conservative],
    ) -> Result<(f64, f64), SolverError> {
        let states = self.node_states(u)?;
        let n3 = self.n3();
        let parts: Vec<(f64, f64)> = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let geo = &self.geometry[e];
                let mut rate = 0.0;
                let mut scale = 0.0;
                for node in 0..n3 {
                    let i = e * n3 + node;
                    let w = entropy_variables_prim(&states[i].prim, &self.gas).0;
                    let c: f64 = (0..5).map(|c| w[c] * dudt[i][c]).sum();
                    let wj = self.basis.weight_3d(node) * geo.jacobian[node];
                    rate += wj * c;
                    scale += wj * c.abs();
                }
                (rate, scale)
            })
            .collect();
        Ok(parts
            .iter()
            .fold((0.0, 0.0), |(a, b), (r, s)| (a + r, b + s)))
    }

    /// `sum_k <J U, 1>_N` per component.
    pub fn totals(&self, u: &SolutionField) -> [f64; 5] {
        let n3 = self.n3();
        let parts: Vec<[f64; 5]> = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let geo = &self.geometry[e];
                let mut t = [0.0; 5];
                for node in 0..n3 {
                    let wj = self.basis.weight_3d(node) * geo.jacobian[node];
                    let v = &u.values[e * n3 + node];
                    for c in 0..5 {
                        t[c] += wj * v[c];
                    }
                }
                t
            })
            .collect();
        parts.iter().fold([0.0; 5], |mut a, t| {
            for c in 0..5 {
                a[c] += t[c];
            }
            a
        })
    }

    /// Total mathematical entropy `sum_k <J s, 1>_N`.
    pub fn total_entropy(&self, u: &SolutionField) -> Result<f64, SolverError> {
        let states = self.node_states(u)?;
        let n3 = self.n3();
        let parts: Vec<f64> = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let geo = &self.geometry[e];
                (0..n3)
                    .map(|node| {
                        self.basis.weight_3d(node)
                            * geo.jacobian[node]
                            * entropy_prim(&states[e * n3 + node].prim, &self.gas)
                    })
                    .sum::<f64>()
            })
            .collect();
        Ok(parts.iter().sum())
    }

    /// Advective CFL estimate `CFL * min 2J / (lambda (N+1)^2 sum_i |Ja^i|)`.
    pub fn timestep_estimate(&self, u: &SolutionField, cfl: f64) -> Result<f64, SolverError> {
        let states = self.node_states(u)?;
        let n3 = self.n3();
        let np2 = (self.np() * self.np()) as f64;
        let per: Vec<f64> = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let geo = &self.geometry[e];
                (0..n3)
                    .map(|node| {
                        let prim = &states[e * n3 + node].prim;
                        let lambda = prim.v.iter().map(|v| v * v).sum::<f64>().sqrt()
                            + prim.sound_speed(&self.gas);
                        let metric: f64 = (0..3).map(|i| norm3(&geo.ja[i][node])).sum();
                        2.0 * geo.jacobian[node] / (lambda * np2 * metric)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Ok(cfl * per.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// One low-storage RK step of the semi-discrete system.
    pub fn rk_step(&self, u: &SolutionField, dt: f64) -> Result<SolutionField, SolverError> {
        rk_step(u, dt, |s| self.residual(s))
    }
}

#[inline]
fn contract(f: &FluxTriple, n: &Vec3) -> [f64; 5] {
    std::array::from_fn(|c| f[0][c] * n[0] + f[1][c] * n[1] + f[2][c] * n[2])
}

/// `D` applied along direction `dir` to a 5-component nodal field.
fn directional_derivative_5(basis: &NodalBasis, values: &[[f64; 5]], dir: usize) -> Vec<[f64; 5]> {
    let np = basis.len();
    let stride = np.pow(dir as u32);
    let d = basis.d_matrix();
    let mut out = vec![[0.0; 5]; values.len()];
    for (node, o) in out.iter_mut().enumerate() {
        let i = (node / stride) % np;
        let base = node - i * stride;
        for m in 0..np {
            let dim = d[i * np + m];
            let v = &values[base + m * stride];
            for c in 0..5 {
                o[c] += dim * v[c];
            }
        }
    }
    out
}

/// Standard divergence of the contravariant viscous fluxes `Ja^i . f^v`.
fn viscous_divergence(
    basis: &NodalBasis,
    geo: &ElementGeometry,
    fv: &[FluxTriple],
) -> Vec<[f64; 5]> {
    let mut out = vec![[0.0; 5]; fv.len()];
    for dir in 0..3 {
        let contra: Vec<[f64; 5]> = fv
            .iter()
            .zip(&geo.ja[dir])
            .map(|(f, ja)| contract(f, ja))
            .collect();
        for (o, d) in out
            .iter_mut()
            .zip(directional_derivative_5(basis, &contra, dir))
        {
            for c in 0..5 {
                o[c] += d[c];
            }
        }
    }
    out
}

/// Two-point flux differencing volume term
/// `sum_m 2 D_im F#(u_i, u_m) . avg(Ja)` in each direction, not divided by J.
pub fn split_divergence(
    basis: &NodalBasis,
    geo: &ElementGeometry,
    states: &[NodeState],
    flux: &dyn TwoPointFlux,
    gas: &GasModel,
) -> Vec<[f64; 5]> {
    let np = basis.len();
    let d = basis.d_matrix();
    let mut out = vec![[0.0; 5]; states.len()];
    for dir in 0..3 {
        let stride = np.pow(dir as u32);
        let ja = &geo.ja[dir];
        for base in 0..states.len() {
            if !(base / stride).is_multiple_of(np) {
                continue;
            }
            for i in 0..np {
                let a = base + i * stride;
                let fd = states[a].normal_flux(&ja[a]);
                let dii = 2.0 * d[i * np + i];
                for c in 0..5 {
                    out[a][c] += dii * fd[c];
                }
                for m in i + 1..np {
                    let b = base + m * stride;
                    let n = std::array::from_fn(|k| 0.5 * (ja[a][k] + ja[b][k]));
                    let f = flux.contracted(&states[a], &states[b], &n, gas);
                    let dim = 2.0 * d[i * np + m];
                    let dmi = 2.0 * d[m * np + i];
                    for c in 0..5 {
                        out[a][c] += dim * f[c];
                        out[b][c] += dmi * f[c];
                    }
                }
            }
        }
    }
    out
}

/// Standard DGSEM volume term `sum_i D (Ja^i . f)` for comparison with the
/// split form.
pub fn standard_divergence(
    basis: &NodalBasis,
    geo: &ElementGeometry,
    states: &[NodeState],
) -> Vec<[f64; 5]> {
    let mut out = vec![[0.0; 5]; states.len()];
    for dir in 0..3 {
        let contra: Vec<[f64; 5]> = states
            .iter()
            .zip(&geo.ja[dir])
            .map(|(s, ja)| s.normal_flux(ja))
            .collect();
        for (o, d) in out
            .iter_mut()
            .zip(directional_derivative_5(basis, &contra, dir))
        {
            for c in 0..5 {
                o[c] += d[c];
            }
        }
    }
    out
}

pub const LSRK_A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
pub const LSRK_B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
pub const LSRK_C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363183890.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// Five-stage fourth-order low-storage RK step on a flat state vector.
/// `rhs(t, y, dydt)` fills `dydt`; errors carry the failing stage.
pub fn lsrk_step<E>(
    y: &mut [f64],
    t: f64,
    dt: f64,
    mut rhs: impl FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
) -> Result<(), (usize, E)> {
    let mut k = vec![0.0; y.len()];
    let mut g = vec![0.0; y.len()];
    for s in 0..5 {
        rhs(t + LSRK_C[s] * dt, y, &mut k).map_err(|e| (s, e))?;
        for i in 0..y.len() {
            g[i] = LSRK_A[s] * g[i] + dt * k[i];
            y[i] += LSRK_B[s] * g[i];
        }
    }
    Ok(())
}

/// Advances a solution field by `dt` with the given residual.
pub fn rk_step(
    u: &SolutionField,
    dt: f64,
    mut residual: impl FnMut(&SolutionField) -> Result<Vec<Conservative>, SolverError>,
) -> Result<SolutionField, SolverError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::InvalidTimestep(dt));
    }
    let mut out = u.clone();
    let mut stage = u.clone();
    let t0 = u.time;
    let result = lsrk_step(out.values.as_flattened_mut(), t0, dt, |t, y, dydt| {
        stage.values.as_flattened_mut().copy_from_slice(y);
        stage.time = t;
        let r = residual(&stage)?;
        dydt.copy_from_slice(r.as_flattened());
        Ok(())
    });
    result.map_err(|(s, e)| SolverError::Stage {
        time: t0 + LSRK_C[s] * dt,
        stage: s + 1,
        source: Box::new(e),
    })?;
    out.time = t0 + dt;
    Ok(out)
}

/// Free-stream sanity value: `max |dU/dt|`.
pub fn max_abs(r: &[Conservative]) -> f64 {
    r.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}
