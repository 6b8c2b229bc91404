//! Hexahedral element mappings and metric terms.
//!
//! Face numbering follows the transfinite-map convention: `gamma[0]` is the
//! `eta = -1` face parameterised by `(xi, zeta)`, `gamma[1]` is `eta = +1`
//! `(xi, zeta)`, `gamma[2]` is `zeta = -1` `(xi, eta)`, `gamma[3]` is
//! `xi = +1` `(eta, zeta)`, `gamma[4]` is `zeta = +1` `(xi, eta)` and
//! `gamma[5]` is `xi = -1` `(eta, zeta)`.
//!
//! Solver-side faces use [`FaceId`] instead, whose face-local node index
//! `(p, q)` runs over the two remaining reference directions in increasing
//! order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{directional_derivative, NodalBasis, SpectralError};

pub type Vec3 = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-positive Jacobian {value:e} at node {node} (max |J| = {max:e})")]
    NonPositiveJacobian { node: usize, value: f64, max: f64 },
    #[error("degenerate face {face:?}: zero surface element at face node {node}")]
    DegenerateFace { face: FaceId, node: usize },
    #[error("face data is not water-tight: edge mismatch {0:e}")]
    NotWatertight(f64),
    #[error("expected {expected} nodal points, got {got}")]
    WrongSize { expected: usize, got: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Relative threshold below which a Jacobian is considered degenerate.
pub const DEGENERATE_JACOBIAN: f64 = 1e-12;

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

/// The six faces of the reference cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaceId {
    XiMinus,
    XiPlus,
    EtaMinus,
    EtaPlus,
    ZetaMinus,
    ZetaPlus,
}

impl FaceId {
    pub const ALL: [FaceId; 6] = [
        FaceId::XiMinus,
        FaceId::XiPlus,
        FaceId::EtaMinus,
        FaceId::EtaPlus,
        FaceId::ZetaMinus,
        FaceId::ZetaPlus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Reference direction normal to the face.
    pub fn direction(self) -> usize {
        self.index() / 2
    }

    pub fn is_plus(self) -> bool {
        self.index() % 2 == 1
    }

    pub fn sign(self) -> f64 {
        if self.is_plus() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn opposite(self) -> Self {
        Self::ALL[self.index() ^ 1]
    }

    /// Volume node index of face-local node `(p, q)`.
    #[inline]
    pub fn volume_index(self, np: usize, p: usize, q: usize) -> usize {
        let edge = if self.is_plus() { np - 1 } else { 0 };
        let (i, j, k) = match self.direction() {
            0 => (edge, p, q),
            1 => (p, edge, q),
            _ => (p, q, edge),
        };
        i + np * (j + np * k)
    }

    pub fn label(self) -> &'static str {
        ["-xi", "+xi", "-eta", "+eta", "-zeta", "+zeta"][self.index()]
    }
}

/// Six boundary surfaces of one curved hexahedron, each a degree-M tensor
/// Lagrange grid on LGL points.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceDefinition {
    basis: NodalBasis,
    gamma: [Vec<Vec3>; 6],
}

impl FaceDefinition {
    pub fn new(degree: usize, gamma: [Vec<Vec3>; 6]) -> Result<Self, GeometryError> {
        let basis = NodalBasis::new(degree)?;
        let expected = basis.len() * basis.len();
        for g in &gamma {
            if g.len() != expected {
                return Err(GeometryError::WrongSize {
                    expected,
                    got: g.len(),
                });
            }
        }
        Ok(Self { basis, gamma })
    }

    /// Straight-sided hexahedron from its eight corners, ordered
    /// `(-,-,-), (+,-,-), (+,+,-), (-,+,-), (-,-,+), (+,-,+), (+,+,+), (-,+,+)`.
    pub fn from_corners(degree: usize, corners: &[Vec3; 8]) -> Result<Self, GeometryError> {
        Self::from_map(degree, |xi| trilinear(corners, xi))
    }

    /// Samples the faces of an arbitrary map of the reference cube.
    pub fn from_map(degree: usize, f: impl Fn(Vec3) -> Vec3) -> Result<Self, GeometryError> {
        let basis = NodalBasis::new(degree)?;
        let x = basis.nodes();
        let np = basis.len();
        let gamma = std::array::from_fn(|g| {
            let mut pts = Vec::with_capacity(np * np);
            for b in 0..np {
                for a in 0..np {
                    pts.push(f(face_point(g, x[a], x[b])));
                }
            }
            pts
        });
        Ok(Self { basis, gamma })
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn gamma(&self, g: usize) -> &[Vec3] {
        &self.gamma[g]
    }

    /// Evaluates face `g` (0-based) at its own parameters `(s, t)`.
    pub fn eval_face(&self, g: usize, s: f64, t: f64) -> Vec3 {
        let np = self.basis.len();
        let ls = self.basis.interpolation_matrix(&[s]);
        let lt = self.basis.interpolation_matrix(&[t]);
        let mut out = [0.0; 3];
        for b in 0..np {
            for a in 0..np {
                let w = ls[a] * lt[b];
                if w != 0.0 {
                    let p = &self.gamma[g][a + np * b];
                    for c in 0..3 {
                        out[c] += w * p[c];
                    }
                }
            }
        }
        out
    }

    /// Corner points `x_1 .. x_8`.
    pub fn corners(&self) -> [Vec3; 8] {
        [
            self.eval_face(2, -1.0, -1.0),
            self.eval_face(2, 1.0, -1.0),
            self.eval_face(2, 1.0, 1.0),
            self.eval_face(2, -1.0, 1.0),
            self.eval_face(4, -1.0, -1.0),
            self.eval_face(4, 1.0, -1.0),
            self.eval_face(4, 1.0, 1.0),
            self.eval_face(4, -1.0, 1.0),
        ]
    }

    /// Largest pointwise mismatch between adjacent faces along the twelve
    /// shared edges.
    pub fn edge_mismatch(&self) -> f64 {
        let x = self.basis.nodes().to_vec();
        let mut worst: f64 = 0.0;
        for free in 0..3 {
            let (a, b) = [(1, 2), (0, 2), (0, 1)][free];
            for sa in [-1.0, 1.0] {
                for sb in [-1.0, 1.0] {
                    let ga = face_of(a, sa);
                    let gb = face_of(b, sb);
                    for &t in &x {
                        let mut xi = [0.0; 3];
                        xi[free] = t;
                        xi[a] = sa;
                        xi[b] = sb;
                        let pa = self.eval_at(ga, xi);
                        let pb = self.eval_at(gb, xi);
                        for c in 0..3 {
                            worst = worst.max((pa[c] - pb[c]).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn check_watertight(&self, tol: f64) -> Result<(), GeometryError> {
        let m = self.edge_mismatch();
        if m > tol {
            Err(GeometryError::NotWatertight(m))
        } else {
            Ok(())
        }
    }

    fn eval_at(&self, g: usize, xi: Vec3) -> Vec3 {
        let (s, t) = face_params(g, xi);
        self.eval_face(g, s, t)
    }

    /// Transfinite interpolation with linear blending.
    pub fn transfinite_map(&self, xi: Vec3) -> Vec3 {
        let [x, y, z] = xi;
        let g = |i: usize, s: f64, t: f64| self.eval_face(i - 1, s, t);
        let mut out = [0.0; 3];

        // face sum
        let face_terms = [
            (0.5 * (1.0 - x), g(6, y, z)),
            (0.5 * (1.0 + x), g(4, y, z)),
            (0.5 * (1.0 - y), g(1, x, z)),
            (0.5 * (1.0 + y), g(2, x, z)),
            (0.5 * (1.0 - z), g(3, x, y)),
            (0.5 * (1.0 + z), g(5, x, y)),
        ];
        for (w, p) in face_terms {
            axpy(&mut out, w, &p);
        }

        // edge corrections, each weighted by -1/2
        let c_xi = [
            (0.25 * (1.0 - x) * (1.0 - y), g(1, -1.0, z)),
            (0.25 * (1.0 - x) * (1.0 + y), g(2, -1.0, z)),
            (0.25 * (1.0 - x) * (1.0 - z), g(3, -1.0, y)),
            (0.25 * (1.0 - x) * (1.0 + z), g(5, -1.0, y)),
            (0.25 * (1.0 + x) * (1.0 - y), g(1, 1.0, z)),
            (0.25 * (1.0 + x) * (1.0 + y), g(2, 1.0, z)),
            (0.25 * (1.0 + x) * (1.0 - z), g(3, 1.0, y)),
            (0.25 * (1.0 + x) * (1.0 + z), g(5, 1.0, y)),
        ];
        let c_eta = [
            (0.25 * (1.0 - y) * (1.0 - x), g(6, -1.0, z)),
            (0.25 * (1.0 - y) * (1.0 + x), g(4, -1.0, z)),
            (0.25 * (1.0 - y) * (1.0 - z), g(3, x, -1.0)),
            (0.25 * (1.0 - y) * (1.0 + z), g(5, x, -1.0)),
            (0.25 * (1.0 + y) * (1.0 - x), g(6, 1.0, z)),
            (0.25 * (1.0 + y) * (1.0 + x), g(4, 1.0, z)),
            (0.25 * (1.0 + y) * (1.0 - z), g(3, x, 1.0)),
            (0.25 * (1.0 + y) * (1.0 + z), g(5, x, 1.0)),
        ];
        let c_zeta = [
            (0.25 * (1.0 - z) * (1.0 - y), g(1, x, -1.0)),
            (0.25 * (1.0 - z) * (1.0 + y), g(2, x, -1.0)),
            (0.25 * (1.0 - z) * (1.0 - x), g(6, y, -1.0)),
            (0.25 * (1.0 - z) * (1.0 + x), g(4, y, -1.0)),
            (0.25 * (1.0 + z) * (1.0 - y), g(1, x, 1.0)),
            (0.25 * (1.0 + z) * (1.0 + y), g(2, x, 1.0)),
            (0.25 * (1.0 + z) * (1.0 - x), g(6, y, 1.0)),
            (0.25 * (1.0 + z) * (1.0 + x), g(4, y, 1.0)),
        ];
        for (w, p) in c_xi.iter().chain(&c_eta).chain(&c_zeta) {
            axpy(&mut out, -0.5 * w, p);
        }

        let hex = trilinear(&self.corners(), xi);
        axpy(&mut out, 1.0, &hex);
        out
    }

    /// Samples the transfinite map on the volume LGL grid of `basis`.
    pub fn sample_volume(&self, basis: &NodalBasis) -> Vec<Vec3> {
        let x = basis.nodes();
        let np = basis.len();
        let mut out = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    out.push(self.transfinite_map([x[i], x[j], x[k]]));
                }
            }
        }
        out
    }
}

#[inline]
fn axpy(out: &mut Vec3, w: f64, p: &Vec3) {
    for c in 0..3 {
        out[c] += w * p[c];
    }
}

/// Straight-sided hexahedron map through eight corners.
pub fn trilinear(c: &[Vec3; 8], xi: Vec3) -> Vec3 {
    let [x, y, z] = xi;
    let w = [
        (1.0 - x) * (1.0 - y) * (1.0 - z),
        (1.0 + x) * (1.0 - y) * (1.0 - z),
        (1.0 + x) * (1.0 + y) * (1.0 - z),
        (1.0 - x) * (1.0 + y) * (1.0 - z),
        (1.0 - x) * (1.0 - y) * (1.0 + z),
        (1.0 + x) * (1.0 - y) * (1.0 + z),
        (1.0 + x) * (1.0 + y) * (1.0 + z),
        (1.0 - x) * (1.0 + y) * (1.0 + z),
    ];
    let mut out = [0.0; 3];
    for (wi, ci) in w.iter().zip(c) {
        axpy(&mut out, 0.125 * wi, ci);
    }
    out
}

/// Transfinite face index (0-based) for reference coordinate `dir` at `sign`.
fn face_of(dir: usize, sign: f64) -> usize {
    match (dir, sign > 0.0) {
        (0, false) => 5,
        (0, true) => 3,
        (1, false) => 0,
        (1, true) => 1,
        (2, false) => 2,
        _ => 4,
    }
}

/// Reference point of face `g` at face parameters `(s, t)`.
fn face_point(g: usize, s: f64, t: f64) -> Vec3 {
    match g {
        0 => [s, -1.0, t],
        1 => [s, 1.0, t],
        2 => [s, t, -1.0],
        3 => [1.0, s, t],
        4 => [s, t, 1.0],
        _ => [-1.0, s, t],
    }
}

fn face_params(g: usize, xi: Vec3) -> (f64, f64) {
    match g {
        0 | 1 => (xi[0], xi[2]),
        2 | 4 => (xi[0], xi[1]),
        _ => (xi[1], xi[2]),
    }
}

/// How contravariant metric terms are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricForm {
    CrossProduct,
    #[default]
    Curl,
}

/// `a_i = dX/dxi^i` by spectral differentiation of the nodal map.
pub fn covariant_basis(basis: &NodalBasis, x: &[Vec3]) -> [Vec<Vec3>; 3] {
    let comps = centred_components(x);
    std::array::from_fn(|dir| {
        let d: [Vec<f64>; 3] =
            std::array::from_fn(|c| directional_derivative(basis, &comps[c], dir));
        (0..x.len()).map(|n| [d[0][n], d[1][n], d[2][n]]).collect()
    })
}

/// Coordinate components relative to the element centroid. Both metric forms
/// are translation invariant, and centring keeps the roundoff relative to the
/// element size rather than to the distance from the origin.
fn centred_components(x: &[Vec3]) -> [Vec<f64>; 3] {
    let n = x.len().max(1) as f64;
    std::array::from_fn(|c| {
        let mean = x.iter().map(|p| p[c]).sum::<f64>() / n;
        x.iter().map(|p| p[c] - mean).collect()
    })
}

/// Nodal cross-product metrics `Ja^i = a_j x a_k` and `J = a_1 . (a_2 x a_3)`.
pub fn metrics_cross_product(a: &[Vec<Vec3>; 3]) -> ([Vec<Vec3>; 3], Vec<f64>) {
    let n = a[0].len();
    let ja = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        (0..n).map(|m| cross(&a[j][m], &a[k][m])).collect()
    });
    let jac = (0..n)
        .map(|m| dot3(&a[0][m], &cross(&a[1][m], &a[2][m])))
        .collect();
    (ja, jac)
}

/// Curl-form (conservative) metrics: for `(i, j, k)` cyclic and component
/// pairs `(x: Y,Z)`, `(y: Z,X)`, `(z: X,Y)`,
/// `(Ja^i)_n = d_k I(A_{,j} B) - d_j I(A_{,k} B)`.
pub fn metrics_curl_form(basis: &NodalBasis, x: &[Vec3]) -> [Vec<Vec3>; 3] {
    let n = x.len();
    let comps = centred_components(x);
    // derivs[c][dir] = d X_c / d xi^dir
    let derivs: [[Vec<f64>; 3]; 3] = std::array::from_fn(|c| {
        std::array::from_fn(|dir| directional_derivative(basis, &comps[c], dir))
    });
    let mut ja = [vec![[0.0; 3]; n], vec![[0.0; 3]; n], vec![[0.0; 3]; n]];
    for comp in 0..3 {
        let (ca, cb) = ((comp + 1) % 3, (comp + 2) % 3);
        // prod[dir] = I(A_{,dir} B) at the nodes
        let prod: [Vec<f64>; 3] =
            std::array::from_fn(|dir| (0..n).map(|m| derivs[ca][dir][m] * comps[cb][m]).collect());
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let t1 = directional_derivative(basis, &prod[j], k);
            let t2 = directional_derivative(basis, &prod[k], j);
            for m in 0..n {
                ja[i][m][comp] = t1[m] - t2[m];
            }
        }
    }
    ja
}

/// Max-abs discrete divergence `sum_i d/dxi^i (Ja^i)_n` over nodes and `n`.
pub fn metric_identity_residual(basis: &NodalBasis, ja: &[Vec<Vec3>; 3]) -> f64 {
    let mut worst: f64 = 0.0;
    for comp in 0..3 {
        let mut div = vec![0.0; ja[0].len()];
        for (i, field) in ja.iter().enumerate() {
            let vals: Vec<f64> = field.iter().map(|v| v[comp]).collect();
            for (o, d) in div.iter_mut().zip(directional_derivative(basis, &vals, i)) {
                *o += d;
            }
        }
        worst = div.iter().fold(worst, |m, v| m.max(v.abs()));
    }
    worst
}

/// Surface element and outward unit normal on one face, indexed by
/// face-local node `p + (N+1) q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceGeometry {
    pub s_hat: Vec<f64>,
    pub normal: Vec<Vec3>,
}

/// Metric data of one mapped element.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    degree: usize,
    pub x: Vec<Vec3>,
    pub covariant: [Vec<Vec3>; 3],
    pub ja: [Vec<Vec3>; 3],
    pub jacobian: Vec<f64>,
    pub faces: [FaceGeometry; 6],
    pub form: MetricForm,
}

impl ElementGeometry {
    pub fn new(basis: &NodalBasis, x: Vec<Vec3>, form: MetricForm) -> Result<Self, GeometryError> {
        let np = basis.len();
        if x.len() != np * np * np {
            return Err(GeometryError::WrongSize {
                expected: np * np * np,
                got: x.len(),
            });
        }
        let covariant = covariant_basis(basis, &x);
        let (cross_ja, jacobian) = metrics_cross_product(&covariant);
        let ja = match form {
            MetricForm::CrossProduct => cross_ja,
            MetricForm::Curl => metrics_curl_form(basis, &x),
        };
        check_jacobian(&jacobian)?;
        let faces = std::array::from_fn(|f| face_geometry_of(np, &ja, FaceId::ALL[f]));
        for face in FaceId::ALL {
            if let Some(node) = faces[face.index()].s_hat.iter().position(|&s| !(s > 0.0)) {
                return Err(GeometryError::DegenerateFace { face, node });
            }
        }
        Ok(Self {
            degree: basis.degree(),
            x,
            covariant,
            ja,
            jacobian,
            faces,
            form,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn face(&self, face: FaceId) -> &FaceGeometry {
        &self.faces[face.index()]
    }

    pub fn jacobian_range(&self) -> (f64, f64) {
        self.jacobian
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &j| {
                (lo.min(j), hi.max(j))
            })
    }

    /// Physical coordinates of the nodes on one face.
    pub fn face_points(&self, face: FaceId) -> Vec<Vec3> {
        let np = self.degree + 1;
        let mut out = Vec::with_capacity(np * np);
        for q in 0..np {
            for p in 0..np {
                out.push(self.x[face.volume_index(np, p, q)]);
            }
        }
        out
    }
}

fn check_jacobian(jac: &[f64]) -> Result<(), GeometryError> {
    let max = jac.iter().fold(0.0f64, |m, j| m.max(j.abs()));
    let threshold = DEGENERATE_JACOBIAN * max;
    match jac.iter().position(|&j| !(j > threshold)) {
        Some(node) => Err(GeometryError::NonPositiveJacobian {
            node,
            value: jac[node],
            max,
        }),
        None => Ok(()),
    }
}

fn face_geometry_of(np: usize, ja: &[Vec<Vec3>; 3], face: FaceId) -> FaceGeometry {
    let dir = face.direction();
    let sign = face.sign();
    let mut s_hat = Vec::with_capacity(np * np);
    let mut normal = Vec::with_capacity(np * np);
    for q in 0..np {
        for p in 0..np {
            let v = ja[dir][face.volume_index(np, p, q)];
            let s = norm3(&v);
            s_hat.push(s);
            normal.push(v.map(|c| sign * c / s));
        }
    }
    FaceGeometry { s_hat, normal }
}

/// Surface elements and outward normals of one face of a built element.
pub fn face_geometry(geom: &ElementGeometry, face: FaceId) -> (&[f64], &[Vec3]) {
    let f = geom.face(face);
    (&f.s_hat, &f.normal)
}
