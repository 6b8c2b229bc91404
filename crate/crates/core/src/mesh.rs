//! Conforming hexahedral meshes: element shapes, face connectivity with
//! orientation, built-in generators and a plain-text mesh file format.
//!
//! File layout (`#` starts a comment, blank lines ignored):
//!
//! ```text
//! dgsem-mesh 1
//! elements <K>
//! element <e>
//! corners
//! <x> <y> <z>            # eight lines, corner order (-,-,-) (+,-,-) (+,+,-) (-,+,-) then z = +1
//! curved <M>             # optional; six face grids of (M+1)^2 points follow
//! face <g>               # g = 1..6, transfinite face numbering
//! <x> <y> <z>            # (M+1)^2 lines, first face parameter fastest
//! neighbors
//! <face> <elem> <face> <orientation> [periodic]   # face labels -xi +xi -eta +eta -zeta +zeta
//! <face> dirichlet
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    metric_identity_residual, ElementGeometry, FaceDefinition, FaceId, GeometryError, MetricForm,
    Vec3,
};
use crate::spectral::NodalBasis;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("element {element}: {source}")]
    Geometry {
        element: usize,
        #[source]
        source: GeometryError,
    },
    #[error("mesh io: {0}")]
    Io(#[from] std::io::Error),
}

/// One of the eight maps between face-local node grids of two matching faces:
/// bit 0 swaps `(p, q)`, then bit 1 reverses the first and bit 2 the second
/// index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Orientation(u8);

impl Orientation {
    pub const IDENTITY: Self = Orientation(0);

    pub fn new(code: u8) -> Option<Self> {
        (code < 8).then_some(Self(code))
    }

    pub fn code(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn map(self, np: usize, p: usize, q: usize) -> (usize, usize) {
        let (a, b) = if self.0 & 1 != 0 { (q, p) } else { (p, q) };
        let a = if self.0 & 2 != 0 { np - 1 - a } else { a };
        let b = if self.0 & 4 != 0 { np - 1 - b } else { b };
        (a, b)
    }

    pub fn inverse(self) -> Self {
        if self.0 & 1 == 0 {
            self
        } else {
            let f1 = (self.0 >> 1) & 1;
            let f2 = (self.0 >> 2) & 1;
            Self(1 | (f2 << 1) | (f1 << 2))
        }
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (0..8).map(Self)
    }
}

/// Finds the orientation that maps the face-local grid `mine` onto `theirs`
/// after translating `mine` by `shift`.
pub fn infer_orientation(
    mine: &[Vec3],
    theirs: &[Vec3],
    np: usize,
    shift: Vec3,
    tol: f64,
) -> Option<Orientation> {
    Orientation::all().find(|o| {
        (0..np).all(|q| {
            (0..np).all(|p| {
                let (a, b) = o.map(np, p, q);
                let x = mine[p + np * q];
                let y = theirs[a + np * b];
                (0..3).all(|c| (x[c] + shift[c] - y[c]).abs() <= tol)
            })
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceConnection {
    Neighbor {
        element: usize,
        face: FaceId,
        orientation: Orientation,
        periodic: bool,
    },
    /// Exterior state supplied by an analytic function.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeshTopology {
    pub faces: Vec<[FaceConnection; 6]>,
}

impl MeshTopology {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Checks that every neighbor relation is mirrored with the inverse
    /// orientation.
    pub fn validate(&self) -> Result<(), MeshError> {
        for (e, faces) in self.faces.iter().enumerate() {
            for f in FaceId::ALL {
                if let FaceConnection::Neighbor {
                    element,
                    face,
                    orientation,
                    periodic,
                } = faces[f.index()]
                {
                    let back = self.faces.get(element).ok_or_else(|| {
                        MeshError::Topology(format!(
                            "element {e} face {}: neighbor {element} does not exist",
                            f.label()
                        ))
                    })?;
                    match back[face.index()] {
                        FaceConnection::Neighbor {
                            element: e2,
                            face: f2,
                            orientation: o2,
                            periodic: p2,
                        } if e2 == e && f2 == f && o2 == orientation.inverse() && p2 == periodic => {}
                        other => {
                            return Err(MeshError::Topology(format!(
                                "element {e} face {} -> ({element}, {}) is not mirrored (found {other:?})",
                                f.label(),
                                face.label()
                            )))
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub type MapFn = Arc<dyn Fn(Vec3) -> Vec3 + Send + Sync>;

/// Geometry description of one element, independent of the solution degree.
#[derive(Clone)]
pub enum ElementShape {
    /// Six boundary faces blended by transfinite interpolation.
    Faces(Box<FaceDefinition>),
    /// Analytic map of the reference cube, sampled isoparametrically.
    Map(MapFn),
}

impl std::fmt::Debug for ElementShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ElementShape::Faces(fd) => write!(f, "Faces(degree {})", fd.degree()),
            ElementShape::Map(_) => write!(f, "Map(..)"),
        }
    }
}

impl ElementShape {
    pub fn sample(&self, basis: &NodalBasis) -> Vec<Vec3> {
        match self {
            ElementShape::Faces(fd) => fd.sample_volume(basis),
            ElementShape::Map(f) => {
                let x = basis.nodes();
                let np = basis.len();
                let mut out = Vec::with_capacity(np * np * np);
                for k in 0..np {
                    for j in 0..np {
                        for i in 0..np {
                            out.push(f([x[i], x[j], x[k]]));
                        }
                    }
                }
                out
            }
        }
    }

    /// Face representation at degree `m` (analytic maps are sampled).
    pub fn to_faces(&self, m: usize) -> Result<FaceDefinition, GeometryError> {
        match self {
            ElementShape::Faces(fd) if fd.degree() == m => Ok((**fd).clone()),
            ElementShape::Faces(fd) => FaceDefinition::from_map(m, |xi| fd.transfinite_map(xi)),
            ElementShape::Map(f) => FaceDefinition::from_map(m, |xi| f(xi)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub shapes: Vec<ElementShape>,
    pub topology: MeshTopology,
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// Builds element geometry for all elements in parallel.
    pub fn build_geometry(
        &self,
        basis: &NodalBasis,
        form: MetricForm,
    ) -> Result<Vec<ElementGeometry>, MeshError> {
        self.shapes
            .par_iter()
            .enumerate()
            .map(|(element, shape)| {
                ElementGeometry::new(basis, shape.sample(basis), form)
                    .map_err(|source| MeshError::Geometry { element, source })
            })
            .collect()
    }

    /// Largest mismatch of `s_hat` across connected faces.
    pub fn surface_mismatch(&self, basis: &NodalBasis, geometry: &[ElementGeometry]) -> f64 {
        let np = basis.len();
        let mut worst: f64 = 0.0;
        for (e, faces) in self.topology.faces.iter().enumerate() {
            for f in FaceId::ALL {
                if let FaceConnection::Neighbor {
                    element,
                    face,
                    orientation,
                    ..
                } = faces[f.index()]
                {
                    let mine = &geometry[e].face(f).s_hat;
                    let theirs = &geometry[element].face(face).s_hat;
                    for q in 0..np {
                        for p in 0..np {
                            let (a, b) = orientation.map(np, p, q);
                            worst = worst.max((mine[p + np * q] - theirs[a + np * b]).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Per-element quality numbers printed by `mesh audit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementAudit {
    pub element: usize,
    pub jacobian_min: f64,
    pub jacobian_max: f64,
    pub metric_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshAudit {
    pub degree: usize,
    pub elements: Vec<ElementAudit>,
    pub surface_mismatch: f64,
}

impl MeshAudit {
    pub fn max_metric_residual(&self) -> f64 {
        self.elements
            .iter()
            .fold(0.0, |m, e| m.max(e.metric_residual))
    }
}

/// Builds curl-form geometry at `degree` and reports Jacobian ranges, metric
/// identity residuals and the surface-element mismatch across faces.
pub fn audit(mesh: &Mesh, degree: usize) -> Result<MeshAudit, MeshError> {
    mesh.topology.validate()?;
    let basis = NodalBasis::new(degree)
        .map_err(|e| MeshError::Topology(format!("degree {degree}: {e}")))?;
    let geometry = mesh.build_geometry(&basis, MetricForm::Curl)?;
    let elements = geometry
        .iter()
        .enumerate()
        .map(|(element, g)| {
            let (jacobian_min, jacobian_max) = g.jacobian_range();
            ElementAudit {
                element,
                jacobian_min,
                jacobian_max,
                metric_residual: metric_identity_residual(&basis, &g.ja),
            }
        })
        .collect();
    Ok(MeshAudit {
        degree,
        elements,
        surface_mismatch: mesh.surface_mismatch(&basis, &geometry),
    })
}

/// Structured-grid connectivity for an `n[0] x n[1] x n[2]` block with
/// identity orientations.
pub fn structured_topology(n: [usize; 3], periodic: [bool; 3]) -> MeshTopology {
    let id = |c: [usize; 3]| c[0] + n[0] * (c[1] + n[1] * c[2]);
    let mut faces = Vec::with_capacity(n[0] * n[1] * n[2]);
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let c = [i, j, k];
                let conns = std::array::from_fn(|fi| {
                    let face = FaceId::ALL[fi];
                    let dir = face.direction();
                    let mut nc = c;
                    let (wrapped, exists) = if face.is_plus() {
                        if c[dir] + 1 < n[dir] {
                            nc[dir] += 1;
                            (false, true)
                        } else {
                            nc[dir] = 0;
                            (true, periodic[dir])
                        }
                    } else if c[dir] > 0 {
                        nc[dir] -= 1;
                        (false, true)
                    } else {
                        nc[dir] = n[dir] - 1;
                        (true, periodic[dir])
                    };
                    if exists {
                        FaceConnection::Neighbor {
                            element: id(nc),
                            face: face.opposite(),
                            orientation: Orientation::IDENTITY,
                            periodic: wrapped,
                        }
                    } else {
                        FaceConnection::Dirichlet
                    }
                });
                faces.push(conns);
            }
        }
    }
    MeshTopology { faces }
}

fn block_corners(lo: Vec3, h: Vec3, c: [usize; 3]) -> [Vec3; 8] {
    let at = |di: usize, dj: usize, dk: usize| {
        [
            lo[0] + h[0] * (c[0] + di) as f64,
            lo[1] + h[1] * (c[1] + dj) as f64,
            lo[2] + h[2] * (c[2] + dk) as f64,
        ]
    };
    [
        at(0, 0, 0),
        at(1, 0, 0),
        at(1, 1, 0),
        at(0, 1, 0),
        at(0, 0, 1),
        at(1, 0, 1),
        at(1, 1, 1),
        at(0, 1, 1),
    ]
}

/// Cartesian box `[lo, hi]` split into `n` elements per direction.
pub fn box_mesh(n: [usize; 3], lo: Vec3, hi: Vec3, periodic: [bool; 3]) -> Result<Mesh, MeshError> {
    let h = std::array::from_fn(|d| (hi[d] - lo[d]) / n[d] as f64);
    let mut shapes = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let fd = FaceDefinition::from_corners(1, &block_corners(lo, h, [i, j, k]))
                    .map_err(|source| MeshError::Geometry {
                        element: shapes.len(),
                        source,
                    })?;
                shapes.push(ElementShape::Faces(Box::new(fd)));
            }
        }
    }
    Ok(Mesh {
        shapes,
        topology: structured_topology(n, periodic),
    })
}

/// Sinusoidal warp of the unit cube that keeps it periodic:
/// `X = x + a (sin(pi y) sin(pi z), sin(pi x) sin(pi z), sin(pi x) sin(pi y))`.
pub fn warp(amplitude: f64, p: Vec3) -> Vec3 {
    use std::f64::consts::PI;
    let s = p.map(|c| (PI * c).sin());
    [
        p[0] + amplitude * s[1] * s[2],
        p[1] + amplitude * s[0] * s[2],
        p[2] + amplitude * s[0] * s[1],
    ]
}

/// Fully periodic warped unit box with `n` elements per direction.
pub fn warped_box_mesh(n: [usize; 3], amplitude: f64) -> Mesh {
    let h: Vec3 = std::array::from_fn(|d| 1.0 / n[d] as f64);
    let mut shapes = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let lo = [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]];
                let map: MapFn = Arc::new(move |xi: Vec3| {
                    let p = std::array::from_fn(|d| lo[d] + 0.5 * (xi[d] + 1.0) * h[d]);
                    warp(amplitude, p)
                });
                shapes.push(ElementShape::Map(map));
            }
        }
    }
    Mesh {
        shapes,
        topology: structured_topology(n, [true; 3]),
    }
}

fn parse_face_label(s: &str) -> Option<FaceId> {
    FaceId::ALL.into_iter().find(|f| f.label() == s)
}

/// Serialises a mesh; analytic maps are written as curved faces of degree
/// `face_degree`.
pub fn write_mesh(mesh: &Mesh, face_degree: usize) -> Result<String, MeshError> {
    let mut out = String::new();
    writeln!(out, "dgsem-mesh 1").unwrap();
    writeln!(out, "elements {}", mesh.len()).unwrap();
    for (e, shape) in mesh.shapes.iter().enumerate() {
        let curved = match shape {
            ElementShape::Faces(fd) if fd.degree() == 1 => None,
            other => Some(
                other
                    .to_faces(face_degree)
                    .map_err(|source| MeshError::Geometry { element: e, source })?,
            ),
        };
        let corners = match (&curved, shape) {
            (Some(fd), _) => fd.corners(),
            (None, ElementShape::Faces(fd)) => fd.corners(),
            (None, ElementShape::Map(_)) => unreachable!(),
        };
        writeln!(out, "element {e}").unwrap();
        writeln!(out, "corners").unwrap();
        for c in corners {
            writeln!(out, "{:.17e} {:.17e} {:.17e}", c[0], c[1], c[2]).unwrap();
        }
        if let Some(fd) = curved {
            writeln!(out, "curved {}", fd.degree()).unwrap();
            for g in 0..6 {
                writeln!(out, "face {}", g + 1).unwrap();
                for p in fd.gamma(g) {
                    writeln!(out, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]).unwrap();
                }
            }
        }
        writeln!(out, "neighbors").unwrap();
        for f in FaceId::ALL {
            match mesh.topology.faces[e][f.index()] {
                FaceConnection::Neighbor {
                    element,
                    face,
                    orientation,
                    periodic,
                } => {
                    write!(
                        out,
                        "{} {} {} {}",
                        f.label(),
                        element,
                        face.label(),
                        orientation.code()
                    )
                    .unwrap();
                    if periodic {
                        write!(out, " periodic").unwrap();
                    }
                    writeln!(out).unwrap();
                }
                FaceConnection::Dirichlet => writeln!(out, "{} dirichlet", f.label()).unwrap(),
            }
        }
        writeln!(out, "end").unwrap();
    }
    Ok(out)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Result<Vec<&'a str>, MeshError> {
        for (i, raw) in self.inner.by_ref() {
            self.line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                return Ok(body.split_whitespace().collect());
            }
        }
        Err(MeshError::Parse {
            line: self.line + 1,
            msg: "unexpected end of file".into(),
        })
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<Vec<&'a str>, MeshError> {
        let t = self.next_tokens()?;
        if t.first() != Some(&keyword) {
            return Err(self.err(format!("expected `{keyword}`, found `{}`", t.join(" "))));
        }
        Ok(t)
    }

    fn point(&mut self) -> Result<Vec3, MeshError> {
        let t = self.next_tokens()?;
        if t.len() != 3 {
            return Err(self.err("expected three coordinates"));
        }
        let mut p = [0.0; 3];
        for (c, s) in t.iter().enumerate() {
            p[c] = s
                .parse()
                .map_err(|_| self.err(format!("bad number `{s}`")))?;
        }
        Ok(p)
    }

    fn usize_at(&self, t: &[&str], i: usize) -> Result<usize, MeshError> {
        t.get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(format!("expected integer in `{}`", t.join(" "))))
    }
}

/// Parses the text mesh format and validates the topology.
pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.expect("dgsem-mesh")?;
    if header.get(1) != Some(&"1") {
        return Err(lines.err("unsupported mesh format version"));
    }
    let t = lines.expect("elements")?;
    let count = lines.usize_at(&t, 1)?;
    let mut shapes = Vec::with_capacity(count);
    let mut faces = Vec::with_capacity(count);
    for e in 0..count {
        let t = lines.expect("element")?;
        if lines.usize_at(&t, 1)? != e {
            return Err(lines.err(format!("expected element {e}")));
        }
        lines.expect("corners")?;
        let mut corners = [[0.0; 3]; 8];
        for c in corners.iter_mut() {
            *c = lines.point()?;
        }
        let mut t = lines.next_tokens()?;
        let shape = if t.first() == Some(&"curved") {
            let m = lines.usize_at(&t, 1)?;
            let np = m + 1;
            let mut gamma: [Vec<Vec3>; 6] = Default::default();
            for (g, grid) in gamma.iter_mut().enumerate() {
                let ft = lines.expect("face")?;
                if lines.usize_at(&ft, 1)? != g + 1 {
                    return Err(lines.err(format!("expected face {}", g + 1)));
                }
                for _ in 0..np * np {
                    grid.push(lines.point()?);
                }
            }
            let fd = FaceDefinition::new(m, gamma)
                .map_err(|source| MeshError::Geometry { element: e, source })?;
            let scale = corners.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
            fd.check_watertight(1e-10 * scale)
                .map_err(|source| MeshError::Geometry { element: e, source })?;
            let fc = fd.corners();
            let off = corners
                .iter()
                .zip(&fc)
                .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
                .fold(0.0, f64::max);
            if off > 1e-10 * scale {
                return Err(lines.err(format!(
                    "element {e}: curved faces disagree with corners by {off:e}"
                )));
            }
            t = lines.next_tokens()?;
            ElementShape::Faces(Box::new(fd))
        } else {
            ElementShape::Faces(Box::new(
                FaceDefinition::from_corners(1, &corners)
                    .map_err(|source| MeshError::Geometry { element: e, source })?,
            ))
        };
        if t.first() != Some(&"neighbors") {
            return Err(lines.err(format!("expected `neighbors`, found `{}`", t.join(" "))));
        }
        let mut conns = [FaceConnection::Dirichlet; 6];
        let mut seen = [false; 6];
        for _ in 0..6 {
            let t = lines.next_tokens()?;
            let face = t
                .first()
                .and_then(|s| parse_face_label(s))
                .ok_or_else(|| lines.err(format!("bad face label in `{}`", t.join(" "))))?;
            if std::mem::replace(&mut seen[face.index()], true) {
                return Err(lines.err(format!("face {} listed twice", face.label())));
            }
            conns[face.index()] = if t.get(1) == Some(&"dirichlet") {
                FaceConnection::Dirichlet
            } else {
                let element = lines.usize_at(&t, 1)?;
                let nface = t
                    .get(2)
                    .and_then(|s| parse_face_label(s))
                    .ok_or_else(|| lines.err("bad neighbor face label"))?;
                let code = lines.usize_at(&t, 3)?;
                let orientation = u8::try_from(code)
                    .ok()
                    .and_then(Orientation::new)
                    .ok_or_else(|| lines.err(format!("orientation code {code} outside 0..8")))?;
                let periodic = match t.get(4) {
                    None => false,
                    Some(&"periodic") => true,
                    Some(other) => return Err(lines.err(format!("unexpected token `{other}`"))),
                };
                FaceConnection::Neighbor {
                    element,
                    face: nface,
                    orientation,
                    periodic,
                }
            };
        }
        lines.expect("end")?;
        shapes.push(shape);
        faces.push(conns);
    }
    let topology = MeshTopology { faces };
    topology.validate()?;
    Ok(Mesh { shapes, topology })
}

pub fn read_mesh(path: &Path) -> Result<Mesh, MeshError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}
