//! Invariant batteries for each module, run with fixed seeds.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cases::{Case, CaseKind};
use crate::fluxes::{
    log_mean, surface_flux_advective, CentralFlux, Dissipation, EcFlux, NodeState, TwoPointFlux,
    VolumeFlux,
};
use crate::geometry::{
    metric_identity_residual, ElementGeometry, FaceDefinition, MetricForm, Vec3,
};
use crate::mesh::warped_box_mesh;
use crate::physics::{Conservative, GasModel, Primitive};
use crate::solver::{
    max_abs, split_divergence, standard_divergence, Discretization, SolverOptions,
};
use crate::spectral::NodalBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Spectral,
    Geometry,
    Fluxes,
    Solver,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["spectral", "geometry", "fluxes", "solver", "all"];
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "geometry" => Ok(Self::Geometry),
            "fluxes" => Ok(Self::Fluxes),
            "solver" => Ok(Self::Solver),
            "all" => Ok(Self::All),
            _ => Err(format!(
                "unknown suite `{s}` (valid: {})",
                Self::NAMES.join(", ")
            )),
        }
    }
}

/// One check: a measured value compared with a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `value <= bound` when true, `value >= bound` otherwise.
    pub upper: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            upper: true,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            upper: false,
        }
    }

    pub fn passed(&self) -> bool {
        if self.upper {
            self.value <= self.bound
        } else {
            self.value >= self.bound
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<48} {:>12.3e} {} {:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            if self.upper { "<=" } else { ">=" },
            self.bound
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Random positive state: density and pressure log-uniform in [0.1, 10],
/// velocity components uniform in [-2, 2].
pub fn random_state(rng: &mut impl Rng, gas: &GasModel) -> Conservative {
    let rho = 10f64.powf(rng.gen_range(-1.0..1.0));
    let p = 10f64.powf(rng.gen_range(-1.0..1.0));
    let v = [
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    ];
    Primitive { rho, v, p }.to_conservative(gas)
}

pub fn run(suite: Suite, seed: u64) -> Report {
    let mut report = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if matches!(suite, Suite::Spectral | Suite::All) {
        spectral_checks(&mut report, &mut rng);
    }
    if matches!(suite, Suite::Geometry | Suite::All) {
        geometry_checks(&mut report, &mut rng);
    }
    if matches!(suite, Suite::Fluxes | Suite::All) {
        flux_checks(&mut report, &mut rng);
    }
    if matches!(suite, Suite::Solver | Suite::All) {
        solver_checks(&mut report, &mut rng);
    }
    report
}

fn spectral_checks(report: &mut Report, rng: &mut ChaCha8Rng) {
    let mut sbp: f64 = 0.0;
    let mut rows: f64 = 0.0;
    let mut corners: f64 = 0.0;
    let mut columns: f64 = 0.0;
    let mut weights: f64 = 0.0;
    let mut ibp: f64 = 0.0;
    for n in 1..=15 {
        let b = NodalBasis::new(n).unwrap();
        let np = n + 1;
        for i in 0..np {
            rows = rows.max((0..np).map(|j| b.d(i, j)).sum::<f64>().abs());
            for j in 0..np {
                sbp = sbp.max((b.q(i, j) + b.q(j, i) - b.boundary(i, j)).abs());
            }
            let expect = if i == 0 {
                -0.5
            } else if i == n {
                0.5
            } else {
                0.0
            };
            corners = corners.max((b.q(i, i) - expect).abs());
            let col: f64 = (0..np).map(|k| b.q(k, i)).sum();
            columns = columns.max((col - b.boundary(i, i)).abs());
        }
        weights = weights.max((b.weights().iter().sum::<f64>() - 2.0).abs());
        let u: Vec<f64> = (0..np).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..np).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = b.inner_product(&u, &b.differentiate(&v)).unwrap()
            + b.inner_product(&b.differentiate(&u), &v).unwrap();
        ibp = ibp.max((lhs - (u[n] * v[n] - u[0] * v[0])).abs());
    }
    report
        .checks
        .push(Check::below("spectral: max|Q+Q^T-B|, N=1..15", sbp, 1e-12));
    report
        .checks
        .push(Check::below("spectral: D row sums", rows, 1e-13));
    report
        .checks
        .push(Check::below("spectral: Q diagonal rule", corners, 1e-12));
    report
        .checks
        .push(Check::below("spectral: Q column sums", columns, 1e-12));
    report
        .checks
        .push(Check::below("spectral: sum of weights - 2", weights, 1e-13));
    report.checks.push(Check::below(
        "spectral: discrete integration by parts",
        ibp,
        1e-12,
    ));

    let mut exact: f64 = 0.0;
    let mut remainder: f64 = 0.0;
    let mut sharp = f64::INFINITY;
    for n in 1..=10 {
        let b = NodalBasis::new(n).unwrap();
        for p in 0..=2 * n {
            let vals: Vec<f64> = b.nodes().iter().map(|x| x.powi(p as i32)).collect();
            let q = b.quadrature(&vals).unwrap();
            let ex = if p % 2 == 0 {
                2.0 / (p as f64 + 1.0)
            } else {
                0.0
            };
            if p < 2 * n {
                exact = exact.max((q - ex).abs());
            } else {
                let predicted = lgl_remainder(n);
                remainder = remainder.max((q - ex - predicted).abs() / predicted);
                sharp = sharp.min(q - ex);
            }
        }
    }
    report.checks.push(Check::below(
        "spectral: quadrature degree <= 2N-1",
        exact,
        1e-12,
    ));
    report.checks.push(Check::below(
        "spectral: degree-2N error vs LGL remainder",
        remainder,
        1e-10,
    ));
    report.checks.push(Check::above(
        "spectral: degree-2N error, N <= 10",
        sharp,
        1e-8,
    ));
    let b1 = NodalBasis::new(1).unwrap();
    let q = b1.quadrature(&[1.0, 1.0]).unwrap();
    report.checks.push(Check::below(
        "spectral: N=1 x^2 quadrature error - 4/3",
        (q - 2.0 / 3.0 - 4.0 / 3.0).abs(),
        1e-12,
    ));
    let c = b1.aliasing_coefficients(&[1.0, 1.0]).unwrap();
    report.checks.push(Check::below(
        "spectral: N=1 aliased C0 - 1",
        (c[0] - 1.0).abs(),
        1e-12,
    ));
}

/// LGL quadrature error for `x^(2N)`:
/// `(N+1) N^3 2^(2N+1) ((N-1)!)^4 / ((2N+1) ((2N)!)^2)`.
pub fn lgl_remainder(n: usize) -> f64 {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let nf = n as f64;
    (nf + 1.0) * nf.powi(3) * 2f64.powi(2 * n as i32 + 1) * fact(n - 1).powi(4)
        / ((2.0 * nf + 1.0) * fact(2 * n).powi(2))
}

fn geometry_checks(report: &mut Report, rng: &mut ChaCha8Rng) {
    let basis = NodalBasis::new(4).unwrap();
    let mesh = warped_box_mesh([4; 3], 0.05);
    let mut curl: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for shape in &mesh.shapes {
        let x = shape.sample(&basis);
        let gc = ElementGeometry::new(&basis, x.clone(), MetricForm::Curl).unwrap();
        let gx = ElementGeometry::new(&basis, x, MetricForm::CrossProduct).unwrap();
        curl = curl.max(metric_identity_residual(&basis, &gc.ja));
        cross = cross.max(metric_identity_residual(&basis, &gx.ja));
    }
    report.checks.push(Check::below(
        "geometry: curl metric identities, warped 4^3 N=4",
        curl,
        1e-12,
    ));
    report.checks.push(Check::above(
        "geometry: cross-product / curl residual ratio",
        cross / curl.max(1e-300),
        1e3,
    ));

    let geoms = mesh.build_geometry(&basis, MetricForm::Curl).unwrap();
    report.checks.push(Check::below(
        "geometry: surface element mismatch across faces",
        mesh.surface_mismatch(&basis, &geoms),
        1e-10,
    ));

    // affine maps: straight-sided faces reproduced, both metric forms agree
    let mut reproduce: f64 = 0.0;
    let mut agree: f64 = 0.0;
    for _ in 0..5 {
        let a: [[f64; 3]; 3] = std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.3..0.3))
        });
        let shift: Vec3 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let map = move |xi: Vec3| -> Vec3 {
            std::array::from_fn(|i| shift[i] + (0..3).map(|j| a[i][j] * xi[j]).sum::<f64>())
        };
        let fd = FaceDefinition::from_map(4, map).unwrap();
        let x = fd.sample_volume(&basis);
        let mut k = 0;
        for &z in basis.nodes() {
            for &y in basis.nodes() {
                for &xx in basis.nodes() {
                    let m = map([xx, y, z]);
                    reproduce =
                        reproduce.max((0..3).map(|c| (m[c] - x[k][c]).abs()).fold(0.0, f64::max));
                    k += 1;
                }
            }
        }
        let gc = ElementGeometry::new(&basis, x.clone(), MetricForm::Curl).unwrap();
        let gx = ElementGeometry::new(&basis, x, MetricForm::CrossProduct).unwrap();
        for i in 0..3 {
            for (p, q) in gc.ja[i].iter().zip(&gx.ja[i]) {
                agree = agree.max((0..3).map(|c| (p[c] - q[c]).abs()).fold(0.0, f64::max));
            }
        }
    }
    report.checks.push(Check::below(
        "geometry: transfinite map reproduces affine maps",
        reproduce,
        1e-13,
    ));
    report.checks.push(Check::below(
        "geometry: curl = cross product on affine maps",
        agree,
        1e-12,
    ));
}

fn flux_checks(report: &mut Report, rng: &mut ChaCha8Rng) {
    let gas = GasModel::default();
    let fluxes: [&dyn TwoPointFlux; 2] = [&CentralFlux, &EcFlux];
    let mut sym = [0.0f64; 2];
    let mut cons = [0.0f64; 2];
    let mut tadmor: f64 = 0.0;
    let mut llf_sign = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let a = NodeState::new(random_state(rng, &gas), &gas).unwrap();
        let b = NodeState::new(random_state(rng, &gas), &gas).unwrap();
        for (k, f) in fluxes.iter().enumerate() {
            let ab = f.cartesian(&a, &b, &gas);
            let ba = f.cartesian(&b, &a, &gas);
            let aa = f.cartesian(&a, &a, &gas);
            let fa = a.flux();
            for d in 0..3 {
                for c in 0..5 {
                    let scale = ab[d][c].abs().max(1.0);
                    sym[k] = sym[k].max((ab[d][c] - ba[d][c]).abs() / scale);
                    cons[k] = cons[k].max((aa[d][c] - fa[d][c]).abs() / fa[d][c].abs().max(1.0));
                }
            }
        }
        let wa = a.entropy_vars(&gas).0;
        let wb = b.entropy_vars(&gas).0;
        let ec = EcFlux.cartesian(&a, &b, &gas);
        for d in 0..3 {
            let mut lhs = 0.0;
            let mut scale = 0.0;
            for c in 0..5 {
                lhs += (wb[c] - wa[c]) * ec[d][c];
                scale += ((wb[c] - wa[c]) * ec[d][c]).abs();
            }
            let psi = b.u[1 + d] - a.u[1 + d];
            scale += psi.abs();
            tadmor = tadmor.max((lhs - psi).abs() / scale.max(1e-300));
        }
        let n = {
            let v: Vec3 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            v.map(|c| c / l)
        };
        let with = surface_flux_advective(&a, &b, &n, &gas, &EcFlux, Dissipation::Llf);
        let without = surface_flux_advective(&a, &b, &n, &gas, &EcFlux, Dissipation::None);
        let s: f64 = (0..5)
            .map(|c| (wb[c] - wa[c]) * (with[c] - without[c]))
            .sum();
        llf_sign = llf_sign.max(s);
    }
    for (k, name) in ["central", "ec"].iter().enumerate() {
        report.checks.push(Check::below(
            format!("fluxes: {name} symmetry"),
            sym[k],
            1e-12,
        ));
        report.checks.push(Check::below(
            format!("fluxes: {name} consistency"),
            cons[k],
            1e-12,
        ));
    }
    report.checks.push(Check::below(
        "fluxes: Tadmor condition, scaled residual",
        tadmor,
        1e-11,
    ));
    report.checks.push(Check::below(
        "fluxes: jump(w)^T llf dissipation",
        llf_sign,
        0.0,
    ));

    let mut bounds = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let a = 10f64.powf(rng.gen_range(-3.0..3.0));
        let b = a * 10f64.powf(rng.gen_range(-6.0..6.0));
        let m = log_mean(a, b).unwrap();
        let lo = a.min(b);
        let hi = 0.5 * (a + b);
        bounds = bounds.max((lo - m) / m).max((m - hi) / m);
    }
    report.checks.push(Check::below(
        "fluxes: min <= log mean <= arithmetic mean",
        bounds,
        1e-15,
    ));
}

fn solver_checks(report: &mut Report, rng: &mut ChaCha8Rng) {
    let gas = GasModel::default();
    let mesh = warped_box_mesh([3; 3], 0.08);
    let opts = |flux, dissipation, viscous| SolverOptions {
        volume_flux: flux,
        dissipation,
        viscous,
        ..SolverOptions::default()
    };
    let free = Case::new(CaseKind::Freestream, gas);
    let wave = Case::new(CaseKind::DensityWave, gas);
    let d = Discretization::new(
        &mesh,
        4,
        gas,
        opts(VolumeFlux::Ec, Dissipation::Llf, false),
        MetricForm::Curl,
    )
    .unwrap();
    let r = d
        .residual(&d.initial_field(0.0, |x, t| free.exact(x, t)))
        .unwrap();
    report.checks.push(Check::below(
        "solver: free-stream residual, warped N=4",
        max_abs(&r),
        1e-11,
    ));

    for (name, dissipation, viscous) in [
        ("ec/none", Dissipation::None, false),
        ("ec/llf", Dissipation::Llf, false),
        ("ec/llf viscous", Dissipation::Llf, true),
    ] {
        let d = Discretization::new(
            &mesh,
            3,
            gas,
            opts(VolumeFlux::Ec, dissipation, viscous),
            MetricForm::Curl,
        )
        .unwrap();
        let mut u = d.initial_field(0.0, |x, t| wave.exact(x, t));
        // perturb so that interfaces carry jumps
        for v in u.values_mut() {
            v[0] += 0.01 * rng.gen_range(-1.0..1.0);
        }
        let r = d.residual(&u).unwrap();
        let (rate, scale) = d.entropy_rate_with_scale(&u, &r).unwrap();
        let totals = d.totals(&crate::solver::SolutionField::from_values(3, r, 0.0).unwrap());
        let total = totals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        report.checks.push(Check::below(
            format!("solver: conservation of dU/dt totals, {name}"),
            total,
            1e-12,
        ));
        if dissipation == Dissipation::None {
            report.checks.push(Check::below(
                format!("solver: |entropy rate| / scale, {name}"),
                rate.abs() / scale,
                1e-11,
            ));
        } else {
            report.checks.push(Check::below(
                format!("solver: entropy rate, {name}"),
                rate,
                1e-12,
            ));
        }
    }

    // central split form equals the standard divergence on affine elements
    let basis = NodalBasis::new(4).unwrap();
    let fd = FaceDefinition::from_map(1, |xi: Vec3| {
        [
            1.2 * xi[0] + 0.1 * xi[1],
            0.8 * xi[1] - 0.2 * xi[2],
            0.9 * xi[2] + 0.1 * xi[0],
        ]
    })
    .unwrap();
    let geo = ElementGeometry::new(&basis, fd.sample_volume(&basis), MetricForm::Curl).unwrap();
    let coeffs: Vec<f64> = (0..12).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let states: Vec<NodeState> = geo
        .x
        .iter()
        .map(|x| {
            let poly = |k: usize| {
                coeffs[k] * x[0] + coeffs[k + 1] * x[1] * x[1] + coeffs[k + 2] * x[0] * x[2]
            };
            let prim = Primitive {
                rho: 1.0 + poly(0),
                v: [0.3 + poly(3), -0.2 + poly(6), 0.1 + poly(9)],
                p: 1.0 + 0.5 * poly(0),
            };
            NodeState::new(prim.to_conservative(&gas), &gas).unwrap()
        })
        .collect();
    let split = split_divergence(&basis, &geo, &states, &CentralFlux, &gas);
    let std = standard_divergence(&basis, &geo, &states);
    let scale = max_abs(&std).max(1.0);
    let diff = split
        .iter()
        .zip(&std)
        .flat_map(|(a, b)| (0..5).map(move |c| (a[c] - b[c]).abs()))
        .fold(0.0, f64::max);
    report.checks.push(Check::below(
        "solver: central split form = standard form",
        diff / scale,
        1e-12,
    ));
}
