use dgsem_core::cases::{Case, CaseKind};
use dgsem_core::fluxes::{CentralFlux, Dissipation, NodeState, VolumeFlux};
use dgsem_core::geometry::{
    metric_identity_residual, ElementGeometry, FaceDefinition, FaceId, MetricForm, Vec3,
};
use dgsem_core::mesh::{
    audit, box_mesh, parse_mesh, warp, warped_box_mesh, write_mesh, ElementShape, Mesh, MeshError,
};
use dgsem_core::physics::{GasModel, Primitive};
use dgsem_core::solver::{
    lsrk_step, max_abs, split_divergence, standard_divergence, Discretization, SolverOptions,
};
use dgsem_core::spectral::NodalBasis;
use proptest::prelude::*;

fn affine() -> impl Strategy<Value = ([[f64; 3]; 3], Vec3)> {
    (
        prop::array::uniform3(prop::array::uniform3(-0.3f64..0.3)),
        prop::array::uniform3(-2.0f64..2.0),
    )
        .prop_map(|(mut a, s)| {
            for i in 0..3 {
                a[i][i] += 1.0;
            }
            (a, s)
        })
}

fn apply(a: [[f64; 3]; 3], s: Vec3) -> impl Fn(Vec3) -> Vec3 + Clone {
    move |x| std::array::from_fn(|i| s[i] + (0..3).map(|j| a[i][j] * x[j]).sum::<f64>())
}

fn curved(amp: f64, a: [[f64; 3]; 3], s: Vec3) -> impl Fn(Vec3) -> Vec3 + Clone {
    let f = apply(a, s);
    move |x| {
        let y = f(x);
        let bump = amp * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) * (1.0 - x[2] * x[2]);
        [
            y[0] + bump * (1.3 * x[1]).sin(),
            y[1] + bump * (0.7 * x[2]).cos(),
            y[2] + bump * x[0],
        ]
    }
}

fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
    (0..3).all(|c| (a[c] - b[c]).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn curl_and_cross_metrics_agree_on_affine_maps(m in affine(), n in 1usize..7) {
        let basis = NodalBasis::new(n).unwrap();
        let fd = FaceDefinition::from_map(1, apply(m.0, m.1)).unwrap();
        let x = fd.sample_volume(&basis);
        let gc = ElementGeometry::new(&basis, x.clone(), MetricForm::Curl).unwrap();
        let gx = ElementGeometry::new(&basis, x, MetricForm::CrossProduct).unwrap();
        for i in 0..3 {
            for (p, q) in gc.ja[i].iter().zip(&gx.ja[i]) {
                prop_assert!(close(p, q, 1e-12));
            }
        }
        let j0 = gc.jacobian[0];
        prop_assert!(gc.jacobian.iter().all(|j| (j - j0).abs() < 1e-12));
    }

    #[test]
    fn curl_metrics_close_every_element_surface(m in affine(), amp in 0.0f64..0.15, n in 2usize..7) {
        let basis = NodalBasis::new(n).unwrap();
        let fd = FaceDefinition::from_map(n, curved(amp, m.0, m.1)).unwrap();
        let geo = ElementGeometry::new(&basis, fd.sample_volume(&basis), MetricForm::Curl).unwrap();
        prop_assert!(metric_identity_residual(&basis, &geo.ja) < 1e-12);
        let w = basis.weights();
        let np = n + 1;
        let mut total = [0.0; 3];
        for face in FaceId::ALL {
            let f = geo.face(face);
            for q in 0..np {
                for p in 0..np {
                    let k = p + np * q;
                    for c in 0..3 {
                        total[c] += w[p] * w[q] * f.s_hat[k] * f.normal[k][c];
                    }
                }
            }
        }
        prop_assert!(total.iter().all(|t| t.abs() < 1e-12), "{total:?}");
    }

    #[test]
    fn transfinite_faces_are_watertight(m in affine(), amp in 0.0f64..0.15, deg in 1usize..6) {
        let fd = FaceDefinition::from_map(deg, curved(amp, m.0, m.1)).unwrap();
        prop_assert!(fd.edge_mismatch() < 1e-13);
        prop_assert!(fd.check_watertight(1e-12).is_ok());
        let corners = fd.corners();
        prop_assert!(close(&fd.transfinite_map([-1.0, -1.0, -1.0]), &corners[0], 1e-13));
        // corners run counter-clockwise around the bottom, then the top
        prop_assert!(close(&fd.transfinite_map([1.0, 1.0, -1.0]), &corners[2], 1e-13));
        prop_assert!(close(&fd.transfinite_map([-1.0, 1.0, 1.0]), &corners[7], 1e-13));
    }

    #[test]
    fn central_split_form_matches_standard_form(
        m in affine(),
        c in prop::collection::vec(-0.1f64..0.1, 15),
        n in 1usize..7,
    ) {
        let gas = GasModel::default();
        let basis = NodalBasis::new(n).unwrap();
        let fd = FaceDefinition::from_map(1, apply(m.0, m.1)).unwrap();
        let geo = ElementGeometry::new(&basis, fd.sample_volume(&basis), MetricForm::Curl).unwrap();
        let states: Vec<NodeState> = geo
            .x
            .iter()
            .map(|x| {
                let poly = |k: usize| c[k] * x[0].sin() + c[k + 1] * x[1].cos() + c[k + 2] * (x[0] * x[2]).sin();
                let prim = Primitive { rho: 1.0 + poly(0), v: [poly(3), poly(6), poly(9)], p: 1.0 + poly(12) };
                NodeState::new(prim.to_conservative(&gas), &gas).unwrap()
            })
            .collect();
        let split = split_divergence(&basis, &geo, &states, &CentralFlux, &gas);
        let std = standard_divergence(&basis, &geo, &states);
        // roundoff grows with the norm of D, roughly N^2
        let tol = 1e-13 * (n * n) as f64 * max_abs(&std).max(1.0);
        for (a, b) in split.iter().zip(&std) {
            for k in 0..5 {
                prop_assert!((a[k] - b[k]).abs() < tol, "{} {} {tol}", a[k], b[k]);
            }
        }
    }
}

#[test]
fn warped_mesh_survives_a_file_round_trip() {
    let mesh = warped_box_mesh([2; 3], 0.06);
    let text = write_mesh(&mesh, 6).unwrap();
    let back = parse_mesh(&text).unwrap();
    assert_eq!(back.len(), 8);
    assert_eq!(back.topology, mesh.topology);
    let a = audit(&back, 4).unwrap();
    assert!(a.max_metric_residual() < 1e-12);
    assert!(a.surface_mismatch < 1e-10);
    assert!(a.elements.iter().all(|e| e.jacobian_min > 0.0));
}

#[test]
fn curved_file_mesh_runs_free_stream() {
    let mesh = warped_box_mesh([2; 3], 0.06);
    let back = parse_mesh(&write_mesh(&mesh, 4).unwrap()).unwrap();
    let gas = GasModel::default();
    let d = Discretization::new(&back, 4, gas, SolverOptions::default(), MetricForm::Curl).unwrap();
    let case = Case::new(CaseKind::Freestream, gas);
    let r = d
        .residual(&d.initial_field(0.0, |x, t| case.exact(x, t)))
        .unwrap();
    assert!(max_abs(&r) < 1e-11, "{}", max_abs(&r));
}

#[test]
fn malformed_mesh_reports_the_line() {
    let mesh = box_mesh([1; 3], [0.0; 3], [1.0; 3], [true; 3]).unwrap();
    let text = write_mesh(&mesh, 1).unwrap();
    let broken: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 4 {
                "0.0 oops 0.0".to_string()
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    match parse_mesh(&broken) {
        Err(MeshError::Parse { line, .. }) => assert_eq!(line, 5),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(parse_mesh("dgsem-mesh 2\n").is_err());
}

#[test]
fn repeated_periodic_cells_reproduce_the_single_cell() {
    let gas = GasModel::default();
    let opts = SolverOptions {
        volume_flux: VolumeFlux::Ec,
        dissipation: Dissipation::Llf,
        viscous: true,
        ..SolverOptions::default()
    };
    let wave = Case::new(CaseKind::DensityWave, gas);
    let one = box_mesh([1; 3], [0.0; 3], [1.0; 3], [true; 3]).unwrap();
    let d1 = Discretization::new(&one, 4, gas, opts, MetricForm::Curl).unwrap();
    let r1 = d1
        .residual(&d1.initial_field(0.0, |x, t| wave.exact(x, t)))
        .unwrap();
    let two = box_mesh([2, 1, 1], [0.0; 3], [2.0, 1.0, 1.0], [true; 3]).unwrap();
    let d2 = Discretization::new(&two, 4, gas, opts, MetricForm::Curl).unwrap();
    let r2 = d2
        .residual(&d2.initial_field(0.0, |x, t| wave.exact(x, t)))
        .unwrap();
    let np3 = 125;
    for e in 0..2 {
        for (a, b) in r2[e * np3..(e + 1) * np3].iter().zip(&r1) {
            for c in 0..5 {
                assert!(
                    (a[c] - b[c]).abs() < 1e-11 * (1.0 + b[c].abs()),
                    "{a:?} vs {b:?}"
                );
            }
        }
    }
    assert!(max_abs(&r1) > 1e-2);
}

#[test]
fn low_storage_rk_is_fourth_order() {
    // y' = -y + sin t, exact y = (sin t - cos t)/2 + 1.5 e^{-t}
    let exact = |t: f64| 0.5 * (t.sin() - t.cos()) + 1.5 * (-t).exp();
    let error = |steps: usize| {
        let dt = 2.0 / steps as f64;
        let mut y = [1.0];
        for s in 0..steps {
            lsrk_step::<()>(&mut y, s as f64 * dt, dt, |t, y, dy| {
                dy[0] = -y[0] + t.sin();
                Ok(())
            })
            .unwrap();
        }
        (y[0] - exact(2.0)).abs()
    };
    let (e1, e2) = (error(20), error(40));
    let order = (e1 / e2).log2();
    assert!(order > 3.8, "{order}");
}

#[test]
fn warped_geometry_keeps_periodic_surfaces_matched() {
    let mesh: Mesh = warped_box_mesh([3; 3], 0.1);
    let basis = NodalBasis::new(5).unwrap();
    let geo = mesh.build_geometry(&basis, MetricForm::Curl).unwrap();
    assert!(mesh.surface_mismatch(&basis, &geo) < 1e-10);
    // opposite faces of the unit box map onto each other by a unit shift
    for d in 0..3 {
        let mut p = [0.2, 0.3, 0.7];
        p[d] = 0.0;
        let mut q = p;
        q[d] = 1.0;
        let (a, b) = (warp(0.1, p), warp(0.1, q));
        assert!((0..3).all(|c| (b[c] - a[c] - if c == d { 1.0 } else { 0.0 }).abs() < 1e-14));
    }
    assert!(matches!(mesh.shapes[0], ElementShape::Map(_)));
}
