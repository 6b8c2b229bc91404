use dgsem_core::fluxes::{
    br1_viscous_interface, central_flux, ec_flux, kg_momentum_term, log_mean,
    surface_flux_advective, CentralFlux, Dissipation, EcFlux, NodeState, TwoPointFlux,
};
use dgsem_core::physics::{
    advective_flux, conservative_from_entropy, entropy, entropy_flux, entropy_variables,
    primitive_gradients_from_entropy, viscous_flux, Conservative, GasModel, Primitive,
};
use dgsem_core::spectral::NodalBasis;
use proptest::prelude::*;

const GAS: GasModel = GasModel {
    gamma: 1.4,
    mach: 0.3,
    prandtl: 0.72,
    reynolds: 100.0,
    mu: 1.0,
};

fn state() -> impl Strategy<Value = Conservative> {
    (
        -1.0f64..1.0,
        -1.0f64..1.0,
        prop::array::uniform3(-2.0f64..2.0),
    )
        .prop_map(|(lr, lp, v)| {
            Primitive {
                rho: 10f64.powf(lr),
                v,
                p: 10f64.powf(lp),
            }
            .to_conservative(&GAS)
        })
}

fn unit_normal() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0).prop_filter_map("nonzero", |n| {
        let m = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        (m > 1e-3).then(|| [n[0] / m, n[1] / m, n[2] / m])
    })
}

fn node(u: Conservative) -> NodeState {
    NodeState::new(u, &GAS).unwrap()
}

fn dot5(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn entropy_potential_is_momentum(u in state()) {
        let w = entropy_variables(&u, &GAS).unwrap().0;
        let f = advective_flux(&u, &GAS).unwrap();
        let fs = entropy_flux(&u, &GAS).unwrap();
        for i in 0..3 {
            let psi = dot5(&w, &f[i]) - fs[i];
            prop_assert!(rel(psi, u[1 + i]) < 1e-12, "{psi} vs {}", u[1 + i]);
        }
    }

    #[test]
    fn entropy_variables_round_trip(u in state()) {
        let w = entropy_variables(&u, &GAS).unwrap();
        let back = conservative_from_entropy(&w, &GAS).unwrap();
        for c in 0..5 {
            prop_assert!(rel(back[c], u[c]) < 1e-12);
        }
    }

    #[test]
    fn entropy_is_convex_along_segments(a in state(), b in state(), t in 0.05f64..0.95) {
        let mid: Conservative = std::array::from_fn(|c| (1.0 - t) * a[c] + t * b[c]);
        let lhs = entropy(&mid, &GAS).unwrap();
        let rhs = (1.0 - t) * entropy(&a, &GAS).unwrap() + t * entropy(&b, &GAS).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn viscous_flux_dissipates_entropy(
        u in state(),
        g in prop::array::uniform3(prop::array::uniform5(-3.0f64..3.0)),
    ) {
        let w = entropy_variables(&u, &GAS).unwrap();
        let grads = primitive_gradients_from_entropy(&w, &g, &GAS);
        let v = [u[1] / u[0], u[2] / u[0], u[3] / u[0]];
        let fv = viscous_flux(&v, &grads, &GAS);
        let q: f64 = (0..3).map(|d| dot5(&g[d], &fv[d])).sum();
        let scale: f64 = (0..3).map(|d| dot5(&g[d], &g[d])).sum::<f64>() * (1.0 + dot5(&w.0, &w.0));
        prop_assert!(q >= -1e-12 * scale, "{q}");
    }

    #[test]
    fn two_point_fluxes_are_symmetric_and_consistent(a in state(), b in state()) {
        for flux in [central_flux, ec_flux] {
            let ab = flux(&a, &b, &GAS).unwrap();
            let ba = flux(&b, &a, &GAS).unwrap();
            for d in 0..3 {
                for c in 0..5 {
                    prop_assert!(rel(ab[d][c], ba[d][c]) < 1e-14);
                }
            }
            let aa = flux(&a, &a, &GAS).unwrap();
            let fa = advective_flux(&a, &GAS).unwrap();
            for d in 0..3 {
                for c in 0..5 {
                    prop_assert!(rel(aa[d][c], fa[d][c]) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ec_flux_satisfies_tadmor_condition(a in state(), b in state(), n in unit_normal()) {
        let (na, nb) = (node(a), node(b));
        let wa = na.entropy_vars(&GAS).0;
        let wb = nb.entropy_vars(&GAS).0;
        let f = EcFlux.contracted(&na, &nb, &n, &GAS);
        let jump_w: [f64; 5] = std::array::from_fn(|c| wb[c] - wa[c]);
        let psi = |u: &Conservative| u[1] * n[0] + u[2] * n[1] + u[3] * n[2];
        let lhs = dot5(&jump_w, &f);
        let rhs = psi(&b) - psi(&a);
        let scale = 1.0 + jump_w.iter().zip(&f).map(|(x, y)| (x * y).abs()).sum::<f64>();
        prop_assert!((lhs - rhs).abs() < 1e-12 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn llf_dissipation_removes_entropy(a in state(), b in state(), n in unit_normal()) {
        let (na, nb) = (node(a), node(b));
        let wa = na.entropy_vars(&GAS).0;
        let wb = nb.entropy_vars(&GAS).0;
        let jump_w: [f64; 5] = std::array::from_fn(|c| wb[c] - wa[c]);
        for vol in [&EcFlux as &dyn TwoPointFlux, &CentralFlux] {
            let plain = surface_flux_advective(&na, &nb, &n, &GAS, vol, Dissipation::None);
            let llf = surface_flux_advective(&na, &nb, &n, &GAS, vol, Dissipation::Llf);
            let diff: [f64; 5] = std::array::from_fn(|c| llf[c] - plain[c]);
            prop_assert!(dot5(&jump_w, &diff) <= 0.0);
            let direct = vol.contracted(&na, &nb, &n, &GAS);
            prop_assert!((0..5).all(|c| rel(plain[c], direct[c]) < 1e-14));
        }
        let same = surface_flux_advective(&na, &na, &n, &GAS, &EcFlux, Dissipation::Llf);
        let exact = na.normal_flux(&n);
        prop_assert!((0..5).all(|c| rel(same[c], exact[c]) < 1e-13));
    }

    #[test]
    fn contracted_flux_matches_cartesian(a in state(), b in state(), n in unit_normal()) {
        let (na, nb) = (node(a), node(b));
        for vol in [&EcFlux as &dyn TwoPointFlux, &CentralFlux] {
            let c = vol.contracted(&na, &nb, &n, &GAS);
            let f = vol.cartesian(&na, &nb, &GAS);
            for k in 0..5 {
                let expect = n[0] * f[0][k] + n[1] * f[1][k] + n[2] * f[2][k];
                prop_assert!(rel(c[k], expect) < 1e-12);
            }
        }
    }

    #[test]
    fn log_mean_is_bounded_and_monotone(a in 1e-3f64..1e3, b in 1e-3f64..1e3, bump in 1.0001f64..2.0) {
        let m = log_mean(a, b).unwrap();
        prop_assert!(m >= a.min(b) * (1.0 - 1e-15) && m <= a.max(b) * (1.0 + 1e-15));
        prop_assert!(m <= 0.5 * (a + b) * (1.0 + 1e-15));
        prop_assert!(m >= (a * b).sqrt() * (1.0 - 1e-15));
        prop_assert!(log_mean(a * bump, b).unwrap() >= m);
        prop_assert!(rel(m, log_mean(b, a).unwrap()) < 1e-15);
    }

    #[test]
    fn br1_interface_identities(
        fl in prop::array::uniform5(-5.0f64..5.0),
        fr in prop::array::uniform5(-5.0f64..5.0),
        wl in prop::array::uniform5(-5.0f64..5.0),
        wr in prop::array::uniform5(-5.0f64..5.0),
    ) {
        let (f, w) = br1_viscous_interface(&fl, &fr, &wl, &wr);
        // [[w . f]] = {{w}} . [[f]] + [[w]] . {{f}}
        let jump_wf = dot5(&wr, &fr) - dot5(&wl, &fl);
        let jf: [f64; 5] = std::array::from_fn(|c| fr[c] - fl[c]);
        let jw: [f64; 5] = std::array::from_fn(|c| wr[c] - wl[c]);
        prop_assert!((jump_wf - dot5(&w, &jf) - dot5(&jw, &f)).abs() < 1e-12);
        let (f2, w2) = br1_viscous_interface(&fr, &fl, &wr, &wl);
        prop_assert_eq!((f, w), (f2, w2));
        prop_assert_eq!(br1_viscous_interface(&fl, &fl, &wl, &wl), (fl, wl));
    }

    #[test]
    fn split_form_momentum_identity(
        n in 2usize..9,
        seed in prop::collection::vec((0.5f64..2.0, -1.0f64..1.0, -1.0f64..1.0), 9),
    ) {
        let b = NodalBasis::new(n).unwrap();
        let np = n + 1;
        let rho: Vec<f64> = seed[..np].iter().map(|s| s.0).collect();
        let u: Vec<f64> = seed[..np].iter().map(|s| s.1).collect();
        let v: Vec<f64> = seed[..np].iter().map(|s| s.2).collect();
        let states: Vec<Conservative> =
            (0..np).map(|i| [rho[i], rho[i] * u[i], rho[i] * v[i], 0.0, 3.0]).collect();
        let prod = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..np).map(f).collect() };
        let d = |x: &[f64]| b.differentiate(x);
        let d_ruv = d(&prod(&|i| rho[i] * u[i] * v[i]));
        let d_uv = d(&prod(&|i| u[i] * v[i]));
        let d_rv = d(&prod(&|i| rho[i] * v[i]));
        let d_ru = d(&prod(&|i| rho[i] * u[i]));
        let (d_r, d_u, d_v) = (d(&rho), d(&u), d(&v));
        for i in 0..np {
            let two_point: f64 = 2.0 * (0..np).map(|m| b.d(i, m) * kg_momentum_term(&states[i], &states[m])).sum::<f64>();
            let split = 0.25
                * (d_ruv[i]
                    + rho[i] * d_uv[i]
                    + u[i] * d_rv[i]
                    + v[i] * d_ru[i]
                    + u[i] * v[i] * d_r[i]
                    + rho[i] * v[i] * d_u[i]
                    + rho[i] * u[i] * d_v[i]);
            prop_assert!((two_point - split).abs() < 1e-11, "{two_point} vs {split}");
        }
    }
}

#[test]
fn log_mean_examples() {
    assert!(
        (log_mean(1.0, std::f64::consts::E).unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-15
    );
    assert_eq!(log_mean(2.0, 2.0).unwrap(), 2.0);
    let near = log_mean(1.0, 1.0 + 1e-10).unwrap();
    assert!((near - (1.0 + 5e-11)).abs() < 1e-15);
    assert!(log_mean(0.0, 1.0).is_err());
    assert!(log_mean(-1.0, 1.0).is_err());
}

#[test]
fn central_flux_example() {
    let a = Primitive::new(1.0, [1.0, 0.0, 0.0], 1.0)
        .unwrap()
        .to_conservative(&GAS);
    let b = Primitive::new(1.0, [0.0; 3], 1.0)
        .unwrap()
        .to_conservative(&GAS);
    let f = central_flux(&a, &b, &GAS).unwrap();
    let expect = [0.5, 1.5, 0.0, 0.0, 2.0];
    for c in 0..5 {
        assert!((f[0][c] - expect[c]).abs() < 1e-14, "{:?}", f[0]);
    }
}

#[test]
fn kg_term_examples() {
    let a = [1.0, 1.0, 1.0, 0.0, 3.0];
    assert_eq!(kg_momentum_term(&a, &a), 1.0);
    let b = [2.0, 0.0, 0.0, 0.0, 3.0];
    assert!((kg_momentum_term(&a, &b) - 1.5 * 0.5 * 0.5).abs() < 1e-15);
}
