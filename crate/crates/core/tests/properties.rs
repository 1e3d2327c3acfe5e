use gridmodel::config::GridConfig;
use gridmodel::emtsim::EmtModel;
use gridmodel::frames::{rotate_to_global, FrameAngle, PolyLti};
use gridmodel::linalg::{identity, rel_diff, CMat};
use gridmodel::machines::*;
use gridmodel::network::*;
use gridmodel::sysmodel::*;
use gridmodel::system::System;
use gridmodel::{Lti, C64};
use proptest::prelude::*;

const W0: f64 = 2.0 * std::f64::consts::PI * 60.0;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn mat(rows: usize, cols: usize, v: &[f64]) -> CMat<f64> {
    CMat::from_fn(rows, cols, |r, k| {
        let i = 2 * (r * cols + k);
        c(v[i % v.len()], v[(i + 1) % v.len()])
    })
}

/// Random system with `A` shifted well into the left half plane.
fn lti(n: usize, p: usize, m: usize, v: &[f64], dscale: f64) -> Lti {
    let a = mat(n, n, v) - identity(n) * c(6.0, 0.0);
    let b = mat(n, m, &v[8..]);
    let cc = mat(p, n, &v[14..]);
    let d = mat(p, m, &v[20..]) * c(dscale, 0.0);
    Lti::new(a, b, cc, d).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 64)
}

fn points() -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((0.1f64..5.0, -50.0f64..50.0).prop_map(|(a, b)| c(a, b)), 20)
}

fn same_multiset(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.len() == b.len() && match_poles(a, b).iter().all(|(x, y)| (x - y).norm() < tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn composition_matches_pointwise_arithmetic(v in coeffs(), w in coeffs(), s in points(), n in 1usize..4, k in 1usize..4) {
        let g = lti(n, 2, 2, &v, 1.0);
        let h = lti(k, 2, 2, &w, 0.3);
        let ser = g.series(&h).unwrap();
        let sum = g.add(&h).unwrap();
        let fb = g.feedback(&h, -1).unwrap();
        let sq = lti(n, 2, 2, &v, 1.0);
        let dd = sq.d() + identity(2) * c(3.0, 0.0);
        let sq = Lti::new(sq.a().clone(), sq.b().clone(), sq.c().clone(), dd).unwrap();
        let inv = sq.inverse().unwrap();
        for &s in &s {
            let (gs, hs) = (g.evaluate(s).unwrap(), h.evaluate(s).unwrap());
            prop_assert!(rel_diff(&ser.evaluate(s).unwrap(), &(&gs * &hs)) < 1e-9);
            prop_assert!(rel_diff(&sum.evaluate(s).unwrap(), &(&gs + &hs)) < 1e-9);
            let loop_m = identity(2) + &hs * &gs;
            let want = &gs * loop_m.try_inverse().unwrap();
            prop_assert!(rel_diff(&fb.evaluate(s).unwrap(), &want) < 1e-9);
            let want = sq.evaluate(s).unwrap().try_inverse().unwrap();
            prop_assert!(rel_diff(&inv.evaluate(s).unwrap(), &want) < 1e-9);
        }
    }

    #[test]
    fn double_inverse_keeps_poles(v in coeffs(), n in 1usize..5) {
        let g = lti(n, 2, 2, &v, 1.0);
        let dd = g.d() + identity(2) * c(3.0, 0.0);
        let g = Lti::new(g.a().clone(), g.b().clone(), g.c().clone(), dd).unwrap();
        let back = g.inverse().unwrap().inverse().unwrap();
        prop_assert!(same_multiset(&back.poles().unwrap(), &g.poles().unwrap(), 1e-8));
    }

    #[test]
    fn pm_form_of_real_system_is_conjugate_symmetric(v in coeffs(), s in points(), n in 1usize..5) {
        let re: Vec<f64> = v.iter().flat_map(|&x| [x, 0.0]).collect();
        let g = lti(n, 2, 2, &re, 1.0);
        let pm = g.real_to_pm().unwrap();
        for &s in &s {
            let a = pm.evaluate(s).unwrap();
            let b = pm.evaluate(s.conj()).unwrap();
            prop_assert!((b[(1, 1)] - a[(0, 0)].conj()).norm() < 1e-10 * (1.0 + a[(0, 0)].norm()));
            prop_assert!((b[(1, 0)] - a[(0, 1)].conj()).norm() < 1e-10 * (1.0 + a[(0, 1)].norm()));
            prop_assert!(rel_diff(&pm.pm_to_real().unwrap().evaluate(s).unwrap(), &g.evaluate(s).unwrap()) < 1e-12);
        }
        let p = pm.poles().unwrap();
        let conj: Vec<C64> = p.iter().map(|x| x.conj()).collect();
        prop_assert!(same_multiset(&p, &conj, 1e-8));
    }

    #[test]
    fn rotation_round_trip_and_poles(v in coeffs(), s in points(), xi in -3.0f64..3.0, n in 1usize..4) {
        let g = lti(n, 2, 2, &v, 1.0);
        let r = rotate_to_global(&g, FrameAngle::new(xi).unwrap()).unwrap();
        let back = rotate_to_global(&r, FrameAngle::new(-xi).unwrap()).unwrap();
        for &s in &s {
            prop_assert!(rel_diff(&back.evaluate(s).unwrap(), &g.evaluate(s).unwrap()) < 1e-12);
        }
        prop_assert_eq!(r.poles().unwrap(), g.poles().unwrap());
    }
}

fn sg_case(r: f64, x: f64, h: f64, d: f64, p: f64, q: f64) -> Option<(SgParams, SgOperating)> {
    let params = SgParams { r, l: x / W0, j: 2.0 * h / (W0 * W0), d: d / (W0 * W0), w0: W0 };
    // terminal at 1 pu, generation (p, q) means current into the machine is -(p - jq)
    let i0 = -c(p, -q);
    sg_init(&params, c(1.0, 0.0), i0).ok().map(|(op, _)| (params, op))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sg_embedding_adds_law_states_and_m_roots(
        r in 0.001f64..0.05, x in 0.1f64..0.5, h in 0.1f64..8.0, d in 0.0f64..30.0,
        p in -0.9f64..0.9, q in -0.5f64..0.5,
    ) {
        let Some((params, op)) = sg_case(r, x, h, d, p, q) else { return Ok(()) };
        let law = sg_frame_law(&params, &op).unwrap();
        let swing = sg_swing_impedance_exact(&params, &op);
        let steady = sg_steady_impedance(&params, &op).unwrap();
        prop_assert_eq!(steady.g().state_dim(), swing.g().state_dim() + law.k().state_dim());
        let poles = steady.poles().unwrap();
        for root in sg_m_roots(&params, &op) {
            let near = poles.iter().map(|z| (z - root).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(near < 1e-6 * (1.0 + root.norm()), "root {} missing", root);
        }
        let rhp = sg_m_roots(&params, &op).iter().filter(|z| z.re > 0.0).count();
        prop_assert_eq!(rhp, usize::from(op.i_q0 * op.psi_f > 0.0));
    }

    #[test]
    fn sg_frame_term_has_rank_one(
        r in 0.001f64..0.05, x in 0.1f64..0.5, h in 0.1f64..8.0, d in 0.0f64..30.0,
        p in -0.9f64..0.9, q in -0.5f64..0.5, s in points(),
    ) {
        let Some((params, op)) = sg_case(r, x, h, d, p, q) else { return Ok(()) };
        let swing = sg_swing_impedance(&params).without_speed_input().unwrap();
        let steady = sg_steady_impedance_flux_only(&params, &op).unwrap();
        for &s in &s {
            let diff = steady.evaluate(s).unwrap() - swing.evaluate(s).unwrap();
            let det = diff[(0, 0)] * diff[(1, 1)] - diff[(0, 1)] * diff[(1, 0)];
            let scale = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(det.norm() < 1e-9 * scale * scale + 1e-300);
        }
    }

    #[test]
    fn gfl_models_have_real_coefficients(
        p in 0.05f64..0.9, q in -0.4f64..0.4, pll in 2.0f64..40.0, dc in 2.0f64..40.0, cur in 100.0f64..600.0,
    ) {
        let params = GflParams::from_bandwidths(0.1 / W0, 0.005, 0.02, 1.0, W0, GflBandwidths { pll_hz: pll, dc_hz: dc, current_hz: cur });
        let (op, _) = gfl_init(&params, c(1.0, 0.0), -c(p, -q)).unwrap();
        let y = gfl_steady_admittance(&params, &op).unwrap().pm_to_real().unwrap();
        for m in [y.a(), y.b(), y.c(), y.d()] {
            let scale = 1.0 + m.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(m.iter().all(|z| z.im.abs() < 1e-12 * scale));
        }
    }
}

fn random_net(v: &[f64]) -> NetworkGraph {
    let x = |k: usize| 0.05 + 0.5 * v[k].abs();
    let r = |k: usize| 0.1 * v[k].abs();
    NetworkGraph {
        n_buses: 3,
        branches: vec![
            Branch { from: 1, to: 2, r: r(0), l: x(1) / W0 },
            Branch { from: 2, to: 3, r: r(2), l: x(3) / W0 },
            Branch { from: 1, to: 3, r: r(4), l: x(5) / W0 },
        ],
        shunts: vec![
            Shunt { bus: 1, r: Some(1.0 + 10.0 * v[6].abs()), c: 0.1 * v[7].abs() / W0 },
            Shunt { bus: 2, r: None, c: (0.01 + 0.1 * v[8].abs()) / W0 },
            Shunt { bus: 3, r: Some(1.0 + 10.0 * v[9].abs()), c: 0.0 },
        ],
        rl_loads: vec![RlLoad { bus: 3, r: 0.5 + v[10].abs(), l: (0.2 + v[11].abs()) / W0 }],
        w0: W0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn passive_network_is_passive(v in coeffs(), f in prop::collection::vec(-200.0f64..200.0, 10)) {
        let y = build_nodal_admittance(&random_net(&v)).unwrap();
        for f in f {
            let m = y.evaluate(c(0.0, 2.0 * std::f64::consts::PI * f)).unwrap();
            let herm = &m + m.adjoint();
            let evs = gridmodel::eig::eigenvalues(&herm).unwrap();
            let scale = herm.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(evs.iter().all(|e| e.re > -1e-9 * scale));
        }
    }

    #[test]
    fn network_poles_enumerate_inductive_elements(v in coeffs()) {
        let net = random_net(&v);
        let mut want = Vec::new();
        for (r, l) in net.branches.iter().map(|b| (b.r, b.l)).chain(net.rl_loads.iter().map(|x| (x.r, x.l))) {
            want.push(c(-r / l, -W0));
            want.push(c(-r / l, W0));
        }
        let got = build_nodal_admittance(&net).unwrap().poles().unwrap();
        prop_assert!(same_multiset(&got, &want, 1e-8 * W0));
    }

    #[test]
    fn power_flow_commutes_with_rotation(v in coeffs(), phi in -3.0f64..3.0, p2 in -0.5f64..0.5, p3 in -0.5f64..0.2, q3 in -0.2f64..0.2) {
        let net = random_net(&v);
        let specs = |th: f64| vec![
            BusSpec { bus: 1, role: BusRole::Slack { v: 1.0, theta: th } },
            BusSpec { bus: 2, role: BusRole::Pv { p: p2, v: 1.0 } },
            BusSpec { bus: 3, role: BusRole::Pq { p: p3, q: q3 } },
        ];
        let Ok(a) = power_flow(&net, &specs(0.0)) else { return Ok(()) };
        let b = power_flow(&net, &specs(phi)).unwrap();
        for k in 0..3 {
            prop_assert!((b.v[k] - a.v[k] * C64::from_polar(1.0, phi)).norm() < 1e-8);
            prop_assert!((b.power(k) - a.power(k)).norm() < 1e-8);
        }
    }

    #[test]
    fn dc_value_is_static_ybus(v in coeffs()) {
        let net = random_net(&v);
        let y = build_nodal_admittance(&net).unwrap().evaluate(c(0.0, 0.0)).unwrap();
        let yb = net.static_ybus();
        for k in 0..3 {
            for l in 0..3 {
                prop_assert!((y[(2 * k, 2 * l)] - yb[(k, l)]).norm() < 1e-9 * (1.0 + yb[(k, l)].norm()));
                prop_assert!((y[(2 * k + 1, 2 * l + 1)] - yb[(k, l)].conj()).norm() < 1e-9 * (1.0 + yb[(k, l)].norm()));
            }
        }
    }
}

/// Two synchronous generators and a converter on a three-bus mesh.
fn grid(x12: f64, x23: f64, h2: f64, p2: f64, p3: f64, q3: f64, pll: f64) -> GridConfig {
    GridConfig::from_json_str(&format!(
        r#"{{
          "base": {{"s_base_va": 1e8, "v_base_v": 2.3e5, "f0_hz": 60.0}},
          "network": {{"n_buses": 3,
            "branches": [{{"from": 1, "to": 2, "r": 0.01, "x": {x12}}},
                         {{"from": 2, "to": 3, "r": 0.01, "x": {x23}}},
                         {{"from": 1, "to": 3, "r": 0.01, "x": 0.15}}],
            "shunts": [{{"bus": 1, "b": 0.05}}, {{"bus": 2, "r": 50.0, "b": 0.05}}, {{"bus": 3, "b": 0.05}}],
            "loads": [{{"bus": 2, "kind": "shunt_rl", "r": 2.0, "x": 1.0}}]}},
          "buses": [{{"bus": 1, "role": "slack", "v": 1.0, "theta": 0.0}},
                    {{"bus": 2, "role": "pv", "p": {p2}, "v": 1.0}},
                    {{"bus": 3, "role": "pq", "p": {p3}, "q": {q3}}}],
          "machines": [{{"kind": "sg", "bus": 1, "r": 0.005, "x": 0.2, "h": 5.0, "d": 20.0}},
                       {{"kind": "sg", "bus": 2, "r": 0.01, "x": 0.3, "h": {h2}, "d": 5.0}},
                       {{"kind": "gfl", "bus": 3, "rf": 0.005, "xf": 0.1, "cdc": 0.02,
                         "bandwidth": {{"pll_hz": {pll}, "dc_hz": 15.0, "current_hz": 250.0}}}}]
        }}"#
    ))
    .unwrap()
}

fn grid_strategy() -> impl Strategy<Value = GridConfig> {
    (0.1f64..0.6, 0.05f64..0.3, 0.3f64..6.0, -0.3f64..0.6, 0.1f64..0.8, -0.3f64..0.3, 5.0f64..30.0)
        .prop_map(|(a, b, h, p2, p3, q3, pll)| grid(a, b, h, p2, p3, q3, pll))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operating_point_is_an_equilibrium(cfg in grid_strategy()) {
        let Ok(m) = EmtModel::from_config(&cfg) else { return Ok(()) };
        let mut dx = vec![0.0; m.n_states()];
        m.rhs(0.0, m.initial_state(), &mut dx);
        let res = dx.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(res < 1e-8, "residual {:e}", res);
    }

    #[test]
    fn closed_loop_pole_sets_agree(cfg in grid_strategy(), s in points()) {
        let Ok(sys) = System::build(&cfg) else { return Ok(()) };
        let primal = build_model(&sys, Formulation::Primal).unwrap();
        let dual = build_model(&sys, Formulation::Dual).unwrap();
        let eig = primal.eigenvalues().unwrap();
        prop_assert!(same_multiset(&primal.zhat().poles().unwrap(), &eig, 1e-8 * (1.0 + W0)));
        prop_assert!(same_multiset(&primal.yhat().poles().unwrap(), &eig, 1e-8 * (1.0 + W0)));
        let conj: Vec<C64> = eig.iter().map(|x| x.conj()).collect();
        prop_assert!(pole_set_distance(&eig, &conj) < 1e-6);
        prop_assert!(pole_set_distance(&eig, &dual.eigenvalues().unwrap()) < 1e-6);
        let (zp, zd) = (primal.zhat(), dual.zhat());
        for &s in &s {
            prop_assert!(rel_diff(&zp.evaluate(s).unwrap(), &zd.evaluate(s).unwrap()) < 1e-6);
        }
    }
}

#[test]
fn poly_lti_rejects_mismatched_shapes() {
    let g = Lti::zero(2, 2);
    assert!(PolyLti::new(CMat::zeros(3, 3), g).is_err());
}
