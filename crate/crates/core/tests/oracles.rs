//! Reference values and cross-method equivalences.

use approx::assert_relative_eq;
use nalgebra::Matrix3;

use dicke_metrology::dicke::{
    collective_operator, ghz_state, simultaneous_probe, Axis, BlockOperator, CollectiveKind,
    DensityOperator, DickeSpace,
};
use dicke_metrology::estimation::{partial_rho, partials, qfim, GeneratorSet, QfimScenario};
use dicke_metrology::experiments::{
    default_axis, sweep_time, Scenario, SweepConfig, DEFAULT_FIELD,
};
use dicke_metrology::linalg::{self, re, C64};
use dicke_metrology::noise::{NoiseKind, NoiseSpec};
use dicke_metrology::propagation::{
    evolve, full_gkls_reference, full_hilbert_reference, AxisPolicy, DephasingMethod, FieldParams,
    Propagator,
};

fn diagonal_noise(kind: NoiseKind, gamma: f64) -> NoiseSpec {
    NoiseSpec::new(kind, gamma, default_axis()).unwrap()
}

#[test]
fn spin_three_halves_block() {
    let space = DickeSpace::new(3).unwrap();
    let jx = collective_operator(&space, CollectiveKind::X).to_dense();
    let h = 3f64.sqrt() / 2.0;
    #[rustfmt::skip]
    let expected = [
        [0.0, h,   0.0, 0.0, 0.0, 0.0],
        [h,   0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, h,   0.0, 0.0],
        [0.0, 0.0, h,   0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
        [0.0, 0.0, 0.0, 0.0, 0.5, 0.0],
    ];
    for (r, row) in expected.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            assert!((jx[(r, c)] - re(v)).norm() < 1e-12, "({r}, {c})");
        }
    }
}

#[test]
fn frozen_qfim_n4() {
    let space = DickeSpace::new(4).unwrap();
    let field = FieldParams::new(DEFAULT_FIELD).unwrap();
    let prop = Propagator::new(
        &space,
        &field,
        &diagonal_noise(NoiseKind::Markovian, 0.05),
        DephasingMethod::Rk4,
        AxisPolicy::RequireParallel,
    )
    .unwrap();
    let rho0 = simultaneous_probe(&space).unwrap().density().unwrap();
    let res = prop.evolve(&rho0, 2.0).unwrap();
    let g = GeneratorSet::new(prop.spectrum(), 2.0).unwrap();
    let q = qfim(
        &res.rho,
        &partials(&res, &g).unwrap(),
        2.0,
        QfimScenario::Simultaneous,
    )
    .unwrap();
    let expected = Matrix3::new(
        11.780610754153942,
        -2.239569910635504,
        -3.719660614654705,
        -2.239569910635504,
        11.843494388899497,
        -3.901216331070823,
        -3.719660614654705,
        -3.901216331070823,
        19.31593184500634,
    );
    assert_relative_eq!(q.entries, expected, max_relative = 1e-8);
    assert_relative_eq!(res.rho.purity(), 0.33332129407314504, max_relative = 1e-9);
}

#[test]
fn frozen_sweeps_n10() {
    let r = sweep_time(&SweepConfig {
        n: 10,
        ..SweepConfig::default()
    })
    .unwrap();
    assert_relative_eq!(r.t_opt, 1.4683215795407007, max_relative = 1e-8);
    assert_relative_eq!(r.i_min, 0.0015345648143505924, max_relative = 1e-8);
    let r = sweep_time(&SweepConfig {
        n: 10,
        kind: NoiseKind::NonMarkovian,
        scenario: Scenario::Individual,
        ..SweepConfig::default()
    })
    .unwrap();
    assert_relative_eq!(r.t_opt, 3.7487977113803876, max_relative = 1e-8);
    assert_relative_eq!(r.i_min, 0.0004054139851991491, max_relative = 1e-8);
}

#[test]
fn dicke_blocks_match_product_space() {
    let field = FieldParams::new([0.2, 0.2, 0.2]).unwrap();
    for n in [2u32, 4, 5] {
        let space = DickeSpace::new(n).unwrap();
        let probe = simultaneous_probe(&space).unwrap();
        let spec = diagonal_noise(NoiseKind::NonMarkovian, 0.3);
        let fast = evolve(
            &probe.density().unwrap(),
            &field,
            &spec,
            2.0,
            AxisPolicy::RequireParallel,
        )
        .unwrap();
        let full =
            full_hilbert_reference(n, &probe.top_sector_amplitudes(), &field, &spec, 2.0).unwrap();
        assert!(
            full.reduce(&space)
                .unwrap()
                .max_abs_diff(fast.rho.as_operator())
                < 1e-8
        );
        assert!((full.fidelity_with(&fast.rho).unwrap() - 1.0).abs() < 1e-7);
    }
}

#[test]
fn nonparallel_fallback_matches_product_space() {
    let n = 3;
    let space = DickeSpace::new(n).unwrap();
    let probe = ghz_state(&space, Axis::X);
    let spec = NoiseSpec::new(NoiseKind::Markovian, 0.1, [0.0, 0.0, 2.0]).unwrap();
    let field = FieldParams::new([0.4, -0.1, 0.2]).unwrap();
    let dicke = full_gkls_reference(&probe.density().unwrap(), &field, &spec, 1.5).unwrap();
    let full =
        full_hilbert_reference(n, &probe.top_sector_amplitudes(), &field, &spec, 1.5).unwrap();
    assert!(
        full.reduce(&space)
            .unwrap()
            .max_abs_diff(dicke.as_operator())
            < 1e-8
    );
}

fn model_state(
    prop: &Propagator,
    rho_dephased: &DensityOperator,
    field: &FieldParams,
    t: f64,
) -> BlockOperator {
    dicke_metrology::propagation::unitary(prop.space(), field, t)
        .unwrap()
        .conjugate(rho_dephased.as_operator())
}

#[test]
fn partial_derivatives_match_finite_differences() {
    let field = FieldParams::new(DEFAULT_FIELD.map(|x| 20.0 * x)).unwrap();
    for n in [2u32, 5, 6] {
        let space = DickeSpace::new(n).unwrap();
        for spec in [
            diagonal_noise(NoiseKind::None, 0.0),
            diagonal_noise(NoiseKind::Markovian, 0.1),
        ] {
            let prop = Propagator::new(
                &space,
                &field,
                &spec,
                DephasingMethod::Rk4,
                AxisPolicy::RequireParallel,
            )
            .unwrap();
            let rho0 = simultaneous_probe(&space).unwrap().density().unwrap();
            let t = 1.7;
            let res = prop.evolve(&rho0, t).unwrap();
            let g = GeneratorSet::new(prop.spectrum(), t).unwrap();
            for axis in Axis::ALL {
                let d = partial_rho(&res, &g, axis).unwrap();
                assert!(d.trace().norm() < 1e-11);
                assert!(d.hermiticity_defect() < 1e-11);
                let eps = 1e-5;
                let k = axis.index();
                let fd = if spec.is_silent() {
                    let up = evolve(
                        &rho0,
                        &field.shifted(k, eps),
                        &spec,
                        t,
                        AxisPolicy::AllowNonparallel,
                    )
                    .unwrap();
                    let dn = evolve(
                        &rho0,
                        &field.shifted(k, -eps),
                        &spec,
                        t,
                        AxisPolicy::AllowNonparallel,
                    )
                    .unwrap();
                    up.rho.as_operator().sub(dn.rho.as_operator())
                } else {
                    model_state(&prop, &res.rho_dephased, &field.shifted(k, eps), t).sub(
                        &model_state(&prop, &res.rho_dephased, &field.shifted(k, -eps), t),
                    )
                }
                .scale(re(0.5 / eps));
                assert!(
                    fd.max_abs_diff(&d) < 1e-6,
                    "N={n} {axis}: {:e}",
                    fd.max_abs_diff(&d)
                );
            }
        }
    }
}

#[test]
fn derivative_needs_split_evolution() {
    let space = DickeSpace::new(2).unwrap();
    let spec = NoiseSpec::new(NoiseKind::Markovian, 0.1, [0.0, 0.0, 2.0]).unwrap();
    let field = FieldParams::new([0.3, 0.0, 0.1]).unwrap();
    let prop = Propagator::new(
        &space,
        &field,
        &spec,
        DephasingMethod::Rk4,
        AxisPolicy::AllowNonparallel,
    )
    .unwrap();
    let res = prop
        .evolve(&ghz_state(&space, Axis::Z).density().unwrap(), 1.0)
        .unwrap();
    let g = GeneratorSet::new(prop.spectrum(), 1.0).unwrap();
    assert_eq!(
        partial_rho(&res, &g, Axis::X).unwrap_err().name(),
        "AssumptionViolated"
    );
}

/// Collective rotation `exp(−iθ n̂·J)` and its SO(3) action on vectors.
fn rotation(space: &DickeSpace, n: [f64; 3], theta: f64) -> (BlockOperator, Matrix3<f64>) {
    let gen = collective_operator(space, CollectiveKind::X)
        .scale(re(n[0]))
        .add(&collective_operator(space, CollectiveKind::Y).scale(re(n[1])))
        .add(&collective_operator(space, CollectiveKind::Z).scale(re(n[2])));
    let u =
        gen.map(|b| linalg::hermitian_function(b, |v| C64::from_polar(1.0, -theta * v)).unwrap());
    let js = Axis::ALL.map(|a| collective_operator(space, a.kind()));
    let norm = js[2].trace_product(&js[2]).re;
    let r = Matrix3::from_fn(|l, k| js[l].trace_product(&u.conjugate(&js[k])).re / norm);
    (u, r)
}

#[test]
fn qfim_is_rotation_covariant() {
    let space = DickeSpace::new(4).unwrap();
    let axis = default_axis();
    let field = FieldParams::new(axis.map(|x| 0.1 * x)).unwrap();
    let spec = diagonal_noise(NoiseKind::Markovian, 0.1);
    let rho0 = simultaneous_probe(&space).unwrap().density().unwrap();
    let t = 2.5;
    let q_of = |rho0: &DensityOperator, field: &FieldParams, spec: &NoiseSpec| {
        let prop = Propagator::new(
            &space,
            field,
            spec,
            DephasingMethod::Rk4,
            AxisPolicy::RequireParallel,
        )
        .unwrap();
        let res = prop.evolve(rho0, t).unwrap();
        let g = GeneratorSet::new(prop.spectrum(), t).unwrap();
        qfim(
            &res.rho,
            &partials(&res, &g).unwrap(),
            t,
            QfimScenario::Simultaneous,
        )
        .unwrap()
        .entries
    };
    let q = q_of(&rho0, &field, &spec);
    let n = [0.3, -0.5, 0.81];
    let len: f64 = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
    let (u, r) = rotation(&space, n.map(|x| x / len.sqrt()), 1.1);
    assert!((r * r.transpose() - Matrix3::identity()).abs().max() < 1e-12);
    let rotate = |v: [f64; 3]| {
        let w = r * nalgebra::Vector3::from(v);
        [w[0], w[1], w[2]]
    };
    let rho_r = DensityOperator::new(u.conjugate(rho0.as_operator())).unwrap();
    let field_r = FieldParams::new(rotate(field.phi)).unwrap();
    let spec_r = NoiseSpec::new(NoiseKind::Markovian, 0.1, rotate(axis)).unwrap();
    let q_r = q_of(&rho_r, &field_r, &spec_r);
    assert!((q_r - r * q * r.transpose()).abs().max() < 1e-7);
}

#[test]
fn noise_never_helps() {
    let field = FieldParams::new(DEFAULT_FIELD).unwrap();
    for n in [4u32, 7, 10] {
        let space = DickeSpace::new(n).unwrap();
        let rho0 = simultaneous_probe(&space).unwrap().density().unwrap();
        for t in [0.5, 2.0, 10.0] {
            let tr_inv = |spec: &NoiseSpec| {
                let prop = Propagator::new(
                    &space,
                    &field,
                    spec,
                    DephasingMethod::AxisFrame,
                    AxisPolicy::RequireParallel,
                )
                .unwrap();
                let res = prop.evolve(&rho0, t).unwrap();
                let g = GeneratorSet::new(prop.spectrum(), t).unwrap();
                let q = qfim(
                    &res.rho,
                    &partials(&res, &g).unwrap(),
                    t,
                    QfimScenario::Simultaneous,
                )
                .unwrap();
                q.entries.try_inverse().unwrap().trace()
            };
            let clean = tr_inv(&NoiseSpec::noiseless(default_axis()).unwrap());
            for kind in [NoiseKind::Markovian, NoiseKind::NonMarkovian] {
                for gamma in [0.05, 0.1] {
                    assert!(tr_inv(&diagonal_noise(kind, gamma)) >= clean * (1.0 - 1e-9));
                }
            }
        }
    }
}
