use dicke_metrology::dicke::{ghz_state, simultaneous_probe, Axis, DickeSpace};
use dicke_metrology::experiments::{
    fit_power_law, husimi_map, rescan, scan_particles, sweep_time, Scenario, SweepConfig, TimeGrid,
};
use dicke_metrology::noise::NoiseKind;

#[test]
fn sweeps_are_deterministic() {
    let config = SweepConfig {
        n: 8,
        ..SweepConfig::default()
    };
    let a = sweep_time(&config).unwrap();
    let b = sweep_time(&config).unwrap();
    assert_eq!(a, b);
    for (p, q) in a.curve.iter().zip(&b.curve) {
        assert_eq!(p.value.map(f64::to_bits), q.value.map(f64::to_bits));
    }
}

#[test]
fn refined_optimum_stays_in_its_cell() {
    for kind in [NoiseKind::Markovian, NoiseKind::NonMarkovian] {
        for scenario in [Scenario::Simultaneous, Scenario::Individual] {
            let r = sweep_time(&SweepConfig {
                n: 12,
                kind,
                scenario,
                ..SweepConfig::default()
            })
            .unwrap();
            let i = r.refinement.grid_index;
            assert!(r.refinement.refined);
            assert!(r.t_opt >= r.curve[i - 1].t && r.t_opt <= r.curve[i + 1].t);
            assert!(r.i_min <= r.curve[i].value.unwrap() + 1e-12);
            assert!(r.t_opt >= r.config.t_grid.min && r.t_opt <= r.config.t_grid.max);
            let fine = rescan(&r).unwrap();
            assert_eq!(fine.curve.len(), 40);
            assert!((fine.t_opt / r.t_opt - 1.0).abs() < 0.1);
        }
    }
}

#[test]
fn noiseless_sweep_prefers_longest_time() {
    let r = sweep_time(&SweepConfig {
        n: 6,
        gamma: 0.0,
        kind: NoiseKind::None,
        ..SweepConfig::default()
    })
    .unwrap();
    assert_eq!(r.t_opt, 100.0);
    assert!(r.refinement.fallback_global);
}

#[test]
fn invalid_configs_rejected() {
    let base = SweepConfig::default();
    assert!(sweep_time(&SweepConfig {
        total_time: 10.0,
        ..base
    })
    .is_err());
    assert!(sweep_time(&SweepConfig { n: 0, ..base }).is_err());
    let tilted = SweepConfig {
        axis: [0.0, 0.0, 2.0],
        ..base
    };
    assert_eq!(
        sweep_time(&tilted).unwrap_err().name(),
        "AssumptionViolated"
    );
    assert!(scan_particles(
        &[12, 10],
        &base,
        &[NoiseKind::Markovian],
        &[Scenario::Simultaneous]
    )
    .is_err());
    assert!(TimeGrid::new(10, 5.0, 1.0).is_err());
}

#[test]
fn simultaneous_minimum_decreases_with_n() {
    let ns: Vec<u32> = (10..=24).collect();
    let rows = scan_particles(
        &ns,
        &SweepConfig::default(),
        &[NoiseKind::Markovian, NoiseKind::NonMarkovian],
        &[Scenario::Simultaneous],
    )
    .unwrap();
    for kind in [NoiseKind::Markovian, NoiseKind::NonMarkovian] {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.i_min.unwrap())
            .collect();
        assert_eq!(vals.len(), ns.len());
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{kind}: {vals:?}");
    }
    let order: Vec<(u32, NoiseKind)> = rows.iter().map(|r| (r.n, r.kind)).collect();
    let mut sorted = order.clone();
    sorted.sort_by_key(|(n, k)| (*n, *k == NoiseKind::NonMarkovian));
    assert_eq!(order, sorted);
}

#[test]
fn fit_recovers_synthetic_exponents() {
    for e in [-2.0, -1.5, -1.0, 0.5, 1.0] {
        let pts: Vec<(f64, f64)> = (4..=30)
            .map(|n| (f64::from(n), 0.7 * f64::from(n).powf(e)))
            .collect();
        let f = fit_power_law(&pts, 10.0).unwrap();
        assert!((f.exponent - e).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert_eq!(f.points_used, 21);
    }
}

#[test]
fn husimi_lobes() {
    let space = DickeSpace::new(40).unwrap();
    let map = husimi_map(&simultaneous_probe(&space).unwrap(), (181, 360)).unwrap();
    assert!((map.normalization() - 1.0).abs() < 1e-3);
    // six lobes: ±z at the poles, ±x and ±y on the equator
    let q = |theta_deg: usize, phi_deg: usize| map.values[(theta_deg, phi_deg)];
    let lobes = [
        q(0, 0),
        q(180, 0),
        q(90, 0),
        q(90, 90),
        q(90, 180),
        q(90, 270),
    ];
    let off = [q(45, 45), q(90, 45), q(135, 135), q(60, 300)];
    let weakest = lobes.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(off.iter().all(|&v| v < 0.01 * weakest), "{lobes:?} {off:?}");

    let ghz = husimi_map(&ghz_state(&space, Axis::Z), (181, 360)).unwrap();
    assert!((ghz.values[(0, 0)] - 0.5).abs() < 1e-12);
    assert!((ghz.values[(180, 123)] - 0.5).abs() < 1e-12);
    assert!(ghz.values[(90, 0)] < 1e-6);
}
