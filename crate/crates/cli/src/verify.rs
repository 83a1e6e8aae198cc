//! Self-checks run by `dmetro verify` at the configured N.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dicke_metrology::dicke::{
    degeneracy, dicke_dimension, ghz_state, simultaneous_probe, spin_block, Axis, CollectiveKind,
    DickeSpace,
};
use dicke_metrology::estimation::{
    cfim, partial_rho, partials, qfim, GeneratorSet, PovmSet, QfimScenario,
};
use dicke_metrology::experiments::husimi_map;
use dicke_metrology::linalg::{re, I};
use dicke_metrology::noise::{NoiseKind, NoiseSpec};
use dicke_metrology::propagation::{
    collective_moments, full_hilbert_reference, unitary, AxisPolicy, DephasingMethod, FieldParams,
    HamiltonianSpectrum, Propagator, FULL_HILBERT_MAX_PARTICLES,
};
use dicke_metrology::Result;

use crate::config::Resolved;
use crate::error::CliError;
use crate::output::{csv, quote, write_to};

const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

fn judged(pass: bool, detail: String) -> (Status, String) {
    (if pass { Status::Pass } else { Status::Fail }, detail)
}

fn spin_fixture() -> Result<(Status, String)> {
    let h = 3f64.sqrt() / 2.0;
    #[rustfmt::skip]
    let expected = [
        [0.0, h,   0.0, 0.0],
        [h,   0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, h  ],
        [0.0, 0.0, h,   0.0],
    ];
    let jx = spin_block(3, CollectiveKind::X);
    let jy = spin_block(3, CollectiveKind::Y);
    let jz = spin_block(3, CollectiveKind::Z);
    let mut dev: f64 = 0.0;
    for (r, row) in expected.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            dev = dev.max((jx[(r, c)] - re(v)).norm());
        }
    }
    let comm = (&jx * &jy - &jy * &jx - &jz * I).camax();
    let casimir = &jx * &jx + &jy * &jy + &jz * &jz;
    let cas = (0..4)
        .flat_map(|r| (0..4).map(move |c| (r, c)))
        .map(|(r, c)| (casimir[(r, c)] - re(if r == c { 3.75 } else { 0.0 })).norm())
        .fold(0.0, f64::max);
    Ok(judged(
        dev.max(comm).max(cas) < 1e-12,
        format!("j=3/2 entries {dev:.1e}, [Jx,Jy]-iJz {comm:.1e}, J^2-15/4 {cas:.1e}"),
    ))
}

fn dimensions(n: u32) -> Result<(Status, String)> {
    let d = dicke_dimension(n)?;
    let formula = if n % 2 == 1 {
        (n + 3) * (n + 1) / 4
    } else {
        (n + 2) * (n + 2) / 4
    } as usize;
    let total: u128 = (n % 2..=n)
        .step_by(2)
        .map(|tj| degeneracy(n, tj).map(|g| u128::from(g) * u128::from(tj + 1)))
        .sum::<Result<u128>>()?;
    let full_ok = n >= 128 || total == 1u128 << n;
    Ok(judged(
        d == formula && full_ok,
        format!("d_D={d}, formula {formula}, sum d_j(2j+1) = 2^{n}: {full_ok}"),
    ))
}

fn brute_force(r: &Resolved, field: &FieldParams) -> Result<(Status, String)> {
    if r.n > FULL_HILBERT_MAX_PARTICLES {
        return Ok((
            Status::Skip,
            format!("product-space reference limited to N <= {FULL_HILBERT_MAX_PARTICLES}"),
        ));
    }
    let space = DickeSpace::new(r.n)?;
    let probe = simultaneous_probe(&space)?;
    let rho0 = probe.density()?;
    let mut worst: f64 = 0.0;
    for kind in [NoiseKind::Markovian, NoiseKind::NonMarkovian] {
        let spec = NoiseSpec::new(kind, r.gamma, r.axis)?;
        let prop = Propagator::new(
            &space,
            field,
            &spec,
            DephasingMethod::Rk4,
            AxisPolicy::AllowNonparallel,
        )?;
        for t in [0.5, 2.0] {
            let fast = prop.evolve(&rho0, t)?;
            let full =
                full_hilbert_reference(r.n, &probe.top_sector_amplitudes(), field, &spec, t)?;
            worst =
                worst.max(collective_moments(&fast.rho).max_abs_diff(&full.collective_moments()));
        }
    }
    Ok(judged(
        worst <= 1e-8,
        format!("max moment deviation {worst:.2e} (tol 1e-8)"),
    ))
}

fn generator_fd(n: u32) -> Result<(Status, String)> {
    let space = DickeSpace::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let field = FieldParams::new([
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ])?;
        let t = rng.random_range(0.01..10.0);
        let g = GeneratorSet::new(&HamiltonianSpectrum::new(&space, &field)?, t)?;
        for axis in Axis::ALL {
            let eps = 1e-6;
            let k = axis.index();
            let fd = unitary(&space, &field.shifted(k, eps), t)?
                .sub(&unitary(&space, &field.shifted(k, -eps), t)?)
                .scale(re(0.5 / eps));
            let analytic = unitary(&space, &field, t)?.matmul(g.get(axis)).scale(-I);
            worst = worst.max(fd.max_abs_diff(&analytic) / analytic.max_abs());
        }
    }
    Ok(judged(
        worst < 1e-6,
        format!("30 samples, max relative error {worst:.2e} (tol 1e-6)"),
    ))
}

fn partial_fd(r: &Resolved, field: &FieldParams, spec: &NoiseSpec) -> Result<(Status, String)> {
    let space = DickeSpace::new(r.n)?;
    let prop = Propagator::new(
        &space,
        field,
        spec,
        DephasingMethod::AxisFrame,
        AxisPolicy::RequireParallel,
    )?;
    let t = r.t;
    let res = prop.evolve(&simultaneous_probe(&space)?.density()?, t)?;
    let g = GeneratorSet::new(prop.spectrum(), t)?;
    let mut worst: f64 = 0.0;
    let eps = 1e-5;
    for axis in Axis::ALL {
        let d = partial_rho(&res, &g, axis)?;
        let k = axis.index();
        let model = |f: &FieldParams| -> Result<_> {
            Ok(unitary(&space, f, t)?.conjugate(res.rho_dephased.as_operator()))
        };
        let fd = model(&field.shifted(k, eps))?
            .sub(&model(&field.shifted(k, -eps))?)
            .scale(re(0.5 / eps));
        worst = worst.max(fd.max_abs_diff(&d));
    }
    Ok(judged(
        worst < 1e-6,
        format!("t={t}, max deviation {worst:.2e} (tol 1e-6)"),
    ))
}

fn integrators(r: &Resolved, field: &FieldParams, spec: &NoiseSpec) -> Result<(Status, String)> {
    let space = DickeSpace::new(r.n)?;
    let rho0 = simultaneous_probe(&space)?.density()?;
    let a = Propagator::new(
        &space,
        field,
        spec,
        DephasingMethod::Rk4,
        AxisPolicy::RequireParallel,
    )?
    .evolve(&rho0, r.t)?;
    let b = Propagator::new(
        &space,
        field,
        spec,
        DephasingMethod::AxisFrame,
        AxisPolicy::RequireParallel,
    )?
    .evolve(&rho0, r.t)?;
    let d = a.rho.as_operator().max_abs_diff(b.rho.as_operator());
    Ok(judged(
        d < 1e-8,
        format!("t={}, max deviation {d:.2e} (tol 1e-8)", r.t),
    ))
}

fn heisenberg(n: u32) -> Result<(Status, String)> {
    let space = DickeSpace::new(n)?;
    let field = FieldParams::new([0.0, 0.0, 0.05])?;
    let spec = NoiseSpec::noiseless([0.0, 0.0, 2.0])?;
    let prop = Propagator::new(
        &space,
        &field,
        &spec,
        DephasingMethod::Rk4,
        AxisPolicy::RequireParallel,
    )?;
    let t = 3.0;
    let res = prop.evolve(&ghz_state(&space, Axis::Z).density()?, t)?;
    let g = GeneratorSet::new(prop.spectrum(), t)?;
    let q = qfim(&res.rho, &partials(&res, &g)?, t, QfimScenario::IndividualZ)?;
    let expected = t * t * f64::from(n * n);
    let rel = (q.diagonal(Axis::Z) - expected).abs() / expected;
    Ok(judged(
        rel < 1e-8,
        format!(
            "Q_zz = {:.6}, t^2 N^2 = {expected}, relative {rel:.1e}",
            q.diagonal(Axis::Z)
        ),
    ))
}

fn trace_inverse(m: &nalgebra::Matrix3<f64>) -> Option<f64> {
    let eig = nalgebra::SymmetricEigen::new(*m);
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    (lo > 0.0 && hi / lo < 1e12).then(|| eig.eigenvalues.iter().map(|v| 1.0 / v).sum())
}

fn information(
    r: &Resolved,
    field: &FieldParams,
    spec: &NoiseSpec,
) -> Result<[(Status, String); 2]> {
    let space = DickeSpace::new(r.n)?;
    let prop = Propagator::new(
        &space,
        field,
        spec,
        DephasingMethod::AxisFrame,
        AxisPolicy::RequireParallel,
    )?;
    let res = prop.evolve(&simultaneous_probe(&space)?.density()?, r.t)?;
    let g = GeneratorSet::new(prop.spectrum(), r.t)?;
    let d = partials(&res, &g)?;
    let q = qfim(&res.rho, &d, r.t, QfimScenario::Simultaneous)?;
    let scale = q.entries.abs().max().max(1.0);
    let (asym, low) = (q.symmetry_defect() / scale, q.min_eigenvalue() / scale);
    let psd = judged(
        asym <= 1e-9 && low >= -1e-9,
        format!("asymmetry {asym:.1e}, min eigenvalue / scale {low:.1e}"),
    );

    let ordering = match trace_inverse(&q.entries) {
        None => (Status::Skip, "QFIM not invertible".to_string()),
        Some(q_inv) => {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            let (mut tested, mut violations) = (0, 0);
            for _ in 0..10 {
                let povm = PovmSet::random_projective(space.total_dim(), &mut rng)?;
                if let Some(f_inv) = trace_inverse(&cfim(&res.rho, &d, &povm)?) {
                    tested += 1;
                    if f_inv < q_inv * (1.0 - 1e-9) {
                        violations += 1;
                    }
                }
            }
            judged(
                violations == 0,
                format!("{tested} invertible POVMs, {violations} violations"),
            )
        }
    };
    Ok([psd, ordering])
}

fn husimi(n: u32) -> Result<(Status, String)> {
    let space = DickeSpace::new(n)?;
    let norm = husimi_map(&simultaneous_probe(&space)?, (200, 200))?.normalization();
    Ok(judged(
        (norm - 1.0).abs() <= 1e-3,
        format!("normalization {norm:.6}"),
    ))
}

pub fn run_checks(r: &Resolved) -> Result<Vec<Check>> {
    let field = FieldParams::new(r.phi)?;
    let kind = match NoiseKind::from(r.kind) {
        NoiseKind::None => NoiseKind::Markovian,
        k => k,
    };
    let spec = NoiseSpec::new(kind, r.gamma, r.axis)?;
    let mut out = Vec::new();
    let mut push = |name: &'static str, res: Result<(Status, String)>| {
        let (status, detail) = res.unwrap_or_else(|e| (Status::Fail, format!("{}: {e}", e.name())));
        log::info!("{name}: {} {detail}", status.label());
        out.push(Check {
            name,
            status,
            detail,
        });
    };
    push("spin-fixture", spin_fixture());
    push("dimensions", dimensions(r.n));
    push("brute-force", brute_force(r, &field));
    push("generator-fd", generator_fd(r.n));
    push("partial-rho-fd", partial_fd(r, &field, &spec));
    push("rk4-vs-axis-frame", integrators(r, &field, &spec));
    push("ghz-heisenberg", heisenberg(r.n));
    match information(r, &field, &spec) {
        Ok([a, b]) => {
            push("qfim-psd", Ok(a));
            push("cfim-ordering", Ok(b));
        }
        Err(e) => {
            let detail = format!("{}: {e}", e.name());
            push("qfim-psd", Ok((Status::Fail, detail.clone())));
            push("cfim-ordering", Ok((Status::Fail, detail)));
        }
    }
    push("husimi-normalization", husimi(r.n));
    Ok(out)
}

pub fn verify(r: &Resolved) -> std::result::Result<(), CliError> {
    let checks = run_checks(r)?;
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                c.status.label().to_string(),
                quote(&c.detail),
            ]
        })
        .collect();
    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    let text = match r.format {
        crate::config::FormatArg::Csv => csv(r, &[], &["check", "status", "detail"], &rows, &[format!("failed: {failed}")]),
        crate::config::FormatArg::Json => crate::output::json_doc(
            r,
            serde_json::Value::Array(
                checks
                    .iter()
                    .map(|c| serde_json::json!({ "check": c.name, "status": c.status.label(), "detail": c.detail }))
                    .collect(),
            ),
        ),
    };
    write_to(r.out.as_deref(), &text)?;
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
