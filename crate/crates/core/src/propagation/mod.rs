//! Time evolution of probe states.
//!
//! With the field parallel to the noise axis the Hamiltonian commutes with
//! every collapse operator, so `ρ_t = U ρ̃_t U†` where `ρ̃_t = exp(Θ(t) L̃)[ρ₀]`
//! is the purely dissipative part. Two slower references integrate the full
//! master equation jointly, one in the Dicke basis and one in the `2^N`
//! product space.

mod frame;
mod hilbert;
mod integrator;

pub use frame::AxisFramePropagator;
pub use hilbert::{
    collective_moments, full_hilbert_reference, symmetric_embedding, CollectiveMoments,
    FullHilbertState, FULL_HILBERT_MAX_PARTICLES,
};
pub use integrator::IntegrationReport;

use serde::{Deserialize, Serialize};

use crate::dicke::{
    collective_operator, BlockOperator, CollectiveKind, DensityOperator, DickeSpace,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, re, CMatrix, C64, I};
use crate::noise::{
    build_dephasing_superoperator, gamma_profile, integrated_strength, DephasingSuperoperator,
    NoiseSpec,
};

/// Field components `(φ_x, φ_y, φ_z)` in angular-frequency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub phi: [f64; 3],
}

impl FieldParams {
    pub fn new(phi: [f64; 3]) -> Result<Self> {
        if phi.iter().any(|x| !x.is_finite()) {
            return invalid(format!("field has non-finite components: {phi:?}"));
        }
        Ok(FieldParams { phi })
    }

    pub fn magnitude(&self) -> f64 {
        self.phi.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Same field with component `k` shifted by `delta`.
    pub fn shifted(&self, k: usize, delta: f64) -> Self {
        let mut phi = self.phi;
        phi[k] += delta;
        FieldParams { phi }
    }
}

/// Angle between the field and the noise axis, folded into `[0, π/2]`.
pub fn axis_misalignment(field: &FieldParams, spec: &NoiseSpec) -> f64 {
    let a = field.phi;
    let b = spec.axis();
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let cross_norm = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>();
    cross_norm.atan2(dot.abs())
}

/// Tolerance on [`axis_misalignment`] for the commuting split.
pub const PARALLEL_TOLERANCE: f64 = 1e-8;

/// Whether `U ρ̃ U†` is exact for this field and noise.
pub fn split_is_exact(field: &FieldParams, spec: &NoiseSpec) -> bool {
    spec.is_silent()
        || field.magnitude() == 0.0
        || axis_misalignment(field, spec) <= PARALLEL_TOLERANCE
}

/// `H = φ_x J_x + φ_y J_y + φ_z J_z`.
pub fn hamiltonian(space: &DickeSpace, field: &FieldParams) -> BlockOperator {
    let [px, py, pz] = field.phi;
    collective_operator(space, CollectiveKind::X)
        .scale(re(px))
        .add(&collective_operator(space, CollectiveKind::Y).scale(re(py)))
        .add(&collective_operator(space, CollectiveKind::Z).scale(re(pz)))
}

/// Per-block eigen-decomposition of `H`, shared by propagators and generators.
#[derive(Debug, Clone)]
pub struct HamiltonianSpectrum {
    space: DickeSpace,
    field: FieldParams,
    blocks: Vec<(Vec<f64>, CMatrix)>,
}

impl HamiltonianSpectrum {
    pub fn new(space: &DickeSpace, field: &FieldParams) -> Result<Self> {
        let h = hamiltonian(space, field);
        let blocks = h
            .blocks()
            .iter()
            .map(|b| linalg::hermitian_eigen(b).map(|(v, w)| (v.iter().copied().collect(), w)))
            .collect::<Result<Vec<_>>>()?;
        Ok(HamiltonianSpectrum {
            space: space.clone(),
            field: *field,
            blocks,
        })
    }

    pub fn space(&self) -> &DickeSpace {
        &self.space
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    /// `(eigenvalues, eigenvectors)` of one block.
    pub fn block(&self, sector: usize) -> (&[f64], &CMatrix) {
        let (v, w) = &self.blocks[sector];
        (v, w)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|(v, _)| v.iter())
            .fold(0.0, |a, x| a.max(x.abs()))
    }

    /// `e^{−itH}`
    pub fn unitary(&self, t: f64) -> BlockOperator {
        let blocks = self
            .blocks
            .iter()
            .map(|(vals, vecs)| {
                let mut scaled = vecs.clone();
                for (k, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= C64::from_polar(1.0, -vals[k] * t);
                }
                &scaled * vecs.adjoint()
            })
            .collect();
        BlockOperator::from_blocks(&self.space, blocks).expect("block shapes follow the space")
    }
}

/// `U(φ⃗, t) = e^{−itH(φ⃗)}` by per-block eigen-decomposition.
pub fn unitary(space: &DickeSpace, field: &FieldParams, t: f64) -> Result<BlockOperator> {
    if !(t >= 0.0) {
        return invalid(format!("time must be nonnegative, got {t}"));
    }
    Ok(HamiltonianSpectrum::new(space, field)?.unitary(t))
}

/// Initial step in `Θ` for the fixed-step integrator.
pub const DEPHASE_BASE_STEP: f64 = 0.01;
/// Richardson acceptance threshold (max-norm) for [`dephase`].
pub const DEPHASE_TOLERANCE: f64 = 1e-9;
/// Positivity floor below which a dephased state is rejected.
pub const DEPHASE_POSITIVITY_FLOOR: f64 = -1e-6;

/// `ρ̃ = exp(Θ(t) L̃)[ρ₀]` by classical RK4 in `Θ`.
///
/// The step starts at `Θ / ⌈Θ / 0.01⌉` (tightened to keep `h·4N ≤ 1`) and is
/// halved until two successive solutions agree to [`DEPHASE_TOLERANCE`].
pub fn dephase(
    rho0: &DensityOperator,
    superop: &DephasingSuperoperator,
    spec: &NoiseSpec,
    t: f64,
) -> Result<DensityOperator> {
    dephase_with_report(rho0, superop, spec, t).map(|(rho, _)| rho)
}

pub fn dephase_with_report(
    rho0: &DensityOperator,
    superop: &DephasingSuperoperator,
    spec: &NoiseSpec,
    t: f64,
) -> Result<(DensityOperator, IntegrationReport)> {
    let theta = integrated_strength(spec, t)?;
    if rho0.space() != superop.space() {
        return invalid("state and superoperator live in different spaces");
    }
    if theta == 0.0 {
        return Ok((rho0.clone(), IntegrationReport::trivial()));
    }
    let x0 = rho0.as_operator().to_vectorized();
    let steps = ((theta / DEPHASE_BASE_STEP).ceil() as usize)
        .max((theta * superop.spectral_bound()).ceil() as usize)
        .max(1);
    let (x, report) = integrator::integrate_controlled(
        &x0,
        0.0,
        theta,
        steps,
        DEPHASE_TOLERANCE,
        |_, x, out| superop.apply_into(x, out),
    )?;
    let op = BlockOperator::from_vectorized(rho0.space(), &x)?;
    Ok((checked_state(op, DEPHASE_POSITIVITY_FLOOR)?, report))
}

fn checked_state(op: BlockOperator, floor: f64) -> Result<DensityOperator> {
    let rho = DensityOperator::new_unchecked(op);
    let min = rho.min_eigenvalue()?;
    if min < floor {
        return Err(Error::NumericalError(format!(
            "positivity lost during propagation (eigenvalue {min:e}); step too coarse"
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::NumericalError(format!("trace drifted to {tr}")));
    }
    Ok(rho)
}

/// How the dissipative part is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DephasingMethod {
    /// RK4 on the assembled 27-channel superoperator.
    #[default]
    Rk4,
    /// Exact exponential in the frame where the noise axis is `z`.
    AxisFrame,
}

/// What to do when the field is not parallel to the noise axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxisPolicy {
    #[default]
    RequireParallel,
    /// Integrate the joint master equation instead of splitting.
    AllowNonparallel,
}

/// State at time `t` together with its dissipative and unitary factors.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub rho: DensityOperator,
    /// `ρ̃_t`, the state before the unitary; independent of the field on the
    /// split path.
    pub rho_dephased: DensityOperator,
    pub unitary: BlockOperator,
    pub t: f64,
    /// False when the joint-integration fallback produced the state.
    pub split: bool,
}

/// Reusable evolution setup for one `(N, field, noise)` triple.
#[derive(Debug, Clone)]
pub struct Propagator {
    space: DickeSpace,
    field: FieldParams,
    spec: NoiseSpec,
    method: DephasingMethod,
    split: bool,
    spectrum: HamiltonianSpectrum,
    superop: DephasingSuperoperator,
    frame: Option<AxisFramePropagator>,
}

impl Propagator {
    pub fn new(
        space: &DickeSpace,
        field: &FieldParams,
        spec: &NoiseSpec,
        method: DephasingMethod,
        policy: AxisPolicy,
    ) -> Result<Self> {
        let split = split_is_exact(field, spec);
        if !split && policy == AxisPolicy::RequireParallel {
            return Err(Error::AssumptionViolated(format!(
                "field {:?} is not parallel to the noise axis {:?} (angle {:e} rad)",
                field.phi,
                spec.axis(),
                axis_misalignment(field, spec)
            )));
        }
        let frame = match method {
            DephasingMethod::AxisFrame => Some(AxisFramePropagator::new(space, spec.unit_axis())?),
            DephasingMethod::Rk4 => None,
        };
        Ok(Propagator {
            space: space.clone(),
            field: *field,
            spec: *spec,
            method,
            split,
            spectrum: HamiltonianSpectrum::new(space, field)?,
            superop: build_dephasing_superoperator(space, spec),
            frame,
        })
    }

    pub fn space(&self) -> &DickeSpace {
        &self.space
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn method(&self) -> DephasingMethod {
        self.method
    }

    pub fn spectrum(&self) -> &HamiltonianSpectrum {
        &self.spectrum
    }

    pub fn superoperator(&self) -> &DephasingSuperoperator {
        &self.superop
    }

    pub fn dephase(&self, rho0: &DensityOperator, t: f64) -> Result<DensityOperator> {
        match &self.frame {
            Some(frame) => {
                let theta = integrated_strength(&self.spec, t)?;
                checked_state(
                    frame.apply(rho0.as_operator(), theta),
                    DEPHASE_POSITIVITY_FLOOR,
                )
            }
            None => dephase(rho0, &self.superop, &self.spec, t),
        }
    }

    pub fn evolve(&self, rho0: &DensityOperator, t: f64) -> Result<EvolutionResult> {
        if !(t >= 0.0) {
            return invalid(format!("time must be nonnegative, got {t}"));
        }
        let unitary = self.spectrum.unitary(t);
        if self.split {
            let rho_dephased = self.dephase(rho0, t)?;
            let rho = DensityOperator::new_unchecked(unitary.conjugate(rho_dephased.as_operator()));
            Ok(EvolutionResult {
                rho,
                rho_dephased,
                unitary,
                t,
                split: true,
            })
        } else {
            let rho = full_gkls_reference(rho0, &self.field, &self.spec, t)?;
            let rho_dephased =
                DensityOperator::new_unchecked(unitary.adjoint().conjugate(rho.as_operator()));
            Ok(EvolutionResult {
                rho,
                rho_dephased,
                unitary,
                t,
                split: false,
            })
        }
    }
}

/// `ρ_t = U ρ̃_t U†` via RK4 dephasing; see [`Propagator`] for reuse.
pub fn evolve(
    rho0: &DensityOperator,
    field: &FieldParams,
    spec: &NoiseSpec,
    t: f64,
    policy: AxisPolicy,
) -> Result<EvolutionResult> {
    Propagator::new(rho0.space(), field, spec, DephasingMethod::Rk4, policy)?.evolve(rho0, t)
}

/// Largest Dicke dimension accepted by [`full_gkls_reference`].
pub const GKLS_REFERENCE_MAX_DIM: usize = 400;
/// Successive-refinement threshold (max-norm) for the joint integrator.
pub const GKLS_REFERENCE_TOLERANCE: f64 = 1e-10;

/// Joint RK4 integration of `dρ/dt = −i[H, ρ] + γ_t L̃[ρ]` in `t`.
pub fn full_gkls_reference(
    rho0: &DensityOperator,
    field: &FieldParams,
    spec: &NoiseSpec,
    t: f64,
) -> Result<DensityOperator> {
    let space = rho0.space().clone();
    if space.total_dim() > GKLS_REFERENCE_MAX_DIM {
        return invalid(format!(
            "reference integrator limited to dimension {GKLS_REFERENCE_MAX_DIM}, got {}",
            space.total_dim()
        ));
    }
    if !(t >= 0.0) {
        return invalid(format!("time must be nonnegative, got {t}"));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let superop = build_dephasing_superoperator(&space, spec);
    let h = hamiltonian(&space, field);
    let h_norm: f64 = h
        .blocks()
        .iter()
        .map(|b| b.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let rate_max = gamma_profile(spec, t)?.max(gamma_profile(spec, 0.0)?);
    let stiffness = rate_max * superop.spectral_bound() + 2.0 * h_norm;
    let steps = ((t / 0.01).ceil() as usize)
        .max((t * stiffness).ceil() as usize)
        .max(1);
    let x0 = rho0.as_operator().to_vectorized();
    let mut scratch = vec![C64::new(0.0, 0.0); x0.len()];
    let (x, _) = integrator::integrate_controlled(
        &x0,
        0.0,
        t,
        steps,
        GKLS_REFERENCE_TOLERANCE,
        |s, x, out| {
            let rate = gamma_profile(spec, s).expect("s stays nonnegative");
            superop.apply_into(x, &mut scratch);
            let rho = BlockOperator::from_vectorized(&space, x).expect("length fixed");
            let comm = h.commutator(&rho).scale(-I).to_vectorized();
            for ((o, c), d) in out.iter_mut().zip(comm).zip(&scratch) {
                *o = c + d * rate;
            }
        },
    )?;
    checked_state(
        BlockOperator::from_vectorized(&space, &x)?,
        DEPHASE_POSITIVITY_FLOOR,
    )
}
