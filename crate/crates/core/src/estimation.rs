//! Quantum and classical Fisher information for the three field components.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dicke::{collective_operator, Axis, BlockOperator, DensityOperator};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, re, CMatrix, C64, I};
use crate::propagation::{EvolutionResult, HamiltonianSpectrum};

/// Which probe the information matrix was evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QfimScenario {
    Simultaneous,
    IndividualX,
    IndividualY,
    IndividualZ,
}

impl QfimScenario {
    pub fn individual(axis: Axis) -> Self {
        match axis {
            Axis::X => QfimScenario::IndividualX,
            Axis::Y => QfimScenario::IndividualY,
            Axis::Z => QfimScenario::IndividualZ,
        }
    }
}

/// `f(λ, t) = ∫₀ᵗ e^{iλs} ds`.
fn phase_integral(lambda: f64, t: f64, tol: f64) -> C64 {
    if lambda.abs() < tol {
        re(t)
    } else {
        -I * (C64::from_polar(1.0, lambda * t) - 1.0) / lambda
    }
}

/// The three generators `A_k` with `∂_k U = −i U A_k` at one `(field, t)`.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    t: f64,
    ops: [BlockOperator; 3],
}

impl GeneratorSet {
    pub fn new(spectrum: &HamiltonianSpectrum, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return invalid(format!("time must be nonnegative, got {t}"));
        }
        let scale = spectrum.max_abs_eigenvalue();
        if scale == 0.0 {
            return invalid("generators need a nonzero field");
        }
        let tol = 1e-10 * scale;
        let space = spectrum.space();
        let ops = Axis::ALL.map(|axis| {
            let j = collective_operator(space, axis.kind());
            let blocks = (0..space.sectors().len())
                .map(|si| {
                    let (vals, vecs) = spectrum.block(si);
                    let mut inner = vecs.adjoint() * j.block(si) * vecs;
                    for a in 0..vals.len() {
                        for b in 0..vals.len() {
                            inner[(a, b)] *= phase_integral(vals[a] - vals[b], t, tol);
                        }
                    }
                    vecs * inner * vecs.adjoint()
                })
                .collect();
            BlockOperator::from_blocks(space, blocks).expect("shapes follow the space")
        });
        Ok(GeneratorSet { t, ops })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn get(&self, axis: Axis) -> &BlockOperator {
        &self.ops[axis.index()]
    }

    pub fn all(&self) -> &[BlockOperator; 3] {
        &self.ops
    }
}

/// `A_k` for a single component.
pub fn generator_operator(
    space: &crate::dicke::DickeSpace,
    field: &crate::propagation::FieldParams,
    t: f64,
    k: Axis,
) -> Result<BlockOperator> {
    if field.magnitude() == 0.0 {
        return invalid("generators need a nonzero field");
    }
    let spectrum = HamiltonianSpectrum::new(space, field)?;
    Ok(GeneratorSet::new(&spectrum, t)?.get(k).clone())
}

/// `∂_k ρ_t = −i U [A_k, ρ̃_t] U†`.
pub fn partial_rho(
    result: &EvolutionResult,
    generators: &GeneratorSet,
    k: Axis,
) -> Result<BlockOperator> {
    if !result.split {
        return Err(Error::AssumptionViolated(
            "derivatives need the commuting split; the dephased state depends on the field otherwise".into(),
        ));
    }
    if (generators.t() - result.t).abs() > 1e-12 * result.t.max(1.0) {
        return invalid(format!(
            "generators built for t = {} but state is at t = {}",
            generators.t(),
            result.t
        ));
    }
    let inner = generators
        .get(k)
        .commutator(result.rho_dephased.as_operator())
        .scale(-I);
    Ok(result.unitary.conjugate(&inner))
}

/// All three partial derivatives.
pub fn partials(result: &EvolutionResult, generators: &GeneratorSet) -> Result<[BlockOperator; 3]> {
    Ok([
        partial_rho(result, generators, Axis::X)?,
        partial_rho(result, generators, Axis::Y)?,
        partial_rho(result, generators, Axis::Z)?,
    ])
}

/// Quantum Fisher information matrix over `(φ_x, φ_y, φ_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfimMatrix {
    pub entries: Matrix3<f64>,
    pub t: f64,
    pub n_particles: u32,
    pub scenario: QfimScenario,
}

impl QfimMatrix {
    pub fn diagonal(&self, axis: Axis) -> f64 {
        let k = axis.index();
        self.entries[(k, k)]
    }

    pub fn symmetry_defect(&self) -> f64 {
        (self.entries - self.entries.transpose()).abs().max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries).eigenvalues.min()
    }
}

/// Relative cutoff on `p_l + p_l'`.
pub const QFIM_EIGEN_CUTOFF: f64 = 1e-12;

/// `Q_{αβ} = 2 Σ ⟨l|∂_α ρ|l'⟩⟨l'|∂_β ρ|l⟩ / (p_l + p_l')`.
pub fn qfim(
    rho: &DensityOperator,
    partials: &[BlockOperator; 3],
    t: f64,
    scenario: QfimScenario,
) -> Result<QfimMatrix> {
    let space = rho.space();
    if partials.iter().any(|p| p.space() != space) {
        return invalid("derivatives live in a different space");
    }
    let decomps = rho
        .as_operator()
        .blocks()
        .iter()
        .map(linalg::hermitian_eigen)
        .collect::<Result<Vec<_>>>()?;
    let p_max = decomps
        .iter()
        .flat_map(|(v, _)| v.iter())
        .fold(0.0f64, |a, &p| a.max(p));
    let cutoff = QFIM_EIGEN_CUTOFF * p_max;
    let mut q = [[C64::new(0.0, 0.0); 3]; 3];
    for (si, (vals, vecs)) in decomps.iter().enumerate() {
        let rotated: Vec<CMatrix> = partials
            .iter()
            .map(|d| vecs.adjoint() * d.block(si) * vecs)
            .collect();
        let dim = vals.len();
        for l in 0..dim {
            for lp in 0..dim {
                let denom = vals[l] + vals[lp];
                if denom <= cutoff {
                    continue;
                }
                for a in 0..3 {
                    for b in a..3 {
                        q[a][b] += rotated[a][(l, lp)] * rotated[b][(lp, l)] / denom;
                    }
                }
            }
        }
    }
    let mut entries = Matrix3::zeros();
    let mut imag: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for a in 0..3 {
        for b in a..3 {
            let v = q[a][b] * 2.0;
            imag = imag.max(v.im.abs());
            scale = scale.max(v.re.abs());
            entries[(a, b)] = v.re;
            entries[(b, a)] = v.re;
        }
    }
    if imag > 1e-9 * scale.max(1.0) {
        return Err(Error::NumericalError(format!(
            "information matrix has imaginary residue {imag:e}"
        )));
    }
    Ok(QfimMatrix {
        entries,
        t,
        n_particles: space.n_particles(),
        scenario,
    })
}

/// A POVM on the dense `d_D`-dimensional space.
#[derive(Debug, Clone)]
pub struct PovmSet {
    elements: Vec<CMatrix>,
}

impl PovmSet {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return invalid("a POVM needs at least one element");
        };
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for e in &elements {
            if e.nrows() != d || e.ncols() != d {
                return invalid("POVM elements must share one square shape");
            }
            if linalg::hermiticity_defect(e) > 1e-10 {
                return invalid("POVM element is not Hermitian");
            }
            let (vals, _) = linalg::hermitian_eigen(e)?;
            if vals.min() < -1e-10 {
                return invalid(format!("POVM element has eigenvalue {:e}", vals.min()));
            }
            sum += e;
        }
        if linalg::max_abs_diff(&sum, &CMatrix::identity(d, d)) > 1e-10 {
            return invalid("POVM elements do not sum to the identity");
        }
        Ok(PovmSet { elements })
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn projective(basis: &CMatrix) -> Result<Self> {
        let elements = basis.column_iter().map(|c| c * c.adjoint()).collect();
        Self::new(elements)
    }

    /// Projective measurement in a Haar-random basis.
    pub fn random_projective(dim: usize, rng: &mut impl Rng) -> Result<Self> {
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for k in 0..dim {
            let d = r[(k, k)];
            if d.norm() > 0.0 {
                let phase = d / d.norm();
                q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
            }
        }
        Self::projective(&q)
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }
}

/// `F_{αβ} = Σ_l ∂_α P_l ∂_β P_l / P_l` with `P_l = Tr[Π_l ρ]`.
pub fn cfim(
    rho: &DensityOperator,
    partials: &[BlockOperator; 3],
    povm: &PovmSet,
) -> Result<Matrix3<f64>> {
    let dense = rho.to_dense();
    if povm.elements[0].nrows() != dense.nrows() {
        return invalid("POVM dimension does not match the state");
    }
    let dpartials: Vec<CMatrix> = partials.iter().map(|p| p.to_dense()).collect();
    let mut f = Matrix3::zeros();
    for e in &povm.elements {
        let p = (e * &dense).trace().re;
        if p < 1e-14 {
            continue;
        }
        let dp: Vec<f64> = dpartials.iter().map(|d| (e * d).trace().re).collect();
        for a in 0..3 {
            for b in 0..3 {
                f[(a, b)] += dp[a] * dp[b] / p;
            }
        }
    }
    Ok(f)
}

/// Lower bound on the total variance of the three estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    /// Repetitions `M = T/t`, not rounded.
    pub repetitions: f64,
    pub total_time: f64,
}

/// Largest eigenvalue ratio accepted when inverting a QFIM.
pub const MAX_CONDITION: f64 = 1e12;

fn check_repetitions(m: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return invalid(format!("repetition count must be positive, got {m}"));
    }
    Ok(())
}

/// `Tr[Q⁻¹] / M`.
pub fn bound_simultaneous(q: &QfimMatrix, repetitions: f64) -> Result<BoundValue> {
    check_repetitions(repetitions)?;
    let eig = SymmetricEigen::new(q.entries);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || !(min > 0.0) || max / min >= MAX_CONDITION {
        return Err(Error::SingularQfim(format!(
            "eigenvalues span [{min:e}, {max:e}] at t = {}",
            q.t
        )));
    }
    let trace_inv: f64 = eig.eigenvalues.iter().map(|v| 1.0 / v).sum();
    Ok(BoundValue {
        value: trace_inv / repetitions,
        repetitions,
        total_time: repetitions * q.t,
    })
}

/// `(3/M) Σ_k 1/Q_k`, each `Q_k` from its own single-axis probe.
pub fn bound_individual(
    diagonals: [f64; 3],
    repetitions: f64,
    total_time: f64,
) -> Result<BoundValue> {
    check_repetitions(repetitions)?;
    if let Some(k) = diagonals.iter().position(|&q| !(q > 0.0)) {
        return Err(Error::SingularQfim(format!(
            "component {} has vanishing information {:e}",
            Axis::ALL[k],
            diagonals[k]
        )));
    }
    let sum: f64 = diagonals.iter().map(|q| 1.0 / q).sum();
    Ok(BoundValue {
        value: 3.0 * sum / repetitions,
        repetitions,
        total_time,
    })
}
