//! Local dephasing along a shared axis, expressed in the Dicke basis.
//!
//! Every site carries the collapse operator `a = φ⃗·J⃗⁽ⁿ⁾` with `|φ⃗| = 2`
//! (so `a² = 1`) and the dissipator `−γ_t Σ_n [a, [a, ρ]] = 2γ_t (Σ_n a ρ a − N ρ)`.
//! The map is assembled rate-free; the scalar profile `γ_t` enters only
//! through the integrated strength `Θ(t) = ∫₀ᵗ γ_s ds`.

use serde::{Deserialize, Serialize};

use crate::dicke::{BlockOperator, DickeSpace, Sector};
use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, C64};

/// Time profile of the dephasing rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// `γ_t = γ`
    Markovian,
    /// `γ_t = γ² t`
    NonMarkovian,
    None,
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseKind::Markovian => "markovian",
            NoiseKind::NonMarkovian => "nonmarkovian",
            NoiseKind::None => "none",
        })
    }
}

/// Noise model: rate profile, strength and axis (normalized to length 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    kind: NoiseKind,
    gamma: f64,
    axis: [f64; 3],
}

impl NoiseSpec {
    pub const AXIS_NORM: f64 = 2.0;

    pub fn new(kind: NoiseKind, gamma: f64, axis: [f64; 3]) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return invalid(format!(
                "noise rate must be finite and nonnegative, got {gamma}"
            ));
        }
        if axis.iter().any(|x| !x.is_finite()) {
            return invalid("noise axis has non-finite components");
        }
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return invalid("noise axis must be nonzero");
        }
        if (norm - Self::AXIS_NORM).abs() > 1e-6 {
            log::warn!(
                "noise axis {axis:?} has length {norm}; rescaling to {}",
                Self::AXIS_NORM
            );
        }
        let scale = Self::AXIS_NORM / norm;
        let gamma = if kind == NoiseKind::None { 0.0 } else { gamma };
        Ok(NoiseSpec {
            kind,
            gamma,
            axis: axis.map(|x| x * scale),
        })
    }

    /// No dephasing; the axis is kept only for bookkeeping.
    pub fn noiseless(axis: [f64; 3]) -> Result<Self> {
        Self::new(NoiseKind::None, 0.0, axis)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn unit_axis(&self) -> [f64; 3] {
        self.axis.map(|x| x / Self::AXIS_NORM)
    }

    /// True when the dissipator vanishes identically.
    pub fn is_silent(&self) -> bool {
        self.kind == NoiseKind::None || self.gamma == 0.0
    }

    /// `(φ_x + iφ_y)/2`
    pub fn axis_w(&self) -> C64 {
        C64::new(self.axis[0], self.axis[1]) * 0.5
    }
}

/// Instantaneous rate `γ_t`.
pub fn gamma_profile(spec: &NoiseSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid(format!("time must be nonnegative, got {t}"));
    }
    Ok(match spec.kind {
        NoiseKind::Markovian => spec.gamma,
        NoiseKind::NonMarkovian => spec.gamma * spec.gamma * t,
        NoiseKind::None => 0.0,
    })
}

/// `Θ(t) = ∫₀ᵗ γ_s ds`.
pub fn integrated_strength(spec: &NoiseSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid(format!("time must be nonnegative, got {t}"));
    }
    Ok(match spec.kind {
        NoiseKind::Markovian => spec.gamma * t,
        NoiseKind::NonMarkovian => 0.5 * spec.gamma * spec.gamma * t * t,
        NoiseKind::None => 0.0,
    })
}

/// Single-site ladder direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Plus,
    Minus,
    Z,
}

impl Ladder {
    pub const ALL: [Ladder; 3] = [Ladder::Plus, Ladder::Minus, Ladder::Z];

    fn index(self) -> usize {
        match self {
            Ladder::Plus => 0,
            Ladder::Minus => 1,
            Ladder::Z => 2,
        }
    }

    /// `2 Δm` produced by this ladder.
    pub fn two_shift(self) -> i64 {
        match self {
            Ladder::Plus => 2,
            Ladder::Minus => -2,
            Ladder::Z => 0,
        }
    }

    fn dagger(self) -> Ladder {
        match self {
            Ladder::Plus => Ladder::Minus,
            Ladder::Minus => Ladder::Plus,
            Ladder::Z => Ladder::Z,
        }
    }
}

/// `A_k`, `B_k`, `D_k` for one `(j, m)`, indexed by [`Ladder`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderFactors {
    pub same: [f64; 3],
    pub down: [f64; 3],
    pub up: [f64; 3],
}

impl LadderFactors {
    fn new(two_j: i64, two_m: i64) -> Self {
        // all products below are (2x)(2y)/4 = xy
        let sq = |a: i64, b: i64| ((a * b) as f64 / 4.0).max(0.0).sqrt();
        let (jm, jp) = (two_j - two_m, two_j + two_m);
        LadderFactors {
            same: [sq(jm, jp + 2), sq(jp, jm + 2), two_m as f64 / 2.0],
            down: [sq(jm, jm - 2), -sq(jp, jp - 2), sq(jp, jm)],
            up: [-sq(jp + 2, jp + 4), sq(jm + 2, jm + 4), sq(jp + 2, jm + 2)],
        }
    }

    pub fn a(&self, k: Ladder) -> f64 {
        self.same[k.index()]
    }

    pub fn b(&self, k: Ladder) -> f64 {
        self.down[k.index()]
    }

    pub fn d(&self, k: Ladder) -> f64 {
        self.up[k.index()]
    }
}

/// Coefficients of `Σ_n J_k⁽ⁿ⁾ |j,m⟩⟨j,m'| J_l⁽ⁿ⁾†` in the Dicke basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub at_m: LadderFactors,
    pub at_m_prime: LadderFactors,
    /// Weight of the same-`j` term.
    pub lambda_a: f64,
    /// Weight of the `j → j−1` term.
    pub lambda_b: f64,
    /// Weight of the `j → j+1` term.
    pub lambda_d: f64,
}

/// Ladder factors and sector weights for one `(N, j, m, m')`.
///
/// At `j = 0` the same-`j` and `j−1` weights are singular but multiply factors
/// that vanish identically there; both are returned as 0.
pub fn local_coupling_coefficients(
    n: u32,
    two_j: u32,
    two_m: i64,
    two_m_prime: i64,
) -> Result<LocalCoefficients> {
    if two_j > n || !(n - two_j).is_multiple_of(2) {
        return invalid(format!("2j = {two_j} is not a sector of N = {n}"));
    }
    let tj = i64::from(two_j);
    for tm in [two_m, two_m_prime] {
        if tm.abs() > tj || (tj - tm) % 2 != 0 {
            return invalid(format!("2m = {tm} is not a projection of 2j = {two_j}"));
        }
    }
    let half_n = f64::from(n) / 2.0;
    let j = f64::from(two_j) / 2.0;
    let (lambda_a, lambda_b) = if two_j == 0 {
        (0.0, 0.0)
    } else {
        (
            (half_n + 1.0) / (2.0 * j * (j + 1.0)),
            (half_n + j + 1.0) / (2.0 * j * (2.0 * j + 1.0)),
        )
    };
    let lambda_d = (half_n - j) / (2.0 * (j + 1.0) * (2.0 * j + 1.0));
    Ok(LocalCoefficients {
        at_m: LadderFactors::new(tj, two_m),
        at_m_prime: LadderFactors::new(tj, two_m_prime),
        lambda_a,
        lambda_b,
        lambda_d,
    })
}

/// Channel label (1..=27) for the left ladder `k`, the right operator `r`
/// (so that the bra side carries `l = r†`) and the sector move.
fn channel_label(k: Ladder, r: Ladder, jump: i32) -> u8 {
    use Ladder::*;
    let base: [u8; 3] = match (k, r) {
        (Z, Z) => [1, 5, 6],
        (Minus, Plus) => [2, 3, 4],
        (Plus, Minus) => [8, 7, 9],
        (Plus, Plus) => [10, 11, 12],
        (Plus, Z) => [13, 14, 15],
        (Minus, Minus) => [16, 17, 18],
        (Minus, Z) => [19, 20, 21],
        (Z, Plus) => [22, 23, 24],
        (Z, Minus) => [25, 26, 27],
    };
    match jump {
        0 => base[0],
        -1 => base[1],
        _ => base[2],
    }
}

/// One nonzero entry of the superoperator: `target += value · source`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub source: usize,
    pub target: usize,
    pub value: C64,
    pub channel: u8,
}

/// Position of a vectorized element: sector index, row and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementIndex {
    pub sector: usize,
    pub row: usize,
    pub col: usize,
}

/// Rate-free dephasing map `L̃[ρ] = 2(Σ_n a⁽ⁿ⁾ ρ a⁽ⁿ⁾ − N ρ)` on block-diagonal `ρ`.
#[derive(Debug, Clone)]
pub struct DephasingSuperoperator {
    space: DickeSpace,
    axis: [f64; 3],
    entries: Vec<Coupling>,
}

impl DephasingSuperoperator {
    pub fn space(&self) -> &DickeSpace {
        &self.space
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn entries(&self) -> &[Coupling] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Decodes a vectorized index.
    pub fn element(&self, flat: usize) -> ElementIndex {
        let sectors = self.space.sectors();
        let sector = sectors
            .iter()
            .rposition(|s| s.vec_offset <= flat)
            .expect("index within vectorized range");
        let s = &sectors[sector];
        let local = flat - s.vec_offset;
        ElementIndex {
            sector,
            row: local / s.dim,
            col: local % s.dim,
        }
    }

    /// Upper bound on the spectral radius, `4N`.
    pub fn spectral_bound(&self) -> f64 {
        4.0 * f64::from(self.space.n_particles())
    }

    /// `out = L̃ x` on vectorized storage.
    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.space.vectorized_len());
        out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for e in &self.entries {
            out[e.target] += e.value * x[e.source];
        }
    }

    pub fn apply(&self, x: &BlockOperator) -> BlockOperator {
        let v = x.to_vectorized();
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.apply_into(&v, &mut out);
        BlockOperator::from_vectorized(&self.space, &out).expect("length preserved")
    }

    /// Dense matrix of the map on vectorized storage (small `N` only).
    pub fn to_dense(&self) -> CMatrix {
        let n = self.space.vectorized_len();
        let mut m = CMatrix::zeros(n, n);
        for e in &self.entries {
            m[(e.target, e.source)] += e.value;
        }
        m
    }
}

/// Assembles all 27 channels for the axis in `spec`.
///
/// The `−N` diagonal is folded into the same-`j`, `m, m'`-preserving channel.
pub fn build_dephasing_superoperator(
    space: &DickeSpace,
    spec: &NoiseSpec,
) -> DephasingSuperoperator {
    let n = space.n_particles();
    let w = spec.axis_w();
    let phi_z = C64::new(spec.axis()[2], 0.0);
    let weight = |k: Ladder| match k {
        Ladder::Plus => w.conj(),
        Ladder::Minus => w,
        Ladder::Z => phi_z,
    };
    let sectors = space.sectors();
    let mut entries = Vec::new();

    for (si, s) in sectors.iter().enumerate() {
        let tj = i64::from(s.two_j);
        for row in 0..s.dim {
            for col in 0..s.dim {
                let (tm, tmp) = (s.two_m(row), s.two_m(col));
                let source = s.vec_offset + row * s.dim + col;
                let coeffs = local_coupling_coefficients(n, s.two_j, tm, tmp)
                    .expect("indices come from the space layout");
                for jump in [0i32, -1, 1] {
                    let target_sector = match jump {
                        0 => Some(si),
                        -1 => (tj >= 2).then(|| si + 1),
                        _ => si.checked_sub(1),
                    };
                    let Some(ti) = target_sector else { continue };
                    let t: &Sector = &sectors[ti];
                    let lambda = match jump {
                        0 => coeffs.lambda_a,
                        -1 => coeffs.lambda_b,
                        _ => coeffs.lambda_d,
                    };
                    for k in Ladder::ALL {
                        for r in Ladder::ALL {
                            let l = r.dagger();
                            let (fk, fl) = match jump {
                                0 => (coeffs.at_m.a(k), coeffs.at_m_prime.a(l)),
                                -1 => (coeffs.at_m.b(k), coeffs.at_m_prime.b(l)),
                                _ => (coeffs.at_m.d(k), coeffs.at_m_prime.d(l)),
                            };
                            let channel = channel_label(k, r, jump);
                            let mut value = weight(k) * weight(r) * (fk * fl * lambda);
                            if channel == 1 {
                                value -= C64::new(f64::from(n), 0.0);
                            }
                            value *= 2.0;
                            if value == C64::new(0.0, 0.0) {
                                continue;
                            }
                            let (Some(tr), Some(tc)) =
                                (t.row_of(tm + k.two_shift()), t.row_of(tmp + l.two_shift()))
                            else {
                                // only reachable through vanishing ladder factors
                                debug_assert!(fk * fl == 0.0);
                                continue;
                            };
                            entries.push(Coupling {
                                source,
                                target: t.vec_offset + tr * t.dim + tc,
                                value,
                                channel,
                            });
                        }
                    }
                }
            }
        }
    }

    DephasingSuperoperator {
        space: space.clone(),
        axis: spec.axis(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{re, I};
    use rand::{Rng, SeedableRng};

    fn random_hermitian(space: &DickeSpace, rng: &mut impl Rng) -> BlockOperator {
        BlockOperator::from_fn(space, |s| {
            let m = CMatrix::from_fn(s.dim, s.dim, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            &m + m.adjoint()
        })
    }

    #[test]
    fn profiles() {
        let m = NoiseSpec::new(NoiseKind::Markovian, 0.05, [0.0, 0.0, 2.0]).unwrap();
        let nm = NoiseSpec::new(NoiseKind::NonMarkovian, 0.05, [0.0, 0.0, 2.0]).unwrap();
        assert!((gamma_profile(&m, 10.0).unwrap() - 0.05).abs() < 1e-15);
        assert!((gamma_profile(&nm, 10.0).unwrap() - 0.025).abs() < 1e-15);
        assert!((integrated_strength(&m, 10.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((integrated_strength(&nm, 10.0).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(integrated_strength(&nm, 0.0).unwrap(), 0.0);
        let zero = NoiseSpec::new(NoiseKind::Markovian, 0.0, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(gamma_profile(&zero, 3.0).unwrap(), 0.0);
        let none = NoiseSpec::new(NoiseKind::None, 0.3, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(none.gamma(), 0.0);
        assert!(gamma_profile(&m, -1.0).is_err());
        assert!(integrated_strength(&m, -1.0).is_err());
    }

    #[test]
    fn axis_is_normalized() {
        let s = NoiseSpec::new(NoiseKind::Markovian, 0.1, [1.0, 1.0, 1.0]).unwrap();
        let norm: f64 = s.axis().iter().map(|x| x * x).sum();
        assert!((norm - 4.0).abs() < 1e-14);
        assert!(NoiseSpec::new(NoiseKind::Markovian, 0.1, [0.0; 3]).is_err());
        assert!(NoiseSpec::new(NoiseKind::Markovian, -0.1, [0.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn ladder_factor_edges() {
        for two_j in (0..=10u32).step_by(2) {
            let c = local_coupling_coefficients(10, two_j, i64::from(two_j), -(i64::from(two_j)))
                .unwrap_or_else(|_| panic!("2j={two_j}"));
            assert_eq!(c.at_m.a(Ladder::Z), f64::from(two_j) / 2.0);
            assert_eq!(c.at_m.b(Ladder::Z), 0.0);
            assert_eq!(c.at_m.a(Ladder::Plus), 0.0);
            assert_eq!(c.at_m_prime.a(Ladder::Minus), 0.0);
        }
        let c = local_coupling_coefficients(4, 4, 0, 2).unwrap();
        assert_eq!(c.lambda_d, 0.0);
        let c0 = local_coupling_coefficients(4, 0, 0, 0).unwrap();
        assert_eq!((c0.lambda_a, c0.lambda_b), (0.0, 0.0));
        assert_eq!(c0.at_m.a(Ladder::Plus), 0.0);
        assert_eq!(c0.at_m.a(Ladder::Minus), 0.0);
        assert!(local_coupling_coefficients(4, 3, 1, 1).is_err());
        assert!(local_coupling_coefficients(4, 2, 4, 0).is_err());
        assert!(local_coupling_coefficients(4, 2, 1, 0).is_err());
    }

    #[test]
    fn single_spin_coherence_rate() {
        let space = DickeSpace::new(1).unwrap();
        let spec = NoiseSpec::new(NoiseKind::Markovian, 1.0, [0.0, 0.0, 2.0]).unwrap();
        let l = build_dephasing_superoperator(&space, &spec);
        let mut x = BlockOperator::zeros(&space);
        x.block_mut(0)[(0, 1)] = re(1.0);
        let y = l.apply(&x);
        assert!((y.block(0)[(0, 1)] - re(-4.0)).norm() < 1e-14);
        assert!(y.block(0)[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn trace_and_hermiticity_preserved() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for n in [2u32, 3, 4, 6] {
            let space = DickeSpace::new(n).unwrap();
            for axis in [[0.0, 0.0, 2.0], [1.0, 1.0, 1.0], [0.3, -1.1, 0.4]] {
                let spec = NoiseSpec::new(NoiseKind::Markovian, 1.0, axis).unwrap();
                let l = build_dephasing_superoperator(&space, &spec);
                for _ in 0..50 {
                    let x = random_hermitian(&space, &mut rng);
                    let y = l.apply(&x);
                    assert!(y.trace().norm() < 1e-10);
                    assert!(y.hermiticity_defect() < 1e-10);
                    // L[X]† = L[X†] for non-Hermitian input as well
                    let z = x
                        .scale(C64::new(0.3, 0.0))
                        .add(&random_hermitian(&space, &mut rng).scale(I));
                    let lhs = l.apply(&z).adjoint();
                    let rhs = l.apply(&z.adjoint());
                    assert!(lhs.max_abs_diff(&rhs) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn banded_structure() {
        let space = DickeSpace::new(7).unwrap();
        let spec = NoiseSpec::new(NoiseKind::Markovian, 1.0, [0.4, 1.2, -1.0]).unwrap();
        let l = build_dephasing_superoperator(&space, &spec);
        for e in l.entries() {
            let s = l.element(e.source);
            let t = l.element(e.target);
            let ss = space.sector(s.sector);
            let ts = space.sector(t.sector);
            assert!((i64::from(ss.two_j) - i64::from(ts.two_j)).abs() <= 2);
            assert!((ss.two_m(s.row) - ts.two_m(t.row)).abs() <= 2);
            assert!((ss.two_m(s.col) - ts.two_m(t.col)).abs() <= 2);
            assert!((1..=27).contains(&e.channel));
        }
        assert!(l.nnz() <= 27 * space.vectorized_len());
        let mut seen = [false; 28];
        for e in l.entries() {
            seen[e.channel as usize] = true;
        }
        assert!(
            seen[1..].iter().all(|&x| x),
            "all 27 channels populated for a generic axis"
        );
    }
}
