//! Permutation-symmetric state space of `N` spin-1/2 particles.
//!
//! The space is the direct sum of total-spin sectors `j = N/2, N/2 − 1, …`
//! (down to 0 or 1/2). Within a sector the basis is `|j, m⟩` with `m`
//! descending from `j` to `−j`. Half-integers are carried as `2j`, `2m`.
//!
//! Block entries hold the total weight of all `d_N^j` degenerate copies of a
//! sector, so the plain trace of a density operator is its physical trace and
//! collective observables act on every block exactly as on a single copy.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, re, CMatrix, CVector, C64, I};

/// Largest particle number whose degeneracies fit the exact integer path.
pub const MAX_PARTICLES: u32 = 64;

pub(crate) fn binomial_f64(n: u32, k: u32) -> f64 {
    binomial(n, k) as f64
}

fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

fn check_sector(n: u32, two_j: u32) -> Result<()> {
    if n == 0 {
        return invalid("particle number must be at least 1");
    }
    if n > MAX_PARTICLES {
        return invalid(format!("particle number {n} exceeds {MAX_PARTICLES}"));
    }
    if two_j > n || !(n - two_j).is_multiple_of(2) {
        return invalid(format!(
            "total spin j = {}/2 is not a sector of N = {n} (need 0 <= j <= N/2, j = N/2 mod 1)",
            two_j
        ));
    }
    Ok(())
}

/// Number of Dicke basis states, `(N+3)(N+1)/4` for odd `N`, `(N+2)²/4` for even.
pub fn dicke_dimension(n: u32) -> Result<usize> {
    if n == 0 {
        return invalid("particle number must be at least 1");
    }
    let n = n as usize;
    Ok(if n % 2 == 1 {
        (n + 3) * (n + 1) / 4
    } else {
        (n + 2) * (n + 2) / 4
    })
}

/// Number of degenerate irreps `d_N^j = N!(2j+1) / ((N/2−j)!(N/2+j+1)!)`.
///
/// Evaluated as `C(N, N/2−j) − C(N, N/2−j−1)`, which is exact in integers.
pub fn degeneracy(n: u32, two_j: u32) -> Result<u64> {
    check_sector(n, two_j)?;
    let k = (n - two_j) / 2;
    let lower = if k == 0 { 0 } else { binomial(n, k - 1) };
    let d = binomial(n, k) - lower;
    u64::try_from(d).map_err(|_| Error::InvalidArgument(format!("degeneracy overflow at N = {n}")))
}

/// Cumulative multiplicity `α_N^j = Σ_{j' ≥ j} d_N^{j'} = N! / ((N/2−j)!(N/2+j)!)`.
pub fn cumulative_degeneracy(n: u32, two_j: u32) -> Result<u64> {
    check_sector(n, two_j)?;
    let d = binomial(n, (n - two_j) / 2);
    u64::try_from(d)
        .map_err(|_| Error::InvalidArgument(format!("multiplicity overflow at N = {n}")))
}

/// One total-spin block of the Dicke space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub two_j: u32,
    pub dim: usize,
    /// First index of this block in the concatenated basis.
    pub offset: usize,
    /// First index of this block in the vectorized (row-major) block storage.
    pub vec_offset: usize,
    pub degeneracy: u64,
}

impl Sector {
    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    /// `2m` of basis row `row` (rows run from `m = j` down to `m = −j`).
    pub fn two_m(&self, row: usize) -> i64 {
        i64::from(self.two_j) - 2 * row as i64
    }

    pub fn m(&self, row: usize) -> f64 {
        self.two_m(row) as f64 / 2.0
    }

    /// Row index of `2m`, if it lies in this sector.
    pub fn row_of(&self, two_m: i64) -> Option<usize> {
        let two_j = i64::from(self.two_j);
        if two_m.abs() > two_j || (two_j - two_m) % 2 != 0 {
            return None;
        }
        Some(((two_j - two_m) / 2) as usize)
    }
}

#[derive(Debug)]
struct SpaceInner {
    n: u32,
    sectors: Vec<Sector>,
    total_dim: usize,
    vec_len: usize,
}

/// Sector layout of the permutation-symmetric space. Cheap to clone.
#[derive(Clone)]
pub struct DickeSpace(Arc<SpaceInner>);

impl fmt::Debug for DickeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DickeSpace")
            .field("n_particles", &self.0.n)
            .field("total_dim", &self.0.total_dim)
            .finish()
    }
}

impl PartialEq for DickeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.0.n == other.0.n
    }
}

impl Eq for DickeSpace {}

impl DickeSpace {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return invalid("particle number must be at least 1");
        }
        if n > MAX_PARTICLES {
            return invalid(format!("particle number {n} exceeds {MAX_PARTICLES}"));
        }
        let mut sectors = Vec::new();
        let mut offset = 0;
        let mut vec_offset = 0;
        let mut two_j = n as i64;
        while two_j >= 0 {
            let tj = two_j as u32;
            let dim = tj as usize + 1;
            sectors.push(Sector {
                two_j: tj,
                dim,
                offset,
                vec_offset,
                degeneracy: degeneracy(n, tj)?,
            });
            offset += dim;
            vec_offset += dim * dim;
            two_j -= 2;
        }
        debug_assert_eq!(offset, dicke_dimension(n)?);
        Ok(DickeSpace(Arc::new(SpaceInner {
            n,
            sectors,
            total_dim: offset,
            vec_len: vec_offset,
        })))
    }

    pub fn n_particles(&self) -> u32 {
        self.0.n
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.0.sectors
    }

    pub fn sector(&self, index: usize) -> &Sector {
        &self.0.sectors[index]
    }

    /// The maximal `j = N/2` sector, which holds every symmetric pure state.
    pub fn top_sector(&self) -> &Sector {
        &self.0.sectors[0]
    }

    pub fn sector_index(&self, two_j: u32) -> Option<usize> {
        let n = self.0.n;
        if two_j > n || !(n - two_j).is_multiple_of(2) {
            return None;
        }
        Some(((n - two_j) / 2) as usize)
    }

    pub fn total_dim(&self) -> usize {
        self.0.total_dim
    }

    /// Length of the vectorized block-diagonal storage, `Σ (2j+1)²`.
    pub fn vectorized_len(&self) -> usize {
        self.0.vec_len
    }

    fn check_same(&self, other: &DickeSpace) -> Result<()> {
        if self != other {
            return invalid(format!(
                "operands live in different spaces (N = {} vs N = {})",
                self.0.n, other.0.n
            ));
        }
        Ok(())
    }
}

/// Collective spin components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectiveKind {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Cartesian axis label for field components, GHZ states and derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn kind(self) -> CollectiveKind {
        match self {
            Axis::X => CollectiveKind::X,
            Axis::Y => CollectiveKind::Y,
            Axis::Z => CollectiveKind::Z,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// `√((j ∓ m)(j ± m + 1))` with the products passed in doubled units.
fn ladder(two_j: i64, two_m: i64, raising: bool) -> f64 {
    let (a, b) = if raising {
        (two_j - two_m, two_j + two_m + 2)
    } else {
        (two_j + two_m, two_j - two_m + 2)
    };
    ((a * b) as f64 / 4.0).max(0.0).sqrt()
}

/// Standard spin-`j` matrix in the `m`-descending basis.
pub fn spin_block(two_j: u32, kind: CollectiveKind) -> CMatrix {
    let dim = two_j as usize + 1;
    let tj = i64::from(two_j);
    let two_m = |row: usize| tj - 2 * row as i64;
    let mut plus = CMatrix::zeros(dim, dim);
    for col in 1..dim {
        // J+ |m⟩ lands on row col-1
        plus[(col - 1, col)] = re(ladder(tj, two_m(col), true));
    }
    match kind {
        CollectiveKind::Z => CMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                re(two_m(r) as f64 / 2.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        CollectiveKind::Plus => plus,
        CollectiveKind::Minus => plus.adjoint(),
        CollectiveKind::X => (&plus + plus.adjoint()) * re(0.5),
        CollectiveKind::Y => (&plus - plus.adjoint()) * (-0.5 * I),
    }
}

/// Block-diagonal operator on a [`DickeSpace`]; entries between sectors are zero.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    space: DickeSpace,
    blocks: Vec<CMatrix>,
}

impl BlockOperator {
    pub fn zeros(space: &DickeSpace) -> Self {
        let blocks = space
            .sectors()
            .iter()
            .map(|s| CMatrix::zeros(s.dim, s.dim))
            .collect();
        BlockOperator {
            space: space.clone(),
            blocks,
        }
    }

    pub fn identity(space: &DickeSpace) -> Self {
        let blocks = space
            .sectors()
            .iter()
            .map(|s| CMatrix::identity(s.dim, s.dim))
            .collect();
        BlockOperator {
            space: space.clone(),
            blocks,
        }
    }

    pub fn from_blocks(space: &DickeSpace, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != space.sectors().len() {
            return invalid(format!(
                "expected {} blocks, got {}",
                space.sectors().len(),
                blocks.len()
            ));
        }
        for (s, b) in space.sectors().iter().zip(&blocks) {
            if b.nrows() != s.dim || b.ncols() != s.dim {
                return invalid(format!(
                    "block for 2j = {} must be {}x{}, got {}x{}",
                    s.two_j,
                    s.dim,
                    s.dim,
                    b.nrows(),
                    b.ncols()
                ));
            }
        }
        Ok(BlockOperator {
            space: space.clone(),
            blocks,
        })
    }

    /// Builds each block from its sector.
    pub fn from_fn(space: &DickeSpace, mut f: impl FnMut(&Sector) -> CMatrix) -> Self {
        let blocks = space.sectors().iter().map(&mut f).collect();
        BlockOperator {
            space: space.clone(),
            blocks,
        }
    }

    pub fn space(&self) -> &DickeSpace {
        &self.space
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, sector: usize) -> &CMatrix {
        &self.blocks[sector]
    }

    pub fn block_mut(&mut self, sector: usize) -> &mut CMatrix {
        &mut self.blocks[sector]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    pub fn map(&self, mut f: impl FnMut(&CMatrix) -> CMatrix) -> Self {
        BlockOperator {
            space: self.space.clone(),
            blocks: self.blocks.iter().map(&mut f).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Self {
        assert!(
            self.space == other.space,
            "block operators from different spaces"
        );
        BlockOperator {
            space: self.space.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.map(|b| b.adjoint())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.map(|b| b * factor)
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b - b * a)
    }

    /// `self · x · self†`
    pub fn conjugate(&self, x: &Self) -> Self {
        self.zip_with(x, |u, x| u * x * u.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(linalg::trace).sum()
    }

    /// `Tr[self · other]`
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert!(self.space == other.space);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..a.nrows() {
                    for c in 0..a.ncols() {
                        acc += a[(r, c)] * b[(c, r)];
                    }
                }
                acc
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert!(self.space == other.space);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| linalg::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(linalg::hermiticity_defect)
            .fold(0.0, f64::max)
    }

    /// `‖U U† − I‖_max`
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|u| {
                let n = u.nrows();
                linalg::max_abs_diff(&(u * u.adjoint()), &CMatrix::identity(n, n))
            })
            .fold(0.0, f64::max)
    }

    /// Dense `d_D × d_D` form with explicit zeros between sectors.
    pub fn to_dense(&self) -> CMatrix {
        let d = self.space.total_dim();
        let mut out = CMatrix::zeros(d, d);
        for (s, b) in self.space.sectors().iter().zip(&self.blocks) {
            out.view_mut((s.offset, s.offset), (s.dim, s.dim))
                .copy_from(b);
        }
        out
    }

    /// Row-major concatenation of all blocks.
    pub fn to_vectorized(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.space.vectorized_len());
        for b in &self.blocks {
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    out.push(b[(r, c)]);
                }
            }
        }
        out
    }

    pub fn from_vectorized(space: &DickeSpace, data: &[C64]) -> Result<Self> {
        if data.len() != space.vectorized_len() {
            return invalid(format!(
                "vectorized length {} does not match {}",
                data.len(),
                space.vectorized_len()
            ));
        }
        Ok(Self::from_fn(space, |s| {
            CMatrix::from_row_slice(
                s.dim,
                s.dim,
                &data[s.vec_offset..s.vec_offset + s.dim * s.dim],
            )
        }))
    }

    pub fn apply(&self, state: &CVector) -> CVector {
        let mut out = CVector::zeros(self.space.total_dim());
        for (s, b) in self.space.sectors().iter().zip(&self.blocks) {
            let piece = b * state.rows(s.offset, s.dim);
            out.rows_mut(s.offset, s.dim).copy_from(&piece);
        }
        out
    }
}

/// Collective operator `J_x, J_y, J_z, J_+` or `J_−` on every sector.
pub fn collective_operator(space: &DickeSpace, kind: CollectiveKind) -> BlockOperator {
    BlockOperator::from_fn(space, |s| spin_block(s.two_j, kind))
}

/// Normalized symmetric pure state in the concatenated Dicke basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    space: DickeSpace,
    amplitudes: CVector,
}

impl StateVector {
    /// Wraps amplitudes after checking the unit-norm invariant (tolerance 1e-12).
    pub fn new(space: &DickeSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return invalid(format!(
                "state has {} amplitudes, space dimension is {}",
                amplitudes.len(),
                space.total_dim()
            ));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return invalid(format!("state norm {norm} differs from 1"));
        }
        Ok(StateVector {
            space: space.clone(),
            amplitudes,
        })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(space: &DickeSpace, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return invalid("cannot normalize a zero or non-finite vector");
        }
        Self::new(space, amplitudes / re(norm))
    }

    /// State supported on the top sector with the given `m`-descending amplitudes.
    pub fn from_top_sector(space: &DickeSpace, top: &[C64]) -> Result<Self> {
        let s = space.top_sector();
        if top.len() != s.dim {
            return invalid(format!(
                "top sector has {} amplitudes, got {}",
                s.dim,
                top.len()
            ));
        }
        let mut amps = CVector::zeros(space.total_dim());
        amps.rows_mut(0, s.dim).copy_from_slice(top);
        Self::normalized(space, amps)
    }

    pub fn space(&self) -> &DickeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// Amplitudes restricted to the `j = N/2` sector.
    pub fn top_sector_amplitudes(&self) -> Vec<C64> {
        let s = self.space.top_sector();
        self.amplitudes
            .rows(s.offset, s.dim)
            .iter()
            .copied()
            .collect()
    }

    /// Norm of the component outside the `j = N/2` sector.
    pub fn weight_outside_top(&self) -> f64 {
        let s = self.space.top_sector();
        self.amplitudes
            .rows(s.dim, self.space.total_dim() - s.dim)
            .norm()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|ψ⟩⟨ψ|`; the state must live in a single sector.
    pub fn density(&self) -> Result<DensityOperator> {
        let mut occupied = self
            .space
            .sectors()
            .iter()
            .enumerate()
            .filter(|(_, s)| self.amplitudes.rows(s.offset, s.dim).norm() > 1e-12);
        let (index, sector) = occupied
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty state".into()))?;
        if occupied.next().is_some() {
            return invalid("pure state spans several total-spin sectors");
        }
        let v = self.amplitudes.rows(sector.offset, sector.dim).into_owned();
        let mut op = BlockOperator::zeros(&self.space);
        *op.block_mut(index) = &v * v.adjoint();
        DensityOperator::new(op)
    }
}

/// Block-diagonal density operator (Hermitian, unit trace, positive).
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: BlockOperator,
}

impl DensityOperator {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validates Hermiticity, trace and positivity.
    pub fn new(op: BlockOperator) -> Result<Self> {
        let herm = op.hermiticity_defect();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::NumericalError(format!(
                "density operator not Hermitian (defect {herm:e})"
            )));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_TOL {
            return Err(Error::NumericalError(format!(
                "density operator trace {tr} differs from 1"
            )));
        }
        let rho = DensityOperator { op };
        let min = rho.min_eigenvalue()?;
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::NumericalError(format!(
                "density operator has eigenvalue {min:e}"
            )));
        }
        Ok(rho)
    }

    /// Skips validation; callers own the invariants.
    pub fn new_unchecked(op: BlockOperator) -> Self {
        DensityOperator { op }
    }

    /// `I / d_D` in the block convention: block `j` carries weight
    /// `d_N^j (2j+1) / 2^N` spread uniformly over its diagonal.
    pub fn maximally_mixed(space: &DickeSpace) -> Self {
        let total = 2f64.powi(space.n_particles() as i32);
        let op = BlockOperator::from_fn(space, |s| {
            let w = s.degeneracy as f64 / total;
            CMatrix::identity(s.dim, s.dim) * re(w)
        });
        DensityOperator { op }
    }

    pub fn space(&self) -> &DickeSpace {
        self.op.space()
    }

    pub fn as_operator(&self) -> &BlockOperator {
        &self.op
    }

    pub fn into_operator(self) -> BlockOperator {
        self.op
    }

    pub fn to_dense(&self) -> CMatrix {
        self.op.to_dense()
    }

    pub fn trace(&self) -> C64 {
        self.op.trace()
    }

    /// `Tr[ρ²]`
    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op).re
    }

    /// `Tr[ρ O]`
    pub fn expectation(&self, observable: &BlockOperator) -> C64 {
        self.op.trace_product(observable)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        for b in self.op.blocks() {
            let (vals, _) = linalg::hermitian_eigen(b)?;
            if let Some(v) = vals.iter().copied().reduce(f64::min) {
                min = min.min(v);
            }
        }
        Ok(min)
    }

    /// `½‖ρ − σ‖₁`, summed block by block.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        self.space().check_same(other.space())?;
        let mut acc = 0.0;
        for (a, b) in self.op.blocks().iter().zip(other.op.blocks()) {
            acc += linalg::hermitian_trace_norm(&(a - b))?;
        }
        Ok(0.5 * acc)
    }
}

fn sqrt_binomial(n: u32, k: u32) -> f64 {
    // product form keeps every factor of order one
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= f64::from(n - i) / f64::from(i + 1);
    }
    acc.sqrt()
}

/// Spin coherent state `|θ, ϕ⟩` on the `j = N/2` sector.
///
/// `⟨j,m|θ,ϕ⟩ = C(2j, j+m)^{1/2} cos(θ/2)^{j+m} sin(θ/2)^{j−m} e^{−i(j−m)ϕ}`.
pub fn coherent_state(space: &DickeSpace, theta: f64, phi: f64) -> StateVector {
    let s = space.top_sector();
    let two_j = s.two_j;
    let (c, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut amps = CVector::zeros(space.total_dim());
    for row in 0..s.dim {
        // row = j - m
        let down = row as u32;
        let up = two_j - down;
        let mag = sqrt_binomial(two_j, up) * c.powi(up as i32) * sn.powi(down as i32);
        amps[s.offset + row] = C64::from_polar(mag, -(f64::from(down)) * phi);
    }
    // analytically unit norm; renormalize away round-off
    let norm = amps.norm();
    StateVector {
        space: space.clone(),
        amplitudes: amps / re(norm),
    }
}

/// Polar angles of the extremal eigenvectors of `J_axis`: (max, min).
fn ghz_poles(axis: Axis) -> [(f64, f64); 2] {
    use std::f64::consts::{FRAC_PI_2, PI};
    match axis {
        Axis::X => [(FRAC_PI_2, 0.0), (FRAC_PI_2, PI)],
        Axis::Y => [(FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, FRAC_PI_2 + PI)],
        Axis::Z => [(0.0, 0.0), (PI, 0.0)],
    }
}

/// `(|λ_max⟩ + |λ_min⟩)/√2` of `J_axis`, with the extremal states taken as
/// coherent states along `±axis` so that all relative phases are fixed.
pub fn ghz_state(space: &DickeSpace, axis: Axis) -> StateVector {
    let [(t1, p1), (t2, p2)] = ghz_poles(axis);
    let a = coherent_state(space, t1, p1);
    let b = coherent_state(space, t2, p2);
    let sum = (a.amplitudes + b.amplitudes) / re(std::f64::consts::SQRT_2);
    StateVector {
        space: space.clone(),
        amplitudes: sum,
    }
}

/// `𝒩 (|GHZ⟩_x + |GHZ⟩_y + |GHZ⟩_z)`.
pub fn simultaneous_probe(space: &DickeSpace) -> Result<StateVector> {
    let mut sum = CVector::zeros(space.total_dim());
    for axis in Axis::ALL {
        sum += ghz_state(space, axis).amplitudes;
    }
    let norm = sum.norm();
    if norm < 1e-10 {
        return Err(Error::DegenerateProbe(norm));
    }
    Ok(StateVector {
        space: space.clone(),
        amplitudes: sum / re(norm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn dimensions() {
        assert_eq!(dicke_dimension(3).unwrap(), 6);
        assert_eq!(dicke_dimension(1).unwrap(), 2);
        assert_eq!(dicke_dimension(4).unwrap(), 9);
        assert_eq!(dicke_dimension(20).unwrap(), 121);
        assert!(matches!(dicke_dimension(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn degeneracies() {
        assert_eq!(degeneracy(2, 0).unwrap(), 1);
        assert_eq!(degeneracy(4, 2).unwrap(), 3);
        assert_eq!(degeneracy(3, 1).unwrap(), 2);
        for n in 1..=MAX_PARTICLES {
            assert_eq!(degeneracy(n, n).unwrap(), 1);
        }
        // against the factorial formula where it is still exact in u128
        for n in 1..=30u32 {
            for two_j in (n % 2..=n).step_by(2) {
                let fact = |k: u32| (1..=k).fold(1u128, |a, i| a * u128::from(i));
                let half_minus = (n - two_j) / 2;
                let half_plus = (n + two_j) / 2 + 1;
                let expected =
                    fact(n) * u128::from(two_j + 1) / (fact(half_minus) * fact(half_plus));
                assert_eq!(u128::from(degeneracy(n, two_j).unwrap()), expected);
            }
        }
        assert!(degeneracy(4, 1).is_err());
        assert!(degeneracy(4, 6).is_err());
        assert!(degeneracy(64, 0).is_ok());
        assert!(degeneracy(65, 1).is_err());
    }

    #[test]
    fn cumulative_degeneracy_is_tail_sum() {
        for n in 1..=24u32 {
            for two_j in (n % 2..=n).step_by(2) {
                let tail: u64 = (two_j..=n)
                    .step_by(2)
                    .map(|tj| degeneracy(n, tj).unwrap())
                    .sum();
                assert_eq!(cumulative_degeneracy(n, two_j).unwrap(), tail);
            }
        }
    }

    #[test]
    fn space_layout() {
        let s = DickeSpace::new(3).unwrap();
        let got: Vec<_> = s
            .sectors()
            .iter()
            .map(|x| (x.two_j, x.dim, x.degeneracy))
            .collect();
        assert_eq!(got, vec![(3, 4, 1), (1, 2, 2)]);
        assert_eq!(s.total_dim(), 6);
        assert_eq!(s.sector(1).offset, 4);
        let s = DickeSpace::new(2).unwrap();
        let got: Vec<_> = s
            .sectors()
            .iter()
            .map(|x| (x.two_j, x.dim, x.degeneracy))
            .collect();
        assert_eq!(got, vec![(2, 3, 1), (0, 1, 1)]);
        let s = DickeSpace::new(20).unwrap();
        assert_eq!(s.total_dim(), 121);
        assert_eq!(s.sectors().iter().map(|x| x.dim).sum::<usize>(), 121);
        assert_eq!(
            s.vectorized_len(),
            s.sectors().iter().map(|x| x.dim * x.dim).sum::<usize>()
        );
    }

    #[test]
    fn single_spin_jz() {
        let s = DickeSpace::new(1).unwrap();
        let jz = collective_operator(&s, CollectiveKind::Z).to_dense();
        assert_eq!(jz[(0, 0)], re(0.5));
        assert_eq!(jz[(1, 1)], re(-0.5));
    }

    #[test]
    fn spin_algebra_and_casimir() {
        for n in 1..=9 {
            let s = DickeSpace::new(n).unwrap();
            let jx = collective_operator(&s, CollectiveKind::X);
            let jy = collective_operator(&s, CollectiveKind::Y);
            let jz = collective_operator(&s, CollectiveKind::Z);
            let cyc = [(&jx, &jy, &jz), (&jy, &jz, &jx), (&jz, &jx, &jy)];
            for (a, b, c) in cyc {
                let lhs = a.commutator(b);
                assert!(lhs.max_abs_diff(&c.scale(I)) < 1e-12);
            }
            let casimir = jx.matmul(&jx).add(&jy.matmul(&jy)).add(&jz.matmul(&jz));
            for (sec, b) in s.sectors().iter().zip(casimir.blocks()) {
                let j = sec.j();
                let expect = CMatrix::identity(sec.dim, sec.dim) * re(j * (j + 1.0));
                assert!(linalg::max_abs_diff(b, &expect) < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_poles_and_equator() {
        let s = DickeSpace::new(4).unwrap();
        let north = coherent_state(&s, 0.0, 0.3);
        assert!((north.amplitudes()[0] - re(1.0)).norm() < 1e-15);
        let south = coherent_state(&s, PI, 0.0);
        assert!((south.amplitudes()[4].norm() - 1.0).abs() < 1e-15);
        let s2 = DickeSpace::new(2).unwrap();
        let eq = coherent_state(&s2, PI / 2.0, 0.0);
        let expect = [0.5, FRAC_1_SQRT_2, 0.5];
        for (k, e) in expect.iter().enumerate() {
            assert!((eq.amplitudes()[k] - re(*e)).norm() < 1e-15);
        }
        assert!(eq.amplitudes()[3].norm() == 0.0);
    }

    #[test]
    fn coherent_normalization_grid() {
        let s = DickeSpace::new(15).unwrap();
        for a in 0..20 {
            for b in 0..20 {
                let th = PI * a as f64 / 19.0;
                let ph = 2.0 * PI * b as f64 / 20.0;
                let cs = coherent_state(&s, th, ph);
                assert!((cs.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ghz_n2() {
        let s = DickeSpace::new(2).unwrap();
        let gz = ghz_state(&s, Axis::Z);
        let expect = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        for (k, e) in expect.iter().enumerate() {
            assert!((gz.amplitudes()[k] - re(*e)).norm() < 1e-15);
        }
        let gx = ghz_state(&s, Axis::X);
        assert!((gx.inner(&gz).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ghz_support_and_norm() {
        for n in 1..=12 {
            let s = DickeSpace::new(n).unwrap();
            for axis in Axis::ALL {
                let g = ghz_state(&s, axis);
                assert!((g.norm() - 1.0).abs() < 1e-12, "N={n} axis={axis}");
                assert_eq!(g.weight_outside_top(), 0.0);
            }
        }
    }

    #[test]
    fn simultaneous_probe_n2() {
        let s = DickeSpace::new(2).unwrap();
        let p = simultaneous_probe(&s).unwrap();
        let r10 = 10f64.sqrt();
        let expect = [3.0 / r10, 0.0, 1.0 / r10];
        for (k, e) in expect.iter().enumerate() {
            assert!(
                (p.amplitudes()[k] - re(*e)).norm() < 1e-14,
                "{:?}",
                p.amplitudes()
            );
        }
    }

    #[test]
    fn probes_are_deterministic() {
        let s = DickeSpace::new(11).unwrap();
        let a = simultaneous_probe(&s).unwrap();
        let b = simultaneous_probe(&s).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn density_of_pure_state() {
        let s = DickeSpace::new(3).unwrap();
        let rho = ghz_state(&s, Axis::Y).density().unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let mixed = DensityOperator::maximally_mixed(&s);
        assert!((mixed.trace().re - 1.0).abs() < 1e-15);
    }
}
