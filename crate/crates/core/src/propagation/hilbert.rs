//! Brute-force reference in the full `2^N` product space.
//!
//! Basis index bit `n` set means site `n` is spin-down.

use crate::dicke::{spin_block, BlockOperator, CollectiveKind, DensityOperator, DickeSpace};
use crate::error::{invalid, Result};
use crate::linalg::{self, re, CMatrix, C64, I};
use crate::noise::{gamma_profile, NoiseSpec};

use super::integrator::integrate_controlled;
use super::FieldParams;

/// Largest `N` accepted by the product-space reference.
pub const FULL_HILBERT_MAX_PARTICLES: u32 = 6;

type Local = [[C64; 2]; 2];

fn local_vector_operator(v: [f64; 3]) -> Local {
    let h = |x: f64| x / 2.0;
    [
        [re(h(v[2])), C64::new(h(v[0]), -h(v[1]))],
        [C64::new(h(v[0]), h(v[1])), re(-h(v[2]))],
    ]
}

/// `(op ⊗ site) · x`.
fn left_site(op: &Local, site: u32, x: &CMatrix) -> CMatrix {
    let mask = 1usize << site;
    CMatrix::from_fn(x.nrows(), x.ncols(), |i, c| {
        let bi = (i & mask != 0) as usize;
        let i0 = i & !mask;
        op[bi][0] * x[(i0, c)] + op[bi][1] * x[(i0 | mask, c)]
    })
}

/// `x · (op ⊗ site)`.
fn right_site(op: &Local, site: u32, x: &CMatrix) -> CMatrix {
    let mask = 1usize << site;
    CMatrix::from_fn(x.nrows(), x.ncols(), |r, i| {
        let bi = (i & mask != 0) as usize;
        let i0 = i & !mask;
        x[(r, i0)] * op[0][bi] + x[(r, i0 | mask)] * op[1][bi]
    })
}

fn collective_dense(n: u32, kind: CollectiveKind) -> CMatrix {
    let local = spin_block(1, kind);
    let op: Local = [
        [local[(0, 0)], local[(0, 1)]],
        [local[(1, 0)], local[(1, 1)]],
    ];
    let dim = 1usize << n;
    let id = CMatrix::identity(dim, dim);
    let mut out = CMatrix::zeros(dim, dim);
    for site in 0..n {
        out += left_site(&op, site, &id);
    }
    out
}

/// `E^j_{m,m'}` in the product space for one multiplicity-summed sector,
/// so that `Σ_{copies} |j,m,i⟩⟨j,m',i| = E^j_{m,m'}`.
struct SectorEmbedding {
    /// Indexed `[row][col]` like the Dicke block.
    units: Vec<Vec<CMatrix>>,
}

fn sector_embeddings(space: &DickeSpace) -> Vec<SectorEmbedding> {
    let n = space.n_particles();
    let dim = 1usize << n;
    let jx = collective_dense(n, CollectiveKind::X);
    let jy = collective_dense(n, CollectiveKind::Y);
    let jz = collective_dense(n, CollectiveKind::Z);
    let jp = collective_dense(n, CollectiveKind::Plus);
    let casimir = &jx * &jx + &jy * &jy + &jz * &jz;
    let id = CMatrix::identity(dim, dim);
    let jj = |tj: u32| {
        let j = f64::from(tj) / 2.0;
        j * (j + 1.0)
    };
    space
        .sectors()
        .iter()
        .map(|s| {
            let mut proj = id.clone();
            for other in space.sectors() {
                if other.two_j != s.two_j {
                    let shifted = &casimir - &id * re(jj(other.two_j));
                    proj = (&proj * shifted) / re(jj(s.two_j) - jj(other.two_j));
                }
            }
            let m_proj = |two_m: i64| {
                CMatrix::from_fn(dim, dim, |r, c| {
                    let down = (r as u32).count_ones() as i64;
                    if r == c && i64::from(n) - 2 * down == two_m {
                        re(1.0)
                    } else {
                        re(0.0)
                    }
                })
            };
            let mut units = vec![vec![CMatrix::zeros(0, 0); s.dim]; s.dim];
            for col in 0..s.dim {
                let mut current = &proj * m_proj(s.two_m(col));
                units[col][col] = current.clone();
                for row in (0..col).rev() {
                    // raise from m(row+1) to m(row)
                    let m = s.m(row + 1);
                    let j = s.j();
                    let a = ((j - m) * (j + m + 1.0)).sqrt();
                    current = (&jp * &current) / re(a);
                    units[row][col] = current.clone();
                }
            }
            for row in 0..s.dim {
                for col in 0..row {
                    units[row][col] = units[col][row].adjoint();
                }
            }
            SectorEmbedding { units }
        })
        .collect()
}

/// Block-diagonal Dicke state mapped to the product space (each degenerate
/// copy receives an equal share).
pub fn symmetric_embedding(rho: &DensityOperator) -> Result<CMatrix> {
    let space = rho.space();
    if space.n_particles() > FULL_HILBERT_MAX_PARTICLES {
        return invalid(format!(
            "product-space embedding limited to N ≤ {FULL_HILBERT_MAX_PARTICLES}"
        ));
    }
    let dim = 1usize << space.n_particles();
    let mut out = CMatrix::zeros(dim, dim);
    for ((s, b), emb) in space
        .sectors()
        .iter()
        .zip(rho.as_operator().blocks())
        .zip(sector_embeddings(space))
    {
        let w = 1.0 / s.degeneracy as f64;
        for r in 0..s.dim {
            for c in 0..s.dim {
                if b[(r, c)] != re(0.0) {
                    out += &emb.units[r][c] * (b[(r, c)] * w);
                }
            }
        }
    }
    Ok(out)
}

/// First and second moments of the collective spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveMoments {
    /// `⟨J_α⟩`
    pub first: [f64; 3],
    /// `⟨J_α J_β⟩`
    pub second: [[C64; 3]; 3],
}

impl CollectiveMoments {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..3 {
            d = d.max((self.first[a] - other.first[a]).abs());
            for b in 0..3 {
                d = d.max((self.second[a][b] - other.second[a][b]).norm());
            }
        }
        d
    }
}

const KINDS: [CollectiveKind; 3] = [CollectiveKind::X, CollectiveKind::Y, CollectiveKind::Z];

fn moments_from(ops: &[CMatrix], tr: impl Fn(&CMatrix) -> C64) -> CollectiveMoments {
    let mut first = [0.0; 3];
    let mut second = [[re(0.0); 3]; 3];
    for a in 0..3 {
        first[a] = tr(&ops[a]).re;
        for b in 0..3 {
            second[a][b] = tr(&(&ops[a] * &ops[b]));
        }
    }
    CollectiveMoments { first, second }
}

/// Collective moments of a Dicke-basis state.
pub fn collective_moments(rho: &DensityOperator) -> CollectiveMoments {
    let dense = rho.to_dense();
    let ops: Vec<CMatrix> = KINDS
        .iter()
        .map(|&k| crate::dicke::collective_operator(rho.space(), k).to_dense())
        .collect();
    moments_from(&ops, |o| (&dense * o).trace())
}

/// Product-space density matrix produced by [`full_hilbert_reference`].
#[derive(Debug, Clone)]
pub struct FullHilbertState {
    n: u32,
    rho: CMatrix,
}

impl FullHilbertState {
    pub fn n_particles(&self) -> u32 {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn collective_moments(&self) -> CollectiveMoments {
        let ops: Vec<CMatrix> = KINDS.iter().map(|&k| collective_dense(self.n, k)).collect();
        moments_from(&ops, |o| (&self.rho * o).trace())
    }

    /// Multiplicity-summed Dicke blocks of this state.
    pub fn reduce(&self, space: &DickeSpace) -> Result<BlockOperator> {
        if space.n_particles() != self.n {
            return invalid("space does not match the particle number");
        }
        let embs = sector_embeddings(space);
        Ok(BlockOperator::from_fn(space, |s| {
            let si = space.sector_index(s.two_j).expect("own sector");
            CMatrix::from_fn(s.dim, s.dim, |r, c| {
                (&self.rho * &embs[si].units[c][r]).trace()
            })
        }))
    }

    /// Uhlmann fidelity with the product-space embedding of `other`.
    pub fn fidelity_with(&self, other: &DensityOperator) -> Result<f64> {
        let sigma = symmetric_embedding(other)?;
        let root = linalg::hermitian_function(&self.rho, |v| re(v.max(0.0).sqrt()))?;
        let inner = &root * sigma * &root;
        let (vals, _) = linalg::hermitian_eigen(&inner)?;
        let top = vals.iter().fold(0.0f64, |a, v| a.max(*v));
        let s: f64 = vals
            .iter()
            .filter(|&&v| v > 1e-14 * top)
            .map(|v| v.sqrt())
            .sum();
        Ok(s * s)
    }
}

/// Integrates the master equation with explicit site operators, starting
/// from the symmetric state with top-sector amplitudes `top` (`m = N/2`
/// first).
pub fn full_hilbert_reference(
    n: u32,
    top: &[C64],
    field: &FieldParams,
    spec: &NoiseSpec,
    t: f64,
) -> Result<FullHilbertState> {
    if n == 0 || n > FULL_HILBERT_MAX_PARTICLES {
        return invalid(format!(
            "product-space reference needs 1 ≤ N ≤ {FULL_HILBERT_MAX_PARTICLES}, got {n}"
        ));
    }
    if top.len() != n as usize + 1 {
        return invalid(format!("expected {} amplitudes, got {}", n + 1, top.len()));
    }
    if !(t >= 0.0) {
        return invalid(format!("time must be nonnegative, got {t}"));
    }
    let dim = 1usize << n;
    let mut psi = vec![re(0.0); dim];
    for (idx, amp) in psi.iter_mut().enumerate() {
        let k = (idx as u32).count_ones() as u64;
        let count = crate::dicke::binomial_f64(n, k as u32);
        *amp = top[k as usize] / count.sqrt();
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return invalid(format!("amplitudes are not normalized (norm {norm})"));
    }
    let rho0 = CMatrix::from_fn(dim, dim, |r, c| psi[r] * psi[c].conj());
    if t == 0.0 {
        return Ok(FullHilbertState { n, rho: rho0 });
    }
    let h_local = local_vector_operator(field.phi);
    let a_local = local_vector_operator(spec.axis());
    let nn = f64::from(n);
    let rate_max = gamma_profile(spec, t)?;
    let stiffness = 4.0 * nn * rate_max + 2.0 * nn * field.magnitude();
    let steps = ((t / 0.01).ceil() as usize)
        .max((t * stiffness).ceil() as usize)
        .max(1);
    let x0: Vec<C64> = rho0.iter().copied().collect();
    let (x, _) = integrate_controlled(&x0, 0.0, t, steps, 1e-10, |s, x, out| {
        let rho = CMatrix::from_column_slice(dim, dim, x);
        let rate = gamma_profile(spec, s).expect("s stays nonnegative");
        let mut d = CMatrix::zeros(dim, dim);
        for site in 0..n {
            d += (left_site(&h_local, site, &rho) - right_site(&h_local, site, &rho)) * (-I);
            if rate != 0.0 {
                let ara = right_site(&a_local, site, &left_site(&a_local, site, &rho));
                d += (ara - &rho) * re(2.0 * rate);
            }
        }
        out.copy_from_slice(d.as_slice());
    })?;
    Ok(FullHilbertState {
        n,
        rho: CMatrix::from_column_slice(dim, dim, &x),
    })
}
