//! Exact dissipative propagation in the frame where the noise axis is `z`.
//!
//! After rotating `z` onto the axis, only the `J_z`-type channels survive and
//! each element `|j,m⟩⟨j,m'|` couples to `j ± 1` with the same `(m, m')`. The
//! map therefore splits into independent tridiagonal chains over `j`, each of
//! which is similar to a real symmetric matrix and can be exponentiated
//! exactly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dicke::{collective_operator, BlockOperator, CollectiveKind, DickeSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::noise::local_coupling_coefficients;

#[derive(Debug, Clone)]
struct Chain {
    cells: Vec<usize>,
    values: DVector<f64>,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
}

impl Chain {
    fn build(cells: Vec<usize>, diag: Vec<f64>, down: Vec<f64>, up: Vec<f64>) -> Result<Self> {
        let k = cells.len();
        let mut scale = vec![1.0; k];
        let mut sym = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            sym[(i, i)] = diag[i];
        }
        for i in 0..k.saturating_sub(1) {
            let (s, u) = (down[i], up[i]);
            let ratio = if s == 0.0 && u == 0.0 {
                1.0
            } else if s * u > 0.0 {
                (u / s).sqrt()
            } else {
                return Err(Error::NumericalError(format!(
                    "sector chain is not symmetrizable (couplings {s:e}, {u:e})"
                )));
            };
            scale[i + 1] = scale[i] * ratio;
            let off = (s * u).max(0.0).sqrt();
            sym[(i + 1, i)] = off;
            sym[(i, i + 1)] = off;
        }
        let eig = SymmetricEigen::try_new(sym, 1e-15, 10_000).ok_or_else(|| {
            Error::NumericalError("chain eigen-decomposition did not converge".into())
        })?;
        let v = eig.eigenvectors;
        let mut left = v.clone();
        let mut right = v.transpose();
        for i in 0..k {
            left.row_mut(i).scale_mut(1.0 / scale[i]);
            right.column_mut(i).scale_mut(scale[i]);
        }
        Ok(Chain {
            cells,
            values: eig.eigenvalues,
            left,
            right,
        })
    }

    fn apply(&self, theta: f64, x: &[C64], out: &mut [C64]) {
        let k = self.cells.len();
        let mut mid = vec![C64::new(0.0, 0.0); k];
        for a in 0..k {
            let mut acc = C64::new(0.0, 0.0);
            for (i, &c) in self.cells.iter().enumerate() {
                acc += x[c] * self.right[(a, i)];
            }
            mid[a] = acc * (theta * self.values[a]).exp();
        }
        for (i, &c) in self.cells.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (a, m) in mid.iter().enumerate() {
                acc += m * self.left[(i, a)];
            }
            out[c] = acc;
        }
    }
}

/// `exp(Θ L̃)` for a fixed space and axis, valid for every `Θ ≥ 0`.
#[derive(Debug, Clone)]
pub struct AxisFramePropagator {
    space: DickeSpace,
    rotation: BlockOperator,
    chains: Vec<Chain>,
}

impl AxisFramePropagator {
    /// `unit_axis` is the noise direction normalized to length 1.
    pub fn new(space: &DickeSpace, unit_axis: [f64; 3]) -> Result<Self> {
        let [x, y, z] = unit_axis;
        let polar = z.clamp(-1.0, 1.0).acos();
        let azimuth = y.atan2(x);
        let jy = collective_operator(space, CollectiveKind::Y);
        let rotation = BlockOperator::from_blocks(
            space,
            space
                .sectors()
                .iter()
                .zip(jy.blocks())
                .map(|(s, b)| {
                    let tilt = linalg::hermitian_function(b, |v| C64::from_polar(1.0, -polar * v))?;
                    let mut out = tilt;
                    for r in 0..s.dim {
                        let phase = C64::from_polar(1.0, -azimuth * s.m(r));
                        out.row_mut(r).iter_mut().for_each(|z| *z *= phase);
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()?,
        )?;

        let n = space.n_particles();
        let sectors = space.sectors();
        let n_i = i64::from(n);
        let mut chains = Vec::new();
        for tm in (-n_i..=n_i).step_by(2) {
            for tmp in (-n_i..=n_i).step_by(2) {
                let floor = tm.abs().max(tmp.abs());
                let members: Vec<usize> = (0..sectors.len())
                    .filter(|&si| i64::from(sectors[si].two_j) >= floor)
                    .collect();
                let mut cells = Vec::with_capacity(members.len());
                let (mut diag, mut down, mut up) = (Vec::new(), Vec::new(), Vec::new());
                for (pos, &si) in members.iter().enumerate() {
                    let s = &sectors[si];
                    let (r, c) = (
                        s.row_of(tm).expect("m in range"),
                        s.row_of(tmp).expect("m' in range"),
                    );
                    cells.push(s.vec_offset + r * s.dim + c);
                    let k = local_coupling_coefficients(n, s.two_j, tm, tmp)?;
                    let zi = 2;
                    diag.push(
                        2.0 * (4.0 * k.at_m.same[zi] * k.at_m_prime.same[zi] * k.lambda_a
                            - f64::from(n)),
                    );
                    if pos + 1 < members.len() {
                        down.push(8.0 * k.at_m.down[zi] * k.at_m_prime.down[zi] * k.lambda_b);
                    }
                    if pos > 0 {
                        up.push(8.0 * k.at_m.up[zi] * k.at_m_prime.up[zi] * k.lambda_d);
                    }
                }
                chains.push(Chain::build(cells, diag, down, up)?);
            }
        }
        Ok(AxisFramePropagator {
            space: space.clone(),
            rotation,
            chains,
        })
    }

    pub fn space(&self) -> &DickeSpace {
        &self.space
    }

    /// `exp(Θ L̃)[x]`.
    pub fn apply(&self, x: &BlockOperator, theta: f64) -> BlockOperator {
        if theta == 0.0 {
            return x.clone();
        }
        let framed = self.rotation.adjoint().conjugate(x).to_vectorized();
        let mut out = vec![C64::new(0.0, 0.0); framed.len()];
        for chain in &self.chains {
            chain.apply(theta, &framed, &mut out);
        }
        let evolved = BlockOperator::from_vectorized(&self.space, &out).expect("length preserved");
        self.rotation.conjugate(&evolved)
    }

    /// Eigenvalues of the generator `L̃`, all nonpositive.
    pub fn generator_spectrum(&self) -> Vec<f64> {
        self.chains
            .iter()
            .flat_map(|c| c.values.iter().copied())
            .collect()
    }
}
