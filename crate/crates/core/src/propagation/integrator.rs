//! Fixed-step RK4 with successive step halving.

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Maximum number of step halvings before giving up.
const MAX_HALVINGS: usize = 14;

/// Outcome of a controlled integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationReport {
    pub steps: usize,
    /// Max-norm difference between the last two refinements.
    pub refinement_gap: f64,
}

impl IntegrationReport {
    pub(crate) fn trivial() -> Self {
        IntegrationReport {
            steps: 0,
            refinement_gap: 0.0,
        }
    }
}

fn axpy(out: &mut [C64], x: &[C64], a: f64, k: &[C64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + ki * a;
    }
}

pub(crate) fn rk4<F>(x0: &[C64], t0: f64, t1: f64, steps: usize, f: &mut F) -> Vec<C64>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = x0.len();
    let h = (t1 - t0) / steps as f64;
    let mut x = x0.to_vec();
    let zero = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
    );
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        f(t, &x, &mut k1);
        axpy(&mut tmp, &x, h / 2.0, &k1);
        f(t + h / 2.0, &tmp, &mut k2);
        axpy(&mut tmp, &x, h / 2.0, &k2);
        f(t + h / 2.0, &tmp, &mut k3);
        axpy(&mut tmp, &x, h, &k3);
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    x
}

/// Integrates with `steps`, `2·steps`, ... until two runs agree to `tol`.
pub(crate) fn integrate_controlled<F>(
    x0: &[C64],
    t0: f64,
    t1: f64,
    steps: usize,
    tol: f64,
    mut f: F,
) -> Result<(Vec<C64>, IntegrationReport)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut n = steps.max(1);
    let mut coarse = rk4(x0, t0, t1, n, &mut f);
    let mut gap = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        n *= 2;
        let fine = rk4(x0, t0, t1, n, &mut f);
        gap = fine
            .iter()
            .zip(&coarse)
            .fold(0.0, |a: f64, (p, q)| a.max((p - q).norm()));
        if !gap.is_finite() {
            break;
        }
        if gap < tol {
            return Ok((
                fine,
                IntegrationReport {
                    steps: n,
                    refinement_gap: gap,
                },
            ));
        }
        coarse = fine;
    }
    Err(Error::NumericalError(format!(
        "integration did not converge to {tol:e} (last gap {gap:e} at {n} steps)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let x0 = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let (x, rep) = integrate_controlled(&x0, 0.0, 2.0, 10, 1e-12, |_, x, out| {
            out[0] = -x[0];
            out[1] = x[1] * C64::new(0.0, 3.0);
        })
        .unwrap();
        assert!((x[0].re - (-2f64).exp()).abs() < 1e-11);
        assert!((x[1] - C64::new(0.0, 1.0) * C64::from_polar(1.0, 6.0)).norm() < 1e-11);
        assert!(rep.steps >= 20);
    }

    #[test]
    fn time_dependent_rate() {
        let x0 = [C64::new(1.0, 0.0)];
        let (x, _) =
            integrate_controlled(&x0, 0.0, 1.5, 4, 1e-12, |t, x, out| out[0] = -x[0] * t).unwrap();
        assert!((x[0].re - (-1.125f64).exp()).abs() < 1e-11);
    }
}
