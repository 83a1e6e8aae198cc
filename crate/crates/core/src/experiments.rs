//! Time sweeps, particle-number scans, power-law fits and Husimi maps.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dicke::{
    coherent_state, ghz_state, simultaneous_probe, Axis, DensityOperator, DickeSpace, StateVector,
};
use crate::error::{invalid, Error, Result};
use crate::estimation::{
    bound_individual, bound_simultaneous, partial_rho, qfim, GeneratorSet, QfimScenario,
};
use crate::linalg::C64;
use crate::noise::{NoiseKind, NoiseSpec};
use crate::propagation::{AxisPolicy, DephasingMethod, FieldParams, Propagator};

/// Estimation protocol being bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// One probe carrying all three components.
    #[serde(rename = "sim")]
    Simultaneous,
    /// Three GHZ probes, one per component, sharing the total time.
    #[serde(rename = "ind")]
    Individual,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Simultaneous => "sim",
            Scenario::Individual => "ind",
        })
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" | "simultaneous" => Ok(Scenario::Simultaneous),
            "ind" | "individual" => Ok(Scenario::Individual),
            _ => invalid(format!("unknown scenario '{s}' (expected sim or ind)")),
        }
    }
}

/// Log-spaced probe times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

impl TimeGrid {
    pub fn new(count: usize, min: f64, max: f64) -> Result<Self> {
        let grid = TimeGrid { count, min, max };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 3 {
            return invalid(format!(
                "time grid needs at least 3 points, got {}",
                self.count
            ));
        }
        if !(self.min > 0.0) || !(self.max > self.min) || !self.max.is_finite() {
            return invalid(format!(
                "time grid bounds must satisfy 0 < min < max, got [{}, {}]",
                self.min, self.max
            ));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.min.ln(), self.max.ln());
        let last = self.count - 1;
        (0..self.count)
            .map(|i| match i {
                0 => self.min,
                _ if i == last => self.max,
                _ => (a + (b - a) * i as f64 / last as f64).exp(),
            })
            .collect()
    }
}

/// Everything needed to trace `I(t)` for one `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: u32,
    pub field: FieldParams,
    pub axis: [f64; 3],
    pub gamma: f64,
    pub kind: NoiseKind,
    pub total_time: f64,
    pub t_grid: TimeGrid,
    pub scenario: Scenario,
    pub method: DephasingMethod,
}

/// Default field components.
pub const DEFAULT_FIELD: [f64; 3] = [0.01, 0.01, 0.01];
/// Default total time `T`.
pub const DEFAULT_TOTAL_TIME: f64 = 100.0;
/// Default dephasing rate for scans.
pub const DEFAULT_GAMMA: f64 = 0.05;

pub fn default_axis() -> [f64; 3] {
    [2.0 / 3f64.sqrt(); 3]
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 20,
            field: FieldParams { phi: DEFAULT_FIELD },
            axis: default_axis(),
            gamma: DEFAULT_GAMMA,
            kind: NoiseKind::Markovian,
            total_time: DEFAULT_TOTAL_TIME,
            t_grid: TimeGrid {
                count: 60,
                min: 1e-2,
                max: DEFAULT_TOTAL_TIME,
            },
            scenario: Scenario::Simultaneous,
            method: DephasingMethod::AxisFrame,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.t_grid.validate()?;
        if !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return invalid(format!(
                "total time must be positive, got {}",
                self.total_time
            ));
        }
        if self.t_grid.max > self.total_time * (1.0 + 1e-12) {
            return invalid(format!(
                "time grid reaches {} beyond the total time {}",
                self.t_grid.max, self.total_time
            ));
        }
        DickeSpace::new(self.n)?;
        FieldParams::new(self.field.phi)?;
        self.noise()?;
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(self.kind, self.gamma, self.axis)
    }
}

/// One grid point; `value` is absent where the information matrix was singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub value: Option<f64>,
}

/// How the reported optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementMeta {
    /// Grid index of the selected discrete minimum.
    pub grid_index: usize,
    /// Whether the selected minimum is interior and was refined by a parabola.
    pub refined: bool,
    /// Largest log-space deviation of the parabola at the next-nearest grid
    /// points (0 when unavailable).
    pub residual: f64,
    /// True when no interior local minimum exists and the global grid minimum
    /// was reported instead.
    pub fallback_global: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub curve: Vec<CurvePoint>,
    pub t_opt: f64,
    pub i_min: f64,
    pub refinement: RefinementMeta,
}

impl SweepResult {
    /// Smallest value on the grid.
    pub fn discrete_min(&self) -> f64 {
        self.curve
            .iter()
            .filter_map(|p| p.value)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the bound at each grid time for one configuration.
struct SweepEngine {
    config: SweepConfig,
    propagators: Propagator,
    probes: Vec<(Axis, DensityOperator)>,
}

impl SweepEngine {
    fn new(config: &SweepConfig) -> Result<Self> {
        config.validate()?;
        let space = DickeSpace::new(config.n)?;
        let spec = config.noise()?;
        let propagators = Propagator::new(
            &space,
            &config.field,
            &spec,
            config.method,
            AxisPolicy::RequireParallel,
        )?;
        let probes = match config.scenario {
            Scenario::Simultaneous => vec![(Axis::X, simultaneous_probe(&space)?.density()?)],
            Scenario::Individual => Axis::ALL
                .iter()
                .map(|&a| Ok((a, ghz_state(&space, a).density()?)))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(SweepEngine {
            config: *config,
            propagators,
            probes,
        })
    }

    fn evaluate(&self, t: f64) -> Result<Option<f64>> {
        let generators = GeneratorSet::new(self.propagators.spectrum(), t)?;
        let repetitions = self.config.total_time / t;
        let outcome = match self.config.scenario {
            Scenario::Simultaneous => {
                let res = self.propagators.evolve(&self.probes[0].1, t)?;
                let d = crate::estimation::partials(&res, &generators)?;
                let q = qfim(&res.rho, &d, t, QfimScenario::Simultaneous)?;
                bound_simultaneous(&q, repetitions)
            }
            Scenario::Individual => {
                let mut diag = [0.0; 3];
                for (axis, rho0) in &self.probes {
                    let res = self.propagators.evolve(rho0, t)?;
                    let d = Axis::ALL.map(|k| partial_rho(&res, &generators, k));
                    let d = [d[0].clone()?, d[1].clone()?, d[2].clone()?];
                    let q = qfim(&res.rho, &d, t, QfimScenario::individual(*axis))?;
                    diag[axis.index()] = q.diagonal(*axis);
                }
                bound_individual(diag, repetitions, self.config.total_time)
            }
        };
        match outcome {
            Ok(b) => Ok(Some(b.value)),
            Err(Error::SingularQfim(msg)) => {
                log::debug!("t = {t}: {msg}");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Index of the first interior local minimum, treating absent values as `+∞`.
fn first_local_minimum(values: &[f64]) -> Option<usize> {
    (1..values.len().saturating_sub(1)).find(|&i| {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        b.is_finite() && b <= a && b <= c && (b < a || b < c)
    })
}

fn parabola(xs: [f64; 3], ys: [f64; 3]) -> Option<(f64, f64, f64)> {
    let [x0, x1, x2] = xs;
    let [y0, y1, y2] = ys;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    let b = d01 - a * (x0 + x1);
    let c = y0 - a * x0 * x0 - b * x0;
    [a, b, c].iter().all(|v| v.is_finite()).then_some((a, b, c))
}

fn locate_optimum(curve: &[CurvePoint]) -> Result<(f64, f64, RefinementMeta)> {
    let values: Vec<f64> = curve
        .iter()
        .map(|p| p.value.unwrap_or(f64::INFINITY))
        .collect();
    let Some((global, _)) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
    else {
        return Err(Error::ExperimentFailed(
            "information matrix singular at every grid point".into(),
        ));
    };
    let local = first_local_minimum(&values);
    let idx = local.unwrap_or(global);
    let mut meta = RefinementMeta {
        grid_index: idx,
        refined: false,
        residual: 0.0,
        fallback_global: local.is_none(),
    };
    let (t_d, v_d) = (curve[idx].t, values[idx]);
    if idx == 0
        || idx + 1 >= curve.len()
        || !values[idx - 1].is_finite()
        || !values[idx + 1].is_finite()
    {
        return Ok((t_d, v_d, meta));
    }
    let xs = [
        curve[idx - 1].t.ln(),
        curve[idx].t.ln(),
        curve[idx + 1].t.ln(),
    ];
    let ys = [values[idx - 1].ln(), values[idx].ln(), values[idx + 1].ln()];
    let Some((a, b, c)) = parabola(xs, ys) else {
        return Ok((t_d, v_d, meta));
    };
    if !(a > 0.0) {
        return Ok((t_d, v_d, meta));
    }
    let x = (-b / (2.0 * a)).clamp(xs[0], xs[2]);
    let y = a * x * x + b * x + c;
    let eval = |x: f64| a * x * x + b * x + c;
    meta.refined = true;
    meta.residual = [idx.checked_sub(2), Some(idx + 2)]
        .into_iter()
        .flatten()
        .filter(|&j| j < curve.len() && values[j].is_finite())
        .map(|j| (values[j].ln() - eval(curve[j].t.ln())).abs())
        .fold(0.0, f64::max);
    Ok((x.exp(), y.exp().min(v_d), meta))
}

/// Traces `I(t)` over the configured grid and locates the optimal probe time.
///
/// `I(t) = Tr[Q⁻¹]·t/T` for the simultaneous probe and `(3t/T) Σ_k 1/Q_kk`
/// for the individual one. The reported optimum is the first interior local
/// minimum of the curve, refined by a parabola in `(ln t, ln I)`; without an
/// interior minimum the smallest grid value is used.
pub fn sweep_time(config: &SweepConfig) -> Result<SweepResult> {
    let engine = SweepEngine::new(config)?;
    let times = config.t_grid.points();
    let values = par_map(&times, |&t| engine.evaluate(t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let curve: Vec<CurvePoint> = times
        .iter()
        .zip(values)
        .map(|(&t, value)| CurvePoint { t, value })
        .collect();
    let (t_opt, i_min, refinement) = locate_optimum(&curve)?;
    Ok(SweepResult {
        config: *config,
        curve,
        t_opt,
        i_min,
        refinement,
    })
}

/// Points in the narrowing rescan.
pub const RESCAN_POINTS: usize = 40;
/// Half-width of the rescan window as a multiplicative factor.
pub const RESCAN_FACTOR: f64 = 4.0;

/// Repeats a sweep on `[t_opt/4, 4 t_opt]` (clipped to the first grid).
pub fn rescan(first: &SweepResult) -> Result<SweepResult> {
    let base = first.config;
    let lo = (first.t_opt / RESCAN_FACTOR).max(base.t_grid.min);
    let hi = (first.t_opt * RESCAN_FACTOR).min(base.t_grid.max);
    if !(hi > lo) {
        return Ok(first.clone());
    }
    let mut config = base;
    config.t_grid = TimeGrid::new(RESCAN_POINTS, lo, hi)?;
    sweep_time(&config)
}

/// First pass on the configured grid followed by a narrowed rescan.
pub fn sweep_time_refined(config: &SweepConfig) -> Result<SweepResult> {
    rescan(&sweep_time(config)?)
}

/// Optimum of one `(N, noise kind, scenario)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: u32,
    pub kind: NoiseKind,
    pub scenario: Scenario,
    pub t_opt: Option<f64>,
    pub i_min: Option<f64>,
}

/// Runs a refined sweep for every `N` in `n_list` and every combination of
/// `kinds` and `scenarios`, keeping the rest of `base` fixed. Rows are ordered
/// by `(N, kind, scenario)`; failed sweeps give rows without values.
pub fn scan_particles(
    n_list: &[u32],
    base: &SweepConfig,
    kinds: &[NoiseKind],
    scenarios: &[Scenario],
) -> Result<Vec<ScanRow>> {
    if n_list.is_empty() {
        return invalid("particle list is empty");
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("particle list must be strictly ascending");
    }
    let mut jobs = Vec::new();
    for &n in n_list {
        for &kind in kinds {
            for &scenario in scenarios {
                jobs.push((n, kind, scenario));
            }
        }
    }
    let rows = par_map(&jobs, |&(n, kind, scenario)| {
        let config = SweepConfig {
            n,
            kind,
            scenario,
            ..*base
        };
        config.validate()?;
        match sweep_time_refined(&config) {
            Ok(r) => Ok(ScanRow {
                n,
                kind,
                scenario,
                t_opt: Some(r.t_opt),
                i_min: Some(r.i_min),
            }),
            Err(Error::ExperimentFailed(msg)) => {
                log::warn!("N = {n}, {kind}, {scenario}: {msg}");
                Ok(ScanRow {
                    n,
                    kind,
                    scenario,
                    t_opt: None,
                    i_min: None,
                })
            }
            Err(e) => Err(e),
        }
    });
    rows.into_iter().collect()
}

/// Least-squares line through `(ln N, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS residual in log space.
    pub residual: f64,
    pub points_used: usize,
}

/// Smallest `N` included in fits by default.
pub const FIT_N_MIN: f64 = 10.0;

pub fn fit_power_law(points: &[(f64, f64)], n_min: f64) -> Result<PowerLawFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, _)| *n >= n_min)
        .map(|&(n, v)| (n.ln(), v.ln()))
        .collect();
    if used.len() < 3 {
        return invalid(format!(
            "power-law fit needs at least 3 points with N ≥ {n_min}"
        ));
    }
    if used.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return invalid("power-law fit needs positive N and values");
    }
    let k = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / k;
    let my = used.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return invalid("power-law fit needs distinct N values");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = used
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        residual: (rss / k).sqrt(),
        points_used: used.len(),
    })
}

/// `Q(θ, ϕ) = |⟨θ, ϕ|ψ⟩|²` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiMap {
    /// Polar angles, `0..=π` inclusive.
    pub theta: Vec<f64>,
    /// Azimuths, `[0, 2π)`.
    pub phi: Vec<f64>,
    /// `values[(i, k)] = Q(theta[i], phi[k])`.
    pub values: DMatrix<f64>,
    pub two_j: u32,
}

impl HusimiMap {
    /// `(2j+1)/(4π) ∫ Q sinθ dθ dϕ`, evaluated by a Riemann sum.
    pub fn normalization(&self) -> f64 {
        let dt = std::f64::consts::PI / (self.theta.len() - 1) as f64;
        let dp = 2.0 * std::f64::consts::PI / self.phi.len() as f64;
        let mut acc = 0.0;
        for (i, th) in self.theta.iter().enumerate() {
            acc += th.sin() * self.values.row(i).sum();
        }
        (f64::from(self.two_j) + 1.0) / (4.0 * std::f64::consts::PI) * acc * dt * dp
    }
}

/// Default `(n_theta, n_phi)`.
pub const DEFAULT_HUSIMI_GRID: (usize, usize) = (181, 360);

pub fn husimi_map(state: &StateVector, grid: (usize, usize)) -> Result<HusimiMap> {
    let (n_theta, n_phi) = grid;
    if n_theta < 2 || n_phi < 1 {
        return invalid(format!("Husimi grid {n_theta}×{n_phi} is too small"));
    }
    let space = state.space();
    let outside = state.weight_outside_top();
    if outside > 1e-12 {
        log::warn!("state has weight {outside:e} outside the symmetric sector; projecting");
    }
    let top = state.top_sector_amplitudes();
    let theta: Vec<f64> = (0..n_theta)
        .map(|i| std::f64::consts::PI * i as f64 / (n_theta - 1) as f64)
        .collect();
    let phi: Vec<f64> = (0..n_phi)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64)
        .collect();
    let offset = space.top_sector().offset;
    let rows = par_map(&theta, |&th| {
        // magnitudes of the coherent amplitudes; the azimuth enters as e^{-i row ϕ}
        let coh = coherent_state(space, th, 0.0);
        let weights: Vec<C64> = top
            .iter()
            .enumerate()
            .map(|(row, a)| a * coh.amplitudes()[offset + row].re)
            .collect();
        phi.iter()
            .map(|&p| {
                let step = C64::from_polar(1.0, p);
                let mut phase = C64::new(1.0, 0.0);
                let mut acc = C64::new(0.0, 0.0);
                for w in &weights {
                    acc += w * phase;
                    phase *= step;
                }
                acc.norm_sqr()
            })
            .collect::<Vec<f64>>()
    });
    let values = DMatrix::from_fn(n_theta, n_phi, |i, k| rows[i][k]);
    Ok(HusimiMap {
        theta,
        phi,
        values,
        two_j: space.top_sector().two_j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = TimeGrid::new(60, 1e-2, 100.0).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 60);
        assert_eq!(p[0], 1e-2);
        assert_eq!(p[59], 100.0);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::new(2, 1.0, 2.0).is_err());
        assert!(TimeGrid::new(5, 0.0, 2.0).is_err());
    }

    #[test]
    fn synthetic_fits() {
        for e in [-2.0, -1.5, -1.0, 0.5, 1.0, 2.0] {
            let pts: Vec<(f64, f64)> = (10..=24)
                .step_by(2)
                .map(|n| (n as f64, 3.0 * (n as f64).powf(e)))
                .collect();
            let f = fit_power_law(&pts, 10.0).unwrap();
            assert!((f.exponent - e).abs() < 1e-12);
            assert!((f.prefactor - 3.0).abs() < 1e-10);
        }
        assert!(fit_power_law(&[(10.0, 1.0), (12.0, 2.0), (4.0, 1.0)], 10.0).is_err());
    }

    #[test]
    fn optimum_selection() {
        let mk = |v: &[Option<f64>]| -> Vec<CurvePoint> {
            v.iter()
                .enumerate()
                .map(|(i, &value)| CurvePoint {
                    t: 10f64.powf(i as f64 / 4.0),
                    value,
                })
                .collect()
        };
        // decreasing: global minimum at the end
        let c = mk(&[Some(5.0), Some(4.0), Some(3.0), Some(2.0)]);
        let (t, v, m) = locate_optimum(&c).unwrap();
        assert_eq!((t, v), (c[3].t, 2.0));
        assert!(m.fallback_global && !m.refined);
        // first local minimum wins over a deeper later one
        let c = mk(&[
            Some(5.0),
            Some(2.0),
            Some(3.0),
            Some(4.0),
            Some(1.0),
            Some(2.0),
        ]);
        let (t, v, m) = locate_optimum(&c).unwrap();
        assert_eq!(m.grid_index, 1);
        assert!(m.refined && v <= 2.0 && t > c[0].t && t < c[2].t);
        // singular points count as infinite
        let c = mk(&[Some(5.0), Some(2.0), None, Some(1.0)]);
        assert_eq!(locate_optimum(&c).unwrap().2.grid_index, 1);
        let c = mk(&[None, None, None]);
        assert_eq!(locate_optimum(&c).unwrap_err().name(), "ExperimentFailed");
    }

    #[test]
    fn parabola_vertex() {
        let (a, b, c) = parabola([0.0, 1.0, 3.0], [1.0, 0.0, 4.0]).unwrap();
        for x in [0.0, 1.0, 3.0] {
            let y = (x - 1.0f64).powi(2);
            assert!((a * x * x + b * x + c - y).abs() < 1e-14);
        }
    }

    #[test]
    fn husimi_normalized() {
        let space = DickeSpace::new(6).unwrap();
        let psi = simultaneous_probe(&space).unwrap();
        let map = husimi_map(&psi, (200, 200)).unwrap();
        assert!((map.normalization() - 1.0).abs() < 1e-3);
        let ghz = ghz_state(&space, Axis::Z);
        let map = husimi_map(&ghz, (91, 36)).unwrap();
        assert!((map.values[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((map.values[(90, 17)] - 0.5).abs() < 1e-12);
        assert!(map.values[(45, 0)] < 0.1);
    }
}
