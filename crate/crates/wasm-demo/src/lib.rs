//! Browser bindings: Dicke-space layout, Husimi maps and time sweeps.

use serde_json::json;
use wasm_bindgen::prelude::*;

use dicke_metrology::dicke::{ghz_state, simultaneous_probe, Axis, DickeSpace, StateVector};
use dicke_metrology::experiments::{husimi_map, sweep_time, Scenario, SweepConfig, TimeGrid};
use dicke_metrology::noise::NoiseKind;

fn js(e: dicke_metrology::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn probe(space: &DickeSpace, name: &str) -> Result<StateVector, JsError> {
    match name {
        "sim" => simultaneous_probe(space).map_err(js),
        "ghz-x" => Ok(ghz_state(space, Axis::X)),
        "ghz-y" => Ok(ghz_state(space, Axis::Y)),
        "ghz-z" => Ok(ghz_state(space, Axis::Z)),
        other => Err(JsError::new(&format!("unknown probe '{other}'"))),
    }
}

/// Sector table of the Dicke space for `n` spins, as JSON.
#[wasm_bindgen]
pub fn space_info(n: u32) -> Result<String, JsError> {
    let space = DickeSpace::new(n).map_err(js)?;
    Ok(json!({ "n": n, "d_D": space.total_dim(), "sectors": space.sectors() }).to_string())
}

/// Husimi function on an `n_theta × n_phi` grid, row-major with theta over rows.
#[wasm_bindgen]
pub fn husimi(n: u32, probe_name: &str, n_theta: usize, n_phi: usize) -> Result<Vec<f64>, JsError> {
    let space = DickeSpace::new(n).map_err(js)?;
    let map = husimi_map(&probe(&space, probe_name)?, (n_theta, n_phi)).map_err(js)?;
    Ok((0..n_theta)
        .flat_map(|i| map.values.row(i).iter().copied().collect::<Vec<_>>())
        .collect())
}

/// `I(t)` over a log grid with the default field and noise axis, as JSON
/// `{t, value, t_opt, i_min}`; singular points are `null`.
#[wasm_bindgen]
pub fn sweep_curve(
    n: u32,
    gamma: f64,
    kind: &str,
    scenario: &str,
    count: usize,
    t_min: f64,
    t_max: f64,
) -> Result<String, JsError> {
    let kind = match kind {
        "markovian" => NoiseKind::Markovian,
        "nonmarkovian" => NoiseKind::NonMarkovian,
        "none" => NoiseKind::None,
        other => return Err(JsError::new(&format!("unknown noise kind '{other}'"))),
    };
    let scenario: Scenario = scenario.parse().map_err(js)?;
    let config = SweepConfig {
        n,
        gamma,
        kind,
        scenario,
        t_grid: TimeGrid {
            count,
            min: t_min,
            max: t_max,
        },
        total_time: t_max,
        ..SweepConfig::default()
    };
    let res = sweep_time(&config).map_err(js)?;
    Ok(json!({
        "t": res.curve.iter().map(|p| p.t).collect::<Vec<_>>(),
        "value": res.curve.iter().map(|p| p.value).collect::<Vec<_>>(),
        "t_opt": res.t_opt,
        "i_min": res.i_min,
    })
    .to_string())
}
