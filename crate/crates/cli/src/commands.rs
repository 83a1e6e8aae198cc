use serde_json::{json, Value};

use dicke_metrology::dicke::{ghz_state, simultaneous_probe, Axis, DickeSpace, StateVector};
use dicke_metrology::estimation::{bound_simultaneous, partials, qfim, GeneratorSet, QfimScenario};
use dicke_metrology::experiments::{
    fit_power_law, husimi_map, scan_particles, sweep_time, ScanRow, Scenario,
};
use dicke_metrology::noise::{NoiseKind, NoiseSpec};
use dicke_metrology::propagation::{collective_moments, AxisPolicy, FieldParams, Propagator};

use crate::config::{FormatArg, ProbeArg, Resolved};
use crate::error::CliError;
use crate::output::{csv, json_doc, num, opt, read_csv, write_to};

pub fn probe_state(space: &DickeSpace, probe: ProbeArg) -> Result<StateVector, CliError> {
    Ok(match probe {
        ProbeArg::Sim => simultaneous_probe(space)?,
        ProbeArg::GhzX => ghz_state(space, Axis::X),
        ProbeArg::GhzY => ghz_state(space, Axis::Y),
        ProbeArg::GhzZ => ghz_state(space, Axis::Z),
    })
}

fn emit(r: &Resolved, text: &str) -> Result<(), CliError> {
    write_to(r.out.as_deref(), text)
}

pub fn space_info(r: &Resolved) -> Result<(), CliError> {
    let space = DickeSpace::new(r.n)?;
    let text = match r.format {
        FormatArg::Csv => {
            let rows: Vec<Vec<String>> = space
                .sectors()
                .iter()
                .map(|s| {
                    vec![
                        s.two_j.to_string(),
                        num(s.j()),
                        s.dim.to_string(),
                        s.degeneracy.to_string(),
                        s.offset.to_string(),
                    ]
                })
                .collect();
            csv(
                r,
                &[format!("d_D={}", space.total_dim())],
                &["two_j", "j", "dim", "degeneracy", "offset"],
                &rows,
                &[],
            )
        }
        FormatArg::Json => json_doc(
            r,
            json!({
                "n": r.n,
                "d_D": space.total_dim(),
                "sectors": space.sectors(),
            }),
        ),
    };
    emit(r, &text)
}

pub fn evolve(r: &Resolved) -> Result<(), CliError> {
    let space = DickeSpace::new(r.n)?;
    let field = FieldParams::new(r.phi)?;
    let spec = NoiseSpec::new(r.kind.into(), r.gamma, r.axis)?;
    let policy = if r.allow_nonparallel {
        AxisPolicy::AllowNonparallel
    } else {
        AxisPolicy::RequireParallel
    };
    let prop = Propagator::new(&space, &field, &spec, r.method.into(), policy)?;
    let rho0 = probe_state(&space, r.probe)?.density()?;
    let res = prop.evolve(&rho0, r.t)?;
    let moments = collective_moments(&res.rho);
    let (q, bound) = if res.split && field.magnitude() > 0.0 && r.t > 0.0 {
        let g = GeneratorSet::new(prop.spectrum(), r.t)?;
        let q = qfim(
            &res.rho,
            &partials(&res, &g)?,
            r.t,
            QfimScenario::Simultaneous,
        )?;
        let bound = match bound_simultaneous(&q, r.t_total / r.t) {
            Ok(b) => Some(b.value),
            Err(dicke_metrology::Error::SingularQfim(_)) => None,
            Err(e) => return Err(e.into()),
        };
        (Some(q.entries), bound)
    } else {
        (None, None)
    };
    let qrows = q.map(|m| {
        (0..3)
            .map(|i| (0..3).map(|j| m[(i, j)]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    });
    let entries: Vec<(String, String)> = vec![
        ("t".into(), num(r.t)),
        ("split".into(), res.split.to_string()),
        ("trace".into(), num(res.rho.trace().re)),
        ("purity".into(), num(res.rho.purity())),
        ("min_eigenvalue".into(), num(res.rho.min_eigenvalue()?)),
        ("jx".into(), num(moments.first[0])),
        ("jy".into(), num(moments.first[1])),
        ("jz".into(), num(moments.first[2])),
        ("i_sim".into(), opt(bound)),
    ];
    let text = match r.format {
        FormatArg::Csv => {
            let mut rows: Vec<Vec<String>> = entries
                .iter()
                .map(|(k, v)| vec![k.clone(), v.clone()])
                .collect();
            if let Some(q) = &qrows {
                for (i, row) in q.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        rows.push(vec![format!("q_{}{}", Axis::ALL[i], Axis::ALL[j]), num(*v)]);
                    }
                }
            }
            csv(r, &[], &["quantity", "value"], &rows, &[])
        }
        FormatArg::Json => json_doc(
            r,
            json!({
                "t": r.t,
                "split": res.split,
                "trace": res.rho.trace().re,
                "purity": res.rho.purity(),
                "min-eigenvalue": res.rho.min_eigenvalue()?,
                "first-moments": moments.first,
                "second-moments": moments.second.map(|row| row.map(|z| z.re)),
                "qfim": qrows,
                "i-sim": bound,
            }),
        ),
    };
    emit(r, &text)
}

pub fn sweep(r: &Resolved) -> Result<(), CliError> {
    let config = r.sweep_config();
    let res = sweep_time(&config)?;
    let column = match config.scenario {
        Scenario::Simultaneous => "I_sim",
        Scenario::Individual => "I_ind",
    };
    let text = match r.format {
        FormatArg::Csv => {
            let rows: Vec<Vec<String>> = res
                .curve
                .iter()
                .map(|p| vec![num(p.t), opt(p.value)])
                .collect();
            let m = res.refinement;
            csv(
                r,
                &[],
                &["t", column],
                &rows,
                &[
                    format!("t_opt: {}", num(res.t_opt)),
                    format!("I_min: {}", num(res.i_min)),
                    format!("grid-index: {}", m.grid_index),
                    format!("refined: {}", m.refined),
                    format!("parabola-residual: {}", num(m.residual)),
                    format!("global-fallback: {}", m.fallback_global),
                ],
            )
        }
        FormatArg::Json => json_doc(r, serde_json::to_value(&res).expect("serializable")),
    };
    emit(r, &text)
}

fn kind_name(k: NoiseKind) -> String {
    k.to_string()
}

pub fn scan(r: &Resolved) -> Result<(), CliError> {
    let kinds: Vec<NoiseKind> = if r.kind_given {
        vec![r.kind.into()]
    } else {
        vec![NoiseKind::Markovian, NoiseKind::NonMarkovian]
    };
    let scenarios: Vec<Scenario> = if r.scenario_given {
        vec![r.scenario.into()]
    } else {
        vec![Scenario::Simultaneous, Scenario::Individual]
    };
    let rows = scan_particles(&r.n_list, &r.sweep_config(), &kinds, &scenarios)?;
    let text = match r.format {
        FormatArg::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|row| {
                    vec![
                        row.n.to_string(),
                        kind_name(row.kind),
                        row.scenario.to_string(),
                        opt(row.t_opt),
                        opt(row.i_min),
                    ]
                })
                .collect();
            csv(
                r,
                &[],
                &["n", "kind", "scenario", "t_opt", "i_min"],
                &table,
                &[],
            )
        }
        FormatArg::Json => json_doc(r, serde_json::to_value(&rows).expect("serializable")),
    };
    emit(r, &text)
}

fn parse_scan(text: &str) -> Result<Vec<ScanRow>, CliError> {
    let (header, rows) = read_csv(text)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("input table lacks column '{name}'")))
    };
    let (cn, ck, cs, ct, ci) = (
        col("n")?,
        col("kind")?,
        col("scenario")?,
        col("t_opt")?,
        col("i_min")?,
    );
    let bad =
        |what: &str, v: &str| CliError::Config(format!("invalid {what} '{v}' in input table"));
    rows.iter()
        .map(|row| {
            let get = |c: usize| row.get(c).map(String::as_str).unwrap_or("");
            let kind = match get(ck) {
                "markovian" => NoiseKind::Markovian,
                "nonmarkovian" => NoiseKind::NonMarkovian,
                "none" => NoiseKind::None,
                v => return Err(bad("kind", v)),
            };
            let scenario: Scenario = get(cs).parse().map_err(|_| bad("scenario", get(cs)))?;
            let value = |c: usize| -> Result<Option<f64>, CliError> {
                match get(c) {
                    "" => Ok(None),
                    v => v.parse().map(Some).map_err(|_| bad("number", v)),
                }
            };
            Ok(ScanRow {
                n: get(cn).parse().map_err(|_| bad("n", get(cn)))?,
                kind,
                scenario,
                t_opt: value(ct)?,
                i_min: value(ci)?,
            })
        })
        .collect()
}

pub fn fit(r: &Resolved) -> Result<(), CliError> {
    let path = r
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("fit needs --input with a scan-n table".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let rows = parse_scan(&text)?;
    let mut groups: Vec<(NoiseKind, Scenario)> =
        rows.iter().map(|r| (r.kind, r.scenario)).collect();
    groups.sort_by_key(|(k, s)| (kind_name(*k), *s));
    groups.dedup();
    let mut fits = Vec::new();
    for (kind, scenario) in groups {
        let sel: Vec<&ScanRow> = rows
            .iter()
            .filter(|x| x.kind == kind && x.scenario == scenario)
            .collect();
        let quantities: [(&str, Vec<(f64, f64)>); 2] = [
            (
                "inverse-t-opt",
                sel.iter()
                    .filter_map(|x| x.t_opt.map(|t| (f64::from(x.n), 1.0 / t)))
                    .collect(),
            ),
            (
                "i-min",
                sel.iter()
                    .filter_map(|x| x.i_min.map(|v| (f64::from(x.n), v)))
                    .collect(),
            ),
        ];
        for (name, pts) in quantities {
            let f = fit_power_law(&pts, f64::from(r.n_min))?;
            fits.push((kind, scenario, name, f));
        }
    }
    let text = match r.format {
        FormatArg::Csv => {
            let table: Vec<Vec<String>> = fits
                .iter()
                .map(|(k, s, q, f)| {
                    vec![
                        kind_name(*k),
                        s.to_string(),
                        q.to_string(),
                        num(f.exponent),
                        num(f.prefactor),
                        num(f.residual),
                        f.points_used.to_string(),
                    ]
                })
                .collect();
            csv(
                r,
                &[],
                &[
                    "kind",
                    "scenario",
                    "quantity",
                    "exponent",
                    "prefactor",
                    "residual",
                    "points",
                ],
                &table,
                &[],
            )
        }
        FormatArg::Json => json_doc(
            r,
            Value::Array(
                fits.iter()
                    .map(|(k, s, q, f)| {
                        json!({
                            "kind": kind_name(*k),
                            "scenario": s,
                            "quantity": q,
                            "exponent": f.exponent,
                            "prefactor": f.prefactor,
                            "residual": f.residual,
                            "points": f.points_used,
                        })
                    })
                    .collect(),
            ),
        ),
    };
    emit(r, &text)
}

pub fn husimi(r: &Resolved) -> Result<(), CliError> {
    let space = DickeSpace::new(r.n)?;
    let state = probe_state(&space, r.probe)?;
    let map = husimi_map(&state, r.grid)?;
    let axes = json!({
        "rows": { "name": "theta", "min": map.theta[0], "max": map.theta[map.theta.len() - 1], "count": map.theta.len(), "endpoint": true },
        "columns": { "name": "phi", "min": 0.0, "max": 2.0 * std::f64::consts::PI, "count": map.phi.len(), "endpoint": false },
        "j": f64::from(map.two_j) / 2.0,
        "normalization": map.normalization(),
    });
    let text = match r.format {
        FormatArg::Csv => {
            let mut header: Vec<String> = vec!["theta".into()];
            header.extend(map.phi.iter().map(|p| num(*p)));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = map
                .theta
                .iter()
                .enumerate()
                .map(|(i, th)| {
                    let mut row = vec![num(*th)];
                    row.extend(map.values.row(i).iter().map(|v| num(*v)));
                    row
                })
                .collect();
            csv(r, &[], &header, &rows, &[])
        }
        FormatArg::Json => {
            let values: Vec<Vec<f64>> = (0..map.theta.len())
                .map(|i| map.values.row(i).iter().copied().collect())
                .collect();
            json_doc(
                r,
                json!({ "axes": axes, "theta": map.theta, "phi": map.phi, "values": values }),
            )
        }
    };
    emit(r, &text)?;
    if r.format == FormatArg::Csv {
        if let Some(out) = &r.out {
            let descriptor = out.with_extension("axes.json");
            write_to(Some(&descriptor), &json_doc(r, axes))?;
        }
    }
    Ok(())
}
