//! Flag and config-file handling.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dicke_metrology::experiments::{
    default_axis, Scenario, SweepConfig, TimeGrid, DEFAULT_FIELD, DEFAULT_GAMMA, DEFAULT_TOTAL_TIME,
};
use dicke_metrology::noise::NoiseKind;
use dicke_metrology::propagation::{DephasingMethod, FieldParams};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Markovian,
    Nonmarkovian,
    None,
}

impl From<KindArg> for NoiseKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Markovian => NoiseKind::Markovian,
            KindArg::Nonmarkovian => NoiseKind::NonMarkovian,
            KindArg::None => NoiseKind::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioArg {
    Sim,
    Ind,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Sim => Scenario::Simultaneous,
            ScenarioArg::Ind => Scenario::Individual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Rk4,
    AxisFrame,
}

impl From<MethodArg> for DephasingMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rk4 => DephasingMethod::Rk4,
            MethodArg::AxisFrame => DephasingMethod::AxisFrame,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeArg {
    Sim,
    GhzX,
    GhzY,
    GhzZ,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| format!("invalid {what} entry '{p}'"))
        })
        .collect()
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = parse_list(s, "component")?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected three comma-separated numbers".to_string())
}

fn parse_grid(s: &str) -> Result<(usize, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected count,min,max".into());
    }
    let count = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("invalid count '{}'", parts[0]))?;
    let min = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("invalid min '{}'", parts[1]))?;
    let max = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("invalid max '{}'", parts[2]))?;
    Ok((count, min, max))
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let v: Vec<usize> = parse_list(s, "grid size")?;
    match v.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err("expected n_theta,n_phi".into()),
    }
}

/// Flags shared by every subcommand. All optional so that config files can
/// supply them; flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat JSON config file with kebab-case keys
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Number of spins
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Dephasing strength (0.05 when omitted)
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum, global = true)]
    pub kind: Option<KindArg>,
    #[arg(long, value_enum, global = true)]
    pub scenario: Option<ScenarioArg>,
    /// Total time budget T
    #[arg(long, global = true)]
    pub t_total: Option<f64>,
    /// Field components x,y,z
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, global = true)]
    pub phi: Option<[f64; 3]>,
    /// Noise axis x,y,z (rescaled to length 2)
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, global = true)]
    pub axis: Option<[f64; 3]>,
    /// Log-spaced probe times: count,min,max
    #[arg(long, value_parser = parse_grid, global = true)]
    pub t_grid: Option<(usize, f64, f64)>,
    /// Comma-separated particle numbers
    #[arg(long, value_delimiter = ',', global = true)]
    pub n_list: Option<Vec<u32>>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<FormatArg>,
    /// Worker threads (all cores when omitted)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Reserved; results do not depend on it
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dissipative propagator
    #[arg(long, value_enum, global = true)]
    pub method: Option<MethodArg>,
}

/// Command-specific flags, also settable from the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ExtraArgs {
    /// Probe time for `evolve`
    #[arg(long)]
    pub t: Option<f64>,
    /// Initial state for `evolve` and `husimi`
    #[arg(long, value_enum)]
    pub probe: Option<ProbeArg>,
    /// Husimi grid n_theta,n_phi
    #[arg(long, value_parser = parse_pair)]
    pub grid: Option<(usize, usize)>,
    /// Scan table produced by `scan-n`
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Smallest N included in fits
    #[arg(long)]
    pub n_min: Option<u32>,
    /// Integrate the joint master equation when the field is not parallel to the noise axis
    #[arg(long)]
    pub allow_nonparallel: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<u32>,
    pub gamma: Option<f64>,
    pub kind: Option<KindArg>,
    pub scenario: Option<ScenarioArg>,
    pub t_total: Option<f64>,
    pub phi: Option<[f64; 3]>,
    pub axis: Option<[f64; 3]>,
    pub t_grid: Option<(usize, f64, f64)>,
    pub n_list: Option<Vec<u32>>,
    pub out: Option<PathBuf>,
    pub format: Option<FormatArg>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub method: Option<MethodArg>,
    pub t: Option<f64>,
    pub probe: Option<ProbeArg>,
    pub grid: Option<(usize, usize)>,
    pub input: Option<PathBuf>,
    pub n_min: Option<u32>,
    pub allow_nonparallel: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully defaulted parameters; serialized into every output header.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Resolved {
    pub command: String,
    pub n: u32,
    pub n_list: Vec<u32>,
    pub gamma: f64,
    pub gamma_assumed: bool,
    pub kind: KindArg,
    pub scenario: ScenarioArg,
    pub t_total: f64,
    pub phi: [f64; 3],
    pub axis: [f64; 3],
    pub t_grid: (usize, f64, f64),
    pub method: MethodArg,
    pub t: f64,
    pub probe: ProbeArg,
    pub grid: (usize, usize),
    pub input: Option<PathBuf>,
    pub n_min: u32,
    pub allow_nonparallel: bool,
    pub kind_given: bool,
    pub scenario_given: bool,
    pub format: FormatArg,
    pub workers: usize,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Resolved {
    pub fn build(
        command: &str,
        common: &CommonArgs,
        extra: &ExtraArgs,
        default_format: FormatArg,
    ) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let gamma = common.gamma.or(file.gamma);
        let t_total = common
            .t_total
            .or(file.t_total)
            .unwrap_or(DEFAULT_TOTAL_TIME);
        let resolved = Resolved {
            command: command.to_string(),
            n: common.n.or(file.n).unwrap_or(20),
            n_list: common
                .n_list
                .clone()
                .or(file.n_list)
                .unwrap_or_else(|| (10..=24).step_by(2).collect()),
            gamma: gamma.unwrap_or(DEFAULT_GAMMA),
            gamma_assumed: gamma.is_none(),
            kind: common.kind.or(file.kind).unwrap_or(KindArg::Markovian),
            scenario: common
                .scenario
                .or(file.scenario)
                .unwrap_or(ScenarioArg::Sim),
            t_total,
            phi: common.phi.or(file.phi).unwrap_or(DEFAULT_FIELD),
            axis: common.axis.or(file.axis).unwrap_or_else(default_axis),
            t_grid: common.t_grid.or(file.t_grid).unwrap_or((60, 1e-2, t_total)),
            method: common
                .method
                .or(file.method)
                .unwrap_or(MethodArg::AxisFrame),
            t: extra.t.or(file.t).unwrap_or(1.0),
            probe: extra.probe.or(file.probe).unwrap_or(ProbeArg::Sim),
            grid: extra.grid.or(file.grid).unwrap_or((181, 360)),
            input: extra.input.clone().or(file.input),
            n_min: extra.n_min.or(file.n_min).unwrap_or(10),
            allow_nonparallel: extra.allow_nonparallel || file.allow_nonparallel.unwrap_or(false),
            kind_given: common.kind.or(file.kind).is_some(),
            scenario_given: common.scenario.or(file.scenario).is_some(),
            format: common.format.or(file.format).unwrap_or(default_format),
            workers: common
                .workers
                .or(file.workers)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            seed: common.seed.or(file.seed),
            out: common.out.clone().or(file.out),
        };
        if resolved.workers == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        Ok(resolved)
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            n: self.n,
            field: FieldParams { phi: self.phi },
            axis: self.axis,
            gamma: self.gamma,
            kind: self.kind.into(),
            total_time: self.t_total,
            t_grid: TimeGrid {
                count: self.t_grid.0,
                min: self.t_grid.1,
                max: self.t_grid.2,
            },
            scenario: self.scenario.into(),
            method: self.method.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_triple("1,-2.5, 3").unwrap(), [1.0, -2.5, 3.0]);
        assert!(parse_triple("1,2").is_err());
        assert_eq!(parse_grid("40,0.1,10").unwrap(), (40, 0.1, 10.0));
        assert_eq!(parse_pair("91,180").unwrap(), (91, 180));
    }

    #[test]
    fn defaults_and_hash() {
        let r = Resolved::build(
            "sweep-time",
            &CommonArgs {
                workers: Some(2),
                ..Default::default()
            },
            &ExtraArgs::default(),
            FormatArg::Csv,
        )
        .unwrap();
        assert!(r.gamma_assumed);
        assert_eq!(r.gamma, 0.05);
        assert_eq!(r.t_grid, (60, 0.01, 100.0));
        let s = r.sweep_config();
        assert_eq!(
            s,
            SweepConfig {
                n: 20,
                ..SweepConfig::default()
            }
        );
        let r2 = Resolved::build(
            "sweep-time",
            &CommonArgs {
                workers: Some(2),
                gamma: Some(0.05),
                ..Default::default()
            },
            &ExtraArgs::default(),
            FormatArg::Csv,
        )
        .unwrap();
        assert!(!r2.gamma_assumed);
        assert_ne!(r.hash(), r2.hash());
        assert_eq!(r.hash(), r.clone().hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"n": 4, "bogus": 1}"#).is_err());
        let f: FileConfig =
            serde_json::from_str(r#"{"n": 4, "t-grid": [10, 0.1, 5], "kind": "nonmarkovian"}"#)
                .unwrap();
        assert_eq!(f.t_grid, Some((10, 0.1, 5.0)));
        assert_eq!(f.kind, Some(KindArg::Nonmarkovian));
    }
}
