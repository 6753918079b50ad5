//! Run configuration: file grammar (TOML or JSON), flag overrides and
//! validation.

use std::path::PathBuf;

use cpdyn::dm::DmMode;
use cpdyn::scenarios::ScenarioKind;
use cpdyn::units::{nondimensionalize, preset, PhysicalParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("specify exactly one parameterization (params, physical or preset); found {found}")]
    Parameterization { found: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Quadrature,
    Cavity,
    None,
}

impl OracleKind {
    pub fn default_tol(self) -> f64 {
        match self {
            OracleKind::Cavity => 2e-2,
            _ => 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Energy,
    Force,
    SignChanges,
    Asymptote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedSection {
    pub x0: f64,
    pub x0p: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    #[serde(default = "one")]
    pub mu: f64,
    pub k0: f64,
    pub k0_prime: Option<f64>,
    pub d: f64,
    pub d_prime: Option<f64>,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSection {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    pub spacing: Option<Spacing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub kind: OracleKind,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSection {
    pub path: PathBuf,
    pub width: Option<u32>,
    pub height: Option<u32>,
}

/// Contents of a configuration file, before defaults and overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<ScenarioKind>,
    pub params: Option<ReducedSection>,
    pub physical: Option<PhysicalSection>,
    pub preset: Option<String>,
    pub time_grid: Option<TimeGridSection>,
    pub outputs: Option<Vec<Output>>,
    pub oracle: Option<OracleSection>,
    pub output_format: Option<Format>,
    pub plot: Option<PlotSection>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub dm_mode: Option<DmMode>,
    pub asymptote_horizon: Option<f64>,
}

/// Values given on the command line. Every field wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<ScenarioKind>,
    pub preset: Option<String>,
    pub x0: Option<f64>,
    pub x0p: Option<f64>,
    pub rho: Option<f64>,
    pub t_start: Option<f64>,
    pub t_stop: Option<f64>,
    pub t_count: Option<usize>,
    pub log_time: bool,
    pub oracle: Option<OracleKind>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

/// Reduced parameters `k0 d`, `k0' d` and `d' / d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedPoint {
    pub x0: f64,
    pub x0p: f64,
    pub rho: f64,
}

impl ReducedPoint {
    /// Parameters with `mu = d = c = 1`, so that `t` is `c t / d`.
    pub fn params(&self) -> PhysicalParams {
        PhysicalParams::new(1.0, self.x0, self.x0p, 1.0, self.rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == self.count - 1 {
                    return self.stop;
                }
                let u = i as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.start + u * (self.stop - self.start),
                    Spacing::Log => self.start * (self.stop / self.start).powf(u),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSpec {
    pub kind: OracleKind,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSpec {
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Outputs {
    pub energy: bool,
    pub force: bool,
    pub sign_changes: bool,
    pub asymptote: bool,
}

impl Outputs {
    pub const ALL: Outputs = Outputs { energy: true, force: true, sign_changes: true, asymptote: true };

    fn from_list(list: &[Output]) -> Self {
        let has = |o| list.contains(&o);
        Outputs {
            energy: has(Output::Energy),
            force: has(Output::Force),
            sign_changes: has(Output::SignChanges),
            asymptote: has(Output::Asymptote),
        }
    }
}

/// Fully resolved and validated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub point: ReducedPoint,
    pub time_grid: TimeGrid,
    pub outputs: Outputs,
    pub oracle: Option<OracleSpec>,
    pub output_format: Format,
    pub plot: Option<PlotSpec>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub dm_mode: DmMode,
    pub asymptote_horizon: f64,
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses a configuration file. Text whose first non-blank character is `{`
/// is read as JSON, anything else as TOML.
pub fn parse_config(source: &str) -> Result<FileConfig, ConfigError> {
    if source.trim_start().starts_with('{') {
        serde_json::from_str(source).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })
    } else {
        toml::from_str(source).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(source, s.start));
            ConfigError::Parse { line, column, message: e.message().trim().to_string() }
        })
    }
}

fn positive(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn reduced_point(file: &FileConfig, ov: &Overrides) -> Result<ReducedPoint, ConfigError> {
    let base: Option<ReducedPoint> = if let Some(name) = &ov.preset {
        let p = preset(name).ok_or_else(|| invalid("preset", format!("unknown preset '{name}'")))?;
        Some(ReducedPoint { x0: p.x0, x0p: p.x0p, rho: p.rho })
    } else {
        let mut found = Vec::new();
        if file.params.is_some() {
            found.push("params");
        }
        if file.physical.is_some() {
            found.push("physical");
        }
        if file.preset.is_some() {
            found.push("preset");
        }
        if found.len() > 1 {
            return Err(ConfigError::Parameterization { found: found.join(" and ") });
        }
        if let Some(r) = &file.params {
            Some(ReducedPoint { x0: r.x0, x0p: r.x0p.unwrap_or(r.x0), rho: r.rho.unwrap_or(1.0) })
        } else if let Some(ph) = &file.physical {
            let params = PhysicalParams {
                mu: ph.mu,
                k0: ph.k0,
                k0_prime: ph.k0_prime.unwrap_or(ph.k0),
                d: ph.d,
                d_prime: ph.d_prime.unwrap_or(ph.d),
                c: ph.c,
            };
            let dp = nondimensionalize(&params, 0.0).map_err(|e| invalid("physical", e.to_string()))?;
            Some(ReducedPoint { x0: dp.x0, x0p: dp.x0p, rho: dp.rho })
        } else if let Some(name) = &file.preset {
            let p = preset(name).ok_or_else(|| invalid("preset", format!("unknown preset '{name}'")))?;
            Some(ReducedPoint { x0: p.x0, x0p: p.x0p, rho: p.rho })
        } else {
            None
        }
    };
    // x0p follows x0 unless something sets it explicitly.
    let x0p_explicit = ov.x0p.is_some() || ov.preset.is_some() || match &file.params {
        Some(r) => r.x0p.is_some(),
        None => base.is_some(),
    };
    let mut point = match (base, ov.x0) {
        (Some(mut b), Some(x0)) => {
            b.x0 = x0;
            b
        }
        (Some(b), None) => b,
        (None, Some(x0)) => ReducedPoint { x0, x0p: x0, rho: 1.0 },
        (None, None) => return Err(ConfigError::Parameterization { found: "none".into() }),
    };
    if let Some(v) = ov.x0p {
        point.x0p = v;
    } else if !x0p_explicit {
        point.x0p = point.x0;
    }
    if let Some(v) = ov.rho {
        point.rho = v;
    }
    positive("x0", point.x0)?;
    positive("x0p", point.x0p)?;
    positive("rho", point.rho)?;
    Ok(point)
}

/// Applies defaults and flag overrides to a parsed file and validates the
/// result. `default_outputs` is used when neither file nor subcommand picks
/// the outputs.
pub fn resolve(file: &FileConfig, ov: &Overrides, default_outputs: Outputs) -> Result<RunConfig, ConfigError> {
    let point = reduced_point(file, ov)?;
    let g = file.time_grid.clone().unwrap_or(TimeGridSection { start: None, stop: None, count: None, spacing: None });
    let spacing = if ov.log_time { Spacing::Log } else { g.spacing.unwrap_or(Spacing::Linear) };
    let time_grid = TimeGrid {
        start: ov.t_start.or(g.start).unwrap_or(0.0),
        stop: ov.t_stop.or(g.stop).unwrap_or(6.0),
        count: ov.t_count.or(g.count).unwrap_or(100),
        spacing,
    };
    if !(time_grid.start.is_finite() && time_grid.start >= 0.0) {
        return Err(invalid("time_grid.start", format!("must be finite and >= 0, got {}", time_grid.start)));
    }
    if !(time_grid.stop.is_finite() && time_grid.stop > time_grid.start) {
        return Err(invalid(
            "time_grid.stop",
            format!("must be finite and > start ({}), got {}", time_grid.start, time_grid.stop),
        ));
    }
    if time_grid.count == 0 {
        return Err(invalid("time_grid.count", "must be >= 1"));
    }
    if spacing == Spacing::Log && time_grid.start <= 0.0 {
        return Err(invalid("time_grid.start", "log spacing needs start > 0"));
    }

    let oracle_kind = ov.oracle.or(file.oracle.as_ref().map(|o| o.kind)).unwrap_or(OracleKind::None);
    let oracle = match oracle_kind {
        OracleKind::None => None,
        kind => {
            let file_tol = file.oracle.as_ref().filter(|o| o.kind == kind).and_then(|o| o.tol);
            let tol = positive("oracle.tol", ov.tol.or(file_tol).unwrap_or(kind.default_tol()))?;
            Some(OracleSpec { kind, tol })
        }
    };

    let plot = match (&ov.plot, &file.plot) {
        (Some(path), section) => Some(PlotSpec {
            path: path.clone(),
            width: section.as_ref().and_then(|s| s.width).unwrap_or(800),
            height: section.as_ref().and_then(|s| s.height).unwrap_or(480),
        }),
        (None, Some(s)) => Some(PlotSpec { path: s.path.clone(), width: s.width.unwrap_or(800), height: s.height.unwrap_or(480) }),
        (None, None) => None,
    };
    if let Some(p) = &plot {
        if p.width < 200 || p.height < 150 {
            return Err(invalid("plot", "width must be >= 200 and height >= 150"));
        }
    }

    let threads = ov.threads.or(file.threads);
    if threads == Some(0) {
        return Err(invalid("threads", "must be >= 1"));
    }
    let outputs = file.outputs.as_deref().map(Outputs::from_list).unwrap_or(default_outputs);
    let asymptote_horizon = positive("asymptote_horizon", file.asymptote_horizon.unwrap_or(200.0))?;

    Ok(RunConfig {
        scenario: ov.scenario.or(file.scenario).unwrap_or(ScenarioKind::Bare),
        point,
        time_grid,
        outputs,
        oracle,
        output_format: ov.format.or(file.output_format).unwrap_or(Format::Csv),
        plot,
        out: ov.out.clone().or_else(|| file.out.clone()),
        threads,
        dm_mode: file.dm_mode.unwrap_or(DmMode::Analytic),
        asymptote_horizon,
    })
}
