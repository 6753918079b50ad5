//! `cpdyn`: sweeps of dynamical Casimir-Polder energies and forces.

mod config;
mod output;
mod sweep;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpdyn::scenarios::ScenarioKind;
use cpdyn::units::PRESETS;

use config::{parse_config, resolve, ConfigError, FileConfig, Format, OracleKind, Outputs, Overrides};
use sweep::SweepError;

#[derive(Parser, Debug)]
#[command(name = "cpdyn", version, about = "Dynamical Casimir-Polder energies and forces near a perfect mirror")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy E/eps0 on a time grid.
    Energy(RunArgs),
    /// Force F d/eps0 on a time grid, with its sign changes.
    Force(RunArgs),
    /// Energy, force, sign changes and the long-time asymptote.
    Sweep(RunArgs),
    /// Closed-form energies compared with an independent oracle.
    Oracle(RunArgs),
    /// Mode-sum convergence study of the bare energy in a finite cavity.
    CavityCheck(CavityArgs),
    /// List the built-in parameter presets.
    Presets {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    ScenarioKind::from_tag(s).ok_or_else(|| format!("unknown scenario '{s}' (expected bare, dressed1 or dressed2)"))
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// TOML or JSON run configuration; flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// k0 d after the quench.
    #[arg(long)]
    x0: Option<f64>,
    /// k0' d (wavenumber before the quench, in units of 1/d).
    #[arg(long)]
    x0p: Option<f64>,
    /// d'/d (distance before the quench).
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "CP_DYNAMICS_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<ScenarioKind>,
    /// First grid time, ct/d.
    #[arg(long)]
    t_start: Option<f64>,
    #[arg(long)]
    t_stop: Option<f64>,
    #[arg(long)]
    t_count: Option<usize>,
    /// Geometric grid spacing (needs t-start > 0).
    #[arg(long)]
    log_time: bool,
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
    /// Oracle tolerance on the relative deviation.
    #[arg(long)]
    tol: Option<f64>,
    /// SVG plot of the curves with light-cone windows shaded.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct CavityArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Evaluation time, ct/d.
    #[arg(long, default_value_t = 0.8)]
    t: f64,
    /// Ladder rung `L,eps` in units of d; repeat for each rung. Defaults to
    /// the reference ladder (8,0.4) (10,0.2) (12,0.1).
    #[arg(long = "rung", value_parser = parse_rung)]
    rungs: Vec<(f64, f64)>,
    /// eps k_max used to pick n_max for explicit rungs.
    #[arg(long, default_value_t = 22.0)]
    cutoff_product: f64,
    /// Tolerance on the relative deviation of the extrapolated sum.
    #[arg(long, default_value_t = 2e-2)]
    tol: f64,
}

fn parse_rung(s: &str) -> Result<(f64, f64), String> {
    let (l, e) = s.split_once(',').ok_or("expected L,eps")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok((parse(l)?, parse(e)?))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Compute(#[from] cpdyn::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            _ => 1,
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Usage(m) => CliError::Usage(m),
            SweepError::Compute(e) => CliError::Compute(e),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn load_file(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            Ok(parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?)
        }
        None => Ok(FileConfig::default()),
    }
}

fn overrides(p: &ParamArgs) -> Overrides {
    Overrides {
        preset: p.preset.clone(),
        x0: p.x0,
        x0p: p.x0p,
        rho: p.rho,
        out: p.out.clone(),
        format: p.format,
        threads: p.threads,
        ..Overrides::default()
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn run(cmd: Command) -> Result<u8, CliError> {
    let (args, outputs, default_oracle) = match cmd {
        Command::Presets { format } => {
            let text = match format {
                Format::Csv => {
                    let mut s = String::from("name,x0,x0p,rho,description\n");
                    for p in PRESETS {
                        s.push_str(&format!("{},{},{},{},\"{}\"\n", p.name, p.x0, p.x0p, p.rho, p.description));
                    }
                    s
                }
                Format::Json => serde_json::to_string_pretty(PRESETS).expect("presets serialize") + "\n",
            };
            emit(None, &text)?;
            return Ok(0);
        }
        Command::CavityCheck(a) => return cavity_check(a),
        Command::Energy(a) => (a, Outputs { energy: true, force: false, sign_changes: false, asymptote: false }, None),
        Command::Force(a) => (a, Outputs { energy: false, force: true, sign_changes: true, asymptote: false }, None),
        Command::Sweep(a) => (a, Outputs::ALL, None),
        Command::Oracle(a) => {
            (a, Outputs { energy: true, force: false, sign_changes: false, asymptote: false }, Some(OracleKind::Quadrature))
        }
    };
    let file = load_file(args.params.config.as_deref())?;
    let mut ov = overrides(&args.params);
    ov.scenario = args.scenario;
    ov.t_start = args.t_start;
    ov.t_stop = args.t_stop;
    ov.t_count = args.t_count;
    ov.log_time = args.log_time;
    ov.tol = args.tol;
    ov.plot = args.plot.clone();
    ov.oracle = args.oracle.or(if file.oracle.is_none() { default_oracle } else { None });
    let mut cfg = resolve(&file, &ov, outputs)?;
    if file.outputs.is_some() && !matches!(outputs, Outputs::ALL) {
        // Subcommands other than `sweep` fix their outputs.
        cfg.outputs = outputs;
    }

    let (rows, summary) = sweep::evaluate(&cfg)?;
    let text = match cfg.output_format {
        Format::Csv => output::csv(&rows),
        Format::Json => output::json(&cfg, &rows, &summary),
    };
    emit(cfg.out.as_deref(), &text)?;
    if let Some(spec) = &cfg.plot {
        let svg = output::plot(&cfg, spec, &rows)?;
        std::fs::write(&spec.path, svg).map_err(io_err(&spec.path))?;
    }
    eprint!("{}", output::summary_text(&summary));
    Ok(match &summary.oracle {
        Some(o) if !o.passed => 2,
        _ => 0,
    })
}

fn cavity_check(a: CavityArgs) -> Result<u8, CliError> {
    let file = load_file(a.params.config.as_deref())?;
    let cfg = resolve(&file, &overrides(&a.params), Outputs::ALL)?;
    if !(a.t.is_finite() && a.t >= 0.0) {
        return Err(CliError::Usage(format!("--t must be finite and >= 0, got {}", a.t)));
    }
    if !(a.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be > 0, got {}", a.tol)));
    }
    let ladder = sweep::cavity_ladder(&a.rungs, a.cutoff_product);
    let report = sweep::cavity_check(&cfg.point, a.t, &ladder, cfg.threads)?;
    let eps0 = cfg.point.params().eps0();
    let text = match cfg.output_format {
        Format::Csv => output::cavity_csv(&report, eps0),
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    emit(cfg.out.as_deref(), &text)?;
    eprint!("{}", output::cavity_summary(&report, eps0, a.tol));
    Ok(if report.deviation.abs() <= a.tol { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
