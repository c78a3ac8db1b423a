//! Command-line front end.
//!
//! Exit codes: 0 success, 1 analytic/Monte Carlo mismatch, 2 configuration
//! or usage error, 3 infeasible operation cycle.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::capacity::{Analyzer, CapacityReport, HeightMode};
use crate::error::{Error, Result};
use crate::geometry::DeploymentOption;
use crate::lifecycle::serving_fraction;
use crate::scenario::{parse_config, validate, ScenarioConfig, ViolationKind};
use crate::simulate::{simulate_blockage, simulate_mean_se, simulate_user_capacity, SimConfig, SimEstimate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

pub const SWEEP_HEADER: &str =
    "variable,value,option,height_m,rho,n_serving,mean_se_bps_hz,network_capacity_bps,user_capacity_bps,status";
pub const EVALUATE_HEADER: &str =
    "option,height_m,rho,n_serving,mean_se_bps_hz,network_capacity_bps,user_capacity_bps,status";
pub const BOUNDARY_HEADER: &str = "T_h,ell_star_m,status";
pub const MIN_DRONES_HEADER: &str = "T_h,option,min_drones,status";
pub const VALIDATE_HEADER: &str = "option,quantity,analytic,montecarlo,ci95,rel_error,tolerance,status";

#[derive(Debug, Parser)]
#[command(name = "uavcell", version, about = "Airborne vs. landed UAV mmWave access-point capacity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptionChoice {
    Airborne,
    Landed,
    Both,
}

impl OptionChoice {
    fn options(self) -> Vec<DeploymentOption> {
        match self {
            OptionChoice::Airborne => vec![DeploymentOption::Airborne],
            OptionChoice::Landed => vec![DeploymentOption::Landed],
            OptionChoice::Both => DeploymentOption::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    Height,
    #[value(name = "M")]
    M,
    Ell,
    Lambda,
    #[value(name = "T")]
    T,
    #[value(name = "N")]
    N,
}

impl SweepVar {
    fn name(self) -> &'static str {
        match self {
            SweepVar::Height => "height",
            SweepVar::M => "M",
            SweepVar::Ell => "ell",
            SweepVar::Lambda => "lambda",
            SweepVar::T => "T",
            SweepVar::N => "N",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Scenario {
    /// Scenario file (`section.key = value` lines); defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override one key, e.g. `--set fleet.t_h=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Service heights: METERS, `auto` (optimised per option and serving
    /// count), `auto-once` (optimised per option at 5 APs) or `config`.
    #[arg(long, value_name = "METERS|auto|auto-once|config", default_value = "auto", value_parser = parse_height)]
    pub height: HeightMode,
}

fn parse_height(s: &str) -> std::result::Result<HeightMode, String> {
    match s {
        "auto" => Ok(HeightMode::Optimized),
        "auto-once" => Ok(HeightMode::OptimizedOnce),
        "config" => Ok(HeightMode::Config),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|h| h.is_finite() && *h > 0.0)
            .map(HeightMode::Fixed)
            .ok_or_else(|| format!("expected a positive height, `auto`, `auto-once` or `config`, got `{s}`")),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity of the configured fleet, one row per option.
    Evaluate {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_enum, default_value = "both")]
        option: OptionChoice,
        /// Evaluate exactly M serving APs instead of the cycle's count.
        #[arg(long, value_name = "M")]
        serving: Option<usize>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Write the link-distance PDF (`x,f_x`); the option name is added
        /// to the file name when both options are evaluated.
        #[arg(long, value_name = "PATH")]
        dump_pdf: Option<PathBuf>,
    },
    /// One row per grid point and option.
    Sweep {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_enum, default_value = "both")]
        option: OptionChoice,
        #[arg(long, value_name = "M")]
        serving: Option<usize>,
        #[arg(long = "sweep", value_enum, value_name = "VAR")]
        variable: SweepVar,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Charging-station distance ℓ* where airborne stops beating landed,
    /// over a grid of flight times.
    Boundary {
        #[command(flatten)]
        scenario: Scenario,
        /// First flight time T, h.
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long, default_value_t = 6.0)]
        to: f64,
        #[arg(long, default_value_t = 26)]
        steps: usize,
        #[arg(long, default_value_t = 0.0)]
        ell_from: f64,
        #[arg(long, default_value_t = 10_000.0)]
        ell_to: f64,
        /// Fleet size; `fleet.n` when omitted.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Smallest fleet reaching a per-user rate, over a grid of flight times.
    MinDrones {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_enum, default_value = "both")]
        option: OptionChoice,
        /// Target mean per-user rate, bit/s.
        #[arg(long, default_value_t = 30e6)]
        target_bps: f64,
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long, default_value_t = 6.0)]
        to: f64,
        #[arg(long, default_value_t = 51)]
        steps: usize,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Compare analytic results with Monte Carlo estimates.
    Validate {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_enum, default_value = "both")]
        option: OptionChoice,
        #[arg(long, value_name = "M")]
        serving: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Samples per quantity, split evenly across replications.
        #[arg(long, default_value_t = 1_000_000)]
        drops: usize,
        /// Scale the simulated path gain by this factor (negative control).
        #[arg(long, hide = true)]
        corrupt_an: Option<f64>,
    },
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible { .. } => EXIT_INFEASIBLE,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

/// Loads the scenario, applies overrides, and validates. Feasibility
/// violations are only fatal when `need_feasible` is set.
pub fn load_scenario(s: &Scenario, need_feasible: bool) -> std::result::Result<ScenarioConfig, Failure> {
    let mut config = match &s.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        None => ScenarioConfig::default(),
    };
    for item in &s.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| Failure {
            code: EXIT_CONFIG,
            message: format!("--set expects KEY=VALUE, got `{item}`"),
        })?;
        config.set(key.trim(), value).map_err(|message| Failure {
            code: EXIT_CONFIG,
            message,
        })?;
    }
    let violations = validate(&config);
    let (invariants, feasibility): (Vec<_>, Vec<_>) =
        violations.into_iter().partition(|v| v.kind == ViolationKind::Invariant);
    if !invariants.is_empty() {
        return Err(Error::Invalid(invariants).into());
    }
    if need_feasible && !feasibility.is_empty() {
        return Err(Error::Infeasible {
            ell_m: config.area.ell_m,
            bound_m: config.fleet.max_feasible_ell_m(),
        }
        .into());
    }
    Ok(config)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn status_of(report: &CapacityReport) -> &'static str {
    if report.no_coverage() {
        "no_coverage"
    } else {
        "ok"
    }
}

fn report_cells(r: &CapacityReport) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        fmt_opt(r.height_m),
        fmt_opt(r.rho),
        r.serving,
        r.mean_se,
        r.network_capacity_bps,
        fmt_opt(r.user_capacity_bps),
        status_of(r)
    )
}

/// Cells for a failed grid point: rho and n_serving are kept when known.
fn failed_cells(e: &Error) -> String {
    let status = match e {
        Error::Infeasible { .. } => "infeasible",
        Error::UnsupportedCount(_) => "unsupported_count",
        _ => "error",
    };
    format!(",,,,,,{status}")
}

fn report_with_rho(
    analyzer: &Analyzer,
    option: DeploymentOption,
    serving: Option<usize>,
) -> Result<CapacityReport> {
    let config = analyzer.config();
    match serving {
        None => analyzer.report(option, &config.fleet, config.area.ell_m),
        Some(m) => {
            let mut r = analyzer.report_for_count(option, m)?;
            r.rho = serving_fraction(option, &config.fleet, config.area.ell_m)
                .ok()
                .map(|c| c.rho);
            Ok(r)
        }
    }
}

fn open_out(out: &Option<PathBuf>) -> std::result::Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(|e| io_failure(p, e))?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn write_lines(out: &Option<PathBuf>, header: &str, rows: &[String]) -> std::result::Result<(), Failure> {
    let path = out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut w = open_out(out)?;
    let mut body = String::with_capacity(64 * (rows.len() + 1));
    body.push_str(header);
    body.push('\n');
    for r in rows {
        body.push_str(r);
        body.push('\n');
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(&path, e))
}

fn with_suffix(path: &Path, option: DeploymentOption) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("pdf");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{option}.{ext}"),
        None => format!("{stem}_{option}"),
    };
    path.with_file_name(name)
}

fn cmd_evaluate(
    scenario: &Scenario,
    choice: OptionChoice,
    serving: Option<usize>,
    out: &Option<PathBuf>,
    dump_pdf: &Option<PathBuf>,
) -> std::result::Result<(), Failure> {
    let config = load_scenario(scenario, true)?;
    let analyzer = Analyzer::new(config, scenario.height);
    let options = choice.options();
    let mut rows = Vec::new();
    for &option in &options {
        let r = report_with_rho(&analyzer, option, serving)?;
        rows.push(format!("{option},{}", report_cells(&r)));
        if let Some(path) = dump_pdf {
            if r.serving == 0 {
                eprintln!("{option}: no serving drones, no PDF written");
                continue;
            }
            let target = if options.len() > 1 {
                with_suffix(path, option)
            } else {
                path.clone()
            };
            let pdf = crate::capacity::link_pdf(option, r.serving, config.area.radius_m)?;
            let file = fs::File::create(&target).map_err(|e| io_failure(&target, e))?;
            pdf.write_csv(io::BufWriter::new(file))
                .map_err(|e| io_failure(&target, e))?;
        }
    }
    write_lines(out, EVALUATE_HEADER, &rows)
}

/// Inclusive grid of `steps` points.
pub fn grid(from: f64, to: f64, steps: usize) -> std::result::Result<Vec<f64>, Failure> {
    if !(from.is_finite() && to.is_finite() && from < to && steps >= 2) {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!("sweep needs from < to and steps ≥ 2 (got {from}, {to}, {steps})"),
        });
    }
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                to
            } else {
                from + (to - from) * i as f64 / (steps - 1) as f64
            }
        })
        .collect())
}

fn as_count(v: f64) -> std::result::Result<usize, Failure> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Failure {
            code: EXIT_CONFIG,
            message: format!("count sweeps need integer grid points, got {v}"),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    scenario: &Scenario,
    choice: OptionChoice,
    serving: Option<usize>,
    variable: SweepVar,
    from: f64,
    to: f64,
    steps: usize,
    out: &Option<PathBuf>,
) -> std::result::Result<(), Failure> {
    let cycle_swept = matches!(variable, SweepVar::Ell | SweepVar::T);
    let base = load_scenario(scenario, !cycle_swept)?;
    let values = grid(from, to, steps)?;
    if matches!(variable, SweepVar::M | SweepVar::N) {
        for &v in &values {
            as_count(v)?;
        }
    }

    // Analyzers whose cache stays valid across the whole grid.
    let shared = Analyzer::new(base, scenario.height);
    let jobs: Vec<(f64, DeploymentOption)> = values
        .iter()
        .flat_map(|&v| choice.options().into_iter().map(move |o| (v, o)))
        .collect();

    let rows: Vec<String> = jobs
        .par_iter()
        .map(|&(value, option)| {
            let mut config = base;
            let mut serving = serving;
            let mut heights = scenario.height;
            match variable {
                SweepVar::Height => heights = HeightMode::Fixed(value),
                SweepVar::M => serving = Some(value as usize),
                SweepVar::Ell => config.area.ell_m = value,
                SweepVar::Lambda => config.area.user_density = value,
                SweepVar::T => config.fleet.flight_time_h = value,
                SweepVar::N => config.fleet.drones = value as usize,
            }
            let result = match variable {
                SweepVar::Height | SweepVar::Lambda => {
                    report_with_rho(&Analyzer::new(config, heights), option, serving)
                }
                _ => match serving {
                    None => shared.report(option, &config.fleet, config.area.ell_m),
                    Some(m) => shared.report_for_count(option, m).map(|mut r| {
                        r.rho = serving_fraction(option, &config.fleet, config.area.ell_m)
                            .ok()
                            .map(|c| c.rho);
                        r
                    }),
                },
            };
            let cells = match result {
                Ok(r) => report_cells(&r),
                Err(e) => failed_cells(&e),
            };
            format!("{},{},{},{}", variable.name(), value, option, cells)
        })
        .collect();
    write_lines(out, SWEEP_HEADER, &rows)
}

#[allow(clippy::too_many_arguments)]
fn cmd_boundary(
    scenario: &Scenario,
    from: f64,
    to: f64,
    steps: usize,
    ell_from: f64,
    ell_to: f64,
    n: Option<usize>,
    out: &Option<PathBuf>,
) -> std::result::Result<(), Failure> {
    let config = load_scenario(scenario, false)?;
    let ts = grid(from, to, steps)?;
    let analyzer = Analyzer::new(config, scenario.height);
    let drones = n.unwrap_or(config.fleet.drones);
    let points = analyzer.tradeoff_boundary(&ts, (ell_from, ell_to), drones)?;
    let rows: Vec<String> = points
        .iter()
        .map(|p| format!("{},{},{}", p.t_h, fmt_opt(p.ell_star_m), p.status.as_str()))
        .collect();
    write_lines(out, BOUNDARY_HEADER, &rows)
}

fn cmd_min_drones(
    scenario: &Scenario,
    choice: OptionChoice,
    target_bps: f64,
    from: f64,
    to: f64,
    steps: usize,
    out: &Option<PathBuf>,
) -> std::result::Result<(), Failure> {
    let config = load_scenario(scenario, false)?;
    let ts = grid(from, to, steps)?;
    let analyzer = Analyzer::new(config, scenario.height);
    let mut rows = Vec::with_capacity(ts.len() * 2);
    for &t in &ts {
        for option in choice.options() {
            let (n, status) = match analyzer.min_drones_for_target(option, target_bps, t) {
                Ok(n) => (n.to_string(), "ok"),
                Err(Error::UnreachableTarget { .. }) => (String::new(), "unreachable"),
                Err(Error::Infeasible { .. }) => (String::new(), "infeasible"),
                Err(e) => return Err(e.into()),
            };
            rows.push(format!("{t},{option},{n},{status}"));
        }
    }
    write_lines(out, MIN_DRONES_HEADER, &rows)
}

struct Check {
    option: DeploymentOption,
    quantity: String,
    analytic: f64,
    estimate: SimEstimate,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.estimate.relative_error(self.analytic) <= self.tolerance
    }

    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.option,
            self.quantity,
            self.analytic,
            self.estimate.mean,
            self.estimate.ci95_halfwidth,
            self.estimate.relative_error(self.analytic),
            self.tolerance,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

/// Relative tolerances for the analytic/Monte Carlo comparison.
pub const MEAN_SE_TOL: f64 = 0.02;
pub const BLOCKAGE_TOL: f64 = 0.02;
pub const USER_CAPACITY_TOL: f64 = 0.03;

#[allow(clippy::too_many_arguments)]
fn cmd_validate(
    scenario: &Scenario,
    choice: OptionChoice,
    serving: Option<usize>,
    seed: u64,
    reps: usize,
    drops: usize,
    corrupt: Option<f64>,
) -> std::result::Result<bool, Failure> {
    let config = load_scenario(scenario, true)?;
    if reps == 0 || drops == 0 {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: "--reps and --drops must be positive".into(),
        });
    }
    let analyzer = Analyzer::new(config, scenario.height);
    let mut mc_config = config;
    if let Some(factor) = corrupt {
        mc_config.radio.tx_power_dbm += 10.0 * factor.log10();
    }
    let per_rep = drops.div_ceil(reps);
    let sim = SimConfig {
        replications: reps,
        seed,
        drops_per_replication: per_rep,
    };

    let mut checks = Vec::new();
    for option in choice.options() {
        let m = match serving {
            Some(m) => m,
            None => serving_fraction(option, &config.fleet, config.area.ell_m)?.serving.max(1),
        };
        let metrics = analyzer.serving_metrics(option, m)?;
        let h = metrics.height_m;
        checks.push(Check {
            option,
            quantity: format!("mean_se[M={m}]"),
            analytic: metrics.mean_se,
            estimate: simulate_mean_se(option, m, &mc_config, h, &sim)?,
            tolerance: MEAN_SE_TOL,
        });

        let pdf = crate::capacity::link_pdf(option, m, config.area.radius_m)?;
        let geom = crate::channel::BlockageGeometry::new(&config.body, h)?;
        for k in 0..5 {
            let x = pdf.x_max() * (0.1 + 0.2 * k as f64);
            checks.push(Check {
                option,
                quantity: format!("p_blockage[x={x:.3}]"),
                analytic: crate::channel::blockage_probability(&geom, x, config.area.user_density),
                estimate: simulate_blockage(&mc_config, &sim, x, h)?,
                tolerance: BLOCKAGE_TOL,
            });
        }

        if let Some(analytic) = metrics.user_capacity_bps {
            let mean_users = config.area.user_density * std::f64::consts::PI * config.area.radius_m.powi(2);
            let area_drops = ((drops as f64 / mean_users.max(1.0)).ceil() as usize).div_ceil(reps);
            let user_sim = SimConfig {
                drops_per_replication: area_drops.max(1),
                ..sim
            };
            checks.push(Check {
                option,
                quantity: format!("user_capacity_bps[M={m}]"),
                analytic,
                estimate: simulate_user_capacity(option, m, &mc_config, h, &user_sim)?,
                tolerance: USER_CAPACITY_TOL,
            });
        }
    }

    let rows: Vec<String> = checks.iter().map(Check::row).collect();
    write_lines(&None, VALIDATE_HEADER, &rows)?;
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed()).collect();
    for c in &failed {
        eprintln!(
            "out of tolerance: {} {} (relative error {:.4} > {})",
            c.option,
            c.quantity,
            c.estimate.relative_error(c.analytic),
            c.tolerance
        );
    }
    Ok(failed.is_empty())
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Evaluate {
            scenario,
            option,
            serving,
            out,
            dump_pdf,
        } => cmd_evaluate(scenario, *option, *serving, out, dump_pdf).map(|_| true),
        Command::Sweep {
            scenario,
            option,
            serving,
            variable,
            from,
            to,
            steps,
            out,
        } => cmd_sweep(scenario, *option, *serving, *variable, *from, *to, *steps, out).map(|_| true),
        Command::Boundary {
            scenario,
            from,
            to,
            steps,
            ell_from,
            ell_to,
            n,
            out,
        } => cmd_boundary(scenario, *from, *to, *steps, *ell_from, *ell_to, *n, out).map(|_| true),
        Command::MinDrones {
            scenario,
            option,
            target_bps,
            from,
            to,
            steps,
            out,
        } => cmd_min_drones(scenario, *option, *target_bps, *from, *to, *steps, out).map(|_| true),
        Command::Validate {
            scenario,
            option,
            serving,
            seed,
            reps,
            drops,
            corrupt_an,
        } => cmd_validate(scenario, *option, *serving, *seed, *reps, *drops, *corrupt_an),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VALIDATION,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
