//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use ricci_lab_core::evi_lab;
use ricci_lab_core::hopflax;
use ricci_lab_core::kernel_sim;
use ricci_lab_core::mmdist::{self, DistanceBound, Initialization};
use ricci_lab_core::mmspace::{GridSpace, MetricMeasureSpace};
use ricci_lab_core::transport;
use serde_json::{json, Value};

use crate::config::{CheckKind, CheckSpec, ReportFormat, ScenarioConfig, SpaceSpec};
use crate::error::{io_error, AppError, Result};
use crate::formats;
use crate::json::{float, float_array, to_string};
use crate::parallel;
use crate::report;
use crate::scenario::{self, build, measure, run_scenario, Built};
use crate::spacefile::{self, load_space, write_text, ModelSpec};

#[derive(Debug, Parser)]
#[command(name = "ricci-lab", version, about = "Curvature checks on finite metric measure spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or validate space files.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Export heat or minimizing-movement trajectories.
    #[command(subcommand)]
    Flow(FlowCmd),
    /// Run one check, or the whole battery, and emit a report.
    Verify(VerifyArgs),
    /// Export the heat kernel at one time.
    Kernel(KernelArgs),
    /// Sample the Markov chain and compare with the kernel.
    Brownian(BrownianArgs),
    /// Upper bounds on the transport distance between spaces.
    #[command(subcommand)]
    Dist(DistCmd),
    /// Validate or re-run reports.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Exact optimal plan between the scenario measures.
    Transport(TransportArgs),
    /// Hopf–Lax surface of a function.
    HopfLax(HopfLaxArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builder {
    Circle,
    Interval,
    Torus,
    TwoPoint,
    Cycle,
}

/// Flags mirroring the scenario configuration. Without `--strict-config`
/// they override the file given by `--config`.
#[derive(Clone, Debug, Default, Args)]
pub struct ScenarioArgs {
    /// Scenario configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Let the configuration file win over conflicting flags.
    #[arg(long)]
    pub strict_config: bool,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_enum)]
    pub builder: Option<Builder>,
    /// Space file; replaces the builder.
    #[arg(long, conflicts_with = "builder")]
    pub space_file: Option<PathBuf>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub lengths: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub shape: Option<Vec<usize>>,
    #[arg(long)]
    pub distance: Option<f64>,
    #[arg(long)]
    pub m0: Option<f64>,
    #[arg(long)]
    pub weight: Option<f64>,
    /// Curvature parameter.
    #[arg(short = 'K', long = "curvature", allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub c_tol: Option<f64>,
    #[arg(long)]
    pub tv_constant: Option<f64>,
}

impl ScenarioArgs {
    fn space_flags_given(&self) -> bool {
        self.builder.is_some()
            || self.space_file.is_some()
            || self.length.is_some()
            || self.n.is_some()
            || self.lengths.is_some()
            || self.shape.is_some()
            || self.distance.is_some()
            || self.m0.is_some()
            || self.weight.is_some()
    }

    fn any_flag_given(&self) -> bool {
        self.space_flags_given()
            || self.name.is_some()
            || self.k.is_some()
            || self.times.is_some()
            || self.seed.is_some()
            || self.c_tol.is_some()
            || self.tv_constant.is_some()
    }

    fn space_spec(&self) -> Result<SpaceSpec> {
        if let Some(p) = &self.space_file {
            return Ok(SpaceSpec::File { path: p.display().to_string() });
        }
        let builder =
            self.builder.ok_or_else(|| AppError::Config("space flags need --builder or --space-file".into()))?;
        let need_n = || self.n.ok_or_else(|| AppError::Config("--n is required".into()));
        let pair = |v: &Option<Vec<f64>>| v.as_ref().map(|v| [v[0], v[1]]);
        Ok(match builder {
            Builder::Circle => SpaceSpec::Circle { length: self.length.unwrap_or(1.0), n: need_n()? },
            Builder::Interval => SpaceSpec::Interval { length: self.length.unwrap_or(1.0), n: need_n()? },
            Builder::Torus => SpaceSpec::Torus {
                lengths: pair(&self.lengths).unwrap_or([1.0, 1.0]),
                shape: self
                    .shape
                    .as_ref()
                    .map(|s| [s[0], s[1]])
                    .ok_or_else(|| AppError::Config("--shape is required for the torus".into()))?,
            },
            Builder::TwoPoint => SpaceSpec::TwoPoint {
                distance: self.distance.unwrap_or(1.0),
                m0: self.m0.unwrap_or(0.5),
                weight: self.weight.unwrap_or(1.0),
            },
            Builder::Cycle => SpaceSpec::Cycle { n: need_n()? },
        })
    }

    /// Configuration from `--config` and the flags.
    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::new(self.space_spec()?),
        };
        if self.config.is_some() {
            if self.strict_config {
                if self.any_flag_given() {
                    eprintln!("warning: --strict-config set; scenario flags are ignored");
                }
                return Ok(config);
            }
            if self.space_flags_given() {
                config.space = self.space_spec()?;
            }
        }
        if let Some(v) = &self.name {
            config.name = v.clone();
        }
        if let Some(k) = self.k {
            config.k = Some(k);
        }
        if let Some(t) = &self.times {
            config.times = t.clone();
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(c) = self.c_tol {
            config.tolerances.c_tol = c;
        }
        if let Some(c) = self.tv_constant {
            config.tolerances.tv_constant = c;
        }
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum SpaceCmd {
    /// Write a space file from a builder.
    Build {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the metric and probability axioms of a space file.
    Validate { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum FlowCmd {
    /// Heat flow of `mu` at the scenario times.
    Heat {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimizing-movement scheme of the entropy from `mu`.
    Jko {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Check name, or `battery` for the configured list.
    pub check: String,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    CsvBundle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub t: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the spectrum (JSON) when the semigroup is diagonalised.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BrownianArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    pub x0: usize,
    #[arg(long, default_value_t = 0.5)]
    pub horizon: f64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    /// Number of full paths written to `--out`.
    #[arg(long, default_value_t = 10)]
    pub record: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum DistCmd {
    /// Alternating upper bound between two space files.
    Upper {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Coupling as CSV triples.
        #[arg(long)]
        coupling: Option<PathBuf>,
    },
    /// Checks across a refining grid family with bounds between members.
    Stability {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        /// Checks run on every member.
        #[arg(long, value_delimiter = ',', default_value = "cd_convexity,evi")]
        checks: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// Validate a JSON report or a CSV bundle directory.
    Validate { path: PathBuf },
    /// Re-run the configuration echoed by a report.
    Rerun {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

#[derive(Debug, Args)]
pub struct TransportArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the displacement interpolation with this many steps (grids only).
    #[arg(long)]
    pub interpolation: Option<usize>,
    #[arg(long, requires = "interpolation")]
    pub interpolation_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HopfLaxArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Function values (JSON array).
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io_error("<stdout>"))
        }
    }
}

fn build_scenario(args: &ScenarioArgs) -> Result<(ScenarioConfig, Built)> {
    let config = args.scenario()?.resolve()?;
    let built = build(&config)?;
    Ok((config, built))
}

fn mu_of(config: &ScenarioConfig, built: &Built) -> Result<Vec<f64>> {
    measure(config.measures.mu.as_ref().expect("resolved"), built)
}

fn nu_of(config: &ScenarioConfig, built: &Built) -> Result<Vec<f64>> {
    measure(config.measures.nu.as_ref().expect("resolved"), built)
}

fn format_of(arg: Option<FormatArg>, config: &ScenarioConfig) -> ReportFormat {
    match arg {
        Some(FormatArg::Json) => ReportFormat::Json,
        Some(FormatArg::CsvBundle) => ReportFormat::CsvBundle,
        None => config.output.format,
    }
}

fn print_outcomes(run: &scenario::ScenarioRun) {
    for o in &run.outcomes {
        match &o.result {
            Ok(r) => eprintln!(
                "{:5} {:<26} slack {:>12.4e}  tol {:>12.4e}",
                o.status().to_uppercase(),
                o.spec.check.name(),
                r.measured_slack,
                r.tolerance
            ),
            Err(e) => eprintln!("ERROR {:<26} {e}", o.spec.check.name()),
        }
    }
}

fn finish_run(run: &scenario::ScenarioRun, out: Option<&Path>, format: ReportFormat) -> Result<i32> {
    print_outcomes(run);
    match out {
        Some(path) => {
            report::emit_report(run, format, path)?;
        }
        None if format == ReportFormat::CsvBundle => {
            return Err(AppError::Config("a csv-bundle needs --out".into()));
        }
        None => emit(None, &report::report_string(run))?,
    }
    Ok(run.exit_code())
}

fn verify(args: &VerifyArgs) -> Result<i32> {
    let mut config = args.scenario.scenario()?;
    if args.check != "battery" {
        let kind =
            CheckKind::parse(&args.check).ok_or_else(|| AppError::Config(format!("unknown check `{}`", args.check)))?;
        let mut specs: Vec<CheckSpec> =
            config.checks.take().unwrap_or_default().into_iter().filter(|c| c.check == kind).collect();
        if specs.is_empty() {
            specs.push(CheckSpec::new(kind));
        }
        config.checks = Some(specs);
    }
    let run = run_scenario(&config)?;
    let out = args.out.clone().or_else(|| run.config.output.path.as_ref().map(PathBuf::from));
    finish_run(&run, out.as_deref(), format_of(args.format, &run.config))
}

fn upper_bound_parallel(
    x: &MetricMeasureSpace,
    y: &MetricMeasureSpace,
    rounds: usize,
    restarts: usize,
    seed: u64,
) -> Result<DistanceBound> {
    let candidates: Vec<DistanceBound> = parallel::install(|| {
        (0..=restarts)
            .into_par_iter()
            .map(|r| {
                let init = if r == 0 {
                    Initialization::Eccentricity
                } else {
                    mmdist::restart_initialization(x.n(), y.n(), seed, r - 1)
                };
                mmdist::d_upper_bound(x, y, &init, rounds)
            })
            .collect::<std::result::Result<_, _>>()
    })?;
    let mut best: Option<DistanceBound> = None;
    for c in candidates {
        if best.as_ref().is_none_or(|b| c.upper < b.upper) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one candidate"))
}

fn coupling_csv(gamma: &nalgebra::DMatrix<f64>) -> String {
    let mut out = String::from("x_index,y_index,mass\n");
    for i in 0..gamma.nrows() {
        for j in 0..gamma.ncols() {
            if gamma[(i, j)] > 0.0 {
                out.push_str(&format!("{i},{j},{}\n", crate::json::fmt_f64(gamma[(i, j)])));
            }
        }
    }
    out
}

/// Stability experiment over `sizes` for a grid builder.
pub fn stability(config: &ScenarioConfig, sizes: &[usize], kinds: &[CheckKind], rounds: usize) -> Result<Value> {
    let with_n = |n: usize| -> Result<SpaceSpec> {
        Ok(match &config.space {
            SpaceSpec::Circle { length, .. } => SpaceSpec::Circle { length: *length, n },
            SpaceSpec::Interval { length, .. } => SpaceSpec::Interval { length: *length, n },
            _ => return Err(AppError::Config("stability needs a circle or interval builder".into())),
        })
    };
    let mut family: Vec<GridSpace> = Vec::new();
    let mut configs = Vec::new();
    for &n in sizes {
        let mut c = config.clone();
        c.space = with_n(n)?;
        c.checks = Some(kinds.iter().map(|&k| CheckSpec::new(k)).collect());
        c.measures = Default::default();
        let built = build(&c)?;
        family.push(built.grid.clone().expect("grid builder"));
        configs.push(c);
    }
    let mut member = 0usize;
    let rep = mmdist::stability_experiment(
        &family,
        |_| {
            let run =
                run_scenario(&configs[member]).map_err(|e| ricci_lab_core::error::LabError::Invalid(e.to_string()))?;
            member += 1;
            run.outcomes.into_iter().map(|o| o.result.map_err(ricci_lab_core::error::LabError::Invalid)).collect()
        },
        rounds,
    )?;
    let series: Vec<Value> = rep
        .series
        .iter()
        .map(|s| json!({"name": s.name, "slacks": float_array(&s.slacks), "passes": s.passes}))
        .collect();
    Ok(json!({
        "schema": spacefile::SCHEMA,
        "sizes": rep.sizes,
        "distance_bounds": float_array(&rep.distance_bounds),
        "distance_decreasing": rep.distance_decreasing,
        "slack_monotone": rep.slack_monotone,
        "series": series,
        "checks": rep.checks.iter().map(report::result_value).collect::<Vec<_>>(),
    }))
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Space(SpaceCmd::Build { scenario, out }) => {
            let spec = scenario.scenario()?.space;
            let text = match &spec {
                SpaceSpec::Circle { length, n } => {
                    spacefile::grid_to_string(&ModelSpec::Circle { length: *length, n: *n }.build()?)
                }
                SpaceSpec::Interval { length, n } => {
                    spacefile::grid_to_string(&ModelSpec::Interval { length: *length, n: *n }.build()?)
                }
                SpaceSpec::Torus { lengths, shape } => {
                    spacefile::grid_to_string(&ModelSpec::Torus { lengths: *lengths, shape: *shape }.build()?)
                }
                SpaceSpec::TwoPoint { distance, m0, .. } => {
                    spacefile::space_to_string(&MetricMeasureSpace::two_point(*distance, *m0)?, None)
                }
                SpaceSpec::Cycle { n } => {
                    spacefile::space_to_string(ricci_lab_core::dirichlet::DirichletStructure::cycle(*n)?.space(), None)
                }
                SpaceSpec::File { path } => {
                    let loaded = load_space(Path::new(path))?;
                    match &loaded.grid {
                        Some(gs) => spacefile::grid_to_string(gs),
                        None => spacefile::space_to_string(&loaded.space, None),
                    }
                }
            };
            emit(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Space(SpaceCmd::Validate { file }) => {
            let text = std::fs::read_to_string(&file).map_err(io_error(&file))?;
            let raw = spacefile::raw_space_from_str(&text)?;
            let mut summary = formats::space_summary(&raw);
            let full = spacefile::space_from_str(&text);
            summary["loads"] = json!(full.is_ok());
            if let Err(e) = &full {
                summary["load_error"] = json!(e.to_string());
            }
            emit(None, &to_string(&summary))?;
            Ok(if full.is_ok() { 0 } else { 1 })
        }
        Command::Flow(FlowCmd::Heat { scenario, out }) => {
            let (config, built) = build_scenario(&scenario)?;
            let rho = ricci_lab_core::entropy_geo::density(&mu_of(&config, &built)?, built.space.m());
            let mut times = vec![0.0];
            times.extend(config.times.iter().copied());
            let traj = evi_lab::heat_flow(&built.ho, &rho, &times)?;
            emit(out.as_deref(), &formats::trajectory_csv(&traj, built.space.m()))?;
            Ok(0)
        }
        Command::Flow(FlowCmd::Jko { scenario, tau, steps, out }) => {
            let (config, built) = build_scenario(&scenario)?;
            let rho = ricci_lab_core::entropy_geo::density(&mu_of(&config, &built)?, built.space.m());
            let (traj, info) = evi_lab::jko_flow(&built.space, &rho, tau, steps)?;
            let worst = info.iter().map(|i| i.kkt_residual).fold(0.0, f64::max);
            eprintln!("steps {steps}, largest certificate {worst:.3e}");
            emit(out.as_deref(), &formats::trajectory_csv(&traj, built.space.m()))?;
            Ok(0)
        }
        Command::Verify(args) => verify(&args),
        Command::Kernel(args) => {
            let (_, built) = build_scenario(&args.scenario)?;
            let kernel = kernel_sim::heat_kernel(&built.ho, args.t)?;
            let text = match args.format {
                TableFormat::Csv => formats::kernel_csv(&kernel),
                TableFormat::Json => formats::kernel_json(&kernel),
            };
            emit(args.out.as_deref(), &text)?;
            if let Some(p) = &args.spectrum {
                if !built.ho.is_spectral() {
                    return Err(AppError::Config("the semigroup is not diagonalised for this size".into()));
                }
                write_text(p, &formats::spectrum_json(&built.ho.spectrum()))?;
            }
            Ok(0)
        }
        Command::Brownian(args) => {
            let (config, built) = build_scenario(&args.scenario)?;
            let seed = config.seed;
            let recorded: Vec<_> = (0..args.record.min(args.paths))
                .map(|i| kernel_sim::sample_brownian(&built.ds, args.x0, args.horizon, seed, i))
                .collect::<std::result::Result<_, _>>()?;
            if let Some(p) = &args.out {
                let mut buf = Vec::new();
                formats::paths_csv(&mut buf, &recorded).map_err(io_error(p))?;
                write_text(p, &String::from_utf8(buf).expect("utf-8"))?;
            }
            let counts =
                parallel::install(|| scenario::brownian_counts(&built.ds, args.x0, args.horizon, args.paths, seed))?;
            let r = kernel_sim::empirical_vs_kernel_from_counts(
                &built.ho,
                args.x0,
                args.horizon,
                &counts,
                seed,
                config.tolerances.tv_constant,
            )?;
            let mut v = report::result_value(&r);
            v["counts"] = json!(counts);
            emit(None, &to_string(&v))?;
            Ok(if r.pass { 0 } else { 1 })
        }
        Command::Dist(DistCmd::Upper { x, y, rounds, restarts, seed, out, coupling }) => {
            let (xs, ys) = (load_space(&x)?.space, load_space(&y)?.space);
            let bound = upper_bound_parallel(&xs, &ys, rounds, restarts, seed)?;
            let v = json!({
                "upper": float(bound.upper),
                "history": float_array(&bound.history),
                "converged": bound.converged,
                "bridge_violation": float(bound.bridge.violation(&xs, &ys)),
                "rounds": rounds,
                "restarts": restarts,
                "seed": seed,
            });
            emit(out.as_deref(), &to_string(&v))?;
            if let Some(p) = &coupling {
                write_text(p, &coupling_csv(&bound.coupling))?;
            }
            Ok(0)
        }
        Command::Dist(DistCmd::Stability { mut scenario, sizes, rounds, checks, out }) => {
            if scenario.n.is_none() && scenario.config.is_none() {
                scenario.n = sizes.first().copied();
            }
            let config = scenario.scenario()?;
            let kinds = checks
                .iter()
                .map(|c| CheckKind::parse(c).ok_or_else(|| AppError::Config(format!("unknown check `{c}`"))))
                .collect::<Result<Vec<_>>>()?;
            let v = stability(&config, &sizes, &kinds, rounds)?;
            emit(out.as_deref(), &to_string(&v))?;
            let all_pass = v["checks"].as_array().is_some_and(|c| c.iter().all(|r| r["pass"] == json!(true)));
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::Report(ReportCmd::Validate { path }) => {
            let problems = report::validate_path(&path)?;
            for p in &problems {
                eprintln!("{p}");
            }
            Ok(if problems.is_empty() { 0 } else { 1 })
        }
        Command::Report(ReportCmd::Rerun { report: path, out, format }) => {
            let config = report::config_of_report(&report::read_json(&path)?)?;
            let run = run_scenario(&config)?;
            finish_run(&run, out.as_deref(), format_of(format, &run.config))
        }
        Command::Transport(args) => {
            let (config, built) = build_scenario(&args.scenario)?;
            let (mu, nu) = (mu_of(&config, &built)?, nu_of(&config, &built)?);
            let sol = transport::solve_w2_exact(&built.space, &mu, &nu)?;
            let text = match args.format {
                TableFormat::Csv => formats::plan_to_csv(&sol.plan)?,
                TableFormat::Json => formats::plan_to_json(&sol.plan, Some(&sol.potentials)),
            };
            emit(args.out.as_deref(), &text)?;
            if let (Some(steps), Some(p)) = (args.interpolation, &args.interpolation_out) {
                let gs =
                    built.grid.as_ref().ok_or_else(|| AppError::Config("interpolation needs a grid model".into()))?;
                let plan = ricci_lab_core::entropy_geo::displacement_interpolation(gs, &mu, &nu, steps)?;
                write_text(p, &formats::interpolation_csv(&plan))?;
            }
            eprintln!("W2 {:.16e}", sol.w2);
            Ok(0)
        }
        Command::HopfLax(args) => {
            let (_, built) = build_scenario(&args.scenario)?;
            let text = std::fs::read_to_string(&args.g).map_err(io_error(&args.g))?;
            let g = formats::vector_from_json(&text)?;
            let state = hopflax::hopf_lax(&built.space, &g, args.t)?;
            let (dp, dm) = hopflax::dplus_dminus(&built.space, &state);
            emit(args.out.as_deref(), &formats::hopf_lax_csv(&state, &dp, &dm))?;
            Ok(0)
        }
    }
}
