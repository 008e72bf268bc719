//! The `pmax` command-line tool.
//!
//! Every subcommand writes CSV to standard output, preceded by `#` lines
//! carrying the run manifest (command line, seed, model hash, version) and
//! the applicability checks of the operation. Wall-clock time goes to
//! standard error so that equal inputs give byte-identical output.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 when the model falls
//! outside the conditions the requested operation needs.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use perturbed_max::analytic::{self, AsymptoteReport, Check};
use perturbed_max::config::{self, ModelConfig};
use perturbed_max::integral_eq::{self, Grid, SolveOptions};
use perturbed_max::tilt::{self, LundbergSolution};
use perturbed_max::walk::{self, DecayFit};
use perturbed_max::{
    parse_config, DistributionSpec, Error, EstimateResult, ProductionModel, RandomStream, WalkModel,
};

/// Environment variable read when `--seed` is absent.
pub const SEED_ENV: &str = "PMAX_SEED";
pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_REPS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "pmax",
    version,
    about = "Tail of the maximum of a perturbed random walk"
)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form P(M <= x) for negated-exponential increments.
    Exact(ExactArgs),
    /// Lundberg root, kappa, and the unperturbed constant r.
    Theta(ThetaArgs),
    /// Monte Carlo estimates of P(M > x).
    Estimate(EstimateArgs),
    /// Neumann-series solution of the integral equation for P(M > x).
    SolveIe(SolveArgs),
    /// Asymptotic approximation of P(M > x) in a given regime.
    Asymptote(AsymptoteArgs),
    /// Lower bound and asymptotic upper envelope.
    Bounds(BoundsArgs),
    /// Canned models: a production facility or the correlated counterexample.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Model file with `key = value` lines.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Replications per estimate.
    #[arg(long)]
    reps: Option<u64>,
    /// Root seed; falls back to the PMAX_SEED environment variable.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Comma-separated levels.
    #[arg(
        long = "x",
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    xs: Vec<f64>,
}

#[derive(Debug, Args)]
struct ThetaArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Crude,
    Is,
    Cond,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(
        long = "x",
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    xs: Vec<f64>,
    #[arg(long, value_enum, default_value = "is")]
    method: MethodArg,
    #[command(flatten)]
    sim: SimArgs,
    /// Truncation accuracy of the conditional estimator.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Path length of the crude estimator (default: max(50 x / |mu|, 10^4)).
    #[arg(long)]
    horizon: Option<u64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, allow_negative_numbers = true)]
    xmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    xmax: Option<f64>,
    /// Level used to choose the domain when --xmin/--xmax are absent.
    #[arg(long = "x", default_value_t = 10.0, allow_negative_numbers = true)]
    x: f64,
    #[arg(long, default_value_t = 4001)]
    points: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Cl,
    Exp,
    Heavy,
}

#[derive(Debug, Args)]
struct AsymptoteArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, value_enum)]
    regime: RegimeArg,
    #[arg(
        long = "x",
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    xs: Vec<f64>,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(
        long = "x",
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    xs: Vec<f64>,
    /// Tilt parameter of the upper bound (default: theta*).
    #[arg(long)]
    theta: Option<f64>,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioName {
    Production,
    Counterexample,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(value_enum)]
    name: ScenarioName,
    /// Production model file overriding the canned facility.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long = "x", value_delimiter = ',', allow_negative_numbers = true)]
    xs: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    lambda1: f64,
    /// Customers simulated per production run.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Skip the independent-marginals control of the counterexample.
    #[arg(long)]
    no_control: bool,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Model(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Model(e) if e.is_applicability() => 2,
            Failure::Model(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Model(e) => write!(f, "{e}"),
        }
    }
}

/// Header and table of one run; rendered after the manifest.
#[derive(Debug, Default)]
struct Table {
    header: Vec<String>,
    columns: String,
    rows: Vec<String>,
}

impl Table {
    fn new(columns: &str) -> Self {
        Self {
            columns: columns.to_string(),
            ..Self::default()
        }
    }

    fn note(&mut self, line: impl Into<String>) {
        self.header.push(line.into());
    }

    fn check(&mut self, c: &Check) {
        let verdict = if c.passed { "pass" } else { "fail" };
        self.note(format!("check: {}: {verdict} ({})", c.name, num(c.value)));
    }

    fn row(&mut self, cells: &[String]) {
        self.rows.push(cells.join(","));
    }

    fn warnings(&mut self, x: f64, e: &EstimateResult) {
        for w in &e.warnings {
            self.note(format!("warning: x={}: {w}", num(x)));
        }
    }
}

/// The `#` lines identifying a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command_line: String,
    pub seed: u64,
    pub seed_source: &'static str,
    pub model_sha256: Option<String>,
    pub model_text: Option<String>,
    pub version: &'static str,
}

impl RunManifest {
    fn render(&self, out: &mut String) {
        let _ = writeln!(out, "# pmax {}", self.version);
        let _ = writeln!(out, "# command: {}", self.command_line);
        let _ = writeln!(out, "# seed: {} ({})", self.seed, self.seed_source);
        if let Some(h) = &self.model_sha256 {
            let _ = writeln!(out, "# model_sha256: {h}");
        }
        if let Some(text) = &self.model_text {
            for line in text.lines() {
                let _ = writeln!(out, "# model: {line}");
            }
        }
    }
}

/// Shortest round-trip form, switching to exponent notation for very
/// small or large magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn model_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Parse arguments, run, and write the CSV; returns the exit code.
///
/// `env_seed` is the value of [`SEED_ENV`], if set.
pub fn run<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    let command_line = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let started = Instant::now();

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return 1;
        }
    };
    let (text, code) = pool.install(|| execute(&cli, env_seed, command_line));
    let _ = out.write_all(text.as_bytes());
    let _ = writeln!(
        err,
        "# wall_clock_seconds: {:.3}",
        started.elapsed().as_secs_f64()
    );
    if code != 0 {
        if let Some(line) = text.lines().find(|l| l.starts_with("# error: ")) {
            let _ = writeln!(err, "{}", &line[2..]);
        } else if text.is_empty() {
            let _ = writeln!(err, "error: run failed");
        }
    }
    code
}

fn resolve_seed(flag: Option<u64>, env_seed: Option<&str>) -> Result<(u64, &'static str), Failure> {
    if let Some(s) = flag {
        return Ok((s, "--seed"));
    }
    match env_seed {
        Some(v) => v
            .trim()
            .parse()
            .map(|s| (s, "env PMAX_SEED"))
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        None => Ok((DEFAULT_SEED, "default")),
    }
}

fn load_model(path: &PathBuf) -> Result<(ModelConfig, String), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read model file {}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    let canonical = config::serialize(&cfg);
    Ok((cfg, canonical))
}

fn sim_args(command: &Command) -> Option<&SimArgs> {
    match command {
        Command::Theta(a) => Some(&a.sim),
        Command::Estimate(a) => Some(&a.sim),
        Command::Asymptote(a) => Some(&a.sim),
        Command::Bounds(a) => Some(&a.sim),
        Command::Scenario(a) => Some(&a.sim),
        Command::Exact(_) | Command::SolveIe(_) => None,
    }
}

/// Runs the command and renders manifest plus table, or manifest plus an
/// `# error:` line on failure.
fn execute(cli: &Cli, env_seed: Option<&str>, command_line: String) -> (String, i32) {
    let mut out = String::new();
    let seed_flag = sim_args(&cli.command).and_then(|s| s.seed);
    let (seed, seed_source) = match resolve_seed(seed_flag, env_seed) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(out, "# error: {e}");
            return (out, e.exit_code());
        }
    };
    let mut manifest = RunManifest {
        command_line,
        seed,
        seed_source,
        model_sha256: None,
        model_text: None,
        version: env!("CARGO_PKG_VERSION"),
    };
    let result = dispatch(&cli.command, seed, &mut manifest);
    manifest.render(&mut out);
    match result {
        Ok(table) => {
            for line in &table.header {
                let _ = writeln!(out, "# {line}");
            }
            let _ = writeln!(out, "{}", table.columns);
            for row in &table.rows {
                let _ = writeln!(out, "{row}");
            }
            (out, 0)
        }
        Err(e) => {
            let _ = writeln!(out, "# error: {e}");
            (out, e.exit_code())
        }
    }
}

fn dispatch(command: &Command, seed: u64, manifest: &mut RunManifest) -> Result<Table, Failure> {
    let mut with_model = |arg: &ModelArg| -> Result<ModelConfig, Failure> {
        let (cfg, canonical) = load_model(&arg.model)?;
        manifest.model_sha256 = Some(model_hash(&canonical));
        manifest.model_text = Some(canonical);
        Ok(cfg)
    };
    let stream = RandomStream::new(seed);
    match command {
        Command::Exact(a) => exact(&with_model(&a.model)?.model, &a.xs),
        Command::Theta(a) => theta(&with_model(&a.model)?.model, reps(&a.sim)?, &stream),
        Command::Estimate(a) => {
            let model = with_model(&a.model)?.model;
            estimate(&model, a, reps(&a.sim)?, &stream)
        }
        Command::SolveIe(a) => solve_ie(&with_model(&a.model)?.model, a),
        Command::Asymptote(a) => {
            let model = with_model(&a.model)?.model;
            asymptote(&model, a.regime, &a.xs, reps(&a.sim)?, &stream)
        }
        Command::Bounds(a) => {
            let model = with_model(&a.model)?.model;
            bounds(&model, &a.xs, a.theta, reps(&a.sim)?, &stream)
        }
        Command::Scenario(a) => match a.name {
            ScenarioName::Production => {
                let production = match &a.model {
                    Some(path) => {
                        let cfg = with_model(&ModelArg {
                            model: path.clone(),
                        })?;
                        cfg.production.ok_or_else(|| {
                            Failure::Usage(
                                "model file has no interarrival/service/delay laws".into(),
                            )
                        })?
                    }
                    None => {
                        let p = canned_production();
                        let canonical = config::serialize(&ModelConfig {
                            model: p.walk_model()?,
                            production: Some(p),
                        });
                        manifest.model_sha256 = Some(model_hash(&canonical));
                        manifest.model_text = Some(canonical);
                        p
                    }
                };
                production_scenario(&production, a, reps(&a.sim)?, &stream)
            }
            ScenarioName::Counterexample => {
                if a.model.is_some() {
                    return Err(Failure::Usage(
                        "the counterexample takes --lambda1, not --model".into(),
                    ));
                }
                let model = WalkModel::correlated(a.lambda1, a.lambda1 / 4.0)?;
                let canonical = config::serialize(&ModelConfig {
                    model,
                    production: None,
                });
                manifest.model_sha256 = Some(model_hash(&canonical));
                manifest.model_text = Some(canonical);
                counterexample(a, reps(&a.sim)?, &stream)
            }
        },
    }
}

fn reps(sim: &SimArgs) -> Result<u64, Failure> {
    match sim.reps {
        Some(0) => Err(Failure::Usage("--reps must be at least 1".into())),
        Some(r) => Ok(r),
        None => Ok(DEFAULT_REPS),
    }
}

fn model_checks(table: &mut Table, model: &WalkModel) {
    let mu = model.drift();
    table.check(&Check {
        name: "E X < 0".into(),
        passed: mu < 0.0,
        value: mu,
    });
    let m = model.perturbation.positive_part_mean();
    table.check(&Check {
        name: "E xi+ finite".into(),
        passed: m.is_finite(),
        value: m,
    });
    table.note(format!("dependence: {}", model.dependence));
}

fn exact(model: &WalkModel, xs: &[f64]) -> Result<Table, Failure> {
    let mut t = Table::new("x,cdf,tail,method");
    model_checks(&mut t, model);
    for &x in xs {
        let cdf = analytic::exact_cdf_for(model, x)?;
        t.row(&[num(x), num(cdf), num(1.0 - cdf), "exact".into()]);
    }
    Ok(t)
}

fn r_constant(
    model: &WalkModel,
    sol: &LundbergSolution,
    reps: u64,
    stream: &RandomStream,
) -> Result<(f64, f64, &'static str, u64), Failure> {
    Ok(match analytic::exact_r(&model.increment) {
        Some(r) => (r, 0.0, "exact", 0),
        None => {
            let e = tilt::estimate_r_ladder(&model.increment, sol, reps, stream)?;
            (e.estimate, e.std_error, "ladder", reps)
        }
    })
}

fn theta(model: &WalkModel, reps: u64, stream: &RandomStream) -> Result<Table, Failure> {
    let sol = tilt::solve_theta_star(&model.increment)?;
    let (r, r_se, r_method, r_reps) = r_constant(model, &sol, reps, stream)?;
    let mut t = Table::new(
        "theta_star,kappa,psi_prime_at_theta_star,psi_at_kappa,bracket_lo,bracket_hi,r,r_std_error,r_method,reps,seed",
    );
    model_checks(&mut t, model);
    t.row(&[
        num(sol.theta_star),
        num(sol.kappa),
        num(sol.psi_prime_at_theta_star),
        num(sol.psi_at_kappa),
        num(sol.bracket.0),
        num(sol.bracket.1),
        num(r),
        num(r_se),
        r_method.into(),
        r_reps.to_string(),
        stream.seed().to_string(),
    ]);
    Ok(t)
}

const ESTIMATE_COLUMNS: &str = "x,estimate,std_error,ci_lo,ci_hi,method,reps,seed";

fn estimate_row(t: &mut Table, x: f64, e: &EstimateResult) {
    t.row(&[
        num(x),
        num(e.estimate),
        num(e.std_error),
        num(e.ci_lo),
        num(e.ci_hi),
        e.method.label().into(),
        e.reps.to_string(),
        e.seed.to_string(),
    ]);
}

fn estimate(
    model: &WalkModel,
    a: &EstimateArgs,
    reps: u64,
    stream: &RandomStream,
) -> Result<Table, Failure> {
    let mut t = Table::new(ESTIMATE_COLUMNS);
    model_checks(&mut t, model);
    let results = match a.method {
        MethodArg::Crude => {
            let r = walk::crude_tail_many(model, &a.xs, a.horizon, reps, stream)?;
            t.note("biased_low: true (finite-horizon maximum)");
            r
        }
        MethodArg::Is => {
            let sol = tilt::solve_theta_star(&model.increment)?;
            let mgf = model.perturbation.mgf(sol.theta_star);
            t.note(format!("theta_star: {}", num(sol.theta_star)));
            t.check(&Check {
                name: "E exp(theta* xi) finite".into(),
                passed: mgf.is_finite(),
                value: mgf,
            });
            a.xs.iter()
                .map(|&x| walk::is_tail(model, &sol, x, reps, stream))
                .collect::<Result<Vec<_>, _>>()?
        }
        MethodArg::Cond => {
            let trunc = walk::Truncation::new(model, a.eps)?;
            t.note(format!(
                "truncation: eps={} distance={} bias<={}",
                num(trunc.eps),
                num(trunc.distance),
                num(2.0 * trunc.eps)
            ));
            a.xs.iter()
                .map(|&x| walk::conditional_tail(model, x, reps, a.eps, stream))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    for (&x, e) in a.xs.iter().zip(&results) {
        t.warnings(x, e);
        estimate_row(&mut t, x, e);
    }
    Ok(t)
}

fn solve_ie(model: &WalkModel, a: &SolveArgs) -> Result<Table, Failure> {
    let grid = match (a.xmin, a.xmax) {
        (Some(lo), Some(hi)) => Grid::new(lo, hi, a.points)?,
        (None, None) => Grid::auto(model, a.x, a.points)?,
        _ => {
            return Err(Failure::Usage(
                "give both --xmin and --xmax, or neither".into(),
            ))
        }
    };
    let opts = SolveOptions {
        tol: a.tol,
        max_terms: a.max_terms,
        keep_partial_sums: false,
    };
    let sol = integral_eq::solve_u(model, grid, opts)?;
    let residual = integral_eq::residual(&sol.u, model)?;
    let mut t = Table::new("x,u");
    model_checks(&mut t, model);
    t.note(format!(
        "grid: [{}, {}] points={}",
        num(grid.x_min),
        num(grid.x_max),
        grid.n_points
    ));
    t.note(format!("terms: {}", sol.terms));
    t.note(format!("last_term_norm: {}", num(sol.last_norm)));
    t.note(format!("residual: {}", num(residual)));
    t.note("method: neumann");
    for (x, u) in grid.points().into_iter().zip(&sol.u.values) {
        t.row(&[num(x), num(*u)]);
    }
    Ok(t)
}

fn report_header(t: &mut Table, report: &AsymptoteReport) {
    t.note(format!("regime: {}", report.regime));
    for c in &report.checks {
        t.check(c);
    }
    for n in &report.notes {
        t.note(format!("note: {n}"));
    }
}

fn asymptote(
    model: &WalkModel,
    regime: RegimeArg,
    xs: &[f64],
    reps: u64,
    stream: &RandomStream,
) -> Result<Table, Failure> {
    let mut t = Table::new("x,approximation,constant,rate_or_scale,method");
    model_checks(&mut t, model);
    match regime {
        RegimeArg::Cl => {
            let sol = tilt::solve_theta_star(&model.increment)?;
            let estimates = xs
                .iter()
                .map(|&x| walk::is_tail(model, &sol, x, reps, stream))
                .collect::<Result<Vec<_>, _>>()?;
            let report = analytic::cl_constant(model, &sol, xs, &estimates)?;
            report_header(&mut t, &report);
            if let Some(se) = report.constant_std_error {
                t.note(format!("constant_std_error: {}", num(se)));
            }
            if let Some(p) = &report.plateau {
                t.note(format!(
                    "plateau: from x={} max_pooled_deviation={}",
                    num(p.xs[0]),
                    num(p.max_pooled_deviation())
                ));
            }
            for (&x, e) in xs.iter().zip(&estimates) {
                t.note(format!(
                    "is_estimate: x={} p={} se={}",
                    num(x),
                    num(e.estimate),
                    num(e.std_error)
                ));
            }
            for &x in xs {
                let v = report.constant * (-sol.theta_star * x).exp();
                t.row(&[
                    num(x),
                    num(v),
                    num(report.constant),
                    num(sol.theta_star),
                    "cl".into(),
                ]);
            }
        }
        RegimeArg::Exp => {
            let fit = model.perturbation.exp_tail_fit().ok_or_else(|| {
                Error::Inapplicable(format!(
                    "{} has no exact exponential tail",
                    model.perturbation
                ))
            })?;
            let report = analytic::exp_perturbation_report(model, fit)?;
            report_header(&mut t, &report);
            t.note(format!("tail_fit: d={} nu={}", num(fit.d), num(fit.nu)));
            for &x in xs {
                let v = report.constant * (-fit.nu * x).exp();
                t.row(&[
                    num(x),
                    num(v),
                    num(report.constant),
                    num(fit.nu),
                    "exp".into(),
                ]);
            }
        }
        RegimeArg::Heavy => {
            for &x in xs {
                let report = analytic::heavy_tail_report(model, x)?;
                if t.rows.is_empty() {
                    report_header(&mut t, &report);
                }
                let v = analytic::heavy_tail_asymptote(model, x)?;
                if v.out_of_range {
                    t.note(format!("warning: x={}: approximation exceeds 1", num(x)));
                }
                t.row(&[
                    num(x),
                    num(v.value),
                    num(report.constant),
                    num(report.rate_or_scale),
                    "heavy".into(),
                ]);
            }
        }
    }
    Ok(t)
}

fn bounds(
    model: &WalkModel,
    xs: &[f64],
    theta: Option<f64>,
    reps: u64,
    stream: &RandomStream,
) -> Result<Table, Failure> {
    let sol = tilt::solve_theta_star(&model.increment)?;
    let theta = theta.unwrap_or(sol.theta_star);
    if !(theta > 0.0 && theta <= sol.theta_star) {
        return Err(Failure::Usage(format!(
            "--theta must lie in (0, theta* = {}]",
            num(sol.theta_star)
        )));
    }
    let (r, r_se, r_method, _) = r_constant(model, &sol, reps, stream)?;
    let upper = analytic::upper_bound(model, &sol, theta, Some(r))?;
    let mut t =
        Table::new("x,lower_bound,lower_approximate,upper_envelope,refined_upper_envelope,method");
    model_checks(&mut t, model);
    t.note(format!(
        "theta_star: {} theta: {}",
        num(sol.theta_star),
        num(theta)
    ));
    t.note(format!(
        "r: {} ({r_method}, std_error {})",
        num(r),
        num(r_se)
    ));
    t.note(format!("upper_constant: {}", num(upper.value)));
    match upper.refined {
        Some(v) => t.note(format!("refined_upper_constant: {}", num(v))),
        None => t.note("refined_upper_constant: n/a (needs xi >= 0 and theta = theta*)"),
    }
    t.note("note: envelopes are constant * exp(-theta* x), bounds on the limsup only");
    let mut lower_constant = None;
    for &x in xs {
        let lb = analytic::lower_bound(model, &sol, r, x)?;
        lower_constant.get_or_insert(lb.asymptotic_constant);
        let decay = (-sol.theta_star * x).exp();
        let refined = upper.refined.map(|v| num(v * decay)).unwrap_or_default();
        t.row(&[
            num(x),
            num(lb.value),
            lb.approximate.to_string(),
            num(upper.value * decay),
            refined,
            "bounds".into(),
        ]);
    }
    if let Some(c) = lower_constant {
        t.note(format!("lower_constant: {}", num(c)));
    }
    Ok(t)
}

/// Poisson arrivals at rate 1, exponential service at rate 2, exponential
/// delays at rate 3: the walk has `ExpDifference(2, 1)` increments and
/// `Exponential(3)` perturbations.
pub fn canned_production() -> ProductionModel {
    ProductionModel {
        interarrival: DistributionSpec::Exponential { rate: 1.0 },
        service: DistributionSpec::Exponential { rate: 2.0 },
        delay: DistributionSpec::Exponential { rate: 3.0 },
    }
}

fn production_scenario(
    production: &ProductionModel,
    a: &ScenarioArgs,
    reps: u64,
    stream: &RandomStream,
) -> Result<Table, Failure> {
    let xs = if a.xs.is_empty() {
        vec![1.0, 2.0, 4.0]
    } else {
        a.xs.clone()
    };
    let model = production.walk_model()?;
    let mut t = Table::new(ESTIMATE_COLUMNS);
    model_checks(&mut t, &model);
    t.note(format!(
        "steps: {} (lindley rows estimate P(W_n > x))",
        a.steps
    ));
    let lindley = walk::lindley_tail(production, &xs, a.steps, reps, &stream.fork(1))?;
    let limit: Vec<EstimateResult> = match tilt::solve_theta_star(&model.increment) {
        Ok(sol) => xs
            .iter()
            .map(|&x| walk::is_tail(&model, &sol, x, reps, &stream.fork(2)))
            .collect::<Result<_, _>>()?,
        Err(e) if e.is_applicability() => {
            t.note(format!("note: no importance sampling rows: {e}"));
            walk::crude_tail_many(&model, &xs, None, reps, &stream.fork(2))?
        }
        Err(e) => return Err(e.into()),
    };
    for (&x, e) in xs.iter().zip(&lindley) {
        estimate_row(&mut t, x, e);
    }
    for (&x, e) in xs.iter().zip(&limit) {
        t.warnings(x, e);
        estimate_row(&mut t, x, e);
    }
    Ok(t)
}

fn counterexample(a: &ScenarioArgs, reps: u64, stream: &RandomStream) -> Result<Table, Failure> {
    let l1 = a.lambda1;
    let xs = if a.xs.is_empty() {
        [3.0, 4.0, 5.0, 6.0].iter().map(|x| x * 2.0 / l1).collect()
    } else {
        a.xs.clone()
    };
    let correlated = WalkModel::correlated(l1, l1 / 4.0)?;
    let sol = tilt::solve_theta_star(&correlated.increment)?;
    let mut t = Table::new("dependence,rate,rate_std_error,theta_star,heavy_rate,reps,seed,method");
    model_checks(&mut t, &correlated);
    t.note(format!(
        "xs: {}",
        xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
    ));
    let mut fits: Vec<(&str, DecayFit)> = Vec::new();
    fits.push((
        "correlated",
        walk::counterexample_decay(l1, &xs, reps, stream)?,
    ));
    if !a.no_control {
        let control = correlated.independent_marginals();
        fits.push((
            "independent",
            walk::decay_fit(&control, &xs, reps, &stream.fork(1))?,
        ));
    }
    for (label, fit) in &fits {
        for (x, e) in fit.xs.iter().zip(&fit.estimates) {
            t.note(format!(
                "crude: {label} x={} p={} se={}",
                num(*x),
                num(e.estimate),
                num(e.std_error)
            ));
        }
    }
    for (label, fit) in &fits {
        t.row(&[
            label.to_string(),
            num(fit.rate),
            num(fit.rate_std_error),
            num(sol.theta_star),
            num(l1 / 2.0),
            reps.to_string(),
            stream.seed().to_string(),
            "decay_fit".into(),
        ]);
    }
    Ok(t)
}
