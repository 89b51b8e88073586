//! Command-line front end for the `approxop` executable.
//!
//! ```text
//! approxop <command> [--fn SPEC] [--n N | --n-list N,N,..] [--beta B | --schedule C,P]
//!          [--x X | --x-list X,X,.. | --domain A,B,STEP] [--eps E] [--max-terms M]
//!          [--format csv|json] [--out PATH] [--config FILE] [--print-config]
//! ```
//!
//! A `--config` file holds `key = value` lines using the long flag names
//! without dashes; flags given on the command line win. The term cap falls
//! back to `APPROXOP_MAX_TERMS` and then to the library default.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::analysis::{lipschitz_bound, local_approx_bound, rate_bound, BoundInputs, Domain, DEFAULT_C, DEFAULT_X_MAX};
use crate::error::Error;
use crate::experiments::{
    run_convergence, run_fourth_moment_limit, run_moment_validation, run_voronovskaya, run_weighted, BetaSchedule,
    ExperimentReport, GridPoint, Location, ReportRow, DEFAULT_N_LIST,
};
use crate::functions::ScalarFunction;
use crate::operators::{apply_sum, deviation, OperatorParams};
use crate::report::{emit_report, Format};
use crate::weights::{BetaParam, TruncationPolicy, WeightKind};

pub const MAX_TERMS_ENV: &str = "APPROXOP_MAX_TERMS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Evaluate an operator at points.
    Eval,
    /// Closed-form moments against their series at one `(n, beta)`.
    Moments,
    /// Closed-form moments against their series over a grid.
    ValidateMoments,
    /// Sup-norm error over a domain for a list of `n`.
    Converge,
    /// `n (P_n f - f)` against `x f''(x) / 2`.
    Voronovskaya,
    /// `n^2 P_n((t - x)^4, x)` against `3 x^2`.
    FourthMoment,
    /// Weighted-norm error on `[0, x_max]`.
    Weighted,
    /// Error bounds against measured errors.
    Bounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum)]
pub enum Operator {
    #[default]
    P,
    Jain,
    Szasz,
}

/// Comma-separated list flag value.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: fmt::Display> fmt::Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<List<T>, String>
where
    T::Err: fmt::Display,
{
    let items = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("bad list item `{p}`: {e}")))
        .collect::<Result<Vec<T>, String>>()?;
    if items.is_empty() {
        return Err("list must not be empty".into());
    }
    Ok(List(items))
}

fn parse_n_list(s: &str) -> Result<List<u64>, String> {
    parse_list(s)
}

fn parse_x_list(s: &str) -> Result<List<f64>, String> {
    parse_list(s)
}

fn parse_beta(s: &str) -> Result<BetaParam, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    BetaParam::new(v).map_err(|e| e.to_string())
}

fn parse_beta_list(s: &str) -> Result<List<BetaParam>, String> {
    let List(v) = parse_list::<f64>(s)?;
    v.into_iter()
        .map(|b| BetaParam::new(b).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()
        .map(List)
}

fn parse_schedule(s: &str) -> Result<BetaSchedule, String> {
    let List(v) = parse_list::<f64>(s)?;
    match v[..] {
        [c, p] => BetaSchedule::new(c, p).map_err(|e| e.to_string()),
        _ => Err(format!("schedule takes `c,p`, got `{s}`")),
    }
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    let List(v) = parse_list::<f64>(s)?;
    match v[..] {
        [a, b, step] => Domain::new(a, b, step).map_err(|e| e.to_string()),
        _ => Err(format!("domain takes `a,b,step`, got `{s}`")),
    }
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

/// Raw flags as given on the command line or in a config file.
#[derive(Parser, Clone, Debug, PartialEq)]
#[command(
    name = "approxop",
    version,
    about = "Evaluate generalized-Poisson operators and run convergence experiments"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Function from the registry: poly:c0,c1,..  exp-decay  sin  abs:c  runge
    #[arg(long = "fn", value_name = "SPEC")]
    pub fn_name: Option<String>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, value_parser = parse_n_list, value_name = "N,N,..")]
    pub n_list: Option<List<u64>>,
    #[arg(long, value_parser = parse_beta)]
    pub beta: Option<BetaParam>,
    /// Several fixed betas (point commands only).
    #[arg(long, value_parser = parse_beta_list, value_name = "B,B,..")]
    pub beta_list: Option<List<BetaParam>>,
    /// beta_n = min(c n^-p, 0.999)
    #[arg(long, value_parser = parse_schedule, value_name = "C,P")]
    pub schedule: Option<BetaSchedule>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long, value_parser = parse_x_list, value_name = "X,X,..")]
    pub x_list: Option<List<f64>>,
    #[arg(long, value_parser = parse_domain, value_name = "A,B,STEP")]
    pub domain: Option<Domain>,
    /// Truncation tolerance on the neglected weight mass.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_terms: Option<u64>,
    #[arg(long, value_parser = parse_format, value_name = "csv|json")]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Weights used by `eval`.
    #[arg(long, value_enum)]
    pub operator: Option<Operator>,
    /// Right end of the weighted-norm interval.
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Grid step for weighted norms and bound moduli.
    #[arg(long)]
    pub step: Option<f64>,
    /// Constant C of the local bound.
    #[arg(long)]
    pub bound_c: Option<f64>,
    /// Lipschitz exponent.
    #[arg(long)]
    pub alpha_exp: Option<f64>,
    /// Distance from x to the set where f is Lipschitz.
    #[arg(long)]
    pub dist_e: Option<f64>,
    /// Lipschitz constant, overriding the registered one.
    #[arg(long)]
    pub lip: Option<f64>,
    /// Right end of [0, a] for the rate bound.
    #[arg(long)]
    pub rate_a: Option<f64>,
    /// key = value file of flags; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved invocation and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl Args {
    /// Fill every unset flag from `other`. Mutually exclusive flags are
    /// taken as a group, so `--beta` here drops `schedule` from `other`.
    fn or(self, mut other: Args) -> Args {
        if self.beta.is_some() || self.beta_list.is_some() || self.schedule.is_some() {
            (other.beta, other.beta_list, other.schedule) = (None, None, None);
        }
        if self.n.is_some() || self.n_list.is_some() {
            (other.n, other.n_list) = (None, None);
        }
        if self.x.is_some() || self.x_list.is_some() || self.domain.is_some() {
            (other.x, other.x_list, other.domain) = (None, None, None);
        }
        Args {
            command: self.command,
            fn_name: self.fn_name.or(other.fn_name),
            n: self.n.or(other.n),
            n_list: self.n_list.or(other.n_list),
            beta: self.beta.or(other.beta),
            beta_list: self.beta_list.or(other.beta_list),
            schedule: self.schedule.or(other.schedule),
            x: self.x.or(other.x),
            x_list: self.x_list.or(other.x_list),
            domain: self.domain.or(other.domain),
            eps: self.eps.or(other.eps),
            max_terms: self.max_terms.or(other.max_terms),
            format: self.format.or(other.format),
            out: self.out.or(other.out),
            operator: self.operator.or(other.operator),
            x_max: self.x_max.or(other.x_max),
            step: self.step.or(other.step),
            bound_c: self.bound_c.or(other.bound_c),
            alpha_exp: self.alpha_exp.or(other.alpha_exp),
            dist_e: self.dist_e.or(other.dist_e),
            lip: self.lip.or(other.lip),
            rate_a: self.rate_a.or(other.rate_a),
            config: self.config,
            print_config: self.print_config || other.print_config,
        }
    }
}

/// How `beta` is chosen for each `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum BetaChoice {
    Fixed(Vec<BetaParam>),
    Schedule(BetaSchedule),
}

impl BetaChoice {
    fn params(&self, n: u64) -> crate::Result<Vec<OperatorParams>> {
        match self {
            BetaChoice::Fixed(bs) => bs.iter().map(|&b| OperatorParams::new(n, b)).collect(),
            BetaChoice::Schedule(s) => Ok(vec![s.params(n)?]),
        }
    }
}

/// Where the points come from.
#[derive(Clone, Debug, PartialEq)]
pub enum Points {
    List(Vec<f64>),
    Domain(Domain),
}

/// Fully resolved and validated invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub fn_name: Option<String>,
    pub n_list: Vec<u64>,
    pub beta: BetaChoice,
    pub points: Points,
    pub eps: f64,
    pub max_terms: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub operator: Operator,
    pub x_max: f64,
    pub step: Option<f64>,
    pub bound_c: f64,
    pub alpha_exp: f64,
    pub dist_e: f64,
    pub lip: Option<f64>,
    pub rate_a: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    /// clap's own diagnostics, including `--help` and `--version`.
    Clap(clap::Error),
    Usage(String),
    Lib(Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Lib(e) => write!(f, "error: {e}"),
            CliError::Io(m) => write!(f, "error: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(Error::CapExhausted { .. }) => EXIT_CAP,
            CliError::Lib(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Turn `key = value` lines into flag tokens. `#` starts a comment.
fn config_tokens(text: &str, path: &Path) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return usage(format!(
                "{}:{}: expected `key = value`, got `{line}`",
                path.display(),
                i + 1
            ));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "command" | "config" => {
                return usage(format!(
                    "{}:{}: `{key}` cannot be set from a config file",
                    path.display(),
                    i + 1
                ))
            }
            "print-config" => {
                if value == "true" {
                    out.push("--print-config".into());
                }
            }
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Parse, merge the config file and environment, and validate.
pub fn parse_args<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = Args::try_parse_from(&argv).map_err(CliError::Clap)?;
    let args = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
            let mut file_argv: Vec<OsString> = vec![argv[0].clone(), command_name(args.command).into()];
            file_argv.extend(config_tokens(&text, path)?.into_iter().map(OsString::from));
            let from_file = Args::try_parse_from(&file_argv).map_err(CliError::Clap)?;
            args.or(from_file)
        }
        None => args,
    };
    let env_cap = match std::env::var(MAX_TERMS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("{MAX_TERMS_ENV} must be a positive integer, got `{v}`")))?,
        ),
        Err(_) => None,
    };
    Ok(Invocation {
        print_config: args.print_config,
        config: resolve(args, env_cap)?,
    })
}

/// A parsed command line.
#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    pub config: CliConfig,
    pub print_config: bool,
}

fn command_name(c: Command) -> String {
    c.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

fn default_schedule(c: Command) -> BetaSchedule {
    let p = match c {
        Command::Voronovskaya | Command::FourthMoment => 2.0,
        _ => 1.0,
    };
    BetaSchedule::new(1.0, p).expect("valid default")
}

fn resolve(a: Args, env_cap: Option<u64>) -> Result<CliConfig, CliError> {
    use Command::*;
    let cmd = a.command;
    let name = command_name(cmd);
    let point_command = matches!(cmd, Eval | Moments | Bounds);

    let beta = match (a.beta, a.beta_list, a.schedule) {
        (Some(b), None, None) => BetaChoice::Fixed(vec![b]),
        (None, Some(List(bs)), None) => BetaChoice::Fixed(bs),
        (None, None, Some(s)) => BetaChoice::Schedule(s),
        (None, None, None) if point_command => return usage(format!("`{name}` needs --beta or --schedule")),
        (None, None, None) if cmd == ValidateMoments => BetaChoice::Fixed(default_betas()),
        (None, None, None) => BetaChoice::Schedule(default_schedule(cmd)),
        _ => return usage("give only one of --beta, --beta-list, --schedule"),
    };
    let experiment = matches!(cmd, Converge | Voronovskaya | FourthMoment | Weighted);
    if experiment && matches!(beta, BetaChoice::Fixed(_)) {
        return usage(format!("`{name}` takes --schedule, not a fixed beta"));
    }

    let n_list = match (a.n, a.n_list) {
        (Some(_), Some(_)) => return usage("give either --n or --n-list, not both"),
        (Some(n), None) => vec![n],
        (None, Some(List(v))) => v,
        (None, None) if point_command => return usage(format!("`{name}` needs --n")),
        (None, None) if cmd == ValidateMoments => vec![1, 5, 10, 50],
        (None, None) => DEFAULT_N_LIST.to_vec(),
    };
    if n_list.contains(&0) {
        return usage("n must be a positive integer");
    }

    let points = match (a.x, a.x_list, a.domain) {
        (Some(x), None, None) => Points::List(vec![x]),
        (None, Some(List(v)), None) => Points::List(v),
        (None, None, Some(d)) => Points::Domain(d),
        (None, None, None) => match cmd {
            Converge => Points::Domain(Domain::new(0.0, 1.0, 0.01).expect("valid default")),
            Voronovskaya => Points::List(vec![1.0]),
            FourthMoment => Points::List(vec![0.5, 1.0, 2.0]),
            ValidateMoments => Points::List(vec![0.1, 1.0, 5.0]),
            Weighted => Points::List(vec![]),
            Eval | Moments | Bounds => return usage(format!("`{name}` needs --x or --x-list")),
        },
        _ => return usage("give only one of --x, --x-list, --domain"),
    };
    match (&points, cmd) {
        (Points::Domain(_), Converge) | (Points::List(_), _) => {}
        (Points::Domain(_), _) => return usage(format!("`{name}` takes --x or --x-list, not --domain")),
    }
    if cmd == Converge && !matches!(points, Points::Domain(_)) {
        return usage("`converge` takes --domain a,b,step");
    }

    let needs_fn = matches!(cmd, Eval | Converge | Voronovskaya | Weighted | Bounds);
    if needs_fn && a.fn_name.is_none() {
        return usage(format!("`{name}` needs --fn"));
    }
    if let Some(spec) = &a.fn_name {
        ScalarFunction::from_registry(spec)?;
    }

    let eps = a.eps.unwrap_or(TruncationPolicy::DEFAULT_EPSILON);
    let max_terms = a.max_terms.or(env_cap).unwrap_or(TruncationPolicy::DEFAULT_MAX_TERMS);
    TruncationPolicy::new(eps, max_terms)?;

    let bound_inputs = BoundInputs {
        m_f: a.lip.unwrap_or(1.0),
        a: a.rate_a.unwrap_or(1.0),
        c: a.bound_c.unwrap_or(DEFAULT_C),
        alpha_exp: a.alpha_exp.unwrap_or(1.0),
        dist_e: a.dist_e.unwrap_or(0.0),
    };
    bound_inputs.validate()?;
    let x_max = a.x_max.unwrap_or(DEFAULT_X_MAX);
    if !(x_max > 0.0 && x_max.is_finite()) {
        return usage(format!("--x-max must be finite and > 0, got {x_max}"));
    }
    if let Some(s) = a.step {
        if !(s > 0.0 && s.is_finite()) {
            return usage(format!("--step must be finite and > 0, got {s}"));
        }
    }

    Ok(CliConfig {
        command: cmd,
        fn_name: a.fn_name,
        n_list,
        beta,
        points,
        eps,
        max_terms,
        format: a.format.unwrap_or_default(),
        out: a.out,
        operator: a.operator.unwrap_or_default(),
        x_max,
        step: a.step,
        bound_c: bound_inputs.c,
        alpha_exp: bound_inputs.alpha_exp,
        dist_e: bound_inputs.dist_e,
        lip: a.lip,
        rate_a: a.rate_a,
    })
}

impl CliConfig {
    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy::new(self.eps, self.max_terms).expect("validated")
    }

    fn function(&self) -> Result<ScalarFunction, CliError> {
        match &self.fn_name {
            Some(spec) => Ok(ScalarFunction::from_registry(spec)?),
            None => usage("--fn is required"),
        }
    }

    fn x_list(&self) -> &[f64] {
        match &self.points {
            Points::List(v) => v,
            Points::Domain(_) => &[],
        }
    }

    /// The invocation as argument tokens; parsing them gives back `self`.
    pub fn to_argv(&self) -> Vec<String> {
        let mut v = vec![command_name(self.command)];
        let mut flag = |k: &str, val: String| {
            v.push(format!("--{k}"));
            v.push(val);
        };
        if let Some(f) = &self.fn_name {
            flag("fn", f.clone());
        }
        flag("n-list", List(self.n_list.clone()).to_string());
        match &self.beta {
            BetaChoice::Fixed(bs) => {
                let vals: Vec<f64> = bs.iter().map(|b| b.value()).collect();
                flag("beta-list", List(vals).to_string())
            }
            BetaChoice::Schedule(s) => flag("schedule", format!("{},{}", s.c(), s.p())),
        }
        match &self.points {
            Points::List(xs) if xs.is_empty() => {}
            Points::List(xs) => flag("x-list", List(xs.clone()).to_string()),
            Points::Domain(d) => flag("domain", format!("{},{},{}", d.a(), d.b(), d.step())),
        }
        flag("eps", self.eps.to_string());
        flag("max-terms", self.max_terms.to_string());
        flag("format", self.format.to_string());
        if let Some(p) = &self.out {
            flag("out", p.display().to_string());
        }
        flag(
            "operator",
            self.operator
                .to_possible_value()
                .expect("no skipped variants")
                .get_name()
                .to_string(),
        );
        flag("x-max", self.x_max.to_string());
        if let Some(s) = self.step {
            flag("step", s.to_string());
        }
        flag("bound-c", self.bound_c.to_string());
        flag("alpha-exp", self.alpha_exp.to_string());
        flag("dist-e", self.dist_e.to_string());
        if let Some(l) = self.lip {
            flag("lip", l.to_string());
        }
        if let Some(a) = self.rate_a {
            flag("rate-a", a.to_string());
        }
        v
    }
}

/// Run a resolved invocation and build its report.
pub fn execute(cfg: &CliConfig) -> Result<ExperimentReport, CliError> {
    let policy = cfg.policy();
    let schedule = || match cfg.beta {
        BetaChoice::Schedule(s) => s,
        BetaChoice::Fixed(_) => unreachable!("experiments resolve to a schedule"),
    };
    let report = match cfg.command {
        Command::Eval => eval_report(cfg, &policy)?,
        Command::Moments | Command::ValidateMoments => run_moment_validation(&point_grid(cfg)?, &policy)?,
        Command::Converge => {
            let Points::Domain(d) = &cfg.points else {
                return usage("`converge` takes --domain a,b,step");
            };
            run_convergence(&cfg.function()?, schedule(), &cfg.n_list, d, &policy)?
        }
        Command::Voronovskaya => run_voronovskaya(&cfg.function()?, schedule(), &cfg.n_list, cfg.x_list(), &policy)?,
        Command::FourthMoment => run_fourth_moment_limit(schedule(), &cfg.n_list, cfg.x_list())?,
        Command::Weighted => {
            let step = cfg.step.unwrap_or(0.1).min(cfg.x_max);
            run_weighted(&cfg.function()?, schedule(), &cfg.n_list, cfg.x_max, step, &policy)?
        }
        Command::Bounds => bounds_report(cfg, &policy)?,
    };
    Ok(report)
}

fn default_betas() -> Vec<BetaParam> {
    [0.0, 0.1, 0.5, 0.9]
        .iter()
        .map(|&b| BetaParam::new(b).expect("valid"))
        .collect()
}

fn point_grid(cfg: &CliConfig) -> Result<Vec<GridPoint>, CliError> {
    let mut grid = Vec::new();
    for &n in &cfg.n_list {
        for params in cfg.beta.params(n)? {
            for &x in cfg.x_list() {
                grid.push(GridPoint { params, x });
            }
        }
    }
    Ok(grid)
}

fn eval_report(cfg: &CliConfig, policy: &TruncationPolicy) -> Result<ExperimentReport, CliError> {
    let f = cfg.function()?;
    let (kind, label, force_zero) = match cfg.operator {
        Operator::P => (WeightKind::NewFamily, "eval:p", false),
        Operator::Jain => (WeightKind::Jain, "eval:jain", false),
        Operator::Szasz => (WeightKind::NewFamily, "eval:szasz", true),
    };
    let mut rows = Vec::new();
    for pt in point_grid(cfg)? {
        let params = if force_zero {
            OperatorParams::new(pt.params.n(), BetaParam::ZERO)?
        } else {
            pt.params
        };
        let sum = apply_sum(kind, &f, params, pt.x, policy)?;
        rows.push(ReportRow {
            experiment: label.into(),
            n: params.n(),
            beta: params.beta().value(),
            x: Location::Point(pt.x),
            measured: sum.value,
            reference: Some(f.eval(pt.x)),
            bound: None,
            residual_mass: sum.residual_mass,
        });
    }
    rows.dedup();
    Ok(ExperimentReport::new(rows))
}

/// Measured `|P_n f - f|` next to each bound that applies to `f`.
fn bounds_report(cfg: &CliConfig, policy: &TruncationPolicy) -> Result<ExperimentReport, CliError> {
    let f = cfg.function()?;
    let mut rows = Vec::new();
    let lip = cfg.lip.or(f.lipschitz());
    for params in cfg
        .n_list
        .iter()
        .map(|&n| cfg.beta.params(n))
        .collect::<crate::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
    {
        let n = params.n();
        let beta = params.beta().value();
        for &x in cfg.x_list() {
            let dev = deviation(&f, params, x, policy)?;
            let err = dev.value.abs();
            let inputs = BoundInputs {
                m_f: lip.unwrap_or(0.0),
                c: cfg.bound_c,
                alpha_exp: cfg.alpha_exp,
                dist_e: cfg.dist_e,
                ..BoundInputs::default()
            };
            let mut push = |name: &str, bound: f64| {
                rows.push(ReportRow {
                    experiment: name.into(),
                    n,
                    beta,
                    x: Location::Point(x),
                    measured: err,
                    reference: None,
                    bound: Some(bound),
                    residual_mass: dev.residual_mass,
                })
            };
            push(
                "bounds:local",
                local_approx_bound(&f, params, x, &inputs, cfg.step, policy)?,
            );
            if lip.is_some() {
                push("bounds:lipschitz", lipschitz_bound(&inputs, params, x)?);
            }
        }
        if f.growth().is_quadratic_class() {
            let a = cfg.rate_a.unwrap_or(1.0);
            let inputs = BoundInputs {
                m_f: f.growth_constant(),
                a,
                ..BoundInputs::default()
            };
            let grid = Domain::new(0.0, a, cfg.step.unwrap_or(a / 100.0).min(a))?.grid();
            let mut sup = 0.0f64;
            let mut residual = 0.0f64;
            for x in grid {
                let d = deviation(&f, params, x, policy)?;
                sup = sup.max(d.value.abs());
                residual = residual.max(d.residual_mass);
            }
            rows.push(ReportRow {
                experiment: "bounds:rate".into(),
                n,
                beta,
                x: Location::Interval(0.0, a),
                measured: sup,
                reference: None,
                bound: Some(rate_bound(&f, &inputs, params, None)?),
                residual_mass: residual,
            });
        }
    }
    Ok(ExperimentReport::new(rows))
}

/// Entry point for the executable; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match parse_args(argv) {
        Ok(inv) => inv,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    if inv.print_config {
        println!("{}", inv.config.to_argv().join(" "));
        return EXIT_OK;
    }
    let report = match execute(&inv.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match emit_report(&report, inv.config.format, inv.config.out.as_deref()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let target = inv
                .config
                .out
                .as_deref()
                .map_or("stdout".to_string(), |p| p.display().to_string());
            eprintln!("error: cannot write {target}: {e}");
            EXIT_IO
        }
    }
}
