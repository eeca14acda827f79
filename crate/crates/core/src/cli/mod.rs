//! Command-line front end: one instance file per invocation, JSON or CSV on
//! stdout, a single diagnostic line on stderr for failures.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bounds::{
    bounds_report, gamma_sweep, write_sweep_csv, Boundary, BoundaryKind, BoundsError, BoundsReport, ProbabilityValue,
    SweepFlag,
};
use crate::cone::{project_additive, ConeError};
use crate::pl_fn::{AdditiveFn, PlfError};
use crate::simulate::{
    girsanov_estimator, noncross_mc, oracle_additive2_const, oracle_drifted_noncross, MCEstimate, SimConfig, SimError,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "AWF_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<PlfError> for CliError {
    fn from(e: PlfError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Estimator(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::MemoryExhausted { .. } | SimError::QuadratureFailed(_) => CliError::Runtime(e.to_string()),
            SimError::Bounds(b) => b.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ConeError> for CliError {
    fn from(e: ConeError) -> Self {
        match e {
            ConeError::Plf(p) => p.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// A single scale factor or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl GammaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GammaSpec::One(g) => vec![*g],
            GammaSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub trend: AdditiveFn<f64>,
    pub boundary: Boundary<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let inst: InstanceFile = serde_json::from_str(text).map_err(parse_error)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let d = self.trend.dim();
        if let Some(bd) = self.boundary.dim() {
            if bd != d {
                return Err(CliError::Usage(format!(
                    "invalid instance: boundary has dimension {bd}, trend has {d}"
                )));
            }
        }
        if let Some(g) = &self.gamma {
            if let Some(bad) = g.values().into_iter().find(|g| !(g.is_finite() && *g > 0.0)) {
                return Err(CliError::Usage(format!("invalid instance: gamma must be positive, got {bad}")));
            }
        }
        if let Some(sim) = &self.sim {
            sim.validate()?;
            if sim.d != 0 && sim.d != d {
                return Err(CliError::Usage(format!(
                    "invalid instance: sim.d is {}, trend has dimension {d}",
                    sim.d
                )));
            }
        }
        Ok(())
    }

    fn gammas(&self) -> Vec<f64> {
        self.gamma.as_ref().map_or_else(|| vec![1.0], GammaSpec::values)
    }

    fn sim(&self, why: &str) -> Result<&SimConfig, CliError> {
        self.sim
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("{why} needs a \"sim\" section in the instance file")))
    }

    /// Common horizon of the field: `sim.horizon` if set, else the largest
    /// horizon appearing in the trend or boundary.
    fn horizon(&self) -> f64 {
        self.sim
            .as_ref()
            .and_then(|s| s.horizon)
            .unwrap_or_else(|| self.trend.horizon().max(self.boundary.horizon()))
    }
}

fn parse_error(e: serde_json::Error) -> CliError {
    let full = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    let msg = full.strip_suffix(&suffix).unwrap_or(&full);
    CliError::Usage(format!("parse error at line {} column {}: {msg}", e.line(), e.column()))
}

/// Where a probability input to the bounds comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbSource {
    Value(f64),
    Mc,
    Oracle,
}

impl FromStr for ProbSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mc" => Ok(ProbSource::Mc),
            "oracle" => Ok(ProbSource::Oracle),
            _ => s
                .parse::<f64>()
                .map(ProbSource::Value)
                .map_err(|_| format!("expected a probability, \"mc\" or \"oracle\", got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMethod {
    Plain,
    Girsanov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepEstimator {
    Mc,
    Girsanov,
    Oracle,
}

#[derive(Debug, Parser)]
#[command(name = "awf", version, about = "Non-crossing probabilities of additive Wiener fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split the trend into its concave majorant and polar part.
    Project { instance: PathBuf },
    /// Report the analytic bounds for each gamma in the instance.
    Bounds {
        instance: PathBuf,
        /// Driftless probability: a value in (0,1), `mc` or `oracle`.
        #[arg(long)]
        p0: ProbSource,
        /// Probability for the polar part: a value in (0,1], `mc` or `oracle`.
        #[arg(long = "p-polar")]
        p_polar: ProbSource,
    },
    /// Monte Carlo estimate of the non-crossing probability.
    Simulate {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SimMethod::Plain)]
        method: SimMethod,
    },
    /// CSV of log-probabilities against the large-scale asymptote.
    Sweep {
        instance: PathBuf,
        /// Comma-separated increasing gamma values; defaults to the instance list.
        #[arg(long)]
        gammas: Option<String>,
        #[arg(long, value_enum, default_value_t = SweepEstimator::Mc)]
        estimator: SweepEstimator,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, A>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let mut warnings = Vec::new();
    let result = with_thread_limit(|| execute(&cli.command, &mut warnings));
    let _ = err.write_all(&warnings);
    match result.and_then(|text| out.write_all(text.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()))) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

fn with_thread_limit<R: Send>(job: impl FnOnce() -> Result<R, CliError> + Send) -> Result<R, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => job(),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            pool.install(job)
        }
    }
}

fn execute(cmd: &Command, err: &mut Vec<u8>) -> Result<String, CliError> {
    match cmd {
        Command::Project { instance } => cmd_project(&InstanceFile::load(instance)?),
        Command::Bounds { instance, p0, p_polar } => cmd_bounds(&InstanceFile::load(instance)?, *p0, *p_polar),
        Command::Simulate { instance, method } => cmd_simulate(&InstanceFile::load(instance)?, *method),
        Command::Sweep {
            instance,
            gammas,
            estimator,
        } => {
            let inst = InstanceFile::load(instance)?;
            let gammas = match gammas {
                Some(list) => parse_gammas(list)?,
                None => inst
                    .gamma
                    .as_ref()
                    .map(GammaSpec::values)
                    .ok_or_else(|| CliError::Usage("sweep needs --gammas or a gamma list in the instance".into()))?,
            };
            cmd_sweep(&inst, &gammas, *estimator, err)
        }
    }
}

pub fn parse_gammas(list: &str) -> Result<Vec<f64>, CliError> {
    let gammas = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid gamma {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if gammas.is_empty() {
        return Err(CliError::Usage("gamma list is empty".into()));
    }
    Ok(gammas)
}

fn to_json<S: Serialize>(value: &S) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn one_or_many<S: Serialize>(mut items: Vec<S>) -> Result<String, CliError> {
    if items.len() == 1 {
        to_json(&items.remove(0))
    } else {
        to_json(&items)
    }
}

pub fn cmd_project(inst: &InstanceFile) -> Result<String, CliError> {
    to_json(&project_additive(&inst.trend))
}

pub fn cmd_bounds(inst: &InstanceFile, p0: ProbSource, p_polar: ProbSource) -> Result<String, CliError> {
    if let ProbSource::Value(v) = p0 {
        if !(v > 0.0 && v < 1.0) {
            return Err(CliError::Usage(format!("--p0 must lie in (0, 1), got {v}")));
        }
    }
    if let ProbSource::Value(v) = p_polar {
        if !(v > 0.0 && v <= 1.0) {
            return Err(CliError::Usage(format!("--p-polar must lie in (0, 1], got {v}")));
        }
    }
    if p0 == ProbSource::Mc || p_polar == ProbSource::Mc {
        inst.sim("a Monte Carlo probability")?;
    }
    let zero = AdditiveFn::zero(inst.trend.dim(), inst.trend.horizon())?;
    let p0_value = resolve_probability(inst, &zero, p0, "P0")?;
    let mut reports: Vec<BoundsReport<f64>> = Vec::new();
    for gamma in inst.gammas() {
        let polar = project_additive(&inst.trend.scale(gamma)?).polar;
        let pp = resolve_probability(inst, &polar, p_polar, "polar probability")?;
        reports.push(bounds_report(&inst.trend, &inst.boundary, gamma, p0_value.clone(), pp)?);
    }
    one_or_many(reports)
}

fn resolve_probability(
    inst: &InstanceFile,
    trend: &AdditiveFn<f64>,
    source: ProbSource,
    what: &str,
) -> Result<ProbabilityValue, CliError> {
    let value = match source {
        ProbSource::Value(value) => return Ok(ProbabilityValue::Given { value }),
        ProbSource::Oracle => ProbabilityValue::Oracle {
            value: oracle_probability(trend, &inst.boundary, inst.horizon())?,
        },
        ProbSource::Mc => ProbabilityValue::MonteCarlo(noncross_mc(trend, &inst.boundary, inst.sim("--p0 mc")?)?),
    };
    let v = value.value();
    if v <= 0.0 {
        return Err(CliError::Runtime(format!("{what} evaluated to {v}; increase n_paths or supply a value")));
    }
    Ok(value)
}

/// Closed-form or quadrature probability, available for a constant boundary
/// with either `d = 1` and a linear trend over the whole horizon, or `d = 2`
/// and a zero trend.
pub fn oracle_probability(f: &AdditiveFn<f64>, u: &Boundary<f64>, horizon: f64) -> Result<f64, CliError> {
    let unavailable = || {
        CliError::Usage(
            "oracle needs a constant boundary with d = 1 and a linear trend, or d = 2 and a zero trend".into(),
        )
    };
    let c = match u.kind() {
        BoundaryKind::Constant { c } => *c,
        _ => return Err(unavailable()),
    };
    if c.is_infinite() {
        return Ok(1.0);
    }
    match f.dim() {
        1 => {
            let drift = linear_slope(f, horizon).ok_or_else(unavailable)?;
            Ok(oracle_drifted_noncross(c, drift, horizon)?)
        }
        2 if f.is_zero() => Ok(oracle_additive2_const(c, horizon, horizon)?),
        _ => Err(unavailable()),
    }
}

fn linear_slope(f: &AdditiveFn<f64>, horizon: f64) -> Option<f64> {
    let g = f.component(0);
    if g.is_zero() {
        return Some(0.0);
    }
    if g.horizon() != horizon {
        return None;
    }
    let slopes = g.cell_slopes();
    let s = slopes[0];
    slopes
        .iter()
        .all(|x| (x - s).abs() <= 1e-12 * s.abs().max(1.0))
        .then_some(s)
}

pub fn cmd_simulate(inst: &InstanceFile, method: SimMethod) -> Result<String, CliError> {
    let sim = inst.sim("simulate")?;
    let mut out: Vec<MCEstimate> = Vec::new();
    for gamma in inst.gammas() {
        let f = inst.trend.scale(gamma)?;
        out.push(match method {
            SimMethod::Plain => noncross_mc(&f, &inst.boundary, sim)?,
            SimMethod::Girsanov => girsanov_estimator(&f, &inst.boundary, sim)?,
        });
    }
    one_or_many(out)
}

pub fn cmd_sweep(
    inst: &InstanceFile,
    gammas: &[f64],
    estimator: SweepEstimator,
    err: &mut dyn Write,
) -> Result<String, CliError> {
    let u = &inst.boundary;
    let rows = match estimator {
        SweepEstimator::Oracle => {
            let horizon = inst.horizon();
            oracle_probability(&inst.trend, u, horizon)?;
            let est = |g: &AdditiveFn<f64>, u: &Boundary<f64>| {
                oracle_probability(g, u, horizon)
                    .map(|p| (p, 0.0))
                    .map_err(|e| BoundsError::Estimator(e.to_string()))
            };
            gamma_sweep(&inst.trend, u, gammas, &est)?
        }
        SweepEstimator::Mc | SweepEstimator::Girsanov => {
            let sim = inst.sim("a Monte Carlo sweep")?;
            let girsanov = estimator == SweepEstimator::Girsanov;
            let est = |g: &AdditiveFn<f64>, u: &Boundary<f64>| {
                let r = if girsanov {
                    girsanov_estimator(g, u, sim)
                } else {
                    noncross_mc(g, u, sim)
                };
                r.map(|e| (e.p_hat, e.stderr))
                    .map_err(|e| BoundsError::Estimator(e.to_string()))
            };
            gamma_sweep(&inst.trend, u, gammas, &est)?
        }
    };
    for r in rows.iter().filter(|r| r.flag == SweepFlag::Underflow) {
        let _ = writeln!(
            err,
            "warning: gamma={}: estimate is zero (underflow); use the oracle or girsanov estimator",
            r.gamma
        );
    }
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| CliError::Runtime(e.to_string()))
}
