//! Command-line front end.
//!
//! Settings come from an optional TOML file (`--config`) and are then
//! overridden by flags. Keys in the file mirror the long flag names:
//!
//! ```toml
//! spec = "randers-n3"       # fixture name or path to a .metric file
//! seed = 42
//! count = 10
//! format = "json"
//! out = "report.json"
//! [tol]
//! default = 1e-7
//! berwald = 1e-9
//! [domain]
//! x_box = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]
//! y_box = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]
//! eps_y = 0.1
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::classify::{classify_frames, compute_frames, Tolerances};
use crate::error::GeometryError;
use crate::fixtures::{fixture, fixture_names, load_fixture_file, Fixture, FixtureError};
use crate::identities::{run_identity_suite, synthetic_algebra_tests};
use crate::metric::{validate_homogeneity, HOMOGENEITY_LAMBDAS};
use crate::report;
use crate::sampling::{sample_points, ChartPoint};

pub const DEFAULT_COUNT: usize = 10;
/// Trials in the synthetic part of `verify`.
pub const SYNTHETIC_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Dump the geometric frame at each sample point.
    Tensors,
    /// Classify the metric against every special-space predicate.
    Classify,
    /// Run the identity suite and the synthetic algebra checks.
    Verify,
    /// List the built-in fixtures.
    ListMetrics,
}

#[derive(Debug, Parser)]
#[command(
    name = "finsler",
    version,
    about = "Numerical Finsler geometry: curvature, classification and identity checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Fixture name or path to a metric file.
    #[arg(long, global = true)]
    pub spec: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Tolerance override, `NAME=VALUE`; `default=VALUE` sets the fallback.
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    pub tol: Vec<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// TOML file with the same keys as the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    spec: Option<String>,
    seed: Option<u64>,
    count: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    #[serde(default)]
    tol: BTreeMap<String, f64>,
    domain: Option<DomainOverride>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainOverride {
    pub x_box: Option<Vec<(f64, f64)>>,
    pub y_box: Option<Vec<(f64, f64)>>,
    pub eps_y: Option<f64>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub spec: Option<String>,
    pub seed: Option<u64>,
    pub count: usize,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub domain: Option<DomainOverride>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::InvalidDomain(_)
            | GeometryError::PointDimension { .. }
            | GeometryError::DimensionTooSmall { .. }
            | GeometryError::NotHomogeneous { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn parse_tol(entry: &str) -> Result<(String, f64), CliError> {
    let (name, value) = entry
        .split_once('=')
        .ok_or_else(|| CliError::Input(format!("--tol expects NAME=VALUE, got `{entry}`")))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("--tol {name}: `{value}` is not a number")))?;
    Ok((name.trim().to_string(), v))
}

impl RunConfig {
    /// Merge the config file (if any) with flags; flags win.
    pub fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
        let file = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let mut tolerances = Tolerances::default();
        for (name, v) in &file.tol {
            tolerances.set(name, *v).map_err(CliError::Input)?;
        }
        for entry in &cli.tol {
            let (name, v) = parse_tol(entry)?;
            tolerances.set(&name, v).map_err(CliError::Input)?;
        }
        let count = cli.count.or(file.count).unwrap_or(DEFAULT_COUNT);
        if count == 0 {
            return Err(CliError::Input("--count must be at least 1".into()));
        }
        Ok(RunConfig {
            command: cli.command,
            spec: cli.spec.or(file.spec),
            seed: cli.seed.or(file.seed),
            count,
            tolerances,
            out: cli.out.or(file.out),
            format: cli.format.or(file.format).unwrap_or_default(),
            domain: file.domain,
        })
    }

    /// The metric and its domain with seed and domain overrides applied.
    pub fn load(&self) -> Result<Fixture, CliError> {
        let spec = self
            .spec
            .as_deref()
            .ok_or_else(|| CliError::Input("--spec is required".into()))?;
        let path = Path::new(spec);
        let mut f = if path.is_file() {
            load_fixture_file(path)?
        } else {
            fixture(spec)?
        };
        if let Some(seed) = self.seed {
            f.domain.seed = seed;
        }
        if let Some(d) = &self.domain {
            if let Some(x) = &d.x_box {
                f.domain.x_box = x.clone();
            }
            if let Some(y) = &d.y_box {
                f.domain.y_box = y.clone();
            }
            if let Some(e) = d.eps_y {
                f.domain.eps_y = e;
            }
        }
        Ok(f)
    }
}

/// Sample points and reject metrics that are not degree-1 homogeneous.
pub fn sample_validated(f: &Fixture, count: usize) -> Result<Vec<ChartPoint>, CliError> {
    let points = sample_points(&f.spec, &f.domain, count)?;
    let h = validate_homogeneity(&f.spec, &points, &HOMOGENEITY_LAMBDAS)?;
    if !h.passed {
        return Err(GeometryError::NotHomogeneous {
            max_rel_err: h.max_rel_err,
        }
        .into());
    }
    Ok(points)
}

/// Rendered report and the exit code it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.command == Command::ListMetrics {
        let fixtures: Vec<(String, Fixture)> = fixture_names()
            .into_iter()
            .map(|n| fixture(&n).map(|f| (n, f)))
            .collect::<Result<_, _>>()?;
        let output = match cfg.format {
            Format::Json => {
                let list: Vec<serde_json::Value> = fixtures
                    .iter()
                    .map(|(name, f)| serde_json::json!({"name": name, "dim": f.spec.dim(), "description": f.description}))
                    .collect();
                report::to_pretty(&serde_json::json!({ "metrics": list }))
            }
            Format::Text => fixtures
                .iter()
                .map(|(name, f)| format!("{name:<22} n={}  {}\n", f.spec.dim(), f.description))
                .collect(),
        };
        return Ok(Outcome {
            output,
            exit_code: 0,
        });
    }

    let f = cfg.load()?;
    let points = sample_validated(&f, cfg.count)?;
    let name = f.spec.name().to_string();
    let tol = &cfg.tolerances;
    let json = cfg.format == Format::Json;
    Ok(match cfg.command {
        Command::Tensors => {
            let frames = compute_frames(&f.spec, &points)?;
            let output = if json {
                report::to_pretty(&report::tensors_json(&name, &frames))
            } else {
                report::tensors_text(&name, &frames)
            };
            Outcome {
                output,
                exit_code: 0,
            }
        }
        Command::Classify => {
            let frames = compute_frames(&f.spec, &points)?;
            let rep = classify_frames(&name, &frames, tol);
            let output = if json {
                report::to_pretty(&report::classification_json(&rep, tol))
            } else {
                report::classification_text(&rep)
            };
            let exit_code = if rep.lattice_violations.is_empty() {
                0
            } else {
                1
            };
            Outcome { output, exit_code }
        }
        Command::Verify => {
            let rep = run_identity_suite(&f.spec, &points, tol)?;
            let synthetic = synthetic_algebra_tests(f.domain.seed, SYNTHETIC_TRIALS);
            let output = if json {
                report::to_pretty(&report::verification_json(&rep, &synthetic, tol))
            } else {
                report::verification_text(&rep, &synthetic)
            };
            let ok = rep.all_pass()
                && rep.classification.lattice_violations.is_empty()
                && synthetic.iter().all(|s| !s.verdict.fails());
            Outcome {
                output,
                exit_code: if ok { 0 } else { 1 },
            }
        }
        Command::ListMetrics => unreachable!("handled above"),
    })
}

/// Parse arguments, run, write the report and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::resolve(cli).and_then(|cfg| {
        let outcome = run(&cfg)?;
        match &cfg.out {
            Some(path) => fs::write(path, &outcome.output)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
            None => print!("{}", outcome.output),
        }
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("finsler: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        RunConfig::resolve(Cli::try_parse_from(args).unwrap()).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let c = cfg(&[
            "finsler",
            "classify",
            "--spec",
            "randers-n3",
            "--count",
            "3",
            "--tol",
            "berwald=1e-9",
            "--format",
            "text",
        ]);
        assert_eq!(c.count, 3);
        assert_eq!(c.format, Format::Text);
        assert_eq!(c.tolerances.get("berwald"), 1e-9);
        assert_eq!(c.tolerances.get("landsberg"), Tolerances::default().default);
    }

    #[test]
    fn malformed_tolerance_is_input_error() {
        let cli = Cli::try_parse_from(["finsler", "classify", "--tol", "berwald"]).unwrap();
        assert_eq!(RunConfig::resolve(cli).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn missing_spec_is_input_error() {
        assert_eq!(
            run(&cfg(&["finsler", "classify"])).unwrap_err().exit_code(),
            2
        );
    }
}
