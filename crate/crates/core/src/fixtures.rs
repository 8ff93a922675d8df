//! Built-in metric zoo with default sampling domains.
//!
//! `FINSLER_FIXTURES` may name a directory of `<name>.metric` files (metric
//! text) with optional `<name>.domain.toml` companions; those shadow or extend
//! the built-in set.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::error::ParseError;
use crate::metric::MetricSpec;
use crate::parser::parse_metric;
use crate::sampling::ChartDomain;

pub const FIXTURES_ENV: &str = "FINSLER_FIXTURES";

/// Names listed by `finsler list-metrics`, in display order.
pub const FIXTURE_NAMES: [&str; 6] = [
    "euclidean-n2",
    "sphere-n2",
    "hyperbolic-n2",
    "randers-n3",
    "quartic-minkowski-n3",
    "randers-curved-n3",
];

/// Additional built-ins used by the identity suite.
pub const EXTRA_FIXTURE_NAMES: [&str; 2] = ["quartic-perturbed-n3", "hyperbolic-n4"];

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub spec: MetricSpec,
    pub domain: ChartDomain,
    pub description: String,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    Unknown(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{path}: {source}")]
    Domain {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
}

struct Builtin {
    name: &'static str,
    description: &'static str,
    text: &'static str,
    x: &'static [(f64, f64)],
    y: &'static [(f64, f64)],
}

const UNIT2: &[(f64, f64)] = &[(-1.0, 1.0); 2];
const UNIT3: &[(f64, f64)] = &[(-1.0, 1.0); 3];
const POSITIVE3: &[(f64, f64)] = &[(0.5, 1.5); 3];

const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "euclidean-n2",
        description: "flat Euclidean norm of the plane",
        text: "dim 2\nname \"euclidean-n2\"\nL = sqrt(y1^2 + y2^2)\n",
        x: UNIT2,
        y: UNIT2,
    },
    Builtin {
        name: "sphere-n2",
        description: "unit round sphere in polar coordinates",
        text: "dim 2\nname \"sphere-n2\"\nriemannian\na11 = 1\na22 = sin(x1)^2\na12 = 0\n",
        x: &[(0.3, 2.8), (-1.0, 1.0)],
        y: UNIT2,
    },
    Builtin {
        name: "hyperbolic-n2",
        description: "upper half-plane model of curvature -1",
        text: "dim 2\nname \"hyperbolic-n2\"\nriemannian\na11 = 1 / x2^2\na22 = 1 / x2^2\n",
        x: &[(-1.0, 1.0), (0.5, 2.0)],
        y: UNIT2,
    },
    Builtin {
        name: "randers-n3",
        description: "Randers metric with flat a and constant b",
        text: "dim 3\nname \"randers-n3\"\nranders\na = identity\nb1 = 0.5\nb2 = 0\nb3 = 0\n",
        x: UNIT3,
        y: UNIT3,
    },
    Builtin {
        name: "quartic-minkowski-n3",
        description: "Minkowski norm (y1^4 + y2^4 + y3^4)^(1/4)",
        text: "dim 3\nname \"quartic-minkowski-n3\"\nminkowski\nL = (y1^4 + y2^4 + y3^4)^0.25\n",
        x: UNIT3,
        y: POSITIVE3,
    },
    Builtin {
        name: "randers-curved-n3",
        description: "Randers metric with position-dependent a and b",
        text: "dim 3\nname \"randers-curved-n3\"\nranders\n\
               a11 = 1 + 0.2 * x2^2\na22 = exp(0.3 * x1)\na33 = 1 + 0.1 * x1 * x3\na12 = 0.1 * x3\na13 = 0\na23 = 0\n\
               b1 = 0.2 * sin(x2)\nb2 = 0.1 * x1\nb3 = 0.15\n",
        x: UNIT3,
        y: UNIT3,
    },
    Builtin {
        name: "quartic-perturbed-n3",
        description: "quartic norm with position-dependent mixed terms",
        text: "dim 3\nname \"quartic-perturbed-n3\"\n\
               L = (y1^4 + y2^4 + y3^4 + 0.3 * x1 * y1^2 * y2^2 + 0.2 * x2 * y2 * y3^3)^0.25\n",
        x: UNIT3,
        y: POSITIVE3,
    },
    Builtin {
        name: "hyperbolic-n4",
        description: "upper half-space model of curvature -1 in dimension 4",
        text: "dim 4\nname \"hyperbolic-n4\"\nriemannian\n\
               a11 = 1 / x4^2\na22 = 1 / x4^2\na33 = 1 / x4^2\na44 = 1 / x4^2\n",
        x: &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (0.5, 2.0)],
        y: &[(-1.0, 1.0); 4],
    },
];

/// Default minimum `|y|` for built-in domains.
pub const DEFAULT_EPS_Y: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 42;

fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

fn from_builtin(b: &Builtin) -> Fixture {
    let spec = parse_metric(b.text).expect("built-in fixture parses");
    Fixture {
        spec,
        domain: ChartDomain {
            x_box: b.x.to_vec(),
            y_box: b.y.to_vec(),
            eps_y: DEFAULT_EPS_Y,
            seed: DEFAULT_SEED,
        },
        description: b.description.to_string(),
    }
}

#[derive(Deserialize)]
struct DomainFile {
    x_box: Vec<(f64, f64)>,
    y_box: Vec<(f64, f64)>,
    #[serde(default = "default_eps")]
    eps_y: f64,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS_Y
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn read(path: &Path) -> Result<String, FixtureError> {
    fs::read_to_string(path).map_err(|source| FixtureError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a fixture from a `.metric` file, with its `.domain.toml` if present.
pub fn load_fixture_file(path: &Path) -> Result<Fixture, FixtureError> {
    let text = read(path)?;
    let spec = parse_metric(&text).map_err(|source| FixtureError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("metric")
        .to_string();
    let spec = if spec.name().is_empty() {
        spec.with_name(stem.clone())
    } else {
        spec
    };
    let domain_path = path.with_file_name(format!("{stem}.domain.toml"));
    let domain = if domain_path.exists() {
        let d: DomainFile =
            toml::from_str(&read(&domain_path)?).map_err(|source| FixtureError::Domain {
                path: domain_path.clone(),
                source,
            })?;
        ChartDomain {
            x_box: d.x_box,
            y_box: d.y_box,
            eps_y: d.eps_y,
            seed: d.seed,
        }
    } else {
        ChartDomain::uniform(
            spec.dim(),
            (-1.0, 1.0),
            (-1.0, 1.0),
            DEFAULT_EPS_Y,
            DEFAULT_SEED,
        )
    };
    Ok(Fixture {
        spec,
        domain,
        description: format!("loaded from {}", path.display()),
    })
}

fn override_dir() -> Option<PathBuf> {
    std::env::var_os(FIXTURES_ENV)
        .map(PathBuf::from)
        .filter(|p| p.is_dir())
}

/// Look up a fixture by name, preferring the `FINSLER_FIXTURES` directory.
pub fn fixture(name: &str) -> Result<Fixture, FixtureError> {
    if let Some(dir) = override_dir() {
        let path = dir.join(format!("{name}.metric"));
        if path.exists() {
            return load_fixture_file(&path);
        }
    }
    builtin(name)
        .map(from_builtin)
        .ok_or_else(|| FixtureError::Unknown(name.to_string()))
}

/// Every available fixture name: the listed zoo, the extras, then any
/// additional files from `FINSLER_FIXTURES`, sorted.
pub fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = FIXTURE_NAMES
        .iter()
        .chain(&EXTRA_FIXTURE_NAMES)
        .map(|s| s.to_string())
        .collect();
    if let Some(dir) = override_dir() {
        let mut extra: Vec<String> = fs::read_dir(dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|e| {
                let p = e.path();
                (p.extension()? == "metric").then(|| p.file_stem()?.to_str().map(str::to_string))?
            })
            .filter(|n| !names.contains(n))
            .collect();
        extra.sort();
        names.extend(extra);
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_parse_with_matching_names() {
        for b in BUILTINS {
            let f = from_builtin(b);
            assert_eq!(f.spec.name(), b.name);
            assert_eq!(f.domain.dim(), f.spec.dim());
            f.domain.validate().unwrap();
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            fixture("no-such-metric"),
            Err(FixtureError::Unknown(_))
        ));
    }
}
