//! Finsler metrics: families, the induced `L` and `E = L²/2`, and load-time checks.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{EvalError, GeometryError};
use crate::expr::{Expr, Func};
use crate::sampling::ChartPoint;

/// How `L(x, y)` is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricVariant {
    /// `L = sqrt(a_ij(x) y^i y^j)`.
    Riemannian { a: Vec<Vec<Expr>> },
    /// `L = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i`.
    Randers { a: Vec<Vec<Expr>>, b: Vec<Expr> },
    /// A norm depending on `y` only.
    MinkowskiNorm(Expr),
    /// Arbitrary `L(x, y)`.
    Custom(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    dim: usize,
    name: String,
    variant: MetricVariant,
}

fn quadratic_form(a: &[Vec<Expr>]) -> Expr {
    let mut terms = Vec::new();
    for (i, row) in a.iter().enumerate() {
        for (j, aij) in row.iter().enumerate().skip(i) {
            if aij.is_zero() {
                continue;
            }
            let mono = if i == j {
                Expr::pow(Expr::y(i), 2.0)
            } else {
                Expr::mul(Expr::num(2.0), Expr::mul(Expr::y(i), Expr::y(j)))
            };
            terms.push(match aij {
                Expr::Num(v) if *v == 1.0 => mono,
                coef => Expr::mul(coef.clone(), mono),
            });
        }
    }
    Expr::sum(terms)
}

fn linear_form(b: &[Expr]) -> Expr {
    let terms = b
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| Expr::mul(c.clone(), Expr::y(i)))
        .collect();
    Expr::sum(terms)
}

impl MetricSpec {
    /// Build a spec; the caller guarantees component shapes match `dim`.
    pub fn new(dim: usize, name: impl Into<String>, variant: MetricVariant) -> MetricSpec {
        MetricSpec {
            dim,
            name: name.into(),
            variant,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variant(&self) -> &MetricVariant {
        &self.variant
    }

    pub fn with_name(mut self, name: impl Into<String>) -> MetricSpec {
        self.name = name.into();
        self
    }

    /// `L(x, y)` as an expression.
    pub fn lagrangian(&self) -> Expr {
        match &self.variant {
            MetricVariant::Riemannian { a } => Expr::call(Func::Sqrt, quadratic_form(a)),
            MetricVariant::Randers { a, b } => {
                let alpha = Expr::call(Func::Sqrt, quadratic_form(a));
                if b.iter().all(Expr::is_zero) {
                    alpha
                } else {
                    Expr::add(alpha, linear_form(b))
                }
            }
            MetricVariant::MinkowskiNorm(l) | MetricVariant::Custom(l) => l.clone(),
        }
    }

    /// The energy `E = L²/2`. For Riemannian metrics the square root is
    /// avoided so `E` is a polynomial in `y`.
    pub fn energy(&self) -> Expr {
        match &self.variant {
            MetricVariant::Riemannian { a } => Expr::mul(Expr::num(0.5), quadratic_form(a)),
            _ => Expr::mul(Expr::num(0.5), Expr::pow(self.lagrangian(), 2.0)),
        }
    }

    /// `a^{ij} b_i b_j` at `x` for Randers metrics, `None` otherwise.
    pub fn randers_norm_sq(&self, x: &[f64]) -> Result<Option<f64>, EvalError> {
        let MetricVariant::Randers { a, b } = &self.variant else {
            return Ok(None);
        };
        let n = self.dim;
        let mut am = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                am[(i, j)] = a[i][j].eval(x, &[])?;
            }
        }
        let bv = nalgebra::DVector::from_iterator(
            n,
            b.iter()
                .map(|e| e.eval(x, &[]))
                .collect::<Result<Vec<_>, _>>()?,
        );
        let Some(ainv) = am.try_inverse() else {
            return Ok(Some(f64::INFINITY));
        };
        Ok(Some(bv.dot(&(ainv * &bv))))
    }

    /// Evaluate `L` at a point.
    pub fn eval_l(&self, p: &ChartPoint) -> Result<f64, EvalError> {
        self.lagrangian().eval(&p.x, &p.y)
    }
}

/// Outcome of [`validate_homogeneity`].
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneityReport {
    /// `(point index, lambda, relative error)` for every probe.
    pub entries: Vec<(usize, f64, f64)>,
    pub max_rel_err: f64,
    pub passed: bool,
}

pub const HOMOGENEITY_LAMBDAS: [f64; 3] = [0.5, 2.0, 7.3];
pub const HOMOGENEITY_TOL: f64 = 1e-10;

/// Check `L(x, λy) = λ L(x, y)` at every point and scale.
pub fn validate_homogeneity(
    spec: &MetricSpec,
    points: &[ChartPoint],
    lambdas: &[f64],
) -> Result<HomogeneityReport, GeometryError> {
    let l = spec.lagrangian();
    let mut entries = Vec::with_capacity(points.len() * lambdas.len());
    let mut max_rel_err: f64 = 0.0;
    for (k, p) in points.iter().enumerate() {
        if p.x.len() != spec.dim || p.y.len() != spec.dim {
            return Err(GeometryError::PointDimension {
                expected: spec.dim,
                got: p.x.len().max(p.y.len()),
            });
        }
        let base = l.eval(&p.x, &p.y)?;
        for &lam in lambdas {
            if lam <= 0.0 {
                return Err(GeometryError::InvalidDomain(format!(
                    "lambda must be positive, got {lam}"
                )));
            }
            let scaled_y: Vec<f64> = p.y.iter().map(|v| lam * v).collect();
            let scaled = l.eval(&p.x, &scaled_y)?;
            let target = lam * base;
            let diff = (scaled - target).abs();
            let rel = if diff == 0.0 {
                0.0
            } else if target == 0.0 {
                f64::INFINITY
            } else {
                diff / target.abs()
            };
            max_rel_err = max_rel_err.max(rel);
            entries.push((k, lam, rel));
        }
    }
    Ok(HomogeneityReport {
        entries,
        max_rel_err,
        passed: max_rel_err < HOMOGENEITY_TOL,
    })
}

fn component_name(prefix: char, idx: &[usize], n: usize) -> String {
    let parts: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    if n <= 9 {
        format!("{prefix}{}", parts.concat())
    } else {
        format!("{prefix}{}", parts.join("_"))
    }
}

/// Prints the metric-spec text form; `parse_metric` reads it back unchanged.
impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim;
        writeln!(f, "dim {n}")?;
        if !self.name.is_empty() {
            writeln!(f, "name \"{}\"", self.name)?;
        }
        let write_a = |f: &mut fmt::Formatter<'_>, a: &[Vec<Expr>]| -> fmt::Result {
            for (i, row) in a.iter().enumerate() {
                for (j, aij) in row.iter().enumerate().skip(i) {
                    writeln!(f, "{} = {}", component_name('a', &[i, j], n), aij)?;
                }
            }
            Ok(())
        };
        match &self.variant {
            MetricVariant::Riemannian { a } => {
                writeln!(f, "riemannian")?;
                write_a(f, a)
            }
            MetricVariant::Randers { a, b } => {
                writeln!(f, "randers")?;
                write_a(f, a)?;
                for (i, bi) in b.iter().enumerate() {
                    writeln!(f, "{} = {}", component_name('b', &[i], n), bi)?;
                }
                Ok(())
            }
            MetricVariant::MinkowskiNorm(l) => {
                writeln!(f, "minkowski")?;
                writeln!(f, "L = {l}")
            }
            MetricVariant::Custom(l) => writeln!(f, "L = {l}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_metric;

    fn pt(x: &[f64], y: &[f64]) -> ChartPoint {
        ChartPoint::new(x.to_vec(), y.to_vec())
    }

    #[test]
    fn euclidean_is_exactly_homogeneous() {
        let spec = parse_metric("dim 2; L = sqrt(y1^2 + y2^2)").unwrap();
        let rep = validate_homogeneity(&spec, &[pt(&[0.0, 0.0], &[0.3, 0.4])], &[2.0]).unwrap();
        assert_eq!(rep.max_rel_err, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn randers_homogeneous() {
        let spec = parse_metric("dim 2; L = sqrt(y1^2 + y2^2) + 0.5 * y1").unwrap();
        let rep = validate_homogeneity(&spec, &[pt(&[0.0, 0.0], &[0.7, -1.1])], &[3.0]).unwrap();
        assert!(rep.max_rel_err < 1e-12);
    }

    #[test]
    fn degree_two_fails() {
        let spec = parse_metric("dim 2; L = y1^2").unwrap();
        let rep = validate_homogeneity(&spec, &[pt(&[0.0, 0.0], &[1.0, 0.0])], &[2.0]).unwrap();
        assert_eq!(rep.max_rel_err, 1.0);
        assert!(!rep.passed);
    }

    #[test]
    fn riemannian_energy_is_polynomial() {
        let spec = parse_metric("dim 2; riemannian; a11 = 1; a22 = sin(x1)^2; a12 = 0").unwrap();
        let (x, y) = ([0.7, 0.3], [1.0, 2.0]);
        let e = spec.energy().eval(&x, &y).unwrap();
        let expect = 0.5 * (1.0 + 0.7f64.sin().powi(2) * 4.0);
        assert!((e - expect).abs() < 1e-15);
        let l = spec.lagrangian().eval(&x, &y).unwrap();
        assert!((0.5 * l * l - e).abs() < 1e-14);
    }

    #[test]
    fn randers_norm() {
        let spec = parse_metric("dim 3; randers; a = identity; b1 = 0.5").unwrap();
        let v = spec.randers_norm_sq(&[0.0; 3]).unwrap().unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "dim 2; name \"s\"; riemannian; a11 = 1; a22 = sin(x1)^2",
            "dim 3; minkowski; L = (y1^4 + y2^4 + y3^4)^0.25",
            "dim 2; L = exp(0.2 * x1) * sqrt(y1^2 + y2^2)",
        ] {
            let spec = parse_metric(text).unwrap();
            assert_eq!(parse_metric(&spec.to_string()).unwrap(), spec);
        }
    }
}
