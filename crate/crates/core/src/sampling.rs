//! Chart domains and deterministic sampling of the slit tangent bundle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derivatives::metric_matrix;
use crate::error::GeometryError;
use crate::metric::MetricSpec;

/// An evaluation site `(x, y)` with `y != 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ChartPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> ChartPoint {
        ChartPoint { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Same base point, direction scaled by `lambda`.
    pub fn scaled(&self, lambda: f64) -> ChartPoint {
        ChartPoint {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * lambda).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub x_box: Vec<(f64, f64)>,
    pub y_box: Vec<(f64, f64)>,
    pub eps_y: f64,
    pub seed: u64,
}

impl ChartDomain {
    /// Same interval on every axis.
    pub fn uniform(n: usize, x: (f64, f64), y: (f64, f64), eps_y: f64, seed: u64) -> ChartDomain {
        ChartDomain {
            x_box: vec![x; n],
            y_box: vec![y; n],
            eps_y,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.x_box.len()
    }

    pub fn with_seed(mut self, seed: u64) -> ChartDomain {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.x_box.len() != self.y_box.len() {
            return Err(GeometryError::InvalidDomain(
                "x-box and y-box dimensions differ".into(),
            ));
        }
        if self.eps_y.is_nan() || self.eps_y <= 0.0 {
            return Err(GeometryError::InvalidDomain(format!(
                "eps_y must be positive, got {}",
                self.eps_y
            )));
        }
        for (lo, hi) in self.x_box.iter().chain(&self.y_box) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GeometryError::InvalidDomain(format!(
                    "empty interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Number of draws after which a low acceptance rate aborts sampling.
pub const EXHAUSTION_WINDOW: usize = 10_000;
/// Minimum acceptance rate once the window is reached.
pub const MIN_ACCEPTANCE: f64 = 0.01;
/// `|det g| < DET_FLOOR * (max |g_ij|)^n` counts as degenerate.
pub const DET_FLOOR: f64 = 1e-10;

fn draw(rng: &mut ChaCha8Rng, bx: &[(f64, f64)]) -> Vec<f64> {
    bx.iter()
        .map(|&(lo, hi)| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        })
        .collect()
}

/// Whether a candidate point is usable.
fn admissible(spec: &MetricSpec, p: &ChartPoint, eps_y: f64) -> bool {
    if p.y_norm() < eps_y {
        return false;
    }
    match spec.randers_norm_sq(&p.x) {
        Ok(Some(b2)) if b2.is_nan() || b2 >= 1.0 => return false,
        Err(_) => return false,
        _ => {}
    }
    match spec.eval_l(p) {
        Ok(l) if l.is_finite() && l > 0.0 => {}
        _ => return false,
    }
    let Ok(g) = metric_matrix(spec, p) else {
        return false;
    };
    let scale = g.amax();
    let det = g.determinant();
    // Finsler metrics have positive-definite g
    det.is_finite()
        && det.abs() >= DET_FLOOR * scale.powi(spec.dim() as i32)
        && g.cholesky().is_some()
}

/// Draw `count` admissible points, deterministically for a fixed seed.
pub fn sample_points(
    spec: &MetricSpec,
    domain: &ChartDomain,
    count: usize,
) -> Result<Vec<ChartPoint>, GeometryError> {
    domain.validate()?;
    if domain.dim() != spec.dim() {
        return Err(GeometryError::PointDimension {
            expected: spec.dim(),
            got: domain.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(domain.seed);
    let mut out = Vec::with_capacity(count);
    let mut drawn = 0usize;
    let hard_cap = EXHAUSTION_WINDOW.max(count.saturating_mul(1000));
    while out.len() < count {
        if drawn >= EXHAUSTION_WINDOW
            && ((out.len() as f64) < MIN_ACCEPTANCE * drawn as f64 || drawn >= hard_cap)
        {
            return Err(GeometryError::DomainExhausted {
                accepted: out.len(),
                drawn,
            });
        }
        drawn += 1;
        let x = draw(&mut rng, &domain.x_box);
        let y = draw(&mut rng, &domain.y_box);
        let p = ChartPoint::new(x, y);
        if admissible(spec, &p, domain.eps_y) {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_metric;

    fn euclid() -> MetricSpec {
        parse_metric("dim 2; L = sqrt(y1^2 + y2^2)").unwrap()
    }

    #[test]
    fn deterministic_for_seed() {
        let d = ChartDomain::uniform(2, (-1.0, 1.0), (-1.0, 1.0), 0.1, 42);
        let a = sample_points(&euclid(), &d, 5).unwrap();
        let b = sample_points(&euclid(), &d, 5).unwrap();
        assert_eq!(a, b);
        let c = sample_points(&euclid(), &d.clone().with_seed(43), 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn respects_min_radius() {
        let d = ChartDomain::uniform(2, (0.0, 0.0), (-0.3, 0.3), 0.1, 1);
        for p in sample_points(&euclid(), &d, 200).unwrap() {
            assert!(p.y_norm() >= 0.1);
        }
    }

    #[test]
    fn non_convex_randers_exhausts() {
        let spec = parse_metric("dim 3; randers; a = identity; b1 = 1.5").unwrap();
        let d = ChartDomain::uniform(3, (-1.0, 1.0), (-1.0, 1.0), 0.1, 3);
        assert!(matches!(
            sample_points(&spec, &d, 5),
            Err(GeometryError::DomainExhausted { accepted: 0, .. })
        ));
    }

    #[test]
    fn invalid_domain() {
        let d = ChartDomain::uniform(2, (1.0, -1.0), (-1.0, 1.0), 0.1, 1);
        assert!(matches!(
            sample_points(&euclid(), &d, 1),
            Err(GeometryError::InvalidDomain(_))
        ));
        let d = ChartDomain::uniform(2, (-1.0, 1.0), (-1.0, 1.0), 0.0, 1);
        assert!(matches!(
            sample_points(&euclid(), &d, 1),
            Err(GeometryError::InvalidDomain(_))
        ));
    }
}
