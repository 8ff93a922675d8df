//! Derivative tables at a point and the finite-difference oracle.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{EvalError, JetError};
use crate::expr::{Expr, Var};
use crate::jet::{JetAlgebra, JetSpace};
use crate::metric::MetricSpec;
use crate::sampling::ChartPoint;

/// Largest x-order a [`JetTable`] may hold.
pub const MAX_X_ORDER: usize = 2;
/// Largest total order a [`JetTable`] may hold.
pub const MAX_TOTAL_ORDER: usize = 4;

/// Orders of differentiation in `x` (`alpha`) and `y` (`beta`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    pub alpha: Vec<u8>,
    pub beta: Vec<u8>,
}

impl MultiIndex {
    pub fn zero(n: usize) -> MultiIndex {
        MultiIndex {
            alpha: vec![0; n],
            beta: vec![0; n],
        }
    }

    /// Index of `∂_{v_1} ... ∂_{v_k}`.
    pub fn of(n: usize, vars: &[Var]) -> MultiIndex {
        let mut m = MultiIndex::zero(n);
        for v in vars {
            match *v {
                Var::X(i) => m.alpha[i] += 1,
                Var::Y(i) => m.beta[i] += 1,
            }
        }
        m
    }

    pub fn x_order(&self) -> usize {
        self.alpha.iter().map(|&a| a as usize).sum()
    }

    pub fn order(&self) -> usize {
        self.x_order() + self.beta.iter().map(|&b| b as usize).sum::<usize>()
    }

    fn exponents(&self) -> Vec<u8> {
        self.alpha.iter().chain(&self.beta).copied().collect()
    }
}

/// Every partial derivative of a function within an order bound.
#[derive(Debug, Clone, PartialEq)]
pub struct JetTable {
    pub point: ChartPoint,
    pub max_x: usize,
    pub max_total: usize,
    values: BTreeMap<MultiIndex, f64>,
}

impl JetTable {
    pub fn get(&self, idx: &MultiIndex) -> Option<f64> {
        self.values.get(idx).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Exact partial derivatives of `expr` at `point` up to the given orders.
pub fn jet_eval(
    expr: &Expr,
    point: &ChartPoint,
    order: (usize, usize),
) -> Result<JetTable, JetError> {
    let (max_x, max_total) = order;
    if max_x > MAX_X_ORDER || max_total > MAX_TOTAL_ORDER || max_x > max_total {
        return Err(JetError::OrderOverflow { max_x, max_total });
    }
    let n = point.dim();
    let space = JetSpace::new(n, max_total, max_x);
    let jet = expr.eval_in(&JetAlgebra {
        space: &space,
        x: &point.x,
        y: &point.y,
    })?;
    if !jet.is_finite() {
        return Err(EvalError::NonFinite.into());
    }
    let mut values = BTreeMap::new();
    for k in 0..space.len() {
        let e = space.exponents(k);
        let idx = MultiIndex {
            alpha: e[..n].to_vec(),
            beta: e[n..].to_vec(),
        };
        let v = space.derivative(&jet, e).expect("monomial within budget");
        values.insert(idx, v);
    }
    Ok(JetTable {
        point: point.clone(),
        max_x,
        max_total,
        values,
    })
}

/// The metric tensor `g_ij = ∂̇_i ∂̇_j E` as a matrix.
pub fn metric_matrix(spec: &MetricSpec, point: &ChartPoint) -> Result<DMatrix<f64>, EvalError> {
    let n = spec.dim();
    let space = JetSpace::new(n, 2, 0);
    let e = spec.energy().eval_in(&JetAlgebra {
        space: &space,
        x: &point.x,
        y: &point.y,
    })?;
    let mut g = DMatrix::zeros(n, n);
    let mut exps = vec![0u8; 2 * n];
    for i in 0..n {
        for j in 0..n {
            exps.iter_mut().for_each(|v| *v = 0);
            exps[n + i] += 1;
            exps[n + j] += 1;
            g[(i, j)] = space.derivative(&e, &exps).expect("second y-derivative");
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(g)
}

// Central-difference weights (offset, weight) for unit step, second-order accurate.
fn stencil(order: u8) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("orders above 4 are rejected earlier"),
    }
}

/// Step size along an axis: `1e-2 * max(1, |coordinate|)`.
pub fn fd_step(coord: f64) -> f64 {
    1e-2 * coord.abs().max(1.0)
}

fn product_stencil(
    expr: &Expr,
    point: &ChartPoint,
    axes: &[(usize, u8, f64)],
) -> Result<f64, EvalError> {
    let n = point.dim();
    let mut acc = 0.0;
    let mut counters = vec![0usize; axes.len()];
    let mut coords: Vec<f64> = point.x.iter().chain(&point.y).copied().collect();
    loop {
        let mut weight = 1.0;
        for (a, &(slot, order, h)) in axes.iter().enumerate() {
            let (off, w) = stencil(order)[counters[a]];
            weight *= w;
            let base = if slot < n {
                point.x[slot]
            } else {
                point.y[slot - n]
            };
            coords[slot] = base + off as f64 * h;
        }
        acc += weight * expr.eval(&coords[..n], &coords[n..])?;
        let mut a = 0;
        while a < axes.len() {
            counters[a] += 1;
            if counters[a] < stencil(axes[a].1).len() {
                break;
            }
            counters[a] = 0;
            a += 1;
        }
        if a == axes.len() {
            break;
        }
    }
    let denom: f64 = axes
        .iter()
        .map(|&(_, order, h)| h.powi(order as i32))
        .product();
    Ok(acc / denom)
}

/// Central-difference estimate of `∂^α_x ∂^β_y expr` with one Richardson step.
pub fn fd_derivative(expr: &Expr, point: &ChartPoint, idx: &MultiIndex) -> Result<f64, JetError> {
    if idx.order() > MAX_TOTAL_ORDER {
        return Err(JetError::OrderOverflow {
            max_x: idx.x_order(),
            max_total: idx.order(),
        });
    }
    let n = point.dim();
    let exps = idx.exponents();
    let axes: Vec<(usize, u8, f64)> = exps
        .iter()
        .enumerate()
        .filter(|(_, &o)| o > 0)
        .map(|(slot, &o)| {
            let c = if slot < n {
                point.x[slot]
            } else {
                point.y[slot - n]
            };
            (slot, o, fd_step(c))
        })
        .collect();
    if axes.is_empty() {
        return Ok(expr.eval(&point.x, &point.y)?);
    }
    let coarse = product_stencil(expr, point, &axes)?;
    let half: Vec<(usize, u8, f64)> = axes.iter().map(|&(s, o, h)| (s, o, h / 2.0)).collect();
    let fine = product_stencil(expr, point, &half)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Func;
    use crate::parser::parse_metric;
    use approx::assert_relative_eq;

    fn pt(x: &[f64], y: &[f64]) -> ChartPoint {
        ChartPoint::new(x.to_vec(), y.to_vec())
    }

    #[test]
    fn square_has_constant_second_derivative() {
        let e = Expr::pow(Expr::y(0), 2.0);
        let t = jet_eval(&e, &pt(&[0.4], &[1.7]), (0, 2)).unwrap();
        assert_eq!(
            t.get(&MultiIndex::of(1, &[Var::Y(0), Var::Y(0)])),
            Some(2.0)
        );
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let spec = parse_metric("dim 2; L = sqrt(y1^2 + y2^2)").unwrap();
        let t = jet_eval(&spec.energy(), &pt(&[0.0, 0.0], &[0.6, -0.8]), (2, 4)).unwrap();
        let g11 = t.get(&MultiIndex::of(2, &[Var::Y(0), Var::Y(0)])).unwrap();
        let g12 = t.get(&MultiIndex::of(2, &[Var::Y(0), Var::Y(1)])).unwrap();
        assert_relative_eq!(g11, 1.0, epsilon = 1e-14);
        assert!(g12.abs() < 1e-14);
    }

    #[test]
    fn sphere_mixed_third_derivative() {
        let spec = parse_metric("dim 2; riemannian; a11 = 1; a22 = sin(x1)^2; a12 = 0").unwrap();
        let t = jet_eval(&spec.energy(), &pt(&[0.7, 0.3], &[1.0, 2.0]), (2, 4)).unwrap();
        let d = t
            .get(&MultiIndex::of(2, &[Var::X(0), Var::Y(1), Var::Y(1)]))
            .unwrap();
        assert_relative_eq!(d, 2.0 * 0.7f64.sin() * 0.7f64.cos(), epsilon = 1e-14);
    }

    #[test]
    fn order_overflow() {
        let e = Expr::y(0);
        let p = pt(&[0.0], &[1.0]);
        assert!(matches!(
            jet_eval(&e, &p, (3, 4)),
            Err(JetError::OrderOverflow { .. })
        ));
        assert!(matches!(
            jet_eval(&e, &p, (2, 5)),
            Err(JetError::OrderOverflow { .. })
        ));
    }

    #[test]
    fn table_is_complete() {
        let e = Expr::mul(Expr::x(0), Expr::y(1));
        let t = jet_eval(&e, &pt(&[0.1, 0.2], &[0.3, 0.4]), (2, 4)).unwrap();
        // monomials of degree <= 4 in 4 variables with x-degree <= 2
        let mut count = 0;
        for a in 0..=2usize {
            for b in 0..=(4 - a) {
                count += (a + 1) * (b + 1);
            }
        }
        assert_eq!(t.len(), count);
    }

    #[test]
    fn fd_sine_and_constant() {
        let e = Expr::call(Func::Sin, Expr::x(0));
        let d = fd_derivative(&e, &pt(&[0.0], &[1.0]), &MultiIndex::of(1, &[Var::X(0)])).unwrap();
        assert!((d - 1.0).abs() < 1e-8);
        let c = Expr::num(3.5);
        for vars in [
            vec![Var::X(0)],
            vec![Var::Y(0), Var::Y(0)],
            vec![Var::X(0), Var::Y(0), Var::Y(0), Var::Y(0)],
        ] {
            let d = fd_derivative(&c, &pt(&[0.3], &[1.0]), &MultiIndex::of(1, &vars)).unwrap();
            assert!(d.abs() < 1e-10);
        }
    }

    #[test]
    fn fd_agrees_with_jets_on_randers() {
        let spec = parse_metric("dim 3; randers; a = identity; b1 = 0.5; b2 = 0; b3 = 0").unwrap();
        let e = spec.energy();
        let p = pt(&[0.1, -0.2, 0.3], &[0.8, -0.4, 1.1]);
        let t = jet_eval(&e, &p, (2, 3)).unwrap();
        for (idx, v) in t.iter() {
            let fd = fd_derivative(&e, &p, idx).unwrap();
            assert!(
                (fd - v).abs() <= 1e-4 * (1.0 + v.abs()),
                "{idx:?}: jet {v} fd {fd}"
            );
        }
    }

    #[test]
    fn metric_matrix_matches_table() {
        let spec = parse_metric("dim 2; L = sqrt(y1^2 + y2^2) + 0.3 * y2").unwrap();
        let p = pt(&[0.0, 0.0], &[0.5, 0.9]);
        let g = metric_matrix(&spec, &p).unwrap();
        let t = jet_eval(&spec.energy(), &p, (0, 2)).unwrap();
        assert_relative_eq!(
            g[(0, 1)],
            t.get(&MultiIndex::of(2, &[Var::Y(0), Var::Y(1)])).unwrap(),
            epsilon = 1e-15
        );
    }
}
