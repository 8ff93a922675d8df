//! Truncated multivariate Taylor arithmetic over `[x_1..x_n, y_1..y_n]`.
//!
//! A [`Jet`] stores Taylor coefficients `c_α` of a function around a base
//! point, for every monomial `h^α` in a [`JetSpace`]. Each jet also tracks how
//! far its coefficients can be trusted: a total-degree budget and an
//! x-degree budget. Differentiating in `x_i` lowers both, differentiating in
//! `y_i` lowers only the total, and products keep the smaller of each. This
//! lets tensors be assembled as jets and then differentiated again exactly.

use std::collections::HashMap;

use crate::error::EvalError;
use crate::expr::{check_power_base, Algebra, Func, Var};

/// Monomial table, multiplication triples and derivative maps.
#[derive(Debug, Clone)]
pub struct JetSpace {
    n: usize,
    max_total: usize,
    max_x: usize,
    exps: Vec<Vec<u8>>,
    total: Vec<u8>,
    xdeg: Vec<u8>,
    index: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)`: `h^{α_i} h^{α_j} = h^{α_k}`, sorted by the degree of `k`.
    triples: Vec<(u32, u32, u32)>,
    /// `triple_end[d]` = number of triples whose product has degree `<= d`.
    triple_end: Vec<usize>,
    /// Per variable slot: `(dst, src, factor)` with `α_src = α_dst + e_v`.
    deriv: Vec<Vec<(u32, u32, f64)>>,
    /// Index of the linear monomial of each slot, if present.
    linear: Vec<Option<usize>>,
}

fn enumerate(nvars: usize, n: usize, max_total: usize, max_x: usize) -> Vec<Vec<u8>> {
    fn rec(
        pos: usize,
        left: usize,
        xleft: usize,
        n: usize,
        cur: &mut Vec<u8>,
        out: &mut Vec<Vec<u8>>,
    ) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        let cap = if pos < n { left.min(xleft) } else { left };
        for e in 0..=cap {
            cur[pos] = e as u8;
            let xl = if pos < n { xleft - e } else { xleft };
            rec(pos + 1, left - e, xl, n, cur, out);
        }
        cur[pos] = 0;
    }
    let mut cur = vec![0u8; nvars];
    let mut out = Vec::new();
    rec(0, max_total, max_x, n, &mut cur, &mut out);
    // graded order: constant first, then the linear terms in slot order
    out.sort_by(|a, b| {
        let da: u32 = a.iter().map(|&e| e as u32).sum();
        let db: u32 = b.iter().map(|&e| e as u32).sum();
        da.cmp(&db).then_with(|| b.cmp(a))
    });
    out
}

impl JetSpace {
    /// Space of Taylor polynomials in `2n` variables with total degree
    /// `<= max_total` and x-degree `<= max_x`.
    pub fn new(n: usize, max_total: usize, max_x: usize) -> JetSpace {
        let max_x = max_x.min(max_total);
        let nvars = 2 * n;
        let exps = enumerate(nvars, n, max_total, max_x);
        let total: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let xdeg: Vec<u8> = exps.iter().map(|e| e[..n].iter().sum()).collect();
        let index: HashMap<Vec<u8>, usize> = exps
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect();

        let mut triples = Vec::new();
        for (k, gamma) in exps.iter().enumerate() {
            // every split gamma = alpha + beta
            let mut alpha = vec![0u8; nvars];
            loop {
                let beta: Vec<u8> = gamma.iter().zip(&alpha).map(|(g, a)| g - a).collect();
                triples.push((index[&alpha] as u32, index[&beta] as u32, k as u32));
                let mut pos = 0;
                while pos < nvars {
                    if alpha[pos] < gamma[pos] {
                        alpha[pos] += 1;
                        break;
                    }
                    alpha[pos] = 0;
                    pos += 1;
                }
                if pos == nvars {
                    break;
                }
            }
        }
        triples.sort_by_key(|&(_, _, k)| total[k as usize]);
        let mut triple_end = vec![0usize; max_total + 1];
        for (d, end) in triple_end.iter_mut().enumerate() {
            *end = triples.partition_point(|&(_, _, k)| (total[k as usize] as usize) <= d);
        }

        let mut deriv = vec![Vec::new(); nvars];
        for (dst, e) in exps.iter().enumerate() {
            for (v, list) in deriv.iter_mut().enumerate() {
                let mut up = e.clone();
                up[v] += 1;
                if let Some(&src) = index.get(&up) {
                    list.push((dst as u32, src as u32, up[v] as f64));
                }
            }
        }

        let linear = (0..nvars)
            .map(|v| {
                let mut e = vec![0u8; nvars];
                e[v] = 1;
                index.get(&e).copied()
            })
            .collect();

        JetSpace {
            n,
            max_total,
            max_x,
            exps,
            total,
            xdeg,
            index,
            triples,
            triple_end,
            deriv,
            linear,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    pub fn max_x(&self) -> usize {
        self.max_x
    }

    /// Exponent vector of monomial `k` (`x` exponents first).
    pub fn exponents(&self, k: usize) -> &[u8] {
        &self.exps[k]
    }

    pub fn monomial_index(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    pub fn constant(&self, c: f64) -> Jet {
        let mut coef = vec![0.0; self.len()];
        coef[0] = c;
        Jet {
            coef,
            vt: self.max_total as i32,
            vx: self.max_x as i32,
        }
    }

    pub fn zero(&self) -> Jet {
        self.constant(0.0)
    }

    /// The coordinate function for `v`, expanded around `value`.
    pub fn variable(&self, v: Var, value: f64) -> Jet {
        let mut j = self.constant(value);
        let mut e = vec![0u8; 2 * self.n];
        e[v.slot(self.n)] = 1;
        if let Some(k) = self.monomial_index(&e) {
            j.coef[k] = 1.0;
        }
        j
    }

    fn clean(&self, j: &mut Jet) {
        if j.vt >= self.max_total as i32 && j.vx >= self.max_x as i32 {
            return;
        }
        for k in 0..self.len() {
            if self.total[k] as i32 > j.vt || self.xdeg[k] as i32 > j.vx {
                j.coef[k] = 0.0;
            }
        }
    }

    pub fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        let vt = a.vt.min(b.vt);
        let vx = a.vx.min(b.vx);
        let mut coef = vec![0.0; self.len()];
        if vt >= 0 {
            let end = self.triple_end[(vt as usize).min(self.max_total)];
            let (ac, bc) = (&a.coef, &b.coef);
            for &(i, j, k) in &self.triples[..end] {
                coef[k as usize] += ac[i as usize] * bc[j as usize];
            }
        }
        let mut out = Jet { coef, vt, vx };
        self.clean(&mut out);
        out
    }

    /// `∂/∂x_i`.
    pub fn dx(&self, a: &Jet, i: usize) -> Jet {
        self.derive(a, i, true)
    }

    /// `∂/∂y_i`.
    pub fn dy(&self, a: &Jet, i: usize) -> Jet {
        self.derive(a, self.n + i, false)
    }

    fn derive(&self, a: &Jet, slot: usize, is_x: bool) -> Jet {
        let mut coef = vec![0.0; self.len()];
        for &(dst, src, f) in &self.deriv[slot] {
            coef[dst as usize] = f * a.coef[src as usize];
        }
        Jet {
            coef,
            vt: a.vt - 1,
            vx: if is_x { a.vx - 1 } else { a.vx },
        }
    }

    /// `f(u)` from the derivatives `f^(k)(u0)` listed as Taylor weights `w_k = f^(k)(u0)/k!`.
    fn compose(&self, u: &Jet, weights: &[f64]) -> Result<Jet, EvalError> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        let mut h = u.clone();
        h.coef[0] = 0.0;
        let k_max = weights.len() - 1;
        let mut acc = self.constant(weights[k_max]);
        acc.vt = u.vt;
        acc.vx = u.vx;
        for k in (0..k_max).rev() {
            acc = self.mul(&acc, &h);
            acc.coef[0] += weights[k];
        }
        Ok(acc)
    }

    fn order(&self, u: &Jet) -> usize {
        u.vt.clamp(0, self.max_total as i32) as usize
    }

    pub fn powf(&self, u: &Jet, p: f64) -> Result<Jet, EvalError> {
        let u0 = u.value();
        check_power_base(u0, p)?;
        let integral = p.fract() == 0.0;
        if u0 == 0.0 && !integral {
            return Err(EvalError::SingularPower(p));
        }
        let kmax = self.order(u);
        let mut w = Vec::with_capacity(kmax + 1);
        let mut binom = 1.0;
        for k in 0..=kmax {
            if k > 0 {
                binom *= (p - (k - 1) as f64) / k as f64;
            }
            let e = p - k as f64;
            let term = if binom == 0.0 {
                0.0
            } else if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                binom * u0.powi(e as i32)
            } else {
                binom * u0.powf(e)
            };
            w.push(term);
        }
        self.compose(u, &w)
    }

    pub fn call(&self, f: Func, u: &Jet) -> Result<Jet, EvalError> {
        let u0 = u.value();
        let kmax = self.order(u);
        let mut fact = 1.0;
        let mut w = Vec::with_capacity(kmax + 1);
        match f {
            Func::Sqrt => {
                if u0 < 0.0 {
                    return Err(EvalError::NegativeBase {
                        base: u0,
                        exponent: 0.5,
                    });
                }
                return self.powf(u, 0.5);
            }
            Func::Exp => {
                let e = u0.exp();
                for k in 0..=kmax {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    w.push(e / fact);
                }
            }
            Func::Log => {
                if u0 <= 0.0 {
                    return Err(EvalError::LogDomain(u0));
                }
                w.push(u0.ln());
                for k in 1..=kmax {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    w.push(sign / (k as f64 * u0.powi(k as i32)));
                }
            }
            Func::Sin | Func::Cos => {
                let (s, c) = u0.sin_cos();
                // d^k sin = sin(u + kπ/2); cos is sin shifted by one step
                let cycle = [s, c, -s, -c];
                let shift = if f == Func::Cos { 1 } else { 0 };
                for k in 0..=kmax {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    w.push(cycle[(k + shift) % 4] / fact);
                }
            }
        }
        self.compose(u, &w)
    }

    /// First partial at the base point; slots `0..n` are `x`, `n..2n` are `y`.
    pub fn first_partial(&self, a: &Jet, slot: usize) -> f64 {
        debug_assert!(
            a.vt >= 1 && (slot >= self.n || a.vx >= 1),
            "first partial past budget"
        );
        self.linear[slot].map_or(0.0, |k| a.coef[k])
    }

    /// Partial derivative `∂^α_x ∂^β_y` at the base point, read off the
    /// coefficients. `None` if the monomial is outside the space or budget.
    pub fn derivative(&self, a: &Jet, exps: &[u8]) -> Option<f64> {
        let k = self.monomial_index(exps)?;
        if self.total[k] as i32 > a.vt || self.xdeg[k] as i32 > a.vx {
            return None;
        }
        let fact: f64 = exps
            .iter()
            .map(|&e| (1..=e as u32).product::<u32>() as f64)
            .product();
        Some(fact * a.coef[k])
    }
}

/// Taylor coefficients plus validity budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coef: Vec<f64>,
    vt: i32,
    vx: i32,
}

impl Jet {
    /// Value at the base point.
    pub fn value(&self) -> f64 {
        debug_assert!(
            self.vt >= 0 && self.vx >= 0,
            "jet value read past its validity budget"
        );
        self.coef[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    /// `(total, x)` degrees up to which the coefficients are exact.
    pub fn budget(&self) -> (i32, i32) {
        (self.vt, self.vx)
    }

    pub fn add(&self, b: &Jet) -> Jet {
        Jet {
            coef: self.coef.iter().zip(&b.coef).map(|(x, y)| x + y).collect(),
            vt: self.vt.min(b.vt),
            vx: self.vx.min(b.vx),
        }
    }

    pub fn sub(&self, b: &Jet) -> Jet {
        Jet {
            coef: self.coef.iter().zip(&b.coef).map(|(x, y)| x - y).collect(),
            vt: self.vt.min(b.vt),
            vx: self.vx.min(b.vx),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            coef: self.coef.iter().map(|x| s * x).collect(),
            vt: self.vt,
            vx: self.vx,
        }
    }

    /// `self += s * b`.
    pub fn axpy(&mut self, s: f64, b: &Jet) {
        for (x, y) in self.coef.iter_mut().zip(&b.coef) {
            *x += s * y;
        }
        self.vt = self.vt.min(b.vt);
        self.vx = self.vx.min(b.vx);
    }

    pub fn add_constant(&mut self, c: f64) {
        self.coef[0] += c;
    }

    pub fn is_finite(&self) -> bool {
        self.coef.iter().all(|c| c.is_finite())
    }
}

/// Evaluates expressions into jets around `(x, y)`.
pub struct JetAlgebra<'a> {
    pub space: &'a JetSpace,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

impl Algebra for JetAlgebra<'_> {
    type Elem = Jet;

    fn constant(&self, c: f64) -> Jet {
        self.space.constant(c)
    }
    fn variable(&self, v: Var) -> Jet {
        let value = match v {
            Var::X(i) => self.x[i],
            Var::Y(i) => self.y[i],
        };
        self.space.variable(v, value)
    }
    fn neg(&self, a: &Jet) -> Jet {
        a.scale(-1.0)
    }
    fn add(&self, a: &Jet, b: &Jet) -> Jet {
        a.add(b)
    }
    fn sub(&self, a: &Jet, b: &Jet) -> Jet {
        a.sub(b)
    }
    fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        self.space.mul(a, b)
    }
    fn div(&self, a: &Jet, b: &Jet) -> Result<Jet, EvalError> {
        if b.value() == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let inv = self.space.powf(b, -1.0)?;
        Ok(self.space.mul(a, &inv))
    }
    fn powf(&self, a: &Jet, p: f64) -> Result<Jet, EvalError> {
        self.space.powf(a, p)
    }
    fn call(&self, f: Func, a: &Jet) -> Result<Jet, EvalError> {
        self.space.call(f, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::parser::parse_metric;
    use approx::assert_relative_eq;

    fn eval(space: &JetSpace, e: &Expr, x: &[f64], y: &[f64]) -> Jet {
        e.eval_in(&JetAlgebra { space, x, y }).unwrap()
    }

    #[test]
    fn monomial_counts() {
        // total <= 2 in 2 variables, no x restriction: 1 + 2 + 3
        assert_eq!(JetSpace::new(1, 2, 2).len(), 6);
        // x-degree 0 keeps only y monomials
        assert_eq!(JetSpace::new(2, 2, 0).len(), 6);
    }

    #[test]
    fn polynomial_derivatives() {
        let s = JetSpace::new(1, 4, 2);
        let e = Expr::mul(Expr::pow(Expr::x(0), 2.0), Expr::pow(Expr::y(0), 3.0));
        let j = eval(&s, &e, &[1.5], &[0.5]);
        // d^2/dx^2 d/dy (x^2 y^3) = 2 * 3 y^2
        assert_relative_eq!(
            s.derivative(&j, &[2, 1]).unwrap(),
            6.0 * 0.25,
            epsilon = 1e-14
        );
        // d/dx d^3/dy^3 = 2x * 6
        assert_relative_eq!(
            s.derivative(&j, &[1, 3]).unwrap(),
            12.0 * 1.5,
            epsilon = 1e-13
        );
    }

    #[test]
    fn elementary_functions() {
        let s = JetSpace::new(1, 4, 2);
        let x0: f64 = 0.7;
        let cases: Vec<(Func, [f64; 5])> = vec![
            (
                Func::Sin,
                [x0.sin(), x0.cos(), -x0.sin(), -x0.cos(), x0.sin()],
            ),
            (
                Func::Cos,
                [x0.cos(), -x0.sin(), -x0.cos(), x0.sin(), x0.cos()],
            ),
            (Func::Exp, [x0.exp(); 5]),
            (
                Func::Log,
                [
                    x0.ln(),
                    1.0 / x0,
                    -1.0 / (x0 * x0),
                    2.0 / x0.powi(3),
                    -6.0 / x0.powi(4),
                ],
            ),
        ];
        for (f, d) in cases {
            let j = eval(&s, &Expr::call(f, Expr::y(0)), &[0.0], &[x0]);
            for (k, want) in d.iter().enumerate() {
                let got = s.derivative(&j, &[0, k as u8]).unwrap();
                assert_relative_eq!(got, *want, epsilon = 1e-13, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn fractional_power_and_division() {
        let s = JetSpace::new(1, 3, 1);
        let e = Expr::Div(
            Box::new(Expr::num(1.0)),
            Box::new(Expr::pow(Expr::y(0), 0.5)),
        );
        let j = eval(&s, &e, &[0.0], &[4.0]);
        // y^{-1/2}: value 1/2, third derivative (-1/2)(-3/2)(-5/2) y^{-7/2}
        assert_relative_eq!(j.value(), 0.5, epsilon = 1e-15);
        let d3 = -15.0 / 8.0 * 4f64.powf(-3.5);
        assert_relative_eq!(s.derivative(&j, &[0, 3]).unwrap(), d3, epsilon = 1e-15);
    }

    #[test]
    fn integer_power_of_zero_is_exact() {
        let s = JetSpace::new(1, 4, 0);
        let j = eval(&s, &Expr::pow(Expr::y(0), 2.0), &[0.0], &[0.0]);
        assert_eq!(s.derivative(&j, &[0, 2]).unwrap(), 2.0);
        assert_eq!(s.derivative(&j, &[0, 3]).unwrap(), 0.0);
        let e = Expr::pow(Expr::y(0), 0.5);
        assert_eq!(
            e.eval_in(&JetAlgebra {
                space: &s,
                x: &[0.0],
                y: &[0.0]
            }),
            Err(EvalError::SingularPower(0.5))
        );
    }

    #[test]
    fn budgets_follow_derivatives() {
        let s = JetSpace::new(2, 4, 2);
        let e = parse_metric("dim 2; L = exp(x1) * sqrt(y1^2 + y2^2)")
            .unwrap()
            .energy();
        let j = eval(&s, &e, &[0.1, 0.2], &[0.3, 0.4]);
        let g = s.dy(&s.dy(&j, 0), 1);
        assert_eq!(g.budget(), (2, 2));
        let dg = s.dx(&g, 0);
        assert_eq!(dg.budget(), (1, 1));
        let prod = s.mul(&g, &dg);
        assert_eq!(prod.budget(), (1, 1));
        // derivative through the product agrees with the product rule
        let lhs = s.dx(&s.mul(&g, &g), 0);
        let rhs = s.mul(&g, &dg).scale(2.0);
        assert_relative_eq!(lhs.value(), rhs.value(), epsilon = 1e-14);
    }
}
