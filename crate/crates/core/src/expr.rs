//! Expression trees for metric functions `L(x, y)` and their evaluation.
//!
//! Evaluation is written once against the [`Algebra`] trait so the same tree
//! can be evaluated to plain `f64` values (for the finite-difference oracle)
//! or to truncated Taylor jets (for exact derivatives).

use std::fmt;

use crate::error::EvalError;

/// A chart variable: `x_i` (position) or `y_i` (direction), zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Y(usize),
}

impl Var {
    /// Position in the flattened `[x_1..x_n, y_1..y_n]` variable list.
    pub fn slot(self, n: usize) -> usize {
        match self {
            Var::X(i) => i,
            Var::Y(i) => n + i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a constant (variable-free) exponent.
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

// Convenience constructors used by the metric families and fixtures.
impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }
    pub fn x(i: usize) -> Expr {
        Expr::Var(Var::X(i))
    }
    pub fn y(i: usize) -> Expr {
        Expr::Var(Var::Y(i))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }
    pub fn pow(a: Expr, p: f64) -> Expr {
        Expr::Pow(Box::new(a), Box::new(Expr::Num(p)))
    }
    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Sum of terms; `0` for an empty list.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut it = terms.into_iter();
        match it.next() {
            None => Expr::Num(0.0),
            Some(first) => it.fold(first, Expr::add),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Visit every variable in the tree.
    pub fn for_each_var(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.for_each_var(f),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        let mut constant = true;
        self.for_each_var(&mut |_| constant = false);
        constant
    }

    pub fn uses_x(&self) -> bool {
        let mut found = false;
        self.for_each_var(&mut |v| found |= matches!(v, Var::X(_)));
        found
    }

    pub fn uses_y(&self) -> bool {
        let mut found = false;
        self.for_each_var(&mut |v| found |= matches!(v, Var::Y(_)));
        found
    }

    /// Largest variable index used (zero-based), if any.
    pub fn max_index(&self) -> Option<usize> {
        let mut max = None;
        self.for_each_var(&mut |v| {
            let i = match v {
                Var::X(i) | Var::Y(i) => i,
            };
            max = Some(max.map_or(i, |m: usize| m.max(i)));
        });
        max
    }

    /// Evaluate in an arbitrary algebra.
    pub fn eval_in<A: Algebra>(&self, alg: &A) -> Result<A::Elem, EvalError> {
        Ok(match self {
            Expr::Num(v) => alg.constant(*v),
            Expr::Var(v) => alg.variable(*v),
            Expr::Neg(a) => alg.neg(&a.eval_in(alg)?),
            Expr::Add(a, b) => alg.add(&a.eval_in(alg)?, &b.eval_in(alg)?),
            Expr::Sub(a, b) => alg.sub(&a.eval_in(alg)?, &b.eval_in(alg)?),
            Expr::Mul(a, b) => alg.mul(&a.eval_in(alg)?, &b.eval_in(alg)?),
            Expr::Div(a, b) => alg.div(&a.eval_in(alg)?, &b.eval_in(alg)?)?,
            Expr::Pow(a, p) => {
                let exponent = p.eval_constant()?;
                alg.powf(&a.eval_in(alg)?, exponent)?
            }
            Expr::Call(f, a) => alg.call(*f, &a.eval_in(alg)?)?,
        })
    }

    /// Evaluate a variable-free expression.
    pub fn eval_constant(&self) -> Result<f64, EvalError> {
        if !self.is_constant() {
            return Err(EvalError::NonConstantExponent);
        }
        self.eval_in(&PointAlgebra { x: &[], y: &[] })
    }

    /// Plain evaluation at `(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
        self.eval_in(&PointAlgebra { x, y })
    }
}

/// Operations an expression can be evaluated into.
pub trait Algebra {
    type Elem;

    fn constant(&self, c: f64) -> Self::Elem;
    fn variable(&self, v: Var) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, EvalError>;
    fn powf(&self, a: &Self::Elem, p: f64) -> Result<Self::Elem, EvalError>;
    fn call(&self, f: Func, a: &Self::Elem) -> Result<Self::Elem, EvalError>;
}

/// Scalar evaluation at a fixed point.
pub struct PointAlgebra<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
}

pub(crate) fn check_power_base(base: f64, p: f64) -> Result<(), EvalError> {
    let integral = p.fract() == 0.0;
    if base < 0.0 && !integral {
        return Err(EvalError::NegativeBase { base, exponent: p });
    }
    if base == 0.0 && p < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(())
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Algebra for PointAlgebra<'_> {
    type Elem = f64;

    fn constant(&self, c: f64) -> f64 {
        c
    }
    fn variable(&self, v: Var) -> f64 {
        match v {
            Var::X(i) => self.x[i],
            Var::Y(i) => self.y[i],
        }
    }
    fn neg(&self, a: &f64) -> f64 {
        -a
    }
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn div(&self, a: &f64, b: &f64) -> Result<f64, EvalError> {
        if *b == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        finite(a / b)
    }
    fn powf(&self, a: &f64, p: f64) -> Result<f64, EvalError> {
        check_power_base(*a, p)?;
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            finite(a.powi(p as i32))
        } else {
            finite(a.powf(p))
        }
    }
    fn call(&self, f: Func, a: &f64) -> Result<f64, EvalError> {
        match f {
            Func::Sqrt => {
                if *a < 0.0 {
                    Err(EvalError::NegativeBase {
                        base: *a,
                        exponent: 0.5,
                    })
                } else {
                    Ok(a.sqrt())
                }
            }
            Func::Sin => Ok(a.sin()),
            Func::Cos => Ok(a.cos()),
            Func::Exp => finite(a.exp()),
            Func::Log => {
                if *a <= 0.0 {
                    Err(EvalError::LogDomain(*a))
                } else {
                    Ok(a.ln())
                }
            }
        }
    }
}

// Pretty printing. Binding strength: additive 1, multiplicative 2, unary minus
// 3, power 4, atoms 5. The printer inserts exactly the parentheses needed for
// the parser to rebuild the same tree.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
        Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::Y(i)) => write!(f, "y{}", i + 1),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, precedence(a) < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let (op, prec) = match self {
                    Expr::Add(..) => (" + ", 1),
                    Expr::Sub(..) => (" - ", 1),
                    Expr::Mul(..) => (" * ", 2),
                    _ => (" / ", 2),
                };
                write_operand(f, a, precedence(a) < prec)?;
                f.write_str(op)?;
                write_operand(f, b, precedence(b) <= prec)
            }
            Expr::Pow(a, p) => {
                write_operand(f, a, precedence(a) <= 4)?;
                f.write_str("^")?;
                write_operand(f, p, precedence(p) < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_evaluation() {
        let e = Expr::add(
            Expr::pow(Expr::y(0), 2.0),
            Expr::mul(Expr::x(0), Expr::y(1)),
        );
        assert_eq!(e.eval(&[3.0, 0.0], &[2.0, 5.0]).unwrap(), 4.0 + 15.0);
    }

    #[test]
    fn domain_errors() {
        let e = Expr::call(Func::Sqrt, Expr::num(-1.0));
        assert!(matches!(
            e.eval(&[], &[]),
            Err(EvalError::NegativeBase { .. })
        ));
        let e = Expr::call(Func::Log, Expr::num(0.0));
        assert!(matches!(e.eval(&[], &[]), Err(EvalError::LogDomain(_))));
        let e = Expr::Div(Box::new(Expr::num(1.0)), Box::new(Expr::num(0.0)));
        assert_eq!(e.eval(&[], &[]), Err(EvalError::DivisionByZero));
        let e = Expr::pow(Expr::num(-2.0), 0.5);
        assert!(e.eval(&[], &[]).is_err());
        let e = Expr::pow(Expr::num(-2.0), 3.0);
        assert_eq!(e.eval(&[], &[]).unwrap(), -8.0);
    }

    #[test]
    fn printing_inserts_needed_parens() {
        let e = Expr::Sub(
            Box::new(Expr::y(0)),
            Box::new(Expr::Sub(Box::new(Expr::y(1)), Box::new(Expr::y(2)))),
        );
        assert_eq!(e.to_string(), "y1 - (y2 - y3)");
        let e = Expr::pow(Expr::Neg(Box::new(Expr::y(0))), 2.0);
        assert_eq!(e.to_string(), "(-y1)^2");
        let e = Expr::Neg(Box::new(Expr::pow(Expr::y(0), 2.0)));
        assert_eq!(e.to_string(), "-y1^2");
    }
}
