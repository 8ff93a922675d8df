//! Reader for the line-oriented metric-spec format.
//!
//! ```text
//! # unit sphere, colatitude chart
//! dim 2
//! name "sphere"
//! riemannian
//! a11 = 1; a22 = sin(x1)^2; a12 = 0
//! ```
//!
//! Statements are separated by `;` or newlines. Expressions use the usual
//! precedence `^` > unary `-` > `*`,`/` > `+`,`-`; `^` is right-associative
//! and its exponent must be variable-free.

use crate::error::ParseError;
use crate::expr::{Expr, Func, Var};
use crate::metric::{MetricSpec, MetricVariant};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Sym(char),
    Sep,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::Sep => "end of statement".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, column });
            if c.is_ascii_digit()
                || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
            {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| ParseError::Syntax {
                    line,
                    column,
                    expected: "a number".into(),
                    found: format!("`{s}`"),
                })?;
                push(&mut out, Tok::Num(v));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            } else if c == '"' {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(ParseError::Syntax {
                        line,
                        column,
                        expected: "closing `\"`".into(),
                        found: "end of line".into(),
                    });
                }
                push(&mut out, Tok::Str(chars[start..i].iter().collect()));
                i += 1;
            } else if c == ';' {
                push(&mut out, Tok::Sep);
                i += 1;
            } else if "+-*/^(),=".contains(c) {
                push(&mut out, Tok::Sym(c));
                i += 1;
            } else {
                return Err(ParseError::Syntax {
                    line,
                    column,
                    expected: "a token".into(),
                    found: format!("`{c}`"),
                });
            }
        }
        out.push(Token {
            tok: Tok::Sep,
            line,
            column: chars.len() + 1,
        });
    }
    let (line, column) = out.last().map_or((1, 1), |t| (t.line, t.column));
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    dim: Option<usize>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.into(),
            found: describe(&t.tok),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek().tok == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(&format!("`{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Sym('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Sym('^') {
            self.bump();
            let at = self.peek().clone();
            let exponent = self.unary()?;
            if !exponent.is_constant() {
                return Err(ParseError::Syntax {
                    line: at.line,
                    column: at.column,
                    expected: "a constant exponent".into(),
                    found: format!("`{exponent}`"),
                });
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(*v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                self.identifier(name, t.line, t.column)
            }
            _ => Err(self.error_here("an expression")),
        }
    }

    fn identifier(&mut self, name: &str, line: usize, column: usize) -> Result<Expr, ParseError> {
        if name == "pi" {
            return Ok(Expr::Num(std::f64::consts::PI));
        }
        if name == "pow" {
            self.expect_sym('(')?;
            let base = self.expr()?;
            self.expect_sym(',')?;
            let at = self.peek().clone();
            let exponent = self.expr()?;
            if !exponent.is_constant() {
                return Err(ParseError::Syntax {
                    line: at.line,
                    column: at.column,
                    expected: "a constant exponent".into(),
                    found: format!("`{exponent}`"),
                });
            }
            self.expect_sym(')')?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        if let Some(f) = Func::from_name(name) {
            self.expect_sym('(')?;
            let arg = self.expr()?;
            self.expect_sym(')')?;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        if let Some(var) = self.variable(name, line, column)? {
            return Ok(Expr::Var(var));
        }
        Err(ParseError::UnknownSymbol {
            symbol: name.into(),
            line,
            column,
        })
    }

    fn variable(&self, name: &str, line: usize, column: usize) -> Result<Option<Var>, ParseError> {
        let (kind, digits) = name.split_at(1);
        if !(kind == "x" || kind == "y")
            || digits.is_empty()
            || !digits.bytes().all(|b| b.is_ascii_digit())
        {
            return Ok(None);
        }
        let index: usize = match digits.parse() {
            Ok(i) if i >= 1 => i,
            _ => return Ok(None),
        };
        let dim = self.dim.unwrap_or(usize::MAX);
        if index > dim {
            return Err(ParseError::DimensionMismatch {
                symbol: name.into(),
                dim,
                line,
                column,
            });
        }
        Ok(Some(if kind == "x" {
            Var::X(index - 1)
        } else {
            Var::Y(index - 1)
        }))
    }

    fn end_statement(&mut self) -> Result<(), ParseError> {
        match self.peek().tok {
            Tok::Sep => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.error_here("`;` or end of line")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Family {
    Riemannian,
    Randers,
    Minkowski,
}

/// Split `a12` / `a1_2` into one-based indices.
fn component_indices(rest: &str, arity: usize) -> Option<Vec<usize>> {
    let parts: Vec<usize> = if rest.contains('_') {
        rest.split('_')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().ok())
            .collect::<Option<_>>()?
    } else if arity == 1 {
        vec![rest.parse().ok()?]
    } else {
        rest.chars()
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()?
    };
    (parts.len() == arity && parts.iter().all(|&i| i >= 1)).then_some(parts)
}

/// Parse metric-spec text into a [`MetricSpec`].
pub fn parse_metric(text: &str) -> Result<MetricSpec, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        dim: None,
    };

    let mut name = String::new();
    let mut family: Option<Family> = None;
    let mut lagrangian: Option<(Expr, usize, usize)> = None;
    let mut a: Vec<Vec<Option<Expr>>> = Vec::new();
    let mut b: Vec<Option<Expr>> = Vec::new();
    let mut identity = false;

    loop {
        let t = p.peek().clone();
        match &t.tok {
            Tok::Eof => break,
            Tok::Sep => {
                p.bump();
                continue;
            }
            Tok::Ident(word) if p.dim.is_none() => {
                if word != "dim" {
                    return Err(p.error_here("`dim <n>` header"));
                }
                p.bump();
                let at = p.peek().clone();
                let n = match at.tok {
                    Tok::Num(v) if v.fract() == 0.0 && v >= 2.0 => v as usize,
                    _ => return Err(p.error_here("an integer dimension >= 2")),
                };
                p.bump();
                p.dim = Some(n);
                a = vec![vec![None; n]; n];
                b = vec![None; n];
                p.end_statement()?;
            }
            Tok::Ident(word) => {
                let n = p.dim.expect("dim parsed");
                p.bump();
                match word.as_str() {
                    "name" => match p.bump().tok {
                        Tok::Str(s) => name = s,
                        _ => {
                            p.pos -= 1;
                            return Err(p.error_here("a quoted name"));
                        }
                    },
                    "riemannian" | "randers" | "minkowski" => {
                        if family.is_some() {
                            return Err(ParseError::Syntax {
                                line: t.line,
                                column: t.column,
                                expected: "a single family declaration".into(),
                                found: format!("`{word}`"),
                            });
                        }
                        family = Some(match word.as_str() {
                            "riemannian" => Family::Riemannian,
                            "randers" => Family::Randers,
                            _ => Family::Minkowski,
                        });
                    }
                    "L" => {
                        p.expect_sym('=')?;
                        lagrangian = Some((p.expr()?, t.line, t.column));
                    }
                    "a" => {
                        p.expect_sym('=')?;
                        let at = p.peek().clone();
                        if at.tok != Tok::Ident("identity".into()) {
                            return Err(p.error_here("`identity`"));
                        }
                        p.bump();
                        identity = true;
                    }
                    w if w.starts_with('a') || w.starts_with('b') => {
                        let (head, rest) = w.split_at(1);
                        let arity = if head == "a" { 2 } else { 1 };
                        let idx = component_indices(rest, arity).ok_or_else(|| {
                            ParseError::UnknownSymbol {
                                symbol: w.into(),
                                line: t.line,
                                column: t.column,
                            }
                        })?;
                        if idx.iter().any(|&i| i > n) {
                            return Err(ParseError::DimensionMismatch {
                                symbol: w.into(),
                                dim: n,
                                line: t.line,
                                column: t.column,
                            });
                        }
                        p.expect_sym('=')?;
                        let value = p.expr()?;
                        if value.uses_y() {
                            return Err(ParseError::Invalid(format!(
                                "component `{w}` at {}:{} must depend on x only",
                                t.line, t.column
                            )));
                        }
                        if arity == 2 {
                            let (i, j) = (idx[0] - 1, idx[1] - 1);
                            for (r, c) in [(i, j), (j, i)] {
                                if let Some(prev) = &a[r][c] {
                                    if *prev != value {
                                        return Err(ParseError::Invalid(format!(
                                            "`{w}` at {}:{} conflicts with a{}{}: a_ij must be symmetric",
                                            t.line,
                                            t.column,
                                            c + 1,
                                            r + 1
                                        )));
                                    }
                                }
                                a[r][c] = Some(value.clone());
                            }
                        } else {
                            b[idx[0] - 1] = Some(value);
                        }
                    }
                    _ => {
                        return Err(ParseError::UnknownSymbol {
                            symbol: word.clone(),
                            line: t.line,
                            column: t.column,
                        })
                    }
                }
                p.end_statement()?;
            }
            _ => {
                return Err(p.error_here(if p.dim.is_none() {
                    "`dim <n>` header"
                } else {
                    "a statement"
                }))
            }
        }
    }

    let n = p
        .dim
        .ok_or_else(|| ParseError::Invalid("missing `dim <n>` header".into()))?;

    let metric_matrix = |a: Vec<Vec<Option<Expr>>>| -> Result<Vec<Vec<Expr>>, ParseError> {
        let mut out = vec![vec![Expr::Num(0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                out[i][j] = match (&a[i][j], identity) {
                    (Some(e), _) => e.clone(),
                    (None, true) => Expr::Num(if i == j { 1.0 } else { 0.0 }),
                    (None, false) if i != j => Expr::Num(0.0),
                    (None, false) => {
                        return Err(ParseError::Invalid(format!(
                            "missing diagonal component a{}{}",
                            i + 1,
                            i + 1
                        )))
                    }
                };
            }
        }
        Ok(out)
    };

    let has_components =
        identity || a.iter().flatten().any(Option::is_some) || b.iter().any(Option::is_some);
    let variant = match family {
        None | Some(Family::Minkowski) => {
            if has_components {
                return Err(ParseError::Invalid(
                    "component assignments need a `riemannian` or `randers` block".into(),
                ));
            }
            let (l, line, column) = lagrangian
                .ok_or_else(|| ParseError::Invalid("missing `L = <expr>` definition".into()))?;
            if family == Some(Family::Minkowski) {
                if l.uses_x() {
                    return Err(ParseError::Invalid(format!(
                        "minkowski norm at {line}:{column} must depend on y only"
                    )));
                }
                MetricVariant::MinkowskiNorm(l)
            } else {
                MetricVariant::Custom(l)
            }
        }
        Some(fam) => {
            if lagrangian.is_some() {
                return Err(ParseError::Invalid(
                    "`L = ...` is not allowed inside a family block".into(),
                ));
            }
            let a = metric_matrix(a)?;
            if fam == Family::Riemannian {
                if b.iter().any(Option::is_some) {
                    return Err(ParseError::Invalid(
                        "`b` components belong to randers metrics".into(),
                    ));
                }
                MetricVariant::Riemannian { a }
            } else {
                let b = b.into_iter().map(|e| e.unwrap_or(Expr::Num(0.0))).collect();
                MetricVariant::Randers { a, b }
            }
        }
    };
    Ok(MetricSpec::new(n, name, variant))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_custom() {
        let spec = parse_metric("dim 2; L = sqrt(y1^2 + y2^2)").unwrap();
        assert_eq!(spec.dim(), 2);
        assert!(matches!(spec.variant(), MetricVariant::Custom(_)));
    }

    #[test]
    fn sphere_riemannian() {
        let spec = parse_metric("dim 2; riemannian; a11 = 1; a22 = sin(x1)^2; a12 = 0").unwrap();
        match spec.variant() {
            MetricVariant::Riemannian { a } => {
                assert_eq!(a[0][1], Expr::Num(0.0));
                assert_eq!(a[1][0], Expr::Num(0.0));
                assert_eq!(a[1][1].to_string(), "sin(x1)^2");
            }
            other => panic!("unexpected variant {other:?}"),
        }
    }

    #[test]
    fn randers_identity_round_trip() {
        let spec = parse_metric("dim 3; randers; a = identity; b1 = 0.5; b2 = 0; b3 = 0").unwrap();
        assert!(matches!(spec.variant(), MetricVariant::Randers { .. }));
        let again = parse_metric(&spec.to_string()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn precedence_and_associativity() {
        let spec = parse_metric("dim 2; L = -y1^2 + 2 * y2 / 3 - 1 - 1 + 2^3^2").unwrap();
        let MetricVariant::Custom(e) = spec.variant() else {
            unreachable!()
        };
        assert_eq!(
            e.eval(&[0.0, 0.0], &[3.0, 3.0]).unwrap(),
            -9.0 + 2.0 - 2.0 + 512.0
        );
    }

    #[test]
    fn dimension_mismatch_reports_position() {
        let err = parse_metric("dim 2\nL = sqrt(y1^2 + y3^2)").unwrap_err();
        assert_eq!(
            err,
            ParseError::DimensionMismatch {
                symbol: "y3".into(),
                dim: 2,
                line: 2,
                column: 17
            }
        );
    }

    #[test]
    fn unknown_symbol_and_syntax_errors() {
        assert!(matches!(
            parse_metric("dim 2; L = foo(y1)"),
            Err(ParseError::UnknownSymbol { .. })
        ));
        assert!(matches!(
            parse_metric("dim 2; L = (y1 + y2"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_metric("L = y1"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_metric("dim 2; L = y1^y2"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn comments_and_newlines() {
        let text = "# a comment\ndim 2 # trailing\nname \"flat\"\nL = sqrt(y1^2 + y2^2)\n";
        let spec = parse_metric(text).unwrap();
        assert_eq!(spec.name(), "flat");
    }

    #[test]
    fn minkowski_rejects_x() {
        assert!(matches!(
            parse_metric("dim 2; minkowski; L = x1 * sqrt(y1^2 + y2^2)"),
            Err(ParseError::Invalid(_))
        ));
    }

    #[test]
    fn asymmetric_components_rejected() {
        assert!(matches!(
            parse_metric("dim 2; riemannian; a11 = 1; a22 = 1; a12 = x1; a21 = 0"),
            Err(ParseError::Invalid(_))
        ));
    }
}
