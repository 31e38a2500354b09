//! Expression front end for the CLI.
//!
//! Grammar (left-associative, `^` binds tighter than `*`, unary minus
//! allowed before a factor; the exponent of `^` is a literal number):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' signed_number)?
//! base   := number | variable | '(' expr ')' | 'exp' '(' expr ')'
//! ```
//!
//! Rational expressions, real powers and `exp` cover every transform and
//! right-hand side this toolkit works with.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::analytic_core::{gamma, principal_power, EvalError, TransformFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Var,
    Add(Box<ExprAst>, Box<ExprAst>),
    Sub(Box<ExprAst>, Box<ExprAst>),
    Mul(Box<ExprAst>, Box<ExprAst>),
    Div(Box<ExprAst>, Box<ExprAst>),
    Neg(Box<ExprAst>),
    Pow(Box<ExprAst>, f64),
    Exp(Box<ExprAst>),
}

/// Syntax error with a byte offset and the token set that would have been
/// accepted there.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at byte {}: expected {}, found {}",
            self.offset,
            self.expected.join(" | "),
            self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| ParseError {
                    offset: start,
                    expected: vec!["number"],
                    found: format!("'{s}'"),
                })?;
                toks.push((Tok::Num(v), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            other => {
                return Err(ParseError {
                    offset: i,
                    expected: vec!["number", "identifier", "operator", "'('", "')'"],
                    found: format!("'{other}'"),
                })
            }
        }
    }
    toks.push((Tok::Eof, bytes.len()));
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    variable: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected,
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<ExprAst, ParseError> {
        let mut node = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    node = ExprAst::Add(Box::new(node), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    node = ExprAst::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<ExprAst, ParseError> {
        let mut node = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    node = ExprAst::Mul(Box::new(node), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    node = ExprAst::Div(Box::new(node), Box::new(self.factor()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> Result<ExprAst, ParseError> {
        if matches!(self.peek(), Tok::Minus) {
            self.bump();
            let inner = self.factor()?;
            // fold literal negation so "-3" and Const(-3) are the same tree
            return Ok(match inner {
                ExprAst::Const(c) => ExprAst::Const(-c),
                other => ExprAst::Neg(Box::new(other)),
            });
        }
        let base = self.base()?;
        if matches!(self.peek(), Tok::Caret) {
            self.bump();
            let neg = if matches!(self.peek(), Tok::Minus) {
                self.bump();
                true
            } else if matches!(self.peek(), Tok::Plus) {
                self.bump();
                false
            } else {
                false
            };
            match self.bump() {
                Tok::Num(v) => {
                    let e = if neg { -v } else { v };
                    Ok(ExprAst::Pow(Box::new(base), e))
                }
                other => Err(ParseError {
                    offset: self.toks[self.pos - 1].1,
                    expected: vec!["number"],
                    found: other.describe(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<ExprAst, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(ExprAst::Const(v))
            }
            Tok::Ident(name) => {
                if name == self.variable {
                    self.bump();
                    Ok(ExprAst::Var)
                } else if name == "exp" {
                    self.bump();
                    if !matches!(self.peek(), Tok::LParen) {
                        return Err(self.error(vec!["'('"]));
                    }
                    self.bump();
                    let inner = self.expr()?;
                    if !matches!(self.peek(), Tok::RParen) {
                        return Err(self.error(vec![")"]));
                    }
                    self.bump();
                    Ok(ExprAst::Exp(Box::new(inner)))
                } else {
                    Err(self.error(vec!["variable", "'exp'"]))
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if !matches!(self.peek(), Tok::RParen) {
                    return Err(self.error(vec![")"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(vec!["number", "variable", "'('", "'exp'"])),
        }
    }
}

/// Parse `text` into an AST; `variable_name` is the single free variable
/// (`"p"` for transforms, `"t"` for time-domain functions).
pub fn parse_expr(text: &str, variable_name: &str) -> Result<ExprAst, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            offset: 0,
            expected: vec!["expression"],
            found: "empty input".into(),
        });
    }
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        variable: variable_name,
    };
    let node = parser.expr()?;
    if !matches!(parser.peek(), Tok::Eof) {
        return Err(parser.error(vec!["'+'", "'-'", "'*'", "'/'", "end of input"]));
    }
    Ok(node)
}

impl ExprAst {
    /// Evaluate at a complex point. Division by zero, powers at the branch
    /// point and non-finite intermediates all surface as errors.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, EvalError> {
        let v = match self {
            ExprAst::Const(c) => Complex64::new(*c, 0.0),
            ExprAst::Var => z,
            ExprAst::Add(a, b) => a.eval(z)? + b.eval(z)?,
            ExprAst::Sub(a, b) => a.eval(z)? - b.eval(z)?,
            ExprAst::Mul(a, b) => a.eval(z)? * b.eval(z)?,
            ExprAst::Div(a, b) => {
                let den = b.eval(z)?;
                if den.re == 0.0 && den.im == 0.0 {
                    return Err(EvalError::Domain("division by zero"));
                }
                a.eval(z)? / den
            }
            ExprAst::Neg(a) => -a.eval(z)?,
            ExprAst::Pow(base, e) => {
                let b = base.eval(z)?;
                if b.re == 0.0 && b.im == 0.0 {
                    if *e > 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        return Err(EvalError::BranchPoint);
                    }
                } else if e.fract() == 0.0 && e.abs() <= 64.0 {
                    b.powi(*e as i32)
                } else {
                    principal_power(b, *e)?
                }
            }
            ExprAst::Exp(a) => a.eval(z)?.exp(),
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Render with the given variable name; the output reparses to an
    /// identical tree.
    pub fn pretty(&self, var: &str) -> String {
        match self {
            ExprAst::Const(c) => {
                if *c < 0.0 || c.is_sign_negative() {
                    format!("-{}", -c)
                } else {
                    format!("{c}")
                }
            }
            ExprAst::Var => var.to_string(),
            ExprAst::Add(a, b) => format!(
                "{} + {}",
                a.pretty(var),
                Self::group_additive(b, var)
            ),
            ExprAst::Sub(a, b) => format!(
                "{} - {}",
                a.pretty(var),
                Self::group_additive(b, var)
            ),
            ExprAst::Mul(a, b) => format!(
                "{}*{}",
                Self::group_multiplicative(a, var),
                Self::group_tight(b, var)
            ),
            ExprAst::Div(a, b) => format!(
                "{}/{}",
                Self::group_multiplicative(a, var),
                Self::group_tight(b, var)
            ),
            ExprAst::Neg(a) => match **a {
                ExprAst::Add(..) | ExprAst::Sub(..) | ExprAst::Mul(..) | ExprAst::Div(..) => {
                    format!("-({})", a.pretty(var))
                }
                _ => format!("-{}", a.pretty(var)),
            },
            ExprAst::Pow(base, e) => {
                let b = match **base {
                    ExprAst::Var | ExprAst::Exp(_) => base.pretty(var),
                    ExprAst::Const(c) if c >= 0.0 && !c.is_sign_negative() => base.pretty(var),
                    _ => format!("({})", base.pretty(var)),
                };
                format!("{b}^{e}")
            }
            ExprAst::Exp(a) => format!("exp({})", a.pretty(var)),
        }
    }

    // right operand of +/-: parenthesize further additive chains so
    // left-associative reparsing rebuilds the same shape
    fn group_additive(node: &ExprAst, var: &str) -> String {
        match node {
            ExprAst::Add(..) | ExprAst::Sub(..) => format!("({})", node.pretty(var)),
            _ => node.pretty(var),
        }
    }

    // operands of * and left operand of /: additive children need parens
    fn group_multiplicative(node: &ExprAst, var: &str) -> String {
        match node {
            ExprAst::Add(..) | ExprAst::Sub(..) => format!("({})", node.pretty(var)),
            _ => node.pretty(var),
        }
    }

    // right operand of /: also parenthesize further * and /
    fn group_tight(node: &ExprAst, var: &str) -> String {
        match node {
            ExprAst::Add(..) | ExprAst::Sub(..) | ExprAst::Mul(..) | ExprAst::Div(..) => {
                format!("({})", node.pretty(var))
            }
            _ => node.pretty(var),
        }
    }

    /// Wrap as a transform-domain function of `p`.
    pub fn into_transform(self, label: impl Into<String>) -> TransformFunction {
        TransformFunction::new(label, move |p| self.eval(p))
    }
}

/// One `coeff · t^power · e^{rate·t}` term of a time-domain expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub power: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolicError {
    #[error("unsupported for closed-form transforms: {0}")]
    Unsupported(&'static str),
    #[error("t-power {0} must be greater than -1 for a transformable term")]
    PowerOutOfRange(f64),
}

/// Decompose a time-domain expression into monomial-exponential terms.
///
/// Supported: anything that multiplies out to a sum of
/// `c · t^a · exp(b·t)` — which spans the right-hand sides this toolkit
/// targets. Everything else is refused with a description.
pub fn monomials(ast: &ExprAst) -> Result<Vec<Monomial>, SymbolicError> {
    match ast {
        ExprAst::Const(c) => Ok(vec![Monomial {
            coeff: *c,
            power: 0.0,
            rate: 0.0,
        }]),
        ExprAst::Var => Ok(vec![Monomial {
            coeff: 1.0,
            power: 1.0,
            rate: 0.0,
        }]),
        ExprAst::Neg(a) => Ok(monomials(a)?
            .into_iter()
            .map(|m| Monomial {
                coeff: -m.coeff,
                ..m
            })
            .collect()),
        ExprAst::Add(a, b) => {
            let mut out = monomials(a)?;
            out.extend(monomials(b)?);
            Ok(out)
        }
        ExprAst::Sub(a, b) => {
            let mut out = monomials(a)?;
            out.extend(monomials(b)?.into_iter().map(|m| Monomial {
                coeff: -m.coeff,
                ..m
            }));
            Ok(out)
        }
        ExprAst::Mul(a, b) => {
            let (ta, tb) = (monomials(a)?, monomials(b)?);
            let mut out = Vec::with_capacity(ta.len() * tb.len());
            for x in &ta {
                for y in &tb {
                    out.push(Monomial {
                        coeff: x.coeff * y.coeff,
                        power: x.power + y.power,
                        rate: x.rate + y.rate,
                    });
                }
            }
            Ok(out)
        }
        ExprAst::Div(a, b) => {
            let tb = monomials(b)?;
            if tb.len() != 1 {
                return Err(SymbolicError::Unsupported("division by a sum"));
            }
            let d = tb[0];
            if d.coeff == 0.0 {
                return Err(SymbolicError::Unsupported("division by zero"));
            }
            Ok(monomials(a)?
                .into_iter()
                .map(|m| Monomial {
                    coeff: m.coeff / d.coeff,
                    power: m.power - d.power,
                    rate: m.rate - d.rate,
                })
                .collect())
        }
        ExprAst::Pow(base, e) => {
            let tb = monomials(base)?;
            if tb.len() != 1 {
                return Err(SymbolicError::Unsupported("power of a sum"));
            }
            let x = tb[0];
            let coeff = if x.coeff > 0.0 {
                x.coeff.powf(*e)
            } else if e.fract() == 0.0 {
                x.coeff.powi(*e as i32)
            } else {
                return Err(SymbolicError::Unsupported(
                    "non-integer power of a negative coefficient",
                ));
            };
            Ok(vec![Monomial {
                coeff,
                power: x.power * e,
                rate: x.rate * e,
            }])
        }
        ExprAst::Exp(a) => {
            let ta = monomials(a)?;
            let mut constant = 0.0;
            let mut linear = 0.0;
            for m in ta {
                if m.rate != 0.0 {
                    return Err(SymbolicError::Unsupported("nested exponential"));
                }
                if m.power == 0.0 {
                    constant += m.coeff;
                } else if m.power == 1.0 {
                    linear += m.coeff;
                } else {
                    return Err(SymbolicError::Unsupported("exp of a non-linear argument"));
                }
            }
            Ok(vec![Monomial {
                coeff: constant.exp(),
                power: 0.0,
                rate: linear,
            }])
        }
    }
}

/// Closed-form Laplace transform of a monomial-exponential time expression:
/// each `c·t^a·e^{bt}` maps to `c·Γ(a+1)·(p-b)^{-(a+1)}`.
pub fn laplace_closed_form(
    ast: &ExprAst,
    label: impl Into<String>,
) -> Result<TransformFunction, SymbolicError> {
    let terms = monomials(ast)?;
    let mut prepared = Vec::with_capacity(terms.len());
    for m in &terms {
        if m.power <= -1.0 {
            return Err(SymbolicError::PowerOutOfRange(m.power));
        }
        let g = gamma(m.power + 1.0)
            .map_err(|_| SymbolicError::PowerOutOfRange(m.power))?;
        prepared.push((m.coeff * g, m.power + 1.0, m.rate));
    }
    let abscissa = terms.iter().map(|m| m.rate).fold(0.0, f64::max);
    Ok(
        TransformFunction::new(label, move |p: Complex64| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(cg, exponent, rate) in &prepared {
                acc += principal_power(p - rate, -exponent)? * cg;
            }
            Ok(acc)
        })
        .with_abscissa(abscissa),
    )
}
