//! A small expression language for the scalar functions that define a model.
//!
//! Expressions are parsed against an ordered parameter list (for example
//! `["t", "u"]`); variables are resolved to slot indices at parse time so
//! evaluation is a plain tree walk over a slice of values.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?        right-associative
//! primary := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```
//!
//! `pi` and `e` are predefined constants. There are no user-defined
//! functions and no conditionals.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` takes 1 argument, got {got} (offset {offset})")]
    Arity {
        name: String,
        got: usize,
        offset: usize,
    },
    #[error("empty expression")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("non-finite value {value} produced by `{subtree}`")]
    NonFinite { value: f64, subtree: String },
    #[error("missing binding for `{0}`")]
    MissingBinding(String),
    #[error("expected {expected} argument values, got {got}")]
    ArgumentCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Tanh,
    Exp,
    Abs,
}

impl UnaryOp {
    fn function(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "tan" => Self::Tan,
            "tanh" => Self::Tanh,
            "exp" => Self::Exp,
            "abs" => Self::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Neg => "-",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Tan => "tan",
            Self::Tanh => "tanh",
            Self::Exp => "exp",
            Self::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Neg => -x,
            Self::Sin => x.sin(),
            Self::Cos => x.cos(),
            Self::Tan => x.tan(),
            Self::Tanh => x.tanh(),
            Self::Exp => x.exp(),
            Self::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            Self::Add => '+',
            Self::Sub => '-',
            Self::Mul => '*',
            Self::Div => '/',
            Self::Pow => '^',
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Add => a + b,
            Self::Sub => a - b,
            Self::Mul => a * b,
            Self::Div => a / b,
            Self::Pow => a.powf(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// A parsed expression together with the parameter list it was parsed against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    params: Vec<String>,
}

impl Expr {
    pub fn parse(text: &str, params: &[&str]) -> Result<Self, ParseError> {
        parse_expr(text, params)
    }

    pub fn constant(value: f64, params: &[&str]) -> Self {
        Self {
            root: Node::Const(value),
            params: params.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluates with argument values given in parameter order.
    pub fn eval(&self, args: &[f64]) -> Result<f64, EvalError> {
        if args.len() != self.params.len() {
            return Err(EvalError::ArgumentCount {
                expected: self.params.len(),
                got: args.len(),
            });
        }
        eval_node(&self.root, args, &self.params)
    }

    /// Evaluation without the per-node finiteness check; the caller checks
    /// the final value. Used on hot paths where a failure only needs to be
    /// reported, and re-run through [`Expr::eval`] for the diagnostic.
    #[inline]
    pub fn eval_unchecked(&self, args: &[f64]) -> f64 {
        eval_fast(&self.root, args)
    }

    /// Evaluates, falling back to the diagnosing path if the result is not finite.
    #[inline]
    pub fn eval_finite(&self, args: &[f64]) -> Result<f64, EvalError> {
        let v = eval_fast(&self.root, args);
        if v.is_finite() {
            Ok(v)
        } else {
            self.eval(args)
        }
    }

    pub fn uses_param(&self, index: usize) -> bool {
        fn walk(node: &Node, index: usize) -> bool {
            match node {
                Node::Const(_) => false,
                Node::Var(k) => *k == index,
                Node::Unary(_, a) => walk(a, index),
                Node::Binary(_, a, b) => walk(a, index) || walk(b, index),
            }
        }
        walk(&self.root, index)
    }

    pub fn uses(&self, name: &str) -> bool {
        self.params
            .iter()
            .position(|p| p == name)
            .is_some_and(|k| self.uses_param(k))
    }

    /// True when the expression is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }
}

/// Fully parenthesized rendering; parsing it back yields an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.params)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, params: &[String]) -> fmt::Result {
    match node {
        Node::Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                write!(f, "(-{:?})", -c)
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Var(k) => write!(f, "{}", params[*k]),
        Node::Unary(UnaryOp::Neg, a) => {
            write!(f, "(-")?;
            write_node(f, a, params)?;
            write!(f, ")")
        }
        Node::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_node(f, a, params)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) => {
            write!(f, "(")?;
            write_node(f, a, params)?;
            write!(f, "{}", op.symbol())?;
            write_node(f, b, params)?;
            write!(f, ")")
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

fn eval_node(node: &Node, args: &[f64], params: &[String]) -> Result<f64, EvalError> {
    let value = match node {
        Node::Const(c) => *c,
        Node::Var(k) => args[*k],
        Node::Unary(op, a) => op.apply(eval_node(a, args, params)?),
        Node::Binary(op, a, b) => op.apply(eval_node(a, args, params)?, eval_node(b, args, params)?),
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite {
            value,
            subtree: Expr {
                root: node.clone(),
                params: params.to_vec(),
            }
            .to_string(),
        })
    }
}

fn eval_fast(node: &Node, args: &[f64]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Var(k) => args[*k],
        Node::Unary(op, a) => op.apply(eval_fast(a, args)),
        Node::Binary(op, a, b) => op.apply(eval_fast(a, args), eval_fast(b, args)),
    }
}

pub fn parse_expr(text: &str, params: &[&str]) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        params,
    };
    let root = parser.sum()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(Expr {
        root,
        params: params.iter().map(|s| s.to_string()).collect(),
    })
}

/// Evaluates against named bindings; every free variable must be bound.
pub fn eval_expr(e: &Expr, bindings: &HashMap<&str, f64>) -> Result<f64, EvalError> {
    let args = e
        .params
        .iter()
        .enumerate()
        .map(|(k, name)| match bindings.get(name.as_str()) {
            Some(v) => Ok(*v),
            None if !e.uses_param(k) => Ok(0.0),
            None => Err(EvalError::MissingBinding(name.clone())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    e.eval(&args)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinaryOp::Add,
                Some(b'-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinaryOp::Mul,
                Some(b'/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let src = self.src;
        let digits = |p: &mut usize| {
            while *p < src.len() && src[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        let mut p = self.pos;
        digits(&mut p);
        if p < src.len() && src[p] == b'.' {
            p += 1;
            digits(&mut p);
        }
        if p < src.len() && (src[p] == b'e' || src[p] == b'E') {
            let mut q = p + 1;
            if q < src.len() && (src[q] == b'+' || src[q] == b'-') {
                q += 1;
            }
            if q < src.len() && src[q].is_ascii_digit() {
                digits(&mut q);
                p = q;
            }
        }
        let text = std::str::from_utf8(&src[start..p]).expect("ascii digits");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = p;
                Ok(Node::Const(v))
            }
            _ => Err(ParseError::Syntax {
                offset: start,
                message: format!("invalid number `{text}`"),
            }),
        }
    }

    fn identifier(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        if self.peek() == Some(b'(') {
            let Some(op) = UnaryOp::function(name) else {
                return Err(ParseError::UnknownIdentifier {
                    name: name.to_string(),
                    offset: start,
                });
            };
            self.pos += 1;
            if self.peek() == Some(b')') {
                return Err(ParseError::Arity {
                    name: name.to_string(),
                    got: 0,
                    offset: start,
                });
            }
            let arg = self.sum()?;
            let mut extra = 0;
            while self.eat(b',') {
                self.sum()?;
                extra += 1;
            }
            if extra > 0 {
                return Err(ParseError::Arity {
                    name: name.to_string(),
                    got: 1 + extra,
                    offset: start,
                });
            }
            if !self.eat(b')') {
                return Err(self.syntax("expected `)`"));
            }
            return Ok(Node::Unary(op, Box::new(arg)));
        }
        if let Some(k) = self.params.iter().position(|p| *p == name) {
            return Ok(Node::Var(k));
        }
        match name {
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "e" => Ok(Node::Const(std::f64::consts::E)),
            _ if UnaryOp::function(name).is_some() => Err(ParseError::Arity {
                name: name.to_string(),
                got: 0,
                offset: start,
            }),
            _ => Err(ParseError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Lipschitz,
    DerivativeMin,
    Sup,
    Inf,
}

/// A sampled, non-certified bound on a one-variable slice of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundEstimate {
    pub value: f64,
    pub kind: BoundKind,
    pub interval: (f64, f64),
    pub samples: usize,
    /// Where the extreme was observed.
    pub argument: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate interval [{0}, {1}]")]
    Degenerate(f64, f64),
    #[error("`{0}` is not a parameter of the expression")]
    UnknownVariable(String),
    #[error("evaluation failed at {var} = {at}: {source}")]
    Eval {
        var: String,
        at: f64,
        source: EvalError,
    },
}

/// Samples `e` along `var` on a uniform grid of `samples` points over
/// `interval`, holding every other parameter at its `fixed` value (0 when
/// absent).
///
/// Lipschitz estimates are the largest adjacent-pair slope, which on a
/// uniform grid equals the largest slope over all sampled pairs; on nested
/// grids (samples = 2^k + 1) the estimate is non-decreasing in `samples`.
/// Derivative-min is the smallest central-difference slope.
pub fn estimate_bound(
    e: &Expr,
    var: &str,
    interval: (f64, f64),
    kind: BoundKind,
    samples: usize,
    fixed: &HashMap<&str, f64>,
) -> Result<BoundEstimate, BoundError> {
    if samples < 2 {
        return Err(BoundError::TooFewSamples(samples));
    }
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(BoundError::Degenerate(lo, hi));
    }
    let slot = e
        .params
        .iter()
        .position(|p| p == var)
        .ok_or_else(|| BoundError::UnknownVariable(var.to_string()))?;
    let mut args: Vec<f64> = e
        .params
        .iter()
        .map(|p| fixed.get(p.as_str()).copied().unwrap_or(0.0))
        .collect();
    let step = (hi - lo) / (samples - 1) as f64;
    let xs: Vec<f64> = (0..samples)
        .map(|k| if k + 1 == samples { hi } else { lo + step * k as f64 })
        .collect();
    let mut ys = Vec::with_capacity(samples);
    for &x in &xs {
        args[slot] = x;
        let y = e.eval(&args).map_err(|source| BoundError::Eval {
            var: var.to_string(),
            at: x,
            source,
        })?;
        ys.push(y);
    }

    let (value, argument) = match kind {
        BoundKind::Lipschitz => xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| ((y[1] - y[0]).abs() / (x[1] - x[0]), 0.5 * (x[0] + x[1])))
            .fold((0.0, lo), |acc, cur| if cur.0 > acc.0 { cur } else { acc }),
        BoundKind::DerivativeMin => {
            if samples < 3 {
                ((ys[1] - ys[0]) / (xs[1] - xs[0]), 0.5 * (lo + hi))
            } else {
                (1..samples - 1)
                    .map(|k| ((ys[k + 1] - ys[k - 1]) / (xs[k + 1] - xs[k - 1]), xs[k]))
                    .fold((f64::INFINITY, lo), |acc, cur| if cur.0 < acc.0 { cur } else { acc })
            }
        }
        BoundKind::Sup => xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (y, x))
            .fold((f64::NEG_INFINITY, lo), |acc, cur| if cur.0 > acc.0 { cur } else { acc }),
        BoundKind::Inf => xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (y, x))
            .fold((f64::INFINITY, lo), |acc, cur| if cur.0 < acc.0 { cur } else { acc }),
    };
    Ok(BoundEstimate {
        value,
        kind,
        interval,
        samples,
        argument,
        certified: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(text: &str, params: &[&str], args: &[f64]) -> f64 {
        parse_expr(text, params).unwrap().eval(args).unwrap()
    }

    #[test]
    fn reference_values_evaluate() {
        assert_eq!(at("sin(u)+2", &["u"], &[0.0]), 2.0);
        assert_eq!(at("2+3*t", &["t"], &[1.0]), 5.0);
        assert!((at("tanh(u)", &["u"], &[0.5]) - 0.462_117_157_260_009_8).abs() < 1e-15);
        assert_eq!(at("u*exp(sin(u)/(1+u^2))", &["u"], &[0.0]), 0.0);
        let v = at("cos(t)/3 + exp(-t)", &["t"], &[0.0]);
        assert!((v - (1.0 / 3.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        let err = parse_expr("sin(", &["u"]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier_and_arity() {
        assert!(matches!(
            parse_expr("foo(u)", &["u"]),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_expr("x+1", &["u"]),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_expr("sin(u, u)", &["u"]),
            Err(ParseError::Arity { got: 2, .. })
        ));
        assert!(matches!(parse_expr("sin()", &["u"]), Err(ParseError::Arity { got: 0, .. })));
        assert_eq!(parse_expr("   ", &["u"]), Err(ParseError::Empty));
    }

    #[test]
    fn precedence_rules() {
        assert_eq!(at("-2^2", &[], &[]), -4.0);
        assert_eq!(at("2^-1", &[], &[]), 0.5);
        assert_eq!(at("2^3^2", &[], &[]), 512.0);
        assert_eq!(at("8/4/2", &[], &[]), 1.0);
        assert_eq!(at("1-2-3", &[], &[]), -4.0);
        assert!((at("pi", &[], &[]) - std::f64::consts::PI).abs() < 1e-16);
        assert!((at("e^1", &[], &[]) - std::f64::consts::E).abs() < 1e-16);
        assert_eq!(at("1.5e2 + 2E-1", &[], &[]), 150.2);
    }

    #[test]
    fn division_by_zero_names_subtree() {
        let e = parse_expr("1 + u/(u-u)", &["u"]).unwrap();
        match e.eval(&[0.0]) {
            Err(EvalError::NonFinite { subtree, .. }) => assert_eq!(subtree, "(u/(u-u))"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn named_bindings() {
        let e = parse_expr("u1 - 2*u2", &["u1", "u2"]).unwrap();
        let b = HashMap::from([("u1", 3.0), ("u2", 1.0)]);
        assert_eq!(eval_expr(&e, &b).unwrap(), 1.0);
        let b = HashMap::from([("u1", 3.0)]);
        assert!(matches!(eval_expr(&e, &b), Err(EvalError::MissingBinding(_))));
    }

    #[test]
    fn uses_reports_free_variables() {
        let e = parse_expr("sin(u)+2", &["t", "u"]).unwrap();
        assert!(e.uses("u"));
        assert!(!e.uses("t"));
    }

    #[test]
    fn bound_examples() {
        let fixed = HashMap::new();
        let tanh = parse_expr("tanh(u)", &["u"]).unwrap();
        let b = estimate_bound(&tanh, "u", (-5.0, 5.0), BoundKind::Lipschitz, 10_001, &fixed).unwrap();
        assert!((b.value - 1.0).abs() < 0.01, "{b:?}");
        assert!(!b.certified);

        let sq = parse_expr("u^2", &["u"]).unwrap();
        let b = estimate_bound(&sq, "u", (0.0, 1.0), BoundKind::Lipschitz, 10_001, &fixed).unwrap();
        assert!((b.value - 2.0).abs() < 0.01, "{b:?}");

        let sup = estimate_bound(&sq, "u", (-1.0, 2.0), BoundKind::Sup, 301, &fixed).unwrap();
        assert_eq!(sup.value, 4.0);
        let inf = estimate_bound(&sq, "u", (-1.0, 2.0), BoundKind::Inf, 301, &fixed).unwrap();
        assert!(inf.value.abs() < 1e-12);
    }

    #[test]
    fn derivative_min_of_self_signal_factor() {
        // Frozen from an independent dense-grid central-difference run with
        // 2,000,001 samples on [-10, 10]: min slope 0.545845 near u = -0.4736.
        let e = parse_expr("u*exp(sin(u)/(1+u^2))", &["u"]).unwrap();
        let b = estimate_bound(
            &e,
            "u",
            (-10.0, 10.0),
            BoundKind::DerivativeMin,
            1_000_001,
            &HashMap::new(),
        )
        .unwrap();
        assert!((b.value - 0.5458).abs() < 0.001, "{b:?}");
        assert!((b.argument + 0.4736).abs() < 0.01);
    }

    #[test]
    fn bound_preconditions() {
        let e = parse_expr("u", &["u"]).unwrap();
        let f = HashMap::new();
        assert_eq!(
            estimate_bound(&e, "u", (0.0, 1.0), BoundKind::Sup, 1, &f),
            Err(BoundError::TooFewSamples(1))
        );
        assert!(matches!(
            estimate_bound(&e, "u", (1.0, 1.0), BoundKind::Sup, 5, &f),
            Err(BoundError::Degenerate(..))
        ));
        assert!(matches!(
            estimate_bound(&e, "v", (0.0, 1.0), BoundKind::Sup, 5, &f),
            Err(BoundError::UnknownVariable(_))
        ));
        let inv = parse_expr("1/u", &["u"]).unwrap();
        assert!(matches!(
            estimate_bound(&inv, "u", (-1.0, 1.0), BoundKind::Sup, 3, &f),
            Err(BoundError::Eval { .. })
        ));
    }

    fn arb_expr(depth: u32) -> BoxedStrategy<String> {
        let leaf = prop_oneof![
            (0.0f64..10.0).prop_map(|c| format!("{c}")),
            Just("a".to_string()),
            Just("b".to_string()),
            Just("c".to_string()),
        ];
        leaf.prop_recursive(depth, 32, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*"]))
                    .prop_map(|(a, b, op)| format!("{a}{op}{b}")),
                (inner.clone(), prop::sample::select(vec!["sin", "cos", "tanh", "abs"]))
                    .prop_map(|(a, f)| format!("{f}({a})")),
                inner.clone().prop_map(|a| format!("-({a})")),
                inner.prop_map(|a| format!("({a})")),
            ]
        })
        .boxed()
    }

    proptest! {
        #[test]
        fn printed_form_round_trips(text in arb_expr(4), a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let params = ["a", "b", "c"];
            let e = parse_expr(&text, &params).unwrap();
            let back = parse_expr(&e.to_string(), &params).unwrap();
            prop_assert_eq!(&back, &e);
            if let (Ok(x), Ok(y)) = (e.eval(&[a, b, c]), back.eval(&[a, b, c])) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn precedence_equivalences(a in -3.0f64..3.0, b in 0.1f64..2.0, c in -2.0f64..2.0) {
            let params = ["a", "b", "c"];
            let x = parse_expr("a+b*c", &params).unwrap().eval(&[a, b, c]).unwrap();
            let y = parse_expr("a+(b*c)", &params).unwrap().eval(&[a, b, c]).unwrap();
            prop_assert_eq!(x, y);
            let x = parse_expr("b^b^c", &params).unwrap().eval(&[a, b, c]).unwrap();
            let y = parse_expr("b^(b^c)", &params).unwrap().eval(&[a, b, c]).unwrap();
            prop_assert_eq!(x, y);
        }

        #[test]
        fn lipschitz_estimate_monotone_on_nested_grids(k in 1u32..10, shift in -2.0f64..2.0) {
            let e = parse_expr("sin(3*u) + u^2/4", &["u"]).unwrap();
            let f = HashMap::new();
            let coarse = estimate_bound(&e, "u", (shift - 1.0, shift + 2.0), BoundKind::Lipschitz, (1 << k) + 1, &f).unwrap();
            let fine = estimate_bound(&e, "u", (shift - 1.0, shift + 2.0), BoundKind::Lipschitz, (1 << (k + 1)) + 1, &f).unwrap();
            prop_assert!(fine.value >= coarse.value * (1.0 - 1e-12));
        }
    }
}
