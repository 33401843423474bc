//! A small expression language for coefficients, sources and exact solutions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right associative
//! primary := number | constant | variable | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! Variables are `x, y, z` or `x1 .. xd`. Constants are `pi` and `e`.
//! Functions are `exp ln sin cos tan tanh sqrt`.
//!
//! A power whose exponent is a constant integer becomes a repeated-squaring
//! node. Any other power `b^p` is rewritten at parse time to `exp(p*ln(b))`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::jets::{BinaryOp, Jet1, JetN, JetSpace, Scalar, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    E,
    Var(usize),
    Neg(Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Func(UnaryOp, Box<Node>),
    PowInt(Box<Node>, i64),
}

impl Node {
    fn has_vars(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Num(_) | Node::Pi | Node::E => false,
            Node::Neg(a) | Node::Func(_, a) | Node::PowInt(a, _) => a.has_vars(),
            Node::Binary(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }

    fn eval<T: Scalar>(&self, vars: &[T], proto: &T) -> Result<T> {
        let wrap = |e: Error| match e {
            Error::Singularity(message) => Error::Domain {
                subexpression: self.to_string(),
                message,
            },
            other => other,
        };
        match self {
            Node::Num(v) => Ok(proto.lift(*v)),
            Node::Pi => Ok(proto.lift(core::f64::consts::PI)),
            Node::E => Ok(proto.lift(core::f64::consts::E)),
            Node::Var(i) => Ok(vars[*i].clone()),
            Node::Neg(a) => a.eval(vars, proto)?.unary(UnaryOp::Neg),
            Node::Binary(op, a, b) => {
                let x = a.eval(vars, proto)?;
                let y = b.eval(vars, proto)?;
                x.binary(*op, &y).map_err(wrap)
            }
            Node::Func(op, a) => a.eval(vars, proto)?.unary(*op).map_err(wrap),
            Node::PowInt(a, n) => a
                .eval(vars, proto)?
                .unary(UnaryOp::PowInt(*n))
                .map_err(wrap),
        }
    }
}

fn var_name(i: usize) -> String {
    match i {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("x{}", i + 1),
    }
}

impl Node {
    /// Binding strength as the parser sees it: sums, products, unary minus,
    /// powers, then atoms and calls.
    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Node::Binary(..) => 2,
            Node::Neg(_) => 3,
            Node::Num(v) if v.is_sign_negative() => 3,
            Node::PowInt(..) => 4,
            _ => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, paren: bool) -> fmt::Result {
        if paren {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Pi => f.write_str("pi"),
            Node::E => f.write_str("e"),
            Node::Var(i) => f.write_str(&var_name(*i)),
            Node::Neg(a) => {
                f.write_str("-")?;
                a.fmt_child(f, a.precedence() < p)
            }
            Node::Binary(op, a, b) => {
                let s = match op {
                    BinaryOp::Add => '+',
                    BinaryOp::Sub => '-',
                    BinaryOp::Mul => '*',
                    BinaryOp::Div => '/',
                };
                // Left-associative: an equal-precedence right operand keeps its parentheses.
                a.fmt_child(f, a.precedence() < p)?;
                write!(f, "{s}")?;
                b.fmt_child(f, b.precedence() <= p)
            }
            Node::Func(op, a) => write!(f, "{}({a})", op.name()),
            Node::PowInt(a, n) => {
                a.fmt_child(f, a.precedence() < 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

/// A parsed expression in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    dim: usize,
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl Expression {
    /// Parses `text` in `dim` variables. With `dim = 0` only constant
    /// expressions are accepted.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            dim,
        };
        let root = p.sum()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Self { root, dim })
    }

    pub fn from_node(root: Node, dim: usize) -> Self {
        Self { root, dim }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_point(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::Usage(format!(
                "point has {n} coordinates, expression expects {}",
                self.dim
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point.len())?;
        self.root.eval(point, &0.0)
    }

    /// Univariate jet about `x` (dimension 1 only).
    pub fn jet1(&self, x: f64, order: usize) -> Result<Jet1> {
        self.check_point(1)?;
        let v = Jet1::variable(x, order);
        self.root.eval(core::slice::from_ref(&v), &v)
    }

    /// Multivariate jet about `point` in the given jet space.
    pub fn jet(&self, space: &JetSpace, point: &[f64]) -> Result<JetN> {
        self.check_point(point.len())?;
        if space.dim() != self.dim {
            return Err(Error::Usage(
                "jet space dimension differs from expression".into(),
            ));
        }
        let vars: Vec<JetN> = (0..self.dim).map(|i| space.variable(point, i)).collect();
        self.root.eval(&vars, &vars[0])
    }

    /// Convenience wrapper building a fresh jet space.
    pub fn evaluate_jet(&self, point: &[f64], order: usize) -> Result<JetN> {
        self.jet(&JetSpace::new(self.dim, order), point)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> Error {
        let message = match self.src.get(self.pos) {
            Some(&c) => format!("{message} near '{}'", c as char),
            None => format!("{message} at end of input"),
        };
        Error::Syntax {
            offset: self.pos,
            message,
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

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            let op = if c == b'+' {
                BinaryOp::Add
            } else {
                BinaryOp::Sub
            };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' {
                BinaryOp::Mul
            } else {
                BinaryOp::Div
            };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let exponent = self.unary()?;
        if !exponent.has_vars() {
            let v = exponent.eval::<f64>(&[], &0.0).map_err(|e| match e {
                Error::Domain { .. } => e,
                other => Error::Domain {
                    subexpression: exponent.to_string(),
                    message: other.to_string(),
                },
            })?;
            if v.is_finite() && v == libm::trunc(v) && v.abs() <= i32::MAX as f64 {
                return Ok(Node::PowInt(Box::new(base), v as i64));
            }
        }
        Ok(Node::Func(
            UnaryOp::Exp,
            Box::new(Node::Binary(
                BinaryOp::Mul,
                Box::new(exponent),
                Box::new(Node::Func(UnaryOp::Ln, Box::new(base))),
            )),
        ))
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            _ => Err(self.err("expected a number, variable, function or '('")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                self.pos = q;
                digits(&mut self.pos);
            }
        }
        let text = core::str::from_utf8(&s[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let func = match name {
            "exp" => Some(UnaryOp::Exp),
            "ln" => Some(UnaryOp::Ln),
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "tan" => Some(UnaryOp::Tan),
            "tanh" => Some(UnaryOp::Tanh),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        };
        if let Some(op) = func {
            if self.peek() != Some(b'(') {
                return Err(self.err("expected '(' after function name"));
            }
            self.pos += 1;
            let arg = self.sum()?;
            if self.peek() != Some(b')') {
                return Err(self.err("expected ')'"));
            }
            self.pos += 1;
            return Ok(Node::Func(op, Box::new(arg)));
        }
        let axis = match name {
            "pi" => return Ok(Node::Pi),
            "e" => return Ok(Node::E),
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => name
                .strip_prefix('x')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&k| k >= 1 && !name[1..].starts_with('0'))
                .map(|k| k - 1),
        };
        match axis {
            Some(i) if i < self.dim => Ok(Node::Var(i)),
            Some(_) => Err(Error::VariableOutOfRange {
                name: name.to_string(),
                offset: start,
                dim: self.dim,
            }),
            None => Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            }),
        }
    }
}
