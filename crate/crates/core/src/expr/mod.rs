//! Scalar expressions over chart coordinates.
//!
//! An [`Expression`] is an immutable, reference-counted AST. Variables are
//! positional: `Var(i)` refers to the `i`-th name of the scope the expression
//! was parsed in, and evaluation takes a slice of values in the same order.
//! Constructors fold numeric constants and drop additive/multiplicative
//! identities, which keeps symbolic Christoffel and curvature components small.

mod parser;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Expression),
    Add(Expression, Expression),
    Sub(Expression, Expression),
    Mul(Expression, Expression),
    Div(Expression, Expression),
    Pow(Expression, u32),
    Call(Func, Expression),
}

#[derive(Clone, PartialEq)]
pub struct Expression(Arc<Node>);

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Positional names are enough to read a dump.
        write!(f, "{}", self.display_with(&[]))
    }
}

impl From<f64> for Expression {
    fn from(value: f64) -> Self {
        Expression::num(value)
    }
}

impl Expression {
    fn wrap(node: Node) -> Self {
        Expression(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(value: f64) -> Self {
        Self::wrap(Node::Num(value))
    }

    pub fn zero() -> Self {
        Self::num(0.0)
    }

    pub fn one() -> Self {
        Self::num(1.0)
    }

    pub fn var(index: usize) -> Self {
        Self::wrap(Node::Var(index))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self.0 {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }

    /// Structurally the literal zero. A symbolic zero such as `x - x` is not detected.
    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_constant() == Some(1.0)
    }

    pub fn pow(&self, exponent: u32) -> Self {
        match exponent {
            0 => return Self::one(),
            1 => return self.clone(),
            _ => {}
        }
        if let Some(v) = self.as_constant() {
            return Self::num(v.powi(exponent as i32));
        }
        Self::wrap(Node::Pow(self.clone(), exponent))
    }

    pub fn call(func: Func, arg: Expression) -> Self {
        Self::wrap(Node::Call(func, arg))
    }

    pub fn sin(&self) -> Self {
        Self::call(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Self {
        Self::call(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Self {
        Self::call(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Self {
        Self::call(Func::Log, self.clone())
    }

    pub fn sqrt(&self) -> Self {
        Self::call(Func::Sqrt, self.clone())
    }

    /// Evaluates at `vars`, where `vars[i]` is the value of `Var(i)`.
    pub fn eval(&self, vars: &[f64]) -> Result<f64> {
        Ok(match &*self.0 {
            Node::Num(v) => *v,
            Node::Var(i) => match vars.get(*i) {
                Some(v) => *v,
                None => {
                    return Err(
                        self.domain_error(format!("variable #{i} is not assigned ({} values given)", vars.len()))
                    )
                }
            },
            Node::Neg(a) => -a.eval(vars)?,
            Node::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            Node::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            Node::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            Node::Div(a, b) => {
                let num = a.eval(vars)?;
                let den = b.eval(vars)?;
                if den == 0.0 {
                    return Err(self.domain_error("division by zero"));
                }
                num / den
            }
            Node::Pow(a, n) => a.eval(vars)?.powi(*n as i32),
            Node::Call(func, a) => {
                let x = a.eval(vars)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log if x <= 0.0 => return Err(self.domain_error(format!("log of non-positive value {x}"))),
                    Func::Log => x.ln(),
                    Func::Sqrt if x < 0.0 => return Err(self.domain_error(format!("sqrt of negative value {x}"))),
                    Func::Sqrt => x.sqrt(),
                }
            }
        })
    }

    fn domain_error(&self, message: impl Into<String>) -> Error {
        Error::Domain { expr: self.display_with(&[]).to_string(), message: message.into() }
    }

    /// Exact partial derivative with respect to `Var(var)`.
    pub fn diff(&self, var: usize) -> Expression {
        match &*self.0 {
            Node::Num(_) => Self::zero(),
            Node::Var(i) => {
                if *i == var {
                    Self::one()
                } else {
                    Self::zero()
                }
            }
            Node::Neg(a) => -a.diff(var),
            Node::Add(a, b) => a.diff(var) + b.diff(var),
            Node::Sub(a, b) => a.diff(var) - b.diff(var),
            Node::Mul(a, b) => a.diff(var) * b + a * &b.diff(var),
            Node::Div(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                if db.is_zero() {
                    da / b
                } else {
                    (da * b - a * &db) / b.pow(2)
                }
            }
            Node::Pow(a, n) => Self::num(f64::from(*n)) * a.pow(n - 1) * a.diff(var),
            Node::Call(func, a) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return Self::zero();
                }
                match func {
                    Func::Sin => a.cos() * da,
                    Func::Cos => -(a.sin() * da),
                    Func::Exp => self * &da,
                    Func::Log => da / a,
                    Func::Sqrt => da / (Self::num(2.0) * self),
                }
            }
        }
    }

    /// Replaces `Var(var)` by `with` everywhere.
    pub fn substitute(&self, var: usize, with: &Expression) -> Expression {
        self.map_vars(&|i| {
            if i == var {
                with.clone()
            } else {
                Expression::var(i)
            }
        })
    }

    /// Rebuilds the tree with every `Var(i)` replaced by `f(i)`.
    pub fn map_vars(&self, f: &dyn Fn(usize) -> Expression) -> Expression {
        match &*self.0 {
            Node::Num(_) => self.clone(),
            Node::Var(i) => f(*i),
            Node::Neg(a) => -a.map_vars(f),
            Node::Add(a, b) => a.map_vars(f) + b.map_vars(f),
            Node::Sub(a, b) => a.map_vars(f) - b.map_vars(f),
            Node::Mul(a, b) => a.map_vars(f) * b.map_vars(f),
            Node::Div(a, b) => a.map_vars(f) / b.map_vars(f),
            Node::Pow(a, n) => a.map_vars(f).pow(*n),
            Node::Call(func, a) => Self::call(*func, a.map_vars(f)),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match &*self.0 {
            Node::Num(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match &*self.0 {
            Node::Num(_) => false,
            Node::Var(i) => *i == var,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.depends_on(var),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match &*self.0 {
            Node::Num(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + a.node_count(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Renders the expression in the input grammar using `names` for variables.
    /// Variables beyond `names` print as `#i`, which does not re-parse.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> DisplayExpr<'a> {
        DisplayExpr { expr: self, names }
    }

    fn precedence(&self) -> u8 {
        match &*self.0 {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Num(v) if v.is_sign_negative() => 3,
            Node::Pow(..) => 4,
            Node::Num(_) | Node::Var(_) | Node::Call(..) => 5,
        }
    }
}

pub struct DisplayExpr<'a> {
    expr: &'a Expression,
    names: &'a [String],
}

impl DisplayExpr<'_> {
    fn child<'b>(&'b self, e: &'b Expression, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = DisplayExpr { expr: e, names: self.names };
        if e.precedence() < min_prec {
            write!(f, "({inner})")
        } else {
            write!(f, "{inner}")
        }
    }
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr.node() {
            Node::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Node::Var(i) => match self.names.get(*i) {
                Some(name) => f.write_str(name),
                None => write!(f, "#{i}"),
            },
            Node::Neg(a) => {
                f.write_str("-")?;
                self.child(a, 3, f)
            }
            Node::Add(a, b) | Node::Sub(a, b) => {
                self.child(a, 1, f)?;
                f.write_str(if matches!(self.expr.node(), Node::Add(..)) { " + " } else { " - " })?;
                self.child(b, 2, f)
            }
            Node::Mul(a, b) | Node::Div(a, b) => {
                self.child(a, 2, f)?;
                f.write_str(if matches!(self.expr.node(), Node::Mul(..)) { "*" } else { "/" })?;
                self.child(b, 3, f)
            }
            Node::Pow(a, n) => {
                self.child(a, 5, f)?;
                write!(f, "^{n}")
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.child(a, 0, f)?;
                f.write_str(")")
            }
        }
    }
}

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -&self
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        match self.node() {
            Node::Num(v) => Expression::num(-v),
            Node::Neg(a) => a.clone(),
            _ => Expression::wrap(Node::Neg(self.clone())),
        }
    }
}

fn add(a: &Expression, b: &Expression) -> Expression {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Expression::num(x + y),
        (Some(x), _) if x == 0.0 => b.clone(),
        (_, Some(y)) if y == 0.0 => a.clone(),
        _ => Expression::wrap(Node::Add(a.clone(), b.clone())),
    }
}

fn sub(a: &Expression, b: &Expression) -> Expression {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Expression::num(x - y),
        (Some(x), _) if x == 0.0 => -b,
        (_, Some(y)) if y == 0.0 => a.clone(),
        _ => Expression::wrap(Node::Sub(a.clone(), b.clone())),
    }
}

fn mul(a: &Expression, b: &Expression) -> Expression {
    if a.is_zero() || b.is_zero() {
        return Expression::zero();
    }
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Expression::num(x * y),
        _ if a.is_one() => b.clone(),
        _ if b.is_one() => a.clone(),
        (Some(x), _) if x == -1.0 => -b,
        (_, Some(y)) if y == -1.0 => -a,
        _ => Expression::wrap(Node::Mul(a.clone(), b.clone())),
    }
}

fn div(a: &Expression, b: &Expression) -> Expression {
    if a.is_zero() {
        return Expression::zero();
    }
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) if y != 0.0 => Expression::num(x / y),
        _ if b.is_one() => a.clone(),
        _ => Expression::wrap(Node::Div(a.clone(), b.clone())),
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $func:ident) => {
        impl $trait<Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                $func(&self, &rhs)
            }
        }
        impl $trait<&Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                $func(&self, rhs)
            }
        }
        impl $trait<Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                $func(self, &rhs)
            }
        }
        impl $trait<&Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                $func(self, rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

/// Sum of an iterator of expressions, left to right.
pub fn sum<I: IntoIterator<Item = Expression>>(terms: I) -> Expression {
    terms.into_iter().fold(Expression::zero(), |acc, t| acc + t)
}

/// Default coordinate names `z1..z{dim}`.
pub fn default_coord_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("z{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn at(text: &str, scope: &[&str], point: &[f64]) -> f64 {
        parse(text, &names(scope)).unwrap().eval(point).unwrap()
    }

    #[test]
    fn evaluates_reference_inputs() {
        assert_eq!(at("u^2 + 3*y", &["u", "y"], &[2.0, 1.0]), 7.0);
        assert_eq!(at("sin(u)*exp(y)", &["u", "y"], &[0.0, 5.0]), 0.0);
        assert_eq!(at("1/(1+u^2)", &["u"], &[1.0]), 0.5);
        assert_eq!(at("4", &["u"], &[9.0]), 4.0);
        assert_eq!(at("u*y", &["u", "y"], &[3.0, -2.0]), -6.0);
        assert!((at("exp(log(u))", &["u"], &[2.0]) - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn differentiates_reference_inputs() {
        let scope = names(&["u", "y"]);
        let e = parse("u^2 + 3*y", &scope).unwrap();
        let du = e.diff(0);
        for u in [-1.5, 0.0, 2.0] {
            assert_eq!(du.eval(&[u, 7.0]).unwrap(), 2.0 * u);
        }
        assert_eq!(e.diff(1).as_constant(), Some(3.0));
        let s = parse("sin(u)", &scope).unwrap();
        assert_eq!(s.diff(0).eval(&[0.0, 0.0]).unwrap(), 1.0);
        assert!(parse("17.5", &scope).unwrap().diff(0).is_zero());
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let scope = names(&["u"]);
        let err = parse("1 + log(u)", &scope).unwrap().eval(&[-1.0]).unwrap_err();
        match err {
            Error::Domain { expr, .. } => assert_eq!(expr, "log(#0)"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("1/u", &scope).unwrap().eval(&[0.0]).is_err());
        assert!(parse("sqrt(u)", &scope).unwrap().eval(&[-4.0]).is_err());
    }

    #[test]
    fn constructors_fold_identities() {
        let x = Expression::var(0);
        assert!((&x * &Expression::zero()).is_zero());
        assert_eq!(&x + &Expression::zero(), x);
        assert_eq!(&x * &Expression::one(), x);
        assert_eq!(-(-&x), x);
        assert_eq!((Expression::num(2.0) * Expression::num(3.5)).as_constant(), Some(7.0));
    }

    #[test]
    fn display_keeps_tree_shape() {
        let scope = names(&["a", "b", "c"]);
        for text in ["a - (b - c)", "a/(b/c)", "(a + b)^3", "-a^2", "a*-b", "2^3^1"] {
            let Ok(e) = parse(text, &scope) else { continue };
            let printed = e.display_with(&scope).to_string();
            let back = parse(&printed, &scope).unwrap();
            assert_eq!(back, e, "{text} -> {printed}");
        }
    }

    #[test]
    fn substitution_composes() {
        let scope = names(&["u", "v"]);
        let e = parse("u^2 + v", &scope).unwrap();
        let h = parse("2*u", &scope).unwrap();
        let composed = e.substitute(0, &h);
        assert_eq!(composed.eval(&[1.5, 1.0]).unwrap(), 10.0);
    }
}
