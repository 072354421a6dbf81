//! Time functions `t ↦ f(t)` used for drift rates and moving boundaries.
//!
//! A [`TimeFunction`] wraps an expression tree together with declared
//! bounds and an optional declared period. Derivatives of order one and two
//! are exact: the tree is evaluated on second-order jets `(f, f', f'')`
//! propagated through the chain and product rules.
//!
//! The text grammar is documented in `parse.rs` and in the repository
//! README; `Display` produces text that reparses to the same tree.

mod grid;
mod parse;

use alloc::boxed::Box;
use core::fmt;
use core::ops;

pub use grid::TimeGrid;
pub use parse::{parse_expr, parse_expr_in};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

/// Value with first and second derivative in `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    fn constant(v: f64) -> Self {
        Jet { v, d1: 0.0, d2: 0.0 }
    }
}

impl Expr {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Time => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Pow(a, b) => libm::pow(a.eval(t), b.eval(t)),
            Expr::Sin(a) => libm::sin(a.eval(t)),
            Expr::Cos(a) => libm::cos(a.eval(t)),
            Expr::Exp(a) => libm::exp(a.eval(t)),
        }
    }

    /// True when the subtree does not mention `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Time => false,
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// Jet evaluation. Powers with a time-dependent exponent have no
    /// supported derivative.
    pub fn jet(&self, t: f64) -> Result<Jet> {
        Ok(match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::Time => Jet { v: t, d1: 1.0, d2: 0.0 },
            Expr::Neg(a) => {
                let a = a.jet(t)?;
                Jet { v: -a.v, d1: -a.d1, d2: -a.d2 }
            }
            Expr::Add(a, b) => {
                let (a, b) = (a.jet(t)?, b.jet(t)?);
                Jet { v: a.v + b.v, d1: a.d1 + b.d1, d2: a.d2 + b.d2 }
            }
            Expr::Sub(a, b) => {
                let (a, b) = (a.jet(t)?, b.jet(t)?);
                Jet { v: a.v - b.v, d1: a.d1 - b.d1, d2: a.d2 - b.d2 }
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.jet(t)?, b.jet(t)?);
                Jet { v: a.v * b.v, d1: a.d1 * b.v + a.v * b.d1, d2: a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2 }
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.jet(t)?, b.jet(t)?);
                let q = a.v / b.v;
                let q1 = (a.d1 - q * b.d1) / b.v;
                let q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.v;
                Jet { v: q, d1: q1, d2: q2 }
            }
            Expr::Pow(a, b) => {
                if !b.is_constant() {
                    return Err(Error::UnsupportedDerivative { node: "pow with time-dependent exponent", order: 1 });
                }
                let c = b.eval(t);
                let a = a.jet(t)?;
                let v = libm::pow(a.v, c);
                let p1 = c * libm::pow(a.v, c - 1.0);
                let p2 = c * (c - 1.0) * libm::pow(a.v, c - 2.0);
                Jet { v, d1: p1 * a.d1, d2: p2 * a.d1 * a.d1 + p1 * a.d2 }
            }
            Expr::Sin(a) => {
                let a = a.jet(t)?;
                let (s, c) = (libm::sin(a.v), libm::cos(a.v));
                Jet { v: s, d1: c * a.d1, d2: -s * a.d1 * a.d1 + c * a.d2 }
            }
            Expr::Cos(a) => {
                let a = a.jet(t)?;
                let (s, c) = (libm::sin(a.v), libm::cos(a.v));
                Jet { v: c, d1: -s * a.d1, d2: -c * a.d1 * a.d1 - s * a.d2 }
            }
            Expr::Exp(a) => {
                let a = a.jet(t)?;
                let e = libm::exp(a.v);
                Jet { v: e, d1: e * a.d1, d2: e * (a.d1 * a.d1 + a.d2) }
            }
        })
    }
}

/// Expression plus declared range and optional period.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFunction {
    expr: Expr,
    lower: f64,
    upper: f64,
    period: Option<f64>,
}

impl TimeFunction {
    pub fn new(expr: Expr) -> Self {
        TimeFunction { expr, lower: f64::NEG_INFINITY, upper: f64::INFINITY, period: None }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self::new(parse_expr(text)?))
    }

    pub fn constant(c: f64) -> Self {
        TimeFunction { expr: Expr::Const(c), lower: c, upper: c, period: None }
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn is_constant(&self) -> bool {
        self.expr.is_constant()
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.expr.eval(t)
    }

    pub fn jet(&self, t: f64) -> Result<Jet> {
        self.expr.jet(t)
    }

    /// Exact derivative of order 1 or 2.
    pub fn derivative(&self, t: f64, order: u8) -> Result<f64> {
        let j = self.expr.jet(t).map_err(|e| match e {
            Error::UnsupportedDerivative { node, .. } => Error::UnsupportedDerivative { node, order },
            other => other,
        })?;
        match order {
            1 => Ok(j.d1),
            2 => Ok(j.d2),
            _ => Err(Error::InvalidInput(alloc::format!("derivative order {order} (expected 1 or 2)"))),
        }
    }

    /// `f(t)^c` for a constant exponent.
    pub fn powf(&self, c: f64) -> Self {
        Self::new(Expr::Pow(Box::new(self.expr.clone()), Box::new(Expr::Const(c))))
    }

    /// Range observed on `n + 1` equispaced points of `[0, horizon]`.
    pub fn sampled_range(&self, horizon: f64, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=n {
            let v = self.eval(horizon * i as f64 / n as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Declare bounds from a dense sample, widened by `margin`.
    pub fn with_sampled_bounds(self, horizon: f64, n: usize, margin: f64) -> Self {
        let (lo, hi) = self.sampled_range(horizon, n);
        self.with_bounds(lo - margin, hi + margin)
    }

    /// Spot-check declared bounds and period on `n + 1` points of `[0, horizon]`.
    pub fn validate(&self, horizon: f64, n: usize) -> Result<()> {
        if self.lower > self.upper {
            return Err(Error::InvalidInput(alloc::format!(
                "declared bounds [{}, {}] are empty",
                self.lower,
                self.upper
            )));
        }
        for i in 0..=n {
            let t = horizon * i as f64 / n as f64;
            let v = self.eval(t);
            if !v.is_finite() || v < self.lower || v > self.upper {
                return Err(Error::InvalidInput(alloc::format!(
                    "{self} = {v} at t={t} outside declared bounds [{}, {}]",
                    self.lower,
                    self.upper
                )));
            }
            if let Some(p) = self.period {
                let w = self.eval(t + p);
                if (w - v).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::InvalidInput(alloc::format!("{self} is not {p}-periodic at t={t}: {v} vs {w}")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.expr, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_with(f, "t")
    }
}

impl Expr {
    /// Printer using `var` for the free variable.
    pub fn display_with<'a>(&'a self, var: &'a str) -> impl fmt::Display + 'a {
        struct Printed<'a>(&'a Expr, &'a str);
        impl fmt::Display for Printed<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.write_with(f, self.1)
            }
        }
        Printed(self, var)
    }

    fn write_with(&self, f: &mut fmt::Formatter<'_>, var: &str) -> fmt::Result {
        fn p<'a>(e: &'a Expr, var: &'a str) -> impl fmt::Display + 'a {
            e.display_with(var)
        }
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "({c})"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Time => f.write_str(var),
            Expr::Neg(a) => write!(f, "(-{})", p(a, var)),
            Expr::Add(a, b) => write!(f, "({} + {})", p(a, var), p(b, var)),
            Expr::Sub(a, b) => write!(f, "({} - {})", p(a, var), p(b, var)),
            Expr::Mul(a, b) => write!(f, "({} * {})", p(a, var), p(b, var)),
            Expr::Div(a, b) => write!(f, "({} / {})", p(a, var), p(b, var)),
            Expr::Pow(a, b) => write!(f, "({} ^ {})", p(a, var), p(b, var)),
            Expr::Sin(a) => write!(f, "sin({})", p(a, var)),
            Expr::Cos(a) => write!(f, "cos({})", p(a, var)),
            Expr::Exp(a) => write!(f, "exp({})", p(a, var)),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $node:ident) => {
        impl ops::$tr for TimeFunction {
            type Output = TimeFunction;
            fn $m(self, rhs: TimeFunction) -> TimeFunction {
                TimeFunction::new(Expr::$node(Box::new(self.expr), Box::new(rhs.expr)))
            }
        }
        impl ops::$tr<f64> for TimeFunction {
            type Output = TimeFunction;
            fn $m(self, rhs: f64) -> TimeFunction {
                TimeFunction::new(Expr::$node(Box::new(self.expr), Box::new(Expr::Const(rhs))))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);
