//! Scalar expressions of one real variable.
//!
//! An [`Expr`] is an immutable tree built from the variable `x`, decimal
//! literals, the unary functions `sin cos exp log sqrt abs`, negation, the
//! four arithmetic operators and `^` with a constant integer exponent.
//! Trees are produced by [`parse_expr`], printed with [`core::fmt::Display`]
//! (printing then parsing gives back the same tree), evaluated with
//! [`Expr::eval`] and differentiated with [`differentiate`].

mod diff;
mod parse;

use alloc::boxed::Box;
use core::fmt;

pub use diff::{differentiate, DiffError};
pub use parse::{parse_expr, ParseError, ParseErrorKind};

/// Unary functions understood by the expression language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> Result<f64, EvalError> {
        match self {
            Func::Sin => Ok(libm::sin(v)),
            Func::Cos => Ok(libm::cos(v)),
            Func::Exp => Ok(libm::exp(v)),
            Func::Log if v <= 0.0 => Err(EvalError::LogDomain { arg: v }),
            Func::Log => Ok(libm::log(v)),
            Func::Sqrt if v < 0.0 => Err(EvalError::SqrtDomain { arg: v }),
            Func::Sqrt => Ok(libm::sqrt(v)),
            Func::Abs => Ok(libm::fabs(v)),
        }
    }
}

/// Expression tree.
///
/// Literals produced by the parser are always non-negative; a leading minus
/// is a [`Expr::Neg`] node. Use [`Expr::num`] to build a literal of either
/// sign so that printed trees parse back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var,
    Num(f64),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

/// Failure to evaluate an expression at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalError {
    DivisionByZero,
    LogDomain {
        arg: f64,
    },
    SqrtDomain {
        arg: f64,
    },
    /// Input or an intermediate result was NaN or infinite.
    NonFinite,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero => write!(f, "division by zero"),
            EvalError::LogDomain { arg } => write!(f, "log of non-positive value {arg}"),
            EvalError::SqrtDomain { arg } => write!(f, "sqrt of negative value {arg}"),
            EvalError::NonFinite => write!(f, "non-finite value during evaluation"),
        }
    }
}

impl core::error::Error for EvalError {}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    /// Literal of any sign; negative values become `Neg(Num(|c|))`.
    pub fn num(c: f64) -> Expr {
        if c < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-c)))
        } else {
            // folds -0.0 into 0.0
            Expr::Num(c + 0.0)
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    /// Value of a constant literal, looking through a single negation.
    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Num(c) => Some(*c),
            Expr::Neg(inner) => match **inner {
                Expr::Num(c) => Some(-c),
                _ => None,
            },
            _ => None,
        }
    }

    /// True when the tree does not mention `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Var => false,
            Expr::Num(_) => true,
            Expr::Neg(a) | Expr::Func(_, a) | Expr::Pow(a, _) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var | Expr::Num(_) => 1,
            Expr::Neg(a) | Expr::Func(_, a) | Expr::Pow(a, _) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    pub fn contains_func(&self, func: Func) -> bool {
        match self {
            Expr::Var | Expr::Num(_) => false,
            Expr::Func(g, a) => *g == func || a.contains_func(func),
            Expr::Neg(a) | Expr::Pow(a, _) => a.contains_func(func),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_func(func) || b.contains_func(func)
            }
        }
    }

    /// Evaluates the expression at `x`.
    ///
    /// Never returns a non-finite value: overflow, NaN and the domain
    /// violations of `/`, `log`, `sqrt` and negative powers of zero are
    /// reported as [`EvalError`].
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let x = finite(x)?;
        self.eval_at(x)
    }

    fn eval_at(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Var => x,
            Expr::Num(c) => *c,
            Expr::Neg(a) => -a.eval_at(x)?,
            Expr::Func(f, a) => f.apply(a.eval_at(x)?)?,
            Expr::Add(a, b) => a.eval_at(x)? + b.eval_at(x)?,
            Expr::Sub(a, b) => a.eval_at(x)? - b.eval_at(x)?,
            Expr::Mul(a, b) => a.eval_at(x)? * b.eval_at(x)?,
            Expr::Div(a, b) => {
                let num = a.eval_at(x)?;
                let den = b.eval_at(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval_at(x)?;
                if base == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                libm::pow(base, f64::from(*n))
            }
        };
        finite(v)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Var | Expr::Num(_) | Expr::Func(..) => 5,
        }
    }

    fn fmt_min(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_min(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Var => write!(f, "x"),
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_min(f, 3)
            }
            Expr::Func(g, a) => {
                write!(f, "{}(", g.name())?;
                a.fmt_min(f, 0)?;
                write!(f, ")")
            }
            Expr::Add(a, b) => binary(f, a, " + ", b, 1),
            Expr::Sub(a, b) => binary(f, a, " - ", b, 1),
            Expr::Mul(a, b) => binary(f, a, "*", b, 2),
            Expr::Div(a, b) => binary(f, a, "/", b, 2),
            Expr::Pow(a, n) => {
                a.fmt_min(f, 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

// same-precedence operators associate to the left, so the right operand
// needs one level more than the left
fn binary(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, prec: u8) -> fmt::Result {
    a.fmt_min(f, prec)?;
    write!(f, "{op}")?;
    b.fmt_min(f, prec + 1)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_min(f, 0)
    }
}
