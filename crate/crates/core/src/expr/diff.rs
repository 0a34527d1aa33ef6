use alloc::boxed::Box;
use core::fmt;

use super::{Expr, Func};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffError {
    /// `abs` of an `x`-dependent argument has no derivative at its kink.
    NotDifferentiable(Func),
}

impl fmt::Display for DiffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffError::NotDifferentiable(func) => {
                write!(
                    f,
                    "`{}` of an x-dependent argument cannot be differentiated",
                    func.name()
                )
            }
        }
    }
}

impl core::error::Error for DiffError {}

/// Symbolic derivative with respect to `x`.
///
/// The result is lightly simplified (constant folding, `0`/`1` identities);
/// it is equal to the true derivative as a function, not as a string.
pub fn differentiate(e: &Expr) -> Result<Expr, DiffError> {
    if e.is_constant() {
        return Ok(Expr::Num(0.0));
    }
    Ok(match e {
        Expr::Var => Expr::Num(1.0),
        Expr::Num(_) => Expr::Num(0.0),
        Expr::Neg(a) => neg(differentiate(a)?),
        Expr::Add(a, b) => add(differentiate(a)?, differentiate(b)?),
        Expr::Sub(a, b) => sub(differentiate(a)?, differentiate(b)?),
        Expr::Mul(a, b) => add(
            mul(differentiate(a)?, (**b).clone()),
            mul((**a).clone(), differentiate(b)?),
        ),
        Expr::Div(a, b) => div(
            sub(
                mul(differentiate(a)?, (**b).clone()),
                mul((**a).clone(), differentiate(b)?),
            ),
            pow((**b).clone(), 2),
        ),
        Expr::Pow(a, n) => mul(
            mul(Expr::num(f64::from(*n)), pow((**a).clone(), n - 1)),
            differentiate(a)?,
        ),
        Expr::Func(func, a) => {
            let inner = (**a).clone();
            let da = differentiate(a)?;
            match func {
                Func::Sin => mul(func_of(Func::Cos, inner), da),
                Func::Cos => mul(neg(func_of(Func::Sin, inner)), da),
                Func::Exp => mul(func_of(Func::Exp, inner), da),
                Func::Log => div(da, inner),
                Func::Sqrt => div(da, mul(Expr::Num(2.0), func_of(Func::Sqrt, inner))),
                Func::Abs => return Err(DiffError::NotDifferentiable(Func::Abs)),
            }
        }
    })
}

fn is(e: &Expr, c: f64) -> bool {
    e.as_const() == Some(c)
}

fn fold(v: f64) -> Option<Expr> {
    v.is_finite().then(|| Expr::num(v))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Neg(inner) => *inner,
        Expr::Num(c) => Expr::num(-c),
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(e) = fold(x + y) {
            return e;
        }
    }
    if is(&a, 0.0) {
        return b;
    }
    if is(&b, 0.0) {
        return a;
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(e) = fold(x - y) {
            return e;
        }
    }
    if is(&b, 0.0) {
        return a;
    }
    if is(&a, 0.0) {
        return neg(b);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is(&a, 0.0) || is(&b, 0.0) {
        return Expr::Num(0.0);
    }
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(e) = fold(x * y) {
            return e;
        }
    }
    if is(&a, 1.0) {
        return b;
    }
    if is(&b, 1.0) {
        return a;
    }
    if is(&a, -1.0) {
        return neg(b);
    }
    if is(&b, -1.0) {
        return neg(a);
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is(&b, 1.0) {
        return a;
    }
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if y != 0.0 {
            if let Some(e) = fold(x / y) {
                return e;
            }
        }
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn pow(a: Expr, n: i32) -> Expr {
    match n {
        0 => Expr::Num(1.0),
        1 => a,
        _ => Expr::Pow(Box::new(a), n),
    }
}

fn func_of(f: Func, a: Expr) -> Expr {
    Expr::func(f, a)
}
