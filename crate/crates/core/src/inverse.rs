//! Inverses of strictly monotone maps with derivative bounded away from 0.
//!
//! If `|m'(x)| >= floor > 0` everywhere, `m` is a bijection of the real
//! line and its inverse is Lipschitz with constant `1/floor`. Inversion
//! expands a bracket geometrically until it straddles the target and then
//! runs Newton's method, falling back to bisection whenever a Newton step
//! leaves the bracket or fails to reduce the residual.

use core::fmt;

use crate::expr::{EvalError, Expr};

/// Bracket doublings allowed before giving up.
pub const MAX_DOUBLINGS: usize = 200;
const MAX_REFINE: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InverseError {
    /// The declared floor is not a positive finite number.
    BadFloor(f64),
    /// `|derivative|` dropped below the declared floor at a probe point.
    FloorViolated {
        x: f64,
        derivative: f64,
        floor: f64,
    },
    /// No sign change found after [`MAX_DOUBLINGS`] doublings.
    BracketExpansion {
        y: f64,
    },
    /// The bracket collapsed to adjacent floats before reaching `tol`.
    Stalled {
        y: f64,
        x: f64,
        residual: f64,
    },
    Eval {
        x: f64,
        source: EvalError,
    },
}

impl fmt::Display for InverseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InverseError::BadFloor(v) => write!(f, "derivative floor must be positive, got {v}"),
            InverseError::FloorViolated {
                x,
                derivative,
                floor,
            } => write!(
                f,
                "|derivative| = {derivative} at x = {x} is below the declared floor {floor}"
            ),
            InverseError::BracketExpansion { y } => {
                write!(f, "could not bracket a preimage of {y}")
            }
            InverseError::Stalled { y, x, residual } => write!(
                f,
                "inversion of {y} stalled at x = {x} with residual {residual}"
            ),
            InverseError::Eval { x, source } => write!(f, "evaluation failed at x = {x}: {source}"),
        }
    }
}

impl core::error::Error for InverseError {}

/// A strictly monotone map together with its derivative and floor.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneMap {
    forward: Expr,
    derivative: Expr,
    direction: Direction,
    floor: f64,
}

impl MonotoneMap {
    /// Checks `|derivative| >= floor` on `probe_points` uniform points of
    /// `[-probe_halfwidth, probe_halfwidth]` and takes the direction from
    /// the sign of the derivative at 0.
    pub fn new(
        forward: Expr,
        derivative: Expr,
        floor: f64,
        probe_halfwidth: f64,
        probe_points: usize,
    ) -> Result<MonotoneMap, InverseError> {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(InverseError::BadFloor(floor));
        }
        let eval_d = |x: f64| {
            derivative
                .eval(x)
                .map_err(|source| InverseError::Eval { x, source })
        };
        let d0 = eval_d(0.0)?;
        let direction = if d0 > 0.0 {
            Direction::Increasing
        } else {
            Direction::Decreasing
        };
        let n = probe_points.max(2);
        let slack = floor * (1.0 - 1e-12);
        for i in 0..n {
            let x = probe_halfwidth * ((2 * i) as f64 - (n - 1) as f64) / (n - 1) as f64;
            let d = eval_d(x)?;
            if d * direction.sign() < slack {
                return Err(InverseError::FloorViolated {
                    x,
                    derivative: d,
                    floor,
                });
            }
        }
        if d0.abs() < slack {
            return Err(InverseError::FloorViolated {
                x: 0.0,
                derivative: d0,
                floor,
            });
        }
        Ok(MonotoneMap {
            forward,
            derivative,
            direction,
            floor,
        })
    }

    pub fn forward(&self) -> &Expr {
        &self.forward
    }

    pub fn derivative(&self) -> &Expr {
        &self.derivative
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    fn value(&self, x: f64) -> Result<f64, InverseError> {
        self.forward
            .eval(x)
            .map_err(|source| InverseError::Eval { x, source })
    }

    fn slope(&self, x: f64) -> Result<f64, InverseError> {
        self.derivative
            .eval(x)
            .map_err(|source| InverseError::Eval { x, source })
    }

    /// Returns `x` with `|forward(x) - y| <= tol`.
    pub fn invert(&self, y: f64, tol: f64) -> Result<f64, InverseError> {
        let s = self.direction.sign();
        // residual oriented so that it increases with x
        let r = |x: f64| -> Result<f64, InverseError> { Ok(s * (self.value(x)? - y)) };

        let x0 = s * y / self.floor;
        let r0 = r(x0)?;
        if r0.abs() <= tol {
            return Ok(x0);
        }
        let (mut lo, mut hi, mut r_lo, mut r_hi);
        let mut step = x0.abs().max(1.0);
        let mut doublings = 0;
        if r0 < 0.0 {
            lo = x0;
            r_lo = r0;
            loop {
                hi = x0 + step;
                r_hi = r(hi)?;
                if r_hi >= 0.0 {
                    break;
                }
                lo = hi;
                r_lo = r_hi;
                step *= 2.0;
                doublings += 1;
                if doublings >= MAX_DOUBLINGS {
                    return Err(InverseError::BracketExpansion { y });
                }
            }
        } else {
            hi = x0;
            r_hi = r0;
            loop {
                lo = x0 - step;
                r_lo = r(lo)?;
                if r_lo <= 0.0 {
                    break;
                }
                hi = lo;
                r_hi = r_lo;
                step *= 2.0;
                doublings += 1;
                if doublings >= MAX_DOUBLINGS {
                    return Err(InverseError::BracketExpansion { y });
                }
            }
        }
        if r_lo.abs() <= tol {
            return Ok(lo);
        }
        if r_hi.abs() <= tol {
            return Ok(hi);
        }

        // invariant: r(lo) < 0 < r(hi)
        let mut x = if r0 < 0.0 { lo } else { hi };
        let mut rx = if r0 < 0.0 { r_lo } else { r_hi };
        for _ in 0..MAX_REFINE {
            let d = s * self.slope(x)?;
            let newton = x - rx / d;
            let mut next = None;
            if newton > lo && newton < hi && newton.is_finite() {
                let rn = r(newton)?;
                if rn.abs() < rx.abs() {
                    next = Some((newton, rn));
                }
            }
            let (xn, rn) = match next {
                Some(p) => p,
                None => {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        return Err(InverseError::Stalled {
                            y,
                            x,
                            residual: rx.abs(),
                        });
                    }
                    (mid, r(mid)?)
                }
            };
            x = xn;
            rx = rn;
            if rx.abs() <= tol {
                return Ok(x);
            }
            if rx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
        }
        Err(InverseError::Stalled {
            y,
            x,
            residual: rx.abs(),
        })
    }

    /// `1 / forward'(invert(y))`.
    pub fn inverse_derivative(&self, y: f64, tol: f64) -> Result<f64, InverseError> {
        let x = self.invert(y, tol)?;
        self.derivative_at_preimage(x)
    }

    /// `1 / forward'(x)` for an already inverted point `x`.
    pub fn derivative_at_preimage(&self, x: f64) -> Result<f64, InverseError> {
        Ok(1.0 / self.slope(x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    const TOL: f64 = 1e-12;

    fn map(f: &str, d: &str, floor: f64) -> MonotoneMap {
        MonotoneMap::new(
            parse_expr(f).unwrap(),
            parse_expr(d).unwrap(),
            floor,
            10.0,
            2001,
        )
        .unwrap()
    }

    fn h() -> MonotoneMap {
        map("sin(x) + 4*x", "cos(x) + 4", 3.0)
    }

    fn f() -> MonotoneMap {
        map("exp(x) + 5*x", "exp(x) + 5", 5.0)
    }

    #[test]
    fn known_preimages() {
        assert_eq!(h().invert(0.0, TOL).unwrap(), 0.0);
        assert!(f().invert(1.0, TOL).unwrap().abs() <= TOL);
        let y = libm::exp(1.0) + 5.0;
        let x = f().invert(y, TOL).unwrap();
        assert!((x - 1.0).abs() <= TOL, "{x}");
    }

    #[test]
    fn inverse_derivative_examples() {
        let lin = map("4*x", "4", 4.0);
        for y in [-3.0, 0.0, 17.5] {
            assert_eq!(lin.inverse_derivative(y, TOL).unwrap(), 0.25);
        }
        assert_eq!(h().inverse_derivative(0.0, TOL).unwrap(), 0.2);
        let d = f().inverse_derivative(1.0, TOL).unwrap();
        assert!((d - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn decreasing_maps() {
        let m = map("-3*x - sin(x)", "-3 - cos(x)", 2.0);
        assert_eq!(m.direction(), Direction::Decreasing);
        for y in [-50.0, -1.0, 0.3, 42.0] {
            let x = m.invert(y, TOL).unwrap();
            assert!((m.forward().eval(x).unwrap() - y).abs() <= TOL);
        }
    }

    #[test]
    fn far_targets_need_many_doublings() {
        let m = map("x + 1000000", "1", 1.0);
        let x = m.invert(0.0, TOL).unwrap();
        assert_eq!(x, -1_000_000.0);
    }

    #[test]
    fn floor_violation_is_a_configuration_error() {
        let err = MonotoneMap::new(
            parse_expr("sin(x) + 2*x").unwrap(),
            parse_expr("cos(x) + 2").unwrap(),
            3.0,
            10.0,
            101,
        )
        .unwrap_err();
        assert!(matches!(err, InverseError::FloorViolated { .. }));
        let err = MonotoneMap::new(
            parse_expr("x").unwrap(),
            parse_expr("1").unwrap(),
            0.0,
            1.0,
            3,
        )
        .unwrap_err();
        assert_eq!(err, InverseError::BadFloor(0.0));
    }

    #[test]
    fn bracket_failure_for_lying_floor() {
        // derivative claims 1 but the forward map is bounded
        let m = MonotoneMap {
            forward: parse_expr("sin(x)").unwrap(),
            derivative: parse_expr("1").unwrap(),
            direction: Direction::Increasing,
            floor: 1.0,
        };
        assert!(matches!(
            m.invert(5.0, TOL),
            Err(InverseError::BracketExpansion { .. }) | Err(InverseError::Eval { .. })
        ));
    }

    #[test]
    fn non_finite_forward_value() {
        let m = map("exp(x) + 5*x", "exp(x) + 5", 5.0);
        assert!(matches!(
            m.invert(1e308, TOL),
            Err(InverseError::Eval { .. })
        ));
    }
}
