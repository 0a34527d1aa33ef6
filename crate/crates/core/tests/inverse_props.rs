use itfe_core::expr::parse_expr;
use itfe_core::inverse::{Direction, MonotoneMap};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

/// `s*(a x + b sin(c x))` with `a > |b c|`; slope floor `a - |b c|`.
#[derive(Debug, Clone, Copy)]
struct Family {
    s: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl Family {
    fn floor(self) -> f64 {
        self.a - (self.b * self.c).abs()
    }

    fn map(self) -> MonotoneMap {
        let Family { s, a, b, c } = self;
        let f = parse_expr(&format!("{s} * ({a}*x + {b}*sin({c}*x))")).unwrap();
        let d = parse_expr(&format!("{s} * ({a} + {b}*{c}*cos({c}*x))")).unwrap();
        MonotoneMap::new(f, d, self.floor(), 10.0, 2001).unwrap()
    }
}

fn family() -> impl Strategy<Value = Family> {
    (
        prop::bool::ANY,
        0.5f64..20.0,
        -5.0f64..5.0,
        0.1f64..3.0,
        0.05f64..0.95,
    )
        .prop_map(|(neg, a, b, c, frac)| {
            // scale b so that |b c| = frac * a
            let b = b.signum() * frac * a / c;
            Family {
                s: if neg { -1.0 } else { 1.0 },
                a,
                b,
                c,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn round_trip(fam in family(), y in -1e3f64..1e3) {
        let m = fam.map();
        let x = m.invert(y, TOL).unwrap();
        let back = m.forward().eval(x).unwrap();
        prop_assert!((back - y).abs() <= TOL * y.abs().max(1.0), "f({x}) = {back} vs {y}");
    }

    #[test]
    fn inverse_is_lipschitz(fam in family(), y1 in -1e3f64..1e3, y2 in -1e3f64..1e3) {
        let m = fam.map();
        let (x1, x2) = (m.invert(y1, TOL).unwrap(), m.invert(y2, TOL).unwrap());
        let floor = fam.floor();
        let slack = 2.0 * TOL * y1.abs().max(y2.abs()).max(1.0) / floor;
        prop_assert!((x1 - x2).abs() <= (y1 - y2).abs() / floor + slack);
    }

    #[test]
    fn inverse_is_monotone(fam in family(), a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let (y1, y2) = (a.min(b), a.max(b));
        let m = fam.map();
        let (x1, x2) = (m.invert(y1, TOL).unwrap(), m.invert(y2, TOL).unwrap());
        match m.direction() {
            Direction::Increasing => prop_assert!(x1 <= x2),
            Direction::Decreasing => prop_assert!(x1 >= x2),
        }
        prop_assert_eq!(m.direction() == Direction::Increasing, fam.s > 0.0);
    }

    #[test]
    fn inverse_derivative_matches_differences(fam in family(), y in -1e3f64..1e3) {
        let m = fam.map();
        let d = m.inverse_derivative(y, TOL).unwrap();
        // step of about 1e-4 in x, whatever the local slope; Richardson
        // removes the second-order error
        let h = 1e-4 / d.abs();
        let fine = |v: f64| m.invert(v, 4.0 * f64::EPSILON * v.abs().max(1.0)).unwrap();
        let central = |h: f64| (fine(y + h) - fine(y - h)) / (2.0 * h);
        let fd = (4.0 * central(h) - central(2.0 * h)) / 3.0;
        prop_assert!((d - fd).abs() <= 1e-6 * d.abs(), "{} vs {}", d, fd);
    }
}
