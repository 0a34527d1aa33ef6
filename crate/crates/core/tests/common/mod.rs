#![allow(dead_code)]

use itfe_core::conditions::{validate, ConditionReport, Constants, ConstantsProvenance, Policy};
use itfe_core::expr::{differentiate, parse_expr};
use itfe_core::gridfn::{Grid, GridFunction};
use itfe_core::solver::{Operators, ProblemSpec, DEFAULT_INVERSE_TOL};
use rand::Rng;

pub struct Setup {
    pub ops: Operators,
    pub report: ConditionReport,
}

impl Setup {
    pub fn spec(&self) -> &ProblemSpec {
        self.ops.spec()
    }

    pub fn grid(&self) -> &Grid {
        self.ops.grid()
    }
}

pub fn setup(h: &str, f: &str, g: &str, c: Constants, policy: Policy, a: f64, n: usize) -> Setup {
    let (h, f, g) = (
        parse_expr(h).unwrap(),
        parse_expr(f).unwrap(),
        parse_expr(g).unwrap(),
    );
    let spec = ProblemSpec {
        h_prime: differentiate(&h).unwrap(),
        f_prime: differentiate(&f).unwrap(),
        g_prime: differentiate(&g).unwrap(),
        h,
        f,
        g,
        constants: c,
        interval_halfwidth: a,
        grid_n: n,
        inverse_tol: DEFAULT_INVERSE_TOL,
    };
    let report = validate(c, ConstantsProvenance::DECLARED)
        .unwrap()
        .with_policy(policy)
        .unwrap();
    Setup {
        ops: Operators::new(spec).unwrap(),
        report,
    }
}

fn constants(k: f64, alpha: f64, beta: f64, g_bound: f64) -> Constants {
    Constants {
        k,
        alpha,
        beta,
        g_bound,
    }
}

pub fn worked_example(policy: Policy, n: usize) -> Setup {
    setup(
        "sin(x) + 4*x",
        "exp(x) + 5*x",
        "cos(x)",
        constants(3.0, 5.0, 1.0, 1.0),
        policy,
        10.0,
        n,
    )
}

pub fn small_alpha(policy: Policy, n: usize) -> Setup {
    setup(
        "4*x",
        "x + 0.2*sin(x)",
        "0.5*sin(x)",
        constants(4.0, 0.8, 0.5, 0.5),
        policy,
        10.0,
        n,
    )
}

pub fn decreasing(policy: Policy, n: usize) -> Setup {
    setup(
        "-3*x - 0.5*sin(x)",
        "-2*x + 0.5*cos(x)",
        "sin(x)",
        constants(2.5, 1.5, 1.0, 1.0),
        policy,
        10.0,
        n,
    )
}

/// Piecewise-linear function with runs of random slope in `[-lip, lip]`,
/// clipped to `[-bound, bound]`.
pub fn random_lipschitz(rng: &mut impl Rng, grid: &Grid, lip: f64, bound: f64) -> GridFunction {
    let nodes = grid.nodes();
    let mut v = rng.gen_range(-bound..=bound);
    let mut values = Vec::with_capacity(nodes.len());
    values.push(v);
    let mut slope = 0.0;
    let mut run = 0usize;
    for w in nodes.windows(2) {
        if run == 0 {
            // slightly inside the limit so rounding cannot push past it
            slope = rng.gen_range(-1.0..=1.0) * lip * (1.0 - 1e-9);
            run = rng.gen_range(1..=nodes.len() / 4 + 1);
        }
        run -= 1;
        v = (v + slope * (w[1] - w[0])).clamp(-bound, bound);
        values.push(v);
    }
    GridFunction::new(grid.clone(), values).unwrap()
}

/// Arbitrary continuous function with `|Phi| <= bound`.
pub fn random_bounded(rng: &mut impl Rng, grid: &Grid, bound: f64) -> GridFunction {
    GridFunction::sample(grid, |_| rng.gen_range(-bound..=bound)).unwrap()
}

/// `sum c_k sin(w_k x + p_k)` scaled so that its Lipschitz constant is at
/// most `lip`, with its exact derivative.
pub fn random_trig(rng: &mut impl Rng, grid: &Grid, lip: f64) -> (GridFunction, GridFunction) {
    let terms: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let slope_sum: f64 = terms.iter().map(|(c, w, _)| (c * w).abs()).sum();
    let scale = rng.gen_range(0.1..1.0) * lip / slope_sum;
    let phi = GridFunction::sample(grid, |x| {
        scale
            * terms
                .iter()
                .map(|(c, w, p)| c * (w * x + p).sin())
                .sum::<f64>()
    })
    .unwrap();
    let deriv = GridFunction::sample(grid, |x| {
        scale
            * terms
                .iter()
                .map(|(c, w, p)| c * w * (w * x + p).cos())
                .sum::<f64>()
    })
    .unwrap();
    (phi, deriv)
}

/// `max |(f(x+s) - f(x-s))/(2s) - d(x)|` over nodes with `|x| <= half`.
///
/// Near the window edges `f^{-1}` can leave `[-A, A]` where only the constant
/// extension is known, so chain-rule checks stay on the inner window.
pub fn inner_mismatch(f: &GridFunction, d: &GridFunction, step: f64, half: f64) -> f64 {
    f.nodes()
        .iter()
        .filter(|x| x.abs() <= half)
        .fold(0.0, |m: f64, &x| {
            let fd = (f.eval(x + step) - f.eval(x - step)) / (2.0 * step);
            m.max((fd - d.eval(x)).abs())
        })
}
