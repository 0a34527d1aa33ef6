//! Piecewise-linear functions on a finite grid, extended by constants.
//!
//! A [`GridFunction`] stands in for a bounded continuous function on the
//! whole real line: linear interpolation between nodes and the endpoint
//! values outside `[nodes[0], nodes[n-1]]`. For this representation the
//! sup norm, the sup distance and the Lipschitz constant are all computed
//! exactly from the stored values.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridError {
    TooFewNodes(usize),
    LengthMismatch { nodes: usize, values: usize },
    NodesNotIncreasing { index: usize },
    NonFiniteNode { index: usize },
    NonFiniteValue { index: usize, x: f64 },
    BadInterval(f64),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::TooFewNodes(n) => write!(f, "a grid needs at least 2 nodes, got {n}"),
            GridError::LengthMismatch { nodes, values } => {
                write!(f, "{nodes} nodes but {values} values")
            }
            GridError::NodesNotIncreasing { index } => {
                write!(f, "nodes must be strictly increasing (index {index})")
            }
            GridError::NonFiniteNode { index } => write!(f, "node {index} is not finite"),
            GridError::NonFiniteValue { index, x } => {
                write!(f, "non-finite value at node {index} (x = {x})")
            }
            GridError::BadInterval(a) => {
                write!(
                    f,
                    "interval half-width must be finite and positive, got {a}"
                )
            }
        }
    }
}

impl core::error::Error for GridError {}

/// Node set shared between grid functions.
///
/// Functions built on the same `Grid` (or on equal node lists) compare
/// node-wise in [`sup_dist`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Arc<[f64]>,
    // (first node, spacing) when the nodes are uniform
    uniform: Option<(f64, f64)>,
}

impl Grid {
    /// `n` equally spaced nodes on `[-a, a]`, symmetric about 0 bit for bit.
    pub fn uniform(a: f64, n: usize) -> Result<Grid, GridError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(GridError::BadInterval(a));
        }
        if n < 2 {
            return Err(GridError::TooFewNodes(n));
        }
        let m = (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| a * ((2 * i) as f64 - m) / m).collect();
        Ok(Grid {
            nodes: nodes.into(),
            uniform: Some((-a, 2.0 * a / m)),
        })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Grid, GridError> {
        if nodes.len() < 2 {
            return Err(GridError::TooFewNodes(nodes.len()));
        }
        if let Some(index) = nodes.iter().position(|x| !x.is_finite()) {
            return Err(GridError::NonFiniteNode { index });
        }
        if let Some(index) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(GridError::NodesNotIncreasing { index: index + 1 });
        }
        Ok(Grid {
            nodes: nodes.into(),
            uniform: None,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.nodes[0]
    }

    pub fn upper(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Largest gap between adjacent nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    fn same_nodes(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.nodes, &other.nodes) || self.nodes == other.nodes
    }

    /// Index `i` with `nodes[i] <= x < nodes[i + 1]`, for `x` strictly inside.
    fn cell(&self, x: f64) -> usize {
        let last = self.nodes.len() - 2;
        let guess = match self.uniform {
            Some((start, step)) => {
                let g = libm::floor((x - start) / step);
                if g <= 0.0 {
                    0
                } else {
                    (g as usize).min(last)
                }
            }
            None => match self.nodes.binary_search_by(|n| n.total_cmp(&x)) {
                Ok(i) => i.min(last),
                Err(i) => i.saturating_sub(1).min(last),
            },
        };
        // the arithmetic guess can be one cell off near node boundaries
        let mut i = guess;
        while i > 0 && self.nodes[i] > x {
            i -= 1;
        }
        while i < last && self.nodes[i + 1] <= x {
            i += 1;
        }
        i
    }
}

/// Piecewise-linear function with constant extension.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<GridFunction, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                nodes: grid.len(),
                values: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFiniteValue {
                index,
                x: grid.nodes[index],
            });
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `sampler` at every node of `grid`.
    pub fn sample(
        grid: &Grid,
        mut sampler: impl FnMut(f64) -> f64,
    ) -> Result<GridFunction, GridError> {
        let values = grid.nodes.iter().map(|&x| sampler(x)).collect();
        GridFunction::new(grid.clone(), values)
    }

    /// Like [`GridFunction::sample`] for samplers that can fail.
    pub fn try_sample<E>(
        grid: &Grid,
        mut sampler: impl FnMut(f64) -> Result<f64, E>,
    ) -> Result<Result<GridFunction, GridError>, E> {
        let values = grid
            .nodes
            .iter()
            .map(|&x| sampler(x))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(GridFunction::new(grid.clone(), values))
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<GridFunction, GridError> {
        GridFunction::new(grid.clone(), alloc::vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `x`: linear between nodes, the endpoint value outside.
    pub fn eval(&self, x: f64) -> f64 {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        if !(x > nodes[0]) {
            // also catches NaN, which clamps to the left end
            return self.values[0];
        }
        if x >= nodes[n - 1] {
            return self.values[n - 1];
        }
        let i = self.grid.cell(x);
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if x == x0 {
            return v0;
        }
        let t = (x - x0) / (x1 - x0);
        let v = v0 + t * (v1 - v0);
        // rounding must not leave the segment's range
        v.clamp(v0.min(v1), v0.max(v1))
    }

    /// `max |values|`, the exact sup norm of the represented function.
    pub fn bound(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest slope between adjacent nodes, the exact Lipschitz constant of
    /// the represented function.
    pub fn lipschitz(&self) -> f64 {
        self.grid
            .nodes()
            .windows(2)
            .zip(self.values.windows(2))
            .fold(0.0, |m, (x, v)| {
                m.max(((v[1] - v[0]) / (x[1] - x[0])).abs())
            })
    }

    /// Maps every value through `op`, keeping the grid.
    pub fn map(&self, mut op: impl FnMut(f64) -> f64) -> Result<GridFunction, GridError> {
        GridFunction::new(
            self.grid.clone(),
            self.values.iter().map(|&v| op(v)).collect(),
        )
    }
}

/// `n` uniformly spaced samples of `sampler` on `[-a, a]`.
pub fn make_grid(
    a: f64,
    n: usize,
    sampler: impl FnMut(f64) -> f64,
) -> Result<GridFunction, GridError> {
    GridFunction::sample(&Grid::uniform(a, n)?, sampler)
}

/// Sup distance between two grid functions.
///
/// On a shared node set this is the node-wise maximum. Otherwise the two
/// functions are compared on the union of their nodes, where the
/// difference of two piecewise-linear functions attains its sup.
pub fn sup_dist(a: &GridFunction, b: &GridFunction) -> f64 {
    if a.grid.same_nodes(&b.grid) {
        return a
            .values
            .iter()
            .zip(&b.values)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()));
    }
    let (na, nb) = (a.nodes(), b.nodes());
    let (mut i, mut j) = (0, 0);
    let mut m: f64 = 0.0;
    while i < na.len() || j < nb.len() {
        let x = match (na.get(i), nb.get(j)) {
            (Some(&p), Some(&q)) if p <= q => {
                i += 1;
                if p == q {
                    j += 1;
                }
                p
            }
            (Some(_), Some(&q)) => {
                j += 1;
                q
            }
            (Some(&p), None) => {
                i += 1;
                p
            }
            (None, Some(&q)) => {
                j += 1;
                q
            }
            (None, None) => unreachable!(),
        };
        m = m.max((a.eval(x) - b.eval(x)).abs());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn on(nodes: Vec<f64>, values: Vec<f64>) -> GridFunction {
        GridFunction::new(Grid::from_nodes(nodes).unwrap(), values).unwrap()
    }

    #[test]
    fn make_grid_examples() {
        let g = make_grid(1.0, 3, |x| x).unwrap();
        assert_eq!(g.nodes(), &[-1.0, 0.0, 1.0]);
        assert_eq!(g.values(), &[-1.0, 0.0, 1.0]);

        let z = make_grid(2.0, 5, |_| 0.0).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));

        let c = make_grid(1.0, 3, libm::cos).unwrap();
        assert_eq!(c.values(), &[libm::cos(1.0), 1.0, libm::cos(1.0)]);
    }

    #[test]
    fn make_grid_errors() {
        assert_eq!(make_grid(1.0, 1, |x| x), Err(GridError::TooFewNodes(1)));
        assert_eq!(make_grid(0.0, 3, |x| x), Err(GridError::BadInterval(0.0)));
        assert!(matches!(
            make_grid(1.0, 3, |x| 1.0 / x),
            Err(GridError::NonFiniteValue { index: 1, .. })
        ));
    }

    #[test]
    fn uniform_nodes_are_symmetric() {
        let g = Grid::uniform(10.0, 4001).unwrap();
        let n = g.nodes();
        assert_eq!(n[0], -10.0);
        assert_eq!(n[4000], 10.0);
        assert_eq!(n[2000], 0.0);
        for i in 0..n.len() {
            assert_eq!(n[i], -n[n.len() - 1 - i]);
        }
    }

    #[test]
    fn eval_examples() {
        let g = make_grid(1.0, 3, |x| x).unwrap();
        assert_eq!(g.eval(0.5), 0.5);
        assert_eq!(g.eval(2.0), 1.0);
        assert_eq!(g.eval(-7.0), -1.0);
        let h = on(vec![0.0, 1.0], vec![0.0, 2.0]);
        assert_eq!(h.eval(0.25), 0.5);
    }

    #[test]
    fn eval_at_nodes_is_exact() {
        let g = make_grid(3.0, 301, |x| libm::sin(3.0 * x)).unwrap();
        for (x, v) in g.nodes().iter().zip(g.values()) {
            assert_eq!(g.eval(*x), *v);
        }
    }

    #[test]
    fn sup_dist_examples() {
        let a = make_grid(1.0, 3, |x| x).unwrap();
        assert_eq!(sup_dist(&a, &a.clone()), 0.0);
        let zero = make_grid(1.0, 3, |_| 0.0).unwrap();
        let c = make_grid(1.0, 3, |_| -2.5).unwrap();
        assert_eq!(sup_dist(&zero, &c), 2.5);
        let b = make_grid(1.0, 3, |x| -x).unwrap();
        assert_eq!(sup_dist(&a, &b), 2.0);
    }

    #[test]
    fn sup_dist_on_different_grids_uses_union_of_nodes() {
        // a is a hat peaking at 0; b is zero on a grid without a node at 0
        let a = on(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]);
        let b = on(vec![-1.0, 0.5, 1.0], vec![0.0, 0.0, 0.0]);
        assert_eq!(sup_dist(&a, &b), 1.0);
        assert_eq!(sup_dist(&b, &a), 1.0);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(make_grid(1.0, 5, |_| 4.0).unwrap().lipschitz(), 0.0);
        assert_eq!(make_grid(1.0, 5, |x| x).unwrap().lipschitz(), 1.0);
        assert_eq!(on(vec![0.0, 1.0], vec![0.0, 3.0]).lipschitz(), 3.0);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(make_grid(1.0, 5, |_| 0.0).unwrap().bound(), 0.0);
        assert_eq!(make_grid(1.0, 5, |x| x).unwrap().bound(), 1.0);
        assert_eq!(on(vec![0.0, 1.0], vec![-4.0, 2.0]).bound(), 4.0);
    }

    #[test]
    fn invalid_node_lists() {
        assert_eq!(
            Grid::from_nodes(vec![0.0, 1.0, 1.0]),
            Err(GridError::NodesNotIncreasing { index: 2 })
        );
        assert_eq!(
            Grid::from_nodes(vec![0.0, f64::INFINITY]),
            Err(GridError::NonFiniteNode { index: 1 })
        );
        let g = Grid::from_nodes(vec![0.0, 1.0]).unwrap();
        assert_eq!(
            GridFunction::new(g, vec![1.0]),
            Err(GridError::LengthMismatch {
                nodes: 2,
                values: 1
            })
        );
    }
}
