//! Sampled functions on a time scale and the delta calculus on them.
//!
//! A [`Grid`] keeps every isolated point and every interval endpoint of the
//! scale as a node and fills intervals uniformly. Each cell between two
//! consecutive nodes is either *continuous* (both nodes in one interval) or
//! a *jump* (the left node is right-scattered and the cell length is its
//! graininess).

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::timescale::{Segment, TimeScale};

/// Computational nodes aligned with a time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    scale: TimeScale,
    step: f64,
    nodes: Vec<f64>,
    continuous: Vec<bool>,
}

impl Grid {
    /// Builds nodes with spacing at most `step` inside every interval.
    pub fn new(scale: &TimeScale, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Invalid(format!("step must be positive, got {step}")));
        }
        let mut nodes = Vec::new();
        let mut continuous = Vec::new();
        for seg in scale.segments() {
            if !nodes.is_empty() {
                // the previous node is right-scattered
                continuous.push(false);
            }
            match *seg {
                Segment::Point { t } => nodes.push(t),
                Segment::Interval { lo, hi } => {
                    let cells = ((hi - lo) / step - 1e-9).ceil().max(1.0) as usize;
                    nodes.push(lo);
                    for k in 1..cells {
                        nodes.push(lo + (hi - lo) * (k as f64 / cells as f64));
                        continuous.push(true);
                    }
                    nodes.push(hi);
                    continuous.push(true);
                }
            }
        }
        Ok(Grid {
            scale: scale.clone(),
            step,
            nodes,
            continuous,
        })
    }

    pub fn scale(&self) -> &TimeScale {
        &self.scale
    }

    pub fn step(&self) -> f64 {
        self.step
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

    /// Whether cell `i` (from node `i` to node `i + 1`) lies inside an interval.
    pub fn is_continuous_cell(&self, i: usize) -> bool {
        self.continuous[i]
    }

    /// Exact lookup of a node.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        match self.nodes.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => Ok(i),
            Err(_) if self.scale.contains(t) => Err(Error::NotOnGrid(t)),
            Err(_) => Err(Error::NotInScale(t)),
        }
    }

    /// The grid on `T ∩ [nodes[i], max]`.
    pub fn tail(&self, i: usize) -> Result<Grid> {
        if i == 0 {
            return Ok(self.clone());
        }
        Ok(Grid {
            scale: self.scale.restrict(self.nodes[i], self.scale.max())?,
            step: self.step,
            nodes: self.nodes[i..].to_vec(),
            continuous: self.continuous[i..].to_vec(),
        })
    }

    /// The grid on `T^κ`.
    pub fn kappa(&self) -> Grid {
        let n = self.nodes.len();
        if n > 1 && !self.continuous[n - 2] {
            Grid {
                scale: self.scale.kappa(),
                step: self.step,
                nodes: self.nodes[..n - 1].to_vec(),
                continuous: self.continuous[..n - 2].to_vec(),
            }
        } else {
            self.clone()
        }
    }

    /// Node indices that lie in `T^κ`.
    pub fn kappa_len(&self) -> usize {
        self.kappa().len()
    }
}

/// Function values on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value at t = {}",
                grid.nodes[i]
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = grid
            .nodes
            .iter()
            .map(|&t| f(t))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.index_of(t)?])
    }

    /// The restriction to nodes `t ≥ nodes[i]`.
    pub fn tail(&self, i: usize) -> Result<GridFunction> {
        Ok(GridFunction {
            grid: self.grid.tail(i)?,
            values: self.values[i..].to_vec(),
        })
    }

    /// Pointwise `self + c * other` on the same grid.
    pub fn axpy(&self, c: f64, other: &GridFunction) -> Result<GridFunction> {
        if self.grid.nodes != other.grid.nodes {
            return Err(Error::Invalid(
                "grid functions live on different grids".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        GridFunction::new(self.grid.clone(), values)
    }

    /// Sup-norm distance to `other` over all shared nodes.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if self.grid.nodes != other.grid.nodes {
            return Err(Error::Invalid(
                "grid functions live on different grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Samples a function of `t` on the grid of `scale` with the given step.
pub fn sample(scale: &TimeScale, expr: &Expr, step: f64) -> Result<GridFunction> {
    if expr.mentions(Var::Y) {
        return Err(Error::Invalid(format!(
            "`{expr}` must be a function of t only"
        )));
    }
    let grid = Grid::new(scale, step)?;
    GridFunction::from_fn(grid, |t| expr.eval(t, 0.0))
}

/// Finite-difference recipe for the delta derivative at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stencil {
    /// `(f(σ(t)) − f(t)) / μ(t)` at a right-scattered node.
    Jump { at: usize, next: usize, mu: f64 },
    /// Centered quotient across an interior right-dense node.
    Central { prev: usize, next: usize },
    /// Second-order one-sided quotient using nodes `i`, `j`, `k` (the first
    /// one is where the derivative is taken).
    ThreePoint { i: usize, j: usize, k: usize },
    /// First-order quotient between two nodes.
    TwoPoint { from: usize, to: usize },
}

impl Stencil {
    pub(crate) fn for_node(grid: &Grid, i: usize) -> Result<Stencil> {
        let n = grid.len();
        let x = &grid.nodes;
        let cont = &grid.continuous;
        let right_dense = i + 1 < n && cont[i];
        if i + 1 < n && !cont[i] {
            return Ok(Stencil::Jump {
                at: i,
                next: i + 1,
                mu: x[i + 1] - x[i],
            });
        }
        if right_dense {
            if i > 0 && cont[i - 1] {
                return Ok(Stencil::Central {
                    prev: i - 1,
                    next: i + 1,
                });
            }
            if i + 2 < n && cont[i + 1] {
                return Ok(Stencil::ThreePoint {
                    i,
                    j: i + 1,
                    k: i + 2,
                });
            }
            return Ok(Stencil::TwoPoint { from: i, to: i + 1 });
        }
        // i is the maximum: it belongs to T^κ only when left-dense.
        if i == 0 || !cont[i - 1] {
            return Err(Error::OutsideKappa(x[i]));
        }
        if i >= 2 && cont[i - 2] {
            return Ok(Stencil::ThreePoint {
                i,
                j: i - 1,
                k: i - 2,
            });
        }
        Ok(Stencil::TwoPoint { from: i - 1, to: i })
    }

    /// Nodes whose values the stencil reads.
    pub(crate) fn support(&self) -> Vec<usize> {
        match *self {
            Stencil::Jump { at, next, .. } => vec![at, next],
            Stencil::Central { prev, next } => vec![prev, next],
            Stencil::ThreePoint { i, j, k } => vec![i, j, k],
            Stencil::TwoPoint { from, to } => vec![from, to],
        }
    }

    pub(crate) fn apply(&self, x: &[f64], value: impl Fn(usize) -> f64) -> f64 {
        match *self {
            Stencil::Jump { at, next, mu } => (value(next) - value(at)) / mu,
            Stencil::Central { prev, next } => (value(next) - value(prev)) / (x[next] - x[prev]),
            Stencil::TwoPoint { from, to } => (value(to) - value(from)) / (x[to] - x[from]),
            Stencil::ThreePoint { i, j, k } => {
                let h1 = x[j] - x[i];
                let h2 = x[k] - x[i];
                let c0 = -(h1 + h2) / (h1 * h2);
                let c1 = h2 / (h1 * (h2 - h1));
                let c2 = -h1 / (h2 * (h2 - h1));
                c0 * value(i) + c1 * value(j) + c2 * value(k)
            }
        }
    }
}

/// Delta (Hilger) derivative of `g` at the node `t ∈ T^κ`.
pub fn delta_derivative(g: &GridFunction, t: f64) -> Result<f64> {
    let i = g.grid.index_of(t)?;
    let stencil = Stencil::for_node(&g.grid, i)?;
    Ok(stencil.apply(&g.grid.nodes, |k| g.values[k]))
}

/// Delta derivative at every node of `T^κ`, as a function on the κ grid.
pub fn delta_derivative_grid(g: &GridFunction) -> Result<GridFunction> {
    let kappa = g.grid.kappa();
    let values = (0..kappa.len())
        .map(|i| {
            let stencil = Stencil::for_node(&g.grid, i)?;
            Ok(stencil.apply(&g.grid.nodes, |k| g.values[k]))
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(kappa, values)
}

fn cell_integral(g: &GridFunction, i: usize) -> f64 {
    let x = &g.grid.nodes;
    let width = x[i + 1] - x[i];
    if g.grid.continuous[i] {
        0.5 * width * (g.values[i] + g.values[i + 1])
    } else {
        width * g.values[i]
    }
}

fn range_indices(g: &GridFunction, a: f64, b: f64) -> Result<(usize, usize)> {
    if a > b {
        return Err(Error::BadRange(format!("integration bounds {a} > {b}")));
    }
    Ok((g.grid.index_of(a)?, g.grid.index_of(b)?))
}

/// `∫_a^b g(t) Δt`: graininess-weighted values at right-scattered nodes plus
/// composite trapezoid over interval cells.
pub fn delta_integral(g: &GridFunction, a: f64, b: f64) -> Result<f64> {
    let (ia, ib) = range_indices(g, a, b)?;
    Ok((ia..ib).map(|i| cell_integral(g, i)).sum())
}

/// `t ↦ ∫_a^t g Δs` on the nodes `t ≥ a`.
pub fn delta_antiderivative(g: &GridFunction, a: f64) -> Result<GridFunction> {
    let ia = g.grid.index_of(a)?;
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(g.grid.len() - ia);
    values.push(0.0);
    for i in ia..g.grid.len() - 1 {
        acc += cell_integral(g, i);
        values.push(acc);
    }
    GridFunction::new(g.grid.tail(ia)?, values)
}

/// Outcome of comparing a delta integral with the Riemann integral of the
/// piecewise-constant extension across the gaps of the scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRiemannComparison {
    pub delta_value: f64,
    pub extension_value: f64,
    pub holds: bool,
}

/// Checks `∫_a^b g Δt ≤ ∫_a^b G(s) ds`, where `G` extends `g` to the real
/// interval by holding `g(t)` constant on each gap `(t, σ(t))`.
///
/// Only defined for nondecreasing samples.
pub fn compare_delta_riemann(g: &GridFunction, a: f64, b: f64) -> Result<DeltaRiemannComparison> {
    let (ia, ib) = range_indices(g, a, b)?;
    let x = &g.grid.nodes;
    for i in ia..ib {
        if g.values[i + 1] < g.values[i] {
            return Err(Error::NotIncreasing(x[i + 1]));
        }
    }
    let delta_value = delta_integral(g, a, b)?;

    // Walk the real line piece by piece.
    let mut extension_value = 0.0;
    for i in ia..ib {
        let (s0, s1) = (x[i], x[i + 1]);
        let piece = if g.grid.continuous[i] {
            // G = g on the interval; g is known through its linear interpolant
            (s1 - s0) * (g.values[i] + g.values[i + 1]) / 2.0
        } else {
            // G ≡ g(s0) on the gap (s0, σ(s0)) = (s0, s1)
            (s1 - s0) * g.values[i]
        };
        extension_value += piece;
    }
    let tol = 1e-9 + 1e-9 * extension_value.abs();
    Ok(DeltaRiemannComparison {
        delta_value,
        extension_value,
        holds: delta_value <= extension_value + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn expr(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn mixed() -> TimeScale {
        TimeScale::new(vec![Segment::interval(0.0, 1.0), Segment::point(2.0)]).unwrap()
    }

    #[test]
    fn sampling_examples() {
        let t = TimeScale::points(&[0.0, 1.0, 2.0]).unwrap();
        let g = sample(&t, &expr("t^2"), 0.3).unwrap();
        assert_eq!(g.values(), &[0.0, 1.0, 4.0]);

        let g = sample(&TimeScale::interval(0.0, 1.0).unwrap(), &expr("1"), 0.5).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.values(), &[1.0, 1.0, 1.0]);

        let g = sample(&mixed(), &expr("t"), 1.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 1.0, 2.0]);
        assert_eq!(g.values(), &[0.0, 1.0, 2.0]);
        assert!(!g.grid().is_continuous_cell(1));

        assert!(sample(&mixed(), &expr("y"), 1.0).is_err());
        assert!(matches!(
            sample(&mixed(), &expr("1/(t-2)"), 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn grid_invariants() {
        let t = TimeScale::new(vec![
            Segment::interval(0.0, 1.0),
            Segment::point(1.5),
            Segment::interval(2.0, 2.7),
        ])
        .unwrap();
        let g = Grid::new(&t, 0.1).unwrap();
        let x = g.nodes();
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        assert!(x.iter().all(|&s| t.contains(s)));
        for must in [0.0, 1.0, 1.5, 2.0, 2.7] {
            assert!(g.index_of(must).is_ok());
        }
        for i in 0..x.len() - 1 {
            if g.is_continuous_cell(i) {
                assert!(x[i + 1] - x[i] <= 0.1 + 1e-15);
            }
        }
        assert_eq!(g.index_of(0.55), Err(Error::NotOnGrid(0.55)));
        assert_eq!(g.index_of(1.7), Err(Error::NotInScale(1.7)));
        assert!(Grid::new(&t, 0.0).is_err());
    }

    #[test]
    fn derivative_examples() {
        let z = TimeScale::points(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = sample(&z, &expr("t^2"), 1.0).unwrap();
        assert_eq!(delta_derivative(&g, 3.0).unwrap(), 7.0);
        assert_eq!(delta_derivative(&g, 4.0), Err(Error::OutsideKappa(4.0)));

        let g = sample(&TimeScale::interval(0.0, 1.0).unwrap(), &expr("t^2"), 1e-3).unwrap();
        assert!((delta_derivative(&g, 0.5).unwrap() - 1.0).abs() < 1e-6);
        // one-sided at both interval ends, exact for quadratics
        assert!(delta_derivative(&g, 0.0).unwrap().abs() < 1e-9);
        assert!((delta_derivative(&g, 1.0).unwrap() - 2.0).abs() < 1e-9);

        let g = sample(&mixed(), &expr("t"), 0.1).unwrap();
        assert_eq!(delta_derivative(&g, 1.0).unwrap(), 1.0);
        assert_eq!(delta_derivative(&g, 2.0), Err(Error::OutsideKappa(2.0)));

        let single = TimeScale::points(&[1.0]).unwrap();
        let g = sample(&single, &expr("t"), 1.0).unwrap();
        assert!(delta_derivative(&g, 1.0).is_err());
    }

    #[test]
    fn integral_examples() {
        let z = TimeScale::points(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let g = sample(&z, &expr("1"), 1.0).unwrap();
        assert_eq!(delta_integral(&g, 0.0, 3.0).unwrap(), 3.0);

        let g = sample(&TimeScale::interval(0.0, 1.0).unwrap(), &expr("t"), 1e-3).unwrap();
        assert!((delta_integral(&g, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-6);

        let g = sample(&mixed(), &expr("1"), 0.01).unwrap();
        assert!((delta_integral(&g, 0.0, 2.0).unwrap() - 2.0).abs() < 1e-12);

        assert!(matches!(
            delta_integral(&g, 1.0, 0.5),
            Err(Error::BadRange(_))
        ));
        assert_eq!(delta_integral(&g, 0.0, 1.5), Err(Error::NotInScale(1.5)));
    }

    #[test]
    fn trapezoid_converges_at_second_order() {
        let unit = TimeScale::interval(0.0, 1.0).unwrap();
        let exact = 1.0 - 1.0f64.cos();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let g = sample(&unit, &expr("sin(t)"), h).unwrap();
                (delta_integral(&g, 0.0, 1.0).unwrap() - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9, "observed order {order}");
        }
    }

    #[test]
    fn antiderivative_matches_integral() {
        let g = sample(&mixed(), &expr("exp(t)"), 0.05).unwrap();
        let big = delta_antiderivative(&g, 0.0).unwrap();
        for &t in g.nodes() {
            assert_eq!(
                big.value_at(t).unwrap(),
                delta_integral(&g, 0.0, t).unwrap()
            );
        }
    }

    #[test]
    fn prop1_examples() {
        let t = TimeScale::points(&[0.0, 1.0, 2.0]).unwrap();
        let g = sample(&t, &expr("t"), 1.0).unwrap();
        let c = compare_delta_riemann(&g, 0.0, 2.0).unwrap();
        assert_eq!(
            (c.delta_value, c.extension_value, c.holds),
            (1.0, 1.0, true)
        );

        let g = sample(&TimeScale::interval(0.0, 2.0).unwrap(), &expr("t"), 1e-3).unwrap();
        let c = compare_delta_riemann(&g, 0.0, 2.0).unwrap();
        assert!((c.delta_value - 2.0).abs() < 1e-9 && c.holds);
        assert!((c.delta_value - c.extension_value).abs() < 1e-9);

        let t = TimeScale::points(&[0.0, 2.0]).unwrap();
        let g = sample(&t, &expr("t^2"), 1.0).unwrap();
        let c = compare_delta_riemann(&g, 0.0, 2.0).unwrap();
        assert_eq!(
            (c.delta_value, c.extension_value, c.holds),
            (0.0, 0.0, true)
        );

        let g = sample(&mixed(), &expr("cos(3*t)"), 0.1).unwrap();
        assert!(matches!(
            compare_delta_riemann(&g, 0.0, 2.0),
            Err(Error::NotIncreasing(_))
        ));
    }

    fn arb_discrete() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        prop::collection::vec((0.1f64..2.0, -5.0f64..5.0, -5.0f64..5.0), 2..30).prop_map(|v| {
            let mut t = 0.0;
            let mut pts = Vec::new();
            let mut f = Vec::new();
            let mut g = Vec::new();
            for (gap, a, b) in v {
                pts.push(t);
                f.push(a);
                g.push(b);
                t += gap;
            }
            (pts, f, g)
        })
    }

    proptest! {
        #[test]
        fn discrete_integral_is_graininess_sum((pts, f, _) in arb_discrete()) {
            let scale = TimeScale::points(&pts).unwrap();
            let gf = GridFunction::new(Grid::new(&scale, 1.0).unwrap(), f.clone()).unwrap();
            let b = *pts.last().unwrap();
            let brute: f64 = (0..pts.len() - 1).map(|i| (pts[i + 1] - pts[i]) * f[i]).sum();
            let got = delta_integral(&gf, 0.0, b).unwrap();
            prop_assert!((got - brute).abs() <= 1e-13 * brute.abs().max(1.0));
            // fundamental theorem on discrete scales
            let d = delta_derivative_grid(&gf).unwrap();
            prop_assert_eq!(d.grid().len(), pts.len() - 1);
            // pad the value at the left-scattered max; it carries no weight
            let direct = delta_integral(&GridFunction::new(Grid::new(&scale, 1.0).unwrap(),
                d.values().iter().copied().chain([0.0]).collect()).unwrap(), 0.0, b).unwrap();
            prop_assert!((direct - (f[f.len() - 1] - f[0])).abs() < 1e-9);
        }

        #[test]
        fn integral_is_linear_and_additive((pts, f, g) in arb_discrete(), c in -3.0f64..3.0) {
            let scale = TimeScale::points(&pts).unwrap();
            let grid = Grid::new(&scale, 1.0).unwrap();
            let ff = GridFunction::new(grid.clone(), f).unwrap();
            let gg = GridFunction::new(grid, g).unwrap();
            let comb = ff.axpy(c, &gg).unwrap();
            let b = *pts.last().unwrap();
            let lhs = delta_integral(&comb, 0.0, b).unwrap();
            let rhs = delta_integral(&ff, 0.0, b).unwrap() + c * delta_integral(&gg, 0.0, b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
            let mid = pts[pts.len() / 2];
            let split = delta_integral(&ff, 0.0, mid).unwrap() + delta_integral(&ff, mid, b).unwrap();
            prop_assert!((split - delta_integral(&ff, 0.0, b).unwrap()).abs() < 1e-12 * (1.0 + split.abs()));
        }

        #[test]
        fn grid_integral_is_linear(c in -3.0f64..3.0, step in 0.005f64..0.2) {
            let scale = TimeScale::new(vec![Segment::interval(0.0, 1.0), Segment::point(1.5), Segment::interval(2.0, 3.0)]).unwrap();
            let f = sample(&scale, &expr("sin(t)"), step).unwrap();
            let g = sample(&scale, &expr("t^2 - 1"), step).unwrap();
            let comb = f.axpy(c, &g).unwrap();
            let lhs = delta_integral(&comb, 0.0, 3.0).unwrap();
            let rhs = delta_integral(&f, 0.0, 3.0).unwrap() + c * delta_integral(&g, 0.0, 3.0).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
