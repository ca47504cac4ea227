//! Picard iteration for `D^α y = f(t, y)` on `J = [t0, t0 + a] ⊆ T` with
//! `I^{1−α} y(t0) = 0`, through the equivalent integral equation
//! `y = I^α f(·, y(·))`.

use serde::Serialize;

use crate::calculus::{Grid, GridFunction};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fractional::{frac_integral_grid, FracOrder};
use crate::specfun::gamma;
use crate::timescale::TimeScale;

const SCHEMA_VERSION: u32 = 1;
const T_SAMPLES: usize = 64;
const Y_SAMPLES: usize = 257;

/// The fractional initial value problem and its numerical settings.
#[derive(Debug, Clone)]
pub struct IVProblem {
    pub scale: TimeScale,
    pub t0: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub rhs: Expr,
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverWarning {
    /// `L a^α / Γ(α+1) ≥ 1`: convergence and uniqueness are not guaranteed.
    NotAContraction,
    /// The `Γ(α)` and `Γ(α+1)` forms of the contraction test disagree.
    GammaCriteriaDisagree,
    /// `max_iter` reached before the step difference fell below `tol`.
    NonConverged,
    /// The iterates stopped being finite.
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub schema: u32,
    pub converged: bool,
    pub iterations: usize,
    /// `‖y_{k+1} − y_k‖_∞` for each iteration.
    pub residual_trace: Vec<f64>,
    /// `‖y − T(y)‖_∞` for the returned iterate.
    pub residual: f64,
    pub contraction_c: f64,
    #[serde(rename = "lipschitz_L")]
    pub lipschitz_l: f64,
    #[serde(rename = "bound_M")]
    pub bound_m: f64,
    pub rho: f64,
    pub alpha: f64,
    pub t0: f64,
    pub horizon: f64,
    pub warnings: Vec<SolverWarning>,
}

/// Constants of the fixed-point argument, estimated by sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub lipschitz_l: f64,
    pub bound_m: f64,
    pub rho: f64,
    pub contraction_c: f64,
    /// Half-width of the `y` box the constants were sampled on.
    pub y_radius: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * (k as f64 / (n - 1) as f64))
        .collect()
}

fn lipschitz_on(rhs: &Expr, ts: &[f64], ys: &[f64]) -> Result<f64> {
    let mut best = 0.0f64;
    for &t in ts {
        let vals = ys
            .iter()
            .map(|&y| rhs.eval(t, y))
            .collect::<Result<Vec<_>>>()?;
        for k in 1..ys.len() {
            let q = (vals[k] - vals[k - 1]).abs() / (ys[k] - ys[k - 1]);
            best = best.max(q);
        }
    }
    Ok(best)
}

fn bound_on(rhs: &Expr, ts: &[f64], ys: &[f64]) -> Result<f64> {
    let mut best = 0.0f64;
    for &t in ts {
        for &y in ys {
            best = best.max(rhs.eval(t, y)?.abs());
        }
    }
    Ok(best)
}

/// Largest difference quotient `|f(t,y₁) − f(t,y₂)| / |y₁ − y₂|` over
/// neighbouring samples of a `samples × samples` lattice. A lower bound on
/// the true Lipschitz constant.
pub fn estimate_lipschitz(
    rhs: &Expr,
    t_range: (f64, f64),
    y_range: (f64, f64),
    samples: usize,
) -> Result<f64> {
    let finite = [t_range.0, t_range.1, y_range.0, y_range.1]
        .iter()
        .all(|v| v.is_finite());
    if !finite || samples < 2 || y_range.0 >= y_range.1 || t_range.0 > t_range.1 {
        return Err(Error::Invalid(
            "estimate_lipschitz needs finite ranges, y_lo < y_hi and at least 2 samples".into(),
        ));
    }
    let ts = linspace(t_range.0, t_range.1, samples);
    let ys = linspace(y_range.0, y_range.1, samples);
    lipschitz_on(rhs, &ts, &ys)
}

/// `c = L a^α / Γ(α+1)`; the Picard map contracts when `c < 1`.
pub fn contraction_constant(lipschitz: f64, horizon: f64, alpha: f64) -> Result<f64> {
    Ok(lipschitz * horizon.powf(alpha) / gamma(alpha + 1.0)?)
}

/// `ρ = M a^α / Γ(α+1)`, the radius of the ball the Picard map preserves.
pub fn apriori_bound(bound: f64, horizon: f64, alpha: f64) -> Result<f64> {
    Ok(bound * horizon.powf(alpha) / gamma(alpha + 1.0)?)
}

/// Whether the `Γ(α)` form `L a^α / Γ(α) ≤ 1` and the `Γ(α+1)` form
/// `L a^α / Γ(α+1) < 1` of the contraction test give different answers.
pub fn gamma_criteria_disagree(lipschitz: f64, horizon: f64, alpha: f64) -> Result<bool> {
    let scaled = lipschitz * horizon.powf(alpha);
    let loose = scaled / gamma(alpha)? <= 1.0;
    let strict = scaled / gamma(alpha + 1.0)? < 1.0;
    Ok(loose != strict)
}

impl IVProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidOrder(self.alpha));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Invalid(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Invalid(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Invalid("max_iter must be at least 1".into()));
        }
        for t in [self.t0, self.end()] {
            if !self.scale.contains(t) {
                return Err(Error::NotInScale(t));
            }
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.horizon
    }

    /// Grid on `J = T ∩ [t0, t0 + a]`.
    pub fn grid(&self) -> Result<Grid> {
        self.validate()?;
        Grid::new(&self.scale.restrict(self.t0, self.end())?, self.step)
    }

    fn t_samples(&self, grid: &Grid) -> Vec<f64> {
        let n = grid.len();
        if n <= T_SAMPLES {
            return grid.nodes().to_vec();
        }
        let mut idx: Vec<usize> = (0..T_SAMPLES)
            .map(|k| k * (n - 1) / (T_SAMPLES - 1))
            .collect();
        idx.dedup();
        idx.into_iter().map(|i| grid.nodes()[i]).collect()
    }

    /// Samples `M`, `L`, `ρ` and `c` over `J × [−R, R]`, where `R` is twice
    /// the a-priori radius after one refinement (and at least 1).
    pub fn diagnostics(&self) -> Result<Diagnostics> {
        let grid = self.grid()?;
        let ts = self.t_samples(&grid);
        let radius = |rho: f64| (2.0 * rho).max(1.0);

        let m0 = bound_on(&self.rhs, &ts, &[0.0])?;
        let r0 = radius(apriori_bound(m0, self.horizon, self.alpha)?);
        let m1 = bound_on(&self.rhs, &ts, &linspace(-r0, r0, Y_SAMPLES))?;
        let y_radius = radius(apriori_bound(m1, self.horizon, self.alpha)?);

        let ys = linspace(-y_radius, y_radius, Y_SAMPLES);
        let bound_m = bound_on(&self.rhs, &ts, &ys)?;
        let lipschitz_l = lipschitz_on(&self.rhs, &ts, &ys)?;
        Ok(Diagnostics {
            lipschitz_l,
            bound_m,
            rho: apriori_bound(bound_m, self.horizon, self.alpha)?,
            contraction_c: contraction_constant(lipschitz_l, self.horizon, self.alpha)?,
            y_radius,
        })
    }
}

/// One application of `(T y)(t) = I^α f(·, y(·))(t)` on the grid of `J`.
pub fn picard_step(p: &IVProblem, y: &GridFunction) -> Result<GridFunction> {
    let order = FracOrder::new(p.alpha)?;
    let values = y
        .nodes()
        .iter()
        .zip(y.values())
        .map(|(&t, &v)| {
            p.rhs
                .eval(t, v)
                .map_err(|e| Error::Domain(format!("at t = {t}, y = {v}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let integrand = GridFunction::new(y.grid().clone(), values)?;
    frac_integral_grid(&integrand, p.t0, order)
}

/// `‖y − T(y)‖_∞`.
pub fn residual(p: &IVProblem, y: &GridFunction) -> Result<f64> {
    y.sup_distance(&picard_step(p, y)?)
}

/// Solves from `y₀ ≡ 0`.
pub fn picard_solve(p: &IVProblem) -> Result<(GridFunction, SolverReport)> {
    let y0 = GridFunction::constant(p.grid()?, 0.0)?;
    picard_solve_from(p, y0)
}

/// Iterates `y_{k+1} = T(y_k)` until `‖y_{k+1} − y_k‖ ≤ tol` or `max_iter`.
///
/// Non-convergence is reported in the returned report rather than as an
/// error, so the last iterate and the trace are always available.
pub fn picard_solve_from(
    p: &IVProblem,
    start: GridFunction,
) -> Result<(GridFunction, SolverReport)> {
    let diag = p.diagnostics()?;
    let mut warnings = Vec::new();
    if diag.contraction_c >= 1.0 {
        warnings.push(SolverWarning::NotAContraction);
    }
    if gamma_criteria_disagree(diag.lipschitz_l, p.horizon, p.alpha)? {
        warnings.push(SolverWarning::GammaCriteriaDisagree);
    }

    let mut y = start;
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..p.max_iter {
        let next = picard_step(p, &y)?;
        let diff = next.sup_distance(&y)?;
        trace.push(diff);
        if !diff.is_finite() {
            warnings.push(SolverWarning::Diverged);
            break;
        }
        y = next;
        if diff <= p.tol {
            converged = true;
            break;
        }
    }
    if !converged && !warnings.contains(&SolverWarning::Diverged) {
        warnings.push(SolverWarning::NonConverged);
    }
    let residual = residual(p, &y)?;
    let report = SolverReport {
        schema: SCHEMA_VERSION,
        converged,
        iterations: trace.len(),
        residual_trace: trace,
        residual,
        contraction_c: diag.contraction_c,
        lipschitz_l: diag.lipschitz_l,
        bound_m: diag.bound_m,
        rho: diag.rho,
        alpha: p.alpha,
        t0: p.t0,
        horizon: p.horizon,
        warnings,
    };
    Ok((y, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use std::f64::consts::PI;

    fn problem(scale: TimeScale, rhs: &str, alpha: f64) -> IVProblem {
        let (t0, end) = (scale.min(), scale.max());
        IVProblem {
            scale,
            t0,
            horizon: end - t0,
            alpha,
            rhs: Expr::parse(rhs).unwrap(),
            step: 1e-2,
            tol: 1e-10,
            max_iter: 100,
        }
    }

    fn unit() -> TimeScale {
        TimeScale::interval(0.0, 1.0).unwrap()
    }

    fn z(n: usize) -> TimeScale {
        TimeScale::points(&(0..n).map(|k| k as f64).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lipschitz_examples() {
        let lip = |s: &str, y: (f64, f64)| {
            estimate_lipschitz(&Expr::parse(s).unwrap(), (0.0, 1.0), y, 1000).unwrap()
        };
        assert_eq!(lip("1", (-1.0, 1.0)), 0.0);
        assert!((lip("y", (-1.0, 1.0)) - 1.0).abs() < 1e-9);
        assert!((lip("cos(y)+1", (-4.0, 4.0)) - 1.0).abs() < 1e-4);
        assert!(estimate_lipschitz(&Expr::parse("y").unwrap(), (0.0, 1.0), (0.0, 1.0), 1).is_err());
    }

    #[test]
    fn banach_constants() {
        assert_eq!(contraction_constant(0.0, 1.0, 0.5).unwrap(), 0.0);
        let c = contraction_constant(1.0, 1.0, 0.5).unwrap();
        assert!((c - 2.0 / PI.sqrt()).abs() < 1e-12 && c >= 1.0);
        let c = contraction_constant(0.5, 1.0, 0.5).unwrap();
        assert!((c - 0.564190).abs() < 1e-6 && c < 1.0);

        assert!((apriori_bound(1.0, 1.0, 0.5).unwrap() - 2.0 / PI.sqrt()).abs() < 1e-12);
        assert_eq!(apriori_bound(0.0, 3.0, 0.7).unwrap(), 0.0);
        assert!((apriori_bound(2.0, 1.0, 0.5).unwrap() - 2.256758).abs() < 1e-6);
    }

    #[test]
    fn disagreement_window() {
        // La^α ∈ [Γ(α+1), Γ(α)] = [0.8862, 1.7725] for α = 0.5, a = 1
        assert!(!gamma_criteria_disagree(0.5, 1.0, 0.5).unwrap());
        assert!(gamma_criteria_disagree(1.0, 1.0, 0.5).unwrap());
        assert!(gamma_criteria_disagree(1.7, 1.0, 0.5).unwrap());
        assert!(!gamma_criteria_disagree(2.0, 1.0, 0.5).unwrap());
    }

    #[test]
    fn step_examples() {
        let p = problem(unit(), "1", 0.5);
        let y = GridFunction::constant(p.grid().unwrap(), 3.0).unwrap();
        let ty = picard_step(&p, &y).unwrap();
        for (&t, &v) in ty.nodes().iter().zip(ty.values()) {
            assert!((v - 2.0 * (t / PI).sqrt()).abs() < 1e-4);
        }

        let p = problem(z(5), "1", 0.5);
        let y = GridFunction::constant(p.grid().unwrap(), 0.0).unwrap();
        let ty = picard_step(&p, &y).unwrap();
        let pts = [0.0, 1.0, 2.0, 3.0, 4.0];
        for (k, &t) in pts.iter().enumerate() {
            let want = oracle::brute_force_frac_integral(&pts, &[1.0; 5], 0.0, 0.5, t).unwrap();
            assert!((ty.values()[k] - want).abs() < 1e-14);
        }

        let p = problem(unit(), "0", 0.5);
        let y = GridFunction::constant(p.grid().unwrap(), 7.0).unwrap();
        assert_eq!(picard_step(&p, &y).unwrap().sup_norm(), 0.0);

        let p = problem(unit(), "log(y)", 0.5);
        let y = GridFunction::constant(p.grid().unwrap(), 0.0).unwrap();
        assert!(matches!(picard_step(&p, &y), Err(Error::Domain(_))));
    }

    #[test]
    fn solve_constant_rhs() {
        let mut p = problem(unit(), "1", 0.5);
        p.step = 1e-3;
        p.tol = 1e-8;
        let (y, report) = picard_solve(&p).unwrap();
        assert!(report.converged && report.iterations <= 2);
        assert_eq!(report.residual_trace[1], 0.0);
        assert!((y.value_at(1.0).unwrap() - 2.0 / PI.sqrt()).abs() < 1e-4);
        // initial condition: I^{1−α} y at t0 is an empty sum
        let big = frac_integral_grid(&y, 0.0, FracOrder::new(0.5).unwrap()).unwrap();
        assert_eq!(big.values()[0], 0.0);
    }

    #[test]
    fn solve_discrete_and_zero() {
        let (y, report) = picard_solve(&problem(z(5), "1", 0.5)).unwrap();
        assert!(report.converged);
        let pts = [0.0, 1.0, 2.0, 3.0, 4.0];
        for (k, &t) in pts.iter().enumerate() {
            let want = oracle::brute_force_frac_integral(&pts, &[1.0; 5], 0.0, 0.5, t).unwrap();
            assert!((y.values()[k] - want).abs() < 1e-14);
        }

        let (y, report) = picard_solve(&problem(unit(), "0", 0.5)).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged && y.sup_norm() == 0.0 && report.residual == 0.0);
    }

    #[test]
    fn solve_linear_contracts() {
        let p = problem(unit(), "0.5*y + 1", 0.5);
        let (y, report) = picard_solve(&p).unwrap();
        let c = report.contraction_c;
        assert!(c < 1.0 && report.converged);
        for w in report.residual_trace[1..].windows(2) {
            assert!(w[1] <= c * w[0] + 1e-12);
        }
        assert!(report.residual <= p.tol * (1.0 + c) / (1.0 - c));
        assert!(report.warnings.is_empty());

        // uniqueness probe from the far side of the ball
        let start = GridFunction::constant(p.grid().unwrap(), report.rho).unwrap();
        let (y2, r2) = picard_solve_from(&p, start).unwrap();
        assert!(r2.converged);
        assert!(y.sup_distance(&y2).unwrap() <= 2.0 * p.tol);
    }

    #[test]
    fn iterates_stay_in_the_ball() {
        let mut p = problem(unit(), "cos(y) + sin(3*t)", 0.6);
        p.max_iter = 1;
        let rho = p.diagnostics().unwrap().rho;
        let mut y = GridFunction::constant(p.grid().unwrap(), 0.0).unwrap();
        for _ in 0..30 {
            y = picard_step(&p, &y).unwrap();
            assert!(y.sup_norm() <= rho + p.tol);
        }
    }

    #[test]
    fn non_contraction_is_flagged_but_iterated() {
        let mut p = problem(unit(), "2*y", 0.5);
        p.max_iter = 5;
        let (_, report) = picard_solve(&p).unwrap();
        assert!((report.contraction_c - 2.256758).abs() < 1e-5);
        assert!(report.warnings.contains(&SolverWarning::NotAContraction));
        // y ≡ 0 is the fixed point of the homogeneous problem
        assert!(report.converged);

        let mut p = problem(unit(), "2*y + 1", 0.5);
        p.max_iter = 3;
        let (_, report) = picard_solve(&p).unwrap();
        assert!(!report.converged && report.iterations == 3);
        assert!(report.warnings.contains(&SolverWarning::NonConverged));
    }

    #[test]
    fn invalid_problems() {
        let mut p = problem(unit(), "1", 0.5);
        p.alpha = 1.0;
        assert!(p.validate().is_err());
        let mut p = problem(unit(), "1", 0.5);
        p.horizon = 2.0;
        assert_eq!(p.validate(), Err(Error::NotInScale(2.0)));
        let mut p = problem(unit(), "1", 0.5);
        p.tol = 0.0;
        assert!(p.validate().is_err());
    }
}
