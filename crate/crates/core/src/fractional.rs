//! Riemann–Liouville fractional integral and derivative on a time scale.
//!
//! The integral `I^ν h(t) = (1/Γ(ν)) ∫_a^t (t−s)^{ν−1} h(s) Δs` splits the
//! delta integral into exact graininess terms at right-scattered nodes and
//! product integration over interval cells: on each cell `h` is replaced by
//! its linear interpolant and the kernel is integrated against it in closed
//! form, which keeps the weakly singular endpoint `s → t⁻` exact.
//!
//! The derivative is literally `Δ ∘ I^{1−ν}`.

use rayon::prelude::*;

use crate::calculus::{delta_antiderivative, delta_derivative_grid, Grid, GridFunction, Stencil};
use crate::error::{Error, Result};
use crate::specfun::gamma;
use crate::timescale::TimeScale;

/// A validated fractional order.
///
/// Accepted: `(0, 1)`, `(−1, 0)` (negative orders swap integral and
/// derivative) and non-integer `α > 1` (split as `⌊α⌋ + β`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder(f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderKind {
    /// `α ∈ (0, 1)`.
    Proper(f64),
    /// `α ∈ (−1, 0)`; carries `−α`.
    Negative(f64),
    /// `α = whole + frac` with `frac ∈ (0, 1)`.
    Higher { whole: u32, frac: f64 },
}

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 0.0 || alpha <= -1.0 {
            return Err(Error::InvalidOrder(alpha));
        }
        if alpha == alpha.floor() {
            return Err(Error::UseIntegerCalculus(alpha));
        }
        Ok(FracOrder(alpha))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn kind(&self) -> OrderKind {
        let a = self.0;
        if a < 0.0 {
            OrderKind::Negative(-a)
        } else if a < 1.0 {
            OrderKind::Proper(a)
        } else {
            let whole = a.floor();
            OrderKind::Higher {
                whole: whole as u32,
                frac: a - whole,
            }
        }
    }

    fn proper(&self) -> Result<f64> {
        match self.kind() {
            OrderKind::Proper(a) => Ok(a),
            _ => Err(Error::InvalidOrder(self.0)),
        }
    }
}

/// `Σ_{k≥2} C(ν−1, k−2) x^k / k`, the small-`x` form of
/// `((1+x)^{ν+1} − 1)/(ν+1) − ((1+x)^ν − 1)/ν`.
fn near_moment_series(x: f64, order: f64) -> f64 {
    let mut coeff = 1.0;
    let mut power = x * x;
    let mut sum = 0.0;
    for k in 2..80 {
        let term = coeff * power / k as f64;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        let j = (k - 2) as f64;
        coeff *= (order - 1.0 - j) / (j + 1.0);
        power *= x;
    }
    sum
}

/// Product-integration weights for one interval cell `[s0, s1]` seen from
/// `t ≥ s1`, with `near = t − s1` and `width = s1 − s0`:
/// `∫ (t−s)^{ν−1} [h0 (s1−s) + h1 (s−s0)]/width ds = w0 h0 + w1 h1`.
fn cell_weights(near: f64, width: f64, order: f64) -> (f64, f64) {
    let (m0, m1) = if near == 0.0 {
        (
            width.powf(order) / order,
            width.powf(order + 1.0) / (order + 1.0),
        )
    } else {
        let x = width / near;
        let l = x.ln_1p();
        let m0 = near.powf(order) * (order * l).exp_m1() / order;
        let s = if x < 0.1 {
            near_moment_series(x, order)
        } else {
            ((order + 1.0) * l).exp_m1() / (order + 1.0) - (order * l).exp_m1() / order
        };
        (m0, near.powf(order + 1.0) * s)
    };
    let w0 = m1 / width;
    (w0, m0 - w0)
}

/// `Γ(ν) I^ν h` at node `n`, integrating from node `ia`.
fn weighted_sum(h: &GridFunction, ia: usize, n: usize, order: f64) -> f64 {
    let grid = h.grid();
    let x = grid.nodes();
    let v = h.values();
    let t = x[n];
    let mut sum = 0.0;
    for i in ia..n {
        if grid.is_continuous_cell(i) {
            let (w0, w1) = cell_weights(t - x[i + 1], x[i + 1] - x[i], order);
            sum += w0 * v[i] + w1 * v[i + 1];
        } else {
            sum += (x[i + 1] - x[i]) * (t - x[i]).powf(order - 1.0) * v[i];
        }
    }
    sum
}

/// Kernel integral of any positive order on all nodes `≥ nodes[ia]`.
fn kernel_integral_grid(h: &GridFunction, ia: usize, order: f64) -> Result<GridFunction> {
    let g = gamma(order)?;
    let values: Vec<f64> = (ia..h.grid().len())
        .into_par_iter()
        .map(|n| weighted_sum(h, ia, n, order) / g)
        .collect();
    GridFunction::new(h.grid().tail(ia)?, values)
}

fn kernel_integral_at(h: &GridFunction, ia: usize, n: usize, order: f64) -> Result<f64> {
    Ok(weighted_sum(h, ia, n, order) / gamma(order)?)
}

fn bounds(h: &GridFunction, a: f64, t: f64) -> Result<(usize, usize)> {
    let ia = h.grid().index_of(a)?;
    let it = h.grid().index_of(t)?;
    if it < ia {
        return Err(Error::BadRange(format!("t = {t} lies before a = {a}")));
    }
    Ok((ia, it))
}

/// Repeated delta derivatives of `h` restricted to `t ≥ nodes[ia]`.
fn integer_derivatives(h: &GridFunction, ia: usize, times: u32) -> Result<GridFunction> {
    let mut g = h.tail(ia)?;
    for _ in 0..times {
        g = delta_derivative_grid(&g)?;
    }
    Ok(g)
}

/// Fractional integral `I^α h(t)` from `a`.
pub fn frac_integral(h: &GridFunction, a: f64, alpha: FracOrder, t: f64) -> Result<f64> {
    let (ia, it) = bounds(h, a, t)?;
    match alpha.kind() {
        OrderKind::Proper(nu) => kernel_integral_at(h, ia, it, nu),
        OrderKind::Negative(nu) => frac_derivative(h, a, FracOrder(nu), t),
        OrderKind::Higher { .. } => frac_integral_grid(h, a, alpha)?.value_at(t),
    }
}

/// `I^α h` at every node `t ≥ a`.
pub fn frac_integral_grid(h: &GridFunction, a: f64, alpha: FracOrder) -> Result<GridFunction> {
    let ia = h.grid().index_of(a)?;
    match alpha.kind() {
        OrderKind::Proper(nu) => kernel_integral_grid(h, ia, nu),
        OrderKind::Negative(nu) => frac_derivative_grid(h, a, FracOrder(nu)),
        OrderKind::Higher { whole, frac } => {
            let mut g = kernel_integral_grid(h, ia, frac)?;
            for _ in 0..whole {
                g = delta_antiderivative(&g, a)?;
            }
            Ok(g)
        }
    }
}

/// Fractional derivative `D^α h(t) = (I^{1−α} h)^Δ(t)` from `a`.
pub fn frac_derivative(h: &GridFunction, a: f64, alpha: FracOrder, t: f64) -> Result<f64> {
    let (ia, it) = bounds(h, a, t)?;
    match alpha.kind() {
        OrderKind::Proper(nu) => {
            let tail = h.grid().tail(ia)?;
            let stencil = Stencil::for_node(&tail, it - ia)?;
            let support = stencil.support();
            let f = support
                .iter()
                .map(|&k| kernel_integral_at(h, ia, ia + k, 1.0 - nu))
                .collect::<Result<Vec<_>>>()?;
            Ok(stencil.apply(tail.nodes(), |k| {
                let slot = support.iter().position(|&s| s == k).expect("stencil node");
                f[slot]
            }))
        }
        OrderKind::Negative(nu) => frac_integral(h, a, FracOrder(nu), t),
        OrderKind::Higher { whole, frac } => {
            let g = integer_derivatives(h, ia, whole)?;
            if g.grid().index_of(t).is_err() {
                return Err(Error::OutsideKappa(t));
            }
            frac_derivative(&g, a, FracOrder(frac), t)
        }
    }
}

/// `D^α h` at every node of `T^κ` with `t ≥ a`.
pub fn frac_derivative_grid(h: &GridFunction, a: f64, alpha: FracOrder) -> Result<GridFunction> {
    let ia = h.grid().index_of(a)?;
    match alpha.kind() {
        OrderKind::Proper(nu) => delta_derivative_grid(&kernel_integral_grid(h, ia, 1.0 - nu)?),
        OrderKind::Negative(nu) => frac_integral_grid(h, a, FracOrder(nu)),
        OrderKind::Higher { whole, frac } => {
            let g = integer_derivatives(h, ia, whole)?;
            frac_derivative_grid(&g, a, FracOrder(frac))
        }
    }
}

/// Result of the representability test `f ∈ I^α(C[a, b])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Representability {
    /// `I^{1−α} f` passed the refinement smoothness probe.
    pub c1_ok: bool,
    /// `(I^{1−α} f)(a⁺)` is within tolerance of zero.
    pub vanishes_at_a: bool,
    pub member: bool,
    /// Estimate of `(I^{1−α} f)(a⁺)`.
    pub value_at_a: f64,
    /// `|Δg(a)|` on the fine grid over the same on the coarse grid.
    pub derivative_growth: f64,
    /// `f(a)` could not be evaluated to a finite number.
    pub singular_at_a: bool,
}

/// Largest derivative growth per halving of the step still read as bounded.
pub const C1_GROWTH_LIMIT: f64 = 1.071_773_462_536_293; // 2^0.1

/// Tests the two conditions characterising `f = I^α φ` for continuous `φ`:
/// `g = I^{1−α} f` is continuously differentiable, and `g(a⁺) = 0`.
///
/// `g` is built on grids with `step` and `step / 2`; smoothness means the
/// delta derivative at `a` does not grow under refinement (a singular
/// derivative `~ (t−a)^{−q}` grows by `2^q`). When `f(a)` itself is not
/// finite, `f` is modelled locally as `C (t−a)^p` from the first two
/// fine-grid nodes and `g(a⁺)` is taken from the exact power law.
pub fn check_representable<F>(
    f: F,
    scale: &TimeScale,
    a: f64,
    b: f64,
    alpha: FracOrder,
    step: f64,
    tol: f64,
) -> Result<Representability>
where
    F: Fn(f64) -> Result<f64>,
{
    let nu = alpha.proper()?;
    if a >= b {
        return Err(Error::BadRange(format!("need a < b, got [{a}, {b}]")));
    }
    let domain = scale.restrict(a, b)?;
    let coarse = Grid::new(&domain, step)?;
    let fine = Grid::new(&domain, step / 2.0)?;

    let singular = !matches!(f(a), Ok(v) if v.is_finite());
    if singular {
        if fine.len() < 3 || !fine.is_continuous_cell(0) || !fine.is_continuous_cell(1) {
            return Err(Error::Domain(format!(
                "f is not finite at the right-scattered point {a}"
            )));
        }
        let x = fine.nodes();
        let (d1, d2) = (x[1] - a, x[2] - a);
        let (f1, f2) = (f(x[1])?, f(x[2])?);
        let value_at_a = singular_limit(f1, f2, d1, d2, nu)?;
        return Ok(Representability {
            c1_ok: false,
            vanishes_at_a: value_at_a.abs() <= tol,
            member: false,
            value_at_a,
            derivative_growth: f64::INFINITY,
            singular_at_a: true,
        });
    }

    let order = FracOrder::new(1.0 - nu)?;
    let derivative_at_a = |grid: Grid| -> Result<(f64, f64)> {
        let fg = GridFunction::from_fn(grid, &f)?;
        let g = frac_integral_grid(&fg, a, order)?;
        Ok((g.values()[0], crate::calculus::delta_derivative(&g, a)?))
    };
    let (_, d_coarse) = derivative_at_a(coarse)?;
    let (value_at_a, d_fine) = derivative_at_a(fine)?;

    let derivative_growth = if d_coarse.abs().max(d_fine.abs()) < 1e-12 {
        1.0
    } else {
        d_fine.abs() / d_coarse.abs()
    };
    let c1_ok = derivative_growth <= C1_GROWTH_LIMIT;
    let vanishes_at_a = value_at_a.abs() <= tol;
    Ok(Representability {
        c1_ok,
        vanishes_at_a,
        member: c1_ok && vanishes_at_a,
        value_at_a,
        derivative_growth,
        singular_at_a: false,
    })
}

/// `lim_{t→a⁺} I^{1−ν}[C (s−a)^p](t)` with `C`, `p` fitted to two samples.
fn singular_limit(f1: f64, f2: f64, d1: f64, d2: f64, nu: f64) -> Result<f64> {
    if !(f1 != 0.0 && f2 != 0.0 && f1.signum() == f2.signum()) {
        return Err(Error::Domain(
            "cannot fit a power law to f near a (sign change or zero)".into(),
        ));
    }
    let p = (f2 / f1).ln() / (d2 / d1).ln();
    let coef = f1 / d1.powf(p);
    if p <= -1.0 {
        return Ok(coef.signum() * f64::INFINITY);
    }
    // g(t) = C Γ(p+1)/Γ(p+2−ν) (t−a)^{p+1−ν}
    let exponent = p + 1.0 - nu;
    if exponent.abs() <= 1e-6 {
        Ok(coef * gamma(p + 1.0)? / gamma(p + 2.0 - nu)?)
    } else if exponent > 0.0 {
        Ok(0.0)
    } else {
        Ok(coef.signum() * f64::INFINITY)
    }
}

/// Indices strictly between the first and the last node of `grid`.
fn interior(len: usize) -> std::ops::Range<usize> {
    1..len.saturating_sub(1)
}

fn sup_over<F: Fn(usize) -> f64>(range: std::ops::Range<usize>, f: F) -> f64 {
    range.map(f).fold(0.0, f64::max)
}

/// `sup_t |I^α(I^β h)(t) − I^{α+β} h(t)|` over nodes `t ≥ a`.
pub fn verify_semigroup(
    h: &GridFunction,
    a: f64,
    alpha: FracOrder,
    beta: FracOrder,
) -> Result<f64> {
    let (al, be) = (alpha.proper()?, beta.proper()?);
    let ia = h.grid().index_of(a)?;
    let inner = kernel_integral_grid(h, ia, be)?;
    let composed = kernel_integral_grid(&inner, 0, al)?;
    let direct = kernel_integral_grid(h, ia, al + be)?;
    composed.sup_distance(&direct)
}

/// `sup |D^α(I^α h) − h|` over interior nodes.
pub fn verify_left_inverse(h: &GridFunction, a: f64, alpha: FracOrder) -> Result<f64> {
    alpha.proper()?;
    let ia = h.grid().index_of(a)?;
    let lifted = frac_integral_grid(h, a, alpha)?;
    let back = frac_derivative_grid(&lifted, a, alpha)?;
    let tail_len = h.grid().len() - ia;
    let range = interior(tail_len).start..interior(tail_len).end.min(back.grid().len());
    Ok(sup_over(range, |k| {
        (back.values()[k] - h.values()[ia + k]).abs()
    }))
}

/// `sup |I^α(D^α f) − f|` over interior nodes.
pub fn verify_right_inverse(f: &GridFunction, a: f64, alpha: FracOrder) -> Result<f64> {
    alpha.proper()?;
    let ia = f.grid().index_of(a)?;
    let lowered = frac_derivative_grid(f, a, alpha)?;
    let back = frac_integral_grid(&lowered, a, alpha)?;
    let tail_len = f.grid().len() - ia;
    let range = interior(tail_len).start..interior(tail_len).end.min(back.grid().len());
    Ok(sup_over(range, |k| {
        (back.values()[k] - f.values()[ia + k]).abs()
    }))
}
