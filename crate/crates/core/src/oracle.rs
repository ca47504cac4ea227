//! Reference values computed independently of the main operators.
//!
//! Nothing here calls into `fractional`, `calculus` or `specfun`: the sums
//! are naive loops straight from the definitions and the gamma function is a
//! separate Stirling-series implementation, so agreement with the main code
//! is meaningful evidence.

use crate::error::{Error, Result};

/// Γ(x) for x > 0 by upward recurrence to x ≥ 15 and the Stirling series.
pub fn stirling_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("oracle gamma needs x > 0, got {x}")));
    }
    let mut shifted = x;
    let mut divisor = 1.0;
    while shifted < 15.0 {
        divisor *= shifted;
        shifted += 1.0;
    }
    let z = shifted;
    let z2 = z * z;
    // Bernoulli terms B_{2k} / (2k (2k−1) z^{2k−1})
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
        - 1.0 / (1680.0 * z * z2 * z2 * z2)
        + 1.0 / (1188.0 * z * z2 * z2 * z2 * z2)
        - 691.0 / (360_360.0 * z * z2 * z2 * z2 * z2 * z2);
    let value =
        (2.0 * std::f64::consts::PI / z).sqrt() * (z / std::f64::consts::E).powf(z) * series.exp();
    Ok(value / divisor)
}

/// `(1/Γ(α)) Σ_{s ∈ [a, t)} (σ(s) − s)(t − s)^{α−1} h(s)` on a purely
/// discrete scale given as strictly increasing points.
pub fn brute_force_frac_integral(
    points: &[f64],
    values: &[f64],
    a: f64,
    alpha: f64,
    t: f64,
) -> Result<f64> {
    if points.len() != values.len() {
        return Err(Error::Invalid("points and values differ in length".into()));
    }
    if !points.contains(&a) {
        return Err(Error::NotInScale(a));
    }
    if !points.contains(&t) {
        return Err(Error::NotInScale(t));
    }
    let g = stirling_gamma(alpha)?;
    let mut total = 0.0;
    for k in 0..points.len() {
        let s = points[k];
        if s < a || s >= t {
            continue;
        }
        let sigma = points[k + 1];
        total += (sigma - s) * (t - s).powf(alpha - 1.0) * values[k] / g;
    }
    Ok(total)
}

/// Classical `I^α[(s−a)^p](t) = Γ(p+1)/Γ(p+α+1) (t−a)^{p+α}` on the real line.
pub fn classical_rl_power(alpha: f64, p: f64, t: f64, a: f64) -> Result<f64> {
    if p <= -1.0 {
        return Err(Error::Domain(format!("power {p} is not integrable at a")));
    }
    if alpha.is_nan() || alpha <= 0.0 || t < a {
        return Err(Error::Invalid(format!(
            "need alpha > 0 and t >= a, got alpha = {alpha}, t = {t}, a = {a}"
        )));
    }
    if t == a {
        return Ok(0.0);
    }
    Ok(stirling_gamma(p + 1.0)? / stirling_gamma(p + alpha + 1.0)? * (t - a).powf(p + alpha))
}
