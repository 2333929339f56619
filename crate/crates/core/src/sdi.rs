//! Slow divergence integral `I = int f_x ds` along a critical curve, where
//! `s` is slow time (`dy/ds = g` on the curve).

use serde::{Deserialize, Serialize};

use crate::models::{CriticalCurve, ModelKind, SlowFastModel, SlowVariant, Stability};
use crate::quadrature;
use crate::{Error, Result};

pub const SDI_REL_TOL: f64 = 1e-8;
const MIN_SLOW_SPEED: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdiMethod {
    Analytic,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdiValue {
    pub value: f64,
    pub curve_index: usize,
    pub method: SdiMethod,
    pub est_error: f64,
}

/// Integrand in the curve parameter: `f_x * (dy/dt) / g`.
fn integrand(model: &SlowFastModel, curve: &CriticalCurve, t: f64) -> f64 {
    let p = curve.point(model, t);
    let d = model.partials(p.x, p.y);
    d.f_x * curve.dy_dt(model, t) / d.g
}

fn check_slow_flow(model: &SlowFastModel, curve: &CriticalCurve) -> Result<i8> {
    let min_g = curve.min_abs_g(model);
    if min_g <= MIN_SLOW_SPEED {
        return Err(Error::SlowFlowVanishes { curve: curve.index, min_abs_g: min_g });
    }
    match curve.slow_orientation(model) {
        0 => Err(Error::InvalidArgument(format!(
            "slow flow reverses along curve {} (jump contact)",
            curve.index
        ))),
        s => Ok(s),
    }
}

/// SDI over one full loop, oriented along the slow flow, by adaptive
/// Gauss-Kronrod quadrature in the curve parameter.
pub fn slow_divergence_integral(model: &SlowFastModel, curve: &CriticalCurve) -> Result<SdiValue> {
    let orientation = check_slow_flow(model, curve)? as f64;
    let est = quadrature::integrate(
        |t| integrand(model, curve, t),
        curve.t_start,
        curve.t_end,
        SDI_REL_TOL,
        1e-14,
    )?;
    Ok(SdiValue {
        value: orientation * est.value,
        curve_index: curve.index,
        method: SdiMethod::Quadrature,
        est_error: est.error,
    })
}

/// Closed-form SDI where one is available:
///
/// * sine-link curves with `|g| = 1`: `f_x = -/+ m k`, `y` spans `2pi k`,
///   so `I = -/+ 2pi m k^2`;
/// * graph models with constant `g`: `f_x dy/g = -/+ phi'^2 dx / g`, so
///   `I = -/+ int phi'^2 / |g|`.
pub fn analytic_sdi(model: &SlowFastModel, curve: &CriticalCurve) -> Option<SdiValue> {
    let sign = match curve.stability {
        Stability::Attracting => -1.0,
        Stability::Repelling => 1.0,
        Stability::Mixed => return None,
    };
    let magnitude = match model.kind() {
        ModelKind::SineLink { m, k, l, slow } => {
            let unit_g = *slow == SlowVariant::Unit || (*m, *k, *l) == (1, 1, 1);
            if !unit_g {
                return None;
            }
            std::f64::consts::TAU * (*m as f64) * (*k as f64).powi(2)
        }
        ModelKind::Graph { phi } => {
            let p = curve.curve.samples()[0];
            let g0 = model.g(p.x, p.y);
            let constant = curve.curve.samples().iter().all(|s| model.g(s.x, s.y) == g0);
            if !constant || g0 == 0.0 || curve.slow_orientation(model) == 0 {
                return None;
            }
            phi.derivative_energy() / g0.abs()
        }
        ModelKind::General => return None,
    };
    Some(SdiValue { value: sign * magnitude, curve_index: curve.index, method: SdiMethod::Analytic, est_error: 0.0 })
}

/// SDI as a sum of segment integrals between consecutive `breakpoints`.
///
/// Breakpoints are curve parameters listed along the slow flow; the last
/// one is the first one advanced by exactly one loop.
pub fn sdi_by_segments(model: &SlowFastModel, curve: &CriticalCurve, breakpoints: &[f64]) -> Result<SdiValue> {
    let orientation = check_slow_flow(model, curve)? as f64;
    if breakpoints.len() < 2 || breakpoints.iter().any(|b| !b.is_finite()) {
        return Err(Error::UnorderedBreakpoints);
    }
    let ordered = breakpoints.windows(2).all(|w| (w[1] - w[0]) * orientation > 0.0);
    let span = (breakpoints[breakpoints.len() - 1] - breakpoints[0]) * orientation;
    let period = curve.period();
    if !ordered || (span - period).abs() > 1e-9 * period {
        return Err(Error::UnorderedBreakpoints);
    }
    let seg_tol = SDI_REL_TOL / breakpoints.len() as f64;
    let mut value = 0.0;
    let mut est_error = 0.0;
    for w in breakpoints.windows(2) {
        let est = quadrature::integrate(|t| integrand(model, curve, t), w[0], w[1], seg_tol, 1e-15)?;
        value += est.value;
        est_error += est.error;
    }
    Ok(SdiValue { value, curve_index: curve.index, method: SdiMethod::Quadrature, est_error })
}
