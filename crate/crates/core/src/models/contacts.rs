//! Nilpotent contact points: where a critical curve is tangent to the
//! horizontal fast fibers (`f = f_x = 0`).

use serde::{Deserialize, Serialize};

use super::{CriticalCurve, SlowFastModel};
use crate::torus::{wrap, TorusPoint};
use crate::Result;

pub const MAX_CONTACT_ORDER: u32 = 7;
pub const CONTACT_TOL: f64 = 1e-7;

/// Samples with |f_x| below this are refined as contact candidates.
const CANDIDATE_LEVEL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub location: TorusPoint,
    /// Curve parameter of the contact.
    pub parameter: f64,
    /// Vanishing order of `f(., y0)` at the contact; `None` if above
    /// [`MAX_CONTACT_ORDER`] (order undetermined).
    pub order: Option<u32>,
    /// The slow flow does not vanish at the contact.
    pub regular: bool,
    pub odd: bool,
}

/// All contact points of `curve`, located by refining local minima of
/// `|f_x|` along the curve and classified with exact x-derivatives of `f`.
pub fn contact_points(model: &SlowFastModel, curve: &CriticalCurve) -> Result<Vec<ContactPoint>> {
    let ts = &curve.sample_params;
    let open = ts.len() - 1;
    if open < 3 {
        return Ok(Vec::new());
    }
    let fx_at = |t: f64| {
        let p = curve.point(model, t);
        model.partials(p.x, p.y).f_x
    };
    let h: Vec<f64> = ts[..open].iter().map(|&t| fx_at(t).abs()).collect();
    let period = curve.period();
    let mut found: Vec<ContactPoint> = Vec::new();
    for i in 0..open {
        let prev = h[(i + open - 1) % open];
        let next = h[(i + 1) % open];
        if h[i] > CANDIDATE_LEVEL || h[i] > prev || h[i] > next {
            continue;
        }
        let lo = if i == 0 { ts[open - 1] - period } else { ts[i - 1] };
        let hi = ts[i + 1];
        let t0 = golden_min(|t| fx_at(t).abs(), lo, hi);
        let t_star = polish(model, curve, t0, lo, hi);
        if fx_at(t_star).abs() > CONTACT_TOL {
            continue;
        }
        let t_star = curve.t_start + (t_star - curve.t_start).rem_euclid(period);
        let dup = found.iter().any(|c| {
            let d = (c.parameter - t_star).rem_euclid(period);
            d.min(period - d) < 1e-6
        });
        if dup {
            continue;
        }
        let p = curve.point(model, t_star);
        let order = vanishing_order(&model.fast_x_derivatives(p.x, p.y));
        found.push(ContactPoint {
            location: wrap(p)?,
            parameter: t_star,
            order,
            regular: model.g(p.x, p.y).abs() > CONTACT_TOL,
            odd: order.is_some_and(|n| n % 2 == 1),
        });
    }
    found.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    Ok(found)
}

/// First `n >= 2` with a nonvanishing n-th derivative.
fn vanishing_order(d: &[f64; 8]) -> Option<u32> {
    (2..=MAX_CONTACT_ORDER).find(|&n| d[n as usize].abs() > CONTACT_TOL)
}

/// Moves the golden-section estimate onto the root of the highest
/// vanishing x-derivative, which locates high-order contacts far more
/// sharply than minimizing |f_x| does. Repeats while the order estimate grows.
fn polish(model: &SlowFastModel, curve: &CriticalCurve, t0: f64, lo: f64, hi: f64) -> f64 {
    let order_at = |t: f64| {
        let p = curve.point(model, t);
        vanishing_order(&model.fast_x_derivatives(p.x, p.y))
    };
    let mut t = t0;
    let mut order = order_at(t);
    for _ in 0..MAX_CONTACT_ORDER {
        let Some(n) = order.filter(|&n| n > 2) else {
            return t;
        };
        let w = |s: f64| {
            let p = curve.point(model, s);
            model.fast_x_derivatives(p.x, p.y)[n as usize - 1]
        };
        let Some(next) = secant_root(w, t, 1e-6 * (hi - lo), lo, hi) else {
            return t;
        };
        t = next;
        let refined = order_at(t);
        if refined == order {
            break;
        }
        order = refined;
    }
    t
}

fn secant_root(w: impl Fn(f64) -> f64, t0: f64, dt: f64, lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (t0, t0 + dt);
    let (mut wa, mut wb) = (w(a), w(b));
    for _ in 0..60 {
        if wb == 0.0 {
            return Some(b);
        }
        if wb == wa {
            break;
        }
        let c = b - wb * (b - a) / (wb - wa);
        if !(lo..=hi).contains(&c) {
            return None;
        }
        a = b;
        wa = wb;
        b = c;
        wb = w(b);
        if (b - a).abs() < 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    Some(b)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
