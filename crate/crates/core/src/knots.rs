//! Torus-knot calculus on signed winding pairs: ambient isotopy,
//! homeomorphism classes and link consistency.

use serde::{Deserialize, Serialize};

use crate::torus::{lift_dist, segment_dist, winding, ClosedCurve, WindingPair};
use crate::{Error, Result};

/// Homeomorphism class of a torus knot: essential (class of `(1, 0)`) or
/// trivial (class of `(0, 0)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnotClass {
    pub pair: WindingPair,
    pub essential: bool,
}

fn check_pair(p: WindingPair) -> Result<()> {
    if (p.k, p.l) == (0, 0) || p.is_coprime() {
        Ok(())
    } else {
        Err(Error::NotCoprime { k: p.k, l: p.l })
    }
}

/// Ambient isotopy of two oriented torus knots.
///
/// `(k1, l1)` and `(k2, l2)` are isotopic when they agree up to a global
/// sign; pairs whose entries do not have opposite signs may in addition
/// be swapped, `(k, l) ~ (l, k)`.
pub fn is_ambient_isotopic(a: WindingPair, b: WindingPair) -> Result<bool> {
    check_pair(a)?;
    check_pair(b)?;
    let pm = |p: WindingPair, q: WindingPair| (p.k, p.l) == (q.k, q.l) || (p.k, p.l) == (-q.k, -q.l);
    if pm(a, b) {
        return Ok(true);
    }
    let same_sign = |p: WindingPair| p.k * p.l >= 0;
    Ok(same_sign(a) && same_sign(b) && pm(a, WindingPair::new(b.l, b.k)))
}

pub fn homeo_class(p: WindingPair) -> Result<KnotClass> {
    check_pair(p)?;
    Ok(KnotClass { pair: p, essential: (p.k, p.l) != (0, 0) })
}

/// Minimal torus distance between two sampled curves, as polylines.
pub fn curve_separation(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    let reach = a.max_gap() + b.max_gap() + 1e-9;
    let mut best = f64::INFINITY;
    for u in a.samples().windows(2) {
        for v in b.samples().windows(2) {
            if lift_dist(u[0], v[0]) > best + reach {
                continue;
            }
            best = best.min(segment_dist(u[0], u[1], v[0], v[1]));
        }
    }
    best
}

/// All curves of a link share one winding pair. Errors when two curves
/// meet (closer than `touch_tol`), since then they do not form a link.
pub fn link_consistent_with(curves: &[ClosedCurve], touch_tol: f64) -> Result<bool> {
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            if curve_separation(&curves[i], &curves[j]) <= touch_tol {
                return Err(Error::CurvesIntersect { a: i, b: j });
            }
        }
    }
    let ws = curves.iter().map(|c| winding(c).map(|w| w.unoriented())).collect::<Result<Vec<_>>>()?;
    Ok(ws.windows(2).all(|w| w[0] == w[1]))
}

/// [`link_consistent_with`] at a touching tolerance of `1e-6`.
pub fn link_consistent(curves: &[ClosedCurve]) -> Result<bool> {
    link_consistent_with(curves, 1e-6)
}
