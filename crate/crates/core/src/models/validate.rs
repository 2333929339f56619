use serde::{Deserialize, Serialize};

use super::curves::{curve_at, fiber_roots};
use super::{ContactPoint, CriticalCurve, SlowFastModel, Stability};
use crate::torus::{LiftPoint, WindingPair};

/// Normal hyperbolicity and slow regularity thresholds.
pub const HYPERBOLICITY_TOL: f64 = 1e-6;
pub const SLOW_REGULARITY_TOL: f64 = 1e-6;

/// Fibers on which stability alternation is checked.
const ALTERNATION_FIBERS: [f64; 3] = [0.123_456, 2.345_678, 4.567_891];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMargins {
    pub index: usize,
    pub winding: WindingPair,
    pub stability: Stability,
    /// Minimum of |f_x| over the curve.
    pub min_abs_fx: f64,
    /// Minimum of |g| over the curve.
    pub min_abs_g: f64,
    /// Sign of `g` on the curve: +1 upward slow flow, -1 downward, 0 mixed.
    pub slow_direction: i8,
    pub contacts: Vec<ContactPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub model: String,
    pub curves: Vec<CurveMargins>,
    /// Even number of normally hyperbolic curves of one coprime type,
    /// half attracting, alternating along fast fibers.
    pub assumption_1: bool,
    /// As above, but isolated regular contacts of finite order allowed.
    pub assumption_1_relaxed: bool,
    /// Slow flow nonzero on every curve.
    pub assumption_2: bool,
    /// All curves share one winding pair.
    pub windings_agree: bool,
    pub alternating: bool,
    pub failures: Vec<String>,
}

impl AssumptionReport {
    pub fn passes(&self, relaxed: bool) -> bool {
        let first = if relaxed { self.assumption_1_relaxed } else { self.assumption_1 };
        first && self.assumption_2
    }

    pub fn link_type(&self) -> Option<WindingPair> {
        let w = self.curves.first()?.winding;
        self.windings_agree.then_some(w)
    }
}

pub fn validate_assumptions(model: &SlowFastModel, curves: &[CriticalCurve]) -> AssumptionReport {
    let mut failures = Vec::new();
    let margins: Vec<CurveMargins> = curves
        .iter()
        .map(|c| CurveMargins {
            index: c.index,
            winding: c.winding,
            stability: c.stability,
            min_abs_fx: c.min_abs_fx(model),
            min_abs_g: c.min_abs_g(model),
            slow_direction: c.slow_direction(model),
            contacts: c.contacts.clone(),
        })
        .collect();

    if curves.is_empty() {
        failures.push("no critical curves".to_string());
    }
    if curves.len() % 2 == 1 {
        failures.push(format!("odd number of critical curves ({})", curves.len()));
    }

    let windings_agree = margins.windows(2).all(|w| w[0].winding == w[1].winding);
    if !windings_agree {
        failures.push("critical curves have different winding pairs".to_string());
    }
    let mut type_ok = true;
    for c in &margins {
        let w = c.winding;
        if !(w.k >= 0 && w.l >= 0 && w.k + w.l > 0 && w.is_coprime()) {
            type_ok = false;
            failures.push(format!("curve {} has winding {} (need coprime, non-negative, nonzero)", c.index, w));
        }
    }

    let attracting = margins.iter().filter(|c| c.stability == Stability::Attracting).count();
    let repelling = margins.iter().filter(|c| c.stability == Stability::Repelling).count();
    let mixed = margins.len() - attracting - repelling;
    let balanced = attracting == repelling && mixed == 0;
    if !balanced {
        failures.push(format!(
            "stability counts: {attracting} attracting, {repelling} repelling, {mixed} mixed"
        ));
    }

    let alternating = check_alternation(model, curves);
    if !alternating {
        failures.push("stabilities do not alternate along fast fibers".to_string());
    }

    let hyperbolic = margins.iter().all(|c| c.min_abs_fx > HYPERBOLICITY_TOL && c.contacts.is_empty());
    if !hyperbolic {
        for c in margins.iter().filter(|c| c.min_abs_fx <= HYPERBOLICITY_TOL || !c.contacts.is_empty()) {
            failures.push(format!(
                "curve {} is not normally hyperbolic (min |f_x| = {:.3e}, {} contact point(s))",
                c.index,
                c.min_abs_fx,
                c.contacts.len()
            ));
        }
    }

    let contacts_ok = margins.iter().all(|c| {
        c.contacts.iter().all(|cp| cp.regular && cp.order.is_some())
            && (c.min_abs_fx > HYPERBOLICITY_TOL || !c.contacts.is_empty())
    });
    if !contacts_ok {
        failures.push("contact points are not all regular and of finite order".to_string());
    }

    let assumption_2 = !margins.is_empty() && margins.iter().all(|c| c.min_abs_g > SLOW_REGULARITY_TOL);
    if !assumption_2 {
        for c in margins.iter().filter(|c| c.min_abs_g <= SLOW_REGULARITY_TOL) {
            failures.push(format!("slow flow vanishes on curve {} (min |g| = {:.3e})", c.index, c.min_abs_g));
        }
    }

    let structural = !curves.is_empty() && curves.len().is_multiple_of(2) && windings_agree && type_ok;
    let assumption_1 = structural && balanced && alternating && hyperbolic;
    let assumption_1_relaxed = structural && contacts_ok && alternating && (balanced || mixed > 0);

    AssumptionReport {
        model: model.label().to_string(),
        curves: margins,
        assumption_1,
        assumption_1_relaxed,
        assumption_2,
        windings_agree,
        alternating,
        failures,
    }
}

/// Along a few fast fibers, consecutive crossings belong to curves of
/// opposite stability.
fn check_alternation(model: &SlowFastModel, curves: &[CriticalCurve]) -> bool {
    for &y in &ALTERNATION_FIBERS {
        let roots = fiber_roots(model, y);
        let mut signs = Vec::with_capacity(roots.len());
        for x in roots {
            let Some(i) = curve_at(curves, LiftPoint::new(x, y), 1e-4) else {
                return false;
            };
            match curves[i].stability {
                Stability::Mixed => {
                    // mixed curves alternate through the local sign of f_x
                    let s = model.partials(x, y).f_x.signum() as i8;
                    signs.push(s);
                }
                s => signs.push(s.sign()),
            }
        }
        let n = signs.len();
        if n % 2 == 1 || (0..n).any(|i| signs[i] == signs[(i + 1) % n] || signs[i] == 0) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{critical_curves, odd_contact_model, sine_link_model, SlowVariant};

    #[test]
    fn eq1_margins() {
        let m = sine_link_model(1, 1, 1, SlowVariant::Unit).unwrap();
        let r = validate_assumptions(&m, &critical_curves(&m).unwrap());
        assert!(r.passes(false), "{:?}", r.failures);
        for c in &r.curves {
            assert!((c.min_abs_fx - 1.0).abs() < 1e-12);
            assert!((c.min_abs_g - 1.0).abs() < 1e-15);
            assert!(c.contacts.is_empty());
        }
        assert_eq!(r.link_type(), Some(WindingPair::new(1, 1)));
    }

    #[test]
    fn odd_contact_needs_relaxed_mode() {
        let m = odd_contact_model();
        let r = validate_assumptions(&m, &critical_curves(&m).unwrap());
        assert!(!r.assumption_1);
        assert!(r.assumption_1_relaxed, "{:?}", r.failures);
        assert!(r.assumption_2);
        assert!(!r.passes(false));
        assert!(r.passes(true));
        for c in &r.curves {
            assert_eq!(c.contacts.len(), 1);
            assert_eq!(c.contacts[0].order, Some(3));
        }
    }

    #[test]
    fn cosine_variant_slow_directions() {
        let m = sine_link_model(1, 1, 1, SlowVariant::Cosine).unwrap();
        let r = validate_assumptions(&m, &critical_curves(&m).unwrap());
        assert!(r.passes(false));
        assert_eq!(r.curves[0].stability, Stability::Attracting);
        assert_eq!(r.curves[0].slow_direction, 1);
        assert_eq!(r.curves[1].slow_direction, -1);
        assert!(r.curves.iter().all(|c| (c.min_abs_g - 1.0).abs() < 1e-12));
    }

    #[test]
    fn catalog_links_alternate() {
        for (m_, k, l) in [(2, 1, 1), (2, 3, 2), (1, 5, 2), (1, 1, 0)] {
            let m = sine_link_model(m_, k, l, SlowVariant::Unit).unwrap();
            let r = validate_assumptions(&m, &critical_curves(&m).unwrap());
            assert!(r.passes(false), "{m_} {k} {l}: {:?}", r.failures);
            assert_eq!(r.curves.len(), 2 * m_ as usize);
        }
    }
}
