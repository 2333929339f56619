use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detect::{check_eps, find_limit_cycle};
use super::{CycleOptions, CycleStability, LimitCycle};
use crate::knots::curve_separation;
use crate::models::{critical_curves, validate_assumptions, CriticalCurve, SlowFastModel};
use crate::sdi::SdiValue;
use crate::torus::{polyline_hausdorff_dist, WindingPair};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleCensus {
    pub model: String,
    pub eps: f64,
    pub cycles: Vec<LimitCycle>,
    pub attracting_count: usize,
    pub repelling_count: usize,
    /// Smallest distance between two distinct cycles; infinite (null in
    /// JSON) with fewer than two cycles.
    #[serde(with = "super::finite_or_null")]
    pub min_separation: f64,
}

impl CycleCensus {
    pub fn link_type(&self) -> Option<WindingPair> {
        let w = self.cycles.first()?.winding;
        self.cycles.iter().all(|c| c.winding == w).then_some(w)
    }
}

/// One cycle per critical curve, detected concurrently.
pub fn cycle_census(model: &SlowFastModel, eps: f64, opts: &CycleOptions) -> Result<CycleCensus> {
    let curves = critical_curves(model)?;
    cycle_census_on(model, eps, &curves, opts)
}

/// [`cycle_census`] with precomputed critical curves.
pub fn cycle_census_on(model: &SlowFastModel, eps: f64, curves: &[CriticalCurve], opts: &CycleOptions) -> Result<CycleCensus> {
    check_eps(eps)?;
    let report = validate_assumptions(model, curves);
    if !report.passes(true) {
        return Err(Error::AssumptionsFailed(report.failures.join("; ")));
    }
    let cycles: Vec<LimitCycle> =
        curves.par_iter().map(|c| find_limit_cycle(model, eps, c, opts)).collect::<Result<_>>()?;
    census_from_cycles(model.label(), eps, cycles)
}

/// Checks disjointness and common knot type of independently detected
/// cycles and tallies them.
pub fn census_from_cycles(label: &str, eps: f64, cycles: Vec<LimitCycle>) -> Result<CycleCensus> {
    let mut min_separation = f64::INFINITY;
    for i in 0..cycles.len() {
        for j in i + 1..cycles.len() {
            let d = curve_separation(&cycles[i].orbit, &cycles[j].orbit);
            if d <= 1e-6 {
                return Err(Error::Census(format!("cycles {i} and {j} coincide or intersect (distance {d:.3e})")));
            }
            min_separation = min_separation.min(d);
        }
    }
    if let Some(first) = cycles.first() {
        if let Some(c) = cycles.iter().find(|c| c.winding != first.winding) {
            return Err(Error::Census(format!(
                "cycles of different knot types {} and {}",
                first.winding, c.winding
            )));
        }
    }
    let attracting_count = cycles.iter().filter(|c| c.stability == CycleStability::Attracting).count();
    Ok(CycleCensus {
        model: label.to_string(),
        eps,
        repelling_count: cycles.len() - attracting_count,
        attracting_count,
        cycles,
        min_separation,
    })
}

/// `eps * int div dt` lies within `kappa` of the slow divergence integral.
pub fn verify_divergence_bracket(cycle: &LimitCycle, sdi: &SdiValue, kappa: f64) -> Result<bool> {
    if cycle.near_curve_index != sdi.curve_index {
        return Err(Error::IndexMismatch { cycle: cycle.near_curve_index, sdi: sdi.curve_index });
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    let scaled = cycle.eps * cycle.div_integral;
    Ok(scaled >= sdi.value - kappa && scaled <= sdi.value + kappa)
}

/// `l / k` from the cycle's winding pair.
pub fn rotation_number(cycle: &LimitCycle) -> Result<Ratio<i64>> {
    let w = cycle.winding;
    if w.k == 0 {
        return Err(Error::InvalidArgument(format!("rotation number undefined for winding {w}")));
    }
    Ok(Ratio::new(w.l, w.k))
}

/// Hausdorff distance between the cycle near `seed` and `seed` itself, for
/// each `eps` of a decreasing list.
pub fn hausdorff_convergence(
    model: &SlowFastModel,
    seed: &CriticalCurve,
    eps_list: &[f64],
    opts: &CycleOptions,
) -> Result<Vec<(f64, f64)>> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty eps list".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps list must be strictly decreasing".into()));
    }
    for &e in eps_list {
        check_eps(e)?;
    }
    eps_list
        .par_iter()
        .map(|&eps| {
            let c = find_limit_cycle(model, eps, seed, opts)?;
            Ok((eps, polyline_hausdorff_dist(&c.orbit, &seed.curve)?))
        })
        .collect()
}

/// Each value is below its predecessor, allowing `slack` relative increase.
pub fn decreasing_within(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}
