//! Finite-difference derivative of the return map, as a product of
//! derivatives of short transition maps between intermediate sections.

use super::detect::{sample_loop, setup};
use super::section::{advance_to_section, Section};
use super::{CycleOptions, LimitCycle};
use crate::integrate::{Direction, Stepper};
use crate::models::{CriticalCurve, SlowFastModel};
use crate::{Error, Result};

/// Largest divergence integral accumulated between consecutive sections.
const LEG_DIVERGENCE: f64 = 2.0;
const MIN_LEGS: usize = 8;
const FD_STEP: f64 = 1e-6;

/// `ln P'` of the one-loop return map of `cycle`, in forward time.
///
/// Each leg's derivative is a central difference of the transition map
/// between two normal sections of the cycle; the chain rule multiplies
/// them. No divergence values enter the computation.
pub fn return_map_log_derivative(
    model: &SlowFastModel,
    cycle: &LimitCycle,
    seed: &CriticalCurve,
    opts: &CycleOptions,
) -> Result<f64> {
    let idx = cycle.near_curve_index;
    if idx != seed.index {
        return Err(Error::IndexMismatch { cycle: idx, sdi: seed.index });
    }
    let eps = cycle.eps;
    let st = setup(model, eps, seed, opts)?;
    let mut fine = *opts;
    fine.solver = fine.solver.with_rel_tol(opts.solver.rel_tol.min(1e-11)).with_abs_tol(opts.solver.abs_tol.min(1e-13));

    // start from the orbit point in the integrated direction
    let start = match st.direction {
        Direction::Forward => cycle.orbit.samples()[0],
        Direction::Backward => cycle.orbit.samples()[cycle.orbit.len() - 1],
    };
    let section0 = Section::at(model, eps, st.sign, start, idx)?;
    let (times, points, div, _) = sample_loop(model, eps, idx, &st, &section0, start, &fine)?;

    // leg endpoints: indices where the accumulated divergence has moved by
    // LEG_DIVERGENCE, or at least MIN_LEGS legs by time
    let period = times[times.len() - 1];
    let mut marks = vec![0usize];
    for i in 1..times.len() - 1 {
        let last = marks[marks.len() - 1];
        if (div[i] - div[last]).abs() >= LEG_DIVERGENCE || times[i] - times[last] >= period / MIN_LEGS as f64 {
            marks.push(i);
        }
    }
    let mut sections: Vec<Section> =
        marks.iter().map(|&i| Section::at(model, eps, st.sign, points[i], idx)).collect::<Result<_>>()?;
    sections.push(section0.translated(st.loop_shift));

    let mut log_derivative = 0.0;
    for leg in 0..sections.len() - 1 {
        let (from, to) = (&sections[leg], &sections[leg + 1]);
        let budget = st.budget;
        let lateral = |s: f64| -> Result<f64> {
            let mut stepper = Stepper::new(model, eps, from.point(s), st.direction, fine.solver)?;
            Ok(advance_to_section(&mut stepper, to, budget, idx, |_, _| {})?.lateral)
        };
        let d = (lateral(FD_STEP)? - lateral(-FD_STEP)?) / (2.0 * FD_STEP);
        if !(d > 0.0) {
            return Err(Error::NoCycle {
                curve: idx,
                reason: format!("transition map derivative {d:.3e} on leg {leg} is not positive"),
            });
        }
        log_derivative += d.ln();
    }
    Ok(st.sign * log_derivative)
}
