use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::section::{advance_to_section, Crossing, Section};
use super::{CycleOptions, CycleStability, LimitCycle};
use crate::integrate::{push_dense, DenseStep, Direction, Stepper};
use crate::models::{CriticalCurve, SlowFastModel, Stability};
use crate::torus::{polyline_hausdorff_dist, winding, ClosedCurve, CurveIndex, LiftPoint};
use crate::{Error, Result};

pub const MAX_EPS: f64 = 0.25;

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= MAX_EPS) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, {MAX_EPS}], got {eps}")));
    }
    Ok(())
}

/// Geometry shared by all detections on one seed curve.
pub(crate) struct Setup {
    pub direction: Direction,
    pub sign: f64,
    /// Lift displacement of one loop in the integrated direction.
    pub loop_shift: LiftPoint,
    /// Time allowed for one return.
    pub budget: f64,
}

pub(crate) fn setup(model: &SlowFastModel, eps: f64, seed: &CriticalCurve, opts: &CycleOptions) -> Result<Setup> {
    let idx = seed.index;
    let direction = match seed.stability {
        Stability::Attracting => Direction::Forward,
        Stability::Repelling => Direction::Backward,
        Stability::Mixed => {
            return Err(Error::NoCycle { curve: idx, reason: "seed curve has mixed stability".into() })
        }
    };
    let orientation = seed.slow_orientation(model);
    if orientation == 0 {
        return Err(Error::NoCycle { curve: idx, reason: "slow flow vanishes or reverses on the seed".into() });
    }
    let sign = direction.sign();
    let loop_shift = seed.loop_displacement.scaled(orientation as f64 * sign);
    // slow-time length of one loop, int |dy / g|
    let s = seed.curve.samples();
    let slow_time: f64 = s
        .windows(2)
        .map(|w| {
            let m = (w[0] + w[1]).scaled(0.5);
            (w[1].y - w[0].y).abs() / model.g(m.x, m.y).abs()
        })
        .sum();
    let budget = (3.0 * slow_time / eps + 100.0).min(opts.solver.max_time);
    Ok(Setup { direction, sign, loop_shift, budget })
}

/// Lateral coordinate of the first return to `section + loop_shift` from
/// `section.point(s)`.
fn return_lateral(model: &SlowFastModel, eps: f64, idx: usize, st: &Setup, section: &Section, s: f64, opts: &CycleOptions) -> Result<f64> {
    let mut stepper = Stepper::new(model, eps, section.point(s), st.direction, opts.solver)?;
    let target = section.translated(st.loop_shift);
    Ok(advance_to_section(&mut stepper, &target, st.budget, idx, |_, _| {})?.lateral)
}

/// Orbit samples from `p` to its first return, with the crossing.
pub(crate) fn sample_loop(
    model: &SlowFastModel,
    eps: f64,
    idx: usize,
    st: &Setup,
    section: &Section,
    p: LiftPoint,
    opts: &CycleOptions,
) -> Result<(Vec<f64>, Vec<LiftPoint>, Vec<f64>, Crossing)> {
    let mut stepper = Stepper::new(model, eps, p, st.direction, opts.solver)?;
    let target = section.translated(st.loop_shift);
    let gap = opts.solver.max_sample_gap;
    let mut times = vec![0.0];
    let mut points = vec![p];
    let mut div = vec![0.0];
    let crossing = advance_to_section(&mut stepper, &target, st.budget, idx, |step: &DenseStep, c: Option<&Crossing>| {
        match c {
            None => push_dense(step, gap, &mut times, &mut points, &mut div),
            Some(c) => {
                let theta_c = (c.time - step.t0) / step.h;
                let a = step.start();
                let dist = (c.state[0] - a[0]).hypot(c.state[1] - a[1]);
                let n = ((dist / gap).ceil() as usize).max(1);
                for j in 1..n {
                    let theta = theta_c * j as f64 / n as f64;
                    let s = step.eval(theta);
                    times.push(step.t0 + theta * step.h);
                    points.push(LiftPoint::new(s[0], s[1]));
                    div.push(s[2]);
                }
                times.push(c.time);
                points.push(c.point());
                div.push(c.state[2]);
            }
        }
    })?;
    Ok((times, points, div, crossing))
}

/// Detects the limit cycle near `seed`: forward for an attracting seed,
/// backward (reversed field) for a repelling one.
///
/// Long loops can leave the returns jittering above `section_tol` at the
/// configured solver tolerance; detection is then retried with the solver
/// tolerances tightened by `TIGHTEN` at most `MAX_TIGHTEN` times.
pub fn find_limit_cycle(model: &SlowFastModel, eps: f64, seed: &CriticalCurve, opts: &CycleOptions) -> Result<LimitCycle> {
    check_eps(eps)?;
    opts.validate()?;
    let mut o = *opts;
    let mut tries = 0;
    loop {
        match detect(model, eps, seed, &o) {
            Err(Error::NoCycle { reason, .. }) if tries < MAX_TIGHTEN && reason.starts_with(NOISY) => {
                tries += 1;
                o.solver = o
                    .solver
                    .with_rel_tol((o.solver.rel_tol / TIGHTEN).max(MIN_REL_TOL))
                    .with_abs_tol((o.solver.abs_tol / TIGHTEN).max(MIN_REL_TOL * 1e-2));
            }
            r => return r,
        }
    }
}

const TIGHTEN: f64 = 100.0;
const MAX_TIGHTEN: usize = 2;
const MIN_REL_TOL: f64 = 1e-13;
/// Prefix of the failure reasons that tighter tolerances can cure.
const NOISY: &str = "returns";

fn detect(model: &SlowFastModel, eps: f64, seed: &CriticalCurve, opts: &CycleOptions) -> Result<LimitCycle> {
    let idx = seed.index;
    let st = setup(model, eps, seed, opts)?;
    let open = seed.curve.len() - 1;
    let start = seed.curve.samples()[opts.start_sample % open.max(1)] + LiftPoint::new(opts.start_offset, 0.0);

    let mut stepper = Stepper::new(model, eps, start, st.direction, opts.solver)?;
    while stepper.time() < opts.transient {
        stepper.step(opts.transient)?;
    }
    let p = stepper.point();
    let section = Section::at(model, eps, st.sign, p, idx)?;

    // successive returns to the translated sections
    let mut s_prev = 0.0;
    let mut settled = None;
    for j in 1..=opts.max_returns {
        let target = section.translated(st.loop_shift.scaled(j as f64));
        let c = advance_to_section(&mut stepper, &target, st.budget, idx, |_, _| {})?;
        if (c.lateral - s_prev).abs() < opts.section_tol {
            settled = Some(c.lateral);
            break;
        }
        s_prev = c.lateral;
    }
    let Some(s0) = settled else {
        return Err(Error::NoCycle {
            curve: idx,
            reason: format!("returns did not settle within {} loops", opts.max_returns),
        });
    };

    // secant refinement of the fixed point of the one-loop return
    let g = |s: f64| return_lateral(model, eps, idx, &st, &section, s, opts).map(|r| r - s);
    let mut best = (s0, g(s0)?);
    let (mut sa, mut ga) = best;
    let mut sb = sa + ga;
    for _ in 0..opts.max_secant {
        if best.1.abs() < 1e-13 || (sb - sa).abs() < 1e-15 {
            break;
        }
        let gb = g(sb)?;
        if gb.abs() < best.1.abs() {
            best = (sb, gb);
        }
        let next = if gb != ga { sb - gb * (sb - sa) / (gb - ga) } else { sb + gb };
        (sa, ga, sb) = (sb, gb, next);
    }
    let (s_star, residual) = best;
    if residual.abs() > opts.section_tol {
        return Err(Error::NoCycle {
            curve: idx,
            reason: format!("returns: secant refinement stalled at residual {residual:.3e}"),
        });
    }

    let p_star = section.point(s_star);
    let (_, mut points, _, crossing) = sample_loop(model, eps, idx, &st, &section, p_star, opts)?;
    let n = points.len();
    points[n - 1] = p_star + st.loop_shift;
    if st.direction == Direction::Backward {
        points.reverse();
        let back = st.loop_shift;
        for q in points.iter_mut() {
            *q = *q - back;
        }
    }
    let orbit = ClosedCurve::new(points)?;
    let div_integral = st.sign * crossing.state[2];
    let stability = if div_integral < 0.0 { CycleStability::Attracting } else { CycleStability::Repelling };
    let expected = match st.direction {
        Direction::Forward => CycleStability::Attracting,
        Direction::Backward => CycleStability::Repelling,
    };
    if stability != expected {
        return Err(Error::NoCycle {
            curve: idx,
            reason: format!("divergence integral {div_integral:.4e} contradicts the seed's stability"),
        });
    }

    let index = CurveIndex::new(&seed.curve, 0.05);
    if let Some(far) = orbit.samples().iter().find(|&&q| index.nearest_within(q, opts.neighborhood).is_none()) {
        return Err(Error::NoCycle {
            curve: idx,
            reason: format!("orbit leaves the {} neighborhood of the seed at ({:.4}, {:.4})", opts.neighborhood, far.x, far.y),
        });
    }

    Ok(LimitCycle {
        winding: winding(&orbit)?.unoriented(),
        orbit,
        period: crossing.time,
        div_integral,
        log_multiplier: div_integral,
        multiplier: div_integral.exp(),
        stability,
        canard: stability == CycleStability::Repelling,
        eps,
        near_curve_index: idx,
        section_residual: residual.abs(),
    })
}

/// Largest Hausdorff distance between `base` and the cycles detected from
/// `n` random starting points near `seed`.
pub fn restart_spread(
    model: &SlowFastModel,
    eps: f64,
    seed: &CriticalCurve,
    base: &LimitCycle,
    n: usize,
    rng_seed: u64,
    opts: &CycleOptions,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ (seed.index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let mut o = *opts;
        o.start_sample = rng.gen_range(0..seed.curve.len() - 1);
        let mag = rng.gen_range(0.03..opts.start_offset.max(0.031));
        o.start_offset = if rng.gen_bool(0.5) { mag } else { -mag };
        let c = find_limit_cycle(model, eps, seed, &o)?;
        worst = worst.max(polyline_hausdorff_dist(&base.orbit, &c.orbit)?);
    }
    Ok(worst)
}
