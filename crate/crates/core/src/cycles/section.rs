//! Local transverse sections and crossing detection on dense output.

use crate::integrate::{DenseStep, State, Stepper};
use crate::models::SlowFastModel;
use crate::torus::LiftPoint;
use crate::{Error, Result};

/// Crossings farther than this from the section center are ignored.
pub(crate) const SECTION_REACH: f64 = 1.0;

/// Short line through `center` normal to the flow direction `tangent`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Section {
    pub center: LiftPoint,
    pub tangent: LiftPoint,
    pub normal: LiftPoint,
}

impl Section {
    /// Section through `p` normal to the (signed) vector field at `p`.
    pub fn at(model: &SlowFastModel, eps: f64, sign: f64, p: LiftPoint, curve: usize) -> Result<Self> {
        let d = model.partials(p.x, p.y);
        let v = LiftPoint::new(sign * d.f, sign * eps * d.g);
        let n = v.norm();
        if !(n > 1e-12) {
            return Err(Error::SectionDegenerate { curve });
        }
        let tangent = v.scaled(1.0 / n);
        Ok(Self { center: p, tangent, normal: LiftPoint::new(-tangent.y, tangent.x) })
    }

    pub fn translated(&self, d: LiftPoint) -> Self {
        Self { center: self.center + d, ..*self }
    }

    pub fn sigma(&self, q: LiftPoint) -> f64 {
        (q - self.center).dot(self.tangent)
    }

    pub fn lateral(&self, q: LiftPoint) -> f64 {
        (q - self.center).dot(self.normal)
    }

    pub fn point(&self, s: f64) -> LiftPoint {
        self.center + self.normal.scaled(s)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Crossing {
    pub time: f64,
    pub state: State,
    pub lateral: f64,
}

impl Crossing {
    pub fn point(&self) -> LiftPoint {
        LiftPoint::new(self.state[0], self.state[1])
    }
}

/// Crossing of `section` (from behind to ahead) within `step`, if any.
pub(crate) fn crossing_in(step: &DenseStep, section: &Section) -> Option<Crossing> {
    let pt = |s: &State| LiftPoint::new(s[0], s[1]);
    let a = step.start();
    let b = step.end();
    let (sa, sb) = (section.sigma(pt(&a)), section.sigma(pt(&b)));
    if !(sa < 0.0 && sb >= 0.0) {
        return None;
    }
    let near = (pt(&a) - section.center).norm().min((pt(&b) - section.center).norm());
    if near > SECTION_REACH + (pt(&b) - pt(&a)).norm() {
        return None;
    }
    // Illinois regula falsi on the dense output
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut flo, mut fhi) = (sa, sb);
    let mut side = 0i8;
    let mut theta = 1.0;
    for _ in 0..100 {
        theta = (lo * fhi - hi * flo) / (fhi - flo);
        if !(theta > lo && theta < hi) {
            theta = 0.5 * (lo + hi);
        }
        let f = section.sigma(step.point(theta));
        if f == 0.0 || hi - lo < 1e-15 {
            break;
        }
        if f < 0.0 {
            lo = theta;
            flo = f;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = theta;
            fhi = f;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if f.abs() < 1e-15 {
            break;
        }
    }
    let state = step.eval(theta);
    let q = pt(&state);
    if (q - section.center).norm() > SECTION_REACH {
        return None;
    }
    Some(Crossing { time: step.t0 + theta * step.h, state, lateral: section.lateral(q) })
}

/// Steps until the trajectory crosses `section`, or fails after `budget`
/// additional time units.
pub(crate) fn advance_to_section(
    stepper: &mut Stepper<'_>,
    section: &Section,
    budget: f64,
    curve: usize,
    mut on_step: impl FnMut(&DenseStep, Option<&Crossing>),
) -> Result<Crossing> {
    let t_limit = stepper.time() + budget;
    while stepper.time() < t_limit {
        let step = stepper.step(t_limit)?;
        if let Some(c) = crossing_in(&step, section) {
            on_step(&step, Some(&c));
            return Ok(c);
        }
        on_step(&step, None);
    }
    Err(Error::NoCycle { curve, reason: format!("no return to the section within time {budget:.1}") })
}
