//! Dormand-Prince 5(4) integration of `(x', y', z') = (f, eps g, f_x + eps g_y)`
//! on the universal cover; `z` accumulates the divergence along the orbit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::models::SlowFastModel;
use crate::torus::{wrap, LiftPoint, TorusPoint};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Upper bound on the integration time of any single request.
    pub max_time: f64,
    /// Dense-output samples are inserted so that consecutive trajectory
    /// points are at most this far apart.
    pub max_sample_gap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-11, max_step: 1.0, max_time: 1e5, max_sample_gap: 0.01 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.max_time > 0.0
            && self.max_sample_gap > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("solver options must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// `[x, y, z]`
pub type State = [f64; 3];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const MAX_SHRINK: f64 = 5.0;
const MAX_GROW: f64 = 10.0;

/// One accepted step with its continuous extension.
#[derive(Clone, Copy, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [State; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> State {
        self.rcont[0]
    }

    pub fn end(&self) -> State {
        std::array::from_fn(|i| self.rcont[0][i] + self.rcont[1][i])
    }

    /// State at `t0 + theta h`, `theta` in `[0, 1]`.
    pub fn eval(&self, theta: f64) -> State {
        let r = &self.rcont;
        let t1 = 1.0 - theta;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + t1 * (r[2][i] + theta * (r[3][i] + t1 * r[4][i])))
        })
    }

    pub fn point(&self, theta: f64) -> LiftPoint {
        let s = self.eval(theta);
        LiftPoint::new(s[0], s[1])
    }
}

/// Adaptive stepper for the augmented field, forward in its own time
/// variable; [`Direction::Backward`] integrates the reversed field.
pub struct Stepper<'a> {
    model: &'a SlowFastModel,
    eps: f64,
    sign: f64,
    opts: SolverOptions,
    t: f64,
    y: State,
    k1: State,
    h: f64,
    err_old: f64,
    steps: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a SlowFastModel, eps: f64, p0: LiftPoint, direction: Direction, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be finite and >= 0, got {eps}")));
        }
        if !p0.x.is_finite() || !p0.y.is_finite() {
            return Err(Error::NonFinite { x: p0.x, y: p0.y });
        }
        let mut s = Self {
            model,
            eps,
            sign: direction.sign(),
            opts,
            t: 0.0,
            y: [p0.x, p0.y, 0.0],
            k1: [0.0; 3],
            h: 0.0,
            err_old: 1e-4,
            steps: 0,
        };
        s.k1 = s.rhs(&s.y);
        s.h = s.initial_step();
        Ok(s)
    }

    #[inline]
    fn rhs(&self, s: &State) -> State {
        let d = self.model.partials(s[0], s[1]);
        let e = self.eps;
        [self.sign * d.f, self.sign * e * d.g, self.sign * (d.f_x + e * d.g_y)]
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.abs_tol + self.opts.rel_tol * a.abs().max(b.abs()).min(std::f64::consts::TAU)
    }

    fn initial_step(&self) -> f64 {
        let speed = self.k1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = if speed > 0.0 { 0.01 / speed } else { self.opts.max_step };
        h.clamp(1e-6, self.opts.max_step)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> State {
        self.y
    }

    pub fn point(&self) -> LiftPoint {
        LiftPoint::new(self.y[0], self.y[1])
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Advances by one accepted step, never past `t_stop`.
    pub fn step(&mut self, t_stop: f64) -> Result<DenseStep> {
        if t_stop <= self.t {
            return Err(Error::InvalidArgument(format!("step target {t_stop} not ahead of {}", self.t)));
        }
        let y = self.y;
        let k1 = self.k1;
        loop {
            let mut h = self.h.min(self.opts.max_step);
            let last = self.t + h >= t_stop;
            if last {
                h = t_stop - self.t;
            }
            if !last && h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t: self.t });
            }
            let k2 = self.rhs(&std::array::from_fn(|i| y[i] + h * A21 * k1[i]));
            let k3 = self.rhs(&std::array::from_fn(|i| y[i] + h * (A31 * k1[i] + A32 * k2[i])));
            let k4 = self.rhs(&std::array::from_fn(|i| y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])));
            let k5 = self.rhs(&std::array::from_fn(|i| {
                y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            }));
            let k6 = self.rhs(&std::array::from_fn(|i| {
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            }));
            let y1: State = std::array::from_fn(|i| {
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
            });
            let k7 = self.rhs(&y1);
            let mut err = 0.0;
            for i in 0..3 {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let r = e / self.scale(y[i], y1[i]);
                err += r * r;
            }
            let err = (err / 3.0).sqrt();
            if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
                self.h = h / MAX_SHRINK;
                continue;
            }
            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(1.0 / MAX_GROW, MAX_SHRINK);
                self.err_old = err.max(1e-4);
                let mut rcont = [[0.0; 3]; 5];
                for i in 0..3 {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k7[i] - bspl;
                    rcont[4][i] =
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                let t0 = self.t;
                self.t = if last { t_stop } else { self.t + h };
                self.y = y1;
                self.k1 = k7;
                self.steps += 1;
                // keep the proposal from the controller, not the clipped step
                let proposal = h / fac;
                self.h = if last { proposal.max(self.h) } else { proposal };
                return Ok(DenseStep { t0, h: self.t - t0, rcont });
            }
            self.h = h / (fac11 / SAFETY).min(MAX_SHRINK);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Elapsed time of the integrated field, strictly increasing from 0.
    pub times: Vec<f64>,
    pub points: Vec<LiftPoint>,
    /// Running integral of the divergence of the integrated field.
    pub div_accum: Vec<f64>,
    pub eps: f64,
    pub label: String,
    pub direction: Direction,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end(&self) -> LiftPoint {
        self.points[self.points.len() - 1]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x_lift", "y_lift", "x_wrapped", "y_wrapped", "div_accum"])?;
        for ((t, p), z) in self.times.iter().zip(&self.points).zip(&self.div_accum) {
            let q = wrap(*p)?;
            w.write_record([t, &p.x, &p.y, &q.x(), &q.y(), z].map(|v| format!("{v:.12e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Appends dense samples of `step` so that the spatial gap stays below `gap`.
pub(crate) fn push_dense(step: &DenseStep, gap: f64, times: &mut Vec<f64>, points: &mut Vec<LiftPoint>, div: &mut Vec<f64>) {
    let a = step.start();
    let b = step.end();
    let dist = (b[0] - a[0]).hypot(b[1] - a[1]);
    let n = ((dist / gap).ceil() as usize).max(1);
    for j in 1..=n {
        let theta = j as f64 / n as f64;
        let s = if j == n { b } else { step.eval(theta) };
        times.push(step.t0 + theta * step.h);
        points.push(LiftPoint::new(s[0], s[1]));
        div.push(s[2]);
    }
}

/// Integrates for time `t_end` from `p0`.
pub fn flow(
    model: &SlowFastModel,
    eps: f64,
    p0: TorusPoint,
    t_end: f64,
    opts: &SolverOptions,
    direction: Direction,
) -> Result<Trajectory> {
    flow_from_lift(model, eps, p0.lift(), t_end, opts, direction)
}

pub fn flow_from_lift(
    model: &SlowFastModel,
    eps: f64,
    p0: LiftPoint,
    t_end: f64,
    opts: &SolverOptions,
    direction: Direction,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("integration time must be positive, got {t_end}")));
    }
    if t_end > opts.max_time {
        return Err(Error::MaxTimeExceeded { max_time: opts.max_time, target: t_end });
    }
    let mut st = Stepper::new(model, eps, p0, direction, *opts)?;
    let mut times = vec![0.0];
    let mut points = vec![p0];
    let mut div = vec![0.0];
    while st.time() < t_end {
        let step = st.step(t_end)?;
        push_dense(&step, opts.max_sample_gap, &mut times, &mut points, &mut div);
    }
    Ok(Trajectory { times, points, div_accum: div, eps, label: model.label().to_string(), direction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sine_link_model, FieldExpr, SlowVariant, TrigPoly2, TrigTerm};
    use crate::torus::reduce_angle;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn eq1() -> SlowFastModel {
        sine_link_model(1, 1, 1, SlowVariant::Unit).unwrap()
    }

    #[test]
    fn dense_output_matches_restarted_integration() {
        let m = eq1();
        let opts = SolverOptions::default();
        let mut st = Stepper::new(&m, 0.1, LiftPoint::new(1.0, 0.2), Direction::Forward, opts).unwrap();
        for _ in 0..20 {
            let step = st.step(1e3).unwrap();
            let a = step.start();
            for theta in [0.25, 0.5, 0.8] {
                let fine = opts.with_rel_tol(1e-12).with_abs_tol(1e-14);
                let mut r = Stepper::new(&m, 0.1, LiftPoint::new(a[0], a[1]), Direction::Forward, fine).unwrap();
                let t = theta * step.h;
                while r.time() < t {
                    r.step(t).unwrap();
                }
                let d = step.eval(theta);
                let e = r.state();
                for i in 0..2 {
                    assert!((d[i] - e[i]).abs() < 1e-7, "theta {theta}: {d:?} vs {e:?}");
                }
                assert!((d[2] - a[2] - e[2]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn exponential_decay_is_accurate() {
        // on the fiber y = 0, x' = sin(-x) near 0: compare with the exact
        // solution tan(x/2) = tan(x0/2) e^{-t}
        let m = eq1();
        let x0 = 1.0;
        let tr = flow(&m, 0.0, TorusPoint::new(x0, 0.0).unwrap(), 3.0, &SolverOptions::default(), Direction::Forward)
            .unwrap();
        let exact = 2.0 * ((x0 / 2.0).tan() * (-3.0f64).exp()).atan();
        assert!((tr.end().x - exact).abs() < 1e-9);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(tr.div_accum[0], 0.0);
        assert_eq!(tr.times.len(), tr.points.len());
    }

    #[test]
    fn eps_zero_keeps_fibers() {
        let m = eq1();
        let p0 = TorusPoint::new(2.0, 0.7).unwrap();
        let tr = flow(&m, 0.0, p0, 50.0, &SolverOptions::default(), Direction::Forward).unwrap();
        assert!(tr.points.iter().all(|p| p.y == 0.7));
    }

    #[test]
    fn equilibrium_on_critical_curve() {
        let m = eq1();
        let tr = flow(&m, 0.0, TorusPoint::new(1.0, 1.0).unwrap(), 10.0, &SolverOptions::default(), Direction::Forward)
            .unwrap();
        assert!(tr.points.iter().all(|p| p.x == 1.0 && p.y == 1.0));
        // divergence -1 on C_-
        assert!((tr.div_accum[tr.len() - 1] + 10.0).abs() < 1e-9);
    }

    #[test]
    fn eq1_approaches_attracting_curve() {
        let m = eq1();
        let p0 = TorusPoint::new(0.0, FRAC_PI_2).unwrap();
        let opts = SolverOptions::default();
        let tr = flow(&m, 0.05, p0, 500.0, &opts, Direction::Forward).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.points) {
            if *t >= 250.0 {
                assert!(reduce_angle(p.y - p.x).abs() / 2f64.sqrt() < 0.1);
            }
        }
        let tight = opts.with_rel_tol(1e-10).with_abs_tol(1e-12);
        let reference = flow(&m, 0.05, p0, 500.0, &tight, Direction::Forward).unwrap();
        assert!((reference.end() - tr.end()).norm() < 1e-6);
    }

    #[test]
    fn halving_tolerance_converges() {
        let m = sine_link_model(1, 3, 2, SlowVariant::Unit).unwrap();
        let p0 = TorusPoint::new(0.4, 2.0).unwrap();
        let t_end = 40.0;
        let mut prev: Option<Trajectory> = None;
        for rel in [1e-7, 5e-8, 2.5e-8] {
            let opts = SolverOptions::default().with_rel_tol(rel).with_abs_tol(rel * 1e-2);
            let tr = flow(&m, 0.1, p0, t_end, &opts, Direction::Forward).unwrap();
            if let Some(p) = prev {
                let length: f64 = tr.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
                assert!((p.end() - tr.end()).norm() < 10.0 * 2.0 * rel * length.max(1.0));
            }
            prev = Some(tr);
        }
    }

    #[test]
    fn backward_undoes_forward() {
        let m = sine_link_model(2, 1, 1, SlowVariant::Unit).unwrap();
        let opts = SolverOptions::default();
        let p0 = LiftPoint::new(1.0, 2.5);
        let fwd = flow_from_lift(&m, 0.1, p0, 5.0, &opts, Direction::Forward).unwrap();
        let back = flow_from_lift(&m, 0.1, fwd.end(), 5.0, &opts, Direction::Backward).unwrap();
        assert!((back.end() - p0).norm() < 1e-6);
        let z_f = fwd.div_accum[fwd.len() - 1];
        let z_b = back.div_accum[back.len() - 1];
        assert!((z_f + z_b).abs() < 1e-6);
    }

    #[test]
    fn divergence_matches_jacobian_determinant() {
        let fast = TrigPoly2::new(vec![TrigTerm::sin(-1, 1, 1.0), TrigTerm::cos(1, 2, 0.3)]);
        let slow = TrigPoly2::new(vec![TrigTerm::cos(0, 0, 1.0), TrigTerm::cos(-1, 1, 0.5), TrigTerm::sin(0, 1, 0.4)]);
        let m = SlowFastModel::new("wavy", FieldExpr::Trig(fast), FieldExpr::Trig(slow));
        let opts = SolverOptions::default().with_rel_tol(1e-12).with_abs_tol(1e-14);
        let eps = 0.2;
        let t_end = 4.0;
        let p0 = LiftPoint::new(0.9, 2.2);
        let end = |p: LiftPoint| flow_from_lift(&m, eps, p, t_end, &opts, Direction::Forward).unwrap().end();
        let d = 1e-5;
        let dx = (end(p0 + LiftPoint::new(d, 0.0)) - end(p0 - LiftPoint::new(d, 0.0))).scaled(0.5 / d);
        let dy = (end(p0 + LiftPoint::new(0.0, d)) - end(p0 - LiftPoint::new(0.0, d))).scaled(0.5 / d);
        let log_det = (dx.x * dy.y - dx.y * dy.x).ln();
        let tr = flow_from_lift(&m, eps, p0, t_end, &opts, Direction::Forward).unwrap();
        let z = tr.div_accum[tr.len() - 1];
        assert!((z - log_det).abs() < 1e-4, "z = {z}, ln det = {log_det}");
    }

    #[test]
    fn invalid_requests() {
        let m = eq1();
        let p = TorusPoint::new(0.0, PI).unwrap();
        let opts = SolverOptions::default();
        assert!(flow(&m, 0.1, p, -1.0, &opts, Direction::Forward).is_err());
        assert!(flow(&m, -0.1, p, 1.0, &opts, Direction::Forward).is_err());
        assert!(matches!(flow(&m, 0.1, p, 1e6, &opts, Direction::Forward), Err(Error::MaxTimeExceeded { .. })));
        let bad = SolverOptions { rel_tol: 0.0, ..opts };
        assert!(flow(&m, 0.1, p, 1.0, &bad, Direction::Forward).is_err());
    }

    #[test]
    fn csv_columns() {
        let m = eq1();
        let tr = flow(&m, 0.1, TorusPoint::new(0.5, 6.0).unwrap(), 2.0, &SolverOptions::default(), Direction::Forward)
            .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x_lift,y_lift,x_wrapped,y_wrapped,div_accum");
        assert_eq!(lines.count(), tr.len());
    }
}
