//! Critical curves `{f = 0}`: analytic for sine-link and graph models,
//! predictor-corrector continuation otherwise.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{contact_points, ContactPoint, ModelKind, PeriodicAffine, SlowFastModel};
use crate::torus::{
    lift_dist, point_segment_dist, reduce_angle, winding, ClosedCurve, LiftPoint, WindingPair,
    DEFAULT_SAMPLE_GAP,
};
use crate::{Error, Result};

/// |f_x| below this is treated as zero when classifying stability.
const STABILITY_TOL: f64 = 1e-7;
const MIN_STEP: f64 = 1e-3;
const MAX_STEP: f64 = 1e-1;
const MAX_TRACE_LENGTH: f64 = 400.0;
const SEED_FIBERS: [f64; 2] = [0.0, 1.234_567];
const SCAN_POINTS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
    /// `f_x` changes sign along the curve.
    Mixed,
}

impl Stability {
    /// -1 attracting, +1 repelling, 0 mixed.
    pub fn sign(&self) -> i8 {
        match self {
            Stability::Attracting => -1,
            Stability::Repelling => 1,
            Stability::Mixed => 0,
        }
    }
}

/// Global parametrization `t -> (x, y)` of one loop of a critical curve.
///
/// Outside `[t_start, t_end]` the curve is continued periodically in the lift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurveParam {
    /// `x = slope * y + offset`, parameter `y`.
    Line { slope: f64, offset: f64 },
    /// `y = phi(x) + shift`, parameter `x`.
    Graph { phi: PeriodicAffine, shift: f64 },
    /// Parameter `y`; `x` from Newton on `f(., y) = 0` seeded by the table.
    ByY { ts: Vec<f64>, xs: Vec<f64> },
    /// Parameter `x`; `y` from Newton on `f(x, .) = 0` seeded by the table.
    ByX { ts: Vec<f64>, ys: Vec<f64> },
}

/// A closed component of the critical set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurve {
    pub index: usize,
    pub curve: ClosedCurve,
    /// Curve parameter of each sample.
    pub sample_params: Vec<f64>,
    pub winding: WindingPair,
    pub stability: Stability,
    pub contacts: Vec<ContactPoint>,
    pub param: CurveParam,
    pub t_start: f64,
    pub t_end: f64,
    /// Lift displacement of one loop in increasing parameter.
    pub loop_displacement: LiftPoint,
}

impl CriticalCurve {
    pub fn period(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Point at parameter `t` (any real `t`).
    pub fn point(&self, model: &SlowFastModel, t: f64) -> LiftPoint {
        let period = self.period();
        let n = ((t - self.t_start) / period).floor();
        let base = t - n * period;
        self.param.point_in_loop(model, base) + self.loop_displacement.scaled(n)
    }

    /// `dy/dt` at parameter `t`.
    pub fn dy_dt(&self, model: &SlowFastModel, t: f64) -> f64 {
        let p = self.point(model, t);
        match &self.param {
            CurveParam::Line { .. } | CurveParam::ByY { .. } => 1.0,
            CurveParam::Graph { phi, .. } => phi.derivative(t, 1),
            CurveParam::ByX { .. } => {
                let d = model.partials(p.x, p.y);
                -d.f_x / d.f_y
            }
        }
    }

    /// +1 if the slow flow runs towards increasing parameter, -1 otherwise,
    /// 0 if the slow flow vanishes or changes direction on the curve.
    pub fn slow_orientation(&self, model: &SlowFastModel) -> i8 {
        let mut pos = 0usize;
        let mut neg = 0usize;
        for &t in &self.sample_params {
            let p = self.point(model, t);
            let v = model.g(p.x, p.y) * self.dy_dt(model, t);
            if v > STABILITY_TOL {
                pos += 1;
            } else if v < -STABILITY_TOL {
                neg += 1;
            }
        }
        match (pos > 0, neg > 0) {
            (true, false) => 1,
            (false, true) => -1,
            _ => 0,
        }
    }

    /// Sign of the vertical slow velocity `g` on the curve (+1 upward).
    pub fn slow_direction(&self, model: &SlowFastModel) -> i8 {
        let gs: Vec<f64> = self.curve.samples().iter().map(|p| model.g(p.x, p.y)).collect();
        if gs.iter().all(|&g| g > 0.0) {
            1
        } else if gs.iter().all(|&g| g < 0.0) {
            -1
        } else {
            0
        }
    }

    pub fn min_abs_fx(&self, model: &SlowFastModel) -> f64 {
        self.curve
            .samples()
            .iter()
            .map(|p| model.partials(p.x, p.y).f_x.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_abs_g(&self, model: &SlowFastModel) -> f64 {
        self.curve
            .samples()
            .iter()
            .map(|p| model.g(p.x, p.y).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

impl CurveParam {
    fn point_in_loop(&self, model: &SlowFastModel, t: f64) -> LiftPoint {
        match self {
            CurveParam::Line { slope, offset } => LiftPoint::new(slope * t + offset, t),
            CurveParam::Graph { phi, shift } => LiftPoint::new(t, phi.value(t) + shift),
            CurveParam::ByY { ts, xs } => {
                let x0 = interpolate(ts, xs, t);
                let x = newton_1d(x0, |x| {
                    let d = model.partials(x, t);
                    (d.f, d.f_x)
                });
                LiftPoint::new(x, t)
            }
            CurveParam::ByX { ts, ys } => {
                let y0 = interpolate(ts, ys, t);
                let y = newton_1d(y0, |y| {
                    let d = model.partials(t, y);
                    (d.f, d.f_y)
                });
                LiftPoint::new(t, y)
            }
        }
    }
}

fn interpolate(ts: &[f64], vs: &[f64], t: f64) -> f64 {
    let i = match ts.binary_search_by(|a| a.total_cmp(&t)) {
        Ok(i) => return vs[i],
        Err(i) => i.clamp(1, ts.len() - 1),
    };
    let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    vs[i - 1] + w * (vs[i] - vs[i - 1])
}

fn newton_1d(mut v: f64, eval: impl Fn(f64) -> (f64, f64)) -> f64 {
    for _ in 0..40 {
        let (f, df) = eval(v);
        if f == 0.0 || df == 0.0 {
            break;
        }
        let step = f / df;
        v -= step;
        if step.abs() < 1e-15 * (1.0 + v.abs()) {
            break;
        }
    }
    v
}

/// All closed components of `{f = 0}`, indexed in order along a fast fiber.
pub fn critical_curves(model: &SlowFastModel) -> Result<Vec<CriticalCurve>> {
    let mut curves = match model.kind() {
        ModelKind::SineLink { m, k, l, .. } => sine_link_curves(model, *m, *k, *l)?,
        ModelKind::Graph { phi } => graph_curves(model, phi)?,
        ModelKind::General => traced_curves(model)?,
    };
    for c in curves.iter_mut() {
        c.contacts = contact_points(model, c)?;
    }
    Ok(curves)
}

fn sine_link_curves(model: &SlowFastModel, m: u32, k: u32, l: u32) -> Result<Vec<CriticalCurve>> {
    let (kf, lf) = (k as f64, l as f64);
    (0..2 * m as usize)
        .map(|j| {
            // l y - k x = j pi / m
            let level = j as f64 * PI / m as f64;
            let param = CurveParam::Line { slope: lf / kf, offset: -level / kf };
            build_curve(model, j, param, 0.0, TAU * kf, LiftPoint::new(TAU * lf, TAU * kf))
        })
        .collect()
}

fn graph_curves(model: &SlowFastModel, phi: &PeriodicAffine) -> Result<Vec<CriticalCurve>> {
    (0..2)
        .map(|j| {
            let param = CurveParam::Graph { phi: phi.clone(), shift: j as f64 * PI };
            let d = LiftPoint::new(TAU, TAU * phi.q as f64);
            build_curve(model, j, param, 0.0, TAU, d)
        })
        .collect()
}

fn build_curve(
    model: &SlowFastModel,
    index: usize,
    param: CurveParam,
    t_start: f64,
    t_end: f64,
    loop_displacement: LiftPoint,
) -> Result<CriticalCurve> {
    let mut c = CriticalCurve {
        index,
        curve: ClosedCurve::new(vec![LiftPoint::new(0.0, 0.0)])?,
        sample_params: Vec::new(),
        winding: WindingPair::new(0, 0),
        stability: Stability::Mixed,
        contacts: Vec::new(),
        param,
        t_start,
        t_end,
        loop_displacement,
    };
    let mut n = 64usize;
    loop {
        let ts: Vec<f64> = (0..=n).map(|i| t_start + (t_end - t_start) * i as f64 / n as f64).collect();
        let mut pts: Vec<LiftPoint> = ts.iter().map(|&t| c.param.point_in_loop(model, t)).collect();
        // the closing sample is the deck translate of the first
        pts[n] = pts[0] + loop_displacement;
        let curve = ClosedCurve::new(pts)?;
        if curve.max_gap() <= DEFAULT_SAMPLE_GAP || n > 1 << 22 {
            c.curve = curve;
            c.sample_params = ts;
            break;
        }
        let grow = (curve.max_gap() / DEFAULT_SAMPLE_GAP * 1.05).ceil() as usize;
        n *= grow.max(2);
    }
    c.winding = winding(&c.curve)?.unoriented();
    c.stability = classify_stability(model, &c.curve);
    Ok(c)
}

fn classify_stability(model: &SlowFastModel, curve: &ClosedCurve) -> Stability {
    let mut pos = false;
    let mut neg = false;
    for p in curve.samples() {
        let fx = model.partials(p.x, p.y).f_x;
        pos |= fx > STABILITY_TOL;
        neg |= fx < -STABILITY_TOL;
    }
    match (pos, neg) {
        (false, true) => Stability::Attracting,
        (true, false) => Stability::Repelling,
        _ => Stability::Mixed,
    }
}

/// Simple roots of `f(., y)` on `[0, 2pi)`.
pub(crate) fn fiber_roots(model: &SlowFastModel, y: f64) -> Vec<f64> {
    let xs: Vec<f64> = (0..=SCAN_POINTS).map(|i| TAU * i as f64 / SCAN_POINTS as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| model.f(x, y)).collect();
    let mut roots = Vec::new();
    for i in 0..SCAN_POINTS {
        let (a, b) = (fs[i], fs[i + 1]);
        if a == 0.0 {
            roots.push(xs[i]);
        } else if a * b < 0.0 {
            roots.push(bisect(|x| model.f(x, y), xs[i], xs[i + 1], a));
        }
    }
    roots
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn unit_tangent(model: &SlowFastModel, p: LiftPoint) -> Option<LiftPoint> {
    let d = model.partials(p.x, p.y);
    let t = LiftPoint::new(-d.f_y, d.f_x);
    let n = t.norm();
    (n > 1e-12).then(|| t.scaled(1.0 / n))
}

/// Newton projection onto `{f = 0}` along the gradient.
fn project(model: &SlowFastModel, mut p: LiftPoint) -> Option<LiftPoint> {
    for _ in 0..12 {
        let d = model.partials(p.x, p.y);
        let g2 = d.f_x * d.f_x + d.f_y * d.f_y;
        if g2 < 1e-24 {
            return None;
        }
        let step = LiftPoint::new(d.f * d.f_x / g2, d.f * d.f_y / g2);
        p = p - step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    (model.f(p.x, p.y).abs() < 1e-12).then_some(p)
}

/// Traces one closed component through `seed` by tangent prediction and
/// Newton correction orthogonal to the tangent.
pub(crate) fn trace_from(model: &SlowFastModel, seed: LiftPoint) -> Result<Vec<LiftPoint>> {
    let mut tan = unit_tangent(model, seed)
        .ok_or_else(|| Error::Continuation("singular point of f at seed".into()))?;
    if tan.y < 0.0 || (tan.y == 0.0 && tan.x < 0.0) {
        tan = tan.scaled(-1.0);
    }
    let mut pts = vec![seed];
    let mut p = seed;
    let mut h = 0.05;
    let mut length = 0.0;
    loop {
        if length > MAX_TRACE_LENGTH {
            return Err(Error::Continuation(format!(
                "curve through ({:.4}, {:.4}) does not close within length {MAX_TRACE_LENGTH}",
                seed.x, seed.y
            )));
        }
        let predicted = p + tan.scaled(h);
        let accepted = project(model, predicted).and_then(|q| {
            let t_new = unit_tangent(model, q)?;
            let t_new = if t_new.dot(tan) < 0.0 { t_new.scaled(-1.0) } else { t_new };
            ((q - predicted).norm() < 0.3 * h && t_new.dot(tan) > 0.95).then_some((q, t_new))
        });
        let Some((q, t_new)) = accepted else {
            h *= 0.5;
            if h < MIN_STEP {
                return Err(Error::Continuation(format!(
                    "step collapse at ({:.6}, {:.6})",
                    p.x, p.y
                )));
            }
            continue;
        };
        // closes when the chord p -> q passes the seed's translate
        if length > 0.5 {
            let target = q + LiftPoint::new(reduce_angle(seed.x - q.x), reduce_angle(seed.y - q.y));
            let chord = q - p;
            let along = (target - p).dot(chord) / chord.dot(chord);
            if (0.0..=1.0).contains(&along) && point_segment_dist(target, p, q) < 0.2 * h {
                pts.push(target);
                return Ok(pts);
            }
        }
        length += (q - p).norm();
        pts.push(q);
        p = q;
        tan = t_new;
        h = (h * 1.5).min(MAX_STEP);
    }
}

fn traced_curves(model: &SlowFastModel) -> Result<Vec<CriticalCurve>> {
    let mut seeds: Vec<LiftPoint> = Vec::new();
    for &y in &SEED_FIBERS {
        seeds.extend(fiber_roots(model, y).into_iter().map(|x| LiftPoint::new(x, y)));
    }
    let mut traced: Vec<(f64, ClosedCurve, CurveParam, f64, f64, LiftPoint)> = Vec::new();
    for seed in seeds {
        let covered = traced.iter().any(|(_, c, ..)| {
            c.samples().windows(2).any(|w| point_segment_dist(seed, w[0], w[1]) < 1e-3)
        });
        if covered {
            continue;
        }
        let pts = trace_from(model, seed)?;
        let (param, t0, t1, d) = choose_param(model, pts)?;
        // rough curve for the coverage test; the final one is resampled
        let coarse = ClosedCurve::new(
            (0..=2000)
                .map(|i| param.point_in_loop(model, t0 + (t1 - t0) * i as f64 / 2000.0))
                .collect(),
        )?;
        traced.push((seed.x, coarse, param, t0, t1, d));
    }
    if traced.is_empty() {
        return Ok(Vec::new());
    }
    traced.sort_by(|a, b| b.0.total_cmp(&a.0));
    traced
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, param, t0, t1, d))| build_curve(model, i, param, t0, t1, d))
        .collect()
}

fn choose_param(
    model: &SlowFastModel,
    mut pts: Vec<LiftPoint>,
) -> Result<(CurveParam, f64, f64, LiftPoint)> {
    let min_fx = pts.iter().map(|p| model.partials(p.x, p.y).f_x.abs()).fold(f64::INFINITY, f64::min);
    let min_fy = pts.iter().map(|p| model.partials(p.x, p.y).f_y.abs()).fold(f64::INFINITY, f64::min);
    let by_y = min_fx > 1e-3;
    if !by_y && min_fy <= 1e-3 {
        return Err(Error::Continuation(
            "curve folds in both directions; no global graph parametrization".into(),
        ));
    }
    let coord = |p: &LiftPoint| if by_y { p.y } else { p.x };
    if coord(&pts[pts.len() - 1]) < coord(&pts[0]) {
        pts.reverse();
    }
    let monotone = pts.windows(2).all(|w| coord(&w[1]) > coord(&w[0]));
    if !monotone {
        return Err(Error::Continuation("traced curve is not monotone in its parameter".into()));
    }
    let d = pts[pts.len() - 1] - pts[0];
    if d.norm() < 1.0 {
        return Err(Error::Continuation("contractible critical curve".into()));
    }
    let (t0, t1) = (coord(&pts[0]), coord(&pts[pts.len() - 1]));
    let ts: Vec<f64> = pts.iter().map(coord).collect();
    let param = if by_y {
        CurveParam::ByY { ts, xs: pts.iter().map(|p| p.x).collect() }
    } else {
        CurveParam::ByX { ts, ys: pts.iter().map(|p| p.y).collect() }
    };
    Ok((param, t0, t1, d))
}

/// Index of the curve passing within `tol` of `p`, if any.
pub(crate) fn curve_at(curves: &[CriticalCurve], p: LiftPoint, tol: f64) -> Option<usize> {
    curves.iter().position(|c| {
        c.curve.samples().windows(2).any(|w| {
            lift_dist(p, w[0]) < 0.05 && point_segment_dist(p, w[0], w[1]) < tol
        })
    })
}
