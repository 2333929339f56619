//! Geometry of the flat torus `[0, 2pi)^2`: points, lifts to the plane,
//! the quotient metric, winding pairs of closed curves and Hausdorff
//! distances between sampled curves.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Winding residue (in revolutions) above which a curve is not considered closed.
pub const WINDING_RESIDUE_TOL: f64 = 0.1;

/// Default maximal gap between consecutive curve samples.
pub const DEFAULT_SAMPLE_GAP: f64 = 0.01;

/// A point of the torus with both angles in `[0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    x: f64,
    y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(0.0..TAU).contains(&x) || !(0.0..TAU).contains(&y) {
            return Err(Error::InvalidArgument(format!(
                "torus coordinates ({x}, {y}) outside [0, 2pi)"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn lift(&self) -> LiftPoint {
        LiftPoint::new(self.x, self.y)
    }
}

/// Representative of a torus point in the universal cover.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftPoint {
    pub x: f64,
    pub y: f64,
}

impl LiftPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(&self, o: LiftPoint) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.x * c, self.y * c)
    }

    pub fn wrapped(&self) -> Result<TorusPoint> {
        wrap(*self)
    }
}

impl Add for LiftPoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for LiftPoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

fn wrap_angle(v: f64) -> f64 {
    let r = v.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly 2pi
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduce an angle difference to `[-pi, pi]`.
pub fn reduce_angle(d: f64) -> f64 {
    d - TAU * (d / TAU).round()
}

/// Project a lift onto the torus.
pub fn wrap(p: LiftPoint) -> Result<TorusPoint> {
    if !p.x.is_finite() || !p.y.is_finite() {
        return Err(Error::NonFinite { x: p.x, y: p.y });
    }
    Ok(TorusPoint { x: wrap_angle(p.x), y: wrap_angle(p.y) })
}

/// Flat quotient distance between two torus points.
pub fn torus_dist(a: TorusPoint, b: TorusPoint) -> f64 {
    lift_dist(a.lift(), b.lift())
}

/// Flat quotient distance between the torus images of two lifts.
#[inline]
pub fn lift_dist(a: LiftPoint, b: LiftPoint) -> f64 {
    reduce_angle(a.x - b.x).hypot(reduce_angle(a.y - b.y))
}

/// Integer pair `(k, l)`: `k` vertical (meridional) and `l` horizontal
/// (longitudinal) turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindingPair {
    pub k: i64,
    pub l: i64,
}

impl WindingPair {
    pub const fn new(k: i64, l: i64) -> Self {
        Self { k, l }
    }

    pub fn is_coprime(&self) -> bool {
        gcd(self.k, self.l) == 1
    }

    /// Orientation-free representative: `k > 0`, or `k == 0` and `l >= 0`.
    pub fn unoriented(&self) -> Self {
        if self.k < 0 || (self.k == 0 && self.l < 0) {
            Self::new(-self.k, -self.l)
        } else {
            *self
        }
    }

    /// Lift displacement of one traversal, `(2pi l, 2pi k)`.
    pub fn displacement(&self) -> LiftPoint {
        LiftPoint::new(TAU * self.l as f64, TAU * self.k as f64)
    }
}

impl fmt::Display for WindingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k, self.l)
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Sampled closed curve in the universal cover.
///
/// The last sample is the lift of the same torus point as the first one, so
/// `closure_defect` is the lift displacement of one traversal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedCurve {
    samples: Vec<LiftPoint>,
}

impl ClosedCurve {
    pub fn new(samples: Vec<LiftPoint>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyCurve);
        }
        if let Some(p) = samples.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::NonFinite { x: p.x, y: p.y });
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[LiftPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn closure_defect(&self) -> LiftPoint {
        self.samples[self.samples.len() - 1] - self.samples[0]
    }

    /// Largest distance between consecutive samples.
    pub fn max_gap(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    /// Start the traversal at sample `n` instead of sample 0.
    pub fn rotated(&self, n: usize) -> Self {
        let open = &self.samples[..self.samples.len() - 1];
        if open.is_empty() {
            return self.clone();
        }
        let n = n % open.len();
        let d = self.closure_defect();
        let mut out: Vec<LiftPoint> = open[n..].to_vec();
        out.extend(open[..n].iter().map(|&p| p + d));
        out.push(open[n] + d);
        Self { samples: out }
    }

    /// Same torus curve, every sample shifted by `(2pi a, 2pi b)`.
    pub fn translated(&self, a: i64, b: i64) -> Self {
        let s = LiftPoint::new(TAU * a as f64, TAU * b as f64);
        Self { samples: self.samples.iter().map(|&p| p + s).collect() }
    }
}

/// Winding pair of a closed curve, from its lift displacement.
pub fn winding(c: &ClosedCurve) -> Result<WindingPair> {
    let d = c.closure_defect();
    let rk = d.y / TAU;
    let rl = d.x / TAU;
    let residue = (rk - rk.round()).abs().max((rl - rl.round()).abs());
    if !(residue < WINDING_RESIDUE_TOL) {
        return Err(Error::NotClosed { residue });
    }
    Ok(WindingPair::new(rk.round() as i64, rl.round() as i64))
}

/// Symmetric Hausdorff distance between the sample sets of two curves.
pub fn hausdorff_dist(a: &ClosedCurve, b: &ClosedCurve) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCurve);
    }
    Ok(directed_points(a.samples(), b.samples()).max(directed_points(b.samples(), a.samples())))
}

fn directed_points(a: &[LiftPoint], b: &[LiftPoint]) -> f64 {
    a.iter()
        .map(|&p| b.iter().map(|&q| lift_dist(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between the polylines through the samples.
///
/// Sample vertices of each curve are measured against the segments of the
/// other, which removes the sampling offset between two discretizations
/// of the same curve. Segments must be short compared with `pi`.
pub fn polyline_hausdorff_dist(a: &ClosedCurve, b: &ClosedCurve) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCurve);
    }
    Ok(directed_polyline(a.samples(), b.samples())
        .max(directed_polyline(b.samples(), a.samples())))
}

fn directed_polyline(a: &[LiftPoint], b: &[LiftPoint]) -> f64 {
    if b.len() == 1 {
        return directed_points(a, b);
    }
    let grid = SegmentGrid::new(b);
    a.iter().map(|&p| grid.distance(p)).fold(0.0, f64::max)
}

/// Segments of a polyline bucketed by the torus cells their bounding
/// boxes touch.
struct SegmentGrid {
    cells: usize,
    buckets: Vec<Vec<(LiftPoint, LiftPoint)>>,
    all: Vec<(LiftPoint, LiftPoint)>,
}

impl SegmentGrid {
    fn new(pts: &[LiftPoint]) -> Self {
        let longest = pts.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
        let cells = ((TAU / longest.max(0.01)).floor() as usize).clamp(1, 256);
        let mut buckets = vec![Vec::new(); cells * cells];
        let scale = cells as f64 / TAU;
        let mut all = Vec::with_capacity(pts.len());
        for w in pts.windows(2) {
            let a = LiftPoint::new(wrap_angle(w[0].x), wrap_angle(w[0].y));
            let b = a + (w[1] - w[0]);
            all.push((a, b));
            let (i0, i1) = ((a.x.min(b.x) * scale).floor() as i64, (a.x.max(b.x) * scale).floor() as i64);
            let (j0, j1) = ((a.y.min(b.y) * scale).floor() as i64, (a.y.max(b.y) * scale).floor() as i64);
            let n = cells as i64;
            if i1 - i0 >= n || j1 - j0 >= n {
                // longer than the torus: put it everywhere
                for bucket in buckets.iter_mut() {
                    bucket.push((a, b));
                }
                continue;
            }
            for i in i0..=i1 {
                for j in j0..=j1 {
                    let idx = i.rem_euclid(n) as usize * cells + j.rem_euclid(n) as usize;
                    buckets[idx].push((a, b));
                }
            }
        }
        Self { cells, buckets, all }
    }

    fn distance(&self, p: LiftPoint) -> f64 {
        let cell = TAU / self.cells as f64;
        let scale = 1.0 / cell;
        let ci = (wrap_angle(p.x) * scale) as i64;
        let cj = (wrap_angle(p.y) * scale) as i64;
        let n = self.cells as i64;
        let mut reach = 1i64;
        loop {
            if 2 * reach + 1 >= n {
                return self.all.iter().map(|&(a, b)| point_segment_dist(p, a, b)).fold(f64::INFINITY, f64::min);
            }
            let mut best = f64::INFINITY;
            for di in -reach..=reach {
                for dj in -reach..=reach {
                    let idx = (ci + di).rem_euclid(n) as usize * self.cells + (cj + dj).rem_euclid(n) as usize;
                    for &(a, b) in &self.buckets[idx] {
                        best = best.min(point_segment_dist(p, a, b));
                    }
                }
            }
            // every segment within `reach` cells of p has been seen
            if best <= (reach as f64) * cell {
                return best;
            }
            reach *= 2;
        }
    }
}

/// Torus distance from `p` to the lifted segment `[s0, s1]`.
pub fn point_segment_dist(p: LiftPoint, s0: LiftPoint, s1: LiftPoint) -> f64 {
    let w = LiftPoint::new(reduce_angle(p.x - s0.x), reduce_angle(p.y - s0.y));
    let v = s1 - s0;
    let vv = v.dot(v);
    let t = if vv > 0.0 { (w.dot(v) / vv).clamp(0.0, 1.0) } else { 0.0 };
    (w - v.scaled(t)).norm()
}

/// Torus distance between the lifted segments `[a0, a1]` and `[b0, b1]`;
/// zero when they cross.
pub fn segment_dist(a0: LiftPoint, a1: LiftPoint, b0: LiftPoint, b1: LiftPoint) -> f64 {
    let b0r = a0 + LiftPoint::new(reduce_angle(b0.x - a0.x), reduce_angle(b0.y - a0.y));
    let b1r = b0r + (b1 - b0);
    let cross = |o: LiftPoint, p: LiftPoint, q: LiftPoint| (p - o).x * (q - o).y - (p - o).y * (q - o).x;
    let d1 = cross(a0, a1, b0r);
    let d2 = cross(a0, a1, b1r);
    let d3 = cross(b0r, b1r, a0);
    let d4 = cross(b0r, b1r, a1);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_dist(a0, b0, b1)
        .min(point_segment_dist(a1, b0, b1))
        .min(point_segment_dist(b0, a0, a1))
        .min(point_segment_dist(b1, a0, a1))
}

/// Bucketed sample set for repeated nearest-distance queries.
#[derive(Clone, Debug)]
pub struct CurveIndex {
    cells: usize,
    buckets: Vec<Vec<LiftPoint>>,
}

impl CurveIndex {
    pub fn new(curve: &ClosedCurve, cell_size: f64) -> Self {
        let cells = ((TAU / cell_size).floor() as usize).clamp(1, 1024);
        let mut buckets = vec![Vec::new(); cells * cells];
        for p in curve.samples() {
            let (i, j) = Self::cell_of(cells, p);
            buckets[i * cells + j].push(LiftPoint::new(wrap_angle(p.x), wrap_angle(p.y)));
        }
        Self { cells, buckets }
    }

    fn cell_of(cells: usize, p: &LiftPoint) -> (usize, usize) {
        let scale = cells as f64 / TAU;
        let i = ((wrap_angle(p.x) * scale) as usize).min(cells - 1);
        let j = ((wrap_angle(p.y) * scale) as usize).min(cells - 1);
        (i, j)
    }

    /// Distance to the nearest sample if it is within `radius`.
    pub fn nearest_within(&self, p: LiftPoint, radius: f64) -> Option<f64> {
        let cell = TAU / self.cells as f64;
        let reach = ((radius / cell).ceil() as i64).min(self.cells as i64 / 2);
        let (ci, cj) = Self::cell_of(self.cells, &p);
        let n = self.cells as i64;
        let mut best = f64::INFINITY;
        for di in -reach..=reach {
            for dj in -reach..=reach {
                let i = (ci as i64 + di).rem_euclid(n) as usize;
                let j = (cj as i64 + dj).rem_euclid(n) as usize;
                for &q in &self.buckets[i * self.cells + j] {
                    best = best.min(lift_dist(p, q));
                }
            }
        }
        (best <= radius).then_some(best)
    }
}
