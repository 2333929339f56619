use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CycleCensus, CycleStability};
use crate::integrate::{Direction, SolverOptions, Stepper};
use crate::models::SlowFastModel;
use crate::torus::{CurveIndex, LiftPoint};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinOptions {
    pub solver: SolverOptions,
    /// Grid points closer than this to a cycle are skipped.
    pub exclusion: f64,
    /// A trajectory is captured once this close to a cycle.
    pub capture: f64,
    /// Time budget per point and direction.
    pub max_time: f64,
}

impl Default for BasinOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), exclusion: 0.05, capture: 0.02, max_time: 2000.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinPoint {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub excluded: bool,
    /// Index of the attracting cycle reached in forward time.
    pub omega: Option<usize>,
    /// Index of the repelling cycle reached in backward time.
    pub alpha: Option<usize>,
    /// The time budget ran out before both limits were found.
    pub exhausted: bool,
}

impl BasinPoint {
    pub fn classified(&self) -> bool {
        !self.excluded && self.omega.is_some() && self.alpha.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinCensus {
    pub model: String,
    pub eps: f64,
    pub grid_n: usize,
    pub points: Vec<BasinPoint>,
}

impl BasinCensus {
    pub fn candidates(&self) -> usize {
        self.points.iter().filter(|p| !p.excluded).count()
    }

    pub fn classified(&self) -> usize {
        self.points.iter().filter(|p| p.classified()).count()
    }

    /// Fraction of non-excluded points with both limits found.
    pub fn classified_fraction(&self) -> f64 {
        let n = self.candidates();
        if n == 0 {
            return 1.0;
        }
        self.classified() as f64 / n as f64
    }
}

/// Flows each point of an `n x n` grid of cell centers forward and
/// backward until it is captured by an attracting (resp. repelling) cycle.
pub fn basin_census(model: &SlowFastModel, census: &CycleCensus, grid_n: usize, opts: &BasinOptions) -> Result<BasinCensus> {
    if grid_n < 1 {
        return Err(Error::InvalidArgument("grid must have at least one point".into()));
    }
    if census.cycles.is_empty() {
        return Err(Error::InvalidArgument("census has no cycles".into()));
    }
    let eps = census.eps;
    let indexed: Vec<(usize, CycleStability, CurveIndex)> = census
        .cycles
        .iter()
        .map(|c| (c.near_curve_index, c.stability, CurveIndex::new(&c.orbit, 0.05)))
        .collect();
    let h = TAU / grid_n as f64;
    let cells: Vec<(usize, usize)> = (0..grid_n).flat_map(|i| (0..grid_n).map(move |j| (i, j))).collect();
    let points = cells
        .par_iter()
        .map(|&(i, j)| {
            let p = LiftPoint::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let excluded = indexed.iter().any(|(_, _, ix)| ix.nearest_within(p, opts.exclusion).is_some());
            let mut bp = BasinPoint { i, j, x: p.x, y: p.y, excluded, omega: None, alpha: None, exhausted: false };
            if excluded {
                return Ok(bp);
            }
            bp.omega = capture(model, eps, p, Direction::Forward, CycleStability::Attracting, &indexed, opts)?;
            bp.alpha = capture(model, eps, p, Direction::Backward, CycleStability::Repelling, &indexed, opts)?;
            bp.exhausted = bp.omega.is_none() || bp.alpha.is_none();
            Ok(bp)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BasinCensus { model: model.label().to_string(), eps, grid_n, points })
}

fn capture(
    model: &SlowFastModel,
    eps: f64,
    p: LiftPoint,
    direction: Direction,
    target: CycleStability,
    indexed: &[(usize, CycleStability, CurveIndex)],
    opts: &BasinOptions,
) -> Result<Option<usize>> {
    let mut stepper = Stepper::new(model, eps, p, direction, opts.solver)?;
    while stepper.time() < opts.max_time {
        stepper.step(opts.max_time)?;
        let q = stepper.point();
        let hit = indexed
            .iter()
            .filter(|(_, s, _)| *s == target)
            .find(|(_, _, ix)| ix.nearest_within(q, opts.capture).is_some());
        if let Some((idx, _, _)) = hit {
            return Ok(Some(*idx));
        }
    }
    Ok(None)
}
