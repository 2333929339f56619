//! Limit cycles near the critical curves: detection by return maps on
//! local transverse sections, classification, censuses and the
//! quantitative checks against slow divergence integrals.

mod basin;
mod census;
mod detect;
mod poincare;
mod section;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::integrate::SolverOptions;
use crate::torus::{wrap, ClosedCurve, WindingPair};
use crate::{Error, Result};

pub use basin::{basin_census, BasinCensus, BasinOptions, BasinPoint};
pub use census::{
    census_from_cycles, cycle_census, cycle_census_on, decreasing_within, hausdorff_convergence, rotation_number,
    strictly_decreasing, verify_divergence_bracket, CycleCensus,
};
pub use detect::{find_limit_cycle, restart_spread, MAX_EPS};
pub use poincare::return_map_log_derivative;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleStability {
    Attracting,
    Repelling,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    pub solver: SolverOptions,
    /// Integration time before the first section is placed.
    pub transient: f64,
    /// Horizontal offset of the starting point from the seed sample.
    pub start_offset: f64,
    pub start_sample: usize,
    /// Successive returns closer than this (section coordinate) have settled.
    pub section_tol: f64,
    pub max_returns: usize,
    pub max_secant: usize,
    /// The cycle must stay this close to its seed curve.
    pub neighborhood: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            transient: 50.0,
            start_offset: 0.1,
            start_sample: 0,
            section_tol: 1e-10,
            max_returns: 25,
            max_secant: 50,
            neighborhood: 0.3,
        }
    }
}

impl CycleOptions {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let ok = self.transient >= 0.0
            && self.start_offset.is_finite()
            && self.section_tol > 0.0
            && self.max_returns > 0
            && self.neighborhood > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid cycle options {self:?}")));
        }
        Ok(())
    }
}

pub(crate) mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// A hyperbolic periodic orbit near one critical curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    /// One period in forward time; the last sample is the first one
    /// translated by the loop displacement.
    pub orbit: ClosedCurve,
    /// Period in fast time.
    pub period: f64,
    pub winding: WindingPair,
    /// Integral of the divergence over one period, forward time.
    pub div_integral: f64,
    /// Natural log of the return-map multiplier.
    pub log_multiplier: f64,
    /// `exp(log_multiplier)`; overflows to null in JSON when huge.
    #[serde(with = "finite_or_null")]
    pub multiplier: f64,
    pub stability: CycleStability,
    pub canard: bool,
    pub eps: f64,
    pub near_curve_index: usize,
    /// Residual of the return-map fixed point in section coordinates.
    pub section_residual: f64,
}

impl LimitCycle {
    /// Multiplier in decimal scientific notation, exact even when the
    /// `f64` value under- or overflows.
    pub fn multiplier_text(&self) -> String {
        let l10 = self.log_multiplier / std::f64::consts::LN_10;
        let e = l10.floor();
        format!("{:.6}e{}", 10f64.powf(l10 - e), e as i64)
    }
}

/// One row per cycle.
pub fn write_census_csv<W: Write>(census: &CycleCensus, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "eps",
        "cycle_index",
        "stability",
        "canard",
        "winding_k",
        "winding_l",
        "rotation_number",
        "period",
        "div_integral",
        "eps_div_integral",
        "log_multiplier",
        "multiplier",
    ])?;
    for c in &census.cycles {
        let rot = rotation_number(c).map(|r| format!("{}/{}", r.numer(), r.denom())).unwrap_or_else(|_| "undefined".into());
        w.write_record([
            format!("{}", c.eps),
            c.near_curve_index.to_string(),
            stability_name(c.stability).to_string(),
            c.canard.to_string(),
            c.winding.k.to_string(),
            c.winding.l.to_string(),
            rot,
            format!("{:.12e}", c.period),
            format!("{:.12e}", c.div_integral),
            format!("{:.12e}", c.eps * c.div_integral),
            format!("{:.12e}", c.log_multiplier),
            c.multiplier_text(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Orbit samples of every cycle in a census.
pub fn write_orbits_csv<W: Write>(census: &CycleCensus, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "cycle_index", "stability", "sample", "x_lift", "y_lift", "x_wrapped", "y_wrapped"])?;
    for c in &census.cycles {
        for (n, p) in c.orbit.samples().iter().enumerate() {
            let q = wrap(*p)?;
            w.write_record([
                format!("{}", c.eps),
                c.near_curve_index.to_string(),
                stability_name(c.stability).to_string(),
                n.to_string(),
                format!("{:.12e}", p.x),
                format!("{:.12e}", p.y),
                format!("{:.12e}", q.x()),
                format!("{:.12e}", q.y()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per grid point.
pub fn write_basin_csv<W: Write>(basin: &BasinCensus, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "x", "y", "excluded", "omega_index", "alpha_index", "exhausted"])?;
    let opt = |v: Option<usize>| v.map(|i| i.to_string()).unwrap_or_default();
    for p in &basin.points {
        w.write_record([
            p.i.to_string(),
            p.j.to_string(),
            format!("{:.12e}", p.x),
            format!("{:.12e}", p.y),
            p.excluded.to_string(),
            opt(p.omega),
            opt(p.alpha),
            p.exhausted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn stability_name(s: CycleStability) -> &'static str {
    match s {
        CycleStability::Attracting => "attracting",
        CycleStability::Repelling => "repelling",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{critical_curves, sine_link_model, SlowVariant};
    use crate::sdi::slow_divergence_integral;
    use crate::torus::{polyline_hausdorff_dist, reduce_angle, LiftPoint};
    use std::f64::consts::TAU;

    #[test]
    fn eq1_cycles_sit_on_the_invariant_lines() {
        // y - x = u with sin u = eps is invariant; it is the attracting cycle
        let m = sine_link_model(1, 1, 1, SlowVariant::Unit).unwrap();
        let cs = critical_curves(&m).unwrap();
        let eps = 0.05;
        let opts = CycleOptions::default();
        let a = find_limit_cycle(&m, eps, &cs[0], &opts).unwrap();
        let u_star = eps.asin();
        for p in a.orbit.samples() {
            assert!((reduce_angle(p.y - p.x) - u_star).abs() < 1e-8);
        }
        assert_eq!(a.winding, WindingPair::new(1, 1));
        assert_eq!(a.stability, CycleStability::Attracting);
        assert!(!a.canard && a.multiplier < 1.0);
        assert!((a.period - TAU / eps).abs() < 1e-6, "{} {}", a.period, TAU / eps);
        // div = -cos u* along the orbit
        let exact = -u_star.cos() * TAU / eps;
        assert!((a.div_integral - exact).abs() < 1e-6 * exact.abs());

        let r = find_limit_cycle(&m, eps, &cs[1], &opts).unwrap();
        for p in r.orbit.samples() {
            assert!((reduce_angle(p.y - p.x) - (std::f64::consts::PI - u_star)).abs() < 1e-8);
        }
        assert_eq!(r.stability, CycleStability::Repelling);
        assert!(r.canard && r.multiplier > 1.0);
        assert!((r.div_integral + exact).abs() < 1e-6 * exact.abs());
        // listed in forward time: y increases along the orbit
        let s = r.orbit.samples();
        assert!(s[s.len() - 1].y > s[0].y);
    }

    #[test]
    fn restarts_find_the_same_cycle() {
        let m = sine_link_model(1, 3, 2, SlowVariant::Unit).unwrap();
        let cs = critical_curves(&m).unwrap();
        let opts = CycleOptions::default();
        for c in &cs {
            let base = find_limit_cycle(&m, 0.1, c, &opts).unwrap();
            let spread = restart_spread(&m, 0.1, c, &base, 5, 0, &opts).unwrap();
            assert!(spread < 1e-6, "curve {}: {spread}", c.index);
        }
    }

    #[test]
    fn repelling_cycle_is_attracting_for_the_reversed_field() {
        let m = sine_link_model(2, 1, 1, SlowVariant::Unit).unwrap();
        let rev = m.reversed();
        let cs = critical_curves(&m).unwrap();
        let rcs = critical_curves(&rev).unwrap();
        let opts = CycleOptions::default();
        let r = find_limit_cycle(&m, 0.05, &cs[1], &opts).unwrap();
        let f = find_limit_cycle(&rev, 0.05, &rcs[1], &opts).unwrap();
        assert_eq!(f.stability, CycleStability::Attracting);
        assert!(polyline_hausdorff_dist(&r.orbit, &f.orbit).unwrap() < 1e-7);
        assert!((r.div_integral + f.div_integral).abs() < 1e-6 * r.div_integral.abs());
    }

    #[test]
    fn bracket_and_rotation() {
        let m = sine_link_model(1, 1, 1, SlowVariant::Unit).unwrap();
        let cs = critical_curves(&m).unwrap();
        let opts = CycleOptions::default();
        let sdi0 = slow_divergence_integral(&m, &cs[0]).unwrap();
        let sdi1 = slow_divergence_integral(&m, &cs[1]).unwrap();
        let a = find_limit_cycle(&m, 0.05, &cs[0], &opts).unwrap();
        assert!(verify_divergence_bracket(&a, &sdi0, 0.1 * TAU).unwrap());
        assert!(matches!(verify_divergence_bracket(&a, &sdi1, 0.1 * TAU), Err(Error::IndexMismatch { .. })));
        let coarse = find_limit_cycle(&m, 0.2, &cs[0], &opts).unwrap();
        assert!(!verify_divergence_bracket(&coarse, &sdi0, 1e-6).unwrap());
        let r = find_limit_cycle(&m, 0.05, &cs[1], &opts).unwrap();
        assert!(verify_divergence_bracket(&r, &sdi1, 0.1 * TAU).unwrap());
        assert_eq!(rotation_number(&a).unwrap(), num_rational::Ratio::new(1, 1));
        let mut flat = a.clone();
        flat.winding = WindingPair::new(0, 1);
        assert!(rotation_number(&flat).is_err());
        flat.winding = WindingPair::new(1, 0);
        assert_eq!(rotation_number(&flat).unwrap(), num_rational::Ratio::new(0, 1));
    }

    #[test]
    fn eps_out_of_range() {
        let m = sine_link_model(1, 1, 1, SlowVariant::Unit).unwrap();
        let cs = critical_curves(&m).unwrap();
        let opts = CycleOptions::default();
        assert!(find_limit_cycle(&m, 0.3, &cs[0], &opts).is_err());
        assert!(find_limit_cycle(&m, 0.0, &cs[0], &opts).is_err());
        assert!(hausdorff_convergence(&m, &cs[0], &[0.05, 0.1], &opts).is_err());
        assert!(hausdorff_convergence(&m, &cs[0], &[], &opts).is_err());
    }

    #[test]
    fn census_exports() {
        let m = sine_link_model(1, 1, 1, SlowVariant::Unit).unwrap();
        let census = cycle_census(&m, 0.1, &CycleOptions::default()).unwrap();
        assert_eq!((census.attracting_count, census.repelling_count), (1, 1));
        let mut buf = Vec::new();
        write_census_csv(&census, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().contains(",1/1,"));
        let json = serde_json::to_string(&census).unwrap();
        let back: CycleCensus = serde_json::from_str(&json).unwrap();
        assert_eq!(back.cycles.len(), 2);
        assert_eq!(back.cycles[0].winding, census.cycles[0].winding);
        let mut buf = Vec::new();
        write_orbits_csv(&census, &mut buf).unwrap();
        let rows = String::from_utf8(buf).unwrap().lines().count() - 1;
        assert_eq!(rows, census.cycles.iter().map(|c| c.orbit.len()).sum::<usize>());
        let _ = LiftPoint::new(0.0, 0.0);
    }

    #[test]
    fn multiplier_text_handles_underflow() {
        let m = sine_link_model(1, 1, 1, SlowVariant::Unit).unwrap();
        let cs = critical_curves(&m).unwrap();
        let mut c = find_limit_cycle(&m, 0.1, &cs[0], &CycleOptions::default()).unwrap();
        c.log_multiplier = -2000.0 * std::f64::consts::LN_10;
        assert_eq!(c.multiplier_text(), "1.000000e-2000");
        c.log_multiplier = 0.5f64.ln();
        assert_eq!(c.multiplier_text(), "5.000000e-1");
    }
}
