use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use slowfast_core::cycles::{
    basin_census, census_from_cycles, find_limit_cycle, restart_spread, rotation_number, verify_divergence_bracket,
    write_basin_csv, write_orbits_csv, BasinOptions, CycleCensus, CycleOptions, CycleStability, LimitCycle,
};
use slowfast_core::knots::{homeo_class, is_ambient_isotopic, link_consistent};
use slowfast_core::models::{
    critical_curves, validate_assumptions, AssumptionReport, CriticalCurve, SlowFastModel, Stability,
};
use slowfast_core::sdi::{analytic_sdi, slow_divergence_integral, SdiValue};
use slowfast_core::torus::{polyline_hausdorff_dist, wrap, ClosedCurve, WindingPair};

use crate::config::{ExperimentConfig, Format};
use crate::failure::{Failure, Kind};
use crate::output::{eps_tag, Output};

/// Relative width of the divergence bracket.
const KAPPA_FRACTION: f64 = 0.1;

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Attracting => "attracting",
        Stability::Repelling => "repelling",
        Stability::Mixed => "mixed",
    }
}

fn cycle_stability_name(s: CycleStability) -> &'static str {
    match s {
        CycleStability::Attracting => "attracting",
        CycleStability::Repelling => "repelling",
    }
}

#[derive(Serialize)]
struct CurveSample {
    curve_index: usize,
    stability: &'static str,
    sample: usize,
    x_lift: f64,
    y_lift: f64,
    x_wrapped: f64,
    y_wrapped: f64,
}

fn write_curves(out: &mut Output, curves: &[CriticalCurve]) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for c in curves {
        for (n, p) in c.curve.samples().iter().enumerate() {
            let q = wrap(*p)?;
            rows.push(CurveSample {
                curve_index: c.index,
                stability: stability_name(c.stability),
                sample: n,
                x_lift: p.x,
                y_lift: p.y,
                x_wrapped: q.x(),
                y_wrapped: q.y(),
            });
        }
    }
    out.csv("curves.csv", &rows)
}

fn check_assumptions(report: &AssumptionReport, relaxed: bool) -> Result<(), Failure> {
    if report.passes(relaxed) {
        Ok(())
    } else {
        let mode = if relaxed { "relaxed" } else { "strict" };
        Err(Failure::new(Kind::Assumptions, format!("{mode} assumptions fail: {}", report.failures.join("; "))))
    }
}

fn cycle_options(cfg: &ExperimentConfig) -> CycleOptions {
    CycleOptions { solver: cfg.solver, ..CycleOptions::default() }
}

#[derive(Serialize)]
struct ValidateRecord<'a> {
    relaxed_mode: bool,
    pass: bool,
    report: &'a AssumptionReport,
}

pub fn validate(model: &SlowFastModel, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), Failure> {
    let curves = critical_curves(model)?;
    let report = validate_assumptions(model, &curves);
    let pass = report.passes(cfg.relaxed);
    out.json("assumptions.json", &ValidateRecord { relaxed_mode: cfg.relaxed, pass, report: &report })?;
    write_curves(out, &curves)?;
    println!("model {}: {} critical curves", model.label(), curves.len());
    for c in &report.curves {
        println!(
            "  curve {}: winding {}, {}, min |f_x| {:.3e}, min |g| {:.3e}, {} contact(s)",
            c.index,
            c.winding,
            stability_name(c.stability),
            c.min_abs_fx,
            c.min_abs_g,
            c.contacts.len()
        );
    }
    println!(
        "assumption 1: {}, relaxed: {}, assumption 2: {}",
        report.assumption_1, report.assumption_1_relaxed, report.assumption_2
    );
    check_assumptions(&report, cfg.relaxed)
}

#[derive(Serialize)]
struct SdiRow {
    curve_index: usize,
    stability: &'static str,
    winding_k: i64,
    winding_l: i64,
    slow_direction: i8,
    sdi: f64,
    est_error: f64,
    analytic: Option<f64>,
}

pub fn sdi(model: &SlowFastModel, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), Failure> {
    let curves = critical_curves(model)?;
    let mut rows = Vec::new();
    for c in &curves {
        let v = slow_divergence_integral(model, c)?;
        println!("curve {} ({}): I = {:.12}", c.index, stability_name(c.stability), v.value);
        rows.push(SdiRow {
            curve_index: c.index,
            stability: stability_name(c.stability),
            winding_k: c.winding.k,
            winding_l: c.winding.l,
            slow_direction: c.slow_direction(model),
            sdi: v.value,
            est_error: v.est_error,
            analytic: analytic_sdi(model, c).map(|a| a.value),
        });
    }
    out.table("sdi", cfg.format, &rows)
}

#[derive(Serialize)]
struct CycleRow {
    eps: f64,
    cycle_index: usize,
    status: &'static str,
    stability: Option<&'static str>,
    canard: Option<bool>,
    winding_k: Option<i64>,
    winding_l: Option<i64>,
    rotation_number: Option<String>,
    period: Option<f64>,
    div_integral: Option<f64>,
    eps_div_integral: Option<f64>,
    log_multiplier: Option<f64>,
    multiplier: Option<String>,
    section_residual: Option<f64>,
    restart_spread: Option<f64>,
    message: Option<String>,
}

impl CycleRow {
    fn ok(c: &LimitCycle, spread: Option<f64>) -> Self {
        Self {
            eps: c.eps,
            cycle_index: c.near_curve_index,
            status: "ok",
            stability: Some(cycle_stability_name(c.stability)),
            canard: Some(c.canard),
            winding_k: Some(c.winding.k),
            winding_l: Some(c.winding.l),
            rotation_number: rotation_number(c).ok().map(|r| format!("{}/{}", r.numer(), r.denom())),
            period: Some(c.period),
            div_integral: Some(c.div_integral),
            eps_div_integral: Some(c.eps * c.div_integral),
            log_multiplier: Some(c.log_multiplier),
            multiplier: Some(c.multiplier_text()),
            section_residual: Some(c.section_residual),
            restart_spread: spread,
            message: None,
        }
    }

    fn error(eps: f64, index: usize, message: String) -> Self {
        Self {
            eps,
            cycle_index: index,
            status: "error",
            stability: None,
            canard: None,
            winding_k: None,
            winding_l: None,
            rotation_number: None,
            period: None,
            div_integral: None,
            eps_div_integral: None,
            log_multiplier: None,
            multiplier: None,
            section_residual: None,
            restart_spread: None,
            message: Some(message),
        }
    }
}

#[derive(Serialize)]
struct DetectionError {
    curve_index: usize,
    message: String,
}

#[derive(Serialize)]
struct CensusRecord {
    model: String,
    eps: f64,
    census: Option<CycleCensus>,
    errors: Vec<DetectionError>,
}

pub fn cycles(model: &SlowFastModel, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), Failure> {
    let curves = critical_curves(model)?;
    check_assumptions(&validate_assumptions(model, &curves), cfg.relaxed)?;
    write_curves(out, &curves)?;
    let opts = cycle_options(cfg);
    let mut rows = Vec::new();
    let mut failures = 0;
    for &eps in &cfg.eps {
        let found: Vec<_> = curves
            .par_iter()
            .map(|c| {
                let cy = find_limit_cycle(model, eps, c, &opts)?;
                let spread = if cfg.restarts > 0 {
                    Some(restart_spread(model, eps, c, &cy, cfg.restarts, cfg.seed, &opts)?)
                } else {
                    None
                };
                Ok((cy, spread))
            })
            .collect::<Vec<slowfast_core::Result<_>>>();
        let mut ok = Vec::new();
        let mut errors = Vec::new();
        for (c, r) in curves.iter().zip(found) {
            match r {
                Ok((cy, spread)) => {
                    rows.push(CycleRow::ok(&cy, spread));
                    ok.push(cy);
                }
                Err(e) => {
                    rows.push(CycleRow::error(eps, c.index, e.to_string()));
                    errors.push(DetectionError { curve_index: c.index, message: e.to_string() });
                }
            }
        }
        let census = match census_from_cycles(model.label(), eps, ok) {
            Ok(census) => Some(census),
            Err(e) => {
                errors.push(DetectionError { curve_index: usize::MAX, message: e.to_string() });
                None
            }
        };
        failures += errors.len();
        match &census {
            Some(c) => {
                println!("eps {eps}: {} attracting, {} repelling", c.attracting_count, c.repelling_count);
                out.with(&format!("orbits_{}.csv", eps_tag(eps)), |w| write_orbits_csv(c, w))?;
            }
            None => println!("eps {eps}: census rejected"),
        }
        for e in &errors {
            eprintln!("eps {eps}: {}", e.message);
        }
        let record = CensusRecord { model: model.label().to_string(), eps, census, errors };
        out.json(&format!("cycles_{}.json", eps_tag(eps)), &record)?;
    }
    out.table("cycles", cfg.format, &rows)?;
    if failures > 0 {
        return Err(Failure::new(Kind::Detection, format!("{failures} detection failure(s)")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    eps: f64,
    curve_index: usize,
    status: &'static str,
    stability: Option<&'static str>,
    winding_k: Option<i64>,
    winding_l: Option<i64>,
    period: Option<f64>,
    div_integral: Option<f64>,
    eps_div_integral: Option<f64>,
    sdi: f64,
    bracket_gap: Option<f64>,
    bracket_pass: Option<bool>,
    gap_decreasing: Option<bool>,
    hausdorff: Option<f64>,
    hausdorff_decreasing: Option<bool>,
    log_multiplier: Option<f64>,
    multiplier: Option<String>,
    message: Option<String>,
}

fn sweep_row(eps: f64, curve: &CriticalCurve, sdi: &SdiValue, r: slowfast_core::Result<(LimitCycle, f64)>) -> SweepRow {
    let mut row = SweepRow {
        eps,
        curve_index: curve.index,
        status: "ok",
        stability: None,
        winding_k: None,
        winding_l: None,
        period: None,
        div_integral: None,
        eps_div_integral: None,
        sdi: sdi.value,
        bracket_gap: None,
        bracket_pass: None,
        gap_decreasing: None,
        hausdorff: None,
        hausdorff_decreasing: None,
        log_multiplier: None,
        multiplier: None,
        message: None,
    };
    let (c, hausdorff) = match r {
        Ok(v) => v,
        Err(e) => {
            row.status = "error";
            row.message = Some(e.to_string());
            return row;
        }
    };
    row.stability = Some(cycle_stability_name(c.stability));
    row.winding_k = Some(c.winding.k);
    row.winding_l = Some(c.winding.l);
    row.period = Some(c.period);
    row.div_integral = Some(c.div_integral);
    row.eps_div_integral = Some(eps * c.div_integral);
    row.bracket_gap = Some((eps * c.div_integral - sdi.value).abs());
    row.bracket_pass = verify_divergence_bracket(&c, sdi, KAPPA_FRACTION * sdi.value.abs()).ok();
    row.hausdorff = Some(hausdorff);
    row.log_multiplier = Some(c.log_multiplier);
    row.multiplier = Some(c.multiplier_text());
    row
}

pub fn sweep(model: &SlowFastModel, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), Failure> {
    if cfg.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Failure::config("sweep needs a strictly decreasing eps list"));
    }
    let curves = critical_curves(model)?;
    check_assumptions(&validate_assumptions(model, &curves), cfg.relaxed)?;
    let sdis = curves.iter().map(|c| slow_divergence_integral(model, c)).collect::<slowfast_core::Result<Vec<_>>>()?;
    let opts = cycle_options(cfg);
    let jobs: Vec<(f64, usize)> = cfg.eps.iter().flat_map(|&e| (0..curves.len()).map(move |i| (e, i))).collect();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(eps, i)| {
            let c = &curves[i];
            let r = find_limit_cycle(model, eps, c, &opts)
                .and_then(|cy| polyline_hausdorff_dist(&cy.orbit, &c.curve).map(|d| (cy, d)));
            sweep_row(eps, c, &sdis[i], r)
        })
        .collect();

    // monotone flags against the previous eps of the same curve
    let mut last: BTreeMap<usize, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for row in rows.iter_mut() {
        if let Some((gap, haus)) = last.get(&row.curve_index) {
            row.gap_decreasing = gap.zip(row.bracket_gap).map(|(a, b)| b < a);
            row.hausdorff_decreasing = haus.zip(row.hausdorff).map(|(a, b)| b < a);
        }
        last.insert(row.curve_index, (row.bracket_gap, row.hausdorff));
    }
    for row in &rows {
        match (row.eps_div_integral, row.hausdorff) {
            (Some(v), Some(h)) => println!(
                "eps {:<8} curve {}: eps*div {v:+.6}, I {:+.6}, gap {:.3e}, hausdorff {h:.4e}",
                row.eps,
                row.curve_index,
                row.sdi,
                row.bracket_gap.unwrap_or(f64::NAN)
            ),
            _ => println!("eps {:<8} curve {}: {}", row.eps, row.curve_index, row.message.as_deref().unwrap_or("")),
        }
    }
    out.table("sweep", cfg.format, &rows)?;
    let failures = rows.iter().filter(|r| r.status != "ok").count();
    if failures > 0 {
        return Err(Failure::new(Kind::Detection, format!("{failures} detection failure(s)")));
    }
    Ok(())
}

pub fn basin(model: &SlowFastModel, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), Failure> {
    let curves = critical_curves(model)?;
    check_assumptions(&validate_assumptions(model, &curves), cfg.relaxed)?;
    let opts = cycle_options(cfg);
    let basin_opts = BasinOptions { solver: cfg.solver, ..BasinOptions::default() };
    for &eps in &cfg.eps {
        let cycles = curves.par_iter().map(|c| find_limit_cycle(model, eps, c, &opts)).collect::<slowfast_core::Result<Vec<_>>>()?;
        let census = census_from_cycles(model.label(), eps, cycles)?;
        let b = basin_census(model, &census, cfg.grid, &basin_opts)?;
        println!(
            "eps {eps}: {}/{} grid points classified ({:.2}%), {} excluded",
            b.classified(),
            b.candidates(),
            100.0 * b.classified_fraction(),
            b.points.len() - b.candidates()
        );
        let stem = format!("basin_{}", eps_tag(eps));
        match cfg.format {
            Format::Csv => out.with(&format!("{stem}.csv"), |w| write_basin_csv(&b, w))?,
            Format::Json => out.json(&format!("{stem}.json"), &b)?,
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PairRow {
    a_k: i64,
    a_l: i64,
    b_k: i64,
    b_l: i64,
    isotopic: bool,
    a_essential: bool,
    b_essential: bool,
}

#[derive(Serialize)]
struct CurveKnotRow {
    curve_index: usize,
    winding_k: i64,
    winding_l: i64,
    essential: bool,
    isotopic_to_curve_0: bool,
    link_consistent: bool,
}

pub fn knots(model: Option<&SlowFastModel>, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), Failure> {
    if model.is_none() && cfg.pairs.is_empty() {
        return Err(Failure::config("knots needs a model or --pairs"));
    }
    if !cfg.pairs.is_empty() {
        let mut rows = Vec::new();
        for &(ak, al) in &cfg.pairs {
            for &(bk, bl) in &cfg.pairs {
                let (a, b) = (WindingPair::new(ak, al), WindingPair::new(bk, bl));
                rows.push(PairRow {
                    a_k: ak,
                    a_l: al,
                    b_k: bk,
                    b_l: bl,
                    isotopic: is_ambient_isotopic(a, b)?,
                    a_essential: homeo_class(a)?.essential,
                    b_essential: homeo_class(b)?.essential,
                });
            }
        }
        for r in rows.iter().filter(|r| (r.a_k, r.a_l) < (r.b_k, r.b_l)) {
            println!("({}, {}) ~ ({}, {}): {}", r.a_k, r.a_l, r.b_k, r.b_l, r.isotopic);
        }
        out.table("knot_pairs", cfg.format, &rows)?;
    }
    if let Some(model) = model {
        let curves = critical_curves(model)?;
        let closed: Vec<ClosedCurve> = curves.iter().map(|c| c.curve.clone()).collect();
        let consistent = link_consistent(&closed)?;
        let first = curves.first().map(|c| c.winding);
        let mut rows = Vec::new();
        for c in &curves {
            rows.push(CurveKnotRow {
                curve_index: c.index,
                winding_k: c.winding.k,
                winding_l: c.winding.l,
                essential: homeo_class(c.winding)?.essential,
                isotopic_to_curve_0: match first {
                    Some(f) => is_ambient_isotopic(c.winding, f)?,
                    None => true,
                },
                link_consistent: consistent,
            });
        }
        println!("model {}: {} curves, link consistent: {consistent}", model.label(), curves.len());
        out.table("knots", cfg.format, &rows)?;
    }
    Ok(())
}
