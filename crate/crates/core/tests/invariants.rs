use std::f64::consts::TAU;

use proptest::prelude::*;

use slowfast_core::cycles::{find_limit_cycle, CycleOptions, CycleStability};
use slowfast_core::knots::{homeo_class, is_ambient_isotopic};
use slowfast_core::models::{
    critical_curves, graph_model, sine_link_model, PeriodicAffine, SlowVariant, Stability,
};
use slowfast_core::sdi::{analytic_sdi, sdi_by_segments, slow_divergence_integral};
use slowfast_core::torus::{gcd, polyline_hausdorff_dist, WindingPair};

fn link_params() -> impl Strategy<Value = (u32, u32, u32)> {
    (1u32..=3, 1u32..=5, 0u32..=5).prop_filter("coprime", |&(_, k, l)| gcd(k as i64, l as i64) == 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sine_link_curves((m, k, l) in link_params()) {
        let model = sine_link_model(m, k, l, SlowVariant::Unit).unwrap();
        prop_assert!(model.periodicity_residue(100, 7) < 1e-12);
        let cs = critical_curves(&model).unwrap();
        prop_assert_eq!(cs.len(), 2 * m as usize);
        for c in &cs {
            prop_assert_eq!(c.winding, WindingPair::new(k as i64, l as i64));
            for p in c.curve.samples() {
                let d = model.partials(p.x, p.y);
                prop_assert!(d.f.abs() < 1e-9);
                prop_assert_eq!(d.f_x.signum() as i8, c.stability.sign());
            }
        }
    }

    #[test]
    fn sdi_sign_and_analytic_agreement((m, k, l) in link_params()) {
        let model = sine_link_model(m, k, l, SlowVariant::Unit).unwrap();
        for c in critical_curves(&model).unwrap() {
            let q = slow_divergence_integral(&model, &c).unwrap().value;
            let a = analytic_sdi(&model, &c).unwrap().value;
            prop_assert!((q - a).abs() < 1e-7 * a.abs().max(1.0));
            prop_assert_eq!(q.signum() as i8, c.stability.sign());
        }
    }

    #[test]
    fn sdi_partition_invariance(cuts in proptest::collection::vec(0.0..1.0f64, 1..17), amp in -0.6..0.6f64) {
        let phi: PeriodicAffine = format!("q=1,s1={amp},c2=0.2").parse().unwrap();
        let model = graph_model(phi, None).unwrap();
        for c in critical_curves(&model).unwrap() {
            let whole = slow_divergence_integral(&model, &c).unwrap().value;
            let mut inner: Vec<f64> = cuts.iter().map(|u| c.t_start + u * (c.t_end - c.t_start)).collect();
            inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
            inner.dedup();
            inner.retain(|t| *t > c.t_start && *t < c.t_end);
            let mut bps = vec![c.t_start];
            bps.extend(inner);
            bps.push(c.t_end);
            if c.slow_orientation(&model) < 0 {
                bps.reverse();
            }
            let v = sdi_by_segments(&model, &c, &bps).unwrap().value;
            prop_assert!((v - whole).abs() < 1e-7);
        }
    }

    #[test]
    fn homeo_class_is_constant_on_isotopy_classes(k1 in -7i64..=7, l1 in -7i64..=7, k2 in -7i64..=7, l2 in -7i64..=7) {
        let (a, b) = (WindingPair::new(k1, l1), WindingPair::new(k2, l2));
        prop_assume!(gcd(k1, l1) == 1 && gcd(k2, l2) == 1);
        if is_ambient_isotopic(a, b).unwrap() {
            prop_assert_eq!(homeo_class(a).unwrap().essential, homeo_class(b).unwrap().essential);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cycles_keep_the_seed_knot_type((m, k, l) in link_params(), eps in 0.02..0.2f64) {
        let model = sine_link_model(m, k, l, SlowVariant::Unit).unwrap();
        let cs = critical_curves(&model).unwrap();
        for c in cs.iter().take(2) {
            let cy = find_limit_cycle(&model, eps, c, &CycleOptions::default()).unwrap();
            prop_assert_eq!(cy.winding, c.winding);
            let attracting = c.stability == Stability::Attracting;
            prop_assert_eq!(cy.stability == CycleStability::Attracting, attracting);
            prop_assert_eq!(cy.canard, !attracting);
        }
    }

    #[test]
    fn reversal_swaps_cycle_roles(eps in 0.02..0.2f64) {
        let model = sine_link_model(1, 2, 1, SlowVariant::Unit).unwrap();
        let rev = model.reversed();
        let (cs, rcs) = (critical_curves(&model).unwrap(), critical_curves(&rev).unwrap());
        let opts = CycleOptions::default();
        for (c, rc) in cs.iter().zip(&rcs) {
            prop_assert_eq!(c.stability.sign(), -rc.stability.sign());
            let a = find_limit_cycle(&model, eps, c, &opts).unwrap();
            let b = find_limit_cycle(&rev, eps, rc, &opts).unwrap();
            prop_assert!(a.stability != b.stability);
            prop_assert!((a.div_integral + b.div_integral).abs() < 1e-6 * a.div_integral.abs());
            prop_assert!(polyline_hausdorff_dist(&a.orbit, &b.orbit).unwrap() < 1e-6);
            prop_assert!((a.period - b.period).abs() < 1e-6 * a.period);
        }
    }
}

#[test]
fn graph_model_windings() {
    for q in 1..=3 {
        let model = graph_model(format!("q={q}").parse().unwrap(), None).unwrap();
        for c in critical_curves(&model).unwrap() {
            assert_eq!(c.winding, WindingPair::new(q, 1));
            assert!((c.loop_displacement.x - TAU).abs() < 1e-12);
        }
    }
}
