//! Globally adaptive Gauss-Kronrod (7, 15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Estimate { value: kronrod * h, error: ((kronrod - gauss) * h).abs() }
}

struct Part {
    lo: f64,
    hi: f64,
    est: Estimate,
}

impl PartialEq for Part {
    fn eq(&self, other: &Self) -> bool {
        self.est.error.total_cmp(&other.est.error).is_eq()
    }
}

impl Eq for Part {}

impl PartialOrd for Part {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Part {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Integral of `f` over `[a, b]` to `max(abs_tol, rel_tol * |I|)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let first = gk15(&f, a, b);
    let (mut value, mut error) = (first.value, first.error);
    let mut heap = BinaryHeap::from([Part { lo: a, hi: b, est: first }]);
    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature { est_error: f64::INFINITY });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            // re-sum to shed the drift of the running totals
            let value = heap.iter().map(|p| p.est.value).sum();
            let error = heap.iter().map(|p| p.est.error).sum();
            return Ok(Estimate { value, error });
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { est_error: error });
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid == worst.lo || mid == worst.hi {
            return Err(Error::Quadrature { est_error: error });
        }
        let left = gk15(&f, worst.lo, mid);
        let right = gk15(&f, mid, worst.hi);
        value += left.value + right.value - worst.est.value;
        error += left.error + right.error - worst.est.error;
        heap.push(Part { lo: worst.lo, hi: mid, est: left });
        heap.push(Part { lo: mid, hi: worst.hi, est: right });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn polynomials_are_exact() {
        let e = integrate(|x| x.powi(20) - 3.0 * x, 0.0, 1.0, 1e-14, 0.0).unwrap();
        assert!((e.value - (1.0 / 21.0 - 1.5)).abs() < 1e-14);
    }

    #[test]
    fn periodic_and_peaked_integrands() {
        let e = integrate(|x| (1.0 + x.cos()).powi(2), 0.0, TAU, 1e-12, 0.0).unwrap();
        assert!((e.value - 3.0 * PI).abs() < 1e-11);
        let e = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 0.0).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((e.value - exact).abs() < 1e-8 * exact);
        let e = integrate(|_| 1.0, 2.0, 2.0, 1e-10, 0.0).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = integrate(f64::exp, 0.0, 1.0, 1e-12, 0.0).unwrap().value;
        let b = integrate(f64::exp, 1.0, 0.0, 1e-12, 0.0).unwrap().value;
        assert!((a + b).abs() < 1e-14);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, 1e-8, 0.0).is_err());
    }
}
