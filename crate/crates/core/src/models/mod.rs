//! Slow-fast model families `x' = f(x, y)`, `y' = eps * g(x, y)` on the torus.
//!
//! Fast fibers are the horizontal circles `y = const`; the critical set is
//! `{f = 0}` and the divergence of the layer field is `f_x`.

mod contacts;
mod curves;
mod document;
mod trig;
mod validate;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{Dual2, Jet, Scalar};
use crate::torus::{gcd, WindingPair};
use crate::{Error, Result};

pub use contacts::{contact_points, ContactPoint, CONTACT_TOL, MAX_CONTACT_ORDER};
pub use curves::{critical_curves, CriticalCurve, CurveParam, Stability};
pub use document::{CoefficientMatrices, ModelDocument};
pub use trig::{PeriodicAffine, TrigPoly2, TrigTerm};
pub use validate::{validate_assumptions, AssumptionReport, CurveMargins};

/// Slow component variants of the sine-link family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlowVariant {
    /// `g = 1`
    Unit,
    /// `g = cos(y - x)`
    Cosine,
}

impl fmt::Display for SlowVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlowVariant::Unit => f.write_str("unit"),
            SlowVariant::Cosine => f.write_str("cosine"),
        }
    }
}

impl std::str::FromStr for SlowVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(SlowVariant::Unit),
            "cosine" => Ok(SlowVariant::Cosine),
            other => Err(Error::InvalidArgument(format!("unknown slow variant {other:?}"))),
        }
    }
}

/// Field expression evaluated generically over [`Scalar`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldExpr {
    Trig(TrigPoly2),
    /// `sin(y - phi(x))`
    PhaseSine(PeriodicAffine),
}

impl FieldExpr {
    #[inline]
    pub fn eval<S: Scalar>(&self, x: S, y: S) -> S {
        match self {
            FieldExpr::Trig(p) => p.eval(x, y),
            FieldExpr::PhaseSine(phi) => (y - phi.eval(x)).sin_cos().0,
        }
    }
}

/// How the critical curves of a model are obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    SineLink { m: u32, k: u32, l: u32, slow: SlowVariant },
    Graph { phi: PeriodicAffine },
    General,
}

/// Value and first partials of both components at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldPartials {
    pub f: f64,
    pub f_x: f64,
    pub f_y: f64,
    pub g: f64,
    pub g_x: f64,
    pub g_y: f64,
}

/// A skew-product slow-fast family on the torus. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowFastModel {
    label: String,
    fast: FieldExpr,
    slow: FieldExpr,
    kind: ModelKind,
    params: Vec<f64>,
    /// +1 for the model as given, -1 for its time reversal.
    orientation: f64,
}

impl SlowFastModel {
    pub fn new(label: impl Into<String>, fast: FieldExpr, slow: FieldExpr) -> Self {
        Self {
            label: label.into(),
            fast,
            slow,
            kind: ModelKind::General,
            params: Vec::new(),
            orientation: 1.0,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// The same family with time reversed: `(f, g) -> (-f, -g)`.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.orientation = -self.orientation;
        out.label = format!("{} (reversed)", self.label);
        out
    }

    #[inline]
    pub fn fast_at<S: Scalar>(&self, x: S, y: S) -> S {
        self.fast.eval(x, y).scale(self.orientation)
    }

    #[inline]
    pub fn slow_at<S: Scalar>(&self, x: S, y: S) -> S {
        self.slow.eval(x, y).scale(self.orientation)
    }

    pub fn f(&self, x: f64, y: f64) -> f64 {
        self.fast_at(x, y)
    }

    pub fn g(&self, x: f64, y: f64) -> f64 {
        self.slow_at(x, y)
    }

    #[inline]
    pub fn partials(&self, x: f64, y: f64) -> FieldPartials {
        let (dx, dy) = (Dual2::var_x(x), Dual2::var_y(y));
        let f = self.fast_at(dx, dy);
        let g = self.slow_at(dx, dy);
        FieldPartials { f: f.v, f_x: f.dx, f_y: f.dy, g: g.v, g_x: g.dx, g_y: g.dy }
    }

    /// Divergence `f_x + eps * g_y` of the full field.
    pub fn divergence(&self, eps: f64, x: f64, y: f64) -> f64 {
        let p = self.partials(x, y);
        p.f_x + eps * p.g_y
    }

    /// `d^n f / dx^n` at `(x, y)` for `n = 0..8`, from Taylor arithmetic.
    pub fn fast_x_derivatives(&self, x: f64, y: f64) -> [f64; 8] {
        let jet = self.fast_at(Jet::<8>::variable(x), Jet::constant(y));
        std::array::from_fn(|n| jet.derivative(n))
    }

    /// Largest residue of `f` and `g` under `x -> x + 2pi` and `y -> y + 2pi`
    /// over `n` random points.
    pub fn periodicity_residue(&self, n: usize, seed: u64) -> f64 {
        use std::f64::consts::TAU;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let x = rng.gen_range(0.0..TAU);
            let y = rng.gen_range(0.0..TAU);
            let (f0, g0) = (self.f(x, y), self.g(x, y));
            for (sx, sy) in [(TAU, 0.0), (0.0, TAU)] {
                worst = worst.max((self.f(x + sx, y + sy) - f0).abs());
                worst = worst.max((self.g(x + sx, y + sy) - g0).abs());
            }
        }
        worst
    }

    pub fn is_graph(&self) -> bool {
        matches!(self.kind, ModelKind::Graph { .. })
    }
}

/// `x' = sin(m (l y - k x))`, `y' = eps * g` with `g = 1` or `g = cos(y - x)`.
pub fn sine_link_model(m: u32, k: u32, l: u32, slow: SlowVariant) -> Result<SlowFastModel> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidModel(format!("need m >= 1 and k >= 1, got m = {m}, k = {k}")));
    }
    if gcd(k as i64, l as i64) != 1 {
        return Err(Error::NotCoprime { k: k as i64, l: l as i64 });
    }
    let (mi, ki, li) = (m as i32, k as i32, l as i32);
    let fast = TrigPoly2::new(vec![TrigTerm::sin(-mi * ki, mi * li, 1.0)]);
    let slow_poly = match slow {
        SlowVariant::Unit => TrigPoly2::constant(1.0),
        SlowVariant::Cosine => TrigPoly2::new(vec![TrigTerm::cos(-1, 1, 1.0)]),
    };
    let label = match (m, k, l, slow) {
        (1, 1, 1, SlowVariant::Unit) => "eq1".to_string(),
        (1, 1, 1, SlowVariant::Cosine) => "eq1-cosine".to_string(),
        _ => format!("sine-link(m={m},k={k},l={l},slow={slow})"),
    };
    let model = SlowFastModel {
        label,
        fast: FieldExpr::Trig(fast),
        slow: FieldExpr::Trig(slow_poly),
        kind: ModelKind::SineLink { m, k, l, slow },
        params: vec![m as f64, k as f64, l as f64],
        orientation: 1.0,
    };
    if slow == SlowVariant::Cosine {
        // g = cos(y - x) varies along curves of any other slope
        for c in critical_curves(&model)? {
            let min_g = c
                .curve
                .samples()
                .iter()
                .map(|p| model.g(p.x, p.y).abs())
                .fold(f64::INFINITY, f64::min);
            if min_g < 1e-6 {
                return Err(Error::SlowFlowVanishes { curve: c.index, min_abs_g: min_g });
            }
        }
    }
    Ok(model)
}

/// `x' = sin(y - phi(x))`, `y' = eps * g`: critical curves are the graphs
/// `y = phi(x)` and `y = phi(x) + pi`.
pub fn graph_model(phi: PeriodicAffine, slow: Option<TrigPoly2>) -> Result<SlowFastModel> {
    phi.validate()?;
    let slow = slow.unwrap_or_else(|| TrigPoly2::constant(1.0));
    slow.validate()?;
    Ok(SlowFastModel {
        label: format!("graph(phi={phi})"),
        fast: FieldExpr::PhaseSine(phi.clone()),
        slow: FieldExpr::Trig(slow),
        params: phi.coefficients(),
        kind: ModelKind::Graph { phi },
        orientation: 1.0,
    })
}

/// The built-in odd-contact model `phi(x) = x + sin x`.
pub fn odd_contact_model() -> SlowFastModel {
    let mut m = graph_model(PeriodicAffine::new(1, 0.0, vec![0.0], vec![1.0]), None)
        .expect("static model is valid");
    m.label = "odd-contact".to_string();
    m
}

/// Built-in catalog addressable by label.
pub fn catalog_model(label: &str) -> Result<SlowFastModel> {
    match label {
        "eq1" => sine_link_model(1, 1, 1, SlowVariant::Unit),
        "eq1-cosine" => sine_link_model(1, 1, 1, SlowVariant::Cosine),
        "trefoil" => sine_link_model(1, 3, 2, SlowVariant::Unit),
        "solomon" => sine_link_model(1, 5, 2, SlowVariant::Unit),
        "odd-contact" => Ok(odd_contact_model()),
        other => Err(Error::InvalidModel(format!("unknown catalog label {other:?}"))),
    }
}

pub const CATALOG_LABELS: &[&str] = &["eq1", "eq1-cosine", "trefoil", "solomon", "odd-contact"];

/// Common winding pair of a model's critical curves, if they agree.
pub fn link_type(curves: &[CriticalCurve]) -> Option<WindingPair> {
    let first = curves.first()?.winding;
    curves.iter().all(|c| c.winding == first).then_some(first)
}
