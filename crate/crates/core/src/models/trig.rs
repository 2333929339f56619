use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::{Error, Result};

/// `c * cos(p x + q y) + s * sin(p x + q y)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub p: i32,
    pub q: i32,
    pub c: f64,
    pub s: f64,
}

impl TrigTerm {
    pub fn cos(p: i32, q: i32, c: f64) -> Self {
        Self { p, q, c, s: 0.0 }
    }

    pub fn sin(p: i32, q: i32, s: f64) -> Self {
        Self { p, q, c: 0.0, s }
    }
}

/// Bivariate trigonometric polynomial, 2pi-periodic in both variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly2 {
    terms: Vec<TrigTerm>,
}

impl TrigPoly2 {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        Self { terms }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(vec![TrigTerm::cos(0, 0, v)])
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.iter().any(|t| !t.c.is_finite() || !t.s.is_finite()) {
            return Err(Error::InvalidModel("non-finite trigonometric coefficient".into()));
        }
        Ok(())
    }

    /// Centered coefficient matrices: entry `[i][j]` multiplies
    /// `cos((i - P) x + (j - Q) y)` (resp. `sin`), with `2P + 1` rows and
    /// `2Q + 1` columns.
    pub fn from_matrices(cos: &[Vec<f64>], sin: &[Vec<f64>]) -> Result<Self> {
        let mut terms = Vec::new();
        for (name, mat, is_cos) in [("cos", cos, true), ("sin", sin, false)] {
            if mat.is_empty() {
                continue;
            }
            let rows = mat.len();
            let cols = mat[0].len();
            if rows % 2 == 0 || cols % 2 == 0 || mat.iter().any(|r| r.len() != cols) {
                return Err(Error::Document(format!(
                    "{name} matrix must be rectangular with odd dimensions"
                )));
            }
            let (pc, qc) = ((rows / 2) as i32, (cols / 2) as i32);
            for (i, row) in mat.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::Document(format!("{name}[{i}][{j}] is not finite")));
                    }
                    if v != 0.0 {
                        let (p, q) = (i as i32 - pc, j as i32 - qc);
                        terms.push(if is_cos { TrigTerm::cos(p, q, v) } else { TrigTerm::sin(p, q, v) });
                    }
                }
            }
        }
        Ok(Self { terms })
    }

    #[inline]
    pub fn eval<S: Scalar>(&self, x: S, y: S) -> S {
        let mut acc = S::constant(0.0);
        for t in &self.terms {
            if t.p == 0 && t.q == 0 {
                acc = acc + S::constant(t.c);
                continue;
            }
            let arg = x.scale(t.p as f64) + y.scale(t.q as f64);
            let (s, c) = arg.sin_cos();
            if t.c != 0.0 {
                acc = acc + c.scale(t.c);
            }
            if t.s != 0.0 {
                acc = acc + s.scale(t.s);
            }
        }
        acc
    }
}

/// `phi(x) = q x + a0 + sum_n (a_n cos(n x) + b_n sin(n x))`,
/// so that `phi(x + 2pi) = phi(x) + 2pi q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicAffine {
    pub q: i64,
    pub a0: f64,
    /// `cos[n - 1]` is `a_n`
    pub cos: Vec<f64>,
    /// `sin[n - 1]` is `b_n`
    pub sin: Vec<f64>,
}

impl PeriodicAffine {
    pub fn new(q: i64, a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { q, a0, cos, sin }
    }

    pub fn linear(q: i64) -> Self {
        Self::new(q, 0.0, Vec::new(), Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a0.is_finite() && self.cos.iter().chain(&self.sin).all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidModel("non-finite phi coefficient".into()));
        }
        Ok(())
    }

    pub fn harmonics(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    fn a(&self, n: usize) -> f64 {
        self.cos.get(n - 1).copied().unwrap_or(0.0)
    }

    fn b(&self, n: usize) -> f64 {
        self.sin.get(n - 1).copied().unwrap_or(0.0)
    }

    pub fn coefficients(&self) -> Vec<f64> {
        let mut v = vec![self.q as f64, self.a0];
        for n in 1..=self.harmonics() {
            v.push(self.a(n));
            v.push(self.b(n));
        }
        v
    }

    pub fn eval<S: Scalar>(&self, x: S) -> S {
        let mut acc = x.scale(self.q as f64) + S::constant(self.a0);
        for n in 1..=self.harmonics() {
            let (s, c) = x.scale(n as f64).sin_cos();
            acc = acc + c.scale(self.a(n)) + s.scale(self.b(n));
        }
        acc
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    /// `r`-th derivative, `r >= 1`.
    pub fn derivative(&self, x: f64, r: u32) -> f64 {
        let shift = r as f64 * std::f64::consts::FRAC_PI_2;
        let mut acc = if r == 1 { self.q as f64 } else { 0.0 };
        for n in 1..=self.harmonics() {
            let nf = n as f64;
            let arg = nf * x + shift;
            acc += nf.powi(r as i32) * (self.a(n) * arg.cos() + self.b(n) * arg.sin());
        }
        acc
    }

    /// `int_0^{2pi} phi'(x)^2 dx`, by Parseval.
    pub fn derivative_energy(&self) -> f64 {
        use std::f64::consts::{PI, TAU};
        let q = self.q as f64;
        let osc: f64 = (1..=self.harmonics())
            .map(|n| (n * n) as f64 * (self.a(n).powi(2) + self.b(n).powi(2)))
            .sum();
        TAU * q * q + PI * osc
    }
}

impl fmt::Display for PeriodicAffine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![format!("q={}", self.q)];
        if self.a0 != 0.0 {
            parts.push(format!("c0={}", self.a0));
        }
        for n in 1..=self.harmonics() {
            if self.a(n) != 0.0 {
                parts.push(format!("c{n}={}", self.a(n)));
            }
            if self.b(n) != 0.0 {
                parts.push(format!("s{n}={}", self.b(n)));
            }
        }
        f.write_str(&parts.join(","))
    }
}

/// Parses `"q=1,c0=0.2,s1=1,c2=0.5"`; missing keys are zero, `q` defaults to 1.
impl FromStr for PeriodicAffine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut phi = PeriodicAffine::linear(1);
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("phi token {tok:?} lacks '='")))?;
            let bad = || Error::InvalidArgument(format!("bad phi token {tok:?}"));
            if key == "q" {
                phi.q = val.parse().map_err(|_| bad())?;
                continue;
            }
            let v: f64 = val.parse().map_err(|_| bad())?;
            let (kind, idx) = key.split_at(1);
            let n: usize = idx.parse().map_err(|_| bad())?;
            match (kind, n) {
                ("c", 0) => phi.a0 = v,
                ("c", n) => {
                    if phi.cos.len() < n {
                        phi.cos.resize(n, 0.0);
                    }
                    phi.cos[n - 1] = v;
                }
                ("s", n) if n > 0 => {
                    if phi.sin.len() < n {
                        phi.sin.resize(n, 0.0);
                    }
                    phi.sin[n - 1] = v;
                }
                _ => return Err(bad()),
            }
        }
        phi.validate()?;
        Ok(phi)
    }
}
