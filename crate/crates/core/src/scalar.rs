//! Number types that model fields are evaluated over.
//!
//! Fields are written once, generically over [`Scalar`], and evaluated with
//! plain `f64`, with [`Dual2`] for exact first partials, or with [`Jet`] for
//! exact Taylor coefficients in one variable.

use std::ops::{Add, Mul, Neg, Sub};

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn scale(self, c: f64) -> Self;
    fn sin_cos(self) -> (Self, Self);
}

impl Scalar for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
}

/// Forward-mode dual number carrying partials in `x` and `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Dual2 {
    pub fn var_x(x: f64) -> Self {
        Self { v: x, dx: 1.0, dy: 0.0 }
    }

    pub fn var_y(y: f64) -> Self {
        Self { v: y, dx: 0.0, dy: 1.0 }
    }
}

impl Add for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, dx: self.dx + o.dx, dy: self.dy + o.dy }
    }
}

impl Sub for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, dx: self.dx - o.dx, dy: self.dy - o.dy }
    }
}

impl Mul for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            dx: self.v * o.dx + self.dx * o.v,
            dy: self.v * o.dy + self.dy * o.v,
        }
    }
}

impl Neg for Dual2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self { v: -self.v, dx: -self.dx, dy: -self.dy }
    }
}

impl Scalar for Dual2 {
    #[inline]
    fn constant(v: f64) -> Self {
        Self { v, dx: 0.0, dy: 0.0 }
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        Self { v: self.v * c, dx: self.dx * c, dy: self.dy * c }
    }
    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.v.sin_cos();
        (
            Self { v: s, dx: c * self.dx, dy: c * self.dy },
            Self { v: c, dx: -s * self.dx, dy: -s * self.dy },
        )
    }
}

/// Truncated Taylor series `sum c[n] h^n`, `n < N`.
///
/// `c[n]` is the n-th derivative divided by `n!`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Jet<N> {
    /// Independent variable expanded around `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x0;
        if N > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    /// n-th derivative at the expansion point.
    pub fn derivative(&self, n: usize) -> f64 {
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        self.c[n] * fact
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for (n, slot) in c.iter_mut().enumerate() {
            *slot = (0..=n).map(|j| self.c[j] * o.c[n - j]).sum();
        }
        Self { c }
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for a in self.c.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl<const N: usize> Scalar for Jet<N> {
    fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self { c }
    }

    fn scale(mut self, k: f64) -> Self {
        for a in self.c.iter_mut() {
            *a *= k;
        }
        self
    }

    fn sin_cos(self) -> (Self, Self) {
        let mut s = [0.0; N];
        let mut co = [0.0; N];
        let (s0, c0) = self.c[0].sin_cos();
        s[0] = s0;
        co[0] = c0;
        // s' = c a', c' = -s a'
        for n in 1..N {
            let mut sn = 0.0;
            let mut cn = 0.0;
            for j in 1..=n {
                let w = j as f64 * self.c[j];
                sn += w * co[n - j];
                cn -= w * s[n - j];
            }
            s[n] = sn / n as f64;
            co[n] = cn / n as f64;
        }
        (Self { c: s }, Self { c: co })
    }
}
