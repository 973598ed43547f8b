//! Second-order forward-mode differentiation in three variables.
//!
//! Presets are written once, generic over [`Real`], and evaluated either
//! with plain `f64` (sampling, quadrature) or with [`Jet`] when exact
//! gradients and Hessians are needed by the oracles.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and [`Jet`].
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn constant(c: f64) -> Self;
    /// The plain value; used for branching on piecewise definitions.
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn recip(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn constant(c: f64) -> Self {
        c
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// Value, gradient and Hessian of a scalar function of `x ∈ ℝ³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    /// The coordinate function `x ↦ x_axis` evaluated at `at`.
    pub fn variable(axis: usize, at: f64) -> Self {
        let mut d = [0.0; 3];
        d[axis] = 1.0;
        Jet { v: at, d, h: [[0.0; 3]; 3] }
    }

    /// Coordinate jets for all three axes at `x`.
    pub fn point(x: [f64; 3]) -> [Jet; 3] {
        [Jet::variable(0, x[0]), Jet::variable(1, x[1]), Jet::variable(2, x[2])]
    }

    /// Applies a univariate function given its value and first two
    /// derivatives at `self.v` (chain rule to second order).
    #[inline]
    pub fn map(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Jet { v: f, d: [0.0; 3], h: [[0.0; 3]; 3] };
        for i in 0..3 {
            out.d[i] = df * self.d[i];
            for j in 0..3 {
                out.h[i][j] = df * self.h[i][j] + d2f * self.d[i] * self.d[j];
            }
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for i in 0..3 {
            self.d[i] += o.d[i];
            for j in 0..3 {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(mut self) -> Jet {
        self.v = -self.v;
        for i in 0..3 {
            self.d[i] = -self.d[i];
            for j in 0..3 {
                self.h[i][j] = -self.h[i][j];
            }
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet { v: self.v * o.v, d: [0.0; 3], h: [[0.0; 3]; 3] };
        for i in 0..3 {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..3 {
                out.h[i][j] = self.h[i][j] * o.v + self.d[i] * o.d[j] + self.d[j] * o.d[i] + self.v * o.h[i][j];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, c: f64) -> Jet {
        self.v += c;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, c: f64) -> Jet {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(mut self, c: f64) -> Jet {
        self.v *= c;
        for i in 0..3 {
            self.d[i] *= c;
            for j in 0..3 {
                self.h[i][j] *= c;
            }
        }
        self
    }
}

impl Real for Jet {
    fn constant(c: f64) -> Self {
        Jet { v: c, d: [0.0; 3], h: [[0.0; 3]; 3] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.map(e, e, e)
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(c, -s, -c)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.map(r, 0.5 / r, -0.25 / (r * self.v))
    }
    fn powf(self, p: f64) -> Self {
        let x = self.v;
        self.map(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.map(r, -r * r, 2.0 * r * r * r)
    }
}

/// Smooth monotone transition: 0 for `s ≤ 0`, 1 for `s ≥ 1`, C^∞ in between.
pub fn smooth_step<R: Real>(s: R) -> R {
    let sv = s.value();
    if sv <= 0.0 {
        return R::constant(0.0);
    }
    if sv >= 1.0 {
        return R::constant(1.0);
    }
    let a = (-s.recip()).exp();
    let b = (-(R::constant(1.0) - s).recip()).exp();
    a / (a + b)
}
