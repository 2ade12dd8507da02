//! PSL(2,R) arithmetic and the upper half-plane.
//!
//! Group elements are unit-determinant 2x2 matrices modulo sign. Every
//! constructor and product renormalizes the determinant when it drifts by
//! more than [`Real::DET_DRIFT`] and fixes the sign so that the first nonzero
//! entry (in the order a, b, c, d) is positive; two representatives of the
//! same PSL element therefore compare equal entrywise.
//!
//! One-parameter subgroups:
//!
//! ```text
//! a_s = diag(e^{s/2}, e^{-s/2})       geodesic
//! n_t = [[1, t], [0, 1]]              (negative) horocycle
//! a_s n_t a_{-s} = n_{e^s t}
//! ```

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest |s| accepted by [`Psl2::geodesic`]; beyond it `e^{s/2}` overflows
/// the useful range of a 2x2 product.
pub const MAX_GEODESIC_TIME: f64 = 700.0;

/// Which horocycle subgroup plays the role of the time-changed flow.
///
/// `Negative` uses the upper unipotent `n_t` with `a_s`; `Positive` uses the
/// lower unipotent `[[1,0],[t,1]]` with the reversed geodesic `a_{-s}`. Both
/// realize `a_s n_t a_{-s} = n_{e^s t}`, so `e(s) = e^s` in either case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Negative,
    Positive,
}

/// An element of PSL(2,R).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psl2<T> {
    a: T,
    b: T,
    c: T,
    d: T,
}

impl<T: Real> Psl2<T> {
    pub fn identity() -> Self {
        Self {
            a: T::one(),
            b: T::zero(),
            c: T::zero(),
            d: T::one(),
        }
    }

    /// Builds an element from matrix entries; the determinant must be
    /// positive and within `1e-6` relative of one before rescaling.
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let det = a * d - b * c;
        let ok = [a, b, c, d].iter().all(|v| v.is_finite()) && (det - T::one()).abs() <= T::lit(1e-6);
        if !ok {
            return Err(Error::NotUnimodular(det.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self::normalized(a, b, c, d))
    }

    fn normalized(mut a: T, mut b: T, mut c: T, mut d: T) -> Self {
        let det = a * d - b * c;
        if (det - T::one()).abs() > T::DET_DRIFT {
            let s = det.sqrt().recip();
            a = a * s;
            b = b * s;
            c = c * s;
            d = d * s;
        }
        let lead = [a, b, c, d].into_iter().find(|v| *v != T::zero()).unwrap_or(T::one());
        if lead < T::zero() {
            Self {
                a: -a,
                b: -b,
                c: -c,
                d: -d,
            }
        } else {
            Self { a, b, c, d }
        }
    }

    #[inline]
    pub fn entries(&self) -> [T; 4] {
        [self.a, self.b, self.c, self.d]
    }

    #[inline]
    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    #[inline]
    pub fn trace(&self) -> T {
        self.a + self.d
    }

    /// Squared Frobenius norm. For `g` in PSL(2,R), `cosh d(i, g i) = |g|_F^2 / 2`.
    #[inline]
    pub fn frobenius_sq(&self) -> T {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn compose(&self, h: &Self) -> Self {
        Self::normalized(
            self.a * h.a + self.b * h.c,
            self.a * h.b + self.b * h.d,
            self.c * h.a + self.d * h.c,
            self.c * h.b + self.d * h.d,
        )
    }

    pub fn inverse(&self) -> Self {
        Self::normalized(self.d, -self.b, -self.c, self.a)
    }

    /// Geodesic element `a_s = diag(e^{s/2}, e^{-s/2})`.
    pub fn geodesic(s: T) -> Result<Self> {
        let sf = s.to_f64().unwrap_or(f64::NAN);
        if !(sf.abs() <= MAX_GEODESIC_TIME) {
            return Err(Error::Range {
                what: "geodesic time",
                value: sf,
                allowed: "|s| <= 700",
            });
        }
        let half = (s / T::lit(2.0)).exp();
        Ok(Self::normalized(half, T::zero(), T::zero(), half.recip()))
    }

    /// Horocycle element `n_t = [[1, t], [0, 1]]`.
    pub fn horocycle(t: T) -> Self {
        Self::normalized(T::one(), t, T::zero(), T::one())
    }

    /// Lower unipotent `[[1, 0], [t, 1]]` used by the positive orientation.
    pub fn lower_horocycle(t: T) -> Self {
        Self::normalized(T::one(), T::zero(), t, T::one())
    }

    /// Geodesic subgroup for the given orientation (`a_s` or `a_{-s}`).
    pub fn geodesic_oriented(s: T, orientation: Orientation) -> Result<Self> {
        match orientation {
            Orientation::Negative => Self::geodesic(s),
            Orientation::Positive => Self::geodesic(-s),
        }
    }

    pub fn horocycle_oriented(t: T, orientation: Orientation) -> Self {
        match orientation {
            Orientation::Negative => Self::horocycle(t),
            Orientation::Positive => Self::lower_horocycle(t),
        }
    }

    /// Rotation about `i` turning tangent vectors at `i` by `theta`.
    pub fn rotation(theta: T) -> Self {
        let half = theta / T::lit(2.0);
        let (s, c) = half.sin_cos();
        Self::normalized(c, s, -s, c)
    }

    /// The element `[[sqrt y, x / sqrt y], [0, 1 / sqrt y]]` sending `i` to `z`.
    pub fn translate_i_to(z: &HalfPlanePoint<T>) -> Self {
        let r = z.y.sqrt();
        Self::normalized(r, z.x / r, T::zero(), r.recip())
    }

    /// Mobius action `(a z + b) / (c z + d)`.
    pub fn act(&self, z: &HalfPlanePoint<T>) -> Result<HalfPlanePoint<T>> {
        // (a z + b) / (c z + d) with z = x + i y
        let den_re = self.c * z.x + self.d;
        let den_im = self.c * z.y;
        let den2 = den_re * den_re + den_im * den_im;
        if den2.sqrt() < T::lit(1e-300).max(T::min_positive_value()) {
            return Err(Error::DegenerateAction(den2.sqrt().to_f64().unwrap_or(0.0)));
        }
        let num_re = self.a * z.x + self.b;
        let num_im = self.a * z.y;
        let x = (num_re * den_re + num_im * den_im) / den2;
        let y = z.y / den2;
        HalfPlanePoint::new(x, y)
    }

    /// `g . i`, cheaper than the general action.
    pub fn base_point(&self) -> HalfPlanePoint<T> {
        let n = self.c * self.c + self.d * self.d;
        HalfPlanePoint {
            x: (self.a * self.c + self.b * self.d) / n,
            y: n.recip(),
        }
    }

    /// Largest entrywise difference, relative to the largest entry magnitude
    /// (floored at one).
    pub fn max_relative_diff(&self, other: &Self) -> T {
        let scale = self
            .entries()
            .iter()
            .chain(other.entries().iter())
            .fold(T::one(), |m, v| m.max(v.abs()));
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
            / scale
    }
}

impl<T: Real> Mul for Psl2<T> {
    type Output = Psl2<T>;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl<'a, T: Real> Mul<&'a Psl2<T>> for &'a Psl2<T> {
    type Output = Psl2<T>;
    fn mul(self, rhs: &Psl2<T>) -> Psl2<T> {
        self.compose(rhs)
    }
}

/// A point `x + i y` of the upper half-plane, `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint<T> {
    x: T,
    y: T,
}

impl<T: Real> HalfPlanePoint<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !(y > T::zero()) || !x.is_finite() || !y.is_finite() {
            return Err(Error::NotInHalfPlane(y.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { x, y })
    }

    pub fn i() -> Self {
        Self {
            x: T::zero(),
            y: T::one(),
        }
    }

    #[inline]
    pub fn re(&self) -> T {
        self.x
    }

    #[inline]
    pub fn im(&self) -> T {
        self.y
    }

    /// `cosh` of the hyperbolic distance, `1 + |z - w|^2 / (2 y_z y_w)`.
    #[inline]
    pub fn cosh_distance(&self, w: &Self) -> T {
        let dx = self.x - w.x;
        let dy = self.y - w.y;
        T::one() + (dx * dx + dy * dy) / (T::lit(2.0) * self.y * w.y)
    }

    /// Hyperbolic distance, computed as `2 asinh(|z - w| / (2 sqrt(y_z y_w)))`
    /// which keeps full relative accuracy for nearby points.
    pub fn distance(&self, w: &Self) -> T {
        let dx = self.x - w.x;
        let dy = self.y - w.y;
        let chord = (dx * dx + dy * dy).sqrt();
        T::lit(2.0) * (chord / (T::lit(2.0) * (self.y * w.y).sqrt())).asinh()
    }

    /// Cayley transform to the unit disk, `w = (z - i) / (z + i)`.
    pub fn to_disk(&self) -> (T, T) {
        let den = self.x * self.x + (self.y + T::one()) * (self.y + T::one());
        let re = (self.x * self.x + self.y * self.y - T::one()) / den;
        let im = -T::lit(2.0) * self.x / den;
        (re, im)
    }

    /// Inverse Cayley transform, `z = i (1 + w) / (1 - w)`.
    pub fn from_disk(re: T, im: T) -> Result<Self> {
        let one = T::one();
        let den = (one - re) * (one - re) + im * im;
        let x = -T::lit(2.0) * im / den;
        let y = (one - re * re - im * im) / den;
        Self::new(x, y)
    }

    /// Hyperboloid (Lorentz) coordinates `(x0, x1, x2)` with
    /// `cosh d(z, w) = x0 w0 - x1 w1 - x2 w2`.
    pub fn to_hyperboloid(&self) -> [T; 3] {
        let two = T::lit(2.0);
        let r2 = self.x * self.x + self.y * self.y;
        [
            (r2 + T::one()) / (two * self.y),
            (r2 - T::one()) / (two * self.y),
            self.x / self.y,
        ]
    }
}

pub(crate) fn lorentz_dot<T: Real>(p: &[T; 3], q: &[T; 3]) -> T {
    p[0] * q[0] - p[1] * q[1] - p[2] * q[2]
}
