//! Points of the Riemann sphere, the chordal metric and Möbius maps.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Default chordal tolerance for deciding that two points coincide.
pub const SAME_POINT_TOL: f64 = 1e-9;

/// A point of the extended complex plane.
///
/// Infinity is a tag of its own; a finite point never carries a NaN or an
/// infinite component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub const INFINITY: SpherePoint = SpherePoint::Infinity;

    /// Wraps a complex number; non-finite values (overflow, division by zero)
    /// become the point at infinity.
    pub fn from_complex(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }

    pub fn new(re: f64, im: f64) -> Self {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn real(x: f64) -> Self {
        Self::new(x, 0.0)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    /// Inverse stereographic projection onto the unit sphere in R^3.
    /// Euclidean distance between images equals [`chordal_dist`].
    pub fn to_unit_sphere(&self) -> [f64; 3] {
        match *self {
            SpherePoint::Infinity => [0.0, 0.0, 1.0],
            SpherePoint::Finite(z) => {
                let n2 = z.norm_sqr();
                if !n2.is_finite() {
                    return [0.0, 0.0, 1.0];
                }
                let d = 1.0 + n2;
                [2.0 * z.re / d, 2.0 * z.im / d, (n2 - 1.0) / d]
            }
        }
    }

    /// Stereographic projection from the unit sphere; the north pole is infinity.
    pub fn from_unit_sphere(v: [f64; 3]) -> Self {
        let [x, y, z] = v;
        let denom = 1.0 - z;
        if denom <= 0.0 {
            return SpherePoint::Infinity;
        }
        Self::new(x / denom, y / denom)
    }

    /// A point uniformly distributed with respect to spherical area.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let rho = (1.0 - z * z).sqrt();
        Self::from_unit_sphere([rho * theta.cos(), rho * theta.sin(), z])
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        SpherePoint::from_complex(z)
    }
}

impl From<f64> for SpherePoint {
    fn from(x: f64) -> Self {
        SpherePoint::real(x)
    }
}

/// Text form `re,im` for finite points and `inf` for infinity.
impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{:?},{:?}", z.re, z.im),
            SpherePoint::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for SpherePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(SpherePoint::Infinity);
        }
        let bad = || Error::Parse(format!("expected `re,im` or `inf`, got {s:?}"));
        let (re, im) = match s.split_once(',') {
            Some((re, im)) => (re.trim(), im.trim()),
            None => (s, "0"),
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(bad());
        }
        Ok(SpherePoint::new(re, im))
    }
}

/// Chordal distance `2|p-q| / (sqrt(1+|p|^2) sqrt(1+|q|^2))`, in `[0, 2]`.
pub fn chordal_dist(p: SpherePoint, q: SpherePoint) -> f64 {
    match (p, q) {
        (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        (SpherePoint::Finite(z), SpherePoint::Infinity)
        | (SpherePoint::Infinity, SpherePoint::Finite(z)) => 2.0 / 1f64.hypot(z.norm()),
        (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
            let d = 2.0 * (z - w).norm() / (1f64.hypot(z.norm()) * 1f64.hypot(w.norm()));
            d.min(2.0)
        }
    }
}

pub fn same_point(p: SpherePoint, q: SpherePoint, tol: f64) -> bool {
    chordal_dist(p, q) <= tol
}

/// `z -> (m11 z + m12) / (m21 z + m22)` with nonzero determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMap {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl MobiusMap {
    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Result<Self> {
        let det = m11 * m22 - m12 * m21;
        let scale = (m11 * m22).norm() + (m12 * m21).norm();
        if det == Complex64::new(0.0, 0.0) || det.norm() <= 1e-14 * scale || !det.norm().is_finite()
        {
            return Err(Error::DegenerateMobius(det.norm()));
        }
        Ok(MobiusMap { m11, m12, m21, m22 })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        MobiusMap {
            m11: one,
            m12: zero,
            m21: zero,
            m22: one,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn apply(&self, p: SpherePoint) -> SpherePoint {
        let zero = Complex64::new(0.0, 0.0);
        match p {
            SpherePoint::Infinity => {
                if self.m21 == zero {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from_complex(self.m11 / self.m21)
                }
            }
            SpherePoint::Finite(z) => {
                let den = self.m21 * z + self.m22;
                if den == zero {
                    return SpherePoint::Infinity;
                }
                SpherePoint::from_complex((self.m11 * z + self.m12) / den)
            }
        }
    }

    /// Adjugate matrix; represents the inverse map.
    pub fn inverse(&self) -> Self {
        MobiusMap {
            m11: self.m22,
            m12: -self.m12,
            m21: -self.m21,
            m22: self.m11,
        }
    }

    /// Matrix product: `self.compose(&other)` acts as `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> Self {
        MobiusMap {
            m11: self.m11 * other.m11 + self.m12 * other.m21,
            m12: self.m11 * other.m12 + self.m12 * other.m22,
            m21: self.m21 * other.m11 + self.m22 * other.m21,
            m22: self.m21 * other.m12 + self.m22 * other.m22,
        }
    }

    /// Whether the two matrices are proportional (same map on the sphere).
    pub fn projectively_eq(&self, other: &MobiusMap, tol: f64) -> bool {
        let a = [self.m11, self.m12, self.m21, self.m22];
        let b = [other.m11, other.m12, other.m21, other.m22];
        let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max)
            * b.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (0..4).all(|i| (0..4).all(|j| (a[i] * b[j] - a[j] * b[i]).norm() <= tol * scale))
    }
}
