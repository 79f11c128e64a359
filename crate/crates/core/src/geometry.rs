//! Poincaré-disk geometry.
//!
//! Distances use the metric `ds² = (2κ)²|dz|²/(1-|z|²)²`, so that
//! `d(z, z') = κ·arcosh(1 + 2|z-z'|²/((1-|z|²)(1-|z'|²)))`. With the
//! default curvature radius `κ = 1/2` the distance from the origin to a
//! point at Euclidean radius `r` is `artanh(r)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curvature radius of the disk model used throughout the crate.
pub const KAPPA: f64 = 0.5;

/// Points closer than this (in Euclidean radius) to the unit circle are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

/// A point strictly inside the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub re: f64,
    pub im: f64,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        let p = DiskPoint { re, im };
        p.validate()?;
        Ok(p)
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    /// Polar constructor, `r·e^{iθ}`.
    pub fn from_polar(r: f64, theta: f64) -> Result<Self> {
        Self::from_complex(Complex64::from_polar(r, theta))
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn validate(self) -> Result<()> {
        if !(self.re.is_finite() && self.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite disk point ({}, {})", self.re, self.im)));
        }
        if self.norm() > 1.0 - BOUNDARY_MARGIN {
            return Err(Error::Domain(format!("point ({}, {}) is not strictly inside the unit disk (|z| = {})", self.re, self.im, self.norm())));
        }
        Ok(())
    }
}

/// Hyperbolic distance between two disk points for curvature radius `kappa`.
pub fn hyperbolic_distance(z: DiskPoint, z2: DiskPoint, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("curvature radius must be positive, got {kappa}")));
    }
    z.validate()?;
    z2.validate()?;
    Ok(kappa * standard_distance(z.to_complex(), z2.to_complex()))
}

/// Unchecked distance in units of the curvature radius.
pub(crate) fn standard_distance(a: Complex64, b: Complex64) -> f64 {
    let diff = (a - b).norm_sqr();
    if diff == 0.0 {
        return 0.0;
    }
    let denom = (1.0 - a.norm_sqr()) * (1.0 - b.norm_sqr());
    let x = 2.0 * diff / denom;
    // arcosh(1 + x) written to stay accurate for small x
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

/// Disk automorphism `w = e^{iφ}(z - a)/(1 - ā z)`.
pub fn mobius_map(z: DiskPoint, a: DiskPoint, phi: f64) -> Result<DiskPoint> {
    a.validate()?;
    DiskPoint::from_complex(mobius(z.to_complex(), a.to_complex(), phi))
}

pub(crate) fn mobius(z: Complex64, a: Complex64, phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi) * (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z)
}

/// Inverse of [`mobius`] for the same `(a, φ)`.
pub(crate) fn mobius_inverse(w: Complex64, a: Complex64, phi: f64) -> Complex64 {
    let u = w * Complex64::from_polar(1.0, -phi);
    (u + a) / (Complex64::new(1.0, 0.0) + a.conj() * u)
}

/// Hyperbolic rotation by `angle` about the disk point `center`.
pub(crate) fn rotate_about(z: Complex64, center: Complex64, angle: f64) -> Complex64 {
    mobius_inverse(mobius(z, center, 0.0) * Complex64::from_polar(1.0, angle), center, 0.0)
}

/// `n` points along the geodesic from `z1` to `z2`, endpoints included,
/// equally spaced in hyperbolic arc length.
pub fn geodesic_samples(z1: DiskPoint, z2: DiskPoint, n: usize) -> Result<Vec<DiskPoint>> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least two geodesic samples, got {n}")));
    }
    z1.validate()?;
    z2.validate()?;
    if z1 == z2 {
        return Err(Error::Domain("geodesic endpoints coincide".into()));
    }
    let a = z1.to_complex();
    let w2 = mobius(z2.to_complex(), a, 0.0);
    let span = w2.norm().atanh();
    let dir = w2 / w2.norm();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let p = if k == 0 {
            a
        } else if k == n - 1 {
            z2.to_complex()
        } else {
            let s = k as f64 / (n - 1) as f64;
            mobius_inverse(dir * (s * span).tanh(), a, 0.0)
        };
        out.push(DiskPoint::from_complex(p)?);
    }
    Ok(out)
}

/// Hyperbolic midpoint of the segment `z1 z2`.
pub fn hyperbolic_midpoint(z1: DiskPoint, z2: DiskPoint) -> Result<DiskPoint> {
    z1.validate()?;
    z2.validate()?;
    if z1 == z2 {
        return Ok(z1);
    }
    let a = z1.to_complex();
    let w2 = mobius(z2.to_complex(), a, 0.0);
    let r = (0.5 * w2.norm().atanh()).tanh();
    DiskPoint::from_complex(mobius_inverse(w2 / w2.norm() * r, a, 0.0))
}

/// Distance from `z` to the geodesic segment between `a` and `b`.
pub fn distance_to_geodesic_segment(z: DiskPoint, a: DiskPoint, b: DiskPoint, kappa: f64) -> Result<f64> {
    if a == b {
        return hyperbolic_distance(z, a, kappa);
    }
    z.validate()?;
    // send a to the origin and b onto the positive real axis
    let wb = mobius(b.to_complex(), a.to_complex(), 0.0);
    let phi = -wb.arg();
    let end = wb.norm();
    let w = mobius(z.to_complex(), a.to_complex(), phi);
    // foot of the perpendicular dropped onto the real diameter
    let foot = if w.re.abs() < 1e-300 {
        0.0
    } else {
        let c = (w.norm_sqr() + 1.0) / (2.0 * w.re);
        c - c.signum() * (c * c - 1.0).sqrt()
    };
    let d = if (0.0..=end).contains(&foot) {
        (2.0 * w.im.abs() / (1.0 - w.norm_sqr())).asinh()
    } else {
        standard_distance(w, Complex64::new(0.0, 0.0)).min(standard_distance(w, Complex64::new(end, 0.0)))
    };
    Ok(kappa * d)
}
