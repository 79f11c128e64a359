//! Lattice and continuum photon Green functions.
//!
//! The lattice Green function is the resolvent `G(ω) = (ω − H)^{-1}`; below
//! the band it is real and negative on-site. The continuum Green function
//! describes the long-wavelength limit near the lower band edge `E0`, where
//! the dispersion is `E0 + k²/M`:
//!
//! * on-site, with a momentum cutoff `Λ`,
//!   `G_Λ(ω) = −(M/56) ∫₀^Λ k tanh(πk/2) / (k² + M(E0−ω)) dk`;
//! * between points at hyperbolic distance `d`,
//!   `G(d, ω) = −(M/56) Q_μ(cosh(d/κ))` with `μ = −½ + ½√(M(E0−ω))`.
//!
//! The second form is the decaying combination `Q_ν − C(ω) P_ν` with
//! `ν = −1 − μ` and `C(ω) = π cot(πν)`, which removes the growing `P`
//! component at infinity.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, DiskPoint, KAPPA};
use crate::hamiltonian::{build_photon_operator, SingleExcitationOperator};
use crate::numeric;
use crate::special;
use crate::spectral::{self, ContinuumParams, Spectrum};
use crate::tessellation::{fmt_f64, HyperbolicLattice};

/// Broadening used for in-band evaluations when none is given.
pub const DEFAULT_BROADENING: f64 = 1e-3;

/// Momentum cutoff used when no lattice calibration is available.
pub const DEFAULT_CUTOFF: f64 = 10.0;

/// Smallest distance from the band edge at which an undamped resolvent is evaluated.
pub const BAND_MARGIN: f64 = 1e-9;

/// Largest operator dimension for dense complex factorization.
const MAX_DENSE_COMPLEX: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Site(usize),
    Point(DiskPoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LatticeResolvent,
    ContinuumMomentum,
    ContinuumLegendre,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::LatticeResolvent => "lattice_resolvent",
            Provenance::ContinuumMomentum => "continuum_momentum",
            Provenance::ContinuumLegendre => "continuum_legendre",
        }
    }
}

/// A Green-function value together with where and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEvaluation {
    pub source: Location,
    pub target: Location,
    pub omega: f64,
    pub value: Complex64,
    pub provenance: Provenance,
}

impl GreenEvaluation {
    pub fn real(&self) -> f64 {
        self.value.re
    }
}

/// Resolvent evaluator for a fixed operator.
///
/// Below and above the band the resolvent is real and is obtained by
/// conjugate gradients on the definite matrix `±(H − ω)`. Broadened
/// evaluations use the spectral representation when eigenvectors are
/// attached and a dense complex factorization otherwise.
pub struct LatticeGreen<'a> {
    op: &'a SingleExcitationOperator,
    spectrum: Option<&'a Spectrum>,
    band: OnceLock<(f64, f64)>,
}

impl<'a> LatticeGreen<'a> {
    pub fn new(op: &'a SingleExcitationOperator) -> Self {
        LatticeGreen { op, spectrum: None, band: OnceLock::new() }
    }

    /// Reuse a precomputed spectrum of `op` for band edges and, if present, eigenvectors.
    pub fn with_spectrum(op: &'a SingleExcitationOperator, spectrum: &'a Spectrum) -> Result<Self> {
        if spectrum.len() != op.dim() {
            return Err(Error::Contract(format!("spectrum has {} levels but the operator has dimension {}", spectrum.len(), op.dim())));
        }
        let band = OnceLock::new();
        let _ = band.set((spectrum.e0(), spectrum.max()));
        Ok(LatticeGreen { op, spectrum: Some(spectrum), band })
    }

    pub fn operator(&self) -> &SingleExcitationOperator {
        self.op
    }

    /// Lowest and highest eigenvalue of the operator.
    pub fn band_edges(&self) -> Result<(f64, f64)> {
        if let Some(&b) = self.band.get() {
            return Ok(b);
        }
        let b = spectral::extremal_eigenvalues(self.op)?;
        Ok(*self.band.get_or_init(|| b))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.op.dim() {
            return Err(Error::Domain(format!("index {i} out of range for dimension {}", self.op.dim())));
        }
        Ok(())
    }

    /// Column `G(ω)_{·j}` for real `ω` outside the band.
    pub fn column_real(&self, j: usize, omega: f64) -> Result<Vec<f64>> {
        self.check_index(j)?;
        let (lo, hi) = self.band_edges()?;
        let sign = if omega <= lo - BAND_MARGIN {
            1.0
        } else if omega >= hi + BAND_MARGIN {
            -1.0
        } else {
            return Err(Error::NearSingular {
                omega,
                hint: format!("omega lies within {BAND_MARGIN} of the band [{lo}, {hi}]; pass a nonzero broadening eta"),
            });
        };
        let mut rhs = vec![0.0; self.op.dim()];
        rhs[j] = 1.0;
        // A = sign (H − ω) is positive definite and G = −sign A^{-1}
        let x = conjugate_gradient(
            |v, out| {
                self.op.apply(v, out);
                for (o, vi) in out.iter_mut().zip(v) {
                    *o = sign * (*o - omega * vi);
                }
            },
            &rhs,
        )?;
        Ok(x.into_iter().map(|v| -sign * v).collect())
    }

    /// Column `G(ω + iη)_{·j}`.
    pub fn column(&self, j: usize, omega: f64, eta: f64) -> Result<Vec<Complex64>> {
        if !(eta >= 0.0) {
            return Err(Error::Domain(format!("broadening must be nonnegative, got {eta}")));
        }
        if eta == 0.0 {
            return Ok(self.column_real(j, omega)?.into_iter().map(|v| Complex64::new(v, 0.0)).collect());
        }
        self.check_index(j)?;
        let z = Complex64::new(omega, eta);
        if let Some(spec) = self.spectrum.filter(|s| s.has_vectors()) {
            let v = spec.eigenvectors()?;
            let mut out = vec![Complex64::new(0.0, 0.0); self.op.dim()];
            for (n, &e) in spec.eigenvalues().iter().enumerate() {
                let c = v[(j, n)] / (z - e);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += c * v[(i, n)];
                }
            }
            return Ok(out);
        }
        let n = self.op.dim();
        if n > MAX_DENSE_COMPLEX {
            return Err(Error::Resource(format!("broadened resolvent of dimension {n} needs an attached spectrum with eigenvectors")));
        }
        let mut a = Mat::<Complex64>::from_fn(n, n, |i, k| if i == k { z } else { Complex64::new(0.0, 0.0) });
        for (r, c, v) in self.op.entries() {
            a[(r, c)] -= Complex64::new(v, 0.0);
        }
        let rhs = Mat::<Complex64>::from_fn(n, 1, |i, _| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let x = faer::linalg::solvers::Solve::solve(&a.partial_piv_lu(), &rhs);
        Ok((0..n).map(|i| x[(i, 0)]).collect())
    }

    /// Real resolvent element `G_ij(ω)` outside the band.
    pub fn value(&self, i: usize, j: usize, omega: f64) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.column_real(j, omega)?[i])
    }

    pub fn evaluate(&self, i: usize, j: usize, omega: f64, eta: f64) -> Result<GreenEvaluation> {
        self.check_index(i)?;
        let value = self.column(j, omega, eta)?[i];
        Ok(GreenEvaluation { source: Location::Site(i), target: Location::Site(j), omega, value, provenance: Provenance::LatticeResolvent })
    }
}

/// `x = A^{-1} b` for symmetric positive definite `A` given as a matrix-vector product.
fn conjugate_gradient<F: Fn(&[f64], &mut [f64])>(apply: F, b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let max_iter = (50 * n).max(1000);
    for _ in 0..max_iter {
        if rr.sqrt() <= 1e-14 * bnorm {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Numeric("conjugate gradients met a non-positive curvature direction".into()));
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(Error::Numeric(format!("conjugate gradients did not converge in {max_iter} iterations")))
}

/// Resolvent element `G_ij(ω + iη)` of `op`.
pub fn lattice_green(op: &SingleExcitationOperator, i: usize, j: usize, omega: f64, eta: f64) -> Result<GreenEvaluation> {
    LatticeGreen::new(op).evaluate(i, j, omega, eta)
}

/// `Σ_n ψ_n(i) ψ_n(j) / (ω − E_n)` from an eigendecomposition.
pub fn spectral_green(spec: &Spectrum, i: usize, j: usize, omega: f64) -> Result<f64> {
    let v = spec.eigenvectors()?;
    Ok(spec.eigenvalues().iter().enumerate().map(|(n, &e)| v[(i, n)] * v[(j, n)] / (omega - e)).sum())
}

/// Momentum cutoff fixed by matching the continuum on-site Green function to the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffCalibration {
    pub rings: u32,
    /// `−G_00(ω = −q t)` at the central site, dimensionless.
    pub c: f64,
    pub mass: f64,
    pub lambda: f64,
    /// Cutoff obtained when the `tanh` factor is dropped.
    pub lambda1: f64,
}

impl CutoffCalibration {
    /// Rebuild the calibration from a stored `C`.
    pub fn from_c(rings: u32, c: f64, mass: f64) -> Result<Self> {
        if !(c > 0.0 && mass > 0.0) {
            return Err(Error::Domain(format!("need C > 0 and M > 0, got C = {c}, M = {mass}")));
        }
        let lambda = solve_cutoff(c, mass)?;
        Ok(CutoffCalibration { rings, c, mass, lambda, lambda1: lambda_without_tanh(c, mass) })
    }
}

/// `Λ1 = sqrt(exp(112 C/M) − 1)`.
pub fn lambda_without_tanh(c: f64, mass: f64) -> f64 {
    ((112.0 * c / mass).exp() - 1.0).sqrt()
}

fn cutoff_integral(lambda: f64, mass: f64) -> Result<f64> {
    let integral = numeric::integrate(|k| k * (0.5 * PI * k).tanh() / (k * k + 1.0), 0.0, lambda, 1e-14)?;
    Ok(mass / 56.0 * integral)
}

fn solve_cutoff(c: f64, mass: f64) -> Result<f64> {
    let mut hi = 1.0;
    while cutoff_integral(hi, mass)? < c {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numeric(format!("no cutoff reproduces C = {c} for M = {mass}")));
        }
    }
    numeric::brent(|l| Ok(cutoff_integral(l, mass)? - c), 0.0, hi, 1e-14)
}

/// Calibrate `Λ` from the lattice on-site Green function at `ω = −q t` on the central site.
pub fn calibrate_cutoff(lat: &HyperbolicLattice, t: f64) -> Result<CutoffCalibration> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("hopping must be positive, got {t}")));
    }
    let op = build_photon_operator(lat, t)?;
    let spec = lat.spec();
    let omega = -(spec.coordination() as f64) * t;
    let g = LatticeGreen::new(&op).value(0, 0, omega)?;
    let params = ContinuumParams::for_lattice(lat)?;
    CutoffCalibration::from_c(spec.rings, -t * g, params.mass)
}

/// Continuum parameters including the momentum cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumGreenParams {
    pub mass: f64,
    pub e0: f64,
    pub lambda: f64,
}

impl ContinuumGreenParams {
    pub fn new(continuum: ContinuumParams, lambda: f64) -> Self {
        ContinuumGreenParams { mass: continuum.mass, e0: continuum.e0, lambda }
    }

    /// `{7,3}` parameters with band edge `−3 + 1/M`.
    pub fn heptagonal(lambda: f64) -> Self {
        Self::new(ContinuumParams::heptagonal(), lambda)
    }

    fn check(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Domain(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Domain(format!("cutoff must be positive, got {}", self.lambda)));
        }
        Ok(())
    }

    /// `√(M(E0 − ω))`.
    fn decay_momentum(&self, omega: f64) -> Result<f64> {
        if !(omega <= self.e0) {
            return Err(Error::Domain(format!("continuum Green function is evaluated at or below the band edge {}, got omega = {omega}", self.e0)));
        }
        Ok((self.mass * (self.e0 - omega)).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnsiteForm {
    /// Full cutoff integral including the `tanh` factor.
    Integral,
    /// `(M/112) ln(|ω − E0| M / Λ²)`, valid for `M|ω − E0| ≪ Λ²` with the `tanh` factor dropped.
    Logarithmic,
}

/// Continuum on-site Green function `G_Λ(ω)` for `ω ≤ E0`.
pub fn continuum_green_onsite(omega: f64, params: &ContinuumGreenParams, form: OnsiteForm) -> Result<GreenEvaluation> {
    params.check()?;
    let s = params.decay_momentum(omega)?;
    let m = params.mass;
    let value = match form {
        OnsiteForm::Integral => {
            let s2 = s * s;
            let integrand = |k: f64| {
                if k == 0.0 {
                    if s2 == 0.0 {
                        0.5 * PI
                    } else {
                        0.0
                    }
                } else {
                    k * (0.5 * PI * k).tanh() / (k * k + s2)
                }
            };
            -m / 56.0 * numeric::integrate(integrand, 0.0, params.lambda, 1e-13)?
        }
        OnsiteForm::Logarithmic => {
            if s == 0.0 {
                return Err(Error::Domain("the logarithmic form diverges at the band edge".into()));
            }
            m / 112.0 * ((params.e0 - omega) * m / (params.lambda * params.lambda)).ln()
        }
    };
    Ok(GreenEvaluation {
        source: Location::Point(DiskPoint::ORIGIN),
        target: Location::Point(DiskPoint::ORIGIN),
        omega,
        value: Complex64::new(value, 0.0),
        provenance: Provenance::ContinuumMomentum,
    })
}

/// Degree `μ = −½ + ½√(M(E0−ω))` of the decaying Legendre function.
pub fn legendre_degree(omega: f64, params: &ContinuumGreenParams) -> Result<f64> {
    Ok(-0.5 + 0.5 * params.decay_momentum(omega)?)
}

/// Continuum Green function at hyperbolic distance `d > 0`, `−(M/56) Q_μ(cosh(d/κ))`.
pub fn continuum_green_at_distance(d: f64, omega: f64, params: &ContinuumGreenParams) -> Result<f64> {
    params.check()?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("distance must be positive and finite, got {d}")));
    }
    let mu = legendre_degree(omega, params)?;
    let x = (d / KAPPA).cosh();
    let q = special::legendre_q(mu, x).map_err(|e| Error::Numeric(format!("Legendre evaluation at mu = {mu}, cosh(d/kappa) = {x}: {e}")))?;
    Ok(-params.mass / 56.0 * q)
}

/// Constant `C(ω) = π cot(πν)`, `ν = −½ − ½√(M(E0−ω))`, multiplying `P_ν` in `Q_ν − C P_ν`.
pub fn legendre_matching_constant(omega: f64, params: &ContinuumGreenParams) -> Result<f64> {
    let nu = -1.0 - legendre_degree(omega, params)?;
    Ok(PI / (PI * nu).tan())
}

/// Continuum Green function between two points of the disk.
pub fn continuum_green_offsite(z: DiskPoint, z2: DiskPoint, omega: f64, params: &ContinuumGreenParams) -> Result<GreenEvaluation> {
    let d = geometry::hyperbolic_distance(z, z2, KAPPA)?;
    if d == 0.0 {
        return Err(Error::Domain("coincident points: use the on-site cutoff form".into()));
    }
    Ok(GreenEvaluation {
        source: Location::Point(z),
        target: Location::Point(z2),
        omega,
        value: Complex64::new(continuum_green_at_distance(d, omega, params)?, 0.0),
        provenance: Provenance::ContinuumLegendre,
    })
}

/// `ξ(ω) = κ / (1 + √(M(E0 − ω)))`.
pub fn correlation_length(omega: f64, mass: f64, e0: f64, kappa: f64) -> Result<f64> {
    if !(omega <= e0) {
        return Err(Error::Domain(format!("correlation length is defined at or below the band edge {e0}, got {omega}")));
    }
    if !(mass > 0.0 && kappa > 0.0) {
        return Err(Error::Domain("mass and curvature radius must be positive".into()));
    }
    Ok(kappa / (1.0 + (mass * (e0 - omega)).sqrt()))
}

/// Exponential envelope `|G| ≈ A e^{−d/(2ξ)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    pub xi: f64,
    pub prefactor: f64,
    /// Root-mean-square deviation of `ln|G|` from the fitted line.
    pub residual: f64,
}

/// Least-squares fit of `ln|G|` against distance.
pub fn fit_decay(samples: &[(f64, f64)]) -> Result<CorrelationFit> {
    if samples.len() < 4 {
        return Err(Error::Domain(format!("need at least 4 samples, got {}", samples.len())));
    }
    if let Some(&(d, g)) = samples.iter().find(|s| !(s.1 > 0.0) || !s.0.is_finite()) {
        return Err(Error::Domain(format!("magnitudes must be positive, got |G| = {g} at d = {d}")));
    }
    let n = samples.len() as f64;
    let (mean_d, mean_y) = samples.iter().fold((0.0, 0.0), |(a, b), &(d, g)| (a + d / n, b + g.ln() / n));
    let sdd: f64 = samples.iter().map(|&(d, _)| (d - mean_d).powi(2)).sum();
    let sdy: f64 = samples.iter().map(|&(d, g)| (d - mean_d) * (g.ln() - mean_y)).sum();
    if sdd <= 1e-300 {
        return Err(Error::Numeric("all samples share the same distance".into()));
    }
    let slope = sdy / sdd;
    if !(slope < 0.0) {
        return Err(Error::Numeric(format!("samples do not decay (slope {slope})")));
    }
    let intercept = mean_y - slope * mean_d;
    let xi = -1.0 / (2.0 * slope);
    let span = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max) - samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    if span < 2.0 * xi {
        return Err(Error::Numeric(format!("samples span {span}, less than two correlation lengths ({})", 2.0 * xi)));
    }
    let residual = (samples.iter().map(|&(d, g)| (g.ln() - intercept - slope * d).powi(2)).sum::<f64>() / n).sqrt();
    Ok(CorrelationFit { xi, prefactor: intercept.exp(), residual })
}

/// CSV `d,omega,value,provenance`; `value` is the real part.
pub fn green_scan_csv(rows: &[(f64, GreenEvaluation)]) -> String {
    let mut out = String::from("d,omega,value,provenance\n");
    for (d, g) in rows {
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(*d), fmt_f64(g.omega), fmt_f64(g.value.re), g.provenance.name());
    }
    out
}
