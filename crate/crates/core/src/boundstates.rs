//! Qubit–photon bound states outside the photonic band.
//!
//! A qubit with detuning `Δ` and coupling `g` binds a photon cloud at the
//! energy solving `E = Δ + g² G_ii(E)`. For two identical qubits the
//! self-energy becomes the 2×2 matrix `Σ(E) = g² G(E)` restricted to the
//! qubit sites, and each eigenvalue branch `λ(E)` gives a bound state
//! `E = Δ + λ(E)`. Below the band `G′ = −G²` is negative definite, so
//! `E − Δ − λ(E)` is strictly increasing and each branch has at most one root.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, KAPPA};
use crate::greens::{continuum_green_at_distance, continuum_green_onsite, ContinuumGreenParams, LatticeGreen, OnsiteForm, BAND_MARGIN};
use crate::hamiltonian::QubitSpec;
use crate::numeric;
use crate::tessellation::{fmt_f64, HyperbolicLattice};

/// Where the photon Green function comes from.
#[derive(Clone, Copy)]
pub enum Backend<'a> {
    /// Exact resolvent of the lattice hopping operator.
    Lattice(&'a LatticeGreen<'a>),
    /// Continuum Green function evaluated at the lattice site positions.
    Continuum { params: ContinuumGreenParams, lattice: &'a HyperbolicLattice },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Single,
    Symmetric,
    Antisymmetric,
}

/// A normalized single-excitation bound state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateResult {
    pub energy: f64,
    /// Qubit amplitudes in input order.
    pub spin_amplitudes: Vec<f64>,
    /// Photon amplitude on every lattice site.
    pub photon_amplitudes: Vec<f64>,
    pub parity: Parity,
    /// `|E − Δ − λ(E)|` at the returned energy.
    pub residual: f64,
}

impl BoundStateResult {
    pub fn norm_sqr(&self) -> f64 {
        self.spin_amplitudes.iter().chain(&self.photon_amplitudes).map(|a| a * a).sum()
    }

    /// Photon density `|φ_i|²` per site.
    pub fn photon_density(&self) -> Vec<f64> {
        self.photon_amplitudes.iter().map(|a| a * a).collect()
    }

    /// Total photon weight `Σ_i |φ_i|²`.
    pub fn photon_weight(&self) -> f64 {
        self.photon_amplitudes.iter().map(|a| a * a).sum()
    }
}

/// The two bound-state branches of a qubit pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStatePair {
    /// Branch of the smaller self-energy eigenvalue; symmetric for equivalent sites below the band.
    pub lower: BoundStateResult,
    /// Branch of the larger self-energy eigenvalue, absent when it has no root below the band.
    pub upper: Option<BoundStateResult>,
    /// True when both energies coincide within `1e-12`.
    pub merged: bool,
}

impl BoundStatePair {
    fn by_parity(&self, parity: Parity) -> Option<&BoundStateResult> {
        std::iter::once(&self.lower).chain(self.upper.as_ref()).find(|r| r.parity == parity)
    }

    pub fn symmetric(&self) -> Option<&BoundStateResult> {
        self.by_parity(Parity::Symmetric)
    }

    pub fn antisymmetric(&self) -> Option<&BoundStateResult> {
        self.by_parity(Parity::Antisymmetric)
    }
}

impl Backend<'_> {
    fn n_sites(&self) -> usize {
        match self {
            Backend::Lattice(g) => g.operator().n_photons(),
            Backend::Continuum { lattice, .. } => lattice.len(),
        }
    }

    /// Lower edge of the search window.
    fn lower_edge(&self) -> Result<f64> {
        match self {
            Backend::Lattice(g) => Ok(g.band_edges()?.0 - BAND_MARGIN),
            Backend::Continuum { params, .. } => Ok(params.e0),
        }
    }

    /// Green-function columns for the given sites at energy `e` (one column per site).
    fn columns(&self, sites: &[usize], e: f64) -> Result<Vec<Vec<f64>>> {
        match self {
            Backend::Lattice(g) => sites.iter().map(|&s| g.column_real(s, e)).collect(),
            Backend::Continuum { params, lattice } => {
                let onsite = continuum_green_onsite(e, params, OnsiteForm::Integral)?.real();
                sites
                    .iter()
                    .map(|&s| {
                        let zs = lattice.site(s);
                        lattice
                            .sites()
                            .iter()
                            .enumerate()
                            .map(
                                |(i, &z)| {
                                    if i == s {
                                        Ok(onsite)
                                    } else {
                                        continuum_green_at_distance(geometry::hyperbolic_distance(zs, z, KAPPA)?, e, params)
                                    }
                                },
                            )
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// Green-function matrix restricted to the given sites.
    fn block(&self, sites: &[usize], e: f64) -> Result<Vec<Vec<f64>>> {
        match self {
            Backend::Lattice(_) => {
                let cols = self.columns(sites, e)?;
                Ok(sites.iter().map(|&a| cols.iter().map(|c| c[a]).collect()).collect())
            }
            Backend::Continuum { params, lattice } => {
                let onsite = continuum_green_onsite(e, params, OnsiteForm::Integral)?.real();
                sites
                    .iter()
                    .map(|&a| {
                        sites
                            .iter()
                            .map(|&b| {
                                if a == b {
                                    Ok(onsite)
                                } else {
                                    let d = geometry::hyperbolic_distance(lattice.site(a), lattice.site(b), KAPPA)?;
                                    continuum_green_at_distance(d, e, params)
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

fn validate_qubit(q: &QubitSpec, n: usize) -> Result<()> {
    if q.site >= n {
        return Err(Error::InvalidSpec(format!("qubit site {} out of range for {n} sites", q.site)));
    }
    if !(q.g > 0.0 && q.g.is_finite()) {
        return Err(Error::Domain(format!("bound states need g > 0, got {}", q.g)));
    }
    if !q.delta.is_finite() {
        return Err(Error::InvalidSpec("non-finite detuning".into()));
    }
    Ok(())
}

/// Root of an increasing function on `(−∞, top]`, expanding the lower end as needed.
fn root_below(mut f: impl FnMut(f64) -> Result<f64>, start: f64, top: f64) -> Result<Option<f64>> {
    let f_top = f(top)?;
    if f_top < 0.0 {
        return Ok(None);
    }
    let mut lo = start.min(top - 1e-6);
    let mut step = (top - lo).max(1e-3);
    while f(lo)? > 0.0 {
        lo -= step;
        step *= 2.0;
        if !lo.is_finite() || step > 1e12 {
            return Err(Error::Bracketing(format!("no sign change found below {top}")));
        }
    }
    numeric::brent(f, lo, top, 1e-15).map(Some)
}

/// Root of an increasing function on `[bottom, ∞)`, expanding the upper end as needed.
fn root_above(mut f: impl FnMut(f64) -> Result<f64>, bottom: f64, start: f64) -> Result<Option<f64>> {
    if f(bottom)? > 0.0 {
        return Ok(None);
    }
    let mut hi = start.max(bottom + 1e-6);
    let mut step = (hi - bottom).max(1e-3);
    while f(hi)? < 0.0 {
        hi += step;
        step *= 2.0;
        if !hi.is_finite() || step > 1e12 {
            return Err(Error::Bracketing(format!("no sign change found above {bottom}")));
        }
    }
    numeric::brent(f, bottom, hi, 1e-15).map(Some)
}

/// Eigenvalues and eigenvectors of a symmetric 2×2 matrix, ascending.
fn sym2_eigen(a: f64, b: f64, d: f64) -> [(f64, [f64; 2]); 2] {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = half.hypot(b);
    let vec_for = |lambda: f64| -> [f64; 2] {
        // (a − λ) x + b y = 0, choosing the better-conditioned row
        let (x, y) = if (a - lambda).abs() + b.abs() >= (d - lambda).abs() + b.abs() { (b, lambda - a) } else { (lambda - d, b) };
        let n = x.hypot(y);
        if n == 0.0 {
            [1.0, 0.0]
        } else {
            [x / n, y / n]
        }
    };
    let lo = mean - r;
    let hi = mean + r;
    let (vlo, vhi) = if b == 0.0 {
        if a <= d {
            ([1.0, 0.0], [0.0, 1.0])
        } else {
            ([0.0, 1.0], [1.0, 0.0])
        }
    } else {
        (vec_for(lo), vec_for(hi))
    };
    [(lo, vlo), (hi, vhi)]
}

fn build_state(backend: &Backend<'_>, sites: &[usize], g: f64, e: f64, spins: &[f64], parity: Parity, residual: f64) -> Result<BoundStateResult> {
    let cols = backend.columns(sites, e)?;
    let mut photons = vec![0.0; backend.n_sites()];
    for (col, &c) in cols.iter().zip(spins) {
        for (p, gi) in photons.iter_mut().zip(col) {
            *p += g * gi * c;
        }
    }
    let norm = (spins.iter().chain(&photons).map(|a| a * a).sum::<f64>()).sqrt();
    Ok(BoundStateResult {
        energy: e,
        spin_amplitudes: spins.iter().map(|c| c / norm).collect(),
        photon_amplitudes: photons.into_iter().map(|p| p / norm).collect(),
        parity,
        residual,
    })
}

/// Single-qubit bound state on the requested side of the band.
pub fn solve_single_bound_state(backend: &Backend<'_>, qubit: &QubitSpec, which: Branch) -> Result<BoundStateResult> {
    validate_qubit(qubit, backend.n_sites())?;
    let (delta, g2, s) = (qubit.delta, qubit.g * qubit.g, qubit.site);
    let f = |e: f64| -> Result<f64> { Ok(e - delta - g2 * backend.block(&[s], e)?[0][0]) };
    let energy = match which {
        Branch::Lower => {
            let top = backend.lower_edge()?;
            let start = top - 5.0 * g2 - 5.0 * (delta - top).abs();
            root_below(f, start, top)?
        }
        Branch::Upper => {
            let Backend::Lattice(green) = backend else {
                return Err(Error::InvalidSpec("upper bound states are only available on the lattice backend".into()));
            };
            let bottom = green.band_edges()?.1 + BAND_MARGIN;
            root_above(f, bottom, bottom + 5.0 * g2 + 5.0 * (delta - bottom).abs())?
        }
    };
    let energy = energy.ok_or_else(|| Error::Bracketing(format!("no {which:?} bound state for Δ = {delta}, g = {}", qubit.g)))?;
    let residual = f(energy)?.abs();
    build_state(backend, &[s], qubit.g, energy, &[1.0], Parity::Single, residual)
}

/// Both bound-state branches of two identical qubits below the band.
pub fn solve_two_qubit_bound_states(backend: &Backend<'_>, q1: &QubitSpec, q2: &QubitSpec) -> Result<BoundStatePair> {
    let n = backend.n_sites();
    validate_qubit(q1, n)?;
    validate_qubit(q2, n)?;
    if q1.site == q2.site {
        return Err(Error::InvalidSpec("the two qubits must sit on distinct sites".into()));
    }
    if q1.delta != q2.delta || q1.g != q2.g {
        return Err(Error::InvalidSpec("two-qubit bound states assume equal detuning and coupling".into()));
    }
    let (delta, g, sites) = (q1.delta, q1.g, [q1.site, q2.site]);
    let g2 = g * g;
    let branch = |k: usize| {
        move |e: f64| -> Result<f64> {
            let m = backend.block(&sites, e)?;
            Ok(e - delta - g2 * sym2_eigen(m[0][0], m[0][1], m[1][1])[k].0)
        }
    };
    let top = backend.lower_edge()?;
    let start = top - 5.0 * g2 - 5.0 * (delta - top).abs();
    let mut results = Vec::with_capacity(2);
    for k in 0..2 {
        let Some(e) = root_below(branch(k), start, top)? else {
            results.push(None);
            continue;
        };
        let m = backend.block(&sites, e)?;
        let (lambda, v) = sym2_eigen(m[0][0], m[0][1], m[1][1])[k];
        let v = if v[0] + v[1] < 0.0 || (v[0] + v[1] == 0.0 && v[0] < 0.0) { [-v[0], -v[1]] } else { v };
        let parity = if v[0] * v[1] >= 0.0 { Parity::Symmetric } else { Parity::Antisymmetric };
        let residual = (e - delta - g2 * lambda).abs();
        results.push(Some(build_state(backend, &sites, g, e, &v, parity, residual)?));
    }
    let upper = results.pop().flatten();
    let lower = results.pop().flatten().ok_or_else(|| Error::Bracketing(format!("no two-qubit bound state below the band for Δ = {delta}, g = {g}")))?;
    let merged = upper.as_ref().is_some_and(|u| (u.energy - lower.energy).abs() < 1e-12);
    Ok(BoundStatePair { lower, upper, merged })
}

/// Photon density of a bound state at every lattice site.
pub fn two_qubit_photon_density(state: &BoundStateResult) -> Vec<f64> {
    state.photon_density()
}

/// CSV `param,E_plus,E_minus,residual`; `E_plus` is the symmetric branch, missing roots are left empty.
pub fn two_qubit_scan_csv(rows: &[(f64, BoundStatePair)]) -> String {
    let mut out = String::from("param,E_plus,E_minus,residual\n");
    let cell = |r: Option<&BoundStateResult>| r.map(|r| fmt_f64(r.energy)).unwrap_or_default();
    for (p, pair) in rows {
        let residual = std::iter::once(&pair.lower).chain(pair.upper.as_ref()).map(|r| r.residual).fold(0.0, f64::max);
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(*p), cell(pair.symmetric()), cell(pair.antisymmetric()), fmt_f64(residual));
    }
    out
}

/// CSV `site,re,im,n_ph` of the photon density of a bound state.
pub fn density_csv(lattice: &HyperbolicLattice, state: &BoundStateResult) -> Result<String> {
    if state.photon_amplitudes.len() != lattice.len() {
        return Err(Error::Contract("bound state and lattice sizes differ".into()));
    }
    let mut out = String::from("site,re,im,n_ph\n");
    for (i, (z, n)) in lattice.sites().iter().zip(state.photon_density()).enumerate() {
        let _ = writeln!(out, "{i},{},{},{}", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(n));
    }
    Ok(out)
}
