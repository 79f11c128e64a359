//! Single-excitation dynamics of initially excited qubits and their decay rates.
//!
//! Two exact propagation routes are provided. [`Propagator`] expands the
//! initial state in the eigenbasis of the full qubit–photon operator. For a
//! single qubit, [`SingleQubitDecay`] instead uses the photon spectrum alone:
//! the qubit amplitude is `a(t) = Σ_k r_k e^{−iE_k t}` where `E_k` solves
//! `E − Δ − g² Σ_n w_n/(E − E_n) = 0`, `w_n` is the weight of photon level
//! `n` on the qubit site and `r_k = 1/(1 + g² Σ_n w_n/(E_k − E_n)²)`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{QubitSpec, SingleExcitationOperator};
use crate::numeric;
use crate::spectral::{eigendecompose, Spectrum};
use crate::tessellation::fmt_f64;

/// Default fit window `[0, 15]` in units of `1/t`.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.0, 15.0);

/// Relative standard error above which a fitted rate is flagged as unreliable.
pub const STDERR_WARNING_RATIO: f64 = 0.25;

/// Populations along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// `excited_population[k][n]` is `P↑` of qubit `k` at `times[n]`.
    pub excited_population: Vec<Vec<f64>>,
    /// `photon_populations[n][i]` is the photon population of site `i` at `times[n]`.
    pub photon_populations: Option<Vec<Vec<f64>>>,
    /// Total norm at each time.
    pub norm: Vec<f64>,
}

impl EvolutionResult {
    /// CSV `t,P_up,site_populations...` (one `P_up_k` column per qubit when there are several).
    pub fn to_csv(&self) -> String {
        let nq = self.excited_population.len();
        let mut out = String::from("t");
        if nq == 1 {
            out.push_str(",P_up");
        } else {
            (0..nq).for_each(|k| {
                let _ = write!(out, ",P_up_{k}");
            });
        }
        if let Some(ph) = &self.photon_populations {
            (0..ph.first().map_or(0, Vec::len)).for_each(|i| {
                let _ = write!(out, ",n_{i}");
            });
        }
        out.push('\n');
        for (n, t) in self.times.iter().enumerate() {
            out.push_str(&fmt_f64(*t));
            for p in &self.excited_population {
                let _ = write!(out, ",{}", fmt_f64(p[n]));
            }
            if let Some(ph) = &self.photon_populations {
                for x in &ph[n] {
                    let _ = write!(out, ",{}", fmt_f64(*x));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("times must be sorted".into()));
    }
    Ok(())
}

/// Exact propagator `e^{−iHt}` from an eigendecomposition.
pub struct Propagator {
    spectrum: Spectrum,
    n_photons: usize,
    n_qubits: usize,
}

impl Propagator {
    pub fn new(op: &SingleExcitationOperator) -> Result<Self> {
        Self::from_spectrum(eigendecompose(op, true)?, op.n_photons(), op.qubits().len())
    }

    pub fn from_spectrum(spectrum: Spectrum, n_photons: usize, n_qubits: usize) -> Result<Self> {
        let v = spectrum.eigenvectors()?;
        if v.nrows() != n_photons + n_qubits {
            return Err(Error::Contract("spectrum dimension differs from the basis size".into()));
        }
        Ok(Propagator { spectrum, n_photons, n_qubits })
    }

    pub fn dim(&self) -> usize {
        self.n_photons + self.n_qubits
    }

    /// `e^{−iHt} ψ` for any real `t`.
    pub fn apply(&self, psi: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let v = self.spectrum.eigenvectors()?;
        let n = self.dim();
        if psi.len() != n {
            return Err(Error::Domain(format!("state has length {} but the basis has {n} states", psi.len())));
        }
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let overlap: Complex64 = (0..n).map(|i| psi[i] * v[(i, k)]).sum();
                overlap * Complex64::from_polar(1.0, -self.spectrum.eigenvalues()[k] * t)
            })
            .collect();
        Ok((0..n).map(|i| (0..n).map(|k| coeffs[k] * v[(i, k)]).sum()).collect())
    }

    /// Evolve the basis state `initial` over `times`.
    pub fn evolve(&self, initial: usize, times: &[f64], record_photons: bool) -> Result<EvolutionResult> {
        check_times(times)?;
        let n = self.dim();
        if initial >= n {
            return Err(Error::Domain(format!("initial state {initial} out of range for dimension {n}")));
        }
        let v = self.spectrum.eigenvectors()?;
        let e = self.spectrum.eigenvalues();
        let mut excited = vec![Vec::with_capacity(times.len()); self.n_qubits];
        let mut photons = record_photons.then(|| Vec::with_capacity(times.len()));
        let mut norm = Vec::with_capacity(times.len());
        for &t in times {
            let phases: Vec<Complex64> = (0..n).map(|k| v[(initial, k)] * Complex64::from_polar(1.0, -e[k] * t)).collect();
            let amp: Vec<Complex64> = (0..n).map(|i| (0..n).map(|k| phases[k] * v[(i, k)]).sum()).collect();
            let pops: Vec<f64> = amp.iter().map(|a| a.norm_sqr()).collect();
            norm.push(pops.iter().sum());
            for (q, series) in excited.iter_mut().enumerate() {
                series.push(pops[self.n_photons + q]);
            }
            if let Some(p) = photons.as_mut() {
                p.push(pops[..self.n_photons].to_vec());
            }
        }
        Ok(EvolutionResult { times: times.to_vec(), excited_population: excited, photon_populations: photons, norm })
    }
}

/// Evolve the basis state `initial` of `op` (eigendecomposition computed internally).
pub fn evolve(op: &SingleExcitationOperator, initial: usize, times: &[f64], record_photons: bool) -> Result<EvolutionResult> {
    Propagator::new(op)?.evolve(initial, times, record_photons)
}

/// Exact single-qubit decay from the photon spectrum via the pole expansion.
#[derive(Debug, Clone)]
pub struct SingleQubitDecay {
    poles: Vec<f64>,
    residues: Vec<f64>,
}

impl SingleQubitDecay {
    /// `photons` must be the spectrum (with eigenvectors) of the photon-only operator.
    pub fn new(photons: &Spectrum, qubit: &QubitSpec) -> Result<Self> {
        let weights = photons.site_weights(qubit.site)?;
        let (delta, g2) = (qubit.delta, qubit.g * qubit.g);
        let mut levels: Vec<(f64, f64)> = Vec::new();
        for (e, lo, count) in photons.levels(1e-10) {
            let w: f64 = weights[lo..lo + count].iter().sum();
            if w > 1e-16 {
                levels.push((e, w));
            }
        }
        if g2 == 0.0 || levels.is_empty() {
            return Ok(SingleQubitDecay { poles: vec![delta], residues: vec![1.0] });
        }
        let energies: Vec<f64> = levels.iter().map(|l| l.0).collect();
        let secular = |x: f64| x - delta - g2 * levels.iter().map(|&(e, w)| w / (x - e)).sum::<f64>();
        let slope = |x: f64| 1.0 + g2 * levels.iter().map(|&(e, w)| w / (x - e).powi(2)).sum::<f64>();
        let total_w: f64 = levels.iter().map(|l| l.1).sum();
        let reach = (delta - energies[0]).abs() + (delta - energies[energies.len() - 1]).abs() + 2.0 * (g2 * total_w).sqrt() + 1.0;
        let mut edges = Vec::with_capacity(energies.len() + 2);
        edges.push(energies[0] - reach);
        edges.extend_from_slice(&energies);
        edges.push(energies[energies.len() - 1] + reach);
        let last = edges.len() - 2;
        let poles: Vec<f64> = (0..=last)
            .into_par_iter()
            .map(|k| {
                let (a, b) = (edges[k], edges[k + 1]);
                let lo = if k == 0 { a } else { a + 1e-13 * (1.0 + a.abs()) };
                let hi = if k == last { b } else { b - 1e-13 * (1.0 + b.abs()) };
                match numeric::brent(|x| Ok(secular(x)), lo, hi, 1e-15) {
                    Ok(x) => Ok(x),
                    // the root hugs a pole whose weight is too small to resolve
                    Err(Error::Bracketing(_)) => Ok(if secular(lo) > 0.0 { lo } else { hi }),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        let residues = poles.iter().map(|&x| 1.0 / slope(x)).collect();
        Ok(SingleQubitDecay { poles, residues })
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn residues(&self) -> &[f64] {
        &self.residues
    }

    /// Qubit amplitude `a(t)`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.poles.iter().zip(&self.residues).map(|(&e, &r)| r * Complex64::from_polar(1.0, -e * t)).sum()
    }

    /// `P↑(t)` over `times`.
    pub fn evolve(&self, times: &[f64]) -> Result<EvolutionResult> {
        check_times(times)?;
        let p: Vec<f64> = times.iter().map(|&t| self.amplitude(t).norm_sqr()).collect();
        Ok(EvolutionResult { times: times.to_vec(), excited_population: vec![p], photon_populations: None, norm: vec![1.0; times.len()] })
    }
}

/// Exponential decay rate fitted to `ln P↑(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub gamma: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    /// Set when `stderr/gamma` exceeds [`STDERR_WARNING_RATIO`], e.g. for revivals on small lattices.
    pub quality_warning: bool,
}

/// Least-squares fit of `ln P↑` of qubit `qubit` against time inside `window`.
pub fn fit_decay_rate(res: &EvolutionResult, qubit: usize, window: (f64, f64)) -> Result<DecayFit> {
    let pops = res.excited_population.get(qubit).ok_or_else(|| Error::Domain(format!("no qubit {qubit} in the result")))?;
    let pts: Vec<(f64, f64)> = res.times.iter().copied().zip(pops.iter().copied()).filter(|&(t, _)| t >= window.0 && t <= window.1).collect();
    if pts.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 samples in the window {window:?}, got {}", pts.len())));
    }
    if let Some(&(t, p)) = pts.iter().find(|&&(_, p)| !(p > 0.0)) {
        return Err(Error::Domain(format!("population {p} at t = {t} is not positive; shorten the fit window")));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::Domain("all samples share the same time".into()));
    }
    let sty: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1.ln() - mean_y)).sum();
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let ssr: f64 = pts.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / stt).sqrt();
    let gamma = (-slope).max(0.0);
    let quality_warning = gamma == 0.0 || stderr / gamma > STDERR_WARNING_RATIO;
    Ok(DecayFit { gamma, stderr, window, quality_warning })
}

/// How the golden-rule rate relates to the spectral function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `Γ = j(Δ)`, the population decay rate.
    Full,
    /// `Γ = j(Δ)/2`, the amplitude decay rate.
    Half,
}

/// Markovian decay rate predicted from `j(Δ)`.
pub fn markov_gamma(j_at_delta: f64, convention: Convention) -> Result<f64> {
    if !(j_at_delta >= 0.0) {
        return Err(Error::Domain(format!("spectral function must be nonnegative, got {j_at_delta}")));
    }
    Ok(match convention {
        Convention::Full => j_at_delta,
        Convention::Half => 0.5 * j_at_delta,
    })
}

/// One row of a decay-rate scan over detunings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayScanRow {
    pub delta: f64,
    pub gamma: f64,
    pub stderr: f64,
    pub j_binned: f64,
    /// Histogram density of states per site at `Δ`.
    pub rho_binned: f64,
}

/// CSV `delta,gamma,stderr,j_binned,rho_binned`.
pub fn decay_scan_csv(rows: &[DecayScanRow]) -> String {
    let mut out = String::from("delta,gamma,stderr,j_binned,rho_binned\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", fmt_f64(r.delta), fmt_f64(r.gamma), fmt_f64(r.stderr), fmt_f64(r.j_binned), fmt_f64(r.rho_binned));
    }
    out
}
