//! Eigendecomposition and spectral observables.
//!
//! Histograms use half-open bins `[E0 + kΔω, E0 + (k+1)Δω)` anchored at the
//! lowest eigenvalue `E0`, so sum rules hold exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::KAPPA;
use crate::hamiltonian::SingleExcitationOperator;
use crate::numeric;
use crate::tessellation::{self, fmt_f64, HyperbolicLattice, LatticeKind};

/// Largest dimension handed to the dense eigensolver.
pub const MAX_DENSE_DIM: usize = 12_000;

/// Eigenvalues in ascending order with optional orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Option<Mat<f64>>,
}

impl Spectrum {
    /// A spectrum known only through its eigenvalues.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Domain("empty spectrum".into()));
        }
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::Numeric("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Spectrum { eigenvalues, eigenvectors: None })
    }

    /// Diagonalize a dense real symmetric matrix.
    pub fn from_symmetric(mat: MatRef<'_, f64>, want_vectors: bool) -> Result<Self> {
        let n = mat.nrows();
        if n == 0 || mat.ncols() != n {
            return Err(Error::Domain(format!("need a nonempty square matrix, got {}x{}", n, mat.ncols())));
        }
        if n > MAX_DENSE_DIM {
            return Err(Error::Resource(format!("dimension {n} exceeds the dense eigensolver limit {MAX_DENSE_DIM}")));
        }
        if !want_vectors {
            let vals =
                mat.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Numeric(format!("symmetric eigenvalue solver failed for n = {n}: {e:?}")))?;
            return Self::from_eigenvalues(vals);
        }
        let eig = mat.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numeric(format!("symmetric eigensolver failed for n = {n}: {e:?}")))?;
        let s = eig.S().column_vector();
        let u = eig.U();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| s[k]).collect();
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::Numeric("non-finite eigenvalue".into()));
        }
        let mut vectors = Mat::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            // fix the sign so that the largest component is positive
            let pivot = (0..n).fold(0, |best, i| if u[(i, k)].abs() > u[(best, k)].abs() + 1e-12 { i } else { best });
            let sign = if u[(pivot, k)] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..n {
                vectors[(i, col)] = sign * u[(i, k)];
            }
        }
        Ok(Spectrum { eigenvalues, eigenvectors: Some(vectors) })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Lowest eigenvalue, the lower band edge for a photon-only operator.
    pub fn e0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.len() - 1]
    }

    pub fn has_vectors(&self) -> bool {
        self.eigenvectors.is_some()
    }

    pub fn eigenvectors(&self) -> Result<MatRef<'_, f64>> {
        self.eigenvectors.as_ref().map(|m| m.as_ref()).ok_or_else(|| Error::Contract("eigenvectors were not computed for this spectrum".into()))
    }

    /// `|ψ_j(site)|²` for every eigenstate `j`.
    pub fn site_weights(&self, site: usize) -> Result<Vec<f64>> {
        let v = self.eigenvectors()?;
        if site >= v.nrows() {
            return Err(Error::Domain(format!("site {site} out of range for dimension {}", v.nrows())));
        }
        Ok((0..v.ncols()).map(|j| v[(site, j)] * v[(site, j)]).collect())
    }

    /// Number of eigenvalues `≤ omega`.
    pub fn count_at_most(&self, omega: f64) -> usize {
        self.eigenvalues.partition_point(|&e| e <= omega)
    }

    /// `Σ_{E_j ≤ ω} |ψ_j(site)|²`.
    pub fn cumulative_weight(&self, site: usize, omega: f64) -> Result<f64> {
        let w = self.site_weights(site)?;
        Ok(w[..self.count_at_most(omega)].iter().sum())
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> Result<f64> {
        let v = self.eigenvectors()?;
        let gram = v.transpose() * v;
        let n = gram.nrows();
        Ok((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs()).fold(0.0, f64::max))
    }

    /// `‖HV − VΛ‖_F / ‖H‖_F`.
    pub fn relative_residual(&self, op: &SingleExcitationOperator) -> Result<f64> {
        let v = self.eigenvectors()?;
        let n = op.dim();
        if v.nrows() != n {
            return Err(Error::Domain("operator and spectrum dimensions differ".into()));
        }
        let mut col = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut sum = 0.0;
        for j in 0..v.ncols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = v[(i, j)];
            }
            op.apply(&col, &mut out);
            sum += out.iter().zip(&col).map(|(hv, x)| (hv - self.eigenvalues[j] * x).powi(2)).sum::<f64>();
        }
        let norm: f64 = op.entries().map(|(_, _, x)| x * x).sum::<f64>().sqrt();
        Ok(sum.sqrt() / norm.max(f64::MIN_POSITIVE))
    }

    /// Eigenvalues grouped into degenerate levels: `(energy, first index, multiplicity)`.
    pub fn levels(&self, tol: f64) -> Vec<(f64, usize, usize)> {
        let mut out: Vec<(f64, usize, usize)> = Vec::new();
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            match out.last_mut() {
                Some((first, start, count)) if (e - self.eigenvalues[*start + *count - 1]).abs() <= tol => {
                    *count += 1;
                    *first = self.eigenvalues[*start..*start + *count].iter().sum::<f64>() / *count as f64;
                }
                _ => out.push((e, k, 1)),
            }
        }
        out
    }
}

/// Diagonalize an operator, optionally keeping eigenvectors.
pub fn eigendecompose(op: &SingleExcitationOperator, want_vectors: bool) -> Result<Spectrum> {
    Spectrum::from_symmetric(op.to_dense().as_ref(), want_vectors)
}

/// Lowest and highest eigenvalue of an operator.
///
/// Small operators are diagonalized densely; larger ones use Lanczos
/// iteration with full reorthogonalization until both extremal Ritz values
/// have residual bounds below `1e-11`.
pub fn extremal_eigenvalues(op: &SingleExcitationOperator) -> Result<(f64, f64)> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Domain("empty operator".into()));
    }
    if n <= 400 {
        let s = eigendecompose(op, false)?;
        return Ok((s.e0(), s.max()));
    }
    let max_steps = n.min(3000);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    // deterministic start vector with generic overlap on every eigenvector
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (1.2345 * i as f64 + 0.5).sin()).collect();
    normalize(&mut q);
    let mut w = vec![0.0; n];
    for m in 1..=max_steps {
        op.apply(&q, &mut w);
        let a = dot(&w, &q);
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= a * qi;
        }
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= b * pi;
            }
        }
        alpha.push(a);
        basis.push(q.clone());
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = dot(&w, &w).sqrt();
        let exhausted = b < 1e-12 || m == max_steps;
        if exhausted || m % 40 == 0 {
            let t = Mat::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let ritz = Spectrum::from_symmetric(t.as_ref(), true)?;
            let s = ritz.eigenvectors()?;
            let lo_bound = (b * s[(m - 1, 0)]).abs();
            let hi_bound = (b * s[(m - 1, m - 1)]).abs();
            if exhausted || (lo_bound < 1e-11 && hi_bound < 1e-11) {
                if !exhausted || b < 1e-12 {
                    return Ok((ritz.e0(), ritz.max()));
                }
                return Err(Error::Numeric(format!("Lanczos did not converge in {m} steps (residual bounds {lo_bound:.2e}, {hi_bound:.2e})")));
            }
        }
        beta.push(b);
        q.copy_from_slice(&w);
        q.iter_mut().for_each(|x| *x /= b);
    }
    unreachable!("loop returns at the final step")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Dos,
    CumulativeDos,
    JLocal,
    CumulativeJ,
    Weyl,
    #[serde(rename = "continuum_L1")]
    ContinuumL1,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Dos => "dos",
            CurveKind::CumulativeDos => "cumulative_dos",
            CurveKind::JLocal => "j_local",
            CurveKind::CumulativeJ => "cumulative_j",
            CurveKind::Weyl => "weyl",
            CurveKind::ContinuumL1 => "continuum_L1",
        }
    }

    pub fn is_cumulative(self) -> bool {
        matches!(self, CurveKind::CumulativeDos | CurveKind::CumulativeJ)
    }
}

/// A binned spectral curve.
///
/// Density kinds store one value per bin, with `bin_edges.len() == values.len() + 1`.
/// Cumulative kinds store a step function: `values[k]` holds for
/// `bin_edges[k] ≤ ω < bin_edges[k+1]`, the last value extends to `+∞`, and
/// the curve is zero below `bin_edges[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub kind: CurveKind,
    pub bin_edges: Vec<f64>,
    pub values: Vec<f64>,
}

impl SpectralCurve {
    /// Sample a density on bins of width `bin` starting at `start`, evaluated at bin centers.
    pub fn from_density<F: Fn(f64) -> f64>(kind: CurveKind, start: f64, bin: f64, bins: usize, f: F) -> Self {
        let bin_edges: Vec<f64> = (0..=bins).map(|k| start + k as f64 * bin).collect();
        let values = bin_edges.windows(2).map(|w| f(0.5 * (w[0] + w[1]))).collect();
        SpectralCurve { kind, bin_edges, values }
    }

    pub fn evaluate(&self, omega: f64) -> f64 {
        let k = self.bin_edges.partition_point(|&e| e <= omega);
        if self.kind.is_cumulative() {
            if k == 0 {
                0.0
            } else {
                self.values[k - 1]
            }
        } else if k == 0 || k > self.values.len() {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    /// Energies paired with values: bin centers for densities, step positions for cumulative curves.
    pub fn points(&self) -> Vec<(f64, f64)> {
        if self.kind.is_cumulative() {
            self.bin_edges.iter().copied().zip(self.values.iter().copied()).collect()
        } else {
            self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).zip(self.values.iter().copied()).collect()
        }
    }

    /// `∫ curve dω` for density kinds.
    pub fn integral(&self) -> f64 {
        self.bin_edges.windows(2).zip(&self.values).map(|(w, v)| (w[1] - w[0]) * v).sum()
    }

    /// CSV with header `omega,value,kind`; energies in units of the hopping `t`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,value,kind\n");
        for (w, v) in self.points() {
            let _ = writeln!(out, "{},{},{}", fmt_f64(w), fmt_f64(v), self.kind.name());
        }
        out
    }
}

fn histogram(spec: &Spectrum, weights: &[f64], bin: f64, kind: CurveKind, scale: f64) -> Result<SpectralCurve> {
    if !(bin > 0.0 && bin.is_finite()) {
        return Err(Error::Domain(format!("bin width must be positive, got {bin}")));
    }
    let e0 = spec.e0();
    let bins = ((spec.max() - e0) / bin).floor() as usize + 1;
    let mut values = vec![0.0; bins];
    for (&e, &w) in spec.eigenvalues().iter().zip(weights) {
        let k = (((e - e0) / bin).floor() as usize).min(bins - 1);
        values[k] += w * scale / bin;
    }
    let bin_edges = (0..=bins).map(|k| e0 + k as f64 * bin).collect();
    Ok(SpectralCurve { kind, bin_edges, values })
}

fn accumulate(mut curve: SpectralCurve, kind: CurveKind) -> SpectralCurve {
    let widths: Vec<f64> = curve.bin_edges.windows(2).map(|w| w[1] - w[0]).collect();
    let mut acc = 0.0;
    for (v, w) in curve.values.iter_mut().zip(widths) {
        acc += *v * w;
        *v = acc;
    }
    // each cumulative value applies from the right edge of its bin
    curve.bin_edges.remove(0);
    curve.kind = kind;
    curve
}

/// Histogram density of states `ρ(ω)`, normalized so that `∫ρ dω = N`.
pub fn dos(spec: &Spectrum, bin: f64) -> Result<SpectralCurve> {
    histogram(spec, &vec![1.0; spec.len()], bin, CurveKind::Dos, 1.0)
}

/// Normalized cumulative DOS `P(ω) = #{E_j ≤ ω}/n` as an exact step function.
pub fn cumulative_dos(spec: &Spectrum, n: usize) -> Result<SpectralCurve> {
    if n == 0 {
        return Err(Error::Domain("normalization count must be positive".into()));
    }
    let mut bin_edges = Vec::new();
    let mut values = Vec::new();
    for (k, &e) in spec.eigenvalues().iter().enumerate() {
        let p = (k + 1) as f64 / n as f64;
        if bin_edges.last() == Some(&e) {
            *values.last_mut().unwrap() = p;
        } else {
            bin_edges.push(e);
            values.push(p);
        }
    }
    Ok(SpectralCurve { kind: CurveKind::CumulativeDos, bin_edges, values })
}

/// Binned `j(ω) = 2π g² Σ_j |ψ_j(site)|² δ(ω − E_j)`.
pub fn local_spectral_function(spec: &Spectrum, site: usize, g: f64, bin: f64) -> Result<SpectralCurve> {
    let w = spec.site_weights(site)?;
    histogram(spec, &w, bin, CurveKind::JLocal, 2.0 * PI * g * g)
}

/// Cumulative `J(ω) = ∫_{E0}^{ω} j(ν)/g² dν` sampled at bin right edges.
pub fn cumulative_spectral(spec: &Spectrum, site: usize, bin: f64) -> Result<SpectralCurve> {
    Ok(accumulate(local_spectral_function(spec, site, 1.0, bin)?, CurveKind::CumulativeJ))
}

/// Effective mass `M = 4/(q h²)` of the long-wavelength dispersion, `h` the continuum lattice constant.
pub fn continuum_mass(p: u32, q: u32, kappa: f64) -> Result<f64> {
    let h = tessellation::continuum_lattice_constant(p, q, kappa)?;
    Ok(4.0 / (q as f64 * h * h))
}

/// Parameters of the continuum description near the lower band edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumParams {
    pub mass: f64,
    pub e0: f64,
}

impl ContinuumParams {
    /// `{7,3}` vertex graph with the continuum band edge `E0 = −3 + 1/M`.
    pub fn heptagonal() -> Self {
        let mass = continuum_mass(7, 3, KAPPA).expect("{7,3} is hyperbolic");
        ContinuumParams { mass, e0: -3.0 + 1.0 / mass }
    }

    /// Continuum parameters for a lattice, band edge `E0 = −z + 1/M` with `z` the coordination.
    /// Values for anything but the `{7,3}` vertex graph are experimental.
    pub fn for_lattice(lat: &HyperbolicLattice) -> Result<Self> {
        let spec = lat.spec();
        let z = spec.coordination() as f64;
        let h = match spec.kind {
            LatticeKind::VertexGraph => tessellation::continuum_lattice_constant(spec.p, spec.q, KAPPA)?,
            LatticeKind::LineGraph => 2.0 * KAPPA * (lat.lattice_constant() / (2.0 * KAPPA)).tanh(),
        };
        let mass = 4.0 / (z * h * h);
        Ok(ContinuumParams { mass, e0: -z + 1.0 / mass })
    }

    /// Same mass with the band edge taken from a lattice spectrum.
    pub fn with_e0(self, e0: f64) -> Self {
        ContinuumParams { e0, ..self }
    }
}

fn check_above_edge(omega: f64, e0: f64) -> Result<f64> {
    if !(omega >= e0) {
        return Err(Error::Domain(format!("omega = {omega} lies below the band edge {e0}")));
    }
    Ok(omega - e0)
}

/// `j_{L=1}(ω) = (πM/56) g² tanh(π/2 √((ω−E0)M))`.
pub fn continuum_j_l1(omega: f64, g: f64, mass: f64, e0: f64) -> Result<f64> {
    let x = check_above_edge(omega, e0)?;
    Ok(PI * mass / 56.0 * g * g * (0.5 * PI * (x * mass).sqrt()).tanh())
}

/// `ρ_{L=1}(ω) = N (M/112) tanh(π/2 √((ω−E0)M))`.
pub fn continuum_dos_l1(omega: f64, n: f64, mass: f64, e0: f64) -> Result<f64> {
    let x = check_above_edge(omega, e0)?;
    Ok(n * mass / 112.0 * (0.5 * PI * (x * mass).sqrt()).tanh())
}

/// `J_{L=1}(ω) = ∫_{E0}^{ω} j_{L=1}(ν)/g² dν`.
pub fn continuum_cumulative_j_l1(omega: f64, mass: f64, e0: f64) -> Result<f64> {
    let x = check_above_edge(omega, e0)?;
    // substitute u = √((ν−E0)M): dν = 2u du / M
    let upper = (x * mass).sqrt();
    numeric::integrate(|u| PI / 28.0 * u * (0.5 * PI * u).tanh(), 0.0, upper, 1e-13)
}

fn weyl_coefficients(l: f64, h: f64) -> Result<(f64, f64)> {
    if !(l > 0.0 && l < 1.0) || !(h > 0.0) {
        return Err(Error::Domain(format!("need 0 < L < 1 and h > 0, got L = {l}, h = {h}")));
    }
    let a = l * l / (3.0 * h * h * (1.0 - l * l));
    let b = (l / h) / (2.0 * 3f64.sqrt() * (1.0 - l * l));
    Ok((a, b))
}

/// Weyl-law density `ρ_W(ω) = L²/(3h²(1−L²)) − (L/h)/(2√3(1−L²)√(ω−E0))`.
pub fn weyl_dos(omega: f64, l: f64, h: f64, e0: f64) -> Result<f64> {
    let (a, b) = weyl_coefficients(l, h)?;
    if !(omega > e0) {
        return Err(Error::Domain(format!("Weyl density diverges at and below the band edge {e0}, got omega = {omega}")));
    }
    Ok(a - b / (omega - e0).sqrt())
}

/// `∫_{E0}^{ω} ρ_W dν`.
pub fn weyl_cumulative(omega: f64, l: f64, h: f64, e0: f64) -> Result<f64> {
    let (a, b) = weyl_coefficients(l, h)?;
    let x = check_above_edge(omega, e0)?;
    Ok(a * x - 2.0 * b * x.sqrt())
}

/// Distance above the band edge where `ρ_W` changes sign, `3h²/(4L²)`.
pub fn weyl_zero_crossing(l: f64, h: f64) -> Result<f64> {
    let (a, b) = weyl_coefficients(l, h)?;
    Ok((b / a).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_matrix() {
        let m = Mat::from_fn(4, 4, |i, j| if i == j { [3.0, -1.0, 2.0, 0.5][i] } else { 0.0 });
        let s = Spectrum::from_symmetric(m.as_ref(), true).unwrap();
        assert_eq!(s.eigenvalues(), &[-1.0, 0.5, 2.0, 3.0]);
        assert!(s.orthonormality_error().unwrap() < 1e-14);
        let v = s.eigenvectors().unwrap();
        assert_eq!(v[(1, 0)], 1.0);
    }

    #[test]
    fn missing_vectors_is_contract_error() {
        let s = Spectrum::from_eigenvalues(vec![0.0, 1.0]).unwrap();
        assert_eq!(s.site_weights(0).unwrap_err().kind(), "contract");
        assert_eq!(local_spectral_function(&s, 0, 1.0, 0.1).unwrap_err().kind(), "contract");
    }

    #[test]
    fn cumulative_dos_counts() {
        let vals = vec![-2.0, -1.5, -1.5, -0.3, 0.0, 0.1, 0.7, 1.2, 1.9, 2.5];
        let s = Spectrum::from_eigenvalues(vals.clone()).unwrap();
        let p = cumulative_dos(&s, vals.len()).unwrap();
        for w in [-3.0, -2.0, -1.7, -1.5, 0.05, 1.0, 2.5, 9.0] {
            let count = vals.iter().filter(|&&e| e <= w).count();
            assert_abs_diff_eq!(p.evaluate(w), count as f64 / 10.0, epsilon = 1e-15);
        }
        assert!(p.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn single_site_spectral_weight() {
        let m = Mat::from_fn(1, 1, |_, _| 0.4);
        let s = Spectrum::from_symmetric(m.as_ref(), true).unwrap();
        let j = local_spectral_function(&s, 0, 0.2, 0.15).unwrap();
        assert_eq!(j.values.len(), 1);
        assert_abs_diff_eq!(j.values[0], 2.0 * PI * 0.04 / 0.15, epsilon = 1e-14);
    }

    #[test]
    fn continuum_formulas() {
        let p = ContinuumParams::heptagonal();
        assert_abs_diff_eq!(p.mass, 17.529002691, epsilon = 1e-8);
        assert_eq!(continuum_j_l1(p.e0, 1.0, p.mass, p.e0).unwrap(), 0.0);
        assert_abs_diff_eq!(continuum_j_l1(p.e0 + 50.0, 1.0, p.mass, p.e0).unwrap(), PI * p.mass / 56.0, epsilon = 1e-12);
        assert!(continuum_j_l1(p.e0 - 0.1, 1.0, p.mass, p.e0).is_err());
        assert!(weyl_dos(p.e0, 0.9, 0.276, p.e0).is_err());
    }

    #[test]
    fn levels_group_degeneracies() {
        let s = Spectrum::from_eigenvalues(vec![-1.0, 0.0, 1e-13, 2.0]).unwrap();
        let l = s.levels(1e-10);
        assert_eq!(l.len(), 3);
        assert_eq!((l[1].1, l[1].2), (1, 2));
    }
}
