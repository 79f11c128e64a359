//! Photon-mediated spin models obtained by eliminating the photons.
//!
//! Away from the band, qubits at sites `i, j` exchange excitations with
//! `J_ij = g² G_ij(Δ)` and acquire the shift `g² G_ii(Δ)`. On line graphs a
//! qubit tuned close to the flat band couples only to it, giving
//! `J_ij = g²/(Δ − ω_flat) Σ_k φ_k(i) φ_k(j)`. The sum runs either over the
//! compact localized states, which makes the range strictly finite, or over
//! an orthonormal eigenbasis, which gives the spectral projector.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DiskPoint;
use crate::greens::LatticeGreen;
use crate::hamiltonian::{build_photon_operator, SingleExcitationOperator};
use crate::spectral::{eigendecompose, MAX_DENSE_DIM};
use crate::tessellation::{HyperbolicLattice, LatticeKind};

/// Amplitudes below this are treated as outside a state's support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

/// Largest hop radius searched for compact flat-band states.
pub const MAX_LOCALIZATION_RADIUS: usize = 6;

/// Which elimination produced a spin model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    GreenFunction,
    FlatBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinModelParams {
    pub delta: f64,
    pub g: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_flat: Option<f64>,
}

/// Flip-flop couplings `Σ_ij J_ij σ_i⁻ σ_j⁺` plus on-site shifts, in units of the hopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinCouplingMatrix {
    pub generator: Generator,
    pub params: SpinModelParams,
    pub qubit_sites: Vec<usize>,
    pub positions: Vec<DiskPoint>,
    /// Dense symmetric couplings with zero diagonal, row-major.
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    pub onsite_shift: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SpinCouplingMatrix {
    pub fn len(&self) -> usize {
        self.qubit_sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubit_sites.is_empty()
    }

    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.j[a][b]
    }

    /// Largest `|J_ab − J_ba|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| (self.j[a][b] - self.j[b][a]).abs()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Guard on the separation between the qubit frequency and the nearest photon level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticGuard {
    /// Required separation in units of `g`.
    pub ratio: f64,
    /// Fail instead of warning when the separation is too small.
    pub strict: bool,
}

impl Default for AdiabaticGuard {
    fn default() -> Self {
        AdiabaticGuard { ratio: 5.0, strict: false }
    }
}

impl AdiabaticGuard {
    fn check(&self, separation: f64, g: f64, what: &str, warnings: &mut Vec<String>) -> Result<()> {
        if separation >= self.ratio * g {
            return Ok(());
        }
        let msg = format!("{what} separation {separation:.6} is below {} g = {:.6}; elimination of the photons is not adiabatic", self.ratio, self.ratio * g);
        if self.strict {
            return Err(Error::Domain(msg));
        }
        warnings.push(msg);
        Ok(())
    }
}

fn check_qubits(qubits: &[usize], n: usize, g: f64, delta: f64) -> Result<()> {
    if !(g.is_finite() && g >= 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("need finite delta and g >= 0, got delta = {delta}, g = {g}")));
    }
    for (k, &s) in qubits.iter().enumerate() {
        if s >= n {
            return Err(Error::Domain(format!("qubit site {s} out of range for {n} sites")));
        }
        if qubits[..k].contains(&s) {
            return Err(Error::Domain(format!("two qubits on site {s}")));
        }
    }
    Ok(())
}

/// `J_ij = g² G_ij(Δ)` and shifts `g² G_ii(Δ)` from the photon resolvent of `lat`.
///
/// `green` must wrap the photon-only operator of `lat`. `Δ` has to lie outside the band.
pub fn effective_flip_flop(
    lat: &HyperbolicLattice,
    green: &LatticeGreen,
    qubits: &[usize],
    delta: f64,
    g: f64,
    guard: AdiabaticGuard,
) -> Result<SpinCouplingMatrix> {
    let op = green.operator();
    if op.n_photons() != lat.len() || !op.qubits().is_empty() {
        return Err(Error::Contract("the resolvent must belong to the photon operator of this lattice".into()));
    }
    check_qubits(qubits, lat.len(), g, delta)?;
    let (lo, hi) = green.band_edges()?;
    if delta > lo && delta < hi {
        return Err(Error::Domain(format!("delta = {delta} lies inside the band [{lo}, {hi}]")));
    }
    let mut warnings = Vec::new();
    guard.check((delta - lo).abs().min((delta - hi).abs()), g, "band-edge", &mut warnings)?;
    let columns: Vec<Vec<f64>> = qubits.iter().map(|&s| green.column_real(s, delta)).collect::<Result<_>>()?;
    let g2 = g * g;
    let n = qubits.len();
    let j = (0..n).map(|a| (0..n).map(|b| if a == b { 0.0 } else { 0.5 * g2 * (columns[b][qubits[a]] + columns[a][qubits[b]]) }).collect()).collect();
    let onsite_shift = (0..n).map(|a| g2 * columns[a][qubits[a]]).collect();
    Ok(SpinCouplingMatrix {
        generator: Generator::GreenFunction,
        params: SpinModelParams { delta, g, omega_flat: None },
        qubit_sites: qubits.to_vec(),
        positions: qubits.iter().map(|&s| lat.site(s)).collect(),
        j,
        onsite_shift,
        warnings,
    })
}

/// A compactly supported flat-band eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedState {
    /// Support sites in increasing order.
    pub sites: Vec<usize>,
    pub amplitudes: Vec<f64>,
    /// The support contains a site with fewer neighbours than the bulk.
    pub touches_boundary: bool,
}

impl LocalizedState {
    pub fn amplitude(&self, site: usize) -> f64 {
        self.sites.binary_search(&site).map_or(0.0, |k| self.amplitudes[k])
    }

    pub fn support_size(&self) -> usize {
        self.sites.len()
    }
}

/// Vectors spanning the flat band that enter the coupling kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatBandKernel {
    /// Normalized compact states: strictly finite range.
    LocalizedStates,
    /// Orthonormal eigenvectors: the spectral projector, which has exponential tails on finite lattices.
    Projector,
}

/// The macroscopically degenerate level of a line-graph lattice.
#[derive(Debug, Clone)]
pub struct FlatBandProjector {
    omega_flat: f64,
    gap: f64,
    basis: Vec<Vec<f64>>,
    localized: Vec<LocalizedState>,
}

impl FlatBandProjector {
    pub fn omega_flat(&self) -> f64 {
        self.omega_flat
    }

    pub fn degeneracy(&self) -> usize {
        self.basis.len()
    }

    /// Distance from the flat level to the nearest other level.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Orthonormal flat-band eigenvectors.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn localized_states(&self) -> &[LocalizedState] {
        &self.localized
    }

    /// Compact states span the whole flat band.
    pub fn is_localized_complete(&self) -> bool {
        self.localized.len() == self.basis.len()
    }

    /// Support of each orthonormal basis vector.
    pub fn support_map(&self) -> Vec<Vec<usize>> {
        self.basis.iter().map(|v| (0..v.len()).filter(|&i| v[i].abs() > SUPPORT_THRESHOLD).collect()).collect()
    }

    /// Support of each compact state.
    pub fn localized_support_map(&self) -> Vec<Vec<usize>> {
        self.localized.iter().map(|s| s.sites.clone()).collect()
    }

    /// Indices of compact states touching the lattice boundary.
    pub fn boundary_states(&self) -> Vec<usize> {
        (0..self.localized.len()).filter(|&k| self.localized[k].touches_boundary).collect()
    }

    /// Some compact state covers both sites.
    pub fn shares_support(&self, i: usize, j: usize) -> bool {
        self.localized.iter().any(|s| s.sites.binary_search(&i).is_ok() && s.sites.binary_search(&j).is_ok())
    }

    /// `Σ_k φ_k(i) φ_k(j)` for the chosen vector set.
    pub fn kernel(&self, kind: FlatBandKernel, i: usize, j: usize) -> Result<f64> {
        match kind {
            FlatBandKernel::Projector => Ok(self.basis.iter().map(|v| v[i] * v[j]).sum()),
            FlatBandKernel::LocalizedStates => {
                if !self.is_localized_complete() {
                    return Err(Error::Contract(format!(
                        "only {} of {} flat-band states were found with compact support",
                        self.localized.len(),
                        self.basis.len()
                    )));
                }
                Ok(self.localized.iter().map(|s| s.amplitude(i) * s.amplitude(j)).sum())
            }
        }
    }

    /// Largest `‖(H − ω_flat) φ‖` over both vector sets.
    pub fn eigen_residual(&self, op: &SingleExcitationOperator) -> f64 {
        let n = op.dim();
        let mut out = vec![0.0; n];
        let dense: Vec<Vec<f64>> = self
            .localized
            .iter()
            .map(|s| {
                let mut v = vec![0.0; n];
                s.sites.iter().zip(&s.amplitudes).for_each(|(&i, &a)| v[i] = a);
                v
            })
            .collect();
        self.basis
            .iter()
            .chain(&dense)
            .map(|v| {
                op.apply(v, &mut out);
                out.iter().zip(v).map(|(o, x)| (o - self.omega_flat * x).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Apply an orthogonal `d × d` rotation to the chosen vector set.
    pub fn rotated(&self, kind: FlatBandKernel, rotation: &[Vec<f64>]) -> Result<FlatBandProjector> {
        let vecs: Vec<Vec<f64>> = match kind {
            FlatBandKernel::Projector => self.basis.clone(),
            FlatBandKernel::LocalizedStates => {
                let n = self.basis.first().map_or(0, Vec::len);
                self.localized
                    .iter()
                    .map(|s| {
                        let mut v = vec![0.0; n];
                        s.sites.iter().zip(&s.amplitudes).for_each(|(&i, &a)| v[i] = a);
                        v
                    })
                    .collect()
            }
        };
        let d = vecs.len();
        if rotation.len() != d || rotation.iter().any(|r| r.len() != d) {
            return Err(Error::Domain(format!("rotation must be {d} x {d}")));
        }
        for a in 0..d {
            for b in 0..d {
                let dot: f64 = (0..d).map(|k| rotation[k][a] * rotation[k][b]).sum();
                if (dot - if a == b { 1.0 } else { 0.0 }).abs() > 1e-10 {
                    return Err(Error::Domain("rotation is not orthogonal".into()));
                }
            }
        }
        let mixed: Vec<Vec<f64>> =
            (0..d).map(|b| (0..vecs.first().map_or(0, Vec::len)).map(|i| (0..d).map(|k| vecs[k][i] * rotation[k][b]).sum()).collect()).collect();
        let mut out = self.clone();
        match kind {
            FlatBandKernel::Projector => out.basis = mixed,
            FlatBandKernel::LocalizedStates => {
                // rotated states are no longer compact; store them with full support
                out.localized = mixed.into_iter().map(|v| LocalizedState { sites: (0..v.len()).collect(), amplitudes: v, touches_boundary: false }).collect();
            }
        }
        Ok(out)
    }
}

/// Detect the flat band of a line-graph lattice with hopping `t`.
///
/// Levels are clustered within `tol` (default `1e−8 ‖H‖`); the largest cluster
/// must contain more than 3 states.
pub fn find_flat_band(lat: &HyperbolicLattice, t: f64, tol: Option<f64>) -> Result<FlatBandProjector> {
    if lat.spec().kind != LatticeKind::LineGraph {
        return Err(Error::InvalidSpec("flat bands are searched for on line-graph lattices only".into()));
    }
    if lat.len() > MAX_DENSE_DIM {
        return Err(Error::Resource(format!("{} sites exceed the dense eigensolver limit {MAX_DENSE_DIM}", lat.len())));
    }
    let op = build_photon_operator(lat, t)?;
    let spec = eigendecompose(&op, true)?;
    let norm = spec.e0().abs().max(spec.max().abs());
    let tol = tol.unwrap_or(1e-8 * norm);
    let (omega_flat, start, count) =
        spec.levels(tol).into_iter().max_by(|a, b| a.2.cmp(&b.2).then(b.1.cmp(&a.1))).ok_or_else(|| Error::Numeric("empty spectrum".into()))?;
    if count <= 3 {
        return Err(Error::Numeric(format!("no degenerate level with more than 3 states within tol = {tol:e}")));
    }
    let energies = spec.eigenvalues();
    let gap = energies[..start].iter().chain(&energies[start + count..]).map(|e| (e - omega_flat).abs()).fold(f64::INFINITY, f64::min);
    let v = spec.eigenvectors()?;
    let basis: Vec<Vec<f64>> = (start..start + count).map(|k| (0..lat.len()).map(|i| v[(i, k)]).collect()).collect();
    let localized = compact_states(lat, &op, omega_flat, count)?;
    Ok(FlatBandProjector { omega_flat, gap, basis, localized })
}

/// Compact eigenvectors from local null spaces of `H − ω` over growing hop balls.
///
/// For each centre and radius `r`, vectors supported on the ball `B` that are
/// annihilated on `B ∪ ∂B` are exact eigenvectors. Each local null space is
/// row-reduced to sparse combinations; the smallest supports are kept greedily
/// while they enlarge the span.
fn compact_states(lat: &HyperbolicLattice, op: &SingleExcitationOperator, omega: f64, target: usize) -> Result<Vec<LocalizedState>> {
    let n = lat.len();
    let bulk_degree = lat.max_degree();
    let dist: Vec<Vec<Option<usize>>> = (0..n).map(|c| lat.hop_distances(c)).collect();
    let mut accepted: Vec<LocalizedState> = Vec::new();
    let mut span: Vec<Vec<f64>> = Vec::new();
    for radius in 1..=MAX_LOCALIZATION_RADIUS {
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for d in &dist {
            let ball: Vec<usize> = (0..n).filter(|&i| d[i].is_some_and(|x| x <= radius)).collect();
            let rows: Vec<usize> = (0..n).filter(|&i| d[i].is_some_and(|x| x <= radius + 1)).collect();
            let a = Mat::<f64>::from_fn(rows.len(), ball.len(), |r, c| op.get(rows[r], ball[c]) - if rows[r] == ball[c] { omega } else { 0.0 });
            let svd = a.svd().map_err(|e| Error::Numeric(format!("local SVD failed: {e:?}")))?;
            let s = svd.S().column_vector();
            let smax = (0..s.nrows()).map(|k| s[k]).fold(0.0, f64::max).max(1.0);
            let vmat = svd.V();
            let null: Vec<Vec<f64>> =
                (0..ball.len()).filter(|&k| k >= s.nrows() || s[k] <= 1e-10 * smax).map(|k| (0..ball.len()).map(|r| vmat[(r, k)]).collect()).collect();
            for row in row_reduce(null) {
                let mut v = vec![0.0; n];
                ball.iter().zip(&row).for_each(|(&i, &x)| v[i] = x);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= norm);
                candidates.push(v);
            }
        }
        candidates.sort_by_key(|v| v.iter().filter(|x| x.abs() > SUPPORT_THRESHOLD).count());
        for v in candidates {
            if accepted.len() == target {
                break;
            }
            let mut r = v.clone();
            for b in &span {
                let c: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if rn < 1e-6 {
                continue;
            }
            span.push(r.into_iter().map(|x| x / rn).collect());
            let sites: Vec<usize> = (0..n).filter(|&i| v[i].abs() > SUPPORT_THRESHOLD).collect();
            let touches_boundary = sites.iter().any(|&i| lat.degree(i) < bulk_degree);
            let amplitudes = sites.iter().map(|&i| v[i]).collect();
            accepted.push(LocalizedState { sites, amplitudes, touches_boundary });
        }
        if accepted.len() == target {
            break;
        }
    }
    Ok(accepted)
}

/// Reduced row echelon form of the rows of `rows` with tiny entries cleared.
fn row_reduce(mut rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let mut pivot = 0;
    for c in 0..width {
        if pivot == k {
            break;
        }
        let best = (pivot..k).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())).unwrap_or(pivot);
        if rows[best][c].abs() < 1e-9 {
            continue;
        }
        rows.swap(pivot, best);
        let p = rows[pivot][c];
        rows[pivot].iter_mut().for_each(|x| *x /= p);
        let prow = rows[pivot].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != pivot {
                let f = row[c];
                row.iter_mut().zip(&prow).for_each(|(x, y)| *x -= f * y);
            }
        }
        pivot += 1;
    }
    rows.truncate(pivot);
    rows.iter_mut().for_each(|r| {
        r.iter_mut().for_each(|x| {
            if x.abs() < SUPPORT_THRESHOLD {
                *x = 0.0
            }
        })
    });
    rows
}

/// `J_ij = g²/(Δ − ω_flat) Σ_k φ_k(i) φ_k(j)` restricted to the flat band.
pub fn flat_band_spin_model(
    projector: &FlatBandProjector,
    lat: &HyperbolicLattice,
    qubits: &[usize],
    delta: f64,
    g: f64,
    kernel: FlatBandKernel,
    guard: AdiabaticGuard,
) -> Result<SpinCouplingMatrix> {
    check_qubits(qubits, lat.len(), g, delta)?;
    if projector.basis.first().map_or(0, Vec::len) != lat.len() {
        return Err(Error::Contract("the flat band belongs to a different lattice".into()));
    }
    let detuning = delta - projector.omega_flat;
    if detuning == 0.0 {
        return Err(Error::Domain("delta coincides with the flat band".into()));
    }
    let mut warnings = Vec::new();
    guard.check(detuning.abs(), g, "flat-band", &mut warnings)?;
    if detuning.abs() >= projector.gap {
        warnings.push(format!("|delta - omega_flat| = {:.6} is not below the gap {:.6}; mixing with other bands is neglected", detuning.abs(), projector.gap));
    }
    let scale = g * g / detuning;
    let n = qubits.len();
    let mut j = vec![vec![0.0; n]; n];
    let mut onsite_shift = vec![0.0; n];
    for a in 0..n {
        onsite_shift[a] = scale * projector.kernel(kernel, qubits[a], qubits[a])?;
        for b in a + 1..n {
            let v = scale * projector.kernel(kernel, qubits[a], qubits[b])?;
            j[a][b] = v;
            j[b][a] = v;
        }
    }
    Ok(SpinCouplingMatrix {
        generator: Generator::FlatBand,
        params: SpinModelParams { delta, g, omega_flat: Some(projector.omega_flat) },
        qubit_sites: qubits.to_vec(),
        positions: qubits.iter().map(|&s| lat.site(s)).collect(),
        j,
        onsite_shift,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::{generate_lattice, line_graph, LatticeSpec};

    #[test]
    fn row_reduce_sparsifies() {
        let rows = vec![vec![1.0, 1.0, 0.0], vec![1.0, -1.0, 2.0]];
        let r = row_reduce(rows);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0][1], 0.0);
        assert_eq!(r[1][0], 0.0);
    }

    #[test]
    fn vertex_graph_is_rejected() {
        let lat = generate_lattice(LatticeSpec::heptagonal(1)).unwrap();
        assert_eq!(find_flat_band(&lat, -1.0, None).unwrap_err().kind(), "invalid_spec");
    }

    #[test]
    fn small_line_graph_flat_band() {
        let lat = line_graph(&generate_lattice(LatticeSpec::heptagonal(2)).unwrap()).unwrap();
        let fb = find_flat_band(&lat, -1.0, None).unwrap();
        let op = build_photon_operator(&lat, -1.0).unwrap();
        assert!((fb.omega_flat() + 2.0).abs() < 1e-8);
        assert!(fb.eigen_residual(&op) < 1e-9);
        assert!(fb.is_localized_complete());
    }
}
