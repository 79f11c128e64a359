//! Single-excitation qubit–photon Hamiltonian.
//!
//! The basis is `{a_i†|↓…↓,0⟩}` for the photon sites in lattice order,
//! followed by `{σ_k⁺|↓…↓,0⟩}` for the qubits in input order. Photons hop
//! with amplitude `-t` along lattice edges; qubit `k` has energy `Δ_k` and
//! couples with strength `g_k` to the photon mode on its site.

use std::fmt::Write as _;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tessellation::{fmt_f64, HyperbolicLattice};

/// A two-level emitter attached to one lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    pub site: usize,
    pub delta: f64,
    pub g: f64,
}

impl QubitSpec {
    pub fn new(site: usize, delta: f64, g: f64) -> Self {
        QubitSpec { site, delta, g }
    }
}

/// Real symmetric operator on the single-excitation sector, stored row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationOperator {
    n_photons: usize,
    hopping: f64,
    qubits: Vec<QubitSpec>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SingleExcitationOperator {
    /// Operator for an arbitrary graph with `n` photon sites.
    pub fn from_graph(n: usize, edges: &[(usize, usize)], t: f64, qubits: &[QubitSpec]) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidSpec(format!("hopping must be finite, got {t}")));
        }
        let mut qubit_of_site = vec![None; n];
        for (k, q) in qubits.iter().enumerate() {
            if q.site >= n {
                return Err(Error::InvalidSpec(format!("qubit {k} sits on site {} but the lattice has {n} sites", q.site)));
            }
            if !(q.g >= 0.0 && q.g.is_finite()) {
                return Err(Error::InvalidSpec(format!("qubit {k} has coupling g = {}; need finite g >= 0", q.g)));
            }
            if !q.delta.is_finite() {
                return Err(Error::InvalidSpec(format!("qubit {k} has non-finite detuning")));
            }
            if let Some(other) = qubit_of_site[q.site].replace(k) {
                return Err(Error::InvalidSpec(format!("qubits {other} and {k} share site {}", q.site)));
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidSpec(format!("bad edge ({i}, {j}) for {n} sites")));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        let dim = n + qubits.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(2 * edges.len() + 3 * qubits.len());
        let mut vals = Vec::with_capacity(cols.capacity());
        row_ptr.push(0);
        for (i, nb) in neighbors.iter_mut().enumerate() {
            nb.sort_unstable();
            nb.dedup();
            for &j in nb.iter() {
                cols.push(j);
                vals.push(-t);
            }
            if let Some(k) = qubit_of_site[i] {
                cols.push(n + k);
                vals.push(qubits[k].g);
            }
            row_ptr.push(cols.len());
        }
        for (k, q) in qubits.iter().enumerate() {
            cols.extend([q.site, n + k]);
            vals.extend([q.g, q.delta]);
            row_ptr.push(cols.len());
        }
        Ok(SingleExcitationOperator { n_photons: n, hopping: t, qubits: qubits.to_vec(), row_ptr, cols, vals })
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn qubits(&self) -> &[QubitSpec] {
        &self.qubits
    }

    /// Basis index of qubit `k`.
    pub fn qubit_index(&self, k: usize) -> usize {
        self.n_photons + k
    }

    /// Nonzero entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Matrix element `H[i, j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.dim(), self.dim());
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.dim()).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Largest `|H[i,j] - H[j,i]|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.entries().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    /// Coordinate-list text, one `row col value` line per stored entry.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        for (i, j, v) in self.entries() {
            let _ = writeln!(out, "{i} {j} {}", fmt_f64(v));
        }
        out
    }
}

/// Photon hopping operator `-t Σ_<ij> a_i† a_j` on the lattice.
pub fn build_photon_operator(lat: &HyperbolicLattice, t: f64) -> Result<SingleExcitationOperator> {
    SingleExcitationOperator::from_graph(lat.len(), lat.edges(), t, &[])
}

/// Photon hopping plus qubits in the rotating frame.
pub fn build_qubit_photon_operator(lat: &HyperbolicLattice, t: f64, qubits: &[QubitSpec]) -> Result<SingleExcitationOperator> {
    SingleExcitationOperator::from_graph(lat.len(), lat.edges(), t, qubits)
}
