//! Run configuration: one lattice, one model and exactly one task per file.

use std::path::{Path, PathBuf};

use hypercqed::boundstates::Branch;
use hypercqed::hamiltonian::QubitSpec;
use hypercqed::spinmodel::FlatBandKernel;
use hypercqed::tessellation::LatticeSpec;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub model: ModelConfig,
    pub task: Task,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Seeds randomized self-checks; results never depend on it otherwise.
    #[serde(default)]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Hopping amplitude; the photon operator is `−t A`.
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default)]
    pub qubits: Vec<QubitSpec>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { t: 1.0, qubits: Vec::new() }
    }
}

fn one() -> f64 {
    1.0
}

/// Evenly spaced samples `start..=stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points).map(|k| self.start + (self.stop - self.start) * k as f64 / (self.points - 1) as f64).collect()
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Config(format!("{what} needs finite bounds and at least one point")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Lattice,
    /// Continuum Green function with the cutoff calibrated on the configured lattice.
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    Delta,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scan {
    pub parameter: ScanParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Scan {
    pub fn range(&self) -> Range {
        Range { start: self.start, stop: self.stop, points: self.points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// All photon eigenvalues.
    Spectrum {},
    /// Histogram and cumulative density of states.
    Dos {
        #[serde(default = "default_bin")]
        bin: f64,
    },
    /// Local spectral function `j(ω)` and its cumulative `J(ω)`.
    Jspectral {
        #[serde(default)]
        site: usize,
        #[serde(default = "one")]
        g: f64,
        #[serde(default = "default_bin")]
        bin: f64,
    },
    /// Lattice Green function `G_ij(ω + iη)` over a frequency range.
    Greens {
        i: usize,
        j: usize,
        omega: Range,
        #[serde(default)]
        eta: f64,
    },
    /// Bound state of the single configured qubit.
    Boundstate {
        #[serde(default = "lower")]
        branch: Branch,
        #[serde(default = "lattice")]
        backend: BackendChoice,
    },
    /// Two-qubit bound states; the scan overrides Δ or g on both qubits.
    Boundstate2 {
        scan: Scan,
        #[serde(default = "lattice")]
        backend: BackendChoice,
    },
    /// Single-excitation dynamics with the first qubit initially excited.
    /// With `delta_scan` the single qubit is swept and decay rates are fitted.
    Dynamics {
        times: Range,
        #[serde(default)]
        window: Option<(f64, f64)>,
        #[serde(default)]
        delta_scan: Option<Range>,
        #[serde(default = "default_decay_bin")]
        bin: f64,
        #[serde(default)]
        record_photons: bool,
    },
    /// Green-function flip-flop couplings between qubits at `sites`.
    Spinmodel { delta: f64, g: f64, sites: Vec<usize> },
    /// Flat-band couplings on a line graph; `detuning` is `Δ − ω_flat`.
    Flatband {
        detuning: f64,
        g: f64,
        #[serde(default)]
        sites: Option<Vec<usize>>,
        #[serde(default = "localized")]
        kernel: FlatBandKernel,
    },
}

fn default_bin() -> f64 {
    0.05
}

fn default_decay_bin() -> f64 {
    0.3
}

fn lower() -> Branch {
    Branch::Lower
}

fn lattice() -> BackendChoice {
    BackendChoice::Lattice
}

fn localized() -> FlatBandKernel {
    FlatBandKernel::LocalizedStates
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Spectrum {} => "spectrum",
            Task::Dos { .. } => "dos",
            Task::Jspectral { .. } => "jspectral",
            Task::Greens { .. } => "greens",
            Task::Boundstate { .. } => "boundstate",
            Task::Boundstate2 { .. } => "boundstate2",
            Task::Dynamics { .. } => "dynamics",
            Task::Spinmodel { .. } => "spinmodel",
            Task::Flatband { .. } => "flatband",
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate_static()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations always serialize")
    }

    /// Checks that need no lattice; site ranges are checked once the lattice exists.
    pub fn validate_static(&self) -> Result<()> {
        self.lattice.validate()?;
        if !self.model.t.is_finite() || self.model.t == 0.0 {
            return Err(CliError::Config("model.t must be finite and nonzero".into()));
        }
        let qubits = self.model.qubits.len();
        let need = |n: usize| {
            if qubits == n {
                Ok(())
            } else {
                Err(CliError::Config(format!("task {} needs exactly {n} qubit(s) in model.qubits, got {qubits}", self.task.name())))
            }
        };
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{what} must be positive, got {x}")))
            }
        };
        match &self.task {
            Task::Spectrum {} => {}
            Task::Dos { bin } => positive(*bin, "bin")?,
            Task::Jspectral { bin, g, .. } => {
                positive(*bin, "bin")?;
                positive(*g, "g")?;
            }
            Task::Greens { omega, eta, .. } => {
                omega.validate("omega")?;
                if !(*eta >= 0.0) {
                    return Err(CliError::Config(format!("eta must be nonnegative, got {eta}")));
                }
            }
            Task::Boundstate { .. } => need(1)?,
            Task::Boundstate2 { scan, .. } => {
                need(2)?;
                scan.range().validate("scan")?;
            }
            Task::Dynamics { times, window, delta_scan, bin, .. } => {
                times.validate("times")?;
                positive(*bin, "bin")?;
                if let Some((a, b)) = window {
                    if !(a < b) {
                        return Err(CliError::Config(format!("fit window ({a}, {b}) is empty")));
                    }
                }
                match delta_scan {
                    Some(r) => {
                        r.validate("delta_scan")?;
                        need(1)?;
                    }
                    None if qubits == 0 => return Err(CliError::Config("task dynamics needs at least one qubit".into())),
                    None => {}
                }
            }
            Task::Spinmodel { g, sites, .. } => {
                positive(*g, "g")?;
                if sites.is_empty() {
                    return Err(CliError::Config("spinmodel needs at least one site".into()));
                }
            }
            Task::Flatband { g, detuning, .. } => {
                positive(*g, "g")?;
                if !detuning.is_finite() || *detuning == 0.0 {
                    return Err(CliError::Config("flatband detuning must be finite and nonzero".into()));
                }
            }
        }
        Ok(())
    }

    /// Every site the configuration refers to must exist on a lattice with `n` sites.
    pub fn validate_sites(&self, n: usize) -> Result<()> {
        let mut sites: Vec<usize> = self.model.qubits.iter().map(|q| q.site).collect();
        match &self.task {
            Task::Jspectral { site, .. } => sites.push(*site),
            Task::Greens { i, j, .. } => sites.extend([*i, *j]),
            Task::Spinmodel { sites: s, .. } => sites.extend(s),
            Task::Flatband { sites: Some(s), .. } => sites.extend(s),
            _ => {}
        }
        match sites.into_iter().find(|&s| s >= n) {
            Some(s) => Err(CliError::Config(format!("site {s} is out of range for a lattice with {n} sites"))),
            None => Ok(()),
        }
    }
}
