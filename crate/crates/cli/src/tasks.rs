//! Executes one configured task and collects its output files in memory.

use std::fmt::Write as _;

use hypercqed::boundstates::{density_csv, solve_single_bound_state, solve_two_qubit_bound_states, two_qubit_scan_csv, Backend};
use hypercqed::dynamics::{decay_scan_csv, evolve, fit_decay_rate, DecayScanRow, SingleQubitDecay, DEFAULT_FIT_WINDOW};
use hypercqed::geometry::{hyperbolic_distance, KAPPA};
use hypercqed::greens::{calibrate_cutoff, correlation_length, fit_decay, ContinuumGreenParams, LatticeGreen};
use hypercqed::hamiltonian::{build_photon_operator, build_qubit_photon_operator, QubitSpec};
use hypercqed::spectral::{
    continuum_cumulative_j_l1, cumulative_dos, cumulative_spectral, dos, eigendecompose, local_spectral_function, ContinuumParams, Spectrum,
};
use hypercqed::spinmodel::{effective_flip_flop, find_flat_band, flat_band_spin_model, AdiabaticGuard, FlatBandKernel};
use hypercqed::tessellation::{generate_lattice, HyperbolicLattice, LatticeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{BackendChoice, RunConfig, ScanParameter, Task};
use crate::error::{CliError, Result};

/// First line of every CSV file.
pub const UNITS: &str = "# units: energies and rates in t, times in 1/t, distances in hyperbolic units with kappa = 1/2\n";

pub struct TaskOutput {
    /// File name and contents, in write order.
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
    /// Headline numbers recorded in the manifest.
    pub summary: Value,
}

impl TaskOutput {
    fn new() -> Self {
        TaskOutput { files: Vec::new(), warnings: Vec::new(), summary: json!({}) }
    }

    fn csv(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), format!("{UNITS}{body}")));
    }

    fn json(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    /// Contents of a file produced by this task.
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_str())
    }
}

pub fn run_task(config: &RunConfig, strict: bool) -> Result<TaskOutput> {
    let lat = generate_lattice(config.lattice)?;
    config.validate_sites(lat.len())?;
    let t = config.model.t;
    let guard = AdiabaticGuard { strict, ..AdiabaticGuard::default() };
    let mut out = TaskOutput::new();
    match &config.task {
        Task::Spectrum {} => {
            let spec = photon_spectrum(&lat, t, false)?;
            let mut csv = String::from("index,energy\n");
            for (k, e) in spec.eigenvalues().iter().enumerate() {
                let _ = writeln!(csv, "{k},{e}");
            }
            out.csv("eigenvalues.csv", csv);
            out.summary = json!({ "n": spec.len(), "e_min": spec.e0(), "e_max": spec.max() });
        }
        Task::Dos { bin } => {
            let spec = photon_spectrum(&lat, t, false)?;
            out.csv("dos.csv", dos(&spec, *bin)?.to_csv());
            out.csv("cumulative_dos.csv", cumulative_dos(&spec, spec.len())?.to_csv());
            out.summary = json!({ "n": spec.len(), "e_min": spec.e0(), "e_max": spec.max() });
        }
        Task::Jspectral { site, g, bin } => {
            let spec = photon_spectrum(&lat, t, true)?;
            out.csv("jspectral.csv", local_spectral_function(&spec, *site, *g, *bin)?.to_csv());
            out.csv("cumulative_j.csv", cumulative_spectral(&spec, *site, *bin)?.to_csv());
            let rmse = if config.lattice.kind == LatticeKind::VertexGraph { cumulative_rmse(&lat, &spec, *site)? } else { None };
            out.summary = json!({ "e_min": spec.e0(), "rmse_vs_continuum": rmse });
        }
        Task::Greens { i, j, omega, eta } => {
            let op = build_photon_operator(&lat, t)?;
            let green = LatticeGreen::new(&op);
            let rows = omega.values().into_iter().map(|w| Ok((w, green.evaluate(*i, *j, w, *eta)?))).collect::<Result<Vec<_>>>()?;
            out.csv("greens.csv", hypercqed::greens::green_scan_csv(&rows));
            out.summary = json!({ "points": rows.len() });
        }
        Task::Boundstate { branch, backend } => {
            let op = build_photon_operator(&lat, t)?;
            let green = LatticeGreen::new(&op);
            let backend = make_backend(*backend, &lat, &green, t)?;
            let qubit = config.model.qubits[0];
            let state = solve_single_bound_state(&backend, &qubit, *branch)?;
            out.json("boundstate.json", serde_json::to_string_pretty(&state)?);
            out.csv("density.csv", density_csv(&lat, &state)?);
            let (fitted, predicted) = envelope_xi(&lat, qubit.site, &state.photon_density(), state.energy)?;
            out.summary = json!({
                "energy": state.energy,
                "residual": state.residual,
                "photon_weight": state.photon_weight(),
                "envelope_xi": fitted,
                "predicted_xi": predicted,
            });
        }
        Task::Boundstate2 { scan, backend } => {
            let op = build_photon_operator(&lat, t)?;
            let green = LatticeGreen::new(&op);
            let backend = make_backend(*backend, &lat, &green, t)?;
            let mut rows = Vec::new();
            let mut summary = Vec::new();
            for p in scan.range().values() {
                let set = |q: QubitSpec| match scan.parameter {
                    ScanParameter::Delta => QubitSpec { delta: p, ..q },
                    ScanParameter::G => QubitSpec { g: p, ..q },
                };
                let (q1, q2) = (set(config.model.qubits[0]), set(config.model.qubits[1]));
                match solve_two_qubit_bound_states(&backend, &q1, &q2) {
                    Ok(pair) => {
                        summary.push(json!({ "param": p, "lower": pair.lower.energy, "upper": pair.upper.as_ref().map(|u| u.energy) }));
                        rows.push((p, pair));
                    }
                    Err(hypercqed::Error::Bracketing(msg)) => {
                        out.warnings.push(format!("no bound state at {p}: {msg}"));
                        summary.push(json!({ "param": p, "lower": null, "upper": null }));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            out.csv("two_qubit_scan.csv", two_qubit_scan_csv(&rows));
            out.summary = json!({ "rows": summary });
        }
        Task::Dynamics { times, window, delta_scan, bin, record_photons } => {
            let window = window.unwrap_or(DEFAULT_FIT_WINDOW);
            let times = times.values();
            match delta_scan {
                Some(scan) => {
                    let spec = photon_spectrum(&lat, t, true)?;
                    let q = config.model.qubits[0];
                    let j = local_spectral_function(&spec, q.site, q.g, *bin)?;
                    let rho = dos(&spec, *bin)?;
                    let n = spec.len() as f64;
                    let mut rows = Vec::new();
                    for delta in scan.values() {
                        let decay = SingleQubitDecay::new(&spec, &QubitSpec { delta, ..q })?;
                        let fit = fit_decay_rate(&decay.evolve(&times)?, 0, window)?;
                        if fit.quality_warning {
                            out.warnings.push(format!("decay fit at delta = {delta} has stderr {} for gamma {}", fit.stderr, fit.gamma));
                        }
                        rows.push(DecayScanRow {
                            delta,
                            gamma: fit.gamma,
                            stderr: fit.stderr,
                            j_binned: j.evaluate(delta),
                            rho_binned: rho.evaluate(delta) / n,
                        });
                    }
                    out.csv("decay_scan.csv", decay_scan_csv(&rows));
                    let gamma: Vec<f64> = rows.iter().map(|r| r.gamma).collect();
                    let js: Vec<f64> = rows.iter().map(|r| r.j_binned).collect();
                    let rhos: Vec<f64> = rows.iter().map(|r| r.rho_binned).collect();
                    out.summary = json!({ "rows": rows, "pearson_gamma_j": pearson(&gamma, &js), "pearson_gamma_rho": pearson(&gamma, &rhos) });
                }
                None => {
                    let op = build_qubit_photon_operator(&lat, t, &config.model.qubits)?;
                    let res = evolve(&op, op.qubit_index(0), &times, *record_photons)?;
                    out.csv("evolution.csv", res.to_csv());
                    let drift = res.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
                    let fit = fit_decay_rate(&res, 0, window).ok();
                    if fit.is_some_and(|f| f.quality_warning) {
                        out.warnings.push("decay fit of qubit 0 is poorly constrained".into());
                    }
                    out.summary = json!({ "norm_drift": drift, "decay_fit": fit });
                }
            }
        }
        Task::Spinmodel { delta, g, sites } => {
            let op = build_photon_operator(&lat, t)?;
            let green = LatticeGreen::new(&op);
            let model = effective_flip_flop(&lat, &green, sites, *delta, *g, guard)?;
            out.warnings.extend(model.warnings.iter().cloned());
            out.json("spinmodel.json", model.to_json()?);
            out.csv("couplings.csv", couplings_csv(&model, *g));
            out.summary = json!({ "qubits": model.len() });
        }
        Task::Flatband { detuning, g, sites, kernel } => {
            if config.lattice.kind != LatticeKind::LineGraph {
                return Err(CliError::Config("flatband needs lattice.kind = \"line_graph\"".into()));
            }
            let fb = find_flat_band(&lat, t, None)?;
            let sites: Vec<usize> = sites.clone().unwrap_or_else(|| (0..lat.len()).collect());
            let delta = fb.omega_flat() + detuning;
            let model = flat_band_spin_model(&fb, &lat, &sites, delta, *g, *kernel, guard)?;
            out.warnings.extend(model.warnings.iter().cloned());
            out.json("flatband.json", model.to_json()?);
            out.csv("couplings.csv", couplings_csv(&model, *g));
            let mut states = String::from("state,site,amplitude,touches_boundary\n");
            for (k, s) in fb.localized_states().iter().enumerate() {
                for (&site, a) in s.sites.iter().zip(&s.amplitudes) {
                    let _ = writeln!(states, "{k},{site},{a},{}", s.touches_boundary);
                }
            }
            out.csv("localized_states.csv", states);

            let tiny = 1e-10 * g * g;
            let (mut beyond, mut positive, mut negative) = (0.0f64, 0, 0);
            for a in 0..sites.len() {
                for b in a + 1..sites.len() {
                    let v = model.j[a][b];
                    if !fb.shares_support(sites[a], sites[b]) {
                        beyond = beyond.max(v.abs());
                    }
                    positive += usize::from(v > tiny);
                    negative += usize::from(v < -tiny);
                }
            }
            // self-check: the couplings must not depend on the choice of vectors spanning the band
            let rotation = random_rotation(fb.degeneracy(), config.seed);
            let turned = flat_band_spin_model(&fb.rotated(*kernel, &rotation)?, &lat, &sites, delta, *g, *kernel, guard)?;
            let rotation_change = model.j.iter().flatten().zip(turned.j.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            out.summary = json!({
                "n": lat.len(),
                "omega_flat": fb.omega_flat(),
                "degeneracy": fb.degeneracy(),
                "gap": fb.gap(),
                "localized_complete": fb.is_localized_complete(),
                "kernel": kernel,
                "max_coupling_beyond_support": if *kernel == FlatBandKernel::LocalizedStates { Some(beyond) } else { None },
                "positive_couplings": positive,
                "negative_couplings": negative,
                "rotation_change": rotation_change,
            });
        }
    }
    if strict {
        if let Some(w) = out.warnings.first() {
            return Err(CliError::Strict(w.clone()));
        }
    }
    Ok(out)
}

fn photon_spectrum(lat: &HyperbolicLattice, t: f64, vectors: bool) -> Result<Spectrum> {
    Ok(eigendecompose(&build_photon_operator(lat, t)?, vectors)?)
}

fn make_backend<'a>(choice: BackendChoice, lat: &'a HyperbolicLattice, green: &'a LatticeGreen<'a>, t: f64) -> Result<Backend<'a>> {
    Ok(match choice {
        BackendChoice::Lattice => Backend::Lattice(green),
        BackendChoice::Continuum => {
            let params = ContinuumGreenParams::new(ContinuumParams::for_lattice(lat)?, calibrate_cutoff(lat, t)?.lambda);
            Backend::Continuum { params, lattice: lat }
        }
    })
}

/// RMSE of the exact cumulative `J(ω)` against `J_{L=1}` on 400 points of `[E0, −2]`.
fn cumulative_rmse(lat: &HyperbolicLattice, spec: &Spectrum, site: usize) -> Result<Option<f64>> {
    let e0 = spec.e0();
    if e0 >= -2.0 {
        return Ok(None);
    }
    let mass = ContinuumParams::for_lattice(lat)?.mass;
    let n = 400;
    let mut sq = 0.0;
    for k in 0..n {
        let w = e0 + (-2.0 - e0) * k as f64 / (n - 1) as f64;
        sq += (std::f64::consts::TAU * spec.cumulative_weight(site, w)? - continuum_cumulative_j_l1(w, mass, e0)?).powi(2);
    }
    Ok(Some((sq / n as f64).sqrt()))
}

/// Correlation length fitted to the largest photon amplitude in distance bins of width h/2 beyond 2h,
/// with the continuum prediction at the bound-state energy when it lies below the continuum edge.
fn envelope_xi(lat: &HyperbolicLattice, center: usize, density: &[f64], energy: f64) -> Result<(Option<f64>, Option<f64>)> {
    let h = lat.lattice_constant();
    let samples: Vec<(f64, f64)> = (0..lat.len())
        .filter(|&i| i != center)
        .map(|i| Ok((hyperbolic_distance(lat.site(center), lat.site(i), KAPPA)?, density[i].sqrt())))
        .collect::<Result<_>>()?;
    let envelope: Vec<(f64, f64)> = (4..24)
        .filter_map(|k| {
            let (lo, hi) = (k as f64 * h / 2.0, (k + 1) as f64 * h / 2.0);
            samples.iter().filter(|s| s.0 >= lo && s.0 < hi && s.1 > 0.0).copied().max_by(|a, b| a.1.total_cmp(&b.1))
        })
        .collect();
    let fitted = fit_decay(&envelope).ok().map(|f| f.xi);
    let c = ContinuumParams::for_lattice(lat)?;
    let predicted = correlation_length(energy, c.mass, c.e0, KAPPA).ok();
    Ok((fitted, predicted))
}

fn couplings_csv(model: &hypercqed::spinmodel::SpinCouplingMatrix, g: f64) -> String {
    let mut csv = String::from("a,b,site_a,site_b,x_a,y_a,x_b,y_b,J\n");
    for a in 0..model.len() {
        for b in a + 1..model.len() {
            let v = model.j[a][b];
            if v.abs() > 1e-10 * g * g {
                let (za, zb) = (model.positions[a], model.positions[b]);
                let _ = writeln!(csv, "{a},{b},{},{},{},{},{},{},{v}", model.qubit_sites[a], model.qubit_sites[b], za.re, za.im, zb.re, zb.im);
            }
        }
    }
    csv
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Random orthogonal matrix from Gram–Schmidt on uniform columns.
fn random_rotation(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= dot * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            cols.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    (0..d).map(|r| (0..d).map(|c| cols[c][r]).collect()).collect()
}
