//! Bundled figure pipelines and their verdicts against the acceptance thresholds.

use std::path::Path;

use clap::ValueEnum;
use hypercqed::hamiltonian::{build_photon_operator, build_qubit_photon_operator, QubitSpec};
use hypercqed::spectral::eigendecompose;
use hypercqed::tessellation::generate_lattice;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, ScanParameter, Task};
use crate::error::{CliError, Result};
use crate::run::{execute, write_file};
use crate::tasks::TaskOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    /// Run names and their bundled configurations.
    pub fn runs(self) -> Vec<(&'static str, &'static str)> {
        match self {
            Figure::Fig1 => vec![("boundstate", include_str!("../configs/fig1_boundstate.toml"))],
            Figure::Fig2 => vec![
                ("dos_l5", include_str!("../configs/fig2_dos_l5.toml")),
                ("dos_l6", include_str!("../configs/fig2_dos_l6.toml")),
                ("dos_l7", include_str!("../configs/fig2_dos_l7.toml")),
                ("jspectral_l5", include_str!("../configs/fig2_jspectral_l5.toml")),
                ("jspectral_l6", include_str!("../configs/fig2_jspectral_l6.toml")),
                ("jspectral_l7", include_str!("../configs/fig2_jspectral_l7.toml")),
            ],
            Figure::Fig3 => vec![("decay_scan", include_str!("../configs/fig3_decay_scan.toml"))],
            Figure::Fig4 => vec![
                ("g_scan_continuum", include_str!("../configs/fig4_g_scan_continuum.toml")),
                ("g_scan_lattice", include_str!("../configs/fig4_g_scan_lattice.toml")),
                ("delta_scan_continuum", include_str!("../configs/fig4_delta_scan_continuum.toml")),
                ("delta_scan_lattice", include_str!("../configs/fig4_delta_scan_lattice.toml")),
            ],
            Figure::Fig5 => vec![("flatband", include_str!("../configs/fig5_flatband.toml"))],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictCheck {
    pub name: String,
    pub value: Value,
    pub threshold: String,
    pub pass: bool,
}

fn check(name: impl Into<String>, value: Value, threshold: impl Into<String>, pass: bool) -> VerdictCheck {
    VerdictCheck { name: name.into(), value, threshold: threshold.into(), pass }
}

struct Record {
    name: &'static str,
    config: RunConfig,
    output: TaskOutput,
}

impl Record {
    fn summary(&self, key: &str) -> &Value {
        &self.output.summary[key]
    }
}

fn find<'a>(records: &'a [Record], name: &str) -> &'a Record {
    records.iter().find(|r| r.name == name).expect("bundled run names are fixed")
}

/// Runs every bundled configuration of `figure` under `base/<figure>/` and writes `verdict.json`.
pub fn reproduce(figure: Figure, base: &Path, strict: bool) -> Result<Vec<VerdictCheck>> {
    let dir = base.join(figure.name());
    let mut records = Vec::new();
    for (name, text) in figure.runs() {
        let config = RunConfig::from_toml(text)?;
        let (output, _) = execute(&config, &dir.join(name), strict)?;
        records.push(Record { name, config, output });
    }
    let checks = match figure {
        Figure::Fig1 => fig1(&records)?,
        Figure::Fig2 => fig2(&records)?,
        Figure::Fig3 => fig3(&records),
        Figure::Fig4 => fig4(&records)?,
        Figure::Fig5 => fig5(&records),
    };
    let pass = checks.iter().all(|c| c.pass);
    let verdict = json!({ "figure": figure.name(), "pass": pass, "checks": checks });
    write_file(&dir, "verdict.json", &serde_json::to_string_pretty(&verdict)?)?;
    if !pass {
        let failures = checks.iter().filter(|c| !c.pass).map(|c| format!("{} = {} (needs {})", c.name, c.value, c.threshold)).collect();
        return Err(CliError::Verdict(failures));
    }
    Ok(checks)
}

fn fig1(records: &[Record]) -> Result<Vec<VerdictCheck>> {
    let r = find(records, "boundstate");
    let lat = generate_lattice(r.config.lattice)?;
    let exact = eigendecompose(&build_qubit_photon_operator(&lat, r.config.model.t, &r.config.model.qubits)?, false)?.e0();
    let energy = r.summary("energy").as_f64().unwrap_or(f64::NAN);
    let err = (energy - exact).abs();
    let ratio = r.summary("envelope_xi").as_f64().zip(r.summary("predicted_xi").as_f64()).map(|(a, b)| a / b);
    Ok(vec![
        check("bound_state_vs_exact_diagonalization", json!(err), "<= 1e-8", err <= 1e-8),
        check("envelope_xi_over_prediction", json!(ratio), "within 15% of 1", ratio.is_some_and(|x| (x - 1.0).abs() <= 0.15)),
    ])
}

/// Step function stored as `omega,value,kind` rows.
fn parse_steps(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter_map(|l| {
            let mut it = l.split(',');
            Some((it.next()?.parse().ok()?, it.next()?.parse().ok()?))
        })
        .collect()
}

fn step_value(steps: &[(f64, f64)], w: f64) -> f64 {
    let k = steps.partition_point(|s| s.0 <= w);
    if k == 0 {
        0.0
    } else {
        steps[k - 1].1
    }
}

fn fig2(records: &[Record]) -> Result<Vec<VerdictCheck>> {
    let mut checks = Vec::new();
    for (l, target) in [(5, 0.0066), (6, 0.0052), (7, 0.0044)] {
        let rmse = find(records, &format!("jspectral_l{l}")).summary("rmse_vs_continuum").as_f64();
        checks.push(check(
            format!("cumulative_j_rmse_l{l}"),
            json!(rmse),
            format!("{target} within 20%"),
            rmse.is_some_and(|x| ((x - target) / target).abs() <= 0.2),
        ));
    }
    let curve = |name: &str| parse_steps(find(records, name).output.file("cumulative_dos.csv").unwrap_or_default());
    let (p6, p7) = (curve("dos_l6"), curve("dos_l7"));
    let worst = p6.iter().chain(&p7).map(|s| s.0).filter(|&w| w <= -2.0).map(|w| (step_value(&p6, w) - step_value(&p7, w)).abs()).fold(0.0, f64::max);
    checks.push(check("cumulative_dos_l6_vs_l7_near_edge", json!(worst), "< 0.02", worst < 0.02));
    Ok(checks)
}

fn fig3(records: &[Record]) -> Vec<VerdictCheck> {
    let r = find(records, "decay_scan");
    let rows = r.summary("rows").as_array().map_or(0, Vec::len);
    let r_j = r.summary("pearson_gamma_j").as_f64().unwrap_or(f64::NAN);
    let r_rho = r.summary("pearson_gamma_rho").as_f64().unwrap_or(f64::NAN);
    vec![
        check("detunings", json!(rows), ">= 8", rows >= 8),
        check("pearson_gamma_j", json!(r_j), "> 0.9", r_j > 0.9),
        check("pearson_gamma_j_minus_gamma_rho", json!(r_j - r_rho), "> 0", r_j > r_rho),
    ]
}

fn fig4(records: &[Record]) -> Result<Vec<VerdictCheck>> {
    let mut checks = Vec::new();
    for name in ["g_scan_continuum", "delta_scan_continuum"] {
        let r = find(records, name);
        let lat = generate_lattice(r.config.lattice)?;
        let t = r.config.model.t;
        let e0 = eigendecompose(&build_photon_operator(&lat, t)?, false)?.e0();
        let Task::Boundstate2 { scan, .. } = r.config.task else { unreachable!("fig4 runs are two-qubit scans") };
        let (mut worst, mut mismatched) = (0.0f64, Vec::new());
        for row in r.summary("rows").as_array().into_iter().flatten() {
            let p = row["param"].as_f64().unwrap_or(f64::NAN);
            let set = |q: QubitSpec| match scan.parameter {
                ScanParameter::Delta => QubitSpec { delta: p, ..q },
                ScanParameter::G => QubitSpec { g: p, ..q },
            };
            let qubits: Vec<QubitSpec> = r.config.model.qubits.iter().copied().map(set).collect();
            let ed = eigendecompose(&build_qubit_photon_operator(&lat, t, &qubits)?, false)?;
            let exact: Vec<f64> = ed.eigenvalues().iter().copied().filter(|&e| e < e0 - 1e-9).take(2).collect();
            let solved: Vec<f64> = [&row["lower"], &row["upper"]].iter().filter_map(|v| v.as_f64()).collect();
            let mut ok = exact.len() == solved.len();
            for (a, b) in exact.iter().zip(&solved) {
                let rel = (a - b).abs() / (e0 - a);
                worst = worst.max(rel);
                ok &= rel <= 0.02;
            }
            if !ok {
                mismatched.push(p);
            }
        }
        checks.push(check(format!("{name}_points_off_exact_levels"), json!(mismatched), "none beyond 2% of (E0 - E_B)", mismatched.is_empty()));
        checks.push(check(format!("{name}_worst_relative_deviation"), json!(worst), "<= 0.02", worst <= 0.02));
    }
    Ok(checks)
}

fn fig5(records: &[Record]) -> Vec<VerdictCheck> {
    let r = find(records, "flatband");
    let s = &r.output.summary;
    let n = s["n"].as_f64().unwrap_or(f64::NAN);
    let fraction = s["degeneracy"].as_f64().unwrap_or(0.0) / n;
    let gap = s["gap"].as_f64().unwrap_or(0.0);
    let g = match r.config.task {
        Task::Flatband { g, .. } => g,
        _ => unreachable!("fig5 runs the flat-band task"),
    };
    let beyond = s["max_coupling_beyond_support"].as_f64().unwrap_or(f64::INFINITY);
    let rotation = s["rotation_change"].as_f64().unwrap_or(f64::INFINITY);
    let (pos, neg) = (s["positive_couplings"].as_u64().unwrap_or(0), s["negative_couplings"].as_u64().unwrap_or(0));
    vec![
        check("degenerate_fraction", json!(fraction), "> 0.1", fraction > 0.1),
        check("gap_to_next_level", json!(gap), "> 0", gap > 0.0),
        check("max_coupling_beyond_support", json!(beyond), format!("< {:e}", 1e-10 * g * g), beyond < 1e-10 * g * g),
        check("rotation_change", json!(rotation), "<= 1e-10", rotation <= 1e-10),
        check("coupling_signs", json!([pos, neg]), "both signs present", pos > 0 && neg > 0),
    ]
}
