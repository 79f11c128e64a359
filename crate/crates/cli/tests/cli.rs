use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

const SPECTRUM: &str = r#"
[lattice]
p = 7
q = 3
rings = 1
kind = "vertex_graph"

[task]
kind = "spectrum"
"#;

fn hypercqed(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypercqed")).args(args).current_dir(dir).env_remove("HYPERCQED_OUTPUT_DIR").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_error(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr).lines().last().unwrap().to_string();
    serde_json::from_str::<Value>(&line).unwrap()["error"].clone()
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn spectrum_of_one_heptagon() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SPECTRUM);
    let out = hypercqed(&["run", &cfg, "--output-dir", "out"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/eigenvalues.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# units:"));
    assert_eq!(lines.next(), Some("index,energy"));
    let energies: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    // −2cos(2πk/7) for a heptagon with t = 1
    let mut expected: Vec<f64> = (0..7).map(|k| -2.0 * (std::f64::consts::TAU * k as f64 / 7.0).cos()).collect();
    expected.sort_by(f64::total_cmp);
    assert_eq!(energies.len(), 7);
    for (a, b) in energies.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12);
    }

    let manifest = read_json(&tmp.path().join("out/manifest.json"));
    assert_eq!(manifest["task"], "spectrum");
    let file = &manifest["files"][0];
    assert_eq!(file["name"], "eigenvalues.csv");
    assert_eq!(file["sha256"], sha256_hex(csv.as_bytes()));
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn identical_configs_give_identical_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
[lattice]
p = 7
q = 3
rings = 3
kind = "vertex_graph"

[model]
qubits = [{ site = 0, delta = 0.5, g = 0.2 }]

[task]
kind = "dynamics"
times = { start = 0.0, stop = 10.0, points = 21 }
delta_scan = { start = -1.0, stop = 1.0, points = 3 }
"#,
    );
    for dir in ["a", "b"] {
        assert!(hypercqed(&["run", &cfg, "--output-dir", dir], tmp.path()).status.success());
    }
    let read = |p: &str| std::fs::read(tmp.path().join(p)).unwrap();
    assert_eq!(read("a/decay_scan.csv"), read("b/decay_scan.csv"));
    let (ma, mb) = (read_json(&tmp.path().join("a/manifest.json")), read_json(&tmp.path().join("b/manifest.json")));
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["files"], mb["files"]);
}

#[test]
fn manifest_config_reparses_to_the_same_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
seed = 3
[lattice]
p = 7
q = 3
rings = 2
kind = "vertex_graph"
[task]
kind = "greens"
i = 0
j = 4
omega = { start = -4.0, stop = -3.2, points = 5 }
"#,
    );
    assert!(hypercqed(&["run", &cfg, "--output-dir", "a"], tmp.path()).status.success());
    let first = read_json(&tmp.path().join("a/manifest.json"));
    // the emitted config, written back as TOML, must describe the same run
    let toml_text = toml::to_string(&first["config"]).unwrap();
    let again = write_config(tmp.path(), "again.toml", &toml_text);
    assert!(hypercqed(&["run", &again, "--output-dir", "b"], tmp.path()).status.success());
    let second = read_json(&tmp.path().join("b/manifest.json"));
    assert_eq!(first["config"], second["config"]);
    assert_eq!(first["config_sha256"], second["config_sha256"]);
    assert_eq!(first["files"], second["files"]);
}

#[test]
fn validation_errors_are_machine_readable() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("site.toml", SPECTRUM.replace("kind = \"spectrum\"", "kind = \"jspectral\"\nsite = 99"), "config"),
        ("field.toml", SPECTRUM.replace("kind = \"spectrum\"", "kind = \"spectrum\"\nbins = 3"), "parse"),
        ("euclid.toml", SPECTRUM.replace("p = 7", "p = 6"), "invalid_spec"),
        ("qubits.toml", SPECTRUM.replace("kind = \"spectrum\"", "kind = \"boundstate\""), "config"),
    ];
    for (name, text, kind) in cases {
        let cfg = write_config(tmp.path(), name, &text);
        let out = hypercqed(&["run", &cfg], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert_eq!(stderr_error(&out)["kind"], kind, "{name}");
    }
    let out = hypercqed(&["run", "missing.toml"], tmp.path());
    assert_eq!(stderr_error(&out)["kind"], "io");
    let out = hypercqed(&["reproduce", "fig9"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["kind"], "usage");
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &format!("output = \"configured\"\n{SPECTRUM}"));
    assert!(hypercqed(&["run", &cfg], tmp.path()).status.success());
    assert!(tmp.path().join("configured/eigenvalues.csv").exists());

    let bin = env!("CARGO_BIN_EXE_hypercqed");
    let env_run =
        |extra: &[&str]| Command::new(bin).arg("run").arg(&cfg).args(extra).current_dir(tmp.path()).env("HYPERCQED_OUTPUT_DIR", "from_env").output().unwrap();
    assert!(env_run(&[]).status.success());
    assert!(tmp.path().join("from_env/eigenvalues.csv").exists());
    assert!(env_run(&["--output-dir", "from_flag"]).status.success());
    assert!(tmp.path().join("from_flag/eigenvalues.csv").exists());
}

#[test]
fn strict_mode_promotes_warnings() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
[lattice]
p = 7
q = 3
rings = 3
kind = "line_graph"
[model]
t = -1.0
[task]
kind = "flatband"
detuning = -0.01
g = 0.01
sites = [0, 1, 2, 3]
"#,
    );
    let relaxed = hypercqed(&["run", &cfg, "--output-dir", "a"], tmp.path());
    assert!(relaxed.status.success());
    assert!(String::from_utf8_lossy(&relaxed.stderr).contains("\"warning\""));
    assert!(!read_json(&tmp.path().join("a/manifest.json"))["warnings"].as_array().unwrap().is_empty());

    let strict = hypercqed(&["run", &cfg, "--output-dir", "b", "--strict"], tmp.path());
    assert!(!strict.status.success());
    assert!(!tmp.path().join("b/manifest.json").exists());
}

#[test]
fn bound_state_and_spin_model_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "[lattice]\np = 7\nq = 3\nrings = 3\nkind = \"vertex_graph\"\n";
    let bound =
        write_config(tmp.path(), "b.toml", &format!("{base}[model]\nqubits = [{{ site = 0, delta = -3.3, g = 0.2 }}]\n[task]\nkind = \"boundstate\"\n"));
    assert!(hypercqed(&["run", &bound, "--output-dir", "b", "--threads", "2"], tmp.path()).status.success());
    let state = read_json(&tmp.path().join("b/boundstate.json"));
    let energy = state["energy"].as_f64().unwrap();
    assert!(energy < -3.3);
    let density = std::fs::read_to_string(tmp.path().join("b/density.csv")).unwrap();
    assert_eq!(density.lines().nth(1), Some("site,re,im,n_ph"));
    let manifest = read_json(&tmp.path().join("b/manifest.json"));
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["summary"]["energy"].as_f64(), Some(energy));

    let spin = write_config(tmp.path(), "s.toml", &format!("{base}[task]\nkind = \"spinmodel\"\ndelta = -3.5\ng = 0.05\nsites = [0, 1, 9]\n"));
    assert!(hypercqed(&["run", &spin, "--output-dir", "s"], tmp.path()).status.success());
    let model = read_json(&tmp.path().join("s/spinmodel.json"));
    for key in ["generator", "params", "qubit_sites", "positions", "J", "onsite_shift"] {
        assert!(model.get(key).is_some(), "missing {key}");
    }
    assert_eq!(model["qubit_sites"], serde_json::json!([0, 1, 9]));
}

#[test]
fn dynamics_conserves_the_norm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
[lattice]
p = 7
q = 3
rings = 2
kind = "vertex_graph"
[model]
qubits = [{ site = 0, delta = 0.0, g = 0.3 }, { site = 5, delta = 0.2, g = 0.3 }]
[task]
kind = "dynamics"
times = { start = 0.0, stop = 20.0, points = 41 }
record_photons = true
"#,
    );
    assert!(hypercqed(&["run", &cfg, "--output-dir", "d"], tmp.path()).status.success());
    let manifest = read_json(&tmp.path().join("d/manifest.json"));
    assert!(manifest["summary"]["norm_drift"].as_f64().unwrap() < 1e-9);
    let csv = std::fs::read_to_string(tmp.path().join("d/evolution.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 42);
}

#[test]
fn reproduce_flat_band_figure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hypercqed(&["reproduce", "fig5", "--output-dir", "figs"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let verdict = read_json(&tmp.path().join("figs/fig5/verdict.json"));
    assert_eq!(verdict["pass"], true);
    assert_eq!(verdict["checks"].as_array().unwrap().len(), 5);
    for file in ["flatband.json", "couplings.csv", "localized_states.csv", "manifest.json"] {
        assert!(tmp.path().join("figs/fig5/flatband").join(file).exists(), "{file}");
    }
}
