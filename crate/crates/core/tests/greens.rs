use std::f64::consts::PI;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use hypercqed::geometry::{distance_to_geodesic_segment, hyperbolic_distance, DiskPoint, KAPPA};
use hypercqed::greens::*;
use hypercqed::hamiltonian::{build_photon_operator, SingleExcitationOperator};
use hypercqed::special::legendre_q;
use hypercqed::spectral::{eigendecompose, ContinuumParams};
use hypercqed::tessellation::{generate_lattice, side_length, HyperbolicLattice, LatticeSpec};

fn heptagonal(rings: u32) -> HyperbolicLattice {
    generate_lattice(LatticeSpec::heptagonal(rings)).unwrap()
}

#[test]
fn scalar_and_dimer_resolvents() {
    let single = SingleExcitationOperator::from_graph(1, &[], 1.0, &[]).unwrap();
    let dimer = SingleExcitationOperator::from_graph(2, &[(0, 1)], 1.0, &[]).unwrap();
    for omega in [-3.0, -1.5, 1.7, 4.0] {
        assert_relative_eq!(lattice_green(&single, 0, 0, omega, 0.0).unwrap().real(), 1.0 / omega, max_relative = 1e-13);
        // 2x2 inversion: G11 = ω/(ω² − 1), G12 = −1/(ω² − 1) for H = −A
        assert_relative_eq!(lattice_green(&dimer, 0, 0, omega, 0.0).unwrap().real(), omega / (omega * omega - 1.0), max_relative = 1e-12);
        assert_relative_eq!(lattice_green(&dimer, 0, 1, omega, 0.0).unwrap().real(), -1.0 / (omega * omega - 1.0), max_relative = 1e-12);
    }
    let z = lattice_green(&dimer, 0, 0, 0.3, 0.05).unwrap().value;
    let w = num_complex::Complex64::new(0.3, 0.05);
    assert_relative_eq!((z - w / (w * w - 1.0)).norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn in_band_evaluation_needs_broadening() {
    let lat = heptagonal(2);
    let op = build_photon_operator(&lat, 1.0).unwrap();
    let err = lattice_green(&op, 0, 0, 0.0, 0.0).unwrap_err();
    assert_eq!(err.kind(), "near_singular");
    assert!(err.to_string().contains("eta"));
    assert!(lattice_green(&op, 0, 0, 0.0, 1e-2).is_ok());
}

#[test]
fn resolvent_matches_spectral_representation() {
    let lat = heptagonal(4);
    let op = build_photon_operator(&lat, 1.0).unwrap();
    let spec = eigendecompose(&op, true).unwrap();
    let green = LatticeGreen::new(&op);
    for omega in [-3.5, -3.0, 2.9, 3.4] {
        for (i, j) in [(0, 0), (0, 1), (3, 40), (100, 7)] {
            let cg = green.value(i, j, omega).unwrap();
            let sr = spectral_green(&spec, i, j, omega).unwrap();
            assert_abs_diff_eq!(cg, sr, epsilon = 1e-8);
            assert_abs_diff_eq!(cg, green.value(j, i, omega).unwrap(), epsilon = 1e-10);
        }
    }
    // broadened: dense factorization against the spectral sum
    let with_vectors = LatticeGreen::with_spectrum(&op, &spec).unwrap();
    for omega in [-1.0, 0.2, 1.9] {
        let a = green.column(5, omega, 0.02).unwrap();
        let b = with_vectors.column(5, omega, 0.02).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-8);
        }
    }
}

#[test]
fn calibration_table_small_lattices() {
    for (rings, c, lambda, lambda1) in [(1, 0.448, 4.59, 4.06), (2, 0.649, 8.88, 7.89), (3, 0.707, 10.7, 9.51)] {
        let cal = calibrate_cutoff(&heptagonal(rings), 1.0).unwrap();
        assert_abs_diff_eq!(cal.c, c, epsilon = 0.002);
        assert_abs_diff_eq!(cal.lambda, lambda, epsilon = 0.05);
        assert_abs_diff_eq!(cal.lambda1, lambda1, epsilon = 0.05);
        // Λ1 = √(exp(112 C/M) − 1) from the stored values
        assert_abs_diff_eq!(cal.lambda1, ((112.0 * cal.c / cal.mass).exp() - 1.0).sqrt(), epsilon = 1e-12);
    }
    let m = ContinuumParams::heptagonal().mass;
    let lo = CutoffCalibration::from_c(1, 0.5, m).unwrap();
    let hi = CutoffCalibration::from_c(1, 0.6, m).unwrap();
    assert!(hi.lambda1 > lo.lambda1 && hi.lambda > lo.lambda);
}

#[test]
fn onsite_cutoff_integral() {
    let c = ContinuumParams::heptagonal();
    let tiny = ContinuumGreenParams::new(c, 1e-9);
    assert!(continuum_green_onsite(c.e0 - 0.3, &tiny, OnsiteForm::Integral).unwrap().real().abs() < 1e-15);
    assert_eq!(continuum_green_onsite(c.e0 - 0.3, &ContinuumGreenParams::new(c, 0.0), OnsiteForm::Integral).unwrap_err().kind(), "domain");

    // independent composite Simpson rule on the same integrand
    let p = ContinuumGreenParams::new(c, 10.6);
    let omega = c.e0 - 0.3;
    let s2 = c.mass * 0.3;
    let f = |k: f64| k * (0.5 * PI * k).tanh() / (k * k + s2);
    let n = 200_000;
    let h = 10.6 / n as f64;
    let simpson = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * f(k as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    let value = continuum_green_onsite(omega, &p, OnsiteForm::Integral).unwrap().real();
    assert_relative_eq!(value, -c.mass / 56.0 * simpson, max_relative = 1e-6);

    // the logarithmic form holds within 5% inside 1 ≪ M(E0 − ω) ≪ Λ²
    for x in [2.0, 4.0, 8.0] {
        let omega = c.e0 - x / c.mass;
        let full = continuum_green_onsite(omega, &p, OnsiteForm::Integral).unwrap().real();
        let log = continuum_green_onsite(omega, &p, OnsiteForm::Logarithmic).unwrap().real();
        assert!(((log - full) / full).abs() < 0.05, "M(E0 − ω) = {x}: {log} vs {full}");
    }
}

#[test]
fn offsite_green_at_the_band_edge() {
    let c = ContinuumParams::heptagonal();
    let p = ContinuumGreenParams::new(c, 10.0);
    assert_abs_diff_eq!(legendre_degree(c.e0, &p).unwrap(), -0.5, epsilon = 1e-15);
    // Q_{−1/2}(cosh(d/κ)) → π e^{−d/(2κ)} at large d
    for d in [4.0, 6.0] {
        let g = continuum_green_at_distance(d, c.e0, &p).unwrap();
        assert_relative_eq!(g / (-c.mass / 56.0), PI * (-d / (2.0 * KAPPA)).exp(), max_relative = 1e-3);
    }
    for x in [1.01f64, 1.5, 5.0] {
        assert_relative_eq!(legendre_q(0.0, x).unwrap(), 0.5 * ((x + 1.0) / (x - 1.0)).ln(), max_relative = 1e-12);
    }
    assert!(continuum_green_offsite(DiskPoint::ORIGIN, DiskPoint::ORIGIN, c.e0 - 0.1, &p).is_err());
    assert!(continuum_green_at_distance(1.0, c.e0 + 0.1, &p).is_err());
}

#[test]
fn correlation_length_limits() {
    let c = ContinuumParams::heptagonal();
    assert_abs_diff_eq!(correlation_length(c.e0, c.mass, c.e0, KAPPA).unwrap(), KAPPA, epsilon = 1e-15);
    assert_abs_diff_eq!(correlation_length(c.e0 - 1.0 / c.mass, c.mass, c.e0, KAPPA).unwrap(), KAPPA / 2.0, epsilon = 1e-15);
    assert!(correlation_length(-1e12, c.mass, c.e0, KAPPA).unwrap() < 1e-6);
    assert_eq!(correlation_length(c.e0 + 0.01, c.mass, c.e0, KAPPA).unwrap_err().kind(), "domain");
}

#[test]
fn exponential_fit_recovers_exact_xi() {
    let xi = 0.37;
    let samples: Vec<(f64, f64)> = (0..12)
        .map(|k| {
            let d = 0.2 * k as f64;
            (d, 2.5 * (-d / (2.0 * xi)).exp())
        })
        .collect();
    let fit = fit_decay(&samples).unwrap();
    assert_abs_diff_eq!(fit.xi, xi, epsilon = 1e-10);
    assert_abs_diff_eq!(fit.prefactor, 2.5, epsilon = 1e-9);
    let mut bad = samples.clone();
    bad[3].1 = 0.0;
    assert_eq!(fit_decay(&bad).unwrap_err().kind(), "domain");
    assert!(fit_decay(&samples[..3]).is_err());
}

#[test]
fn continuum_tracks_lattice_along_a_ray() {
    // qubit site 0 at the bound-state energy of g = 0.05, Δ = −3.2 on six rings
    let lat = heptagonal(6);
    let op = build_photon_operator(&lat, 1.0).unwrap();
    let omega = -3.2013275186499275;
    let column = LatticeGreen::new(&op).column_real(0, omega).unwrap();
    let p = ContinuumGreenParams::heptagonal(11.866);
    let h = side_length(7, 3, KAPPA).unwrap();
    let origin = lat.site(0);
    let far = DiskPoint::from_polar(0.99, origin.im.atan2(origin.re)).unwrap();
    let mut checked = 0;
    for (i, &gi) in column.iter().enumerate().skip(1) {
        let d = hyperbolic_distance(origin, lat.site(i), KAPPA).unwrap();
        if !(2.0 * h..=6.0 * h).contains(&d) || distance_to_geodesic_segment(lat.site(i), origin, far, KAPPA).unwrap() > h {
            continue;
        }
        let cont = continuum_green_offsite(origin, lat.site(i), omega, &p).unwrap().real();
        assert!(((cont - gi) / gi).abs() < 0.15, "site {i} at d/h = {}: {cont} vs {gi}", d / h);
        checked += 1;
    }
    assert!(checked >= 4);
}

#[test]
fn scan_csv_header() {
    let c = ContinuumParams::heptagonal();
    let p = ContinuumGreenParams::new(c, 10.0);
    let e = continuum_green_onsite(c.e0 - 0.2, &p, OnsiteForm::Integral).unwrap();
    let csv = green_scan_csv(&[(0.0, e)]);
    assert!(csv.starts_with("d,omega,value,provenance\n"));
    assert!(csv.trim_end().ends_with("continuum_momentum"));
}
