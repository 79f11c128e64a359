//! Gamma and Legendre functions of real degree for arguments `x > 1`.
//!
//! `Q_ν` is evaluated from its hypergeometric expansion in `1/x²` when `x`
//! is not too close to 1 and from its Laplace integral otherwise. `P_ν`
//! uses the hypergeometric series in `(1−x)/2` up to `x = 2` and its
//! Laplace integral beyond.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
// tabulated to the published digits
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler's Gamma function for real arguments, poles at non-positive integers.
pub fn gamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("Gamma has a pole at {x}")));
    }
    if x < 0.5 {
        return Ok(PI / ((PI * x).sin() * gamma(1.0 - x)?));
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let sum = LANCZOS[1..].iter().enumerate().fold(LANCZOS[0], |acc, (k, c)| acc + c / (x + k as f64 + 1.0));
    Ok((2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * sum)
}

/// Gauss hypergeometric series `₂F₁(a, b; c; z)` for `|z| < 1`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(Error::Domain(format!("hypergeometric series needs |z| < 1, got z = {z}")));
    }
    if c <= 0.0 && c == c.floor() {
        return Err(Error::Domain(format!("hypergeometric series undefined for c = {c}")));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..200_000 {
        let n = n as f64;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
        if term == 0.0 || (term.abs() <= 1e-17 * sum.abs() && n > a.abs() + b.abs() + c.abs()) {
            return Ok(sum);
        }
    }
    Err(Error::Numeric(format!("₂F₁({a}, {b}; {c}; {z}) did not converge")))
}

fn check_argument(x: f64, what: &str) -> Result<()> {
    if !(x > 1.0 && x.is_finite()) {
        return Err(Error::Domain(format!("{what} needs a finite argument x > 1, got {x}")));
    }
    Ok(())
}

/// Legendre function of the second kind `Q_ν(x)`, `x > 1`, `ν` not a negative integer.
pub fn legendre_q(nu: f64, x: f64) -> Result<f64> {
    check_argument(x, "Q_nu")?;
    if x >= 1.05 || nu <= -1.0 {
        legendre_q_series(nu, x)
    } else {
        legendre_q_integral(nu, x)
    }
}

/// `Q_ν(x) = √π Γ(ν+1) / (Γ(ν+3/2) (2x)^{ν+1}) ₂F₁((ν+1)/2, (ν+2)/2; ν+3/2; 1/x²)`.
pub fn legendre_q_series(nu: f64, x: f64) -> Result<f64> {
    check_argument(x, "Q_nu")?;
    if nu <= -1.0 && nu == nu.floor() {
        return Err(Error::Domain(format!("Q_nu is undefined for negative integer degree {nu}")));
    }
    let pre = PI.sqrt() * gamma(nu + 1.0)? / (gamma(nu + 1.5)? * (2.0 * x).powf(nu + 1.0));
    let f =
        hyp2f1(0.5 * (nu + 1.0), 0.5 * (nu + 2.0), nu + 1.5, 1.0 / (x * x)).map_err(|e| Error::Numeric(format!("Q_nu series at nu = {nu}, x = {x}: {e}")))?;
    Ok(pre * f)
}

/// `Q_ν(x) = ∫₀^∞ (x + √(x²−1) cosh t)^{−ν−1} dt` for `ν > −1`, by the trapezoid rule.
pub fn legendre_q_integral(nu: f64, x: f64) -> Result<f64> {
    check_argument(x, "Q_nu")?;
    if !(nu > -1.0) {
        return Err(Error::Domain(format!("the Laplace integral for Q_nu needs nu > -1, got {nu}")));
    }
    let s = (x * x - 1.0).sqrt();
    let f = |t: f64| (x + s * t.cosh()).powf(-nu - 1.0);
    let step = 0.05;
    let mut sum = 0.5 * f(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * step;
        let v = f(t);
        sum += v;
        // remaining tail ≈ v/((ν+1) step)
        if v <= 1e-18 * sum * (nu + 1.0) * step {
            break;
        }
        if t > 2000.0 {
            return Err(Error::Numeric(format!("Q_nu integral did not converge at nu = {nu}, x = {x}")));
        }
        k += 1;
    }
    Ok(sum * step)
}

/// Legendre function of the first kind `P_ν(x)`, `x > 1`.
pub fn legendre_p(nu: f64, x: f64) -> Result<f64> {
    check_argument(x, "P_nu")?;
    if x <= 2.0 {
        legendre_p_series(nu, x)
    } else {
        legendre_p_integral(nu, x)
    }
}

/// `P_ν(x) = ₂F₁(−ν, ν+1; 1; (1−x)/2)` for `1 < x < 3`.
pub fn legendre_p_series(nu: f64, x: f64) -> Result<f64> {
    check_argument(x, "P_nu")?;
    hyp2f1(-nu, nu + 1.0, 1.0, 0.5 * (1.0 - x)).map_err(|e| Error::Numeric(format!("P_nu series at nu = {nu}, x = {x}: {e}")))
}

/// `P_ν(x) = (1/π) ∫₀^π (x + √(x²−1) cos θ)^ν dθ`, by the trapezoid rule on the periodic integrand.
pub fn legendre_p_integral(nu: f64, x: f64) -> Result<f64> {
    check_argument(x, "P_nu")?;
    let s = (x * x - 1.0).sqrt();
    let f = |th: f64| (x + s * th.cos()).powf(nu);
    let mut previous = f64::NAN;
    for n in [64usize, 128, 256, 512, 1024, 2048, 4096, 8192] {
        let h = PI / n as f64;
        let inner: f64 = (1..n).map(|k| f(k as f64 * h)).sum();
        let value = (0.5 * (f(0.0) + f(PI)) + inner) / n as f64;
        if (value - previous).abs() <= 1e-15 * value.abs() {
            return Ok(value);
        }
        previous = value;
    }
    Err(Error::Numeric(format!("P_nu integral did not converge at nu = {nu}, x = {x}")))
}
