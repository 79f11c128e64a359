//! Adaptive quadrature and bracketed root finding.

use crate::error::{Error, Result};

// tabulated to the published digits
#[allow(clippy::excessive_precision)]
const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const GAUSS_WEIGHTS: [f64; 4] =
    [0.129484966168869693270611432679082, 0.279705391489276667901467771423780, 0.381830050505118944950369775488975, 0.417959183673469387755102040816327];

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for k in 0..7 {
        let s = f(c - r * GK_NODES[k]) + f(c + r * GK_NODES[k]);
        kronrod += KRONROD_WEIGHTS[k] * s;
        if k % 2 == 1 {
            gauss += GAUSS_WEIGHTS[k / 2] * s;
        }
    }
    (kronrod * r, ((kronrod - gauss) * r).abs())
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` to absolute or relative tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    let (value, err) = gauss_kronrod(&f, a, b);
    let mut intervals = vec![(a, b, value, err)];
    for _ in 0..2000 {
        let total: f64 = intervals.iter().map(|s| s.2).sum();
        let total_err: f64 = intervals.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(Error::Numeric("integrand produced a non-finite value".into()));
        }
        if total_err <= tol.max(tol * total.abs()) {
            return Ok(total);
        }
        let (worst, _) = intervals.iter().enumerate().fold((0, -1.0), |acc, (k, s)| if s.3 > acc.1 { (k, s.3) } else { acc });
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (l, h) in [(lo, mid), (mid, hi)] {
            let (v, e) = gauss_kronrod(&f, l, h);
            intervals.push((l, h, v, e));
        }
    }
    Err(Error::Numeric(format!("adaptive quadrature on [{a}, {b}] did not reach tolerance {tol}")))
}

/// Root of `f` in `[a, b]` by Brent's method. The endpoint values must differ in sign.
pub fn brent<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing(format!("no sign change on [{a}, {b}]: f = {fa}, {fb}")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                (s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0)), (qa - 1.0) * (r - 1.0) * (s - 1.0))
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::Numeric(format!("Brent iteration did not converge near {b}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrates_polynomials_and_smooth_functions() {
        assert_abs_diff_eq!(integrate(|x| x * x, 0.0, 3.0, 1e-13).unwrap(), 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-13).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(|x| 1.0 / x, 1e-6, 1.0, 1e-12).unwrap(), 6.0 * 10f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(integrate(|x| x.sqrt(), 0.0, 1.0, 1e-12).unwrap(), 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn finds_roots() {
        let r = brent(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-15).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-14);
        let r = brent(|x| Ok(x.cos() - x), 0.0, 1.0, 1e-15).unwrap();
        assert_abs_diff_eq!(r, 0.7390851332151607, epsilon = 1e-14);
        assert_eq!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12).unwrap_err().kind(), "bracketing");
    }
}
