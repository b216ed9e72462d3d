//! Complex gamma function, spherical Bessel functions j_0..j_6, low-order
//! Legendre polynomials and Gauss-Legendre quadrature nodes.
//!
//! Only the pieces the amplitude and anisotropy formulas need; this is not a
//! general special-function library.

use num_complex::Complex64;
use thiserror::Error;

use std::f64::consts::PI;

#[derive(Debug, Error, PartialEq)]
pub enum SpecialError {
    #[error("gamma pole at non-positive integer {0}")]
    GammaPole(f64),
    #[error("spherical Bessel order {0} out of supported range 0..=6")]
    BesselOrder(u32),
    #[error("spherical Bessel argument must be >= 0, got {0}")]
    BesselArgument(f64),
}

// Lanczos g = 7 coefficients (GSL set).
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_P: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Γ(z) for complex z, Lanczos approximation with reflection for Re z < 0.5.
pub fn gamma_complex(z: Complex64) -> Result<Complex64, SpecialError> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Err(SpecialError::GammaPole(z.re));
    }
    if z.re < 0.5 {
        // Γ(z) Γ(1-z) = π / sin(πz)
        let s = (PI * z).sin();
        return Ok(PI / (s * gamma_complex(Complex64::new(1.0, 0.0) - z)?));
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_P[0], 0.0);
    for (i, &p) in LANCZOS_P.iter().enumerate().skip(1) {
        acc += p / (z + i as f64);
    }
    let w = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * w.powc(z + 0.5) * (-w).exp() * acc)
}

// Ascending series: j_l(x) = x^l/(2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)...(2l+2k+1)).
fn bessel_series(l: u32, x: f64) -> f64 {
    let lf = l as f64;
    // x^l / (2l+1)!!
    let mut prefactor = 1.0;
    for m in 0..l {
        prefactor *= x / (2.0 * m as f64 + 3.0);
    }
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= -x * x / 2.0 / (kf * (2.0 * lf + 2.0 * kf + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    prefactor * sum
}

/// Spherical Bessel function of the first kind, orders 0..=6.
///
/// Small arguments use the ascending series (the closed trig forms cancel
/// catastrophically as x -> 0 for l > 0); above the switch point the upward
/// trigonometric recurrence is used.
pub fn spherical_bessel(l: u32, x: f64) -> Result<f64, SpecialError> {
    if l > 6 {
        return Err(SpecialError::BesselOrder(l));
    }
    if x.is_nan() || x < 0.0 {
        return Err(SpecialError::BesselArgument(x));
    }
    if x == 0.0 {
        return Ok(if l == 0 { 1.0 } else { 0.0 });
    }
    let switch = (l as f64).max(0.5);
    if x < switch {
        return Ok(bessel_series(l, x));
    }
    let j0 = x.sin() / x;
    if l == 0 {
        return Ok(j0);
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let (mut prev, mut cur) = (j0, j1);
    for m in 1..l {
        let next = (2.0 * m as f64 + 1.0) / x * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Legendre polynomial P_l(u) for l in {0, 2, 4}.
pub fn legendre_p(l: u32, u: f64) -> f64 {
    match l {
        0 => 1.0,
        2 => (3.0 * u * u - 1.0) / 2.0,
        4 => ((35.0 * u * u - 30.0) * u * u + 3.0) / 8.0,
        _ => panic!("legendre_p supports l in {{0, 2, 4}}, got {l}"),
    }
}

/// n-point Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = nf * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Integrate f over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}
