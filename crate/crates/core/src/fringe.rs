//! Large-p_N approximations: the effective slit-separation trajectory
//! R_N(t_c), the factorized interference probability, Legendre anisotropy
//! coefficients β0/β2/β4, and trajectory imaging from fringe minima.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::MomentumVector;
use crate::special::spherical_bessel;

#[derive(Debug, Error, PartialEq)]
pub enum FringeError {
    #[error("zero nuclear momentum: trajectory direction undefined")]
    ZeroNuclearMomentum,
    #[error("grazing electron angle: cos(theta_pe) = 0 gives no radial fringe map")]
    GrazingAngle,
    #[error("fringe order must be a positive integer")]
    ZeroOrder,
    #[error("argument p_e * r_n must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("trace too short: need at least 3 points, got {0}")]
    TraceTooShort(usize),
}

/// Reconstructed slit-separation point: at delay `t_c` the packet centre sits
/// at internuclear distance `r_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t_c: f64,
    pub r_n: f64,
}

/// Effective internuclear vector R_N(t_c) = R_0 p̂_N + p_N t_c / μ.
pub fn r_n_vector(
    t_c: f64,
    p_n: &MomentumVector,
    r0: f64,
    mu: f64,
) -> Result<MomentumVector, FringeError> {
    let mag = p_n.magnitude();
    if mag == 0.0 {
        return Err(FringeError::ZeroNuclearMomentum);
    }
    Ok(p_n.scaled(r0 / mag + t_c / mu))
}

/// Interference phase in the p_e ≪ p_N regime: Φ ≈ p_e · R_N(t_c).
pub fn approx_phase(
    t_c: f64,
    p_e: &MomentumVector,
    p_n: &MomentumVector,
    r0: f64,
    mu: f64,
) -> Result<f64, FringeError> {
    Ok(p_e.dot(&r_n_vector(t_c, p_n, r0, mu)?))
}

/// Factorized probability cos²θ_e · sin²(p_e cos θ_pe R_N / 2) · cos²θ_p
/// (arbitrary units).
pub fn approx_probability(
    theta_e: f64,
    theta_pe: f64,
    theta_p: f64,
    p_e_mag: f64,
    r_n_mag: f64,
) -> f64 {
    let fringe = (p_e_mag * theta_pe.cos() * r_n_mag / 2.0).sin();
    theta_e.cos().powi(2) * fringe * fringe * theta_p.cos().powi(2)
}

/// Which β formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaForm {
    Exact,
    /// Leading sinc terms, valid for p_e R_N ≫ 1.
    Asymptotic,
}

/// Legendre coefficients of cos²θ_e [1 - cos(x cos θ_e)] at x = p_e r_n:
///
///   β0 = (1/3)[1 - j0 + 2 j2]
///   β2 = (1/3)[2 - 2 j0 + (55/7) j2 - (36/7) j4]
///   β4 = (12/7) j2 - (351/77) j4 + (30/11) j6
///
/// Asymptotic: β0 ≈ (1 - 3s)/3, β2 ≈ (2 - 15s)/3, β4 ≈ -9s with s = sin x / x.
pub fn beta_coefficients(
    p_e_mag: f64,
    r_n_mag: f64,
    form: BetaForm,
) -> Result<(f64, f64, f64), FringeError> {
    let x = p_e_mag * r_n_mag;
    if x.is_nan() || x <= 0.0 {
        return Err(FringeError::NonPositiveArgument(x));
    }
    match form {
        BetaForm::Exact => {
            let j = |l| spherical_bessel(l, x).expect("order <= 6, x > 0");
            let (j0, j2, j4, j6) = (j(0), j(2), j(4), j(6));
            Ok((
                (1.0 - j0 + 2.0 * j2) / 3.0,
                (2.0 - 2.0 * j0 + 55.0 / 7.0 * j2 - 36.0 / 7.0 * j4) / 3.0,
                12.0 / 7.0 * j2 - 351.0 / 77.0 * j4 + 30.0 / 11.0 * j6,
            ))
        }
        BetaForm::Asymptotic => {
            let s = x.sin() / x;
            Ok(((1.0 - 3.0 * s) / 3.0, (2.0 - 15.0 * s) / 3.0, -9.0 * s))
        }
    }
}

/// Maps fringe minima (t_c, order n) to trajectory points via
/// r_n = 2nπ / (p_e cos θ_pe).
pub fn infer_trajectory(
    minima: &[(f64, u32)],
    p_e_mag: f64,
    theta_pe: f64,
) -> Result<Vec<TrajectoryPoint>, FringeError> {
    let cos = theta_pe.cos();
    if cos.abs() < 1e-12 {
        return Err(FringeError::GrazingAngle);
    }
    minima
        .iter()
        .map(|&(t_c, n)| {
            if n == 0 {
                return Err(FringeError::ZeroOrder);
            }
            Ok(TrajectoryPoint {
                t_c,
                r_n: 2.0 * n as f64 * std::f64::consts::PI / (p_e_mag * cos),
            })
        })
        .collect()
}

/// Local minima of a sampled trace by three-point comparison with parabolic
/// refinement of the abscissa. Orders are assigned 1-based from the first
/// detected minimum; callers that know the absolute fringe order of the first
/// minimum shift them accordingly.
pub fn find_minima(trace: &[(f64, f64)]) -> Result<Vec<(f64, u32)>, FringeError> {
    if trace.len() < 3 {
        return Err(FringeError::TraceTooShort(trace.len()));
    }
    let mut out = Vec::new();
    let mut order = 1u32;
    for i in 1..trace.len() - 1 {
        let (t0, y0) = trace[i - 1];
        let (t1, y1) = trace[i];
        let (t2, y2) = trace[i + 1];
        if y1 < y0 && y1 < y2 {
            // parabola through the three points; vertex abscissa
            let d1 = (y1 - y0) / (t1 - t0);
            let d2 = (y2 - y1) / (t2 - t1);
            let curvature = (d2 - d1) / (t2 - t0);
            let t_min = if curvature > 0.0 {
                let v = 0.5 * (t0 + t1) - d1 / (2.0 * curvature);
                v.clamp(t0, t2)
            } else {
                t1
            };
            out.push((t_min, order));
            order += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{gauss_legendre, legendre_p};
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn trajectory_vector() {
        let pn = MomentumVector::new(0.0, 0.0, 14.8);
        let mu = 918.075;
        let r = r_n_vector(0.0, &pn, 12.0, mu).unwrap();
        assert!(rel(r.magnitude(), 12.0) < 1e-14);
        let r = r_n_vector(826.8, &pn, 12.0, mu).unwrap();
        assert!((r.magnitude() - 25.33).abs() < 0.01);
        // direction is always p̂_N
        let unit = r.normalized();
        assert!((unit.z - 1.0).abs() < 1e-14);
        let zero = MomentumVector::new(0.0, 0.0, 0.0);
        assert!(r_n_vector(0.0, &zero, 12.0, mu).is_err());
    }

    #[test]
    fn approx_phase_structure() {
        let mu = 918.075;
        let pn = MomentumVector::new(0.0, 0.0, 14.8);
        // perpendicular electron momentum: phase vanishes
        let pe_perp = MomentumVector::new(0.72, 0.0, 0.0);
        assert!(approx_phase(500.0, &pe_perp, &pn, 12.0, mu).unwrap().abs() < 1e-14);
        // derivative in t_c is p_e.p_N/μ exactly
        let pe = MomentumVector::new(0.1, 0.0, 0.7);
        let p1 = approx_phase(100.0, &pe, &pn, 12.0, mu).unwrap();
        let p2 = approx_phase(300.0, &pe, &pn, 12.0, mu).unwrap();
        assert!(rel((p2 - p1) / 200.0, pe.dot(&pn) / mu) < 1e-12);
    }

    #[test]
    fn approx_probability_zeros() {
        assert!(approx_probability(PI / 2.0, 0.0, 0.0, 0.72, 20.0).abs() < 1e-30);
        // interference minimum at p_e cosθ R_N = 2π
        let r_n = 2.0 * PI / 0.72;
        assert!(approx_probability(0.0, 0.0, 0.0, 0.72, r_n).abs() < 1e-25);
    }

    #[test]
    fn approx_minima_equally_spaced() {
        // closed form: spacing 2πμ/(p_e p_N cosθ_pe) in t_c
        let mu = 918.075;
        let (pe, pn) = (0.72, 14.8);
        let spacing = 2.0 * PI * mu / (pe * pn);
        let trace: Vec<(f64, f64)> = (0..4000)
            .map(|i| {
                let t = i as f64;
                let r_n = 12.0 + pn * t / mu;
                (t, approx_probability(0.0, 0.0, 0.0, pe, r_n))
            })
            .collect();
        let minima = find_minima(&trace).unwrap();
        assert!(minima.len() >= 6);
        for pair in minima.windows(2) {
            assert!(rel(pair[1].0 - pair[0].0, spacing) < 1e-4);
        }
    }

    // Gauss-Legendre projection of cos²θ [1 - cos(x cosθ)] onto P_l: the
    // oracle for the exact β formulas.
    fn betas_by_projection(x: f64) -> (f64, f64, f64) {
        let (u, w) = gauss_legendre(400);
        let project = |l: u32| -> f64 {
            (2.0 * l as f64 + 1.0) / 2.0
                * u.iter()
                    .zip(&w)
                    .map(|(&ui, &wi)| {
                        wi * ui * ui * (1.0 - (x * ui).cos()) * legendre_p(l, ui)
                    })
                    .sum::<f64>()
        };
        (project(0), project(2), project(4))
    }

    #[test]
    fn exact_betas_match_projection_oracle() {
        let mut x = 0.5;
        while x <= 200.0 {
            let (b0, b2, b4) = beta_coefficients(1.0, x, BetaForm::Exact).unwrap();
            let (q0, q2, q4) = betas_by_projection(x);
            assert!((b0 - q0).abs() < 1e-8, "x={x}");
            assert!((b2 - q2).abs() < 1e-8, "x={x}");
            assert!((b4 - q4).abs() < 1e-8, "x={x}");
            x += 7.3;
        }
    }

    #[test]
    fn betas_vanish_at_zero_argument() {
        // x -> 0: distribution is identically 0
        let (b0, b2, b4) = beta_coefficients(1.0, 1e-6, BetaForm::Exact).unwrap();
        assert!(b0.abs() < 1e-11 && b2.abs() < 1e-11 && b4.abs() < 1e-11);
        assert!(beta_coefficients(1.0, 0.0, BetaForm::Exact).is_err());
    }

    #[test]
    fn asymptotic_betas_converge() {
        let norm = |a: (f64, f64, f64)| (a.0 * a.0 + a.1 * a.1 + a.2 * a.2).sqrt();
        let diff = |x: f64| {
            let e = beta_coefficients(1.0, x, BetaForm::Exact).unwrap();
            let a = beta_coefficients(1.0, x, BetaForm::Asymptotic).unwrap();
            norm((e.0 - a.0, e.1 - a.1, e.2 - a.2)) / norm(e)
        };
        let d100 = diff(100.0);
        let d200 = diff(200.0);
        assert!(d100 < 0.05, "relative norm difference at x=100: {d100}");
        assert!(d200 < d100);
        // β4 asymptotic envelope: -9 sin(x)/x
        let (_, _, b4) = beta_coefficients(1.0, 300.0, BetaForm::Asymptotic).unwrap();
        assert!(rel(b4, -9.0 * (300.0_f64).sin() / 300.0) < 1e-14);
    }

    #[test]
    fn trajectory_inference() {
        let pts = infer_trajectory(&[(0.0, 1), (541.0, 2)], 0.72, 0.0).unwrap();
        assert!(rel(pts[0].r_n, 2.0 * PI / 0.72) < 1e-14);
        assert!((pts[0].r_n - 8.727).abs() < 1e-3);
        // doubling n doubles r
        assert!(rel(pts[1].r_n, 2.0 * pts[0].r_n) < 1e-14);
        assert!(infer_trajectory(&[(0.0, 1)], 0.72, PI / 2.0).is_err());
        assert!(infer_trajectory(&[(0.0, 0)], 0.72, 0.0).is_err());
    }

    #[test]
    fn minima_of_synthetic_signal() {
        let omega = 0.013;
        let trace: Vec<(f64, f64)> = (0..3000)
            .map(|i| {
                let t = i as f64 * 0.5;
                (t, (omega * t).sin().powi(2))
            })
            .collect();
        let minima = find_minima(&trace).unwrap();
        assert!(minima.len() >= 5);
        for (i, &(t, n)) in minima.iter().enumerate() {
            assert_eq!(n as usize, i + 1);
            let k = ((t * omega) / PI).round();
            assert!((t - k * PI / omega).abs() < 0.25, "t = {t}");
        }
    }

    #[test]
    fn minima_degenerate_traces() {
        let monotone: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        assert!(find_minima(&monotone).unwrap().is_empty());
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.0)).collect();
        assert!(find_minima(&flat).unwrap().is_empty());
        assert!(find_minima(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
    }
}
