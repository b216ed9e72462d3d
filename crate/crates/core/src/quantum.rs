//! Physical amplitudes for dissociative ionization of H2+ in the
//! Born-Oppenheimer initial state: atomic photoionization amplitude,
//! dissociating nuclear wave packet, time/energy factor, final amplitude,
//! expanded interference probability, fixed-nuclei limits and
//! measured-momentum kinematics.
//!
//! All inputs and outputs are in atomic units. Every function here is pure;
//! grids may be evaluated in parallel without synchronization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use std::f64::consts::PI;

use crate::special::{self, gamma_complex, SpecialError};
use crate::units::PhysicalConstants;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("zero electron momentum: Coulomb parameter nu = 1/p_e diverges")]
    ZeroElectronMomentum,
    #[error("zero nuclear momentum")]
    ZeroNuclearMomentum,
    #[error("amplitude vanishes (e.p_e = 0): phase undefined")]
    UndefinedPhase,
    #[error("grid point coincides with a Coulomb singularity at z = {0}")]
    SingularGridPoint(f64),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// 3-component vector in atomic units. Used for momenta and for unit
/// polarization vectors alike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl MomentumVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        MomentumVector { x, y, z }
    }

    pub fn dot(&self, other: &MomentumVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn magnitude(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, s: f64) -> MomentumVector {
        MomentumVector::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn plus(&self, other: &MomentumVector) -> MomentumVector {
        MomentumVector::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn minus(&self, other: &MomentumVector) -> MomentumVector {
        MomentumVector::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn normalized(&self) -> MomentumVector {
        self.scaled(1.0 / self.magnitude())
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.magnitude() - 1.0).abs() <= tol
    }
}

/// Gaussian UV probe pulse: vector potential amplitude, polarization,
/// central frequency, envelope duration and delay of the envelope maximum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PulseParams {
    pub a0: f64,
    pub e_probe: MomentumVector,
    pub omega: f64,
    pub tau: f64,
    pub t_c: f64,
}

/// Dissociating nuclear wave packet launched at R_0 with central radial
/// momentum p0 and spatial width delta_r; c_n is the overall normalization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WavePacketParams {
    pub p0: f64,
    pub delta_r: f64,
    pub r0: f64,
    pub e_pump: MomentumVector,
    pub c_n: f64,
}

impl WavePacketParams {
    /// Builds the packet with c_n fixed by quadrature so that
    /// ∫|φ_N|² d³p = 1.
    pub fn normalized(p0: f64, delta_r: f64, r0: f64, e_pump: MomentumVector) -> Self {
        let c_n = normalization_cn(p0, delta_r);
        WavePacketParams { p0, delta_r, r0, e_pump, c_n }
    }
}

/// C_N such that ∫|φ_N|² d³p = 1, by 2-D Gauss-Legendre quadrature
/// (azimuthal integral is trivially 2π).
pub fn normalization_cn(p0: f64, delta_r: f64) -> f64 {
    let lo = (p0 - 12.0 / delta_r).max(0.0);
    let hi = p0 + 12.0 / delta_r;
    let radial = special::integrate(
        |p| (-delta_r * delta_r * (p - p0) * (p - p0)).exp(),
        lo,
        hi,
        200,
    );
    let angular = special::integrate(|u| u * u, -1.0, 1.0, 16);
    1.0 / (2.0 * PI * angular * radial).sqrt()
}

/// Electronic parity of the H2+ state the packet dissociates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Gerade,
    Ungerade,
}

impl Parity {
    /// +1 for gerade, -1 for ungerade: the sign in 1 ± cos(p_e.R) and the
    /// relative sign between the two emission pathways.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Gerade => 1.0,
            Parity::Ungerade => -1.0,
        }
    }
}

/// Exact hydrogenic one-photon ionization amplitude A_1s(p_e):
///
///   2^{3/2} (e.p_e)(1 - iν) / (π (1 + p_e²)²) · exp(-2ν arctan p_e) · N_ν*
///
/// with ν = 1/|p_e| and N_ν = exp(πν/2) Γ(1 + iν).
pub fn atomic_amplitude(
    p_e: &MomentumVector,
    e_probe: &MomentumVector,
) -> Result<Complex64, QuantumError> {
    let p = p_e.magnitude();
    if p == 0.0 {
        return Err(QuantumError::ZeroElectronMomentum);
    }
    let nu = 1.0 / p;
    let n_nu = (PI * nu / 2.0).exp() * gamma_complex(Complex64::new(1.0, nu))?;
    let polarization = e_probe.dot(p_e);
    let radial = 2.0_f64.powf(1.5) / (PI * (1.0 + p * p).powi(2)) * (-2.0 * nu * p.atan()).exp();
    Ok(Complex64::new(1.0, -nu) * polarization * radial * n_nu.conj())
}

/// arg A_1s(p_e); undefined (error) where the amplitude vanishes.
pub fn atomic_phase(
    p_e: &MomentumVector,
    e_probe: &MomentumVector,
) -> Result<f64, QuantumError> {
    if e_probe.dot(p_e) == 0.0 {
        return Err(QuantumError::UndefinedPhase);
    }
    Ok(atomic_amplitude(p_e, e_probe)?.arg())
}

/// Momentum-space nuclear wave packet
/// φ_N(p) = C_N (cos θ_p / p) exp(-ΔR²(p - p0)²/2) exp(i (p0 - p) R0),
/// θ_p measured from the pump polarization.
pub fn wavepacket_amplitude(
    p: &MomentumVector,
    wp: &WavePacketParams,
) -> Result<Complex64, QuantumError> {
    let mag = p.magnitude();
    if mag == 0.0 {
        return Err(QuantumError::ZeroNuclearMomentum);
    }
    let cos_theta = p.dot(&wp.e_pump) / mag;
    let gauss = (-(wp.delta_r * wp.delta_r) * (mag - wp.p0) * (mag - wp.p0) / 2.0).exp();
    let phase = Complex64::from_polar(1.0, (wp.p0 - mag) * wp.r0);
    Ok(phase * (wp.c_n * cos_theta / mag * gauss))
}

/// Energy mismatch f(p) = p_e²/2m'_e + p_N²/2μ + I_p - Ω - p²/2μ.
pub fn detuning_f(
    p: &MomentumVector,
    p_e: &MomentumVector,
    p_n: &MomentumVector,
    pulse: &PulseParams,
    k: &PhysicalConstants,
) -> f64 {
    p_e.dot(p_e) / (2.0 * k.m_e_prime) + p_n.dot(p_n) / (2.0 * k.mu) + k.i_p - pulse.omega
        - p.dot(p) / (2.0 * k.mu)
}

/// Time/energy factor a(p) = exp(i f(p) t_c - τ² f(p)²/2) φ_N(p).
pub fn time_factor_a(
    p: &MomentumVector,
    p_e: &MomentumVector,
    p_n: &MomentumVector,
    pulse: &PulseParams,
    wp: &WavePacketParams,
    k: &PhysicalConstants,
) -> Result<Complex64, QuantumError> {
    let f = detuning_f(p, p_e, p_n, pulse, k);
    let envelope = (-(pulse.tau * pulse.tau) * f * f / 2.0).exp();
    let oscillation = Complex64::from_polar(1.0, f * pulse.t_c);
    Ok(oscillation * envelope * wavepacket_amplitude(p, wp)?)
}

/// Recoil-shifted relative nuclear momenta p± = p_N ± p_e/2;
/// returns (p_plus, p_minus).
pub fn shifted_momenta(
    p_n: &MomentumVector,
    p_e: &MomentumVector,
) -> (MomentumVector, MomentumVector) {
    let half = p_e.scaled(0.5);
    (p_n.plus(&half), p_n.minus(&half))
}

/// Overall constant N_2 = κ A_0 (2π)² τ / (2^{3/2} m'_e c).
pub fn amplitude_norm_n2(pulse: &PulseParams, k: &PhysicalConstants) -> f64 {
    k.kappa * pulse.a0 * (2.0 * PI).powi(2) * pulse.tau / (2.0_f64.powf(1.5) * k.m_e_prime * k.c)
}

/// Final dissociative-ionization amplitude
/// A_fi = N_2 A_H(p_e) [a(p_-) ∓ a(p_+)], minus for ungerade, plus for gerade.
pub fn amplitude_fi(
    p_e: &MomentumVector,
    p_n: &MomentumVector,
    pulse: &PulseParams,
    wp: &WavePacketParams,
    parity: Parity,
    k: &PhysicalConstants,
) -> Result<Complex64, QuantumError> {
    let (p_plus, p_minus) = shifted_momenta(p_n, p_e);
    let a_minus = time_factor_a(&p_minus, p_e, p_n, pulse, wp, k)?;
    let a_plus = time_factor_a(&p_plus, p_e, p_n, pulse, wp, k)?;
    let a_h = atomic_amplitude(p_e, &pulse.e_probe)?;
    Ok(a_h * amplitude_norm_n2(pulse, k) * (a_minus + parity.sign() * a_plus))
}

/// Interference decomposition of |A_fi|²/N_2².
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbabilityTerms {
    pub total: f64,
    pub direct_terms: f64,
    pub cross_term: f64,
    /// Φ = arg a(p_-) - arg a(p_+); reduces to
    /// (|p_+| - |p_-|) R_0 + (p_e.p_N/μ) t_c for the Gaussian packet.
    pub phase: f64,
}

/// Probability split into direct pathway terms and the two-centre cross term:
/// total = |A_H|²(|a_-|² + |a_+|²) ± 2|A_H|²|a_+||a_-| cos Φ
/// (+ gerade, - ungerade).
pub fn probability_expanded(
    p_e: &MomentumVector,
    p_n: &MomentumVector,
    pulse: &PulseParams,
    wp: &WavePacketParams,
    parity: Parity,
    k: &PhysicalConstants,
) -> Result<ProbabilityTerms, QuantumError> {
    let (p_plus, p_minus) = shifted_momenta(p_n, p_e);
    let a_minus = time_factor_a(&p_minus, p_e, p_n, pulse, wp, k)?;
    let a_plus = time_factor_a(&p_plus, p_e, p_n, pulse, wp, k)?;
    let ah2 = atomic_amplitude(p_e, &pulse.e_probe)?.norm_sqr();
    let phase = (a_minus * a_plus.conj()).arg();
    let direct = ah2 * (a_minus.norm_sqr() + a_plus.norm_sqr());
    let cross = parity.sign() * 2.0 * ah2 * a_minus.norm() * a_plus.norm() * phase.cos();
    Ok(ProbabilityTerms {
        total: direct + cross,
        direct_terms: direct,
        cross_term: cross,
        phase,
    })
}

/// Closed form of the cross-term phase for the Gaussian packet,
/// Φ = (|p_+| - |p_-|) R_0 + (p_e.p_N/μ) t_c. Kept as a cross-check of the
/// exact arg-based phase.
pub fn gaussian_phase_closed_form(
    p_e: &MomentumVector,
    p_n: &MomentumVector,
    r0: f64,
    t_c: f64,
    mu: f64,
) -> f64 {
    let (p_plus, p_minus) = shifted_momenta(p_n, p_e);
    (p_plus.magnitude() - p_minus.magnitude()) * r0 + p_e.dot(p_n) / mu * t_c
}

/// Fixed-nuclei probability [1 ± cos(p_e.R)] |A_H(p_e)|².
pub fn fixed_nuclei_probability(
    p_e: &MomentumVector,
    r_vec: &MomentumVector,
    e_probe: &MomentumVector,
    parity: Parity,
) -> Result<f64, QuantumError> {
    let ah2 = atomic_amplitude(p_e, e_probe)?.norm_sqr();
    Ok((1.0 + parity.sign() * p_e.dot(r_vec).cos()) * ah2)
}

/// Orientation-averaged interference factor χ̄ = 1 ± sin(p_e r)/(p_e r).
pub fn chi_factor(p_e_mag: f64, r: f64, parity: Parity) -> f64 {
    let x = p_e_mag * r;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    };
    1.0 + parity.sign() * sinc
}

/// Momenta entering the interference formulas from the measured single-proton
/// and electron momenta (zero-temperature COM): returns (p_N, p_+, p_-).
pub fn kinematics_from_measured(
    p_1: &MomentumVector,
    p_e: &MomentumVector,
) -> (MomentumVector, MomentumVector, MomentumVector) {
    let p_n = p_1.plus(&p_e.scaled(0.5));
    (p_n, p_1.plus(p_e), *p_1)
}

/// On-axis electronic density |φ_el(z)|² of the two-centre 1s combination and
/// the two-centre Coulomb potential on the same grid.
pub fn electronic_density_profile(
    z_grid: &[f64],
    r: f64,
    parity: Parity,
) -> Result<(Vec<f64>, Vec<f64>), QuantumError> {
    let psi_1s = |d: f64| (-d.abs()).exp() / PI.sqrt();
    let mut density = Vec::with_capacity(z_grid.len());
    let mut potential = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let d_left = z + r / 2.0;
        let d_right = z - r / 2.0;
        if d_left == 0.0 || d_right == 0.0 {
            return Err(QuantumError::SingularGridPoint(z));
        }
        let phi = (psi_1s(d_left) + parity.sign() * psi_1s(d_right)) / 2.0_f64.sqrt();
        density.push(phi * phi);
        potential.push(-1.0 / d_right.abs() - 1.0 / d_left.abs() + 1.0 / r);
    }
    Ok((density, potential))
}

/// Plane-wave validity ratio (p0²/2μ) / (1/(R_0 + p0 t_c/μ)); values ≫ 1
/// mean the Coulomb repulsion is negligible against the dissociation energy.
pub fn plane_wave_validity(wp: &WavePacketParams, t_c: f64, k: &PhysicalConstants) -> f64 {
    wp.p0 * wp.p0 / (2.0 * k.mu) * (wp.r0 + wp.p0 * t_c / k.mu)
}
