//! Physical constants, reduced masses and unit conversions.
//!
//! Everything downstream works in atomic units (ħ = mₑ = e = 1, energies in
//! hartree, lengths in bohr). Laboratory inputs (nm, fs) are converted here
//! and nowhere else.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1 bohr in nanometres.
pub const BOHR_IN_NM: f64 = 0.0529177;
/// 1 femtosecond in atomic time units.
pub const FS_IN_AU: f64 = 41.3414;
/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT_AU: f64 = 137.036;
/// Proton mass in electron masses.
pub const PROTON_MASS_AU: f64 = 1836.15;

#[derive(Debug, Error, PartialEq)]
pub enum UnitsError {
    #[error("wavelength must be positive, got {0} nm")]
    NonPositiveWavelength(f64),
    #[error("pulse duration must be positive, got {0}")]
    NonPositiveDuration(f64),
}

/// Mass constants of the p-p-e three-body problem, in atomic units.
///
/// `m_e_prime`, `mu` and `kappa` belong to the Jacobi frame with the electron
/// measured from the nuclear midpoint; `m_e_dprime`, `mu_dprime` and `alpha`
/// to the frame with the electron measured from one proton (used beyond the
/// Born-Oppenheimer approximation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub m_e: f64,
    pub m_p: f64,
    pub c: f64,
    /// Ionization potential of the H(1s) fragment, hartree.
    pub i_p: f64,
    /// Electron vs two-proton reduced mass, 2·m_p·m_e/(2m_p + m_e).
    pub m_e_prime: f64,
    /// Proton-proton reduced mass, m_p/2.
    pub mu: f64,
    /// Velocity-gauge coupling factor, 1 + m_e/(2m_p + m_e).
    pub kappa: f64,
    /// Electron reduced mass in the hydrogen atom, m_p·m_e/(m_p + m_e).
    pub m_e_dprime: f64,
    /// Proton vs hydrogen-atom reduced mass, m_p(m_p + m_e)/(2m_p + m_e).
    pub mu_dprime: f64,
    /// m_e/(m_e + m_p).
    pub alpha: f64,
}

/// Builds the constant set with m_p = 1836.15, I_p = 0.5 hartree.
pub fn make_constants() -> PhysicalConstants {
    PhysicalConstants::with_ionization_potential(0.5)
}

impl PhysicalConstants {
    /// Same derived masses, custom ionization potential (for sensitivity studies).
    pub fn with_ionization_potential(i_p: f64) -> Self {
        let m_e = 1.0;
        let m_p = PROTON_MASS_AU;
        PhysicalConstants {
            m_e,
            m_p,
            c: SPEED_OF_LIGHT_AU,
            i_p,
            m_e_prime: 2.0 * m_p * m_e / (2.0 * m_p + m_e),
            mu: m_p / 2.0,
            kappa: 1.0 + m_e / (2.0 * m_p + m_e),
            m_e_dprime: m_p * m_e / (m_p + m_e),
            mu_dprime: m_p * (m_p + m_e) / (2.0 * m_p + m_e),
            alpha: m_e / (m_e + m_p),
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        make_constants()
    }
}

/// Probe wavelength in nm to central frequency Ω in a.u.
pub fn wavelength_nm_to_omega(lambda_nm: f64) -> Result<f64, UnitsError> {
    if lambda_nm.is_nan() || lambda_nm <= 0.0 {
        return Err(UnitsError::NonPositiveWavelength(lambda_nm));
    }
    let lambda_au = lambda_nm / BOHR_IN_NM;
    Ok(2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_AU / lambda_au)
}

/// Inverse of [`wavelength_nm_to_omega`].
pub fn omega_to_wavelength_nm(omega: f64) -> Result<f64, UnitsError> {
    if omega.is_nan() || omega <= 0.0 {
        return Err(UnitsError::NonPositiveWavelength(omega));
    }
    Ok(2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_AU / omega * BOHR_IN_NM)
}

/// Intensity-FWHM pulse duration in fs to the Gaussian envelope parameter τ
/// in a.u., via τ_FWHM = 2√(ln 2)·τ.
pub fn fwhm_fs_to_tau_au(tau_fwhm_fs: f64) -> Result<f64, UnitsError> {
    if tau_fwhm_fs.is_nan() || tau_fwhm_fs <= 0.0 {
        return Err(UnitsError::NonPositiveDuration(tau_fwhm_fs));
    }
    Ok(tau_fwhm_fs / (2.0 * f64::sqrt(f64::ln(2.0))) * FS_IN_AU)
}
