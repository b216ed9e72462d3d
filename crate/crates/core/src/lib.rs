//! Closed-form pump–probe amplitudes for dissociative ionization of H2+,
//! with two-centre interference spectra, the Legendre-projected angular
//! form, and the leading non-Born-Oppenheimer corrections.

pub mod fringe;
pub mod nonbo;
pub mod quantum;
pub mod scan;
pub mod special;
pub mod units;

pub use fringe::{BetaForm, TrajectoryPoint};
pub use nonbo::{ElectronMassTerm, NonBoModel};
pub use quantum::{MomentumVector, Parity, PulseParams, WavePacketParams};
pub use scan::{Model, OutputFormat, ScanSpec, Scenario};
pub use units::PhysicalConstants;
