//! Declarative scenario runner: loads a JSON scan spec (or a named figure
//! preset), evaluates probability grids in parallel over momenta, angles and
//! delays, and writes CSV/JSON plus a metadata sidecar.
//!
//! All internal computation is in atomic units; config values accept
//! explicit nm/fs/deg suffixes and are converted on load.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::fringe::{self, BetaForm, FringeError};
use crate::nonbo::{NonBoError, NonBoModel};
use crate::quantum::{
    self, MomentumVector, Parity, PulseParams, QuantumError, WavePacketParams,
};
use crate::units::{
    self, fwhm_fs_to_tau_au, wavelength_nm_to_omega, PhysicalConstants,
    BOHR_IN_NM, FS_IN_AU,
};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("schema error at `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unknown preset `{0}` (expected fig3, fig4, fig5 or fig6)")]
    UnknownPreset(String),
    #[error("scenario `{scenario:?}` is incompatible with model `{model:?}`")]
    Incompatible {
        scenario: Scenario,
        model: Model,
    },
    #[error("grid produced a non-finite value at row {0}")]
    NonFiniteRow(usize),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    NonBo(#[from] NonBoError),
    #[error(transparent)]
    Fringe(#[from] FringeError),
    #[error(transparent)]
    Units(#[from] units::UnitsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    AngularVsDelay,
    ElectronSpectrumVsDelay,
    ProtonSpectrumVsDelay,
    FixedNuclei,
    BetaTrace,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    BoExact,
    BoApprox,
    Nonbo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A config value: either a bare number (atomic units) or a string with an
/// explicit unit suffix, e.g. "60 nm", "2.4 fs", "30 deg", "12 bohr".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    WithUnit(String),
}

/// Physical dimension a variable is parsed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Time,
    Length,
    Angle,
    /// Anything quoted directly in a.u. (momenta, energies, amplitudes).
    Atomic,
}

fn parse_quantity(q: &Quantity, dim: Dimension, field: &str) -> Result<f64, ScanError> {
    let (value, unit) = match q {
        Quantity::Number(v) => (*v, None),
        Quantity::WithUnit(s) => {
            let s = s.trim();
            let split = s
                .find(|c: char| c.is_ascii_alphabetic())
                .unwrap_or(s.len());
            let (num, unit) = s.split_at(split);
            let v: f64 = num.trim().parse().map_err(|_| ScanError::Field {
                field: field.to_string(),
                message: format!("cannot parse number from `{s}`"),
            })?;
            (v, Some(unit.trim().to_ascii_lowercase()))
        }
    };
    let unit = unit.as_deref();
    let converted = match (dim, unit) {
        (_, None) | (_, Some("au") | Some("a.u.") | Some("a.u")) => value,
        (Dimension::Time, Some("fs")) => value * FS_IN_AU,
        (Dimension::Length, Some("nm")) => value / BOHR_IN_NM,
        (Dimension::Length, Some("bohr")) => value,
        (Dimension::Angle, Some("rad")) => value,
        (Dimension::Angle, Some("deg")) => value * PI / 180.0,
        (_, Some(u)) => {
            return Err(ScanError::Field {
                field: field.to_string(),
                message: format!("unit `{u}` not valid here"),
            })
        }
    };
    Ok(converted)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Geometry {
    #[serde(default = "default_z")]
    pub e_pump: [f64; 3],
    #[serde(default = "default_z")]
    pub e_probe: [f64; 3],
    #[serde(default)]
    pub p_n_dir: Option<[f64; 3]>,
    #[serde(default)]
    pub p1_dir: Option<[f64; 3]>,
}

fn default_z() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            e_pump: default_z(),
            e_probe: default_z(),
            p_n_dir: None,
            p1_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: String,
    pub min: Quantity,
    pub max: Quantity,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default = "default_out_path")]
    pub path: String,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

fn default_out_path() -> String {
    "scan.csv".to_string()
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            path: default_out_path(),
            format: default_format(),
        }
    }
}

/// Declarative scenario description, deserialized from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    pub scenario: Scenario,
    #[serde(default = "default_model")]
    pub model: Model,
    #[serde(default = "default_parity")]
    pub parity: Parity,
    #[serde(default)]
    pub geometry: Geometry,
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub fixed: BTreeMap<String, Quantity>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_version() -> u32 {
    1
}
fn default_model() -> Model {
    Model::BoExact
}
fn default_parity() -> Parity {
    Parity::Ungerade
}

const SWEEPABLE: &[(&str, Dimension)] = &[
    ("t_c", Dimension::Time),
    ("theta_e", Dimension::Angle),
    ("p_e", Dimension::Atomic),
    ("p_1", Dimension::Atomic),
    ("p_n", Dimension::Atomic),
    ("p0", Dimension::Atomic),
    ("delta_r", Dimension::Length),
    ("r0", Dimension::Length),
    ("r", Dimension::Length),
];

const FIXED_ONLY: &[(&str, Dimension)] = &[
    ("lambda_probe", Dimension::Length),
    ("omega", Dimension::Atomic),
    ("tau_fwhm", Dimension::Time),
    ("tau", Dimension::Time),
    ("a0", Dimension::Atomic),
    ("i_p", Dimension::Atomic),
];

fn dimension_of(name: &str) -> Option<Dimension> {
    SWEEPABLE
        .iter()
        .chain(FIXED_ONLY)
        .find(|(n, _)| *n == name)
        .map(|(_, d)| *d)
}

impl ScanSpec {
    /// Load and validate a spec from a JSON file.
    pub fn load(path: &Path) -> Result<ScanSpec, ScanError> {
        let text = fs::read_to_string(path).map_err(|source| ScanError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut spec: ScanSpec =
            serde_json::from_str(&text).map_err(|e| ScanError::Schema(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Named figure presets; "fig3" is the default parameter set.
    pub fn preset(name: &str) -> Result<ScanSpec, ScanError> {
        let fs_80 = Quantity::WithUnit("80 fs".into());
        let mut spec = match name {
            "fig3" | "fig4" => ScanSpec {
                version: 1,
                scenario: Scenario::AngularVsDelay,
                model: Model::BoExact,
                parity: Parity::Ungerade,
                geometry: if name == "fig3" {
                    Geometry {
                        p_n_dir: Some(default_z()),
                        ..Geometry::default()
                    }
                } else {
                    // perpendicular polarizations, p_N along the pump axis
                    Geometry {
                        e_pump: [1.0, 0.0, 0.0],
                        e_probe: default_z(),
                        p_n_dir: Some([1.0, 0.0, 0.0]),
                        p1_dir: None,
                    }
                },
                axes: vec![
                    AxisSpec {
                        name: "theta_e".into(),
                        min: Quantity::Number(-PI / 2.0),
                        max: Quantity::Number(PI / 2.0),
                        count: 61,
                    },
                    AxisSpec {
                        name: "t_c".into(),
                        min: Quantity::Number(0.0),
                        max: fs_80.clone(),
                        count: 241,
                    },
                ],
                fixed: BTreeMap::new(),
                output: OutputSpec {
                    path: format!("{name}.csv"),
                    ..OutputSpec::default()
                },
            },
            "fig5" => {
                let mut fixed = BTreeMap::new();
                fixed.insert("lambda_probe".into(), Quantity::WithUnit("15 nm".into()));
                fixed.insert("tau_fwhm".into(), Quantity::WithUnit("0.24 fs".into()));
                fixed.insert("delta_r".into(), Quantity::Number(1.0));
                fixed.insert("theta_e".into(), Quantity::Number(0.0));
                ScanSpec {
                    version: 1,
                    scenario: Scenario::ElectronSpectrumVsDelay,
                    model: Model::BoExact,
                    parity: Parity::Ungerade,
                    geometry: Geometry {
                        p_n_dir: Some(default_z()),
                        ..Geometry::default()
                    },
                    axes: vec![
                        AxisSpec {
                            name: "p_e".into(),
                            min: Quantity::Number(1.8),
                            max: Quantity::Number(2.7),
                            count: 301,
                        },
                        AxisSpec {
                            name: "t_c".into(),
                            min: Quantity::Number(0.0),
                            max: fs_80,
                            count: 161,
                        },
                    ],
                    fixed,
                    output: OutputSpec {
                        path: "fig5.csv".into(),
                        ..OutputSpec::default()
                    },
                }
            }
            "fig6" => {
                let mut fixed = BTreeMap::new();
                fixed.insert("p_e".into(), Quantity::Number(0.72));
                fixed.insert("theta_e".into(), Quantity::Number(0.0));
                ScanSpec {
                    version: 1,
                    scenario: Scenario::ProtonSpectrumVsDelay,
                    model: Model::BoExact,
                    parity: Parity::Ungerade,
                    geometry: Geometry {
                        p_n_dir: Some(default_z()),
                        p1_dir: Some(default_z()),
                        ..Geometry::default()
                    },
                    axes: vec![
                        AxisSpec {
                            name: "p_1".into(),
                            min: Quantity::Number(13.2),
                            max: Quantity::Number(15.6),
                            count: 401,
                        },
                        AxisSpec {
                            name: "t_c".into(),
                            min: Quantity::Number(0.0),
                            max: fs_80,
                            count: 161,
                        },
                    ],
                    fixed,
                    output: OutputSpec {
                        path: "fig6.csv".into(),
                        ..OutputSpec::default()
                    },
                }
            }
            other => return Err(ScanError::UnknownPreset(other.to_string())),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&mut self) -> Result<(), ScanError> {
        if self.version != 1 {
            return Err(ScanError::Field {
                field: "version".into(),
                message: format!("unsupported schema version {}", self.version),
            });
        }
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(ScanError::Field {
                field: "axes".into(),
                message: format!("need 1 or 2 axes, got {}", self.axes.len()),
            });
        }
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.count < 2 {
                return Err(ScanError::Field {
                    field: format!("axes[{i}].count"),
                    message: "axis count must be >= 2".into(),
                });
            }
            if !SWEEPABLE.iter().any(|(n, _)| *n == axis.name) {
                return Err(ScanError::Field {
                    field: format!("axes[{i}].name"),
                    message: format!("`{}` is not a sweepable variable", axis.name),
                });
            }
            if self.fixed.contains_key(&axis.name) {
                return Err(ScanError::Field {
                    field: format!("axes[{i}].name"),
                    message: format!("`{}` is both swept and fixed", axis.name),
                });
            }
        }
        if self.axes.len() == 2 && self.axes[0].name == self.axes[1].name {
            return Err(ScanError::Field {
                field: "axes".into(),
                message: "the two axes sweep the same variable".into(),
            });
        }
        for key in self.fixed.keys() {
            if dimension_of(key).is_none() {
                return Err(ScanError::Field {
                    field: format!("fixed.{key}"),
                    message: "unknown variable".into(),
                });
            }
        }
        for (name, v) in [
            ("geometry.e_pump", &mut self.geometry.e_pump),
            ("geometry.e_probe", &mut self.geometry.e_probe),
        ] {
            normalize_unit(v, name)?;
        }
        if let Some(v) = self.geometry.p_n_dir.as_mut() {
            normalize_unit(v, "geometry.p_n_dir")?;
        }
        if let Some(v) = self.geometry.p1_dir.as_mut() {
            normalize_unit(v, "geometry.p1_dir")?;
        }
        if self.scenario == Scenario::BetaTrace && self.model == Model::Nonbo {
            return Err(ScanError::Incompatible {
                scenario: self.scenario,
                model: self.model,
            });
        }
        if self.model == Model::Nonbo && self.parity == Parity::Gerade {
            return Err(ScanError::Field {
                field: "parity".into(),
                message: "the non-BO initial state is constructed ungerade".into(),
            });
        }
        if self.scenario == Scenario::ProtonSpectrumVsDelay && self.geometry.p1_dir.is_none() {
            self.geometry.p1_dir = Some(self.geometry.p_n_dir.unwrap_or(default_z()));
        }
        Ok(())
    }
}

fn normalize_unit(v: &mut [f64; 3], field: &str) -> Result<(), ScanError> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !norm.is_finite() || norm <= 1e-12 {
        return Err(ScanError::Field {
            field: field.to_string(),
            message: "polarization/direction vector must be nonzero and finite".into(),
        });
    }
    for c in v.iter_mut() {
        *c /= norm;
    }
    Ok(())
}

/// Run metadata attached to every result.
#[derive(Debug, Clone, Serialize)]
pub struct ScanMetadata {
    pub version: u32,
    pub scenario: Scenario,
    pub model: Model,
    pub parity: Parity,
    pub constants: PhysicalConstants,
    pub c_n: f64,
    pub omega: f64,
    pub tau: f64,
    pub a0: f64,
    /// κ m''_e / m'_e: the Ñ_2/N_2 normalization ratio of the non-BO route
    /// (identically 1 for these masses).
    pub nonbo_norm_ratio: f64,
    pub axis_counts: Vec<usize>,
    pub elapsed_ms: u128,
}

/// Tabulated probability grid: one row per grid point, axis values first.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub axis_names: Vec<String>,
    pub value_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: ScanMetadata,
}

struct Context {
    spec: ScanSpec,
    k: PhysicalConstants,
    omega: f64,
    tau: f64,
    a0: f64,
    base: BTreeMap<String, f64>,
    base_c_n: f64,
    e_pump: MomentumVector,
    e_probe: MomentumVector,
    p_n_dir: MomentumVector,
    p1_dir: MomentumVector,
}

fn vec3(v: [f64; 3]) -> MomentumVector {
    MomentumVector::new(v[0], v[1], v[2])
}

impl Context {
    fn build(spec: &ScanSpec) -> Result<Context, ScanError> {
        let fixed = &spec.fixed;
        let get = |name: &str| -> Result<Option<f64>, ScanError> {
            match fixed.get(name) {
                Some(q) => {
                    let dim = dimension_of(name).expect("validated");
                    Ok(Some(parse_quantity(q, dim, &format!("fixed.{name}"))?))
                }
                None => Ok(None),
            }
        };
        let i_p = get("i_p")?.unwrap_or(0.5);
        let k = PhysicalConstants::with_ionization_potential(i_p);
        // Ω: explicit omega wins, then lambda_probe, then the fig3 default 60 nm
        let omega = match get("omega")? {
            Some(w) => w,
            None => match fixed.get("lambda_probe") {
                Some(q) => {
                    let lambda_bohr =
                        parse_quantity(q, Dimension::Length, "fixed.lambda_probe")?;
                    wavelength_nm_to_omega(lambda_bohr * BOHR_IN_NM)?
                }
                None => wavelength_nm_to_omega(60.0)?,
            },
        };
        // τ: explicit tau wins over tau_fwhm; default FWHM 2.4 fs
        let tau = match get("tau")? {
            Some(t) => t,
            None => match get("tau_fwhm")? {
                Some(fwhm_au) => fwhm_au / (2.0 * f64::sqrt(f64::ln(2.0))),
                None => fwhm_fs_to_tau_au(2.4)?,
            },
        };
        let a0 = get("a0")?.unwrap_or(1.0);

        let mut base = BTreeMap::new();
        let defaults: &[(&str, f64)] = &[
            ("t_c", 0.0),
            ("theta_e", 0.0),
            ("p_e", 0.72),
            ("p_n", 14.8),
            ("p_1", 14.44),
            ("p0", 14.8),
            ("delta_r", 3.0),
            ("r0", 12.0),
            ("r", 12.0),
        ];
        for &(name, default) in defaults {
            base.insert(name.to_string(), get(name)?.unwrap_or(default));
        }
        let base_c_n = quantum::normalization_cn(base["p0"], base["delta_r"]);
        let p_n_dir = vec3(spec.geometry.p_n_dir.unwrap_or(default_z()));
        let p1_dir = vec3(spec.geometry.p1_dir.unwrap_or(spec.geometry.p_n_dir.unwrap_or(default_z())));
        Ok(Context {
            spec: spec.clone(),
            k,
            omega,
            tau,
            a0,
            base,
            base_c_n,
            e_pump: vec3(spec.geometry.e_pump),
            e_probe: vec3(spec.geometry.e_probe),
            p_n_dir,
            p1_dir,
        })
    }

    /// Electron momentum vector at angle theta_e from e_probe, rotated within
    /// the plane spanned by e_probe and the nuclear direction (or any
    /// orthogonal direction when the two are parallel).
    fn electron_vector(&self, mag: f64, theta_e: f64) -> MomentumVector {
        let e = self.e_probe;
        let mut perp = self.p_n_dir.minus(&e.scaled(self.p_n_dir.dot(&e)));
        if perp.magnitude() < 1e-9 {
            let trial = MomentumVector::new(1.0, 0.0, 0.0);
            perp = trial.minus(&e.scaled(trial.dot(&e)));
            if perp.magnitude() < 1e-9 {
                let trial = MomentumVector::new(0.0, 1.0, 0.0);
                perp = trial.minus(&e.scaled(trial.dot(&e)));
            }
        }
        let perp = perp.normalized();
        e.scaled(theta_e.cos()).plus(&perp.scaled(theta_e.sin())).scaled(mag)
    }

    fn evaluate(&self, vars: &BTreeMap<String, f64>) -> Result<Vec<f64>, ScanError> {
        let v = |name: &str| vars[name];
        match self.spec.scenario {
            Scenario::BetaTrace => {
                let r_n = v("r0") + v("p_n") * v("t_c") / self.k.mu;
                let form = match self.spec.model {
                    Model::BoExact => BetaForm::Exact,
                    Model::BoApprox => BetaForm::Asymptotic,
                    Model::Nonbo => unreachable!("rejected in validate"),
                };
                let (b0, b2, b4) = fringe::beta_coefficients(v("p_e"), r_n, form)?;
                Ok(vec![b0, b2, b4])
            }
            Scenario::FixedNuclei => {
                let p_e = self.electron_vector(v("p_e"), v("theta_e"));
                let r_vec = self.p_n_dir.scaled(v("r"));
                let total = quantum::fixed_nuclei_probability(
                    &p_e,
                    &r_vec,
                    &self.e_probe,
                    self.spec.parity,
                )?;
                let direct =
                    quantum::atomic_amplitude(&p_e, &self.e_probe)?.norm_sqr();
                Ok(vec![total, direct, total - direct, p_e.dot(&r_vec)])
            }
            _ => self.evaluate_dynamic(vars),
        }
    }

    fn evaluate_dynamic(&self, vars: &BTreeMap<String, f64>) -> Result<Vec<f64>, ScanError> {
        let v = |name: &str| vars[name];
        let pulse = PulseParams {
            a0: self.a0,
            e_probe: self.e_probe,
            omega: self.omega,
            tau: self.tau,
            t_c: v("t_c"),
        };
        let c_n = if v("p0") == self.base["p0"] && v("delta_r") == self.base["delta_r"] {
            self.base_c_n
        } else {
            quantum::normalization_cn(v("p0"), v("delta_r"))
        };
        let wp = WavePacketParams {
            p0: v("p0"),
            delta_r: v("delta_r"),
            r0: v("r0"),
            e_pump: self.e_pump,
            c_n,
        };
        let p_e = self.electron_vector(v("p_e"), v("theta_e"));
        let p_n = if self.spec.scenario == Scenario::ProtonSpectrumVsDelay {
            let p_1 = self.p1_dir.scaled(v("p_1"));
            let (p_n, _, _) = quantum::kinematics_from_measured(&p_1, &p_e);
            p_n
        } else {
            self.p_n_dir.scaled(v("p_n"))
        };
        match self.spec.model {
            Model::BoExact => {
                let t = quantum::probability_expanded(
                    &p_e, &p_n, &pulse, &wp, self.spec.parity, &self.k,
                )?;
                Ok(vec![t.total, t.direct_terms, t.cross_term, t.phase])
            }
            Model::Nonbo => {
                let t = NonBoModel::physical(&self.k)
                    .probability_expanded(&p_e, &p_n, &pulse, &wp)?;
                Ok(vec![t.total, t.direct_terms, t.cross_term, t.phase])
            }
            Model::BoApprox => {
                let pe_mag = p_e.magnitude();
                let pn_mag = p_n.magnitude();
                let theta_e = v("theta_e");
                let cos_pe = p_e.dot(&p_n) / (pe_mag * pn_mag);
                let theta_pe = cos_pe.clamp(-1.0, 1.0).acos();
                let cos_p = p_n.dot(&self.e_pump) / pn_mag;
                let theta_p = cos_p.clamp(-1.0, 1.0).acos();
                let r_n = v("r0") + pn_mag * v("t_c") / self.k.mu;
                let total =
                    fringe::approx_probability(theta_e, theta_pe, theta_p, pe_mag, r_n);
                let envelope = theta_e.cos().powi(2) * theta_p.cos().powi(2);
                let direct = envelope / 2.0;
                let phase = pe_mag * theta_pe.cos() * r_n;
                Ok(vec![total, direct, total - direct, phase])
            }
        }
    }
}

fn axis_values(axis: &AxisSpec) -> Result<Vec<f64>, ScanError> {
    let dim = dimension_of(&axis.name).expect("validated");
    let min = parse_quantity(&axis.min, dim, &format!("axes.{}.min", axis.name))?;
    let max = parse_quantity(&axis.max, dim, &format!("axes.{}.max", axis.name))?;
    let n = axis.count;
    Ok((0..n)
        .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Evaluate the full grid. Grid points are independent; evaluation runs on
/// the current rayon pool and gathers by grid index, so the output is
/// identical for any worker count.
pub fn run_scan(spec: &ScanSpec) -> Result<ScanResult, ScanError> {
    let mut spec = spec.clone();
    spec.validate()?;
    let started = Instant::now();
    let ctx = Context::build(&spec)?;
    let grids: Vec<Vec<f64>> = spec
        .axes
        .iter()
        .map(axis_values)
        .collect::<Result<_, _>>()?;
    let counts: Vec<usize> = grids.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();

    let value_names: Vec<String> = match spec.scenario {
        Scenario::BetaTrace => vec!["beta0".into(), "beta2".into(), "beta4".into()],
        _ => vec![
            "total".into(),
            "direct".into(),
            "cross".into(),
            "phase".into(),
        ],
    };

    let rows: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            // row-major: the last axis varies fastest
            let mut vars = ctx.base.clone();
            let mut axis_vals = Vec::with_capacity(grids.len());
            let mut rem = idx;
            for (g, axis) in grids.iter().zip(&spec.axes).rev() {
                let i = rem % g.len();
                rem /= g.len();
                axis_vals.push((axis.name.clone(), g[i]));
            }
            axis_vals.reverse();
            for (name, value) in &axis_vals {
                vars.insert(name.clone(), *value);
            }
            let values = ctx.evaluate(&vars)?;
            let mut row: Vec<f64> = axis_vals.iter().map(|(_, v)| *v).collect();
            row.extend(values);
            Ok(row)
        })
        .collect::<Result<_, ScanError>>()?;

    for (i, row) in rows.iter().enumerate() {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(ScanError::NonFiniteRow(i));
        }
    }

    let metadata = ScanMetadata {
        version: spec.version,
        scenario: spec.scenario,
        model: spec.model,
        parity: spec.parity,
        constants: ctx.k,
        c_n: ctx.base_c_n,
        omega: ctx.omega,
        tau: ctx.tau,
        a0: ctx.a0,
        nonbo_norm_ratio: ctx.k.kappa * ctx.k.m_e_dprime / ctx.k.m_e_prime,
        axis_counts: counts,
        elapsed_ms: started.elapsed().as_millis(),
    };
    Ok(ScanResult {
        axis_names: spec.axes.iter().map(|a| a.name.clone()).collect(),
        value_names,
        rows,
        metadata,
    })
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the result as CSV or JSON plus a `<path>.meta.json` sidecar.
/// Returns the paths written.
pub fn write_result(
    result: &ScanResult,
    format: OutputFormat,
    path: &Path,
) -> Result<Vec<PathBuf>, ScanError> {
    let io_err = |source| ScanError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut written = Vec::new();
    match format {
        OutputFormat::Csv => {
            let mut buf = String::new();
            buf.push_str("# twocentre scan result\n");
            buf.push_str(&format!("# scenario={:?}\n", result.metadata.scenario));
            buf.push_str(&format!("# model={:?}\n", result.metadata.model));
            buf.push_str(&format!("# parity={:?}\n", result.metadata.parity));
            buf.push_str(&format!("# c_n={}\n", fmt_float(result.metadata.c_n)));
            buf.push_str(&format!("# omega={}\n", fmt_float(result.metadata.omega)));
            buf.push_str(&format!("# tau={}\n", fmt_float(result.metadata.tau)));
            buf.push_str(&format!("# a0={}\n", fmt_float(result.metadata.a0)));
            let header: Vec<&str> = result
                .axis_names
                .iter()
                .chain(result.value_names.iter())
                .map(String::as_str)
                .collect();
            buf.push_str(&header.join(","));
            buf.push('\n');
            for row in &result.rows {
                let cells: Vec<String> = row.iter().copied().map(fmt_float).collect();
                buf.push_str(&cells.join(","));
                buf.push('\n');
            }
            let mut file = fs::File::create(path).map_err(io_err)?;
            file.write_all(buf.as_bytes()).map_err(io_err)?;
            written.push(path.to_path_buf());
        }
        OutputFormat::Json => {
            let doc = json!({
                "axes": result.axis_names,
                "values": result.value_names,
                "rows": result.rows,
                "metadata": result.metadata,
            });
            let file = fs::File::create(path).map_err(io_err)?;
            serde_json::to_writer_pretty(file, &doc)
                .map_err(|e| ScanError::Schema(e.to_string()))?;
            written.push(path.to_path_buf());
        }
    }
    let meta_path = PathBuf::from(format!("{}.meta.json", path.display()));
    let meta_file = fs::File::create(&meta_path).map_err(|source| ScanError::Io {
        path: meta_path.clone(),
        source,
    })?;
    serde_json::to_writer_pretty(meta_file, &result.metadata)
        .map_err(|e| ScanError::Schema(e.to_string()))?;
    written.push(meta_path);
    Ok(written)
}

/// Parse a CSV written by [`write_result`] back into (header, rows); `#`
/// comment lines are skipped.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), ScanError> {
    let text = fs::read_to_string(path).map_err(|source| ScanError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| ScanError::Schema("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| ScanError::Schema(format!("bad CSV value: {e}")))?);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::make_constants;

    #[test]
    fn preset_fig3_parameters() {
        let spec = ScanSpec::preset("fig3").unwrap();
        let ctx = Context::build(&spec).unwrap();
        assert!((ctx.omega - 0.7594).abs() < 1e-4);
        assert!((ctx.tau - 59.59).abs() < 0.01);
        assert_eq!(ctx.base["p_n"], 14.8);
        assert_eq!(ctx.base["p0"], 14.8);
        assert_eq!(ctx.base["p_e"], 0.72);
        assert_eq!(ctx.base["delta_r"], 3.0);
        assert_eq!(ctx.base["r0"], 12.0);
        // parallel geometry
        assert_eq!(ctx.e_pump, ctx.e_probe);
        assert_eq!(ctx.p_n_dir, ctx.e_probe);
    }

    #[test]
    fn preset_fig5_parameters() {
        let spec = ScanSpec::preset("fig5").unwrap();
        let ctx = Context::build(&spec).unwrap();
        assert!((ctx.omega - 3.0375556).abs() < 1e-6);
        assert!((ctx.tau - 5.959).abs() < 1e-3);
        assert_eq!(ctx.base["delta_r"], 1.0);
        assert_eq!(ctx.base["theta_e"], 0.0);
        assert_eq!(spec.axes[0].name, "p_e");
        assert!(ScanSpec::preset("fig7").is_err());
    }

    #[test]
    fn quantity_parsing() {
        let q = Quantity::WithUnit("2.4 fs".into());
        let v = parse_quantity(&q, Dimension::Time, "x").unwrap();
        assert!((v - 2.4 * FS_IN_AU).abs() < 1e-12);
        let q = Quantity::WithUnit("30 deg".into());
        assert!((parse_quantity(&q, Dimension::Angle, "x").unwrap() - PI / 6.0).abs() < 1e-12);
        let q = Quantity::WithUnit("60 nm".into());
        assert!((parse_quantity(&q, Dimension::Length, "x").unwrap() - 60.0 / BOHR_IN_NM).abs() < 1e-9);
        let q = Quantity::WithUnit("60 kg".into());
        assert!(parse_quantity(&q, Dimension::Length, "x").is_err());
        assert_eq!(
            parse_quantity(&Quantity::Number(1.5), Dimension::Time, "x").unwrap(),
            1.5
        );
    }

    #[test]
    fn schema_violations_rejected() {
        // empty file
        let dir = std::env::temp_dir();
        let p = dir.join("twocentre_empty_spec.json");
        fs::write(&p, "").unwrap();
        assert!(matches!(ScanSpec::load(&p), Err(ScanError::Schema(_))));
        fs::remove_file(&p).ok();

        let mut spec = ScanSpec::preset("fig3").unwrap();
        spec.geometry.e_probe = [0.0, 0.0, 0.0];
        assert!(spec.validate().is_err());

        let mut spec = ScanSpec::preset("fig3").unwrap();
        spec.fixed
            .insert("theta_e".into(), Quantity::Number(0.0));
        let err = spec.validate().unwrap_err();
        assert!(err.to_string().contains("theta_e"));

        let mut spec = ScanSpec::preset("fig3").unwrap();
        spec.scenario = Scenario::BetaTrace;
        spec.model = Model::Nonbo;
        assert!(matches!(
            spec.validate(),
            Err(ScanError::Incompatible { .. })
        ));
    }

    #[test]
    fn unit_vectors_normalized_on_load() {
        let mut spec = ScanSpec::preset("fig3").unwrap();
        spec.geometry.e_probe = [0.0, 0.0, 3.0];
        spec.validate().unwrap();
        assert_eq!(spec.geometry.e_probe, [0.0, 0.0, 1.0]);
    }

    fn small_fig3() -> ScanSpec {
        let mut spec = ScanSpec::preset("fig3").unwrap();
        spec.axes[0].count = 5;
        spec.axes[1].count = 7;
        spec
    }

    #[test]
    fn grid_shape_and_order() {
        let result = run_scan(&small_fig3()).unwrap();
        assert_eq!(result.rows.len(), 35);
        assert_eq!(result.axis_names, vec!["theta_e", "t_c"]);
        // last axis fastest
        assert_eq!(result.rows[0][0], result.rows[1][0]);
        assert!(result.rows[0][1] < result.rows[1][1]);
        assert!(result.rows.iter().all(|r| r.len() == 6));
    }

    #[test]
    fn proton_scenario_uses_kinematics() {
        let mut spec = ScanSpec::preset("fig6").unwrap();
        spec.axes[0].count = 3;
        spec.axes[1].count = 2;
        let result = run_scan(&spec).unwrap();
        assert_eq!(result.rows.len(), 6);
        // peak of |a(p_-)| at p_1 = p0: probability there exceeds the edges
        // (indirect check that p_N is derived from p_1, not read directly)
        let ctx = Context::build(&spec).unwrap();
        let mut vars = ctx.base.clone();
        vars.insert("p_1".into(), 14.8);
        vars.insert("t_c".into(), 0.0);
        let at_p0 = ctx.evaluate(&vars).unwrap()[1];
        vars.insert("p_1".into(), 14.8 - 0.36);
        let shifted = ctx.evaluate(&vars).unwrap()[1];
        // direct terms: |a(p_-)|² peaks at p_1 = p0, |a(p_+)|² at p_1 = p0 - p_e
        assert!(at_p0 > 0.0 && shifted > 0.0);
    }

    #[test]
    fn csv_round_trip_bit_exact() {
        let result = run_scan(&small_fig3()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let files = write_result(&result, OutputFormat::Csv, &path).unwrap();
        assert_eq!(files.len(), 2);
        assert!(files[1].to_string_lossy().ends_with(".meta.json"));
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(
            header,
            vec!["theta_e", "t_c", "total", "direct", "cross", "phase"]
        );
        assert_eq!(rows.len(), result.rows.len());
        for (got, want) in rows.iter().zip(&result.rows) {
            for (a, b) in got.iter().zip(want) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn json_output_contains_metadata() {
        let result = run_scan(&small_fig3()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_result(&result, OutputFormat::Json, &path).unwrap();
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(doc["rows"].as_array().unwrap().len(), 35);
        assert!(doc["metadata"]["c_n"].as_f64().unwrap() > 0.0);
        assert!((doc["metadata"]["omega"].as_f64().unwrap() - 0.7594).abs() < 1e-4);
        assert!((doc["metadata"]["nonbo_norm_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_trace_scenario() {
        let mut spec = ScanSpec::preset("fig3").unwrap();
        spec.scenario = Scenario::BetaTrace;
        spec.axes = vec![AxisSpec {
            name: "t_c".into(),
            min: Quantity::Number(0.0),
            max: Quantity::WithUnit("40 fs".into()),
            count: 50,
        }];
        spec.validate().unwrap();
        let result = run_scan(&spec).unwrap();
        assert_eq!(result.value_names, vec!["beta0", "beta2", "beta4"]);
        assert_eq!(result.rows.len(), 50);
        // spot-check against the library function
        let row = &result.rows[10];
        let r_n = 12.0 + 14.8 * row[0] / make_constants().mu;
        let (b0, _, _) = fringe::beta_coefficients(0.72, r_n, BetaForm::Exact).unwrap();
        assert_eq!(row[1], b0);
    }

    #[test]
    fn fixed_nuclei_scenario_minimum() {
        let mut spec = ScanSpec::preset("fig3").unwrap();
        spec.scenario = Scenario::FixedNuclei;
        spec.axes = vec![AxisSpec {
            name: "r".into(),
            min: Quantity::Number(2.0 * PI / 0.72 - 0.5),
            max: Quantity::Number(2.0 * PI / 0.72 + 0.5),
            count: 101,
        }];
        spec.validate().unwrap();
        let result = run_scan(&spec).unwrap();
        // ungerade zero at p_e.R = 2π
        let min_row = result
            .rows
            .iter()
            .min_by(|a, b| a[1].partial_cmp(&b[1]).unwrap())
            .unwrap();
        assert!((min_row[0] * 0.72 - 2.0 * PI).abs() < 0.02);
        assert!(min_row[1] < 1e-6 * result.rows[0][1].max(1e-300));
    }
}
