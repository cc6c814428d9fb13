//! Physical constants, run parameters and the JSON run-configuration schema.
//!
//! Everything the user types is in cyclic MHz (suffix `_mhz`), nanometres or
//! micrometres. [`validate`] converts to the internal convention: angular
//! frequencies in rad/s and lengths in metres.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 constants and the Cs-133 atomic mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub planck_h: f64,
    pub boltzmann_kb: f64,
    pub cesium_mass: f64,
    pub speed_of_light: f64,
}

pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const CESIUM_MASS_U: f64 = 132.905_451_931;

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    planck_h: 6.626_070_15e-34,
    boltzmann_kb: 1.380_649e-23,
    cesium_mass: CESIUM_MASS_U * ATOMIC_MASS_UNIT,
    speed_of_light: 299_792_458.0,
};

/// Cyclic MHz to angular rad/s.
pub fn mhz_to_rad(mhz: f64) -> f64 {
    mhz * 2.0 * PI * 1e6
}

/// Angular rad/s to cyclic MHz.
pub fn rad_to_mhz(rad: f64) -> f64 {
    rad / (2.0 * PI * 1e6)
}

/// Magnetic quantum numbers of the excited F'=5 manifold.
pub const EXCITED_M_RANGE: std::ops::RangeInclusive<i32> = -5..=5;

/// User-facing system parameters, in the units of the config file.
///
/// Defaults reproduce the experimental parameter set: 2g0/2pi = 68 MHz,
/// kappa/2pi = 4.1 MHz, gamma/2pi = 2.6 MHz, U0/h = -39 MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Peak coupling g0/2pi for the stretched transition.
    pub g0_mhz: f64,
    /// Cavity field decay kappa/2pi.
    pub kappa_mhz: f64,
    /// Atomic transverse (dipole) decay gamma/2pi.
    pub gamma_mhz: f64,
    /// Signed FORT depth U0/h at an antinode.
    pub u0_mhz: f64,
    pub lambda_a_nm: f64,
    pub lambda_f_nm: f64,
    pub cavity_length_um: f64,
    pub waist_a_um: f64,
    pub waist_f_um: f64,
    /// Atom-cavity detuning (omega_A - omega_C1)/2pi.
    pub delta_ac_mhz: f64,
    /// Offset of the y-polarized cavity mode from the x-polarized one.
    pub mode_splitting_mhz: f64,
    /// Empty-cavity resonant intracavity photon number; sets |E_p|^2.
    pub drive_photon_number: f64,
    /// k_B T / |U0|.
    pub temperature_fraction: f64,
    /// Probe polarization angle measured from the x mode.
    pub polarization_angle_deg: f64,
    /// Ratio of excited-state to ground-state FORT shift, keyed by m'.
    pub excited_shift_ratios: BTreeMap<i32, f64>,
    pub hyperfine_splitting_mhz: f64,
    pub sideband_detuning_mhz: f64,
    /// Intracavity FORT Rabi frequency; `None` derives it from
    /// `effective_rabi_target_khz` with equal FORT and Raman amplitudes.
    pub omega_fort_mhz: Option<f64>,
    pub omega_raman_mhz: Option<f64>,
    pub effective_rabi_target_khz: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            g0_mhz: 34.0,
            kappa_mhz: 4.1,
            gamma_mhz: 2.6,
            u0_mhz: -39.0,
            lambda_a_nm: 852.4,
            lambda_f_nm: 935.6,
            cavity_length_um: 42.2,
            waist_a_um: 23.4,
            waist_f_um: 24.5,
            delta_ac_mhz: 0.0,
            mode_splitting_mhz: 0.0,
            drive_photon_number: DEFAULT_DRIVE_PHOTON_NUMBER,
            temperature_fraction: 0.1,
            polarization_angle_deg: 0.0,
            excited_shift_ratios: EXCITED_M_RANGE.map(|m| (m, 1.0)).collect(),
            hyperfine_splitting_mhz: 9_192.632,
            sideband_detuning_mhz: -1.0,
            omega_fort_mhz: None,
            omega_raman_mhz: None,
            effective_rabi_target_khz: 200.0,
        }
    }
}

/// Weak enough that halving it moves T1 by less than 1e-3 (relative) at
/// photon cutoff 1.
pub const DEFAULT_DRIVE_PHOTON_NUMBER: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomicBasis {
    /// Only |F=4, m=4> and |F'=5, m'=5>, coupled by the sigma+ mode.
    TwoLevel,
    /// All 9 + 11 Zeeman sublevels of F=4 and F'=5.
    ZeemanFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ModeCount {
    One,
    Two,
}

impl ModeCount {
    pub fn count(self) -> usize {
        match self {
            ModeCount::One => 1,
            ModeCount::Two => 2,
        }
    }
}

impl TryFrom<u8> for ModeCount {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(ModeCount::One),
            2 => Ok(ModeCount::Two),
            other => Err(format!("mode_count must be 1 or 2, got {other}")),
        }
    }
}

impl From<ModeCount> for u8 {
    fn from(m: ModeCount) -> u8 {
        m.count() as u8
    }
}

/// Which parts of the full model are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelReduction {
    pub atomic_basis: AtomicBasis,
    pub mode_count: ModeCount,
    /// Highest Fock state kept per cavity mode.
    pub photon_cutoff: usize,
}

impl Default for ModelReduction {
    fn default() -> Self {
        ModelReduction {
            atomic_basis: AtomicBasis::ZeemanFull,
            mode_count: ModeCount::Two,
            photon_cutoff: 1,
        }
    }
}

impl ModelReduction {
    pub fn two_level(photon_cutoff: usize) -> Self {
        ModelReduction {
            atomic_basis: AtomicBasis::TwoLevel,
            mode_count: ModeCount::One,
            photon_cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.photon_cutoff == 0 {
            return Err(Error::invalid(
                "photon_cutoff",
                "must be at least 1 to host a drive",
            ));
        }
        Ok(())
    }
}

/// Parameters in internal units (rad/s, Hz for U0/h, metres).
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams {
    pub g0: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub u0_over_h: f64,
    pub lambda_a: f64,
    pub lambda_f: f64,
    pub cavity_length: f64,
    pub waist_a: f64,
    pub waist_f: f64,
    pub delta_ac: f64,
    pub mode_splitting: f64,
    pub drive_photon_number: f64,
    pub temperature_fraction: f64,
    pub polarization_angle: f64,
    /// beta_{m'} indexed by m' + 5.
    pub excited_shift_ratios: [f64; 11],
    pub source: SystemParams,
}

impl ValidatedParams {
    pub fn k_a(&self) -> f64 {
        2.0 * PI / self.lambda_a
    }

    pub fn k_f(&self) -> f64 {
        2.0 * PI / self.lambda_f
    }

    /// |U0| in joules.
    pub fn trap_depth_joules(&self) -> f64 {
        CONSTANTS.planck_h * self.u0_over_h.abs()
    }

    /// Probe drive amplitude epsilon_p = kappa * sqrt(<n>_empty).
    pub fn drive_amplitude(&self) -> f64 {
        self.kappa * self.drive_photon_number.sqrt()
    }

    pub fn shift_ratio(&self, m_excited: i32) -> f64 {
        self.excited_shift_ratios[(m_excited + 5) as usize]
    }
}

fn require(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(field, reason))
    }
}

/// Checks every invariant and converts to internal units.
pub fn validate(p: &SystemParams) -> Result<ValidatedParams> {
    let finite = [
        ("g0_mhz", p.g0_mhz),
        ("kappa_mhz", p.kappa_mhz),
        ("gamma_mhz", p.gamma_mhz),
        ("u0_mhz", p.u0_mhz),
        ("lambda_a_nm", p.lambda_a_nm),
        ("lambda_f_nm", p.lambda_f_nm),
        ("cavity_length_um", p.cavity_length_um),
        ("waist_a_um", p.waist_a_um),
        ("waist_f_um", p.waist_f_um),
        ("delta_ac_mhz", p.delta_ac_mhz),
        ("mode_splitting_mhz", p.mode_splitting_mhz),
        ("drive_photon_number", p.drive_photon_number),
        ("temperature_fraction", p.temperature_fraction),
        ("polarization_angle_deg", p.polarization_angle_deg),
    ];
    for (field, v) in finite {
        require(v.is_finite(), field, "must be finite")?;
    }
    require(p.g0_mhz > 0.0, "g0_mhz", "coupling must be positive")?;
    require(p.kappa_mhz > 0.0, "kappa_mhz", "cavity decay must be positive")?;
    require(p.gamma_mhz > 0.0, "gamma_mhz", "atomic decay must be positive")?;
    require(p.u0_mhz < 0.0, "u0_mhz", "trap depth must be negative")?;
    for (field, v) in [
        ("lambda_a_nm", p.lambda_a_nm),
        ("lambda_f_nm", p.lambda_f_nm),
        ("cavity_length_um", p.cavity_length_um),
        ("waist_a_um", p.waist_a_um),
        ("waist_f_um", p.waist_f_um),
    ] {
        require(v > 0.0, field, "must be positive")?;
    }
    require(
        p.drive_photon_number > 0.0,
        "drive_photon_number",
        "must be positive",
    )?;
    require(
        p.temperature_fraction >= 0.0,
        "temperature_fraction",
        "must be non-negative",
    )?;
    let mut ratios = [0.0; 11];
    for m in EXCITED_M_RANGE {
        let beta = p.excited_shift_ratios.get(&m).copied().ok_or_else(|| {
            Error::invalid(
                "excited_shift_ratios",
                format!("missing entry for m' = {m}"),
            )
        })?;
        require(beta.is_finite(), "excited_shift_ratios", "must be finite")?;
        ratios[(m + 5) as usize] = beta;
    }
    if let Some(extra) = p
        .excited_shift_ratios
        .keys()
        .find(|m| !EXCITED_M_RANGE.contains(*m))
    {
        return Err(Error::invalid(
            "excited_shift_ratios",
            format!("m' = {extra} is outside -5..=5"),
        ));
    }
    require(
        p.hyperfine_splitting_mhz > 0.0,
        "hyperfine_splitting_mhz",
        "must be positive",
    )?;

    Ok(ValidatedParams {
        g0: mhz_to_rad(p.g0_mhz),
        kappa: mhz_to_rad(p.kappa_mhz),
        gamma: mhz_to_rad(p.gamma_mhz),
        u0_over_h: p.u0_mhz * 1e6,
        lambda_a: p.lambda_a_nm * 1e-9,
        lambda_f: p.lambda_f_nm * 1e-9,
        cavity_length: p.cavity_length_um * 1e-6,
        waist_a: p.waist_a_um * 1e-6,
        waist_f: p.waist_f_um * 1e-6,
        delta_ac: mhz_to_rad(p.delta_ac_mhz),
        mode_splitting: mhz_to_rad(p.mode_splitting_mhz),
        drive_photon_number: p.drive_photon_number,
        temperature_fraction: p.temperature_fraction,
        polarization_angle: p.polarization_angle_deg.to_radians(),
        excited_shift_ratios: ratios,
        source: p.clone(),
    })
}

/// Critical photon number n0 = gamma^2 / (2 g0^2) and critical atom number
/// N0 = 2 kappa gamma / g0^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalNumbers {
    pub photon: f64,
    pub atom: f64,
}

impl CriticalNumbers {
    pub fn from_rates(g0: f64, kappa: f64, gamma: f64) -> Self {
        CriticalNumbers {
            photon: gamma * gamma / (2.0 * g0 * g0),
            atom: 2.0 * kappa * gamma / (g0 * g0),
        }
    }
}

pub fn critical_numbers(params: &ValidatedParams) -> CriticalNumbers {
    CriticalNumbers::from_rates(params.g0, params.kappa, params.gamma)
}

/// Probe-detuning grid, in MHz relative to the x-mode cavity resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub min_mhz: f64,
    pub max_mhz: f64,
    pub points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            min_mhz: -60.0,
            max_mhz: 60.0,
            points: 241,
        }
    }
}

/// Well selection and thermal quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    /// Wells with |psi(r_FORT)| at or above this value are averaged.
    pub threshold: f64,
    pub n_axial: usize,
    /// Gauss-Hermite nodes per transverse Cartesian axis.
    pub n_radial: usize,
    /// Keep only this many selected wells, spread evenly in |psi| rank.
    pub well_limit: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            threshold: 0.87,
            n_axial: 9,
            n_radial: 5,
            well_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    /// Emit the closed-form linear-response column next to the master-equation
    /// result.
    pub oracle: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".to_string(),
            oracle: false,
        }
    }
}

/// The whole config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemParams,
    pub reduction: ModelReduction,
    pub scan: ScanConfig,
    pub ensemble: EnsembleConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates every section, returning internal-unit system parameters.
    pub fn validate(&self) -> Result<ValidatedParams> {
        let params = validate(&self.system)?;
        self.reduction.validate()?;
        require(
            self.scan.points >= 2,
            "scan.points",
            "need at least two grid points",
        )?;
        require(
            self.scan.max_mhz > self.scan.min_mhz,
            "scan.max_mhz",
            "must exceed scan.min_mhz",
        )?;
        require(
            self.ensemble.threshold > 0.0 && self.ensemble.threshold <= 1.0,
            "ensemble.threshold",
            "must lie in (0, 1]",
        )?;
        require(self.ensemble.n_axial >= 1, "ensemble.n_axial", "must be >= 1")?;
        require(
            self.ensemble.n_radial >= 1,
            "ensemble.n_radial",
            "must be >= 1",
        )?;
        if let Some(limit) = self.ensemble.well_limit {
            require(limit >= 1, "ensemble.well_limit", "must be >= 1")?;
        }
        Ok(params)
    }
}
