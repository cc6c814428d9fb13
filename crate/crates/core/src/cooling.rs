//! Raman-cooling and trap-motion quantities.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::config::{critical_numbers, ValidatedParams, CONSTANTS};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::trap::thermal_widths;

/// Inputs to the effective Raman Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingParams {
    /// rad/s
    pub omega_fort: f64,
    /// rad/s
    pub omega_raman: f64,
    /// Δ = ω_A - ω_FORT, rad/s.
    pub delta_raman_detuning: f64,
    /// Hz
    pub hyperfine_splitting: f64,
    /// Two-photon detuning from the carrier, Hz.
    pub sideband_delta: f64,
}

impl CoolingParams {
    pub fn check(&self) -> Result<()> {
        let fields = [
            ("omega_fort", self.omega_fort),
            ("omega_raman", self.omega_raman),
            ("delta_raman_detuning", self.delta_raman_detuning),
            ("hyperfine_splitting", self.hyperfine_splitting),
            ("sideband_delta", self.sideband_delta),
        ];
        for (field, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        if self.delta_raman_detuning == 0.0 {
            return Err(Error::invalid("delta_raman_detuning", "must be non-zero"));
        }
        if self.hyperfine_splitting <= 0.0 {
            return Err(Error::invalid("hyperfine_splitting", "must be positive"));
        }
        Ok(())
    }

    /// Builds the inputs from the system config. Δ follows from the two
    /// wavelengths; missing beam Rabi frequencies are set equal and chosen to
    /// hit the configured Ω_E target.
    pub fn from_params(params: &ValidatedParams) -> Result<Self> {
        let s = &params.source;
        let c = CONSTANTS.speed_of_light;
        let delta = 2.0 * PI * c * (1.0 / params.lambda_a - 1.0 / params.lambda_f);
        if !(s.effective_rabi_target_khz.is_finite() && s.effective_rabi_target_khz >= 0.0) {
            return Err(Error::invalid("effective_rabi_target_khz", "must be finite and non-negative"));
        }
        let equal = (2.0 * delta.abs() * 2.0 * PI * s.effective_rabi_target_khz * 1e3).sqrt();
        let to_rad = |mhz: f64| 2.0 * PI * mhz * 1e6;
        let cp = CoolingParams {
            omega_fort: s.omega_fort_mhz.map_or(equal, to_rad),
            omega_raman: s.omega_raman_mhz.map_or(equal, to_rad),
            delta_raman_detuning: delta,
            hyperfine_splitting: s.hyperfine_splitting_mhz * 1e6,
            sideband_delta: s.sideband_detuning_mhz * 1e6,
        };
        cp.check()?;
        Ok(cp)
    }

    /// Δ_Raman = Δ_HF + δ, Hz.
    pub fn raman_difference_frequency(&self) -> f64 {
        self.hyperfine_splitting + self.sideband_delta
    }
}

/// Ω_E = Ω_FORT Ω_Raman / (2Δ), rad/s.
pub fn effective_rabi(cp: &CoolingParams) -> Result<f64> {
    cp.check()?;
    Ok(cp.omega_fort * cp.omega_raman / (2.0 * cp.delta_raman_detuning))
}

/// Axial vibration frequency at an antinode, Hz.
pub fn axial_frequency(params: &ValidatedParams) -> f64 {
    params.k_f() * (2.0 * params.trap_depth_joules() / CONSTANTS.cesium_mass).sqrt() / (2.0 * PI)
}

/// Transverse vibration frequency at the trap axis, Hz.
pub fn radial_frequency(params: &ValidatedParams) -> f64 {
    (2.0 / params.waist_f) * (params.trap_depth_joules() / CONSTANTS.cesium_mass).sqrt() / (2.0 * PI)
}

/// Everything the `report` command prints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingReport {
    /// Hz
    pub nu_axial: f64,
    /// Hz
    pub nu_radial: f64,
    /// rad/s
    pub omega_e: f64,
    /// Hz
    pub sideband_delta: f64,
    /// m
    pub sigma_z: f64,
    pub sigma_x: f64,
    pub sigma_rho: f64,
    pub n0: f64,
    pub big_n0: f64,
}

pub fn report(params: &ValidatedParams) -> Result<CoolingReport> {
    let cp = CoolingParams::from_params(params)?;
    let widths = thermal_widths(params);
    let crit = critical_numbers(params);
    Ok(CoolingReport {
        nu_axial: axial_frequency(params),
        nu_radial: radial_frequency(params),
        omega_e: effective_rabi(&cp)?,
        sideband_delta: cp.sideband_delta,
        sigma_z: widths.sigma_z,
        sigma_x: widths.sigma_x,
        sigma_rho: widths.sigma_rho,
        n0: crit.photon,
        big_n0: crit.atom,
    })
}

impl CoolingReport {
    /// (name, value, unit) in display units.
    pub fn rows(&self) -> Vec<(&'static str, f64, &'static str)> {
        vec![
            ("nu0", self.nu_axial * 1e-6, "MHz"),
            ("minus_2nu0", -2.0 * self.nu_axial * 1e-6, "MHz"),
            ("sideband_delta", self.sideband_delta * 1e-6, "MHz"),
            ("nu_rho", self.nu_radial * 1e-3, "kHz"),
            ("omega_e", self.omega_e / (2.0 * PI) * 1e-3, "kHz"),
            ("sigma_z", self.sigma_z * 1e9, "nm"),
            ("sigma_x", self.sigma_x * 1e6, "um"),
            ("sigma_rho", self.sigma_rho * 1e6, "um"),
            ("n0", self.n0, ""),
            ("N0", self.big_n0, ""),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value,unit\n");
        for (name, value, unit) in self.rows() {
            let _ = writeln!(out, "{name},{},{unit}", sig(value, 12));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, value, unit) in self.rows() {
            let line = format!("{name:<16}{:>14}  {unit}", sig(value, 6));
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}
