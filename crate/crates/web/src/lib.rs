//! Browser bindings: single-atom and thermally averaged two-level spectra,
//! plus the FORT well census.

use wasm_bindgen::prelude::*;

use cavity_rabi::config::{validate, EnsembleConfig, ModelReduction, SystemParams};
use cavity_rabi::engine::TransmissionSolver;
use cavity_rabi::spectroscopy::{scan, ScanGrid};
use cavity_rabi::trap::{enumerate_wells, wells_csv};

type Res<T> = Result<T, String>;

fn system(g0_mhz: f64, delta_ac_mhz: f64, temperature_fraction: f64) -> SystemParams {
    SystemParams {
        g0_mhz,
        delta_ac_mhz,
        temperature_fraction,
        ..SystemParams::default()
    }
}

/// Transmission of one atom at peak coupling `g0_mhz`, at `points` probe
/// detunings from `min_mhz` to `max_mhz`.
pub fn single_atom(g0_mhz: f64, delta_ac_mhz: f64, min_mhz: f64, max_mhz: f64, points: usize) -> Res<Vec<f64>> {
    let p = validate(&system(g0_mhz, delta_ac_mhz, 0.0)).map_err(|e| e.to_string())?;
    let grid = ScanGrid::uniform(min_mhz, max_mhz, points).map_err(|e| e.to_string())?;
    let solver = TransmissionSolver::new(&p, &ModelReduction::two_level(1)).map_err(|e| e.to_string())?;
    grid.detunings()
        .iter()
        .map(|&d| solver.transmission_for(p.g0, 0.0, d).map_err(|e| e.to_string()))
        .collect()
}

/// Well-averaged spectrum at temperature `k_B T / |U0|`, using a light
/// quadrature (5 wells, 5 x 3 nodes) so it stays interactive.
pub fn thermal(temperature_fraction: f64, min_mhz: f64, max_mhz: f64, points: usize) -> Res<Vec<f64>> {
    let p = validate(&system(34.0, 0.0, temperature_fraction)).map_err(|e| e.to_string())?;
    let grid = ScanGrid::uniform(min_mhz, max_mhz, points).map_err(|e| e.to_string())?;
    let ens = EnsembleConfig {
        n_axial: 5,
        n_radial: 3,
        well_limit: Some(5),
        ..EnsembleConfig::default()
    };
    scan(&p, &ModelReduction::two_level(1), &grid, &ens, false)
        .map(|r| r.t1_mean)
        .map_err(|e| e.to_string())
}

pub fn census(threshold: f64) -> Res<String> {
    let p = validate(&SystemParams::default()).map_err(|e| e.to_string())?;
    enumerate_wells(&p, threshold).map(|w| wells_csv(&w)).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = singleAtomSpectrum)]
pub fn single_atom_spectrum(g0_mhz: f64, delta_ac_mhz: f64, min_mhz: f64, max_mhz: f64, points: usize) -> Result<Vec<f64>, JsError> {
    single_atom(g0_mhz, delta_ac_mhz, min_mhz, max_mhz, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = thermalSpectrum)]
pub fn thermal_spectrum(temperature_fraction: f64, min_mhz: f64, max_mhz: f64, points: usize) -> Result<Vec<f64>, JsError> {
    thermal(temperature_fraction, min_mhz, max_mhz, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = wellCensus)]
pub fn well_census(threshold: f64) -> Result<String, JsError> {
    census(threshold).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = detuningMhz)]
pub fn detuning_mhz(min_mhz: f64, max_mhz: f64, points: usize) -> Vec<f64> {
    let step = (max_mhz - min_mhz) / (points.max(2) - 1) as f64;
    (0..points).map(|i| min_mhz + step * i as f64).collect()
}
