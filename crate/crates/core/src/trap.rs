//! FORT standing-wave geometry, cavity mode function, well census and thermal
//! position quadrature.
//!
//! Both standing waves have a node at the mirror surface `z = 0`, so the FORT
//! intensity maxima sit at `z_j = (2j + 1) λ_F / 4`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use crate::config::ValidatedParams;
use crate::error::{Error, Result};
use crate::format::sig;

/// Atomic position: axial `z` from the mirror, transverse radius `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub z: f64,
    pub rho: f64,
}

impl Position {
    pub fn on_axis(z: f64) -> Self {
        Position { z, rho: 0.0 }
    }

    pub fn from_cartesian(x: f64, y: f64, z: f64) -> Self {
        Position { z, rho: x.hypot(y) }
    }

    pub fn check(&self, params: &ValidatedParams) -> Result<()> {
        if !(0.0..=params.cavity_length).contains(&self.z) {
            return Err(Error::invalid("z", format!("{} m lies outside the cavity", self.z)));
        }
        if !(self.rho >= 0.0) {
            return Err(Error::invalid("rho", "must be non-negative"));
        }
        Ok(())
    }
}

/// `U(r)/h` in Hz: `U0 sin²(k_F z) exp(-2 ρ² / w_F²)`.
pub fn fort_potential(pos: Position, params: &ValidatedParams) -> f64 {
    let s = (params.k_f() * pos.z).sin();
    params.u0_over_h * s * s * (-2.0 * pos.rho * pos.rho / (params.waist_f * params.waist_f)).exp()
}

/// `ψ(r) = sin(k_A z) exp(-ρ² / w_A²)`.
pub fn mode_function(pos: Position, params: &ValidatedParams) -> f64 {
    (params.k_a() * pos.z).sin() * (-pos.rho * pos.rho / (params.waist_a * params.waist_a)).exp()
}

/// One FORT antinode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellSite {
    pub index: usize,
    pub z_center: f64,
    /// |ψ| at the well center.
    pub psi_abs: f64,
    pub selected: bool,
}

impl WellSite {
    pub fn center(&self) -> Position {
        Position::on_axis(self.z_center)
    }
}

/// Every FORT intensity maximum inside the cavity, flagged by
/// `psi_abs >= threshold`.
pub fn enumerate_wells(params: &ValidatedParams, threshold: f64) -> Result<Vec<WellSite>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid("threshold", "must lie in [0, 1]"));
    }
    let quarter = params.lambda_f / 4.0;
    let mut wells = Vec::new();
    for index in 0.. {
        let z_center = (2 * index + 1) as f64 * quarter;
        if z_center > params.cavity_length {
            break;
        }
        let psi_abs = mode_function(Position::on_axis(z_center), params).abs();
        wells.push(WellSite {
            index,
            z_center,
            psi_abs,
            selected: psi_abs >= threshold,
        });
    }
    Ok(wells)
}

/// Picks `limit` of the selected wells, evenly spaced in rank of decreasing
/// `psi_abs` (the best well is always first); returned in index order.
pub fn subset_wells(wells: &[WellSite], limit: Option<usize>) -> Vec<WellSite> {
    let mut selected: Vec<WellSite> = wells.iter().copied().filter(|w| w.selected).collect();
    let Some(limit) = limit else {
        return selected;
    };
    if limit >= selected.len() {
        return selected;
    }
    selected.sort_by(|a, b| b.psi_abs.total_cmp(&a.psi_abs).then(a.index.cmp(&b.index)));
    let n = selected.len();
    let mut picked: Vec<WellSite> = if limit == 1 {
        vec![selected[0]]
    } else {
        (0..limit)
            .map(|i| selected[(i * (n - 1) + (limit - 1) / 2) / (limit - 1)])
            .collect()
    };
    picked.sort_by_key(|w| w.index);
    picked.dedup_by_key(|w| w.index);
    picked
}

pub fn wells_csv(wells: &[WellSite]) -> String {
    let mut out = String::from("index,z_center_um,psi_abs,selected\n");
    for w in wells {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            w.index,
            sig(w.z_center * 1e6, 12),
            sig(w.psi_abs, 12),
            u8::from(w.selected)
        );
    }
    out
}

/// Harmonic-approximation Gaussian position widths at `k_B T = f |U0|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalWidths {
    pub sigma_z: f64,
    /// Per Cartesian transverse axis.
    pub sigma_x: f64,
    pub sigma_rho: f64,
}

/// `σ_z = sqrt(f/2) / k_F`, `σ_x = (w_F / 2) sqrt(f)`, `σ_ρ = sqrt(2) σ_x`.
pub fn thermal_widths(params: &ValidatedParams) -> ThermalWidths {
    let f = params.temperature_fraction;
    let sigma_z = (f / 2.0).sqrt() / params.k_f();
    let sigma_x = 0.5 * params.waist_f * f.sqrt();
    ThermalWidths {
        sigma_z,
        sigma_x,
        sigma_rho: SQRT_2 * sigma_x,
    }
}

/// Physicists' Gauss-Hermite rule for `∫ e^{-x²} f(x) dx`, nodes ascending.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let pi_m4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z: f64 = 0.0;
    for i in 0..(n + 1) / 2 {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pi_m4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 3e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// Weighted positions sampling the thermal distribution in one well.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalEnsemble {
    pub sigma_z: f64,
    pub sigma_x: f64,
    pub nodes: Vec<(Position, f64)>,
}

/// Gauss-Hermite product rule: `n_axial` nodes in z about the well center,
/// `n_radial` nodes per transverse axis collapsed onto distinct radii.
/// Coincident nodes are merged, so zero widths give a single node.
pub fn quadrature_nodes(well: &WellSite, widths: &ThermalWidths, n_axial: usize, n_radial: usize) -> Result<ThermalEnsemble> {
    if n_axial == 0 || n_radial == 0 {
        return Err(Error::invalid("quadrature", "node counts must be at least 1"));
    }
    let (tz, wz) = gauss_hermite(n_axial);
    let (tr, wr) = gauss_hermite(n_radial);
    let sqrt_pi = PI.sqrt();

    let mut axial: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (t, w) in tz.iter().zip(&wz) {
        let z = well.z_center + SQRT_2 * widths.sigma_z * t;
        let e = axial.entry(z.to_bits()).or_insert((z, 0.0));
        e.1 += w / sqrt_pi;
    }
    let mut radial: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (ti, wi) in tr.iter().zip(&wr) {
        for (tj, wj) in tr.iter().zip(&wr) {
            // Order the pair so mirrored nodes give bit-identical radii.
            let (a, b) = if ti.abs() <= tj.abs() { (ti.abs(), tj.abs()) } else { (tj.abs(), ti.abs()) };
            let rho = SQRT_2 * widths.sigma_x * a.hypot(b);
            let e = radial.entry(rho.to_bits()).or_insert((rho, 0.0));
            e.1 += wi * wj / PI;
        }
    }

    let mut nodes = Vec::with_capacity(axial.len() * radial.len());
    let mut axial_nodes: Vec<(f64, f64)> = axial.into_values().collect();
    axial_nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(z, wz) in &axial_nodes {
        for &(rho, wr) in radial.values() {
            nodes.push((Position { z, rho }, wz * wr));
        }
    }
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    Ok(ThermalEnsemble {
        sigma_z: widths.sigma_z,
        sigma_x: widths.sigma_x,
        nodes,
    })
}
