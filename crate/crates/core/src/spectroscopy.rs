//! Probe scans, ensemble averaging, the linear-response oracle and peak
//! analysis.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{
    mhz_to_rad, rad_to_mhz, AtomicBasis, EnsembleConfig, ModeCount, ModelReduction, ScanConfig, SystemParams,
    ValidatedParams,
};
use crate::engine::{light_shift, TransmissionSolver};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::operator::C64;
use crate::trap::{enumerate_wells, mode_function, quadrature_nodes, subset_wells, thermal_widths, Position, WellSite};

/// Probe detunings `ω_p - ω_C1` in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    detunings: Vec<f64>,
}

impl ScanGrid {
    pub fn new(detunings: Vec<f64>) -> Result<Self> {
        if detunings.len() < 2 {
            return Err(Error::invalid("scan", "need at least two grid points"));
        }
        if detunings.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("scan", "detunings must be finite"));
        }
        if detunings.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("scan", "detunings must be strictly increasing"));
        }
        Ok(ScanGrid { detunings })
    }

    /// `points` evenly spaced values from `min_mhz` to `max_mhz` inclusive.
    pub fn uniform(min_mhz: f64, max_mhz: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid("points", "need at least two grid points"));
        }
        if !(max_mhz > min_mhz) {
            return Err(Error::invalid("max_mhz", "must exceed min_mhz"));
        }
        let step = (max_mhz - min_mhz) / (points - 1) as f64;
        Self::new((0..points).map(|i| mhz_to_rad(min_mhz + step * i as f64)).collect())
    }

    pub fn from_config(scan: &ScanConfig) -> Result<Self> {
        Self::uniform(scan.min_mhz, scan.max_mhz, scan.points)
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn detunings_mhz(&self) -> Vec<f64> {
        self.detunings.iter().map(|&d| rad_to_mhz(d)).collect()
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }
}

/// Weak-drive transmission of a two-level atom in a single mode:
/// `|κ(γ + iΔ_ap) / ((κ + iΔ_cp)(γ + iΔ_ap) + g²)|²` with `Δ_cp = -δ` and
/// `Δ_ap = Δ_AC - δ`.
pub fn linear_transmission_oracle(probe_detuning: f64, g: f64, kappa: f64, gamma: f64, delta_ac: f64) -> f64 {
    let atom = C64::new(gamma, delta_ac - probe_detuning);
    let cavity = C64::new(kappa, -probe_detuning);
    (kappa * atom / (cavity * atom + g * g)).norm_sqr()
}

/// Eigenvalues of `[[Δ_AC - iγ, g], [g, -iκ]]` (frequencies relative to the
/// cavity), ordered by real part.
pub fn dressed_eigenvalues(g: f64, kappa: f64, gamma: f64, delta_ac: f64) -> [C64; 2] {
    let a = C64::new(delta_ac, -gamma);
    let b = C64::new(0.0, -kappa);
    let mean = 0.5 * (a + b);
    let half = 0.5 * (a - b);
    let root = (half * half + g * g).sqrt();
    let mut pair = [mean - root, mean + root];
    if pair[1].re < pair[0].re || (pair[1].re == pair[0].re && pair[1].im < pair[0].im) {
        pair.swap(0, 1);
    }
    pair
}

/// Averaged spectrum with per-well curves.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub grid: ScanGrid,
    pub t1_mean: Vec<f64>,
    /// Row per well, in `well_indices` order.
    pub t1_per_well: Vec<Vec<f64>>,
    pub well_indices: Vec<usize>,
    /// Node-weighted oracle average, when requested.
    pub t1_oracle: Option<Vec<f64>>,
    pub params_digest: String,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    system: &'a SystemParams,
    reduction: &'a ModelReduction,
    detunings_rad_s: &'a [f64],
    ensemble: &'a EnsembleConfig,
}

/// Hex SHA-256 of the canonical JSON of every scan input.
pub fn params_digest(params: &ValidatedParams, reduction: &ModelReduction, grid: &ScanGrid, ensemble: &EnsembleConfig) -> String {
    let input = DigestInput {
        system: &params.source,
        reduction,
        detunings_rad_s: grid.detunings(),
        ensemble,
    };
    let json = serde_json::to_string(&input).expect("digest input serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// One evaluation site: well slot, position, quadrature weight.
#[derive(Debug, Clone, Copy)]
struct Node {
    well: usize,
    pos: Position,
    weight: f64,
}

/// Wells that enter the average, in index order.
pub fn ensemble_wells(params: &ValidatedParams, ensemble: &EnsembleConfig) -> Result<Vec<WellSite>> {
    let wells = subset_wells(&enumerate_wells(params, ensemble.threshold)?, ensemble.well_limit);
    if wells.is_empty() {
        return Err(Error::invalid("threshold", "no well passes the selection threshold"));
    }
    Ok(wells)
}

fn ensemble_nodes(params: &ValidatedParams, wells: &[WellSite], ensemble: &EnsembleConfig) -> Result<Vec<Node>> {
    let widths = thermal_widths(params);
    let mut nodes = Vec::new();
    for (slot, well) in wells.iter().enumerate() {
        let ens = quadrature_nodes(well, &widths, ensemble.n_axial, ensemble.n_radial)?;
        nodes.extend(ens.nodes.into_iter().map(|(pos, weight)| Node { well: slot, pos, weight }));
    }
    Ok(nodes)
}

#[cfg(feature = "parallel")]
fn evaluate<F>(count: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate<F>(count: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64>,
{
    (0..count).map(f).collect()
}

/// Sums node curves into per-well curves and the uniform well average, in
/// fixed node order.
fn reduce(nodes: &[Node], wells: usize, points: usize, values: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut per_well = vec![vec![0.0; points]; wells];
    for (k, node) in nodes.iter().enumerate() {
        let row = &values[k * points..(k + 1) * points];
        for (acc, v) in per_well[node.well].iter_mut().zip(row) {
            *acc += node.weight * v;
        }
    }
    let mut mean = vec![0.0; points];
    for curve in &per_well {
        for (m, v) in mean.iter_mut().zip(curve) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= wells as f64;
    }
    (per_well, mean)
}

fn check_oracle_model(reduction: &ModelReduction) -> Result<()> {
    if reduction.atomic_basis != AtomicBasis::TwoLevel || reduction.mode_count != ModeCount::One {
        return Err(Error::Config(
            "the linear-response oracle needs the two_level reduction with one mode".into(),
        ));
    }
    Ok(())
}

/// Evaluates the master-equation transmission at every well, thermal node
/// and grid point, then averages (quadrature weights within a well, uniform
/// across wells).
pub fn scan(params: &ValidatedParams, reduction: &ModelReduction, grid: &ScanGrid, ensemble: &EnsembleConfig, with_oracle: bool) -> Result<SpectrumResult> {
    if with_oracle {
        check_oracle_model(reduction)?;
    }
    let wells = ensemble_wells(params, ensemble)?;
    let nodes = ensemble_nodes(params, &wells, ensemble)?;
    let solver = TransmissionSolver::new(params, reduction)?;
    let points = grid.len();
    let det = grid.detunings();
    let values = evaluate(nodes.len() * points, |k| {
        let node = &nodes[k / points];
        let t = solver.transmission_at(node.pos, det[k % points])?;
        Ok(t.max(0.0))
    })?;
    let (t1_per_well, t1_mean) = reduce(&nodes, wells.len(), points, &values);

    let t1_oracle = with_oracle.then(|| {
        let beta = params.shift_ratio(5) - 1.0;
        let oracle: Vec<f64> = nodes
            .iter()
            .flat_map(|node| {
                let g = params.g0 * mode_function(node.pos, params);
                let shift = params.delta_ac + beta * light_shift(node.pos, params);
                det.iter()
                    .map(move |&d| linear_transmission_oracle(d, g, params.kappa, params.gamma, shift))
            })
            .collect();
        reduce(&nodes, wells.len(), points, &oracle).1
    });

    Ok(SpectrumResult {
        grid: grid.clone(),
        t1_mean,
        t1_per_well,
        well_indices: wells.iter().map(|w| w.index).collect(),
        t1_oracle,
        params_digest: params_digest(params, reduction, grid, ensemble),
    })
}

impl SpectrumResult {
    /// Largest `|t1_mean - t1_oracle|`, if the oracle was evaluated.
    pub fn max_oracle_difference(&self) -> Option<f64> {
        self.t1_oracle
            .as_ref()
            .map(|o| o.iter().zip(&self.t1_mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn peaks(&self) -> Result<PeakReport> {
        find_peaks(self.grid.detunings(), &self.t1_mean)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("detuning_mhz,t1_mean");
        if self.t1_oracle.is_some() {
            out.push_str(",t1_oracle");
        }
        for idx in &self.well_indices {
            let _ = write!(out, ",t1_well_{idx}");
        }
        out.push('\n');
        for (p, d) in self.grid.detunings_mhz().into_iter().enumerate() {
            out.push_str(&sig(d, 12));
            let _ = write!(out, ",{}", sig(self.t1_mean[p], 12));
            if let Some(o) = &self.t1_oracle {
                let _ = write!(out, ",{}", sig(o[p], 12));
            }
            for curve in &self.t1_per_well {
                let _ = write!(out, ",{}", sig(curve[p], 12));
            }
            out.push('\n');
        }
        out
    }
}

/// Outcome of the two-peak analysis. Positions are probe detunings in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeakReport {
    Resolved {
        positions: [f64; 2],
        heights: [f64; 2],
        central_minimum: f64,
    },
    /// Fewer than two interior local maxima.
    Unresolved { maxima: usize },
}

impl PeakReport {
    pub fn splitting(&self) -> Option<f64> {
        match self {
            PeakReport::Resolved { positions, .. } => Some(positions[1] - positions[0]),
            PeakReport::Unresolved { .. } => None,
        }
    }
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d12 - d01) / (x[2] - x[0]);
    if !(curv < 0.0) {
        return (x[1], y[1]);
    }
    let slope_mid = d01 + curv * (x[1] - x[0]);
    // p(t) = y1 + slope_mid (t - x1) + curv (t - x1)^2 around the center
    let shift = -slope_mid / (2.0 * curv);
    let shift = shift.clamp(x[0] - x[1], x[2] - x[1]);
    (x[1] + shift, y[1] + slope_mid * shift + curv * shift * shift)
}

/// Locates the two largest interior local maxima (3-point quadratic
/// interpolation) and the smallest sample between them.
pub fn find_peaks(detunings: &[f64], values: &[f64]) -> Result<PeakReport> {
    if detunings.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: detunings.len(),
            found: values.len(),
        });
    }
    if detunings.len() < 3 {
        return Err(Error::invalid("find_peaks", "need at least three grid points"));
    }
    let mut maxima: Vec<usize> = (1..values.len() - 1)
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect();
    if maxima.len() < 2 {
        return Ok(PeakReport::Unresolved { maxima: maxima.len() });
    }
    maxima.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut top = [maxima[0], maxima[1]];
    top.sort_unstable();
    let fit = |i: usize| {
        parabola_vertex(
            [detunings[i - 1], detunings[i], detunings[i + 1]],
            [values[i - 1], values[i], values[i + 1]],
        )
    };
    let (p0, h0) = fit(top[0]);
    let (p1, h1) = fit(top[1]);
    let central_minimum = values[top[0]..=top[1]].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PeakReport::Resolved {
        positions: [p0, p1],
        heights: [h0, h1],
        central_minimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, SystemParams};
    use proptest::prelude::*;

    fn defaults() -> ValidatedParams {
        validate(&SystemParams::default()).unwrap()
    }

    fn single_best_well() -> EnsembleConfig {
        EnsembleConfig {
            threshold: 0.87,
            n_axial: 9,
            n_radial: 5,
            well_limit: Some(1),
        }
    }

    #[test]
    fn grid_construction() {
        let g = ScanGrid::from_config(&ScanConfig::default()).unwrap();
        assert_eq!(g.len(), 241);
        let mhz = g.detunings_mhz();
        assert!((mhz[0] + 60.0).abs() < 1e-12 && (mhz[240] - 60.0).abs() < 1e-12);
        assert!((mhz[121] - 0.5).abs() < 1e-12);
        assert!(ScanGrid::new(vec![0.0]).is_err());
        assert!(ScanGrid::new(vec![1.0, 1.0]).is_err());
        assert!(ScanGrid::uniform(1.0, -1.0, 5).is_err());
    }

    #[test]
    fn oracle_closed_forms() {
        let p = defaults();
        let (g, k, y) = (p.g0, p.kappa, p.gamma);
        for d in [-3.0, 0.0, 0.4, 10.0] {
            let d = d * k;
            let lorentz = k * k / (k * k + d * d);
            assert!((linear_transmission_oracle(d, 0.0, k, y, 0.0) - lorentz).abs() < 1e-15);
        }
        let center = linear_transmission_oracle(0.0, g, k, y, 0.0);
        let two_c = g * g / (k * y);
        assert!((two_c - 108.4).abs() < 0.1);
        assert!((center - (1.0 + two_c).powi(-2)).abs() < 1e-18);
        assert!((center - 8.3e-5).abs() < 1e-6);
        for s in [-1.0, 1.0] {
            let peak = linear_transmission_oracle(s * g, g, k, y, 0.0);
            let exact = k * k * (y * y + g * g) / (k * k * y * y + g * g * (k + y).powi(2));
            assert!((peak - exact).abs() < 1e-14);
            assert!((peak - 0.374).abs() < 0.01);
        }
    }

    #[test]
    fn dressed_eigenvalue_cases() {
        let g = mhz_to_rad(34.0);
        let [lo, hi] = dressed_eigenvalues(g, 0.0, 0.0, 0.0);
        assert!((lo - C64::new(-g, 0.0)).norm() < 1e-6 && (hi - C64::new(g, 0.0)).norm() < 1e-6);
        assert!((rad_to_mhz(hi.re - lo.re) - 68.0).abs() < 1e-9);
        let (k, y, d) = (mhz_to_rad(4.1), mhz_to_rad(2.6), mhz_to_rad(13.0));
        let [a, b] = dressed_eigenvalues(0.0, k, y, d);
        assert!((a - C64::new(0.0, -k)).norm() < 1e-6);
        assert!((b - C64::new(d, -y)).norm() < 1e-6);
    }

    #[test]
    fn dressed_eigenvalues_match_dense_oracle() {
        use faer::Mat;
        let p = defaults();
        for delta_mhz in [-13.0, 0.0, 13.0, 40.0] {
            let d = mhz_to_rad(delta_mhz);
            let m = Mat::<C64>::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => C64::new(d, -p.gamma),
                (1, 1) => C64::new(0.0, -p.kappa),
                _ => C64::new(p.g0, 0.0),
            });
            let mut dense = m.eigenvalues().unwrap();
            dense.sort_by(|a, b| a.re.total_cmp(&b.re));
            let ours = dressed_eigenvalues(p.g0, p.kappa, p.gamma, d);
            for (a, b) in ours.iter().zip(&dense) {
                assert!((a - b).norm() < 1e-6 * p.g0, "{a} vs {b}");
            }
            // Undamped real parts: ±sqrt(g² + (Δ/2)²) + Δ/2.
            let [lo, hi] = dressed_eigenvalues(p.g0, 0.0, 0.0, d);
            let r = (p.g0 * p.g0 + d * d / 4.0).sqrt();
            assert!((hi.re - (r + d / 2.0)).abs() < 1e-6 && (lo.re - (d / 2.0 - r)).abs() < 1e-6);
        }
    }

    #[test]
    fn parabola_recovers_exact_vertex() {
        let f = |x: f64| 3.0 - 2.0 * (x - 0.37).powi(2);
        let (x, y) = parabola_vertex([0.0, 0.5, 1.5], [f(0.0), f(0.5), f(1.5)]);
        assert!((x - 0.37).abs() < 1e-12 && (y - 3.0).abs() < 1e-12);
    }

    #[test]
    fn peaks_on_oracle_curve() {
        let p = defaults();
        let grid = ScanGrid::uniform(-60.0, 60.0, 1201).unwrap();
        let t: Vec<f64> = grid.detunings().iter().map(|&d| linear_transmission_oracle(d, p.g0, p.kappa, p.gamma, 0.0)).collect();
        let report = find_peaks(grid.detunings(), &t).unwrap();
        let split = rad_to_mhz(report.splitting().unwrap());
        assert!((split - 68.0).abs() < 0.5, "{split}");
        let PeakReport::Resolved { heights, central_minimum, positions } = report else { unreachable!() };
        assert!(heights.iter().all(|h| (h - 0.374).abs() < 0.01));
        assert!(central_minimum <= 1e-4);
        let tol = (p.kappa + p.gamma) / 2.0;
        let eig = dressed_eigenvalues(p.g0, p.kappa, p.gamma, 0.0);
        for (pos, e) in positions.iter().zip(&eig) {
            assert!((pos - e.re).abs() <= tol);
        }
    }

    #[test]
    fn empty_cavity_is_unresolved() {
        let p = defaults();
        let grid = ScanGrid::uniform(-20.0, 20.0, 81).unwrap();
        let t: Vec<f64> = grid.detunings().iter().map(|&d| linear_transmission_oracle(d, 0.0, p.kappa, p.gamma, 0.0)).collect();
        assert_eq!(find_peaks(grid.detunings(), &t).unwrap(), PeakReport::Unresolved { maxima: 1 });
        assert!(find_peaks(&[0.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(find_peaks(&[0.0, 1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn single_cold_well_matches_oracle() {
        let mut s = SystemParams::default();
        s.temperature_fraction = 0.0;
        s.drive_photon_number = 1e-6;
        let p = validate(&s).unwrap();
        let grid = ScanGrid::uniform(-60.0, 60.0, 61).unwrap();
        let r = scan(&p, &ModelReduction::two_level(1), &grid, &single_best_well(), true).unwrap();
        assert_eq!(r.t1_per_well.len(), 1);
        assert!(r.max_oracle_difference().unwrap() < 1e-4);
        assert!(r.t1_mean.iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn thermal_oracle_average_uses_node_weights() {
        let p = defaults();
        let grid = ScanGrid::uniform(-40.0, 40.0, 9).unwrap();
        let ens = EnsembleConfig { well_limit: Some(2), n_axial: 3, n_radial: 3, ..single_best_well() };
        let r = scan(&p, &ModelReduction::two_level(1), &grid, &ens, true).unwrap();
        let wells = ensemble_wells(&p, &ens).unwrap();
        let widths = thermal_widths(&p);
        let mut expect = vec![0.0; grid.len()];
        for w in &wells {
            for (pos, wt) in quadrature_nodes(w, &widths, 3, 3).unwrap().nodes {
                let g = p.g0 * mode_function(pos, &p);
                for (e, &d) in expect.iter_mut().zip(grid.detunings()) {
                    *e += wt * linear_transmission_oracle(d, g, p.kappa, p.gamma, 0.0) / wells.len() as f64;
                }
            }
        }
        for (a, b) in r.t1_oracle.unwrap().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn oracle_requires_two_level_single_mode() {
        let p = defaults();
        let grid = ScanGrid::uniform(-1.0, 1.0, 3).unwrap();
        let red = ModelReduction { mode_count: ModeCount::Two, ..ModelReduction::two_level(1) };
        assert!(matches!(scan(&p, &red, &grid, &single_best_well(), true), Err(Error::Config(_))));
    }

    #[test]
    fn empty_cavity_scan_is_lorentzian() {
        let mut s = SystemParams::default();
        s.g0_mhz = 1e-9;
        let p = validate(&s).unwrap();
        let grid = ScanGrid::uniform(-20.0, 20.0, 41).unwrap();
        let r = scan(&p, &ModelReduction::two_level(2), &grid, &single_best_well(), false).unwrap();
        assert!((r.t1_mean[20] - 1.0).abs() < 1e-6);
        for (t, &d) in r.t1_mean.iter().zip(grid.detunings()) {
            assert!((t - p.kappa * p.kappa / (p.kappa * p.kappa + d * d)).abs() < 1e-6);
        }
    }

    #[test]
    fn enlarging_the_well_set_never_widens_the_splitting() {
        let mut s = SystemParams::default();
        s.temperature_fraction = 0.0;
        let p = validate(&s).unwrap();
        let grid = ScanGrid::uniform(-50.0, 50.0, 401).unwrap();
        let mut last = f64::INFINITY;
        for threshold in [0.97, 0.87, 0.7, 0.5] {
            let ens = EnsembleConfig { threshold, n_axial: 1, n_radial: 1, well_limit: None };
            let r = scan(&p, &ModelReduction::two_level(1), &grid, &ens, false).unwrap();
            let split = r.peaks().unwrap().splitting().unwrap();
            assert!(split <= last + 1e-9, "threshold {threshold}: {split} > {last}");
            last = split;
        }
    }

    #[test]
    fn scan_is_deterministic_and_digest_tracks_inputs() {
        let p = defaults();
        let grid = ScanGrid::uniform(-30.0, 30.0, 13).unwrap();
        let ens = EnsembleConfig { well_limit: Some(3), n_axial: 3, n_radial: 3, ..single_best_well() };
        let a = scan(&p, &ModelReduction::two_level(1), &grid, &ens, false).unwrap();
        let b = scan(&p, &ModelReduction::two_level(1), &grid, &ens, false).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.params_digest, b.params_digest);
        assert_eq!(a.params_digest.len(), 64);
        let other = ScanGrid::uniform(-30.0, 30.0, 15).unwrap();
        assert_ne!(params_digest(&p, &ModelReduction::two_level(1), &other, &ens), a.params_digest);
    }

    #[test]
    fn csv_layout() {
        let p = defaults();
        let grid = ScanGrid::uniform(-10.0, 10.0, 5).unwrap();
        let ens = EnsembleConfig { well_limit: Some(2), n_axial: 1, n_radial: 1, ..single_best_well() };
        let r = scan(&p, &ModelReduction::two_level(1), &grid, &ens, true).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        let header = format!("detuning_mhz,t1_mean,t1_oracle,t1_well_{},t1_well_{}", r.well_indices[0], r.well_indices[1]);
        assert_eq!(lines[0], header);
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("-10,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 5));
        assert!(!csv.contains('\r'));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn oracle_is_a_bounded_even_function(d in -200.0f64..200.0, g in 0.0f64..80.0, k in 0.5f64..10.0, y in 0.5f64..10.0) {
            let (d, g, k, y) = (mhz_to_rad(d), mhz_to_rad(g), mhz_to_rad(k), mhz_to_rad(y));
            let t = linear_transmission_oracle(d, g, k, y, 0.0);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&t));
            prop_assert!((t - linear_transmission_oracle(-d, g, k, y, 0.0)).abs() <= 1e-12);
        }

        #[test]
        fn oracle_mirrors_with_atomic_detuning(d in -100.0f64..100.0, delta in -30.0f64..30.0) {
            let p = defaults();
            let (d, delta) = (mhz_to_rad(d), mhz_to_rad(delta));
            let a = linear_transmission_oracle(d, p.g0, p.kappa, p.gamma, delta);
            let b = linear_transmission_oracle(-d, p.g0, p.kappa, p.gamma, -delta);
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn eigenvalue_trace_and_determinant(g in 0.0f64..50.0, k in 0.0f64..10.0, y in 0.0f64..10.0, delta in -30.0f64..30.0) {
            let [a, b] = dressed_eigenvalues(g, k, y, delta);
            let tr = C64::new(delta, -y - k);
            let det = C64::new(delta, -y) * C64::new(0.0, -k) - g * g;
            prop_assert!((a + b - tr).norm() <= 1e-9 * (1.0 + tr.norm()));
            prop_assert!((a * b - det).norm() <= 1e-9 * (1.0 + det.norm()));
        }
    }
}
