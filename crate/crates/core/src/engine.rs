//! Driven, damped atom-cavity model at one position and probe frequency.
//!
//! Basis order is atom ⊗ mode x ⊗ mode y. The frame rotates at the probe
//! frequency; `probe_detuning` is `ω_p - ω_C1` in rad/s.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::atom::{coupling_operator, dipole_lowering, LevelScheme, ZeemanState};
use crate::config::{AtomicBasis, ModeCount, ModelReduction, ValidatedParams};
use crate::error::{Error, Result};
use crate::operator::{
    annihilator, commutator_superop, embed, liouvillian, steady_state_with, BasisSymmetry, DensityState,
    ParametricLiouvillian, SolveOptions, SparseOperator, C64, ONE,
};
use crate::trap::{fort_potential, mode_function, Position};

/// Operators of one reduced model, independent of position and detuning.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    reduction: ModelReduction,
    scheme: LevelScheme,
    dims: Vec<usize>,
    /// Embedded annihilators of the linear modes x (and y).
    modes: Vec<SparseOperator>,
    /// `(q, a_q)` for the circular components the atom couples to.
    circular: Vec<(i32, SparseOperator)>,
    probe: SparseOperator,
    /// `(m', |e,m'><e,m'|)` embedded.
    excited: Vec<(i32, SparseOperator)>,
    /// Embedded `D_q` for q = -1, 0, +1 (zero operators dropped).
    dipoles: Vec<SparseOperator>,
}

impl ModelSpace {
    pub fn new(params: &ValidatedParams, reduction: &ModelReduction) -> Result<Self> {
        reduction.validate()?;
        let scheme = match reduction.atomic_basis {
            AtomicBasis::TwoLevel => LevelScheme::two_level(),
            AtomicBasis::ZeemanFull => LevelScheme::cesium_d2(),
        };
        let levels = reduction.photon_cutoff + 1;
        let mut dims = vec![scheme.dim(), levels];
        if reduction.mode_count == ModeCount::Two {
            dims.push(levels);
        }
        let a = annihilator(reduction.photon_cutoff);
        let modes: Vec<SparseOperator> = (1..dims.len()).map(|slot| embed(&a, slot, &dims)).collect::<Result<_>>()?;
        let dim: usize = dims.iter().product();

        let theta = params.polarization_angle;
        let r = FRAC_1_SQRT_2;
        let combine = |terms: &[(C64, &SparseOperator)]| SparseOperator::linear_combination(dim, terms);
        let (probe, plus, minus) = match reduction.mode_count {
            ModeCount::One => {
                let a = &modes[0];
                let (plus, minus) = match reduction.atomic_basis {
                    AtomicBasis::TwoLevel => (a.clone(), None),
                    AtomicBasis::ZeemanFull => (
                        a.scale(C64::from_polar(r, -theta)),
                        Some(a.scale(C64::from_polar(r, theta))),
                    ),
                };
                (a.clone(), plus, minus)
            }
            ModeCount::Two => {
                let (ax, ay) = (&modes[0], &modes[1]);
                let probe = combine(&[(C64::new(theta.cos(), 0.0), ax), (C64::new(theta.sin(), 0.0), ay)])?;
                let plus = combine(&[(C64::new(r, 0.0), ax), (C64::new(0.0, -r), ay)])?;
                let minus = match reduction.atomic_basis {
                    AtomicBasis::TwoLevel => None,
                    AtomicBasis::ZeemanFull => Some(combine(&[(C64::new(r, 0.0), ax), (C64::new(0.0, r), ay)])?),
                };
                (probe, plus, minus)
            }
        };
        let mut circular = vec![(1, plus)];
        if let Some(minus) = minus {
            circular.push((-1, minus));
        }

        let excited = scheme
            .excited()
            .map(|(idx, m)| Ok((m, embed(&SparseOperator::projector(scheme.dim(), idx), 0, &dims)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut dipoles = Vec::new();
        for q in -1..=1 {
            let d = dipole_lowering(&scheme, q)?;
            if !d.is_zero() {
                dipoles.push(embed(&d, 0, &dims)?);
            }
        }
        Ok(ModelSpace {
            reduction: *reduction,
            scheme,
            dims,
            modes,
            circular,
            probe,
            excited,
            dipoles,
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn reduction(&self) -> &ModelReduction {
        &self.reduction
    }

    pub fn scheme(&self) -> &LevelScheme {
        &self.scheme
    }

    pub fn probe(&self) -> &SparseOperator {
        &self.probe
    }

    /// `a_p† a_p`.
    pub fn probe_number(&self) -> Result<SparseOperator> {
        self.probe.adjoint().matmul(&self.probe)
    }

    /// Position- and detuning-independent part: y-mode offset, atomic
    /// detuning and the probe drive.
    fn h_fixed(&self, params: &ValidatedParams) -> Result<SparseOperator> {
        let d = self.dim();
        let eps = C64::new(params.drive_amplitude(), 0.0);
        let probe_dag = self.probe.adjoint();
        let mut terms: Vec<(C64, &SparseOperator)> = vec![(eps, &self.probe), (eps, &probe_dag)];
        let ny;
        if let Some(ay) = self.modes.get(1) {
            ny = ay.adjoint().matmul(ay)?;
            terms.push((C64::new(params.mode_splitting, 0.0), &ny));
        }
        for (_, p) in &self.excited {
            terms.push((C64::new(params.delta_ac, 0.0), p));
        }
        SparseOperator::linear_combination(d, &terms)
    }

    /// Coefficient of the probe detuning: `-(Σ a_k† a_k + P_e)`.
    fn h_detuning(&self) -> Result<SparseOperator> {
        let numbers: Vec<SparseOperator> = self.modes.iter().map(|a| a.adjoint().matmul(a)).collect::<Result<_>>()?;
        let mut terms: Vec<(C64, &SparseOperator)> = numbers.iter().map(|n| (-ONE, n)).collect();
        for (_, p) in &self.excited {
            terms.push((-ONE, p));
        }
        SparseOperator::linear_combination(self.dim(), &terms)
    }

    /// Coefficient of the local coupling `g₀ψ`.
    fn h_coupling(&self) -> Result<SparseOperator> {
        let mut acc = SparseOperator::zeros(self.dim());
        for (q, a_q) in &self.circular {
            acc = acc.add(&coupling_operator(&self.scheme, *q, a_q, 1.0)?)?;
        }
        Ok(acc)
    }

    /// Coefficient of `2π U(r)/h`: differential excited-state light shifts.
    fn h_light_shift(&self, params: &ValidatedParams) -> Result<SparseOperator> {
        let terms: Vec<(C64, &SparseOperator)> = self
            .excited
            .iter()
            .map(|(m, p)| (C64::new(params.shift_ratio(*m) - 1.0, 0.0), p))
            .collect();
        SparseOperator::linear_combination(self.dim(), &terms)
    }

    fn jumps(&self, params: &ValidatedParams) -> Vec<SparseOperator> {
        let ck = (2.0 * params.kappa).sqrt();
        let cg = (2.0 * params.gamma).sqrt();
        self.modes
            .iter()
            .map(|a| a.scale_re(ck))
            .chain(self.dipoles.iter().map(|d| d.scale_re(cg)))
            .collect()
    }

    /// Reflection through the plane containing the cavity axis and x:
    /// `m -> -m` and `a_y -> -a_y`. Only offered for the full Zeeman basis;
    /// whether the generator actually commutes with it (probe along x or a
    /// single mode, mirror-symmetric light shifts) is checked by the solver.
    pub fn mirror_symmetry(&self) -> Result<Option<BasisSymmetry>> {
        if self.reduction.atomic_basis != AtomicBasis::ZeemanFull {
            return Ok(None);
        }
        let states = self.scheme.states();
        let rest = self.dim() / states.len();
        let levels = self.reduction.photon_cutoff + 1;
        let mut perm = Vec::with_capacity(self.dim());
        let mut signs = Vec::with_capacity(self.dim());
        for s in states {
            let mirror = self
                .scheme
                .index_of(ZeemanState { m: -s.m, ..*s })
                .ok_or_else(|| Error::Contract("level scheme is not mirror symmetric".into()))?;
            for r in 0..rest {
                perm.push(mirror * rest + r);
                let n_y = if self.modes.len() == 2 { r % levels } else { 0 };
                signs.push(if n_y % 2 == 0 { 1.0 } else { -1.0 });
            }
        }
        BasisSymmetry::new(perm, signs).map(Some)
    }

    /// Reduced atomic populations, one per basis state.
    pub fn atomic_populations(&self, state: &DensityState) -> Result<Vec<(ZeemanState, f64)>> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        let rest = self.dim() / self.scheme.dim();
        let pops = state.populations();
        Ok(self
            .scheme
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, pops[i * rest..(i + 1) * rest].iter().sum()))
            .collect())
    }
}

/// Fully specified model at one point.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub hamiltonian: SparseOperator,
    pub jumps: Vec<SparseOperator>,
    pub probe_mode_annihilator: SparseOperator,
    pub dim: usize,
    pub position: Position,
    pub probe_detuning: f64,
    pub reduction: ModelReduction,
}

/// `2π U(r)/h` in rad/s.
pub fn light_shift(pos: Position, params: &ValidatedParams) -> f64 {
    2.0 * PI * fort_potential(pos, params)
}

pub fn build_model(params: &ValidatedParams, reduction: &ModelReduction, pos: Position, probe_detuning: f64) -> Result<ModelInstance> {
    let space = ModelSpace::new(params, reduction)?;
    let g = params.g0 * mode_function(pos, params);
    let u = light_shift(pos, params);
    let hamiltonian = SparseOperator::linear_combination(
        space.dim(),
        &[
            (ONE, &space.h_fixed(params)?),
            (C64::new(probe_detuning, 0.0), &space.h_detuning()?),
            (C64::new(g, 0.0), &space.h_coupling()?),
            (C64::new(u, 0.0), &space.h_light_shift(params)?),
        ],
    )?;
    Ok(ModelInstance {
        hamiltonian,
        jumps: space.jumps(params),
        probe_mode_annihilator: space.probe.clone(),
        dim: space.dim(),
        position: pos,
        probe_detuning,
        reduction: *reduction,
    })
}

/// `⟨a_p† a_p⟩ / drive_photon_number`, assembling and solving from scratch.
pub fn transmission(params: &ValidatedParams, reduction: &ModelReduction, pos: Position, probe_detuning: f64) -> Result<f64> {
    let model = build_model(params, reduction, pos, probe_detuning)?;
    let l = liouvillian(&model.hamiltonian, &model.jumps)?;
    let rho = steady_state_with(&l, &SolveOptions::default())?;
    let a = &model.probe_mode_annihilator;
    let n = rho.expectation(&a.adjoint().matmul(a)?)?.re;
    Ok(n / params.drive_photon_number)
}

/// Reusable solver: the Liouvillian is affine in (δ, g₀ψ, 2πU/h), so one
/// symbolic factorization serves every scan point.
#[derive(Debug)]
pub struct TransmissionSolver {
    space: ModelSpace,
    parametric: ParametricLiouvillian,
    probe_number: SparseOperator,
    has_light_shift: bool,
    drive_photon_number: f64,
    g0: f64,
    options: SolveOptions,
    params: ValidatedParams,
}

impl TransmissionSolver {
    pub fn new(params: &ValidatedParams, reduction: &ModelReduction) -> Result<Self> {
        Self::with_options(params, reduction, SolveOptions::default())
    }

    pub fn with_options(params: &ValidatedParams, reduction: &ModelReduction, options: SolveOptions) -> Result<Self> {
        let space = ModelSpace::new(params, reduction)?;
        let fixed = liouvillian(&space.h_fixed(params)?, &space.jumps(params))?;
        let mut terms = vec![
            fixed,
            commutator_superop(&space.h_detuning()?)?,
            commutator_superop(&space.h_coupling()?)?,
        ];
        let shift = space.h_light_shift(params)?;
        let has_light_shift = !shift.is_zero();
        if has_light_shift {
            terms.push(commutator_superop(&shift)?);
        }
        let reference: Vec<f64> = (0..terms.len()).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
        let mirrored = space
            .mirror_symmetry()?
            .and_then(|sym| ParametricLiouvillian::with_symmetry(&terms, &reference, Some(&sym)).ok());
        let parametric = match mirrored {
            Some(p) => p,
            None => ParametricLiouvillian::new(&terms, &reference)?,
        };
        Ok(TransmissionSolver {
            probe_number: space.probe_number()?,
            space,
            parametric,
            has_light_shift,
            drive_photon_number: params.drive_photon_number,
            g0: params.g0,
            options,
            params: params.clone(),
        })
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    /// Real unknowns per solve after the Hermitian and mirror reductions.
    pub fn unknowns(&self) -> usize {
        self.parametric.unknowns()
    }

    pub fn params(&self) -> &ValidatedParams {
        &self.params
    }

    /// Steady state for local coupling `g` and light shift `u` (both rad/s).
    pub fn state_for(&self, g: f64, u: f64, probe_detuning: f64) -> Result<DensityState> {
        let mut coeffs = vec![1.0, probe_detuning, g];
        if self.has_light_shift {
            coeffs.push(u);
        }
        self.parametric.solve_with(&coeffs, &self.options)
    }

    pub fn transmission_for(&self, g: f64, u: f64, probe_detuning: f64) -> Result<f64> {
        let rho = self.state_for(g, u, probe_detuning)?;
        Ok(rho.expectation(&self.probe_number)?.re / self.drive_photon_number)
    }

    pub fn state_at(&self, pos: Position, probe_detuning: f64) -> Result<DensityState> {
        let g = self.g0 * mode_function(pos, &self.params);
        self.state_for(g, light_shift(pos, &self.params), probe_detuning)
    }

    pub fn transmission_at(&self, pos: Position, probe_detuning: f64) -> Result<f64> {
        let g = self.g0 * mode_function(pos, &self.params);
        self.transmission_for(g, light_shift(pos, &self.params), probe_detuning)
    }
}
