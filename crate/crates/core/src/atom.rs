//! Zeeman structure of the Cs 6S1/2 F=4 -> 6P3/2 F'=5 transition.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operator::{tensor, SparseOperator, C64};

pub const GROUND_F: i32 = 4;
pub const EXCITED_F: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Manifold {
    GroundF4,
    ExcitedF5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZeemanState {
    pub manifold: Manifold,
    pub m: i32,
}

impl ZeemanState {
    pub fn ground(m: i32) -> Self {
        ZeemanState {
            manifold: Manifold::GroundF4,
            m,
        }
    }

    pub fn excited(m: i32) -> Self {
        ZeemanState {
            manifold: Manifold::ExcitedF5,
            m,
        }
    }

    pub fn is_excited(&self) -> bool {
        self.manifold == Manifold::ExcitedF5
    }
}

/// Ordered atomic basis (ground ascending m, then excited ascending m) with
/// the coupling weights `G(m, q) = <4, m; 1, q | 5, m+q>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelScheme {
    states: Vec<ZeemanState>,
    couplings: BTreeMap<(i32, i32), f64>,
}

impl LevelScheme {
    /// All 9 ground and 11 excited sublevels.
    pub fn cesium_d2() -> Self {
        let mut states: Vec<ZeemanState> = (-GROUND_F..=GROUND_F).map(ZeemanState::ground).collect();
        states.extend((-EXCITED_F..=EXCITED_F).map(ZeemanState::excited));
        let mut couplings = BTreeMap::new();
        for m in -GROUND_F..=GROUND_F {
            for q in -1..=1 {
                if (m + q).abs() <= EXCITED_F {
                    couplings.insert((m, q), clebsch_gordan(GROUND_F, m, 1, q, EXCITED_F, m + q));
                }
            }
        }
        LevelScheme { states, couplings }
    }

    /// The stretched pair |4, 4> <-> |5', 5'> alone.
    pub fn two_level() -> Self {
        LevelScheme {
            states: vec![ZeemanState::ground(GROUND_F), ZeemanState::excited(EXCITED_F)],
            couplings: BTreeMap::from([((GROUND_F, 1), 1.0)]),
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[ZeemanState] {
        &self.states
    }

    pub fn index_of(&self, state: ZeemanState) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    pub fn coupling(&self, m: i32, q: i32) -> Option<f64> {
        self.couplings.get(&(m, q)).copied()
    }

    pub fn couplings(&self) -> &BTreeMap<(i32, i32), f64> {
        &self.couplings
    }

    /// `(index, m')` for every excited state.
    pub fn excited(&self) -> impl Iterator<Item = (usize, i32)> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_excited())
            .map(|(i, s)| (i, s.m))
    }
}

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).map(f64::from).product()
}

/// `<j1, m1; j2, m2 | j, m>` for integer angular momenta (Racah's formula).
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m
        || m1.abs() > j1
        || m2.abs() > j2
        || m.abs() > j
        || j < (j1 - j2).abs()
        || j > j1 + j2
    {
        return 0.0;
    }
    let prefactor = (f64::from(2 * j + 1) * factorial(j + j1 - j2) * factorial(j - j1 + j2) * factorial(j1 + j2 - j)
        / factorial(j1 + j2 + j + 1))
    .sqrt();
    let norm = (factorial(j + m)
        * factorial(j - m)
        * factorial(j1 - m1)
        * factorial(j1 + m1)
        * factorial(j2 - m2)
        * factorial(j2 + m2))
    .sqrt();
    let k_min = 0.max(j2 - j - m1).max(j1 - j + m2);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let sum: f64 = (k_min..=k_max)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / (factorial(k)
                * factorial(j1 + j2 - j - k)
                * factorial(j1 - m1 - k)
                * factorial(j2 + m2 - k)
                * factorial(j - j2 + m1 + k)
                * factorial(j - j1 - m2 + k))
        })
        .sum();
    prefactor * norm * sum
}

/// Coupling weight of the `(F=4, m) -> (F'=5, m+q)` transition. The
/// stretched coefficient is exactly 1, so this is the bare coefficient.
pub fn clebsch_weight(m: i32, q: i32) -> Result<f64> {
    if m.abs() > GROUND_F {
        return Err(Error::invalid("m", format!("|m| = {} exceeds F = 4", m.abs())));
    }
    if !(-1..=1).contains(&q) {
        return Err(Error::invalid("q", format!("polarization index {q} not in -1..=1")));
    }
    if (m + q).abs() > EXCITED_F {
        return Err(Error::invalid("q", format!("m + q = {} exceeds F' = 5", m + q)));
    }
    Ok(clebsch_gordan(GROUND_F, m, 1, q, EXCITED_F, m + q))
}

/// `D_q = Σ_{m'} G(m'-q, q) |g, m'-q><e, m'|` on the atomic space.
pub fn dipole_lowering(scheme: &LevelScheme, q: i32) -> Result<SparseOperator> {
    if !(-1..=1).contains(&q) {
        return Err(Error::invalid("q", format!("polarization index {q} not in -1..=1")));
    }
    let mut triplets = Vec::new();
    for (e_idx, m_e) in scheme.excited() {
        let m_g = m_e - q;
        if let (Some(g), Some(g_idx)) = (scheme.coupling(m_g, q), scheme.index_of(ZeemanState::ground(m_g))) {
            triplets.push((g_idx, e_idx, C64::new(g, 0.0)));
        }
    }
    Ok(SparseOperator::from_triplets(scheme.dim(), triplets))
}

/// `g_local (a_q† D_q + D_q† a_q)` on the composite space atom ⊗ rest, where
/// `mode` is the already-embedded annihilator of the circular mode `q`.
pub fn coupling_operator(scheme: &LevelScheme, q: i32, mode: &SparseOperator, g_local: f64) -> Result<SparseOperator> {
    if q == 0 {
        return Err(Error::Contract(
            "pi polarization does not match a cavity mode along the cavity axis".into(),
        ));
    }
    let atom_dim = scheme.dim();
    if mode.dim() % atom_dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: atom_dim,
            found: mode.dim(),
        });
    }
    let d = tensor(&dipole_lowering(scheme, q)?, &SparseOperator::identity(mode.dim() / atom_dim))?;
    let forward = mode.adjoint().matmul(&d)?;
    Ok(forward.add(&forward.adjoint())?.scale_re(g_local))
}
