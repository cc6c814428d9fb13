//! Complex sparse operators on tensor-product Hilbert spaces.
//!
//! Composite indices are row-major: in `a ⊗ b` the index of `b` runs fastest.
//! Superoperators act on column-stacked density matrices,
//! `vec(rho)[i + j*d] = rho[i][j]`.

mod steady;
mod superop;

pub use steady::{
    steady_state, steady_state_with, BasisSymmetry, DensityState, ParametricLiouvillian, SolveMethod,
    SolveOptions, POSITIVITY_TOL,
};
pub use superop::{commutator_superop, dissipator_superop, liouvillian};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Upper bound on the dimension produced by [`tensor`].
pub const DEFAULT_DIM_LIMIT: usize = 1_000_000;

/// Entries smaller than this fraction of the largest magnitude are dropped.
const PRUNE_RELATIVE: f64 = 1e-15;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex sparse matrix with entries sorted by `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    /// Builds an operator from unordered triplets; duplicates are summed and
    /// negligible entries pruned.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut raw: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &raw {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
        }
        raw.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(raw.len());
        for (r, c, v) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let max = merged.iter().map(|e| e.2.norm()).fold(0.0, f64::max);
        let cutoff = PRUNE_RELATIVE * max;
        merged.retain(|e| e.2.norm() > cutoff);
        SparseOperator {
            dim,
            entries: merged,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        SparseOperator {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![ONE; dim])
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_triplets(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
    }

    /// Projector |i><i| in dimension `dim`.
    pub fn projector(dim: usize, i: usize) -> Self {
        Self::from_triplets(dim, [(i, i, ONE)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries
            .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
            .map(|i| self.entries[i].2)
            .unwrap_or(ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v)))
    }

    pub fn conj(&self) -> Self {
        SparseOperator {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, v.conj())).collect(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, v * factor)))
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(
            self.dim,
            self.entries.iter().chain(other.entries.iter()).copied(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_re(-1.0))
    }

    /// `Σ c_k · A_k`; all operators must share one dimension.
    pub fn linear_combination(dim: usize, terms: &[(C64, &SparseOperator)]) -> Result<Self> {
        let mut triplets = Vec::new();
        for (c, op) in terms {
            if op.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim,
                });
            }
            triplets.extend(op.entries.iter().map(|&(r, col, v)| (r, col, v * c)));
        }
        Ok(Self::from_triplets(dim, triplets))
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let row_ptr = other.row_pointers();
        let mut triplets = Vec::new();
        for &(r, k, a) in &self.entries {
            for &(_, c, b) in &other.entries[row_ptr[k]..row_ptr[k + 1]] {
                triplets.push((r, c, a * b));
            }
        }
        Ok(Self::from_triplets(self.dim, triplets))
    }

    fn row_pointers(&self) -> Vec<usize> {
        let mut ptr = vec![0usize; self.dim + 1];
        for &(r, _, _) in &self.entries {
            ptr[r + 1] += 1;
        }
        for i in 0..self.dim {
            ptr[i + 1] += ptr[i];
        }
        ptr
    }

    /// `self · x` for a dense vector.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut y = vec![ZERO; self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        Ok(y)
    }

    /// Largest |A - A†| entry relative to the largest |A| entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let defect = self
            .entries
            .iter()
            .map(|&(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max);
        defect / max
    }

    pub fn is_hermitian(&self, relative_tol: f64) -> bool {
        self.hermiticity_defect() <= relative_tol
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim * self.dim];
        for &(r, c, v) in &self.entries {
            out[r * self.dim + c] = v;
        }
        out
    }
}

/// Ladder operator `a` truncated at Fock state `n_max`: entries `sqrt(n)` at
/// `(n-1, n)`.
pub fn annihilator(n_max: usize) -> SparseOperator {
    SparseOperator::from_triplets(
        n_max + 1,
        (1..=n_max).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    )
}

/// Kronecker product `a ⊗ b`, bounded by [`DEFAULT_DIM_LIMIT`].
pub fn tensor(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator> {
    tensor_with_limit(a, b, DEFAULT_DIM_LIMIT)
}

pub fn tensor_with_limit(a: &SparseOperator, b: &SparseOperator, limit: usize) -> Result<SparseOperator> {
    let dim = a
        .dim
        .checked_mul(b.dim)
        .filter(|&d| d <= limit)
        .ok_or(Error::DimensionLimit {
            dim: a.dim.saturating_mul(b.dim),
            limit,
        })?;
    let bd = b.dim;
    let mut entries = Vec::with_capacity(a.nnz() * b.nnz());
    for &(i, j, av) in &a.entries {
        for &(k, l, bv) in &b.entries {
            entries.push((i * bd + k, j * bd + l, av * bv));
        }
    }
    entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let max = entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max);
    entries.retain(|e| e.2.norm() > PRUNE_RELATIVE * max);
    Ok(SparseOperator { dim, entries })
}

/// Embeds `op` acting on factor `slot` of a product space with the given
/// factor dimensions.
pub fn embed(op: &SparseOperator, slot: usize, dims: &[usize]) -> Result<SparseOperator> {
    if op.dim() != dims[slot] {
        return Err(Error::DimensionMismatch {
            expected: dims[slot],
            found: op.dim(),
        });
    }
    let mut acc = SparseOperator::identity(1);
    for (i, &d) in dims.iter().enumerate() {
        let factor = if i == slot {
            op.clone()
        } else {
            SparseOperator::identity(d)
        };
        acc = tensor(&acc, &factor)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn dense_kron(a: &SparseOperator, b: &SparseOperator) -> Vec<C64> {
        let (n, m) = (a.dim(), b.dim());
        let (ad, bd) = (a.to_dense(), b.to_dense());
        let d = n * m;
        let mut out = vec![ZERO; d * d];
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k) * d + (j * m + l)] = ad[i * n + j] * bd[k * m + l];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn identity_tensor_identity() {
        let t = tensor(&SparseOperator::identity(2), &SparseOperator::identity(3)).unwrap();
        assert_eq!(t, SparseOperator::identity(6));
    }

    #[test]
    fn lowering_tensor_identity() {
        let sm = SparseOperator::from_triplets(2, [(0, 1, ONE)]);
        let t = tensor(&sm, &SparseOperator::identity(2)).unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(t.entries(), &[(0, 2, ONE), (1, 3, ONE)]);
    }

    #[test]
    fn ladder_tensor_matches_dense_kronecker() {
        let a = annihilator(2);
        let t = tensor(&a, &a).unwrap();
        assert_eq!(t.to_dense(), dense_kron(&a, &a));
    }

    #[test]
    fn tensor_dimension_limit() {
        let a = SparseOperator::identity(1001);
        let err = tensor(&a, &a).unwrap_err();
        assert!(matches!(err, Error::DimensionLimit { .. }));
        assert!(tensor_with_limit(&annihilator(3), &annihilator(3), 15).is_err());
    }

    #[test]
    fn annihilator_entries() {
        assert_eq!(annihilator(1).entries(), &[(0, 1, ONE)]);
        let a2 = annihilator(2);
        assert_eq!(a2.get(0, 1), ONE);
        assert!((a2.get(1, 2) - c(2f64.sqrt())).norm() < 1e-15);
        assert_eq!(a2.nnz(), 2);
    }

    #[test]
    fn number_operator_counts_photons() {
        for n_max in 1..6 {
            let a = annihilator(n_max);
            let num = a.adjoint().matmul(&a).unwrap();
            for n in 0..=n_max {
                let mut ket = vec![ZERO; n_max + 1];
                ket[n] = ONE;
                let out = num.apply(&ket).unwrap();
                for (k, v) in out.iter().enumerate() {
                    let expect = if k == n { n as f64 } else { 0.0 };
                    assert!((v - c(expect)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn duplicates_merge_and_zeros_prune() {
        let op = SparseOperator::from_triplets(3, [(0, 0, c(1.0)), (0, 0, c(-1.0)), (2, 1, c(2.0)), (2, 1, c(1.0))]);
        assert_eq!(op.entries(), &[(2, 1, c(3.0))]);
        let tiny = SparseOperator::from_triplets(2, [(0, 0, c(1.0)), (1, 1, c(1e-17))]);
        assert_eq!(tiny.nnz(), 1);
    }

    #[test]
    fn embed_places_factor() {
        let a = annihilator(1);
        let e = embed(&a, 1, &[2, 2, 3]).unwrap();
        let direct = tensor(&tensor(&SparseOperator::identity(2), &a).unwrap(), &SparseOperator::identity(3)).unwrap();
        assert_eq!(e, direct);
    }

    fn arb_op(dim: usize) -> impl Strategy<Value = SparseOperator> {
        proptest::collection::vec((0..dim, 0..dim, -3i32..4, -3i32..4), 0..8).prop_map(move |v| {
            SparseOperator::from_triplets(dim, v.into_iter().map(|(r, col, re, im)| (r, col, C64::new(re as f64, im as f64))))
        })
    }

    proptest! {
        #[test]
        fn tensor_is_associative(a in arb_op(2), b in arb_op(3), cc in arb_op(2)) {
            let left = tensor(&tensor(&a, &b).unwrap(), &cc).unwrap();
            let right = tensor(&a, &tensor(&b, &cc).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn tensor_matches_dense(a in arb_op(3), b in arb_op(2)) {
            prop_assert_eq!(tensor(&a, &b).unwrap().to_dense(), dense_kron(&a, &b));
        }
    }
}
