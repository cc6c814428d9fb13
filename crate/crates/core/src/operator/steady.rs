//! Steady states of Lindblad generators.
//!
//! The kernel of `L` is found from the square real system on the Hermitian
//! coordinates of `rho`, with one population row of `L` replaced by the trace
//! functional. Only population rows
//! are linearly dependent (their sum vanishes by trace preservation), so the
//! replaced row is the population row with the largest diagonal magnitude,
//! lowest index on ties.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};

use super::{SparseOperator, C64, ZERO};
use crate::error::{Error, Result};

/// Hermiticity tolerance (max-norm) on a solved density matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue still accepted as numerically positive.
pub const POSITIVITY_TOL: f64 = -1e-8;

const REFINEMENT_STEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Sparse LU, falling back to GMRES when the factorization fails or the
    /// system exceeds [`SolveOptions::direct_limit`].
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Accept when `‖L vec(rho)‖₂ ≤ residual_factor · ‖L‖_F / d`.
    pub residual_factor: f64,
    /// Unknown count above which `Auto` goes straight to GMRES.
    pub direct_limit: usize,
    pub gmres_restart: usize,
    pub gmres_max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: SolveMethod::Auto,
            residual_factor: 1e-9,
            direct_limit: 250_000,
            gmres_restart: 120,
            gmres_max_iterations: 5_000,
        }
    }
}

/// Trace-normalized Hermitian density matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    dim: usize,
    data: Vec<C64>,
}

/// Running sum with an error term (error-free transformations).
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    hi: f64,
    lo: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let s = self.hi + v;
        let bp = s - self.hi;
        self.lo += (self.hi - (s - bp)) + (v - bp);
        self.hi = s;
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.lo += e;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

impl DensityState {
    /// Builds `rho` from a column-stacked vector, normalizing the trace and
    /// symmetrizing away roundoff.
    pub fn from_column_stacked(x: &[C64], dim: usize) -> Result<Self> {
        if x.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: x.len(),
            });
        }
        let trace: C64 = (0..dim).map(|i| x[i * (dim + 1)]).sum();
        if !(trace.norm() > 0.0) || !trace.re.is_finite() {
            return Err(Error::Solver {
                reason: "solution has zero or non-finite trace".into(),
                residual: f64::NAN,
            });
        }
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = x[i + j * dim] / trace;
            }
        }
        let mut defect: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                defect = defect.max((data[i * dim + j] - data[j * dim + i].conj()).norm());
            }
        }
        if defect > HERMITIAN_TOL {
            return Err(Error::Solver {
                reason: format!("steady state not Hermitian (defect {defect:.3e})"),
                residual: f64::NAN,
            });
        }
        for i in 0..dim {
            data[i * dim + i] = C64::new(data[i * dim + i].re, 0.0);
            for j in i + 1..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i].conj());
                data[i * dim + j] = avg;
                data[j * dim + i] = avg.conj();
            }
        }
        Ok(DensityState { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order (dense, O(d³)).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let m = Mat::<C64>::from_fn(self.dim, self.dim, |i, j| self.get(i, j));
        m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Solver {
            reason: format!("eigenvalue decomposition failed: {e:?}"),
            residual: f64::NAN,
        })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// `tr(rho · op)`.
    pub fn expectation(&self, op: &SparseOperator) -> Result<C64> {
        if op.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: op.dim(),
            });
        }
        Ok(op
            .entries()
            .iter()
            .map(|&(r, c, v)| v * self.get(c, r))
            .sum())
    }
}

/// Steady state of `l` with default options.
pub fn steady_state(l: &SparseOperator) -> Result<DensityState> {
    steady_state_with(l, &SolveOptions::default())
}

pub fn steady_state_with(l: &SparseOperator, options: &SolveOptions) -> Result<DensityState> {
    ParametricLiouvillian::new(std::slice::from_ref(l), &[1.0])?.solve_with(&[1.0], options)
}

/// Signed permutation `|i> -> signs[i] |perm[i]>` of the Hilbert basis,
/// required to be an involution.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSymmetry {
    perm: Vec<usize>,
    signs: Vec<f64>,
}

impl BasisSymmetry {
    pub fn new(perm: Vec<usize>, signs: Vec<f64>) -> Result<Self> {
        let d = perm.len();
        if signs.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: signs.len() });
        }
        for i in 0..d {
            let j = perm[i];
            if j >= d || perm[j] != i {
                return Err(Error::Contract(format!("basis map is not an involution at index {i}")));
            }
            if signs[i].abs() != 1.0 || signs[i] != signs[j] {
                return Err(Error::Contract(format!("invalid sign at index {i}")));
            }
        }
        Ok(BasisSymmetry { perm, signs })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Pattern(usize),
    Trace(f64),
}

/// A Liouvillian `L(c) = Σ_k c_k A_k` with real coefficients.
///
/// The unknowns are the real coordinates of a Hermitian `rho` (`Re rho_ij`
/// for `i <= j`, `Im rho_ij` for `i < j`), optionally restricted to the
/// subspace invariant under a basis symmetry. The sparsity pattern is fixed,
/// so the symbolic LU factorization is computed once and reused.
pub struct ParametricLiouvillian {
    hilbert_dim: usize,
    full_rows: Vec<usize>,
    full_cols: Vec<usize>,
    /// Per term, complex values on the union pattern of the full generator.
    full_terms: Vec<Vec<C64>>,
    /// Per coordinate `(x, y)` index pairs: `coords[i * d + j]` for `i <= j`.
    coords: Vec<(usize, usize)>,
    /// Per coordinate: reduced unknown and weight, `None` when forced to zero.
    reduction: Vec<Option<(usize, f64)>>,
    unknowns: usize,
    real_pattern: Vec<(usize, usize)>,
    real_terms: Vec<Vec<f64>>,
    constraint_row: usize,
    constraint_population: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    slot_source: Vec<Slot>,
    symbolic: Option<SymbolicLu<usize>>,
}

impl std::fmt::Debug for ParametricLiouvillian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParametricLiouvillian")
            .field("hilbert_dim", &self.hilbert_dim)
            .field("terms", &self.full_terms.len())
            .field("unknowns", &self.unknowns)
            .field("nnz", &self.real_pattern.len())
            .field("constraint_population", &self.constraint_population)
            .finish()
    }
}

const NO_COORD: usize = usize::MAX;

impl ParametricLiouvillian {
    pub fn new(terms: &[SparseOperator], reference: &[f64]) -> Result<Self> {
        Self::with_symmetry(terms, reference, None)
    }

    /// `reference` coefficients only pick the replaced population row.
    /// With a symmetry, every term must commute with it; the steady state is
    /// then sought among invariant density matrices.
    pub fn with_symmetry(terms: &[SparseOperator], reference: &[f64], symmetry: Option<&BasisSymmetry>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Contract("parametric Liouvillian needs at least one term".into()))?;
        if reference.len() != terms.len() {
            return Err(Error::DimensionMismatch {
                expected: terms.len(),
                found: reference.len(),
            });
        }
        let n = first.dim();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(Error::Contract(format!("superoperator dimension {n} is not a square")));
        }
        for t in terms {
            if t.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: t.dim(),
                });
            }
            check_hermiticity_preserving(t, d)?;
        }
        if let Some(sym) = symmetry {
            if sym.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: sym.dim(),
                });
            }
            for t in terms {
                check_invariance(t, d, sym)?;
            }
        }

        // Union pattern of the complex generator, column-major.
        let mut pattern: Vec<(usize, usize)> = terms
            .iter()
            .flat_map(|t| t.entries().iter().map(|&(r, c, _)| (c, r)))
            .collect();
        pattern.sort_unstable();
        pattern.dedup();
        let mut full_terms = Vec::with_capacity(terms.len());
        for t in terms {
            let mut vals = vec![ZERO; pattern.len()];
            for &(r, c, v) in t.entries() {
                vals[pattern.binary_search(&(c, r)).expect("entry in union pattern")] += v;
            }
            full_terms.push(vals);
        }

        // Real coordinates of a Hermitian matrix.
        let mut coords = vec![(NO_COORD, NO_COORD); n];
        let mut count = 0;
        for j in 0..d {
            for i in 0..=j {
                let x = count;
                count += 1;
                let y = if i < j {
                    count += 1;
                    count - 1
                } else {
                    NO_COORD
                };
                coords[i * d + j] = (x, y);
            }
        }
        debug_assert_eq!(count, n);

        // Orbits of the coordinates under the symmetry.
        let mut image: Vec<(usize, f64)> = (0..n).map(|c| (c, 1.0)).collect();
        if let Some(sym) = symmetry {
            for j in 0..d {
                for i in 0..=j {
                    let (x, y) = coords[i * d + j];
                    let s = sym.signs[i] * sym.signs[j];
                    let (pi, pj) = (sym.perm[i], sym.perm[j]);
                    let (lo, hi) = (pi.min(pj), pi.max(pj));
                    let (px, py) = coords[lo * d + hi];
                    image[x] = (px, s);
                    if y != NO_COORD {
                        image[y] = (py, if pi < pj { s } else { -s });
                    }
                }
            }
        }
        let mut reduction = vec![None; n];
        let mut unknowns = 0;
        for c in 0..n {
            let (img, sign) = image[c];
            if img == c {
                if sign > 0.0 {
                    reduction[c] = Some((unknowns, 1.0));
                    unknowns += 1;
                }
            } else if img > c {
                reduction[c] = Some((unknowns, 1.0));
                reduction[img] = Some((unknowns, sign));
                unknowns += 1;
            }
        }
        // Equations are kept for representative coordinates only.
        let mut row_of = vec![None; n];
        for c in 0..n {
            if let Some((u, w)) = reduction[c] {
                if w == 1.0 && (image[c].0 >= c) {
                    row_of[c] = Some(u);
                }
            }
        }

        // Real reduced matrix per term.
        let mut entries: Vec<Vec<((usize, usize), f64)>> = Vec::with_capacity(terms.len());
        for t in terms {
            let mut list = Vec::with_capacity(4 * t.nnz());
            for &(r, col, v) in t.entries() {
                let (a, b) = (r % d, r / d);
                if a > b {
                    continue;
                }
                let (rx, ry) = coords[a * d + b];
                let row_x = row_of[rx];
                let row_y = if ry == NO_COORD { None } else { row_of[ry] };
                if row_x.is_none() && row_y.is_none() {
                    continue;
                }
                let (i, j) = (col % d, col / d);
                let expanded: [(usize, C64); 2] = if i < j {
                    let (x, y) = coords[i * d + j];
                    [(x, v), (y, v * C64::new(0.0, 1.0))]
                } else if i > j {
                    let (x, y) = coords[j * d + i];
                    [(x, v), (y, v * C64::new(0.0, -1.0))]
                } else {
                    [(coords[i * d + i].0, v), (NO_COORD, ZERO)]
                };
                for (coord, cv) in expanded {
                    if coord == NO_COORD {
                        continue;
                    }
                    let Some((u, w)) = reduction[coord] else { continue };
                    if let Some(rx) = row_x {
                        list.push(((u, rx), w * cv.re));
                    }
                    if let Some(ry) = row_y {
                        list.push(((u, ry), w * cv.im));
                    }
                }
            }
            entries.push(list);
        }
        let mut real_pattern: Vec<(usize, usize)> = entries.iter().flat_map(|l| l.iter().map(|e| e.0)).collect();
        real_pattern.sort_unstable();
        real_pattern.dedup();
        let mut real_terms = Vec::with_capacity(terms.len());
        for list in &entries {
            let mut vals = vec![0.0; real_pattern.len()];
            for &(key, v) in list {
                vals[real_pattern.binary_search(&key).expect("entry in real pattern")] += v;
            }
            real_terms.push(vals);
        }

        // Trace functional and the replaced population row.
        let mut trace = vec![0.0; unknowns];
        for i in 0..d {
            if let Some((u, w)) = reduction[coords[i * d + i].0] {
                trace[u] += w;
            }
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..d {
            let Some(row) = row_of[coords[i * d + i].0] else { continue };
            let diag = match real_pattern.binary_search(&(row, row)) {
                Ok(k) => real_terms.iter().zip(reference).map(|(vals, c)| vals[k] * c).sum::<f64>().abs(),
                Err(_) => 0.0,
            };
            if best.is_none_or(|b| diag > b.2) {
                best = Some((row, i, diag));
            }
        }
        let (constraint_row, constraint_population, _) = best.expect("at least one population row");

        let mut col_ptr = Vec::with_capacity(unknowns + 1);
        let mut row_idx = Vec::new();
        let mut slot_source = Vec::new();
        col_ptr.push(0);
        let mut k = 0;
        for col in 0..unknowns {
            let mut trace_done = trace[col] == 0.0;
            while k < real_pattern.len() && real_pattern[k].0 == col {
                let row = real_pattern[k].1;
                if !trace_done && row > constraint_row {
                    row_idx.push(constraint_row);
                    slot_source.push(Slot::Trace(trace[col]));
                    trace_done = true;
                }
                if row != constraint_row {
                    row_idx.push(row);
                    slot_source.push(Slot::Pattern(k));
                }
                k += 1;
            }
            if !trace_done {
                row_idx.push(constraint_row);
                slot_source.push(Slot::Trace(trace[col]));
            }
            col_ptr.push(row_idx.len());
        }

        let mut me = ParametricLiouvillian {
            hilbert_dim: d,
            full_rows: pattern.iter().map(|p| p.1).collect(),
            full_cols: pattern.iter().map(|p| p.0).collect(),
            full_terms,
            coords,
            reduction,
            unknowns,
            real_pattern,
            real_terms,
            constraint_row,
            constraint_population,
            col_ptr,
            row_idx,
            slot_source,
            symbolic: None,
        };
        if unknowns <= SolveOptions::default().direct_limit {
            me.symbolic = SymbolicLu::try_new(me.symbolic_ref()).ok();
        }
        Ok(me)
    }

    fn symbolic_ref(&self) -> SymbolicSparseColMatRef<'_, usize> {
        let n = self.unknowns;
        SymbolicSparseColMatRef::new_checked(n, n, &self.col_ptr, None, &self.row_idx)
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Real unknowns of the (possibly symmetry-reduced) system.
    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    /// Basis index `i` whose population equation `(L rho)_ii = 0` is replaced
    /// by the trace condition.
    pub fn constraint_population(&self) -> usize {
        self.constraint_population
    }

    pub fn term_count(&self) -> usize {
        self.full_terms.len()
    }

    fn check_coeffs(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.full_terms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.full_terms.len(),
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients", "must be finite"));
        }
        Ok(())
    }

    fn full_values(&self, coeffs: &[f64]) -> Vec<C64> {
        let mut vals = vec![ZERO; self.full_rows.len()];
        for (term, &c) in self.full_terms.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            for (v, t) in vals.iter_mut().zip(term) {
                *v += c * t;
            }
        }
        vals
    }

    /// Assembled `L(c)` as a sparse operator.
    pub fn assemble(&self, coeffs: &[f64]) -> Result<SparseOperator> {
        self.check_coeffs(coeffs)?;
        let vals = self.full_values(coeffs);
        Ok(SparseOperator::from_triplets(
            self.hilbert_dim * self.hilbert_dim,
            (0..vals.len()).map(|k| (self.full_rows[k], self.full_cols[k], vals[k])),
        ))
    }

    pub fn solve(&self, coeffs: &[f64]) -> Result<DensityState> {
        self.solve_with(coeffs, &SolveOptions::default())
    }

    pub fn solve_with(&self, coeffs: &[f64], options: &SolveOptions) -> Result<DensityState> {
        self.check_coeffs(coeffs)?;
        let mut real = vec![0.0; self.real_pattern.len()];
        for (term, &c) in self.real_terms.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            for (v, t) in real.iter_mut().zip(term) {
                *v += c * t;
            }
        }
        let scale = real.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Solver {
                reason: "Liouvillian is zero or non-finite".into(),
                residual: f64::NAN,
            });
        }
        let csc_vals: Vec<f64> = self
            .slot_source
            .iter()
            .map(|s| match *s {
                Slot::Pattern(k) => real[k] / scale,
                Slot::Trace(w) => w,
            })
            .collect();

        let use_direct = match options.method {
            SolveMethod::Direct => true,
            SolveMethod::Iterative => false,
            SolveMethod::Auto => self.unknowns <= options.direct_limit,
        };
        let mut last_err = None;
        if use_direct {
            match self.solve_direct(&csc_vals).and_then(|x| self.accept(coeffs, &x, options)) {
                Ok(rho) => return Ok(rho),
                Err(e) if options.method == SolveMethod::Direct => return Err(e),
                Err(e) => last_err = Some(e),
            }
        }
        match self.solve_gmres(&csc_vals, options).and_then(|x| self.accept(coeffs, &x, options)) {
            Ok(rho) => Ok(rho),
            Err(e) => Err(last_err.map_or(e, |direct| match direct {
                Error::Solver { reason, residual } => Error::Solver {
                    reason: format!("{reason}; iterative fallback also failed"),
                    residual,
                },
                other => other,
            })),
        }
    }

    fn solve_direct(&self, csc_vals: &[f64]) -> Result<Vec<f64>> {
        let n = self.unknowns;
        let symbolic = match &self.symbolic {
            Some(s) => s.clone(),
            None => SymbolicLu::try_new(self.symbolic_ref()).map_err(|e| Error::Solver {
                reason: format!("symbolic factorization failed: {e:?}"),
                residual: f64::NAN,
            })?,
        };
        let mat = SparseColMatRef::new(self.symbolic_ref(), csc_vals);
        let lu = Lu::try_new_with_symbolic(symbolic, mat).map_err(|e| Error::Solver {
            reason: format!("sparse LU failed: {e:?}"),
            residual: f64::NAN,
        })?;
        let mut rhs = Mat::<f64>::zeros(n, 1);
        rhs[(self.constraint_row, 0)] = 1.0;
        lu.solve_in_place(rhs.as_mut());
        let mut x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(x);
        }
        let mut r = self.constrained_residual(csc_vals, &x);
        let mut best = norm2(&r);
        for _ in 0..REFINEMENT_STEPS {
            let mut corr = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
            lu.solve_in_place(corr.as_mut());
            let trial: Vec<f64> = (0..n).map(|i| x[i] + corr[(i, 0)]).collect();
            let r_trial = self.constrained_residual(csc_vals, &trial);
            let res = norm2(&r_trial);
            if !(res < best) {
                break;
            }
            x = trial;
            r = r_trial;
            best = res;
        }
        Ok(x)
    }

    /// `b - A x` for the trace-constrained system, accumulated in
    /// double-double so refinement recovers full working precision.
    fn constrained_residual(&self, vals: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut acc = vec![Compensated::default(); n];
        acc[self.constraint_row].add(1.0);
        for col in 0..n {
            let xc = x[col];
            if xc == 0.0 {
                continue;
            }
            for s in self.col_ptr[col]..self.col_ptr[col + 1] {
                acc[self.row_idx[s]].add_product(-vals[s], xc);
            }
        }
        acc.iter().map(Compensated::value).collect()
    }

    fn csc_apply(&self, vals: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for col in 0..x.len() {
            let xc = x[col];
            if xc == 0.0 {
                continue;
            }
            for s in self.col_ptr[col]..self.col_ptr[col + 1] {
                y[self.row_idx[s]] += vals[s] * xc;
            }
        }
        y
    }

    /// Restarted GMRES with right Jacobi preconditioning on the constrained
    /// system.
    fn solve_gmres(&self, vals: &[f64], options: &SolveOptions) -> Result<Vec<f64>> {
        let n = self.unknowns;
        let mut diag = vec![1.0; n];
        for col in 0..n {
            for s in self.col_ptr[col]..self.col_ptr[col + 1] {
                if self.row_idx[s] == col && vals[s] != 0.0 {
                    diag[col] = vals[s];
                }
            }
        }
        let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&diag).map(|(a, d)| a / d).collect() };
        let mut b = vec![0.0; n];
        b[self.constraint_row] = 1.0;
        let tol = 1e-13;
        let m = options.gmres_restart.max(1).min(n);
        let mut x = vec![0.0; n];
        let mut iterations = 0;
        let mut resid_norm = f64::INFINITY;
        while iterations < options.gmres_max_iterations {
            let ax = self.csc_apply(vals, &x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let beta = norm2(&r);
            resid_norm = beta;
            if beta <= tol {
                return Ok(x);
            }
            let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|z| z / beta).collect()];
            let mut h = vec![vec![0.0; m]; m + 1];
            let mut cs = vec![0.0; m];
            let mut sn = vec![0.0; m];
            let mut g = vec![0.0; m + 1];
            g[0] = beta;
            let mut used = 0;
            for j in 0..m {
                iterations += 1;
                let mut w = self.csc_apply(vals, &precond(&basis[j]));
                for (i, v) in basis.iter().enumerate() {
                    let hij: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                    h[i][j] = hij;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= hij * vk;
                    }
                }
                let wn = norm2(&w);
                h[j + 1][j] = wn;
                for i in 0..j {
                    let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                    h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                    h[i][j] = t;
                }
                let (a, bb) = (h[j][j], h[j + 1][j]);
                let rr = a.hypot(bb);
                if rr == 0.0 {
                    used = j;
                    break;
                }
                cs[j] = a / rr;
                sn[j] = bb / rr;
                h[j][j] = rr;
                h[j + 1][j] = 0.0;
                g[j + 1] = -sn[j] * g[j];
                g[j] *= cs[j];
                used = j + 1;
                resid_norm = g[j + 1].abs();
                if resid_norm <= tol || wn == 0.0 {
                    break;
                }
                basis.push(w.iter().map(|z| z / wn).collect());
            }
            let mut y = vec![0.0; used];
            for i in (0..used).rev() {
                let mut s = g[i];
                for k in i + 1..used {
                    s -= h[i][k] * y[k];
                }
                y[i] = s / h[i][i];
            }
            let mut update = vec![0.0; n];
            for (yi, v) in y.iter().zip(&basis) {
                for (u, vk) in update.iter_mut().zip(v) {
                    *u += yi * vk;
                }
            }
            for (xi, ui) in x.iter_mut().zip(precond(&update)) {
                *xi += ui;
            }
            if used == 0 || x.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        Err(Error::Solver {
            reason: format!("GMRES did not converge in {iterations} iterations"),
            residual: resid_norm,
        })
    }

    /// Rebuilds `rho` and checks the residual contract on the full generator.
    fn accept(&self, coeffs: &[f64], u: &[f64], options: &SolveOptions) -> Result<DensityState> {
        let d = self.hilbert_dim;
        if u.iter().any(|z| !z.is_finite()) {
            return Err(Error::Solver {
                reason: "non-finite solution (singular system)".into(),
                residual: f64::NAN,
            });
        }
        let coord = |c: usize| match self.reduction[c] {
            Some((k, w)) => w * u[k],
            None => 0.0,
        };
        let mut vec_rho = vec![ZERO; d * d];
        for j in 0..d {
            for i in 0..=j {
                let (x, y) = self.coords[i * d + j];
                let v = C64::new(coord(x), if y == NO_COORD { 0.0 } else { coord(y) });
                vec_rho[i + j * d] = v;
                vec_rho[j + i * d] = v.conj();
            }
        }
        let rho = DensityState::from_column_stacked(&vec_rho, d)?;
        for j in 0..d {
            for i in 0..d {
                vec_rho[i + j * d] = rho.get(i, j);
            }
        }
        let full = self.full_values(coeffs);
        let mut lx = vec![ZERO; d * d];
        for k in 0..full.len() {
            lx[self.full_rows[k]] += full[k] * vec_rho[self.full_cols[k]];
        }
        let residual = lx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let frob = full.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let bound = options.residual_factor * frob / d as f64;
        if !(residual <= bound) {
            return Err(Error::Solver {
                reason: format!("residual exceeds {bound:.3e}"),
                residual,
            });
        }
        Ok(rho)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|z| z * z).sum::<f64>().sqrt()
}

/// Requires `L[(a,b),(i,j)] = conj L[(b,a),(j,i)]`, i.e. `L` maps Hermitian
/// matrices to Hermitian matrices.
fn check_hermiticity_preserving(l: &SparseOperator, d: usize) -> Result<()> {
    let tol = 1e-12 * l.max_abs();
    for &(r, c, v) in l.entries() {
        let (a, b, i, j) = (r % d, r / d, c % d, c / d);
        let mirror = l.get(b + a * d, j + i * d);
        if (mirror - v.conj()).norm() > tol {
            return Err(Error::Contract("generator does not preserve Hermiticity".into()));
        }
    }
    Ok(())
}

fn check_invariance(l: &SparseOperator, d: usize, sym: &BasisSymmetry) -> Result<()> {
    let tol = 1e-12 * l.max_abs();
    let (p, s) = (&sym.perm, &sym.signs);
    for &(r, c, v) in l.entries() {
        let (a, b, i, j) = (r % d, r / d, c % d, c / d);
        let image = l.get(p[a] + p[b] * d, p[i] + p[j] * d);
        if (image * (s[a] * s[b] * s[i] * s[j]) - v).norm() > tol {
            return Err(Error::Contract("generator is not invariant under the basis symmetry".into()));
        }
    }
    Ok(())
}
