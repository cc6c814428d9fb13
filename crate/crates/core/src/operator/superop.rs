use super::{tensor, SparseOperator, C64};
use crate::error::{Error, Result};

/// Relative tolerance for the Hermiticity precondition on H.
const HERMITIAN_TOL: f64 = 1e-12;

/// Superoperator of `rho -> -i [h, rho]`.
pub fn commutator_superop(h: &SparseOperator) -> Result<SparseOperator> {
    let id = SparseOperator::identity(h.dim());
    let left = tensor(&id, h)?;
    let right = tensor(&h.transpose(), &id)?;
    Ok(left.sub(&right)?.scale(C64::new(0.0, -1.0)))
}

/// Superoperator of `rho -> J rho J† - ½ {J†J, rho}`.
pub fn dissipator_superop(jump: &SparseOperator) -> Result<SparseOperator> {
    let id = SparseOperator::identity(jump.dim());
    let jdj = jump.adjoint().matmul(jump)?;
    let sandwich = tensor(&jump.conj(), jump)?;
    let left = tensor(&id, &jdj)?;
    let right = tensor(&jdj.transpose(), &id)?;
    let half = C64::new(-0.5, 0.0);
    SparseOperator::linear_combination(
        sandwich.dim(),
        &[(C64::new(1.0, 0.0), &sandwich), (half, &left), (half, &right)],
    )
}

/// Lindblad generator `L vec(rho) = vec(-i[H, rho] + Σ_k D[L_k] rho)` in the
/// column-stacking convention.
pub fn liouvillian(h: &SparseOperator, jumps: &[SparseOperator]) -> Result<SparseOperator> {
    let d = h.dim();
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Contract(format!(
            "Hamiltonian is not Hermitian (relative defect {defect:.3e})"
        )));
    }
    let mut acc = commutator_superop(h)?;
    for jump in jumps {
        if jump.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: jump.dim(),
            });
        }
        acc = acc.add(&dissipator_superop(jump)?)?;
    }
    Ok(acc)
}
