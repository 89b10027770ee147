//! Closed-form impossibility quantities: the target-state dissipation
//! overlap, the open-loop bound `delta_d`, the feedback bound `Delta_d` with
//! its coefficient sums `phi1` and `phi2`, the target drift identity, and the
//! worst-eigenstate selector.

use serde::Serialize;

use crate::error::{QfcError, Result};
use crate::state::{
    comm, dissipator_matrix, innovation_matrix, CMatrix, DensityMatrix, HermitianOperator,
    MeasurementChannel, TargetState,
};

/// `sqrt(Tr(m))` with tiny negative radicands clamped to zero. All radicands
/// are traces of PSD-symmetrized products; anything below -1e-12 signals an
/// implementation error.
fn sqrt_trace(m: &CMatrix) -> Result<f64> {
    let t = m.trace().re;
    if t < -1e-12 {
        return Err(QfcError::InvalidState(format!("negative radicand {t:.3e}")));
    }
    Ok(t.max(0.0).sqrt())
}

fn check_dims(l: &MeasurementChannel, target: &TargetState) -> Result<()> {
    if l.dim() != target.dim() {
        return Err(QfcError::DimensionMismatch { expected: l.dim(), got: target.dim() });
    }
    Ok(())
}

/// Off-diagonal weight of column `d`: `sum_{i != d} |L_id|^2`.
pub fn offdiagonal_column_weight(l: &MeasurementChannel, d: usize) -> f64 {
    (0..l.dim())
        .filter(|&i| i != d)
        .map(|i| l.data()[(i, d)].norm_sqr())
        .sum()
}

/// `Tr(rho_d D[L] rho_d)`, which equals `-sum_{i != d} |L_id|^2`.
///
/// Both evaluation routes are computed and must agree to 1e-12.
pub fn dissipation_at_target(l: &MeasurementChannel, target: &TargetState) -> Result<f64> {
    check_dims(l, target)?;
    let pd = target.projector().data();
    let superop = (pd * dissipator_matrix(l.data(), pd)).trace().re;
    let column = -offdiagonal_column_weight(l, target.index());
    assert!(
        (superop - column).abs() <= 1e-12,
        "dissipation routes disagree: {superop} vs {column}"
    );
    Ok(superop)
}

/// `Tr((H[L] rho_d)^2)`.
fn innovation_square_at_target(l: &MeasurementChannel, target: &TargetState) -> f64 {
    let h = innovation_matrix(l.data(), target.projector().data());
    (&h * &h).trace().re
}

/// Open-loop impossibility bound
/// `delta_d = Tr^2(rho_d D[L] rho_d) / {2 [2 phi1-style denominator]^2}`.
pub fn delta_d(l: &MeasurementChannel, target: &TargetState) -> Result<f64> {
    check_dims(l, target)?;
    if l.data().norm() == 0.0 {
        return Err(QfcError::InvalidParameter("delta_d undefined for L = 0".into()));
    }
    let numerator = dissipation_at_target(l, target)?.powi(2);
    let denom_base = phi1(l, target)?;
    Ok(numerator / (2.0 * (denom_base * denom_base)))
}

/// First coefficient sum:
/// `phi1 = 2 Tr^{1/2}((L*L)^2) + Tr^{1/2}((L* rho_d L)^2) + Tr^{1/2}(L*L L*L rho_d)`.
pub fn phi1(l: &MeasurementChannel, target: &TargetState) -> Result<f64> {
    check_dims(l, target)?;
    let lm = l.data();
    let ld = lm.adjoint();
    let ldl = &ld * lm;
    let pd = target.projector().data();
    let t1 = 2.0 * sqrt_trace(&(&ldl * &ldl))?;
    let lrl = &ld * pd * lm;
    let t2 = sqrt_trace(&(&lrl * &lrl))?;
    let t3 = sqrt_trace(&(&ldl * &ldl * pd))?;
    Ok(t1 + t2 + t3)
}

/// Second coefficient sum (seven terms; independent of `eta`):
/// `phi2 = 2 Tr^{1/2}((L*L)^2) + 2 Tr^{1/2}(L*L L*L rho_d) + 2 Tr(L*L)
///       + 2 Tr^{1/2}(L L* rho_d L*L rho_d)
///       + 3 Tr^{1/2}((L+L*)^2) |Tr((L+L*) rho_d)|
///       + 3 Tr((L+L*)^2)
///       + 2 Tr^{1/2}((L+L*)^2) Tr^{1/2}((L+L*)^2 rho_d)`.
pub fn phi2(l: &MeasurementChannel, target: &TargetState) -> Result<f64> {
    check_dims(l, target)?;
    let lm = l.data();
    let ld = lm.adjoint();
    let ldl = &ld * lm;
    let lld = lm * &ld;
    let pd = target.projector().data();
    let re2 = lm + &ld; // L + L*
    let re2sq = &re2 * &re2;

    let t1 = 2.0 * sqrt_trace(&(&ldl * &ldl))?;
    let t2 = 2.0 * sqrt_trace(&(&ldl * &ldl * pd))?;
    let t3 = 2.0 * ldl.trace().re;
    let t4 = 2.0 * sqrt_trace(&(&lld * pd * &ldl * pd))?;
    let t5 = 3.0 * sqrt_trace(&re2sq)? * ((&re2 * pd).trace().re).abs();
    let t6 = 3.0 * re2sq.trace().re;
    let t7 = 2.0 * sqrt_trace(&re2sq)? * sqrt_trace(&(&re2sq * pd))?;
    Ok(t1 + t2 + t3 + t4 + t5 + t6 + t7)
}

/// Feedback impossibility bound with the proof-consistent squared numerator:
/// `Delta_d = [2 Tr(rho_d D[L] rho_d) + eta Tr((H[L] rho_d)^2)]^2
///            / {2 [2 phi1 + eta phi2]^2}`.
pub fn capital_delta_d(l: &MeasurementChannel, target: &TargetState, eta: f64) -> Result<f64> {
    check_dims(l, target)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(QfcError::InvalidParameter(format!("eta must lie in [0, 1], got {eta}")));
    }
    if l.data().norm() == 0.0 {
        return Err(QfcError::InvalidParameter("Delta_d undefined for L = 0".into()));
    }
    let numerator =
        2.0 * dissipation_at_target(l, target)? + eta * innovation_square_at_target(l, target);
    let denom_base = 2.0 * phi1(l, target)? + eta * phi2(l, target)?;
    if denom_base == 0.0 {
        return Err(QfcError::InvalidParameter("Delta_d denominator is zero".into()));
    }
    Ok(numerator * numerator / (2.0 * denom_base * denom_base))
}

/// The literal printed form of the bound (unsquared, sign-inconsistent
/// numerator), exposed for transparency next to the squared form.
pub fn capital_delta_d_as_printed(
    l: &MeasurementChannel,
    target: &TargetState,
    eta: f64,
) -> Result<f64> {
    check_dims(l, target)?;
    let numerator =
        2.0 * dissipation_at_target(l, target)? + eta * innovation_square_at_target(l, target);
    let denom_base = 2.0 * phi1(l, target)? + eta * phi2(l, target)?;
    if denom_base == 0.0 {
        return Err(QfcError::InvalidParameter("Delta_d denominator is zero".into()));
    }
    Ok(numerator / (2.0 * denom_base * denom_base))
}

/// Residual of the target drift identity:
/// `|2 kappa Tr(rho_d D[L] rho_d) + eta kappa Tr((H[L] rho_d)^2)
///   + 2 kappa (1 - eta) sum_{i != d} |L_id|^2|`, analytically zero.
pub fn target_drift_identity(
    l: &MeasurementChannel,
    target: &TargetState,
    eta: f64,
    kappa: f64,
) -> Result<f64> {
    check_dims(l, target)?;
    let lhs = 2.0 * kappa * dissipation_at_target(l, target)?
        + eta * kappa * innovation_square_at_target(l, target);
    let rhs = -2.0 * kappa * (1.0 - eta) * offdiagonal_column_weight(l, target.index());
    Ok((lhs - rhs).abs())
}

/// Full per-eigenstate certificate.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    /// Zero-based target eigenstate index.
    pub d: usize,
    pub dissipation_at_target: f64,
    pub delta_d: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub capital_delta_d: f64,
    pub capital_delta_d_as_printed: f64,
    pub eta: f64,
    pub drift_identity_residual: f64,
    /// True when `[H0, L] = 0` (or no `H0` supplied and `L` is diagonal):
    /// every certified bound is zero.
    pub commuting_channel: bool,
}

pub fn bound_report(
    l: &MeasurementChannel,
    target: &TargetState,
    eta: f64,
    kappa: f64,
    commuting_channel: bool,
) -> Result<BoundReport> {
    Ok(BoundReport {
        d: target.index(),
        dissipation_at_target: dissipation_at_target(l, target)?,
        delta_d: delta_d(l, target)?,
        phi1: phi1(l, target)?,
        phi2: phi2(l, target)?,
        capital_delta_d: capital_delta_d(l, target, eta)?,
        capital_delta_d_as_printed: capital_delta_d_as_printed(l, target, eta)?,
        eta,
        drift_identity_residual: target_drift_identity(l, target, eta, kappa)?,
        commuting_channel,
    })
}

/// Selects the eigenstate with the largest off-diagonal column weight of `L`
/// (smallest index wins ties) and returns its certificate. When `[H0, L] = 0`
/// the certified bounds are all zero and the report is flagged.
pub fn worst_eigenstate(
    l: &MeasurementChannel,
    h0: &HermitianOperator,
    eta: f64,
) -> Result<(usize, BoundReport)> {
    if l.dim() != h0.dim() {
        return Err(QfcError::DimensionMismatch { expected: h0.dim(), got: l.dim() });
    }
    let commuting = comm(h0.data(), l.data()).norm() <= 1e-12;
    let mut best = 0usize;
    let mut best_weight = -1.0;
    for d in 0..l.dim() {
        let w = offdiagonal_column_weight(l, d);
        if w > best_weight + 1e-15 {
            best = d;
            best_weight = w;
        }
    }
    let target = TargetState::new(l.dim(), best, l.data()[(best, best)])?;
    let report = bound_report(l, &target, eta, 1.0, commuting)?;
    Ok((best, report))
}

/// `rho_d`-projector helper for callers that only have a report.
pub fn target_projector(dim: usize, d: usize) -> DensityMatrix {
    DensityMatrix::basis_state(dim, d)
}
