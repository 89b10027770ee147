//! Feedback laws: the local Lyapunov control `u(rho) = -Tr(i[Hb, rho] rho_d)`
//! and the three-case switching law with a hysteresis buffer region.

use num_complex::Complex64;

use crate::dynamics::Controller;
use crate::error::{QfcError, Result};
use crate::state::{comm, DensityMatrix, HermitianOperator, TargetState};

const IMAGINARY_RESIDUE_TOL: f64 = 1e-12;

/// Local Lyapunov control `u = -Tr(i [Hb, rho] rho_d)`.
///
/// The trace is real for Hermitian inputs; an imaginary residue above
/// tolerance signals corrupted inputs and is reported as an error.
pub fn local_control(
    hb: &HermitianOperator,
    rho: &DensityMatrix,
    target: &TargetState,
) -> Result<f64> {
    if hb.dim() != rho.dim() || hb.dim() != target.dim() {
        return Err(QfcError::DimensionMismatch { expected: hb.dim(), got: rho.dim() });
    }
    let t = (comm(hb.data(), rho.data()) * target.projector().data()).trace();
    let value = -(Complex64::new(0.0, 1.0) * t);
    if value.im.abs() > IMAGINARY_RESIDUE_TOL {
        return Err(QfcError::ImaginaryResidue { residual: value.im.abs() });
    }
    Ok(value.re)
}

/// Hysteresis memory: which boundary of the buffer region was crossed last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Stabilize,
    Excite,
}

/// Three-case switching controller.
///
/// With `f = Tr(rho rho_d)`:
/// 1. `f >= gamma`: local Lyapunov control, mode becomes `Stabilize`;
/// 2. `f <= gamma/2`: constant excitation `u = 1`, mode becomes `Excite`;
/// 3. `gamma/2 < f < gamma` (buffer): keep the law selected by the last
///    boundary crossing.
///
/// A state that starts inside the buffer takes the `Excite` branch.
#[derive(Debug, Clone)]
pub struct SwitchingController {
    target: TargetState,
    hb: HermitianOperator,
    gamma: f64,
    mode: Mode,
}

impl SwitchingController {
    pub fn new(
        target: TargetState,
        hb: HermitianOperator,
        gamma: f64,
        rho0: &DensityMatrix,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(QfcError::InvalidParameter(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        if hb.dim() != target.dim() {
            return Err(QfcError::DimensionMismatch { expected: target.dim(), got: hb.dim() });
        }
        let overlap = (rho0.data() * target.projector().data()).trace().re;
        let mode = if overlap >= gamma { Mode::Stabilize } else { Mode::Excite };
        Ok(Self { target, hb, gamma, mode })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn target(&self) -> &TargetState {
        &self.target
    }

    /// One controller evaluation: returns the control value and updates the
    /// hysteresis memory.
    pub fn step(&mut self, rho: &DensityMatrix) -> Result<f64> {
        let overlap = (rho.data() * self.target.projector().data()).trace().re;
        if overlap >= self.gamma {
            self.mode = Mode::Stabilize;
            local_control(&self.hb, rho, &self.target)
        } else if overlap <= self.gamma / 2.0 {
            self.mode = Mode::Excite;
            Ok(1.0)
        } else {
            match self.mode {
                Mode::Stabilize => local_control(&self.hb, rho, &self.target),
                Mode::Excite => Ok(1.0),
            }
        }
    }
}

impl Controller for SwitchingController {
    fn control(&mut self, rho: &DensityMatrix) -> Result<f64> {
        self.step(rho)
    }
}

/// Local Lyapunov law applied everywhere (no switching).
#[derive(Debug, Clone)]
pub struct LocalController {
    pub target: TargetState,
    pub hb: HermitianOperator,
}

impl Controller for LocalController {
    fn control(&mut self, rho: &DensityMatrix) -> Result<f64> {
        local_control(&self.hb, rho, &self.target)
    }
}

/// Constant control value.
#[derive(Debug, Clone, Copy)]
pub struct ConstantController(pub f64);

impl Controller for ConstantController {
    fn control(&mut self, _rho: &DensityMatrix) -> Result<f64> {
        Ok(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::CMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_x() -> HermitianOperator {
        HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap()
    }

    #[test]
    fn local_control_values() {
        let hb = sigma_x();
        let target = TargetState::new(2, 0, c(1.0, 0.0)).unwrap();
        let rho_d = DensityMatrix::basis_state(2, 0);
        assert_eq!(local_control(&hb, &rho_d, &target).unwrap(), 0.0);

        let rho = DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.5, 0.0)],
        ))
        .unwrap();
        assert!((local_control(&hb, &rho, &target).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn local_control_vanishes_on_real_symmetric_inputs() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..100 {
            let n = rng.gen_range(2..5);
            let g = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), 0.0));
            let hb = HermitianOperator::new((g.clone() + g.transpose()).scale(0.5)).unwrap();
            let h = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), 0.0));
            let p = &h * h.transpose();
            let rho = DensityMatrix::new(p.scale(1.0 / p.trace().re)).unwrap();
            let target = TargetState::new(n, rng.gen_range(0..n), c(0.0, 0.0)).unwrap();
            let u = local_control(&hb, &rho, &target).unwrap();
            assert!(u.abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn local_control_is_bounded_by_operator_norm() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..1000 {
            let n = rng.gen_range(2..5);
            let hb = crate::sampling::random_hermitian(&mut rng, n);
            let rho = crate::sampling::random_density(&mut rng, n);
            let target = TargetState::new(n, rng.gen_range(0..n), c(0.0, 0.0)).unwrap();
            let u = local_control(&hb, &rho, &target).unwrap();
            assert!(u.abs() <= 2.0 * hb.operator_norm() + 1e-12);
        }
    }

    fn overlap_state(f: f64) -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(f, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0 - f, 0.0)],
        ))
        .unwrap()
    }

    #[test]
    fn switching_cases_and_hysteresis() {
        let target = TargetState::new(2, 0, c(1.0, 0.0)).unwrap();
        let hb = sigma_x();

        // Case 1: above gamma -> local law, Stabilize.
        let mut ctrl =
            SwitchingController::new(target.clone(), hb.clone(), 0.5, &overlap_state(0.9)).unwrap();
        let u = ctrl.step(&overlap_state(0.9)).unwrap();
        assert_eq!(u, local_control(&hb, &overlap_state(0.9), &target).unwrap());
        assert_eq!(ctrl.mode(), Mode::Stabilize);

        // Case 2: below gamma/2 -> u = 1, Excite.
        let u = ctrl.step(&overlap_state(0.1)).unwrap();
        assert_eq!(u, 1.0);
        assert_eq!(ctrl.mode(), Mode::Excite);

        // Case 3: inside the buffer the memory decides.
        let u = ctrl.step(&overlap_state(0.3)).unwrap();
        assert_eq!(u, 1.0);
        assert_eq!(ctrl.mode(), Mode::Excite);

        let mut ctrl =
            SwitchingController::new(target.clone(), hb.clone(), 0.5, &overlap_state(0.9)).unwrap();
        ctrl.step(&overlap_state(0.9)).unwrap();
        let u = ctrl.step(&overlap_state(0.3)).unwrap();
        assert_eq!(u, local_control(&hb, &overlap_state(0.3), &target).unwrap());
        assert_eq!(ctrl.mode(), Mode::Stabilize);

        // Boundary ties belong to the closed cases 1 and 2.
        let mut ctrl =
            SwitchingController::new(target.clone(), hb.clone(), 0.5, &overlap_state(0.25)).unwrap();
        assert_eq!(ctrl.mode(), Mode::Excite);
        ctrl.step(&overlap_state(0.5)).unwrap();
        assert_eq!(ctrl.mode(), Mode::Stabilize);
        ctrl.step(&overlap_state(0.25)).unwrap();
        assert_eq!(ctrl.mode(), Mode::Excite);

        // No chattering strictly inside the buffer.
        let mut ctrl =
            SwitchingController::new(target.clone(), hb.clone(), 0.5, &overlap_state(0.3)).unwrap();
        for _ in 0..10 {
            ctrl.step(&overlap_state(0.35)).unwrap();
            assert_eq!(ctrl.mode(), Mode::Excite);
        }

        assert!(SwitchingController::new(target, hb, 1.5, &overlap_state(0.3)).is_err());
    }
}
