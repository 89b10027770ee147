//! Time evolution: the stochastic master equation, its unnormalized linear
//! form, the pure-state stochastic Schrodinger equation, the two open-loop
//! models, measurement-record synthesis and an analytic drift evaluator.

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QfcError, Result};
use crate::state::{
    comm, dissipator_matrix, innovation_matrix, project_to_state_space, CMatrix, CVector,
    DensityMatrix, HermitianOperator, SystemModel, TargetState,
};
use crate::state::distance;

/// Counter-based Wiener increment source. Increments are keyed by
/// `(seed, trajectory_index, step_index)` so trajectories can run in any
/// order, on any number of workers, with identical results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStream {
    pub seed: u64,
    pub trajectory_index: u64,
    pub dt: f64,
}

impl NoiseStream {
    pub fn new(seed: u64, trajectory_index: u64, dt: f64) -> Self {
        Self { seed, trajectory_index, dt }
    }

    /// Standard normal draw for a given step, via fixed-consumption Box-Muller
    /// on a seekable counter RNG.
    pub fn standard_normal(&self, step: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.trajectory_index);
        rng.set_word_pos((step as u128) * 4);
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64); // (0, 1]
        let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64); // [0, 1)
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Wiener increment `dW ~ N(0, dt)` for one step.
    pub fn increment(&self, step: u64) -> f64 {
        self.dt.sqrt() * self.standard_normal(step)
    }
}

/// Sampled path of one closed-loop trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub controls: Vec<f64>,
    pub distances: Vec<f64>,
    /// Cumulative measurement record `Y_t` at each sample.
    pub record: Vec<f64>,
    pub converged: bool,
    pub final_distance: f64,
}

impl TrajectoryRecord {
    /// CSV export: columns `t,u,D,Y`, then the N^2 state entries row-major
    /// with re/im interleaved.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.dim());
        let mut header = String::from("t,u,D,Y");
        for i in 0..n {
            for j in 0..n {
                header.push_str(&format!(",s{i}{j}_re,s{i}{j}_im"));
            }
        }
        let mut out = header;
        out.push('\n');
        for k in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{},{}",
                self.times[k], self.controls[k], self.distances[k], self.record[k]
            ));
            let m = self.states[k].data();
            for i in 0..n {
                for j in 0..n {
                    let z = m[(i, j)];
                    out.push_str(&format!(",{},{}", z.re, z.im));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Open-loop unitary model: effective Hamiltonian `H0'` (which may differ
/// from the plant's `H0`) plus the control channel.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenLoopModel {
    h0_prime: HermitianOperator,
    hb: HermitianOperator,
}

impl OpenLoopModel {
    pub fn new(h0_prime: HermitianOperator, hb: HermitianOperator) -> Result<Self> {
        if h0_prime.dim() != hb.dim() {
            return Err(QfcError::DimensionMismatch { expected: h0_prime.dim(), got: hb.dim() });
        }
        Ok(Self { h0_prime, hb })
    }

    pub fn h0_prime(&self) -> &HermitianOperator {
        &self.h0_prime
    }

    pub fn hb(&self) -> &HermitianOperator {
        &self.hb
    }
}

/// Per-trajectory feedback law evaluated once per step (zero-order hold).
pub trait Controller {
    fn control(&mut self, rho: &DensityMatrix) -> Result<f64>;
}

fn hamiltonian(model: &SystemModel, u: f64) -> CMatrix {
    model.h0().data() + model.hb().data().scale(u)
}

/// Drift matrix of the stochastic master equation:
/// `-i[H0 + u Hb, rho] + kappa D[L] rho`.
pub fn sme_drift(model: &SystemModel, rho: &CMatrix, u: f64) -> CMatrix {
    let h = hamiltonian(model, u);
    comm(&h, rho) * Complex64::new(0.0, -1.0)
        + dissipator_matrix(model.l().data(), rho).scale(model.kappa())
}

/// Diffusion matrix of the stochastic master equation:
/// `sqrt(eta kappa) H[L] rho`.
pub fn sme_diffusion(model: &SystemModel, rho: &CMatrix) -> CMatrix {
    innovation_matrix(model.l().data(), rho).scale((model.eta() * model.kappa()).sqrt())
}

/// One Euler-Maruyama step of the stochastic master equation, followed by
/// projection back to the state space. Eigenstate targets with a diagonal
/// channel and `u = 0` are exact fixed points.
pub fn sme_step(
    model: &SystemModel,
    rho: &DensityMatrix,
    u: f64,
    dt: f64,
    dw: f64,
) -> Result<DensityMatrix> {
    if !(dt > 0.0) {
        return Err(QfcError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let delta = sme_drift(model, rho.data(), u).scale(dt) + sme_diffusion(model, rho.data()).scale(dw);
    if delta.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Ok(rho.clone());
    }
    project_to_state_space(&(rho.data() + delta))
}

/// One Euler-Maruyama step of the unnormalized linear stochastic master
/// equation, driven directly by the measurement record increment `dY`.
/// No normalization is applied.
pub fn linear_sme_step(
    model: &SystemModel,
    rho_tilde: &CMatrix,
    u: f64,
    dt: f64,
    dy: f64,
) -> Result<CMatrix> {
    let tr = rho_tilde.trace().re;
    if tr <= 0.0 {
        return Err(QfcError::NonPositiveTrace { trace: tr });
    }
    let h = hamiltonian(model, u);
    let l = model.l().data();
    let drift = comm(&h, rho_tilde) * Complex64::new(0.0, -1.0)
        + dissipator_matrix(l, rho_tilde).scale(model.kappa());
    let diffusion =
        (l * rho_tilde + rho_tilde * l.adjoint()).scale((model.eta() * model.kappa()).sqrt());
    Ok(rho_tilde + drift.scale(dt) + diffusion.scale(dy))
}

/// One Euler-Maruyama step of the pure-state stochastic Schrodinger equation
/// (perfect detection), without normalization.
pub fn sse_step(
    model: &SystemModel,
    psi: &CVector,
    u: f64,
    dt: f64,
    dw: f64,
) -> Result<CVector> {
    if psi.norm() == 0.0 {
        return Err(QfcError::ZeroVector);
    }
    let h = hamiltonian(model, u);
    let l = model.l().data();
    let ldl = l.adjoint() * l;
    let drift = (&h * psi) * Complex64::new(0.0, -1.0) - (&ldl * psi).scale(model.kappa() / 2.0);
    let diffusion = (l * psi).scale(model.kappa().sqrt());
    Ok(psi + drift.scale(dt) + diffusion.scale(dw))
}

fn master_rhs(model: &SystemModel, rho: &CMatrix, u: f64) -> CMatrix {
    sme_drift(model, rho, u)
}

/// One classical RK4 step of the deterministic master equation with the
/// control held constant over the step.
pub fn master_equation_step(
    model: &SystemModel,
    rho: &DensityMatrix,
    u: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if !(dt > 0.0) {
        return Err(QfcError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let r = rho.data();
    let k1 = master_rhs(model, r, u);
    let k2 = master_rhs(model, &(r + k1.scale(dt / 2.0)), u);
    let k3 = master_rhs(model, &(r + k2.scale(dt / 2.0)), u);
    let k4 = master_rhs(model, &(r + k3.scale(dt)), u);
    let next = r + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
    Ok(DensityMatrix::from_matrix_unchecked(next))
}

/// Exact unitary conjugation step `rho -> U rho U*` with
/// `U = exp(-i (H0' + u Hb) dt)`, via the Hermitian eigendecomposition.
pub fn unitary_step(olc: &OpenLoopModel, rho: &DensityMatrix, u: f64, dt: f64) -> Result<DensityMatrix> {
    if !(dt > 0.0) {
        return Err(QfcError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let g = olc.h0_prime().data() + olc.hb().data().scale(u);
    let eig = SymmetricEigen::new(g);
    let n = rho.dim();
    let phases = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, -eig.eigenvalues[i] * dt)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let unitary = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
    let next = &unitary * rho.data() * unitary.adjoint();
    Ok(DensityMatrix::from_matrix_unchecked(next))
}

/// Measurement record increment `dY = sqrt(eta kappa) Tr[(L + L*) rho] dt + dW`.
pub fn synthesize_measurement_record(
    model: &SystemModel,
    rho: &DensityMatrix,
    dw: f64,
    dt: f64,
) -> f64 {
    let l = model.l().data();
    let signal = ((l + l.adjoint()) * rho.data()).trace().re;
    (model.eta() * model.kappa()).sqrt() * signal * dt + dw
}

/// Scalar functionals whose Ito drift under the stochastic master equation
/// can be evaluated in closed form.
#[derive(Debug, Clone)]
pub enum Functional {
    /// `D(rho, rho_d) = 1 - Tr(rho rho_d)`.
    Distance(TargetState),
    /// `V(rho) = 1 - Tr^2(rho rho_d)`.
    Lyapunov(TargetState),
    /// `Tr(X rho)` for a fixed operator `X`.
    LinearObservable(CMatrix),
}

/// Analytic Ito drift of `f(rho_t)`: the first derivative against the drift
/// matrix plus half the second derivative against the diffusion matrix.
pub fn drift_of_functional(
    model: &SystemModel,
    rho: &DensityMatrix,
    u: f64,
    f: &Functional,
) -> Result<f64> {
    let b = sme_drift(model, rho.data(), u);
    match f {
        Functional::Distance(target) => {
            if target.dim() != model.dim() {
                return Err(QfcError::DimensionMismatch { expected: model.dim(), got: target.dim() });
            }
            Ok(-(b * target.projector().data()).trace().re)
        }
        Functional::Lyapunov(target) => {
            if target.dim() != model.dim() {
                return Err(QfcError::DimensionMismatch { expected: model.dim(), got: target.dim() });
            }
            let sigma = sme_diffusion(model, rho.data());
            let pd = target.projector().data();
            let overlap = (rho.data() * pd).trace().re;
            let first = (b * pd).trace().re;
            let diff = (sigma * pd).trace().re;
            Ok(-2.0 * overlap * first - diff * diff)
        }
        Functional::LinearObservable(x) => {
            if x.nrows() != model.dim() {
                return Err(QfcError::DimensionMismatch { expected: model.dim(), got: x.nrows() });
            }
            Ok((x * b).trace().re)
        }
    }
}

/// Integrate one closed-loop trajectory of the stochastic master equation.
///
/// Deterministic given `(model, controller state, rho0, noise)`. Samples are
/// taken every `sample_every` steps plus the final state; the measurement
/// record is accumulated alongside.
#[allow(clippy::too_many_arguments)]
pub fn simulate_trajectory(
    model: &SystemModel,
    controller: &mut dyn Controller,
    target: &TargetState,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    noise: &NoiseStream,
    sample_every: usize,
    convergence_epsilon: f64,
) -> Result<TrajectoryRecord> {
    if !(t_final > 0.0) || !(dt > 0.0) || sample_every == 0 {
        return Err(QfcError::InvalidParameter(
            "require T > 0, dt > 0 and sample_every >= 1".into(),
        ));
    }
    let steps = (t_final / dt).round() as u64;
    let mut rho = rho0.clone();
    let mut y = 0.0;
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        states: Vec::new(),
        controls: Vec::new(),
        distances: Vec::new(),
        record: Vec::new(),
        converged: false,
        final_distance: 1.0,
    };
    let mut last_u = 0.0;
    for k in 0..steps {
        let u = controller.control(&rho)?;
        last_u = u;
        if k % sample_every as u64 == 0 {
            rec.times.push(k as f64 * dt);
            rec.states.push(rho.clone());
            rec.controls.push(u);
            rec.distances.push(distance(&rho, target)?);
            rec.record.push(y);
        }
        let dw = noise.increment(k);
        y += synthesize_measurement_record(model, &rho, dw, dt);
        rho = sme_step(model, &rho, u, dt, dw)?;
    }
    let final_d = distance(&rho, target)?;
    rec.times.push(steps as f64 * dt);
    rec.states.push(rho);
    rec.controls.push(last_u);
    rec.distances.push(final_d);
    rec.record.push(y);
    rec.final_distance = final_d;
    rec.converged = final_d < convergence_epsilon;
    Ok(rec)
}
