//! Finite-dimensional state and operator algebra: density matrices, Hermitian
//! operators, measurement channels, superoperators, distances and entropies.
//!
//! All matrices are expressed in the eigenbasis of the free Hamiltonian, so a
//! non-degenerate `H0` is stored diagonal and eigenstate targets are standard
//! basis projectors. Eigenstate indices are zero-based throughout.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QfcError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hermiticity tolerance for validated operator types.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues above this (negative) floor count as nonnegative.
pub const PSD_TOL: f64 = -1e-8;
/// Pairwise eigenvalue gap below which a spectrum counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

pub fn comm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

/// `ab - ba`, with a dimension check.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_dims(a.nrows(), b.nrows())?;
    Ok(comm(a, b))
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(QfcError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Hermitian, positive-semidefinite, unit-trace system state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
    dim: usize,
}

impl DensityMatrix {
    pub fn new(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(QfcError::InvalidState("matrix must be square and nonempty".into()));
        }
        let res = hermitian_residual(&data);
        if res > HERMITIAN_TOL {
            return Err(QfcError::NotHermitian { residual: res });
        }
        let tr = data.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(QfcError::InvalidState(format!(
                "trace {tr} is not 1 within tolerance"
            )));
        }
        let eig = SymmetricEigen::new(hermitize(&data));
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < PSD_TOL {
            return Err(QfcError::InvalidState(format!(
                "minimum eigenvalue {min:.3e} below PSD tolerance"
            )));
        }
        let dim = data.nrows();
        Ok(Self { data, dim })
    }

    /// Skips validation; for internal use where the invariants hold by
    /// construction (unitary conjugation, post-projection reconstruction).
    pub(crate) fn from_matrix_unchecked(data: CMatrix) -> Self {
        let dim = data.nrows();
        Self { data, dim }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let data = CMatrix::identity(dim, dim).scale(1.0 / dim as f64);
        Self { data, dim }
    }

    /// Projector onto a normalized state vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if n < 1e-14 {
            return Err(QfcError::ZeroVector);
        }
        let v = psi.scale(1.0 / n);
        let data = &v * v.adjoint();
        let dim = data.nrows();
        Ok(Self { data, dim })
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut data = CMatrix::zeros(dim, dim);
        data[(index, index)] = Complex64::new(1.0, 0.0);
        Self { data, dim }
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(hermitize(&self.data));
        let mut v: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// N x N complex Hermitian operator (Hamiltonians, Hermitian channels).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    data: CMatrix,
    dim: usize,
}

impl HermitianOperator {
    pub fn new(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(QfcError::InvalidParameter("operator must be square and nonempty".into()));
        }
        let res = hermitian_residual(&data);
        if res > HERMITIAN_TOL {
            return Err(QfcError::NotHermitian { residual: res });
        }
        let dim = data.nrows();
        Ok(Self { data, dim })
    }

    pub fn zero(dim: usize) -> Self {
        Self { data: CMatrix::zeros(dim, dim), dim }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let data = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j { Complex64::new(entries[i], 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        Self { data, dim }
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest singular value; for Hermitian operators this is the largest
    /// absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        let eig = SymmetricEigen::new(self.data.clone());
        eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Pairwise eigenvalue gaps all exceed `DEGENERACY_GAP`.
    pub fn is_nondegenerate(&self) -> bool {
        let eig = SymmetricEigen::new(self.data.clone());
        let mut v: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.windows(2).all(|w| (w[1] - w[0]).abs() > DEGENERACY_GAP)
    }
}

/// General (not necessarily Hermitian) measurement channel operator `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementChannel {
    data: CMatrix,
    dim: usize,
}

impl MeasurementChannel {
    pub fn new(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(QfcError::InvalidParameter("channel must be square and nonempty".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QfcError::InvalidParameter("channel has non-finite entries".into()));
        }
        let dim = data.nrows();
        Ok(Self { data, dim })
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let data = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j { Complex64::new(entries[i], 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        Self { data, dim }
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| {
            (0..self.dim).all(|j| i == j || self.data[(i, j)].norm() <= tol)
        })
    }
}

/// The plant: `(H0, Hb, L, kappa, eta)` of the stochastic master equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    h0: HermitianOperator,
    hb: HermitianOperator,
    l: MeasurementChannel,
    kappa: f64,
    eta: f64,
    dim: usize,
}

impl SystemModel {
    pub fn new(
        h0: HermitianOperator,
        hb: HermitianOperator,
        l: MeasurementChannel,
        kappa: f64,
        eta: f64,
    ) -> Result<Self> {
        let dim = h0.dim();
        check_dims(dim, hb.dim())?;
        check_dims(dim, l.dim())?;
        if !(kappa > 0.0) {
            return Err(QfcError::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(QfcError::InvalidParameter(format!("eta must lie in [0, 1], got {eta}")));
        }
        Ok(Self { h0, hb, l, kappa, eta, dim })
    }

    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn hb(&self) -> &HermitianOperator {
        &self.hb
    }

    pub fn l(&self) -> &MeasurementChannel {
        &self.l
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `[H0, L]` Frobenius norm; zero means a commuting channel.
    pub fn commutation_residual(&self) -> f64 {
        comm(self.h0.data(), self.l.data()).norm()
    }
}

/// An eigenstate target: basis index `d`, projector, state vector and the
/// channel eigenvalue `L_dd` (meaningful when `L` is diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    index: usize,
    projector: DensityMatrix,
    vector: CVector,
    lambda: Complex64,
}

impl TargetState {
    pub fn new(dim: usize, index: usize, lambda: Complex64) -> Result<Self> {
        if index >= dim {
            return Err(QfcError::InvalidParameter(format!(
                "target index {index} out of range for dimension {dim}"
            )));
        }
        let mut vector = CVector::zeros(dim);
        vector[index] = Complex64::new(1.0, 0.0);
        Ok(Self { index, projector: DensityMatrix::basis_state(dim, index), vector, lambda })
    }

    /// Target eigenstate `d` of a model, taking `lambda = L_dd`.
    pub fn eigenstate(model: &SystemModel, index: usize) -> Result<Self> {
        Self::new(model.dim(), index, model.l().data()[(index, index)])
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn projector(&self) -> &DensityMatrix {
        &self.projector
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.projector.dim()
    }
}

/// `D(rho, rho_d) = 1 - Tr(rho rho_d)`, clamped to `[0, 1]`.
pub fn distance(rho: &DensityMatrix, target: &TargetState) -> Result<f64> {
    check_dims(target.dim(), rho.dim())?;
    let overlap = (rho.data() * target.projector().data()).trace().re;
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

/// `Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    (rho.data() * rho.data()).trace().re
}

/// Von Neumann entropy `-Tr(rho ln rho)` using the natural logarithm.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum()
}

pub(crate) fn dissipator_matrix(lam: &CMatrix, rho: &CMatrix) -> CMatrix {
    let ld = lam.adjoint();
    let ldl = &ld * lam;
    lam * rho * ld - (&ldl * rho + rho * ldl).scale(0.5)
}

/// Lindblad dissipator `D[Lam]rho = Lam rho Lam* - (Lam*Lam rho + rho Lam*Lam)/2`.
pub fn dissipator(lam: &MeasurementChannel, rho: &DensityMatrix) -> Result<CMatrix> {
    check_dims(lam.dim(), rho.dim())?;
    Ok(dissipator_matrix(lam.data(), rho.data()))
}

/// Dissipator on raw matrices, for linearity checks on non-state arguments.
pub fn dissipator_raw(lam: &CMatrix, rho: &CMatrix) -> CMatrix {
    dissipator_matrix(lam, rho)
}

pub(crate) fn innovation_matrix(lam: &CMatrix, rho: &CMatrix) -> CMatrix {
    let m = lam * rho + rho * lam.adjoint();
    &m - rho * m.trace()
}

/// Conditioning superoperator `H[Lam]rho = Lam rho + rho Lam* - Tr(Lam rho + rho Lam*) rho`.
pub fn innovation_superop(lam: &MeasurementChannel, rho: &DensityMatrix) -> Result<CMatrix> {
    check_dims(lam.dim(), rho.dim())?;
    Ok(innovation_matrix(lam.data(), rho.data()))
}

/// Repairs an integrator output: Hermitize, clip negative eigenvalues,
/// renormalize the trace to 1. Idempotent on valid states.
pub fn project_to_state_space(m: &CMatrix) -> Result<DensityMatrix> {
    let h = hermitize(m);
    let tr = h.trace().re;
    if (tr - 1.0).abs() > 0.5 {
        return Err(QfcError::StateBlowUp { trace: tr });
    }
    let eig = SymmetricEigen::new(h);
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(QfcError::InvalidState("all eigenvalues clipped to zero".into()));
    }
    let n = clipped.len();
    let v = &eig.eigenvectors;
    let diag = CMatrix::from_fn(n, n, |i, j| {
        if i == j { Complex64::new(clipped[i] / total, 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    let data = v * diag * v.adjoint();
    Ok(DensityMatrix::from_matrix_unchecked(data))
}

/// Heisenberg product check: returns `(dH0 * dL, |<[H0, L]>|/2)`.
pub fn uncertainty_product(
    h0: &HermitianOperator,
    l: &HermitianOperator,
    rho: &DensityMatrix,
) -> Result<(f64, f64)> {
    check_dims(h0.dim(), l.dim())?;
    check_dims(h0.dim(), rho.dim())?;
    let mean = |x: &CMatrix| (x * rho.data()).trace().re;
    let std_dev = |x: &CMatrix| {
        let m = mean(x);
        let m2 = ((x * x) * rho.data()).trace().re;
        (m2 - m * m).max(0.0).sqrt()
    };
    let lhs = std_dev(h0.data()) * std_dev(l.data());
    let rhs = (comm(h0.data(), l.data()) * rho.data()).trace().norm() / 2.0;
    Ok((lhs, rhs))
}

// --- plain-text matrix format -----------------------------------------------
//
// One header line `N <dim>`, then N rows of N whitespace-separated `re+imj`
// complex literals.

pub fn format_complex(z: Complex64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let bad = || QfcError::Parse(format!("invalid complex literal `{s}`"));
    if let Some(body) = s.strip_suffix(['j', 'J']) {
        // Split at the last +/- that is not a leading sign or exponent sign.
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = body[..k].parse().map_err(|_| bad())?;
                let im_str = &body[k..];
                let im: f64 = if im_str == "+" || im_str == "-" {
                    return Err(bad());
                } else {
                    im_str.parse().map_err(|_| bad())?
                };
                Ok(Complex64::new(re, im))
            }
            // Pure imaginary, e.g. `2j` or `-0.5j`.
            None => Ok(Complex64::new(0.0, body.parse().map_err(|_| bad())?)),
        }
    } else {
        Ok(Complex64::new(s.parse().map_err(|_| bad())?, 0.0))
    }
}

pub fn write_matrix(m: &CMatrix) -> String {
    let n = m.nrows();
    let mut out = format!("N {n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format_complex(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| QfcError::Parse("empty matrix text".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("N") {
        return Err(QfcError::Parse("matrix header must start with `N`".into()));
    }
    let n: usize = parts
        .next()
        .ok_or_else(|| QfcError::Parse("missing dimension in header".into()))?
        .parse()
        .map_err(|_| QfcError::Parse("invalid dimension in header".into()))?;
    let mut data = CMatrix::zeros(n, n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| QfcError::Parse(format!("missing matrix row {i}")))?;
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != n {
            return Err(QfcError::Parse(format!(
                "row {i} has {} entries, expected {n}",
                entries.len()
            )));
        }
        for (j, e) in entries.iter().enumerate() {
            data[(i, j)] = parse_complex(e)?;
        }
    }
    Ok(data)
}

/// Parse matrix rows given as a list of whitespace-separated complex entries
/// (the form used in TOML model files).
pub fn parse_rows(rows: &[String]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(QfcError::Parse("matrix has no rows".into()));
    }
    let mut data = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let entries: Vec<&str> = row.split_whitespace().collect();
        if entries.len() != n {
            return Err(QfcError::Parse(format!(
                "row {i} has {} entries, expected {n}",
                entries.len()
            )));
        }
        for (j, e) in entries.iter().enumerate() {
            data[(i, j)] = parse_complex(e)?;
        }
    }
    Ok(data)
}

pub fn matrix_rows(m: &CMatrix) -> Vec<String> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| format_complex(m[(i, j)]))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
