//! Random operators and states for verification suites and tests.

use num_complex::Complex64;
use rand::Rng;

use crate::state::{CMatrix, CVector, DensityMatrix, HermitianOperator, MeasurementChannel};

pub fn random_complex_matrix<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> HermitianOperator {
    let g = random_complex_matrix(rng, n);
    HermitianOperator::new((g.clone() + g.adjoint()).scale(0.5)).expect("symmetrized")
}

pub fn random_channel<R: Rng>(rng: &mut R, n: usize) -> MeasurementChannel {
    MeasurementChannel::new(random_complex_matrix(rng, n)).expect("finite entries")
}

/// Full-rank random density matrix `G G* / Tr(G G*)`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> DensityMatrix {
    let g = random_complex_matrix(rng, n);
    let p = &g * g.adjoint();
    let tr = p.trace().re;
    DensityMatrix::new(p.scale(1.0 / tr)).expect("Gram matrix is PSD with unit trace")
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let norm = v.norm();
        if norm > 1e-3 {
            return v.scale(1.0 / norm);
        }
    }
}

/// Random diagonal entries with all pairwise gaps at least `min_gap`.
pub fn random_nondegenerate_diagonal<R: Rng>(rng: &mut R, n: usize, min_gap: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            return v;
        }
    }
}
