//! Measurement/control channel design checks: the matrix
//! `A = -i(H0 + Hb) - kappa L*L + alpha sqrt(kappa) L`, the N-row rank
//! condition, the control graph with its connectivity test, and the
//! path-shaped control channel builder.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::error::{QfcError, Result};
use crate::state::{CMatrix, HermitianOperator, SystemModel, TargetState};

/// Relative singular-value threshold for the numerical rank test.
pub const RANK_TOL: f64 = 1e-10;
/// Entries of `Hb` below this magnitude carry no graph edge.
pub const EDGE_TOL: f64 = 1e-12;

/// A design instance: the model, the scalar `alpha` and the derived matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    model: SystemModel,
    alpha: f64,
    a: CMatrix,
}

impl DesignProblem {
    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    /// Recompute `A` from the stored model; matches the stored matrix.
    pub fn recompute_a(&self) -> CMatrix {
        design_matrix(&self.model, self.alpha)
    }
}

fn design_matrix(model: &SystemModel, alpha: f64) -> CMatrix {
    let l = model.l().data();
    (model.h0().data() + model.hb().data()) * Complex64::new(0.0, -1.0)
        - (l.adjoint() * l).scale(model.kappa())
        + l.scale(alpha * model.kappa().sqrt())
}

/// `A = -i(H0 + Hb) - kappa L*L + alpha sqrt(kappa) L`.
pub fn build_a(model: &SystemModel, alpha: f64) -> DesignProblem {
    let a = design_matrix(model, alpha);
    DesignProblem { model: model.clone(), alpha, a }
}

/// Numerical rank test on the observability-style matrix with rows
/// `psi_d*, psi_d* A, ..., psi_d* A^{N-1}`: true iff the rank is N.
///
/// Rows are normalized before the SVD so the verdict is invariant under
/// scaling of `A` and global phase of `psi_d`.
pub fn rank_condition(problem: &DesignProblem, target: &TargetState) -> Result<bool> {
    let n = problem.model.dim();
    if target.dim() != n {
        return Err(QfcError::DimensionMismatch { expected: n, got: target.dim() });
    }
    let mut row = target.vector().adjoint();
    let mut stacked = CMatrix::zeros(n, n);
    for k in 0..n {
        if k > 0 {
            row *= &problem.a;
        }
        let norm = row.norm();
        let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        for j in 0..n {
            stacked[(k, j)] = row[j] * scale;
        }
    }
    let svd = stacked.svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max > 0.0 && min > RANK_TOL * max)
}

/// Non-oriented graph on the eigenstate indices with an edge wherever `Hb`
/// has a nonzero off-diagonal coupling. Edges do not depend on `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlGraph {
    vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl ControlGraph {
    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }
}

pub fn control_graph(hb: &HermitianOperator, tol: f64) -> ControlGraph {
    let n = hb.dim();
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if hb.data()[(i, j)].norm() > tol {
                edges.insert((i, j));
            }
        }
    }
    ControlGraph { vertices: n, edges }
}

/// Breadth-first reachability of every vertex from vertex 0.
pub fn is_connected(g: &ControlGraph) -> bool {
    if g.vertices == 0 {
        return true;
    }
    let mut seen = vec![false; g.vertices];
    let mut queue = vec![0usize];
    seen[0] = true;
    while let Some(v) = queue.pop() {
        for &(i, j) in &g.edges {
            let other = if i == v { Some(j) } else if j == v { Some(i) } else { None };
            if let Some(w) = other {
                if !seen[w] {
                    seen[w] = true;
                    queue.push(w);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Control channel with nonzero couplings only on the secondary diagonal;
/// its control graph is a path through all eigenstates.
pub fn path_hb(n: usize, weights: &[f64]) -> Result<HermitianOperator> {
    if weights.len() != n - 1 {
        return Err(QfcError::InvalidParameter(format!(
            "need {} weights for dimension {n}, got {}",
            n - 1,
            weights.len()
        )));
    }
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            return Err(QfcError::ZeroWeight { index: k });
        }
    }
    let data = CMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            Complex64::new(weights[i], 0.0)
        } else if i == j + 1 {
            Complex64::new(weights[j], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    HermitianOperator::new(data)
}

/// Default scan grid for `alpha`: 41 points uniform on [-10, 10].
pub fn default_alpha_grid() -> Vec<f64> {
    (0..41).map(|k| -10.0 + 0.5 * k as f64).collect()
}

/// First grid point for which the rank condition holds for every eigenstate.
pub fn find_alpha(model: &SystemModel, grid: &[f64]) -> Result<Option<f64>> {
    for &alpha in grid {
        let problem = build_a(model, alpha);
        let mut all = true;
        for d in 0..model.dim() {
            let target = TargetState::eigenstate(model, d)?;
            if !rank_condition(&problem, &target)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(alpha));
        }
    }
    Ok(None)
}

/// Per-eigenstate rank verdicts at a given `alpha`, for reporting.
pub fn rank_verdicts(model: &SystemModel, alpha: f64) -> Result<Vec<bool>> {
    let problem = build_a(model, alpha);
    (0..model.dim())
        .map(|d| rank_condition(&problem, &TargetState::eigenstate(model, d)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::MeasurementChannel;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model_with(hb: HermitianOperator, h0: &[f64], l: &[f64], kappa: f64) -> SystemModel {
        SystemModel::new(
            HermitianOperator::diagonal(h0),
            hb,
            MeasurementChannel::diagonal(l),
            kappa,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn build_a_specializations() {
        // Hb = 0, L diagonal -> A diagonal.
        let m = model_with(HermitianOperator::zero(2), &[0.0, 1.0], &[1.0, -1.0], 1.0);
        let p = build_a(&m, 0.3);
        assert!(p.a()[(0, 1)].norm() < 1e-15 && p.a()[(1, 0)].norm() < 1e-15);
        assert!((p.recompute_a() - p.a()).norm() < 1e-12);

        // N = 2 hand value: A = [[-1, -i], [-i, -1 - i]].
        let hb = path_hb(2, &[1.0]).unwrap();
        let m = model_with(hb, &[0.0, 1.0], &[1.0, -1.0], 1.0);
        let p = build_a(&m, 0.0);
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[c(-1.0, 0.0), c(0.0, -1.0), c(0.0, -1.0), c(-1.0, -1.0)],
        );
        assert!((p.a() - expect).norm() < 1e-14);
    }

    #[test]
    fn rank_condition_cases() {
        // Diagonal A: every row proportional to psi_d* -> rank 1.
        let m = model_with(HermitianOperator::zero(2), &[0.0, 1.0], &[1.0, -1.0], 1.0);
        for alpha in [-2.0, 0.0, 2.0] {
            let p = build_a(&m, alpha);
            for d in 0..2 {
                let t = TargetState::eigenstate(&m, d).unwrap();
                assert!(!rank_condition(&p, &t).unwrap());
            }
        }

        // Coupled qubit passes for any alpha.
        let hb = path_hb(2, &[1.0]).unwrap();
        let m = model_with(hb, &[0.0, 1.0], &[1.0, -1.0], 1.0);
        for alpha in [-1.0, 0.0, 3.5] {
            let p = build_a(&m, alpha);
            let t = TargetState::eigenstate(&m, 0).unwrap();
            assert!(rank_condition(&p, &t).unwrap());
        }

        // Block-diagonal Hb on N = 4 fails for every alpha in the scan grid.
        let mut block = CMatrix::zeros(4, 4);
        block[(0, 1)] = c(1.0, 0.0);
        block[(1, 0)] = c(1.0, 0.0);
        block[(2, 3)] = c(0.7, 0.0);
        block[(3, 2)] = c(0.7, 0.0);
        let hb = HermitianOperator::new(block).unwrap();
        let m = model_with(hb, &[0.0, 1.0, 2.0, 3.0], &[0.3, 0.9, -0.4, 1.7], 1.0);
        let t = TargetState::eigenstate(&m, 0).unwrap();
        for alpha in default_alpha_grid() {
            let p = build_a(&m, alpha);
            assert!(!rank_condition(&p, &t).unwrap());
        }
    }

    #[test]
    fn rank_invariant_under_phase_and_scaling() {
        let mut rng = StdRng::seed_from_u64(8);
        let hb = path_hb(3, &[1.0, 0.7]).unwrap();
        let m = model_with(hb, &[0.0, 1.0, 2.0], &[0.5, -0.3, 1.2], 1.0);
        for _ in 0..20 {
            let alpha = rng.gen_range(-5.0..5.0);
            let p = build_a(&m, alpha);
            let t = TargetState::eigenstate(&m, rng.gen_range(0..3)).unwrap();
            let base = rank_condition(&p, &t).unwrap();
            for scale in [0.5, 2.0, 10.0] {
                let scaled = DesignProblem {
                    model: m.clone(),
                    alpha,
                    a: p.a().scale(scale),
                };
                assert_eq!(rank_condition(&scaled, &t).unwrap(), base);
            }
        }
    }

    #[test]
    fn graph_construction_and_connectivity() {
        assert!(control_graph(&HermitianOperator::zero(3), EDGE_TOL).edges().is_empty());
        assert!(!is_connected(&control_graph(&HermitianOperator::zero(3), EDGE_TOL)));

        let path = path_hb(4, &[1.0, -0.5, 2.0]).unwrap();
        let g = control_graph(&path, EDGE_TOL);
        let expect: BTreeSet<_> = [(0, 1), (1, 2), (2, 3)].into_iter().collect();
        assert_eq!(g.edges(), &expect);
        assert!(is_connected(&g));

        let mut block = CMatrix::zeros(4, 4);
        block[(0, 1)] = c(1.0, 0.0);
        block[(1, 0)] = c(1.0, 0.0);
        block[(2, 3)] = c(1.0, 0.0);
        block[(3, 2)] = c(1.0, 0.0);
        let g = control_graph(&HermitianOperator::new(block).unwrap(), EDGE_TOL);
        assert!(!is_connected(&g));
    }

    #[test]
    fn path_hb_shapes() {
        let h = path_hb(2, &[1.0]).unwrap();
        assert_eq!(h.data()[(0, 1)], c(1.0, 0.0));
        let h = path_hb(3, &[1.0, 1.0]).unwrap();
        assert_eq!(h.data()[(0, 2)], c(0.0, 0.0));
        assert_eq!(h.data()[(1, 1)], c(0.0, 0.0));
        assert!(is_connected(&control_graph(&path_hb(5, &[1.0, 2.0, 3.0, 4.0]).unwrap(), EDGE_TOL)));
        assert!(matches!(path_hb(3, &[1.0, 0.0]), Err(QfcError::ZeroWeight { index: 1 })));
    }

    #[test]
    fn find_alpha_cases() {
        let hb = path_hb(3, &[1.0, 0.8]).unwrap();
        let m = model_with(hb, &[0.0, 1.0, 2.3], &[0.4, -0.9, 1.6], 1.0);
        assert!(find_alpha(&m, &default_alpha_grid()).unwrap().is_some());

        let m = model_with(HermitianOperator::zero(3), &[0.0, 1.0, 2.3], &[0.4, -0.9, 1.6], 1.0);
        assert!(find_alpha(&m, &default_alpha_grid()).unwrap().is_none());

        let mut block = CMatrix::zeros(3, 3);
        block[(0, 1)] = c(1.0, 0.0);
        block[(1, 0)] = c(1.0, 0.0);
        let m = model_with(
            HermitianOperator::new(block).unwrap(),
            &[0.0, 1.0, 2.3],
            &[0.4, -0.9, 1.6],
            1.0,
        );
        assert!(find_alpha(&m, &default_alpha_grid()).unwrap().is_none());
    }

    #[test]
    fn disconnected_graphs_never_pass() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..50 {
            let n = rng.gen_range(3..6);
            // Random block split with no cross couplings.
            let cut = rng.gen_range(1..n);
            let mut data = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    if (i < cut) == (j < cut) && rng.gen_bool(0.8) {
                        let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        data[(i, j)] = z;
                        data[(j, i)] = z.conj();
                    }
                }
            }
            let hb = HermitianOperator::new(data).unwrap();
            assert!(!is_connected(&control_graph(&hb, EDGE_TOL)));
            let m = model_with(
                hb,
                &crate::sampling::random_nondegenerate_diagonal(&mut rng, n, 0.05),
                &crate::sampling::random_nondegenerate_diagonal(&mut rng, n, 0.05),
                rng.gen_range(0.5..2.0),
            );
            assert!(find_alpha(&m, &default_alpha_grid()).unwrap().is_none());
        }
    }
}
