//! Spectral-norm optimization over the closure manifold.
//!
//! The surrogate `C(xi) = P D(xi) - Q/2` is skew-symmetric, hence normal, so
//! its spectral radius equals its 2-norm and is convex in `xi`. Minimizing it
//! is cast as the semidefinite program
//!
//! ```text
//! minimize   lambda
//! subject to lambda I - S(xi) >= 0,   S = [[0, C], [C', 0]],
//! ```
//!
//! solved with an interior-point conic solver. The eigenvalues of `S` are
//! plus/minus the singular values of `C`, so the one-sided constraint already
//! pins the norm. The optimized coordinates then feed ordinary assembly, and
//! [`spectral_radius`] measures the actual `rho(D)` they produce.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;

use crate::construct::{AssembledOperator, ClosureManifold};
use crate::error::{Error, Result};
use crate::ratlinalg::Rational;

/// Default tolerance on the optimal surrogate norm.
pub const DEFAULT_TOL: f64 = 1e-7;
/// Default iteration cap for the conic solver.
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Grid size at which the surrogate is formed and optimized.
pub const DEFAULT_SURROGATE_GRID: usize = 100;

/// The affine family `C(xi) = C0 + sum_j xi_j Cj` of skew-symmetric
/// surrogate matrices at a fixed grid size.
#[derive(Clone, Debug)]
pub struct SurrogateFamily {
    pub n: usize,
    pub c0: DMatrix<f64>,
    pub cj: Vec<DMatrix<f64>>,
}

impl SurrogateFamily {
    pub fn dof(&self) -> usize {
        self.cj.len()
    }

    /// Evaluates `C(xi)`.
    pub fn at(&self, xi: &[f64]) -> DMatrix<f64> {
        assert_eq!(xi.len(), self.dof(), "coordinate count mismatch");
        let mut c = self.c0.clone();
        for (x, cj) in xi.iter().zip(&self.cj) {
            if *x != 0.0 {
                c += cj * *x;
            }
        }
        c
    }

    /// Spectral norm of `C(xi)` via a symmetric eigensolve of the Gram
    /// matrix `C'C`.
    pub fn norm_at(&self, xi: &[f64]) -> f64 {
        spectral_norm(&self.at(xi))
    }
}

/// Largest singular value from the Gram matrix; robust for the skew matrices
/// handled here.
pub fn spectral_norm(c: &DMatrix<f64>) -> f64 {
    let gram = c.transpose() * c;
    let eigs = gram.symmetric_eigenvalues();
    eigs.iter().fold(0.0f64, |a, &l| a.max(l.max(0.0))).sqrt()
}

/// Builds the surrogate family for a closure manifold at grid size `n`
/// (step `h = 1`): `C0 = P D(0) - Q/2` and `Cj = P (D(e_j) - D(0))`.
/// Skew-symmetry is asserted to `1e-12`; a violation means the assembly and
/// the energy identity disagree.
pub fn surrogate_family(man: &ClosureManifold, n: usize) -> Result<SurrogateFamily> {
    let dof = man.dof();
    let one = Rational::from_integer(1.into());

    let assemble_dense = |xi: &[f64]| -> Result<DMatrix<f64>> {
        let op = man.closure::<f64>(xi).assemble(n, &one)?;
        let dense = op.dense();
        let p = op.norm().to_vec();
        Ok(DMatrix::from_fn(n, n, |i, j| p[i] * dense[i][j]))
    };

    let pd0 = assemble_dense(&vec![0.0; dof])?;
    let mut c0 = pd0.clone();
    c0[(0, 0)] += 0.5;
    c0[(n - 1, n - 1)] -= 0.5;

    let mut cj = Vec::with_capacity(dof);
    for j in 0..dof {
        let mut xi = vec![0.0; dof];
        xi[j] = 1.0;
        cj.push(assemble_dense(&xi)? - &pd0);
    }

    for (tag, c) in
        std::iter::once((0usize, &c0)).chain(cj.iter().enumerate().map(|(j, c)| (j + 1, c)))
    {
        let skew = (c + c.transpose()).abs().max();
        if skew > 1e-12 {
            return Err(Error::Inconsistency(format!(
                "surrogate matrix {tag} deviates from skew-symmetry by {skew:.3e}"
            )));
        }
    }

    Ok(SurrogateFamily { n, c0, cj })
}

/// Result of the surrogate-norm minimization.
#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub xi: Vec<f64>,
    /// `||C(xi)||_2` at the returned coordinates.
    pub norm_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `||C(xi)||_2` over the family. `tol` bounds the accepted
/// optimality gap and `max_iter` caps solver iterations; on iteration
/// exhaustion the best iterate is returned with `converged = false`.
pub fn minimize_surrogate_norm(
    fam: &SurrogateFamily,
    tol: f64,
    max_iter: usize,
) -> OptimizationResult {
    let v = fam.dof();
    if v == 0 {
        return OptimizationResult {
            xi: Vec::new(),
            norm_value: spectral_norm(&fam.c0),
            iterations: 0,
            converged: true,
        };
    }
    let n = fam.n;
    let d = 2 * n; // embedded symmetric dimension
    let svec_len = d * (d + 1) / 2;
    let nvars = v + 1; // (xi, lambda)

    // svec index of entry (row, col), row <= col: upper triangle stored
    // column-major with off-diagonals scaled by sqrt(2).
    let svec_idx = |row: usize, col: usize| col * (col + 1) / 2 + row;
    let sqrt2 = std::f64::consts::SQRT_2;

    // Column j < v: svec(S_j) where S_j = [[0, Cj], [Cj', 0]]; the upper
    // triangle holds Cj[row][col - n] for col >= n, row < n.
    let mut colptr = Vec::with_capacity(nvars + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for cj in &fam.cj {
        for col in n..d {
            for row in 0..n {
                let e = cj[(row, col - n)];
                if e != 0.0 {
                    rowval.push(svec_idx(row, col));
                    nzval.push(sqrt2 * e);
                }
            }
        }
        colptr.push(rowval.len());
    }
    // Column v: -svec(I).
    for c in 0..d {
        rowval.push(svec_idx(c, c));
        nzval.push(-1.0);
    }
    colptr.push(rowval.len());
    let a = CscMatrix::new(svec_len, nvars, colptr, rowval, nzval);

    // b = svec(-S0).
    let mut b = vec![0.0; svec_len];
    for col in n..d {
        for row in 0..n {
            let e = fam.c0[(row, col - n)];
            if e != 0.0 {
                b[svec_idx(row, col)] = -sqrt2 * e;
            }
        }
    }

    let p = CscMatrix::zeros((nvars, nvars));
    let mut q = vec![0.0; nvars];
    q[v] = 1.0;

    let settings = DefaultSettings {
        verbose: false,
        max_iter: max_iter.min(u32::MAX as usize) as u32,
        tol_gap_abs: tol.min(1e-8),
        tol_gap_rel: tol.min(1e-8),
        ..DefaultSettings::default()
    };
    let cones = [SupportedConeT::PSDTriangleConeT(d)];
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
        .expect("conic problem data is well-formed by construction");
    solver.solve();

    let xi: Vec<f64> = solver.solution.x[..v].to_vec();
    let norm_value = fam.norm_at(&xi);
    let converged = matches!(
        solver.solution.status,
        SolverStatus::Solved | SolverStatus::AlmostSolved
    );
    OptimizationResult {
        xi,
        norm_value,
        iterations: solver.info.iterations as usize,
        converged,
    }
}

/// Optimizes a manifold at the given surrogate grid and returns the float
/// closure at the optimized coordinates.
pub fn optimized_closure(
    man: &ClosureManifold,
    surrogate_grid: usize,
) -> Result<(crate::construct::OperatorClosure<f64>, OptimizationResult)> {
    let fam = surrogate_family(man, surrogate_grid)?;
    let res = minimize_surrogate_norm(&fam, DEFAULT_TOL, DEFAULT_MAX_ITER);
    Ok((man.closure::<f64>(&res.xi), res))
}

/// Spectral radius of the assembled derivative: the largest eigenvalue
/// magnitude of the (nonsymmetric) dense matrix, via a real Schur
/// decomposition.
pub fn spectral_radius(op: &AssembledOperator<f64>) -> Result<f64> {
    let n = op.n();
    let dense = op.dense();
    let m = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-12, 100_000).ok_or_else(|| {
        Error::EigenvalueFailure(format!("Schur iteration did not converge for n = {n}"))
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .fold(0.0f64, |a, l| a.max(l.norm())))
}

/// Upper bound `rho(D) <= ||P^{-1}|| (||P D - Q/2|| + 1/2)`, used as a sanity
/// check on spectral-radius measurements.
pub fn spectral_radius_chain_bound(op: &AssembledOperator<f64>) -> f64 {
    let n = op.n();
    let dense = op.dense();
    let p = op.norm();
    let mut c = DMatrix::from_fn(n, n, |i, j| p[i] * dense[i][j]);
    c[(0, 0)] += 0.5;
    c[(n - 1, n - 1)] -= 0.5;
    let pinv = p.iter().fold(0.0f64, |a, &w| a.max(1.0 / w));
    pinv * (spectral_norm(&c) + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::solve_closure;
    use crate::existence::{exists_sbp, SbpParameters};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn manifold(s: usize, t: usize, r: usize) -> ClosureManifold {
        let params = SbpParameters::new(s, t, r).unwrap();
        let rep = exists_sbp(params).unwrap();
        solve_closure(params, &rep.norm.expect("exists")).unwrap()
    }

    #[test]
    fn zero_dof_family_is_immediate() {
        let man = manifold(2, 2, 4);
        let fam = surrogate_family(&man, 16).unwrap();
        assert_eq!(fam.dof(), 0);
        let res = minimize_surrogate_norm(&fam, 1e-7, 100);
        assert!(res.converged);
        assert!(res.xi.is_empty());
        assert!((res.norm_value - spectral_norm(&fam.c0)).abs() < 1e-12);
    }

    #[test]
    fn norm_matches_singular_values() {
        let man = manifold(3, 3, 6);
        let fam = surrogate_family(&man, 20).unwrap();
        let xi = vec![0.3];
        let c = fam.at(&xi);
        let svd_norm = c.clone().svd(false, false).singular_values.max();
        assert!((fam.norm_at(&xi) - svd_norm).abs() < 1e-9);
    }

    #[test]
    fn toy_family_minimizes_to_zero() {
        // C(xi) = [1 + xi] as a 1x1 block: norm |1 + xi|, minimized at -1.
        let j = DMatrix::from_row_slice(1, 1, &[1.0]);
        let fam = SurrogateFamily {
            n: 1,
            c0: j.clone(),
            cj: vec![j],
        };
        let res = minimize_surrogate_norm(&fam, 1e-9, 200);
        assert!(res.converged);
        assert!((res.xi[0] + 1.0).abs() < 1e-6, "xi = {}", res.xi[0]);
        assert!(res.norm_value < 1e-6);
    }

    #[test]
    fn optimizer_beats_origin_and_is_locally_optimal() {
        let man = manifold(3, 3, 6);
        let fam = surrogate_family(&man, 20).unwrap();
        assert_eq!(fam.dof(), 1);
        let res = minimize_surrogate_norm(&fam, DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert!(res.converged);
        assert!(res.norm_value <= fam.norm_at(&[0.0]) + 1e-12);

        // Perturbations of size 10 tol may not improve by more than tol.
        let tol = DEFAULT_TOL;
        let mut rng = ChaCha8Rng::seed_from_u64(0x0417);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..fam.dof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            let xi: Vec<f64> = res
                .xi
                .iter()
                .zip(&raw)
                .map(|(x, dlt)| x + dlt / len * tol * 10.0)
                .collect();
            assert!(fam.norm_at(&xi) >= res.norm_value - tol);
        }
    }

    #[test]
    fn surrogate_norm_is_convex_along_segments() {
        let man = manifold(4, 4, 8);
        let fam = surrogate_family(&man, 26).unwrap();
        assert_eq!(fam.dof(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0xc0c0);
        for _ in 0..10 {
            let x1: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x2: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let f1 = fam.norm_at(&x1);
            let f2 = fam.norm_at(&x2);
            for lambda in [0.25, 0.5, 0.75] {
                let mid: Vec<f64> = x1
                    .iter()
                    .zip(&x2)
                    .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                    .collect();
                let fm = fam.norm_at(&mid);
                assert!(fm <= lambda * f1 + (1.0 - lambda) * f2 + 1e-9);
            }
        }
    }

    #[test]
    fn spectral_radius_within_chain_bound() {
        let man = manifold(1, 1, 1);
        let op = man
            .closure::<f64>(&[])
            .assemble(24, &crate::ratlinalg::rat(1, 23))
            .unwrap();
        let rho = spectral_radius(&op).unwrap();
        assert!(rho > 0.0);
        assert!(rho <= spectral_radius_chain_bound(&op) + 1e-9);
    }

    #[test]
    fn chain_bound_holds_across_manifold_samples() {
        let man = manifold(3, 3, 6);
        for seed in 0..5u64 {
            let xi = crate::construct::seeded_rational_coordinates(man.dof(), seed);
            let xi_f: Vec<f64> = xi.iter().map(crate::ratlinalg::rational_to_f64).collect();
            let op = man
                .closure::<f64>(&xi_f)
                .assemble(30, &crate::ratlinalg::rat(1, 29))
                .unwrap();
            let rho = spectral_radius(&op).unwrap();
            assert!(rho <= spectral_radius_chain_bound(&op) + 1e-9);
        }
    }
}
