//! Construction of the boundary-closure manifold for an existing norm, and
//! assembly of concrete operators at a chosen grid size.
//!
//! With the norm fixed, the remaining unknown is the antisymmetric part of
//! the closure block `B`. Its accuracy equations are linear, so the closures
//! form an affine manifold `B(xi) = B0 + sum_j xi_j Z_j`; every point of the
//! manifold yields a valid operator.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::existence::{NormCandidate, SbpParameters};
use crate::ratlinalg::{rat, solve_affine, Rational, RationalMatrix};
use crate::scalar::Scalar;
use crate::stencil::{accuracy_matrices, central_coefficients, coupling_block};

/// The affine family of boundary closures for one norm: particular block
/// `B0` (antisymmetric part plus the fixed `-1/2` corner) and antisymmetric
/// nullspace directions `Z_j` with `Z_j X = 0`.
#[derive(Clone, Debug)]
pub struct ClosureManifold {
    pub params: SbpParameters,
    pub norm: NormCandidate,
    b0: RationalMatrix,
    basis: Vec<RationalMatrix>,
    coupling: RationalMatrix,
}

impl ClosureManifold {
    /// Dimension of the closure manifold.
    pub fn dof(&self) -> usize {
        self.basis.len()
    }

    pub fn b0(&self) -> &RationalMatrix {
        &self.b0
    }

    pub fn basis(&self) -> &[RationalMatrix] {
        &self.basis
    }

    /// Concrete closure at manifold coordinates `xi`, in the scalar type of
    /// the caller's choice. Rows are the first `r` rows of the `h = 1`
    /// derivative: `P^{-1} [B(xi) | C]`.
    pub fn closure<T: Scalar>(&self, xi: &[T]) -> OperatorClosure<T> {
        assert_eq!(xi.len(), self.dof(), "manifold coordinate count mismatch");
        let SbpParameters { s, r, .. } = self.params;
        let mut rows = Vec::with_capacity(r);
        for i in 0..r {
            let wi = T::from_rational(&self.norm.weights[i]);
            let mut row = Vec::with_capacity(r + s);
            for j in 0..r {
                let mut b = T::from_rational(&self.b0[(i, j)]);
                for (z, x) in self.basis.iter().zip(xi) {
                    let zij = &z[(i, j)];
                    if !zij.is_zero() {
                        b = b + x.clone() * T::from_rational(zij);
                    }
                }
                row.push(b / wi.clone());
            }
            for l in 0..s {
                row.push(T::from_rational(&self.coupling[(i, l)]) / wi.clone());
            }
            rows.push(row);
        }
        let weights = self
            .norm
            .weights
            .iter()
            .map(|w| T::from_rational(w))
            .collect();
        OperatorClosure {
            params: self.params,
            weights,
            rows,
            xi: xi.to_vec(),
        }
    }
}

/// Solves the closure accuracy equations `B2 X = P Y - C Xt - B1 X` for the
/// strictly-lower-triangle entries of the antisymmetric block `B2`
/// (row-major unknown order), packaging the full solution manifold.
pub fn solve_closure(params: SbpParameters, norm: &NormCandidate) -> Result<ClosureManifold> {
    let SbpParameters { s, t, r } = params;
    if norm.weights.len() != r {
        return Err(Error::DimensionMismatch(format!(
            "norm has {} weights, closure needs {r}",
            norm.weights.len()
        )));
    }
    let coupling = coupling_block(s, r)?.matrix().clone();
    let acc = accuracy_matrices(s, t, r);

    // Right-hand side M = P Y - C Xt - B1 X; B1 = -1/2 e0 e0^T only touches
    // the (0,0) entry since X[0][q] = [q = 0].
    let mut m = RationalMatrix::from_fn(r, t + 1, |i, q| {
        let mut v = &norm.weights[i] * &acc.y[(i, q)];
        for l in 0..s {
            let c = &coupling[(i, l)];
            if !c.is_zero() {
                v -= c * &acc.xtilde[(l, q)];
            }
        }
        v
    });
    m[(0, 0)] += rat(1, 2);

    let unknowns = r * (r - 1) / 2;
    let idx = |i: usize, k: usize| i * (i - 1) / 2 + k; // i > k
    let mut a = RationalMatrix::zeros(r * (t + 1), unknowns);
    let mut b = Vec::with_capacity(r * (t + 1));
    let mut row = 0;
    for i in 0..r {
        for q in 0..=t {
            for k in 0..i {
                a[(row, idx(i, k))] = acc.x[(k, q)].clone();
            }
            for k in (i + 1)..r {
                a[(row, idx(k, i))] = -acc.x[(k, q)].clone();
            }
            b.push(m[(i, q)].clone());
            row += 1;
        }
    }

    let sol = solve_affine(&a, &b)?.ok_or_else(|| {
        Error::Inconsistency(format!(
            "closure equations unsolvable for {params} although the norm satisfies \
             the compatibility system"
        ))
    })?;

    let antisym_from = |u: &dyn Fn(usize) -> Rational| -> RationalMatrix {
        RationalMatrix::from_fn(r, r, |i, j| {
            if i > j {
                u(idx(i, j))
            } else if i < j {
                -u(idx(j, i))
            } else {
                Rational::zero()
            }
        })
    };

    let mut b0 = antisym_from(&|k| sol.particular[k].clone());
    b0[(0, 0)] -= rat(1, 2);
    let basis: Vec<RationalMatrix> = (0..sol.dof())
        .map(|j| antisym_from(&|k| sol.basis[(k, j)].clone()))
        .collect();

    Ok(ClosureManifold {
        params,
        norm: norm.clone(),
        b0,
        basis,
        coupling,
    })
}

/// A concrete closure: boundary norm weights and the first `r` rows of the
/// `h = 1` derivative (`r x (r+s)`, the only data the operator family needs
/// beyond the interior stencil).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorClosure<T> {
    pub params: SbpParameters,
    pub weights: Vec<T>,
    pub rows: Vec<Vec<T>>,
    pub xi: Vec<T>,
}

impl<T: Scalar> OperatorClosure<T> {
    /// Assembles the `n x n` operator at step `h`: closure rows on top, the
    /// centered stencil inside, and the point-reflected closure at the
    /// bottom (`D[n-1-i][n-1-j] = -D[i][j]`). Norm entries scale by `h`,
    /// derivative entries by `1/h`.
    pub fn assemble(&self, n: usize, h: &Rational) -> Result<AssembledOperator<T>> {
        let SbpParameters { s, r, .. } = self.params;
        let min = 2 * r + 2 * s;
        if n < min {
            return Err(Error::GridTooSmall { n, min });
        }
        let h_t = T::from_rational(h);
        let hinv = T::one() / h_t.clone();

        let mut norm = Vec::with_capacity(n);
        for i in 0..n {
            let base = if i < r {
                self.weights[i].clone()
            } else if i >= n - r {
                self.weights[n - 1 - i].clone()
            } else {
                T::one()
            };
            norm.push(base * h_t.clone());
        }

        let closure: Vec<Vec<T>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|e| e.clone() * hinv.clone()).collect())
            .collect();
        let stencil: Vec<T> = central_coefficients(s)
            .coefficients()
            .iter()
            .map(|a| T::from_rational(a) * hinv.clone())
            .collect();

        Ok(AssembledOperator {
            params: self.params,
            n,
            h: h_t,
            norm,
            closure,
            stencil,
            xi: self.xi.clone(),
        })
    }

    /// The same closure converted entrywise to `f64`.
    pub fn to_f64(&self) -> OperatorClosure<f64> {
        OperatorClosure {
            params: self.params,
            weights: self.weights.iter().map(Scalar::to_f64).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect(),
            xi: self.xi.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// An `n x n` operator/norm pair at step `h`, stored in banded form:
/// closure rows, interior stencil, and the diagonal norm.
#[derive(Clone, Debug)]
pub struct AssembledOperator<T> {
    pub params: SbpParameters,
    n: usize,
    pub h: T,
    norm: Vec<T>,
    closure: Vec<Vec<T>>,
    stencil: Vec<T>,
    pub xi: Vec<T>,
}

impl<T: Scalar> AssembledOperator<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Diagonal of the norm matrix (already scaled by `h`).
    pub fn norm(&self) -> &[T] {
        &self.norm
    }

    /// `out = D v`, using the banded structure: `O(n s)` plus the two
    /// `r x (r+s)` corners.
    pub fn apply(&self, v: &[T], out: &mut [T]) {
        let r = self.params.r;
        let n = self.n;
        assert_eq!(v.len(), n);
        assert_eq!(out.len(), n);
        for (i, row) in self.closure.iter().enumerate() {
            let mut acc = T::zero();
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    acc = acc + c.clone() * v[j].clone();
                }
            }
            out[i] = acc;
        }
        for i in r..n - r {
            let mut acc = T::zero();
            for (m, a) in self.stencil.iter().enumerate() {
                let d = v[i + m + 1].clone() - v[i - m - 1].clone();
                acc = acc + a.clone() * d;
            }
            out[i] = acc;
        }
        for (i, row) in self.closure.iter().enumerate() {
            let mut acc = T::zero();
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    acc = acc + c.clone() * v[n - 1 - j].clone();
                }
            }
            out[n - 1 - i] = -acc;
        }
    }

    /// Materializes the dense derivative matrix.
    pub fn dense(&self) -> Vec<Vec<T>> {
        let r = self.params.r;
        let n = self.n;
        let mut d = vec![vec![T::zero(); n]; n];
        for (i, row) in self.closure.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                d[i][j] = c.clone();
                d[n - 1 - i][n - 1 - j] = -c.clone();
            }
        }
        for i in r..n - r {
            for (m, a) in self.stencil.iter().enumerate() {
                d[i][i + m + 1] = a.clone();
                d[i][i - m - 1] = -a.clone();
            }
        }
        d
    }

    /// Full verification: SBP identity residual, per-degree monomial
    /// accuracy on boundary and interior rows, and the smallest norm weight.
    /// In exact arithmetic every residual must be identically zero.
    pub fn verify(&self) -> VerificationReport {
        let SbpParameters { s, t, r } = self.params;
        let n = self.n;
        let mut exact = true;
        let mut track = |v: &T, worst: &mut f64| {
            if !v.is_zero() {
                exact = false;
            }
            let mag = v.to_f64().abs();
            if mag > *worst {
                *worst = mag;
            }
        };

        // P D + D^T P - Q must vanish entrywise.
        let d = self.dense();
        let mut sbp_residual = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let mut res = self.norm[i].clone() * d[i][j].clone()
                    + self.norm[j].clone() * d[j][i].clone();
                if i == 0 && j == 0 {
                    res = res + T::one();
                }
                if i == n - 1 && j == n - 1 {
                    res = res - T::one();
                }
                track(&res, &mut sbp_residual);
            }
        }

        // Monomial accuracy. Grid x_i = i h; D x^k must equal k x^(k-1) on
        // boundary rows for k <= t and interior rows for k <= 2s.
        let xs: Vec<T> = {
            let mut xs = Vec::with_capacity(n);
            let mut x = T::zero();
            for _ in 0..n {
                xs.push(x.clone());
                x = x + self.h.clone();
            }
            xs
        };
        let mut power: Vec<T> = vec![T::one(); n];
        let mut boundary_accuracy = vec![0.0; t + 1];
        let mut interior_accuracy = vec![0.0; 2 * s + 1];
        let mut out = vec![T::zero(); n];
        let kmax = (2 * s).max(t);
        for k in 0..=kmax {
            if k > 0 {
                for (p, x) in power.iter_mut().zip(&xs) {
                    *p = p.clone() * x.clone();
                }
            }
            self.apply(&power, &mut out);
            // exact derivative k x^(k-1)
            for i in 0..n {
                let expect = if k == 0 {
                    T::zero()
                } else if xs[i].is_zero() {
                    // x = 0: k x^(k-1) vanishes unless k = 1
                    if k == 1 {
                        T::one()
                    } else {
                        T::zero()
                    }
                } else {
                    let mut kk = T::zero();
                    for _ in 0..k {
                        kk = kk + T::one();
                    }
                    power[i].clone() / xs[i].clone() * kk
                };
                let res = out[i].clone() - expect;
                let boundary = i < r || i >= n - r;
                if boundary && k <= t {
                    track(&res, &mut boundary_accuracy[k]);
                }
                if !boundary && k <= 2 * s {
                    track(&res, &mut interior_accuracy[k]);
                }
            }
        }

        let min_weight = self
            .norm
            .iter()
            .map(Scalar::to_f64)
            .fold(f64::INFINITY, f64::min);

        VerificationReport {
            sbp_residual,
            boundary_accuracy,
            interior_accuracy,
            min_weight,
            exact,
        }
    }
}

/// Residual summary from [`AssembledOperator::verify`].
#[derive(Clone, Debug)]
pub struct VerificationReport {
    /// Largest entry of `P D + D^T P - Q` in magnitude.
    pub sbp_residual: f64,
    /// Largest boundary-row derivative error per monomial degree `0..=t`.
    pub boundary_accuracy: Vec<f64>,
    /// Largest interior-row derivative error per monomial degree `0..=2s`.
    pub interior_accuracy: Vec<f64>,
    /// Smallest norm weight; must be positive.
    pub min_weight: f64,
    /// True when every residual was identically zero in the operator's
    /// scalar type (expected for exact assemblies).
    pub exact: bool,
}

impl VerificationReport {
    pub fn max_residual(&self) -> f64 {
        let acc = self
            .boundary_accuracy
            .iter()
            .chain(&self.interior_accuracy)
            .fold(0.0f64, |a, &b| a.max(b));
        acc.max(self.sbp_residual)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol && self.min_weight > 0.0
    }
}

/// Random rational manifold coordinates with small numerators, for
/// exactness sweeps over the closure family.
pub fn seeded_rational_coordinates(dof: usize, seed: u64) -> Vec<Rational> {
    // xorshift; keeps test vectors reproducible without pulling rand into
    // the library.
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    (0..dof)
        .map(|_| {
            let num = (next() % 19) as i64 - 9;
            let den = (next() % 9) as i64 + 1;
            rat(num, den)
        })
        .collect()
}
