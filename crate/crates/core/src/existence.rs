//! Existence decisions for diagonal-norm SBP operators.
//!
//! For a triple `(s, t, r)` the boundary norm weights must satisfy one linear
//! compatibility equation per pair `0 <= p <= q <= t`. The pipeline solves
//! that system exactly, then maximizes the smallest weight over the solution
//! manifold with the exact simplex; the operator exists if and only if the
//! optimum is positive.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::ratlinalg::{
    rat_int, rat_pow, solve_affine, to_sig_string, Rational, RationalMatrix,
};
use crate::simplex::{maximize_min_entry, LpStatus};
use crate::stencil::coupling_block;

/// Operator parameters: interior order `2s`, boundary order `t`, closure
/// size `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SbpParameters {
    pub s: usize,
    pub t: usize,
    pub r: usize,
}

impl SbpParameters {
    pub fn new(s: usize, t: usize, r: usize) -> Result<Self> {
        if s < 1 || t < 1 {
            return Err(Error::UnsupportedParameters(format!(
                "orders must be positive, got s={s}, t={t}"
            )));
        }
        if r < s {
            return Err(Error::UnsupportedParameters(format!(
                "closure size r={r} smaller than stencil half-width s={s}"
            )));
        }
        Ok(Self { s, t, r })
    }

    /// Number of compatibility equations, `(t+1)(t+2)/2`.
    pub fn equation_count(&self) -> usize {
        (self.t + 1) * (self.t + 2) / 2
    }
}

impl std::fmt::Display for SbpParameters {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.s, self.t, self.r)
    }
}

/// A positive diagonal boundary norm satisfying the compatibility system,
/// together with the max-min optimum it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct NormCandidate {
    pub params: SbpParameters,
    /// Diagonal of the boundary norm block, length `r`, all positive.
    pub weights: Vec<Rational>,
    /// Optimal value of the max-min problem (the smallest weight).
    pub eta: Rational,
    /// Dimension of the norm solution manifold.
    pub dof_p: usize,
}

/// Outcome of the existence decision for one parameter triple.
#[derive(Clone, Debug, PartialEq)]
pub struct ExistenceReport {
    pub params: SbpParameters,
    pub exists: bool,
    /// Max-min optimum; any sign. `-1` when the compatibility system itself
    /// is inconsistent.
    pub eta: Rational,
    pub dof_p: usize,
    /// Present exactly when the operator exists.
    pub norm: Option<NormCandidate>,
}

impl ExistenceReport {
    /// Four-significant-digit rendering of the optimum, as used in reports.
    pub fn eta_decimal(&self) -> String {
        to_sig_string(&self.eta, 4)
    }
}

/// Right-hand side shared by the diagonal and block compatibility systems:
/// `b_(p,q) = sum_{k,l} (k^p (r+l)^q + k^q (r+l)^p) C[k][l] - [p=q=0]`.
fn norm_rhs(params: SbpParameters) -> Result<Vec<Rational>> {
    let SbpParameters { s, t, r } = params;
    let c = coupling_block(s, r)?;
    let mut b = Vec::with_capacity(params.equation_count());
    for p in 0..=t {
        for q in p..=t {
            let mut acc = Rational::zero();
            for k in 0..r {
                for l in 0..s {
                    let ckl = c.entry(k, l);
                    if ckl.is_zero() {
                        continue;
                    }
                    let term = rat_pow(k, p) * rat_pow(r + l, q)
                        + rat_pow(k, q) * rat_pow(r + l, p);
                    acc += term * ckl;
                }
            }
            if p == 0 && q == 0 {
                acc -= Rational::one();
            }
            b.push(acc);
        }
    }
    Ok(b)
}

/// Compatibility system for a diagonal norm. One row per pair
/// `0 <= p <= q <= t` in lexicographic order; the unknowns are the `r`
/// diagonal weights, with row entries `(p+q) k^(p+q-1)`.
pub fn build_diagonal_norm_system(
    params: SbpParameters,
) -> Result<(RationalMatrix, Vec<Rational>)> {
    let SbpParameters { t, r, .. } = params;
    let rows = params.equation_count();
    let mut a = RationalMatrix::zeros(rows, r);
    let mut row = 0;
    for p in 0..=t {
        for q in p..=t {
            let m = p + q;
            if m > 0 {
                for k in 0..r {
                    a[(row, k)] = rat_int(m as i64) * rat_pow(k, m - 1);
                }
            }
            row += 1;
        }
    }
    Ok((a, norm_rhs(params)?))
}

/// Compatibility system for a full symmetric (block) norm. Same right-hand
/// side as the diagonal system; the unknowns are the `r(r+1)/2` upper-triangle
/// entries in row-major order. Provided for cross-checks only; the existence
/// pipeline uses the diagonal system.
pub fn build_block_norm_system(
    params: SbpParameters,
) -> Result<(RationalMatrix, Vec<Rational>)> {
    let SbpParameters { t, r, .. } = params;
    let unknowns = r * (r + 1) / 2;
    let col_of = |k: usize, l: usize| -> usize {
        // upper triangle (k <= l), row-major
        k * (2 * r - k + 1) / 2 + (l - k)
    };
    // coefficient of P[k][l] in equation (p,q): q k^p l^(q-1) + p k^q l^(p-1),
    // with the 0-convention that a j i^(j-1) term vanishes when j = 0.
    let coeff = |p: usize, q: usize, k: usize, l: usize| -> Rational {
        let mut acc = Rational::zero();
        if q > 0 {
            acc += rat_int(q as i64) * rat_pow(k, p) * rat_pow(l, q - 1);
        }
        if p > 0 {
            acc += rat_int(p as i64) * rat_pow(k, q) * rat_pow(l, p - 1);
        }
        acc
    };
    let rows = params.equation_count();
    let mut a = RationalMatrix::zeros(rows, unknowns);
    let mut row = 0;
    for p in 0..=t {
        for q in p..=t {
            for k in 0..r {
                for l in k..r {
                    let mut e = coeff(p, q, k, l);
                    if k != l {
                        // symmetric partner P[l][k]
                        e += coeff(p, q, l, k);
                    }
                    if !e.is_zero() {
                        a[(row, col_of(k, l))] = e;
                    }
                }
            }
            row += 1;
        }
    }
    Ok((a, norm_rhs(params)?))
}

/// Decides existence for `(s, t, r)`: solve the compatibility system, then
/// maximize the smallest weight over the solution manifold. The operator
/// exists if and only if the optimum is positive; when it does, the returned
/// norm carries the maximizing weights.
pub fn exists_sbp(params: SbpParameters) -> Result<ExistenceReport> {
    let (a, b) = build_diagonal_norm_system(params)?;
    let Some(solutions) = solve_affine(&a, &b)? else {
        return Ok(ExistenceReport {
            params,
            exists: false,
            eta: -Rational::one(),
            dof_p: 0,
            norm: None,
        });
    };
    let dof_p = solutions.dof();

    let (eta, weights, positive) = if dof_p == 0 {
        let eta = solutions
            .particular
            .iter()
            .min()
            .cloned()
            .expect("r >= 1 weights");
        let positive = eta.is_positive();
        (eta, solutions.particular, positive)
    } else {
        let lp = maximize_min_entry(&solutions.particular, &solutions.basis)?;
        let positive = match lp.status {
            LpStatus::Optimal => lp.eta.is_positive(),
            // The witness already has every entry >= 1.
            LpStatus::Unbounded => true,
        };
        (lp.eta, lp.x, positive)
    };

    let norm = positive.then(|| NormCandidate {
        params,
        weights,
        eta: eta.clone(),
        dof_p,
    });
    Ok(ExistenceReport {
        params,
        exists: positive,
        eta,
        dof_p,
        norm,
    })
}

/// Default cap for the minimal-closure search.
pub fn default_search_cap(s: usize) -> usize {
    8 * s
}

/// Smallest closure size `r` for which an operator with orders `(s, t)`
/// exists. Existence is monotone in `r`, so an exponential upward probe from
/// `r = s` brackets the answer and bisection pins it down.
pub fn min_closure_search(
    s: usize,
    t: usize,
    cap: Option<usize>,
) -> Result<(usize, ExistenceReport)> {
    let cap = cap.unwrap_or_else(|| default_search_cap(s));
    let report = exists_sbp(SbpParameters::new(s, t, s)?)?;
    if report.exists {
        return Ok((s, report));
    }

    // Probe r = s+1, s+2, s+4, ... until feasible or capped.
    let mut lo = s; // known infeasible
    let mut step = 1usize;
    let mut hi = None;
    let mut hi_report = None;
    while hi.is_none() {
        let r = (s + step).min(cap);
        let rep = exists_sbp(SbpParameters::new(s, t, r)?)?;
        if rep.exists {
            hi = Some(r);
            hi_report = Some(rep);
        } else {
            lo = r;
            if r == cap {
                return Err(Error::SearchCapExceeded { s, t, cap });
            }
            step *= 2;
        }
    }
    let mut hi = hi.expect("loop sets hi");
    let mut hi_report = hi_report.expect("loop sets report");

    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let rep = exists_sbp(SbpParameters::new(s, t, mid)?)?;
        if rep.exists {
            hi = mid;
            hi_report = rep;
        } else {
            lo = mid;
        }
    }
    Ok((hi, hi_report))
}

/// Largest boundary order `t` for which an operator exists at fixed
/// `r = 2s`, by descending scan from `t = s` (dropping accuracy rows only
/// enlarges the feasible set, so existence is monotone downward in `t`).
pub fn max_boundary_order(s: usize) -> Result<(usize, ExistenceReport)> {
    if s < 1 {
        return Err(Error::UnsupportedParameters("s must be positive".into()));
    }
    for t in (1..=s).rev() {
        let rep = exists_sbp(SbpParameters::new(s, t, 2 * s)?)?;
        if rep.exists {
            return Ok((t, rep));
        }
    }
    Err(Error::Inconsistency(format!(
        "no operator with any boundary order at r = 2s = {}",
        2 * s
    )))
}
