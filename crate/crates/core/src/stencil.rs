//! Centered interior stencils, the boundary/interior coupling block, and the
//! Vandermonde-style accuracy matrices.
//!
//! Index conventions follow the operator layout: grid indices start at zero,
//! `0^0 = 1` and `0 * 0^{-1} = 0` wherever monomial powers appear.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ratlinalg::{rat, rat_int, rat_pow, solve_affine, Rational, RationalMatrix};

/// Centered first-derivative stencil of order `2s`. Only the positive-offset
/// coefficients are stored; the full row is antisymmetric:
/// `(-a_s, ..., -a_1, 0, a_1, ..., a_s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredStencil {
    s: usize,
    alpha: Vec<Rational>,
}

impl CenteredStencil {
    /// Half-width `s`.
    pub fn half_width(&self) -> usize {
        self.s
    }

    /// Coefficient `a_i` for offset `i`, `1 <= i <= s`.
    pub fn alpha(&self, i: usize) -> &Rational {
        &self.alpha[i - 1]
    }

    /// Positive-offset coefficients `a_1 ..= a_s`.
    pub fn coefficients(&self) -> &[Rational] {
        &self.alpha
    }
}

/// Exact coefficients of the unique centered first-derivative stencil of
/// order `2s`, from the `(2s+1)`-point accuracy conditions. By antisymmetry
/// only the odd-degree conditions are nontrivial:
/// `sum_i a_i i^(2m+1) = 1/2` for `m = 0`, zero otherwise.
pub fn central_coefficients(s: usize) -> CenteredStencil {
    assert!(s >= 1, "half-width must be positive");
    let a = RationalMatrix::from_fn(s, s, |m, i| rat_pow(i + 1, 2 * m + 1));
    let mut b = vec![Rational::zero(); s];
    b[0] = rat(1, 2);
    let sol = solve_affine(&a, &b)
        .expect("dimensions are consistent")
        .expect("odd-power Vandermonde system is nonsingular");
    debug_assert_eq!(sol.dof(), 0);
    CenteredStencil {
        s,
        alpha: sol.particular,
    }
}

/// The `r x s` block `C` where interior stencil rows overlap the first `r`
/// columns: `C[k][l] = a_{(r+l)-k}` when the offset lies in `1..=s`, zero
/// otherwise. Only the last `s` boundary columns are touched.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingBlock {
    r: usize,
    s: usize,
    c: RationalMatrix,
}

impl CouplingBlock {
    pub fn matrix(&self) -> &RationalMatrix {
        &self.c
    }

    pub fn entry(&self, k: usize, l: usize) -> &Rational {
        &self.c[(k, l)]
    }

    /// Sum of all entries; equals `sum_i i a_i = 1/2` for any valid block.
    pub fn total(&self) -> Rational {
        let mut acc = Rational::zero();
        for k in 0..self.r {
            for l in 0..self.s {
                acc += &self.c[(k, l)];
            }
        }
        acc
    }
}

/// Builds the coupling block for closure size `r`; rejects `r < s`, where the
/// one-sided closures would overlap each other's stencils.
pub fn coupling_block(s: usize, r: usize) -> Result<CouplingBlock> {
    if r < s {
        return Err(Error::UnsupportedParameters(format!(
            "closure size r={r} smaller than stencil half-width s={s}"
        )));
    }
    let stencil = central_coefficients(s);
    let c = RationalMatrix::from_fn(r, s, |k, l| {
        let offset = (r + l) as i64 - k as i64;
        if offset >= 1 && offset <= s as i64 {
            stencil.alpha(offset as usize).clone()
        } else {
            Rational::zero()
        }
    });
    Ok(CouplingBlock { r, s, c })
}

/// The three accuracy matrices for parameters `(s, t, r)`:
/// `X[i][j] = i^j` (r x (t+1)), `Xt[i][j] = (r+i)^j` (s x (t+1)) and
/// `Y[i][j] = j i^(j-1)` (r x (t+1)), under the zero-power conventions.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyMatrices {
    pub x: RationalMatrix,
    pub xtilde: RationalMatrix,
    pub y: RationalMatrix,
}

pub fn accuracy_matrices(s: usize, t: usize, r: usize) -> AccuracyMatrices {
    let x = RationalMatrix::from_fn(r, t + 1, |i, j| rat_pow(i, j));
    let xtilde = RationalMatrix::from_fn(s, t + 1, |i, j| rat_pow(r + i, j));
    let y = RationalMatrix::from_fn(r, t + 1, |i, j| {
        if j == 0 {
            Rational::zero()
        } else {
            rat_int(j as i64) * rat_pow(i, j - 1)
        }
    });
    AccuracyMatrices { x, xtilde, y }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::One;

    /// Closed-form oracle: a_i = (-1)^(i+1) (s!)^2 / (i (s-i)! (s+i)!).
    fn closed_form_alpha(s: usize, i: usize) -> Rational {
        let fact = |n: usize| -> BigInt {
            let mut acc = BigInt::one();
            for k in 2..=n {
                acc *= k;
            }
            acc
        };
        let sign = if i % 2 == 1 { 1 } else { -1 };
        let num = fact(s) * fact(s) * sign;
        let den = fact(s - i) * fact(s + i) * i;
        Rational::new(num, den)
    }

    #[test]
    fn lowest_order_stencils_match_hand_values() {
        assert_eq!(central_coefficients(1).coefficients(), &[rat(1, 2)]);
        assert_eq!(
            central_coefficients(2).coefficients(),
            &[rat(2, 3), rat(-1, 12)]
        );
        assert_eq!(
            central_coefficients(3).coefficients(),
            &[rat(3, 4), rat(-3, 20), rat(1, 60)]
        );
    }

    #[test]
    fn stencils_match_closed_form_up_to_s8() {
        for s in 1..=8 {
            let st = central_coefficients(s);
            for i in 1..=s {
                assert_eq!(st.alpha(i), &closed_form_alpha(s, i), "s={s} i={i}");
            }
        }
    }

    #[test]
    fn stencil_differentiates_monomials_exactly() {
        // sum_i a_i (i^k - (-i)^k) equals d/dx x^k at 0 for k <= 2s.
        for s in 1..=6 {
            let st = central_coefficients(s);
            for k in 0..=2 * s {
                let mut acc = Rational::zero();
                for i in 1..=s {
                    let pos = rat_pow(i, k);
                    let neg = if k % 2 == 0 { pos.clone() } else { -pos.clone() };
                    acc += st.alpha(i) * (pos - neg);
                }
                let expect = if k == 1 { Rational::one() } else { Rational::zero() };
                assert_eq!(acc, expect, "s={s} k={k}");
            }
        }
    }

    #[test]
    fn first_moment_is_one_half() {
        for s in 1..=8 {
            let st = central_coefficients(s);
            let mut acc = Rational::zero();
            for i in 1..=s {
                acc += st.alpha(i) * rat_int(i as i64);
            }
            assert_eq!(acc, rat(1, 2), "s={s}");
        }
    }

    #[test]
    fn coupling_block_s2_r4_pattern() {
        let c = coupling_block(2, 4).unwrap();
        let a = central_coefficients(2);
        // nonzeros exactly at (2,0), (3,0), (3,1)
        for k in 0..4 {
            for l in 0..2 {
                let expect = match (k, l) {
                    (2, 0) => a.alpha(2).clone(),
                    (3, 0) => a.alpha(1).clone(),
                    (3, 1) => a.alpha(2).clone(),
                    _ => Rational::zero(),
                };
                assert_eq!(c.entry(k, l), &expect, "({k},{l})");
            }
        }
    }

    #[test]
    fn coupling_total_is_one_half() {
        for (s, r) in [(1, 1), (2, 4), (3, 6), (4, 8), (5, 11), (3, 9)] {
            assert_eq!(coupling_block(s, r).unwrap().total(), rat(1, 2));
        }
    }

    #[test]
    fn single_point_coupling() {
        let c = coupling_block(1, 1).unwrap();
        assert_eq!(c.entry(0, 0), &rat(1, 2));
    }

    #[test]
    fn only_last_s_rows_couple() {
        let c = coupling_block(3, 8).unwrap();
        for k in 0..5 {
            for l in 0..3 {
                assert!(c.entry(k, l).is_zero());
            }
        }
    }

    #[test]
    fn undersized_closure_is_rejected() {
        assert!(matches!(
            coupling_block(3, 2),
            Err(Error::UnsupportedParameters(_))
        ));
    }

    #[test]
    fn accuracy_matrix_conventions() {
        let m = accuracy_matrices(2, 3, 5);
        assert_eq!(m.x[(0, 0)], Rational::one()); // 0^0 = 1
        assert_eq!(m.y[(0, 0)], Rational::zero()); // 0 * 0^-1 = 0
        for i in 0..5 {
            assert_eq!(m.y[(i, 0)], Rational::zero());
            assert_eq!(m.x[(i, 0)], Rational::one());
        }
    }

    #[test]
    fn accuracy_matrices_r3_t2() {
        let m = accuracy_matrices(1, 2, 3);
        let expect_x = [[1, 0, 0], [1, 1, 1], [1, 2, 4]];
        let expect_y = [[0, 1, 0], [0, 1, 2], [0, 1, 4]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.x[(i, j)], rat_int(expect_x[i][j]));
                assert_eq!(m.y[(i, j)], rat_int(expect_y[i][j]));
            }
        }
        assert_eq!(m.xtilde.rows(), 1);
        assert_eq!(m.xtilde[(0, 2)], rat_int(9)); // (r+0)^2
    }
}
