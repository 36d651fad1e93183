//! Exact rational arithmetic and exact linear-system solving.
//!
//! Every computation that decides existence runs through this module: the
//! scalar type is an arbitrary-precision rational kept in canonical form
//! (reduced, positive denominator), and [`solve_affine`] returns the complete
//! solution manifold `x0 + G y` of a linear system, not just one solution.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational scalar. Canonical form (gcd-reduced,
/// denominator > 0) is restored after every arithmetic operation.
pub type Rational = num_rational::BigRational;

/// Shorthand for an integer-valued rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `n / d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p/q`, a plain integer, or a plain decimal (`-0.25`) into an exact
/// rational. Decimal strings are exact: `0.5` becomes `1/2`.
pub fn parse_rational(token: &str) -> Result<Rational> {
    let bad = || Error::InvalidCoefficient(token.to_string());
    let token = token.trim();
    if token.is_empty() {
        return Err(bad());
    }
    if token.contains('/') {
        return Rational::from_str(token).map_err(|_| bad());
    }
    match token.find('.') {
        None => {
            let n = BigInt::from_str(token).map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
        Some(dot) => {
            let (ipart, fpart) = (&token[..dot], &token[dot + 1..]);
            if fpart.is_empty() || !fpart.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let digits = format!("{ipart}{fpart}");
            let n = BigInt::from_str(&digits).map_err(|_| bad())?;
            let d = BigInt::from(10u32).pow(fpart.len() as u32);
            Ok(Rational::new(n, d))
        }
    }
}

/// Combined bit length of numerator and denominator; the pivot-selection
/// heuristic uses this to limit coefficient blowup during elimination.
pub fn bit_length(q: &Rational) -> u64 {
    q.numer().bits() + q.denom().bits()
}

/// Rational to `f64`, with a manual scaling path for operands whose naive
/// conversion overflows.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    if q.is_zero() {
        return 0.0;
    }
    // Shift so the integer quotient carries ~63 bits, then rescale.
    let (n, d) = (q.numer(), q.denom());
    let shift = n.bits() as i64 - d.bits() as i64 - 63;
    let quotient = if shift >= 0 {
        (n / (d << shift as u64)).to_f64().unwrap_or(f64::INFINITY)
    } else {
        ((n << (-shift) as u64) / d).to_f64().unwrap_or(f64::INFINITY)
    };
    quotient * (shift as f64).exp2()
}

/// Renders a rational in scientific notation with `sig` significant digits,
/// e.g. `2.077e-01`. Rounding is half away from zero.
pub fn to_sig_string(q: &Rational, sig: usize) -> String {
    assert!(sig >= 1);
    if q.is_zero() {
        let zeros = "0".repeat(sig - 1);
        return format!("0.{zeros}e+00");
    }
    let neg = q.is_negative();
    let a = q.numer().abs();
    let b = q.denom().clone();
    let pow10 = |k: u32| BigInt::from(10u32).pow(k);

    // Exponent e with 10^e <= a/b < 10^(e+1).
    let mut e = a.to_string().len() as i64 - b.to_string().len() as i64;
    loop {
        // compare a/b against 10^e
        let (lhs, rhs) = if e >= 0 {
            (a.clone(), &b * pow10(e as u32))
        } else {
            (&a * pow10((-e) as u32), b.clone())
        };
        if lhs < rhs {
            e -= 1;
        } else if lhs >= &rhs * 10u32 {
            e += 1;
        } else {
            break;
        }
    }

    // Round a/b * 10^(sig-1-e) to the nearest integer, half away from zero.
    let k = sig as i64 - 1 - e;
    let (num, den) = if k >= 0 {
        (&a * pow10(k as u32), b.clone())
    } else {
        (a.clone(), &b * pow10((-k) as u32))
    };
    let mut m = (&num * 2u32 + &den) / (&den * 2u32);
    if m >= pow10(sig as u32) {
        m = pow10(sig as u32 - 1);
        e += 1;
    }
    let digits = m.to_string();
    let sign = if neg { "-" } else { "" };
    if sig == 1 {
        format!("{sign}{digits}e{e:+03}")
    } else {
        format!("{sign}{}.{}e{e:+03}", &digits[..1], &digits[1..])
    }
}

/// Dense row-major matrix of rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Rational>(
        rows: usize,
        cols: usize,
        mut f: F,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self {
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| a * b)
                    .fold(Rational::zero(), |acc, x| acc + x)
            })
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "mul dimension mismatch");
        Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = Rational::zero();
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if !a.is_zero() {
                    acc += a * &other[(k, j)];
                }
            }
            acc
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Rational::is_zero)
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|q| q.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// The full solution set `{ x0 + G y : y in R^v }` of a solvable linear
/// system, with `G` the nullspace basis and `v` the number of degrees of
/// freedom.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSolutionSet {
    pub particular: Vec<Rational>,
    pub basis: RationalMatrix,
}

impl AffineSolutionSet {
    pub fn dof(&self) -> usize {
        self.basis.cols()
    }

    /// Evaluates `x0 + G y`.
    pub fn point(&self, y: &[Rational]) -> Vec<Rational> {
        assert_eq!(y.len(), self.dof(), "free-parameter count mismatch");
        let mut x = self.particular.clone();
        for (j, yj) in y.iter().enumerate() {
            if yj.is_zero() {
                continue;
            }
            for (i, xi) in x.iter_mut().enumerate() {
                let g = &self.basis[(i, j)];
                if !g.is_zero() {
                    *xi += g * yj;
                }
            }
        }
        x
    }
}

/// Reduces the first `pivot_cols_limit` columns of `m` (stored flat,
/// row-major, `cols` wide) to reduced row echelon form. Returns the pivot
/// columns in ascending order. Row choice prefers small operands but the
/// resulting RREF is unique regardless.
fn rref_in_place(data: &mut [Rational], rows: usize, cols: usize, pivot_cols_limit: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut pivot_row = 0usize;

    for col in 0..pivot_cols_limit {
        if pivot_row == rows {
            break;
        }
        // Smallest-bit-length nonzero candidate in this column.
        let mut best: Option<(usize, u64)> = None;
        for i in pivot_row..rows {
            let entry = &data[i * cols + col];
            if entry.is_zero() {
                continue;
            }
            let len = bit_length(entry);
            if best.map_or(true, |(_, b)| len < b) {
                best = Some((i, len));
            }
        }
        let Some((pick, _)) = best else {
            continue; // free column
        };
        if pick != pivot_row {
            for j in 0..cols {
                data.swap(pick * cols + j, pivot_row * cols + j);
            }
        }

        // Normalize the pivot row, then eliminate the column everywhere else.
        let inv = data[pivot_row * cols + col].recip();
        if !inv.is_one() {
            for j in 0..cols {
                let e = &mut data[pivot_row * cols + j];
                if !e.is_zero() {
                    *e *= &inv;
                }
            }
        }
        let piv: Vec<Rational> = data[pivot_row * cols..(pivot_row + 1) * cols].to_vec();
        crate::par::for_each_chunk_mut(data, cols, |i, row| {
            if i == pivot_row || row[col].is_zero() {
                return;
            }
            let factor = row[col].clone();
            for (j, pj) in piv.iter().enumerate() {
                if pj.is_zero() {
                    continue;
                }
                if j == col {
                    // piv[col] is one, so the entry cancels exactly.
                    row[j] = Rational::zero();
                } else {
                    row[j] -= &factor * pj;
                }
            }
        });

        pivots.push(col);
        pivot_row += 1;
    }
    pivots
}

/// Solves `A x = b` exactly, returning the full affine solution set, or
/// `None` when `b` is outside the range of `A`.
///
/// The nullspace basis is deterministic: free variables in ascending column
/// order, each basis vector carrying a `1` in its own free-variable slot.
pub fn solve_affine(a: &RationalMatrix, b: &[Rational]) -> Result<Option<AffineSolutionSet>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows but right-hand side has {} entries",
            a.rows(),
            b.len()
        )));
    }
    let (m, n) = (a.rows(), a.cols());
    let cols = n + 1;
    let mut aug: Vec<Rational> = Vec::with_capacity(m * cols);
    for i in 0..m {
        aug.extend_from_slice(a.row(i));
        aug.push(b[i].clone());
    }

    let pivots = rref_in_place(&mut aug, m, cols, n);
    let rank = pivots.len();

    // Rows below the last pivot have an all-zero coefficient part; a nonzero
    // right-hand side there means the system is inconsistent.
    for i in rank..m {
        if !aug[i * cols + n].is_zero() {
            return Ok(None);
        }
    }

    let mut is_pivot = vec![false; n];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();

    let mut particular = vec![Rational::zero(); n];
    for (row, &c) in pivots.iter().enumerate() {
        particular[c] = aug[row * cols + n].clone();
    }

    let mut basis = RationalMatrix::zeros(n, free.len());
    for (k, &f) in free.iter().enumerate() {
        basis[(f, k)] = Rational::one();
        for (row, &c) in pivots.iter().enumerate() {
            let e = &aug[row * cols + f];
            if !e.is_zero() {
                basis[(c, k)] = -e.clone();
            }
        }
    }

    Ok(Some(AffineSolutionSet { particular, basis }))
}

/// Exact rank via the same elimination as [`solve_affine`].
pub fn rank(a: &RationalMatrix) -> usize {
    let mut data = a.data.clone();
    rref_in_place(&mut data, a.rows(), a.cols(), a.cols()).len()
}

/// Integer power with the conventions used throughout the accuracy systems:
/// `0^0 = 1`.
pub fn int_pow(base: usize, exp: usize) -> BigInt {
    if exp == 0 {
        return BigInt::one();
    }
    BigInt::from(base).pow(exp as u32)
}

/// `pow_rational(k, e)` as a rational, `0^0 = 1`.
pub fn rat_pow(base: usize, exp: usize) -> Rational {
    Rational::from_integer(int_pow(base, exp))
}

/// Sign helper used by reports: `-1`, `0`, `+1`.
pub fn signum(q: &Rational) -> i32 {
    match q.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| rat_int(v)).collect())
                .collect(),
        )
    }

    fn vec_i(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn identity_system_has_unique_solution() {
        let sol = solve_affine(&RationalMatrix::identity(2), &vec_i(&[3, 4]))
            .unwrap()
            .unwrap();
        assert_eq!(sol.particular, vec_i(&[3, 4]));
        assert_eq!(sol.dof(), 0);
    }

    #[test]
    fn underdetermined_row_has_two_dof() {
        let a = mat(&[&[1, 1, 1]]);
        let sol = solve_affine(&a, &vec_i(&[1])).unwrap().unwrap();
        assert_eq!(sol.dof(), 2);
        // particular solution satisfies the system
        let ax = a.mul_vec(&sol.particular);
        assert_eq!(ax, vec_i(&[1]));
        // A G = 0, verified by substitution
        for k in 0..sol.dof() {
            let g = sol.basis.col(k);
            assert!(a.mul_vec(&g).iter().all(Rational::is_zero));
        }
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let a = mat(&[&[1, 0], &[1, 0]]);
        assert!(solve_affine(&a, &vec_i(&[0, 1])).unwrap().is_none());
    }

    #[test]
    fn rhs_length_is_checked() {
        let a = RationalMatrix::identity(2);
        assert!(matches!(
            solve_affine(&a, &vec_i(&[1])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&RationalMatrix::identity(3)), 3);
        assert_eq!(rank(&RationalMatrix::zeros(2, 5)), 0);
        // second row is twice the first
        assert_eq!(rank(&mat(&[&[1, 2], &[2, 4]])), 1);
    }

    #[test]
    fn dof_plus_rank_is_column_count() {
        let systems: Vec<(RationalMatrix, Vec<Rational>)> = vec![
            (mat(&[&[1, 1, 1]]), vec_i(&[1])),
            (mat(&[&[1, 2], &[2, 4]]), vec_i(&[1, 2])),
            (mat(&[&[2, 0, 1], &[0, 3, 1], &[2, 3, 2]]), vec_i(&[1, 1, 2])),
            (RationalMatrix::identity(4), vec_i(&[1, 2, 3, 4])),
        ];
        for (a, b) in systems {
            let sol = solve_affine(&a, &b).unwrap().unwrap();
            assert_eq!(sol.dof() + rank(&a), a.cols());
        }
    }

    #[test]
    fn manifold_points_satisfy_system_for_random_parameters() {
        let a = mat(&[&[2, 0, 1, -1], &[0, 3, 1, 1], &[2, 3, 2, 0]]);
        let b = vec_i(&[1, 1, 2]);
        let sol = solve_affine(&a, &b).unwrap().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5b9_01);
        for _ in 0..100 {
            let y: Vec<Rational> = (0..sol.dof())
                .map(|_| rat(rng.gen_range(-50..=50), rng.gen_range(1..=20)))
                .collect();
            let x = sol.point(&y);
            assert_eq!(a.mul_vec(&x), b);
        }
    }

    #[test]
    fn nullspace_basis_is_deterministic() {
        let a = mat(&[&[1, 2, 3, 4], &[0, 0, 1, 1]]);
        let b = vec_i(&[1, 0]);
        let s1 = solve_affine(&a, &b).unwrap().unwrap();
        let s2 = solve_affine(&a, &b).unwrap().unwrap();
        assert_eq!(s1, s2);
        // pivot columns 0 and 2, so free columns 1 and 3 carry the ones
        assert!(s1.basis[(1, 0)].is_one());
        assert!(s1.basis[(3, 1)].is_one());
    }

    #[test]
    fn parse_canonicalizes() {
        assert_eq!(parse_rational("6/4").unwrap().to_string(), "3/2");
        assert_eq!(parse_rational("-4/-6").unwrap().to_string(), "2/3");
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), rat_int(7));
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn sig_string_formats() {
        assert_eq!(to_sig_string(&rat(1, 2), 4), "5.000e-01");
        assert_eq!(to_sig_string(&rat(17, 48), 4), "3.542e-01");
        assert_eq!(to_sig_string(&rat(-1, 3), 4), "-3.333e-01");
        assert_eq!(to_sig_string(&rat_int(0), 4), "0.000e+00");
        assert_eq!(to_sig_string(&rat_int(123449), 4), "1.234e+05");
    }

    #[test]
    fn sig_string_rounds_half_away() {
        assert_eq!(to_sig_string(&rat_int(12345), 4), "1.235e+04");
        assert_eq!(to_sig_string(&rat(99999, 100000), 4), "1.000e+00");
        assert_eq!(to_sig_string(&rat(9683, 1000000), 4), "9.683e-03");
    }

    #[test]
    fn rational_to_f64_handles_huge_operands() {
        let big = BigInt::from(10u32).pow(400);
        let q = Rational::new(big.clone() * 3, big);
        assert!((rational_to_f64(&q) - 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(n in -10_000i64..10_000, d in 1i64..10_000) {
            let q = rat(n, d);
            let back = parse_rational(&q.to_string()).unwrap();
            prop_assert_eq!(q, back);
        }

        #[test]
        fn solve_matches_substitution(
            entries in proptest::collection::vec(-6i64..=6, 12),
            rhs in proptest::collection::vec(-6i64..=6, 3),
        ) {
            let a = RationalMatrix::from_fn(3, 4, |i, j| rat_int(entries[i * 4 + j]));
            let b: Vec<Rational> = rhs.iter().map(|&v| rat_int(v)).collect();
            if let Some(sol) = solve_affine(&a, &b).unwrap() {
                prop_assert_eq!(a.mul_vec(&sol.particular), b);
                prop_assert_eq!(sol.dof() + rank(&a), 4);
            }
        }
    }
}
