//! Exact rational simplex for the max-min positivity problem
//!
//! ```text
//! maximize   eta
//! subject to x_i >= eta,  x = x0 + G y,
//! ```
//!
//! with free variables `y` and `eta`. Free variables are split into
//! positive/negative parts for standard form, and a two-phase method with
//! Bland's rule guarantees termination. Everything is exact.

use num_traits::{One, Signed, Zero};

use crate::error::Result;
use crate::ratlinalg::{Rational, RationalMatrix};

/// Outcome of the max-min linear program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
}

/// Solution of the max-min linear program.
///
/// For `Optimal` results `eta` is the exact optimum and equals
/// `min_i x_i`. For `Unbounded` results `y` is a finite witness on the
/// improving ray chosen so that every `x_i >= 1`; existence questions only
/// consume the sign of the optimum, which is positive in that case.
#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub eta: Rational,
    pub y: Vec<Rational>,
    pub x: Vec<Rational>,
}

/// Dense exact tableau. Column layout: `y+ (v) | y- (v) | eta+ | eta- | w (r)`
/// plus phase-one artificials at the end. The last entry of each row is the
/// right-hand side.
struct Tableau {
    ncols: usize,
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    /// Reduced-cost row, updated with each pivot; entry `ncols` is the
    /// current objective value.
    obj: Vec<Rational>,
}

enum Step {
    Optimal,
    Unbounded { entering: usize },
}

/// `target -= target[col] * piv`, written so the pivot column cancels to an
/// exact zero (`piv[col]` is one).
fn eliminate(target: &mut [Rational], piv: &[Rational], col: usize) {
    let factor = target[col].clone();
    for (j, pj) in piv.iter().enumerate() {
        if pj.is_zero() {
            continue;
        }
        if j == col {
            target[j] = Rational::zero();
        } else {
            target[j] -= &factor * pj;
        }
    }
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        if !inv.is_one() {
            for e in self.rows[row].iter_mut() {
                if !e.is_zero() {
                    *e *= &inv;
                }
            }
        }
        let piv = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            eliminate(r, &piv, col);
        }
        if !self.obj[col].is_zero() {
            let mut obj = std::mem::take(&mut self.obj);
            eliminate(&mut obj, &piv, col);
            self.obj = obj;
        }
        self.basis[row] = col;
    }

    /// Installs a fresh objective (maximization) reduced against the current
    /// basis; entry `j` then holds the reduced cost `c_j - z_j`.
    fn set_objective(&mut self, cost: &[Rational]) {
        let mut obj = cost.to_vec();
        obj.push(Rational::zero());
        for (i, &bc) in self.basis.iter().enumerate() {
            if !obj[bc].is_zero() {
                eliminate(&mut obj, &self.rows[i], bc);
            }
        }
        self.obj = obj;
    }

    /// Runs simplex iterations under Bland's rule until optimality or an
    /// unbounded ray. `allowed` limits the entering columns (used to freeze
    /// artificials out of phase two).
    fn run(&mut self, allowed: usize) -> Step {
        loop {
            // Bland: entering variable is the lowest-index column with a
            // positive reduced cost (maximization).
            let entering = (0..allowed).find(|&j| self.obj[j].is_positive());
            let Some(col) = entering else {
                return Step::Optimal;
            };

            // Ratio test; ties broken by the smallest basic variable index.
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &row[self.ncols] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return Step::Unbounded { entering: col },
            }
        }
    }

    /// Value of a structural variable at the current basic solution.
    fn value(&self, col: usize) -> Rational {
        self.basis
            .iter()
            .position(|&b| b == col)
            .map(|i| self.rows[i][self.ncols].clone())
            .unwrap_or_else(Rational::zero)
    }
}

/// Maximizes `min_i (x0 + G y)_i` over `y` in exact arithmetic.
pub fn maximize_min_entry(x0: &[Rational], g: &RationalMatrix) -> Result<LpResult> {
    let r = x0.len();
    let v = g.cols();
    if g.rows() != r {
        return Err(crate::Error::DimensionMismatch(format!(
            "x0 has {} entries but G has {} rows",
            r,
            g.rows()
        )));
    }
    if v == 0 {
        let eta = x0.iter().min().cloned().expect("nonempty x0");
        return Ok(LpResult {
            status: LpStatus::Optimal,
            eta,
            y: Vec::new(),
            x: x0.to_vec(),
        });
    }

    // Standard form: -G y+ + G y- + eta+ 1 - eta- 1 + w = x0, rows with a
    // negative right-hand side negated, artificials added where the slack
    // sign flipped.
    let eta_pos = 2 * v;
    let eta_neg = 2 * v + 1;
    let w0 = 2 * v + 2;
    let nstruct = w0 + r;

    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(r);
    let mut basis = Vec::with_capacity(r);
    let mut nart = 0usize;
    let mut art_rows = Vec::new();
    for i in 0..r {
        let negate = x0[i].is_negative();
        let sgn = if negate { -Rational::one() } else { Rational::one() };
        let mut row = vec![Rational::zero(); nstruct];
        for j in 0..v {
            let gij = &g[(i, j)];
            if gij.is_zero() {
                continue;
            }
            row[j] = -gij * &sgn;
            row[v + j] = gij * &sgn;
        }
        row[eta_pos] = sgn.clone();
        row[eta_neg] = -sgn.clone();
        row[w0 + i] = sgn.clone();
        rows.push(row);
        if negate {
            art_rows.push(i);
            nart += 1;
        } else {
            basis.push(w0 + i);
        }
    }
    let ncols = nstruct + nart;
    for row in rows.iter_mut() {
        row.resize(ncols, Rational::zero());
        row.push(Rational::zero()); // rhs placeholder
    }
    for (k, &i) in art_rows.iter().enumerate() {
        rows[i][nstruct + k] = Rational::one();
    }
    // insert artificial basics in row order
    {
        let mut basis_full = Vec::with_capacity(r);
        let mut k = 0usize;
        for i in 0..r {
            if art_rows.contains(&i) {
                basis_full.push(nstruct + k);
                k += 1;
            } else {
                basis_full.push(w0 + i);
            }
        }
        basis = basis_full;
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row[ncols] = x0[i].abs();
    }

    let mut tab = Tableau {
        ncols,
        rows,
        basis,
        obj: Vec::new(),
    };

    // Phase one: maximize -(sum of artificials).
    if nart > 0 {
        let mut cost = vec![Rational::zero(); ncols];
        for k in 0..nart {
            cost[nstruct + k] = -Rational::one();
        }
        tab.set_objective(&cost);
        match tab.run(ncols) {
            Step::Optimal => {}
            Step::Unbounded { .. } => {
                unreachable!("phase-one objective is bounded above by zero")
            }
        }
        assert!(
            tab.obj[ncols].is_zero(),
            "max-min LP is feasible for any y, phase one must reach zero"
        );
        // Pivot any artificial still basic (necessarily at value zero) onto a
        // structural column, or drop its redundant row.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] < nstruct {
                i += 1;
                continue;
            }
            match (0..nstruct).find(|&j| !tab.rows[i][j].is_zero()) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                }
            }
            i += 1;
        }
    }

    // Phase two: maximize eta+ - eta-.
    let mut cost = vec![Rational::zero(); ncols];
    cost[eta_pos] = Rational::one();
    cost[eta_neg] = -Rational::one();
    tab.set_objective(&cost);
    let step = tab.run(nstruct);

    let current_y = |tab: &Tableau| -> Vec<Rational> {
        (0..v).map(|j| tab.value(j) - tab.value(v + j)).collect()
    };

    match step {
        Step::Optimal => {
            let y = current_y(&tab);
            let x = point(x0, g, &y);
            let eta = tab.value(eta_pos) - tab.value(eta_neg);
            debug_assert_eq!(Some(&eta), x.iter().min());
            Ok(LpResult {
                status: LpStatus::Optimal,
                eta,
                y,
                x,
            })
        }
        Step::Unbounded { entering } => {
            // Improving ray: entering column at rate one, basic variables at
            // minus the tableau column. Walk far enough that min_i x_i >= 1.
            let mut dir = vec![Rational::zero(); tab.ncols];
            dir[entering] = Rational::one();
            for (i, &b) in tab.basis.iter().enumerate() {
                dir[b] = -tab.rows[i][entering].clone();
            }
            let d_eta = &dir[eta_pos] - &dir[eta_neg];
            assert!(d_eta.is_positive(), "ray must improve the objective");
            let eta_now = tab.value(eta_pos) - tab.value(eta_neg);
            let theta = if eta_now >= Rational::one() {
                Rational::zero()
            } else {
                (Rational::one() - eta_now) / d_eta
            };
            let y_now = current_y(&tab);
            let y: Vec<Rational> = (0..v)
                .map(|j| &y_now[j] + &theta * (&dir[j] - &dir[v + j]))
                .collect();
            let x = point(x0, g, &y);
            let eta = x.iter().min().cloned().expect("nonempty x");
            assert!(eta >= Rational::one());
            Ok(LpResult {
                status: LpStatus::Unbounded,
                eta,
                y,
                x,
            })
        }
    }
}

fn point(x0: &[Rational], g: &RationalMatrix, y: &[Rational]) -> Vec<Rational> {
    let gy = g.mul_vec(y);
    x0.iter().zip(gy).map(|(a, b)| a + b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlinalg::{rat, rat_int};
    use num_traits::Zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gmat(rows: usize, cols: usize, entries: &[i64]) -> RationalMatrix {
        RationalMatrix::from_fn(rows, cols, |i, j| rat_int(entries[i * cols + j]))
    }

    #[test]
    fn empty_basis_is_trivial() {
        let res = maximize_min_entry(&[rat(1, 2)], &RationalMatrix::zeros(1, 0)).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.eta, rat(1, 2));
    }

    #[test]
    fn one_dimensional_line_search() {
        // x = (-1 + y, 1): min is max-ed where y - 1 = 1, i.e. eta = 1.
        // Oracle: coarse scan over y confirms no better value exists.
        let x0 = vec![rat_int(-1), rat_int(1)];
        let g = gmat(2, 1, &[1, 0]);
        let res = maximize_min_entry(&x0, &g).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.eta, rat_int(1));
        assert_eq!(res.x, vec![rat_int(1), rat_int(1)]);
        for num in -80i64..=80 {
            let y = vec![rat(num, 10)];
            let x = g.mul_vec(&y);
            let m = x0
                .iter()
                .zip(&x)
                .map(|(a, b)| a + b)
                .min()
                .unwrap();
            assert!(m <= res.eta);
        }
    }

    #[test]
    fn all_rising_direction_is_unbounded() {
        let x0 = vec![rat_int(0), rat_int(0)];
        let g = gmat(2, 1, &[1, 1]);
        let res = maximize_min_entry(&x0, &g).unwrap();
        assert_eq!(res.status, LpStatus::Unbounded);
        assert!(res.x.iter().all(|x| *x >= rat_int(1)));
        assert!(res.y[0].is_positive());
    }

    #[test]
    fn returned_x_is_consistent() {
        let x0 = vec![rat_int(3), rat_int(-2), rat_int(5)];
        let g = gmat(3, 2, &[1, -1, 2, 1, -1, 0]);
        let res = maximize_min_entry(&x0, &g).unwrap();
        let expect = point(&x0, &g, &res.y);
        assert_eq!(res.x, expect);
        if res.status == LpStatus::Optimal {
            assert_eq!(res.eta, res.x.iter().min().cloned().unwrap());
        }
    }

    #[test]
    fn optimum_is_invariant_under_warm_starts() {
        // Re-anchoring the affine set at x0 + G y_r leaves the optimal value
        // unchanged; 20 seeded restarts must agree exactly.
        let x0 = vec![rat_int(4), rat_int(-1), rat_int(2), rat_int(0)];
        let g = gmat(4, 2, &[1, 2, -1, 1, 0, -2, 2, 0]);
        let reference = maximize_min_entry(&x0, &g).unwrap();
        assert_eq!(reference.status, LpStatus::Optimal);
        let mut rng = ChaCha8Rng::seed_from_u64(0x517_0a);
        for _ in 0..20 {
            let yr: Vec<Rational> = (0..2)
                .map(|_| rat(rng.gen_range(-30..=30), rng.gen_range(1..=9)))
                .collect();
            let shifted = point(&x0, &g, &yr);
            let res = maximize_min_entry(&shifted, &g).unwrap();
            assert_eq!(res.eta, reference.eta);
        }
    }

    #[test]
    fn appending_a_column_never_decreases_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xa4b1);
        for _ in 0..25 {
            let r = rng.gen_range(2..=5);
            let v = rng.gen_range(0..=3);
            let x0: Vec<Rational> = (0..r).map(|_| rat_int(rng.gen_range(-4..=4))).collect();
            let entries: Vec<i64> = (0..r * v).map(|_| rng.gen_range(-3..=3)).collect();
            let g = gmat(r, v, &entries);
            let base = maximize_min_entry(&x0, &g).unwrap();

            let extra: Vec<i64> = (0..r).map(|_| rng.gen_range(-3..=3)).collect();
            let wider = RationalMatrix::from_fn(r, v + 1, |i, j| {
                if j < v {
                    g[(i, j)].clone()
                } else {
                    rat_int(extra[i])
                }
            });
            let more = maximize_min_entry(&x0, &wider).unwrap();
            if base.status == LpStatus::Optimal && more.status == LpStatus::Optimal {
                assert!(more.eta >= base.eta);
            } else if base.status == LpStatus::Unbounded {
                assert_eq!(more.status, LpStatus::Unbounded);
            }
        }
    }

    #[test]
    fn degenerate_columns_terminate() {
        // All-zero G forces eta to min x0 regardless of y.
        let x0 = vec![rat_int(2), rat_int(7)];
        let g = RationalMatrix::zeros(2, 3);
        let res = maximize_min_entry(&x0, &g).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.eta, rat_int(2));
        assert!(res.y.iter().all(Rational::is_zero));
    }
}
