//! Derivative convergence studies and the advection benchmark.
//!
//! The benchmark solves `u_t + u_x = 0` on `[0, 1000]` with a Gaussian pulse
//! entering through the left boundary, weakly enforced by a SAT penalty:
//!
//! ```text
//! v_t + D v = -(v_0 - g(t)) P^{-1} e_0
//! ```
//!
//! Time integration is explicit Adams-Bashforth with exact rational
//! coefficients; steps follow the tabulated CFL multipliers via
//! `cfl1 cfl2 k = h`.

use std::time::Instant;

use num_traits::{One, Zero};

use crate::construct::{solve_closure, AssembledOperator, OperatorClosure};
use crate::error::{Error, Result};
use crate::existence::{exists_sbp, SbpParameters};
use crate::optimize::{optimized_closure, DEFAULT_SURROGATE_GRID};
use crate::par;
use crate::ratlinalg::{rat, rat_int, solve_affine, Rational, RationalMatrix};

/// Domain length and final time of the advection benchmark.
pub const DOMAIN_LENGTH: f64 = 1000.0;
pub const FINAL_TIME: f64 = 1000.0;

/// Adams-Bashforth orders used by the benchmark. Second and fifth order are
/// excluded; their stability regions cover too little of the imaginary axis.
pub const AB_ORDERS: [usize; 5] = [3, 4, 6, 7, 8];

/// Grid sizes of the full benchmark sweep.
pub const SWEEP_GRID_SIZES: [usize; 7] = [2000, 4000, 6000, 8000, 10000, 12000, 14000];

/// Explicit Adams-Bashforth scheme
/// `v_{m+1} = v_m + k sum_j beta_j F(t_{m-j}, v_{m-j})`.
#[derive(Clone, Debug, PartialEq)]
pub struct AbScheme {
    pub q: usize,
    pub beta: Vec<Rational>,
}

impl AbScheme {
    pub fn beta_f64(&self) -> Vec<f64> {
        self.beta.iter().map(crate::ratlinalg::rational_to_f64).collect()
    }
}

/// Exact Adams-Bashforth coefficients of order `q`, by integrating the
/// Lagrange basis over one step: nodes at `tau = 0, -1, ..., -(q-1)`,
/// `beta_j = integral_0^1 prod_{i != j} (tau + i) / (i - j) dtau`.
pub fn ab_coefficients(q: usize) -> AbScheme {
    assert!(q >= 1, "order must be positive");
    let mut beta = Vec::with_capacity(q);
    for j in 0..q {
        // numerator polynomial prod_{i != j} (tau + i), constant term first
        let mut coeffs = vec![Rational::one()];
        for i in 0..q {
            if i == j {
                continue;
            }
            let mut next = vec![Rational::zero(); coeffs.len() + 1];
            for (m, c) in coeffs.iter().enumerate() {
                next[m] += c * rat_int(i as i64);
                next[m + 1] += c;
            }
            coeffs = next;
        }
        let mut integral = Rational::zero();
        for (m, c) in coeffs.iter().enumerate() {
            integral += c / rat_int((m + 1) as i64);
        }
        let mut denom = Rational::one();
        for i in 0..q {
            if i != j {
                denom *= rat_int(i as i64 - j as i64);
            }
        }
        beta.push(integral / denom);
    }
    AbScheme { q, beta }
}

/// Gaussian boundary signal `g(t) = exp(-a (t - 10)^2)`; the weight makes the
/// pulse essentially supported (to 1e-16) in the window `[0, 20]`, so it
/// enters through the boundary after the zero initial condition and ends
/// centered over `x = 990` at `t = 1000`.
pub fn gaussian_boundary(t: f64) -> f64 {
    let a = -(1e-16f64).ln() / 100.0;
    (-a * (t - 10.0) * (t - 10.0)).exp()
}

/// Exact advection solution `u(x, t) = g(t - x)` for zero initial data.
pub fn exact_solution(x: f64, t: f64) -> f64 {
    gaussian_boundary(t - x)
}

/// CFL multipliers from the benchmark table: `cfl1` per operator half-width
/// `s in 2..=7`, `cfl2` per Adams-Bashforth order.
pub fn cfl_lookup(s: usize, q: usize) -> Result<(f64, f64)> {
    let cfl1 = match s {
        2 => 1.4,
        3 => 1.6,
        4 => 1.8,
        5 => 1.9,
        6 => 2.0,
        7 => 2.1,
        _ => {
            return Err(Error::UnsupportedParameters(format!(
                "no CFL multiplier tabulated for s={s}"
            )))
        }
    };
    let cfl2 = match q {
        3 => 1.39,
        4 => 2.38,
        6 => 8.93,
        7 => 17.5,
        8 => 34.1,
        _ => {
            return Err(Error::UnsupportedParameters(format!(
                "no CFL multiplier tabulated for AB order q={q}"
            )))
        }
    };
    Ok((cfl1, cfl2))
}

/// Benchmark operator parameters: boundary order `t = s` and the smallest
/// existing closure, except `r = 15` for `s = 6` where the minimal closure
/// has a poorly conditioned norm.
pub fn benchmark_params(s: usize) -> Result<SbpParameters> {
    let r = match s {
        2 => 4,
        3 => 6,
        4 => 8,
        5 => 11,
        6 => 15,
        7 => 19,
        _ => {
            return Err(Error::UnsupportedParameters(format!(
                "benchmark covers s in 2..=7, got {s}"
            )))
        }
    };
    SbpParameters::new(s, s, r)
}

/// Full pipeline for one benchmark operator: existence, closure manifold,
/// surrogate optimization; returns the optimized float closure.
pub fn benchmark_closure(s: usize) -> Result<OperatorClosure<f64>> {
    let params = benchmark_params(s)?;
    let report = exists_sbp(params)?;
    let norm = report.norm.ok_or_else(|| {
        Error::Inconsistency(format!("tabulated benchmark operator {params} must exist"))
    })?;
    let man = solve_closure(params, &norm)?;
    let (closure, _) = optimized_closure(&man, DEFAULT_SURROGATE_GRID)?;
    Ok(closure)
}

/// SAT-penalized advection right-hand side
/// `out = -D v - (v_0 - boundary) P^{-1} e_0`.
pub fn sat_rhs(op: &AssembledOperator<f64>, v: &[f64], boundary: f64, out: &mut [f64]) {
    op.apply(v, out);
    for o in out.iter_mut() {
        *o = -*o;
    }
    out[0] -= (v[0] - boundary) / op.norm()[0];
}

fn instability_guard(v: &[f64], t: f64) -> Result<()> {
    // boundary data has unit amplitude; 10^3 above that is divergence
    if v.iter().any(|x| !x.is_finite() || x.abs() > 1e3) {
        return Err(Error::Diverged { t });
    }
    Ok(())
}

/// Integrates the SAT advection system from `t0` over `steps` uniform steps
/// of size `k`. The first `q - 1` states are seeded with exact solution
/// values; the state at `t0` itself is zero when `zero_start` is set (the
/// benchmark's initial condition) and exact otherwise.
pub fn integrate_advection(
    op: &AssembledOperator<f64>,
    scheme: &AbScheme,
    k: f64,
    t0: f64,
    steps: usize,
    zero_start: bool,
) -> Result<Vec<f64>> {
    let n = op.n();
    let q = scheme.q;
    assert!(steps >= q, "too few steps for the bootstrap history");
    let beta = scheme.beta_f64();
    let h = op.h;
    let grid_x = |i: usize| i as f64 * h;

    let sample_exact = |t: f64| -> Vec<f64> { (0..n).map(|i| exact_solution(grid_x(i), t)).collect() };

    // Bootstrap: states at t0, t0 + k, ..., t0 + (q-1)k with their rhs.
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(q);
    let mut v = if zero_start { vec![0.0; n] } else { sample_exact(t0) };
    {
        let mut f = vec![0.0; n];
        sat_rhs(op, &v, gaussian_boundary(t0), &mut f);
        history.push(f);
    }
    for m in 1..q {
        let t = t0 + m as f64 * k;
        v = sample_exact(t);
        let mut f = vec![0.0; n];
        sat_rhs(op, &v, gaussian_boundary(t), &mut f);
        history.push(f);
    }

    // Main loop; `v` is the state at step `cur`.
    let mut rhs = vec![0.0; n];
    for cur in (q - 1)..steps {
        for j in 0..q {
            let f = &history[(cur - j) % q];
            let w = k * beta[j];
            for (vi, fi) in v.iter_mut().zip(f) {
                *vi += w * fi;
            }
        }
        let t_next = t0 + (cur + 1) as f64 * k;
        if cur % 256 == 0 {
            instability_guard(&v, t_next)?;
        }
        sat_rhs(op, &v, gaussian_boundary(t_next), &mut rhs);
        history[(cur + 1) % q].copy_from_slice(&rhs);
    }
    instability_guard(&v, t0 + steps as f64 * k)?;
    Ok(v)
}

/// One completed benchmark run.
#[derive(Clone, Debug)]
pub struct AdvectionRun {
    pub s: usize,
    pub q: usize,
    pub n: usize,
    pub k: f64,
    pub steps: usize,
    /// Max-norm error against the exact solution at the final time.
    pub final_error: f64,
    /// Wall-clock of the integration loop only.
    pub cpu_seconds: f64,
}

/// Solves the benchmark problem to `t = 1000` on `n` grid points with
/// AB order `q`. The step follows `cfl1 cfl2 k = h`, rounded down just enough
/// that an integer number of steps lands exactly on the final time.
pub fn solve_advection(closure: &OperatorClosure<f64>, q: usize, n: usize) -> Result<AdvectionRun> {
    let s = closure.params.s;
    let (cfl1, cfl2) = cfl_lookup(s, q)?;
    let scheme = ab_coefficients(q);
    let h_exact = rat(DOMAIN_LENGTH as i64, (n - 1) as i64);
    let op = closure.assemble(n, &h_exact)?;
    let h = op.h;

    let k_cfl = h / (cfl1 * cfl2);
    let steps = (FINAL_TIME / k_cfl).ceil() as usize;
    let k = FINAL_TIME / steps as f64;

    let start = Instant::now();
    let v = integrate_advection(&op, &scheme, k, 0.0, steps, true)?;
    let cpu_seconds = start.elapsed().as_secs_f64();

    let final_error = v
        .iter()
        .enumerate()
        .map(|(i, vi)| (vi - exact_solution(i as f64 * h, FINAL_TIME)).abs())
        .fold(0.0f64, f64::max);

    Ok(AdvectionRun {
        s,
        q,
        n,
        k,
        steps,
        final_error,
        cpu_seconds,
    })
}

/// One row of the benchmark sweep; divergent runs are recorded, not fatal.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub s: usize,
    pub q: usize,
    pub n: usize,
    pub final_error: f64,
    pub cpu_seconds: f64,
    pub diverged: bool,
}

/// Runs every `(s, q, n)` combination over the given grid sizes using the
/// supplied optimized closures. Runs execute in parallel; each run's
/// integration loop stays single-threaded so recorded times are honest.
pub fn benchmark_sweep_with(
    closures: &[(usize, OperatorClosure<f64>)],
    grid_sizes: &[usize],
) -> Vec<SweepRow> {
    let mut combos = Vec::new();
    for (s, closure) in closures {
        for &q in &AB_ORDERS {
            for &n in grid_sizes {
                combos.push((*s, closure, q, n));
            }
        }
    }
    par::map_indexed(combos.len(), |i| {
        let (s, closure, q, n) = combos[i];
        match solve_advection(closure, q, n) {
            Ok(run) => SweepRow {
                s,
                q,
                n,
                final_error: run.final_error,
                cpu_seconds: run.cpu_seconds,
                diverged: false,
            },
            Err(_) => SweepRow {
                s,
                q,
                n,
                final_error: f64::INFINITY,
                cpu_seconds: 0.0,
                diverged: true,
            },
        }
    })
}

/// Builds all six benchmark operators and sweeps them over `grid_sizes`
/// (the full tabulated sizes when empty).
pub fn benchmark_sweep(grid_sizes: &[usize]) -> Result<Vec<SweepRow>> {
    let sizes: Vec<usize> = if grid_sizes.is_empty() {
        SWEEP_GRID_SIZES.to_vec()
    } else {
        grid_sizes.to_vec()
    };
    let closures: Vec<(usize, OperatorClosure<f64>)> = (2..=7)
        .map(|s| benchmark_closure(s).map(|c| (s, c)))
        .collect::<Result<_>>()?;
    Ok(benchmark_sweep_with(&closures, &sizes))
}

/// Max-norm error of the discrete derivative of `exp` on `[0, 1]`.
pub fn derivative_error(op: &AssembledOperator<f64>, interior_only: bool) -> f64 {
    let n = op.n();
    let r = op.params.r;
    let h = op.h;
    let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).exp()).collect();
    let mut out = vec![0.0; n];
    op.apply(&f, &mut out);
    let range = if interior_only { r..n - r } else { 0..n };
    range.map(|i| (out[i] - f[i]).abs()).fold(0.0f64, f64::max)
}

/// Derivative convergence study on `[0, 1]` for `f(x) = exp(x)`.
#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub grid_sizes: Vec<usize>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log n`, negated.
    pub fitted_order: f64,
}

pub fn derivative_convergence(
    closure: &OperatorClosure<f64>,
    grid_sizes: &[usize],
) -> Result<ConvergenceStudy> {
    let mut errors = Vec::with_capacity(grid_sizes.len());
    for &n in grid_sizes {
        let op = closure.assemble(n, &rat(1, (n - 1) as i64))?;
        errors.push(derivative_error(&op, false));
    }
    let fitted_order = -log_log_slope(grid_sizes, &errors);
    Ok(ConvergenceStudy {
        grid_sizes: grid_sizes.to_vec(),
        errors,
        fitted_order,
    })
}

/// Least-squares slope of `ln y` versus `ln x`.
pub fn log_log_slope(xs: &[usize], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let m = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|&x| (x as f64).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Exact-solve check used by tests: verifies the order conditions
/// `sum_j beta_j (-j)^m = 1/(m+1)` for `m < q`.
pub fn ab_order_conditions_hold(scheme: &AbScheme) -> bool {
    let q = scheme.q;
    for m in 0..q {
        let mut acc = Rational::zero();
        for (j, b) in scheme.beta.iter().enumerate() {
            // (-j)^m exactly; 0^0 = 1
            let mut p = Rational::one();
            for _ in 0..m {
                p *= rat_int(-(j as i64));
            }
            acc += b * p;
        }
        if acc != rat(1, (m + 1) as i64) {
            return false;
        }
    }
    true
}

/// Independent oracle for the AB coefficients: solve the order conditions as
/// a linear system instead of integrating Lagrange polynomials.
pub fn ab_coefficients_from_order_conditions(q: usize) -> AbScheme {
    let a = RationalMatrix::from_fn(q, q, |m, j| {
        let mut p = Rational::one();
        for _ in 0..m {
            p *= rat_int(-(j as i64));
        }
        p
    });
    let b: Vec<Rational> = (0..q).map(|m| rat(1, (m + 1) as i64)).collect();
    let sol = solve_affine(&a, &b)
        .expect("square system")
        .expect("order conditions are nonsingular");
    AbScheme {
        q,
        beta: sol.particular,
    }
}
