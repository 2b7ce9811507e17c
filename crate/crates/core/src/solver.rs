//! Bracketed scalar root finding and the minimum-compressed-size solve.
//!
//! Bisection with secant acceleration: a bisection step at least every other
//! iteration guarantees the bracket halves, the secant step gives fast local
//! convergence. No randomness anywhere; identical inputs give identical roots.

use thiserror::Error;

use crate::params::{DerivedConstants, SystemParams};
use crate::scalar::{cast, to_f64, Real};

/// Default relative bracket-width tolerance.
pub const DEFAULT_TOL_REL: f64 = 1e-12;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: u32 = 200;

/// One root-finding problem: residual, bracket and stopping control.
pub struct RootSpec<'a, T> {
    pub residual: &'a dyn Fn(T) -> T,
    pub bracket_lo: T,
    pub bracket_hi: T,
    pub tol_rel: T,
    pub max_iter: u32,
}

impl<'a, T: Real> RootSpec<'a, T> {
    pub fn new(residual: &'a dyn Fn(T) -> T, bracket_lo: T, bracket_hi: T) -> Self {
        Self {
            residual,
            bracket_lo,
            bracket_hi,
            tol_rel: cast(DEFAULT_TOL_REL),
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_tol(mut self, tol_rel: T) -> Self {
        self.tol_rel = tol_rel;
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("no sign change over [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("no convergence after {iterations} iterations, bracket [{lo}, {hi}]")]
    MaxIterations { iterations: u32, lo: f64, hi: f64 },
    #[error(
        "delay bound unmeetable: best achievable block time {min_time} s exceeds t_block = {t_block} s"
    )]
    DelayInfeasible { min_time: f64, t_block: f64 },
}

/// Find the root inside a sign-changing bracket.
pub fn solve_bracketed<T: Real>(spec: &RootSpec<'_, T>) -> Result<T, SolverError> {
    let f = spec.residual;
    let (mut lo, mut hi) = if spec.bracket_lo <= spec.bracket_hi {
        (spec.bracket_lo, spec.bracket_hi)
    } else {
        (spec.bracket_hi, spec.bracket_lo)
    };
    let mut f_lo = f(lo);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    let mut f_hi = f(hi);
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if (f_lo > T::zero()) == (f_hi > T::zero()) {
        return Err(SolverError::NoSignChange {
            lo: to_f64(lo),
            hi: to_f64(hi),
            f_lo: to_f64(f_lo),
            f_hi: to_f64(f_hi),
        });
    }

    let half = cast::<T>(0.5);
    for iter in 0..spec.max_iter {
        let width = hi - lo;
        let mid = lo + half * width;
        let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
        if width <= spec.tol_rel * scale || mid <= lo || mid >= hi {
            return Ok(mid.max(lo).min(hi));
        }

        // Secant through the bracket ends on even iterations, plain bisection
        // on odd ones so the bracket provably shrinks.
        let mut x = mid;
        if iter % 2 == 0 {
            let denom = f_hi - f_lo;
            if denom != T::zero() {
                let secant = (lo * f_hi - hi * f_lo) / denom;
                if secant > lo && secant < hi {
                    x = secant;
                }
            }
        }

        let f_x = f(x);
        if f_x == T::zero() {
            return Ok(x);
        }
        if (f_x > T::zero()) == (f_lo > T::zero()) {
            lo = x;
            f_lo = f_x;
        } else {
            hi = x;
            f_hi = f_x;
        }
    }
    Err(SolverError::MaxIterations {
        iterations: spec.max_iter,
        lo: to_f64(lo),
        hi: to_f64(hi),
    })
}

/// Grow a bracket geometrically around a positive initial guess until the
/// residual changes sign; reports `NoSignChange` after 64 doublings.
pub fn expand_bracket<T: Real>(residual: &dyn Fn(T) -> T, guess: T) -> Result<(T, T), SolverError> {
    assert!(
        guess.is_finite() && guess > T::zero(),
        "bracket expansion needs a finite positive guess"
    );
    let two = cast::<T>(2.0);
    let mut lo = guess;
    let mut hi = guess;
    let f_guess = residual(guess);
    if f_guess == T::zero() {
        return Ok((guess, guess));
    }
    for _ in 0..64 {
        lo = lo / two;
        hi = hi * two;
        let f_lo = residual(lo);
        let f_hi = residual(hi);
        if (f_lo > T::zero()) != (f_guess > T::zero()) {
            return Ok((lo, guess));
        }
        if (f_hi > T::zero()) != (f_guess > T::zero()) {
            return Ok((guess, hi));
        }
    }
    Err(SolverError::NoSignChange {
        lo: to_f64(lo),
        hi: to_f64(hi),
        f_lo: to_f64(residual(lo)),
        f_hi: to_f64(residual(hi)),
    })
}

/// Total block time at the top constellation size, as a function of the
/// compressed size `x`.
fn block_time_at_max_rate<T: Real>(
    x: T,
    params: &SystemParams<T>,
    derived: &DerivedConstants<T>,
) -> T {
    let d = params.data_bits;
    let rate_term = params.t_s * T::LN_2() / derived.m_max.ln();
    params.tau * d * ((d / x).powf(params.beta) - T::one()) + x * rate_term
}

/// Smallest compressed size deliverable within the delay bound at the top
/// rate: the lower root of `t_cp(x) + t_tx(x, m_max) = t_block`.
///
/// The block time diverges as `x -> 0` (compression cost) and grows linearly
/// for large `x` (transmission cost), so it is convex with one interior
/// minimum; the smallest root is the lower bound on the compressed size.
/// With no compression-time cost (`tau * beta = 0`) there is no lower bound
/// and the function returns zero.
pub fn solve_d_min<T: Real>(
    params: &SystemParams<T>,
    derived: &DerivedConstants<T>,
) -> Result<T, SolverError> {
    let d = params.data_bits;
    let t = params.t_block;
    let rate_term = params.t_s * T::LN_2() / derived.m_max.ln();
    if params.tau * params.beta == T::zero() {
        return Ok(T::zero());
    }

    // Interior minimizer of the block time, clamped into (0, d].
    let x_tmin = (params.tau * params.beta / rate_term).powf((params.beta + T::one()).recip()) * d;
    let x_dom = x_tmin.min(d);
    let residual = |x: T| block_time_at_max_rate(x, params, derived) - t;
    let r_dom = residual(x_dom);
    if r_dom > T::zero() {
        return Err(SolverError::DelayInfeasible {
            min_time: to_f64(r_dom + t),
            t_block: to_f64(t),
        });
    }
    if r_dom == T::zero() {
        return Ok(x_dom);
    }

    // Walk left until the time exceeds the bound, then bisect.
    let half = cast::<T>(0.5);
    let mut lo = x_dom * half;
    let mut guard = 0;
    while residual(lo) <= T::zero() {
        lo = lo * half;
        guard += 1;
        if guard > 2000 || lo == T::zero() {
            return Err(SolverError::NoSignChange {
                lo: 0.0,
                hi: to_f64(x_dom),
                f_lo: to_f64(residual(lo)),
                f_hi: to_f64(r_dom),
            });
        }
    }
    let spec = RootSpec::new(&residual, lo, x_dom).with_tol(cast(1e-15));
    solve_bracketed(&spec)
}
