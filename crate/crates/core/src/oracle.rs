//! Independent brute-force minimizer over the (constellation, compressed
//! size) grid with the BER-tight power substituted per mode.
//!
//! This is the ground truth the closed-form solves are certified against: it
//! composes the raw energy model cell by cell and never touches the
//! stationarity formulas in `policy`.

use thiserror::Error;

use crate::energy::{self, DELAY_TOL_S};
use crate::params::{DerivedConstants, SystemParams};
use crate::policy::{prop1_power, prop2_power, PolicyError};
use crate::scalar::{cast, Real};
use crate::solver::solve_d_min;

/// Grid axis layout. Spacing applies to the constellation axis; compressed
/// sizes are always linear, which is where the objective curves slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub m_points: usize,
    pub dcp_points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn new(m_points: usize, dcp_points: usize) -> Self {
        assert!(
            m_points >= 2 && dcp_points >= 2,
            "grids need at least 2 points per axis"
        );
        GridSpec {
            m_points,
            dcp_points,
            spacing: Spacing::Log,
        }
    }
}

/// Feasible grid argmin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMinimum<T> {
    pub m: T,
    pub d_cp: T,
    pub psi: T,
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("no feasible grid point (every candidate busts the delay or power bound)")]
    EmptyFeasibleSet,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

fn minimize<T: Real, F: Fn(T) -> Result<T, PolicyError>>(
    params: &SystemParams<T>,
    derived: &DerivedConstants<T>,
    grid: &GridSpec,
    power_of_m: F,
) -> Result<GridMinimum<T>, OracleError> {
    let d_min = solve_d_min(params, derived).map_err(PolicyError::from)?;
    let d_lo = if d_min > T::zero() {
        d_min
    } else {
        // Zero-cost compression leaves no lower bound; keep the grid away
        // from the d_cp = 0 singularity of the energy model.
        params.data_bits * cast(1e-6)
    };
    let d_hi = params.data_bits;

    // Precompute the compression leg once; it does not depend on m.
    let nd = grid.dcp_points;
    let mut d_vals = Vec::with_capacity(nd);
    let mut t_cp = Vec::with_capacity(nd);
    let mut e_cp = Vec::with_capacity(nd);
    for j in 0..nd {
        let frac = cast::<T>(j as f64 / (nd - 1) as f64);
        let d = d_lo + (d_hi - d_lo) * frac;
        let t = energy::compression_time(params.data_bits, d, params.tau, params.beta)
            .expect("grid point inside the valid size range");
        d_vals.push(d);
        t_cp.push(t);
        e_cp.push(t * params.p_cp);
    }

    let m_lo = cast::<T>(2.0);
    let m_hi = derived.m_max;
    let nm = grid.m_points;
    let tol = cast::<T>(DELAY_TOL_S);
    let mut best: Option<GridMinimum<T>> = None;

    for i in 0..nm {
        let frac = cast::<T>(i as f64 / (nm - 1) as f64);
        let m = match grid.spacing {
            Spacing::Linear => m_lo + (m_hi - m_lo) * frac,
            Spacing::Log => (m_lo.ln() + (m_hi.ln() - m_lo.ln()) * frac).exp(),
        };
        let p_t = power_of_m(m)?;
        if p_t > params.p_t_max {
            continue;
        }
        let p_tx = energy::tx_power_total(p_t, m, derived.p_o, params.mu);
        let rate = energy::tx_rate(m, params.t_s);
        for j in 0..nd {
            let t_tx = d_vals[j] / rate;
            if t_cp[j] + t_tx > params.t_block + tol {
                continue;
            }
            let psi = e_cp[j] + t_tx * p_tx;
            if best.is_none_or(|b| psi < b.psi) {
                best = Some(GridMinimum {
                    m,
                    d_cp: d_vals[j],
                    psi,
                });
            }
        }
    }
    best.ok_or(OracleError::EmptyFeasibleSet)
}

/// Exhaustive feasible minimum of the block energy with the instantaneous
/// BER-tight power at gain `h2`.
pub fn grid_minimize_s1<T: Real>(
    h2: T,
    params: &SystemParams<T>,
    derived: &DerivedConstants<T>,
    grid: &GridSpec,
) -> Result<GridMinimum<T>, OracleError> {
    minimize(params, derived, grid, |m| prop1_power(m, h2, derived))
}

/// Exhaustive feasible minimum with the statistical (probability-target)
/// power rule.
pub fn grid_minimize_s3<T: Real>(
    params: &SystemParams<T>,
    derived: &DerivedConstants<T>,
    grid: &GridSpec,
) -> Result<GridMinimum<T>, OracleError> {
    minimize(params, derived, grid, |m| {
        Ok(prop2_power(m, params, derived))
    })
}
