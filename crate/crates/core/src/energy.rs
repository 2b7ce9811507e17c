//! Timing, power, energy, BER and lifetime models.
//!
//! Everything here is a pure function of its arguments; the per-block energy
//! `psi = t_cp * p_cp + t_tx * p_tx` is the quantity every policy minimizes.

use thiserror::Error;

use crate::params::{DerivedConstants, SystemParams};
use crate::scalar::{cast, to_f64, Real};

/// Absolute slack applied to the delay-feasibility comparison, seconds.
/// Absorbs root-solver tolerance so boundary policies classify as feasible.
pub const DELAY_TOL_S: f64 = 1e-12;

/// Evaluation of one block under a fixed decision triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOutcome<T> {
    /// Compression time, s.
    pub t_cp: T,
    /// Transmission time, s.
    pub t_tx: T,
    /// Total radio power while transmitting, W.
    pub p_tx: T,
    /// Block energy `t_cp * p_cp + t_tx * p_tx`, J.
    pub psi: T,
    /// BER bound at the supplied channel gain.
    pub ber_bound: T,
    /// Whether `t_cp + t_tx <= t_block + DELAY_TOL_S`.
    pub feasible_delay: bool,
    /// Whether the transmit power respects the battery draw cap.
    pub feasible_power: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("compressed size {d_cp} bits outside (0, {data_bits}]")]
    CompressedSizeOutOfRange { d_cp: f64, data_bits: f64 },
    #[error("average power is zero; lifetime undefined")]
    ZeroAveragePower,
    #[error("expected block energy must be >= 0, got {0}")]
    NegativeEnergy(f64),
}

#[inline]
fn compression_time_raw<T: Real>(data_bits: T, d_cp: T, tau: T, beta: T) -> T {
    tau * data_bits * ((data_bits / d_cp).powf(beta) - T::one())
}

/// Time to compress `data_bits` down to `d_cp` bits.
///
/// Strictly decreasing in `d_cp`, zero at `d_cp = data_bits`.
pub fn compression_time<T: Real>(data_bits: T, d_cp: T, tau: T, beta: T) -> Result<T, EnergyError> {
    if d_cp <= T::zero() || d_cp > data_bits {
        return Err(EnergyError::CompressedSizeOutOfRange {
            d_cp: to_f64(d_cp),
            data_bits: to_f64(data_bits),
        });
    }
    Ok(compression_time_raw(data_bits, d_cp, tau, beta))
}

/// Per-bit processing time of a single-cycle MCU with `reg_bits`-wide registers.
pub fn tau_from_mcu<T: Real>(clock_hz: T, reg_bits: u32) -> T {
    (clock_hz * cast::<T>(reg_bits as f64)).recip()
}

/// Link rate of an `m`-ary constellation at symbol period `t_s`, bits/s.
#[inline]
pub fn tx_rate<T: Real>(m: T, t_s: T) -> T {
    m.log2() / t_s
}

/// Time to send `d_cp` bits at constellation size `m`.
#[inline]
pub fn tx_time<T: Real>(d_cp: T, m: T, t_s: T) -> T {
    d_cp / tx_rate(m, t_s)
}

/// Peak-to-average power ratio of a square constellation of size `m`.
///
/// `3 (sqrt m - 1) / (sqrt m + 1)`; increasing, supremum 3.
#[inline]
pub fn par<T: Real>(m: T) -> T {
    let root = m.sqrt();
    cast::<T>(3.0) * (root - T::one()) / (root + T::one())
}

/// Total radio power: amplifier chain `(par/mu) p_t` plus circuit power.
#[inline]
pub fn tx_power_total<T: Real>(p_t: T, m: T, p_o: T, mu: T) -> T {
    par(m) / mu * p_t + p_o
}

/// Received SNR for transmit power `p_t` and channel power gain `h2`.
#[inline]
pub fn snr<T: Real>(p_t: T, h2: T, params: &SystemParams<T>, derived: &DerivedConstants<T>) -> T {
    derived.kappa * p_t * h2 / (params.sigma2 * params.d.powf(params.alpha))
}

/// Exponential BER upper bound for an `m`-ary constellation at SNR `gamma`.
#[inline]
pub fn ber_bound<T: Real>(m: T, gamma: T, omega1: T, omega2: T) -> T {
    omega2 * (-omega1 * gamma / (m - T::one())).exp()
}

/// Assemble the full per-block outcome for decision triple `(m, d_cp, p_t)`.
///
/// `psi` and both feasibility flags are independent of `h2`; the gain enters
/// only the reported BER bound. Callers must pass `m >= 2`, `p_t >= 0` and
/// `d_cp` in `(0, data_bits]`.
pub fn psi<T: Real>(
    m: T,
    d_cp: T,
    p_t: T,
    h2: T,
    params: &SystemParams<T>,
    derived: &DerivedConstants<T>,
) -> BlockOutcome<T> {
    debug_assert!(m >= cast(2.0) && p_t >= T::zero());
    debug_assert!(d_cp > T::zero() && d_cp <= params.data_bits);
    let t_cp = compression_time_raw(params.data_bits, d_cp, params.tau, params.beta);
    let t_tx = tx_time(d_cp, m, params.t_s);
    let p_tx = tx_power_total(p_t, m, derived.p_o, params.mu);
    BlockOutcome {
        t_cp,
        t_tx,
        p_tx,
        psi: t_cp * params.p_cp + t_tx * p_tx,
        ber_bound: ber_bound(
            m,
            snr(p_t, h2, params, derived),
            params.omega1,
            params.omega2,
        ),
        feasible_delay: t_cp + t_tx <= params.t_block + cast(DELAY_TOL_S),
        feasible_power: p_t <= params.p_t_max,
    }
}

/// Node lifetime for a given expected per-block energy, s.
pub fn lifetime<T: Real>(expected_psi: T, params: &SystemParams<T>) -> Result<T, EnergyError> {
    if expected_psi < T::zero() {
        return Err(EnergyError::NegativeEnergy(to_f64(expected_psi)));
    }
    let p_avg = (params.t_sen * params.p_sen + expected_psi) / params.t_block;
    if p_avg <= T::zero() {
        return Err(EnergyError::ZeroAveragePower);
    }
    Ok(params.b_cap * params.v_op / p_avg)
}
