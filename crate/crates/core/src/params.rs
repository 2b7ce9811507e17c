//! System parameters and derived constants.
//!
//! Single source of truth for every physical and protocol constant. All
//! fields are SI base units (watts, seconds, metres, bits); unit conversion
//! happens once at the configuration boundary, never inside the math.

use thiserror::Error;

use crate::scalar::{cast, to_f64, Real};

/// Everything the models need to know about the node, link and constraints.
///
/// Fields keep the conventional symbol names of the energy/BER literature so
/// a config file maps one-to-one onto the struct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    /// Drain efficiency of the power amplifier, in (0, 1].
    pub mu: T,
    /// Scale of the exponential channel-gain distribution.
    pub varsigma: T,
    /// Compression (MCU active) power, W.
    pub p_cp: T,
    /// Frequency synthesizer power, W.
    pub p_syn: T,
    /// Filter power, W.
    pub p_fil: T,
    /// Mixer power, W.
    pub p_mix: T,
    /// Battery operating voltage, V.
    pub v_op: T,
    /// Battery charge capacity, A·s.
    pub b_cap: T,
    /// Symbol period, s.
    pub t_s: T,
    /// BER bound shape constant (exponent scale).
    pub omega1: T,
    /// BER bound shape constant (zero-SNR cap).
    pub omega2: T,
    /// Link distance, m.
    pub d: T,
    /// Noise power, W.
    pub sigma2: T,
    /// Raw (uncompressed) data size per block, bits.
    pub data_bits: T,
    /// Per-bit processing time of the MCU, s/bit.
    pub tau: T,
    /// Compression-algorithm cost exponent, > 0.
    pub beta: T,
    /// Target bit error rate, must satisfy `phi < omega2`.
    pub phi: T,
    /// Block duration = delay bound, s.
    pub t_block: T,
    /// Carrier wavelength, m.
    pub lambda: T,
    /// Path-loss exponent.
    pub alpha: T,
    /// Largest supported constellation is `2^l_max`.
    pub l_max: u32,
    /// Sensing time per block, s.
    pub t_sen: T,
    /// Sensing power, W.
    pub p_sen: T,
    /// Required probability of meeting the BER target (statistical-CSI mode).
    pub vartheta: T,
    /// Channel feedback budget, bits (quantized-CSI mode).
    pub b_feedback: u32,
    /// Battery current-draw cap expressed as a transmit-power limit, W.
    pub p_t_max: T,
}

/// Constants computed once from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants<T> {
    /// Free-space attenuation factor `(lambda / 4 pi)^2`.
    pub kappa: T,
    /// Transmit-chain circuit power `p_fil + p_mix + p_syn`, W.
    pub p_o: T,
    /// BER-inversion constant `sigma2 d^alpha ln(phi/omega2) / (omega1 kappa)`.
    /// Strictly negative whenever `phi < omega2`.
    pub omega_cap: T,
    /// Largest constellation size `2^l_max`.
    pub m_max: T,
    /// Gain threshold `-varsigma ln(vartheta)` of the gated statistical mode.
    pub theta_gate: T,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("parameter `{name}` = {value} is outside its domain: {constraint}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("phi = {phi} must be strictly below omega2 = {omega2} (BER bound not invertible)")]
    BerTargetAboveCap { phi: f64, omega2: f64 },
}

/// dBm -> W. `0 dBm = 1 mW` by definition.
#[inline]
pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    cast::<T>(10.0).powf(dbm / cast(10.0)) * cast(1e-3)
}

/// W -> dBm, inverse of [`dbm_to_watts`].
#[inline]
pub fn watts_to_dbm<T: Real>(watts: T) -> T {
    cast::<T>(10.0) * (watts / cast(1e-3)).log10()
}

/// Baseline parameter set: the published table values in SI units plus the
/// declared defaults for the constants the table omits (wavelength, path-loss
/// exponent, constellation cap, sensing cost, power cap, feedback budget).
pub fn table_defaults<T: Real>() -> SystemParams<T> {
    SystemParams {
        mu: cast(0.35),
        varsigma: cast(1.0),
        p_cp: cast(24e-3),
        p_syn: cast(50e-3),
        p_fil: cast(2.5e-3),
        p_mix: cast(30.3e-3),
        v_op: cast(3.0),
        b_cap: cast(9000.0),
        t_s: cast(16e-6),
        omega1: cast(1.5),
        omega2: cast(0.2),
        d: cast(20.0),
        sigma2: dbm_to_watts(cast(-174.0)),
        data_bits: cast(20_000.0),
        tau: cast(0.35e-9),
        beta: cast(5.0),
        phi: cast(1e-3),
        t_block: cast(50e-3),
        lambda: cast(0.125),
        alpha: cast(3.5),
        l_max: 10,
        t_sen: cast(0.0),
        p_sen: cast(0.0),
        vartheta: cast(0.9),
        b_feedback: 6,
        p_t_max: cast(0.1),
    }
}

impl<T: Real> SystemParams<T> {
    /// Check every domain invariant. Call after construction or mutation.
    pub fn validate(&self) -> Result<(), ParamsError> {
        fn check<T: Real>(
            ok: bool,
            name: &'static str,
            value: T,
            constraint: &'static str,
        ) -> Result<(), ParamsError> {
            if ok {
                Ok(())
            } else {
                Err(ParamsError::OutOfDomain {
                    name,
                    value: to_f64(value),
                    constraint,
                })
            }
        }

        let zero = T::zero();
        let one = T::one();

        check(
            self.mu > zero && self.mu <= one,
            "mu",
            self.mu,
            "mu in (0, 1]",
        )?;
        check(
            self.varsigma > zero,
            "varsigma",
            self.varsigma,
            "varsigma > 0",
        )?;
        for (name, v) in [
            ("p_cp", self.p_cp),
            ("p_syn", self.p_syn),
            ("p_fil", self.p_fil),
            ("p_mix", self.p_mix),
            ("t_sen", self.t_sen),
            ("p_sen", self.p_sen),
            ("tau", self.tau),
            ("p_t_max", self.p_t_max),
        ] {
            check(v >= zero && !v.is_nan(), name, v, ">= 0")?;
        }
        for (name, v) in [
            ("v_op", self.v_op),
            ("b_cap", self.b_cap),
            ("t_s", self.t_s),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("d", self.d),
            ("sigma2", self.sigma2),
            ("data_bits", self.data_bits),
            ("beta", self.beta),
            ("phi", self.phi),
            ("t_block", self.t_block),
            ("lambda", self.lambda),
            ("alpha", self.alpha),
        ] {
            check(v > zero && v.is_finite(), name, v, "> 0 and finite")?;
        }
        check(
            self.vartheta > zero && self.vartheta < one,
            "vartheta",
            self.vartheta,
            "vartheta in (0, 1)",
        )?;
        if self.l_max < 1 {
            return Err(ParamsError::OutOfDomain {
                name: "l_max",
                value: self.l_max as f64,
                constraint: ">= 1",
            });
        }
        if self.b_feedback < 1 {
            return Err(ParamsError::OutOfDomain {
                name: "b_feedback",
                value: self.b_feedback as f64,
                constraint: ">= 1",
            });
        }
        if self.phi >= self.omega2 {
            return Err(ParamsError::BerTargetAboveCap {
                phi: to_f64(self.phi),
                omega2: to_f64(self.omega2),
            });
        }
        Ok(())
    }
}

/// Compute [`DerivedConstants`]. Pure: equal inputs give identical outputs.
pub fn derive<T: Real>(params: &SystemParams<T>) -> Result<DerivedConstants<T>, ParamsError> {
    params.validate()?;
    let four_pi = cast::<T>(4.0) * T::PI();
    let kappa = (params.lambda / four_pi).powi(2);
    let p_o = params.p_fil + params.p_mix + params.p_syn;
    let omega_cap = params.sigma2 * params.d.powf(params.alpha) * (params.phi / params.omega2).ln()
        / (params.omega1 * kappa);
    let m_max = cast::<T>(2.0).powi(params.l_max as i32);
    let theta_gate = -params.varsigma * params.vartheta.ln();
    Ok(DerivedConstants {
        kappa,
        p_o,
        omega_cap,
        m_max,
        theta_gate,
    })
}
