//! Plain-text configuration: TOML `key = value` entries in a `[params]` and a
//! `[sim]` section. Parameter keys spell their units (`p_syn_mw`,
//! `sigma2_dbm`, `t_block_ms`); conversion to SI happens here and nowhere
//! else. Every key is optional and falls back to the built-in defaults.

use comprate_core::params::{dbm_to_watts, table_defaults};
use comprate_core::SystemParams64;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub sim: SimSection,
}

/// `[params]` section. Units are encoded in the key names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub mu: Option<f64>,
    pub varsigma: Option<f64>,
    pub p_cp_mw: Option<f64>,
    pub p_syn_mw: Option<f64>,
    pub p_fil_mw: Option<f64>,
    pub p_mix_mw: Option<f64>,
    pub v_op_v: Option<f64>,
    pub b_cap_as: Option<f64>,
    pub t_s_us: Option<f64>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    pub d_m: Option<f64>,
    pub sigma2_dbm: Option<f64>,
    pub data_kb: Option<f64>,
    pub tau_ns_per_bit: Option<f64>,
    pub beta: Option<f64>,
    pub phi: Option<f64>,
    pub t_block_ms: Option<f64>,
    pub lambda_m: Option<f64>,
    pub alpha: Option<f64>,
    pub l_max: Option<u32>,
    pub t_sen_ms: Option<f64>,
    pub p_sen_mw: Option<f64>,
    pub vartheta: Option<f64>,
    pub b_feedback: Option<u32>,
    pub p_t_max_w: Option<f64>,
}

/// `[sim]` section: run control shared by the subcommands.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub scenario: Option<String>,
    pub blocks: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub sweep: Option<String>,
    pub grid_points: Option<usize>,
    pub gain: Option<f64>,
    pub interval: Option<usize>,
    pub threads: Option<usize>,
}

impl ParamsSection {
    /// Built-in defaults overridden by whatever keys are present, converted
    /// to SI: mW -> W, us/ms/ns -> s, kb -> bits, dBm -> W.
    pub fn resolve(&self) -> SystemParams64 {
        let mut p = table_defaults::<f64>();
        macro_rules! set {
            ($field:ident, $key:ident, $conv:expr) => {
                if let Some(v) = self.$key {
                    p.$field = $conv(v);
                }
            };
        }
        let id = |v: f64| v;
        set!(mu, mu, id);
        set!(varsigma, varsigma, id);
        set!(p_cp, p_cp_mw, |v: f64| v * 1e-3);
        set!(p_syn, p_syn_mw, |v: f64| v * 1e-3);
        set!(p_fil, p_fil_mw, |v: f64| v * 1e-3);
        set!(p_mix, p_mix_mw, |v: f64| v * 1e-3);
        set!(v_op, v_op_v, id);
        set!(b_cap, b_cap_as, id);
        set!(t_s, t_s_us, |v: f64| v * 1e-6);
        set!(omega1, omega1, id);
        set!(omega2, omega2, id);
        set!(d, d_m, id);
        set!(sigma2, sigma2_dbm, dbm_to_watts);
        set!(data_bits, data_kb, |v: f64| v * 1000.0);
        set!(tau, tau_ns_per_bit, |v: f64| v * 1e-9);
        set!(beta, beta, id);
        set!(phi, phi, id);
        set!(t_block, t_block_ms, |v: f64| v * 1e-3);
        set!(lambda, lambda_m, id);
        set!(alpha, alpha, id);
        if let Some(v) = self.l_max {
            p.l_max = v;
        }
        set!(t_sen, t_sen_ms, |v: f64| v * 1e-3);
        set!(p_sen, p_sen_mw, |v: f64| v * 1e-3);
        set!(vartheta, vartheta, id);
        if let Some(v) = self.b_feedback {
            p.b_feedback = v;
        }
        set!(p_t_max, p_t_max_w, id);
        p
    }
}
