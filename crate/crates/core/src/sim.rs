//! Monte Carlo block simulator, exact quantized expectations, constraint
//! sweeps and the deterministic CSV surface.
//!
//! Reproducibility contract: a sweep row's stream is keyed by
//! `seed ^ row_index`, accumulation order is fixed, and rows are collected in
//! index order, so output bytes are identical across runs and worker counts.

use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{build_quantizer, quantize, GainSampler};
use crate::energy::{self, tx_rate};
use crate::params::{derive, ParamsError, SystemParams};
use crate::policy::{
    baseline_solve, scenario2_table, scenario3_solve, solve_adaptive_with_dmin, threshold_gate,
    Policy, PolicyError,
};
use crate::scalar::{cast, to_f64, Real};
use crate::solver::{solve_d_min, SolverError};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    S1,
    S2,
    S3,
    S3Gated,
    Baseline,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::S1 => "s1",
            Scenario::S2 => "s2",
            Scenario::S3 => "s3",
            Scenario::S3Gated => "s3_gated",
            Scenario::Baseline => "baseline",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "s1" => Ok(Scenario::S1),
            "s2" => Ok(Scenario::S2),
            "s3" => Ok(Scenario::S3),
            "s3_gated" => Ok(Scenario::S3Gated),
            "baseline" => Ok(Scenario::Baseline),
            other => Err(format!(
                "unknown scenario `{other}` (expected s1, s2, s3, s3_gated or baseline)"
            )),
        }
    }
}

/// Sweepable constraint. Values are in config units: `phi` and `vartheta`
/// absolute, `t_block` in milliseconds, `b_feedback` in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Phi,
    TBlock,
    BFeedback,
    Vartheta,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::Phi => "phi",
            SweepVariable::TBlock => "t_block",
            SweepVariable::BFeedback => "b_feedback",
            SweepVariable::Vartheta => "vartheta",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "phi" => Ok(SweepVariable::Phi),
            "t_block" => Ok(SweepVariable::TBlock),
            "b_feedback" => Ok(SweepVariable::BFeedback),
            "vartheta" => Ok(SweepVariable::Vartheta),
            other => Err(format!(
                "unknown sweep variable `{other}` (expected phi, t_block, b_feedback or vartheta)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// One simulation request: scenario, stream length, seed, an optional
/// constraint sweep and where the CSV should land (consumed by the CLI;
/// in-memory callers may leave it empty).
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub blocks: u64,
    pub seed: u64,
    pub sweep: Option<SweepSpec>,
    pub output_path: Option<String>,
}

impl SimConfig {
    pub fn new(scenario: Scenario, blocks: u64, seed: u64) -> Self {
        SimConfig {
            scenario,
            blocks,
            seed,
            sweep: None,
            output_path: None,
        }
    }

    pub fn with_sweep(mut self, sweep: SweepSpec) -> Self {
        self.sweep = Some(sweep);
        self
    }
}

/// One simulated operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRow<T> {
    pub swept_value: f64,
    pub e_psi: T,
    /// Standard error of the block-energy mean (0 for the fixed policy).
    pub se_psi: T,
    pub lifetime_s: T,
    pub lifetime_days: T,
    pub mean_dcp_ratio: T,
    pub mean_rate_bps: T,
    pub mean_m: T,
    pub outage_frac: T,
    /// Blocks decided on the unconstrained / delay-active / clamped branch.
    pub branch_counts: [u64; 3],
    /// False when the scenario is infeasible at this operating point; the
    /// statistics columns are NaN in that case.
    pub feasible: bool,
}

impl<T: Real> SimRow<T> {
    fn infeasible(swept_value: f64) -> Self {
        SimRow {
            swept_value,
            e_psi: T::nan(),
            se_psi: T::nan(),
            lifetime_s: T::nan(),
            lifetime_days: T::nan(),
            mean_dcp_ratio: T::nan(),
            mean_rate_bps: T::nan(),
            mean_m: T::nan(),
            outage_frac: T::nan(),
            branch_counts: [0; 3],
            feasible: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    /// Swept variable name, `"none"` for a single point.
    pub variable: String,
    pub rows: Vec<SimRow<T>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("policy solve failed: {0}")]
    Policy(PolicyError),
    #[error("quantized feedback needs 1..=16 bits, got {0}")]
    FeedbackBits(u32),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("sweep requested but the configuration has no sweep spec")]
    MissingSweep,
}

/// Parse `lo:hi:n` (linear) or `lo:hi:nL` (log-spaced) into explicit values.
pub fn parse_sweep_values(spec: &str) -> Result<Vec<f64>, SimError> {
    let bad = |msg: &str| SimError::InvalidSweep(format!("`{spec}`: {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected lo:hi:n or lo:hi:nL"));
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad("bad lower bound"))?;
    let hi: f64 = parts[1].parse().map_err(|_| bad("bad upper bound"))?;
    let (count_str, log) = match parts[2].strip_suffix(['L', 'l']) {
        Some(rest) => (rest, true),
        None => (parts[2], false),
    };
    let n: usize = count_str.parse().map_err(|_| bad("bad point count"))?;
    if n == 0 {
        return Err(bad("point count must be >= 1"));
    }
    if log && (lo <= 0.0 || hi <= 0.0) {
        return Err(bad("log spacing needs positive bounds"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let f = i as f64 / (n - 1) as f64;
        values.push(if log {
            (lo.ln() + (hi.ln() - lo.ln()) * f).exp()
        } else {
            lo + (hi - lo) * f
        });
    }
    Ok(values)
}

/// Parse `variable=lo:hi:n[L]`.
pub fn parse_sweep(spec: &str) -> Result<SweepSpec, SimError> {
    let (var, range) = spec
        .split_once('=')
        .ok_or_else(|| SimError::InvalidSweep(format!("`{spec}`: expected variable=lo:hi:n")))?;
    let variable = SweepVariable::from_str(var).map_err(SimError::InvalidSweep)?;
    Ok(SweepSpec {
        variable,
        values: parse_sweep_values(range)?,
    })
}

/// Overwrite the swept constraint in a parameter set.
pub fn apply_sweep_value<T: Real>(
    params: &mut SystemParams<T>,
    variable: SweepVariable,
    value: f64,
) {
    match variable {
        SweepVariable::Phi => params.phi = cast(value),
        SweepVariable::TBlock => params.t_block = cast(value * 1e-3),
        SweepVariable::BFeedback => params.b_feedback = value.round().max(1.0) as u32,
        SweepVariable::Vartheta => params.vartheta = cast(value),
    }
}

/// Raised when an error means "this operating point has no policy" rather
/// than "the computation broke".
fn is_infeasible(e: &PolicyError) -> bool {
    matches!(
        e,
        PolicyError::DelayInfeasible { .. } | PolicyError::BaselineInfeasible { .. }
    )
}

struct Accumulator<T> {
    blocks: u64,
    sum_psi: T,
    sum_psi_sq: T,
    sum_dcp_ratio: T,
    sum_rate: T,
    sum_m: T,
    outage: u64,
    branch_counts: [u64; 3],
}

impl<T: Real> Accumulator<T> {
    fn new() -> Self {
        Accumulator {
            blocks: 0,
            sum_psi: T::zero(),
            sum_psi_sq: T::zero(),
            sum_dcp_ratio: T::zero(),
            sum_rate: T::zero(),
            sum_m: T::zero(),
            outage: 0,
            branch_counts: [0; 3],
        }
    }

    /// An outage block consumes nothing: the data is dropped before any
    /// compression or transmission happens.
    fn outage(&mut self) {
        self.blocks += 1;
        self.outage += 1;
    }

    fn transmit(&mut self, policy: &Policy<T>, psi: T, params: &SystemParams<T>) {
        self.blocks += 1;
        self.sum_psi = self.sum_psi + psi;
        self.sum_psi_sq = self.sum_psi_sq + psi * psi;
        self.sum_dcp_ratio = self.sum_dcp_ratio + policy.d_cp / params.data_bits;
        self.sum_rate = self.sum_rate + tx_rate(policy.m_real, params.t_s);
        self.sum_m = self.sum_m + policy.m_real;
        self.branch_counts[policy.branch.index()] += 1;
    }

    fn finish(self, params: &SystemParams<T>) -> SimRow<T> {
        let n = cast::<T>(self.blocks as f64);
        let e_psi = self.sum_psi / n;
        let var = (self.sum_psi_sq / n - e_psi * e_psi).max(T::zero());
        let se_psi = (var / n).sqrt();
        let transmitted = self.blocks - self.outage;
        let (mean_dcp_ratio, mean_rate_bps, mean_m) = if transmitted > 0 {
            let tn = cast::<T>(transmitted as f64);
            (self.sum_dcp_ratio / tn, self.sum_rate / tn, self.sum_m / tn)
        } else {
            (T::zero(), T::zero(), T::zero())
        };
        let lifetime_s = match energy::lifetime(e_psi, params) {
            Ok(v) => v,
            Err(_) => T::infinity(),
        };
        SimRow {
            swept_value: f64::NAN,
            e_psi,
            se_psi,
            lifetime_s,
            lifetime_days: lifetime_s / cast(SECONDS_PER_DAY),
            mean_dcp_ratio,
            mean_rate_bps,
            mean_m,
            outage_frac: cast::<T>(self.outage as f64) / n,
            branch_counts: self.branch_counts,
            feasible: true,
        }
    }
}

/// Simulate one operating point. Scenario infeasibility (the delay bound is
/// unmeetable) comes back as a row with `feasible = false`, not an error.
pub fn simulate_point<T: Real>(
    scenario: Scenario,
    params: &SystemParams<T>,
    blocks: u64,
    seed: u64,
) -> Result<SimRow<T>, SimError> {
    assert!(blocks >= 1, "simulate needs at least one block");
    let derived = derive(params)?;

    // The fixed statistical policy needs no sampling: every block is the same.
    if scenario == Scenario::S3 {
        return match scenario3_solve(params, &derived) {
            Ok(policy) => {
                let mut acc = Accumulator::new();
                if policy.feasible_power {
                    let psi = policy.outcome(T::one(), params, &derived).psi;
                    acc.transmit(&policy, psi, params);
                } else {
                    acc.outage();
                }
                Ok(acc.finish(params))
            }
            Err(e) if is_infeasible(&e) => Ok(SimRow::infeasible(f64::NAN)),
            Err(e) => Err(SimError::Policy(e)),
        };
    }

    // Per-block machinery shared by the adaptive scenarios.
    let d_min = match scenario {
        Scenario::Baseline => T::zero(),
        _ => match solve_d_min(params, &derived) {
            Ok(v) => v,
            Err(SolverError::DelayInfeasible { .. }) => return Ok(SimRow::infeasible(f64::NAN)),
            Err(e) => return Err(SimError::Policy(PolicyError::Solver(e))),
        },
    };
    let table = if scenario == Scenario::S2 {
        if !(1..=16).contains(&params.b_feedback) {
            return Err(SimError::FeedbackBits(params.b_feedback));
        }
        let q = build_quantizer(params.b_feedback, params.varsigma);
        match scenario2_table(params, &derived, &q) {
            Ok(t) => Some((q, t)),
            Err(e) if is_infeasible(&e) => return Ok(SimRow::infeasible(f64::NAN)),
            Err(e) => return Err(SimError::Policy(e)),
        }
    } else {
        None
    };
    if scenario == Scenario::Baseline {
        // Infeasibility is gain-independent: the bound dictates a rate the
        // constellation cap cannot supply.
        let z_raw = params.data_bits * params.t_s * T::LN_2() / params.t_block;
        if z_raw > derived.m_max.ln() {
            return Ok(SimRow::infeasible(f64::NAN));
        }
    }

    let mut sampler = GainSampler::new(seed, params.varsigma);
    let mut acc = Accumulator::new();
    for _ in 0..blocks {
        let h2 = sampler.sample();
        let decision: Option<Policy<T>> = match scenario {
            Scenario::S1 => solve_adaptive_with_dmin(h2, params, &derived, d_min).ok(),
            Scenario::S3Gated => {
                if threshold_gate(h2, &derived) {
                    solve_adaptive_with_dmin(h2, params, &derived, d_min).ok()
                } else {
                    None
                }
            }
            Scenario::S2 => {
                let (q, t) = table.as_ref().expect("table built above");
                t.entry(quantize(h2, q)).copied()
            }
            Scenario::Baseline => baseline_solve(h2, params, &derived).ok(),
            Scenario::S3 => unreachable!("handled above"),
        };
        match decision {
            Some(policy) if policy.feasible_power => {
                let psi = policy.outcome(h2, params, &derived).psi;
                acc.transmit(&policy, psi, params);
            }
            _ => acc.outage(),
        }
    }
    Ok(acc.finish(params))
}

/// Exact expected block energy of the quantized-feedback mode with `b`
/// feedback bits: every interval carries probability `2^-b`; the deep-fade
/// interval and any power-capped entry contribute zero (dropped blocks).
pub fn expected_psi_quantized<T: Real>(params: &SystemParams<T>, b: u32) -> Result<T, SimError> {
    if !(1..=16).contains(&b) {
        return Err(SimError::FeedbackBits(b));
    }
    let derived = derive(params)?;
    let q = build_quantizer(b, params.varsigma);
    let table = scenario2_table(params, &derived, &q).map_err(SimError::Policy)?;
    let mut total = T::zero();
    for (idx, entry) in table.entries.iter().enumerate() {
        if let Some(policy) = entry {
            if policy.feasible_power {
                let c_i = q.level(idx + 1);
                total = total + policy.outcome(c_i, params, &derived).psi;
            }
        }
    }
    Ok(total / cast((1u64 << b) as f64))
}

/// Run one simulated row per swept value. Row `i` uses stream `seed ^ i`, so
/// the result is independent of how rows are scheduled onto workers.
pub fn sweep<T: Real>(
    config: &SimConfig,
    params: &SystemParams<T>,
) -> Result<SweepResult<T>, SimError> {
    let spec = config.sweep.as_ref().ok_or(SimError::MissingSweep)?;
    let rows: Result<Vec<SimRow<T>>, SimError> = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut point = *params;
            apply_sweep_value(&mut point, spec.variable, value);
            let mut row = simulate_point(
                config.scenario,
                &point,
                config.blocks,
                config.seed ^ i as u64,
            )?;
            row.swept_value = value;
            Ok(row)
        })
        .collect();
    Ok(SweepResult {
        variable: spec.variable.as_str().to_owned(),
        rows: rows?,
    })
}

/// Single operating point wrapped in the same result shape as a sweep.
pub fn simulate<T: Real>(
    config: &SimConfig,
    params: &SystemParams<T>,
) -> Result<SweepResult<T>, SimError> {
    let mut row = simulate_point(config.scenario, params, config.blocks, config.seed)?;
    row.swept_value = 0.0;
    Ok(SweepResult {
        variable: "none".to_owned(),
        rows: vec![row],
    })
}

pub const CSV_HEADER: &str = "swept_var,swept_value,e_psi_j,lifetime_s,lifetime_days,\
mean_dcp_ratio,mean_rate_bps,mean_m,outage_frac,branch_unconstrained,branch_delay_active,\
branch_clamped";

/// Twelve significant digits, byte-deterministic.
pub fn format_sig12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_owned()
        } else {
            "-inf".to_owned()
        }
    } else {
        format!("{:.11e}", x)
    }
}

/// Write the fixed-schema CSV. Bytes depend only on the result contents.
pub fn emit_csv<T: Real>(result: &SweepResult<T>, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            result.variable,
            format_sig12(row.swept_value),
            format_sig12(to_f64(row.e_psi)),
            format_sig12(to_f64(row.lifetime_s)),
            format_sig12(to_f64(row.lifetime_days)),
            format_sig12(to_f64(row.mean_dcp_ratio)),
            format_sig12(to_f64(row.mean_rate_bps)),
            format_sig12(to_f64(row.mean_m)),
            format_sig12(to_f64(row.outage_frac)),
            row.branch_counts[0],
            row.branch_counts[1],
            row.branch_counts[2],
        )?;
    }
    Ok(())
}

/// CSV bytes in memory; what the CLI writes to disk.
pub fn csv_bytes<T: Real>(result: &SweepResult<T>) -> Vec<u8> {
    let mut buf = Vec::new();
    emit_csv(result, &mut buf).expect("writing to a Vec cannot fail");
    buf
}
