//! `comprate` — policy solver, Monte Carlo simulator and oracle validator.
//!
//! Exit codes: 0 success, 1 configuration/validation error (single-line
//! diagnostic on stderr), 2 oracle disagreement from `validate`.

mod config;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use comprate_core::channel::{build_quantizer, quantize};
use comprate_core::oracle::{grid_minimize_s1, grid_minimize_s3, GridSpec};
use comprate_core::params::{dbm_to_watts, derive};
use comprate_core::policy::{
    baseline_solve, scenario1_solve, scenario2_table, scenario3_solve, threshold_gate, Branch,
    Policy,
};
use comprate_core::sim::{
    csv_bytes, format_sig12, parse_sweep, simulate, sweep, Scenario, SimConfig,
};
use comprate_core::{DerivedConstants64, SystemParams64};

use config::ConfigFile;

const DEFAULT_BLOCKS: u64 = 100_000;
const DEFAULT_SEED: u64 = 0;
const DEFAULT_GRID_POINTS: usize = 500;
const DEFAULT_GAIN: f64 = 1.0;
/// Build fails when a closed-form policy departs from the grid oracle by
/// more than this relative gap.
const ORACLE_GATE: f64 = 5e-3;

#[derive(Parser)]
#[command(
    name = "comprate",
    version,
    about = "Energy-optimal compression and transmission-rate policies for battery-powered sensor links"
)]
struct Cli {
    /// TOML configuration file with [params] and [sim] sections.
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps; any count produces identical output bytes.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override: delay bound, milliseconds.
    #[arg(long, value_name = "MS", global = true)]
    t_block_ms: Option<f64>,
    /// Override: BER target.
    #[arg(long, global = true)]
    phi: Option<f64>,
    /// Override: required probability of meeting the BER target.
    #[arg(long, global = true)]
    vartheta: Option<f64>,
    /// Override: feedback bits of the quantized mode.
    #[arg(long, global = true)]
    b_feedback: Option<u32>,
    /// Override: noise power, dBm.
    #[arg(long, value_name = "DBM", global = true, allow_negative_numbers = true)]
    sigma2_dbm: Option<f64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one policy and print it as key=value lines.
    Solve {
        /// s1, s2, s3, s3_gated or baseline.
        #[arg(long)]
        scenario: Option<String>,
        /// Channel power gain |h|^2 the policy is designed for.
        #[arg(long)]
        gain: Option<f64>,
        /// 1-based quantizer interval (s2); wins over --gain.
        #[arg(long)]
        interval: Option<usize>,
    },
    /// Sweep one constraint and emit the CSV table.
    Sweep {
        #[arg(long)]
        scenario: Option<String>,
        /// variable=lo:hi:n (linear) or variable=lo:hi:nL (log-spaced);
        /// variable is phi, t_block (ms), b_feedback or vartheta.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        blocks: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo at the configured operating point; prints one CSV row.
    Simulate {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        blocks: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the closed-form policies against the brute-force oracle.
    Validate {
        /// Grid resolution per axis.
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Print the quantized-feedback policy table.
    Table {},
}

enum CliError {
    Usage(String),
    Oracle(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Oracle(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Oracle(m) => write!(f, "{m}"),
        }
    }
}

fn usage<E: fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

struct Context {
    params: SystemParams64,
    derived: DerivedConstants64,
    sim: config::SimSection,
}

fn load_context(cli: &Cli) -> Result<Context, CliError> {
    let file: ConfigFile = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| usage(format!("bad config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let mut params = file.params.resolve();
    if let Some(v) = cli.t_block_ms {
        params.t_block = v * 1e-3;
    }
    if let Some(v) = cli.phi {
        params.phi = v;
    }
    if let Some(v) = cli.vartheta {
        params.vartheta = v;
    }
    if let Some(v) = cli.b_feedback {
        params.b_feedback = v;
    }
    if let Some(v) = cli.sigma2_dbm {
        params.sigma2 = dbm_to_watts(v);
    }
    let derived = derive(&params).map_err(usage)?;

    let threads = cli.threads.or(file.sim.threads).unwrap_or(1);
    // The pool may already exist when tests call run() twice; that is fine.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();

    Ok(Context {
        params,
        derived,
        sim: file.sim,
    })
}

fn scenario_of(flag: &Option<String>, ctx: &Context) -> Result<Scenario, CliError> {
    let name = flag
        .clone()
        .or_else(|| ctx.sim.scenario.clone())
        .unwrap_or_else(|| "s1".to_owned());
    Scenario::from_str(&name).map_err(usage)
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Unconstrained => "unconstrained",
        Branch::DelayActive => "delay_active",
        Branch::Clamped => "clamped",
    }
}

fn print_policy(
    scenario: Scenario,
    design_gain: f64,
    policy: &Policy<f64>,
    ctx: &Context,
    extra: &[(&str, String)],
) {
    let out = policy.outcome(design_gain, &ctx.params, &ctx.derived);
    println!("scenario={}", scenario.as_str());
    for (k, v) in extra {
        println!("{k}={v}");
    }
    println!("design_gain={}", format_sig12(design_gain));
    println!("m_real={}", format_sig12(policy.m_real));
    println!("m_practical={}", policy.m_practical);
    println!("d_cp_bits={}", format_sig12(policy.d_cp));
    println!(
        "dcp_ratio={}",
        format_sig12(policy.d_cp / ctx.params.data_bits)
    );
    println!("p_t_w={}", format_sig12(policy.p_t));
    println!("branch={}", branch_name(policy.branch));
    println!("feasible_power={}", policy.feasible_power);
    println!("t_cp_s={}", format_sig12(out.t_cp));
    println!("t_tx_s={}", format_sig12(out.t_tx));
    println!("p_tx_w={}", format_sig12(out.p_tx));
    println!("psi_j={}", format_sig12(out.psi));
    println!("ber_bound={}", format_sig12(out.ber_bound));
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let ctx = load_context(cli)?;
    match &cli.command {
        Cmd::Solve {
            scenario,
            gain,
            interval,
        } => cmd_solve(&ctx, scenario, *gain, *interval),
        Cmd::Sweep {
            scenario,
            sweep: sweep_flag,
            blocks,
            seed,
            out,
        } => cmd_sweep(&ctx, scenario, sweep_flag, *blocks, *seed, out),
        Cmd::Simulate {
            scenario,
            blocks,
            seed,
            out,
        } => cmd_simulate(&ctx, scenario, *blocks, *seed, out),
        Cmd::Validate { grid_points } => cmd_validate(&ctx, *grid_points),
        Cmd::Table {} => cmd_table(&ctx),
    }
}

fn cmd_solve(
    ctx: &Context,
    scenario: &Option<String>,
    gain: Option<f64>,
    interval: Option<usize>,
) -> Result<(), CliError> {
    let scenario = scenario_of(scenario, ctx)?;
    let gain = gain.or(ctx.sim.gain).unwrap_or(DEFAULT_GAIN);
    if gain < 0.0 {
        return Err(usage("gain must be >= 0"));
    }
    let p = &ctx.params;
    let dv = &ctx.derived;
    match scenario {
        Scenario::S1 => {
            let pol = scenario1_solve(gain, p, dv).map_err(usage)?;
            print_policy(scenario, gain, &pol, ctx, &[]);
        }
        Scenario::Baseline => {
            let pol = baseline_solve(gain, p, dv).map_err(usage)?;
            print_policy(scenario, gain, &pol, ctx, &[]);
        }
        Scenario::S3 => {
            let pol = scenario3_solve(p, dv).map_err(usage)?;
            print_policy(scenario, dv.theta_gate, &pol, ctx, &[]);
        }
        Scenario::S3Gated => {
            if !threshold_gate(gain, dv) {
                println!("scenario=s3_gated");
                println!("design_gain={}", format_sig12(gain));
                println!("gate=closed");
                println!("outage=true");
                return Ok(());
            }
            let pol = scenario1_solve(gain, p, dv).map_err(usage)?;
            print_policy(scenario, gain, &pol, ctx, &[("gate", "open".to_owned())]);
        }
        Scenario::S2 => {
            if !(1..=16).contains(&p.b_feedback) {
                return Err(usage("b_feedback must be in 1..=16 for s2"));
            }
            let q = build_quantizer(p.b_feedback, p.varsigma);
            let i = match interval.or(ctx.sim.interval) {
                Some(i) => {
                    if i < 1 || i > q.intervals() {
                        return Err(usage(format!(
                            "interval must be in 1..={}, got {i}",
                            q.intervals()
                        )));
                    }
                    i
                }
                None => quantize(gain, &q),
            };
            let table = scenario2_table(p, dv, &q).map_err(usage)?;
            let level = q.level(i);
            match table.entry(i) {
                Some(pol) => print_policy(
                    scenario,
                    level,
                    pol,
                    ctx,
                    &[("interval", i.to_string()), ("level", format_sig12(level))],
                ),
                None => {
                    println!("scenario=s2");
                    println!("interval={i}");
                    println!("level={}", format_sig12(level));
                    println!("outage=true");
                }
            }
        }
    }
    Ok(())
}

fn cmd_sweep(
    ctx: &Context,
    scenario: &Option<String>,
    sweep_flag: &Option<String>,
    blocks: Option<u64>,
    seed: Option<u64>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let scenario = scenario_of(scenario, ctx)?;
    let spec_text = sweep_flag
        .clone()
        .or_else(|| ctx.sim.sweep.clone())
        .ok_or_else(|| usage("sweep needs --sweep variable=lo:hi:n (or [sim] sweep)"))?;
    let spec = parse_sweep(&spec_text).map_err(usage)?;
    let mut config = SimConfig::new(
        scenario,
        blocks.or(ctx.sim.blocks).unwrap_or(DEFAULT_BLOCKS),
        seed.or(ctx.sim.seed).unwrap_or(DEFAULT_SEED),
    )
    .with_sweep(spec);
    config.output_path = resolve_out(out, ctx);
    let result = sweep(&config, &ctx.params).map_err(usage)?;
    write_csv(&csv_bytes(&result), config.output_path.as_deref())?;
    Ok(())
}

fn cmd_simulate(
    ctx: &Context,
    scenario: &Option<String>,
    blocks: Option<u64>,
    seed: Option<u64>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let scenario = scenario_of(scenario, ctx)?;
    let mut config = SimConfig::new(
        scenario,
        blocks.or(ctx.sim.blocks).unwrap_or(DEFAULT_BLOCKS),
        seed.or(ctx.sim.seed).unwrap_or(DEFAULT_SEED),
    );
    config.output_path = resolve_out(out, ctx);
    let result = simulate(&config, &ctx.params).map_err(usage)?;
    eprintln!("se_psi_j={}", format_sig12(result.rows[0].se_psi));
    write_csv(&csv_bytes(&result), config.output_path.as_deref())?;
    Ok(())
}

fn resolve_out(out: &Option<PathBuf>, ctx: &Context) -> Option<String> {
    out.as_ref()
        .map(|p| p.display().to_string())
        .or_else(|| ctx.sim.out.clone())
}

fn write_csv(bytes: &[u8], path: Option<&str>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            fs::write(p, bytes).map_err(|e| usage(format!("cannot write {p}: {e}")))?;
            eprintln!("wrote {} bytes to {p}", bytes.len());
        }
        None => print!("{}", String::from_utf8_lossy(bytes)),
    }
    Ok(())
}

fn cmd_validate(ctx: &Context, grid_points: Option<usize>) -> Result<(), CliError> {
    let n = grid_points
        .or(ctx.sim.grid_points)
        .unwrap_or(DEFAULT_GRID_POINTS);
    if n < 2 {
        return Err(usage("grid-points must be >= 2"));
    }
    let grid = GridSpec::new(n, n);
    let mut worst: f64 = 0.0;
    let mut failed = false;

    // Instantaneous mode across a wide gain range.
    for i in 0..9 {
        let h2 = 10f64.powf(-2.0 + 4.0 * i as f64 / 8.0);
        let closed = match scenario1_solve(h2, &ctx.params, &ctx.derived) {
            Ok(pol) => pol,
            Err(e) => {
                println!("probe=s1 h2={} status=infeasible ({e})", format_sig12(h2));
                continue;
            }
        };
        let psi = closed.outcome(h2, &ctx.params, &ctx.derived).psi;
        let oracle = grid_minimize_s1(h2, &ctx.params, &ctx.derived, &grid).map_err(usage)?;
        let gap = (oracle.psi - psi) / psi;
        let ok = psi <= oracle.psi * (1.0 + 1e-6) && gap.abs() <= ORACLE_GATE;
        failed |= !ok;
        worst = worst.max(gap.abs());
        println!(
            "probe=s1 h2={} closed_psi={} grid_psi={} rel_gap={} status={}",
            format_sig12(h2),
            format_sig12(psi),
            format_sig12(oracle.psi),
            format_sig12(gap),
            if ok { "ok" } else { "FAIL" }
        );
    }

    // Statistical mode over probability and BER targets.
    for vartheta in [0.90, 0.95, 0.99] {
        for phi in [1e-5, 1e-3] {
            let mut p = ctx.params;
            p.vartheta = vartheta;
            p.phi = phi;
            let dv = derive(&p).map_err(usage)?;
            let closed = match scenario3_solve(&p, &dv) {
                Ok(pol) => pol,
                Err(e) => {
                    println!("probe=s3 vartheta={vartheta} phi={phi} status=infeasible ({e})");
                    continue;
                }
            };
            let psi = closed.outcome(1.0, &p, &dv).psi;
            let oracle = grid_minimize_s3(&p, &dv, &grid).map_err(usage)?;
            let gap = (oracle.psi - psi) / psi;
            let ok = psi <= oracle.psi * (1.0 + 1e-6) && gap.abs() <= ORACLE_GATE;
            failed |= !ok;
            worst = worst.max(gap.abs());
            println!(
                "probe=s3 vartheta={vartheta} phi={phi} closed_psi={} grid_psi={} rel_gap={} status={}",
                format_sig12(psi),
                format_sig12(oracle.psi),
                format_sig12(gap),
                if ok { "ok" } else { "FAIL" }
            );
        }
    }

    if failed {
        return Err(CliError::Oracle(format!(
            "oracle disagreement: worst relative gap {} exceeds {}",
            format_sig12(worst),
            format_sig12(ORACLE_GATE)
        )));
    }
    println!("validate: all probes within {}", format_sig12(ORACLE_GATE));
    Ok(())
}

fn cmd_table(ctx: &Context) -> Result<(), CliError> {
    let p = &ctx.params;
    if !(1..=16).contains(&p.b_feedback) {
        return Err(usage("b_feedback must be in 1..=16"));
    }
    let q = build_quantizer(p.b_feedback, p.varsigma);
    let table = scenario2_table(p, &ctx.derived, &q).map_err(usage)?;
    println!("interval,level,status,m_real,m_practical,d_cp_bits,p_t_w,psi_j,branch");
    for i in 1..=q.intervals() {
        let level = q.level(i);
        match table.entry(i) {
            Some(pol) => {
                let out = pol.outcome(level, p, &ctx.derived);
                println!(
                    "{i},{},ok,{},{},{},{},{},{}",
                    format_sig12(level),
                    format_sig12(pol.m_real),
                    pol.m_practical,
                    format_sig12(pol.d_cp),
                    format_sig12(pol.p_t),
                    format_sig12(out.psi),
                    branch_name(pol.branch)
                );
            }
            None => println!("{i},{},outage,,,,,,", format_sig12(level)),
        }
    }
    Ok(())
}
