//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Tolerances are pinned here, not tuned elsewhere.

use std::time::Instant;

use comprate_core::channel::{build_quantizer, GainSampler};
use comprate_core::energy::{ber_bound, compression_time, snr, tx_time};
use comprate_core::oracle::{grid_minimize_s1, grid_minimize_s3, GridSpec};
use comprate_core::params::{dbm_to_watts, derive, table_defaults, SystemParams};
use comprate_core::policy::{
    baseline_solve, scenario1_solve, scenario1_stationary, scenario2_table, scenario3_solve,
    scenario3_stationary, PolicyError,
};
use comprate_core::sim::{expected_psi_quantized, simulate_point, Scenario};
use comprate_core::solver::solve_d_min;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn defaults() -> SystemParams<f64> {
    table_defaults()
}

/// Trend-test parameter set: the stock defaults leave the amplifier term
/// seven orders of magnitude below circuit power, freezing every adaptive
/// branch. Raising the noise floor to -94 dBm (and opening the power cap so
/// outage accounting cannot skew energy means) makes rate and compression
/// genuinely respond to the constraints.
fn desk_params() -> SystemParams<f64> {
    let mut p = defaults();
    p.sigma2 = dbm_to_watts(-94.0);
    p.p_t_max = 1e6;
    p
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

#[test]
fn criterion_1_oracle_equivalence_instantaneous_mode() {
    let start = Instant::now();
    let p = defaults();
    let dv = derive(&p).unwrap();
    let grid = GridSpec::new(2000, 2000);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let h2 = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0);
        let pol = scenario1_solve(h2, &p, &dv).unwrap();
        let psi = pol.outcome(h2, &p, &dv).psi;
        let oracle = grid_minimize_s1(h2, &p, &dv, &grid).unwrap();
        assert!(
            psi <= oracle.psi * (1.0 + 1e-6),
            "closed form lost to a grid point at h2 = {h2}"
        );
        let gap = (oracle.psi - psi).abs() / psi;
        worst = worst.max(gap);
        assert!(
            gap <= 1e-3,
            "criterion 1: FAIL at h2 = {h2}: rel gap {gap:.3e} exceeds 0.1%"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "criterion 1: FAIL — runtime {elapsed:?} exceeds 5 minutes"
    );
    println!(
        "criterion 1 (oracle equivalence, instantaneous mode): PASS — \
         50 gains, worst rel gap {worst:.3e}, {elapsed:?}"
    );
}

#[test]
fn criterion_2_oracle_equivalence_statistical_mode() {
    let grid = GridSpec::new(2000, 2000);
    let mut worst: f64 = 0.0;
    for vartheta in [0.90, 0.95, 0.99] {
        for phi in [1e-5, 1e-3] {
            let mut p = defaults();
            p.vartheta = vartheta;
            p.phi = phi;
            let dv = derive(&p).unwrap();
            let pol = scenario3_solve(&p, &dv).unwrap();
            let psi = pol.outcome(1.0, &p, &dv).psi;
            let oracle = grid_minimize_s3(&p, &dv, &grid).unwrap();
            assert!(psi <= oracle.psi * (1.0 + 1e-6));
            let gap = (oracle.psi - psi).abs() / psi;
            worst = worst.max(gap);
            assert!(
                gap <= 1e-3,
                "criterion 2: FAIL at vartheta={vartheta}, phi={phi}: rel gap {gap:.3e}"
            );
        }
    }
    println!(
        "criterion 2 (oracle equivalence, statistical mode): PASS — worst rel gap {worst:.3e}"
    );
}

#[test]
fn criterion_3_constraint_activity() {
    let p = defaults();
    let dv = derive(&p).unwrap();

    // Instantaneous mode: BER bound equals the target at the design gain.
    for i in 0..20 {
        let h2 = 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0);
        let pol = scenario1_solve(h2, &p, &dv).unwrap();
        let ber = pol.outcome(h2, &p, &dv).ber_bound;
        assert!(
            (ber - p.phi).abs() <= 1e-9 * p.phi,
            "criterion 3: FAIL — s1 BER {ber} off target at h2 = {h2}"
        );
    }

    // Quantized mode: equality at each interval's design level.
    let q = build_quantizer(4, p.varsigma);
    let table = scenario2_table(&p, &dv, &q).unwrap();
    for i in 2..=q.intervals() {
        let pol = table.entry(i).expect("transmit entry");
        let ber = pol.outcome(q.level(i), &p, &dv).ber_bound;
        assert!(
            (ber - p.phi).abs() <= 1e-9 * p.phi,
            "criterion 3: FAIL — s2 BER {ber} off target at interval {i}"
        );
    }

    // Statistical mode: empirical target-probability over a million draws.
    let pol = scenario3_solve(&p, &dv).unwrap();
    let n = 1_000_000u64;
    let mut sampler = GainSampler::new(0xBEE, p.varsigma);
    let mut hits = 0u64;
    for _ in 0..n {
        let h2 = sampler.sample();
        if ber_bound(pol.m_real, snr(pol.p_t, h2, &p, &dv), p.omega1, p.omega2) <= p.phi {
            hits += 1;
        }
    }
    let freq = hits as f64 / n as f64;
    let se = (p.vartheta * (1.0 - p.vartheta) / n as f64).sqrt();
    assert!(
        (freq - p.vartheta).abs() <= 3.0 * se,
        "criterion 3: FAIL — empirical probability {freq} vs {} (3 SE = {})",
        p.vartheta,
        3.0 * se
    );
    println!(
        "criterion 3 (BER-constraint activity): PASS — exact at design gains, \
         empirical {freq:.5} vs target {} within 3 SE",
        p.vartheta
    );
}

#[test]
fn criterion_4_delay_feasibility_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDE1A);
    let mut policies = 0u32;
    let mut configs = 0u32;
    let mut attempts = 0u32;
    while configs < 1000 {
        attempts += 1;
        assert!(
            attempts < 10_000,
            "sampler keeps producing infeasible configs"
        );
        let mut p = defaults();
        p.sigma2 = dbm_to_watts(-174.0 + 100.0 * uniform(&mut rng));
        p.t_block = 0.02 + 0.08 * uniform(&mut rng);
        p.phi = 10f64.powf(-6.0 + 4.0 * uniform(&mut rng));
        p.beta = 2.0 + 6.0 * uniform(&mut rng);
        p.mu = 0.2 + 0.7 * uniform(&mut rng);
        p.d = 5.0 + 45.0 * uniform(&mut rng);
        p.vartheta = 0.85 + 0.14 * uniform(&mut rng);
        p.p_t_max = 1e9;
        let dv = derive(&p).unwrap();
        let h2 = 10f64.powf(-2.0 + 4.0 * uniform(&mut rng));

        let mut any = false;
        let mut check = |pol: &comprate_core::Policy64| {
            let out = pol.outcome(h2, &p, &dv);
            assert!(
                out.t_cp + out.t_tx <= p.t_block + 1e-12,
                "criterion 4: FAIL — schedule {} s busts bound {} s",
                out.t_cp + out.t_tx,
                p.t_block
            );
            policies += 1;
        };
        match scenario1_solve(h2, &p, &dv) {
            Ok(pol) => {
                check(&pol);
                any = true;
            }
            Err(PolicyError::DelayInfeasible { .. }) => {}
            Err(e) => panic!("unexpected error: {e}"),
        }
        if let Ok(pol) = scenario3_solve(&p, &dv) {
            check(&pol);
            any = true;
        }
        if let Ok(pol) = baseline_solve(h2, &p, &dv) {
            check(&pol);
            any = true;
        }
        if any {
            configs += 1;
        }
    }
    println!(
        "criterion 4 (delay feasibility): PASS — {policies} policies across {configs} \
         random feasible configurations, all within t_block + 1e-12 s"
    );
}

#[test]
fn criterion_5_joint_policy_dominance_trend() {
    let p = desk_params();
    let blocks = 50_000u64;
    let mut ratios: Vec<(f64, f64)> = Vec::new();
    for (i, t_ms) in [30.0, 40.0, 50.0, 60.0, 70.0, 80.0].iter().enumerate() {
        let mut pp = p;
        pp.t_block = t_ms * 1e-3;
        // Identical per-T seeds: both schemes see the same gain stream.
        let seed = 0x5EED ^ i as u64;
        let joint = simulate_point(Scenario::S1, &pp, blocks, seed).unwrap();
        let base = simulate_point(Scenario::Baseline, &pp, blocks, seed).unwrap();
        if !base.feasible {
            continue;
        }
        assert!(
            joint.feasible,
            "joint scheme must be feasible wherever baseline is"
        );
        let ratio = joint.lifetime_s / base.lifetime_s;
        assert!(
            ratio > 1.0,
            "criterion 5: FAIL — joint/baseline lifetime ratio {ratio} <= 1 at T = {t_ms} ms"
        );
        ratios.push((*t_ms, ratio));
    }
    assert!(
        ratios.len() >= 2,
        "need at least two feasible baseline points"
    );
    let (t_first, r_first) = ratios[0];
    let (_, r_last) = *ratios.last().unwrap();
    assert!(
        r_first >= 2.0 * r_last,
        "criterion 5: FAIL — ratio {r_first:.2} at T = {t_first} ms is not 2x the \
         ratio {r_last:.2} at 80 ms"
    );
    println!(
        "criterion 5 (lifetime dominance trend): PASS — ratios {:?}, tightest/loosest = {:.2}x",
        ratios
            .iter()
            .map(|(t, r)| format!("{t}ms: {r:.2}"))
            .collect::<Vec<_>>(),
        r_first / r_last
    );
}

#[test]
fn criterion_6_feedback_convergence() {
    let p = defaults();
    let mut failures: Vec<String> = Vec::new();

    // Clause 1: exact expected energy monotone non-increasing in the
    // feedback budget.
    let e: Vec<f64> = (1..=8)
        .map(|b| expected_psi_quantized(&p, b).unwrap())
        .collect();
    println!("exact E[psi] by feedback bits: {e:?}");
    for w in e.windows(2) {
        if w[1] > w[0] {
            failures.push(format!(
                "monotone clause violated: E rises from {} to {} \
                 (refining the zero-cost deep-fade drop interval converts outage \
                 probability into paying transmissions, so the expectation \
                 provably increases with the budget under drop-at-zero-energy \
                 accounting)",
                w[0], w[1]
            ));
            break;
        }
    }

    // Clause 2: the 8-bit table sits within 2% of the adaptive Monte Carlo
    // expectation.
    let s1 = simulate_point(Scenario::S1, &p, 500_000, 0xFEED)
        .unwrap()
        .e_psi;
    let gap = (e[7] - s1).abs() / s1;
    println!(
        "b = 8 expectation {} vs adaptive mean {} (gap {:.4}%)",
        e[7],
        s1,
        gap * 100.0
    );
    if gap > 0.02 {
        failures.push(format!("convergence clause violated: gap {gap:.4} > 2%"));
    }

    assert!(
        failures.is_empty(),
        "criterion 6 (feedback convergence): FAIL — {}",
        failures.join("; ")
    );
    println!("criterion 6 (feedback convergence): PASS");
}

#[test]
fn criterion_7_compression_insensitive_to_ber_target() {
    let p = defaults();
    let blocks = 20_000u64;
    let mut rows = Vec::new();
    for i in 0..7 {
        let mut pp = p;
        pp.t_block = 0.05;
        pp.phi = 10f64.powf(-6.0 + 4.0 * i as f64 / 6.0);
        rows.push(simulate_point(Scenario::S1, &pp, blocks, 0xC0DE ^ i as u64).unwrap());
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.mean_dcp_ratio).collect();
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let spread = (hi - lo) / lo;
    assert!(
        spread < 0.05,
        "criterion 7: FAIL — d_cp/D varies by {:.2}% across the BER sweep",
        spread * 100.0
    );
    for w in rows.windows(2) {
        assert!(
            w[1].mean_rate_bps >= w[0].mean_rate_bps * (1.0 - 1e-12),
            "criterion 7: FAIL — mean rate fell from {} to {} as the target relaxed",
            w[0].mean_rate_bps,
            w[1].mean_rate_bps
        );
    }
    println!(
        "criterion 7 (compression insensitivity): PASS — d_cp/D spread {:.3}%, \
         rate non-decreasing",
        spread * 100.0
    );
}

#[test]
fn criterion_8_root_quality() {
    // Back-substitute every root the solves produce, across parameter sets
    // that exercise the clamped, interior and delay-active branches.
    let mut configs: Vec<(SystemParams<f64>, f64)> =
        vec![(defaults(), 1.0), (defaults(), 0.01), (defaults(), 100.0)];
    for t_ms in [30.0, 40.0, 50.0] {
        for h2 in [0.05, 1.0, 20.0] {
            let mut p = desk_params();
            p.t_block = t_ms * 1e-3;
            configs.push((p, h2));
        }
    }
    let g = |z: f64| ((z / 2.0).exp() - 1.0) * ((z - 1.0) * (z / 2.0).exp() + 1.0);
    let mut roots = 0u32;

    for (p, h2) in &configs {
        let dv = derive(p).unwrap();

        // Minimum compressed size: the block time at the top rate must equal
        // the bound.
        let d_min = solve_d_min(p, &dv).unwrap();
        let time = compression_time(p.data_bits, d_min, p.tau, p.beta).unwrap()
            + tx_time(d_min, dv.m_max, p.t_s);
        assert!(
            (time - p.t_block).abs() <= 1e-12 * p.t_block,
            "criterion 8: FAIL — d_min residual {} at T = {}",
            time - p.t_block,
            p.t_block
        );
        roots += 1;

        for (st, h_eff) in [
            (scenario1_stationary(*h2, p, &dv).unwrap(), *h2),
            (scenario3_stationary(p, &dv).unwrap(), dv.theta_gate),
        ] {
            // Interior delay-free stationary point: amplifier factor balances
            // circuit power.
            let amp = 3.0 * (-dv.omega_cap) / (p.mu * h_eff);
            let z_t = st.m_tilde.ln();
            if st.m_tilde > 2.0 * (1.0 + 1e-9) && st.m_tilde < dv.m_max * (1.0 - 1e-9) {
                let residual = amp * g(z_t) - dv.p_o;
                assert!(
                    residual.abs() <= 1e-12 * dv.p_o,
                    "criterion 8: FAIL — stationarity residual {residual} vs scale {}",
                    dv.p_o
                );
                roots += 1;
            }
            // Delay-boundary point: its schedule must sit on the bound.
            if let (Some(m_hat), Some(d_hat)) = (st.m_hat, st.d_cp_hat) {
                if d_hat >= d_min && d_hat <= p.data_bits {
                    let time = compression_time(p.data_bits, d_hat, p.tau, p.beta).unwrap()
                        + tx_time(d_hat, m_hat, p.t_s);
                    assert!(
                        (time - p.t_block).abs() <= 1e-12 * p.t_block,
                        "criterion 8: FAIL — boundary residual {}",
                        time - p.t_block
                    );
                    roots += 1;
                }
            }
        }

        // Determinism: identical inputs give bit-identical roots.
        let a = scenario1_solve(*h2, p, &dv).unwrap();
        let b = scenario1_solve(*h2, p, &dv).unwrap();
        assert!(
            a.m_real.to_bits() == b.m_real.to_bits()
                && a.d_cp.to_bits() == b.d_cp.to_bits()
                && a.p_t.to_bits() == b.p_t.to_bits(),
            "criterion 8: FAIL — solve is not deterministic"
        );

        // Smallest-root contract for the minimum compressed size.
        let rate_term = p.t_s * std::f64::consts::LN_2 / dv.m_max.ln();
        let x_tmin = (p.tau * p.beta / rate_term).powf(1.0 / (p.beta + 1.0)) * p.data_bits;
        assert!(d_min <= x_tmin + 1e-9 * x_tmin);
    }
    println!(
        "criterion 8 (root quality): PASS — {roots} roots back-substituted below \
         1e-12 of their natural scale; solves deterministic"
    );
}
