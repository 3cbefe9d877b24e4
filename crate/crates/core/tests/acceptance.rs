//! Acceptance report. Prints one PASS/FAIL line per criterion and a summary.
//!
//! Exits 0 regardless of the outcome so the rest of the test suite still runs;
//! set `ISAC_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use isac_core::allocator::{
    allocation_rms_bandwidth, baseband_weights, classical_waterfill, single_stage_pg, exhaustive_oracle, solver_campaign, stage1_waterfill, stage2_project, tradeoff_campaign,
    two_stage, AllocProblem, Preset,
};
use isac_core::channel::FastFading;
use isac_core::comm::{se_vs_distance, sum_rate, LinkBudget};
use isac_core::ofdm::{random_body, OfdmConfig};
use isac_core::otfs::{pilot_isl_trials, PilotAxis, PilotIslSetup};
use isac_core::rng::substream;
use isac_core::sensing::{
    crb_monte_carlo, crb_ranging_mse, fisher_info, imaging_convergence, isl_gap_curve, isl_slice, ofdm_isl_trials, psl_law, psl_trials,
    sensing_se, sensing_se_flat, CrbSimConfig, ImagingGeometry, IslMode, RangingScenario,
};
use isac_core::signal::{Constellation, Modulation};
use isac_core::stats::{bootstrap_se, linear_fit, mean, median, paired_bootstrap_diff};
use isac_core::{dbm_per_hz_to_watts, Result};
use rand::Rng;

const BOOT: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn isl_ordering() -> Result<Outcome> {
    let mut med = Vec::new();
    let mut se = Vec::new();
    for (i, m) in [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64].into_iter().enumerate() {
        let v = ofdm_isl_trials(1024, m, 1000, 100 + i as u64)?;
        med.push(median(&v));
        se.push(bootstrap_se(&v, BOOT, 200 + i as u64, median));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 1..3 {
        let sep = med[k] - med[k - 1];
        let s = (se[k].powi(2) + se[k - 1].powi(2)).sqrt();
        pass &= sep >= 3.0 * s;
        parts.push(format!("sep{k}={:.3}se", sep / s));
    }
    outcome(
        pass,
        format!("medians qpsk={:.5} 16qam={:.5} 64qam={:.5}, {}", med[0], med[1], med[2], parts.join(" ")),
    )
}

fn isl_gap() -> Result<Outcome> {
    let rows = isl_gap_curve(&[256, 2048], 200, &Constellation::qpsk(), 3)?;
    let (a, b) = (rows[0].mean_rel_err, rows[1].mean_rel_err);
    outcome(
        a < 0.02 && b < 0.01,
        format!(
            "mean rel err N=256: {:.4} (< 0.02), N=2048: {:.4} (< 0.01); rel err of means {:.4} / {:.4}",
            a, b, rows[0].rel_err_of_means, rows[1].rel_err_of_means
        ),
    )
}

fn flat_psd_delta() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for (i, n) in [16usize, 64, 256, 1024, 4096].into_iter().enumerate() {
        let cfg = OfdmConfig::new(n, 1.0, n as f64, Constellation::qpsk())?;
        let alloc = cfg.flat_allocation();
        for t in 0..20 {
            let body = random_body(&cfg, &alloc, &mut substream(9, (i * 100 + t) as u64))?;
            worst = worst.max(isl_slice(&body, IslMode::Circular)?);
        }
    }
    outcome(worst < 1e-18, format!("max circular ISL over 100 bodies = {worst:.3e} (< 1e-18)"))
}

fn crb_closed_form() -> Result<Outcome> {
    let (a, n0, p0) = (0.3, 1e-18, 2e-10);
    let w = 2.0 * PI * 1e9;
    let wc = 2.0 * PI * 28e9;
    let s = RangingScenario::flat(a, wc, w, n0, p0, 4096)?;
    let closed = a * a * p0 * (wc * wc * w + w.powi(3) / 12.0) / (n0 * w);
    let e = rel(fisher_info(&s), closed);
    let beta = wc / w;
    let s2 = RangingScenario::flat(a, 2.0 * beta * w, 2.0 * w, n0, p0, 4096)?;
    let ratio = crb_ranging_mse(&s)? / crb_ranging_mse(&s2)?;
    outcome(
        e < 1e-6 && (ratio - 4.0).abs() < 1e-3,
        format!("fisher rel err {e:.2e} (< 1e-6), crb(W)/crb(2W) = {ratio:.6} (4 +- 1e-3)"),
    )
}

fn sensing_se_closed_form() -> Result<Outcome> {
    let (a, n0, p0, beta) = (0.3, 1e-18, 2e-10, 28.0);
    let mut worst = 0.0f64;
    let mut vals = Vec::new();
    for w in [2.0 * PI * 5e8, 2.0 * PI * 1e9, 2.0 * PI * 4e9] {
        let s = RangingScenario::flat(a, beta * w, w, n0, p0, 4096)?;
        let v = sensing_se(&s);
        worst = worst.max(rel(v, sensing_se_flat(a, p0, beta, n0)));
        vals.push(v);
    }
    let inv = vals.iter().map(|v| rel(*v, vals[0])).fold(0.0, f64::max);
    outcome(
        worst < 1e-6 && inv < 1e-6,
        format!("closed-form rel err {worst:.2e} (< 1e-6), spread across W {inv:.2e} (< 1e-6)"),
    )
}

fn crb_empirical() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for snr in [20.0, 25.0, 30.0] {
        let r = crb_monte_carlo(&CrbSimConfig {
            snr_db: snr,
            trials: 1000,
            ..Default::default()
        })?;
        pass &= (1.0..=2.0).contains(&r.ratio);
        parts.push(format!("{snr} dB: {:.3} +- {:.3}", r.ratio, r.ratio_se));
    }
    outcome(pass, format!("mse/crb in [1, 2] (ratio +- standard error): {}", parts.join(", ")))
}

fn psl_law_check() -> Result<Outcome> {
    let ns = [1024usize, 4096, 16384];
    let psl: Vec<f64> = ns.iter().enumerate().map(|(i, &n)| mean(&psl_trials(n, 500, 40 + i as u64))).collect();
    let ratios: Vec<f64> = psl.iter().zip(ns).map(|(p, n)| p / psl_law(n)).collect();
    let inside = ratios.iter().all(|r| (0.75..=1.15).contains(r));
    let decreasing = psl.windows(2).all(|w| w[1] < w[0]);
    outcome(
        inside && decreasing,
        format!(
            "mean/law at N=1024,4096,16384: {:.4}, {:.4}, {:.4} (in [0.75, 1.15]); mean normalized PSL {:.5}, {:.5}, {:.5} (decreasing)",
            ratios[0], ratios[1], ratios[2], psl[0], psl[1], psl[2]
        ),
    )
}

fn otfs_duality() -> Result<Outcome> {
    let setup = PilotIslSetup::default();
    let counts = [1, 10, 20, 40];
    let d = pilot_isl_trials(&setup, PilotAxis::Delay, &counts, 500, 21)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 1..counts.len() {
        let (step, se) = paired_bootstrap_diff(&d[k - 1], &d[k], BOOT, 300 + k as u64, median);
        pass &= step >= 2.0 * se;
        parts.push(format!("{}->{}: {:.2}se", counts[k - 1], counts[k], step / se));
    }
    let p = pilot_isl_trials(&setup, PilotAxis::Doppler, &[1, 40], 500, 21)?;
    let drift = rel(median(&p[1]), median(&p[0]));
    pass &= drift <= 0.05;
    outcome(pass, format!("delay steps {}; doppler 40 vs 1 pilot {:.2}% (<= 5%)", parts.join(" "), 100.0 * drift))
}

fn random_problem<R: Rng>(rng: &mut R, n: usize, alpha: f64, v0: f64) -> AllocProblem {
    AllocProblem {
        weights: baseband_weights(n, 1e9),
        gains: (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect(),
        alpha,
        mean_power: 1.0,
        v0,
        noise_psd: 1.0,
        bandwidth: n as f64,
    }
}

fn allocator_correctness() -> Result<Outcome> {
    let mut wf_err = 0.0f64;
    let mut infeasible = 0;
    let mut not_idempotent = 0;
    let mut rng = substream(50, 0);
    for _ in 0..100 {
        let n = rng.random_range(4..=64);
        // loose enough that stage 2 never engages at alpha = 1
        let loose = random_problem(&mut rng, n, 1.0, (n * n) as f64 + 1.0);
        let ts = two_stage(&loose, 1e-12)?;
        let wf = classical_waterfill(&loose.gains, loose.noise_psd, loose.bandwidth, loose.mean_power)?;
        for (a, b) in ts.x.levels().iter().zip(wf.levels()) {
            wf_err = wf_err.max((a - b).abs());
        }
        let alpha = rng.random_range(0.0..=1.0);
        let v0 = rng.random_range(0.01..4.0) * n as f64;
        let tight = AllocProblem { alpha, v0, ..loose.clone() };
        let st = two_stage(&tight, 1e-12)?;
        for (s, prob) in [(&ts, &loose), (&st, &tight)] {
            let x = s.x.levels();
            let total: f64 = x.iter().sum();
            let var: f64 = x.iter().map(|v| (v - prob.mean_power).powi(2)).sum();
            if rel(total, prob.total_power()) > 1e-9 || x.iter().any(|v| *v < 0.0) || var > prob.v0 * (1.0 + 1e-9) {
                infeasible += 1;
            }
        }
        let (again, _) = stage2_project(&st.x, tight.v0)?;
        if again.levels() != st.x.levels() {
            not_idempotent += 1;
        }
    }
    outcome(
        wf_err <= 1e-6 && infeasible == 0 && not_idempotent == 0,
        format!("max |two_stage - waterfill| = {wf_err:.2e} (<= 1e-6), infeasible {infeasible}/200, non-idempotent {not_idempotent}/100"),
    )
}

// Small problems in the operating regime of the reference preset: Rayleigh
// gains on the 50 dB link, weight spread over [0, 1] and V0 between P^2/4 and 4 P^2.
fn preset_instance(i: u64) -> Result<AllocProblem> {
    let mut rng = substream(60, i);
    let preset = Preset {
        n: 6,
        notches: vec![],
        v0_factor: rng.random_range(0.25..4.0),
        ..Default::default()
    };
    let alpha = rng.random_range(0.0..=1.0);
    Ok(preset.problem(alpha, preset.gains(FastFading::Rayleigh, 600 + i)?))
}

// Harsher family: low per-subcarrier SNR spread over three decades.
fn low_snr_instance(i: u64) -> AllocProblem {
    let mut rng = substream(61, i);
    let alpha = rng.random_range(0.0..=1.0);
    let v0 = rng.random_range(0.2..3.0);
    random_problem(&mut rng, 6, alpha, v0)
}

fn oracle_ratio(p: &AllocProblem) -> Result<f64> {
    Ok(two_stage(p, 1e-12)?.objective / exhaustive_oracle(p, 8)?.objective)
}

fn allocator_optimality() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    let mut worst_low = f64::INFINITY;
    for i in 0..20 {
        worst = worst.min(oracle_ratio(&preset_instance(i)?)?);
        worst_low = worst_low.min(oracle_ratio(&low_snr_instance(i))?);
    }
    let res = solver_campaign(&Preset::default(), FastFading::Rayleigh, 0.5, 1000, 61, 100, 0.5)?;
    let good = res.iter().filter(|c| c.ratio() >= 0.95).count();
    let min_ratio = res.iter().map(|c| c.ratio()).fold(f64::INFINITY, f64::min);
    outcome(
        worst >= 0.97 && good as f64 >= 0.99 * res.len() as f64,
        format!(
            "worst two_stage/oracle over 20 N=6 L=8 preset-regime instances {worst:.4} (>= 0.97); two_stage >= 0.95 pg in {good}/1000 draws (>= 990), min ratio {min_ratio:.4}; informational: low-SNR instances worst {worst_low:.4}"
        ),
    )
}

fn tradeoff_monotone() -> Result<Outcome> {
    let alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let res = tradeoff_campaign(&Preset::default(), FastFading::Rayleigh, &alphas, 200, 70, 1e-12)?;
    let rms: Vec<Vec<f64>> = res.iter().map(|v| v.iter().map(|x| x.rms_bandwidth).collect()).collect();
    let rate: Vec<Vec<f64>> = res.iter().map(|v| v.iter().map(|x| x.sum_rate).collect()).collect();
    let mut bad = Vec::new();
    let mut raw = 0;
    for i in 1..alphas.len() {
        let (rs, rse) = paired_bootstrap_diff(&rms[i - 1], &rms[i], BOOT, 700 + i as u64, mean);
        let (ts, tse) = paired_bootstrap_diff(&rate[i - 1], &rate[i], BOOT, 800 + i as u64, mean);
        raw += (rs > 0.0) as usize + (ts < 0.0) as usize;
        if rs > 1.96 * rse {
            bad.push(format!("rms up at alpha={}", alphas[i]));
        }
        if -ts > 1.96 * tse {
            bad.push(format!("rate down at alpha={}", alphas[i]));
        }
    }
    let pg = pg_tradeoff_violations(&alphas, 10)?;
    outcome(
        bad.is_empty(),
        format!(
            "{raw} raw violations over 20 steps, {} beyond 95% paired bootstrap {:?}; informational: projected-gradient reference has {pg} raw violations on 10 draws",
            bad.len(),
            bad
        ),
    )
}

// Same sweep with the single-stage solver, which handles the variance
// constraint jointly instead of by a radial pull towards flat.
fn pg_tradeoff_violations(alphas: &[f64], draws: u64) -> Result<usize> {
    let preset = Preset::default();
    let mut rms = vec![0.0; alphas.len()];
    let mut rate = vec![0.0; alphas.len()];
    for d in 0..draws {
        let gains = preset.gains(FastFading::Rayleigh, isac_core::rng::derive_seed(70, d))?;
        for (i, a) in alphas.iter().enumerate() {
            let p = preset.problem(*a, gains.clone());
            let s = single_stage_pg(&p, 100, 0.5)?;
            rms[i] += allocation_rms_bandwidth(s.x.levels(), &p.weights);
            rate[i] += sum_rate(s.x.levels(), &p.gains, p.noise_psd, p.bandwidth)?;
        }
    }
    Ok((1..alphas.len()).map(|i| (rms[i] > rms[i - 1]) as usize + (rate[i] < rate[i - 1]) as usize).sum())
}

fn max_gap(slope: f64, bandwidth: f64) -> Result<(f64, bool)> {
    let ds: Vec<f64> = (0..=30).map(|i| 50.0 + 10.0 * i as f64).collect();
    let b = LinkBudget::new(0.2, 50.0, bandwidth, dbm_per_hz_to_watts(-150.0))?.with_slope(slope);
    let rows = se_vs_distance(&b, &ds)?;
    let gap = rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max);
    Ok((gap, rows.iter().all(|r| r.gaussian_se >= r.qpsk_se)))
}

fn se_gap() -> Result<Outcome> {
    let slope = isac_core::channel::PATHLOSS_SLOPE_DB;
    let (lo, ok_lo) = max_gap(slope, 5e8)?;
    let (hi, ok_hi) = max_gap(slope, 4e9)?;
    let mut info = Vec::new();
    for alt in [20.0, 35.0] {
        let (a, _) = max_gap(alt, 5e8)?;
        let (b, _) = max_gap(alt, 4e9)?;
        info.push(format!("{alt} dB/decade {a:.3e}/{b:.3e} = {:.2}", a / b));
    }
    outcome(
        lo / hi >= 5.0 && ok_lo && ok_hi,
        format!(
            "max gap 500 MHz {lo:.4}, 4 GHz {hi:.4}, ratio {:.2} (>= 5), gaussian >= qpsk {}; informational: {}",
            lo / hi,
            ok_lo && ok_hi,
            info.join(", ")
        ),
    )
}

fn imaging() -> Result<Outcome> {
    let g = ImagingGeometry {
        k_grid: 4,
        n_sensors: 4,
        delta_l: 1.0,
        delta_k: 1.0,
    };
    let spans: Vec<usize> = (1..=32).map(|i| 2 * i).collect();
    let snr = imaging_convergence(1, &spans, &g)?;
    let d: Vec<f64> = snr.windows(2).map(|w| rel(w[1], w[0])).collect();
    let last = *d.last().unwrap();
    outcome(
        last < 1e-3,
        format!("final successive rel diff {last:.3e} (< 1e-3), first {:.3e}, snr {:.4} -> {:.4}", d[0], snr[0], snr[snr.len() - 1]),
    )
}

fn time_two_stage(n: usize) -> Result<Duration> {
    let preset = Preset {
        n,
        notches: vec![n / 4, 3 * n / 4],
        notch_width: n as f64 / 32.0,
        ..Default::default()
    };
    let p = preset.problem(0.5, preset.gains(FastFading::Rayleigh, 3)?);
    let reps = (8192 / n).max(4);
    let mut best = Duration::MAX;
    for _ in 0..5 {
        let t = Instant::now();
        for _ in 0..reps {
            std::hint::black_box(two_stage(&p, 1e-9)?);
        }
        best = best.min(t.elapsed() / reps as u32);
    }
    Ok(best)
}

fn complexity() -> Result<Outcome> {
    let preset = Preset::default();
    let p = preset.problem(0.5, preset.gains(FastFading::Rayleigh, 1)?);
    let eps: Vec<f64> = (3..=9).map(|k| 10f64.powi(-k)).collect();
    let its: Vec<f64> = eps
        .iter()
        .map(|e| stage1_waterfill(&p, *e).map(|s| s.iterations as f64))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let (_, _, r2) = linear_fit(&x, &its);
    let ns = [256usize, 1024, 4096];
    let times: Vec<f64> = ns.iter().map(|n| time_two_stage(*n).map(|d| d.as_secs_f64())).collect::<Result<_>>()?;
    let lx: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ly: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let (k, _, _) = linear_fit(&lx, &ly);
    outcome(
        r2 > 0.99 && k < 1.3,
        format!("iterations {:?} R2 {r2:.4} (> 0.99); wall-clock exponent {k:.3} (< 1.3)", its),
    )
}

fn main() {
    type Check = fn() -> Result<Outcome>;
    let checks: [(&str, Check, Option<u64>); 14] = [
        ("isl ordering", isl_ordering, Some(60)),
        ("isl gap", isl_gap, None),
        ("flat psd delta", flat_psd_delta, None),
        ("crb closed form", crb_closed_form, None),
        ("sensing se closed form", sensing_se_closed_form, None),
        ("crb empirical", crb_empirical, Some(120)),
        ("peak sidelobe law", psl_law_check, None),
        ("otfs pilot duality", otfs_duality, None),
        ("allocator correctness", allocator_correctness, None),
        ("allocator optimality", allocator_optimality, Some(300)),
        ("tradeoff monotonicity", tradeoff_monotone, None),
        ("se gap", se_gap, None),
        ("imaging convergence", imaging, None),
        ("complexity", complexity, None),
    ];
    let mut passed = 0;
    for (name, check, limit) in checks {
        let t = Instant::now();
        let res = check();
        let secs = t.elapsed().as_secs_f64();
        let (pass, detail) = match res {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = limit.is_none_or(|l| secs < l as f64);
        let ok = pass && in_time;
        passed += ok as usize;
        let budget = limit.map(|l| format!(", budget {l} s")).unwrap_or_default();
        println!("{} {name}: {detail} [{secs:.1} s{budget}]", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {passed}/{} criteria pass", checks.len());
    if passed < checks.len() && std::env::var("ISAC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
