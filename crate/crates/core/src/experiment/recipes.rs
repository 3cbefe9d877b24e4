use serde_json::{json, Value};

use super::{Cell, Experiment, Params, RunContext, RunError, RunResult, Table};
use crate::allocator::{
    absolute_weights, allocation_rms_bandwidth, solver_campaign, tradeoff_campaign, two_stage, Preset,
};
use crate::channel::FastFading;
use crate::comm::{gap_region, se_vs_distance, sum_rate, LinkBudget};
use crate::ofdm::{random_body, OfdmConfig};
use crate::otfs::{pilot_isl_trials, PilotAxis, PilotIslSetup};
use crate::rng::{derive_seed, substream};
use crate::sensing::{
    crb_monte_carlo, imaging_convergence, isl_gap_curve, isl_slice, ofdm_isl_trials, psl_law, psl_trials,
    CrbSimConfig, ImagingGeometry, IslMode,
};
use crate::signal::{acorr_aperiodic_slice, Constellation, Modulation};
use crate::stats::{bootstrap_se, mean, median, paired_bootstrap_diff, sorted, std_error};

pub static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "isl-cdf",
        summary: "Aperiodic ISL of flat-allocation OFDM bodies for QPSK, 16QAM and 64QAM data.",
        figure: "ISL CDF per constellation",
        default_trials: 1000,
        defaults: isl_cdf_defaults,
        outputs: &[
            ("isl_cdf", "rank, cdf, isl_<modulation> (sorted ISL per constellation)"),
            ("isl_summary", "order, modulation, median, bootstrap_se, mean"),
        ],
        run: isl_cdf,
    },
    Experiment {
        name: "isl-gap",
        summary: "Relative gap between aperiodic and circular ISL on random symbol sequences versus length.",
        figure: "ISL relative error versus number of subcarriers",
        default_trials: 200,
        defaults: isl_gap_defaults,
        outputs: &[(
            "isl_gap",
            "n, mean_rel_err, std_err, rel_err_of_means, mean_rel_err_one_sided, mean_isl_aperiodic, mean_isl_circular",
        )],
        run: isl_gap,
    },
    Experiment {
        name: "otfs-pilot-cdf",
        summary: "Time-domain ISL of OTFS frames with pilots spread along the delay or Doppler axis.",
        figure: "OTFS ISL CDF versus pilot count, delay-axis and Doppler-axis placement",
        default_trials: 500,
        defaults: otfs_defaults,
        outputs: &[
            ("otfs_delay_cdf", "rank, cdf, pilots_<count>"),
            ("otfs_doppler_cdf", "rank, cdf, pilots_<count>"),
            (
                "otfs_pilot_summary",
                "axis_order, axis, pilots, median, bootstrap_se, step_diff, step_se (paired, versus the previous count)",
            ),
        ],
        run: otfs_pilot_cdf,
    },
    Experiment {
        name: "se-vs-distance",
        summary: "Gaussian and QPSK spectral efficiency over distance for each bandwidth under flat power.",
        figure: "spectral efficiency versus distance per bandwidth",
        default_trials: 1,
        defaults: se_defaults,
        outputs: &[
            (
                "se_<bandwidth>mhz",
                "distance, snr_db, gaussian_se, qpsk_se, relative_gap, gaussian_rate, qpsk_rate",
            ),
            ("se_gap_summary", "bandwidth, max_relative_gap, min_se_margin"),
        ],
        run: se_vs_distance_exp,
    },
    Experiment {
        name: "gap-region",
        summary: "Smallest bandwidth at which QPSK is within a relative tolerance of Gaussian signaling.",
        figure: "QPSK-vs-Gaussian gap region surface",
        default_trials: 1,
        defaults: gap_defaults,
        outputs: &[(
            "gap_region",
            "tolerance, power, distance, min_bandwidth (0 when infeasible), feasible",
        )],
        run: gap_region_exp,
    },
    Experiment {
        name: "allocation-demo",
        summary: "Two-stage allocations on the notched reference channel for several weights, with their autocorrelations.",
        figure: "power allocation per subcarrier and autocorrelation in dB",
        default_trials: 1,
        defaults: alloc_defaults,
        outputs: &[
            ("allocation", "subcarrier, gain_db, stage1_alpha_<a>, x_alpha_<a>"),
            ("correlation_db", "lag, corr_db_alpha_<a> (normalized aperiodic autocorrelation)"),
            (
                "allocation_summary",
                "alpha, objective, sum_rate, rms_bandwidth, variance_sum, projected, isl_circular, isl_aperiodic",
            ),
        ],
        run: allocation_demo,
    },
    Experiment {
        name: "tradeoff-sweep",
        summary: "RMS bandwidth and sum rate of the two-stage allocator across the weighting factor.",
        figure: "sensing/communication tradeoff versus weighting factor",
        default_trials: 200,
        defaults: tradeoff_defaults,
        outputs: &[(
            "tradeoff",
            "alpha, lambda_fig, rms_bandwidth_mean, rms_bandwidth_se, sum_rate_mean, sum_rate_se, rms_step, rms_step_se, rate_step, rate_step_se, projected_fraction",
        )],
        run: tradeoff_sweep,
    },
    Experiment {
        name: "solver-compare",
        summary: "Two-stage allocator against the projected-gradient single-stage solver on Rayleigh draws.",
        figure: "two-stage versus single-stage objective",
        default_trials: 1000,
        defaults: solver_defaults,
        outputs: &[
            ("solver_compare", "draw, two_stage_objective, single_stage_objective, ratio, two_stage_projected"),
            ("solver_summary", "draws, fraction_ratio_ge_0_95, mean_ratio, min_ratio"),
        ],
        run: solver_compare,
    },
    Experiment {
        name: "crb-validate",
        summary: "Matched-filter ranging MSE against the Cramér–Rao bound over SNR.",
        figure: "ranging MSE and CRB versus SNR",
        default_trials: 1000,
        defaults: crb_defaults,
        outputs: &[("crb", "snr_db, mse_m2, crb_m2, ratio, ratio_se")],
        run: crb_validate,
    },
    Experiment {
        name: "psl-law",
        summary: "Mean normalized peak sidelobe of random binary codes against sqrt(2 ln N / N).",
        figure: "normalized PSL versus sequence length",
        default_trials: 500,
        defaults: psl_defaults,
        outputs: &[("psl_law", "n, mean_psl, law, ratio, within_band_fraction")],
        run: psl_law_exp,
    },
    Experiment {
        name: "imaging-convergence",
        summary: "Far-field imaging SNR as the number of averaged frequencies grows.",
        figure: "imaging SNR versus frequency span",
        default_trials: 1,
        defaults: imaging_defaults,
        outputs: &[("imaging", "span, snr, rel_diff (relative change from the previous span)")],
        run: imaging_exp,
    },
];

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn bootstrap_count(p: &Params) -> RunResult<usize> {
    let b = p.usize("bootstrap")?;
    if b < 2 {
        return Err(RunError::invalid("`bootstrap` must be at least 2"));
    }
    Ok(b)
}

fn cdf_table(name: &str, labels: &[String], samples: &[Vec<f64>]) -> Table {
    let mut cols = vec!["rank".to_string(), "cdf".to_string()];
    cols.extend(labels.iter().cloned());
    let mut t = Table {
        name: name.to_string(),
        columns: cols,
        rows: Vec::new(),
    };
    let s: Vec<Vec<f64>> = samples.iter().map(|v| sorted(v)).collect();
    let n = s.first().map_or(0, Vec::len);
    for i in 0..n {
        let mut row: Vec<Cell> = vec![(i + 1).into(), ((i + 1) as f64 / n as f64).into()];
        row.extend(s.iter().map(|v| Cell::F(v[i])));
        t.rows.push(row);
    }
    t
}

fn isl_cdf_defaults() -> Params {
    Params::from_pairs(&[
        ("n", json!(1024)),
        ("modulations", json!(["qpsk", "16qam", "64qam"])),
        ("bootstrap", json!(1000)),
    ])
}

fn isl_cdf(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let n = ctx.params.usize("n")?;
    let b = bootstrap_count(&ctx.params)?;
    let mods = ctx
        .params
        .str_list("modulations")?
        .iter()
        .map(|m| Modulation::parse(m).ok_or_else(|| RunError::invalid(format!("unknown modulation `{m}`"))))
        .collect::<RunResult<Vec<_>>>()?;
    let mut samples = Vec::new();
    let mut summary = Table::new("isl_summary", &["order", "modulation", "median", "bootstrap_se", "mean"]);
    for (j, m) in mods.iter().enumerate() {
        let s = derive_seed(ctx.seed, j as u64 + 1);
        let v = ofdm_isl_trials(n, *m, ctx.trials, s)?;
        summary.push(vec![
            j.into(),
            m.name().into(),
            median(&v).into(),
            bootstrap_se(&v, b, s, median).into(),
            mean(&v).into(),
        ]);
        samples.push(v);
    }
    let labels: Vec<String> = mods.iter().map(|m| format!("isl_{}", m.name())).collect();
    Ok(vec![cdf_table("isl_cdf", &labels, &samples), summary])
}

fn isl_gap_defaults() -> Params {
    Params::from_pairs(&[
        ("ns", json!([16, 32, 64, 128, 256, 512, 1024, 2048, 4096])),
        ("modulation", json!("qpsk")),
    ])
}

fn isl_gap(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let mut ns = ctx.params.usize_list("ns")?;
    ns.sort_unstable();
    let m = ctx.params.str("modulation")?;
    let m = Modulation::parse(&m).ok_or_else(|| RunError::invalid(format!("unknown modulation `{m}`")))?;
    let rows = isl_gap_curve(&ns, ctx.trials, &Constellation::new(m), ctx.seed)?;
    let mut t = Table::new(
        "isl_gap",
        &[
            "n",
            "mean_rel_err",
            "std_err",
            "rel_err_of_means",
            "mean_rel_err_one_sided",
            "mean_isl_aperiodic",
            "mean_isl_circular",
        ],
    );
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.mean_rel_err.into(),
            r.std_err.into(),
            r.rel_err_of_means.into(),
            r.mean_rel_err_one_sided.into(),
            r.mean_isl_aperiodic.into(),
            r.mean_isl_circular.into(),
        ]);
    }
    Ok(vec![t])
}

fn otfs_defaults() -> Params {
    Params::from_pairs(&[
        ("m_tau", json!(80)),
        ("n_nu", json!(80)),
        ("subcarrier_spacing", json!(2.5e6)),
        ("pilots", json!([1, 10, 20, 40])),
        ("e_s", json!(1.0)),
        ("e_p", json!(0.15)),
        ("bootstrap", json!(1000)),
    ])
}

fn otfs_pilot_cdf(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let p = &ctx.params;
    let setup = PilotIslSetup {
        m_tau: p.usize("m_tau")?,
        n_nu: p.usize("n_nu")?,
        subcarrier_spacing: p.f64("subcarrier_spacing")?,
        e_s: p.f64("e_s")?,
        e_p: p.f64("e_p")?,
    };
    let mut counts = p.usize_list("pilots")?;
    counts.sort_unstable();
    let b = bootstrap_count(p)?;
    let labels: Vec<String> = counts.iter().map(|c| format!("pilots_{c}")).collect();
    let mut summary = Table::new(
        "otfs_pilot_summary",
        &["axis_order", "axis", "pilots", "median", "bootstrap_se", "step_diff", "step_se"],
    );
    let mut out = Vec::new();
    for (ai, axis) in [PilotAxis::Delay, PilotAxis::Doppler].into_iter().enumerate() {
        let v = pilot_isl_trials(&setup, axis, &counts, ctx.trials, ctx.seed)?;
        for (k, c) in counts.iter().enumerate() {
            let bs = derive_seed(ctx.seed, (ai * 1000 + k) as u64);
            let (diff, se) = if k == 0 {
                (0.0, 0.0)
            } else {
                paired_bootstrap_diff(&v[k - 1], &v[k], b, bs, median)
            };
            summary.push(vec![
                ai.into(),
                axis.name().into(),
                (*c).into(),
                median(&v[k]).into(),
                bootstrap_se(&v[k], b, bs, median).into(),
                diff.into(),
                se.into(),
            ]);
        }
        out.push(cdf_table(&format!("otfs_{}_cdf", axis.name()), &labels, &v));
    }
    out.push(summary);
    Ok(out)
}

fn se_defaults() -> Params {
    Params::from_pairs(&[
        ("tx_power", json!(0.2)),
        ("noise_dbm_hz", json!(-150.0)),
        ("bandwidths", json!([5e8, 4e9])),
        ("d_min", json!(50.0)),
        ("d_max", json!(350.0)),
        ("d_step", json!(10.0)),
        ("pathloss_slope", json!(crate::channel::PATHLOSS_SLOPE_DB)),
    ])
}

fn grid(min: f64, max: f64, step: f64) -> RunResult<Vec<f64>> {
    if !(step > 0.0) || !(max >= min) {
        return Err(RunError::invalid("grid needs step > 0 and max >= min"));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| min + i as f64 * step).collect())
}

fn se_vs_distance_exp(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let p = &ctx.params;
    let ds = grid(p.f64("d_min")?, p.f64("d_max")?, p.f64("d_step")?)?;
    let n0 = crate::dbm_per_hz_to_watts(p.f64("noise_dbm_hz")?);
    let slope = p.f64("pathloss_slope")?;
    let mut bws = p.f64_list("bandwidths")?;
    bws.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut summary = Table::new("se_gap_summary", &["bandwidth", "max_relative_gap", "min_se_margin"]);
    for b in bws {
        let budget = LinkBudget::new(p.f64("tx_power")?, ds[0], b, n0)?.with_slope(slope);
        let rows = se_vs_distance(&budget, &ds)?;
        let mut t = Table::new(
            &format!("se_{}mhz", fmt_num(b / 1e6)),
            &["distance", "snr_db", "gaussian_se", "qpsk_se", "relative_gap", "gaussian_rate", "qpsk_rate"],
        );
        for r in &rows {
            t.push(vec![
                r.distance.into(),
                r.snr_db.into(),
                r.gaussian_se.into(),
                r.qpsk_se.into(),
                r.relative_gap.into(),
                r.gaussian_rate.into(),
                r.qpsk_rate.into(),
            ]);
        }
        summary.push(vec![
            b.into(),
            rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max).into(),
            rows.iter().map(|r| r.gaussian_se - r.qpsk_se).fold(f64::INFINITY, f64::min).into(),
        ]);
        out.push(t);
    }
    out.push(summary);
    Ok(out)
}

fn gap_defaults() -> Params {
    Params::from_pairs(&[
        ("p_min", json!(0.01)),
        ("p_max", json!(0.2)),
        ("p_step", json!(0.01)),
        ("d_min", json!(50.0)),
        ("d_max", json!(350.0)),
        ("d_step", json!(10.0)),
        ("bw_min", json!(1e8)),
        ("bw_max", json!(4e9)),
        ("bw_points", json!(60)),
        ("tolerances", json!([1e-4, 1e-3, 1e-2])),
        ("noise_dbm_hz", json!(-150.0)),
        ("pathloss_slope", json!(crate::channel::PATHLOSS_SLOPE_DB)),
    ])
}

fn gap_region_exp(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let p = &ctx.params;
    let powers = grid(p.f64("p_min")?, p.f64("p_max")?, p.f64("p_step")?)?;
    let ds = grid(p.f64("d_min")?, p.f64("d_max")?, p.f64("d_step")?)?;
    let (lo, hi, k) = (p.f64("bw_min")?, p.f64("bw_max")?, p.usize("bw_points")?);
    if !(lo > 0.0 && hi > lo && k >= 2) {
        return Err(RunError::invalid("bandwidth grid needs 0 < bw_min < bw_max and bw_points >= 2"));
    }
    let bws: Vec<f64> = (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect();
    let n0 = crate::dbm_per_hz_to_watts(p.f64("noise_dbm_hz")?);
    let slope = p.f64("pathloss_slope")?;
    let mut tols = p.f64_list("tolerances")?;
    tols.sort_by(f64::total_cmp);
    let mut t = Table::new("gap_region", &["tolerance", "power", "distance", "min_bandwidth", "feasible"]);
    for v in tols {
        for r in gap_region(&powers, &ds, &bws, v, n0, slope)? {
            t.push(vec![r.tolerance.into(), r.power.into(), r.distance.into(), r.min_bandwidth.into(), r.feasible.into()]);
        }
    }
    Ok(vec![t])
}

fn preset_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("n", json!(1024)),
        ("bandwidth", json!(1e9)),
        ("total_power", json!(0.2)),
        ("attenuation_db", json!(50.0)),
        ("noise_dbm_hz", json!(-150.0)),
        ("notches", json!([260, 760])),
        ("notch_depth_db", json!(20.0)),
        ("notch_width", json!(32.0)),
        ("v0_factor", json!(1.0)),
    ]
}

fn preset_from(p: &Params) -> RunResult<Preset> {
    let preset = Preset {
        n: p.usize("n")?,
        bandwidth: p.f64("bandwidth")?,
        total_power: p.f64("total_power")?,
        attenuation_db: p.f64("attenuation_db")?,
        noise_psd: crate::dbm_per_hz_to_watts(p.f64("noise_dbm_hz")?),
        notches: p.usize_list("notches")?,
        notch_depth_db: p.f64("notch_depth_db")?,
        notch_width: p.f64("notch_width")?,
        v0_factor: p.f64("v0_factor")?,
    };
    if preset.n < 2 {
        return Err(RunError::invalid("`n` must be at least 2"));
    }
    Ok(preset)
}

fn fading_from(p: &Params) -> RunResult<FastFading> {
    match p.str("fading")?.as_str() {
        "none" => Ok(FastFading::None),
        "rayleigh" => Ok(FastFading::Rayleigh),
        other => Err(RunError::invalid(format!("`fading` must be none or rayleigh, got `{other}`"))),
    }
}

fn alloc_defaults() -> Params {
    let mut v = preset_defaults();
    v.extend([
        ("alphas", json!([1.0, 0.5, 0.0])),
        ("fading", json!("none")),
        ("eps", json!(1e-12)),
        ("frequency_reference", json!("baseband")),
        ("carrier_hz", json!(28e9)),
    ]);
    Params::from_pairs(&v)
}

fn allocation_demo(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let p = &ctx.params;
    let preset = preset_from(p)?;
    let fading = fading_from(p)?;
    let eps = p.f64("eps")?;
    let alphas = p.f64_list("alphas")?;
    let gains = preset.gains(fading, derive_seed(ctx.seed, 1))?;
    let absolute = match p.str("frequency_reference")?.as_str() {
        "baseband" => false,
        "absolute" => true,
        other => return Err(RunError::invalid(format!("`frequency_reference` must be baseband or absolute, got `{other}`"))),
    };
    let n = preset.n;
    let cfg = OfdmConfig::new(n, preset.bandwidth / n as f64, preset.total_power, Constellation::qpsk())?;
    let data_seed = derive_seed(ctx.seed, 2);

    let mut cols = vec!["subcarrier".to_string(), "gain_db".to_string()];
    let mut corr_cols = vec!["lag".to_string()];
    let mut stage1 = Vec::new();
    let mut finals = Vec::new();
    let mut corrs = Vec::new();
    let mut summary = Table::new(
        "allocation_summary",
        &["alpha", "objective", "sum_rate", "rms_bandwidth", "variance_sum", "projected", "isl_circular", "isl_aperiodic"],
    );
    let mut order: Vec<usize> = (0..alphas.len()).collect();
    order.sort_by(|a, b| alphas[*b].total_cmp(&alphas[*a]));
    for &i in &order {
        let a = alphas[i];
        let mut prob = preset.problem(a, gains.clone());
        if absolute {
            prob.weights = absolute_weights(n, preset.bandwidth, p.f64("carrier_hz")?);
        }
        let s = two_stage(&prob, eps)?;
        let body = random_body(&cfg, &s.x, &mut substream(data_seed, 0))?;
        let r = acorr_aperiodic_slice(&body);
        let r0 = r[0].norm();
        corrs.push(r.iter().map(|v| 20.0 * (v.norm() / r0).max(1e-10).log10()).collect::<Vec<_>>());
        summary.push(vec![
            a.into(),
            s.objective.into(),
            sum_rate(s.x.levels(), &prob.gains, prob.noise_psd, prob.bandwidth)?.into(),
            allocation_rms_bandwidth(s.x.levels(), &prob.weights).into(),
            s.x.variance_sum().into(),
            s.projected.into(),
            isl_slice(&body, IslMode::Circular)?.into(),
            isl_slice(&body, IslMode::Aperiodic)?.into(),
        ]);
        cols.push(format!("stage1_alpha_{}", fmt_num(a)));
        cols.push(format!("x_alpha_{}", fmt_num(a)));
        corr_cols.push(format!("corr_db_alpha_{}", fmt_num(a)));
        stage1.push(s.stage1_x);
        finals.push(s.x);
    }
    let mut alloc = Table {
        name: "allocation".into(),
        columns: cols,
        rows: Vec::new(),
    };
    for k in 0..n {
        let mut row: Vec<Cell> = vec![k.into(), (10.0 * gains[k].log10()).into()];
        for (s1, x) in stage1.iter().zip(&finals) {
            row.push(s1.levels()[k].into());
            row.push(x.levels()[k].into());
        }
        alloc.rows.push(row);
    }
    let mut corr = Table {
        name: "correlation_db".into(),
        columns: corr_cols,
        rows: Vec::new(),
    };
    for l in 0..n {
        let mut row: Vec<Cell> = vec![l.into()];
        row.extend(corrs.iter().map(|c| Cell::F(c[l])));
        corr.rows.push(row);
    }
    summary.rows.reverse();
    Ok(vec![alloc, corr, summary])
}

fn tradeoff_defaults() -> Params {
    let mut v = preset_defaults();
    v.extend([
        ("alphas", json!([0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])),
        ("fading", json!("rayleigh")),
        ("eps", json!(1e-12)),
        ("bootstrap", json!(1000)),
    ]);
    Params::from_pairs(&v)
}

fn tradeoff_sweep(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let p = &ctx.params;
    let preset = preset_from(p)?;
    let mut alphas = p.f64_list("alphas")?;
    alphas.sort_by(f64::total_cmp);
    let b = bootstrap_count(p)?;
    let res = tradeoff_campaign(&preset, fading_from(p)?, &alphas, ctx.trials, ctx.seed, p.f64("eps")?)?;
    let mut t = Table::new(
        "tradeoff",
        &[
            "alpha",
            "lambda_fig",
            "rms_bandwidth_mean",
            "rms_bandwidth_se",
            "sum_rate_mean",
            "sum_rate_se",
            "rms_step",
            "rms_step_se",
            "rate_step",
            "rate_step_se",
            "projected_fraction",
        ],
    );
    let rms: Vec<Vec<f64>> = res.iter().map(|v| v.iter().map(|x| x.rms_bandwidth).collect()).collect();
    let rate: Vec<Vec<f64>> = res.iter().map(|v| v.iter().map(|x| x.sum_rate).collect()).collect();
    for (i, a) in alphas.iter().enumerate() {
        let (rs, rse, ts, tse) = if i == 0 {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let bs = derive_seed(ctx.seed, 5000 + i as u64);
            let (rs, rse) = paired_bootstrap_diff(&rms[i - 1], &rms[i], b, bs, mean);
            let (ts, tse) = paired_bootstrap_diff(&rate[i - 1], &rate[i], b, bs, mean);
            (rs, rse, ts, tse)
        };
        let proj = res[i].iter().filter(|x| x.projected).count() as f64 / res[i].len() as f64;
        t.push(vec![
            (*a).into(),
            (1.0 - a).into(),
            mean(&rms[i]).into(),
            std_error(&rms[i]).into(),
            mean(&rate[i]).into(),
            std_error(&rate[i]).into(),
            rs.into(),
            rse.into(),
            ts.into(),
            tse.into(),
            proj.into(),
        ]);
    }
    Ok(vec![t])
}

fn solver_defaults() -> Params {
    let mut v = preset_defaults();
    v.extend([
        ("alpha", json!(0.5)),
        ("fading", json!("rayleigh")),
        ("pg_steps", json!(100)),
        ("pg_step", json!(0.5)),
    ]);
    Params::from_pairs(&v)
}

fn solver_compare(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let p = &ctx.params;
    let preset = preset_from(p)?;
    let res = solver_campaign(
        &preset,
        fading_from(p)?,
        p.f64("alpha")?,
        ctx.trials,
        ctx.seed,
        p.usize("pg_steps")?,
        p.f64("pg_step")?,
    )?;
    let mut t = Table::new(
        "solver_compare",
        &["draw", "two_stage_objective", "single_stage_objective", "ratio", "two_stage_projected"],
    );
    for (d, r) in res.iter().enumerate() {
        t.push(vec![d.into(), r.two_stage.into(), r.single_stage.into(), r.ratio().into(), r.two_stage_projected.into()]);
    }
    let ratios: Vec<f64> = res.iter().map(|r| r.ratio()).collect();
    let mut s = Table::new("solver_summary", &["draws", "fraction_ratio_ge_0_95", "mean_ratio", "min_ratio"]);
    s.push(vec![
        res.len().into(),
        (ratios.iter().filter(|r| **r >= 0.95).count() as f64 / ratios.len() as f64).into(),
        mean(&ratios).into(),
        ratios.iter().copied().fold(f64::INFINITY, f64::min).into(),
    ]);
    Ok(vec![t, s])
}

fn crb_defaults() -> Params {
    Params::from_pairs(&[
        ("snr_db", json!([10.0, 15.0, 20.0, 25.0, 30.0])),
        ("n", json!(64)),
        ("bandwidth_hz", json!(1e9)),
        ("upsample", json!(32)),
        ("base_delay", json!(5)),
        ("attenuation", json!(1.0)),
    ])
}

fn crb_validate(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let p = &ctx.params;
    let mut snrs = p.f64_list("snr_db")?;
    snrs.sort_by(f64::total_cmp);
    let mut t = Table::new("crb", &["snr_db", "mse_m2", "crb_m2", "ratio", "ratio_se"]);
    for (i, s) in snrs.iter().enumerate() {
        let r = crb_monte_carlo(&CrbSimConfig {
            n: p.usize("n")?,
            bandwidth_hz: p.f64("bandwidth_hz")?,
            snr_db: *s,
            attenuation: p.f64("attenuation")?,
            upsample: p.usize("upsample")?,
            base_delay: p.usize("base_delay")?,
            trials: ctx.trials,
            seed: derive_seed(ctx.seed, i as u64),
        })?;
        t.push(vec![r.snr_db.into(), r.mse.into(), r.crb.into(), r.ratio.into(), r.ratio_se.into()]);
    }
    Ok(vec![t])
}

fn psl_defaults() -> Params {
    Params::from_pairs(&[("ns", json!([256, 1024, 4096, 16384]))])
}

fn psl_law_exp(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let mut ns = ctx.params.usize_list("ns")?;
    ns.sort_unstable();
    if ns.iter().any(|n| *n < 2) {
        return Err(RunError::invalid("sequence lengths must be at least 2"));
    }
    let mut t = Table::new("psl_law", &["n", "mean_psl", "law", "ratio", "within_band_fraction"]);
    for n in ns {
        let v = psl_trials(n, ctx.trials, derive_seed(ctx.seed, n as u64));
        let law = psl_law(n);
        let m = mean(&v);
        let inside = v.iter().filter(|x| (0.7 * law..=1.3 * law).contains(*x)).count() as f64 / v.len() as f64;
        t.push(vec![n.into(), m.into(), law.into(), (m / law).into(), inside.into()]);
    }
    Ok(vec![t])
}

fn imaging_defaults() -> Params {
    Params::from_pairs(&[
        ("k_grid", json!(4)),
        ("n_sensors", json!(4)),
        ("delta_l", json!(1.0)),
        ("delta_k", json!(1.0)),
        ("k1", json!(1)),
        ("spans", json!((1..=32).map(|i| 2 * i).collect::<Vec<_>>())),
    ])
}

fn imaging_exp(ctx: &RunContext) -> RunResult<Vec<Table>> {
    let p = &ctx.params;
    let g = ImagingGeometry {
        k_grid: p.usize("k_grid")?,
        n_sensors: p.usize("n_sensors")?,
        delta_l: p.f64("delta_l")?,
        delta_k: p.f64("delta_k")?,
    };
    let mut spans = p.usize_list("spans")?;
    spans.sort_unstable();
    let snr = imaging_convergence(p.usize("k1")?, &spans, &g)?;
    let mut t = Table::new("imaging", &["span", "snr", "rel_diff"]);
    for (i, (s, v)) in spans.iter().zip(&snr).enumerate() {
        let d = if i == 0 { 0.0 } else { (v - snr[i - 1]).abs() / snr[i - 1] };
        t.push(vec![(*s).into(), (*v).into(), d.into()]);
    }
    Ok(vec![t])
}
