use std::f64::consts::{PI, TAU};
use std::fs::{self, File};
use std::path::Path;

use pcgmub_core::angle::{RotationAngle, ANGLE_EPSILON};
use pcgmub_core::config::RunConfig;
use pcgmub_core::mub::{
    check_pair as check_mub_pair, is_valid_m, m_star, search_quadruples as search, MubConfig,
    PairReport, QuadrupleSearch, DEFAULT_M_TOLERANCE,
};
use pcgmub_core::optics::{
    compose_stages, frft_lens_distance, lens_angle, parse_stages, period_table, scaling_factor,
    write_period_csv, BenchSpec, Composition, PeriodRow, Stage,
};
use pcgmub_core::reference::{kl_exceedance, PERIOD_TABLE, PERIOD_TOLERANCE};
use pcgmub_core::scenario::{
    simulate_alpha23, simulate_mub_pair, simulate_pair, simulate_triple, symmetric_period,
    Alpha23Sweep, PairOutcome, SimulationSettings, ALPHA23_WIDTHS,
};
use pcgmub_core::stats::{
    exceedance_fraction, kl_histogram as histogram, random_kl_baseline, write_histogram_csv,
    HISTOGRAM_BINS,
};
use serde::Serialize;

use crate::output::{emit, emit_with, summary, write_csv, write_json};
use crate::{
    BenchArgs, CheckPairArgs, Failure, KlArgs, Mode, OpticsArgs, SearchArgs, SimulateArgs,
    TripleArgs,
};

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn bench_from(cfg: &RunConfig, args: &BenchArgs) -> Result<BenchSpec, Failure> {
    let mut bench = BenchSpec::default();
    if let Some(p) = args.pixel.or(cfg.pixel_um) {
        bench.pixel = p * 1e-6;
    }
    if let Some(w) = args.wavelength.or(cfg.wavelength_nm) {
        bench.wavelength = w * 1e-9;
    }
    if let Some(f) = args.focal.or(cfg.focal_mm) {
        bench.focal_length = f * 1e-3;
    }
    if let Some(t) = args.theta.or(cfg.theta) {
        bench.angle = RotationAngle::from_radians(t);
    }
    bench.validate().map_err(|e| usage(e.to_string()))?;
    Ok(bench)
}

fn settings(cfg: &RunConfig) -> SimulationSettings {
    SimulationSettings {
        n_points: cfg.grid_n,
        half_extent: cfg.extent,
        ..SimulationSettings::default()
    }
}

#[derive(Serialize)]
struct PeriodReport<'a> {
    rows: &'a [PeriodRow],
    /// `None` when the bench differs from the reference one.
    golden_match: Option<bool>,
    mismatches: Vec<usize>,
}

pub fn replay_periods(cfg: &RunConfig, args: &BenchArgs) -> Result<(), Failure> {
    let bench = bench_from(cfg, args)?;
    let rows = period_table(&bench, 2..=10)?;
    let compare = bench == BenchSpec::default();
    let mismatches: Vec<usize> = if compare {
        rows.iter()
            .zip(PERIOD_TABLE)
            .filter(|(r, g)| {
                r.d != g.0
                    || (r.t_um - g.1).abs() > PERIOD_TOLERANCE
                    || (r.t_over_l - g.2).abs() > PERIOD_TOLERANCE
                    || r.t_exp_um != g.3
            })
            .map(|(r, _)| r.d)
            .collect()
    } else {
        Vec::new()
    };
    let report = PeriodReport {
        rows: &rows,
        golden_match: compare.then_some(mismatches.is_empty()),
        mismatches: mismatches.clone(),
    };
    let mut lines = vec![format!(
        "scaling factor {:.3} um, pixel {} um",
        bench.scaling_factor()? * 1e6,
        bench.pixel * 1e6
    )];
    lines.extend(rows.iter().map(|r| {
        format!(
            "d={:<2} T={:>7.1} um  T/l={:>5.1}  T_exp={} um",
            r.d, r.t_um, r.t_over_l, r.t_exp_um
        )
    }));
    lines.push(match report.golden_match {
        Some(true) => "all rows match the reference table".into(),
        Some(false) => format!("rows differing from the reference table: {mismatches:?}"),
        None => "non-default bench, no reference comparison".into(),
    });
    emit_with(
        cfg,
        &report,
        |w| write_period_csv(&rows, w).map_err(|e| Failure::Io(e.to_string())),
        &lines,
    )?;
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} rows mismatch",
            mismatches.len()
        )))
    }
}

#[derive(Serialize)]
struct OutcomeRow {
    d: usize,
    theta_prime: f64,
    theta: f64,
    t_prep: f64,
    t_meas: f64,
    m_star: f64,
    k0: usize,
    max_deviation: f64,
    kl_bits: f64,
    probabilities: String,
}

impl From<&PairOutcome> for OutcomeRow {
    fn from(o: &PairOutcome) -> Self {
        Self {
            d: o.d,
            theta_prime: o.theta_prime,
            theta: o.theta,
            t_prep: o.t_prep,
            t_meas: o.t_meas,
            m_star: o.m_star,
            k0: o.k0,
            max_deviation: o.max_deviation,
            kl_bits: o.kl_bits,
            probabilities: o
                .probabilities
                .iter()
                .map(|p| format!("{p:.9}"))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

#[derive(Serialize)]
struct SimulationReport {
    mode: &'static str,
    tol: f64,
    passed: Option<bool>,
    outcomes: Vec<PairOutcome>,
}

fn outcome_line(o: &PairOutcome) -> String {
    format!(
        "d={} {:.2}deg -> {:.2}deg k0={} max|p-1/d|={:.2e} KL={:.2e} bits",
        o.d,
        o.theta_prime.to_degrees(),
        o.theta.to_degrees(),
        o.k0,
        o.max_deviation,
        o.kl_bits
    )
}

fn bins(d: usize, k0: Option<usize>) -> Result<Vec<usize>, Failure> {
    match k0 {
        Some(k) if k >= d => Err(usage(format!("k0 = {k} out of range for d = {d}"))),
        Some(k) => Ok(vec![k]),
        None => Ok((0..d).collect()),
    }
}

fn check_d(d: usize) -> Result<usize, Failure> {
    if d < 2 {
        Err(usage(format!("d = {d}, need d >= 2")))
    } else {
        Ok(d)
    }
}

pub fn simulate_mub(cfg: &RunConfig, args: &SimulateArgs) -> Result<(), Failure> {
    let k0 = args.k0.or(cfg.k0);
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-2);
    let st = settings(cfg);
    match args.mode {
        Mode::Pair => {
            let d = check_d(args.d.or(cfg.d).unwrap_or(2))?;
            let theta = RotationAngle::from_radians(args.theta.or(cfg.theta).unwrap_or(TAU / 3.0));
            let theta_prime =
                RotationAngle::from_radians(args.theta_prime.or(cfg.theta_prime).unwrap_or(0.0));
            let m = args.m.or(cfg.m).unwrap_or(1);
            let delta = theta - theta_prime;
            let mut outcomes = Vec::new();
            let mut failures = 0;
            let mut checked = true;
            for k in bins(d, k0)? {
                let o = if delta.is_degenerate(ANGLE_EPSILON) {
                    // same or opposite direction: the prepared bin must be certain
                    let t = args.t_prep.unwrap_or_else(|| (TAU * d as f64).sqrt());
                    let o = simulate_pair(d, theta_prime, theta, t, t, k, &st)?;
                    let want = if delta.is_zero(ANGLE_EPSILON) {
                        k
                    } else {
                        (d - k) % d
                    };
                    if (o.probabilities[want] - 1.0).abs() > 1e-3 {
                        failures += 1;
                    }
                    o
                } else if is_valid_m(m, d) {
                    let o = simulate_mub_pair(d, theta_prime, theta, m, k, args.t_prep, &st)?;
                    if o.max_deviation > tol {
                        failures += 1;
                    }
                    o
                } else if args.allow_excluded {
                    checked = false;
                    let t = args
                        .t_prep
                        .unwrap_or_else(|| symmetric_period(d, delta, m as f64));
                    let t_meas = TAU * d as f64 * delta.sin().abs() / (m as f64 * t);
                    simulate_pair(d, theta_prime, theta, t, t_meas, k, &st)?
                } else {
                    return Err(usage(format!(
                        "m = {m} is excluded for d = {d}; pass --allow-excluded to simulate it"
                    )));
                };
                outcomes.push(o);
            }
            finish_simulation(cfg, "pair", tol, checked, failures, outcomes)
        }
        Mode::Triple => {
            let d = check_d(args.d.or(cfg.d).unwrap_or(7))?;
            let mut outcomes = Vec::new();
            for k in bins(d, k0)? {
                outcomes.extend(simulate_triple(d, k, &st)?);
            }
            let failures = outcomes.iter().filter(|o| o.max_deviation > tol).count();
            finish_simulation(cfg, "triple", tol, true, failures, outcomes)
        }
        Mode::Alpha23 => {
            let ds: Vec<usize> = match args.d.or(cfg.d) {
                Some(d) => vec![check_d(d)?],
                None => (2..=10).collect(),
            };
            let widths = args
                .widths
                .clone()
                .unwrap_or_else(|| ALPHA23_WIDTHS.to_vec());
            if widths.is_empty() || widths.contains(&0) {
                return Err(usage("bin widths must be positive"));
            }
            let kl_tol = args.tol.or(cfg.tol).unwrap_or(0.05);
            let sweeps = ds
                .iter()
                .map(|&d| simulate_alpha23(d, &widths, cfg.grid_n))
                .collect::<Result<Vec<_>, _>>()?;
            alpha23_report(cfg, kl_tol, &sweeps)
        }
    }
}

fn finish_simulation(
    cfg: &RunConfig,
    mode: &'static str,
    tol: f64,
    checked: bool,
    failures: usize,
    outcomes: Vec<PairOutcome>,
) -> Result<(), Failure> {
    let rows: Vec<OutcomeRow> = outcomes.iter().map(OutcomeRow::from).collect();
    let mut lines: Vec<String> = outcomes.iter().map(outcome_line).collect();
    let passed = checked.then_some(failures == 0);
    lines.push(match passed {
        Some(true) => format!("all {} runs within tolerance", outcomes.len()),
        Some(false) => format!("{failures} of {} runs outside tolerance", outcomes.len()),
        None => "excluded m: no uniformity check".into(),
    });
    let report = SimulationReport {
        mode,
        tol,
        passed,
        outcomes,
    };
    emit(cfg, &report, &rows, &lines)?;
    if passed == Some(false) {
        Err(Failure::Check(format!("{failures} runs outside tolerance")))
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct WidthRow {
    d: usize,
    alpha_degrees: f64,
    bin_width_px: u32,
    t_prep: f64,
    t_meas: f64,
    max_kl_bits: f64,
    mean_kl_bits: f64,
    max_deviation: f64,
    error: String,
}

fn alpha23_report(cfg: &RunConfig, kl_tol: f64, sweeps: &[Alpha23Sweep]) -> Result<(), Failure> {
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut failures = 0;
    for s in sweeps {
        lines.push(format!(
            "d={} alpha={:.3}deg (axis flipped: {}) delta={:.2} um",
            s.d, s.alpha_degrees, s.axis_flipped, s.delta_um
        ));
        // only the larger half of the widths is held to the bound
        let mut sorted: Vec<u32> = s.widths.iter().map(|w| w.bin_width_px).collect();
        sorted.sort_unstable();
        let cutoff = sorted[sorted.len() / 2];
        for w in &s.widths {
            let bad = w.bin_width_px >= cutoff && (w.error.is_some() || w.max_kl_bits >= kl_tol);
            failures += usize::from(bad);
            lines.push(match &w.error {
                Some(e) => format!("  {:>3} px: skipped ({e})", w.bin_width_px),
                None => format!(
                    "  {:>3} px: max KL {:.2e} bits, max|p-1/d| {:.2e}",
                    w.bin_width_px, w.max_kl_bits, w.max_deviation
                ),
            });
            rows.push(WidthRow {
                d: s.d,
                alpha_degrees: s.alpha_degrees,
                bin_width_px: w.bin_width_px,
                t_prep: w.t_prep,
                t_meas: w.t_meas,
                max_kl_bits: w.max_kl_bits,
                mean_kl_bits: w.mean_kl_bits,
                max_deviation: w.max_deviation,
                error: w.error.clone().unwrap_or_default(),
            });
        }
    }
    lines.push(if failures == 0 {
        format!("large bin widths below {kl_tol} bits")
    } else {
        format!("{failures} large-width runs at or above {kl_tol} bits")
    });
    emit(cfg, &sweeps, &rows, &lines)?;
    if failures == 0 {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{failures} large-width runs above tolerance"
        )))
    }
}

#[derive(Debug, Serialize)]
struct KlRow {
    d: usize,
    samples: usize,
    simulated_max_kl: f64,
    exceedance: f64,
    reference: Option<f64>,
    passed: bool,
}

pub const SIMULATED_KL_LIMIT: f64 = 0.01;

pub fn kl_histogram(cfg: &RunConfig, args: &KlArgs) -> Result<(), Failure> {
    let samples = cfg.samples.unwrap_or(100_000);
    let samples = args.samples.unwrap_or(samples);
    if samples < 1000 {
        return Err(usage("samples must be at least 1000"));
    }
    if args.d_min < 2 || args.d_max < args.d_min {
        return Err(usage(format!(
            "bad dimension range {}..={}",
            args.d_min, args.d_max
        )));
    }
    let dir = cfg.out.as_deref();
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let st = settings(cfg);
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for d in args.d_min..=args.d_max {
        let mut simulated = Vec::new();
        for k in 0..d {
            simulated.extend(simulate_triple(d, k, &st)?);
        }
        let sim_max = simulated.iter().map(|o| o.kl_bits).fold(0.0, f64::max);
        let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(d as u64);
        let baseline = random_kl_baseline(d, samples, seed)?;
        let exceedance = exceedance_fraction(&baseline, sim_max)?;
        let reference = kl_exceedance(d);
        let passed = sim_max < SIMULATED_KL_LIMIT && reference.is_none_or(|r| exceedance >= r);
        if let Some(dir) = dir {
            let hist = histogram(&baseline, d, HISTOGRAM_BINS)?;
            let f = File::create(dir.join(format!("kl_hist_d{d}.csv")))?;
            write_histogram_csv(&hist, f).map_err(|e| Failure::Io(e.to_string()))?;
            let sim_rows: Vec<OutcomeRow> = simulated.iter().map(OutcomeRow::from).collect();
            write_csv(
                File::create(dir.join(format!("kl_simulated_d{d}.csv")))?,
                &sim_rows,
            )?;
        }
        lines.push(format!(
            "d={d:<2} simulated max KL {sim_max:.2e} bits, exceedance {:.4}{}{}",
            exceedance,
            reference
                .map(|r| format!(" (reference {r})"))
                .unwrap_or_default(),
            if passed { "" } else { "  FAIL" }
        ));
        rows.push(KlRow {
            d,
            samples,
            simulated_max_kl: sim_max,
            exceedance,
            reference,
            passed,
        });
    }
    match dir {
        Some(dir) => {
            write_report(cfg, &dir.join("report"), &rows)?;
            summary(cfg, &lines);
        }
        None => emit(cfg, &rows, &rows, &lines)?,
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{failed} dimensions below reference"
        )))
    }
}

fn write_report(cfg: &RunConfig, stem: &Path, rows: &[KlRow]) -> Result<(), Failure> {
    match cfg.format {
        pcgmub_core::config::OutputFormat::Json => {
            write_json(File::create(stem.with_extension("json"))?, &rows)
        }
        pcgmub_core::config::OutputFormat::Csv => {
            write_csv(File::create(stem.with_extension("csv"))?, rows)
        }
    }
}

#[derive(Serialize)]
struct PairCheck {
    t: f64,
    t_prime: f64,
    theta: f64,
    d: usize,
    tol: f64,
    m_star: f64,
    m: Option<u64>,
}

pub fn check_pair(cfg: &RunConfig, args: &CheckPairArgs) -> Result<(), Failure> {
    let tol = args.tol.or(cfg.tol).unwrap_or(DEFAULT_M_TOLERANCE);
    check_d(args.d)?;
    if !(args.t > 0.0 && args.t_prime > 0.0) {
        return Err(usage("periods must be positive"));
    }
    let delta = RotationAngle::from_radians(args.theta);
    let r = PairCheck {
        t: args.t,
        t_prime: args.t_prime,
        theta: args.theta,
        d: args.d,
        tol,
        m_star: m_star(args.t, args.t_prime, delta, args.d)?,
        m: check_mub_pair(args.t, args.t_prime, delta, args.d, tol)?,
    };
    let line = match r.m {
        Some(m) => format!("m* = {:.9}: unbiased with m = {m}", r.m_star),
        None => format!("m* = {:.9}: not unbiased", r.m_star),
    };
    emit(cfg, &r, std::slice::from_ref(&r), &[line])
}

#[derive(Serialize)]
struct TripleReport {
    d: usize,
    m: [u64; 3],
    directions: [f64; 3],
    periods: [f64; 3],
    pairs: Vec<PairReport>,
    unbiased: bool,
}

#[derive(Serialize)]
struct TripleRow {
    i: usize,
    j: usize,
    t_i: f64,
    t_j: f64,
    m_star: f64,
    m: Option<u64>,
    residual: f64,
}

pub fn triple(cfg: &RunConfig, args: &TripleArgs) -> Result<(), Failure> {
    let tol = args.tol.or(cfg.tol).unwrap_or(DEFAULT_M_TOLERANCE);
    let config = MubConfig::triple(args.m1, args.m2, args.m3, check_d(args.d)?)?;
    let pairs = config.pair_reports(tol);
    let periods: Vec<f64> = config.directions().iter().map(|x| x.1).collect();
    let unbiased = config.is_mutually_unbiased(tol);
    let report = TripleReport {
        d: args.d,
        m: [args.m1, args.m2, args.m3],
        directions: [0.0, TAU / 3.0, 2.0 * TAU / 3.0],
        periods: [periods[0], periods[1], periods[2]],
        pairs: pairs.clone(),
        unbiased,
    };
    let rows: Vec<TripleRow> = pairs
        .iter()
        .map(|p| TripleRow {
            i: p.i,
            j: p.j,
            t_i: periods[p.i],
            t_j: periods[p.j],
            m_star: p.m_star,
            m: p.m,
            residual: p.residual,
        })
        .collect();
    let mut lines = vec![format!(
        "T_x={:.6} T_r={:.6} T_s={:.6}",
        periods[0], periods[1], periods[2]
    )];
    lines.extend(pairs.iter().map(|p| {
        format!(
            "pair ({},{}): m*={:.12} residual {:.1e}",
            p.i, p.j, p.m_star, p.residual
        )
    }));
    emit(cfg, &report, &rows, &lines)?;
    if unbiased {
        Ok(())
    } else {
        Err(Failure::Check("pairwise check failed".into()))
    }
}

#[derive(Serialize)]
struct SearchReport {
    threshold: f64,
    min_residual: f64,
    passed: bool,
    runs: Vec<QuadrupleSearch>,
}

#[derive(Serialize)]
struct SearchRow {
    seed: u64,
    trials: u64,
    evaluated: u64,
    min_residual: f64,
    theta2: f64,
    theta3: f64,
    theta4: f64,
    violations: u64,
}

pub fn search_quadruples(cfg: &RunConfig, args: &SearchArgs) -> Result<(), Failure> {
    let trials = args
        .samples
        .or(cfg.samples.map(|s| s as u64))
        .unwrap_or(100_000);
    let threshold = args.tol.or(cfg.tol).unwrap_or(1e-3);
    if args.seeds == 0 || trials == 0 {
        return Err(usage("seeds and samples must be positive"));
    }
    let runs = (0..args.seeds)
        .map(|i| search(trials, cfg.seed + i))
        .collect::<Result<Vec<_>, _>>()?;
    let min_residual = runs
        .iter()
        .map(|r| r.min_residual)
        .fold(f64::INFINITY, f64::min);
    let passed = runs
        .iter()
        .all(|r| r.passed() && r.min_residual > threshold);
    let rows: Vec<SearchRow> = runs
        .iter()
        .map(|r| SearchRow {
            seed: r.seed,
            trials: r.trials,
            evaluated: r.evaluated,
            min_residual: r.min_residual,
            theta2: r.argmin[0],
            theta3: r.argmin[1],
            theta4: r.argmin[2],
            violations: r.violations,
        })
        .collect();
    let mut lines: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "seed {:>3}: min residual {:.3e} at ({:.5}, {:.5}, {:.5}), {} below 1e-6",
                r.seed, r.min_residual, r.argmin[0], r.argmin[1], r.argmin[2], r.violations
            )
        })
        .collect();
    lines.push(format!(
        "overall minimum {min_residual:.3e} ({} threshold {threshold:e})",
        if passed { "above" } else { "NOT above" }
    ));
    let report = SearchReport {
        threshold,
        min_residual,
        passed,
        runs,
    };
    emit(cfg, &report, &rows, &lines)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "minimum residual {min_residual:.3e} not above {threshold:e}"
        )))
    }
}

#[derive(Serialize)]
struct StageRow {
    stage: String,
    angle_degrees: Option<f64>,
    delta_um: Option<f64>,
}

#[derive(Serialize)]
struct OpticsReport {
    stages: Vec<StageRow>,
    composition: Composition,
    lens_distance_mm: Option<f64>,
    bench_delta_um: Option<f64>,
}

pub fn optics(cfg: &RunConfig, args: &OpticsArgs) -> Result<(), Failure> {
    let stages =
        parse_stages(&args.stages).map_err(|e| usage(format!("--stages: {}", e.message)))?;
    let mut bench = bench_from(cfg, &args.bench)?;
    bench.stages = stages.clone();
    let composition = compose_stages(&bench)?;
    let mut rows = Vec::new();
    for st in &stages {
        rows.push(match *st {
            Stage::Lens { f, z } => {
                let th = lens_angle(f, z)?;
                StageRow {
                    stage: st.to_string(),
                    angle_degrees: Some(th.degrees()),
                    delta_um: Some(scaling_factor(bench.wavelength, f, th)? * 1e6),
                }
            }
            Stage::Reflection => StageRow {
                stage: st.to_string(),
                angle_degrees: None,
                delta_um: None,
            },
        });
    }
    let explicit =
        args.bench.theta.or(cfg.theta).is_some() || args.bench.focal.or(cfg.focal_mm).is_some();
    let (lens_distance_mm, bench_delta_um) =
        if explicit && bench.angle.radians() > 0.0 && bench.angle.radians() <= PI {
            (
                Some(frft_lens_distance(bench.focal_length, bench.angle)? * 1e3),
                Some(bench.scaling_factor()? * 1e6),
            )
        } else {
            (None, None)
        };
    let mut lines: Vec<String> = rows
        .iter()
        .map(|r| match (r.angle_degrees, r.delta_um) {
            (Some(a), Some(dl)) => format!("{}: {:.3} deg, delta {:.2} um", r.stage, a, dl),
            _ => format!("{}: parity, axis sign flips", r.stage),
        })
        .collect();
    lines.push(format!(
        "net {:.3} deg (signed {:.3}), effective {:.3} deg, axis flipped: {}",
        composition.net.degrees(),
        composition.signed_degrees,
        composition.effective_degrees,
        composition.axis_flipped
    ));
    if let (Some(z), Some(dl)) = (lens_distance_mm, bench_delta_um) {
        lines.push(format!(
            "lens at {z:.3} mm for {:.3} deg, delta {dl:.3} um",
            bench.angle.degrees()
        ));
    }
    let report = OpticsReport {
        stages: rows,
        composition,
        lens_distance_mm,
        bench_delta_um,
    };
    emit(cfg, &report, &report.stages, &lines)
}
