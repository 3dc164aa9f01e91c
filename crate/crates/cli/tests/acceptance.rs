//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any fails. `ACCEPTANCE_ONLY=2,5` runs a subset.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use resadapt::adapt::{adaptive_power, baseline_power, pareto_envelope, select_baseline, ParetoPoint, ScenarioStudy};
use resadapt::channel::{
    apply_power_control, estimate_channel, generate_channel, ChannelKind, ChannelModelSpec, EstimationMode,
};
use resadapt::config::RunConfig;
use resadapt::constellation::Modulation;
use resadapt::engine::Engine;
use resadapt::equalizer::EqualizerBundle;
use resadapt::frontend::{quantize_scalar, unit_optimal_step};
use resadapt::montecarlo::{run_ber, SystemConfig};
use resadapt::power::{adc_power, eq_power, total_power, DesignPoint, PowerBreakdown, PowerConstants};
use resadapt::{Bits, Error};
use resadapt_cli::commands::{cmd_ber, cmd_pareto, run_pareto, ParetoRun};
use resadapt_cli::Context;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// 1. Power model at the reference operating point.
fn power_anchor() -> Verdict {
    let c = PowerConstants::default();
    let (q, k) = (Bits::Finite(7), Bits::Finite(6));
    let total = total_power(&DesignPoint::new(q, k, 256), 16, 2e9, &c).unwrap().p_total;
    let eq = eq_power(k, q, 256, 16, 2e9, &c).unwrap();
    let adc = adc_power(q, 256, 2e9, c.fom_j).unwrap();
    let pass = (total - 23.44).abs() <= 0.01 && (eq - 14.16).abs() <= 0.01 && (adc - 9.28).abs() <= 0.01;
    verdict(pass, format!("total {total:.4} W, eq {eq:.4} W, adc {adc:.4} W"))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Quantization MSE of a unit Gaussian, integrated cell by cell.
fn integrated_mse(q: u32, d: f64) -> f64 {
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let top = 1u64 << (q - 1);
    let mut total = 0.0;
    for m in 0..top {
        let level = d * (m as f64 + 0.5);
        let a = d * m as f64;
        let b = if m + 1 == top { a.max(level) + 14.0 } else { a + d };
        let n = if m + 1 == top { 4000 } else { 400 };
        total += simpson(|x| (x - level).powi(2) * pdf(x), a, b, n);
    }
    2.0 * total
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-10 {
        let (c, d) = (b - r * (b - a), a + r * (b - a));
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

// 2. Optimal quantizer step sizes.
fn quantizer_optimality() -> Verdict {
    let d1 = unit_optimal_step(1).unwrap();
    let exact = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    let mut ok = (d1 - exact).abs() <= 1e-4;
    let mut worst_rel: f64 = 0.0;
    for q in 2..=8 {
        let oracle = golden(|d| integrated_mse(q, d), 0.01, 4.0);
        worst_rel = worst_rel.max((unit_optimal_step(q).unwrap() - oracle).abs() / oracle);
    }
    ok &= worst_rel <= 1e-4;

    let mut rng = StdRng::seed_from_u64(2024);
    let samples: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
    let mse = |q: u32, d: f64| samples.iter().map(|&x| (x - quantize_scalar(x, q, d)).powi(2)).sum::<f64>() / samples.len() as f64;
    let mut not_minimal = Vec::new();
    for q in 1..=8 {
        let d = unit_optimal_step(q).unwrap();
        let m = mse(q, d);
        if m >= mse(q, 0.95 * d) || m >= mse(q, 1.05 * d) {
            not_minimal.push(q);
        }
    }
    ok &= not_minimal.is_empty();
    verdict(
        ok,
        format!("Δ1(1) err {:.1e}, worst rel err q=2..8 {worst_rel:.1e}, empirical non-minimal q: {not_minimal:?}", (d1 - exact).abs()),
    )
}

// 3. Unbiased scaling of the finite-alphabet equalizer.
fn unbiasedness() -> Verdict {
    let mut rng = StdRng::seed_from_u64(3);
    let ks: Vec<Bits> = (1..=6).map(Bits::Finite).chain([Bits::Infinite]).collect();
    let (mut worst, mut flagged, mut used) = (0.0f64, 0usize, 0usize);
    for i in 0..100 {
        let u = rng.random_range(1..=16);
        let b = rng.random_range(u..=64);
        let spec = if i % 2 == 0 { ChannelModelSpec::rayleigh() } else { ChannelModelSpec::default() };
        let ch = apply_power_control(generate_channel(&spec, b, u, &mut rng).unwrap()).unwrap().normalize();
        let n0 = 10f64.powf(rng.random_range(-3.0..0.5));
        let h_est = estimate_channel(&ch, EstimationMode::LsPilot, 1.0, n0, &mut rng).unwrap();
        let k = ks[i % ks.len()];
        match EqualizerBundle::build(&h_est, n0, k) {
            Ok(eq) => {
                used += 1;
                let g = &eq.x_h * &h_est;
                for (row, mu) in eq.mu.iter().enumerate() {
                    worst = worst.max((mu * g[(row, row)] - 1.0).norm());
                }
            }
            Err(Error::DegenerateEqualizer { .. }) => flagged += 1,
            Err(e) => return verdict(false, format!("unexpected error {e}")),
        }
    }
    verdict(worst < 1e-10, format!("max |μ·diag(XᴴH) - 1| = {worst:.2e} over {used} channels, {flagged} flagged"))
}

// 4. Single-antenna Rayleigh QPSK against the closed form.
fn analytic_ber() -> Verdict {
    let cfg = SystemConfig {
        antennas: 1,
        active_antennas: 1,
        users: 1,
        adc_bits: Bits::Infinite,
        eq_bits: Bits::Infinite,
        modulation: Modulation::Qpsk,
        channel: ChannelModelSpec::rayleigh(),
        estimation: EstimationMode::Perfect,
        ..Default::default()
    };
    let engine = Engine::new(0).unwrap();
    let (batches, per_batch) = (50u64, 10_000u64);
    let mut ok = true;
    let mut parts = Vec::new();
    for gamma_db in [0.0, 10.0, 20.0] {
        let g = 10f64.powf(gamma_db / 10.0);
        let oracle = 0.5 * (1.0 - (g / (1.0 + g)).sqrt());
        // γ̄ is the SNR per bit; a QPSK symbol carries two bits.
        let snr_db = gamma_db + 10.0 * 2f64.log10();
        let bers: Vec<f64> = (0..batches)
            .map(|s| run_ber(&cfg, snr_db, per_batch, 1, 1000 + s, &engine).unwrap().ber)
            .collect();
        let mean = bers.iter().sum::<f64>() / batches as f64;
        let var = bers.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        let z = (mean - oracle) / se;
        ok &= z.abs() <= 3.0;
        parts.push(format!("{gamma_db} dB: {mean:.5} vs {oracle:.5} ({z:+.2} se)"));
    }
    verdict(ok, format!("{} bits per point; {}", batches * per_batch * 2, parts.join(", ")))
}

fn brute_force_envelope(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut keep: Vec<ParetoPoint> = Vec::new();
    for a in points {
        let dominated = points.iter().any(|b| {
            b.snr_loss_db <= a.snr_loss_db
                && b.power_w() <= a.power_w()
                && (b.snr_loss_db < a.snr_loss_db || b.power_w() < a.power_w())
        });
        if dominated {
            continue;
        }
        match keep
            .iter_mut()
            .find(|k| k.snr_loss_db == a.snr_loss_db && k.power_w() == a.power_w())
        {
            Some(k) if a.point.sort_key() < k.point.sort_key() => *k = *a,
            Some(_) => {}
            None => keep.push(*a),
        }
    }
    keep.sort_by(|a, b| a.snr_loss_db.total_cmp(&b.snr_loss_db));
    keep
}

// 5. Envelope against brute-force dominance filtering.
fn pareto_oracle() -> Verdict {
    let mut rng = StdRng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=500);
        // Coarse values so that ties on one or both axes are common.
        let points: Vec<ParetoPoint> = (0..n)
            .map(|_| {
                let p = rng.random_range(1..80) as f64 * 0.05;
                ParetoPoint {
                    u: 4,
                    point: DesignPoint::new(
                        Bits::Finite(rng.random_range(1..=8)),
                        Bits::Finite(rng.random_range(1..=6)),
                        rng.random_range(24..=32),
                    ),
                    snr_loss_db: rng.random_range(0..60) as f64 * 0.1,
                    power: PowerBreakdown { p_adc: p, p_eq: 0.0, p_total: p },
                }
            })
            .collect();
        if pareto_envelope(&points) != brute_force_envelope(&points) {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches} mismatches in 1000 random sets"))
}

type Scenario = (Modulation, ChannelKind);

fn desk_config(modulation: Modulation, kind: ChannelKind) -> RunConfig {
    let mut cfg = RunConfig::load(&repo_root().join("configs/desk.toml")).expect("desk config");
    cfg.system.modulation = modulation;
    cfg.channel = match kind {
        ChannelKind::LosUla => ChannelModelSpec::default(),
        ChannelKind::IidRayleigh => ChannelModelSpec::rayleigh(),
    };
    cfg.run.workers = 0;
    cfg
}

fn desk_runs() -> BTreeMap<String, (Scenario, ParetoRun)> {
    let engine = Engine::new(0).unwrap();
    let mut out = BTreeMap::new();
    for modulation in [Modulation::Qpsk, Modulation::Qam16] {
        for kind in [ChannelKind::LosUla, ChannelKind::IidRayleigh] {
            let cfg = desk_config(modulation, kind);
            let t = Instant::now();
            let run = run_pareto(&cfg, &engine, |m| eprintln!("  {modulation} {kind:?} {m}")).expect("desk sweep");
            eprintln!("  {modulation} {kind:?} done in {:.0} s", t.elapsed().as_secs_f64());
            out.insert(format!("{modulation}/{kind:?}"), ((modulation, kind), run));
        }
    }
    out
}

fn min_snr(study: &ScenarioStudy, q: Bits, k: Bits, b: usize) -> Option<Option<f64>> {
    study
        .evaluations
        .iter()
        .find(|e| e.point == DesignPoint::new(q, k, b))
        .map(|e| e.outcome.min_snr_db())
}

fn next_in<T: PartialEq + Copy>(list: &[T], x: T) -> Option<T> {
    list.iter().position(|&v| v == x).and_then(|i| list.get(i + 1)).copied()
}

// 6. Desk-scale trends: envelope shape, savings, resolution monotonicity.
fn desk_trends(runs: &BTreeMap<String, (Scenario, ParetoRun)>, constants: &PowerConstants) -> (Verdict, Result<resadapt::adapt::BaselineSpec, Error>) {
    let studies: Vec<ScenarioStudy> = runs.values().flat_map(|(_, r)| r.studies.clone()).collect();

    // (a)
    let strictly_decreasing = runs.values().all(|(_, r)| {
        r.envelopes.iter().all(|env| {
            env.windows(2)
                .all(|w| w[0].snr_loss_db < w[1].snr_loss_db && w[0].power_w() > w[1].power_w())
        })
    });

    // (b)
    let baseline = select_baseline(&studies, 0.1, constants);
    let mut savings_ok = baseline.is_ok();
    let mut ratio_notes = Vec::new();
    if let Ok(base) = &baseline {
        for (name, (_, run)) in runs {
            let mut ratios: Vec<(usize, f64)> = Vec::new();
            for env in &run.envelopes {
                let u = env[0].u;
                let adaptive = match adaptive_power(env, 0.5) {
                    Ok(p) => p.power_w(),
                    Err(_) => {
                        savings_ok = false;
                        continue;
                    }
                };
                let fs = run.studies[0].base.sample_rate;
                let b = baseline_power(u, base, fs, constants).unwrap().p_total;
                savings_ok &= adaptive <= b;
                ratios.push((u, adaptive / b));
            }
            ratios.sort_by_key(|&(u, _)| u);
            savings_ok &= ratios.windows(2).all(|w| w[0].1 <= w[1].1);
            let text: Vec<String> = ratios.iter().map(|(u, r)| format!("U={u}:{r:.3}")).collect();
            ratio_notes.push(format!("{name} [{}]", text.join(" ")));
        }
    }

    // (c) one step up in q, k or B' must not raise the min SNR by more than 0.2 dB.
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = String::new();
    let (mut pairs, mut violations) = (0usize, 0usize);
    for (name, (_, run)) in runs {
        for study in &run.studies {
            let cfg = desk_config(study.base.modulation, study.base.channel.kind);
            let grid = cfg.grid();
            for e in &study.evaluations {
                let Some(s) = e.outcome.min_snr_db() else { continue };
                let p = e.point;
                let steps = [
                    next_in(&grid.adc_bits, p.q).map(|q| (q, p.k, p.b_prime)),
                    next_in(&grid.eq_bits, p.k).map(|k| (p.q, k, p.b_prime)),
                    next_in(&grid.active_antennas, p.b_prime).map(|b| (p.q, p.k, b)),
                ];
                for (q, k, b) in steps.into_iter().flatten() {
                    let rise = match min_snr(study, q, k, b).flatten() {
                        Some(next) => next - s,
                        None => f64::INFINITY,
                    };
                    pairs += 1;
                    violations += (rise > 0.2) as usize;
                    if rise > worst {
                        worst = rise;
                        worst_at = format!("{name} U={} ({},{},{})->({q},{k},{b})", study.users(), p.q, p.k, p.b_prime);
                    }
                }
            }
        }
    }
    let monotone = worst <= 0.2;

    let pass = strictly_decreasing && savings_ok && monotone;
    let detail = format!(
        "(a) {} (b) {} {} (c) {} {violations}/{pairs} steps rise > 0.2 dB, worst {worst:.3} dB at {worst_at}",
        if strictly_decreasing { "ok" } else { "FAIL" },
        if savings_ok { "ok" } else { "FAIL" },
        ratio_notes.join(", "),
        if monotone { "ok" } else { "FAIL" },
    );
    (verdict(pass, detail), baseline)
}

// 7. The selected baseline keeps every scenario below the constraint.
fn baseline_check(
    runs: &BTreeMap<String, (Scenario, ParetoRun)>,
    baseline: &Result<resadapt::adapt::BaselineSpec, Error>,
) -> Verdict {
    let base = match baseline {
        Ok(b) => b,
        Err(e) => return verdict(false, format!("no baseline: {e}")),
    };
    let mut worst = f64::NEG_INFINITY;
    for (_, run) in runs.values() {
        for study in &run.studies {
            let reference = study.reference.outcome.min_snr_db().unwrap();
            let loss = match min_snr(study, base.q, base.k, base.antennas).flatten() {
                Some(s) => s - reference,
                None => f64::INFINITY,
            };
            worst = worst.max(loss);
        }
    }
    verdict(
        worst < base.constraint_db,
        format!("baseline (q={}, k={}) worst loss {worst:.3} dB over 12 scenarios", base.q, base.k),
    )
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

// 8. Output bytes do not depend on the worker count.
fn determinism() -> Verdict {
    let tmp = std::env::temp_dir().join(format!("resadapt-acceptance-{}", std::process::id()));
    let mut outputs = Vec::new();
    for workers in [1, 4, 16] {
        let mut cfg = RunConfig::load(&repo_root().join("configs/quick.toml")).unwrap();
        cfg.run.workers = workers;
        cfg.run.verbose = true;
        let out = tmp.join(format!("w{workers}"));
        cfg.run.out = out.to_string_lossy().into_owned();
        let ctx = Context::new(cfg).unwrap();
        cmd_ber(&ctx).unwrap();
        cmd_pareto(&ctx).unwrap();
        outputs.push(dir_contents(&out));
    }
    let _ = fs::remove_dir_all(&tmp);
    let files: Vec<&String> = outputs[0].keys().collect();
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    verdict(same, format!("workers 1/4/16, files compared: {files:?}"))
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut run = |n: u32, name: &'static str, f: &dyn Fn() -> Verdict| {
        if wanted(n) {
            let t = Instant::now();
            let v = f();
            println!(
                "[{}] {n}. {name}: {} ({:.1} s)",
                if v.pass { "PASS" } else { "FAIL" },
                v.detail,
                t.elapsed().as_secs_f64()
            );
            results.push((n, name, v));
        }
    };
    run(1, "power-model anchor", &power_anchor);
    run(2, "quantizer optimality", &quantizer_optimality);
    run(3, "unbiasedness invariant", &unbiasedness);
    run(4, "analytic BER oracle", &analytic_ber);
    run(5, "Pareto oracle equivalence", &pareto_oracle);
    if wanted(6) || wanted(7) {
        let t = Instant::now();
        let runs = desk_runs();
        let constants = RunConfig::load(&repo_root().join("configs/desk.toml")).unwrap().power;
        let (v6, baseline) = desk_trends(&runs, &constants);
        let elapsed = t.elapsed().as_secs_f64();
        run(6, "desk-scale trend reproduction", &|| verdict(v6.pass, format!("{} (sweep {elapsed:.0} s)", v6.detail)));
        run(7, "baseline constraint check", &|| baseline_check(&runs, &baseline));
    }
    run(8, "determinism across worker counts", &determinism);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
