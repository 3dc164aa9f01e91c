use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use resadapt::adapt::{
    compare, evaluate_scenario, pareto_envelope, select_baseline, sweep, BaselineSpec, Comparison, Outcome,
    ParetoPoint, ScenarioStudy,
};
use resadapt::channel::{estimate_channel, CMatrix};
use resadapt::config::RunConfig;
use resadapt::engine::Engine;
use resadapt::equalizer::EqualizerBundle;
use resadapt::io::{fmt_g9, write_matrix_bin, write_matrix_csv};
use resadapt::montecarlo::{draw_channel, run_ber, BerEstimate};
use resadapt::power::{total_power, DesignPoint, PowerBreakdown};
use resadapt::seed::{stream, Purpose};
use resadapt::{Error, Result};
use serde_json::json;

use crate::{DumpArgs, MatrixFormat};

/// Resolved configuration plus the execution resources it asks for.
pub struct Context {
    pub config: RunConfig,
    pub engine: Engine,
    pub out: PathBuf,
    pub verbose: bool,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self> {
        let engine = crate::engine_for(&config)?;
        let out = PathBuf::from(&config.run.out);
        let verbose = config.run.verbose;
        Ok(Context { config, engine, out, verbose })
    }

    fn prepare(&self, command: &str) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        let header = format!("# resolved configuration for `resadapt {command}`\n");
        fs::write(self.path(&format!("{command}.resolved.toml")), header + &self.config.to_toml())?;
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::from)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRow {
    pub u: usize,
    pub point: DesignPoint,
    /// `None` when a resolution is infinite.
    pub power: Option<PowerBreakdown>,
}

pub fn power_table(cfg: &RunConfig) -> Result<Vec<PowerRow>> {
    let fs = cfg.system.sample_rate;
    let mut rows = Vec::new();
    for u in cfg.users() {
        for point in cfg.grid().points() {
            let power = match total_power(&point, u, fs, &cfg.power) {
                Ok(p) => Some(p),
                Err(Error::ModelUndefined(_)) => None,
                Err(e) => return Err(e),
            };
            rows.push(PowerRow { u, point, power });
        }
    }
    Ok(rows)
}

pub fn power_csv(rows: &[PowerRow]) -> String {
    let mut s = String::from("u,q,k,b_prime,p_adc_w,p_eq_w,p_total_w\n");
    for r in rows {
        let p = &r.point;
        let cols = match r.power {
            Some(b) => format!("{},{},{}", fmt_g9(b.p_adc), fmt_g9(b.p_eq), fmt_g9(b.p_total)),
            None => "n/a,n/a,n/a".into(),
        };
        writeln!(s, "{},{},{},{},{cols}", r.u, p.q, p.k, p.b_prime).unwrap();
    }
    s
}

pub fn cmd_power(ctx: &Context) -> Result<Vec<PowerRow>> {
    ctx.prepare("power")?;
    let rows = power_table(&ctx.config)?;
    write_text(&ctx.path("power.csv"), &power_csv(&rows))?;
    ctx.log(format!("power: {} rows", rows.len()));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRow {
    pub snr_db: f64,
    pub estimate: BerEstimate,
}

pub fn ber_csv(rows: &[BerRow]) -> String {
    let mut s = String::from("snr_db,ber,std_err,trials\n");
    for r in rows {
        let e = &r.estimate;
        writeln!(s, "{},{},{},{}", fmt_g9(r.snr_db), fmt_g9(e.ber), fmt_g9(e.std_err), e.trials).unwrap();
    }
    s
}

pub fn cmd_ber(ctx: &Context) -> Result<Vec<BerRow>> {
    ctx.prepare("ber")?;
    let cfg = &ctx.config;
    let sys = cfg.system_config();
    let mut rows = Vec::new();
    for &snr_db in &cfg.ber.snr_db {
        let estimate = run_ber(
            &sys,
            snr_db,
            cfg.ber.trials,
            cfg.trials.symbols_per_channel,
            cfg.run.seed,
            &ctx.engine,
        )?;
        ctx.log(format!("ber: {snr_db} dB -> {:.4e}", estimate.ber));
        rows.push(BerRow { snr_db, estimate });
    }
    write_text(&ctx.path("ber.csv"), &ber_csv(&rows))?;
    Ok(rows)
}

/// Per-UE-count studies and their envelopes.
#[derive(Debug, Clone)]
pub struct ParetoRun {
    pub studies: Vec<ScenarioStudy>,
    pub envelopes: Vec<Vec<ParetoPoint>>,
}

pub fn run_pareto(cfg: &RunConfig, engine: &Engine, log: impl Fn(String)) -> Result<ParetoRun> {
    let base = cfg.system_config();
    let grid = cfg.grid();
    let mut studies = Vec::new();
    let mut envelopes = Vec::new();
    for u in cfg.users() {
        let study = evaluate_scenario(&base.with_users(u), &grid, &cfg.search, &cfg.trials, cfg.run.seed, engine)?;
        let envelope = pareto_envelope(&sweep(&study, &cfg.power)?);
        log(format!(
            "pareto: U={u} reference {:.3} dB, {} envelope points",
            study.reference_min_snr(),
            envelope.len()
        ));
        studies.push(study);
        envelopes.push(envelope);
    }
    Ok(ParetoRun { studies, envelopes })
}

pub fn envelope_csv(envelopes: &[Vec<ParetoPoint>]) -> String {
    let mut s = String::from("u,q,k,b_prime,snr_loss_db,p_adc_w,p_eq_w,p_total_w\n");
    for p in envelopes.iter().flatten() {
        let (pt, pw) = (&p.point, &p.power);
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.u,
            pt.q,
            pt.k,
            pt.b_prime,
            fmt_g9(p.snr_loss_db),
            fmt_g9(pw.p_adc),
            fmt_g9(pw.p_eq),
            fmt_g9(pw.p_total)
        )
        .unwrap();
    }
    s
}

/// Every evaluated design point, infeasible ones included.
pub fn evaluations_csv(studies: &[ScenarioStudy]) -> String {
    let mut s = String::from("u,q,k,b_prime,status,min_snr_db,snr_loss_db,floor_ber,non_monotone\n");
    for st in studies {
        let reference = st.reference_min_snr();
        for e in &st.evaluations {
            let p = &e.point;
            let tail = match e.outcome {
                Outcome::Feasible { min_snr_db } => {
                    format!("feasible,{},{},", fmt_g9(min_snr_db), fmt_g9(min_snr_db - reference))
                }
                Outcome::Infeasible { floor_ber } => format!("infeasible,,,{}", fmt_g9(floor_ber)),
            };
            writeln!(s, "{},{},{},{},{tail},{}", st.users(), p.q, p.k, p.b_prime, e.non_monotone).unwrap();
        }
    }
    s
}

pub fn probes_csv(studies: &[ScenarioStudy]) -> String {
    let mut s = String::from("u,q,k,b_prime,snr_db,ber,std_err,trials\n");
    for st in studies {
        for e in std::iter::once(&st.reference).chain(&st.evaluations) {
            let p = &e.point;
            for pr in &e.probes {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    st.users(),
                    p.q,
                    p.k,
                    p.b_prime,
                    fmt_g9(pr.snr_db),
                    fmt_g9(pr.ber.ber),
                    fmt_g9(pr.ber.std_err),
                    pr.ber.trials
                )
                .unwrap();
            }
        }
    }
    s
}

pub fn pareto_summary(cfg: &RunConfig, run: &ParetoRun) -> serde_json::Value {
    let scenarios: Vec<_> = run
        .studies
        .iter()
        .zip(&run.envelopes)
        .map(|(st, env)| {
            let infeasible: Vec<_> = st
                .evaluations
                .iter()
                .filter_map(|e| match e.outcome {
                    Outcome::Infeasible { floor_ber } => Some(json!({
                        "q": e.point.q.to_string(),
                        "k": e.point.k.to_string(),
                        "b_prime": e.point.b_prime,
                        "floor_ber": floor_ber,
                    })),
                    Outcome::Feasible { .. } => None,
                })
                .collect();
            json!({
                "u": st.users(),
                "reference_min_snr_db": st.reference_min_snr(),
                "evaluated": st.evaluations.len(),
                "envelope_points": env.len(),
                "non_monotone_searches": st.evaluations.iter().filter(|e| e.non_monotone).count(),
                "infeasible": infeasible,
            })
        })
        .collect();
    json!({
        "seed": cfg.run.seed,
        "modulation": cfg.system.modulation.to_string(),
        "channel": cfg.channel,
        "estimation": cfg.system.estimation,
        "antennas": cfg.system.antennas,
        "target_ber": cfg.search.target_ber,
        "power_constants": cfg.power,
        "scenarios": scenarios,
    })
}

fn write_pareto_outputs(ctx: &Context, run: &ParetoRun) -> Result<()> {
    write_text(&ctx.path("envelope.csv"), &envelope_csv(&run.envelopes))?;
    write_text(&ctx.path("evaluations.csv"), &evaluations_csv(&run.studies))?;
    write_json(&ctx.path("summary.json"), &pareto_summary(&ctx.config, run))?;
    if ctx.verbose {
        write_text(&ctx.path("probes.csv"), &probes_csv(&run.studies))?;
    }
    Ok(())
}

pub fn cmd_pareto(ctx: &Context) -> Result<ParetoRun> {
    ctx.prepare("pareto")?;
    let run = run_pareto(&ctx.config, &ctx.engine, |m| ctx.log(m))?;
    write_pareto_outputs(ctx, &run)?;
    Ok(run)
}

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub pareto: ParetoRun,
    pub baseline: BaselineSpec,
    pub comparisons: Vec<Comparison>,
}

pub fn compare_csv(rows: &[Comparison]) -> String {
    let mut s = String::from("allowed_loss_db,u,q,k,b_prime,snr_loss_db,adaptive_w,baseline_w,ratio\n");
    for c in rows {
        let p = &c.adaptive.point;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            fmt_g9(c.allowed_loss_db),
            c.u,
            p.q,
            p.k,
            p.b_prime,
            fmt_g9(c.adaptive.snr_loss_db),
            fmt_g9(c.adaptive.power_w()),
            fmt_g9(c.baseline.p_total),
            fmt_g9(c.savings)
        )
        .unwrap();
    }
    s
}

pub fn cmd_compare(ctx: &Context) -> Result<CompareRun> {
    ctx.prepare("compare")?;
    let cfg = &ctx.config;
    let pareto = run_pareto(cfg, &ctx.engine, |m| ctx.log(m))?;
    write_pareto_outputs(ctx, &pareto)?;
    let baseline = match cfg.compare.baseline {
        Some(fixed) => BaselineSpec {
            q: fixed.q,
            k: fixed.k,
            constraint_db: cfg.compare.constraint_db,
            antennas: cfg.system.antennas,
            worst_case_users: cfg.users().into_iter().max().unwrap_or(cfg.system.users),
        },
        None => select_baseline(&pareto.studies, cfg.compare.constraint_db, &cfg.power)?,
    };
    ctx.log(format!("compare: baseline q={} k={}", baseline.q, baseline.k));
    let comparisons = compare(
        &pareto.envelopes,
        &baseline,
        &cfg.compare.allowed_loss_db,
        cfg.system.sample_rate,
        &cfg.power,
    )?;
    write_text(&ctx.path("compare.csv"), &compare_csv(&comparisons))?;
    let blocks: Vec<_> = cfg
        .compare
        .allowed_loss_db
        .iter()
        .map(|&allowed| {
            let rows: Vec<_> = comparisons
                .iter()
                .filter(|c| c.allowed_loss_db == allowed)
                .map(|c| {
                    json!({
                        "u": c.u,
                        "q": c.adaptive.point.q.to_string(),
                        "k": c.adaptive.point.k.to_string(),
                        "b_prime": c.adaptive.point.b_prime,
                        "snr_loss_db": c.adaptive.snr_loss_db,
                        "adaptive_w": c.adaptive.power_w(),
                        "baseline_w": c.baseline.p_total,
                        "ratio": c.savings,
                    })
                })
                .collect();
            json!({ "allowed_loss_db": allowed, "rows": rows })
        })
        .collect();
    write_json(
        &ctx.path("compare.json"),
        &json!({
            "baseline": {
                "q": baseline.q.to_string(),
                "k": baseline.k.to_string(),
                "constraint_db": baseline.constraint_db,
                "antennas": baseline.antennas,
                "worst_case_users": baseline.worst_case_users,
            },
            "power_constants": cfg.power,
            "comparisons": blocks,
        }),
    )?;
    Ok(CompareRun { pareto, baseline, comparisons })
}

fn dump_matrix(ctx: &Context, name: &str, m: &CMatrix, format: MatrixFormat) -> Result<()> {
    let ext = match format {
        MatrixFormat::Csv => "csv",
        MatrixFormat::Bin => "bin",
    };
    let w = BufWriter::new(fs::File::create(ctx.path(&format!("{name}.{ext}")))?);
    match format {
        MatrixFormat::Csv => write_matrix_csv(w, m),
        MatrixFormat::Bin => write_matrix_bin(w, m),
    }
}

/// Writes `H`, the estimate of its active rows, the L-MMSE matrix `Wᴴ`, the
/// quantized `Xᴴ` and the scalings `μ` for one trial.
pub fn cmd_dump_channel(ctx: &Context, args: &DumpArgs) -> Result<()> {
    ctx.prepare("dump-channel")?;
    let cfg = &ctx.config;
    let sys = cfg.system_config();
    let n0 = sys.noise_variance(args.snr_db);
    let ch = draw_channel(&sys, cfg.run.seed, args.trial)?;
    let mut rng = stream(cfg.run.seed, args.trial, Purpose::Pilot);
    let h_est = estimate_channel(&ch, sys.estimation, sys.es, n0, &mut rng)?;
    let eq = EqualizerBundle::build(&h_est, n0 / sys.es, sys.eq_bits)?;
    let mu = CMatrix::from_column_slice(eq.mu.len(), 1, &eq.mu);
    dump_matrix(ctx, "channel_h", &ch.h, args.format)?;
    dump_matrix(ctx, "channel_h_est", &h_est, args.format)?;
    dump_matrix(ctx, "equalizer_w", &eq.w_h, args.format)?;
    dump_matrix(ctx, "equalizer_x", &eq.x_h, args.format)?;
    dump_matrix(ctx, "equalizer_mu", &mu, args.format)?;
    let (first, last) = ch.active.one_based();
    write_json(
        &ctx.path("dump-channel.json"),
        &json!({
            "trial": args.trial,
            "snr_db": args.snr_db,
            "sigma2": ch.sigma2,
            "active_antennas": [first, last],
        }),
    )?;
    ctx.log(format!("dump-channel: trial {} written to {}", args.trial, ctx.out.display()));
    Ok(())
}
