//! Configuration sweeps, Pareto envelopes of (SNR loss, power), worst-case
//! baseline selection and adaptive-versus-baseline comparison.

use serde::{Deserialize, Serialize};

use crate::engine::{par_map, Engine};
use crate::error::{Error, Result};
use crate::montecarlo::{search_min_snr, Probe, SearchSettings, SystemConfig, TrialSettings};
use crate::power::{adc_power, eq_power, total_power, DesignPoint, PowerBreakdown, PowerConstants};
use crate::resolution::Bits;

/// Design-space grid for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub adc_bits: Vec<Bits>,
    pub eq_bits: Vec<Bits>,
    pub active_antennas: Vec<usize>,
}

impl SweepGrid {
    /// q ∈ {1..8, ∞}, k ∈ {1..6, ∞} over the given antenna counts.
    pub fn full(active_antennas: Vec<usize>) -> Self {
        SweepGrid {
            adc_bits: (1..=8).map(Bits::Finite).chain([Bits::Infinite]).collect(),
            eq_bits: (1..=6).map(Bits::Finite).chain([Bits::Infinite]).collect(),
            active_antennas,
        }
    }

    pub fn points(&self) -> Vec<DesignPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &q in &self.adc_bits {
            for &k in &self.eq_bits {
                for &b in &self.active_antennas {
                    out.push(DesignPoint::new(q, k, b));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.adc_bits.len() * self.eq_bits.len() * self.active_antennas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Feasible { min_snr_db: f64 },
    Infeasible { floor_ber: f64 },
}

impl Outcome {
    pub fn min_snr_db(&self) -> Option<f64> {
        match self {
            Outcome::Feasible { min_snr_db } => Some(*min_snr_db),
            Outcome::Infeasible { .. } => None,
        }
    }
}

/// Min-SNR search result for one design point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub point: DesignPoint,
    pub outcome: Outcome,
    pub non_monotone: bool,
    #[serde(skip)]
    pub probes: Vec<Probe>,
}

/// All evaluations of a grid for one scenario (fixed `U`, modulation and
/// channel model) together with the ideal reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioStudy {
    pub base: SystemConfig,
    pub reference: Evaluation,
    pub evaluations: Vec<Evaluation>,
}

impl ScenarioStudy {
    pub fn users(&self) -> usize {
        self.base.users
    }

    pub fn reference_min_snr(&self) -> f64 {
        self.reference.outcome.min_snr_db().expect("reference is feasible")
    }

    pub fn loss(&self, point: &DesignPoint) -> Option<f64> {
        self.evaluations
            .iter()
            .find(|e| e.point == *point)
            .and_then(|e| e.outcome.min_snr_db())
            .map(|s| s - self.reference_min_snr())
    }
}

fn evaluate(
    cfg: &SystemConfig,
    search: &SearchSettings,
    trials: &TrialSettings,
    seed: u64,
    hint_db: Option<f64>,
    engine: &Engine,
) -> Result<Evaluation> {
    let out = search_min_snr(cfg, search, trials, seed, hint_db, engine);
    let outcome = match out.result {
        Ok(min_snr_db) => Outcome::Feasible { min_snr_db },
        Err(Error::Infeasible { floor_ber, .. }) => Outcome::Infeasible { floor_ber },
        Err(e) => return Err(e),
    };
    Ok(Evaluation {
        point: cfg.design_point(),
        outcome,
        non_monotone: out.non_monotone,
        probes: out.probes,
    })
}

/// Evaluates the ideal reference and every grid point on a common seed
/// ensemble. `base` fixes the scenario; its design fields are ignored.
pub fn evaluate_scenario(
    base: &SystemConfig,
    grid: &SweepGrid,
    search: &SearchSettings,
    trials: &TrialSettings,
    seed: u64,
    engine: &Engine,
) -> Result<ScenarioStudy> {
    base.validate()?;
    if grid.is_empty() {
        return Err(Error::config("empty sweep grid"));
    }
    for &b in &grid.active_antennas {
        if b == 0 || b > base.antennas {
            return Err(Error::config(format!("active antennas {b} outside 1..={}", base.antennas)));
        }
    }
    let reference = evaluate(&base.ideal(), search, trials, seed, None, engine)?;
    if let Outcome::Infeasible { floor_ber } = reference.outcome {
        return Err(Error::NoFeasible(format!(
            "ideal reference for U={} never reaches the target (floor {floor_ber:.3e})",
            base.users
        )));
    }
    let hint = reference.outcome.min_snr_db();
    let points = grid.points();
    let evaluations = engine.install(|| {
        par_map(points.len(), |i| {
            evaluate(&base.with_design(points[i]), search, trials, seed, hint, engine)
        })
    });
    let evaluations = evaluations.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ScenarioStudy {
        base: base.clone(),
        reference,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub u: usize,
    pub point: DesignPoint,
    pub snr_loss_db: f64,
    pub power: PowerBreakdown,
}

impl ParetoPoint {
    pub fn power_w(&self) -> f64 {
        self.power.p_total
    }
}

/// One candidate per feasible finite-resolution design point.
pub fn sweep(study: &ScenarioStudy, constants: &PowerConstants) -> Result<Vec<ParetoPoint>> {
    let u = study.users();
    let fs = study.base.sample_rate;
    let mut out = Vec::new();
    for e in &study.evaluations {
        if !e.point.is_finite() {
            continue;
        }
        if let Some(loss) = study.loss(&e.point) {
            out.push(ParetoPoint {
                u,
                point: e.point,
                snr_loss_db: loss,
                power: total_power(&e.point, u, fs, constants)?,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::NoFeasible(format!("no finite configuration reaches the target for U={u}")));
    }
    Ok(out)
}

fn candidate_order(a: &ParetoPoint, b: &ParetoPoint) -> std::cmp::Ordering {
    a.snr_loss_db
        .total_cmp(&b.snr_loss_db)
        .then(a.power_w().total_cmp(&b.power_w()))
        .then(a.point.sort_key().cmp(&b.point.sort_key()))
}

/// Non-dominated subset sorted by loss ascending (power strictly decreasing).
/// Points equal on both axes are kept once, with the smallest `(q, k, B')`.
pub fn pareto_envelope(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(candidate_order);
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for p in sorted {
        if p.power_w() < best {
            best = p.power_w();
            out.push(p);
        }
    }
    out
}

/// Fixed worst-case design that only scales its equalizer with `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub q: Bits,
    pub k: Bits,
    pub constraint_db: f64,
    pub antennas: usize,
    /// UE count of the worst-case scenario used to price candidate pairs.
    pub worst_case_users: usize,
}

/// Cheapest `(q, k)` at `B' = B` whose loss stays below `constraint_db` in every
/// scenario; cost is the total power at the largest `U` in the set.
pub fn select_baseline(
    studies: &[ScenarioStudy],
    constraint_db: f64,
    constants: &PowerConstants,
) -> Result<BaselineSpec> {
    let first = studies
        .first()
        .ok_or_else(|| Error::config("baseline selection needs at least one scenario"))?;
    let b = first.base.antennas;
    let fs = first.base.sample_rate;
    if studies.iter().any(|s| s.base.antennas != b) {
        return Err(Error::config("scenarios disagree on the number of antennas"));
    }
    let worst_u = studies.iter().map(|s| s.users()).max().unwrap();

    let mut pairs: Vec<(Bits, Bits)> = first
        .evaluations
        .iter()
        .filter(|e| e.point.b_prime == b && e.point.is_finite())
        .map(|e| (e.point.q, e.point.k))
        .collect();
    if pairs.is_empty() {
        return Err(Error::config("sweep grid must include B' = B with finite resolutions"));
    }
    pairs.sort_by_key(|(q, k)| (q.key(), k.key()));
    pairs.dedup();

    let mut best: Option<(f64, Bits, Bits)> = None;
    for (q, k) in pairs {
        let point = DesignPoint::new(q, k, b);
        let ok = studies
            .iter()
            .all(|s| s.loss(&point).is_some_and(|l| l < constraint_db));
        if !ok {
            continue;
        }
        let p = total_power(&point, worst_u, fs, constants)?.p_total;
        if best.is_none_or(|(bp, _, _)| p < bp) {
            best = Some((p, q, k));
        }
    }
    let (_, q, k) = best.ok_or_else(|| {
        Error::NoFeasible(format!("no (q, k) meets {constraint_db} dB loss in every scenario"))
    })?;
    Ok(BaselineSpec {
        q,
        k,
        constraint_db,
        antennas: b,
        worst_case_users: worst_u,
    })
}

/// Minimum-power envelope point whose loss does not exceed `allowed_loss_db`.
pub fn adaptive_power(envelope: &[ParetoPoint], allowed_loss_db: f64) -> Result<ParetoPoint> {
    envelope
        .iter()
        .filter(|p| p.snr_loss_db <= allowed_loss_db)
        .min_by(|a, b| a.power_w().total_cmp(&b.power_w()).then(a.point.sort_key().cmp(&b.point.sort_key())))
        .copied()
        .ok_or_else(|| Error::NoFeasible(format!("no envelope point within {allowed_loss_db} dB loss")))
}

/// Baseline power at load `u`: ADCs fixed at `q` on all antennas, equalizer
/// power proportional to `u`.
pub fn baseline_power(
    u: usize,
    baseline: &BaselineSpec,
    fs: f64,
    constants: &PowerConstants,
) -> Result<PowerBreakdown> {
    let p_adc = adc_power(baseline.q, baseline.antennas, fs, constants.fom_j)?;
    let p_eq = eq_power(baseline.k, baseline.q, baseline.antennas, u, fs, constants)?;
    Ok(PowerBreakdown { p_adc, p_eq, p_total: p_adc + p_eq })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub allowed_loss_db: f64,
    pub u: usize,
    pub adaptive: ParetoPoint,
    pub baseline: PowerBreakdown,
    /// `baseline / adaptive` total power.
    pub savings: f64,
}

pub fn compare(
    envelopes: &[Vec<ParetoPoint>],
    baseline: &BaselineSpec,
    allowed_losses_db: &[f64],
    fs: f64,
    constants: &PowerConstants,
) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for &allowed in allowed_losses_db {
        for env in envelopes {
            let adaptive = adaptive_power(env, allowed)?;
            let base = baseline_power(adaptive.u, baseline, fs, constants)?;
            out.push(Comparison {
                allowed_loss_db: allowed,
                u: adaptive.u,
                adaptive,
                baseline: base,
                savings: base.p_total / adaptive.power_w(),
            });
        }
    }
    Ok(out)
}
