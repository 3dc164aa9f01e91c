//! End-to-end uplink trials, BER estimation, minimum-SNR search and SNR loss.
//!
//! A trial is one channel draw followed by `symbols_per_channel` channel uses.
//! Every random draw of trial `t` comes from streams keyed by
//! `(seed, t, purpose)`, so two configurations evaluated with the same seed see
//! the same channels, symbols and (unit-variance) noise samples.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{
    apply_power_control, estimate_channel, generate_channel, ChannelKind, ChannelModelSpec,
    CVector, EstimationMode,
};
use crate::constellation::Modulation;
use crate::engine::{par_map, Engine};
use crate::equalizer::{EqualizerBundle, MAX_EQ_BITS};
use crate::error::{Error, Result};
use crate::frontend::{adc_input_variance, adc_quantizer, MAX_ADC_BITS};
use crate::power::DesignPoint;
use crate::resolution::Bits;
use crate::seed::{stream, Purpose};

/// Full scenario and design descriptor for one link-level simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas `B`.
    pub antennas: usize,
    /// Active antennas `B'`.
    pub active_antennas: usize,
    /// UEs `U`.
    pub users: usize,
    pub adc_bits: Bits,
    pub eq_bits: Bits,
    /// Sampling rate in samples/s.
    pub sample_rate: f64,
    /// Transmit energy scale `Es`.
    pub es: f64,
    pub modulation: Modulation,
    pub channel: ChannelModelSpec,
    pub estimation: EstimationMode,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            antennas: 256,
            active_antennas: 256,
            users: 16,
            adc_bits: Bits::Finite(7),
            eq_bits: Bits::Finite(6),
            sample_rate: 2e9,
            es: 1.0,
            modulation: Modulation::Qam16,
            channel: ChannelModelSpec::default(),
            estimation: EstimationMode::LsPilot,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 || self.users == 0 {
            return Err(Error::config("need at least one antenna and one UE"));
        }
        if self.active_antennas == 0 || self.active_antennas > self.antennas {
            return Err(Error::config(format!(
                "active antennas B'={} must lie in 1..={}",
                self.active_antennas, self.antennas
            )));
        }
        if let Bits::Finite(q) = self.adc_bits {
            if !(1..=MAX_ADC_BITS).contains(&q) {
                return Err(Error::config(format!("ADC bits {q} outside 1..={MAX_ADC_BITS}")));
            }
        }
        if let Bits::Finite(k) = self.eq_bits {
            if !(1..=MAX_EQ_BITS).contains(&k) {
                return Err(Error::config(format!("equalizer bits {k} outside 1..={MAX_EQ_BITS}")));
            }
        }
        if !(self.es > 0.0 && self.es.is_finite()) {
            return Err(Error::config("Es must be positive"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::config("sample_rate must be positive"));
        }
        self.channel.validate()?;
        if self.channel.kind == ChannelKind::LosUla {
            if self.antennas < self.users {
                return Err(Error::config("LoS channels need B >= U"));
            }
            let width = self.channel.sector_deg[1] - self.channel.sector_deg[0];
            if self.users as f64 * self.channel.min_separation_deg > width {
                return Err(Error::config(format!(
                    "cannot place {} UEs {}° apart in a {width}° sector",
                    self.users, self.channel.min_separation_deg
                )));
            }
        }
        Ok(())
    }

    pub fn design_point(&self) -> DesignPoint {
        DesignPoint::new(self.adc_bits, self.eq_bits, self.active_antennas)
    }

    pub fn with_design(&self, point: DesignPoint) -> Self {
        SystemConfig {
            adc_bits: point.q,
            eq_bits: point.k,
            active_antennas: point.b_prime,
            ..self.clone()
        }
    }

    pub fn with_users(&self, users: usize) -> Self {
        SystemConfig { users, ..self.clone() }
    }

    /// Infinite-resolution, all-antennas reference for SNR loss.
    pub fn ideal(&self) -> Self {
        self.with_design(DesignPoint::new(Bits::Infinite, Bits::Infinite, self.antennas))
    }

    /// Noise variance giving the requested average receive SNR.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.es / db_to_linear(snr_db)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Sampling budget for a single BER estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSettings {
    /// Channel uses per channel draw.
    pub symbols_per_channel: usize,
    /// Channel draws evaluated between two stopping checks.
    pub channels_per_batch: usize,
    pub min_channels: u64,
    pub min_bits: u64,
    /// Upper bound on channel uses per estimate.
    pub max_channel_uses: u64,
    /// Stop once `std_err <= rel_std_err · target`.
    pub rel_std_err: f64,
    /// Stop once the estimate is this many standard errors away from the target.
    pub decision_z: f64,
}

impl Default for TrialSettings {
    fn default() -> Self {
        TrialSettings {
            symbols_per_channel: 32,
            channels_per_batch: 16,
            min_channels: 32,
            min_bits: 10_000,
            max_channel_uses: 100_000,
            rel_std_err: 0.1,
            decision_z: 4.0,
        }
    }
}

impl TrialSettings {
    pub fn validate(&self) -> Result<()> {
        if self.symbols_per_channel == 0 || self.channels_per_batch == 0 {
            return Err(Error::config("symbols_per_channel and channels_per_batch must be positive"));
        }
        if self.max_channel_uses < self.symbols_per_channel as u64 {
            return Err(Error::config("max_channel_uses must allow at least one channel draw"));
        }
        if !(self.rel_std_err > 0.0) || !(self.decision_z > 0.0) {
            return Err(Error::config("rel_std_err and decision_z must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BerEstimate {
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub std_err: f64,
    /// Channel draws.
    pub trials: u64,
    pub channel_uses: u64,
    /// Trials whose equalizer could not be built; counted at BER 1/2.
    pub degenerate_trials: u64,
}

impl BerEstimate {
    fn from_counts(c: TrialCounts) -> Self {
        let ber = if c.bits == 0 {
            0.0
        } else {
            c.bit_errors as f64 / c.bits as f64
        };
        let std_err = if c.bits == 0 {
            0.0
        } else {
            (ber * (1.0 - ber) / c.bits as f64).sqrt()
        };
        BerEstimate {
            ber,
            bit_errors: c.bit_errors,
            bits_total: c.bits,
            std_err,
            trials: c.trials,
            channel_uses: c.channel_uses,
            degenerate_trials: c.degenerate,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct TrialCounts {
    bit_errors: u64,
    bits: u64,
    trials: u64,
    channel_uses: u64,
    degenerate: u64,
}

impl std::ops::Add for TrialCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        TrialCounts {
            bit_errors: self.bit_errors + o.bit_errors,
            bits: self.bits + o.bits,
            trials: self.trials + o.trials,
            channel_uses: self.channel_uses + o.channel_uses,
            degenerate: self.degenerate + o.degenerate,
        }
    }
}

fn run_trial(
    cfg: &SystemConfig,
    n0: f64,
    symbols: usize,
    seed: u64,
    trial: u64,
) -> Result<TrialCounts> {
    let (b, u) = (cfg.antennas, cfg.users);
    let bps = cfg.modulation.bits_per_symbol();
    let bits = (symbols * u * bps) as u64;

    let mut ch_rng = stream(seed, trial, Purpose::Channel);
    let ch = apply_power_control(generate_channel(&cfg.channel, b, u, &mut ch_rng)?)?
        .normalize()
        .with_active(cfg.active_antennas)?;
    let h_act = ch.active_rows();
    let mut pilot_rng = stream(seed, trial, Purpose::Pilot);
    let h_est = estimate_channel(&ch, cfg.estimation, cfg.es, n0, &mut pilot_rng)?;

    let stats = adc_input_variance(&h_act, &ch.sigma2, cfg.es, n0)?;
    let adc = adc_quantizer(cfg.adc_bits, &stats)?;

    let bundle = match EqualizerBundle::build(&h_est, n0 / cfg.es, cfg.eq_bits) {
        Ok(b) => b,
        Err(Error::DegenerateEqualizer { .. }) | Err(Error::Numerical(_)) => {
            return Ok(TrialCounts {
                bit_errors: bits / 2,
                bits,
                trials: 1,
                channel_uses: symbols as u64,
                degenerate: 1,
            });
        }
        Err(e) => return Err(e),
    };

    let tx_scale: Vec<f64> = ch.sigma2.iter().map(|s| (cfg.es * s).sqrt()).collect();
    let noise_std = (n0 / 2.0).sqrt();
    let (start, len) = (ch.active.start, ch.active.len);

    let mut data_rng = stream(seed, trial, Purpose::Data);
    let mut noise_rng = stream(seed, trial, Purpose::Noise);
    let mut labels = vec![0usize; u];
    let mut s = CVector::zeros(u);
    let mut y = CVector::zeros(len);
    let mut s_hat = CVector::zeros(u);
    let mut noise = vec![Complex64::new(0.0, 0.0); b];
    let order = cfg.modulation.order();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    let mut errors = 0u64;
    for _ in 0..symbols {
        for (i, l) in labels.iter_mut().enumerate() {
            *l = data_rng.random_range(0..order);
            s[i] = cfg.modulation.point(*l) * tx_scale[i];
        }
        for n in noise.iter_mut() {
            let re: f64 = noise_rng.sample(StandardNormal);
            let im: f64 = noise_rng.sample(StandardNormal);
            *n = Complex64::new(re * noise_std, im * noise_std);
        }
        y.gemv(one, &h_act, &s, zero);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = adc.apply_complex(*yi + noise[start + i]);
        }
        bundle.equalize_into(&y, &mut s_hat);
        for i in 0..u {
            let detected = cfg.modulation.detect(s_hat[i] / tx_scale[i]);
            errors += (detected ^ labels[i]).count_ones() as u64;
        }
    }
    Ok(TrialCounts {
        bit_errors: errors,
        bits,
        trials: 1,
        channel_uses: symbols as u64,
        degenerate: 0,
    })
}

fn run_batch(
    cfg: &SystemConfig,
    n0: f64,
    symbols: usize,
    seed: u64,
    first: u64,
    count: u64,
) -> Result<TrialCounts> {
    par_map(count as usize, |i| run_trial(cfg, n0, symbols, seed, first + i as u64))
        .into_iter()
        .try_fold(TrialCounts::default(), |acc, r| r.map(|c| acc + c))
}

/// BER over exactly `n_trials` channel draws.
pub fn run_ber(
    cfg: &SystemConfig,
    snr_db: f64,
    n_trials: u64,
    symbols_per_channel: usize,
    seed: u64,
    engine: &Engine,
) -> Result<BerEstimate> {
    cfg.validate()?;
    if n_trials == 0 || symbols_per_channel == 0 {
        return Err(Error::config("n_trials and symbols_per_channel must be positive"));
    }
    let n0 = cfg.noise_variance(snr_db);
    let counts = engine.install(|| run_batch(cfg, n0, symbols_per_channel, seed, 0, n_trials))?;
    Ok(BerEstimate::from_counts(counts))
}

/// BER with sequential stopping around `target_ber`.
///
/// Batches of channel draws are added until the minimum budget is met and
/// either enough bits were seen to resolve the target to `rel_std_err` or the
/// estimate is clearly on one side of it; the cap on channel uses always wins.
///
/// The precision rule uses the binomial error at the target rather than at the
/// estimate, so it stops after the same number of trials for any design. Probes
/// of neighbouring designs near the target then share their random draws.
pub fn estimate_ber(
    cfg: &SystemConfig,
    snr_db: f64,
    target_ber: f64,
    settings: &TrialSettings,
    seed: u64,
    engine: &Engine,
) -> Result<BerEstimate> {
    cfg.validate()?;
    settings.validate()?;
    let n0 = cfg.noise_variance(snr_db);
    let symbols = settings.symbols_per_channel;
    let max_trials = (settings.max_channel_uses / symbols as u64).max(1);
    engine.install(|| {
        let mut counts = TrialCounts::default();
        while counts.trials < max_trials {
            let n = (settings.channels_per_batch as u64).min(max_trials - counts.trials);
            counts = counts + run_batch(cfg, n0, symbols, seed, counts.trials, n)?;
            if counts.trials < settings.min_channels || counts.bits < settings.min_bits {
                continue;
            }
            let est = BerEstimate::from_counts(counts);
            let at_target = (target_ber * (1.0 - target_ber) / counts.bits as f64).sqrt();
            if at_target <= settings.rel_std_err * target_ber
                || (est.ber - target_ber).abs() > settings.decision_z * est.std_err
            {
                break;
            }
        }
        Ok(BerEstimate::from_counts(counts))
    })
}

/// Minimum-SNR search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub target_ber: f64,
    pub tol_db: f64,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    /// Spacing of the coarse bracketing grid.
    pub grid_step_db: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            target_ber: 0.01,
            tol_db: 0.1,
            snr_min_db: -10.0,
            snr_max_db: 40.0,
            grid_step_db: 2.0,
        }
    }
}

impl SearchSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_ber > 0.0 && self.target_ber < 0.5) {
            return Err(Error::config("target_ber must lie in (0, 0.5)"));
        }
        if !(self.tol_db > 0.0) || !(self.grid_step_db > 0.0) {
            return Err(Error::config("tol_db and grid_step_db must be positive"));
        }
        if !(self.snr_min_db < self.snr_max_db) {
            return Err(Error::config("SNR range must be ordered"));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let n = ((self.snr_max_db - self.snr_min_db) / self.grid_step_db).floor() as usize;
        let mut g: Vec<f64> = (0..=n)
            .map(|i| self.snr_min_db + i as f64 * self.grid_step_db)
            .collect();
        if self.snr_max_db - g[n] > 1e-9 {
            g.push(self.snr_max_db);
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub snr_db: f64,
    pub ber: BerEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrSearch {
    pub min_snr_db: f64,
    /// Probes in evaluation order.
    pub probes: Vec<Probe>,
    /// Set when a higher-SNR probe had a significantly larger BER.
    pub non_monotone: bool,
}

/// Outcome of a min-SNR search that keeps probe diagnostics on failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub result: Result<f64>,
    pub probes: Vec<Probe>,
    pub non_monotone: bool,
}

struct Prober<'a> {
    cfg: &'a SystemConfig,
    search: &'a SearchSettings,
    trials: &'a TrialSettings,
    seed: u64,
    engine: &'a Engine,
    probes: Vec<Probe>,
}

impl Prober<'_> {
    fn ber(&mut self, snr_db: f64) -> Result<BerEstimate> {
        if let Some(p) = self.probes.iter().find(|p| p.snr_db == snr_db) {
            return Ok(p.ber);
        }
        let ber = estimate_ber(self.cfg, snr_db, self.search.target_ber, self.trials, self.seed, self.engine)?;
        self.probes.push(Probe { snr_db, ber });
        Ok(ber)
    }

    fn non_monotone(&self) -> bool {
        let mut sorted = self.probes.clone();
        sorted.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        sorted.iter().enumerate().any(|(i, lo)| {
            sorted[i + 1..].iter().any(|hi| {
                let se = (lo.ber.std_err.powi(2) + hi.ber.std_err.powi(2)).sqrt();
                hi.ber.ber > lo.ber.ber + 3.0 * se && hi.ber.ber - lo.ber.ber > 0.0
            })
        })
    }
}

fn interpolate(lo: &Probe, hi: &Probe, target: f64) -> f64 {
    let (b_lo, b_hi) = (lo.ber.ber, hi.ber.ber);
    let frac = if b_hi > 0.0 {
        (b_lo.ln() - target.ln()) / (b_lo.ln() - b_hi.ln())
    } else {
        (b_lo - target) / b_lo
    };
    lo.snr_db + frac.clamp(0.0, 1.0) * (hi.snr_db - lo.snr_db)
}

/// Smallest SNR (dB) at which the estimated BER reaches `target_ber`.
///
/// The top of the range is probed first to detect error floors. The coarse
/// grid is then walked from the grid point at or below `hint_db` (the bottom of
/// the range without a hint) until two neighbouring points straddle the target,
/// and that interval is bisected down to `tol_db`. The returned value
/// interpolates log-BER inside the final bracket.
pub fn search_min_snr(
    cfg: &SystemConfig,
    search: &SearchSettings,
    trials: &TrialSettings,
    seed: u64,
    hint_db: Option<f64>,
    engine: &Engine,
) -> SearchOutcome {
    let mut p = Prober { cfg, search, trials, seed, engine, probes: Vec::new() };
    let result = (|| {
        cfg.validate()?;
        search.validate()?;
        trials.validate()?;
        let target = search.target_ber;
        let grid = search.grid();
        let top = grid.len() - 1;
        let floor = p.ber(grid[top])?;
        if floor.ber > target {
            return Err(Error::Infeasible { floor_ber: floor.ber, target_ber: target });
        }
        let start = hint_db
            .map(|h| grid.iter().rposition(|&g| g <= h).unwrap_or(0))
            .unwrap_or(0);
        // Index of the first grid point meeting the target.
        let mut i = start;
        if p.ber(grid[i])?.ber <= target {
            while i > 0 && p.ber(grid[i - 1])?.ber <= target {
                i -= 1;
            }
        } else {
            while p.ber(grid[i])?.ber > target {
                i += 1;
            }
        }
        if i == 0 {
            return Err(Error::BelowSearchRange { low_db: grid[0] });
        }
        let (mut lo, mut hi) = (grid[i - 1], grid[i]);
        while hi - lo > search.tol_db {
            let mid = 0.5 * (lo + hi);
            if p.ber(mid)?.ber <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let find = |s: f64| *p.probes.iter().find(|x| x.snr_db == s).unwrap();
        Ok(interpolate(&find(lo), &find(hi), target))
    })();
    let non_monotone = p.non_monotone();
    SearchOutcome { result, probes: p.probes, non_monotone }
}

pub fn min_snr_for_target(
    cfg: &SystemConfig,
    search: &SearchSettings,
    trials: &TrialSettings,
    seed: u64,
    engine: &Engine,
) -> Result<SnrSearch> {
    let out = search_min_snr(cfg, search, trials, seed, None, engine);
    Ok(SnrSearch {
        min_snr_db: out.result?,
        probes: out.probes,
        non_monotone: out.non_monotone,
    })
}

/// SNR loss (dB) of `cfg` relative to `reference` on the same seed ensemble.
pub fn snr_loss(
    cfg: &SystemConfig,
    reference: &SystemConfig,
    search: &SearchSettings,
    trials: &TrialSettings,
    seed: u64,
    engine: &Engine,
) -> Result<f64> {
    if cfg == reference {
        min_snr_for_target(cfg, search, trials, seed, engine)?;
        return Ok(0.0);
    }
    let a = min_snr_for_target(cfg, search, trials, seed, engine)?.min_snr_db;
    let b = min_snr_for_target(reference, search, trials, seed, engine)?.min_snr_db;
    Ok(a - b)
}

/// Draws one processed channel for inspection or export.
pub fn draw_channel(cfg: &SystemConfig, seed: u64, trial: u64) -> Result<crate::channel::ChannelRealization> {
    cfg.validate()?;
    let mut rng = stream(seed, trial, Purpose::Channel);
    apply_power_control(generate_channel(&cfg.channel, cfg.antennas, cfg.users, &mut rng)?)
        .map(|c| c.normalize())?
        .with_active(cfg.active_antennas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        SystemConfig {
            antennas: 16,
            active_antennas: 16,
            users: 2,
            adc_bits: Bits::Infinite,
            eq_bits: Bits::Infinite,
            modulation: Modulation::Qpsk,
            estimation: EstimationMode::Perfect,
            channel: ChannelModelSpec::rayleigh(),
            ..Default::default()
        }
    }

    #[test]
    fn high_snr_ideal_is_error_free() {
        let cfg = SystemConfig { antennas: 8, active_antennas: 8, users: 4, ..small() };
        let est = run_ber(&cfg, 60.0, 20, 32, 1, &Engine::sequential()).unwrap();
        assert_eq!(est.bit_errors, 0);
        assert_eq!(est.bits_total, 20 * 32 * 4 * 2);
    }

    #[test]
    fn counts_are_consistent() {
        let est = run_ber(&small(), -5.0, 10, 16, 2, &Engine::sequential()).unwrap();
        assert_eq!(est.ber, est.bit_errors as f64 / est.bits_total as f64);
        let se = (est.ber * (1.0 - est.ber) / est.bits_total as f64).sqrt();
        assert_eq!(est.std_err, se);
        assert!(est.bit_errors > 0);
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let cfg = SystemConfig { adc_bits: Bits::Finite(2), eq_bits: Bits::Finite(2), ..small() };
        let a = run_ber(&cfg, 0.0, 24, 16, 9, &Engine::new(1).unwrap()).unwrap();
        let b = run_ber(&cfg, 0.0, 24, 16, 9, &Engine::new(4).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_rejected_before_trials() {
        let cfg = SystemConfig { active_antennas: 17, ..small() };
        assert!(matches!(run_ber(&cfg, 0.0, 1, 1, 0, &Engine::sequential()), Err(Error::Config(_))));
        let cfg = SystemConfig { adc_bits: Bits::Finite(9), ..small() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_includes_range_end() {
        let s = SearchSettings { snr_min_db: -3.0, snr_max_db: 4.0, grid_step_db: 2.0, ..Default::default() };
        assert_eq!(s.grid(), vec![-3.0, -1.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn self_reference_has_zero_loss() {
        let search = SearchSettings { snr_min_db: -20.0, ..Default::default() };
        let cfg = small();
        let loss = snr_loss(&cfg, &cfg, &search, &TrialSettings::default(), 3, &Engine::sequential()).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn search_brackets_the_target() {
        let search = SearchSettings { snr_min_db: -20.0, ..Default::default() };
        let r = min_snr_for_target(&small(), &search, &TrialSettings::default(), 4, &Engine::sequential()).unwrap();
        let below = r.probes.iter().filter(|p| p.snr_db < r.min_snr_db).map(|p| p.ber.ber);
        let above = r.probes.iter().filter(|p| p.snr_db > r.min_snr_db).map(|p| p.ber.ber);
        assert!(below.clone().count() > 0 && above.clone().count() > 0);
        // The closest probes on either side straddle the target.
        let lo = r.probes.iter().filter(|p| p.snr_db <= r.min_snr_db).max_by(|a, b| a.snr_db.total_cmp(&b.snr_db)).unwrap();
        let hi = r.probes.iter().filter(|p| p.snr_db >= r.min_snr_db).min_by(|a, b| a.snr_db.total_cmp(&b.snr_db)).unwrap();
        assert!(lo.ber.ber > 0.01 && hi.ber.ber <= 0.01);
        assert!(hi.snr_db - lo.snr_db <= 0.1 + 1e-12);
    }

    #[test]
    fn range_too_high_is_reported() {
        let search = SearchSettings { snr_min_db: 20.0, snr_max_db: 30.0, ..Default::default() };
        let err = min_snr_for_target(&small(), &search, &TrialSettings::default(), 4, &Engine::sequential()).unwrap_err();
        assert!(matches!(err, Error::BelowSearchRange { .. }));
    }

    #[test]
    fn one_bit_dense_qam_is_infeasible() {
        let cfg = SystemConfig {
            antennas: 32,
            active_antennas: 32,
            users: 8,
            adc_bits: Bits::Finite(1),
            eq_bits: Bits::Infinite,
            modulation: Modulation::Qam16,
            channel: ChannelModelSpec::default(),
            ..small()
        };
        let err = min_snr_for_target(&cfg, &SearchSettings::default(), &TrialSettings::default(), 5, &Engine::sequential())
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }), "{err:?}");
    }
}
