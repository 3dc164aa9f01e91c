//! Run configuration file (TOML) shared by the command-line tool.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapt::SweepGrid;
use crate::channel::{ChannelModelSpec, EstimationMode};
use crate::constellation::Modulation;
use crate::equalizer::MAX_EQ_BITS;
use crate::error::{Error, Result};
use crate::frontend::MAX_ADC_BITS;
use crate::montecarlo::{SearchSettings, SystemConfig, TrialSettings};
use crate::power::PowerConstants;
use crate::resolution::Bits;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub antennas: usize,
    pub active_antennas: Option<usize>,
    pub users: usize,
    pub adc_bits: Bits,
    pub eq_bits: Bits,
    pub sample_rate: f64,
    pub es: f64,
    pub modulation: Modulation,
    pub estimation: EstimationMode,
}

impl Default for SystemSection {
    fn default() -> Self {
        let s = SystemConfig::default();
        SystemSection {
            antennas: s.antennas,
            active_antennas: None,
            users: s.users,
            adc_bits: s.adc_bits,
            eq_bits: s.eq_bits,
            sample_rate: s.sample_rate,
            es: s.es,
            modulation: s.modulation,
            estimation: s.estimation,
        }
    }
}

/// Design-space grid. Empty antenna or UE lists fall back to the system values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub adc_bits: Vec<Bits>,
    pub eq_bits: Vec<Bits>,
    pub active_antennas: Vec<usize>,
    pub users: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let full = SweepGrid::full(vec![]);
        SweepSection {
            adc_bits: full.adc_bits,
            eq_bits: full.eq_bits,
            active_antennas: vec![],
            users: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerSection {
    pub snr_db: Vec<f64>,
    /// Channel draws per SNR point.
    pub trials: u64,
}

impl Default for BerSection {
    fn default() -> Self {
        BerSection {
            snr_db: (-10..=10).step_by(5).map(f64::from).collect(),
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedBaseline {
    pub q: Bits,
    pub k: Bits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub constraint_db: f64,
    pub allowed_loss_db: Vec<f64>,
    /// Use this `(q, k)` instead of selecting the baseline from this run.
    pub baseline: Option<FixedBaseline>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            constraint_db: 0.1,
            allowed_loss_db: vec![0.1, 0.5],
            baseline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads; 0 uses every core. Not part of the resolved config since
    /// it never changes results.
    #[serde(skip_serializing)]
    pub workers: usize,
    #[serde(skip_serializing)]
    pub out: String,
    #[serde(skip_serializing)]
    pub verbose: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 1,
            workers: 0,
            out: "out".into(),
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub channel: ChannelModelSpec,
    pub sweep: SweepSection,
    pub search: SearchSettings,
    pub trials: TrialSettings,
    pub ber: BerSection,
    pub compare: CompareSection,
    pub power: PowerConstants,
    pub run: RunSection,
}

fn check_bits(bits: Bits, max: u32, what: &str) -> Result<()> {
    match bits {
        Bits::Finite(b) if b < 1 || b > max => {
            Err(Error::config(format!("{what} {b} outside 1..={max}")))
        }
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Resolved configuration, without execution-only settings.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always serializable")
    }

    pub fn system_config(&self) -> SystemConfig {
        let s = &self.system;
        SystemConfig {
            antennas: s.antennas,
            active_antennas: s.active_antennas.unwrap_or(s.antennas),
            users: s.users,
            adc_bits: s.adc_bits,
            eq_bits: s.eq_bits,
            sample_rate: s.sample_rate,
            es: s.es,
            modulation: s.modulation,
            channel: self.channel.clone(),
            estimation: s.estimation,
        }
    }

    pub fn grid(&self) -> SweepGrid {
        SweepGrid {
            adc_bits: self.sweep.adc_bits.clone(),
            eq_bits: self.sweep.eq_bits.clone(),
            active_antennas: if self.sweep.active_antennas.is_empty() {
                vec![self.system.antennas]
            } else {
                self.sweep.active_antennas.clone()
            },
        }
    }

    pub fn users(&self) -> Vec<usize> {
        if self.sweep.users.is_empty() {
            vec![self.system.users]
        } else {
            self.sweep.users.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sys = self.system_config();
        sys.validate()?;
        self.search.validate()?;
        self.trials.validate()?;
        self.power.validate()?;
        let grid = self.grid();
        if grid.is_empty() {
            return Err(Error::config("sweep grid is empty"));
        }
        for &q in &grid.adc_bits {
            check_bits(q, MAX_ADC_BITS, "ADC bits")?;
        }
        for &k in &grid.eq_bits {
            check_bits(k, MAX_EQ_BITS, "equalizer bits")?;
        }
        for &b in &grid.active_antennas {
            if b == 0 || b > sys.antennas {
                return Err(Error::config(format!(
                    "sweep active antennas {b} outside 1..={}",
                    sys.antennas
                )));
            }
        }
        for u in self.users() {
            sys.with_users(u).validate()?;
        }
        if self.ber.trials == 0 {
            return Err(Error::config("ber.trials must be positive"));
        }
        if self.ber.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("ber.snr_db values must be finite"));
        }
        if self.compare.allowed_loss_db.iter().any(|l| l.is_nan()) {
            return Err(Error::config("compare.allowed_loss_db must not contain NaN"));
        }
        if let Some(b) = self.compare.baseline {
            if b.q.is_infinite() || b.k.is_infinite() {
                return Err(Error::config("baseline resolutions must be finite"));
            }
            check_bits(b.q, MAX_ADC_BITS, "baseline ADC bits")?;
            check_bits(b.k, MAX_EQ_BITS, "baseline equalizer bits")?;
        }
        Ok(())
    }
}
