//! Power models for the ADC array and the finite-alphabet equalizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resolution::Bits;

/// Model constants. Defaults are 28 nm CMOS figures for a 2 GS/s design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConstants {
    /// Walden figure of merit in joules per conversion step.
    pub fom_j: f64,
    /// Equalizer power fit `slope·k + offset` in watts at the reference point.
    pub eq_fit_slope_w: f64,
    pub eq_fit_offset_w: f64,
}

impl Default for PowerConstants {
    fn default() -> Self {
        PowerConstants {
            fom_j: 70.8e-15,
            eq_fit_slope_w: 2.44,
            eq_fit_offset_w: -0.48,
        }
    }
}

/// Operating point at which the equalizer fit was measured.
pub const EQ_REF_ADC_BITS: f64 = 7.0;
pub const EQ_REF_ANTENNAS: f64 = 256.0;
pub const EQ_REF_USERS: f64 = 16.0;
pub const EQ_REF_RATE: f64 = 2e9;

impl PowerConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.fom_j > 0.0 && self.fom_j.is_finite()) {
            return Err(Error::config("fom_j must be positive"));
        }
        if !(self.eq_fit_slope_w > 0.0) || !self.eq_fit_offset_w.is_finite() {
            return Err(Error::config("equalizer fit needs a positive slope and finite offset"));
        }
        if self.eq_fit_slope_w + self.eq_fit_offset_w <= 0.0 {
            return Err(Error::config("equalizer fit must be positive at k = 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBreakdown {
    pub p_adc: f64,
    pub p_eq: f64,
    pub p_total: f64,
}

fn finite_bits(bits: Bits, what: &'static str) -> Result<f64> {
    match bits {
        Bits::Finite(b) if b >= 1 => Ok(b as f64),
        Bits::Finite(_) => Err(Error::config(format!("{what} needs at least one bit"))),
        Bits::Infinite => Err(Error::ModelUndefined(what)),
    }
}

/// `FoM · 2^q · 2B' · f_s` watts for the `2B'` I/Q converters.
pub fn adc_power(q: Bits, b_prime: usize, fs: f64, fom_j: f64) -> Result<f64> {
    let q = finite_bits(q, "infinite ADC resolution")?;
    Ok(fom_j * q.exp2() * 2.0 * b_prime as f64 * fs)
}

/// Linear-fit equalizer power, proportional to `q`, `B'`, `U` and `f_s`.
pub fn eq_power(
    k: Bits,
    q: Bits,
    b_prime: usize,
    u: usize,
    fs: f64,
    constants: &PowerConstants,
) -> Result<f64> {
    let k = finite_bits(k, "infinite equalizer resolution")?;
    let q = finite_bits(q, "infinite ADC resolution")?;
    Ok((constants.eq_fit_slope_w * k + constants.eq_fit_offset_w)
        * (q / EQ_REF_ADC_BITS)
        * (b_prime as f64 / EQ_REF_ANTENNAS)
        * (u as f64 / EQ_REF_USERS)
        * (fs / EQ_REF_RATE))
}

/// A point in the design space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesignPoint {
    pub q: Bits,
    pub k: Bits,
    pub b_prime: usize,
}

impl DesignPoint {
    pub fn new(q: Bits, k: Bits, b_prime: usize) -> Self {
        DesignPoint { q, k, b_prime }
    }

    pub fn is_finite(&self) -> bool {
        !self.q.is_infinite() && !self.k.is_infinite()
    }

    /// Lexicographic `(q, k, B')` key, infinities last.
    pub fn sort_key(&self) -> (u32, u32, usize) {
        (self.q.key(), self.k.key(), self.b_prime)
    }
}

pub fn total_power(
    point: &DesignPoint,
    u: usize,
    fs: f64,
    constants: &PowerConstants,
) -> Result<PowerBreakdown> {
    let p_adc = adc_power(point.q, point.b_prime, fs, constants.fom_j)?;
    let p_eq = eq_power(point.k, point.q, point.b_prime, u, fs, constants)?;
    Ok(PowerBreakdown {
        p_adc,
        p_eq,
        p_total: p_adc + p_eq,
    })
}
