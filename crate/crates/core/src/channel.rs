//! Uplink channel generation, per-UE power control, active-antenna selection
//! and pilot-based channel estimation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Maximum number of angle draws before a LoS drop is declared infeasible.
pub const MAX_ANGLE_ATTEMPTS: usize = 10_000;

/// Received-power spread allowed by the power-control loop (±3 dB).
pub const POWER_CONTROL_SPREAD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    /// Single-path line-of-sight uniform linear array with log-distance pathloss.
    LosUla,
    /// Rich scattering, i.i.d. unit-variance Rayleigh entries.
    IidRayleigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModelSpec {
    pub kind: ChannelKind,
    /// Angular sector `[low, high]` in degrees relative to broadside.
    pub sector_deg: [f64; 2],
    pub min_separation_deg: f64,
    /// UE distance range `[near, far]` in meters.
    pub distance_m: [f64; 2],
    pub pathloss_exponent: f64,
    /// Antenna pitch in wavelengths.
    pub antenna_spacing: f64,
}

impl Default for ChannelModelSpec {
    fn default() -> Self {
        ChannelModelSpec {
            kind: ChannelKind::LosUla,
            sector_deg: [-60.0, 60.0],
            min_separation_deg: 1.0,
            distance_m: [10.0, 100.0],
            pathloss_exponent: 2.0,
            antenna_spacing: 0.5,
        }
    }
}

impl ChannelModelSpec {
    pub fn rayleigh() -> Self {
        ChannelModelSpec {
            kind: ChannelKind::IidRayleigh,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.sector_deg;
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi || lo < -90.0 || hi > 90.0 {
            return Err(Error::config(format!(
                "sector {:?} must be an ordered interval within ±90°",
                self.sector_deg
            )));
        }
        if !(self.min_separation_deg > 0.0) {
            return Err(Error::config("min_separation_deg must be positive"));
        }
        let [near, far] = self.distance_m;
        if !(near > 0.0 && far >= near && far.is_finite()) {
            return Err(Error::config(format!(
                "distance range {:?} must be positive and ordered",
                self.distance_m
            )));
        }
        if !(self.pathloss_exponent >= 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::config("pathloss_exponent must be finite and non-negative"));
        }
        if !(self.antenna_spacing > 0.0 && self.antenna_spacing.is_finite()) {
            return Err(Error::config("antenna_spacing must be positive"));
        }
        Ok(())
    }
}

/// Contiguous block of active antennas, stored 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AntennaRange {
    pub start: usize,
    pub len: usize,
}

impl AntennaRange {
    /// 1-based inclusive bounds, as used in reports.
    pub fn one_based(&self) -> (usize, usize) {
        (self.start + 1, self.start + self.len)
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Centered block of `b_prime` antennas out of `b`.
pub fn select_antennas(b: usize, b_prime: usize) -> Result<AntennaRange> {
    if b_prime < 1 || b_prime > b {
        return Err(Error::config(format!(
            "active antennas B'={b_prime} must lie in 1..={b}"
        )));
    }
    Ok(AntennaRange {
        start: (b - b_prime) / 2,
        len: b_prime,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Full `B × U` channel matrix.
    pub h: CMatrix,
    /// Per-UE transmit power scale σ²_u.
    pub sigma2: Vec<f64>,
    /// Per-UE large-scale (per-antenna mean) power gain, used for SNR normalization.
    pub large_scale: Vec<f64>,
    pub active: AntennaRange,
}

impl ChannelRealization {
    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn column_energy(&self) -> Vec<f64> {
        self.h
            .column_iter()
            .map(|c| c.iter().map(|x| x.norm_sqr()).sum())
            .collect()
    }

    /// σ²_u‖h_u‖² for every UE.
    pub fn effective_power(&self) -> Vec<f64> {
        self.column_energy()
            .iter()
            .zip(&self.sigma2)
            .map(|(g, s)| g * s)
            .collect()
    }

    pub fn active_rows(&self) -> CMatrix {
        self.h
            .rows(self.active.start, self.active.len)
            .into_owned()
    }

    pub fn with_active(mut self, b_prime: usize) -> Result<Self> {
        self.active = select_antennas(self.antennas(), b_prime)?;
        Ok(self)
    }

    /// Rescales `H` so that `Σ_u σ²_u β_u = 1`, where `β_u` is the large-scale
    /// per-antenna gain. With that convention the average receive SNR over the
    /// full array equals `Es / N0`.
    pub fn normalize(mut self) -> Self {
        let total: f64 = self
            .sigma2
            .iter()
            .zip(&self.large_scale)
            .map(|(s, b)| s * b)
            .sum();
        if total > 0.0 && total.is_finite() {
            let c = total.sqrt().recip();
            self.h *= Complex64::new(c, 0.0);
            for b in &mut self.large_scale {
                *b *= c * c;
            }
        }
        self
    }
}

/// Steering vector of an `b`-element ULA with pitch `spacing` wavelengths.
pub fn steering_vector(b: usize, theta_rad: f64, spacing: f64) -> CVector {
    let phase = 2.0 * PI * spacing * theta_rad.sin();
    CVector::from_iterator(b, (0..b).map(|i| Complex64::from_polar(1.0, phase * i as f64)))
}

pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

fn draw_angles<R: Rng + ?Sized>(spec: &ChannelModelSpec, u: usize, rng: &mut R) -> Result<Vec<f64>> {
    let [lo, hi] = spec.sector_deg;
    let width = hi - lo;
    if u as f64 * spec.min_separation_deg > width {
        return Err(Error::config(format!(
            "cannot place {u} UEs {}° apart in a {width}° sector",
            spec.min_separation_deg
        )));
    }
    let mut angles: Vec<f64> = Vec::with_capacity(u);
    let mut attempts = 0;
    while angles.len() < u {
        if attempts == MAX_ANGLE_ATTEMPTS {
            return Err(Error::config(format!(
                "angle assignment for {u} UEs failed after {MAX_ANGLE_ATTEMPTS} draws"
            )));
        }
        attempts += 1;
        let a = rng.random_range(lo..hi);
        if angles
            .iter()
            .all(|&x| (x - a).abs() >= spec.min_separation_deg)
        {
            angles.push(a);
        }
    }
    Ok(angles)
}

/// Draws a channel before power control (σ²_u = 1, all antennas active).
pub fn generate_channel<R: Rng + ?Sized>(
    spec: &ChannelModelSpec,
    b: usize,
    u: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    spec.validate()?;
    if u == 0 || b == 0 {
        return Err(Error::config("need at least one antenna and one UE"));
    }
    let (h, large_scale) = match spec.kind {
        ChannelKind::IidRayleigh => {
            let h = CMatrix::from_fn(b, u, |_, _| complex_normal(rng, 1.0));
            (h, vec![1.0; u])
        }
        ChannelKind::LosUla => {
            if b < u {
                return Err(Error::config(format!("LoS drop needs B >= U (B={b}, U={u})")));
            }
            let angles = draw_angles(spec, u, rng)?;
            let [near, far] = spec.distance_m;
            let mut h = CMatrix::zeros(b, u);
            let mut large_scale = Vec::with_capacity(u);
            for (col, theta) in angles.iter().enumerate() {
                let d = if far > near { rng.random_range(near..far) } else { near };
                let amp = (near / d).powf(spec.pathloss_exponent / 2.0);
                let phase = rng.random_range(0.0..2.0 * PI);
                let g = Complex64::from_polar(amp, phase);
                let a = steering_vector(b, theta.to_radians(), spec.antenna_spacing);
                h.set_column(col, &(a * g));
                large_scale.push(amp * amp);
            }
            (h, large_scale)
        }
    };
    Ok(ChannelRealization {
        h,
        sigma2: vec![1.0; u],
        large_scale,
        active: AntennaRange { start: 0, len: b },
    })
}

/// Sets σ²_u so that the received powers σ²_u‖h_u‖² stay within ±3 dB.
///
/// Each UE first moves toward the geometric mean ḡ of the column energies with
/// its gain clamped to [1/2, 2]; the resulting effective power is then held in
/// [ḡ/2, 2ḡ], which bounds the max/min spread by 4.
pub fn apply_power_control(mut ch: ChannelRealization) -> Result<ChannelRealization> {
    let g = ch.column_energy();
    if let Some(ue) = g.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::DegenerateChannel { ue });
    }
    let gbar = (g.iter().map(|x| x.ln()).sum::<f64>() / g.len() as f64).exp();
    ch.sigma2 = g
        .iter()
        .map(|&gu| {
            let s = (gbar / gu).clamp(0.5, 2.0);
            let p = (s * gu).clamp(gbar / 2.0, 2.0 * gbar);
            p / gu
        })
        .collect();
    Ok(ch)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMode {
    Perfect,
    LsPilot,
}

/// Channel estimate for the active antennas (`B' × U`).
///
/// `ls-pilot` sends one orthonormal DFT pilot sequence of length `U` per UE at
/// power `Es·σ²_u`; noise is drawn for every antenna so that estimates on
/// shared antennas agree across different `B'`.
pub fn estimate_channel<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    mode: EstimationMode,
    es: f64,
    n0: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    let active = ch.active_rows();
    match mode {
        EstimationMode::Perfect => Ok(active),
        EstimationMode::LsPilot => {
            let u = ch.users();
            if !(es > 0.0) {
                return Err(Error::config("pilot estimation needs Es > 0"));
            }
            let amp: Vec<f64> = ch.sigma2.iter().map(|s| (es * s).sqrt()).collect();
            // pilots[u, t] = amp_u · exp(-j2π t u / U) / √U
            let norm = (u as f64).sqrt().recip();
            let pilots = CMatrix::from_fn(u, u, |row, t| {
                let ang = -2.0 * PI * (row * t) as f64 / u as f64;
                Complex64::from_polar(amp[row] * norm, ang)
            });
            let full_noise = CMatrix::from_fn(ch.antennas(), u, |_, _| complex_normal(rng, n0));
            let noise = full_noise.rows(ch.active.start, ch.active.len);
            let received = &active * &pilots + noise;
            let mut est = received * pilots.adjoint();
            for (col, a) in amp.iter().enumerate() {
                let energy = a * a;
                est.column_mut(col)
                    .apply(|x| *x /= Complex64::new(energy, 0.0));
            }
            Ok(est)
        }
    }
}
