//! Per-antenna I/Q ADC model: uniform midrise quantizer, Gaussian-MSE-optimal
//! step size and the ADC input variance used for gain control.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::channel::CVector;
use crate::error::{Error, Result};
use crate::resolution::Bits;

/// Largest ADC resolution with a tabulated optimal step.
pub const MAX_ADC_BITS: u32 = 8;

const GOLDEN_TOL: f64 = 1e-10;

/// `q`-bit uniform midrise quantizer with step `delta`.
///
/// Inputs with `|y| >= Δ·2^(q-1)` saturate to `±(Δ/2)(2^q - 1)`. Inside the
/// granular region the output is `sign(y)·(Δ⌊|y|/Δ⌋ + Δ/2)`, which agrees with
/// `Δ⌊y/Δ⌋ + Δ/2` except on the grid points themselves and is exactly odd.
#[inline]
pub fn quantize_scalar(y: f64, q: u32, delta: f64) -> f64 {
    let half_levels = (1u64 << (q - 1)) as f64;
    let a = y.abs();
    let mag = if a >= delta * half_levels {
        delta * (half_levels - 0.5)
    } else {
        delta * ((a / delta).floor() + 0.5)
    };
    if y < 0.0 {
        -mag
    } else {
        mag
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    pub bits: Bits,
    pub delta: f64,
}

impl QuantizerSpec {
    pub fn new(bits: Bits, delta: f64) -> Result<Self> {
        match bits {
            Bits::Finite(0) => Err(Error::config("quantizer needs at least one bit")),
            Bits::Finite(q) if q > 30 => Err(Error::config(format!("{q} bits is not supported"))),
            Bits::Finite(_) if !(delta > 0.0 && delta.is_finite()) => {
                Err(Error::config(format!("step size {delta} must be positive")))
            }
            _ => Ok(QuantizerSpec { bits, delta }),
        }
    }

    pub fn bypass() -> Self {
        QuantizerSpec {
            bits: Bits::Infinite,
            delta: f64::NAN,
        }
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        match self.bits {
            Bits::Finite(q) => quantize_scalar(y, q, self.delta),
            Bits::Infinite => y,
        }
    }

    #[inline]
    pub fn apply_complex(&self, y: Complex64) -> Complex64 {
        Complex64::new(self.apply(y.re), self.apply(y.im))
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(b) - Φ(a)` for `0 <= a <= b`, computed from the upper tail for accuracy.
fn normal_mass(a: f64, b: f64) -> f64 {
    0.5 * (erfc(a * FRAC_1_SQRT_2) - erfc(b * FRAC_1_SQRT_2))
}

/// `∫_a^b (y - c)² φ(y) dy` for `0 <= a <= b <= ∞`.
fn cell_error(a: f64, b: f64, c: f64) -> f64 {
    let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
    let (apa, bpb) = (a * pa, if b.is_finite() { b * pb } else { 0.0 });
    (1.0 + c * c) * normal_mass(a, b) + apa - bpb - 2.0 * c * (pa - pb)
}

/// Mean-squared quantization error of a `q`-bit midrise quantizer with step
/// `delta` for a unit-variance real Gaussian input.
pub fn gaussian_mse(q: u32, delta: f64) -> f64 {
    let half_levels = 1u64 << (q - 1);
    let mut mse = 0.0;
    for m in 1..=half_levels {
        let a = (m - 1) as f64 * delta;
        let b = if m == half_levels {
            f64::INFINITY
        } else {
            m as f64 * delta
        };
        mse += cell_error(a, b, (m as f64 - 0.5) * delta);
    }
    2.0 * mse
}

/// Golden-section search for the minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn unit_steps() -> &'static [f64; MAX_ADC_BITS as usize] {
    static STEPS: OnceLock<[f64; MAX_ADC_BITS as usize]> = OnceLock::new();
    STEPS.get_or_init(|| {
        let mut out = [0.0; MAX_ADC_BITS as usize];
        for (i, slot) in out.iter_mut().enumerate() {
            let q = i as u32 + 1;
            *slot = golden_section_min(|d| gaussian_mse(q, d), 1e-4, 4.0, GOLDEN_TOL);
        }
        out
    })
}

/// MSE-optimal step for a unit-variance real Gaussian input (cached per `q`).
pub fn unit_optimal_step(q: u32) -> Result<f64> {
    if !(1..=MAX_ADC_BITS).contains(&q) {
        return Err(Error::config(format!(
            "optimal step size is tabulated for 1..={MAX_ADC_BITS} bits, got {q}"
        )));
    }
    Ok(unit_steps()[q as usize - 1])
}

/// MSE-optimal step for a real Gaussian input with standard deviation `sigma`.
pub fn optimal_step_size(q: u32, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config(format!("input std {sigma} must be positive")));
    }
    Ok(sigma * unit_optimal_step(q)?)
}

/// Complex variance seen by the ADCs of the strongest active antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcInputStats {
    pub sigma2_adc: f64,
}

impl AdcInputStats {
    /// Per-real-dimension standard deviation.
    pub fn component_std(&self) -> f64 {
        (self.sigma2_adc / 2.0).sqrt()
    }
}

/// `N0 + Es · max_b Σ_u σ²_u |H_{b,u}|²` over the active rows.
pub fn adc_input_variance(
    h_active: &DMatrix<Complex64>,
    sigma2: &[f64],
    es: f64,
    n0: f64,
) -> Result<AdcInputStats> {
    if h_active.nrows() == 0 {
        return Err(Error::config("empty active antenna set"));
    }
    if h_active.ncols() != sigma2.len() {
        return Err(Error::config("σ² length does not match the number of UEs"));
    }
    let peak = h_active
        .row_iter()
        .map(|row| {
            row.iter()
                .zip(sigma2)
                .map(|(h, s)| s * h.norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(AdcInputStats {
        sigma2_adc: n0 + es * peak,
    })
}

/// Quantizer for an ADC array fed with the given input statistics.
pub fn adc_quantizer(bits: Bits, stats: &AdcInputStats) -> Result<QuantizerSpec> {
    match bits {
        Bits::Infinite => Ok(QuantizerSpec::bypass()),
        Bits::Finite(q) => {
            QuantizerSpec::new(bits, optimal_step_size(q, stats.component_std())?)
        }
    }
}

/// Independent I/Q quantization of the active receive vector.
pub fn adc_array(y_active: &CVector, spec: &QuantizerSpec) -> CVector {
    y_active.map(|y| spec.apply_complex(y))
}
