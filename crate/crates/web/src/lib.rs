//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The plain functions are what the page computes; the `#[wasm_bindgen]`
//! wrappers only flatten results into `Float64Array`s and turn errors into JS
//! exceptions. A resolution of 0 bits stands for "unquantized".

use resadapt::channel::{ChannelModelSpec, EstimationMode};
use resadapt::constellation::Modulation;
use resadapt::engine::Engine;
use resadapt::frontend::{gaussian_mse, quantize_scalar, unit_optimal_step};
use resadapt::montecarlo::{run_ber, SystemConfig};
use resadapt::power::{total_power, DesignPoint, PowerConstants};
use resadapt::{Bits, Error, Result};
use wasm_bindgen::prelude::*;

fn bits(b: u32) -> Bits {
    if b == 0 {
        Bits::Infinite
    } else {
        Bits::Finite(b)
    }
}

/// Transfer curve of the MSE-optimal `q`-bit quantizer for unit input
/// variance, sampled on `[-span, span]`, as `(x, Q(x))` pairs, followed by the
/// step size and its MSE.
pub fn quantizer_transfer(q: u32, span: f64, points: usize) -> Result<(Vec<(f64, f64)>, f64, f64)> {
    if points < 2 || !(span > 0.0) {
        return Err(Error::Config("need at least two points and a positive span".into()));
    }
    let delta = unit_optimal_step(q)?;
    let curve = (0..points)
        .map(|i| {
            let x = -span + 2.0 * span * i as f64 / (points - 1) as f64;
            (x, quantize_scalar(x, q, delta))
        })
        .collect();
    Ok((curve, delta, gaussian_mse(q, delta)))
}

/// `[p_adc, p_eq, p_total]` in watts.
pub fn power(q: u32, k: u32, b_prime: usize, users: usize, sample_rate: f64) -> Result<[f64; 3]> {
    if q == 0 || k == 0 {
        return Err(Error::ModelUndefined("unquantized designs"));
    }
    let p = total_power(&DesignPoint::new(bits(q), bits(k), b_prime), users, sample_rate, &PowerConstants::default())?;
    Ok([p.p_adc, p.p_eq, p.p_total])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerRequest {
    pub modulation: Modulation,
    pub rayleigh: bool,
    pub antennas: usize,
    pub users: usize,
    pub adc_bits: u32,
    pub eq_bits: u32,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

/// BER at each requested SNR with perfect channel knowledge.
pub fn ber_curve(req: &BerRequest) -> Result<Vec<f64>> {
    let cfg = SystemConfig {
        antennas: req.antennas,
        active_antennas: req.antennas,
        users: req.users,
        adc_bits: bits(req.adc_bits),
        eq_bits: bits(req.eq_bits),
        modulation: req.modulation,
        channel: if req.rayleigh { ChannelModelSpec::rayleigh() } else { ChannelModelSpec::default() },
        estimation: EstimationMode::Perfect,
        ..Default::default()
    };
    let engine = Engine::sequential();
    req.snr_db
        .iter()
        .map(|&snr| run_ber(&cfg, snr, req.trials, 8, req.seed, &engine).map(|e| e.ber))
        .collect()
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Flat `[x0, y0, x1, y1, ..., delta, mse]`.
#[wasm_bindgen(js_name = quantizerTransfer)]
pub fn quantizer_transfer_js(q: u32, span: f64, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    let (curve, delta, mse) = quantizer_transfer(q, span, points).map_err(js)?;
    let mut flat: Vec<f64> = curve.into_iter().flat_map(|(x, y)| [x, y]).collect();
    flat.extend([delta, mse]);
    Ok(flat)
}

#[wasm_bindgen(js_name = powerBreakdown)]
pub fn power_js(q: u32, k: u32, b_prime: usize, users: usize, sample_rate: f64) -> std::result::Result<Vec<f64>, JsError> {
    power(q, k, b_prime, users, sample_rate).map(Vec::from).map_err(js)
}

#[wasm_bindgen(js_name = berCurve)]
#[allow(clippy::too_many_arguments)]
pub fn ber_curve_js(
    modulation: &str,
    rayleigh: bool,
    antennas: usize,
    users: usize,
    adc_bits: u32,
    eq_bits: u32,
    snr_db: Vec<f64>,
    trials: u32,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    let modulation: Modulation = modulation.parse().map_err(js)?;
    ber_curve(&BerRequest {
        modulation,
        rayleigh,
        antennas,
        users,
        adc_bits,
        eq_bits,
        snr_db,
        trials: trials as u64,
        seed: seed as u64,
    })
    .map_err(js)
}
