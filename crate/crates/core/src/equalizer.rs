//! L-MMSE and finite-alphabet (FL-MMSE) spatial equalization.
//!
//! The finite-alphabet equalizer is `Vᴴ = diag(μ)·Xᴴ`: each row of the L-MMSE
//! matrix is quantized to `k` bits per real dimension with a row-specific step,
//! and a high-resolution scale `μ_u` restores an unbiased estimate.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{CMatrix, CVector};
use crate::error::{Error, Result};
use crate::frontend::quantize_scalar;
use crate::resolution::Bits;

/// `|x_uᴴ h̃_u|` below this makes the unbiasing scale unusable.
pub const DEGENERATE_GAIN: f64 = 1e-12;

/// Largest supported finite equalizer resolution.
pub const MAX_EQ_BITS: u32 = 30;

/// `(H̃ᴴH̃ + ρI)⁻¹ H̃ᴴ` with `ρ = N0/Es`, solved through a Cholesky factor of the
/// regularized Gram matrix.
pub fn lmmse_matrix(h_est: &CMatrix, rho: f64) -> Result<CMatrix> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::config(format!("regularizer {rho} must be finite and non-negative")));
    }
    let u = h_est.ncols();
    let h_adj = h_est.adjoint();
    let mut gram = &h_adj * h_est;
    for i in 0..u {
        gram[(i, i)] += Complex64::new(rho, 0.0);
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("regularized Gram matrix is singular".into()))?;
    let pivots = chol.l_dirty().diagonal().map(|d| d.re * d.re);
    if pivots.min() <= f64::EPSILON * u as f64 * pivots.max() {
        return Err(Error::Numerical("regularized Gram matrix is numerically singular".into()));
    }
    let w = chol.solve(&h_adj);
    if w.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Numerical("non-finite L-MMSE matrix".into()));
    }
    Ok(w)
}

/// `max(‖Re a‖_∞, ‖Im a‖_∞)`.
pub fn inf_tilde_norm<'a>(a: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    a.into_iter()
        .fold(0.0, |m, x| m.max(x.re.abs()).max(x.im.abs()))
}

/// Row-wise `k`-bit quantization with `Δ_u = ‖w_u‖_∞̃ · 2^(1-k)`.
pub fn flmmse_quantize(w_h: &CMatrix, k: Bits) -> Result<CMatrix> {
    let k = match k {
        Bits::Infinite => return Ok(w_h.clone()),
        Bits::Finite(k) if (1..=MAX_EQ_BITS).contains(&k) => k,
        Bits::Finite(k) => return Err(Error::config(format!("unsupported equalizer resolution {k}"))),
    };
    let mut x = w_h.clone();
    for (u, mut row) in x.row_iter_mut().enumerate() {
        let norm = inf_tilde_norm(row.iter());
        if !(norm > 0.0) {
            return Err(Error::DegenerateEqualizer { ue: u, reason: "all-zero L-MMSE row" });
        }
        let delta = norm * 2f64.powi(1 - k as i32);
        row.apply(|v| {
            *v = Complex64::new(quantize_scalar(v.re, k, delta), quantize_scalar(v.im, k, delta))
        });
    }
    Ok(x)
}

/// `μ_u = (x_uᴴ h̃_u)⁻¹`, where `x_uᴴ` is row `u` of `Xᴴ`.
pub fn unbiased_scaling(x_h: &CMatrix, h_est: &CMatrix) -> Result<Vec<Complex64>> {
    if x_h.ncols() != h_est.nrows() || x_h.nrows() != h_est.ncols() {
        return Err(Error::config("equalizer and channel dimensions disagree"));
    }
    (0..x_h.nrows())
        .map(|u| {
            let gain = x_h.row(u).transpose().dot(&h_est.column(u));
            if gain.norm() < DEGENERATE_GAIN {
                Err(Error::DegenerateEqualizer { ue: u, reason: "vanishing unbiasing gain" })
            } else {
                Ok(gain.inv())
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerBundle {
    pub w_h: CMatrix,
    pub x_h: CMatrix,
    pub mu: Vec<Complex64>,
    pub k: Bits,
}

impl EqualizerBundle {
    pub fn build(h_est: &CMatrix, rho: f64, k: Bits) -> Result<Self> {
        let w_h = lmmse_matrix(h_est, rho)?;
        let x_h = flmmse_quantize(&w_h, k)?;
        let mu = unbiased_scaling(&x_h, h_est)?;
        Ok(EqualizerBundle { w_h, x_h, mu, k })
    }

    pub fn users(&self) -> usize {
        self.x_h.nrows()
    }

    /// Combined matrix `diag(μ)·Xᴴ`.
    pub fn v_h(&self) -> CMatrix {
        let mut v = self.x_h.clone();
        for (u, mut row) in v.row_iter_mut().enumerate() {
            row *= self.mu[u];
        }
        v
    }

    /// `ŝ_u = μ_u · x_uᴴ z`.
    pub fn equalize(&self, z: &CVector) -> CVector {
        let mut out = CVector::zeros(self.users());
        self.equalize_into(z, &mut out);
        out
    }

    pub fn equalize_into(&self, z: &CVector, out: &mut CVector) {
        out.gemv(Complex64::new(1.0, 0.0), &self.x_h, z, Complex64::new(0.0, 0.0));
        for (s, m) in out.iter_mut().zip(&self.mu) {
            *s *= m;
        }
    }
}

/// Largest deviation of `diag(diag(μ)XᴴH̃)` from one.
pub fn unbiasedness_error(bundle: &EqualizerBundle, h_est: &CMatrix) -> f64 {
    let g: DMatrix<Complex64> = bundle.v_h() * h_est;
    (0..g.nrows().min(g.ncols()))
        .map(|i| (g[(i, i)] - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max)
}
