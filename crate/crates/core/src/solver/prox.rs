//! Proximal maps of the conjugates of the fidelity and graph terms.

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};

/// Scalar prox of `σ F*` for the weighted KL fidelity term
/// `f(z) = ω z − ω c log z`:
/// `(y + ω − sqrt((y − ω)² + 4 σ ω c)) / 2`, equal to `min(y, ω)` when `c = 0`.
#[inline]
pub fn prox_kl_conj_scalar(y: f64, omega: f64, c: f64, sigma: f64) -> f64 {
    if c == 0.0 {
        return y.min(omega);
    }
    let disc = ((y - omega) * (y - omega) + 4.0 * sigma * omega * c).sqrt();
    let s = y + omega;
    if s > 0.0 {
        // Rationalized form; avoids cancellation for large y.
        2.0 * omega * (y - sigma * c) / (s + disc)
    } else {
        0.5 * (s - disc)
    }
}

fn check_shapes(y: &ArrayView2<f64>, others: &[&ArrayView2<f64>]) -> Result<()> {
    for o in others {
        if o.dim() != y.dim() {
            return Err(Error::argument(format!("shape mismatch: {:?} vs {:?}", y.dim(), o.dim())));
        }
    }
    Ok(())
}

pub fn prox_kl_conj(
    y: ArrayView2<f64>,
    omega: ArrayView2<f64>,
    c: ArrayView2<f64>,
    sigma1: f64,
) -> Result<Array2<f64>> {
    check_shapes(&y, &[&omega, &c])?;
    if !(sigma1 > 0.0) {
        return Err(Error::argument(format!("sigma1 must be positive, got {sigma1}")));
    }
    let mut out = Array2::zeros(y.dim());
    Zip::from(&mut out).and(&y).and(&omega).and(&c).for_each(|o, &y, &w, &c| *o = prox_kl_conj_scalar(y, w, c, sigma1));
    Ok(out)
}

/// Prox of the conjugate of `θ‖·‖₁`: clipping to `[−θ, θ]`.
pub fn prox_tv_conj(y: ArrayView2<f64>, theta: f64) -> Result<Array2<f64>> {
    if !(theta >= 0.0) {
        return Err(Error::argument(format!("theta must be non-negative, got {theta}")));
    }
    Ok(y.mapv(|v| v.clamp(-theta, theta)))
}

/// Prox of the conjugate of `(θ/2)‖·‖²`: scaling by `θ / (σ₂ + θ)`.
pub fn prox_tikhonov_conj(y: ArrayView2<f64>, theta: f64, sigma2: f64) -> Result<Array2<f64>> {
    if !(theta >= 0.0) || !(sigma2 > 0.0) {
        return Err(Error::argument(format!("need theta >= 0 and sigma2 > 0, got {theta} and {sigma2}")));
    }
    let s = theta / (sigma2 + theta);
    Ok(y.mapv(|v| s * v))
}
