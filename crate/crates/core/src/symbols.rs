//! Fourier multipliers of the linear part and the closed-form bound functions
//! that control them.
//!
//! The linear operator `−(βℋ∂²_x + η(ℋ∂_x − ∂²_x))` acts on mode `k` as
//! `i q(k) − p(k)` with
//!
//! * `q(k) = β k|k|` (Benjamin-Ono dispersion),
//! * `p(k) = η (k² − |k|)` (net damping; zero on modes `0, ±1`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{FourierField, ModelParams, SobolevIndex};

/// Mode-by-mode symbol `k ↦ (q(k), p(k))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSymbol {
    pub params: ModelParams,
}

impl LinearSymbol {
    pub fn new(params: ModelParams) -> Self {
        LinearSymbol { params }
    }

    pub fn dispersion(&self, k: i64) -> f64 {
        self.params.beta * (k * k.abs()) as f64
    }

    pub fn damping(&self, k: i64) -> f64 {
        self.params.eta * (k * k - k.abs()) as f64
    }

    /// `i q(k) − p(k)`.
    pub fn exponent(&self, k: i64) -> Complex64 {
        Complex64::new(-self.damping(k), self.dispersion(k))
    }

    /// Per-mode factors `e^{(iq(k) − p(k)) t}` for `k = -K..=K`.
    pub fn semigroup_factors(&self, max_mode: usize, t: f64) -> Vec<Complex64> {
        let k = max_mode as i64;
        (-k..=k).map(|m| self.factor(m, t)).collect()
    }

    fn factor(&self, k: i64, t: f64) -> Complex64 {
        let p = self.damping(k);
        let decay = if p == 0.0 { 1.0 } else { (-p * t).exp() };
        Complex64::cis(self.dispersion(k) * t) * decay
    }
}

/// Multiplier of the periodic Hilbert transform, `i·sgn(k)`.
///
/// This is the normalization under which `−βℋ∂²_x` has symbol `iq(k)` and
/// `η(ℋ∂_x − ∂²_x)` has symbol `p(k)`.
pub fn hilbert_multiplier(k: i64) -> Complex64 {
    Complex64::new(0.0, k.signum() as f64)
}

/// `e^{(iq(k) − p(k)) t}` for `t ≥ 0`.
pub fn semigroup_factor(k: i64, t: f64, params: ModelParams) -> Result<Complex64> {
    check_time(t)?;
    Ok(LinearSymbol::new(params).factor(k, t))
}

/// The dissipative semigroup `S(t)`.
pub fn apply_semigroup(u: &FourierField, t: f64, params: ModelParams) -> Result<FourierField> {
    check_time(t)?;
    Ok(apply_semigroup_unchecked(u, t, params))
}

pub(crate) fn apply_semigroup_unchecked(u: &FourierField, t: f64, params: ModelParams) -> FourierField {
    let factors = LinearSymbol::new(params).semigroup_factors(u.max_mode(), t);
    u.multiplied(&factors, true)
}

/// The Benjamin-Ono group `U(t) = exp(itq(D_x))`, any real `t`.
pub fn apply_unitary_group(u: &FourierField, t: f64, params: ModelParams) -> FourierField {
    let sym = LinearSymbol::new(params);
    u.map_modes(true, |k, c| c * Complex64::cis(sym.dispersion(k) * t))
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!(
            "semigroup time must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// Measured side and closed-form side of the `l^∞` kernel bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupBound {
    /// `max_k |tk²|^λ e^{η(|k|−k²)t}` over the integers.
    pub sup_value: f64,
    /// `(t^λ + η^{−λ}) e^{(η/8)(t + t^{1/2}√(t + 16λ/η))}`.
    pub bound: f64,
    /// Maximizer `x₁ = (t^{1/2} + √(t + 16λ/η))/4` of `x^{2λ} e^{η(x t^{1/2} − x²)}`.
    pub x1: f64,
    /// Integer `k ≥ 1` attaining `sup_value`.
    pub argmax: i64,
}

/// Sup of `|tk²|^λ e^{η(|k|−k²)t}` over `k ∈ Z` next to its closed-form bound.
///
/// In `k` the logarithm of the summand is concave on `k ≥ 1`, so the integer
/// maximum sits at the floor or ceiling of the continuous maximizer
/// `x₁/√t = (1 + √(1 + 16λ/(ηt)))/4`.
pub fn kernel_sup_bound(lambda: f64, t: f64, params: ModelParams) -> Result<SupBound> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be > 0, got {lambda}")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be > 0, got {t}")));
    }
    let eta = params.eta;
    let term = |k: i64| {
        let kf = k as f64;
        (t * kf * kf).powf(lambda) * (eta * (kf - kf * kf) * t).exp()
    };
    let kstar = 0.25 * (1.0 + (1.0 + 16.0 * lambda / (eta * t)).sqrt());
    let lo = (kstar.floor() as i64).max(1);
    let (argmax, sup_value) = [lo, lo + 1]
        .into_iter()
        .map(|k| (k, term(k)))
        .fold((1, term(1)), |best, cand| if cand.1 > best.1 { cand } else { best });
    let root = (t + 16.0 * lambda / eta).sqrt();
    let x1 = 0.25 * (t.sqrt() + root);
    let bound = (t.powf(lambda) + eta.powf(-lambda)) * ((eta / 8.0) * (t + t.sqrt() * root)).exp();
    Ok(SupBound {
        sup_value,
        bound,
        x1,
        argmax,
    })
}

/// Underflow floor for the adaptive `l²` sums.
pub const SUM_CUTOFF: f64 = 1e-300;

/// `‖|k|^λ e^{η(|k|−k²)t}‖_{l²(Z)}`, summed until terms past the peak drop below
/// [`SUM_CUTOFF`]. `|0|^0` is taken as 1.
pub fn kernel_l2_norm(lambda: f64, t: f64, params: ModelParams) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be > 0, got {t}")));
    }
    let eta = params.eta;
    let center = if lambda == 0.0 { 1.0 } else { 0.0 };
    // peak of k^{2λ} e^{-2η(k²-k)t} lies below sqrt(λ/(ηt)) + 1
    let peak = (lambda / (eta * t)).sqrt() + 1.0;
    let mut sum = 0.0;
    let mut k = 1u64;
    loop {
        let kf = k as f64;
        let term = kf.powf(2.0 * lambda) * (2.0 * eta * (kf - kf * kf) * t).exp();
        sum += term;
        if kf > peak && term < SUM_CUTOFF {
            break;
        }
        k += 1;
    }
    Ok((center + 2.0 * sum).sqrt())
}

/// `Υ_η^λ(t) = 1 + (ηt)^{−λ/2} + (ηt)^{−(1+2λ)/4}`.
pub fn upsilon(lambda: f64, t: f64, params: ModelParams) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be > 0, got {t}")));
    }
    let et = params.eta * t;
    Ok(1.0 + et.powf(-lambda / 2.0) + et.powf(-(1.0 + 2.0 * lambda) / 4.0))
}

/// `f_{s,η}(t) = 1 + (t^{|s|/2} + η^{−|s|/2}) e^{(η/8)(t + t^{1/2}√(t + 8|s|/η))}`,
/// for `s < 0` and `0 ≤ t ≤ 1`.
///
/// With `λ = |s|/2` the exponent matches the `l^∞` bound of [`kernel_sup_bound`]
/// (`8|s|/η = 16λ/η`).
pub fn smoothing_factor(s: SobolevIndex, t: f64, params: ModelParams) -> Result<f64> {
    s.require_negative()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("smoothing factor needs 0 <= t <= 1, got {t}")));
    }
    let a = s.value().abs();
    let eta = params.eta;
    let root = (t + 8.0 * a / eta).sqrt();
    Ok(1.0 + (t.powf(a / 2.0) + eta.powf(-a / 2.0)) * ((eta / 8.0) * (t + t.sqrt() * root)).exp())
}
