//! Truncated Fourier representation of periodic functions on `[-π, π)`.
//!
//! Coefficients follow the convention `f̂(k) = (1/2π) ∫ e^{-ikz} f(z) dz`, so a
//! field with coefficients `û(k)` represents `u(x) = Σ û(k) e^{ikx}` and the
//! coefficients of a pointwise product are the discrete convolution of the
//! factors' coefficients. Every norm carries the `(2π)^{1/2}` factor that comes
//! with this normalization.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients `û(k)` for `k = -K..=K`.
///
/// Fields built from real data keep exact conjugate symmetry and are flagged
/// `real_valued`. General complex fields (such as the two-mode data of the
/// norm-inflation experiment) waive the symmetry and carry the flag `false`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierField {
    max_mode: usize,
    coeffs: Vec<Complex64>,
    real_valued: bool,
}

impl FourierField {
    pub fn zeros(max_mode: usize) -> Self {
        FourierField {
            max_mode,
            coeffs: vec![ZERO; 2 * max_mode + 1],
            real_valued: true,
        }
    }

    /// Builds a field from `2K+1` coefficients ordered by ascending `k`.
    ///
    /// The `real_valued` flag is set iff the coefficients are exactly conjugate
    /// symmetric with a real mean.
    pub fn from_coeffs(max_mode: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * max_mode + 1 {
            return Err(Error::invalid(format!(
                "expected {} coefficients for K = {max_mode}, got {}",
                2 * max_mode + 1,
                coeffs.len()
            )));
        }
        let mut field = FourierField {
            max_mode,
            coeffs,
            real_valued: false,
        };
        field.real_valued = field.is_conjugate_symmetric();
        Ok(field)
    }

    /// A general complex field with the listed nonzero modes.
    pub fn from_modes(max_mode: usize, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut coeffs = vec![ZERO; 2 * max_mode + 1];
        for &(k, c) in modes {
            if k.unsigned_abs() as usize > max_mode {
                return Err(Error::invalid(format!(
                    "mode {k} outside truncation K = {max_mode}"
                )));
            }
            coeffs[(k + max_mode as i64) as usize] += c;
        }
        Self::from_coeffs(max_mode, coeffs)
    }

    /// A real field from its nonnegative modes; `û(-k) = conj(û(k))` is filled in
    /// and the imaginary part of the mean is dropped.
    pub fn real_from_fn(max_mode: usize, mut f: impl FnMut(usize) -> Complex64) -> Self {
        let mut field = Self::zeros(max_mode);
        let c0 = f(0);
        field.coeffs[max_mode] = Complex64::new(c0.re, 0.0);
        for k in 1..=max_mode {
            let c = f(k);
            field.coeffs[max_mode + k] = c;
            field.coeffs[max_mode - k] = c.conj();
        }
        field
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    /// Coefficients ordered `k = -K..=K`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `û(k)`, zero outside the truncation band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.max_mode {
            ZERO
        } else {
            self.coeffs[(k + self.max_mode as i64) as usize]
        }
    }

    /// Iterator over `(k, û(k))` in ascending `k`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k0 = self.max_mode as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as i64 - k0, c))
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[self.max_mode]
    }

    /// Zero-pads or truncates to a new band limit.
    pub fn resized(&self, max_mode: usize) -> Self {
        let mut out = FourierField::zeros(max_mode);
        let k = self.max_mode.min(max_mode) as i64;
        for m in -k..=k {
            out.coeffs[(m + max_mode as i64) as usize] = self.coeff(m);
        }
        out.real_valued = self.real_valued;
        out
    }

    /// Modewise map `û(k) ↦ f(k, û(k))`. The caller states whether the map
    /// preserves conjugate symmetry.
    pub fn map_modes(&self, preserves_symmetry: bool, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        let k0 = self.max_mode as i64;
        FourierField {
            max_mode: self.max_mode,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| f(i as i64 - k0, c))
                .collect(),
            real_valued: self.real_valued && preserves_symmetry,
        }
    }

    /// Modewise multiplication by per-mode factors ordered like [`coeffs`](Self::coeffs).
    pub fn multiplied(&self, factors: &[Complex64], preserves_symmetry: bool) -> Self {
        debug_assert_eq!(factors.len(), self.coeffs.len());
        FourierField {
            max_mode: self.max_mode,
            coeffs: self.coeffs.iter().zip(factors).map(|(c, f)| c * f).collect(),
            real_valued: self.real_valued && preserves_symmetry,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        FourierField {
            max_mode: self.max_mode,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            real_valued: self.real_valued,
        }
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &FourierField) -> Result<Self> {
        check_same_mode(self, other)?;
        Ok(FourierField {
            max_mode: self.max_mode,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
            real_valued: self.real_valued && other.real_valued,
        })
    }

    pub fn add(&self, other: &FourierField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &FourierField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Largest coefficient modulus difference.
    pub fn max_abs_diff(&self, other: &FourierField) -> Result<f64> {
        check_same_mode(self, other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn is_conjugate_symmetric(&self) -> bool {
        let k = self.max_mode;
        self.coeffs[k].im == 0.0 && (1..=k).all(|m| self.coeffs[k + m] == self.coeffs[k - m].conj())
    }
}

pub(crate) fn check_same_mode(a: &FourierField, b: &FourierField) -> Result<()> {
    if a.max_mode != b.max_mode {
        return Err(Error::ModeMismatch {
            left: a.max_mode,
            right: b.max_mode,
        });
    }
    Ok(())
}

/// Regularity index `s` of `H^s(T)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::invalid(format!("Sobolev index must be finite, got {s}")));
        }
        Ok(SobolevIndex(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rejects `s <= -1/2`, the edge of the local well-posedness range.
    pub fn require_above_minus_half(self) -> Result<Self> {
        if self.0 <= -0.5 {
            return Err(Error::precondition(format!(
                "s = {} is outside the well-posedness range s > -1/2",
                self.0
            )));
        }
        Ok(self)
    }

    pub fn require_negative(self) -> Result<Self> {
        if self.0 >= 0.0 {
            return Err(Error::precondition(format!(
                "operation requires s < 0, got s = {}",
                self.0
            )));
        }
        Ok(self)
    }
}

/// Dispersion `β ≥ 0` and dissipation `η > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub eta: f64,
}

impl ModelParams {
    pub fn new(beta: f64, eta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid(format!("eta must be finite and > 0, got {eta}")));
        }
        Ok(ModelParams { beta, eta })
    }
}

/// Discrete carrier of a solution `u ∈ C([0,T]; H^s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<FourierField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<FourierField>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::invalid(format!(
                "trajectory needs matching nonempty times/states, got {} and {}",
                times.len(),
                states.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid(format!("trajectory must start at t = 0, got {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        let k = states[0].max_mode;
        if let Some(bad) = states.iter().find(|f| f.max_mode != k) {
            return Err(Error::ModeMismatch {
                left: k,
                right: bad.max_mode,
            });
        }
        Ok(Trajectory { times, states })
    }

    /// Evaluates `f` on a grid.
    pub fn from_fn(times: Vec<f64>, f: impl FnMut(f64) -> Result<FourierField>) -> Result<Self> {
        let states = times.iter().copied().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(times, states)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[FourierField] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_mode(&self) -> usize {
        self.states[0].max_mode
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &FourierField {
        self.states.last().unwrap()
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.times == other.times && self.max_mode() == other.max_mode()
    }

    /// Node-wise `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Trajectory) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(x, y)| x.axpy(a, y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            times: self.times.clone(),
            states,
        })
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Self> {
        self.axpy(-1.0, other)
    }
}

/// Uniform grid `t_m = m·T/n`, `m = 0..=n`.
pub fn uniform_grid(horizon: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps)
        .map(|m| if m == n_steps { horizon } else { horizon * m as f64 / n_steps as f64 })
        .collect()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Pointwise values `f(x_j)` at `x_j = 2πj/n`.
pub fn synthesize(field: &FourierField, n_points: usize) -> Result<Vec<f64>> {
    if n_points < 2 * field.max_mode + 1 {
        return Err(Error::Aliasing {
            n_points,
            max_mode: field.max_mode,
        });
    }
    if !field.real_valued {
        return Err(Error::invalid(
            "synthesize produces real samples; field is not conjugate symmetric",
        ));
    }
    let mut buf = to_grid(field, n_points);
    plans(n_points).1.process(&mut buf);
    Ok(buf.into_iter().map(|c| c.re).collect())
}

/// Coefficients of uniformly sampled real data on `[0, 2π)`.
///
/// Returns `K = (n-1)/2` modes; for even `n` the unpaired Nyquist mode is dropped.
pub fn analyze(samples: &[f64]) -> Result<FourierField> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::invalid("cannot analyze an empty sample vector"));
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plans(n).0.process(&mut buf);
    let max_mode = (n - 1) / 2;
    let scale = 1.0 / n as f64;
    Ok(FourierField::real_from_fn(max_mode, |k| {
        let pos = buf[k];
        let neg = buf[(n - k) % n];
        (pos + neg.conj()) * (0.5 * scale)
    }))
}

fn to_grid(field: &FourierField, n: usize) -> Vec<Complex64> {
    let mut buf = vec![ZERO; n];
    for (k, c) in field.modes() {
        buf[k.rem_euclid(n as i64) as usize] = c;
    }
    buf
}

/// Physical grid size for exact quadratic products of `K`-band fields:
/// the smallest power of two with at least `3K + 1` points.
pub fn dealiased_grid_size(max_mode: usize) -> usize {
    (3 * max_mode + 1).next_power_of_two().max(4)
}

/// Coefficients of the pointwise product `u·v`, exact for every `|k| ≤ K`.
///
/// The product is formed on a zero-padded grid of at least `3K+1` points, so no
/// convolution term aliases into the retained band.
pub fn pseudospectral_product(u: &FourierField, v: &FourierField) -> Result<FourierField> {
    check_same_mode(u, v)?;
    let k = u.max_mode;
    let n = dealiased_grid_size(k);
    let (fwd, inv) = plans(n);
    let mut a = to_grid(u, n);
    let mut b = to_grid(v, n);
    inv.process(&mut a);
    inv.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fwd.process(&mut a);
    let scale = 1.0 / n as f64;
    let mut coeffs = vec![ZERO; 2 * k + 1];
    for m in -(k as i64)..=(k as i64) {
        coeffs[(m + k as i64) as usize] = a[m.rem_euclid(n as i64) as usize] * scale;
    }
    let mut out = FourierField {
        max_mode: k,
        coeffs,
        real_valued: false,
    };
    if u.real_valued && v.real_valued {
        // the transform leaves round-off asymmetry; restore the exact symmetry
        for m in 1..=k {
            let avg = (out.coeffs[k + m] + out.coeffs[k - m].conj()) * 0.5;
            out.coeffs[k + m] = avg;
            out.coeffs[k - m] = avg.conj();
        }
        out.coeffs[k].im = 0.0;
        out.real_valued = true;
    }
    Ok(out)
}

/// `∂_x`: multiplies `û(k)` by `ik`.
pub fn derivative(u: &FourierField) -> FourierField {
    u.map_modes(true, |k, c| Complex64::new(0.0, k as f64) * c)
}

/// `‖u‖_{H^s} = (2π)^{1/2} ‖(1+k²)^{s/2} û(k)‖_{l²}` over the truncation band.
pub fn sobolev_norm(u: &FourierField, s: SobolevIndex) -> f64 {
    let s = s.value();
    let sum: f64 = u
        .modes()
        .map(|(k, c)| {
            let w = if s == 0.0 { 1.0 } else { (1.0 + (k * k) as f64).powf(s) };
            w * c.norm_sqr()
        })
        .sum();
    (2.0 * PI * sum).sqrt()
}

/// `‖u‖_{L²}`, the `s = 0` case of [`sobolev_norm`].
pub fn l2_norm(u: &FourierField) -> f64 {
    sobolev_norm(u, SobolevIndex(0.0))
}

/// `sup_{t ∈ (0,T]} (‖u(t)‖_{H^s} + t^{|s|/2} ‖u(t)‖_{L²})` over the grid nodes with `t > 0`.
///
/// Defined for `s < 0` only; for `s ≥ 0` use [`solution_norm`].
pub fn xts_norm(traj: &Trajectory, s: SobolevIndex) -> Result<f64> {
    s.require_negative()?;
    let weight_exp = s.value().abs() / 2.0;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, u)| sobolev_norm(u, s) + t.powf(weight_exp) * l2_norm(u))
        .fold(0.0, f64::max))
}

/// `sup_t ‖u(t)‖_{H^s}` over every grid node.
pub fn sup_sobolev_norm(traj: &Trajectory, s: SobolevIndex) -> f64 {
    traj.states
        .iter()
        .map(|u| sobolev_norm(u, s))
        .fold(0.0, f64::max)
}

/// Norm of the space the contraction runs in: `X_T^s` for `s < 0`, `C([0,T]; H^s)` otherwise.
pub fn solution_norm(traj: &Trajectory, s: SobolevIndex) -> f64 {
    if s.value() < 0.0 {
        xts_norm(traj, s).expect("s < 0 checked")
    } else {
        sup_sobolev_norm(traj, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_field_synthesizes_to_zeros() {
        let x = synthesize(&FourierField::zeros(4), 9).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cosine_synthesis() {
        let f = FourierField::real_from_fn(3, |k| if k == 1 { c(0.5, 0.0) } else { c(0.0, 0.0) });
        let n = 16;
        let x = synthesize(&f, n).unwrap();
        for (j, v) in x.iter().enumerate() {
            let xj = 2.0 * PI * j as f64 / n as f64;
            assert!((v - xj.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn synthesize_rejects_aliasing_grid() {
        let err = synthesize(&FourierField::zeros(4), 8).unwrap_err();
        assert!(matches!(err, Error::Aliasing { n_points: 8, max_mode: 4 }));
    }

    #[test]
    fn analyze_constant_and_cos2() {
        let f = analyze(&[1.0; 11]).unwrap();
        assert!((f.coeff(0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(f.modes().filter(|(k, _)| *k != 0).all(|(_, c)| c.norm() < 1e-15));

        let n = 12;
        let x: Vec<f64> = (0..n).map(|j| (2.0 * 2.0 * PI * j as f64 / n as f64).cos()).collect();
        let f = analyze(&x).unwrap();
        assert!((f.coeff(2) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((f.coeff(-2) - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn analyze_sine_matches_quadrature_of_the_definition() {
        // (1/2π)∫ e^{-ikz} sin z dz by the trapezoid rule on a fine grid,
        // exact for trigonometric polynomials of low degree
        let m = 64;
        let quad = |k: f64| {
            (0..m)
                .map(|j| {
                    let z = -PI + 2.0 * PI * j as f64 / m as f64;
                    Complex64::from_polar(1.0, -k * z) * z.sin()
                })
                .sum::<Complex64>()
                / m as f64
        };
        let n = 9;
        let x: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).sin()).collect();
        let f = analyze(&x).unwrap();
        assert!((f.coeff(1) - quad(1.0)).norm() < 1e-14);
        assert!((f.coeff(-1) - quad(-1.0)).norm() < 1e-14);
        assert!((f.coeff(1) - c(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn product_with_one_is_identity() {
        let u = FourierField::real_from_fn(5, |k| c(1.0 / (1.0 + k as f64), 0.3 * k as f64));
        let one = FourierField::real_from_fn(5, |k| if k == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let p = pseudospectral_product(&u, &one).unwrap();
        assert!(p.max_abs_diff(&u).unwrap() < 1e-15);
        assert!(p.is_real_valued());
    }

    #[test]
    fn product_of_two_first_modes() {
        // u = a e^{ix} + conj(a) e^{-ix}, v = b e^{ix} + conj(b) e^{-ix}
        let a = c(0.3, -0.7);
        let b = c(-1.1, 0.4);
        let u = FourierField::real_from_fn(4, |k| if k == 1 { a } else { c(0.0, 0.0) });
        let v = FourierField::real_from_fn(4, |k| if k == 1 { b } else { c(0.0, 0.0) });
        let p = pseudospectral_product(&u, &v).unwrap();
        assert!((p.coeff(2) - a * b).norm() < 1e-15);
        assert!((p.coeff(-2) - (a * b).conj()).norm() < 1e-15);
        assert!((p.coeff(0) - (a * b.conj() + a.conj() * b)).norm() < 1e-15);
        for k in [1, -1, 3, -3, 4, -4] {
            assert!(p.coeff(k).norm() < 1e-15);
        }
    }

    #[test]
    fn product_rejects_mismatched_truncation() {
        let err = pseudospectral_product(&FourierField::zeros(3), &FourierField::zeros(4)).unwrap_err();
        assert!(matches!(err, Error::ModeMismatch { .. }));
    }

    #[test]
    fn derivative_multiplier() {
        let cosx = FourierField::real_from_fn(4, |k| if k == 1 { c(0.5, 0.0) } else { c(0.0, 0.0) });
        let d = derivative(&cosx);
        assert_eq!(d.coeff(1), c(0.0, 0.5));
        assert_eq!(d.coeff(-1), c(0.0, -0.5));
        let constant = FourierField::real_from_fn(4, |k| if k == 0 { c(2.0, 0.0) } else { c(0.0, 0.0) });
        assert!(derivative(&constant).coeffs().iter().all(|c| c.norm() == 0.0));
        let a = c(0.25, -1.5);
        let m3 = FourierField::from_modes(4, &[(3, a)]).unwrap();
        assert_eq!(derivative(&m3).coeff(3), c(0.0, 3.0) * a);
    }

    #[test]
    fn sobolev_norm_cases() {
        assert_eq!(sobolev_norm(&FourierField::zeros(3), SobolevIndex(1.0)), 0.0);
        let m1 = FourierField::from_modes(3, &[(1, c(1.0, 0.0))]).unwrap();
        for s in [-1.5, 0.0, 0.7, 2.0] {
            let expected = (2.0 * PI).sqrt() * 2f64.powf(s / 2.0);
            assert!((sobolev_norm(&m1, SobolevIndex(s)) - expected).abs() < 1e-14);
        }
        // two-mode data û(4) = û(-3) = 4^{1} at s = -1
        let phi = FourierField::from_modes(8, &[(4, c(4.0, 0.0)), (-3, c(4.0, 0.0))]).unwrap();
        let expected = (2.0 * PI).sqrt() * 4.0 * (17f64.powf(-1.0) + 10f64.powf(-1.0)).sqrt();
        assert!((sobolev_norm(&phi, SobolevIndex(-1.0)) - expected).abs() < 1e-13);
    }

    #[test]
    fn xts_norm_cases() {
        let s = SobolevIndex(-0.25);
        let zero = Trajectory::new(uniform_grid(1.0, 4), vec![FourierField::zeros(3); 5]).unwrap();
        assert_eq!(xts_norm(&zero, s).unwrap(), 0.0);

        let m1 = FourierField::from_modes(3, &[(1, c(1.0, 0.0))]).unwrap();
        let traj = Trajectory::new(uniform_grid(1.0, 8), vec![m1.clone(); 9]).unwrap();
        let expected = (2.0 * PI).sqrt() * (2f64.powf(-0.125) + 1.0);
        assert!((xts_norm(&traj, s).unwrap() - expected).abs() < 1e-14);

        let mut states = vec![FourierField::zeros(3); 5];
        states[2] = m1.clone();
        let traj = Trajectory::new(uniform_grid(1.0, 4), states).unwrap();
        let single = sobolev_norm(&m1, s) + 0.5f64.powf(0.125) * l2_norm(&m1);
        assert!((xts_norm(&traj, s).unwrap() - single).abs() < 1e-14);

        assert!(xts_norm(&traj, SobolevIndex(0.0)).is_err());
    }

    #[test]
    fn xts_norm_excludes_the_initial_node() {
        let m1 = FourierField::from_modes(3, &[(1, c(1.0, 0.0))]).unwrap();
        let mut states = vec![FourierField::zeros(3); 3];
        states[0] = m1;
        let traj = Trajectory::new(uniform_grid(1.0, 2), states).unwrap();
        assert_eq!(xts_norm(&traj, SobolevIndex(-0.3)).unwrap(), 0.0);
    }

    #[test]
    fn trajectory_validation() {
        let f = FourierField::zeros(2);
        assert!(Trajectory::new(vec![0.0, 0.0], vec![f.clone(), f.clone()]).is_err());
        assert!(Trajectory::new(vec![0.1, 0.2], vec![f.clone(), f.clone()]).is_err());
        assert!(Trajectory::new(vec![0.0], vec![]).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0], vec![f.clone(), FourierField::zeros(3)]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 1.0).is_ok());
        assert!(ModelParams::new(-1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.0).is_err());
        assert!(SobolevIndex::new(f64::NAN).is_err());
    }
}
