//! Two-mode data and the closed-form second Picard iterate.
//!
//! For `φ̂(N) = φ̂(1−N) = N^{−s}` the free evolution has two modes, so
//!
//! ```text
//! B(t) = ∫₀ᵗ S(t−t′) ∂_x[(S(t′)φ)²] dt′
//! ```
//!
//! has Fourier coefficients supported on `{2N, 1, 2−2N}`, each a finite sum of
//! explicit time integrals `∫₀ᵗ e^{t′(iψ(k,j) − σ(k,j))} dt′`. For `s < −1` the
//! `H^s` norm of `B(t)` grows like `N^{−2(s+1)}` while `‖φ‖_{H^s}` stays bounded.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duhamel::{duhamel_bilinear, free_evolution, phi_functions, SolverConfig};
use crate::error::{Error, Result};
use crate::estimates::{fit_loglog_slope, ExponentFit};
use crate::fourier::{sobolev_norm, uniform_grid, FourierField, ModelParams, SobolevIndex};
use crate::symbols::LinearSymbol;

/// Two-mode initial data at frequency `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoModeData {
    pub n: u64,
    pub s: SobolevIndex,
    /// Complex field with `û(N) = û(1−N) = N^{−s}`; not conjugate symmetric.
    pub field: FourierField,
}

fn check_frequency(n: u64, max_mode: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("N must be >= 2, got {n}")));
    }
    if (max_mode as u64) < 2 * n {
        return Err(Error::invalid(format!(
            "K = {max_mode} cannot hold the second iterate of N = {n}; need K >= {}",
            2 * n
        )));
    }
    Ok(())
}

/// The data `û(N) = û(1−N) = N^{−s}` in a truncation `K ≥ 2N`.
pub fn make_two_mode(n: u64, s: SobolevIndex, max_mode: usize) -> Result<TwoModeData> {
    check_frequency(n, max_mode)?;
    let a = Complex64::new((n as f64).powf(-s.value()), 0.0);
    let n = n as i64;
    let field = FourierField::from_modes(max_mode, &[(n, a), (1 - n, a)])?;
    Ok(TwoModeData {
        n: n as u64,
        s,
        field,
    })
}

/// `(ψ(k,j), σ(k,j))` with
/// `ψ = β[(k−j)|k−j| − k|k| + j|j|]` and `σ = η[(k−j)² − |k−j| − k² + |k| + j² − |j|]`,
/// the integer brackets evaluated exactly.
pub fn resonance(k: i64, j: i64, p: ModelParams) -> (f64, f64) {
    let (k, j) = (k as i128, j as i128);
    let m = k - j;
    let q = m * m.abs() - k * k.abs() + j * j.abs();
    let r = m * m - m.abs() - k * k + k.abs() + j * j - j.abs();
    (p.beta * q as f64, p.eta * r as f64)
}

/// `e^{L_k t} ∫₀ᵗ e^{z t′} dt′`, arranged so that neither exponential overflows
/// when `Re z > 0` (`L_k + z` has nonpositive real part whenever both input modes do).
fn interaction_integral(l_k: Complex64, z: Complex64, t: f64) -> Complex64 {
    let zt = z * t;
    if zt.norm() < 1.0 {
        (l_k * t).exp() * t * phi_functions(zt).0
    } else {
        (((l_k + z) * t).exp() - (l_k * t).exp()) / z
    }
}

/// Mode-1 coefficient of the second iterate:
/// `2i e^{iβt} N^{−2s} (e^{t(iψ−σ)} − 1)/(iψ − σ)` with `ψ = 2β(N−1)`, `σ = 2η(N−1)²`.
pub fn second_iterate_mode1(n: u64, s: SobolevIndex, p: ModelParams, t: f64) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::invalid(format!("N must be >= 2, got {n}")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be > 0, got {t}")));
    }
    let (psi, sigma) = resonance(1, n as i64, p);
    let z = Complex64::new(-sigma, psi);
    let l1 = Complex64::new(0.0, p.beta);
    let amp = (n as f64).powf(-2.0 * s.value());
    Ok(Complex64::new(0.0, 2.0 * amp) * interaction_integral(l1, z, t))
}

/// The full second iterate at time `t`, one closed-form time integral per
/// contributing pair `(j, k−j)` of data modes.
pub fn second_iterate_full(n: u64, s: SobolevIndex, p: ModelParams, t: f64, max_mode: usize) -> Result<FourierField> {
    check_frequency(n, max_mode)?;
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("t must be >= 0, got {t}")));
    }
    let data = make_two_mode(n, s, max_mode)?;
    let sym = LinearSymbol::new(p);
    let n = n as i64;
    let support = [n, 1 - n];
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * max_mode + 1];
    for &j in &support {
        for &m in &support {
            let k = j + m;
            let (psi, sigma) = resonance(k, j, p);
            let z = Complex64::new(-sigma, psi);
            let weight = Complex64::new(0.0, k as f64) * data.field.coeff(j) * data.field.coeff(m);
            let value = if t == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                weight * interaction_integral(sym.exponent(k), z, t)
            };
            coeffs[(k + max_mode as i64) as usize] += value;
        }
    }
    FourierField::from_coeffs(max_mode, coeffs)
}

/// Modes with `|û(k)| > tol`, ascending.
pub fn support(field: &FourierField, tol: f64) -> Vec<i64> {
    field.modes().filter(|(_, c)| c.norm() > tol).map(|(k, _)| k).collect()
}

/// `(Re[(e^{t(iψ−σ)} − 1)/(iψ − σ)], (η − (η+β)e^{−tηN²})/((η²+β²)N²))` at `(k, j) = (1, N)`.
pub fn mode1_real_part(n: u64, p: ModelParams, t: f64) -> (f64, f64) {
    let (psi, sigma) = resonance(1, n as i64, p);
    let z = Complex64::new(-sigma, psi);
    let value = interaction_integral(Complex64::new(0.0, 0.0), z, t).re;
    let nf = n as f64;
    let shape = (p.eta - (p.eta + p.beta) * (-t * p.eta * nf * nf).exp())
        / ((p.eta * p.eta + p.beta * p.beta) * nf * nf);
    (value, shape)
}

/// Largest `c` with `value ≥ c · shape` at every `N` of the scan (only `N` with positive shape count).
pub fn fit_real_part_constant(ns: &[u64], p: ModelParams, t: f64) -> f64 {
    ns.iter()
        .map(|&n| mode1_real_part(n, p, t))
        .filter(|(_, shape)| *shape > 0.0)
        .map(|(v, shape)| v / shape)
        .fold(f64::INFINITY, f64::min)
}

/// Which behavior a scan is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InflationRegime {
    /// `s ≤ −1/2`: the fitted slope must match `−2(s+1)`.
    Growth,
    /// `s > −1/2`: norms must stay bounded in `N`.
    Bounded,
}

/// Largest tolerated gap between fitted and predicted growth slopes.
pub const SLOPE_TOLERANCE: f64 = 0.05;
/// Bounded regime: `max_N ‖B‖ ≤ BOUNDED_FACTOR · ‖B‖` at the smallest `N`.
pub const BOUNDED_FACTOR: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationReport {
    pub s: f64,
    pub beta: f64,
    pub eta: f64,
    pub t: f64,
    pub ns: Vec<u64>,
    pub second_iterate_norms: Vec<f64>,
    /// Closed-form mode-1 coefficient per `N`.
    pub mode1: Vec<Complex64>,
    /// `H^s` mass share of mode 1 in the full second iterate.
    pub mode1_fraction: Vec<f64>,
    pub data_norms: Vec<f64>,
    pub fitted_slope: ExponentFit,
    pub expected_slope: f64,
    pub regime: InflationRegime,
    pub pass: bool,
}

impl InflationReport {
    /// Rows as `N,norm_Hs,closed_form_mode1_re,closed_form_mode1_im`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "N,norm_Hs,closed_form_mode1_re,closed_form_mode1_im")?;
        for ((n, norm), m) in self.ns.iter().zip(&self.second_iterate_norms).zip(&self.mode1) {
            writeln!(out, "{n},{norm:e},{:e},{:e}", m.re, m.im)?;
        }
        Ok(())
    }
}

/// `H^s` norm of the second iterate for each `N`, with a log-log slope fit.
///
/// Needs at least four values of `N`.
pub fn inflation_scan(s: SobolevIndex, p: ModelParams, t: f64, ns: &[u64]) -> Result<InflationReport> {
    if ns.len() < 4 {
        return Err(Error::DegenerateFit { needed: 4, got: ns.len() });
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be > 0, got {t}")));
    }
    let rows: Vec<(f64, Complex64, f64, f64)> = ns
        .par_iter()
        .map(|&n| {
            let k = 2 * n as usize;
            let full = second_iterate_full(n, s, p, t, k)?;
            let norm = sobolev_norm(&full, s);
            let m1 = second_iterate_mode1(n, s, p, t)?;
            let only1 = FourierField::from_modes(k, &[(1, m1)])?;
            let frac = (sobolev_norm(&only1, s) / norm).powi(2);
            let data = sobolev_norm(&make_two_mode(n, s, k)?.field, s);
            Ok((norm, m1, frac, data))
        })
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = fit_loglog_slope(&xs, &norms)?;
    let expected = -2.0 * (s.value() + 1.0);
    let regime = if s.value() > -0.5 {
        InflationRegime::Bounded
    } else {
        InflationRegime::Growth
    };
    let pass = match regime {
        InflationRegime::Growth => (fit.slope - expected).abs() <= SLOPE_TOLERANCE,
        InflationRegime::Bounded => {
            let max = norms.iter().copied().fold(0.0, f64::max);
            max.is_finite() && max <= BOUNDED_FACTOR * norms[0]
        }
    };
    Ok(InflationReport {
        s: s.value(),
        beta: p.beta,
        eta: p.eta,
        t,
        ns: ns.to_vec(),
        second_iterate_norms: norms,
        mode1: rows.iter().map(|r| r.1).collect(),
        mode1_fraction: rows.iter().map(|r| r.2).collect(),
        data_norms: rows.iter().map(|r| r.3).collect(),
        fitted_slope: fit,
        expected_slope: expected,
        regime,
        pass,
    })
}

/// Quadrature settings for [`oracle_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Steps at the coarsest level; doubled per refinement.
    pub n_steps: usize,
    pub quadrature_nodes_per_step: usize,
    pub max_refinements: usize,
    /// Pass threshold on the largest coefficient error.
    pub tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            n_steps: 4,
            quadrature_nodes_per_step: 8,
            max_refinements: 4,
            tolerance: 1e-8,
        }
    }
}

/// Closed form against quadrature for one parameter tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: u64,
    pub s: f64,
    pub beta: f64,
    pub eta: f64,
    pub t: f64,
    pub n_steps: usize,
    /// Largest `|closed form − quadrature|` over all modes at time `t`.
    pub max_abs_err: f64,
    /// Largest change of the quadrature result between the last two levels.
    pub refinement_change: f64,
    pub mode1_closed_form: Complex64,
    pub mode1_quadrature: Complex64,
    pub pass: bool,
}

/// Second iterate by [`duhamel_bilinear`] on the free evolution of the two-mode
/// data, compared with [`second_iterate_full`] at every mode.
///
/// The step count doubles until two successive quadrature results agree to a
/// tenth of the tolerance or the refinement budget is spent.
pub fn oracle_check(n: u64, s: SobolevIndex, p: ModelParams, t: f64, opts: &OracleOptions) -> Result<OracleReport> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be > 0, got {t}")));
    }
    let k = 2 * n as usize;
    let data = make_two_mode(n, s, k)?;
    let exact = second_iterate_full(n, s, p, t, k)?;
    let mut previous: Option<FourierField> = None;
    let mut change = f64::INFINITY;
    let mut steps = opts.n_steps.max(1);
    let mut quad = FourierField::zeros(k);
    for level in 0..=opts.max_refinements {
        let times = uniform_grid(t, steps);
        let u = free_evolution(&data.field, &times, p)?;
        let cfg = SolverConfig {
            quadrature_nodes_per_step: opts.quadrature_nodes_per_step,
            ..SolverConfig::new(p, s, k, t, steps)
        };
        quad = duhamel_bilinear(&u, &u, &cfg)?.last().clone();
        if let Some(prev) = &previous {
            change = quad.max_abs_diff(prev)?;
            if change < 0.1 * opts.tolerance {
                break;
            }
        }
        previous = Some(quad.clone());
        if level < opts.max_refinements {
            steps *= 2;
        }
    }
    let max_abs_err = quad.max_abs_diff(&exact)?;
    Ok(OracleReport {
        n,
        s: s.value(),
        beta: p.beta,
        eta: p.eta,
        t,
        n_steps: steps,
        max_abs_err,
        refinement_change: change,
        mode1_closed_form: exact.coeff(1),
        mode1_quadrature: quad.coeff(1),
        pass: max_abs_err <= opts.tolerance,
    })
}

/// `N = lo, 2lo, 4lo, …` up to `hi`.
pub fn dyadic_range(lo: u64, hi: u64) -> Vec<u64> {
    std::iter::successors(Some(lo), |n| n.checked_mul(2))
        .take_while(|&n| n <= hi)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0).unwrap()
    }

    fn s(v: f64) -> SobolevIndex {
        SobolevIndex::new(v).unwrap()
    }

    #[test]
    fn two_mode_values() {
        let d = make_two_mode(2, s(0.0), 4).unwrap();
        assert_eq!(d.field.coeff(2), Complex64::new(1.0, 0.0));
        assert_eq!(d.field.coeff(-1), Complex64::new(1.0, 0.0));
        assert!(!d.field.is_real_valued());
        let d = make_two_mode(4, s(-1.0), 8).unwrap();
        assert_eq!(d.field.coeff(4).re, 4.0);
        assert_eq!(d.field.coeff(-3).re, 4.0);
        assert_eq!(support(&d.field, 0.0), vec![-3, 4]);
        assert!(make_two_mode(4, s(0.0), 7).is_err());
        assert!(make_two_mode(1, s(0.0), 7).is_err());
    }

    #[test]
    fn two_mode_norm_tends_to_four_pi() {
        let n = 1024u64;
        let sv = -1.5;
        let d = make_two_mode(n, s(sv), 2 * n as usize).unwrap();
        let norm2 = sobolev_norm(&d.field, s(sv)).powi(2);
        let nf = n as f64;
        let exact = 2.0 * PI * nf.powf(-2.0 * sv) * ((1.0 + nf * nf).powf(sv) + (1.0 + (1.0 - nf).powi(2)).powf(sv));
        assert!((norm2 / exact - 1.0).abs() < 1e-12);
        assert!((norm2 / (4.0 * PI) - 1.0).abs() < 0.01);
    }

    #[test]
    fn resonance_values() {
        let p = ModelParams::new(1.7, 0.3).unwrap();
        for n in [2i64, 5, 33] {
            let (psi, sigma) = resonance(1, n, p);
            assert_eq!(psi, 1.7 * (2 * (n - 1)) as f64);
            assert_eq!(sigma, 0.3 * (2 * (n - 1) * (n - 1)) as f64);
            assert_eq!(resonance(1, 1 - n, p), (psi, sigma));
        }
        for k in -6..6 {
            assert_eq!(resonance(k, k, p).0, 0.0);
        }
        assert!(resonance(8, 4, p).1 < 0.0);
    }

    #[test]
    fn mode1_limits() {
        let p = unit();
        let v = second_iterate_mode1(8, s(-1.0), p, 1e-9).unwrap();
        let amp = 64.0;
        assert!((v.norm() / (2.0 * amp * 1e-9) - 1.0).abs() < 1e-6);
        let n = 512u64;
        let v = second_iterate_mode1(n, s(-1.0), p, 1.0).unwrap();
        let (psi, sigma) = resonance(1, n as i64, p);
        let limit = 2.0 * (n as f64).powi(2) / psi.hypot(sigma);
        assert!((v.norm() / limit - 1.0).abs() < 1e-12);
        assert!(second_iterate_mode1(1, s(0.0), p, 1.0).is_err());
    }

    #[test]
    fn full_iterate_support_and_consistency() {
        for n in [2u64, 4, 16] {
            let k = 2 * n as usize + 3;
            let b = second_iterate_full(n, s(-0.25), unit(), 0.7, k).unwrap();
            let n = n as i64;
            assert_eq!(support(&b, 0.0), vec![2 - 2 * n, 1, 2 * n]);
            assert!(support(&b, 0.0).len() <= 5);
            assert_eq!(b.coeff(0).norm(), 0.0);
            let m1 = second_iterate_mode1(n as u64, s(-0.25), unit(), 0.7).unwrap();
            assert!((b.coeff(1) - m1).norm() <= 1e-15 * m1.norm());
        }
        let b = second_iterate_full(4, s(0.0), unit(), 0.0, 8).unwrap();
        assert!(support(&b, 0.0).is_empty());
    }

    #[test]
    fn real_part_bound_holds_on_a_scan() {
        let ns = dyadic_range(4, 1024);
        let c = fit_real_part_constant(&ns, unit(), 1.0);
        assert!(c > 0.0 && c.is_finite());
        for &n in &ns {
            let (v, shape) = mode1_real_part(n, unit(), 1.0);
            assert!(v >= c * shape * (1.0 - 1e-12));
        }
    }

    #[test]
    fn scan_slopes() {
        let ns = dyadic_range(16, 1024);
        assert_eq!(ns, vec![16, 32, 64, 128, 256, 512, 1024]);
        let rough = inflation_scan(s(-1.5), unit(), 1.0, &ns).unwrap();
        assert!(rough.pass, "slope {}", rough.fitted_slope.slope);
        assert_eq!(rough.expected_slope, 1.0);
        let edge = inflation_scan(s(-1.0), unit(), 1.0, &ns).unwrap();
        assert!(edge.fitted_slope.slope.abs() <= 0.05);
        let smooth = inflation_scan(s(0.0), unit(), 1.0, &ns).unwrap();
        assert_eq!(smooth.regime, InflationRegime::Bounded);
        assert!(smooth.pass);
        assert!(smooth.second_iterate_norms.windows(2).all(|w| w[1] < w[0]));
        assert!(matches!(
            inflation_scan(s(-1.5), unit(), 1.0, &ns[..3]),
            Err(Error::DegenerateFit { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn csv_layout() {
        let rep = inflation_scan(s(-1.5), unit(), 1.0, &dyadic_range(16, 128)).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("N,norm_Hs,closed_form_mode1_re,closed_form_mode1_im"));
        assert_eq!(lines.count(), 4);
    }
}
