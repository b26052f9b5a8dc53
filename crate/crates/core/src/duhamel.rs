//! Discretization of the integral equation
//!
//! ```text
//! u(t) = S(t)φ − ½ ∫₀ᵗ S(t − t′) ∂_x(u²)(t′) dt′
//! ```
//!
//! by Duhamel quadrature and Picard iteration, plus an exponential time
//! differencing marcher for long runs.
//!
//! Between grid nodes a trajectory is interpolated in the interaction picture,
//!
//! ```text
//! u(t_m + τ) ≈ S(τ) u(t_m) + (τ/h) [u(t_{m+1}) − S(h) u(t_m)],
//! ```
//!
//! which reproduces free evolutions `S(t)φ` exactly and is second order for the
//! Duhamel part. Each step of the time integral is split into panels so that the
//! largest resonance rate times the panel width stays below
//! [`SolverConfig::panel_stiffness`], and the first step is graded geometrically
//! toward `t′ = 0` where rough data make the integrand singular.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{
    derivative, l2_norm, pseudospectral_product, solution_norm, sobolev_norm, uniform_grid,
    FourierField, ModelParams, SobolevIndex, Trajectory,
};
use crate::quadrature::gauss_legendre_on;
use crate::symbols::{apply_semigroup_unchecked, LinearSymbol};

/// Discretization and iteration settings shared by the solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: ModelParams,
    pub s: SobolevIndex,
    pub max_mode: usize,
    /// Final time `T`. The Picard solver requires `0 < T ≤ 1`.
    pub horizon: f64,
    pub n_steps: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub quadrature_nodes_per_step: usize,
    /// The constant `C(η, s)` of the contraction estimates, as measured by
    /// [`crate::estimates::measure_contraction_constant`].
    pub contraction_constant: f64,
    /// Number of geometric refinements of the first quadrature panel toward `t′ = 0`.
    pub grading_levels: usize,
    /// Upper bound on `rate × panel width` inside the Duhamel quadrature.
    pub panel_stiffness: f64,
    /// `false` switches the marcher to the linear equation.
    pub nonlinear: bool,
    /// Relative L² growth per step tolerated by the marcher before it reports instability.
    pub energy_slack: f64,
}

impl SolverConfig {
    pub fn new(params: ModelParams, s: SobolevIndex, max_mode: usize, horizon: f64, n_steps: usize) -> Self {
        SolverConfig {
            params,
            s,
            max_mode,
            horizon,
            n_steps,
            picard_tol: 1e-10,
            picard_max_iter: 40,
            quadrature_nodes_per_step: 8,
            contraction_constant: 1.0,
            grading_levels: 6,
            panel_stiffness: 4.0,
            nonlinear: true,
            energy_slack: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid(format!("T must be positive, got {}", self.horizon)));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps must be >= 1"));
        }
        if self.max_mode == 0 {
            return Err(Error::invalid("K must be >= 1"));
        }
        if !(self.picard_tol > 0.0) || !(self.energy_slack >= 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if self.quadrature_nodes_per_step == 0 {
            return Err(Error::invalid("quadrature_nodes_per_step must be >= 1"));
        }
        if !(self.panel_stiffness > 0.0) {
            return Err(Error::invalid("panel_stiffness must be positive"));
        }
        if !(self.contraction_constant > 0.0) {
            return Err(Error::invalid("contraction constant must be positive"));
        }
        Ok(())
    }

    /// Validation for the local theory, which needs `T ≤ 1`.
    pub fn validate_local(&self) -> Result<()> {
        self.validate()?;
        if self.horizon > 1.0 {
            return Err(Error::precondition(format!(
                "local solver needs 0 < T <= 1, got T = {}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.horizon, self.n_steps)
    }
}

/// `g(s) = (1+2s)/4` on `(−1/2, 0)` and `1/4` for `s ≥ 0`.
pub fn growth_exponent(s: SobolevIndex) -> Result<f64> {
    let s = s.require_above_minus_half()?.value();
    Ok(if s < 0.0 { (1.0 + 2.0 * s) / 4.0 } else { 0.25 })
}

/// `t ↦ S(t)φ` on a grid.
pub fn free_evolution(phi: &FourierField, times: &[f64], params: ModelParams) -> Result<Trajectory> {
    Trajectory::from_fn(times.to_vec(), |t| Ok(apply_semigroup_unchecked(phi, t, params)))
}

struct QuadNode {
    weight: f64,
    theta: f64,
    /// `S(τ)` per mode.
    advance: Vec<Complex64>,
    /// `S(h − τ)` per mode.
    remainder: Vec<Complex64>,
}

struct StepRule {
    nodes: Vec<QuadNode>,
    full_step: Vec<Complex64>,
}

const MAX_PANELS: usize = 1 << 14;

fn build_rule(h: f64, graded: bool, cfg: &SolverConfig, max_mode: usize) -> StepRule {
    let sym = LinearSymbol::new(cfg.params);
    let k2 = (max_mode * max_mode) as f64;
    let rate = 2.0 * (cfg.params.eta + cfg.params.beta) * k2 + 1.0;
    let panels = ((h * rate / cfg.panel_stiffness).ceil() as usize).clamp(1, MAX_PANELS);
    let width = h / panels as f64;

    let mut breaks = Vec::with_capacity(panels + cfg.grading_levels + 1);
    breaks.push(0.0);
    if graded && cfg.grading_levels > 0 {
        for level in (1..=cfg.grading_levels).rev() {
            breaks.push(width * 0.25f64.powi(level as i32));
        }
    }
    for p in 1..=panels {
        breaks.push(if p == panels { h } else { width * p as f64 });
    }

    let q = cfg.quadrature_nodes_per_step;
    let nodes = breaks
        .windows(2)
        .flat_map(|w| gauss_legendre_on(q, w[0], w[1]))
        .map(|(tau, weight)| QuadNode {
            weight,
            theta: tau / h,
            advance: sym.semigroup_factors(max_mode, tau),
            remainder: sym.semigroup_factors(max_mode, h - tau),
        })
        .collect();
    StepRule {
        nodes,
        full_step: sym.semigroup_factors(max_mode, h),
    }
}

fn interpolate(start: &FourierField, jump: &FourierField, node: &QuadNode) -> FourierField {
    start
        .multiplied(&node.advance, true)
        .axpy(node.theta, jump)
        .expect("same truncation")
}

/// `t ↦ ∫₀ᵗ S(t − t′) ∂_x(u v)(t′) dt′` at every node of the common grid of `u` and `v`.
///
/// Accumulated step by step through `D(t_{m+1}) = S(h) D(t_m) + ∫_{t_m}^{t_{m+1}} …`,
/// with composite Gauss–Legendre quadrature of
/// [`SolverConfig::quadrature_nodes_per_step`] nodes per panel.
pub fn duhamel_bilinear(u: &Trajectory, v: &Trajectory, cfg: &SolverConfig) -> Result<Trajectory> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    let max_mode = u.max_mode();
    let times = u.times();
    let same = std::ptr::eq(u, v) || u == v;
    let mut rules: HashMap<(u64, bool), StepRule> = HashMap::new();

    let mut acc = FourierField::zeros(max_mode);
    if !(u.states()[0].is_real_valued() && v.states()[0].is_real_valued()) {
        acc = FourierField::from_coeffs(max_mode, acc.coeffs().to_vec())?;
    }
    let mut out = Vec::with_capacity(times.len());
    out.push(acc.clone());

    for m in 0..times.len() - 1 {
        let h = times[m + 1] - times[m];
        let graded = m == 0;
        let rule = rules
            .entry((h.to_bits(), graded))
            .or_insert_with(|| build_rule(h, graded, cfg, max_mode));

        let (u0, u1) = (&u.states()[m], &u.states()[m + 1]);
        let jump_u = u1.sub(&u0.multiplied(&rule.full_step, true))?;
        let jump_v = if same {
            None
        } else {
            let (v0, v1) = (&v.states()[m], &v.states()[m + 1]);
            Some(v1.sub(&v0.multiplied(&rule.full_step, true))?)
        };

        let mut increment = vec![Complex64::new(0.0, 0.0); 2 * max_mode + 1];
        let mut real = u0.is_real_valued() && v.states()[m].is_real_valued();
        for node in &rule.nodes {
            let um = interpolate(u0, &jump_u, node);
            let prod = match &jump_v {
                None => pseudospectral_product(&um, &um)?,
                Some(jv) => {
                    let vm = interpolate(&v.states()[m], jv, node);
                    pseudospectral_product(&um, &vm)?
                }
            };
            real &= prod.is_real_valued();
            let flux = derivative(&prod);
            for ((acc_k, f), r) in increment.iter_mut().zip(flux.coeffs()).zip(&node.remainder) {
                *acc_k += f * r * node.weight;
            }
        }
        let next: Vec<Complex64> = acc
            .coeffs()
            .iter()
            .zip(&rule.full_step)
            .zip(&increment)
            .map(|((a, e), inc)| a * e + inc)
            .collect();
        acc = if real {
            FourierField::from_coeffs(max_mode, next.clone())
                .map(|f| if f.is_real_valued() { f } else { symmetrize(max_mode, &next) })?
        } else {
            FourierField::from_coeffs(max_mode, next)?
        };
        out.push(acc.clone());
    }
    Trajectory::new(times.to_vec(), out)
}

fn symmetrize(max_mode: usize, coeffs: &[Complex64]) -> FourierField {
    FourierField::real_from_fn(max_mode, |k| {
        (coeffs[max_mode + k] + coeffs[max_mode - k].conj()) * 0.5
    })
}

/// `Ψ(u)(t) = S(t)φ − ½ ∫₀ᵗ S(t − t′) ∂_x(u²)(t′) dt′` on the grid of `u`.
pub fn picard_map(u: &Trajectory, phi: &FourierField, cfg: &SolverConfig) -> Result<Trajectory> {
    let phi = embed(phi, u.max_mode())?;
    let free = free_evolution(&phi, u.times(), cfg.params)?;
    let nonlinear = duhamel_bilinear(u, u, cfg)?;
    free.axpy(-0.5, &nonlinear)
}

fn embed(phi: &FourierField, max_mode: usize) -> Result<FourierField> {
    if phi.max_mode() > max_mode {
        return Err(Error::ModeMismatch {
            left: phi.max_mode(),
            right: max_mode,
        });
    }
    Ok(phi.resized(max_mode))
}

/// `min{1, (4Cγ)^{−1/g(s)}}` with `γ = 2C‖φ‖_{H^s}`.
pub fn existence_time(phi_norm: f64, s: SobolevIndex, fitted_c: f64) -> Result<f64> {
    let g = growth_exponent(s)?;
    if !(fitted_c > 0.0) {
        return Err(Error::invalid(format!("contraction constant must be > 0, got {fitted_c}")));
    }
    if !(phi_norm >= 0.0) {
        return Err(Error::invalid(format!("norm must be >= 0, got {phi_norm}")));
    }
    let gamma = 2.0 * fitted_c * phi_norm;
    let base = 4.0 * fitted_c * gamma;
    if base <= 1.0 {
        return Ok(1.0);
    }
    Ok(base.powf(-1.0 / g).min(1.0))
}

/// Bookkeeping of a Picard solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    /// Norm of each iterate `u_0, u_1, …` in the solution space.
    pub iterate_xts_norms: Vec<f64>,
    /// `‖u_{n+1} − u_n‖`.
    pub successive_diffs: Vec<f64>,
    /// `diffs[n+1] / diffs[n]` where `diffs[n] > 0`.
    pub contraction_ratios: Vec<f64>,
    /// Radius `γ = 2C‖φ‖` of the ball the iteration runs in.
    pub gamma: f64,
    pub existence_time_used: f64,
    pub fitted_c: f64,
    pub converged: bool,
    /// `‖Ψ(u) − u‖` for the returned iterate.
    pub residual: Option<f64>,
}

impl PicardReport {
    pub fn iterations(&self) -> usize {
        self.successive_diffs.len()
    }

    pub fn last_difference(&self) -> f64 {
        self.successive_diffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_ratio(&self) -> f64 {
        self.contraction_ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Fixed-point iteration `u_0 = S(t)φ`, `u_{n+1} = Ψ(u_n)` on `[0, T]`.
///
/// `T` must not exceed [`existence_time`] for `‖φ‖_{H^s}` and
/// [`SolverConfig::contraction_constant`]. Stops once successive iterates differ
/// by at most `picard_tol` in the solution-space norm; otherwise fails with
/// [`Error::NotConverged`] carrying the report.
pub fn picard_solve(phi: &FourierField, cfg: &SolverConfig) -> Result<(Trajectory, PicardReport)> {
    cfg.validate_local()?;
    let s = cfg.s.require_above_minus_half()?;
    let phi = embed(phi, cfg.max_mode)?;
    let phi_norm = sobolev_norm(&phi, s);
    let c = cfg.contraction_constant;
    let t_exist = existence_time(phi_norm, s, c)?;
    if cfg.horizon > t_exist * (1.0 + 1e-12) {
        return Err(Error::precondition(format!(
            "T = {} exceeds the existence time {t_exist:.6e} for ||phi|| = {phi_norm:.6e}, C = {c}",
            cfg.horizon
        )));
    }

    let mut report = PicardReport {
        iterate_xts_norms: Vec::new(),
        successive_diffs: Vec::new(),
        contraction_ratios: Vec::new(),
        gamma: 2.0 * c * phi_norm,
        existence_time_used: t_exist,
        fitted_c: c,
        converged: false,
        residual: None,
    };

    let mut u = free_evolution(&phi, &cfg.grid(), cfg.params)?;
    report.iterate_xts_norms.push(solution_norm(&u, s));
    for _ in 0..cfg.picard_max_iter {
        let next = picard_map(&u, &phi, cfg)?;
        let diff = solution_norm(&next.sub(&u)?, s);
        report.iterate_xts_norms.push(solution_norm(&next, s));
        if let Some(&prev) = report.successive_diffs.last() {
            if prev > 0.0 {
                report.contraction_ratios.push(diff / prev);
            }
        }
        report.successive_diffs.push(diff);
        u = next;
        if diff <= cfg.picard_tol {
            report.converged = true;
            break;
        }
    }
    if !report.converged {
        return Err(Error::NotConverged(Box::new(report)));
    }
    let residual = solution_norm(&picard_map(&u, &phi, cfg)?.sub(&u)?, s);
    report.residual = Some(residual);
    Ok((u, report))
}

/// `d/dt ‖u‖²_{L²}` of the linear flow: `4πη Σ_k (|k| − k²)|û(k)|²`, never positive.
///
/// The nonlinear flux `(u, u u_x)` vanishes, so this is also the rate of the
/// full equation.
pub fn energy_rate(u: &FourierField, params: ModelParams) -> f64 {
    let sum: f64 = u
        .modes()
        .map(|(k, c)| (k.abs() - k * k) as f64 * c.norm_sqr())
        .sum();
    4.0 * PI * params.eta * sum
}

/// `(φ₁(z), φ₂(z), φ₃(z))` with `φ_l(z) = Σ_m z^m/(m+l)!`; the power series is
/// used for `|z| < 1e-2`, the closed forms otherwise.
pub fn phi_functions(z: Complex64) -> (Complex64, Complex64, Complex64) {
    if z.norm() < 1e-2 {
        phi_series(z)
    } else {
        phi_closed(z)
    }
}

fn phi_series(z: Complex64) -> (Complex64, Complex64, Complex64) {
    let series = |l: u32| {
        let mut term = Complex64::new(1.0 / factorial(l), 0.0);
        let mut sum = term;
        for m in 1..10u32 {
            term = term * z / (m + l) as f64;
            sum += term;
        }
        sum
    };
    (series(1), series(2), series(3))
}

fn phi_closed(z: Complex64) -> (Complex64, Complex64, Complex64) {
    let ez = z.exp();
    let one = Complex64::new(1.0, 0.0);
    let p1 = (ez - one) / z;
    let p2 = (ez - one - z) / (z * z);
    let p3 = (ez - one - z - z * z * 0.5) / (z * z * z);
    (p1, p2, p3)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

struct EtdCoefficients {
    full: Vec<Complex64>,
    half: Vec<Complex64>,
    half_phi1: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl EtdCoefficients {
    fn new(params: ModelParams, max_mode: usize, h: f64) -> Self {
        let sym = LinearSymbol::new(params);
        let k = max_mode as i64;
        let mut c = EtdCoefficients {
            full: sym.semigroup_factors(max_mode, h),
            half: sym.semigroup_factors(max_mode, h / 2.0),
            half_phi1: Vec::new(),
            f1: Vec::new(),
            f2: Vec::new(),
            f3: Vec::new(),
        };
        for m in -k..=k {
            let z = sym.exponent(m) * h;
            let (p1_half, _, _) = phi_functions(z * 0.5);
            let (p1, p2, p3) = phi_functions(z);
            c.half_phi1.push(p1_half * (h / 2.0));
            c.f1.push((p1 - p2 * 3.0 + p3 * 4.0) * h);
            c.f2.push((p2 - p3 * 2.0) * h);
            c.f3.push((p3 * 4.0 - p2) * h);
        }
        c
    }
}

fn nonlinear_term(u: &FourierField) -> FourierField {
    let sq = pseudospectral_product(u, u).expect("same truncation");
    derivative(&sq).scaled(-0.5)
}

fn combine(parts: &[(&FourierField, &[Complex64])], real: bool) -> FourierField {
    let max_mode = parts[0].0.max_mode();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * max_mode + 1];
    for (field, weights) in parts {
        for ((acc, c), w) in coeffs.iter_mut().zip(field.coeffs()).zip(weights.iter()) {
            *acc += c * w;
        }
    }
    if real {
        symmetrize(max_mode, &coeffs)
    } else {
        FourierField::from_coeffs(max_mode, coeffs).expect("length matches")
    }
}

/// Fourth-order exponential time differencing (Cox–Matthews ETDRK4) on a uniform
/// grid of `n_steps` steps over `[0, T]`; `T` may exceed 1.
///
/// The linear part is propagated exactly; the nonlinearity `−½∂_x(u²)` enters
/// through the φ-function weights. A step that raises the L² norm by more than
/// [`SolverConfig::energy_slack`] (relative) aborts with [`Error::Unstable`].
pub fn etd_march(phi: &FourierField, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let phi = embed(phi, cfg.max_mode)?;
    let times = cfg.grid();
    let h = cfg.horizon / cfg.n_steps as f64;
    let co = EtdCoefficients::new(cfg.params, cfg.max_mode, h);
    let real = phi.is_real_valued();
    let zero = FourierField::zeros(cfg.max_mode);

    let n_of = |u: &FourierField| {
        if cfg.nonlinear {
            nonlinear_term(u)
        } else {
            zero.clone()
        }
    };

    let mut states = Vec::with_capacity(times.len());
    let mut u = phi;
    let mut norm = l2_norm(&u);
    states.push(u.clone());
    let ones = vec![Complex64::new(1.0, 0.0); 2 * cfg.max_mode + 1];
    let twos = vec![Complex64::new(2.0, 0.0); 2 * cfg.max_mode + 1];

    for step in 0..cfg.n_steps {
        let nu = n_of(&u);
        let a = combine(&[(&u, &co.half), (&nu, &co.half_phi1)], real);
        let na = n_of(&a);
        let b = combine(&[(&u, &co.half), (&na, &co.half_phi1)], real);
        let nb = n_of(&b);
        let rhs_c = combine(&[(&nb, &twos), (&nu, &neg(&ones))], real);
        let c = combine(&[(&a, &co.half), (&rhs_c, &co.half_phi1)], real);
        let nc = n_of(&c);
        let nab = combine(&[(&na, &ones), (&nb, &ones)], real);
        let twice_f2: Vec<Complex64> = co.f2.iter().map(|x| x * 2.0).collect();
        let next = combine(
            &[(&u, &co.full), (&nu, &co.f1), (&nab, &twice_f2), (&nc, &co.f3)],
            real,
        );
        let next_norm = l2_norm(&next);
        if next_norm > norm * (1.0 + cfg.energy_slack) {
            return Err(Error::Unstable {
                step: step + 1,
                before: norm,
                after: next_norm,
            });
        }
        norm = next_norm;
        u = next;
        states.push(u.clone());
    }
    Trajectory::new(times, states)
}

fn neg(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|x| -x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::apply_semigroup;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg(k: usize, s: f64, horizon: f64, n: usize) -> SolverConfig {
        SolverConfig::new(
            ModelParams::new(1.0, 1.0).unwrap(),
            SobolevIndex::new(s).unwrap(),
            k,
            horizon,
            n,
        )
    }

    fn smooth(k: usize, amp: f64) -> FourierField {
        FourierField::real_from_fn(k, |m| {
            if m == 0 {
                c(0.0, 0.0)
            } else {
                Complex64::from_polar(amp * (-(m as f64)).exp(), 0.7 * m as f64)
            }
        })
    }

    #[test]
    fn growth_exponent_ranges() {
        let g = |s| growth_exponent(SobolevIndex::new(s).unwrap());
        assert_eq!(g(-0.25).unwrap(), 0.125);
        assert_eq!(g(0.0).unwrap(), 0.25);
        assert_eq!(g(3.0).unwrap(), 0.25);
        assert!(g(-0.5).is_err());
        assert!(g(-0.49).unwrap() > 0.0);
    }

    #[test]
    fn duhamel_of_zero_is_zero() {
        let cfg = cfg(8, 0.0, 0.5, 4);
        let zero = Trajectory::new(cfg.grid(), vec![FourierField::zeros(8); 5]).unwrap();
        let u = free_evolution(&smooth(8, 0.3), &cfg.grid(), cfg.params).unwrap();
        let d = duhamel_bilinear(&zero, &u, &cfg).unwrap();
        assert!(d.states().iter().all(|f| f.coeffs().iter().all(|c| c.norm() == 0.0)));
        let d = duhamel_bilinear(&u, &u, &cfg).unwrap();
        assert!(d.states()[0].coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn duhamel_rejects_grid_mismatch() {
        let a = cfg(4, 0.0, 0.5, 4);
        let b = cfg(4, 0.0, 0.5, 5);
        let u = free_evolution(&smooth(4, 0.3), &a.grid(), a.params).unwrap();
        let v = free_evolution(&smooth(4, 0.3), &b.grid(), b.params).unwrap();
        assert!(matches!(duhamel_bilinear(&u, &v, &a), Err(Error::GridMismatch)));
    }

    #[test]
    fn picard_map_of_zero_is_free_evolution() {
        let cfg = cfg(8, 0.0, 0.5, 4);
        let phi = smooth(8, 0.3);
        let zero = Trajectory::new(cfg.grid(), vec![FourierField::zeros(8); 5]).unwrap();
        let psi = picard_map(&zero, &phi, &cfg).unwrap();
        for (t, f) in psi.times().iter().zip(psi.states()) {
            let free = apply_semigroup(&phi, *t, cfg.params).unwrap();
            assert!(f.max_abs_diff(&free).unwrap() == 0.0);
        }
        let psi = picard_map(&zero, &FourierField::zeros(8), &cfg).unwrap();
        assert!(psi.states().iter().all(|f| f.coeffs().iter().all(|c| c.norm() == 0.0)));
    }

    #[test]
    fn existence_time_cases() {
        let s = SobolevIndex::new(0.0).unwrap();
        assert_eq!(existence_time(0.0, s, 3.0).unwrap(), 1.0);
        let c0 = 1.7;
        assert_eq!(existence_time(1.0 / (8.0 * c0 * c0), s, c0).unwrap(), 1.0);
        let s = SobolevIndex::new(-0.2).unwrap();
        let g = growth_exponent(s).unwrap();
        let t1 = existence_time(0.5, s, 2.0).unwrap();
        let t2 = existence_time(1.0, s, 2.0).unwrap();
        assert!((t2 / t1 - 2f64.powf(-1.0 / g)).abs() < 1e-12);
        assert!(existence_time(1.0, SobolevIndex::new(-0.5).unwrap(), 1.0).is_err());
    }

    #[test]
    fn picard_zero_data_converges_immediately() {
        let cfg = cfg(8, 0.0, 1.0, 4);
        let (u, rep) = picard_solve(&FourierField::zeros(8), &cfg).unwrap();
        assert_eq!(rep.iterations(), 1);
        assert!(rep.converged);
        assert!(u.states().iter().all(|f| f.coeffs().iter().all(|c| c.norm() == 0.0)));
    }

    #[test]
    fn picard_small_single_mode() {
        let mut cfg = cfg(16, 0.0, 1.0, 16);
        let phi = FourierField::real_from_fn(16, |k| if k == 1 { c(5e-4, 0.0) } else { c(0.0, 0.0) });
        cfg.horizon = existence_time(sobolev_norm(&phi, cfg.s), cfg.s, 1.0).unwrap();
        let (_, rep) = picard_solve(&phi, &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.contraction_ratios.iter().all(|&r| r <= 0.5), "{:?}", rep.contraction_ratios);
        assert!(rep.residual.unwrap() <= 10.0 * cfg.picard_tol);
    }

    #[test]
    fn picard_rejects_horizon_beyond_existence_time() {
        let cfg = cfg(8, 0.0, 1.0, 4);
        let phi = smooth(8, 10.0);
        let err = picard_solve(&phi, &cfg).unwrap_err();
        assert!(err.is_precondition());
        let bad = SolverConfig { s: SobolevIndex::new(-0.6).unwrap(), ..cfg };
        assert!(picard_solve(&FourierField::zeros(8), &bad).unwrap_err().is_precondition());
    }

    #[test]
    fn picard_reports_non_convergence() {
        let mut cfg = cfg(8, 0.0, 1.0, 8);
        cfg.picard_max_iter = 1;
        cfg.picard_tol = 1e-300;
        let phi = FourierField::real_from_fn(8, |k| if k == 1 { c(1e-4, 0.0) } else { c(0.0, 0.0) });
        match picard_solve(&phi, &cfg) {
            Err(Error::NotConverged(rep)) => assert_eq!(rep.iterations(), 1),
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn energy_rate_values() {
        let p = ModelParams::new(0.0, 1.3).unwrap();
        let low = FourierField::real_from_fn(5, |k| if k <= 1 { c(0.4, -0.2 * k as f64) } else { c(0.0, 0.0) });
        assert_eq!(energy_rate(&low, p), 0.0);
        let a = c(0.3, 0.4);
        let m2 = FourierField::real_from_fn(5, |k| if k == 2 { a } else { c(0.0, 0.0) });
        let expected = -16.0 * PI * 1.3 * a.norm_sqr();
        assert!((energy_rate(&m2, p) - expected).abs() < 1e-14);
    }

    #[test]
    fn phi_functions_agree_across_the_switch() {
        for z in [c(0.01, 0.0), c(-0.01, 0.0), c(0.0, 0.01), c(-0.007, 0.007)] {
            let (a1, a2, a3) = phi_series(z);
            let (b1, b2, b3) = phi_closed(z);
            // closed form of φ₃ loses about eps/|z|³
            assert!((a1 - b1).norm() < 1e-13);
            assert!((a2 - b2).norm() < 1e-11);
            assert!((a3 - b3).norm() < 1e-9);
        }
        let (p1, p2, p3) = phi_functions(c(0.0, 0.0));
        assert_eq!((p1.re, p2.re), (1.0, 0.5));
        assert!((p3.re - 1.0 / 6.0).abs() < 1e-16);
        let z = c(-3.0, 2.0);
        let (p1, _, _) = phi_functions(z);
        assert!((p1 * z + 1.0 - z.exp()).norm() < 1e-14);
    }

    #[test]
    fn etd_zero_and_linear_runs() {
        let mut cfg = cfg(8, 0.0, 2.0, 20);
        let u = etd_march(&FourierField::zeros(8), &cfg).unwrap();
        assert!(u.states().iter().all(|f| f.coeffs().iter().all(|c| c.norm() == 0.0)));

        cfg.nonlinear = false;
        let phi = smooth(8, 0.5);
        let traj = etd_march(&phi, &cfg).unwrap();
        let h = cfg.horizon / cfg.n_steps as f64;
        for w in traj.states().windows(2) {
            let step = apply_semigroup(&w[0], h, cfg.params).unwrap();
            assert_eq!(step.max_abs_diff(&w[1]).unwrap(), 0.0);
        }
    }

    #[test]
    fn etd_conserves_mean_and_decays_energy() {
        let cfg = cfg(16, 0.0, 1.0, 100);
        let phi = FourierField::real_from_fn(16, |m| {
            if m == 0 {
                c(0.37, 0.0)
            } else {
                Complex64::from_polar(0.8 / (m * m) as f64, m as f64)
            }
        });
        let traj = etd_march(&phi, &cfg).unwrap();
        for f in traj.states() {
            assert_eq!(f.mean(), phi.mean());
        }
        let norms: Vec<f64> = traj.states().iter().map(l2_norm).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)));
    }
}
