//! Discrete eigenvalues from the all-pass phase.
//!
//! The measured phase is matched by the model
//!
//! ```text
//! θ̂(ω) = 2 Σ_k arccot((ω_k - ω)/σ_k),   arccot ∈ (0, π)
//! ```
//!
//! by minimizing the weighted square error `E = ∫ C(ω)(θ̂ - θ)² dω` over the
//! eigenvalue positions `λ_k = ω_k + jσ_k`. With `M_k = σ_k² + (ω - ω_k)²`:
//!
//! ```text
//! ∂E/∂ω_k = -4 ∫ C (θ̂ - θ) σ_k / M_k dω
//! ∂E/∂σ_k = -4 ∫ C (θ̂ - θ) (ω - ω_k) / M_k dω
//! ```
//!
//! Both integrals use the same trapezoidal weights as `E`, so the update
//! direction is the exact gradient of the discretized error.
//!
//! Steps are taken along the negative gradient. The first trial step of each
//! iteration is `step0` on the first iteration and the Barzilai-Borwein
//! estimate afterwards; a trial that increases `E` is halved until it does
//! not, so the error history never increases.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{count_eigenvalues, moving_average, smoothed_slope, PhaseProfile};
use crate::scattering::FrequencyGrid;

pub const MAX_HALVINGS: usize = 30;

/// `λ = omega0 + j·sigma` with `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub omega0: f64,
    pub sigma: f64,
}

impl Eigenvalue {
    pub fn new(omega0: f64, sigma: f64) -> Result<Self> {
        let e = Self { omega0, sigma };
        e.validate()?;
        Ok(e)
    }

    pub fn from_lambda(lambda: Complex64) -> Result<Self> {
        Self::new(lambda.re, lambda.im)
    }

    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.omega0, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega0.is_finite() || !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::InvalidEigenvalue(format!(
                "need finite omega0 and sigma > 0, got {} + j{}",
                self.omega0, self.sigma
            )));
        }
        Ok(())
    }
}

/// Weight function `C(ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// 1 on the central `fraction` of the grid, 0 outside.
    Central { fraction: f64 },
    /// 1 on `[omega_lo, omega_hi]`, 0 outside.
    Band { omega_lo: f64, omega_hi: f64 },
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Central { fraction: 0.9 }
    }
}

impl Weight {
    fn validate(&self) -> Result<()> {
        match *self {
            Weight::Central { fraction } if !(fraction > 0.0 && fraction <= 1.0) => {
                Err(Error::InvalidConfig(format!("weight fraction must be in (0, 1], got {fraction}")))
            }
            Weight::Band { omega_lo, omega_hi } if !(omega_lo < omega_hi) => Err(Error::InvalidConfig(
                format!("weight band needs omega_lo < omega_hi, got [{omega_lo}, {omega_hi}]"),
            )),
            _ => Ok(()),
        }
    }

    /// Trapezoidal quadrature weights times `C(ω_i)`.
    pub fn quadrature(&self, grid: &FrequencyGrid) -> Vec<f64> {
        let n = grid.n_points;
        let inside: Vec<bool> = match *self {
            Weight::Central { fraction } => {
                let (lo, hi) = grid.central_range(fraction);
                (0..n).map(|i| i >= lo && i <= hi).collect()
            }
            Weight::Band { omega_lo, omega_hi } => {
                (0..n).map(|i| (omega_lo..=omega_hi).contains(&grid.omega(i))).collect()
            }
        };
        let h = grid.spacing();
        (0..n)
            .map(|i| {
                if !inside[i] {
                    return 0.0;
                }
                // half weight at the ends of each supported segment
                let edge = i == 0 || i + 1 == n || !inside[i - 1] || !inside[i + 1];
                if edge {
                    0.5 * h
                } else {
                    h
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub weight: Weight,
    pub step0: f64,
    pub max_iters: usize,
    /// Stop when `E / ∫C` falls below this.
    pub tol_error: f64,
    /// Stop when the largest parameter change of an accepted step falls below this.
    pub tol_step: f64,
    pub sigma_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            weight: Weight::default(),
            step0: 0.1,
            max_iters: 500,
            tol_error: 1e-8,
            tol_step: 1e-8,
            sigma_floor: 1e-6,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("step0", self.step0)?;
        positive("tol_error", self.tol_error)?;
        positive("tol_step", self.tol_step)?;
        positive("sigma_floor", self.sigma_floor)?;
        if self.tol_error >= 1.0 || self.tol_step >= 1.0 {
            return Err(Error::InvalidConfig("tolerances must be below 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Model phase `θ̂` on `grid`.
pub fn model_phase(estimates: &[Eigenvalue], grid: &FrequencyGrid) -> Result<Vec<f64>> {
    for e in estimates {
        e.validate()?;
    }
    Ok(grid.omegas().iter().map(|&w| model_phase_at(estimates, w)).collect())
}

fn model_phase_at(estimates: &[Eigenvalue], omega: f64) -> f64 {
    estimates.iter().map(|e| 2.0 * e.sigma.atan2(e.omega0 - omega)).sum()
}

/// Precomputed quadrature for one profile and configuration.
struct Objective<'a> {
    omegas: Vec<f64>,
    theta: &'a [f64],
    weights: Vec<f64>,
    support: f64,
}

impl<'a> Objective<'a> {
    fn new(profile: &'a PhaseProfile, cfg: &FitConfig) -> Self {
        let mut weights = cfg.weight.quadrature(&profile.grid);
        for (w, &bad) in weights.iter_mut().zip(&profile.unreliable) {
            if bad {
                *w = 0.0;
            }
        }
        let support = weights.iter().sum();
        Self { omegas: profile.grid.omegas(), theta: &profile.theta, weights, support }
    }

    fn error(&self, est: &[Eigenvalue]) -> f64 {
        self.omegas
            .iter()
            .zip(self.theta)
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|((&om, &th), &w)| {
                let r = model_phase_at(est, om) - th;
                w * r * r
            })
            .sum()
    }

    /// `(∂E/∂ω_k, ∂E/∂σ_k)` for every estimate.
    fn gradient(&self, est: &[Eigenvalue]) -> Vec<(f64, f64)> {
        let mut g = vec![(0.0, 0.0); est.len()];
        for ((&om, &th), &w) in self.omegas.iter().zip(self.theta).zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let r = model_phase_at(est, om) - th;
            let f = -4.0 * w * r;
            for (gk, e) in g.iter_mut().zip(est) {
                let d = om - e.omega0;
                let m = e.sigma * e.sigma + d * d;
                gk.0 += f * e.sigma / m;
                gk.1 += f * d / m;
            }
        }
        g
    }

    fn normalized(&self, e: f64) -> f64 {
        if self.support > 0.0 {
            e / self.support
        } else {
            e
        }
    }
}

/// Weighted square error between the model and the measured phase.
///
/// Points flagged unreliable in the profile carry zero weight.
pub fn fit_error(profile: &PhaseProfile, estimates: &[Eigenvalue], cfg: &FitConfig) -> f64 {
    Objective::new(profile, cfg).error(estimates)
}

/// Gradient of [`fit_error`]; the descent direction is its negative.
pub fn fit_gradient(profile: &PhaseProfile, estimates: &[Eigenvalue], cfg: &FitConfig) -> Vec<(f64, f64)> {
    Objective::new(profile, cfg).gradient(estimates)
}

/// Optimizer state after some number of iterations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitState {
    pub estimates: Vec<Eigenvalue>,
    pub iteration: usize,
    /// `E` before the first step and after every accepted step.
    pub error_history: Vec<f64>,
    pub converged: bool,
    /// `θ̂ - θ` on the profile grid at the current estimates.
    pub residual_profile: Vec<f64>,
    /// Trial step for the next iteration.
    pub step: f64,
    pub diagnostic: Option<String>,
    #[serde(skip)]
    done: bool,
}

impl FitState {
    pub fn new(profile: &PhaseProfile, estimates: Vec<Eigenvalue>, cfg: &FitConfig) -> Result<Self> {
        for e in &estimates {
            e.validate()?;
        }
        let obj = Objective::new(profile, cfg);
        let e0 = obj.error(&estimates);
        Ok(Self {
            residual_profile: residuals(profile, &estimates),
            estimates,
            iteration: 0,
            error_history: vec![e0],
            converged: false,
            step: cfg.step0,
            diagnostic: None,
            done: false,
        })
    }

    pub fn final_error(&self) -> f64 {
        *self.error_history.last().expect("history starts with the initial error")
    }

    /// True once a stopping rule fired (converged or not).
    pub fn finished(&self) -> bool {
        self.done
    }
}

fn residuals(profile: &PhaseProfile, est: &[Eigenvalue]) -> Vec<f64> {
    let g = &profile.grid;
    (0..g.n_points).map(|i| model_phase_at(est, g.omega(i)) - profile.theta[i]).collect()
}

fn flatten(est: &[Eigenvalue]) -> Vec<f64> {
    est.iter().flat_map(|e| [e.omega0, e.sigma]).collect()
}

/// One gradient-descent iteration with backtracking.
pub fn gradient_step(profile: &PhaseProfile, state: &FitState, cfg: &FitConfig) -> FitState {
    step_with(&Objective::new(profile, cfg), profile, state, cfg)
}

fn step_with(obj: &Objective, profile: &PhaseProfile, state: &FitState, cfg: &FitConfig) -> FitState {
    let mut next = state.clone();
    next.iteration += 1;
    if state.estimates.is_empty() {
        next.converged = true;
        next.done = true;
        return next;
    }
    let e0 = state.final_error();
    if obj.normalized(e0) <= cfg.tol_error {
        next.converged = true;
        next.done = true;
        return next;
    }
    let grad = obj.gradient(&state.estimates);
    let g: Vec<f64> = grad.iter().flat_map(|&(a, b)| [a, b]).collect();
    let x = flatten(&state.estimates);

    let mut alpha = state.step;
    for _ in 0..=MAX_HALVINGS {
        let trial: Vec<Eigenvalue> = state
            .estimates
            .iter()
            .zip(&grad)
            .map(|(e, &(gw, gs))| Eigenvalue {
                omega0: e.omega0 - alpha * gw,
                sigma: (e.sigma - alpha * gs).max(cfg.sigma_floor),
            })
            .collect();
        let e1 = obj.error(&trial);
        if e1 <= e0 {
            let x1 = flatten(&trial);
            let s: Vec<f64> = x1.iter().zip(&x).map(|(a, b)| a - b).collect();
            let moved = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            next.estimates = trial;
            next.error_history.push(e1);
            next.residual_profile = residuals(profile, &next.estimates);
            let g1: Vec<f64> = obj.gradient(&next.estimates).iter().flat_map(|&(a, b)| [a, b]).collect();
            next.step = bb_step(&x, &g, &x1, &g1, alpha.max(cfg.step0));
            if obj.normalized(e1) <= cfg.tol_error || moved <= cfg.tol_step {
                next.converged = true;
                next.done = true;
            }
            return next;
        }
        alpha *= 0.5;
    }

    // No decrease even for a tiny step: either a stationary point at the
    // resolution of the error, or a genuine failure.
    let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    next.done = true;
    if alpha * gnorm <= cfg.tol_step {
        next.converged = true;
        next.diagnostic = Some("stopped at a stationary point (no representable descent)".into());
    } else {
        next.converged = false;
        next.diagnostic = Some(format!("backtracking exhausted after {MAX_HALVINGS} halvings"));
    }
    next
}

/// Barzilai-Borwein step `sᵀs / sᵀy` between two iterates.
fn bb_step(x0: &[f64], g0: &[f64], x1: &[f64], g1: &[f64], fallback: f64) -> f64 {
    let (mut ss, mut sy) = (0.0, 0.0);
    for i in 0..x0.len() {
        let s = x1[i] - x0[i];
        ss += s * s;
        sy += s * (g1[i] - g0[i]);
    }
    if sy > 0.0 && ss > 0.0 {
        (ss / sy).clamp(1e-10, 1e10)
    } else {
        fallback
    }
}

/// Initial estimates and how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Initialization {
    pub estimates: Vec<Eigenvalue>,
    /// A slope peak held more than one eigenvalue and was split.
    pub merged_peak: bool,
    /// Some estimates were placed without a matching peak.
    pub fallback: bool,
}

/// Initial estimates from the peaks of `dθ/dω`.
///
/// `dθ/dω = Σ 2σ_k/M_k` is a sum of Lorentzians. Each local maximum gives
/// `ω̂ = ` its position and `σ̂ = 2/height`; the area of the peak's basin
/// divided by `2π` tells how many eigenvalues it holds. A peak holding `m > 1`
/// eigenvalues (coincident real parts) is split into `m` widths in a 1:2:4…
/// ratio whose Lorentzian heights add up to the measured peak. Any estimates
/// still missing are spread over the grid center with the median width.
pub fn init_estimates(profile: &PhaseProfile, n: Option<usize>) -> Initialization {
    let n = n.unwrap_or_else(|| count_eigenvalues(profile).n);
    let mut init = Initialization { estimates: Vec::new(), merged_peak: false, fallback: false };
    if n == 0 || profile.theta.len() < 3 {
        return init;
    }
    let grid = &profile.grid;
    let h = grid.spacing();
    let slope = moving_average(&smoothed_slope(&profile.theta, h), 2);
    let len = slope.len();
    let peak_max = slope.iter().cloned().fold(f64::MIN, f64::max);
    if !(peak_max > 0.0) {
        return spread(init, n, grid, 1.0);
    }

    struct Peak {
        index: usize,
        height: f64,
        area: f64,
    }
    let mut peaks = Vec::new();
    for i in 1..len - 1 {
        if slope[i] > slope[i - 1] && slope[i] >= slope[i + 1] && slope[i] > 0.05 * peak_max {
            let mut lo = i;
            while lo > 0 && slope[lo - 1] <= slope[lo] {
                lo -= 1;
            }
            let mut hi = i;
            while hi + 1 < len && slope[hi + 1] <= slope[hi] {
                hi += 1;
            }
            let area: f64 = slope[lo..=hi].iter().sum::<f64>() * h;
            peaks.push(Peak { index: i, height: slope[i], area });
        }
    }
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height));

    let mut remaining = n;
    for p in &peaks {
        if remaining == 0 {
            break;
        }
        let m = ((p.area / TAU).round() as usize).clamp(1, remaining);
        let omega0 = grid.omega(p.index);
        if m == 1 {
            init.estimates.push(Eigenvalue { omega0, sigma: 2.0 / p.height });
        } else {
            init.merged_peak = true;
            let ratios: Vec<f64> = (0..m).map(|j| 2f64.powi(j as i32)).collect();
            let c = 2.0 / p.height * ratios.iter().map(|r| 1.0 / r).sum::<f64>();
            init.estimates.extend(ratios.iter().map(|r| Eigenvalue { omega0, sigma: c * r }));
        }
        remaining -= m;
    }
    if remaining > 0 {
        let mut widths: Vec<f64> = init.estimates.iter().map(|e| e.sigma).collect();
        widths.sort_by(f64::total_cmp);
        let median = if widths.is_empty() { 1.0 } else { widths[widths.len() / 2] };
        init = spread(init, remaining, grid, median);
    }
    if init.merged_peak || init.fallback {
        log::info!(
            "initialization: merged peak split = {}, fallback placement = {}",
            init.merged_peak,
            init.fallback
        );
    }
    init
}

fn spread(mut init: Initialization, count: usize, grid: &FrequencyGrid, sigma: f64) -> Initialization {
    init.fallback = true;
    let center = 0.5 * (grid.omega_min + grid.omega_max);
    let half = 0.25 * (grid.omega_max - grid.omega_min);
    for k in 0..count {
        // interior points of a uniform split, nudged off existing estimates
        let mut omega0 = center - half + 2.0 * half * (k as f64 + 1.0) / (count as f64 + 1.0);
        while init.estimates.iter().any(|e| (e.omega0 - omega0).abs() < 0.5 * sigma) {
            omega0 += sigma;
        }
        init.estimates.push(Eigenvalue { omega0, sigma });
    }
    init
}

/// Runs gradient descent until a stopping rule fires.
///
/// Without `init`, estimates come from [`init_estimates`] with the count taken
/// from the phase asymptote.
pub fn fit(profile: &PhaseProfile, cfg: &FitConfig, init: Option<Vec<Eigenvalue>>) -> Result<FitState> {
    cfg.validate()?;
    let start = match init {
        Some(v) => v,
        None => init_estimates(profile, None).estimates,
    };
    let obj = Objective::new(profile, cfg);
    let mut state = FitState::new(profile, start, cfg)?;
    while !state.done && state.iteration < cfg.max_iters {
        state = step_with(&obj, profile, &state, cfg);
    }
    if !state.done {
        state.diagnostic = Some(format!("reached max_iters = {}", cfg.max_iters));
    }
    Ok(state)
}
