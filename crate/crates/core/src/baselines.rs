//! Reference eigenvalue detectors: Fourier collocation and Newton-Raphson.
//!
//! Both work directly on the time-domain signal, unlike the phase-synthesis
//! fit, and serve as the comparison points for it. Their outputs, and the
//! fit's, are scored with [`residual_metric`]: `|a(λ̂)|` on an oversampled copy
//! of the signal, which vanishes at a true eigenvalue.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::eigenfit::{Eigenvalue, FitState};
use crate::error::{Error, Result};
use crate::scattering::{FrequencyGrid, Scatterer};
use crate::signals::Signal;

/// An eigenvalue estimate with its `|a(λ)|` residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub omega0: f64,
    pub sigma: f64,
    pub residual_abs_a: f64,
}

impl Detection {
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.omega0, self.sigma)
    }

    pub fn eigenvalue(&self) -> Eigenvalue {
        Eigenvalue { omega0: self.omega0, sigma: self.sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollocationConfig {
    /// Fourier modes per component; the matrix has dimension `2·(2·n_modes+1)`.
    pub n_modes: usize,
    /// Candidates with `|a(λ)|` above this are discarded as spurious.
    pub residual_cutoff: f64,
    /// Minimum `Im λ` of an accepted candidate.
    pub halfplane_margin: f64,
}

impl Default for CollocationConfig {
    fn default() -> Self {
        Self { n_modes: 128, residual_cutoff: 1e-2, halfplane_margin: 1e-3 }
    }
}

impl CollocationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_modes < 8 {
            return Err(Error::InvalidConfig(format!("n_modes must be >= 8, got {}", self.n_modes)));
        }
        if !(self.residual_cutoff > 0.0) {
            return Err(Error::InvalidConfig("residual_cutoff must be positive".into()));
        }
        if !(self.halfplane_margin >= 0.0) {
            return Err(Error::InvalidConfig("halfplane_margin must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollocationResult {
    pub eigenvalues: Vec<Detection>,
    /// Eigenvalues of the collocation matrix.
    pub raw_candidates: usize,
    /// Of those, the ones with `Im λ ≥ halfplane_margin`.
    pub upper_half_candidates: Vec<Complex64>,
}

/// Collocation matrix of the eigenvalue form of the scattering problem.
///
/// With `ψ = Σ c_n e^{j k_n t}`, `k_n = 2πn/P` over the window period `P`,
/// and `Q_p` the Fourier coefficients of `q`, the problem
/// `λψ1 = jψ1' - jqψ2`, `λψ2 = -jψ2' - jq*ψ1` becomes
///
/// ```text
/// [ -diag(k)   -j·T  ] [c1]     [c1]
/// [ -j·T^H    diag(k)] [c2] = λ [c2],    T_nm = Q_{n-m},  |n|, |m| ≤ n_modes
/// ```
pub fn collocation_matrix(s: &Signal, n_modes: usize) -> Result<DMatrix<Complex64>> {
    let n = s.len();
    let m = 2 * n_modes + 1;
    if n <= 4 * n_modes {
        return Err(Error::InvalidConfig(format!(
            "{n} samples cannot resolve {n_modes} Fourier modes (need more than {})",
            4 * n_modes
        )));
    }
    let mut coeffs = s.samples().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut coeffs);
    let inv = 1.0 / n as f64;
    let q_hat = |p: isize| coeffs[p.rem_euclid(n as isize) as usize] * inv;
    let period = n as f64 * s.dt();
    let j = Complex64::new(0.0, 1.0);

    let mut mat = DMatrix::<Complex64>::zeros(2 * m, 2 * m);
    for r in 0..m {
        let kr = 2.0 * std::f64::consts::PI * (r as f64 - n_modes as f64) / period;
        mat[(r, r)] = Complex64::new(-kr, 0.0);
        mat[(m + r, m + r)] = Complex64::new(kr, 0.0);
        for c in 0..m {
            let t = q_hat(r as isize - c as isize);
            mat[(r, m + c)] = -j * t;
            mat[(m + c, r)] = -j * t.conj();
        }
    }
    Ok(mat)
}

/// Fourier collocation followed by residual filtering of spurious roots.
pub fn fourier_collocation(s: &Signal, cfg: &CollocationConfig) -> Result<CollocationResult> {
    cfg.validate()?;
    if s.is_zero() {
        return Ok(CollocationResult { eigenvalues: Vec::new(), raw_candidates: 0, upper_half_candidates: Vec::new() });
    }
    let mat = collocation_matrix(s, cfg.n_modes)?;
    let dim = mat.nrows();
    let schur = nalgebra::Schur::try_new(mat, f64::EPSILON, 1000 * dim)
        .ok_or_else(|| Error::EigenSolver(format!("complex Schur of a {dim}x{dim} matrix did not converge")))?;
    let (_, t) = schur.unpack();
    let eigs: Vec<Complex64> = (0..dim).map(|i| t[(i, i)]).collect();
    if eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenSolver("non-finite eigenvalue".into()));
    }
    let upper: Vec<Complex64> = eigs.iter().copied().filter(|z| z.im >= cfg.halfplane_margin).collect();

    let scatterer = Scatterer::new(s);
    let mut kept = Vec::new();
    for &z in &upper {
        let p = scatterer.at(z, false)?;
        let res = p.a.norm();
        if p.reliable && res <= cfg.residual_cutoff {
            kept.push(Detection { omega0: z.re, sigma: z.im, residual_abs_a: res });
        }
    }
    sort_detections(&mut kept);
    log::debug!("collocation: {} eigenvalues, {} in upper half plane, {} kept", dim, upper.len(), kept.len());
    Ok(CollocationResult { eigenvalues: kept, raw_candidates: dim, upper_half_candidates: upper })
}

/// Inclusive range sampled at `points` evenly spaced values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![0.5 * (self.lo + self.hi)];
        }
        (0..self.points)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub grid_re: RangeSpec,
    pub grid_im: RangeSpec,
    pub max_newton_iters: usize,
    pub tol_a: f64,
    pub dedupe_radius: f64,
    /// Band-limited oversampling of the signal before the search.
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_oversample() -> usize {
    DEFAULT_OVERSAMPLE
}

/// Oversampling used by the Newton search and the residual metric.
pub const DEFAULT_OVERSAMPLE: usize = 4;

impl NewtonConfig {
    /// 16×8 lattice over the default frequency extent of `s` and
    /// `Im λ ∈ (0, energy/4]`, the largest possible eigenvalue height.
    pub fn for_signal(s: &Signal) -> Self {
        let grid = FrequencyGrid::for_signal(s);
        let top = (0.25 * s.energy()).max(0.5);
        Self {
            grid_re: RangeSpec { lo: grid.omega_min, hi: grid.omega_max, points: 16 },
            grid_im: RangeSpec { lo: top / 8.0, hi: top, points: 8 },
            max_newton_iters: 50,
            tol_a: 1e-6,
            dedupe_radius: 1e-3,
            oversample: DEFAULT_OVERSAMPLE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_im.lo > 0.0) || self.grid_im.hi < self.grid_im.lo {
            return Err(Error::InvalidConfig("grid_im must satisfy 0 < lo <= hi".into()));
        }
        if self.grid_re.hi < self.grid_re.lo || self.grid_re.points == 0 || self.grid_im.points == 0 {
            return Err(Error::InvalidConfig("seed lattice ranges must be non-empty".into()));
        }
        if !(self.tol_a > 0.0) || !(self.dedupe_radius > 0.0) || self.max_newton_iters == 0 || self.oversample == 0 {
            return Err(Error::InvalidConfig("tol_a, dedupe_radius, max_newton_iters and oversample must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonResult {
    pub eigenvalues: Vec<Detection>,
    pub seeds: usize,
    pub converged_seeds: usize,
    /// Seeds whose iterate overflowed, left the upper half plane or escaped.
    pub abandoned_seeds: usize,
    /// Largest iteration count among converged seeds.
    pub max_iterations: usize,
}

enum SeedOutcome {
    Root(Complex64, f64, usize),
    Abandoned,
    Exhausted,
}

/// Lattice-seeded Newton-Raphson on `a(λ) = 0`.
///
/// The search uses the same discretization as [`residual_metric`] with
/// `cfg.oversample`, so a converged root is a root of the metric.
///
/// Iterates that step below the real axis are pulled back to a small positive
/// height once; a second excursion, an overflow or a jump far outside the
/// lattice abandons the seed.
pub fn newton_raphson(s: &Signal, cfg: &NewtonConfig) -> Result<NewtonResult> {
    cfg.validate()?;
    let seeds: Vec<Complex64> = cfg
        .grid_im
        .values()
        .iter()
        .flat_map(|&im| cfg.grid_re.values().into_iter().map(move |re| Complex64::new(re, im)))
        .collect();
    if s.is_zero() {
        return Ok(NewtonResult {
            eigenvalues: Vec::new(),
            seeds: seeds.len(),
            converged_seeds: 0,
            abandoned_seeds: 0,
            max_iterations: 0,
        });
    }
    let scatterer = Scatterer::oversampled(s, cfg.oversample);
    let extent = 10.0
        * (cfg.grid_re.lo.abs().max(cfg.grid_re.hi.abs()) + cfg.grid_im.hi).max(1.0);
    let floor = 0.01 * cfg.grid_im.lo;

    let outcomes: Vec<SeedOutcome> = seeds
        .par_iter()
        .map(|&seed| {
            let mut z = seed;
            let mut clamped = false;
            for it in 0..cfg.max_newton_iters {
                let p = match scatterer.at(z, true) {
                    Ok(p) if p.reliable => p,
                    _ => return SeedOutcome::Abandoned,
                };
                if p.a.norm() <= cfg.tol_a {
                    return SeedOutcome::Root(z, p.a.norm(), it);
                }
                let d = p.a_prime.expect("derivative requested");
                let next = z - p.a / d;
                if !next.re.is_finite() || !next.im.is_finite() || next.norm() > extent {
                    return SeedOutcome::Abandoned;
                }
                z = if next.im <= 0.0 {
                    if clamped {
                        return SeedOutcome::Abandoned;
                    }
                    clamped = true;
                    Complex64::new(next.re, floor)
                } else {
                    next
                };
            }
            SeedOutcome::Exhausted
        })
        .collect();

    let mut roots: Vec<(Complex64, f64)> = Vec::new();
    let (mut converged, mut abandoned, mut max_it) = (0, 0, 0);
    for o in outcomes {
        match o {
            SeedOutcome::Root(z, res, it) => {
                converged += 1;
                max_it = max_it.max(it);
                match roots.iter_mut().find(|(r, _)| (*r - z).norm() <= cfg.dedupe_radius) {
                    Some(r) if res < r.1 => *r = (z, res),
                    Some(_) => {}
                    None => roots.push((z, res)),
                }
            }
            SeedOutcome::Abandoned => abandoned += 1,
            SeedOutcome::Exhausted => {}
        }
    }
    let mut eigenvalues: Vec<Detection> =
        roots.into_iter().map(|(z, res)| Detection { omega0: z.re, sigma: z.im, residual_abs_a: res }).collect();
    sort_detections(&mut eigenvalues);
    Ok(NewtonResult { eigenvalues, seeds: seeds.len(), converged_seeds: converged, abandoned_seeds: abandoned, max_iterations: max_it })
}

/// `|a(λ̂_k)|` with `oversample` times as many (band-limited) sub-steps as
/// the standard evaluation, so the metric's step is `oversample` times finer
/// than that of the spectra the detectors work from.
pub fn residual_metric(s: &Signal, estimates: &[Eigenvalue], oversample: usize) -> Result<Vec<f64>> {
    if oversample == 0 {
        return Err(Error::InvalidConfig("oversample must be >= 1".into()));
    }
    for e in estimates {
        e.validate()?;
    }
    if estimates.is_empty() {
        return Ok(Vec::new());
    }
    let scatterer = Scatterer::oversampled(s, oversample);
    estimates.iter().map(|e| Ok(scatterer.at(e.lambda(), false)?.a.norm())).collect()
}

/// Largest distance between greedily matched points of two eigenvalue sets
/// (closest pairs first); `None` if exactly one set is empty.
///
/// Only `min(|a|, |b|)` pairs are matched; unmatched extras are not scored.
pub fn matched_gap(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.is_empty() && b.is_empty() {
        return Some(0.0);
    }
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut gap = 0.0f64;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            gap = gap.max(d);
        }
    }
    Some(gap)
}

fn sort_detections(d: &mut [Detection]) {
    d.sort_by(|a, b| b.sigma.total_cmp(&a.sigma).then(a.omega0.total_cmp(&b.omega0)));
}

/// Detection method tag used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Method {
    #[serde(rename = "cs-phase")]
    #[value(name = "cs-phase")]
    CsPhase,
    #[serde(rename = "fc")]
    #[value(name = "fc")]
    Fc,
    #[serde(rename = "nr")]
    #[value(name = "nr")]
    Nr,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::CsPhase, Method::Fc, Method::Nr];

    pub fn name(&self) -> &'static str {
        match self {
            Method::CsPhase => "cs-phase",
            Method::Fc => "fc",
            Method::Nr => "nr",
        }
    }
}

/// Common report for every detection method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub method: Method,
    pub eigenvalues: Vec<Detection>,
    pub iterations: usize,
    pub converged: bool,
    pub final_error: Option<f64>,
    pub error_history: Vec<f64>,
    pub diagnostics: serde_json::Value,
}

impl DetectionReport {
    pub fn from_fit(s: &Signal, state: &FitState, oversample: usize, diagnostics: serde_json::Value) -> Result<Self> {
        let res = residual_metric(s, &state.estimates, oversample)?;
        let mut eigenvalues: Vec<Detection> = state
            .estimates
            .iter()
            .zip(res)
            .map(|(e, r)| Detection { omega0: e.omega0, sigma: e.sigma, residual_abs_a: r })
            .collect();
        sort_detections(&mut eigenvalues);
        Ok(Self {
            method: Method::CsPhase,
            eigenvalues,
            iterations: state.iteration,
            converged: state.converged,
            final_error: Some(state.final_error()),
            error_history: state.error_history.clone(),
            diagnostics,
        })
    }

    pub fn from_collocation(s: &Signal, r: &CollocationResult, oversample: usize) -> Result<Self> {
        Ok(Self {
            method: Method::Fc,
            eigenvalues: rescore(s, &r.eigenvalues, oversample)?,
            iterations: 1,
            converged: true,
            final_error: None,
            error_history: Vec::new(),
            diagnostics: serde_json::json!({
                "raw_candidates": r.raw_candidates,
                "upper_half_candidates": r.upper_half_candidates.len(),
            }),
        })
    }

    pub fn from_newton(s: &Signal, r: &NewtonResult, oversample: usize) -> Result<Self> {
        Ok(Self {
            method: Method::Nr,
            eigenvalues: rescore(s, &r.eigenvalues, oversample)?,
            iterations: r.max_iterations,
            converged: r.converged_seeds > 0 || r.eigenvalues.is_empty(),
            final_error: None,
            error_history: Vec::new(),
            diagnostics: serde_json::json!({
                "seeds": r.seeds,
                "converged_seeds": r.converged_seeds,
                "abandoned_seeds": r.abandoned_seeds,
            }),
        })
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(Detection::lambda).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.eigenvalues.iter().map(|d| d.residual_abs_a).fold(0.0, f64::max)
    }
}

/// Replaces detector residuals by the oversampled metric.
fn rescore(s: &Signal, d: &[Detection], oversample: usize) -> Result<Vec<Detection>> {
    let est: Vec<Eigenvalue> = d.iter().map(Detection::eigenvalue).collect();
    let res = residual_metric(s, &est, oversample)?;
    Ok(d.iter().zip(res).map(|(d, r)| Detection { residual_abs_a: r, ..*d }).collect())
}
