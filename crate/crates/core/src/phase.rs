//! Eigenvalue-free reconstruction and all-pass phase.
//!
//! On the real axis `a(ω)` factors into a Blaschke product over the discrete
//! eigenvalues and a minimum-phase part fixed by `|b|` alone:
//!
//! ```text
//! A[b](ω) = sqrt(1 - |b|²) · exp( (j/2) · H[ln(1 - |b|²)] )
//! G(ω)    = a(ω) / A[b](ω) = Π (ω - λ_k)/(ω - λ_k*)
//! θ(ω)    = unwrap arg G = 2 Σ arccot((ω_k - ω)/σ_k)
//! ```
//!
//! `H` uses the spectral multiplier `-j·sign(k)` (so `H[cos] = sin`); with it
//! the identity above holds without any extra phase offset. `θ` rises by `2π`
//! per eigenvalue, which gives the eigenvalue count.
//!
//! The grid spacing must stay below the smallest `σ_k`, otherwise the phase
//! can legitimately move by more than `π` between samples and unwrapping fails.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scattering::{fmt17, ContinuousSpectrum, FrequencyGrid};

pub const DEFAULT_LOG_FLOOR: f64 = 1e-12;

/// `|A|` below this marks a point of `G` as unreliable.
pub const MIN_RELIABLE_A: f64 = 1e-6;

/// Relative edge level of the Hilbert input above which a warning is logged.
pub const HILBERT_EDGE_LEVEL: f64 = 1e-2;

/// Count is low-confidence when the edge slope of `θ` exceeds this fraction
/// of its peak slope.
pub const EDGE_FLATNESS: f64 = 1e-2;

/// Peak slopes below this (rad per unit frequency) mean the phase carries no
/// eigenvalue feature at all; the flatness check is skipped.
const FLAT_PHASE_SLOPE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedLog {
    pub values: Vec<f64>,
    /// Points where `1 - |b|²` fell below the floor.
    pub clamped: usize,
}

/// `ln(max(1 - |b|², floor))` pointwise.
pub fn magnitude_bounded_log(b: &[Complex64], floor: f64) -> BoundedLog {
    let mut clamped = 0;
    let values = b
        .iter()
        .map(|z| {
            let x = 1.0 - z.norm_sqr();
            if x < floor || x.is_nan() {
                clamped += 1;
                floor.ln()
            } else {
                x.ln()
            }
        })
        .collect();
    BoundedLog { values, clamped }
}

/// Discrete Hilbert transform of a uniformly sampled real sequence.
///
/// The input is zero-padded to at least four times its length before the
/// periodic spectral multiplier is applied, which pushes the wrap-around
/// image away from the data; values near the edges remain approximate.
pub fn hilbert(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = x[0].abs().max(x[n - 1].abs());
    if peak > 0.0 && edge > HILBERT_EDGE_LEVEL * peak {
        log::warn!(
            "hilbert input does not decay at the grid edges ({:.2e} of peak); edge values are unreliable",
            edge / peak
        );
    }

    let m = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(m, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    // -j·sign(k); DC and Nyquist bins vanish
    let half = m / 2;
    buf[0] = Complex64::new(0.0, 0.0);
    buf[half] = Complex64::new(0.0, 0.0);
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || k == half {
            continue;
        }
        *v = if k < half { Complex64::new(v.im, -v.re) } else { Complex64::new(-v.im, v.re) };
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf[..n].iter().map(|v| v.re * scale).collect()
}

/// [`hilbert`] for values tagged with their abscissae; fails on a non-uniform grid.
pub fn hilbert_on(omegas: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if omegas.len() != x.len() {
        return Err(Error::GridMismatch(format!("{} abscissae for {} values", omegas.len(), x.len())));
    }
    FrequencyGrid::from_samples(omegas)?;
    Ok(hilbert(x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// `A[b(ω)]` on the spectrum grid.
    pub a_hat: Vec<Complex64>,
    pub clamped: usize,
}

/// Eigenvalue-free part `A[b(ω)]` of `a(ω)`, built from `|b|` only.
pub fn reconstruct_a(cs: &ContinuousSpectrum) -> Reconstruction {
    let log = magnitude_bounded_log(&cs.b, DEFAULT_LOG_FLOOR);
    if log.clamped > 0 {
        log::warn!("1 - |b|² clamped at {} of {} points", log.clamped, cs.b.len());
    }
    let h = hilbert(&log.values);
    let a_hat = log
        .values
        .iter()
        .zip(&h)
        .map(|(&l, &hl)| Complex64::from_polar((0.5 * l).exp(), 0.5 * hl))
        .collect();
    Reconstruction { a_hat, clamped: log.clamped }
}

/// Unwrapped all-pass phase on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub grid: FrequencyGrid,
    pub theta: Vec<f64>,
    pub g_magnitude: Vec<f64>,
    /// Points where `|A[b]|` was too small for `G` to be trusted.
    pub unreliable: Vec<bool>,
    /// Points where `1 - |b|²` was clamped.
    pub clamped: usize,
}

impl PhaseProfile {
    pub fn new(grid: FrequencyGrid, theta: Vec<f64>, g_magnitude: Vec<f64>) -> Result<Self> {
        if theta.len() != grid.n_points || g_magnitude.len() != grid.n_points {
            return Err(Error::GridMismatch(format!(
                "phase profile has {} / {} values for {} grid points",
                theta.len(),
                g_magnitude.len(),
                grid.n_points
            )));
        }
        let unreliable = vec![false; theta.len()];
        Ok(Self { grid, theta, g_magnitude, unreliable, clamped: 0 })
    }

    pub fn unreliable_count(&self) -> usize {
        self.unreliable.iter().filter(|&&u| u).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["omega", "theta", "g_magnitude"])?;
        for i in 0..self.grid.n_points {
            out.write_record([fmt17(self.grid.omega(i)), fmt17(self.theta[i]), fmt17(self.g_magnitude[i])])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let expected = ["omega", "theta", "g_magnitude"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
            return Err(Error::InvalidGrid(format!("unexpected phase header {headers:?}")));
        }
        let (mut omegas, mut theta, mut g) = (Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut vals = [0.0; 3];
            for (k, field) in rec.iter().enumerate().take(3) {
                vals[k] = field.trim().parse().map_err(|_| {
                    Error::InvalidGrid(format!("row {}: cannot parse {field:?}", row + 1))
                })?;
            }
            omegas.push(vals[0]);
            theta.push(vals[1]);
            g.push(vals[2]);
        }
        let grid = FrequencyGrid::from_samples(&omegas)?;
        Self::new(grid, theta, g)
    }
}

/// `G = a/A[b]` and its unwrapped phase.
///
/// Unwrapping scans left to right and corrects every step to `(-π, π]`. The
/// branch is fixed by taking the principal value of `arg G(ω_min)`, which is
/// the small positive remainder of the arccot terms at a finite left edge
/// (each term tends to 0 only as ω → -∞).
pub fn allpass_phase(cs: &ContinuousSpectrum) -> PhaseProfile {
    let rec = reconstruct_a(cs);
    let n = cs.a.len();
    let mut theta = Vec::with_capacity(n);
    let mut g_magnitude = Vec::with_capacity(n);
    let mut unreliable = Vec::with_capacity(n);
    let mut prev_arg = 0.0;
    for (i, (a, ah)) in cs.a.iter().zip(&rec.a_hat).enumerate() {
        let bad = ah.norm() < MIN_RELIABLE_A;
        let g = a / ah;
        let arg = g.arg();
        if i == 0 {
            theta.push(arg);
        } else {
            let d = wrap_pi(arg - prev_arg);
            theta.push(theta[i - 1] + d);
        }
        prev_arg = arg;
        g_magnitude.push(g.norm());
        unreliable.push(bad || !g.re.is_finite() || !g.im.is_finite());
    }
    let bad = unreliable.iter().filter(|&&u| u).count();
    if bad > 0 {
        log::warn!("|A[b]| below {MIN_RELIABLE_A:e} at {bad} points; phase there is unreliable");
    }
    PhaseProfile { grid: cs.grid, theta, g_magnitude, unreliable, clamped: rec.clamped }
}

/// Wraps to `(-π, π]`.
fn wrap_pi(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = x - TAU * (x / TAU).round();
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EigenCount {
    pub n: usize,
    /// `(θ_end - θ_start)/2π` before rounding.
    pub raw: f64,
    /// The phase had not flattened at the grid edges.
    pub low_confidence: bool,
}

/// Number of eigenvalues from the total phase rise.
pub fn count_eigenvalues(p: &PhaseProfile) -> EigenCount {
    let n = p.theta.len();
    if n < 2 {
        return EigenCount { n: 0, raw: 0.0, low_confidence: true };
    }
    let raw = (p.theta[n - 1] - p.theta[0]) / std::f64::consts::TAU;
    let count = raw.round().max(0.0) as usize;

    let slopes = smoothed_slope(&p.theta, p.grid.spacing());
    let peak = slopes.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let k = (n / 50).max(1);
    let edge = |range: &[f64]| range.iter().map(|v| v.abs()).sum::<f64>() / range.len() as f64;
    let edge_slope = edge(&slopes[..k]).max(edge(&slopes[n - k..]));
    let low_confidence = peak > FLAT_PHASE_SLOPE && edge_slope > EDGE_FLATNESS * peak;
    if low_confidence {
        log::warn!("phase has not flattened at the grid edges; eigenvalue count is low-confidence");
    }
    EigenCount { n: count, raw, low_confidence }
}

/// Central-difference derivative followed by a short moving average.
pub(crate) fn smoothed_slope(theta: &[f64], spacing: f64) -> Vec<f64> {
    let n = theta.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (theta[hi] - theta[lo]) / ((hi - lo) as f64 * spacing)
        })
        .collect();
    moving_average(&d, 2)
}

pub(crate) fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(half), (i + half).min(n - 1));
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}
