//! Direct scattering for the Zakharov-Shabat system
//!
//! ```text
//! d/dt [v1]   [      0            q(t)·e^{+2jλt} ] [v1]        [v1]          [1]
//!      [v2] = [ -q*(t)·e^{-2jλt}        0        ] [v2],       [v2](t→-∞) =  [0]
//! ```
//!
//! with `a(λ) = v1(+∞)` and `b(λ) = v2(+∞)`.
//!
//! Each step `[t_i, t_{i+1}]` replaces the coefficient matrix by the average
//! of its values at both samples and propagates with the exact exponential of
//! that constant 2×2 matrix. The off-diagonal structure makes the exponential
//! closed form: with `K = [[0, U], [L, 0]]`, `K² = U·L·I` and
//!
//! ```text
//! exp(hK) = cosh(h·r)·I + sinh(h·r)/r·K,   r² = U·L.
//! ```
//!
//! For real λ the step matrices are unitary, so `|a|² + |b|² = 1` holds to
//! rounding. The boundary condition `(1, 0)` is applied at the first sample;
//! pulses must have decayed at the window edges.
//!
//! For `Im λ > 0` the kernel entries grow like `exp(2·Im λ·|t|)`. The
//! integration factors the midpoint phase out of every step so the step
//! matrices stay bounded, renormalizes the state whenever its norm leaves
//! `[1/RENORM_THRESHOLD, RENORM_THRESHOLD]` and carries the scale as a
//! separate logarithm; results that do not fit in an `f64` are flagged as
//! unreliable. Values of `b` off the real axis carry no
//! accuracy guarantee.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signals::Signal;

pub const RENORM_THRESHOLD: f64 = 1e150;

/// Target bound for the scheme's leading phase error in `a(ω)` when the
/// number of sub-steps is chosen automatically.
pub const SUBSTEP_PHASE_TOL: f64 = 2.5e-4;

pub const MAX_AUTO_SUBSTEPS: usize = 32;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Uniform grid of real frequencies.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn new(omega_min: f64, omega_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidGrid(format!("frequency grid needs n_points >= 2, got {n_points}")));
        }
        if !(omega_min < omega_max) || !omega_min.is_finite() || !omega_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "frequency grid needs finite omega_min < omega_max (got {omega_min}, {omega_max})"
            )));
        }
        Ok(Self { omega_min, omega_max, n_points })
    }

    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    /// Default grid for a pulse: symmetric, wide enough that the all-pass
    /// phase has flattened at both ends and fine enough to resolve narrow
    /// eigenvalue features.
    ///
    /// The phase of a single eigenvalue of height `σ` falls short of its
    /// asymptote by about `2σ/|ω|` at each edge, and `Σσ_k` is bounded by a
    /// quarter of the pulse energy, so a half-width of `4·energy` keeps the
    /// unrounded eigenvalue count within 0.04 of an integer. The half-width is
    /// capped at `π/dt`; the sub-stepped propagation stays resolved there.
    /// The grid is centred on the pulse's carrier.
    pub fn for_signal(s: &Signal) -> Self {
        let cap = (std::f64::consts::PI / s.dt()).max(16.0);
        let half_width = (4.0 * s.energy()).clamp(16.0, cap);
        let spacing = 0.04;
        let n_points = (2.0 * half_width / spacing).ceil() as usize + 1;
        let center = s.carrier();
        Self { omega_min: center - half_width, omega_max: center + half_width, n_points }
    }

    pub fn spacing(&self) -> f64 {
        (self.omega_max - self.omega_min) / (self.n_points - 1) as f64
    }

    #[inline]
    pub fn omega(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.omega_max
        } else {
            self.omega_min + i as f64 * self.spacing()
        }
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.omega(i)).collect()
    }

    /// Index of the grid point nearest to `omega`, clamped to the grid.
    pub fn nearest_index(&self, omega: f64) -> usize {
        let x = ((omega - self.omega_min) / self.spacing()).round();
        x.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Index range `[lo, hi]` of the central `fraction` of the grid.
    pub fn central_range(&self, fraction: f64) -> (usize, usize) {
        let n = self.n_points;
        let margin = ((1.0 - fraction) * 0.5 * (n - 1) as f64).round() as usize;
        (margin, n - 1 - margin)
    }

    /// Reconstructs a grid from sampled frequencies, checking uniformity.
    pub fn from_samples(omegas: &[f64]) -> Result<Self> {
        if omegas.len() < 2 {
            return Err(Error::InvalidGrid("need at least two frequencies".into()));
        }
        let grid = Self::new(omegas[0], omegas[omegas.len() - 1], omegas.len())?;
        let step = grid.spacing();
        for (i, &w) in omegas.iter().enumerate() {
            if (w - grid.omega(i)).abs() > 1e-6 * step {
                return Err(Error::InvalidGrid(format!("non-uniform frequency grid at index {i}")));
            }
        }
        Ok(grid)
    }
}

/// Jost coefficients `a(ω)`, `b(ω)` on a real frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSpectrum {
    pub grid: FrequencyGrid,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl ContinuousSpectrum {
    pub fn new(grid: FrequencyGrid, a: Vec<Complex64>, b: Vec<Complex64>) -> Result<Self> {
        if a.len() != grid.n_points || b.len() != grid.n_points {
            return Err(Error::GridMismatch(format!(
                "spectrum has {} / {} values for {} grid points",
                a.len(),
                b.len(),
                grid.n_points
            )));
        }
        Ok(Self { grid, a, b })
    }

    /// `max | |a|² + |b|² - 1 |` over the grid.
    pub fn unitarity_error(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `Q_c(ω) = b(ω)/a(ω)`.
    pub fn spectral_amplitude(&self) -> Vec<Complex64> {
        self.a.iter().zip(&self.b).map(|(a, b)| b / a).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["omega", "re_a", "im_a", "re_b", "im_b"])?;
        for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            out.write_record([
                fmt17(self.grid.omega(i)),
                fmt17(a.re),
                fmt17(a.im),
                fmt17(b.re),
                fmt17(b.im),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let expected = ["omega", "re_a", "im_a", "re_b", "im_b"];
        if headers.len() != 5 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
            return Err(Error::InvalidGrid(format!("unexpected spectrum header {headers:?}")));
        }
        let (mut omegas, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut vals = [0.0; 5];
            for (k, field) in rec.iter().enumerate().take(5) {
                vals[k] = field.trim().parse().map_err(|_| {
                    Error::InvalidGrid(format!("row {}: cannot parse {field:?}", row + 1))
                })?;
            }
            omegas.push(vals[0]);
            a.push(Complex64::new(vals[1], vals[2]));
            b.push(Complex64::new(vals[3], vals[4]));
        }
        let grid = FrequencyGrid::from_samples(&omegas)?;
        Self::new(grid, a, b)
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Fixed 17-significant-digit formatting used for every numeric data file.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Scattering data at one complex spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostPoint {
    pub lambda: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub a_prime: Option<Complex64>,
    /// Natural log of the factor removed by renormalization; the returned
    /// values already include it.
    pub log_scale: f64,
    /// False when the renormalized result could not be represented.
    pub reliable: bool,
}

impl JostPoint {
    /// `Q_d = b/a'`, meaningful only at an eigenvalue.
    pub fn discrete_amplitude(&self) -> Option<Complex64> {
        self.a_prime.map(|d| self.b / d)
    }
}

/// Raw propagation result.
///
/// The physical end state is `a = exp(phi + jλt_m)·y[0]`,
/// `b = exp(phi - jλt_m)·y[1]` where `t_m` is the midpoint of the last step;
/// `g` carries `∂/∂λ` of the state with the same common factor.
#[derive(Debug, Clone, Copy)]
struct Propagated {
    y: [Complex64; 2],
    g: [Complex64; 2],
    phi: Complex64,
    t_last_mid: f64,
}

/// `cosh(√z)` and `sinh(√z)/√z`.
#[inline(always)]
fn step_cs(z: Complex64) -> (Complex64, Complex64) {
    if z.norm_sqr() < 1e-4 {
        let c = ONE + z * (0.5 + z * (1.0 / 24.0 + z * (1.0 / 720.0 + z / 40320.0)));
        let s = ONE + z * (1.0 / 6.0 + z * (1.0 / 120.0 + z * (1.0 / 5040.0 + z / 362880.0)));
        (c, s)
    } else {
        let r = z.sqrt();
        (r.cosh(), r.sinh() / r)
    }
}

/// [`step_cs`] plus `d/dz (sinh(√z)/√z)`.
#[inline(always)]
fn step_functions(z: Complex64) -> (Complex64, Complex64, Complex64) {
    let (c, s) = step_cs(z);
    let ds = if z.norm_sqr() < 1e-4 {
        Complex64::new(1.0 / 6.0, 0.0)
            + z * (1.0 / 60.0 + z * (1.0 / 1680.0 + z * (1.0 / 90720.0 + z * 5.0 / 39916800.0)))
    } else {
        (c - s) / (2.0 * z)
    };
    (c, s, ds)
}

/// Sub-steps per sampling interval that keep the leading phase error of the
/// scheme, `(2/3)·|ω - carrier|·h²·∫|q|²`, below [`SUBSTEP_PHASE_TOL`] up to
/// `omega_max`.
pub fn auto_substeps(signal: &Signal, omega_max: f64) -> usize {
    let detuning = omega_max.abs() + signal.carrier().abs();
    let bound = (2.0 / 3.0) * signal.energy() * detuning.max(1.0) / SUBSTEP_PHASE_TOL;
    let r = (signal.dt() * bound.sqrt()).ceil();
    if r.is_finite() {
        (r as usize).clamp(1, MAX_AUTO_SUBSTEPS)
    } else {
        1
    }
}

/// Per-signal handle shared by all spectral parameters.
///
/// Immutable from the outside and `Sync`: disjoint frequency subsets can be
/// evaluated concurrently from one instance.
pub struct Scatterer<'a> {
    signal: &'a Signal,
    substeps: Option<usize>,
    oversample: usize,
    /// All samples vanish: the transfer matrix is exactly the identity.
    zero: bool,
    /// Band-limited refinements of the samples, by factor.
    refined: Mutex<Vec<(usize, Arc<[Complex64]>)>>,
}

impl<'a> Scatterer<'a> {
    /// Sub-steps are chosen per call with [`auto_substeps`] (per grid for
    /// [`Scatterer::grid`], so a spectrum uses one consistent discretization).
    pub fn new(signal: &'a Signal) -> Self {
        Self::oversampled(signal, 1)
    }

    /// Like [`Scatterer::new`] with `oversample` times as many sub-steps.
    pub fn oversampled(signal: &'a Signal, oversample: usize) -> Self {
        Self {
            signal,
            substeps: None,
            oversample: oversample.max(1),
            zero: signal.is_zero(),
            refined: Mutex::new(Vec::new()),
        }
    }

    /// Splits every sampling interval into `substeps` trapezoidal steps over
    /// the band-limited interpolation of the pulse (`1` is the plain
    /// sample-to-sample scheme).
    pub fn with_substeps(signal: &'a Signal, substeps: usize) -> Self {
        Self {
            signal,
            substeps: Some(substeps.max(1)),
            oversample: 1,
            zero: signal.is_zero(),
            refined: Mutex::new(Vec::new()),
        }
    }

    pub fn signal(&self) -> &Signal {
        self.signal
    }

    fn substeps_for(&self, omega_ref: f64) -> usize {
        self.substeps.unwrap_or_else(|| self.oversample * auto_substeps(self.signal, omega_ref))
    }

    /// Samples on the grid `r` times finer, `r·(n-1) + 1` of them.
    fn samples_at(&self, r: usize) -> Arc<[Complex64]> {
        let q = self.signal.samples();
        if r == 1 {
            return q.into();
        }
        let mut cache = self.refined.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((_, v)) = cache.iter().find(|(f, _)| *f == r) {
            return v.clone();
        }
        let fine = self.signal.resample(r).expect("factor is positive");
        let v: Arc<[Complex64]> = fine.samples()[..r * (q.len() - 1) + 1].into();
        cache.push((r, v.clone()));
        v
    }

    /// Runs the trapezoidal transfer-matrix scheme.
    ///
    /// The step matrix over `[t_i, t_{i+1}]` is `D·P̃·D⁻¹` with
    /// `D = diag(e^{jλt_m}, e^{-jλt_m})` at the step midpoint, where `P̃` only
    /// involves `q_i·e^{-jλh}` and `q_{i+1}·e^{jλh}`. Propagating in the frame of
    /// `D` leaves `E = diag(e^{-jλh}, e^{jλh})` between consecutive steps and
    /// keeps every matrix entry bounded; the growth lands in the state, which
    /// is renormalized into `phi`.
    fn propagate<const DERIV: bool>(&self, lambda: Complex64, r: usize) -> Propagated {
        let q = self.samples_at(r);
        let n = q.len();
        let h = self.signal.dt() / r as f64;
        let t0_mid = self.signal.time(0) + 0.5 * h;
        let j = Complex64::new(0.0, 1.0);

        let mut y = [ONE, ZERO];
        let mut g = [-j * t0_mid, ZERO];
        let mut phi = -j * lambda * t0_mid;
        if n < 2 {
            return Propagated { y, g: [ZERO, ZERO], phi: ZERO, t_last_mid: self.signal.time(0) };
        }

        // real λ keeps every step unitary: no renormalization needed
        let renorm = lambda.im != 0.0;
        let e_minus = (-j * lambda * h).exp();
        let e_plus = (j * lambda * h).exp();
        let jh = j * h;

        for i in 0..n - 1 {
            let (qa, qb) = (q[i], q[i + 1]);
            if i > 0 {
                // frame change between consecutive step midpoints
                if DERIV {
                    g = [e_minus * (g[0] - jh * y[0]), e_plus * (g[1] + jh * y[1])];
                }
                y = [e_minus * y[0], e_plus * y[1]];
            }

            if qa != ZERO || qb != ZERO {
                let u = 0.5 * (qa * e_minus + qb * e_plus);
                let l = -0.5 * (qa.conj() * e_plus + qb.conj() * e_minus);
                let z = h * h * u * l;
                if DERIV {
                    let (c, s_over, ds_over) = step_functions(z);
                    let s = h * s_over;
                    let du = 0.5 * jh * (qb * e_plus - qa * e_minus);
                    let dl = -0.5 * jh * (qa.conj() * e_plus - qb.conj() * e_minus);
                    let dz = h * h * (du * l + u * dl);
                    let dc = 0.5 * s_over * dz;
                    let ds = h * ds_over * dz;
                    let g0 = dc * y[0] + (ds * u + s * du) * y[1] + c * g[0] + s * u * g[1];
                    let g1 = (ds * l + s * dl) * y[0] + dc * y[1] + s * l * g[0] + c * g[1];
                    g = [g0, g1];
                    y = [c * y[0] + s * u * y[1], s * l * y[0] + c * y[1]];
                } else {
                    let (c, s_over) = step_cs(z);
                    let (su, sl) = (h * s_over * u, h * s_over * l);
                    y = [c * y[0] + su * y[1], sl * y[0] + c * y[1]];
                }
            }
            if renorm {
                let norm2 = y[0].norm_sqr().max(y[1].norm_sqr());
                if norm2 > RENORM_THRESHOLD * RENORM_THRESHOLD
                    || (norm2 < 1.0 / (RENORM_THRESHOLD * RENORM_THRESHOLD) && norm2 > 0.0)
                {
                    let norm = norm2.sqrt();
                    let inv = 1.0 / norm;
                    y = [y[0] * inv, y[1] * inv];
                    g = [g[0] * inv, g[1] * inv];
                    phi += norm.ln();
                }
            }
        }
        Propagated { y, g, phi, t_last_mid: self.signal.t_end() - 0.5 * h }
    }

    fn real_with(&self, omega: f64, r: usize) -> (Complex64, Complex64) {
        if self.zero {
            return (ONE, ZERO);
        }
        let lambda = Complex64::new(omega, 0.0);
        let p = self.propagate::<false>(lambda, r);
        let shift = Complex64::new(0.0, 1.0) * lambda * p.t_last_mid;
        ((p.phi + shift).exp() * p.y[0], (p.phi - shift).exp() * p.y[1])
    }

    /// `(a, b)` at a real frequency.
    pub fn at_real(&self, omega: f64) -> (Complex64, Complex64) {
        self.real_with(omega, self.substeps_for(omega))
    }

    pub fn at(&self, lambda: Complex64, with_derivative: bool) -> Result<JostPoint> {
        if lambda.im < 0.0 || !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(Error::LowerHalfPlane(lambda));
        }
        if self.zero {
            let a_prime = with_derivative.then_some(ZERO);
            return Ok(JostPoint { lambda, a: ONE, b: ZERO, a_prime, log_scale: 0.0, reliable: true });
        }
        let r = self.substeps_for(lambda.norm());
        let p = if with_derivative {
            self.propagate::<true>(lambda, r)
        } else {
            self.propagate::<false>(lambda, r)
        };
        let j = Complex64::new(0.0, 1.0);
        let shift = j * lambda * p.t_last_mid;
        let fa = (p.phi + shift).exp();
        let a = fa * p.y[0];
        let b = (p.phi - shift).exp() * p.y[1];
        let a_prime = with_derivative.then(|| fa * (j * p.t_last_mid * p.y[0] + p.g[0]));
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        let reliable = finite(a) && a_prime.is_none_or(finite);
        if !reliable {
            log::debug!("scattering at {lambda} overflowed (log scale {:.1})", p.phi.re);
        }
        Ok(JostPoint { lambda, a, b, a_prime, log_scale: p.phi.re, reliable })
    }

    pub fn grid(&self, grid: &FrequencyGrid) -> ContinuousSpectrum {
        let r = self.substeps_for(grid.omega_min.abs().max(grid.omega_max.abs()));
        let (a, b): (Vec<_>, Vec<_>) =
            (0..grid.n_points).into_par_iter().map(|i| self.real_with(grid.omega(i), r)).unzip();
        ContinuousSpectrum { grid: *grid, a, b }
    }
}

/// Continuous spectrum of `s` on `grid`.
pub fn scatter_grid(s: &Signal, grid: &FrequencyGrid) -> ContinuousSpectrum {
    Scatterer::new(s).grid(grid)
}

/// Jost coefficients at one point of the closed upper half plane.
///
/// The dynamic range of the integration grows like `exp(2·Im λ·duration)`;
/// see [`JostPoint::reliable`].
pub fn scatter_at(s: &Signal, lambda: Complex64) -> Result<JostPoint> {
    Scatterer::new(s).at(lambda, false)
}

/// Like [`scatter_at`], also integrating the variational system for `∂a/∂λ`.
pub fn scatter_with_derivative(s: &Signal, lambda: Complex64) -> Result<JostPoint> {
    Scatterer::new(s).at(lambda, true)
}

/// `da/dλ`, from the variational system of the same discrete propagator.
pub fn a_derivative_at(s: &Signal, lambda: Complex64) -> Result<Complex64> {
    let p = scatter_with_derivative(s, lambda)?;
    Ok(p.a_prime.expect("derivative requested"))
}
