//! Test pulses, physical-unit normalization and the signal file format.
//!
//! All pulses live in dimensionless soliton units. The scattering problem is
//! written with off-diagonal phases `exp(+2j·lambda·t)`, and under that
//! convention:
//!
//! * `A·sech(t)` has eigenvalues `j(A + 1/2 - k)` for `k = 1..floor(A + 1/2)`,
//! * multiplying a pulse by `exp(-2j·xi·t)` moves its whole spectrum by `+xi`
//!   along the real axis, i.e. `a(lambda) -> a(lambda - xi)`.
//!
//! Both facts are checked numerically against the scattering solver in the
//! test suite.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge amplitude (relative to the peak) above which a pulse is considered
/// truncated by its time window.
pub const EDGE_THRESHOLD: f64 = 1e-8;

/// Default number of time samples.
pub const DEFAULT_SAMPLES: usize = 2048;

/// Uniform time grid `t_i = t_start + i·dt`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("time grid needs at least one sample".into()));
        }
        if !(dt > 0.0) || !dt.is_finite() || !t_start.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "time grid needs finite t_start and dt > 0 (t_start={t_start}, dt={dt})"
            )));
        }
        Ok(Self { t_start, dt, n })
    }

    /// `n` samples spanning `[-half_width, half_width]` inclusive.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        if n < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "symmetric grid needs n >= 2 and half_width > 0 (n={n}, half_width={half_width})"
            )));
        }
        Self::new(-half_width, 2.0 * half_width / (n - 1) as f64, n)
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.time(i))
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::symmetric(20.0, DEFAULT_SAMPLES).expect("valid default grid")
    }
}

/// Uniformly sampled complex envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Complex64>,
    t_start: f64,
    dt: f64,
}

impl Signal {
    pub fn new(samples: Vec<Complex64>, t_start: f64, dt: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("no samples".into()));
        }
        TimeGrid::new(t_start, dt, samples.len())?;
        if let Some(index) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { samples, t_start, dt })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); grid.n],
            t_start: grid.t_start,
            dt: grid.dt,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid { t_start: self.t_start, dt: self.dt, n: self.samples.len() }
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// `sum |q_i|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Largest end-sample magnitude relative to the peak (0 for a zero signal).
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.peak();
        if peak == 0.0 {
            return 0.0;
        }
        let first = self.samples[0].norm();
        let last = self.samples[self.samples.len() - 1].norm();
        first.max(last) / peak
    }

    pub fn check_edges(&self, threshold: f64) -> Result<()> {
        let edge_ratio = self.edge_ratio();
        if edge_ratio > threshold {
            Err(Error::Truncated { edge_ratio, threshold })
        } else {
            Ok(())
        }
    }

    pub fn same_grid(&self, other: &Signal) -> bool {
        let tol = 1e-12 * self.dt;
        self.samples.len() == other.samples.len()
            && (self.dt - other.dt).abs() <= tol
            && (self.t_start - other.t_start).abs() <= tol.max(1e-12 * self.t_start.abs())
    }

    /// Energy-weighted mean carrier in spectral-parameter units: `s` for a
    /// pulse modulated by `exp(-2j·s·t)`.
    pub fn carrier(&self) -> f64 {
        let c: Complex64 = self.samples.windows(2).map(|w| w[0].conj() * w[1]).sum();
        if c.norm() == 0.0 {
            return 0.0;
        }
        -c.arg() / (2.0 * self.dt)
    }

    /// Multiplies the signal by `exp(-2j·shift·t)`, moving its nonlinear
    /// spectrum by `+shift`.
    pub fn frequency_shifted(&self, shift: f64) -> Signal {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &q)| q * Complex64::from_polar(1.0, -2.0 * shift * self.time(i)))
            .collect();
        Signal { samples, t_start: self.t_start, dt: self.dt }
    }

    /// Band-limited (periodic sinc) interpolation onto a grid `factor` times
    /// finer. The output keeps `t_start` and has `factor·n` samples.
    pub fn resample(&self, factor: usize) -> Result<Signal> {
        if factor == 0 {
            return Err(Error::InvalidConfig("oversampling factor must be >= 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let n = self.samples.len();
        let m = n * factor;
        let mut planner = FftPlanner::<f64>::new();
        let mut spectrum = self.samples.clone();
        planner.plan_fft_forward(n).process(&mut spectrum);

        let mut padded = vec![Complex64::new(0.0, 0.0); m];
        let half = n / 2;
        if n % 2 == 0 {
            padded[..half].copy_from_slice(&spectrum[..half]);
            padded[m - half + 1..].copy_from_slice(&spectrum[half + 1..]);
            // split the Nyquist bin between both ends
            padded[half] = spectrum[half] * 0.5;
            padded[m - half] = spectrum[half] * 0.5;
        } else {
            padded[..=half].copy_from_slice(&spectrum[..=half]);
            padded[m - half..].copy_from_slice(&spectrum[half + 1..]);
        }
        planner.plan_fft_inverse(m).process(&mut padded);
        let scale = 1.0 / n as f64;
        let samples = padded.into_iter().map(|z| z * scale).collect();
        Signal::new(samples, self.t_start, self.dt / factor as f64)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&SignalFile::from(self))?)
    }

    pub fn from_json_str(text: &str) -> Result<Signal> {
        let file: SignalFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Signal> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

/// On-disk form: `{"t_start": f, "dt": f, "samples": [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalFile {
    pub t_start: f64,
    pub dt: f64,
    pub samples: Vec<[f64; 2]>,
}

impl From<&Signal> for SignalFile {
    fn from(s: &Signal) -> Self {
        Self {
            t_start: s.t_start,
            dt: s.dt,
            samples: s.samples.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<SignalFile> for Signal {
    type Error = Error;

    fn try_from(f: SignalFile) -> Result<Signal> {
        let samples = f.samples.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
        Signal::new(samples, f.t_start, f.dt)
    }
}

fn warn_if_truncated(s: &Signal, what: &str) {
    if let Err(e) = s.check_edges(EDGE_THRESHOLD) {
        log::warn!("{what}: {e}; widen the time window");
    }
}

/// `amplitude·sech(t - t_center)·exp(-2j·freq_shift·(t - t_center))`.
///
/// For `freq_shift = 0` the eigenvalues are `j(amplitude + 1/2 - k)`; a
/// nonzero shift moves them to `freq_shift + j(...)`. A window that cuts the
/// pulse above [`EDGE_THRESHOLD`] only logs a warning.
pub fn gen_sech(amplitude: f64, freq_shift: f64, t_center: f64, grid: TimeGrid) -> Result<Signal> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidSignal(format!("sech amplitude must be >= 0, got {amplitude}")));
    }
    if !freq_shift.is_finite() || !t_center.is_finite() {
        return Err(Error::InvalidSignal("non-finite sech parameters".into()));
    }
    let samples = grid
        .times()
        .map(|t| {
            let tau = t - t_center;
            let envelope = amplitude / tau.cosh();
            Complex64::from_polar(envelope, -2.0 * freq_shift * tau)
        })
        .collect();
    let s = Signal::new(samples, grid.t_start, grid.dt)?;
    warn_if_truncated(&s, "gen_sech");
    Ok(s)
}

/// Rectangular pulse of constant complex `amplitude` on `[t_on, t_off)`.
///
/// A sample falling exactly on a jump takes half the amplitude, which keeps
/// the trapezoidal integrator second order across the discontinuity.
pub fn gen_rect(amplitude: Complex64, t_on: f64, t_off: f64, grid: TimeGrid) -> Result<Signal> {
    if !(t_on < t_off) {
        return Err(Error::InvalidInterval { t_on, t_off });
    }
    if grid.t_start > t_on || grid.t_end() < t_off {
        log::warn!(
            "gen_rect: grid [{}, {}] does not cover [{t_on}, {t_off}]",
            grid.t_start,
            grid.t_end()
        );
    }
    let snap = 1e-9 * grid.dt;
    let samples = grid
        .times()
        .map(|t| {
            if (t - t_on).abs() <= snap || (t - t_off).abs() <= snap {
                amplitude * 0.5
            } else if t > t_on && t < t_off {
                amplitude
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Signal::new(samples, grid.t_start, grid.dt)
}

/// Pointwise sum of pulses on one grid.
///
/// Nonlinear spectra do not add: the sum only approximately carries the union
/// of the individual eigenvalues, and the approximation improves as the pulses
/// are separated in time and frequency.
pub fn superpose(pulses: &[Signal]) -> Result<Signal> {
    let (first, rest) = pulses
        .split_first()
        .ok_or_else(|| Error::InvalidSignal("superpose needs at least one pulse".into()))?;
    let mut out = first.clone();
    for (k, p) in rest.iter().enumerate() {
        if !first.same_grid(p) {
            return Err(Error::GridMismatch(format!("pulse {} is on a different grid", k + 1)));
        }
        for (acc, &q) in out.samples.iter_mut().zip(&p.samples) {
            *acc += q;
        }
    }
    Ok(out)
}

/// Adds circular complex white Gaussian noise at the given SNR (signal energy
/// over noise energy, in dB). `snr_db = +inf` returns the signal unchanged.
pub fn add_awgn(s: &Signal, snr_db: f64, rng_seed: u64) -> Result<Signal> {
    if snr_db == f64::INFINITY {
        return Ok(s.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidConfig(format!("invalid SNR {snr_db} dB")));
    }
    let energy = s.energy();
    if energy == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let noise_energy = energy / 10f64.powf(snr_db / 10.0);
    let per_sample_var = noise_energy / (s.len() as f64 * s.dt);
    let component_std = (per_sample_var / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let samples = s
        .samples
        .iter()
        .map(|&q| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            q + Complex64::new(re, im) * component_std
        })
        .collect();
    Signal::new(samples, s.t_start, s.dt)
}

/// Fiber parameters used to map a physical field onto soliton units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    /// Group-velocity dispersion in s²/m; negative (anomalous).
    pub beta2: f64,
    /// Nonlinear coefficient in 1/(W·m).
    pub gamma: f64,
    /// Normalization time in s.
    pub t0: f64,
}

/// Factors relating physical and normalized quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    /// `q = field · field_scale`.
    pub field_scale: f64,
    /// `t_normalized = t / time_scale`.
    pub time_scale: f64,
}

impl PhysicalUnits {
    pub fn new(beta2: f64, gamma: f64, t0: f64) -> Result<Self> {
        let u = Self { beta2, gamma, t0 };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta2.is_finite() && self.gamma.is_finite() && self.t0.is_finite()) {
            return Err(Error::InvalidUnits("parameters must be finite".into()));
        }
        if !(self.beta2 < 0.0) {
            return Err(Error::InvalidUnits(format!(
                "beta2 must be negative (anomalous dispersion), got {}",
                self.beta2
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidUnits(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.t0 > 0.0) {
            return Err(Error::InvalidUnits(format!("T0 must be positive, got {}", self.t0)));
        }
        Ok(())
    }

    pub fn scales(&self) -> Scales {
        Scales {
            field_scale: self.t0 * (self.gamma / self.beta2.abs()).sqrt(),
            time_scale: self.t0,
        }
    }

    /// Peak power of the fundamental soliton `sech(t/T0)`.
    pub fn soliton_power(&self) -> f64 {
        self.beta2.abs() / (self.gamma * self.t0 * self.t0)
    }
}

/// Maps a field sampled in W^(1/2) with spacing `dt_seconds` (first sample at
/// `t_start_seconds`) onto soliton units.
pub fn normalize_physical(
    field: &[Complex64],
    t_start_seconds: f64,
    dt_seconds: f64,
    units: &PhysicalUnits,
) -> Result<(Signal, Scales)> {
    units.validate()?;
    let scales = units.scales();
    let samples = field.iter().map(|&e| e * scales.field_scale).collect();
    let s = Signal::new(
        samples,
        t_start_seconds / scales.time_scale,
        dt_seconds / scales.time_scale,
    )?;
    Ok((s, scales))
}

/// Physical field, start time and step of a normalized signal.
pub fn denormalize(s: &Signal, units: &PhysicalUnits) -> Result<(Vec<Complex64>, f64, f64)> {
    units.validate()?;
    let scales = units.scales();
    let field = s.samples.iter().map(|&q| q / scales.field_scale).collect();
    Ok((field, s.t_start * scales.time_scale, s.dt * scales.time_scale))
}

/// Which quantity a quoted full width at half maximum refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FwhmConvention {
    /// Half maximum of the optical power `|q|^2`.
    Power,
    /// Half maximum of the field magnitude `|q|`.
    Field,
}

/// Imaginary part of the eigenvalue of a fundamental soliton
/// `2σ·sech(2σ·t)` whose FWHM (in seconds) is `fwhm`, normalized by `t0`.
pub fn soliton_sigma_from_fwhm(fwhm: f64, t0: f64, convention: FwhmConvention) -> f64 {
    // sech(x) = 1/sqrt(2) at x = acosh(sqrt 2); sech(x) = 1/2 at x = acosh(2)
    let half_width = match convention {
        FwhmConvention::Power => std::f64::consts::SQRT_2.acosh(),
        FwhmConvention::Field => 2f64.acosh(),
    };
    // full width 2·half_width/(2σ) in normalized time
    half_width / (fwhm / t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_amplitude_sech_is_zero() {
        let s = gen_sech(0.0, 0.0, 0.0, TimeGrid::default()).unwrap();
        assert!(s.is_zero());
        assert_eq!(s.len(), DEFAULT_SAMPLES);
    }

    #[test]
    fn sech_energy_is_twice_amplitude_squared() {
        for &(a, shift) in &[(0.25, 0.0), (1.0, 3.0), (2.2, -1.5)] {
            let s = gen_sech(a, shift, 0.0, TimeGrid::default()).unwrap();
            assert_relative_eq!(s.energy(), 2.0 * a * a, max_relative = 1e-6);
        }
    }

    #[test]
    fn sech_edges_below_threshold_on_default_grid() {
        let s = gen_sech(2.2, 0.0, 0.0, TimeGrid::default()).unwrap();
        assert!(s.check_edges(EDGE_THRESHOLD).is_ok());
        let short = gen_sech(2.2, 0.0, 0.0, TimeGrid::symmetric(5.0, 256).unwrap()).unwrap();
        assert!(matches!(short.check_edges(EDGE_THRESHOLD), Err(Error::Truncated { .. })));
    }

    #[test]
    fn rect_rejects_empty_interval() {
        let err = gen_rect(Complex64::new(1.0, 0.0), 1.0, 1.0, TimeGrid::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidInterval { .. }));
    }

    #[test]
    fn rect_samples_and_half_values_at_jumps() {
        let grid = TimeGrid::new(-4.0, 0.5, 17).unwrap();
        let s = gen_rect(Complex64::new(2.0, 0.0), -1.0, 1.0, grid).unwrap();
        let v: Vec<f64> = s.samples().iter().map(|z| z.re).collect();
        assert_eq!(v[5], 0.0);
        assert_eq!(v[6], 1.0);
        assert_eq!(v[7], 2.0);
        assert_eq!(v[9], 2.0);
        assert_eq!(v[10], 1.0);
        assert_eq!(v[11], 0.0);
    }

    #[test]
    fn superpose_identity_and_mismatch() {
        let g = TimeGrid::default();
        let s = gen_sech(1.0, 2.0, 1.0, g).unwrap();
        assert_eq!(superpose(std::slice::from_ref(&s)).unwrap(), s);
        assert_eq!(superpose(&[Signal::zeros(g), s.clone()]).unwrap(), s);
        let other = Signal::zeros(TimeGrid::symmetric(10.0, 2048).unwrap());
        assert!(matches!(superpose(&[s, other]), Err(Error::GridMismatch(_))));
        assert!(superpose(&[]).is_err());
    }

    #[test]
    fn awgn_infinite_snr_and_zero_energy() {
        let s = gen_sech(1.0, 0.0, 0.0, TimeGrid::default()).unwrap();
        assert_eq!(add_awgn(&s, f64::INFINITY, 3).unwrap(), s);
        let z = Signal::zeros(TimeGrid::default());
        assert!(matches!(add_awgn(&z, 20.0, 1), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn awgn_is_deterministic() {
        let s = gen_sech(1.0, 0.0, 0.0, TimeGrid::default()).unwrap();
        let a = add_awgn(&s, 20.0, 42).unwrap();
        let b = add_awgn(&s, 20.0, 42).unwrap();
        let c = add_awgn(&s, 20.0, 43).unwrap();
        assert_eq!(a.to_json_string().unwrap(), b.to_json_string().unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn awgn_noise_energy_matches_snr() {
        // unit-energy pulse: amplitude 1/sqrt(2)
        let s = gen_sech(std::f64::consts::FRAC_1_SQRT_2, 0.0, 0.0, TimeGrid::default()).unwrap();
        assert_relative_eq!(s.energy(), 1.0, max_relative = 1e-6);
        let noisy = add_awgn(&s, 20.0, 7).unwrap();
        let noise_energy: f64 = noisy
            .samples()
            .iter()
            .zip(s.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * s.dt();
        assert!((noise_energy - 0.01).abs() <= 0.002, "noise energy {noise_energy}");
    }

    #[test]
    fn json_round_trip_and_errors() {
        let s = gen_sech(1.3, 0.5, -2.0, TimeGrid::symmetric(20.0, 64).unwrap()).unwrap();
        let back = Signal::from_json_str(&s.to_json_string().unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(Signal::from_json_str("{\"t_start\": 0").is_err());
        assert!(Signal::from_json_str(r#"{"t_start":0,"dt":0,"samples":[[1,0]]}"#).is_err());
        assert!(Signal::from_json_str(r#"{"t_start":0,"dt":1,"samples":[]}"#).is_err());
    }

    #[test]
    fn units_validation() {
        assert!(PhysicalUnits::new(-1.0, 1.0, 1.0).is_ok());
        assert!(PhysicalUnits::new(1.0, 1.0, 1.0).is_err());
        assert!(PhysicalUnits::new(-1.0, 0.0, 1.0).is_err());
        assert!(PhysicalUnits::new(-1.0, 1.0, -1.0).is_err());
        assert!(PhysicalUnits::new(-1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn normalize_zero_field() {
        let u = PhysicalUnits::new(-21.4e-27, 1.3e-3, 1e-10).unwrap();
        let (s, _) = normalize_physical(&[Complex64::new(0.0, 0.0); 8], 0.0, 1e-12, &u).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn normalize_hand_computed_scale() {
        // 0.1 ns, -21.4 ps^2/km, 1.3 /W/km, 1 mW peak
        let u = PhysicalUnits::new(-21.4e-27, 1.3e-3, 0.1e-9).unwrap();
        let field = [Complex64::new(1e-3f64.sqrt(), 0.0)];
        let (s, scales) = normalize_physical(&field, 0.0, 1e-12, &u).unwrap();
        // T0 * sqrt(gamma/|beta2|) = 1e-10 * sqrt(1.3e-3 / 2.14e-26) = 24.6470...
        let expected_scale = 1e-10 * (1.3e-3f64 / 2.14e-26).sqrt();
        assert_relative_eq!(scales.field_scale, expected_scale, max_relative = 1e-14);
        assert_relative_eq!(s.samples()[0].re, 0.779412, max_relative = 1e-5);
        assert_relative_eq!(s.dt(), 1e-2, max_relative = 1e-14);
    }

    #[test]
    fn fwhm_conventions() {
        // a power FWHM of 1.7627 T0 is the fundamental soliton sech(t), sigma = 1/2
        let fwhm = 2.0 * std::f64::consts::SQRT_2.acosh();
        let sigma = soliton_sigma_from_fwhm(fwhm, 1.0, FwhmConvention::Power);
        assert_relative_eq!(sigma, 0.5, max_relative = 1e-12);
        let field = soliton_sigma_from_fwhm(2.0 * 2f64.acosh(), 1.0, FwhmConvention::Field);
        assert_relative_eq!(field, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn resample_preserves_band_limited_signal() {
        let s = gen_sech(1.0, 0.0, 0.0, TimeGrid::symmetric(20.0, 512).unwrap()).unwrap();
        let up = s.resample(4).unwrap();
        assert_eq!(up.len(), 2048);
        for (i, z) in up.samples().iter().enumerate().take(2000) {
            let t = up.time(i);
            assert!((z.re - 1.0 / t.cosh()).abs() < 1e-9, "t={t}");
            assert!(z.im.abs() < 1e-9);
        }
    }
}
