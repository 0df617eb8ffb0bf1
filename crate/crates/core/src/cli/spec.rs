//! Experiment description shared by all subcommands (`--spec file.json`).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::baselines::{CollocationConfig, Method, NewtonConfig, DEFAULT_OVERSAMPLE};
use crate::eigenfit::{Eigenvalue, FitConfig};
use crate::scattering::FrequencyGrid;
use crate::signals::{add_awgn, gen_rect, gen_sech, Signal, TimeGrid, DEFAULT_SAMPLES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseSpec {
    Sech {
        amplitude: f64,
        #[serde(default)]
        freq_shift: f64,
        #[serde(default)]
        t_center: f64,
    },
    Rect {
        amplitude: f64,
        #[serde(default)]
        amplitude_im: f64,
        t_on: f64,
        t_off: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub half_width: f64,
    pub samples: usize,
}

impl Default for TimeGridSpec {
    fn default() -> Self {
        Self { half_width: 20.0, samples: DEFAULT_SAMPLES }
    }
}

impl TimeGridSpec {
    pub fn grid(&self) -> crate::Result<TimeGrid> {
        TimeGrid::symmetric(self.half_width, self.samples)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub time: Option<TimeGridSpec>,
    /// Frequency grid; derived from each signal when absent.
    #[serde(default)]
    pub frequency: Option<FrequencyGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub pulse: Option<PulseSpec>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub grids: GridSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub collocation: CollocationConfig,
    /// Newton lattice; derived from each signal when absent.
    #[serde(default)]
    pub newton: Option<NewtonConfig>,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_oversample() -> usize {
    DEFAULT_OVERSAMPLE
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            pulse: None,
            noise: None,
            methods: all_methods(),
            grids: GridSpec::default(),
            output_dir: default_output_dir(),
            fit: FitConfig::default(),
            collocation: CollocationConfig::default(),
            newton: None,
            oversample: DEFAULT_OVERSAMPLE,
        }
    }
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading spec {}", path.display()))?;
        let spec: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing spec {}", path.display()))?;
        spec.validate().with_context(|| format!("invalid spec {}", path.display()))?;
        Ok(spec)
    }

    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.methods.is_empty() {
            bail!("field `methods`: at least one method is required");
        }
        if let Some(p) = &self.pulse {
            validate_pulse(p)?;
        }
        if let Some(n) = &self.noise {
            if !n.snr_db.is_finite() {
                bail!("field `noise.snr_db`: must be finite, got {}", n.snr_db);
            }
            if n.seeds.is_empty() {
                bail!("field `noise.seeds`: at least one seed is required");
            }
        }
        if let Some(t) = &self.grids.time {
            t.grid().map_err(|e| anyhow::anyhow!("field `grids.time`: {e}"))?;
        }
        if let Some(f) = &self.grids.frequency {
            FrequencyGrid::new(f.omega_min, f.omega_max, f.n_points)
                .map_err(|e| anyhow::anyhow!("field `grids.frequency`: {e}"))?;
        }
        self.fit.validate().map_err(|e| anyhow::anyhow!("field `fit`: {e}"))?;
        self.collocation.validate().map_err(|e| anyhow::anyhow!("field `collocation`: {e}"))?;
        if let Some(n) = &self.newton {
            n.validate().map_err(|e| anyhow::anyhow!("field `newton`: {e}"))?;
        }
        if self.oversample == 0 {
            bail!("field `oversample`: must be at least 1");
        }
        Ok(())
    }

    pub fn time_grid(&self) -> anyhow::Result<TimeGrid> {
        Ok(self.grids.time.unwrap_or_default().grid()?)
    }

    /// Named pulses of the batch: one clean pulse, or one noisy copy per seed.
    pub fn batch(&self) -> anyhow::Result<Vec<(String, Signal)>> {
        let Some(pulse) = &self.pulse else {
            return Ok(Vec::new());
        };
        let clean = build_pulse(pulse, self.time_grid()?)?;
        match &self.noise {
            None => Ok(vec![("pulse".to_string(), clean)]),
            Some(n) => n
                .seeds
                .iter()
                .map(|&seed| {
                    let s = add_awgn(&clean, n.snr_db, seed).with_context(|| format!("adding noise (seed {seed})"))?;
                    Ok((format!("pulse_seed{seed}"), s))
                })
                .collect(),
        }
    }
}

fn validate_pulse(p: &PulseSpec) -> anyhow::Result<()> {
    match *p {
        PulseSpec::Sech { amplitude, freq_shift, t_center } => {
            if !(amplitude >= 0.0) || !amplitude.is_finite() {
                bail!("field `pulse.amplitude`: must be finite and non-negative, got {amplitude}");
            }
            if !freq_shift.is_finite() {
                bail!("field `pulse.freq_shift`: must be finite");
            }
            if !t_center.is_finite() {
                bail!("field `pulse.t_center`: must be finite");
            }
        }
        PulseSpec::Rect { amplitude, amplitude_im, t_on, t_off } => {
            if !amplitude.is_finite() || !amplitude_im.is_finite() {
                bail!("field `pulse.amplitude`: must be finite");
            }
            if !t_on.is_finite() || !t_off.is_finite() || t_on >= t_off {
                bail!("field `pulse.t_on`: t_on ({t_on}) must be less than t_off ({t_off})");
            }
        }
        PulseSpec::File { ref path } => {
            if !path.is_file() {
                bail!("field `pulse.path`: {} is not a readable file", path.display());
            }
        }
    }
    Ok(())
}

pub fn build_pulse(p: &PulseSpec, grid: TimeGrid) -> anyhow::Result<Signal> {
    validate_pulse(p)?;
    Ok(match *p {
        PulseSpec::Sech { amplitude, freq_shift, t_center } => gen_sech(amplitude, freq_shift, t_center, grid)?,
        PulseSpec::Rect { amplitude, amplitude_im, t_on, t_off } => {
            gen_rect(Complex64::new(amplitude, amplitude_im), t_on, t_off, grid)?
        }
        PulseSpec::File { ref path } => {
            Signal::read_json(path).with_context(|| format!("reading signal {}", path.display()))?
        }
    })
}

/// Parses `lo..hi` (inclusive) or a comma-separated list.
pub fn parse_seeds(text: &str) -> anyhow::Result<Vec<u64>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().with_context(|| format!("bad seed range start {lo:?}"))?;
        let hi: u64 = hi.trim().trim_start_matches('=').parse().with_context(|| format!("bad seed range end {hi:?}"))?;
        if hi < lo {
            bail!("empty seed range {text:?}");
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?}")))
        .collect()
}

/// Parses `omega:sigma` pairs separated by commas, e.g. `0:1.7,0:0.7`.
pub fn parse_eigenvalues(text: &str) -> anyhow::Result<Vec<Eigenvalue>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (w, s) = pair
                .split_once(':')
                .with_context(|| format!("eigenvalue {pair:?} is not of the form omega:sigma"))?;
            let w: f64 = w.trim().parse().with_context(|| format!("bad omega in {pair:?}"))?;
            let s: f64 = s.trim().parse().with_context(|| format!("bad sigma in {pair:?}"))?;
            Ok(Eigenvalue::new(w, s)?)
        })
        .collect()
}
