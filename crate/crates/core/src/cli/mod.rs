//! `nft` command-line front end.
//!
//! Every subcommand accepts `--spec file.json` (an [`ExperimentSpec`]); flags
//! given on the command line override the corresponding spec fields. The
//! `NFT_THREADS` environment variable caps the worker pool.

pub mod commands;
pub mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::Method;
use crate::scattering::FrequencyGrid;
pub use commands::{cmd_compare, cmd_detect, cmd_generate, cmd_spectrum, detect, phase_profile, DetectOptions};
pub use spec::{ExperimentSpec, NoiseSpec, PulseSpec, TimeGridSpec};

#[derive(Debug, Parser)]
#[command(name = "nft", version, about = "Nonlinear Fourier spectra and soliton eigenvalue detection")]
pub struct Cli {
    /// Experiment spec (JSON); flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    pub spec: Option<PathBuf>,

    /// Directory for generated files.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate test pulses as signal JSON files.
    Generate(GenerateArgs),
    /// Compute the continuous spectrum and the all-pass phase of a signal.
    Spectrum(SpectrumArgs),
    /// Detect discrete eigenvalues of a signal.
    Detect(DetectArgs),
    /// Run detectors over a batch and write the comparison report.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PulseKind {
    Sech,
    Rect,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub pulse: Option<PulseKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Imaginary part of a rect amplitude.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude_im: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub freq_shift: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_center: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_on: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_off: Option<f64>,
    /// Time window is [-half_width, half_width].
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Add white Gaussian noise at this SNR (dB).
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Noise seeds, `lo..hi` or a comma-separated list; one file per seed.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output file for a single pulse.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct FrequencyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub omega_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
}

impl FrequencyArgs {
    fn resolve(&self, fallback: Option<FrequencyGrid>) -> anyhow::Result<Option<FrequencyGrid>> {
        match (self.omega_min, self.omega_max, self.n_points) {
            (None, None, None) => Ok(fallback),
            (Some(lo), Some(hi), Some(n)) => Ok(Some(FrequencyGrid::new(lo, hi, n)?)),
            _ => bail!("--omega-min, --omega-max and --n-points must be given together"),
        }
    }
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    pub signal: PathBuf,
    #[command(flatten)]
    pub frequency: FrequencyArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    pub signal: PathBuf,
    /// `cs-phase`, `fc`, `nr`, a comma-separated list, or `all`.
    #[arg(long)]
    pub method: Option<String>,
    /// Initial eigenvalues for cs-phase as `omega:sigma` pairs, e.g. `0:1.7,0:0.7`.
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    /// Number of eigenvalues to fit (default: from the phase asymptote).
    #[arg(long)]
    pub n_eigs: Option<usize>,
    /// Report file (default: <output-dir>/<signal>_detect.json).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub frequency: FrequencyArgs,
    /// Oversampling factor of the residual metric and the Newton search.
    #[arg(long)]
    pub oversample: Option<usize>,
    /// Fourier modes per component for collocation.
    #[arg(long)]
    pub n_modes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Signal files; when absent the spec's pulse batch is used.
    pub signals: Vec<PathBuf>,
    /// `cs-phase`, `fc`, `nr`, a comma-separated list, or `all`.
    #[arg(long)]
    pub methods: Option<String>,
    #[command(flatten)]
    pub frequency: FrequencyArgs,
    #[arg(long)]
    pub oversample: Option<usize>,
}

pub fn parse_methods(text: &str) -> anyhow::Result<Vec<Method>> {
    if text.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    let mut out = Vec::new();
    for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = Method::from_str(name, true).map_err(|_| anyhow::anyhow!("unknown method {name:?}"))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        bail!("no method given");
    }
    Ok(out)
}

/// Caps the global worker pool from `NFT_THREADS`.
fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("NFT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("NFT_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    Ok(())
}

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Done,
    /// Outputs were written but some pulses failed.
    Partial(Vec<String>),
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    let mut spec = match &cli.spec {
        Some(p) => ExperimentSpec::from_file(p)?,
        None => ExperimentSpec::default(),
    };
    if let Some(dir) = cli.output_dir {
        spec.output_dir = dir;
    }

    match cli.command {
        Command::Generate(a) => {
            apply_generate_flags(&mut spec, &a)?;
            let written = cmd_generate(&spec, a.out.as_deref())?;
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::Spectrum(a) => {
            let grid = a.frequency.resolve(spec.grids.frequency)?;
            let out = cmd_spectrum(&a.signal, grid, &spec.output_dir)?;
            println!("{}", out.spectrum_csv.display());
            println!("{}", out.phase_csv.display());
            let low = if out.count.low_confidence { " (low confidence)" } else { "" };
            eprintln!("eigenvalue count: {} (raw {:.4}){low}", out.count.n, out.count.raw);
        }
        Command::Detect(a) => {
            let methods = match &a.method {
                Some(m) => parse_methods(m)?,
                None => vec![Method::CsPhase],
            };
            let mut opts = DetectOptions::from_spec(&spec);
            opts.frequency_grid = a.frequency.resolve(spec.grids.frequency)?;
            opts.init = a.init.as_deref().map(spec::parse_eigenvalues).transpose().context("--init")?;
            opts.n_eigs = a.n_eigs;
            if let Some(o) = a.oversample {
                opts.oversample = o;
            }
            if let Some(n) = a.n_modes {
                opts.collocation.n_modes = n;
            }
            let out = a.out.clone().unwrap_or_else(|| {
                let stem = a.signal.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                spec.output_dir.join(format!("{stem}_detect.json"))
            });
            cmd_detect(&a.signal, &methods, &opts, &out)?;
            println!("{}", out.display());
        }
        Command::Compare(a) => {
            let methods = match &a.methods {
                Some(m) => parse_methods(m)?,
                None => spec.methods.clone(),
            };
            let mut opts = DetectOptions::from_spec(&spec);
            opts.frequency_grid = a.frequency.resolve(spec.grids.frequency)?;
            if let Some(o) = a.oversample {
                opts.oversample = o;
            }
            let pulses = if a.signals.is_empty() {
                spec.batch()?
            } else {
                a.signals
                    .iter()
                    .map(|p| {
                        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        Ok((name, commands::read_signal(p)?))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?
            };
            let out = cmd_compare(&pulses, &methods, &opts, &spec.output_dir)?;
            println!("{}", out.comparison_csv.display());
            println!("{}", out.summary_json.display());
            if !out.failures.is_empty() {
                let lines = out.failures.iter().map(|(p, m, e)| format!("{p} [{}]: {e}", m.name())).collect();
                return Ok(Outcome::Partial(lines));
            }
        }
    }
    Ok(Outcome::Done)
}

fn apply_generate_flags(spec: &mut ExperimentSpec, a: &GenerateArgs) -> anyhow::Result<()> {
    if let Some(kind) = a.pulse {
        let amplitude = a.amplitude.context("--amplitude is required with --pulse")?;
        spec.pulse = Some(match kind {
            PulseKind::Sech => PulseSpec::Sech {
                amplitude,
                freq_shift: a.freq_shift.unwrap_or(0.0),
                t_center: a.t_center.unwrap_or(0.0),
            },
            PulseKind::Rect => PulseSpec::Rect {
                amplitude,
                amplitude_im: a.amplitude_im.unwrap_or(0.0),
                t_on: a.t_on.context("--t-on is required for a rect pulse")?,
                t_off: a.t_off.context("--t-off is required for a rect pulse")?,
            },
        });
    }
    if a.half_width.is_some() || a.samples.is_some() {
        let base = spec.grids.time.unwrap_or_default();
        spec.grids.time = Some(TimeGridSpec {
            half_width: a.half_width.unwrap_or(base.half_width),
            samples: a.samples.unwrap_or(base.samples),
        });
    }
    if a.snr_db.is_some() || a.seeds.is_some() {
        let snr_db = a.snr_db.or(spec.noise.as_ref().map(|n| n.snr_db)).context("--seeds needs --snr-db")?;
        let seeds = match &a.seeds {
            Some(s) => spec::parse_seeds(s).context("--seeds")?,
            None => spec.noise.as_ref().map(|n| n.seeds.clone()).unwrap_or_else(|| vec![1]),
        };
        spec.noise = Some(NoiseSpec { snr_db, seeds });
    }
    Ok(())
}

/// Entry point of the `nft` binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(failures)) => {
            eprintln!("{} run(s) failed:", failures.len());
            for f in failures {
                eprintln!("  {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
