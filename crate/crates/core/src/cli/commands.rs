use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use super::spec::ExperimentSpec;
use crate::baselines::{
    fourier_collocation, matched_gap, newton_raphson, CollocationConfig, DetectionReport, Method, NewtonConfig,
};
use crate::eigenfit::{fit, init_estimates, Eigenvalue, FitConfig};
use crate::phase::{allpass_phase, count_eigenvalues, PhaseProfile};
use crate::scattering::{fmt17, ContinuousSpectrum, FrequencyGrid, Scatterer};
use crate::signals::Signal;

/// Settings for one detection run.
#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub frequency_grid: Option<FrequencyGrid>,
    pub fit: FitConfig,
    pub init: Option<Vec<Eigenvalue>>,
    pub n_eigs: Option<usize>,
    pub collocation: CollocationConfig,
    pub newton: Option<NewtonConfig>,
    pub oversample: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self::from_spec(&ExperimentSpec::default())
    }
}

impl DetectOptions {
    pub fn from_spec(spec: &ExperimentSpec) -> Self {
        Self {
            frequency_grid: spec.grids.frequency,
            fit: spec.fit,
            init: None,
            n_eigs: None,
            collocation: spec.collocation,
            newton: spec.newton,
            oversample: spec.oversample,
        }
    }
}

/// Continuous spectrum and all-pass phase of `s`.
pub fn phase_profile(s: &Signal, grid: Option<FrequencyGrid>) -> (ContinuousSpectrum, PhaseProfile) {
    let grid = grid.unwrap_or_else(|| FrequencyGrid::for_signal(s));
    let cs = Scatterer::new(s).grid(&grid);
    let profile = allpass_phase(&cs);
    (cs, profile)
}

/// Runs one detector on `s`; residuals come from the oversampled metric.
pub fn detect(method: Method, s: &Signal, opts: &DetectOptions) -> crate::Result<DetectionReport> {
    match method {
        Method::CsPhase => {
            let (_, profile) = phase_profile(s, opts.frequency_grid);
            let count = count_eigenvalues(&profile);
            let (start, source, merged, fallback) = match &opts.init {
                Some(v) => (v.clone(), "user", false, false),
                None => {
                    let init = init_estimates(&profile, opts.n_eigs.or(Some(count.n)));
                    (init.estimates, "phase-peaks", init.merged_peak, init.fallback)
                }
            };
            let state = fit(&profile, &opts.fit, Some(start.clone()))?;
            let diagnostics = serde_json::json!({
                "count": count,
                "init": start,
                "init_source": source,
                "merged_peak": merged,
                "fallback_init": fallback,
                "frequency_grid": profile.grid,
                "unreliable_points": profile.unreliable_count(),
                "clamped_points": profile.clamped,
                "stop": state.diagnostic,
            });
            DetectionReport::from_fit(s, &state, opts.oversample, diagnostics)
        }
        Method::Fc => {
            let r = fourier_collocation(s, &opts.collocation)?;
            DetectionReport::from_collocation(s, &r, opts.oversample)
        }
        Method::Nr => {
            let cfg = opts.newton.unwrap_or_else(|| NewtonConfig::for_signal(s));
            let r = newton_raphson(s, &cfg)?;
            DetectionReport::from_newton(s, &r, opts.oversample)
        }
    }
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "signal".into())
}

pub fn read_signal(path: &Path) -> anyhow::Result<Signal> {
    Signal::read_json(path).with_context(|| format!("reading signal {}", path.display()))
}

/// Writes the spec's batch as signal JSON files; returns their paths.
///
/// A single clean pulse goes to `out` when given.
pub fn cmd_generate(spec: &ExperimentSpec, out: Option<&Path>) -> anyhow::Result<Vec<PathBuf>> {
    spec.validate()?;
    let batch = spec.batch()?;
    if batch.is_empty() {
        anyhow::bail!("field `pulse`: no pulse to generate");
    }
    let single_out = out.filter(|_| batch.len() == 1);
    if single_out.is_none() {
        ensure_dir(&spec.output_dir)?;
    }
    let mut written = Vec::with_capacity(batch.len());
    for (name, s) in &batch {
        let path = match single_out {
            Some(p) => p.to_path_buf(),
            None => spec.output_dir.join(format!("{name}.json")),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        s.write_json(&path).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct SpectrumOutput {
    pub spectrum_csv: PathBuf,
    pub phase_csv: PathBuf,
    pub count: crate::phase::EigenCount,
}

/// Spectrum CSV and phase CSV for one signal file.
pub fn cmd_spectrum(signal: &Path, grid: Option<FrequencyGrid>, output_dir: &Path) -> anyhow::Result<SpectrumOutput> {
    let s = read_signal(signal)?;
    ensure_dir(output_dir)?;
    let (cs, profile) = phase_profile(&s, grid);
    let name = stem(signal);
    let spectrum_csv = output_dir.join(format!("{name}_spectrum.csv"));
    let phase_csv = output_dir.join(format!("{name}_phase.csv"));
    cs.write_csv_file(&spectrum_csv).with_context(|| format!("writing {}", spectrum_csv.display()))?;
    profile.write_csv_file(&phase_csv).with_context(|| format!("writing {}", phase_csv.display()))?;
    Ok(SpectrumOutput { spectrum_csv, phase_csv, count: count_eigenvalues(&profile) })
}

/// Detection report(s) for one signal file.
///
/// One method writes its report; several write an object keyed by method.
pub fn cmd_detect(signal: &Path, methods: &[Method], opts: &DetectOptions, out: &Path) -> anyhow::Result<()> {
    let s = read_signal(signal)?;
    let mut reports = BTreeMap::new();
    for &m in methods {
        let r = detect(m, &s, opts).with_context(|| format!("method {}", m.name()))?;
        reports.insert(m.name(), r);
    }
    let json = if reports.len() == 1 {
        serde_json::to_string_pretty(reports.values().next().expect("one report"))?
    } else {
        serde_json::to_string_pretty(&reports)?
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    fs::write(out, json + "\n").with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

pub const COMPARISON_HEADER: [&str; 8] =
    ["pulse", "method", "n_eigenvalues", "eigenvalues", "residuals", "max_residual", "iterations", "converged"];

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub comparison_csv: PathBuf,
    pub timings_csv: PathBuf,
    pub summary_json: PathBuf,
    /// `(pulse, method, error)` for every failed run.
    pub failures: Vec<(String, Method, String)>,
}

#[derive(Debug, Serialize)]
struct Distribution {
    min: f64,
    median: f64,
    max: f64,
}

impl Distribution {
    fn of(values: &mut [f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) };
        Some(Self { min: values[0], median, max: values[n - 1] })
    }
}

#[derive(Debug, Serialize)]
struct MethodSummary {
    runs: usize,
    failed: usize,
    converged: usize,
    max_residual: Option<Distribution>,
}

#[derive(Debug, Serialize)]
struct GapSummary {
    compared: usize,
    count_mismatches: usize,
    gap: Option<Distribution>,
}

#[derive(Debug, Serialize)]
struct Summary {
    pulses: usize,
    methods: BTreeMap<&'static str, MethodSummary>,
    pairwise_gaps: BTreeMap<String, GapSummary>,
    failures: Vec<String>,
}

/// Runs every method on every pulse and writes the comparison CSV, a
/// timings CSV (wall time, kept out of the data file so it stays
/// reproducible) and a summary JSON.
pub fn cmd_compare(
    pulses: &[(String, Signal)],
    methods: &[Method],
    opts: &DetectOptions,
    output_dir: &Path,
) -> anyhow::Result<CompareOutput> {
    ensure_dir(output_dir)?;
    type Run = (Method, Result<DetectionReport, String>, f64);
    let runs: Vec<Vec<Run>> = pulses
        .par_iter()
        .map(|(_, s)| {
            methods
                .iter()
                .map(|&m| {
                    let t = Instant::now();
                    let r = detect(m, s, opts).map_err(|e| e.to_string());
                    (m, r, t.elapsed().as_secs_f64())
                })
                .collect()
        })
        .collect();

    let comparison_csv = output_dir.join("comparison.csv");
    let timings_csv = output_dir.join("timings.csv");
    let summary_json = output_dir.join("summary.json");

    let mut out = csv::Writer::from_path(&comparison_csv)
        .with_context(|| format!("writing {}", comparison_csv.display()))?;
    out.write_record(COMPARISON_HEADER)?;
    let mut times = csv::Writer::from_path(&timings_csv)
        .with_context(|| format!("writing {}", timings_csv.display()))?;
    times.write_record(["pulse", "method", "wall_seconds"])?;

    let mut failures = Vec::new();
    for ((name, _), pulse_runs) in pulses.iter().zip(&runs) {
        for (m, r, secs) in pulse_runs {
            times.write_record([name.as_str(), m.name(), &format!("{secs:.6}")])?;
            match r {
                Ok(rep) => {
                    let eig = rep
                        .eigenvalues
                        .iter()
                        .map(|d| format!("{}:{}", fmt17(d.omega0), fmt17(d.sigma)))
                        .collect::<Vec<_>>()
                        .join(";");
                    let res = rep.eigenvalues.iter().map(|d| fmt17(d.residual_abs_a)).collect::<Vec<_>>().join(";");
                    out.write_record([
                        name.as_str(),
                        m.name(),
                        &rep.eigenvalues.len().to_string(),
                        &eig,
                        &res,
                        &fmt17(rep.max_residual()),
                        &rep.iterations.to_string(),
                        &rep.converged.to_string(),
                    ])?;
                }
                Err(e) => failures.push((name.clone(), *m, e.clone())),
            }
        }
    }
    out.flush()?;
    times.flush()?;

    let summary = summarize(pulses, methods, &runs, &failures);
    fs::write(&summary_json, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", summary_json.display()))?;
    Ok(CompareOutput { comparison_csv, timings_csv, summary_json, failures })
}

fn summarize(
    pulses: &[(String, Signal)],
    methods: &[Method],
    runs: &[Vec<(Method, Result<DetectionReport, String>, f64)>],
    failures: &[(String, Method, String)],
) -> Summary {
    let report = |p: usize, m: Method| runs[p].iter().find(|r| r.0 == m).and_then(|r| r.1.as_ref().ok());
    let mut per_method = BTreeMap::new();
    for &m in methods {
        let ok: Vec<&DetectionReport> = (0..pulses.len()).filter_map(|p| report(p, m)).collect();
        let mut res: Vec<f64> = ok.iter().filter(|r| !r.eigenvalues.is_empty()).map(|r| r.max_residual()).collect();
        per_method.insert(
            m.name(),
            MethodSummary {
                runs: pulses.len(),
                failed: pulses.len() - ok.len(),
                converged: ok.iter().filter(|r| r.converged).count(),
                max_residual: Distribution::of(&mut res),
            },
        );
    }
    let mut gaps = BTreeMap::new();
    for (i, &a) in methods.iter().enumerate() {
        for &b in &methods[i + 1..] {
            let (mut compared, mut mismatches, mut values) = (0, 0, Vec::new());
            for p in 0..pulses.len() {
                if let (Some(ra), Some(rb)) = (report(p, a), report(p, b)) {
                    compared += 1;
                    if ra.eigenvalues.len() != rb.eigenvalues.len() {
                        mismatches += 1;
                    }
                    if let Some(g) = matched_gap(&ra.lambdas(), &rb.lambdas()) {
                        values.push(g);
                    }
                }
            }
            gaps.insert(
                format!("{}/{}", a.name(), b.name()),
                GapSummary { compared, count_mismatches: mismatches, gap: Distribution::of(&mut values) },
            );
        }
    }
    Summary {
        pulses: pulses.len(),
        methods: per_method,
        pairwise_gaps: gaps,
        failures: failures.iter().map(|(p, m, e)| format!("{p} [{}]: {e}", m.name())).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_median() {
        let d = Distribution::of(&mut [3.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!((d.min, d.median, d.max), (1.0, 2.5, 10.0));
        assert!(Distribution::of(&mut []).is_none());
    }
}
