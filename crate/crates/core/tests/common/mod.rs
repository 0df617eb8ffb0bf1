//! Closed-form scattering data used as independent oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use nft_core::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for complex `z` (Lanczos, reflection for `Re z < 1/2`). The
/// imaginary part is only defined modulo 2π, which is all `exp` needs.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let pi = Complex64::new(PI, 0.0);
        return pi.ln() - (pi * z).sin().ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `a(λ)` of `A·sech(t)`: `Γ(w)² / (Γ(w + A)·Γ(w - A))`, `w = 1/2 - jλ`.
pub fn sech_a(amplitude: f64, lambda: Complex64) -> Complex64 {
    let w = Complex64::new(0.5, 0.0) - Complex64::new(0.0, 1.0) * lambda;
    (2.0 * ln_gamma(w) - ln_gamma(w + amplitude) - ln_gamma(w - amplitude)).exp()
}

/// Eigenvalues `j(A + 1/2 - k)` of `A·sech(t)`, largest first.
pub fn sech_eigenvalues(amplitude: f64) -> Vec<Complex64> {
    let n = (amplitude + 0.5).floor() as usize;
    (1..=n)
        .map(|k| amplitude + 0.5 - k as f64)
        .filter(|&s| s > 0.0)
        .map(|s| Complex64::new(0.0, s))
        .collect()
}

/// `a(λ)` of a constant `amplitude` on an interval of length `duration`,
/// from the exact exponential of the constant-coefficient system.
pub fn rect_a(amplitude: Complex64, duration: f64, lambda: Complex64) -> Complex64 {
    let j = Complex64::new(0.0, 1.0);
    let delta = (lambda * lambda + amplitude.norm_sqr()).sqrt();
    let dt = delta * duration;
    let sinc = if delta.norm() < 1e-12 { Complex64::new(duration, 0.0) } else { dt.sin() / delta };
    (j * lambda * duration).exp() * (dt.cos() - j * lambda * sinc)
}

/// Derivative of `2·Σ arccot((ω_k - ω)/σ_k)` w.r.t. ω: a sum of Lorentzians.
pub fn lorentzian_sum(eigs: &[Complex64], omega: f64) -> f64 {
    eigs.iter().map(|l| 2.0 * l.im / (l.im * l.im + (omega - l.re).powi(2))).sum()
}

/// Closed-form all-pass phase `2·Σ arccot((ω_k - ω)/σ_k)`, arccot in (0, π).
pub fn allpass_phase_closed_form(eigs: &[Complex64], omega: f64) -> f64 {
    eigs.iter().map(|l| 2.0 * (PI / 2.0 - ((l.re - omega) / l.im).atan())).sum()
}

/// Greedy nearest-neighbour matching; returns the largest distance.
pub fn max_matched_distance(found: &[Complex64], truth: &[Complex64]) -> f64 {
    assert_eq!(found.len(), truth.len(), "found {found:?}, expected {truth:?}");
    let mut used = vec![false; found.len()];
    let mut worst = 0.0f64;
    for t in truth {
        let (k, d) = found
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, f)| (k, (f - t).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}
