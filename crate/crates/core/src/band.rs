//! Fejér windows, band decompositions, the `as`-norms and spectral support
//! estimates.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{inverse_fourier_exact, modulus_of_continuity, SampledFunction, Spectrum};
use crate::linalg::I;

/// Weight of the `as`-norm sum.
pub const AS_WEIGHT: f64 = 5.0;
pub const DEFAULT_SPECTRUM_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_DA: f64 = 0.125;

/// Windows whose content is below this fraction of the total coefficient mass
/// are not transformed back; their sup norm is bounded by that mass.
const NEGLIGIBLE_BAND: f64 = 1e-14;

/// `max(0, 1 - |lambda - a|)`.
pub fn fejer_hat(a: f64, lambda: f64) -> f64 {
    (1.0 - (lambda - a).abs()).max(0.0)
}

/// Fejér kernel `phi_a` centred at frequency `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FejerWindow {
    pub center: f64,
}

impl FejerWindow {
    pub fn new(center: f64) -> Self {
        FejerWindow { center }
    }

    pub fn hat(&self, lambda: f64) -> f64 {
        fejer_hat(self.center, lambda)
    }

    /// `phi_a(t) = exp(iat) (1 - cos t) / (pi t^2)`, `phi_a(0) = 1/(2 pi)`.
    pub fn time(&self, t: f64) -> Complex64 {
        let base = if t.abs() < 1e-4 {
            // 1 - cos t = t^2/2 - t^4/24 + ...
            (0.5 - t * t / 24.0) / PI
        } else {
            (1.0 - t.cos()) / (PI * t * t)
        };
        Complex64::from_polar(base, self.center * t)
    }
}

/// Signed lattice indices `k` with `lambda_k` strictly inside `(a-1, a+1)`
/// and below Nyquist.
fn window_indices(spec: &Spectrum, a: f64) -> std::ops::RangeInclusive<i64> {
    let grid = spec.grid();
    let m = grid.m() as f64;
    let half = (grid.len() / 2) as i64;
    let lo = ((a - 1.0) * m).floor() as i64 + 1;
    let hi = ((a + 1.0) * m).ceil() as i64 - 1;
    lo.max(-half)..=hi.min(half - 1)
}

fn band_spectrum(spec: &Spectrum, a: f64) -> (Spectrum, f64) {
    let grid = *spec.grid();
    let mut out = Spectrum::zeros(grid, spec.dim());
    let mut mass = 0.0;
    for k in window_indices(spec, a) {
        let w = fejer_hat(a, grid.frequency(k));
        if w == 0.0 {
            continue;
        }
        let q = grid.bin(k);
        let v = spec.at_bin(q) * Complex64::new(w, 0.0);
        mass += w * spec.bin_norm(q);
        out.set_bin(q, &v);
    }
    (out, mass / grid.period())
}

/// `phi_a * x`, i.e. multiplication of the transform by the triangle.
pub fn band_filter(x: &SampledFunction, a: f64) -> SampledFunction {
    let (spec, _) = band_spectrum(x.spectrum(), a);
    inverse_fourier_exact(&spec, x.is_exact())
}

/// `||phi_a * x||_sup`, skipping the inverse transform for negligible bands.
fn band_sup(x: &SampledFunction, a: f64, total_mass: f64) -> f64 {
    let (spec, mass) = band_spectrum(x.spectrum(), a);
    if mass <= NEGLIGIBLE_BAND * total_mass {
        return 0.0;
    }
    inverse_fourier_exact(&spec, x.is_exact()).sup_norm()
}

/// Per-band sup norms `||phi_n * x||` for `|n| <= n_max`. Components are
/// recomputed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDecomposition {
    source: SampledFunction,
    n_max: i64,
    /// `(n, ||phi_n * x||_sup)` in ascending `n`.
    pub entries: Vec<(i64, f64)>,
}

impl BandDecomposition {
    pub fn source(&self) -> &SampledFunction {
        &self.source
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn component(&self, n: i64) -> SampledFunction {
        band_filter(&self.source, n as f64)
    }

    pub fn norm_of(&self, n: i64) -> f64 {
        self.entries.iter().find(|e| e.0 == n).map_or(0.0, |e| e.1)
    }

    /// Bands with nonzero norm.
    pub fn active(&self) -> impl Iterator<Item = &(i64, f64)> {
        self.entries.iter().filter(|e| e.1 > 0.0)
    }

    /// `sum_n phi_n * x` over the active range, accumulated in the spectrum.
    pub fn reassemble(&self) -> SampledFunction {
        let src = self.source.spectrum();
        let mut acc = Spectrum::zeros(*src.grid(), src.dim());
        for n in -self.n_max..=self.n_max {
            acc.add_assign(&band_spectrum(src, n as f64).0);
        }
        inverse_fourier_exact(&acc, self.source.is_exact())
    }
}

/// `ceil(Nyquist) + 1`.
pub fn band_range(x: &SampledFunction) -> i64 {
    x.grid().nyquist().ceil() as i64 + 1
}

/// `||x||_as = 5 sum_n ||phi_n * x||_sup` with its band decomposition.
pub fn as_norm(x: &SampledFunction) -> (f64, BandDecomposition) {
    let n_max = band_range(x);
    let total = x.spectrum().coefficient_l1();
    let entries: Vec<(i64, f64)> = (-n_max..=n_max).map(|n| (n, band_sup(x, n as f64, total))).collect();
    let value = AS_WEIGHT * entries.iter().map(|e| e.1).sum::<f64>();
    (
        value,
        BandDecomposition {
            source: x.clone(),
            n_max,
            entries,
        },
    )
}

pub fn as_norm_value(x: &SampledFunction) -> f64 {
    as_norm(x).0
}

/// `int ||phi_a * x||_sup da` by the trapezoid rule with step `da` over
/// `[-n_max - 1, n_max + 1]`.
pub fn as_tilde_norm(x: &SampledFunction, da: f64) -> Result<f64> {
    if !(da > 0.0 && da <= DEFAULT_DA) {
        return Err(Error::Parameter(format!("window step da = {da} must lie in (0, 1/8]")));
    }
    let reach = (band_range(x) + 1) as f64;
    let steps = (2.0 * reach / da).ceil() as usize;
    let da = 2.0 * reach / steps as f64;
    let total = x.spectrum().coefficient_l1();
    let mut sum = 0.0;
    for i in 0..=steps {
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        sum += w * band_sup(x, -reach + i as f64 * da, total);
    }
    Ok(sum * da)
}

/// Lattice frequencies carrying at least `threshold` times the largest bin.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// Ascending signed lattice indices.
    pub indices: Vec<i64>,
    pub frequencies: Vec<f64>,
    pub threshold: f64,
}

impl SpectrumEstimate {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Whether every frequency lies in `[lo, hi]`, up to rounding.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.frequencies.iter().all(|&f| f >= lo - 1e-12 && f <= hi + 1e-12)
    }

    pub fn is_subset_of(&self, other: &SpectrumEstimate) -> bool {
        self.indices.iter().all(|k| other.indices.binary_search(k).is_ok())
    }
}

pub fn beurling_spectrum(x: &SampledFunction, threshold: f64) -> Result<SpectrumEstimate> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Parameter(format!("threshold {threshold} must lie in (0, 1)")));
    }
    let grid = x.grid();
    let spec = x.spectrum();
    let norms: Vec<f64> = (0..grid.len()).map(|q| spec.bin_norm(q)).collect();
    let max = norms.iter().copied().fold(0.0, f64::max);
    let mut indices: Vec<i64> = if max == 0.0 {
        Vec::new()
    } else {
        norms
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= threshold * max)
            .map(|(q, _)| grid.bin_index(q))
            .collect()
    };
    indices.sort_unstable();
    let frequencies = indices.iter().map(|&k| grid.frequency(k)).collect();
    Ok(SpectrumEstimate {
        indices,
        frequencies,
        threshold,
    })
}

/// Spectral derivative `x'`, exact for lattice trigonometric polynomials.
pub fn spectral_derivative(x: &SampledFunction) -> SampledFunction {
    let spec = x.spectrum().scaled_by(|lam| I * lam);
    inverse_fourier_exact(&spec, x.is_exact())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Growing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    /// `omega_y(1/k) / k` for `k = 1..=K`.
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Log-log slope of the terms over the last quartile of `k`.
    pub tail_slope: f64,
    pub verdict: Verdict,
}

/// Partial sums of `sum_k omega_y(1/k) / k` with `y = x'`.
///
/// `omega_y(1/k)` is the larger of the grid-shift modulus and the exact
/// spectral shift by `1/k`; `K` is limited to `m`. The series is judged bounded when the terms decay faster than
/// `1/k` over the last quartile (log-log slope below -1) or vanish.
pub fn as_membership_criterion(x: &SampledFunction, k_max: usize) -> Result<MembershipReport> {
    let m = x.grid().m() as usize;
    if k_max == 0 || k_max > m {
        return Err(Error::Resolution(format!(
            "K = {k_max} must lie in 1..={m}: shifts 1/k below h cannot be resolved"
        )));
    }
    let y = spectral_derivative(x);
    let mut terms = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let delta = 1.0 / k as f64;
        let shifted = inverse_fourier_exact(
            &y.spectrum().scaled_by(|lam| Complex64::from_polar(1.0, lam * delta)),
            y.is_exact(),
        );
        let omega = modulus_of_continuity(&y, delta)?.max(shifted.sup_distance(&y)?);
        terms.push(omega / k as f64);
    }
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let scale = terms.iter().copied().fold(0.0, f64::max);
    let start = (3 * k_max / 4).min(k_max.saturating_sub(2));
    let tail: Vec<(f64, f64)> = (start..k_max)
        .filter(|&i| terms[i] > 1e-14 * scale)
        .map(|i| (((i + 1) as f64).ln(), terms[i].ln()))
        .collect();
    let tail_slope = if tail.len() >= 2 {
        let n = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NEG_INFINITY
    };
    let verdict = if tail_slope < -1.0 {
        Verdict::Bounded
    } else {
        Verdict::Growing
    };
    Ok(MembershipReport {
        terms,
        partial_sums,
        tail_slope,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_sampled_function, TimeGrid};
    use crate::linalg::CVec;

    fn harmonic(freq: f64, v: &[f64]) -> SampledFunction {
        let c = CVec::from_iterator(v.len(), v.iter().map(|&r| Complex64::new(r, 0.0)));
        build_sampled_function(TimeGrid::default(), v.len(), &[(freq, c)]).unwrap()
    }

    #[test]
    fn triangle_values() {
        assert_eq!(fejer_hat(0.0, 0.0), 1.0);
        assert_eq!(fejer_hat(3.0, 4.0), 0.0);
        assert_eq!(fejer_hat(3.0, 3.5), 0.5);
        let w = FejerWindow::new(0.0);
        assert!((w.time(0.0).re - 0.5 / PI).abs() < 1e-16);
        assert!((w.time(1e-5).re - w.time(0.0).re).abs() < 1e-11);
    }

    #[test]
    fn filters_on_harmonics() {
        let x = harmonic(2.0, &[1.0, 0.0]);
        assert!(band_filter(&x, 2.0).sup_distance(&x).unwrap() < 1e-14);
        assert!(band_filter(&x, 3.0).sup_norm() < 1e-14);
        let x = harmonic(2.5, &[0.0, 1.0]);
        let half = x.scale(Complex64::new(0.5, 0.0));
        assert!(band_filter(&x, 2.0).sup_distance(&half).unwrap() < 1e-14);
    }

    #[test]
    fn norms_of_harmonics() {
        let x = harmonic(2.0, &[0.6, 0.8]);
        assert!((as_norm_value(&x) - 5.0).abs() < 1e-12);
        assert!((as_tilde_norm(&x, DEFAULT_DA).unwrap() - 1.0).abs() < 1e-12);
        let x = harmonic(2.5, &[1.0]);
        let (v, dec) = as_norm(&x);
        assert!((v - 5.0).abs() < 1e-12);
        assert!((dec.norm_of(2) - 0.5).abs() < 1e-12);
        assert!((dec.norm_of(3) - 0.5).abs() < 1e-12);
        assert_eq!(dec.active().count(), 2);
        assert_eq!(as_norm_value(&SampledFunction::zeros(TimeGrid::default(), 2)), 0.0);
        assert!(as_tilde_norm(&x, 0.2).is_err());
    }

    #[test]
    fn spectra() {
        let x = harmonic(2.0, &[1.0]);
        let s = beurling_spectrum(&x, DEFAULT_SPECTRUM_THRESHOLD).unwrap();
        assert_eq!(s.frequencies, vec![2.0]);
        let z = beurling_spectrum(&SampledFunction::zeros(TimeGrid::default(), 1), 1e-9).unwrap();
        assert!(z.is_empty());
    }

    #[test]
    fn membership_examples() {
        let r = as_membership_criterion(&harmonic(2.0, &[1.0]), 16).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
        let r = as_membership_criterion(&harmonic(0.0, &[1.0]), 16).unwrap();
        assert!(r.terms.iter().all(|&t| t < 1e-12));
        assert_eq!(r.verdict, Verdict::Bounded);
        assert!(matches!(
            as_membership_criterion(&harmonic(0.0, &[1.0]), 17),
            Err(Error::Resolution(_))
        ));
    }
}
