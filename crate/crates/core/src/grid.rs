//! Periodic uniform-grid model of vector-valued functions on the real line.
//!
//! A [`TimeGrid`] with `N` samples covers one period `L = 2*pi*m`, so the
//! frequency lattice `lambda_k = k/m` contains every integer. Functions are
//! stored as [`SampledFunction`]s; their Fourier transform uses the scaling
//! `x^(lambda_k) = h * sum_j x(t_j) exp(-i lambda_k t_j)`, which matches the
//! continuous transform `int x(t) exp(-i t lambda) dt` on one period.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{CVec, ZERO};

/// Tolerance used when deciding whether a real number sits on a lattice.
const LATTICE_TOL: f64 = 1e-9;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Uniform periodic grid `t_j = j*h - L/2`, `j = 0..N`, with `L = 2*pi*m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    m: u32,
    n: usize,
    period: f64,
    step: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::new(16, 4096).expect("default grid is valid")
    }
}

impl TimeGrid {
    pub fn new(m: u32, n: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("period multiplier m must be >= 1".into()));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "sample count N = {n} must be a power of two >= 2"
            )));
        }
        let period = 2.0 * PI * m as f64;
        Ok(TimeGrid {
            m,
            n,
            period,
            step: period / n as f64,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn time(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.step
    }

    /// `pi / h`; lattice frequencies must stay strictly below it.
    pub fn nyquist(&self) -> f64 {
        PI / self.step
    }

    /// Lattice spacing `2*pi/L = 1/m`.
    pub fn frequency_step(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn frequency(&self, k: i64) -> f64 {
        k as f64 / self.m as f64
    }

    /// Signed frequency index of FFT bin `q`.
    pub fn bin_index(&self, q: usize) -> i64 {
        if q < self.n / 2 {
            q as i64
        } else {
            q as i64 - self.n as i64
        }
    }

    /// FFT bin holding signed frequency index `k`.
    pub fn bin(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Signed lattice index of `freq`, checking lattice membership only.
    pub fn lattice_index_unchecked(&self, freq: f64) -> Result<i64> {
        let scaled = freq * self.m as f64;
        let k = scaled.round();
        if (scaled - k).abs() > LATTICE_TOL * (1.0 + scaled.abs()) {
            return Err(Error::Lattice(format!(
                "frequency {freq} is not a multiple of 1/m = {}",
                self.frequency_step()
            )));
        }
        Ok(k as i64)
    }

    /// Signed lattice index of `freq`, also requiring `|freq| < pi/h`.
    pub fn lattice_index(&self, freq: f64) -> Result<i64> {
        let k = self.lattice_index_unchecked(freq)?;
        if k.unsigned_abs() as usize >= self.n / 2 {
            return Err(Error::Nyquist(format!("|{freq}| >= pi/h = {}", self.nyquist())));
        }
        Ok(k)
    }

    /// Number of grid steps in `t`; errors unless `t` is a multiple of `h`.
    pub fn steps(&self, t: f64) -> Result<i64> {
        let s = t / self.step;
        let r = s.round();
        if (s - r).abs() > LATTICE_TOL * (1.0 + s.abs()) {
            return Err(Error::Lattice(format!(
                "shift {t} is not a multiple of h = {}",
                self.step
            )));
        }
        Ok(r as i64)
    }

    /// `exp(i lambda_k t_j)` computed from integer phase indices.
    pub fn harmonic(&self, k: i64, j: usize) -> Complex64 {
        let n = self.n as i64;
        let p = (k.rem_euclid(n) * (j as i64 - n / 2)).rem_euclid(n);
        Complex64::from_polar(1.0, 2.0 * PI * p as f64 / n as f64)
    }
}

/// Lattice-indexed Fourier samples of a vector-valued function.
///
/// Data are kept per component in FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: TimeGrid,
    data: Vec<Vec<Complex64>>,
}

impl Spectrum {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Spectrum {
            grid,
            data: vec![vec![ZERO; grid.len()]; dim],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.data[c]
    }

    /// Vector `x^(lambda_k)` at signed index `k`.
    pub fn at(&self, k: i64) -> CVec {
        self.at_bin(self.grid.bin(k))
    }

    pub fn at_bin(&self, q: usize) -> CVec {
        CVec::from_iterator(self.dim(), self.data.iter().map(|c| c[q]))
    }

    pub fn set_bin(&mut self, q: usize, v: &CVec) {
        for (c, comp) in self.data.iter_mut().enumerate() {
            comp[q] = v[c];
        }
    }

    pub fn bin_norm(&self, q: usize) -> f64 {
        self.data.iter().map(|c| c[q].norm_sqr()).sum::<f64>().sqrt()
    }

    /// Pointwise scalar multiplier `m(lambda_k)`.
    pub fn scaled_by<F>(&self, mut f: F) -> Spectrum
    where
        F: FnMut(f64) -> Complex64,
    {
        let mult: Vec<Complex64> = (0..self.grid.len())
            .map(|q| f(self.grid.frequency(self.grid.bin_index(q))))
            .collect();
        self.scaled_by_bins(&mult)
    }

    pub fn scaled_by_bins(&self, mult: &[Complex64]) -> Spectrum {
        let data = self
            .data
            .iter()
            .map(|c| c.iter().zip(mult).map(|(a, b)| a * b).collect())
            .collect();
        Spectrum { grid: self.grid, data }
    }

    pub fn add_assign(&mut self, other: &Spectrum) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// `l^1` sum of bin norms divided by `L`: bounds the sup norm of the
    /// inverse transform.
    pub fn coefficient_l1(&self) -> f64 {
        (0..self.grid.len()).map(|q| self.bin_norm(q)).sum::<f64>() / self.grid.period()
    }
}

/// Sampled vector-valued function on a [`TimeGrid`].
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: TimeGrid,
    values: Vec<Vec<Complex64>>,
    exact: bool,
    spectrum: OnceLock<Spectrum>,
}

impl PartialEq for SampledFunction {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

/// Which norm [`SampledFunction::norm`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Sup,
    /// Sup over unit windows of the local `L^p` norm.
    Stepanov(f64),
}

impl SampledFunction {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        SampledFunction {
            grid,
            values: vec![vec![ZERO; grid.len()]; dim],
            exact: true,
            spectrum: OnceLock::new(),
        }
    }

    /// Arbitrary samples, one vector per grid point. Marked approximate.
    pub fn from_samples(grid: TimeGrid, samples: &[CVec]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        let dim = samples.first().map_or(0, |v| v.len());
        if dim == 0 || samples.iter().any(|v| v.len() != dim) {
            return Err(Error::Parameter("samples must share a positive dimension".into()));
        }
        let values = (0..dim).map(|c| samples.iter().map(|v| v[c]).collect()).collect();
        Ok(SampledFunction {
            grid,
            values,
            exact: false,
            spectrum: OnceLock::new(),
        })
    }

    /// Component-major samples. `exact` records whether the samples represent
    /// a lattice trigonometric polynomial.
    pub fn from_components(grid: TimeGrid, values: Vec<Vec<Complex64>>, exact: bool) -> Result<Self> {
        if values.is_empty() || values.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Parameter(format!(
                "every component needs {} samples",
                grid.len()
            )));
        }
        Ok(SampledFunction {
            grid,
            values,
            exact,
            spectrum: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// True when the samples come from a lattice trigonometric polynomial
    /// (possibly after linear, frequency-diagonal operations).
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub(crate) fn with_exact(mut self, exact: bool) -> Self {
        self.exact = exact;
        self
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.values[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    pub fn value(&self, j: usize) -> CVec {
        CVec::from_iterator(self.dim(), self.values.iter().map(|c| c[j]))
    }

    /// Value at grid index `j` taken modulo `N`.
    pub fn value_wrapped(&self, j: i64) -> CVec {
        self.value(j.rem_euclid(self.grid.len() as i64) as usize)
    }

    pub fn point_norm(&self, j: usize) -> f64 {
        self.values.iter().map(|c| c[j].norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_compatible(&self, other: &SampledFunction) -> Result<()> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::Parameter(
                "functions live on different grids or dimensions".into(),
            ));
        }
        Ok(())
    }

    /// `a*self + b*other`.
    pub fn combine(&self, a: Complex64, other: &SampledFunction, b: Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect())
            .collect();
        Ok(SampledFunction {
            grid: self.grid,
            values,
            exact: self.exact && other.exact,
            spectrum: OnceLock::new(),
        })
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        SampledFunction {
            grid: self.grid,
            values: self.values.iter().map(|c| c.iter().map(|x| a * x).collect()).collect(),
            exact: self.exact,
            spectrum: OnceLock::new(),
        }
    }

    /// `sup_j |self(t_j) - other(t_j)|`.
    pub fn sup_distance(&self, other: &SampledFunction) -> Result<f64> {
        self.check_compatible(other)?;
        Ok((0..self.grid.len())
            .map(|j| {
                self.values
                    .iter()
                    .zip(&other.values)
                    .map(|(x, y)| (x[j] - y[j]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max))
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len()).map(|j| self.point_norm(j)).fold(0.0, f64::max)
    }

    /// Sup norm, or the Stepanov norm `sup_t (int_t^{t+1} |x|^p)^{1/p}` with
    /// the window integral taken as a left-endpoint sum over the grid points
    /// in `[t, t+1)`; the last point gets the leftover partial cell so the
    /// weights sum to exactly one.
    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::Sup => Ok(self.sup_norm()),
            NormKind::Stepanov(p) => {
                if !(p >= 1.0) {
                    return Err(Error::Parameter(format!("Stepanov exponent p = {p} < 1")));
                }
                let h = self.grid.step();
                let n = self.grid.len();
                let count = ((1.0 / h).floor() as usize + 1).min(n);
                let last_weight = (1.0 - (count - 1) as f64 * h).max(0.0);
                let powered: Vec<f64> = (0..n).map(|j| self.point_norm(j).powf(p)).collect();
                let mut best: f64 = 0.0;
                for start in 0..n {
                    let mut acc = 0.0;
                    for l in 0..count {
                        let w = if l + 1 == count { last_weight } else { h };
                        acc += w * powered[(start + l) % n];
                    }
                    best = best.max(acc);
                }
                Ok(best.powf(1.0 / p))
            }
        }
    }

    /// Fourier samples, computed once and cached.
    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| forward_transform(self))
    }

    pub(crate) fn set_spectrum(&self, s: Spectrum) {
        let _ = self.spectrum.set(s);
    }
}

/// Builds `x(t) = sum c * exp(i omega t)` exactly on the grid.
pub fn build_sampled_function(grid: TimeGrid, dim: usize, terms: &[(f64, CVec)]) -> Result<SampledFunction> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let n = grid.len();
    let mut values = vec![vec![ZERO; n]; dim];
    let mut spec = Spectrum::zeros(grid, dim);
    for (freq, coeff) in terms {
        if coeff.len() != dim {
            return Err(Error::Parameter(format!(
                "coefficient has length {}, expected {dim}",
                coeff.len()
            )));
        }
        let k = grid.lattice_index(*freq)?;
        for j in 0..n {
            let e = grid.harmonic(k, j);
            for c in 0..dim {
                values[c][j] += coeff[c] * e;
            }
        }
        let q = grid.bin(k);
        for c in 0..dim {
            spec.data[c][q] += coeff[c] * grid.period();
        }
    }
    let f = SampledFunction {
        grid,
        values,
        exact: true,
        spectrum: OnceLock::new(),
    };
    f.set_spectrum(spec);
    Ok(f)
}

fn forward_transform(x: &SampledFunction) -> Spectrum {
    let grid = x.grid;
    let n = grid.len();
    let fft = fft_plan(n, false);
    let h = grid.step();
    let data = x
        .values
        .iter()
        .map(|comp| {
            let mut buf = comp.clone();
            fft.process(&mut buf);
            for (q, v) in buf.iter_mut().enumerate() {
                // exp(-i lambda_k t_j) = exp(-2 pi i k j / N) * (-1)^k
                let sign = if q % 2 == 0 { h } else { -h };
                *v *= sign;
            }
            buf
        })
        .collect();
    Spectrum { grid, data }
}

pub fn fourier_transform(x: &SampledFunction) -> Spectrum {
    x.spectrum().clone()
}

/// Inverse of [`fourier_transform`]. The result is marked approximate; use
/// [`inverse_fourier_exact`] when the samples are known to be exact.
pub fn inverse_fourier(samples: &Spectrum, grid: &TimeGrid) -> Result<SampledFunction> {
    if samples.grid != *grid {
        return Err(Error::Parameter("spectrum was computed on another grid".into()));
    }
    Ok(inverse_fourier_exact(samples, false))
}

pub(crate) fn inverse_fourier_exact(samples: &Spectrum, exact: bool) -> SampledFunction {
    let grid = samples.grid;
    let n = grid.len();
    let ifft = fft_plan(n, true);
    let inv_l = 1.0 / grid.period();
    let values = samples
        .data
        .iter()
        .map(|comp| {
            let mut buf: Vec<Complex64> = comp
                .iter()
                .enumerate()
                .map(|(q, v)| if q % 2 == 0 { v * inv_l } else { -v * inv_l })
                .collect();
            ifft.process(&mut buf);
            buf
        })
        .collect();
    let f = SampledFunction {
        grid,
        values,
        exact,
        spectrum: OnceLock::new(),
    };
    f.set_spectrum(samples.clone());
    f
}

/// `(S(t)x)(s) = x(s + t)` for on-grid `t`, periodic.
pub fn translate(x: &SampledFunction, t: f64) -> Result<SampledFunction> {
    let s = x.grid.steps(t)?;
    Ok(shift_by_steps(x, s))
}

pub(crate) fn shift_by_steps(x: &SampledFunction, s: i64) -> SampledFunction {
    let n = x.grid.len();
    let off = s.rem_euclid(n as i64) as usize;
    let values = x
        .values
        .iter()
        .map(|c| (0..n).map(|j| c[(j + off) % n]).collect())
        .collect();
    SampledFunction {
        grid: x.grid,
        values,
        exact: x.exact,
        spectrum: OnceLock::new(),
    }
}

/// `(V(lambda)x)(t) = exp(i lambda t) x(t)` for lattice `lambda`.
pub fn modulate(x: &SampledFunction, lambda: f64) -> Result<SampledFunction> {
    let grid = x.grid;
    let k0 = grid.lattice_index_unchecked(lambda)?;
    let n = grid.len();
    let phases: Vec<Complex64> = (0..n).map(|j| grid.harmonic(k0, j)).collect();
    let values = x
        .values
        .iter()
        .map(|c| c.iter().zip(&phases).map(|(v, p)| v * p).collect())
        .collect();
    // Shifted content that crosses Nyquist wraps around; such results are no
    // longer faithful to the whole-line model.
    let exact = x.exact && {
        let spec = x.spectrum();
        let half = (n / 2) as i64;
        (0..n).all(|q| {
            let k = grid.bin_index(q) + k0;
            spec.bin_norm(q) == 0.0 || (-half..half).contains(&k)
        })
    };
    Ok(SampledFunction {
        grid,
        values,
        exact,
        spectrum: OnceLock::new(),
    })
}

/// Scalar convolution kernels acting on functions through their transform.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarKernel {
    /// Fejér kernel with transform `max(0, 1 - |lambda - center|)`.
    Fejer { center: f64 },
    /// Transform equal to one on `[lo, hi]` with raised-cosine shoulders of
    /// width `rolloff`.
    Plateau { lo: f64, hi: f64, rolloff: f64 },
    /// Samples `f(t_j)` on a grid, interpreted as lags.
    Sampled { grid: TimeGrid, values: Vec<Complex64> },
}

impl ScalarKernel {
    pub fn fejer(center: f64) -> Self {
        ScalarKernel::Fejer { center }
    }

    /// Transform values in FFT bin order for `grid`.
    pub fn multiplier(&self, grid: &TimeGrid) -> Result<Vec<Complex64>> {
        let n = grid.len();
        let lam = |q: usize| grid.frequency(grid.bin_index(q));
        match self {
            ScalarKernel::Fejer { center } => Ok((0..n)
                .map(|q| Complex64::new(crate::band::fejer_hat(*center, lam(q)), 0.0))
                .collect()),
            ScalarKernel::Plateau { lo, hi, rolloff } => Ok((0..n)
                .map(|q| Complex64::new(plateau_hat(*lo, *hi, *rolloff, lam(q)), 0.0))
                .collect()),
            ScalarKernel::Sampled { grid: g, values } => {
                if g != grid || values.len() != n {
                    return Err(Error::Parameter("kernel sampled on another grid".into()));
                }
                let f = SampledFunction::from_components(*g, vec![values.clone()], false)?;
                Ok(forward_transform(&f).data.swap_remove(0))
            }
        }
    }

    /// Estimate of `||f||_1`.
    pub fn l1_estimate(&self, grid: &TimeGrid) -> Result<f64> {
        match self {
            ScalarKernel::Fejer { .. } => Ok(1.0),
            ScalarKernel::Sampled { values, .. } => Ok(values.iter().map(|v| v.norm()).sum::<f64>() * grid.step()),
            ScalarKernel::Plateau { .. } => {
                let mult = self.multiplier(grid)?;
                let spec = Spectrum {
                    grid: *grid,
                    data: vec![mult],
                };
                let f = inverse_fourier_exact(&spec, false);
                Ok(f.component(0).iter().map(|v| v.norm()).sum::<f64>() * grid.step())
            }
        }
    }
}

/// Smooth plateau: 1 on `[lo, hi]`, raised-cosine decay to 0 over `rolloff`.
pub fn plateau_hat(lo: f64, hi: f64, rolloff: f64, lambda: f64) -> f64 {
    let dist = if lambda < lo {
        lo - lambda
    } else if lambda > hi {
        lambda - hi
    } else {
        return 1.0;
    };
    if rolloff <= 0.0 || dist >= rolloff {
        0.0
    } else {
        0.5 * (1.0 + (PI * dist / rolloff).cos())
    }
}

/// Periodic convolution `f * x` evaluated as `f^ . x^` on the lattice.
pub fn convolve(f: &ScalarKernel, x: &SampledFunction) -> Result<SampledFunction> {
    let mult = f.multiplier(&x.grid)?;
    let spec = x.spectrum().scaled_by_bins(&mult);
    Ok(inverse_fourier_exact(&spec, x.exact))
}

/// `omega_x(t) = max_{|s| <= t, s on grid} ||S(s)x - x||_sup`.
pub fn modulus_of_continuity(x: &SampledFunction, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("modulus argument t = {t} < 0")));
    }
    let n = x.grid.len();
    let max_steps = ((t / x.grid.step() + LATTICE_TOL).floor() as usize).min(n);
    // ||S(-s)x - x|| = ||S(s)x - x|| on the periodic grid, so s >= 0 suffices.
    let mut best: f64 = 0.0;
    for l in 1..=max_steps {
        for j in 0..n {
            let d: f64 = x
                .values
                .iter()
                .map(|c| (c[(j + l) % n] - c[j]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            best = best.max(d);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::default()
    }

    fn e1(d: usize) -> CVec {
        let mut v = CVec::zeros(d);
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(16, 1000).is_err());
        assert!(TimeGrid::new(0, 1024).is_err());
        let g = grid();
        assert!((g.step() * g.len() as f64 - g.period()).abs() < 1e-12);
        assert!((g.nyquist() - 128.0).abs() < 1e-9);
    }

    #[test]
    fn empty_sum_is_zero() {
        let x = build_sampled_function(grid(), 2, &[]).unwrap();
        assert_eq!(x.sup_norm(), 0.0);
    }

    #[test]
    fn single_harmonic_and_its_bin() {
        let g = grid();
        let x = build_sampled_function(g, 1, &[(2.0, e1(1))]).unwrap();
        for j in [0, 17, 2048, 4095] {
            let expect = Complex64::from_polar(1.0, 2.0 * g.time(j));
            assert!((x.value(j)[0] - expect).norm() < 1e-12);
        }
        let spec = x.spectrum();
        let k = g.lattice_index(2.0).unwrap();
        for q in 0..g.len() {
            if q == g.bin(k) {
                assert!((spec.bin_norm(q) - g.period()).abs() < 1e-9);
            } else {
                assert_eq!(spec.bin_norm(q), 0.0);
            }
        }
    }

    #[test]
    fn fft_of_harmonic_matches_cached_bin() {
        let g = grid();
        let x = build_sampled_function(g, 1, &[(2.0, e1(1))]).unwrap();
        let fresh = forward_transform(&x);
        let k = g.bin(32);
        assert!((fresh.component(0)[k] - Complex64::new(g.period(), 0.0)).norm() < 1e-9);
    }

    #[test]
    fn lattice_and_nyquist_errors() {
        let g = grid();
        let bad = build_sampled_function(g, 1, &[(0.01, e1(1))]);
        assert!(matches!(bad, Err(Error::Lattice(_))));
        let high = build_sampled_function(g, 1, &[(128.0, e1(1))]);
        assert!(matches!(high, Err(Error::Nyquist(_))));
        assert!(matches!(
            translate(&build_sampled_function(g, 1, &[]).unwrap(), 0.001),
            Err(Error::Lattice(_))
        ));
    }

    #[test]
    fn constant_norms() {
        let g = grid();
        let mut c = CVec::zeros(2);
        c[0] = Complex64::new(3.0, 0.0);
        c[1] = Complex64::new(0.0, 4.0);
        let x = build_sampled_function(g, 2, &[(0.0, c)]).unwrap();
        assert!((x.norm(NormKind::Sup).unwrap() - 5.0).abs() < 1e-12);
        assert!((x.norm(NormKind::Stepanov(1.0)).unwrap() - 5.0).abs() < 1e-12);
        assert!((x.norm(NormKind::Stepanov(2.0)).unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(x.norm(NormKind::Stepanov(0.5)), Err(Error::Parameter(_))));
    }

    #[test]
    fn translation_of_harmonic_is_phase() {
        let g = grid();
        let x = build_sampled_function(g, 1, &[(1.5, e1(1))]).unwrap();
        let t0 = 7.0 * g.step();
        let y = translate(&x, t0).unwrap();
        let phase = Complex64::from_polar(1.0, 1.5 * t0);
        let expect = x.scale(phase);
        assert!(y.sup_distance(&expect).unwrap() < 1e-12);
        assert_eq!(translate(&x, 0.0).unwrap(), x);
    }

    #[test]
    fn modulation_adds_frequencies() {
        let g = grid();
        let x = build_sampled_function(g, 1, &[(1.0, e1(1))]).unwrap();
        let y = modulate(&x, 1.0).unwrap();
        let expect = build_sampled_function(g, 1, &[(2.0, e1(1))]).unwrap();
        assert!(y.sup_distance(&expect).unwrap() < 1e-12);
        assert!(y.is_exact());
    }

    #[test]
    fn roundtrip_and_parseval() {
        let g = TimeGrid::new(4, 256).unwrap();
        let samples: Vec<CVec> = (0..g.len())
            .map(|j| {
                let t = g.time(j);
                CVec::from_vec(vec![
                    Complex64::new((t * 0.3).sin() + 0.2, t.cos()),
                    Complex64::new((-t * t / 40.0).exp(), 0.0),
                ])
            })
            .collect();
        let x = SampledFunction::from_samples(g, &samples).unwrap();
        let back = inverse_fourier(&fourier_transform(&x), &g).unwrap();
        assert!(back.sup_distance(&x).unwrap() <= 1e-12 * x.sup_norm());
        let lhs: f64 = (0..g.len()).map(|j| x.point_norm(j).powi(2)).sum::<f64>() * g.step();
        let spec = x.spectrum();
        let rhs: f64 = (0..g.len()).map(|q| spec.bin_norm(q).powi(2)).sum::<f64>() / g.period();
        assert!((lhs - rhs).abs() < 1e-10 * lhs);
    }

    #[test]
    fn fejer_convolution_kills_out_of_band() {
        let g = grid();
        let x = build_sampled_function(g, 1, &[(3.0, e1(1))]).unwrap();
        let y = convolve(&ScalarKernel::fejer(0.0), &x).unwrap();
        assert!(y.sup_norm() < 1e-13);
    }

    #[test]
    fn modulus_of_harmonic() {
        let g = grid();
        let w = 2.0;
        let x = build_sampled_function(g, 1, &[(w, e1(1))]).unwrap();
        for steps in [1, 5, 20, 60] {
            let t = steps as f64 * g.step();
            let got = modulus_of_continuity(&x, t).unwrap();
            let expect = 2.0 * (w * t / 2.0).sin().abs();
            assert!((got - expect).abs() < 1e-12, "t = {t}");
        }
        assert!(modulus_of_continuity(&x, -1.0).is_err());
    }

    #[test]
    fn plateau_shape() {
        assert_eq!(plateau_hat(1.0, 2.0, 0.5, 1.5), 1.0);
        assert!((plateau_hat(1.0, 2.0, 0.5, 2.25) - 0.5).abs() < 1e-15);
        assert_eq!(plateau_hat(1.0, 2.0, 0.5, 2.6), 0.0);
    }
}
