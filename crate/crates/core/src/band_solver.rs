//! Windowed resolvent kernels `R_n = (phi_n^ R(i., A))^v`, the band-sum
//! solver built from them and the explicit norm certificates.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::band::{as_norm_value, beurling_spectrum, fejer_hat, DEFAULT_SPECTRUM_THRESHOLD};
use crate::dichotomy::L1Estimate;
use crate::error::{Error, Result};
use crate::grid::{fft_plan, inverse_fourier_exact, plateau_hat, SampledFunction, Spectrum, TimeGrid};
use crate::linalg::{self, CMat, ZERO};
use crate::semigroup::{GeneratorModel, ResolventScan, DEFAULT_SCAN_STEP, GAP_TOL};

pub const DEFAULT_OVERSAMPLE: usize = 8;
/// Slack allowed on top of every closed-form bound.
pub const BOUND_SLACK: f64 = 1e-6;

const MIN_SAMPLES: usize = 1024;
const MAX_SAMPLES: usize = 1 << 14;
const L1_REL_TARGET: f64 = 1e-8;
/// A band is solved only if its input carries more than this fraction of the
/// total coefficient mass.
const ACTIVE_BAND: f64 = 1e-15;

/// `(18/pi) M (4 + 4M + 2M^2)^{1/2}`.
pub fn inverse_norm_certificate(m: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Parameter(format!("resolvent bound M = {m} must be positive")));
    }
    Ok(18.0 / PI * m * (4.0 + 4.0 * m + 2.0 * m * m).sqrt())
}

/// `(2/pi) M (4 + 4M + 2M^2)^{1/2}`, the per-band kernel bound.
pub fn band_kernel_bound(m: f64) -> Result<f64> {
    Ok(inverse_norm_certificate(m)? / 9.0)
}

/// Sup norms of a window symbol and its first two derivatives on the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolNorms {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

impl SymbolNorms {
    /// `4||Phi|| + 4||Phi'|| + ||Phi''||`, the constant of the `t^{-2}` decay.
    pub fn decay_constant(&self) -> f64 {
        4.0 * self.value + 4.0 * self.first + self.second
    }

    /// `(2/pi) ||Phi||^{1/2} (4||Phi|| + 4||Phi'|| + ||Phi''||)^{1/2}`.
    pub fn kernel_bound(&self) -> f64 {
        2.0 / PI * (self.value * self.decay_constant()).sqrt()
    }
}

type SymbolFn = dyn Fn(f64) -> CMat + Send + Sync;

/// Matrix function `Phi(lambda)` multiplied against a Fejér window.
#[derive(Clone)]
pub struct WindowSymbol {
    dim: usize,
    eval: Arc<SymbolFn>,
    norms: Option<SymbolNorms>,
}

impl std::fmt::Debug for WindowSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WindowSymbol")
            .field("dim", &self.dim)
            .field("norms", &self.norms)
            .finish()
    }
}

impl WindowSymbol {
    pub fn constant(b: CMat) -> Self {
        let norms = SymbolNorms {
            value: linalg::spectral_norm(&b),
            first: 0.0,
            second: 0.0,
        };
        WindowSymbol {
            dim: b.nrows(),
            eval: Arc::new(move |_| b.clone()),
            norms: Some(norms),
        }
    }

    /// `R(i lambda, A)` with `||R|| <= M`, `||R'|| = ||R^2|| <= M^2` and
    /// `||R''|| = ||2R^3|| <= 2M^3`.
    pub fn resolvent(model: &GeneratorModel, m: f64) -> Result<Self> {
        model.require_gap()?;
        let model = model.clone();
        let dim = model.dim();
        Ok(WindowSymbol {
            dim,
            eval: Arc::new(move |lam| {
                model
                    .resolvent_on_axis(lam)
                    .expect("the gap keeps i lambda in the resolvent set")
            }),
            norms: Some(SymbolNorms {
                value: m,
                first: m * m,
                second: 2.0 * m * m * m,
            }),
        })
    }

    /// Arbitrary symbol; `norms` must be supplied before bounds can be checked.
    pub fn from_fn<F>(dim: usize, f: F, norms: Option<SymbolNorms>) -> Self
    where
        F: Fn(f64) -> CMat + Send + Sync + 'static,
    {
        WindowSymbol {
            dim,
            eval: Arc::new(f),
            norms,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norms(&self) -> Option<SymbolNorms> {
        self.norms
    }

    pub fn eval(&self, lambda: f64) -> CMat {
        (self.eval)(lambda)
    }
}

/// `K(t) = (1/2pi) int phi_a^(lambda) Phi(lambda) exp(i lambda t) d lambda`
/// by the trapezoid rule on `lambda = a + l / (m * oversample)`.
///
/// The discrete rule makes `K` periodic with period `oversample * 2 pi m`;
/// its restriction to one period is the periodisation of the exact kernel.
#[derive(Debug, Clone)]
pub struct WindowKernel {
    center: f64,
    dim: usize,
    m: u32,
    oversample: usize,
    /// `phi^ Phi` at `l = -half..=half`.
    coeffs: Vec<CMat>,
    /// Lattice multipliers `(k, K^(lambda_k))` recovered from time samples.
    multiplier: Vec<(i64, CMat)>,
    l1: L1Estimate,
    norms: Option<SymbolNorms>,
}

impl WindowKernel {
    pub fn new(symbol: &WindowSymbol, center: f64, m: u32, oversample: usize) -> Result<Self> {
        if oversample < DEFAULT_OVERSAMPLE {
            return Err(Error::Parameter(format!(
                "oversample factor {oversample} must be at least {DEFAULT_OVERSAMPLE}"
            )));
        }
        if m == 0 {
            return Err(Error::Parameter("lattice resolution m must be positive".into()));
        }
        let half = m as usize * oversample;
        let dl = 1.0 / half as f64;
        let d = symbol.dim();
        let coeffs: Vec<CMat> = (0..=2 * half)
            .map(|i| {
                let l = i as f64 - half as f64;
                let w = fejer_hat(0.0, l * dl);
                if w == 0.0 {
                    CMat::zeros(d, d)
                } else {
                    symbol.eval(center + l * dl) * Complex64::new(w, 0.0)
                }
            })
            .collect();
        let mut kernel = WindowKernel {
            center,
            dim: d,
            m,
            oversample,
            coeffs,
            multiplier: Vec::new(),
            l1: L1Estimate::zero(),
            norms: symbol.norms(),
        };
        kernel.quadrature();
        Ok(kernel)
    }

    fn half(&self) -> usize {
        self.m as usize * self.oversample
    }

    fn dl(&self) -> f64 {
        1.0 / self.half() as f64
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Period of the discrete kernel, `oversample * 2 pi m`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.dl()
    }

    pub fn l1(&self) -> L1Estimate {
        self.l1
    }

    /// `t^{-2}` decay constant of the symbol, when known.
    pub fn decay_constant(&self) -> Option<f64> {
        self.norms.map(|n| n.decay_constant())
    }

    /// Demodulated samples `exp(-i a t) K(t)` at `t_j = j P / nt`, FFT order.
    fn demodulated_samples(&self, nt: usize) -> Vec<CMat> {
        let d = self.dim;
        let half = self.half() as i64;
        let scale = Complex64::new(self.dl() / (2.0 * PI), 0.0);
        let ifft = fft_plan(nt, true);
        let mut out = vec![CMat::zeros(d, d); nt];
        let mut buf = vec![ZERO; nt];
        for r in 0..d {
            for c in 0..d {
                buf.iter_mut().for_each(|b| *b = ZERO);
                for (i, m) in self.coeffs.iter().enumerate() {
                    let l = i as i64 - half;
                    buf[l.rem_euclid(nt as i64) as usize] += m[(r, c)] * scale;
                }
                ifft.process(&mut buf);
                for (o, v) in out.iter_mut().zip(&buf) {
                    o[(r, c)] = *v;
                }
            }
        }
        out
    }

    // Trapezoid L^1 norm over one period with doubling sample counts, and the
    // lattice multiplier recovered by a forward transform of the samples.
    fn quadrature(&mut self) {
        let period = self.period();
        let mut nt = MIN_SAMPLES.max((4 * (2 * self.half() + 1)).next_power_of_two());
        let samples = self.demodulated_samples(nt);
        self.multiplier = self.roundtrip(&samples);
        let norm_sum = |s: &[CMat]| s.iter().map(linalg::spectral_norm).sum::<f64>();
        let mut value = norm_sum(&samples) * period / nt as f64;
        let mut delta = f64::INFINITY;
        let mut converged = value == 0.0;
        while !converged && nt < MAX_SAMPLES {
            nt *= 2;
            let next = norm_sum(&self.demodulated_samples(nt)) * period / nt as f64;
            delta = next - value;
            value = next;
            converged = delta.abs() <= L1_REL_TARGET * value;
        }
        if value == 0.0 {
            delta = 0.0;
        }
        // Aliasing plus truncation of the C/(2 pi t^2) tails beyond P/2.
        let tail = self.decay_constant().map_or(f64::INFINITY, |c| 4.0 * c / (PI * period));
        self.l1 = L1Estimate {
            value,
            refinement_delta: delta,
            tail_bound: if value == 0.0 { 0.0 } else { tail },
            converged,
        };
    }

    fn roundtrip(&self, samples: &[CMat]) -> Vec<(i64, CMat)> {
        let d = self.dim;
        let nt = samples.len();
        let fft = fft_plan(nt, false);
        let scale = Complex64::new(self.period() / nt as f64, 0.0);
        let mut spec = vec![CMat::zeros(d, d); nt];
        let mut buf = vec![ZERO; nt];
        for r in 0..d {
            for c in 0..d {
                for (b, s) in buf.iter_mut().zip(samples) {
                    *b = s[(r, c)];
                }
                fft.process(&mut buf);
                for (o, v) in spec.iter_mut().zip(&buf) {
                    o[(r, c)] = v * scale;
                }
            }
        }
        // Lattice point lambda_k = center + l * dl with l = (k - center m) * os.
        let m = self.m as i64;
        let os = self.oversample as i64;
        let a = (self.center * self.m as f64).round() as i64;
        let on_lattice = (self.center * self.m as f64 - a as f64).abs() < 1e-9;
        let mut out = Vec::new();
        if on_lattice {
            for k in (a - m + 1)..=(a + m - 1) {
                let l = (k - a) * os;
                out.push((k, spec[l.rem_euclid(nt as i64) as usize].clone()));
            }
        }
        out
    }

    /// `K(t)` by direct summation of the trigonometric polynomial.
    pub fn evaluate(&self, t: f64) -> CMat {
        let half = self.half() as f64;
        let dl = self.dl();
        let mut acc = CMat::zeros(self.dim, self.dim);
        for (i, c) in self.coeffs.iter().enumerate() {
            let l = i as f64 - half;
            acc += c * Complex64::from_polar(1.0, l * dl * t);
        }
        acc * Complex64::from_polar(self.dl() / (2.0 * PI), self.center * t)
    }

    /// `(k, K^(lambda_k))` for lattice `lambda_k` inside the window, available
    /// when the centre lies on the lattice.
    pub fn lattice_multiplier(&self) -> &[(i64, CMat)] {
        &self.multiplier
    }
}

/// Outcome of a window-kernel `L^1` certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowBoundCheck {
    pub computed_l1: f64,
    /// Quadrature uncertainty plus the tail bound.
    pub uncertainty: f64,
    pub bound: f64,
    pub ok: bool,
}

/// `||(Phi phi_0^)^v||_1` against `(2/pi)||Phi||^{1/2}(4||Phi|| + 4||Phi'|| + ||Phi''||)^{1/2}`.
///
/// `ok` requires the quadrature value plus its uncertainty to stay within the
/// bound up to `1e-6`.
pub fn verify_window_kernel_bound(symbol: &WindowSymbol, m: u32, oversample: usize) -> Result<WindowBoundCheck> {
    let norms = symbol
        .norms()
        .ok_or_else(|| Error::Parameter("window symbol needs sup norms of itself and two derivatives".into()))?;
    let kernel = WindowKernel::new(symbol, 0.0, m, oversample)?;
    let l1 = kernel.l1();
    let bound = norms.kernel_bound();
    let uncertainty = l1.upper() - l1.value;
    Ok(WindowBoundCheck {
        computed_l1: l1.value,
        uncertainty,
        bound,
        ok: l1.upper() <= bound + BOUND_SLACK,
    })
}

/// `R_n` together with its certificate data.
#[derive(Debug, Clone)]
pub struct BandKernel {
    pub n: i64,
    pub kernel: WindowKernel,
    /// Resolvent bound `M` the kernel was certified against.
    pub m: f64,
    /// `(2/pi) M (4 + 4M + 2M^2)^{1/2}`.
    pub bound: f64,
}

impl BandKernel {
    pub fn l1(&self) -> L1Estimate {
        self.kernel.l1()
    }

    pub fn l1_ok(&self) -> bool {
        self.l1().upper() <= self.bound + BOUND_SLACK
    }

    pub fn evaluate(&self, t: f64) -> CMat {
        self.kernel.evaluate(t)
    }

    /// `M / (2 pi)`.
    pub fn origin_bound(&self) -> f64 {
        self.m / (2.0 * PI)
    }

    /// `(4M + 4M^2 + 2M^3) / (2 pi t^2)`.
    pub fn tail_bound_at(&self, t: f64) -> f64 {
        let m = self.m;
        (4.0 * m + 4.0 * m * m + 2.0 * m * m * m) / (2.0 * PI * t * t)
    }

    /// Largest `||R_n^(lambda_k) - phi_n^(lambda_k) R(i lambda_k, A)||` over
    /// lattice points of the window.
    pub fn fourier_error(&self, model: &GeneratorModel) -> f64 {
        self.kernel
            .lattice_multiplier()
            .iter()
            .map(|(k, r)| {
                let lam = *k as f64 / self.kernel.m as f64;
                let exact = model.resolvent_on_axis(lam).expect("gap checked")
                    * Complex64::new(fejer_hat(self.n as f64, lam), 0.0);
                linalg::max_abs_diff(r, &exact)
            })
            .fold(0.0, f64::max)
    }
}

impl crate::dichotomy::KernelL1 for BandKernel {
    fn l1_estimate(&self) -> L1Estimate {
        self.l1()
    }
}

/// Builds `R_n` on the lattice of `grid`, certifying `M` by a resolvent scan.
pub fn band_kernel(model: &GeneratorModel, grid: &TimeGrid, n: i64, oversample: usize) -> Result<BandKernel> {
    let scan = model.resolvent_bound(DEFAULT_SCAN_STEP)?;
    band_kernel_with_bound(model, grid.m(), n, oversample, scan.m)
}

fn band_kernel_with_bound(
    model: &GeneratorModel,
    m_lattice: u32,
    n: i64,
    oversample: usize,
    m: f64,
) -> Result<BandKernel> {
    let symbol = WindowSymbol::resolvent(model, m)?;
    let kernel = WindowKernel::new(&symbol, n as f64, m_lattice, oversample)?;
    Ok(BandKernel {
        n,
        kernel,
        m,
        bound: band_kernel_bound(m)?,
    })
}

/// Per-band record of a band solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BandEntry {
    pub n: i64,
    /// `||y_{n-1} + y_n + y_{n+1}||_sup`.
    pub input_norm: f64,
    /// `||x_n||_sup`.
    pub output_norm: f64,
    pub kernel_l1: L1Estimate,
    pub kernel_bound: f64,
    pub kernel_ok: bool,
    /// `||x_n|| <= ||R_n||_1 ||y_{n-1} + y_n + y_{n+1}||`.
    pub young_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandReport {
    pub m: f64,
    pub kernel_bound: f64,
    pub certificate: f64,
    /// Ascending `|n|`, negative first on ties.
    pub entries: Vec<BandEntry>,
    pub as_norm_y: f64,
    pub as_norm_x: f64,
    pub certificate_ok: bool,
    /// `||x_literal - x_fast||_sup`.
    pub fast_path_difference: f64,
}

impl BandReport {
    pub fn ratio(&self) -> f64 {
        if self.as_norm_y == 0.0 {
            0.0
        } else {
            self.as_norm_x / self.as_norm_y
        }
    }

    pub fn all_kernels_ok(&self) -> bool {
        self.entries.iter().all(|e| e.kernel_ok && e.young_ok)
    }
}

/// Band-sum solver for a generator whose spectrum avoids `iR`.
#[derive(Debug, Clone)]
pub struct BandSolver {
    model: GeneratorModel,
    grid: TimeGrid,
    scan: ResolventScan,
    oversample: usize,
}

impl BandSolver {
    pub fn new(model: &GeneratorModel, grid: &TimeGrid, oversample: usize) -> Result<Self> {
        Self::with_scan_step(model, grid, oversample, DEFAULT_SCAN_STEP)
    }

    /// As [`BandSolver::new`] with an explicit resolvent scan step.
    pub fn with_scan_step(model: &GeneratorModel, grid: &TimeGrid, oversample: usize, scan_step: f64) -> Result<Self> {
        let scan = model.resolvent_bound(scan_step)?;
        if oversample < DEFAULT_OVERSAMPLE {
            return Err(Error::Parameter(format!(
                "oversample factor {oversample} must be at least {DEFAULT_OVERSAMPLE}"
            )));
        }
        Ok(BandSolver {
            model: model.clone(),
            grid: *grid,
            scan,
            oversample,
        })
    }

    pub fn resolvent_scan(&self) -> &ResolventScan {
        &self.scan
    }

    pub fn m(&self) -> f64 {
        self.scan.m
    }

    pub fn kernel(&self, n: i64) -> Result<BandKernel> {
        band_kernel_with_bound(&self.model, self.grid.m(), n, self.oversample, self.scan.m)
    }

    fn check_input(&self, y: &SampledFunction) -> Result<()> {
        if y.grid() != &self.grid || y.dim() != self.model.dim() {
            return Err(Error::Parameter(
                "right-hand side must share the solver grid and dimension".into(),
            ));
        }
        Ok(())
    }

    /// Bands whose window `(n-1, n+1)` sees a non-negligible part of `y`,
    /// in summation order.
    pub fn active_bands(&self, y: &SampledFunction) -> Vec<i64> {
        let spec = y.spectrum();
        let grid = &self.grid;
        let norms: Vec<f64> = (0..grid.len()).map(|q| spec.bin_norm(q)).collect();
        let total: f64 = norms.iter().sum();
        if total == 0.0 {
            return Vec::new();
        }
        let n_max = grid.nyquist().ceil() as i64 + 1;
        let mut mass = vec![0.0; (2 * n_max + 1) as usize];
        for (q, v) in norms.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let lam = grid.frequency(grid.bin_index(q));
            let lo = (lam - 1.0).floor() as i64;
            let hi = (lam + 1.0).ceil() as i64;
            for n in lo.max(-n_max)..=hi.min(n_max) {
                if (lam - n as f64).abs() < 1.0 {
                    mass[(n + n_max) as usize] += v;
                }
            }
        }
        let mut bands: Vec<i64> = (-n_max..=n_max)
            .filter(|n| mass[(n + n_max) as usize] > ACTIVE_BAND * total)
            .collect();
        bands.sort_by_key(|&n| (n.abs(), n));
        bands
    }

    /// `x = sum_n R_n * (y_{n-1} + y_n + y_{n+1})`.
    pub fn solve(&self, y: &SampledFunction) -> Result<(SampledFunction, BandReport)> {
        self.check_input(y)?;
        let bands = self.active_bands(y);
        let kernels: Vec<BandKernel> = bands.par_iter().map(|&n| self.kernel(n)).collect::<Result<_>>()?;
        let src = y.spectrum();
        let grid = self.grid;
        let d = self.model.dim();
        let pieces: Vec<(SampledFunction, f64)> = kernels
            .par_iter()
            .map(|kern| {
                let n = kern.n as f64;
                let mut input = Spectrum::zeros(grid, d);
                let mut output = Spectrum::zeros(grid, d);
                for (k, r) in kern.kernel.lattice_multiplier() {
                    let q = grid.bin(*k);
                    let lam = grid.frequency(*k);
                    let w = fejer_hat(n - 1.0, lam) + fejer_hat(n, lam) + fejer_hat(n + 1.0, lam);
                    let v = src.at_bin(q) * Complex64::new(w, 0.0);
                    output.set_bin(q, &(r * &v));
                    input.set_bin(q, &v);
                }
                let input_norm = inverse_fourier_exact(&input, y.is_exact()).sup_norm();
                (inverse_fourier_exact(&output, y.is_exact()), input_norm)
            })
            .collect();
        let mut x = SampledFunction::zeros(grid, d);
        let mut entries = Vec::with_capacity(kernels.len());
        let mut spec = Spectrum::zeros(grid, d);
        for (kern, (xn, input_norm)) in kernels.iter().zip(&pieces) {
            x = x.add(xn)?;
            spec.add_assign(xn.spectrum());
            let l1 = kern.l1();
            let output_norm = xn.sup_norm();
            entries.push(BandEntry {
                n: kern.n,
                input_norm: *input_norm,
                output_norm,
                kernel_l1: l1,
                kernel_bound: kern.bound,
                kernel_ok: kern.l1_ok(),
                young_ok: output_norm <= l1.upper() * input_norm * (1.0 + BOUND_SLACK) + 1e-14,
            });
        }
        let x = SampledFunction::from_components(grid, x.components().to_vec(), y.is_exact())?;
        x.set_spectrum(spec);
        let fast = self.solve_fast(y)?;
        let as_norm_y = as_norm_value(y);
        let as_norm_x = as_norm_value(&x);
        let certificate = inverse_norm_certificate(self.m())?;
        let report = BandReport {
            m: self.m(),
            kernel_bound: band_kernel_bound(self.m())?,
            certificate,
            entries,
            as_norm_y,
            as_norm_x,
            certificate_ok: as_norm_x <= certificate * as_norm_y * (1.0 + BOUND_SLACK),
            fast_path_difference: x.sup_distance(&fast)?,
        };
        Ok((x, report))
    }

    /// `x^(lambda_k) = R(i lambda_k, A) y^(lambda_k)` on every lattice bin.
    pub fn solve_fast(&self, y: &SampledFunction) -> Result<SampledFunction> {
        self.check_input(y)?;
        let src = y.spectrum();
        let mut out = Spectrum::zeros(self.grid, self.model.dim());
        for q in 0..self.grid.len() {
            if src.bin_norm(q) == 0.0 {
                continue;
            }
            let lam = self.grid.frequency(self.grid.bin_index(q));
            let r = self.model.resolvent_on_axis(lam)?;
            out.set_bin(q, &(r * src.at_bin(q)));
        }
        Ok(inverse_fourier_exact(&out, y.is_exact()))
    }
}

/// Band-sum solve with the default oversampling.
pub fn solve_band(model: &GeneratorModel, y: &SampledFunction) -> Result<(SampledFunction, BandReport)> {
    BandSolver::new(model, y.grid(), DEFAULT_OVERSAMPLE)?.solve(y)
}

/// Distance below which an eigenvalue counts as lying on `i Delta`.
const CONTOUR_TOL: f64 = 1e-8;
const PLATEAU_ROLLOFF: f64 = 0.5;

/// `x = F * y` with `F^ = g^ R(i., A)`, `g^` a plateau equal to one on
/// `[lo, hi]`, for `y` whose spectrum lies in `[lo, hi]`.
///
/// The roll-off is 1/2 unless an eigenvalue sits on `iR` closer than that
/// to `i[lo, hi]`; then it shrinks to half that distance.
pub fn solve_band_limited(model: &GeneratorModel, y: &SampledFunction, lo: f64, hi: f64) -> Result<SampledFunction> {
    if !(lo <= hi) {
        return Err(Error::Parameter(format!("empty interval [{lo}, {hi}]")));
    }
    if y.dim() != model.dim() {
        return Err(Error::Parameter("dimension mismatch".into()));
    }
    let dist_to_band = |im: f64| {
        if im < lo {
            lo - im
        } else if im > hi {
            im - hi
        } else {
            0.0
        }
    };
    let mut rolloff = PLATEAU_ROLLOFF;
    for mu in model.eigenvalues() {
        let dist = mu.re.hypot(dist_to_band(mu.im));
        if dist <= CONTOUR_TOL {
            return Err(Error::SpectrumOnContour(format!(
                "eigenvalue {mu} lies within {dist:e} of i[{lo}, {hi}]"
            )));
        }
        if mu.re.abs() <= GAP_TOL {
            rolloff = rolloff.min(0.5 * dist_to_band(mu.im));
        }
    }
    let spectrum = beurling_spectrum(y, DEFAULT_SPECTRUM_THRESHOLD)?;
    if !spectrum.within(lo, hi) {
        return Err(Error::SpectrumMismatch(format!(
            "spectrum of y reaches {:?}, outside [{lo}, {hi}]",
            spectrum.frequencies.iter().find(|&&f| f < lo - 1e-12 || f > hi + 1e-12)
        )));
    }
    let grid = y.grid();
    let src = y.spectrum();
    let mut out = Spectrum::zeros(*grid, model.dim());
    for q in 0..grid.len() {
        let lam = grid.frequency(grid.bin_index(q));
        let g = plateau_hat(lo, hi, rolloff, lam);
        if g == 0.0 || src.bin_norm(q) == 0.0 {
            continue;
        }
        let r = model.resolvent_on_axis(lam)? * Complex64::new(g, 0.0);
        out.set_bin(q, &(r * src.at_bin(q)));
    }
    Ok(inverse_fourier_exact(&out, y.is_exact()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_sampled_function;
    use crate::linalg::CVec;

    fn model(rows: &[&[f64]]) -> GeneratorModel {
        GeneratorModel::from_real_rows(rows).unwrap()
    }

    #[test]
    fn certificate_values() {
        let c1 = inverse_norm_certificate(1.0).unwrap();
        assert!((c1 - 18.0 / PI * 10f64.sqrt()).abs() < 1e-12);
        assert!((c1 - 18.118516).abs() < 1e-5);
        let c2 = inverse_norm_certificate(2.0).unwrap();
        assert!((c2 - 51.246903).abs() < 1e-5);
        assert!(c2 > c1);
        assert!(inverse_norm_certificate(0.0).is_err());
        assert!((band_kernel_bound(1.0).unwrap() - 2.013168).abs() < 1e-6);
    }

    #[test]
    fn constant_symbol_kernel_is_fejer() {
        let b = linalg::from_real_rows(&[&[2.0]]);
        let check = verify_window_kernel_bound(&WindowSymbol::constant(b), 16, 8).unwrap();
        assert!((check.computed_l1 - 2.0).abs() < 1e-10, "{check:?}");
        assert!((check.bound - 2.0 * 4.0 / PI).abs() < 1e-12);
        assert!(check.ok);
        let zero = WindowSymbol::constant(CMat::zeros(1, 1));
        let check = verify_window_kernel_bound(&zero, 16, 8).unwrap();
        assert_eq!((check.computed_l1, check.bound, check.ok), (0.0, 0.0, true));
        let bare = WindowSymbol::from_fn(1, |_| CMat::zeros(1, 1), None);
        assert!(matches!(
            verify_window_kernel_bound(&bare, 16, 8),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn scalar_band_kernel() {
        let grid = TimeGrid::default();
        let a = model(&[&[-1.0]]);
        let k = band_kernel(&a, &grid, 0, 8).unwrap();
        assert!((k.m - 1.0).abs() < 1e-6);
        assert!(k.l1_ok(), "{:?}", k.l1());
        assert!(k.fourier_error(&a) < 1e-12);
        let r0 = k.kernel.lattice_multiplier().iter().find(|e| e.0 == 0).unwrap();
        assert!((r0.1[(0, 0)].re + 1.0).abs() < 1e-12);
        assert!(linalg::spectral_norm(&k.evaluate(0.0)) <= k.origin_bound() + 1e-8);
        for t in [1.0, 3.0, 10.0, 40.0] {
            assert!(linalg::spectral_norm(&k.evaluate(t)) <= k.tail_bound_at(t) + 1e-8);
        }
    }

    #[test]
    fn harmonic_band_solve() {
        let grid = TimeGrid::default();
        let a = model(&[&[-2.0]]);
        let y = build_sampled_function(grid, 1, &[(1.0, CVec::from_element(1, Complex64::new(1.0, 0.0)))]).unwrap();
        let (x, report) = solve_band(&a, &y).unwrap();
        let c = Complex64::new(1.0, 0.0) / Complex64::new(-2.0, -1.0);
        let expect = build_sampled_function(grid, 1, &[(1.0, CVec::from_element(1, c))]).unwrap();
        assert!(x.sup_distance(&expect).unwrap() < 1e-10);
        assert!(report.fast_path_difference < 1e-12);
        assert!(report.certificate_ok && report.all_kernels_ok());
        assert_eq!(report.entries.iter().map(|e| e.n).collect::<Vec<_>>(), vec![1]);
        let (z, report) = solve_band(&a, &SampledFunction::zeros(grid, 1)).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        assert!(report.entries.is_empty());
    }

    #[test]
    fn band_limited_examples() {
        let grid = TimeGrid::default();
        let a = model(&[&[-1.0]]);
        let y = build_sampled_function(grid, 1, &[(2.0, CVec::from_element(1, Complex64::new(1.0, 0.0)))]).unwrap();
        let x = solve_band_limited(&a, &y, 1.5, 2.5).unwrap();
        let c = Complex64::new(1.0, 0.0) / Complex64::new(-1.0, -2.0);
        let expect = build_sampled_function(grid, 1, &[(2.0, CVec::from_element(1, c))]).unwrap();
        assert!(x.sup_distance(&expect).unwrap() < 1e-12);
        assert!(matches!(
            solve_band_limited(&a, &y, 0.0, 1.0),
            Err(Error::SpectrumMismatch(_))
        ));
        let osc = model(&[&[0.0, 1.0], &[-4.0, 0.0]]);
        let y2 = SampledFunction::zeros(grid, 2);
        assert!(matches!(
            solve_band_limited(&osc, &y2, 1.5, 2.5),
            Err(Error::SpectrumOnContour(_))
        ));
    }
}
