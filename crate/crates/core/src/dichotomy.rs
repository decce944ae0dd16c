//! Exponential dichotomy of a hyperbolic matrix semigroup: the Riesz
//! projections of `T(1)` onto the parts of its spectrum inside and outside the
//! unit circle, and the Green kernel
//!
//! ```text
//! G(t) = -T(t) P_in    (t >= 0)
//! G(t) =  T(t) P_out   (t < 0)
//! ```
//!
//! whose convolution inverts `-d/dt + A` on bounded functions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{fft_plan, TimeGrid};
use crate::linalg::{self, CMat, ZERO};
use crate::semigroup::GeneratorModel;

/// Margin below which `sigma(T(1))` is considered to touch the unit circle.
pub const HYPERBOLIC_TOL: f64 = 1e-8;
pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_TAIL: f64 = 1e-12;

const MIN_NODES: usize = 64;
const MAX_NODES: usize = 1 << 16;
/// Doubling stops once successive projections agree to this.
const DOUBLING_TARGET: f64 = 1e-10;
/// Doubling that still moves the projection by more than this is a failure.
const DOUBLING_FAIL: f64 = 1e-8;

/// `min_mu | |exp(mu)| - 1 |` over eigenvalues of `A`, i.e. the distance of
/// `sigma(T(1))` from the unit circle measured in modulus.
pub fn check_hyperbolic(model: &GeneratorModel) -> f64 {
    model
        .eigenvalues()
        .iter()
        .map(|mu| (mu.re.exp() - 1.0).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Spectral splitting `X = X_in + X_out` of a hyperbolic semigroup.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomySplit {
    pub p_in: CMat,
    pub p_out: CMat,
    /// Eigenvalues of `T(1)` inside the unit disc, with multiplicity.
    pub sigma_in: Vec<Complex64>,
    pub sigma_out: Vec<Complex64>,
    pub margin: f64,
    /// Quadrature nodes used for the final `p_in`.
    pub nodes: usize,
    /// `||P_in(nodes) - P_in(nodes / 2)||`.
    pub doubling_delta: f64,
}

impl DichotomySplit {
    pub fn idempotency_error(&self) -> f64 {
        let a = linalg::max_abs_diff(&(&self.p_in * &self.p_in), &self.p_in);
        let b = linalg::max_abs_diff(&(&self.p_out * &self.p_out), &self.p_out);
        a.max(b)
    }

    pub fn complement_error(&self) -> f64 {
        let d = self.p_in.nrows();
        linalg::max_abs_diff(&(&self.p_in + &self.p_out), &linalg::identity(d))
    }

    /// `||P_in T(t) - T(t) P_in||`.
    pub fn commutation_error(&self, model: &GeneratorModel, t: f64) -> f64 {
        let e = model.expm(t);
        linalg::max_abs_diff(&(&self.p_in * &e), &(&e * &self.p_in))
    }

    /// `trace(P_in)`, which equals its rank for a projection.
    pub fn trace_in(&self) -> f64 {
        self.p_in.trace().re
    }
}

/// Riesz projections of `T(1)` by the trapezoid rule on the unit circle,
///
/// ```text
/// P_in = 1/(2 pi i) \oint (lambda I - T(1))^{-1} d lambda
///      ~ (1/Q) sum_q lambda_q (lambda_q I - T(1))^{-1},  lambda_q = exp(2 pi i q / Q),
/// ```
///
/// doubling `Q` from `nodes` until successive results agree.
pub fn riesz_projections(model: &GeneratorModel, nodes: usize) -> Result<DichotomySplit> {
    let margin = check_hyperbolic(model);
    if !(margin > HYPERBOLIC_TOL) {
        return Err(Error::NotHyperbolic(format!(
            "sigma(T(1)) is within {margin:e} of the unit circle"
        )));
    }
    if nodes < MIN_NODES {
        return Err(Error::Parameter(format!(
            "contour quadrature needs at least {MIN_NODES} nodes, got {nodes}"
        )));
    }
    let d = model.dim();
    let t1 = model.expm(1.0);
    let eye = linalg::identity(d);
    let partial = |q: usize, offset: f64| -> Result<CMat> {
        let mut acc = CMat::zeros(d, d);
        for j in 0..q {
            let lambda = Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + offset) / q as f64);
            let m = &eye * lambda - &t1;
            let inv = linalg::inverse(&m)
                .ok_or_else(|| Error::Quadrature(format!("contour node {lambda} hits sigma(T(1))")))?;
            acc += inv * lambda;
        }
        Ok(acc / Complex64::new(q as f64, 0.0))
    };
    let mut q = nodes;
    let mut current = partial(q, 0.0)?;
    let mut delta;
    loop {
        let odd = partial(q, 0.5)?;
        let next = (&current + odd) * Complex64::new(0.5, 0.0);
        delta = linalg::max_abs_diff(&next, &current);
        current = next;
        q *= 2;
        if delta <= DOUBLING_TARGET || q >= MAX_NODES {
            break;
        }
    }
    if delta > DOUBLING_FAIL {
        return Err(Error::Quadrature(format!(
            "doubling to {q} nodes still moves P_in by {delta:e}"
        )));
    }
    let (sigma_in, sigma_out): (Vec<_>, Vec<_>) = model
        .eigenvalues()
        .iter()
        .map(|mu| mu.exp())
        .partition(|z| z.norm() < 1.0);
    let p_out = &eye - &current;
    Ok(DichotomySplit {
        p_in: current,
        p_out,
        sigma_in,
        sigma_out,
        margin,
        nodes: q,
        doubling_delta: delta,
    })
}

/// Sampled Green kernel of a hyperbolic generator with a fitted decay
/// certificate `||G(t)|| <= C exp(-alpha |t|)`.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    model: GeneratorModel,
    split: DichotomySplit,
    grid: TimeGrid,
    eps_tail: f64,
    t_cut: f64,
    decay_rate: f64,
    decay_const: f64,
    // P_in T(1) P_in and P_out T(-1) P_out: stable one-step propagators.
    unit_fwd: CMat,
    unit_bwd: CMat,
    /// Kernel at lags `bin_index(q) * h`, FFT bin order.
    lags: Vec<CMat>,
}

/// Time step of the decay probe.
const PROBE_STEP: f64 = 0.25;

impl GreenKernel {
    pub fn model(&self) -> &GeneratorModel {
        &self.model
    }

    pub fn split(&self) -> &DichotomySplit {
        &self.split
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn eps_tail(&self) -> f64 {
        self.eps_tail
    }

    /// `||G(+-t)|| <= eps_tail` for `t >= t_cut`.
    pub fn t_cut(&self) -> f64 {
        self.t_cut
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn decay_constant(&self) -> f64 {
        self.decay_const
    }

    /// `G(t)` at arbitrary `t`, evaluated through the projected propagators
    /// so that the unstable part never amplifies projection round-off.
    pub fn evaluate(&self, t: f64) -> CMat {
        if t >= 0.0 {
            let k = t.floor();
            let r = t - k;
            let p = &self.split.p_in;
            let head = p * self.model.expm(r) * p;
            -(head * matrix_power(&self.unit_fwd, k as u64))
        } else {
            let s = -t;
            let k = s.floor();
            let r = s - k;
            let p = &self.split.p_out;
            let head = p * self.model.expm(-r) * p;
            head * matrix_power(&self.unit_bwd, k as u64)
        }
    }

    /// Sampled kernel at lag `j * h`, zero beyond `t_cut`.
    pub fn sample(&self, j: i64) -> &CMat {
        &self.lags[self.grid.bin(j)]
    }

    /// Fourier transform `int G(t) exp(-i lambda t) dt` over `[-t_cut, t_cut]`
    /// by composite 16-point Gauss-Legendre on panels of width 1/2.
    pub fn fourier_quadrature(&self, lambdas: &[f64]) -> Vec<CMat> {
        let d = self.model.dim();
        let (x, w) = linalg::gauss_legendre(16);
        let width = 0.5;
        let panels = (self.t_cut / width).ceil() as usize;
        let offsets: Vec<f64> = x.iter().map(|x| 0.5 * width * (1.0 + x)).collect();
        let weights: Vec<f64> = w.iter().map(|w| 0.5 * width * w).collect();
        let mut out = vec![CMat::zeros(d, d); lambdas.len()];
        for (sign, p) in [(1.0, &self.split.p_in), (-1.0, &self.split.p_out)] {
            let within: Vec<CMat> = offsets.iter().map(|&o| p * self.model.expm(sign * o) * p).collect();
            let step = p * self.model.expm(sign * width) * p;
            let mut start = if sign > 0.0 { -p.clone() } else { p.clone() };
            for panel in 0..panels {
                let t0 = sign * panel as f64 * width;
                for (i, base) in within.iter().enumerate() {
                    let g = base * &start;
                    let t = t0 + sign * offsets[i];
                    for (lam, acc) in lambdas.iter().zip(out.iter_mut()) {
                        let phase = Complex64::from_polar(weights[i], -lam * t);
                        *acc += &g * phase;
                    }
                }
                start = &step * start;
            }
        }
        out
    }

    /// Exact transform of the sampled, piecewise-exponential kernel at every
    /// lattice frequency, in FFT bin order.
    ///
    /// On each cell `[jh, (j+1)h]` the kernel equals `G(jh) T(t - jh)`, so
    /// the transform factors into the DFT of the samples times the cell
    /// factor `int_0^h T(s) exp(-i lambda s) ds`.
    pub fn lattice_transform(&self) -> Vec<CMat> {
        let d = self.model.dim();
        let n = self.grid.len();
        let h = self.grid.step();
        let fft = fft_plan(n, false);
        let mut dft = vec![CMat::zeros(d, d); n];
        let mut buf = vec![ZERO; n];
        for r in 0..d {
            for c in 0..d {
                for (b, g) in buf.iter_mut().zip(&self.lags) {
                    *b = g[(r, c)];
                }
                fft.process(&mut buf);
                for (m, v) in dft.iter_mut().zip(&buf) {
                    m[(r, c)] = *v;
                }
            }
        }
        let (x, w) = linalg::gauss_legendre(16);
        let nodes: Vec<(f64, CMat)> = x
            .iter()
            .zip(&w)
            .map(|(x, w)| {
                let s = 0.5 * h * (1.0 + x);
                (s, self.model.expm(s) * Complex64::new(0.5 * h * w, 0.0))
            })
            .collect();
        dft.iter()
            .enumerate()
            .map(|(q, g)| {
                let lam = self.grid.frequency(self.grid.bin_index(q));
                let mut cell = CMat::zeros(d, d);
                for (s, m) in &nodes {
                    cell += m * Complex64::from_polar(1.0, -lam * s);
                }
                g * cell
            })
            .collect()
    }
}

pub(crate) fn matrix_power(m: &CMat, mut k: u64) -> CMat {
    let mut result = linalg::identity(m.nrows());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Builds the sampled Green kernel on `grid`.
///
/// The decay rate is fitted as `0.9 * min |Re mu|` and the constant as the
/// largest observed `||G(t)|| exp(alpha |t|)` on a probe of width
/// `0.25`, inflated by 10%. The cut-off carries a further 20% margin.
pub fn green_kernel(
    model: &GeneratorModel,
    split: &DichotomySplit,
    grid: &TimeGrid,
    eps_tail: f64,
) -> Result<GreenKernel> {
    if !(eps_tail > 0.0) {
        return Err(Error::Parameter(format!("tail tolerance {eps_tail} must be positive")));
    }
    let d = model.dim();
    if split.p_in.nrows() != d {
        return Err(Error::Parameter("split does not match the generator".into()));
    }
    let gap = model.check_spectral_gap();
    let decay_rate = 0.9 * gap;
    let p_in = &split.p_in;
    let p_out = &split.p_out;
    let unit_fwd = p_in * model.expm(1.0) * p_in;
    let unit_bwd = p_out * model.expm(-1.0) * p_out;

    let probe_len = (100.0 * d as f64 / gap).clamp(8.0, 1e5);
    let mut decay_const: f64 = 0.0;
    for (p, step) in [
        (p_in, p_in * model.expm(PROBE_STEP) * p_in),
        (p_out, p_out * model.expm(-PROBE_STEP) * p_out),
    ] {
        let mut g = p.clone();
        let mut t = 0.0;
        while t <= probe_len {
            let v = linalg::spectral_norm(&g) * (decay_rate * t).exp();
            decay_const = decay_const.max(v);
            g = &step * g;
            t += PROBE_STEP;
        }
    }
    let decay_const = 1.1 * decay_const;
    let t_cut = if decay_const > eps_tail {
        1.2 * (decay_const / eps_tail).ln() / decay_rate
    } else {
        0.0
    };
    if grid.period() < 2.0 * t_cut {
        let needed_m = (2.0 * t_cut / (2.0 * PI)).ceil();
        return Err(Error::PeriodTooShort(format!(
            "period L = {:.4} but the kernel needs L >= 2 T_cut = {:.4} (m >= {needed_m})",
            grid.period(),
            2.0 * t_cut
        )));
    }

    let n = grid.len();
    let h = grid.step();
    let mut lags = vec![CMat::zeros(d, d); n];
    let fwd = p_in * model.expm(h) * p_in;
    let bwd = p_out * model.expm(-h) * p_out;
    let mut g = -p_in.clone();
    for j in 0..n / 2 {
        if j as f64 * h > t_cut {
            break;
        }
        lags[j] = g.clone();
        g = &fwd * g;
    }
    let mut g = &bwd * p_out;
    for j in 1..=n / 2 {
        if j as f64 * h > t_cut {
            break;
        }
        lags[grid.bin(-(j as i64))] = g.clone();
        g = &bwd * g;
    }
    Ok(GreenKernel {
        model: model.clone(),
        split: split.clone(),
        grid: *grid,
        eps_tail,
        t_cut,
        decay_rate,
        decay_const,
        unit_fwd,
        unit_bwd,
        lags,
    })
}

/// Outcome of an `L^1` kernel-norm quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Estimate {
    /// Quadrature value over the resolved window.
    pub value: f64,
    /// Change between the last two refinement levels.
    pub refinement_delta: f64,
    /// Bound on the contribution from outside the resolved window.
    pub tail_bound: f64,
    /// Whether the refinement reached its relative target.
    pub converged: bool,
}

impl L1Estimate {
    pub fn zero() -> Self {
        L1Estimate {
            value: 0.0,
            refinement_delta: 0.0,
            tail_bound: 0.0,
            converged: true,
        }
    }

    /// Value plus refinement uncertainty plus tail.
    pub fn upper(&self) -> f64 {
        self.value + self.refinement_delta.abs() + self.tail_bound
    }
}

/// Kernels with a computable `int ||K(t)|| dt`.
pub trait KernelL1 {
    fn l1_estimate(&self) -> L1Estimate;
}

/// `int_R ||K(t)|| dt` for a Green or band kernel.
pub fn kernel_l1_norm(kernel: &dyn KernelL1) -> L1Estimate {
    kernel.l1_estimate()
}

const L1_REL_TARGET: f64 = 1e-8;
const ROMBERG_MAX_LEVEL: usize = 16;

impl KernelL1 for GreenKernel {
    /// Romberg integration of `t -> ||G(t)||` on `[0, T_cut]` and
    /// `[-T_cut, 0]` separately (the kernel jumps at 0), halving the step
    /// until the relative change drops below `1e-8`.
    fn l1_estimate(&self) -> L1Estimate {
        if self.t_cut == 0.0 {
            return L1Estimate::zero();
        }
        let mut total = 0.0;
        let mut delta = 0.0;
        let mut converged = true;
        for (sign, p) in [(1.0, &self.split.p_in), (-1.0, &self.split.p_out)] {
            let (v, dv, ok) = romberg_side(&self.model, p, sign, self.t_cut);
            total += v;
            delta += dv;
            converged &= ok;
        }
        let tail = 2.0 * self.decay_const * (-self.decay_rate * self.t_cut).exp() / self.decay_rate;
        L1Estimate {
            value: total,
            refinement_delta: delta,
            tail_bound: tail,
            converged,
        }
    }
}

fn romberg_side(model: &GeneratorModel, p: &CMat, sign: f64, t_cut: f64) -> (f64, f64, bool) {
    let norm_at = |g: &CMat| linalg::spectral_norm(g);
    // Level 0: endpoints.
    let end = p * model.expm(sign * t_cut) * p;
    let mut trap = vec![0.5 * t_cut * (norm_at(p) + norm_at(&end))];
    let mut rows: Vec<Vec<f64>> = vec![trap.clone()];
    let mut prev_best = trap[0];
    let mut last_delta = f64::INFINITY;
    for level in 1..=ROMBERG_MAX_LEVEL {
        let pieces = 1usize << level;
        let s = t_cut / pieces as f64;
        // New points are the odd multiples of s.
        let two_s = p * model.expm(sign * 2.0 * s) * p;
        let mut g = p * model.expm(sign * s) * p;
        let mut sum = 0.0;
        for _ in 0..pieces / 2 {
            sum += norm_at(&g);
            g = &two_s * g;
        }
        let t_new = 0.5 * trap[0] + s * sum;
        trap = vec![t_new];
        let prev = rows.last().expect("non-empty");
        let mut row = vec![t_new];
        for k in 1..=level.min(6) {
            let f = 4f64.powi(k as i32);
            let v = (f * row[k - 1] - prev[k - 1]) / (f - 1.0);
            row.push(v);
        }
        let best = *row.last().expect("non-empty");
        last_delta = best - prev_best;
        prev_best = best;
        rows.push(row);
        if level >= 4 && last_delta.abs() <= L1_REL_TARGET * best.abs().max(f64::MIN_POSITIVE) {
            return (best, last_delta, true);
        }
    }
    (prev_best, last_delta, false)
}
