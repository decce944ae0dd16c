//! Whole-line bounded solutions `x = G * y` of `x' = Ax + y` and the
//! variation-of-constants residual used to certify them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dichotomy::{green_kernel, riesz_projections, GreenKernel, DEFAULT_NODES, DEFAULT_TAIL};
use crate::error::{Error, Result};
use crate::grid::{inverse_fourier_exact, SampledFunction, Spectrum, TimeGrid};
use crate::linalg::{self, CMat, CVec};
use crate::semigroup::GeneratorModel;

/// Frequency-domain Green solver for a fixed generator and grid.
#[derive(Debug, Clone)]
pub struct GreenSolver {
    kernel: GreenKernel,
    multipliers: Vec<CMat>,
}

impl GreenSolver {
    pub fn new(model: &GeneratorModel, grid: &TimeGrid) -> Result<Self> {
        Self::with_options(model, grid, DEFAULT_NODES, DEFAULT_TAIL)
    }

    pub fn with_options(model: &GeneratorModel, grid: &TimeGrid, nodes: usize, eps_tail: f64) -> Result<Self> {
        let split = riesz_projections(model, nodes)?;
        let kernel = green_kernel(model, &split, grid, eps_tail)?;
        let multipliers = kernel.lattice_transform();
        Ok(GreenSolver { kernel, multipliers })
    }

    pub fn kernel(&self) -> &GreenKernel {
        &self.kernel
    }

    /// `G^(lambda_k)` in FFT bin order.
    pub fn multipliers(&self) -> &[CMat] {
        &self.multipliers
    }

    pub fn solve(&self, y: &SampledFunction) -> Result<SampledFunction> {
        if y.grid() != self.kernel.grid() {
            return Err(Error::Parameter("right-hand side lives on another grid".into()));
        }
        if y.dim() != self.kernel.model().dim() {
            return Err(Error::Parameter(format!(
                "right-hand side has dimension {}, generator {}",
                y.dim(),
                self.kernel.model().dim()
            )));
        }
        Ok(apply_bin_multipliers(&self.multipliers, y))
    }
}

/// `x^(lambda_q) = m_q y^(lambda_q)` followed by the inverse transform.
pub(crate) fn apply_bin_multipliers(mult: &[CMat], y: &SampledFunction) -> SampledFunction {
    let src = y.spectrum();
    let mut out = Spectrum::zeros(*y.grid(), mult[0].nrows());
    for (q, m) in mult.iter().enumerate() {
        if src.bin_norm(q) == 0.0 {
            continue;
        }
        out.set_bin(q, &(m * src.at_bin(q)));
    }
    inverse_fourier_exact(&out, y.is_exact())
}

/// `G * y` for a hyperbolic generator.
pub fn solve_green(model: &GeneratorModel, y: &SampledFunction) -> Result<SampledFunction> {
    GreenSolver::new(model, y.grid())?.solve(y)
}

const GREGORY_ORDER: usize = 8;

/// End-correction weights `a_j`, `j < p`, added to the trapezoid weights at
/// both ends so that the rule integrates polynomials of degree `< p` exactly.
/// They solve `sum_j a_j j^q = B_{q+1}/(q+1)` for odd `q` and `0` for even `q`.
pub(crate) fn gregory_corrections(p: usize) -> Vec<f64> {
    const BERNOULLI_EVEN: [f64; 5] = [1.0, 1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    let v = DMatrix::from_fn(p, p, |q, j| (j as f64).powi(q as i32));
    let rhs = DVector::from_fn(p, |q, _| {
        if q % 2 == 1 {
            BERNOULLI_EVEN[(q + 1) / 2] / (q + 1) as f64
        } else {
            0.0
        }
    });
    let a = v.lu().solve(&rhs).expect("Vandermonde on distinct nodes");
    a.iter().copied().collect()
}

/// Composite weights on `n + 1` equispaced nodes with unit spacing.
pub(crate) fn gregory_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n + 1];
    if n == 0 {
        w[0] = 0.0;
        return w;
    }
    w[0] = 0.5;
    w[n] = 0.5;
    let p = GREGORY_ORDER.min(n + 1);
    let a = gregory_corrections(p);
    for (j, aj) in a.iter().enumerate() {
        w[j] += aj;
        w[n - j] += aj;
    }
    w
}

/// `||x(t) - T(t-s)x(s) + int_s^t T(t-tau) y(tau) dtau||` for `s <= t` with
/// `t - s <= L/4`. Both times are snapped to the nearest grid node.
///
/// The integral uses the trapezoid rule with Gregory end corrections of
/// order 8 on the grid nodes.
pub fn mild_residual(model: &GeneratorModel, x: &SampledFunction, y: &SampledFunction, s: f64, t: f64) -> Result<f64> {
    if s > t {
        return Err(Error::Parameter(format!(
            "mild residual needs s <= t, got s = {s}, t = {t}"
        )));
    }
    let grid = *x.grid();
    if y.grid() != &grid || x.dim() != model.dim() || y.dim() != model.dim() {
        return Err(Error::Parameter(
            "x, y and the generator must agree in grid and dimension".into(),
        ));
    }
    if t - s > grid.period() / 4.0 + 1e-12 {
        return Err(Error::Parameter(format!(
            "t - s = {} exceeds L/4 = {}",
            t - s,
            grid.period() / 4.0
        )));
    }
    let half = (grid.len() / 2) as i64;
    let h = grid.step();
    let is = (s / h).round() as i64 + half;
    let n = ((t / h).round() - (s / h).round()) as usize;
    Ok(residual_at(model, x, y, is, n, &propagators(model, grid.step(), n)))
}

fn propagators(model: &GeneratorModel, h: f64, n: usize) -> Vec<CMat> {
    let step = model.expm(h);
    let mut out = Vec::with_capacity(n + 1);
    out.push(linalg::identity(model.dim()));
    for k in 1..=n {
        let next = &step * &out[k - 1];
        out.push(next);
    }
    out
}

fn residual_at(
    model: &GeneratorModel,
    x: &SampledFunction,
    y: &SampledFunction,
    is: i64,
    n: usize,
    powers: &[CMat],
) -> f64 {
    let h = x.grid().step();
    let w = gregory_weights(n);
    let mut integral = CVec::zeros(model.dim());
    for (l, wl) in w.iter().enumerate() {
        integral += &powers[n - l] * y.value_wrapped(is + l as i64) * num_complex::Complex64::new(h * wl, 0.0);
    }
    let xs = x.value_wrapped(is);
    let xt = x.value_wrapped(is + n as i64);
    linalg::vec_norm(&(xt - &powers[n] * xs + integral))
}

/// Residuals at seeded random `(s, t)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProbe {
    pub pairs: Vec<(f64, f64, f64)>,
    pub max_residual: f64,
}

/// Residual at `count` seeded pairs with `16h <= t - s <= span` where the span
/// stays below `L/4`, 4 and `8 / max(growth, 1e-3)` so that `T(t-s)` does not
/// amplify round-off.
pub fn residual_probe(
    model: &GeneratorModel,
    x: &SampledFunction,
    y: &SampledFunction,
    seed: u64,
    count: usize,
) -> Result<ResidualProbe> {
    let grid = *x.grid();
    if y.grid() != &grid || x.dim() != model.dim() || y.dim() != model.dim() {
        return Err(Error::Parameter(
            "x, y and the generator must agree in grid and dimension".into(),
        ));
    }
    let h = grid.step();
    let growth = model.growth_bound().max(1e-3);
    let span = (grid.period() / 4.0).min(4.0).min(8.0 / growth);
    let max_steps = ((span / h).floor() as usize).max(16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan: Vec<(usize, usize)> = (0..count)
        .map(|_| (rng.gen_range(0..grid.len()), rng.gen_range(16..=max_steps)))
        .collect();
    let longest = plan.iter().map(|p| p.1).max().unwrap_or(0);
    let powers = propagators(model, h, longest);
    let pairs: Vec<(f64, f64, f64)> = plan
        .iter()
        .map(|&(j, n)| {
            let r = residual_at(model, x, y, j as i64, n, &powers);
            let s = grid.time(j);
            (s, s + n as f64 * h, r)
        })
        .collect();
    let max_residual = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(ResidualProbe { pairs, max_residual })
}
