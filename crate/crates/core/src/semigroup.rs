//! Matrix generators, the semigroup `T(t) = exp(tA)`, the resolvent
//! `R(lambda, A) = (A - lambda I)^{-1}` and the scalar certificates built from
//! them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{shift_by_steps, SampledFunction};
use crate::linalg::{self, CMat, I};

/// Tolerance below which `min |Re mu|` counts as touching the imaginary axis.
pub const GAP_TOL: f64 = 1e-8;

/// Distance to the spectrum below which the resolvent is refused.
pub const RESOLVENT_MARGIN: f64 = 1e-12;

/// Default scan step of [`GeneratorModel::resolvent_bound`].
pub const DEFAULT_SCAN_STEP: f64 = 1.0 / 64.0;

/// Relative slack of the certified resolvent supremum over the best sample.
const SUP_REL_TOL: f64 = 1e-7;

/// A `d x d` complex generator together with its cached spectral data.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorModel {
    a: CMat,
    eigenvalues: Vec<Complex64>,
    norm: f64,
}

impl GeneratorModel {
    pub fn new(a: CMat) -> Result<Self> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(Error::Parameter(format!(
                "generator must be a nonempty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter("generator has non-finite entries".into()));
        }
        let eigenvalues = linalg::eigenvalues(&a);
        let norm = linalg::spectral_norm(&a);
        Ok(GeneratorModel { a, eigenvalues, norm })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(linalg::from_real_rows(rows))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.a
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Spectral norm `||A||`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Largest `min_v ||(A - mu)v||` over cached eigenvalues, relative to
    /// `max(1, ||A||)`. Small values certify the cache.
    pub fn spectral_residual(&self) -> f64 {
        let d = self.dim();
        let scale = self.norm.max(1.0);
        self.eigenvalues
            .iter()
            .map(|mu| {
                let shifted = &self.a - linalg::identity(d) * *mu;
                linalg::min_singular_value(&shifted) / scale
            })
            .fold(0.0, f64::max)
    }

    /// `T(t) = exp(tA)`; defined for every real `t` in finite dimension.
    pub fn expm(&self, t: f64) -> CMat {
        linalg::expm(&(&self.a * Complex64::new(t, 0.0)))
    }

    /// `(A - lambda I)^{-1}`.
    pub fn resolvent(&self, lambda: Complex64) -> Result<CMat> {
        let nearest = self
            .eigenvalues
            .iter()
            .map(|mu| (mu - lambda).norm())
            .fold(f64::INFINITY, f64::min);
        if nearest <= RESOLVENT_MARGIN {
            return Err(Error::SingularResolvent(format!(
                "lambda = {lambda} is within {nearest:e} of an eigenvalue"
            )));
        }
        let shifted = &self.a - linalg::identity(self.dim()) * lambda;
        linalg::inverse(&shifted)
            .ok_or_else(|| Error::SingularResolvent(format!("A - lambda I is numerically singular at {lambda}")))
    }

    /// `R(i lambda, A)` for real `lambda`.
    pub fn resolvent_on_axis(&self, lambda: f64) -> Result<CMat> {
        self.resolvent(I * lambda)
    }

    /// `||R(i lambda, A)|| = 1 / sigma_min(A - i lambda)`.
    pub fn resolvent_norm_on_axis(&self, lambda: f64) -> f64 {
        1.0 / self.axis_singular_gap(lambda)
    }

    fn axis_singular_gap(&self, lambda: f64) -> f64 {
        let shifted = &self.a - linalg::identity(self.dim()) * (I * lambda);
        linalg::min_singular_value(&shifted)
    }

    /// `min |Re mu|` over the spectrum; zero means `sigma(A)` meets `iR`.
    pub fn check_spectral_gap(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|mu| mu.re.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn has_spectral_gap(&self) -> bool {
        self.check_spectral_gap() > GAP_TOL
    }

    pub(crate) fn require_gap(&self) -> Result<f64> {
        let gap = self.check_spectral_gap();
        if gap > GAP_TOL {
            Ok(gap)
        } else {
            Err(Error::SpectrumOnAxis(format!(
                "min |Re mu| = {gap:e} over eigenvalues {:?}",
                self.eigenvalues
            )))
        }
    }

    /// Spectral abscissa `max Re mu`. In finite dimension this is the growth
    /// bound of the semigroup, up to polynomial factors from Jordan blocks.
    pub fn growth_bound(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|mu| mu.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Certified upper estimate of `M = sup_lambda ||R(i lambda, A)||`.
    ///
    /// The axis is scanned on `[-Lambda, Lambda]` with step `dlambda`,
    /// `Lambda = max(2||A||, 4)`. Since `lambda -> sigma_min(A - i lambda)`
    /// is 1-Lipschitz, every scan interval gets a rigorous upper bound for the
    /// resolvent norm; intervals whose bound exceeds the best sample are
    /// bisected until it does not. Beyond `Lambda` the Neumann bound
    /// `1 / (|lambda| - ||A||)` applies.
    pub fn resolvent_bound(&self, dlambda: f64) -> Result<ResolventScan> {
        self.require_gap()?;
        if !(dlambda > 0.0) {
            return Err(Error::Parameter(format!("scan step {dlambda} must be positive")));
        }
        let half_width = (2.0 * self.norm).max(4.0);
        let count = (2.0 * half_width / dlambda).ceil() as usize;
        let lambdas: Vec<f64> = (0..=count).map(|l| -half_width + l as f64 * dlambda).collect();
        let gaps: Vec<f64> = lambdas.iter().map(|&l| self.axis_singular_gap(l)).collect();
        let values: Vec<f64> = gaps.iter().map(|g| 1.0 / g).collect();
        let scan_max = values.iter().copied().fold(0.0, f64::max);

        let mut best = scan_max;
        let mut evaluations = lambdas.len();
        let mut stack: Vec<(f64, f64, f64, f64)> = lambdas
            .windows(2)
            .zip(gaps.windows(2))
            .map(|(l, g)| (l[0], l[1], g[0], g[1]))
            .collect();
        let mut bound = 0.0_f64;
        while let Some((a, b, ga, gb)) = stack.pop() {
            let w = b - a;
            let low = 0.5 * (ga + gb - w);
            let upper = if low > 0.0 { 1.0 / low } else { f64::INFINITY };
            if upper <= best * (1.0 + SUP_REL_TOL) {
                bound = bound.max(upper);
                continue;
            }
            if w <= 1e-13 * (1.0 + a.abs()) || evaluations > 2_000_000 {
                if upper.is_finite() {
                    bound = bound.max(upper);
                    continue;
                }
                return Err(Error::SpectrumOnAxis(format!(
                    "resolvent norm cannot be bounded near lambda = {a}"
                )));
            }
            let mid = 0.5 * (a + b);
            let gm = self.axis_singular_gap(mid);
            evaluations += 1;
            best = best.max(1.0 / gm);
            stack.push((a, mid, ga, gm));
            stack.push((mid, b, gm, gb));
        }
        let tail_bound = 1.0 / (half_width - self.norm);
        Ok(ResolventScan {
            lambdas,
            values,
            step: dlambda,
            half_width,
            scan_max,
            refined_max: best,
            tail_bound,
            m: bound.max(best).max(tail_bound),
            evaluations,
        })
    }

    /// Howland action `(T(t)x)(s) = T(t) x(s - t)` for on-grid `t >= 0`.
    pub fn howland_apply(&self, t: f64, x: &SampledFunction) -> Result<SampledFunction> {
        if t < 0.0 {
            return Err(Error::Parameter(format!("Howland time t = {t} must be >= 0")));
        }
        if x.dim() != self.dim() {
            return Err(Error::Parameter("dimension mismatch".into()));
        }
        let s = x.grid().steps(t)?;
        let shifted = shift_by_steps(x, -s);
        Ok(apply_matrix(&self.expm(t), &shifted))
    }
}

/// Pointwise `m * x(t_j)`.
pub fn apply_matrix(m: &CMat, x: &SampledFunction) -> SampledFunction {
    let d = x.dim();
    let n = x.grid().len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; m.nrows()];
    for (r, row) in out.iter_mut().enumerate() {
        for c in 0..d {
            let coeff = m[(r, c)];
            if coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, v) in row.iter_mut().zip(x.component(c)) {
                *o += coeff * v;
            }
        }
    }
    SampledFunction::from_components(*x.grid(), out, x.is_exact()).expect("shapes agree by construction")
}

/// Result of [`GeneratorModel::resolvent_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventScan {
    /// Uniform scan abscissae on `[-half_width, half_width]`.
    pub lambdas: Vec<f64>,
    /// `||R(i lambda, A)||` at `lambdas`.
    pub values: Vec<f64>,
    pub step: f64,
    pub half_width: f64,
    pub scan_max: f64,
    /// Largest norm seen, including bisection points.
    pub refined_max: f64,
    /// Neumann bound valid for `|lambda| >= half_width`.
    pub tail_bound: f64,
    /// Reported supremum `M`, an upper estimate.
    pub m: f64,
    pub evaluations: usize,
}
