//! Oracles built from an explicit eigendecomposition `A = V D V^{-1}`; none of
//! them touch the library's own linear algebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use parabolic_core::{build_sampled_function, GeneratorModel, SampledFunction, TimeGrid};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spectral_norm(m: &DMatrix<C>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn vec_norm(v: &DVector<C>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub struct Oracle {
    pub v: DMatrix<C>,
    pub vinv: DMatrix<C>,
    pub mu: Vec<C>,
}

impl Oracle {
    /// Eigenvalues with `|Re mu|` in `[re_lo, re_hi]` of random sign and
    /// `Im mu` in `[-3, 3]`; `V = I + 0.25 * noise`.
    pub fn random(r: &mut ChaCha8Rng, dim: usize, re_lo: f64, re_hi: f64) -> Self {
        let mu: Vec<C> = (0..dim)
            .map(|_| {
                let re = r.gen_range(re_lo..=re_hi) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
                C::new(re, r.gen_range(-3.0..3.0))
            })
            .collect();
        Self::with_eigenvalues(r, mu)
    }

    pub fn with_eigenvalues(r: &mut ChaCha8Rng, mu: Vec<C>) -> Self {
        let d = mu.len();
        let v = DMatrix::<C>::from_fn(d, d, |i, j| {
            let noise = C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)) * 0.25;
            if i == j {
                C::new(1.0, 0.0) + noise
            } else {
                noise
            }
        });
        let vinv = v.clone().try_inverse().expect("well conditioned eigenvectors");
        Oracle { v, vinv, mu }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    fn conj_diag(&self, f: impl Fn(C) -> C) -> DMatrix<C> {
        let d = DMatrix::<C>::from_diagonal(&DVector::from_iterator(self.dim(), self.mu.iter().map(|&m| f(m))));
        &self.v * d * &self.vinv
    }

    pub fn matrix(&self) -> DMatrix<C> {
        self.conj_diag(|m| m)
    }

    pub fn model(&self) -> GeneratorModel {
        GeneratorModel::new(self.matrix()).expect("finite generator")
    }

    /// `(A - i lambda)^{-1}`.
    pub fn resolvent(&self, lambda: f64) -> DMatrix<C> {
        self.conj_diag(|m| (m - C::new(0.0, lambda)).inv())
    }

    pub fn expm(&self, t: f64) -> DMatrix<C> {
        self.conj_diag(|m| (m * t).exp())
    }

    /// Projection onto the span of eigenvectors with `Re mu < 0`.
    pub fn stable_projection(&self) -> DMatrix<C> {
        self.conj_diag(|m| if m.re < 0.0 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) })
    }

    /// `int_s^t T(t - tau) c exp(i omega tau) dtau` in closed form.
    pub fn forced_integral(&self, s: f64, t: f64, omega: f64, c: &DVector<C>) -> DVector<C> {
        let io = C::new(0.0, omega);
        let eo_t = (io * t).exp();
        let eo_s = (io * s).exp();
        self.conj_diag(|m| (eo_t - (m * (t - s)).exp() * eo_s) / (io - m)) * c
    }

    /// Sampled lower bound of `sup ||R(i lambda)||` on `[-half, half]`.
    pub fn resolvent_sup_sampled(&self, half: f64, step: f64) -> f64 {
        let n = (2.0 * half / step).ceil() as usize;
        let mut best: f64 = 0.0;
        for i in 0..=n {
            best = best.max(spectral_norm(&self.resolvent(-half + i as f64 * step)));
        }
        // the peaks sit near Im mu; sample them exactly as well
        for m in &self.mu {
            best = best.max(spectral_norm(&self.resolvent(m.im)));
        }
        best
    }
}

/// A trigonometric polynomial with explicit terms.
pub struct Trig {
    pub terms: Vec<(f64, DVector<C>)>,
}

impl Trig {
    /// `count` lattice frequencies with `|omega| <= max_freq` and complex
    /// coefficients of modulus at most one per component.
    pub fn random(r: &mut ChaCha8Rng, grid: &TimeGrid, dim: usize, count: usize, max_freq: f64) -> Self {
        let kmax = (max_freq * grid.m() as f64).floor() as i64;
        let terms = (0..count)
            .map(|_| {
                let k = r.gen_range(-kmax..=kmax);
                let c = DVector::<C>::from_fn(dim, |_, _| C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
                (grid.frequency(k), c)
            })
            .collect();
        Trig { terms }
    }

    pub fn at(&self, t: f64) -> DVector<C> {
        let d = self.terms[0].1.len();
        let mut out = DVector::<C>::zeros(d);
        for (w, c) in &self.terms {
            out += c * C::new(0.0, w * t).exp();
        }
        out
    }

    /// Samples `exp(i omega t_j)` directly, without the library builder.
    pub fn sample(&self, grid: &TimeGrid) -> SampledFunction {
        let d = self.terms[0].1.len();
        let mut values = vec![vec![C::new(0.0, 0.0); grid.len()]; d];
        for j in 0..grid.len() {
            let v = self.at(grid.time(j));
            for c in 0..d {
                values[c][j] = v[c];
            }
        }
        SampledFunction::from_components(*grid, values, false).expect("consistent samples")
    }

    /// Exact-spectrum input for the solvers.
    pub fn build(&self, grid: &TimeGrid) -> SampledFunction {
        let d = self.terms[0].1.len();
        build_sampled_function(*grid, d, &self.terms).expect("lattice frequencies")
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.0).collect()
    }
}

pub fn value_at(x: &SampledFunction, j: usize) -> DVector<C> {
    DVector::from_iterator(x.dim(), (0..x.dim()).map(|c| x.component(c)[j]))
}

/// `||x(t) - T(t - s) x(s) + int_s^t T(t - tau) y(tau) dtau||` at grid
/// nodes `js < jt` for a trigonometric `y`.
pub fn mild_residual_oracle(o: &Oracle, x: &SampledFunction, y: &Trig, js: usize, jt: usize) -> f64 {
    let grid = x.grid();
    let (s, t) = (grid.time(js), grid.time(jt));
    let mut r = value_at(x, jt) - o.expm(t - s) * value_at(x, js);
    for (w, c) in &y.terms {
        r += o.forced_integral(s, t, *w, c);
    }
    vec_norm(&r)
}

/// `(2/pi) M (4 + 4M + 2M^2)^{1/2}`.
pub fn kernel_bound_formula(m: f64) -> f64 {
    2.0 / std::f64::consts::PI * m * (4.0 + 4.0 * m + 2.0 * m * m).sqrt()
}

pub fn inverse_bound_formula(m: f64) -> f64 {
    9.0 * kernel_bound_formula(m)
}
