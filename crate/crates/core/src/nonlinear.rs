//! Polynomial nonlinearities `F(v) = F_1(v) + F_2(v, v) + ... + F_n(v, ..., v)`
//! and Picard iteration for the mild fixed point `x = z + L^{-1} F(x)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::band::{as_norm_value, beurling_spectrum, DEFAULT_SPECTRUM_THRESHOLD};
use crate::band_solver::{inverse_norm_certificate, BandSolver, DEFAULT_OVERSAMPLE};
use crate::error::{Error, Result};
use crate::green::GreenSolver;
use crate::grid::SampledFunction;
use crate::linalg::{self, CMat, CVec, ZERO};
use crate::semigroup::{GeneratorModel, DEFAULT_SCAN_STEP};

/// Tolerance of the tensor symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

const NORM_STARTS: usize = 32;
const NORM_SWEEPS: usize = 60;

/// How an operator norm was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    /// Largest singular value, exact for linear terms.
    Svd,
    /// Seeded random starts refined by alternating power iteration; a lower
    /// estimate of the true norm.
    SampledPowerIteration,
}

impl NormMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            NormMethod::Svd => "svd",
            NormMethod::SampledPowerIteration => "sampled-power-iteration",
        }
    }
}

/// Symmetric `k`-linear map on `C^d` with values in `C^d`.
///
/// Coefficients are stored densely with the output index first:
/// `F(v_1, ..., v_k)_o = sum T[o, i_1, ..., i_k] v_1[i_1] ... v_k[i_k]`,
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearTerm {
    order: usize,
    dim: usize,
    coeffs: Vec<Complex64>,
    norm: f64,
    method: NormMethod,
}

impl MultilinearTerm {
    /// Validates shape and symmetry, then estimates the norm with `seed`.
    pub fn new(dim: usize, order: usize, coeffs: Vec<Complex64>, seed: u64) -> Result<Self> {
        if dim == 0 || order == 0 {
            return Err(Error::Parameter("tensor order and dimension must be positive".into()));
        }
        let expected = dim.pow(order as u32 + 1);
        if coeffs.len() != expected {
            return Err(Error::Parameter(format!(
                "order-{order} tensor on C^{dim} needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        let mut term = MultilinearTerm {
            order,
            dim,
            coeffs,
            norm: 0.0,
            method: NormMethod::Svd,
        };
        let asym = term.symmetry_defect();
        if asym > SYMMETRY_TOL {
            return Err(Error::Parameter(format!(
                "order-{order} tensor is not symmetric in its arguments (defect {asym:e})"
            )));
        }
        let (norm, method) = term.estimate_norm(seed);
        term.norm = norm;
        term.method = method;
        Ok(term)
    }

    /// Averages over argument permutations before validation.
    pub fn symmetrized(dim: usize, order: usize, coeffs: Vec<Complex64>, seed: u64) -> Result<Self> {
        let expected = dim.pow(order as u32 + 1);
        if dim == 0 || order == 0 || coeffs.len() != expected {
            return Err(Error::Parameter(format!(
                "order-{order} tensor on C^{dim} needs {expected} coefficients"
            )));
        }
        let perms = permutations(order);
        let block = dim.pow(order as u32);
        let mut sym = vec![ZERO; expected];
        for o in 0..dim {
            for flat in 0..block {
                let idx = unflatten(flat, dim, order);
                let mut acc = ZERO;
                for p in &perms {
                    let permuted: Vec<usize> = p.iter().map(|&i| idx[i]).collect();
                    acc += coeffs[o * block + flatten(&permuted, dim)];
                }
                sym[o * block + flat] = acc / perms.len() as f64;
            }
        }
        Self::new(dim, order, sym, seed)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Estimated `sup_{|v_i| = 1} |F(v_1, ..., v_k)|`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn norm_method(&self) -> NormMethod {
        self.method
    }

    fn symmetry_defect(&self) -> f64 {
        if self.order == 1 {
            return 0.0;
        }
        let block = self.dim.pow(self.order as u32);
        let perms = permutations(self.order);
        let mut worst: f64 = 0.0;
        for o in 0..self.dim {
            for flat in 0..block {
                let idx = unflatten(flat, self.dim, self.order);
                let base = self.coeffs[o * block + flat];
                for p in &perms {
                    let permuted: Vec<usize> = p.iter().map(|&i| idx[i]).collect();
                    let other = self.coeffs[o * block + flatten(&permuted, self.dim)];
                    worst = worst.max((base - other).norm());
                }
            }
        }
        worst
    }

    /// `F(v_1, ..., v_k)`.
    pub fn apply(&self, args: &[&CVec]) -> CVec {
        debug_assert_eq!(args.len(), self.order);
        // Contract the trailing index repeatedly.
        let mut current = self.coeffs.clone();
        let mut width = self.dim.pow(self.order as u32 + 1);
        for v in args.iter().rev() {
            width /= self.dim;
            let mut next = vec![ZERO; width];
            for (i, n) in next.iter_mut().enumerate() {
                let row = &current[i * self.dim..(i + 1) * self.dim];
                *n = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            }
            current = next;
        }
        CVec::from_vec(current)
    }

    /// `F(v, ..., v)`.
    pub fn apply_diagonal(&self, v: &CVec) -> CVec {
        let args: Vec<&CVec> = vec![v; self.order];
        self.apply(&args)
    }

    /// Matrix of `u -> F(v_1, ..., u, ..., v_k)` with `u` in `slot`.
    fn slot_matrix(&self, args: &[CVec], slot: usize) -> CMat {
        let d = self.dim;
        let mut m = CMat::zeros(d, d);
        for j in 0..d {
            let mut e = CVec::zeros(d);
            e[j] = Complex64::new(1.0, 0.0);
            let refs: Vec<&CVec> = (0..self.order).map(|i| if i == slot { &e } else { &args[i] }).collect();
            m.set_column(j, &self.apply(&refs));
        }
        m
    }

    fn estimate_norm(&self, seed: u64) -> (f64, NormMethod) {
        let d = self.dim;
        let full = CMat::from_fn(d, d.pow(self.order as u32), |o, j| {
            self.coeffs[o * d.pow(self.order as u32) + j]
        });
        if self.order == 1 {
            return (linalg::spectral_norm(&full), NormMethod::Svd);
        }
        if full.iter().all(|c| *c == ZERO) {
            return (0.0, NormMethod::SampledPowerIteration);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: f64 = 0.0;
        for _ in 0..NORM_STARTS {
            let mut args: Vec<CVec> = (0..self.order).map(|_| random_unit(&mut rng, d)).collect();
            let mut value = 0.0;
            for _ in 0..NORM_SWEEPS {
                for slot in 0..self.order {
                    let m = self.slot_matrix(&args, slot);
                    let svd = m.svd(false, true);
                    let (i, s) =
                        svd.singular_values
                            .iter()
                            .enumerate()
                            .fold((0, -1.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
                    let vt = svd.v_t.expect("requested");
                    args[slot] = vt.row(i).transpose().map(|z| z.conj());
                    value = s;
                }
            }
            best = best.max(value);
        }
        (best, NormMethod::SampledPowerIteration)
    }
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let n = linalg::vec_norm(&v).max(f64::MIN_POSITIVE);
    v / Complex64::new(n, 0.0)
}

fn flatten(idx: &[usize], d: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * d + i)
}

fn unflatten(mut flat: usize, d: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in (0..k).rev() {
        out[slot] = flat % d;
        flat /= d;
    }
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// `F = F_1 + ... + F_n`, terms of distinct orders.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialNonlinearity {
    dim: usize,
    terms: Vec<MultilinearTerm>,
}

impl PolynomialNonlinearity {
    pub fn new(dim: usize, mut terms: Vec<MultilinearTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        if terms.iter().any(|t| t.dim != dim) {
            return Err(Error::Parameter("every tensor must act on the same dimension".into()));
        }
        terms.sort_by_key(|t| t.order);
        if terms.windows(2).any(|w| w[0].order == w[1].order) {
            return Err(Error::Parameter("at most one tensor per order".into()));
        }
        Ok(PolynomialNonlinearity { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        PolynomialNonlinearity { dim, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[MultilinearTerm] {
        &self.terms
    }

    /// Highest order present, zero for `F = 0`.
    pub fn degree(&self) -> usize {
        self.terms.last().map_or(0, |t| t.order)
    }

    pub fn apply_vector(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for t in &self.terms {
            out += t.apply_diagonal(v);
        }
        out
    }
}

/// `t_j -> F(x(t_j))`.
pub fn apply_nonlinearity(f: &PolynomialNonlinearity, x: &SampledFunction) -> Result<SampledFunction> {
    if f.dim() != x.dim() {
        return Err(Error::Parameter(format!(
            "nonlinearity acts on C^{}, function has dimension {}",
            f.dim(),
            x.dim()
        )));
    }
    let grid = *x.grid();
    let n = grid.len();
    let d = f.dim();
    let mut values = vec![vec![ZERO; n]; d];
    if f.degree() > 0 {
        for j in 0..n {
            let v = f.apply_vector(&x.value(j));
            for c in 0..d {
                values[c][j] = v[c];
            }
        }
    }
    Ok(SampledFunction::from_components(grid, values, false)?.with_exact(x.is_exact() && f.degree() <= 1))
}

/// `(18/pi) M (4 + 4M + 2M^2)^{1/2} sum_k k ||F_k|| beta^{k-1}`.
pub fn lipschitz_bound(f: &PolynomialNonlinearity, m: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("ball radius beta = {beta} must be positive")));
    }
    let cert = inverse_norm_certificate(m)?;
    let sum: f64 = f
        .terms
        .iter()
        .map(|t| t.order as f64 * t.norm * beta.powi(t.order as i32 - 1))
        .sum();
    Ok(cert * sum)
}

/// Which linear solver provides `L^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolverKind {
    /// Green kernel; needs a hyperbolic generator.
    Green,
    /// Band sum; needs only a spectral gap.
    Band,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub beta: f64,
    pub tol: f64,
    pub maxit: usize,
    pub solver: LinearSolverKind,
    /// Starting point; `z` when absent.
    pub start: Option<SampledFunction>,
}

impl PicardOptions {
    pub fn new(beta: f64) -> Self {
        PicardOptions {
            beta,
            tol: 1e-10,
            maxit: 200,
            solver: LinearSolverKind::Green,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    /// `z = L^{-1} y`.
    pub z: SampledFunction,
    pub x: SampledFunction,
    pub beta: f64,
    pub m: f64,
    pub l_bound: f64,
    /// Largest ratio `||Phi x_{m+1} - Phi x_m|| / ||x_{m+1} - x_m||` seen.
    pub l_empirical: f64,
    /// `||Phi(z)||_as`.
    pub phi_z_norm: f64,
    /// `L_bound < 1`.
    pub contraction_holds: bool,
    /// `||Phi(z)||_as < beta (1 - L_bound)`.
    pub invariance_holds: bool,
    /// `||x_{m+1} - x_m||_as` per step.
    pub residuals: Vec<f64>,
    /// `||x_{m+1} - x_m||_sup` per step.
    pub sup_residuals: Vec<f64>,
    /// `||x - z - Phi x||_as`.
    pub final_residual: f64,
    /// `||x - z||_as`.
    pub distance_from_z: f64,
    pub iterations: usize,
    pub converged: bool,
    pub norm_methods: Vec<(usize, f64, NormMethod)>,
}

impl PicardReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.contraction_holds && self.invariance_holds
    }
}

enum Inverse {
    Green(GreenSolver),
    Band(BandSolver),
}

impl Inverse {
    fn apply(&self, y: &SampledFunction) -> Result<SampledFunction> {
        match self {
            Inverse::Green(s) => s.solve(y),
            Inverse::Band(s) => s.solve_fast(y),
        }
    }
}

/// Picard iteration `x_{m+1} = z + L^{-1} F(x_m)` in the `as`-norm.
pub fn picard_solve(
    model: &GeneratorModel,
    y: &SampledFunction,
    f: &PolynomialNonlinearity,
    opts: &PicardOptions,
) -> Result<PicardReport> {
    if !(opts.beta > 0.0) {
        return Err(Error::Parameter(format!(
            "ball radius beta = {} must be positive",
            opts.beta
        )));
    }
    if !(opts.tol > 0.0) || opts.maxit == 0 {
        return Err(Error::Parameter("tolerance and iteration cap must be positive".into()));
    }
    if f.dim() != model.dim() || y.dim() != model.dim() {
        return Err(Error::Parameter(
            "generator, data and nonlinearity dimensions differ".into(),
        ));
    }
    let grid = *y.grid();
    let spectrum = beurling_spectrum(y, DEFAULT_SPECTRUM_THRESHOLD)?;
    let max_freq = spectrum.frequencies.iter().map(|f| f.abs()).fold(0.0, f64::max);
    let reach = f.degree().max(1) as f64 * max_freq + 1.0;
    if reach >= grid.nyquist() {
        return Err(Error::Nyquist(format!(
            "degree {} times max frequency {max_freq} plus margin 1 reaches the Nyquist limit {}",
            f.degree(),
            grid.nyquist()
        )));
    }
    let (inverse, z) = match opts.solver {
        LinearSolverKind::Green => {
            let s = GreenSolver::new(model, &grid)?;
            let z = s.solve(y)?;
            (Inverse::Green(s), z)
        }
        LinearSolverKind::Band => {
            let s = BandSolver::new(model, &grid, DEFAULT_OVERSAMPLE)?;
            let (z, _) = s.solve(y)?;
            (Inverse::Band(s), z)
        }
    };
    let m = model.resolvent_bound(DEFAULT_SCAN_STEP)?.m;
    let l_bound = lipschitz_bound(f, m, opts.beta)?;
    let phi = |x: &SampledFunction| -> Result<SampledFunction> { inverse.apply(&apply_nonlinearity(f, x)?) };
    let phi_z_norm = as_norm_value(&phi(&z)?);
    let contraction_holds = l_bound < 1.0;
    let invariance_holds = phi_z_norm < opts.beta * (1.0 - l_bound);

    let mut x = match &opts.start {
        Some(s) => {
            if s.grid() != &grid || s.dim() != model.dim() {
                return Err(Error::Parameter("starting point must share grid and dimension".into()));
            }
            s.clone()
        }
        None => z.clone(),
    };
    let noise_floor = 1e-10 * (1.0 + as_norm_value(&z));
    let mut residuals = Vec::new();
    let mut sup_residuals = Vec::new();
    let mut l_empirical: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.maxit {
        let next = z.add(&phi(&x)?)?;
        let diff = next.sub(&x)?;
        let r = as_norm_value(&diff);
        if let Some(&prev) = residuals.last() {
            if prev > noise_floor {
                l_empirical = l_empirical.max(r / prev);
            }
        }
        residuals.push(r);
        sup_residuals.push(diff.sup_norm());
        x = next;
        iterations += 1;
        if r < opts.tol {
            converged = true;
            break;
        }
    }
    if contraction_holds && invariance_holds && !converged {
        return Err(Error::ContractionViolation(format!(
            "no convergence to {} in {} steps with L_bound = {l_bound}",
            opts.tol, opts.maxit
        )));
    }
    let final_residual = as_norm_value(&x.sub(&z)?.sub(&phi(&x)?)?);
    let distance_from_z = as_norm_value(&x.sub(&z)?);
    Ok(PicardReport {
        z,
        x,
        beta: opts.beta,
        m,
        l_bound,
        l_empirical,
        phi_z_norm,
        contraction_holds,
        invariance_holds,
        residuals,
        sup_residuals,
        final_residual,
        distance_from_z,
        iterations,
        converged,
        norm_methods: f.terms.iter().map(|t| (t.order, t.norm, t.method)).collect(),
    })
}
