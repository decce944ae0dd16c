//! Small dense complex linear algebra helpers on top of nalgebra.
//!
//! Everything here works on `d x d` matrices with `d` in the single digits, so
//! the routines favour accuracy and simplicity over blocking.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Builds a complex matrix from real entries, row-major.
pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let d = rows.len();
    let c = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(d, c, |i, j| Complex64::new(rows[i][j], 0.0))
}

pub fn real_diag(values: &[f64]) -> CMat {
    let d = values.len();
    CMat::from_fn(d, d, |i, j| if i == j { Complex64::new(values[i], 0.0) } else { ZERO })
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    match (m.nrows(), m.ncols()) {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].norm(),
        (2, 2) => singular_values_2x2(m).0,
        // Largest eigenvalue of the Gram matrix; squaring only costs relative
        // accuracy in the small singular values.
        _ => (m.adjoint() * m)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(0.0, f64::max)
            .max(0.0)
            .sqrt(),
    }
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(m: &CMat) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)].norm(),
        2 => singular_values_2x2(m).1,
        _ => m
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
    }
}

// sigma^2 are the roots of s^2 - |M|_F^2 s + |det M|^2.
fn singular_values_2x2(m: &CMat) -> (f64, f64) {
    let fro2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let disc = ((fro2 - 2.0 * det) * (fro2 + 2.0 * det)).max(0.0).sqrt();
    let s1 = ((fro2 + disc) / 2.0).sqrt();
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    (s1, s2)
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    spectral_norm(&(a - b))
}

pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().lu().try_inverse()
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let d = m.nrows();
    if d == 1 {
        return vec![m[(0, 0)]];
    }
    let schur = m.clone().schur();
    let (_, t) = schur.unpack();
    (0..d).map(|i| t[(i, i)]).collect()
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152e0;

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// of degree 3, 5, 7, 9 or 13, chosen from the 1-norm.
pub fn expm(a: &CMat) -> CMat {
    let d = a.nrows();
    if d == 1 {
        return CMat::from_element(1, 1, a[(0, 0)].exp());
    }
    let eye = identity(d);
    let n1 = norm1(a);
    for &(m, theta) in &THETA {
        if n1 <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(a, coeffs, &eye);
        }
    }
    let s = if n1 > THETA13 {
        (n1 / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * Complex64::new(2f64.powi(-s), 0.0);
    let mut r = pade13(&scaled, &eye);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn scale(m: &CMat, c: f64) -> CMat {
    m * Complex64::new(c, 0.0)
}

fn pade_low(a: &CMat, b: &[f64], eye: &CMat) -> CMat {
    let a2 = a * a;
    let m = b.len() - 1;
    let mut u = scale(eye, b[1]);
    let mut v = scale(eye, b[0]);
    let mut pow = eye.clone();
    for k in 1..=m / 2 {
        pow = &pow * &a2;
        u += scale(&pow, b[2 * k + 1]);
        v += scale(&pow, b[2 * k]);
    }
    let u = a * u;
    solve_pade(&u, &v)
}

fn pade13(a: &CMat, eye: &CMat) -> CMat {
    let b = &PADE13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scale(&a6, b[13]) + scale(&a4, b[11]) + scale(&a2, b[9]);
    let u = a * (&a6 * inner_u + scale(&a6, b[7]) + scale(&a4, b[5]) + scale(&a2, b[3]) + scale(eye, b[1]));
    let inner_v = scale(&a6, b[12]) + scale(&a4, b[10]) + scale(&a2, b[8]);
    let v = &a6 * inner_v + scale(&a6, b[6]) + scale(&a4, b[4]) + scale(&a2, b[2]) + scale(eye, b[0]);
    solve_pade(&u, &v)
}

fn solve_pade(u: &CMat, v: &CMat) -> CMat {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .expect("Pade denominator is nonsingular inside the theta bounds")
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
