//! Bounded whole-line solutions of `x' = Ax + y` for matrix generators `A`.
//!
//! Two independent inverses of `L = -d/dt + A` are provided: convolution with
//! the dichotomy Green kernel ([`green`]) for hyperbolic `A`, and the Fejér
//! band sum of windowed resolvent kernels ([`band_solver`]) which needs only
//! `sigma(A) ∩ iR = ∅`. Functions live on a periodic grid whose lattice
//! frequencies `k/m` are exact.
//!
//! ```
//! use parabolic_core::{build_sampled_function, solve_green, GeneratorModel, TimeGrid};
//! use parabolic_core::linalg::CVec;
//! use num_complex::Complex64;
//!
//! let a = GeneratorModel::from_real_rows(&[&[-2.0]]).unwrap();
//! let grid = TimeGrid::default();
//! let y = build_sampled_function(grid, 1, &[(1.0, CVec::from_element(1, Complex64::new(1.0, 0.0)))]).unwrap();
//! let x = solve_green(&a, &y).unwrap();
//! assert!((x.sup_norm() - 1.0 / 5f64.sqrt()).abs() < 1e-10);
//! ```

// `!(x > 0.0)` is deliberate: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod band_solver;
pub mod dichotomy;
pub mod error;
pub mod green;
pub mod grid;
pub mod linalg;
pub mod nonlinear;
pub mod semigroup;

pub use band::{
    as_membership_criterion, as_norm, as_norm_value, as_tilde_norm, band_filter, beurling_spectrum, fejer_hat,
    BandDecomposition, FejerWindow, MembershipReport, SpectrumEstimate, Verdict,
};
pub use band_solver::{
    band_kernel, band_kernel_bound, inverse_norm_certificate, solve_band, solve_band_limited,
    verify_window_kernel_bound, BandKernel, BandReport, BandSolver, SymbolNorms, WindowBoundCheck, WindowKernel,
    WindowSymbol,
};
pub use dichotomy::{
    check_hyperbolic, green_kernel, kernel_l1_norm, riesz_projections, DichotomySplit, GreenKernel, KernelL1,
    L1Estimate,
};
pub use error::{Error, Result};
pub use green::{mild_residual, residual_probe, solve_green, GreenSolver, ResidualProbe};
pub use grid::{
    build_sampled_function, convolve, fourier_transform, inverse_fourier, modulate, modulus_of_continuity, translate,
    NormKind, SampledFunction, ScalarKernel, Spectrum, TimeGrid,
};
pub use nonlinear::{
    apply_nonlinearity, lipschitz_bound, picard_solve, LinearSolverKind, MultilinearTerm, PicardOptions, PicardReport,
    PolynomialNonlinearity,
};
pub use semigroup::{apply_matrix, GeneratorModel, ResolventScan};
