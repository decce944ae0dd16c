use num_complex::Complex64 as C;
use parabolic_core::linalg::{CMat, CVec};
use parabolic_core::{
    as_norm, as_norm_value, band_filter, build_sampled_function, mild_residual, riesz_projections, solve_green,
    translate, BandSolver, Error, GeneratorModel, GreenSolver, SampledFunction, TimeGrid,
};
use proptest::prelude::*;

fn grid() -> TimeGrid {
    TimeGrid::default()
}

/// Upper triangular generator with the given diagonal; hyperbolic when no
/// diagonal entry is near the imaginary axis.
fn triangular(diag: &[f64], upper: f64) -> GeneratorModel {
    let d = diag.len();
    let a = CMat::from_fn(d, d, |i, j| {
        if i == j {
            C::new(diag[i], 0.3 * i as f64)
        } else if j > i {
            C::new(upper, -0.5 * upper)
        } else {
            C::new(0.0, 0.0)
        }
    });
    GeneratorModel::new(a).unwrap()
}

fn trig(dim: usize, terms: &[(i64, f64, f64)]) -> SampledFunction {
    let g = grid();
    let t: Vec<(f64, CVec)> = terms
        .iter()
        .enumerate()
        .map(|(i, &(k, re, im))| {
            let c = CVec::from_fn(dim, |r, _| C::new(re, im) * (1.0 + 0.5 * ((r + i) % 3) as f64));
            (g.frequency(k), c)
        })
        .collect();
    build_sampled_function(g, dim, &t).unwrap()
}

fn diag_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        (0.9f64..2.5, any::<bool>()).prop_map(|(r, s)| if s { r } else { -r }),
        1..=4,
    )
}

fn terms_strategy() -> impl Strategy<Value = Vec<(i64, f64, f64)>> {
    prop::collection::vec((-48i64..=48, -1.0f64..1.0, -1.0f64..1.0), 1..=4)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    #[test]
    fn green_inverse_is_linear(diag in diag_strategy(), t1 in terms_strategy(), t2 in terms_strategy(), a in -2.0f64..2.0) {
        let model = triangular(&diag, 0.4);
        let d = diag.len();
        let (y1, y2) = (trig(d, &t1), trig(d, &t2));
        let solver = GreenSolver::new(&model, &grid()).unwrap();
        let lhs = solver.solve(&y1.combine(C::new(a, 0.5), &y2, C::new(1.0, 0.0)).unwrap()).unwrap();
        let rhs = solver.solve(&y1).unwrap().combine(C::new(a, 0.5), &solver.solve(&y2).unwrap(), C::new(1.0, 0.0)).unwrap();
        prop_assert!(lhs.sup_distance(&rhs).unwrap() <= 1e-12 * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn green_inverse_commutes_with_translation(diag in diag_strategy(), t in terms_strategy(), steps in -500i64..500) {
        let model = triangular(&diag, 0.2);
        let y = trig(diag.len(), &t);
        let tau = steps as f64 * grid().step();
        let x = solve_green(&model, &y).unwrap();
        let shifted = solve_green(&model, &translate(&y, tau).unwrap()).unwrap();
        let want = translate(&x, tau).unwrap();
        prop_assert!(shifted.sup_distance(&want).unwrap() <= 1e-12 * (1.0 + x.sup_norm()));
    }

    #[test]
    fn green_solution_is_mild(diag in diag_strategy(), t in terms_strategy(), s in -20.0f64..10.0, len in 0.1f64..2.0) {
        let model = triangular(&diag, 0.3);
        let y = trig(diag.len(), &t);
        let x = solve_green(&model, &y).unwrap();
        let r = mild_residual(&model, &x, &y, s, s + len).unwrap();
        prop_assert!(r <= 1e-8 * (1.0 + y.sup_norm()), "residual {r}");
    }

    #[test]
    fn band_components_reassemble(t in terms_strategy(), d in 1usize..=3) {
        let y = trig(d, &t);
        let (_, dec) = as_norm(&y);
        prop_assert!(dec.reassemble().sup_distance(&y).unwrap() <= 1e-13 * (1.0 + y.sup_norm()));
        let mut sum = SampledFunction::zeros(grid(), d);
        for n in -4..=4 {
            sum = sum.add(&band_filter(&y, n as f64)).unwrap();
        }
        prop_assert!(sum.sup_distance(&y).unwrap() <= 1e-13 * (1.0 + y.sup_norm()));
    }

    #[test]
    fn as_norm_is_a_norm(t1 in terms_strategy(), t2 in terms_strategy(), a in -3.0f64..3.0) {
        let (x, y) = (trig(2, &t1), trig(2, &t2));
        let s = x.add(&y).unwrap();
        prop_assert!(as_norm_value(&s) <= as_norm_value(&x) + as_norm_value(&y) + 1e-12);
        let scaled = as_norm_value(&x.scale(C::new(a, 0.0)));
        prop_assert!((scaled - a.abs() * as_norm_value(&x)).abs() <= 1e-12 * (1.0 + scaled));
        prop_assert!(x.sup_norm() <= as_norm_value(&x));
    }

    #[test]
    fn projections_commute_with_semigroup(diag in diag_strategy(), upper in -1.0f64..1.0, t in 0.0f64..3.0) {
        let model = triangular(&diag, upper);
        let split = riesz_projections(&model, 256).unwrap();
        prop_assert!(split.idempotency_error() <= 1e-9);
        prop_assert!(split.complement_error() <= 1e-12);
        let tt = model.expm(t);
        prop_assert!(split.commutation_error(&model, t) <= 1e-9 * (1.0 + parabolic_core::linalg::spectral_norm(&tt)));
        let stable = diag.iter().filter(|&&r| r < 0.0).count() as f64;
        prop_assert!((split.trace_in() - stable).abs() <= 1e-9);
    }

    #[test]
    fn band_solver_matches_green(diag in diag_strategy(), t in prop::collection::vec((-24i64..=24, -1.0f64..1.0, -1.0f64..1.0), 1..=2)) {
        let model = triangular(&diag, 0.25);
        let y = trig(diag.len(), &t);
        let xg = solve_green(&model, &y).unwrap();
        let solver = BandSolver::new(&model, &grid(), 8).unwrap();
        let (xb, report) = solver.solve(&y).unwrap();
        prop_assert!(xb.sup_distance(&xg).unwrap() <= 1e-9 * (1.0 + xg.sup_norm()));
        prop_assert!(report.all_kernels_ok() && report.certificate_ok);
    }
}

#[test]
fn zero_forcing_gives_zero_solution() {
    let model = triangular(&[-1.0, 1.5], 0.7);
    let x = solve_green(&model, &SampledFunction::zeros(grid(), 2)).unwrap();
    assert_eq!(x.sup_norm(), 0.0);
}

#[test]
fn rejects_off_lattice_and_nyquist_frequencies() {
    let g = grid();
    let one = CVec::from_element(1, C::new(1.0, 0.0));
    assert!(matches!(
        build_sampled_function(g, 1, &[(0.01, one.clone())]),
        Err(Error::Lattice(_))
    ));
    assert!(matches!(
        build_sampled_function(g, 1, &[(g.nyquist(), one)]),
        Err(Error::Nyquist(_))
    ));
}

#[test]
fn slow_decay_needs_a_longer_period() {
    let model = GeneratorModel::from_real_rows(&[&[-0.05]]).unwrap();
    let y = trig(1, &[(16, 1.0, 0.0)]);
    let err = solve_green(&model, &y).unwrap_err();
    assert_eq!(err.kind(), "PeriodTooShortError");
    // the band series has no such restriction
    let (x, _) = parabolic_core::solve_band(&model, &y).unwrap();
    let want = 1.0 / (0.05f64.powi(2) + 1.0).sqrt();
    assert!((x.sup_norm() - want).abs() < 1e-9);
}

#[test]
fn axis_spectrum_is_rejected() {
    let rot = GeneratorModel::from_real_rows(&[&[0.0, 2.0], &[-2.0, 0.0]]).unwrap();
    let y = trig(2, &[(8, 1.0, 0.0)]);
    assert_eq!(solve_green(&rot, &y).unwrap_err().kind(), "NotHyperbolicError");
    assert_eq!(
        parabolic_core::solve_band(&rot, &y).unwrap_err().kind(),
        "SpectrumOnAxisError"
    );
    // away from i{-2, 2} the band-limited inverse still applies
    let x = parabolic_core::solve_band_limited(&rot, &y, 0.25, 0.75).unwrap();
    assert!(x.sup_norm() > 0.0);
}
