use std::f64::consts::PI;
use std::sync::Arc;

use fock_core::approx::*;
use fock_core::experiment::{counterexample_quadrature, counterexample_report};
use fock_core::fock::{coeff_inner_product, ln_factorial, CoeffSeq};
use fock_core::function::{constant, exponential, monomial, polynomial, product, scaled, EntireFnHandle, Sum};
use fock_core::sector::{ContourSpec, CounterexampleFunctions, CounterexampleParams};
use fock_core::{FockError, QuadratureSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn e(l: f64) -> EntireFnHandle {
    exponential(c(l, 0.0))
}

/// `sum_{k > n} 1 / (k! pi^{k+1})`.
fn exact_tail_sq(n: usize) -> f64 {
    (n + 1..n + 80).map(|k| (-ln_factorial(k) - (k as f64 + 1.0) * PI.ln()).exp()).sum()
}

#[test]
fn constant_gram_is_diagonal() {
    let g = build_gram(&*constant(1.0), 5, &QuadratureSpec::default()).unwrap();
    for j in 0..=5 {
        for k in 0..=5 {
            // undo the basis scaling: <z^j, z^k> = s_j s_k A_jk
            let raw = g.gram.entries[(j, k)] * (basis_log_scale(j) + basis_log_scale(k)).exp();
            let expect = if j == k { (ln_factorial(j) - (j as f64 + 1.0) * PI.ln()).exp() } else { 0.0 };
            assert!((raw - expect).norm() <= 1e-10 * (ln_factorial(j) - (j as f64 + 1.0) * PI.ln()).exp().max(expect), "{j},{k}");
        }
    }
}

#[test]
fn exponential_gram_against_coefficients() {
    let g = build_gram(&*e(1.0), 6, &QuadratureSpec::default()).unwrap();
    let series = |j: usize| {
        let mut v = vec![c(0.0, 0.0); j];
        v.extend((0..90).map(|k| c((-ln_factorial(k)).exp(), 0.0)));
        CoeffSeq::truncated(v)
    };
    for j in 0..=6 {
        for k in 0..=6 {
            let oracle = coeff_inner_product(&series(j), &series(k)).unwrap() * (-basis_log_scale(j) - basis_log_scale(k)).exp();
            assert!((g.gram.entries[(j, k)] - oracle).norm() <= 1e-8 * oracle.norm(), "{j},{k}");
        }
    }
}

#[test]
fn gram_is_hermitian_and_semidefinite() {
    let f = product(vec![e(0.7), polynomial(vec![c(1.0, 0.5), c(0.0, -1.0)])]);
    let g = build_gram(&*f, 10, &QuadratureSpec::default()).unwrap();
    let a = &g.gram.entries;
    assert_eq!(a, &a.adjoint());
    let trace: f64 = (0..a.nrows()).map(|j| a[(j, j)].re).sum();
    let eig = a.clone().symmetric_eigenvalues();
    assert!(eig.iter().all(|&l| l >= -1e-12 * trace));
}

#[test]
fn target_in_span_has_zero_distance() {
    let q = QuadratureSpec::default();
    let f = e(1.0);
    let h = product(vec![monomial(2), f.clone()]);
    let p = distance_profile(&*f, &*h, 5, &q, &GramSvd).unwrap();
    for fit in &p.fits[2..] {
        assert!(fit.distance <= 1e-6 * p.target_norm);
    }
}

#[test]
fn constant_weight_distance_is_taylor_tail() {
    let q = QuadratureSpec::default();
    let d8 = project_distance(&*constant(1.0), &*e(1.0), 8, &q).unwrap();
    let exact = exact_tail_sq(8).sqrt();
    assert!((d8 - exact).abs() <= 1e-8 * exact);
    let p = distance_profile(&*constant(1.0), &*e(1.0), 10, &q, &GramSvd).unwrap();
    for fit in &p.fits {
        let exact = exact_tail_sq(fit.degree).sqrt();
        assert!((fit.distance - exact).abs() <= 1e-6 * exact, "{fit:?}");
    }
    assert!(p.fits[10].distance / p.fits[5].distance < 1e-3);
    assert_eq!(p.verdict(), Verdict::Decays);
}

#[test]
fn orthogonalized_target() {
    let q = QuadratureSpec::default();
    let f = e(0.5);
    let h = product(vec![e(1.5), f.clone()]);
    let coeffs = least_squares_polynomial(&*f, &*h, 6, &q).unwrap();
    let proj = product(vec![polynomial(coeffs), f.clone()]);
    let orth: EntireFnHandle = Arc::new(Sum(vec![h.clone(), scaled(c(-1.0, 0.0), proj)]));
    let p = distance_profile(&*f, &*orth, 6, &q, &GramSvd).unwrap();
    let d = p.fits[6].distance;
    assert!((d - p.target_norm).abs() <= 1e-8 * p.target_norm, "{d} vs {}", p.target_norm);
}

#[test]
fn positive_exponential_profile_decays() {
    let q = QuadratureSpec::default();
    let f = e(1.0);
    let h = product(vec![e(2.0), f.clone()]);
    for name in strategy_names() {
        let p = distance_profile(&*f, &*h, 20, &q, &*projection_strategy(name).unwrap()).unwrap();
        assert!(p.truncated_at.is_none());
        assert!(p.fits[20].distance <= 1e-3 * p.target_norm, "{name}");
        assert!(p.worst_increase() <= 1e-10 * p.target_norm, "{name}");
        assert!(p.fits.iter().all(|f| f.distance <= p.target_norm * (1.0 + 1e-12)));
    }
}

#[test]
fn single_degree_is_constant_multiple_projection() {
    let q = QuadratureSpec::default();
    let f = e(1.0);
    let h = e(-1.0);
    let p = distance_profile(&*f, &*h, 0, &q, &GramSvd).unwrap();
    // d_0^2 = ||H||^2 - |<H, F>|^2 / ||F||^2
    let s = WeightedSamples::new(&*f, &q).unwrap();
    let hv = s.weigh(&*h);
    let ip: Complex64 = hv.iter().zip(&s.values).map(|(a, b)| a * b.conj()).sum();
    let nf = s.norm_of(&s.values).unwrap();
    let expect = (p.target_norm.powi(2) - ip.norm_sqr() / (nf * nf)).sqrt();
    assert_eq!(p.fits.len(), 1);
    assert!((p.fits[0].distance - expect).abs() < 1e-10);
}

#[test]
fn extremal_growth_for_constant_weight() {
    let g = build_gram(&*constant(1.0), 40, &QuadratureSpec::default()).unwrap();
    let x0 = 1.5f64;
    let k = extremal_growth(&g, x0);
    let series: f64 = (0..=40)
        .map(|j| (2.0 * j as f64 * x0.ln() + (j as f64 + 1.0) * PI.ln() - ln_factorial(j)).exp())
        .sum::<f64>()
        .sqrt();
    assert!((k - series).abs() <= 1e-8 * series);
    let limit = (PI * (PI * x0 * x0).exp()).sqrt();
    assert!((k - limit).abs() <= 0.01 * limit);
}

#[test]
fn growth_is_monotone() {
    let q = QuadratureSpec::default();
    let f = e(0.8);
    let s = WeightedSamples::new(&*f, &q).unwrap();
    let gram = GramMatrix::assemble(&s, 16).unwrap();
    let xs = [0.0, 0.5, 1.0, 1.5, 2.0];
    let (table, err) = GramSvd.growth(&s, &gram, DEFAULT_TAU, &xs);
    assert!(err.is_none());
    for n in 1..table.values.len() {
        for i in 0..xs.len() {
            assert!(table.values[n][i] >= table.values[n - 1][i] * (1.0 - 1e-10));
        }
    }
    // K_n(x) ~ e^{pi x^2/2 - 0.8 x}, which only increases past x = 0.8/pi
    for row in &table.values {
        for i in 3..xs.len() {
            assert!(row[i] >= row[i - 1] * (1.0 - 1e-10));
        }
    }
    let g = build_gram(&*constant(1.0), 12, &q).unwrap();
    let ks: Vec<f64> = xs.iter().map(|&x| extremal_growth(&g, x)).collect();
    assert!(ks.windows(2).all(|w| w[1] >= w[0]));
    let (arn, _) = Arnoldi.growth(&s, &gram, DEFAULT_TAU, &xs);
    for (a, b) in table.values.iter().zip(&arn.values) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-8 * x);
        }
    }
}

#[test]
fn scaling_covariance() {
    let q = QuadratureSpec::default();
    let f = e(1.0);
    let h = product(vec![f.clone(), e(2.0)]);
    let k = c(3.0, -4.0);
    let cf = scaled(k, f.clone());
    let ch = product(vec![cf.clone(), e(2.0)]);
    let a = distance_profile(&*f, &*h, 10, &q, &GramSvd).unwrap();
    let b = distance_profile(&*cf, &*ch, 10, &q, &GramSvd).unwrap();
    for (x, y) in a.relative().iter().zip(b.relative()) {
        assert!((x - y).abs() <= 1e-9 * x.max(1e-3));
    }
    let ga = build_gram(&*f, 10, &q).unwrap();
    let gb = build_gram(&*cf, 10, &q).unwrap();
    for x0 in [0.0, 1.0, 2.5] {
        let (ka, kb) = (extremal_growth(&ga, x0), extremal_growth(&gb, x0));
        assert!((kb * k.norm() - ka).abs() <= 1e-9 * ka);
    }
}

#[test]
fn halving_tau_is_stable() {
    let q = QuadratureSpec::default();
    let f = e(1.0);
    let h = product(vec![f.clone(), e(-1.0)]);
    let s = WeightedSamples::new(&*f, &q).unwrap();
    let gram = GramMatrix::assemble(&s, 18).unwrap();
    let a = distance_profile_with(&s, &gram, &*h, &GramSvd, DEFAULT_TAU).unwrap();
    let b = distance_profile_with(&s, &gram, &*h, &GramSvd, 0.5 * DEFAULT_TAU).unwrap();
    for (x, y) in a.fits.iter().zip(&b.fits) {
        assert!((x.distance - y.distance).abs() <= x.error_bound);
    }
}

#[test]
fn degree_beyond_quadrature_is_reported() {
    let q = QuadratureSpec {
        r_max: 5.0,
        n_radial: 160,
        n_angular: 128,
        tail_tol: 1e-12,
    };
    let err = build_gram(&*constant(1.0), 40, &q).unwrap_err();
    assert!(matches!(err, FockError::TailNotConverged { .. }), "{err}");
}

fn polar_lambdas() -> Vec<Complex64> {
    [0.5, 1.0, 1.5]
        .iter()
        .flat_map(|&r| (0..8).map(move |k| Complex64::from_polar(r, PI * k as f64 / 4.0 + 0.1)))
        .collect()
}

#[test]
fn exponential_span_examples() {
    let q = QuadratureSpec::default();
    let one = exp_span_distance(&*constant(1.0), &*constant(1.0), &[c(0.0, 0.0)], &q, 1).unwrap();
    assert!(one.distance <= 1e-12);

    let grid: Vec<Complex64> = (0..9).map(|k| c(-0.6 + 0.6 * (k % 3) as f64, -0.6 + 0.6 * (k / 3) as f64)).collect();
    let fit = exp_span_distance(&*constant(1.0), &*e(0.5), &grid, &q, 9).unwrap();
    assert!(fit.distance <= 1e-4 * fit.target_norm);

    let dup = exp_span_distance(&*constant(1.0), &*e(0.5), &[c(0.2, 0.0), c(0.2, 0.0)], &q, 2);
    assert!(matches!(dup, Err(FockError::IllConditionedSpan { rank: 1, .. })));
}

#[test]
fn exponential_span_against_polynomials() {
    let q = QuadratureSpec::default();
    let lambdas = polar_lambdas();
    assert_eq!(lambdas.len(), 24);
    for (f, h) in [(constant(1.0), e(1.0)), (e(1.0), product(vec![e(2.0), e(1.0)]))] {
        let fit = exp_span_distance(&*f, &*h, &lambdas, &q, 1).unwrap();
        let d12 = project_distance(&*f, &*h, 12, &q).unwrap();
        assert!(fit.distance <= 2.0 * d12 + 1e-6, "{fit:?} vs {d12}");
        let d23 = distance_profile(&*f, &*h, 23, &q, &Arnoldi).unwrap().fits[23].distance;
        assert!(fit.distance >= d23 - 1e-6);
    }
}

#[test]
fn division_by_a_zero() {
    let q = QuadratureSpec::default();
    let f = e(1.0);
    let lambda = c(0.3, 0.0);
    let lin = polynomial(vec![-lambda, c(1.0, 0.0)]);

    let h = product(vec![lin.clone(), f.clone()]);
    let r = divide_zero_test(f.clone(), h, lambda, 4, &q, &GramSvd).unwrap();
    assert!(r.divided.fits[1..].iter().all(|x| x.distance <= 1e-6));

    let h = product(vec![lin.clone(), monomial(1), f.clone()]);
    let r = divide_zero_test(f.clone(), h, lambda, 4, &q, &GramSvd).unwrap();
    assert!(r.divided.fits[2..].iter().all(|x| x.distance <= 1e-6));

    let h = product(vec![lin.clone(), e(2.0), f.clone()]);
    let r = divide_zero_test(f.clone(), h, lambda, 16, &q, &GramSvd).unwrap();
    assert!(r.original.fits[16].distance <= 1e-3 * r.original.target_norm);
    assert!(r.divided.fits[16].distance <= 1e-3 * r.divided.target_norm);
    assert!(r.rate_ratio.is_finite());

    let bad = divide_zero_test(f.clone(), product(vec![e(2.0), f.clone()]), lambda, 4, &q, &GramSvd);
    assert!(matches!(bad, Err(FockError::NotAZero { .. })));
    let zero_f = divide_zero_test(lin.clone(), product(vec![lin.clone(), lin]), lambda, 4, &q, &GramSvd);
    assert!(matches!(zero_f, Err(FockError::ZeroOfF)));
}

#[test]
fn counterexample_small_report() {
    let q = QuadratureSpec {
        r_max: 20.0,
        n_radial: 480,
        n_angular: 512,
        tail_tol: 1e-12,
    };
    let r = counterexample_report(CounterexampleParams::default(), 12, &[2.0, 4.0], &q, &ContourSpec::default(), &GramSvd).unwrap();
    assert!(r.fg_norm.is_finite() && r.fg_tail_ratio < 1e-12);
    assert!(r.max_band_excess() <= 0.0);
    assert!(r.max_key_gap() <= 5.0);
    assert!(r.witness_consistent());
    assert_eq!(r.profile.fits.len(), 13);
    assert!(r.profile.worst_increase() <= 1e-10 * r.profile.target_norm);
    let g4 = r.g_axis.iter().find(|g| g[0] == 4.0).unwrap();
    assert!(g4[1] >= g4[2] - std::f64::consts::LN_2);
}

#[test]
fn counterexample_exponential_span_consistent_with_profile() {
    let q = counterexample_quadrature();
    let funcs = Arc::new(CounterexampleFunctions::new(CounterexampleParams::default(), &ContourSpec::default()).unwrap());
    let (f, h) = (funcs.big_f_handle(), funcs.product_handle());
    let grid: Vec<Complex64> = (0..25).map(|k| c(-1.2 + 0.6 * (k % 5) as f64, -1.2 + 0.6 * (k / 5) as f64)).collect();
    let fit = exp_span_distance(&*f, &*h, &grid, &q, 1).unwrap();
    let d24 = distance_profile(&*f, &*h, 24, &q, &Arnoldi).unwrap().fits[24].distance;
    assert!(fit.distance >= 0.5 * d24);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn profiles_are_monotone(l in -1.5f64..1.5, m in -1.5f64..1.5, k in 0.2f64..1.2) {
        let q = QuadratureSpec::default();
        let f = exponential(c(k, 0.0));
        let h = product(vec![exponential(c(l, m)), f.clone()]);
        let p = distance_profile(&*f, &*h, 10, &q, &GramSvd).unwrap();
        prop_assert!(p.worst_increase() <= 1e-10 * p.target_norm);
        prop_assert!(p.fits.iter().all(|x| x.distance <= p.target_norm * (1.0 + 1e-12)));
    }

    #[test]
    fn pseudoinverse_inverts_well_conditioned(vals in proptest::collection::vec(0.5f64..2.0, 4)) {
        let m = DMatrix::from_fn(4, 4, |j, k| if j == k { c(vals[j] + 1.0, 0.0) } else { c(0.1 * (j + k) as f64, 0.05 * (j as f64 - k as f64)) });
        let p = Pseudoinverse::new(&m, DEFAULT_TAU).unwrap();
        let b = nalgebra::DVector::from_iterator(4, (0..4).map(|j| c(j as f64, 1.0)));
        let x = p.solve(&b);
        prop_assert!((&m * x - b).norm() < 1e-12);
    }
}
