use std::f64::consts::PI;

use fock_core::fock::{inner_product, kernel, norm};
use fock_core::function::{exponential, TaylorSeries};
use fock_core::sigma::{dist_to_lattice, SigmaEvaluator};
use fock_core::{EntireFunction, QuadratureSpec, ScaledComplex, TaylorData};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_grid() -> QuadratureSpec {
    QuadratureSpec {
        r_max: 9.0,
        n_radial: 192,
        n_angular: 256,
        tail_tol: 1e-12,
    }
}

fn exp_series(lambda: Complex64, len: usize) -> TaylorSeries {
    let mut coeffs = Vec::with_capacity(len);
    let mut t = Complex64::new(1.0, 0.0);
    for k in 0..len {
        coeffs.push(t);
        t *= lambda / (k + 1) as f64;
    }
    TaylorSeries::new("exp-series", TaylorData { coeffs, reliable_len: len, r_check: 1.0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kernels_reproduce_exponentials(
        a in (-1.0f64..1.0, -1.0f64..1.0),
        l in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let (a, l) = (Complex64::new(a.0, a.1), Complex64::new(l.0, l.1));
        let got = inner_product(&*exponential(a), &*kernel(l), &small_grid()).unwrap();
        let want = (a * l).exp();
        prop_assert!((got - want).norm() <= 1e-10 * (1.0 + want.norm()), "{got} vs {want}");
    }

    #[test]
    fn exponential_norms_match_the_closed_form(l in (-1.5f64..1.5, -1.5f64..1.5)) {
        // ||e_l||^2 = (1/pi) e^{|l|^2 / pi}
        let l = Complex64::new(l.0, l.1);
        let got = norm(&*exponential(l), &small_grid()).unwrap();
        let want = (l.norm_sqr() / PI - PI.ln()).exp().sqrt();
        prop_assert!((got / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sigma_modulus_is_quasi_periodic(x in -2.5f64..2.5, y in -2.5f64..2.5) {
        let z = Complex64::new(x, y);
        prop_assume!(dist_to_lattice(z) > 0.05);
        let s = SigmaEvaluator::shared();
        let reduced = |z: Complex64| s.sigma(z).log_mag() - 0.5 * PI * z.norm_sqr();
        for w in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            prop_assert!((reduced(z + w) - reduced(z)).abs() < 1e-9);
        }
    }

    #[test]
    fn taylor_series_agree_with_closed_form(
        l in (-3.0f64..3.0, -3.0f64..3.0),
        r in 0.0f64..30.0,
        t in 0.0f64..(2.0 * PI),
    ) {
        let l = Complex64::new(l.0, l.1);
        let z = Complex64::from_polar(r, t);
        let len = 200;
        let w = l * z;
        // keep cancellation between terms mild
        prop_assume!(w.norm() < 40.0 && w.norm() - w.re < 5.0);
        let got = exp_series(l, len).eval(z);
        let want = ScaledComplex::exp(w);
        prop_assert!(got.rel_diff(want) < 1e-9, "{got:?} vs {want:?}");
    }
}

#[test]
fn sigma_vanishes_exactly_at_lattice_points() {
    let s = SigmaEvaluator::shared();
    assert!(s.sigma(Complex64::new(0.0, 0.0)).is_zero());
    assert!(s.sigma(Complex64::new(2.0, -1.0)).is_zero());
    assert!(!s.sigma(Complex64::new(0.5, 0.5)).is_zero());
}
