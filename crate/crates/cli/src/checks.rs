//! Acceptance checks shared by `focklab verify` and the acceptance test target.
//!
//! Each check returns its measured quantities next to the bounds they are
//! held to. Oracles (closed-form series, product formulas, second contours)
//! are computed here independently of the routines under test.

use std::f64::consts::PI;

use fock_core::approx::{build_gram, distance_profile, extremal_growth, Arnoldi, GramSvd};
use fock_core::experiment::{counterexample_quadrature, counterexample_report};
use fock_core::fock::{adjoint_poly_action, inner_product, kernel, ln_factorial, norm, tf_shift};
use fock_core::function::{constant, exponential, monomial, polynomial, product, EntireFnHandle};
use fock_core::lattice::{biorthogonal, cauchy_i, lagrange_sum, parseval_sum, TruncatedLattice};
use fock_core::sector::{ContourSpec, CounterexampleFunctions, CounterexampleParams};
use fock_core::sigma::{dist_to_lattice, LatticePoint, SigmaEvaluator};
use fock_core::{FockError, QuadratureSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub measured: f64,
    /// `"<="` or `">="`.
    pub relation: String,
    pub bound: f64,
    pub pass: bool,
}

impl Measurement {
    pub fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Measurement {
            label: label.into(),
            measured,
            relation: "<=".into(),
            bound,
            pass: measured <= bound,
        }
    }

    pub fn at_least(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Measurement {
            label: label.into(),
            measured,
            relation: ">=".into(),
            bound,
            pass: measured >= bound,
        }
    }

    pub fn below(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Measurement {
            label: label.into(),
            measured,
            relation: "<".into(),
            bound,
            pass: measured < bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub measurements: Vec<Measurement>,
    pub error: Option<String>,
}

impl CheckOutcome {
    pub fn from_result(id: u32, name: &str, r: Result<Vec<Measurement>, String>) -> Self {
        match r {
            Ok(m) => CheckOutcome {
                id,
                name: name.into(),
                pass: !m.is_empty() && m.iter().all(|x| x.pass),
                measurements: m,
                error: None,
            },
            Err(e) => CheckOutcome {
                id,
                name: name.into(),
                pass: false,
                measurements: Vec::new(),
                error: Some(e),
            },
        }
    }

    /// One line: status, id, name and every measurement.
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("[{status}] criterion {:>2} {}", self.id, self.name);
        for m in &self.measurements {
            let mark = if m.pass { "" } else { " (!)" };
            s.push_str(&format!("; {} = {:.4e} {} {:.1e}{mark}", m.label, m.measured, m.relation, m.bound));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("; error: {e}"));
        }
        s
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn err(e: FockError) -> String {
    e.to_string()
}

/// Frequencies of the exponential part of the test set.
pub fn test_lambdas() -> [Complex64; 5] {
    [c(0.5, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(1.0, 0.5), c(-0.7, -0.7)]
}

pub fn test_shifts() -> [Complex64; 4] {
    [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(2.0, -1.0)]
}

/// Monomials up to degree 6 and `e_lambda` for the test frequencies.
pub fn base_test_set() -> Vec<EntireFnHandle> {
    (0..=6).map(monomial).chain(test_lambdas().iter().map(|&l| exponential(l))).collect()
}

/// The base set together with every shift `T_alpha` of it.
pub fn test_set() -> Vec<EntireFnHandle> {
    let base = base_test_set();
    let mut out = base.clone();
    for a in test_shifts() {
        out.extend(base.iter().map(|f| tf_shift(a, f.clone())));
    }
    out
}

/// `{-1.2, 0, 1.2}^2`, inside `D(0, 2)`.
pub fn kernel_grid() -> Vec<Complex64> {
    let t = [-1.2, 0.0, 1.2];
    t.iter().flat_map(|&x| t.iter().map(move |&y| c(x, y))).collect()
}

pub const CRITERIA: [(u32, &str); 11] = [
    (1, "reproducing kernels"),
    (2, "monomial Gram matrix"),
    (3, "shift unitarity and polynomial adjoints"),
    (4, "sigma suite"),
    (5, "Cauchy transform asymptotics"),
    (6, "Parseval identity"),
    (7, "entirety of f1 and G"),
    (8, "positive approximation"),
    (9, "counterexample witness"),
    (10, "extremal growth closed form"),
    (11, "determinism"),
];

fn name(id: u32) -> &'static str {
    CRITERIA[id as usize - 1].1
}

pub fn criterion_1() -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let q = QuadratureSpec::default();
        let mut worst: f64 = 0.0;
        for f in test_set() {
            for &l in &kernel_grid() {
                let v = inner_product(&*f, &*kernel(l), &q).map_err(err)?;
                let exact = f.eval(l).to_complex();
                worst = worst.max((v - exact).norm() / (1.0 + exact.norm()));
            }
        }
        Ok(vec![Measurement::at_most("max |<f,k>-f|/(1+|f|)", worst, 1e-8)])
    };
    CheckOutcome::from_result(1, name(1), run())
}

pub fn criterion_2() -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let q = QuadratureSpec::default();
        let mons: Vec<EntireFnHandle> = (0..12).map(monomial).collect();
        let exact = |j: usize| (ln_factorial(j) - (j as f64 + 1.0) * PI.ln()).exp();
        let (mut diag, mut off) = (0.0f64, 0.0f64);
        for j in 0..12 {
            for k in 0..12 {
                let v = inner_product(&*mons[j], &*mons[k], &q).map_err(err)?;
                if j == k {
                    diag = diag.max((v - exact(j)).norm() / exact(j));
                } else {
                    off = off.max(v.norm() / (exact(j) * exact(k)).sqrt());
                }
            }
        }
        // the approximation engine's Gram in the scaled basis is the identity
        let g = build_gram(&*constant(1.0), 11, &q).map_err(err)?;
        let n = g.gram.entries.nrows();
        let assembled = (0..n)
            .flat_map(|j| (0..n).map(move |k| (j, k)))
            .map(|(j, k)| (g.gram.entries[(j, k)] - if j == k { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max);
        Ok(vec![
            Measurement::at_most("diagonal relative error", diag, 1e-9),
            Measurement::at_most("off-diagonal relative size", off, 1e-9),
            Measurement::at_most("assembled Gram vs identity", assembled, 1e-10),
        ])
    };
    CheckOutcome::from_result(2, name(2), run())
}

pub fn criterion_3() -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let q = QuadratureSpec::default();
        let mut unit: f64 = 0.0;
        for f in base_test_set() {
            let nf = norm(&*f, &q).map_err(err)?;
            for a in test_shifts() {
                let ns = norm(&*tf_shift(a, f.clone()), &q).map_err(err)?;
                unit = unit.max((ns / nf - 1.0).abs());
            }
        }
        let polys: [Vec<Complex64>; 4] = [
            vec![c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 1.0)],
        ];
        let hs = test_lambdas()
            .into_iter()
            .map(|l| {
                let h = exponential(l);
                norm(&*h, &q).map(|n| (h, n))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let mut adj: f64 = 0.0;
        for p in &polys {
            for &lg in &test_lambdas() {
                let g = exponential(lg);
                let pg = product(vec![polynomial(p.clone()), g.clone()]);
                let npg = norm(&*pg, &q).map_err(err)?;
                for (h, nh) in &hs {
                    let lhs = inner_product(&*pg, &**h, &q).map_err(err)?;
                    let star = adjoint_poly_action(p, &**h, 120).map_err(err)?;
                    let rhs = inner_product(&*g, &*star, &q).map_err(err)?;
                    let scale = lhs.norm() + npg * nh;
                    adj = adj.max((lhs - rhs).norm() / scale);
                }
            }
        }
        Ok(vec![
            Measurement::at_most("max |‖T f‖/‖f‖ - 1|", unit, 1e-8),
            Measurement::at_most("max adjoint defect (relative)", adj, 1e-8),
        ])
    };
    CheckOutcome::from_result(3, name(3), run())
}

/// 50 points of `D(0, 4)` on a golden-angle spiral, kept off the lattice.
pub fn spiral_points() -> Vec<Complex64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::new();
    let mut k = 0;
    while out.len() < 50 {
        let z = Complex64::from_polar(3.9 * ((k as f64 + 0.5) / 60.0).sqrt(), golden * k as f64);
        if dist_to_lattice(z) > 0.05 {
            out.push(z);
        }
        k += 1;
    }
    out
}

pub fn criterion_4() -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let s = SigmaEvaluator::shared();
        let reduced = |z: Complex64| s.sigma(z).log_mag() - 0.5 * PI * z.norm_sqr();
        let mut quasi: f64 = 0.0;
        for z in spiral_points() {
            for w in [c(1.0, 0.0), c(0.0, 1.0)] {
                // |e^{a} - 1| for the log-modulus gap a is the relative defect
                quasi = quasi.max((reduced(z + w) - reduced(z)).exp_m1().abs());
            }
        }
        let pts: Vec<LatticePoint> = TruncatedLattice::new(4.0).points;
        let mut bio: f64 = 0.0;
        for &w in &pts {
            let g = biorthogonal(w).map_err(err)?;
            for &v in &pts {
                use fock_core::EntireFunction;
                let val = g.eval(v.to_complex()).to_complex();
                let delta = if v == w { 1.0 } else { 0.0 };
                bio = bio.max((val - delta).norm());
            }
        }
        let mut lag: f64 = 0.0;
        for z in [c(0.5, 0.25), c(1.3, -0.4), c(-2.2, 1.6)] {
            let exact = s.sigma(z).recip().to_complex();
            let v = lagrange_sum(&*constant(1.0), 0, z, &TruncatedLattice::full(10.0)).map_err(err)?;
            lag = lag.max((v.value - exact).norm() / exact.norm());
        }
        Ok(vec![
            Measurement::at_most("quasi-periodicity modulus defect", quasi, 1e-9),
            Measurement::at_most(format!("biorthogonality defect ({} points)", pts.len()), bio, 1e-8),
            Measurement::at_most("Lagrange residual (relative)", lag, 1e-7),
        ])
    };
    CheckOutcome::from_result(4, name(4), run())
}

/// Ray `arg z = k/7`; these stay at least 0.05 from the lattice at the radii used.
pub fn ray_point(r: f64, k: u32) -> Complex64 {
    Complex64::from_polar(r, k as f64 / 7.0)
}

pub fn criterion_5() -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let q = QuadratureSpec::default();
        let pairs: [(EntireFnHandle, EntireFnHandle); 3] = [
            (constant(1.0), constant(1.0)),
            (exponential(c(1.0, 0.0)), exponential(c(0.0, 1.0))),
            (monomial(1), exponential(c(0.5, -0.5))),
        ];
        let mut worst: f64 = 0.0;
        for (f1, f2) in pairs {
            let target = inner_product(&*f2, &*f1, &q).map_err(err)?;
            for k in 1..=3 {
                let z = ray_point(16.0, k);
                let v = cauchy_i(f1.clone(), f2.clone(), z, &q).map_err(err)?;
                worst = worst.max((z * v.value - target).norm() / (0.2 * target.norm() + 0.01));
            }
        }
        Ok(vec![Measurement::at_most("max |z I - <F2,F1>| / (0.2|<F2,F1>| + 0.01)", worst, 1.0)])
    };
    CheckOutcome::from_result(5, name(5), run())
}

/// `F1 = e_1`, `F2 = z - 1/2` (zero at `mu = 1/2`), evaluated at the cell centre `3.5 + 2.5i`.
pub fn criterion_6() -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let q = QuadratureSpec::default();
        let (f1, f2) = (exponential(c(1.0, 0.0)), polynomial(vec![c(-0.5, 0.0), c(1.0, 0.0)]));
        let (mu, z) = (c(0.5, 0.0), c(3.5, 2.5));
        let at = |r: f64| parseval_sum(f1.clone(), f2.clone(), mu, z, &TruncatedLattice::new(r), &q).map_err(err);
        let p12 = at(12.0)?;
        let (p8, p16) = (at(8.0)?, at(16.0)?);
        Ok(vec![
            Measurement::at_most("residual at radius 12 / tail bound", p12.residual / p12.tail_bound, 1.0),
            Measurement::at_most("residual(16) / residual(8)", p16.residual / p8.residual, 1.0),
        ])
    };
    CheckOutcome::from_result(6, name(6), run())
}

/// Points at radii 1.5..5.5 on both sides of the boundary rays `+-a`.
pub fn straddling_points(a: f64) -> Vec<Complex64> {
    let offsets = [a - 0.05, a + 0.05, -a + 0.05, -a - 0.05, a - 0.15, a + 0.15];
    [1.5, 2.5, 3.5, 4.5, 5.5]
        .iter()
        .flat_map(|&r| offsets.iter().map(move |&t| Complex64::from_polar(r, t)))
        .collect()
}

pub fn criterion_7(params: CounterexampleParams) -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let small = CounterexampleFunctions::new(params, &ContourSpec::default()).map_err(err)?;
        let large = CounterexampleFunctions::new(
            params,
            &ContourSpec {
                radius: 1.2,
                ..ContourSpec::default()
            },
        )
        .map_err(err)?;
        let (mut f1_gap, mut g_gap) = (0.0f64, 0.0f64);
        for z in straddling_points(PI / 4.0) {
            f1_gap = f1_gap.max(small.f1(z).map_err(err)?.rel_diff(large.f1(z).map_err(err)?));
        }
        for z in straddling_points(PI / (2.0 * params.eta)) {
            g_gap = g_gap.max(small.big_g(z).map_err(err)?.rel_diff(large.big_g(z).map_err(err)?));
        }
        let x: f64 = 6.0;
        let f_ratio = (small.f1(c(x, 0.0)).map_err(err)?.log_mag() - (PI * x * x / 2.0 - x.powf(params.beta))).exp();
        let x: f64 = 5.0;
        let g_ratio = (small.big_g(c(x, 0.0)).map_err(err)?.log_mag() - x.powf(params.sigma_exp)).exp();
        Ok(vec![
            Measurement::at_most("f1 dual-contour gap (30 points)", f1_gap, 1e-8),
            Measurement::at_most("G dual-contour gap (30 points)", g_gap, 1e-8),
            Measurement::at_least("|f1(6)| / exp(18 pi - 6^beta)", f_ratio, 0.5),
            Measurement::at_most("|f1(6)| / exp(18 pi - 6^beta)", f_ratio, 2.0),
            Measurement::at_least("|G(5)| / exp(5^sigma)", g_ratio, 0.5),
            Measurement::at_most("|G(5)| / exp(5^sigma)", g_ratio, 2.0),
        ])
    };
    CheckOutcome::from_result(7, name(7), run())
}

/// `sum_{k > n} 1 / (k! pi^{k+1})`, the squared distance from `e_1` to polynomials of degree `n`.
pub fn exponential_tail_sq(n: usize) -> f64 {
    (n + 1..n + 120).map(|k| (-ln_factorial(k) - (k as f64 + 1.0) * PI.ln()).exp()).sum()
}

pub fn criterion_8() -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let q = QuadratureSpec::default();
        let p = distance_profile(&*constant(1.0), &*exponential(c(1.0, 0.0)), 10, &q, &GramSvd).map_err(err)?;
        let tail = p
            .fits
            .iter()
            .map(|f| {
                let exact = exponential_tail_sq(f.degree).sqrt();
                (f.distance - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        let f = exponential(c(1.0, 0.0));
        let h = product(vec![exponential(c(2.0, 0.0)), f.clone()]);
        let p = distance_profile(&*f, &*h, 20, &q, &GramSvd).map_err(err)?;
        let best = p.relative().into_iter().fold(f64::INFINITY, f64::min);
        Ok(vec![
            Measurement::at_most("F=1: max |d_n - tail| / tail, n <= 10", tail, 1e-6),
            Measurement::at_most("F=e_1: min_{n<=20} d_n / ‖H‖", best, 1e-3),
        ])
    };
    CheckOutcome::from_result(8, name(8), run())
}

pub const WITNESS_DEGREE: usize = 32;
pub const WITNESS_POINTS: [f64; 4] = [2.0, 3.0, 4.0, 5.0];

pub fn criterion_9(params: CounterexampleParams, contour: ContourSpec) -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let q = counterexample_quadrature();
        let r = counterexample_report(params, WITNESS_DEGREE, &WITNESS_POINTS, &q, &contour, &Arnoldi).map_err(err)?;
        let computed = r.profile.fits.len().saturating_sub(1);
        let tail = if r.fg_norm.is_finite() { r.fg_tail_ratio } else { f64::INFINITY };
        Ok(vec![
            Measurement::at_most("(a) max log K_n(x0) - x0^gamma", r.max_key_gap(), 5.0),
            Measurement::at_most("(b) outer-ring share of ‖FG‖^2", tail, q.tail_tol),
            Measurement::at_least("(c) min d_n / ‖FG‖", r.min_relative_distance(), 0.5),
            Measurement::at_least("(c) last well-conditioned degree", computed as f64, WITNESS_DEGREE as f64),
        ])
    };
    CheckOutcome::from_result(9, name(9), run())
}

/// `sqrt(sum_{j <= n} pi^{j+1} x^{2j} / j!)`, the degree-`n` truncation of `sqrt(pi e^{pi x^2})`.
pub fn constant_weight_growth(n: usize, x: f64) -> f64 {
    (0..=n)
        .map(|j| ((j as f64 + 1.0) * PI.ln() + 2.0 * j as f64 * x.ln() - ln_factorial(j)).exp())
        .sum::<f64>()
        .sqrt()
}

pub fn criterion_10() -> CheckOutcome {
    let run = || -> Result<Vec<Measurement>, String> {
        let g = build_gram(&*constant(1.0), 40, &QuadratureSpec::default()).map_err(err)?;
        let k = extremal_growth(&g, 1.5);
        let oracle = constant_weight_growth(40, 1.5);
        Ok(vec![Measurement::at_most("|K_40(1.5) - oracle| / oracle", (k - oracle).abs() / oracle, 0.01)])
    };
    CheckOutcome::from_result(10, name(10), run())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_the_advertised_sizes() {
        assert_eq!(test_set().len(), 60);
        assert_eq!(kernel_grid().len(), 9);
        assert!(kernel_grid().iter().all(|z| z.norm() < 2.0));
        let s = spiral_points();
        assert_eq!(s.len(), 50);
        assert!(s.iter().all(|z| z.norm() < 4.0));
        assert_eq!(straddling_points(0.7).len(), 30);
        for k in 1..=3 {
            assert!(dist_to_lattice(ray_point(16.0, k)) >= 0.05);
        }
    }

    #[test]
    fn growth_oracle_limit() {
        let x: f64 = 1.5;
        let full = (PI * (PI * x * x).exp()).sqrt();
        assert!((constant_weight_growth(200, x) - full).abs() < 1e-12 * full);
        assert!(constant_weight_growth(5, x) < 0.9 * full);
    }

    #[test]
    fn line_reports_failures() {
        let o = CheckOutcome::from_result(3, "x", Ok(vec![Measurement::at_most("m", 2.0, 1.0)]));
        assert!(!o.pass);
        assert!(o.line().starts_with("[FAIL] criterion  3 x"));
        let o = CheckOutcome::from_result(3, "x", Err("boom".into()));
        assert!(o.line().contains("boom"));
    }
}
