//! The Fock space: inner products, kernels, shifts and polynomial adjoints.
//!
//! The inner product is `<f, g> = (1/pi) \int f conj(g) e^{-pi |z|^2} dm(z)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::function::{EntireFnHandle, EntireFunction, TaylorData, TaylorSeries};
use crate::quadrature::QuadratureSpec;
use crate::scaled::ScaledComplex;

/// `<f, g>` with the standard weight, returned in scaled form.
pub fn inner_product_scaled(f: &dyn EntireFunction, g: &dyn EntireFunction, q: &QuadratureSpec) -> Result<ScaledComplex> {
    inner_product_weighted(f, g, q, 1.0)
}

/// `(1/pi) \int f conj(g) e^{-weight pi |z|^2} dm`.
pub fn inner_product_weighted(
    f: &dyn EntireFunction,
    g: &dyn EntireFunction,
    q: &QuadratureSpec,
    weight: f64,
) -> Result<ScaledComplex> {
    q.validate()?;
    let grid = q.grid();
    let v = grid.integrate(|z| (f.eval(z) * g.eval(z).conj()).scale_exp(-weight * PI * z.norm_sqr()))?;
    Ok(v.mul_complex(Complex64::new(1.0 / PI, 0.0)))
}

pub fn inner_product(f: &dyn EntireFunction, g: &dyn EntireFunction, q: &QuadratureSpec) -> Result<Complex64> {
    Ok(inner_product_scaled(f, g, q)?.to_complex())
}

/// `<h, f>`, read off from point values when `f` is a multiple of a kernel.
pub fn pairing(h: &dyn EntireFunction, f: &dyn EntireFunction, q: &QuadratureSpec) -> Result<ScaledComplex> {
    match f.as_kernel() {
        Some((mu, c)) => Ok(h.eval(mu).mul_complex(c.conj())),
        None => inner_product_scaled(h, f, q),
    }
}

pub fn norm(f: &dyn EntireFunction, q: &QuadratureSpec) -> Result<f64> {
    let grid = {
        q.validate()?;
        q.grid()
    };
    let v = grid.integrate(|z| {
        let a = f.eval(z);
        (a * a.conj()).scale_exp(-PI * z.norm_sqr())
    })?;
    Ok((v.to_complex().re / PI).max(0.0).sqrt())
}

/// Monomial norms squared in log form: `ln(n! / pi^{n+1})`.
pub fn log_monomial_norm_sq(n: usize) -> f64 {
    ln_factorial(n) - (n as f64 + 1.0) * PI.ln()
}

pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Taylor coefficients together with whether they are a truncation of an
/// infinite series (`truncated`) or an exact finite expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeq {
    pub coeffs: Vec<Complex64>,
    pub truncated: bool,
}

impl CoeffSeq {
    pub fn exact(coeffs: Vec<Complex64>) -> Self {
        CoeffSeq { coeffs, truncated: false }
    }

    pub fn truncated(coeffs: Vec<Complex64>) -> Self {
        CoeffSeq { coeffs, truncated: true }
    }

    pub fn from_taylor(t: &TaylorData, len: usize) -> Self {
        let n = len.min(t.reliable_len);
        CoeffSeq::truncated(t.coeffs[..n].to_vec())
    }
}

/// `sum_n a_n conj(b_n) n! / pi^{n+1}`.
pub fn coeff_inner_product(a: &CoeffSeq, b: &CoeffSeq) -> Result<Complex64> {
    let n = a.coeffs.len().min(b.coeffs.len());
    let longer_nonzero = a.coeffs[n..].iter().chain(&b.coeffs[n..]).any(|c| c.norm() > 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut last = 0.0;
    for k in 0..n {
        let w = log_monomial_norm_sq(k).exp();
        let t = a.coeffs[k] * b.coeffs[k].conj() * w;
        last = t.norm();
        sum += t;
    }
    if (a.truncated || b.truncated) && !longer_nonzero && n > 0 && last > 1e-16 * sum.norm() {
        return Err(FockError::SeriesNotConverged { tail: last, sum: sum.norm() });
    }
    Ok(sum)
}

/// `k_lambda(z) = pi e^{pi conj(lambda) z}`.
pub fn eval_kernel(lambda: Complex64, z: Complex64) -> ScaledComplex {
    ScaledComplex::exp(PI * lambda.conj() * z + PI.ln())
}

/// Reproducing kernel at `lambda` as an entire function.
#[derive(Debug, Clone)]
pub struct Kernel {
    lambda: Complex64,
    taylor: TaylorData,
}

impl Kernel {
    pub fn new(lambda: Complex64) -> Self {
        let e = crate::function::Exponential::new(PI * lambda.conj());
        let mut taylor = e.taylor().unwrap().clone();
        for c in &mut taylor.coeffs {
            *c *= PI;
        }
        Kernel { lambda, taylor }
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }
}

impl EntireFunction for Kernel {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        eval_kernel(self.lambda, z)
    }
    fn label(&self) -> String {
        format!("k[{},{}]", self.lambda.re, self.lambda.im)
    }
    fn as_kernel(&self) -> Option<(Complex64, Complex64)> {
        Some((self.lambda, Complex64::new(1.0, 0.0)))
    }
    fn taylor(&self) -> Option<&TaylorData> {
        Some(&self.taylor)
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.lambda.im == 0.0
    }
}

pub fn kernel(lambda: Complex64) -> EntireFnHandle {
    Arc::new(Kernel::new(lambda))
}

/// `(T_alpha f)(z) = e^{pi conj(alpha) z - (pi/2)|alpha|^2} f(z - alpha)`.
#[derive(Debug, Clone)]
pub struct TfShift {
    alpha: Complex64,
    inner: EntireFnHandle,
}

impl EntireFunction for TfShift {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        let a = self.alpha;
        ScaledComplex::exp(PI * a.conj() * z - 0.5 * PI * a.norm_sqr()) * self.inner.eval(z - a)
    }
    fn label(&self) -> String {
        format!("T[{},{}]({})", self.alpha.re, self.alpha.im, self.inner.label())
    }
}

pub fn tf_shift(alpha: Complex64, f: EntireFnHandle) -> EntireFnHandle {
    if alpha == Complex64::new(0.0, 0.0) {
        return f;
    }
    Arc::new(TfShift { alpha, inner: f })
}

/// `P^*(D/pi) h` where `P^*(z) = conj(P(conj z))`, returned through its first
/// `out_len` Taylor coefficients.
///
/// With the weight `(1/pi) e^{-pi|z|^2}`, the adjoint of multiplication by `z`
/// is `(1/pi) d/dz`; this is the operator satisfying `<P g, h> = <g, P^*(D/pi) h>`.
pub fn adjoint_poly_action(p: &[Complex64], h: &dyn EntireFunction, out_len: usize) -> Result<EntireFnHandle> {
    let t = h.taylor().ok_or(FockError::InsufficientTaylorData {
        needed: out_len + p.len(),
        available: 0,
    })?;
    let deg = p.len().saturating_sub(1);
    let needed = out_len + deg;
    if t.reliable_len < needed {
        return Err(FockError::InsufficientTaylorData {
            needed,
            available: t.reliable_len,
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    for (n, o) in out.iter_mut().enumerate() {
        for (k, pk) in p.iter().enumerate() {
            // a_{n+k} (n+k)!/n! / pi^k
            let falling: f64 = (n + 1..=n + k).map(|m| m as f64 / PI).product();
            *o += pk.conj() * t.coeffs[n + k] * falling;
        }
    }
    let label = format!("adj[{}]({})", p.len(), h.label());
    Ok(Arc::new(TaylorSeries::new(
        label,
        TaylorData {
            coeffs: out,
            reliable_len: out_len,
            r_check: t.r_check,
        },
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{constant, exponential, monomial};

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn constant_norm() {
        let one = constant(1.0);
        let v = inner_product(&*one, &*one, &q()).unwrap();
        assert!((v.re - 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn monomial_norms_follow_gamma_integral() {
        for n in 0..8 {
            let m = monomial(n);
            let v = inner_product(&*m, &*m, &q()).unwrap();
            let exact = log_monomial_norm_sq(n).exp();
            assert!((v.re - exact).abs() < 1e-12 * exact, "n = {n}");
        }
    }

    #[test]
    fn exponentials_pair_to_closed_form() {
        let l = Complex64::new(0.7, -0.4);
        let m = Complex64::new(-0.2, 1.1);
        let v = inner_product(&*exponential(l), &*exponential(m), &q()).unwrap();
        // series oracle sum (l conj m)^n / (n! pi^{n+1})
        let x = l * m.conj();
        let mut term = Complex64::new(1.0 / PI, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        for n in 0..80 {
            s += term;
            term = term * x / (PI * (n as f64 + 1.0));
        }
        assert!((v - s).norm() < 1e-12 * s.norm());
    }

    #[test]
    fn coefficient_path_examples() {
        let one = CoeffSeq::exact(vec![Complex64::new(1.0, 0.0)]);
        assert!((coeff_inner_product(&one, &one).unwrap().re - 1.0 / PI).abs() < 1e-15);
        let z = CoeffSeq::exact(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!((coeff_inner_product(&z, &z).unwrap().re - 1.0 / (PI * PI)).abs() < 1e-15);
        let e1 = exponential(Complex64::new(1.0, 0.0));
        let a = CoeffSeq::from_taylor(e1.taylor().unwrap(), 61);
        let v = coeff_inner_product(&a, &a).unwrap();
        let exact = (1.0 / PI).exp() / PI;
        assert!((v.re - exact).abs() < 1e-14 * exact);
    }

    #[test]
    fn short_truncated_series_is_rejected() {
        let e1 = exponential(Complex64::new(3.0, 0.0));
        let a = CoeffSeq::from_taylor(e1.taylor().unwrap(), 5);
        assert!(matches!(coeff_inner_product(&a, &a), Err(FockError::SeriesNotConverged { .. })));
    }

    #[test]
    fn kernel_values() {
        assert!((eval_kernel(Complex64::new(0.0, 0.0), Complex64::new(3.0, -2.0)).to_complex().re - PI).abs() < 1e-14);
        let v = eval_kernel(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        assert!((v.log_mag() - (PI.ln() + PI)).abs() < 1e-14);
        let k = kernel(Complex64::new(2.0, 3.0));
        let spec = QuadratureSpec {
            r_max: 16.0,
            n_radial: 640,
            ..q()
        };
        let v = inner_product(&*constant(1.0), &*k, &spec).unwrap();
        assert!((v - 1.0).norm() < 1e-10, "{v}");
    }

    #[test]
    fn shift_of_constant() {
        let s = tf_shift(Complex64::new(1.0, 0.0), constant(1.0));
        let z = Complex64::new(0.4, 0.9);
        let expect = (PI * z - PI / 2.0).exp();
        assert!((s.eval(z).to_complex() - expect).norm() < 1e-14 * expect.norm());
    }

    #[test]
    fn derivative_adjoint_of_z() {
        let e1 = exponential(Complex64::new(1.0, 0.0));
        let e2 = exponential(Complex64::new(2.0, 0.0));
        let ze1 = crate::function::product(vec![monomial(1), e1.clone()]);
        let lhs = inner_product(&*ze1, &*e2, &q()).unwrap();
        let adj = adjoint_poly_action(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], &*e2, 120).unwrap();
        let rhs = inner_product(&*e1, &*adj, &q()).unwrap();
        let exact = 2.0 * (2.0 / PI).exp() / (PI * PI);
        assert!((lhs.re - exact).abs() < 1e-12 * exact);
        assert!((rhs - lhs).norm() < 1e-10 * exact);
    }

    #[test]
    fn adjoint_needs_taylor_data() {
        let e2 = exponential(Complex64::new(2.0, 0.0));
        let err = adjoint_poly_action(&[Complex64::new(1.0, 0.0); 3], &*e2, 159).unwrap_err();
        assert!(matches!(err, FockError::InsufficientTaylorData { .. }));
    }
}
