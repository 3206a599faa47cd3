//! Evaluatable entire functions.
//!
//! Every concrete function in the crate (monomials, exponentials, kernels,
//! the sigma function, the sector continuations, ...) implements
//! [`EntireFunction`] and is passed around as a shared [`EntireFnHandle`].

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::scaled::ScaledComplex;

/// Taylor data attached to a handle: `f(z) = sum a_n z^n` for `n < reliable_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorData {
    pub coeffs: Vec<Complex64>,
    pub reliable_len: usize,
    /// Radius on which series and direct evaluation are known to agree.
    pub r_check: f64,
}

impl TaylorData {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs[..self.reliable_len]
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }
}

pub trait EntireFunction: Send + Sync + fmt::Debug {
    fn eval(&self, z: Complex64) -> ScaledComplex;

    /// Human-readable identity, also used as a cache key component.
    fn label(&self) -> String;

    fn taylor(&self) -> Option<&TaylorData> {
        None
    }

    /// `true` when `f(conj z) = conj f(z)`.
    fn is_conjugation_symmetric(&self) -> bool {
        false
    }

    /// `Some((mu, c))` when `f = c k_mu`, so that `<h, f> = conj(c) h(mu)` exactly.
    fn as_kernel(&self) -> Option<(Complex64, Complex64)> {
        None
    }
}

pub type EntireFnHandle = Arc<dyn EntireFunction>;

/// Largest relative disagreement between direct and series evaluation on
/// `n_points` points of the circle `|z| = r_check` and the disc centre.
pub fn taylor_consistency(f: &dyn EntireFunction, n_points: usize) -> Option<f64> {
    let t = f.taylor()?;
    let mut worst: f64 = 0.0;
    for k in 0..=n_points {
        let z = if k == n_points {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(t.r_check, 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_points as f64)
        };
        let direct = f.eval(z);
        let series = ScaledComplex::from_complex(t.eval(z));
        worst = worst.max(direct.rel_diff(series));
    }
    Some(worst)
}

#[derive(Debug, Clone)]
pub struct Constant(pub Complex64);

impl EntireFunction for Constant {
    fn eval(&self, _z: Complex64) -> ScaledComplex {
        ScaledComplex::from_complex(self.0)
    }
    fn label(&self) -> String {
        format!("const({},{})", self.0.re, self.0.im)
    }
    fn as_kernel(&self) -> Option<(Complex64, Complex64)> {
        Some((Complex64::new(0.0, 0.0), self.0 / std::f64::consts::PI))
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.0.im == 0.0
    }
}

/// `z^n`.
#[derive(Debug, Clone)]
pub struct Monomial {
    degree: usize,
    taylor: TaylorData,
}

impl Monomial {
    pub fn new(degree: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = Complex64::new(1.0, 0.0);
        Monomial {
            degree,
            taylor: TaylorData {
                coeffs,
                reliable_len: degree + 1,
                r_check: 2.0,
            },
        }
    }
}

impl EntireFunction for Monomial {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        let r = z.norm_sqr();
        if self.degree <= 64 && (1e-8..=1e8).contains(&r) {
            return ScaledComplex::from_complex(z.powu(self.degree as u32));
        }
        ScaledComplex::from_complex(z).powi(self.degree as i32)
    }
    fn label(&self) -> String {
        format!("z^{}", self.degree)
    }
    fn taylor(&self) -> Option<&TaylorData> {
        Some(&self.taylor)
    }
    fn is_conjugation_symmetric(&self) -> bool {
        true
    }
}

/// Polynomial `sum c_k z^k`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    taylor: TaylorData,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let n = coeffs.len();
        Polynomial {
            taylor: TaylorData {
                coeffs,
                reliable_len: n,
                r_check: 2.0,
            },
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.taylor.coeffs
    }
}

impl EntireFunction for Polynomial {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        // Horner in scaled arithmetic so large |z| and high degree stay finite
        let zs = ScaledComplex::from_complex(z);
        self.taylor
            .coeffs
            .iter()
            .rev()
            .fold(ScaledComplex::ZERO, |acc, &a| acc * zs + ScaledComplex::from_complex(a))
    }
    fn label(&self) -> String {
        let parts: Vec<String> = self.taylor.coeffs.iter().map(|c| format!("{}{:+}i", c.re, c.im)).collect();
        format!("poly[{}]", parts.join(";"))
    }
    fn taylor(&self) -> Option<&TaylorData> {
        Some(&self.taylor)
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.taylor.coeffs.iter().all(|c| c.im == 0.0)
    }
}

/// Number of Taylor coefficients stored for exponentials.
const EXP_TAYLOR_LEN: usize = 160;

/// `e_lambda(z) = exp(lambda z)`.
#[derive(Debug, Clone)]
pub struct Exponential {
    lambda: Complex64,
    taylor: TaylorData,
}

impl Exponential {
    pub fn new(lambda: Complex64) -> Self {
        let mut coeffs = Vec::with_capacity(EXP_TAYLOR_LEN);
        let mut c = Complex64::new(1.0, 0.0);
        for n in 0..EXP_TAYLOR_LEN {
            coeffs.push(c);
            c = c * lambda / (n as f64 + 1.0);
        }
        // cancellation on the decaying side costs about e^{2|lambda z|} in relative accuracy
        let r_check = if lambda.norm() > 0.0 { (8.0 / lambda.norm()).min(12.0) } else { 12.0 };
        Exponential {
            lambda,
            taylor: TaylorData {
                coeffs,
                reliable_len: EXP_TAYLOR_LEN,
                r_check,
            },
        }
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }
}

impl EntireFunction for Exponential {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        ScaledComplex::exp(self.lambda * z)
    }
    fn label(&self) -> String {
        format!("e[{},{}]", self.lambda.re, self.lambda.im)
    }
    fn as_kernel(&self) -> Option<(Complex64, Complex64)> {
        let pi = std::f64::consts::PI;
        Some((self.lambda.conj() / pi, Complex64::new(1.0 / pi, 0.0)))
    }
    fn taylor(&self) -> Option<&TaylorData> {
        Some(&self.taylor)
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.lambda.im == 0.0
    }
}

/// Function given only through its Taylor series.
#[derive(Debug, Clone)]
pub struct TaylorSeries {
    name: String,
    taylor: TaylorData,
    /// Range of `ln |a_k|` over the nonzero reliable coefficients.
    log_coeff_range: (f64, f64),
}

impl TaylorSeries {
    pub fn new(name: impl Into<String>, taylor: TaylorData) -> Self {
        let logs = taylor.coeffs[..taylor.reliable_len]
            .iter()
            .filter(|a| a.norm() > 0.0)
            .map(|a| a.norm().ln());
        let log_coeff_range = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l), hi.max(l)));
        TaylorSeries {
            name: name.into(),
            taylor,
            log_coeff_range,
        }
    }
}

impl EntireFunction for TaylorSeries {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        let coeffs = &self.taylor.coeffs[..self.taylor.reliable_len];
        let (lo, hi) = self.log_coeff_range;
        let reach = coeffs.len() as f64 * z.norm().ln().max(0.0);
        if hi + reach < 600.0 && lo > -600.0 {
            // every partial Horner sum stays inside the f64 range
            let v = coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a);
            return ScaledComplex::from_complex(v);
        }
        let zs = ScaledComplex::from_complex(z);
        coeffs
            .iter()
            .rev()
            .fold(ScaledComplex::ZERO, |acc, &a| acc * zs + ScaledComplex::from_complex(a))
    }
    fn label(&self) -> String {
        self.name.clone()
    }
    fn taylor(&self) -> Option<&TaylorData> {
        Some(&self.taylor)
    }
}

/// Pointwise product of several functions.
#[derive(Debug, Clone)]
pub struct Product(pub Vec<EntireFnHandle>);

impl EntireFunction for Product {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        self.0.iter().fold(ScaledComplex::ONE, |acc, f| acc * f.eval(z))
    }
    fn label(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|f| f.label()).collect();
        format!("({})", parts.join("*"))
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.0.iter().all(|f| f.is_conjugation_symmetric())
    }
}

/// Pointwise sum.
#[derive(Debug, Clone)]
pub struct Sum(pub Vec<EntireFnHandle>);

impl EntireFunction for Sum {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        self.0.iter().fold(ScaledComplex::ZERO, |acc, f| acc + f.eval(z))
    }
    fn label(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|f| f.label()).collect();
        format!("({})", parts.join("+"))
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.0.iter().all(|f| f.is_conjugation_symmetric())
    }
}

/// `c * f`.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub factor: Complex64,
    pub inner: EntireFnHandle,
}

impl EntireFunction for Scaled {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        self.inner.eval(z).mul_complex(self.factor)
    }
    fn label(&self) -> String {
        format!("{}*{}", crate::function::fmt_complex(self.factor), self.inner.label())
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.factor.im == 0.0 && self.inner.is_conjugation_symmetric()
    }
    fn as_kernel(&self) -> Option<(Complex64, Complex64)> {
        self.inner.as_kernel().map(|(mu, c)| (mu, c * self.factor))
    }
}

/// Adapter turning a closure into an entire function.
pub struct FnEntire<F> {
    name: String,
    f: F,
    symmetric: bool,
}

impl<F> FnEntire<F>
where
    F: Fn(Complex64) -> ScaledComplex + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnEntire {
            name: name.into(),
            f,
            symmetric: false,
        }
    }

    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }
}

impl<F> fmt::Debug for FnEntire<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnEntire({})", self.name)
    }
}

impl<F> EntireFunction for FnEntire<F>
where
    F: Fn(Complex64) -> ScaledComplex + Send + Sync,
{
    fn eval(&self, z: Complex64) -> ScaledComplex {
        (self.f)(z)
    }
    fn label(&self) -> String {
        self.name.clone()
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.symmetric
    }
}

pub(crate) fn fmt_complex(c: Complex64) -> String {
    format!("({},{})", c.re, c.im)
}

pub fn constant(c: f64) -> EntireFnHandle {
    Arc::new(Constant(Complex64::new(c, 0.0)))
}

pub fn monomial(n: usize) -> EntireFnHandle {
    Arc::new(Monomial::new(n))
}

pub fn exponential(lambda: Complex64) -> EntireFnHandle {
    Arc::new(Exponential::new(lambda))
}

pub fn polynomial(coeffs: Vec<Complex64>) -> EntireFnHandle {
    Arc::new(Polynomial::new(coeffs))
}

pub fn product(fs: Vec<EntireFnHandle>) -> EntireFnHandle {
    Arc::new(Product(fs))
}

pub fn scaled(factor: Complex64, inner: EntireFnHandle) -> EntireFnHandle {
    Arc::new(Scaled { factor, inner })
}
