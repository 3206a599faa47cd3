//! Overflow-free complex numbers.
//!
//! Fock-space functions routinely reach magnitudes like `exp(pi |z|^2 / 2)`,
//! which leave the `f64` range once `|z|` passes ~21. [`ScaledComplex`] keeps a
//! complex mantissa together with a separate binary exponent, so that products,
//! quotients and sums never overflow and conversions to and from ordinary
//! complex numbers are exact power-of-two rescalings.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Differences in binary exponent above which the smaller addend is dropped.
const ADD_CUTOFF: i64 = 1100;

/// `x * 2^k` without intermediate overflow for any representable result.
pub fn ldexp(x: f64, k: i64) -> f64 {
    if (-1022..=1023).contains(&k) {
        return x * pow2(k);
    }
    let mut x = x;
    let mut k = k;
    while k > 1000 {
        x *= f64::powi(2.0, 1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= f64::powi(2.0, -1000);
        k += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * f64::powi(2.0, k as i32)
}

/// `2^k` for `-1022 <= k <= 1023`, built from the bit pattern.
fn pow2(k: i64) -> f64 {
    f64::from_bits(((k + 1023) as u64) << 52)
}

fn ldexp_c(c: Complex64, k: i64) -> Complex64 {
    Complex64::new(ldexp(c.re, k), ldexp(c.im, k))
}

/// Complex value `mant * 2^exp2` with `1 <= max(|re mant|, |im mant|) < 2`
/// (or `mant == 0`).
#[derive(Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    mant: Complex64,
    exp2: i64,
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        mant: Complex64::new(0.0, 0.0),
        exp2: 0,
    };
    pub const ONE: ScaledComplex = ScaledComplex {
        mant: Complex64::new(1.0, 0.0),
        exp2: 0,
    };

    fn normalized(mant: Complex64, exp2: i64) -> Self {
        let m = mant.re.abs().max(mant.im.abs());
        if m == 0.0 || !m.is_finite() {
            if m == 0.0 {
                return Self::ZERO;
            }
            return ScaledComplex { mant, exp2 };
        }
        let e = frexp_exponent(m);
        ScaledComplex {
            mant: ldexp_c(mant, -e),
            exp2: exp2 + e,
        }
    }

    pub fn from_complex(c: Complex64) -> Self {
        Self::normalized(c, 0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// `exp(w)` for arbitrary complex `w`.
    pub fn exp(w: Complex64) -> Self {
        Self::from_log_phase(w.re, w.im)
    }

    /// The value with natural log-modulus `log_mag` and argument `phase`.
    pub fn from_log_phase(log_mag: f64, phase: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let k = (log_mag / std::f64::consts::LN_2).floor();
        let frac = log_mag - k * std::f64::consts::LN_2;
        let m = frac.exp();
        let (sin, cos) = phase.sin_cos();
        Self::normalized(Complex64::new(m * cos, m * sin), k as i64)
    }

    /// Converts back to an ordinary complex number (may overflow to infinity).
    pub fn to_complex(self) -> Complex64 {
        ldexp_c(self.mant, self.exp2)
    }

    /// Natural log of the modulus; `-inf` for zero.
    pub fn log_mag(self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.norm().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    /// Argument in `(-pi, pi]`.
    pub fn phase(self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let p = self.mant.arg();
        if p <= -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            p
        }
    }

    pub fn is_zero(self) -> bool {
        self.mant.re == 0.0 && self.mant.im == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.mant.re.is_finite() && self.mant.im.is_finite()
    }

    pub fn conj(self) -> Self {
        ScaledComplex {
            mant: self.mant.conj(),
            exp2: self.exp2,
        }
    }

    pub fn recip(self) -> Self {
        Self::normalized(self.mant.inv(), -self.exp2)
    }

    /// Modulus as a plain float (may overflow).
    pub fn abs(self) -> f64 {
        ldexp(self.mant.norm(), self.exp2)
    }

    /// Multiplies by `exp(x)` for real `x`.
    pub fn scale_exp(self, x: f64) -> Self {
        if self.is_zero() {
            return self;
        }
        if x == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let k = (x / std::f64::consts::LN_2).floor();
        let frac = x - k * std::f64::consts::LN_2;
        Self::normalized(self.mant * frac.exp(), self.exp2 + k as i64)
    }

    pub fn mul_complex(self, c: Complex64) -> Self {
        Self::normalized(self.mant * c, self.exp2)
    }

    pub fn powi(self, n: i32) -> Self {
        let mut acc = Self::ONE;
        let mut base = if n < 0 { self.recip() } else { self };
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    /// Principal logarithm `log_mag + i phase`.
    pub fn ln(self) -> Complex64 {
        Complex64::new(self.log_mag(), self.phase())
    }

    /// Mantissa and binary exponent (`value = mant * 2^exp2`).
    pub fn parts(self) -> (Complex64, i64) {
        (self.mant, self.exp2)
    }

    /// Rescales to a fixed binary exponent: returns `value * 2^-exp2`.
    pub fn to_complex_at(self, exp2: i64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        ldexp_c(self.mant, self.exp2 - exp2)
    }

    /// Binary exponent of the mantissa-normalized value (`i64::MIN` for zero).
    pub fn exponent(self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            self.exp2
        }
    }

    /// Relative distance `|a - b| / max(|a|, |b|)`, computed without overflow.
    pub fn rel_diff(self, other: Self) -> f64 {
        let e = self.exponent().max(other.exponent());
        if e == i64::MIN {
            return 0.0;
        }
        let a = self.to_complex_at(e);
        let b = other.to_complex_at(e);
        (a - b).norm() / a.norm().max(b.norm())
    }
}

fn frexp_exponent(m: f64) -> i64 {
    // exponent e with 1 <= m * 2^-e < 2
    let bits = m.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal
        let scaled = m * f64::powi(2.0, 64);
        return frexp_exponent(scaled) - 64;
    }
    raw - 1023
}

impl Default for ScaledComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScaledComplex(log_mag={}, phase={})", self.log_mag(), self.phase())
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(c: Complex64) -> Self {
        Self::from_complex(c)
    }
}

impl From<f64> for ScaledComplex {
    fn from(x: f64) -> Self {
        Self::from_real(x)
    }
}

impl Mul for ScaledComplex {
    type Output = ScaledComplex;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::normalized(self.mant * rhs.mant, self.exp2 + rhs.exp2)
    }
}

impl Div for ScaledComplex {
    type Output = ScaledComplex;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Add for ScaledComplex {
    type Output = ScaledComplex;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exp2 >= rhs.exp2 { (self, rhs) } else { (rhs, self) };
        let shift = small.exp2 - big.exp2;
        if shift < -ADD_CUTOFF {
            return big;
        }
        Self::normalized(big.mant + ldexp_c(small.mant, shift), big.exp2)
    }
}

impl Neg for ScaledComplex {
    type Output = ScaledComplex;
    fn neg(self) -> Self {
        ScaledComplex {
            mant: -self.mant,
            exp2: self.exp2,
        }
    }
}

impl Sub for ScaledComplex {
    type Output = ScaledComplex;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

/// Deterministic pairwise sum with a fixed split tree.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().fold(Complex64::new(0.0, 0.0), |a, &b| a + b);
    }
    let mid = values.len() / 2;
    let (lo, hi) = values.split_at(mid);
    if values.len() > 1 << 15 {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Deterministic pairwise sum of non-negative reals.
pub fn pairwise_sum_real(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_real(&values[..mid]) + pairwise_sum_real(&values[mid..])
}

/// Sums scaled values: aligns every term to the largest binary exponent,
/// then reduces pairwise.
pub fn scaled_sum(values: &[ScaledComplex]) -> ScaledComplex {
    let top = values.iter().map(|v| v.exponent()).max().unwrap_or(i64::MIN);
    if top == i64::MIN {
        return ScaledComplex::ZERO;
    }
    let aligned: Vec<Complex64> = values.iter().map(|v| v.to_complex_at(top)).collect();
    ScaledComplex::from_complex(pairwise_sum(&aligned)) * ScaledComplex::normalized(Complex64::new(1.0, 0.0), top)
}
