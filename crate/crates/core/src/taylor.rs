//! Taylor coefficients from values on a circle.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{FockError, Result};
use crate::fock::CoeffSeq;
use crate::function::EntireFunction;
use crate::scaled::ScaledComplex;

/// Coefficients below this fraction of the largest `|a_k| r^k` are noise.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Coefficients of `f` on `|z| = r` with their resolution status.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleCoefficients {
    pub radius: f64,
    pub coeffs: Vec<Complex64>,
    /// `|a_n| r^n` relative to the largest such term.
    pub relative_size: Vec<f64>,
}

impl CircleCoefficients {
    pub fn is_resolved(&self, n: usize) -> bool {
        self.relative_size[n] >= NOISE_FLOOR
    }
}

/// Cauchy coefficient integrals on `|z| = r` by FFT, with
/// `n_angular = max(4(N+1), 256)` rounded up to a power of two.
pub fn circle_coefficients(f: &dyn EntireFunction, n: usize, r: f64) -> CircleCoefficients {
    let m = (4 * (n + 1)).max(256).next_power_of_two();
    let values: Vec<ScaledComplex> = (0..m)
        .map(|k| f.eval(Complex64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / m as f64)))
        .collect();
    let top = values.iter().map(|v| v.exponent()).max().unwrap_or(i64::MIN);
    let mut buf: Vec<Complex64> = if top == i64::MIN {
        vec![Complex64::new(0.0, 0.0); m]
    } else {
        values.iter().map(|v| v.to_complex_at(top)).collect()
    };
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = if top == i64::MIN { 0.0 } else { crate::scaled::ldexp(1.0, top) / m as f64 };
    let terms: Vec<Complex64> = buf[..=n].iter().map(|c| c * scale).collect();
    let biggest = buf.iter().map(|c| c.norm()).fold(0.0, f64::max) * scale;
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut relative_size = Vec::with_capacity(n + 1);
    for (k, t) in terms.iter().enumerate() {
        coeffs.push(t / r.powi(k as i32));
        relative_size.push(if biggest > 0.0 { t.norm() / biggest } else { 0.0 });
    }
    CircleCoefficients {
        radius: r,
        coeffs,
        relative_size,
    }
}

/// Taylor coefficients `a_0..a_N` of `f` from its values on `|z| = r`.
///
/// Fails with `RadiusTooSmall` when `a_N` is lost in the noise floor at `r`
/// but resolved on a larger circle.
pub fn taylor_extract(f: &dyn EntireFunction, n: usize, r: f64) -> Result<CoeffSeq> {
    let c = circle_coefficients(f, n, r);
    if !c.is_resolved(n) {
        for bigger in [2.0 * r, 4.0 * r] {
            if circle_coefficients(f, n, bigger).is_resolved(n) {
                return Err(FockError::RadiusTooSmall { index: n, radius: r });
            }
        }
    }
    Ok(CoeffSeq::truncated(c.coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{exponential, monomial};
    use crate::sigma::Sigma0;

    #[test]
    fn exponential_series() {
        let e2 = exponential(Complex64::new(2.0, 0.0));
        let a = taylor_extract(&*e2, 5, 1.0).unwrap();
        let mut fact = 1.0;
        for (n, c) in a.coeffs.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let exact = 2f64.powi(n as i32) / fact;
            assert!((c.re - exact).abs() < 1e-13 * exact && c.im.abs() < 1e-13 * exact);
        }
    }

    #[test]
    fn sigma0_starts_at_one() {
        let a = taylor_extract(&Sigma0, 8, 0.5).unwrap();
        assert!((a.coeffs[0] - 1.0).norm() < 1e-14);
        // sigma0 is even with vanishing z^2 coefficient
        assert!(a.coeffs[1].norm() < 1e-14 && a.coeffs[2].norm() < 1e-14);
    }

    #[test]
    fn small_radius_is_reported() {
        let e1 = exponential(Complex64::new(1.0, 0.0));
        let err = taylor_extract(&*e1, 12, 0.3).unwrap_err();
        assert!(matches!(err, FockError::RadiusTooSmall { index: 12, .. }));
        // a monomial of lower degree has genuinely zero top coefficients
        assert!(taylor_extract(&*monomial(3), 10, 0.05).is_ok());
    }
}
